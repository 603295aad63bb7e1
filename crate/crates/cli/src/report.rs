//! Report structures and their human-readable rendering. The machine form is
//! the JSON serialization of [`Report`]; see `docs/results-schema.md`.

use std::fmt::Write;

use kinship_core::evidence::{CountPrior, CountQuantity, ItemKind};
use kinship_core::Lr;
use serde::Serialize;

use crate::scenario::{AxisSpec, Scenario};

pub const SCHEMA: &str = "kinship-lr/report/1";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Warning {
    pub code: &'static str,
    pub message: String,
}

/// Warnings in first-raised order, each at most once.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Warnings(Vec<Warning>);

impl Warnings {
    pub fn push(&mut self, code: &'static str, message: impl Into<String>) {
        let w = Warning {
            code,
            message: message.into(),
        };
        if !self.0.contains(&w) {
            self.0.push(w);
        }
    }

    pub fn extend(&mut self, other: &Warnings) {
        for w in &other.0 {
            self.push(w.code, w.message.clone());
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Warning> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, code: &str) -> bool {
        self.0.iter().any(|w| w.code == code)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesesReport {
    pub null_label: String,
    pub alt_label: String,
    pub prior_odds: f64,
    pub prior_odds_default: bool,
    pub conditionally_independent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ItemReport {
    pub id: String,
    pub kind: ItemKind,
    pub provenance: String,
    /// P(E | H1) / P(E | H0).
    pub lr: Lr,
    /// P(E | H0) / P(E | H1).
    pub inverse_lr: Lr,
    pub likelihood_alt: Option<f64>,
    pub likelihood_null: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverallReport {
    pub lr: Lr,
    pub inverse_lr: Lr,
    pub posterior_odds: Lr,
    pub posterior_prob_alt: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectionReport {
    pub quantity: CountQuantity,
    pub trials: CountPrior,
    pub probability_source: String,
    /// Per-trial probability, reported unadjusted.
    pub unadjusted: f64,
    /// Probability that at least one of the trials shows the event.
    pub adjusted: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NamedLr {
    pub id: String,
    pub lr: Lr,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetworkReport {
    pub model: String,
    pub hypothesis: String,
    pub null_state: String,
    pub alt_state: String,
    pub used_as_evidence: bool,
    pub items: Vec<NamedLr>,
    /// Product of the item LRs.
    pub product: Lr,
    /// LR with all items observed at once.
    pub joint: Lr,
    pub relative_difference: Option<f64>,
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub items: Vec<ItemReport>,
    pub overall: OverallReport,
    pub selection: Option<SelectionReport>,
    pub network: Option<NetworkReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PedigreeRow {
    pub label: String,
    pub prior: f64,
    pub likelihood: f64,
    pub posterior: Option<f64>,
    pub argmax: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PedigreeReport {
    pub mutation_rate: f64,
    pub markers: Vec<String>,
    /// Sorted by descending posterior; ties keep scenario order.
    pub candidates: Vec<PedigreeRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxisValue {
    pub path: String,
    pub value: toml::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRowReport {
    pub indices: Vec<usize>,
    pub point: Vec<AxisValue>,
    pub items: Vec<NamedLr>,
    pub overall: OverallReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub axes: Vec<AxisSpec>,
    pub rows: Vec<SweepRowReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub scenario_file: String,
    pub scenario: Scenario,
    pub hypotheses: HypothesesReport,
    pub evaluation: Option<Evaluation>,
    pub pedigrees: Option<PedigreeReport>,
    pub sweep: Option<SweepReport>,
    pub warnings: Warnings,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Six significant digits, switching to exponent form for very small or large values.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn lr_text(lr: Lr) -> String {
    match lr {
        Lr::Finite(x) => num(x),
        other => other.to_string(),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "undefined".to_string(), num)
}

pub fn render_human(r: &Report, timestamp: Option<&str>) -> String {
    let mut o = String::new();
    let h = &r.hypotheses;
    if r.scenario.name.is_empty() {
        writeln!(o, "kinship-lr {}: {}", r.command, r.scenario_file).unwrap();
    } else {
        writeln!(
            o,
            "kinship-lr {}: {} ({})",
            r.command, r.scenario.name, r.scenario_file
        )
        .unwrap();
    }
    if let Some(ts) = timestamp {
        writeln!(o, "generated {ts}").unwrap();
    }
    writeln!(o, "H0: {}", h.null_label).unwrap();
    writeln!(o, "H1: {}", h.alt_label).unwrap();
    writeln!(
        o,
        "prior odds H1:H0 = {}{}",
        num(h.prior_odds),
        if h.prior_odds_default {
            " (default)"
        } else {
            ""
        }
    )
    .unwrap();
    let lr_label = format!("LR = P(E | {}) / P(E | {})", h.alt_label, h.null_label);
    let inv_label = format!("1/LR = P(E | {}) / P(E | {})", h.null_label, h.alt_label);

    if let Some(ev) = &r.evaluation {
        writeln!(o).unwrap();
        writeln!(o, "evidence items").unwrap();
        if ev.items.is_empty() {
            writeln!(o, "  (none)").unwrap();
        }
        for it in &ev.items {
            let kind = serde_json::to_value(it.kind).unwrap();
            writeln!(
                o,
                "  {:<14} {:<12} LR {:<14} 1/LR {}",
                it.id,
                kind.as_str().unwrap_or(""),
                lr_text(it.lr),
                lr_text(it.inverse_lr)
            )
            .unwrap();
        }
        writeln!(o).unwrap();
        writeln!(o, "overall").unwrap();
        write_overall(&mut o, &ev.overall, &lr_label, &inv_label, h);
        if let Some(s) = &ev.selection {
            writeln!(o).unwrap();
            writeln!(o, "selection effect ({})", s.probability_source).unwrap();
            writeln!(o, "  per-trial probability      {}", num(s.unadjusted)).unwrap();
            writeln!(o, "  at least one of the trials {}", num(s.adjusted)).unwrap();
        }
        if let Some(n) = &ev.network {
            writeln!(o).unwrap();
            writeln!(
                o,
                "network {} ({} = {} vs {})",
                n.model, n.hypothesis, n.alt_state, n.null_state
            )
            .unwrap();
            for it in &n.items {
                writeln!(o, "  {:<14} LR {}", it.id, lr_text(it.lr)).unwrap();
            }
            writeln!(o, "  product of item LRs  {}", lr_text(n.product)).unwrap();
            writeln!(o, "  joint network LR     {}", lr_text(n.joint)).unwrap();
            writeln!(
                o,
                "  consistent           {}",
                if n.consistent { "yes" } else { "NO" }
            )
            .unwrap();
        }
    }

    if let Some(p) = &r.pedigrees {
        writeln!(o).unwrap();
        writeln!(
            o,
            "pedigree posterior (mutation rate {}, markers {})",
            num(p.mutation_rate),
            p.markers.join(", ")
        )
        .unwrap();
        for row in &p.candidates {
            writeln!(
                o,
                "  {} {:<24} prior {:<10} likelihood {:<14} posterior {}",
                if row.argmax { "*" } else { " " },
                row.label,
                num(row.prior),
                num(row.likelihood),
                opt(row.posterior)
            )
            .unwrap();
        }
    }

    if let Some(s) = &r.sweep {
        writeln!(o).unwrap();
        let header: Vec<&str> = s.axes.iter().map(|a| a.path.as_str()).collect();
        writeln!(o, "sweep over {}", header.join(", ")).unwrap();
        for row in &s.rows {
            let point: Vec<String> = row.point.iter().map(|p| p.value.to_string()).collect();
            writeln!(
                o,
                "  {:<30} LR {:<14} 1/LR {:<14} P(H1|E) {}",
                point.join(", "),
                lr_text(row.overall.lr),
                lr_text(row.overall.inverse_lr),
                opt(row.overall.posterior_prob_alt)
            )
            .unwrap();
        }
    }

    if !r.warnings.is_empty() {
        writeln!(o).unwrap();
        writeln!(o, "warnings").unwrap();
        for w in r.warnings.iter() {
            writeln!(o, "  {}: {}", w.code, w.message).unwrap();
        }
    }
    o
}

fn write_overall(
    o: &mut String,
    ov: &OverallReport,
    lr_label: &str,
    inv_label: &str,
    h: &HypothesesReport,
) {
    writeln!(o, "  {lr_label} = {}", lr_text(ov.lr)).unwrap();
    writeln!(o, "  {inv_label} = {}", lr_text(ov.inverse_lr)).unwrap();
    writeln!(
        o,
        "  posterior odds {}:{} = {}",
        h.alt_label,
        h.null_label,
        lr_text(ov.posterior_odds)
    )
    .unwrap();
    writeln!(
        o,
        "  P({} | E) = {}",
        h.alt_label,
        opt(ov.posterior_prob_alt)
    )
    .unwrap();
}
