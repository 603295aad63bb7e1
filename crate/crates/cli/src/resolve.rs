//! Turns a parsed [`Scenario`] into loaded, validated inputs, collecting every
//! problem across the scenario and the files it references.

use std::collections::BTreeSet;
use std::fs;

use kinship_core::evidence::{EvidenceItem, HypothesisPair, ItemKind};
use kinship_core::factor::Evidence;
use kinship_core::onomasticon::{
    validate_family, validate_table, FamilyConfiguration, FamilyTables, IdentificationAssumption,
    NameModel, NameTable, NamingConstraints, OnomasticonError,
};
use kinship_core::oobn;
use kinship_core::pedigree::{
    validate_pedigree, DnaObservation, HaplotypePopulation, MarkerData, MarkerKind, MutationModel,
    Pedigree, Sex,
};
use kinship_core::{Diagnostic, Location, Lr, Network, VarId};

use crate::problem::{locate, CliError, Problem, ProblemKind, Problems};
use crate::report::Warnings;
use crate::scenario::{Loaded, Scenario, TableSpec};

pub struct ResolvedOnomasticon {
    pub id: String,
    pub config: FamilyConfiguration,
    pub assumptions: Vec<IdentificationAssumption>,
    pub tables: FamilyTables,
    pub constraints: NamingConstraints,
}

pub struct ResolvedDna {
    pub id: String,
    pub markers: Vec<MarkerData>,
    pub mutation: MutationModel,
    pub null: Option<Pedigree>,
    pub alt: Option<Pedigree>,
}

pub struct ResolvedNetwork {
    pub path: String,
    pub net: Network,
    pub hypothesis: VarId,
    pub null: usize,
    pub alt: usize,
    pub items: Vec<(String, ItemKind, Evidence)>,
    pub use_as_evidence: bool,
}

pub struct Resolved {
    pub hypotheses: HypothesisPair,
    pub prior_odds_default: bool,
    pub independent: bool,
    pub onomasticon: Option<ResolvedOnomasticon>,
    pub dna: Option<ResolvedDna>,
    pub direct: Vec<EvidenceItem>,
    pub network: Option<ResolvedNetwork>,
    pub candidates: Vec<(Pedigree, f64)>,
    pub warnings: Warnings,
}

struct Ctx<'a> {
    loaded: &'a Loaded,
    problems: Problems,
    warnings: Warnings,
}

impl Ctx<'_> {
    fn file(&self) -> &str {
        &self.loaded.display
    }

    /// An error located at the first mention of `needle` in the scenario.
    fn error(&mut self, needle: &str, code: &'static str, msg: impl Into<String>) {
        let loc = locate(&self.loaded.source, needle);
        let file = self.loaded.display.clone();
        self.problems.push(Problem::error(
            &file,
            ProblemKind::Validation,
            loc,
            code,
            msg,
        ));
    }

    fn path_display(&self, rel: &str) -> String {
        self.loaded.dir().join(rel).display().to_string()
    }

    /// Reads a file named in the scenario, recording an I/O problem on failure.
    fn read(&mut self, rel: &str) -> Option<String> {
        let full = self.loaded.dir().join(rel);
        match fs::read_to_string(&full) {
            Ok(s) => Some(s),
            Err(e) => {
                let loc = locate(&self.loaded.source, rel);
                let file = self.loaded.display.clone();
                self.problems.push(Problem::error(
                    &file,
                    ProblemKind::Io,
                    loc,
                    "E_IO",
                    format!("cannot read `{}`: {e}", full.display()),
                ));
                None
            }
        }
    }
}

/// Bundled name tables by name.
pub fn bundled_table(name: &str) -> Option<NameTable> {
    match name {
        "ilan_nonossuary" => Some(NameTable::ilan_nonossuary()),
        "ilan_ossuary" => Some(NameTable::ilan_ossuary()),
        "synthetic_male" => Some(NameTable::synthetic_male()),
        _ => None,
    }
}

pub fn resolve(loaded: &Loaded) -> Result<(Resolved, Vec<Problem>), CliError> {
    resolve_scenario(loaded, &loaded.scenario)
}

/// Resolves `scenario`, which may differ from `loaded.scenario` (sweep points),
/// against the files next to the loaded scenario.
pub fn resolve_scenario(
    loaded: &Loaded,
    scenario: &Scenario,
) -> Result<(Resolved, Vec<Problem>), CliError> {
    let mut cx = Ctx {
        loaded,
        problems: Problems::default(),
        warnings: Warnings::default(),
    };
    let hs = &scenario.hypotheses;
    let prior_odds = hs.prior_odds.unwrap_or(1.0);
    let hypotheses = match HypothesisPair::new(&hs.null_label, &hs.alt_label, prior_odds) {
        Ok(h) => h,
        Err(e) => {
            cx.error("prior_odds", "E_PRIOR_ODDS", e.to_string());
            HypothesisPair::default()
        }
    };
    if hs.null_label == hs.alt_label {
        cx.error(
            "null_label",
            "E_HYPOTHESES",
            "null and alternative hypotheses have the same label",
        );
    }
    if hs.prior_odds.is_none() {
        cx.warnings.push(
            "W_DEFAULT_PRIOR_ODDS",
            "prior odds are not given; the default of 1 is a placeholder, not an estimate",
        );
    }

    let onomasticon = scenario.onomasticon.as_ref().and_then(|spec| {
        let tables = FamilyTables {
            female: spec
                .tables
                .female
                .as_ref()
                .and_then(|t| name_model(&mut cx, t, "female")),
            male: spec
                .tables
                .male
                .as_ref()
                .and_then(|t| name_model(&mut cx, t, "male")),
        };
        let config = FamilyConfiguration {
            members: spec.members.clone(),
            sibling_groups: spec.sibling_groups.clone(),
        };
        let mut ok = true;
        for d in validate_family(&config) {
            ok &= !d.is_error();
            relocate(&mut cx, d, &config);
        }
        for (sex, present, missing_key) in [
            (Sex::F, spec.tables.female.is_some(), "female"),
            (Sex::M, spec.tables.male.is_some(), "male"),
        ] {
            if let Some(m) = config.members.iter().find(|m| m.sex == sex) {
                if !present {
                    ok = false;
                    cx.error(
                        &format!("\"{}\"", m.id),
                        "E_MISSING_TABLE",
                        format!(
                            "member `{}` is {sex} but no {missing_key} name table is given",
                            m.id
                        ),
                    );
                }
            }
        }
        let mut seen = BTreeSet::new();
        for a in &spec.assumptions {
            let needle = format!("\"{}\"", a.id);
            if !(0.0..=1.0).contains(&a.weight) {
                ok = false;
                cx.error(
                    &needle,
                    "E_ASSUMPTION_WEIGHT",
                    format!("weight of `{}` is {}, outside [0, 1]", a.id, a.weight),
                );
            }
            if config.get(&a.member).is_none() {
                ok = false;
                cx.error(
                    &needle,
                    "E_UNKNOWN_MEMBER",
                    format!("assumption `{}` names unknown member `{}`", a.id, a.member),
                );
            }
            if !seen.insert(a.member.as_str()) {
                ok = false;
                cx.error(
                    &needle,
                    "E_ASSUMPTION_DUPLICATE",
                    format!("member `{}` has more than one assumption", a.member),
                );
            }
        }
        if !(spec.ancestor_boost.is_finite() && spec.ancestor_boost >= 0.0) {
            ok = false;
            cx.error(
                "ancestor_boost",
                "E_PARAMETER",
                "ancestor_boost must be finite and nonnegative",
            );
        }
        ok.then(|| ResolvedOnomasticon {
            id: spec.id.clone(),
            config,
            assumptions: spec.assumptions.clone(),
            tables,
            constraints: NamingConstraints {
                sibling_distinct: spec.sibling_distinct,
                ancestor_boost: spec.ancestor_boost,
            },
        })
    });

    let candidates: Vec<(Pedigree, f64)> = scenario
        .pedigrees
        .iter()
        .flat_map(|p| &p.candidates)
        .filter_map(|c| {
            if !(c.prior.is_finite() && c.prior >= 0.0) {
                cx.error(
                    &c.path,
                    "E_PARAMETER",
                    format!("prior of candidate `{}` must be nonnegative", c.label),
                );
            }
            load_pedigree(&mut cx, &c.path, &c.label).map(|p| (p, c.prior))
        })
        .collect();
    if let Some(p) = &scenario.pedigrees {
        if p.candidates.is_empty() {
            cx.error("[pedigrees]", "E_PEDIGREES", "no candidate pedigrees");
        } else if p.candidates.iter().all(|c| c.prior == 0.0) {
            cx.error(
                "[pedigrees]",
                "E_PARAMETER",
                "candidate priors are all zero",
            );
        }
    }

    let dna = scenario.dna.as_ref().and_then(|spec| {
        let mutation = match spec.mutation_rate {
            None => {
                cx.warnings.push(
                    "W_DEFAULT_MUTATION_RATE",
                    format!(
                        "mutation rate not given; using {}",
                        MutationModel::DEFAULT_RATE
                    ),
                );
                Some(MutationModel::default())
            }
            Some(r) => match MutationModel::new(r) {
                Ok(m) => Some(m),
                Err(e) => {
                    cx.error("mutation_rate", "E_MUTATION_RATE", e.to_string());
                    None
                }
            },
        };
        let null = spec
            .null_pedigree
            .as_ref()
            .and_then(|p| load_pedigree(&mut cx, p, "null"));
        let alt = spec
            .alt_pedigree
            .as_ref()
            .and_then(|p| load_pedigree(&mut cx, p, "alternative"));
        if spec.null_pedigree.is_some() != spec.alt_pedigree.is_some() {
            cx.error(
                "[dna]",
                "E_PEDIGREES",
                "give both null_pedigree and alt_pedigree, or neither",
            );
        }
        let mut markers = Vec::new();
        let mut ok = mutation.is_some();
        let mut pedigrees: Vec<&Pedigree> = null.iter().chain(alt.iter()).collect();
        pedigrees.extend(candidates.iter().map(|(p, _)| p));
        for m in &spec.markers {
            let kind: MarkerKind = match m.marker.parse() {
                Ok(k) => k,
                Err(e) => {
                    ok = false;
                    cx.error(&m.marker, "E_MARKER", e.to_string());
                    continue;
                }
            };
            let pop =
                match HaplotypePopulation::new(kind, m.haplotypes.clone(), m.frequencies.clone()) {
                    Ok(p) => p,
                    Err(e) => {
                        ok = false;
                        cx.error("frequencies", "E_POPULATION", e.to_string());
                        continue;
                    }
                };
            for (id, h) in &m.readings {
                if pop.index(h).is_none() {
                    ok = false;
                    cx.error(
                        h,
                        "E_OBSERVATION",
                        format!("reading `{id} = {h}`: no such {kind} haplotype"),
                    );
                }
                for p in &pedigrees {
                    match p.get(id) {
                        None => {
                            ok = false;
                            cx.error(
                                id,
                                "E_OBSERVATION",
                                format!("`{id}` is not in pedigree `{}`", p.label),
                            );
                        }
                        Some(ind) if !kind.includes(ind.sex) => {
                            ok = false;
                            cx.error(
                                id,
                                "E_OBSERVATION",
                                format!("Y-chromosome reading on female `{id}` in `{}`", p.label),
                            );
                        }
                        Some(_) => {}
                    }
                }
            }
            let observation = DnaObservation {
                marker: kind,
                readings: m.readings.clone(),
            };
            markers.push(MarkerData {
                population: pop,
                observation,
            });
        }
        if markers.is_empty() {
            ok = false;
            cx.error("[dna]", "E_MARKER", "no markers are given");
        }
        (ok && null.is_some() == spec.null_pedigree.is_some()
            && alt.is_some() == spec.alt_pedigree.is_some())
        .then(|| ResolvedDna {
            id: spec.id.clone(),
            markers,
            mutation: mutation.unwrap_or_default(),
            null,
            alt,
        })
    });
    if scenario.pedigrees.is_some() && scenario.dna.is_none() {
        cx.error(
            "[pedigrees]",
            "E_PEDIGREES",
            "pedigree candidates need a [dna] section with markers",
        );
    }

    let mut direct = Vec::new();
    for d in &scenario.direct {
        if d.lr.is_nan() || d.lr < 0.0 {
            cx.error(
                &format!("\"{}\"", d.id),
                "E_PARAMETER",
                format!("LR of item `{}` must be nonnegative", d.id),
            );
            continue;
        }
        let provenance = d
            .provenance
            .clone()
            .unwrap_or_else(|| format!("direct `{}`", d.id));
        direct.push(EvidenceItem::new(
            &d.id,
            d.kind,
            Lr::from_value(d.lr),
            &provenance,
        ));
    }

    let network = scenario.network.as_ref().and_then(|spec| {
        let src = cx.read(&spec.path)?;
        let file = cx.path_display(&spec.path);
        let doc = match oobn::parse(&src) {
            Ok(doc) => doc,
            Err(diags) => {
                cx.problems
                    .extend_diagnostics(&file, ProblemKind::Parse, diags);
                return None;
            }
        };
        if cx
            .problems
            .extend_diagnostics(&file, ProblemKind::Validation, oobn::validate(&doc))
        {
            return None;
        }
        let net = match oobn::flatten(&doc) {
            Ok(n) => n,
            Err(e) => {
                cx.problems.push(Problem::error(
                    &file,
                    ProblemKind::Validation,
                    Location::new(1, 1),
                    "E_FLATTEN",
                    e.to_string(),
                ));
                return None;
            }
        };
        let Some(hyp) = net.var_id(&spec.hypothesis) else {
            cx.error(
                &spec.hypothesis,
                "E_NETWORK_REFERENCE",
                format!("network has no variable `{}`", spec.hypothesis),
            );
            return None;
        };
        let state = |label: &str| net.variable(hyp).state_index(label);
        let (Some(null), Some(alt)) = (state(&spec.null_state), state(&spec.alt_state)) else {
            cx.error(
                "null_state",
                "E_NETWORK_REFERENCE",
                format!(
                    "`{}` lacks the named null or alternative state",
                    spec.hypothesis
                ),
            );
            return None;
        };
        if null == alt {
            cx.error(
                "null_state",
                "E_HYPOTHESES",
                "null and alternative states coincide",
            );
            return None;
        }
        let mut items = Vec::new();
        for it in &spec.items {
            match net.evidence_by_name(it.evidence.iter().map(|(k, v)| (k.as_str(), v.as_str()))) {
                Ok(e) if e.contains(hyp) => {
                    cx.error(
                        &format!("\"{}\"", it.id),
                        "E_NETWORK_REFERENCE",
                        format!("item `{}` observes the hypothesis node", it.id),
                    );
                }
                Ok(e) => items.push((it.id.clone(), it.kind, e)),
                Err(e) => cx.error(
                    &format!("\"{}\"", it.id),
                    "E_NETWORK_REFERENCE",
                    format!("item `{}`: {e}", it.id),
                ),
            }
        }
        (items.len() == spec.items.len()).then(|| ResolvedNetwork {
            path: spec.path.clone(),
            net,
            hypothesis: hyp,
            null,
            alt,
            items,
            use_as_evidence: spec.use_as_evidence,
        })
    });

    let Ctx {
        problems, warnings, ..
    } = cx;
    problems.into_result(Resolved {
        hypotheses,
        prior_odds_default: hs.prior_odds.is_none(),
        independent: hs.conditionally_independent,
        onomasticon,
        dna,
        direct,
        network,
        candidates,
        warnings,
    })
}

/// Family diagnostics carry no location; point them at the member they name.
fn relocate(cx: &mut Ctx, d: Diagnostic, config: &FamilyConfiguration) {
    let needle = config
        .members
        .iter()
        .map(|m| m.id.as_str())
        .find(|id| !id.is_empty() && d.message.contains(&format!("`{id}`")))
        .map(|id| format!("\"{id}\""))
        .unwrap_or_else(|| "members".into());
    let loc = locate(&cx.loaded.source, &needle);
    let file = cx.file().to_string();
    cx.problems.push(Problem::new(
        &file,
        ProblemKind::Validation,
        Diagnostic { location: loc, ..d },
    ));
}

fn load_table(
    cx: &mut Ctx,
    source: Option<&str>,
    path: Option<&str>,
    key: &str,
) -> Option<(NameTable, String)> {
    match (source, path) {
        (Some(name), None) => {
            match bundled_table(name) {
                Some(t) => Some((t, format!("<bundled {name}>"))),
                None => {
                    cx.error(name, "E_UNKNOWN_TABLE", format!("no bundled table `{name}` (ilan_nonossuary, ilan_ossuary, synthetic_male)"));
                    None
                }
            }
        }
        (None, Some(rel)) => {
            let text = cx.read(rel)?;
            let file = cx.path_display(rel);
            match NameTable::from_csv(text.as_bytes()) {
                Ok(t) => Some((t, file)),
                Err(OnomasticonError::Format { line, message }) => {
                    cx.problems.push(Problem::error(
                        &file,
                        ProblemKind::Parse,
                        Location::new(line.max(1), 1),
                        "E_TABLE_FORMAT",
                        message,
                    ));
                    None
                }
                Err(e) => {
                    cx.problems.push(Problem::error(
                        &file,
                        ProblemKind::Parse,
                        Location::new(1, 1),
                        "E_TABLE_FORMAT",
                        e.to_string(),
                    ));
                    None
                }
            }
        }
        _ => {
            cx.error(
                key,
                "E_TABLE_SOURCE",
                format!("{key} table needs exactly one of `source`, `path` or `mix`"),
            );
            None
        }
    }
}

fn name_model(cx: &mut Ctx, spec: &TableSpec, key: &str) -> Option<NameModel> {
    let table = if spec.mix.is_empty() {
        let (t, file) = load_table(cx, spec.source.as_deref(), spec.path.as_deref(), key)?;
        if cx
            .problems
            .extend_diagnostics(&file, ProblemKind::Validation, validate_table(&t))
        {
            return None;
        }
        t
    } else {
        if spec.source.is_some() || spec.path.is_some() {
            cx.error(
                key,
                "E_TABLE_SOURCE",
                format!("{key} table needs exactly one of `source`, `path` or `mix`"),
            );
            return None;
        }
        let mut parts = Vec::new();
        for part in &spec.mix {
            let (t, file) = load_table(cx, part.source.as_deref(), part.path.as_deref(), key)?;
            if cx
                .problems
                .extend_diagnostics(&file, ProblemKind::Validation, validate_table(&t))
            {
                return None;
            }
            parts.push((part.weight, t));
        }
        let refs: Vec<(f64, &NameTable)> = parts.iter().map(|(w, t)| (*w, t)).collect();
        match NameTable::mix(&refs) {
            Ok(t) => t,
            Err(e) => {
                cx.error("mix", "E_TABLE_MIX", e.to_string());
                return None;
            }
        }
    };
    let label = table.source_label.clone();
    let synthetic = table.is_synthetic();
    match NameModel::new(table, spec.prior, spec.use_counts) {
        Ok(m) => {
            if synthetic {
                cx.warnings.push(
                    "W_SYNTHETIC_TABLE",
                    format!("name table `{label}` is synthetic demonstration data; supply a real table for publication-grade results"),
                );
            }
            if m.counts.clamped {
                cx.warnings.push(
                    "W_CLAMPED_COUNTS",
                    format!("counts reconstructed from `{label}` exceed its sample size; the `Other` count was clamped at 0"),
                );
            }
            Some(m)
        }
        Err(e) => {
            cx.error("prior", "E_PRIOR", format!("{key} table: {e}"));
            None
        }
    }
}

fn load_pedigree(cx: &mut Ctx, rel: &str, label: &str) -> Option<Pedigree> {
    let text = cx.read(rel)?;
    let file = cx.path_display(rel);
    match Pedigree::from_csv(label, text.as_bytes()) {
        Ok(p) => {
            if cx
                .problems
                .extend_diagnostics(&file, ProblemKind::Validation, validate_pedigree(&p))
            {
                None
            } else {
                Some(p)
            }
        }
        Err(e) => {
            cx.problems.push(Problem::error(
                &file,
                ProblemKind::Parse,
                Location::new(1, 1),
                "E_PEDIGREE_FORMAT",
                e.to_string(),
            ));
            None
        }
    }
}
