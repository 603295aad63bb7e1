use kinship_core::evidence::{
    combine, combine_lrs, integrate_over_count, item_lrs, network_lr, selection_adjust,
    EvidenceError, EvidenceItem, ItemKind,
};
use kinship_core::factor::Evidence;
use kinship_core::onomasticon::onomasticon_lr;
use kinship_core::pedigree::{dna_likelihood_all, most_probable_pedigree};
use kinship_core::Lr;

use crate::problem::CliError;
use crate::report::{
    Evaluation, ItemReport, NamedLr, NetworkReport, OverallReport, PedigreeReport, PedigreeRow,
    SelectionReport, Warnings,
};
use crate::resolve::{Resolved, ResolvedNetwork};
use crate::scenario::Scenario;

/// Relative agreement required between the product of item LRs and the
/// joint network LR.
pub const NETWORK_TOLERANCE: f64 = 1e-9;

impl From<EvidenceError> for CliError {
    fn from(e: EvidenceError) -> Self {
        CliError::Evaluation(e.to_string())
    }
}

fn eval_err(what: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Evaluation(format!("{what}: {e}"))
}

struct Item {
    item: EvidenceItem,
    alt: Option<f64>,
    null: Option<f64>,
}

pub fn evaluate(r: &Resolved, scenario: &Scenario) -> Result<(Evaluation, Warnings), CliError> {
    let mut warnings = r.warnings.clone();
    let h = &r.hypotheses;
    let mut items = Vec::new();
    let mut names_alt = None;

    if let Some(o) = &r.onomasticon {
        let res = onomasticon_lr(&o.config, &o.assumptions, &o.tables, &o.constraints)
            .map_err(|e| eval_err("onomasticon", e))?;
        if res.alt.impossible_configuration {
            warnings.push(
                "W_IMPOSSIBLE_CONFIGURATION",
                format!(
                    "item `{}`: a sibling group is larger than the number of available names, so distinct sibling names are impossible",
                    o.id
                ),
            );
        }
        names_alt = Some(res.alt.probability);
        items.push(Item {
            item: EvidenceItem::new(
                &o.id,
                ItemKind::Onomasticon,
                res.lr,
                "onomasticon family model",
            ),
            alt: Some(res.alt.probability),
            null: Some(res.null),
        });
    }

    if let Some(d) = &r.dna {
        if let (Some(null), Some(alt)) = (&d.null, &d.alt) {
            let l_alt =
                dna_likelihood_all(alt, &d.markers, &d.mutation).map_err(|e| eval_err("dna", e))?;
            let l_null = dna_likelihood_all(null, &d.markers, &d.mutation)
                .map_err(|e| eval_err("dna", e))?;
            let lr = Lr::from_likelihoods(l_alt, l_null);
            if lr == Lr::Infinite {
                warnings.push(
                    "W_DISCONFIRMATION",
                    format!(
                        "item `{}`: the DNA data are impossible under the null pedigree; this disconfirms H0 ({}) but does not by itself confirm identity with the named individuals",
                        d.id, h.null_label
                    ),
                );
            }
            items.push(Item {
                item: EvidenceItem::new(&d.id, ItemKind::Dna, lr, "lineage-marker pedigree model"),
                alt: Some(l_alt),
                null: Some(l_null),
            });
        }
    }

    for it in &r.direct {
        items.push(Item {
            item: it.clone(),
            alt: None,
            null: None,
        });
    }

    let network = match &r.network {
        Some(n) => Some(network_check(n, &mut warnings)?),
        None => None,
    };
    if let (Some(n), Some(rep)) = (&r.network, &network) {
        if n.use_as_evidence {
            if r.independent {
                for ((id, kind, _), lr) in n.items.iter().zip(&rep.items) {
                    let prov = format!("network {} item `{id}`", n.path);
                    items.push(Item {
                        item: EvidenceItem::new(id, *kind, lr.lr, &prov),
                        alt: None,
                        null: None,
                    });
                }
            } else {
                // Without independence the network itself supplies the joint LR.
                let prov = format!("network {} with all items observed jointly", n.path);
                items.push(Item {
                    item: EvidenceItem::new("network", ItemKind::Direct, rep.joint, &prov),
                    alt: None,
                    null: None,
                });
            }
        }
    }

    for it in &items {
        flag_warning(&mut warnings, &it.item.id, it.item.lr, h);
    }
    let evidence: Vec<EvidenceItem> = items.iter().map(|i| i.item.clone()).collect();
    let combined = combine(h, &evidence, r.independent)?;
    match combined.overall_lr {
        Lr::Infinite => warnings.push("W_OVERALL_INFINITE", "overall LR is +infinity: the evidence is impossible under H0"),
        Lr::Undefined => warnings.push("W_OVERALL_UNDEFINED", "overall LR is undefined: items disagree absolutely (0 and +infinity) or an item is 0/0"),
        _ => {}
    }

    let selection = match &scenario.selection {
        None => None,
        Some(s) => {
            let (p, source) = match (s.probability, names_alt) {
                (Some(p), _) => (p, "given per-trial probability".to_string()),
                (None, Some(p)) => (p, "probability of the observed names under H1".to_string()),
                (None, None) => {
                    return Err(CliError::Evaluation(
                        "selection needs `probability` or an onomasticon section".into(),
                    ))
                }
            };
            if !(0.0..=1.0).contains(&p) {
                return Err(CliError::Evaluation(format!(
                    "selection probability {p} is outside [0, 1]"
                )));
            }
            let adjusted =
                integrate_over_count(&s.trials, |n| selection_adjust(p, n).unwrap_or(f64::NAN))?;
            Some(SelectionReport {
                quantity: s.quantity,
                trials: s.trials,
                probability_source: source,
                unadjusted: p,
                adjusted,
            })
        }
    };

    let items = items
        .into_iter()
        .map(|i| ItemReport {
            id: i.item.id,
            kind: i.item.kind,
            provenance: i.item.provenance,
            lr: i.item.lr,
            inverse_lr: i.item.lr.inverse(),
            likelihood_alt: i.alt,
            likelihood_null: i.null,
        })
        .collect();
    Ok((
        Evaluation {
            items,
            overall: OverallReport {
                lr: combined.overall_lr,
                inverse_lr: combined.overall_lr.inverse(),
                posterior_odds: combined.posterior_odds,
                posterior_prob_alt: combined.posterior_prob_alt,
            },
            selection,
            network,
        },
        warnings,
    ))
}

fn flag_warning(w: &mut Warnings, id: &str, lr: Lr, h: &kinship_core::evidence::HypothesisPair) {
    match lr {
        Lr::Infinite => w.push(
            "W_INFINITE_LR",
            format!("item `{id}` has LR +infinity: P(E | {}) = 0", h.null_label),
        ),
        Lr::Undefined => w.push(
            "W_UNDEFINED_LR",
            format!(
                "item `{id}` has an undefined LR: the evidence is impossible under both hypotheses"
            ),
        ),
        Lr::Finite(0.0) => w.push(
            "W_ZERO_LR",
            format!("item `{id}` has LR 0: P(E | {}) = 0", h.alt_label),
        ),
        Lr::Finite(_) => {}
    }
}

/// Relative difference of two LRs, or `None` when either is flagged.
pub fn relative_difference(a: Lr, b: Lr) -> Option<f64> {
    match (a, b) {
        (Lr::Finite(x), Lr::Finite(y)) => {
            let scale = x.abs().max(y.abs());
            Some(if scale == 0.0 {
                0.0
            } else {
                (x - y).abs() / scale
            })
        }
        _ => None,
    }
}

fn network_check(n: &ResolvedNetwork, warnings: &mut Warnings) -> Result<NetworkReport, CliError> {
    let evidence: Vec<Evidence> = n.items.iter().map(|(_, _, e)| e.clone()).collect();
    let lrs = item_lrs(&n.net, n.hypothesis, n.alt, n.null, &evidence)?;
    let mut all = Evidence::new();
    for e in &evidence {
        all = all.merged(e).map_err(|e| {
            CliError::Evaluation(format!(
                "network items observe one variable in different states: {e}"
            ))
        })?;
    }
    let joint = network_lr(&n.net, n.hypothesis, n.alt, n.null, &all)?;
    let product = combine_lrs(&lrs);
    let rel = relative_difference(product, joint);
    let consistent = match rel {
        Some(d) => d <= NETWORK_TOLERANCE,
        None => product == joint,
    };
    if !consistent {
        warnings.push(
            "W_NETWORK_DEPENDENT",
            format!(
                "in {} the product of item LRs differs from the joint LR; the items are not conditionally independent given the hypothesis",
                n.path
            ),
        );
    }
    let hyp = n.net.variable(n.hypothesis);
    Ok(NetworkReport {
        model: n.path.clone(),
        hypothesis: hyp.name.clone(),
        null_state: hyp.states[n.null].clone(),
        alt_state: hyp.states[n.alt].clone(),
        used_as_evidence: n.use_as_evidence,
        items: n
            .items
            .iter()
            .zip(&lrs)
            .map(|((id, _, _), lr)| NamedLr {
                id: id.clone(),
                lr: *lr,
            })
            .collect(),
        product,
        joint,
        relative_difference: rel,
        consistent,
    })
}

pub fn pedigree_posterior(r: &Resolved) -> Result<(PedigreeReport, Warnings), CliError> {
    let mut warnings = r.warnings.clone();
    let dna = r
        .dna
        .as_ref()
        .ok_or_else(|| CliError::Evaluation("pedigree comparison needs a [dna] section".into()))?;
    if r.candidates.is_empty() {
        return Err(CliError::Evaluation(
            "the scenario lists no candidate pedigrees".into(),
        ));
    }
    let peds: Vec<_> = r.candidates.iter().map(|(p, _)| p.clone()).collect();
    let prior: Vec<f64> = r.candidates.iter().map(|(_, w)| *w).collect();
    let post = most_probable_pedigree(&peds, &dna.markers, &dna.mutation, &prior)
        .map_err(|e| eval_err("pedigrees", e))?;
    if post.posterior.is_none() {
        warnings.push(
            "W_PEDIGREE_UNDEFINED",
            "every candidate pedigree has likelihood 0 under the data; the posterior is undefined",
        );
    }
    let mut order: Vec<usize> = (0..peds.len()).collect();
    if let Some(p) = &post.posterior {
        order.sort_by(|&a, &b| p[b].partial_cmp(&p[a]).unwrap_or(std::cmp::Ordering::Equal));
        // The reported argmax uses the tie tolerance, so it goes first.
        if let Some(m) = post.argmax {
            order.retain(|&i| i != m);
            order.insert(0, m);
        }
    }
    let rows = order
        .into_iter()
        .map(|i| PedigreeRow {
            label: peds[i].label.clone(),
            prior: prior[i],
            likelihood: post.likelihoods[i],
            posterior: post.posterior.as_ref().map(|p| p[i]),
            argmax: post.argmax == Some(i),
        })
        .collect();
    Ok((
        PedigreeReport {
            mutation_rate: dna.mutation.rate,
            markers: dna
                .markers
                .iter()
                .map(|m| m.population.marker.to_string())
                .collect(),
            candidates: rows,
        },
        warnings,
    ))
}
