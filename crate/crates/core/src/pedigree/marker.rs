use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use super::{DnaObservation, HaplotypePopulation, MutationModel, Pedigree, PedigreeError, Result};
use crate::diag::has_errors;
use crate::evidence::Lr;
use crate::factor::{evidence_likelihood, Evidence, Factor, Network, NetworkBuilder, VarId};

/// Row-major `(parent, child)` transmission table for `k` haplotypes: the
/// diagonal keeps `1 - rate`, every other entry is `rate / (k - 1)`.
pub fn transmission_rows(rate: f64, k: usize) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(PedigreeError::Parameter(format!(
            "need at least two haplotypes, got {k}"
        )));
    }
    MutationModel::new(rate)?;
    let off = rate / (k - 1) as f64;
    let stay = 1.0 - off * (k - 1) as f64;
    let mut out = Vec::with_capacity(k * k);
    for parent in 0..k {
        out.extend((0..k).map(|child| if child == parent { stay } else { off }));
    }
    Ok(out)
}

/// [`transmission_rows`] as a factor over `(parent, child)`.
pub fn transmit_cpt(rate: f64, k: usize, parent: VarId, child: VarId) -> Result<Factor> {
    Ok(Factor::new(
        vec![(parent, k), (child, k)],
        transmission_rows(rate, k)?,
    )?)
}

fn ensure_valid(p: &Pedigree) -> Result<()> {
    let diagnostics = super::validate_pedigree(p);
    if has_errors(&diagnostics) {
        return Err(PedigreeError::Invalid {
            label: p.label.clone(),
            diagnostics,
        });
    }
    Ok(())
}

/// One haplotype variable per individual carrying the marker, named by id.
/// Individuals whose transmitting parent is absent from the network are founders.
pub fn build_marker_network(
    p: &Pedigree,
    pop: &HaplotypePopulation,
    mutation: &MutationModel,
) -> Result<Network> {
    ensure_valid(p)?;
    let marker = pop.marker;
    let relevant: Vec<_> = p
        .individuals
        .iter()
        .filter(|i| marker.includes(i.sex))
        .collect();
    let mut b = NetworkBuilder::new();
    for ind in &relevant {
        b.add_variable(&ind.id, &pop.labels)?;
    }
    let transmit = transmission_rows(mutation.rate, pop.len())?;
    for ind in &relevant {
        let child = b.var_id(&ind.id).expect("added above");
        match marker
            .transmitting_parent(ind)
            .and_then(|pid| b.var_id(pid))
        {
            Some(parent) => b.set_cpt(child, &[parent], transmit.clone())?,
            None => b.set_cpt(child, &[], pop.frequencies.clone())?,
        }
    }
    Ok(b.build()?)
}

fn observation_evidence(
    p: &Pedigree,
    pop: &HaplotypePopulation,
    net: &Network,
    obs: &DnaObservation,
) -> Result<Evidence> {
    if obs.marker != pop.marker {
        return Err(PedigreeError::MarkerMismatch {
            observed: obs.marker,
            population: pop.marker,
        });
    }
    let mut e = Evidence::new();
    for (id, label) in &obs.readings {
        let ind = p
            .get(id)
            .ok_or_else(|| PedigreeError::UnknownIndividual(id.clone()))?;
        if !pop.marker.includes(ind.sex) {
            return Err(PedigreeError::YReadingOnFemale(id.clone()));
        }
        let state = pop
            .index(label)
            .ok_or_else(|| PedigreeError::UnknownHaplotype(label.clone()))?;
        let var = net
            .var_id(id)
            .expect("relevant individuals are in the network");
        e.observe(var, state)?;
    }
    Ok(e)
}

/// P(observed readings | pedigree); unobserved individuals are summed out.
/// Zero is a legitimate answer: the pedigree cannot produce the readings.
pub fn dna_likelihood(
    p: &Pedigree,
    pop: &HaplotypePopulation,
    mutation: &MutationModel,
    obs: &DnaObservation,
) -> Result<f64> {
    let net = build_marker_network(p, pop, mutation)?;
    let e = observation_evidence(p, pop, &net, obs)?;
    Ok(evidence_likelihood(&net, &e)?)
}

/// Readings for one marker system together with its population.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkerData {
    pub population: HaplotypePopulation,
    pub observation: DnaObservation,
}

/// Product of [`dna_likelihood`] over independent marker systems.
pub fn dna_likelihood_all(
    p: &Pedigree,
    markers: &[MarkerData],
    mutation: &MutationModel,
) -> Result<f64> {
    markers.iter().try_fold(1.0, |acc, m| {
        Ok(acc * dna_likelihood(p, &m.population, mutation, &m.observation)?)
    })
}

/// `P(obs | alt) / P(obs | null)` with the alternative in the numerator.
pub fn dna_lr(
    markers: &[MarkerData],
    mutation: &MutationModel,
    ped_null: &Pedigree,
    ped_alt: &Pedigree,
) -> Result<Lr> {
    let num = dna_likelihood_all(ped_alt, markers, mutation)?;
    let den = dna_likelihood_all(ped_null, markers, mutation)?;
    Ok(Lr::from_likelihoods(num, den))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PedigreePosterior {
    pub likelihoods: Vec<f64>,
    /// `None` when every candidate with positive prior has zero likelihood.
    pub posterior: Option<Vec<f64>>,
    /// First candidate attaining the maximum posterior.
    pub argmax: Option<usize>,
}

/// Relative difference below which two posteriors are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Posterior over candidate pedigrees, proportional to prior times DNA likelihood.
pub fn most_probable_pedigree(
    candidates: &[Pedigree],
    markers: &[MarkerData],
    mutation: &MutationModel,
    prior: &[f64],
) -> Result<PedigreePosterior> {
    if candidates.is_empty() {
        return Err(PedigreeError::Parameter("no candidate pedigrees".into()));
    }
    if prior.len() != candidates.len() {
        return Err(PedigreeError::Parameter(format!(
            "{} prior weights for {} candidates",
            prior.len(),
            candidates.len()
        )));
    }
    if prior.iter().any(|w| !w.is_finite() || *w < 0.0) || prior.iter().all(|w| *w == 0.0) {
        return Err(PedigreeError::Parameter(
            "prior weights must be nonnegative and not all zero".into(),
        ));
    }
    let likelihoods = candidates
        .par_iter()
        .map(|c| dna_likelihood_all(c, markers, mutation))
        .collect::<Result<Vec<f64>>>()?;
    let joint: Vec<f64> = likelihoods.iter().zip(prior).map(|(l, w)| l * w).collect();
    let total: f64 = joint.iter().sum();
    if total <= 0.0 {
        return Ok(PedigreePosterior {
            likelihoods,
            posterior: None,
            argmax: None,
        });
    }
    let posterior: Vec<f64> = joint.iter().map(|j| j / total).collect();
    // Symmetric candidates can differ in the last bits depending on the
    // elimination order, so near-equal values count as ties.
    let mut argmax = 0;
    for (i, &p) in posterior.iter().enumerate() {
        if p > posterior[argmax] * (1.0 + TIE_TOLERANCE) {
            argmax = i;
        }
    }
    Ok(PedigreePosterior {
        likelihoods,
        posterior: Some(posterior),
        argmax: Some(argmax),
    })
}

/// Forward-simulates haplotypes for every individual carrying the marker.
pub fn simulate_haplotypes<R: Rng + ?Sized>(
    p: &Pedigree,
    pop: &HaplotypePopulation,
    mutation: &MutationModel,
    rng: &mut R,
) -> Result<BTreeMap<String, String>> {
    ensure_valid(p)?;
    let k = pop.len();
    let mut drawn: BTreeMap<String, usize> = BTreeMap::new();
    for ind in p.topological() {
        if !pop.marker.includes(ind.sex) {
            continue;
        }
        let inherited = pop
            .marker
            .transmitting_parent(ind)
            .and_then(|pid| drawn.get(pid).copied());
        let h = match inherited {
            Some(parent) => {
                if rng.random_bool(mutation.rate) {
                    let other = rng.random_range(0..k - 1);
                    if other >= parent {
                        other + 1
                    } else {
                        other
                    }
                } else {
                    parent
                }
            }
            None => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = k - 1;
                for (i, f) in pop.frequencies.iter().enumerate() {
                    acc += f;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                pick
            }
        };
        drawn.insert(ind.id.clone(), h);
    }
    Ok(drawn
        .into_iter()
        .map(|(id, h)| (id, pop.labels[h].clone()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::super::{Individual, MarkerKind, Sex};
    use super::*;

    fn pop() -> HaplotypePopulation {
        HaplotypePopulation::new(
            MarkerKind::MtDna,
            vec!["h1".into(), "h2".into()],
            vec![0.6, 0.4],
        )
        .unwrap()
    }

    fn mother_child() -> Pedigree {
        Pedigree::new(
            "mother-child",
            vec![
                Individual::new("m", Sex::F, None, None),
                Individual::new("c", Sex::M, Some("m"), None),
            ],
        )
    }

    fn unrelated() -> Pedigree {
        Pedigree::new(
            "unrelated",
            vec![
                Individual::new("m", Sex::F, None, None),
                Individual::new("c", Sex::M, None, None),
            ],
        )
    }

    fn obs(m: &str, c: &str) -> DnaObservation {
        DnaObservation::new(MarkerKind::MtDna, [("m", m), ("c", c)])
    }

    #[test]
    fn transmission_tables() {
        let t = transmission_rows(0.0, 3).unwrap();
        assert_eq!(t, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let t = transmission_rows(0.01, 5).unwrap();
        assert!((t[0] - 0.99).abs() < 1e-15);
        assert!((t[1] - 0.0025).abs() < 1e-15);
        assert!(transmission_rows(1.0, 3).is_err());
        assert!(transmission_rows(0.1, 1).is_err());
    }

    #[test]
    fn network_shapes() {
        let single = Pedigree::new("one", vec![Individual::new("a", Sex::F, None, None)]);
        let net = build_marker_network(&single, &pop(), &MutationModel::default()).unwrap();
        assert_eq!(net.len(), 1);
        assert_eq!(net.cpt(VarId(0)).values(), &[0.6, 0.4]);

        let net = build_marker_network(&mother_child(), &pop(), &MutationModel::new(0.0).unwrap())
            .unwrap();
        assert_eq!(
            net.parents(net.var_id("c").unwrap()),
            &[net.var_id("m").unwrap()]
        );

        let y =
            HaplotypePopulation::new(MarkerKind::Y, vec!["a".into(), "b".into()], vec![0.5, 0.5])
                .unwrap();
        let fd = Pedigree::new(
            "father-daughter",
            vec![
                Individual::new("f", Sex::M, None, None),
                Individual::new("d", Sex::F, None, Some("f")),
            ],
        );
        let net = build_marker_network(&fd, &y, &MutationModel::default()).unwrap();
        assert_eq!(net.len(), 1);
        assert_eq!(net.variables()[0].name, "f");
    }

    #[test]
    fn hand_likelihoods() {
        let mu0 = MutationModel::new(0.0).unwrap();
        assert!(
            (dna_likelihood(&mother_child(), &pop(), &mu0, &obs("h1", "h1")).unwrap() - 0.6).abs()
                < 1e-12
        );
        assert_eq!(
            dna_likelihood(&mother_child(), &pop(), &mu0, &obs("h1", "h2")).unwrap(),
            0.0
        );
        assert!(
            (dna_likelihood(&unrelated(), &pop(), &mu0, &obs("h1", "h1")).unwrap() - 0.36).abs()
                < 1e-12
        );
    }

    #[test]
    fn lr_cases() {
        let mu0 = MutationModel::new(0.0).unwrap();
        let md = |o| {
            vec![MarkerData {
                population: pop(),
                observation: o,
            }]
        };
        assert_eq!(
            dna_lr(&md(obs("h1", "h1")), &mu0, &unrelated(), &unrelated()).unwrap(),
            Lr::Finite(1.0)
        );
        assert_eq!(
            dna_lr(&md(obs("h1", "h2")), &mu0, &mother_child(), &unrelated()).unwrap(),
            Lr::Infinite
        );
        let lr = dna_lr(&md(obs("h1", "h1")), &mu0, &mother_child(), &unrelated()).unwrap();
        assert!((lr.value().unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn selection_cases() {
        let mu0 = MutationModel::new(0.0).unwrap();
        let md = |o| {
            vec![MarkerData {
                population: pop(),
                observation: o,
            }]
        };
        let one =
            most_probable_pedigree(&[mother_child()], &md(obs("h1", "h1")), &mu0, &[1.0]).unwrap();
        assert_eq!(one.posterior, Some(vec![1.0]));

        let two = most_probable_pedigree(
            &[mother_child(), unrelated()],
            &md(obs("h1", "h1")),
            &mu0,
            &[1.0, 1.0],
        )
        .unwrap();
        let post = two.posterior.unwrap();
        assert!((post[0] - 0.625).abs() < 1e-12 && (post[1] - 0.375).abs() < 1e-12);
        assert_eq!(two.argmax, Some(0));

        let mismatch = most_probable_pedigree(
            &[mother_child(), unrelated()],
            &md(obs("h1", "h2")),
            &mu0,
            &[1.0, 1.0],
        )
        .unwrap();
        assert_eq!(mismatch.posterior.as_ref().unwrap()[0], 0.0);
        assert_eq!(mismatch.argmax, Some(1));

        let none =
            most_probable_pedigree(&[mother_child()], &md(obs("h1", "h2")), &mu0, &[1.0]).unwrap();
        assert!(none.posterior.is_none());
    }

    #[test]
    fn observation_errors() {
        let mu = MutationModel::default();
        let bad_id = DnaObservation::new(MarkerKind::MtDna, [("nobody", "h1")]);
        assert!(matches!(
            dna_likelihood(&mother_child(), &pop(), &mu, &bad_id),
            Err(PedigreeError::UnknownIndividual(_))
        ));
        let bad_h = DnaObservation::new(MarkerKind::MtDna, [("m", "h9")]);
        assert!(matches!(
            dna_likelihood(&mother_child(), &pop(), &mu, &bad_h),
            Err(PedigreeError::UnknownHaplotype(_))
        ));
        let y = HaplotypePopulation::new(
            MarkerKind::Y,
            vec!["h1".into(), "h2".into()],
            vec![0.6, 0.4],
        )
        .unwrap();
        let on_female = DnaObservation::new(MarkerKind::Y, [("m", "h1")]);
        assert!(matches!(
            dna_likelihood(&mother_child(), &y, &mu, &on_female),
            Err(PedigreeError::YReadingOnFemale(_))
        ));
        assert!(matches!(
            dna_likelihood(&mother_child(), &y, &mu, &obs("h1", "h1")),
            Err(PedigreeError::MarkerMismatch { .. })
        ));
    }

    #[test]
    fn simulation_follows_lines_at_zero_mutation() {
        use rand::SeedableRng;
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let mu0 = MutationModel::new(0.0).unwrap();
        for _ in 0..50 {
            let h = simulate_haplotypes(&mother_child(), &pop(), &mu0, &mut rng).unwrap();
            assert_eq!(h["m"], h["c"]);
        }
    }
}
