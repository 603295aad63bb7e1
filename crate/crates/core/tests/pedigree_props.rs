use std::collections::BTreeMap;

use kinship_core::pedigree::{
    dna_likelihood, most_probable_pedigree, DnaObservation, HaplotypePopulation, Individual,
    MarkerData, MarkerKind, MutationModel, Pedigree, Sex,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random valid pedigree: each individual may take an earlier female as
/// mother and an earlier male as father.
fn random_pedigree(rng: &mut impl Rng, n: usize) -> Pedigree {
    let mut people: Vec<Individual> = Vec::new();
    for i in 0..n {
        let sex = if rng.random_bool(0.5) { Sex::F } else { Sex::M };
        let mother = {
            let c: Vec<&Individual> = people.iter().filter(|p| p.sex == Sex::F).collect();
            (!c.is_empty() && rng.random_bool(0.7))
                .then(|| c[rng.random_range(0..c.len())].id.clone())
        };
        let father = {
            let c: Vec<&Individual> = people.iter().filter(|p| p.sex == Sex::M).collect();
            (!c.is_empty() && rng.random_bool(0.7))
                .then(|| c[rng.random_range(0..c.len())].id.clone())
        };
        people.push(Individual::new(
            &format!("i{i}"),
            sex,
            mother.as_deref(),
            father.as_deref(),
        ));
    }
    Pedigree::new("random", people)
}

fn random_population(rng: &mut impl Rng, marker: MarkerKind, k: usize) -> HaplotypePopulation {
    let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    HaplotypePopulation::new(
        marker,
        (0..k).map(|i| format!("h{i}")).collect(),
        w.iter().map(|x| x / s).collect(),
    )
    .unwrap()
}

/// Brute-force P(readings): sum over haplotypes of every relevant individual,
/// applying founder frequencies and the uniform mutation kernel by hand.
fn brute_force(
    p: &Pedigree,
    pop: &HaplotypePopulation,
    mu: f64,
    obs: &BTreeMap<String, String>,
) -> f64 {
    let marker = pop.marker;
    let rel: Vec<&Individual> = p
        .individuals
        .iter()
        .filter(|i| marker.includes(i.sex))
        .collect();
    let idx: BTreeMap<&str, usize> = rel
        .iter()
        .enumerate()
        .map(|(j, i)| (i.id.as_str(), j))
        .collect();
    let k = pop.labels.len();
    let mut total = 0.0;
    let mut a = vec![0usize; rel.len()];
    loop {
        let consistent = obs
            .iter()
            .all(|(id, h)| pop.labels[a[idx[id.as_str()]]] == *h);
        if consistent {
            let mut prob = 1.0;
            for (j, ind) in rel.iter().enumerate() {
                let parent = match marker {
                    MarkerKind::MtDna => ind.mother.as_deref(),
                    MarkerKind::Y => ind.father.as_deref(),
                };
                prob *= match parent.and_then(|q| idx.get(q)) {
                    None => pop.frequencies[a[j]],
                    Some(&pj) if a[pj] == a[j] => 1.0 - mu,
                    Some(_) => mu / (k - 1) as f64,
                };
            }
            total += prob;
        }
        let mut i = a.len();
        loop {
            if i == 0 {
                return total;
            }
            i -= 1;
            a[i] += 1;
            if a[i] < k {
                break;
            }
            a[i] = 0;
        }
    }
}

fn random_readings(
    rng: &mut impl Rng,
    p: &Pedigree,
    pop: &HaplotypePopulation,
) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for i in &p.individuals {
        if pop.marker.includes(i.sex) && rng.random_bool(0.6) {
            out.insert(
                i.id.clone(),
                pop.labels[rng.random_range(0..pop.labels.len())].clone(),
            );
        }
    }
    out
}

fn obs(marker: MarkerKind, r: &BTreeMap<String, String>) -> DnaObservation {
    DnaObservation::new(marker, r.iter().map(|(a, b)| (a.as_str(), b.as_str())))
}

#[test]
fn likelihood_matches_enumeration_on_random_pedigrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(1994);
    let mut checked = 0;
    while checked < 100 {
        let marker = if rng.random_bool(0.5) {
            MarkerKind::MtDna
        } else {
            MarkerKind::Y
        };
        let p = {
            let n = rng.random_range(1..=10);
            random_pedigree(&mut rng, n)
        };
        let relevant = p
            .individuals
            .iter()
            .filter(|i| marker.includes(i.sex))
            .count();
        if relevant == 0 || relevant > 8 {
            continue;
        }
        let k = rng.random_range(2..=4);
        let pop = random_population(&mut rng, marker, k);
        let mu = if rng.random_bool(0.3) {
            0.0
        } else {
            rng.random_range(0.0..0.2)
        };
        let readings = random_readings(&mut rng, &p, &pop);
        let got = dna_likelihood(
            &p,
            &pop,
            &MutationModel::new(mu).unwrap(),
            &obs(marker, &readings),
        )
        .unwrap();
        let want = brute_force(&p, &pop, mu, &readings);
        assert!((got - want).abs() <= 1e-9, "{got} vs {want}");
        checked += 1;
    }
}

#[test]
fn summing_out_one_reading_is_marginalization() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    while checked < 50 {
        let p = {
            let n = rng.random_range(2..=8);
            random_pedigree(&mut rng, n)
        };
        let pop = {
            let k = rng.random_range(2..=4);
            random_population(&mut rng, MarkerKind::MtDna, k)
        };
        let readings = random_readings(&mut rng, &p, &pop);
        let Some(extra) = p.individuals.iter().find(|i| !readings.contains_key(&i.id)) else {
            continue;
        };
        let mu = MutationModel::new(rng.random_range(0.0..0.1)).unwrap();
        let base = dna_likelihood(&p, &pop, &mu, &obs(MarkerKind::MtDna, &readings)).unwrap();
        let summed: f64 = pop
            .labels
            .iter()
            .map(|h| {
                let mut r = readings.clone();
                r.insert(extra.id.clone(), h.clone());
                dna_likelihood(&p, &pop, &mu, &obs(MarkerKind::MtDna, &r)).unwrap()
            })
            .sum();
        assert!((base - summed).abs() <= 1e-9);
        checked += 1;
    }
}

#[test]
fn mismatch_likelihood_increases_with_mutation_rate() {
    let pop = HaplotypePopulation::new(
        MarkerKind::MtDna,
        vec!["h1".into(), "h2".into(), "h3".into()],
        vec![0.5, 0.3, 0.2],
    )
    .unwrap();
    let p = Pedigree::new(
        "mother-child",
        vec![
            Individual::new("m", Sex::F, None, None),
            Individual::new("c", Sex::F, Some("m"), None),
        ],
    );
    let o = DnaObservation::new(MarkerKind::MtDna, [("m", "h1"), ("c", "h2")]);
    let mut last = 0.0;
    for i in 1..100 {
        let mu = i as f64 * 0.005;
        let l = dna_likelihood(&p, &pop, &MutationModel::new(mu).unwrap(), &o).unwrap();
        assert!(l > last, "not increasing at {mu}");
        last = l;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn y_and_mtdna_are_dual_under_mirroring(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = { let n = rng.random_range(1..=8); random_pedigree(&mut rng, n) };
        let pop = { let k = rng.random_range(2..=4); random_population(&mut rng, MarkerKind::MtDna, k) };
        let mirrored_pop = HaplotypePopulation::new(MarkerKind::Y, pop.labels.clone(), pop.frequencies.clone()).unwrap();
        // Readings on original females only: after mirroring they are males carrying Y.
        let mut readings = random_readings(&mut rng, &p, &pop);
        readings.retain(|id, _| p.get(id).is_some_and(|i| i.sex == Sex::F));
        let mu = MutationModel::new(rng.random_range(0.0..0.1)).unwrap();
        let a = dna_likelihood(&p, &pop, &mu, &obs(MarkerKind::MtDna, &readings)).unwrap();
        let b = dna_likelihood(&p.mirrored(), &mirrored_pop, &mu, &obs(MarkerKind::Y, &readings)).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn posterior_is_normalized(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=6);
        let pop = random_population(&mut rng, MarkerKind::MtDna, 3);
        let candidates: Vec<Pedigree> = (0..rng.random_range(1..=4)).map(|_| {
            let mut p = random_pedigree(&mut rng, n);
            // Same ids in every candidate so the readings apply to all.
            p.label = "candidate".into();
            p
        }).collect();
        let readings: BTreeMap<String, String> = candidates[0]
            .individuals
            .iter()
            .filter(|i| candidates.iter().all(|c| c.get(&i.id).is_some_and(|j| j.sex == Sex::F)))
            .map(|i| (i.id.clone(), pop.labels[rng.random_range(0..3)].clone()))
            .collect();
        let prior: Vec<f64> = candidates.iter().map(|_| rng.random_range(0.1..1.0)).collect();
        let md = [MarkerData { population: pop, observation: obs(MarkerKind::MtDna, &readings) }];
        let mu = MutationModel::new(0.01).unwrap();
        let post = most_probable_pedigree(&candidates, &md, &mu, &prior).unwrap();
        let s: f64 = post.posterior.unwrap().iter().sum();
        prop_assert!((s - 1.0).abs() <= 1e-9);
    }
}
