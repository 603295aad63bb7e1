use std::fs;
use std::path::{Path, PathBuf};

use kinship_core::factor::{query, Evidence, Network, QueryOutcome};
use kinship_core::oobn::{compile, flatten, parse, print, validate};
use kinship_core::Diagnostic;
use proptest::prelude::*;

fn corpus(kind: &str) -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/corpus")
        .join(kind);
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "oobn"))
        .collect();
    files.sort();
    files
}

fn models() -> Vec<(PathBuf, PathBuf)> {
    corpus("valid")
        .into_iter()
        .filter(|p| !p.to_string_lossy().ends_with(".flat.oobn"))
        .map(|p| {
            let flat = p.with_extension("flat.oobn");
            (p, flat)
        })
        .collect()
}

fn fixture_name(name: &str) -> String {
    name.replace('.', "_")
}

/// Every single-variable marginal, with no evidence and with each variable in
/// turn observed in each of its states.
fn compare(net: &Network, fix: &Network, file: &Path) {
    assert_eq!(net.len(), fix.len(), "{file:?}: variable count");
    let map: Vec<_> = net
        .variables()
        .iter()
        .map(|v| {
            fix.var_id(&fixture_name(&v.name))
                .unwrap_or_else(|| panic!("{file:?}: fixture lacks {}", v.name))
        })
        .collect();
    for v in net.variables() {
        let f = fix.variable(map[v.id.0]);
        assert_eq!(v.states, f.states, "{file:?}: states of {}", v.name);
        let mut ps: Vec<String> = net
            .parents(v.id)
            .iter()
            .map(|p| fixture_name(&net.variable(*p).name))
            .collect();
        let mut fs_: Vec<String> = fix
            .parents(f.id)
            .iter()
            .map(|p| fix.variable(*p).name.clone())
            .collect();
        ps.sort();
        fs_.sort();
        assert_eq!(ps, fs_, "{file:?}: parents of {}", v.name);
    }
    let mut scenarios = vec![(Evidence::new(), Evidence::new())];
    for v in net.variables() {
        for s in 0..v.cardinality() {
            scenarios.push((
                Evidence::from_pairs([(v.id, s)]).unwrap(),
                Evidence::from_pairs([(map[v.id.0], s)]).unwrap(),
            ));
        }
    }
    for (e, fe) in &scenarios {
        for v in net.variables() {
            if e.contains(v.id) {
                continue;
            }
            let a = query(net, &[v.id], e).unwrap();
            let b = query(fix, &[map[v.id.0]], fe).unwrap();
            assert!(
                (a.evidence_prob() - b.evidence_prob()).abs() <= 1e-9,
                "{file:?}"
            );
            match (a, b) {
                (QueryOutcome::ImpossibleEvidence, QueryOutcome::ImpossibleEvidence) => {}
                (
                    QueryOutcome::Posterior { posterior: pa, .. },
                    QueryOutcome::Posterior { posterior: pb, .. },
                ) => {
                    for (x, y) in pa.values().iter().zip(pb.values()) {
                        assert!((x - y).abs() <= 1e-9, "{file:?}: {} {x} vs {y}", v.name);
                    }
                }
                _ => panic!("{file:?}: impossibility verdicts differ"),
            }
        }
    }
}

#[test]
fn flattening_matches_hand_flattened_fixtures() {
    let pairs = models();
    assert!(pairs.len() >= 6);
    for (model, flat) in pairs {
        let net = compile(&fs::read_to_string(&model).unwrap())
            .unwrap_or_else(|e| panic!("{model:?}: {e}"));
        let fix = compile(&fs::read_to_string(&flat).unwrap())
            .unwrap_or_else(|e| panic!("{flat:?}: {e}"));
        compare(&net, &fix, &model);
    }
}

#[test]
fn valid_documents_round_trip_through_the_printer() {
    for path in corpus("valid") {
        let doc = parse(&fs::read_to_string(&path).unwrap()).unwrap();
        assert!(validate(&doc).is_empty(), "{path:?}");
        let again = parse(&print(&doc)).unwrap();
        assert_eq!(
            doc.without_locations(),
            again.without_locations(),
            "{path:?}"
        );
        let a = flatten(&doc).unwrap();
        let b = flatten(&again).unwrap();
        assert_eq!(a.cpts(), b.cpts(), "{path:?}");
    }
}

fn expected_codes(src: &str) -> Vec<String> {
    src.lines()
        .filter_map(|l| l.strip_prefix("# expect:"))
        .flat_map(|l| l.split_whitespace().map(str::to_string))
        .collect()
}

fn diagnostics(src: &str) -> Vec<Diagnostic> {
    match parse(src) {
        Err(d) => d,
        Ok(doc) => validate(&doc),
    }
}

#[test]
fn invalid_documents_give_located_diagnostics() {
    let files = corpus("invalid");
    assert!(files.len() >= 20);
    for path in files {
        let src = fs::read_to_string(&path).unwrap();
        let want = expected_codes(&src);
        assert!(!want.is_empty(), "{path:?} has no expectation");
        let diags = diagnostics(&src);
        assert!(!diags.is_empty(), "{path:?}: no diagnostics");
        for code in &want {
            assert!(
                diags.iter().any(|d| d.code == code),
                "{path:?}: expected {code}, got {diags:?}"
            );
        }
        for d in &diags {
            assert!(
                d.location.line >= 1 && d.location.column >= 1,
                "{path:?}: unlocated {d:?}"
            );
        }
        assert!(compile(&src).is_err(), "{path:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn mutated_documents_never_panic(file in 0usize..64, pos in any::<prop::sample::Index>(), byte in any::<u8>(), cut in any::<bool>()) {
        let mut all = corpus("valid");
        all.extend(corpus("invalid"));
        let path = &all[file % all.len()];
        let mut bytes = fs::read(path).unwrap();
        let i = pos.index(bytes.len());
        if cut {
            bytes.truncate(i);
        } else {
            bytes[i] = byte;
        }
        let src = String::from_utf8_lossy(&bytes);
        let _ = diagnostics(&src);
        let _ = compile(&src);
    }
}
