use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::dirichlet::NameModel;
use super::{OnomasticonError, Result};
use crate::diag::{Diagnostic, Location};
use crate::evidence::Lr;
use crate::pedigree::Sex;

/// Most weighted identification assumptions one null likelihood may enumerate.
pub const MAX_ASSUMPTIONS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub id: String,
    pub sex: Sex,
    pub name: String,
    #[serde(default)]
    pub role: String,
    #[serde(default)]
    pub mother: Option<String>,
    #[serde(default)]
    pub father: Option<String>,
}

impl Member {
    pub fn new(id: &str, sex: Sex, name: &str) -> Self {
        Member {
            id: id.to_string(),
            sex,
            name: name.to_string(),
            role: String::new(),
            mother: None,
            father: None,
        }
    }

    pub fn with_parents(mut self, mother: Option<&str>, father: Option<&str>) -> Self {
        self.mother = mother.map(str::to_string);
        self.father = father.map(str::to_string);
        self
    }

    fn parents(&self) -> impl Iterator<Item = &str> {
        self.mother.iter().chain(&self.father).map(String::as_str)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FamilyConfiguration {
    pub members: Vec<Member>,
    #[serde(default)]
    pub sibling_groups: Vec<Vec<String>>,
}

impl FamilyConfiguration {
    pub fn get(&self, id: &str) -> Option<&Member> {
        self.members.iter().find(|m| m.id == id)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NamingConstraints {
    #[serde(default)]
    pub sibling_distinct: bool,
    /// β in `weight_i ∝ p_i · (1 + β·[name i borne by an ancestor])`.
    #[serde(default)]
    pub ancestor_boost: f64,
}

/// Under H0, member `member` is identified with a figure named `name` with
/// probability `weight`; otherwise the name is drawn as under H1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentificationAssumption {
    pub id: String,
    pub member: String,
    pub name: String,
    pub weight: f64,
}

/// One urn per sex.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FamilyTables {
    pub female: Option<NameModel>,
    pub male: Option<NameModel>,
}

impl FamilyTables {
    pub fn get(&self, sex: Sex) -> Option<&NameModel> {
        match sex {
            Sex::F => self.female.as_ref(),
            Sex::M => self.male.as_ref(),
        }
    }
}

fn loc() -> Location {
    Location::new(0, 0)
}

pub fn validate_family(config: &FamilyConfiguration) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for m in &config.members {
        if m.id.is_empty() {
            out.push(Diagnostic::error(
                loc(),
                "E_EMPTY_ID",
                "family member with an empty id",
            ));
        } else if !ids.insert(m.id.as_str()) {
            out.push(Diagnostic::error(
                loc(),
                "E_DUPLICATE_ID",
                format!("member `{}` listed twice", m.id),
            ));
        }
    }
    for m in &config.members {
        for (p, want) in [(&m.mother, Sex::F), (&m.father, Sex::M)] {
            let Some(p) = p else { continue };
            match config.get(p) {
                None => out.push(Diagnostic::error(
                    loc(),
                    "E_UNKNOWN_PARENT",
                    format!("`{}` names unknown parent `{p}`", m.id),
                )),
                Some(pm) if pm.sex != want => out.push(Diagnostic::error(
                    loc(),
                    if want == Sex::F {
                        "E_MOTHER_SEX"
                    } else {
                        "E_FATHER_SEX"
                    },
                    format!("parent `{p}` of `{}` has sex {}", m.id, pm.sex),
                )),
                _ => {}
            }
        }
    }
    let mut grouped = HashSet::new();
    for g in &config.sibling_groups {
        for id in g {
            if !ids.contains(id.as_str()) {
                out.push(Diagnostic::error(
                    loc(),
                    "E_UNKNOWN_MEMBER",
                    format!("sibling group names unknown member `{id}`"),
                ));
            } else if !grouped.insert(id.as_str()) {
                out.push(Diagnostic::error(
                    loc(),
                    "E_SIBLING_GROUPS",
                    format!("`{id}` belongs to more than one sibling group"),
                ));
            }
        }
    }
    if topological(config).is_none() {
        out.push(Diagnostic::error(
            loc(),
            "E_FAMILY_CYCLE",
            "parent links form a cycle",
        ));
    }
    out
}

/// Parents before children; among members ready at the same time, smallest id first.
/// `None` when parent links are cyclic.
fn topological(config: &FamilyConfiguration) -> Option<Vec<&Member>> {
    let by_id: HashMap<&str, &Member> = config.members.iter().map(|m| (m.id.as_str(), m)).collect();
    let mut indegree: HashMap<&str, usize> = HashMap::new();
    let mut children: HashMap<&str, Vec<&str>> = HashMap::new();
    for m in &config.members {
        let ps: Vec<&str> = m.parents().filter(|p| by_id.contains_key(p)).collect();
        indegree.insert(&m.id, ps.len());
        for p in ps {
            children.entry(p).or_default().push(&m.id);
        }
    }
    let mut ready: BTreeSet<&str> = indegree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(id, _)| *id)
        .collect();
    let mut order = Vec::with_capacity(config.members.len());
    while let Some(id) = ready.pop_first() {
        order.push(by_id[id]);
        for c in children.get(id).into_iter().flatten() {
            let d = indegree.get_mut(c).expect("member");
            *d -= 1;
            if *d == 0 {
                ready.insert(c);
            }
        }
    }
    (order.len() == by_id.len()).then_some(order)
}

fn ancestors<'a>(config: &'a FamilyConfiguration, m: &'a Member) -> Vec<&'a Member> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut stack: Vec<&str> = m.parents().collect();
    while let Some(id) = stack.pop() {
        if !seen.insert(id) {
            continue;
        }
        if let Some(p) = config.get(id) {
            out.push(p);
            stack.extend(p.parents());
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AltLikelihood {
    pub probability: f64,
    /// Sibling exclusion left a member with no available category.
    pub impossible_configuration: bool,
}

fn check(config: &FamilyConfiguration, tables: &FamilyTables, c: &NamingConstraints) -> Result<()> {
    let diags = validate_family(config);
    if crate::diag::has_errors(&diags) {
        return Err(OnomasticonError::Family(diags));
    }
    if !(c.ancestor_boost.is_finite() && c.ancestor_boost >= 0.0) {
        return Err(OnomasticonError::Parameter(format!(
            "ancestor boost must be finite and nonnegative, got {}",
            c.ancestor_boost
        )));
    }
    for m in &config.members {
        if tables.get(m.sex).is_none() {
            return Err(OnomasticonError::MissingTable(m.sex));
        }
    }
    Ok(())
}

/// Walks the family in processing order. Members in `forced` contribute
/// `[observed == required]` and do not enter the urn; everyone else is drawn.
fn walk(
    config: &FamilyConfiguration,
    tables: &FamilyTables,
    c: &NamingConstraints,
    forced: &HashMap<&str, &str>,
) -> AltLikelihood {
    let order = topological(config).expect("checked");
    let group_of: HashMap<&str, usize> = config
        .sibling_groups
        .iter()
        .enumerate()
        .flat_map(|(g, ids)| ids.iter().map(move |id| (id.as_str(), g)))
        .collect();
    if c.sibling_distinct {
        let mut sizes: HashMap<(usize, Sex), usize> = HashMap::new();
        for m in &config.members {
            if let Some(&g) = group_of.get(m.id.as_str()) {
                *sizes.entry((g, m.sex)).or_default() += 1;
            }
        }
        let overfull = sizes
            .iter()
            .any(|((_, sex), &n)| n > tables.get(*sex).expect("checked").table.len());
        if overfull {
            return AltLikelihood {
                probability: 0.0,
                impossible_configuration: true,
            };
        }
    }
    let mut drawn: BTreeMap<Sex, Vec<u64>> = BTreeMap::new();
    // Categories already taken within each (sibling group, sex).
    let mut taken: HashMap<(usize, Sex), HashSet<usize>> = HashMap::new();
    let mut prob = 1.0;
    for m in order {
        let model = tables.get(m.sex).expect("checked");
        let obs = model.table.category_of(&m.name);
        let group = group_of.get(m.id.as_str()).copied();

        if let Some(required) = forced.get(m.id.as_str()) {
            if *required != m.name {
                prob = 0.0;
            }
        } else {
            let extra = drawn
                .entry(m.sex)
                .or_insert_with(|| vec![0; model.table.len()]);
            let alpha = model.prior.concentrations();
            let base: Vec<f64> = (0..model.table.len())
                .map(|i| alpha[i] + (model.counts.counts[i] + extra[i]) as f64)
                .collect();
            let mut weights = base;
            if c.ancestor_boost > 0.0 {
                let boosted: HashSet<usize> = ancestors(config, m)
                    .iter()
                    .map(|a| model.table.category_of(&a.name))
                    .collect();
                for i in boosted {
                    weights[i] *= 1.0 + c.ancestor_boost;
                }
            }
            if c.sibling_distinct {
                if let Some(g) = group {
                    for &i in taken.get(&(g, m.sex)).into_iter().flatten() {
                        weights[i] = 0.0;
                    }
                }
            }
            let total: f64 = weights.iter().sum();
            if total <= 0.0 {
                return AltLikelihood {
                    probability: 0.0,
                    impossible_configuration: true,
                };
            }
            prob *= weights[obs] / total;
            extra[obs] += 1;
        }
        if let Some(g) = group {
            taken.entry((g, m.sex)).or_default().insert(obs);
        }
    }
    AltLikelihood {
        probability: prob,
        impossible_configuration: false,
    }
}

/// Probability of the observed names for a random family of this structure.
pub fn family_likelihood_alt(
    config: &FamilyConfiguration,
    tables: &FamilyTables,
    constraints: &NamingConstraints,
) -> Result<AltLikelihood> {
    check(config, tables, constraints)?;
    Ok(walk(config, tables, constraints, &HashMap::new()))
}

/// Mixture over which identification assumptions hold. Members without an
/// assumption are drawn as under the alternative.
pub fn family_likelihood_null(
    config: &FamilyConfiguration,
    assumptions: &[IdentificationAssumption],
    tables: &FamilyTables,
    constraints: &NamingConstraints,
) -> Result<f64> {
    check(config, tables, constraints)?;
    let mut seen = HashSet::new();
    for a in assumptions {
        if !(0.0..=1.0).contains(&a.weight) {
            return Err(OnomasticonError::Parameter(format!(
                "weight of assumption `{}` is {}, outside [0, 1]",
                a.id, a.weight
            )));
        }
        if config.get(&a.member).is_none() {
            return Err(OnomasticonError::Parameter(format!(
                "assumption `{}` refers to unknown member `{}`",
                a.id, a.member
            )));
        }
        if !seen.insert(a.member.as_str()) {
            return Err(OnomasticonError::Parameter(format!(
                "member `{}` has more than one identification assumption",
                a.member
            )));
        }
    }
    // Weight-0 assumptions never force and weight-1 ones always do.
    let always: Vec<&IdentificationAssumption> =
        assumptions.iter().filter(|a| a.weight == 1.0).collect();
    let uncertain: Vec<&IdentificationAssumption> = assumptions
        .iter()
        .filter(|a| a.weight > 0.0 && a.weight < 1.0)
        .collect();
    if uncertain.len() > MAX_ASSUMPTIONS {
        return Err(OnomasticonError::Parameter(format!(
            "{} uncertain assumptions exceed the limit of {MAX_ASSUMPTIONS}",
            uncertain.len()
        )));
    }
    let mut total = 0.0;
    for mask in 0u32..(1 << uncertain.len()) {
        let mut weight = 1.0;
        let mut forced: HashMap<&str, &str> = always
            .iter()
            .map(|a| (a.member.as_str(), a.name.as_str()))
            .collect();
        for (k, a) in uncertain.iter().enumerate() {
            if mask & (1 << k) != 0 {
                weight *= a.weight;
                forced.insert(&a.member, &a.name);
            } else {
                weight *= 1.0 - a.weight;
            }
        }
        total += weight * walk(config, tables, constraints, &forced).probability;
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OnomasticonLr {
    pub lr: Lr,
    pub alt: AltLikelihood,
    pub null: f64,
}

/// `P(names | H1) / P(names | H0)`.
pub fn onomasticon_lr(
    config: &FamilyConfiguration,
    assumptions: &[IdentificationAssumption],
    tables: &FamilyTables,
    constraints: &NamingConstraints,
) -> Result<OnomasticonLr> {
    let alt = family_likelihood_alt(config, tables, constraints)?;
    let null = family_likelihood_null(config, assumptions, tables, constraints)?;
    Ok(OnomasticonLr {
        lr: Lr::from_likelihoods(alt.probability, null),
        alt,
        null,
    })
}
