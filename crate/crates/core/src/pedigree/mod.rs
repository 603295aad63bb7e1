//! Pedigrees and lineage-marker (mtDNA / Y-chromosome) evidence.
//!
//! mtDNA passes from mother to child and the Y chromosome from father to son,
//! unchanged except for mutation. For a candidate pedigree the marker network
//! has one haplotype variable per relevant individual; founders draw from the
//! population frequencies and everyone else inherits through [`transmission_rows`].

mod marker;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::{Diagnostic, Location};
use crate::factor::FactorError;

pub use marker::{
    build_marker_network, dna_likelihood, dna_likelihood_all, dna_lr, most_probable_pedigree,
    simulate_haplotypes, transmission_rows, transmit_cpt, MarkerData, PedigreePosterior,
    TIE_TOLERANCE,
};

#[derive(Debug, Error)]
pub enum PedigreeError {
    #[error("pedigree file: {0}")]
    Format(String),
    #[error("pedigree `{label}` is invalid: {}", first_message(.diagnostics))]
    Invalid {
        label: String,
        diagnostics: Vec<Diagnostic>,
    },
    #[error("{0}")]
    Parameter(String),
    #[error("individual `{0}` is not in the pedigree")]
    UnknownIndividual(String),
    #[error("haplotype `{0}` is not in the population")]
    UnknownHaplotype(String),
    #[error("Y-chromosome reading on female `{0}`")]
    YReadingOnFemale(String),
    #[error("observation is for {observed} but the population describes {population}")]
    MarkerMismatch {
        observed: MarkerKind,
        population: MarkerKind,
    },
    #[error(transparent)]
    Network(#[from] FactorError),
}

fn first_message(d: &[Diagnostic]) -> String {
    d.first().map(|d| d.message.clone()).unwrap_or_default()
}

pub type Result<T> = std::result::Result<T, PedigreeError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sex {
    F,
    M,
}

impl Sex {
    pub fn flipped(self) -> Sex {
        match self {
            Sex::F => Sex::M,
            Sex::M => Sex::F,
        }
    }
}

impl FromStr for Sex {
    type Err = PedigreeError;

    fn from_str(s: &str) -> Result<Sex> {
        match s.trim() {
            "F" | "f" => Ok(Sex::F),
            "M" | "m" => Ok(Sex::M),
            other => Err(PedigreeError::Format(format!(
                "sex must be F or M, found `{other}`"
            ))),
        }
    }
}

impl fmt::Display for Sex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sex::F => "F",
            Sex::M => "M",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub id: String,
    pub sex: Sex,
    pub mother: Option<String>,
    pub father: Option<String>,
    /// Source line when loaded from a file, otherwise 0.
    pub line: usize,
}

impl Individual {
    pub fn new(id: &str, sex: Sex, mother: Option<&str>, father: Option<&str>) -> Self {
        Individual {
            id: id.to_string(),
            sex,
            mother: mother.map(str::to_string),
            father: father.map(str::to_string),
            line: 0,
        }
    }

    pub fn is_founder(&self) -> bool {
        self.mother.is_none() && self.father.is_none()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pedigree {
    pub label: String,
    pub individuals: Vec<Individual>,
}

impl Pedigree {
    pub fn new(label: &str, individuals: Vec<Individual>) -> Self {
        Pedigree {
            label: label.to_string(),
            individuals,
        }
    }

    pub fn get(&self, id: &str) -> Option<&Individual> {
        self.individuals.iter().find(|i| i.id == id)
    }

    pub fn founders(&self) -> impl Iterator<Item = &Individual> {
        self.individuals.iter().filter(|i| i.is_founder())
    }

    /// Reads the `id,sex,mother,father` format; empty parent fields mark founders.
    pub fn from_csv<R: Read>(label: &str, reader: R) -> Result<Pedigree> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| PedigreeError::Format(e.to_string()))?
            .clone();
        let expected = ["id", "sex", "mother", "father"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(PedigreeError::Format(format!(
                "header must be `id,sex,mother,father`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut individuals = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| PedigreeError::Format(e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let field = |i: usize| rec.get(i).map(str::trim).filter(|s| !s.is_empty());
            let id =
                field(0).ok_or_else(|| PedigreeError::Format(format!("line {line}: empty id")))?;
            let sex: Sex = field(1)
                .ok_or_else(|| PedigreeError::Format(format!("line {line}: empty sex")))?
                .parse()
                .map_err(|e| PedigreeError::Format(format!("line {line}: {e}")))?;
            individuals.push(Individual {
                id: id.to_string(),
                sex,
                mother: field(2).map(str::to_string),
                father: field(3).map(str::to_string),
                line,
            });
        }
        Ok(Pedigree::new(label, individuals))
    }

    /// Sex-swapped copy with mother and father links exchanged.
    pub fn mirrored(&self) -> Pedigree {
        Pedigree {
            label: format!("{} (mirrored)", self.label),
            individuals: self
                .individuals
                .iter()
                .map(|i| Individual {
                    sex: i.sex.flipped(),
                    mother: i.father.clone(),
                    father: i.mother.clone(),
                    ..i.clone()
                })
                .collect(),
        }
    }

    /// Individuals ordered so that parents precede children (ties by file order).
    pub(crate) fn topological(&self) -> Vec<&Individual> {
        let mut placed: HashSet<&str> = HashSet::new();
        let mut out = Vec::with_capacity(self.individuals.len());
        while out.len() < self.individuals.len() {
            let before = out.len();
            for ind in &self.individuals {
                if placed.contains(ind.id.as_str()) {
                    continue;
                }
                let ready = [&ind.mother, &ind.father].iter().all(|p| match p {
                    Some(p) => placed.contains(p.as_str()) || self.get(p).is_none(),
                    None => true,
                });
                if ready {
                    placed.insert(ind.id.as_str());
                    out.push(ind);
                }
            }
            if out.len() == before {
                break;
            }
        }
        out
    }
}

/// Structural checks: unique ids, resolvable parents of the right sex, no cycles.
pub fn validate_pedigree(p: &Pedigree) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let loc = |idx: usize, ind: &Individual| {
        Location::new(if ind.line > 0 { ind.line } else { idx + 2 }, 1)
    };
    let mut index: HashMap<&str, &Individual> = HashMap::new();
    for (i, ind) in p.individuals.iter().enumerate() {
        if ind.id.is_empty() {
            out.push(Diagnostic::error(
                loc(i, ind),
                "E_EMPTY_ID",
                "individual with an empty id",
            ));
        }
        if index.insert(ind.id.as_str(), ind).is_some() {
            out.push(Diagnostic::error(
                loc(i, ind),
                "E_DUPLICATE_ID",
                format!("individual `{}` is listed more than once", ind.id),
            ));
        }
    }
    for (i, ind) in p.individuals.iter().enumerate() {
        for (parent, want, role, code) in [
            (&ind.mother, Sex::F, "mother", "E_MOTHER_SEX"),
            (&ind.father, Sex::M, "father", "E_FATHER_SEX"),
        ] {
            let Some(pid) = parent else { continue };
            match index.get(pid.as_str()) {
                None => out.push(Diagnostic::error(
                    loc(i, ind),
                    "E_UNKNOWN_PARENT",
                    format!("{role} `{pid}` of `{}` is not in the pedigree", ind.id),
                )),
                Some(par) if par.sex != want => out.push(Diagnostic::error(
                    loc(i, ind),
                    code,
                    format!("{role} `{pid}` of `{}` has sex {}", ind.id, par.sex),
                )),
                Some(_) => {}
            }
        }
    }
    // Cycle check by repeated peeling of individuals whose known parents are placed.
    let ordered: HashSet<&str> = p.topological().iter().map(|i| i.id.as_str()).collect();
    for (i, ind) in p.individuals.iter().enumerate() {
        if !ordered.contains(ind.id.as_str()) {
            out.push(Diagnostic::error(
                loc(i, ind),
                "E_PEDIGREE_CYCLE",
                format!("`{}` is its own ancestor", ind.id),
            ));
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum MarkerKind {
    #[serde(rename = "mtDNA")]
    MtDna,
    Y,
}

impl fmt::Display for MarkerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MarkerKind::MtDna => "mtDNA",
            MarkerKind::Y => "Y",
        })
    }
}

impl FromStr for MarkerKind {
    type Err = PedigreeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mtDNA" | "mtdna" | "mt" => Ok(MarkerKind::MtDna),
            "Y" | "y" => Ok(MarkerKind::Y),
            other => Err(PedigreeError::Parameter(format!(
                "marker must be `mtDNA` or `Y`, found `{other}`"
            ))),
        }
    }
}

impl MarkerKind {
    /// Whether an individual of this sex carries the marker into the network.
    pub fn includes(self, sex: Sex) -> bool {
        match self {
            MarkerKind::MtDna => true,
            MarkerKind::Y => sex == Sex::M,
        }
    }

    /// The parent the marker is inherited from.
    pub fn transmitting_parent(self, ind: &Individual) -> Option<&str> {
        match self {
            MarkerKind::MtDna => ind.mother.as_deref(),
            MarkerKind::Y => ind.father.as_deref(),
        }
    }

    pub fn swapped(self) -> MarkerKind {
        match self {
            MarkerKind::MtDna => MarkerKind::Y,
            MarkerKind::Y => MarkerKind::MtDna,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HaplotypePopulation {
    pub marker: MarkerKind,
    pub labels: Vec<String>,
    pub frequencies: Vec<f64>,
}

impl HaplotypePopulation {
    pub fn new(marker: MarkerKind, labels: Vec<String>, frequencies: Vec<f64>) -> Result<Self> {
        if labels.len() < 2 {
            return Err(PedigreeError::Parameter(
                "a population needs at least two haplotypes".into(),
            ));
        }
        if labels.len() != frequencies.len() {
            return Err(PedigreeError::Parameter(format!(
                "{} haplotype labels but {} frequencies",
                labels.len(),
                frequencies.len()
            )));
        }
        let distinct: HashSet<&String> = labels.iter().collect();
        if distinct.len() != labels.len() {
            return Err(PedigreeError::Parameter(
                "haplotype labels must be distinct".into(),
            ));
        }
        if frequencies.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(PedigreeError::Parameter(
                "haplotype frequencies must be nonnegative".into(),
            ));
        }
        let total: f64 = frequencies.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(PedigreeError::Parameter(format!(
                "haplotype frequencies sum to {total}, not 1"
            )));
        }
        Ok(HaplotypePopulation {
            marker,
            labels,
            frequencies,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Uniform single-step mutation: a transmitted haplotype changes with
/// probability `rate`, to each other haplotype equally often.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MutationModel {
    pub rate: f64,
}

impl MutationModel {
    pub const DEFAULT_RATE: f64 = 0.001;

    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(PedigreeError::Parameter(format!(
                "mutation rate {rate} is outside [0, 1)"
            )));
        }
        Ok(MutationModel { rate })
    }
}

impl Default for MutationModel {
    fn default() -> Self {
        MutationModel {
            rate: Self::DEFAULT_RATE,
        }
    }
}

/// Marker readings by individual; anyone not listed is unobserved.
#[derive(Clone, Debug, PartialEq)]
pub struct DnaObservation {
    pub marker: MarkerKind,
    pub readings: BTreeMap<String, String>,
}

impl DnaObservation {
    pub fn new<'a>(
        marker: MarkerKind,
        readings: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Self {
        DnaObservation {
            marker,
            readings: readings
                .into_iter()
                .map(|(i, h)| (i.to_string(), h.to_string()))
                .collect(),
        }
    }
}
