//! Scenario files: a TOML document describing the hypotheses and every
//! evidence source. Paths inside a scenario are relative to the scenario file.
//! The accepted keys are listed in `docs/scenario-format.md`; unknown keys are
//! rejected.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use kinship_core::evidence::{CountPrior, CountQuantity, ItemKind};
use kinship_core::onomasticon::{IdentificationAssumption, Member, PriorSpec};
use kinship_core::Lr;
use serde::{Deserialize, Serialize, Serializer};

use crate::problem::{offset_location, CliError, Problem, ProblemKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub hypotheses: HypothesesSpec,
    #[serde(default)]
    pub onomasticon: Option<OnomasticonSpec>,
    #[serde(default)]
    pub dna: Option<DnaSpec>,
    #[serde(default)]
    pub direct: Vec<DirectSpec>,
    #[serde(default)]
    pub network: Option<NetworkSpec>,
    #[serde(default)]
    pub pedigrees: Option<PedigreesSpec>,
    #[serde(default)]
    pub selection: Option<SelectionSpec>,
    #[serde(default)]
    pub sweep: Vec<AxisSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesesSpec {
    #[serde(default = "default_null")]
    pub null_label: String,
    #[serde(default = "default_alt")]
    pub alt_label: String,
    /// Odds of H1 against H0; 1 with a warning when absent.
    #[serde(default)]
    pub prior_odds: Option<f64>,
    #[serde(default = "yes")]
    pub conditionally_independent: bool,
}

fn default_null() -> String {
    "Tomb=NTped".into()
}

fn default_alt() -> String {
    "Tomb≠NTped".into()
}

fn yes() -> bool {
    true
}

impl Default for HypothesesSpec {
    fn default() -> Self {
        HypothesesSpec {
            null_label: default_null(),
            alt_label: default_alt(),
            prior_odds: None,
            conditionally_independent: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnomasticonSpec {
    #[serde(default = "default_onomasticon_id")]
    pub id: String,
    #[serde(default)]
    pub tables: TablesSpec,
    pub members: Vec<Member>,
    #[serde(default)]
    pub sibling_groups: Vec<Vec<String>>,
    #[serde(default)]
    pub sibling_distinct: bool,
    #[serde(default)]
    pub ancestor_boost: f64,
    #[serde(default)]
    pub assumptions: Vec<IdentificationAssumption>,
}

fn default_onomasticon_id() -> String {
    "onomasticon".into()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TablesSpec {
    #[serde(default)]
    pub female: Option<TableSpec>,
    #[serde(default)]
    pub male: Option<TableSpec>,
}

/// Exactly one of `source` (a bundled table), `path` or `mix`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    #[serde(default)]
    pub source: Option<String>,
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub mix: Vec<MixPart>,
    #[serde(default)]
    pub prior: PriorSpec,
    /// Seed the urn with counts reconstructed from the table.
    #[serde(default = "yes")]
    pub use_counts: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixPart {
    pub weight: f64,
    #[serde(default)]
    pub source: Option<String>,
    #[serde(default)]
    pub path: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DnaSpec {
    #[serde(default = "default_dna_id")]
    pub id: String,
    /// Per-transmission mutation rate; 0.001 when absent.
    #[serde(default)]
    pub mutation_rate: Option<f64>,
    #[serde(default)]
    pub null_pedigree: Option<String>,
    #[serde(default)]
    pub alt_pedigree: Option<String>,
    #[serde(default)]
    pub markers: Vec<MarkerSpec>,
}

fn default_dna_id() -> String {
    "dna".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkerSpec {
    pub marker: String,
    pub haplotypes: Vec<String>,
    pub frequencies: Vec<f64>,
    #[serde(default)]
    pub readings: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectSpec {
    pub id: String,
    /// May be `inf`.
    #[serde(serialize_with = "as_lr")]
    pub lr: f64,
    #[serde(default)]
    pub kind: ItemKind,
    #[serde(default)]
    pub provenance: Option<String>,
}

fn as_lr<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    Lr::from_value(*x).serialize(s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub path: String,
    pub hypothesis: String,
    pub null_state: String,
    pub alt_state: String,
    /// Use the network's item LRs as evidence items instead of only
    /// reporting them as a cross-check.
    #[serde(default)]
    pub use_as_evidence: bool,
    #[serde(default)]
    pub items: Vec<NetworkItemSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkItemSpec {
    pub id: String,
    #[serde(default)]
    pub kind: ItemKind,
    pub evidence: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PedigreesSpec {
    pub candidates: Vec<CandidateSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateSpec {
    pub label: String,
    pub path: String,
    #[serde(default = "one")]
    pub prior: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionSpec {
    /// Per-trial probability; defaults to the onomasticon probability of the
    /// observed names under H1.
    #[serde(default)]
    pub probability: Option<f64>,
    #[serde(default = "default_quantity")]
    pub quantity: CountQuantity,
    pub trials: CountPrior,
}

fn default_quantity() -> CountQuantity {
    CountQuantity::OssuaryCount
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub path: String,
    pub values: Vec<toml::Value>,
}

/// A scenario as read from disk, with the raw tree kept for sweeps.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub path: PathBuf,
    /// The path as given, used in messages and reports.
    pub display: String,
    pub source: String,
    pub tree: toml::Table,
    pub scenario: Scenario,
}

impl Loaded {
    pub fn dir(&self) -> &Path {
        self.path.parent().unwrap_or(Path::new("."))
    }
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let display = path.display().to_string();
    let source = fs::read_to_string(path).map_err(|e| {
        CliError::Problems(vec![Problem::error(
            &display,
            ProblemKind::Io,
            kinship_core::Location::new(1, 1),
            "E_IO",
            format!("cannot read scenario: {e}"),
        )])
    })?;
    let parse_error = |e: toml::de::Error| {
        let loc = e
            .span()
            .map(|s| offset_location(&source, s.start))
            .unwrap_or_else(|| kinship_core::Location::new(1, 1));
        CliError::Problems(vec![Problem::error(
            &display,
            ProblemKind::Parse,
            loc,
            "E_SCENARIO_SYNTAX",
            e.message().to_string(),
        )])
    };
    let scenario: Scenario = toml::from_str(&source).map_err(parse_error)?;
    let tree: toml::Table = toml::from_str(&source).map_err(parse_error)?;
    Ok(Loaded {
        path: path.to_path_buf(),
        display,
        source,
        tree,
        scenario,
    })
}

/// Replaces the value at a dotted path (array elements by index). The path
/// must already exist so that typos are reported instead of ignored.
pub fn set_path(tree: &mut toml::Table, path: &str, value: toml::Value) -> Result<(), String> {
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(format!("malformed parameter path `{path}`"));
    }
    let missing = || format!("parameter path `{path}` does not resolve in the scenario");
    let (first, rest) = parts.split_first().ok_or_else(missing)?;
    let mut cur = tree.get_mut(*first).ok_or_else(missing)?;
    for part in rest {
        cur = match cur {
            toml::Value::Table(t) => t.get_mut(*part).ok_or_else(missing)?,
            toml::Value::Array(a) => {
                let i: usize = part.parse().map_err(|_| missing())?;
                a.get_mut(i).ok_or_else(missing)?
            }
            _ => return Err(missing()),
        };
    }
    *cur = value;
    Ok(())
}

/// Parses a command-line axis value: a TOML scalar, or a bare string.
pub fn parse_value(text: &str) -> toml::Value {
    let text = text.trim();
    match toml::from_str::<toml::Table>(&format!("v = {text}")) {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| toml::Value::String(text.to_string())),
        Err(_) => toml::Value::String(text.to_string()),
    }
}

/// Splits `path=v1,v2,...` into an axis.
pub fn parse_axis(arg: &str) -> Result<AxisSpec, String> {
    let (path, values) = arg
        .split_once('=')
        .ok_or_else(|| format!("axis `{arg}` is not of the form path=v1,v2,..."))?;
    let values: Vec<toml::Value> = values
        .split(',')
        .filter(|v| !v.trim().is_empty())
        .map(parse_value)
        .collect();
    if path.trim().is_empty() || values.is_empty() {
        return Err(format!("axis `{arg}` needs a path and at least one value"));
    }
    Ok(AxisSpec {
        path: path.trim().to_string(),
        values,
    })
}
