use std::collections::HashSet;
use std::io::Read;

use serde::Serialize;

use super::{OnomasticonError, Result};
use crate::diag::{Diagnostic, Location};

/// Label of the catch-all category, always last.
pub const OTHER: &str = "Other";

/// Allowed deviation of the frequency sum from 1; published tables are rounded.
pub const SUM_TOLERANCE: f64 = 0.005;

/// Prefix marking a table as invented demo data.
pub const SYNTHETIC_PREFIX: &str = "SYNTHETIC";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NameTable {
    pub source_label: String,
    pub categories: Vec<String>,
    pub frequencies: Vec<f64>,
    pub sample_size: u64,
    /// Source line of each category row, when loaded from text.
    #[serde(skip)]
    lines: Vec<usize>,
}

const NONOSSUARY: &str = include_str!("../../data/ilan_nonossuary_female.csv");
const OSSUARY: &str = include_str!("../../data/ilan_ossuary_female.csv");
const SYNTHETIC_MALE: &str = include_str!("../../data/synthetic_male.csv");

fn format_err(line: usize, msg: impl Into<String>) -> OnomasticonError {
    OnomasticonError::Format {
        line,
        message: msg.into(),
    }
}

impl NameTable {
    pub fn new(
        source_label: &str,
        categories: Vec<String>,
        frequencies: Vec<f64>,
        sample_size: u64,
    ) -> Self {
        NameTable {
            source_label: source_label.to_string(),
            categories,
            frequencies,
            sample_size,
            lines: Vec::new(),
        }
    }

    /// Female names, nonossuary sources.
    pub fn ilan_nonossuary() -> NameTable {
        Self::from_csv(NONOSSUARY.as_bytes()).expect("bundled table parses")
    }

    /// Female names, ossuary inscriptions.
    pub fn ilan_ossuary() -> NameTable {
        Self::from_csv(OSSUARY.as_bytes()).expect("bundled table parses")
    }

    /// Invented male table for demonstrations.
    pub fn synthetic_male() -> NameTable {
        Self::from_csv(SYNTHETIC_MALE.as_bytes()).expect("bundled table parses")
    }

    /// Parses `name,frequency` rows preceded by a `# source=<label> n=<N>` line.
    /// Other `#` lines are comments. Only the format is checked here; see
    /// [`validate_table`] for the content rules.
    pub fn from_csv<R: Read>(reader: R) -> Result<NameTable> {
        let mut text = String::new();
        let mut reader = reader;
        reader
            .read_to_string(&mut text)
            .map_err(|e| format_err(0, e.to_string()))?;

        let mut label = None;
        let mut sample_size = None;
        let mut data = String::new();
        let mut data_lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if let Some(comment) = line.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(rest) = comment.strip_prefix("source=") {
                    let (l, n) = rest.rsplit_once(" n=").ok_or_else(|| {
                        format_err(
                            line_no,
                            "metadata line needs `n=<N>` after the source label",
                        )
                    })?;
                    let n: u64 = n.trim().parse().map_err(|_| {
                        format_err(
                            line_no,
                            format!("sample size `{}` is not a nonnegative integer", n.trim()),
                        )
                    })?;
                    label = Some(l.trim().to_string());
                    sample_size = Some(n);
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            data.push_str(raw);
            data.push('\n');
            data_lines.push(line_no);
        }
        let label =
            label.ok_or_else(|| format_err(1, "missing `# source=<label> n=<N>` metadata line"))?;
        let sample_size = sample_size.expect("set together with label");

        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(data.as_bytes());
        let header_line = data_lines.first().copied().unwrap_or(1);
        let headers = rdr
            .headers()
            .map_err(|e| format_err(header_line, e.to_string()))?;
        if headers.iter().collect::<Vec<_>>() != ["name", "frequency"] {
            return Err(format_err(header_line, "header must be `name,frequency`"));
        }
        let mut categories = Vec::new();
        let mut frequencies = Vec::new();
        let mut lines = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let line_no = data_lines.get(k + 1).copied().unwrap_or(0);
            let rec = rec.map_err(|e| format_err(line_no, e.to_string()))?;
            let f: f64 = rec[1].parse().map_err(|_| {
                format_err(line_no, format!("frequency `{}` is not a number", &rec[1]))
            })?;
            categories.push(rec[0].to_string());
            frequencies.push(f);
            lines.push(line_no);
        }
        Ok(NameTable {
            source_label: label,
            categories,
            frequencies,
            sample_size,
            lines,
        })
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn is_synthetic(&self) -> bool {
        self.source_label.starts_with(SYNTHETIC_PREFIX)
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == name)
    }

    /// Category of an observed name; names outside the table fall into `Other`.
    pub fn category_of(&self, name: &str) -> usize {
        self.index(name)
            .unwrap_or_else(|| self.index(OTHER).expect("valid tables contain Other"))
    }

    /// Frequencies with `Other` replaced by `1 - Σ(named categories)`, clamped
    /// at zero, so that the vector sums to one.
    pub fn effective_frequencies(&self) -> Vec<f64> {
        let named: f64 = self
            .categories
            .iter()
            .zip(&self.frequencies)
            .filter(|(c, _)| *c != OTHER)
            .map(|(_, f)| f)
            .sum();
        self.categories
            .iter()
            .zip(&self.frequencies)
            .map(|(c, &f)| {
                if c == OTHER {
                    (1.0 - named).max(0.0)
                } else {
                    f
                }
            })
            .collect()
    }

    /// Weighted mix of tables over the same categories. Frequencies and the
    /// sample size are mixed with the (normalized) weights.
    pub fn mix(parts: &[(f64, &NameTable)]) -> Result<NameTable> {
        let first = parts
            .first()
            .ok_or_else(|| OnomasticonError::Parameter("nothing to mix".into()))?
            .1;
        if parts.iter().any(|(w, _)| !w.is_finite() || *w < 0.0) {
            return Err(OnomasticonError::Parameter(
                "mixing weights must be nonnegative".into(),
            ));
        }
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if total <= 0.0 {
            return Err(OnomasticonError::Parameter(
                "mixing weights are all zero".into(),
            ));
        }
        if let Some((_, t)) = parts.iter().find(|(_, t)| t.categories != first.categories) {
            return Err(OnomasticonError::Parameter(format!(
                "`{}` and `{}` have different categories",
                first.source_label, t.source_label
            )));
        }
        let mut freq = vec![0.0; first.len()];
        let mut n = 0.0;
        for (w, t) in parts {
            for (acc, f) in freq.iter_mut().zip(&t.frequencies) {
                *acc += w / total * f;
            }
            n += w / total * t.sample_size as f64;
        }
        let label = parts
            .iter()
            .map(|(w, t)| format!("{}×{}", w / total, t.source_label))
            .collect::<Vec<_>>()
            .join(" + ");
        let label = if parts.iter().any(|(_, t)| t.is_synthetic()) {
            format!("{SYNTHETIC_PREFIX} mix: {label}")
        } else {
            format!("mix: {label}")
        };
        Ok(NameTable::new(
            &label,
            first.categories.clone(),
            freq,
            n.round().max(1.0) as u64,
        ))
    }

    fn loc(&self, i: usize) -> Location {
        Location::new(self.lines.get(i).copied().unwrap_or(0), 1)
    }
}

pub fn validate_table(t: &NameTable) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let top = Location::new(1, 1);
    if t.frequencies.len() != t.categories.len() {
        out.push(Diagnostic::error(
            top,
            "E_TABLE_SHAPE",
            "categories and frequencies differ in length",
        ));
        return out;
    }
    let mut seen = HashSet::new();
    for (i, c) in t.categories.iter().enumerate() {
        if c.is_empty() {
            out.push(Diagnostic::error(
                t.loc(i),
                "E_TABLE_NAME",
                "empty category name",
            ));
        } else if !seen.insert(c.as_str()) {
            out.push(Diagnostic::error(
                t.loc(i),
                "E_TABLE_DUPLICATE",
                format!("category `{c}` listed twice"),
            ));
        }
    }
    let others: Vec<usize> = (0..t.len()).filter(|&i| t.categories[i] == OTHER).collect();
    if others.len() != 1 || others[0] + 1 != t.len() {
        out.push(Diagnostic::error(
            top,
            "E_TABLE_OTHER",
            format!("`{OTHER}` must appear exactly once, as the last category"),
        ));
    }
    for (i, &f) in t.frequencies.iter().enumerate() {
        if !f.is_finite() || f < 0.0 {
            out.push(Diagnostic::error(
                t.loc(i),
                "E_TABLE_NEGATIVE",
                format!("frequency of `{}` is {f}", t.categories[i]),
            ));
        }
    }
    let sum: f64 = t.frequencies.iter().sum();
    if sum.is_nan() || (sum - 1.0).abs() > SUM_TOLERANCE {
        out.push(Diagnostic::error(
            top,
            "E_TABLE_NOT_NORMALIZED",
            format!("frequencies sum to {sum}, more than {SUM_TOLERANCE} away from 1"),
        ));
    }
    if t.sample_size < 1 {
        out.push(Diagnostic::error(
            top,
            "E_TABLE_SAMPLE_SIZE",
            "sample size must be at least 1",
        ));
    }
    crate::diag::sort_diagnostics(&mut out);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counts {
    pub counts: Vec<u64>,
    /// The rounded named counts exceeded N and `Other` was clamped to zero.
    pub clamped: bool,
}

impl Counts {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Pseudo-counts `round(f_i · N)` for named categories, with `Other` taking the
/// remainder so the counts sum to N. When the named counts alone exceed N they
/// are kept, `Other` is clamped at zero and the result is flagged.
pub fn counts_from_frequencies(t: &NameTable) -> Counts {
    let n = t.sample_size;
    let mut counts: Vec<u64> = t
        .categories
        .iter()
        .zip(&t.frequencies)
        .map(|(c, &f)| {
            if c == OTHER {
                0
            } else {
                (f * n as f64).round().max(0.0) as u64
            }
        })
        .collect();
    let named: u64 = counts.iter().sum();
    let clamped = named > n;
    if let Some(o) = t.index(OTHER) {
        counts[o] = n.saturating_sub(named);
    }
    Counts { counts, clamped }
}
