use serde::{Deserialize, Serialize};

use super::table::{counts_from_frequencies, validate_table, Counts, NameTable};
use super::{OnomasticonError, Result};
use crate::diag::has_errors;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirichletPrior {
    concentrations: Vec<f64>,
}

impl DirichletPrior {
    pub fn new(concentrations: Vec<f64>) -> Result<Self> {
        if concentrations.is_empty() {
            return Err(OnomasticonError::Parameter("empty Dirichlet prior".into()));
        }
        if let Some(a) = concentrations
            .iter()
            .find(|a| !(a.is_finite() && **a > 0.0))
        {
            return Err(OnomasticonError::Parameter(format!(
                "Dirichlet concentrations must be positive and finite, got {a}"
            )));
        }
        Ok(DirichletPrior { concentrations })
    }

    /// The same concentration `alpha` on each of `k` categories.
    pub fn uniform(k: usize, alpha: f64) -> Result<Self> {
        Self::new(vec![alpha; k])
    }

    /// `α_i = total · f_i` with the table's effective frequencies.
    pub fn scaled(table: &NameTable, total: f64) -> Result<Self> {
        Self::new(
            table
                .effective_frequencies()
                .iter()
                .map(|f| total * f)
                .collect(),
        )
    }

    pub fn concentrations(&self) -> &[f64] {
        &self.concentrations
    }

    pub fn len(&self) -> usize {
        self.concentrations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concentrations.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.concentrations.iter().sum()
    }
}

fn check_lengths(prior: &DirichletPrior, counts: &[u64]) -> Result<()> {
    if prior.len() != counts.len() {
        return Err(OnomasticonError::Parameter(format!(
            "prior has {} categories but counts have {}",
            prior.len(),
            counts.len()
        )));
    }
    Ok(())
}

fn check_index(prior: &DirichletPrior, i: usize) -> Result<()> {
    if i >= prior.len() {
        return Err(OnomasticonError::Parameter(format!(
            "category {i} out of range for {} categories",
            prior.len()
        )));
    }
    Ok(())
}

/// `(α_i + c_i) / (α_0 + N)`.
pub fn posterior_predictive(prior: &DirichletPrior, counts: &[u64], i: usize) -> Result<f64> {
    check_lengths(prior, counts)?;
    check_index(prior, i)?;
    let n: u64 = counts.iter().sum();
    Ok((prior.concentrations[i] + counts[i] as f64) / (prior.total() + n as f64))
}

/// Probability of an ordered sequence of category draws from the urn that
/// starts at `counts` and gains one ball per draw.
pub fn sequence_likelihood(prior: &DirichletPrior, counts: &[u64], draws: &[usize]) -> Result<f64> {
    check_lengths(prior, counts)?;
    let mut c = counts.to_vec();
    let mut p = 1.0;
    for &i in draws {
        p *= posterior_predictive(prior, &c, i)?;
        c[i] += 1;
    }
    Ok(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSpec {
    /// `α_i = alpha` for every category.
    Uniform { alpha: f64 },
    /// `α_i = total · f_i`; large totals approach fixed frequencies.
    Scaled { total: f64 },
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec::Uniform { alpha: 1.0 }
    }
}

/// A name table together with its prior and pseudo-counts: the urn from which
/// names of one sex are drawn.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NameModel {
    pub table: NameTable,
    pub prior: DirichletPrior,
    pub counts: Counts,
}

impl NameModel {
    /// With `use_counts` false the table only shapes the prior (if scaled) and
    /// the urn starts empty.
    pub fn new(table: NameTable, spec: PriorSpec, use_counts: bool) -> Result<Self> {
        let diags = validate_table(&table);
        if has_errors(&diags) {
            return Err(OnomasticonError::Invalid {
                label: table.source_label.clone(),
                diagnostics: diags,
            });
        }
        let prior = match spec {
            PriorSpec::Uniform { alpha } => DirichletPrior::uniform(table.len(), alpha)?,
            PriorSpec::Scaled { total } => DirichletPrior::scaled(&table, total)?,
        };
        let counts = if use_counts {
            counts_from_frequencies(&table)
        } else {
            Counts {
                counts: vec![0; table.len()],
                clamped: false,
            }
        };
        Ok(NameModel {
            table,
            prior,
            counts,
        })
    }

    pub fn predictive(&self, name: &str) -> f64 {
        posterior_predictive(
            &self.prior,
            &self.counts.counts,
            self.table.category_of(name),
        )
        .expect("model is consistent")
    }

    pub fn sequence_likelihood<S: AsRef<str>>(&self, names: &[S]) -> f64 {
        let draws: Vec<usize> = names
            .iter()
            .map(|n| self.table.category_of(n.as_ref()))
            .collect();
        sequence_likelihood(&self.prior, &self.counts.counts, &draws).expect("model is consistent")
    }

    /// Like [`NameModel::sequence_likelihood`] but rejects names outside the table.
    pub fn strict_sequence_likelihood<S: AsRef<str>>(&self, names: &[S]) -> Result<f64> {
        let draws = names
            .iter()
            .map(|n| {
                self.table
                    .index(n.as_ref())
                    .ok_or_else(|| OnomasticonError::UnknownName(n.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        sequence_likelihood(&self.prior, &self.counts.counts, &draws)
    }
}
