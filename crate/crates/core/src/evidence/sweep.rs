use rayon::prelude::*;
use serde::Serialize;

use super::EvidenceError;

/// Largest grid a sweep will evaluate.
pub const SWEEP_LIMIT: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepAxis<V> {
    pub path: String,
    pub values: Vec<V>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow<V, R> {
    pub indices: Vec<usize>,
    pub point: Vec<(String, V)>,
    pub result: R,
}

fn indices_of(mut flat: usize, sizes: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; sizes.len()];
    for (slot, &n) in idx.iter_mut().zip(sizes).rev() {
        *slot = flat % n;
        flat /= n;
    }
    idx
}

/// Evaluates `eval` at every point of the Cartesian product of the axes.
/// Rows come back in lexicographic order of grid indices (last axis fastest)
/// whatever order the points were evaluated in; the first failing point in
/// that order determines the error.
pub fn sweep<V, R, E, F>(axes: &[SweepAxis<V>], eval: F) -> Result<Vec<SweepRow<V, R>>, E>
where
    V: Clone + Send + Sync,
    R: Send,
    E: From<EvidenceError> + Send,
    F: Fn(&[(String, V)]) -> Result<R, E> + Sync,
{
    if axes.is_empty() {
        return Err(EvidenceError::Parameter("no sweep axes".into()).into());
    }
    if let Some(a) = axes.iter().find(|a| a.values.is_empty()) {
        return Err(EvidenceError::Parameter(format!("axis `{}` has no values", a.path)).into());
    }
    let sizes: Vec<usize> = axes.iter().map(|a| a.values.len()).collect();
    let total = sizes
        .iter()
        .try_fold(1usize, |acc, &n| {
            acc.checked_mul(n).filter(|&t| t <= SWEEP_LIMIT)
        })
        .ok_or_else(|| {
            E::from(EvidenceError::Parameter(format!(
                "sweep grid exceeds {SWEEP_LIMIT} points"
            )))
        })?;
    let rows: Vec<Result<SweepRow<V, R>, E>> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let indices = indices_of(flat, &sizes);
            let point: Vec<(String, V)> = axes
                .iter()
                .zip(&indices)
                .map(|(a, &i)| (a.path.clone(), a.values[i].clone()))
                .collect();
            let result = eval(&point)?;
            Ok(SweepRow {
                indices,
                point,
                result,
            })
        })
        .collect();
    rows.into_iter().collect()
}
