use std::collections::BTreeSet;

use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

use super::dataset::mean;
use super::{Dataset, TestResult};
use crate::error::{Error, Result};
use crate::graph::{d_separated, MixedGraph};

/// Pearson correlation matrix of the given columns.
fn correlation(cols: &[&[f64]]) -> DMatrix<f64> {
    let k = cols.len();
    let centred: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| {
            let m = mean(c);
            c.iter().map(|v| v - m).collect()
        })
        .collect();
    let norms: Vec<f64> = centred.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let mut r = DMatrix::identity(k, k);
    for a in 0..k {
        for b in a + 1..k {
            let dot: f64 = centred[a].iter().zip(&centred[b]).map(|(x, y)| x * y).sum();
            let v = dot / (norms[a] * norms[b]);
            r[(a, b)] = v;
            r[(b, a)] = v;
        }
    }
    r
}

/// Fisher-z test from a correlation matrix over at least `{i, j} ∪ s`.
fn fisher_z_from(corr: &DMatrix<f64>, n: usize, i: usize, j: usize, s: &BTreeSet<usize>, alpha: f64) -> Result<TestResult> {
    if i == j || s.contains(&i) || s.contains(&j) {
        return Err(Error::input("conditional independence query needs distinct variables outside the conditioning set"));
    }
    if s.len() + 4 > n {
        return Err(Error::input(format!("conditioning on {} variables needs more than {n} observations", s.len())));
    }
    let idx: Vec<usize> = [i, j].into_iter().chain(s.iter().copied()).collect();
    let sub = DMatrix::from_fn(idx.len(), idx.len(), |a, b| corr[(idx[a], idx[b])]);
    let singular = || Error::Numerical(format!("correlation matrix of variables {idx:?} is singular"));
    let chol = sub.cholesky().ok_or_else(singular)?;
    if chol.l_dirty().diagonal().iter().any(|d| d * d < 1e-12) {
        return Err(singular());
    }
    let prec = chol.inverse();
    let r = (-prec[(0, 1)] / (prec[(0, 0)] * prec[(1, 1)]).sqrt()).clamp(-1.0 + 1e-15, 1.0 - 1e-15);
    let stat = r.atanh().abs() * ((n - s.len()) as f64 - 3.0).sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p = (2.0 * normal.sf(stat)).clamp(0.0, 1.0);
    Ok(TestResult::new(stat, p, alpha))
}

/// Partial-correlation test of `x_i ⊥ x_j | x_S` with the Fisher z transform.
pub fn fisher_z_ci(data: &Dataset, i: usize, j: usize, s: &BTreeSet<usize>, alpha: f64) -> Result<TestResult> {
    let p = data.p();
    if i >= p || j >= p || s.iter().any(|&v| v >= p) {
        return Err(Error::input("variable index out of range in CI query"));
    }
    let mut vars: Vec<usize> = vec![i, j];
    vars.extend(s.iter().copied());
    let cols: Vec<&[f64]> = vars.iter().map(|&v| data.column(v)).collect();
    let corr = correlation(&cols);
    let local: BTreeSet<usize> = (2..vars.len()).collect();
    fisher_z_from(&corr, data.n(), 0, 1, &local, alpha)
}

/// Source of conditional-independence decisions for skeleton search.
#[derive(Clone, Debug)]
pub enum CiProvider<'a> {
    /// Fisher-z tests on a dataset; the correlation matrix is computed once.
    Data { corr: DMatrix<f64>, n: usize, alpha: f64 },
    /// d-separation in a known DAG.
    Oracle(&'a MixedGraph),
}

impl<'a> CiProvider<'a> {
    pub fn data(data: &Dataset, alpha: f64) -> Self {
        let cols: Vec<&[f64]> = data.columns().iter().map(Vec::as_slice).collect();
        CiProvider::Data { corr: correlation(&cols), n: data.n(), alpha }
    }

    pub fn oracle(dag: &'a MixedGraph) -> Self {
        CiProvider::Oracle(dag)
    }

    pub fn p(&self) -> usize {
        match self {
            CiProvider::Data { corr, .. } => corr.nrows(),
            CiProvider::Oracle(g) => g.p(),
        }
    }

    /// Whether `x_i ⊥ x_j | x_S` is accepted.
    pub fn independent(&self, i: usize, j: usize, s: &BTreeSet<usize>) -> Result<bool> {
        match self {
            CiProvider::Data { corr, n, alpha } => Ok(!fisher_z_from(corr, *n, i, j, s, *alpha)?.reject),
            CiProvider::Oracle(g) => d_separated(g, i, j, s),
        }
    }
}
