use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use super::hsic::hsic_test;
use super::normality::shapiro_wilk_seeded;
use super::ols::ols_residuals;
use super::{Dataset, TestConfig};
use crate::error::{Error, Result};
use crate::synth::NgDag;

/// Relative size below which a population loading counts as zero.
const LOADING_TOL: f64 = 1e-9;

/// A variable or regression residual that tests are run on.
///
/// `Sample` holds observations. `Loadings` holds the population coefficients
/// on the unit-variance disturbances, so inner products are covariances.
#[derive(Clone, Debug, PartialEq)]
pub enum WorkingColumn {
    Sample(Vec<f64>),
    Loadings(Vec<f64>),
}

impl WorkingColumn {
    /// Residual after regressing this column on `regressors` (with intercept
    /// for samples).
    pub fn residual_on(&self, regressors: &[&WorkingColumn]) -> Result<WorkingColumn> {
        match self {
            WorkingColumn::Sample(y) => {
                let xs = regressors
                    .iter()
                    .map(|c| match c {
                        WorkingColumn::Sample(x) => Ok(x.as_slice()),
                        WorkingColumn::Loadings(_) => Err(mixed_kinds()),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(WorkingColumn::Sample(ols_residuals(y, &xs)?.residuals))
            }
            WorkingColumn::Loadings(y) => {
                let xs = regressors
                    .iter()
                    .map(|c| match c {
                        WorkingColumn::Loadings(x) if x.len() == y.len() => Ok(x.as_slice()),
                        WorkingColumn::Loadings(_) => Err(Error::input("loading vectors differ in length")),
                        WorkingColumn::Sample(_) => Err(mixed_kinds()),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(WorkingColumn::Loadings(project_out(y, &xs)?))
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            WorkingColumn::Sample(v) | WorkingColumn::Loadings(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn mixed_kinds() -> Error {
    Error::input("cannot combine sample columns with population loadings")
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Orthogonal projection of `y` onto the complement of `span(xs)`.
fn project_out(y: &[f64], xs: &[&[f64]]) -> Result<Vec<f64>> {
    let k = xs.len();
    if k == 0 {
        return Ok(y.to_vec());
    }
    let gram = DMatrix::from_fn(k, k, |a, b| dot(xs[a], xs[b]));
    let rhs = DVector::from_fn(k, |a, _| dot(xs[a], y));
    let coef = gram
        .cholesky()
        .ok_or_else(|| Error::Numerical("population regressors are linearly dependent".into()))?
        .solve(&rhs);
    let mut out = y.to_vec();
    for (c, x) in coef.iter().zip(xs) {
        for (o, v) in out.iter_mut().zip(x.iter()) {
            *o -= c * v;
        }
    }
    Ok(out)
}

/// Where working columns come from: observed data or a known model.
#[derive(Clone, Debug)]
pub enum ColumnSource<'a> {
    Data(&'a Dataset),
    /// Rows are the loadings of each variable.
    Oracle(DMatrix<f64>),
}

impl ColumnSource<'_> {
    pub fn p(&self) -> usize {
        match self {
            ColumnSource::Data(d) => d.p(),
            ColumnSource::Oracle(a) => a.nrows(),
        }
    }

    pub fn variable(&self, i: usize) -> WorkingColumn {
        match self {
            ColumnSource::Data(d) => WorkingColumn::Sample(d.column(i).to_vec()),
            ColumnSource::Oracle(a) => WorkingColumn::Loadings(a.row(i).iter().copied().collect()),
        }
    }

    /// `x_i` with the influence of `x_on` regressed out.
    pub fn regressed(&self, i: usize, on: &BTreeSet<usize>) -> Result<WorkingColumn> {
        if on.contains(&i) {
            return Err(Error::input("a variable cannot be regressed on itself"));
        }
        let y = self.variable(i);
        let xs: Vec<WorkingColumn> = on.iter().map(|&k| self.variable(k)).collect();
        let refs: Vec<&WorkingColumn> = xs.iter().collect();
        y.residual_on(&refs)
    }
}

/// Decides whether a working column is Gaussian.
#[derive(Clone, Debug)]
pub enum GaussianityProvider<'a> {
    /// Shapiro-Wilk at `alpha_gauss`: Gaussian unless rejected.
    Data(TestConfig),
    /// Gaussian iff every disturbance with a nonzero loading is Gaussian.
    Oracle(&'a NgDag),
}

impl GaussianityProvider<'_> {
    pub fn is_gaussian(&self, col: &WorkingColumn) -> Result<bool> {
        match (self, col) {
            (GaussianityProvider::Data(cfg), WorkingColumn::Sample(x)) => {
                Ok(!shapiro_wilk_seeded(x, cfg.alpha_gauss, cfg.seed)?.reject)
            }
            (GaussianityProvider::Oracle(model), WorkingColumn::Loadings(a)) => {
                check_len(a, model.p())?;
                let tol = LOADING_TOL * norm(a);
                if tol == 0.0 {
                    return Err(Error::Numerical("working column vanished".into()));
                }
                Ok(a.iter()
                    .zip(model.disturbances())
                    .all(|(v, d)| v.abs() <= tol || d.is_gaussian()))
            }
            _ => Err(mixed_kinds()),
        }
    }
}

fn check_len(a: &[f64], p: usize) -> Result<()> {
    if a.len() != p {
        return Err(Error::input(format!("loading vector has length {}, model has {p} disturbances", a.len())));
    }
    Ok(())
}

/// Decides whether two working columns are independent.
#[derive(Clone, Debug)]
pub enum IndependenceProvider<'a> {
    /// HSIC at `alpha_indep`: independent unless rejected.
    Data(TestConfig),
    /// Darmois-Skitovitch: independent iff uncorrelated and every disturbance
    /// loading on both columns is Gaussian.
    Oracle(&'a NgDag),
}

impl IndependenceProvider<'_> {
    pub fn independent(&self, a: &WorkingColumn, b: &WorkingColumn) -> Result<bool> {
        match (self, a, b) {
            (IndependenceProvider::Data(cfg), WorkingColumn::Sample(x), WorkingColumn::Sample(y)) => {
                Ok(!hsic_test(x, y, cfg)?.reject)
            }
            (IndependenceProvider::Oracle(model), WorkingColumn::Loadings(u), WorkingColumn::Loadings(v)) => {
                check_len(u, model.p())?;
                check_len(v, model.p())?;
                let (nu, nv) = (norm(u), norm(v));
                if nu == 0.0 || nv == 0.0 {
                    return Err(Error::Numerical("working column vanished".into()));
                }
                if dot(u, v).abs() > LOADING_TOL * nu * nv {
                    return Ok(false);
                }
                Ok(u.iter().zip(v).zip(model.disturbances()).all(|((x, y), d)| {
                    x.abs() <= LOADING_TOL * nu || y.abs() <= LOADING_TOL * nv || d.is_gaussian()
                }))
            }
            _ => Err(mixed_kinds()),
        }
    }
}

/// Everything the DEP search consumes, from one source.
#[derive(Clone, Debug)]
pub struct Providers<'a> {
    pub columns: ColumnSource<'a>,
    pub gauss: GaussianityProvider<'a>,
    pub indep: IndependenceProvider<'a>,
}

impl<'a> Providers<'a> {
    pub fn data(data: &'a Dataset, config: &TestConfig) -> Self {
        Providers {
            columns: ColumnSource::Data(data),
            gauss: GaussianityProvider::Data(config.clone()),
            indep: IndependenceProvider::Data(config.clone()),
        }
    }

    pub fn oracle(model: &'a NgDag) -> Self {
        Providers {
            columns: ColumnSource::Oracle(model.loadings()),
            gauss: GaussianityProvider::Oracle(model),
            indep: IndependenceProvider::Oracle(model),
        }
    }
}

/// Outcome of examining one adjacent pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PairVerdict {
    Independent,
    IToJ,
    JToI,
    BcaNonempty,
    BothGaussian,
}

/// Which of the two residual-independence tests of a pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    /// Concerns `v_i` (Gaussianity) or `v_i` against `u_j` (independence).
    I,
    /// Concerns `v_j`, or `v_j` against `u_i`.
    J,
}

/// The pairwise decision: Gaussian endpoints first, then the two residual
/// independence tests, `u_j` being `v_j` with `v_i` regressed out.
pub(crate) fn decide_pair(
    vi: &WorkingColumn,
    vj: &WorkingColumn,
    mut gaussian: impl FnMut(Side, &WorkingColumn) -> Result<bool>,
    mut independent: impl FnMut(Side, &dyn Fn() -> Result<(WorkingColumn, WorkingColumn)>) -> Result<bool>,
) -> Result<PairVerdict> {
    let gi = gaussian(Side::I, vi)?;
    let gj = gaussian(Side::J, vj)?;
    match (gi, gj) {
        (true, true) => return Ok(PairVerdict::BothGaussian),
        (true, false) => return Ok(PairVerdict::IToJ),
        (false, true) => return Ok(PairVerdict::JToI),
        (false, false) => {}
    }
    let i_side = || Ok((vi.clone(), vj.residual_on(&[vi])?));
    let j_side = || Ok((vj.clone(), vi.residual_on(&[vj])?));
    let a = independent(Side::I, &i_side)?;
    let b = independent(Side::J, &j_side)?;
    Ok(match (a, b) {
        (true, false) => PairVerdict::IToJ,
        (false, true) => PairVerdict::JToI,
        (false, false) => PairVerdict::BcaNonempty,
        (true, true) => PairVerdict::Independent,
    })
}

/// Whether `x_i` is Gaussian in the model: every disturbance of `x_i` and its
/// ancestors is Gaussian.
pub fn oracle_is_gaussian(model: &NgDag, i: usize) -> bool {
    let d = model.disturbances();
    d[i].is_gaussian() && model.dag().ancestors(i).iter().all(|&k| d[k].is_gaussian())
}

/// The verdict the pairwise decision reaches at the population level once
/// the variables in `removed` have been regressed out of both `x_i` and `x_j`.
pub fn oracle_pair_verdict(model: &NgDag, i: usize, j: usize, removed: &BTreeSet<usize>) -> Result<PairVerdict> {
    if i == j || i >= model.p() || j >= model.p() {
        return Err(Error::input("pair verdict needs two distinct variables of the model"));
    }
    let src = ColumnSource::Oracle(model.loadings());
    let vi = src.regressed(i, removed)?;
    let vj = src.regressed(j, removed)?;
    let gauss = GaussianityProvider::Oracle(model);
    let indep = IndependenceProvider::Oracle(model);
    decide_pair(
        &vi,
        &vj,
        |_, c| gauss.is_gaussian(c),
        |_, cols| {
            let (a, b) = cols()?;
            indep.independent(&a, &b)
        },
    )
}
