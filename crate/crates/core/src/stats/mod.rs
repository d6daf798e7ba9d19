//! Regression, Gaussianity and independence tests, and the providers that
//! answer the search procedures' questions from data or from a known model.

mod ci;
mod dataset;
mod hsic;
mod normality;
mod ols;
mod provider;

pub use ci::{fisher_z_ci, CiProvider};
pub use dataset::Dataset;
pub use hsic::{hsic_test, HSIC_MIN_N};
pub use normality::{shapiro_wilk, shapiro_wilk_seeded, SHAPIRO_MAX_N};
pub use ols::{ols_residuals, OlsFit};
pub use provider::{
    oracle_is_gaussian, oracle_pair_verdict, ColumnSource, GaussianityProvider, IndependenceProvider, PairVerdict,
    Providers, Side, WorkingColumn,
};

pub(crate) use provider::decide_pair;

use crate::error::{Error, Result};

/// Outcome of a hypothesis test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
}

impl TestResult {
    pub fn new(statistic: f64, p_value: f64, alpha: f64) -> Self {
        TestResult {
            statistic,
            p_value,
            reject: p_value < alpha,
        }
    }
}

/// Significance levels and sampling knobs shared by all data-driven tests.
#[derive(Clone, Debug, PartialEq)]
pub struct TestConfig {
    pub alpha_gauss: f64,
    pub alpha_indep: f64,
    pub alpha_ci: f64,
    /// HSIC runs on at most this many rows.
    pub hsic_subsample: usize,
    pub seed: u64,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            alpha_gauss: 0.05,
            alpha_indep: 0.001,
            alpha_ci: 0.01,
            hsic_subsample: 1500,
            seed: 0,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, a) in [
            ("alpha_gauss", self.alpha_gauss),
            ("alpha_indep", self.alpha_indep),
            ("alpha_ci", self.alpha_ci),
        ] {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::input(format!("{name} = {a} is not in (0, 1)")));
            }
        }
        if self.hsic_subsample < 2 {
            return Err(Error::input("hsic_subsample must be at least 2"));
        }
        Ok(())
    }
}
