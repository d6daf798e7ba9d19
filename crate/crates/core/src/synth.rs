//! Ground-truth linear models `x = B x + e` and sampling from them.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MixedGraph;
use crate::stats::Dataset;

/// Distribution of one disturbance term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Disturbance {
    /// N(0, 1).
    Gaussian,
    /// Lognormal(0, 1) shifted to zero mean.
    CenteredLognormal,
}

impl Disturbance {
    pub fn is_gaussian(self) -> bool {
        self == Disturbance::Gaussian
    }

    pub fn variance(self) -> f64 {
        match self {
            Disturbance::Gaussian => 1.0,
            Disturbance::CenteredLognormal => (std::f64::consts::E - 1.0) * std::f64::consts::E,
        }
    }

    fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Disturbance::Gaussian => rng.sample(StandardNormal),
            Disturbance::CenteredLognormal => {
                let ln = LogNormal::new(0.0, 1.0).expect("valid lognormal parameters");
                ln.sample(rng) - 0.5f64.exp()
            }
        }
    }
}

/// A DAG with edge coefficients and one disturbance per variable.
///
/// `b[(j, i)]` is the coefficient of `x_i` in the equation for `x_j`.
#[derive(Clone, Debug)]
pub struct NgDag {
    dag: MixedGraph,
    b: DMatrix<f64>,
    disturbances: Vec<Disturbance>,
}

impl NgDag {
    pub fn new(dag: MixedGraph, b: DMatrix<f64>, disturbances: Vec<Disturbance>) -> Result<Self> {
        let p = dag.p();
        if !dag.is_dag() {
            return Err(Error::input("model graph must be a DAG"));
        }
        if b.nrows() != p || b.ncols() != p || disturbances.len() != p {
            return Err(Error::input(format!(
                "model dimensions disagree: {p} vertices, {}x{} coefficients, {} disturbances",
                b.nrows(),
                b.ncols(),
                disturbances.len()
            )));
        }
        for j in 0..p {
            for i in 0..p {
                let w = b[(j, i)];
                if !w.is_finite() {
                    return Err(Error::input("non-finite coefficient"));
                }
                if (w != 0.0) != dag.has_directed(i, j) {
                    return Err(Error::input(format!(
                        "coefficient support disagrees with the graph at {} -> {}",
                        dag.name(i),
                        dag.name(j)
                    )));
                }
            }
        }
        Ok(NgDag { dag, b, disturbances })
    }

    pub fn p(&self) -> usize {
        self.dag.p()
    }

    pub fn dag(&self) -> &MixedGraph {
        &self.dag
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn disturbances(&self) -> &[Disturbance] {
        &self.disturbances
    }

    /// `true` where the disturbance is non-Gaussian.
    pub fn ng_flags(&self) -> Vec<bool> {
        self.disturbances.iter().map(|d| !d.is_gaussian()).collect()
    }

    pub fn total_effects(&self) -> DMatrix<f64> {
        total_effects(&self.b).expect("validated model is acyclic")
    }

    /// Row `i` gives `x_i` as a combination of unit-variance disturbances.
    pub fn loadings(&self) -> DMatrix<f64> {
        let mut a = self.total_effects();
        for (k, d) in self.disturbances.iter().enumerate() {
            let sd = d.variance().sqrt();
            a.column_mut(k).scale_mut(sd);
        }
        a
    }

    /// Population covariance `(I - B)^-1 D (I - B)^-T`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let a = self.loadings();
        &a * a.transpose()
    }

    /// Multiplies every coefficient by an independent random sign.
    pub fn randomize_signs<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for (i, j) in self.dag.directed_edges().collect::<Vec<_>>() {
            if rng.random_bool(0.5) {
                self.b[(j, i)] = -self.b[(j, i)];
            }
        }
    }
}

/// `(I - B)^-1` for a coefficient matrix whose support is acyclic.
pub fn total_effects(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = b.nrows();
    if b.ncols() != p {
        return Err(Error::input("coefficient matrix must be square"));
    }
    let mut g = MixedGraph::new(p);
    for j in 0..p {
        for i in 0..p {
            if b[(j, i)] != 0.0 {
                if i == j {
                    return Err(Error::input("coefficient matrix has a self-loop"));
                }
                g.add_directed(i, j).map_err(|_| Error::input("coefficient matrix has a two-cycle"))?;
            }
        }
    }
    let order = g
        .topological_order()
        .ok_or_else(|| Error::input("coefficient matrix is cyclic, I - B is not invertible this way"))?;
    let mut d = DMatrix::<f64>::identity(p, p);
    for &j in &order {
        for i in g.parents(j).collect::<Vec<_>>() {
            let w = b[(j, i)];
            for c in 0..p {
                d[(j, c)] += w * d[(i, c)];
            }
        }
    }
    Ok(d)
}

/// Independent generator streams derived from one master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Model = 1,
    Noise = 2,
    Subsample = 3,
    Repair = 4,
    Corruption = 5,
}

/// A ChaCha8 generator for stream `(purpose, index)` of `seed`.
pub fn substream(seed: u64, purpose: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 48) ^ index);
    rng
}

fn build<R: Rng + ?Sized>(p: usize, density: f64, ng_count: usize, rng: &mut R) -> NgDag {
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(rng);
    let mut dag = MixedGraph::new(p);
    let mut b = DMatrix::zeros(p, p);
    for a in 0..p {
        for c in a + 1..p {
            if density >= 1.0 || rng.random_bool(density) {
                let (from, to) = (order[a], order[c]);
                dag.add_directed(from, to).expect("fresh forward edge");
                b[(to, from)] = rng.random_range(0.5..=1.0);
            }
        }
    }
    let mut positions: Vec<usize> = (0..p).collect();
    positions.shuffle(rng);
    let mut disturbances = vec![Disturbance::Gaussian; p];
    for &k in positions.iter().take(ng_count) {
        disturbances[k] = Disturbance::CenteredLognormal;
    }
    NgDag { dag, b, disturbances }
}

/// Complete DAG in a random vertex order with `U(0.5, 1)` coefficients and
/// between `floor(p/3) + 1` and `p - 1` non-Gaussian disturbances.
pub fn random_complete_ngdag<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Result<NgDag> {
    if p < 2 {
        return Err(Error::input("a complete model needs at least two variables"));
    }
    let ng_count = rng.random_range(p / 3 + 1..=p - 1);
    Ok(build(p, 1.0, ng_count, rng))
}

/// Random DAG where each forward edge of a random order is present with
/// probability `density`, with exactly `ng_count` non-Gaussian disturbances.
pub fn random_ngdag<R: Rng + ?Sized>(p: usize, density: f64, ng_count: usize, rng: &mut R) -> Result<NgDag> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::input(format!("edge density {density} outside [0, 1]")));
    }
    if ng_count > p {
        return Err(Error::input(format!("{ng_count} non-Gaussian disturbances requested for {p} variables")));
    }
    Ok(build(p, density, ng_count, rng))
}

/// Draws `n` observations in topological order.
pub fn sample<R: Rng + ?Sized>(model: &NgDag, n: usize, rng: &mut R) -> Dataset {
    let p = model.p();
    let order = model.dag.topological_order().expect("validated model is acyclic");
    let mut cols = vec![vec![0.0; n]; p];
    for (k, col) in cols.iter_mut().enumerate() {
        let d = model.disturbances[k];
        for v in col.iter_mut() {
            *v = d.draw(rng);
        }
    }
    for &j in &order {
        for i in model.dag.parents(j).collect::<Vec<_>>() {
            let w = model.b[(j, i)];
            let (src, dst) = if i < j {
                let (lo, hi) = cols.split_at_mut(j);
                (&lo[i], &mut hi[0])
            } else {
                let (lo, hi) = cols.split_at_mut(i);
                (&hi[0], &mut lo[j])
            };
            for (x, &s) in dst.iter_mut().zip(src.iter()) {
                *x += w * s;
            }
        }
    }
    Dataset::from_columns_unchecked(model.dag.names().to_vec(), cols)
}
