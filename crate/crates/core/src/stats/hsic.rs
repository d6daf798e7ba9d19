use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Gamma};

use super::{TestConfig, TestResult};
use crate::error::{Error, Result};

/// Smallest sample the gamma approximation is used for.
pub const HSIC_MIN_N: usize = 20;

/// Rows kept when a sample of size `n` is capped at `cap`, drawn with `seed`.
pub(crate) fn subsample_rows(n: usize, cap: usize, seed: u64) -> Option<Vec<usize>> {
    if n <= cap {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample_indices(&mut rng, n, cap).into_vec();
    idx.sort_unstable();
    Some(idx)
}

/// HSIC independence test with Gaussian kernels (median-heuristic widths)
/// and the gamma approximation to the null distribution of `n * HSIC_b`.
pub fn hsic_test(x: &[f64], y: &[f64], config: &TestConfig) -> Result<TestResult> {
    if x.len() != y.len() {
        return Err(Error::input(format!("HSIC inputs differ in length: {} vs {}", x.len(), y.len())));
    }
    match subsample_rows(x.len(), config.hsic_subsample, config.seed) {
        Some(rows) => {
            let xs: Vec<f64> = rows.iter().map(|&r| x[r]).collect();
            let ys: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
            hsic_full(&xs, &ys, config.alpha_indep)
        }
        None => hsic_full(x, y, config.alpha_indep),
    }
}

/// Centred Gram matrix pieces: the upper triangle of the kernel matrix packed
/// row by row (row `i` holds columns `i..n`), its row means, grand mean and off-diagonal mean.
struct Gram {
    k: Vec<f64>,
    row_mean: Vec<f64>,
    grand_mean: f64,
    off_diag_mean: f64,
}

/// Number of pairs `i < j` with `sorted[j] - sorted[i] <= t`.
fn pairs_within(sorted: &[f64], t: f64) -> usize {
    let mut count = 0;
    let mut lo = 0;
    for (j, &v) in sorted.iter().enumerate() {
        while v - sorted[lo] > t {
            lo += 1;
        }
        count += j - lo;
    }
    count
}

/// Median of the positive pairwise distances, exactly, in `O(n log n)`
/// expected time: bisection on the distance until few candidates remain.
fn median_distance(x: &[f64]) -> Option<f64> {
    let mut sorted = x.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    let ties = pairs_within(&sorted, 0.0);
    let positive = n * (n - 1) / 2 - ties;
    if positive == 0 {
        return None;
    }
    // 1-based rank among positive distances, then among all distances
    let rank = ties + positive / 2 + 1;
    let (mut lo, mut hi) = (0.0, sorted[n - 1] - sorted[0]);
    // invariant: pairs_within(lo) < rank <= pairs_within(hi)
    loop {
        let below = pairs_within(&sorted, lo);
        let inside = pairs_within(&sorted, hi) - below;
        if inside <= 4 * n {
            let mut cand = Vec::with_capacity(inside);
            let mut start = 0;
            for (j, &v) in sorted.iter().enumerate() {
                while v - sorted[start] > hi {
                    start += 1;
                }
                for &u in &sorted[start..j] {
                    let d = v - u;
                    if d > lo {
                        cand.push(d);
                    }
                }
            }
            let k = rank - below - 1;
            let (_, m, _) = cand.select_nth_unstable_by(k, f64::total_cmp);
            return Some(*m);
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Some(hi);
        }
        if pairs_within(&sorted, mid) >= rank {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

fn gram(x: &[f64]) -> Result<Gram> {
    let n = x.len();
    let med = median_distance(x).ok_or_else(|| Error::input("HSIC input column is constant"))?;
    // kernel exp(-d^2 / (2 s^2)) with s^2 = median(d^2) / 2
    let inv = 1.0 / (med * med);
    let mut k = Vec::with_capacity(n * (n + 1) / 2);
    let mut row_sum = vec![0.0; n];
    for i in 0..n {
        k.push(1.0);
        row_sum[i] += 1.0;
        for j in i + 1..n {
            let d = x[i] - x[j];
            let e = d * d * inv;
            // past this point the result is subnormal, which is slow and negligible
            let v = if e < 700.0 { (-e).exp() } else { 0.0 };
            k.push(v);
            row_sum[i] += v;
            row_sum[j] += v;
        }
    }
    let total: f64 = row_sum.iter().sum();
    let nf = n as f64;
    Ok(Gram {
        k,
        row_mean: row_sum.iter().map(|s| s / nf).collect(),
        grand_mean: total / (nf * nf),
        off_diag_mean: (total - nf) / (nf * (nf - 1.0)),
    })
}

fn hsic_full(x: &[f64], y: &[f64], alpha: f64) -> Result<TestResult> {
    let n = x.len();
    if n < HSIC_MIN_N {
        return Err(Error::input(format!("HSIC needs at least {HSIC_MIN_N} observations, got {n}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::input("HSIC input contains a non-finite value"));
    }
    let gk = gram(x)?;
    let gl = gram(y)?;
    let mut cross = 0.0;
    let mut cross_sq_off = 0.0;
    let mut start = 0;
    for i in 0..n {
        let len = n - i;
        let (ki, li) = (&gk.k[start..start + len], &gl.k[start..start + len]);
        start += len;
        let (ak, al) = (gk.grand_mean - gk.row_mean[i], gl.grand_mean - gl.row_mean[i]);
        let kc = ki[0] - gk.row_mean[i] + ak;
        let lc = li[0] - gl.row_mean[i] + al;
        cross += kc * lc;
        let mut off = 0.0;
        let mut off_sq = 0.0;
        for j in i + 1..n {
            let kc = ki[j - i] - gk.row_mean[j] + ak;
            let lc = li[j - i] - gl.row_mean[j] + al;
            let prod = kc * lc;
            off += prod;
            off_sq += prod * prod;
        }
        cross += 2.0 * off;
        cross_sq_off += 2.0 * off_sq;
    }
    let nf = n as f64;
    let statistic = (cross / nf).max(0.0);
    let var = 72.0 * (nf - 4.0) * (nf - 5.0) / (nf * (nf - 1.0) * (nf - 2.0) * (nf - 3.0))
        * (cross_sq_off / 36.0)
        / (nf * (nf - 1.0));
    let (mx, my) = (gk.off_diag_mean, gl.off_diag_mean);
    let mean = (1.0 + mx * my - mx - my) / nf;
    if !(var > 0.0 && mean > 0.0) {
        return Err(Error::Numerical(format!(
            "HSIC null moments degenerate (mean {mean:.3e}, variance {var:.3e})"
        )));
    }
    let shape = mean * mean / var;
    let scale = var * nf / mean;
    let gamma = Gamma::new(shape, 1.0 / scale)
        .map_err(|e| Error::Numerical(format!("HSIC gamma approximation: {e}")))?;
    let p = gamma.sf(statistic).clamp(0.0, 1.0);
    Ok(TestResult::new(statistic, p, alpha))
}
