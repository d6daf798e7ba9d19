use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use super::TestResult;
use crate::error::{Error, Result};

/// Largest sample the Royston approximation is calibrated for.
pub const SHAPIRO_MAX_N: usize = 5000;

const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// The `n / 2` leading coefficients, largest first.
fn coefficients(n: usize) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(a) = cache.lock().expect("coefficient cache").get(&n) {
        return Arc::clone(a);
    }
    let a = Arc::new(compute_coefficients(n));
    cache.lock().expect("coefficient cache").insert(n, Arc::clone(&a));
    a
}

fn compute_coefficients(n: usize) -> Vec<f64> {
    let half = n / 2;
    if n == 3 {
        return vec![0.5f64.sqrt()];
    }
    let an = n as f64;
    let norm = std_normal();
    let m: Vec<f64> = (1..=half)
        .map(|i| norm.inverse_cdf((i as f64 - 0.375) / (an + 0.25)))
        .collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / an.sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;
    let mut a = vec![0.0; half];
    a[0] = a1;
    let (first, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        a[1] = a2;
        let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
        (2, fac)
    } else {
        let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        (1, fac)
    };
    for i in first..half {
        a[i] = -m[i] / fac;
    }
    a
}

/// Shapiro-Wilk W with the Royston (AS R94) p-value. Samples above
/// [`SHAPIRO_MAX_N`] are tested on a subsample drawn with a fixed seed.
pub fn shapiro_wilk(sample: &[f64], alpha: f64) -> Result<TestResult> {
    shapiro_wilk_seeded(sample, alpha, 0)
}

pub fn shapiro_wilk_seeded(sample: &[f64], alpha: f64, seed: u64) -> Result<TestResult> {
    let mut x: Vec<f64> = if sample.len() > SHAPIRO_MAX_N {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = sample_indices(&mut rng, sample.len(), SHAPIRO_MAX_N).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| sample[i]).collect()
    } else {
        sample.to_vec()
    };
    let n = x.len();
    if n < 3 {
        return Err(Error::input(format!("Shapiro-Wilk needs at least 3 observations, got {n}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("Shapiro-Wilk sample contains a non-finite value"));
    }
    x.sort_unstable_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if range <= 0.0 {
        return Err(Error::input("Shapiro-Wilk sample is constant"));
    }
    // rescale to guard against overflow in the sum of squares
    for v in &mut x {
        *v /= range;
    }
    let a = coefficients(n);
    let num: f64 = a.iter().enumerate().map(|(i, ai)| ai * (x[n - 1 - i] - x[i])).sum();
    let mean = x.iter().sum::<f64>() / n as f64;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    let w = (num * num / ss).min(1.0);
    let p = royston_p_value(w, n);
    Ok(TestResult::new(w, p, alpha))
}

fn royston_p_value(w: f64, n: usize) -> f64 {
    if n == 3 {
        let pi6 = 6.0 / std::f64::consts::PI;
        let stqr = std::f64::consts::FRAC_PI_3;
        return (pi6 * (w.sqrt().asin() - stqr)).clamp(0.0, 1.0);
    }
    let an = n as f64;
    let w1 = 1.0 - w;
    if w1 <= 0.0 {
        return 1.0;
    }
    let mut y = w1.ln();
    let (m, s) = if n <= 11 {
        let gamma = poly(&G, an);
        if y >= gamma {
            return 1e-99;
        }
        y = -(gamma - y).ln();
        (poly(&C3, an), poly(&C4, an).exp())
    } else {
        let xx = an.ln();
        (poly(&C5, xx), poly(&C6, xx).exp())
    };
    std_normal().sf((y - m) / s).clamp(0.0, 1.0)
}
