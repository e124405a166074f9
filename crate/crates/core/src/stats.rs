//! Goodness-of-fit helpers for comparing Monte Carlo histograms with
//! analytic densities.

use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::quad::{integrate_finite, QuadOptions};

/// `n + 1` equally spaced edges on `[lo, hi]`.
pub fn uniform_edges(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
}

/// The probability of each bin under `density`, by adaptive quadrature.
pub fn bin_probabilities<F>(density: F, edges: &[f64], tol: f64) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("bin edges must be strictly increasing, at least two"));
    }
    let opts = QuadOptions::default().with_tol(tol);
    edges
        .par_windows(2)
        .map(|w| {
            let failure = std::sync::Mutex::new(None);
            let v = integrate_finite(
                |x| match density(x) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.lock().unwrap().get_or_insert(e);
                        f64::NAN
                    }
                },
                w[0],
                w[1],
                &opts,
            );
            match failure.into_inner().unwrap() {
                Some(e) => Err(e.context(format!("bin [{}, {}]", w[0], w[1]))),
                None => v,
            }
        })
        .collect()
}

fn check_lengths(counts: &[u64], probs: &[f64]) -> Result<u64> {
    if counts.len() != probs.len() || counts.is_empty() {
        return Err(Error::invalid(format!(
            "{} bin counts against {} probabilities",
            counts.len(),
            probs.len()
        )));
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::invalid("empty histogram"));
    }
    Ok(n)
}

/// `Σ_k |n_k/N - P_k|` with `N` the total count.
pub fn binned_l1(counts: &[u64], probs: &[f64]) -> Result<f64> {
    let n = check_lengths(counts, probs)? as f64;
    Ok(counts.iter().zip(probs).map(|(c, p)| (*c as f64 / n - p).abs()).sum())
}

/// Like [`binned_l1`] but normalizing by an explicit sample size, for
/// histograms restricted to part of the range.
pub fn binned_l1_with_total(counts: &[u64], probs: &[f64], total: u64) -> Result<f64> {
    check_lengths(counts, probs)?;
    let n = total as f64;
    Ok(counts.iter().zip(probs).map(|(c, p)| (*c as f64 / n - p).abs()).sum())
}

/// Mean plus three standard deviations of the binned L1 distance when the
/// counts are multinomial with probabilities `probs` and `n` draws, in the
/// normal approximation of each bin:
/// `E = Σ sqrt(2/π) σ_k`, `Var = Σ σ_k^2 (1 - 2/π)`, `σ_k^2 = P_k(1-P_k)/n`.
pub fn multinomial_l1_bound(probs: &[f64], n: u64) -> f64 {
    let n = n as f64;
    let two_over_pi = 2.0 / std::f64::consts::PI;
    let (mut mean, mut var) = (0.0, 0.0);
    for &p in probs {
        let s2 = (p * (1.0 - p)).max(0.0) / n;
        mean += (two_over_pi * s2).sqrt();
        var += s2 * (1.0 - two_over_pi);
    }
    mean + 3.0 * var.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson χ² of `counts` against `probs`. Bins with an expected count below
/// 5 are pooled into one.
pub fn chi_square(counts: &[u64], probs: &[f64]) -> Result<ChiSquare> {
    let n = check_lengths(counts, probs)? as f64;
    let (mut stat, mut bins) = (0.0, 0usize);
    let (mut pool_obs, mut pool_exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        let e = n * p;
        if e < 5.0 {
            pool_obs += c as f64;
            pool_exp += e;
        } else {
            stat += (c as f64 - e).powi(2) / e;
            bins += 1;
        }
    }
    if pool_exp > 0.0 {
        stat += (pool_obs - pool_exp).powi(2) / pool_exp;
        bins += 1;
    }
    if bins < 2 {
        return Err(Error::invalid("chi-square needs at least two usable bins"));
    }
    let dof = bins - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::numerical(e.to_string()))?;
    Ok(ChiSquare {
        statistic: stat,
        dof,
        p_value: dist.sf(stat),
    })
}

/// Survival function of the Kolmogorov distribution, `P(K > t)`.
pub fn kolmogorov_sf(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * t * t).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn ks_p(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_sf((s + 0.12 + 0.11 / s) * d)
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("KS test needs non-empty samples"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(KsResult {
        statistic: d,
        p_value: ks_p(d, na * nb / (na + nb)),
    })
}

/// One-sample Kolmogorov–Smirnov test against a CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::invalid("KS test needs a non-empty sample"));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (k, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - k as f64 / n).abs()).max(((k + 1) as f64 / n - f).abs());
    }
    Ok(KsResult {
        statistic: d,
        p_value: ks_p(d, n),
    })
}

/// Piecewise-linear CDF from density values on an increasing grid
/// (trapezoid rule), rescaled to end at 1.
pub fn tabulated_cdf(points: &[f64], values: &[f64]) -> Result<impl Fn(f64) -> f64> {
    if points.len() != values.len() || points.len() < 2 {
        return Err(Error::invalid("tabulated CDF needs matching grids of length >= 2"));
    }
    let mut cum = vec![0.0; points.len()];
    for k in 1..points.len() {
        cum[k] = cum[k - 1] + 0.5 * (values[k] + values[k - 1]) * (points[k] - points[k - 1]);
    }
    let total = *cum.last().unwrap();
    if !(total > 0.0) {
        return Err(Error::invalid("tabulated density has no mass"));
    }
    let pts = points.to_vec();
    Ok(move |x: f64| {
        if x <= pts[0] {
            return 0.0;
        }
        if x >= pts[pts.len() - 1] {
            return 1.0;
        }
        let k = pts.partition_point(|p| *p <= x);
        let t = (x - pts[k - 1]) / (pts[k] - pts[k - 1]);
        (cum[k - 1] + t * (cum[k] - cum[k - 1])) / total
    })
}
