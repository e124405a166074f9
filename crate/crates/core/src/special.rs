//! Small numeric helpers shared across the exact-density modules: log
//! factorials, compensated summation and elementary symmetric polynomials.

use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// `ln(m!)` for a non-negative integer.
pub fn ln_factorial(m: u64) -> f64 {
    if m < 2 {
        0.0
    } else {
        ln_gamma(m as f64 + 1.0)
    }
}

/// `1/m!` with the convention `1/m! = 0` for negative `m`, returned as a log.
/// `None` stands for the zero case.
pub fn ln_inv_factorial(m: i64) -> Option<f64> {
    if m < 0 {
        None
    } else {
        Some(-ln_factorial(m as u64))
    }
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// All elementary symmetric polynomials `e_0..=e_n` of `values`, built with
/// the triangle recurrence `e_k^(m) = e_k^(m-1) + v_m e_{k-1}^(m-1)`.
pub fn elementary_symmetric_all(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for (m, &v) in values.iter().enumerate() {
        for k in (1..=m + 1).rev() {
            e[k] += v * e[k - 1];
        }
    }
    e
}

/// Elementary symmetric polynomial `e_k(values)`.
pub fn elementary_symmetric(values: &[f64], k: usize) -> Result<f64> {
    if k > values.len() {
        return Err(Error::invalid(format!(
            "elementary symmetric degree {k} exceeds the number of values {}",
            values.len()
        )));
    }
    Ok(elementary_symmetric_all(values)[k])
}

/// Sign and log-magnitude of a real number; zero maps to `(0, -inf)`.
pub fn sign_ln(x: f64) -> (f64, f64) {
    if x == 0.0 {
        (0.0, f64::NEG_INFINITY)
    } else {
        (x.signum(), x.abs().ln())
    }
}

/// Sign and log-magnitude of `det M` for an `n × n` matrix whose entries are
/// given as `(sign, ln|m_ij|)`. Each row is rescaled by its largest entry
/// before the LU factorization, so entries spanning hundreds of orders of
/// magnitude are fine.
pub fn signed_ln_det(n: usize, entry: impl Fn(usize, usize) -> (f64, f64)) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut ln_scale = 0.0;
    for i in 0..n {
        let row: Vec<(f64, f64)> = (0..n).map(|j| entry(i, j)).collect();
        let top = row
            .iter()
            .filter(|(s, _)| *s != 0.0)
            .map(|(_, l)| *l)
            .fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return (0.0, f64::NEG_INFINITY);
        }
        ln_scale += top;
        for (j, (s, l)) in row.into_iter().enumerate() {
            m[(i, j)] = if s == 0.0 { 0.0 } else { s * (l - top).exp() };
        }
    }
    let lu = m.lu();
    let mut sign: f64 = lu.p().determinant();
    let mut ln = ln_scale;
    let u = lu.u();
    for i in 0..n {
        let d = u[(i, i)];
        if d == 0.0 {
            return (0.0, f64::NEG_INFINITY);
        }
        sign *= d.signum();
        ln += d.abs().ln();
    }
    (sign, ln)
}

/// `∏_{i<j} (v_j - v_i)` as sign and log-magnitude.
pub fn signed_ln_vandermonde(v: &[f64]) -> (f64, f64) {
    let mut sign = 1.0;
    let mut ln = 0.0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            let d = v[j] - v[i];
            if d == 0.0 {
                return (0.0, f64::NEG_INFINITY);
            }
            sign *= d.signum();
            ln += d.abs().ln();
        }
    }
    (sign, ln)
}

/// Sums `sign_k · exp(ln_k)` without overflow: terms are shifted by the
/// largest exponent and accumulated with compensation.
pub fn sum_signed_exp(terms: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    sum_signed_exp_with_error(terms).0
}

/// Like [`sum_signed_exp`], also returning a bound on the absolute rounding
/// error. Each term carries a relative error of about `|ln t| ε` from its
/// exponentiation, so the bound is `Σ|t| · (max|ln t| + n) ε`; when the terms
/// cancel this dwarfs the sum.
pub fn sum_signed_exp_with_error(terms: impl IntoIterator<Item = (f64, f64)>) -> (f64, f64) {
    let terms: Vec<(f64, f64)> = terms.into_iter().filter(|(s, _)| *s != 0.0).collect();
    let top = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return (0.0, 0.0);
    }
    let s: CompensatedSum = terms.iter().map(|(sg, l)| sg * (l - top).exp()).collect();
    let magnitude: f64 = terms.iter().map(|(_, l)| (l - top).exp()).sum();
    let ln_size = terms.iter().map(|t| t.1.abs()).fold(0.0, f64::max);
    let err = magnitude * (ln_size + terms.len() as f64) * f64::EPSILON;
    (s.value() * top.exp(), err * top.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(values: &[f64], k: usize) -> f64 {
        let n = values.len();
        let mut total = 0.0;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize == k {
                total += (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| values[i])
                    .product::<f64>();
            }
        }
        total
    }

    #[test]
    fn empty_product_convention() {
        assert_eq!(elementary_symmetric(&[], 0).unwrap(), 1.0);
        assert_eq!(elementary_symmetric(&[3.0, -2.0], 0).unwrap(), 1.0);
    }

    #[test]
    fn small_hand_values() {
        let v = [1.0 / 3.0, 2.0];
        assert!((elementary_symmetric(&v, 2).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((elementary_symmetric(&v, 1).unwrap() - 7.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn recurrence_matches_subset_sum() {
        let v = [0.3, 1.7, 2.2, 0.05, 4.4, 1.1, 0.9, 3.3];
        for k in 0..=8 {
            let fast = elementary_symmetric(&v, k).unwrap();
            let slow = brute_force(&v, k);
            assert!((fast - slow).abs() <= 1e-12 * slow.abs(), "k={k}");
        }
    }

    #[test]
    fn degree_out_of_range() {
        assert!(matches!(elementary_symmetric(&[1.0], 2), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn log_factorials() {
        assert_eq!(ln_factorial(0), 0.0);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-13);
        assert!((ln_factorial(150) - (1..=150).map(|k| (k as f64).ln()).sum::<f64>()).abs() < 1e-9);
        assert!(ln_inv_factorial(-1).is_none());
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let s: CompensatedSum = [1e16, 1.0, -1e16, 1.0].into_iter().collect();
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn log_determinant_matches_direct() {
        let a = [[2.0, -1.0, 0.5], [1e-3, 4.0, 3.0], [-2.0, 0.25, 1.0]];
        let direct = DMatrix::from_fn(3, 3, |i, j| a[i][j]).determinant();
        let (s, l) = signed_ln_det(3, |i, j| sign_ln(a[i][j]));
        assert!((s * l.exp() - direct).abs() < 1e-13 * direct.abs());
        // Rows of wildly different scale.
        let (s2, l2) = signed_ln_det(2, |i, j| {
            let v: f64 = [[1.0, 2.0], [3.0, 5.0]][i][j];
            (1.0, v.ln() + if i == 0 { 800.0 } else { -700.0 })
        });
        assert_eq!(s2, -1.0);
        assert!((l2 - 100.0).abs() < 1e-12);
    }

    #[test]
    fn vandermonde_and_signed_sum() {
        let (s, l) = signed_ln_vandermonde(&[1.0, 3.0, 2.0]);
        // (3-1)(2-1)(2-3) = -2
        assert_eq!(s, -1.0);
        assert!((l - 2f64.ln()).abs() < 1e-15);
        let v = sum_signed_exp([(1.0, 300.0), (-1.0, 300.0 + 0.5f64.ln())]);
        assert!((v / 300f64.exp() - 0.5).abs() < 1e-12);
        assert_eq!(sum_signed_exp([(1.0, 2f64.ln()), (-1.0, 0.0)]), 1.0);
    }
}
