//! Polynomial roots: companion-matrix eigenvalues refined by the Aberth
//! iteration.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Evaluates `Σ c_k z^k` (ascending coefficients) and its derivative.
pub fn horner(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Trims vanishing leading coefficients.
fn effective_degree(coeffs: &[f64]) -> usize {
    coeffs.iter().rposition(|c| *c != 0.0).unwrap_or(0)
}

/// Eigenvalues of the companion matrix of `Σ c_k z^k`.
pub fn companion_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid(format!("non-finite polynomial coefficients {coeffs:?}")));
    }
    let n = effective_degree(coeffs);
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[n];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -coeffs[i] / lead;
    }
    Ok(m.complex_eigenvalues().iter().copied().collect())
}

/// Aberth–Ehrlich simultaneous refinement.
///
/// `ratio(z)` must return `P(z)/P'(z)` for the polynomial whose roots are
/// sought; this lets callers evaluate it in a better-conditioned form than
/// the monomial basis. A root is frozen once its correction drops below
/// `tol·|z|`, or once corrections below `1e-6·|z|` have failed
/// five times to halve the smallest correction seen (the roundoff floor). Returns the number of
/// sweeps.
pub fn aberth<F>(roots: &mut [Complex64], ratio: F, tol: f64, max_iter: usize) -> Result<usize>
where
    F: Fn(Complex64) -> Complex64,
{
    let n = roots.len();
    let mut frozen = vec![false; n];
    let mut last = vec![f64::INFINITY; n];
    let mut stalls = vec![0u8; n];
    for iter in 0..max_iter {
        for k in 0..n {
            if frozen[k] {
                continue;
            }
            let z = roots[k];
            let r = ratio(z);
            let step = if r == Complex64::new(0.0, 0.0) {
                r
            } else {
                let mut s = Complex64::new(0.0, 0.0);
                for (j, w) in roots.iter().enumerate() {
                    if j != k {
                        s += 1.0 / (z - w);
                    }
                }
                r / (1.0 - r * s)
            };
            if !(step.re.is_finite() && step.im.is_finite()) {
                continue;
            }
            let size = step.norm() / z.norm().max(f64::MIN_POSITIVE);
            if size < 1e-6 && size >= 0.5 * last[k] {
                stalls[k] += 1;
            }
            if size <= tol || stalls[k] >= 5 {
                frozen[k] = true;
                if size <= last[k] {
                    roots[k] = z - step;
                }
                continue;
            }
            roots[k] = z - step;
            last[k] = last[k].min(size);
        }
        if frozen.iter().all(|f| *f) {
            return Ok(iter + 1);
        }
    }
    Err(Error::numerical(format!(
        "Aberth iteration did not converge in {max_iter} steps"
    )))
}

/// Nudges exactly coincident starting points apart so that the Aberth sum
/// stays finite.
pub fn separate_duplicates(roots: &mut [Complex64]) {
    for k in 0..roots.len() {
        for j in 0..k {
            if roots[k] == roots[j] {
                let z = roots[k];
                roots[k] = z + Complex64::new(1e-7, 1e-7) * (1.0 + z.norm());
            }
        }
    }
}

/// All roots of `Σ c_k z^k`, companion eigenvalues polished by Aberth.
pub fn poly_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let mut roots = companion_roots(coeffs)?;
    if roots.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::numerical(format!(
            "companion eigenvalues not finite for {coeffs:?}"
        )));
    }
    separate_duplicates(&mut roots);
    let n = effective_degree(coeffs);
    aberth(
        &mut roots,
        |z| {
            let (p, dp) = horner(&coeffs[..=n], z);
            p / dp
        },
        1e-14,
        500,
    )
    .map_err(|e| e.context(format!("coefficients {coeffs:?}")))?;
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn quadratic_with_complex_pair() {
        // z^2 + 2z + 5 = (z + 1 - 2i)(z + 1 + 2i)
        let r = sorted(poly_roots(&[5.0, 2.0, 1.0]).unwrap());
        assert!((r[0] - Complex64::new(-1.0, -2.0)).norm() < 1e-14);
        assert!((r[1] - Complex64::new(-1.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn wilkinson_like_real_roots() {
        // (z-1)(z-2)...(z-8)
        let mut c = vec![1.0];
        for k in 1..=8 {
            let mut next = vec![0.0; c.len() + 1];
            for (i, v) in c.iter().enumerate() {
                next[i + 1] += v;
                next[i] -= k as f64 * v;
            }
            c = next;
        }
        let r = sorted(poly_roots(&c).unwrap());
        for (k, z) in r.iter().enumerate() {
            assert!((z - Complex64::new(k as f64 + 1.0, 0.0)).norm() < 1e-9, "{z}");
        }
    }

    #[test]
    fn trailing_zero_leading_coefficients_are_ignored() {
        let r = poly_roots(&[-2.0, 1.0, 0.0]).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0].re - 2.0).abs() < 1e-15);
        assert!(poly_roots(&[3.0]).unwrap().is_empty());
    }

    #[test]
    fn horner_derivative() {
        let (p, dp) = horner(&[1.0, -3.0, 0.0, 2.0], Complex64::new(0.5, 1.0));
        let z = Complex64::new(0.5, 1.0);
        assert!((p - (1.0 - 3.0 * z + 2.0 * z * z * z)).norm() < 1e-14);
        assert!((dp - (-3.0 + 6.0 * z * z)).norm() < 1e-14);
    }
}
