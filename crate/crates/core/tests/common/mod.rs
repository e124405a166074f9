//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rmt_jacobi::exact_real::{c_integral, cell_bounds};
use rmt_jacobi::quad::gauss_legendre;
use rmt_jacobi::{CorrelationSpectrum, EnsembleParams};

pub const OUTLIER_LAMBDAS: [f64; 32] = [
    294.845, 34.679, 30.311, 11.612, 10.733, 9.468, 8.232, 5.307, 4.144, 2.443, 2.429, 2.218, 2.083, 1.986, 1.406,
    1.382, 1.102, 1.001, 0.889, 0.707, 0.693, 0.684, 0.665, 0.63, 0.594, 0.591, 0.576, 0.574, 0.562, 0.467, 0.463,
    0.455,
];

/// `C` from its definition: the `z^a` Fourier coefficient by a `2^14`-point
/// trapezoid rule on the unit circle, differentiated in `κ` by a central
/// difference with `h = 1e-6`.
pub fn c_integral_contour(a: i64, bexp: i64, kappa: f64, energies: &[f64]) -> f64 {
    let n = 1 << 14;
    let coefficient = |k: f64| {
        let mut s = Complex64::new(0.0, 0.0);
        for m in 0..n {
            let phi = 2.0 * PI * m as f64 / n as f64;
            let z = Complex64::from_polar(1.0, phi);
            let mut v = Complex64::from_polar(1.0, -(a as f64) * phi) * (1.0 + z).powi(bexp as i32);
            for e in energies {
                v *= k / e - z;
            }
            s += v;
        }
        s.re / n as f64
    };
    let h = 1e-6;
    (coefficient(kappa + h) - coefficient(kappa - h)) / (2.0 * h)
}

/// Polynomial extrapolation of `y(x)` to `x = 0` (Neville).
pub fn extrapolate_to_zero(x: &[f64], y: &[f64]) -> f64 {
    let mut p = y.to_vec();
    let n = x.len();
    for k in 1..n {
        for i in 0..n - k {
            p[i] = (x[i + k] * p[i] - x[i] * p[i + 1]) / (x[i + k] - x[i]);
        }
    }
    p[0]
}

/// Gauss–Legendre nodes and weights (order 20) on the mesh `pts`.
fn nodes_on(pts: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(20);
    let mut r = Vec::with_capacity(pts.len() * 20);
    let mut wt = Vec::with_capacity(pts.len() * 20);
    for seg in pts.windows(2) {
        let half = 0.5 * (seg[1] - seg[0]);
        let mid = 0.5 * (seg[1] + seg[0]);
        for (xi, wi) in x.iter().zip(&w) {
            r.push(mid + half * xi);
            wt.push(wi * half);
        }
    }
    (r, wt)
}

fn sorted_mesh(mut pts: Vec<f64>) -> Vec<f64> {
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `g1` on a cell adjacent to its singular point `e = bΛ_i^{-1}`, by moving
/// `b` off the axis: `Re ∫ f/((b+iε)/Λ_i - r)^{3/2}` up to the far end
/// for the cell below `e`, `-Im ∫` for the cell above, extrapolated from
/// `ε ∈ {1e-3, 1e-4, 1e-5}`.
pub fn g1_eps_oracle(lambdas: &[f64], a: i64, c: i64, l: usize, b: f64, i: usize) -> f64 {
    let p = lambdas.len();
    let e = b / lambdas[i - 1];
    let (lo, hi) = cell_bounds(b, lambdas, l).unwrap();
    let f = |r: f64| {
        let mut ln = 0.5 * a as f64 * r.ln() - 0.5 * c as f64 * r.ln_1p();
        for (k, lam) in lambdas.iter().enumerate() {
            if k != i - 1 {
                ln -= 0.5 * (b / lam - r).abs().ln();
            }
        }
        ln.exp()
    };
    let below = l + i == p;
    let gap = lambdas
        .iter()
        .map(|v| b / v)
        .filter(|v| *v != e)
        .map(|v| (v - e).abs())
        .fold(e, f64::min);
    let delta = 0.5 * gap;
    let (x0, x1) = if below { (lo, e + delta) } else { (e - delta, hi) };
    let far = if x1.is_finite() { x1 } else { 1e9 * x0.max(1.0) };
    let eval = |eps: f64| {
        let mut pts = vec![x0, far, e];
        let mut h = (far - x0).min(1.0);
        while h > eps * 1e-2 {
            pts.extend([e - h, e + h]);
            if h > 1e-6 {
                pts.extend([x0 + h * h, far - h * h]);
            }
            h *= 0.5;
        }
        let mut q = x0.max(1.0);
        while q < far {
            pts.push(q);
            q *= 1.3;
        }
        let pts = sorted_mesh(pts.into_iter().filter(|q| *q >= x0 && *q <= far).collect());
        let (r, w) = nodes_on(&pts);
        let kap = Complex64::new(b, eps) / lambdas[i - 1];
        let s: Complex64 = r
            .iter()
            .zip(&w)
            .map(|(&r, &w)| Complex64::new(f(r) * w, 0.0) / (kap - r).powf(1.5))
            .sum();
        if below {
            s.re
        } else {
            -s.im
        }
    };
    let eps = [1e-3, 1e-4, 1e-5];
    let z: Vec<f64> = eps.iter().map(|&x| eval(x)).collect();
    extrapolate_to_zero(&eps, &z)
}

/// `∂Z/∂κ2` of the real ensemble at `κ = b + iε`, as a sum of two-fold
/// integrals `∫∫ F(r1) G(r2) |r1 - r2|` against the square-root kernel with
/// complex `κ`. The double integrals use a graded mesh and the cumulative
/// form of `|r1 - r2|`.
pub fn der_z(b: f64, params: &EnsembleParams, spectrum: &CorrelationSpectrum, eps: f64) -> Complex64 {
    let lam = spectrum.lambdas();
    let p = params.p();
    let (n2, mu) = (params.n2() as i64, params.mu() as i64);
    let kap = Complex64::new(b, eps);

    let big_r = 1e5;
    let mut pts = vec![0.0, big_r];
    for l in lam {
        let s = b / l;
        let mut h = 1.0;
        while h > eps * 1e-2 {
            pts.extend([s - h, s + h]);
            h *= 0.5;
        }
        pts.push(s);
    }
    let mut h = 1.0;
    while h > 1e-10 {
        pts.push(h);
        h *= 0.5;
    }
    let mut q = 1.0;
    while q < big_r {
        pts.push(q);
        q *= 1.5;
    }
    let pts = sorted_mesh(pts.into_iter().filter(|q| *q >= 0.0 && *q <= big_r).collect());
    let (r, w) = nodes_on(&pts);

    let kernel: Vec<Complex64> = r
        .iter()
        .map(|&r| {
            lam.iter()
                .fold(Complex64::new(1.0, 0.0), |acc, l| acc / (kap / l - r).sqrt())
        })
        .collect();
    let h = |e1: i64, e2: i64, r: f64| r.powf(e1 as f64 / 2.0) * (1.0 + r).powf(-(e2 as f64) / 2.0);

    let pair = |f: &[Complex64], g: &[Complex64]| -> Complex64 {
        let n = r.len();
        let wg: Vec<Complex64> = (0..n).map(|m| g[m] * w[m]).collect();
        let t0: Complex64 = wg.iter().sum();
        let t1: Complex64 = (0..n).map(|m| wg[m] * r[m]).sum();
        let (mut m0, mut m1) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        let mut total = Complex64::new(0.0, 0.0);
        for m in 0..n {
            let c0 = m0 + wg[m] * 0.5;
            let c1 = m1 + wg[m] * r[m] * 0.5;
            let phi = r[m] * (c0 * 2.0 - t0) - (c1 * 2.0 - t1);
            total += f[m] * w[m] * phi;
            m0 += wg[m];
            m1 += wg[m] * r[m];
        }
        total
    };
    let family =
        |e1: i64, e2: i64| -> Vec<Complex64> { r.iter().zip(&kernel).map(|(&r, k)| k * h(e1, e2, r)).collect() };
    let with_pole = |e1: i64, e2: i64, j: usize| -> Vec<Complex64> {
        r.iter()
            .zip(&kernel)
            .map(|(&r, k)| k * h(e1, e2, r) / (kap / lam[j] - r))
            .collect()
    };
    let a = n2 - 1;
    let n0 = |d1: i64, d2: i64| pair(&family(a - 1 + d1, mu + 1 + d1), &family(a - 1 + d2, mu + 1 + d2));
    let n1 = |d: i64, j: usize| pair(&with_pole(a, mu, j), &family(a - 1 + d, mu + 1 + d));
    let n2f = |i: usize, j: usize| pair(&with_pole(a, mu, i), &with_pole(a, mu, j));
    let c = |aa: i64, bb: i64, cc: usize, e: &[f64]| c_integral(aa, bb, cc, b, e).unwrap();

    let (nf, muf) = (n2 as f64, mu as f64);
    let mut t = (n0(1, 1) * (muf * (muf - 1.0) * c(n2 - 2, mu - 2, p, lam))
        - n0(1, -1) * (2.0 * muf * (nf - 1.0) * c(n2 - 1, mu - 1, p, lam))
        + n0(-1, -1) * (nf * (nf - 1.0) * c(n2, mu, p, lam)))
        / 8.0;
    for j in 0..p {
        let rest: Vec<f64> = lam
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != j)
            .map(|(_, v)| *v)
            .collect();
        t += (n1(1, j) * (muf * c(n2 - 2, mu - 1, p - 1, &rest))
            - n1(-1, j) * ((nf - 1.0) * c(n2 - 1, mu, p - 1, &rest)))
            / 4.0;
    }
    for i in 0..p {
        for j in i + 1..p {
            let rest: Vec<f64> = lam
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i && *k != j)
                .map(|(_, v)| *v)
                .collect();
            t += n2f(i, j) * c(n2 - 2, mu, p - 2, &rest) / 4.0;
        }
    }
    t
}

/// The real-ensemble density `-(1/πp) Im ∂Z/∂κ2`, extrapolated linearly
/// from `ε = 1e-3` and `1e-4`.
pub fn real_density_eps_oracle(b: f64, params: &EnsembleParams, spectrum: &CorrelationSpectrum) -> f64 {
    let z3 = der_z(b, params, spectrum, 1e-3).im;
    let z4 = der_z(b, params, spectrum, 1e-4).im;
    let im = (10.0 * z4 - z3) / 9.0;
    -im / (PI * params.p() as f64)
}
