use rmt_jacobi::asymptotic::asymptotic_jacobi_density;
use rmt_jacobi::exact_complex::KernelContext;
use rmt_jacobi::{Beta, CorrelationSpectrum, EnsembleParams};

/// Spectrum with a fixed profile: `p` points spread geometrically over `[0.5, 4]`.
fn profile(p: usize) -> CorrelationSpectrum {
    let v = (0..p).map(|j| 0.5 * 8f64.powf(j as f64 / (p - 1) as f64)).collect();
    CorrelationSpectrum::new(v).unwrap()
}

/// Sup-norm distance between the exact and large-`p` densities over the
/// bulk of the support, with `n1 = 2p`, `n2 = 3p`.
fn bulk_gap(p: usize) -> f64 {
    let params = EnsembleParams::new(p, 2 * p, 3 * p, Beta::Complex).unwrap();
    let spec = profile(p);
    let ctx = KernelContext::new(&params, &spec).unwrap();
    // bulk of the support located from the asymptotic density itself
    let xs: Vec<f64> = (0..=400).map(|k| -0.999 + 1.998 * k as f64 / 400.0).collect();
    let support: Vec<f64> = xs
        .iter()
        .copied()
        .filter(|&x| asymptotic_jacobi_density(x, &spec, &params).unwrap() > 0.0)
        .collect();
    let (lo, hi) = (support[0], support[support.len() - 1]);
    let (lo, hi) = (lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo));
    (0..=120)
        .map(|k| lo + (hi - lo) * k as f64 / 120.0)
        .map(|x| {
            let e = ctx.jacobi_level_density(x).unwrap();
            let a = asymptotic_jacobi_density(x, &spec, &params).unwrap();
            (e - a).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn asymptotic_density_approaches_exact_as_p_grows() {
    let gaps: Vec<f64> = [4, 8, 16].iter().map(|&p| bulk_gap(p)).collect();
    eprintln!("bulk sup-norm gaps {gaps:?}");
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps[2] < 0.6 * gaps[0], "{gaps:?}");
}

#[test]
fn exact_density_refuses_sizes_lost_to_cancellation() {
    let p = 32;
    let params = EnsembleParams::new(p, 2 * p, 3 * p, Beta::Complex).unwrap();
    let ctx = KernelContext::new(&params, &profile(p)).unwrap();
    let refused = (0..=100)
        .map(|k| -0.99 + 1.98 * k as f64 / 100.0)
        .filter(|&x| ctx.jacobi_level_density(x).is_err())
        .count();
    assert!(refused > 50, "{refused}");
    assert!(ctx.jpd_constant_correction().is_err());
}
