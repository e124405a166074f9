mod common;

use common::{c_integral_contour, g1_eps_oracle, real_density_eps_oracle};
use rmt_jacobi::exact_real::{c_integral, RealDensityContext};
use rmt_jacobi::{Beta, CorrelationSpectrum, EnsembleParams};

#[test]
fn c_integral_matches_contour_definition() {
    for (a, bexp, kappa, e) in [
        (2i64, 3i64, 1.0, vec![1.0, 2.0]),
        (4, 8, 0.7, vec![1.0, 4.0]),
        (3, 6, 1.9, vec![0.5, 1.5, 3.0]),
        (1, 5, 0.2, vec![0.3, 2.2, 3.1, 7.0]),
        (0, 2, 0.4, vec![2.5]),
    ] {
        let exact = c_integral(a, bexp, e.len(), kappa, &e).unwrap();
        let oracle = c_integral_contour(a, bexp, kappa, &e);
        assert!(
            (exact - oracle).abs() < 1e-8 * exact.abs().max(1.0),
            "({a},{bexp}) {exact} vs {oracle}"
        );
    }
}

#[test]
fn g1_adjacent_cells_match_eps_limit() {
    let params = EnsembleParams::new(2, 5, 5, Beta::Real).unwrap();
    let spec = CorrelationSpectrum::new(vec![1.0, 4.0]).unwrap();
    let ctx = RealDensityContext::new(&params, &spec).unwrap();
    for (a, c, l, b, i) in [
        (6, 8, 1, 1.0, 1),
        (4, 8, 2, 1.0, 1),
        (6, 8, 0, 0.6, 2),
        (4, 8, 1, 2.0, 2),
    ] {
        let v = ctx.g1(a, c, l, b, i).unwrap();
        let o = g1_eps_oracle(spec.lambdas(), a, c, l, b, i);
        assert!(
            (v - o).abs() < 1e-4 * o.abs().max(1.0),
            "(a={a}, l={l}, i={i}): {v} vs {o}"
        );
    }
}

#[test]
fn real_density_matches_partition_function_derivative() {
    let params = EnsembleParams::new(2, 5, 5, Beta::Real).unwrap();
    let spec = CorrelationSpectrum::new(vec![1.0, 4.0]).unwrap();
    let ctx = RealDensityContext::new(&params, &spec).unwrap();
    let b = 0.7;
    let v = ctx.cl_level_density_signed(b).unwrap();
    let o = real_density_eps_oracle(b, &params, &spec);
    assert!((v - o).abs() < 1e-3 * o.abs(), "{v} vs {o}");
}
