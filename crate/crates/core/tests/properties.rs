use proptest::prelude::*;

use rmt_jacobi::asymptotic::{saddle_roots, solve_saddle, IM_TOL_REL};
use rmt_jacobi::exact_complex::KernelContext;
use rmt_jacobi::exact_real::c_integral;
use rmt_jacobi::quad::{integrate_finite, QuadOptions};
use rmt_jacobi::sampler::bin_counts;
use rmt_jacobi::stats::multinomial_l1_bound;
use rmt_jacobi::{cl_to_jacobi_point, jacobi_to_cl_point, Beta, CorrelationSpectrum, EnsembleParams};

fn spectrum(p: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2f64..6.0, p)
}

fn separated(v: Vec<f64>) -> Option<CorrelationSpectrum> {
    CorrelationSpectrum::with_min_gap(v, 0.05).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn point_map_round_trip(x in -0.999f64..0.999) {
        let back = cl_to_jacobi_point(jacobi_to_cl_point(x).unwrap()).unwrap();
        prop_assert!((back - x).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn c_integral_ignores_energy_order(a in 0i64..6, bexp in 0i64..9, kappa in 0.1f64..3.0, e in spectrum(3)) {
        let mut r = e.clone();
        r.reverse();
        let x = c_integral(a, bexp, 3, kappa, &e).unwrap();
        let y = c_integral(a, bexp, 3, kappa, &r).unwrap();
        prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
    }

    #[test]
    fn c_integral_single_energy(bexp in 0i64..12, kappa in 0.1f64..3.0, e in 0.1f64..10.0) {
        let v = c_integral(0, bexp, 1, kappa, &[e]).unwrap();
        prop_assert!((v - 1.0 / e).abs() <= 1e-14 / e);
    }

    #[test]
    fn quadrature_is_linear(c0 in -2.0f64..2.0, c1 in -2.0f64..2.0, alpha in -3.0f64..3.0) {
        let opts = QuadOptions::default();
        let f = |x: f64| (c0 * x).sin();
        let g = |x: f64| (c1 * x).exp();
        let lhs = integrate_finite(|x| alpha * f(x) + g(x), -1.0, 2.0, &opts).unwrap();
        let rhs = alpha * integrate_finite(f, -1.0, 2.0, &opts).unwrap() + integrate_finite(g, -1.0, 2.0, &opts).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
    }

    #[test]
    fn quadrature_is_additive(split in -0.9f64..1.9) {
        let opts = QuadOptions::default();
        let f = |x: f64| 1.0 / (1.0 + x * x);
        let whole = integrate_finite(f, -1.0, 2.0, &opts).unwrap();
        let parts = integrate_finite(f, -1.0, split, &opts).unwrap() + integrate_finite(f, split, 2.0, &opts).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12);
    }

    #[test]
    fn bin_counts_keep_in_range_values(values in prop::collection::vec(-1.5f64..1.5, 0..200), bins in 2usize..50) {
        let counts = bin_counts(&values, bins, -1.0, 1.0);
        let inside = values.iter().filter(|v| (-1.0..=1.0).contains(*v)).count() as u64;
        prop_assert_eq!(counts.iter().sum::<u64>(), inside);
    }

    #[test]
    fn l1_bound_shrinks_with_sample_size(probs in prop::collection::vec(0.01f64..1.0, 2..30), n in 10u64..100_000) {
        let total: f64 = probs.iter().sum();
        let p: Vec<f64> = probs.iter().map(|v| v / total).collect();
        prop_assert!(multinomial_l1_bound(&p, 4 * n) < multinomial_l1_bound(&p, n));
    }

    #[test]
    fn saddle_roots_are_closed_and_accurate(
        lam in spectrum(4),
        extra1 in 0usize..8,
        extra2 in 0usize..8,
        x in -0.95f64..0.95,
    ) {
        let Some(spec) = separated(lam) else { return Ok(()) };
        let params = EnsembleParams::new(4, 4 + extra1, 4 + extra2, Beta::Real).unwrap();
        let b = jacobi_to_cl_point(x).unwrap();
        let roots = saddle_roots(b, &spec, &params).unwrap();
        prop_assert_eq!(roots.len(), 5);
        let upper = roots.iter().filter(|z| z.im > IM_TOL_REL * (1.0 + z.re.abs())).count();
        prop_assert!(upper <= 1);
        for z in &roots {
            let d = roots.iter().map(|w| (w - z.conj()).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(d <= 1e-10 * (1.0 + z.norm()));
        }
        let s = solve_saddle(b, &spec, &params).unwrap();
        prop_assert!(s.residual < 1e-10);
    }

    #[test]
    fn complex_density_mirror_symmetry(lam in spectrum(2), extra1 in 0usize..4, extra2 in 0usize..4, x in -0.9f64..0.9) {
        let Some(spec) = separated(lam) else { return Ok(()) };
        let params = EnsembleParams::new(2, 2 + extra1, 2 + extra2, Beta::Complex).unwrap();
        let a = KernelContext::new(&params, &spec).unwrap();
        let b = KernelContext::new(&params.swapped(), &spec.inverse()).unwrap();
        let u = a.jacobi_level_density(x).unwrap();
        let v = b.jacobi_level_density(-x).unwrap();
        prop_assert!((u - v).abs() <= 1e-9 * u.abs().max(1e-12));
    }
}
