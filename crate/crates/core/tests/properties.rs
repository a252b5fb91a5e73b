use approx::assert_relative_eq;
use floquet4::discriminants::{bundle_with, char_poly_residual};
use floquet4::monodromy::integrate_monodromy_with;
use floquet4::zeros::{SearchRange, ZeroFunction, ZeroSolver};
use floquet4::{CoefficientSet, DiscriminantBundle, IntegratorOptions, SpectralPoint, TrigSeries};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn series(zero_mean: bool) -> impl Strategy<Value = TrigSeries> {
    let constant = if zero_mean { Just(0.0).boxed() } else { (-1.0..1.0f64).boxed() };
    (constant, prop::collection::vec(-1.0..1.0f64, 0..=3), prop::collection::vec(-1.0..1.0f64, 0..=3))
        .prop_map(|(c, cos, sin)| TrigSeries::new(c, cos, sin))
}

fn coefficients() -> impl Strategy<Value = CoefficientSet> {
    (series(false), series(false)).prop_map(|(p, q)| CoefficientSet::new(p, q).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bundle_identities_hold(c in coefficients(), lambda in -1e4..1e4f64) {
        let pt = SpectralPoint::real(lambda);
        let r = integrate_monodromy_with(&c, &pt, false, &IntegratorOptions::fast(1e-12)).unwrap();
        let b = DiscriminantBundle::from_matrix(pt.lambda, &r.m);
        prop_assert!(b.max_identity_residual() <= 1e-9 * b.scale());
        prop_assert!(char_poly_residual(&r.m) <= 1e-9 * b.scale());
        prop_assert!((r.m.determinant() - 1.0).norm() <= 1e-9 * b.scale());
    }

    #[test]
    fn traces_are_real_symmetric(c in coefficients(), re in -300.0..300.0f64, im in 1.0..300.0f64) {
        let opts = IntegratorOptions::fast(1e-12);
        let up = bundle_with(&c, &SpectralPoint::new(Complex64::new(re, im)), &opts).unwrap();
        let down = bundle_with(&c, &SpectralPoint::new(Complex64::new(re, -im)), &opts).unwrap();
        for (a, b) in [(up.t1, down.t1), (up.t2, down.t2), (up.rho, down.rho)] {
            prop_assert!((a - b.conj()).norm() <= 1e-9 * up.scale());
        }
    }

    #[test]
    fn amplitude_formulas_agree(p in series(true)) {
        prop_assume!(!p.is_zero());
        let closed: f64 = p.cos.iter().chain(&p.sin).zip((1..=p.cos.len()).chain(1..=p.sin.len()))
            .map(|(a, n)| a * a / (8.0 * (PI * n as f64).powi(2)))
            .sum();
        let c = CoefficientSet::new(p, TrigSeries::zero()).unwrap();
        let b = c.amplitude_breakdown().unwrap();
        assert_relative_eq!(b.from_primitive, closed, max_relative = 1e-10);
        assert_relative_eq!(b.from_moments, closed, max_relative = 1e-8);
        assert_relative_eq!(b.correlation.abs(), closed, max_relative = 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn resonances_close_under_conjugation(p in series(false), q in series(false)) {
        let c = CoefficientSet::new(p.scaled(0.3), q.scaled(0.3)).unwrap();
        let solver = ZeroSolver::new(&c);
        let zeros = solver.zeros_in_lambda_disk(ZeroFunction::Rho, SearchRange::uniform(1).resonance_radius()).unwrap();
        for z in &zeros {
            let partner = zeros.iter().map(|w| (w.lambda - z.lambda.conj()).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(partner <= 1e-8 * z.lambda.norm().max(1.0), "{} unpaired", z.lambda);
        }
    }
}
