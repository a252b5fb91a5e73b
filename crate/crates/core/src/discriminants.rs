//! Trace functions, the resonance function ρ, the discriminants D± and the
//! two Lyapunov branches computed from the monodromy matrix.

use crate::coeffs::CoefficientSet;
use crate::error::Result;
use crate::monodromy::{integrate_monodromy_with, CMatrix4, IntegratorOptions};
use crate::reference::SpectralPoint;
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscriminantBundle {
    pub lambda: Complex64,
    pub t1: Complex64,
    pub t2: Complex64,
    pub t: Complex64,
    pub rho: Complex64,
    pub d_plus: Complex64,
    pub d_minus: Complex64,
    pub delta1: Complex64,
    pub delta2: Complex64,
    /// Real λ with ρ ≥ 0, so both branches are real and Δ₁ ≥ Δ₂.
    pub branch_real: bool,
}

/// λ-derivatives of the bundle's entire functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BundleDerivative {
    pub t1: Complex64,
    pub t2: Complex64,
    pub rho: Complex64,
    pub d_plus: Complex64,
    pub d_minus: Complex64,
}

impl DiscriminantBundle {
    /// Assemble from T₁, T₂ alone.
    pub fn from_traces(lambda: Complex64, t1: Complex64, t2: Complex64) -> Self {
        let one = Complex64::new(1.0, 0.0);
        let t = 4.0 * t1 * t1 - t2;
        let rho = (t2 + one) / 2.0 - t1 * t1;
        let d_plus = (t - 4.0 * t1 + one) / 2.0;
        let d_minus = (t + 4.0 * t1 + one) / 2.0;
        let real = lambda.im == 0.0;
        let (root, branch_real) = if real {
            if rho.re >= 0.0 {
                (Complex64::new(rho.re.sqrt(), 0.0), true)
            } else {
                (Complex64::new(0.0, (-rho.re).sqrt()), false)
            }
        } else {
            (rho.sqrt(), false)
        };
        Self {
            lambda,
            t1,
            t2,
            t,
            rho,
            d_plus,
            d_minus,
            delta1: t1 + root,
            delta2: t1 - root,
            branch_real,
        }
    }

    pub fn from_matrix(lambda: Complex64, m: &CMatrix4) -> Self {
        let t1 = m.trace() / 4.0;
        let t2 = (m * m).trace() / 4.0;
        let (t1, t2) = if lambda.im == 0.0 {
            (Complex64::new(t1.re, 0.0), Complex64::new(t2.re, 0.0))
        } else {
            (t1, t2)
        };
        Self::from_traces(lambda, t1, t2)
    }

    /// Magnitude of the terms entering ρ and D±; sets the rounding floor.
    pub fn scale(&self) -> f64 {
        let a = self.t1.norm();
        1.0 + self.t2.norm() + 4.0 * a * a + 4.0 * a
    }

    /// Largest absolute residual over the algebraic identities linking the fields.
    pub fn max_identity_residual(&self) -> f64 {
        let one = Complex64::new(1.0, 0.0);
        let (t1, t2, t, rho) = (self.t1, self.t2, self.t, self.rho);
        [
            t - (4.0 * t1 * t1 - t2),
            rho - ((t2 + one) / 2.0 - t1 * t1),
            self.d_plus - (t - 4.0 * t1 + one) / 2.0,
            self.d_minus - (t + 4.0 * t1 + one) / 2.0,
            self.d_plus - self.d_minus + 4.0 * t1,
            self.d_plus - ((t1 - one).powi(2) - rho),
            self.d_minus - ((t1 + one).powi(2) - rho),
            self.delta1 * self.delta1 + self.delta2 * self.delta2 - (one + t2),
            self.delta1 * self.delta2 - (t - one) / 2.0,
        ]
        .iter()
        .map(|r| r.norm())
        .fold(0.0, f64::max)
    }

    /// CSV row: λ, T₁, T₂, ρ, D₊, D₋ (real parts) and both branches.
    pub fn csv_row(&self) -> String {
        let f = |v: f64| format!("{v:.16e}");
        [
            f(self.lambda.re),
            f(self.t1.re),
            f(self.t2.re),
            f(self.rho.re),
            f(self.d_plus.re),
            f(self.d_minus.re),
            f(self.delta1.re),
            f(self.delta1.im),
            f(self.delta2.re),
            f(self.delta2.im),
        ]
        .join(",")
    }

    pub const CSV_HEADER: &'static str =
        "lambda,T1,T2,rho,Dplus,Dminus,Delta1_re,Delta1_im,Delta2_re,Delta2_im";
}

impl BundleDerivative {
    pub fn from_matrices(lambda: Complex64, b: &DiscriminantBundle, m: &CMatrix4, dm: &CMatrix4) -> Self {
        let mut t1 = dm.trace() / 4.0;
        let mut t2 = (m * dm).trace() / 2.0;
        if lambda.im == 0.0 {
            t1.im = 0.0;
            t2.im = 0.0;
        }
        let t = 8.0 * b.t1 * t1 - t2;
        Self {
            t1,
            t2,
            rho: t2 / 2.0 - 2.0 * b.t1 * t1,
            d_plus: (t - 4.0 * t1) / 2.0,
            d_minus: (t + 4.0 * t1) / 2.0,
        }
    }

    /// dΔν/dλ for the branch convention of the bundle (undefined at ρ = 0).
    pub fn delta(&self, b: &DiscriminantBundle, nu: usize) -> Complex64 {
        let root = b.delta1 - b.t1;
        let sign = if nu == 1 { 1.0 } else { -1.0 };
        self.t1 + sign * self.rho / (2.0 * root)
    }
}

/// Bundle at one λ with default integrator options.
pub fn bundle(c: &CoefficientSet, pt: &SpectralPoint) -> Result<DiscriminantBundle> {
    bundle_with(c, pt, &IntegratorOptions::fast(IntegratorOptions::default().rtol))
}

pub fn bundle_with(c: &CoefficientSet, pt: &SpectralPoint, opts: &IntegratorOptions) -> Result<DiscriminantBundle> {
    let r = integrate_monodromy_with(c, pt, false, opts)?;
    Ok(DiscriminantBundle::from_matrix(pt.lambda, &r.m))
}

/// Bundle together with its λ-derivatives from the variational system.
pub fn bundle_with_derivative(
    c: &CoefficientSet,
    pt: &SpectralPoint,
    opts: &IntegratorOptions,
) -> Result<(DiscriminantBundle, BundleDerivative)> {
    let r = integrate_monodromy_with(c, pt, true, opts)?;
    let b = DiscriminantBundle::from_matrix(pt.lambda, &r.m);
    let dm = r.dm_dlambda.expect("derivative requested");
    let d = BundleDerivative::from_matrices(pt.lambda, &b, &r.m, &dm);
    Ok((b, d))
}

/// Coefficients of det(M − τI) in descending powers of τ, from sums of
/// principal minors. Power sums would route through tr M⁴ and lose far more
/// digits when M has one dominant multiplier.
pub fn char_poly_coefficients(m: &CMatrix4) -> [Complex64; 5] {
    let minor2 = |i: usize, j: usize| m[(i, i)] * m[(j, j)] - m[(i, j)] * m[(j, i)];
    let minor3 = |i: usize, j: usize, k: usize| {
        m[(i, i)] * (m[(j, j)] * m[(k, k)] - m[(j, k)] * m[(k, j)])
            - m[(i, j)] * (m[(j, i)] * m[(k, k)] - m[(j, k)] * m[(k, i)])
            + m[(i, k)] * (m[(j, i)] * m[(k, j)] - m[(j, j)] * m[(k, i)])
    };
    let mut e2 = Complex64::new(0.0, 0.0);
    let mut e3 = Complex64::new(0.0, 0.0);
    for i in 0..4 {
        for j in i + 1..4 {
            e2 += minor2(i, j);
            for k in j + 1..4 {
                e3 += minor3(i, j, k);
            }
        }
    }
    [Complex64::new(1.0, 0.0), -m.trace(), e2, -e3, m.determinant()]
}

/// Max |coefficient residual| of det(M − τI) against [1, −4T₁, 2T, −4T₁, 1].
pub fn char_poly_residual(m: &CMatrix4) -> f64 {
    let b = DiscriminantBundle::from_matrix(Complex64::new(f64::NAN, 0.0), m);
    let one = Complex64::new(1.0, 0.0);
    let want = [one, -4.0 * b.t1, 2.0 * b.t, -4.0 * b.t1, one];
    char_poly_coefficients(m)
        .iter()
        .zip(want)
        .map(|(a, w)| (a - w).norm())
        .fold(0.0, f64::max)
}

pub fn char_poly_check(c: &CoefficientSet, pt: &SpectralPoint) -> Result<f64> {
    let r = integrate_monodromy_with(c, pt, false, &IntegratorOptions::fast(1e-12))?;
    Ok(char_poly_residual(&r.m))
}

/// The multiplier pairs (τν, 1/τν) solving τ² − 2Δντ + 1 = 0.
pub fn multipliers(b: &DiscriminantBundle) -> [Complex64; 4] {
    let pair = |d: Complex64| {
        let s = (d * d - 1.0).sqrt();
        let (a, c) = (d + s, d - s);
        let big = if a.norm() >= c.norm() { a } else { c };
        if big.norm() == 0.0 {
            (big, big)
        } else {
            (big, 1.0 / big)
        }
    };
    let (a, b1) = pair(b.delta1);
    let (c, d) = pair(b.delta2);
    [a, b1, c, d]
}

/// Spectral multiplicity 0, 2 or 4 at a real λ.
pub fn spectral_indicator(b: &DiscriminantBundle) -> u8 {
    if !b.branch_real {
        return 0;
    }
    let inside = |d: Complex64| (-1.0..=1.0).contains(&d.re);
    2 * (inside(b.delta1) as u8 + inside(b.delta2) as u8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::free_discriminants;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_bundle_examples() {
        let zero = CoefficientSet::zero();
        let b = bundle(&zero, &SpectralPoint::real(PI.powi(4))).unwrap();
        assert!((b.rho.re - 39.639).abs() < 1e-3);
        assert!((b.delta1.re - PI.cosh()).abs() < 1e-9);
        assert!((b.delta2.re + 1.0).abs() < 1e-9);
        let b = bundle(&zero, &SpectralPoint::real(0.0)).unwrap();
        assert!(b.d_plus.norm() < 1e-14 && (b.d_minus.re - 4.0).abs() < 1e-14 && b.rho.norm() < 1e-14);
    }

    #[test]
    fn integrated_free_bundle_matches_closed_form() {
        for lam in [c(50.0, 0.0), c(-50.0, 0.0), c(3000.0, -200.0)] {
            let pt = SpectralPoint::new(lam);
            let b = bundle(&CoefficientSet::zero(), &pt).unwrap();
            let f = free_discriminants(&pt);
            let s = b.scale();
            for (x, y) in [(b.t1, f.t1), (b.t2, f.t2), (b.rho, f.rho), (b.d_plus, f.d_plus), (b.d_minus, f.d_minus)] {
                assert!((x - y).norm() < 1e-10 * s, "{lam}");
            }
        }
    }

    #[test]
    fn identities_at_cos_potential() {
        let b = bundle(&CoefficientSet::cos1(), &SpectralPoint::real(50.0)).unwrap();
        assert!(b.max_identity_residual() < 1e-9 * b.t2.norm().max(1.0));
        if b.branch_real {
            assert!(b.delta1.re >= b.delta2.re);
        }
    }

    #[test]
    fn complex_pair_when_rho_negative() {
        let b = bundle(&CoefficientSet::zero(), &SpectralPoint::real(-50.0)).unwrap();
        assert!(!b.branch_real);
        assert!((b.delta2 - b.delta1.conj()).norm() < 1e-12);
    }

    #[test]
    fn char_poly_examples() {
        assert!(char_poly_check(&CoefficientSet::zero(), &SpectralPoint::real(1.0)).unwrap() < 1e-10);
        let constant_p = CoefficientSet::new(crate::TrigSeries::new(1.0, vec![], vec![]), crate::TrigSeries::zero()).unwrap();
        assert!(char_poly_check(&constant_p, &SpectralPoint::real(5.0)).unwrap() < 1e-8);
    }

    #[test]
    fn multiplier_examples() {
        let mut b = DiscriminantBundle::from_traces(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0));
        b.delta1 = c(1.0, 0.0);
        b.delta2 = c(0.0, 0.0);
        let m = multipliers(&b);
        assert!((m[0] - 1.0).norm() < 1e-12 && (m[1] - 1.0).norm() < 1e-12);
        assert!((m[2] * m[3] - 1.0).norm() < 1e-14);
        assert!((m[2] - c(0.0, 1.0)).norm() < 1e-14 || (m[2] - c(0.0, -1.0)).norm() < 1e-14);

        let b = bundle(&CoefficientSet::zero(), &SpectralPoint::real(PI.powi(4))).unwrap();
        let m = multipliers(&b);
        assert!((m[0] - PI.exp()).norm() < 1e-8 && (m[1] - (-PI).exp()).norm() < 1e-10);
        assert!((m[2] + 1.0).norm() < 1e-6 && (m[3] + 1.0).norm() < 1e-6);
    }

    #[test]
    fn indicator_examples() {
        let zero = CoefficientSet::zero();
        assert_eq!(spectral_indicator(&bundle(&zero, &SpectralPoint::real(50.0)).unwrap()), 2);
        assert_eq!(spectral_indicator(&bundle(&zero, &SpectralPoint::real(-50.0)).unwrap()), 0);
        let mut b = DiscriminantBundle::from_traces(c(1.0, 0.0), c(0.15, 0.0), c(0.0, 0.0));
        b.delta1 = c(0.5, 0.0);
        b.delta2 = c(-0.2, 0.0);
        b.branch_real = true;
        assert_eq!(spectral_indicator(&b), 4);
    }

    #[test]
    fn derivative_of_rho_matches_difference() {
        let cset = CoefficientSet::cos1();
        let opts = IntegratorOptions::fast(1e-13);
        let lam = 37.0;
        let (_, d) = bundle_with_derivative(&cset, &SpectralPoint::real(lam), &opts).unwrap();
        let h = 1e-4 * lam;
        let p = bundle_with(&cset, &SpectralPoint::real(lam + h), &opts).unwrap();
        let m = bundle_with(&cset, &SpectralPoint::real(lam - h), &opts).unwrap();
        let fd = (p.rho - m.rho) / (2.0 * h);
        assert!((fd - d.rho).norm() < 1e-6 * d.rho.norm());
        let fd = (p.d_plus - m.d_plus) / (2.0 * h);
        assert!((fd - d.d_plus).norm() < 1e-6 * d.d_plus.norm());
    }
}
