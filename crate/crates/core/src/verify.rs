//! Seeded invariant suites over randomized trigonometric coefficients: algebraic
//! identities of the discriminant bundle, perturbation bounds against the free
//! operator, zero counts in the standard contours, and conjugate pairing.

use crate::coeffs::{CoefficientSet, TrigSeries};
use crate::discriminants::{char_poly_residual, multipliers, BundleDerivative, DiscriminantBundle};
use crate::error::Result;
use crate::monodromy::{integrate_monodromy_with, CMatrix4, IntegratorOptions, CLAMP_X};
use crate::picard::eta_nu;
use crate::reference::{free_discriminants, SpectralPoint};
use crate::zeros::{ContourSpec, SearchRange, ZeroFunction, ZeroSolver};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::FRAC_PI_4;

const ROUCHE_NODES: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub seed: u64,
    pub random_sets: usize,
    pub lambdas_per_set: usize,
    /// How many of the sets (in order) enter the count and pairing suites.
    pub contour_sets: usize,
    pub count_n_max: usize,
    pub tol_ode: f64,
    pub identity_rtol: f64,
    pub det_rtol: f64,
    pub pairing_tol: f64,
    pub lambda_range: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 0x5eed_f10c,
            random_sets: 50,
            lambdas_per_set: 20,
            contour_sets: 8,
            count_n_max: 2,
            tol_ode: 1e-12,
            identity_rtol: 1e-8,
            det_rtol: 1e-9,
            pairing_tol: 1e-8,
            lambda_range: 1e4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub set: usize,
    pub lambda: Complex64,
    pub residual: f64,
}

/// Outcome of one suite. `max_residual` is in the suite's own normalization,
/// passing when it is at most `tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub statement: String,
    pub checks: usize,
    /// Points outside the statement's domain, or where its hypothesis was not observed.
    pub skipped: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub violations: Vec<Violation>,
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str, statement: &str, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            statement: statement.into(),
            checks: 0,
            skipped: 0,
            max_residual: 0.0,
            tolerance,
            violations: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn record(&mut self, set: usize, lambda: Complex64, residual: f64) {
        self.checks += 1;
        // NaN residuals count as violations
        if !(residual <= self.tolerance) {
            self.violations.push(Violation { set, lambda, residual });
        }
        if residual.is_nan() || residual > self.max_residual {
            self.max_residual = residual;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Random coefficients: p and q with modes 1..=3, amplitudes decaying like 1/k².
/// With `perturbative` set, q = 0 and p has zero mean.
pub fn random_coefficients(rng: &mut impl Rng, perturbative: bool) -> CoefficientSet {
    let mut series = |zero_mean: bool| {
        let constant = if zero_mean { 0.0 } else { rng.gen_range(-1.0..1.0) };
        let modes = rng.gen_range(1..=3usize);
        let mut draw = |k: usize| rng.gen_range(-1.0..1.0) / (k * k) as f64;
        let cos = (1..=modes).map(&mut draw).collect();
        let sin = (1..=modes).map(&mut draw).collect();
        TrigSeries::new(constant, cos, sin)
    };
    let p = series(perturbative);
    let q = if perturbative { TrigSeries::zero() } else { series(false) };
    CoefficientSet::new(p, q).expect("finite draws")
}

/// The coefficient sets a run covers: `extra` first, then the seeded random draws.
/// Every fourth random set is perturbative.
pub fn test_sets(cfg: &VerifyConfig, extra: &[CoefficientSet]) -> Vec<CoefficientSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sets = extra.to_vec();
    sets.extend((0..cfg.random_sets).map(|k| random_coefficients(&mut rng, k % 4 == 3)));
    sets
}

fn lambda_rng(cfg: &VerifyConfig, set: usize, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed ^ (set as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt)
}

/// Real sample points in [−R, R].
fn real_points(cfg: &VerifyConfig, set: usize) -> Vec<SpectralPoint> {
    let mut rng = lambda_rng(cfg, set, 1);
    (0..cfg.lambdas_per_set)
        .map(|_| SpectralPoint::real(rng.gen_range(-cfg.lambda_range..=cfg.lambda_range)))
        .collect()
}

/// Half real points, half complex with quarter-root in the principal sector and
/// |z| up to 22, so that the large-|λ| domains are reached for moderate κ.
fn bound_points(cfg: &VerifyConfig, set: usize) -> Vec<SpectralPoint> {
    let mut rng = lambda_rng(cfg, set, 2);
    let mut pts = real_points(cfg, set);
    pts.truncate(cfg.lambdas_per_set / 2);
    while pts.len() < cfg.lambdas_per_set {
        let r: f64 = rng.gen_range(0.3..22.0);
        let theta: f64 = rng.gen_range(-FRAC_PI_4..FRAC_PI_4);
        pts.push(SpectralPoint::from_z(Complex64::from_polar(r, theta)));
    }
    pts
}

/// Rounding allowance for a quantity of magnitude `scale` at integrator tolerance `rtol`.
fn floor(scale: f64, rtol: f64) -> f64 {
    (64.0 * f64::EPSILON + rtol) * scale
}

/// Smallest singular value of M − τI relative to ‖M‖: backward error of τ as an eigenvalue.
fn eigen_backward_error(m: &CMatrix4, tau: Complex64) -> f64 {
    let shifted = m - CMatrix4::identity() * tau;
    shifted.svd(false, false).singular_values.min() / m.norm()
}

/// Identities, characteristic polynomial, det M, multiplier pairing and nonvanishing
/// branch derivative inside the bands, at real λ.
pub fn identity_suite(cfg: &VerifyConfig, sets: &[CoefficientSet]) -> Result<Vec<SuiteReport>> {
    let mut ident = SuiteReport::new(
        "identities",
        "T = 4T₁² − T₂, ρ = (T₂+1)/2 − T₁², D± = (T ∓ 4T₁ + 1)/2, D± = (T₁ ∓ 1)² − ρ, \
         Δ₁² + Δ₂² = 1 + T₂, Δ₁Δ₂ = (T − 1)/2; residual relative to the bundle scale",
        cfg.identity_rtol,
    );
    let mut charpoly = SuiteReport::new(
        "char-poly",
        "det(M − τI) = τ⁴ − 4T₁τ³ + 2Tτ² − 4T₁τ + 1; coefficient residual relative to the bundle scale",
        cfg.identity_rtol,
    );
    let mut det = SuiteReport::new("det-M", "det M = 1; |det M − 1| relative to the bundle scale", cfg.det_rtol);
    let mut pairs = SuiteReport::new(
        "multipliers",
        "τ and 1/τ from τ² − 2Δντ + 1 = 0 are eigenvalues of M; σ_min(M − τI)/‖M‖",
        cfg.pairing_tol,
    );
    let mut slope = SuiteReport::new(
        "branch-derivative",
        "Δν′(λ) ≠ 0 where Δν ∈ (−1, 1) and ρ > 0; residual is 0 when Δν′ is finite and nonzero, ∞ otherwise",
        0.0,
    );
    let opts = IntegratorOptions::fast(cfg.tol_ode);
    let mut det_abs: f64 = 0.0;
    for (k, c) in sets.iter().enumerate() {
        for pt in real_points(cfg, k) {
            let r = integrate_monodromy_with(c, &pt, true, &opts)?;
            let b = DiscriminantBundle::from_matrix(pt.lambda, &r.m);
            let scale = b.scale();
            ident.record(k, pt.lambda, b.max_identity_residual() / scale);
            charpoly.record(k, pt.lambda, char_poly_residual(&r.m) / scale);
            let d = (r.m.determinant() - 1.0).norm();
            det_abs = det_abs.max(d);
            det.record(k, pt.lambda, d / scale);
            let worst = multipliers(&b)
                .iter()
                .map(|&tau| eigen_backward_error(&r.m, tau))
                .fold(0.0, f64::max);
            pairs.record(k, pt.lambda, worst);

            let dm = r.dm_dlambda.expect("derivative requested");
            let deriv = BundleDerivative::from_matrices(pt.lambda, &b, &r.m, &dm);
            // stay clear of branch points, where the formula for Δν′ is singular
            if b.branch_real && b.rho.re > 1e-6 * scale {
                for nu in [1, 2] {
                    let delta = if nu == 1 { b.delta1.re } else { b.delta2.re };
                    if delta.abs() < 1.0 {
                        let dv = deriv.delta(&b, nu).re.abs();
                        slope.record(k, pt.lambda, if dv > 0.0 && dv.is_finite() { 0.0 } else { f64::INFINITY });
                    } else {
                        slope.skipped += 1;
                    }
                }
            } else {
                slope.skipped += 2;
            }
        }
    }
    det.notes.push(format!("max absolute |det M − 1| = {det_abs:.3e}"));
    Ok(vec![ident, charpoly, det, pairs, slope])
}

/// Perturbation bounds against the free operator, with the rounding allowance of
/// `floor` added to each right-hand side. Residual is lhs / (bound + allowance).
pub fn bound_suite(cfg: &VerifyConfig, sets: &[CoefficientSet]) -> Result<Vec<SuiteReport>> {
    let mut trace = [
        SuiteReport::new("trace-bound-1", "|T₁ − T₁⁰| ≤ κ/(2|z|₁)·e^{x+κ}", 1.0),
        SuiteReport::new("trace-bound-2", "|T₂ − T₂⁰| ≤ 2κ/(2|z|₁)·e^{2x+κ}", 1.0),
    ];
    let mut rho = SuiteReport::new("rho-bound", "|ρ − ρ⁰| ≤ 3κ/|z|₁·e^{2x+κ}", 1.0);
    let mut dpm = SuiteReport::new(
        "discriminant-bound",
        "|D± − D±⁰| ≤ 7κ/|z|·e^{x+|y|} for |λ| > 4⁴·max(1, κ⁴)",
        1.0,
    );
    let mut tb = SuiteReport::new("T-bound", "|T − T⁰| ≤ 9κ/|z|·e^{x+|y|} for |λ| > 3⁴·max(1, κ⁴)", 1.0);
    let mut second = SuiteReport::new(
        "second-order",
        "q = 0, mean-zero p: |T_ν − T_ν⁰ − η_ν/4| ≤ (νκ)³e^{xν+κ}/(6|z|₁³), |z| ≤ 8",
        1.0,
    );
    let opts = IntegratorOptions::fast(cfg.tol_ode);
    for (k, c) in sets.iter().enumerate() {
        let kappa = c.kappa();
        let perturbative = c.q.is_zero() && c.fourier_p0() == 0.0 && !c.is_free();
        for pt in bound_points(cfg, k) {
            if pt.x() > CLAMP_X {
                continue;
            }
            let r = integrate_monodromy_with(c, &pt, false, &opts)?;
            let b = DiscriminantBundle::from_matrix(pt.lambda, &r.m);
            let f = free_discriminants(&pt);
            let (x, y, zabs, z1) = (pt.x(), pt.y(), pt.z.norm(), pt.z1());
            let scale = b.scale();
            let ratio = |lhs: f64, bound: f64, mag: f64| lhs / (bound + floor(mag, cfg.tol_ode));

            let t_free = [f.t1, f.t2];
            let t_num = [b.t1, b.t2];
            for nu in 1..=2 {
                let nf = nu as f64;
                let bound = nf * kappa / (2.0 * z1) * (x * nf + kappa).exp();
                let diff = (t_num[nu - 1] - t_free[nu - 1]).norm();
                trace[nu - 1].record(k, pt.lambda, ratio(diff, bound, 1.0 + t_num[nu - 1].norm()));
            }
            let bound = 3.0 * kappa / z1 * (2.0 * x + kappa).exp();
            rho.record(k, pt.lambda, ratio((b.rho - f.rho).norm(), bound, scale));

            let lam = pt.lambda.norm();
            let k4 = kappa.powi(4).max(1.0);
            let growth = (x + y.abs()).exp() / zabs;
            if lam > 256.0 * k4 {
                let diff = (b.d_plus - f.d_plus).norm().max((b.d_minus - f.d_minus).norm());
                dpm.record(k, pt.lambda, ratio(diff, 7.0 * kappa * growth, scale));
            } else {
                dpm.skipped += 1;
            }
            if lam > 81.0 * k4 {
                tb.record(k, pt.lambda, ratio((b.t - f.t).norm(), 9.0 * kappa * growth, scale));
            } else {
                tb.skipped += 1;
            }

            if perturbative && zabs <= 8.0 {
                for nu in 1..=2 {
                    let nf = nu as f64;
                    let (eta, _) = eta_nu(c, &pt, nu)?;
                    let lhs = (t_num[nu - 1] - t_free[nu - 1] - eta / 4.0).norm();
                    let bound = (nf * kappa).powi(3) * (x * nf + kappa).exp() / (6.0 * z1.powi(3));
                    second.record(k, pt.lambda, ratio(lhs, bound, 1.0 + t_num[nu - 1].norm()));
                }
            } else {
                second.skipped += 2;
            }
        }
    }
    let [t1, t2] = trace;
    Ok(vec![t1, t2, rho, dpm, tb, second])
}

fn free_value(f: ZeroFunction, pt: &SpectralPoint) -> Complex64 {
    f.pick(&free_discriminants(pt))
}

/// The contour for family `f` at index N with the free count it must reproduce.
fn family_contour(f: ZeroFunction, n: usize) -> (ContourSpec, i64) {
    let range = SearchRange::uniform(n);
    match f {
        ZeroFunction::Rho => (ContourSpec::lambda_disk(range.resonance_radius()), 2 * n as i64 + 1),
        ZeroFunction::Dplus => (ContourSpec::lambda_disk(range.periodic_radius()), 2 * n as i64 + 1),
        ZeroFunction::Dminus => (ContourSpec::lambda_disk(range.antiperiodic_radius()), 2 * n as i64),
    }
}

/// Whether |f − f⁰| < |f⁰| holds at every sampled contour node, the hypothesis under
/// which the perturbed count equals the free one.
fn rouche_observed(solver: &ZeroSolver<'_>, f: ZeroFunction, spec: &ContourSpec) -> Result<bool> {
    for k in 0..ROUCHE_NODES {
        let lambda = spec.point(k as f64 / ROUCHE_NODES as f64);
        let pt = SpectralPoint::new(lambda);
        if pt.x() > CLAMP_X {
            return Ok(false);
        }
        let (v, _) = solver.value(f, lambda)?;
        let v0 = free_value(f, &pt);
        if (v - v0).norm() >= v0.norm() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Zero counts of ρ and D± in the standard disks, checked where the Rouché
/// hypothesis is observed on the contour. Residual is |count − expected|.
pub fn count_suite(cfg: &VerifyConfig, sets: &[CoefficientSet]) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(
        "zero-counts",
        "ρ: 2N+1 zeros in |λ| < 4(π(N+½))⁴; D₊: 2N+1 in |λ|^{1/4} < 2π(N+½); D₋: 2N in |λ|^{1/4} < 2πN",
        0.0,
    );
    for (k, c) in sets.iter().take(cfg.contour_sets).enumerate() {
        let solver = ZeroSolver::with_tolerances(c, cfg.tol_ode, 1e-14);
        for n in 1..=cfg.count_n_max {
            for f in [ZeroFunction::Rho, ZeroFunction::Dplus, ZeroFunction::Dminus] {
                let (spec, expected) = family_contour(f, n);
                if !rouche_observed(&solver, f, &spec)? {
                    rep.skipped += 1;
                    continue;
                }
                let got = solver.count(f, &spec)?;
                rep.record(k, Complex64::new(n as f64, 0.0), (got - expected).abs() as f64);
            }
        }
    }
    Ok(rep)
}

/// Conjugate closure of the ρ-zeros in the N-disk and parity of the real ones,
/// wherever the count suite's hypothesis holds. Residual is the worst relative
/// distance from a conjugate to the nearest zero; parity failures are infinite.
pub fn pairing_suite(cfg: &VerifyConfig, sets: &[CoefficientSet]) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(
        "conjugate-pairing",
        "ρ-zeros are closed under conjugation and the real ones have odd total multiplicity",
        cfg.pairing_tol,
    );
    for (k, c) in sets.iter().take(cfg.contour_sets).enumerate() {
        let solver = ZeroSolver::with_tolerances(c, cfg.tol_ode, 1e-14);
        for n in 1..=cfg.count_n_max {
            let (spec, _) = family_contour(ZeroFunction::Rho, n);
            if !rouche_observed(&solver, ZeroFunction::Rho, &spec)? {
                rep.skipped += 1;
                continue;
            }
            let zeros = solver.zeros_in_lambda_disk(ZeroFunction::Rho, SearchRange::uniform(n).resonance_radius())?;
            let mut worst: f64 = 0.0;
            for z in &zeros {
                let target = z.lambda.conj();
                let d = zeros
                    .iter()
                    .map(|w| (w.lambda - target).norm())
                    .fold(f64::INFINITY, f64::min);
                worst = worst.max(d / z.lambda.norm().max(1.0));
            }
            let real: u32 = zeros.iter().filter(|z| z.is_real()).map(|z| z.multiplicity).sum();
            if real.is_multiple_of(2) {
                worst = f64::INFINITY;
            }
            rep.record(k, Complex64::new(n as f64, 0.0), worst);
        }
    }
    Ok(rep)
}

/// All suites on `extra` followed by the seeded random sets. A suite that aborts
/// on a numerical error is reported as failed with the error in its notes.
pub fn run_all(cfg: &VerifyConfig, extra: &[CoefficientSet]) -> Vec<SuiteReport> {
    let sets = test_sets(cfg, extra);
    let aborted = |name: &str, e: crate::error::Error| {
        let mut r = SuiteReport::new(name, "suite aborted", 0.0);
        r.max_residual = f64::INFINITY;
        r.violations.push(Violation { set: 0, lambda: Complex64::new(f64::NAN, 0.0), residual: f64::INFINITY });
        r.notes.push(format!("aborted: {e}"));
        r
    };
    let mut out = identity_suite(cfg, &sets).unwrap_or_else(|e| vec![aborted("identities", e)]);
    out.extend(bound_suite(cfg, &sets).unwrap_or_else(|e| vec![aborted("bounds", e)]));
    out.push(count_suite(cfg, &sets).unwrap_or_else(|e| aborted("zero-counts", e)));
    out.push(pairing_suite(cfg, &sets).unwrap_or_else(|e| aborted("conjugate-pairing", e)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VerifyConfig {
        VerifyConfig { random_sets: 3, lambdas_per_set: 6, contour_sets: 2, count_n_max: 1, ..Default::default() }
    }

    #[test]
    fn random_sets_are_reproducible() {
        let cfg = small();
        let a = test_sets(&cfg, &[]);
        let b = test_sets(&cfg, &[]);
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        let other = test_sets(&VerifyConfig { seed: 1, ..cfg }, &[]);
        assert_ne!(a, other);
    }

    #[test]
    fn free_operator_passes_every_suite() {
        let cfg = VerifyConfig { random_sets: 0, ..small() };
        for rep in run_all(&cfg, &[CoefficientSet::zero()]) {
            assert!(rep.passed(), "{}: {:?}", rep.name, rep.violations);
        }
    }

    #[test]
    fn loose_integration_breaks_det() {
        let cfg = VerifyConfig { tol_ode: 1e-2, random_sets: 2, ..small() };
        let sets = test_sets(&cfg, &[CoefficientSet::cos1()]);
        let reps = identity_suite(&cfg, &sets).unwrap();
        let det = reps.iter().find(|r| r.name == "det-M").unwrap();
        assert!(!det.passed(), "max {}", det.max_residual);
    }
}

