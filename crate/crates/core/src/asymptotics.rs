//! Closed-form large-n and small-ε predictions, compared with computed zeros.

use crate::coeffs::CoefficientSet;
use crate::discriminants::bundle_with;
use crate::error::{Error, Result};
use crate::monodromy::IntegratorOptions;
use crate::reference::SpectralPoint;
use crate::zeros::{ContourSpec, LocatedZero, Shape, ZeroFunction, ZeroSolver};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticComparison {
    /// n, ε or λ depending on the sweep.
    pub parameter: f64,
    pub quantity: String,
    pub predicted: Complex64,
    pub computed: Complex64,
    /// |predicted − computed|
    pub residual: f64,
    pub expected_order: String,
}

impl AsymptoticComparison {
    fn new(parameter: f64, quantity: impl Into<String>, predicted: Complex64, computed: Complex64, order: &str) -> Self {
        Self {
            parameter,
            quantity: quantity.into(),
            predicted,
            computed,
            residual: (predicted - computed).norm(),
            expected_order: order.into(),
        }
    }
}

/// Predicted (rₙ⁻, rₙ⁺) = −4(πn)⁴ + 2p̂₀(πn)² ∓ √2·πn|p̂ₙ′|.
pub fn resonance_asymptote(c: &CoefficientSet, n: usize) -> Result<(Complex64, Complex64)> {
    if n == 0 {
        return Err(Error::Precondition("n ≥ 1".into()));
    }
    let k = PI * n as f64;
    let base = -4.0 * k.powi(4) + 2.0 * c.fourier_p0() * k * k;
    let split = 2f64.sqrt() * k * c.fourier_pprime_n(n).norm();
    Ok((Complex64::new(base - split, 0.0), Complex64::new(base + split, 0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenvalueAsymptote {
    pub minus: f64,
    pub plus: f64,
    pub gap: f64,
}

/// Predicted λₙ∓ = (πn)⁴ − p̂₀(πn)² ∓ πn|p̂ₙ′|/2, gap πn|p̂ₙ′|.
pub fn eigenvalue_asymptote(c: &CoefficientSet, n: usize) -> Result<EigenvalueAsymptote> {
    if n == 0 {
        return Err(Error::Precondition("n ≥ 1".into()));
    }
    let k = PI * n as f64;
    let base = k.powi(4) - c.fourier_p0() * k * k;
    let gap = k * c.fourier_pprime_n(n).norm();
    Ok(EigenvalueAsymptote { minus: base - gap / 2.0, plus: base + gap / 2.0, gap })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationPrediction {
    pub eps: f64,
    pub r0_pred: f64,
    pub l0_pred: f64,
    /// 4A²ε⁴ as printed.
    pub gap_pred: f64,
    /// A²ε⁴/4, the value consistent with the quarter-trace normalization.
    pub gap_pred_trace_normalized: f64,
    /// 1 − ε²A as printed.
    pub t1_at_l0_pred: f64,
    pub amplitude: f64,
}

/// Second-order positions and fourth-order gap for ε·p with zero-mean p and q = 0.
pub fn perturbation_predictions(c: &CoefficientSet, eps: f64) -> Result<PerturbationPrediction> {
    if c.fourier_p0().abs() > 1e-12 || !c.q.is_zero() || eps.abs() > 1.0 {
        return Err(Error::Precondition("needs p̂₀ = 0, q = 0 and |ε| ≤ 1".into()));
    }
    let (v1, v2) = c.perturbation_moments()?;
    let a = c.amplitude_a()?;
    let pos = 2.0 * eps * eps * (4.0 * v1 - v2);
    let e4 = eps.powi(4);
    Ok(PerturbationPrediction {
        eps,
        r0_pred: pos,
        l0_pred: pos,
        gap_pred: 4.0 * a * a * e4,
        gap_pred_trace_normalized: a * a * e4 / 4.0,
        t1_at_l0_pred: 1.0 - eps * eps * a,
        amplitude: a,
    })
}

/// One row of a small-ε sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationRow {
    pub eps: f64,
    pub r0: Option<f64>,
    pub l0: Option<f64>,
    pub gap: Option<f64>,
    pub t1_at_l0: Option<f64>,
    /// r₀⁻ multiplicity and the indicator on (r₀⁻, λ₀⁺).
    pub r0_multiplicity: Option<u32>,
    pub indicator_inside: Option<u8>,
    pub prediction: Option<PerturbationPrediction>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationSweep {
    pub rows: Vec<PerturbationRow>,
    /// Least-squares slope of log gap against log ε over rows with positive gap.
    pub gap_slope: Option<f64>,
    /// Slope of log(1 − T₁(λ₀⁺)) against log ε.
    pub t1_slope: Option<f64>,
    /// gap / (A²ε⁴) at the smallest ε, to compare with the printed 4 and the
    /// normalization-consistent 1/4.
    pub gap_prefactor: Option<f64>,
    /// (1 − T₁(λ₀⁺)) / (ε²A) at the smallest ε.
    pub t1_prefactor: Option<f64>,
}

pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(|p| (p.0.ln(), p.1.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// The largest real ρ-zero and the smallest D₊-zero of ε·c near the bottom of the spectrum.
pub fn bottom_pair(c: &CoefficientSet, tol_ode: f64) -> Result<(LocatedZero, LocatedZero)> {
    let solver = ZeroSolver::with_tolerances(c, tol_ode, 1e-15);
    let radius = (2.0 * crate::spectrum::spectrum_lower_bound(c).abs()).max(50.0);
    let pick = |f: ZeroFunction, top: bool| -> Result<LocatedZero> {
        let zs = solver.zeros_in_lambda_disk(f, radius)?;
        let real = zs.into_iter().filter(|z| z.is_real());
        let best = if top {
            real.max_by(|a, b| a.lambda.re.total_cmp(&b.lambda.re))
        } else {
            real.min_by(|a, b| a.lambda.re.total_cmp(&b.lambda.re))
        };
        best.ok_or_else(|| Error::Resolution(format!("no real {f:?} zero with |λ| < {radius}")))
    };
    Ok((pick(ZeroFunction::Rho, true)?, pick(ZeroFunction::Dplus, false)?))
}

/// Locate r₀⁻, λ₀⁺ for each ε·c and attach the predictions. Failures are kept per row.
pub fn perturbation_sweep(c: &CoefficientSet, eps_list: &[f64], tol_ode: f64) -> PerturbationSweep {
    let opts = IntegratorOptions::fast(tol_ode);
    let rows: Vec<PerturbationRow> = eps_list
        .iter()
        .map(|&eps| {
            let mut row = PerturbationRow {
                eps,
                r0: None,
                l0: None,
                gap: None,
                t1_at_l0: None,
                r0_multiplicity: None,
                indicator_inside: None,
                prediction: perturbation_predictions(c, eps).ok(),
                error: None,
            };
            let run = || -> Result<(LocatedZero, LocatedZero, f64, Option<u8>)> {
                let ce = c.scaled(eps)?;
                let (r0, l0) = bottom_pair(&ce, tol_ode)?;
                let b = bundle_with(&ce, &SpectralPoint::real(l0.lambda.re), &opts)?;
                let inside = if l0.lambda.re > r0.lambda.re {
                    let mid = 0.5 * (r0.lambda.re + l0.lambda.re);
                    let bm = bundle_with(&ce, &SpectralPoint::real(mid), &opts)?;
                    Some(crate::discriminants::spectral_indicator(&bm))
                } else {
                    None
                };
                Ok((r0, l0, b.t1.re, inside))
            };
            match run() {
                Ok((r0, l0, t1, inside)) => {
                    row.r0 = Some(r0.lambda.re);
                    row.l0 = Some(l0.lambda.re);
                    row.gap = Some(l0.lambda.re - r0.lambda.re);
                    row.t1_at_l0 = Some(t1);
                    row.r0_multiplicity = Some(r0.multiplicity);
                    row.indicator_inside = inside;
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect();
    let gaps: Vec<(f64, f64)> = rows.iter().filter_map(|r| Some((r.eps, r.gap?))).collect();
    let t1s: Vec<(f64, f64)> = rows.iter().filter_map(|r| Some((r.eps, 1.0 - r.t1_at_l0?))).collect();
    let smallest = rows
        .iter()
        .filter(|r| r.eps > 0.0 && r.gap.is_some() && r.prediction.is_some())
        .min_by(|a, b| a.eps.total_cmp(&b.eps));
    let (gap_prefactor, t1_prefactor) = match smallest {
        Some(r) => {
            let p = r.prediction.expect("filtered");
            let a2e4 = p.amplitude.powi(2) * r.eps.powi(4);
            let a_e2 = p.amplitude * r.eps.powi(2);
            (r.gap.map(|g| g / a2e4), r.t1_at_l0.map(|t| (1.0 - t) / a_e2))
        }
        None => (None, None),
    };
    PerturbationSweep {
        gap_slope: loglog_slope(&gaps),
        t1_slope: loglog_slope(&t1s),
        rows,
        gap_prefactor,
        t1_prefactor,
    }
}

/// Computed λₙ∓ from the two D± zeros in {|λ^{1/4} − πn| < π/2}.
pub fn computed_eigenvalue_pair(solver: &ZeroSolver<'_>, n: usize) -> Result<(f64, f64)> {
    let f = if n.is_multiple_of(2) { ZeroFunction::Dplus } else { ZeroFunction::Dminus };
    let spec = ContourSpec::z_disk(Complex64::new(PI * n as f64, 0.0), PI / 2.0);
    let zs = solver.zeros_in(f, &spec)?;
    let mut vals: Vec<f64> = Vec::new();
    for z in &zs {
        if !z.is_real() {
            return Err(Error::Resolution(format!("non-real eigenvalue {}", z.lambda)));
        }
        vals.extend(std::iter::repeat_n(z.lambda.re, z.multiplicity as usize));
    }
    if vals.len() != 2 {
        return Err(Error::Resolution(format!("expected two eigenvalues near (πn)⁴ for n = {n}, found {}", vals.len())));
    }
    vals.sort_by(f64::total_cmp);
    Ok((vals[0], vals[1]))
}

/// Computed rₙ∓ from the two ρ-zeros in the domain around −4(πn)⁴, ordered so that
/// the first is rₙ⁻ (upper half plane, or smaller if real).
pub fn computed_resonance_pair(solver: &ZeroSolver<'_>, n: usize) -> Result<(Complex64, Complex64)> {
    let zs = solver.zeros_in(ZeroFunction::Rho, &ContourSpec::new(Shape::ResonanceDomain { n }))?;
    let mut vals: Vec<Complex64> = Vec::new();
    for z in &zs {
        vals.extend(std::iter::repeat_n(z.lambda, z.multiplicity as usize));
    }
    if vals.len() != 2 {
        return Err(Error::Resolution(format!("expected two resonances near −4(πn)⁴ for n = {n}, found {}", vals.len())));
    }
    let (a, b) = (vals[0], vals[1]);
    let minus_first = if a.im != 0.0 || b.im != 0.0 { a.im > b.im } else { a.re <= b.re };
    Ok(if minus_first { (a, b) } else { (b, a) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LargeNRow {
    pub n: usize,
    pub minus: AsymptoticComparison,
    pub plus: AsymptoticComparison,
    pub gap_computed: f64,
    pub gap_predicted: f64,
}

impl LargeNRow {
    pub fn max_residual(&self) -> f64 {
        self.minus.residual.max(self.plus.residual)
    }
}

pub fn eigenvalue_comparisons(c: &CoefficientSet, ns: impl IntoIterator<Item = usize>) -> Result<Vec<LargeNRow>> {
    let solver = ZeroSolver::new(c);
    ns.into_iter()
        .map(|n| {
            let p = eigenvalue_asymptote(c, n)?;
            let (lo, hi) = computed_eigenvalue_pair(&solver, n)?;
            let r = |v: f64| Complex64::new(v, 0.0);
            Ok(LargeNRow {
                n,
                minus: AsymptoticComparison::new(n as f64, format!("lambda_{n}-"), r(p.minus), r(lo), "O(1)"),
                plus: AsymptoticComparison::new(n as f64, format!("lambda_{n}+"), r(p.plus), r(hi), "O(1)"),
                gap_computed: hi - lo,
                gap_predicted: p.gap,
            })
        })
        .collect()
}

pub fn resonance_comparisons(c: &CoefficientSet, ns: impl IntoIterator<Item = usize>) -> Result<Vec<LargeNRow>> {
    let solver = ZeroSolver::new(c);
    ns.into_iter()
        .map(|n| {
            let (pm, pp) = resonance_asymptote(c, n)?;
            let (m, p) = computed_resonance_pair(&solver, n)?;
            // a conjugate pair has no real splitting; compare real parts and the split magnitude
            Ok(LargeNRow {
                n,
                minus: AsymptoticComparison::new(n as f64, format!("r_{n}-"), pm, m, "O(1)"),
                plus: AsymptoticComparison::new(n as f64, format!("r_{n}+"), pp, p, "O(1)"),
                gap_computed: (p - m).norm(),
                gap_predicted: (pp - pm).norm(),
            })
        })
        .collect()
}

/// True when every later value is at most `margin` times the largest of the first two.
pub fn bounded_trend(values: &[f64], margin: f64) -> bool {
    if values.len() < 3 {
        return true;
    }
    let c = values[0].max(values[1]) * margin;
    values[2..].iter().all(|&v| v <= c)
}

/// Fitted coefficient α in mid(n) − leading(n) ≈ α·p̂₀(πn)², for eigenvalue and
/// resonance pairs (printed values: −1 and 2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanCoefficientFit {
    pub eigenvalue: f64,
    pub resonance: f64,
}

pub fn fit_mean_coefficient(c: &CoefficientSet, ns: &[usize]) -> Result<MeanCoefficientFit> {
    let p0 = c.fourier_p0();
    if p0.abs() < 1e-8 {
        return Err(Error::Precondition("the fit needs p̂₀ ≠ 0".into()));
    }
    let solver = ZeroSolver::new(c);
    let (mut ev, mut rs) = (Vec::new(), Vec::new());
    for &n in ns {
        let k = PI * n as f64;
        let (lo, hi) = computed_eigenvalue_pair(&solver, n)?;
        ev.push((0.5 * (lo + hi) - k.powi(4)) / (p0 * k * k));
        let (m, p) = computed_resonance_pair(&solver, n)?;
        rs.push((0.5 * (m + p).re + 4.0 * k.powi(4)) / (p0 * k * k));
    }
    let last = |v: &[f64]| *v.last().expect("non-empty n list");
    Ok(MeanCoefficientFit { eigenvalue: last(&ev), resonance: last(&rs) })
}

/// |Δ₁ − cosh z|·|z|/e^{|Re z|} and |Δ₂ − cos z|·|z|/e^{|Im z|} along a grid outside the
/// exclusion zones. Normalizing by the exponential type rather than by cosh z, cos z
/// keeps the ratio finite at zeros of cos z.
pub fn lyapunov_asymptote_check(c: &CoefficientSet, grid: &[Complex64]) -> Result<Vec<AsymptoticComparison>> {
    let opts = IntegratorOptions::fast(1e-12);
    let mut out = Vec::with_capacity(2 * grid.len());
    for &lam in grid {
        let pt = SpectralPoint::new(lam);
        let z = pt.z;
        let nmax = (z.norm() / PI).ceil() as i64 + 1;
        for n in 0..=nmax {
            let k = PI * n as f64;
            let near_res = [Complex64::new(k, k), Complex64::new(k, -k)].iter().any(|w| (z - w).norm() <= 1.0);
            let near_eig = (z - Complex64::new(k, 0.0)).norm() <= 1.0;
            if near_res || near_eig {
                return Err(Error::Precondition(format!("λ = {lam} lies in an exclusion zone (n = {n})")));
            }
        }
        let b = bundle_with(c, &pt, &opts)?;
        let (ch, co) = (z.cosh(), z.cos());
        // the principal root may order the branches either way off the real axis
        let (w1, w2) = (z.re.abs().exp(), z.im.abs().exp());
        let straight = (b.delta1 - ch).norm() / w1 + (b.delta2 - co).norm() / w2;
        let swapped = (b.delta2 - ch).norm() / w1 + (b.delta1 - co).norm() / w2;
        let (d1, d2) = if straight <= swapped { (b.delta1, b.delta2) } else { (b.delta2, b.delta1) };
        let zn = z.norm();
        let scaled = |d: Complex64, f: Complex64, w: f64| Complex64::new((d - f).norm() * zn / w, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        out.push(AsymptoticComparison::new(lam.re, "Delta1 vs cosh z", zero, scaled(d1, ch, w1), "O(1)"));
        out.push(AsymptoticComparison::new(lam.re, "Delta2 vs cos z", zero, scaled(d2, co, w2), "O(1)"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::TrigSeries;

    #[test]
    fn free_predictions_are_exact() {
        let z = CoefficientSet::zero();
        for n in 1..=4 {
            let (a, b) = resonance_asymptote(&z, n).unwrap();
            let want = -4.0 * (PI * n as f64).powi(4);
            assert_eq!((a.re, b.re), (want, want));
            let e = eigenvalue_asymptote(&z, n).unwrap();
            assert_eq!(e.gap, 0.0);
        }
        let p = perturbation_predictions(&z, 0.0).unwrap();
        assert_eq!((p.r0_pred, p.l0_pred, p.gap_pred), (0.0, 0.0, 0.0));
    }

    #[test]
    fn cosine_predictions() {
        let c = CoefficientSet::cos1();
        let (a, b) = resonance_asymptote(&c, 1).unwrap();
        assert!((b.re - a.re - 2.0 * 2f64.sqrt() * PI * PI).abs() < 1e-9);
        let e = eigenvalue_asymptote(&c, 1).unwrap();
        assert!((e.minus - (PI.powi(4) - PI * PI / 2.0)).abs() < 1e-9);
        let (a, b) = resonance_asymptote(&c, 2).unwrap();
        assert_eq!(a, b);
        let p = perturbation_predictions(&c, 0.1).unwrap();
        let amp = 1.0 / (8.0 * PI * PI);
        assert!((p.gap_pred - 4.0 * amp * amp * 1e-4).abs() < 1e-3 * p.gap_pred);
        assert!(p.r0_pred.abs() < 1e-14);
    }

    #[test]
    fn constant_p_fits_the_mean_coefficients() {
        // constant p is exactly solvable: λ = ξ⁴ − p₀ξ² and rₙ = −4(πn)⁴ + 2p₀(πn)² − p₀²/4
        let c = CoefficientSet::new(TrigSeries::new(0.3, vec![], vec![]), TrigSeries::zero()).unwrap();
        let fit = fit_mean_coefficient(&c, &[2, 3]).unwrap();
        assert!((fit.eigenvalue + 1.0).abs() < 1e-6, "{fit:?}");
        assert!((fit.resonance - 2.0).abs() < 1e-2, "{fit:?}");
    }

    #[test]
    fn lyapunov_ratios_free_and_excluded() {
        let grid: Vec<Complex64> = (3..=6).map(|k| Complex64::new((PI / 2.0 + k as f64 * PI).powi(4), 0.0)).collect();
        let rows = lyapunov_asymptote_check(&CoefficientSet::zero(), &grid).unwrap();
        // Δ₂ = T₁ − √ρ cancels terms of size e^{x}; that is the only error left
        for r in &rows {
            let x = r.parameter.powf(0.25);
            assert!(r.residual < 1e-13 * x.exp() * x, "{r:?}");
        }
        assert!(lyapunov_asymptote_check(&CoefficientSet::zero(), &[Complex64::new(PI.powi(4), 0.0)]).is_err());
        let rows = lyapunov_asymptote_check(&CoefficientSet::cos1(), &grid).unwrap();
        let d2: Vec<f64> = rows.iter().skip(1).step_by(2).map(|r| r.residual).collect();
        assert!(bounded_trend(&d2, 3.0), "{d2:?}");
    }

    #[test]
    fn slope_of_a_power_law() {
        let pts: Vec<(f64, f64)> = [0.05, 0.1, 0.2].iter().map(|&e: &f64| (e, 3.0 * e.powi(4))).collect();
        assert!((loglog_slope(&pts).unwrap() - 4.0).abs() < 1e-12);
    }
}
