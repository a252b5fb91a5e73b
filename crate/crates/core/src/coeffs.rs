//! Periodic coefficients p, q as finite trigonometric series.

use crate::error::{Error, Result};
use crate::quadrature::{integrate_doubling, integrate_real, integrate_triangle, GaussLegendre};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const SMOOTH_RTOL: f64 = 1e-10;
const KAPPA_RTOL: f64 = 1e-8;
const AMPLITUDE_RTOL: f64 = 1e-8;

/// `constant + Σ_k cos[k-1]·cos(2πkt) + sin[k-1]·sin(2πkt)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigSeries {
    #[serde(rename = "const", default)]
    pub constant: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl TrigSeries {
    pub fn new(constant: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        Self { constant, cos, sin }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Highest mode index present.
    pub fn cutoff(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    fn mode(&self, k: usize) -> (f64, f64) {
        (
            self.cos.get(k - 1).copied().unwrap_or(0.0),
            self.sin.get(k - 1).copied().unwrap_or(0.0),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0
            && self.cos.iter().all(|&v| v == 0.0)
            && self.sin.iter().all(|&v| v == 0.0)
    }

    fn is_finite(&self) -> bool {
        self.constant.is_finite()
            && self.cos.iter().all(|v| v.is_finite())
            && self.sin.iter().all(|v| v.is_finite())
    }

    /// Value and exact termwise derivative.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let t = t.rem_euclid(1.0);
        let mut v = self.constant;
        let mut d = 0.0;
        for k in 1..=self.cutoff() {
            let (a, b) = self.mode(k);
            let w = 2.0 * PI * k as f64;
            let (s, c) = (w * t).sin_cos();
            v += a * c + b * s;
            d += w * (b * c - a * s);
        }
        (v, d)
    }

    /// Primitive ∫₀ᵗ of the series.
    pub fn primitive(&self, t: f64) -> f64 {
        let mut v = self.constant * t;
        for k in 1..=self.cutoff() {
            let (a, b) = self.mode(k);
            let w = 2.0 * PI * k as f64;
            let (s, c) = (w * t).sin_cos();
            v += (a * s + b * (1.0 - c)) / w;
        }
        v
    }

    /// Complex coefficient of e^{i2πkt}.
    pub fn complex_mode(&self, k: usize) -> Complex64 {
        let (a, b) = self.mode(k);
        Complex64::new(a, -b) / 2.0
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            constant: s * self.constant,
            cos: self.cos.iter().map(|v| s * v).collect(),
            sin: self.sin.iter().map(|v| s * v).collect(),
        }
    }

    /// Series of t ↦ f(t + shift).
    pub fn shifted(&self, shift: f64) -> Self {
        let n = self.cutoff();
        let mut cos = Vec::with_capacity(n);
        let mut sin = Vec::with_capacity(n);
        for k in 1..=n {
            let (a, b) = self.mode(k);
            let (s, c) = (2.0 * PI * k as f64 * shift).sin_cos();
            cos.push(a * c + b * s);
            sin.push(b * c - a * s);
        }
        Self { constant: self.constant, cos, sin }
    }
}

#[derive(Deserialize)]
struct RawCoefficients {
    #[serde(default)]
    p: TrigSeries,
    #[serde(default)]
    q: TrigSeries,
}

/// The pair (p, q) together with the cached norm κ = ‖p‖₁ + ‖p′‖₁ + ‖q‖₁.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientSet {
    pub p: TrigSeries,
    pub q: TrigSeries,
    #[serde(skip)]
    kappa: f64,
}

impl CoefficientSet {
    pub fn new(p: TrigSeries, q: TrigSeries) -> Result<Self> {
        if !p.is_finite() || !q.is_finite() {
            return Err(Error::Input("non-finite Fourier coefficient".into()));
        }
        let mut c = Self { p, q, kappa: 0.0 };
        c.kappa = c.compute_kappa()?;
        Ok(c)
    }

    pub fn zero() -> Self {
        Self { p: TrigSeries::zero(), q: TrigSeries::zero(), kappa: 0.0 }
    }

    /// p = cos 2πt, q = 0.
    pub fn cos1() -> Self {
        Self::new(TrigSeries::new(0.0, vec![1.0], vec![]), TrigSeries::zero())
            .expect("preset is finite")
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "zero" => Ok(Self::zero()),
            "cos1" => Ok(Self::cos1()),
            other => Err(Error::Input(format!("unknown preset '{other}' (expected zero|cos1)"))),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawCoefficients =
            serde_json::from_str(text).map_err(|e| Error::Input(format!("coefficient file: {e}")))?;
        Self::new(raw.p, raw.q)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("coefficients serialize")
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.p.scaled(s), self.q.scaled(s))
    }

    pub fn shifted(&self, shift: f64) -> Result<Self> {
        Self::new(self.p.shifted(shift), self.q.shifted(shift))
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn is_free(&self) -> bool {
        self.p.is_zero() && self.q.is_zero()
    }

    pub fn cutoff(&self) -> usize {
        self.p.cutoff().max(self.q.cutoff())
    }

    /// Panel count giving a 16-point rule at least one panel per shortest wavelength.
    pub(crate) fn base_panels(&self) -> usize {
        self.cutoff().max(1)
    }

    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let (p, dp) = self.p.eval(t);
        let (q, _) = self.q.eval(t);
        (p, dp, q)
    }

    fn compute_kappa(&self) -> Result<f64> {
        if self.is_free() {
            return Ok(0.0);
        }
        let rule = GaussLegendre::new(8);
        integrate_real(
            &rule,
            0.0,
            1.0,
            16 * self.base_panels(),
            KAPPA_RTOL,
            1e-14,
            1 << 18,
            "kappa",
            |t| {
                let (p, dp, q) = self.eval(t);
                p.abs() + dp.abs() + q.abs()
            },
        )
    }

    /// p̂₀ = ∫₀¹ p.
    pub fn fourier_p0(&self) -> f64 {
        self.p.constant
    }

    /// p̂ₙ′ = ∫₀¹ p′(t) e^{−i2πnt} dt.
    pub fn fourier_pprime_n(&self, n: usize) -> Complex64 {
        assert!(n >= 1, "mode index must be positive");
        Complex64::new(0.0, 2.0 * PI * n as f64) * self.p.complex_mode(n)
    }

    /// v_ν = ∫₀^ν dt ∫₀ᵗ p(s)p(t)(ν−t+s)(t−s) ds for ν = 1, 2.
    pub fn perturbation_moments(&self) -> Result<(f64, f64)> {
        let rule = GaussLegendre::new(16);
        let v = |nu: f64| {
            integrate_triangle(
                &rule,
                nu,
                self.base_panels() * nu as usize,
                SMOOTH_RTOL,
                1e-15,
                1 << 8,
                "perturbation moment",
                |s, t| {
                    let ps = self.p.eval(s).0;
                    let pt = self.p.eval(t).0;
                    Complex64::new(ps * pt * (nu - t + s) * (t - s), 0.0)
                },
            )
            .map(|z| z.re)
        };
        Ok((v(1.0)?, v(2.0)?))
    }

    /// The amplitude A with all three independent evaluations.
    pub fn amplitude_breakdown(&self) -> Result<AmplitudeBreakdown> {
        if self.fourier_p0().abs() > 1e-14 {
            return Err(Error::Precondition(format!(
                "amplitude requires zero-mean p, got p̂₀ = {}",
                self.fourier_p0()
            )));
        }
        let (v1, v2) = self.perturbation_moments()?;
        let from_moments = v2 / 12.0 - 4.0 * v1 / 3.0;

        let rule = GaussLegendre::new(16);
        let panels = self.base_panels();
        let mean = integrate_real(&rule, 0.0, 1.0, panels, SMOOTH_RTOL, 1e-15, 1 << 10, "primitive mean", |t| {
            self.p.primitive(t)
        })?;
        let from_primitive = integrate_real(&rule, 0.0, 1.0, panels, SMOOTH_RTOL, 1e-15, 1 << 10, "primitive square", |t| {
            (self.p.primitive(t) - mean).powi(2)
        })?;

        let correlation = integrate_triangle(&rule, 1.0, panels, SMOOTH_RTOL, 1e-15, 1 << 8, "correlation", |u, t| {
            Complex64::new(u * (u - 1.0) * self.p.eval(t).0 * self.p.eval(t - u).0, 0.0)
        })?
        .re;

        let degenerate = self.p.is_zero();
        let scale = from_primitive.abs().max(from_moments.abs()).max(correlation.abs());
        let agree = |a: f64, b: f64| (a - b).abs() <= AMPLITUDE_RTOL * scale + 1e-15;
        if !(agree(from_moments, from_primitive) && agree(correlation.abs(), from_primitive)) {
            return Err(Error::Consistency(format!(
                "moments {from_moments:e}, primitive {from_primitive:e}, correlation {correlation:e}"
            )));
        }
        Ok(AmplitudeBreakdown {
            v1,
            v2,
            from_moments,
            from_primitive,
            correlation,
            degenerate,
        })
    }

    /// A = ∫₀¹ (P − P̄)² with P the primitive of p.
    pub fn amplitude_a(&self) -> Result<f64> {
        self.amplitude_breakdown().map(|b| b.from_primitive)
    }

    /// A zero of p in [0, 1), used to move the origin so that p(0) = 0.
    pub fn zero_of_p(&self) -> Option<f64> {
        if self.p.is_zero() || self.p.eval(0.0).0 == 0.0 {
            return Some(0.0);
        }
        let samples = 64 * self.base_panels();
        let f = |t: f64| self.p.eval(t).0;
        let mut lo = 0.0;
        let mut flo = f(lo);
        for i in 1..=samples {
            let hi = i as f64 / samples as f64;
            let fhi = f(hi);
            if flo == 0.0 {
                return Some(lo);
            }
            if flo * fhi <= 0.0 {
                let (mut a, mut b, mut fa) = (lo, hi, flo);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    let fm = f(m);
                    if fm == 0.0 || (b - a) < 1e-16 {
                        return Some(m);
                    }
                    if fa * fm < 0.0 {
                        b = m;
                    } else {
                        a = m;
                        fa = fm;
                    }
                }
                return Some(0.5 * (a + b));
            }
            lo = hi;
            flo = fhi;
        }
        None
    }

    /// Check that the doubling quadrature reproduces the exact p̂ₙ′.
    pub fn fourier_pprime_by_quadrature(&self, n: usize) -> Result<Complex64> {
        let rule = GaussLegendre::new(16);
        integrate_doubling(&rule, 0.0, 1.0, self.base_panels().max(n), SMOOTH_RTOL, 1e-14, 1 << 10, "p' mode", |t| {
            let (_, dp) = self.p.eval(t);
            Complex64::from_polar(dp, -2.0 * PI * n as f64 * t)
        })
    }
}

/// The three evaluations of A together with the moments they use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplitudeBreakdown {
    pub v1: f64,
    pub v2: f64,
    /// v₂/12 − 4v₁/3
    pub from_moments: f64,
    /// ∫₀¹(P − P̄)² dt
    pub from_primitive: f64,
    /// ∫₀¹ u(u−1)∫ᵤ¹ p(t)p(t−u) dt du, before taking the modulus
    pub correlation: f64,
    pub degenerate: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos_sin(cos: Vec<f64>, sin: Vec<f64>) -> CoefficientSet {
        CoefficientSet::new(TrigSeries::new(0.0, cos, sin), TrigSeries::zero()).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(CoefficientSet::zero().eval(0.3), (0.0, 0.0, 0.0));
        let c = CoefficientSet::cos1();
        assert_eq!(c.eval(0.0), (1.0, 0.0, 0.0));
        let (p, dp, q) = c.eval(0.25);
        assert!(p.abs() < 1e-15);
        assert!((dp + 2.0 * PI).abs() < 1e-14);
        assert_eq!(q, 0.0);
    }

    #[test]
    fn eval_is_periodic() {
        let c = CoefficientSet::new(
            TrigSeries::new(0.3, vec![1.0, -0.2], vec![0.5]),
            TrigSeries::new(-1.0, vec![0.0, 0.7], vec![0.1, 0.2]),
        )
        .unwrap();
        // dyadic points reduce exactly
        for t in [0.0, 0.125, 0.375, 0.8125] {
            assert_eq!(c.eval(t), c.eval(t + 1.0));
        }
        for t in [0.1, 0.3, 0.77] {
            let (a, b) = (c.eval(t), c.eval(t + 1.0));
            assert!((a.0 - b.0).abs() < 1e-13 && (a.1 - b.1).abs() < 1e-12 && (a.2 - b.2).abs() < 1e-13);
        }
    }

    #[test]
    fn kappa_matches_closed_form_for_single_mode() {
        // ∫|cos| = 2/π, ∫|2π sin| = 4
        let c = CoefficientSet::cos1();
        assert!((c.kappa() - (2.0 / PI + 4.0)).abs() < 1e-8);
    }

    #[test]
    fn fourier_data() {
        let c = CoefficientSet::cos1();
        assert_eq!(c.fourier_p0(), 0.0);
        assert!((c.fourier_pprime_n(1).norm() - PI).abs() < 1e-14);
        assert_eq!(c.fourier_pprime_n(2).norm(), 0.0);
        let q = c.fourier_pprime_by_quadrature(1).unwrap();
        assert!((q - c.fourier_pprime_n(1)).norm() < 1e-12);
    }

    #[test]
    fn moments_and_amplitude_for_cos() {
        let c = CoefficientSet::cos1();
        let b = c.amplitude_breakdown().unwrap();
        let expected = 1.0 / (8.0 * PI * PI);
        assert!((b.v2 / 12.0 - 4.0 * b.v1 / 3.0 - expected).abs() < 1e-12);
        assert!((b.from_primitive - expected).abs() < 1e-12);
        assert!((b.correlation.abs() - expected).abs() < 1e-12);
    }

    #[test]
    fn sine_gives_same_amplitude_as_cosine() {
        let a_sin = cos_sin(vec![], vec![1.0]).amplitude_a().unwrap();
        assert!((a_sin - 1.0 / (8.0 * PI * PI)).abs() < 1e-12);
    }

    #[test]
    fn two_mode_amplitude_adds() {
        let a = cos_sin(vec![1.0, 1.0], vec![]).amplitude_a().unwrap();
        let expected = 1.0 / (8.0 * PI * PI) + 1.0 / (32.0 * PI * PI);
        assert!((a - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_potential_is_degenerate() {
        let b = CoefficientSet::zero().amplitude_breakdown().unwrap();
        assert_eq!(b.from_primitive, 0.0);
        assert!(b.degenerate);
        assert_eq!(CoefficientSet::zero().perturbation_moments().unwrap(), (0.0, 0.0));
    }

    #[test]
    fn nonzero_mean_is_rejected() {
        let c = CoefficientSet::new(TrigSeries::new(1.0, vec![1.0], vec![]), TrigSeries::zero()).unwrap();
        assert!(matches!(c.amplitude_a(), Err(Error::Precondition(_))));
    }

    #[test]
    fn shift_moves_origin() {
        let c = CoefficientSet::cos1();
        let t0 = c.zero_of_p().unwrap();
        assert!((t0 - 0.25).abs() < 1e-14);
        let s = c.shifted(t0).unwrap();
        assert!(s.eval(0.0).0.abs() < 1e-14);
        assert!((s.eval(0.1).0 - c.eval(0.35).0).abs() < 1e-14);
    }

    #[test]
    fn json_round_trip_and_errors() {
        let c = CoefficientSet::from_json(r#"{"p":{"const":0,"cos":[1.0],"sin":[]},"q":{"const":2}}"#).unwrap();
        assert_eq!(c.q.constant, 2.0);
        let back = CoefficientSet::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert!(matches!(CoefficientSet::from_json("{not json"), Err(Error::Input(_))));
        assert!(CoefficientSet::preset("cos1").is_ok());
        assert!(CoefficientSet::preset("nope").is_err());
    }
}
