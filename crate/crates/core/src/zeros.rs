//! Counting and locating zeros of ρ, D₊, D₋ with the argument principle,
//! Newton refinement with the variational derivative, and labeling.

use crate::coeffs::CoefficientSet;
use crate::discriminants::{bundle_with, bundle_with_derivative, BundleDerivative, DiscriminantBundle};
use crate::error::{Error, Result};
use crate::monodromy::IntegratorOptions;
use crate::quadrature::GaussLegendre;
use crate::reference::{lambda_of_s, s_of_lambda, SpectralPoint};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

/// Rounding floor of f relative to its scale: cancellation among terms of size `scale`.
const NOISE_EPS: f64 = 4.0 * f64::EPSILON;
/// Global error of the integrator per unit step tolerance (measured well below 1).
const NOISE_RTOL: f64 = 1e-3;
const MAX_NEWTON: usize = 50;
const DOUBLINGS: usize = 3;
const WINDING_BUDGET: usize = 40_000;
const SPLIT_FRACTIONS: [f64; 6] = [0.5371, 0.4371, 0.6113, 0.3623, 0.6789, 0.4917];
/// Cells with ≤ 2 zeros are located directly once both sides span at most this much in z.
const CELL_S_WIDTH: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ZeroFunction {
    #[serde(rename = "rho")]
    Rho,
    #[serde(rename = "Dplus")]
    Dplus,
    #[serde(rename = "Dminus")]
    Dminus,
}

impl ZeroFunction {
    pub fn pick(self, b: &DiscriminantBundle) -> Complex64 {
        match self {
            Self::Rho => b.rho,
            Self::Dplus => b.d_plus,
            Self::Dminus => b.d_minus,
        }
    }

    pub fn pick_derivative(self, d: &BundleDerivative) -> Complex64 {
        match self {
            Self::Rho => d.rho,
            Self::Dplus => d.d_plus,
            Self::Dminus => d.d_minus,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rho" => Some(Self::Rho),
            "Dplus" => Some(Self::Dplus),
            "Dminus" => Some(Self::Dminus),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelSign {
    Minus,
    Plus,
    /// A double zero carrying both the − and + label of index n.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Label {
    pub n: usize,
    pub sign: LabelSign,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.sign {
            LabelSign::Minus => "-",
            LabelSign::Plus => "+",
            LabelSign::Both => "-+",
        };
        write!(f, "{}{}", self.n, s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocatedZero {
    pub lambda: Complex64,
    pub multiplicity: u32,
    pub which: ZeroFunction,
    pub label: Option<Label>,
    /// |f(λ)| divided by the scale of the terms forming f.
    pub refine_residual: f64,
}

impl LocatedZero {
    pub fn is_real(&self) -> bool {
        self.lambda.im == 0.0
    }

    pub fn has_label(&self, n: usize, sign: LabelSign) -> bool {
        match self.label {
            Some(l) if l.n == n => l.sign == sign || l.sign == LabelSign::Both,
            _ => false,
        }
    }
}

/// Row of the JSON zero table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroTableEntry {
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub which: ZeroFunction,
    pub multiplicity: u32,
    pub label: Option<String>,
}

impl From<&LocatedZero> for ZeroTableEntry {
    fn from(z: &LocatedZero) -> Self {
        Self {
            lambda_re: z.lambda.re,
            lambda_im: z.lambda.im,
            which: z.which,
            multiplicity: z.multiplicity,
            label: z.label.map(|l| l.to_string()),
        }
    }
}

pub fn zero_table(zeros: &[LocatedZero]) -> Vec<ZeroTableEntry> {
    zeros.iter().map(ZeroTableEntry::from).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    /// |λ − center| = radius.
    LambdaDisk { center: Complex64, radius: f64 },
    /// |λ^{1/4} − center| = radius, mapped by w ↦ w⁴.
    ZDisk { center: Complex64, radius: f64 },
    /// |λ^{1/4} − (1+i)πn| = π/(2√2), a neighbourhood of −4(πn)⁴.
    ResonanceDomain { n: usize },
    /// Axis-aligned rectangle, counterclockwise.
    Rect { lo: Complex64, hi: Complex64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub shape: Shape,
    pub node_count: usize,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    lambda: Complex64,
    /// dλ quadrature weight for ∮ g dλ.
    weight: Complex64,
}

impl ContourSpec {
    pub fn new(shape: Shape) -> Self {
        Self { shape, node_count: 64 }
    }

    pub fn lambda_disk(radius: f64) -> Self {
        Self::new(Shape::LambdaDisk { center: Complex64::new(0.0, 0.0), radius })
    }

    /// {|λ|^{1/4} < r}
    pub fn quarter_root_disk(r: f64) -> Self {
        Self::lambda_disk(r.powi(4))
    }

    pub fn z_disk(center: Complex64, radius: f64) -> Self {
        Self::new(Shape::ZDisk { center, radius })
    }

    pub fn rect(lo: Complex64, hi: Complex64) -> Self {
        Self::new(Shape::Rect { lo, hi })
    }

    fn validate(&self) -> Result<()> {
        match self.shape {
            Shape::ZDisk { center, radius } => {
                if radius <= 0.0 || radius >= center.norm() * (PI / 4.0).sin() {
                    return Err(Error::Precondition(
                        "z-disk must lie inside a quarter-plane sector (w ↦ w⁴ injective)".into(),
                    ));
                }
            }
            Shape::ResonanceDomain { n: 0 } => {
                return Err(Error::Precondition("resonance domain index must be ≥ 1".into()));
            }
            Shape::LambdaDisk { radius, .. } if radius <= 0.0 => {
                return Err(Error::Precondition("disk radius must be positive".into()));
            }
            Shape::Rect { lo, hi } if !(lo.re < hi.re && lo.im < hi.im) => {
                return Err(Error::Precondition("rectangle corners must be ordered".into()));
            }
            _ => {}
        }
        Ok(())
    }

    /// Point on the contour at parameter u ∈ [0, 1], counterclockwise.
    pub(crate) fn point(&self, u: f64) -> Complex64 {
        let e = Complex64::from_polar(1.0, 2.0 * PI * u);
        match self.shape {
            Shape::LambdaDisk { center, radius } => center + radius * e,
            Shape::ZDisk { center, radius } => (center + radius * e).powi(4),
            Shape::ResonanceDomain { n } => {
                let k = PI * n as f64;
                (Complex64::new(k, k) + PI / (2.0 * 2f64.sqrt()) * e).powi(4)
            }
            Shape::Rect { lo, hi } => {
                let corners = [lo, Complex64::new(hi.re, lo.im), hi, Complex64::new(lo.re, hi.im)];
                let v = 4.0 * u.clamp(0.0, 1.0);
                let edge = (v.floor() as usize).min(3);
                let t = v - edge as f64;
                corners[edge] + (corners[(edge + 1) % 4] - corners[edge]) * t
            }
        }
    }

    fn circle_nodes(k: usize, map: impl Fn(Complex64) -> (Complex64, Complex64)) -> Vec<Node> {
        (0..k)
            .map(|j| {
                let theta = 2.0 * PI * (j as f64 + 0.5) / k as f64;
                let e = Complex64::from_polar(1.0, theta);
                let (lambda, dl_dtheta) = map(e);
                Node { lambda, weight: dl_dtheta * (2.0 * PI / k as f64) }
            })
            .collect()
    }

    fn nodes(&self, k: usize) -> Vec<Node> {
        let i = Complex64::new(0.0, 1.0);
        match self.shape {
            Shape::LambdaDisk { center, radius } => {
                Self::circle_nodes(k, |e| (center + radius * e, i * radius * e))
            }
            Shape::ZDisk { center, radius } => Self::circle_nodes(k, |e| {
                let w = center + radius * e;
                (w.powi(4), 4.0 * w.powi(3) * i * radius * e)
            }),
            Shape::ResonanceDomain { n } => {
                let center = Complex64::new(PI * n as f64, PI * n as f64);
                let radius = PI / (2.0 * 2f64.sqrt());
                Self::circle_nodes(k, |e| {
                    let w = center + radius * e;
                    (w.powi(4), 4.0 * w.powi(3) * i * radius * e)
                })
            }
            Shape::Rect { lo, hi } => rect_nodes(lo, hi, k),
        }
    }
}

fn rect_nodes(lo: Complex64, hi: Complex64, k: usize) -> Vec<Node> {
    let corners = [
        lo,
        Complex64::new(hi.re, lo.im),
        hi,
        Complex64::new(lo.re, hi.im),
    ];
    let lens: Vec<f64> = (0..4).map(|e| (corners[(e + 1) % 4] - corners[e]).norm()).collect();
    let per = lens.iter().sum::<f64>();
    let rule = GaussLegendre::new(16);
    let mut out = Vec::with_capacity(k + 64);
    for e in 0..4 {
        let (a, b) = (corners[e], corners[(e + 1) % 4]);
        // at least two 16-point panels per edge; the rest in proportion to √length
        let share = (lens[e] / per).sqrt() / (0..4).map(|m| (lens[m] / per).sqrt()).sum::<f64>();
        let panels = ((k as f64 * share / 16.0).ceil() as usize).max(2);
        let dir = b - a;
        for pnl in 0..panels {
            let (t0, t1) = (pnl as f64 / panels as f64, (pnl + 1) as f64 / panels as f64);
            for (t, w) in rule.mapped(t0, t1) {
                out.push(Node { lambda: a + dir * t, weight: dir * w });
            }
        }
    }
    out
}

/// Function values with rounding-noise floor, and derivative where needed.
pub struct ZeroSolver<'a> {
    pub c: &'a CoefficientSet,
    pub opts: IntegratorOptions,
    /// Relative step size at which Newton stops.
    pub tol_root: f64,
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    value: Complex64,
    noise: f64,
}

impl<'a> ZeroSolver<'a> {
    pub fn new(c: &'a CoefficientSet) -> Self {
        Self { c, opts: IntegratorOptions::fast(1e-12), tol_root: 1e-14 }
    }

    pub fn with_tolerances(c: &'a CoefficientSet, tol_ode: f64, tol_root: f64) -> Self {
        Self { c, opts: IntegratorOptions::fast(tol_ode), tol_root }
    }

    fn noise_of(&self, b: &DiscriminantBundle) -> f64 {
        (NOISE_EPS + NOISE_RTOL * self.opts.rtol) * b.scale()
    }

    fn sample(&self, f: ZeroFunction, lambda: Complex64) -> Result<Sample> {
        let b = bundle_with(self.c, &SpectralPoint::new(lambda), &self.opts)?;
        Ok(Sample { value: f.pick(&b), noise: self.noise_of(&b) })
    }

    /// f, f′ and the noise floor at λ.
    pub fn value_and_derivative(&self, f: ZeroFunction, lambda: Complex64) -> Result<(Complex64, Complex64, f64)> {
        let (b, d) = bundle_with_derivative(self.c, &SpectralPoint::new(lambda), &self.opts)?;
        Ok((f.pick(&b), f.pick_derivative(&d), self.noise_of(&b)))
    }

    pub fn value(&self, f: ZeroFunction, lambda: Complex64) -> Result<(Complex64, f64)> {
        self.sample(f, lambda).map(|s| (s.value, s.noise))
    }

    /// Winding number of f along the contour. A step between samples is accepted when
    /// its phase change is below π/4 and |f′Δλ/f| ≤ 1 at both ends; otherwise it is
    /// bisected in the contour parameter. The derivative test guards against a full
    /// turn hiding between two samples.
    pub fn count(&self, f: ZeroFunction, spec: &ContourSpec) -> Result<i64> {
        spec.validate()?;
        let k = spec.node_count.max(16);
        let mut budget = WINDING_BUDGET;
        let mut eval = |u: f64| -> Result<(f64, Complex64, Complex64, Complex64)> {
            if budget == 0 {
                return Err(Error::ContourThroughZero(format!("evaluation budget exhausted on {:?}", spec.shape)));
            }
            budget -= 1;
            let lambda = spec.point(u);
            let (v, d, noise) = self.value_and_derivative(f, lambda)?;
            if v.norm() <= 4.0 * noise {
                return Err(Error::ContourThroughZero(format!("|f| at {lambda} is within the noise floor")));
            }
            Ok((u, lambda, v, d / v))
        };
        let first = eval(0.0)?;
        let mut total = 0.0;
        let mut left = first;
        for j in 1..=k {
            let right = if j == k {
                (1.0, first.1, first.2, first.3)
            } else {
                eval(j as f64 / k as f64)?
            };
            let mut stack = vec![right];
            let mut a = left;
            while let Some(b) = stack.pop() {
                let d = (b.2 / a.2).arg();
                let dl = (b.1 - a.1).norm();
                let smooth = (a.3.norm() * dl <= 1.0) && (b.3.norm() * dl <= 1.0);
                if d.abs() <= PI / 4.0 && smooth {
                    total += d;
                    a = b;
                    continue;
                }
                if b.0 - a.0 < 1e-13 {
                    return Err(Error::ContourThroughZero(format!("unresolved phase jump at {}", a.1)));
                }
                let m = eval(0.5 * (a.0 + b.0))?;
                stack.push(b);
                stack.push(m);
            }
            left = right;
        }
        Ok((total / (2.0 * PI)).round() as i64)
    }

    /// (1/2πi)∮ ξᵐ f′/f dλ, ξ = (λ − center)/scale, m = 0, 1, 2.
    fn moments(&self, f: ZeroFunction, spec: &ContourSpec, center: Complex64, scale: f64) -> Result<[Complex64; 3]> {
        let mut k = spec.node_count.max(64);
        let mut prev: Option<[Complex64; 3]> = None;
        for _ in 0..=DOUBLINGS + 1 {
            let mut mu = [Complex64::new(0.0, 0.0); 3];
            for n in spec.nodes(k) {
                let (v, d, _) = self.value_and_derivative(f, n.lambda)?;
                let g = d / v * n.weight;
                let xi = (n.lambda - center) / scale;
                mu[0] += g;
                mu[1] += g * xi;
                mu[2] += g * xi * xi;
            }
            let two_pi_i = Complex64::new(0.0, 2.0 * PI);
            for m in &mut mu {
                *m /= two_pi_i;
            }
            if let Some(p) = prev {
                let diff = (0..3).map(|i| (mu[i] - p[i]).norm()).fold(0.0, f64::max);
                if diff < 1e-9 * (1.0 + mu[2].norm()) {
                    return Ok(mu);
                }
            }
            prev = Some(mu);
            k *= 2;
        }
        Ok(prev.expect("at least one pass"))
    }

    /// Newton iteration on f from `seed`; returns the point and the final |f|/noise.
    fn newton(&self, f: ZeroFunction, seed: Complex64, real_only: bool) -> Result<(Complex64, bool)> {
        let mut lam = seed;
        for _ in 0..MAX_NEWTON {
            let (v, d, noise) = self.value_and_derivative(f, lam)?;
            if v.norm() <= noise {
                return Ok((lam, true));
            }
            if d.norm() == 0.0 || !d.re.is_finite() {
                return Ok((lam, false));
            }
            let mut step = v / d;
            if real_only {
                step.im = 0.0;
            }
            let cap = 0.25 * lam.norm().max(1.0);
            if step.norm() > cap {
                step *= cap / step.norm();
            }
            lam -= step;
            if step.norm() <= self.tol_root * lam.norm().max(1.0) {
                let (v, _, noise) = self.value_and_derivative(f, lam)?;
                return Ok((lam, v.norm() <= 1e4 * noise));
            }
        }
        let (v, _, noise) = self.value_and_derivative(f, lam)?;
        Ok((lam, v.norm() <= 1e4 * noise))
    }

    /// Critical point of f near `seed` (zero of f′), f″ by central differences of f′.
    fn critical_point(&self, f: ZeroFunction, seed: Complex64, real_only: bool) -> Result<Complex64> {
        let mut lam = seed;
        for _ in 0..MAX_NEWTON {
            let h = 1e-6 * lam.norm().max(1.0);
            let (_, d, _) = self.value_and_derivative(f, lam)?;
            let (_, dp, _) = self.value_and_derivative(f, lam + h)?;
            let (_, dm, _) = self.value_and_derivative(f, lam - h)?;
            let dd = (dp - dm) / (2.0 * h);
            if dd.norm() == 0.0 {
                break;
            }
            let mut step = d / dd;
            if real_only {
                step.im = 0.0;
            }
            let cap = 0.25 * lam.norm().max(1.0);
            if step.norm() > cap {
                step *= cap / step.norm();
            }
            lam -= step;
            if step.norm() <= self.tol_root * lam.norm().max(1.0) {
                break;
            }
        }
        Ok(lam)
    }

    /// Smallest separation of two simple zeros that the noise floor can resolve near λ:
    /// a double zero perturbed by `noise` splits by about 2√(2·noise/|f″|).
    pub fn resolution(&self, f: ZeroFunction, lam: Complex64) -> Result<f64> {
        let h = 1e-5 * lam.norm().max(1.0);
        let (_, dp, noise) = self.value_and_derivative(f, lam + h)?;
        let (_, dm, _) = self.value_and_derivative(f, lam - h)?;
        let dd = ((dp - dm) / (2.0 * h)).norm();
        Ok(if dd > 0.0 { 4.0 * (2.0 * noise / dd).sqrt() } else { 0.0 })
    }

    /// Replace pairs of simple zeros closer than the resolution by one double zero.
    fn merge_unresolved(&self, f: ZeroFunction, mut zeros: Vec<LocatedZero>) -> Result<Vec<LocatedZero>> {
        let mut i = 0;
        while i < zeros.len() {
            let mut merged = false;
            for j in i + 1..zeros.len() {
                let (a, b) = (zeros[i], zeros[j]);
                if a.multiplicity != 1 || b.multiplicity != 1 {
                    continue;
                }
                let mid = (a.lambda + b.lambda) / 2.0;
                if (a.lambda - b.lambda).norm() > self.resolution(f, mid)? {
                    continue;
                }
                let real = f != ZeroFunction::Rho || mid.im.abs() <= (a.lambda - b.lambda).norm();
                let mut crit = self.critical_point(f, if real { Complex64::new(mid.re, 0.0) } else { mid }, real)?;
                if real {
                    crit.im = 0.0;
                }
                zeros[i] = self.finish(f, crit, 2)?;
                zeros.remove(j);
                merged = true;
                break;
            }
            if !merged {
                i += 1;
            }
        }
        Ok(zeros)
    }

    fn residual(&self, f: ZeroFunction, lam: Complex64) -> Result<f64> {
        let b = bundle_with(self.c, &SpectralPoint::new(lam), &self.opts)?;
        Ok(f.pick(&b).norm() / b.scale())
    }

    fn finish(&self, f: ZeroFunction, lambda: Complex64, multiplicity: u32) -> Result<LocatedZero> {
        Ok(LocatedZero {
            lambda,
            multiplicity,
            which: f,
            label: None,
            refine_residual: self.residual(f, lambda)?,
        })
    }

    /// Try to place a converged zero exactly on the real axis.
    fn snap_real(&self, f: ZeroFunction, lam: Complex64, force: bool) -> Result<Complex64> {
        if lam.im == 0.0 {
            return Ok(lam);
        }
        let near = lam.im.abs() <= 1e-7 * lam.norm().max(1.0);
        if !(near || force) {
            return Ok(lam);
        }
        let (r, ok) = self.newton(f, Complex64::new(lam.re, 0.0), true)?;
        if ok && (r - lam).norm() <= 1e-5 * lam.norm().max(1.0) {
            Ok(r)
        } else {
            Ok(lam)
        }
    }

    /// Newton refinement followed by multiplicity from a small winding circle.
    pub fn refine(&self, f: ZeroFunction, seed: Complex64) -> Result<LocatedZero> {
        let (mut lam, ok) = self.newton(f, seed, false)?;
        if !ok {
            // slow convergence near a double zero: polish on f′
            let crit = self.critical_point(f, lam, false)?;
            let (v, _, noise) = self.value_and_derivative(f, crit)?;
            if v.norm() > 1e4 * noise {
                return Err(Error::Refinement { seed });
            }
            lam = crit;
        }
        lam = self.snap_real(f, lam, f != ZeroFunction::Rho)?;
        let radius = 1e-3 * lam.norm().max(1.0);
        let m = self.count(f, &ContourSpec { shape: Shape::LambdaDisk { center: lam, radius }, node_count: 64 })?;
        if m >= 2 {
            let crit = self.critical_point(f, lam, lam.im == 0.0)?;
            if (crit - lam).norm() < radius {
                lam = crit;
            }
        }
        self.finish(f, lam, m.max(1) as u32)
    }

    /// Zeros inside a contour already known to hold `count` ≤ 2 of them.
    fn locate(&self, f: ZeroFunction, spec: &ContourSpec, count: i64, center: Complex64, scale: f64) -> Result<Vec<LocatedZero>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        let mu = self.moments(f, spec, center, scale)?;
        let to_lambda = |xi: Complex64| center + xi * scale;
        let real_axis = f != ZeroFunction::Rho;
        match count {
            1 => {
                let (mut lam, ok) = self.newton(f, to_lambda(mu[1]), false)?;
                if !ok {
                    return Err(Error::Refinement { seed: to_lambda(mu[1]) });
                }
                lam = self.snap_real(f, lam, real_axis)?;
                Ok(vec![self.finish(f, lam, 1)?])
            }
            2 => {
                let s1 = mu[1];
                let prod = (s1 * s1 - mu[2]) / 2.0;
                let disc = (s1 * s1 - 4.0 * prod).sqrt();
                let (a, b) = (to_lambda((s1 + disc) / 2.0), to_lambda((s1 - disc) / 2.0));
                let mid = (a + b) / 2.0;
                let tiny = 1e-6 * mid.norm().max(1.0);
                if (a - b).norm() > tiny {
                    let (ra, oka) = self.newton(f, a, false)?;
                    let (rb, okb) = self.newton(f, b, false)?;
                    if oka && okb && (ra - rb).norm() > tiny {
                        let ra = self.snap_real(f, ra, real_axis)?;
                        let rb = self.snap_real(f, rb, real_axis)?;
                        return self.merge_unresolved(f, vec![self.finish(f, ra, 1)?, self.finish(f, rb, 1)?]);
                    }
                }
                // coincident pair: the double zero sits at the critical point
                let on_axis = real_axis || mid.im.abs() <= tiny;
                let mut crit = self.critical_point(f, mid, on_axis)?;
                if on_axis || crit.im.abs() <= tiny {
                    crit.im = 0.0;
                }
                let (v, _, noise) = self.value_and_derivative(f, crit)?;
                if v.norm() <= 1e4 * noise {
                    return Ok(vec![self.finish(f, crit, 2)?]);
                }
                // two nearby simple zeros either side of the critical point
                let h = 1e-6 * crit.norm().max(1.0);
                let (_, dp, _) = self.value_and_derivative(f, crit + h)?;
                let (_, dm, _) = self.value_and_derivative(f, crit - h)?;
                let dd = (dp - dm) / (2.0 * h);
                let off = (-2.0 * v / dd).sqrt();
                let mut out = Vec::new();
                for seed in [crit - off, crit + off] {
                    let (r, ok) = self.newton(f, seed, false)?;
                    if !ok {
                        return Err(Error::Refinement { seed });
                    }
                    let r = self.snap_real(f, r, real_axis)?;
                    out.push(self.finish(f, r, 1)?);
                }
                Ok(out)
            }
            _ => Err(Error::Precondition("direct location handles at most two zeros".into())),
        }
    }

    /// All zeros inside an arbitrary contour holding at most two of them.
    pub fn zeros_in(&self, f: ZeroFunction, spec: &ContourSpec) -> Result<Vec<LocatedZero>> {
        let n = self.count(f, spec)?;
        let (center, scale) = match spec.shape {
            Shape::LambdaDisk { center, radius } => (center, radius),
            Shape::ZDisk { center, radius } => (center.powi(4), 4.0 * center.norm().powi(3) * radius),
            Shape::ResonanceDomain { n } => {
                let k = PI * n as f64;
                (Complex64::new(-4.0 * k.powi(4), 0.0), 4.0 * (2f64.sqrt() * k).powi(3))
            }
            Shape::Rect { lo, hi } => ((lo + hi) / 2.0, (hi - lo).norm() / 2.0),
        };
        self.locate(f, spec, n, center, scale)
    }

    /// Cell extent in units of z = λ^{1/4}: s-coordinates along x, and the local
    /// Jacobian |dz/dλ| = 1/(4|λ|^{3/4}) along y.
    fn widths(lo: Complex64, hi: Complex64) -> (f64, f64) {
        let wx = s_of_lambda(hi.re) - s_of_lambda(lo.re);
        let nearest = Complex64::new(0.0f64.clamp(lo.re, hi.re), 0.0f64.clamp(lo.im, hi.im));
        let wy = (hi.im - lo.im) / (4.0 * nearest.norm().max(1.0).powf(0.75));
        (wx, wy)
    }

    /// Split a cell: vertically until it is narrow in s, then along its longer side.
    /// Horizontal cut lines keep clear of the real axis, where eigenvalues and real
    /// resonances sit.
    fn split(lo: Complex64, hi: Complex64, frac: f64) -> Option<[(Complex64, Complex64); 2]> {
        let (wx, wy) = Self::widths(lo, hi);
        if wx > CELL_S_WIDTH || wx >= wy {
            let (sx0, sx1) = (s_of_lambda(lo.re), s_of_lambda(hi.re));
            let x = lambda_of_s(sx0 + frac * (sx1 - sx0));
            Some([(lo, Complex64::new(x, hi.im)), (Complex64::new(x, lo.im), hi)])
        } else {
            let h = hi.im - lo.im;
            let y = lo.im + frac * h;
            if lo.im < 0.0 && hi.im > 0.0 && y.abs() < 0.05 * h {
                return None;
            }
            Some([(lo, Complex64::new(hi.re, y)), (Complex64::new(lo.re, y), hi)])
        }
    }

    fn cell(&self, f: ZeroFunction, lo: Complex64, hi: Complex64, n: i64, depth: usize, out: &mut Vec<LocatedZero>) -> Result<()> {
        if n == 0 {
            return Ok(());
        }
        let (wx, wy) = Self::widths(lo, hi);
        if n <= 2 && (wx.max(wy) <= CELL_S_WIDTH || depth > 60) {
            let spec = ContourSpec::rect(lo, hi);
            out.extend(self.locate(f, &spec, n, (lo + hi) / 2.0, (hi - lo).norm() / 2.0)?);
            return Ok(());
        }
        if depth > 80 {
            return Err(Error::Subdivision { parent: n, children: -1 });
        }
        let mut last = (n, -1);
        for frac in SPLIT_FRACTIONS {
            let Some(halves) = Self::split(lo, hi, frac) else { continue };
            let counts: Result<Vec<i64>> =
                halves.iter().map(|&(a, b)| self.count(f, &ContourSpec::rect(a, b))).collect();
            match counts {
                Ok(cs) if cs.iter().sum::<i64>() == n && cs.iter().all(|&v| v >= 0) => {
                    for (&(a, b), &k) in halves.iter().zip(&cs) {
                        self.cell(f, a, b, k, depth + 1, out)?;
                    }
                    return Ok(());
                }
                Ok(cs) => last = (n, cs.iter().sum()),
                Err(Error::ContourThroughZero(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::Subdivision { parent: last.0, children: last.1 })
    }

    /// All zeros of f inside an axis-aligned rectangle, by recursive subdivision.
    pub fn zeros_in_rect(&self, f: ZeroFunction, lo: Complex64, hi: Complex64) -> Result<Vec<LocatedZero>> {
        let n = self.count(f, &ContourSpec::rect(lo, hi))?;
        let mut found = Vec::new();
        self.cell(f, lo, hi, n, 0, &mut found)?;
        let mut found = self.merge_unresolved(f, found)?;
        sort_zeros(&mut found);
        Ok(found)
    }

    /// All zeros of f with |λ| < radius, by recursive subdivision of the bounding square.
    pub fn zeros_in_lambda_disk(&self, f: ZeroFunction, radius: f64) -> Result<Vec<LocatedZero>> {
        let total = self.count(f, &ContourSpec::lambda_disk(radius))?;
        let lo = Complex64::new(-radius, -radius);
        let hi = Complex64::new(radius, radius);
        let n_square = self.count(f, &ContourSpec::rect(lo, hi))?;
        let mut found = Vec::new();
        self.cell(f, lo, hi, n_square, 0, &mut found)?;
        let mut found = self.merge_unresolved(f, found)?;
        found.retain(|z| z.lambda.norm() < radius);
        let got: i64 = found.iter().map(|z| z.multiplicity as i64).sum();
        if got != total {
            return Err(Error::Subdivision { parent: total, children: got });
        }
        sort_zeros(&mut found);
        Ok(found)
    }
}

fn sort_zeros(z: &mut [LocatedZero]) {
    z.sort_by(|a, b| {
        a.lambda
            .re
            .total_cmp(&b.lambda.re)
            .then(a.lambda.im.total_cmp(&b.lambda.im))
    });
}

/// Winding number of f on a contour.
pub fn count_zeros(f: ZeroFunction, contour: &ContourSpec, c: &CoefficientSet) -> Result<i64> {
    ZeroSolver::new(c).count(f, contour)
}

/// Newton refinement from a seed with winding-number multiplicity.
pub fn refine_zero(f: ZeroFunction, seed: Complex64, c: &CoefficientSet) -> Result<LocatedZero> {
    ZeroSolver::new(c).refine(f, seed)
}

/// Search radii, in λ, for the three zero families at index bound N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchRange {
    pub periodic_n: usize,
    pub antiperiodic_n: usize,
    pub resonance_n: usize,
}

impl SearchRange {
    pub fn uniform(n: usize) -> Self {
        Self { periodic_n: n, antiperiodic_n: n, resonance_n: n }
    }

    /// D₊ zeros with |λ|^{1/4} < 2π(N+½).
    pub fn periodic_radius(&self) -> f64 {
        (2.0 * PI * (self.periodic_n as f64 + 0.5)).powi(4)
    }

    /// D₋ zeros with |λ|^{1/4} < 2πN.
    pub fn antiperiodic_radius(&self) -> f64 {
        (2.0 * PI * self.antiperiodic_n as f64).powi(4)
    }

    /// ρ zeros with |λ| < 4(π(N+½))⁴.
    pub fn resonance_radius(&self) -> f64 {
        4.0 * (PI * (self.resonance_n as f64 + 0.5)).powi(4)
    }
}

/// Labeled zero tables for the three families.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroTables {
    pub periodic: Vec<LocatedZero>,
    pub antiperiodic: Vec<LocatedZero>,
    pub resonances: Vec<LocatedZero>,
    /// Resonances left without a label by the ordering rules.
    pub unlabeled: Vec<LocatedZero>,
    /// D± zeros found off the real axis (should not happen for real coefficients).
    pub nonreal_eigenvalues: Vec<LocatedZero>,
}

impl ZeroTables {
    pub fn all(&self) -> Vec<LocatedZero> {
        let mut v = self.periodic.clone();
        v.extend(&self.antiperiodic);
        v.extend(&self.resonances);
        v.extend(&self.unlabeled);
        v
    }

    pub fn eigenvalue(&self, n: usize, sign: LabelSign) -> Option<&LocatedZero> {
        let table = if n.is_multiple_of(2) { &self.periodic } else { &self.antiperiodic };
        table.iter().find(|z| z.has_label(n, sign))
    }

    pub fn resonance(&self, n: usize, sign: LabelSign) -> Option<&LocatedZero> {
        self.resonances.iter().find(|z| z.has_label(n, sign))
    }
}

/// Ascending eigenvalue labels λ₀⁺, λ₂∓, ... (periodic) or λ₁∓, λ₃∓, ... (antiperiodic).
pub(crate) fn label_eigenvalues(zeros: &mut [LocatedZero], periodic: bool) {
    sort_zeros(zeros);
    let mut slot = 0usize; // position in the sequence λ₀⁺, λ₂⁻, λ₂⁺, ... or λ₁⁻, λ₁⁺, ...
    let name = |slot: usize| -> (usize, LabelSign) {
        if periodic {
            if slot == 0 {
                (0, LabelSign::Plus)
            } else {
                let k = slot.div_ceil(2);
                (2 * k, if slot % 2 == 1 { LabelSign::Minus } else { LabelSign::Plus })
            }
        } else {
            (2 * (slot / 2) + 1, if slot.is_multiple_of(2) { LabelSign::Minus } else { LabelSign::Plus })
        }
    };
    for z in zeros.iter_mut() {
        let (n, s) = name(slot);
        if z.multiplicity >= 2 && s == LabelSign::Minus {
            z.label = Some(Label { n, sign: LabelSign::Both });
        } else {
            z.label = Some(Label { n, sign: s });
        }
        slot += z.multiplicity.max(1) as usize;
    }
}

/// Resonance labels: r₀⁻ the largest real zero, then decreasing real part,
/// conjugate pairs (rₙ⁺ in the closed lower half plane) or consecutive real pairs.
pub(crate) fn label_resonances(zeros: Vec<LocatedZero>) -> (Vec<LocatedZero>, Vec<LocatedZero>) {
    let mut rest: Vec<LocatedZero> = Vec::new();
    let mut labeled = Vec::new();
    let mut unlabeled = Vec::new();
    // r₀⁻
    let top = zeros
        .iter()
        .enumerate()
        .filter(|(_, z)| z.is_real())
        .max_by(|a, b| a.1.lambda.re.total_cmp(&b.1.lambda.re))
        .map(|(i, _)| i);
    for (i, mut z) in zeros.into_iter().enumerate() {
        if Some(i) == top {
            let mut first = z;
            first.label = Some(Label { n: 0, sign: LabelSign::Minus });
            if z.multiplicity >= 2 {
                first.multiplicity = 1;
                z.multiplicity -= 1;
                labeled.push(first);
                rest.push(z);
            } else {
                labeled.push(first);
            }
        } else {
            rest.push(z);
        }
    }
    rest.sort_by(|a, b| b.lambda.re.total_cmp(&a.lambda.re).then(a.lambda.im.total_cmp(&b.lambda.im)));
    let mut n = 1;
    let mut i = 0;
    while i < rest.len() {
        let z = rest[i];
        if z.is_real() {
            if z.multiplicity >= 2 {
                let mut d = z;
                d.label = Some(Label { n, sign: LabelSign::Both });
                labeled.push(d);
                n += 1;
                i += 1;
            } else if i + 1 < rest.len() && rest[i + 1].is_real() {
                let (mut plus, mut minus) = (z, rest[i + 1]);
                plus.label = Some(Label { n, sign: LabelSign::Plus });
                minus.label = Some(Label { n, sign: LabelSign::Minus });
                labeled.push(plus);
                labeled.push(minus);
                n += 1;
                i += 2;
            } else {
                unlabeled.push(z);
                i += 1;
            }
        } else {
            // the conjugate partner sits next to it in this ordering
            let partner = (i + 1 < rest.len())
                .then(|| rest[i + 1])
                .filter(|w| (w.lambda - z.lambda.conj()).norm() <= 1e-6 * z.lambda.norm().max(1.0));
            match partner {
                Some(w) => {
                    let (lower, upper) = if z.lambda.im < 0.0 { (z, w) } else { (w, z) };
                    let (mut plus, mut minus) = (lower, upper);
                    plus.label = Some(Label { n, sign: LabelSign::Plus });
                    minus.label = Some(Label { n, sign: LabelSign::Minus });
                    labeled.push(plus);
                    labeled.push(minus);
                    n += 1;
                    i += 2;
                }
                None => {
                    unlabeled.push(z);
                    i += 1;
                }
            }
        }
    }
    (labeled, unlabeled)
}

/// Find and label the zeros of D₊, D₋ and ρ in their index-N domains.
pub fn enumerate_and_label(c: &CoefficientSet, n: usize) -> Result<ZeroTables> {
    enumerate_with(&ZeroSolver::new(c), SearchRange::uniform(n))
}

pub fn enumerate_with(solver: &ZeroSolver<'_>, range: SearchRange) -> Result<ZeroTables> {
    if range.periodic_n == 0 && range.antiperiodic_n == 0 && range.resonance_n == 0 {
        return Err(Error::Precondition("N must be ≥ 1".into()));
    }
    let mut nonreal = Vec::new();
    let mut real_only = |zs: Vec<LocatedZero>| -> Vec<LocatedZero> {
        let (re, im): (Vec<_>, Vec<_>) = zs.into_iter().partition(|z| z.is_real());
        nonreal.extend(im);
        re
    };
    let mut periodic = if range.periodic_n > 0 || range.antiperiodic_n > 0 {
        real_only(solver.zeros_in_lambda_disk(ZeroFunction::Dplus, range.periodic_radius())?)
    } else {
        Vec::new()
    };
    let mut antiperiodic = if range.antiperiodic_n > 0 {
        real_only(solver.zeros_in_lambda_disk(ZeroFunction::Dminus, range.antiperiodic_radius())?)
    } else {
        Vec::new()
    };
    label_eigenvalues(&mut periodic, true);
    label_eigenvalues(&mut antiperiodic, false);
    let (resonances, unlabeled) = if range.resonance_n > 0 {
        label_resonances(solver.zeros_in_lambda_disk(ZeroFunction::Rho, range.resonance_radius())?)
    } else {
        (Vec::new(), Vec::new())
    };
    Ok(ZeroTables { periodic, antiperiodic, resonances, unlabeled, nonreal_eigenvalues: nonreal })
}
