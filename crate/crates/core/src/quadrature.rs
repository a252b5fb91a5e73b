//! Gauss–Legendre rules and composite panel integration.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// An n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { p0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

/// Composite rule with `panels` equal panels on [a, b].
pub fn composite<F: FnMut(f64) -> Complex64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    panels: usize,
    mut f: F,
) -> Complex64 {
    let h = (b - a) / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..panels {
        let lo = a + h * k as f64;
        for (x, w) in rule.mapped(lo, lo + h) {
            acc += f(x) * w;
        }
    }
    acc
}

/// Panel doubling until two successive composite values agree to `rtol`
/// relative (with `atol` as an absolute floor).
pub fn integrate_doubling<F: FnMut(f64) -> Complex64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    min_panels: usize,
    rtol: f64,
    atol: f64,
    max_panels: usize,
    what: &'static str,
    mut f: F,
) -> Result<Complex64> {
    let mut panels = min_panels.max(1);
    let mut prev = composite(rule, a, b, panels, &mut f);
    while panels < max_panels {
        panels *= 2;
        let next = composite(rule, a, b, panels, &mut f);
        if (next - prev).norm() <= rtol * next.norm().max(prev.norm()) + atol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature { what, tol: rtol })
}

/// Real-valued convenience wrapper around [`integrate_doubling`].
pub fn integrate_real<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    min_panels: usize,
    rtol: f64,
    atol: f64,
    max_panels: usize,
    what: &'static str,
    mut f: F,
) -> Result<f64> {
    integrate_doubling(rule, a, b, min_panels, rtol, atol, max_panels, what, |x| {
        Complex64::new(f(x), 0.0)
    })
    .map(|v| v.re)
}

/// Integral over the triangle 0 ≤ s ≤ t ≤ len of g(s, t), tensorized Gauss–Legendre
/// with `panels` panels in each direction; panel doubling to `rtol`.
pub fn integrate_triangle<F: FnMut(f64, f64) -> Complex64>(
    rule: &GaussLegendre,
    len: f64,
    min_panels: usize,
    rtol: f64,
    atol: f64,
    max_panels: usize,
    what: &'static str,
    mut g: F,
) -> Result<Complex64> {
    let mut eval = |panels: usize| {
        composite(rule, 0.0, len, panels, |t| {
            // inner panels proportional to the inner length keep resolution uniform
            let inner = ((panels as f64 * t / len).ceil() as usize).max(1);
            composite(rule, 0.0, t, inner, |s| g(s, t))
        })
    };
    let mut panels = min_panels.max(1);
    let mut prev = eval(panels);
    while panels < max_panels {
        panels *= 2;
        let next = eval(panels);
        if (next - prev).norm() <= rtol * next.norm().max(prev.norm()) + atol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature { what, tol: rtol })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(8);
        let exact = |k: i32| if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
        for k in 0..16 {
            let v: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(x, w)| w * x.powi(k))
                .sum();
            assert!((v - exact(k)).abs() < 1e-14, "degree {k}: {v}");
        }
    }

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 12, 20] {
            let s: f64 = GaussLegendre::new(n).weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn doubling_resolves_trig_integrand() {
        let rule = GaussLegendre::new(10);
        let v = integrate_real(&rule, 0.0, 1.0, 2, 1e-12, 0.0, 1 << 10, "test", |t| {
            (2.0 * PI * t).sin().powi(2)
        })
        .unwrap();
        assert!((v - 0.5).abs() < 1e-13);
    }

    #[test]
    fn triangle_matches_iterated_closed_form() {
        // ∫₀¹∫₀ᵗ s·t ds dt = 1/8
        let rule = GaussLegendre::new(6);
        let v = integrate_triangle(&rule, 1.0, 1, 1e-12, 0.0, 64, "test", |s, t| {
            Complex64::new(s * t, 0.0)
        })
        .unwrap();
        assert!((v.re - 0.125).abs() < 1e-14);
    }
}
