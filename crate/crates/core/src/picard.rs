//! Perturbation (Picard) series for the traces and the second-order
//! coefficient η_ν, both by nested Gauss–Legendre quadrature.

use crate::coeffs::CoefficientSet;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_triangle, GaussLegendre};
use crate::reference::{free_solution_derivative, free_solutions, SpectralPoint};
use num_complex::Complex64;

const RULE_POINTS: usize = 16;
const MAX_PANELS: usize = 64;
const SERIES_RTOL: f64 = 1e-10;
pub const MAX_TERMS: usize = 6;

/// Partial sums of the quarter-trace series and the certified tail bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardTraces {
    pub t1: Complex64,
    pub t2: Complex64,
    pub bound1: f64,
    pub bound2: f64,
}

/// Tail bound 4·aᴺ/N!·e^{xν+a}, a = νκ/|z|₁, on the quarter-trace scale.
pub fn picard_bound(c: &CoefficientSet, pt: &SpectralPoint, nu: usize, n_terms: usize) -> f64 {
    let a = nu as f64 * c.kappa() / pt.z1();
    let fact: f64 = (1..=n_terms).map(|k| k as f64).product();
    4.0 * a.powi(n_terms as i32) / fact * (pt.x() * nu as f64 + a).exp()
}

struct Grid {
    nodes: Vec<f64>,
    panel_of: Vec<usize>,
    edges: Vec<f64>,
    rule: GaussLegendre,
    bary: Vec<f64>,
}

impl Grid {
    fn new(len: f64, panels: usize) -> Self {
        let rule = GaussLegendre::new(RULE_POINTS);
        let h = len / panels as f64;
        let edges: Vec<f64> = (0..=panels).map(|k| k as f64 * h).collect();
        let mut nodes = Vec::new();
        let mut panel_of = Vec::new();
        for k in 0..panels {
            for (x, _) in rule.mapped(edges[k], edges[k + 1]) {
                nodes.push(x);
                panel_of.push(k);
            }
        }
        // barycentric weights of the reference nodes
        let r = &rule.nodes;
        let bary = (0..r.len())
            .map(|i| 1.0 / (0..r.len()).filter(|&j| j != i).map(|j| r[i] - r[j]).product::<f64>())
            .collect();
        Self { nodes, panel_of, edges, rule, bary }
    }

    /// Interpolate panel values `vals` (at the panel's nodes) at reference x ∈ [−1, 1].
    fn interpolate(&self, vals: &[Complex64], x: f64) -> Complex64 {
        let r = &self.rule.nodes;
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = 0.0;
        for i in 0..r.len() {
            let d = x - r[i];
            if d == 0.0 {
                return vals[i];
            }
            let w = self.bary[i] / d;
            num += vals[i] * w;
            den += w;
        }
        num / den
    }

    /// ∫₀ᵗ K(t − s) u(s) ds with u tabulated on the nodes.
    fn convolve<K: Fn(f64) -> Complex64>(&self, kernel: &K, u: &[Complex64], t: f64) -> Complex64 {
        let m = self.rule.len();
        let mut acc = Complex64::new(0.0, 0.0);
        let panels = self.edges.len() - 1;
        for k in 0..panels {
            let (a, b) = (self.edges[k], self.edges[k + 1]);
            if a >= t {
                break;
            }
            let block = &u[k * m..(k + 1) * m];
            if b <= t {
                for (i, (s, w)) in self.rule.mapped(a, b).enumerate() {
                    acc += kernel(t - s) * block[i] * w;
                }
            } else {
                for (s, w) in self.rule.mapped(a, t) {
                    let x = 2.0 * (s - a) / (b - a) - 1.0;
                    acc += kernel(t - s) * self.interpolate(block, x) * w;
                }
            }
        }
        acc
    }
}

/// Quarter-trace contributions Σ_k φ_{k,n}^{(k)}(len)/4 for n = 0..n_terms.
fn series_terms(c: &CoefficientSet, pt: &SpectralPoint, len: f64, n_terms: usize, panels: usize) -> Vec<Complex64> {
    let grid = Grid::new(len, panels);
    let coeffs: Vec<(f64, f64, f64)> = grid.nodes.iter().map(|&t| c.eval(t)).collect();
    let kernels: Vec<Box<dyn Fn(f64) -> Complex64 + '_>> =
        (0..4).map(|k| Box::new(move |s: f64| free_solutions(pt, s, 3 - k)) as Box<dyn Fn(f64) -> Complex64>).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); n_terms];
    if n_terms == 0 {
        return out;
    }
    for j in 0..4 {
        // derivatives 0..2 of the current term at the nodes
        let mut cur: Vec<[Complex64; 3]> = grid
            .nodes
            .iter()
            .map(|&t| [0, 1, 2].map(|k| free_solution_derivative(pt, t, j, k)))
            .collect();
        out[0] += free_solution_derivative(pt, len, j, j) / 4.0;
        for term in out.iter_mut().skip(1) {
            let u: Vec<Complex64> = cur
                .iter()
                .zip(&coeffs)
                .map(|(d, &(p, dp, q))| d[2] * p + d[1] * dp + d[0] * q)
                .collect();
            *term -= grid.convolve(&kernels[j], &u, len) / 4.0;
            cur = grid
                .nodes
                .iter()
                .map(|&t| [0, 1, 2].map(|k| -grid.convolve(&kernels[k], &u, t)))
                .collect();
        }
    }
    let _ = grid.panel_of.len();
    out
}

fn converged_terms(c: &CoefficientSet, pt: &SpectralPoint, len: f64, n_terms: usize) -> Result<Vec<Complex64>> {
    let freq = pt.z.norm() + 2.0 * std::f64::consts::PI * c.cutoff() as f64;
    let mut panels = ((len * freq / 4.0).ceil() as usize).max(len as usize).max(1);
    let mut prev = series_terms(c, pt, len, n_terms, panels);
    let scale = (pt.x() * len).exp();
    while panels < MAX_PANELS {
        panels *= 2;
        let next = series_terms(c, pt, len, n_terms, panels);
        let diff = next.iter().zip(&prev).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if diff <= SERIES_RTOL * scale {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature { what: "picard series", tol: SERIES_RTOL })
}

/// Partial sums over n < `n_terms` of the series for T₁ and T₂, with tail bounds.
pub fn picard_series_traces(c: &CoefficientSet, pt: &SpectralPoint, n_terms: usize) -> Result<PicardTraces> {
    if n_terms > MAX_TERMS {
        return Err(Error::Precondition(format!("at most {MAX_TERMS} series terms")));
    }
    let sum = |len: f64| -> Result<Complex64> {
        Ok(converged_terms(c, pt, len, n_terms)?.iter().sum())
    };
    Ok(PicardTraces {
        t1: sum(1.0)?,
        t2: sum(2.0)?,
        bound1: picard_bound(c, pt, 1, n_terms),
        bound2: picard_bound(c, pt, 2, n_terms),
    })
}

/// Individual series terms on [0, ν] (quarter-trace scale).
pub fn picard_terms(c: &CoefficientSet, pt: &SpectralPoint, nu: usize, n_terms: usize) -> Result<Vec<Complex64>> {
    converged_terms(c, pt, nu as f64, n_terms)
}

/// η_ν(λ) for q = 0, p̂₀ = 0, after moving the origin to a zero of p.
/// Returns the value and the shift used.
pub fn eta_nu(c: &CoefficientSet, pt: &SpectralPoint, nu: usize) -> Result<(Complex64, f64)> {
    if !(nu == 1 || nu == 2) {
        return Err(Error::Precondition("ν must be 1 or 2".into()));
    }
    if !c.q.is_zero() || c.fourier_p0().abs() > 1e-14 {
        return Err(Error::Precondition("η_ν requires q = 0 and zero-mean p".into()));
    }
    let shift = c.zero_of_p().ok_or_else(|| Error::Precondition("p has no zero".into()))?;
    let shifted = c.shifted(shift)?;
    let len = nu as f64;
    let rule = GaussLegendre::new(RULE_POINTS);
    let freq = pt.z.norm() + 2.0 * std::f64::consts::PI * c.cutoff() as f64;
    let panels = ((len * freq / 4.0).ceil() as usize).max(1);
    let v = integrate_triangle(&rule, len, panels, 1e-10, 1e-300, 1 << 8, "eta", |s, t| {
        shifted.p.eval(s).0
            * shifted.p.eval(t).0
            * free_solutions(pt, len - t + s, 1)
            * free_solutions(pt, t - s, 1)
    })?;
    Ok((v, shift))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::TrigSeries;
    use crate::discriminants::DiscriminantBundle;
    use crate::monodromy::{integrate_monodromy_with, IntegratorOptions};
    use crate::reference::free_discriminants;

    fn traces(c: &CoefficientSet, pt: &SpectralPoint) -> (Complex64, Complex64) {
        let r = integrate_monodromy_with(c, pt, false, &IntegratorOptions::fast(1e-13)).unwrap();
        let b = DiscriminantBundle::from_matrix(pt.lambda, &r.m);
        (b.t1, b.t2)
    }

    #[test]
    fn empty_and_first_partial_sums() {
        let c = CoefficientSet::cos1();
        let pt = SpectralPoint::real(30.0);
        let r0 = picard_series_traces(&c, &pt, 0).unwrap();
        assert_eq!((r0.t1, r0.t2), (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)));
        let r1 = picard_series_traces(&c, &pt, 1).unwrap();
        let f = free_discriminants(&pt);
        assert!((r1.t1 - f.t1).norm() < 1e-12 * f.t1.norm());
        assert!((r1.t2 - f.t2).norm() < 1e-12 * f.t2.norm());
    }

    #[test]
    fn first_order_term_vanishes_for_zero_mean_p() {
        // sin 2πt has p(0) = 0 and zero mean
        let c = CoefficientSet::new(TrigSeries::new(0.0, vec![], vec![1.0]), TrigSeries::zero()).unwrap();
        let terms = picard_terms(&c, &SpectralPoint::real(12.0), 1, 2).unwrap();
        assert!(terms[1].norm() < 1e-10, "{}", terms[1]);
        let terms = picard_terms(&c, &SpectralPoint::real(12.0), 2, 2).unwrap();
        assert!(terms[1].norm() < 1e-9, "{}", terms[1]);
    }

    #[test]
    fn series_approaches_integrator() {
        let c = CoefficientSet::new(TrigSeries::new(0.1, vec![0.3], vec![]), TrigSeries::new(0.2, vec![], vec![0.1])).unwrap();
        for lam in [Complex64::new(20.0, 0.0), Complex64::new(-150.0, 60.0)] {
            let pt = SpectralPoint::new(lam);
            let (t1, t2) = traces(&c, &pt);
            let mut last = f64::INFINITY;
            for n in 3..=5 {
                let s = picard_series_traces(&c, &pt, n).unwrap();
                let gap = (s.t1 - t1).norm();
                assert!(gap <= s.bound1, "n={n}: {gap} > {}", s.bound1);
                assert!((s.t2 - t2).norm() <= s.bound2);
                assert!(gap < last);
                last = gap;
            }
        }
    }

    #[test]
    fn eta_examples() {
        let zero = CoefficientSet::zero();
        assert_eq!(eta_nu(&zero, &SpectralPoint::real(5.0), 1).unwrap().0, Complex64::new(0.0, 0.0));
        let s = CoefficientSet::new(TrigSeries::new(0.0, vec![], vec![1.0]), TrigSeries::zero()).unwrap();
        let (v1, v2) = s.perturbation_moments().unwrap();
        let e1 = eta_nu(&s, &SpectralPoint::real(0.0), 1).unwrap().0;
        let e2 = eta_nu(&s, &SpectralPoint::real(0.0), 2).unwrap().0;
        assert!((e1.re - v1).abs() < 1e-8 * v1.abs());
        assert!((e2.re - v2).abs() < 1e-8 * v2.abs());
        // cos 2πt is shifted to sin 2πt internally
        let (e, shift) = eta_nu(&CoefficientSet::cos1(), &SpectralPoint::real(0.0), 1).unwrap();
        assert!((shift - 0.25).abs() < 1e-12);
        assert!((e.re - v1).abs() < 1e-8 * v1.abs());
        assert!(eta_nu(&CoefficientSet::new(TrigSeries::new(0.5, vec![1.0], vec![]), TrigSeries::zero()).unwrap(), &SpectralPoint::real(0.0), 1).is_err());
    }
}
