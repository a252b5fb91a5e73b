//! Closed-form free-operator quantities (p = q = 0).

use crate::discriminants::DiscriminantBundle;
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const TAYLOR_CUTOFF: f64 = 1e-2;
const TAYLOR_TERMS: usize = 8;

/// A spectral parameter λ with its principal quarter-root z, arg z ∈ (−π/4, π/4].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub lambda: Complex64,
    pub z: Complex64,
}

impl SpectralPoint {
    pub fn new(lambda: Complex64) -> Self {
        let r = lambda.norm();
        if r == 0.0 {
            return Self { lambda, z: Complex64::new(0.0, 0.0) };
        }
        let mut arg = lambda.arg();
        if arg <= -PI {
            arg = PI;
        }
        // λ on the negative axis with a −0.0 imaginary part belongs to the upper side
        if lambda.im == 0.0 && lambda.re < 0.0 {
            arg = PI;
        }
        let z = Complex64::from_polar(r.powf(0.25), arg / 4.0);
        Self { lambda, z }
    }

    pub fn real(lambda: f64) -> Self {
        Self::new(Complex64::new(lambda, 0.0))
    }

    /// Point with prescribed quarter-root, λ = z⁴.
    pub fn from_z(z: Complex64) -> Self {
        Self::new(z.powi(4))
    }

    pub fn x(&self) -> f64 {
        self.z.re
    }

    pub fn y(&self) -> f64 {
        self.z.im
    }

    /// |z|₁ = max(1, |z|).
    pub fn z1(&self) -> f64 {
        self.z.norm().max(1.0)
    }

    pub fn is_real(&self) -> bool {
        self.lambda.im == 0.0
    }
}

/// Signed quarter-root s = sign(λ)|λ|^{1/4} and its inverse.
pub fn s_of_lambda(lambda: f64) -> f64 {
    lambda.signum() * lambda.abs().powf(0.25)
}

pub fn lambda_of_s(s: f64) -> f64 {
    s.signum() * s.powi(4)
}

/// φⱼ⁰(t, λ), the free fundamental solution with φⱼ^{(k)}(0) = δⱼₖ.
pub fn free_solutions(pt: &SpectralPoint, t: f64, j: usize) -> Complex64 {
    assert!(j < 4, "solution index must be 0..3");
    let w = pt.z * t;
    if w.norm() < TAYLOR_CUTOFF {
        return taylor(pt.lambda, t, j);
    }
    let z = pt.z;
    match j {
        0 => (w.cosh() + w.cos()) / 2.0,
        1 => (w.sinh() + w.sin()) / (2.0 * z),
        2 => (w.cosh() - w.cos()) / (2.0 * z * z),
        _ => (w.sinh() - w.sin()) / (2.0 * z * z * z),
    }
}

/// k-th t-derivative of φⱼ⁰, using φⱼ⁰′ = φⱼ₋₁⁰ and φ₀⁰′ = λφ₃⁰.
pub fn free_solution_derivative(pt: &SpectralPoint, t: f64, j: usize, k: usize) -> Complex64 {
    if k <= j {
        free_solutions(pt, t, j - k)
    } else {
        pt.lambda * free_solutions(pt, t, j + 4 - k)
    }
}

fn taylor(lambda: Complex64, t: f64, j: usize) -> Complex64 {
    // φⱼ = Σ_m λ^m t^{4m+j}/(4m+j)!
    let mut term = Complex64::new(t.powi(j as i32) / factorial(j), 0.0);
    let mut acc = term;
    for m in 1..TAYLOR_TERMS {
        let n = 4 * m + j;
        let denom = (n * (n - 1) * (n - 2) * (n - 3)) as f64;
        term = term * lambda * t.powi(4) / denom;
        acc += term;
    }
    acc
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Free traces, resonance function, discriminants and Lyapunov branches.
pub fn free_discriminants(pt: &SpectralPoint) -> DiscriminantBundle {
    let z = pt.z;
    let (ch, c) = (z.cosh(), z.cos());
    let one = Complex64::new(1.0, 0.0);
    let t1 = (ch + c) / 2.0;
    let t2 = ((2.0 * z).cosh() + (2.0 * z).cos()) / 2.0;
    let rho = (ch - c).powi(2) / 4.0;
    DiscriminantBundle {
        lambda: pt.lambda,
        t1,
        t2,
        t: one + 2.0 * ch * c,
        rho,
        d_plus: (c - one) * (ch - one),
        d_minus: (c + one) * (ch + one),
        delta1: ch,
        delta2: c,
        branch_real: pt.is_real() && pt.lambda.re >= 0.0,
    }
}

/// A closed-form zero with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreeZero {
    pub lambda: f64,
    pub multiplicity: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreeLabels {
    pub periodic: Vec<FreeZero>,
    pub antiperiodic: Vec<FreeZero>,
    pub resonances: Vec<FreeZero>,
}

/// Free periodic, antiperiodic and resonance zeros with index n ≤ `n_max`.
pub fn free_spectrum_labels(n_max: usize) -> Result<FreeLabels> {
    if n_max == 0 {
        return Err(Error::Precondition("free_spectrum_labels needs N ≥ 1".into()));
    }
    let simple = |lambda| FreeZero { lambda, multiplicity: 1 };
    let double = |lambda| FreeZero { lambda, multiplicity: 2 };
    let mut periodic = vec![simple(0.0)];
    let mut antiperiodic = Vec::new();
    let mut resonances = vec![simple(0.0)];
    for n in 1..=n_max {
        let k = PI * n as f64;
        periodic.push(double((2.0 * k).powi(4)));
        antiperiodic.push(double((PI * (2 * n - 1) as f64).powi(4)));
        resonances.push(double(-4.0 * k.powi(4)));
    }
    Ok(FreeLabels { periodic, antiperiodic, resonances })
}
