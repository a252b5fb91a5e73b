//! Monodromy matrix by high-order adaptive Runge–Kutta integration of the
//! first-order companion system, with optional λ-derivative.

use crate::coeffs::CoefficientSet;
use crate::error::{Error, Result};
use crate::reference::SpectralPoint;
use crate::tableau::{A, B_HIGH, B_LOW, C, STAGES};
use nalgebra::Matrix4;
use num_complex::Complex64;

/// Largest admissible Re λ^{1/4}; beyond this e^x approaches double range limits.
pub const CLAMP_X: f64 = 25.0;

pub type CMatrix4 = Matrix4<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    /// Local relative tolerance of the embedded error estimate.
    pub rtol: f64,
    pub max_steps: usize,
    /// Re-integrate with halved steps to report `err_est`.
    pub error_estimate: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { rtol: 1e-12, max_steps: 20_000, error_estimate: true }
    }
}

impl IntegratorOptions {
    pub fn with_rtol(rtol: f64) -> Self {
        Self { rtol, ..Self::default() }
    }

    pub fn fast(rtol: f64) -> Self {
        Self { rtol, error_estimate: false, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonodromyResult {
    pub m: CMatrix4,
    pub dm_dlambda: Option<CMatrix4>,
    /// Relative difference to a re-integration with every step halved (0 if not requested).
    pub err_est: f64,
    pub steps: usize,
}

/// M(λ) with default options.
pub fn integrate_monodromy(
    c: &CoefficientSet,
    pt: &SpectralPoint,
    want_derivative: bool,
) -> Result<MonodromyResult> {
    integrate_monodromy_with(c, pt, want_derivative, &IntegratorOptions::default())
}

type Block = [[Complex64; 4]; 4];

#[derive(Clone, Copy)]
struct State {
    m: Block,
    dm: Block,
}

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

impl State {
    fn identity() -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = Complex64::new(1.0, 0.0);
        }
        Self { m, dm: [[ZERO; 4]; 4] }
    }
}

struct System<'a> {
    c: &'a CoefficientSet,
    lambda: Complex64,
    deriv: bool,
}

impl System<'_> {
    /// Companion right-hand side A(t)𝓜 and A𝓜_λ + E𝓜, E the bottom-left unit.
    fn rhs(&self, t: f64, y: &State, out: &mut State) {
        let (p, dp, q) = self.c.eval(t);
        let a0 = self.lambda - q;
        for j in 0..4 {
            out.m[0][j] = y.m[1][j];
            out.m[1][j] = y.m[2][j];
            out.m[2][j] = y.m[3][j];
            out.m[3][j] = a0 * y.m[0][j] - dp * y.m[1][j] - p * y.m[2][j];
        }
        if self.deriv {
            for j in 0..4 {
                out.dm[0][j] = y.dm[1][j];
                out.dm[1][j] = y.dm[2][j];
                out.dm[2][j] = y.dm[3][j];
                out.dm[3][j] = a0 * y.dm[0][j] - dp * y.dm[1][j] - p * y.dm[2][j] + y.m[0][j];
            }
        }
    }

    /// One step; returns the ninth-order result and the high−low difference.
    fn step(&self, t: f64, h: f64, y: &State, k: &mut [State; STAGES]) -> (State, State) {
        let blocks = if self.deriv { 2 } else { 1 };
        for s in 0..STAGES {
            let mut ys = *y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a == 0.0 {
                    continue;
                }
                let ha = h * a;
                axpy(&mut ys, ha, kj, blocks);
            }
            let mut out = State { m: [[ZERO; 4]; 4], dm: [[ZERO; 4]; 4] };
            self.rhs(t + C[s] * h, &ys, &mut out);
            k[s] = out;
        }
        let mut high = *y;
        let mut diff = State { m: [[ZERO; 4]; 4], dm: [[ZERO; 4]; 4] };
        for (s, ks) in k.iter().enumerate() {
            if B_HIGH[s] != 0.0 {
                axpy(&mut high, h * B_HIGH[s], ks, blocks);
            }
            let e = B_HIGH[s] - B_LOW[s];
            if e != 0.0 {
                axpy(&mut diff, h * e, ks, blocks);
            }
        }
        (high, diff)
    }
}

fn axpy(y: &mut State, a: f64, x: &State, blocks: usize) {
    for r in 0..4 {
        for col in 0..4 {
            y.m[r][col] += x.m[r][col] * a;
        }
    }
    if blocks == 2 {
        for r in 0..4 {
            for col in 0..4 {
                y.dm[r][col] += x.dm[r][col] * a;
            }
        }
    }
}

fn block_error(y0: &Block, y1: &Block, diff: &Block, rtol: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..4 {
        let scale = (0..4)
            .map(|j| y0[r][j].norm().max(y1[r][j].norm()))
            .fold(0.0, f64::max)
            .max(1e-300);
        for j in 0..4 {
            worst = worst.max(diff[r][j].norm() / (rtol * scale));
        }
    }
    worst
}

fn to_matrix(b: &Block) -> CMatrix4 {
    CMatrix4::from_fn(|r, col| b[r][col])
}

/// M(λ) and optionally dM/dλ with explicit options.
pub fn integrate_monodromy_with(
    c: &CoefficientSet,
    pt: &SpectralPoint,
    want_derivative: bool,
    opts: &IntegratorOptions,
) -> Result<MonodromyResult> {
    if pt.x() > CLAMP_X || !pt.lambda.re.is_finite() || !pt.lambda.im.is_finite() {
        return Err(Error::Clamp { lambda: pt.lambda, x: pt.x(), clamp: CLAMP_X });
    }
    let sys = System { c, lambda: pt.lambda, deriv: want_derivative };
    let mut k = [State::identity(); STAGES];
    let mut y = State::identity();
    let mut t = 0.0;
    let freq = pt.z.norm() + c.cutoff() as f64 * 2.0 * std::f64::consts::PI;
    let mut h = (0.5 / (1.0 + freq)).min(1.0);
    let mut steps = Vec::new();
    let mut attempts = 0;
    while t < 1.0 {
        attempts += 1;
        if attempts > opts.max_steps {
            return Err(Error::StepLimit { abs_lambda: pt.lambda.norm(), steps: opts.max_steps });
        }
        let last = t + h >= 1.0;
        let hh = if last { 1.0 - t } else { h };
        let (next, diff) = sys.step(t, hh, &y, &mut k);
        let mut err = block_error(&y.m, &next.m, &diff.m, opts.rtol);
        if want_derivative {
            err = err.max(block_error(&y.dm, &next.dm, &diff.dm, opts.rtol));
        }
        if !err.is_finite() {
            h *= 0.2;
            continue;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-1.0 / 9.0)).clamp(0.2, 5.0) };
        if err <= 1.0 {
            y = next;
            steps.push(hh);
            t = if last { 1.0 } else { t + hh };
            h = hh * factor;
        } else {
            h = hh * factor;
        }
    }

    let err_est = if opts.error_estimate {
        let mut z = State::identity();
        let mut tt = 0.0;
        for &s in &steps {
            for _ in 0..2 {
                let (next, _) = sys.step(tt, 0.5 * s, &z, &mut k);
                z = next;
                tt += 0.5 * s;
            }
        }
        let scale = y.m.iter().flatten().map(|v| v.norm()).fold(1.0, f64::max);
        let mut d = 0.0f64;
        for r in 0..4 {
            for col in 0..4 {
                d = d.max((y.m[r][col] - z.m[r][col]).norm());
            }
        }
        d / scale
    } else {
        0.0
    };

    Ok(MonodromyResult {
        m: to_matrix(&y.m),
        dm_dlambda: want_derivative.then(|| to_matrix(&y.dm)),
        err_est,
        steps: steps.len(),
    })
}
