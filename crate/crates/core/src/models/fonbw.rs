//! Fractional-order normalized Bouc-Wen simulation.
//!
//! Per step the input derivative `v_k = D^lambda1 u` is formed by the GL
//! sum, then the state equation
//! `D^lambda2 hbar = rho*(v - sigma*|v|*|hbar|^(n-1)*hbar + (sigma-1)*v*|hbar|^n)`
//! is stepped semi-implicitly: the lagged part of the GL sum is known, the
//! current sample is the unknown. For n = 1 the update is a closed form
//! with the sign of `hbar` frozen from the previous step; for general n a
//! safeguarded Newton iteration solves the scalar equation.

use crate::error::{Error, Result};
use crate::fracdiff::{dot, gl_derivative, scale_factor, GlWeightTable, Memory};
use crate::signals::TimeSeries;

use super::boucwen::DIVERGENCE_GUARD;
use super::params::FonbwParams;

const MAX_SOLVER_ITERATIONS: usize = 100;

/// The four hysteresis branch equations, selected by the signs of the
/// state and of the fractional input derivative. Ties resolve to the
/// ascending label first, then to the positive one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    PositiveAscending,
    PositiveDescending,
    NegativeDescending,
    NegativeAscending,
}

pub fn classify_branch(hbar: f64, v: f64) -> Branch {
    if hbar >= 0.0 {
        if v >= 0.0 {
            Branch::PositiveAscending
        } else {
            Branch::PositiveDescending
        }
    } else if v >= 0.0 {
        Branch::NegativeAscending
    } else {
        Branch::NegativeDescending
    }
}

/// Solves `b*(x + s_hist) = rho*(v - sigma*|v|*|x|^(n-1)*x + (sigma-1)*v*|x|^n)`
/// for the new state sample `x`.
#[allow(clippy::too_many_arguments)]
fn solve_hbar(
    b: f64,
    s_hist: f64,
    rho: f64,
    sigma: f64,
    v: f64,
    n: f64,
    x_prev: f64,
    step: usize,
) -> Result<f64> {
    if n == 1.0 {
        let s = if x_prev >= 0.0 { 1.0 } else { -1.0 };
        let denom = b + rho * (sigma * v.abs() - (sigma - 1.0) * v * s);
        let x = (rho * v - b * s_hist) / denom;
        if x.is_finite() {
            return Ok(x);
        }
        return Err(Error::SolverFailed { step });
    }

    let drive = rho * v;
    let sv = rho * sigma * v.abs();
    let gv = rho * (sigma - 1.0) * v;
    // phi(x) = b*(x + s_hist) - drive + sv*sign(x)*|x|^n - gv*|x|^n
    let eval = |x: f64| -> (f64, f64) {
        let ax = x.abs();
        let (pw, pnm1) = if ax == 0.0 {
            (0.0, 0.0)
        } else {
            let pw = ax.powf(n);
            (pw, pw / ax)
        };
        let sgn = if x < 0.0 { -1.0 } else { 1.0 };
        let f = b * (x + s_hist) - drive + sv * sgn * pw - gv * pw;
        let df = b + n * pnm1 * (sv - gv * sgn);
        (f, df)
    };

    let tol = 1e-13 * (b * (x_prev.abs() + s_hist.abs() + 1.0) + drive.abs()) + 1e-300;
    let mut x = x_prev;
    let mut neg: Option<f64> = None;
    let mut pos: Option<f64> = None;
    for _ in 0..MAX_SOLVER_ITERATIONS {
        let (f, df) = eval(x);
        if f.is_finite() {
            if f.abs() <= tol {
                return Ok(x);
            }
            if f > 0.0 {
                pos = Some(x);
            } else {
                neg = Some(x);
            }
        }
        let mut next = if f.is_finite() && df.is_finite() && df != 0.0 {
            x - f / df
        } else {
            f64::NAN
        };
        if let (Some(a), Some(c)) = (neg, pos) {
            let (lo, hi) = if a < c { (a, c) } else { (c, a) };
            if !(next.is_finite() && next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
        } else if !next.is_finite() {
            let probe = 1.0 + x.abs();
            next = if f.is_finite() && (f > 0.0) == (df >= 0.0) {
                x - probe
            } else {
                x + probe
            };
        }
        if next == x {
            // No representable point does better; accept it.
            return Ok(x);
        }
        x = next;
    }
    Err(Error::SolverFailed { step })
}

fn history_window(memory: Memory, len: usize) -> usize {
    match memory {
        Memory::Unbounded => len.saturating_sub(1),
        Memory::Truncated(l) => l,
    }
}

/// Incremental FONBW state stepper for closed-loop use, where each input
/// sample becomes known only after the previous output was computed. Both
/// GL sums run over reversed buffers so every step is a contiguous dot
/// product.
pub(crate) struct FonbwStepper {
    rho: f64,
    sigma: f64,
    n: f64,
    hbar_init: f64,
    s1: f64,
    b: f64,
    w1: GlWeightTable,
    w2: GlWeightTable,
    win1: usize,
    win2: usize,
    rev_u: Vec<f64>,
    rev_h: Vec<f64>,
    cap: usize,
    k: usize,
}

impl FonbwStepper {
    pub(crate) fn new(p: &FonbwParams, dt: f64, memory: Memory, cap: usize) -> Result<Self> {
        let mem = memory.normalize(cap);
        let win = history_window(mem, cap);
        Ok(FonbwStepper {
            rho: p.rho,
            sigma: p.sigma,
            n: p.n,
            hbar_init: p.hbar_init,
            s1: scale_factor(dt, p.lambda1),
            b: scale_factor(dt, p.lambda2),
            w1: GlWeightTable::new(p.lambda1, win)?,
            w2: GlWeightTable::new(p.lambda2, win)?,
            win1: win,
            win2: win,
            rev_u: vec![0.0; cap],
            rev_h: vec![0.0; cap],
            cap,
            k: 0,
        })
    }

    /// State sample the stepper would produce if `u_k` were the input at
    /// the current step; does not advance, and may be retried with other
    /// candidates. The candidate is staged into the input buffer so the GL
    /// sum is one contiguous dot product, the same association order the
    /// batch simulation uses.
    pub(crate) fn trial(&mut self, u_k: f64) -> Result<f64> {
        let k = self.k;
        assert!(k < self.cap, "stepper advanced past its capacity");
        if k == 0 {
            return Ok(self.hbar_init);
        }
        let slot = self.cap - 1 - k;
        self.rev_u[slot] = u_k;
        let m1 = k.min(self.win1);
        let w1 = self.w1.weights();
        let v = self.s1 * dot(&w1[..=m1], &self.rev_u[slot..slot + m1 + 1]);
        let m2 = k.min(self.win2);
        let w2 = self.w2.weights();
        let s_hist = dot(&w2[1..=m2], &self.rev_h[self.cap - k..self.cap - k + m2]);
        let x_prev = self.rev_h[self.cap - k];
        solve_hbar(self.b, s_hist, self.rho, self.sigma, v, self.n, x_prev, k)
    }

    pub(crate) fn commit(&mut self, u_k: f64, hbar_k: f64) {
        let slot = self.cap - 1 - self.k;
        self.rev_u[slot] = u_k;
        self.rev_h[slot] = hbar_k;
        self.k += 1;
    }
}

/// FONBW response `H = g(u) + k_h*hbar` on the grid of `u`, with both GL
/// operators truncated to `memory` lagged samples.
pub fn simulate_fonbw(p: &FonbwParams, u: &TimeSeries, memory: Memory) -> Result<TimeSeries> {
    p.validate()?;
    memory.validate()?;
    let m = u.len();
    let mem = memory.normalize(m);
    let v = gl_derivative(u, p.lambda1, mem)?;
    let v = v.values();
    let win = history_window(mem, m);
    let table = GlWeightTable::new(p.lambda2, win)?;
    let w2 = table.weights();
    let b = scale_factor(u.dt(), p.lambda2);

    let mut hbar = vec![0.0; m];
    let mut rev = vec![0.0; m];
    hbar[0] = p.hbar_init;
    rev[m - 1] = p.hbar_init;
    for k in 1..m {
        let m2 = k.min(win);
        let s_hist = dot(&w2[1..=m2], &rev[m - k..m - k + m2]);
        let x_prev = rev[m - k];
        let x = solve_hbar(b, s_hist, p.rho, p.sigma, v[k], p.n, x_prev, k)?;
        if !x.is_finite() || x.abs() > DIVERGENCE_GUARD {
            return Err(Error::Diverged { step: k });
        }
        hbar[k] = x;
        rev[m - 1 - k] = x;
    }

    let out = u
        .values()
        .iter()
        .zip(&hbar)
        .map(|(&uv, &hv)| p.poly.eval(uv) + p.k_h * hv)
        .collect();
    Ok(u.map_values(out)?.with_unit("um"))
}
