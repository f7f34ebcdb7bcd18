//! Integer-order Bouc-Wen simulation: classical, auxiliary-constant, and
//! normalized forms, plus the redundancy and normalization transforms.

use crate::error::{Error, Result};
use crate::signals::TimeSeries;

use super::params::{CbwAuxParams, CbwParams, NbwParams, PolynomialGain};

/// Any state crossing this magnitude aborts the run; unstable parameter
/// sets blow up within a few steps and must fail fast instead of feeding
/// inf/NaN downstream.
pub(crate) const DIVERGENCE_GUARD: f64 = 1e12;

/// `sign(h) * |h|^n`, kept exact for n = 1 so that power-of-two parameter
/// rescalings commute with the arithmetic bit for bit.
#[inline]
pub(crate) fn odd_pow(h: f64, n: f64) -> f64 {
    if n == 1.0 {
        h
    } else {
        h.abs().powf(n - 1.0) * h
    }
}

/// `|h|^n` with the same n = 1 fast path.
#[inline]
pub(crate) fn abs_pow(h: f64, n: f64) -> f64 {
    if n == 1.0 {
        h.abs()
    } else {
        h.abs().powf(n)
    }
}

/// Sampled derivative by central differences, one-sided at the ends.
pub(crate) fn central_diff(values: &[f64], dt: f64) -> Vec<f64> {
    let m = values.len();
    let mut d = vec![0.0; m];
    if m < 2 {
        return d;
    }
    d[0] = (values[1] - values[0]) / dt;
    d[m - 1] = (values[m - 1] - values[m - 2]) / dt;
    let two_dt = 2.0 * dt;
    for k in 1..m - 1 {
        d[k] = (values[k + 1] - values[k - 1]) / two_dt;
    }
    d
}

#[inline]
pub(crate) fn bw_rate(d_inv: f64, a: f64, beta: f64, gamma: f64, n: f64, du: f64, h: f64) -> f64 {
    d_inv * (a * du - beta * du.abs() * odd_pow(h, n) - gamma * du * abs_pow(h, n))
}

/// RK4 integration of the hysteresis state
/// `dh/dt = D^-1 * (A*du - beta*|du|*|h|^(n-1)*h - gamma*du*|h|^n)`
/// over the grid of `u`, with `du` from central differences and held
/// linear across each step.
pub(crate) fn integrate_bw_state(
    d: f64,
    a: f64,
    beta: f64,
    gamma: f64,
    n: f64,
    h_init: f64,
    u: &TimeSeries,
) -> Result<Vec<f64>> {
    let dt = u.dt();
    let du = central_diff(u.values(), dt);
    let d_inv = 1.0 / d;
    let m = u.len();
    let mut h = vec![0.0; m];
    h[0] = h_init;
    let mut cur = h_init;
    for k in 0..m - 1 {
        let du0 = du[k];
        let du1 = du[k + 1];
        let dum = 0.5 * (du0 + du1);
        let k1 = bw_rate(d_inv, a, beta, gamma, n, du0, cur);
        let k2 = bw_rate(d_inv, a, beta, gamma, n, dum, cur + 0.5 * dt * k1);
        let k3 = bw_rate(d_inv, a, beta, gamma, n, dum, cur + 0.5 * dt * k2);
        let k4 = bw_rate(d_inv, a, beta, gamma, n, du1, cur + dt * k3);
        cur += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !cur.is_finite() || cur.abs() > DIVERGENCE_GUARD {
            return Err(Error::Diverged { step: k + 1 });
        }
        h[k + 1] = cur;
    }
    Ok(h)
}

/// Classical Bouc-Wen response `H = alpha*k*u + (1-alpha)*D*k*h` on the
/// grid of `u`.
pub fn simulate_cbw(p: &CbwParams, u: &TimeSeries) -> Result<TimeSeries> {
    p.validate()?;
    let h = integrate_bw_state(p.d, p.a, p.beta, p.gamma, p.n, p.h_init, u)?;
    let k_u = p.alpha * p.k;
    let k_h = (1.0 - p.alpha) * p.d * p.k;
    let out = u
        .values()
        .iter()
        .zip(&h)
        .map(|(&uv, &hv)| k_u * uv + k_h * hv)
        .collect();
    Ok(u.map_values(out)?.with_unit("um"))
}

/// Same dynamics with the output written as `H = k_a*u + k_b*D*h`.
pub fn simulate_cbw_aux(p: &CbwAuxParams, u: &TimeSeries) -> Result<TimeSeries> {
    p.validate()?;
    let h = integrate_bw_state(p.d, p.a, p.beta, p.gamma, p.n, p.h_init, u)?;
    let k_h = p.k_b * p.d;
    let out = u
        .values()
        .iter()
        .zip(&h)
        .map(|(&uv, &hv)| p.k_a * uv + k_h * hv)
        .collect();
    Ok(u.map_values(out)?.with_unit("um"))
}

/// The redundancy transform: `beta -> c^n*beta`, `gamma -> c^n*gamma`,
/// `D -> c*D`. The internal state scales as `h/c`, so `h_init` is divided
/// by `c` to keep the output trajectory unchanged for nonzero initial
/// states.
pub fn scale_cbw(p: &CbwParams, c: f64) -> Result<CbwParams> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::invalid(format!("scale must be positive, got {c}")));
    }
    let cn = if p.n == 1.0 { c } else { c.powf(p.n) };
    Ok(CbwParams {
        beta: cn * p.beta,
        gamma: cn * p.gamma,
        d: c * p.d,
        h_init: p.h_init / c,
        ..p.clone()
    })
}

/// Maps a classical parameter set onto the five-parameter normalized form.
pub fn normalize_cbw(p: &CbwParams) -> Result<NbwParams> {
    p.validate()?;
    let bg = p.beta + p.gamma;
    let ratio = p.a / bg;
    let h0 = if p.n == 1.0 { ratio } else { ratio.powf(1.0 / p.n) };
    Ok(NbwParams {
        k_u: p.alpha * p.k,
        k_h: (1.0 - p.alpha) * p.d * p.k * h0,
        rho: p.a / (p.d * h0),
        sigma: p.beta / bg,
        n: p.n,
        hbar_init: p.h_init / h0,
    })
}

fn nbw_state(p: &NbwParams, u: &TimeSeries) -> Result<Vec<f64>> {
    // The normalized dynamics are the classical ones with D = 1, A = rho,
    // beta = rho*sigma, gamma = rho*(1-sigma).
    integrate_bw_state(
        1.0,
        p.rho,
        p.rho * p.sigma,
        p.rho * (1.0 - p.sigma),
        p.n,
        p.hbar_init,
        u,
    )
}

/// Normalized Bouc-Wen response `H = k_u*u + k_h*hbar`.
pub fn simulate_nbw(p: &NbwParams, u: &TimeSeries) -> Result<TimeSeries> {
    p.validate()?;
    let hbar = nbw_state(p, u)?;
    let out = u
        .values()
        .iter()
        .zip(&hbar)
        .map(|(&uv, &hv)| p.k_u * uv + p.k_h * hv)
        .collect();
    Ok(u.map_values(out)?.with_unit("um"))
}

/// Asymmetric normalized Bouc-Wen response `H = g(u) + k_h*hbar`, where
/// the polynomial `g` replaces the linear gain (`p.k_u` is unused here).
pub fn simulate_anbw(poly: &PolynomialGain, p: &NbwParams, u: &TimeSeries) -> Result<TimeSeries> {
    poly.validate()?;
    p.validate()?;
    let hbar = nbw_state(p, u)?;
    let out = u
        .values()
        .iter()
        .zip(&hbar)
        .map(|(&uv, &hv)| poly.eval(uv) + p.k_h * hv)
        .collect();
    Ok(u.map_values(out)?.with_unit("um"))
}
