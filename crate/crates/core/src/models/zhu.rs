//! Second-order comparison model with an exponential input gain and an
//! asymmetric Bouc-Wen state:
//! `m0*x'' + c0*x' + k0*(x - x0) = (k1/tau)*exp(-t/tau)*u + h`,
//! `dh/dt = A*du - beta*|du|*|h|^(n-1)*h - gamma*du*|h|^n + delta*u*sgn(du)`.

use crate::error::{Error, Result};
use crate::signals::TimeSeries;

use super::boucwen::{bw_rate, central_diff, DIVERGENCE_GUARD};
use super::params::ZhuParams;

#[inline]
pub(crate) fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[inline]
fn h_rate(p: &ZhuParams, du: f64, u: f64, h: f64) -> f64 {
    bw_rate(1.0, p.a, p.beta, p.gamma, p.n, du, h) + p.delta * u * sgn(du)
}

/// RK4 on the coupled (x, x', h) system with u and du held linear across
/// each step. Starts from x(0) = x0, x'(0) = 0, h(0) = 0. Returns the
/// sampled (x, h) traces.
pub(crate) fn zhu_states(p: &ZhuParams, u: &TimeSeries) -> Result<(Vec<f64>, Vec<f64>)> {
    let dt = u.dt();
    let uv = u.values();
    let du = central_diff(uv, dt);
    let m = uv.len();
    let inv_m0 = 1.0 / p.m0;
    let gain = p.k1 / p.tau;

    let accel = |t: f64, us: f64, hs: f64, x: f64, xd: f64| -> f64 {
        (gain * (-t / p.tau).exp() * us + hs - p.c0 * xd - p.k0 * (x - p.x0)) * inv_m0
    };

    let mut xs = vec![0.0; m];
    let mut hs = vec![0.0; m];
    xs[0] = p.x0;
    let (mut x, mut xd, mut h) = (p.x0, 0.0f64, 0.0f64);
    for k in 0..m - 1 {
        let t0 = u.time(k);
        let tm = t0 + 0.5 * dt;
        let t1 = t0 + dt;
        let (u0, u1) = (uv[k], uv[k + 1]);
        let um = 0.5 * (u0 + u1);
        let (du0, du1) = (du[k], du[k + 1]);
        let dum = 0.5 * (du0 + du1);

        let k1x = xd;
        let k1v = accel(t0, u0, h, x, xd);
        let k1h = h_rate(p, du0, u0, h);

        let k2x = xd + 0.5 * dt * k1v;
        let k2v = accel(tm, um, h + 0.5 * dt * k1h, x + 0.5 * dt * k1x, xd + 0.5 * dt * k1v);
        let k2h = h_rate(p, dum, um, h + 0.5 * dt * k1h);

        let k3x = xd + 0.5 * dt * k2v;
        let k3v = accel(tm, um, h + 0.5 * dt * k2h, x + 0.5 * dt * k2x, xd + 0.5 * dt * k2v);
        let k3h = h_rate(p, dum, um, h + 0.5 * dt * k2h);

        let k4x = xd + dt * k3v;
        let k4v = accel(t1, u1, h + dt * k3h, x + dt * k3x, xd + dt * k3v);
        let k4h = h_rate(p, du1, u1, h + dt * k3h);

        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        xd += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        h += dt / 6.0 * (k1h + 2.0 * k2h + 2.0 * k3h + k4h);

        let worst = x.abs().max(xd.abs()).max(h.abs());
        if !worst.is_finite() || worst > DIVERGENCE_GUARD {
            return Err(Error::Diverged { step: k + 1 });
        }
        xs[k + 1] = x;
        hs[k + 1] = h;
    }
    Ok((xs, hs))
}

/// Displacement response of the comparison model on the grid of `u`.
pub fn simulate_zhu(p: &ZhuParams, u: &TimeSeries) -> Result<TimeSeries> {
    p.validate()?;
    let (x, _) = zhu_states(p, u)?;
    Ok(u.map_values(x)?.with_unit("um"))
}
