//! Inverse-multiplicative feedforward compensators and a closed cascade
//! harness. Each compensator turns a desired output trajectory into a
//! command voltage; the cascade feeds that command back through the forward
//! model and reports the tracking error.
//!
//! The inverse structure contains an algebraic loop: the correction term
//! needs the very sample being computed. By default the loop is cut with a
//! one-sample delay; an optional per-step fixed-point iteration tightens
//! the inversion where the delay floor matters.

use crate::error::{Error, Result};
use crate::fracdiff::Memory;
use crate::identify::rms_error;
use crate::models::{
    bw_rate, central_diff, sgn, simulate_anbw, simulate_cbw, simulate_cbw_aux, simulate_fonbw,
    simulate_nbw, simulate_zhu, CbwAuxParams, CbwParams, FonbwParams, FonbwStepper, NbwParams,
    PolynomialGain, ZhuParams, DIVERGENCE_GUARD,
};
use crate::signals::TimeSeries;

/// How the algebraic loop inside the inverse structure is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoopMode {
    /// Evaluate the correction term with the previous step's command.
    #[default]
    Delay,
    /// Iterate command and correction within each step, up to the given
    /// number of passes (1 to 10).
    FixedPoint(usize),
}

impl LoopMode {
    fn validate(self) -> Result<()> {
        match self {
            LoopMode::FixedPoint(i) if !(1..=10).contains(&i) => Err(Error::invalid(format!(
                "fixed-point iterations must lie in 1..=10, got {i}"
            ))),
            _ => Ok(()),
        }
    }
}

fn guard(value: f64, step: usize) -> Result<f64> {
    if !value.is_finite() || value.abs() > DIVERGENCE_GUARD {
        return Err(Error::Diverged { step });
    }
    Ok(value)
}

/// Fractional-model inverse with unbounded history and the delay loop.
pub fn compensate_fonbw(h_d: &TimeSeries, p: &FonbwParams) -> Result<TimeSeries> {
    compensate_fonbw_with(h_d, p, Memory::Unbounded, LoopMode::Delay)
}

/// Fractional-model inverse: `u_k = (H_d,k - k_h*hbar_k - g_tail(u)) / k_u1`
/// with the state advanced by the forward solver on the commanded input.
pub fn compensate_fonbw_with(
    h_d: &TimeSeries,
    p: &FonbwParams,
    memory: Memory,
    mode: LoopMode,
) -> Result<TimeSeries> {
    p.validate()?;
    memory.validate()?;
    mode.validate()?;
    let m = h_d.len();
    let hd = h_d.values();
    let k_u1 = p.poly.k_u1();
    let mut stepper = FonbwStepper::new(p, h_d.dt(), memory, m)?;
    let mut out = Vec::with_capacity(m);

    for k in 0..m {
        let prev = if k == 0 { 0.0 } else { out[k - 1] };
        let (model_in, hb) = match mode {
            LoopMode::Delay => {
                let hb = guard(stepper.trial(prev)?, k)?;
                (prev, hb)
            }
            LoopMode::FixedPoint(iters) => {
                let mut cand = prev;
                for _ in 0..iters {
                    let hb = guard(stepper.trial(cand)?, k)?;
                    let g = p.k_h * hb + p.poly.eval_tail(cand);
                    let next = guard((hd[k] - g) / k_u1, k)?;
                    let done = (next - cand).abs() <= 1e-12 * (1.0 + next.abs());
                    cand = next;
                    if done {
                        break;
                    }
                }
                let hb = guard(stepper.trial(cand)?, k)?;
                (cand, hb)
            }
        };
        let g = p.k_h * hb + p.poly.eval_tail(model_in);
        let uk = guard((hd[k] - g) / k_u1, k)?;
        stepper.commit(model_in, hb);
        out.push(uk);
    }
    Ok(h_d.map_values(out)?.with_unit("V"))
}

/// Classical-model inverse `u = (H_d - k_b*D*hhat) / k_a`, the hysteresis
/// estimate integrated on the delayed command slope.
pub fn compensate_cbw(h_d: &TimeSeries, p: &CbwAuxParams) -> Result<TimeSeries> {
    p.validate()?;
    if p.k_a == 0.0 {
        return Err(Error::invalid("k_a must be nonzero to invert the linear gain"));
    }
    let dt = h_d.dt();
    let hd = h_d.values();
    let d_inv = 1.0 / p.d;
    let kb_d = p.k_b * p.d;
    let mut hhat = p.h_init;
    let (mut u_prev1, mut u_prev2) = (0.0f64, 0.0f64);
    let mut out = Vec::with_capacity(hd.len());
    for (k, &target) in hd.iter().enumerate() {
        if k >= 1 {
            let du = (u_prev1 - u_prev2) / dt;
            let k1 = bw_rate(d_inv, p.a, p.beta, p.gamma, p.n, du, hhat);
            let k2 = bw_rate(d_inv, p.a, p.beta, p.gamma, p.n, du, hhat + 0.5 * dt * k1);
            let k3 = bw_rate(d_inv, p.a, p.beta, p.gamma, p.n, du, hhat + 0.5 * dt * k2);
            let k4 = bw_rate(d_inv, p.a, p.beta, p.gamma, p.n, du, hhat + dt * k3);
            hhat = guard(hhat + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), k)?;
        }
        let uk = guard((target - kb_d * hhat) / p.k_a, k)?;
        u_prev2 = u_prev1;
        u_prev1 = uk;
        out.push(uk);
    }
    Ok(h_d.map_values(out)?.with_unit("V"))
}

/// Comparison-model inverse
/// `u = tau*e^{t/tau}/k1 * (m0*Hdd + c0*Hd' + k0*H_d - hhat)` with the
/// reference derivatives from central differences.
pub fn compensate_zhu(h_d: &TimeSeries, p: &ZhuParams) -> Result<TimeSeries> {
    p.validate_shape()?;
    if p.k1 == 0.0 {
        return Err(Error::invalid("k1 must be nonzero to invert the input gain"));
    }
    let dt = h_d.dt();
    let hd = h_d.values();
    let d1 = central_diff(hd, dt);
    let d2 = central_diff(&d1, dt);
    let mut hhat = 0.0f64;
    let (mut u_prev1, mut u_prev2) = (0.0f64, 0.0f64);
    let mut out = Vec::with_capacity(hd.len());
    for (k, &target) in hd.iter().enumerate() {
        if k >= 1 {
            let du = (u_prev1 - u_prev2) / dt;
            let us = u_prev1;
            let rate = |h: f64| bw_rate(1.0, p.a, p.beta, p.gamma, p.n, du, h) + p.delta * us * sgn(du);
            let k1 = rate(hhat);
            let k2 = rate(hhat + 0.5 * dt * k1);
            let k3 = rate(hhat + 0.5 * dt * k2);
            let k4 = rate(hhat + dt * k3);
            hhat = guard(hhat + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), k)?;
        }
        let coef = p.tau * (h_d.time(k) / p.tau).exp() / p.k1;
        let uk = guard(coef * (p.m0 * d2[k] + p.c0 * d1[k] + p.k0 * target - hhat), k)?;
        u_prev2 = u_prev1;
        u_prev1 = uk;
        out.push(uk);
    }
    Ok(h_d.map_values(out)?.with_unit("V"))
}

/// A compensator choice with its parameters.
#[derive(Debug, Clone)]
pub enum CompensatorSpec {
    Fonbw {
        params: FonbwParams,
        memory: Memory,
        mode: LoopMode,
    },
    Cbw {
        params: CbwAuxParams,
    },
    Zhu {
        params: ZhuParams,
    },
}

/// A forward model the command is played through.
#[derive(Debug, Clone)]
pub enum PlantSpec {
    Cbw(CbwParams),
    CbwAux(CbwAuxParams),
    Nbw(NbwParams),
    Anbw {
        poly: PolynomialGain,
        params: NbwParams,
    },
    Fonbw {
        params: FonbwParams,
        memory: Memory,
    },
    Zhu(ZhuParams),
}

/// Closed-cascade outcome: the command, what the plant actually produced,
/// and the two RMS figures.
#[derive(Debug, Clone)]
pub struct CompensationReport {
    pub u_cmd: TimeSeries,
    pub h_achieved: TimeSeries,
    pub rms_tracking_error: f64,
    pub rms_input: f64,
}

/// Runs `compensator` on the reference, plays the command through `plant`,
/// and reports tracking and input RMS.
pub fn evaluate_cascade(
    compensator: &CompensatorSpec,
    plant: &PlantSpec,
    h_d: &TimeSeries,
) -> Result<CompensationReport> {
    let u_cmd = match compensator {
        CompensatorSpec::Fonbw { params, memory, mode } => {
            compensate_fonbw_with(h_d, params, *memory, *mode)?
        }
        CompensatorSpec::Cbw { params } => compensate_cbw(h_d, params)?,
        CompensatorSpec::Zhu { params } => compensate_zhu(h_d, params)?,
    };
    let h_achieved = match plant {
        PlantSpec::Cbw(p) => simulate_cbw(p, &u_cmd)?,
        PlantSpec::CbwAux(p) => simulate_cbw_aux(p, &u_cmd)?,
        PlantSpec::Nbw(p) => simulate_nbw(p, &u_cmd)?,
        PlantSpec::Anbw { poly, params } => simulate_anbw(poly, params, &u_cmd)?,
        PlantSpec::Fonbw { params, memory } => simulate_fonbw(params, &u_cmd, *memory)?,
        PlantSpec::Zhu(p) => simulate_zhu(p, &u_cmd)?,
    };
    let zeros = TimeSeries::new(h_d.t0(), h_d.dt(), vec![0.0; h_d.len()])?;
    Ok(CompensationReport {
        rms_tracking_error: rms_error(h_d, &h_achieved)?,
        rms_input: rms_error(&u_cmd, &zeros)?,
        u_cmd,
        h_achieved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::gen_sine_offset;

    fn inverse_friendly_fonbw() -> FonbwParams {
        FonbwParams {
            poly: PolynomialGain::new(vec![0.18, -1.4e-4, -7.7e-8]).unwrap(),
            k_h: 2.0,
            rho: 0.02,
            sigma: 0.55,
            n: 1.5,
            lambda1: 0.85,
            lambda2: 0.95,
            hbar_init: 0.0,
        }
    }

    fn aux_cbw() -> CbwAuxParams {
        CbwAuxParams {
            k_a: 0.33,
            k_b: 0.45,
            d: 1.0,
            a: 0.7,
            beta: 0.6,
            gamma: 0.5,
            n: 1.0,
            h_init: 0.0,
        }
    }

    // Inverting the comparison model keeps its internal state integration
    // stable only while beta*|u| stays small: the delayed command slope
    // u[0]/dt enters the state rate directly, so the command scale, not dt,
    // sets the stiffness. This set is sized for command peaks near 200 V.
    fn mild_zhu() -> ZhuParams {
        ZhuParams {
            m0: 0.01,
            c0: 5.0,
            k0: 100.0,
            k1: 1.0,
            tau: 2.0,
            a: 0.01,
            beta: 0.002,
            gamma: 0.001,
            delta: 0.001,
            n: 1.0,
            x0: 0.0,
        }
    }

    #[test]
    fn zero_reference_produces_zero_commands() {
        let hd = TimeSeries::new(0.0, 1e-3, vec![0.0; 300]).unwrap();
        let u = compensate_fonbw(&hd, &inverse_friendly_fonbw()).unwrap();
        assert!(u.values().iter().all(|&v| v == 0.0));
        let u = compensate_cbw(&hd, &aux_cbw()).unwrap();
        assert!(u.values().iter().all(|&v| v == 0.0));
        let u = compensate_zhu(&hd, &mild_zhu()).unwrap();
        assert!(u.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gain_only_inverse_is_exact_division() {
        let mut p = inverse_friendly_fonbw();
        p.poly = PolynomialGain::linear(0.18).unwrap();
        p.k_h = 0.0;
        let hd = gen_sine_offset(5.0, 5.0, 0.4, 1e-3).unwrap();
        let u = compensate_fonbw(&hd, &p).unwrap();
        for (uk, hk) in u.values().iter().zip(hd.values()) {
            assert_eq!(*uk, hk / 0.18);
        }
        assert_eq!(u.unit(), Some("V"));
    }

    #[test]
    fn cbw_inverse_without_hysteresis_is_a_pure_gain() {
        let mut p = aux_cbw();
        p.k_b = 0.0;
        let hd = gen_sine_offset(5.0, 5.0, 0.4, 1e-3).unwrap();
        let u = compensate_cbw(&hd, &p).unwrap();
        for (uk, hk) in u.values().iter().zip(hd.values()) {
            assert_eq!(*uk, hk / p.k_a);
        }
    }

    #[test]
    fn zhu_inverse_reduces_to_the_exponential_gain() {
        let p = ZhuParams {
            m0: 0.0,
            c0: 0.0,
            k0: 1.0,
            k1: 2.0,
            tau: 0.5,
            a: 0.0,
            beta: 0.0,
            gamma: 0.0,
            delta: 0.0,
            n: 1.0,
            x0: 0.0,
        };
        let hd = gen_sine_offset(3.0, 2.0, 1.0, 1e-3).unwrap();
        let u = compensate_zhu(&hd, &p).unwrap();
        for (k, (uk, hk)) in u.values().iter().zip(hd.values()).enumerate() {
            let expect = p.tau * (hd.time(k) / p.tau).exp() / p.k1 * hk;
            assert_eq!(*uk, expect, "sample {k}");
        }
    }

    #[test]
    fn zero_gain_denominators_are_rejected() {
        let hd = gen_sine_offset(1.0, 1.0, 1.0, 1e-2).unwrap();
        let mut cbw = aux_cbw();
        cbw.k_a = 0.0;
        assert!(matches!(compensate_cbw(&hd, &cbw), Err(Error::InvalidArgument(_))));
        let mut zhu = mild_zhu();
        zhu.k1 = 0.0;
        assert!(matches!(compensate_zhu(&hd, &zhu), Err(Error::InvalidArgument(_))));
        let mut zhu = mild_zhu();
        zhu.tau = 0.0;
        assert!(compensate_zhu(&hd, &zhu).is_err());
    }

    #[test]
    fn loop_mode_bounds_are_enforced() {
        let hd = gen_sine_offset(1.0, 1.0, 1.0, 1e-2).unwrap();
        let p = inverse_friendly_fonbw();
        for iters in [0usize, 11] {
            let r = compensate_fonbw_with(&hd, &p, Memory::Unbounded, LoopMode::FixedPoint(iters));
            assert!(r.is_err(), "iters={iters}");
        }
        assert!(compensate_fonbw_with(&hd, &p, Memory::Unbounded, LoopMode::FixedPoint(3)).is_ok());
    }

    #[test]
    fn matched_cascade_tracks_the_reference() {
        let p = inverse_friendly_fonbw();
        let hd = gen_sine_offset(5.0, 5.0, 0.4, 1e-4).unwrap();
        let report = evaluate_cascade(
            &CompensatorSpec::Fonbw {
                params: p.clone(),
                memory: Memory::Unbounded,
                mode: LoopMode::Delay,
            },
            &PlantSpec::Fonbw { params: p, memory: Memory::Unbounded },
            &hd,
        )
        .unwrap();
        let range = hd.span();
        assert!(
            report.rms_tracking_error <= 0.01 * range,
            "tracking rms {} over range {range}",
            report.rms_tracking_error
        );
        assert!(report.rms_input > 0.0);
    }

    #[test]
    fn fixed_point_mode_tightens_the_delay_floor() {
        let p = inverse_friendly_fonbw();
        let hd = gen_sine_offset(5.0, 5.0, 0.4, 1e-3).unwrap();
        let plant = PlantSpec::Fonbw { params: p.clone(), memory: Memory::Unbounded };
        let delay = evaluate_cascade(
            &CompensatorSpec::Fonbw {
                params: p.clone(),
                memory: Memory::Unbounded,
                mode: LoopMode::Delay,
            },
            &plant,
            &hd,
        )
        .unwrap();
        let fixed = evaluate_cascade(
            &CompensatorSpec::Fonbw {
                params: p,
                memory: Memory::Unbounded,
                mode: LoopMode::FixedPoint(5),
            },
            &plant,
            &hd,
        )
        .unwrap();
        assert!(
            fixed.rms_tracking_error < delay.rms_tracking_error,
            "fixed-point {} vs delay {}",
            fixed.rms_tracking_error,
            delay.rms_tracking_error
        );
    }

    #[test]
    fn perfect_inverse_cascade_is_exact_to_rounding() {
        let comp = CompensatorSpec::Fonbw {
            params: FonbwParams {
                poly: PolynomialGain::linear(0.8).unwrap(),
                k_h: 0.0,
                rho: 1.0,
                sigma: 0.6,
                n: 1.0,
                lambda1: 0.9,
                lambda2: 0.7,
                hbar_init: 0.0,
            },
            memory: Memory::Unbounded,
            mode: LoopMode::Delay,
        };
        let plant = PlantSpec::Nbw(NbwParams {
            k_u: 0.8,
            k_h: 0.0,
            rho: 1.0,
            sigma: 0.6,
            n: 1.0,
            hbar_init: 0.0,
        });
        let hd = gen_sine_offset(5.0, 2.0, 1.0, 1e-3).unwrap();
        let report = evaluate_cascade(&comp, &plant, &hd).unwrap();
        assert!(report.rms_tracking_error <= 1e-12 * hd.span());
    }

    #[test]
    fn identified_time_constant_overflows_the_inverse_gain() {
        // tau ~ 2e-5 s makes e^{t/tau} pass the divergence guard within a
        // millisecond; the inverse is unusable beyond that horizon.
        let p = ZhuParams {
            m0: 0.1026,
            c0: 2.5820e2,
            k0: 1.5567e5,
            k1: 4.3915e-7,
            tau: 2.0408e-5,
            a: -0.0068,
            beta: 0.0457,
            gamma: -0.0255,
            delta: -0.0024,
            n: 1.0483,
            x0: 0.0,
        };
        let hd = gen_sine_offset(3.5e-7, 5.0, 0.4, 1e-5).unwrap();
        match compensate_zhu(&hd, &p) {
            Err(Error::Diverged { step }) => assert!(step > 0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn mild_zhu_cascade_stays_finite() {
        let p = mild_zhu();
        let hd = gen_sine_offset(0.2, 5.0, 0.4, 1e-4).unwrap();
        let report = evaluate_cascade(
            &CompensatorSpec::Zhu { params: p.clone() },
            &PlantSpec::Zhu(p),
            &hd,
        )
        .unwrap();
        assert!(report.rms_tracking_error.is_finite());
        assert!(report.rms_input.is_finite());
        let (lo, hi) = report.h_achieved.value_range();
        assert!(lo.is_finite() && hi.is_finite());
    }

    #[test]
    fn reported_input_rms_is_the_zero_reference_error() {
        let p = inverse_friendly_fonbw();
        let hd = gen_sine_offset(5.0, 5.0, 0.2, 1e-3).unwrap();
        let report = evaluate_cascade(
            &CompensatorSpec::Fonbw {
                params: p.clone(),
                memory: Memory::Unbounded,
                mode: LoopMode::Delay,
            },
            &PlantSpec::Fonbw { params: p, memory: Memory::Unbounded },
            &hd,
        )
        .unwrap();
        let zeros = TimeSeries::new(hd.t0(), hd.dt(), vec![0.0; hd.len()]).unwrap();
        assert_eq!(report.rms_input, rms_error(&report.u_cmd, &zeros).unwrap());
    }
}
