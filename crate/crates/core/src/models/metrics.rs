//! Scalar descriptors of a hysteresis loop: enclosed area, maximum branch
//! separation, and the vertical offset of the loop center. All three are
//! computed over the last full input cycle so start-up transients drop out.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::signals::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoopMetrics {
    /// Signed shoelace area of the (u, H) curve; positive when the loop is
    /// traversed counterclockwise.
    pub area: f64,
    /// Largest vertical distance between the ascending and descending
    /// branches at a common input value.
    pub max_width: f64,
    /// Mean output minus the midpoint of the output range; zero for loops
    /// symmetric about their center.
    pub center_offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopBranches {
    pub u_grid: Vec<f64>,
    pub ascending: Vec<f64>,
    pub descending: Vec<f64>,
}

const CLUSTER_GAP: usize = 4;

/// Finds the sample window of the last full input cycle, trough to trough.
/// Troughs are local minima inside the 5% band above the global minimum;
/// runs of near-coincident candidates collapse to their lowest sample.
fn last_cycle_window(uv: &[f64]) -> Result<(usize, usize)> {
    let m = uv.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in uv {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return Err(Error::invalid("input has no oscillation to segment"));
    }
    let threshold = lo + 0.05 * (hi - lo);

    let mut reps: Vec<usize> = Vec::new();
    let mut cluster_best: Option<usize> = None;
    let mut last_candidate = 0usize;
    for k in 0..m {
        let v = uv[k];
        if v > threshold {
            continue;
        }
        let left_ok = k == 0 || uv[k - 1] >= v;
        let right_ok = k == m - 1 || uv[k + 1] >= v;
        if !(left_ok && right_ok) {
            continue;
        }
        match cluster_best {
            Some(best) if k - last_candidate < CLUSTER_GAP => {
                if v < uv[best] {
                    cluster_best = Some(k);
                }
            }
            Some(best) => {
                reps.push(best);
                cluster_best = Some(k);
            }
            None => cluster_best = Some(k),
        }
        last_candidate = k;
    }
    if let Some(best) = cluster_best {
        reps.push(best);
    }
    if reps.len() < 2 {
        return Err(Error::invalid("need at least one full input period"));
    }
    Ok((reps[reps.len() - 2], reps[reps.len() - 1]))
}

/// (u, H) pairs of one branch sorted by u, with duplicate-u samples
/// collapsed so interpolation never divides by zero.
fn sorted_branch(uv: &[f64], hv: &[f64], from: usize, to: usize) -> Vec<(f64, f64)> {
    let mut pairs: Vec<(f64, f64)> = (from..=to).map(|k| (uv[k], hv[k])).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.dedup_by(|next, kept| next.0 == kept.0);
    pairs
}

/// Piecewise-linear value of a sorted branch at `g`, clamped to the
/// endpoints outside its u range.
fn interp_at(pairs: &[(f64, f64)], g: f64) -> f64 {
    let last = pairs.len() - 1;
    if g <= pairs[0].0 {
        return pairs[0].1;
    }
    if g >= pairs[last].0 {
        return pairs[last].1;
    }
    let mut j = pairs.partition_point(|p| p.0 < g);
    if j == 0 {
        j = 1;
    }
    let (u0, h0) = pairs[j - 1];
    let (u1, h1) = pairs[j];
    h0 + (g - u0) / (u1 - u0) * (h1 - h0)
}

fn check_pair(u: &TimeSeries, h: &TimeSeries) -> Result<()> {
    if !u.same_grid(h) {
        return Err(Error::invalid("input and output must share one sampling grid"));
    }
    Ok(())
}

fn split_at_peak(uv: &[f64], i0: usize, i1: usize) -> usize {
    let mut imax = i0;
    for k in i0..=i1 {
        if uv[k] > uv[imax] {
            imax = k;
        }
    }
    imax
}

/// Ascending and descending branch outputs of the last full cycle,
/// resampled onto `u_grid` by sorted linear interpolation.
pub fn loop_branches(u: &TimeSeries, h: &TimeSeries, u_grid: &[f64]) -> Result<LoopBranches> {
    check_pair(u, h)?;
    let uv = u.values();
    let hv = h.values();
    let (i0, i1) = last_cycle_window(uv)?;
    let imax = split_at_peak(uv, i0, i1);
    let asc = sorted_branch(uv, hv, i0, imax);
    let desc = sorted_branch(uv, hv, imax, i1);
    Ok(LoopBranches {
        u_grid: u_grid.to_vec(),
        ascending: u_grid.iter().map(|&g| interp_at(&asc, g)).collect(),
        descending: u_grid.iter().map(|&g| interp_at(&desc, g)).collect(),
    })
}

/// Area, width, and center offset of the last full (u, H) cycle.
pub fn loop_metrics(u: &TimeSeries, h: &TimeSeries) -> Result<LoopMetrics> {
    check_pair(u, h)?;
    let uv = u.values();
    let hv = h.values();
    let (i0, i1) = last_cycle_window(uv)?;

    let mut twice_area = 0.0;
    for k in i0..i1 {
        twice_area += uv[k] * hv[k + 1] - uv[k + 1] * hv[k];
    }
    twice_area += uv[i1] * hv[i0] - uv[i0] * hv[i1];
    let area = 0.5 * twice_area;

    let imax = split_at_peak(uv, i0, i1);
    let asc = sorted_branch(uv, hv, i0, imax);
    let desc = sorted_branch(uv, hv, imax, i1);
    let lo = asc[0].0.max(desc[0].0);
    let hi = asc[asc.len() - 1].0.min(desc[desc.len() - 1].0);
    let mut max_width = 0.0f64;
    if hi > lo {
        const PROBES: usize = 512;
        for i in 0..PROBES {
            let g = lo + (hi - lo) * i as f64 / (PROBES - 1) as f64;
            let w = (interp_at(&asc, g) - interp_at(&desc, g)).abs();
            max_width = max_width.max(w);
        }
    }

    let mut sum = 0.0;
    let mut h_lo = f64::INFINITY;
    let mut h_hi = f64::NEG_INFINITY;
    for &v in &hv[i0..i1] {
        sum += v;
        h_lo = h_lo.min(v);
        h_hi = h_hi.max(v);
    }
    let mean = sum / (i1 - i0) as f64;
    let center_offset = mean - 0.5 * (h_lo + h_hi);

    Ok(LoopMetrics { area, max_width, center_offset })
}
