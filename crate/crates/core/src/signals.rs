//! Uniformly sampled time series and the excitation/reference waveform generators.

use crate::error::{Error, Result};

/// Default sampling step (100 us, i.e. 10 kHz).
pub const DEFAULT_DT: f64 = 1e-4;

/// A uniformly sampled real-valued signal.
///
/// Sample `k` corresponds to time `t0 + k * dt` exactly; no per-sample
/// timestamps are stored. The optional unit label is advisory metadata
/// only and never triggers conversions.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
    unit: Option<String>,
}

impl TimeSeries {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !t0.is_finite() {
            return Err(Error::invalid("t0 must be finite"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("dt must be positive and finite, got {dt}")));
        }
        if values.is_empty() {
            return Err(Error::invalid("a series needs at least one sample"));
        }
        Ok(TimeSeries { t0, dt, values, unit: None })
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = Some(unit.into());
        self
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn unit(&self) -> Option<&str> {
        self.unit.as_deref()
    }

    /// Time of sample `k`.
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.time(k))
    }

    /// (min, max) over all samples.
    pub fn value_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Peak-to-peak span of the samples.
    pub fn span(&self) -> f64 {
        let (lo, hi) = self.value_range();
        hi - lo
    }

    /// True when both series live on the same uniform grid.
    pub fn same_grid(&self, other: &TimeSeries) -> bool {
        self.len() == other.len()
            && (self.dt - other.dt).abs() <= 1e-12 * self.dt
            && (self.t0 - other.t0).abs() <= 1e-9
    }

    /// New series with the same grid carrying `values`.
    pub fn map_values(&self, values: Vec<f64>) -> Result<TimeSeries> {
        if values.len() != self.len() {
            return Err(Error::invalid("mapped values must keep the sample count"));
        }
        TimeSeries::new(self.t0, self.dt, values)
    }
}

fn validate_grid(duration: f64, dt: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(Error::invalid(format!("duration must be non-negative, got {duration}")));
    }
    // Truncate to the largest whole number of steps; the epsilon absorbs
    // decimal steps like 1e-4 that are not exactly representable.
    Ok((duration / dt + 1e-9).floor() as usize)
}

/// `a - a*cos(2*pi*f*t)`: offset sinusoid starting exactly at zero.
pub fn gen_sine_offset(amplitude: f64, frequency: f64, duration: f64, dt: f64) -> Result<TimeSeries> {
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(Error::invalid(format!("amplitude must be non-negative, got {amplitude}")));
    }
    if !(frequency.is_finite() && frequency > 0.0) {
        return Err(Error::invalid(format!("frequency must be positive, got {frequency}")));
    }
    let steps = validate_grid(duration, dt)?;
    if duration < dt {
        return Err(Error::invalid("duration must cover at least one step"));
    }
    let w = 2.0 * std::f64::consts::PI * frequency;
    let values = (0..=steps)
        .map(|k| {
            let t = k as f64 * dt;
            amplitude - amplitude * (w * t).cos()
        })
        .collect();
    TimeSeries::new(0.0, dt, values)
}

/// Variable-amplitude variable-frequency sweep:
/// `60*exp(-0.13t) * (cos(3*pi*t*exp(-0.09t) - 3.15) + 1)`.
///
/// Starts near zero and decays, exercising a wide band of amplitudes and
/// rates in one record; the default identification excitation.
pub fn gen_decaying_sweep(duration: f64, dt: f64) -> Result<TimeSeries> {
    let steps = validate_grid(duration, dt)?;
    let values = (0..=steps)
        .map(|k| {
            let t = k as f64 * dt;
            60.0 * (-0.13 * t).exp() * ((3.0 * std::f64::consts::PI * t * (-0.09 * t).exp() - 3.15).cos() + 1.0)
        })
        .collect();
    TimeSeries::new(0.0, dt, values)
}

/// Multi-frequency reference:
/// `4 - cos(2*pi*t) - cos(6*pi*t) - cos(10*pi*t) - cos(20*pi*t)`.
pub fn gen_multifreq(duration: f64, dt: f64) -> Result<TimeSeries> {
    let steps = validate_grid(duration, dt)?;
    let pi = std::f64::consts::PI;
    let values = (0..=steps)
        .map(|k| {
            let t = k as f64 * dt;
            4.0 - (2.0 * pi * t).cos() - (6.0 * pi * t).cos() - (10.0 * pi * t).cos() - (20.0 * pi * t).cos()
        })
        .collect();
    TimeSeries::new(0.0, dt, values)
}
