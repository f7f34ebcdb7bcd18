//! Grünwald-Letnikov fractional derivatives on uniform grids.
//!
//! The derivative of order `lambda` at sample `k` is
//! `dt^-lambda * sum_{j=0..min(k,memory)} w_j * f(k-j)` with binomially
//! derived weights `w_j`. History before the first sample is taken as zero,
//! so inputs should start at (or near) zero.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::signals::TimeSeries;

/// History window for the GL sums: the full record, or the most recent `L`
/// samples (short-memory principle).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Memory {
    #[default]
    Unbounded,
    Truncated(usize),
}

impl Memory {
    pub(crate) fn validate(self) -> Result<()> {
        match self {
            Memory::Truncated(0) => Err(Error::invalid("memory window must be at least 1")),
            _ => Ok(()),
        }
    }

    /// Number of lagged samples usable at step `k`.
    pub(crate) fn window(self, k: usize) -> usize {
        match self {
            Memory::Unbounded => k,
            Memory::Truncated(l) => k.min(l),
        }
    }

    /// A window covering the whole record is the unbounded sum; collapsing
    /// the two keeps their results identical down to the last bit.
    pub(crate) fn normalize(self, len: usize) -> Memory {
        match self {
            Memory::Truncated(l) if l + 1 >= len => Memory::Unbounded,
            m => m,
        }
    }
}

impl std::fmt::Display for Memory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Memory::Unbounded => f.write_str("unbounded"),
            Memory::Truncated(l) => write!(f, "{l}"),
        }
    }
}

impl std::str::FromStr for Memory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Memory> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("unbounded") {
            return Ok(Memory::Unbounded);
        }
        let l: usize = s
            .parse()
            .map_err(|_| Error::invalid(format!("memory must be `unbounded` or a sample count, got `{s}`")))?;
        let m = Memory::Truncated(l);
        m.validate()?;
        Ok(m)
    }
}

fn validate_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::invalid(format!(
            "fractional order must lie in (0, 1], got {lambda}"
        )));
    }
    Ok(())
}

/// Precomputed GL weights `w_0..w_p` for one order.
#[derive(Debug, Clone, PartialEq)]
pub struct GlWeightTable {
    lambda: f64,
    weights: Vec<f64>,
}

impl GlWeightTable {
    pub fn new(lambda: f64, p: usize) -> Result<Self> {
        validate_lambda(lambda)?;
        let mut weights = Vec::with_capacity(p + 1);
        weights.push(1.0);
        for j in 1..=p {
            let prev = weights[j - 1];
            weights.push((1.0 - (lambda + 1.0) / j as f64) * prev);
        }
        Ok(GlWeightTable { lambda, weights })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Lagged GL sum `sum_{i=1..min(k,memory)} w_i * h[k-i]`; the current
    /// sample is excluded, which is what a semi-implicit step needs.
    pub fn history_sum(&self, h: &[f64], k: usize, memory: Memory) -> f64 {
        let m = memory.window(k).min(self.weights.len().saturating_sub(1));
        let mut s = 0.0;
        for i in 1..=m {
            s += self.weights[i] * h[k - i];
        }
        s
    }
}

/// Builds the weight table for `lambda` up to index `p`.
pub fn gl_weights(lambda: f64, p: usize) -> Result<GlWeightTable> {
    GlWeightTable::new(lambda, p)
}

/// Lagged GL sum over the first `k` samples of `h` (see
/// [`GlWeightTable::history_sum`]). `h` must hold at least `k` samples.
pub fn gl_history_sum(h: &[f64], lambda: f64, k: usize, memory: Memory) -> Result<f64> {
    memory.validate()?;
    if h.len() < k {
        return Err(Error::invalid(format!(
            "history sum at step {k} needs {k} samples, got {}",
            h.len()
        )));
    }
    let table = GlWeightTable::new(lambda, memory.window(k))?;
    Ok(table.history_sum(h, k, memory))
}

/// Dot product with four independent accumulators; the fixed association
/// order keeps results reproducible while still vectorizing.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (mut s0, mut s1, mut s2, mut s3) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut i = 0;
    while i + 4 <= n {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
        i += 4;
    }
    let mut s = (s0 + s2) + (s1 + s3);
    while i < n {
        s += a[i] * b[i];
        i += 1;
    }
    s
}

/// First `x.len()` samples of the causal convolution `w * x` via FFT.
fn causal_convolve_fft(w: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let size = (2 * n - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(size);
    let ifft = planner.plan_fft_inverse(size);

    let mut wf: Vec<Complex<f64>> = w.iter().map(|&v| Complex::new(v, 0.0)).collect();
    wf.resize(size, Complex::new(0.0, 0.0));
    let mut xf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    xf.resize(size, Complex::new(0.0, 0.0));

    fft.process(&mut wf);
    fft.process(&mut xf);
    for (a, b) in wf.iter_mut().zip(&xf) {
        *a *= b;
    }
    ifft.process(&mut wf);

    let scale = 1.0 / size as f64;
    wf[..n].iter().map(|c| c.re * scale).collect()
}

const FFT_THRESHOLD: usize = 2048;

pub(crate) fn scale_factor(dt: f64, lambda: f64) -> f64 {
    if lambda == 1.0 {
        1.0 / dt
    } else {
        dt.powf(-lambda)
    }
}

/// GL fractional derivative of a sampled signal on its own grid.
pub fn gl_derivative(f: &TimeSeries, lambda: f64, memory: Memory) -> Result<TimeSeries> {
    validate_lambda(lambda)?;
    memory.validate()?;
    let n = f.len();
    let mem = memory.normalize(n);
    let scale = scale_factor(f.dt(), lambda);
    let x = f.values();

    let raw = match mem {
        Memory::Unbounded if n >= FFT_THRESHOLD => {
            let table = GlWeightTable::new(lambda, n - 1)?;
            causal_convolve_fft(table.weights(), x)
        }
        _ => {
            let window = match mem {
                Memory::Unbounded => n - 1,
                Memory::Truncated(l) => l,
            };
            let table = GlWeightTable::new(lambda, window)?;
            let w = table.weights();
            // Reversed copy of the input so each output sample is a
            // contiguous forward dot product.
            let mut xrev = vec![0.0; n];
            for (i, &v) in x.iter().enumerate() {
                xrev[n - 1 - i] = v;
            }
            (0..n)
                .map(|k| {
                    let m = mem.window(k);
                    dot(&w[..=m], &xrev[n - 1 - k..n - 1 - k + m + 1])
                })
                .collect()
        }
    };

    f.map_values(raw.into_iter().map(|v| v * scale).collect())
}
