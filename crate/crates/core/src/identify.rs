//! Parameter identification by self-adaptive differential evolution
//! (DE/rand/1/bin with per-individual F and CR). The objective is the RMS
//! mismatch between measured and simulated output; candidates that make the
//! simulation diverge score a fixed penalty instead of aborting the search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fracdiff::Memory;
use crate::models::{
    simulate_anbw, simulate_cbw_aux, simulate_fonbw, simulate_nbw, simulate_zhu, CbwAuxParams,
    FonbwParams, NbwParams, PolynomialGain, ZhuParams,
};
use crate::signals::TimeSeries;

/// Objective assigned to candidates whose simulation diverges, fails to
/// converge, or violates a parameter precondition.
pub const PENALTY_OBJECTIVE: f64 = 1e9;

/// Which model family a parameter vector describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Cbw,
    Nbw,
    Anbw { order: usize },
    Fonbw,
    Zhu,
}

impl ModelKind {
    pub fn theta_dim(self) -> usize {
        match self {
            ModelKind::Cbw => 7,
            ModelKind::Nbw => 5,
            ModelKind::Anbw { order } => order + 4,
            ModelKind::Fonbw => 9,
            ModelKind::Zhu => 11,
        }
    }

    pub fn theta_names(self) -> Vec<String> {
        match self {
            ModelKind::Cbw => ["k_a", "k_b", "D", "A", "beta", "gamma", "n"]
                .map(String::from)
                .to_vec(),
            ModelKind::Nbw => ["k_u", "k_h", "rho", "sigma", "n"].map(String::from).to_vec(),
            ModelKind::Anbw { order } => {
                let mut names: Vec<String> = (1..=order).map(|i| format!("k_u{i}")).collect();
                names.extend(["k_h", "rho", "sigma", "n"].map(String::from));
                names
            }
            ModelKind::Fonbw => [
                "k_u1", "k_u2", "k_u3", "k_h", "rho", "sigma", "n", "lambda1", "lambda2",
            ]
            .map(String::from)
            .to_vec(),
            ModelKind::Zhu => [
                "m0", "c0", "k0", "k1", "tau", "A", "beta", "gamma", "delta", "n", "x0",
            ]
            .map(String::from)
            .to_vec(),
        }
    }
}

/// Measured input/output record to fit one model against.
#[derive(Debug, Clone)]
pub struct IdentificationProblem {
    pub model_kind: ModelKind,
    pub data_u: TimeSeries,
    pub data_h: TimeSeries,
    /// History window for the fractional model; ignored by the others.
    pub memory: Memory,
    pub theta_names: Vec<String>,
}

impl IdentificationProblem {
    pub fn new(model_kind: ModelKind, data_u: TimeSeries, data_h: TimeSeries) -> Self {
        IdentificationProblem {
            theta_names: model_kind.theta_names(),
            model_kind,
            data_u,
            data_h,
            memory: Memory::Unbounded,
        }
    }

    pub fn with_memory(mut self, memory: Memory) -> Self {
        self.memory = memory;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.memory.validate()?;
        if !self.data_u.same_grid(&self.data_h) {
            return Err(Error::invalid("data_u and data_h must share one sampling grid"));
        }
        Ok(())
    }
}

/// Differential-evolution settings. `bounds` holds one `[lo, hi]` pair per
/// parameter, in `theta_names` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    pub population_size: usize,
    pub max_generations: usize,
    pub bounds: Vec<[f64; 2]>,
    pub f_init: f64,
    pub cr_init: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub f_lo: f64,
    pub f_hi: f64,
    pub seed: u64,
    pub target_objective: Option<f64>,
}

impl DeConfig {
    pub fn new(population_size: usize, max_generations: usize, bounds: Vec<[f64; 2]>, seed: u64) -> Self {
        DeConfig {
            population_size,
            max_generations,
            bounds,
            f_init: 0.5,
            cr_init: 0.9,
            tau1: 0.1,
            tau2: 0.1,
            f_lo: 0.1,
            f_hi: 0.9,
            seed,
            target_objective: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size < 4 {
            return Err(Error::invalid("population must hold at least 4 individuals"));
        }
        if self.bounds.is_empty() {
            return Err(Error::invalid("bounds must not be empty"));
        }
        for (d, b) in self.bounds.iter().enumerate() {
            if !(b[0].is_finite() && b[1].is_finite() && b[0] < b[1]) {
                return Err(Error::invalid(format!(
                    "bounds[{d}] must satisfy lo < hi with finite values, got [{}, {}]",
                    b[0], b[1]
                )));
            }
        }
        if !(self.cr_init >= 0.0 && self.cr_init <= 1.0) {
            return Err(Error::invalid(format!("cr_init must lie in [0, 1], got {}", self.cr_init)));
        }
        if !(self.f_init.is_finite() && self.f_init > 0.0) {
            return Err(Error::invalid(format!("f_init must be positive, got {}", self.f_init)));
        }
        if !(self.f_lo > 0.0 && self.f_lo <= self.f_hi && self.f_hi.is_finite()) {
            return Err(Error::invalid(format!(
                "mutation-factor range must satisfy 0 < f_lo <= f_hi, got [{}, {}]",
                self.f_lo, self.f_hi
            )));
        }
        for (name, t) in [("tau1", self.tau1), ("tau2", self.tau2)] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1], got {t}")));
            }
        }
        Ok(())
    }
}

/// Outcome of one identification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationResult {
    pub best_theta: Vec<f64>,
    pub best_objective: f64,
    /// Best objective after initialization and after each generation.
    pub objective_trace: Vec<f64>,
    pub evaluations: usize,
    pub seed: u64,
}

/// Root-mean-square difference between two equally long series.
pub fn rms_error(a: &TimeSeries, b: &TimeSeries) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "series lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let mut sum = 0.0;
    for (&x, &y) in a.values().iter().zip(b.values()) {
        let e = x - y;
        sum += e * e;
    }
    Ok((sum / a.len() as f64).sqrt())
}

/// Simulates the model described by `theta` on the problem's input grid.
pub(crate) fn theta_to_series(
    kind: ModelKind,
    theta: &[f64],
    u: &TimeSeries,
    memory: Memory,
) -> Result<TimeSeries> {
    match kind {
        ModelKind::Cbw => {
            let p = CbwAuxParams {
                k_a: theta[0],
                k_b: theta[1],
                d: theta[2],
                a: theta[3],
                beta: theta[4],
                gamma: theta[5],
                n: theta[6],
                h_init: 0.0,
            };
            simulate_cbw_aux(&p, u)
        }
        ModelKind::Nbw => {
            let p = NbwParams {
                k_u: theta[0],
                k_h: theta[1],
                rho: theta[2],
                sigma: theta[3],
                n: theta[4],
                hbar_init: 0.0,
            };
            simulate_nbw(&p, u)
        }
        ModelKind::Anbw { order } => {
            let poly = PolynomialGain::new(theta[..order].to_vec())?;
            let p = NbwParams {
                k_u: 0.0,
                k_h: theta[order],
                rho: theta[order + 1],
                sigma: theta[order + 2],
                n: theta[order + 3],
                hbar_init: 0.0,
            };
            simulate_anbw(&poly, &p, u)
        }
        ModelKind::Fonbw => {
            let p = FonbwParams {
                poly: PolynomialGain::new(theta[..3].to_vec())?,
                k_h: theta[3],
                rho: theta[4],
                sigma: theta[5],
                n: theta[6],
                lambda1: theta[7],
                lambda2: theta[8],
                hbar_init: 0.0,
            };
            simulate_fonbw(&p, u, memory)
        }
        ModelKind::Zhu => {
            let p = ZhuParams {
                m0: theta[0],
                c0: theta[1],
                k0: theta[2],
                k1: theta[3],
                tau: theta[4],
                a: theta[5],
                beta: theta[6],
                gamma: theta[7],
                delta: theta[8],
                n: theta[9],
                x0: theta[10],
            };
            simulate_zhu(&p, u)
        }
    }
}

/// RMS objective of one candidate vector. Simulation failures (divergence,
/// solver stalls, rejected parameter values) score [`PENALTY_OBJECTIVE`];
/// only structural mistakes (wrong vector length, broken problem) error out.
pub fn evaluate_candidate(problem: &IdentificationProblem, theta: &[f64]) -> Result<f64> {
    problem.validate()?;
    let dim = problem.model_kind.theta_dim();
    if theta.len() != dim {
        return Err(Error::invalid(format!(
            "theta has {} entries, model needs {dim}",
            theta.len()
        )));
    }
    match theta_to_series(problem.model_kind, theta, &problem.data_u, problem.memory) {
        Ok(series) => {
            let rms = rms_error(&problem.data_h, &series)?;
            Ok(if rms.is_finite() { rms } else { PENALTY_OBJECTIVE })
        }
        Err(Error::InvalidArgument(_)) | Err(Error::Diverged { .. }) | Err(Error::SolverFailed { .. }) => {
            Ok(PENALTY_OBJECTIVE)
        }
        Err(other) => Err(other),
    }
}

/// DE/rand/1/bin with jDE self-adaptation. Deterministic for a given seed:
/// the draw order per candidate is fixed (F gate, CR gate, donor indices,
/// forced-crossover index, one gate per dimension).
pub fn identify(problem: &IdentificationProblem, cfg: &DeConfig) -> Result<IdentificationResult> {
    problem.validate()?;
    cfg.validate()?;
    let dim = problem.model_kind.theta_dim();
    if cfg.bounds.len() != dim {
        return Err(Error::invalid(format!(
            "bounds cover {} parameters, model needs {dim}",
            cfg.bounds.len()
        )));
    }

    let np = cfg.population_size;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pop: Vec<Vec<f64>> = Vec::with_capacity(np);
    for _ in 0..np {
        let theta: Vec<f64> = cfg
            .bounds
            .iter()
            .map(|b| b[0] + rng.random::<f64>() * (b[1] - b[0]))
            .collect();
        pop.push(theta);
    }
    let mut fitness = Vec::with_capacity(np);
    for theta in &pop {
        fitness.push(evaluate_candidate(problem, theta)?);
    }
    let mut evaluations = np;

    let mut f_param = vec![cfg.f_init; np];
    let mut cr_param = vec![cfg.cr_init; np];

    let mut best = 0usize;
    for i in 1..np {
        if fitness[i] < fitness[best] {
            best = i;
        }
    }
    let mut best_theta = pop[best].clone();
    let mut best_objective = fitness[best];
    let mut trace = vec![best_objective];

    let reached = |obj: f64| match cfg.target_objective {
        Some(t) if t.is_finite() => obj <= t,
        _ => false,
    };

    if !reached(best_objective) {
        'generations: for _ in 0..cfg.max_generations {
            for i in 0..np {
                let f_i = if rng.random::<f64>() < cfg.tau1 {
                    cfg.f_lo + rng.random::<f64>() * (cfg.f_hi - cfg.f_lo)
                } else {
                    f_param[i]
                };
                let cr_i = if rng.random::<f64>() < cfg.tau2 {
                    rng.random::<f64>()
                } else {
                    cr_param[i]
                };

                let mut draw_distinct = |taken: &[usize]| loop {
                    let r = rng.random_range(0..np);
                    if !taken.contains(&r) {
                        return r;
                    }
                };
                let r1 = draw_distinct(&[i]);
                let r2 = draw_distinct(&[i, r1]);
                let r3 = draw_distinct(&[i, r1, r2]);
                let j_rand = rng.random_range(0..dim);

                let mut trial = pop[i].clone();
                for d in 0..dim {
                    let gate = rng.random::<f64>();
                    if gate < cr_i || d == j_rand {
                        let v = pop[r1][d] + f_i * (pop[r2][d] - pop[r3][d]);
                        trial[d] = v.clamp(cfg.bounds[d][0], cfg.bounds[d][1]);
                    }
                }

                let obj = evaluate_candidate(problem, &trial)?;
                evaluations += 1;
                if obj <= fitness[i] {
                    pop[i] = trial;
                    fitness[i] = obj;
                    f_param[i] = f_i;
                    cr_param[i] = cr_i;
                    if obj < best_objective {
                        best_objective = obj;
                        best_theta = pop[i].clone();
                    }
                }
            }
            trace.push(best_objective);
            if reached(best_objective) {
                break 'generations;
            }
        }
    }

    Ok(IdentificationResult {
        best_theta,
        best_objective,
        objective_trace: trace,
        evaluations,
        seed: cfg.seed,
    })
}
