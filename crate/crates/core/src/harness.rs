//! Seeded Monte Carlo estimation of the excess-resolution probability.
//!
//! Every trial draws from its own ChaCha8 stream seeded by
//! `derive_seed(master, delta_index, trial_index)`, so results do not depend
//! on the number of worker threads or on execution order. One codebook is
//! drawn per delta (the procedure is fixed before the target is), unless the
//! plan asks for a fresh codebook per trial.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::info::{CapacityOptions, ChannelStats};
use crate::limits::{excess_prob_approx_log, velocity_regime, LogCoefficient};
use crate::motion::TargetState;
use crate::normal::gaussian_icdf;
use crate::scheme::{Codebook, HypothesisGrid, Scheme, DEFAULT_BUDGET};

/// Distribution of the target's initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Prior {
    /// `s ~ U[0,1]^d`, `v ~ U[-v_max, v_max]^d`.
    UniformProduct,
    /// Deterministic `points^(2d)` lattice over location and velocity,
    /// endpoints included; trials cycle through the lattice.
    WorstCaseGrid { points: usize },
    FixedState { state: TargetState },
    /// Uniformly random hypothesis representative.
    Representative,
}

impl Prior {
    pub fn label(&self) -> String {
        match self {
            Prior::UniformProduct => "uniform-product".into(),
            Prior::WorstCaseGrid { points } => format!("worst-case-grid({points})"),
            Prior::FixedState { .. } => "fixed-state".into(),
            Prior::Representative => "representative".into(),
        }
    }
}

/// SplitMix64 finalizer.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the stream for `(master, delta_index, trial_index)`.
pub fn derive_seed(master: u64, delta_index: u64, trial_index: u64) -> u64 {
    mix(mix(mix(master) ^ delta_index) ^ trial_index.rotate_left(17))
}

const CODEBOOK_STREAM: u64 = u64::MAX;

/// Seed of the shared codebook drawn for delta number `delta_index`.
pub fn codebook_seed(master: u64, delta_index: u64) -> u64 {
    derive_seed(master, delta_index, CODEBOOK_STREAM)
}

/// Lattice of `points^(2d)` start states, last coordinate fastest.
///
/// Coordinates are `s ∈ {0, 1/(G-1), …, 1}` per dimension, then
/// `v ∈ {-v_max, …, v_max}` per dimension.
pub fn lattice_states(points: usize, d: usize, v_max: f64) -> Result<Vec<TargetState>> {
    if points == 0 || d == 0 {
        return Err(Error::InvalidParameter(
            "lattice needs at least one point and one dimension".into(),
        ));
    }
    let axis = |g: usize| {
        if points == 1 {
            0.5
        } else {
            g as f64 / (points - 1) as f64
        }
    };
    let total = points
        .checked_pow(2 * d as u32)
        .ok_or_else(|| Error::InvalidParameter("lattice too large".into()))?;
    (0..total)
        .map(|mut idx| {
            let mut coords = vec![0usize; 2 * d];
            for c in coords.iter_mut().rev() {
                *c = idx % points;
                idx /= points;
            }
            let s = coords[..d].iter().map(|&g| axis(g)).collect();
            let v = coords[d..]
                .iter()
                .map(|&g| if v_max == 0.0 { 0.0 } else { v_max * (2.0 * axis(g) - 1.0) })
                .collect();
            TargetState::new(s, v, v_max)
        })
        .collect()
}

/// Draws an initial state. Lattice priors use `trial` to pick their state;
/// the representative prior needs the grid.
pub fn sample_initial<R: Rng + ?Sized>(
    prior: &Prior,
    d: usize,
    v_max: f64,
    grid: Option<&HypothesisGrid>,
    trial: usize,
    rng: &mut R,
) -> Result<TargetState> {
    match prior {
        Prior::UniformProduct => {
            let s = (0..d).map(|_| rng.gen::<f64>()).collect();
            let v = (0..d)
                .map(|_| v_max * (2.0 * rng.gen::<f64>() - 1.0))
                .collect();
            TargetState::new(s, v, v_max)
        }
        Prior::WorstCaseGrid { points } => {
            let states = lattice_states(*points, d, v_max)?;
            Ok(states[trial % states.len()].clone())
        }
        Prior::FixedState { state } => {
            if state.dim() != d {
                return Err(Error::LengthMismatch {
                    expected: d,
                    got: state.dim(),
                });
            }
            Ok(state.clone())
        }
        Prior::Representative => {
            let grid = grid.ok_or_else(|| {
                Error::InvalidParameter("representative prior needs a hypothesis grid".into())
            })?;
            Ok(grid.representative(rng.gen_range(0..grid.hypotheses())))
        }
    }
}

/// Wilson score interval for `k` successes in `trials` at confidence `level`.
pub fn wilson_ci(k: u64, trials: u64, level: f64) -> Result<(f64, f64)> {
    if trials == 0 || k > trials {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= k <= N and N >= 1, got k = {k}, N = {trials}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain("level", level, "(0, 1)"));
    }
    let z = gaussian_icdf(0.5 + level / 2.0)?;
    let n = trials as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k == trials { 1.0 } else { (center + half).min(1.0) };
    Ok((lo.min(p), hi.max(p)))
}

/// What to simulate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub channel: ChannelSpec,
    pub n: usize,
    pub d: usize,
    pub v_max: f64,
    pub deltas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub prior: Prior,
    /// Codebook bias; defaults to the smallest capacity-achieving input.
    pub p: Option<f64>,
    pub budget: u64,
    pub fresh_codebook_per_trial: bool,
    pub level: f64,
}

impl ExperimentPlan {
    pub fn new(channel: ChannelSpec, n: usize, d: usize, v_max: f64, deltas: Vec<f64>) -> Self {
        ExperimentPlan {
            channel,
            n,
            d,
            v_max,
            deltas,
            trials: 2000,
            seed: 0,
            prior: Prior::UniformProduct,
            p: None,
            budget: DEFAULT_BUDGET,
            fresh_codebook_per_trial: false,
            level: 0.95,
        }
    }

    /// Deltas from decay rates: `δ = exp(-rate · n)`.
    pub fn deltas_from_rates(n: usize, rates: &[f64]) -> Vec<f64> {
        rates.iter().map(|r| (-r * n as f64).exp()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.n == 0 || self.d == 0 {
            return Err(Error::InvalidParameter("n and d must be at least 1".into()));
        }
        if self.deltas.is_empty() {
            return Err(Error::InvalidParameter("no deltas to simulate".into()));
        }
        if let Some(&bad) = self.deltas.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::domain("delta", bad, "(0, 1)"));
        }
        if let Some(p) = self.p {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::domain("p", p, "(0, 1]"));
            }
        }
        Ok(())
    }
}

/// Aggregated excess-resolution estimate for one delta.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub delta: f64,
    /// `-log(delta) / n`, nats per query.
    pub rate: f64,
    pub trials: u64,
    pub excess: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Gaussian approximation at the same `(n, d, delta)`.
    pub eps_hat: f64,
    /// Start states the estimate maximizes over (1 unless a lattice prior).
    pub start_states: usize,
    pub hypotheses: usize,
    pub prior: String,
    pub caveat: String,
}

/// A [`SummaryRow`] with its gap to the Gaussian approximation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryComparison {
    pub row: SummaryRow,
    pub gap: f64,
}

/// Runs the plan and returns one row per delta, in plan order.
pub fn estimate_excess_prob(plan: &ExperimentPlan) -> Result<Vec<SummaryRow>> {
    let stats = ChannelStats::compute(&plan.channel, CapacityOptions::default())?;
    estimate_with_stats(plan, &stats)
}

/// [`estimate_excess_prob`] with precomputed channel statistics.
pub fn estimate_with_stats(plan: &ExperimentPlan, stats: &ChannelStats) -> Result<Vec<SummaryRow>> {
    plan.validate()?;
    let p = match plan.p {
        Some(p) => p,
        None => stats.p_star()?,
    };
    let regime = velocity_regime(plan.n, plan.v_max)?;
    plan.deltas
        .iter()
        .enumerate()
        .map(|(di, &delta)| {
            simulate_delta(plan, stats, p, di as u64, delta)
                .map(|mut row| {
                    row.caveat = regime.caveat().to_string();
                    row
                })
                .map_err(|e| e.context(format!("delta[{di}] = {delta}")))
        })
        .collect()
}

fn simulate_delta(
    plan: &ExperimentPlan,
    stats: &ChannelStats,
    p: f64,
    di: u64,
    delta: f64,
) -> Result<SummaryRow> {
    let grid = HypothesisGrid::plan(delta, plan.n, plan.d, plan.v_max, plan.budget)?;
    let shared = if plan.fresh_codebook_per_trial {
        None
    } else {
        let book = Codebook::draw(&grid, p, codebook_seed(plan.seed, di))?;
        Some(Scheme::new(plan.channel, grid.clone(), book)?)
    };
    let start_states = match &plan.prior {
        Prior::WorstCaseGrid { points } => lattice_states(*points, plan.d, plan.v_max)?.len(),
        _ => 1,
    };

    let outcomes: Vec<(usize, bool)> = (0..plan.trials)
        .into_par_iter()
        .map(|ti| {
            let seed = derive_seed(plan.seed, di, ti as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let truth = sample_initial(&plan.prior, plan.d, plan.v_max, Some(&grid), ti, &mut rng)?;
            let fresh;
            let scheme = match &shared {
                Some(s) => s,
                None => {
                    let book = Codebook::draw(&grid, p, mix(seed ^ CODEBOOK_STREAM))?;
                    fresh = Scheme::new(plan.channel, grid.clone(), book)?;
                    &fresh
                }
            };
            let r = scheme.run_episode(&truth, &mut rng)?;
            Ok((ti % start_states, r.excess))
        })
        .collect::<Result<_>>()?;

    let mut counts = vec![(0u64, 0u64); start_states];
    for (state, excess) in outcomes {
        counts[state].0 += 1;
        counts[state].1 += u64::from(excess);
    }
    // the worst start state approximates the supremum over priors
    let (trials, excess) = counts
        .iter()
        .copied()
        .filter(|c| c.0 > 0)
        .fold((0u64, 0u64), |best, c| {
            let better = best.0 == 0 || (c.1 as f64 / c.0 as f64) > (best.1 as f64 / best.0 as f64);
            if better { c } else { best }
        });
    let p_hat = excess as f64 / trials as f64;
    let (ci_low, ci_high) = wilson_ci(excess, trials, plan.level)?;
    let eps_hat = excess_prob_approx_log(plan.n, plan.d, delta.ln(), stats, LogCoefficient::TwoD)?;
    Ok(SummaryRow {
        delta,
        rate: -delta.ln() / plan.n as f64,
        trials,
        excess,
        p_hat,
        ci_low,
        ci_high,
        eps_hat,
        start_states,
        hypotheses: grid.hypotheses(),
        prior: plan.prior.label(),
        caveat: String::new(),
    })
}

/// Runs the plan and joins each row with its Gaussian prediction.
pub fn compare_with_theory(plan: &ExperimentPlan) -> Result<Vec<TheoryComparison>> {
    Ok(estimate_excess_prob(plan)?
        .into_iter()
        .map(|row| TheoryComparison {
            gap: (row.p_hat - row.eps_hat).abs(),
            row,
        })
        .collect())
}
