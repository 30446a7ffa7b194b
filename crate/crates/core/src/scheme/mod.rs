//! Non-adaptive searching procedure: hypothesis grid, random query
//! codebook, and maximum information-density decoding over trajectory
//! codewords.
//!
//! The codebook assigns a bit to every (time, location cell) pair. A
//! hypothesis `(ŝ, v̂)` induces its codeword by reading, at each time, the bit
//! of the cell its representative trajectory occupies. The decoder returns
//! the hypothesis whose codeword maximizes the empirical information density
//! against the noisy answers, using the realized state `f(|A_t|)` of each
//! query.

mod codebook;
mod grid;

pub use codebook::{Codebook, CodewordTable};
pub use grid::{cell_of, HypothesisGrid, DEFAULT_BUDGET};

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{state_of_measure, ChannelSpec, TransitionMatrix};
use crate::error::{Error, Result};
use crate::info::InfoDensityTable;
use crate::motion::{unwrapped_position, TargetState};

/// Per-symbol decoding metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// `ι_{p,q_t}(x; y)`.
    InfoDensity,
    /// `log W_{q_t}(y | x)`.
    LogLikelihood,
}

/// Decoder output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decoded {
    pub index: usize,
    pub estimate: TargetState,
    pub score: f64,
}

/// Outcome of one episode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub index: usize,
    pub s_hat: Vec<f64>,
    pub v_hat: Vec<f64>,
    pub score: f64,
    /// Largest unwrapped error over dimensions and `t ∈ [0, n]`.
    pub max_error: f64,
    pub excess: bool,
    pub x: Vec<u8>,
    pub y: Vec<u8>,
}

/// Largest `|(ŝ_i + t v̂_i) - (s_i + t v_i)|` over dimensions and
/// `t ∈ [0, n]`. The error is affine in `t`, so the endpoints suffice.
pub fn max_unwrapped_error(estimate: &TargetState, truth: &TargetState, n: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..truth.dim() {
        for t in [0.0, n as f64] {
            let e = unwrapped_position(estimate.location()[i], estimate.velocity()[i], t)
                - unwrapped_position(truth.location()[i], truth.velocity()[i], t);
            worst = worst.max(e.abs());
        }
    }
    worst
}

/// A ready-to-run procedure: grid, codebook, codewords and per-query states.
#[derive(Debug, Clone)]
pub struct Scheme {
    channel: ChannelSpec,
    grid: HypothesisGrid,
    codebook: Codebook,
    table: CodewordTable,
    measures: Vec<f64>,
    states: Vec<f64>,
    transitions: Vec<TransitionMatrix>,
    densities: Vec<InfoDensityTable>,
}

impl Scheme {
    pub fn new(channel: ChannelSpec, grid: HypothesisGrid, codebook: Codebook) -> Result<Self> {
        if codebook.n() != grid.n() || codebook.cells() != grid.cells() {
            return Err(Error::InvalidParameter(format!(
                "codebook is {}x{}, grid needs {}x{}",
                codebook.n(),
                codebook.cells(),
                grid.n(),
                grid.cells()
            )));
        }
        let p = codebook.p();
        let ones = codebook.ones_per_query();
        let mut memo: HashMap<usize, (f64, f64, TransitionMatrix, InfoDensityTable)> = HashMap::new();
        let mut measures = Vec::with_capacity(grid.n());
        let mut states = Vec::with_capacity(grid.n());
        let mut transitions = Vec::with_capacity(grid.n());
        let mut densities = Vec::with_capacity(grid.n());
        for k in ones {
            let entry = match memo.get(&k) {
                Some(e) => *e,
                None => {
                    let measure = k as f64 / grid.cells() as f64;
                    let q = state_of_measure(channel.size_map(), measure)?;
                    let e = (
                        measure,
                        q,
                        channel.transition_matrix(q)?,
                        InfoDensityTable::new(&channel, p, q)?,
                    );
                    memo.insert(k, e);
                    e
                }
            };
            measures.push(entry.0);
            states.push(entry.1);
            transitions.push(entry.2);
            densities.push(entry.3);
        }
        let table = CodewordTable::build(&grid, &codebook);
        Ok(Scheme {
            channel,
            grid,
            codebook,
            table,
            measures,
            states,
            transitions,
            densities,
        })
    }

    /// Plans the grid, draws the codebook and builds the scheme.
    pub fn plan(
        channel: ChannelSpec,
        delta: f64,
        n: usize,
        d: usize,
        v_max: f64,
        p: f64,
        seed: u64,
        budget: u64,
    ) -> Result<Self> {
        let grid = HypothesisGrid::plan(delta, n, d, v_max, budget)?;
        let codebook = Codebook::draw(&grid, p, seed)?;
        Scheme::new(channel, grid, codebook)
    }

    pub fn channel(&self) -> &ChannelSpec {
        &self.channel
    }

    pub fn grid(&self) -> &HypothesisGrid {
        &self.grid
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn codewords(&self) -> &CodewordTable {
        &self.table
    }

    /// Realized query measures `|A_t|`.
    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    /// Realized channel states `f(|A_t|)`.
    pub fn states(&self) -> &[f64] {
        &self.states
    }

    fn columns(&self, y: &[u8], metric: Metric) -> Result<Vec<[f64; 2]>> {
        if y.len() != self.grid.n() {
            return Err(Error::LengthMismatch {
                expected: self.grid.n(),
                got: y.len(),
            });
        }
        y.iter()
            .enumerate()
            .map(|(t, &yt)| match metric {
                Metric::InfoDensity => self.densities[t].column(yt),
                Metric::LogLikelihood => {
                    let w = &self.transitions[t];
                    Ok([w.log_prob(0, yt), w.log_prob(1, yt)])
                }
            })
            .collect()
    }

    #[inline]
    fn score_of(&self, j: usize, columns: &[[f64; 2]]) -> f64 {
        let words = self.table.packed(j);
        let mut s = 0.0;
        for (t, col) in columns.iter().enumerate() {
            let bit = (words[t / 64] >> (t % 64)) & 1;
            s += col[bit as usize];
        }
        s
    }

    /// Scores of every hypothesis under `metric`.
    pub fn scores(&self, y: &[u8], metric: Metric) -> Result<Vec<f64>> {
        let columns = self.columns(y, metric)?;
        Ok((0..self.table.hypotheses())
            .into_par_iter()
            .map(|j| self.score_of(j, &columns))
            .collect())
    }

    /// Argmax decoding under `metric`; ties go to the smallest index.
    pub fn decode_with(&self, y: &[u8], metric: Metric) -> Result<Decoded> {
        let columns = self.columns(y, metric)?;
        const CHUNK: usize = 4096;
        let j_total = self.table.hypotheses();
        let (score, index) = (0..j_total.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut best = (f64::NEG_INFINITY, usize::MAX);
                for j in c * CHUNK..((c + 1) * CHUNK).min(j_total) {
                    let s = self.score_of(j, &columns);
                    if s > best.0 || best.1 == usize::MAX {
                        best = (s, j);
                    }
                }
                best
            })
            .reduce(
                || (f64::NEG_INFINITY, usize::MAX),
                |a, b| {
                    if a.1 == usize::MAX {
                        b
                    } else if b.1 == usize::MAX {
                        a
                    } else if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                        b
                    } else {
                        a
                    }
                },
            );
        Ok(Decoded {
            index,
            estimate: self.grid.representative(index),
            score,
        })
    }

    /// Maximum empirical information density decoding.
    pub fn decode(&self, y: &[u8]) -> Result<Decoded> {
        self.decode_with(y, Metric::InfoDensity)
    }

    /// Noiseless answers `x_t`, `t = 1..n`, for a target.
    pub fn answers(&self, truth: &TargetState) -> Result<Vec<u8>> {
        (1..=self.grid.n())
            .map(|t| self.codebook.oracle_answer(&self.grid, truth, t))
            .collect()
    }

    /// Poses all `n` queries, passes the answers through the channel and decodes.
    pub fn run_episode<R: Rng + ?Sized>(&self, truth: &TargetState, rng: &mut R) -> Result<TrialResult> {
        if truth.dim() != self.grid.d() {
            return Err(Error::LengthMismatch {
                expected: self.grid.d(),
                got: truth.dim(),
            });
        }
        let x = self.answers(truth)?;
        let y: Vec<u8> = x
            .iter()
            .zip(&self.transitions)
            .map(|(&xt, w)| w.sample(xt, rng))
            .collect();
        let decoded = self.decode(&y)?;
        let max_error = max_unwrapped_error(&decoded.estimate, truth, self.grid.n());
        Ok(TrialResult {
            index: decoded.index,
            s_hat: decoded.estimate.location().to_vec(),
            v_hat: decoded.estimate.velocity().to_vec(),
            score: decoded.score,
            max_error,
            excess: max_error > self.grid.delta_target(),
            x,
            y,
        })
    }
}

/// One-shot decoder over an explicit codebook and state sequence.
///
/// Builds the codeword table on every call; [`Scheme`] amortizes it.
pub fn decode(
    channel: &ChannelSpec,
    codebook: &Codebook,
    grid: &HypothesisGrid,
    y: &[u8],
    q_seq: &[f64],
    p: f64,
) -> Result<Decoded> {
    let n = grid.n();
    for len in [y.len(), q_seq.len()] {
        if len != n {
            return Err(Error::LengthMismatch { expected: n, got: len });
        }
    }
    let table = CodewordTable::build(grid, codebook);
    let columns = q_seq
        .iter()
        .zip(y)
        .map(|(&q, &yt)| InfoDensityTable::new(channel, p, q)?.column(yt))
        .collect::<Result<Vec<_>>>()?;
    let mut best = (f64::NEG_INFINITY, 0usize);
    for j in 0..table.hypotheses() {
        let cw = table.codeword(j);
        let s: f64 = cw.iter().zip(&columns).map(|(&b, c)| c[b as usize]).sum();
        if j == 0 || s > best.0 {
            best = (s, j);
        }
    }
    Ok(Decoded {
        index: best.1,
        estimate: grid.representative(best.1),
        score: best.0,
    })
}
