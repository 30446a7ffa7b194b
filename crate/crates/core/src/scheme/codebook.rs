use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::grid::{cell_index, HypothesisGrid};
use crate::error::{Error, Result};
use crate::motion::{locate_scalar, locate_vector, TargetState};

/// Random query design: one Bernoulli(`p`) bit per (time, location cell).
///
/// The query at time `t` is the union of cells whose bit is set. Rows are
/// packed 64 cells per word; bits are drawn time-major from ChaCha8 seeded
/// with `seed`, so the codebook is reproducible from `(n, cells, p, seed)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Codebook {
    n: usize,
    cells: usize,
    p: f64,
    seed: u64,
    #[serde(skip)]
    stride: usize,
    #[serde(skip)]
    rows: Vec<u64>,
}

impl Codebook {
    pub fn draw(grid: &HypothesisGrid, p: f64, seed: u64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::domain("p", p, "(0, 1]"));
        }
        let (n, cells) = (grid.n(), grid.cells());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut book = Codebook::zeros(n, cells, p, seed);
        for t in 0..n {
            for c in 0..cells {
                if rng.gen::<f64>() < p {
                    book.rows[t * book.stride + c / 64] |= 1u64 << (c % 64);
                }
            }
        }
        Ok(book)
    }

    fn zeros(n: usize, cells: usize, p: f64, seed: u64) -> Self {
        let stride = cells.div_ceil(64);
        Codebook {
            n,
            cells,
            p,
            seed,
            stride,
            rows: vec![0; n * stride],
        }
    }

    /// Builds a codebook from explicit rows (`bits[t][cell]`); `p` and
    /// `seed` are recorded as given.
    pub fn from_bits(bits: &[Vec<u8>], p: f64, seed: u64) -> Result<Self> {
        let n = bits.len();
        let cells = bits.first().map_or(0, Vec::len);
        let mut book = Codebook::zeros(n, cells, p, seed);
        for (t, row) in bits.iter().enumerate() {
            if row.len() != cells {
                return Err(Error::LengthMismatch {
                    expected: cells,
                    got: row.len(),
                });
            }
            for (c, &b) in row.iter().enumerate() {
                if b != 0 {
                    book.rows[t * book.stride + c / 64] |= 1u64 << (c % 64);
                }
            }
        }
        Ok(book)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Bit for time index `t` (zero-based) and flattened cell `cell`.
    #[inline]
    pub fn bit(&self, t: usize, cell: usize) -> u8 {
        ((self.rows[t * self.stride + cell / 64] >> (cell % 64)) & 1) as u8
    }

    fn row(&self, t: usize) -> &[u64] {
        &self.rows[t * self.stride..(t + 1) * self.stride]
    }

    fn check_time(&self, t: usize) -> Result<usize> {
        if t >= 1 && t <= self.n {
            Ok(t - 1)
        } else {
            Err(Error::domain("t", t as f64, "[1, n]"))
        }
    }

    /// Cells in the query at time `t ∈ [1, n]` and its Lebesgue measure.
    pub fn query_at(&self, t: usize) -> Result<(Vec<usize>, f64)> {
        let i = self.check_time(t)?;
        let cells: Vec<usize> = (0..self.cells).filter(|&c| self.bit(i, c) == 1).collect();
        let measure = cells.len() as f64 / self.cells as f64;
        Ok((cells, measure))
    }

    /// Number of cells in each query, in time order.
    pub fn ones_per_query(&self) -> Vec<usize> {
        (0..self.n)
            .map(|t| self.row(t).iter().map(|w| w.count_ones() as usize).sum())
            .collect()
    }

    /// Lebesgue measure of each query, in time order.
    pub fn measures(&self) -> Vec<f64> {
        self.ones_per_query()
            .into_iter()
            .map(|k| k as f64 / self.cells as f64)
            .collect()
    }

    pub fn total_ones(&self) -> usize {
        self.ones_per_query().iter().sum()
    }

    /// Noiseless answer at time `t ∈ [1, n]` for the given target.
    pub fn oracle_answer(&self, grid: &HypothesisGrid, state: &TargetState, t: usize) -> Result<u8> {
        let i = self.check_time(t)?;
        let loc = locate_vector(state, t as f64);
        let cell: Vec<usize> = loc.iter().map(|&u| cell_index(u, grid.m_s())).collect();
        Ok(self.bit(i, grid.flatten_cell(&cell)))
    }

    /// Codeword of hypothesis `j`: the bits read along its representative
    /// trajectory.
    pub fn trajectory_codeword(&self, grid: &HypothesisGrid, j: usize) -> Result<Vec<u8>> {
        if j >= grid.hypotheses() {
            return Err(Error::domain("j", j as f64, "[0, J)"));
        }
        let rep = grid.representative(j);
        (1..=self.n)
            .map(|t| self.oracle_answer(grid, &rep, t))
            .collect()
    }
}

/// All trajectory codewords, packed `ceil(n / 64)` words per hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct CodewordTable {
    n: usize,
    hypotheses: usize,
    stride: usize,
    words: Vec<u64>,
}

impl CodewordTable {
    pub fn build(grid: &HypothesisGrid, book: &Codebook) -> Self {
        let n = grid.n();
        let d = grid.d();
        let stride = n.div_ceil(64);
        let hypotheses = grid.hypotheses();
        let mut words = vec![0u64; hypotheses * stride];
        words
            .par_chunks_mut(stride)
            .enumerate()
            .for_each_init(
                || (Vec::with_capacity(d), Vec::with_capacity(d)),
                |(s, v), (j, out)| {
                    s.clear();
                    v.clear();
                    for (k, m) in grid.decompose(j) {
                        s.push(grid.cell_center(k));
                        v.push(grid.velocity_center(m));
                    }
                    for t in 1..=n {
                        let cell = s.iter().zip(v.iter()).fold(0, |acc, (&si, &vi)| {
                            acc * grid.m_s() + cell_index(locate_scalar(si, vi, t as f64), grid.m_s())
                        });
                        if book.bit(t - 1, cell) == 1 {
                            out[(t - 1) / 64] |= 1u64 << ((t - 1) % 64);
                        }
                    }
                },
            );
        CodewordTable {
            n,
            hypotheses,
            stride,
            words,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn hypotheses(&self) -> usize {
        self.hypotheses
    }

    #[inline]
    pub(crate) fn packed(&self, j: usize) -> &[u64] {
        &self.words[j * self.stride..(j + 1) * self.stride]
    }

    pub fn codeword(&self, j: usize) -> Vec<u8> {
        let w = self.packed(j);
        (0..self.n).map(|t| ((w[t / 64] >> (t % 64)) & 1) as u8).collect()
    }

    /// Whether every hypothesis has a different codeword.
    pub fn all_distinct(&self) -> bool {
        let mut seen = std::collections::HashSet::with_capacity(self.hypotheses);
        (0..self.hypotheses).all(|j| seen.insert(self.packed(j)))
    }
}
