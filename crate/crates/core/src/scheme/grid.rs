use serde::Serialize;

use crate::error::{Error, Result};
use crate::motion::TargetState;

/// Default cap on the number of hypotheses `J`.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Quantization of (location, velocity) space into hypotheses.
///
/// Per dimension there are `m_s` location cells `(k/m_s, (k+1)/m_s]` and
/// `m_v` velocity cells of width `delta_v` covering `[-v_max, v_max]`.
/// Hypothesis `j` enumerates the per-dimension pairs `(k, m)` in mixed radix
/// with dimension 0 most significant and `h = k * m_v + m` within a dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisGrid {
    d: usize,
    n: usize,
    m_s: usize,
    m_v: usize,
    v_max: f64,
    delta_s: f64,
    delta_v: f64,
    delta_target: f64,
}

fn ceil_tolerant(x: f64) -> f64 {
    // keeps exact ratios like 2*0.01*10/0.1 from rounding up a cell
    (x * (1.0 - 1e-12)).ceil()
}

impl HypothesisGrid {
    /// Sizes the grid for target resolution `delta_target`: half of it for
    /// the location cell, half for velocity error accumulated over `n` steps.
    pub fn plan(delta_target: f64, n: usize, d: usize, v_max: f64, budget: u64) -> Result<Self> {
        if !(delta_target > 0.0 && delta_target < 0.5) {
            return Err(Error::domain("delta", delta_target, "(0, 1/2)"));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if d == 0 {
            return Err(Error::InvalidParameter("d must be at least 1".into()));
        }
        if !(v_max >= 0.0) || !v_max.is_finite() {
            return Err(Error::domain("v_max", v_max, "[0, inf)"));
        }
        let m_s_f = ceil_tolerant(1.0 / delta_target);
        let m_v_f = if v_max == 0.0 {
            1.0
        } else {
            ceil_tolerant(2.0 * v_max * n as f64 / delta_target).max(1.0)
        };
        let hypotheses = (m_s_f * m_v_f).powi(d as i32);
        if !(hypotheses <= budget as f64) {
            return Err(Error::Budget { hypotheses, budget });
        }
        let m_s = m_s_f as usize;
        let m_v = m_v_f as usize;
        let delta_v = if v_max == 0.0 { 0.0 } else { 2.0 * v_max / m_v as f64 };
        Ok(HypothesisGrid {
            d,
            n,
            m_s,
            m_v,
            v_max,
            delta_s: 1.0 / m_s as f64,
            delta_v,
            delta_target,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m_s(&self) -> usize {
        self.m_s
    }

    pub fn m_v(&self) -> usize {
        self.m_v
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn delta_s(&self) -> f64 {
        self.delta_s
    }

    pub fn delta_v(&self) -> f64 {
        self.delta_v
    }

    pub fn delta_target(&self) -> f64 {
        self.delta_target
    }

    /// Worst-case error of a representative over `t ∈ [0, n]`.
    pub fn guaranteed_error(&self) -> f64 {
        self.delta_s / 2.0 + self.n as f64 * self.delta_v / 2.0
    }

    /// Hypotheses per dimension, `m_s * m_v`.
    pub fn pairs(&self) -> usize {
        self.m_s * self.m_v
    }

    /// Total hypotheses `J = (m_s m_v)^d`.
    pub fn hypotheses(&self) -> usize {
        self.pairs().pow(self.d as u32)
    }

    /// Location cells `m_s^d`.
    pub fn cells(&self) -> usize {
        self.m_s.pow(self.d as u32)
    }

    /// Center of location cell `k`.
    #[inline]
    pub fn cell_center(&self, k: usize) -> f64 {
        (k as f64 + 0.5) / self.m_s as f64
    }

    /// Center of velocity cell `m`.
    #[inline]
    pub fn velocity_center(&self, m: usize) -> f64 {
        if self.v_max == 0.0 {
            0.0
        } else {
            -self.v_max + (m as f64 + 0.5) * self.delta_v
        }
    }

    /// Per-dimension `(k, m)` pairs of hypothesis `j`.
    pub fn decompose(&self, j: usize) -> Vec<(usize, usize)> {
        let pairs = self.pairs();
        let mut out = vec![(0, 0); self.d];
        let mut rest = j;
        for slot in out.iter_mut().rev() {
            let h = rest % pairs;
            rest /= pairs;
            *slot = (h / self.m_v, h % self.m_v);
        }
        out
    }

    /// Inverse of [`Self::decompose`].
    pub fn compose(&self, parts: &[(usize, usize)]) -> usize {
        let pairs = self.pairs();
        parts
            .iter()
            .fold(0, |acc, &(k, m)| acc * pairs + k * self.m_v + m)
    }

    /// Representative `(ŝ, v̂)` of hypothesis `j`: the cell centers.
    pub fn representative(&self, j: usize) -> TargetState {
        let parts = self.decompose(j);
        let s = parts.iter().map(|&(k, _)| self.cell_center(k)).collect();
        let v = parts.iter().map(|&(_, m)| self.velocity_center(m)).collect();
        TargetState::new(s, v, self.v_max).expect("cell centers lie inside the grid ranges")
    }

    /// Flattened index of a per-dimension cell vector.
    pub fn flatten_cell(&self, cell: &[usize]) -> usize {
        cell.iter().fold(0, |acc, &c| acc * self.m_s + c)
    }
}

/// Location cell of one coordinate in `(0, 1]`.
#[inline]
pub(crate) fn cell_index(u: f64, m_s: usize) -> usize {
    let k = (u * m_s as f64).ceil() as isize - 1;
    k.clamp(0, m_s as isize - 1) as usize
}

/// Per-dimension cell indices of a location in `(0, 1]^d`.
pub fn cell_of(location: &[f64], m_s: usize) -> Result<Vec<usize>> {
    location
        .iter()
        .map(|&u| {
            if u > 0.0 && u <= 1.0 {
                Ok(cell_index(u, m_s))
            } else {
                Err(Error::domain("location", u, "(0, 1]"))
            }
        })
        .collect()
}
