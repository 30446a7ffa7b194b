//! Measurement-dependent binary-input channels.
//!
//! The channel law depends on a query only through its Lebesgue measure:
//! the measure is mapped to a channel state `q = f(|A|)` by an affine
//! [`SizeMap`], and the state parameterizes the transition matrix. The only
//! family implemented is the measurement-dependent BSC, which flips the
//! oracle's answer with probability `zeta * q`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used for row-stochasticity checks.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Affine size map `f(q) = slope * q + intercept` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeMap {
    slope: f64,
    intercept: f64,
}

impl SizeMap {
    /// Builds a size map, rejecting maps that go negative on `[0, 1]`.
    pub fn new(slope: f64, intercept: f64) -> Result<Self> {
        if !slope.is_finite() || !intercept.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "size map coefficients must be finite (slope {slope}, intercept {intercept})"
            )));
        }
        if intercept < 0.0 || slope + intercept < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "size map {slope}*q + {intercept} is negative somewhere on [0, 1]"
            )));
        }
        Ok(SizeMap { slope, intercept })
    }

    /// Constant map `f(q) = value`.
    pub fn constant(value: f64) -> Result<Self> {
        Self::new(0.0, value)
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    /// Lipschitz constant `K = |slope|`.
    pub fn lipschitz(&self) -> f64 {
        self.slope.abs()
    }

    /// `max_{q in [0,1]} f(q)`.
    pub fn max_value(&self) -> f64 {
        self.intercept.max(self.slope + self.intercept)
    }

    /// `min_{q in [0,1]} f(q)`.
    pub fn min_value(&self) -> f64 {
        self.intercept.min(self.slope + self.intercept)
    }

    /// Evaluates the map without a domain check.
    #[inline]
    pub(crate) fn eval(&self, measure: f64) -> f64 {
        self.slope * measure + self.intercept
    }
}

/// Maps a query measure to its channel state.
pub fn state_of_measure(size_map: &SizeMap, measure: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&measure) {
        return Err(Error::domain("measure", measure, "[0, 1]"));
    }
    Ok(size_map.eval(measure))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelKind {
    /// Measurement-dependent binary symmetric channel.
    #[serde(rename = "md-bsc")]
    MdBsc,
}

/// A measurement-dependent channel family indexed by the state `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    kind: ChannelKind,
    zeta: f64,
    size_map: SizeMap,
}

impl ChannelSpec {
    /// Measurement-dependent BSC with parameter `zeta` and the given size map.
    ///
    /// Every reachable crossover `zeta * f(q)` must be a probability.
    pub fn md_bsc(zeta: f64, size_map: SizeMap) -> Result<Self> {
        if !(zeta > 0.0 && zeta <= 1.0) {
            return Err(Error::domain("zeta", zeta, "(0, 1]"));
        }
        let worst = zeta * size_map.max_value();
        if worst > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "zeta * max f = {worst} exceeds 1; transition probabilities would be invalid"
            )));
        }
        Ok(ChannelSpec {
            kind: ChannelKind::MdBsc,
            zeta,
            size_map,
        })
    }

    /// Shorthand for `md_bsc(zeta, SizeMap::new(slope, intercept)?)`.
    pub fn from_params(zeta: f64, slope: f64, intercept: f64) -> Result<Self> {
        Self::md_bsc(zeta, SizeMap::new(slope, intercept)?)
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn size_map(&self) -> &SizeMap {
        &self.size_map
    }

    pub fn output_alphabet_size(&self) -> usize {
        2
    }

    /// Transition matrix at channel state `q` (already mapped through `f`).
    pub fn transition_matrix(&self, q: f64) -> Result<TransitionMatrix> {
        if !(q >= 0.0) || !q.is_finite() {
            return Err(Error::domain("q", q, "[0, max f]"));
        }
        let crossover = self.zeta * q;
        if crossover > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "zeta * q = {crossover} exceeds 1"
            )));
        }
        Ok(TransitionMatrix { crossover })
    }

    /// Transition matrix for a query of the given measure.
    pub fn transition_for_measure(&self, measure: f64) -> Result<TransitionMatrix> {
        self.transition_matrix(state_of_measure(&self.size_map, measure)?)
    }

    /// Non-fatal diagnostics about the channel family.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let worst = self.zeta * self.size_map.max_value();
        if worst > 0.5 {
            out.push(format!(
                "crossover zeta*f(q) reaches {worst:.6} > 1/2 for large queries; such queries are anti-informative"
            ));
        }
        out
    }

    /// Draws a channel output for input `x` at state `q`.
    pub fn sample_output<R: Rng + ?Sized>(&self, q: f64, x: u8, rng: &mut R) -> Result<u8> {
        Ok(self.transition_matrix(q)?.sample(x, rng))
    }

    /// Evaluates the continuity condition at measure `q` with perturbation `xi`.
    ///
    /// The three transition matrices are taken at the states `f(q)` and
    /// `f(q ± xi)`. The reference constant is the derivative bound
    /// `K * max(1/q', zeta/(1 - zeta q'))` maximized over the states `q'`
    /// swept by the perturbation.
    pub fn verify_continuity(&self, q: f64, xi: f64) -> Result<ContinuityReport> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::domain("q", q, "(0, 1)"));
        }
        let xi_max = q.min(1.0 - q);
        if !(xi > 0.0 && xi < xi_max) {
            return Err(Error::domain("xi", xi, "(0, min(q, 1-q))"));
        }
        let center = self.transition_for_measure(q)?;
        let up = self.transition_for_measure(q + xi)?;
        let down = self.transition_for_measure(q - xi)?;
        let lhs = center
            .log_ratio_norm(&up)
            .max(center.log_ratio_norm(&down));

        let k = self.size_map.lipschitz();
        let c_ref = if k == 0.0 {
            0.0
        } else {
            let lo = self.size_map.eval(q - xi).min(self.size_map.eval(q + xi));
            let hi = self.size_map.eval(q - xi).max(self.size_map.eval(q + xi));
            let low_side = 1.0 / lo;
            let high_side = self.zeta / (1.0 - self.zeta * hi);
            k * low_side.max(high_side)
        };
        let ok = lhs.is_finite() && lhs <= c_ref * xi * (1.0 + 1e-12);
        Ok(ContinuityReport {
            q,
            xi,
            lhs,
            c_estimate: lhs / xi,
            c_ref,
            ok,
        })
    }
}

/// Result of [`ChannelSpec::verify_continuity`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub q: f64,
    pub xi: f64,
    /// Larger of the two log-ratio infinity norms.
    pub lhs: f64,
    /// `lhs / xi`.
    pub c_estimate: f64,
    pub c_ref: f64,
    pub ok: bool,
}

/// Binary-input binary-output transition law `W(y|x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix {
    crossover: f64,
}

impl TransitionMatrix {
    /// Flip probability `P(y != x)`.
    pub fn crossover(&self) -> f64 {
        self.crossover
    }

    #[inline]
    pub fn prob(&self, x: u8, y: u8) -> f64 {
        if x == y {
            1.0 - self.crossover
        } else {
            self.crossover
        }
    }

    /// `log W(y|x)`; `-inf` for impossible transitions.
    #[inline]
    pub fn log_prob(&self, x: u8, y: u8) -> f64 {
        self.prob(x, y).ln()
    }

    pub fn rows(&self) -> [[f64; 2]; 2] {
        [
            [self.prob(0, 0), self.prob(0, 1)],
            [self.prob(1, 0), self.prob(1, 1)],
        ]
    }

    /// Largest deviation of a row sum from one.
    pub fn stochasticity_defect(&self) -> f64 {
        self.rows()
            .iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, x: u8, rng: &mut R) -> u8 {
        let flip = rng.gen::<f64>() < self.crossover;
        x ^ u8::from(flip)
    }

    /// `max_{x,y} |log W(y|x) - log W'(y|x)|`.
    pub fn log_ratio_norm(&self, other: &TransitionMatrix) -> f64 {
        let mut worst = 0.0f64;
        for x in 0..2u8 {
            for y in 0..2u8 {
                let (a, b) = (self.prob(x, y), other.prob(x, y));
                let d = if a == b { 0.0 } else { (a.ln() - b.ln()).abs() };
                worst = worst.max(d);
            }
        }
        worst
    }
}
