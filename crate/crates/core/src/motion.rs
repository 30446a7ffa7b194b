//! Target motion on the reflecting unit torus.
//!
//! Each coordinate moves linearly, `u = s + t v`, and the observed location
//! folds `u` back into `(0, 1]`: it follows `u` on `[2h, 2h+1)`, mirrors it
//! on `[2h+1, 2h+2)`, and is pinned to `1` whenever `u` is an integer.
//! Resolution is scored on the unwrapped positions `u`, not on the folded ones.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `|u - round(u)|` at or below this is treated as an exact integer.
pub const INTEGER_TOL: f64 = 1e-12;

/// Initial location and velocity of the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    s: Vec<f64>,
    v: Vec<f64>,
    v_max: f64,
}

impl TargetState {
    pub fn new(s: Vec<f64>, v: Vec<f64>, v_max: f64) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::InvalidParameter("dimension d must be at least 1".into()));
        }
        if s.len() != v.len() {
            return Err(Error::LengthMismatch {
                expected: s.len(),
                got: v.len(),
            });
        }
        if !(v_max >= 0.0) || !v_max.is_finite() {
            return Err(Error::domain("v_max", v_max, "[0, inf)"));
        }
        if let Some(&bad) = s.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::domain("s", bad, "[0, 1]"));
        }
        if let Some(&bad) = v.iter().find(|x| !(x.abs() <= v_max)) {
            return Err(Error::domain("v", bad, "[-v_max, v_max]"));
        }
        Ok(TargetState { s, v, v_max })
    }

    /// A target at rest.
    pub fn stationary(s: Vec<f64>) -> Result<Self> {
        let d = s.len();
        Self::new(s, vec![0.0; d], 0.0)
    }

    pub fn dim(&self) -> usize {
        self.s.len()
    }

    pub fn location(&self) -> &[f64] {
        &self.s
    }

    pub fn velocity(&self) -> &[f64] {
        &self.v
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }
}

/// Folded location of one coordinate at time `t`, in `(0, 1]`.
#[inline]
pub fn locate_scalar(s: f64, v: f64, t: f64) -> f64 {
    let u = s + t * v;
    let nearest = u.round();
    if (u - nearest).abs() <= INTEGER_TOL {
        return 1.0;
    }
    let floor = u.floor();
    if floor.rem_euclid(2.0) == 0.0 {
        u - floor
    } else {
        u.ceil() - u
    }
}

/// Componentwise [`locate_scalar`].
pub fn locate_vector(state: &TargetState, t: f64) -> Vec<f64> {
    state
        .s
        .iter()
        .zip(&state.v)
        .map(|(&s, &v)| locate_scalar(s, v, t))
        .collect()
}

/// Unwrapped affine position `s + t v`.
#[inline]
pub fn unwrapped_position(s: f64, v: f64, t: f64) -> f64 {
    s + t * v
}
