//! Second-order approximations to the optimal resolution and the excess-
//! resolution phase transition.
//!
//! With `C` and `V` the capacity and dispersion of the channel,
//!
//! ```text
//! -2d log δ*(n, d, ε) ≈ nC + sqrt(n V_ε) Φ⁻¹(ε)
//! ε*(n, d, δ)        ≈ Φ((-2d log δ - nC) / sqrt(n V))
//! ```
//!
//! Remainder terms are never folded into the numbers; every report carries a
//! caveat naming the remainder that applies to its velocity regime.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::info::ChannelStats;
use crate::normal::{gaussian_icdf, norm_cdf};

/// Coefficient of `log δ` in the phase-transition formula.
///
/// `2d` matches the second-order resolution expansion and the critical rate
/// `C/(2d)`. `OneD` gives the single-`d` variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogCoefficient {
    #[default]
    TwoD,
    OneD,
}

impl LogCoefficient {
    fn factor(self, d: usize) -> f64 {
        match self {
            LogCoefficient::TwoD => 2.0 * d as f64,
            LogCoefficient::OneD => d as f64,
        }
    }
}

pub const COEFFICIENT_NOTE: &str = "phase transition uses -2d*log(delta), consistent with the second-order resolution expansion and the critical rate C/(2d); a -d*log(delta) variant is available via the one-d coefficient";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VelocityRegime {
    /// `n v_max <= sqrt(n)`: the second-order term is meaningful.
    Strong,
    /// `sqrt(n) < n v_max < n`: only the first-order term is exact.
    Weak,
    OutOfScope,
}

impl VelocityRegime {
    pub fn caveat(self) -> &'static str {
        match self {
            VelocityRegime::Strong => "remainder O(max{n*v_max, log n}) omitted",
            VelocityRegime::Weak => {
                "remainder O(n*v_max) omitted; the sqrt(n) dispersion term is not resolved in this regime"
            }
            VelocityRegime::OutOfScope => {
                "n*v_max >= n: total displacement is not sub-linear, approximation does not apply"
            }
        }
    }
}

/// Classifies `(n, v_max)` against the asymptotic velocity conditions.
pub fn velocity_regime(n: usize, v_max: f64) -> Result<VelocityRegime> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if !(v_max >= 0.0) {
        return Err(Error::domain("v_max", v_max, "[0, inf)"));
    }
    let n = n as f64;
    let travel = n * v_max;
    Ok(if travel <= n.sqrt() {
        VelocityRegime::Strong
    } else if travel < n {
        VelocityRegime::Weak
    } else {
        VelocityRegime::OutOfScope
    })
}

fn check_n_d(n: usize, d: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if d == 0 {
        return Err(Error::InvalidParameter("d must be at least 1".into()));
    }
    Ok(())
}

/// `log δ*` approximation; avoids underflow for large `n`.
pub fn log_resolution_approx(n: usize, d: usize, eps: f64, stats: &ChannelStats) -> Result<f64> {
    check_n_d(n, d)?;
    let z = gaussian_icdf(eps)?;
    let v = stats.v_eps(eps)?;
    let n = n as f64;
    Ok(-(n * stats.capacity + (n * v).sqrt() * z) / (2.0 * d as f64))
}

/// Approximate minimal achievable resolution `δ*(n, d, eps)`.
pub fn resolution_approx(n: usize, d: usize, eps: f64, stats: &ChannelStats) -> Result<f64> {
    Ok(log_resolution_approx(n, d, eps, stats)?.exp())
}

/// Gaussian approximation to the minimal excess-resolution probability,
/// given `log δ`.
///
/// Below the critical point the max-variance branch of the
/// capacity-achieving set is used, above it the min-variance branch, which
/// mirrors the `V_eps` case split.
pub fn excess_prob_approx_log(
    n: usize,
    d: usize,
    log_delta: f64,
    stats: &ChannelStats,
    coefficient: LogCoefficient,
) -> Result<f64> {
    check_n_d(n, d)?;
    if !(log_delta < 0.0) {
        return Err(Error::domain("log(delta)", log_delta, "(-inf, 0)"));
    }
    let nf = n as f64;
    let numerator = -coefficient.factor(d) * log_delta - nf * stats.capacity;
    let v = if numerator <= 0.0 {
        stats.v_max()?
    } else {
        stats.v_min()?
    };
    if v == 0.0 {
        return Ok(if numerator > 0.0 {
            1.0
        } else if numerator < 0.0 {
            0.0
        } else {
            0.5
        });
    }
    Ok(norm_cdf(numerator / (nf * v).sqrt()))
}

/// [`excess_prob_approx_log`] with the default coefficient and `δ` given directly.
pub fn excess_prob_approx(n: usize, d: usize, delta: f64, stats: &ChannelStats) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain("delta", delta, "(0, 1)"));
    }
    excess_prob_approx_log(n, d, delta.ln(), stats, LogCoefficient::TwoD)
}

/// Critical resolution decay rate `C / (2d)` in nats per query.
pub fn critical_rate(d: usize, stats: &ChannelStats) -> f64 {
    stats.capacity / (2.0 * d as f64)
}

/// Gaussian phase-transition curve over decay rates `-log(δ)/n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCurve {
    pub n: usize,
    pub d: usize,
    pub critical_rate: f64,
    /// Index of the critical-rate point in `points`, when inside the range.
    pub critical_index: Option<usize>,
    /// `(rate, eps_hat)` sorted by rate.
    pub points: Vec<(f64, f64)>,
}

/// Evaluates the approximation on `points` evenly spaced rates in
/// `[rate_min, rate_max]`, with the critical rate inserted when it falls
/// inside the range.
pub fn phase_curve(
    n: usize,
    d: usize,
    stats: &ChannelStats,
    rate_min: f64,
    rate_max: f64,
    points: usize,
) -> Result<PhaseCurve> {
    check_n_d(n, d)?;
    if !(rate_min > 0.0 && rate_min < rate_max) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < rate_min < rate_max, got [{rate_min}, {rate_max}]"
        )));
    }
    if points < 2 {
        return Err(Error::InvalidParameter("points must be at least 2".into()));
    }
    let critical = critical_rate(d, stats);
    let mut rates: Vec<f64> = (0..points)
        .map(|i| rate_min + (rate_max - rate_min) * i as f64 / (points - 1) as f64)
        .collect();
    if critical >= rate_min && critical <= rate_max {
        // a grid point within rounding of the critical rate is replaced by it
        match rates
            .iter()
            .position(|&r| (r - critical).abs() <= 1e-12 * critical)
        {
            Some(i) => rates[i] = critical,
            None => {
                rates.push(critical);
                rates.sort_by(f64::total_cmp);
            }
        }
    }
    let critical_index = rates.iter().position(|&r| r == critical);
    let nf = n as f64;
    let points = rates
        .into_iter()
        .map(|r| {
            let eps = excess_prob_approx_log(n, d, -r * nf, stats, LogCoefficient::TwoD)?;
            Ok((r, eps))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseCurve {
        n,
        d,
        critical_rate: critical,
        critical_index,
        points,
    })
}

/// Everything the approximation says about one `(n, d, eps, v_max)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitReport {
    pub n: usize,
    pub d: usize,
    pub eps: f64,
    pub capacity: f64,
    pub v_eps: f64,
    pub log_delta_approx: f64,
    pub delta_approx: f64,
    pub critical_rate: f64,
    pub regime: VelocityRegime,
    pub caveat: &'static str,
}

impl LimitReport {
    pub fn compute(n: usize, d: usize, eps: f64, v_max: f64, stats: &ChannelStats) -> Result<Self> {
        let regime = velocity_regime(n, v_max)?;
        let log_delta_approx = log_resolution_approx(n, d, eps, stats)?;
        Ok(LimitReport {
            n,
            d,
            eps,
            capacity: stats.capacity,
            v_eps: stats.v_eps(eps)?,
            log_delta_approx,
            delta_approx: log_delta_approx.exp(),
            critical_rate: critical_rate(d, stats),
            regime,
            caveat: regime.caveat(),
        })
    }
}
