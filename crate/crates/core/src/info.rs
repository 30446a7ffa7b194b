//! Information density and the first-, second- and third-order statistics
//! that enter the resolution limits: capacity `C`, the capacity-achieving
//! set, dispersion `V_p`, the centered third absolute moment `T_p`, and
//! `V_eps`. All quantities are in nats.
//!
//! For a Bernoulli(`p`) input the channel state is coupled to the input
//! law, `q = f(p)`: a random query that contains each cell with probability
//! `p` has measure close to `p`.

use serde::Serialize;

use crate::channel::{state_of_measure, ChannelSpec, TransitionMatrix};
use crate::error::{Error, Result};

/// Bernoulli input probability in the open interval `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct InputParam(f64);

impl InputParam {
    pub fn new(p: f64) -> Result<Self> {
        if p > 0.0 && p < 1.0 {
            Ok(InputParam(p))
        } else {
            Err(Error::domain("p", p, "(0, 1)"))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Output marginal `P_Y^{p,q}` for input law Bernoulli(`p`), `p ∈ [0, 1]`.
pub fn output_dist(p: f64, q: f64, channel: &ChannelSpec) -> Result<[f64; 2]> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain("p", p, "[0, 1]"));
    }
    let w = channel.transition_matrix(q)?;
    Ok(mixture(p, &w))
}

#[inline]
fn mixture(p: f64, w: &TransitionMatrix) -> [f64; 2] {
    [
        (1.0 - p) * w.prob(0, 0) + p * w.prob(1, 0),
        (1.0 - p) * w.prob(0, 1) + p * w.prob(1, 1),
    ]
}

/// Information density values `ι_{p,q}(x; y)` for all four `(x, y)`.
///
/// Entries for impossible transitions are `-inf`. Entries whose output
/// symbol has zero marginal are `NaN` and rejected by [`Self::get`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoDensityTable {
    p: f64,
    q: f64,
    output: [f64; 2],
    values: [[f64; 2]; 2],
}

impl InfoDensityTable {
    pub fn new(channel: &ChannelSpec, p: f64, q: f64) -> Result<Self> {
        let w = channel.transition_matrix(q)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain("p", p, "[0, 1]"));
        }
        let output = mixture(p, &w);
        let mut values = [[f64::NAN; 2]; 2];
        for x in 0..2u8 {
            for y in 0..2u8 {
                if output[y as usize] > 0.0 {
                    values[x as usize][y as usize] =
                        w.log_prob(x, y) - output[y as usize].ln();
                }
            }
        }
        Ok(InfoDensityTable {
            p,
            q,
            output,
            values,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn output(&self) -> [f64; 2] {
        self.output
    }

    pub fn get(&self, x: u8, y: u8) -> Result<f64> {
        if self.output[y as usize] > 0.0 {
            Ok(self.values[x as usize][y as usize])
        } else {
            Err(Error::UndefinedDensity { symbol: y })
        }
    }

    /// Both densities for output `y`: `[ι(0; y), ι(1; y)]`.
    pub(crate) fn column(&self, y: u8) -> Result<[f64; 2]> {
        Ok([self.get(0, y)?, self.get(1, y)?])
    }
}

/// `ι_{p,q}(x; y) = log W_q(y|x) / P_Y^{p,q}(y)`.
pub fn info_density(p: f64, q: f64, channel: &ChannelSpec, x: u8, y: u8) -> Result<f64> {
    InfoDensityTable::new(channel, p, q)?.get(x, y)
}

/// Sum of per-symbol information densities with per-symbol states `q_seq`.
pub fn empirical_info(
    channel: &ChannelSpec,
    p: f64,
    q_seq: &[f64],
    x: &[u8],
    y: &[u8],
) -> Result<f64> {
    let n = q_seq.len();
    for len in [x.len(), y.len()] {
        if len != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: len,
            });
        }
    }
    let mut total = 0.0;
    for ((&q, &xt), &yt) in q_seq.iter().zip(x).zip(y) {
        total += info_density(p, q, channel, xt, yt)?;
    }
    Ok(total)
}

/// Mean, variance and centered third absolute moment of `ι_{p,f(p)}(X; Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfoMoments {
    pub mean: f64,
    pub variance: f64,
    pub third_abs: f64,
}

/// Joint law and density values for `(X, Y) ~ Bern(p) × W_{f(p)}`, skipping
/// zero-probability cells.
fn joint_terms(channel: &ChannelSpec, p: f64) -> Result<Vec<(f64, f64)>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain("p", p, "[0, 1]"));
    }
    let q = state_of_measure(channel.size_map(), p)?;
    let w = channel.transition_matrix(q)?;
    let table = InfoDensityTable::new(channel, p, q)?;
    let mut terms = Vec::with_capacity(4);
    for x in 0..2u8 {
        let px = if x == 1 { p } else { 1.0 - p };
        for y in 0..2u8 {
            let mass = px * w.prob(x, y);
            if mass > 0.0 {
                terms.push((mass, table.get(x, y)?));
            }
        }
    }
    Ok(terms)
}

/// Exact finite-sum moments of the information density at `q = f(p)`.
pub fn moments(channel: &ChannelSpec, p: f64) -> Result<InfoMoments> {
    let terms = joint_terms(channel, p)?;
    let mean: f64 = terms.iter().map(|(m, v)| m * v).sum();
    let variance = terms.iter().map(|(m, v)| m * (v - mean).powi(2)).sum();
    let third_abs = terms.iter().map(|(m, v)| m * (v - mean).abs().powi(3)).sum();
    Ok(InfoMoments {
        mean,
        variance,
        third_abs,
    })
}

/// `E[ι_{p,f(p)}(X; Y)]`, defined on the closed interval (zero at the ends).
pub fn mutual_info(channel: &ChannelSpec, p: f64) -> Result<f64> {
    Ok(joint_terms(channel, p)?.iter().map(|(m, v)| m * v).sum())
}

/// `V_p`.
pub fn dispersion(channel: &ChannelSpec, p: InputParam) -> Result<f64> {
    Ok(moments(channel, p.get())?.variance)
}

/// `T_p`.
pub fn third_moment(channel: &ChannelSpec, p: InputParam) -> Result<f64> {
    Ok(moments(channel, p.get())?.third_abs)
}

/// Settings for the capacity search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityOptions {
    pub grid_step: f64,
    pub refine_tol: f64,
}

impl Default for CapacityOptions {
    fn default() -> Self {
        CapacityOptions {
            grid_step: 1e-4,
            refine_tol: 1e-9,
        }
    }
}

/// Golden-section search for a maximum of `f` on `[a, b]`.
fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Capacity `C` and the capacity-achieving set.
///
/// Mutual information need not be unimodal in `p` when the state moves with
/// `p`, so a dense grid scan comes first and every grid local maximum is
/// refined by golden-section search. Returned maximizers are sorted.
pub fn capacity(channel: &ChannelSpec, opts: CapacityOptions) -> Result<(f64, Vec<f64>)> {
    if !(opts.grid_step > 0.0 && opts.grid_step <= 1e-3) {
        return Err(Error::domain("grid_step", opts.grid_step, "(0, 1e-3]"));
    }
    if !(opts.refine_tol > 0.0) {
        return Err(Error::domain("refine_tol", opts.refine_tol, "(0, inf)"));
    }
    let steps = (1.0 / opts.grid_step).round() as usize;
    let h = 1.0 / steps as f64;
    let mi = |p: f64| mutual_info(channel, p).unwrap_or(f64::NEG_INFINITY);
    let values: Vec<f64> = (0..=steps).map(|k| mi(k as f64 * h)).collect();

    let mut candidates = Vec::new();
    for k in 1..steps {
        // the first point of a plateau counts once
        if values[k] > values[k - 1] && values[k] >= values[k + 1] {
            let lo = (k - 1) as f64 * h;
            let hi = (k + 1) as f64 * h;
            candidates.push(golden_section_max(mi, lo, hi, opts.refine_tol));
        }
    }
    if candidates.is_empty() {
        // nowhere increasing: flat channel
        let p = h;
        candidates.push((p, values[1]));
    }

    let best = candidates
        .iter()
        .map(|c| c.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut maximizers: Vec<f64> = candidates
        .iter()
        .filter(|c| c.1 >= best - opts.refine_tol)
        .map(|c| c.0)
        .collect();
    maximizers.sort_by(f64::total_cmp);
    maximizers.dedup_by(|a, b| (*a - *b).abs() < 10.0 * h);
    Ok((best.max(0.0), maximizers))
}

/// Capacity-achieving statistics of a channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelStats {
    pub capacity: f64,
    pub p_ca: Vec<f64>,
    pub v_at_pca: Vec<f64>,
    pub t_at_pca: Vec<f64>,
}

impl ChannelStats {
    pub fn compute(channel: &ChannelSpec, opts: CapacityOptions) -> Result<Self> {
        let (capacity, p_ca) = capacity(channel, opts)?;
        let mut v_at_pca = Vec::with_capacity(p_ca.len());
        let mut t_at_pca = Vec::with_capacity(p_ca.len());
        for &p in &p_ca {
            let m = moments(channel, p)?;
            v_at_pca.push(m.variance);
            t_at_pca.push(m.third_abs);
        }
        Ok(ChannelStats {
            capacity,
            p_ca,
            v_at_pca,
            t_at_pca,
        })
    }

    /// Builds stats from known values; used where the optimizer is bypassed.
    pub fn from_parts(capacity: f64, p_ca: Vec<f64>, v_at_pca: Vec<f64>, t_at_pca: Vec<f64>) -> Self {
        ChannelStats {
            capacity,
            p_ca,
            v_at_pca,
            t_at_pca,
        }
    }

    pub fn v_max(&self) -> Result<f64> {
        self.v_at_pca
            .iter()
            .copied()
            .reduce(f64::max)
            .ok_or(Error::EmptyCapacitySet)
    }

    pub fn v_min(&self) -> Result<f64> {
        self.v_at_pca
            .iter()
            .copied()
            .reduce(f64::min)
            .ok_or(Error::EmptyCapacitySet)
    }

    /// Max of `V_p` over the capacity-achieving set for `eps <= 0.5`, min otherwise.
    pub fn v_eps(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::domain("eps", eps, "(0, 1)"));
        }
        if eps <= 0.5 {
            self.v_max()
        } else {
            self.v_min()
        }
    }

    /// Smallest capacity-achieving input probability.
    pub fn p_star(&self) -> Result<f64> {
        self.p_ca.first().copied().ok_or(Error::EmptyCapacitySet)
    }

    /// `T_p` at the smallest capacity-achieving `p`.
    pub fn t_star(&self) -> Result<f64> {
        self.t_at_pca.first().copied().ok_or(Error::EmptyCapacitySet)
    }

    pub fn is_singleton(&self) -> bool {
        self.p_ca.len() == 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hb(x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            0.0
        } else {
            -x * x.ln() - (1.0 - x) * (1.0 - x).ln()
        }
    }

    fn reference_channel() -> ChannelSpec {
        ChannelSpec::from_params(0.2, 2.0, 0.5).unwrap()
    }

    fn constant(zeta: f64, q0: f64) -> ChannelSpec {
        ChannelSpec::from_params(zeta, 0.0, q0).unwrap()
    }

    #[test]
    fn output_dist_examples() {
        let ch = constant(0.2, 1.0);
        let u = output_dist(0.5, 1.0, &ch).unwrap();
        assert!((u[0] - 0.5).abs() < 1e-15 && (u[1] - 0.5).abs() < 1e-15);
        let z = output_dist(0.0, 1.0, &ch).unwrap();
        assert!((z[0] - 0.8).abs() < 1e-15 && (z[1] - 0.2).abs() < 1e-15);
        let m = output_dist(0.3, 1.0, &ch).unwrap();
        assert!((m[0] - 0.62).abs() < 1e-12 && (m[1] - 0.38).abs() < 1e-12);
        assert!(((m[0] + m[1]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn info_density_examples() {
        let e = 0.3;
        let ch = constant(1.0, e);
        let same = info_density(0.5, e, &ch, 1, 1).unwrap();
        let diff = info_density(0.5, e, &ch, 0, 1).unwrap();
        assert!((same - (2.0 * (1.0 - e)).ln()).abs() < 1e-14);
        assert!((diff - (2.0 * e).ln()).abs() < 1e-14);
        let clean = constant(1.0, 0.0);
        assert!((info_density(0.5, 0.0, &clean, 0, 0).unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn info_density_undefined_symbol() {
        let clean = constant(1.0, 0.0);
        // p = 0 and noiseless: y = 1 never occurs
        assert!(matches!(
            info_density(0.0, 0.0, &clean, 1, 1),
            Err(Error::UndefinedDensity { symbol: 1 })
        ));
    }

    #[test]
    fn empirical_info_examples() {
        let ch = constant(1.0, 0.3);
        assert_eq!(empirical_info(&ch, 0.5, &[], &[], &[]).unwrap(), 0.0);
        let v = empirical_info(&ch, 0.5, &[0.3, 0.3], &[0, 1], &[0, 1]).unwrap();
        assert!((v - 2.0 * 1.4f64.ln()).abs() < 1e-14);
        assert!(matches!(
            empirical_info(&ch, 0.5, &[0.3], &[0, 1], &[0, 1]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn empirical_info_matches_resummation() {
        use rand::{Rng, SeedableRng};
        let ch = reference_channel();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let n = rng.gen_range(1..40);
            let q: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.5)).collect();
            let x: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let y: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let p = rng.gen_range(0.05..0.95);
            let got = empirical_info(&ch, p, &q, &x, &y).unwrap();
            let mut oracle = 0.0;
            for t in 0..n {
                let e = 0.2 * q[t];
                let w = |a: u8, b: u8| if a == b { 1.0 - e } else { e };
                let py = (1.0 - p) * w(0, y[t]) + p * w(1, y[t]);
                oracle += (w(x[t], y[t]) / py).ln();
            }
            assert!((got - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn mutual_info_constant_map_matches_bsc() {
        for &(zeta, q0) in &[(0.2, 1.0), (0.5, 0.6), (1.0, 0.05)] {
            let ch = constant(zeta, q0);
            let e = zeta * q0;
            for i in 1..20 {
                let p = i as f64 / 20.0;
                let bsc = hb(p * (1.0 - e) + (1.0 - p) * e) - hb(e);
                assert!((mutual_info(&ch, p).unwrap() - bsc).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn mutual_info_of_reference_channel_at_half() {
        let v = mutual_info(&reference_channel(), 0.5).unwrap();
        assert!((v - (2f64.ln() - hb(0.3))).abs() < 1e-14);
        assert!((v - 0.0822).abs() < 1e-4);
    }

    #[test]
    fn mutual_info_vanishes_at_endpoints() {
        let ch = reference_channel();
        assert_eq!(mutual_info(&ch, 0.0).unwrap(), 0.0);
        assert!(mutual_info(&ch, 1.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn expectation_of_density_is_mutual_info() {
        let ch = reference_channel();
        for i in 1..50 {
            let p = i as f64 / 50.0;
            let q = state_of_measure(ch.size_map(), p).unwrap();
            let w = ch.transition_matrix(q).unwrap();
            let mut e = 0.0;
            for x in 0..2u8 {
                for y in 0..2u8 {
                    let px = if x == 1 { p } else { 1.0 - p };
                    e += px * w.prob(x, y) * info_density(p, q, &ch, x, y).unwrap();
                }
            }
            assert!((e - mutual_info(&ch, p).unwrap()).abs() < 1e-12);
            assert!(mutual_info(&ch, p).unwrap() >= 0.0);
        }
    }

    #[test]
    fn capacity_of_standard_bsc() {
        let ch = constant(0.2, 1.0);
        let (c, pca) = capacity(&ch, CapacityOptions::default()).unwrap();
        assert!((c - (2f64.ln() - hb(0.2))).abs() < 1e-9);
        assert!((c - 0.19274).abs() < 1e-5);
        assert_eq!(pca.len(), 1);
        assert!((pca[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn capacity_of_noiseless_channel() {
        let ch = constant(0.2, 0.0);
        let (c, pca) = capacity(&ch, CapacityOptions::default()).unwrap();
        assert!((c - 2f64.ln()).abs() < 1e-12);
        assert_eq!(pca.len(), 1);
        assert!((pca[0] - 0.5).abs() < 1e-6);
        let m = moments(&ch, 0.5).unwrap();
        assert!(m.variance.abs() < 1e-15 && m.third_abs.abs() < 1e-15);
    }

    #[test]
    fn capacity_of_reference_channel() {
        let ch = reference_channel();
        let (c, pca) = capacity(&ch, CapacityOptions::default()).unwrap();
        // independent brute-force scan at step 1e-5
        let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
        for k in 1..100_000 {
            let p = k as f64 * 1e-5;
            let v = mutual_info(&ch, p).unwrap();
            if v > best {
                best = v;
                arg = p;
            }
        }
        assert!(c >= best - 1e-12);
        assert!((c - best).abs() < 1e-9);
        assert!((c - 0.147644).abs() < 1e-6);
        assert_eq!(pca.len(), 1);
        assert!((pca[0] - arg).abs() < 2e-5);
        assert!(pca[0] > 0.22 && pca[0] < 0.24);
        assert!(c > mutual_info(&ch, 0.5).unwrap());
        for k in 1..1000 {
            assert!(c >= mutual_info(&ch, k as f64 / 1000.0).unwrap());
        }
    }

    #[test]
    fn capacity_rejects_coarse_grid() {
        let opts = CapacityOptions {
            grid_step: 0.01,
            refine_tol: 1e-9,
        };
        assert!(capacity(&reference_channel(), opts).is_err());
    }

    #[test]
    fn dispersion_matches_bsc_closed_form() {
        for &(zeta, q0) in &[(0.2, 1.0), (0.4, 0.25), (0.9, 0.5)] {
            let ch = constant(zeta, q0);
            let e: f64 = zeta * q0;
            let v = dispersion(&ch, InputParam::new(0.5).unwrap()).unwrap();
            let closed = e * (1.0 - e) * ((1.0 - e) / e).ln().powi(2);
            assert!((v - closed).abs() < 1e-12);
            // at p = 1/2 the density takes two values, so T has a closed form too
            let t = third_moment(&ch, InputParam::new(0.5).unwrap()).unwrap();
            let gap = ((1.0 - e) / e).ln().abs();
            let closed_t = e * (1.0 - e) * ((1.0 - e).powi(2) + e * e) * gap.powi(3);
            assert!((t - closed_t).abs() < 1e-12);
        }
    }

    #[test]
    fn moments_nonnegative() {
        let ch = reference_channel();
        for i in 1..100 {
            let m = moments(&ch, i as f64 / 100.0).unwrap();
            assert!(m.variance >= 0.0 && m.third_abs >= 0.0 && m.third_abs.is_finite());
        }
    }

    #[test]
    fn v_eps_case_split() {
        let s = ChannelStats::from_parts(0.1, vec![0.3, 0.6], vec![0.1, 0.3], vec![0.0, 0.0]);
        assert_eq!(s.v_eps(0.3).unwrap(), 0.3);
        assert_eq!(s.v_eps(0.7).unwrap(), 0.1);
        assert_eq!(s.v_eps(0.5).unwrap(), 0.3);
        let single = ChannelStats::from_parts(0.1, vec![0.4], vec![0.2], vec![0.0]);
        for eps in [0.01, 0.5, 0.99] {
            assert_eq!(single.v_eps(eps).unwrap(), 0.2);
        }
        let empty = ChannelStats::from_parts(0.1, vec![], vec![], vec![]);
        assert!(matches!(empty.v_eps(0.2), Err(Error::EmptyCapacitySet)));
    }

    #[test]
    fn input_param_bounds() {
        assert!(InputParam::new(0.0).is_err());
        assert!(InputParam::new(1.0).is_err());
        assert!(InputParam::new(0.3).is_ok());
    }
}
