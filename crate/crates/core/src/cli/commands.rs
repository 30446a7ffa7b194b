use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use super::config::{pick, require, FileConfig, Format, PriorKind};
use super::{ChannelArgs, CliError, CurveArgs, LimitsArgs, SimulateArgs, TrackArgs, ValidateArgs};
use crate::channel::ChannelSpec;
use crate::harness::{codebook_seed, derive_seed, estimate_with_stats, sample_initial, ExperimentPlan, Prior};
use crate::info::{CapacityOptions, ChannelStats};
use crate::limits::{
    excess_prob_approx, phase_curve, velocity_regime, LimitReport, COEFFICIENT_NOTE,
};
use crate::motion::{locate_scalar, unwrapped_position, TargetState};
use crate::scheme::{Scheme, DEFAULT_BUDGET};
use crate::VERSION;

pub(super) struct Context {
    pub file: FileConfig,
    pub config_path: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Context {
    /// Raw inputs as given, for manifests.
    fn inputs<A: Serialize>(&self, command: &str, flags: &A) -> serde_json::Value {
        json!({
            "command": command,
            "version": VERSION,
            "flags": flags,
            "config_file": self.config_path.as_ref().map(|p| json!({
                "path": p,
                "values": &self.file,
            })),
        })
    }
}

fn usage(key: &'static str) -> impl Fn(crate::Error) -> CliError {
    move |e| CliError::Usage(format!("invalid `{key}`: {e}"))
}

fn channel(ctx: &Context, a: &ChannelArgs) -> Result<ChannelSpec, CliError> {
    let f = &ctx.file;
    let zeta = require(&a.zeta, &f.zeta, "zeta")?;
    let slope = require(&a.slope, &f.slope, "slope")?;
    let intercept = require(&a.intercept, &f.intercept, "intercept")?;
    ChannelSpec::from_params(zeta, slope, intercept).map_err(usage("zeta"))
}

fn positive(v: usize, key: &'static str) -> Result<usize, CliError> {
    if v == 0 {
        Err(CliError::Usage(format!("`{key}` must be at least 1")))
    } else {
        Ok(v)
    }
}

fn default_v_max(v: Option<f64>, n: usize) -> Result<f64, CliError> {
    let v = v.unwrap_or(1.0 / n as f64);
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("invalid `v_max`: {v} must be finite and >= 0")))
    }
}

fn stats_for(ch: &ChannelSpec) -> Result<ChannelStats, CliError> {
    Ok(ChannelStats::compute(ch, CapacityOptions::default())?)
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(File::create(p).map_err(|e| {
            CliError::Io(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn stats_json(stats: &ChannelStats) -> serde_json::Value {
    json!({
        "capacity": stats.capacity,
        "p_ca": stats.p_ca,
        "dispersion": stats.v_at_pca,
        "third_abs_moment": stats.t_at_pca,
        "singleton": stats.is_singleton(),
        "units": {
            "capacity": "nats/query",
            "dispersion": "nats^2/query",
            "third_abs_moment": "nats^3/query",
        },
    })
}

pub(super) fn limits(ctx: &Context, a: &LimitsArgs) -> Result<(), CliError> {
    let f = &ctx.file;
    let ch = channel(ctx, &a.channel)?;
    let n = positive(require(&a.n, &f.n, "n")?, "n")?;
    let d = positive(pick(&a.d, &f.d).unwrap_or(1), "d")?;
    let eps = require(&a.eps, &f.eps, "eps")?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CliError::Usage(format!("invalid `eps`: {eps} is outside (0, 1)")));
    }
    let delta = pick(&a.delta, &f.delta);
    let v_max = default_v_max(pick(&a.v_max, &f.v_max), n)?;
    let out = pick(&a.out, &f.out);

    let stats = stats_for(&ch)?;
    let report = LimitReport::compute(n, d, eps, v_max, &stats)?;
    let eps_at_delta = match delta {
        Some(dl) => Some(excess_prob_approx(n, d, dl, &stats).map_err(usage("delta"))?),
        None => None,
    };
    let value = json!({
        "inputs": ctx.inputs("limits", a),
        "effective": { "channel": ch, "n": n, "d": d, "eps": eps, "delta": delta, "v_max": v_max },
        "warnings": ch.warnings(),
        "stats": stats_json(&stats),
        "limits": report,
        "eps_at_delta": eps_at_delta,
        "units": { "log_delta_approx": "nats", "critical_rate": "nats/query" },
        "note": COEFFICIENT_NOTE,
    });
    write_json(out.as_deref(), &value)
}

pub(super) fn curve(ctx: &Context, a: &CurveArgs) -> Result<(), CliError> {
    let f = &ctx.file;
    let ch = channel(ctx, &a.channel)?;
    let n = positive(require(&a.n, &f.n, "n")?, "n")?;
    let d = positive(pick(&a.d, &f.d).unwrap_or(1), "d")?;
    let v_max = default_v_max(pick(&a.v_max, &f.v_max), n)?;
    let points = pick(&a.points, &f.points).unwrap_or(101);
    let format = pick(&a.format, &f.format).unwrap_or_default();
    let out = pick(&a.out, &f.out);
    let meta = pick(&a.meta, &f.meta).or_else(|| out.as_ref().map(|p| with_suffix(p, ".json")));

    let stats = stats_for(&ch)?;
    let critical = stats.capacity / (2.0 * d as f64);
    let rate_min = pick(&a.rate_min, &f.rate_min).unwrap_or(0.5 * critical);
    let rate_max = pick(&a.rate_max, &f.rate_max).unwrap_or(1.5 * critical);
    let curve = phase_curve(n, d, &stats, rate_min, rate_max, points).map_err(usage("rate_min"))?;
    let regime = velocity_regime(n, v_max)?;

    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink(out.as_deref())?);
            w.write_record(["rate", "eps_hat"])?;
            for &(r, e) in &curve.points {
                w.serialize((r, e))?;
            }
            w.flush()?;
        }
        Format::Json => write_json(out.as_deref(), &curve)?,
    }
    if let Some(meta) = meta {
        let value = json!({
            "inputs": ctx.inputs("curve", a),
            "channel": ch,
            "n": n,
            "d": d,
            "v_max": v_max,
            "C": stats.capacity,
            "V": stats.v_at_pca,
            "p_ca": stats.p_ca,
            "critical_rate": curve.critical_rate,
            "critical_index": curve.critical_index,
            "regime": regime,
            "caveat": regime.caveat(),
            "units": { "C": "nats/query", "V": "nats^2/query", "rate": "nats/query" },
            "note": COEFFICIENT_NOTE,
        });
        write_json(Some(&meta), &value)?;
    }
    Ok(())
}

fn build_prior(
    kind: PriorKind,
    grid_points: usize,
    s: Option<Vec<f64>>,
    v: Option<Vec<f64>>,
    d: usize,
    v_max: f64,
) -> Result<Prior, CliError> {
    Ok(match kind {
        PriorKind::UniformProduct => Prior::UniformProduct,
        PriorKind::Representative => Prior::Representative,
        PriorKind::WorstCaseGrid => {
            positive(grid_points, "grid_points")?;
            Prior::WorstCaseGrid { points: grid_points }
        }
        PriorKind::FixedState => {
            let s = s.ok_or_else(|| CliError::Usage("fixed-state prior needs `s`".into()))?;
            let v = v.unwrap_or_else(|| vec![0.0; s.len()]);
            if s.len() != d {
                return Err(CliError::Usage(format!("`s` has {} entries, d = {d}", s.len())));
            }
            Prior::FixedState {
                state: TargetState::new(s, v, v_max).map_err(usage("s"))?,
            }
        }
    })
}

#[derive(Serialize)]
struct SimulateManifest<'a> {
    inputs: serde_json::Value,
    plan: &'a ExperimentPlan,
    p: f64,
    seeds: serde_json::Value,
    channel_stats: serde_json::Value,
    threads: Option<usize>,
    wall_time_s: f64,
}

pub(super) fn simulate(ctx: &Context, a: &SimulateArgs) -> Result<(), CliError> {
    let f = &ctx.file;
    let ch = channel(ctx, &a.channel)?;
    let n = positive(require(&a.n, &f.n, "n")?, "n")?;
    let d = positive(pick(&a.d, &f.d).unwrap_or(1), "d")?;
    let v_max = default_v_max(pick(&a.v_max, &f.v_max), n)?;
    let deltas = match (&a.deltas, &a.rates) {
        (Some(ds), _) => ds.clone(),
        (None, Some(rs)) => ExperimentPlan::deltas_from_rates(n, rs),
        (None, None) => match (&f.deltas, &f.rates) {
            (Some(ds), _) => ds.clone(),
            (None, Some(rs)) => ExperimentPlan::deltas_from_rates(n, rs),
            (None, None) => {
                return Err(CliError::Usage(
                    "missing required value `deltas` (pass --deltas or --rates, or set \"deltas\" or \"rates\" in the config file)".into(),
                ))
            }
        },
    };
    let prior_kind = pick(&a.prior, &f.prior).unwrap_or(PriorKind::UniformProduct);
    let prior = build_prior(
        prior_kind,
        pick(&a.grid_points, &f.grid_points).unwrap_or(3),
        pick(&a.s, &f.s),
        pick(&a.v, &f.v),
        d,
        v_max,
    )?;
    let mut plan = ExperimentPlan::new(ch, n, d, v_max, deltas);
    plan.trials = pick(&a.trials, &f.trials).unwrap_or(plan.trials);
    plan.seed = pick(&a.seed, &f.seed).unwrap_or(0);
    plan.prior = prior;
    plan.p = pick(&a.p, &f.p);
    plan.budget = pick(&a.budget, &f.budget).unwrap_or(DEFAULT_BUDGET);
    plan.fresh_codebook_per_trial =
        a.fresh_codebook_per_trial || f.fresh_codebook_per_trial.unwrap_or(false);
    plan.level = pick(&a.level, &f.level).unwrap_or(plan.level);
    if !(plan.level > 0.0 && plan.level < 1.0) {
        return Err(CliError::Usage(format!("invalid `level`: {} is outside (0, 1)", plan.level)));
    }
    plan.validate().map_err(usage("deltas"))?;
    let format = pick(&a.format, &f.format).unwrap_or_default();
    let out = pick(&a.out, &f.out);
    let manifest = pick(&a.manifest, &f.manifest)
        .or_else(|| out.as_ref().map(|p| with_suffix(p, ".manifest.json")));

    let started = Instant::now();
    let stats = stats_for(&ch)?;
    let p = match plan.p {
        Some(p) => p,
        None => stats.p_star()?,
    };
    let rows = estimate_with_stats(&plan, &stats)?;
    let wall = started.elapsed().as_secs_f64();

    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink(out.as_deref())?);
            for row in &rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Format::Json => write_json(out.as_deref(), &rows)?,
    }

    let codebook_seeds: Vec<u64> = (0..plan.deltas.len() as u64)
        .map(|di| codebook_seed(plan.seed, di))
        .collect();
    let record = SimulateManifest {
        inputs: ctx.inputs("simulate", a),
        plan: &plan,
        p,
        seeds: json!({
            "master": plan.seed,
            "codebook": codebook_seeds,
            "trial": "derive_seed(master, delta_index, trial_index)",
        }),
        channel_stats: stats_json(&stats),
        threads: ctx.threads,
        wall_time_s: wall,
    };
    match manifest {
        Some(path) => write_json(Some(&path), &record),
        None => {
            eprintln!("{}", serde_json::to_string_pretty(&record)?);
            Ok(())
        }
    }
}

pub(super) fn track(ctx: &Context, a: &TrackArgs) -> Result<(), CliError> {
    let f = &ctx.file;
    let ch = channel(ctx, &a.channel)?;
    let n = positive(require(&a.n, &f.n, "n")?, "n")?;
    let d = positive(pick(&a.d, &f.d).unwrap_or(1), "d")?;
    let v_max = default_v_max(pick(&a.v_max, &f.v_max), n)?;
    let delta = require(&a.delta, &f.delta, "delta")?;
    let seed = pick(&a.seed, &f.seed).unwrap_or(0);
    let budget = pick(&a.budget, &f.budget).unwrap_or(DEFAULT_BUDGET);
    let out = pick(&a.out, &f.out);
    let trajectory = pick(&a.trajectory, &f.trajectory);

    let stats = stats_for(&ch)?;
    let p = match pick(&a.p, &f.p) {
        Some(p) => p,
        None => stats.p_star()?,
    };
    let scheme = Scheme::plan(ch, delta, n, d, v_max, p, codebook_seed(seed, 0), budget)
        .map_err(|e| match e.root() {
            crate::Error::Budget { .. } => CliError::Runtime(e),
            _ => usage("delta")(e),
        })?;
    // same streams as trial 0 of a one-delta simulation
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, 0));
    let truth = match pick(&a.s, &f.s) {
        Some(s) => {
            let v = pick(&a.v, &f.v).unwrap_or_else(|| vec![0.0; s.len()]);
            if s.len() != d {
                return Err(CliError::Usage(format!("`s` has {} entries, d = {d}", s.len())));
            }
            TargetState::new(s, v, v_max).map_err(usage("s"))?
        }
        None => sample_initial(&Prior::UniformProduct, d, v_max, None, 0, &mut rng)?,
    };
    let r = scheme.run_episode(&truth, &mut rng)?;
    let grid = scheme.grid();

    let value = json!({
        "inputs": ctx.inputs("track", a),
        "effective": {
            "channel": ch, "n": n, "d": d, "v_max": v_max, "delta": delta,
            "seed": seed, "p": p, "budget": budget,
        },
        "grid": {
            "m_s": grid.m_s(),
            "m_v": grid.m_v(),
            "hypotheses": grid.hypotheses(),
            "guaranteed_error": grid.guaranteed_error(),
        },
        "truth": { "s": truth.location(), "v": truth.velocity() },
        "measures": scheme.measures(),
        "states": scheme.states(),
        "x": r.x,
        "y": r.y,
        "decoded": {
            "index": r.index,
            "s_hat": r.s_hat,
            "v_hat": r.v_hat,
            "score": r.score,
            "score_units": "nats",
        },
        "max_error": r.max_error,
        "excess": r.excess,
    });
    write_json(out.as_deref(), &value)?;

    if let Some(path) = trajectory {
        let mut w = csv::Writer::from_writer(sink(Some(&path))?);
        let mut header = vec!["t".to_string()];
        for i in 0..d {
            for col in ["loc", "unwrapped", "est_loc", "est_unwrapped"] {
                header.push(format!("{col}_{i}"));
            }
        }
        w.write_record(&header)?;
        for t in 0..=n {
            let tf = t as f64;
            let mut rec = vec![t.to_string()];
            for i in 0..d {
                let (s, v) = (truth.location()[i], truth.velocity()[i]);
                let (sh, vh) = (r.s_hat[i], r.v_hat[i]);
                for x in [
                    locate_scalar(s, v, tf),
                    unwrapped_position(s, v, tf),
                    locate_scalar(sh, vh, tf),
                    unwrapped_position(sh, vh, tf),
                ] {
                    rec.push(x.to_string());
                }
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    Ok(())
}

pub(super) fn validate_channel(ctx: &Context, a: &ValidateArgs) -> Result<(), CliError> {
    let f = &ctx.file;
    let ch = channel(ctx, &a.channel)?;
    let qs = pick(&a.q, &f.q).unwrap_or_else(|| vec![0.1, 0.3, 0.5, 0.7, 0.9]);
    let xis = pick(&a.xi, &f.xi).unwrap_or_else(|| vec![0.05, 0.01, 1e-3, 1e-4]);
    let out = pick(&a.out, &f.out);

    let mut matrices = Vec::new();
    let mut reports = Vec::new();
    let mut ok = true;
    for &q in &qs {
        if !(0.0..=1.0).contains(&q) {
            return Err(CliError::Usage(format!("invalid `q`: {q} is outside [0, 1]")));
        }
        let w = ch.transition_for_measure(q)?;
        let defect = w.stochasticity_defect();
        ok &= defect <= crate::channel::STOCHASTIC_TOL;
        matrices.push(json!({
            "measure": q,
            "state": crate::channel::state_of_measure(ch.size_map(), q)?,
            "rows": w.rows(),
            "stochasticity_defect": defect,
        }));
        for &xi in &xis {
            if q > 0.0 && q < 1.0 && xi > 0.0 && xi < q.min(1.0 - q) {
                let r = ch.verify_continuity(q, xi)?;
                ok &= r.ok;
                reports.push(r);
            }
        }
    }
    let value = json!({
        "inputs": ctx.inputs("validate-channel", a),
        "channel": ch,
        "lipschitz": ch.size_map().lipschitz(),
        "warnings": ch.warnings(),
        "transition_matrices": matrices,
        "continuity": reports,
        "ok": ok,
    });
    write_json(out.as_deref(), &value)?;
    if ok {
        Ok(())
    } else {
        Err(CliError::Runtime(crate::Error::InvalidParameter(
            "channel failed validation".into(),
        )))
    }
}
