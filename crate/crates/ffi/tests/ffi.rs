use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use qtrack_ffi::*;

unsafe fn last_error() -> String {
    let p = qtrack_last_error_message();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_string_lossy().into_owned()
}

struct Handles {
    ch: *mut QtrackChannel,
    stats: *mut QtrackStats,
}

impl Handles {
    fn reference_channel() -> Self {
        unsafe {
            let mut ch = ptr::null_mut();
            assert_eq!(qtrack_channel_new(0.2, 2.0, 0.5, &mut ch), QTRACK_OK);
            let mut stats = ptr::null_mut();
            assert_eq!(qtrack_stats_compute(ch, &mut stats), QTRACK_OK);
            Handles { ch, stats }
        }
    }
}

impl Drop for Handles {
    fn drop(&mut self) {
        unsafe {
            qtrack_stats_free(self.stats);
            qtrack_channel_free(self.ch);
        }
    }
}

#[test]
fn stats_match_the_library() {
    let h = Handles::reference_channel();
    let ch = qtrack::ChannelSpec::from_params(0.2, 2.0, 0.5).unwrap();
    let lib = qtrack::ChannelStats::compute(&ch, Default::default()).unwrap();
    unsafe {
        assert_eq!(qtrack_stats_capacity(h.stats), lib.capacity);
        let mut p = 0.0;
        assert_eq!(qtrack_stats_p_star(h.stats, &mut p), QTRACK_OK);
        assert_eq!(p, lib.p_star().unwrap());
        let mut v = 0.0;
        assert_eq!(qtrack_stats_dispersion(h.stats, 0.1, &mut v), QTRACK_OK);
        assert_eq!(v, lib.v_eps(0.1).unwrap());
        assert!((qtrack_critical_rate(1, h.stats) - lib.capacity / 2.0).abs() < 1e-15);

        let mut q = 0.0;
        assert_eq!(qtrack_channel_crossover(h.ch, 0.5, &mut q), QTRACK_OK);
        assert!((q - 0.2 * 1.5).abs() < 1e-15);
    }
}

#[test]
fn resolution_and_excess_probability_invert() {
    let h = Handles::reference_channel();
    unsafe {
        let mut log_delta = 0.0;
        assert_eq!(qtrack_log_resolution_approx(500, 1, 0.2, h.stats, &mut log_delta), QTRACK_OK);
        let mut eps = 0.0;
        assert_eq!(qtrack_excess_prob_approx(500, 1, log_delta, h.stats, &mut eps), QTRACK_OK);
        assert!((eps - 0.2).abs() < 1e-9);
    }
}

#[test]
fn errors_set_codes_and_messages() {
    let h = Handles::reference_channel();
    unsafe {
        let mut ch = ptr::null_mut();
        assert_eq!(qtrack_channel_new(0.9, 2.0, 0.5, &mut ch), QTRACK_ERR_INVALID);
        assert!(ch.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(qtrack_channel_new(0.2, 2.0, 0.5, ptr::null_mut()), QTRACK_ERR_NULL);
        assert!(last_error().contains("out_channel"));

        let mut eps = 0.0;
        assert_ne!(qtrack_log_resolution_approx(500, 1, 1.5, h.stats, &mut eps), QTRACK_OK);

        let mut s = ptr::null_mut();
        assert_eq!(qtrack_scheme_new(h.ch, 1e-4, 200, 1, 0.005, 0.23, 1, 1000, &mut s), QTRACK_ERR_BUDGET);
        assert!(last_error().contains("budget"));

        let mut lo = 0.0;
        let mut hi = 0.0;
        assert_eq!(qtrack_wilson_ci(5, 3, 0.95, &mut lo, &mut hi), QTRACK_ERR_INVALID);

        assert!(qtrack_stats_capacity(ptr::null()).is_nan());
        qtrack_channel_free(ptr::null_mut());
    }
}

#[test]
fn scheme_decodes_its_own_noiseless_answers() {
    let h = Handles::reference_channel();
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(qtrack_scheme_new(h.ch, 0.05, 40, 1, 0.0, 0.23, 9, 1 << 20, &mut s), QTRACK_OK);
        assert_eq!(qtrack_scheme_hypotheses(s), 20);
        let (loc, vel) = ([0.42], [0.0]);
        let mut bits = vec![0u8; 40];
        assert_eq!(qtrack_scheme_answers(s, loc.as_ptr(), vel.as_ptr(), 1, bits.as_mut_ptr(), 40), QTRACK_OK);
        let mut idx = usize::MAX;
        let mut s_hat = [0.0];
        assert_eq!(
            qtrack_scheme_decode(s, bits.as_ptr(), 40, &mut idx, s_hat.as_mut_ptr(), ptr::null_mut()),
            QTRACK_OK
        );
        assert!((s_hat[0] - 0.42).abs() <= 0.05);

        bits[0] = 2;
        assert_eq!(qtrack_scheme_decode(s, bits.as_ptr(), 40, &mut idx, ptr::null_mut(), ptr::null_mut()), QTRACK_ERR_INVALID);
        assert_eq!(qtrack_scheme_decode(s, bits.as_ptr(), 39, &mut idx, ptr::null_mut(), ptr::null_mut()), QTRACK_ERR_LENGTH);
        qtrack_scheme_free(s);
    }
}

#[test]
fn simulate_matches_the_harness() {
    let h = Handles::reference_channel();
    let deltas = [0.1, 0.02];
    let mut rows = [QtrackSummary::default(); 2];
    unsafe {
        let rc = qtrack_simulate(h.ch, 30, 1, 1.0 / 30.0, deltas.as_ptr(), 2, 300, 4, QTRACK_PRIOR_UNIFORM, 0, 0.0, rows.as_mut_ptr());
        assert_eq!(rc, QTRACK_OK);
    }
    let ch = qtrack::ChannelSpec::from_params(0.2, 2.0, 0.5).unwrap();
    let mut plan = qtrack::ExperimentPlan::new(ch, 30, 1, 1.0 / 30.0, deltas.to_vec());
    plan.trials = 300;
    plan.seed = 4;
    let want = qtrack::estimate_excess_prob(&plan).unwrap();
    for (got, want) in rows.iter().zip(&want) {
        assert_eq!(got.excess, want.excess);
        assert_eq!(got.p_hat, want.p_hat);
        assert_eq!(got.trials, 300);
    }
    unsafe {
        let rc = qtrack_simulate(h.ch, 30, 1, 0.0, deltas.as_ptr(), 2, 10, 4, 99, 0, 0.0, rows.as_mut_ptr());
        assert_eq!(rc, QTRACK_ERR_INVALID);
    }
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn cc_available() -> bool {
    Command::new("cc").arg("--version").output().is_ok_and(|o| o.status.success())
}

#[test]
fn header_compiles_as_c_and_cpp() {
    if !cc_available() {
        eprintln!("cc not found; skipping header check");
        return;
    }
    let header = crate_dir().join("include/qtrack.h");
    for lang in ["c", "c++"] {
        let out = Command::new("cc")
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(&header)
            .output()
            .unwrap();
        assert!(out.status.success(), "{lang}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

fn static_lib() -> Option<PathBuf> {
    // test binary lives in target/<profile>/deps
    let exe = std::env::current_exe().ok()?;
    let lib = exe.parent()?.parent()?.join("libqtrack_ffi.a");
    lib.exists().then_some(lib)
}

const PROGRAM: &str = r#"
#include <stdio.h>
#include "qtrack.h"

int main(void) {
    QtrackChannel *ch = NULL;
    QtrackStats *st = NULL;
    if (qtrack_channel_new(0.2, 2.0, 0.5, &ch) != QTRACK_OK) return 10;
    if (qtrack_stats_compute(ch, &st) != QTRACK_OK) return 11;
    double p = 0.0;
    if (qtrack_stats_p_star(st, &p) != QTRACK_OK) return 12;
    if (qtrack_channel_new(5.0, 2.0, 0.5, NULL) != QTRACK_ERR_NULL) return 13;
    printf("%.9f %.6f %s\n", qtrack_stats_capacity(st), p, qtrack_version());
    qtrack_stats_free(st);
    qtrack_channel_free(ch);
    return 0;
}
"#;

fn compile_and_run(dir: &Path, lib: &Path) -> String {
    let src = dir.join("main.c");
    let exe = dir.join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let out = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert_eq!(run.status.code(), Some(0));
    String::from_utf8(run.stdout).unwrap()
}

#[test]
fn c_program_links_against_static_library() {
    let Some(lib) = static_lib().filter(|_| cc_available()) else {
        eprintln!("cc or static library not found; skipping link check");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let line = compile_and_run(dir.path(), &lib);
    let mut parts = line.split_whitespace();
    let c: f64 = parts.next().unwrap().parse().unwrap();
    let p: f64 = parts.next().unwrap().parse().unwrap();
    assert!((c - 0.147_644_216).abs() < 1e-8, "{line}");
    assert!((p - 0.230_18).abs() < 1e-5, "{line}");
    assert_eq!(parts.next().unwrap(), env!("CARGO_PKG_VERSION"));
}
