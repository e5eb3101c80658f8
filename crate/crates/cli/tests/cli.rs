//! Command-line behavior: exit codes, JSON round trips, seeded determinism.

use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;

use elldlog::commands::toy_presentation;
use elldlog::json::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_elldlog"))
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("elldlog-test-{}-{name}", std::process::id()));
    p
}

fn write_toy_presentation() -> PathBuf {
    let pres = toy_presentation().unwrap();
    let path = tmp("toy-pres.json");
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&presentation_to_json(&pres)).unwrap(),
    )
    .unwrap();
    path
}

#[test]
fn present_rejects_bad_degree() {
    let out = bin()
        .args(["present", "-p", "3", "-n", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_file_is_a_domain_error() {
    let out = bin()
        .args(["traps", "--pres", "/nonexistent/x.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn presentation_json_round_trips() {
    let pres = toy_presentation().unwrap();
    let j = presentation_to_json(&pres);
    let text = serde_json::to_string(&j).unwrap();
    let back: PresentationJson = serde_json::from_str(&text).unwrap();
    let pres2 = presentation_from_json(&back).unwrap();
    assert_eq!(pres2.mu(), pres.mu());
    assert_eq!(pres2.p0(), pres.p0());
    assert_eq!(pres2.n(), pres.n());
}

#[test]
fn custom_present_emits_reloadable_json() {
    let path = tmp("present-out.json");
    let out = bin()
        .args([
            "present",
            "-p",
            "3",
            "--curve",
            r#"{"a1":[],"a2":[],"a3":[],"a4":[1],"a6":[]}"#,
            "--p0",
            r#"{"x":[2],"y":[1]}"#,
            "-o",
            path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let j: PresentationJson = serde_json::from_str(&text).unwrap();
    let pres = presentation_from_json(&j).unwrap();
    assert_eq!(pres.n(), 4);
    std::fs::remove_file(&path).ok();
}

#[test]
fn traps_report_is_deterministic_and_bounded() {
    let pres_path = write_toy_presentation();
    let run = || {
        let out = bin()
            .args(["traps", "--pres", pres_path.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    let count = v["point_count"].as_u64().unwrap();
    let bound = v["bound"].as_u64().unwrap();
    assert!(count < bound);
    std::fs::remove_file(&pres_path).ok();
}

#[test]
fn descend_step_emits_certificate() {
    use elldlog_core::descent::{DescentConfig, DescentEngine};
    use elldlog_core::divisors::{point_fq_divisor, Divisor};
    use elldlog_core::ff::{build_extension, frobenius_power};
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    let pres = toy_presentation().unwrap();
    let pres_path = write_toy_presentation();
    // craft a degree-3 orbit divisor over k = F_{3^4}
    let mut engine = DescentEngine::new(pres, DescentConfig::default()).unwrap();
    let ctx = engine.level(4).unwrap();
    let ext = build_extension(&ctx.k, 3).unwrap();
    let big = Arc::new(ctx.curve_k.base_change(&ext.embed_base).unwrap());
    let mut rng = ChaCha12Rng::seed_from_u64(5);
    let div = loop {
        let pt = big.random_affine_point(&mut rng);
        let (x, _) = pt.xy().unwrap();
        if frobenius_power(x, 81, 1) == *x {
            continue;
        }
        let d = point_fq_divisor(&ctx.curve_k, &ext.embed_base, &pt).unwrap();
        if d.degree() == 3 && !ctx.trap_keys_k.contains(&d) && !ctx.p1_keys_k.contains(&d) {
            break d;
        }
    };
    let dpath = tmp("divisor.json");
    let single = Divisor::from_terms(&ctx.k, vec![(div, 1)]);
    std::fs::write(
        &dpath,
        serde_json::to_string(&divisor_to_json(&single)).unwrap(),
    )
    .unwrap();
    let out = bin()
        .args([
            "descend",
            "--pres",
            pres_path.to_str().unwrap(),
            "--divisor",
            dpath.to_str().unwrap(),
            "--level",
            "4",
            "--seed",
            "11",
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_str(
        std::str::from_utf8(&out.stdout).unwrap(),
    )
    .unwrap();
    assert!(v["certificate"]["matrix"]["a"].is_array());
    assert!(v["d_prime"].is_array());
    std::fs::remove_file(&pres_path).ok();
    std::fs::remove_file(&dpath).ok();
}

#[test]
fn solve_is_reproducible_for_a_fixed_seed() {
    let pres_path = write_toy_presentation();
    let run = |seed: &str| {
        let out = bin()
            .args([
                "solve",
                "--pres",
                pres_path.to_str().unwrap(),
                "-g",
                "[[0],[2],[0],[1]]",
                "--h",
                "[[1],[1],[2]]",
                "--m",
                "3",
                "--seed",
                seed,
            ])
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    };
    let a = run("9");
    let b = run("9");
    assert_eq!(a, b);
    // the answer itself verifies
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    let z = v["z"].as_str().unwrap();
    let out = bin()
        .args([
            "verify",
            "--pres",
            pres_path.to_str().unwrap(),
            "-g",
            "[[0],[2],[0],[1]]",
            "--h",
            "[[1],[1],[2]]",
            "-z",
            z,
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value =
        serde_json::from_str(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(v["valid"], serde_json::Value::Bool(true));
    std::fs::remove_file(&pres_path).ok();
}

#[test]
fn env_seed_is_honored() {
    let pres_path = write_toy_presentation();
    let run_env = |seed: &str| {
        let out = bin()
            .env("ELLDLOG_SEED", seed)
            .args([
                "solve",
                "--pres",
                pres_path.to_str().unwrap(),
                "-g",
                "[[0],[2],[0],[1]]",
                "--h",
                "[[2],[1]]",
                "--m",
                "3",
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    assert_eq!(run_env("4"), run_env("4"));
    std::fs::remove_file(&pres_path).ok();
}

#[test]
fn config_file_keys_apply() {
    let cfg_path = tmp("cfg.txt");
    std::fs::write(&cfg_path, "seed=3\n# comment\nfb-bound=2\n").unwrap();
    let pres_path = write_toy_presentation();
    let out = bin()
        .args([
            "solve",
            "--pres",
            pres_path.to_str().unwrap(),
            "-g",
            "[[0],[2],[0],[1]]",
            "--h",
            "[[1],[2]]",
            "--m",
            "3",
            "--config",
            cfg_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    std::fs::remove_file(&cfg_path).ok();
    std::fs::remove_file(&pres_path).ok();
}

#[test]
fn selftest_rejects_unknown_level() {
    let out = bin().args(["selftest", "--level", "bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
