use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use trapkit::dynamics::one_body_loading;
use trapkit::trace::DataTrace;

const BIN: &str = env!("CARGO_BIN_EXE_trapkit");

fn config(beta_rbcr: f64, beta_crrb: f64, noise: f64) -> String {
    format!(
        r#"{{
  "model": {{
    "loading_rate_rb": {{"value": 2.6e4, "unit": "atoms/s"}},
    "gamma_rb": {{"value": 0.1111111111111111, "unit": "1/s"}},
    "gamma_cr": {{"value": 0.1, "unit": "1/s"}},
    "beta_rbcr": {{"value": {beta_rbcr:e}, "unit": "m^3/s"}},
    "beta_crrb": {{"value": {beta_crrb:e}, "unit": "m^3/s"}},
    "overlap": {{"effective_volume": {{"value": 1.01167e-7, "unit": "m^3"}}}}
  }},
  "initial": {{"n_cr": {{"value": 5e7, "unit": "atoms"}}, "n_rb": {{"value": 0, "unit": "atoms"}}}},
  "sampling": {{"duration": {{"value": 40, "unit": "s"}}, "rate": {{"value": 5, "unit": "Hz"}}}},
  "noise": {{"relative_sigma": {{"value": {noise:e}, "unit": "1"}}}}
}}"#
    )
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("TRAPKIT_SEED")
        .output()
        .unwrap()
}

fn report(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn trace(path: &Path) -> DataTrace {
    DataTrace::from_csv(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn param(report: &Value, name: &str) -> f64 {
    report["results"]["fit"]["parameters"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["name"] == name)
        .unwrap()["value"]
        .as_f64()
        .unwrap()
}

#[test]
fn decoupled_simulation_matches_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), config(0.0, 0.0, 0.0)).unwrap();
    report(&run(
        dir.path(),
        &["simulate", "--config", "c.json", "--out", "o"],
    ));
    let rb = trace(&dir.path().join("o/trapkit_rb.csv"));
    let cr = trace(&dir.path().join("o/trapkit_cr.csv"));
    assert_eq!(rb.metadata["species"], "rb");
    for (i, &t) in rb.times.iter().enumerate() {
        let want = one_body_loading(2.6e4, 1.0 / 9.0, 0.0, t).unwrap();
        assert!((rb.values[i] - want).abs() <= 1e-6 * want.max(1.0));
        let want = 5e7 * (-0.1 * t).exp();
        assert!((cr.values[i] / want - 1.0).abs() < 1e-6);
    }
    let sidecar: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/trapkit.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["model"]["beta_rbcr"]["value"], 0.0);
    assert!(dir.path().join("o/trapkit_report.json").exists());
}

#[test]
fn interspecies_loss_depresses_rb() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.json"), config(0.0, 0.0, 0.0)).unwrap();
    std::fs::write(dir.path().join("b.json"), config(1e-15, 1e-15, 0.0)).unwrap();
    report(&run(
        dir.path(),
        &["simulate", "--config", "a.json", "--out", "a"],
    ));
    report(&run(
        dir.path(),
        &["simulate", "--config", "b.json", "--out", "b"],
    ));
    let free = trace(&dir.path().join("a/trapkit_rb.csv"));
    let lossy = trace(&dir.path().join("b/trapkit_rb.csv"));
    assert!(lossy.values.iter().zip(&free.values).all(|(l, f)| l <= f));
    let i = lossy.times.iter().position(|&t| t >= 10.0).unwrap();
    assert!(
        lossy.values[i] < 0.95 * free.values[i],
        "{} {}",
        lossy.values[i],
        free.values[i]
    );
}

#[test]
fn fits_recover_simulated_values() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), config(0.0, 0.0, 0.0)).unwrap();
    report(&run(
        dir.path(),
        &["simulate", "--config", "c.json", "--out", "o"],
    ));
    let loading = report(&run(dir.path(), &["fit", "loading", "o/trapkit_rb.csv"]));
    assert!((param(&loading, "loading_rate") / 2.6e4 - 1.0).abs() < 1e-6);
    let decay = report(&run(
        dir.path(),
        &["fit", "decay", "o/trapkit_cr.csv", "--out", "decay.json"],
    ));
    assert!((param(&decay, "lifetime") / 10.0 - 1.0).abs() < 1e-6);
    let written = std::fs::read_to_string(dir.path().join("decay.json")).unwrap();
    assert_eq!(
        serde_json::from_str::<Value>(&written).unwrap()["results"],
        decay["results"]
    );
}

#[test]
fn bad_inputs_fail_with_nonzero_status() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("empty.csv"), "").unwrap();
    let out = run(d, &["fit", "loading", "empty.csv"]);
    assert_eq!(out.status.code(), Some(65));

    std::fs::write(d.join("bad.csv"), "time_s,value\n0,1\n1,2\n2,nope\n").unwrap();
    let out = run(d, &["fit", "decay", "bad.csv"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
    assert!(!out.status.success());

    let missing_unit = config(0.0, 0.0, 0.0).replace(r#", "unit": "atoms/s""#, "");
    std::fs::write(d.join("m.json"), missing_unit).unwrap();
    assert_eq!(
        run(d, &["simulate", "--config", "m.json"]).status.code(),
        Some(78)
    );

    let out = run(d, &["overlap", "--z", "1", "--sigma-bar", "1 mm"]);
    assert_eq!(out.status.code(), Some(78));

    let out = run(
        d,
        &[
            "beta",
            "bounds",
            "--excess-rate",
            "1 atoms/s",
            "--factor-min",
            "2 1/m^3",
            "--factor-max",
            "1 1/m^3",
        ],
    );
    assert!(!out.status.success());

    let out = run(d, &["beta", "slope", "--alpha", "1 atoms/s"]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("--loading-rate") && err.contains("--factor"),
        "{err}"
    );

    assert_eq!(
        run(d, &["fit", "loading", "nowhere.csv"]).status.code(),
        Some(74)
    );
}

#[test]
fn sigma_p_command() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // γ_tot = γ_bg + σ_p Φ ρ_ee computed independently of the library
    let (gamma_bg, sigma_p) = (0.11, 1.1e-21);
    let photon = 6.62607015e-34 * 299_792_458.0 / 426e-9;
    let mut table =
        String::from("# rb_intensity_unit=mW/cm^2\n# ionizing_intensity_unit=mW/cm^2\n");
    table.push_str("rb_intensity,ionizing_intensity,gamma_tot\n");
    for i_rb in [20.0, 60.0, 100.0, 160.0] {
        let s = 7.0 / 15.0 * (i_rb * 10.0 / 16.0) / (1.0 + 4.0 * 2.25f64.powi(2));
        let rho = s / (2.0 * (s + 1.0));
        for i_p in [0.0, 100.0, 200.0, 400.0, 600.0] {
            let g = gamma_bg + sigma_p * (i_p * 10.0 / photon) * rho;
            table.push_str(&format!("{i_rb},{i_p},{g:.17e}\n"));
        }
    }
    std::fs::write(d.join("runs.csv"), &table).unwrap();
    let r = report(&run(d, &["sigma-p", "runs.csv"]));
    assert!((param(&r, "sigma_p") / sigma_p - 1.0).abs() < 1e-6);
    assert_eq!(r["results"]["background"], "pooled");
    assert_eq!(r["results"]["groups"].as_array().unwrap().len(), 4);

    let per_group = report(&run(
        d,
        &["sigma-p", "runs.csv", "--pool-gamma-bg", "false"],
    ));
    assert_eq!(per_group["results"]["background"], "per_group");
    let fixed = report(&run(d, &["sigma-p", "runs.csv", "--gamma-bg", "0.11 1/s"]));
    assert!((param(&fixed, "sigma_p") / sigma_p - 1.0).abs() < 1e-6);

    std::fs::write(
        d.join("zero.csv"),
        "rb_intensity,ionizing_intensity,gamma_tot\n20,0,0.11\n60,0,0.11\n",
    )
    .unwrap();
    assert!(!run(d, &["sigma-p", "zero.csv"]).status.success());

    std::fs::write(
        d.join("field.json"),
        r#"{"detuning": {"value": 2.25, "unit": "Gamma"}, "bogus": 1}"#,
    )
    .unwrap();
    assert_eq!(
        run(d, &["sigma-p", "runs.csv", "--field", "field.json"])
            .status
            .code(),
        Some(78)
    );
}

#[test]
fn beta_and_overlap_commands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let r = report(&run(
        d,
        &[
            "beta",
            "slope",
            "--alpha",
            "1.2e4 atoms/s",
            "--loading-rate",
            "2.6e4 atoms/s",
            "--factor",
            "1e21 1/m^3",
        ],
    ));
    assert!((r["results"]["beta_m3_per_s"].as_f64().unwrap() / 1.4e-17 - 1.0).abs() < 1e-12);
    assert_eq!(r["results"]["systematic_relative_error"], 0.8);

    let r = report(&run(
        d,
        &[
            "beta",
            "slope",
            "--alpha",
            "3e4 atoms/s",
            "--loading-rate",
            "2.6e4 atoms/s",
            "--factor",
            "1e21 1/m^3",
        ],
    ));
    assert_eq!(r["results"]["unphysical"], true);
    assert!(!r["warnings"].as_array().unwrap().is_empty());

    let r = report(&run(d, &["overlap", "--z", "1 mm", "--sigma-bar", "0 mm"]));
    assert_eq!(r["results"]["varsigma"], 1.0);
    assert_eq!(
        r["results"]["effective_volume_m3"],
        r["results"]["mt_volume_m3"]
    );
    let r = report(&run(d, &["overlap", "--z", "1 mm", "--sigma-bar", "1 mm"]));
    assert!((r["results"]["varsigma"].as_f64().unwrap() - 0.2484).abs() < 1e-4);
    assert_eq!(r["results"]["branch"], "exact");
    let r = report(&run(d, &["overlap", "--z", "1 mm", "--sigma-bar", "30 mm"]));
    assert_eq!(r["results"]["branch"], "asymptotic");
}

#[test]
fn beta_from_simulated_traces() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("with.json"), config(1.4e-17, 1e-15, 0.0)).unwrap();
    let reference =
        config(1.4e-17, 1e-15, 0.0).replace(r#""n_cr": {"value": 5e7"#, r#""n_cr": {"value": 0"#);
    std::fs::write(d.join("ref.json"), reference).unwrap();
    report(&run(
        d,
        &["simulate", "--config", "with.json", "--out", "w"],
    ));
    report(&run(d, &["simulate", "--config", "ref.json", "--out", "r"]));
    let r = report(&run(
        d,
        &[
            "beta",
            "slope",
            "--reference",
            "r/trapkit_rb.csv",
            "--with-cr",
            "w/trapkit_rb.csv",
            "--cr",
            "w/trapkit_cr.csv",
            "--volume",
            "1.01167e-7 m^3",
            "--window",
            "10",
            "--mean-speed",
            "0.344 m/s",
        ],
    ));
    let beta = r["results"]["beta_m3_per_s"].as_f64().unwrap();
    assert!((beta / 1.4e-17 - 1.0).abs() < 0.15, "{beta}");
    assert!(r["results"]["inelastic_cross_section_m2"].as_f64().unwrap() > 0.0);
}

#[test]
fn bounds_from_simulated_traces_bracket_truth() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let truth = 1e-15;
    let factor = 5e19;
    let with = config(0.0, truth, 0.0).replace(
        r#""overlap""#,
        &format!(r#""interaction": {{"constant_factor": {{"value": {factor:e}, "unit": "1/m^3"}}}}, "overlap""#),
    );
    let without = config(0.0, 0.0, 0.0);
    std::fs::write(d.join("with.json"), with).unwrap();
    std::fs::write(d.join("without.json"), without).unwrap();
    report(&run(
        d,
        &["simulate", "--config", "with.json", "--out", "w"],
    ));
    report(&run(
        d,
        &["simulate", "--config", "without.json", "--out", "n"],
    ));
    let r = report(&run(
        d,
        &[
            "beta",
            "bounds",
            "--without",
            "n/trapkit_cr.csv",
            "--with",
            "w/trapkit_cr.csv",
            "--gamma",
            "0.1 1/s",
            "--factor-min",
            "2e19 1/m^3",
            "--factor-max",
            "2.34e20 1/m^3",
        ],
    ));
    let lo = r["results"]["beta_lower_m3_per_s"].as_f64().unwrap();
    let hi = r["results"]["beta_upper_m3_per_s"].as_f64().unwrap();
    assert!(lo <= truth && truth <= hi, "{lo} {hi}");
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("c.json"), config(0.0, 0.0, 0.05)).unwrap();
    let seed_of = |args: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(BIN);
        cmd.args(args).current_dir(d).env_remove("TRAPKIT_SEED");
        if let Some(v) = env {
            cmd.env("TRAPKIT_SEED", v);
        }
        let out = cmd.output().unwrap();
        report(&out)["seed"].as_u64().unwrap()
    };
    assert_eq!(
        seed_of(&["simulate", "--config", "c.json", "--out", "x"], None),
        0
    );
    assert_eq!(
        seed_of(&["simulate", "--config", "c.json", "--out", "x"], Some("9")),
        9
    );
    assert_eq!(
        seed_of(
            &["simulate", "--config", "c.json", "--out", "x", "--seed", "4"],
            Some("9")
        ),
        4
    );
    let a = std::fs::read(d.join("x/trapkit_rb.csv")).unwrap();
    seed_of(
        &[
            "simulate", "--config", "c.json", "--out", "x", "--seed", "5",
        ],
        None,
    );
    assert_ne!(a, std::fs::read(d.join("x/trapkit_rb.csv")).unwrap());
}

#[test]
fn digest_tracks_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("t.csv"),
        "time_s,value\n0,10\n1,8\n2,6.5\n3,5.3\n4,4.3\n5,3.5\n6,2.9\n",
    )
    .unwrap();
    let a = report(&run(d, &["fit", "decay", "t.csv"]));
    std::fs::write(
        d.join("t.csv"),
        "time_s,value\n0,10\n1,8\n2,6.5\n3,5.3\n4,4.3\n5,3.5\n6,2.8\n",
    )
    .unwrap();
    let b = report(&run(d, &["fit", "decay", "t.csv"]));
    assert_ne!(a["config_digest"], b["config_digest"]);
    let c = report(&run(d, &["fit", "decay", "t.csv"]));
    assert_eq!(b["config_digest"], c["config_digest"]);
}
