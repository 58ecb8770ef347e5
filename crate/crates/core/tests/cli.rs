use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use otima::analysis::{saturation_model, FluencePoint};
use otima::io::write_fluence_csv;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn otima(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otima"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn body(path: &Path) -> String {
    // drop the provenance comment and compare the table itself
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn scan_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.csv");
    let argon = scenario("argon_n1.toml");
    let o = otima(&["scan", s(&argon), "--model", "both", "-o", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# otima "));
    assert_eq!(lines.next().unwrap(), "tau_ns,S_res,S_off,S_N,sigma_SN,model");
    assert_eq!(text.lines().filter(|l| l.ends_with(",quantum")).count(), 21);
    assert_eq!(text.lines().filter(|l| l.ends_with(",classical")).count(), 21);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("scan.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["scenario_sha256"].as_str().unwrap().len(), 64);
    assert!(text.contains(meta["scenario_sha256"].as_str().unwrap()));
    assert_eq!(meta["approximations"]["g1_absorptive"], false);
    assert!(meta["derived"]["talbot_time"].as_f64().unwrap() > 29e-6);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let helium = scenario("helium_n_half.toml");
    for jobs in ["1", "4"] {
        let scan = dir.path().join(format!("scan{jobs}.csv"));
        let sweep = dir.path().join(format!("sweep{jobs}.csv"));
        assert!(
            otima(&["-j", jobs, "scan", s(&helium), "--model", "both", "-o", s(&scan)])
                .status
                .success()
        );
        let o = otima(&[
            "-j",
            jobs,
            "sweep",
            s(&helium),
            "--param",
            "gratings.*.n0_eff",
            "--values",
            "12,3,6,4",
            "--model",
            "both",
            "-o",
            s(&sweep),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let p = |n: &str| dir.path().join(n);
    assert_eq!(body(&p("scan1.csv")), body(&p("scan4.csv")));
    assert_eq!(body(&p("sweep1.csv")), body(&p("sweep4.csv")));
    let sweep = body(&p("sweep1.csv"));
    let values: Vec<f64> = sweep
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(values, vec![3.0, 3.0, 4.0, 4.0, 6.0, 6.0, 12.0, 12.0]);
}

#[test]
fn sweep_rejects_unknown_paths() {
    let o = otima(&[
        "sweep",
        s(&scenario("argon_n1.toml")),
        "--param",
        "gratings.*.colour",
        "--values",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gratings.*.colour"));
}

#[test]
fn validate_passes_and_detects_corruption() {
    let argon = scenario("argon_n1.toml");
    let o = otima(&["validate", s(&argon), "--oracle", "wave"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["report"]["pass"], true);
    assert!(report["report"]["max_deviation_tau"].is_number());

    let bad = otima(&[
        "validate",
        s(&argon),
        "--oracle",
        "wave",
        "--perturb-analytic",
        "molecule.beta=0.3",
    ]);
    assert_eq!(bad.status.code(), Some(3));
}

#[test]
fn validate_monte_carlo_small() {
    let o = otima(&[
        "validate",
        s(&scenario("argon_n1.toml")),
        "--oracle",
        "mc",
        "--particles",
        "50000",
        "--tolerance",
        "4",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["model"], "classical");
    assert!(report["report"]["max_sigma_deviation"].as_f64().unwrap() < 4.0);
}

#[test]
fn fringe_fit_round_trip_with_angles() {
    let dir = tempfile::tempdir().unwrap();
    let argon = scenario("argon_n1.toml");
    let scan = dir.path().join("scan.csv");
    assert!(otima(&["scan", s(&argon), "-o", s(&scan)]).status.success());
    let o = otima(&[
        "fit",
        "fringe",
        s(&scan),
        "--scenario",
        s(&argon),
        "--free-phase",
        "--extract",
        "angles",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fit: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let alpha = fit["angles"]["alpha"].as_f64().unwrap();
    let gamma = fit["angles"]["gamma"].as_f64().unwrap();
    assert!((alpha / 0.4e-3 - 1.0).abs() < 5e-3, "{alpha}");
    assert!((gamma / 1.7e-3 - 1.0).abs() < 5e-3, "{gamma}");
    assert_eq!(fit["fit"]["phase_mode"], "free");
}

#[test]
fn fixed_phase_fit_needs_a_reference() {
    let dir = tempfile::tempdir().unwrap();
    let scan = dir.path().join("scan.csv");
    assert!(otima(&["scan", s(&scenario("argon_n1.toml")), "-o", s(&scan)])
        .status
        .success());
    assert_eq!(otima(&["fit", "fringe", s(&scan)]).status.code(), Some(2));
}

#[test]
fn fit_failures_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("few.csv");
    std::fs::write(
        &data,
        "tau_ns,S_res,S_off,S_N,sigma_SN\n0,1,1,0.1,0\n10,1,1,0.05,0\n20,1,1,0,0\n",
    )
    .unwrap();
    assert_eq!(
        otima(&["fit", "fringe", s(&data), "--tau-off-ns", "200"]).status.code(),
        Some(4)
    );
    let zeros = dir.path().join("zeros.csv");
    std::fs::write(&zeros, "fluence_per_cm2,counts\n0,0\n1e15,0\n2e15,0\n").unwrap();
    assert_eq!(otima(&["fit", "cross-section", s(&zeros)]).status.code(), Some(4));
}

#[test]
fn cross_section_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("fluence.csv");
    let sigma = 4.7e-20;
    let points: Vec<FluencePoint> = (0..10)
        .map(|i| {
            let fluence = i as f64 * 0.5 / sigma;
            FluencePoint {
                fluence,
                counts: saturation_model(sigma, 1000.0, fluence),
            }
        })
        .collect();
    write_fluence_csv(std::fs::File::create(&data).unwrap(), &points).unwrap();
    let o = otima(&["fit", "cross-section", s(&data)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fit: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let cm2 = fit["sigma_pi_cm2"].as_f64().unwrap();
    assert!((cm2 / 4.7e-16 - 1.0).abs() < 1e-6, "{cm2}");
}

#[test]
fn malformed_csv_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    std::fs::write(&data, "fluence_per_cm2,counts\n1e15,10\n2e15,x\n").unwrap();
    let o = otima(&["fit", "cross-section", s(&data)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.csv:3"), "{err}");
}

#[test]
fn dump_coefficients_lists_orders() {
    let o = otima(&[
        "dump-coefficients",
        s(&scenario("argon_n1.toml")),
        "--tau-ns",
        "20",
        "--model",
        "both",
    ]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("model,l,chi1,B1_minus_l"));
    assert!(text.lines().any(|l| l.starts_with("classical,1,")));
}

#[test]
fn overrides_apply_and_bad_ones_are_usage_errors() {
    let argon = scenario("argon_n1.toml");
    let a = otima(&["scan", s(&argon)]);
    let b = otima(&["scan", s(&argon), "--set", "beam.tilt_mrad=2.0"]);
    assert!(a.status.success() && b.status.success());
    assert_ne!(a.stdout, b.stdout);
    assert_eq!(
        otima(&["scan", s(&argon), "--set", "beam.tilt_mrad"]).status.code(),
        Some(2)
    );
}
