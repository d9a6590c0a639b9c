use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_topo-superatom"));
    c.env_remove("TOPO_SUPERATOM_THREADS");
    c
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn missing_config_exits_2_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = run(&["transmit", "--config", tmp.path().join("absent.toml").to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn invalid_values_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        vec!["transmit", "--gamma-ab", "0.5"],
        vec!["transmit", "--set", "no_such_key=1"],
        vec!["edge-states", "--delta", "0.3"],
        vec!["coherence", "--target", "bulk:3"],
    ] {
        let o = run(&args, &tmp.path().join("x"));
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn transmit_three_curves_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "delta = 0.12\nn_cells = 100\ngamma_ab = [0.09]\ndetuning_points = 41\n").unwrap();
    let out = tmp.path().join("run");
    let o = run(
        &["transmit", "--config", cfg.to_str().unwrap(), "--target", "right", "--gamma-ab", "0,0.09,0.1"],
        &out,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty(), "progress must stay off stdout");
    let csv = std::fs::read_to_string(out.join("transmission.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "gamma_ab,detuning,transmission,re_chi,im_chi,dark");
    assert_eq!(csv.lines().count(), 1 + 3 * 41);
    let m = manifest(&out);
    assert_eq!(m["command"], "transmit");
    assert_eq!(m["config"]["gamma_ab"].as_array().unwrap().len(), 3);
    assert_eq!(m["config"]["target"], "right");
    for f in m["outputs"].as_array().unwrap() {
        assert!(out.join(f.as_str().unwrap()).exists());
    }
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn identical_config_gives_identical_csvs() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["disorder", "--n", "30", "--samples", "12", "--seed", "5", "--epsilon", "0.01"];
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(run(&args, &a).status.code(), Some(0));
    let o = bin().args(args).arg("--out").arg(&b).env("TOPO_SUPERATOM_THREADS", "2").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    for f in ["disorder_samples.csv", "disorder_summary.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(manifest(&a)["config_hash"], manifest(&b)["config_hash"]);
}

#[test]
fn numerical_failure_exits_3() {
    // Without correlated decay the edge curve is flat: no transition exists.
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["scaling", "--gamma-ab", "0", "--n-list", "20,30"], &tmp.path().join("run"));
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn every_command_writes_documented_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let small = [
        "--n",
        "30",
        "--set",
        "delta_points=6",
        "--set",
        "phase_delta_points=5",
        "--set",
        "phase_t_c_points=4",
        "--n-list",
        "30,40",
        "--samples",
        "4",
    ];
    let cases: [(&str, &[(&str, &str)]); 10] = [
        ("phase-diagram", &[("phase_diagram.csv", "delta,t_c,winding,min_gap")]),
        ("spectrum", &[("spectrum.csv", "delta,index,energy,nearest_zero")]),
        (
            "edge-states",
            &[
                ("edge_states.csv", "site,cell,sublattice,psi_left,psi_right,numeric_left,numeric_right"),
                (
                    "edge_summary.csv",
                    "case,polarization_left,polarization_right,localization_length,fidelity_left,fidelity_right,residual_left,residual_right,splitting",
                ),
            ],
        ),
        ("transmit", &[("transmission.csv", "gamma_ab,detuning,transmission,re_chi,im_chi,dark")]),
        ("chi-scan", &[("chi_scan.csv", "gamma_ab,delta,re_chi,im_chi,transmission,gamma_eff")]),
        (
            "coherence",
            &[
                ("coherence.csv", "gamma_ab,delta,gamma_eff,target_energy,im_chi,dark,hybridized"),
                ("coherence_summary.csv", "gamma_ab,first_crossing,crossover"),
            ],
        ),
        (
            "scaling",
            &[
                ("scaling.csv", "gamma_ab,n_cells,delta_m,gap_to_critical"),
                ("scaling_fit.csv", "gamma_ab,fit,slope,intercept,extrapolated_delta_m"),
            ],
        ),
        (
            "disorder",
            &[
                ("disorder_samples.csv", "gamma_ab,side,sample,gamma_eff"),
                (
                    "disorder_summary.csv",
                    "gamma_ab,side,epsilon,n_samples,n_excluded,mean_gamma_eff,std_gamma_eff,clean_gamma_eff,seed",
                ),
            ],
        ),
        ("bulk-scan", &[("bulk_scan.csv", "gamma_ab,index,energy,gamma_eff")]),
        (
            "sw-validate",
            &[(
                "sw_validation.csv",
                "check,g_over_delta,effective,exact,error,error_kind,bound,within_bound,trace_residual,j12,j23",
            )],
        ),
    ];
    for (cmd, files) in cases {
        let out = tmp.path().join(cmd);
        let mut args = vec![cmd];
        args.extend(small);
        let o = run(&args, &out);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        for (f, h) in files {
            assert_eq!(header(&out.join(f)), *h, "{cmd}/{f}");
        }
        let listed: Vec<String> =
            manifest(&out)["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
        assert_eq!(listed.len(), files.len(), "{cmd}");
    }
}
