use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qualitykit_cli::tables::{DESIGN_CSV, RANKINGS_CSV};

fn qualitykit(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qualitykit"));
    cmd.args(args).env_remove("QUALITYKIT_OUT");
    if let Some(dir) = env_out {
        cmd.env("QUALITYKIT_OUT", dir);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn reproduce_paper_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = qualitykit(
        &["reproduce-paper", "--out", dir.path().to_str().unwrap()],
        None,
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = stdout(&o);
    assert!(text.contains(" 0 failed"), "{text}");
    assert!(text.contains("(2) Machine productivity (L)"));
    let saved: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("reproduction.json")).unwrap())
            .unwrap();
    assert_eq!(saved["passed"], true);
    assert_eq!(saved["echo"].as_array().unwrap().len(), 17);
}

#[test]
fn bundled_pipeline_writes_both_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = qualitykit(
        &["pipeline", "--bundled", "--format", "structured"],
        Some(dir.path()),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r = json(&o);
    assert_eq!(r["status"], "ok");
    assert_eq!(
        r["overrides"]["selected"],
        serde_json::json!(["Machine productivity", "Pile weight", "Pigment fastness"])
    );
    let on_disk = fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert_eq!(on_disk, stdout(&o));
    let text = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(text.contains("11178.90"), "{text}");
}

#[test]
fn out_flag_beats_environment() {
    let (env_dir, flag_dir) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let o = qualitykit(
        &[
            "pipeline",
            "--bundled",
            "--out",
            flag_dir.path().to_str().unwrap(),
        ],
        Some(env_dir.path()),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_dir.path().join("report.json").exists());
    assert!(!env_dir.path().join("report.json").exists());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "seed = 1\nunknown_key = 3\n").unwrap();
    let o = qualitykit(
        &["pipeline", "--config", cfg.to_str().unwrap()],
        Some(dir.path()),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("config error"));

    // referenced file missing
    fs::write(&cfg, "[input]\npath = \"missing.csv\"\n").unwrap();
    assert_eq!(
        qualitykit(
            &["pipeline", "--config", cfg.to_str().unwrap()],
            Some(dir.path())
        )
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        qualitykit(&["pipeline"], Some(dir.path())).status.code(),
        Some(2)
    );
    assert_eq!(
        qualitykit(&["no-such-command"], None).status.code(),
        Some(2)
    );
}

#[test]
fn stage_failure_exits_1_with_failed_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    fs::write(&data, "a,b,y\n1,2,3\n2,3,4\n3,1,2\n4,4,4\n5,2,1\n").unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        "[input]\npath = \"d.csv\"\n[input.schema]\ndefault_role = \"input\"\n[input.schema.roles]\ny = \"response\"\n\
         [screening]\nk = 3\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = qualitykit(
        &[
            "pipeline",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("stage 'screen'"), "{stderr}");
    let r: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(r["status"], "failed");
    assert_eq!(r["failure"]["stage"], "screen");
    // sections finished before the failure are kept
    assert_eq!(r["split"]["n_train"], 3);
    assert!(fs::read_to_string(out.join("report.txt"))
        .unwrap()
        .contains("FAILED"));
}

#[test]
fn doe_gen_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let o = qualitykit(&["doe-gen", "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let generated = fs::read_to_string(dir.path().join("design.csv")).unwrap();
    assert_eq!(generated.lines().count(), 18);
    assert!(generated.starts_with("standard_order,block,"));

    let design = dir.path().join("t7.csv");
    fs::write(&design, DESIGN_CSV).unwrap();
    let o = qualitykit(
        &[
            "doe-fit",
            "--design",
            design.to_str().unwrap(),
            "--response",
            "Textile quality score",
        ],
        None,
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = stdout(&o);
    assert!(text.contains("-0.071600"), "{text}");
    assert!(text.contains("Machine productivity = 0.450000"), "{text}");
}

#[test]
fn synth_train_predict_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = qualitykit(
        &[
            "synth",
            "--rows",
            "120",
            "--noise-vars",
            "2",
            "--seed",
            "4",
            "--out",
            d.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    let data = d.join("synthetic.csv");
    let response = "Textile quality score";
    let model = d.join("m.json");
    for kind in ["tree", "forest", "boosted", "knn", "ols"] {
        let o = qualitykit(
            &[
                "train",
                "--data",
                data.to_str().unwrap(),
                "--response",
                response,
                "--model",
                kind,
                "--save",
                model.to_str().unwrap(),
            ],
            None,
        );
        assert_eq!(
            o.status.code(),
            Some(0),
            "{kind}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let o = qualitykit(
            &[
                "predict",
                "--model",
                model.to_str().unwrap(),
                "--data",
                data.to_str().unwrap(),
                "--format",
                "structured",
            ],
            None,
        );
        assert_eq!(o.status.code(), Some(0), "{kind}");
        assert_eq!(json(&o).as_array().unwrap().len(), 120, "{kind}");
    }
    let o = qualitykit(
        &[
            "screen",
            "--data",
            data.to_str().unwrap(),
            "--response",
            response,
            "--k",
            "2",
            "--n-trees",
            "20",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("Machine productivity"));
}

#[test]
fn vote_with_override() {
    let dir = tempfile::tempdir().unwrap();
    let ranks = dir.path().join("r.csv");
    fs::write(&ranks, RANKINGS_CSV).unwrap();
    let o = qualitykit(
        &[
            "vote",
            "--rankings",
            ranks.to_str().unwrap(),
            "--override",
            "Tufts=Pigment fastness:set by the operation plan",
            "--format",
            "structured",
        ],
        None,
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v = json(&o);
    assert_eq!(
        v[1]["selected"],
        serde_json::json!(["Machine productivity", "Pile weight", "Pigment fastness"])
    );

    let o = qualitykit(
        &[
            "vote",
            "--rankings",
            ranks.to_str().unwrap(),
            "--override",
            "Tufts=Pigment fastness: ",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn seed_flag_changes_synthetic_data() {
    let a = qualitykit(
        &["synth", "--rows", "20", "--noise-vars", "0", "--seed", "1"],
        None,
    );
    let b = qualitykit(
        &["synth", "--rows", "20", "--noise-vars", "0", "--seed", "1"],
        None,
    );
    let c = qualitykit(
        &["synth", "--rows", "20", "--noise-vars", "0", "--seed", "2"],
        None,
    );
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}
