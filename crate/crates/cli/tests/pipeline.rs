use std::fs;
use std::path::Path;

use qualitykit_cli::report::Status;
use qualitykit_cli::{run_pipeline, PipelineConfig};

/// 40 rows, three inputs with a few masked cells, two quality characteristics.
fn write_plant_table(path: &Path) {
    let mut s = String::from("speed,temp,humidity,defects,finish\n");
    for i in 0..40 {
        let speed = 0.4 + 0.5 * ((i * 7) % 40) as f64 / 39.0;
        let temp = 20.0 + ((i * 13) % 40) as f64 / 4.0;
        let humidity = 30.0 + ((i * 17) % 40) as f64;
        // both characteristics already scaled to [0, 1]
        let defects = 0.9 - 0.4 * speed + 0.002 * temp;
        let finish = 0.7 - 0.1 * speed + 0.005 * temp;
        let cell = |v: f64, masked: bool| {
            if masked {
                String::new()
            } else {
                format!("{v}")
            }
        };
        s.push_str(&format!(
            "{},{},{},{defects},{finish}\n",
            cell(speed, i == 3),
            cell(temp, i == 8 || i == 21),
            humidity
        ));
    }
    fs::write(path, s).unwrap();
}

const CONFIG: &str = r#"
seed = 9
[input]
path = "plant.csv"
[input.schema]
default_role = "input"
[score]
output_name = "quality"
components = ["defects", "finish"]
weights = [3.0, 1.0]
[split]
test_fraction = 0.25
[screening]
k = 3
n_trees = 30
min_rows_per_leaf = 3
[models.forest]
n_trees = 20
[models.boosting]
n_stages = 50
[vote]
m = 3
final_count = 3
[doe]
derive_percentiles = [10.0, 90.0]
"#;

#[test]
fn impute_score_and_derived_design() {
    let dir = tempfile::tempdir().unwrap();
    write_plant_table(&dir.path().join("plant.csv"));
    let cfg = PipelineConfig::parse(CONFIG, dir.path()).unwrap();
    cfg.validate().unwrap();
    let r = run_pipeline(&cfg);
    assert_eq!(r.status, Status::Ok, "{:?}", r.failure);

    let data = r.data.as_ref().unwrap();
    assert_eq!((data.missing_cells, data.imputed_cells), (3, 3));
    assert_eq!(data.response.as_deref(), Some("quality"));
    assert_eq!(data.inputs, vec!["speed", "temp", "humidity"]);
    let weights: Vec<f64> = data
        .score_components
        .as_ref()
        .unwrap()
        .iter()
        .map(|c| c.1)
        .collect();
    assert_eq!(weights, vec![0.75, 0.25]);

    assert_eq!(r.split.as_ref().unwrap().n_test, 10);
    assert_eq!(r.models.len(), 4);
    assert_eq!(r.vote.as_ref().unwrap().source, "models");

    // no measured responses: the design is built but not fitted
    let design = r.design.as_ref().unwrap();
    assert_eq!(design.n_runs(), 17);
    assert!(r.surface.is_none());
    let selected = &r.overrides.as_ref().unwrap().selected;
    let names: Vec<&str> = design.factors().iter().map(|f| f.name.as_str()).collect();
    assert_eq!(
        names,
        selected.iter().map(String::as_str).collect::<Vec<_>>()
    );
    let humidity = design
        .factors()
        .iter()
        .find(|f| f.name == "humidity")
        .unwrap();
    // 10th and 90th percentiles of 30..69 by linear interpolation
    assert!((humidity.low - 33.9).abs() < 1e-9 && (humidity.high - 65.1).abs() < 1e-9);
    assert!((humidity.center - 49.5).abs() < 1e-9);
}

#[test]
fn same_config_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    write_plant_table(&dir.path().join("plant.csv"));
    let cfg = PipelineConfig::parse(CONFIG, dir.path()).unwrap();
    assert_eq!(run_pipeline(&cfg).to_json(), run_pipeline(&cfg).to_json());
    let mut other = cfg.clone();
    other.seed = 10;
    assert_ne!(
        run_pipeline(&other).reproducibility.config_digest,
        run_pipeline(&cfg).reproducibility.config_digest
    );
}

#[test]
fn override_outside_selection_fails_the_vote_stage() {
    let dir = tempfile::tempdir().unwrap();
    write_plant_table(&dir.path().join("plant.csv"));
    let text = format!("{CONFIG}\n[[vote.overrides]]\nremove = \"pressure\"\ninsert = \"speed\"\njustification = \"x\"\n");
    let text = text.replace("[doe]", "[doe]\nenabled = false");
    let cfg = PipelineConfig::parse(&text, dir.path()).unwrap();
    let r = run_pipeline(&cfg);
    assert_eq!(r.status, Status::Failed);
    assert_eq!(r.failure.as_ref().unwrap().stage, "vote");
    assert!(r.vote.is_none() && r.models.len() == 4);
}
