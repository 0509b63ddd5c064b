mod common;

use common::lifecycle::{check, record, sequences, tiny_model, ID};
use oran_core::harness::{self, RunOptions, Scenario};
use oran_core::mlops::catalog::{Catalog, CatalogError, ModelState};
use oran_core::xapps::{ModelError, SlicingXapp};
use std::path::Path;
use std::process::Command;

#[test]
fn unvalidated_model_is_refused_by_the_xapp() {
    let m = tiny_model();
    assert!(matches!(SlicingXapp::default().with_model(m.clone()), Err(ModelError::NotValidated(_))));
    let mut low = m.clone();
    low.validation = Some(record(0.5));
    assert!(matches!(SlicingXapp::default().with_model(low), Err(ModelError::BelowThreshold { .. })));
    let mut ok = m;
    ok.validation = Some(record(1.0));
    assert!(SlicingXapp::default().with_model(ok).is_ok());
}

#[test]
fn unvalidated_model_file_is_refused_on_deploy() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.tbl");
    std::fs::write(&path, tiny_model().to_text()).unwrap();
    let mut desc = SlicingXapp::descriptor(10);
    desc.model_path = Some(path.display().to_string());
    assert!(matches!(SlicingXapp::from_descriptor(&desc), Err(ModelError::NotValidated(_))));
}

#[test]
fn scenario_naming_an_unpublished_model_fails() {
    let dir = tempfile::tempdir().unwrap();
    let mut sc = Scenario::resolve("slicing-baseline").unwrap();
    sc.model_id = Some(ID.into());
    let mut opts = RunOptions::default();
    opts.catalog = Some(dir.path().to_path_buf());
    assert!(harness::run(&sc, &opts).is_err());
}

#[test]
fn lifecycle_every_sequence_up_to_five() {
    let mut n = 0;
    for len in 1..=5 {
        for seq in sequences(len) {
            let dir = tempfile::tempdir().unwrap();
            check(dir.path(), &seq);
            n += 1;
        }
    }
    assert_eq!(n, 5 + 25 + 125 + 625 + 3125);
}

#[test]
fn published_entry_survives_a_new_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let mut cat = Catalog::new(dir.path());
    cat.register(tiny_model(), 1).unwrap();
    cat.record_validation(ID, record(1.0)).unwrap();
    cat.publish(ID).unwrap();
    let mut again = Catalog::new(dir.path());
    assert_eq!(again.state(ID), Some(ModelState::Published));
    assert!(matches!(again.register(tiny_model(), 2), Err(CatalogError::ImmutableEntry(_))));
}

fn scenario_text(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml")))
        .unwrap()
}

#[test]
fn cli_train_exits_3_when_validation_fails() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("scen");
    std::fs::create_dir(&scen).unwrap();
    std::fs::write(scen.join("train-low.toml"), scenario_text("train-low")).unwrap();
    // an overloaded run no policy can keep within budget
    let hard = scenario_text("slicing-overload").replacen("seed = 11\n", "seed = 11\nrole = \"validate\"\n", 1);
    std::fs::write(scen.join("hard.toml"), hard).unwrap();
    let catalog = dir.path().join("catalog");
    let out = Command::new(env!("CARGO_BIN_EXE_oran"))
        .arg("train")
        .arg(format!("{}/*.toml", scen.display()))
        .arg("--catalog")
        .arg(&catalog)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let published = std::fs::read_dir(&catalog).map(|d| d.count()).unwrap_or(0);
    assert_eq!(published, 0);
}
