//! Model catalog lifecycle against a hand-written transition table.

use oran_core::ids::SliceId;
use oran_core::mlops::catalog::{Catalog, CatalogError, ModelState};
use oran_core::ric::{Ric, RicConfig};
use oran_core::xapps::{PolicyModel, ValidationRecord};
use std::collections::BTreeMap;
use std::path::Path;

pub const ID: &str = "m-000000000001";

pub fn tiny_model() -> PolicyModel {
    let mut table = BTreeMap::new();
    table.insert(vec![10, 10, 10], vec![10, 10, 10]);
    PolicyModel {
        model_id: ID.into(),
        capacity: 30,
        step: 10,
        slices: vec![SliceId(0), SliceId(1), SliceId(2)],
        objectives: String::new(),
        dataset_hash: "d".into(),
        scenarios: vec!["t".into()],
        table,
        validation: None,
    }
}

pub fn record(pass_rate: f64) -> ValidationRecord {
    ValidationRecord {
        pass_rate,
        scenarios: vec!["v".into()],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Register,
    Pass,
    Fail,
    Publish,
    Deploy,
}

pub const OPS: [Op; 5] = [Op::Register, Op::Pass, Op::Fail, Op::Publish, Op::Deploy];

/// What the lifecycle allows, written out independently of the catalog.
pub fn expected(state: Option<ModelState>, op: Op) -> (Result<(), &'static str>, Option<ModelState>) {
    use ModelState::*;
    match (state, op) {
        (Some(Published), Op::Deploy) => (Ok(()), state),
        (_, Op::Deploy) => (Err("NotPublished"), state),
        (Some(Published), _) => (Err("ImmutableEntry"), state),
        (_, Op::Register) => (Ok(()), Some(Trained)),
        (None, _) => (Err("UnknownModel"), None),
        (_, Op::Pass) => (Ok(()), Some(Validated)),
        (_, Op::Fail) => (Ok(()), Some(Trained)),
        (Some(Validated), Op::Publish) => (Ok(()), Some(Published)),
        (Some(Trained), Op::Publish) => (Err("NotValidated"), state),
    }
}

pub fn kind(e: &CatalogError) -> &'static str {
    match e {
        CatalogError::ImmutableEntry(_) => "ImmutableEntry",
        CatalogError::NotValidated(_) => "NotValidated",
        CatalogError::NotPublished(_) => "NotPublished",
        CatalogError::UnknownModel(_) => "UnknownModel",
        CatalogError::Io(_) => "Io",
        CatalogError::Deploy { .. } => "Deploy",
    }
}

pub fn apply(cat: &mut Catalog, ric: &mut Ric, op: Op) -> Result<(), &'static str> {
    let r = match op {
        Op::Register => cat.register(tiny_model(), 1),
        Op::Pass => cat.record_validation(ID, record(1.0)).map(drop),
        Op::Fail => cat.record_validation(ID, record(0.5)).map(drop),
        Op::Publish => cat.publish(ID).map(drop),
        Op::Deploy => cat.deploy(ID, ric, "slicing", 10),
    };
    r.map_err(|e| kind(&e))
}

pub fn sequences(len: usize) -> Vec<Vec<Op>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|s| {
                OPS.iter().map(move |op| {
                    let mut s = s.clone();
                    s.push(*op);
                    s
                })
            })
            .collect();
    }
    out
}

pub fn check(root: &Path, seq: &[Op]) {
    let mut cat = Catalog::new(root);
    let mut ric = Ric::new(RicConfig::default());
    let mut state = None;
    let mut deployed = false;
    for (i, &op) in seq.iter().enumerate() {
        let (want, next) = expected(state, op);
        let got = apply(&mut cat, &mut ric, op);
        assert_eq!(got, want, "{seq:?} step {i}");
        state = next;
        assert_eq!(cat.state(ID), state, "{seq:?} step {i}");
        deployed |= op == Op::Deploy && want.is_ok();
        assert_eq!(ric.is_deployed("slicing"), deployed, "{seq:?} step {i}");
    }
    if state == Some(ModelState::Published) {
        let m = cat.manifest(ID).unwrap();
        assert_eq!(m.pass_rate, 1.0);
        let text = std::fs::read_to_string(cat.deployable_path(ID).unwrap()).unwrap();
        assert!(PolicyModel::parse(&text).unwrap().check_deployable().is_ok());
    }
}

