use std::path::PathBuf;

use dirclust::bandwidth::{SearchRange, Selector};
use dirclust::density::{sample_vmf, Sample, VmfParams};
use dirclust::harness::export::{export_ccluster, export_scluster, tree_document, CoresDoc};
use dirclust::harness::serve::{ServeOptions, ServeState};
use dirclust::hdr::TauGrid;
use dirclust::pipeline::{filtration, PipelineConfig};
use dirclust::sphere::{circular_to_cartesian, spherical_to_cartesian};
use serde_json::Value;

fn schema(name: &str) -> jsonschema::Validator {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let value: Value = serde_json::from_str(&text).unwrap();
    jsonschema::validator_for(&value).unwrap()
}

fn assert_valid(v: &jsonschema::Validator, doc: &Value) {
    let errors: Vec<String> = v.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

fn circle() -> Sample {
    let parts: Vec<Sample> = [0.5, 3.0]
        .iter()
        .enumerate()
        .map(|(i, &m)| sample_vmf(&VmfParams::new(circular_to_cartesian(m), 8.0).unwrap(), 30, 10 + i as u64))
        .collect();
    Sample::concat(&parts).unwrap()
}

fn sphere() -> Sample {
    let parts: Vec<Sample> = [[0.3, 0.8], [2.5, 2.0]]
        .iter()
        .enumerate()
        .map(|(i, a)| sample_vmf(&VmfParams::new(spherical_to_cartesian(a).unwrap(), 15.0).unwrap(), 25, 20 + i as u64))
        .collect();
    Sample::concat(&parts).unwrap()
}

fn taus() -> TauGrid {
    TauGrid::range(0.05, 0.95, 0.05).unwrap()
}

#[test]
fn tree_and_cores_documents_validate() {
    let config = PipelineConfig { taus: taus(), ..Default::default() };
    let tree = schema("tree.json");
    let cores = schema("cores.json");
    for (s, h) in [(circle(), 0.3), (sphere(), 0.35)] {
        let f = filtration(&s, h, &config).unwrap();
        let doc = serde_json::to_value(tree_document(&f)).unwrap();
        assert_valid(&tree, &doc);
        let c = serde_json::to_value(CoresDoc { h, cores: f.cores.clone() }).unwrap();
        assert_valid(&cores, &c);
    }
}

#[test]
fn ccluster_document_validates() {
    let doc = export_ccluster(&circle(), &[0.5, 5.0, 50.0], 72, &Selector::ALL[..3], &taus(), SearchRange::default()).unwrap();
    assert_valid(&schema("ccluster.json"), &serde_json::to_value(doc).unwrap());
}

#[test]
fn scluster_document_validates() {
    let doc = export_scluster(&sphere(), &[0.2, 0.5], 15, &[Selector::Lcv], &taus(), SearchRange::default()).unwrap();
    assert_valid(&schema("scluster.json"), &serde_json::to_value(doc).unwrap());
}

#[test]
fn served_bodies_validate() {
    let state = ServeState::new(circle(), ServeOptions::default());
    let tree: Value = serde_json::from_str(&state.handle("/api/tree?h=0.3").body).unwrap();
    assert_valid(&schema("tree.json"), &tree);
    let cores: Value = serde_json::from_str(&state.handle("/api/cores?h=lcv").body).unwrap();
    assert_valid(&schema("cores.json"), &cores);
}

#[test]
fn schemas_reject_malformed_documents() {
    let f = filtration(&circle(), 0.3, &PipelineConfig::default()).unwrap();
    let mut doc = serde_json::to_value(tree_document(&f)).unwrap();
    doc["tree"].as_object_mut().unwrap().remove("nodes");
    assert!(!schema("tree.json").is_valid(&doc));

    let mut doc = serde_json::to_value(CoresDoc { h: 0.3, cores: f.cores.clone() }).unwrap();
    doc["cores"]["n_c"] = Value::from(0);
    assert!(!schema("cores.json").is_valid(&doc));

    let mut doc =
        serde_json::to_value(export_ccluster(&circle(), &[1.0], 8, &[], &taus(), SearchRange::default()).unwrap()).unwrap();
    doc["density"][0][0] = Value::from(-1.0);
    assert!(!schema("ccluster.json").is_valid(&doc));
}
