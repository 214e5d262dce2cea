use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use dirclust_ffi::*;

fn two_groups() -> (Vec<f64>, Vec<usize>) {
    // two tight arcs around angles 0.3 and 2.8
    let mut coords = Vec::new();
    let mut truth = Vec::new();
    for (g, centre) in [0.3f64, 2.8].iter().enumerate() {
        for i in 0..25 {
            let a = centre + 0.3 * ((i as f64) / 24.0 - 0.5);
            coords.extend([a.cos(), a.sin()]);
            truth.push(g + 1);
        }
    }
    (coords, truth)
}

fn new_sample(coords: &[f64], d: usize) -> *mut DcSample {
    let mut s = ptr::null_mut();
    let st = unsafe { dc_sample_new(coords.as_ptr(), coords.len() / d, d, &mut s) };
    assert_eq!(st, DcStatus::Ok);
    s
}

fn last_error() -> String {
    let p = dc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn sample_handles() {
    let s = new_sample(&[3.0, 4.0, 0.0, 2.0, -1.0, 0.0], 2);
    unsafe {
        assert_eq!(dc_sample_len(s), 3);
        assert_eq!(dc_sample_dim(s), 2);
        assert_eq!(dc_sample_len(ptr::null()), 0);
        dc_sample_free(s);
        dc_sample_free(ptr::null_mut());
    }
}

#[test]
fn sample_errors() {
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(dc_sample_new([1.0].as_ptr(), 1, 1, &mut s), DcStatus::InvalidArgument);
        assert!(s.is_null());
        assert!(last_error().contains("d >= 2"));
        assert_eq!(dc_sample_new([1.0, 0.0, 0.0, 0.0].as_ptr(), 2, 2, &mut s), DcStatus::DataError);
        assert_eq!(dc_sample_new(ptr::null(), 2, 2, &mut s), DcStatus::NullPointer);
        assert_eq!(dc_sample_new([1.0, 0.0].as_ptr(), 1, 2, ptr::null_mut()), DcStatus::NullPointer);
    }
}

#[test]
fn kde_matches_closed_form() {
    // single point at (1, 0): density at angle t is exp(k cos t) / (2 pi I0(k)), k = 1/h^2
    let s = new_sample(&[1.0, 0.0], 2);
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(dc_kde_new(s, 1.0, &mut m), DcStatus::Ok);
        let mut at_mode = 0.0;
        let mut opposite = 0.0;
        assert_eq!(dc_model_density(m, [2.0, 0.0].as_ptr(), 2, &mut at_mode), DcStatus::Ok);
        assert_eq!(dc_model_density(m, [-1.0, 0.0].as_ptr(), 2, &mut opposite), DcStatus::Ok);
        // I0(1) = 1.2660658777520082
        let norm = 2.0 * std::f64::consts::PI * 1.2660658777520082;
        assert!((at_mode - 1f64.exp() / norm).abs() < 1e-12);
        assert!((opposite - (-1f64).exp() / norm).abs() < 1e-12);
        assert_eq!(dc_model_density(m, [1.0, 0.0, 0.0].as_ptr(), 3, &mut at_mode), DcStatus::DataError);
        assert_eq!(dc_kde_new(s, -1.0, &mut m), DcStatus::InvalidArgument);
        assert!(m.is_null());
        dc_model_free(m);
        dc_sample_free(s);
    }
}

#[test]
fn bandwidth_selection() {
    let (coords, _) = two_groups();
    let s = new_sample(&coords, 2);
    let mut h = 0.0;
    unsafe {
        for sel in ["rot-circ", "lcv", "lscv", "rot-hyper"] {
            let c = CString::new(sel).unwrap();
            assert_eq!(dc_select_bandwidth(s, c.as_ptr(), &mut h), DcStatus::Ok, "{sel}");
            assert!(h > 0.0 && h.is_finite());
        }
        let c = CString::new("0.25").unwrap();
        assert_eq!(dc_select_bandwidth(s, c.as_ptr(), &mut h), DcStatus::Ok);
        assert_eq!(h, 0.25);
        let c = CString::new("nope").unwrap();
        assert_eq!(dc_select_bandwidth(s, c.as_ptr(), &mut h), DcStatus::InvalidArgument);
        dc_sample_free(s);
    }
}

#[test]
fn clustering_and_ari() {
    let (coords, truth) = two_groups();
    let s = new_sample(&coords, 2);
    let bw = CString::new("0.2").unwrap();
    let mut c = ptr::null_mut();
    unsafe {
        assert_eq!(dc_cluster(s, bw.as_ptr(), &mut c), DcStatus::Ok);
        assert_eq!(dc_clustering_groups(c), 2);
        assert_eq!(dc_clustering_bandwidth(c), 0.2);
        let mut labels = vec![0usize; truth.len()];
        assert_eq!(dc_clustering_labels(c, labels.as_mut_ptr(), labels.len()), DcStatus::Ok);
        assert_eq!(dc_clustering_labels(c, labels.as_mut_ptr(), 3), DcStatus::InvalidArgument);
        let mut ari = 0.0;
        assert_eq!(dc_ari(truth.as_ptr(), labels.as_ptr(), truth.len(), &mut ari), DcStatus::Ok);
        assert_eq!(ari, 1.0);
        assert_eq!(dc_ari(truth.as_ptr(), labels.as_ptr(), 1, &mut ari), DcStatus::DataError);
        dc_clustering_free(c);
        dc_sample_free(s);
    }
}

#[test]
fn tree_json_round_trip() {
    let (coords, _) = two_groups();
    let s = new_sample(&coords, 2);
    let mut json = ptr::null_mut();
    unsafe {
        assert_eq!(dc_tree_json(s, 0.2, &mut json), DcStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        dc_string_free(json);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["tree"]["n"], 50);
        assert_eq!(v["tree"]["leaf_count"], 2);
        assert_eq!(dc_tree_json(ptr::null(), 0.2, &mut json), DcStatus::NullPointer);
        assert!(json.is_null());
        dc_sample_free(s);
    }
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(crate_dir().join("include/dirclust.h")).unwrap();
    for name in [
        "typedef struct DcSample DcSample",
        "typedef struct DcModel DcModel",
        "typedef struct DcClustering DcClustering",
        "DC_STATUS_OK = 0",
        "DC_STATUS_PANIC = 5",
        "dc_sample_new(",
        "dc_sample_free(",
        "dc_kde_new(",
        "dc_model_density(",
        "dc_select_bandwidth(",
        "dc_cluster(",
        "dc_clustering_labels(",
        "dc_ari(",
        "dc_tree_json(",
        "dc_string_free(",
        "dc_last_error_message(",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

const C_PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "dirclust.h"

int main(void) {
    double coords[2 * 40];
    size_t truth[40], labels[40];
    for (int i = 0; i < 40; i++) {
        double a = (i < 20 ? 0.5 : 3.0) + 0.01 * (i % 20);
        coords[2 * i] = cos(a);
        coords[2 * i + 1] = sin(a);
        truth[i] = i < 20 ? 1 : 2;
    }
    DcSample *s = NULL;
    if (dc_sample_new(coords, 40, 2, &s) != DC_STATUS_OK) return 1;
    DcClustering *c = NULL;
    if (dc_cluster(s, "0.2", &c) != DC_STATUS_OK) return 2;
    if (dc_clustering_labels(c, labels, 40) != DC_STATUS_OK) return 3;
    double ari = 0.0;
    if (dc_ari(truth, labels, 40, &ari) != DC_STATUS_OK) return 4;
    DcSample *bad = NULL;
    if (dc_sample_new(coords, 40, 1, &bad) != DC_STATUS_INVALID_ARGUMENT || bad != NULL) return 5;
    if (dc_last_error_message() == NULL) return 6;
    printf("%zu %.3f\n", dc_clustering_groups(c), ari);
    dc_clustering_free(c);
    dc_sample_free(s);
    return 0;
}
"#;

fn static_lib() -> PathBuf {
    // target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().join("libdirclust_ffi.a")
}

#[test]
fn c_program_links_against_the_static_library() {
    let lib = static_lib();
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("a C compiler is available");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "2 1.000");
}
