use std::ffi::{CStr, CString};
use std::io::Write;
use std::ptr;

use levelscore_ffi::*;

fn last_error() -> String {
    let p = ls_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn write_tree(dir: &std::path::Path) -> CString {
    let path = dir.join("mesh_tree.tsv");
    let mut f = std::fs::File::create(&path).unwrap();
    for (t, code) in [
        ("Cells", "A11"),
        ("Eukaryota", "B01"),
        ("Humans", "B01.050.150"),
        ("Persons", "M01"),
        ("Neoplasms", "C04"),
    ] {
        writeln!(f, "{t}\t{code}").unwrap();
    }
    CString::new(path.to_str().unwrap()).unwrap()
}

#[test]
fn vocabulary_embedding_axis_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let tree = write_tree(dir.path());
    unsafe {
        let mut v = ptr::null_mut();
        assert_eq!(ls_vocabulary_load(tree.as_ptr(), ptr::null(), ptr::null(), ptr::null(), &mut v), LsStatus::Ok);
        assert_eq!(ls_vocabulary_len(v), 5);
        let mut id = 0;
        let name = CString::new("Humans").unwrap();
        assert_eq!(ls_vocabulary_term_id(v, name.as_ptr(), &mut id), LsStatus::Ok);
        let mut cat = LsCategory::Neutral;
        assert_eq!(ls_vocabulary_category(v, id, &mut cat), LsStatus::Ok);
        assert_eq!(cat, LsCategory::Human);
        let missing = CString::new("Nope").unwrap();
        assert_eq!(ls_vocabulary_term_id(v, missing.as_ptr(), &mut id), LsStatus::NotFound);
        assert!(last_error().contains("Nope"));

        // Cells (0) and Humans (2) anchor the axis; Neoplasms (4) lies on it.
        let terms = [0u32, 2, 4];
        let vectors = [1.0, 0.0, 0.0, 1.0, -2.0, 2.0];
        let mut e = ptr::null_mut();
        assert_eq!(ls_embedding_new(1990, 2, terms.as_ptr(), 3, vectors.as_ptr(), &mut e), LsStatus::Ok);
        assert_eq!((ls_embedding_dim(e), ls_embedding_len(e)), (2, 3));
        let mut a = ptr::null_mut();
        assert_eq!(ls_axis_build(e, v, &mut a), LsStatus::Ok);
        let mut axis = [0.0; 2];
        assert_eq!(ls_axis_vector(a, axis.as_mut_ptr(), 2), LsStatus::Ok);
        assert_eq!(axis, [-1.0, 1.0]);
        assert_eq!(ls_axis_vector(a, axis.as_mut_ptr(), 3), LsStatus::InvalidArgument);
        let mut s = 0.0;
        assert_eq!(ls_axis_term_score(a, 4, &mut s), LsStatus::Ok);
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(ls_axis_term_score(a, 1, &mut s), LsStatus::NotFound);

        let (mut score, mut ok) = (0.0, -1);
        assert_eq!(ls_axis_paper_score(a, [0u32, 2].as_ptr(), 2, 2, &mut score, &mut ok), LsStatus::Ok);
        assert_eq!(ok, 1);
        assert!(score.abs() < 1e-12);
        assert_eq!(ls_axis_paper_score(a, [4u32].as_ptr(), 1, 4, &mut score, &mut ok), LsStatus::Ok);
        assert_eq!(ok, 0);

        ls_axis_free(a);
        ls_embedding_free(e);
        ls_vocabulary_free(v);
    }
}

#[test]
fn chain_reach_through_abi() {
    let years = [2000, 1995, 1990];
    let scores = [0.1, 0.2, 0.3];
    let citing = [0u32, 1];
    let cited = [1u32, 2];
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(
            ls_graph_new(3, years.as_ptr(), scores.as_ptr(), 2, citing.as_ptr(), cited.as_ptr(), &mut g),
            LsStatus::Ok
        );
        assert_eq!(ls_graph_edge_count(g), 2);
        let mut gap = 0.0;
        assert_eq!(ls_graph_homophily_gap(g, &mut gap), LsStatus::Ok);
        assert!((gap - 0.1).abs() < 1e-12);

        let mut r = ptr::null_mut();
        assert_eq!(ls_reach_aggregate(g, 1.0, 2.0, 0, &mut r), LsStatus::Ok);
        assert_eq!(ls_reach_bins(r), 1);
        let (mut val, mut def) = (0.0, -1);
        // Mean over sources A, B, C of the per-source mean distance.
        assert_eq!(ls_reach_get(r, LsReachMatrix::L, 0, 0, &mut val, &mut def), LsStatus::Ok);
        assert_eq!((def, val), (1, (1.5 + 1.0) / 2.0));
        assert_eq!(ls_reach_get(r, LsReachMatrix::Y, 0, 0, &mut val, &mut def), LsStatus::Ok);
        assert_eq!(val, (7.5 + 5.0) / 2.0);
        assert_eq!(ls_reach_get(r, LsReachMatrix::R, 3, 0, &mut val, &mut def), LsStatus::InvalidArgument);

        let mut s = ptr::null_mut();
        assert_eq!(ls_graph_shuffled(g, 3, &mut s), LsStatus::Ok);
        assert_eq!(ls_graph_edge_count(s), 2);

        assert_eq!(ls_reach_aggregate(g, 0.0, 0.1, 0, &mut r), LsStatus::InvalidArgument);
        ls_graph_free(s);
        ls_graph_free(g);
        ls_reach_free(r);
    }
}

#[test]
fn statistics_and_errors() {
    unsafe {
        let mut c = 0.0;
        assert_eq!(ls_cosine([1.0, 0.0].as_ptr(), [0.0, 2.0].as_ptr(), 2, &mut c), LsStatus::Ok);
        assert_eq!(c, 0.0);
        assert_eq!(ls_cosine([0.0, 0.0].as_ptr(), [0.0, 2.0].as_ptr(), 2, &mut c), LsStatus::Numeric);
        assert_eq!(ls_cosine(ptr::null(), [0.0].as_ptr(), 1, &mut c), LsStatus::NullPointer);

        let (mut stat, mut p) = (0.0, 0.0);
        let a = [1.0, 2.0, 3.0];
        let b = [4.0, 5.0, 6.0];
        assert_eq!(ls_permutation_test_median(a.as_ptr(), 3, b.as_ptr(), 3, 1000, 1, &mut stat, &mut p), LsStatus::Ok);
        assert_eq!((stat, p), (3.0, 0.1));
        assert_eq!(ls_permutation_test_median(a.as_ptr(), 0, b.as_ptr(), 3, 1000, 1, &mut stat, &mut p), LsStatus::Empty);

        let (mut t, mut found) = (9.0, -1);
        let scores = [-0.9, -0.9, -0.9, 0.9, 0.9];
        assert_eq!(ls_detect_threshold(scores.as_ptr(), 5, 0.4, &mut t, &mut found), LsStatus::Ok);
        assert_eq!(found, 1);
        assert!((t - 0.0).abs() < 1e-12);
        assert_eq!(ls_detect_threshold([0.5].as_ptr(), 1, 0.4, &mut t, &mut found), LsStatus::Ok);
        assert_eq!(found, 0);

        ls_clear_error();
        assert!(ls_last_error_message().is_null());
        assert!(!CStr::from_ptr(ls_version()).to_bytes().is_empty());
    }
}
