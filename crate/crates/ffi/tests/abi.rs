use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use qworkbench_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 128];
    unsafe {
        qw_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn graph_and_maxcut_round_trip() {
    unsafe {
        let from = [0usize, 1, 2, 0];
        let to = [1usize, 2, 3, 3];
        let w = [1.0, 1.0, 1.0, 1.0];
        let mut g = ptr::null_mut();
        assert_eq!(qw_graph_from_edges(4, from.as_ptr(), to.as_ptr(), w.as_ptr(), 4, &mut g), QwStatus::Ok);
        assert_eq!(qw_graph_num_nodes(g), 4);
        let mut x = [9u8; 4];
        let mut e = 0.0;
        assert_eq!(qw_maxcut_brute_force(g, x.as_mut_ptr(), &mut e), QwStatus::Ok);
        // the 4-cycle is bipartite: all four edges cut
        assert_eq!(e, -4.0);
        assert!(x[0] != x[1] && x[1] != x[2]);

        let mut eq = 0.0;
        assert_eq!(qw_maxcut_quenc(g, 2, 200, 1.0, 0, x.as_mut_ptr(), &mut eq), QwStatus::Ok);
        let mut check = 0.0;
        assert_eq!(qw_maxcut_energy(g, x.as_ptr(), &mut check), QwStatus::Ok);
        assert_eq!(eq, check);
        assert!(eq >= e);
        qw_graph_free(g);
    }
}

#[test]
fn errors_are_reported_not_thrown() {
    unsafe {
        let mut g = ptr::null_mut();
        let bad_to = [5usize];
        let from = [0usize];
        let w = [1.0];
        assert_eq!(
            qw_graph_from_edges(3, from.as_ptr(), bad_to.as_ptr(), w.as_ptr(), 1, &mut g),
            QwStatus::InvalidArgument
        );
        assert!(g.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(qw_graph_random_complete(4, 0, ptr::null_mut()), QwStatus::NullPointer);
        assert_eq!(last_error(), "out is null");

        assert_eq!(qw_graph_random_complete(30, 0, &mut g), QwStatus::Ok);
        let mut x = vec![0u8; 30];
        let mut e = 0.0;
        assert_eq!(qw_maxcut_brute_force(g, x.as_mut_ptr(), &mut e), QwStatus::InvalidArgument);
        qw_graph_free(g);

        assert_eq!(qw_graph_num_nodes(ptr::null()), 0);
        assert!(qw_tt_solution_residual(ptr::null()).is_nan());
        qw_graph_free(ptr::null_mut());
    }
}

#[test]
fn last_error_truncates_and_reports_full_length() {
    unsafe {
        assert_eq!(qw_network_forward(ptr::null(), ptr::null(), 0, ptr::null_mut()), QwStatus::NullPointer);
        let full = qw_last_error(ptr::null_mut(), 0);
        assert_eq!(full, "network is null".len());
        let mut buf = [1 as std::ffi::c_char; 5];
        assert_eq!(qw_last_error(buf.as_mut_ptr(), buf.len()), full);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap(), "netw");
    }
}

#[test]
fn poisson_1d_matches_parabola() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(qw_poisson_tt_solve(1, 6, 1e-10, 16, &mut s), QwStatus::Ok);
        assert!(qw_tt_solution_residual(s) < 1e-10);
        assert!(qw_tt_solution_max_rank(s) >= 1);
        assert!(qw_tt_solution_sweeps(s) >= 1);
        let mut u = vec![0.0; 64];
        assert_eq!(qw_tt_solution_values(s, u.as_mut_ptr(), 10), QwStatus::InvalidArgument);
        assert_eq!(qw_tt_solution_values(s, u.as_mut_ptr(), 64), QwStatus::Ok);
        let h = 1.0 / 65.0;
        for (k, v) in u.iter().enumerate() {
            let x = (k + 1) as f64 * h;
            assert!((v - x * (1.0 - x) / 2.0).abs() < 1e-8);
        }
        qw_tt_solution_free(s);
    }
}

#[test]
fn networks_through_the_abi() {
    unsafe {
        for (model, params) in [
            (QwModel::ClassicalClassifier, 161),
            (QwModel::HybridClassifier, 125),
            (QwModel::HybridRegressor, 53),
        ] {
            let mut n = ptr::null_mut();
            assert_eq!(qw_network_new(model, 1, &mut n), QwStatus::Ok);
            assert_eq!(qw_network_num_params(n), params);
            let x = [0.3, 0.7];
            let mut y = f64::NAN;
            assert_eq!(qw_network_forward(n, x.as_ptr(), 2, &mut y), QwStatus::Ok);
            assert!(y.is_finite());
            assert_eq!(qw_network_forward(n, x.as_ptr(), 3, &mut y), QwStatus::InvalidArgument);
            qw_network_free(n);
        }
    }
}

/// Compiles a C program against the generated header and the static library.
#[test]
fn c_program_links_against_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let target = std::env::var_os("CARGO_TARGET_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| manifest.join("../../target"));
    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
    let lib = target.join(profile).join("libqworkbench_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    let fields: Vec<&str> = text.split_whitespace().collect();
    let u15: f64 = fields[1].parse().unwrap();
    let x = 16.0 / 33.0;
    assert!((u15 - x * (1.0 - x) / 2.0).abs() < 1e-6);
}
