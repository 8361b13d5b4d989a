//! The C ABI exercised from Rust, plus a C program compiled against the generated header.

use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use fedexprox_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(fx_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn regression() -> *mut FxProblem {
    let mut p = ptr::null_mut();
    assert_eq!(
        unsafe { fx_problem_regression(3, 2, 8, 4, &mut p) },
        FxStatus::Ok
    );
    p
}

#[test]
fn problem_handles_round_trip_through_json() {
    let p = regression();
    unsafe {
        assert_eq!(fx_problem_dim(p), 8);
        assert_eq!(fx_problem_num_clients(p), 3);
        let mut s = ptr::null_mut();
        assert_eq!(fx_problem_to_json(p, &mut s), FxStatus::Ok);
        let mut q = ptr::null_mut();
        assert_eq!(fx_problem_from_json(s, &mut q), FxStatus::Ok);
        let mut s2 = ptr::null_mut();
        assert_eq!(fx_problem_to_json(q, &mut s2), FxStatus::Ok);
        assert_eq!(CStr::from_ptr(s), CStr::from_ptr(s2));
        fx_string_free(s);
        fx_string_free(s2);
        fx_problem_free(q);
        fx_problem_free(p);
    }
}

#[test]
fn envelope_queries_agree_with_each_other() {
    let p = regression();
    let x = [0.3, -0.1, 0.2, 0.0, 1.0, -0.5, 0.25, 0.125];
    let gamma = 0.7;
    let (mut z, mut g) = ([0.0; 8], [0.0; 8]);
    unsafe {
        assert_eq!(
            fx_prox(p, 1, gamma, x.as_ptr(), 8, z.as_mut_ptr()),
            FxStatus::Ok
        );
        assert_eq!(
            fx_moreau_grad(p, 1, gamma, x.as_ptr(), 8, g.as_mut_ptr()),
            FxStatus::Ok
        );
        for j in 0..8 {
            assert!((g[j] - (x[j] - z[j]) / gamma).abs() < 1e-14);
        }
        let mut m = 0.0;
        assert_eq!(
            fx_moreau_value(p, 1, gamma, x.as_ptr(), 8, &mut m),
            FxStatus::Ok
        );
        assert!(m >= 0.0);
        let mut f = 0.0;
        assert_eq!(
            fx_problem_suboptimality(p, x.as_ptr(), 8, &mut f),
            FxStatus::Ok
        );
        assert!(f >= 0.0);
        fx_problem_free(p);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let p = regression();
    let x = [0.0; 8];
    let mut z = [0.0; 8];
    unsafe {
        assert_eq!(
            fx_prox(ptr::null(), 0, 1.0, x.as_ptr(), 8, z.as_mut_ptr()),
            FxStatus::NullPointer
        );
        assert!(last_error().contains("problem"));
        assert_eq!(
            fx_prox(p, 9, 1.0, x.as_ptr(), 8, z.as_mut_ptr()),
            FxStatus::Validation
        );
        assert_eq!(
            fx_prox(p, 0, -1.0, x.as_ptr(), 8, z.as_mut_ptr()),
            FxStatus::Validation
        );
        assert_eq!(
            fx_prox(p, 0, 1.0, x.as_ptr(), 7, z.as_mut_ptr()),
            FxStatus::Validation
        );
        assert_eq!(
            fx_prox(p, 0, 1.0, x.as_ptr(), 8, z.as_mut_ptr()),
            FxStatus::Ok
        );
        assert_eq!(last_error(), "");
        let mut q = ptr::null_mut();
        assert_eq!(
            fx_problem_regression(3, 4, 8, 1, &mut q),
            FxStatus::Validation
        );
        assert!(q.is_null());
        let bad = CString::new("{not json").unwrap();
        assert_eq!(
            fx_problem_from_json(bad.as_ptr(), &mut q),
            FxStatus::Validation
        );
        fx_problem_free(p);
    }
}

#[test]
fn oracle_failures_report_code_three() {
    let json = r#"{"schema":"fedexprox-problem/v1","d":2,"interpolated":true,
        "origin":{"generator":"custom","params":null,"seed":null},
        "clients":[{"kind":"quadratic","id":0,"a":[[1e8,1e8]],"b":[0.0]}]}"#;
    let json = CString::new(json).unwrap();
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(
            fx_problem_from_json(json.as_ptr(), &mut p),
            FxStatus::Ok,
            "{}",
            last_error()
        );
        let x = [1.0, 0.0];
        let mut z = [0.0; 2];
        assert_eq!(
            fx_prox(p, 0, 1e10, x.as_ptr(), 2, z.as_mut_ptr()),
            FxStatus::Oracle
        );
        assert!(last_error().contains("oracle_failure"));
        fx_problem_free(p);
    }
}

#[test]
fn runs_expose_rows_and_rates() {
    let p = regression();
    let cfg = CString::new(
        r#"{"label":"s","gamma":1.0,"alpha":{"policy":"stops"},"tau":2,"seed":3,"iterations":25}"#,
    )
    .unwrap();
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(
            fx_run(p, cfg.as_ptr(), &mut t),
            FxStatus::Ok,
            "{}",
            last_error()
        );
        let len = fx_trace_len(t);
        assert!(len >= 2);
        let mut row = FxTraceRow {
            k: 0,
            f_subopt: 0.0,
            env_subopt: 0.0,
            dist_sq: 0.0,
            alpha: 0.0,
            sampled_len: 0,
        };
        assert_eq!(fx_trace_row(t, 0, &mut row), FxStatus::Ok);
        assert!(row.alpha.is_nan());
        assert_eq!(fx_trace_row(t, 1, &mut row), FxStatus::Ok);
        assert_eq!((row.k, row.sampled_len), (1, 2));
        let mut s = [usize::MAX; 2];
        assert_eq!(fx_trace_sampled(t, 1, s.as_mut_ptr(), 2), FxStatus::Ok);
        assert!(s[0] < s[1] && s[1] < 3);
        assert_eq!(
            fx_trace_sampled(t, 1, s.as_mut_ptr(), 1),
            FxStatus::Validation
        );
        assert_eq!(fx_trace_row(t, len, &mut row), FxStatus::Validation);
        let mut x = [0.0; 8];
        assert_eq!(fx_trace_final_iterate(t, x.as_mut_ptr(), 8), FxStatus::Ok);
        let (mut conv, mut after) = (0, 0);
        assert_eq!(fx_trace_status(t, &mut conv, &mut after), FxStatus::Ok);
        assert_eq!(after, len - 1);
        let mut a = 0.0;
        assert_eq!(fx_trace_resolved_alpha(t, &mut a), FxStatus::Ok);
        assert!(a.is_nan());
        fx_trace_free(t);

        let mut r = ptr::null_mut();
        assert_eq!(fx_rates(p, 1.0, 0, &mut r), FxStatus::Ok);
        let v: serde_json::Value =
            serde_json::from_str(CStr::from_ptr(r).to_str().unwrap()).unwrap();
        assert!(v["alpha_opt"].as_f64().unwrap() > 1.0);
        fx_string_free(r);
        fx_problem_free(p);
    }
}

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps/
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_static_library() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libfedexprox_ffi.a");
    assert!(
        lib.exists(),
        "static library not found at {}",
        lib.display()
    );
    let out_dir = tempfile::tempdir().unwrap();
    let exe = out_dir.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
