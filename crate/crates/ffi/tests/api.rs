use std::ffi::{CStr, CString};
use std::ptr;

use thermobuck_ffi::*;

fn last_error() -> String {
    let p = tb_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn fixture(name: &str) -> *mut TbProblem {
    let name = CString::new(name).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { tb_problem_from_fixture(name.as_ptr(), &mut p) }, TbStatus::Ok);
    assert!(!p.is_null());
    p
}

#[test]
fn analysis_round_trip() {
    let p = fixture("strip_2d");
    let (mut ne, mut nd) = (0usize, 0usize);
    assert_eq!(unsafe { tb_problem_size(p, &mut ne, &mut nd) }, TbStatus::Ok);
    assert_eq!((ne, nd), (16, 54));

    let mut a = ptr::null_mut();
    assert_eq!(unsafe { tb_analyze(p, &mut a) }, TbStatus::Ok);
    let (mut j, mut l) = (0.0, 0.0);
    assert_eq!(unsafe { tb_analysis_values(a, &mut j, &mut l) }, TbStatus::Ok);
    assert!(j > 0.0 && l > 0.0);

    let mut d = vec![0.0; nd];
    assert_eq!(unsafe { tb_analysis_displacement(a, d.as_mut_ptr(), nd) }, TbStatus::Ok);
    assert!(d.iter().any(|v| *v != 0.0));
    let mut short = vec![0.0; nd - 1];
    assert_eq!(
        unsafe { tb_analysis_mode(a, short.as_mut_ptr(), short.len()) },
        TbStatus::OutOfRange
    );
    assert!(last_error().contains("needed"));

    assert_eq!(unsafe { tb_problem_set_delta_t(p, 0.0) }, TbStatus::Ok);
    let mut cold = ptr::null_mut();
    assert_eq!(unsafe { tb_analyze(p, &mut cold) }, TbStatus::Ok);
    let mut j_cold = 0.0;
    assert_eq!(unsafe { tb_analysis_values(cold, &mut j_cold, ptr::null_mut()) }, TbStatus::Ok);
    assert!(j_cold < j);

    unsafe {
        tb_analysis_free(a);
        tb_analysis_free(cold);
        tb_problem_free(p);
    }
}

#[test]
fn optimization_at_full_volume() {
    let text = thermobuck::io::fixture_text("strip_2d")
        .unwrap()
        .replace("v_target = 0.5", "v_target = 1.0");
    let text = CString::new(text).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { tb_problem_from_str(text.as_ptr(), &mut p) }, TbStatus::Ok);
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { tb_optimize(p, &mut r) }, TbStatus::Ok);
    let (mut rows, mut reached) = (0usize, 0i32);
    assert_eq!(unsafe { tb_result_summary(r, &mut rows, &mut reached) }, TbStatus::Ok);
    assert_eq!((rows, reached), (1, 1));
    let mut row = TbHistoryRow::default();
    assert_eq!(unsafe { tb_result_row(r, 0, &mut row) }, TbStatus::Ok);
    assert_eq!((row.v, row.j_over_j0, row.p_over_p0), (1.0, 1.0, 1.0));
    assert_eq!(unsafe { tb_result_row(r, 1, &mut row) }, TbStatus::OutOfRange);
    let mut presence = vec![0u8; 16];
    assert_eq!(unsafe { tb_result_presence(r, presence.as_mut_ptr(), 16) }, TbStatus::Ok);
    assert!(presence.iter().all(|&x| x == 1));
    unsafe {
        tb_result_free(r);
        tb_problem_free(p);
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { tb_problem_from_str(ptr::null(), &mut p) }, TbStatus::NullPointer);
    assert!(p.is_null());

    let bad = CString::new("[mesh]\ndims = [2, 2]\n").unwrap();
    assert_eq!(unsafe { tb_problem_from_str(bad.as_ptr(), &mut p) }, TbStatus::Config);
    assert!(last_error().contains("missing block [material]"));

    let missing = CString::new("/nonexistent/problem.toml").unwrap();
    assert_eq!(unsafe { tb_problem_from_file(missing.as_ptr(), &mut p) }, TbStatus::Io);

    let infeasible = thermobuck::io::fixture_text("strip_2d")
        .unwrap()
        .replace("a2 = 0.6", "a2 = 1.5");
    let infeasible = CString::new(infeasible).unwrap();
    assert_eq!(unsafe { tb_problem_from_str(infeasible.as_ptr(), &mut p) }, TbStatus::Ok);
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { tb_optimize(p, &mut r) }, TbStatus::Optimizer);
    assert!(r.is_null());
    assert!(last_error().contains("full design domain"), "{}", last_error());
    unsafe { tb_problem_free(p) };

    assert_eq!(unsafe { tb_analyze(ptr::null(), &mut ptr::null_mut()) }, TbStatus::NullPointer);
    unsafe {
        tb_problem_free(ptr::null_mut());
        tb_analysis_free(ptr::null_mut());
        tb_result_free(ptr::null_mut());
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(tb_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
