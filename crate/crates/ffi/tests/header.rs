use std::path::Path;
use std::process::Command;

const HEADER: &str = include_str!("../include/thermobuck.h");

#[test]
fn header_declares_the_api() {
    for name in [
        "TbProblem",
        "TbAnalysis",
        "TbResult",
        "TB_STATUS_OK",
        "TB_STATUS_PANIC",
        "tb_problem_from_file",
        "tb_analyze",
        "tb_optimize",
        "tb_result_row",
        "tb_last_error_message",
    ] {
        assert!(HEADER.contains(name), "missing {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"thermobuck.h\"\n\
         int main(void) {\n\
           TbProblem *p = 0;\n\
           TbStatus s = tb_problem_from_fixture(\"strip_2d\", &p);\n\
           TbHistoryRow row;\n\
           (void)row;\n\
           tb_problem_free(p);\n\
           return s == TB_STATUS_OK ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let out = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
        .ok_or(())
}
