use std::path::Path;

use crate::error::{Error, Result};

use super::config::{parse_problem_config, parse_problem_str, ProblemSpec};

/// Problem files shipped with the crate, by name.
pub const FIXTURES: &[(&str, &str)] = &[
    ("column_eq55", include_str!("../../fixtures/column_eq55.toml")),
    ("column_eq55_20k", include_str!("../../fixtures/column_eq55_20k.toml")),
    ("column_eq55_coarse", include_str!("../../fixtures/column_eq55_coarse.toml")),
    ("column_eq55_fine", include_str!("../../fixtures/column_eq55_fine.toml")),
    ("column_small", include_str!("../../fixtures/column_small.toml")),
    ("strip_2d", include_str!("../../fixtures/strip_2d.toml")),
    ("leading_edge_eq56", include_str!("../../fixtures/leading_edge_eq56.toml")),
    ("wingbox_eq57", include_str!("../../fixtures/wingbox_eq57.toml")),
];

/// Fixtures too large for routine runs.
pub const LARGE_FIXTURES: &[&str] = &["leading_edge_eq56", "wingbox_eq57"];

pub fn fixture_text(name: &str) -> Option<&'static str> {
    FIXTURES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn fixture(name: &str) -> Result<ProblemSpec> {
    let text = fixture_text(name)
        .ok_or_else(|| Error::InvalidInput(format!("no fixture named `{name}`")))?;
    parse_problem_str(text)
}

/// Load a problem from a file path, or by fixture name when no such file exists.
pub fn load_problem(arg: &str) -> Result<ProblemSpec> {
    let path = Path::new(arg);
    if path.exists() {
        return parse_problem_config(path);
    }
    let stem = arg.strip_suffix(".toml").unwrap_or(arg);
    match fixture_text(stem) {
        Some(text) => parse_problem_str(text),
        None => Err(Error::io(
            path,
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "no such file or shipped fixture",
            ),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_parses() {
        for (name, _) in FIXTURES {
            let spec = fixture(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            let text = spec.to_toml_string().unwrap();
            assert_eq!(parse_problem_str(&text).unwrap(), spec, "{name}");
        }
    }

    #[test]
    fn benchmark_values() {
        let p = fixture("column_eq55").unwrap();
        assert_eq!((p.constraints.a1, p.constraints.a2), (2.5, 0.6));
        assert_eq!(p.loads.delta_t, 150.0);
        assert_eq!(p.n_elements(), 10_000);
        let fine = fixture("column_eq55_20k").unwrap();
        assert!((19_000..=21_000).contains(&fine.n_elements()));
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(load_problem("no_such_problem"), Err(Error::Io { .. })));
        assert!(load_problem("strip_2d").is_ok());
    }
}
