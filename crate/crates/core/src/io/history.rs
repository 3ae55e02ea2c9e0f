use std::path::Path;

use crate::error::{Error, Result};
use crate::optimizer::HistoryRow;

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::InvalidInput(format!("{}: {other:?}", path.display())),
    }
}

/// Write one CSV row per outer iteration under a fixed header.
pub fn export_history(history: &[HistoryRow], path: &Path) -> Result<()> {
    if history.is_empty() {
        return Err(Error::InvalidInput("history is empty".into()));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for row in history {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read a file written by [`export_history`].
pub fn read_history(path: &Path) -> Result<Vec<HistoryRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<HistoryRow>, _>>()
        .map_err(|e| csv_error(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(iter: usize, v: f64) -> HistoryRow {
        HistoryRow {
            iter,
            v,
            j_over_j0: 1.0,
            p_over_p0: 1.0,
            lambda: 3.5,
            g1: -0.6,
            g2: -2.0 / 3.0,
            mu1: 1.0,
            mu2: 1.0,
            gamma1: 10.0,
            gamma2: 10.0,
            inner_steps: 0,
            wall_s: 0.25,
        }
    }

    #[test]
    fn header_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("history.csv");
        let rows = vec![row(0, 1.0), row(1, 0.975)];
        export_history(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "iter,v,J_over_J0,P_over_P0,lambda,g1,g2,mu1,mu2,gamma1,gamma2,inner_steps,wall_s"
        );
        assert_eq!(text.lines().count(), 3);
        assert_eq!(read_history(&path).unwrap(), rows);
    }

    #[test]
    fn rejects_empty_and_unwritable() {
        let dir = tempfile::tempdir().unwrap();
        assert!(export_history(&[], &dir.path().join("h.csv")).is_err());
        let err = export_history(&[row(0, 1.0)], &dir.path().join("missing/h.csv")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "{err}");
    }
}
