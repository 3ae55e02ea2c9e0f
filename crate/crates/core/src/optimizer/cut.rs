use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::DesignField;

/// Keep the `round(target_v · N)` elements with the highest field values
/// (masked elements always kept) and place `tau` between the last kept and
/// the first dropped value.
///
/// Equal values are ordered by `tiebreak` (descending) when given, then by
/// ascending element index.
pub fn level_set_cut(
    field: &[f64],
    target_v: f64,
    non_design: &[bool],
    tiebreak: Option<&[f64]>,
) -> Result<DesignField> {
    let n = field.len();
    if non_design.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: non_design.len(),
        });
    }
    if let Some(t) = tiebreak {
        if t.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: t.len(),
            });
        }
    }
    if n == 0 {
        return Err(Error::InvalidInput("empty design field".into()));
    }
    if !(target_v > 0.0 && target_v <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "target volume fraction {target_v} outside (0, 1]"
        )));
    }
    if let Some(e) = field.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite field value at element {e}"
        )));
    }
    let keep = ((target_v * n as f64).round() as usize).min(n);
    let n_mask = non_design.iter().filter(|&&m| m).count();
    if n_mask > keep {
        return Err(Error::UnreachableTarget {
            target: target_v,
            mask_volume: n_mask as f64 / n as f64,
        });
    }

    let secondary = |e: usize| tiebreak.map_or(0.0, |t| t[e]);
    let mut free: Vec<usize> = (0..n).filter(|&e| !non_design[e]).collect();
    free.sort_by(|&a, &b| {
        field[b]
            .partial_cmp(&field[a])
            .unwrap_or(Ordering::Equal)
            .then(
                secondary(b)
                    .partial_cmp(&secondary(a))
                    .unwrap_or(Ordering::Equal),
            )
            .then(a.cmp(&b))
    });
    let n_free_kept = keep - n_mask;
    let mut presence = non_design.to_vec();
    for &e in &free[..n_free_kept] {
        presence[e] = true;
    }
    let lowest_kept = free[..n_free_kept].last().map(|&e| field[e]);
    let highest_dropped = free.get(n_free_kept).map(|&e| field[e]);
    let tau = match (lowest_kept, highest_dropped) {
        (Some(a), Some(b)) => 0.5 * (a + b),
        (None, Some(b)) => b + b.abs().max(1.0),
        (Some(a), None) => a - a.abs().max(1.0),
        (None, None) => f64::NEG_INFINITY,
    };
    Ok(DesignField {
        values: field.to_vec(),
        tau,
        presence,
        non_design: non_design.to_vec(),
    })
}
