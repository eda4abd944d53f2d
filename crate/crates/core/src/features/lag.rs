use log::warn;

use crate::error::{Error, Result};
use crate::features::naming::lagged_name;
use crate::features::FeatureTable;

/// Appends `C_lag_k` for every base column `C` and `k` in `1..=max_lag`,
/// laid out as the base block followed by one block per lag. Lags never
/// cross device boundaries; the first `max_lag` rows of every device are
/// dropped because their history is incomplete.
pub fn add_lag_features(table: &FeatureTable, max_lag: usize) -> Result<FeatureTable> {
    if max_lag == 0 {
        return Ok(table.clone());
    }
    table.check_row_order()?;

    let base = table.n_cols();
    let mut names = table.column_names.clone();
    for k in 1..=max_lag {
        names.extend(table.column_names.iter().map(|c| lagged_name(c, k)));
    }
    let mut out = FeatureTable::empty(names);

    let mut start = 0;
    while start < table.n_rows() {
        let device = &table.row_meta[start].device_id;
        let end = start
            + table.row_meta[start..]
                .iter()
                .position(|m| &m.device_id != device)
                .unwrap_or(table.n_rows() - start);
        if end - start <= max_lag {
            warn!(
                "device {device}: {} rows cannot support {max_lag} lags; dropped",
                end - start
            );
        }
        for r in (start + max_lag)..end {
            let mut values = Vec::with_capacity(base * (max_lag + 1));
            values.extend_from_slice(&table.rows[r]);
            for k in 1..=max_lag {
                values.extend_from_slice(&table.rows[r - k]);
            }
            out.push_row(values, table.row_meta[r].clone())
                .map_err(|e| Error::Structure(e.to_string()))?;
        }
        start = end;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::RowMeta;

    fn single_column(device: &str, values: &[f64], t0: i64) -> FeatureTable {
        let mut t = FeatureTable::empty(vec!["C".into()]);
        for (i, v) in values.iter().enumerate() {
            t.push_row(
                vec![*v],
                RowMeta {
                    device_id: device.into(),
                    timestamp_max: t0 + i as i64,
                    label: None,
                    degenerate: false,
                },
            )
            .unwrap();
        }
        t
    }

    #[test]
    fn shift_definition() {
        let t = single_column("a", &[10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0], 0);
        let lagged = add_lag_features(&t, 5).unwrap();
        assert_eq!(lagged.n_rows(), 2);
        assert_eq!(lagged.row_meta[0].timestamp_max, 5);
        let c5 = lagged.column_index("C_lag_5").unwrap();
        assert_eq!(lagged.rows[1][c5], 20.0);
        assert_eq!(lagged.rows[1][0], 70.0);
        assert_eq!(lagged.n_cols(), 6);
    }

    #[test]
    fn no_leakage_across_devices() {
        let mut t = single_column("a", &[1.0; 6], 0);
        let b = single_column("b", &[2.0; 6], 0);
        for (row, meta) in b.rows.iter().zip(&b.row_meta) {
            t.push_row(row.clone(), meta.clone()).unwrap();
        }
        let lagged = add_lag_features(&t, 5).unwrap();
        assert_eq!(lagged.n_rows(), 2);
        assert!(lagged.rows[1].iter().all(|v| *v == 2.0));
    }

    #[test]
    fn short_device_contributes_nothing() {
        let t = single_column("a", &[1.0, 2.0, 3.0], 0);
        assert_eq!(add_lag_features(&t, 3).unwrap().n_rows(), 0);
    }

    #[test]
    fn unordered_rows_rejected() {
        let t = single_column("a", &[1.0, 2.0, 3.0], 0);
        let mut bad = t.clone();
        bad.row_meta.swap(0, 2);
        assert!(add_lag_features(&bad, 1).is_err());
    }
}
