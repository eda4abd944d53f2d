//! Feature table CSV.
//!
//! Column order: `device_id,timestamp_max,label,degenerate`, then the feature
//! columns in table order. `degenerate` is `0` or `1`; an empty `label` means
//! unlabeled. Values are written in shortest round-trip form, so
//! write → read reproduces every `f64` exactly.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::features::{FeatureTable, RowMeta};

pub const META_COLUMNS: [&str; 4] = ["device_id", "timestamp_max", "label", "degenerate"];

pub fn write_feature_table<W: Write>(writer: W, table: &FeatureTable) -> Result<()> {
    let wrap = |e: csv::Error| Error::Format {
        path: "<feature output>".into(),
        line: None,
        msg: e.to_string(),
    };
    let mut w = csv::Writer::from_writer(writer);
    let header: Vec<&str> = META_COLUMNS
        .iter()
        .copied()
        .chain(table.column_names.iter().map(String::as_str))
        .collect();
    w.write_record(&header).map_err(wrap)?;
    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for (row, meta) in table.rows.iter().zip(&table.row_meta) {
        record.clear();
        record.push(meta.device_id.clone());
        record.push(meta.timestamp_max.to_string());
        record.push(meta.label.clone().unwrap_or_default());
        record.push(u8::from(meta.degenerate).to_string());
        record.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&record).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io("<feature output>", e))
}

pub fn read_feature_table<R: Read>(reader: R, origin: &str) -> Result<FeatureTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let format = |line: Option<u64>, msg: String| Error::Format {
        path: origin.to_string(),
        line,
        msg,
    };
    let headers = rdr.headers().map_err(|e| format(Some(1), e.to_string()))?.clone();
    let head: Vec<&str> = headers.iter().take(META_COLUMNS.len()).collect();
    if head != META_COLUMNS {
        return Err(Error::Schema {
            path: origin.to_string(),
            msg: format!("expected leading columns {META_COLUMNS:?}, found {head:?}"),
        });
    }
    let names: Vec<String> = headers.iter().skip(META_COLUMNS.len()).map(str::to_string).collect();
    let mut rows = Vec::new();
    let mut metas = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| format(e.position().map(|p| p.line()), e.to_string()))?;
        let line = record.position().map(|p| p.line());
        if record.len() != headers.len() {
            return Err(format(
                line,
                format!("{} fields, header has {}", record.len(), headers.len()),
            ));
        }
        let timestamp_max = record[1]
            .parse::<i64>()
            .map_err(|_| format(line, format!("bad timestamp_max {:?}", &record[1])))?;
        let degenerate = match &record[3] {
            "0" => false,
            "1" => true,
            other => return Err(format(line, format!("bad degenerate flag {other:?}"))),
        };
        let values = record
            .iter()
            .skip(META_COLUMNS.len())
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| format(line, format!("bad feature value: {e}")))?;
        metas.push(RowMeta {
            device_id: record[0].to_string(),
            timestamp_max,
            label: (!record[2].is_empty()).then(|| record[2].to_string()),
            degenerate,
        });
        rows.push(values);
    }
    FeatureTable::new(names, rows, metas)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_exact() {
        let table = FeatureTable::new(
            vec!["AccX".into(), "Pitch_lag_1".into()],
            vec![vec![0.1 + 0.2, -1e-300], vec![f64::MAX, 3.0]],
            vec![
                RowMeta {
                    device_id: "cow-01".into(),
                    timestamp_max: 5,
                    label: Some("STN".into()),
                    degenerate: true,
                },
                RowMeta {
                    device_id: "cow-01".into(),
                    timestamp_max: 9,
                    label: None,
                    degenerate: false,
                },
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_feature_table(&mut buf, &table).unwrap();
        let back = read_feature_table(buf.as_slice(), "mem").unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn wrong_header_rejected() {
        let err = read_feature_table("a,b,c,d,AccX\n".as_bytes(), "mem").unwrap_err();
        assert!(matches!(err, Error::Schema { .. }));
    }
}
