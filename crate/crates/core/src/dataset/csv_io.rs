//! Sample CSV reading and writing.
//!
//! Canonical column order: `device_id,timestamp,acc_x,acc_y,acc_z,label`.
//! On input, header names are matched case-insensitively and the collar
//! export names (`deviceId`, `Timestamp`, `AccX`, `AccY`, `AccZ`, `Label`) are
//! accepted. Only the three acceleration columns are required; missing device
//! and timestamp columns are injected from [`ParseOptions`].

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::dataset::Sample;
use crate::error::{Error, Result};

pub const SAMPLE_HEADER: [&str; 6] = ["device_id", "timestamp", "acc_x", "acc_y", "acc_z", "label"];

#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Device id used when the file has no device column.
    pub device_id: String,
    /// First timestamp (epoch ms) when the file has no timestamp column.
    pub base_timestamp: i64,
    /// Spacing of injected timestamps.
    pub period_ms: i64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            device_id: "device-0".to_string(),
            base_timestamp: 0,
            period_ms: 100,
        }
    }
}

/// A data row that could not be turned into a [`Sample`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedRow {
    /// 1-based line number in the source file.
    pub line: u64,
    pub reason: String,
    pub raw: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedSamples {
    pub samples: Vec<Sample>,
    pub rejects: Vec<RejectedRow>,
}

struct Columns {
    device: Option<usize>,
    timestamp: Option<usize>,
    acc: [usize; 3],
    label: Option<usize>,
}

fn find(headers: &csv::StringRecord, names: &[&str]) -> Option<usize> {
    headers.iter().position(|h| {
        let h = h.trim().to_ascii_lowercase();
        names.iter().any(|n| *n == h)
    })
}

fn columns(headers: &csv::StringRecord, origin: &str) -> Result<Columns> {
    let acc_x = find(headers, &["acc_x", "accx", "x"]);
    let acc_y = find(headers, &["acc_y", "accy", "y"]);
    let acc_z = find(headers, &["acc_z", "accz", "z"]);
    let missing: Vec<&str> = [("acc_x", acc_x), ("acc_y", acc_y), ("acc_z", acc_z)]
        .iter()
        .filter(|(_, c)| c.is_none())
        .map(|(n, _)| *n)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Schema {
            path: origin.to_string(),
            msg: format!("missing required column(s): {}", missing.join(", ")),
        });
    }
    Ok(Columns {
        device: find(headers, &["device_id", "deviceid", "device"]),
        timestamp: find(headers, &["timestamp", "time", "ts"]),
        acc: [acc_x.unwrap(), acc_y.unwrap(), acc_z.unwrap()],
        label: find(headers, &["label", "class", "activity"]),
    })
}

/// Parses delimited sample text. Malformed rows land in
/// [`ParsedSamples::rejects`]; the returned samples are sorted by
/// `(device_id, timestamp)` (stable, so file order breaks ties).
pub fn parse_samples_from_reader<R: Read>(
    reader: R,
    origin: &str,
    opts: &ParseOptions,
) -> Result<ParsedSamples> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Format {
            path: origin.to_string(),
            line: Some(1),
            msg: e.to_string(),
        })?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Ok(ParsedSamples::default());
    }
    let cols = columns(&headers, origin)?;

    let mut parsed = ParsedSamples::default();
    let mut row_index: i64 = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Format {
            path: origin.to_string(),
            line: e.position().map(|p| p.line()),
            msg: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let raw = record.iter().collect::<Vec<_>>().join(",");
        let reject = |reason: String| RejectedRow {
            line,
            reason,
            raw: raw.clone(),
        };
        if record.iter().all(str::is_empty) {
            continue;
        }

        let mut acc = [0.0; 3];
        let mut bad = None;
        for (axis, &col) in cols.acc.iter().enumerate() {
            let name = SAMPLE_HEADER[2 + axis];
            match record.get(col).map(str::parse::<f64>) {
                Some(Ok(v)) if v.is_finite() => acc[axis] = v,
                Some(Ok(_)) => bad = Some(format!("non-finite {name}")),
                Some(Err(_)) => bad = Some(format!("non-numeric {name}")),
                None => bad = Some(format!("missing {name}")),
            }
            if bad.is_some() {
                break;
            }
        }
        if let Some(reason) = bad {
            parsed.rejects.push(reject(reason));
            row_index += 1;
            continue;
        }

        let timestamp = match cols.timestamp {
            Some(col) => match record.get(col).map(str::parse::<i64>) {
                Some(Ok(t)) => t,
                _ => {
                    parsed.rejects.push(reject("non-integer timestamp".into()));
                    row_index += 1;
                    continue;
                }
            },
            None => opts.base_timestamp + row_index * opts.period_ms,
        };
        let device_id = match cols.device.and_then(|c| record.get(c)) {
            Some(d) if !d.is_empty() => d.to_string(),
            Some(_) => {
                parsed.rejects.push(reject("empty device_id".into()));
                row_index += 1;
                continue;
            }
            None => opts.device_id.clone(),
        };
        let label = cols
            .label
            .and_then(|c| record.get(c))
            .filter(|l| !l.is_empty())
            .map(str::to_string);

        parsed.samples.push(Sample {
            device_id,
            timestamp,
            acc_x: acc[0],
            acc_y: acc[1],
            acc_z: acc[2],
            label,
        });
        row_index += 1;
    }
    parsed.samples.sort_by(|a, b| a.key().cmp(&b.key()));
    Ok(parsed)
}

pub fn parse_samples(path: &Path, opts: &ParseOptions) -> Result<ParsedSamples> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_samples_from_reader(file, &path.display().to_string(), opts)
}

pub fn write_samples<W: Write>(writer: W, samples: &[Sample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let wrap = |e: csv::Error| Error::Format {
        path: "<output>".into(),
        line: None,
        msg: e.to_string(),
    };
    w.write_record(SAMPLE_HEADER).map_err(wrap)?;
    for s in samples {
        w.write_record([
            s.device_id.clone(),
            s.timestamp.to_string(),
            s.acc_x.to_string(),
            s.acc_y.to_string(),
            s.acc_z.to_string(),
            s.label.clone().unwrap_or_default(),
        ])
        .map_err(wrap)?;
    }
    w.flush()
        .map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

pub fn write_rejects<W: Write>(writer: W, rejects: &[RejectedRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let wrap = |e: csv::Error| Error::Format {
        path: "<output>".into(),
        line: None,
        msg: e.to_string(),
    };
    w.write_record(["line", "reason", "raw"]).map_err(wrap)?;
    for r in rejects {
        w.write_record([r.line.to_string(), r.reason.clone(), r.raw.clone()])
            .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ParsedSamples> {
        parse_samples_from_reader(text.as_bytes(), "mem", &ParseOptions::default())
    }

    #[test]
    fn four_column_export_gets_injected_ids() {
        let text = "AccX,AccY,AccZ,Label\n0.1,0.2,0.9,RES\n0.0,0.1,1.0,RES\n0.3,0.3,0.8,FEP\n";
        let opts = ParseOptions {
            device_id: "cow-7".into(),
            base_timestamp: 1000,
            period_ms: 50,
        };
        let parsed = parse_samples_from_reader(text.as_bytes(), "mem", &opts).unwrap();
        assert_eq!(parsed.samples.len(), 3);
        assert!(parsed.rejects.is_empty());
        let ts: Vec<i64> = parsed.samples.iter().map(|s| s.timestamp).collect();
        assert_eq!(ts, vec![1000, 1050, 1100]);
        assert!(parsed.samples.iter().all(|s| s.device_id == "cow-7"));
        assert_eq!(parsed.samples[2].label.as_deref(), Some("FEP"));
    }

    #[test]
    fn header_only_is_empty() {
        let parsed = parse("device_id,timestamp,acc_x,acc_y,acc_z,label\n").unwrap();
        assert!(parsed.samples.is_empty());
        assert!(parsed.rejects.is_empty());
        assert!(parse("").unwrap().samples.is_empty());
    }

    #[test]
    fn bad_rows_are_rejected_not_dropped() {
        let text = "device_id,timestamp,acc_x,acc_y,acc_z,label\n\
                    a,2,0.1,0.2,0.3,RES\n\
                    a,1,oops,0.2,0.3,RES\n\
                    a,0,0.1,0.2,0.3,RES\n";
        let parsed = parse(text).unwrap();
        assert_eq!(parsed.samples.len(), 2);
        assert_eq!(parsed.samples[0].timestamp, 0);
        assert_eq!(parsed.rejects.len(), 1);
        assert_eq!(parsed.rejects[0].line, 3);
        assert!(parsed.rejects[0].reason.contains("acc_x"));
    }

    #[test]
    fn missing_axis_column_is_schema_error() {
        let err = parse("device_id,timestamp,acc_x,acc_y\n").unwrap_err();
        assert!(matches!(err, Error::Schema { .. }), "{err}");
        assert!(err.to_string().contains("acc_z"));
    }

    #[test]
    fn write_then_parse() {
        let samples = vec![Sample {
            device_id: "b".into(),
            timestamp: 5,
            acc_x: 0.1,
            acc_y: -2.5e-3,
            acc_z: 0.98,
            label: None,
        }];
        let mut buf = Vec::new();
        write_samples(&mut buf, &samples).unwrap();
        let back = parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.samples, samples);
    }
}
