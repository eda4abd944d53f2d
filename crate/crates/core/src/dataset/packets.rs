//! Gateway packet log: the store-and-forward buffer format.
//!
//! A collar gateway that loses its uplink keeps packets in flash and uploads
//! them later, so a log can contain delayed segments, out-of-order packets and
//! retransmitted duplicates. [`replay_gateway`] rebuilds the ordered stream.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! file header   magic "HWPK" (4 bytes) | version u16 = 1 | flags u16 = 0
//! record        payload_len u32 | payload | crc32(payload) u32
//! payload       id_len u8 | device_id (UTF-8) | base_timestamp i64 | count u16
//!               count × sample
//! sample        delta_ms u32 | acc_x f64 | acc_y f64 | acc_z f64
//!               | label_len u8 | label (UTF-8, empty = unlabeled)
//! ```
//!
//! The checksum is CRC-32/ISO-HDLC (the zlib polynomial) over the payload
//! bytes only.

use std::path::Path;

use crate::dataset::Sample;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"HWPK";
pub const VERSION: u16 = 1;
const FILE_HEADER_LEN: usize = 8;
const SAMPLE_FIXED_LEN: usize = 4 + 3 * 8 + 1;

#[derive(Debug, Clone, PartialEq)]
pub struct PacketSample {
    pub delta_ms: u32,
    pub acc: [f64; 3],
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub device_id: String,
    pub base_timestamp: i64,
    pub samples: Vec<PacketSample>,
}

impl Packet {
    fn encode_payload(&self) -> Result<Vec<u8>> {
        let id = self.device_id.as_bytes();
        let id_len = u8::try_from(id.len())
            .map_err(|_| Error::param(format!("device id {:?} longer than 255 bytes", self.device_id)))?;
        let count = u16::try_from(self.samples.len())
            .map_err(|_| Error::param("packet holds more than 65535 samples"))?;
        let mut buf = Vec::with_capacity(1 + id.len() + 10 + self.samples.len() * SAMPLE_FIXED_LEN);
        buf.push(id_len);
        buf.extend_from_slice(id);
        buf.extend_from_slice(&self.base_timestamp.to_le_bytes());
        buf.extend_from_slice(&count.to_le_bytes());
        for s in &self.samples {
            buf.extend_from_slice(&s.delta_ms.to_le_bytes());
            for v in s.acc {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            let label = s.label.as_deref().unwrap_or("").as_bytes();
            let label_len = u8::try_from(label.len())
                .map_err(|_| Error::param("label longer than 255 bytes"))?;
            buf.push(label_len);
            buf.extend_from_slice(label);
        }
        Ok(buf)
    }

    pub fn to_samples(&self) -> impl Iterator<Item = Sample> + '_ {
        self.samples.iter().map(move |s| Sample {
            device_id: self.device_id.clone(),
            timestamp: self.base_timestamp + i64::from(s.delta_ms),
            acc_x: s.acc[0],
            acc_y: s.acc[1],
            acc_z: s.acc[2],
            label: s.label.clone(),
        })
    }
}

/// Groups consecutive samples of each device into packets of at most
/// `max_per_packet` samples.
pub fn packetize(samples: &[Sample], max_per_packet: usize) -> Result<Vec<Packet>> {
    if max_per_packet == 0 || max_per_packet > usize::from(u16::MAX) {
        return Err(Error::param("max_per_packet must be in 1..=65535"));
    }
    let mut packets: Vec<Packet> = Vec::new();
    for s in samples {
        let start_new = match packets.last() {
            None => true,
            Some(p) => {
                p.device_id != s.device_id
                    || p.samples.len() >= max_per_packet
                    || s.timestamp < p.base_timestamp
                    || s.timestamp - p.base_timestamp > i64::from(u32::MAX)
            }
        };
        if start_new {
            packets.push(Packet {
                device_id: s.device_id.clone(),
                base_timestamp: s.timestamp,
                samples: Vec::new(),
            });
        }
        let p = packets.last_mut().expect("packet pushed above");
        p.samples.push(PacketSample {
            delta_ms: (s.timestamp - p.base_timestamp) as u32,
            acc: [s.acc_x, s.acc_y, s.acc_z],
            label: s.label.clone(),
        });
    }
    Ok(packets)
}

pub fn encode_packet_log(packets: &[Packet]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    for p in packets {
        let payload = p.encode_payload()?;
        out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&payload);
        out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    }
    Ok(out)
}

/// Cursor that reports truncation against absolute file offsets.
struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    base: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Truncated {
                offset: (self.base + self.pos) as u64,
                msg: format!("need {n} bytes for {what}, {} left", self.bytes.len() - self.pos),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn i64(&mut self, what: &str) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn string(&mut self, len: usize, what: &str) -> Result<String> {
        let offset = self.base + self.pos;
        let bytes = self.take(len, what)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::Format {
            path: "<packet log>".into(),
            line: None,
            msg: format!("{what} at byte offset {offset} is not UTF-8"),
        })
    }
}

/// Decodes every packet in file order.
pub fn decode_packet_log(bytes: &[u8]) -> Result<Vec<Packet>> {
    let mut cur = Cursor {
        bytes,
        pos: 0,
        base: 0,
    };
    let magic = cur.take(4, "file magic")?;
    if magic != MAGIC {
        return Err(Error::Format {
            path: "<packet log>".into(),
            line: None,
            msg: format!("bad magic {magic:?}, expected {MAGIC:?}"),
        });
    }
    let version = cur.u16("version")?;
    if version != VERSION {
        return Err(Error::Format {
            path: "<packet log>".into(),
            line: None,
            msg: format!("unsupported packet log version {version}"),
        });
    }
    cur.u16("flags")?;
    debug_assert_eq!(cur.pos, FILE_HEADER_LEN);

    let mut packets = Vec::new();
    while cur.pos < bytes.len() {
        let record_offset = cur.pos;
        let len = cur.u32("payload length")? as usize;
        let payload_offset = cur.pos;
        let payload = cur.take(len, "payload")?;
        let crc = cur.u32("checksum")?;
        if crc32fast::hash(payload) != crc {
            return Err(Error::Checksum {
                offset: record_offset as u64,
            });
        }
        let mut p = Cursor {
            bytes: payload,
            pos: 0,
            base: payload_offset,
        };
        let id_len = usize::from(p.u8("device id length")?);
        let device_id = p.string(id_len, "device id")?;
        let base_timestamp = p.i64("base timestamp")?;
        let count = p.u16("sample count")?;
        let mut samples = Vec::with_capacity(usize::from(count));
        for _ in 0..count {
            let delta_ms = p.u32("sample delta")?;
            let acc = [p.f64("acc_x")?, p.f64("acc_y")?, p.f64("acc_z")?];
            let label_len = usize::from(p.u8("label length")?);
            let label = p.string(label_len, "label")?;
            samples.push(PacketSample {
                delta_ms,
                acc,
                label: (!label.is_empty()).then_some(label),
            });
        }
        if p.pos != payload.len() {
            return Err(Error::Format {
                path: "<packet log>".into(),
                line: None,
                msg: format!(
                    "record at byte offset {record_offset} has {} trailing payload bytes",
                    payload.len() - p.pos
                ),
            });
        }
        packets.push(Packet {
            device_id,
            base_timestamp,
            samples,
        });
    }
    Ok(packets)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReplayReport {
    pub packets: usize,
    pub samples_read: usize,
    pub duplicates_removed: usize,
}

/// Rebuilds the sample stream from a packet log: sorted by
/// `(device_id, timestamp)`, one sample per key, later packets in the log
/// overriding earlier ones.
pub fn replay_gateway(bytes: &[u8]) -> Result<(Vec<Sample>, ReplayReport)> {
    let packets = decode_packet_log(bytes)?;
    let mut samples: Vec<Sample> = packets.iter().flat_map(Packet::to_samples).collect();
    let samples_read = samples.len();
    samples.sort_by(|a, b| a.key().cmp(&b.key()));
    // Stable sort keeps log order within a key; keep the last occurrence.
    let mut out: Vec<Sample> = Vec::with_capacity(samples.len());
    for s in samples {
        match out.last_mut() {
            Some(prev) if prev.key() == s.key() => *prev = s,
            _ => out.push(s),
        }
    }
    let report = ReplayReport {
        packets: packets.len(),
        samples_read,
        duplicates_removed: samples_read - out.len(),
    };
    Ok((out, report))
}

pub fn replay_gateway_file(path: &Path) -> Result<(Vec<Sample>, ReplayReport)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    replay_gateway(&bytes)
}

pub fn is_packet_log(bytes: &[u8]) -> bool {
    bytes.starts_with(&MAGIC)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(device: &str, n: usize) -> Vec<Sample> {
        (0..n)
            .map(|i| Sample {
                device_id: device.into(),
                timestamp: 1_000 + 100 * i as i64,
                acc_x: i as f64 * 0.01,
                acc_y: -0.5,
                acc_z: 0.9,
                label: Some(if i % 2 == 0 { "RES" } else { "RUS" }.into()),
            })
            .collect()
    }

    #[test]
    fn retransmit_is_deduplicated() {
        let samples = stream("a", 5);
        let packets = packetize(&samples, 10).unwrap();
        let log = encode_packet_log(&[packets[0].clone(), packets[0].clone()]).unwrap();
        let (out, report) = replay_gateway(&log).unwrap();
        assert_eq!(out, samples);
        assert_eq!(report.duplicates_removed, 5);
        assert_eq!(report.packets, 2);
    }

    #[test]
    fn late_upload_is_reordered() {
        let samples = stream("a", 30);
        let mut packets = packetize(&samples, 10).unwrap();
        packets.swap(0, 2);
        let log = encode_packet_log(&packets).unwrap();
        let (out, _) = replay_gateway(&log).unwrap();
        assert!(out.windows(2).all(|w| w[0].timestamp < w[1].timestamp));
        assert_eq!(out, samples);
    }

    #[test]
    fn last_write_wins() {
        let samples = stream("a", 3);
        let mut fixed = samples.clone();
        fixed[1].acc_x = 7.0;
        let log = encode_packet_log(&[
            packetize(&samples, 10).unwrap().remove(0),
            packetize(&fixed, 10).unwrap().remove(0),
        ])
        .unwrap();
        let (out, _) = replay_gateway(&log).unwrap();
        assert_eq!(out[1].acc_x, 7.0);
    }

    #[test]
    fn truncation_names_offset() {
        let log = encode_packet_log(&packetize(&stream("a", 4), 10).unwrap()).unwrap();
        let cut = &log[..log.len() - 3];
        match replay_gateway(cut) {
            Err(Error::Truncated { offset, .. }) => {
                assert_eq!(offset as usize, log.len() - 4, "checksum starts 4 bytes from end");
            }
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn corrupted_payload_fails_checksum() {
        let mut log = encode_packet_log(&packetize(&stream("a", 4), 10).unwrap()).unwrap();
        log[FILE_HEADER_LEN + 10] ^= 0xff;
        assert!(matches!(
            replay_gateway(&log),
            Err(Error::Checksum { offset: 8 })
        ));
    }

    #[test]
    fn bad_magic() {
        assert!(matches!(replay_gateway(b"NOPE\x01\x00\x00\x00"), Err(Error::Format { .. })));
        assert!(!is_packet_log(b"device_id,timestamp"));
    }
}
