//! Raw I/Q signal files.
//!
//! ```text
//! CSIG,version=1,sample_rate_hz=120000000,center_hz=60000000000,n=4096\n
//! <n × (f32 I, f32 Q), little-endian>
//! ```
//!
//! An optional `start_s` header field carries the time of the first sample;
//! it is omitted when zero. Samples are stored as `f32`, so values written
//! from `f64` are rounded once.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::playback::write_atomic;
use crate::types::ComplexSignal;

pub const SIGNAL_MAGIC: &str = "CSIG";

fn parse_err(message: impl Into<String>) -> Error {
    Error::Parse {
        locus: "signal header".into(),
        message: message.into(),
    }
}

pub fn encode_signal(signal: &ComplexSignal) -> Result<Vec<u8>> {
    signal.validate()?;
    let mut out = Vec::with_capacity(64 + 8 * signal.len());
    write!(
        out,
        "{SIGNAL_MAGIC},version=1,sample_rate_hz={},center_hz={},n={}",
        signal.sample_rate,
        signal.center_frequency,
        signal.len()
    )?;
    if signal.start_time != 0.0 {
        write!(out, ",start_s={}", signal.start_time)?;
    }
    out.push(b'\n');
    for s in &signal.samples {
        out.extend_from_slice(&(s.re as f32).to_le_bytes());
        out.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_signal(data: &[u8]) -> Result<ComplexSignal> {
    let newline = data
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| parse_err("missing header line"))?;
    let header = std::str::from_utf8(&data[..newline]).map_err(|_| parse_err("header is not UTF-8"))?;
    let mut fields = header.trim_end_matches('\r').split(',');
    if fields.next() != Some(SIGNAL_MAGIC) {
        return Err(parse_err("expected CSIG header"));
    }
    let mut kv = BTreeMap::new();
    for field in fields {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| parse_err(format!("field `{field}` lacks '='")))?;
        kv.insert(k, v);
    }
    if kv.get("version") != Some(&"1") {
        return Err(parse_err("missing or unsupported version"));
    }
    let number = |key: &str| -> Result<f64> {
        kv.get(key)
            .ok_or_else(|| parse_err(format!("missing {key}")))?
            .parse::<f64>()
            .map_err(|_| parse_err(format!("{key} is not a number")))
    };
    let sample_rate = number("sample_rate_hz")?;
    let center = number("center_hz")?;
    let n: usize = kv
        .get("n")
        .ok_or_else(|| parse_err("missing n"))?
        .parse()
        .map_err(|_| parse_err("n is not a count"))?;
    let start = if kv.contains_key("start_s") {
        number("start_s")?
    } else {
        0.0
    };

    let payload = &data[newline + 1..];
    if payload.len() != 8 * n {
        return Err(Error::Parse {
            locus: "signal payload".into(),
            message: format!(
                "expected {} bytes for {n} samples, found {}",
                8 * n,
                payload.len()
            ),
        });
    }
    let samples = payload
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[..4].try_into().expect("4 bytes"));
            let im = f32::from_le_bytes(c[4..].try_into().expect("4 bytes"));
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    let signal = ComplexSignal::new(samples, sample_rate)?
        .with_center_frequency(center)
        .with_start_time(start);
    signal.validate()?;
    Ok(signal)
}

pub fn read_signal(path: impl AsRef<Path>) -> Result<ComplexSignal> {
    decode_signal(&fs::read(path)?)
}

/// Writes atomically (temporary file, then rename).
pub fn write_signal(signal: &ComplexSignal, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_signal(signal)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_of_f32_representable_samples() {
        let samples = (0..17)
            .map(|i| Complex64::new(i as f64 * 0.25, -(i as f64)))
            .collect();
        let sig = ComplexSignal::new(samples, 120e6)
            .unwrap()
            .with_center_frequency(60e9)
            .with_start_time(2.5);
        let bytes = encode_signal(&sig).unwrap();
        assert!(bytes.starts_with(
            b"CSIG,version=1,sample_rate_hz=120000000,center_hz=60000000000,n=17,start_s=2.5\n"
        ));
        assert_eq!(decode_signal(&bytes).unwrap(), sig);
    }

    #[test]
    fn payload_length_is_checked() {
        let sig = ComplexSignal::new(vec![Complex64::new(1.0, 0.0); 4], 1e6).unwrap();
        let bytes = encode_signal(&sig).unwrap();
        assert!(decode_signal(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_signal(b"CSIG,version=1,n=0\n").is_err());
        assert!(decode_signal(b"IQ\n").is_err());
    }
}
