//! IQ capture files and CSV result tables.
//!
//! An IQ file is headerless: 32-bit little-endian floats, I then Q for every
//! sample. Its sidecar `<file>.meta` holds `sample_rate_hz` and `scs_khz` as
//! `key = value` lines.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::RawConfig;
use crate::error::{config_err, Error, Result};
use crate::Cplx;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IqMeta {
    pub sample_rate_hz: f64,
    pub scs_khz: u32,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn encode_iq(samples: &[Cplx]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * 8);
    for v in samples {
        out.extend_from_slice(&(v.re as f32).to_le_bytes());
        out.extend_from_slice(&(v.im as f32).to_le_bytes());
    }
    out
}

pub fn decode_iq(bytes: &[u8]) -> Result<Vec<Cplx>> {
    if !bytes.len().is_multiple_of(8) {
        return Err(config_err!(
            "IQ data of {} bytes is not whole f32 I/Q pairs",
            bytes.len()
        ));
    }
    let f = |b: &[u8]| f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]]));
    Ok(bytes
        .chunks_exact(8)
        .map(|c| Cplx::new(f(&c[..4]), f(&c[4..])))
        .collect())
}

pub fn write_iq(path: &Path, samples: &[Cplx], meta: &IqMeta) -> Result<()> {
    std::fs::write(path, encode_iq(samples)).map_err(io_err(path))?;
    let side = sidecar_path(path);
    let text = format!("sample_rate_hz = {}\nscs_khz = {}\n", meta.sample_rate_hz, meta.scs_khz);
    std::fs::write(&side, text).map_err(io_err(&side))
}

pub fn read_iq(path: &Path) -> Result<Vec<Cplx>> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    decode_iq(&bytes)
}

/// Sidecar of `path`, or `None` when there is none.
pub fn read_iq_meta(path: &Path) -> Result<Option<IqMeta>> {
    let side = sidecar_path(path);
    if !side.exists() {
        return Ok(None);
    }
    let raw = RawConfig::from_file(&side)?;
    let meta = IqMeta {
        sample_rate_hz: raw
            .get("sample_rate_hz")?
            .ok_or_else(|| config_err!("{}: missing sample_rate_hz", side.display()))?,
        scs_khz: raw
            .get("scs_khz")?
            .ok_or_else(|| config_err!("{}: missing scs_khz", side.display()))?,
    };
    raw.reject_unused()?;
    Ok(Some(meta))
}

pub const CSV_HEADER: &str = "scenario,snr_db,trials,errors,rate,elapsed_s";

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub scenario: String,
    pub snr_db: f64,
    pub trials: usize,
    pub errors: usize,
    pub elapsed_s: f64,
}

impl CsvRow {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.errors as f64 / self.trials as f64
        }
    }
}

pub fn csv_string(rows: &[CsvRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{:.6},{:.6}",
            r.scenario,
            r.snr_db,
            r.trials,
            r.errors,
            r.rate(),
            r.elapsed_s
        );
    }
    s
}

pub fn write_csv(path: &Path, rows: &[CsvRow]) -> Result<()> {
    std::fs::write(path, csv_string(rows)).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iq_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cap.iq");
        let x: Vec<Cplx> = (0..100)
            .map(|i| Cplx::new(i as f32 as f64 * 0.25, -(i as f64) / 8.0))
            .collect();
        let meta = IqMeta {
            sample_rate_hz: 3.84e6,
            scs_khz: 15,
        };
        write_iq(&p, &x, &meta).unwrap();
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 800);
        assert_eq!(read_iq(&p).unwrap(), x);
        assert_eq!(read_iq_meta(&p).unwrap(), Some(meta));
        assert_eq!(&encode_iq(&[Cplx::new(1.0, -2.0)]), &[0, 0, 0x80, 0x3f, 0, 0, 0, 0xc0]);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_iq(Path::new("/nonexistent/cap.iq")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent/cap.iq"));
    }

    #[test]
    fn csv_layout() {
        let rows = vec![CsvRow {
            scenario: "pdsch".into(),
            snr_db: -1.5,
            trials: 8,
            errors: 2,
            elapsed_s: 0.0,
        }];
        assert_eq!(
            csv_string(&rows),
            "scenario,snr_db,trials,errors,rate,elapsed_s\npdsch,-1.5,8,2,0.250000,0.000000\n"
        );
    }
}
