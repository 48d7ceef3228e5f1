//! File writers: binary PGM with a JSON sidecar, CSV with an embedded config
//! header, and NDJSON.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::slice::{Pixel, SliceGrid};

/// CSV value written for pixels without a resolved value.
pub const UNRESOLVED_SENTINEL: f64 = -1.0;

/// Affine map from field values to PGM samples; unresolved pixels are written as 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrayMapping {
    pub maxval: u16,
    pub value_min: f64,
    pub value_max: f64,
    /// sample = round((value - value_min) * scale), clamped to 0..=maxval.
    pub scale: f64,
    pub unresolved_sample: u16,
}

impl GrayMapping {
    pub fn fit(grid: &SliceGrid, bits: u32) -> Self {
        let maxval: u16 = if bits == 8 { 255 } else { 65535 };
        let (lo, hi) = grid
            .pixels
            .iter()
            .filter_map(Pixel::value)
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (0.0, 0.0) };
        let scale = if hi > lo { maxval as f64 / (hi - lo) } else { 0.0 };
        GrayMapping { maxval, value_min: lo, value_max: hi, scale, unresolved_sample: 0 }
    }

    pub fn sample(&self, p: &Pixel) -> u16 {
        match p.value() {
            Some(v) if v.is_finite() => ((v - self.value_min) * self.scale).round().clamp(0.0, self.maxval as f64) as u16,
            _ => self.unresolved_sample,
        }
    }
}

/// Binary PGM bytes; the top image row is the last grid row so that t grows upward.
pub fn pgm_bytes(grid: &SliceGrid, map: &GrayMapping) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", grid.res_u, grid.res_v, map.maxval).into_bytes();
    for j in (0..grid.res_v).rev() {
        for i in 0..grid.res_u {
            let s = map.sample(&grid.get(i, j));
            if map.maxval > 255 {
                out.extend_from_slice(&s.to_be_bytes());
            } else {
                out.push(s as u8);
            }
        }
    }
    out
}

pub fn pixel_status(p: &Pixel) -> &'static str {
    match p {
        Pixel::Value(_) => "ok",
        Pixel::NegInfinity => "neg_infinity",
        Pixel::Undefined => "undefined",
        Pixel::Unresolved => "unresolved",
    }
}

pub fn pixel_csv_value(p: &Pixel) -> String {
    match p {
        Pixel::Value(v) => fmt_f64(*v),
        Pixel::NegInfinity => "-inf".into(),
        Pixel::Undefined => "nan".into(),
        Pixel::Unresolved => fmt_f64(UNRESOLVED_SENTINEL),
    }
}

/// Shortest representation that parses back to the same f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// CSV text: config header lines, then an RFC-4180 table.
pub fn csv_text(cfg: &RunConfig, columns: &[&str], rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(columns)?;
    for r in rows {
        w.write_record(r)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8");
    Ok(format!("{}{}", cfg.embedded_header(), body))
}

pub fn grid_csv_rows(spec: &crate::slice::SliceSpec, grid: &SliceGrid) -> Vec<Vec<String>> {
    let mut rows = Vec::with_capacity(grid.pixels.len());
    for j in 0..grid.res_v {
        for i in 0..grid.res_u {
            let (s, t) = spec.coords(i, j);
            let p = grid.get(i, j);
            rows.push(vec![i.to_string(), j.to_string(), fmt_f64(s), fmt_f64(t), pixel_csv_value(&p), pixel_status(&p).into()]);
        }
    }
    rows
}

pub const GRID_COLUMNS: [&str; 6] = ["i", "j", "s", "t", "value", "status"];

/// One JSON value per line.
pub fn ndjson_text<T: Serialize>(records: &[T]) -> CliResult<String> {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r)?);
        s.push('\n');
    }
    Ok(s)
}

/// Writes `contents` to `dir/name`, creating `dir` if needed.
pub fn write_file(dir: &Path, name: &str, contents: &[u8]) -> CliResult<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut f = fs::File::create(&path)?;
    f.write_all(contents)?;
    Ok(path)
}

/// Header record shared by JSON outputs.
#[derive(Debug, Serialize)]
pub struct Provenance<'a> {
    pub version: &'a str,
    pub config: &'a RunConfig,
}

impl<'a> Provenance<'a> {
    pub fn new(cfg: &'a RunConfig) -> Self {
        Provenance { version: crate::VERSION, config: cfg }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(values: Vec<Pixel>, w: usize) -> SliceGrid {
        SliceGrid { res_u: w, res_v: values.len() / w, pixels: values }
    }

    #[test]
    fn gray_mapping_endpoints() {
        let g = grid(vec![Pixel::Value(1.0), Pixel::Value(3.0), Pixel::Unresolved, Pixel::Value(2.0)], 2);
        let m = GrayMapping::fit(&g, 16);
        assert_eq!(m.sample(&Pixel::Value(1.0)), 0);
        assert_eq!(m.sample(&Pixel::Value(3.0)), 65535);
        assert_eq!(m.sample(&Pixel::Value(2.0)), 32768);
        assert_eq!(m.sample(&Pixel::Unresolved), 0);
    }

    #[test]
    fn pgm_layout() {
        let g = grid(vec![Pixel::Value(0.0), Pixel::Value(1.0), Pixel::Value(1.0), Pixel::Value(0.0)], 2);
        let m = GrayMapping::fit(&g, 16);
        let b = pgm_bytes(&g, &m);
        let header = b"P5\n2 2\n65535\n";
        assert_eq!(&b[..header.len()], header);
        // top row is grid row 1: (1.0, 0.0)
        assert_eq!(&b[header.len()..], &[0xff, 0xff, 0, 0, 0, 0, 0xff, 0xff]);
        let b8 = pgm_bytes(&g, &GrayMapping::fit(&g, 8));
        assert_eq!(b8.len(), b"P5\n2 2\n255\n".len() + 4);
    }

    #[test]
    fn constant_field_maps_to_zero() {
        let g = grid(vec![Pixel::Value(0.5); 4], 2);
        let m = GrayMapping::fit(&g, 16);
        assert_eq!(m.scale, 0.0);
        assert_eq!(m.sample(&Pixel::Value(0.5)), 0);
    }

    #[test]
    fn csv_has_header_and_crlf() {
        let cfg = RunConfig::default();
        let s = csv_text(&cfg, &["a", "b"], &[vec!["1".into(), "x,y".into()]]).unwrap();
        assert!(s.starts_with(crate::config::EMBED_BEGIN));
        assert!(s.ends_with("a,b\r\n1,\"x,y\"\r\n"));
        assert_eq!(pixel_csv_value(&Pixel::Unresolved), "-1.0");
    }
}
