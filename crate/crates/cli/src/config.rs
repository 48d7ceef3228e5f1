//! Run configuration: a flat key-value file (a TOML subset) with every
//! value overridable from the command line.
//!
//! Complex numbers are written "re,im"; complex 3-vectors are three such
//! pairs joined by ';'.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use qauto_core::green::GreenOptions;
use qauto_core::partition::{FindOptions, RateOptions, WedgeParams, WedgeSearch};
use qauto_core::phi::PhiOptions;
use qauto_core::{AffinePoint, Params};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CliError, CliResult};
use crate::slice::{Field, FieldOptions, SliceSpec};

/// Marker lines delimiting a config embedded in a CSV header.
pub const EMBED_BEGIN: &str = "# qauto-config begin";
pub const EMBED_END: &str = "# qauto-config end";

/// A complex number serialized as "re,im".
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cx(pub Complex64);

impl FromStr for Cx {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        let bad = || CliError::Config(format!("expected \"re,im\", got {s:?}"));
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        match parts.as_slice() {
            [re] => Ok(Cx(Complex64::new(re.parse().map_err(|_| bad())?, 0.0))),
            [re, im] => Ok(Cx(Complex64::new(re.parse().map_err(|_| bad())?, im.parse().map_err(|_| bad())?))),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Cx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // `{:?}` on f64 is the shortest string that parses back exactly
        write!(f, "{:?},{:?}", self.0.re, self.0.im)
    }
}

impl Serialize for Cx {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Cx {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A complex 3-vector serialized as "re,im;re,im;re,im".
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cx3(pub [Complex64; 3]);

impl Cx3 {
    pub fn real(x: f64, y: f64, z: f64) -> Self {
        Cx3([Complex64::new(x, 0.0), Complex64::new(y, 0.0), Complex64::new(z, 0.0)])
    }

    pub fn point(&self) -> AffinePoint {
        AffinePoint::from_coords(self.0)
    }
}

impl FromStr for Cx3 {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        let parts: Vec<&str> = s.split(';').collect();
        if parts.len() != 3 {
            return Err(CliError::Config(format!("expected three \"re,im\" entries separated by ';', got {s:?}")));
        }
        Ok(Cx3([parts[0].parse::<Cx>()?.0, parts[1].parse::<Cx>()?.0, parts[2].parse::<Cx>()?.0]))
    }
}

impl fmt::Display for Cx3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};{};{}", Cx(self.0[0]), Cx(self.0[1]), Cx(self.0[2]))
    }
}

impl Serialize for Cx3 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Cx3 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub b: Cx,
    pub c: Cx,
    pub d: Cx,
    pub e: Cx,
    /// Worker threads; 0 means one per core.
    pub threads: usize,
    /// RNG seed; at most i64::MAX so that it fits a TOML integer.
    pub seed: u64,
    pub out: String,

    pub field: String,
    pub anchor: Cx3,
    pub dir_u: Cx3,
    pub dir_v: Cx3,
    pub half_width_u: f64,
    pub half_width_v: f64,
    pub res_u: usize,
    pub res_v: usize,
    /// PGM sample depth, 8 or 16.
    pub bits: u32,
    pub iters: usize,
    pub tol: f64,

    pub rate_max_steps: usize,
    pub rate_tol: f64,
    pub persist: usize,
    pub epsilon: f64,
    pub norm_floor: f64,
    pub itinerary_steps: usize,
    /// CSV of seeds (x_re,x_im,y_re,y_im,z_re,z_im); empty means a slice grid.
    pub seeds: String,

    pub degree_n_max: usize,
    pub atlas_samples: usize,

    pub segment_start: Cx3,
    pub segment_end: Cx3,
    pub find_samples: usize,
    pub bisect_depth: usize,
    /// Search the wedge {|x| < eps, |y| < eps2} instead of the segment.
    pub wedge_search: bool,
    pub wedge_eps: f64,
    pub wedge_eps2: f64,
    pub wedge_grid: usize,
    pub wedge_z_moduli: Vec<f64>,
    pub wedge_z_phases: usize,

    pub psi_n_max: usize,
    pub cauchy_window: usize,
    pub cauchy_tol: f64,
    pub sweep_eps: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let zero = Cx(Complex64::new(0.0, 0.0));
        let rate = RateOptions::default();
        let green = GreenOptions::default();
        let wedge = WedgeParams::default();
        let find = FindOptions::default();
        let ws = WedgeSearch::default();
        let phi = PhiOptions::default();
        RunConfig {
            b: zero,
            c: zero,
            d: Cx(Complex64::new(2.0, 0.0)),
            e: zero,
            threads: 0,
            seed: 0,
            out: ".".into(),
            field: Field::GreenPlus.name().into(),
            anchor: Cx3::real(0.0, 0.0, 0.0),
            dir_u: Cx3::real(1.0, 0.0, 0.0),
            dir_v: Cx3::real(0.0, 1.0, 0.0),
            half_width_u: 2.0,
            half_width_v: 2.0,
            res_u: 64,
            res_v: 64,
            bits: 16,
            iters: green.max_iters,
            tol: green.tol,
            rate_max_steps: rate.max_steps,
            rate_tol: rate.rate_tol,
            persist: rate.persist,
            epsilon: wedge.epsilon,
            norm_floor: wedge.norm_floor,
            itinerary_steps: 60,
            seeds: String::new(),
            degree_n_max: 6,
            atlas_samples: 1000,
            segment_start: Cx3::real(0.0, 0.0, 0.0),
            segment_end: Cx3::real(10.0, 10.0, 10.0),
            find_samples: find.samples,
            bisect_depth: find.bisect_depth,
            wedge_search: false,
            wedge_eps: ws.eps,
            wedge_eps2: ws.eps2,
            wedge_grid: ws.grid,
            wedge_z_moduli: ws.z_moduli,
            wedge_z_phases: ws.z_phases,
            psi_n_max: 20,
            cauchy_window: phi.cauchy_window,
            cauchy_tol: phi.cauchy_tol,
            sweep_eps: vec![0.2, 0.1, 0.05, 0.01],
        }
    }
}

impl RunConfig {
    /// # Panics
    /// If `seed` exceeds i64::MAX (rejected earlier by [`RunConfig::validate`]).
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a config file, or the config embedded in a CSV written by this tool.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)?;
        match extract_embedded(&text) {
            Some(inner) => Self::from_toml(&inner),
            None => Self::from_toml(&text),
        }
    }

    /// The config as `# `-prefixed lines between the embed markers.
    pub fn embedded_header(&self) -> String {
        let mut s = String::new();
        s.push_str(EMBED_BEGIN);
        s.push('\n');
        s.push_str(&format!("# version = {}\n", crate::VERSION));
        for line in self.to_toml().lines() {
            s.push_str("# ");
            s.push_str(line);
            s.push('\n');
        }
        s.push_str(EMBED_END);
        s.push('\n');
        s
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.seed > i64::MAX as u64 {
            return Err(CliError::Config(format!("seed must be at most {}", i64::MAX)));
        }
        if self.bits != 8 && self.bits != 16 {
            return Err(CliError::Config(format!("bits must be 8 or 16, got {}", self.bits)));
        }
        self.params()?;
        Ok(())
    }

    pub fn params(&self) -> CliResult<Params> {
        Ok(Params::new(self.b.0, self.c.0, self.d.0, self.e.0)?)
    }

    pub fn rate_options(&self) -> RateOptions {
        RateOptions { max_steps: self.rate_max_steps, rate_tol: self.rate_tol, persist: self.persist, bounded_radius: None }
    }

    pub fn green_options(&self) -> GreenOptions {
        GreenOptions { max_iters: self.iters, tol: self.tol, ..GreenOptions::default() }
    }

    pub fn phi_options(&self) -> PhiOptions {
        PhiOptions { rate: self.rate_options(), cauchy_window: self.cauchy_window, cauchy_tol: self.cauchy_tol }
    }

    pub fn field_options(&self) -> FieldOptions {
        FieldOptions { green: self.green_options(), rate: self.rate_options(), phi: self.phi_options() }
    }

    pub fn wedge_params(&self) -> WedgeParams {
        WedgeParams { epsilon: self.epsilon, norm_floor: self.norm_floor }
    }

    pub fn find_options(&self) -> FindOptions {
        FindOptions { samples: self.find_samples, bisect_depth: self.bisect_depth, rate: self.rate_options() }
    }

    pub fn wedge_search_spec(&self) -> WedgeSearch {
        WedgeSearch {
            eps: self.wedge_eps,
            eps2: self.wedge_eps2,
            grid: self.wedge_grid,
            z_moduli: self.wedge_z_moduli.clone(),
            z_phases: self.wedge_z_phases,
        }
    }

    pub fn field(&self) -> CliResult<Field> {
        Ok(self.field.parse()?)
    }

    pub fn slice(&self) -> CliResult<SliceSpec> {
        let s = SliceSpec {
            anchor: self.anchor.point(),
            dir_u: self.dir_u.0,
            dir_v: self.dir_v.0,
            half_width_u: self.half_width_u,
            half_width_v: self.half_width_v,
            res_u: self.res_u,
            res_v: self.res_v,
        };
        s.validate()?;
        Ok(s)
    }

    /// Sets the slice directions from a preset name: two of x, y, z, e.g. "xz".
    pub fn apply_slice_preset(&mut self, name: &str) -> CliResult<()> {
        let axis = |ch: char| match ch {
            'x' => Some(Cx3::real(1.0, 0.0, 0.0)),
            'y' => Some(Cx3::real(0.0, 1.0, 0.0)),
            'z' => Some(Cx3::real(0.0, 0.0, 1.0)),
            _ => None,
        };
        let chars: Vec<char> = name.chars().collect();
        match chars.as_slice() {
            [a, b] if a != b => match (axis(*a), axis(*b)) {
                (Some(u), Some(v)) => {
                    self.dir_u = u;
                    self.dir_v = v;
                    Ok(())
                }
                _ => Err(CliError::Config(format!("unknown slice preset {name:?}"))),
            },
            _ => Err(CliError::Config(format!("slice preset must name two distinct axes, got {name:?}"))),
        }
    }

    /// Parses "N" or "NxM".
    pub fn apply_resolution(&mut self, res: &str) -> CliResult<()> {
        let bad = || CliError::Config(format!("resolution must be N or NxM, got {res:?}"));
        let (u, v) = match res.split_once('x') {
            Some((u, v)) => (u.parse().map_err(|_| bad())?, v.parse().map_err(|_| bad())?),
            None => {
                let n = res.parse().map_err(|_| bad())?;
                (n, n)
            }
        };
        self.res_u = u;
        self.res_v = v;
        Ok(())
    }
}

fn extract_embedded(text: &str) -> Option<String> {
    let mut inside = false;
    let mut found = false;
    let mut out = String::new();
    for line in text.lines() {
        if line == EMBED_BEGIN {
            inside = true;
            found = true;
            continue;
        }
        if line == EMBED_END {
            break;
        }
        if inside {
            let body = line.strip_prefix("# ").unwrap_or(line.trim_start_matches('#'));
            if body.starts_with("version = ") {
                continue;
            }
            out.push_str(body);
            out.push('\n');
        }
    }
    found.then_some(out)
}
