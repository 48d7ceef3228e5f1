//! Evaluation of scalar fields over 2D complex slices of C^3.
//!
//! Rows are split into fixed contiguous blocks, one per worker, so the
//! output never depends on scheduling or on the thread count.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qauto_core::error::{Error, Result};
use qauto_core::green::{green_value, GreenMode, GreenOptions, GreenStatus};
use qauto_core::map::{AffinePoint, Direction, Params};
use qauto_core::partition::{classify_rate, RateClass, RateOptions};
use qauto_core::phi::{phi_infinity, PhiOptions, PhiValue};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub anchor: AffinePoint,
    pub dir_u: [Complex64; 3],
    pub dir_v: [Complex64; 3],
    pub half_width_u: f64,
    pub half_width_v: f64,
    pub res_u: usize,
    pub res_v: usize,
}

impl SliceSpec {
    pub fn validate(&self) -> Result<()> {
        let nonzero = |d: &[Complex64; 3]| d.iter().any(|c| c.norm() > 0.0);
        if !nonzero(&self.dir_u) || !nonzero(&self.dir_v) {
            return Err(Error::InvalidArgument("slice directions must be nonzero".into()));
        }
        if self.res_u < 2 || self.res_v < 2 {
            return Err(Error::InvalidArgument("slice resolution must be at least 2 per axis".into()));
        }
        if !(self.half_width_u > 0.0 && self.half_width_v > 0.0) {
            return Err(Error::InvalidArgument("slice half widths must be positive".into()));
        }
        Ok(())
    }

    /// Slice coordinates (s, t) of pixel (i, j), both in [-half_width, half_width].
    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        let s = -self.half_width_u + 2.0 * self.half_width_u * i as f64 / (self.res_u - 1) as f64;
        let t = -self.half_width_v + 2.0 * self.half_width_v * j as f64 / (self.res_v - 1) as f64;
        (s, t)
    }

    /// anchor + s dir_u + t dir_v for pixel column i and row j.
    pub fn point(&self, i: usize, j: usize) -> AffinePoint {
        let (s, t) = self.coords(i, j);
        let u = AffinePoint::from_coords(self.dir_u);
        let v = AffinePoint::from_coords(self.dir_v);
        self.anchor + u * Complex64::new(s, 0.0) + v * Complex64::new(t, 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    GreenPlus,
    GreenMinus,
    MinGreen,
    Phi,
    EscapeClass,
}

impl std::str::FromStr for Field {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "green-plus" => Ok(Field::GreenPlus),
            "green-minus" => Ok(Field::GreenMinus),
            "min-green" => Ok(Field::MinGreen),
            "phi" => Ok(Field::Phi),
            "escape-class" => Ok(Field::EscapeClass),
            _ => Err(Error::InvalidArgument(format!("unknown field {s:?}"))),
        }
    }
}

impl Field {
    pub fn name(&self) -> &'static str {
        match self {
            Field::GreenPlus => "green-plus",
            Field::GreenMinus => "green-minus",
            Field::MinGreen => "min-green",
            Field::Phi => "phi",
            Field::EscapeClass => "escape-class",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Pixel {
    Value(f64),
    NegInfinity,
    Undefined,
    Unresolved,
}

impl Pixel {
    pub fn value(&self) -> Option<f64> {
        match self {
            Pixel::Value(v) => Some(*v),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldOptions {
    pub green: GreenOptions,
    pub rate: RateOptions,
    pub phi: PhiOptions,
}

/// Escape class code: 0 bounded, 1 linear rate, 2 super-exponential.
pub fn escape_class_code(c: RateClass) -> Option<f64> {
    match c {
        RateClass::Bounded => Some(0.0),
        RateClass::Linear => Some(1.0),
        RateClass::Super => Some(2.0),
        RateClass::Unresolved => None,
    }
}

fn green_pixel(p: &Params, q: &AffinePoint, dir: Direction, o: &GreenOptions) -> Result<Pixel> {
    let r = green_value(p, q, dir, o)?;
    Ok(if r.status == GreenStatus::Converged || r.mode == GreenMode::ConvergedZero {
        Pixel::Value(r.value)
    } else {
        Pixel::Unresolved
    })
}

pub fn evaluate_field(p: &Params, q: &AffinePoint, field: Field, o: &FieldOptions) -> Result<Pixel> {
    match field {
        Field::GreenPlus => green_pixel(p, q, Direction::Forward, &o.green),
        Field::GreenMinus => green_pixel(p, q, Direction::Backward, &o.green),
        Field::MinGreen => {
            let a = green_pixel(p, q, Direction::Forward, &o.green)?;
            let b = green_pixel(p, q, Direction::Backward, &o.green)?;
            Ok(match (a.value(), b.value()) {
                (Some(x), Some(y)) => Pixel::Value(x.min(y)),
                _ => Pixel::Unresolved,
            })
        }
        Field::Phi => {
            let r = phi_infinity(p, q, &o.phi)?;
            Ok(match (r.value, r.regime) {
                (PhiValue::Finite(v), _) => Pixel::Value(v),
                (PhiValue::NegInfinity, _) => Pixel::NegInfinity,
                (PhiValue::Undefined, qauto_core::phi::PhiRegime::Unresolved) => Pixel::Unresolved,
                (PhiValue::Undefined, _) => Pixel::Undefined,
            })
        }
        Field::EscapeClass => {
            let r = classify_rate(p, q, &o.rate)?;
            Ok(escape_class_code(r.class).map_or(Pixel::Unresolved, Pixel::Value))
        }
    }
}

/// Row-major grid of pixels; row j holds the points with slice coordinate t_j.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceGrid {
    pub res_u: usize,
    pub res_v: usize,
    pub pixels: Vec<Pixel>,
}

impl SliceGrid {
    pub fn get(&self, i: usize, j: usize) -> Pixel {
        self.pixels[j * self.res_u + i]
    }
}

/// Evaluates `field` on every pixel with `threads` workers (0 = one per core).
pub fn render(p: &Params, spec: &SliceSpec, field: Field, o: &FieldOptions, threads: usize) -> Result<SliceGrid> {
    spec.validate()?;
    if field == Field::Phi {
        p.require_expanding()?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let workers = pool.current_num_threads().max(1);
    let block = spec.res_v.div_ceil(workers);
    let blocks: Vec<(usize, usize)> =
        (0..workers).map(|w| (w * block, ((w + 1) * block).min(spec.res_v))).filter(|(a, b)| a < b).collect();
    let parts: Vec<Vec<Pixel>> = pool.install(|| {
        blocks
            .par_iter()
            .map(|&(r0, r1)| {
                let mut out = Vec::with_capacity((r1 - r0) * spec.res_u);
                for j in r0..r1 {
                    for i in 0..spec.res_u {
                        out.push(evaluate_field(p, &spec.point(i, j), field, o)?);
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()
    })?;
    Ok(SliceGrid { res_u: spec.res_u, res_v: spec.res_v, pixels: parts.into_iter().flatten().collect() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(res: usize) -> SliceSpec {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        SliceSpec {
            anchor: AffinePoint::origin(),
            dir_u: [one, zero, zero],
            dir_v: [zero, one, zero],
            half_width_u: 2.0,
            half_width_v: 2.0,
            res_u: res,
            res_v: res,
        }
    }

    #[test]
    fn pixel_geometry() {
        let s = spec(5);
        assert_eq!(s.point(2, 2), AffinePoint::origin());
        assert_eq!(s.point(0, 4), AffinePoint::real(-2.0, 2.0, 0.0));
        let mut bad = s;
        bad.res_u = 1;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn origin_pixel_is_zero_and_threads_agree() {
        let p = Params::real(0.0, 0.0, 2.0, 0.0).unwrap();
        let s = spec(9);
        let o = FieldOptions::default();
        let g1 = render(&p, &s, Field::GreenPlus, &o, 1).unwrap();
        let g3 = render(&p, &s, Field::GreenPlus, &o, 3).unwrap();
        assert_eq!(g1, g3);
        assert_eq!(g1.get(4, 4), Pixel::Value(0.0));
    }

    #[test]
    fn min_green_is_pointwise_min() {
        let p = Params::real(0.0, 0.0, 2.0, 0.0).unwrap();
        let s = spec(5);
        let o = FieldOptions::default();
        let a = render(&p, &s, Field::GreenPlus, &o, 2).unwrap();
        let b = render(&p, &s, Field::GreenMinus, &o, 2).unwrap();
        let m = render(&p, &s, Field::MinGreen, &o, 2).unwrap();
        for k in 0..m.pixels.len() {
            if let (Some(x), Some(y), Some(z)) = (a.pixels[k].value(), b.pixels[k].value(), m.pixels[k].value()) {
                assert_eq!(z, x.min(y));
            }
        }
    }
}
