//! Batch drivers behind each subcommand. Each returns the files it wrote and
//! the text to print; per-seed failures are collected rather than aborting.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use qauto_core::atlas::{
    commutation_residuals, intersection_count, percentile, primed_curve_flow_residual, special_points_b,
    verify_infinity_flow, FlowReport, SpecialPointsB,
};
use qauto_core::cohomology::{
    degree_sequence, dynamical_degrees, invariant_class_volume, invariant_class_volume_alt, pullback_spectrum,
};
use qauto_core::map::apply;
use qauto_core::partition::{
    classify_rate, find_linear_escape, find_linear_escape_in_wedge, itinerary, verify_candidate, SearchOutcome,
};
use qauto_core::phi::{c_eps_sweep, log_plus, phi_infinity, psi_table, PhiRegime, PhiValue};
use qauto_core::{AffinePoint, Params};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Cx3, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{
    csv_text, fmt_f64, grid_csv_rows, ndjson_text, pgm_bytes, write_file, GrayMapping, Provenance, GRID_COLUMNS,
};
use crate::slice::{render, SliceGrid};

/// Minimum chart denominator for the commutation sample.
pub const ATLAS_MIN_DENOMINATOR: f64 = 0.1;
/// Distance from the primed curves at which their flow is probed.
pub const PRIMED_CURVE_ETA: f64 = 1e-7;

#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub stdout: String,
    /// Messages of operations that returned an error; nonempty means a nonzero exit.
    pub failures: Vec<String>,
}

fn out_dir(cfg: &RunConfig) -> &Path {
    Path::new(&cfg.out)
}

fn pool(threads: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

pub fn degrees(cfg: &RunConfig) -> CliResult<Outcome> {
    cfg.validate()?;
    let p = cfg.params()?;
    let spec = pullback_spectrum();
    let dd = dynamical_degrees();
    let rows_deg = degree_sequence(&p, cfg.degree_n_max)?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut push = |q: &str, n: Option<usize>, v: String| rows.push(vec![q.into(), n.map_or(String::new(), |n| n.to_string()), v]);
    for (i, row) in spec.matrix.0.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            push(&format!("matrix_{}{}", i + 1, j + 1), None, v.to_string());
        }
    }
    push("eigenvalue_leading", None, fmt_f64(spec.eigenvalues.0));
    push("eigenvalue_other", None, fmt_f64(spec.eigenvalues.1));
    push("eigenvector_h", None, fmt_f64(spec.leading_eigenvector.h));
    push("eigenvector_e", None, fmt_f64(spec.leading_eigenvector.e));
    push("lambda1", None, fmt_f64(dd.lambda1));
    push("lambda2", None, fmt_f64(dd.lambda2));
    push("lambda3", None, fmt_f64(dd.lambda3));
    push("volume", None, fmt_f64(invariant_class_volume()));
    push("volume_alt", None, fmt_f64(invariant_class_volume_alt()));
    let mut prev: Option<u32> = None;
    for r in &rows_deg {
        push("degree_x", Some(r.n), r.degrees[0].to_string());
        push("degree_y", Some(r.n), r.degrees[1].to_string());
        push("degree_z", Some(r.n), r.degrees[2].to_string());
        push("degree_max", Some(r.n), r.max().to_string());
        if let Some(pm) = prev {
            push("degree_ratio", Some(r.n), fmt_f64(r.max() as f64 / pm as f64));
        }
        prev = Some(r.max());
    }
    let text = csv_text(cfg, &["quantity", "n", "value"], &rows)?;
    let path = write_file(out_dir(cfg), "degrees.csv", text.as_bytes())?;
    Ok(Outcome { files: vec![path], stdout: text, failures: vec![] })
}

#[derive(Debug, Serialize)]
pub struct Percentiles {
    pub count: usize,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    pub max: f64,
}

impl Percentiles {
    pub fn of(data: &[f64]) -> Self {
        Percentiles {
            count: data.len(),
            p50: percentile(data, 50.0),
            p90: percentile(data, 90.0),
            p99: percentile(data, 99.0),
            max: percentile(data, 100.0),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct AtlasReport<'a> {
    #[serde(flatten)]
    pub provenance: Provenance<'a>,
    pub commutation_residuals: Percentiles,
    pub flow: FlowReport,
    pub flow_all_pass: bool,
    pub special_points_b: SpecialPointsB,
    pub intersection_count: u32,
    pub primed_curve_forward_residual: f64,
    pub primed_curve_backward_residual: f64,
}

pub fn atlas_report(cfg: &RunConfig) -> CliResult<AtlasReport<'_>> {
    cfg.validate()?;
    let p = cfg.params()?;
    let per_route = cfg.atlas_samples.div_ceil(4).max(1);
    let residuals = commutation_residuals(&p, per_route, cfg.seed, ATLAS_MIN_DENOMINATOR);
    let flow = verify_infinity_flow(&p, 100, cfg.seed);
    let (fwd, bwd) = primed_curve_flow_residual(&p, 100, cfg.seed, PRIMED_CURVE_ETA);
    Ok(AtlasReport {
        provenance: Provenance::new(cfg),
        commutation_residuals: Percentiles::of(&residuals),
        flow_all_pass: flow.all_pass(),
        flow,
        special_points_b: special_points_b(&p),
        intersection_count: intersection_count(&p),
        primed_curve_forward_residual: fwd,
        primed_curve_backward_residual: bwd,
    })
}

pub fn atlas_verify(cfg: &RunConfig) -> CliResult<Outcome> {
    let report = atlas_report(cfg)?;
    let text = serde_json::to_string_pretty(&report)? + "\n";
    let path = write_file(out_dir(cfg), "atlas_verify.json", text.as_bytes())?;
    Ok(Outcome { files: vec![path], stdout: text, failures: vec![] })
}

#[derive(Debug, Serialize)]
pub struct RenderSidecar<'a> {
    #[serde(flatten)]
    pub provenance: Provenance<'a>,
    pub field: &'a str,
    pub width: usize,
    pub height: usize,
    pub mapping: GrayMapping,
    pub row_order: &'static str,
    pub unresolved_pixels: usize,
}

pub fn render_grid(cfg: &RunConfig) -> CliResult<SliceGrid> {
    cfg.validate()?;
    let p = cfg.params()?;
    Ok(render(&p, &cfg.slice()?, cfg.field()?, &cfg.field_options(), cfg.threads)?)
}

pub fn green_render(cfg: &RunConfig) -> CliResult<Outcome> {
    let grid = render_grid(cfg)?;
    let spec = cfg.slice()?;
    let field = cfg.field()?;
    let stem = field.name();
    let map = GrayMapping::fit(&grid, cfg.bits);
    let dir = out_dir(cfg);
    let pgm = write_file(dir, &format!("{stem}.pgm"), &pgm_bytes(&grid, &map))?;
    let sidecar = RenderSidecar {
        provenance: Provenance::new(cfg),
        field: stem,
        width: grid.res_u,
        height: grid.res_v,
        mapping: map,
        row_order: "top image row is the last slice row (largest t)",
        unresolved_pixels: grid.pixels.iter().filter(|p| p.value().is_none()).count(),
    };
    let json = write_file(dir, &format!("{stem}.json"), (serde_json::to_string_pretty(&sidecar)? + "\n").as_bytes())?;
    let csv = csv_text(cfg, &GRID_COLUMNS, &grid_csv_rows(&spec, &grid))?;
    let csv_path = write_file(dir, &format!("{stem}.csv"), csv.as_bytes())?;
    let stdout = format!("wrote {}, {}, {}\n", pgm.display(), json.display(), csv_path.display());
    Ok(Outcome { files: vec![pgm, json, csv_path], stdout, failures: vec![] })
}

/// Reads seeds from a CSV with either 3 real or 6 (re, im) columns per row.
pub fn read_seeds(path: &Path) -> CliResult<Vec<AffinePoint>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).has_headers(true).flexible(true).from_path(path)?;
    let mut out = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let v: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Config(format!("seed row {}: {e}", k + 1)))?;
        let c = |re: f64, im: f64| Complex64::new(re, im);
        out.push(match v.as_slice() {
            [x, y, z] => AffinePoint::real(*x, *y, *z),
            [xr, xi, yr, yi, zr, zi] => AffinePoint::new(c(*xr, *xi), c(*yr, *yi), c(*zr, *zi)),
            _ => return Err(CliError::Config(format!("seed row {} must have 3 or 6 columns", k + 1))),
        });
    }
    Ok(out)
}

/// Seeds from the configured CSV, or the pixels of the configured slice in row-major order.
pub fn seeds(cfg: &RunConfig) -> CliResult<Vec<AffinePoint>> {
    if !cfg.seeds.is_empty() {
        return read_seeds(Path::new(&cfg.seeds));
    }
    let s = cfg.slice()?;
    Ok((0..s.res_v).flat_map(|j| (0..s.res_u).map(move |i| s.point(i, j))).collect())
}

#[derive(Debug, Serialize)]
pub struct ClassifyRecord {
    pub seed: String,
    pub status: String,
    pub period: String,
    pub rate: Option<f64>,
    pub itinerary: String,
    pub error: Option<String>,
}

pub fn classify_seed(p: &Params, cfg: &RunConfig, q: &AffinePoint) -> ClassifyRecord {
    let seed = Cx3(q.coords()).to_string();
    let run = || -> CliResult<ClassifyRecord> {
        let rate = classify_rate(p, q, &cfg.rate_options())?;
        let it = itinerary(p, q, cfg.itinerary_steps, &cfg.wedge_params())?;
        Ok(ClassifyRecord {
            seed: seed.clone(),
            status: format!("{:?}", rate.class),
            period: format!("{:?}", it.period),
            rate: rate.rate_estimate.is_finite().then_some(rate.rate_estimate),
            itinerary: it.symbols.iter().map(|s| s.short()).collect::<Vec<_>>().join(" "),
            error: None,
        })
    };
    run().unwrap_or_else(|e| ClassifyRecord {
        seed: seed.clone(),
        status: "Error".into(),
        period: String::new(),
        rate: None,
        itinerary: String::new(),
        error: Some(e.to_string()),
    })
}

pub fn classify(cfg: &RunConfig) -> CliResult<Outcome> {
    cfg.validate()?;
    let p = cfg.params()?;
    cfg.wedge_params().validate(&p)?;
    let qs = seeds(cfg)?;
    let records: Vec<ClassifyRecord> = pool(cfg.threads)?.install(|| qs.par_iter().map(|q| classify_seed(&p, cfg, q)).collect());
    let failures: Vec<String> = records.iter().filter_map(|r| r.error.clone().map(|e| format!("{}: {e}", r.seed))).collect();
    let text = serde_json::to_string(&Provenance::new(cfg))? + "\n" + &ndjson_text(&records)?;
    let path = write_file(out_dir(cfg), "classify.ndjson", text.as_bytes())?;
    Ok(Outcome { files: vec![path], stdout: text, failures })
}

/// Runs the configured search: the wedge near infinity, or the segment.
pub fn search(cfg: &RunConfig) -> CliResult<SearchOutcome> {
    cfg.validate()?;
    let p = cfg.params()?;
    if cfg.wedge_search {
        Ok(find_linear_escape_in_wedge(&p, &cfg.wedge_search_spec(), &cfg.rate_options())?)
    } else {
        Ok(find_linear_escape(&p, (cfg.segment_start.point(), cfg.segment_end.point()), &cfg.find_options())?)
    }
}

fn point_cells(q: &AffinePoint) -> Vec<String> {
    q.coords().iter().flat_map(|c| [fmt_f64(c.re), fmt_f64(c.im)]).collect()
}

const POINT_COLUMNS: [&str; 6] = ["x_re", "x_im", "y_re", "y_im", "z_re", "z_im"];

pub fn find_w(cfg: &RunConfig) -> CliResult<Outcome> {
    let p = cfg.params()?;
    let outcome = search(cfg)?;
    let mut rows = Vec::new();
    for (k, q) in outcome.candidates.iter().enumerate() {
        let rate = classify_rate(&p, q, &cfg.rate_options())?;
        let verified = verify_candidate(&p, q, &cfg.rate_options());
        let mut row = vec![k.to_string()];
        row.extend(point_cells(q));
        row.push(fmt_f64(rate.rate_estimate));
        row.push(verified.to_string());
        rows.push(row);
    }
    let mut cols = vec!["index"];
    cols.extend(POINT_COLUMNS);
    cols.extend(["rate_estimate", "verified"]);
    let text = csv_text(cfg, &cols, &rows)?;
    let dir = out_dir(cfg);
    let cand = write_file(dir, "find_w.csv", text.as_bytes())?;

    let log_rows: Vec<Vec<String>> = outcome
        .log
        .iter()
        .map(|s| {
            let mut r = point_cells(&s.point);
            r.push(format!("{:?}", s.class));
            r.push(fmt_f64(s.rate_estimate));
            r
        })
        .collect();
    let mut log_cols = POINT_COLUMNS.to_vec();
    log_cols.extend(["class", "rate_estimate"]);
    let log = write_file(dir, "find_w_log.csv", csv_text(cfg, &log_cols, &log_rows)?.as_bytes())?;
    let failures = rows
        .iter()
        .filter(|r| r.last().map(String::as_str) != Some("true"))
        .map(|r| format!("candidate {} failed re-verification", r[0]))
        .collect();
    Ok(Outcome { files: vec![cand, log], stdout: text, failures })
}

#[derive(Debug, Serialize)]
pub struct PhiRecord {
    pub seed: String,
    pub psi: Option<Vec<f64>>,
    pub phi: PhiValue,
    pub regime: PhiRegime,
    pub n_used: usize,
    /// phi(f^3 q) - phi(q) - log|d| when both values are finite.
    pub cocycle_defect: Option<f64>,
    /// phi(q) - log+ ||q|| when phi(q) is finite.
    pub asymptotic_defect: Option<f64>,
    pub error: Option<String>,
}

pub fn phi_seed(p: &Params, cfg: &RunConfig, q: &AffinePoint) -> PhiRecord {
    let seed = Cx3(q.coords()).to_string();
    let opts = cfg.phi_options();
    let run = || -> CliResult<PhiRecord> {
        let r = phi_infinity(p, q, &opts)?;
        let psi = psi_table(p, q, cfg.psi_n_max).ok();
        let (mut cocycle, mut asymptotic) = (None, None);
        if let PhiValue::Finite(v) = r.value {
            asymptotic = Some(v - log_plus(q.norm_max()));
            let q3 = apply(p, &apply(p, &apply(p, q)?)?)?;
            if let PhiValue::Finite(v3) = phi_infinity(p, &q3, &opts)?.value {
                cocycle = Some(v3 - v - p.log_abs_d());
            }
        }
        Ok(PhiRecord {
            seed: seed.clone(),
            psi,
            phi: r.value,
            regime: r.regime,
            n_used: r.n_used,
            cocycle_defect: cocycle,
            asymptotic_defect: asymptotic,
            error: None,
        })
    };
    run().unwrap_or_else(|e| PhiRecord {
        seed: seed.clone(),
        psi: None,
        phi: PhiValue::Undefined,
        regime: PhiRegime::Unresolved,
        n_used: 0,
        cocycle_defect: None,
        asymptotic_defect: None,
        error: Some(e.to_string()),
    })
}

/// Per-seed reports; without a seed file the seeds are the search candidates.
pub fn phi(cfg: &RunConfig) -> CliResult<Outcome> {
    cfg.validate()?;
    let p = cfg.params()?;
    p.require_expanding()?;
    let qs = if cfg.seeds.is_empty() { search(cfg)?.candidates } else { read_seeds(Path::new(&cfg.seeds))? };
    let records: Vec<PhiRecord> = pool(cfg.threads)?.install(|| qs.par_iter().map(|q| phi_seed(&p, cfg, q)).collect());
    let failures: Vec<String> = records.iter().filter_map(|r| r.error.clone().map(|e| format!("{}: {e}", r.seed))).collect();
    let text = serde_json::to_string(&Provenance::new(cfg))? + "\n" + &ndjson_text(&records)?;
    let path = write_file(out_dir(cfg), "phi.ndjson", text.as_bytes())?;
    Ok(Outcome { files: vec![path], stdout: text, failures })
}

pub fn phi_sweep(cfg: &RunConfig) -> CliResult<Outcome> {
    cfg.validate()?;
    let p = cfg.params()?;
    p.require_expanding()?;
    let rows: Vec<Vec<String>> = c_eps_sweep(p.abs_d(), &cfg.sweep_eps)?
        .iter()
        .map(|r| vec![fmt_f64(r.eps), fmt_f64(r.sigma_10), fmt_f64(r.sigma_20), fmt_f64(r.sigma_40), fmt_f64(r.c_eps)])
        .collect();
    let text = csv_text(cfg, &["eps", "sigma_10", "sigma_20", "sigma_40", "c_eps"], &rows)?;
    let path = write_file(out_dir(cfg), "phi_sweep.csv", text.as_bytes())?;
    Ok(Outcome { files: vec![path], stdout: text, failures: vec![] })
}
