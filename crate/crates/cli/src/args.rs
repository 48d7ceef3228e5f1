//! Command-line grammar. Values resolve as defaults, then `--config`, then flags.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, Outcome};
use crate::config::{Cx, Cx3, RunConfig};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "qauto", version, about = "Dynamics of f(x,y,z) = (y, z, yz+by+cz+dx+e) on C^3")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Parameter b as "re,im".
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub b: Option<Cx>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub c: Option<Cx>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub d: Option<Cx>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub e: Option<Cx>,
    /// Config file, or a CSV previously written by this tool.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(0..=i64::MAX as u64))]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pullback matrix, eigenvalues, volume and the degree table (CSV).
    Degrees {
        /// Largest iterate in the degree table.
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Compactification checks (JSON).
    AtlasVerify {
        /// Number of random chart points for the commutation check.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Green function rasters.
    Green {
        #[command(subcommand)]
        action: GreenAction,
    },
    /// Rate, period and itinerary per seed (NDJSON).
    Classify {
        /// CSV of seeds; without it the slice grid is classified.
        #[arg(long)]
        seeds: Option<String>,
        /// Itinerary length in map applications.
        #[arg(long)]
        steps: Option<usize>,
        #[command(flatten)]
        slice: SliceArgs,
        #[command(flatten)]
        rate: RateArgs,
    },
    /// Search for linearly escaping points (CSV).
    FindW {
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        rate: RateArgs,
    },
    /// Renormalized potential per seed (NDJSON), or the correction-constant table (CSV).
    Phi {
        /// Emit the c_eps table instead of per-seed reports.
        #[arg(long)]
        sweep_eps: bool,
        /// Comma-separated eps values for --sweep-eps.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        /// CSV of seeds; without it the search candidates are used.
        #[arg(long)]
        seeds: Option<String>,
        /// Length of the psi table.
        #[arg(long)]
        n_max: Option<usize>,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        rate: RateArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum GreenAction {
    /// Rasterize a field over a 2D complex slice to PGM, JSON sidecar and CSV.
    Render {
        /// green-plus, green-minus, min-green, phi or escape-class.
        #[arg(long)]
        field: Option<String>,
        #[command(flatten)]
        slice: SliceArgs,
        /// Green iteration budget.
        #[arg(long)]
        iters: Option<usize>,
        /// Green convergence tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// PGM sample depth (8 or 16).
        #[arg(long)]
        bits: Option<u32>,
        #[command(flatten)]
        rate: RateArgs,
    },
}

#[derive(Debug, Args)]
pub struct SliceArgs {
    /// Slice plane spanned by two coordinate axes, e.g. "xy" or "xz".
    #[arg(long)]
    pub slice: Option<String>,
    /// Slice centre as "re,im;re,im;re,im".
    #[arg(long, allow_hyphen_values = true)]
    pub anchor: Option<Cx3>,
    #[arg(long, allow_hyphen_values = true)]
    pub dir_u: Option<Cx3>,
    #[arg(long, allow_hyphen_values = true)]
    pub dir_v: Option<Cx3>,
    /// Half widths as "hu" or "hu,hv".
    #[arg(long)]
    pub half_width: Option<String>,
    /// Resolution as "N" or "NxM".
    #[arg(long)]
    pub res: Option<String>,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    /// Map applications allowed to the rate classifier.
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub rate_tol: Option<f64>,
    #[arg(long)]
    pub persist: Option<usize>,
    /// Wedge epsilon for itineraries.
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Search the wedge {|x| < eps, |y| < eps^2} near infinity instead of a segment.
    #[arg(long)]
    pub wedge: bool,
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<Cx3>,
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<Cx3>,
    /// Initial samples along the segment.
    #[arg(long)]
    pub samples: Option<usize>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl SliceArgs {
    fn apply(self, cfg: &mut RunConfig) -> CliResult<()> {
        if let Some(name) = self.slice {
            cfg.apply_slice_preset(&name)?;
        }
        set(&mut cfg.anchor, self.anchor);
        set(&mut cfg.dir_u, self.dir_u);
        set(&mut cfg.dir_v, self.dir_v);
        if let Some(hw) = self.half_width {
            let bad = || CliError::Config(format!("half width must be \"hu\" or \"hu,hv\", got {hw:?}"));
            let v: Vec<f64> = hw.split(',').map(|s| s.trim().parse()).collect::<Result<_, _>>().map_err(|_| bad())?;
            match v.as_slice() {
                [h] => (cfg.half_width_u, cfg.half_width_v) = (*h, *h),
                [hu, hv] => (cfg.half_width_u, cfg.half_width_v) = (*hu, *hv),
                _ => return Err(bad()),
            }
        }
        if let Some(res) = self.res {
            cfg.apply_resolution(&res)?;
        }
        Ok(())
    }
}

impl RateArgs {
    fn apply(self, cfg: &mut RunConfig) {
        set(&mut cfg.rate_max_steps, self.max_steps);
        set(&mut cfg.rate_tol, self.rate_tol);
        set(&mut cfg.persist, self.persist);
        set(&mut cfg.epsilon, self.epsilon);
    }
}

impl SearchArgs {
    fn apply(self, cfg: &mut RunConfig) {
        if self.wedge {
            cfg.wedge_search = true;
        }
        set(&mut cfg.segment_start, self.from);
        set(&mut cfg.segment_end, self.to);
        set(&mut cfg.find_samples, self.samples);
    }
}

/// What to run once the configuration is resolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Job {
    Degrees,
    AtlasVerify,
    GreenRender,
    Classify,
    FindW,
    Phi,
    PhiSweep,
}

impl Cli {
    /// Merges defaults, the config file and the flags.
    pub fn resolve(self) -> CliResult<(Job, RunConfig)> {
        let mut cfg = match &self.common.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let c = self.common;
        set(&mut cfg.b, c.b);
        set(&mut cfg.c, c.c);
        set(&mut cfg.d, c.d);
        set(&mut cfg.e, c.e);
        set(&mut cfg.out, c.out);
        set(&mut cfg.threads, c.threads);
        set(&mut cfg.seed, c.seed);
        let job = match self.command {
            Command::Degrees { n_max } => {
                set(&mut cfg.degree_n_max, n_max);
                Job::Degrees
            }
            Command::AtlasVerify { samples } => {
                set(&mut cfg.atlas_samples, samples);
                Job::AtlasVerify
            }
            Command::Green { action: GreenAction::Render { field, slice, iters, tol, bits, rate } } => {
                set(&mut cfg.field, field);
                slice.apply(&mut cfg)?;
                set(&mut cfg.iters, iters);
                set(&mut cfg.tol, tol);
                set(&mut cfg.bits, bits);
                rate.apply(&mut cfg);
                Job::GreenRender
            }
            Command::Classify { seeds, steps, slice, rate } => {
                set(&mut cfg.seeds, seeds);
                set(&mut cfg.itinerary_steps, steps);
                slice.apply(&mut cfg)?;
                rate.apply(&mut cfg);
                Job::Classify
            }
            Command::FindW { search, rate } => {
                search.apply(&mut cfg);
                rate.apply(&mut cfg);
                Job::FindW
            }
            Command::Phi { sweep_eps, eps, seeds, n_max, search, rate } => {
                set(&mut cfg.sweep_eps, eps);
                set(&mut cfg.seeds, seeds);
                set(&mut cfg.psi_n_max, n_max);
                search.apply(&mut cfg);
                rate.apply(&mut cfg);
                if sweep_eps {
                    Job::PhiSweep
                } else {
                    Job::Phi
                }
            }
        };
        Ok((job, cfg))
    }
}

pub fn run_job(job: Job, cfg: &RunConfig) -> CliResult<Outcome> {
    match job {
        Job::Degrees => commands::degrees(cfg),
        Job::AtlasVerify => commands::atlas_verify(cfg),
        Job::GreenRender => commands::green_render(cfg),
        Job::Classify => commands::classify(cfg),
        Job::FindW => commands::find_w(cfg),
        Job::Phi => commands::phi(cfg),
        Job::PhiSweep => commands::phi_sweep(cfg),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> CliResult<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    let (job, cfg) = cli.resolve()?;
    run_job(job, &cfg)
}
