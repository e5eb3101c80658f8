//! Discrete logarithms in small-characteristic fields through elliptic
//! presentations: presentation construction, trap enumeration, divisor
//! descent, and the index-calculus solver.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use elldlog::commands;
use elldlog::config::RunConfig;

#[derive(Parser)]
#[command(
    name = "elldlog",
    about = "discrete logarithms via elliptic presentations",
    long_about = "Builds elliptic presentations of small-characteristic fields, enumerates \
their trap points, descends divisors to a small factor base, and solves \
discrete logarithms in K^x/F_q^x with a verifiable transcript. All commands \
are deterministic for a fixed --seed; searches run sequentially in this \
build regardless of --threads."
)]
struct Cli {
    /// RNG seed (ELLDLOG_SEED overrides the default, flags override both)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker count accepted for compatibility; execution is sequential
    #[arg(long, global = true)]
    threads: Option<u64>,
    /// Flat key=value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the JSON result here instead of stdout
    #[arg(short, long, global = true)]
    output: Option<String>,
    /// Exhaustive-enumeration cap
    #[arg(long, global = true)]
    enum_cap: Option<u64>,
    /// Search trial cap per descent step
    #[arg(long, global = true)]
    trial_cap: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct the elliptic presentation for F_{p^n}, or for a
    /// hand-picked curve and base point (desk-scale models)
    Present {
        #[arg(short, long)]
        p: u64,
        /// Target extension degree (required without --curve)
        #[arg(short, long)]
        n: Option<u64>,
        /// Base field degree over F_p for a hand-picked curve
        #[arg(long, default_value_t = 1)]
        ext: usize,
        /// Curve coefficients {"a1": .., .., "a6": ..}
        #[arg(long)]
        curve: Option<String>,
        /// Base point {"x": .., "y": ..}; its order becomes the degree
        #[arg(long)]
        p0: Option<String>,
    },
    /// Enumerate the trap divisors of a presentation
    Traps {
        #[arg(long)]
        pres: PathBuf,
    },
    /// Descend a divisor; emits the certificate for re-verification
    Descend {
        #[arg(long)]
        pres: PathBuf,
        #[arg(long)]
        divisor: PathBuf,
        /// Extension degree of the divisor's field over F_q (1 = full descent)
        #[arg(long, default_value_t = 1)]
        level: usize,
    },
    /// Solve a discrete logarithm in K^x / F_q^x
    Solve {
        #[arg(long)]
        pres: PathBuf,
        /// Generator, as a JSON coefficient list of lists
        #[arg(short, long)]
        g: String,
        /// Target element, same format
        #[arg(long)]
        h: String,
        #[arg(long)]
        fb_bound: Option<u64>,
        #[arg(long)]
        floor: Option<u64>,
        #[arg(long)]
        min_ext_degree: Option<usize>,
        #[arg(long)]
        heuristic: Option<bool>,
        /// Lift degree exponent: polynomials of degree 2^m
        #[arg(long)]
        m: Option<u32>,
    },
    /// Check g^z = gamma h (mod the presentation ideal) for a unit gamma
    Verify {
        #[arg(long)]
        pres: PathBuf,
        #[arg(short, long)]
        g: String,
        #[arg(long)]
        h: String,
        #[arg(short, long)]
        z: String,
    },
    /// Run the property battery (quick) or the acceptance battery (full)
    Selftest {
        #[arg(long, default_value = "quick")]
        level: String,
    },
}

fn run() -> Result<serde_json::Value, elldlog_core::Error> {
    let cli = Cli::parse();
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_config_file(path)?;
    }
    cfg.apply_env();
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    if let Some(cap) = cli.enum_cap {
        cfg.enum_cap = cap;
    }
    if let Some(cap) = cli.trial_cap {
        cfg.trial_cap = cap;
    }
    cfg.output = cli.output.clone();
    cfg.validate()?;

    let value = match &cli.command {
        Command::Present {
            p,
            n,
            ext,
            curve,
            p0,
        } => match (curve, p0, n) {
            (Some(c), Some(pt), _) => commands::cmd_present_custom(*p, *ext, c, pt, &cfg)?,
            (None, None, Some(n)) => commands::cmd_present(*p, *n, &cfg)?,
            _ => {
                return Err(elldlog_core::Error::domain(
                    "give either -n, or both --curve and --p0",
                ))
            }
        },
        Command::Traps { pres } => commands::cmd_traps(pres, &cfg)?,
        Command::Descend {
            pres,
            divisor,
            level,
        } => commands::cmd_descend(pres, divisor, *level, &cfg)?,
        Command::Solve {
            pres,
            g,
            h,
            fb_bound,
            floor,
            min_ext_degree,
            heuristic,
            m,
        } => {
            if let Some(b) = fb_bound {
                cfg.fb_bound = *b;
            }
            if let Some(f) = floor {
                cfg.descent_floor = *f;
            }
            if let Some(d) = min_ext_degree {
                cfg.min_ext_degree = *d;
            }
            if let Some(hm) = heuristic {
                cfg.heuristic_mode = *hm;
            }
            if let Some(m) = m {
                cfg.m_override = Some(*m);
            }
            cfg.validate()?;
            commands::cmd_solve(pres, g, h, &cfg)?
        }
        Command::Verify { pres, g, h, z } => commands::cmd_verify(pres, g, h, z)?,
        Command::Selftest { level } => commands::cmd_selftest(level, &cfg)?,
    };
    commands::output_json(&value, &cfg)?;
    Ok(value)
}

fn main() -> ExitCode {
    match run() {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e) as u8)
        }
    }
}
