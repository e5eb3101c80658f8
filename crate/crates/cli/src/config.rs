//! Run configuration: seeded reproducibility, caps, and the desk-scale
//! switches. Precedence: defaults < config file < ELLDLOG_SEED < flags.

use std::fs;
use std::path::Path;

use elldlog_core::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: u64,
    pub enum_cap: u64,
    pub degree_cap: usize,
    pub trial_cap: u64,
    pub memory_cap: u64,
    pub fb_bound: u64,
    pub descent_floor: u64,
    pub min_ext_degree: usize,
    pub heuristic_mode: bool,
    pub m_override: Option<u32>,
    pub output: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            threads: 1,
            enum_cap: 10_000_000,
            degree_cap: 200_000,
            trial_cap: 20_000,
            memory_cap: 1 << 22,
            fb_bound: 2,
            descent_floor: 2,
            min_ext_degree: 1,
            heuristic_mode: true,
            m_override: None,
            output: None,
        }
    }
}

impl RunConfig {
    /// Apply `key=value` lines; `#` comments and blank lines are skipped.
    pub fn apply_config_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::domain(format!("cannot read config file: {e}")))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::domain(format!(
                    "config line {} is not key=value",
                    lineno + 1
                )));
            };
            self.apply_kv(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn apply_env(&mut self) {
        if let Ok(seed) = std::env::var("ELLDLOG_SEED") {
            if let Ok(v) = seed.trim().parse() {
                self.seed = v;
            }
        }
    }

    fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |k: &str, v: &str| Error::domain(format!("bad value for {k}: {v}"));
        match key {
            "seed" => self.seed = value.parse().map_err(|_| bad(key, value))?,
            "threads" => self.threads = value.parse().map_err(|_| bad(key, value))?,
            "enum-cap" => self.enum_cap = value.parse().map_err(|_| bad(key, value))?,
            "degree-cap" => self.degree_cap = value.parse().map_err(|_| bad(key, value))?,
            "trial-cap" => self.trial_cap = value.parse().map_err(|_| bad(key, value))?,
            "memory-cap" => self.memory_cap = value.parse().map_err(|_| bad(key, value))?,
            "fb-bound" => self.fb_bound = value.parse().map_err(|_| bad(key, value))?,
            "floor" => self.descent_floor = value.parse().map_err(|_| bad(key, value))?,
            "min-ext-degree" => {
                self.min_ext_degree = value.parse().map_err(|_| bad(key, value))?
            }
            "heuristic" => self.heuristic_mode = value.parse().map_err(|_| bad(key, value))?,
            "m" => self.m_override = Some(value.parse().map_err(|_| bad(key, value))?),
            _ => return Err(Error::domain(format!("unknown config key: {key}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.threads == 0 {
            return Err(Error::domain("threads must be positive"));
        }
        for (name, v) in [
            ("enum-cap", self.enum_cap),
            ("trial-cap", self.trial_cap),
            ("memory-cap", self.memory_cap),
            ("fb-bound", self.fb_bound),
            ("floor", self.descent_floor),
        ] {
            if v == 0 {
                return Err(Error::domain(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn descent_config(&self) -> elldlog_core::descent::DescentConfig {
        elldlog_core::descent::DescentConfig {
            max_trials_3to2: self.trial_cap,
            max_trials_4to3: self.trial_cap,
            min_ext_degree: self.min_ext_degree,
            heuristic_mode: self.heuristic_mode,
            floor: self.descent_floor,
            enum_cap: self.enum_cap,
            degree_cap: self.degree_cap,
            seed: self.seed,
            max_component_retries: 16,
        }
    }

    pub fn solve_config(&self) -> elldlog_core::dlog::SolveConfig {
        elldlog_core::dlog::SolveConfig {
            fb_bound: self.fb_bound,
            m_override: self.m_override,
            max_restarts: 64,
            relation_retries: 24,
            lift_budget: None,
            enum_cap: self.enum_cap,
        }
    }
}
