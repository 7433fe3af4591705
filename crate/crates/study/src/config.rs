//! Study settings from a `key = value` text file, with command-line overrides.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use cutdg::{Rescaling, StabilizationParams};

use crate::condition::SweepConfig;
use crate::{Result, StudyError};

#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub params: StabilizationParams,
    /// Cells per axis on level 0.
    pub n0: usize,
    /// Number of refinement levels for convergence and geometry studies.
    pub levels: usize,
    /// Refinement level of sweeps.
    pub level: usize,
    pub positions: usize,
    pub ablate_ghost: bool,
    pub sweep_configs: Vec<SweepConfig>,
    pub rescaling: Rescaling,
    pub solver_tolerance: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            params: StabilizationParams::default(),
            n0: 8,
            levels: 5,
            level: 1,
            positions: 101,
            ablate_ghost: false,
            sweep_configs: SweepConfig::ALL.to_vec(),
            rescaling: Rescaling::Symmetric,
            solver_tolerance: 1e-10,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| StudyError::Config(format!("cannot parse value {value:?} for key {key:?}")))
}

pub fn parse_rescaling(value: &str) -> Result<Rescaling> {
    match value.trim() {
        "symmetric" => Ok(Rescaling::Symmetric),
        "one-sided" => Ok(Rescaling::OneSided),
        "pairwise" => Ok(Rescaling::Pairwise),
        other => Err(StudyError::Config(format!("unknown rescaling {other:?}"))),
    }
}

pub fn parse_bool(value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(StudyError::Config(format!("not a boolean: {other:?}"))),
    }
}

/// Splits `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) =
            line.split_once('=').ok_or_else(|| StudyError::Config(format!("line {}: expected key = value", i + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

impl StudyConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let p = &mut self.params;
        match key {
            "c-bulk" => p.c_bulk = parse(key, value)?,
            "c-surf" => p.c_surf = parse(key, value)?,
            "gamma-bulk" => p.gamma_bulk = parse(key, value)?,
            "gamma-surf" => p.gamma_surf = parse(key, value)?,
            "mu-bulk" => p.mu_bulk = parse(key, value)?,
            "mu-surf" => p.mu_surf = parse(key, value)?,
            "tau-bulk" => p.tau_bulk = parse(key, value)?,
            "tau-surf" => p.tau_surf = parse(key, value)?,
            "n0" => self.n0 = parse(key, value)?,
            "levels" => self.levels = parse(key, value)?,
            "level" => self.level = parse(key, value)?,
            "positions" => self.positions = parse(key, value)?,
            "ablate-ghost" => self.ablate_ghost = parse_bool(value)?,
            "config" => self.sweep_configs = value.split(',').map(SweepConfig::from_str).collect::<Result<Vec<_>>>()?,
            "rescaling" => self.rescaling = parse_rescaling(value)?,
            "solver-tolerance" => self.solver_tolerance = parse(key, value)?,
            other => return Err(StudyError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (k, v) in parse_pairs(text)? {
            c.set(&k, &v)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    /// Stabilization actually used by the convergence study.
    pub fn effective_params(&self) -> StabilizationParams {
        if self.ablate_ghost {
            self.params.ablated()
        } else {
            self.params
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n0 == 0 {
            return Err(StudyError::Config("n0 must be positive".into()));
        }
        if !(self.solver_tolerance > 0.0) {
            return Err(StudyError::Config("solver tolerance must be positive".into()));
        }
        Ok(())
    }
}
