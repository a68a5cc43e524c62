//! JSON experiment manifests. Every key mirrors a command-line flag; flags
//! given on the command line take precedence over the file.

use std::path::Path;

use serde::Deserialize;

use qc_core::harness::Cutoffs;
use qc_core::sing_integral::QuadratureConfig;

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffsFile {
    pub primes: Option<u64>,
    pub q: Option<u64>,
    pub l: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureFile {
    pub radial: Option<usize>,
    pub angular: Option<usize>,
    pub plane: Option<usize>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub d1: Option<usize>,
    pub m: Option<f64>,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    #[serde(rename = "L_list")]
    pub l_list: Option<Vec<f64>>,
    pub weight: Option<String>,
    pub eps: Option<f64>,
    #[serde(default)]
    pub cutoffs: CutoffsFile,
    #[serde(default)]
    pub quadrature: QuadratureFile,
    pub budget: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }
}

/// Command-line cutoff flags.
#[derive(Debug, Clone, Default, PartialEq, clap::Args)]
pub struct CutoffArgs {
    /// Prime cutoff P of the Euler products.
    #[arg(long)]
    pub primes: Option<u64>,
    /// Modulus cutoff X of the Dirichlet sum.
    #[arg(long = "q-cutoff")]
    pub q_cutoff: Option<u64>,
    /// Largest prime-power level in each local factor.
    #[arg(long)]
    pub levels: Option<u32>,
}

impl CutoffArgs {
    pub fn resolve(&self, file: &ConfigFile) -> Cutoffs {
        let d = Cutoffs::default();
        Cutoffs {
            primes: self.primes.or(file.cutoffs.primes).unwrap_or(d.primes),
            q: self.q_cutoff.or(file.cutoffs.q).unwrap_or(d.q),
            l: self.levels.or(file.cutoffs.l),
            rel_tol: d.rel_tol,
        }
    }
}

/// Command-line quadrature flags.
#[derive(Debug, Clone, Default, PartialEq, clap::Args)]
pub struct QuadratureArgs {
    /// Gauss-Legendre order of the radial panels.
    #[arg(long)]
    pub radial: Option<usize>,
    /// Angular order on the sphere.
    #[arg(long)]
    pub angular: Option<usize>,
    /// Gauss-Legendre order of the fiber panels.
    #[arg(long)]
    pub plane: Option<usize>,
    /// Radius of the apex panel.
    #[arg(long = "r-min")]
    pub r_min: Option<f64>,
    /// Outer radius of the radial integral.
    #[arg(long = "r-max")]
    pub r_max: Option<f64>,
}

impl QuadratureArgs {
    pub fn resolve(&self, file: &ConfigFile, base: QuadratureConfig) -> Result<QuadratureConfig, CliError> {
        let q = &file.quadrature;
        let mut cfg = base;
        if let Some(v) = self.radial.or(q.radial) {
            cfg.radial_order = v;
        }
        if let Some(v) = self.angular.or(q.angular) {
            cfg.angular_order = v;
        }
        if let Some(v) = self.plane.or(q.plane) {
            cfg.plane_order = v;
        }
        if let Some(v) = self.r_max.or(q.r_max) {
            cfg.r_max = v;
        }
        if let Some(v) = self.r_min.or(q.r_min) {
            cfg.r_min = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
