//! Experiment configuration, read from TOML.
//!
//! ```toml
//! methods = ["ours", "pma"]
//!
//! [scenario]
//! family = "toeplitz"
//! base = 0.9
//! n = 400
//! p = 800
//! q = 800
//! s_u = 5
//! s_v = 5
//! rho = 0.9
//! seed = 1
//! replicates = 10
//!
//! [solver]
//! tau_grid_u = [0.05, 0.1, 0.2]
//! tau_grid_v = [0.05, 0.1, 0.2]
//! alpha = 1.0
//! tol = 1e-6
//! max_iter = 5000
//! ```

use crate::error::{AppError, Result};
use scca_core::simulation::{derive_seed, Family, ScenarioSpec};
use scca_core::SolverConfig;
use serde::{Deserialize, Serialize};

/// Stream offset for per-replicate sample seeds; lower streams are used by
/// the truth construction.
const SAMPLE_STREAM: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Identity,
    Toeplitz,
    SparseInverse,
    Spiked,
    BlockToeplitz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub family: FamilyName,
    /// Toeplitz decay (toeplitz, block_toeplitz).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<f64>,
    /// Spike count (spiked).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Spike strength (spiked).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Number of diagonal blocks (block_toeplitz).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<usize>,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub s_u: usize,
    pub s_v: usize,
    pub rho: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Extra sample sizes to run besides `n`, same dimensions.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_n: Vec<usize>,
}

fn default_replicates() -> usize {
    10
}

fn need<T>(v: Option<T>, field: &str, family: &str) -> Result<T> {
    v.ok_or_else(|| AppError::usage(format!("scenario.{field} is required for family `{family}`")))
}

impl ScenarioConfig {
    pub fn family(&self) -> Result<Family> {
        Ok(match self.family {
            FamilyName::Identity => Family::Identity,
            FamilyName::SparseInverse => Family::SparseInverse,
            FamilyName::Toeplitz => Family::Toeplitz {
                base: need(self.base, "base", "toeplitz")?,
            },
            FamilyName::Spiked => Family::Spiked {
                k: need(self.k, "k", "spiked")?,
                lambda: need(self.lambda, "lambda", "spiked")?,
            },
            FamilyName::BlockToeplitz => Family::BlockToeplitz {
                blocks: need(self.blocks, "blocks", "block_toeplitz")?,
                base: need(self.base, "base", "block_toeplitz")?,
            },
        })
    }

    /// Validated model description at sample size `n`.
    pub fn spec(&self, n: usize) -> Result<ScenarioSpec> {
        let spec = ScenarioSpec {
            family: self.family()?,
            n,
            p: self.p,
            q: self.q,
            s_u: self.s_u,
            s_v: self.s_v,
            rho: self.rho,
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `n` followed by `extra_n`, deduplicated, ascending.
    pub fn sample_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.n];
        sizes.extend(&self.extra_n);
        sizes.sort_unstable();
        sizes.dedup();
        sizes
    }

    pub fn sample_seed(&self, replicate: usize) -> u64 {
        derive_seed(self.seed, SAMPLE_STREAM + replicate as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauPairing {
    /// `tau_u[i]` with `tau_v[i]`; both grids must have the same length.
    #[default]
    Diagonal,
    /// Every combination.
    Product,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tau_grid_u: Vec<f64>,
    pub tau_grid_v: Vec<f64>,
    pub tau_pairing: TauPairing,
    pub alpha: f64,
    /// Bridge weight for `Y`; defaults to `alpha`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_y: Option<f64>,
    /// Inner ADMM tolerance.
    pub tol: f64,
    /// Inner ADMM iteration cap.
    pub max_iter: usize,
    pub outer_tol: f64,
    pub outer_max_iter: usize,
    pub lambda: f64,
    pub scale_lambda: bool,
    pub seed: u64,
    pub pma_max_iter: usize,
    pub classical_ridge: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            tau_grid_u: Vec::new(),
            tau_grid_v: Vec::new(),
            tau_pairing: TauPairing::Diagonal,
            alpha: d.alpha_x,
            alpha_y: None,
            tol: d.inner_tol,
            max_iter: d.inner_max_iter,
            outer_tol: d.outer_tol,
            outer_max_iter: d.outer_max_iter,
            lambda: d.lambda,
            scale_lambda: d.scale_lambda,
            seed: d.seed,
            pma_max_iter: 1000,
            classical_ridge: 0.0,
        }
    }
}

impl SolverSection {
    pub fn solver_config(&self) -> Result<SolverConfig> {
        let cfg = SolverConfig {
            alpha_x: self.alpha,
            alpha_y: self.alpha_y.unwrap_or(self.alpha),
            inner_tol: self.tol,
            inner_max_iter: self.max_iter,
            outer_tol: self.outer_tol,
            outer_max_iter: self.outer_max_iter,
            lambda: self.lambda,
            scale_lambda: self.scale_lambda,
            seed: self.seed,
            ..SolverConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The `(tau_u, tau_v)` pairs of the grid in configuration order.
    pub fn tau_pairs(&self) -> Result<Vec<(f64, f64)>> {
        let (gu, gv) = (&self.tau_grid_u, &self.tau_grid_v);
        if gu.is_empty() || gv.is_empty() {
            return Err(AppError::usage("solver.tau_grid_u and solver.tau_grid_v must be nonempty"));
        }
        if gu.iter().chain(gv).any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(AppError::usage("tau values must be finite and nonnegative"));
        }
        Ok(match self.tau_pairing {
            TauPairing::Diagonal => {
                if gu.len() != gv.len() {
                    return Err(AppError::usage(format!(
                        "diagonal pairing needs grids of equal length ({} vs {})",
                        gu.len(),
                        gv.len()
                    )));
                }
                gu.iter().copied().zip(gv.iter().copied()).collect()
            }
            TauPairing::Product => gu
                .iter()
                .flat_map(|&a| gv.iter().map(move |&b| (a, b)))
                .collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ours,
    Pma,
    Classical,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ours => "ours",
            Method::Pma => "pma",
            Method::Classical => "classical",
        }
    }
}

fn default_methods() -> Vec<Method> {
    vec![Method::Ours]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub solver: SolverSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| AppError::usage(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for n in self.scenario.sample_sizes() {
            self.scenario.spec(n)?;
        }
        if self.methods.is_empty() {
            return Err(AppError::usage("methods must name at least one method"));
        }
        self.solver.solver_config()?;
        if !(self.solver.classical_ridge >= 0.0) {
            return Err(AppError::usage("solver.classical_ridge must be nonnegative"));
        }
        Ok(())
    }
}
