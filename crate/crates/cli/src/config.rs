//! Run configuration: JSON schema, defaults and validation.

use std::path::{Path, PathBuf};

use hscs::coupling::{BasisSpec, CouplingOptions};
use hscs::csf::StateIndex;
use hscs::kinematics::{build_system, build_system_relaxed, ParticleSystem};
use hscs::radial::ScatteringOptions;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub masses: [f64; 3],
    /// `[Z1, Z2]`.
    pub charges: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisBlock {
    #[serde(rename = "J")]
    pub j: u32,
    #[serde(rename = "K", default)]
    pub k: i32,
    /// Parity index `lambda_p`, `+1` or `-1`.
    pub parity: i8,
    pub m_max: u32,
    pub n_xi_max: u32,
    pub n_eta_max: u32,
    /// Explicit `[m, n_xi, n_eta]` list; every entry must respect the caps.
    /// All states within the caps are used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<[u32; 3]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub rho_min: f64,
    pub rho_max: f64,
    /// Number of geometrically spaced radii.
    pub n_rho: usize,
    /// Gram tolerance that fixes the quadrature order.
    #[serde(default = "default_grid_tol")]
    pub grid_tol: f64,
    #[serde(default)]
    pub refine: u32,
    /// Hyperradial finite-difference step; relative default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Radius at which states are labelled; `rho_max` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_rho: Option<f64>,
}

fn default_grid_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterBlock {
    pub energies: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_max: Option<f64>,
    #[serde(default = "default_closed")]
    pub max_closed_log_amplitude: f64,
    #[serde(default = "default_true")]
    pub extrapolate: bool,
    /// Largest accepted `K` symmetry and `S~` unitarity defect.
    #[serde(default = "default_budget")]
    pub defect_budget: f64,
}

fn default_closed() -> f64 {
    -2.0
}

fn default_true() -> bool {
    true
}

fn default_budget() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetBlock {
    pub rho0: f64,
    pub n_xi_lines: usize,
    pub n_eta_lines: usize,
}

impl Default for NetBlock {
    fn default() -> Self {
        Self {
            rho0: 1.0,
            n_xi_lines: 8,
            n_eta_lines: 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemBlock,
    pub basis: BasisBlock,
    pub grid: GridBlock,
    pub scatter: ScatterBlock,
    #[serde(default)]
    pub net: NetBlock,
    pub output: OutputBlock,
}

impl Default for RunConfig {
    /// Three `m = 0` states of the `(1, 3, 1)` system with unit charges.
    fn default() -> Self {
        Self {
            system: SystemBlock {
                masses: [1.0, 3.0, 1.0],
                charges: [1.0, 1.0],
            },
            basis: BasisBlock {
                j: 0,
                k: 0,
                parity: 1,
                m_max: 0,
                n_xi_max: 1,
                n_eta_max: 1,
                states: Some(vec![[0, 0, 0], [0, 0, 1], [0, 1, 0]]),
            },
            grid: GridBlock {
                rho_min: 0.25,
                rho_max: 800.0,
                n_rho: 167,
                grid_tol: default_grid_tol(),
                refine: 0,
                step: None,
                label_rho: None,
            },
            scatter: ScatterBlock {
                energies: vec![-0.3, -0.2],
                rho0: None,
                rho_max: None,
                max_closed_log_amplitude: default_closed(),
                extrapolate: true,
                defect_budget: default_budget(),
            },
            net: NetBlock::default(),
            output: OutputBlock { dir: PathBuf::from("out") },
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.system;
        if s.masses.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(invalid("masses must be positive and finite"));
        }
        if s.charges.iter().any(|z| !(*z >= 0.0) || !z.is_finite()) {
            return Err(invalid("charges must be non-negative and finite"));
        }
        let b = &self.basis;
        if b.k.unsigned_abs() > b.j {
            return Err(invalid(format!("|K| = {} exceeds J = {}", b.k.unsigned_abs(), b.j)));
        }
        if let Some(states) = &b.states {
            if states.is_empty() {
                return Err(invalid("basis state list is empty"));
            }
            for &[m, x, e] in states {
                if m > b.m_max || x > b.n_xi_max || e > b.n_eta_max {
                    return Err(invalid(format!("state [{m}, {x}, {e}] exceeds the basis caps")));
                }
            }
        }
        self.basis_spec()?;
        let g = &self.grid;
        if !(g.rho_min > 0.0) || !(g.rho_max > g.rho_min) || !g.rho_max.is_finite() {
            return Err(invalid(format!("rho range [{}, {}]", g.rho_min, g.rho_max)));
        }
        if g.n_rho < 4 {
            return Err(invalid("n_rho must be at least 4"));
        }
        if !(g.grid_tol > 0.0) {
            return Err(invalid("grid_tol must be positive"));
        }
        if let Some(h) = g.step {
            if !(h > 0.0) {
                return Err(invalid("step must be positive"));
            }
        }
        if let Some(r) = g.label_rho {
            if !(r > 0.0) {
                return Err(invalid("label_rho must be positive"));
            }
        }
        let sc = &self.scatter;
        for &e in &sc.energies {
            if !(e < 0.0) {
                return Err(invalid(format!("energy {e} is not below the breakup threshold")));
            }
        }
        for r in [sc.rho0, sc.rho_max].into_iter().flatten() {
            if !(r >= g.rho_min && r <= g.rho_max) {
                return Err(invalid(format!("scatter radius {r} outside the rho grid")));
            }
        }
        if !(sc.defect_budget > 0.0) {
            return Err(invalid("defect_budget must be positive"));
        }
        if !(self.net.rho0 > 0.0) {
            return Err(invalid("net rho0 must be positive"));
        }
        Ok(())
    }

    /// The system as used for couplings and scattering; both charges must be positive.
    pub fn system(&self) -> Result<ParticleSystem> {
        let ([m1, m2, m3], [z1, z2]) = (self.system.masses, self.system.charges);
        Ok(build_system(m1, m2, m3, z1, z2)?)
    }

    /// The system with only the masses validated, for spectra and the net.
    pub fn system_relaxed(&self) -> Result<ParticleSystem> {
        let ([m1, m2, m3], [z1, z2]) = (self.system.masses, self.system.charges);
        Ok(build_system_relaxed(m1, m2, m3, z1, z2)?)
    }

    pub fn basis_spec(&self) -> Result<BasisSpec> {
        let b = &self.basis;
        let spec = match &b.states {
            Some(list) => BasisSpec::new(b.j, b.parity, list.iter().map(|&[m, x, e]| StateIndex::new(m, x, e)).collect()),
            None => BasisSpec::from_caps(b.j, b.parity, b.m_max, b.n_xi_max, b.n_eta_max),
        };
        spec.map_err(|e| invalid(e.to_string()))
    }

    pub fn rho_grid(&self) -> Vec<f64> {
        let g = &self.grid;
        let n = g.n_rho - 1;
        let span = g.rho_max / g.rho_min;
        (0..=n)
            .map(|k| match k {
                0 => g.rho_min,
                k if k == n => g.rho_max,
                k => g.rho_min * span.powf(k as f64 / n as f64),
            })
            .collect()
    }

    pub fn label_rho(&self) -> f64 {
        self.grid.label_rho.unwrap_or(self.grid.rho_max)
    }

    pub fn coupling_options(&self, extra_refine: u32) -> CouplingOptions {
        CouplingOptions {
            grid_tol: self.grid.grid_tol,
            refine: self.grid.refine + extra_refine,
            step: self.grid.step,
            ..Default::default()
        }
    }

    pub fn scattering_options(&self) -> ScatteringOptions {
        let s = &self.scatter;
        ScatteringOptions {
            rho0: s.rho0,
            rho_max: s.rho_max,
            max_closed_log_amplitude: s.max_closed_log_amplitude,
            extrapolate: s.extrapolate,
            ..Default::default()
        }
    }

    /// SHA-256 of the tool version and the canonical JSON form of the
    /// configuration, with the output directory excluded.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output.dir = PathBuf::new();
        let json = serde_json::to_string(&canonical).expect("configuration serializes");
        let mut h = Sha256::new();
        h.update(env!("CARGO_PKG_VERSION").as_bytes());
        h.update([0u8]);
        h.update(json.as_bytes());
        hex::encode(h.finalize())
    }
}
