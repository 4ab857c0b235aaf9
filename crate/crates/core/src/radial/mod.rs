//! Coupled hyperradial equations: channel space, propagation of the regular
//! solutions and extraction of the `K` and `S~` matrices.

pub mod channels;
pub mod matching;
pub mod operator;
pub mod propagate;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::coupling::CouplingSet;
use crate::csf::ChannelLabel;
use crate::error::{Error, Result};
use crate::kinematics::ParticleSystem;

pub use channels::{build_channel_space, label_basis, Channel, ChannelSpace};
pub use matching::{k_to_stilde, match_pair, stilde_to_k, symmetry_defect, unitarity_defect, ComplexMatrix, MatchResult, StandingWaves, Tail};
pub use operator::{assemble_operator, CouplingMode, OperatorMatrices, RadialOperator};
pub use propagate::{propagate, PropagationOptions, PropagatorState, SolutionSnapshot};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringOptions {
    /// Start of the propagation; the first tabulated radius when absent.
    pub rho0: Option<f64>,
    /// Outer matching radius; the last tabulated radius when absent.
    pub rho_max: Option<f64>,
    /// Companion radius of each match as a fraction of the matching radius.
    pub hold: f64,
    pub propagation: PropagationOptions,
    /// Largest tolerated `log10` of the closed-channel amplitude at `rho_max`.
    pub max_closed_log_amplitude: f64,
    /// Report `2 K(rho_max) - K(rho_max / 2)`, removing the `1 / rho_max`
    /// error left by inverse-square couplings to closed channels.
    pub extrapolate: bool,
    #[serde(skip)]
    pub mode: CouplingMode,
}

impl Default for ScatteringOptions {
    fn default() -> Self {
        Self {
            rho0: None,
            rho_max: None,
            hold: 0.98,
            propagation: PropagationOptions::default(),
            max_closed_log_amplitude: -2.0,
            extrapolate: true,
            mode: CouplingMode::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringDiagnostics {
    pub rho0: f64,
    pub rho_max: f64,
    pub symmetry_defect: f64,
    pub unitarity_defect: f64,
    /// `max |K(rho_max) - K(rho_max / 2)|` of the unextrapolated matches.
    pub rho_max_sensitivity: f64,
    /// Match at `rho_max` before extrapolation.
    pub k_raw: Vec<Vec<f64>>,
    pub k_half: Vec<Vec<f64>>,
    pub condition: f64,
    pub match_residual: f64,
    pub closed_log_amplitude: f64,
    pub closed_log_slope: Vec<f64>,
    /// Diagonal long-range tails fitted below `rho_max`, by basis state.
    pub tails: Vec<Tail>,
    pub steps: usize,
    pub orthonormalizations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringSolution {
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "J")]
    pub j: u32,
    pub channels: Vec<Channel>,
    pub n_open: usize,
    #[serde(rename = "K")]
    pub k: Vec<Vec<f64>>,
    #[serde(rename = "S_tilde")]
    pub s_tilde: ComplexMatrix,
    /// Matched solution at `rho_max`: rows are basis states, columns open channels.
    pub solution_at_rho_max: Vec<Vec<f64>>,
    pub diagnostics: ScatteringDiagnostics,
}

impl ScatteringSolution {
    pub fn k_matrix(&self) -> DMatrix<f64> {
        let n = self.k.len();
        DMatrix::from_fn(n, n, |i, j| self.k[i][j])
    }
}

const TAIL_SAMPLES: usize = 16;

/// Least-squares fit of `rho^2 (V_bb - E_b) = lambda + mu / rho` over
/// `[rho / 2, rho]` for every basis state.
pub fn fit_tails(op: &RadialOperator, space: &ChannelSpace, rho: f64) -> Result<Vec<Tail>> {
    let mut design = DMatrix::zeros(TAIL_SAMPLES, 2);
    let mut values = DMatrix::zeros(TAIL_SAMPLES, op.n);
    for s in 0..TAIL_SAMPLES {
        let r = rho * (0.5 + 0.5 * s as f64 / (TAIL_SAMPLES - 1) as f64);
        let m = op.matrices(r)?;
        design[(s, 0)] = 1.0;
        design[(s, 1)] = 1.0 / r;
        for ch in &space.channels {
            let b = ch.basis_index;
            values[(s, b)] = r * r * (m.a[(b, b)] + space.energy - ch.threshold());
        }
    }
    let coef = design
        .svd(true, true)
        .solve(&values, 0.0)
        .map_err(|e| Error::SingularMatrix(format!("tail fit: {e}")))?;
    Ok((0..op.n)
        .map(|b| Tail {
            lambda: coef[(0, b)],
            mu: coef[(1, b)],
        })
        .collect())
}

pub fn solve_scattering(
    system: &ParticleSystem,
    set: &CouplingSet,
    labels: &[ChannelLabel],
    energy: f64,
    opts: &ScatteringOptions,
) -> Result<ScatteringSolution> {
    if labels.len() != set.basis.len() {
        return Err(Error::InvalidConfig(format!(
            "{} channel labels for {} basis states",
            labels.len(),
            set.basis.len()
        )));
    }
    let space = build_channel_space(system, energy, set.basis.j, labels)?;
    let op = assemble_operator(set, energy, opts.mode)?;
    let (lo, hi) = op.range();
    let rho0 = opts.rho0.unwrap_or(lo);
    let rho_max = opts.rho_max.unwrap_or(hi);
    let half = 0.5 * rho_max;
    let state = propagate(&op, rho0, &[half, rho_max], opts.hold, &opts.propagation)?;

    let matched = |r: f64| -> Result<MatchResult> {
        let tails = fit_tails(&op, &space, r)?;
        let inner = state.snapshot(r * opts.hold).expect("companion snapshot recorded");
        let outer = state.snapshot(r).expect("matching snapshot recorded");
        match_pair(&space, &tails, &[inner, outer])
    };
    let at_half = matched(half)?;
    let at_max = matched(rho_max)?;
    if at_max.closed_log_amplitude > opts.max_closed_log_amplitude {
        return Err(Error::ClosedChannelContamination(at_max.closed_log_amplitude));
    }
    let k = if opts.extrapolate {
        &at_max.k * 2.0 - &at_half.k
    } else {
        at_max.k.clone()
    };
    let s = k_to_stilde(&k, space.j)?;
    let outer = state.snapshot(rho_max).expect("matching snapshot recorded");
    let psi = &outer.g * &at_max.coefficients;
    let diagnostics = ScatteringDiagnostics {
        rho0,
        rho_max,
        symmetry_defect: symmetry_defect(&k),
        unitarity_defect: unitarity_defect(&s),
        rho_max_sensitivity: (&at_max.k - &at_half.k).amax(),
        k_raw: matching::nested(&at_max.k),
        k_half: matching::nested(&at_half.k),
        condition: at_max.condition,
        match_residual: at_max.residual,
        closed_log_amplitude: at_max.closed_log_amplitude,
        closed_log_slope: at_max.closed_log_slope.clone(),
        tails: fit_tails(&op, &space, rho_max)?,
        steps: state.stats.accepted,
        orthonormalizations: state.log.len(),
    };
    Ok(ScatteringSolution {
        energy,
        j: space.j,
        n_open: space.n_open,
        channels: space.channels.clone(),
        k: matching::nested(&k),
        s_tilde: ComplexMatrix::from(&s),
        solution_at_rho_max: matching::nested(&psi),
        diagnostics,
    })
}
