//! Asymptotic channels of the truncated basis at a given total energy.

use serde::{Deserialize, Serialize};

use crate::coupling::{BasisSpec, CouplingOptions};
use crate::csf::{classify, solve_state_with, ChannelLabel};
use crate::error::{Error, Result};
use crate::kinematics::{channel_kinematics, ChannelKinematics, ParticleSystem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    /// Position of the state in the basis (and in the radial system).
    pub basis_index: usize,
    pub label: ChannelLabel,
    pub kinematics: ChannelKinematics,
}

impl Channel {
    pub fn threshold(&self) -> f64 {
        self.kinematics.threshold
    }

    pub fn is_open(&self) -> bool {
        self.kinematics.is_open()
    }
}

/// Channels ordered open first, then by ascending threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpace {
    pub energy: f64,
    pub j: u32,
    pub channels: Vec<Channel>,
    pub n_open: usize,
}

impl ChannelSpace {
    pub fn n_total(&self) -> usize {
        self.channels.len()
    }

    pub fn open(&self) -> &[Channel] {
        &self.channels[..self.n_open]
    }

    pub fn closed(&self) -> &[Channel] {
        &self.channels[self.n_open..]
    }
}

/// Labels every basis state from its solution at `rho_label`.
pub fn label_basis(
    system: &ParticleSystem,
    basis: &BasisSpec,
    rho_label: f64,
    opts: &CouplingOptions,
) -> Result<Vec<ChannelLabel>> {
    basis
        .states
        .iter()
        .map(|&idx| {
            let state = solve_state_with(system, rho_label, idx, None, &opts.solver)?;
            classify(system, std::slice::from_ref(&state))
        })
        .collect()
}

pub fn build_channel_space(
    system: &ParticleSystem,
    energy: f64,
    j: u32,
    labels: &[ChannelLabel],
) -> Result<ChannelSpace> {
    if energy >= 0.0 {
        return Err(Error::AboveBreakup(energy));
    }
    let mut channels = labels
        .iter()
        .enumerate()
        .map(|(basis_index, &label)| {
            Ok(Channel {
                basis_index,
                label,
                kinematics: channel_kinematics(system, energy, label.alpha, label.n)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    channels.sort_by(|a, b| {
        b.is_open()
            .cmp(&a.is_open())
            .then(a.threshold().total_cmp(&b.threshold()))
            .then(a.basis_index.cmp(&b.basis_index))
    });
    let n_open = channels.iter().filter(|c| c.is_open()).count();
    if n_open == 0 {
        return Err(Error::NoOpenChannel(energy));
    }
    Ok(ChannelSpace {
        energy,
        j,
        channels,
        n_open,
    })
}
