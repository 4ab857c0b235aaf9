//! Coupling matrices `P, Q, R, T, U, W` of the hyperradial system.

pub mod grid;
pub mod matrices;
pub mod potential;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::RotorIndex;
use crate::csf::derivative::default_step;
use crate::csf::{d_rho, solve_state_with, CsfState, SolverOptions, StateIndex};
use crate::error::{Error, Result};
use crate::kinematics::ParticleSystem;
use crate::parallel::{self, Parallelism};

pub use grid::{build_grid, QuadratureGrid};
pub use matrices::{compute_pq, compute_r, compute_t, compute_u, compute_w, theta_kernel, Evaluator, StateFields};
pub use potential::RegularizedPotential;

/// Truncated two-centre basis for total angular momentum `J` and parity index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub j: u32,
    pub parity: i8,
    pub states: Vec<StateIndex>,
}

impl BasisSpec {
    /// States grouped by ascending `m` (stable within each group).
    pub fn new(j: u32, parity: i8, states: Vec<StateIndex>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidConfig("empty basis".into()));
        }
        if parity != 1 && parity != -1 {
            return Err(Error::InvalidConfig(format!("parity index {parity}")));
        }
        let min_m = RotorIndex::min_m(j, parity);
        for (k, s) in states.iter().enumerate() {
            if s.m > j || s.m < min_m {
                return Err(Error::InvalidConfig(format!(
                    "state {s:?} not allowed for J = {j}, parity {parity}"
                )));
            }
            if states[..k].contains(s) {
                return Err(Error::InvalidConfig(format!("duplicate state {s:?}")));
            }
        }
        let mut states = states;
        states.sort_by_key(|s| s.m);
        Ok(Self { j, parity, states })
    }

    /// All states with `m <= m_max`, `n_xi <= n_xi_max`, `n_eta <= n_eta_max`
    /// allowed by `J` and parity.
    pub fn from_caps(j: u32, parity: i8, m_max: u32, n_xi_max: u32, n_eta_max: u32) -> Result<Self> {
        let lo = RotorIndex::min_m(j, parity);
        let mut states = Vec::new();
        for m in lo..=m_max.min(j) {
            for n_xi in 0..=n_xi_max {
                for n_eta in 0..=n_eta_max {
                    states.push(StateIndex::new(m, n_xi, n_eta));
                }
            }
        }
        Self::new(j, parity, states)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Distinct `m` values in ascending order.
    pub fn m_values(&self) -> Vec<u32> {
        let mut ms: Vec<u32> = self.states.iter().map(|s| s.m).collect();
        ms.dedup();
        ms
    }

    /// Range of global indices belonging to `m`.
    pub fn block_range(&self, m: u32) -> std::ops::Range<usize> {
        let start = self.states.iter().position(|s| s.m == m).unwrap_or(0);
        let len = self.states.iter().filter(|s| s.m == m).count();
        start..start + len
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingOptions {
    /// Gram tolerance for grid construction.
    pub grid_tol: f64,
    /// Extra grid refinement levels beyond the coarsest acceptable one.
    pub refine: u32,
    /// Hyperradial finite-difference step; `None` uses `max(1e-4, 1e-4 rho)`.
    pub step: Option<f64>,
    pub solver: SolverOptions,
}

impl Default for CouplingOptions {
    fn default() -> Self {
        Self {
            grid_tol: 1e-10,
            refine: 0,
            step: None,
            solver: SolverOptions::default(),
        }
    }
}

/// Couplings within one `m` block.
#[derive(Debug, Clone, PartialEq)]
pub struct MBlock {
    pub m: u32,
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub w: DMatrix<f64>,
}

/// `T_{i m, j m-1}` between adjacent blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct TBlock {
    pub m: u32,
    pub matrix: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PointDiagnostics {
    pub gram_deviation: f64,
    pub q_asymmetry: f64,
    /// `max |P - Q Q^T|`, which shrinks as the basis approaches completeness.
    pub completeness: f64,
    pub grid_level: u32,
    pub grid_nodes: usize,
    pub richardson_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingsAtRho {
    pub rho: f64,
    pub energies: Vec<f64>,
    pub blocks: Vec<MBlock>,
    pub t: Vec<TBlock>,
    pub diagnostics: PointDiagnostics,
}

/// Full `N x N` matrices at one `rho` in the global state order.
#[derive(Debug, Clone, PartialEq)]
pub struct FullCouplings {
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub w: DMatrix<f64>,
    /// Symmetric placement of all `T` blocks.
    pub t: DMatrix<f64>,
}

/// Solves the basis states at `rho` and their hyperradial derivatives.
pub fn solve_basis(
    system: &ParticleSystem,
    basis: &BasisSpec,
    rho: f64,
    opts: &CouplingOptions,
) -> Result<Vec<CsfState>> {
    basis
        .states
        .iter()
        .map(|&idx| solve_state_with(system, rho, idx, None, &opts.solver))
        .collect()
}

fn gram_of(ev: &Evaluator, fields: &[StateFields]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in fields.iter().enumerate() {
        for (j, b) in fields.iter().enumerate().take(i + 1) {
            if a.m != b.m {
                continue;
            }
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((ev.overlap(a, b) - want).abs());
        }
    }
    worst
}

/// All coupling families at a single hyperradius.
pub fn couplings_at(system: &ParticleSystem, basis: &BasisSpec, rho: f64, opts: &CouplingOptions) -> Result<CouplingsAtRho> {
    let states = solve_basis(system, basis, rho, opts)?;
    let step = opts.step.unwrap_or_else(|| default_step(rho));
    let derivs = states
        .iter()
        .map(|s| d_rho(system, s, step, &opts.solver))
        .collect::<Result<Vec<_>>>()?;
    let base = build_grid(&states, opts.grid_tol)?;
    let grid = if opts.refine == 0 {
        base
    } else {
        let shape = grid::GridShape::for_states(&states)?;
        QuadratureGrid::new(base.d, shape, base.level + opts.refine)
    };
    let ev = Evaluator::new(&grid, system, &states[0]);
    let fields: Vec<StateFields> = states.iter().zip(&derivs).map(|(s, d)| ev.fields(s, Some(d))).collect();

    let mut diag = PointDiagnostics {
        gram_deviation: gram_of(&ev, &fields),
        grid_level: grid.level,
        grid_nodes: grid.len(),
        richardson_gap: derivs.iter().map(|d| d.richardson_gap).fold(0.0, f64::max),
        ..Default::default()
    };
    let mut blocks = Vec::new();
    let mut t = Vec::new();
    for m in basis.m_values() {
        let range = basis.block_range(m);
        let f = &fields[range.clone()];
        let (p, q, asym) = compute_pq(&ev, f);
        diag.q_asymmetry = diag.q_asymmetry.max(asym);
        diag.completeness = diag.completeness.max((&p - &q * q.transpose()).abs().max());
        blocks.push(MBlock {
            m,
            p,
            q,
            r: compute_r(&ev, f, basis.j, m),
            u: compute_u(&ev, f),
            w: compute_w(&ev, f),
        });
        if m >= 1 && basis.j > 0 && basis.m_values().contains(&(m - 1)) {
            let lower = &fields[basis.block_range(m - 1)];
            t.push(TBlock {
                m,
                matrix: compute_t(&ev, f, lower, basis.j),
            });
        }
    }
    Ok(CouplingsAtRho {
        rho,
        energies: states.iter().map(|s| s.eps).collect(),
        blocks,
        t,
        diagnostics: diag,
    })
}

/// Couplings on a hyperradial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSet {
    pub basis: BasisSpec,
    pub points: Vec<CouplingsAtRho>,
}

/// Computes [`couplings_at`] for every `rho` in ascending order.
pub fn compute_coupling_set(
    system: &ParticleSystem,
    basis: &BasisSpec,
    rhos: &[f64],
    opts: &CouplingOptions,
    par: Parallelism,
) -> Result<CouplingSet> {
    let mut rhos = rhos.to_vec();
    rhos.sort_by(f64::total_cmp);
    rhos.dedup();
    if rhos.is_empty() || !(rhos[0] > 0.0) {
        return Err(Error::InvalidConfig("rho grid must be nonempty and positive".into()));
    }
    let points = parallel::map(&rhos, par, |&rho| couplings_at(system, basis, rho, opts))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(CouplingSet {
        basis: basis.clone(),
        points,
    })
}

/// One entry of the serialized coupling table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub rho: f64,
    pub family: Family,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    P,
    Q,
    R,
    T,
    U,
    W,
}

impl Family {
    pub const ALL: [Family; 6] = [Family::P, Family::Q, Family::R, Family::T, Family::U, Family::W];
}

/// JSON form of a [`CouplingSet`]; `row`/`col` are global state indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingTable {
    pub basis: BasisSpec,
    pub rho: Vec<f64>,
    pub energies: Vec<Vec<f64>>,
    pub diagnostics: Vec<PointDiagnostics>,
    pub entries: Vec<TableEntry>,
}

impl FullCouplings {
    pub fn zeros(n: usize) -> Self {
        let z = || DMatrix::<f64>::zeros(n, n);
        Self {
            p: z(),
            q: z(),
            r: z(),
            u: z(),
            w: z(),
            t: z(),
        }
    }
}

impl CouplingsAtRho {
    pub fn block(&self, m: u32) -> Option<&MBlock> {
        self.blocks.iter().find(|b| b.m == m)
    }

    pub fn full(&self, basis: &BasisSpec) -> FullCouplings {
        let n = basis.len();
        let z = || DMatrix::<f64>::zeros(n, n);
        let mut out = FullCouplings {
            p: z(),
            q: z(),
            r: z(),
            u: z(),
            w: z(),
            t: z(),
        };
        for b in &self.blocks {
            let range = basis.block_range(b.m);
            let (o, k) = (range.start, range.len());
            out.p.view_mut((o, o), (k, k)).copy_from(&b.p);
            out.q.view_mut((o, o), (k, k)).copy_from(&b.q);
            out.r.view_mut((o, o), (k, k)).copy_from(&b.r);
            out.u.view_mut((o, o), (k, k)).copy_from(&b.u);
            out.w.view_mut((o, o), (k, k)).copy_from(&b.w);
        }
        for tb in &self.t {
            let up = basis.block_range(tb.m);
            let lo = basis.block_range(tb.m - 1);
            out.t.view_mut((up.start, lo.start), (up.len(), lo.len())).copy_from(&tb.matrix);
            out.t.view_mut((lo.start, up.start), (lo.len(), up.len())).copy_from(&tb.matrix.transpose());
        }
        out
    }
}

impl CouplingSet {
    pub fn rho(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.rho).collect()
    }

    /// Table with structural zeros (`Q` diagonal, `R` with zero prefactor,
    /// the upper copy of symmetric matrices and of `T`) omitted.
    pub fn to_table(&self) -> CouplingTable {
        let mut entries = Vec::new();
        for pt in &self.points {
            let full = pt.full(&self.basis);
            for fam in Family::ALL {
                let mat = match fam {
                    Family::P => &full.p,
                    Family::Q => &full.q,
                    Family::R => &full.r,
                    Family::T => &full.t,
                    Family::U => &full.u,
                    Family::W => &full.w,
                };
                for row in 0..mat.nrows() {
                    for col in 0..mat.ncols() {
                        let (mr, mc) = (self.basis.states[row].m, self.basis.states[col].m);
                        let keep = match fam {
                            Family::Q => mr == mc && row != col,
                            Family::R => mr == mc && col <= row && matrices::r_prefactor(self.basis.j, mr) != 0.0,
                            Family::T => self.basis.j > 0 && mr == mc + 1,
                            _ => mr == mc && col <= row,
                        };
                        if keep {
                            entries.push(TableEntry {
                                rho: pt.rho,
                                family: fam,
                                row,
                                col,
                                value: mat[(row, col)],
                            });
                        }
                    }
                }
            }
        }
        CouplingTable {
            basis: self.basis.clone(),
            rho: self.rho(),
            energies: self.points.iter().map(|p| p.energies.clone()).collect(),
            diagnostics: self.points.iter().map(|p| p.diagnostics).collect(),
            entries,
        }
    }

    /// Couplings of a sub-basis; matrix elements do not depend on the rest
    /// of the basis, so this is exact.
    pub fn restrict(&self, states: &[StateIndex]) -> Result<Self> {
        let basis = BasisSpec::new(self.basis.j, self.basis.parity, states.to_vec())?;
        let old: Vec<usize> = basis
            .states
            .iter()
            .map(|s| {
                self.basis
                    .states
                    .iter()
                    .position(|o| o == s)
                    .ok_or_else(|| Error::InvalidConfig(format!("state {s:?} not in the coupling basis")))
            })
            .collect::<Result<_>>()?;
        let table = self.to_table();
        let new_index = |i: usize| old.iter().position(|&o| o == i);
        let entries = table
            .entries
            .iter()
            .filter_map(|e| {
                let (r, c) = (new_index(e.row)?, new_index(e.col)?);
                // the lower-triangle convention may flip under reordering
                let (r, c) = match e.family {
                    Family::Q | Family::T => (r, c),
                    _ => (r.max(c), r.min(c)),
                };
                Some(TableEntry { row: r, col: c, ..*e })
            })
            .collect();
        Self::from_table(&CouplingTable {
            basis,
            rho: table.rho,
            energies: table.energies.iter().map(|e| old.iter().map(|&o| e[o]).collect()).collect(),
            diagnostics: table.diagnostics,
            entries,
        })
    }

    pub fn from_table(table: &CouplingTable) -> Result<Self> {
        let basis = &table.basis;
        let n = basis.len();
        let mut fulls: Vec<FullCouplings> = table
            .rho
            .iter()
            .map(|_| {
                let z = || DMatrix::<f64>::zeros(n, n);
                FullCouplings {
                    p: z(),
                    q: z(),
                    r: z(),
                    u: z(),
                    w: z(),
                    t: z(),
                }
            })
            .collect();
        for e in &table.entries {
            let k = table
                .rho
                .iter()
                .position(|&r| r == e.rho)
                .ok_or_else(|| Error::InvalidConfig(format!("entry at unknown rho {}", e.rho)))?;
            if e.row >= n || e.col >= n {
                return Err(Error::InvalidConfig(format!("entry index ({}, {}) out of range", e.row, e.col)));
            }
            let f = &mut fulls[k];
            let (r, c, v) = (e.row, e.col, e.value);
            match e.family {
                Family::Q => f.q[(r, c)] = v,
                Family::T => f.t[(r, c)] = v,
                Family::P => {
                    f.p[(r, c)] = v;
                    f.p[(c, r)] = v;
                }
                Family::R => {
                    f.r[(r, c)] = v;
                    f.r[(c, r)] = v;
                }
                Family::U => {
                    f.u[(r, c)] = v;
                    f.u[(c, r)] = v;
                }
                Family::W => {
                    f.w[(r, c)] = v;
                    f.w[(c, r)] = v;
                }
            }
        }
        Self::assemble(basis, &table.rho, fulls, &table.energies, &table.diagnostics)
    }

    /// Set from full matrices at each `rho` (energies and diagnostics left empty).
    pub fn from_matrices(basis: &BasisSpec, rho: &[f64], fulls: Vec<FullCouplings>) -> Result<Self> {
        if rho.len() != fulls.len() {
            return Err(Error::InvalidConfig(format!("{} radii for {} coupling points", rho.len(), fulls.len())));
        }
        Self::assemble(basis, rho, fulls, &[], &[])
    }

    fn assemble(
        basis: &BasisSpec,
        rho: &[f64],
        fulls: Vec<FullCouplings>,
        energies: &[Vec<f64>],
        diagnostics: &[PointDiagnostics],
    ) -> Result<Self> {
        let points = rho
            .iter()
            .zip(fulls)
            .enumerate()
            .map(|(k, (&rho, f))| {
                let blocks = basis
                    .m_values()
                    .into_iter()
                    .map(|m| {
                        let rg = basis.block_range(m);
                        let (o, l) = (rg.start, rg.len());
                        let cut = |x: &DMatrix<f64>| x.view((o, o), (l, l)).into_owned();
                        MBlock {
                            m,
                            p: cut(&f.p),
                            q: cut(&f.q),
                            r: cut(&f.r),
                            u: cut(&f.u),
                            w: cut(&f.w),
                        }
                    })
                    .collect();
                let t = basis
                    .m_values()
                    .into_iter()
                    .filter(|&m| m >= 1 && basis.j > 0 && basis.m_values().contains(&(m - 1)))
                    .map(|m| {
                        let up = basis.block_range(m);
                        let lo = basis.block_range(m - 1);
                        TBlock {
                            m,
                            matrix: f.t.view((up.start, lo.start), (up.len(), lo.len())).into_owned(),
                        }
                    })
                    .collect();
                CouplingsAtRho {
                    rho,
                    energies: energies.get(k).cloned().unwrap_or_default(),
                    blocks,
                    t,
                    diagnostics: diagnostics.get(k).copied().unwrap_or_default(),
                }
            })
            .collect();
        Ok(Self {
            basis: basis.clone(),
            points,
        })
    }
}
