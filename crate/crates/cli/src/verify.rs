//! The `verify` verb: invariant suite with measured values and tolerances.

use hscs::coupling::{CouplingSet, CouplingTable, Family};
use hscs::csf::{angular_eigenvalue, classify, solve_state, solve_state_with, ChannelLabel, StateIndex, TwoCentre};
use hscs::csf::label::scaled_threshold;
use hscs::radial::{build_channel_space, k_to_stilde, stilde_to_k, symmetry_defect, unitarity_defect};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::commands::{build_table, scatter_energies, Context, CouplingsFile, COUPLINGS_FILE};
use crate::error::{CliError, Result};
use crate::manifest::Recorder;

pub const REPORT_FILE: &str = "verify_report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub description: String,
    pub measured: f64,
    pub tolerance: f64,
    pub status: Status,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    /// Passes when `measured <= tolerance`.
    fn at_most(name: &str, description: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            description: description.into(),
            measured,
            tolerance,
            status: if measured <= tolerance { Status::Pass } else { Status::Fail },
            detail: String::new(),
        }
    }

    /// Passes when `measured >= tolerance`.
    fn at_least(name: &str, description: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            status: if measured >= tolerance { Status::Pass } else { Status::Fail },
            ..Self::at_most(name, description, measured, tolerance)
        }
    }

    fn failed(name: &str, description: &str, detail: String) -> Self {
        Self {
            name: name.into(),
            description: description.into(),
            measured: f64::NAN,
            tolerance: f64::NAN,
            status: Status::Fail,
            detail,
        }
    }

    fn skipped(name: &str, description: &str, detail: String) -> Self {
        Self {
            status: Status::Skipped,
            ..Self::failed(name, description, detail)
        }
    }

    fn with_detail(mut self, detail: String) -> Self {
        self.detail = detail;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub manifest_hash: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

pub fn legendre_limit() -> Check {
    let mut worst = 0.0f64;
    for m in 0..=10u32 {
        for n_eta in 0..=(10 - m) {
            let l = (m + n_eta) as f64;
            let lam = angular_eigenvalue(0.0, 0.0, m, n_eta).map(|s| s.lambda).unwrap_or(f64::INFINITY);
            worst = worst.max((lam - l * (l + 1.0)).abs());
        }
    }
    Check::at_most(
        "legendre_limit",
        "angular eigenvalues at p = b = 0 equal l(l+1) for l <= 10",
        worst,
        1e-10,
    )
}

pub fn one_centre(ctx: &Context) -> Result<Check> {
    let [m1, m2, m3] = ctx.config.system.masses;
    let z1 = match ctx.config.system.charges[0] {
        z if z > 0.0 => z,
        _ => 1.0,
    };
    let system = hscs::kinematics::build_system_relaxed(m1, m2, m3, z1, 0.0)?;
    let mut worst = 0.0f64;
    for &rho in &[2.0, 7.5, 30.0] {
        let z = TwoCentre::from_system(&system, rho).z1;
        for big_n in 1..=4u32 {
            for m in 0..big_n {
                for n_xi in 0..(big_n - m) {
                    let n_eta = big_n - 1 - m - n_xi;
                    let want = -z * z / (4.0 * (big_n * big_n) as f64);
                    let dev = match solve_state(&system, rho, m, n_xi, n_eta, None) {
                        Ok(s) => ((s.eps - want) / want).abs(),
                        Err(_) => f64::INFINITY,
                    };
                    worst = worst.max(dev);
                }
            }
        }
    }
    Ok(Check::at_most(
        "one_centre_closed_form",
        "with the second charge removed, energies equal -Z^2/(4N^2) for N <= 4",
        worst,
        1e-8,
    ))
}

/// Deviation of `eps / rho^2` from the atomic limit along a doubling ladder
/// for the two lowest states of the reference system `m = (1, 2, 1)`,
/// `Z = (1, 2)`.
pub fn hydrogenic_ladder() -> Result<Check> {
    let name = "hydrogenic_asymptote";
    let description = "eps/rho^2 approaches the atomic threshold monotonically along rho = 25 * 2^k";
    let system = hscs::kinematics::build_system(1.0, 2.0, 1.0, 1.0, 2.0)?;
    let opts = hscs::csf::SolverOptions::default();
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    for idx in [StateIndex::new(0, 0, 0), StateIndex::new(0, 0, 1)] {
        let mut states = Vec::new();
        let mut guess: Option<f64> = None;
        for k in 0..8 {
            let rho = 25.0 * 2f64.powi(k);
            match solve_state_with(&system, rho, idx, guess.map(|e| 4.0 * e), &opts) {
                Ok(s) => {
                    guess = Some(s.eps);
                    states.push(s);
                }
                Err(e) => return Ok(Check::failed(name, description, format!("{idx:?} at rho = {rho}: {e}"))),
            }
        }
        let label = match classify(&system, &states) {
            Ok(l) => l,
            Err(e) => return Ok(Check::failed(name, description, format!("{idx:?}: {e}"))),
        };
        let e = scaled_threshold(&system, label.alpha, label.n);
        let devs: Vec<f64> = states.iter().map(|s| ((s.eps / (s.rho * s.rho) - e) / e).abs()).collect();
        if !devs.windows(2).all(|w| w[1] < w[0]) {
            return Ok(Check::failed(name, description, format!("{idx:?}: not monotone {devs:?}")));
        }
        let last = *devs.last().expect("non-empty ladder");
        details.push(format!("{idx:?}: {last:.3e}"));
        worst = worst.max(last);
    }
    Ok(Check::at_most(name, description, worst, 1e-3).with_detail(details.join(", ")))
}

pub fn gram(table: &CouplingTable) -> Check {
    let worst = table.diagnostics.iter().map(|d| d.gram_deviation).fold(0.0, f64::max);
    Check::at_most(
        "gram_identity",
        "Gram matrix of the basis equals the identity at every radius",
        worst,
        1e-8,
    )
}

pub fn q_structure(set: &CouplingSet) -> Vec<Check> {
    let (mut exact, mut raw, mut bessel) = (0.0f64, 0.0f64, 0.0f64);
    for point in &set.points {
        let full = point.full(&set.basis);
        let n = full.q.nrows();
        for i in 0..n {
            exact = exact.max(full.q[(i, i)].abs());
            for j in 0..n {
                exact = exact.max((full.q[(i, j)] + full.q[(j, i)]).abs());
            }
            let qq: f64 = (0..n).map(|j| full.q[(i, j)].powi(2)).sum();
            bessel = bessel.max((qq - full.p[(i, i)]) / full.p[(i, i)].abs().max(1e-300));
        }
        raw = raw.max(point.diagnostics.q_asymmetry);
    }
    vec![
        Check::at_most("q_antisymmetry", "Q has a zero diagonal and Q + Q^T = 0 exactly", exact, 0.0),
        Check::at_most(
            "q_raw_asymmetry",
            "independently computed Q_ij and -Q_ji agree before antisymmetrization",
            raw,
            1e-6,
        ),
        Check::at_most(
            "p_bounds_q",
            "P_ii >= sum_j Q_ij^2 (relative excess shown)",
            bessel.max(0.0),
            1e-8,
        ),
    ]
}

fn nearest(rhos: &[f64], rho: f64) -> usize {
    (0..rhos.len())
        .min_by(|&a, &b| (rhos[a] / rho).ln().abs().total_cmp(&(rhos[b] / rho).ln().abs()))
        .expect("non-empty grid")
}

/// Off-diagonal couplings between states open at the highest configured
/// energy decay by 10x per factor 4 in `rho`; see [`decoupling_ratio`].
pub fn decoupling(ctx: &Context, set: &CouplingSet, labels: &[ChannelLabel]) -> Result<Check> {
    let name = "asymptotic_decoupling";
    let description = "off-diagonal Q, U, W between open-channel states fall by 10x from rho to 4 rho";
    let system = ctx.config.system()?;
    let e_max = ctx.config.scatter.energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let open: Vec<usize> = match build_channel_space(&system, e_max, ctx.config.basis.j, labels) {
        Ok(space) => space.open().iter().map(|c| c.basis_index).collect(),
        Err(_) => Vec::new(),
    };
    if open.len() < 2 {
        return Ok(Check::skipped(name, description, format!("{} open state(s) at E = {e_max}", open.len())));
    }
    let (worst, detail) = decoupling_ratio(set, &open);
    Ok(Check::at_least(name, description, worst, 10.0).with_detail(detail))
}

/// Smallest ratio of the largest off-diagonal `Q`, `U`, `W` among `open`
/// between `rho` and `4 rho`, over grid radii past the peak of the
/// off-diagonal `Q`. Pairs whose `4 rho` value is below [`DECOUPLED`] are
/// left out.
pub fn decoupling_ratio(set: &CouplingSet, open: &[usize]) -> (f64, String) {
    let off = |m: &DMatrix<f64>| {
        let mut v = 0.0f64;
        for &i in open {
            for &j in open {
                if i != j {
                    v = v.max(m[(i, j)].abs());
                }
            }
        }
        v
    };
    let rhos = set.rho();
    let per_rho: Vec<[f64; 3]> = set
        .points
        .iter()
        .map(|p| {
            let f = p.full(&set.basis);
            [off(&f.q), off(&f.u), off(&f.w)]
        })
        .collect();
    let peak = (0..rhos.len()).max_by(|&a, &b| per_rho[a][0].total_cmp(&per_rho[b][0])).expect("non-empty grid");
    let (mut worst, mut at, mut pairs) = (f64::INFINITY, None, 0usize);
    for k in peak..rhos.len() {
        if 4.0 * rhos[k] > rhos[rhos.len() - 1] {
            break;
        }
        let far = nearest(&rhos, 4.0 * rhos[k]);
        for fam in 0..3 {
            let (va, vb) = (per_rho[k][fam], per_rho[far][fam]);
            if vb <= DECOUPLED {
                continue;
            }
            pairs += 1;
            if va / vb < worst {
                worst = va / vb;
                at = Some((["Q", "U", "W"][fam], rhos[k], rhos[far]));
            }
        }
    }
    let detail = match at {
        Some((fam, a, b)) => format!("{pairs} pairs past rho = {:.3}; weakest {fam} between {a:.3} and {b:.3}", rhos[peak]),
        None => format!("all couplings below {DECOUPLED:e} past rho = {:.3}", rhos[peak]),
    };
    (worst, detail)
}

/// Couplings below this are treated as fully decoupled.
pub const DECOUPLED: f64 = 1e-12;

/// Largest entry difference relative to the magnitude of its family.
pub fn table_difference(a: &CouplingTable, b: &CouplingTable) -> f64 {
    if a.rho != b.rho || a.basis != b.basis || a.entries.len() != b.entries.len() {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    for fam in Family::ALL {
        let scale = b.entries.iter().filter(|e| e.family == fam).map(|e| e.value.abs()).fold(0.0, f64::max);
        for (x, y) in a.entries.iter().zip(&b.entries).filter(|(_, y)| y.family == fam) {
            if (x.rho, x.row, x.col, x.family) != (y.rho, y.row, y.col, y.family) {
                return f64::INFINITY;
            }
            let d = (x.value - y.value).abs();
            let floor = 1e-6 * scale;
            worst = worst.max(d / y.value.abs().max(floor).max(1e-300));
        }
    }
    worst
}

const TABLE_TOL: f64 = 1e-6;

pub fn stored_table(rec: &Recorder, fresh: &CouplingTable) -> Check {
    let name = "stored_table_matches";
    let description = "couplings.json in the output directory agrees with a fresh computation";
    let path = rec.path(COUPLINGS_FILE);
    if !path.exists() {
        return Check::skipped(name, description, format!("{} not present", path.display()));
    }
    match CouplingsFile::load(&path) {
        Ok(f) if f.manifest_hash != rec.hash => {
            Check::skipped(name, description, "stored table belongs to a different configuration".into())
        }
        Ok(f) => Check::at_most(name, description, table_difference(&f.table, fresh), TABLE_TOL),
        Err(e) => Check::failed(name, description, e.to_string()),
    }
}

/// Perturbs the largest entry of each family by 1% and confirms that the
/// table comparison flags it.
pub fn mutation_self_test(fresh: &CouplingTable) -> Check {
    let mut smallest = f64::INFINITY;
    let mut tried = Vec::new();
    for fam in Family::ALL {
        let Some(k) = (0..fresh.entries.len())
            .filter(|&k| fresh.entries[k].family == fam)
            .max_by(|&a, &b| fresh.entries[a].value.abs().total_cmp(&fresh.entries[b].value.abs()))
        else {
            continue;
        };
        if fresh.entries[k].value == 0.0 {
            continue;
        }
        let mut mutated = fresh.clone();
        mutated.entries[k].value *= 1.01;
        smallest = smallest.min(table_difference(&mutated, fresh));
        tried.push(format!("{fam:?}"));
    }
    Check::at_least(
        "mutation_detected",
        "a 1% change of any coupling family is flagged by the table comparison",
        smallest,
        100.0 * TABLE_TOL,
    )
    .with_detail(format!("families {}", tried.join(", ")))
}

pub fn scattering(ctx: &Context, set: &CouplingSet, labels: &[ChannelLabel], hash: &str) -> Result<Vec<Check>> {
    let j = ctx.config.basis.j;
    let budget = ctx.config.scatter.defect_budget;
    let records = scatter_energies(ctx, set, labels, hash)?;
    let (mut sym, mut uni, mut solved) = (0.0f64, 0.0f64, 0usize);
    let mut problems = Vec::new();
    for r in &records {
        match &r.solution {
            Some(s) => {
                solved += 1;
                sym = sym.max(s.diagnostics.symmetry_defect);
                uni = uni.max(s.diagnostics.unitarity_defect);
            }
            None if r.status == "no_open_channel" => {}
            None => problems.push(format!("E = {}: {}", r.energy, r.message.as_deref().unwrap_or("failed"))),
        }
    }
    let mut checks = Vec::new();
    if !problems.is_empty() {
        checks.push(Check::failed("scattering_runs", "every configured energy is solved", problems.join("; ")));
    }
    if solved == 0 {
        checks.push(Check::skipped("k_symmetry", "K is symmetric", "no energy with an open channel".into()));
    } else {
        checks.push(Check::at_most("k_symmetry", "K is symmetric at every configured energy", sym, budget));
        checks.push(Check::at_most("s_unitarity", "S~ is unitary at every configured energy", uni, budget));
    }

    let mut exact = 0.0f64;
    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
    for n in 1..=3 {
        let zero = DMatrix::<f64>::zeros(n, n);
        match k_to_stilde(&zero, j) {
            Ok(s) => {
                for a in 0..n {
                    for b in 0..n {
                        let want = if a == b { sign } else { 0.0 };
                        exact = exact.max((s[(a, b)].re - want).abs()).max(s[(a, b)].im.abs());
                    }
                }
            }
            Err(_) => exact = f64::INFINITY,
        }
    }
    checks.push(Check::at_most("zero_k_gives_parity", "K = 0 maps to S~ = (-1)^J I", exact, 1e-15));

    let k = DMatrix::from_row_slice(2, 2, &[0.3, -0.7, -0.7, 1.9]);
    let round = k_to_stilde(&k, j)
        .and_then(|s| {
            let back = stilde_to_k(&s, j)?;
            Ok((&back - &k).abs().max().max(unitarity_defect(&s)).max(symmetry_defect(&back)))
        })
        .unwrap_or(f64::INFINITY);
    checks.push(Check::at_most(
        "cayley_round_trip",
        "K -> S~ -> K reproduces a symmetric K and S~ is unitary",
        round,
        1e-12,
    ));
    Ok(checks)
}

pub fn verify(ctx: &Context, rec: &mut Recorder) -> Result<VerifyReport> {
    let mut checks = vec![legendre_limit(), one_centre(ctx)?, hydrogenic_ladder()?];
    let (set, labels) = build_table(ctx, rec, "couplings", 0)?;
    let table = set.to_table();
    checks.push(gram(&table));
    checks.extend(q_structure(&set));
    checks.push(stored_table(rec, &table));
    checks.push(mutation_self_test(&table));
    match labels {
        Some(labels) => {
            checks.push(decoupling(ctx, &set, &labels)?);
            let hash = rec.hash.clone();
            let scatter = rec.stage("scatter", || {
                let c = scattering(ctx, &set, &labels, &hash)?;
                Ok((c, serde_json::Value::Null))
            })?;
            checks.extend(scatter);
        }
        None => checks.push(Check::failed(
            "labelling",
            "every basis state has a channel label",
            format!("labelling at rho = {} failed", ctx.config.label_rho()),
        )),
    }
    for c in &checks {
        let mark = match c.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Skipped => "skip",
        };
        say!("{mark:4} {:24} measured {:.3e} tolerance {:.1e} {}", c.name, c.measured, c.tolerance, c.detail);
    }
    let report = VerifyReport {
        manifest_hash: rec.hash.clone(),
        passed: checks.iter().all(|c| c.status != Status::Fail),
        checks,
    };
    rec.write_json(REPORT_FILE, &report)?;
    Ok(report)
}

/// Maps a failed report to the verification error.
pub fn gate(report: &VerifyReport) -> Result<()> {
    let failed: Vec<&str> = report.checks.iter().filter(|c| c.status == Status::Fail).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}
