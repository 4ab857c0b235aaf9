//! The `terms`, `couplings`, `scatter` and `net` verbs.

use std::fmt::Write as _;
use std::path::Path;

use hscs::basis::three_pole_net;
use hscs::coupling::{compute_coupling_set, CouplingSet, CouplingTable, Family};
use hscs::csf::{classify, solve_state_with, ChannelLabel, CsfState, StateIndex};
use hscs::parallel::{self, Parallelism};
use hscs::radial::{label_basis, solve_scattering, ScatteringSolution};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::manifest::Recorder;

pub const COUPLINGS_FILE: &str = "couplings.json";

/// Shared inputs of every verb.
pub struct Context {
    pub config: RunConfig,
    pub par: Parallelism,
    /// Refinement levels requested on the command line, already folded
    /// into `config.grid.refine`.
    pub extra_refine: u32,
}

/// `couplings.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingsFile {
    pub manifest_hash: String,
    /// Channel label of every basis state; absent if labelling failed.
    pub labels: Option<Vec<ChannelLabel>>,
    pub table: CouplingTable,
}

impl CouplingsFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }
}

pub fn label_text(label: Option<&ChannelLabel>) -> String {
    match label {
        Some(l) => format!("a{}n{}s{}m{}", l.alpha, l.n, l.s, l.m),
        None => "unlabelled".into(),
    }
}

fn curve(ctx: &Context, idx: StateIndex, rhos: &[f64]) -> Result<Vec<CsfState>> {
    let system = ctx.config.system_relaxed()?;
    let opts = ctx.config.coupling_options(0).solver;
    let mut out: Vec<CsfState> = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let guess = out.last().map(|s| s.eps * (rho / s.rho).powi(2));
        let state = solve_state_with(&system, rho, idx, guess, &opts)
            .map_err(|e| CliError::Convergence(format!("state {idx:?} at rho = {rho}: {e}")))?;
        out.push(state);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Crossing {
    pub m: u32,
    pub states: [StateIndex; 2],
    pub rho_before: f64,
    pub rho_after: f64,
}

/// Energy curves of all basis states on the grid, as CSV.
pub fn terms(ctx: &Context, rec: &mut Recorder) -> Result<()> {
    let basis = ctx.config.basis_spec()?;
    let rhos = ctx.config.rho_grid();
    let system = ctx.config.system_relaxed()?;
    let (curves, crossings) = rec.stage("terms", || {
        let curves = parallel::map(&basis.states, ctx.par, |&idx| curve(ctx, idx, &rhos))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let mut crossings = Vec::new();
        for a in 0..curves.len() {
            for b in a + 1..curves.len() {
                let (ia, ib) = (basis.states[a], basis.states[b]);
                if ia.m != ib.m {
                    continue;
                }
                for k in 1..rhos.len() {
                    let before = curves[a][k - 1].eps - curves[b][k - 1].eps;
                    let after = curves[a][k].eps - curves[b][k].eps;
                    if before.signum() != after.signum() {
                        log::info!("crossing of {ia:?} and {ib:?} between rho = {} and {}", rhos[k - 1], rhos[k]);
                        crossings.push(Crossing {
                            m: ia.m,
                            states: [ia, ib],
                            rho_before: rhos[k - 1],
                            rho_after: rhos[k],
                        });
                    }
                }
            }
        }
        let diag = json!({ "states": basis.len(), "radii": rhos.len(), "crossings": crossings });
        Ok(((curves, crossings), diag))
    })?;
    let labels: Vec<Option<ChannelLabel>> = curves
        .iter()
        .map(|c| {
            let last = c.iter().min_by(|a, b| (a.rho - ctx.config.label_rho()).abs().total_cmp(&(b.rho - ctx.config.label_rho()).abs()));
            last.and_then(|s| classify(&system, std::slice::from_ref(s)).ok())
        })
        .collect();

    let mut csv = format!("# manifest {}\nm,n_xi,n_eta,rho,eps,lambda,eps_over_rho2,label\n", rec.hash);
    for (c, label) in curves.iter().zip(&labels) {
        let text = label_text(label.as_ref());
        for s in c {
            let i = s.index;
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{}",
                i.m,
                i.n_xi,
                i.n_eta,
                s.rho,
                s.eps,
                s.lambda,
                s.eps / (s.rho * s.rho),
                text
            );
        }
    }
    rec.write_text("terms.csv", &csv)?;
    if !crossings.is_empty() {
        rec.write_json("crossings.json", &json!({ "manifest_hash": rec.hash, "crossings": crossings }))?;
    }
    Ok(())
}

fn table_diagnostics(set: &CouplingSet) -> serde_json::Value {
    let d = set.points.iter().map(|p| p.diagnostics);
    let (mut gram, mut asym, mut levels) = (0.0f64, 0.0f64, Vec::new());
    for x in d {
        gram = gram.max(x.gram_deviation);
        asym = asym.max(x.q_asymmetry);
        levels.push(x.grid_level);
    }
    json!({
        "radii": set.points.len(),
        "max_gram_deviation": gram,
        "max_q_asymmetry": asym,
        "max_grid_level": levels.iter().max(),
    })
}

/// Largest change of each coupling family between two tables on the same radii.
pub fn table_change(a: &CouplingTable, b: &CouplingTable) -> serde_json::Value {
    let mut out = serde_json::Map::new();
    for fam in Family::ALL {
        let (mut abs, mut rel) = (0.0f64, 0.0f64);
        for (x, y) in a.entries.iter().zip(&b.entries).filter(|(x, _)| x.family == fam) {
            let d = (x.value - y.value).abs();
            abs = abs.max(d);
            if x.value.abs() > 1e-8 {
                rel = rel.max(d / x.value.abs());
            }
        }
        out.insert(format!("{fam:?}"), json!({ "max_abs_change": abs, "max_rel_change": rel }));
    }
    serde_json::Value::Object(out)
}

/// Computes the coupling table of the configuration.
pub fn build_table(ctx: &Context, rec: &mut Recorder, stage: &str, extra: i64) -> Result<(CouplingSet, Option<Vec<ChannelLabel>>)> {
    let system = ctx.config.system()?;
    let basis = ctx.config.basis_spec()?;
    let rhos = ctx.config.rho_grid();
    let mut opts = ctx.config.coupling_options(0);
    opts.refine = (opts.refine as i64 + extra).max(0) as u32;
    let set = rec.stage(stage, || {
        let set = compute_coupling_set(&system, &basis, &rhos, &opts, ctx.par)?;
        let diag = table_diagnostics(&set);
        Ok((set, diag))
    })?;
    let labels = match label_basis(&system, &basis, ctx.config.label_rho(), &opts) {
        Ok(l) => Some(l),
        Err(e) => {
            log::warn!("labelling at rho = {} failed: {e}", ctx.config.label_rho());
            None
        }
    };
    Ok((set, labels))
}

pub fn couplings(ctx: &Context, rec: &mut Recorder) -> Result<CouplingsFile> {
    let (set, labels) = build_table(ctx, rec, "couplings", 0)?;
    let table = set.to_table();
    if ctx.extra_refine > 0 {
        let (base, _) = build_table(ctx, rec, "couplings_unrefined", -(ctx.extra_refine as i64))?;
        let change = table_change(&base.to_table(), &table);
        log::info!("refinement by {} levels: {change}", ctx.extra_refine);
        rec.write_json(
            "refinement.json",
            &json!({ "manifest_hash": rec.hash, "levels": ctx.extra_refine, "change": change }),
        )?;
    }
    let file = CouplingsFile {
        manifest_hash: rec.hash.clone(),
        labels,
        table,
    };
    rec.write_json(COUPLINGS_FILE, &file)?;
    Ok(file)
}

/// Loads `couplings.json` from the output directory if it was produced
/// from the same configuration, otherwise computes it.
pub fn table_for(ctx: &Context, rec: &mut Recorder) -> Result<(CouplingSet, Vec<ChannelLabel>)> {
    let path = rec.path(COUPLINGS_FILE);
    let file = match CouplingsFile::load(&path) {
        Ok(f) if f.manifest_hash == rec.hash => f,
        _ => couplings(ctx, rec)?,
    };
    let labels = file
        .labels
        .ok_or_else(|| CliError::Convergence(format!("basis states could not be labelled at rho = {}", ctx.config.label_rho())))?;
    Ok((CouplingSet::from_table(&file.table)?, labels))
}

/// Outcome of one energy of a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub manifest_hash: String,
    #[serde(rename = "E")]
    pub energy: f64,
    /// `"ok"`, `"no_open_channel"` or `"error"`.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<ScatteringSolution>,
}

pub fn scatter_energies(ctx: &Context, set: &CouplingSet, labels: &[ChannelLabel], hash: &str) -> Result<Vec<EnergyRecord>> {
    let system = ctx.config.system()?;
    let opts = ctx.config.scattering_options();
    Ok(parallel::map(&ctx.config.scatter.energies, ctx.par, |&e| {
        let (status, message, solution) = match solve_scattering(&system, set, labels, e, &opts) {
            Ok(s) => ("ok", None, Some(s)),
            Err(err @ hscs::Error::NoOpenChannel(_)) => ("no_open_channel", Some(err.to_string()), None),
            Err(err) => ("error", Some(err.to_string()), None),
        };
        EnergyRecord {
            manifest_hash: hash.to_string(),
            energy: e,
            status: status.into(),
            message,
            solution,
        }
    }))
}

pub fn scatter(ctx: &Context, rec: &mut Recorder) -> Result<Vec<EnergyRecord>> {
    let (set, labels) = table_for(ctx, rec)?;
    let hash = rec.hash.clone();
    let budget = ctx.config.scatter.defect_budget;
    let records = rec.stage("scatter", || {
        let records = scatter_energies(ctx, &set, &labels, &hash)?;
        let summary: Vec<_> = records
            .iter()
            .map(|r| match &r.solution {
                Some(s) => json!({
                    "E": r.energy,
                    "status": r.status,
                    "n_open": s.n_open,
                    "symmetry_defect": s.diagnostics.symmetry_defect,
                    "unitarity_defect": s.diagnostics.unitarity_defect,
                    "rho_max_sensitivity": s.diagnostics.rho_max_sensitivity,
                    "closed_log_amplitude": s.diagnostics.closed_log_amplitude,
                }),
                None => json!({ "E": r.energy, "status": r.status, "message": r.message }),
            })
            .collect();
        Ok((records, json!(summary)))
    })?;
    let mut failures = Vec::new();
    for (k, r) in records.iter().enumerate() {
        rec.write_json(&format!("scatter_{k}.json"), r)?;
        match (&r.solution, r.status.as_str()) {
            (Some(s), _) => {
                let d = &s.diagnostics;
                say!(
                    "E = {}: {} open, symmetry defect {:.2e}, unitarity defect {:.2e}",
                    r.energy, s.n_open, d.symmetry_defect, d.unitarity_defect
                );
                if d.symmetry_defect > budget || d.unitarity_defect > budget {
                    failures.push(format!("E = {}: defects above {budget:e}", r.energy));
                }
            }
            (None, "no_open_channel") => say!("E = {}: no open channel", r.energy),
            (None, _) => {
                say!("E = {}: {}", r.energy, r.message.as_deref().unwrap_or("failed"));
                failures.push(format!("E = {}: {}", r.energy, r.message.as_deref().unwrap_or("failed")));
            }
        }
    }
    if !failures.is_empty() {
        return Err(CliError::Convergence(failures.join("; ")));
    }
    Ok(records)
}

pub fn net(ctx: &Context, rec: &mut Recorder) -> Result<()> {
    let system = ctx.config.system_relaxed()?;
    let n = &ctx.config.net;
    let net = rec.stage("net", || {
        let net = three_pole_net(&system, n.rho0, n.n_xi_lines, n.n_eta_lines)?;
        let diag = json!({ "curves": net.curves.len(), "poles": net.poles.len() });
        Ok((net, diag))
    })?;
    rec.write_json("net.json", &json!({ "manifest_hash": rec.hash, "net": net }))
}
