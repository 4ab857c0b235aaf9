//! Driver for the hscs pipeline: configuration, the five verbs and the
//! run manifest.

/// `println!` that ignores a closed stdout.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod verify;

use std::path::PathBuf;

use hscs::parallel::Parallelism;

pub use commands::Context;
pub use config::RunConfig;
pub use error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    Terms,
    Couplings,
    Scatter,
    Net,
    Verify,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Self::Terms => "terms",
            Self::Couplings => "couplings",
            Self::Scatter => "scatter",
            Self::Net => "net",
            Self::Verify => "verify",
        }
    }
}

/// Command-line overrides applied on top of the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub refine: u32,
    pub jobs: Option<usize>,
}

pub fn run(verb: Verb, opts: &Overrides) -> Result<()> {
    let mut config = match &opts.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &opts.out {
        config.output.dir = out.clone();
    }
    config.grid.refine += opts.refine;
    if opts.jobs == Some(0) {
        return Err(CliError::Validation("--jobs must be at least 1".into()));
    }
    let ctx = Context {
        par: Parallelism::from_jobs(opts.jobs),
        extra_refine: opts.refine,
        config,
    };
    let mut rec = manifest::Recorder::new(&ctx.config.output.dir, verb.name(), &ctx.config)?;
    let outcome = match verb {
        Verb::Terms => commands::terms(&ctx, &mut rec),
        Verb::Couplings => commands::couplings(&ctx, &mut rec).map(|_| ()),
        Verb::Scatter => commands::scatter(&ctx, &mut rec).map(|_| ()),
        Verb::Net => commands::net(&ctx, &mut rec),
        Verb::Verify => verify::verify(&ctx, &mut rec).and_then(|r| verify::gate(&r)),
    };
    rec.finish()?;
    outcome
}
