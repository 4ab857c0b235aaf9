use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use hscs_cli::{run, Overrides, Verb};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VerbArg {
    Terms,
    Couplings,
    Scatter,
    Net,
    Verify,
}

/// Hyperspherical Coulomb spheroidal basis, couplings and scattering.
#[derive(Debug, Parser)]
#[command(name = "hscs", version)]
struct Args {
    verb: VerbArg,
    /// JSON run configuration; built-in defaults when absent.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, overriding the configuration.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Extra quadrature refinement levels.
    #[arg(long, value_name = "N", default_value_t = 0)]
    refine: u32,
    /// Worker threads; all cores when absent.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let verb = match args.verb {
        VerbArg::Terms => Verb::Terms,
        VerbArg::Couplings => Verb::Couplings,
        VerbArg::Scatter => Verb::Scatter,
        VerbArg::Net => Verb::Net,
        VerbArg::Verify => Verb::Verify,
    };
    let opts = Overrides {
        config: args.config,
        out: args.out,
        refine: args.refine,
        jobs: args.jobs,
    };
    if let Err(e) = run(verb, &opts) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
