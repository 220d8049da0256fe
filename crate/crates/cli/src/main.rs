use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};
use tdma_apx::commands::{self, Mode};
use tdma_apx::verify::{Preset, VerifyParams};

#[derive(Parser)]
#[command(name = "tdma-apx", version, about = "K-SAT to TDMA flow-admission reduction toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a DIMACS CNF file into an instance.
    Compile {
        #[arg(long)]
        cnf: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Check an assignment or an explicit route against an instance.
    #[command(group(ArgGroup::new("what").required(true).args(["assignment", "path"])))]
    Check {
        #[arg(long)]
        instance: PathBuf,
        /// Signed literals, e.g. "1,2,3,-4,-5,-6".
        #[arg(long, allow_hyphen_values = true)]
        assignment: Option<String>,
        /// Node ids or raw indices, e.g. "E1,P1.1,..." or "n_1^1 n_5^1 ...".
        #[arg(long)]
        path: Option<String>,
    },
    /// Maximize accepted flows.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        /// Search-tree node budget for the exact solver.
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        json: bool,
    },
    /// Run the gadget audit on an instance.
    Audit {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Compare both oracles on seeded random formulas.
    Verify {
        #[arg(long)]
        vars: u32,
        #[arg(long)]
        clauses: usize,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "standard")]
        preset: Preset,
        /// Where failing trials are written.
        #[arg(long, default_value = "verify-witnesses")]
        witness_dir: PathBuf,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        json: bool,
    },
    /// Print the inapproximability constant for MAX-k-SAT.
    Bound {
        #[arg(long)]
        k: u32,
    },
}

fn run(cli: Cli) -> anyhow::Result<commands::Outcome> {
    match cli.command {
        Command::Compile { cnf, out, dot } => commands::compile_cmd(&cnf, &out, dot.as_deref()),
        Command::Check { instance, assignment, path } => {
            let inst = commands::load_instance(&instance)?;
            match (assignment, path) {
                (Some(a), _) => commands::check_assignment_cmd(&inst, &a),
                (None, Some(p)) => commands::check_path_cmd(&inst, &p),
                (None, None) => unreachable!("clap requires one of them"),
            }
        }
        Command::Solve { instance, mode, budget, json } => {
            commands::solve_cmd(&commands::load_instance(&instance)?, mode, budget, json)
        }
        Command::Audit { instance } => commands::audit_cmd(&commands::load_instance(&instance)?),
        Command::Verify { vars, clauses, k, trials, seed, preset, witness_dir, budget, json } => {
            let mut params = VerifyParams::new(vars, clauses, k, trials, seed);
            params.preset = preset;
            if let Some(b) = budget {
                params.solve.node_budget = b;
            }
            commands::verify_cmd(&params, &witness_dir, json)
        }
        Command::Bound { k } => commands::bound_cmd(k),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
