//! `irid` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid model, 3 runtime failure
//! (unreadable file, budget exceeded, no positive state), 4 when `compare`
//! finds differing policies.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use irid::io::{format_policy_table, parse_model, serialize_solution};
use irid::{
    exhaustive_policy_search, solve, Backend, EnumerationBudget, IridError, IridModel, Objective,
    SamplerConfig, Solution, SolveOptions,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_DISAGREE: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "irid",
    version,
    about = "Solve information/relevance influence diagrams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a model file and report every problem found.
    Validate { model: PathBuf },
    /// Compute optimal decision functions.
    Solve {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = BackendArg::Exact)]
        backend: BackendArg,
        #[command(flatten)]
        sampler: SamplerArgs,
        #[arg(long, value_enum)]
        objective: Option<ObjectiveArg>,
        /// Where to write the solution JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve with both backends and compare cell by cell.
    Compare {
        model: PathBuf,
        #[command(flatten)]
        sampler: SamplerArgs,
        #[arg(long, value_enum)]
        objective: Option<ObjectiveArg>,
    },
    /// Exhaustive search over all admissible policy combinations.
    Oracle {
        model: PathBuf,
        #[arg(long, default_value_t = 10_000_000)]
        max_joint_configs: u128,
        #[arg(long, default_value_t = 1_000_000)]
        max_policy_combinations: u128,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BackendArg {
    Exact,
    Gibbs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ObjectiveArg {
    #[value(alias = "maximize")]
    Max,
    #[value(alias = "minimize")]
    Min,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Max => Objective::Maximize,
            ObjectiveArg::Min => Objective::Minimize,
        }
    }
}

#[derive(Args, Debug, Clone, Copy)]
struct SamplerArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1_000)]
    burn_in: usize,
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    thinning: usize,
    /// Common random numbers across the alternatives of a cell.
    #[arg(long)]
    crn: bool,
}

impl SamplerArgs {
    fn config(&self) -> SamplerConfig {
        SamplerConfig {
            seed: self.seed,
            burn_in: self.burn_in,
            samples: self.samples,
            thinning: self.thinning,
        }
    }

    fn options(&self, objective: Option<ObjectiveArg>) -> SolveOptions {
        let mut o = SolveOptions::gibbs(self.config());
        o.crn = self.crn;
        o.objective_override = objective.map(Into::into);
        o
    }
}

enum Failure {
    Usage(String),
    Model(IridError),
    Runtime(String),
}

impl From<IridError> for Failure {
    fn from(e: IridError) -> Self {
        if matches!(e.root(), IridError::InvalidSamplerConfig(_)) {
            Failure::Usage(e.to_string())
        } else if e.is_validation() {
            Failure::Model(e)
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn load(path: &Path) -> Result<IridModel, Failure> {
    let bytes = fs::read(path)
        .map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_model(&bytes)?)
}

/// Runs the CLI with `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Model(e)) => {
            let _ = writeln!(err, "invalid model: {e}");
            EXIT_INVALID
        }
        Err(Failure::Runtime(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_RUNTIME
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    let io_err = |e: std::io::Error| Failure::Runtime(e.to_string());
    match command {
        Command::Validate { model } => {
            load(&model)?;
            writeln!(out, "OK").map_err(io_err)?;
            Ok(EXIT_OK)
        }
        Command::Solve {
            model,
            backend,
            sampler,
            objective,
            out: path,
        } => {
            let m = load(&model)?;
            let options = match backend {
                BackendArg::Exact => {
                    let mut o = SolveOptions::exact();
                    o.objective_override = objective.map(Into::into);
                    o
                }
                BackendArg::Gibbs => sampler.options(objective),
            };
            let solution = solve(&m, &options)?;
            fs::write(&path, serialize_solution(&m, &solution))
                .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?;
            write!(out, "{}", format_policy_table(&m, &solution)).map_err(io_err)?;
            Ok(EXIT_OK)
        }
        Command::Compare {
            model,
            sampler,
            objective,
        } => {
            let m = load(&model)?;
            let (exact, gibbs) = compare_backends(&m, &sampler.options(objective))?;
            write!(out, "{}", comparison_report(&m, &exact, &gibbs)).map_err(io_err)?;
            Ok(if exact.same_policies(&gibbs) {
                EXIT_OK
            } else {
                EXIT_DISAGREE
            })
        }
        Command::Oracle {
            model,
            max_joint_configs,
            max_policy_combinations,
        } => {
            let m = load(&model)?;
            let budget = EnumerationBudget {
                max_joint_configs,
                max_policy_combinations,
            };
            let (policies, value) = exhaustive_policy_search(&m, &budget)?;
            let solution = Solution {
                policies,
                expected_value: value,
                expected_value_std_error: None,
                diagnostics: Vec::new(),
                backend: Backend::Exact,
                sampler: None,
                objective: m.objective(),
                crn: false,
            };
            write!(out, "{}", format_policy_table(&m, &solution)).map_err(io_err)?;
            Ok(EXIT_OK)
        }
    }
}

/// Exact and Gibbs solutions of the same model. `gibbs` supplies the sampler
/// settings and objective.
pub fn compare_backends(
    model: &IridModel,
    gibbs: &SolveOptions,
) -> Result<(Solution, Solution), IridError> {
    let mut exact = SolveOptions::exact();
    exact.objective_override = gibbs.objective_override;
    exact.budget = gibbs.budget;
    Ok((solve(model, &exact)?, solve(model, gibbs)?))
}

/// Per-cell exact values against estimates, then the policy verdict.
pub fn comparison_report(model: &IridModel, exact: &Solution, gibbs: &Solution) -> String {
    let mut s = String::new();
    for (e, g) in exact.diagnostics.iter().zip(&gibbs.diagnostics) {
        let d = e.decision;
        s.push_str(&format!(
            "stage {} {} [{}]{}\n",
            e.stage,
            model.name(d),
            model.describe(&e.config),
            if e.unreachable { " unreachable" } else { "" }
        ));
        for a in &e.evaluated {
            let est = g.value_of(a.alternative);
            s.push_str(&format!(
                "  {:<8} exact {:>16.2}  estimate {:>16}  std error {:>12}\n",
                model.label(d, a.alternative),
                a.value,
                est.map_or("-".into(), |x| format!("{:.2}", x.value)),
                est.and_then(|x| x.std_error)
                    .map_or("-".into(), |x| format!("{x:.2}")),
            ));
        }
        let mark = if e.chosen == g.chosen {
            ""
        } else {
            "  MISMATCH"
        };
        s.push_str(&format!(
            "  chosen   exact {}  gibbs {}{}\n",
            model.label(d, e.chosen),
            model.label(d, g.chosen),
            mark
        ));
    }
    s.push_str(&format!(
        "expected value: exact {:.2}  gibbs {:.2}",
        exact.expected_value, gibbs.expected_value
    ));
    if let Some(se) = gibbs.expected_value_std_error {
        s.push_str(&format!(" (std error {se:.2})"));
    }
    s.push('\n');
    if exact.same_policies(gibbs) {
        s.push_str("policies agree\n");
    } else {
        let differing: Vec<&str> = exact
            .policies
            .iter()
            .zip(&gibbs.policies)
            .filter(|(a, b)| a != b)
            .map(|(a, _)| model.name(a.decision()))
            .collect();
        s.push_str(&format!("policies differ: {}\n", differing.join(", ")));
    }
    s
}
