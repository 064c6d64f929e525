//! Command-line front end. [`run`] does all the work and returns what would be
//! printed, so it can be driven from tests without a subprocess.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::dsl;
use crate::lct::{self, CandidateModel, LctInstance};
use crate::scalar::{Backend, Rational, Scalar, DEFAULT_TOLERANCE};
use crate::verify::{self, Faults, RunConfig, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_DISAGREEMENT: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;
pub const EXIT_NO_VIOLATION: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "bctk", version, about = "Bilocal classical theory toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a circuit file in the theory and through the ontological model.
    Eval {
        file: PathBuf,
        /// Name to evaluate; defaults to every `eval` directive in the file.
        #[arg(long)]
        name: Option<String>,
    },
    /// Run consistency suites and print a JSON report.
    Verify(VerifyArgs),
    /// Print the classical image of a declared gate, state or effect.
    Embed {
        file: PathBuf,
        #[arg(long)]
        gate: String,
    },
    /// Latent classical theories: the annihilating effect and the refuter.
    Lct {
        #[command(subcommand)]
        command: LctCommand,
    },
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: Suite,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 4)]
    max_dim: usize,
    #[arg(long, default_value = "rational")]
    backend: Backend,
    /// Absolute entrywise tolerance; ignored by the rational backend.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tol: f64,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Test fixture: deliberately break a component.
    #[arg(long, hide = true, value_parser = ["corrupt-swap"])]
    inject_fault: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct InstanceArgs {
    #[arg(long, default_value_t = 2)]
    d1: usize,
    #[arg(long, default_value_t = 2)]
    d2: usize,
    #[arg(long, default_value_t = 2)]
    dl: usize,
    /// Latent state as comma-separated fractions, e.g. `1,0`.
    #[arg(long)]
    kappa: Option<String>,
}

#[derive(Subcommand, Debug)]
enum LctCommand {
    /// Show the annihilation table and the pairing value.
    Demo(InstanceArgs),
    /// Refute a candidate ontological model.
    Refute {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Candidate model as JSON.
        #[arg(long, conflicts_with_all = ["random", "candidate"])]
        model: Option<PathBuf>,
        /// Refute this many seeded random candidates.
        #[arg(long, conflicts_with = "candidate")]
        random: Option<usize>,
        /// A built-in candidate; only `builtin:bct-style` exists.
        #[arg(long)]
        candidate: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn json(code: i32, value: &Value) -> Self {
        let mut stdout = serde_json::to_string_pretty(value).expect("json serialises");
        stdout.push('\n');
        Self { code, stdout, stderr: String::new() }
    }

    fn input_error(message: impl std::fmt::Display) -> Self {
        Self { code: EXIT_INPUT, stdout: String::new(), stderr: format!("error: {message}\n") }
    }
}

/// Parses `args` (including the program name) and executes the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    Outcome { code: EXIT_OK, stdout: text, stderr: String::new() }
                }
                _ => Outcome { code: EXIT_INPUT, stdout: String::new(), stderr: text },
            };
        }
    };
    match cli.command {
        Command::Eval { file, name } => cmd_eval(&file, name.as_deref()),
        Command::Verify(args) => cmd_verify(args),
        Command::Embed { file, gate } => cmd_embed(&file, &gate),
        Command::Lct { command: LctCommand::Demo(inst) } => cmd_lct_demo(&inst),
        Command::Lct { command: LctCommand::Refute { instance, model, random, candidate, seed } } => {
            cmd_lct_refute(&instance, model.as_deref(), random, candidate.as_deref(), seed)
        }
    }
}

fn load(file: &Path) -> Result<dsl::Program, Outcome> {
    let text = fs::read_to_string(file).map_err(|e| Outcome::input_error(format!("{}: {e}", file.display())))?;
    dsl::compile(&text).map_err(|d| Outcome::input_error(format!("{}:\n{d}", file.display())))
}

fn cmd_eval(file: &Path, name: Option<&str>) -> Outcome {
    let prog = match load(file) {
        Ok(p) => p,
        Err(o) => return o,
    };
    let names: Vec<String> = match name {
        Some(n) => vec![n.to_string()],
        None => prog.evals().to_vec(),
    };
    if names.is_empty() {
        return Outcome::input_error("nothing to evaluate: no `eval` directive and no --name");
    }
    let mut results = Vec::new();
    let mut agree = true;
    for n in &names {
        match prog.evaluate(n) {
            Ok(ev) => {
                agree &= ev.agree();
                results.push(ev.to_json());
            }
            Err(e) => return Outcome::input_error(e),
        }
    }
    let value = if results.len() == 1 { results.remove(0) } else { Value::Array(results) };
    let mut out = Outcome::json(if agree { EXIT_OK } else { EXIT_DISAGREEMENT }, &value);
    if !agree {
        out.stderr = "error: the two backends disagree\n".into();
    }
    out
}

fn cmd_verify(args: VerifyArgs) -> Outcome {
    let cfg = RunConfig {
        seed: args.seed,
        trials: args.trials,
        max_dim: args.max_dim,
        backend: args.backend,
        tol: args.tol,
        report_path: args.report.clone(),
        faults: Faults { corrupt_swap: args.inject_fault.is_some() },
    };
    let report = verify::run(args.suite, &cfg);
    let text = report.to_json_string() + "\n";
    if let Some(path) = &cfg.report_path {
        if let Err(e) = fs::write(path, &text) {
            return Outcome::input_error(format!("{}: {e}", path.display()));
        }
    }
    let code = if report.passed() { EXIT_OK } else { EXIT_VERIFICATION };
    let stderr = if report.passed() {
        String::new()
    } else {
        format!("error: {} of {} checks failed\n", report.failure_count, report.checks)
    };
    Outcome { code, stdout: text, stderr }
}

fn cmd_embed(file: &Path, gate: &str) -> Outcome {
    let prog = match load(file) {
        Ok(p) => p,
        Err(o) => return o,
    };
    if prog.item(gate).is_none() {
        return Outcome::input_error(format!("unknown gate `{gate}`"));
    }
    match prog.embed(gate) {
        Ok(v) => Outcome::json(EXIT_OK, &json!({ "name": gate, "image": v })),
        Err(e) => Outcome::input_error(e),
    }
}

fn instance(args: &InstanceArgs) -> Result<LctInstance, Outcome> {
    let kappa: Vec<Rational> = match &args.kappa {
        None => {
            let mut k = vec![Rational::from(0); args.dl];
            if let Some(first) = k.first_mut() {
                *first = Rational::from(1);
            }
            k
        }
        Some(csv) => csv
            .split(',')
            .map(|x| x.trim().parse::<Rational>().map_err(|_| Outcome::input_error(format!("bad kappa entry `{x}`"))))
            .collect::<Result<_, _>>()?,
    };
    lct::make_instance(args.d1, args.d2, args.dl, &kappa).map_err(Outcome::input_error)
}

fn vec_json(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(Scalar::to_json).collect())
}

fn instance_json(inst: &LctInstance) -> Value {
    json!({
        "d1": inst.d1,
        "d2": inst.d2,
        "dl": inst.dl,
        "kappa": vec_json(&inst.kappa),
        "kappa_perp": vec_json(&inst.kappa_perp),
        "kappa_bar": vec_json(&inst.kappa_bar),
    })
}

fn cmd_lct_demo(args: &InstanceArgs) -> Outcome {
    let inst = match instance(args) {
        Ok(i) => i,
        Err(o) => return o,
    };
    let beta = inst.default_beta();
    let pairing = lct::pairing_value(&inst, &beta).expect("default beta fits");
    let table: Vec<Value> = lct::annihilation_table(&inst)
        .into_iter()
        .map(|(s, t, v)| json!({ "sigma": s, "tau": t, "value": v.to_json() }))
        .collect();
    Outcome::json(
        EXIT_OK,
        &json!({
            "instance": instance_json(&inst),
            "annihilator": vec_json(&lct::annihilator(&inst)),
            "annihilation_table": table,
            "beta": vec_json(&beta),
            "pairing": pairing.to_json(),
        }),
    )
}

fn cmd_lct_refute(
    args: &InstanceArgs,
    model: Option<&Path>,
    random: Option<usize>,
    candidate: Option<&str>,
    seed: u64,
) -> Outcome {
    let inst = match instance(args) {
        Ok(i) => i,
        Err(o) => return o,
    };
    if let Some(count) = random {
        return match lct::random_sweep(&inst, seed, count) {
            Ok(summary) => {
                let code = if summary.survivors.is_empty() { EXIT_OK } else { EXIT_NO_VIOLATION };
                Outcome::json(code, &serde_json::to_value(&summary).expect("summary serialises"))
            }
            Err(e) => Outcome::input_error(e),
        };
    }
    let cand = match (model, candidate) {
        (Some(path), _) => {
            let parsed = fs::read_to_string(path)
                .map_err(|e| format!("{}: {e}", path.display()))
                .and_then(|t| serde_json::from_str::<Value>(&t).map_err(|e| format!("{}: {e}", path.display())))
                .and_then(|v| CandidateModel::from_json(&v).map_err(|e| format!("{}: {e}", path.display())));
            match parsed {
                Ok(c) => c,
                Err(e) => return Outcome::input_error(e),
            }
        }
        (None, None) | (None, Some("builtin:bct-style")) => lct::builtin_candidate(&inst),
        (None, Some(other)) => return Outcome::input_error(format!("unknown candidate `{other}`")),
    };
    match lct::falsify(&cand, &inst) {
        Ok(cert) => {
            let mut out = Outcome::json(
                if cert.is_empty() { EXIT_NO_VIOLATION } else { EXIT_OK },
                &json!({ "candidate": cand.to_json(), "certificate": cert.to_json() }),
            );
            if cert.is_empty() {
                out.stderr = "error: candidate violates no axiom; this contradicts the no-go result\n".into();
            }
            out
        }
        Err(e) => Outcome::input_error(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> Outcome {
        run(std::iter::once("bctk").chain(args.iter().copied()))
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_args(&["frobnicate"]).code, EXIT_INPUT);
        assert_eq!(run_args(&["verify", "--suite", "nope"]).code, EXIT_INPUT);
        assert_eq!(run_args(&["--help"]).code, EXIT_OK);
    }

    #[test]
    fn lct_demo_defaults() {
        let out = run_args(&["lct", "demo"]);
        assert_eq!(out.code, 0);
        let v: Value = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(v["pairing"], json!([1, 1]));
        assert!(v["annihilation_table"].as_array().unwrap().iter().all(|r| r["value"] == json!([0, 1])));
        assert_eq!(run_args(&["lct", "demo", "--kappa", "1/2,1/2"]).code, EXIT_INPUT);
    }

    #[test]
    fn lct_refute_builtin_and_random() {
        let out = run_args(&["lct", "refute", "--candidate", "builtin:bct-style"]);
        assert_eq!(out.code, 0);
        assert!(out.stdout.contains("jellyfish-nullity"));
        let out = run_args(&["lct", "refute", "--random", "50", "--seed", "3"]);
        assert_eq!(out.code, 0);
        let v: Value = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(v["refuted"], json!(50));
    }
}
