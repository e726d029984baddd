use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rppm::harness::{
    execute, run_comparison, run_lambda_sensitivity, run_scaling, scaling_slope, write_common,
    ExperimentConfig, ExperimentKind, ExperimentOutput, HarnessError, ProblemSpec, RunRecord,
    SCALING_MAX_OUTER,
};
use rppm::solvers::Method;

#[derive(Parser)]
#[command(name = "rppm", version, about = "Riemannian proximal point benchmarks on SPD matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Adap-RPPM on f1 over a grid of initial lambda values.
    LambdaSensitivity(Opts),
    /// Adap-RPPM on f2 across matrix sizes.
    Scaling(Opts),
    /// Adap-RPPM, DCA and DCPPA on f3 from seeded random starts.
    Comparison(Opts),
    /// A single run.
    Solve(Opts),
}

#[derive(Args, Clone)]
struct Opts {
    /// f1, f2 or f3.
    #[arg(long)]
    problem: Option<String>,
    /// Matrix size; replaces the experiment's size grid.
    #[arg(long)]
    n: Option<usize>,
    /// f1's trace weight.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// f1's linear-term weight.
    #[arg(long, default_value_t = 0.01)]
    mu: f64,
    /// Initial lambda (lambda for DCPPA); replaces the experiment's grid.
    #[arg(long)]
    lambda0: Option<f64>,
    /// Stop once consecutive iterates are this close.
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    /// Outer-iteration cap [default: 100, or 50000 for scaling].
    #[arg(long)]
    max_iter: Option<usize>,
    /// rppm, adap, dca or dcppa; replaces the experiment's methods.
    #[arg(long)]
    method: Option<Method>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory [default: results/<subcommand>; solve writes nothing].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the full-size grids.
    #[arg(long)]
    full: bool,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

fn default_lambda0(method: Method) -> f64 {
    match method {
        Method::Rppm => 1.01,
        Method::Adap => 1e-4,
        Method::Dca => 1.0,
        Method::Dcppa => 0.1,
    }
}

fn configure(kind: ExperimentKind, o: &Opts) -> ExperimentConfig {
    let mut cfg = match kind {
        ExperimentKind::LambdaSensitivity => ExperimentConfig::lambda_sensitivity(),
        ExperimentKind::Scaling => ExperimentConfig::scaling(o.full),
        ExperimentKind::Comparison => ExperimentConfig::comparison(o.full),
        ExperimentKind::Custom => {
            let method = o.method.unwrap_or(Method::Adap);
            let mut c = ExperimentConfig::lambda_sensitivity();
            c.name = ExperimentKind::Custom;
            c.methods = vec![method];
            c.lambda0_grid = vec![default_lambda0(method)];
            c
        }
    };
    if let Some(p) = &o.problem {
        cfg.problem.name = p.clone();
    }
    cfg.problem = ProblemSpec { alpha: o.alpha, mu: o.mu, ..cfg.problem };
    if let Some(n) = o.n {
        cfg.n_grid = vec![n];
    }
    if let Some(l) = o.lambda0 {
        cfg.lambda0_grid = vec![l];
    }
    if let Some(m) = o.method {
        cfg.methods = vec![m];
    }
    cfg.eps_stop = o.eps;
    cfg.max_outer = o.max_iter.unwrap_or(match kind {
        ExperimentKind::Scaling => SCALING_MAX_OUTER,
        _ => 100,
    });
    cfg.seed = o.seed;
    cfg.threads = o.threads;
    cfg.output_dir = match (&o.out, kind) {
        (Some(dir), _) => Some(dir.clone()),
        (None, ExperimentKind::Custom) => None,
        (None, k) => Some(PathBuf::from("results").join(k.as_str().replace('_', "-"))),
    };
    cfg
}

struct Painter {
    color: bool,
}

impl Painter {
    fn new() -> Self {
        let color = std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty())
            && std::io::stdout().is_terminal();
        Self { color }
    }

    fn paint(&self, code: &str, text: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }
}

fn print_records(records: &[RunRecord], painter: &Painter) {
    println!(
        "{:<16} {:<6} {:>4} {:>9} {:>6} {:<17} {:>14} {:>12} {:>10}",
        "case", "method", "n", "lambda0", "iters", "termination", "f_final", "det_final", "lambda_k"
    );
    for r in records {
        let term = format!("{:<17}", r.termination_str());
        let term = match r.termination {
            Some(t) if t.converged() => painter.paint("32", &term),
            _ => painter.paint("33", &term),
        };
        println!(
            "{:<16} {:<6} {:>4} {:>9.2e} {:>6} {} {:>14.6e} {:>12.6e} {:>10.4}",
            r.case_id, r.method, r.n, r.lambda0, r.iterations, term, r.f_final, r.det_final, r.lambda_final
        );
        for v in &r.violations {
            println!("  {} {v}", painter.paint("31", "violation:"));
        }
        if r.termination.is_none() {
            let msg = r.error.as_deref().unwrap_or("problem error");
            println!("  {} {msg}", painter.paint("31", "error:"));
        }
    }
}

fn run(kind: ExperimentKind, o: &Opts) -> Result<ExperimentOutput, HarnessError> {
    let cfg = configure(kind, o);
    let painter = Painter::new();
    let out = match kind {
        ExperimentKind::LambdaSensitivity => run_lambda_sensitivity(&cfg)?,
        ExperimentKind::Scaling => {
            let out = run_scaling(&cfg)?;
            if let Some(s) = scaling_slope(&out.records) {
                println!("cpu seconds per manifold dimension (least squares): {s:.3e}");
            }
            out
        }
        ExperimentKind::Comparison => {
            let (out, profile) = run_comparison(&cfg)?;
            for (m, curve) in profile.methods.iter().zip(&profile.rho) {
                println!("rho_{m}(1) = {:.3}  rho_{m}(max) = {:.3}", curve[0], curve[curve.len() - 1]);
            }
            out
        }
        ExperimentKind::Custom => {
            let out = execute(&cfg)?;
            if let Some(dir) = &cfg.output_dir {
                write_common(dir, &out)?;
            }
            out
        }
    };
    print_records(&out.records, &painter);
    if let Some(dir) = &cfg.output_dir {
        println!("wrote {}", dir.display());
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, opts) = match &cli.command {
        Command::LambdaSensitivity(o) => (ExperimentKind::LambdaSensitivity, o),
        Command::Scaling(o) => (ExperimentKind::Scaling, o),
        Command::Comparison(o) => (ExperimentKind::Comparison, o),
        Command::Solve(o) => (ExperimentKind::Custom, o),
    };
    match run(kind, opts) {
        Ok(out) if out.invalid_count() == 0 => ExitCode::SUCCESS,
        Ok(out) => {
            eprintln!("{} invalid record(s)", out.invalid_count());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
