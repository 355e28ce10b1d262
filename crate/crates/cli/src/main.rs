use clap::{Parser, Subcommand};
use std::path::PathBuf;
use takai_cli::config::{parse_group, RunConfig, Suite};
use takai_cli::report::{emit, EmitFormat};
use takai_core::pnorm::{opnorm, Budget, NormKind, PExponent};

#[derive(Parser)]
#[command(
    name = "takai-lab",
    version,
    about = "Numerical verifier for the duality chain of L^p crossed products over finite Abelian groups"
)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Run verification suites over a parameter grid and emit a report.
    Verify {
        /// Comma-separated suite names (default: all suites)
        #[arg(long, value_delimiter = ',')]
        suites: Vec<String>,
        /// Group specs such as Z2,Z4,Z2xZ2
        #[arg(long, value_delimiter = ',')]
        groups: Vec<String>,
        /// Algebra specs: scalar, cx:<N>, mn:<N>
        #[arg(long, value_delimiter = ',')]
        algebras: Vec<String>,
        /// Action specs: trivial, lt, rt, monomial:shift
        #[arg(long, value_delimiter = ',')]
        actions: Vec<String>,
        /// Exponents, each >= 1
        #[arg(long = "p", value_delimiter = ',')]
        exponents: Vec<f64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Tolerance overrides as key=value (repeatable)
        #[arg(long = "tol")]
        tolerances: Vec<String>,
        /// Report destination ("-" for stdout)
        #[arg(long)]
        out: Option<String>,
        #[arg(long, default_value = "json")]
        format: String,
        /// Suppress the per-case summary lines
        #[arg(long)]
        quiet: bool,
    },
    /// Compute the p -> p operator norm of a matrix stored as JSON.
    Norm {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
    },
    /// Inspect a group: element list, and optionally the character table.
    Group {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        table: bool,
    },
}

const EXIT_OK: i32 = 0;
const EXIT_FAIL: i32 = 1;
const EXIT_USAGE: i32 = 2;
const EXIT_IO: i32 = 3;

fn main() {
    // behave like an ordinary unix tool when output is piped into a pager
    // or head: die silently on a closed pipe instead of panicking
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = Cli::parse();
    match cli.command {
        Commands::Verify {
            suites,
            groups,
            algebras,
            actions,
            exponents,
            trials,
            seed,
            tolerances,
            out,
            format,
            quiet,
        } => cmd_verify(
            suites, groups, algebras, actions, exponents, trials, seed, tolerances, out, format,
            quiet,
        ),
        Commands::Norm {
            matrix,
            p,
            seed,
            restarts,
        } => cmd_norm(&matrix, p, seed, restarts),
        Commands::Group { spec, table } => cmd_group(&spec, table),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    suites: Vec<String>,
    groups: Vec<String>,
    algebras: Vec<String>,
    actions: Vec<String>,
    exponents: Vec<f64>,
    trials: Option<usize>,
    seed: Option<u64>,
    tolerances: Vec<String>,
    out: Option<String>,
    format: String,
    quiet: bool,
) -> i32 {
    let mut config = RunConfig::default();
    if !groups.is_empty() {
        config.groups = groups;
    }
    if !algebras.is_empty() {
        config.algebras = algebras;
    }
    if !actions.is_empty() {
        config.actions = actions;
    }
    if !exponents.is_empty() {
        config.exponents = exponents;
    }
    if let Some(t) = trials {
        config.trials = t;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    if !suites.is_empty() {
        let mut parsed = Vec::new();
        for s in &suites {
            match s.parse::<Suite>() {
                Ok(suite) => parsed.push(suite),
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_USAGE;
                }
            }
        }
        config.suites = parsed;
    }
    for spec in &tolerances {
        let Some((key, value)) = spec.split_once('=') else {
            eprintln!("error: tolerance override must look like key=value, got {spec:?}");
            return EXIT_USAGE;
        };
        let Ok(value) = value.parse::<f64>() else {
            eprintln!("error: bad tolerance value in {spec:?}");
            return EXIT_USAGE;
        };
        config.tolerances.insert(key.to_string(), value);
    }
    if let Ok(v) = std::env::var("TAKAI_THREADS") {
        match v.parse::<usize>() {
            Ok(n) => config.threads = Some(n),
            Err(_) => {
                eprintln!("error: TAKAI_THREADS must be a nonnegative integer, got {v:?}");
                return EXIT_USAGE;
            }
        }
    }
    let fmt = match format.parse::<EmitFormat>() {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Err(e) = config.validate() {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }

    let report = match takai_cli::run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if !quiet {
        for case in &report.cases {
            println!("[{}] {}", case.status.as_str(), case.name);
        }
        println!(
            "{} pass, {} warn, {} fail",
            report.summary.pass, report.summary.warn, report.summary.fail
        );
    }
    if let Some(path) = out {
        if let Err(e) = emit(&report, fmt, &path) {
            eprintln!("error: cannot write report to {path}: {e}");
            return EXIT_IO;
        }
    }
    if report.any_fail() {
        EXIT_FAIL
    } else {
        EXIT_OK
    }
}

fn cmd_norm(path: &PathBuf, p: f64, seed: u64, restarts: usize) -> i32 {
    let body = match std::fs::read_to_string(path) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return EXIT_IO;
        }
    };
    let value: serde_json::Value = match serde_json::from_str(&body) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: invalid JSON in {}: {e}", path.display());
            return EXIT_USAGE;
        }
    };
    let matrix = match takai_core::mat::CMatrix::from_json(&value) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let exponent = match PExponent::new(p) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let budget = Budget {
        restarts,
        ..Budget::default()
    };
    let estimate = match opnorm(&matrix, exponent, &budget, seed) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let kind = match estimate.kind {
        NormKind::Exact => "exact",
        NormKind::ConvergedLowerBound => "converged-lower-bound",
        NormKind::Oracle => "oracle",
    };
    let witness = estimate
        .witness
        .as_ref()
        .map(|w| w.iter().map(|z| vec![z.re, z.im]).collect::<Vec<_>>());
    let out = serde_json::json!({
        "value": estimate.value,
        "kind": kind,
        "iterations": estimate.iterations,
        "converged": estimate.converged,
        "witness": witness,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&out).expect("serializes")
    );
    EXIT_OK
}

fn cmd_group(spec: &str, table: bool) -> i32 {
    let group = match parse_group(spec) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    println!("group {group} of order {}", group.order());
    let elements = group.enumerate();
    for (i, e) in elements.iter().enumerate() {
        println!("  [{i}] {:?}", e.residues());
    }
    if table {
        println!("character table (rows gamma_m, columns s):");
        for chi in group.characters() {
            let row: Vec<String> = elements
                .iter()
                .map(|s| {
                    let v = group.pair(&chi, s).expect("same shape");
                    format!("{:+.3}{:+.3}i", v.re, v.im)
                })
                .collect();
            println!("  {:?}: {}", chi.index().residues(), row.join("  "));
        }
        println!(
            "orthogonality defect: {:.3e}",
            group.character_orthogonality_defect()
        );
    }
    EXIT_OK
}
