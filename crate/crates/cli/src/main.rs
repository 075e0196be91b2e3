mod assets;
mod commands;
mod reproduce;
mod specfile;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use commands::{Format, Outcome};
use reltrack::reltrees::GrushkoTreePoint;
use specfile::SpecFile;

/// Relative train tracks, currents and trees for automorphisms of free groups.
#[derive(Parser, Debug)]
#[command(name = "reltrack", version)]
struct Cli {
    /// Word length for currents and laminations.
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Largest power of the map in tree experiments.
    #[arg(long, global = true)]
    power_max: Option<usize>,
    /// Convergence tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Strata, train track checks, collapse, Whitehead graphs and the irreducibility certificate.
    Analyze { spec: PathBuf },
    /// Whitehead and relative Whitehead graphs with leaf classes.
    Whitehead {
        spec: PathBuf,
        #[arg(long)]
        vertex: Option<String>,
    },
    /// Attracting leaf language of a representative, or the dual language of a tree.
    Lamination {
        spec: Option<PathBuf>,
        /// Tree file or builtin (`counterexample:K`, `limit:K`, `hnn-limit`).
        #[arg(long)]
        tree: Option<String>,
        /// Leaf prefix scanned for recurrence gaps.
        #[arg(long, default_value_t = 4096)]
        window: usize,
    },
    /// North-south experiment for the current of `alpha`.
    Currents {
        spec: PathBuf,
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Normalized translation-length spectra along the forward orbit of a tree.
    Trees {
        spec: PathBuf,
        /// Tree file or builtin; defaults to the eigenvector metric on the collapsed graph.
        #[arg(long)]
        tree: Option<String>,
        /// Words separated by `;`.
        #[arg(long)]
        sample: Option<String>,
    },
    /// Translation length and duality between a tree and a current.
    Pairing {
        #[arg(long)]
        tree: String,
        #[arg(long)]
        alpha: Option<String>,
        /// Pair with the limit current of `a^k b`.
        #[arg(long)]
        eta_infinity: bool,
    },
    /// Run the worked examples as named pass/fail checks.
    ReproducePaper {
        /// Read input files from this directory instead of the built-in copies.
        #[arg(long)]
        assets: Option<PathBuf>,
    },
}

fn read_spec(path: &Path) -> Result<SpecFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    specfile::parse(&text).with_context(|| format!("{}", path.display()))
}

fn resolve_tree(arg: &str) -> Result<GrushkoTreePoint> {
    let k = |s: &str| s.parse::<usize>().map_err(|_| anyhow!("bad index in `{arg}`"));
    Ok(match arg.split_once(':') {
        Some(("counterexample", n)) => GrushkoTreePoint::counterexample_tree(k(n)?)?,
        Some(("limit", n)) => GrushkoTreePoint::limit_tree(k(n)?)?,
        _ if arg == "hnn-limit" => GrushkoTreePoint::hnn_limit(),
        _ => {
            let text = std::fs::read_to_string(arg).with_context(|| format!("cannot read tree file {arg}"))?;
            GrushkoTreePoint::parse(&text).with_context(|| arg.to_string())?
        }
    })
}

fn run(cli: Cli) -> Result<Outcome> {
    let fmt = |default| cli.format.unwrap_or(default);
    match cli.command {
        Command::Analyze { spec } => commands::analyze(&read_spec(&spec)?, fmt(Format::Json)),
        Command::Whitehead { spec, vertex } => commands::whitehead(&read_spec(&spec)?, vertex.as_deref(), fmt(Format::Json)),
        Command::Lamination { spec, tree, window } => match (spec, tree) {
            (Some(spec), None) => {
                let s = read_spec(&spec)?;
                let m = cli.depth.or(s.params.depth).unwrap_or(4);
                commands::lamination_rep(&s, m, window, fmt(Format::Json))
            }
            (None, Some(tree)) => commands::lamination_tree(&resolve_tree(&tree)?, cli.depth.unwrap_or(4), fmt(Format::Json)),
            _ => bail!("give either a spec file or --tree"),
        },
        Command::Currents { spec, alpha, n_max } => {
            let s = read_spec(&spec)?;
            let alpha = alpha.or_else(|| s.alpha.clone()).ok_or_else(|| anyhow!("no --alpha and no `alpha` line"))?;
            let n_max = n_max.or(s.params.n_max).unwrap_or(20);
            let m = cli.depth.or(s.params.depth).unwrap_or(1);
            commands::currents(&s, &alpha, n_max, m, fmt(Format::Json))
        }
        Command::Trees { spec, tree, sample } => {
            let s = read_spec(&spec)?;
            let tree = tree.as_deref().map(resolve_tree).transpose()?;
            let sample = sample.map_or_else(|| s.sample.clone(), |t| specfile::split_sample(&t));
            let p_max = cli.power_max.or(s.params.power_max).unwrap_or(15);
            let tol = cli.tol.or(s.params.tol).unwrap_or(1e-6);
            commands::trees(&s, tree, &sample, p_max, tol, fmt(Format::Csv))
        }
        Command::Pairing { tree, alpha, eta_infinity } => {
            let m = cli.depth.unwrap_or(6);
            commands::pairing(&resolve_tree(&tree)?, alpha.as_deref(), eta_infinity, m, fmt(Format::Json))
        }
        Command::ReproducePaper { assets } => {
            let seed = cli.seed.unwrap_or(reproduce::DEFAULT_SEED);
            let checks = reproduce::run(&assets::Assets::new(assets.as_deref()), seed)?;
            let ok = checks.iter().all(|c| c.passed);
            let text = match fmt(Format::Csv) {
                Format::Json => serde_json::to_string_pretty(&checks)? + "\n",
                Format::Dot => bail!("`reproduce-paper` has no dot output"),
                Format::Csv => checks
                    .iter()
                    .map(|c| match c.passed {
                        true => format!("PASS {}: {}\n", c.name, c.got),
                        false => format!("FAIL {}: expected {}, got {}\n", c.name, c.expected, c.got),
                    })
                    .collect(),
            };
            Ok(Outcome { text, ok })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{}", out.text);
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
