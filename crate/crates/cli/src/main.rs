use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lipsel::cores::CoreBudget;
use lipsel::norm::NormTag;
use lipsel_cli::commands::{self, Options, DEFAULT_SCALES};
use lipsel_cli::generate::{generate, GenParams, Kind};
use lipsel_cli::instance::{write_atomic, write_json};
use lipsel_cli::report::{read_results, to_csv, Row};
use lipsel_cli::InstanceFile;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lipsel", version, about = "Lipschitz selections of set-valued maps on finite spaces")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum NormArg {
    Linf,
    L1,
}

#[derive(Args, Clone)]
struct Common {
    /// Override the instance norm.
    #[arg(long, value_enum)]
    norm: Option<NormArg>,
    /// Override the instance Lipschitz parameter.
    #[arg(long)]
    lambda: Option<f64>,
    /// Maximum number of subsets enumerated per query.
    #[arg(long, default_value_t = lipsel::gamma::DEFAULT_BUDGET)]
    budget: usize,
    /// Core parameter; calibrated from the input when absent.
    #[arg(long)]
    gamma_hat: Option<f64>,
    /// Spread directions for core support rows.
    #[arg(long, default_value_t = CoreBudget::default().directions)]
    directions: usize,
    /// Trees per core estimate.
    #[arg(long, default_value_t = CoreBudget::default().max_trees)]
    max_trees: usize,
    /// Nodes per tree in core estimates.
    #[arg(long, default_value_t = CoreBudget::default().max_nodes)]
    max_nodes: usize,
    /// Solve every LP in exact rational arithmetic.
    #[arg(long)]
    exact_rational: bool,
    /// Worker threads; LIPSEL_JOBS takes precedence.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output file (or directory for batch input); stdout when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

impl Common {
    fn options(&self) -> Options {
        Options {
            norm: self.norm.map(|n| match n {
                NormArg::Linf => NormTag::Linf,
                NormArg::L1 => NormTag::L1,
            }),
            lambda: self.lambda,
            budget: self.budget,
            gamma_hat: self.gamma_hat,
            core: CoreBudget {
                max_nodes: self.max_nodes,
                max_trees: self.max_trees,
                directions: self.directions,
            },
            exact: self.exact_rational,
        }
    }
}

#[derive(Subcommand)]
enum Verb {
    /// Optimal selection, finiteness numbers, and the core pipeline.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Instance file, or a directory of instance files.
        input: PathBuf,
    },
    /// Compare the optimum on small subsets with the full optimum.
    Finiteness {
        #[command(flatten)]
        common: Common,
        /// Instance file.
        input: PathBuf,
    },
    /// Partition of unity on a tree instance.
    Whitney {
        #[command(flatten)]
        common: Common,
        /// Scale window factor A; scales run over [r/A^3, r/A].
        #[arg(long)]
        big_a: Option<f64>,
        /// Tree instance file.
        input: PathBuf,
    },
    /// Tree coverings validated at several scales.
    Nagata {
        #[command(flatten)]
        common: Common,
        /// Comma-separated scales [default: 0.5,1,4,17].
        #[arg(long, value_delimiter = ',')]
        scales: Option<Vec<f64>>,
        /// Tree instance file.
        input: PathBuf,
    },
    /// Core estimates and their Hausdorff certificate.
    Core {
        #[command(flatten)]
        common: Common,
        /// Instance file.
        input: PathBuf,
    },
    /// Γ-set membership queries and structural checks.
    Gamma {
        #[command(flatten)]
        common: Common,
        /// Level of the Γ set.
        #[arg(long, default_value_t = 1)]
        ell: u32,
        /// Restrict to one point; with `--xi`, answer a single membership query.
        #[arg(long)]
        x: Option<usize>,
        /// Comma-separated query vector.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        xi: Option<Vec<f64>>,
        /// Instance file.
        input: PathBuf,
    },
    /// CSV table over a directory of solve results.
    Report {
        #[command(flatten)]
        common: Common,
        /// Directory of solve results.
        input: PathBuf,
    },
    /// Write random instances.
    Generate {
        #[arg(long, value_enum)]
        kind: Kind,
        /// Number of points.
        #[arg(long)]
        n: usize,
        /// Dimension of the target space, 1 to 3.
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of instances, with consecutive seeds; more than one needs
        /// `--out` to be a directory.
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, value_enum)]
        norm: Option<NormArg>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(path) => write_json(path, value),
        None => {
            println!("{}", lipsel::json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn configure_jobs(jobs: Option<usize>) -> Result<()> {
    let env = std::env::var("LIPSEL_JOBS").ok();
    let jobs = match env {
        Some(v) => Some(v.parse::<usize>().context("LIPSEL_JOBS must be a positive integer")?),
        None => jobs,
    };
    if let Some(j) = jobs.filter(|&j| j > 0) {
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global()?;
    }
    Ok(())
}

fn instance_files(dir: &Path) -> Result<Vec<(String, InstanceFile)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
    paths.sort();
    paths
        .iter()
        .map(|p| Ok((stem(p), InstanceFile::read(p)?)))
        .collect()
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn run(cli: Cli) -> Result<bool> {
    match cli.verb {
        Verb::Solve { common, input } => {
            configure_jobs(common.jobs)?;
            let opts = common.options();
            if input.is_dir() {
                let Some(out) = &common.out else {
                    bail!("batch solve needs --out DIR");
                };
                let items = instance_files(&input)?;
                let results = commands::solve_batch(&items, &opts)?;
                let mut ok = true;
                for r in &results {
                    write_json(&out.join(format!("{}.json", r.value.instance)), &r.value)?;
                    ok &= r.ok;
                }
                return Ok(ok);
            }
            let inst = InstanceFile::read(&input)?;
            let r = commands::solve(&inst, &stem(&input), &opts)?;
            emit(common.out.as_deref(), &r.value)?;
            Ok(r.ok)
        }
        Verb::Finiteness { common, input } => {
            configure_jobs(common.jobs)?;
            let r = commands::finiteness(&InstanceFile::read(&input)?, &common.options())?;
            emit(common.out.as_deref(), &r.value)?;
            Ok(r.ok)
        }
        Verb::Whitney { common, big_a, input } => {
            configure_jobs(common.jobs)?;
            let r = commands::whitney(&InstanceFile::read(&input)?, big_a)?;
            emit(common.out.as_deref(), &r.value)?;
            Ok(r.ok)
        }
        Verb::Nagata { common, scales, input } => {
            configure_jobs(common.jobs)?;
            let scales = scales.unwrap_or_else(|| DEFAULT_SCALES.to_vec());
            let r = commands::nagata(&InstanceFile::read(&input)?, &scales)?;
            emit(common.out.as_deref(), &r.value)?;
            Ok(r.ok)
        }
        Verb::Core { common, input } => {
            configure_jobs(common.jobs)?;
            let r = commands::core(&InstanceFile::read(&input)?, &common.options())?;
            emit(common.out.as_deref(), &r.value)?;
            Ok(r.ok)
        }
        Verb::Gamma { common, ell, x, xi, input } => {
            configure_jobs(common.jobs)?;
            let r = commands::gamma(&InstanceFile::read(&input)?, &common.options(), ell, x, xi)?;
            emit(common.out.as_deref(), &r.value)?;
            Ok(r.ok)
        }
        Verb::Report { common, input } => {
            let reports = read_results(&input)?;
            let rows: Vec<Row> = reports.iter().map(Row::from).collect();
            let csv = to_csv(&rows)?;
            match &common.out {
                Some(path) => write_atomic(path, csv.as_bytes())?,
                None => print!("{csv}"),
            }
            Ok(rows.iter().all(|r| r.ratio.is_finite()))
        }
        Verb::Generate { kind, n, m, seed, count, norm, out } => {
            let mut params = GenParams::new(kind, n, m, seed);
            if let Some(NormArg::L1) = norm {
                params.norm = NormTag::L1;
            }
            if count > 1 {
                let Some(dir) = out else {
                    bail!("--count above 1 needs --out DIR");
                };
                for i in 0..count {
                    let inst = generate(GenParams { seed: seed + i, ..params })?;
                    let label = kind.to_possible_value().expect("no skipped variants");
                    let name = format!("{}-n{n}-m{m}-s{:06}.json", label.get_name(), seed + i);
                    write_atomic(&dir.join(name), inst.to_json()?.as_bytes())?;
                }
                return Ok(true);
            }
            let inst = generate(params)?;
            match out {
                Some(path) => write_atomic(&path, inst.to_json()?.as_bytes())?,
                None => print!("{}", inst.to_json()?),
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}", serde_json::json!({ "error": "check failed" }));
            ExitCode::from(1)
        }
        Err(e) => {
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            eprintln!("{}", serde_json::json!({ "error": chain.join(": ") }));
            ExitCode::from(2)
        }
    }
}
