use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mlquad::mesh::{generate_mesh, write_mesh, Domain};
use mlquad::quad::{self, Family};
use mlquad::study::{generate_reference, parse_config, run_convergence_study, StudyConfig};
use mlquad::{Error, Result};

#[derive(Parser)]
#[command(name = "mlquad", version, about = "Multilevel quadrature for parametric elliptic PDEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence study and write CSV tables.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute and store the reference statistics of a study.
    Reference {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Export a generated mesh.
    Mesh {
        /// Take domain and h from a study config (with --level).
        #[arg(long, conflicts_with_all = ["domain", "h"])]
        config: Option<PathBuf>,
        #[arg(long, requires = "config")]
        level: Option<usize>,
        #[arg(long, default_value = "unit_disk")]
        domain: Domain,
        #[arg(long, default_value_t = 0.1)]
        h: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Export a quadrature rule as CSV.
    Rule {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        level: usize,
        #[arg(long, default_value_t = 6)]
        dim: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write the difference rule Q_level - Q_{level-1} instead.
        #[arg(long)]
        difference: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
}

fn load_config(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<StudyConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
        cfg.mesh_seed = s;
    }
    if let Some(o) = out {
        cfg.out = o;
    }
    Ok(cfg)
}

fn output(path: Option<&Path>, force: bool) -> Result<Box<dyn Write>> {
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(p) => {
            if p.exists() && !force {
                return Err(Error::WouldOverwrite(p.display().to_string()));
            }
            Ok(Box::new(BufWriter::new(fs::File::create(p)?)))
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let cfg = load_config(&config, seed, out)?;
            let summary = run_convergence_study(&cfg)?;
            for f in &summary.files {
                println!("{}", f.display());
            }
            for msg in &summary.failures {
                eprintln!("failed: {msg}");
            }
            Ok(summary.failures.is_empty())
        }
        Command::Reference {
            config,
            seed,
            out,
            force,
        } => {
            let cfg = load_config(&config, seed, None)?;
            let dir = out.or_else(|| cfg.reference_dir.clone()).unwrap_or_else(|| cfg.out.clone());
            for p in generate_reference(&cfg, &dir, force)? {
                println!("{}", p.display());
            }
            Ok(true)
        }
        Command::Mesh {
            config,
            level,
            domain,
            h,
            seed,
            out,
            force,
        } => {
            let (domain, h) = match config {
                Some(path) => {
                    let cfg = load_config(&path, None, None)?;
                    (cfg.problem.domain, cfg.problem.h(level.unwrap_or(0)))
                }
                None => (domain, h),
            };
            let mesh = generate_mesh(domain, h, seed)?;
            let mut w = output(out.as_deref(), force)?;
            let comments = vec![format!("domain {domain} h_target {h} seed {seed}")];
            write_mesh(&mut w, &mesh, None, &comments)?;
            w.flush()?;
            Ok(true)
        }
        Command::Rule {
            family,
            level,
            dim,
            seed,
            difference,
            out,
            force,
        } => {
            let mut w = output(out.as_deref(), force)?;
            if difference {
                quad::difference_rule(family, level, dim, seed)?.as_rule().write_csv(&mut w)?;
            } else {
                quad::rule(family, level, dim, seed)?.write_csv(&mut w)?;
            }
            w.flush()?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
