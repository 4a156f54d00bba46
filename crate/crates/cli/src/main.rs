mod generate;
mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use latqid::cw::{cw_test, CwOptions};
use latqid::qid::{classify, factorize, QidConfig, VerdictKind};
use latqid::{Error, LatticePmf};
use serde_json::json;

use generate::Family;

/// Exit code for malformed input, inconclusive certification and other errors.
const EXIT_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "latqid", version, about = "Infinite divisibility of lattice distributions via quasi-Lévy triplets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a pmf and print its quasi-Lévy triplet.
    ///
    /// Exit codes: 0 infinitely divisible, 1 quasi-ID only, 2 not quasi-ID,
    /// 3 inconclusive or error.
    Analyze {
        input: PathBuf,
        #[command(flatten)]
        numerics: Numerics,
        /// Largest ν atoms shown in the text table.
        #[arg(long, default_value = "20")]
        top: usize,
    },
    /// Cramér–Wold test over integer directions, compared with the direct verdict.
    ///
    /// Exit codes: 0 consistent, 1 inconsistent, 3 inconclusive or error.
    Cw {
        input: PathBuf,
        /// Sup-norm bound on the directions.
        #[arg(long, default_value = "4")]
        bound: u32,
        /// Use directions in {-B..B}^d (one of each ± pair) instead of N_0^d.
        #[arg(long)]
        signed: bool,
        #[command(flatten)]
        numerics: Numerics,
    },
    /// Write a quasi-ID pmf as a shifted quotient of two compound Poisson laws.
    ///
    /// Writes mu1.json and mu2.json. Exit codes: 0 success, 2 not quasi-ID,
    /// 3 inconclusive or error.
    Factorize {
        input: PathBuf,
        /// Directory for mu1.json and mu2.json.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[command(flatten)]
        numerics: Numerics,
    },
    /// Emit a normalized pmf JSON from a built-in family.
    Generate {
        #[command(subcommand)]
        family: Family,
        /// Output file; stdout when absent.
        #[arg(long, short, global = true)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Numerics {
    /// Accuracy target, in (0, 1e-6].
    #[arg(long, default_value = "1e-10")]
    tol: f64,
    /// Largest total number of grid points.
    #[arg(long, default_value = "1048576")]
    max_grid: usize,
    /// Machine-readable JSON instead of text.
    #[arg(long)]
    json: bool,
}

impl Numerics {
    fn config(&self) -> Result<QidConfig> {
        let config = QidConfig { tol: self.tol, max_grid_points: self.max_grid, ..QidConfig::default() };
        config.validate()?;
        Ok(config)
    }
}

fn load(path: &Path) -> Result<LatticePmf> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid pmf in {}", path.display()))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

fn analyze(input: &Path, numerics: &Numerics, top: usize) -> Result<u8> {
    let p = load(input)?;
    let verdict = classify(&p, &numerics.config()?)?;
    if numerics.json {
        println!("{}", serde_json::to_string_pretty(&verdict)?);
    } else {
        print!("{}", report::verdict(&verdict, top));
    }
    Ok(verdict.kind.exit_code() as u8)
}

fn cw(input: &Path, bound: u32, signed: bool, numerics: &Numerics) -> Result<u8> {
    let p = load(input)?;
    let options = CwOptions { bound, signed };
    let config = numerics.config()?;
    let report = cw_test(&p, &options, &config)?;
    if numerics.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", report::cw(&report, &options, config.tol));
    }
    Ok(if report.consistent { 0 } else { 1 })
}

fn factorize_cmd(input: &Path, out_dir: &Path, numerics: &Numerics) -> Result<u8> {
    let p = load(input)?;
    let config = numerics.config()?;
    let verdict = classify(&p, &config)?;
    if verdict.kind == VerdictKind::NotQuasi {
        if numerics.json {
            println!("{}", serde_json::to_string_pretty(&verdict)?);
        } else {
            println!("refused: the characteristic function vanishes, so no factorization exists");
            print!("{}", report::verdict(&verdict, 0));
        }
        return Ok(VerdictKind::NotQuasi.exit_code() as u8);
    }
    let f = factorize(&p, &config)?;
    fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let mu1 = out_dir.join("mu1.json");
    let mu2 = out_dir.join("mu2.json");
    for (path, part, factor, law) in [(&mu1, "mu1", &f.factor1, &f.mu1), (&mu2, "mu2", &f.factor2, &f.mu2)] {
        let meta = json!({
            "family": "compound_poisson",
            "factor": part,
            "lambda": factor.rate(),
            "max_jumps": law.max_jumps,
            "discarded_mass": law.discarded_mass,
        });
        write_json(path, &generate::with_meta(&law.pmf, meta)?)?;
    }
    if numerics.json {
        let out = json!({
            "drift": f.drift,
            "lambda1": f.factor1.rate(),
            "lambda2": f.factor2.rate(),
            "max_residual": f.max_residual,
            "grid_size": f.grid_size,
            "plus": f.plus,
            "minus": f.minus,
            "mu1": mu1,
            "mu2": mu2,
        });
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        print!("{}", report::factorization(&f, &mu1, &mu2));
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Analyze { input, numerics, top } => analyze(&input, &numerics, top),
        Command::Cw { input, bound, signed, numerics } => cw(&input, bound, signed, &numerics),
        Command::Factorize { input, out_dir, numerics } => factorize_cmd(&input, &out_dir, &numerics),
        Command::Generate { family, output } => {
            let value = generate::generate(&family, load)?;
            match output {
                Some(path) => write_json(&path, &value)?,
                None => println!("{}", serde_json::to_string_pretty(&value)?),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            if let Some(Error::Inconclusive { .. } | Error::NonConvergence { .. }) = e.downcast_ref::<Error>() {
                eprintln!("inconclusive: {e:#}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(EXIT_ERROR)
        }
    }
}
