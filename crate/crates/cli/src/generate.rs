use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use clap::Subcommand;
use latqid::qid::{compound_poisson_pmf, CompoundPoissonFactor};
use latqid::{LatticePmf, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

#[derive(Subcommand)]
pub enum Family {
    /// Poisson(λ) truncated where the upper tail drops below --tail.
    Poisson {
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value = "1e-12")]
        tail: f64,
    },
    /// Geometric law p (1 - p)^n on N_0, truncated where the tail drops below --tail.
    Geometric {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value = "1e-12")]
        tail: f64,
    },
    /// (1 - p) δ_0 + p δ_1.
    Bernoulli {
        #[arg(long)]
        p: f64,
    },
    /// Independent product of two pmf files; dimensions concatenate.
    Product { first: PathBuf, second: PathBuf },
    /// Image of a pmf file under x -> A x + v with A integer and nonsingular.
    Affine {
        input: PathBuf,
        /// Rows separated by ';', entries by ',', e.g. "1,0;1,1".
        #[arg(long)]
        matrix: String,
        /// Translation v, e.g. "0,2"; zero when absent.
        #[arg(long)]
        shift: Option<String>,
    },
    /// Random weights on random points of {-radius..radius}^dim.
    Random {
        #[arg(long, default_value = "1")]
        dim: usize,
        #[arg(long, default_value = "4")]
        atoms: usize,
        #[arg(long, default_value = "2")]
        radius: i64,
        #[arg(long, default_value = "0")]
        seed: u64,
    },
}

/// The pmf's JSON object with a `meta` entry added.
pub fn with_meta(pmf: &LatticePmf, meta: Value) -> Result<Value> {
    let mut value = serde_json::to_value(pmf)?;
    value["meta"] = meta;
    Ok(value)
}

fn parse_ints(text: &str) -> Result<Vec<i64>> {
    text.split(',')
        .map(|x| x.trim().parse::<i64>().with_context(|| format!("not an integer: {x:?}")))
        .collect()
}

fn truncated_geometric(p: f64, tail: f64) -> Result<(LatticePmf, f64)> {
    ensure!(p > 0.0 && p <= 1.0, "geometric parameter must lie in (0, 1], got {p}");
    ensure!(tail > 0.0 && tail < 1.0, "tail must lie in (0, 1), got {tail}");
    if p == 1.0 {
        return Ok((LatticePmf::dirac(vec![0]), 0.0));
    }
    // P(N > m) = (1 - p)^{m + 1}
    let q = 1.0 - p;
    let mut top = 0usize;
    while q.powi(top as i32 + 1) >= tail {
        top += 1;
    }
    let weights = (0..=top).map(|n| (vec![n as i64], p * q.powi(n as i32)));
    Ok((LatticePmf::from_weights(1, weights)?, q.powi(top as i32 + 1)))
}

pub fn generate(family: &Family, load: impl Fn(&Path) -> Result<LatticePmf>) -> Result<Value> {
    match family {
        Family::Poisson { lambda, tail } => {
            ensure!(*lambda > 0.0 && lambda.is_finite(), "lambda must be positive, got {lambda}");
            let factor = CompoundPoissonFactor::new(*lambda, LatticePmf::dirac(vec![1]))?;
            let law = compound_poisson_pmf(&factor, *tail)?;
            let meta = json!({
                "family": "poisson",
                "lambda": lambda,
                "tail": tail,
                "discarded_mass": law.discarded_mass,
            });
            with_meta(&law.pmf, meta)
        }
        Family::Geometric { p, tail } => {
            let (pmf, discarded) = truncated_geometric(*p, *tail)?;
            with_meta(&pmf, json!({ "family": "geometric", "p": p, "tail": tail, "discarded_mass": discarded }))
        }
        Family::Bernoulli { p } => {
            let pmf = LatticePmf::bernoulli(*p)?;
            with_meta(&pmf, json!({ "family": "bernoulli", "p": p }))
        }
        Family::Product { first, second } => {
            let pmf = load(first)?.product(&load(second)?);
            with_meta(&pmf, json!({ "family": "product", "inputs": [first, second] }))
        }
        Family::Affine { input, matrix, shift } => {
            let p = load(input)?;
            let rows: Vec<Vec<i64>> = matrix.split(';').map(parse_ints).collect::<Result<_>>()?;
            let shift = match shift {
                Some(text) => parse_ints(text)?,
                None => vec![0; rows.len()],
            };
            let pmf = p.affine(&rows, &shift)?;
            with_meta(&pmf, json!({ "family": "affine", "input": input, "matrix": rows, "shift": shift }))
        }
        Family::Random { dim, atoms, radius, seed } => {
            ensure!(*dim > 0, "dim must be positive");
            ensure!(*atoms > 0, "atoms must be positive");
            ensure!(*radius >= 0, "radius must be nonnegative");
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let weights: Vec<(Point, f64)> = (0..*atoms)
                .map(|_| {
                    let n = (0..*dim).map(|_| rng.gen_range(-radius..=*radius)).collect();
                    (n, rng.gen_range(0.05..1.0))
                })
                .collect();
            let pmf = LatticePmf::from_weights(*dim, weights)?;
            with_meta(
                &pmf,
                json!({ "family": "random", "dim": dim, "atoms": atoms, "radius": radius, "seed": seed }),
            )
        }
    }
}
