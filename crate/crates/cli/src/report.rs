//! Fixed-width text reports.

use std::fmt::Write;
use std::path::Path;

use latqid::cw::{CWReport, CwOptions, DirectionWitness, KattiVerdict};
use latqid::qid::{Factorization, Verdict, Witness};
use latqid::SignedLatticeMeasure;

const LABEL: usize = 22;

fn line(out: &mut String, label: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{label:<LABEL$}{value}");
}

fn point(n: &[i64]) -> String {
    let parts: Vec<String> = n.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

fn reals(z: &[f64]) -> String {
    let parts: Vec<String> = z.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Six decimals when that keeps three significant digits, scientific otherwise.
fn mass(m: f64) -> String {
    if m.abs() >= 1e-3 {
        format!("{m:+.6}")
    } else {
        format!("{m:+.6e}")
    }
}

fn measure_table(out: &mut String, nu: &SignedLatticeMeasure, top: usize) {
    let mut atoms: Vec<_> = nu.iter().collect();
    atoms.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then_with(|| a.0.cmp(b.0)));
    let shown = atoms.len().min(top);
    let _ = writeln!(out);
    let _ = writeln!(out, "levy measure: {} atoms, largest {shown} by |mass|", atoms.len());
    let _ = writeln!(out, "{:<24}{:>16}", "n", "mass");
    for (n, c) in &atoms[..shown] {
        let _ = writeln!(out, "{:<24}{:>16}", point(n), mass(*c));
    }
}

pub fn verdict(v: &Verdict, top: usize) -> String {
    let mut out = String::new();
    line(&mut out, "verdict", v.kind);
    if let Some(t) = &v.triplet {
        line(&mut out, "drift", point(&t.drift));
        line(&mut out, "grid size", t.diagnostics.grid_size);
        line(&mut out, "reconstruction error", format!("{:.2e}", t.diagnostics.reconstruction_error));
        line(&mut out, "max |Im c_n|", format!("{:.2e}", t.diagnostics.max_imag_residual));
        line(&mut out, "tail mass", format!("{:.2e}", t.diagnostics.tail_mass));
    }
    match &v.witness {
        Some(Witness::VanishingPoint { z, modulus }) => {
            line(&mut out, "witness", format!("phi vanishes at z = {} (|phi| = {modulus:.2e})", reals(z)));
        }
        Some(Witness::NegativeAtom { n, mass: m }) => {
            line(&mut out, "witness", format!("nu({}) = {}", point(n), mass(*m)));
        }
        None => line(&mut out, "witness", "-"),
    }
    if !v.marginal.is_empty() {
        let points: Vec<String> = v.marginal.iter().map(|n| point(n)).collect();
        line(&mut out, "marginal atoms", points.join(" "));
    }
    if let (Some(t), true) = (&v.triplet, top > 0) {
        measure_table(&mut out, &t.nu, top);
    }
    out
}

fn katti(k: &KattiVerdict) -> String {
    match k {
        KattiVerdict::Pass => "pass".into(),
        KattiVerdict::Fail { n } => format!("fail@{n}"),
        KattiVerdict::Refused => "refused".into(),
    }
}

fn direction_witness(w: &Option<DirectionWitness>) -> String {
    match w {
        Some(DirectionWitness::KattiCoefficient { n, q }) => format!("q_{n} = {}", mass(*q)),
        Some(DirectionWitness::NegativeAtom { n, mass: m }) => format!("nu({n}) = {}", mass(*m)),
        Some(DirectionWitness::VanishingPoint { u }) => format!("phi(u) = 0 at u = {u:.6}"),
        None => "-".into(),
    }
}

/// Agreement between the projected and the pushed-forward triplet; anything
/// under `tol` is bucketed so the table does not depend on rounding noise.
fn gap(g: Option<f64>, tol: f64) -> String {
    match g {
        None => "-".into(),
        Some(g) if g < tol => format!("<{tol:.0e}"),
        Some(g) => format!("{g:.1e}"),
    }
}

pub fn cw(report: &CWReport, options: &CwOptions, tol: f64) -> String {
    let mut out = String::new();
    line(&mut out, "direct verdict", report.direct.kind);
    let aggregate = match &report.aggregate {
        latqid::cw::Aggregate::AllPass => "AllPass".to_string(),
        latqid::cw::Aggregate::FailAt(a) => format!("FailAt {}", point(a)),
    };
    line(&mut out, "aggregate", aggregate);
    line(&mut out, "consistent", if report.consistent { "yes" } else { "no" });
    let family = if options.signed { "signed" } else { "N_0^d" };
    line(&mut out, "directions", format!("{} (bound {}, {family})", report.records.len(), options.bound));
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<16}{:>8}  {:<10}{:<22}{:<10}{:<9}witness",
        "direction", "support", "katti", "quasi-levy", "drift", "nu gap"
    );
    for r in &report.records {
        let drift = match r.drift_matches {
            Some(true) => "ok",
            Some(false) => "MISMATCH",
            None => "-",
        };
        let _ = writeln!(
            out,
            "{:<16}{:>8}  {:<10}{:<22}{:<10}{:<9}{}",
            point(&r.direction),
            r.support_size,
            katti(&r.katti),
            r.quasi_levy.to_string(),
            drift,
            gap(r.nu_discrepancy, tol),
            direction_witness(&r.witness)
        );
    }
    out
}

pub fn factorization(f: &Factorization, mu1: &Path, mu2: &Path) -> String {
    let mut out = String::new();
    line(&mut out, "drift", point(&f.drift));
    line(&mut out, "lambda1", format!("{:.6}", f.factor1.rate()));
    line(&mut out, "lambda2", format!("{:.6}", f.factor2.rate()));
    line(&mut out, "max residual", format!("{:.2e}", f.max_residual));
    line(&mut out, "grid size", f.grid_size);
    line(&mut out, "mu1", format!("{} ({} atoms, {} jumps max)", mu1.display(), f.mu1.pmf.len(), f.mu1.max_jumps));
    line(&mut out, "mu2", format!("{} ({} atoms, {} jumps max)", mu2.display(), f.mu2.pmf.len(), f.mu2.max_jumps));
    out
}
