//! The four subcommands. Each prints a text summary, optionally writes
//! JSON/CSV/circuit files and returns whether every check passed.

use std::path::Path;

use anyhow::Context;
use lfboson::blockenc::{chebyshev_matrices, check_monomials, gate_counts, WalkCircuits};
use lfboson::fock::{enumerate_basis, sector_basis, FockState, Sector};
use lfboson::hamiltonian::{
    build_monomials, exact_matrix, exact_spectrum, find_critical_coupling, sector_spectrum, HamiltonianSpec,
    ModelParams,
};
use lfboson::qksd::{run_qksd, ExpectationMode};
use lfboson::simulator::{chebyshev_blocks, projected_block, Backend, Pivot};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{usage, RunConfig, SectorChoice};
use crate::output::{fmt12, Document, Meta};

/// Largest circuit-vs-oracle deviation accepted by `verify`.
pub const VERIFY_TOL: f64 = 1e-10;

fn params(cfg: &RunConfig) -> anyhow::Result<ModelParams> {
    ModelParams::new(cfg.k, cfg.lambda_over_m2, cfg.m2).map_err(|e| usage(e.to_string()))
}

fn labels(states: &[FockState]) -> Vec<String> {
    states.iter().map(|s| s.to_string()).collect()
}

fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn finish(cfg: &RunConfig, spec: &HamiltonianSpec, results: Value) -> anyhow::Result<()> {
    if let Some(path) = &cfg.export_circuit {
        let walk = WalkCircuits::new(spec)?;
        std::fs::write(path, walk.u_h.to_text()).with_context(|| format!("writing {}", path.display()))?;
        println!("walk unitary ({} gates) written to {}", walk.u_h.len(), path.display());
    }
    if let Some(path) = &cfg.json {
        Document { meta: Meta::from_spec(spec)?, results }.write_json(path)?;
    }
    Ok(())
}

fn print_header(spec: &HamiltonianSpec) -> anyhow::Result<()> {
    let meta = Meta::from_spec(spec)?;
    println!(
        "K = {}  λ/m² = {}  m² = {}  M = {}  D = {}  Ξ = {}  qubits = {}",
        meta.k,
        meta.lambda,
        meta.m2,
        spec.monomial_count(),
        meta.d,
        fmt12(meta.xi),
        meta.qubits
    );
    Ok(())
}

pub fn spectrum(cfg: &RunConfig, show_matrix: bool) -> anyhow::Result<bool> {
    let p = params(cfg)?;
    let spec = build_monomials(&p)?;
    print_header(&spec)?;
    let basis = enumerate_basis(cfg.k)?;
    let full = exact_matrix(&spec, &basis);
    let all = exact_spectrum(&full)?;
    let k = cfg.k as f64;
    let mut sectors = serde_json::Map::new();
    for sector in cfg.sector.unwrap_or(SectorChoice::Both).sectors() {
        let sb = sector_basis(cfg.k, sector)?;
        if sb.is_empty() {
            println!("{sector}: empty");
            continue;
        }
        let ev = exact_spectrum(&exact_matrix(&spec, &sb))?;
        println!("{sector} ({} states): {}", sb.len(), ev.iter().map(|&e| fmt12(e)).collect::<Vec<_>>().join("  "));
        sectors.insert(
            sector.to_string(),
            json!({
                "basis": labels(&sb),
                "eigenvalues": ev,
                "mass_squared": ev.iter().map(|e| e * k).collect::<Vec<_>>(),
            }),
        );
    }
    println!("all: {}", all.iter().map(|&e| fmt12(e)).collect::<Vec<_>>().join("  "));
    if show_matrix {
        println!("basis: {}", labels(&basis).join("  "));
        for row in matrix_rows(&full) {
            println!("  {}", row.iter().map(|&x| format!("{:>14}", fmt12(x))).collect::<String>());
        }
    }
    let monomials: Vec<Value> = spec
        .monomials
        .iter()
        .map(|m| json!({"index": m.index, "label": m.label(), "origin": m.origin, "coefficient": m.coefficient}))
        .collect();
    let mut results = json!({
        "eigenvalues": all,
        "mass_squared": all.iter().map(|e| e * k).collect::<Vec<_>>(),
        "sectors": sectors,
        "monomials": monomials,
    });
    if show_matrix {
        results["basis"] = json!(labels(&basis));
        results["matrix"] = json!(matrix_rows(&full));
    }
    finish(cfg, &spec, results)?;
    Ok(true)
}

fn parse_pivot(text: &str, k: usize) -> anyhow::Result<Pivot> {
    let state: FockState = text.parse().map_err(|e| usage(format!("pivot `{text}`: {e}")))?;
    if state.k_total() != k {
        return Err(usage(format!("pivot `{text}` has K = {}, run has K = {k}", state.k_total())));
    }
    Ok(Pivot::basis(state))
}

pub fn qksd(cfg: &RunConfig) -> anyhow::Result<bool> {
    let p = params(cfg)?;
    let spec = build_monomials(&p)?;
    print_header(&spec)?;
    let pivot = cfg.pivot.as_deref().map(|t| parse_pivot(t, cfg.k)).transpose()?;
    let sectors = match (cfg.sector, &pivot) {
        (Some(SectorChoice::Both) | None, Some(pv)) => vec![pv.sector()],
        (choice, _) => choice.unwrap_or(SectorChoice::Both).sectors(),
    };
    let mode = match cfg.shots {
        Some(shots) => ExpectationMode::Shots { shots, seed: cfg.seed },
        None => ExpectationMode::Exact,
    };
    let mut runs = Vec::new();
    for sector in sectors {
        if let Some(pv) = &pivot {
            if pv.sector() != sector {
                return Err(usage(format!("pivot lies in the {} sector, not {sector}", pv.sector())));
            }
        }
        let sb = sector_basis(cfg.k, sector)?;
        if sb.is_empty() {
            println!("{sector}: empty sector, skipped");
            continue;
        }
        let dim = cfg.krylov_dim.unwrap_or(sb.len());
        let report = run_qksd(&p, sector, pivot.clone(), dim, mode, cfg.eps_rel, Backend::Auto)?;
        let exact = sector_spectrum(&p, sector)?;
        let sol = &report.solution;
        println!(
            "{sector}: pivot {}  𝒦 = {dim}  retained {}  ground {}  (exact {})  conditioning {}",
            report.pivot,
            sol.retained_dim,
            fmt12(sol.ground()),
            fmt12(exact[0]),
            fmt12(sol.conditioning)
        );
        println!("  eigenvalues: {}", sol.eigenvalues.iter().map(|&e| fmt12(e)).collect::<Vec<_>>().join("  "));
        let mut run = serde_json::to_value(&report)?;
        run["ground"] = json!(sol.ground());
        run["exact_ground"] = json!(exact[0]);
        run["exact_spectrum"] = json!(exact);
        runs.push(run);
    }
    if let Some(first) = runs.first() {
        println!(
            "circuit: {} qubits, {} gates in U_H",
            first["qubits"],
            first["gates"]["total"]
        );
    }
    finish(cfg, &spec, json!({ "runs": runs }))?;
    Ok(true)
}

pub fn verify(cfg: &RunConfig, corrupt: Option<usize>, max_order: usize) -> anyhow::Result<bool> {
    let p = params(cfg)?;
    let oracle = build_monomials(&p)?;
    print_header(&oracle)?;
    let mut circuit_spec = oracle.clone();
    if let Some(j) = corrupt {
        let m = circuit_spec
            .monomials
            .get_mut(j)
            .ok_or_else(|| usage(format!("no monomial {j}")))?;
        m.coefficient *= 0.9;
    }
    let walk = WalkCircuits::new(&circuit_spec)?;
    let basis = enumerate_basis(cfg.k)?;
    let h = exact_matrix(&oracle, &basis);

    let block = projected_block(&walk.u_h, &basis, &walk.layout, Backend::Auto)?;
    let mut pairs = Vec::new();
    let mut be_max: f64 = 0.0;
    for (col, f) in basis.iter().enumerate() {
        for (row, g) in basis.iter().enumerate() {
            let got = block[(row, col)] * walk.scale;
            let residual = (got - h[(row, col)]).norm();
            be_max = be_max.max(residual);
            pairs.push(json!({
                "F": f.to_string(), "G": g.to_string(),
                "circuit": got.re, "oracle": h[(row, col)], "residual": residual,
            }));
        }
    }
    let be_ok = be_max <= VERIFY_TOL;
    println!(
        "block encoding: {} pairs, max |D·Ξ·⟨G|U_H|F⟩ − H_GF| = {:e}  {}",
        pairs.len(),
        be_max,
        if be_ok { "PASS" } else { "FAIL" }
    );

    let expected = chebyshev_matrices(&(&h / walk.scale), max_order);
    let blocks = chebyshev_blocks(&walk, &basis, max_order, Backend::Auto)?;
    let mut orders = Vec::new();
    let mut cheb_ok = true;
    for (n, (b, e)) in blocks.iter().zip(&expected).enumerate() {
        let residual = b
            .iter()
            .zip(e.iter())
            .map(|(z, x)| (z - x).norm())
            .fold(0.0, f64::max);
        cheb_ok &= residual <= VERIFY_TOL;
        orders.push(json!({"order": n, "max_residual": residual}));
    }
    let cheb_max = orders.iter().filter_map(|o| o["max_residual"].as_f64()).fold(0.0, f64::max);
    println!(
        "chebyshev T_0..T_{max_order}: max residual {:e}  {}",
        cheb_max,
        if cheb_ok { "PASS" } else { "FAIL" }
    );

    let checks = check_monomials(&circuit_spec, &oracle, &basis, Backend::Auto)?;
    let mut mono_ok = true;
    for c in &checks {
        if c.max_residual > VERIFY_TOL {
            mono_ok = false;
            println!("FAIL monomial j={} {} residual {:e}", c.index, c.label, c.max_residual);
        }
    }
    if mono_ok {
        println!("monomials: {} checked  PASS", checks.len());
    }
    let passed = be_ok && cheb_ok && mono_ok;
    println!("verify: {}", if passed { "PASS" } else { "FAIL" });
    let failing: Vec<Value> = checks
        .iter()
        .filter(|c| c.max_residual > VERIFY_TOL)
        .map(|c| json!({"index": c.index, "label": c.label}))
        .collect();
    let results = json!({
        "passed": passed,
        "tolerance": VERIFY_TOL,
        "block_encoding": {"passed": be_ok, "max_residual": be_max, "pairs": pairs},
        "chebyshev": {"passed": cheb_ok, "orders": orders},
        "monomials": {"passed": mono_ok, "checks": checks, "failing": failing},
        "gates": gate_counts(&walk.u_h),
    });
    finish(cfg, &circuit_spec, results)?;
    Ok(passed)
}

pub struct ScanRange {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub tol: f64,
}

fn write_csv(path: &Path, sector: Sector, rows: &[(f64, f64)]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["sector", "lambda_over_m2", "lowest_eigenvalue"])?;
    for (l, e) in rows {
        w.write_record([sector.to_string(), fmt12(*l), fmt12(*e)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn scan(cfg: &RunConfig, range: &ScanRange) -> anyhow::Result<bool> {
    let ScanRange { lo, hi, points, tol } = *range;
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(usage(format!("bracket ({lo}, {hi}) must satisfy lo < hi")));
    }
    if lo <= 0.0 {
        return Err(usage("bracket must lie at positive coupling"));
    }
    if points < 2 {
        return Err(usage("scan needs at least 2 points"));
    }
    if !(tol > 0.0) {
        return Err(usage("tol must be positive"));
    }
    let sector = match cfg.sector.unwrap_or(SectorChoice::Odd) {
        SectorChoice::Even => Sector::Even,
        SectorChoice::Odd => Sector::Odd,
        SectorChoice::Both => return Err(usage("scan needs --sector even or odd")),
    };
    let p = params(cfg)?;
    let spec = build_monomials(&p)?;
    print_header(&spec)?;
    let lambdas: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let lowest: Vec<f64> = lambdas
        .par_iter()
        .map(|&l| -> anyhow::Result<f64> { Ok(sector_spectrum(&ModelParams::new(cfg.k, l, cfg.m2)?, sector)?[0]) })
        .collect::<anyhow::Result<_>>()?;
    let rows: Vec<(f64, f64)> = lambdas.into_iter().zip(lowest).collect();
    println!("{sector} sector, lowest eigenvalue:");
    for (l, e) in &rows {
        println!("  λ/m² = {:<14} {}", fmt12(*l), fmt12(*e));
    }
    if let Some(path) = &cfg.csv {
        write_csv(path, sector, &rows)?;
    }
    let critical = find_critical_coupling(cfg.k, cfg.m2, sector, (lo, hi), tol);
    let table: Vec<Value> = rows.iter().map(|(l, e)| json!({"lambda": l, "lowest_eigenvalue": e})).collect();
    let mut results = json!({"sector": sector, "bracket": [lo, hi], "tol": tol, "table": table});
    match &critical {
        Ok(c) => {
            println!("critical λ/m² ≈ {}", fmt12(*c));
            results["critical"] = json!(c);
        }
        Err(e) => results["error"] = json!(e.to_string()),
    }
    finish(cfg, &spec, results)?;
    critical.context("critical-coupling search failed")?;
    Ok(true)
}
