//! Krylov subspace diagonalization in the Chebyshev basis
//! `|ψ_i⟩ = T_i(H′)|ψ₀⟩`.
//!
//! Both projected matrices follow from the scalar moments `⟨T_n(H′)⟩₀`
//! through `T_i T_j = (T_{i+j} + T_{|i−j|})/2`, so the quantum side only has
//! to supply `2𝒦` expectation values.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::blockenc::{gate_counts, GateCounts, WalkCircuits};
use crate::fock::{sector_basis, FockState, Sector};
use crate::hamiltonian::{build_monomials, ModelParams};
use crate::simulator::{chebyshev_expectations, hadamard_chebyshev_estimates, Backend, Pivot};
use crate::{Error, Result};

/// Default relative cutoff on overlap eigenvalues.
pub const DEFAULT_EPS_REL: f64 = 1e-8;

/// Ascending eigenvalues and the matching orthonormal eigenvectors (as
/// columns) of a symmetric matrix.
pub fn symmetric_eig(matrix: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if !matrix.is_square() {
        return Err(Error::InvalidArgument(format!(
            "{}×{} matrix is not square",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let n = matrix.nrows();
    let norm = matrix.amax().max(f64::MIN_POSITIVE);
    let asym = (matrix - matrix.transpose()).amax();
    if asym > 1e-10 * norm.max(1.0) {
        return Err(Error::InvalidArgument(format!("matrix is not symmetric (deviation {asym:e})")));
    }
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let sym = (matrix + matrix.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Projected `H′` and overlap `S` in the Chebyshev Krylov basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KrylovMatrices {
    #[serde(serialize_with = "rows")]
    pub hp: DMatrix<f64>,
    #[serde(serialize_with = "rows")]
    pub s: DMatrix<f64>,
    pub expectations: Vec<f64>,
    /// `D·Ξ` in MeV².
    pub scale: f64,
    pub dim: usize,
}

fn rows<S: serde::Serializer>(m: &DMatrix<f64>, ser: S) -> std::result::Result<S::Ok, S::Error> {
    let nested: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    nested.serialize(ser)
}

/// Fills `H′_ij` and `S_ij` from `⟨T_0⟩ … ⟨T_{2𝒦−1}⟩`.
pub fn build_krylov_matrices(expectations: &[f64], dim: usize, scale: f64) -> Result<KrylovMatrices> {
    if dim == 0 {
        return Err(Error::InvalidArgument("Krylov dimension must be at least 1".into()));
    }
    if expectations.len() < 2 * dim {
        return Err(Error::InvalidArgument(format!(
            "dimension {dim} needs orders 0..={}, got {} values",
            2 * dim - 1,
            expectations.len()
        )));
    }
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument("scale must be positive".into()));
    }
    let t = |n: i64| expectations[n.unsigned_abs() as usize];
    // evaluated on i ≥ j so both triangles carry identical bits
    let hp = DMatrix::from_fn(dim, dim, |i, j| {
        let (i, j) = (i.max(j) as i64, i.min(j) as i64);
        0.25 * (t(i + j + 1) + t(i + j - 1) + t(i - j + 1) + t(i - j - 1))
    });
    let s = DMatrix::from_fn(dim, dim, |i, j| {
        let (i, j) = (i.max(j) as i64, i.min(j) as i64);
        0.5 * (t(i + j) + t(i - j))
    });
    Ok(KrylovMatrices { hp, s, expectations: expectations[..2 * dim].to_vec(), scale, dim })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GevpSolution {
    /// Ascending eigenvalues in MeV².
    pub eigenvalues: Vec<f64>,
    pub retained_dim: usize,
    /// Absolute cutoff `ε_rel·σ_max` applied to the overlap spectrum.
    pub threshold: f64,
    /// Overlap eigenvalues, ascending.
    pub overlap_spectrum: Vec<f64>,
    /// `𝒦(1 + |ℰ₀|)/σ_min` over the retained overlap eigenvalues: to first
    /// order, entry errors of size `δ` in `H′` and `S` move `ℰ₀` by at most
    /// this times `δ`.
    pub conditioning: f64,
}

impl GevpSolution {
    pub fn ground(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Solves `H′φ = ℰSφ` after canonical orthogonalization of `S`.
pub fn solve_gevp(km: &KrylovMatrices, eps_rel: f64) -> Result<GevpSolution> {
    if !(eps_rel >= 0.0) {
        return Err(Error::InvalidArgument(format!("ε_rel must be non-negative, got {eps_rel}")));
    }
    let (sigma, v) = symmetric_eig(&km.s)?;
    let sigma_max = sigma.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = eps_rel * sigma_max;
    let keep: Vec<usize> = (0..sigma.len()).filter(|&i| sigma[i] > threshold && sigma[i] > 0.0).collect();
    if keep.is_empty() {
        return Err(Error::DegenerateSubspace { threshold });
    }
    let x = DMatrix::from_fn(km.dim, keep.len(), |r, c| v[(r, keep[c])] / sigma[keep[c]].sqrt());
    let reduced = x.transpose() * &km.hp * &x;
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let (values, _) = symmetric_eig(&reduced)?;
    let sigma_min = keep.iter().map(|&i| sigma[i]).fold(f64::INFINITY, f64::min);
    let conditioning = km.dim as f64 * (1.0 + values[0].abs()) / sigma_min;
    Ok(GevpSolution {
        eigenvalues: values.iter().map(|e| e * km.scale).collect(),
        retained_dim: keep.len(),
        threshold,
        overlap_spectrum: sigma,
        conditioning,
    })
}

/// How the Chebyshev moments are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpectationMode {
    Exact,
    Shots { shots: u64, seed: u64 },
}

/// Lowest-index basis state of the sector.
pub fn default_pivot(k_total: usize, sector: Sector) -> Result<FockState> {
    sector_basis(k_total, sector)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::InvalidArgument(format!("the {sector} sector is empty at K = {k_total}")))
}

/// Everything produced by one QKSD run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QksdReport {
    pub params: ModelParams,
    pub sector: Sector,
    pub pivot: String,
    pub mode: ExpectationMode,
    pub eps_rel: f64,
    pub qubits: usize,
    pub monomials: usize,
    pub index_dim: usize,
    pub xi_scale: f64,
    pub gates: GateCounts,
    pub krylov: KrylovMatrices,
    pub solution: GevpSolution,
}

/// Full pipeline: Hamiltonian, walk circuits, Chebyshev moments, GEVP.
pub fn run_qksd(
    params: &ModelParams,
    sector: Sector,
    pivot: Option<Pivot>,
    dim: usize,
    mode: ExpectationMode,
    eps_rel: f64,
    backend: Backend,
) -> Result<QksdReport> {
    if dim == 0 {
        return Err(Error::InvalidArgument("Krylov dimension must be at least 1".into()));
    }
    let pivot = match pivot {
        Some(p) => p,
        None => Pivot::basis(default_pivot(params.k_total, sector)?),
    };
    if pivot.k_total() != params.k_total {
        return Err(Error::InvalidArgument(format!(
            "pivot has K = {}, run has K = {}",
            pivot.k_total(),
            params.k_total
        )));
    }
    if pivot.sector() != sector {
        return Err(Error::InvalidArgument(format!(
            "pivot lies in the {} sector, not {sector}",
            pivot.sector()
        )));
    }
    let spec = build_monomials(params)?;
    let walk = WalkCircuits::new(&spec)?;
    let max_order = 2 * dim - 1;
    let expectations = match mode {
        ExpectationMode::Exact => chebyshev_expectations(&walk, &pivot, max_order, backend)?,
        ExpectationMode::Shots { shots, seed } => {
            hadamard_chebyshev_estimates(&walk, &pivot, max_order, shots, seed, backend)?
        }
    };
    let krylov = build_krylov_matrices(&expectations, dim, walk.scale)?;
    let solution = solve_gevp(&krylov, eps_rel)?;
    let pivot_label = pivot
        .terms()
        .iter()
        .map(|(s, w)| if pivot.terms().len() == 1 { s.to_string() } else { format!("({w})|{s}⟩") })
        .collect::<Vec<_>>()
        .join(" + ");
    Ok(QksdReport {
        params: *params,
        sector,
        pivot: pivot_label,
        mode,
        eps_rel,
        qubits: walk.num_qubits(),
        monomials: spec.monomial_count(),
        index_dim: spec.index_dim,
        xi_scale: spec.xi_scale,
        gates: gate_counts(&walk.u_h),
        krylov,
        solution,
    })
}

/// Ground-state estimate and the rest of the GEVP solution.
pub fn qksd_ground_energy(
    params: &ModelParams,
    sector: Sector,
    pivot: Option<Pivot>,
    dim: usize,
    mode: ExpectationMode,
    eps_rel: f64,
) -> Result<GevpSolution> {
    Ok(run_qksd(params, sector, pivot, dim, mode, eps_rel, Backend::Auto)?.solution)
}
