//! Light-front Hamiltonian of (φ⁴)₂ in DLCQ.
//!
//! `H = H₁→₁ + H₂→₂ + H₃→₁ + H₁→₃`, normal ordered (the divergent mass
//! correction in `H₁→₁` is absorbed into `m²`). Every monomial is kept twice:
//! as a ladder-operator string with its plain coefficient `B_j`, which drives
//! the dense oracle matrix, and as a product of per-mode squeezed
//! combinations `W_k` with coefficient `B'_j`, which drives the circuits.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::fock::{enumerate_basis, max_occupations, FockState, Sector};
use crate::qksd::symmetric_eig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    /// Total longitudinal momentum K.
    pub k_total: usize,
    /// Mass parameter m² in MeV².
    pub m2: f64,
    /// Dimensionless coupling λ/m².
    pub lambda_over_m2: f64,
}

impl ModelParams {
    pub fn new(k_total: usize, lambda_over_m2: f64, m2: f64) -> Result<Self> {
        if k_total == 0 {
            return Err(Error::InvalidArgument("K must be at least 1".into()));
        }
        if !(m2 > 0.0 && m2.is_finite()) {
            return Err(Error::InvalidArgument(format!("m² must be positive, got {m2}")));
        }
        if !(lambda_over_m2 > 0.0 && lambda_over_m2.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "λ/m² must be positive, got {lambda_over_m2}"
            )));
        }
        Ok(Self { k_total, m2, lambda_over_m2 })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda_over_m2 * self.m2
    }

    /// Interaction prefactor `λ/(4π)`.
    fn coupling(&self) -> f64 {
        self.lambda() / (4.0 * PI)
    }
}

/// The eight per-mode products of squeezed operators, written normal
/// ordered (`b†…b†b…b`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum WKind {
    Plus,
    PlusPlus,
    PlusPlusPlus,
    Minus,
    MinusMinus,
    MinusMinusMinus,
    PlusMinus,
    PlusPlusMinusMinus,
}

impl WKind {
    pub const ALL: [WKind; 8] = [
        WKind::Plus,
        WKind::PlusPlus,
        WKind::PlusPlusPlus,
        WKind::Minus,
        WKind::MinusMinus,
        WKind::MinusMinusMinus,
        WKind::PlusMinus,
        WKind::PlusPlusMinusMinus,
    ];

    /// Kind with `creations` b† and `annihilations` b on a single mode.
    pub fn from_counts(creations: usize, annihilations: usize) -> Option<Self> {
        Some(match (creations, annihilations) {
            (1, 0) => WKind::Plus,
            (2, 0) => WKind::PlusPlus,
            (3, 0) => WKind::PlusPlusPlus,
            (0, 1) => WKind::Minus,
            (0, 2) => WKind::MinusMinus,
            (0, 3) => WKind::MinusMinusMinus,
            (1, 1) => WKind::PlusMinus,
            (2, 2) => WKind::PlusPlusMinusMinus,
            _ => return None,
        })
    }

    pub fn creations(self) -> usize {
        match self {
            WKind::Plus | WKind::PlusMinus => 1,
            WKind::PlusPlus | WKind::PlusPlusMinusMinus => 2,
            WKind::PlusPlusPlus => 3,
            _ => 0,
        }
    }

    pub fn annihilations(self) -> usize {
        match self {
            WKind::Minus | WKind::PlusMinus => 1,
            WKind::MinusMinus | WKind::PlusPlusMinusMinus => 2,
            WKind::MinusMinusMinus => 3,
            _ => 0,
        }
    }

    /// Change of the occupation.
    pub fn delta(self) -> i32 {
        self.creations() as i32 - self.annihilations() as i32
    }

    /// Occupations `[r_i, r_f]` on which the combination survives; `None`
    /// when every occupation up to `Λ` is a vanishing case.
    pub fn valid_range(self, lambda: usize) -> Option<(usize, usize)> {
        let (lo, hi) = match self {
            WKind::Plus => (0, lambda.checked_sub(1)?),
            WKind::PlusPlus => (0, lambda.checked_sub(2)?),
            WKind::PlusPlusPlus => (0, lambda.checked_sub(3)?),
            WKind::Minus | WKind::PlusMinus => (1, lambda),
            WKind::MinusMinus | WKind::PlusPlusMinusMinus => (2, lambda),
            WKind::MinusMinusMinus => (3, lambda),
        };
        (lo <= hi).then_some((lo, hi))
    }

    pub fn is_valid(self, r: usize, lambda: usize) -> bool {
        self.valid_range(lambda).is_some_and(|(lo, hi)| (lo..=hi).contains(&r))
    }

    /// Occupations in `[0, Λ]` outside the valid range.
    pub fn vanishing_cases(self, lambda: usize) -> Vec<usize> {
        (0..=lambda).filter(|&r| !self.is_valid(r, lambda)).collect()
    }

    /// Scaled normalization factor `ξ_r` for a valid occupation `r`.
    pub fn xi(self, r: usize, lambda: usize) -> f64 {
        let r = r as f64;
        let l = lambda as f64;
        match self {
            WKind::Plus => ((r + 1.0) / l).sqrt(),
            WKind::PlusPlus => ((r + 1.0) * (r + 2.0) / (l * l)).sqrt(),
            WKind::PlusPlusPlus => ((r + 1.0) * (r + 2.0) * (r + 3.0) / (l * l * l)).sqrt(),
            WKind::Minus => (r / l).sqrt(),
            WKind::MinusMinus => (r * (r - 1.0) / (l * l)).sqrt(),
            WKind::MinusMinusMinus => (r * (r - 1.0) * (r - 2.0) / (l * l * l)).sqrt(),
            WKind::PlusMinus => r / l,
            WKind::PlusPlusMinusMinus => r * (r - 1.0) / (l * l),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            WKind::Plus => "+",
            WKind::PlusPlus => "++",
            WKind::PlusPlusPlus => "+++",
            WKind::Minus => "-",
            WKind::MinusMinus => "--",
            WKind::MinusMinusMinus => "---",
            WKind::PlusMinus => "+-",
            WKind::PlusPlusMinusMinus => "++--",
        }
    }
}

/// Which piece of `H` a monomial comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Origin {
    H11,
    H22,
    H31,
    H13,
}

/// One normal-ordered monomial of `H`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Monomial {
    pub index: usize,
    pub origin: Origin,
    /// Mode of every creation operator.
    pub creations: Vec<usize>,
    /// Mode of every annihilation operator.
    pub annihilations: Vec<usize>,
    /// Coefficient `B_j` of the unsqueezed ladder string.
    pub ladder_coefficient: f64,
    /// Per-mode squeezed combinations, ascending in mode.
    pub factors: Vec<(usize, WKind)>,
    /// Coefficient `B'_j` of the squeezed product (MeV²).
    pub coefficient: f64,
}

impl Monomial {
    /// Table-style label such as `(-)_1(++)_2(-)_3`.
    pub fn label(&self) -> String {
        self.factors
            .iter()
            .map(|(k, w)| format!("({})_{k}", w.symbol()))
            .collect()
    }

    /// `Σ mode·Δ` over the factors; zero for momentum-conserving terms.
    pub fn momentum_transfer(&self) -> i64 {
        self.factors.iter().map(|&(k, w)| k as i64 * w.delta() as i64).sum()
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "j={} {} B'={}", self.index, self.label(), self.coefficient)
    }
}

/// Squeezed monomial list together with the block-encoding scale data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HamiltonianSpec {
    pub params: ModelParams,
    pub monomials: Vec<Monomial>,
    /// `Ξ = max_j B'_j`.
    pub xi_scale: f64,
    /// `D = 2^⌈log₂ M⌉`.
    pub index_dim: usize,
}

impl HamiltonianSpec {
    pub fn monomial_count(&self) -> usize {
        self.monomials.len()
    }

    /// Block-encoding normalization `D·Ξ`.
    pub fn scale(&self) -> f64 {
        self.index_dim as f64 * self.xi_scale
    }
}

/// Maps the per-mode operator counts of a monomial onto [`WKind`] factors.
pub fn group_operators(creations: &[usize], annihilations: &[usize]) -> Result<Vec<(usize, WKind)>> {
    let mut counts: std::collections::BTreeMap<usize, (usize, usize)> = Default::default();
    for &k in creations {
        counts.entry(k).or_default().0 += 1;
    }
    for &k in annihilations {
        counts.entry(k).or_default().1 += 1;
    }
    counts
        .into_iter()
        .map(|(k, (c, a))| {
            WKind::from_counts(c, a).map(|w| (k, w)).ok_or_else(|| {
                Error::Structural(format!(
                    "mode {k} carries {c} creation and {a} annihilation operators"
                ))
            })
        })
        .collect()
}

fn sym_norm2(modes: &[usize]) -> f64 {
    // N² for a multiset of modes: product of multiplicity factorials.
    let mut sorted = modes.to_vec();
    sorted.sort_unstable();
    let mut n2 = 1.0;
    let mut run = 1;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
            n2 *= run as f64;
        } else {
            run = 1;
        }
    }
    n2
}

/// All normal-ordered ladder strings of `H` as
/// `(origin, creations, annihilations, B_j)`.
fn ladder_terms(params: &ModelParams) -> Vec<(Origin, Vec<usize>, Vec<usize>, f64)> {
    let kk = params.k_total;
    let g = params.coupling();
    let mut out = Vec::new();

    for k in 1..=kk {
        out.push((Origin::H11, vec![k], vec![k], params.m2 / k as f64));
    }

    let pairs = |total: usize| -> Vec<(usize, usize)> {
        (1..=total / 2).map(|a| (a, total - a)).collect()
    };
    for total in 2..=kk {
        for &(k, l) in &pairs(total) {
            for &(m, n) in &pairs(total) {
                let b = g / (sym_norm2(&[k, l]) * sym_norm2(&[m, n]))
                    / ((k * l * m * n) as f64).sqrt();
                out.push((Origin::H22, vec![k, l], vec![m, n], b));
            }
        }
    }

    let mut triples = Vec::new();
    for k in 3..=kk {
        for l in 1..=k / 3 {
            for m in l..=(k - l) / 2 {
                let n = k - l - m;
                triples.push((k, l, m, n));
            }
        }
    }
    for &(k, l, m, n) in &triples {
        let b = g / sym_norm2(&[l, m, n]) / ((k * l * m * n) as f64).sqrt();
        out.push((Origin::H31, vec![k], vec![l, m, n], b));
    }
    for &(k, l, m, n) in &triples {
        let b = g / sym_norm2(&[l, m, n]) / ((k * l * m * n) as f64).sqrt();
        out.push((Origin::H13, vec![n, m, l], vec![k], b));
    }
    out
}

/// Squeezed coefficient `B'_j` computed directly from the mode content.
fn squeezed_coefficient(params: &ModelParams, origin: Origin, creations: &[usize], annihilations: &[usize]) -> f64 {
    let lam = |k: usize| (params.k_total / k) as f64;
    match origin {
        Origin::H11 => {
            let k = creations[0];
            params.m2 * lam(k) / k as f64
        }
        Origin::H22 => {
            let (k, l, m, n) = (creations[0], creations[1], annihilations[0], annihilations[1]);
            params.coupling() / (sym_norm2(creations) * sym_norm2(annihilations))
                * (lam(k) * lam(l) * lam(m) * lam(n) / (k * l * m * n) as f64).sqrt()
        }
        Origin::H31 | Origin::H13 => {
            let (single, triple) = if origin == Origin::H31 {
                (creations[0], annihilations)
            } else {
                (annihilations[0], creations)
            };
            let (l, m, n) = (triple[0], triple[1], triple[2]);
            params.coupling() / sym_norm2(triple)
                * (lam(single) * lam(l) * lam(m) * lam(n) / (single * l * m * n) as f64).sqrt()
        }
    }
}

/// Enumerates `H₁→₁`, `H₂→₂`, `H₃→₁`, `H₁→₃` (in that order) and groups
/// each monomial into squeezed per-mode combinations.
pub fn build_monomials(params: &ModelParams) -> Result<HamiltonianSpec> {
    let mut monomials = Vec::new();
    for (index, (origin, creations, annihilations, ladder_coefficient)) in
        ladder_terms(params).into_iter().enumerate()
    {
        let factors = group_operators(&creations, &annihilations)?;
        let coefficient = squeezed_coefficient(params, origin, &creations, &annihilations);
        monomials.push(Monomial {
            index,
            origin,
            creations,
            annihilations,
            ladder_coefficient,
            factors,
            coefficient,
        });
    }
    let xi_scale = monomials.iter().map(|m| m.coefficient.abs()).fold(0.0, f64::max);
    let index_dim = monomials.len().next_power_of_two();
    Ok(HamiltonianSpec { params: *params, monomials, xi_scale, index_dim })
}

/// Applies a ladder string (annihilators first, then creators) to a basis
/// state with the `√r`, `√(r+1)` factors.
pub fn apply_ladder(state: &FockState, creations: &[usize], annihilations: &[usize]) -> Option<(FockState, f64)> {
    let mut occ: std::collections::BTreeMap<usize, usize> = state.occupations().collect();
    let mut amp = 1.0;
    for &k in annihilations.iter().rev() {
        let r = occ.entry(k).or_default();
        if *r == 0 {
            return None;
        }
        amp *= (*r as f64).sqrt();
        *r -= 1;
    }
    for &k in creations.iter().rev() {
        let r = occ.entry(k).or_default();
        amp *= (*r as f64 + 1.0).sqrt();
        *r += 1;
    }
    let next = FockState::new(state.k_total(), occ).ok()?;
    Some((next, amp))
}

/// Dense matrix `⟨G|H|F⟩` over `basis`, built from the unsqueezed ladder
/// strings. This is the classical oracle for every circuit-level check.
pub fn exact_matrix(spec: &HamiltonianSpec, basis: &[FockState]) -> DMatrix<f64> {
    let position: HashMap<&FockState, usize> = basis.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let n = basis.len();
    let mut h = DMatrix::zeros(n, n);
    for (col, f) in basis.iter().enumerate() {
        for m in &spec.monomials {
            if let Some((g, amp)) = apply_ladder(f, &m.creations, &m.annihilations) {
                if let Some(&row) = position.get(&g) {
                    h[(row, col)] += m.ladder_coefficient * amp;
                }
            }
        }
    }
    h
}

/// Same matrix assembled from the squeezed factors and `B'_j`.
pub fn squeezed_matrix(spec: &HamiltonianSpec, basis: &[FockState]) -> DMatrix<f64> {
    let position: HashMap<&FockState, usize> = basis.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let lambdas = max_occupations(spec.params.k_total).expect("K ≥ 1 by construction");
    let n = basis.len();
    let mut h = DMatrix::zeros(n, n);
    for (col, f) in basis.iter().enumerate() {
        'mono: for m in &spec.monomials {
            let mut occ: Vec<(usize, usize)> = f.occupations().collect();
            let mut amp = m.coefficient;
            for &(k, w) in &m.factors {
                let lambda = lambdas[k - 1];
                let r = f.occupation(k);
                if !w.is_valid(r, lambda) {
                    continue 'mono;
                }
                amp *= w.xi(r, lambda);
                let new_r = (r as i64 + w.delta() as i64) as usize;
                occ.retain(|&(mode, _)| mode != k);
                occ.push((k, new_r));
            }
            let g = FockState::new(f.k_total(), occ).expect("momentum is conserved");
            h[(position[&g], col)] += amp;
        }
    }
    h
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn exact_spectrum(matrix: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(symmetric_eig(matrix)?.0)
}

/// Eigenvalues of `M² = K·H`.
pub fn mass_squared_spectrum(spec: &HamiltonianSpec, basis: &[FockState]) -> Result<Vec<f64>> {
    let k = spec.params.k_total as f64;
    Ok(exact_spectrum(&exact_matrix(spec, basis))?
        .into_iter()
        .map(|e| k * e)
        .collect())
}

/// Exact spectrum of one parity sector.
pub fn sector_spectrum(params: &ModelParams, sector: Sector) -> Result<Vec<f64>> {
    let spec = build_monomials(params)?;
    let basis: Vec<FockState> = enumerate_basis(params.k_total)?
        .into_iter()
        .filter(|s| s.sector() == sector)
        .collect();
    if basis.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "the {sector} sector is empty at K = {}",
            params.k_total
        )));
    }
    exact_spectrum(&exact_matrix(&spec, &basis))
}

/// Bisects the coupling at which the lowest eigenvalue of the sector
/// changes sign. Returns the midpoint of the final bracket, whose width is
/// at most `tol`.
pub fn find_critical_coupling(
    k_total: usize,
    m2: f64,
    sector: Sector,
    bracket: (f64, f64),
    tol: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) || lo <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "bracket ({lo}, {hi}) must satisfy 0 < lo < hi"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let lowest = |lambda: f64| -> Result<f64> {
        let params = ModelParams::new(k_total, lambda, m2)?;
        Ok(sector_spectrum(&params, sector)?[0])
    };
    let f_lo = lowest(lo)?;
    let f_hi = lowest(hi)?;
    if f_lo.signum() == f_hi.signum() || f_lo == 0.0 || f_hi == 0.0 {
        if f_lo == 0.0 {
            return Ok(lo);
        }
        if f_hi == 0.0 {
            return Ok(hi);
        }
        return Err(Error::Bracket { lo, hi, f_lo, f_hi });
    }
    let lo_sign = f_lo.signum();
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = lowest(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAMBDA_NEAR_CRITICAL: f64 = 92.4746;

    fn k4() -> HamiltonianSpec {
        build_monomials(&ModelParams::new(4, LAMBDA_NEAR_CRITICAL, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(4, 0.0, 1.0).is_err());
        assert!(ModelParams::new(4, 1.0, -1.0).is_err());
        assert!(ModelParams::new(4, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn wkind_ranges_partition_zero_to_lambda() {
        for w in WKind::ALL {
            for lambda in 1..=9 {
                let mut all: Vec<usize> = w.vanishing_cases(lambda);
                if let Some((lo, hi)) = w.valid_range(lambda) {
                    all.extend(lo..=hi);
                    for r in lo..=hi {
                        let xi = w.xi(r, lambda);
                        assert!(xi > 0.0 && xi <= 1.0 + 1e-15, "{w:?} r={r} Λ={lambda}: {xi}");
                    }
                }
                all.sort_unstable();
                assert_eq!(all, (0..=lambda).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn wkind_table_rows() {
        assert_eq!(WKind::Minus.vanishing_cases(4), vec![0]);
        assert_eq!(WKind::PlusPlus.valid_range(2), Some((0, 0)));
        assert_eq!(WKind::PlusPlus.vanishing_cases(2), vec![1, 2]);
        assert_eq!(WKind::PlusPlusPlus.valid_range(2), None);
        assert_eq!(WKind::PlusPlusPlus.vanishing_cases(5), vec![3, 4, 5]);
        assert_eq!(WKind::MinusMinusMinus.vanishing_cases(4), vec![0, 1, 2]);
        assert!((WKind::PlusPlus.xi(0, 2) - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((WKind::PlusMinus.xi(3, 4) - 0.75).abs() < 1e-15);
        assert_eq!(WKind::PlusPlusMinusMinus.delta(), 0);
        assert_eq!(WKind::MinusMinusMinus.delta(), -3);
    }

    #[test]
    fn xi_matches_sequential_ladder_actions() {
        // annihilate a times, then create c times, each scaled by 1/√Λ
        for w in WKind::ALL {
            for lambda in 1..=6 {
                if let Some((lo, hi)) = w.valid_range(lambda) {
                    for r in lo..=hi {
                        let mut amp = 1.0;
                        let mut occ = r as f64;
                        for _ in 0..w.annihilations() {
                            amp *= (occ / lambda as f64).sqrt();
                            occ -= 1.0;
                        }
                        for _ in 0..w.creations() {
                            amp *= ((occ + 1.0) / lambda as f64).sqrt();
                            occ += 1.0;
                        }
                        assert!((amp - w.xi(r, lambda)).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn group_operators_examples() {
        assert_eq!(
            group_operators(&[2, 2], &[1, 3]).unwrap(),
            vec![(1, WKind::Minus), (2, WKind::PlusPlus), (3, WKind::Minus)]
        );
        assert_eq!(
            group_operators(&[1, 1, 1], &[3]).unwrap(),
            vec![(1, WKind::PlusPlusPlus), (3, WKind::Minus)]
        );
        assert_eq!(group_operators(&[5], &[5]).unwrap(), vec![(5, WKind::PlusMinus)]);
        assert!(matches!(group_operators(&[1, 1], &[1]), Err(Error::Structural(_))));
    }

    #[test]
    fn grouping_never_fails_up_to_k20() {
        for k in 1..=20 {
            let spec = build_monomials(&ModelParams::new(k, 3.0, 1.0).unwrap()).unwrap();
            for m in &spec.monomials {
                assert_eq!(m.momentum_transfer(), 0);
                assert!(m.coefficient > 0.0);
                assert!(m.factors.windows(2).all(|p| p[0].0 < p[1].0));
            }
        }
    }

    #[test]
    fn k4_monomials_and_scale() {
        let spec = k4();
        assert_eq!(spec.monomial_count(), 14);
        assert!((spec.xi_scale - 29.4356).abs() < 1e-4);
        assert_eq!(spec.index_dim, 16);
        let find = |label: &str| {
            spec.monomials
                .iter()
                .find(|m| m.label() == label)
                .unwrap_or_else(|| panic!("missing {label}"))
                .coefficient
        };
        assert!((find("(+-)_1") - 4.0).abs() < 1e-12);
        assert!((find("(++--)_1") - 29.4356).abs() < 1e-4);
        assert!((find("(-)_1(++)_2(-)_3") - 4.24866).abs() < 1e-5);
    }

    #[test]
    fn k1_has_a_single_kinetic_term() {
        let spec = build_monomials(&ModelParams::new(1, 5.0, 1.0).unwrap()).unwrap();
        assert_eq!(spec.monomial_count(), 1);
        assert_eq!(spec.monomials[0].factors, vec![(1, WKind::PlusMinus)]);
        assert!((spec.monomials[0].coefficient - 1.0).abs() < 1e-15);
        assert_eq!(spec.index_dim, 1);
    }

    #[test]
    fn adjoint_pairs_share_coefficients() {
        for k in 3..=10 {
            let spec = build_monomials(&ModelParams::new(k, 7.0, 1.0).unwrap()).unwrap();
            let h31: Vec<_> = spec.monomials.iter().filter(|m| m.origin == Origin::H31).collect();
            let h13: Vec<_> = spec.monomials.iter().filter(|m| m.origin == Origin::H13).collect();
            assert_eq!(h31.len(), h13.len());
            for a in &h31 {
                let partner = h13
                    .iter()
                    .find(|b| {
                        let mut bc = b.creations.clone();
                        bc.sort_unstable();
                        let mut aa = a.annihilations.clone();
                        aa.sort_unstable();
                        bc == aa && b.annihilations == a.creations
                    })
                    .expect("adjoint present");
                assert_eq!(partner.coefficient, a.coefficient);
                assert_eq!(partner.ladder_coefficient, a.ladder_coefficient);
            }
        }
    }

    #[test]
    fn squeezed_and_unsqueezed_matrices_agree() {
        for k in 1..=6 {
            for &lambda in &[0.3, 1.0, 17.0, LAMBDA_NEAR_CRITICAL] {
                let spec = build_monomials(&ModelParams::new(k, lambda, 1.3).unwrap()).unwrap();
                let basis = enumerate_basis(k).unwrap();
                let a = exact_matrix(&spec, &basis);
                let b = squeezed_matrix(&spec, &basis);
                let scale = a.amax().max(1.0);
                assert!((&a - &b).amax() <= 1e-12 * scale, "K={k} λ={lambda}");
                assert!((&a - a.transpose()).amax() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn parity_blocks_are_decoupled() {
        for k in 2..=8 {
            let spec = build_monomials(&ModelParams::new(k, 50.0, 1.0).unwrap()).unwrap();
            let basis = enumerate_basis(k).unwrap();
            let h = exact_matrix(&spec, &basis);
            for (i, g) in basis.iter().enumerate() {
                for (j, f) in basis.iter().enumerate() {
                    if g.sector() != f.sector() {
                        assert_eq!(h[(i, j)], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn free_theory_is_diagonal() {
        // λ → 0: only the kinetic term survives, ⟨F|H|F⟩ = Σ m² r_k / k
        let params = ModelParams::new(4, 1e-300, 2.0).unwrap();
        let spec = build_monomials(&params).unwrap();
        let basis = enumerate_basis(4).unwrap();
        let h = exact_matrix(&spec, &basis);
        for (i, f) in basis.iter().enumerate() {
            let expected: f64 = f.occupations().map(|(k, r)| 2.0 * r as f64 / k as f64).sum();
            assert!((h[(i, i)] - expected).abs() < 1e-14);
            for j in 0..basis.len() {
                if i != j {
                    assert!(h[(i, j)].abs() < 1e-290);
                }
            }
        }
    }

    #[test]
    fn k4_spectrum() {
        let spec = k4();
        let basis = enumerate_basis(4).unwrap();
        let ev = exact_spectrum(&exact_matrix(&spec, &basis)).unwrap();
        let reference = [1.61752e-7, 0.958969, 4.21772, 13.7883, 26.6062];
        assert!((ev[0] - reference[0]).abs() < 1e-5);
        for (a, b) in ev.iter().zip(reference).skip(1) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
        let m2 = mass_squared_spectrum(&spec, &basis).unwrap();
        assert!((m2[1] - 4.0 * ev[1]).abs() < 1e-14);
    }

    #[test]
    fn small_spectra() {
        let id = DMatrix::<f64>::identity(2, 2);
        assert_eq!(exact_spectrum(&id).unwrap(), vec![1.0, 1.0]);

        // closed-form 2×2 eigenvalue of the odd block
        let (a, b, d): (f64, f64, f64) = (0.25, 1.83972, 13.5383);
        let m = DMatrix::from_row_slice(2, 2, &[a, b, b, d]);
        let lo = 0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b * b).sqrt();
        let ev = exact_spectrum(&m).unwrap();
        assert!((ev[0] - lo).abs() < 1e-12);
        assert!(ev[0].abs() < 1e-4);

        let free = build_monomials(&ModelParams::new(1, 1e-9, 1.0).unwrap()).unwrap();
        let m2 = mass_squared_spectrum(&free, &enumerate_basis(1).unwrap()).unwrap();
        assert!((m2[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn critical_coupling_bisection() {
        let c = find_critical_coupling(4, 1.0, Sector::Odd, (80.0, 100.0), 1e-3).unwrap();
        assert!((c - LAMBDA_NEAR_CRITICAL).abs() < 0.01, "{c}");

        let err = find_critical_coupling(4, 1.0, Sector::Odd, (1.0, 2.0), 1e-3).unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
        let err = find_critical_coupling(4, 1.0, Sector::Even, (1.0, 100.0), 1e-3).unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
        assert!(matches!(
            find_critical_coupling(4, 1.0, Sector::Odd, (90.0, 90.0), 1e-3),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn halving_tolerance_stays_within_previous_tolerance() {
        let mut tol = 1.0;
        let mut prev = find_critical_coupling(4, 1.0, Sector::Odd, (80.0, 100.0), tol).unwrap();
        for _ in 0..8 {
            let next = find_critical_coupling(4, 1.0, Sector::Odd, (80.0, 100.0), tol / 2.0).unwrap();
            assert!((next - prev).abs() <= tol);
            prev = next;
            tol /= 2.0;
        }
    }
}
