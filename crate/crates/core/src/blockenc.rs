//! Walk-based block encoding of `H′ = H/(D·Ξ)` and its Chebyshev circuits.
//!
//! For a basis state `|F⟩` the forward preparation spreads the index
//! register over all monomials, lets monomial `j` act on the system through
//! its per-mode modules and stores the coefficient ratio `B′_j/Ξ` as an
//! amplitude on `me`. Undoing the index superposition and projecting every
//! ancilla onto `|0⟩` leaves `⟨G|H|F⟩/(D·Ξ)`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::circuit::{
    decrement, increment, reflection_about_zero, value_controls, Circuit, Control, Gate, GateKind,
};
use crate::fock::{build_layout, RegisterLayout};
use crate::hamiltonian::{apply_ladder, HamiltonianSpec, WKind};
use crate::simulator::{Backend, QuantumState, SparseState, StateVector};
use crate::{Error, Result};

/// Walk unitary, its inverse and the ancilla reflection.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkCircuits {
    pub u_h: Circuit,
    pub u_h_dag: Circuit,
    pub reflection: Circuit,
    pub layout: RegisterLayout,
    /// `D·Ξ` in MeV².
    pub scale: f64,
}

impl WalkCircuits {
    pub fn new(spec: &HamiltonianSpec) -> Result<Self> {
        let layout = build_layout(spec.params.k_total, spec.monomial_count())?;
        walk_unitary(spec, &layout)
    }

    pub fn num_qubits(&self) -> usize {
        self.layout.num_qubits()
    }
}

/// Rotation angle that leaves amplitude `x` on `|0⟩`.
fn angle(x: f64) -> f64 {
    2.0 * x.clamp(-1.0, 1.0).acos()
}

fn flip_values(kind: WKind, lambda: usize, width: usize, full_register: bool) -> Vec<usize> {
    let top = if full_register { (1usize << width) - 1 } else { lambda };
    (0..=top).filter(|&r| !kind.is_valid(r, lambda)).collect()
}

/// Circuit of one `W_k` factor on `s_k` and `ph_k`.
///
/// Every register value outside the valid range flips `ph_k`, including the
/// unphysical values above `Λ_k` that the unconditioned adders can produce
/// on discarded branches. Flagging only `r ≤ Λ_k` lets a wrapped value pass
/// as a clean state on a later walk step, which breaks the Chebyshev
/// products.
pub fn module_for(kind: WKind, mode: usize, layout: &RegisterLayout) -> Result<Circuit> {
    module_with_flips(kind, mode, layout, true)
}

pub(crate) fn module_with_flips(
    kind: WKind,
    mode: usize,
    layout: &RegisterLayout,
    full_register: bool,
) -> Result<Circuit> {
    let lambda = layout.max_occupation(mode)?;
    let s: Vec<usize> = layout.occupation_qubits(mode)?.collect();
    let ph = layout.phase_qubit(mode)?;
    let mut c = Circuit::new(layout.num_qubits());
    for r in flip_values(kind, lambda, s.len(), full_register) {
        c.push(Gate::new(GateKind::PauliX, ph, value_controls(s.iter().copied(), r as u64))?)?;
    }
    if let Some((lo, hi)) = kind.valid_range(lambda) {
        for r in lo..=hi {
            let theta = angle(kind.xi(r, lambda));
            c.push(Gate::new(GateKind::RotY(theta), ph, value_controls(s.iter().copied(), r as u64))?)?;
        }
    }
    let step = if kind.delta() > 0 { increment(&s)? } else { decrement(&s)? };
    for _ in 0..kind.delta().unsigned_abs() {
        c.append(&step);
    }
    Ok(c)
}

fn check_layout(spec: &HamiltonianSpec, layout: &RegisterLayout) -> Result<()> {
    if layout.k_total() != spec.params.k_total
        || layout.monomial_count() != spec.monomial_count()
        || layout.index_dim() != spec.index_dim
    {
        return Err(Error::InvalidArgument(format!(
            "layout (K = {}, M = {}) does not fit the Hamiltonian (K = {}, M = {})",
            layout.k_total(),
            layout.monomial_count(),
            spec.params.k_total,
            spec.monomial_count()
        )));
    }
    Ok(())
}

/// Forward walk preparation acting on `|F⟩_s|0⟩_a`.
pub fn forward_prep(spec: &HamiltonianSpec, layout: &RegisterLayout) -> Result<Circuit> {
    forward_prep_with_flips(spec, layout, true)
}

fn forward_prep_with_flips(spec: &HamiltonianSpec, layout: &RegisterLayout, full_register: bool) -> Result<Circuit> {
    check_layout(spec, layout)?;
    let n = layout.num_qubits();
    let (me, ac) = (layout.me_qubit(), layout.ac_qubit());
    let mut c = Circuit::new(n);
    c.push(Gate::x(ac))?;
    for q in layout.id_qubits() {
        c.push(Gate::h(q))?;
    }
    for m in &spec.monomials {
        let sel: Vec<Control> = value_controls(layout.id_qubits(), m.index as u64);
        for &(mode, kind) in &m.factors {
            c.append(&module_with_flips(kind, mode, layout, full_register)?.controlled(&sel)?);
        }
        let rho = m.coefficient / spec.xi_scale;
        // β_j = arg ρ_j vanishes for real positive coefficients
        let beta = if rho < 0.0 { std::f64::consts::PI } else { 0.0 };
        c.push(Gate::new(GateKind::Phase(beta), me, sel.clone())?)?;
        c.push(Gate::new(GateKind::RotY(angle(rho.abs())), me, sel.clone())?)?;
        c.push(Gate::new(GateKind::PauliX, ac, sel)?)?;
    }
    Ok(c)
}

fn assemble(spec: &HamiltonianSpec, layout: &RegisterLayout, forward: Circuit) -> Result<WalkCircuits> {
    let mut u_h = forward;
    for q in layout.id_qubits() {
        u_h.push(Gate::h(q))?;
    }
    let reflection = reflection_about_zero(&layout.ancilla_qubits())?.with_num_qubits(layout.num_qubits())?;
    Ok(WalkCircuits {
        u_h_dag: u_h.inverse(),
        u_h,
        reflection,
        layout: layout.clone(),
        scale: spec.scale(),
    })
}

/// `U_H`: forward preparation followed by the index diffusion.
pub fn walk_unitary(spec: &HamiltonianSpec, layout: &RegisterLayout) -> Result<WalkCircuits> {
    assemble(spec, layout, forward_prep(spec, layout)?)
}

/// Walk built with vanishing flips restricted to `r ≤ Λ_k`.
#[cfg(test)]
pub(crate) fn walk_unitary_physical_flips(spec: &HamiltonianSpec) -> Result<WalkCircuits> {
    let layout = build_layout(spec.params.k_total, spec.monomial_count())?;
    assemble(spec, &layout, forward_prep_with_flips(spec, &layout, false)?)
}

/// Circuit whose all-zero-ancilla block is `T_n(H′)`: `n` rounds of the
/// reflection followed alternately by `U_H` and `U_H†`.
pub fn chebyshev_circuit(walk: &WalkCircuits, order: usize) -> Circuit {
    let mut c = Circuit::new(walk.num_qubits());
    for step in 0..order {
        c.append(&walk.reflection);
        c.append(if step % 2 == 0 { &walk.u_h } else { &walk.u_h_dag });
    }
    c
}

/// `T_0 … T_n` of a symmetric matrix by the three-term recurrence.
pub fn chebyshev_matrices(h: &DMatrix<f64>, max_order: usize) -> Vec<DMatrix<f64>> {
    let n = h.nrows();
    let mut out = vec![DMatrix::identity(n, n)];
    if max_order >= 1 {
        out.push(h.clone());
    }
    for k in 2..=max_order {
        let next = 2.0 * h * &out[k - 1] - &out[k - 2];
        out.push(next);
    }
    out
}

/// Gate totals of the walk unitary by kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct GateCounts {
    pub total: usize,
    pub pauli_x: usize,
    pub hadamard: usize,
    pub rot_y: usize,
    pub phase: usize,
}

pub fn gate_counts(circuit: &Circuit) -> GateCounts {
    let mut g = GateCounts { total: circuit.len(), ..Default::default() };
    for gate in circuit.gates() {
        match gate.kind {
            GateKind::PauliX => g.pauli_x += 1,
            GateKind::Hadamard => g.hadamard += 1,
            GateKind::RotY(_) => g.rot_y += 1,
            GateKind::Phase(_) => g.phase += 1,
        }
    }
    g
}

/// Largest disagreement between the forward branch of one monomial and its
/// ladder-string oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonomialCheck {
    pub index: usize,
    pub label: String,
    pub max_residual: f64,
}

/// For every monomial `j` and basis pair `(F, G)`, compares the amplitude of
/// `|G⟩_s|0⟩_{ph,me,ac}|j⟩_id` after the forward preparation with
/// `B_j ⟨G|a†…a…|F⟩/(√D·Ξ)` taken from `oracle`. Residuals are in units of
/// the matrix element, i.e. multiplied by `√D·Ξ`.
pub fn check_monomials(
    spec: &HamiltonianSpec,
    oracle: &HamiltonianSpec,
    basis: &[crate::fock::FockState],
    backend: Backend,
) -> Result<Vec<MonomialCheck>> {
    if spec.monomial_count() != oracle.monomial_count() {
        return Err(Error::InvalidArgument("monomial lists differ in length".into()));
    }
    let layout = build_layout(spec.params.k_total, spec.monomial_count())?;
    let forward = forward_prep(spec, &layout)?;
    let id_start = layout.id_qubits().start;
    let norm = (spec.index_dim as f64).sqrt() * spec.xi_scale;
    let mut checks: Vec<MonomialCheck> = oracle
        .monomials
        .iter()
        .map(|m| MonomialCheck { index: m.index, label: m.label(), max_residual: 0.0 })
        .collect();
    for f in basis {
        let start = layout.state_index(f)?;
        let outputs: Vec<(u64, num_complex::Complex64)> = if backend_dense(&layout, backend) {
            let mut s = StateVector::basis(layout.num_qubits(), start)?;
            s.run(&forward)?;
            collect_outputs(&s, basis, &layout, spec.monomial_count())?
        } else {
            let mut s = SparseState::basis(layout.num_qubits(), start)?;
            s.run(&forward)?;
            collect_outputs(&s, basis, &layout, spec.monomial_count())?
        };
        for (check, m) in checks.iter_mut().zip(&oracle.monomials) {
            let target = apply_ladder(f, &m.creations, &m.annihilations);
            for g in basis {
                let idx = layout.state_index(g)? | (m.index as u64) << id_start;
                let got = outputs.iter().find(|(i, _)| *i == idx).map(|(_, a)| *a).unwrap_or_default();
                let expected = match &target {
                    Some((t, amp)) if t == g => m.ladder_coefficient * amp,
                    _ => 0.0,
                };
                let residual = (got * norm - expected).norm();
                check.max_residual = check.max_residual.max(residual);
            }
        }
    }
    Ok(checks)
}

fn backend_dense(layout: &RegisterLayout, backend: Backend) -> bool {
    match backend {
        Backend::Dense => true,
        Backend::Sparse => false,
        Backend::Auto => layout.num_qubits() <= crate::simulator::AUTO_DENSE_QUBITS,
    }
}

fn collect_outputs<S: QuantumState>(
    s: &S,
    basis: &[crate::fock::FockState],
    layout: &RegisterLayout,
    monomials: usize,
) -> Result<Vec<(u64, num_complex::Complex64)>> {
    let id_start = layout.id_qubits().start;
    let mut out = Vec::with_capacity(basis.len() * monomials);
    for j in 0..monomials as u64 {
        for g in basis {
            let idx = layout.state_index(g)? | j << id_start;
            out.push((idx, s.amplitude(idx)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{enumerate_basis, FockState};
    use crate::hamiltonian::{build_monomials, exact_matrix, ModelParams};
    use crate::simulator::{chebyshev_blocks, projected_block};
    use std::f64::consts::PI;

    fn spec(k: usize, lambda: f64) -> HamiltonianSpec {
        build_monomials(&ModelParams::new(k, lambda, 1.0).unwrap()).unwrap()
    }

    fn rotation_angles(c: &Circuit) -> Vec<(u64, f64)> {
        c.gates()
            .iter()
            .filter_map(|g| match g.kind {
                GateKind::RotY(t) => {
                    let r = g.controls.iter().enumerate().fold(0u64, |acc, (i, ctl)| acc | (ctl.state as u64) << i);
                    Some((r, t))
                }
                _ => None,
            })
            .collect()
    }

    #[test]
    fn module_minus_on_mode_one() {
        let layout = build_layout(4, 14).unwrap();
        let c = module_for(WKind::Minus, 1, &layout).unwrap();
        let angles = rotation_angles(&c);
        assert_eq!(angles.len(), 4);
        assert!((angles[0].1 - 2.0 * PI / 3.0).abs() < 1e-14);
        assert_eq!(angles[3], (4, 0.0));
        // flips for r = 0 and the unphysical 5, 6, 7; one decrement of 3 gates
        let flips = c.gates().iter().filter(|g| g.kind == GateKind::PauliX && g.target == layout.phase_qubit(1).unwrap()).count();
        assert_eq!(flips, 4);
        assert_eq!(c.len(), 4 + 4 + 3);
        let physical = module_with_flips(WKind::Minus, 1, &layout, false).unwrap();
        assert_eq!(physical.len(), 1 + 4 + 3);
    }

    #[test]
    fn module_plus_plus_on_mode_two() {
        let layout = build_layout(4, 14).unwrap();
        let c = module_for(WKind::PlusPlus, 2, &layout).unwrap();
        let angles = rotation_angles(&c);
        assert_eq!(angles.len(), 1);
        assert!((angles[0].1 - PI / 2.0).abs() < 1e-14);
        // two increments on the 2-qubit register
        let incs = c.gates().iter().filter(|g| g.target != layout.phase_qubit(2).unwrap()).count();
        assert_eq!(incs, 4);
    }

    #[test]
    fn module_plus_minus_has_no_arithmetic() {
        let layout = build_layout(4, 14).unwrap();
        let c = module_for(WKind::PlusMinus, 1, &layout).unwrap();
        let ph = layout.phase_qubit(1).unwrap();
        assert!(c.gates().iter().all(|g| g.target == ph));
        for (r, t) in rotation_angles(&c) {
            assert!((t - 2.0 * (r as f64 / 4.0).acos()).abs() < 1e-14);
        }
        assert!(module_for(WKind::Plus, 5, &layout).is_err());
    }

    #[test]
    fn module_acts_as_squeezed_operator() {
        // ⟨r+Δ, ph=0| module |r, 0⟩ = ξ_r on valid r and 0 otherwise
        let layout = build_layout(6, 1).unwrap();
        for kind in WKind::ALL {
            for mode in [1, 2] {
                let c = module_for(kind, mode, &layout).unwrap();
                let lambda = layout.max_occupation(mode).unwrap();
                let s = layout.occupation_qubits(mode).unwrap();
                let ph = layout.phase_qubit(mode).unwrap();
                for r in 0..1usize << s.len() {
                    let mut st = StateVector::basis(layout.num_qubits(), (r as u64) << s.start).unwrap();
                    st.run(&c).unwrap();
                    let survive = st.probability(1 << ph, 0);
                    let expected = if kind.is_valid(r, lambda) { kind.xi(r, lambda).powi(2) } else { 0.0 };
                    assert!((survive - expected).abs() < 1e-14, "{kind:?} k={mode} r={r}");
                    if kind.is_valid(r, lambda) {
                        let to = (r as i64 + kind.delta() as i64) as u64;
                        let a = st.amplitude(to << s.start);
                        assert!((a.re - kind.xi(r, lambda)).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn forward_prep_structure() {
        let spec = spec(4, 92.4746);
        let layout = build_layout(4, 14).unwrap();
        let c = forward_prep(&spec, &layout).unwrap();
        let id: Vec<usize> = layout.id_qubits().collect();
        let ac_flips: Vec<u64> = c
            .gates()
            .iter()
            .filter(|g| g.target == layout.ac_qubit() && !g.controls.is_empty())
            .map(|g| g.controls.iter().zip(&id).fold(0u64, |acc, (ctl, _)| acc | (ctl.state as u64) << (ctl.qubit - id[0])))
            .collect();
        assert_eq!(ac_flips, (0..14).collect::<Vec<_>>());
        // the monomial with B' = Ξ leaves me untouched
        let top = spec.monomials.iter().position(|m| m.coefficient == spec.xi_scale).unwrap();
        let me_rots: Vec<f64> = c
            .gates()
            .iter()
            .filter_map(|g| match g.kind {
                GateKind::RotY(t) if g.target == layout.me_qubit() => Some(t),
                _ => None,
            })
            .collect();
        assert_eq!(me_rots.len(), 14);
        assert_eq!(me_rots[top], 0.0);
    }

    #[test]
    fn walk_unitary_k4_entries() {
        let spec = spec(4, 92.4746);
        let walk = WalkCircuits::new(&spec).unwrap();
        assert_eq!(walk.num_qubits(), 17);
        assert!((walk.scale - 470.9696).abs() < 1e-3);
        let f: FockState = "3^1,1^1".parse().unwrap();
        let g: FockState = "2^2".parse().unwrap();
        let odd: FockState = "4^1".parse().unwrap();
        let e = crate::simulator::blockencoded_element(&walk.u_h, &f, &g, &walk.layout, Backend::Dense).unwrap();
        assert!((e.re * walk.scale - 1.50213).abs() < 1e-4);
        assert!((e.re - 3.18945e-3).abs() < 1e-7);
        let cross = crate::simulator::blockencoded_element(&walk.u_h, &odd, &g, &walk.layout, Backend::Dense).unwrap();
        assert!(cross.norm() < 1e-12);
        let diag = crate::simulator::blockencoded_element(&walk.u_h, &odd, &odd, &walk.layout, Backend::Dense).unwrap();
        assert!((diag.re * walk.scale - 0.25).abs() < 1e-10);
    }

    #[test]
    fn block_encoding_identity() {
        for k in 2..=4 {
            for lambda in [1.0, 10.0, 92.4746] {
                let spec = spec(k, lambda);
                let walk = WalkCircuits::new(&spec).unwrap();
                let basis = enumerate_basis(k).unwrap();
                let block = projected_block(&walk.u_h, &basis, &walk.layout, Backend::Dense).unwrap();
                let oracle = exact_matrix(&spec, &basis);
                for i in 0..basis.len() {
                    for j in 0..basis.len() {
                        let got = block[(i, j)] * walk.scale;
                        assert!((got.re - oracle[(i, j)]).abs() < 1e-10 && got.im.abs() < 1e-10, "K={k} λ={lambda} ({i},{j})");
                    }
                }
                let sv = block.singular_values();
                assert!(sv.iter().all(|&s| s <= 1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn chebyshev_equivalence_k3() {
        let spec = spec(3, 10.0);
        let walk = WalkCircuits::new(&spec).unwrap();
        let basis = enumerate_basis(3).unwrap();
        let h = exact_matrix(&spec, &basis) / walk.scale;
        let expected = chebyshev_matrices(&h, 8);
        let blocks = chebyshev_blocks(&walk, &basis, 8, Backend::Dense).unwrap();
        for (n, (b, e)) in blocks.iter().zip(&expected).enumerate() {
            let err = b.map(|z| z.re).zip_map(e, |a, b| (a - b).abs()).max();
            let imag = b.map(|z| z.im.abs()).max();
            assert!(err < 1e-10 && imag < 1e-10, "T_{n}: {err}");
        }
        // explicit gate-level circuit agrees with the stepped evaluation
        let c3 = chebyshev_circuit(&walk, 3);
        let b3 = projected_block(&c3, &basis, &walk.layout, Backend::Dense).unwrap();
        assert!((b3 - &blocks[3]).iter().all(|z| z.norm() < 1e-12));
        assert!(chebyshev_circuit(&walk, 0).is_empty());
    }

    #[test]
    fn physical_only_flips_break_chebyshev_products() {
        // At K = 6 the mode-1 register has room for 7 and wrapped values
        // leak back into the projected block after a few walk steps.
        let spec = spec(6, 10.0);
        let basis = enumerate_basis(6).unwrap();
        let h = exact_matrix(&spec, &basis);
        let full = WalkCircuits::new(&spec).unwrap();
        let partial = walk_unitary_physical_flips(&spec).unwrap();
        let expected = chebyshev_matrices(&(h / full.scale), 4);
        let err = |w: &WalkCircuits| -> Vec<f64> {
            chebyshev_blocks(w, &basis, 4, Backend::Dense)
                .unwrap()
                .iter()
                .zip(&expected)
                .map(|(b, e)| b.map(|z| z.re).zip_map(e, |a, b| (a - b).abs()).max())
                .collect()
        };
        let good = err(&full);
        let bad = err(&partial);
        assert!(good.iter().all(|&e| e < 1e-10), "{good:?}");
        // both agree on T_1, the physical-only variant diverges later
        assert!(bad[1] < 1e-10);
        assert!(bad.iter().skip(2).any(|&e| e > 1e-8), "{bad:?}");
    }

    #[test]
    fn monomial_checks_pass_and_locate_corruption() {
        let spec = spec(3, 10.0);
        let basis = enumerate_basis(3).unwrap();
        let checks = check_monomials(&spec, &spec, &basis, Backend::Dense).unwrap();
        assert!(checks.iter().all(|c| c.max_residual < 1e-10));
        let mut bad = spec.clone();
        bad.monomials[2].coefficient *= 0.9;
        let checks = check_monomials(&bad, &spec, &basis, Backend::Dense).unwrap();
        let failing: Vec<usize> = checks.iter().filter(|c| c.max_residual > 1e-10).map(|c| c.index).collect();
        assert_eq!(failing, vec![2]);
    }

    #[test]
    fn gate_count_growth() {
        let counts: Vec<(usize, usize)> = [2usize, 4, 6, 8]
            .iter()
            .map(|&k| (k, WalkCircuits::new(&spec(k, 1.0)).unwrap().u_h.len()))
            .collect();
        let ratios: Vec<f64> = counts
            .iter()
            .map(|&(k, n)| n as f64 / ((k as f64).powi(5) * (k as f64).ln()))
            .collect();
        for w in ratios.windows(2) {
            assert!(w[1] <= w[0], "{counts:?}");
        }
    }
}
