//! Noiseless statevector simulation.
//!
//! Two engines implement [`QuantumState`]: [`StateVector`] keeps all `2ⁿ`
//! amplitudes and parallelizes large gates over disjoint amplitude pairs;
//! [`SparseState`] stores only nonzero amplitudes and handles registers too
//! wide for a dense array (the walk circuits at K = 8 need 32 qubits but
//! populate a tiny fraction of them). Both apply multi-controlled gates by
//! index masking.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};

use crate::blockenc::WalkCircuits;
use crate::circuit::{Circuit, Control, Gate, GateKind};
use crate::fock::{FockState, RegisterLayout, Sector};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest register the dense engine accepts.
pub const MAX_DENSE_QUBITS: usize = 30;
/// Register width up to which [`Backend::Auto`] picks the dense engine.
pub const AUTO_DENSE_QUBITS: usize = 24;
/// Imaginary parts of expectation values above this are reported.
pub const IMAG_TOLERANCE: f64 = 1e-10;
/// Dense gates touching at least this many amplitude pairs run in parallel.
const PARALLEL_PAIRS: usize = 1 << 14;
/// Sparse amplitudes with `|a|²` at or below this are dropped.
const SPARSE_PRUNE: f64 = 1e-32;

/// Which engine evaluates a circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    Dense,
    Sparse,
    #[default]
    Auto,
}

impl Backend {
    fn dense_for(self, num_qubits: usize) -> bool {
        match self {
            Backend::Dense => true,
            Backend::Sparse => false,
            Backend::Auto => num_qubits <= AUTO_DENSE_QUBITS,
        }
    }
}

/// 2×2 action of a gate kind on `(a₀, a₁)`.
#[derive(Clone, Copy)]
enum Kernel {
    Swap,
    Matrix([Complex64; 4]),
    PhaseZero(Complex64),
}

impl Kernel {
    fn of(kind: GateKind) -> Self {
        match kind {
            GateKind::PauliX => Kernel::Swap,
            GateKind::Hadamard => {
                let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                Kernel::Matrix([h, h, h, -h])
            }
            GateKind::RotY(theta) => {
                let (s, c) = (theta / 2.0).sin_cos();
                let (s, c) = (Complex64::new(s, 0.0), Complex64::new(c, 0.0));
                Kernel::Matrix([c, -s, s, c])
            }
            GateKind::Phase(beta) => Kernel::PhaseZero(Complex64::from_polar(1.0, beta)),
        }
    }

    #[inline]
    fn apply(self, a0: Complex64, a1: Complex64) -> (Complex64, Complex64) {
        match self {
            Kernel::Swap => (a1, a0),
            Kernel::Matrix([m00, m01, m10, m11]) => (m00 * a0 + m01 * a1, m10 * a0 + m11 * a1),
            Kernel::PhaseZero(p) => (p * a0, a1),
        }
    }
}

/// Target bit, control mask and control value of a gate.
fn masks(gate: &Gate, num_qubits: usize) -> Result<(u64, u64, u64)> {
    if gate.max_qubit() >= num_qubits {
        return Err(Error::InvalidArgument(format!(
            "gate `{gate}` addresses a qubit outside the {num_qubits}-qubit state"
        )));
    }
    let target = 1u64 << gate.target;
    let (mut cmask, mut cval) = (0u64, 0u64);
    for Control { qubit, state } in &gate.controls {
        cmask |= 1 << qubit;
        if *state {
            cval |= 1 << qubit;
        }
    }
    Ok((target, cmask, cval))
}

/// Common interface of the statevector engines.
pub trait QuantumState: Sized {
    /// State with the given amplitudes and zeros elsewhere.
    fn from_entries(num_qubits: usize, entries: &[(u64, Complex64)]) -> Result<Self>;

    fn num_qubits(&self) -> usize;

    fn apply_gate(&mut self, gate: &Gate) -> Result<()>;

    fn amplitude(&self, index: u64) -> Complex64;

    fn norm_sqr(&self) -> f64;

    /// `2|0⟩⟨0| − 𝕀` on the qubits in `mask`, applied as a diagonal.
    fn reflect_about_zero(&mut self, mask: u64);

    /// Probability that the bits in `mask` read `value`.
    fn probability(&self, mask: u64, value: u64) -> f64;

    fn run(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.num_qubits() > self.num_qubits() {
            return Err(Error::InvalidArgument(format!(
                "circuit needs {} qubits, state has {}",
                circuit.num_qubits(),
                self.num_qubits()
            )));
        }
        circuit.gates().iter().try_for_each(|g| self.apply_gate(g))
    }

    fn basis(num_qubits: usize, index: u64) -> Result<Self> {
        Self::from_entries(num_qubits, &[(index, ONE)])
    }
}

/// Dense `2ⁿ` amplitude array.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

// Raw pointer handed to rayon workers that write disjoint amplitude pairs.
#[derive(Clone, Copy)]
struct SharedAmps(*mut Complex64);
unsafe impl Send for SharedAmps {}
unsafe impl Sync for SharedAmps {}

impl StateVector {
    pub fn zero(num_qubits: usize) -> Result<Self> {
        if num_qubits > MAX_DENSE_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "{num_qubits} qubits exceed the dense limit of {MAX_DENSE_QUBITS}"
            )));
        }
        Ok(Self { num_qubits, amplitudes: vec![ZERO; 1 << num_qubits] })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n = amplitudes.len();
        if !n.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("{n} amplitudes is not a power of two")));
        }
        Ok(Self { num_qubits: n.trailing_zeros() as usize, amplitudes })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }
}

impl QuantumState for StateVector {
    fn from_entries(num_qubits: usize, entries: &[(u64, Complex64)]) -> Result<Self> {
        let mut s = Self::zero(num_qubits)?;
        for &(i, a) in entries {
            let slot = s
                .amplitudes
                .get_mut(i as usize)
                .ok_or_else(|| Error::InvalidArgument(format!("index {i} outside {num_qubits} qubits")))?;
            *slot += a;
        }
        Ok(s)
    }

    fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        let (tbit, cmask, cval) = masks(gate, self.num_qubits)?;
        let kernel = Kernel::of(gate.kind);
        let all = (1u64 << self.num_qubits) - 1;
        let free = all & !tbit & !cmask;
        let free_bits = free.count_ones() as usize;

        let touch = |amps: *mut Complex64, base: u64| {
            let i0 = (base | cval) as usize;
            let i1 = i0 | tbit as usize;
            // SAFETY: i0 < i1 < 2ⁿ and distinct bases give distinct pairs.
            unsafe {
                let (a0, a1) = kernel.apply(*amps.add(i0), *amps.add(i1));
                *amps.add(i0) = a0;
                *amps.add(i1) = a1;
            }
        };

        if (1usize << free_bits) < PARALLEL_PAIRS {
            let amps = self.amplitudes.as_mut_ptr();
            let mut sub = 0u64;
            loop {
                touch(amps, sub);
                if sub == free {
                    break;
                }
                sub = (sub | !free).wrapping_add(1) & free;
            }
            return Ok(());
        }

        // Split the free bits: the highest ones pick a chunk, the rest are
        // walked sequentially inside it.
        let positions: Vec<u32> = (0..64).filter(|b| free >> b & 1 == 1).collect();
        let chunk_bits = 6.min(free_bits);
        let (low, high) = positions.split_at(free_bits - chunk_bits);
        let low_mask = low.iter().fold(0u64, |m, b| m | 1 << b);
        let shared = SharedAmps(self.amplitudes.as_mut_ptr());
        (0u64..1 << chunk_bits).into_par_iter().for_each(|chunk| {
            let shared = shared;
            let hi = high
                .iter()
                .enumerate()
                .fold(0u64, |m, (i, b)| m | ((chunk >> i) & 1) << b);
            let mut sub = 0u64;
            loop {
                touch(shared.0, hi | sub);
                if sub == low_mask {
                    break;
                }
                sub = (sub | !low_mask).wrapping_add(1) & low_mask;
            }
        });
        Ok(())
    }

    fn amplitude(&self, index: u64) -> Complex64 {
        self.amplitudes.get(index as usize).copied().unwrap_or(ZERO)
    }

    fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn reflect_about_zero(&mut self, mask: u64) {
        let flip = |(i, a): (usize, &mut Complex64)| {
            if i as u64 & mask != 0 {
                *a = -*a;
            }
        };
        if self.amplitudes.len() >= PARALLEL_PAIRS {
            self.amplitudes.par_iter_mut().enumerate().for_each(flip);
        } else {
            self.amplitudes.iter_mut().enumerate().for_each(flip);
        }
    }

    fn probability(&self, mask: u64, value: u64) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| *i as u64 & mask == value)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

/// Amplitude map holding only the populated computational-basis states.
#[derive(Debug, Clone, Default)]
pub struct SparseState {
    num_qubits: usize,
    amplitudes: FxHashMap<u64, Complex64>,
}

impl SparseState {
    pub fn nnz(&self) -> usize {
        self.amplitudes.len()
    }

    /// Nonzero entries sorted by index.
    pub fn entries(&self) -> Vec<(u64, Complex64)> {
        let mut v: Vec<_> = self.amplitudes.iter().map(|(&i, &a)| (i, a)).collect();
        v.sort_unstable_by_key(|e| e.0);
        v
    }
}

impl QuantumState for SparseState {
    fn from_entries(num_qubits: usize, entries: &[(u64, Complex64)]) -> Result<Self> {
        if num_qubits > 64 {
            return Err(Error::InvalidArgument("at most 64 qubits are addressable".into()));
        }
        let mut amplitudes = FxHashMap::default();
        for &(i, a) in entries {
            if num_qubits < 64 && i >> num_qubits != 0 {
                return Err(Error::InvalidArgument(format!("index {i} outside {num_qubits} qubits")));
            }
            *amplitudes.entry(i).or_insert(ZERO) += a;
        }
        amplitudes.retain(|_, a: &mut Complex64| a.norm_sqr() > SPARSE_PRUNE);
        Ok(Self { num_qubits, amplitudes })
    }

    fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        let (tbit, cmask, cval) = masks(gate, self.num_qubits)?;
        let kernel = Kernel::of(gate.kind);
        let bases: FxHashSet<u64> = self
            .amplitudes
            .keys()
            .filter(|&&i| i & cmask == cval)
            .map(|&i| i & !tbit)
            .collect();
        for base in bases {
            let i1 = base | tbit;
            let a0 = self.amplitudes.get(&base).copied().unwrap_or(ZERO);
            let a1 = self.amplitudes.get(&i1).copied().unwrap_or(ZERO);
            let (b0, b1) = kernel.apply(a0, a1);
            for (i, b) in [(base, b0), (i1, b1)] {
                if b.norm_sqr() > SPARSE_PRUNE {
                    self.amplitudes.insert(i, b);
                } else {
                    self.amplitudes.remove(&i);
                }
            }
        }
        Ok(())
    }

    fn amplitude(&self, index: u64) -> Complex64 {
        self.amplitudes.get(&index).copied().unwrap_or(ZERO)
    }

    fn norm_sqr(&self) -> f64 {
        self.entries().iter().map(|(_, a)| a.norm_sqr()).sum()
    }

    fn reflect_about_zero(&mut self, mask: u64) {
        for (i, a) in self.amplitudes.iter_mut() {
            if i & mask != 0 {
                *a = -*a;
            }
        }
    }

    fn probability(&self, mask: u64, value: u64) -> f64 {
        self.entries()
            .iter()
            .filter(|(i, _)| i & mask == value)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

/// Normalized superposition of basis states from a single parity sector.
#[derive(Debug, Clone, PartialEq)]
pub struct Pivot {
    terms: Vec<(FockState, Complex64)>,
}

impl Pivot {
    pub fn basis(state: FockState) -> Self {
        Self { terms: vec![(state, ONE)] }
    }

    /// Normalizes `weights`; rejects empty or zero-norm input, states with
    /// different K, and mixed parity sectors.
    pub fn superposition(weights: Vec<(FockState, Complex64)>) -> Result<Self> {
        let first = weights
            .first()
            .ok_or_else(|| Error::InvalidArgument("pivot needs at least one state".into()))?;
        let (k, sector) = (first.0.k_total(), first.0.sector());
        for (s, _) in &weights {
            if s.k_total() != k {
                return Err(Error::InvalidArgument("pivot states have different K".into()));
            }
            if s.sector() != sector {
                return Err(Error::InvalidArgument(format!(
                    "pivot mixes the {sector} and {} sectors",
                    s.sector()
                )));
            }
        }
        let mut merged: Vec<(FockState, Complex64)> = Vec::new();
        for (s, w) in weights {
            match merged.iter_mut().find(|(t, _)| *t == s) {
                Some((_, acc)) => *acc += w,
                None => merged.push((s, w)),
            }
        }
        let norm = merged.iter().map(|(_, w)| w.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidArgument("pivot weights have zero norm".into()));
        }
        Ok(Self { terms: merged.into_iter().map(|(s, w)| (s, w / norm)).collect() })
    }

    pub fn terms(&self) -> &[(FockState, Complex64)] {
        &self.terms
    }

    pub fn sector(&self) -> Sector {
        self.terms[0].0.sector()
    }

    pub fn k_total(&self) -> usize {
        self.terms[0].0.k_total()
    }

    fn indexed(&self, layout: &RegisterLayout) -> Result<Vec<(u64, Complex64)>> {
        self.terms
            .iter()
            .map(|(s, w)| Ok((layout.state_index(s)?, *w)))
            .collect()
    }
}

/// Pivot loaded onto the system register with every ancilla in `|0⟩`.
pub fn init_state<S: QuantumState>(layout: &RegisterLayout, pivot: &Pivot) -> Result<S> {
    S::from_entries(layout.num_qubits(), &pivot.indexed(layout)?)
}

fn overlap<S: QuantumState>(state: &S, pivot: &[(u64, Complex64)]) -> Complex64 {
    pivot.iter().map(|&(i, w)| w.conj() * state.amplitude(i)).sum()
}

fn dense_or_sparse<T>(
    num_qubits: usize,
    backend: Backend,
    dense: impl FnOnce() -> Result<T>,
    sparse: impl FnOnce() -> Result<T>,
) -> Result<T> {
    if backend.dense_for(num_qubits) {
        dense()
    } else {
        sparse()
    }
}

/// `⟨G,0_a| circuit |F,0_a⟩`.
pub fn blockencoded_element(
    circuit: &Circuit,
    f: &FockState,
    g: &FockState,
    layout: &RegisterLayout,
    backend: Backend,
) -> Result<Complex64> {
    fn go<S: QuantumState>(c: &Circuit, f: &FockState, g: &FockState, l: &RegisterLayout) -> Result<Complex64> {
        let mut s: S = init_state(l, &Pivot::basis(f.clone()))?;
        s.run(c)?;
        Ok(s.amplitude(l.state_index(g)?))
    }
    dense_or_sparse(
        layout.num_qubits(),
        backend,
        || go::<StateVector>(circuit, f, g, layout),
        || go::<SparseState>(circuit, f, g, layout),
    )
}

/// Matrix `⟨G,0_a| circuit |F,0_a⟩` over `basis` (rows G, columns F).
pub fn projected_block(
    circuit: &Circuit,
    basis: &[FockState],
    layout: &RegisterLayout,
    backend: Backend,
) -> Result<DMatrix<Complex64>> {
    fn go<S: QuantumState>(c: &Circuit, basis: &[FockState], l: &RegisterLayout) -> Result<DMatrix<Complex64>> {
        let idx: Vec<u64> = basis.iter().map(|s| l.state_index(s)).collect::<Result<_>>()?;
        let mut m = DMatrix::from_element(basis.len(), basis.len(), ZERO);
        for (col, &fi) in idx.iter().enumerate() {
            let mut s = S::basis(l.num_qubits(), fi)?;
            s.run(c)?;
            for (row, &gi) in idx.iter().enumerate() {
                m[(row, col)] = s.amplitude(gi);
            }
        }
        Ok(m)
    }
    dense_or_sparse(
        layout.num_qubits(),
        backend,
        || go::<StateVector>(circuit, basis, layout),
        || go::<SparseState>(circuit, basis, layout),
    )
}

/// Projected matrices of `T_0(H′) … T_{max_order}(H′)` over `basis`, produced
/// by stepping the walk once per order.
pub fn chebyshev_blocks(
    walk: &WalkCircuits,
    basis: &[FockState],
    max_order: usize,
    backend: Backend,
) -> Result<Vec<DMatrix<Complex64>>> {
    fn go<S: QuantumState>(w: &WalkCircuits, basis: &[FockState], max_order: usize) -> Result<Vec<DMatrix<Complex64>>> {
        let l = &w.layout;
        let idx: Vec<u64> = basis.iter().map(|s| l.state_index(s)).collect::<Result<_>>()?;
        let dim = basis.len();
        let mut out = vec![DMatrix::from_element(dim, dim, ZERO); max_order + 1];
        for (col, &fi) in idx.iter().enumerate() {
            let mut s = S::basis(l.num_qubits(), fi)?;
            for (order, block) in out.iter_mut().enumerate() {
                if order > 0 {
                    walk_step(&mut s, w, order - 1)?;
                }
                for (row, &gi) in idx.iter().enumerate() {
                    block[(row, col)] = s.amplitude(gi);
                }
            }
        }
        Ok(out)
    }
    dense_or_sparse(
        walk.layout.num_qubits(),
        backend,
        || go::<StateVector>(walk, basis, max_order),
        || go::<SparseState>(walk, basis, max_order),
    )
}

/// Advances `T_n → T_{n+1}`: the reflection, then `U_H` after an even
/// count of steps and `U_H†` after an odd one.
fn walk_step<S: QuantumState>(state: &mut S, walk: &WalkCircuits, steps_done: usize) -> Result<()> {
    state.reflect_about_zero(walk.layout.ancilla_mask());
    if steps_done % 2 == 0 {
        state.run(&walk.u_h)
    } else {
        state.run(&walk.u_h_dag)
    }
}

fn real_checked(z: Complex64, what: &str) -> Result<f64> {
    if z.im.abs() > IMAG_TOLERANCE {
        return Err(Error::NumericalAnomaly(format!(
            "{what} has imaginary part {:e}",
            z.im
        )));
    }
    Ok(z.re)
}

/// Exact `⟨T_n(H′)⟩₀` for `n = 0..=max_order`.
pub fn chebyshev_expectations(
    walk: &WalkCircuits,
    pivot: &Pivot,
    max_order: usize,
    backend: Backend,
) -> Result<Vec<f64>> {
    fn go<S: QuantumState>(w: &WalkCircuits, pivot: &Pivot, max_order: usize) -> Result<Vec<f64>> {
        let entries = pivot.indexed(&w.layout)?;
        let mut s = S::from_entries(w.layout.num_qubits(), &entries)?;
        let mut out = Vec::with_capacity(max_order + 1);
        for order in 0..=max_order {
            if order > 0 {
                walk_step(&mut s, w, order - 1)?;
            }
            out.push(real_checked(overlap(&s, &entries), &format!("⟨T_{order}⟩"))?);
        }
        Ok(out)
    }
    dense_or_sparse(
        walk.layout.num_qubits(),
        backend,
        || go::<StateVector>(walk, pivot, max_order),
        || go::<SparseState>(walk, pivot, max_order),
    )
}

/// Exact `⟨T_n(H′)⟩₀`.
pub fn expectation_t(walk: &WalkCircuits, pivot: &Pivot, order: usize, backend: Backend) -> Result<f64> {
    Ok(chebyshev_expectations(walk, pivot, order, backend)?[order])
}

/// Draws `shots` outcomes of the test qubit and returns `(n₀ − n₁)/shots`.
fn sample_estimate<R: Rng>(p0: f64, shots: u64, rng: &mut R) -> Result<f64> {
    if shots == 0 {
        return Err(Error::InvalidArgument("at least one shot is required".into()));
    }
    let p0 = p0.clamp(0.0, 1.0);
    let zeros = Binomial::new(shots, p0)
        .map_err(|e| Error::NumericalAnomaly(format!("binomial sampling: {e}")))?
        .sample(rng);
    Ok((2.0 * zeros as f64 - shots as f64) / shots as f64)
}

fn hadamard_prob0<S: QuantumState + Clone>(state: &S, test: usize) -> Result<f64> {
    let mut probe = state.clone();
    probe.apply_gate(&Gate::h(test))?;
    Ok(probe.probability(1 << test, 0))
}

/// Estimates `Re ⟨ψ₀,0_a| circuit |ψ₀,0_a⟩` with a Hadamard test: an extra
/// qubit above the circuit is put in `|+⟩`, controls the whole circuit and
/// is measured in the X basis `shots` times.
pub fn hadamard_test_estimate(
    circuit: &Circuit,
    layout: &RegisterLayout,
    pivot: &Pivot,
    shots: u64,
    seed: u64,
    backend: Backend,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p0 = hadamard_test_probability(circuit, layout, pivot, backend)?;
    sample_estimate(p0, shots, &mut rng)
}

/// Probability of reading `0` on the Hadamard-test qubit; `2p₀ − 1` is the
/// exact real part.
pub fn hadamard_test_probability(
    circuit: &Circuit,
    layout: &RegisterLayout,
    pivot: &Pivot,
    backend: Backend,
) -> Result<f64> {
    fn go<S: QuantumState + Clone>(c: &Circuit, l: &RegisterLayout, pivot: &Pivot) -> Result<f64> {
        let test = c.num_qubits().max(l.num_qubits());
        let mut s = S::from_entries(test + 1, &pivot.indexed(l)?)?;
        s.apply_gate(&Gate::h(test))?;
        s.run(&c.controlled(&[Control::on(test)])?)?;
        hadamard_prob0(&s, test)
    }
    let n = circuit.num_qubits().max(layout.num_qubits()) + 1;
    dense_or_sparse(
        n,
        backend,
        || go::<StateVector>(circuit, layout, pivot),
        || go::<SparseState>(circuit, layout, pivot),
    )
}

/// Shot-based `⟨T_n(H′)⟩₀` for `n = 0..=max_order` from Hadamard tests on
/// the gate-level Chebyshev circuits. One seeded stream serves all orders.
pub fn hadamard_chebyshev_estimates(
    walk: &WalkCircuits,
    pivot: &Pivot,
    max_order: usize,
    shots: u64,
    seed: u64,
    backend: Backend,
) -> Result<Vec<f64>> {
    fn go<S: QuantumState + Clone>(
        w: &WalkCircuits,
        pivot: &Pivot,
        max_order: usize,
        shots: u64,
        seed: u64,
    ) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let test = w.layout.num_qubits();
        let on = [Control::on(test)];
        let reflection = w.reflection.controlled(&on)?;
        let forward = w.u_h.controlled(&on)?;
        let backward = w.u_h_dag.controlled(&on)?;
        let mut s = S::from_entries(test + 1, &pivot.indexed(&w.layout)?)?;
        s.apply_gate(&Gate::h(test))?;
        let mut out = Vec::with_capacity(max_order + 1);
        for order in 0..=max_order {
            if order > 0 {
                s.run(&reflection)?;
                s.run(if order % 2 == 1 { &forward } else { &backward })?;
            }
            out.push(sample_estimate(hadamard_prob0(&s, test)?, shots, &mut rng)?);
        }
        Ok(out)
    }
    dense_or_sparse(
        walk.layout.num_qubits() + 1,
        backend,
        || go::<StateVector>(walk, pivot, max_order, shots, seed),
        || go::<SparseState>(walk, pivot, max_order, shots, seed),
    )
}

/// Full unitary of a small circuit, built column by column.
pub fn unitary_matrix(circuit: &Circuit) -> Result<DMatrix<Complex64>> {
    let n = circuit.num_qubits();
    if n > 12 {
        return Err(Error::InvalidArgument(format!("{n} qubits is too many for a full matrix")));
    }
    let dim = 1usize << n;
    let mut u = DMatrix::from_element(dim, dim, ZERO);
    for col in 0..dim {
        let mut s = StateVector::basis(n, col as u64)?;
        s.run(circuit)?;
        for (row, a) in s.amplitudes().iter().enumerate() {
            u[(row, col)] = *a;
        }
    }
    Ok(u)
}
