//! Fixed-K many-boson Fock bases and the qubit register layout.
//!
//! A Fock state stores the occupation `r_k` of every longitudinal-momentum
//! mode `k ≥ 1` with `Σ k·r_k = K`. The zero mode is not represented.
//! On the register side every mode owns a little-endian binary subregister
//! wide enough to hold `Λ_k = ⌊K/k⌋`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Number of bits needed to store every value in `0..=value`.
pub(crate) fn bit_width(value: usize) -> usize {
    (usize::BITS - value.leading_zeros()) as usize
}

/// `⌈log₂ n⌉` for `n ≥ 1`.
pub(crate) fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        bit_width(n - 1)
    }
}

/// Maximal occupation `Λ_k = ⌊K/k⌋` for every mode `k ∈ [1, K]`.
pub fn max_occupations(k_total: usize) -> Result<Vec<usize>> {
    if k_total == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    Ok((1..=k_total).map(|k| k_total / k).collect())
}

/// Parity of the total particle number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    Even,
    Odd,
}

impl Sector {
    pub fn of_particle_number(n: usize) -> Self {
        if n % 2 == 0 {
            Sector::Even
        } else {
            Sector::Odd
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sector::Even => f.write_str("even"),
            Sector::Odd => f.write_str("odd"),
        }
    }
}

impl FromStr for Sector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "even" => Ok(Sector::Even),
            "odd" => Ok(Sector::Odd),
            other => Err(Error::InvalidArgument(format!("unknown sector `{other}`"))),
        }
    }
}

/// Occupation-number state at fixed total longitudinal momentum.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState {
    k_total: usize,
    occupations: BTreeMap<usize, usize>,
}

impl FockState {
    /// Builds a state from `(mode, occupation)` pairs. Zero occupations are
    /// dropped; repeated modes are rejected.
    pub fn new(k_total: usize, occupations: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if k_total == 0 {
            return Err(Error::InvalidArgument("K must be at least 1".into()));
        }
        let mut map = BTreeMap::new();
        for (mode, r) in occupations {
            if mode == 0 {
                return Err(Error::InvalidState("mode 0 is not part of the basis".into()));
            }
            if r == 0 {
                continue;
            }
            if map.insert(mode, r).is_some() {
                return Err(Error::InvalidState(format!("mode {mode} given twice")));
            }
        }
        let momentum: usize = map.iter().map(|(k, r)| k * r).sum();
        if momentum != k_total {
            return Err(Error::InvalidState(format!(
                "total momentum {momentum} does not match K = {k_total}"
            )));
        }
        Ok(Self { k_total, occupations: map })
    }

    /// State whose particles carry the given momenta (an integer partition of K).
    pub fn from_parts(parts: &[usize]) -> Result<Self> {
        let mut occ: BTreeMap<usize, usize> = BTreeMap::new();
        for &p in parts {
            *occ.entry(p).or_default() += 1;
        }
        Self::new(parts.iter().sum(), occ)
    }

    pub fn k_total(&self) -> usize {
        self.k_total
    }

    pub fn occupation(&self, mode: usize) -> usize {
        self.occupations.get(&mode).copied().unwrap_or(0)
    }

    /// Nonzero occupations in ascending mode order.
    pub fn occupations(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.occupations.iter().map(|(&k, &r)| (k, r))
    }

    pub fn particle_number(&self) -> usize {
        self.occupations.values().sum()
    }

    pub fn sector(&self) -> Sector {
        Sector::of_particle_number(self.particle_number())
    }

    /// Momenta of the individual particles, largest first.
    pub fn parts(&self) -> Vec<usize> {
        self.occupations
            .iter()
            .rev()
            .flat_map(|(&k, &r)| std::iter::repeat_n(k, r))
            .collect()
    }
}

/// Caret-exponent notation with the largest mode first, e.g. `3^1,1^1`.
impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, r) in self.occupations.iter().rev() {
            if !first {
                f.write_str(",")?;
            }
            first = false;
            write!(f, "{k}^{r}")?;
        }
        Ok(())
    }
}

impl FromStr for FockState {
    type Err = Error;

    /// Parses `"4^1"`, `"2^1,1^2"` or `"2^1 1^2"`; K is inferred.
    fn from_str(s: &str) -> Result<Self> {
        let mut occ = Vec::new();
        for tok in s.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let (k, r) = tok
                .split_once('^')
                .ok_or_else(|| Error::InvalidArgument(format!("expected `mode^occupation`, got `{tok}`")))?;
            let k: usize = k
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad mode in `{tok}`")))?;
            let r: usize = r
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad occupation in `{tok}`")))?;
            occ.push((k, r));
        }
        if occ.is_empty() {
            return Err(Error::InvalidArgument("empty Fock state".into()));
        }
        let k_total = occ.iter().map(|(k, r)| k * r).sum();
        FockState::new(k_total, occ)
    }
}

/// Every Fock state with total momentum `K`, ordered as descending
/// lexicographic integer partitions (`{4}`, `{3,1}`, `{2,2}`, ...).
pub fn enumerate_basis(k_total: usize) -> Result<Vec<FockState>> {
    if k_total == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    fn rec(rest: usize, max_part: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(prefix.clone());
            return;
        }
        for part in (1..=rest.min(max_part)).rev() {
            prefix.push(part);
            rec(rest - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut parts = Vec::new();
    rec(k_total, k_total, &mut Vec::new(), &mut parts);
    parts.iter().map(|p| FockState::from_parts(p)).collect()
}

pub fn sector_of(state: &FockState) -> Sector {
    state.sector()
}

/// Basis states of one parity sector, keeping the basis order.
pub fn sector_basis(k_total: usize, sector: Sector) -> Result<Vec<FockState>> {
    Ok(enumerate_basis(k_total)?
        .into_iter()
        .filter(|s| s.sector() == sector)
        .collect())
}

/// Qubit assignment for the walk registers.
///
/// Ordering from qubit 0 upward: `s_1 … s_K` (each little-endian), then
/// `ph_1 … ph_K`, then `me`, `ac`, and the index register `id`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegisterLayout {
    k_total: usize,
    monomial_count: usize,
    max_occupations: Vec<usize>,
    system: Vec<Range<usize>>,
    phase_offset: usize,
    me: usize,
    ac: usize,
    id: Range<usize>,
    total: usize,
}

impl RegisterLayout {
    pub fn new(k_total: usize, monomial_count: usize) -> Result<Self> {
        if monomial_count == 0 {
            return Err(Error::InvalidArgument("monomial count must be at least 1".into()));
        }
        let max_occupations = max_occupations(k_total)?;
        let mut system = Vec::with_capacity(k_total);
        let mut offset = 0;
        for &lambda in &max_occupations {
            let w = bit_width(lambda);
            system.push(offset..offset + w);
            offset += w;
        }
        let phase_offset = offset;
        let me = phase_offset + k_total;
        let ac = me + 1;
        let id_start = ac + 1;
        let id = id_start..id_start + ceil_log2(monomial_count);
        let total = id.end;
        Ok(Self {
            k_total,
            monomial_count,
            max_occupations,
            system,
            phase_offset,
            me,
            ac,
            id,
            total,
        })
    }

    pub fn k_total(&self) -> usize {
        self.k_total
    }

    pub fn monomial_count(&self) -> usize {
        self.monomial_count
    }

    pub fn num_qubits(&self) -> usize {
        self.total
    }

    /// `Q_s`, the width of the whole system register.
    pub fn system_width(&self) -> usize {
        self.phase_offset
    }

    pub fn max_occupation(&self, mode: usize) -> Result<usize> {
        self.check_mode(mode)?;
        Ok(self.max_occupations[mode - 1])
    }

    /// Qubits of `s_k`, least-significant first.
    pub fn occupation_qubits(&self, mode: usize) -> Result<Range<usize>> {
        self.check_mode(mode)?;
        Ok(self.system[mode - 1].clone())
    }

    pub fn phase_qubit(&self, mode: usize) -> Result<usize> {
        self.check_mode(mode)?;
        Ok(self.phase_offset + mode - 1)
    }

    pub fn phase_qubits(&self) -> Range<usize> {
        self.phase_offset..self.phase_offset + self.k_total
    }

    pub fn me_qubit(&self) -> usize {
        self.me
    }

    pub fn ac_qubit(&self) -> usize {
        self.ac
    }

    pub fn id_qubits(&self) -> Range<usize> {
        self.id.clone()
    }

    /// `D = 2^{|id|}`.
    pub fn index_dim(&self) -> usize {
        1 << self.id.len()
    }

    /// All non-system qubits (`ph`, `me`, `ac`, `id`) in ascending order.
    pub fn ancilla_qubits(&self) -> Vec<usize> {
        (self.phase_offset..self.total).collect()
    }

    /// Bit mask of [`Self::ancilla_qubits`].
    pub fn ancilla_mask(&self) -> u64 {
        self.ancilla_qubits().iter().fold(0u64, |m, &q| m | (1u64 << q))
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode == 0 || mode > self.k_total {
            return Err(Error::InvalidArgument(format!(
                "mode {mode} outside [1, {}]",
                self.k_total
            )));
        }
        Ok(())
    }

    /// Computational-basis index with every `r_k` in `s_k` and all ancillas zero.
    pub fn state_index(&self, state: &FockState) -> Result<u64> {
        if state.k_total() != self.k_total {
            return Err(Error::InvalidState(format!(
                "state has K = {}, layout has K = {}",
                state.k_total(),
                self.k_total
            )));
        }
        if self.total > 64 {
            return Err(Error::InvalidArgument("layouts above 64 qubits are not indexable".into()));
        }
        let mut index = 0u64;
        for (mode, r) in state.occupations() {
            let range = self.occupation_qubits(mode)?;
            if r >= 1 << range.len() {
                return Err(Error::InvalidState(format!(
                    "occupation {r} of mode {mode} exceeds a {}-qubit subregister",
                    range.len()
                )));
            }
            index |= (r as u64) << range.start;
        }
        Ok(index)
    }

    /// Inverse of [`Self::state_index`]; rejects nonzero ancillas and
    /// occupations that do not add up to K.
    pub fn decode(&self, index: u64) -> Result<FockState> {
        if index & self.ancilla_mask() != 0 {
            return Err(Error::InvalidState(format!("index {index:#x} has nonzero ancillas")));
        }
        let occ = self.system.iter().enumerate().map(|(i, range)| {
            let w = range.len();
            let r = (index >> range.start) & ((1u64 << w) - 1);
            (i + 1, r as usize)
        });
        FockState::new(self.k_total, occ.collect::<Vec<_>>())
    }
}

pub fn build_layout(k_total: usize, monomial_count: usize) -> Result<RegisterLayout> {
    RegisterLayout::new(k_total, monomial_count)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Partition count via the standard `p(n, m)` recursion.
    fn partition_count(n: usize) -> usize {
        fn p(n: usize, m: usize) -> usize {
            if n == 0 {
                return 1;
            }
            if m == 0 {
                return 0;
            }
            if m > n {
                return p(n, n);
            }
            p(n - m, m) + p(n, m - 1)
        }
        p(n, n)
    }

    #[test]
    fn max_occupations_examples() {
        assert_eq!(max_occupations(4).unwrap(), vec![4, 2, 1, 1]);
        assert_eq!(max_occupations(1).unwrap(), vec![1]);
        assert_eq!(max_occupations(8).unwrap(), vec![8, 4, 2, 2, 1, 1, 1, 1]);
        assert!(matches!(max_occupations(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn k4_basis_in_descending_lex_order() {
        let basis = enumerate_basis(4).unwrap();
        let names: Vec<String> = basis.iter().map(|s| s.to_string()).collect();
        assert_eq!(names, ["4^1", "3^1,1^1", "2^2", "2^1,1^2", "1^4"]);
    }

    #[test]
    fn basis_sizes_match_partition_counts() {
        assert_eq!(enumerate_basis(1).unwrap().len(), 1);
        assert_eq!(partition_count(8), 22);
        assert_eq!(enumerate_basis(8).unwrap().len(), 22);
        for k in 1..=12 {
            let basis = enumerate_basis(k).unwrap();
            assert_eq!(basis.len(), partition_count(k), "K = {k}");
            let mut dedup = basis.clone();
            dedup.sort();
            dedup.dedup();
            assert_eq!(dedup.len(), basis.len());
        }
    }

    #[test]
    fn sectors() {
        let s = |txt: &str| txt.parse::<FockState>().unwrap();
        assert_eq!(sector_of(&s("4^1")), Sector::Odd);
        assert_eq!(sector_of(&s("2^1,1^2")), Sector::Odd);
        assert_eq!(sector_of(&s("2^2")), Sector::Even);
        assert_eq!(sector_of(&s("1^4")), Sector::Even);
        assert_eq!(sector_of(&s("3^1 1^1")), Sector::Even);
    }

    #[test]
    fn layout_examples() {
        let l = build_layout(4, 14).unwrap();
        assert_eq!(l.system_width(), 7);
        assert_eq!(l.phase_qubits().len(), 4);
        assert_eq!(l.id_qubits().len(), 4);
        assert_eq!(l.num_qubits(), 17);
        assert_eq!(l.index_dim(), 16);
        assert_eq!(l.occupation_qubits(1).unwrap(), 0..3);
        assert_eq!(l.occupation_qubits(2).unwrap(), 3..5);
        assert_eq!(l.me_qubit(), 11);
        assert_eq!(l.ac_qubit(), 12);

        let l = build_layout(1, 2).unwrap();
        assert_eq!(l.num_qubits(), 5);
        assert_eq!(l.system_width(), 1);
        assert_eq!(l.id_qubits().len(), 1);

        assert_eq!(build_layout(8, 84).unwrap().system_width(), 15);
        assert!(build_layout(4, 0).is_err());
        assert!(build_layout(0, 3).is_err());
    }

    #[test]
    fn qubit_count_grows_like_2k() {
        for k in 1..=64 {
            let qs = build_layout(k, 1).unwrap().system_width();
            assert!(qs <= 2 * k + ceil_log2(k + 1), "K = {k}: Q_s = {qs}");
        }
    }

    #[test]
    fn state_index_placement() {
        let l = build_layout(4, 14).unwrap();
        let ones: FockState = "1^4".parse().unwrap();
        assert_eq!(l.state_index(&ones).unwrap(), 0b100);
        let pair: FockState = "2^2".parse().unwrap();
        assert_eq!(l.state_index(&pair).unwrap(), 0b10 << 3);
        // r_1 = 0 is impossible at fixed K, so the all-zero register is not a state
        assert!(matches!(l.decode(0), Err(Error::InvalidState(_))));
        // state with the wrong K
        let k3: FockState = "3^1".parse().unwrap();
        assert!(matches!(l.state_index(&k3), Err(Error::InvalidState(_))));
    }

    #[test]
    fn state_index_is_a_bijection_on_the_basis() {
        for k in 1..=10 {
            let basis = enumerate_basis(k).unwrap();
            let l = build_layout(k, 7).unwrap();
            let mut seen = std::collections::HashSet::new();
            for s in &basis {
                let idx = l.state_index(s).unwrap();
                assert!(seen.insert(idx));
                assert_eq!(&l.decode(idx).unwrap(), s);
            }
        }
    }

    #[test]
    fn parse_and_display_round_trip() {
        for k in 1..=7 {
            for s in enumerate_basis(k).unwrap() {
                assert_eq!(s.to_string().parse::<FockState>().unwrap(), s);
            }
        }
        assert!("".parse::<FockState>().is_err());
        assert!("4".parse::<FockState>().is_err());
        assert!("0^2".parse::<FockState>().is_err());
    }
}
