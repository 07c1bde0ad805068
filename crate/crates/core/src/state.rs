//! Exact density-matrix engine.
//!
//! States are stored as dense row-major `2^n x 2^n` complex matrices. Basis
//! index bit `i` is qubit `i` (qubit 0 is the least significant bit). Global
//! phase is never tracked.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 10;

/// Tolerance for trace, hermiticity, PSD, unitarity and completeness checks.
pub const TOLERANCE: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// A plain 2x2 complex matrix, row-major. Not required to be unitary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2(pub [[Complex64; 2]; 2]);

impl Matrix2 {
    pub const IDENTITY: Matrix2 = Matrix2([[ONE, ZERO], [ZERO, ONE]]);

    pub fn real(m: [[f64; 2]; 2]) -> Self {
        Matrix2([[c(m[0][0]), c(m[0][1])], [c(m[1][0]), c(m[1][1])]])
    }

    pub fn dagger(&self) -> Self {
        let m = &self.0;
        Matrix2([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn mul(&self, rhs: &Matrix2) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Matrix2(out)
    }

    pub fn add(&self, rhs: &Matrix2) -> Self {
        let mut out = self.0;
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell += rhs.0[i][j];
            }
        }
        Matrix2(out)
    }

    fn max_abs_diff(&self, rhs: &Matrix2) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.0[i][j] - rhs.0[i][j]).norm());
            }
        }
        worst
    }

    fn is_zero(&self) -> bool {
        self.0.iter().flatten().all(|z| z.norm() == 0.0)
    }
}

/// A unitary gate on one (dim 2) or two (dim 4) qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct GateMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl GateMatrix {
    /// Builds a gate from row-major entries, rejecting non-unitary input.
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim != 2 && dim != 4 {
            return Err(Error::Argument(format!(
                "gate dimension must be 2 or 4, got {dim}"
            )));
        }
        if entries.len() != dim * dim {
            return Err(Error::Argument(format!(
                "gate of dimension {dim} needs {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        let gate = Self { dim, entries };
        let dev = gate.unitarity_deviation();
        if dev > TOLERANCE {
            return Err(Error::Argument(format!(
                "gate is not unitary (deviation {dev:e})"
            )));
        }
        Ok(gate)
    }

    fn from_real_2x2(m: [[f64; 2]; 2]) -> Self {
        Self {
            dim: 2,
            entries: vec![c(m[0][0]), c(m[0][1]), c(m[1][0]), c(m[1][1])],
        }
    }

    pub fn identity() -> Self {
        Self::from_real_2x2([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn pauli_x() -> Self {
        Self::from_real_2x2([[0.0, 1.0], [1.0, 0.0]])
    }

    pub fn hadamard() -> Self {
        Self::from_real_2x2([
            [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
            [FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
        ])
    }

    /// `[[cos t/2, -sin t/2], [sin t/2, cos t/2]]`.
    pub fn ry(theta: f64) -> Self {
        let (s, co) = (theta / 2.0).sin_cos();
        Self::from_real_2x2([[co, -s], [s, co]])
    }

    /// CNOT on the basis `|control target>` with control as the high bit.
    pub fn cnot() -> Self {
        let mut entries = vec![ZERO; 16];
        for (row, col) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            entries[row * 4 + col] = ONE;
        }
        Self { dim: 4, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// The 2x2 block of a single-qubit gate.
    pub fn as_matrix2(&self) -> Option<Matrix2> {
        (self.dim == 2).then(|| {
            Matrix2([
                [self.entries[0], self.entries[1]],
                [self.entries[2], self.entries[3]],
            ])
        })
    }

    /// Largest elementwise deviation of `G†G` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let sum: Complex64 = (0..d)
                    .map(|k| self.entries[k * d + i].conj() * self.entries[k * d + j])
                    .sum();
                let expected = if i == j { ONE } else { ZERO };
                worst = worst.max((sum - expected).norm());
            }
        }
        worst
    }
}

/// Convenience constructor matching the rotation used by the QPUF circuit.
pub fn gate_ry(theta: f64) -> GateMatrix {
    GateMatrix::ry(theta)
}

/// Single-qubit Kraus operators `{K_k}` with `sum K_k† K_k = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    operators: Vec<Matrix2>,
}

impl KrausSet {
    pub fn new(operators: Vec<Matrix2>) -> Result<Self> {
        if operators.is_empty() {
            return Err(Error::IncompleteKraus { deviation: 1.0 });
        }
        let set = Self { operators };
        let deviation = set.completeness_deviation();
        if deviation > TOLERANCE {
            return Err(Error::IncompleteKraus { deviation });
        }
        Ok(set)
    }

    /// Skips the completeness check. Only for tests of the validation path.
    #[doc(hidden)]
    pub fn new_unchecked(operators: Vec<Matrix2>) -> Self {
        Self { operators }
    }

    pub fn identity() -> Self {
        Self {
            operators: vec![Matrix2::IDENTITY],
        }
    }

    /// Channel that applies `first` and then `second`, with zero products
    /// dropped.
    pub fn then(&self, second: &KrausSet) -> Self {
        let operators: Vec<Matrix2> = second
            .operators
            .iter()
            .flat_map(|b| self.operators.iter().map(move |a| b.mul(a)))
            .filter(|m| !m.is_zero())
            .collect();
        Self { operators }
    }

    pub fn operators(&self) -> &[Matrix2] {
        &self.operators
    }

    pub fn is_identity(&self) -> bool {
        self.operators.len() == 1 && self.operators[0].max_abs_diff(&Matrix2::IDENTITY) == 0.0
    }

    pub fn completeness_deviation(&self) -> f64 {
        let sum = self
            .operators
            .iter()
            .fold(Matrix2([[ZERO; 2]; 2]), |acc, k| {
                acc.add(&k.dagger().mul(k))
            });
        sum.max_abs_diff(&Matrix2::IDENTITY)
    }
}

/// Mixed state of an `n`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    /// Pure computational-basis state `|bits><bits|`; bit `i` sets qubit `i`.
    pub fn basis(n_qubits: usize, bits: &BitString) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Capacity(n_qubits));
        }
        if bits.len() != n_qubits {
            return Err(Error::Argument(format!(
                "bitstring has {} bits for a {n_qubits}-qubit register",
                bits.len()
            )));
        }
        let dim = 1usize << n_qubits;
        let mut data = vec![ZERO; dim * dim];
        let idx = bits.to_index();
        data[idx * dim + idx] = ONE;
        Ok(Self { n_qubits, data })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }

    pub fn trace(&self) -> Complex64 {
        let d = self.dim();
        (0..d).map(|i| self.data[i * d + i]).sum()
    }

    /// `tr(rho^2)`, which for Hermitian rho is the squared Frobenius norm.
    pub fn purity(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.data[i * d + j] - self.data[j * d + i].conj()).norm_sqr());
            }
        }
        worst.sqrt()
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.dim();
        let m = DMatrix::from_fn(d, d, |i, j| {
            (self.data[i * d + j] + self.data[j * d + i].conj()) * 0.5
        });
        m.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Trace and hermiticity within [`TOLERANCE`], every entry finite.
    pub fn is_valid_cheap(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
            && (self.trace() - ONE).norm() <= TOLERANCE
            && self.hermiticity_deviation() <= TOLERANCE
    }

    /// Full invariant check, including positive semidefiniteness.
    pub fn check_invariants(&self) -> Result<()> {
        if !self.is_valid_cheap() {
            return Err(Error::Validation(format!(
                "density matrix lost trace/hermiticity (trace {}, hermiticity deviation {:e})",
                self.trace(),
                self.hermiticity_deviation()
            )));
        }
        let min = self.min_eigenvalue();
        if min < -TOLERANCE {
            return Err(Error::Validation(format!(
                "density matrix is not positive semidefinite (min eigenvalue {min:e})"
            )));
        }
        Ok(())
    }

    fn check_target(&self, target: usize) -> Result<()> {
        if target >= self.n_qubits {
            return Err(Error::QubitIndex {
                index: target,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    /// Applies `B -> sum_k K_k B K_k†` to every 2x2 block `rho[r0|r1][c0|c1]`
    /// spanned by `target`. Only blocks on or above the diagonal are
    /// computed; the rest are filled in as conjugate transposes, which keeps
    /// the result exactly Hermitian.
    fn map_blocks(&mut self, target: usize, ops: &[Matrix2]) {
        // superoperator on the block flattened as [b00, b01, b10, b11]
        let mut sup = [[ZERO; 4]; 4];
        for k in ops {
            for (ij, row) in sup.iter_mut().enumerate() {
                for (ab, cell) in row.iter_mut().enumerate() {
                    *cell += k.0[ij >> 1][ab >> 1] * k.0[ij & 1][ab & 1].conj();
                }
            }
        }
        let d = self.dim();
        let mask = 1usize << target;
        let low = mask - 1;
        let spread = |i: usize| ((i & !low) << 1) | (i & low);
        for i in 0..d / 2 {
            let r0 = spread(i);
            let (b0, b1) = (r0 * d, (r0 | mask) * d);
            for j in i..d / 2 {
                let c0 = spread(j);
                let c1 = c0 | mask;
                let v = [
                    self.data[b0 + c0],
                    self.data[b0 + c1],
                    self.data[b1 + c0],
                    self.data[b1 + c1],
                ];
                let mut w = [ZERO; 4];
                for (out, row) in w.iter_mut().zip(&sup) {
                    *out = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
                }
                self.data[b0 + c0] = w[0];
                self.data[b0 + c1] = w[1];
                self.data[b1 + c0] = w[2];
                self.data[b1 + c1] = w[3];
                if j != i {
                    let (t0, t1) = (c0 * d, c1 * d);
                    self.data[t0 + r0] = w[0].conj();
                    self.data[t0 + (r0 | mask)] = w[2].conj();
                    self.data[t1 + r0] = w[1].conj();
                    self.data[t1 + (r0 | mask)] = w[3].conj();
                }
            }
        }
    }

    /// Conjugation by the permutation flipping bit `tm` of every index that
    /// has all `cm` bits set.
    fn swap_conditional(&mut self, cm: usize, tm: usize) {
        let d = self.dim();
        let swapped: Vec<usize> = (0..d).filter(|&i| i & cm == cm && i & tm == 0).collect();
        for &r in &swapped {
            let (lo, hi) = self.data.split_at_mut((r | tm) * d);
            lo[r * d..(r + 1) * d].swap_with_slice(&mut hi[..d]);
        }
        for row in self.data.chunks_exact_mut(d) {
            for &c in &swapped {
                row.swap(c, c | tm);
            }
        }
    }

    fn trace_ok(&self) -> bool {
        (self.trace() - ONE).norm() <= TOLERANCE
    }

    /// In-place Pauli X, applied as a basis permutation.
    pub fn apply_x_mut(&mut self, target: usize) -> Result<()> {
        self.check_target(target)?;
        self.swap_conditional(0, 1 << target);
        debug_assert!(self.trace_ok());
        Ok(())
    }

    /// In-place single-qubit unitary.
    pub fn apply_1q_mut(&mut self, gate: &GateMatrix, target: usize) -> Result<()> {
        self.check_target(target)?;
        let m = gate
            .as_matrix2()
            .ok_or_else(|| Error::Argument("single-qubit application needs a 2x2 gate".into()))?;
        self.map_blocks(target, &[m]);
        debug_assert!(self.trace_ok());
        Ok(())
    }

    /// In-place CNOT. CNOT is a basis permutation, so conjugation is a
    /// simultaneous row/column relabelling.
    pub fn apply_cnot_mut(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_target(control)?;
        self.check_target(target)?;
        if control == target {
            return Err(Error::Argument(format!(
                "CNOT control and target must differ (both {control})"
            )));
        }
        self.swap_conditional(1 << control, 1 << target);
        debug_assert!(self.trace_ok());
        Ok(())
    }

    /// In-place `rho <- sum_k K_k rho K_k†` on one qubit.
    pub fn apply_channel_mut(&mut self, kraus: &KrausSet, target: usize) -> Result<()> {
        self.check_target(target)?;
        let deviation = kraus.completeness_deviation();
        if deviation > TOLERANCE {
            return Err(Error::IncompleteKraus { deviation });
        }
        if kraus.is_identity() {
            return Ok(());
        }
        self.map_blocks(target, kraus.operators());
        debug_assert!(self.trace_ok());
        Ok(())
    }
}

/// `|bits><bits|` on `n` qubits.
pub fn init_density(n: usize, bits: &BitString) -> Result<DensityMatrix> {
    DensityMatrix::basis(n, bits)
}

pub fn apply_1q(rho: &DensityMatrix, gate: &GateMatrix, target: usize) -> Result<DensityMatrix> {
    let mut out = rho.clone();
    out.apply_1q_mut(gate, target)?;
    Ok(out)
}

pub fn apply_cnot(rho: &DensityMatrix, control: usize, target: usize) -> Result<DensityMatrix> {
    let mut out = rho.clone();
    out.apply_cnot_mut(control, target)?;
    Ok(out)
}

pub fn apply_channel(
    rho: &DensityMatrix,
    kraus: &KrausSet,
    target: usize,
) -> Result<DensityMatrix> {
    let mut out = rho.clone();
    out.apply_channel_mut(kraus, target)?;
    Ok(out)
}

/// Probability of every computational-basis outcome, indexed by basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    n_qubits: usize,
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn new(n_qubits: usize, probs: Vec<f64>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Capacity(n_qubits));
        }
        if probs.len() != 1 << n_qubits {
            return Err(Error::Argument(format!(
                "expected {} probabilities, got {}",
                1usize << n_qubits,
                probs.len()
            )));
        }
        if probs
            .iter()
            .any(|p| !p.is_finite() || *p < -TOLERANCE || *p > 1.0 + TOLERANCE)
        {
            return Err(Error::Argument("probabilities must lie in [0, 1]".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > TOLERANCE {
            return Err(Error::Argument(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { n_qubits, probs })
    }

    pub fn point_mass(n_qubits: usize, index: usize) -> Result<Self> {
        let mut probs = vec![0.0; 1 << n_qubits.min(MAX_QUBITS + 1)];
        if index >= probs.len() {
            return Err(Error::Argument(format!("basis index {index} out of range")));
        }
        probs[index] = 1.0;
        Self::new(n_qubits, probs)
    }

    pub fn uniform(n_qubits: usize) -> Result<Self> {
        let dim = 1usize << n_qubits.min(MAX_QUBITS + 1);
        Self::new(n_qubits, vec![1.0 / dim as f64; dim])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, bits: &BitString) -> f64 {
        self.probs[bits.to_index()]
    }

    /// `P(qubit = 1)`.
    pub fn marginal_one(&self, qubit: usize) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(i, _)| (i >> qubit) & 1 == 1)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn total_variation(&self, other: &OutcomeDistribution) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    /// Classical confusion: bit `i` of every outcome is inverted
    /// independently with probability `flip[i]`.
    pub fn with_bit_flips(&self, flip: &[f64]) -> Self {
        let mut probs = self.probs.clone();
        for (qubit, &e) in flip.iter().enumerate().take(self.n_qubits) {
            if e == 0.0 {
                continue;
            }
            let mask = 1usize << qubit;
            let prev = probs.clone();
            for (i, p) in probs.iter_mut().enumerate() {
                *p = (1.0 - e) * prev[i] + e * prev[i ^ mask];
            }
        }
        Self {
            n_qubits: self.n_qubits,
            probs,
        }
    }
}

/// `probs[b] = Re rho[b][b]`.
pub fn measure_distribution(rho: &DensityMatrix) -> OutcomeDistribution {
    let d = rho.dim();
    let probs = (0..d).map(|i| rho.get(i, i).re.max(0.0)).collect();
    OutcomeDistribution {
        n_qubits: rho.n_qubits(),
        probs,
    }
}

/// Histogram of sampled outcomes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotCounts {
    n_qubits: usize,
    shots: u64,
    counts: BTreeMap<usize, u64>,
    per_qubit_ones: Vec<u64>,
}

impl ShotCounts {
    /// Builds counts keyed by basis index; zero entries are dropped.
    pub fn from_counts(n_qubits: usize, counts: BTreeMap<usize, u64>) -> Self {
        let counts: BTreeMap<usize, u64> = counts.into_iter().filter(|(_, n)| *n > 0).collect();
        let mut per_qubit_ones = vec![0u64; n_qubits];
        for (&idx, &n) in &counts {
            for (q, ones) in per_qubit_ones.iter_mut().enumerate() {
                if (idx >> q) & 1 == 1 {
                    *ones += n;
                }
            }
        }
        Self {
            n_qubits,
            shots: counts.values().sum(),
            counts,
            per_qubit_ones,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn counts(&self) -> &BTreeMap<usize, u64> {
        &self.counts
    }

    pub fn count(&self, bits: &BitString) -> u64 {
        self.counts.get(&bits.to_index()).copied().unwrap_or(0)
    }

    pub fn per_qubit_ones(&self) -> &[u64] {
        &self.per_qubit_ones
    }

    /// Counts keyed by textual bitstring (qubit 0 leftmost).
    pub fn by_bitstring(&self) -> BTreeMap<String, u64> {
        self.counts
            .iter()
            .map(|(&idx, &n)| (BitString::from_index(idx, self.n_qubits).to_string(), n))
            .collect()
    }
}

/// Multinomial draw of `shots` outcomes, reproducible for a fixed `seed`.
pub fn sample_shots(dist: &OutcomeDistribution, shots: u64, seed: u64) -> Result<ShotCounts> {
    if shots == 0 {
        return Err(Error::Argument("shots must be at least 1".into()));
    }
    let weights = WeightedIndex::new(dist.probs())
        .map_err(|e| Error::Argument(format!("cannot sample distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        *counts.entry(weights.sample(&mut rng)).or_insert(0) += 1;
    }
    Ok(ShotCounts::from_counts(dist.n_qubits(), counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI};

    fn bits(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn close(a: Complex64, b: f64) -> bool {
        (a - c(b)).norm() < 1e-12
    }

    #[test]
    fn init_ground_and_excited() {
        let g = init_density(1, &bits("0")).unwrap();
        assert!(close(g.get(0, 0), 1.0) && close(g.get(1, 1), 0.0));
        let e = init_density(1, &bits("1")).unwrap();
        assert!(close(e.get(0, 0), 0.0) && close(e.get(1, 1), 1.0));
    }

    #[test]
    fn init_two_qubit_projector() {
        // "10": qubit 0 = 1, qubit 1 = 0 -> basis index 1.
        let rho = init_density(2, &bits("10")).unwrap();
        assert!(close(rho.get(1, 1), 1.0));
        assert!(close(rho.trace(), 1.0));
        assert!((rho.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn init_rejects_capacity() {
        assert!(matches!(
            init_density(0, &bits("")),
            Err(Error::Capacity(0))
        ));
        assert!(matches!(
            init_density(11, &BitString::zeros(11)),
            Err(Error::Capacity(11))
        ));
        assert!(init_density(2, &bits("0")).is_err());
    }

    #[test]
    fn ry_zero_is_identity_and_pi_flips() {
        assert_eq!(gate_ry(0.0), GateMatrix::identity());
        let g = gate_ry(PI);
        assert!(close(g.entry(0, 0), 0.0) && close(g.entry(0, 1), -1.0));
        assert!(close(g.entry(1, 0), 1.0) && close(g.entry(1, 1), 0.0));
        let rho = apply_1q(&init_density(1, &bits("0")).unwrap(), &g, 0).unwrap();
        assert!((measure_distribution(&rho).marginal_one(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ry_half_pi_gives_even_odds() {
        let rho = apply_1q(
            &init_density(1, &bits("0")).unwrap(),
            &gate_ry(FRAC_PI_2),
            0,
        )
        .unwrap();
        // sin^2(pi/4)
        assert!((measure_distribution(&rho).marginal_one(0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hadamard_and_x_on_ground() {
        let g = init_density(1, &bits("0")).unwrap();
        let h = apply_1q(&g, &GateMatrix::hadamard(), 0).unwrap();
        let probs = measure_distribution(&h).probs().to_vec();
        assert!(probs.iter().all(|p| (p - 0.5).abs() < 1e-15), "{probs:?}");
        let x = apply_1q(&g, &GateMatrix::pauli_x(), 0).unwrap();
        assert_eq!(x, init_density(1, &bits("1")).unwrap());
    }

    #[test]
    fn ry_then_h_closed_form() {
        for (theta, expect) in [(FRAC_PI_2, 0.0), (FRAC_PI_6, 0.25)] {
            let mut rho = init_density(1, &bits("0")).unwrap();
            rho.apply_1q_mut(&gate_ry(theta), 0).unwrap();
            rho.apply_1q_mut(&GateMatrix::hadamard(), 0).unwrap();
            let p1 = measure_distribution(&rho).marginal_one(0);
            assert!((p1 - expect).abs() < 1e-12, "theta {theta}: {p1}");
        }
    }

    #[test]
    fn apply_1q_rejects_bad_target() {
        let rho = init_density(2, &bits("00")).unwrap();
        assert!(matches!(
            apply_1q(&rho, &GateMatrix::hadamard(), 2),
            Err(Error::QubitIndex {
                index: 2,
                n_qubits: 2
            })
        ));
        assert!(apply_1q(&rho, &GateMatrix::cnot(), 0).is_err());
    }

    #[test]
    fn cnot_flip_and_idle() {
        // control = qubit 1, target = qubit 0; "01" has qubit 1 set.
        let rho = init_density(2, &bits("01")).unwrap();
        let out = apply_cnot(&rho, 1, 0).unwrap();
        assert_eq!(out, init_density(2, &bits("11")).unwrap());
        let zero = init_density(2, &bits("00")).unwrap();
        assert_eq!(apply_cnot(&zero, 1, 0).unwrap(), zero);
        assert!(apply_cnot(&zero, 1, 1).is_err());
    }

    #[test]
    fn cnot_makes_bell_pair() {
        let mut rho = init_density(2, &bits("00")).unwrap();
        rho.apply_1q_mut(&GateMatrix::hadamard(), 0).unwrap();
        rho.apply_cnot_mut(0, 1).unwrap();
        let d = measure_distribution(&rho);
        assert!((d.prob(&bits("00")) - 0.5).abs() < 1e-12);
        assert!((d.prob(&bits("11")) - 0.5).abs() < 1e-12);
        assert!(d.prob(&bits("01")).abs() < 1e-12);
        // coherence survives: |00><11| = 1/2
        assert!((rho.get(0, 3) - c(0.5)).norm() < 1e-12);
    }

    fn damping(gamma: f64) -> KrausSet {
        KrausSet::new(vec![
            Matrix2::real([[1.0, 0.0], [0.0, (1.0 - gamma).sqrt()]]),
            Matrix2::real([[0.0, gamma.sqrt()], [0.0, 0.0]]),
        ])
        .unwrap()
    }

    #[test]
    fn channel_identity_and_damping() {
        let e = init_density(1, &bits("1")).unwrap();
        assert_eq!(apply_channel(&e, &KrausSet::identity(), 0).unwrap(), e);
        let full = apply_channel(&e, &damping(1.0), 0).unwrap();
        assert!(close(full.get(0, 0), 1.0) && close(full.get(1, 1), 0.0));
        let half = apply_channel(&e, &damping(0.5), 0).unwrap();
        assert!(close(half.get(0, 0), 0.5) && close(half.get(1, 1), 0.5));
    }

    #[test]
    fn channel_rejects_incomplete_set() {
        let e = init_density(1, &bits("1")).unwrap();
        let bad = KrausSet::new_unchecked(vec![Matrix2::real([[1.0, 0.0], [0.0, 0.5]])]);
        assert!(matches!(
            apply_channel(&e, &bad, 0),
            Err(Error::IncompleteKraus { .. })
        ));
        assert!(KrausSet::new(vec![Matrix2::real([[0.5, 0.0], [0.0, 0.5]])]).is_err());
    }

    #[test]
    fn uniform_over_eight_hadamards() {
        let mut rho = init_density(8, &BitString::zeros(8)).unwrap();
        for q in 0..8 {
            rho.apply_1q_mut(&GateMatrix::hadamard(), q).unwrap();
        }
        let d = measure_distribution(&rho);
        assert!(d.probs().iter().all(|p| (p - 1.0 / 256.0).abs() < 1e-12));
    }

    #[test]
    fn sampling_point_mass_and_determinism() {
        let d = OutcomeDistribution::point_mass(8, 0).unwrap();
        let s = sample_shots(&d, 1024, 7).unwrap();
        assert_eq!(s.count(&BitString::zeros(8)), 1024);
        assert_eq!(s.by_bitstring().get("00000000"), Some(&1024));

        let u = OutcomeDistribution::uniform(8).unwrap();
        assert_eq!(
            sample_shots(&u, 1024, 99).unwrap(),
            sample_shots(&u, 1024, 99).unwrap()
        );
        assert!(sample_shots(&u, 0, 1).is_err());
    }

    #[test]
    fn fair_coin_within_four_sigma() {
        let d = OutcomeDistribution::uniform(1).unwrap();
        for seed in 0..20 {
            let ones = sample_shots(&d, 1024, seed).unwrap().per_qubit_ones()[0] as i64;
            assert!((ones - 512).abs() <= 64, "seed {seed}: {ones}");
        }
    }

    #[test]
    fn bit_flip_confusion_on_point_mass() {
        let d = OutcomeDistribution::point_mass(2, 0).unwrap();
        let f = d.with_bit_flips(&[0.1, 0.0]);
        assert!((f.marginal_one(0) - 0.1).abs() < 1e-15);
        assert_eq!(f.marginal_one(1), 0.0);
    }
}
