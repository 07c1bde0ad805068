//! The 8-qubit QPUF circuit: challenges, circuit construction, noisy
//! execution, and an independent per-block oracle.
//!
//! Qubits 0-3 are controls and qubits 4-7 targets. Every qubit is prepared
//! in its challenge bit, rotated by the shared `Ry(theta)`, put through `H`,
//! then each control `k` drives a CNOT onto target `k + 4`. Controls then
//! idle for the profile's idle duration before all qubits are measured.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::noise::{apply_readout_error, idle_channel, DeviceProfile};
use crate::seed::{derive_seed, SeedPart};
use crate::state::{
    measure_distribution, sample_shots, DensityMatrix, GateMatrix, Matrix2, OutcomeDistribution,
    ShotCounts,
};

pub const QPUF_QUBITS: usize = 8;
pub const CONTROL_QUBITS: usize = QPUF_QUBITS / 2;

/// CNOT wiring `(control, target)`.
pub const CNOT_PAIRS: [(usize, usize); CONTROL_QUBITS] = [(0, 4), (1, 5), (2, 6), (3, 7)];

/// QPUF input: per-qubit initial bit and the shared rotation angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChallenge")]
pub struct Challenge {
    init_bits: BitString,
    theta: f64,
}

#[derive(Deserialize)]
struct RawChallenge {
    init_bits: BitString,
    theta: f64,
}

impl TryFrom<RawChallenge> for Challenge {
    type Error = Error;

    fn try_from(raw: RawChallenge) -> Result<Self> {
        Challenge::new(raw.init_bits, raw.theta)
    }
}

fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

impl Challenge {
    pub fn new(init_bits: BitString, theta: f64) -> Result<Self> {
        if init_bits.len() != QPUF_QUBITS {
            return Err(Error::Argument(format!(
                "challenge needs {QPUF_QUBITS} init bits, got {}",
                init_bits.len()
            )));
        }
        if !theta.is_finite() {
            return Err(Error::Argument(format!(
                "challenge angle must be finite, got {theta}"
            )));
        }
        Ok(Self {
            init_bits,
            theta: normalize_angle(theta),
        })
    }

    pub fn init_bits(&self) -> &BitString {
        &self.init_bits
    }

    /// Rotation angle in `[0, 2 pi)`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Hashable identity: bits plus the exact angle bit pattern.
    pub fn key(&self) -> (String, u64) {
        (self.init_bits.to_string(), self.theta.to_bits())
    }

    /// One-line JSON record: `{"init_bits":"01100000","theta":1.25}`.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("challenges always serialize")
    }
}

/// Parses one challenge per non-blank line.
pub fn parse_challenges(text: &str) -> Result<Vec<Challenge>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

/// Uniform init pattern and uniform angle in `[0, 2 pi)`.
pub fn random_challenge(rng_seed: u64) -> Challenge {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let bits: Vec<bool> = (0..QPUF_QUBITS).map(|_| rng.gen_bool(0.5)).collect();
    let theta = rng.gen_range(0.0..TAU);
    Challenge::new(bits.into(), theta).expect("generated challenge is valid")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    X(usize),
    Ry { qubit: usize, theta: f64 },
    H(usize),
    Cnot { control: usize, target: usize },
    Idle(usize),
    Measure(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub ops: Vec<Op>,
}

impl Circuit {
    pub fn count(&self, pred: impl Fn(&Op) -> bool) -> usize {
        self.ops.iter().filter(|op| pred(op)).count()
    }
}

pub fn build_qpuf_circuit(c: &Challenge) -> Circuit {
    let mut ops = Vec::with_capacity(6 * QPUF_QUBITS);
    ops.extend((0..QPUF_QUBITS).filter(|&q| c.init_bits.get(q)).map(Op::X));
    ops.extend((0..QPUF_QUBITS).map(|qubit| Op::Ry {
        qubit,
        theta: c.theta,
    }));
    ops.extend((0..QPUF_QUBITS).map(Op::H));
    ops.extend(
        CNOT_PAIRS
            .iter()
            .map(|&(control, target)| Op::Cnot { control, target }),
    );
    ops.extend((0..CONTROL_QUBITS).map(Op::Idle));
    ops.extend((0..QPUF_QUBITS).map(Op::Measure));
    Circuit {
        n_qubits: QPUF_QUBITS,
        ops,
    }
}

/// Recovers the challenge a circuit was built from, failing if the circuit
/// deviates in any way from [`build_qpuf_circuit`]'s layout.
pub fn validate_qpuf_circuit(circuit: &Circuit) -> Result<Challenge> {
    if circuit.n_qubits != QPUF_QUBITS {
        return Err(Error::Validation(format!(
            "QPUF circuits have {QPUF_QUBITS} qubits, got {}",
            circuit.n_qubits
        )));
    }
    let mut bits = vec![false; QPUF_QUBITS];
    for op in circuit.ops.iter().take_while(|op| matches!(op, Op::X(_))) {
        if let Op::X(q) = *op {
            if q >= QPUF_QUBITS {
                return Err(Error::Validation(format!("X on out-of-range qubit {q}")));
            }
            bits[q] = true;
        }
    }
    let theta = circuit
        .ops
        .iter()
        .find_map(|op| match op {
            Op::Ry { theta, .. } => Some(*theta),
            _ => None,
        })
        .ok_or_else(|| Error::Validation("circuit has no Ry rotation".into()))?;
    let challenge =
        Challenge::new(bits.into(), theta).map_err(|e| Error::Validation(e.to_string()))?;
    if build_qpuf_circuit(&challenge) != *circuit {
        return Err(Error::Validation(
            "operation sequence differs from the QPUF layout (X, Ry, H, CNOT 0-4..3-7, idle 0-3, measure)"
                .into(),
        ));
    }
    Ok(challenge)
}

/// Runs any circuit on the density-matrix engine and returns the outcome
/// distribution before readout error. Idle ops use the profile's idle
/// duration.
pub fn simulate(circuit: &Circuit, profile: &DeviceProfile) -> Result<OutcomeDistribution> {
    let mut rho = DensityMatrix::basis(circuit.n_qubits, &BitString::zeros(circuit.n_qubits))?;
    let h = GateMatrix::hadamard();
    for op in &circuit.ops {
        match *op {
            Op::X(q) => rho.apply_x_mut(q)?,
            Op::Ry { qubit, theta } => rho.apply_1q_mut(&GateMatrix::ry(theta), qubit)?,
            Op::H(q) => rho.apply_1q_mut(&h, q)?,
            Op::Cnot { control, target } => rho.apply_cnot_mut(control, target)?,
            Op::Idle(q) => {
                if q >= profile.qubits.len() {
                    return Err(Error::QubitIndex {
                        index: q,
                        n_qubits: profile.qubits.len(),
                    });
                }
                rho.apply_channel_mut(&idle_channel(profile, q, profile.idle_duration_us), q)?
            }
            Op::Measure(_) => {}
        }
    }
    Ok(measure_distribution(&rho))
}

/// Engine distribution with readout error folded in as a confusion matrix.
pub fn observed_distribution(
    circuit: &Circuit,
    profile: &DeviceProfile,
) -> Result<OutcomeDistribution> {
    Ok(simulate(circuit, profile)?.with_bit_flips(&profile.readout_errors()))
}

/// One QPUF job: `shots` measurements of one challenge on one device.
#[derive(Debug, Clone, PartialEq)]
pub struct JobResult {
    pub challenge: Challenge,
    pub profile_name: String,
    pub shots: u64,
    pub counts: ShotCounts,
    /// Empirical per-qubit frequency of reading 1.
    pub p1: Vec<f64>,
    pub seed: u64,
}

pub fn execute_job(
    circuit: &Circuit,
    profile: &DeviceProfile,
    shots: u64,
    seed: u64,
) -> Result<JobResult> {
    let challenge = validate_qpuf_circuit(circuit)?;
    if shots == 0 {
        return Err(Error::Argument("shots must be at least 1".into()));
    }
    let dist = simulate(circuit, profile)?;
    let raw = sample_shots(&dist, shots, derive_seed(seed, &[SeedPart::Label("shots")]))?;
    let counts = apply_readout_error(
        &raw,
        profile,
        derive_seed(seed, &[SeedPart::Label("readout")]),
    );
    let p1 = counts
        .per_qubit_ones()
        .iter()
        .map(|&n| n as f64 / shots as f64)
        .collect();
    Ok(JobResult {
        challenge,
        profile_name: profile.name.clone(),
        shots,
        counts,
        p1,
        seed,
    })
}

type Matrix4 = [[Complex64; 4]; 4];

const Z: Complex64 = Complex64::new(0.0, 0.0);

fn m4_mul(a: &Matrix4, b: &Matrix4) -> Matrix4 {
    let mut out = [[Z; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn m4_dagger(a: &Matrix4) -> Matrix4 {
    let mut out = [[Z; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

/// `high ⊗ low`, where `low` acts on local bit 0.
#[allow(clippy::needless_range_loop)]
fn kron(high: &Matrix2, low: &Matrix2) -> Matrix4 {
    let mut out = [[Z; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = high.0[i >> 1][j >> 1] * low.0[i & 1][j & 1];
        }
    }
    out
}

fn conjugate(op: &Matrix4, rho: &Matrix4) -> Matrix4 {
    m4_mul(&m4_mul(op, rho), &m4_dagger(op))
}

/// Outcome distribution of one (control, target) block over local indices
/// `control_bit | target_bit << 1`, readout confusion included.
fn block_distribution(
    c: &Challenge,
    profile: &DeviceProfile,
    control: usize,
    target: usize,
) -> [f64; 4] {
    let gate = |g: GateMatrix| g.as_matrix2().expect("single-qubit gate");
    let (x, ry, h) = (
        gate(GateMatrix::pauli_x()),
        gate(GateMatrix::ry(c.theta)),
        gate(GateMatrix::hadamard()),
    );
    let prep = |bit: bool| {
        let init = if bit { x } else { Matrix2::IDENTITY };
        h.mul(&ry).mul(&init)
    };
    let local = kron(
        &prep(c.init_bits.get(target)),
        &prep(c.init_bits.get(control)),
    );

    let mut rho = [[Z; 4]; 4];
    rho[0][0] = Complex64::new(1.0, 0.0);
    rho = conjugate(&local, &rho);

    // control is local bit 0, so CNOT swaps |01> (idx 1) and |11> (idx 3)
    let mut cnot = [[Z; 4]; 4];
    for (row, col) in [(0, 0), (1, 3), (2, 2), (3, 1)] {
        cnot[row][col] = Complex64::new(1.0, 0.0);
    }
    rho = conjugate(&cnot, &rho);

    let idle = idle_channel(profile, control, profile.idle_duration_us);
    let mut out = [[Z; 4]; 4];
    for k in idle.operators() {
        let term = conjugate(&kron(&Matrix2::IDENTITY, k), &rho);
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] += term[i][j];
            }
        }
    }

    let true_probs: [f64; 4] = std::array::from_fn(|i| out[i][i].re.max(0.0));
    let (ec, et) = (
        profile.qubit(control).readout_error,
        profile.qubit(target).readout_error,
    );
    let flip = |e: f64, from: usize, to: usize| if from == to { 1.0 - e } else { e };
    std::array::from_fn(|observed| {
        (0..4)
            .map(|actual| {
                flip(ec, actual & 1, observed & 1)
                    * flip(et, actual >> 1, observed >> 1)
                    * true_probs[actual]
            })
            .sum()
    })
}

/// Analytic distribution of the QPUF circuit built from four independent
/// 4x4 block computations.
///
/// The circuit never couples different (control, target) pairs, so the
/// 256-outcome distribution is the product of the block distributions.
/// This path shares no kernels with [`simulate`] and serves as its oracle.
pub fn block_oracle(c: &Challenge, profile: &DeviceProfile) -> OutcomeDistribution {
    let blocks: Vec<[f64; 4]> = CNOT_PAIRS
        .iter()
        .map(|&(control, target)| block_distribution(c, profile, control, target))
        .collect();
    let probs = (0..1usize << QPUF_QUBITS)
        .map(|idx| {
            CNOT_PAIRS
                .iter()
                .zip(&blocks)
                .map(|(&(control, target), block)| {
                    block[((idx >> control) & 1) | (((idx >> target) & 1) << 1)]
                })
                .product()
        })
        .collect();
    OutcomeDistribution::new(QPUF_QUBITS, probs).expect("block products form a distribution")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{builtin_profiles, ideal_profile};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn ch(bits: &str, theta: f64) -> Challenge {
        Challenge::new(bits.parse().unwrap(), theta).unwrap()
    }

    #[test]
    fn random_challenge_is_deterministic() {
        assert_eq!(random_challenge(42), random_challenge(42));
        assert_ne!(random_challenge(42), random_challenge(43));
    }

    #[test]
    fn random_challenge_statistics() {
        let draws: Vec<Challenge> = (0..10_000).map(random_challenge).collect();
        for q in 0..8 {
            let f = draws.iter().filter(|c| c.init_bits().get(q)).count() as f64 / 1e4;
            assert!((f - 0.5).abs() < 0.02, "bit {q}: {f}");
        }
        let mean = draws.iter().map(|c| c.theta()).sum::<f64>() / 1e4;
        assert!((mean - PI).abs() < 0.1, "{mean}");
        assert!(draws.iter().all(|c| (0.0..TAU).contains(&c.theta())));
    }

    #[test]
    fn angle_normalization() {
        assert_eq!(ch("00000000", TAU).theta(), 0.0);
        assert!((ch("00000000", -FRAC_PI_2).theta() - 1.5 * PI).abs() < 1e-15);
        assert!(ch("00000000", -1e-300).theta() < TAU);
        assert!(Challenge::new("0000".parse().unwrap(), 0.0).is_err());
        assert!(Challenge::new(BitString::zeros(8), f64::NAN).is_err());
    }

    #[test]
    fn challenge_lines_round_trip() {
        let cs: Vec<Challenge> = (0..50).map(random_challenge).collect();
        let text: String = cs.iter().map(|c| c.to_line() + "\n").collect();
        assert_eq!(parse_challenges(&text).unwrap(), cs);
        let err = parse_challenges("\n{\"init_bits\":\"0101\",\"theta\":1}\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn circuit_layout() {
        let zero = build_qpuf_circuit(&ch("00000000", 0.0));
        assert_eq!(zero.count(|op| matches!(op, Op::X(_))), 0);
        let ones = build_qpuf_circuit(&ch("11111111", 1.0));
        assert_eq!(ones.count(|op| matches!(op, Op::X(_))), 8);
        for c in [&zero, &ones] {
            let pairs: Vec<(usize, usize)> = c
                .ops
                .iter()
                .filter_map(|op| match *op {
                    Op::Cnot { control, target } => Some((control, target)),
                    _ => None,
                })
                .collect();
            assert_eq!(pairs, CNOT_PAIRS.to_vec());
            assert_eq!(c.count(|op| matches!(op, Op::Measure(_))), 8);
            let idles: Vec<usize> = c
                .ops
                .iter()
                .filter_map(|op| if let Op::Idle(q) = op { Some(*q) } else { None })
                .collect();
            assert_eq!(idles, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn validation_recovers_challenge_and_rejects_tampering() {
        let c = ch("10110001", 2.5);
        let circuit = build_qpuf_circuit(&c);
        assert_eq!(validate_qpuf_circuit(&circuit).unwrap(), c);

        let mut swapped = circuit.clone();
        for op in &mut swapped.ops {
            if let Op::Cnot { control: 0, target } = op {
                *target = 5;
            }
        }
        assert!(matches!(
            validate_qpuf_circuit(&swapped),
            Err(Error::Validation(_))
        ));
        assert!(execute_job(&swapped, &ideal_profile(), 16, 0).is_err());

        let mut reordered = circuit;
        reordered.ops.swap(10, 20);
        assert!(validate_qpuf_circuit(&reordered).is_err());
    }

    #[test]
    fn ideal_half_pi_zero_init_is_deterministic() {
        let job = execute_job(
            &build_qpuf_circuit(&ch("00000000", FRAC_PI_2)),
            &ideal_profile(),
            1024,
            5,
        )
        .unwrap();
        assert_eq!(job.counts.count(&BitString::zeros(8)), 1024);
        assert!(job.p1.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn ideal_zero_angle_is_uniform() {
        let d = simulate(&build_qpuf_circuit(&ch("00000000", 0.0)), &ideal_profile()).unwrap();
        assert!(d.probs().iter().all(|p| (p - 1.0 / 256.0).abs() < 1e-12));
    }

    #[test]
    fn ideal_targets_set_gives_single_outcome() {
        let c = ch("00001111", FRAC_PI_2);
        let oracle = block_oracle(&c, &ideal_profile());
        let expected: BitString = "00001111".parse().unwrap();
        assert!((oracle.prob(&expected) - 1.0).abs() < 1e-12);
        let job = execute_job(&build_qpuf_circuit(&c), &ideal_profile(), 256, 9).unwrap();
        assert_eq!(job.counts.count(&expected), 256);
    }

    #[test]
    fn single_block_zero_angle_is_uniform() {
        let b = block_distribution(&ch("00000000", 0.0), &ideal_profile(), 0, 4);
        assert!(b.iter().all(|p| (p - 0.25).abs() < 1e-12), "{b:?}");
    }

    #[test]
    fn oracle_matches_engine_on_builtins() {
        for profile in builtin_profiles() {
            for seed in 0..20 {
                let c = random_challenge(seed);
                let engine = observed_distribution(&build_qpuf_circuit(&c), &profile).unwrap();
                let tv = engine.total_variation(&block_oracle(&c, &profile));
                assert!(tv < 1e-9, "{} seed {seed}: tv {tv:e}", profile.name);
            }
        }
    }

    #[test]
    fn job_is_deterministic() {
        let p = builtin_profiles().remove(0);
        let circuit = build_qpuf_circuit(&random_challenge(1));
        assert_eq!(
            execute_job(&circuit, &p, 1024, 77).unwrap(),
            execute_job(&circuit, &p, 1024, 77).unwrap()
        );
        assert!(execute_job(&circuit, &p, 0, 77).is_err());
    }
}
