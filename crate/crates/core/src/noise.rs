//! Device calibration profiles and the noise they induce.
//!
//! A profile is a per-qubit calibration table (T1, T2, frequency, readout
//! error) plus the length of the idle gate. Idle gates become an
//! amplitude-damping channel followed by a pure-dephasing channel; readout
//! error is applied classically after sampling.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, SeedPart};
use crate::state::{KrausSet, Matrix2, ShotCounts};

pub const PROFILE_QUBITS: usize = 8;

/// Idle length used by the bundled device profiles.
pub const DEFAULT_IDLE_DURATION_US: f64 = 50.0;

/// Synthetic readout error for the bundled device profiles.
pub const DEFAULT_READOUT_ERROR: f64 = 0.01;

/// Stand-in for an infinite coherence time; `exp(-t / 1e300)` is exactly 1
/// in double precision for any realistic `t`.
pub const IDEAL_COHERENCE_US: f64 = 1e300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitCalibration {
    pub index: usize,
    pub t1_us: f64,
    pub t2_us: f64,
    pub frequency_ghz: f64,
    pub readout_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub name: String,
    pub idle_duration_us: f64,
    pub seed_salt: u64,
    pub qubits: Vec<QubitCalibration>,
}

impl DeviceProfile {
    pub fn qubit(&self, index: usize) -> &QubitCalibration {
        &self.qubits[index]
    }

    pub fn readout_errors(&self) -> Vec<f64> {
        self.qubits.iter().map(|q| q.readout_error).collect()
    }

    /// Copy with a different idle length.
    pub fn with_idle_duration(&self, idle_duration_us: f64) -> Self {
        Self {
            idle_duration_us,
            ..self.clone()
        }
    }

    /// Pretty-printed profile document accepted by [`load_profile`].
    pub fn to_document(&self) -> String {
        serde_json::to_string_pretty(self).expect("profiles always serialize")
    }
}

fn default_salt(name: &str) -> u64 {
    derive_seed(
        0,
        &[SeedPart::Label("profile"), SeedPart::Bytes(name.as_bytes())],
    )
}

/// Relaxation and dephasing strengths of one idle period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdleChannel {
    pub gamma: f64,
    pub lambda: f64,
}

impl IdleChannel {
    /// `gamma = 1 - exp(-t/T1)`, `lambda = 1 - exp(-t/T_phi)` with
    /// `1/T_phi = max(0, 1/T2 - 1/(2 T1))`.
    pub fn new(cal: &QubitCalibration, duration_us: f64) -> Self {
        let t = duration_us.max(0.0);
        let gamma = 1.0 - (-t / cal.t1_us).exp();
        let dephasing_rate = (1.0 / cal.t2_us - 1.0 / (2.0 * cal.t1_us)).max(0.0);
        let lambda = 1.0 - (-t * dephasing_rate).exp();
        Self { gamma, lambda }
    }

    /// Amplitude damping followed by dephasing.
    pub fn kraus(&self) -> KrausSet {
        if self.gamma == 0.0 && self.lambda == 0.0 {
            return KrausSet::identity();
        }
        let damping = amplitude_damping(self.gamma);
        let dephasing = phase_damping(self.lambda);
        damping.then(&dephasing)
    }
}

pub fn amplitude_damping(gamma: f64) -> KrausSet {
    KrausSet::new_unchecked(vec![
        Matrix2::real([[1.0, 0.0], [0.0, (1.0 - gamma).sqrt()]]),
        Matrix2::real([[0.0, gamma.sqrt()], [0.0, 0.0]]),
    ])
}

pub fn phase_damping(lambda: f64) -> KrausSet {
    KrausSet::new_unchecked(vec![
        Matrix2::real([[1.0, 0.0], [0.0, (1.0 - lambda).sqrt()]]),
        Matrix2::real([[0.0, 0.0], [0.0, lambda.sqrt()]]),
    ])
}

/// Kraus set for idling `qubit` for `duration_us`.
pub fn idle_channel(profile: &DeviceProfile, qubit: usize, duration_us: f64) -> KrausSet {
    IdleChannel::new(profile.qubit(qubit), duration_us).kraus()
}

/// Flips bit `i` of every shot independently with the profile's readout
/// error for qubit `i`.
pub fn apply_readout_error(counts: &ShotCounts, profile: &DeviceProfile, seed: u64) -> ShotCounts {
    let errors = profile.readout_errors();
    if errors.iter().all(|&e| e == 0.0) {
        return counts.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: BTreeMap<usize, u64> = BTreeMap::new();
    for (&idx, &n) in counts.counts() {
        for _ in 0..n {
            let mut observed = idx;
            for (q, &e) in errors.iter().enumerate().take(counts.n_qubits()) {
                if e > 0.0 && rng.gen_bool(e) {
                    observed ^= 1 << q;
                }
            }
            *out.entry(observed).or_insert(0) += 1;
        }
    }
    ShotCounts::from_counts(counts.n_qubits(), out)
}

#[derive(Deserialize)]
struct RawQubit {
    index: Option<i64>,
    t1_us: Option<f64>,
    t2_us: Option<f64>,
    frequency_ghz: Option<f64>,
    readout_error: Option<f64>,
}

#[derive(Deserialize)]
struct RawProfile {
    name: Option<String>,
    idle_duration_us: Option<f64>,
    seed_salt: Option<u64>,
    qubits: Option<Vec<RawQubit>>,
}

fn schema(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Schema {
        field: field.into(),
        reason: reason.into(),
    }
}

fn required<T>(value: Option<T>, field: &str) -> Result<T> {
    value.ok_or_else(|| schema(field, "missing"))
}

fn positive(value: Option<f64>, field: &str) -> Result<f64> {
    let v = required(value, field)?;
    if !(v.is_finite() && v > 0.0) {
        return Err(schema(field, format!("must be a positive number, got {v}")));
    }
    Ok(v)
}

/// Parses and validates a profile document.
///
/// `seed_salt` is optional and defaults to a digest of the name. Qubits may
/// appear in any order but must cover indices 0-7 exactly once.
pub fn load_profile(source: &str) -> Result<DeviceProfile> {
    let raw: RawProfile =
        serde_json::from_str(source).map_err(|e| schema("<document>", e.to_string()))?;
    let name = required(raw.name, "name")?;
    if name.trim().is_empty() {
        return Err(schema("name", "must not be empty"));
    }
    let idle_duration_us = required(raw.idle_duration_us, "idle_duration_us")?;
    if !(idle_duration_us.is_finite() && idle_duration_us >= 0.0) {
        return Err(schema(
            "idle_duration_us",
            format!("must be a non-negative number, got {idle_duration_us}"),
        ));
    }
    let raw_qubits = required(raw.qubits, "qubits")?;
    if raw_qubits.len() != PROFILE_QUBITS {
        return Err(schema(
            "qubits",
            format!(
                "expected {PROFILE_QUBITS} entries, found {}",
                raw_qubits.len()
            ),
        ));
    }
    let mut slots: Vec<Option<QubitCalibration>> = vec![None; PROFILE_QUBITS];
    for (pos, q) in raw_qubits.into_iter().enumerate() {
        let path = |f: &str| format!("qubits[{pos}].{f}");
        let index = required(q.index, &path("index"))?;
        if index < 0 || index as usize >= PROFILE_QUBITS {
            return Err(schema(
                path("index"),
                format!("must be in 0..{PROFILE_QUBITS}, got {index}"),
            ));
        }
        let index = index as usize;
        if slots[index].is_some() {
            return Err(schema(
                path("index"),
                format!("duplicate qubit index {index}"),
            ));
        }
        let readout_error = required(q.readout_error, &path("readout_error"))?;
        if !(0.0..0.5).contains(&readout_error) {
            return Err(schema(
                path("readout_error"),
                format!("must be in [0, 0.5), got {readout_error}"),
            ));
        }
        slots[index] = Some(QubitCalibration {
            index,
            t1_us: positive(q.t1_us, &path("t1_us"))?,
            t2_us: positive(q.t2_us, &path("t2_us"))?,
            frequency_ghz: positive(q.frequency_ghz, &path("frequency_ghz"))?,
            readout_error,
        });
    }
    let qubits = slots
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .expect("eight distinct in-range indices fill every slot");
    let seed_salt = raw.seed_salt.unwrap_or_else(|| default_salt(&name));
    Ok(DeviceProfile {
        name,
        idle_duration_us,
        seed_salt,
        qubits,
    })
}

/// `(T1 us, T2 us, frequency GHz)` per qubit, from the published calibration
/// snapshots.
const IBM_OSAKA: [(f64, f64, f64); 8] = [
    (403.8, 238.66, 4.718),
    (320.35, 363.44, 4.8),
    (228.67, 191.89, 4.833),
    (350.98, 198.82, 4.661),
    (43.98, 83.54, 4.907),
    (161.3, 68.47, 4.72),
    (334.1, 39.52, 4.635),
    (269.28, 9.07, 4.717),
];

const IBM_KYOTO: [(f64, f64, f64); 8] = [
    (184.74, 30.2, 4.908),
    (195.1, 71.18, 4.856),
    (247.98, 51.49, 4.733),
    (94.89, 47.87, 4.82),
    (417.88, 67.25, 4.854),
    (189.22, 331.44, 4.728),
    (213.21, 263.22, 4.783),
    (329.81, 126.1, 4.944),
];

const IBM_SHERBROOKE: [(f64, f64, f64); 8] = [
    (375.14, 172.24, 4.636),
    (351.25, 70.13, 4.736),
    (237.88, 150.08, 4.819),
    (370.71, 163.46, 4.747),
    (120.26, 199.6, 4.788),
    (104.23, 161.77, 4.851),
    (312.87, 186.59, 4.9),
    (120.79, 221.67, 4.756),
];

fn table_profile(name: &str, rows: &[(f64, f64, f64); 8], readout_error: f64) -> DeviceProfile {
    DeviceProfile {
        name: name.to_string(),
        idle_duration_us: DEFAULT_IDLE_DURATION_US,
        seed_salt: default_salt(name),
        qubits: rows
            .iter()
            .enumerate()
            .map(|(index, &(t1_us, t2_us, frequency_ghz))| QubitCalibration {
                index,
                t1_us,
                t2_us,
                frequency_ghz,
                readout_error,
            })
            .collect(),
    }
}

/// Noise-free reference device: infinite coherence and perfect readout.
pub fn ideal_profile() -> DeviceProfile {
    let rows = [(IDEAL_COHERENCE_US, IDEAL_COHERENCE_US, 5.0); 8];
    table_profile("ideal", &rows, 0.0)
}

/// The three calibrated IBM Eagle devices followed by `ideal`.
pub fn builtin_profiles() -> Vec<DeviceProfile> {
    vec![
        table_profile("ibm_osaka", &IBM_OSAKA, DEFAULT_READOUT_ERROR),
        table_profile("ibm_kyoto", &IBM_KYOTO, DEFAULT_READOUT_ERROR),
        table_profile("ibm_sherbrooke", &IBM_SHERBROOKE, DEFAULT_READOUT_ERROR),
        ideal_profile(),
    ]
}

pub fn builtin_profile(name: &str) -> Option<DeviceProfile> {
    builtin_profiles().into_iter().find(|p| p.name == name)
}
