//! QPUF-backed device attestation for a SCADA hierarchy.
//!
//! IEDs enroll through an RTU, which acts as the quantum gateway: it runs a
//! random challenge on its QPUF device profile and stores the
//! challenge-response pair under `(ied, rtu)`. Authentication re-runs the
//! stored challenge on the RTU's device and accepts when the fresh response
//! is within a Hamming threshold of the enrolled one. MTUs register RTUs the
//! same way one tier up. After attestation, field data is tagged with
//! `SHA-256(data, response, timestamp)`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use subtle::ConstantTimeEq;

use crate::bits::BitString;
use crate::circuit::{block_oracle, build_qpuf_circuit, execute_job, random_challenge, Challenge};
use crate::crp::{derive_response, ResponseRecord};
use crate::error::{Error, Result};
use crate::metrics::hamming;
use crate::noise::DeviceProfile;
use crate::seed::{derive_seed, SeedPart};
use crate::store::{LineStore, StoreRecord};

/// Seconds since the Unix epoch.
pub type Timestamp = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    #[serde(rename = "IED")]
    Ied,
    #[serde(rename = "RTU")]
    Rtu,
    #[serde(rename = "MTU")]
    Mtu,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeviceIdentity {
    pub id: Vec<u8>,
    pub role: Role,
}

impl DeviceIdentity {
    pub fn new(id: impl Into<Vec<u8>>, role: Role) -> Self {
        Self {
            id: id.into(),
            role,
        }
    }

    /// Lowercase hex of the raw identifier, as stored in the database.
    pub fn hex_id(&self) -> String {
        hex::encode(&self.id)
    }
}

/// One enrolled challenge-response pair bound to a `(device, verifier)`
/// pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrollmentRecord {
    /// Hex of the enrolled device's identifier.
    pub ied_id: String,
    /// Hex of the verifying gateway (RTU, or MTU when registering RTUs).
    pub rtu_id: String,
    pub enrolled_at: Timestamp,
    #[serde(flatten)]
    pub response: ResponseRecord,
}

impl EnrollmentRecord {
    pub fn challenge(&self) -> &Challenge {
        &self.response.challenge
    }

    pub fn response_bits(&self) -> &BitString {
        &self.response.bits
    }

    pub fn profile_name(&self) -> &str {
        &self.response.profile_name
    }
}

impl StoreRecord for EnrollmentRecord {
    type Key = (String, String);

    fn key(&self) -> Self::Key {
        (self.ied_id.clone(), self.rtu_id.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuthDecision {
    pub ied_id: String,
    pub rtu_id: String,
    pub accepted: bool,
    pub hd: usize,
    pub threshold: usize,
    pub fresh_response: BitString,
    pub decided_at: Timestamp,
}

/// How an enrolling gateway picks a challenge.
///
/// Challenges are drawn at random and kept only when every qubit's observed
/// P(1) is at least `min_margin` away from 1/2, so the enrolled response can
/// be regenerated bit-exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnrollPolicy {
    pub min_margin: f64,
    pub max_attempts: u32,
}

impl Default for EnrollPolicy {
    fn default() -> Self {
        Self {
            min_margin: 0.15,
            max_attempts: 64,
        }
    }
}

impl EnrollPolicy {
    /// Accept the first random challenge.
    pub fn unscreened() -> Self {
        Self {
            min_margin: 0.0,
            max_attempts: 1,
        }
    }
}

/// Persistent CRP database plus an in-memory decision log.
#[derive(Debug, Default)]
pub struct AttestationDb {
    store: LineStore<EnrollmentRecord>,
    decisions: Vec<AuthDecision>,
}

impl AttestationDb {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn from_store(store: LineStore<EnrollmentRecord>) -> Self {
        Self {
            store,
            decisions: Vec::new(),
        }
    }

    pub fn records(&self) -> &[EnrollmentRecord] {
        self.store.records()
    }

    pub fn store(&self) -> &LineStore<EnrollmentRecord> {
        &self.store
    }

    pub fn decisions(&self) -> &[AuthDecision] {
        &self.decisions
    }

    pub fn lookup(
        &self,
        device: &DeviceIdentity,
        verifier: &DeviceIdentity,
    ) -> Option<&EnrollmentRecord> {
        self.store.get(&(device.hex_id(), verifier.hex_id()))
    }

    #[allow(clippy::too_many_arguments)]
    fn enroll(
        &mut self,
        device: &DeviceIdentity,
        verifier: &DeviceIdentity,
        profile: &DeviceProfile,
        policy: EnrollPolicy,
        shots: u64,
        seed: u64,
        now: Timestamp,
    ) -> Result<EnrollmentRecord> {
        let key = (device.hex_id(), verifier.hex_id());
        if self.store.contains(&key) {
            return Err(Error::Conflict(format!(
                "device {} already enrolled at {}",
                key.0, key.1
            )));
        }
        let attempts = policy.max_attempts.max(1);
        let mut chosen = None;
        for attempt in 0..attempts {
            let part = |label| {
                [
                    SeedPart::Label(label),
                    SeedPart::Bytes(&device.id),
                    SeedPart::Bytes(&verifier.id),
                    SeedPart::U64(u64::from(attempt)),
                ]
            };
            let challenge = random_challenge(derive_seed(seed, &part("challenge")));
            let job = execute_job(
                &build_qpuf_circuit(&challenge),
                profile,
                shots,
                derive_seed(seed, &part("enroll")),
            )?;
            let margin = job
                .p1
                .iter()
                .map(|p| (p - 0.5).abs())
                .fold(f64::INFINITY, f64::min);
            if margin >= policy.min_margin {
                chosen = Some(job);
                break;
            }
        }
        let job = chosen.ok_or_else(|| {
            Error::Argument(format!(
                "no challenge with margin {} found in {attempts} attempts on `{}`",
                policy.min_margin, profile.name
            ))
        })?;
        let record = EnrollmentRecord {
            ied_id: key.0,
            rtu_id: key.1,
            enrolled_at: now,
            response: derive_response(&job, 0),
        };
        self.store.append(record.clone())?;
        Ok(record)
    }

    #[allow(clippy::too_many_arguments)]
    fn authenticate(
        &mut self,
        device: &DeviceIdentity,
        verifier: &DeviceIdentity,
        profile: &DeviceProfile,
        threshold: usize,
        shots: u64,
        seed: u64,
        now: Timestamp,
    ) -> Result<AuthDecision> {
        let record = self
            .lookup(device, verifier)
            .ok_or_else(|| Error::NotEnrolled(device.hex_id()))?
            .clone();
        let decision = verify_response(&record, profile, threshold, shots, seed, now)?;
        self.decisions.push(decision.clone());
        Ok(decision)
    }
}

/// Regenerates the enrolled challenge on `profile` and compares the fresh
/// response against the stored one.
pub fn verify_response(
    record: &EnrollmentRecord,
    profile: &DeviceProfile,
    threshold: usize,
    shots: u64,
    seed: u64,
    now: Timestamp,
) -> Result<AuthDecision> {
    let job_seed = derive_seed(
        seed,
        &[
            SeedPart::Label("authenticate"),
            SeedPart::Bytes(record.ied_id.as_bytes()),
            SeedPart::Bytes(record.rtu_id.as_bytes()),
        ],
    );
    let job = execute_job(
        &build_qpuf_circuit(record.challenge()),
        profile,
        shots,
        job_seed,
    )?;
    let fresh = derive_response(&job, 0).bits;
    let hd = hamming(&fresh, record.response_bits())?.distance;
    Ok(AuthDecision {
        ied_id: record.ied_id.clone(),
        rtu_id: record.rtu_id.clone(),
        accepted: hd <= threshold,
        hd,
        threshold,
        fresh_response: fresh,
        decided_at: now,
    })
}

/// Oracle forecast of how a device would answer an enrolled challenge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictedMismatch {
    /// Bits whose oracle majority disagrees with the enrolled bit by more
    /// than the margin.
    pub certain: usize,
    /// Bits within the margin of 0.5, which shot noise may resolve either way.
    pub uncertain: usize,
    /// Largest `|p1 - 0.5|` among the disagreeing bits, 0 if none.
    pub max_margin: f64,
}

/// Compares the enrolled response with the block-oracle marginals of
/// `profile`, treating bits within `margin` of 0.5 as undecided.
pub fn predict_mismatch(
    record: &EnrollmentRecord,
    profile: &DeviceProfile,
    margin: f64,
) -> PredictedMismatch {
    let dist = block_oracle(record.challenge(), profile);
    let mut out = PredictedMismatch {
        certain: 0,
        uncertain: 0,
        max_margin: 0.0,
    };
    for (q, enrolled) in record.response_bits().bits().iter().enumerate() {
        let p = dist.marginal_one(q);
        let m = (p - 0.5).abs();
        if m <= margin {
            out.uncertain += 1;
        } else if (p > 0.5) != *enrolled {
            out.certain += 1;
            out.max_margin = out.max_margin.max(m);
        }
    }
    out
}

fn require_role(device: &DeviceIdentity, role: Role) -> Result<()> {
    if device.role != role {
        return Err(Error::Argument(format!(
            "device {} has role {:?}, expected {role:?}",
            device.hex_id(),
            device.role
        )));
    }
    Ok(())
}

/// RTU acting as the QPUF gateway for its IEDs.
#[derive(Debug)]
pub struct RtuGateway {
    identity: DeviceIdentity,
    profile: DeviceProfile,
    db: AttestationDb,
    policy: EnrollPolicy,
}

impl RtuGateway {
    pub fn new(
        identity: DeviceIdentity,
        profile: DeviceProfile,
        db: AttestationDb,
    ) -> Result<Self> {
        require_role(&identity, Role::Rtu)?;
        Ok(Self {
            identity,
            profile,
            db,
            policy: EnrollPolicy::default(),
        })
    }

    pub fn with_policy(mut self, policy: EnrollPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn identity(&self) -> &DeviceIdentity {
        &self.identity
    }

    pub fn profile(&self) -> &DeviceProfile {
        &self.profile
    }

    pub fn db(&self) -> &AttestationDb {
        &self.db
    }

    pub fn enroll(
        &mut self,
        ied: &DeviceIdentity,
        shots: u64,
        seed: u64,
        now: Timestamp,
    ) -> Result<EnrollmentRecord> {
        require_role(ied, Role::Ied)?;
        let profile = self.profile.clone();
        self.db
            .enroll(ied, &self.identity, &profile, self.policy, shots, seed, now)
    }

    /// Authenticates against this gateway's own device.
    pub fn authenticate(
        &mut self,
        ied: &DeviceIdentity,
        threshold: usize,
        shots: u64,
        seed: u64,
        now: Timestamp,
    ) -> Result<AuthDecision> {
        let profile = self.profile.clone();
        self.authenticate_on(ied, &profile, threshold, shots, seed, now)
    }

    /// Authenticates with the response regenerated on `profile`, e.g. a
    /// cloned or spoofed device answering in place of the enrolled one.
    pub fn authenticate_on(
        &mut self,
        ied: &DeviceIdentity,
        profile: &DeviceProfile,
        threshold: usize,
        shots: u64,
        seed: u64,
        now: Timestamp,
    ) -> Result<AuthDecision> {
        let identity = self.identity.clone();
        self.db
            .authenticate(ied, &identity, profile, threshold, shots, seed, now)
    }
}

/// MTU registry of RTU fingerprints.
#[derive(Debug)]
pub struct MtuRegistry {
    identity: DeviceIdentity,
    db: AttestationDb,
    policy: EnrollPolicy,
}

impl MtuRegistry {
    pub fn new(identity: DeviceIdentity, db: AttestationDb) -> Result<Self> {
        require_role(&identity, Role::Mtu)?;
        Ok(Self {
            identity,
            db,
            policy: EnrollPolicy::default(),
        })
    }

    pub fn db(&self) -> &AttestationDb {
        &self.db
    }

    /// Enrolls an RTU using the RTU's own quantum device.
    pub fn register_rtu(
        &mut self,
        rtu: &DeviceIdentity,
        profile: &DeviceProfile,
        shots: u64,
        seed: u64,
        now: Timestamp,
    ) -> Result<EnrollmentRecord> {
        require_role(rtu, Role::Rtu)?;
        let identity = self.identity.clone();
        self.db
            .enroll(rtu, &identity, profile, self.policy, shots, seed, now)
    }

    pub fn authenticate_rtu(
        &mut self,
        rtu: &DeviceIdentity,
        profile: &DeviceProfile,
        threshold: usize,
        shots: u64,
        seed: u64,
        now: Timestamp,
    ) -> Result<AuthDecision> {
        let identity = self.identity.clone();
        self.db
            .authenticate(rtu, &identity, profile, threshold, shots, seed, now)
    }

    /// Hex ids of every registered RTU, in registration order.
    pub fn registered_rtus(&self) -> Vec<&str> {
        self.db
            .records()
            .iter()
            .map(|r| r.ied_id.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntegrityTag {
    pub digest: [u8; 32],
    pub ts: Timestamp,
}

fn tag_digest(data: &[u8], response_bits: &BitString, ts: Timestamp) -> [u8; 32] {
    let bits = response_bits.to_string();
    let mut h = Sha256::new();
    for field in [data, bits.as_bytes(), &ts.to_be_bytes()[..]] {
        h.update((field.len() as u64).to_be_bytes());
        h.update(field);
    }
    h.finalize().into()
}

/// `SHA-256(len(data) || data || len(bits) || bits || len(ts) || ts)`.
pub fn integrity_tag(data: &[u8], response_bits: &BitString, ts: Timestamp) -> IntegrityTag {
    IntegrityTag {
        digest: tag_digest(data, response_bits, ts),
        ts,
    }
}

/// Constant-time check of a tag against the data and response it claims.
pub fn verify_tag(data: &[u8], response_bits: &BitString, tag: &IntegrityTag) -> bool {
    tag_digest(data, response_bits, tag.ts)
        .ct_eq(&tag.digest)
        .into()
}
