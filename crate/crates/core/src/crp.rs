//! Challenge-response pairs: response extraction, multi-instance
//! experiments, and the CRP database.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::circuit::{build_qpuf_circuit, execute_job, random_challenge, Challenge, JobResult};
use crate::error::{Error, Result};
use crate::noise::DeviceProfile;
use crate::seed::{derive_seed, SeedPart};
use crate::store::{LineStore, StoreRecord};

/// One challenge evaluated on one device instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    #[serde(rename = "profile")]
    pub profile_name: String,
    #[serde(rename = "instance")]
    pub instance_id: u32,
    #[serde(flatten)]
    pub challenge: Challenge,
    pub bits: BitString,
    pub p1: Vec<f64>,
    pub shots: u64,
    pub seed: u64,
}

impl StoreRecord for ResponseRecord {
    /// `(profile, instance, init bits, theta bit pattern)`
    type Key = (String, u32, String, u64);

    fn key(&self) -> Self::Key {
        let (bits, theta) = self.challenge.key();
        (self.profile_name.clone(), self.instance_id, bits, theta)
    }
}

pub type CrpStore = LineStore<ResponseRecord>;

/// Per-qubit majority vote: bit `i` is 1 iff `p1[i] > 0.5`; ties give 0.
pub fn majority_bits(p1: &[f64]) -> BitString {
    p1.iter().map(|&p| p > 0.5).collect::<Vec<_>>().into()
}

pub fn derive_response(job: &JobResult, instance_id: u32) -> ResponseRecord {
    ResponseRecord {
        profile_name: job.profile_name.clone(),
        instance_id,
        challenge: job.challenge.clone(),
        bits: majority_bits(&job.p1),
        p1: job.p1.clone(),
        shots: job.shots,
        seed: job.seed,
    }
}

/// Responses of one device instance to an ordered challenge list.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRecord {
    pub instance_id: u32,
    pub profile_name: String,
    pub responses: Vec<ResponseRecord>,
}

impl InstanceRecord {
    pub fn challenges(&self) -> impl Iterator<Item = &Challenge> {
        self.responses.iter().map(|r| &r.challenge)
    }

    pub fn same_challenges(&self, other: &InstanceRecord) -> bool {
        self.responses.len() == other.responses.len()
            && self
                .challenges()
                .zip(other.challenges())
                .all(|(a, b)| a.key() == b.key())
    }
}

/// `count` independent random challenges derived from `seed`.
pub fn generate_challenges(count: usize, seed: u64) -> Vec<Challenge> {
    (0..count)
        .map(|k| {
            random_challenge(derive_seed(
                seed,
                &[SeedPart::Label("challenge"), SeedPart::U64(k as u64)],
            ))
        })
        .collect()
}

/// Seed of job `index` in `instance` for `profile`.
pub fn job_seed(base_seed: u64, instance_id: u32, index: usize, profile: &DeviceProfile) -> u64 {
    derive_seed(
        base_seed,
        &[
            SeedPart::U64(u64::from(instance_id)),
            SeedPart::U64(index as u64),
            SeedPart::U64(profile.seed_salt),
        ],
    )
}

/// Runs every challenge `n_instances` times on `profile`.
///
/// Jobs execute on the current rayon pool; output order is fixed by
/// (instance, challenge index) regardless of scheduling.
pub fn run_experiment(
    challenges: &[Challenge],
    profile: &DeviceProfile,
    shots: u64,
    n_instances: u32,
    base_seed: u64,
) -> Result<Vec<InstanceRecord>> {
    if challenges.is_empty() {
        return Err(Error::Argument(
            "experiment needs at least one challenge".into(),
        ));
    }
    if n_instances == 0 {
        return Err(Error::Argument(
            "experiment needs at least one instance".into(),
        ));
    }
    let circuits: Vec<_> = challenges.iter().map(build_qpuf_circuit).collect();
    (0..n_instances)
        .map(|instance_id| {
            let responses = circuits
                .par_iter()
                .enumerate()
                .map(|(index, circuit)| {
                    let seed = job_seed(base_seed, instance_id, index, profile);
                    execute_job(circuit, profile, shots, seed)
                        .map(|job| derive_response(&job, instance_id))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(InstanceRecord {
                instance_id,
                profile_name: profile.name.clone(),
                responses,
            })
        })
        .collect()
}

/// Regroups flat records into instances keyed by (profile, instance), in
/// order of first appearance.
pub fn group_instances(records: &[ResponseRecord]) -> Vec<InstanceRecord> {
    let mut out: Vec<InstanceRecord> = Vec::new();
    for r in records {
        match out
            .iter_mut()
            .find(|i| i.instance_id == r.instance_id && i.profile_name == r.profile_name)
        {
            Some(inst) => inst.responses.push(r.clone()),
            None => out.push(InstanceRecord {
                instance_id: r.instance_id,
                profile_name: r.profile_name.clone(),
                responses: vec![r.clone()],
            }),
        }
    }
    out
}
