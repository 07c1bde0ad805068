//! PUF quality metrics over response records.
//!
//! All percentages are in `[0, 100]`. Reliability follows the exact-match
//! rule: a key scores 100 when two regenerations agree on every bit and 0
//! otherwise.

use serde::Serialize;

use crate::bits::BitString;
use crate::crp::InstanceRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hamming {
    pub distance: usize,
    pub percent: f64,
}

pub fn hamming(a: &BitString, b: &BitString) -> Result<Hamming> {
    if a.len() != b.len() {
        return Err(Error::Argument(format!(
            "hamming distance needs equal lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let distance = a
        .bits()
        .iter()
        .zip(b.bits())
        .filter(|(x, y)| x != y)
        .count();
    let percent = if a.is_empty() {
        0.0
    } else {
        distance as f64 * 100.0 / a.len() as f64
    };
    Ok(Hamming { distance, percent })
}

/// Share of ones in `r`, in percent.
pub fn randomness(r: &BitString) -> Result<f64> {
    if r.is_empty() {
        return Err(Error::Argument("randomness of an empty response".into()));
    }
    Ok(r.ones() as f64 * 100.0 / r.len() as f64)
}

/// Mean randomness over every response of every instance.
pub fn mean_randomness<'a>(instances: impl IntoIterator<Item = &'a InstanceRecord>) -> Result<f64> {
    let (mut ones, mut bits) = (0usize, 0usize);
    for r in instances.into_iter().flat_map(|i| &i.responses) {
        ones += r.bits.ones();
        bits += r.bits.len();
    }
    if bits == 0 {
        return Err(Error::Argument(
            "randomness of an empty response set".into(),
        ));
    }
    Ok(ones as f64 * 100.0 / bits as f64)
}

/// Mean pairwise Hamming percent over all unordered response pairs of one
/// instance (intra-device distance across challenges).
pub fn diffuseness(instance: &InstanceRecord) -> Result<f64> {
    let rs = &instance.responses;
    if rs.len() < 2 {
        return Err(Error::Argument(format!(
            "diffuseness needs at least 2 responses, got {}",
            rs.len()
        )));
    }
    let mut differing = 0usize;
    let mut compared = 0usize;
    for (i, a) in rs.iter().enumerate() {
        for b in &rs[i + 1..] {
            differing += hamming(&a.bits, &b.bits)?.distance;
            compared += a.bits.len();
        }
    }
    Ok(differing as f64 * 100.0 / compared as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reliability {
    /// 100 or 0 per key, in challenge order.
    pub per_key: Vec<u8>,
    /// Percent of keys that scored 100.
    pub fraction_pct: f64,
}

fn check_same_challenges(a: &InstanceRecord, b: &InstanceRecord) -> Result<()> {
    if !a.same_challenges(b) {
        return Err(Error::Argument(format!(
            "challenge lists differ between {}#{} and {}#{}",
            a.profile_name, a.instance_id, b.profile_name, b.instance_id
        )));
    }
    Ok(())
}

/// Exact-match reliability between two regenerations of the same
/// challenge list.
pub fn reliability(i1: &InstanceRecord, i2: &InstanceRecord) -> Result<Reliability> {
    check_same_challenges(i1, i2)?;
    let per_key = i1
        .responses
        .iter()
        .zip(&i2.responses)
        .map(|(a, b)| hamming(&a.bits, &b.bits).map(|h| if h.distance == 0 { 100 } else { 0 }))
        .collect::<Result<Vec<u8>>>()?;
    let reliable = per_key.iter().filter(|&&k| k == 100).count();
    let fraction_pct = if per_key.is_empty() {
        0.0
    } else {
        reliable as f64 * 100.0 / per_key.len() as f64
    };
    Ok(Reliability {
        per_key,
        fraction_pct,
    })
}

/// Reliability across more than two instances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiReliability {
    /// Mean over all unordered instance pairs of the pairwise fraction.
    pub mean_fraction_pct: f64,
    /// 100 iff the key regenerated identically in every instance.
    pub per_key: Vec<u8>,
    /// Percent of keys identical in every instance.
    pub all_instances_pct: f64,
    pub pairs: usize,
}

pub fn multi_reliability(instances: &[&InstanceRecord]) -> Result<MultiReliability> {
    if instances.len() < 2 {
        return Err(Error::Argument(
            "reliability needs at least 2 instances".into(),
        ));
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    let mut per_key = vec![100u8; instances[0].responses.len()];
    for (i, a) in instances.iter().enumerate() {
        for b in &instances[i + 1..] {
            let r = reliability(a, b)?;
            sum += r.fraction_pct;
            pairs += 1;
            for (k, v) in per_key.iter_mut().zip(&r.per_key) {
                *k = (*k).min(*v);
            }
        }
    }
    let stable = per_key.iter().filter(|&&k| k == 100).count();
    let all_instances_pct = if per_key.is_empty() {
        0.0
    } else {
        stable as f64 * 100.0 / per_key.len() as f64
    };
    Ok(MultiReliability {
        mean_fraction_pct: sum / pairs as f64,
        per_key,
        all_instances_pct,
        pairs,
    })
}

/// Mean Hamming percent between two devices' responses to the same
/// challenges (inter-device distance).
pub fn uniqueness(a: &InstanceRecord, b: &InstanceRecord) -> Result<f64> {
    if a.profile_name == b.profile_name {
        return Err(Error::Argument(format!(
            "uniqueness compares different devices, both are `{}`",
            a.profile_name
        )));
    }
    check_same_challenges(a, b)?;
    if a.responses.is_empty() {
        return Err(Error::Argument("uniqueness of empty instances".into()));
    }
    let mut differing = 0usize;
    let mut compared = 0usize;
    for (x, y) in a.responses.iter().zip(&b.responses) {
        differing += hamming(&x.bits, &y.bits)?.distance;
        compared += x.bits.len();
    }
    Ok(differing as f64 * 100.0 / compared as f64)
}

/// `table[q][j]` is the empirical P(1) of qubit `q` in job `j`.
pub fn probability_series(instance: &InstanceRecord) -> Vec<Vec<f64>> {
    let n = instance.responses.first().map_or(0, |r| r.p1.len());
    (0..n)
        .map(|q| instance.responses.iter().map(|r| r.p1[q]).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileMetrics {
    pub profile: String,
    pub instances: usize,
    pub challenges: usize,
    pub randomness_pct: f64,
    /// Mean over instances of the per-instance diffuseness.
    pub diffuseness_pct: f64,
    /// `None` when fewer than two instances are available.
    pub reliability: Option<MultiReliability>,
    /// Per-qubit P(1) series of the first instance.
    pub per_qubit_p1: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessEntry {
    pub profile_a: String,
    pub profile_b: String,
    /// Mean over all cross-device instance pairs.
    pub uniqueness_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub profiles: Vec<ProfileMetrics>,
    pub uniqueness: Vec<UniquenessEntry>,
}

/// Computes every metric for a set of instances, grouped by profile.
///
/// All instances must share one challenge list.
pub fn compute_report(instances: &[InstanceRecord]) -> Result<MetricsReport> {
    let first = instances
        .first()
        .ok_or_else(|| Error::Argument("no instances to evaluate".into()))?;
    for inst in instances {
        check_same_challenges(first, inst)?;
    }
    let mut names: Vec<&str> = Vec::new();
    for inst in instances {
        if !names.contains(&inst.profile_name.as_str()) {
            names.push(&inst.profile_name);
        }
    }
    let group = |name: &str| -> Vec<&InstanceRecord> {
        instances
            .iter()
            .filter(|i| i.profile_name == name)
            .collect()
    };

    let mut profiles = Vec::new();
    for &name in &names {
        let members = group(name);
        let diffuseness_pct = members
            .iter()
            .map(|i| diffuseness(i))
            .sum::<Result<f64>>()?
            / members.len() as f64;
        let reliability = if members.len() >= 2 {
            Some(multi_reliability(&members)?)
        } else {
            None
        };
        profiles.push(ProfileMetrics {
            profile: name.to_string(),
            instances: members.len(),
            challenges: members[0].responses.len(),
            randomness_pct: mean_randomness(members.iter().copied())?,
            diffuseness_pct,
            reliability,
            per_qubit_p1: probability_series(members[0]),
        });
    }

    let mut entries = Vec::new();
    for (i, &a) in names.iter().enumerate() {
        for &b in &names[i + 1..] {
            let (ga, gb) = (group(a), group(b));
            let mut sum = 0.0;
            for x in &ga {
                for y in &gb {
                    sum += uniqueness(x, y)?;
                }
            }
            entries.push(UniquenessEntry {
                profile_a: a.to_string(),
                profile_b: b.to_string(),
                uniqueness_pct: sum / (ga.len() * gb.len()) as f64,
            });
        }
    }
    Ok(MetricsReport {
        profiles,
        uniqueness: entries,
    })
}
