//! Simulation toolkit for an 8-qubit quantum physical unclonable function
//! (QPUF) and the SCADA device attestation scheme built on it.
//!
//! - [`state`]: exact density-matrix engine (gates, Kraus channels, sampling)
//! - [`noise`]: device calibration profiles, idle decoherence, readout error
//! - [`circuit`]: challenges, the QPUF circuit, job execution, block oracle
//! - [`crp`]: response derivation, multi-instance experiments, CRP storage
//! - [`metrics`]: randomness, diffuseness, reliability, uniqueness
//! - [`attestation`]: IED/RTU/MTU enrollment, authentication, integrity tags

pub mod attestation;
pub mod bits;
pub mod circuit;
pub mod crp;
pub mod error;
pub mod metrics;
pub mod noise;
pub mod seed;
pub mod state;
pub mod store;

pub use attestation::{
    integrity_tag, predict_mismatch, verify_response, verify_tag, AttestationDb, AuthDecision,
    DeviceIdentity, EnrollmentRecord, IntegrityTag, MtuRegistry, PredictedMismatch, Role,
    RtuGateway,
};
pub use bits::BitString;
pub use circuit::{
    block_oracle, build_qpuf_circuit, execute_job, random_challenge, Challenge, Circuit, JobResult,
    Op,
};
pub use crp::{
    derive_response, generate_challenges, run_experiment, CrpStore, InstanceRecord, ResponseRecord,
};
pub use error::{Error, Result};
pub use metrics::{compute_report, MetricsReport};
pub use noise::{builtin_profile, builtin_profiles, load_profile, DeviceProfile, QubitCalibration};
pub use state::{DensityMatrix, GateMatrix, KrausSet, OutcomeDistribution, ShotCounts};
