use qpuf_core::circuit::{block_oracle, build_qpuf_circuit, observed_distribution, Op};
use qpuf_core::crp::generate_challenges;
use qpuf_core::noise::builtin_profiles;

use crate::exit::{CmdResult, Failure};

pub const TOLERANCE: f64 = 1e-9;

/// Engine vs block oracle on `trials` random challenges for every built-in
/// profile. `corrupt_cnot` reverses the first CNOT in the engine circuit as a
/// negative control.
pub fn check(trials: usize, seed: u64, corrupt_cnot: bool) -> CmdResult {
    if trials == 0 {
        return Err(Failure::Usage("--trials must be at least 1".into()));
    }
    let challenges = generate_challenges(trials, seed);
    let mut worst = 0.0f64;
    let mut runs = 0;
    for profile in builtin_profiles() {
        for c in &challenges {
            let mut circuit = build_qpuf_circuit(c);
            if corrupt_cnot {
                if let Some(op) = circuit
                    .ops
                    .iter_mut()
                    .find(|op| matches!(op, Op::Cnot { .. }))
                {
                    if let Op::Cnot { control, target } = *op {
                        *op = Op::Cnot {
                            control: target,
                            target: control,
                        };
                    }
                }
            }
            let engine = observed_distribution(&circuit, &profile)?;
            let tv = engine.total_variation(&block_oracle(c, &profile));
            runs += 1;
            if tv >= TOLERANCE {
                return Err(Failure::Check(format!(
                    "profile {}: challenge {} has total variation {tv:e} (tolerance {TOLERANCE:e})",
                    profile.name,
                    c.to_line()
                )));
            }
            worst = worst.max(tv);
        }
    }
    println!("oracle check passed: {runs} runs, max total variation {worst:.3e}");
    Ok(())
}
