//! Rules-based collision-avoidance safety function for a pond-survey
//! surface vehicle.
//!
//! The crate is organised along the safety function's data flow:
//!
//! * [`rule_dsl`]: the controller's rule programs and their decision-tree form.
//! * [`rbr_engine`]: the deterministic sense–decide–act loop.
//! * [`safety_kernel`]: 1oo2 voter, watchdog, whisker guard latch.
//! * [`verifier`]: explicit-state program model checker over the real engine.
//! * [`pond_sim`]: deterministic 2-D pond simulation with fault injection.
//! * [`evidence`]: Monte Carlo campaigns, ALARP banding, claims–arguments–evidence graph.
//! * [`cli`]: the `pondguard` command line.

pub mod cli;
pub mod evidence;
pub mod pond_sim;
pub mod rbr_engine;
pub mod rule_dsl;
pub mod safety_kernel;
pub mod verifier;

use sha2::{Digest, Sha256};

/// First 8 bytes (big-endian) of the SHA-256 digest.
pub fn content_hash64(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    u64::from_be_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// Lower-case hex SHA-256 digest.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
