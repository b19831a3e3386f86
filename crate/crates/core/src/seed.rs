//! Named RNG sub-streams derived from a single run seed.
//!
//! Every consumer hashes the run seed together with a path of labels
//! (`["agent", meeting_id, "3", "round", "2"]`), so each stream is
//! reproducible on its own and independent of evaluation order.

use sha2::{Digest, Sha256};

pub fn derive_seed(base: u64, path: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    for part in path {
        h.update([0x1f]);
        h.update(part.as_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 digest is 32 bytes"))
}

/// Seed for one agent's draw in one round of one meeting.
pub fn agent_seed(base: u64, meeting_id: &str, agent_index: usize, round: usize) -> u64 {
    derive_seed(
        base,
        &["agent", meeting_id, &agent_index.to_string(), "round", &round.to_string()],
    )
}

/// Hex SHA-256 of a string.
pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}
