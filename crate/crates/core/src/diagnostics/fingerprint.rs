use sha2::{Digest, Sha256};

use crate::field::{GridSpec, WallMode};
use crate::model::ModelParams;

fn short_hex(bytes: &[u8]) -> String {
    bytes[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// First 16 hex digits of the SHA-256 of the grid description.
pub fn grid_hash(g: &GridSpec) -> String {
    let mut h = Sha256::new();
    h.update((g.nx as u64).to_le_bytes());
    h.update((g.ny as u64).to_le_bytes());
    h.update(g.lx.to_bits().to_le_bytes());
    h.update(g.ly.to_bits().to_le_bytes());
    h.update([match g.wall_mode {
        WallMode::AllSlipWalls => 0u8,
        WallMode::PeriodicX => 1u8,
    }]);
    short_hex(&h.finalize())
}

/// First 16 hex digits of the SHA-256 of the parameters, force values
/// included bit for bit.
pub fn params_fingerprint(p: &ModelParams) -> String {
    let mut h = Sha256::new();
    for v in [p.m, p.gamma, p.friction, p.p_exp] {
        h.update(v.to_bits().to_le_bytes());
    }
    for v in p.force.xcomp.iter().chain(&p.force.ycomp) {
        h.update(v.to_bits().to_le_bytes());
    }
    h.update(grid_hash(&p.grid()).as_bytes());
    short_hex(&h.finalize())
}

/// Fingerprint of arbitrary configuration text.
pub fn text_fingerprint(s: &str) -> String {
    short_hex(&Sha256::digest(s.as_bytes()))
}
