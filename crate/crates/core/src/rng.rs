//! Deterministic stream derivation for reproducible generation.
//!
//! Every random decision in the toolkit draws from a ChaCha8 stream keyed
//! by (master seed, domain label, index). Streams with distinct keys are
//! statistically independent, so work items can be scheduled in any order
//! or across any number of workers without changing a single output byte.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derive the 32-byte ChaCha8 key for (master, domain, index).
///
/// Key = SHA-256(master_le || 0xff || domain || 0xff || index_le).
/// The 0xff separators cannot occur inside the little-endian integers'
/// ambiguous positions relative to ASCII domain labels, so distinct
/// (master, domain, index) triples never collide on the same preimage.
fn derive_key(master: u64, domain: &str, index: u64) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update([0xff]);
    hasher.update(domain.as_bytes());
    hasher.update([0xff]);
    hasher.update(index.to_le_bytes());
    hasher.finalize().into()
}

/// Deterministic RNG for one (master, domain, index) work item.
pub fn derive_rng(master: u64, domain: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(derive_key(master, domain, index))
}

/// Deterministic u64 for one (master, domain, index) work item.
///
/// First eight key bytes, little-endian. Used where a scalar seed must be
/// recorded in a spec file for later re-derivation.
pub fn derive_seed(master: u64, domain: &str, index: u64) -> u64 {
    let key = derive_key(master, domain, index);
    u64::from_le_bytes(key[..8].try_into().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_key_same_stream() {
        let mut a = derive_rng(42, "spec", 7);
        let mut b = derive_rng(42, "spec", 7);
        let xs: Vec<u64> = (0..16).map(|_| a.random()).collect();
        let ys: Vec<u64> = (0..16).map(|_| b.random()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn any_component_changes_the_stream() {
        let base: u64 = derive_rng(42, "spec", 7).random();
        assert_ne!(base, derive_rng(43, "spec", 7).random::<u64>());
        assert_ne!(base, derive_rng(42, "tntsnr", 7).random::<u64>());
        assert_ne!(base, derive_rng(42, "spec", 8).random::<u64>());
    }

    #[test]
    fn derive_seed_is_stable() {
        assert_eq!(derive_seed(0, "x", 0), derive_seed(0, "x", 0));
        assert_ne!(derive_seed(0, "x", 0), derive_seed(0, "x", 1));
        assert_ne!(derive_seed(0, "x", 0), derive_seed(0, "y", 0));
    }

    #[test]
    fn streams_do_not_depend_on_draw_order_elsewhere() {
        // drawing from one stream must not perturb another
        let mut a1 = derive_rng(1, "a", 0);
        let _burn: Vec<u64> = (0..100).map(|_| a1.random()).collect();
        let mut b_after = derive_rng(1, "b", 0);
        let mut b_fresh = derive_rng(1, "b", 0);
        assert_eq!(b_after.random::<u64>(), b_fresh.random::<u64>());
    }
}
