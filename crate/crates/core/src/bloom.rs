//! Bloom filter over 32-byte digests.
//!
//! Index derivation uses one SHA3-256 call per element: the digest of
//! `element | salt` (salt as u64 big-endian) is split into two 128-bit
//! big-endian halves `h1`, `h2`, and probe `i` is `(h1 + i*h2) mod m`.

use crate::crypto::{sha3_256_parts, Digest256};

/// Sizing of a filter. The default profile is 907.24 KiB of bits with 10
/// probes for 100,000 elements, which targets a false positive rate of
/// about one in a billion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BloomParams {
    pub bits: u64,
    pub hashes: u32,
    pub capacity: u64,
    pub salt: u64,
}

impl BloomParams {
    /// 907.24 KiB = 907.24 * 1024 * 8 bits, rounded to the nearest bit.
    pub const DEFAULT_BITS: u64 = 7_432_110;

    /// Smallest filter that keeps the false positive rate at or under
    /// `target` for `capacity` elements, using the optimal probe count.
    pub fn for_capacity(capacity: u64, target: f64) -> Self {
        let n = capacity.max(1) as f64;
        let ln2 = std::f64::consts::LN_2;
        let bits = (-(n * target.ln()) / (ln2 * ln2)).ceil().max(64.0) as u64;
        let hashes = ((bits as f64 / n) * ln2).round().max(1.0) as u32;
        Self {
            bits,
            hashes,
            capacity: capacity.max(1),
            salt: 0,
        }
    }

    /// Same density, `factor` times the capacity.
    pub fn scaled(self, factor: u64) -> Self {
        Self {
            bits: self.bits * factor,
            capacity: self.capacity * factor,
            ..self
        }
    }

    pub fn expected_fpp(&self) -> f64 {
        bloom_fpp(self.bits, self.hashes, self.capacity)
    }
}

impl Default for BloomParams {
    fn default() -> Self {
        Self {
            bits: Self::DEFAULT_BITS,
            hashes: 10,
            capacity: 100_000,
            salt: 0,
        }
    }
}

/// `(1 - e^(-kn/m))^k`.
pub fn bloom_fpp(bits: u64, hashes: u32, items: u64) -> f64 {
    if items == 0 {
        return 0.0;
    }
    let fill = -(-(hashes as f64) * items as f64 / bits as f64).exp_m1();
    fill.powi(hashes as i32)
}

#[derive(Clone, PartialEq, Eq)]
pub struct BloomFilter {
    words: Vec<u64>,
    bits: u64,
    hashes: u32,
    salt: u64,
    inserted: u64,
}

impl std::fmt::Debug for BloomFilter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BloomFilter")
            .field("bits", &self.bits)
            .field("hashes", &self.hashes)
            .field("inserted", &self.inserted)
            .finish()
    }
}

impl BloomFilter {
    /// Panics if `bits` or `hashes` is zero.
    pub fn new(bits: u64, hashes: u32, salt: u64) -> Self {
        assert!(bits > 0, "bloom filter needs at least one bit");
        assert!(hashes >= 1, "bloom filter needs at least one probe");
        Self {
            words: vec![0; bits.div_ceil(64) as usize],
            bits,
            hashes,
            salt,
            inserted: 0,
        }
    }

    pub fn with_params(params: &BloomParams) -> Self {
        Self::new(params.bits, params.hashes, params.salt)
    }

    fn probes(&self, element: &Digest256) -> impl Iterator<Item = u64> {
        let d = sha3_256_parts(&[element.as_bytes(), &self.salt.to_be_bytes()]);
        let m = self.bits as u128;
        let h1 = u128::from_be_bytes(d.0[..16].try_into().unwrap()) % m;
        let h2 = u128::from_be_bytes(d.0[16..].try_into().unwrap()) % m;
        (0..self.hashes as u128).map(move |i| ((h1 + i * h2) % m) as u64)
    }

    pub fn insert(&mut self, element: &Digest256) {
        let probes: Vec<u64> = self.probes(element).collect();
        for idx in probes {
            self.words[(idx / 64) as usize] |= 1 << (idx % 64);
        }
        self.inserted += 1;
    }

    pub fn contains(&self, element: &Digest256) -> bool {
        self.probes(element)
            .all(|idx| self.words[(idx / 64) as usize] & (1 << (idx % 64)) != 0)
    }

    pub fn inserted_count(&self) -> u64 {
        self.inserted
    }

    pub fn bit_len(&self) -> u64 {
        self.bits
    }

    pub fn hash_count(&self) -> u32 {
        self.hashes
    }

    pub fn ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Fraction of bits set.
    pub fn occupancy(&self) -> f64 {
        self.ones() as f64 / self.bits as f64
    }

    pub fn expected_fpp(&self) -> f64 {
        bloom_fpp(self.bits, self.hashes, self.inserted)
    }
}
