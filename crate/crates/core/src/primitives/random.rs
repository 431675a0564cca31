//! Jointly generated randomness: bits, uniforms and Irwin-Hall normals.
//!
//! Party `i` can evaluate the PRF under keys `k_i` and `k_{i+1}`, so a bit
//! `r = r_0 ^ r_1 ^ r_2` with `r_j = F(k_j)` is XOR-replicated without any
//! communication. Only the conversion to arithmetic shares is interactive.

use super::boolean::BitShares;
use crate::engine::Party;
use crate::error::{Error, Result};
use crate::ring::RingValue;
use crate::sharing::{KeySlot, SharedVector};

/// Uniforms summed per normal sample.
pub const IRWIN_HALL_TERMS: usize = 12;

/// Samples drawn per batch of random bits; bounds memory at about
/// `GAUSS_BATCH * 12 f` bit shares.
const GAUSS_BATCH: usize = 4096;

impl Party {
    /// `n` shared uniformly random bits (values 0 or 1). Two rounds.
    pub fn random_bits(&mut self, n: usize) -> Result<SharedVector> {
        let c = self.randomness().tick();
        let own = self.randomness().words(KeySlot::Own, c, n.div_ceil(64));
        let next = self.randomness().words(KeySlot::Next, c, n.div_ceil(64));
        let pairs = (0..n)
            .map(|k| {
                let (w, b) = (k / 64, k % 64);
                [(own[w] >> b) & 1, (next[w] >> b) & 1]
            })
            .collect();
        self.bits_to_arith(&BitShares::from_pairs(self.id(), pairs))
    }

    /// `n` shared uniforms `m / 2^f` with `m` uniform on `[0, 2^f)`,
    /// encoded in fixed point (so the plaintext encoding is `m` itself).
    pub fn rand_unit(&mut self, n: usize) -> Result<SharedVector> {
        let f = self.frac_bits() as usize;
        let bits = self.random_bits(n * f)?;
        let weights: Vec<RingValue> = (0..n * f).map(|k| RingValue(1u64 << (k % f))).collect();
        Ok(bits.mul_public(&weights).chunk_sums(f))
    }

    /// `z` shared approximate standard normals: the sum of twelve uniforms
    /// minus six, in fixed point. Values lie in `[-6, 6]`.
    pub fn gauss_vector(&mut self, z: usize) -> Result<SharedVector> {
        self.gauss_scaled(z, 1.0)
    }

    /// `sigma` times [`gauss_vector`](Self::gauss_vector), computed without
    /// any truncation: each random bit is multiplied by the public constant
    /// `round(sigma 2^b)`. With `sigma = 0` the result is exactly zero.
    pub fn gauss_scaled(&mut self, z: usize, sigma: f64) -> Result<SharedVector> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::Param(format!("noise scale must be finite and >= 0, got {sigma}")));
        }
        let codec = self.codec();
        let f = codec.frac_bits() as usize;
        // the largest term is about 12 sigma; keep it inside the ring range
        codec.encode(sigma * (IRWIN_HALL_TERMS as f64))?;
        let per = IRWIN_HALL_TERMS * f;
        let bit_weights: Vec<RingValue> = (0..f)
            .map(|b| RingValue((sigma * (1u64 << b) as f64).round() as u64))
            .collect();
        let weights: Vec<RingValue> = (0..GAUSS_BATCH.min(z) * per).map(|k| bit_weights[k % f]).collect();
        let shift = codec.encode(6.0 * sigma)?;
        let mut out = SharedVector::zeros(self.id(), 0);
        let mut done = 0;
        while done < z {
            let m = GAUSS_BATCH.min(z - done);
            let bits = self.random_bits(m * per)?;
            out.extend(&bits.mul_public(&weights[..m * per]).chunk_sums(per));
            done += m;
        }
        Ok(out.add_const(-shift))
    }
}
