//! Division of a fixed-point numerator by a shared integer count.
//!
//! The divisor `b` (an integer in `0..=max`) is normalised into `[1/2, 1)`
//! by a secret power of two `F` obtained from comparisons against the
//! public powers `2^j`. Its reciprocal is refined by a fixed number of
//! Newton-Raphson steps at a wider internal precision, so the round count
//! does not depend on the data.

use crate::engine::Party;
use crate::error::{Error, Result};
use crate::ring::RingValue;
use crate::sharing::SharedVector;

/// Fractional bits used for the normalised divisor and its reciprocal.
pub const RECIPROCAL_FRAC_BITS: u32 = 24;

/// Newton-Raphson refinements after the linear initial guess.
pub const RECIPROCAL_ITERATIONS: usize = 3;

/// Linear initial approximation of `1/c` on `[1/2, 1)`: `2.9142 - 2c`.
const INITIAL_INTERCEPT: f64 = 2.9142;

impl Party {
    /// `a_k / b_k` where `a` is fixed point and `b` holds integers in
    /// `0..=max_divisor`. A zero divisor yields `0` when `a = 0` (the empty
    /// bin case); in general it is treated as one.
    ///
    /// The quotient magnitude must stay below `2^(61 - f - 24)`.
    pub fn div(&mut self, a: &SharedVector, b: &SharedVector, max_divisor: u64) -> Result<SharedVector> {
        if a.len() != b.len() {
            return Err(Error::Contract(format!(
                "division operands have lengths {} and {}",
                a.len(),
                b.len()
            )));
        }
        let n = a.len();
        let f = self.frac_bits();
        let fp = RECIPROCAL_FRAC_BITS;
        // smallest e with 2^e > max_divisor
        let e_bits = 64 - max_divisor.max(1).leading_zeros();
        if e_bits + f > 40 {
            return Err(Error::Range {
                value: max_divisor as f64,
                limit: (1u64 << (40 - f)) as f64,
            });
        }

        // t_j = [b < 2^j] for j = 0..=E, in one batched comparison
        let reps = e_bits as usize + 1;
        let tiled = SharedVector::concat(self.id(), std::iter::repeat_n(b, reps));
        let consts: Vec<RingValue> = (0..reps)
            .flat_map(|j| std::iter::repeat_n(RingValue(1u64 << j), n))
            .collect();
        let t = self.lt_public_each(&tiled, &consts)?;
        let t_at = |j: usize| t.slice(j * n, n);

        // b' = b + [b = 0]; F = sum_j [2^(j-1) <= b' < 2^j] 2^(E-j)
        let b_adj = b.add(&t_at(0));
        let mut scale = SharedVector::zeros(self.id(), n);
        for j in 1..=e_bits as usize {
            let e_j = if j == 1 { t_at(1) } else { t_at(j).sub(&t_at(j - 1)) };
            scale.add_assign(&e_j.mul_const(RingValue(1u64 << (e_bits as usize - j))));
        }

        // c = b' F / 2^E in [1/2, 1), and y = a F, in one round
        let both = self.mul(
            &SharedVector::concat(self.id(), [&b_adj, a]),
            &SharedVector::concat(self.id(), [&scale, &scale]),
        )?;
        let bf = both.slice(0, n);
        let af = both.slice(n, n);
        let (c, y) = if e_bits <= fp {
            let c = bf.mul_const(RingValue(1u64 << (fp - e_bits)));
            (c, self.trunc(&af, e_bits)?)
        } else {
            let ct = self.reshare_trunc_each(
                [bf.pairs(), af.pairs()].concat().iter().map(|p| p[0]).collect(),
                &[vec![e_bits - fp; n], vec![e_bits; n]].concat(),
            )?;
            (ct.slice(0, n), ct.slice(n, n))
        };

        // w ~ 1/c
        let codec_fp = crate::ring::FixedPointCodec::new(fp)?;
        let two = codec_fp.encode(2.0)?;
        let mut w = c
            .mul_const(RingValue(2))
            .rsub_const(codec_fp.encode(INITIAL_INTERCEPT)?);
        for _ in 0..RECIPROCAL_ITERATIONS {
            let cw = self.mul_trunc(&c, &w, fp)?;
            w = self.mul_trunc(&w, &cw.rsub_const(two), fp)?;
        }

        // a / b' = (a F / 2^E) / c
        self.mul_trunc(&y, &w, fp)
    }
}
