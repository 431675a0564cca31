//! Comparison through the sign bit of a difference.
//!
//! The three additive shares of `x` are re-shared as XOR sharings (no
//! communication, each share is known to two parties), added with a
//! carry-save step followed by a Kogge-Stone parallel-prefix carry chain,
//! and the top bit is converted back to an arithmetic sharing.

use super::boolean::BitShares;
use crate::engine::Party;
use crate::error::Result;
use crate::ring::RingValue;
use crate::sharing::SharedVector;

const PREFIX_SHIFTS: [u32; 6] = [1, 2, 4, 8, 16, 32];

impl Party {
    /// Shared top bit of every element, as arithmetic 0/1 values.
    pub fn msb(&mut self, x: &SharedVector) -> Result<SharedVector> {
        let me = self.id();
        let i = me.index();
        let share_view = |j: usize| -> Vec<u64> {
            x.pairs()
                .iter()
                .map(|p| {
                    if j == i {
                        p[0]
                    } else if j == (i + 1) % 3 {
                        p[1]
                    } else {
                        0
                    }
                })
                .collect()
        };
        let a = BitShares::from_known_share(me, 0, &share_view(0));
        let b = BitShares::from_known_share(me, 1, &share_view(1));
        let c = BitShares::from_known_share(me, 2, &share_view(2));

        // carry-save: a + b + c = s + 2*maj(a, b, c)
        let s = a.xor(&b).xor(&c);
        let maj = self.and(&a.xor(&c), &b.xor(&c))?.xor(&c);
        let carry = maj.shl(1);

        let mut res = self.and_batch(&[(&s, &carry)])?;
        let mut g = res.pop().unwrap();
        let p_orig = s.xor(&carry);
        let mut p = p_orig.clone();
        for (level, &sh) in PREFIX_SHIFTS.iter().enumerate() {
            let g_sh = g.shl(sh);
            let p_sh = p.shl(sh);
            if level + 1 == PREFIX_SHIFTS.len() {
                // the propagate chain is not needed after the last level
                g = g.xor(&self.and(&p, &g_sh)?);
            } else {
                let mut r = self.and_batch(&[(&p, &g_sh), (&p, &p_sh)])?;
                p = r.pop().unwrap();
                g = g.xor(&r.pop().unwrap());
            }
        }
        let top = p_orig.xor(&g.shl(1)).map(|w| w >> 63);
        self.bits_to_arith(&top)
    }

    /// Converts XOR-shared single bits (in bit 0 of each word) to arithmetic
    /// shares of the same bits.
    pub fn bits_to_arith(&mut self, bits: &BitShares) -> Result<SharedVector> {
        let me = self.id();
        let i = me.index();
        let view = |j: usize| -> Vec<u64> {
            bits.pairs()
                .iter()
                .map(|p| {
                    if j == i {
                        p[0]
                    } else if j == (i + 1) % 3 {
                        p[1]
                    } else {
                        0
                    }
                })
                .collect()
        };
        let b0 = SharedVector::from_known_share(me, 0, &view(0));
        let b1 = SharedVector::from_known_share(me, 1, &view(1));
        let b2 = SharedVector::from_known_share(me, 2, &view(2));
        let t = self.arith_xor(&b0, &b1)?;
        self.arith_xor(&t, &b2)
    }

    /// `a XOR b = a + b - 2ab` for shared bits.
    pub(crate) fn arith_xor(&mut self, a: &SharedVector, b: &SharedVector) -> Result<SharedVector> {
        let ab = self.mul(a, b)?;
        Ok(a.add(b).sub(&ab.mul_const(RingValue(2))))
    }

    /// `[a < b]` for signed values whose difference fits in 63 bits.
    pub fn lt(&mut self, a: &SharedVector, b: &SharedVector) -> Result<SharedVector> {
        self.msb(&a.sub(b))
    }

    /// `[a < c]` against a public ring constant.
    pub fn lt_public(&mut self, a: &SharedVector, c: RingValue) -> Result<SharedVector> {
        self.msb(&a.add_const(-c))
    }

    /// `[a_k < c_k]` for a public vector of constants.
    pub fn lt_public_each(&mut self, a: &SharedVector, c: &[RingValue]) -> Result<SharedVector> {
        let neg: Vec<RingValue> = c.iter().map(|&v| -v).collect();
        let mut d = a.clone();
        d.add_public_assign(&neg);
        self.msb(&d)
    }
}
