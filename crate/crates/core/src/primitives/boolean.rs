//! Replicated XOR sharing of 64-bit words, used for bit decomposition.

use crate::engine::{Expect, Outgoing, Party};
use crate::error::{Error, Result};
use crate::transport::PartyId;

/// One party's XOR-replicated shares of a vector of 64-bit words. Each word
/// is 64 independent bits processed in parallel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitShares {
    party: PartyId,
    pairs: Vec<[u64; 2]>,
}

impl BitShares {
    pub fn from_pairs(party: PartyId, pairs: Vec<[u64; 2]>) -> Self {
        BitShares { party, pairs }
    }

    /// Boolean sharing whose secret is exactly the share `x_j`, mirroring
    /// [`SharedVector::from_known_share`](crate::sharing::SharedVector::from_known_share).
    pub fn from_known_share(party: PartyId, share_index: usize, values: &[u64]) -> Self {
        let i = party.index();
        let pairs = values
            .iter()
            .map(|&v| {
                if share_index == i {
                    [v, 0]
                } else if share_index == (i + 1) % 3 {
                    [0, v]
                } else {
                    [0, 0]
                }
            })
            .collect();
        BitShares { party, pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[[u64; 2]] {
        &self.pairs
    }

    pub fn xor(&self, other: &BitShares) -> BitShares {
        self.zip_map(other, |a, b| a ^ b)
    }

    pub fn shl(&self, bits: u32) -> BitShares {
        self.map(|a| a << bits)
    }

    pub fn map(&self, f: impl Fn(u64) -> u64) -> BitShares {
        BitShares {
            party: self.party,
            pairs: self.pairs.iter().map(|p| [f(p[0]), f(p[1])]).collect(),
        }
    }

    fn zip_map(&self, other: &BitShares, f: impl Fn(u64, u64) -> u64) -> BitShares {
        assert_eq!(self.len(), other.len());
        BitShares {
            party: self.party,
            pairs: self
                .pairs
                .iter()
                .zip(&other.pairs)
                .map(|(a, b)| [f(a[0], b[0]), f(a[1], b[1])])
                .collect(),
        }
    }
}

/// Reconstructs XOR shares from the three views (test helper and oracle).
pub fn reconstruct_bits(views: &[BitShares; 3]) -> Result<Vec<u64>> {
    let n = views[0].len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        for i in 0..3 {
            if views[i].pairs[k][1] != views[(i + 1) % 3].pairs[k][0] {
                return Err(Error::Integrity(format!("bit word {k} views disagree")));
            }
        }
        out.push(views[0].pairs[k][0] ^ views[1].pairs[k][0] ^ views[2].pairs[k][0]);
    }
    Ok(out)
}

impl Party {
    /// Bitwise AND of several operand pairs in one round.
    pub fn and_batch(&mut self, ops: &[(&BitShares, &BitShares)]) -> Result<Vec<BitShares>> {
        let total: usize = ops.iter().map(|(a, _)| a.len()).sum();
        let mask = self.randomness().zero_xor_shares(total);
        let mut z = Vec::with_capacity(total);
        for (a, b) in ops {
            if a.len() != b.len() {
                return Err(Error::Contract("AND operands differ in length".into()));
            }
            for (x, y) in a.pairs.iter().zip(&b.pairs) {
                z.push((x[0] & y[0]) ^ (x[0] & y[1]) ^ (x[1] & y[0]));
            }
        }
        for (v, m) in z.iter_mut().zip(&mask) {
            *v ^= m;
        }
        let inc = self.exchange(
            Outgoing {
                next: None,
                prev: Some(z.clone()),
            },
            Expect {
                next: true,
                prev: false,
            },
        )?;
        let other = inc.next.unwrap();
        if other.len() != total {
            return Err(Error::Contract("AND reply has wrong length".into()));
        }
        let mut out = Vec::with_capacity(ops.len());
        let mut off = 0;
        for (a, _) in ops {
            let n = a.len();
            let pairs = (off..off + n).map(|k| [z[k], other[k]]).collect();
            out.push(BitShares::from_pairs(self.id(), pairs));
            off += n;
        }
        Ok(out)
    }

    pub fn and(&mut self, a: &BitShares, b: &BitShares) -> Result<BitShares> {
        Ok(self.and_batch(&[(a, b)])?.pop().unwrap())
    }

    /// Opens XOR shares to everyone (tests only; protocols never open bits).
    pub fn reveal_bits_all(&mut self, a: &BitShares) -> Result<Vec<u64>> {
        let inc = self.exchange(
            Outgoing {
                next: None,
                prev: Some(a.pairs.iter().map(|p| p[1]).collect()),
            },
            Expect {
                next: true,
                prev: false,
            },
        )?;
        Ok(a.pairs
            .iter()
            .zip(inc.next.unwrap())
            .map(|(p, m)| p[0] ^ p[1] ^ m)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_three_party_local, HarnessConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn and_matches_plaintext() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<u64> = (0..50).map(|_| rng.random()).collect();
        let ys: Vec<u64> = (0..50).map(|_| rng.random()).collect();
        let (xs2, ys2) = (xs.clone(), ys.clone());
        let outs = run_three_party_local(HarnessConfig::with_seed(3), move |p| {
            // secret x held entirely in share 0, y in share 2
            let me = p.id();
            let view = |j: usize, v: &[u64]| -> Vec<u64> {
                let i = me.index();
                if j == i || j == (i + 1) % 3 {
                    v.to_vec()
                } else {
                    vec![0; v.len()]
                }
            };
            let a = BitShares::from_known_share(me, 0, &view(0, &xs2));
            let b = BitShares::from_known_share(me, 2, &view(2, &ys2));
            let c = p.and(&a, &b)?;
            p.reveal_bits_all(&c)
        })
        .unwrap();
        let want: Vec<u64> = xs.iter().zip(&ys).map(|(a, b)| a & b).collect();
        for o in &outs {
            assert_eq!(o.output, want);
        }
    }
}
