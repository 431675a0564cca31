//! Resharing, multiplication, dot products, truncation and reveal.

use crate::engine::{Expect, Outgoing, Party};
use crate::error::{Error, Result};
use crate::ring::RingValue;
use crate::sharing::{KeySlot, SharedVector};
use crate::transport::PartyId;

/// Local part of the replicated product: `z_i = x_i y_i + x_i y_{i+1} + x_{i+1} y_i`.
#[inline]
fn cross(a: [u64; 2], b: [u64; 2]) -> u64 {
    a[0].wrapping_mul(b[0])
        .wrapping_add(a[0].wrapping_mul(b[1]))
        .wrapping_add(a[1].wrapping_mul(b[0]))
}

/// Truncation mask: uniform on `[-2^62, 2^62)`, so that `z - r` cannot wrap
/// for `|z| < 2^62`.
#[inline]
fn trunc_mask(word: u64) -> u64 {
    ((word as i64) >> 1) as u64
}

impl Party {
    /// Turns a 3-of-3 additive sharing (this party holds `z_i`) into a
    /// replicated sharing: `v_i = z_i + u_i` goes to the previous party.
    /// One ring element per value per party.
    pub fn reshare(&mut self, z: Vec<u64>) -> Result<SharedVector> {
        let u = self.randomness().zero_shares(z.len());
        let v: Vec<u64> = z.iter().zip(&u).map(|(a, b)| a.wrapping_add(*b)).collect();
        let inc = self.exchange(
            Outgoing {
                next: None,
                prev: Some(v.clone()),
            },
            Expect {
                next: true,
                prev: false,
            },
        )?;
        let from_next = inc.next.unwrap();
        check_len(from_next.len(), v.len())?;
        let pairs = v.into_iter().zip(from_next).map(|(a, b)| [a, b]).collect();
        Ok(SharedVector::from_pairs(self.id(), pairs))
    }

    /// Like [`reshare`](Self::reshare) but divides every value by `2^bits`
    /// (arithmetic shift) on the way.
    pub fn reshare_trunc(&mut self, z: Vec<u64>, bits: u32) -> Result<SharedVector> {
        let bits = vec![bits; z.len()];
        self.reshare_trunc_each(z, &bits)
    }

    /// Reshare with a per-element truncation amount.
    ///
    /// `S2` and `S3` share a mask `r`; `S1` learns `a = z - r` and shifts it,
    /// `S2`/`S3` shift `r`. The sum of the two shifted halves is
    /// `floor(z / 2^m)` or that plus one, and exact when `2^m` divides `z`.
    /// Requires `|z| < 2^62`. Two rounds; each party sends one element per
    /// value.
    pub fn reshare_trunc_each(&mut self, z: Vec<u64>, bits: &[u32]) -> Result<SharedVector> {
        let n = z.len();
        assert_eq!(bits.len(), n);
        let (c_r, c_alpha, c_y) = {
            let rand = self.randomness();
            (rand.tick(), rand.tick(), rand.tick())
        };
        let me = self.id().index();
        match me {
            0 => {
                let inc = self.exchange(
                    Outgoing::default(),
                    Expect {
                        next: true,
                        prev: true,
                    },
                )?;
                let (c1, c2) = (inc.next.unwrap(), inc.prev.unwrap());
                check_len(c1.len(), n)?;
                check_len(c2.len(), n)?;
                let y0 = self.randomness().words(KeySlot::Own, c_y, n);
                let y1: Vec<u64> = (0..n)
                    .map(|i| {
                        let a = z[i].wrapping_add(c1[i]).wrapping_add(c2[i]);
                        let a_shift = ((a as i64) >> bits[i]) as u64;
                        a_shift.wrapping_sub(y0[i])
                    })
                    .collect();
                self.exchange(
                    Outgoing {
                        next: Some(y1.clone()),
                        prev: None,
                    },
                    Expect::default(),
                )?;
                let pairs = y0.into_iter().zip(y1).map(|(a, b)| [a, b]).collect();
                Ok(SharedVector::from_pairs(self.id(), pairs))
            }
            1 => {
                let rand = self.randomness();
                let r = rand.words(KeySlot::Next, c_r, n);
                let alpha = rand.words(KeySlot::Next, c_alpha, n);
                let c1: Vec<u64> = (0..n).map(|i| z[i].wrapping_add(alpha[i])).collect();
                self.exchange(
                    Outgoing {
                        next: None,
                        prev: Some(c1),
                    },
                    Expect::default(),
                )?;
                let inc = self.exchange(
                    Outgoing::default(),
                    Expect {
                        next: false,
                        prev: true,
                    },
                )?;
                let y1 = inc.prev.unwrap();
                check_len(y1.len(), n)?;
                let pairs = (0..n)
                    .map(|i| [y1[i], shifted_mask_half(r[i], bits[i])])
                    .collect();
                Ok(SharedVector::from_pairs(self.id(), pairs))
            }
            _ => {
                let rand = self.randomness();
                let r = rand.words(KeySlot::Own, c_r, n);
                let alpha = rand.words(KeySlot::Own, c_alpha, n);
                let y0 = rand.words(KeySlot::Next, c_y, n);
                let c2: Vec<u64> = (0..n)
                    .map(|i| {
                        z[i].wrapping_sub(alpha[i])
                            .wrapping_sub(trunc_mask(r[i]))
                    })
                    .collect();
                self.exchange(
                    Outgoing {
                        next: Some(c2),
                        prev: None,
                    },
                    Expect::default(),
                )?;
                self.exchange(Outgoing::default(), Expect::default())?;
                let pairs = (0..n)
                    .map(|i| [shifted_mask_half(r[i], bits[i]), y0[i]])
                    .collect();
                Ok(SharedVector::from_pairs(self.id(), pairs))
            }
        }
    }

    /// Element-wise product of integer (or integer-by-fixed) sharings.
    pub fn mul(&mut self, a: &SharedVector, b: &SharedVector) -> Result<SharedVector> {
        let z = cross_products(a, b)?;
        self.reshare(z)
    }

    /// Element-wise product followed by division by `2^bits`.
    pub fn mul_trunc(&mut self, a: &SharedVector, b: &SharedVector, bits: u32) -> Result<SharedVector> {
        let z = cross_products(a, b)?;
        self.reshare_trunc(z, bits)
    }

    /// Fixed-point product: both operands carry `f` fractional bits.
    pub fn mul_fixed(&mut self, a: &SharedVector, b: &SharedVector) -> Result<SharedVector> {
        let f = self.frac_bits();
        self.mul_trunc(a, b, f)
    }

    /// Product with a public real constant, result in fixed point.
    pub fn mul_public_fixed(&mut self, a: &SharedVector, c: f64) -> Result<SharedVector> {
        let enc = self.codec().encode(c)?;
        let z = a.pairs().iter().map(|p| p[0].wrapping_mul(enc.0)).collect();
        let f = self.frac_bits();
        self.reshare_trunc(z, f)
    }

    /// Divides every element by `2^bits`, within one unit in the last place.
    pub fn trunc(&mut self, a: &SharedVector, bits: u32) -> Result<SharedVector> {
        let z = a.pairs().iter().map(|p| p[0]).collect();
        self.reshare_trunc(z, bits)
    }

    /// Inner product. The partial products are summed locally before the
    /// resharing step, so the cost is one ring element per party whatever
    /// the length.
    pub fn dot(&mut self, a: &SharedVector, b: &SharedVector) -> Result<SharedVector> {
        self.dot_batch(&[(a, b)])
    }

    /// Several inner products in a single round.
    pub fn dot_batch(&mut self, pairs: &[(&SharedVector, &SharedVector)]) -> Result<SharedVector> {
        let z = pairs
            .iter()
            .map(|(a, b)| dot_local(a, b))
            .collect::<Result<Vec<u64>>>()?;
        self.reshare(z)
    }

    /// Fixed-point inner product (one truncation of the sum).
    pub fn dot_fixed(&mut self, a: &SharedVector, b: &SharedVector) -> Result<SharedVector> {
        let z = vec![dot_local(a, b)?];
        let f = self.frac_bits();
        self.reshare_trunc(z, f)
    }

    /// Opens `a` to party `to` only. Returns the plaintext at `to` and
    /// `None` elsewhere.
    pub fn reveal_to(&mut self, a: &SharedVector, to: PartyId) -> Result<Option<Vec<RingValue>>> {
        let me = self.id();
        // `to` holds (x_t, x_{t+1}) and misses x_{t+2}, the second share of
        // its successor.
        let out = if me == to.next() {
            Outgoing {
                next: None,
                prev: Some(a.pairs().iter().map(|p| p[1]).collect()),
            }
        } else {
            Outgoing::default()
        };
        let expect = Expect {
            next: me == to,
            prev: false,
        };
        let inc = self.exchange(out, expect)?;
        if me != to {
            return Ok(None);
        }
        let missing = inc.next.unwrap();
        check_len(missing.len(), a.len())?;
        Ok(Some(
            a.pairs()
                .iter()
                .zip(missing)
                .map(|(p, m)| RingValue(p[0].wrapping_add(p[1]).wrapping_add(m)))
                .collect(),
        ))
    }

    /// Opens `a` to every party.
    pub fn reveal_all(&mut self, a: &SharedVector) -> Result<Vec<RingValue>> {
        let inc = self.exchange(
            Outgoing {
                next: None,
                prev: Some(a.pairs().iter().map(|p| p[1]).collect()),
            },
            Expect {
                next: true,
                prev: false,
            },
        )?;
        let missing = inc.next.unwrap();
        check_len(missing.len(), a.len())?;
        Ok(a.pairs()
            .iter()
            .zip(missing)
            .map(|(p, m)| RingValue(p[0].wrapping_add(p[1]).wrapping_add(m)))
            .collect())
    }
}

/// `S2`/`S3` half of the truncation: `-((-r) >> m)`, i.e. `ceil(r / 2^m)`.
#[inline]
fn shifted_mask_half(word: u64, bits: u32) -> u64 {
    let r = trunc_mask(word) as i64;
    (-((-r) >> bits)) as u64
}

fn cross_products(a: &SharedVector, b: &SharedVector) -> Result<Vec<u64>> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!(
            "operand lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.pairs()
        .iter()
        .zip(b.pairs())
        .map(|(x, y)| cross(*x, *y))
        .collect())
}

fn dot_local(a: &SharedVector, b: &SharedVector) -> Result<u64> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!(
            "dot product of vectors with lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.pairs()
        .iter()
        .zip(b.pairs())
        .fold(0u64, |acc, (x, y)| acc.wrapping_add(cross(*x, *y))))
}

fn check_len(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Contract(format!(
            "peer sent {got} elements, expected {want}"
        )));
    }
    Ok(())
}
