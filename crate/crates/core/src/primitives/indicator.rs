//! Equality with public constants over a small integer domain.
//!
//! For `x` in `{0..D-1}`, `[x = t] = prod_{j != t} (x - j) / prod_{j != t} (t - j)`.
//! The denominator is `sign * 2^v * odd`; multiplying by the ring inverse of
//! `sign * odd` leaves exactly `2^v [x = t]`, and an exact division by `2^v`
//! finishes the job. No fixed-point rounding is involved.

use crate::engine::Party;
use crate::error::{Error, Result};
use crate::ring::{inverse_odd, RingValue};
use crate::sharing::SharedVector;

/// Domains larger than this use two comparisons per target instead of the
/// product formula, whose cost grows quadratically in `D`.
pub const MAX_POLY_DOMAIN: usize = 20;

/// Public constants for target `t` in a domain of size `d`: the multiplier
/// `(sign * odd)^-1` and the power of two `v`.
fn lagrange_scale(t: usize, d: usize) -> (u64, u32) {
    let mut odd: u64 = 1;
    let mut v = 0u32;
    let mut negative = false;
    for j in 0..d {
        if j == t {
            continue;
        }
        let diff = t as i64 - j as i64;
        if diff < 0 {
            negative = !negative;
        }
        let mut m = diff.unsigned_abs();
        let tz = m.trailing_zeros();
        v += tz;
        m >>= tz;
        odd = odd.wrapping_mul(m);
    }
    let inv = inverse_odd(odd).expect("odd");
    (if negative { inv.wrapping_neg() } else { inv }, v)
}

impl Party {
    /// One-hot encoding of `x` over `{0..domain-1}`: entry `t` of the result
    /// is the shared vector `[x_k = t]`. Values outside the domain give
    /// meaningless results.
    pub fn indicators(&mut self, x: &SharedVector, domain: usize) -> Result<Vec<SharedVector>> {
        let targets: Vec<usize> = (0..domain).collect();
        self.eq_targets(x, &targets, domain)
    }

    /// `[x_k = c]` for a public `c` in `{0..domain-1}`.
    pub fn eq_public(&mut self, x: &SharedVector, c: usize, domain: usize) -> Result<SharedVector> {
        Ok(self.eq_targets(x, &[c], domain)?.pop().unwrap())
    }

    fn eq_targets(
        &mut self,
        x: &SharedVector,
        targets: &[usize],
        domain: usize,
    ) -> Result<Vec<SharedVector>> {
        if domain == 0 || targets.iter().any(|&t| t >= domain) {
            return Err(Error::Contract(format!(
                "equality target outside domain of size {domain}"
            )));
        }
        let n = x.len();
        if domain == 1 {
            let one = SharedVector::public(self.id(), &vec![RingValue::ONE; n]);
            return Ok(vec![one; targets.len()]);
        }
        if domain > MAX_POLY_DOMAIN {
            return self.eq_by_comparison(x, targets);
        }

        // factor lists, one per target, all of length domain - 1
        let mut layers: Vec<Vec<SharedVector>> = targets
            .iter()
            .map(|&t| {
                (0..domain)
                    .filter(|&j| j != t)
                    .map(|j| x.add_const(-RingValue(j as u64)))
                    .collect()
            })
            .collect();
        // pairwise products until at most two factors remain per target
        while layers[0].len() > 2 {
            let mut lhs = Vec::new();
            let mut rhs = Vec::new();
            for fs in &layers {
                for pair in fs.chunks(2) {
                    if pair.len() == 2 {
                        lhs.push(&pair[0]);
                        rhs.push(&pair[1]);
                    }
                }
            }
            let a = SharedVector::concat(self.id(), lhs.iter().copied());
            let b = SharedVector::concat(self.id(), rhs.iter().copied());
            let prod = self.mul(&a, &b)?;
            let mut off = 0;
            for fs in layers.iter_mut() {
                let mut next = Vec::with_capacity(fs.len().div_ceil(2));
                for pair in fs.chunks(2) {
                    if pair.len() == 2 {
                        next.push(prod.slice(off, n));
                        off += n;
                    } else {
                        next.push(pair[0].clone());
                    }
                }
                *fs = next;
            }
        }

        // last product fused with the scaling and exact division
        let mut z = Vec::with_capacity(n * targets.len());
        let mut bits = Vec::with_capacity(n * targets.len());
        for (fs, &t) in layers.iter().zip(targets) {
            let (scale, v) = lagrange_scale(t, domain);
            for k in 0..n {
                let local = if fs.len() == 2 {
                    let (a, b) = (fs[0].pairs()[k], fs[1].pairs()[k]);
                    a[0].wrapping_mul(b[0])
                        .wrapping_add(a[0].wrapping_mul(b[1]))
                        .wrapping_add(a[1].wrapping_mul(b[0]))
                } else {
                    fs[0].pairs()[k][0]
                };
                z.push(local.wrapping_mul(scale));
                bits.push(v);
            }
        }
        let all = self.reshare_trunc_each(z, &bits)?;
        Ok((0..targets.len()).map(|j| all.slice(j * n, n)).collect())
    }

    fn eq_by_comparison(&mut self, x: &SharedVector, targets: &[usize]) -> Result<Vec<SharedVector>> {
        let n = x.len();
        let reps = targets.len();
        let tiled = SharedVector::concat(self.id(), std::iter::repeat_n(x, 2 * reps));
        let mut consts = Vec::with_capacity(2 * reps * n);
        for &t in targets {
            consts.extend(std::iter::repeat_n(RingValue(t as u64 + 1), n));
        }
        for &t in targets {
            consts.extend(std::iter::repeat_n(RingValue(t as u64), n));
        }
        let lts = self.lt_public_each(&tiled, &consts)?;
        Ok((0..reps)
            .map(|j| lts.slice(j * n, n).sub(&lts.slice((reps + j) * n, n)))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_three_party_local, HarnessConfig};
    use crate::sharing::share_vector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn run_indicators(xs: &[u64], domain: usize) -> Vec<Vec<u64>> {
        let vals: Vec<RingValue> = xs.iter().map(|&v| RingValue(v)).collect();
        let views = share_vector(&vals, &mut ChaCha8Rng::seed_from_u64(5));
        let outs = run_three_party_local(HarnessConfig::with_seed(8), |p| {
            let ind = p.indicators(&views[p.id().index()], domain)?;
            ind.iter()
                .map(|v| Ok(p.reveal_all(v)?.iter().map(|r| r.0).collect()))
                .collect::<Result<Vec<Vec<u64>>>>()
        })
        .unwrap();
        outs[0].output.clone()
    }

    #[test]
    fn lagrange_scale_recovers_power_of_two() {
        for d in 2..=MAX_POLY_DOMAIN {
            for t in 0..d {
                let (scale, v) = lagrange_scale(t, d);
                let denom: i128 = (0..d as i128).filter(|&j| j != t as i128).map(|j| t as i128 - j).product();
                assert_eq!((denom as u64).wrapping_mul(scale), 1u64 << v, "d={d} t={t}");
            }
        }
    }

    #[test]
    fn four_bin_one_hot() {
        let got = run_indicators(&[0, 1, 2, 3, 2], 4);
        for (t, row) in got.iter().enumerate() {
            let want: Vec<u64> = [0, 1, 2, 3, 2].iter().map(|&x| (x == t as u64) as u64).collect();
            assert_eq!(row, &want);
        }
    }

    #[test]
    fn label_one_hot_example() {
        let got = run_indicators(&[0, 1, 0, 2], 3);
        assert_eq!(got[0], vec![1, 0, 1, 0]);
    }

    #[test]
    fn every_domain_size_is_exact() {
        for d in [1usize, 2, 3, 5, 7, 20, 23] {
            let xs: Vec<u64> = (0..d as u64).collect();
            let got = run_indicators(&xs, d);
            for (t, row) in got.iter().enumerate() {
                for (k, &v) in row.iter().enumerate() {
                    assert_eq!(v, (k == t) as u64, "d={d} t={t} k={k}");
                }
            }
        }
    }

    #[test]
    fn eq_public_examples() {
        let views = share_vector(&[RingValue(2)], &mut ChaCha8Rng::seed_from_u64(1));
        let outs = run_three_party_local(HarnessConfig::default(), |p| {
            let v = &views[p.id().index()];
            let a = p.eq_public(v, 2, 4)?;
            let b = p.eq_public(v, 3, 4)?;
            Ok((p.reveal_all(&a)?[0].0, p.reveal_all(&b)?[0].0))
        })
        .unwrap();
        assert_eq!(outs[2].output, (1, 0));
    }
}
