//! Oblivious sorting with Batcher's odd-even merge network.

use crate::engine::Party;
use crate::error::{Error, Result};
use crate::sharing::SharedVector;

/// Comparator layers of the odd-even merge network for `n` inputs. Each
/// layer is a list of disjoint `(low, high)` index pairs that can be
/// evaluated in parallel. Works for any `n`, not only powers of two.
pub fn odd_even_merge_layers(n: usize) -> Vec<Vec<(usize, usize)>> {
    let mut layers = Vec::new();
    let mut p = 1;
    while p < n {
        let mut k = p;
        while k >= 1 {
            let mut layer = Vec::new();
            let mut j = k % p;
            while j + k < n {
                let upper = (k - 1).min(n - j - k - 1);
                for i in 0..=upper {
                    if (i + j) / (2 * p) == (i + j + k) / (2 * p) {
                        layer.push((i + j, i + j + k));
                    }
                }
                j += 2 * k;
            }
            if !layer.is_empty() {
                layers.push(layer);
            }
            k /= 2;
        }
        p *= 2;
    }
    layers
}

/// Number of compare-swap gates for `n` inputs.
pub fn comparator_count(n: usize) -> usize {
    odd_even_merge_layers(n).iter().map(Vec::len).sum()
}

impl Party {
    /// Ascending sort of a shared vector.
    pub fn sort(&mut self, v: &SharedVector) -> Result<SharedVector> {
        Ok(self.sort_batch(std::slice::from_ref(v))?.pop().unwrap())
    }

    /// Sorts several equal-length vectors side by side: every network layer
    /// is one batched comparison and one batched multiplication across all
    /// of them.
    pub fn sort_batch(&mut self, vs: &[SharedVector]) -> Result<Vec<SharedVector>> {
        let Some(first) = vs.first() else {
            return Ok(Vec::new());
        };
        let n = first.len();
        if vs.iter().any(|v| v.len() != n) {
            return Err(Error::Contract("sort_batch needs equal-length vectors".into()));
        }
        let mut data: Vec<Vec<[u64; 2]>> = vs.iter().map(|v| v.pairs().to_vec()).collect();
        let me = self.id();
        for layer in odd_even_merge_layers(n) {
            let gather = |pick: fn(&(usize, usize)) -> usize, data: &Vec<Vec<[u64; 2]>>| {
                let pairs = data
                    .iter()
                    .flat_map(|col| layer.iter().map(move |c| col[pick(c)]))
                    .collect();
                SharedVector::from_pairs(me, pairs)
            };
            let lo = gather(|c| c.0, &data);
            let hi = gather(|c| c.1, &data);
            // swap when hi < lo: lo' = lo + s (hi - lo), hi' = hi - s (hi - lo)
            let swap = self.lt(&hi, &lo)?;
            let delta = self.mul(&swap, &hi.sub(&lo))?;
            let new_lo = lo.add(&delta);
            let new_hi = hi.sub(&delta);
            let m = layer.len();
            for (v, col) in data.iter_mut().enumerate() {
                for (k, c) in layer.iter().enumerate() {
                    col[c.0] = new_lo.pairs()[v * m + k];
                    col[c.1] = new_hi.pairs()[v * m + k];
                }
            }
        }
        Ok(data
            .into_iter()
            .map(|pairs| SharedVector::from_pairs(me, pairs))
            .collect())
    }
}
