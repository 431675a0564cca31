//! Quartile binning of every gene.

use super::PreparedData;
use crate::engine::Party;
use crate::error::{Error, Result};
use crate::ring::RingValue;
use crate::sharing::SharedVector;

/// Number of quantile bins per gene.
pub const BINS: usize = 4;

/// 0-based positions of the three cut points in the sorted column:
/// `floor(N/4)`, `floor(N/2)`, `floor(3N/4)`.
pub fn quartile_indices(n: usize) -> [usize; 3] {
    [n / 4, n / 2, 3 * n / 4]
}

/// Shared per-gene binning statistics. All vectors are gene-major.
#[derive(Clone, Debug)]
pub struct BinModel {
    /// `3d` cut points `Q0 <= Q1 <= Q2`, fixed point.
    pub quartiles: SharedVector,
    /// `4d` sample counts per bin (integers).
    pub counts: SharedVector,
    /// `4d` mean value per bin, fixed point; zero for an empty bin.
    pub means: SharedVector,
}

impl Party {
    /// Replaces every gene value by its bin index in `{0..3}`: one plus the
    /// number of cut points it is not below, i.e. `3 - [x < Q2] - [x < Q1]
    /// - [x < Q0]`.
    pub fn bin(&mut self, data: &PreparedData) -> Result<(PreparedData, BinModel)> {
        let n = data.n;
        let d = data.genes_count();
        if n == 0 || d == 0 {
            return Err(Error::Degenerate("empty cohort".into()));
        }
        let me = self.id();

        let sorted = self.sort_batch(&data.genes)?;
        let qi = quartile_indices(n);
        let quartiles = SharedVector::from_pairs(
            me,
            sorted
                .iter()
                .flat_map(|s| qi.iter().map(move |&k| s.pairs()[k]))
                .collect(),
        );

        // [x < Q_k] for all genes and cut points at once
        let mut xs = Vec::with_capacity(3 * d);
        let mut qs = Vec::with_capacity(3 * d);
        for g in 0..d {
            for k in 0..3 {
                xs.push(&data.genes[g]);
                qs.push(quartiles.slice(3 * g + k, 1).repeat_each(n));
            }
        }
        let x_all = SharedVector::concat(me, xs.iter().copied());
        let q_all = SharedVector::concat(me, qs.iter());
        let below = self.lt(&x_all, &q_all)?;

        let three = RingValue(3);
        let bins: Vec<SharedVector> = (0..d)
            .map(|g| {
                let base = 3 * g * n;
                below
                    .slice(base, n)
                    .add(&below.slice(base + n, n))
                    .add(&below.slice(base + 2 * n, n))
                    .rsub_const(three)
            })
            .collect();

        // bin masks, counts, masked sums and means
        let all_bins = SharedVector::concat(me, bins.iter());
        let masks = self.indicators(&all_bins, BINS)?;
        let mut counts = SharedVector::zeros(me, 0);
        let mut mask_of = Vec::with_capacity(BINS * d);
        for g in 0..d {
            for mask in &masks {
                let m = mask.slice(g * n, n);
                counts.push(m.sum());
                mask_of.push(m);
            }
        }
        let pairs: Vec<(&SharedVector, &SharedVector)> = (0..BINS * d)
            .map(|k| (&mask_of[k], &data.genes[k / BINS]))
            .collect();
        let sums = self.dot_batch(&pairs)?;
        let means = self.div(&sums, &counts, n as u64)?;

        let binned = PreparedData {
            genes: bins,
            labels: data.labels.clone(),
            n,
            holders: data.holders,
            classes: data.classes,
        };
        Ok((
            binned,
            BinModel {
                quartiles,
                counts,
                means,
            },
        ))
    }
}
