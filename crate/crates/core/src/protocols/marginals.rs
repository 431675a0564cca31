//! One-way and label-joint marginal tables over binned genes.

use super::{PreparedData, BINS};
use crate::engine::Party;
use crate::error::{Error, Result};
use crate::sharing::SharedVector;

/// Exact shared count tables.
#[derive(Clone, Debug)]
pub struct MarginalSet {
    pub genes: usize,
    pub classes: usize,
    pub n: usize,
    /// `4d`, entry `g * 4 + f`.
    pub gene_counts: SharedVector,
    /// `C`.
    pub label_counts: SharedVector,
    /// `4dC`, entry `g * 4C + f * C + c`.
    pub joint_counts: SharedVector,
}

impl Party {
    /// Computes the count tables. The label one-hots are built once and
    /// reused for every gene; all `4dC` joint counts are inner products
    /// sent in a single round.
    pub fn marginals(&mut self, data: &PreparedData) -> Result<MarginalSet> {
        let n = data.n;
        let d = data.genes_count();
        let c = data.classes;
        if c == 0 {
            return Err(Error::Param("number of classes must be positive".into()));
        }
        let me = self.id();

        let label_hot = self.indicators(&data.labels, c)?;
        let mut label_counts = SharedVector::zeros(me, 0);
        for l in &label_hot {
            label_counts.push(l.sum());
        }

        let all = SharedVector::concat(me, data.genes.iter());
        let gene_hot = self.indicators(&all, BINS)?;
        let hot = |g: usize, f: usize| gene_hot[f].slice(g * n, n);

        let mut gene_counts = SharedVector::zeros(me, 0);
        let mut cells = Vec::with_capacity(BINS * d);
        for g in 0..d {
            for f in 0..BINS {
                let h = hot(g, f);
                gene_counts.push(h.sum());
                cells.push(h);
            }
        }
        let pairs: Vec<(&SharedVector, &SharedVector)> = cells
            .iter()
            .flat_map(|h| label_hot.iter().map(move |l| (h, l)))
            .collect();
        let joint_counts = self.dot_batch(&pairs)?;

        Ok(MarginalSet {
            genes: d,
            classes: c,
            n,
            gene_counts,
            label_counts,
            joint_counts,
        })
    }
}
