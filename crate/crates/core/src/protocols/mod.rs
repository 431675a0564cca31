//! Server-side protocols: input preparation, quantile binning, marginal
//! computation, noise injection and the release to the first server.

mod bin;
mod marginals;
mod noise;
pub mod reference;

use serde::{Deserialize, Serialize};

pub use bin::{quartile_indices, BinModel, BINS};
pub use marginals::MarginalSet;
pub use noise::{flat_len, NoisyRelease};

use crate::engine::Party;
use crate::error::{Error, Result};
use crate::ring::{FixedPointCodec, RingValue};
use crate::sharing::{ShareFile, SharedVector};
use crate::transport::PartyId;

/// The server that receives the noisy release and runs the generator.
pub const RELEASE_PARTY: PartyId = PartyId::S1;

/// Concatenated, transposed cohort held in replicated shares.
#[derive(Clone, Debug)]
pub struct PreparedData {
    /// One shared row per gene, each of length `n`.
    pub genes: Vec<SharedVector>,
    /// Class ids in `0..classes`.
    pub labels: SharedVector,
    pub n: usize,
    pub holders: usize,
    pub classes: usize,
}

impl PreparedData {
    pub fn genes_count(&self) -> usize {
        self.genes.len()
    }
}

/// Public parameters agreed by the three servers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolParams {
    pub classes: usize,
    /// Noise scale; zero disables noise.
    pub sigma: f64,
    /// Add noise to the bin means as well as to the marginal tables.
    pub noise_bin_means: bool,
    /// When set, revealing anything that did not go through
    /// [`Party::add_noise`] is refused.
    pub dp_mode: bool,
}

/// Plaintext output of a protocol run, held by [`RELEASE_PARTY`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReleasedMarginals {
    pub genes: usize,
    pub classes: usize,
    pub n: usize,
    pub sigma: f64,
    pub bin_means_noised: bool,
    /// `gene_counts[g][f]`: samples of gene `g` in bin `f`.
    pub gene_counts: Vec<[f64; 4]>,
    /// `label_counts[c]`: samples with class `c`.
    pub label_counts: Vec<f64>,
    /// `joint_counts[g][f * classes + c]`.
    pub joint_counts: Vec<Vec<f64>>,
    /// `bin_means[g][f]`: mean value of gene `g` within bin `f`.
    pub bin_means: Vec<[f64; 4]>,
}

impl ReleasedMarginals {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::ingest("released marginals", e.to_string()))
    }
}

/// Encodes a holder's table for sharing: gene values in fixed point
/// followed by the raw class id, row-major with `d + 1` columns.
pub fn encode_holder_table(
    rows: &[Vec<f64>],
    labels: &[usize],
    codec: FixedPointCodec,
) -> Result<Vec<RingValue>> {
    if rows.len() != labels.len() {
        return Err(Error::Contract(format!(
            "{} rows but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    let mut out = Vec::with_capacity(rows.iter().map(|r| r.len() + 1).sum());
    for (r, &l) in rows.iter().zip(labels) {
        for &x in r {
            out.push(codec.encode(x)?);
        }
        out.push(RingValue(l as u64));
    }
    Ok(out)
}

impl Party {
    /// Turns the holders' additive share files (this party's copy of each)
    /// into one replicated table, concatenated in holder order, with genes
    /// as rows and the last column split off as labels.
    pub fn prepare(&mut self, inputs: &[ShareFile], classes: usize) -> Result<PreparedData> {
        let first = inputs
            .first()
            .ok_or_else(|| Error::Param("no holder submissions".into()))?;
        let cols = first.cols;
        if cols < 2 {
            return Err(Error::ingest("holder 1", "need at least one gene and a label column"));
        }
        for (h, f) in inputs.iter().enumerate() {
            if f.cols != cols {
                return Err(Error::ingest(
                    format!("holder {}", h + 1),
                    format!("{} columns, expected {cols}", f.cols),
                ));
            }
            if f.frac_bits != self.frac_bits() {
                return Err(Error::ingest(
                    format!("holder {}", h + 1),
                    format!(
                        "encoded with {} fractional bits, servers use {}",
                        f.frac_bits,
                        self.frac_bits()
                    ),
                ));
            }
        }
        if classes == 0 {
            return Err(Error::Param("number of classes must be positive".into()));
        }
        let n: usize = inputs.iter().map(|f| f.rows).sum();
        let d = cols - 1;
        // column-major so each gene is contiguous after the reshare
        let mut z = vec![0u64; n * cols];
        let mut row = 0;
        for f in inputs {
            for r in 0..f.rows {
                for c in 0..cols {
                    z[c * n + row] = f.values[r * cols + c];
                }
                row += 1;
            }
        }
        let all = self.reshare(z)?;
        let genes = (0..d).map(|g| all.slice(g * n, n)).collect();
        let labels = all.slice(d * n, n);
        Ok(PreparedData {
            genes,
            labels,
            n,
            holders: inputs.len(),
            classes,
        })
    }

    /// The full server protocol: prepare, bin, marginals, noise and release.
    /// Returns the plaintext release at [`RELEASE_PARTY`] and `None`
    /// elsewhere. Errors carry the phase in which they occurred.
    pub fn run_synthesis_protocol(
        &mut self,
        inputs: &[ShareFile],
        params: &ProtocolParams,
    ) -> Result<Option<ReleasedMarginals>> {
        let data = self
            .prepare(inputs, params.classes)
            .map_err(|e| e.in_phase("prepare"))?;
        let (binned, model) = self.bin(&data).map_err(|e| e.in_phase("binning"))?;
        let marg = self.marginals(&binned).map_err(|e| e.in_phase("marginals"))?;
        let noisy = self
            .add_noise(&marg, &model, params.sigma, params.noise_bin_means)
            .map_err(|e| e.in_phase("noise"))?;
        self.reveal_outputs(&noisy, &model, params.dp_mode)
            .map_err(|e| e.in_phase("reveal"))
    }
}

#[cfg(test)]
mod tests;
