//! Batched Gaussian noise and the release to the designated server.

use super::{BinModel, MarginalSet, ReleasedMarginals, BINS, RELEASE_PARTY};
use crate::engine::Party;
use crate::error::{Error, Result};
use crate::sharing::SharedVector;

/// Length of the flattened table vector: `4d + C + 4dC`.
pub fn flat_len(genes: usize, classes: usize) -> usize {
    BINS * genes + classes + BINS * genes * classes
}

/// Flattened fixed-point tables ready to be opened: gene counts, label
/// counts, joint counts and, when `bin_means_included`, the bin means.
#[derive(Clone, Debug)]
pub struct NoisyRelease {
    pub values: SharedVector,
    pub genes: usize,
    pub classes: usize,
    pub n: usize,
    pub sigma: f64,
    pub bin_means_included: bool,
    noised: bool,
}

impl NoisyRelease {
    /// The exact tables without any noise. Revealing this is refused in DP
    /// mode.
    pub fn without_noise(party: &Party, m: &MarginalSet) -> Self {
        NoisyRelease {
            values: flatten(party, m),
            genes: m.genes,
            classes: m.classes,
            n: m.n,
            sigma: 0.0,
            bin_means_included: false,
            noised: false,
        }
    }

    pub fn is_noised(&self) -> bool {
        self.noised
    }
}

fn flatten(party: &Party, m: &MarginalSet) -> SharedVector {
    let one = party.codec().one();
    SharedVector::concat(party.id(), [&m.gene_counts, &m.label_counts, &m.joint_counts])
        .mul_const(one)
}

impl Party {
    /// Adds `sigma`-scaled Irwin-Hall noise to every released cell in one
    /// batch: the flattened tables and, if requested, the bin means.
    pub fn add_noise(
        &mut self,
        m: &MarginalSet,
        model: &BinModel,
        sigma: f64,
        noise_bin_means: bool,
    ) -> Result<NoisyRelease> {
        let mut values = flatten(self, m);
        if noise_bin_means {
            values.extend(&model.means);
        }
        let noise = self.gauss_scaled(values.len(), sigma)?;
        values.add_assign(&noise);
        Ok(NoisyRelease {
            values,
            genes: m.genes,
            classes: m.classes,
            n: m.n,
            sigma,
            bin_means_included: noise_bin_means,
            noised: true,
        })
    }

    /// Opens the release to [`RELEASE_PARTY`]. Bin means that were not part
    /// of the noisy batch are opened as they are (the literal protocol).
    pub fn reveal_outputs(
        &mut self,
        noisy: &NoisyRelease,
        model: &BinModel,
        dp_mode: bool,
    ) -> Result<Option<ReleasedMarginals>> {
        if dp_mode && !noisy.noised {
            return Err(Error::Contract(
                "refusing to reveal marginals that were not noised while DP is enabled".into(),
            ));
        }
        let mut opened = noisy.values.clone();
        if !noisy.bin_means_included {
            opened.extend(&model.means);
        }
        let Some(vals) = self.reveal_to(&opened, RELEASE_PARTY)? else {
            return Ok(None);
        };
        let codec = self.codec();
        let x = codec.decode_slice(&vals);
        let (d, c) = (noisy.genes, noisy.classes);
        let mut off = 0;
        let mut take = |len: usize| {
            let s = &x[off..off + len];
            off += len;
            s.to_vec()
        };
        let gc = take(BINS * d);
        let lc = take(c);
        let jc = take(BINS * d * c);
        let bm = take(BINS * d);
        let quad = |v: &[f64], g: usize| -> [f64; 4] { [v[4 * g], v[4 * g + 1], v[4 * g + 2], v[4 * g + 3]] };
        Ok(Some(ReleasedMarginals {
            genes: d,
            classes: c,
            n: noisy.n,
            sigma: noisy.sigma,
            bin_means_noised: noisy.bin_means_included,
            gene_counts: (0..d).map(|g| quad(&gc, g)).collect(),
            label_counts: lc,
            joint_counts: jc.chunks(BINS * c).map(<[f64]>::to_vec).collect(),
            bin_means: (0..d).map(|g| quad(&bm, g)).collect(),
        }))
    }
}
