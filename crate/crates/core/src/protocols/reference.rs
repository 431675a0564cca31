//! Plaintext implementation of binning and marginals, used as the oracle
//! for the shared protocols and as the non-private baseline.
//!
//! Comparisons run on the fixed-point encodings so that ties resolve
//! exactly as they do under sharing.

use super::{quartile_indices, ReleasedMarginals, BINS};
use crate::error::{Error, Result};
use crate::ring::FixedPointCodec;

/// Plaintext binning result for one gene.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneBins {
    pub quartiles: [i64; 3],
    pub bins: Vec<u8>,
    pub counts: [u64; 4],
    /// Mean encoded value per bin divided by `2^f`; zero for empty bins.
    pub means: [f64; 4],
}

/// Bins one gene given as fixed-point encodings.
pub fn bin_gene(encoded: &[i64], frac_bits: u32) -> GeneBins {
    let n = encoded.len();
    let mut sorted = encoded.to_vec();
    sorted.sort_unstable();
    let qi = quartile_indices(n);
    let quartiles = [sorted[qi[0]], sorted[qi[1]], sorted[qi[2]]];
    let bins: Vec<u8> = encoded
        .iter()
        .map(|&x| 3 - quartiles.iter().filter(|&&q| x < q).count() as u8)
        .collect();
    let mut counts = [0u64; 4];
    let mut sums = [0i128; 4];
    for (&b, &x) in bins.iter().zip(encoded) {
        counts[b as usize] += 1;
        sums[b as usize] += x as i128;
    }
    let scale = (1u64 << frac_bits) as f64;
    let means = [0, 1, 2, 3].map(|b| {
        if counts[b] == 0 {
            0.0
        } else {
            sums[b] as f64 / counts[b] as f64 / scale
        }
    });
    GeneBins {
        quartiles,
        bins,
        counts,
        means,
    }
}

/// Exact release (no noise) computed in the clear from a row-major table of
/// gene values and the labels.
pub fn reference_release(
    rows: &[Vec<f64>],
    labels: &[usize],
    classes: usize,
    codec: FixedPointCodec,
) -> Result<(ReleasedMarginals, Vec<GeneBins>)> {
    let n = rows.len();
    if n == 0 || labels.len() != n {
        return Err(Error::Degenerate("empty or mismatched cohort".into()));
    }
    let d = rows[0].len();
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::Param(format!("label {bad} outside 0..{classes}")));
    }
    let mut per_gene = Vec::with_capacity(d);
    for g in 0..d {
        let col = rows
            .iter()
            .map(|r| codec.encode(r[g]).map(|v| v.as_signed()))
            .collect::<Result<Vec<i64>>>()?;
        per_gene.push(bin_gene(&col, codec.frac_bits()));
    }
    let mut label_counts = vec![0.0; classes];
    for &l in labels {
        label_counts[l] += 1.0;
    }
    let joint_counts = per_gene
        .iter()
        .map(|gb| {
            let mut t = vec![0.0; BINS * classes];
            for (&b, &l) in gb.bins.iter().zip(labels) {
                t[b as usize * classes + l] += 1.0;
            }
            t
        })
        .collect();
    let release = ReleasedMarginals {
        genes: d,
        classes,
        n,
        sigma: 0.0,
        bin_means_noised: false,
        gene_counts: per_gene.iter().map(|gb| gb.counts.map(|c| c as f64)).collect(),
        label_counts,
        joint_counts,
        bin_means: per_gene.iter().map(|gb| gb.means).collect(),
    };
    Ok((release, per_gene))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let codec = FixedPointCodec::default();
        let enc: Vec<i64> = [5.0, 1.0, 8.0, 3.0, 7.0, 2.0, 6.0, 4.0]
            .iter()
            .map(|&x| codec.encode(x).unwrap().as_signed())
            .collect();
        let gb = bin_gene(&enc, 16);
        assert_eq!(gb.quartiles.map(|q| q >> 16), [3, 5, 7]);
        assert_eq!(gb.bins, vec![2, 0, 3, 1, 3, 0, 2, 1]);
        assert_eq!(gb.counts, [2, 2, 2, 2]);
        assert_eq!(gb.means, [1.5, 3.5, 5.5, 7.5]);
    }

    #[test]
    fn constant_gene_lands_in_top_bin() {
        let gb = bin_gene(&[7; 9], 16);
        assert_eq!(gb.bins, vec![3; 9]);
        assert_eq!(gb.counts, [0, 0, 0, 9]);
        assert_eq!(gb.means, [0.0, 0.0, 0.0, 7.0 / 65536.0]);
    }
}
