//! Release-side generation: noise calibration, the label-hub star model
//! estimated from noisy marginals, sampling, and mapping bins back to values.

use std::io::Write;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocols::{ReleasedMarginals, BINS};

/// Privacy parameters and the derived Gaussian noise scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DPParams {
    /// `f64::INFINITY` means no privacy (noise scale zero).
    pub epsilon: f64,
    pub delta: f64,
    pub genes: usize,
    /// L2 sensitivity of the released tables: `sqrt(2d + 1)`.
    pub sensitivity: f64,
    pub sigma: f64,
}

/// Gaussian mechanism scale for the `4d + C + 4dC` released counts.
///
/// Adding or removing one record changes one cell of every gene table, one
/// label cell and one joint cell per gene, so the L2 sensitivity is
/// `sqrt(2d + 1)` and `sigma = sqrt(2d + 1) sqrt(2 ln(1.25 / delta)) / epsilon`.
pub fn calibrate(epsilon: f64, delta: f64, genes: usize) -> Result<DPParams> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::Param(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Param(format!("delta must lie in (0, 1), got {delta}")));
    }
    if genes == 0 {
        return Err(Error::Param("need at least one gene".into()));
    }
    let sensitivity = ((2 * genes + 1) as f64).sqrt();
    let sigma = if epsilon.is_infinite() {
        0.0
    } else {
        sensitivity * (2.0 * (1.25 / delta).ln()).sqrt() / epsilon
    };
    Ok(DPParams {
        epsilon,
        delta,
        genes,
        sensitivity,
        sigma,
    })
}

/// Labels as the hub, each gene's bin conditionally independent given the
/// label.
#[derive(Clone, Debug, PartialEq)]
pub struct StarModel {
    /// `P(y = c)`.
    pub label_probs: Vec<f64>,
    /// `bin_probs[g][c][f] = P(bin_g = f | y = c)`.
    pub bin_probs: Vec<Vec<[f64; 4]>>,
}

fn clip_normalize(xs: &[f64]) -> Option<Vec<f64>> {
    let clipped: Vec<f64> = xs.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    (total > 0.0).then(|| clipped.iter().map(|x| x / total).collect())
}

impl StarModel {
    /// Clips negative noisy counts to zero and normalizes. A label column
    /// of a gene with no positive mass becomes uniform over the bins.
    pub fn estimate(release: &ReleasedMarginals) -> Result<StarModel> {
        let c = release.classes;
        let label_probs = clip_normalize(&release.label_counts).ok_or_else(|| {
            Error::Degenerate("every class count is non-positive after noise".into())
        })?;
        let bin_probs = release
            .joint_counts
            .iter()
            .map(|table| {
                (0..c)
                    .map(|cls| {
                        let col: Vec<f64> = (0..BINS).map(|f| table[f * c + cls]).collect();
                        match clip_normalize(&col) {
                            Some(p) => [p[0], p[1], p[2], p[3]],
                            None => [0.25; 4],
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(StarModel {
            label_probs,
            bin_probs,
        })
    }

    pub fn genes(&self) -> usize {
        self.bin_probs.len()
    }

    pub fn classes(&self) -> usize {
        self.label_probs.len()
    }

    /// Draws `count` discrete records: a label, then every gene's bin from
    /// its conditional given that label.
    pub fn sample(&self, count: usize, seed: u64) -> Result<DiscreteRows> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let weighted = |p: &[f64]| {
            WeightedIndex::new(p).map_err(|e| Error::Degenerate(format!("bad distribution: {e}")))
        };
        let label_dist = weighted(&self.label_probs)?;
        let gene_dists = self
            .bin_probs
            .iter()
            .map(|per_class| per_class.iter().map(|p| weighted(p)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let mut bins = Vec::with_capacity(count);
        let mut labels = Vec::with_capacity(count);
        for _ in 0..count {
            let y = label_dist.sample(&mut rng);
            bins.push(
                gene_dists
                    .iter()
                    .map(|per_class| per_class[y].sample(&mut rng) as u8)
                    .collect(),
            );
            labels.push(y);
        }
        Ok(DiscreteRows { bins, labels })
    }
}

/// Mean absolute gap between the released one-way gene tables and the
/// gene tables implied by the joint tables. Zero without noise.
pub fn consistency_gap(release: &ReleasedMarginals) -> f64 {
    let c = release.classes;
    let mut total = 0.0;
    let mut cells = 0usize;
    for (one_way, joint) in release.gene_counts.iter().zip(&release.joint_counts) {
        for f in 0..BINS {
            let implied: f64 = joint[f * c..(f + 1) * c].iter().sum();
            total += (one_way[f] - implied).abs();
            cells += 1;
        }
    }
    if cells == 0 {
        0.0
    } else {
        total / cells as f64
    }
}

/// Sampled records in bin space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscreteRows {
    pub bins: Vec<Vec<u8>>,
    pub labels: Vec<usize>,
}

/// Synthetic cohort in value space.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDataset {
    pub gene_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

/// Replaces every bin index by the released mean of that bin.
pub fn inverse_bin(rows: &DiscreteRows, bin_means: &[[f64; 4]], gene_names: &[String]) -> Result<SyntheticDataset> {
    if gene_names.len() != bin_means.len() {
        return Err(Error::Contract(format!(
            "{} gene names for {} genes",
            gene_names.len(),
            bin_means.len()
        )));
    }
    let values = rows
        .bins
        .iter()
        .map(|r| {
            if r.len() != bin_means.len() {
                return Err(Error::Contract("row width differs from model".into()));
            }
            Ok(r.iter()
                .zip(bin_means)
                .map(|(&b, means)| means[b as usize])
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(SyntheticDataset {
        gene_names: gene_names.to_vec(),
        rows: values,
        labels: rows.labels.clone(),
    })
}

impl SyntheticDataset {
    /// CSV with the gene names and `label` as header, six decimals.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = self.gene_names.join(",");
        if !header.is_empty() {
            header.push(',');
        }
        header.push_str("label");
        writeln!(w, "{header}")?;
        let mut line = String::new();
        for (r, l) in self.rows.iter().zip(&self.labels) {
            line.clear();
            for v in r {
                line.push_str(&format!("{v:.6},"));
            }
            line.push_str(&l.to_string());
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to memory");
        String::from_utf8(buf).expect("utf8")
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(f)
    }
}

/// Calibration, estimation, sampling and de-binning in one call.
pub fn generate(release: &ReleasedMarginals, gene_names: &[String], count: usize, seed: u64) -> Result<SyntheticDataset> {
    let model = StarModel::estimate(release)?;
    let rows = model.sample(count, seed)?;
    inverse_bin(&rows, &release.bin_means, gene_names)
}
