//! Utility, fidelity and privacy metrics comparing synthetic to real data.

use log::warn;

use super::cohort::CohortTable;
use crate::error::{Error, Result};

/// Floor applied to variances in the Welch statistic and standardization.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Hyperparameters of the softmax classifier used for TSTR.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogRegConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            epochs: 500,
            learning_rate: 0.1,
            l2: 1e-4,
        }
    }
}

fn column_stats(rows: &[Vec<f64>], d: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len().max(1) as f64;
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for r in rows {
        for g in 0..d {
            var[g] += (r[g] - mean[g]).powi(2);
        }
    }
    let std = var.iter().map(|v| (v / n).max(VARIANCE_FLOOR).sqrt()).collect();
    (mean, std)
}

/// Multinomial logistic regression fitted by full-batch gradient descent
/// on standardized features.
#[derive(Clone, Debug)]
pub struct SoftmaxRegression {
    mean: Vec<f64>,
    std: Vec<f64>,
    /// `classes x (d + 1)`, bias last.
    weights: Vec<Vec<f64>>,
}

impl SoftmaxRegression {
    pub fn fit(rows: &[Vec<f64>], labels: &[usize], classes: usize, cfg: LogRegConfig) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let (mean, std) = column_stats(rows, d);
        let xs: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().zip(&mean).zip(&std).map(|((v, m), s)| (v - m) / s).collect())
            .collect();
        let n = xs.len().max(1) as f64;
        let mut w = vec![vec![0.0; d + 1]; classes];
        let mut grad = vec![vec![0.0; d + 1]; classes];
        let mut p = vec![0.0; classes];
        for _ in 0..cfg.epochs {
            grad.iter_mut().for_each(|g| g.iter_mut().for_each(|v| *v = 0.0));
            for (x, &y) in xs.iter().zip(labels) {
                softmax_into(&w, x, &mut p);
                for c in 0..classes {
                    let err = p[c] - f64::from(u8::from(c == y));
                    let gc = &mut grad[c];
                    for (gv, xv) in gc.iter_mut().zip(x) {
                        *gv += err * xv;
                    }
                    gc[d] += err;
                }
            }
            for c in 0..classes {
                for j in 0..=d {
                    let reg = if j < d { cfg.l2 * w[c][j] } else { 0.0 };
                    w[c][j] -= cfg.learning_rate * (grad[c][j] / n + reg);
                }
            }
        }
        SoftmaxRegression { mean, std, weights: w }
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        let x: Vec<f64> = row
            .iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect();
        let mut p = vec![0.0; self.weights.len()];
        softmax_into(&self.weights, &x, &mut p);
        p.iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (c, &v)| if v > best.1 { (c, v) } else { best })
            .0
    }
}

fn softmax_into(w: &[Vec<f64>], x: &[f64], out: &mut [f64]) {
    let d = x.len();
    for (o, wc) in out.iter_mut().zip(w) {
        *o = wc[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + wc[d];
    }
    let max = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for o in out.iter_mut() {
        *o = (*o - max).exp();
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
}

fn check_genes(a: &CohortTable, b: &CohortTable) -> Result<()> {
    if a.d() != b.d() {
        return Err(Error::Contract(format!("gene counts differ: {} vs {}", a.d(), b.d())));
    }
    Ok(())
}

/// Train on synthetic, test on real: accuracy of a softmax classifier fitted
/// to `train_syn` and evaluated on `test_real`.
pub fn tstr(train_syn: &CohortTable, test_real: &CohortTable, cfg: LogRegConfig) -> Result<f64> {
    check_genes(train_syn, test_real)?;
    if test_real.n() == 0 {
        return Err(Error::Degenerate("empty test set".into()));
    }
    let classes = train_syn.classes.max(test_real.classes);
    for c in 0..classes {
        if !train_syn.labels.contains(&c) {
            warn!("class {c} is absent from the synthetic training set");
        }
    }
    let model = SoftmaxRegression::fit(&train_syn.rows, &train_syn.labels, classes, cfg);
    let hits = test_real
        .rows
        .iter()
        .zip(&test_real.labels)
        .filter(|(r, &y)| model.predict(r) == y)
        .count();
    Ok(hits as f64 / test_real.n() as f64)
}

/// 1-Wasserstein distance between two empirical distributions on the line:
/// the area between their CDFs.
pub fn wasserstein_1d(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut prev = a[0].min(b[0]);
    let mut dist = 0.0;
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        dist += (i as f64 / na - j as f64 / nb).abs() * (next - prev);
        while i < a.len() && a[i] <= next {
            i += 1;
        }
        while j < b.len() && b[j] <= next {
            j += 1;
        }
        prev = next;
    }
    dist
}

/// Mean over genes of the per-gene 1-Wasserstein distance.
pub fn wasserstein_mean(real: &CohortTable, syn: &CohortTable) -> Result<f64> {
    check_genes(real, syn)?;
    let d = real.d();
    let col = |t: &CohortTable, g: usize| t.rows.iter().map(|r| r[g]).collect::<Vec<f64>>();
    Ok((0..d).map(|g| wasserstein_1d(&col(real, g), &col(syn, g))).sum::<f64>() / d as f64)
}

/// Per-gene differential-expression score: the largest absolute one-vs-rest
/// Welch t statistic over the classes.
pub fn de_scores(t: &CohortTable) -> Vec<f64> {
    let d = t.d();
    let classes = t.classes;
    (0..d)
        .map(|g| {
            (0..classes)
                .filter_map(|c| {
                    let (mut ins, mut outs) = (Vec::new(), Vec::new());
                    for (r, &l) in t.rows.iter().zip(&t.labels) {
                        if l == c {
                            ins.push(r[g]);
                        } else {
                            outs.push(r[g]);
                        }
                    }
                    welch_t(&ins, &outs).map(f64::abs)
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

fn welch_t(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let mv = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = if x.len() > 1 {
            x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        (m, v.max(VARIANCE_FLOOR), n)
    };
    let (ma, va, na) = mv(a);
    let (mb, vb, nb) = mv(b);
    Some((ma - mb) / (va / na + vb / nb).sqrt())
}

fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    // descending score, ties by gene index
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Fraction of the real data's top-`k` differentially expressed genes that
/// are also among the synthetic data's top `k`.
pub fn detpr(real: &CohortTable, syn: &CohortTable, k: usize) -> Result<f64> {
    check_genes(real, syn)?;
    if k == 0 || k > real.d() {
        return Err(Error::Param(format!("K = {k} must lie in 1..={}", real.d())));
    }
    if real.classes < 2 {
        return Err(Error::Param("differential expression needs at least two classes".into()));
    }
    let truth = top_k(&de_scores(real), k);
    let found = top_k(&de_scores(syn), k);
    let hits = truth.iter().filter(|g| found.contains(g)).count();
    Ok(hits as f64 / k as f64)
}

/// Mean distance from each synthetic row to its nearest real row, with both
/// standardized by the real data's column statistics. Exact scan.
pub fn dcr(real: &CohortTable, syn: &CohortTable) -> Result<f64> {
    check_genes(real, syn)?;
    if real.n() == 0 || syn.n() == 0 {
        return Err(Error::Degenerate("empty table in distance to closest record".into()));
    }
    let d = real.d();
    let (mean, std) = column_stats(&real.rows, d);
    let z = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| r.iter().zip(&mean).zip(&std).map(|((v, m), s)| (v - m) / s).collect())
            .collect()
    };
    let (zr, zs) = (z(&real.rows), z(&syn.rows));
    let total: f64 = zs
        .iter()
        .map(|s| {
            zr.iter()
                .map(|r| r.iter().zip(s).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .sum();
    Ok(total / syn.n() as f64)
}

/// Plain distance to closest record without standardization; used where
/// the raw geometry is meant.
pub fn dcr_raw(real: &[Vec<f64>], syn: &[Vec<f64>]) -> f64 {
    if syn.is_empty() {
        return 0.0;
    }
    syn.iter()
        .map(|s| {
            real.iter()
                .map(|r| r.iter().zip(s).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .sum::<f64>()
        / syn.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::cohort::{desk_cohort, DeskCohortSpec};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn table(rows: Vec<Vec<f64>>, labels: Vec<usize>, classes: usize) -> CohortTable {
        let d = rows[0].len();
        CohortTable::new((0..d).map(|g| format!("g{g}")).collect(), rows, labels, classes).unwrap()
    }

    #[test]
    fn tstr_separable_data_is_perfect() {
        let rows = vec![vec![0.0, 0.0], vec![0.2, 0.1], vec![0.1, 0.3], vec![5.0, 5.0], vec![5.2, 4.9], vec![4.8, 5.1]];
        let t = table(rows, vec![0, 0, 0, 1, 1, 1], 2);
        assert_eq!(tstr(&t, &t, LogRegConfig::default()).unwrap(), 1.0);
    }

    #[test]
    fn tstr_random_labels_is_chance() {
        let real = desk_cohort(&DeskCohortSpec::new(2000, 5, 4, 3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut syn = desk_cohort(&DeskCohortSpec::new(400, 5, 4, 5)).unwrap();
        syn.labels.iter_mut().for_each(|l| *l = rng.random_range(0..4));
        let acc = tstr(&syn, &real, LogRegConfig::default()).unwrap();
        assert!((acc - 0.25).abs() <= 0.05, "{acc}");
        assert_eq!(acc, tstr(&syn, &real, LogRegConfig::default()).unwrap());
    }

    #[test]
    fn wasserstein_examples() {
        assert_eq!(wasserstein_1d(&[0.0, 0.0], &[1.0, 1.0]), 1.0);
        let a = [3.0, 1.0, 2.0, 7.5];
        assert_eq!(wasserstein_1d(&a, &a), 0.0);
        let shifted: Vec<f64> = a.iter().map(|x| x + 2.5).collect();
        assert!((wasserstein_1d(&a, &shifted) - 2.5).abs() < 1e-12);
        // unequal sizes: {0} vs {0, 2} -> half the mass moves by 2
        assert!((wasserstein_1d(&[0.0], &[0.0, 2.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wasserstein_mean_translation() {
        let real = desk_cohort(&DeskCohortSpec::new(30, 3, 2, 1)).unwrap();
        assert_eq!(wasserstein_mean(&real, &real).unwrap(), 0.0);
        let mut syn = real.clone();
        syn.rows.iter_mut().for_each(|r| r[1] += 0.75);
        assert!((wasserstein_mean(&real, &syn).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn detpr_examples() {
        let real = desk_cohort(&DeskCohortSpec::new(300, 40, 3, 8)).unwrap();
        assert_eq!(detpr(&real, &real, 10).unwrap(), 1.0);
        assert_eq!(detpr(&real, &real, 40).unwrap(), 1.0);
        // shuffled labels destroy the signal: TPR near K/d on average
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut total = 0.0;
        let reps = 20;
        for _ in 0..reps {
            let mut syn = real.clone();
            syn.labels.shuffle(&mut rng);
            total += detpr(&real, &syn, 10).unwrap();
        }
        let mean = total / reps as f64;
        assert!((mean - 0.25).abs() < 0.12, "{mean}");
    }

    #[test]
    fn zero_variance_gene_is_finite() {
        let t = table(vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 5.0]], vec![0, 1, 1], 2);
        assert!(de_scores(&t).iter().all(|s| s.is_finite()));
    }

    #[test]
    fn dcr_examples() {
        let real = desk_cohort(&DeskCohortSpec::new(40, 4, 2, 3)).unwrap();
        assert_eq!(dcr(&real, &real).unwrap(), 0.0);
        assert_eq!(dcr_raw(&[vec![0.0, 0.0]], &[vec![3.0, 4.0]]), 5.0);
        let mut shuffled = real.clone();
        let mut perm: Vec<usize> = (0..real.n()).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
        shuffled = shuffled.subset(&perm);
        let syn = desk_cohort(&DeskCohortSpec::new(25, 4, 2, 9)).unwrap();
        let a = dcr(&real, &syn).unwrap();
        let b = dcr(&shuffled, &syn.subset(&(0..25).rev().collect::<Vec<_>>())).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
