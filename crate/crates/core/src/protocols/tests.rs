use super::reference::reference_release;
use super::*;
use crate::engine::{run_three_party_local, HarnessConfig};
use crate::ring::{FixedPointCodec, RingValue};
use crate::sharing::{share_table, share_vector, ShareFile, SharedVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Share files per party for the given holders' tables.
fn submissions(holders: &[(Vec<Vec<f64>>, Vec<usize>)], seed: u64) -> [Vec<ShareFile>; 3] {
    let codec = FixedPointCodec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: [Vec<ShareFile>; 3] = Default::default();
    for (rows, labels) in holders {
        let vals = encode_holder_table(rows, labels, codec).unwrap();
        let cols = rows[0].len() + 1;
        let files = share_table(&vals, rows.len(), cols, codec.frac_bits(), &mut rng).unwrap();
        for (o, f) in out.iter_mut().zip(files) {
            o.push(f);
        }
    }
    out
}

fn params(classes: usize) -> ProtocolParams {
    ProtocolParams {
        classes,
        sigma: 0.0,
        noise_bin_means: true,
        dp_mode: false,
    }
}

#[test]
fn prepare_concatenates_in_holder_order() {
    let h1 = (vec![vec![1.0, 2.0], vec![3.0, 4.0]], vec![0, 1]);
    let h2 = (vec![vec![5.0, 6.0], vec![7.0, 8.0], vec![9.0, 10.0]], vec![1, 0, 1]);
    let subs = submissions(&[h1, h2], 1);
    let outs = run_three_party_local(HarnessConfig::default(), |p| {
        let data = p.prepare(&subs[p.id().index()], 2)?;
        assert_eq!((data.n, data.holders, data.genes_count()), (5, 2, 2));
        let g0 = p.reveal_all(&data.genes[0])?;
        let g1 = p.reveal_all(&data.genes[1])?;
        let y = p.reveal_all(&data.labels)?;
        Ok((g0, g1, y))
    })
    .unwrap();
    let codec = FixedPointCodec::default();
    let (g0, g1, y) = &outs[0].output;
    assert_eq!(codec.decode_slice(g0), vec![1.0, 3.0, 5.0, 7.0, 9.0]);
    assert_eq!(codec.decode_slice(g1), vec![2.0, 4.0, 6.0, 8.0, 10.0]);
    assert_eq!(y.iter().map(|v| v.0).collect::<Vec<_>>(), vec![0, 1, 1, 0, 1]);
}

#[test]
fn prepare_rejects_column_mismatch() {
    let h1 = (vec![vec![1.0, 2.0]], vec![0]);
    let h2 = (vec![vec![5.0]], vec![1]);
    let subs = submissions(&[h1, h2], 1);
    let err = run_three_party_local(HarnessConfig::default(), |p| {
        p.prepare(&subs[p.id().index()], 2).map(|_| ())
    })
    .unwrap_err();
    assert_eq!(err.exit_code(), 3, "{err}");
}

#[test]
fn bin_worked_example() {
    let vals = [5.0, 1.0, 8.0, 3.0, 7.0, 2.0, 6.0, 4.0];
    let rows: Vec<Vec<f64>> = vals.iter().map(|&v| vec![v]).collect();
    let subs = submissions(&[(rows, vec![0; 8])], 3);
    let outs = run_three_party_local(HarnessConfig::default(), |p| {
        let data = p.prepare(&subs[p.id().index()], 1)?;
        let (binned, model) = p.bin(&data)?;
        Ok((
            p.reveal_all(&model.quartiles)?,
            p.reveal_all(&binned.genes[0])?,
            p.reveal_all(&model.counts)?,
            p.reveal_all(&model.means)?,
        ))
    })
    .unwrap();
    let codec = FixedPointCodec::default();
    let (q, b, c, m) = &outs[0].output;
    assert_eq!(codec.decode_slice(q), vec![3.0, 5.0, 7.0]);
    assert_eq!(b.iter().map(|v| v.0).collect::<Vec<_>>(), vec![2, 0, 3, 1, 3, 0, 2, 1]);
    assert_eq!(c.iter().map(|v| v.0).collect::<Vec<_>>(), vec![2, 2, 2, 2]);
    for (got, want) in codec.decode_slice(m).iter().zip([1.5, 3.5, 5.5, 7.5]) {
        assert!((got - want).abs() <= 2f64.powi(-13), "{got} vs {want}");
    }
}

#[test]
fn constant_gene_goes_to_top_bin() {
    let rows: Vec<Vec<f64>> = vec![vec![2.5]; 7];
    let subs = submissions(&[(rows, vec![0; 7])], 4);
    let outs = run_three_party_local(HarnessConfig::default(), |p| {
        let data = p.prepare(&subs[p.id().index()], 1)?;
        let (binned, model) = p.bin(&data)?;
        Ok((p.reveal_all(&binned.genes[0])?, p.reveal_all(&model.means)?))
    })
    .unwrap();
    assert!(outs[0].output.0.iter().all(|v| v.0 == 3));
    let means = FixedPointCodec::default().decode_slice(&outs[0].output.1);
    assert_eq!(&means[..3], &[0.0, 0.0, 0.0]);
    assert!((means[3] - 2.5).abs() <= 2f64.powi(-13));
}

#[test]
fn marginals_example() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = share_vector(&[0u64, 1, 0, 3].map(RingValue), &mut rng);
    let y = share_vector(&[0u64, 1, 0, 2].map(RingValue), &mut rng);
    let outs = run_three_party_local(HarnessConfig::default(), |p| {
        let i = p.id().index();
        let data = PreparedData {
            genes: vec![g[i].clone()],
            labels: y[i].clone(),
            n: 4,
            holders: 1,
            classes: 3,
        };
        let m = p.marginals(&data)?;
        Ok((
            p.reveal_all(&m.gene_counts)?,
            p.reveal_all(&m.label_counts)?,
            p.reveal_all(&m.joint_counts)?,
        ))
    })
    .unwrap();
    let raw = |v: &[RingValue]| v.iter().map(|x| x.0).collect::<Vec<_>>();
    let (gc, lc, jc) = &outs[0].output;
    assert_eq!(raw(gc), vec![2, 1, 0, 1]);
    assert_eq!(raw(lc), vec![2, 1, 1]);
    let mut want = vec![0u64; 12];
    want[0] = 2; // bin 0, class 0
    want[3 + 1] = 1; // bin 1, class 1
    want[9 + 2] = 1; // bin 3, class 2
    assert_eq!(raw(jc), want);
}

fn random_cohort(rng: &mut ChaCha8Rng, n: usize, d: usize, c: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let rows = (0..n)
        .map(|_| {
            (0..d)
                .map(|_| {
                    // coarse grid so that ties occur
                    (rng.random_range(0..40) as f64) * 0.25
                })
                .collect()
        })
        .collect();
    let labels = (0..n).map(|_| rng.random_range(0..c)).collect();
    (rows, labels)
}

#[test]
fn zero_noise_release_matches_plaintext_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..3 {
        let (n, d, c) = (rng.random_range(5..60), rng.random_range(1..6), rng.random_range(1..5));
        let (rows, labels) = random_cohort(&mut rng, n, d, c);
        let subs = submissions(&[(rows.clone(), labels.clone())], trial);
        let outs = run_three_party_local(HarnessConfig::with_seed(trial), |p| {
            p.run_synthesis_protocol(&subs[p.id().index()], &params(c))
        })
        .unwrap();
        let got = outs[0].output.clone().unwrap();
        assert!(outs[1].output.is_none() && outs[2].output.is_none());
        let (want, _) = reference_release(&rows, &labels, c, FixedPointCodec::default()).unwrap();
        assert_eq!(got.gene_counts, want.gene_counts);
        assert_eq!(got.label_counts, want.label_counts);
        assert_eq!(got.joint_counts, want.joint_counts);
        for (a, b) in got.bin_means.iter().flatten().zip(want.bin_means.iter().flatten()) {
            assert!((a - b).abs() <= 2f64.powi(-13), "{a} vs {b}");
        }
    }
}

#[test]
fn noise_scale_zero_is_identity_and_layout_matches() {
    assert_eq!(flat_len(3, 2), 12 + 2 + 24);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (rows, labels) = random_cohort(&mut rng, 12, 3, 2);
    let subs = submissions(&[(rows, labels)], 5);
    let outs = run_three_party_local(HarnessConfig::default(), |p| {
        let data = p.prepare(&subs[p.id().index()], 2)?;
        let (binned, model) = p.bin(&data)?;
        let m = p.marginals(&binned)?;
        let noisy = p.add_noise(&m, &model, 0.0, false)?;
        assert_eq!(noisy.values.len(), flat_len(3, 2));
        let exact = NoisyRelease::without_noise(p, &m);
        Ok((p.reveal_all(&noisy.values)?, p.reveal_all(&exact.values)?))
    })
    .unwrap();
    assert_eq!(outs[0].output.0, outs[0].output.1);
}

#[test]
fn noise_magnitude_matches_half_normal_mean() {
    let me_sigma = 10.0;
    let cells = 10_000;
    let outs = run_three_party_local(HarnessConfig::with_seed(8), |p| {
        let v = p.gauss_scaled(cells, me_sigma)?;
        p.reveal_all(&v)
    })
    .unwrap();
    let x = FixedPointCodec::default().decode_slice(&outs[0].output);
    let mad = x.iter().map(|v| v.abs()).sum::<f64>() / cells as f64;
    let want = me_sigma * (2.0 / std::f64::consts::PI).sqrt();
    assert!((mad - want).abs() <= 0.05 * want, "{mad} vs {want}");
}

#[test]
fn reveal_guard_refuses_unnoised_tables_in_dp_mode() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (rows, labels) = random_cohort(&mut rng, 8, 1, 2);
    let subs = submissions(&[(rows, labels)], 6);
    let err = run_three_party_local(HarnessConfig::default(), |p| {
        let data = p.prepare(&subs[p.id().index()], 2)?;
        let (binned, model) = p.bin(&data)?;
        let m = p.marginals(&binned)?;
        let exact = NoisyRelease::without_noise(p, &m);
        p.reveal_outputs(&exact, &model, true)
    })
    .unwrap_err();
    assert!(matches!(err, crate::error::Error::Contract(_)), "{err}");
}

#[test]
fn one_hot_soundness_over_bins() {
    let xs: Vec<RingValue> = (0..4u64).cycle().take(20).map(RingValue).collect();
    let views = share_vector(&xs, &mut ChaCha8Rng::seed_from_u64(1));
    let outs = run_three_party_local(HarnessConfig::default(), |p| {
        let ind = p.indicators(&views[p.id().index()], BINS)?;
        let all = SharedVector::concat(p.id(), ind.iter());
        p.reveal_all(&all)
    })
    .unwrap();
    let v = &outs[0].output;
    for k in 0..20 {
        let row: Vec<u64> = (0..4).map(|f| v[f * 20 + k].0).collect();
        assert_eq!(row.iter().sum::<u64>(), 1);
        assert_eq!(row[k % 4], 1);
    }
}
