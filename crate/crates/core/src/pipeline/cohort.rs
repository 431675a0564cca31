//! Labelled expression tables: CSV ingest and export, splitting between
//! holders and train/test, and a synthetic desk-scale cohort generator.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Name of the class column in cohort CSV files.
pub const LABEL_COLUMN: &str = "label";

/// `N` samples of `d` non-negative gene values plus a class id.
#[derive(Clone, Debug, PartialEq)]
pub struct CohortTable {
    pub gene_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub classes: usize,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct IngestOptions {
    /// Apply `ln(1 + x)` to every gene value.
    pub log1p: bool,
    /// Number of classes; inferred as `max label + 1` when absent.
    pub classes: Option<usize>,
}

impl CohortTable {
    pub fn new(gene_names: Vec<String>, rows: Vec<Vec<f64>>, labels: Vec<usize>, classes: usize) -> Result<Self> {
        let t = CohortTable {
            gene_names,
            rows,
            labels,
            classes,
        };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        let d = self.gene_names.len();
        if d == 0 {
            return Err(Error::ingest("header", "no gene columns"));
        }
        if self.rows.len() != self.labels.len() {
            return Err(Error::Contract("row and label counts differ".into()));
        }
        for (r, row) in self.rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::ingest(format!("row {}", r + 1), format!("{} values, expected {d}", row.len())));
            }
        }
        if let Some((r, l)) = self.labels.iter().enumerate().find(|(_, &l)| l >= self.classes) {
            return Err(Error::ingest(
                format!("row {}, column {LABEL_COLUMN}", r + 1),
                format!("label {l} outside 0..{}", self.classes),
            ));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn d(&self) -> usize {
        self.gene_names.len()
    }

    /// Rows at the given indices, in that order.
    pub fn subset(&self, idx: &[usize]) -> CohortTable {
        CohortTable {
            gene_names: self.gene_names.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
        }
    }

    /// Parses a CSV with a header row. The `label` column may appear
    /// anywhere; every other column is a gene.
    pub fn read_csv<R: Read>(reader: R, source: &str, opts: IngestOptions) -> Result<CohortTable> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::ingest(format!("{source}: header"), e.to_string()))?
            .iter()
            .map(|s| s.trim().to_string())
            .collect();
        let label_at = header.iter().position(|h| h == LABEL_COLUMN).ok_or_else(|| {
            Error::ingest(format!("{source}: header"), format!("missing column '{LABEL_COLUMN}'"))
        })?;
        let gene_names: Vec<String> = header
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != label_at)
            .map(|(_, h)| h.clone())
            .collect();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (r, rec) in rdr.records().enumerate() {
            let line = r + 2;
            let rec = rec.map_err(|e| Error::ingest(format!("{source}: line {line}"), e.to_string()))?;
            if rec.len() != header.len() {
                return Err(Error::ingest(
                    format!("{source}: line {line}"),
                    format!("{} fields, header has {}", rec.len(), header.len()),
                ));
            }
            let mut row = Vec::with_capacity(gene_names.len());
            for (c, cell) in rec.iter().enumerate() {
                let at = || format!("{source}: line {line}, column '{}'", header[c]);
                let cell = cell.trim();
                if c == label_at {
                    let l: usize = cell
                        .parse()
                        .map_err(|_| Error::ingest(at(), format!("label {cell:?} is not a non-negative integer")))?;
                    labels.push(l);
                    continue;
                }
                let v: f64 = cell
                    .parse()
                    .map_err(|_| Error::ingest(at(), format!("{cell:?} is not a number")))?;
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::ingest(at(), format!("{v} is not a finite non-negative value")));
                }
                row.push(if opts.log1p { v.ln_1p() } else { v });
            }
            rows.push(row);
        }
        let classes = match opts.classes {
            Some(c) => c,
            None => labels.iter().max().map_or(1, |m| m + 1),
        };
        let t = CohortTable {
            gene_names,
            rows,
            labels,
            classes,
        };
        t.validate().map_err(|e| match e {
            Error::Ingest { location, message } => Error::ingest(format!("{source}: {location}"), message),
            other => other,
        })?;
        Ok(t)
    }

    pub fn load(path: &Path, opts: IngestOptions) -> Result<CohortTable> {
        let f = std::fs::File::open(path).map_err(|e| Error::ingest(path.display().to_string(), e.to_string()))?;
        CohortTable::read_csv(std::io::BufReader::new(f), &path.display().to_string(), opts)
    }

    /// Gene columns followed by `label`; values in shortest round-trip form.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{},{LABEL_COLUMN}", self.gene_names.join(","))?;
        let mut line = String::new();
        for (row, l) in self.rows.iter().zip(&self.labels) {
            line.clear();
            for v in row {
                line.push_str(&v.to_string());
                line.push(',');
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

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha12Rng::seed_from_u64(seed));
    idx
}

/// Distributes the rows among `m` holders: a seeded shuffle, then
/// contiguous chunks whose sizes differ by at most one (larger chunks
/// first). `m = 1` returns the table unchanged.
pub fn split_holders(t: &CohortTable, m: usize, seed: u64) -> Result<Vec<CohortTable>> {
    let n = t.n();
    if m == 0 || m > n {
        return Err(Error::Param(format!("cannot split {n} rows among {m} holders")));
    }
    if m == 1 {
        return Ok(vec![t.clone()]);
    }
    let perm = permutation(n, seed);
    let (base, extra) = (n / m, n % m);
    let mut out = Vec::with_capacity(m);
    let mut start = 0;
    for h in 0..m {
        let len = base + usize::from(h < extra);
        out.push(t.subset(&perm[start..start + len]));
        start += len;
    }
    Ok(out)
}

/// Seeded split into `(train, test)`; `round(test_fraction * N)` rows go to
/// the test part. Both parts keep the original row order.
pub fn train_test_split(t: &CohortTable, test_fraction: f64, seed: u64) -> Result<(CohortTable, CohortTable)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::Param(format!("test fraction {test_fraction} outside [0, 1)")));
    }
    let n = t.n();
    let n_test = (test_fraction * n as f64).round() as usize;
    let perm = permutation(n, seed);
    let mut test_idx = perm[..n_test].to_vec();
    let mut train_idx = perm[n_test..].to_vec();
    test_idx.sort_unstable();
    train_idx.sort_unstable();
    Ok((t.subset(&train_idx), t.subset(&test_idx)))
}

/// Parameters of the desk-scale Gaussian-mixture cohort.
#[derive(Clone, Copy, Debug)]
pub struct DeskCohortSpec {
    pub n: usize,
    pub genes: usize,
    pub classes: usize,
    /// Fraction of genes whose mean depends on the class.
    pub informative_fraction: f64,
    /// Standard deviation of the per-class mean offsets of informative genes.
    pub effect_size: f64,
    pub seed: u64,
}

impl DeskCohortSpec {
    pub fn new(n: usize, genes: usize, classes: usize, seed: u64) -> Self {
        DeskCohortSpec {
            n,
            genes,
            classes,
            informative_fraction: 0.4,
            effect_size: 1.0,
            seed,
        }
    }
}

/// Log-scale expression-like data: every gene has a baseline level, the
/// informative ones get a class-specific shift, and each sample adds unit
/// Gaussian noise, clipped at zero. Classes are balanced up to rounding.
pub fn desk_cohort(spec: &DeskCohortSpec) -> Result<CohortTable> {
    if spec.n == 0 || spec.genes == 0 || spec.classes == 0 {
        return Err(Error::Param("cohort dimensions must be positive".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let offset = Normal::new(0.0, spec.effect_size).map_err(|e| Error::Param(e.to_string()))?;
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let centers: Vec<Vec<f64>> = {
        let base: Vec<f64> = (0..spec.genes).map(|_| rng.random_range(3.0..8.0)).collect();
        let informative: Vec<bool> = (0..spec.genes)
            .map(|_| rng.random_bool(spec.informative_fraction.clamp(0.0, 1.0)))
            .collect();
        (0..spec.classes)
            .map(|_| {
                (0..spec.genes)
                    .map(|g| base[g] + if informative[g] { offset.sample(&mut rng) } else { 0.0 })
                    .collect()
            })
            .collect()
    };
    let mut rows = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let c = i % spec.classes;
        rows.push(
            centers[c]
                .iter()
                .map(|&mu| {
                    let v: f64 = mu + unit.sample(&mut rng);
                    // keep a short decimal form so CSV round trips are exact
                    (v.max(0.0) * 1e4).round() / 1e4
                })
                .collect(),
        );
        labels.push(c);
    }
    // interleaved labels are an artifact of generation, not a signal
    let perm = permutation(spec.n, spec.seed ^ 0x5eed);
    let t = CohortTable {
        gene_names: (0..spec.genes).map(|g| format!("gene_{g}")).collect(),
        rows,
        labels,
        classes: spec.classes,
    };
    Ok(t.subset(&perm))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "g1,g2,label\n0.5,2,0\n1.25,0,1\n3,4.75,2\n";

    fn toy() -> CohortTable {
        CohortTable::read_csv(TOY.as_bytes(), "toy", IngestOptions::default()).unwrap()
    }

    #[test]
    fn toy_round_trip() {
        let t = toy();
        assert_eq!((t.n(), t.d(), t.classes), (3, 2, 3));
        assert_eq!(t.to_csv_string(), TOY);
    }

    #[test]
    fn missing_label_column_is_named() {
        let err = CohortTable::read_csv("a,b\n1,2\n".as_bytes(), "x.csv", IngestOptions::default()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("label"), "{err}");
    }

    #[test]
    fn bad_cells_report_coordinates() {
        let err = CohortTable::read_csv("a,label\n1,0\nzz,1\n".as_bytes(), "x.csv", IngestOptions::default())
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("'a'"), "{msg}");

        let opts = IngestOptions {
            classes: Some(2),
            ..Default::default()
        };
        let err = CohortTable::read_csv("a,label\n1,0\n2,5\n".as_bytes(), "x.csv", opts).unwrap_err();
        assert!(err.to_string().contains("label 5"), "{err}");
    }

    #[test]
    fn log1p_of_zero_is_zero() {
        let opts = IngestOptions {
            log1p: true,
            ..Default::default()
        };
        let t = CohortTable::read_csv("a,label\n0,0\n1,0\n".as_bytes(), "x", opts).unwrap();
        assert_eq!(t.rows[0][0], 0.0);
        assert!((t.rows[1][0] - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn holder_split_sizes_and_coverage() {
        let t = desk_cohort(&DeskCohortSpec::new(10, 2, 2, 1)).unwrap();
        assert_eq!(split_holders(&t, 1, 5).unwrap(), vec![t.clone()]);
        let parts = split_holders(&t, 3, 5).unwrap();
        assert_eq!(parts.iter().map(CohortTable::n).collect::<Vec<_>>(), vec![4, 3, 3]);
        let mut all: Vec<String> = parts
            .iter()
            .flat_map(|p| p.rows.iter().zip(&p.labels).map(|(r, l)| format!("{r:?}{l}")))
            .collect();
        let mut orig: Vec<String> = t.rows.iter().zip(&t.labels).map(|(r, l)| format!("{r:?}{l}")).collect();
        all.sort();
        orig.sort();
        assert_eq!(all, orig);
        assert!(matches!(split_holders(&t, 11, 0), Err(Error::Param(_))));
    }

    #[test]
    fn train_test_sizes() {
        let t = desk_cohort(&DeskCohortSpec::new(100, 3, 4, 2)).unwrap();
        let (tr, te) = train_test_split(&t, 0.2, 9).unwrap();
        assert_eq!((tr.n(), te.n()), (80, 20));
    }

    #[test]
    fn desk_cohort_is_deterministic_and_nonnegative() {
        let spec = DeskCohortSpec::new(50, 6, 3, 4);
        let a = desk_cohort(&spec).unwrap();
        assert_eq!(a, desk_cohort(&spec).unwrap());
        assert!(a.rows.iter().flatten().all(|&v| v >= 0.0));
        let reread = CohortTable::read_csv(a.to_csv_string().as_bytes(), "x", IngestOptions::default()).unwrap();
        assert_eq!(reread, a);
    }
}
