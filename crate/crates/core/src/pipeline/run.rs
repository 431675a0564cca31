//! Orchestration: holder submissions, the three-server protocol (in-process
//! or over TCP), generation at the release server, and evaluation.

use std::net::SocketAddr;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::cohort::{split_holders, train_test_split, CohortTable};
use super::config::Config;
use super::metrics::{dcr, detpr, tstr, wasserstein_mean, LogRegConfig};
use crate::engine::{run_three_party_local, CommStats, HarnessConfig, Party};
use crate::error::{Error, Result};
use crate::generator::{calibrate, generate, DPParams, SyntheticDataset};
use crate::protocols::{encode_holder_table, ProtocolParams, ReleasedMarginals, RELEASE_PARTY};
use crate::ring::FixedPointCodec;
use crate::sharing::{share_table, ShareFile};
use crate::transport::{PartyId, TcpTransport, DEFAULT_ROUND_TIMEOUT};

/// Default number of top differentially expressed genes compared.
pub const DEFAULT_DETPR_K: usize = 50;
/// Default failure probability of the Gaussian mechanism.
pub const DEFAULT_DELTA: f64 = 1e-5;

/// Settings of an end-to-end run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// `f64::INFINITY` disables noise.
    pub epsilon: f64,
    pub delta: f64,
    pub holders: usize,
    pub seed: u64,
    pub test_fraction: f64,
    /// Capped at the gene count.
    pub detpr_k: usize,
    pub noise_bin_means: bool,
    /// Defaults to the training-set size.
    pub synthetic_rows: Option<usize>,
    pub round_timeout: Duration,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            epsilon: 1.0,
            delta: DEFAULT_DELTA,
            holders: 3,
            seed: 0,
            test_fraction: 0.2,
            detpr_k: DEFAULT_DETPR_K,
            noise_bin_means: true,
            synthetic_rows: None,
            round_timeout: DEFAULT_ROUND_TIMEOUT,
        }
    }
}

impl RunConfig {
    pub fn from_config(c: &Config) -> Result<RunConfig> {
        let d = RunConfig::default();
        Ok(RunConfig {
            epsilon: c.get_or("epsilon", d.epsilon)?,
            delta: c.get_or("delta", d.delta)?,
            holders: c.get_or("holders", d.holders)?,
            seed: c.get_or("seed", d.seed)?,
            test_fraction: c.get_or("test_fraction", d.test_fraction)?,
            detpr_k: c.get_or("detpr_k", d.detpr_k)?,
            noise_bin_means: c.get_or("noise_bin_means", d.noise_bin_means)?,
            synthetic_rows: c.get("synthetic_rows")?,
            round_timeout: c
                .get::<u64>("timeout_secs")?
                .map_or(d.round_timeout, Duration::from_secs),
        })
    }
}

/// Independent seed for one named stage of a run.
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(b"synthmpc-stage");
    h.update(seed.to_le_bytes());
    h.update(stage.as_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

/// One holder's submission: three additive share files, one per server.
pub fn share_holder<R: rand::Rng + ?Sized>(
    table: &CohortTable,
    codec: FixedPointCodec,
    rng: &mut R,
) -> Result<[ShareFile; 3]> {
    let values = encode_holder_table(&table.rows, &table.labels, codec)?;
    share_table(&values, table.n(), table.d() + 1, codec.frac_bits(), rng)
}

/// Share files grouped by receiving server, each list in holder order.
/// Holder `h` draws its masks from its own stream of `seed`.
pub fn submit_holders(holders: &[CohortTable], codec: FixedPointCodec, seed: u64) -> Result<[Vec<ShareFile>; 3]> {
    let mut out: [Vec<ShareFile>; 3] = Default::default();
    for (h, t) in holders.iter().enumerate() {
        let mut rng = ChaCha12Rng::seed_from_u64(stage_seed(seed, &format!("holder-{h}")));
        for (o, f) in out.iter_mut().zip(share_holder(t, codec, &mut rng)?) {
            o.push(f);
        }
    }
    Ok(out)
}

/// Result of the server protocol.
#[derive(Clone, Debug)]
pub struct ServerRun {
    pub release: ReleasedMarginals,
    pub stats: [CommStats; 3],
    pub transcripts: [[u8; 32]; 3],
    pub elapsed: Duration,
}

/// Runs the three servers in-process on the given submissions.
pub fn run_servers_local(
    submissions: &[Vec<ShareFile>; 3],
    params: &ProtocolParams,
    session_seed: u64,
    round_timeout: Duration,
) -> Result<ServerRun> {
    let cfg = HarnessConfig {
        session_seed,
        round_timeout,
        ..Default::default()
    };
    let start = Instant::now();
    let outs = run_three_party_local(cfg, |p| p.run_synthesis_protocol(&submissions[p.id().index()], params))?;
    let elapsed = start.elapsed();
    let [a, b, c] = outs;
    let release = a
        .output
        .clone()
        .ok_or_else(|| Error::Contract("release server produced no output".into()))?;
    Ok(ServerRun {
        release,
        stats: [a.stats, b.stats, c.stats],
        transcripts: [a.transcript, b.transcript, c.transcript],
        elapsed,
    })
}

/// Result of one server process.
#[derive(Clone, Debug)]
pub struct ServeOutcome {
    /// Present only at the release server.
    pub release: Option<ReleasedMarginals>,
    pub stats: CommStats,
    pub transcript: [u8; 32],
}

/// Runs one server over TCP. `seed_material` must be secret to this server
/// in a real deployment.
pub fn serve_party(
    me: PartyId,
    endpoints: [SocketAddr; 3],
    inputs: &[ShareFile],
    params: &ProtocolParams,
    seed_material: [u8; 32],
    round_timeout: Duration,
) -> Result<ServeOutcome> {
    let transport = TcpTransport::connect(me, endpoints, round_timeout)?;
    let mut party = Party::setup(Box::new(transport), seed_material, FixedPointCodec::default())?;
    let release = party.run_synthesis_protocol(inputs, params)?;
    if (me == RELEASE_PARTY) != release.is_some() {
        return Err(Error::Contract("release delivered to the wrong server".into()));
    }
    Ok(ServeOutcome {
        release,
        stats: party.stats(),
        transcript: party.transcript_digest(),
    })
}

/// Utility, fidelity and privacy scores of one synthetic dataset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub tstr_accuracy: f64,
    pub wasserstein_mean: f64,
    pub detpr: f64,
    pub dcr_mean: f64,
}

/// Scores `syn` against the real training rows (fidelity, DE recovery,
/// distance to closest record) and the held-out rows (TSTR).
pub fn evaluate(train: &CohortTable, test: &CohortTable, syn: &CohortTable, detpr_k: usize) -> Result<Scores> {
    Ok(Scores {
        tstr_accuracy: tstr(syn, test, LogRegConfig::default())?,
        wasserstein_mean: wasserstein_mean(train, syn)?,
        detpr: detpr(train, syn, detpr_k.min(train.d()))?,
        dcr_mean: dcr(train, syn)?,
    })
}

/// Evaluation report. Key order is fixed by field order; an infinite
/// epsilon is written as `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tstr_accuracy: f64,
    pub wasserstein_mean: f64,
    pub detpr: f64,
    pub detpr_k: usize,
    pub dcr_mean: f64,
    pub epsilon: Option<f64>,
    pub delta: f64,
    pub sigma: f64,
    pub d: usize,
    pub classes: usize,
    pub n: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub n_synthetic: usize,
    pub holders: usize,
    pub seed: u64,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Everything produced by [`run_end_to_end`].
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub synthetic: SyntheticDataset,
    pub report: MetricsReport,
    pub release: ReleasedMarginals,
    pub dp: DPParams,
    pub train: CohortTable,
    pub test: CohortTable,
    pub servers: ServerRun,
}

impl RunOutcome {
    pub fn synthetic_table(&self) -> Result<CohortTable> {
        synthetic_as_table(&self.synthetic, self.train.classes)
    }
}

pub fn synthetic_as_table(syn: &SyntheticDataset, classes: usize) -> Result<CohortTable> {
    CohortTable::new(syn.gene_names.clone(), syn.rows.clone(), syn.labels.clone(), classes)
}

/// Split, submit from `holders` data holders, run the servers in-process,
/// generate at the release server and evaluate.
pub fn run_end_to_end(cohort: &CohortTable, cfg: &RunConfig) -> Result<RunOutcome> {
    let (train, test) =
        train_test_split(cohort, cfg.test_fraction, stage_seed(cfg.seed, "split")).map_err(|e| e.in_phase("split"))?;
    let dp = calibrate(cfg.epsilon, cfg.delta, train.d())?;
    let parts = split_holders(&train, cfg.holders, stage_seed(cfg.seed, "holders")).map_err(|e| e.in_phase("split"))?;
    let subs = submit_holders(&parts, FixedPointCodec::default(), stage_seed(cfg.seed, "shares"))
        .map_err(|e| e.in_phase("share"))?;
    let params = ProtocolParams {
        classes: train.classes,
        sigma: dp.sigma,
        noise_bin_means: cfg.noise_bin_means,
        dp_mode: dp.sigma > 0.0,
    };
    let servers = run_servers_local(&subs, &params, stage_seed(cfg.seed, "session"), cfg.round_timeout)?;
    let release = servers.release.clone();
    let count = cfg.synthetic_rows.unwrap_or(train.n());
    let synthetic = generate(&release, &train.gene_names, count, stage_seed(cfg.seed, "sample"))
        .map_err(|e| e.in_phase("generate"))?;
    let syn_table = synthetic_as_table(&synthetic, train.classes)?;
    let scores = evaluate(&train, &test, &syn_table, cfg.detpr_k).map_err(|e| e.in_phase("evaluate"))?;
    let report = MetricsReport {
        tstr_accuracy: scores.tstr_accuracy,
        wasserstein_mean: scores.wasserstein_mean,
        detpr: scores.detpr,
        detpr_k: cfg.detpr_k.min(train.d()),
        dcr_mean: scores.dcr_mean,
        epsilon: cfg.epsilon.is_finite().then_some(cfg.epsilon),
        delta: cfg.delta,
        sigma: dp.sigma,
        d: train.d(),
        classes: train.classes,
        n: cohort.n(),
        n_train: train.n(),
        n_test: test.n(),
        n_synthetic: count,
        holders: cfg.holders,
        seed: cfg.seed,
    };
    Ok(RunOutcome {
        synthetic,
        report,
        release,
        dp,
        train,
        test,
        servers,
    })
}

/// Reads a share file from disk.
pub fn load_share_file(path: &Path) -> Result<ShareFile> {
    let f = std::fs::File::open(path).map_err(|e| Error::ingest(path.display().to_string(), e.to_string()))?;
    ShareFile::read_from(&mut std::io::BufReader::new(f))
}

/// Writes a share file to disk.
pub fn save_share_file(path: &Path, file: &ShareFile) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_to(&mut w)?;
    std::io::Write::flush(&mut w)?;
    Ok(())
}
