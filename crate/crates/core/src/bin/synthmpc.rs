use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use synthmpc::generator::{calibrate, generate};
use synthmpc::pipeline::cohort::{desk_cohort, DeskCohortSpec};
use synthmpc::pipeline::run::{
    load_share_file, save_share_file, serve_party, share_holder, DEFAULT_DELTA, DEFAULT_DETPR_K,
};
use synthmpc::pipeline::{evaluate, run_end_to_end, CohortTable, Config, IngestOptions, RunConfig};
use synthmpc::protocols::{ProtocolParams, ReleasedMarginals};
use synthmpc::{Error, FixedPointCodec, Party, PartyId, Result};

#[derive(Parser)]
#[command(name = "synthmpc", version, about = "Differentially private synthetic cohorts via three-party computation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Every configuration key, overridable on the command line.
#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<String>,
    #[arg(long)]
    holders: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    test_fraction: Option<String>,
    #[arg(long)]
    detpr_k: Option<String>,
    #[arg(long)]
    noise_bin_means: Option<String>,
    #[arg(long)]
    synthetic_rows: Option<String>,
    #[arg(long)]
    classes: Option<String>,
    #[arg(long)]
    log1p: Option<String>,
    #[arg(long)]
    timeout_secs: Option<String>,
    #[arg(long)]
    party1: Option<String>,
    #[arg(long)]
    party2: Option<String>,
    #[arg(long)]
    party3: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        let flags = [
            ("epsilon", &self.epsilon),
            ("delta", &self.delta),
            ("holders", &self.holders),
            ("seed", &self.seed),
            ("test_fraction", &self.test_fraction),
            ("detpr_k", &self.detpr_k),
            ("noise_bin_means", &self.noise_bin_means),
            ("synthetic_rows", &self.synthetic_rows),
            ("classes", &self.classes),
            ("log1p", &self.log1p),
            ("timeout_secs", &self.timeout_secs),
            ("party1", &self.party1),
            ("party2", &self.party2),
            ("party3", &self.party3),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, v.clone())?;
            }
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Secret-share a holder's cohort CSV into one file per server.
    Share {
        #[arg(long)]
        input: PathBuf,
        /// Directory receiving `<prefix>.s1.sgs`, `.s2.sgs` and `.s3.sgs`.
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value = "holder")]
        prefix: String,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Run one server over TCP.
    Server {
        /// Server number, 1 to 3.
        #[arg(long)]
        party: u8,
        /// This server's share files, one per holder, in holder order.
        #[arg(long, required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        /// Where the release server writes the released marginals.
        #[arg(long, default_value = "released.json")]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Split, share, run all three servers in-process, generate and evaluate.
    RunLocal {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Sample a synthetic cohort from released marginals.
    Generate {
        #[arg(long)]
        release: PathBuf,
        /// Number of rows; defaults to the cohort size in the release.
        #[arg(long)]
        rows: Option<usize>,
        /// CSV whose header supplies gene names.
        #[arg(long)]
        gene_names_from: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Score a synthetic cohort against real training and test data.
    Evaluate {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        synthetic: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Print the Gaussian noise scale for a privacy budget.
    Calibrate {
        #[arg(long)]
        genes: usize,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Write a synthetic Gaussian-mixture cohort for testing.
    MakeCohort {
        #[arg(long, default_value_t = 800)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        genes: usize,
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn ingest_options(cfg: &Config) -> Result<IngestOptions> {
    Ok(IngestOptions {
        log1p: cfg.get_or("log1p", false)?,
        classes: cfg.get("classes")?,
    })
}

fn endpoints(cfg: &Config) -> Result<[SocketAddr; 3]> {
    let mut out = Vec::with_capacity(3);
    for (i, key) in ["party1", "party2", "party3"].into_iter().enumerate() {
        let default = format!("127.0.0.1:{}", 47101 + i);
        let raw = cfg.raw(key).map_or(default, str::to_string);
        out.push(
            raw.parse()
                .map_err(|e| Error::Param(format!("`{key}` = {raw:?}: {e}")))?,
        );
    }
    Ok(out.try_into().expect("three endpoints"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Share { input, out_dir, prefix, cfg } => {
            let cfg = cfg.resolve()?;
            let table = CohortTable::load(&input, ingest_options(&cfg)?)?;
            let mut rng = match cfg.get::<u64>("seed")? {
                Some(s) => ChaCha12Rng::seed_from_u64(s),
                None => ChaCha12Rng::from_os_rng(),
            };
            std::fs::create_dir_all(&out_dir)?;
            let files = share_holder(&table, FixedPointCodec::default(), &mut rng)?;
            for (i, f) in files.iter().enumerate() {
                let path = out_dir.join(format!("{prefix}.s{}.sgs", i + 1));
                save_share_file(&path, f)?;
                info!("wrote {}", path.display());
            }
        }
        Command::Server { party, inputs, out, cfg } => {
            let cfg = cfg.resolve()?;
            let me = PartyId::new(party).ok_or_else(|| Error::Param(format!("party must be 1, 2 or 3, got {party}")))?;
            let files = inputs.iter().map(|p| load_share_file(p)).collect::<Result<Vec<_>>>()?;
            let genes = files[0].cols.saturating_sub(1);
            let classes: usize = cfg
                .get("classes")?
                .ok_or_else(|| Error::Param("`classes` is required for the server".into()))?;
            let dp = calibrate(cfg.get_or("epsilon", 1.0)?, cfg.get_or("delta", DEFAULT_DELTA)?, genes)?;
            let params = ProtocolParams {
                classes,
                sigma: dp.sigma,
                noise_bin_means: cfg.get_or("noise_bin_means", true)?,
                dp_mode: dp.sigma > 0.0,
            };
            let seed = match cfg.get::<u64>("seed")? {
                Some(s) => Party::derive_seed_material(s, me),
                None => rand::rng().random(),
            };
            let timeout = Duration::from_secs(cfg.get_or("timeout_secs", 60)?);
            let outcome = serve_party(me, endpoints(&cfg)?, &files, &params, seed, timeout)?;
            info!("{me}: {} rounds, {} bytes sent", outcome.stats.rounds, outcome.stats.bytes_sent());
            if let Some(release) = outcome.release {
                write_text(&out, &release.to_json())?;
                info!("wrote {}", out.display());
            }
        }
        Command::RunLocal { input, out_dir, cfg } => {
            let cfg = cfg.resolve()?;
            let cohort = CohortTable::load(&input, ingest_options(&cfg)?)?;
            let run_cfg = RunConfig::from_config(&cfg)?;
            let out = run_end_to_end(&cohort, &run_cfg)?;
            std::fs::create_dir_all(&out_dir)?;
            out.synthetic.save_csv(&out_dir.join("synthetic.csv"))?;
            write_text(&out_dir.join("released.json"), &out.release.to_json())?;
            write_text(&out_dir.join("report.json"), &out.report.to_json())?;
            info!("protocol wall-clock {:.3} s", out.servers.elapsed.as_secs_f64());
            println!("{}", out.report.to_json());
        }
        Command::Generate { release, rows, gene_names_from, out, cfg } => {
            let cfg = cfg.resolve()?;
            let text = std::fs::read_to_string(&release)
                .map_err(|e| Error::ingest(release.display().to_string(), e.to_string()))?;
            let rel = ReleasedMarginals::from_json(&text)?;
            let names = match gene_names_from {
                Some(p) => CohortTable::load(&p, IngestOptions::default())?.gene_names,
                None => (1..=rel.genes).map(|g| format!("gene{g}")).collect(),
            };
            let syn = generate(&rel, &names, rows.unwrap_or(rel.n), cfg.get_or("seed", 0)?)?;
            syn.save_csv(&out)?;
        }
        Command::Evaluate { train, test, synthetic, cfg } => {
            let cfg = cfg.resolve()?;
            let opts = ingest_options(&cfg)?;
            let train = CohortTable::load(&train, opts)?;
            let test = CohortTable::load(&test, opts)?;
            let syn = CohortTable::load(&synthetic, opts)?;
            let classes = train.classes.max(test.classes).max(syn.classes);
            let syn = CohortTable::new(syn.gene_names, syn.rows, syn.labels, classes)?;
            let s = evaluate(&train, &test, &syn, cfg.get_or("detpr_k", DEFAULT_DETPR_K)?)?;
            println!("{}", serde_json::to_string_pretty(&s).expect("serializable"));
        }
        Command::Calibrate { genes, cfg } => {
            let cfg = cfg.resolve()?;
            let dp = calibrate(cfg.get_or("epsilon", 1.0)?, cfg.get_or("delta", DEFAULT_DELTA)?, genes)?;
            println!("{}", serde_json::to_string_pretty(&dp).expect("serializable"));
        }
        Command::MakeCohort { n, genes, classes, seed, out } => {
            desk_cohort(&DeskCohortSpec::new(n, genes, classes, seed))?.save(&out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
