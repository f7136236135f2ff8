use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tempograd::config::{DatasetSource, RunConfig};
use tempograd::embed::{EmbedKind, Embedder};
use tempograd::pipeline::{self, DECODER_FILE, ENCODER_FILE, METRICS_FILE};
use tempograd::tgraph::save_dataset;
use tempograd::train::Decoder;
use tempograd::Error;

/// Temporal graph embeddings for fraud detection.
#[derive(Parser, Debug)]
#[command(name = "tempograd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset into --out.
    Synth,
    /// Pretrain an encoder by link prediction; writes encoder.ckpt.
    Pretrain,
    /// Train a decoder on the encoder in --out; writes decoder.ckpt.
    Train,
    /// Evaluate the checkpoints in --out.
    Eval,
    /// Pretrain, train and evaluate one embedding kind.
    Pipeline,
    /// Run every embedding kind and the static baselines.
    Compare,
}

#[derive(Args, Debug)]
struct Opts {
    /// `key = value` config file, or a manifest.json from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    kind: Option<EmbedKind>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Directory holding nodes.tsv and edges.tsv.
    #[arg(long, global = true, conflicts_with = "synth_defaults")]
    dataset: Option<PathBuf>,
    /// Use the built-in synthetic generator.
    #[arg(long, global = true)]
    synth_defaults: bool,
}

fn resolve(opts: &Opts) -> tempograd::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &opts.config {
        cfg.apply_file(path)?;
    }
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(kind) = opts.kind {
        cfg.embed.kind = kind;
    }
    if let Some(out) = &opts.out {
        cfg.out = out.clone();
    }
    if let Some(dir) = &opts.dataset {
        cfg.dataset = DatasetSource::Files(dir.clone());
    }
    if opts.synth_defaults {
        cfg.dataset = DatasetSource::Synth;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> tempograd::Result<()> {
    let mut cfg = resolve(&cli.opts)?;
    let out = cfg.out.clone();
    match cli.command {
        Command::Synth => {
            cfg.dataset = DatasetSource::Synth;
            cfg.validate()?;
            let bundle = pipeline::load_bundle(&cfg)?;
            pipeline::create_dir(&out)?;
            save_dataset(&bundle, &out)?;
            pipeline::write_manifest(&out, &cfg)?;
            println!(
                "wrote {} nodes and {} edges to {}",
                bundle.node_count(),
                bundle.edges().len(),
                out.display()
            );
        }
        Command::Pretrain => {
            cfg.validate()?;
            let bundle = pipeline::load_bundle(&cfg)?;
            pipeline::create_dir(&out)?;
            pipeline::write_manifest(&out, &cfg)?;
            let (embedder, records) = pipeline::pretrain_phase(&cfg, &bundle)?;
            embedder.save(&out.join(ENCODER_FILE))?;
            pipeline::write_metrics(&out.join(METRICS_FILE), &records, false)?;
            if let Some(last) = records.last() {
                println!("pretrain loss {:.4} after {} epochs", last.loss, last.epoch);
            }
        }
        Command::Train => {
            cfg.validate()?;
            let bundle = pipeline::load_bundle(&cfg)?;
            let embedder = Embedder::load(&out.join(ENCODER_FILE))?;
            let (decoder, records, report) = pipeline::downstream_phase(&cfg, &bundle, &embedder)?;
            decoder.save(&out.join(DECODER_FILE))?;
            pipeline::write_metrics(&out.join(METRICS_FILE), &records, true)?;
            pipeline::write_report(&out, &report)?;
            println!("{}", report.tsv_line());
        }
        Command::Eval => {
            cfg.validate()?;
            let embedder = Embedder::load(&out.join(ENCODER_FILE))?;
            let decoder = Decoder::load(&out.join(DECODER_FILE))?;
            let bundle = pipeline::load_bundle(&cfg)?;
            let report = pipeline::evaluate_phase(&bundle, &embedder, &decoder)?;
            pipeline::write_report(&out, &report)?;
            println!("{}", report.tsv_line());
        }
        Command::Pipeline => {
            let report = pipeline::run_pipeline(&cfg)?;
            println!("{}", report.tsv_line());
        }
        Command::Compare => {
            let table = pipeline::run_compare(&cfg)?;
            print!("{}", table.to_tsv());
        }
    }
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 1,
        Error::Numeric(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
