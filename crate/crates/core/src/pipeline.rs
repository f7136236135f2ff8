//! End-to-end runs: dataset, pretraining, downstream training, evaluation,
//! and the temporal-versus-static comparison, with their output files.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baselines::train_baseline;
use crate::config::{DatasetSource, RunConfig};
use crate::embed::{EmbedKind, Embedder, GraphView};
use crate::error::{Error, Result};
use crate::eval::{evaluate, AucReport, ComparisonTable};
use crate::synth::generate;
use crate::tgraph::{load_dataset, DatasetBundle, NeighborIndex};
use crate::train::{final_time_embeddings, pretrain, train_downstream, Decoder, EpochRecord};

pub const METRICS_FILE: &str = "metrics.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const ENCODER_FILE: &str = "encoder.ckpt";
pub const DECODER_FILE: &str = "decoder.ckpt";
pub const REPORT_FILE: &str = "report.json";
pub const TABLE_FILE: &str = "table.tsv";

pub fn load_bundle(cfg: &RunConfig) -> Result<DatasetBundle> {
    match &cfg.dataset {
        DatasetSource::Synth => generate(&cfg.synth_config()),
        DatasetSource::Files(dir) => load_dataset(dir),
        DatasetSource::Unset => Err(Error::config("no dataset: pass --dataset DIR or --synth-defaults")),
    }
}

/// Final-time embeddings of every node under `embedder`.
pub fn embed_nodes(bundle: &DatasetBundle, embedder: &Embedder) -> Result<crate::numerics::Tensor> {
    let index = NeighborIndex::build(bundle.node_count(), bundle.edges(), embedder.config().mode)?;
    let graph = GraphView {
        index: &index,
        nodes: bundle.nodes(),
        edges: bundle.edges(),
    };
    final_time_embeddings(embedder, graph)
}

pub fn pretrain_phase(cfg: &RunConfig, bundle: &DatasetBundle) -> Result<(Embedder, Vec<EpochRecord>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut embedder = Embedder::new(cfg.embed.clone(), bundle.node_dim(), bundle.edge_dim(), &mut rng)?;
    let losses = pretrain(bundle, &mut embedder, &cfg.pretrain_config())?;
    let records = losses
        .into_iter()
        .enumerate()
        .map(|(k, loss)| EpochRecord {
            phase: "pretrain".into(),
            epoch: k + 1,
            loss,
            valid_auc: None,
        })
        .collect();
    Ok((embedder, records))
}

pub fn downstream_phase(
    cfg: &RunConfig,
    bundle: &DatasetBundle,
    embedder: &Embedder,
) -> Result<(Decoder, Vec<EpochRecord>, AucReport)> {
    let z = embed_nodes(bundle, embedder)?;
    let (decoder, records) = train_downstream(&z, bundle.nodes(), &cfg.downstream_config())?;
    let report = evaluate(&model_name(embedder.config().kind), &decoder.predict(&z)?, bundle.nodes())?;
    Ok((decoder, records, report))
}

pub fn evaluate_phase(bundle: &DatasetBundle, embedder: &Embedder, decoder: &Decoder) -> Result<AucReport> {
    let z = embed_nodes(bundle, embedder)?;
    if decoder.input_dim() != z.cols() {
        return Err(Error::Dimension {
            op: "evaluate",
            lhs: vec![z.cols()],
            rhs: vec![decoder.input_dim()],
        });
    }
    evaluate(&model_name(embedder.config().kind), &decoder.predict(&z)?, bundle.nodes())
}

pub fn model_name(kind: EmbedKind) -> String {
    format!("tgn-{kind}")
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes one JSON object per record; appends when `append` is set.
pub fn write_metrics(path: &Path, records: &[EpochRecord], append: bool) -> Result<()> {
    let mut file = fs::OpenOptions::new()
        .create(true)
        .write(true)
        .append(append)
        .truncate(!append)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    for r in records {
        let line = serde_json::to_string(r).expect("record serializes");
        writeln!(file, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn write_manifest(dir: &Path, cfg: &RunConfig) -> Result<()> {
    write(&dir.join(MANIFEST_FILE), &cfg.manifest_json())
}

pub fn write_report(dir: &Path, report: &AucReport) -> Result<()> {
    write(&dir.join(REPORT_FILE), &(report.to_json() + "\n"))?;
    write(
        &dir.join(TABLE_FILE),
        &format!("model\tvalid_auc\ttest_auc\n{}\n", report.tsv_line()),
    )
}

/// Pretraining, downstream training and evaluation of one embedding kind,
/// writing every artifact into `cfg.out`.
pub fn run_pipeline(cfg: &RunConfig) -> Result<AucReport> {
    cfg.validate()?;
    let bundle = load_bundle(cfg)?;
    run_pipeline_on(cfg, &bundle, &cfg.out)
}

fn run_pipeline_on(cfg: &RunConfig, bundle: &DatasetBundle, dir: &Path) -> Result<AucReport> {
    create_dir(dir)?;
    write_manifest(dir, cfg)?;
    let (embedder, pre) = pretrain_phase(cfg, bundle)?;
    embedder.save(&dir.join(ENCODER_FILE))?;
    let (decoder, down, report) = downstream_phase(cfg, bundle, &embedder)?;
    decoder.save(&dir.join(DECODER_FILE))?;
    write_metrics(&dir.join(METRICS_FILE), &pre, false)?;
    write_metrics(&dir.join(METRICS_FILE), &down, true)?;
    write_report(dir, &report)?;
    Ok(report)
}

/// Every embedding kind plus the configured baselines on one dataset.
///
/// Each model gets a subdirectory of `cfg.out`; the combined table goes to
/// `cfg.out/table.tsv`.
pub fn run_compare(cfg: &RunConfig) -> Result<ComparisonTable> {
    cfg.validate()?;
    let bundle = load_bundle(cfg)?;
    create_dir(&cfg.out)?;
    write_manifest(&cfg.out, cfg)?;
    let mut table = ComparisonTable::default();
    for kind in EmbedKind::ALL {
        let mut sub = cfg.clone();
        sub.embed.kind = kind;
        sub.out = cfg.out.join(model_name(kind));
        table.temporal.push(run_pipeline_on(&sub, &bundle, &sub.out)?);
    }
    for &kind in &cfg.baselines {
        let dir = cfg.out.join(kind.as_str());
        create_dir(&dir)?;
        let run = train_baseline(kind, &bundle, &cfg.downstream_config())?;
        write_metrics(&dir.join(METRICS_FILE), &run.trace, false)?;
        write_report(&dir, &run.report)?;
        table.baselines.push(run.report);
    }
    write(&cfg.out.join(TABLE_FILE), &table.to_tsv())?;
    Ok(table)
}
