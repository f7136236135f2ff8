//! Canonical two-file text format: `nodes.tsv` and `edges.tsv`.
//!
//! Node and edge features are written with nine significant digits and read
//! back at single precision, so any bundle whose features are `f32` values
//! survives a save/load cycle bit for bit. Timestamps use the shortest exact
//! decimal form of the `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::dataset::{check_label_split, DatasetBundle, Label, Metadata, NodeTable, Split, TemporalEdge};
use crate::error::{Error, Result};

pub const NODES_FILE: &str = "nodes.tsv";
pub const EDGES_FILE: &str = "edges.tsv";

/// C-style `%.*g` formatting.
pub fn format_g(x: f64, precision: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let precision = precision.max(1);
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", precision - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= precision as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (precision as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn push_g9(out: &mut String, values: &[f64]) {
    for v in values {
        out.push('\t');
        out.push_str(&format_g(*v, 9));
    }
}

pub fn save_dataset(bundle: &DatasetBundle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let nodes = bundle.nodes();

    let mut out = String::new();
    writeln!(out, "#nodes {} dim {}", nodes.len(), nodes.dim()).unwrap();
    if !bundle.meta().name.is_empty() {
        writeln!(out, "#meta name {}", bundle.meta().name).unwrap();
    }
    if let Some(seed) = bundle.meta().seed {
        writeln!(out, "#meta seed {seed}").unwrap();
    }
    for i in 0..nodes.len() {
        write!(out, "{i}\t{}\t{}", nodes.label(i).code(), nodes.split(i).as_str()).unwrap();
        push_g9(&mut out, nodes.feature(i));
        out.push('\n');
    }
    let path = dir.join(NODES_FILE);
    fs::write(&path, out).map_err(|e| Error::io(&path, e))?;

    let mut out = String::new();
    writeln!(out, "#edges {} dim {}", bundle.edges().len(), bundle.edge_dim()).unwrap();
    for e in bundle.edges() {
        write!(out, "{}\t{}\t{:?}", e.src, e.dst, e.t).unwrap();
        push_g9(&mut out, &e.feat);
        out.push('\n');
    }
    let path = dir.join(EDGES_FILE);
    fs::write(&path, out).map_err(|e| Error::io(&path, e))?;
    Ok(())
}

struct LineReader {
    path: PathBuf,
}

impl LineReader {
    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            msg: msg.into(),
        }
    }

    fn header(&self, text: &str, tag: &str) -> Result<(usize, usize)> {
        let first = text.lines().next().ok_or_else(|| self.err(1, "empty file"))?;
        let parts: Vec<&str> = first.split_whitespace().collect();
        match parts.as_slice() {
            [t, count, "dim", dim] if *t == tag => {
                let count = count
                    .parse()
                    .map_err(|_| self.err(1, format!("bad count `{count}` in header")))?;
                let dim = dim.parse().map_err(|_| self.err(1, format!("bad dim `{dim}` in header")))?;
                Ok((count, dim))
            }
            _ => Err(self.err(1, format!("expected header `{tag} <count> dim <d>`, found `{first}`"))),
        }
    }

    fn float(&self, line: usize, tok: &str, what: &str) -> Result<f64> {
        tok.parse::<f64>()
            .map_err(|_| self.err(line, format!("bad {what} `{tok}`")))
    }

    fn single(&self, line: usize, tok: &str, what: &str) -> Result<f64> {
        tok.parse::<f32>()
            .map(f64::from)
            .map_err(|_| self.err(line, format!("bad {what} `{tok}`")))
    }
}

pub fn load_dataset(dir: &Path) -> Result<DatasetBundle> {
    let nodes_path = dir.join(NODES_FILE);
    let text = fs::read_to_string(&nodes_path).map_err(|e| Error::io(&nodes_path, e))?;
    let rd = LineReader { path: nodes_path };
    let (n, dim) = rd.header(&text, "#nodes")?;

    let mut meta = Metadata::default();
    let mut features = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    let mut splits = Vec::with_capacity(n);
    for (ln, line) in text.lines().enumerate().skip(1) {
        let ln = ln + 1;
        if let Some(rest) = line.strip_prefix("#meta ") {
            match rest.split_once(' ') {
                Some(("name", v)) => meta.name = v.to_string(),
                Some(("seed", v)) => {
                    meta.seed = Some(v.parse().map_err(|_| rd.err(ln, format!("bad seed `{v}`")))?)
                }
                _ => return Err(rd.err(ln, format!("unknown metadata line `{line}`"))),
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 + dim {
            return Err(rd.err(
                ln,
                format!("node record has {} fields, expected {} (id, label, split, {dim} features)", toks.len(), 3 + dim),
            ));
        }
        let id: usize = toks[0].parse().map_err(|_| rd.err(ln, format!("bad node id `{}`", toks[0])))?;
        if id != labels.len() {
            return Err(rd.err(ln, format!("node id {id} out of order, expected {}", labels.len())));
        }
        let label = toks[1]
            .parse::<i64>()
            .ok()
            .and_then(Label::from_code)
            .ok_or_else(|| rd.err(ln, format!("label must be -1, 0 or 1, found `{}`", toks[1])))?;
        let split = Split::parse(toks[2])
            .ok_or_else(|| rd.err(ln, format!("split must be train|valid|test|bg, found `{}`", toks[2])))?;
        check_label_split(label, split).map_err(|m| rd.err(ln, m))?;
        for tok in &toks[3..] {
            features.push(rd.single(ln, tok, "feature")?);
        }
        labels.push(label);
        splits.push(split);
    }
    if labels.len() != n {
        return Err(rd.err(text.lines().count(), format!("header declares {n} nodes, found {}", labels.len())));
    }
    let nodes = NodeTable::new(dim, features, labels, splits)?;

    let edges_path = dir.join(EDGES_FILE);
    let text = fs::read_to_string(&edges_path).map_err(|e| Error::io(&edges_path, e))?;
    let rd = LineReader { path: edges_path };
    let (m, edge_dim) = rd.header(&text, "#edges")?;
    let mut edges = Vec::with_capacity(m);
    let mut prev = f64::NEG_INFINITY;
    for (ln, line) in text.lines().enumerate().skip(1) {
        let ln = ln + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record = edges.len();
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 + edge_dim {
            return Err(rd.err(
                ln,
                format!(
                    "edge record {record}: expected {edge_dim} edge features, found {}",
                    toks.len().saturating_sub(3)
                ),
            ));
        }
        let node = |tok: &str| -> Result<usize> {
            let id: usize = tok
                .parse()
                .map_err(|_| rd.err(ln, format!("edge record {record}: bad node id `{tok}`")))?;
            if id >= n {
                return Err(rd.err(ln, format!("edge record {record}: node {id} outside 0..{n}")));
            }
            Ok(id)
        };
        let src = node(toks[0])?;
        let dst = node(toks[1])?;
        let t = rd.float(ln, toks[2], "timestamp")?;
        if !t.is_finite() {
            return Err(rd.err(ln, format!("edge record {record}: non-finite timestamp")));
        }
        if t < prev {
            return Err(rd.err(ln, format!("edge record {record}: timestamp {t} before previous {prev}")));
        }
        prev = t;
        let feat = toks[3..]
            .iter()
            .map(|tok| rd.single(ln, tok, "edge feature"))
            .collect::<Result<Vec<_>>>()?;
        edges.push(TemporalEdge { src, dst, t, feat });
    }
    if edges.len() != m {
        return Err(rd.err(text.lines().count(), format!("header declares {m} edges, found {}", edges.len())));
    }
    DatasetBundle::new(nodes, edges, edge_dim, meta)
}
