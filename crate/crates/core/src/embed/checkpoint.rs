//! Binary parameter checkpoints.
//!
//! ```text
//! tempograd-ckpt v1
//! config key=value key=value ...
//! tensors <count>
//! <name> <d0>x<d1>... <nbytes>
//! <nbytes of little-endian f64>
//! ...
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{ParamSet, Tensor};

pub const CHECKPOINT_MAGIC: &str = "tempograd-ckpt v1";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: Vec<(String, String)>,
    pub params: ParamSet,
}

impl Checkpoint {
    pub fn config_value(&self, key: &str) -> Option<&str> {
        self.config
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC.as_bytes());
        out.push(b'\n');
        out.extend_from_slice(b"config");
        for (k, v) in &self.config {
            out.extend_from_slice(format!(" {k}={v}").as_bytes());
        }
        out.push(b'\n');
        out.extend_from_slice(format!("tensors {}\n", self.params.len()).as_bytes());
        for (name, t) in self.params.iter() {
            let shape: Vec<String> = t.shape().iter().map(usize::to_string).collect();
            out.extend_from_slice(format!("{name} {} {}\n", shape.join("x"), t.numel() * 8).as_bytes());
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
            out.push(b'\n');
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0, line: 0, path };
        let magic = cur.line()?;
        if magic != CHECKPOINT_MAGIC {
            return Err(cur.err(format!("expected `{CHECKPOINT_MAGIC}`, found `{magic}`")));
        }
        let cfg_line = cur.line()?;
        let rest = cfg_line
            .strip_prefix("config")
            .ok_or_else(|| cur.err("missing config line"))?;
        let mut config = Vec::new();
        for tok in rest.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| cur.err(format!("bad config entry `{tok}`")))?;
            config.push((k.to_string(), v.to_string()));
        }
        let count_line = cur.line()?;
        let count: usize = count_line
            .strip_prefix("tensors ")
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| cur.err(format!("bad tensor count line `{count_line}`")))?;
        let mut params = ParamSet::new();
        for _ in 0..count {
            let header = cur.line()?;
            let parts: Vec<&str> = header.split(' ').collect();
            let [name, shape, nbytes] = parts.as_slice() else {
                return Err(cur.err(format!("bad tensor record `{header}`")));
            };
            let shape: Vec<usize> = shape
                .split('x')
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| cur.err(format!("bad shape in `{header}`")))?;
            let nbytes: usize = nbytes.parse().map_err(|_| cur.err(format!("bad byte count in `{header}`")))?;
            let numel: usize = shape.iter().product();
            if nbytes != numel * 8 {
                return Err(cur.err(format!("tensor `{name}` has {nbytes} bytes for {numel} values")));
            }
            let raw = cur.take(nbytes)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            if cur.take(1)? != b"\n" {
                return Err(cur.err(format!("missing terminator after tensor `{name}`")));
            }
            params.insert(*name, Tensor::new(shape, data)?)?;
        }
        if cur.pos != bytes.len() {
            return Err(cur.err("trailing bytes after last tensor"));
        }
        Ok(Self { config, params })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            msg: msg.into(),
        }
    }

    fn line(&mut self) -> Result<&'a str> {
        self.line += 1;
        let bytes: &'a [u8] = self.bytes;
        let rest = &bytes[self.pos..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| self.err("unexpected end of file"))?;
        self.pos += end + 1;
        std::str::from_utf8(&rest[..end]).map_err(|_| self.err("header line is not UTF-8"))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.err("unexpected end of tensor data"));
        }
        let bytes: &'a [u8] = self.bytes;
        let out = &bytes[self.pos..self.pos + n];
        self.pos += n;
        self.line += out.iter().filter(|&&b| b == b'\n').count();
        Ok(out)
    }
}
