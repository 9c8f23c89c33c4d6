//! Versioned model container.
//!
//! Layout: magic "CFM1"; u32 LE length + canonical config JSON; u32 LE
//! parameter count; then per parameter, in sorted path order: u32 LE path
//! length + utf8 path, u32 LE ndim, ndim u32 LE extents, and the f64 LE
//! values. Load rebuilds the parameter set and verifies it against the
//! config's expected listing, so a load round-trips bit-exactly or fails.

use std::fs;
use std::io::Write;
use std::path::Path;

use cofusion_tensor::Tensor;

use crate::config::ModelConfig;
use crate::error::{ModelError, Result};
use crate::params::{parameter_specs, ModelParams};

const MAGIC: [u8; 4] = *b"CFM1";

pub fn save_model(path: &Path, config: &ModelConfig, params: &ModelParams) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(&MAGIC);
    let cfg_json = config.to_canonical_json();
    buf.extend_from_slice(&(cfg_json.len() as u32).to_le_bytes());
    buf.extend_from_slice(cfg_json.as_bytes());
    buf.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for (p, t) in params.iter() {
        buf.extend_from_slice(&(p.len() as u32).to_le_bytes());
        buf.extend_from_slice(p.as_bytes());
        buf.extend_from_slice(&(t.ndim() as u32).to_le_bytes());
        for &d in t.shape() {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in t.data().iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(ModelError::Format(format!(
                "truncated container: wanted {n} bytes at offset {}, have {}",
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn load_model(path: &Path) -> Result<(ModelConfig, ModelParams)> {
    let bytes = fs::read(path)?;
    let mut r = Reader {
        buf: &bytes,
        pos: 0,
    };
    if r.take(4)? != MAGIC {
        return Err(ModelError::Format("bad magic, expected \"CFM1\"".into()));
    }
    let cfg_len = r.u32()? as usize;
    let cfg_json = std::str::from_utf8(r.take(cfg_len)?)
        .map_err(|e| ModelError::Format(format!("config json not utf8: {e}")))?;
    let config = ModelConfig::from_json(cfg_json)?;

    let count = r.u32()? as usize;
    let mut params = ModelParams::empty();
    let mut prev_path: Option<String> = None;
    for _ in 0..count {
        let plen = r.u32()? as usize;
        let path = std::str::from_utf8(r.take(plen)?)
            .map_err(|e| ModelError::Format(format!("parameter path not utf8: {e}")))?
            .to_string();
        if let Some(prev) = &prev_path {
            if *prev >= path {
                return Err(ModelError::Format(format!(
                    "parameter paths out of order: '{prev}' then '{path}'"
                )));
            }
        }
        let ndim = r.u32()? as usize;
        if ndim > 8 {
            return Err(ModelError::Format(format!(
                "parameter '{path}' claims {ndim} dimensions"
            )));
        }
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.u32()? as usize);
        }
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|n| n.checked_mul(8).is_some())
            .ok_or_else(|| {
                ModelError::Format(format!("parameter '{path}' shape {shape:?} overflows"))
            })?;
        let raw = r.take(n * 8)?;
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        params.insert(path.clone(), Tensor::param(shape, data)?);
        prev_path = Some(path);
    }
    if r.pos != bytes.len() {
        return Err(ModelError::Format(format!(
            "{} trailing bytes after parameters",
            bytes.len() - r.pos
        )));
    }

    // the stored set must be exactly what the config prescribes
    let specs = parameter_specs(&config);
    if specs.len() != params.len() {
        return Err(ModelError::Format(format!(
            "container has {} parameters, config expects {}",
            params.len(),
            specs.len()
        )));
    }
    for s in &specs {
        let t = params.get(&s.path)?;
        if t.shape() != s.shape.as_slice() {
            return Err(ModelError::Format(format!(
                "parameter '{}' has shape {:?}, config expects {:?}",
                s.path,
                t.shape(),
                s.shape
            )));
        }
    }
    Ok((config, params))
}
