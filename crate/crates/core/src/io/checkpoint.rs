//! Versioned binary model checkpoints.
//!
//! Layout (all integers little-endian):
//!   magic "FOGB" | version u32 | layer-kind tags (u32 count, u8 each) |
//!   input dims + conv width + class count (u32 each) | training seed u64 |
//!   six parameter arrays, each as u32 rank, u32 dims, f32 values.
//!
//! Parameters are stored at their native f32 width, so load(save(m))
//! reproduces forward outputs bit-identically.

use std::path::Path;

use crate::classifier::{Model, ModelConfig};
use crate::error::{Error, Result};
use crate::io::atomic_write;

const MAGIC: &[u8; 4] = b"FOGB";
const VERSION: u32 = 1;

/// Layer-kind tags for the fixed architecture, in forward order.
const LAYER_TAGS: [u8; 8] = [
    TAG_CONV3X3,
    TAG_RELU,
    TAG_AVGPOOL2,
    TAG_CONV3X3,
    TAG_RELU,
    TAG_AVGPOOL2,
    TAG_GLOBAL_AVGPOOL,
    TAG_AFFINE,
];
const TAG_CONV3X3: u8 = 1;
const TAG_RELU: u8 = 2;
const TAG_AVGPOOL2: u8 = 3;
const TAG_GLOBAL_AVGPOOL: u8 = 4;
const TAG_AFFINE: u8 = 5;

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn array(&mut self, dims: &[u32], values: &[f32]) {
        let expect: u64 = dims.iter().map(|&d| d as u64).product();
        debug_assert_eq!(expect, values.len() as u64);
        self.u32(dims.len() as u32);
        for &d in dims {
            self.u32(d);
        }
        for &v in values {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::Format("checkpoint truncated".into()));
        }
        let slice = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// Reads one shape-prefixed f32 array and checks it against the dims the
    /// architecture descriptor implies.
    fn array(&mut self, expect_dims: &[u32]) -> Result<Vec<f32>> {
        let rank = self.u32()? as usize;
        if rank != expect_dims.len() {
            return Err(Error::Format(format!(
                "parameter rank {rank} does not match architecture (expected {})",
                expect_dims.len()
            )));
        }
        let mut count = 1usize;
        for &expect in expect_dims {
            let d = self.u32()?;
            if d != expect {
                return Err(Error::Format(format!(
                    "parameter dimension {d} does not match architecture (expected {expect})"
                )));
            }
            count *= d as usize;
        }
        let raw = self.take(count * 4)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    let mut w = Writer { buf: Vec::new() };
    w.buf.extend_from_slice(MAGIC);
    w.u32(VERSION);
    w.u32(LAYER_TAGS.len() as u32);
    w.buf.extend_from_slice(&LAYER_TAGS);
    let cfg = &model.config;
    w.u32(cfg.input_height as u32);
    w.u32(cfg.input_width as u32);
    w.u32(cfg.input_channels as u32);
    w.u32(cfg.conv_width as u32);
    w.u32(cfg.num_classes as u32);
    w.u64(cfg.seed);

    let (cw, c, k) = (
        cfg.conv_width as u32,
        cfg.input_channels as u32,
        cfg.num_classes as u32,
    );
    w.array(&[cw, c, 3, 3], &model.conv1_w);
    w.array(&[cw], &model.conv1_b);
    w.array(&[cw, cw, 3, 3], &model.conv2_w);
    w.array(&[cw], &model.conv2_b);
    w.array(&[k, cw], &model.head_w);
    w.array(&[k], &model.head_b);
    atomic_write(path, &w.buf)
}

pub fn load_model(path: &Path) -> Result<Model> {
    let data = std::fs::read(path)?;
    let mut r = Reader { data: &data, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format(format!(
            "{} is not a FOGB checkpoint (bad magic)",
            path.display()
        )));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {version} (this build reads version {VERSION})"
        )));
    }
    let n_layers = r.u32()? as usize;
    if n_layers != LAYER_TAGS.len() {
        return Err(Error::Format(format!(
            "unexpected layer count {n_layers} in architecture descriptor"
        )));
    }
    for expect in LAYER_TAGS {
        let tag = r.u8()?;
        if tag != expect {
            return Err(Error::Format(format!(
                "layer tag {tag} does not match the supported architecture"
            )));
        }
    }
    let config = ModelConfig {
        input_height: r.u32()? as usize,
        input_width: r.u32()? as usize,
        input_channels: r.u32()? as usize,
        conv_width: r.u32()? as usize,
        num_classes: r.u32()? as usize,
        seed: r.u64()?,
    };
    let (cw, c, k) = (
        config.conv_width as u32,
        config.input_channels as u32,
        config.num_classes as u32,
    );
    let mut model = Model::new(config)?;
    model.conv1_w = r.array(&[cw, c, 3, 3])?;
    model.conv1_b = r.array(&[cw])?;
    model.conv2_w = r.array(&[cw, cw, 3, 3])?;
    model.conv2_b = r.array(&[cw])?;
    model.head_w = r.array(&[k, cw])?;
    model.head_b = r.array(&[k])?;
    Ok(model)
}
