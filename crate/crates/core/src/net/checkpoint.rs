//! JSON parameter dump. Every tensor carries its shape; values are IEEE-754
//! doubles written with round-trip precision.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ModelBundle;
use crate::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;
const FORMAT: &str = "tabal-checkpoint";

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    model: ModelBundle,
}

pub fn save_checkpoint(model: &ModelBundle, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let ck = Checkpoint {
        format: FORMAT.into(),
        version: CHECKPOINT_VERSION,
        model: model.clone(),
    };
    serde_json::to_writer(BufWriter::new(file), &ck)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ModelBundle> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let ck: Checkpoint = serde_json::from_reader(BufReader::new(file))?;
    if ck.format != FORMAT || ck.version != CHECKPOINT_VERSION {
        return Err(Error::InvalidArgument(format!(
            "unsupported checkpoint {} v{}",
            ck.format, ck.version
        )));
    }
    let m = &ck.model;
    if m.backbone.is_empty() {
        return Err(Error::Shape("checkpoint has no backbone layers".into()));
    }
    let mut fan_in = m.input_dim();
    for layer in &m.backbone {
        if layer.fan_in() != fan_in || layer.b.len() != layer.fan_out() {
            return Err(Error::Shape("inconsistent backbone shapes in checkpoint".into()));
        }
        fan_in = layer.fan_out();
    }
    if m.class_head.fan_in() != fan_in || m.class_head.b.len() != m.class_head.fan_out() {
        return Err(Error::Shape("classification head does not fit the backbone".into()));
    }
    Ok(ck.model)
}
