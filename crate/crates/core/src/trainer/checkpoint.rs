//! Checkpoint file: a text header, then little-endian `f64` arrays in header order.
//!
//! ```text
//! helmholtz-checkpoint v1
//! layer_sizes 784,300,10
//! objective chernoff-approx:0.2
//! seed 7
//! epoch 3
//! adam_step 1500
//! array gen.prior.logits 10
//! array gen.0.weights 784,300
//! …
//! array adam.v.rec.1.biases 10
//! end
//! ```

use std::fs;
use std::path::Path;

use crate::bihm::{BihmModel, Objective};
use crate::error::{Error, Result};

use super::optimizer::Adam;

pub const MAGIC: &str = "helmholtz-checkpoint v1";

/// Everything needed to resume or evaluate a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: BihmModel,
    pub optimizer: Adam,
    pub objective: Objective,
    pub seed: u64,
    /// Completed epochs.
    pub epoch: usize,
}

fn join(v: &[usize]) -> String {
    v.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::CheckpointHeader(format!("bad integer list `{s}`")))
        })
        .collect()
}

/// `(name, shape, data)` in file order.
fn arrays(c: &Checkpoint) -> Vec<(String, Vec<usize>, &[f64])> {
    let mut out: Vec<(String, Vec<usize>, &[f64])> = c
        .model
        .tensors()
        .into_iter()
        .map(|t| (t.name, t.shape, t.data))
        .collect();
    for (tag, m) in [("adam.m", &c.optimizer.m), ("adam.v", &c.optimizer.v)] {
        out.extend(
            m.tensors()
                .into_iter()
                .map(|t| (format!("{tag}.{}", t.name), t.shape, t.data)),
        );
    }
    out
}

pub fn to_bytes(c: &Checkpoint) -> Vec<u8> {
    let mut header = format!(
        "{MAGIC}\nlayer_sizes {}\nobjective {}\nseed {}\nepoch {}\nadam_step {}\n",
        join(c.model.layer_sizes()),
        c.objective,
        c.seed,
        c.epoch,
        c.optimizer.step
    );
    let arrs = arrays(c);
    for (name, shape, _) in &arrs {
        header.push_str(&format!("array {name} {}\n", join(shape)));
    }
    header.push_str("end\n");
    let mut out = header.into_bytes();
    for (_, _, data) in &arrs {
        for v in data.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn save_checkpoint(c: &Checkpoint, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(c))?;
    Ok(())
}

struct HeaderFields {
    layer_sizes: Vec<usize>,
    objective: Objective,
    seed: u64,
    epoch: usize,
    adam_step: u64,
    arrays: Vec<(String, Vec<usize>)>,
}

fn parse_header(text: &str) -> Result<HeaderFields> {
    let bad = |m: String| Error::CheckpointHeader(m);
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(bad(format!("missing magic line `{MAGIC}`")));
    }
    let mut field = |key: &str| -> Result<String> {
        let line = lines.next().ok_or_else(|| bad(format!("missing `{key}`")))?;
        line.strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .map(str::to_owned)
            .ok_or_else(|| bad(format!("expected `{key}`, found `{line}`")))
    };
    let layer_sizes = parse_list(&field("layer_sizes")?)?;
    let objective = field("objective")?
        .parse()
        .map_err(|e| bad(format!("objective: {e}")))?;
    let num = |s: String| s.parse::<u64>().map_err(|_| bad(format!("bad integer `{s}`")));
    let seed = num(field("seed")?)?;
    let epoch = num(field("epoch")?)? as usize;
    let adam_step = num(field("adam_step")?)?;
    let mut arrays = Vec::new();
    loop {
        let line = lines.next().ok_or_else(|| bad("missing `end`".into()))?;
        if line == "end" {
            break;
        }
        let rest = line
            .strip_prefix("array ")
            .ok_or_else(|| bad(format!("unexpected line `{line}`")))?;
        let (name, shape) = rest
            .split_once(' ')
            .ok_or_else(|| bad(format!("malformed array line `{line}`")))?;
        arrays.push((name.to_owned(), parse_list(shape)?));
    }
    Ok(HeaderFields {
        layer_sizes,
        objective,
        seed,
        epoch,
        adam_step,
        arrays,
    })
}

pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
    const END: &[u8] = b"\nend\n";
    let header_len = bytes
        .windows(END.len())
        .position(|w| w == END)
        .map(|p| p + END.len())
        .ok_or_else(|| Error::CheckpointHeader("no header terminator".into()))?;
    let text =
        std::str::from_utf8(&bytes[..header_len]).map_err(|_| Error::CheckpointHeader("header is not UTF-8".into()))?;
    let h = parse_header(text)?;
    let model = BihmModel::zeros(&h.layer_sizes).map_err(|e| Error::CheckpointHeader(e.to_string()))?;
    let mut c = Checkpoint {
        optimizer: Adam::new(&model),
        model,
        objective: h.objective,
        seed: h.seed,
        epoch: h.epoch,
    };
    c.optimizer.step = h.adam_step;

    let expected: Vec<(String, Vec<usize>)> = arrays(&c).into_iter().map(|(n, s, _)| (n, s)).collect();
    if expected.len() != h.arrays.len() {
        return Err(Error::CheckpointHeader(format!(
            "{} arrays listed, layer sizes imply {}",
            h.arrays.len(),
            expected.len()
        )));
    }
    for ((en, es), (fname, fs)) in expected.iter().zip(&h.arrays) {
        if en != fname {
            return Err(Error::CheckpointHeader(format!(
                "expected array `{en}`, found `{fname}`"
            )));
        }
        if es != fs {
            return Err(Error::CheckpointShape {
                name: en.clone(),
                expected: es.clone(),
                found: fs.clone(),
            });
        }
    }

    let payload = &bytes[header_len..];
    let total: usize = expected.iter().map(|(_, s)| s.iter().product::<usize>()).sum();
    let needed = 8 * total;
    if payload.len() < needed {
        return Err(Error::CheckpointTruncated {
            needed,
            found: payload.len(),
        });
    }
    if payload.len() > needed {
        return Err(Error::CheckpointHeader(format!(
            "{} trailing bytes after the last array",
            payload.len() - needed
        )));
    }
    let mut values = payload
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")));
    for target in [&mut c.model, &mut c.optimizer.m, &mut c.optimizer.v] {
        for t in target.tensors_mut() {
            for slot in t.data.iter_mut() {
                *slot = values.next().expect("length checked");
            }
        }
    }
    Ok(c)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    from_bytes(&fs::read(path)?)
}
