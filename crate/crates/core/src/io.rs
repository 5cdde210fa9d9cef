//! Readers and writers for triple files, dictionaries, checkpoints and reports.
//!
//! Checkpoint layout (all integers little-endian):
//!
//! ```text
//! magic         4 bytes  "KGE1"
//! tag length    u8
//! model tag     ASCII, e.g. "transe"
//! entities      u64
//! relations     u64
//! entity dim    u64
//! relation dim  u64
//! scalar width  u8       4 (f32) or 8 (f64)
//! flags         u8       bit 0: TransE uses the L1 norm
//! tensors       row-major scalars, in the model's fixed tensor order
//! ```

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::EvalReport;
use crate::kg::{encode_triples, Dataset, RawTriple, Triple, VocabPolicy, Vocabulary};
use crate::models::{tensor_layout, Matrix, ModelKind, ModelParams, Norm, Precision};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"KGE1";
const FLAG_L1: u8 = 1;

pub fn read_triples_tsv(path: impl AsRef<Path>) -> Result<Vec<RawTriple>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_triples(BufReader::with_capacity(1 << 20, file), path)
}

fn parse_triples(reader: impl BufRead, path: &Path) -> Result<Vec<RawTriple>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let mut fields = line.split('\t');
        match (fields.next(), fields.next(), fields.next(), fields.next()) {
            (Some(h), Some(r), Some(t), None) if !line.is_empty() => {
                out.push((h.to_owned(), r.to_owned(), t.to_owned()))
            }
            _ => {
                return Err(Error::MalformedLine {
                    path: path.to_owned(),
                    line: i + 1,
                })
            }
        }
    }
    Ok(out)
}

pub fn write_triples_tsv(path: impl AsRef<Path>, vocab: &Vocabulary, triples: &[Triple]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    for t in triples {
        vocab.check(t)?;
        let (h, r, tl) = vocab.decode(t).expect("checked");
        writeln!(w, "{h}\t{r}\t{tl}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_dictionary(path: impl AsRef<Path>) -> Result<Vec<(String, u32)>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let malformed = || Error::MalformedLine {
            path: path.to_owned(),
            line: i + 1,
        };
        let (label, id) = line.rsplit_once('\t').ok_or_else(malformed)?;
        if label.is_empty() || label.contains('\t') {
            return Err(malformed());
        }
        let id: u32 = id.parse().map_err(|_| malformed())?;
        out.push((label.to_owned(), id));
    }
    Ok(out)
}

pub fn write_dictionary(path: impl AsRef<Path>, labels: &[String]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    for (i, label) in labels.iter().enumerate() {
        writeln!(w, "{label}\t{i}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// File names inside a dataset directory.
#[derive(Debug, Clone)]
pub struct DatasetLayout {
    pub train: String,
    pub dev: String,
    pub test: String,
    pub entities: String,
    pub relations: String,
}

impl Default for DatasetLayout {
    fn default() -> Self {
        Self {
            train: "train.tsv".into(),
            dev: "dev.tsv".into(),
            test: "test.tsv".into(),
            entities: "entity2id.tsv".into(),
            relations: "relation2id.tsv".into(),
        }
    }
}

/// Loads a dataset directory. Dictionaries are used when both are present;
/// otherwise ids are assigned in first-appearance order over train, dev, test.
/// Missing dev/test files are treated as empty splits.
pub fn load_dataset(dir: impl AsRef<Path>, layout: &DatasetLayout) -> Result<Dataset> {
    let dir = dir.as_ref();
    let read_opt = |name: &str| -> Result<Vec<RawTriple>> {
        let p = dir.join(name);
        if p.exists() {
            read_triples_tsv(p)
        } else {
            Ok(Vec::new())
        }
    };
    let train_raw = read_triples_tsv(dir.join(&layout.train))?;
    let dev_raw = read_opt(&layout.dev)?;
    let test_raw = read_opt(&layout.test)?;

    let ent_path = dir.join(&layout.entities);
    let rel_path = dir.join(&layout.relations);
    let frozen = ent_path.exists() && rel_path.exists();
    let mut vocab = if frozen {
        Vocabulary::from_dictionaries(read_dictionary(&ent_path)?, read_dictionary(&rel_path)?)?
    } else {
        Vocabulary::new()
    };
    let mut encode = |raw: &[RawTriple]| -> Result<Vec<Triple>> {
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        let policy = if frozen {
            VocabPolicy::Frozen(std::mem::take(&mut vocab))
        } else {
            VocabPolicy::Grow(std::mem::take(&mut vocab))
        };
        let (v, ts) = encode_triples(raw, policy)?;
        vocab = v;
        Ok(ts)
    };
    let train = encode(&train_raw)?;
    let dev = encode(&dev_raw)?;
    let test = encode(&test_raw)?;
    let d = Dataset::new(vocab, train, dev, test)?;
    let unseen = d.unseen_in_train().len();
    if unseen > 0 {
        log::warn!("{unseen} dev/test triple(s) reference entities or relations absent from train");
    }
    Ok(d)
}

/// Writes splits and dictionaries into `dir`, creating it if needed.
pub fn save_dataset(dir: impl AsRef<Path>, layout: &DatasetLayout, d: &Dataset) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let v = d.vocabulary();
    write_triples_tsv(dir.join(&layout.train), v, d.train())?;
    write_triples_tsv(dir.join(&layout.dev), v, d.dev())?;
    write_triples_tsv(dir.join(&layout.test), v, d.test())?;
    write_dictionary(dir.join(&layout.entities), v.entity_labels())?;
    write_dictionary(dir.join(&layout.relations), v.relation_labels())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Checkpoints

pub fn encode_checkpoint(params: &ModelParams) -> Result<Vec<u8>> {
    for (ti, m) in params.tensors().iter().enumerate() {
        if let Some(index) = m.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { tensor: ti, index });
        }
    }
    let tag = params.model().tag().as_bytes();
    let width = params.precision().width();
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.push(tag.len() as u8);
    buf.extend_from_slice(tag);
    for n in [
        params.num_entities(),
        params.num_relations(),
        params.entity_dim(),
        params.relation_dim(),
    ] {
        buf.extend_from_slice(&(n as u64).to_le_bytes());
    }
    buf.push(width);
    buf.push(if params.norm() == Norm::L1 { FLAG_L1 } else { 0 });
    for m in params.tensors() {
        for &v in m.as_slice() {
            match params.precision() {
                Precision::Single => buf.extend_from_slice(&(v as f32).to_le_bytes()),
                Precision::Double => buf.extend_from_slice(&v.to_le_bytes()),
            }
        }
    }
    Ok(buf)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<ModelParams> {
    let actual = bytes.len() as u64;
    let short = |expected: usize| Error::LengthMismatch {
        expected: expected as u64,
        actual,
    };
    if bytes.len() < 5 {
        return Err(short(5));
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let tag_len = bytes[4] as usize;
    let header_len = 5 + tag_len + 4 * 8 + 2;
    if bytes.len() < header_len {
        return Err(short(header_len));
    }
    let tag = std::str::from_utf8(&bytes[5..5 + tag_len])
        .map_err(|_| Error::BadHeader("model tag is not UTF-8".into()))?;
    let model: ModelKind = tag.parse()?;
    let mut pos = 5 + tag_len;
    let mut dims = [0usize; 4];
    for d in &mut dims {
        let v = u64::from_le_bytes(bytes[pos..pos + 8].try_into().expect("8 bytes"));
        *d = usize::try_from(v).map_err(|_| Error::BadHeader(format!("dimension {v} too large")))?;
        pos += 8;
    }
    let [ne, nr, de, dr] = dims;
    let width = bytes[pos];
    let flags = bytes[pos + 1];
    pos += 2;
    let precision = match width {
        4 => Precision::Single,
        8 => Precision::Double,
        w => return Err(Error::BadHeader(format!("scalar width {w}"))),
    };
    if flags & !FLAG_L1 != 0 {
        return Err(Error::BadHeader(format!("unknown flags {flags:#x}")));
    }
    let layout = tensor_layout(model, ne, nr, de, dr).map_err(|e| Error::BadHeader(e.to_string()))?;
    let payload: u128 = layout
        .iter()
        .map(|s| s.rows as u128 * s.cols as u128 * width as u128)
        .sum();
    let expected = header_len as u128 + payload;
    if expected != actual as u128 {
        return Err(Error::LengthMismatch {
            expected: expected.min(u64::MAX as u128) as u64,
            actual,
        });
    }
    let mut tensors = Vec::with_capacity(layout.len());
    for (ti, spec) in layout.iter().enumerate() {
        let n = spec.rows * spec.cols;
        let mut data = Vec::with_capacity(n);
        for idx in 0..n {
            let v = match precision {
                Precision::Single => {
                    f32::from_le_bytes(bytes[pos..pos + 4].try_into().expect("4 bytes")) as f64
                }
                Precision::Double => f64::from_le_bytes(bytes[pos..pos + 8].try_into().expect("8 bytes")),
            };
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { tensor: ti, index: idx });
            }
            data.push(v);
            pos += width as usize;
        }
        tensors.push(Matrix::from_vec(spec.rows, spec.cols, data)?);
    }
    let norm = if flags & FLAG_L1 != 0 { Norm::L1 } else { Norm::L2 };
    let p = ModelParams::from_tensors(model, ne, nr, de, dr, tensors)?.with_norm(norm);
    Ok(p.with_precision(precision))
}

pub fn write_checkpoint(params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_checkpoint(params)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}

// ---------------------------------------------------------------------------
// JSON documents

pub fn report_json(report: &EvalReport) -> Result<serde_json::Value> {
    if report.num_ranks() == 0 {
        return Err(Error::EmptyReport);
    }
    let mut obj = serde_json::Map::new();
    for (k, v) in report.hits() {
        obj.insert(format!("hits{k}"), serde_json::json!(v));
    }
    obj.insert("mr".into(), serde_json::json!(report.mr()));
    obj.insert("mrr".into(), serde_json::json!(report.mrr()));
    obj.insert("protocol".into(), serde_json::json!(report.protocol()));
    obj.insert("sides".into(), serde_json::json!(report.sides()));
    obj.insert("n_test".into(), serde_json::json!(report.n_test()));
    Ok(serde_json::Value::Object(obj))
}

pub fn write_report(report: &EvalReport, path: impl AsRef<Path>) -> Result<()> {
    write_json(path, &report_json(report)?)
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::json(path, e))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::json(path, e))
}
