//! The persisted statistics bundle: one UTF-8 header line, a JSON metadata
//! block, then every matrix as little-endian f64 in row-major order at the
//! byte offsets declared in the metadata.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cooccur::CooccurrenceStats;
use crate::downstream::HeadModel;
use crate::error::{Error, Result};
use crate::recovery::{AnchorSet, TopicModel, TrainedModel};
use crate::synth::{LabeledDoc, TaskSpec};

pub const BUNDLE_VERSION: &str = "v1";
const MAGIC: &str = "topic-unlearn-bundle";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub corpus_path: Option<String>,
    pub seeds: BTreeMap<String, u64>,
    /// Free-form echo of the configuration that produced the bundle.
    pub config: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsBundle {
    pub stats: CooccurrenceStats,
    pub anchors: AnchorSet,
    pub model: TopicModel,
    pub head: Option<HeadModel>,
    pub task: Option<TaskSpec>,
    pub provenance: Provenance,
}

impl StatsBundle {
    pub fn from_trained(trained: TrainedModel, provenance: Provenance) -> Self {
        Self {
            stats: trained.stats,
            anchors: trained.anchors,
            model: trained.model,
            head: None,
            task: None,
            provenance,
        }
    }

    pub fn trained(&self) -> TrainedModel {
        TrainedModel {
            stats: self.stats.clone(),
            anchors: self.anchors.clone(),
            model: self.model.clone(),
        }
    }

    pub fn with_head(mut self, head: HeadModel, task: TaskSpec) -> Self {
        self.head = Some(head);
        self.task = Some(task);
        self
    }

    /// Container invariants, including A = column-normalize(diag(p)·C).
    pub fn validate(&self) -> Result<()> {
        let n = self.stats.vocab_size();
        let r = self.anchors.len();
        self.anchors
            .validate(n)
            .map_err(|e| Error::CorruptBundle(e.to_string()))?;
        if self.model.topics.shape() != (n, r) || self.model.coefficients.shape() != (n, r) {
            return Err(Error::CorruptBundle("model shape disagrees with statistics".into()));
        }
        let mut rebuilt = self.model.coefficients.clone();
        for (i, mut row) in rebuilt.row_iter_mut().enumerate() {
            row *= self.stats.p[i];
        }
        for mut col in rebuilt.column_iter_mut() {
            let s = col.sum();
            if s > 0.0 {
                col /= s;
            }
        }
        let gap = (rebuilt - &self.model.topics).amax();
        if !(gap <= 1e-10) {
            return Err(Error::CorruptBundle(format!(
                "A does not match diag(p)·C after normalization (gap {gap:e})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct MatrixEntry {
    name: String,
    rows: usize,
    cols: usize,
    offset: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct HeadMeta {
    model: HeadModel,
    topic_subset: Vec<usize>,
    head_norm: f64,
    q: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Metadata {
    format_version: String,
    n: usize,
    r: usize,
    num_docs: usize,
    doc_len: usize,
    eps0: f64,
    empty_words: Vec<usize>,
    anchors: AnchorSet,
    head: Option<HeadMeta>,
    provenance: Provenance,
    matrices: Vec<MatrixEntry>,
    blob_len: usize,
}

struct BlobWriter {
    bytes: Vec<u8>,
    entries: Vec<MatrixEntry>,
}

impl BlobWriter {
    fn push(&mut self, name: &str, m: &DMatrix<f64>) {
        self.entries.push(MatrixEntry {
            name: name.to_string(),
            rows: m.nrows(),
            cols: m.ncols(),
            offset: self.bytes.len(),
        });
        for row in m.row_iter() {
            for v in row.iter() {
                self.bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
}

fn column(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

pub fn to_bytes(bundle: &StatsBundle) -> Result<Vec<u8>> {
    let mut blob = BlobWriter {
        bytes: Vec::new(),
        entries: Vec::new(),
    };
    blob.push("q", &bundle.stats.q);
    blob.push("qbar", &bundle.stats.qbar);
    blob.push("p", &column(&bundle.stats.p));
    blob.push("topics", &bundle.model.topics);
    blob.push("topic_covariance", &bundle.model.topic_covariance);
    blob.push("coefficients", &bundle.model.coefficients);

    let head = match (&bundle.head, &bundle.task) {
        (Some(head), Some(task)) => {
            blob.push("task_counts", &task.design_matrix());
            blob.push("task_labels", &column(&task.labels()));
            blob.push("task_w_star", &DMatrix::from_column_slice(task.w_star.len(), 1, &task.w_star));
            Some(HeadMeta {
                model: head.clone(),
                topic_subset: task.topic_subset.clone(),
                head_norm: task.head_norm,
                q: task.q,
            })
        }
        (None, None) => None,
        _ => {
            return Err(Error::InvalidParameter(
                "a head must be stored together with its task".into(),
            ))
        }
    };

    let meta = Metadata {
        format_version: BUNDLE_VERSION.to_string(),
        n: bundle.stats.vocab_size(),
        r: bundle.anchors.len(),
        num_docs: bundle.stats.num_docs,
        doc_len: bundle.stats.doc_len,
        eps0: bundle.model.eps0,
        empty_words: bundle.stats.empty_words.clone(),
        anchors: bundle.anchors.clone(),
        head,
        provenance: bundle.provenance.clone(),
        matrices: blob.entries,
        blob_len: blob.bytes.len(),
    };
    let json = serde_json::to_string(&meta).map_err(|e| Error::Format(e.to_string()))?;
    let mut out = format!("{MAGIC} {BUNDLE_VERSION} {}\n", json.len()).into_bytes();
    out.extend_from_slice(json.as_bytes());
    out.push(b'\n');
    out.extend_from_slice(&blob.bytes);
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<StatsBundle> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::CorruptBundle("missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..newline])
        .map_err(|_| Error::CorruptBundle("header is not UTF-8".into()))?;
    let parts: Vec<&str> = header.split(' ').collect();
    if parts.len() != 3 || parts[0] != MAGIC {
        return Err(Error::CorruptBundle(format!("unrecognized header {header:?}")));
    }
    if parts[1] != BUNDLE_VERSION {
        return Err(Error::VersionMismatch {
            found: parts[1].to_string(),
            expected: BUNDLE_VERSION.to_string(),
        });
    }
    let meta_len: usize = parts[2]
        .parse()
        .map_err(|_| Error::CorruptBundle("bad metadata length".into()))?;
    let meta_start = newline + 1;
    let blob_start = meta_start + meta_len + 1;
    if bytes.len() < blob_start {
        return Err(Error::CorruptBundle("truncated metadata block".into()));
    }
    let meta: Metadata = serde_json::from_slice(&bytes[meta_start..meta_start + meta_len])
        .map_err(|e| Error::CorruptBundle(format!("metadata: {e}")))?;
    if meta.format_version != BUNDLE_VERSION {
        return Err(Error::VersionMismatch {
            found: meta.format_version,
            expected: BUNDLE_VERSION.to_string(),
        });
    }
    let blob = &bytes[blob_start..];
    if blob.len() != meta.blob_len {
        return Err(Error::CorruptBundle(format!(
            "matrix block holds {} bytes, metadata declares {}",
            blob.len(),
            meta.blob_len
        )));
    }

    let read = |name: &str| -> Result<DMatrix<f64>> {
        let e = meta
            .matrices
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::CorruptBundle(format!("missing matrix {name}")))?;
        let len = e.rows * e.cols * 8;
        let end = e.offset.checked_add(len).filter(|&end| end <= blob.len());
        let end = end.ok_or_else(|| Error::CorruptBundle(format!("matrix {name} overruns the file")))?;
        let vals: Vec<f64> = blob[e.offset..end]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(DMatrix::from_row_slice(e.rows, e.cols, &vals))
    };
    let expect_shape = |m: &DMatrix<f64>, shape: (usize, usize), name: &str| -> Result<()> {
        if m.shape() != shape {
            return Err(Error::CorruptBundle(format!(
                "{name} has shape {:?}, expected {shape:?}",
                m.shape()
            )));
        }
        Ok(())
    };

    let (n, r) = (meta.n, meta.r);
    let q = read("q")?;
    expect_shape(&q, (n, n), "q")?;
    let qbar = read("qbar")?;
    expect_shape(&qbar, (n, n), "qbar")?;
    let p = read("p")?;
    expect_shape(&p, (n, 1), "p")?;
    let topics = read("topics")?;
    expect_shape(&topics, (n, r), "topics")?;
    let topic_covariance = read("topic_covariance")?;
    expect_shape(&topic_covariance, (r, r), "topic_covariance")?;
    let coefficients = read("coefficients")?;
    expect_shape(&coefficients, (n, r), "coefficients")?;

    let stats = CooccurrenceStats {
        q,
        qbar,
        p: p.column(0).into_owned(),
        num_docs: meta.num_docs,
        doc_len: meta.doc_len,
        empty_words: meta.empty_words,
    };
    let model = TopicModel {
        topics,
        topic_covariance,
        coefficients,
        eps0: meta.eps0,
    };

    let (head, task) = match meta.head {
        Some(h) => {
            let counts = read("task_counts")?;
            let labels = read("task_labels")?;
            let w_star = read("task_w_star")?;
            expect_shape(&labels, (counts.nrows(), 1), "task_labels")?;
            let dataset = counts
                .row_iter()
                .zip(labels.iter())
                .map(|(row, &y)| LabeledDoc {
                    counts: row.iter().map(|&c| c as u32).collect(),
                    label: y as i8,
                })
                .collect();
            let task = TaskSpec {
                topic_subset: h.topic_subset,
                w_star: w_star.iter().copied().collect(),
                head_norm: h.head_norm,
                q: h.q,
                dataset,
            };
            (Some(h.model), Some(task))
        }
        None => (None, None),
    };

    let bundle = StatsBundle {
        stats,
        anchors: meta.anchors,
        model,
        head,
        task,
        provenance: meta.provenance,
    };
    bundle.validate()?;
    Ok(bundle)
}

pub fn save_bundle(bundle: &StatsBundle, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(bundle)?)?;
    Ok(())
}

pub fn load_bundle(path: &Path) -> Result<StatsBundle> {
    from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::downstream::{head_tune, HeadOptions};
    use crate::recovery::{train, RecoveryOptions};
    use crate::synth::{generate_corpus, generate_task, GroundTruth, TaskParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_bundle(with_head: bool) -> StatsBundle {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let gt = GroundTruth::generate(25, 3, 0.3, &[0.4; 3], &mut rng).unwrap();
        let corpus = generate_corpus(&gt, 2_000, 3, &mut rng).unwrap();
        let trained = train(&corpus, &RecoveryOptions::with_topics(3)).unwrap();
        let mut prov = Provenance::default();
        prov.seeds.insert("train".into(), 12);
        prov.config.insert("eps0".into(), "0.1".into());
        let mut bundle = StatsBundle::from_trained(trained, prov);
        if with_head {
            let params = TaskParams {
                topic_subset: vec![1],
                dataset_size: 40,
                label_noise: 0.0,
                head_norm: 1.0,
                doc_len: 5,
            };
            let task = generate_task(&gt, &params, &mut rng).unwrap();
            let head = head_tune(&bundle.model.topics, &task, &HeadOptions::default()).unwrap();
            bundle = bundle.with_head(head, task);
        }
        bundle
    }

    #[test]
    fn round_trip_is_bitwise() {
        for with_head in [false, true] {
            let bundle = sample_bundle(with_head);
            let bytes = to_bytes(&bundle).unwrap();
            let back = from_bytes(&bytes).unwrap();
            assert_eq!(back, bundle);
            assert_eq!(to_bytes(&back).unwrap(), bytes);
        }
    }

    #[test]
    fn truncation_is_detected() {
        let bytes = to_bytes(&sample_bundle(false)).unwrap();
        for cut in [10, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(from_bytes(&bytes[..cut]), Err(Error::CorruptBundle(_))));
        }
    }

    #[test]
    fn foreign_version_names_both() {
        let bytes = to_bytes(&sample_bundle(false)).unwrap();
        let text = String::from_utf8_lossy(&bytes[..40]).to_string();
        let patched = text.replacen(" v1 ", " v7 ", 1);
        let mut forged = patched.into_bytes();
        forged.extend_from_slice(&bytes[40..]);
        let err = from_bytes(&forged).unwrap_err();
        assert!(matches!(&err, Error::VersionMismatch { found, expected } if found == "v7" && expected == "v1"));
        assert!(err.to_string().contains("v7") && err.to_string().contains("v1"));
    }

    #[test]
    fn tampered_topics_fail_validation() {
        let mut bundle = sample_bundle(false);
        bundle.model.topics[(0, 0)] += 1e-6;
        let bytes = to_bytes(&bundle).unwrap();
        assert!(matches!(from_bytes(&bytes), Err(Error::CorruptBundle(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bundle");
        let bundle = sample_bundle(true);
        save_bundle(&bundle, &path).unwrap();
        assert_eq!(load_bundle(&path).unwrap(), bundle);
    }
}
