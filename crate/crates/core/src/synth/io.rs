//! Plain-text corpus, task and ground-truth files.
//!
//! Floats are written with `Display`, which emits the shortest string that
//! parses back to the same bits.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use super::{Corpus, GroundTruth, LabeledDoc, TaskSpec};
use crate::error::{Error, Result};

const TASK_MAGIC: &str = "# topic-unlearn task v1";
const TRUTH_MAGIC: &str = "# topic-unlearn truth v1";

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Format(format!("bad {what} value {t:?}")))
        })
        .collect()
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> Lines<R> {
    fn new(r: R) -> Self {
        Self {
            inner: r.lines(),
            line_no: 0,
        }
    }

    fn next_line(&mut self, what: &str) -> Result<String> {
        self.line_no += 1;
        match self.inner.next() {
            Some(line) => Ok(line?),
            None => Err(Error::Format(format!(
                "unexpected end of file at line {} (expected {what})",
                self.line_no
            ))),
        }
    }

    /// Reads a `key value...` line and returns the value part.
    fn field(&mut self, key: &str) -> Result<String> {
        let line = self.next_line(key)?;
        let mut parts = line.splitn(2, ' ');
        if parts.next() != Some(key) {
            return Err(Error::Format(format!(
                "line {}: expected field {key:?}, found {line:?}",
                self.line_no
            )));
        }
        Ok(parts.next().unwrap_or("").to_string())
    }
}

fn parse_one<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("bad {what} value {s:?}")))
}

pub fn write_corpus<W: Write>(corpus: &Corpus, mut w: W) -> Result<()> {
    writeln!(w, "{} {} {}", corpus.vocab_size, corpus.len(), corpus.doc_len)?;
    for doc in &corpus.docs {
        writeln!(w, "{}", join(doc))?;
    }
    Ok(())
}

pub fn read_corpus<R: BufRead>(r: R) -> Result<Corpus> {
    let mut lines = Lines::new(r);
    let header: Vec<usize> = parse_list(&lines.next_line("header")?, "header")?;
    let [n, m, l] = header[..] else {
        return Err(Error::Format("corpus header must be \"n m L\"".into()));
    };
    let mut docs = Vec::with_capacity(m);
    for _ in 0..m {
        docs.push(parse_list(&lines.next_line("document")?, "word index")?);
    }
    Corpus::new(n, l, docs).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_task<W: Write>(task: &TaskSpec, mut w: W) -> Result<()> {
    writeln!(w, "{TASK_MAGIC}")?;
    writeln!(w, "topics {}", join(&task.topic_subset))?;
    writeln!(w, "w_star {}", join(&task.w_star))?;
    writeln!(w, "head_norm {}", task.head_norm)?;
    writeln!(w, "q {}", task.q)?;
    writeln!(w, "n {}", task.vocab_size())?;
    writeln!(w, "rows {}", task.dataset.len())?;
    for doc in &task.dataset {
        writeln!(w, "{}\t{}", doc.label, join(&doc.counts))?;
    }
    Ok(())
}

pub fn read_task<R: BufRead>(r: R) -> Result<TaskSpec> {
    let mut lines = Lines::new(r);
    let magic = lines.next_line("task header")?;
    if magic.trim() != TASK_MAGIC {
        return Err(Error::VersionMismatch {
            found: magic.trim().to_string(),
            expected: TASK_MAGIC.to_string(),
        });
    }
    let topic_subset = parse_list(&lines.field("topics")?, "topic")?;
    let w_star = parse_list(&lines.field("w_star")?, "w_star")?;
    let head_norm = parse_one(&lines.field("head_norm")?, "head_norm")?;
    let q = parse_one(&lines.field("q")?, "q")?;
    let n: usize = parse_one(&lines.field("n")?, "n")?;
    let rows: usize = parse_one(&lines.field("rows")?, "rows")?;
    let mut dataset = Vec::with_capacity(rows);
    for _ in 0..rows {
        let line = lines.next_line("task row")?;
        let (label, counts) = line
            .split_once('\t')
            .ok_or_else(|| Error::Format(format!("task row without label: {line:?}")))?;
        let label: i8 = parse_one(label, "label")?;
        if label != 1 && label != -1 {
            return Err(Error::Format(format!("label must be ±1, got {label}")));
        }
        let counts: Vec<u32> = parse_list(counts, "count")?;
        if counts.len() != n {
            return Err(Error::Format(format!(
                "task row has {} counts, expected {n}",
                counts.len()
            )));
        }
        dataset.push(LabeledDoc { counts, label });
    }
    Ok(TaskSpec {
        topic_subset,
        w_star,
        head_norm,
        q,
        dataset,
    })
}

pub fn write_truth<W: Write>(gt: &GroundTruth, mut w: W) -> Result<()> {
    writeln!(w, "{TRUTH_MAGIC}")?;
    writeln!(w, "dims {} {}", gt.vocab_size(), gt.num_topics())?;
    writeln!(w, "p_sep {}", gt.p_sep)?;
    writeln!(w, "alpha {}", join(&gt.alpha))?;
    writeln!(w, "anchors {}", join(&gt.anchor_indices))?;
    for row in gt.a_star.row_iter() {
        let vals: Vec<f64> = row.iter().copied().collect();
        writeln!(w, "{}", join(&vals))?;
    }
    Ok(())
}

pub fn read_truth<R: BufRead>(r: R) -> Result<GroundTruth> {
    let mut lines = Lines::new(r);
    let magic = lines.next_line("truth header")?;
    if magic.trim() != TRUTH_MAGIC {
        return Err(Error::VersionMismatch {
            found: magic.trim().to_string(),
            expected: TRUTH_MAGIC.to_string(),
        });
    }
    let dims: Vec<usize> = parse_list(&lines.field("dims")?, "dims")?;
    let [n, r] = dims[..] else {
        return Err(Error::Format("dims must be \"n r\"".into()));
    };
    let p_sep = parse_one(&lines.field("p_sep")?, "p_sep")?;
    let alpha = parse_list(&lines.field("alpha")?, "alpha")?;
    let anchors = parse_list(&lines.field("anchors")?, "anchor")?;
    let mut data = Vec::with_capacity(n * r);
    for _ in 0..n {
        let row: Vec<f64> = parse_list(&lines.next_line("topic matrix row")?, "entry")?;
        if row.len() != r {
            return Err(Error::Format(format!("topic row has {} entries, expected {r}", row.len())));
        }
        data.extend(row);
    }
    let a = DMatrix::from_row_slice(n, r, &data);
    GroundTruth::new(a, alpha, anchors, p_sep)
}
