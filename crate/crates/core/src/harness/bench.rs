//! Wall-clock comparison of unlearning against retraining as m grows.

use std::time::Instant;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cooccur::build_stats;
use crate::error::{Error, Result};
use crate::harness::metrics::{ols_slope, Regression};
use crate::harness::report::{cell, ExperimentReport};
use crate::recovery::{find_anchors, recover_topics, train, RecoveryOptions, TrainedModel};
use crate::synth::{generate_corpus, Corpus, GroundTruth};
use crate::unlearn::{unlearn_base, UnlearnConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchGrid {
    pub n: usize,
    pub r: usize,
    pub doc_len: usize,
    pub p_sep: f64,
    pub alpha: f64,
    pub ms: Vec<usize>,
    pub m_u: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for BenchGrid {
    fn default() -> Self {
        Self {
            n: 200,
            r: 5,
            doc_len: 2,
            p_sep: 0.3,
            alpha: 0.5,
            ms: vec![10_000, 50_000, 100_000],
            m_u: 10,
            repeats: 5,
            seed: 0,
        }
    }
}

/// Seconds per phase for one (m, repeat) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub m: usize,
    pub m_u: usize,
    pub repeat: usize,
    pub build_stats: f64,
    pub anchors: f64,
    pub topics: f64,
    pub retrain: f64,
    pub downdate: f64,
    pub newton: f64,
    pub rebuild: f64,
    pub noise: f64,
    pub unlearn: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSummary {
    pub grid: BenchGrid,
    pub rows: Vec<BenchRow>,
    /// Unlearn seconds regressed on m/10⁴.
    pub unlearn_vs_m: Regression,
    pub retrain_vs_m: Regression,
    /// (m, median retrain / median unlearn).
    pub speedup: Vec<(usize, f64)>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    if k % 2 == 1 {
        xs[k / 2]
    } else {
        0.5 * (xs[k / 2 - 1] + xs[k / 2])
    }
}

impl BenchSummary {
    pub fn speedup_at(&self, m: usize) -> Option<f64> {
        self.speedup.iter().find(|(mm, _)| *mm == m).map(|(_, s)| *s)
    }

    pub fn to_report(&self, cfg: &UnlearnConfig) -> ExperimentReport {
        let mut rep = ExperimentReport::new(
            "bench",
            &[
                "m", "m_u", "repeat", "build_stats_s", "anchors_s", "topics_s", "retrain_s",
                "downdate_s", "newton_s", "rebuild_s", "noise_s", "unlearn_s",
            ],
        );
        let g = &self.grid;
        rep.echo("n", g.n);
        rep.echo("r", g.r);
        rep.echo("doc_len", g.doc_len);
        rep.echo("p_sep", g.p_sep);
        rep.echo("alpha", g.alpha);
        rep.echo("seed", g.seed);
        rep.echo_config(cfg);
        rep.echo("unlearn_slope_per_1e4_docs", self.unlearn_vs_m.slope);
        rep.echo("unlearn_slope_p_value", self.unlearn_vs_m.p_value);
        rep.echo("retrain_slope_per_1e4_docs", self.retrain_vs_m.slope);
        rep.echo("retrain_slope_p_value", self.retrain_vs_m.p_value);
        for (m, s) in &self.speedup {
            rep.echo(&format!("speedup_m{m}"), s);
        }
        for row in &self.rows {
            let fields = vec![
                row.m.to_string(),
                row.m_u.to_string(),
                row.repeat.to_string(),
                cell(row.build_stats),
                cell(row.anchors),
                cell(row.topics),
                cell(row.retrain),
                cell(row.downdate),
                cell(row.newton),
                cell(row.rebuild),
                cell(row.noise),
                cell(row.unlearn),
            ];
            rep.push_row(fields).expect("row width matches the header");
        }
        rep
    }
}

struct Prepared {
    m: usize,
    trained: TrainedModel,
    forget: Vec<Vec<usize>>,
    remaining: Corpus,
}

fn prepare(grid: &BenchGrid, gt: &GroundTruth, m: usize, opts: &RecoveryOptions) -> Result<Prepared> {
    let mut rng = ChaCha8Rng::seed_from_u64(grid.seed ^ (m as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let corpus = generate_corpus(gt, m, grid.doc_len, &mut rng)?;
    let trained = train(&corpus, opts)?;
    let forget: Vec<Vec<usize>> = index::sample(&mut rng, m, grid.m_u)
        .into_iter()
        .map(|d| corpus.docs[d].clone())
        .collect();
    let remaining = corpus.without(&forget)?;
    Ok(Prepared {
        m,
        trained,
        forget,
        remaining,
    })
}

fn time_cell(p: &Prepared, opts: &RecoveryOptions, cfg: &UnlearnConfig, seed: u64, repeat: usize) -> Result<BenchRow> {
    let t = Instant::now();
    let stats = build_stats(&p.remaining)?;
    let build = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let anchors = find_anchors(&stats, opts)?;
    let anchor_s = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let model = recover_topics(&stats, &anchors, opts)?;
    let topics_s = t.elapsed().as_secs_f64();
    std::hint::black_box(&model);

    let t = Instant::now();
    let out = unlearn_base(&p.trained, &p.forget, cfg, seed)?;
    let unlearn = t.elapsed().as_secs_f64();
    std::hint::black_box(&out.released);

    Ok(BenchRow {
        m: p.m,
        m_u: p.forget.len(),
        repeat,
        build_stats: build,
        anchors: anchor_s,
        topics: topics_s,
        retrain: build + anchor_s + topics_s,
        downdate: out.timings.downdate.as_secs_f64(),
        newton: out.timings.newton.as_secs_f64(),
        rebuild: out.timings.rebuild.as_secs_f64(),
        noise: out.timings.noise.as_secs_f64(),
        unlearn,
    })
}

/// Times retrain and unlearn round-robin over `grid.ms` after one discarded
/// warm-up pass. `cfg` must admit `grid.m_u` deletions at every m.
pub fn bench_runtime(grid: &BenchGrid, cfg: &UnlearnConfig, opts: &RecoveryOptions) -> Result<BenchSummary> {
    if grid.ms.len() < 2 || grid.repeats == 0 {
        return Err(Error::InvalidParameter(
            "bench needs at least two corpus sizes and one repeat".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(grid.seed);
    let gt = GroundTruth::generate(grid.n, grid.r, grid.p_sep, &vec![grid.alpha; grid.r], &mut rng)?;
    let opts = RecoveryOptions {
        num_topics: grid.r,
        ..opts.clone()
    };
    let prepared: Vec<Prepared> = grid
        .ms
        .iter()
        .map(|&m| prepare(grid, &gt, m, &opts))
        .collect::<Result<_>>()?;

    for p in &prepared {
        time_cell(p, &opts, cfg, grid.seed, 0)?;
    }
    let mut rows = Vec::with_capacity(grid.repeats * prepared.len());
    for repeat in 0..grid.repeats {
        for p in &prepared {
            rows.push(time_cell(p, &opts, cfg, grid.seed, repeat)?);
        }
    }

    let x: Vec<f64> = rows.iter().map(|r| r.m as f64 / 1e4).collect();
    let unlearn: Vec<f64> = rows.iter().map(|r| r.unlearn).collect();
    let retrain: Vec<f64> = rows.iter().map(|r| r.retrain).collect();
    let unlearn_vs_m = ols_slope(&x, &unlearn)?;
    let retrain_vs_m = ols_slope(&x, &retrain)?;
    let speedup = grid
        .ms
        .iter()
        .map(|&m| {
            let pick = |f: fn(&BenchRow) -> f64| median(rows.iter().filter(|r| r.m == m).map(f).collect());
            (m, pick(|r| r.retrain) / pick(|r| r.unlearn))
        })
        .collect();
    Ok(BenchSummary {
        grid: grid.clone(),
        rows,
        unlearn_vs_m,
        retrain_vs_m,
        speedup,
    })
}
