//! Command-line front end. Every subcommand that draws randomness requires
//! `--seed`; reports go to `--out` or stdout as tab-separated text.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cooccur::build_stats;
use crate::downstream::{
    deletion_capacity_downstream, head_tune, unlearn_realistic, HeadOptions, LossKind,
};
use crate::error::{Error, Result};
use crate::harness::bench::{bench_runtime, BenchGrid};
use crate::harness::bundle::{load_bundle, save_bundle, Provenance, StatsBundle};
use crate::harness::calibrate::{calibrate_constants, Regime, DEFAULT_MIN_CONSTANT};
use crate::harness::grid::{expand_grid, parse_grid};
use crate::harness::metrics::{aligned_error, matrix_digest};
use crate::harness::oracle::retrain_oracle;
use crate::harness::report::{cell, ExperimentReport};
use crate::recovery::{align_columns, train_from_stats, RecoveryOptions, TrainedModel};
use crate::synth::{
    generate_corpus, generate_task, read_corpus, read_task, read_truth, write_corpus, write_task,
    write_truth, Corpus, GroundTruth, TaskParams,
};
use crate::unlearn::{
    anchor_stability_bound, deletion_capacity_base, sensitivity_kernel, unlearn_base,
    UnlearnConfig,
};

#[derive(Debug, Parser)]
#[command(name = "topic-unlearn", version, about = "Certified unlearning for anchor-word topic models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a ground truth, a corpus and optionally a downstream task.
    Synth(SynthArgs),
    /// Learn a topic model and write its statistics bundle.
    Train(TrainArgs),
    /// Forget documents from the base model and release (Ã, R̃).
    Unlearn(UnlearnArgs),
    /// Retrain on S∖S_f with forced and fresh anchors.
    Retrain(RetrainArgs),
    /// Fit a downstream head on the bundled topics.
    HeadTune(HeadTuneArgs),
    /// Forget documents through the head-only release.
    UnlearnHead(UnlearnArgs),
    /// Compare a bundle against a ground truth or another bundle.
    Eval(EvalArgs),
    /// Print deletion capacities and the anchor-stability bound.
    Capacity(CapacityArgs),
    /// Calibrate the hidden constant of the noise-free bound.
    Calibrate(CalibrateArgs),
    /// Time unlearning against retraining over a grid of corpus sizes.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct PrivacyArgs {
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eps0: f64,
    #[arg(long)]
    pub no_noise: bool,
    /// JSON UnlearnConfig supplying the hidden constants.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Take γ, p and a from this ground truth instead of plug-in estimates.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

impl PrivacyArgs {
    fn resolve(&self, trained: Option<&TrainedModel>) -> Result<UnlearnConfig> {
        let mut cfg = match &self.config {
            Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)
                .map_err(|e| Error::Format(format!("{}: {e}", p.display())))?,
            None => UnlearnConfig::default(),
        };
        cfg.epsilon = self.epsilon;
        cfg.delta = self.delta;
        cfg.eps0 = self.eps0;
        cfg.noise_enabled = !self.no_noise;
        if let Some(p) = &self.truth {
            let gt = load_truth(p)?;
            cfg.gamma = gt.gamma;
            cfg.p_sep = gt.p_sep;
            cfg.a_imbalance = gt.a_imbalance;
        } else if let Some(t) = trained {
            cfg = cfg.with_model_estimates(t);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: u64,
    /// Corpus output.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub r: usize,
    #[arg(long, default_value_t = 2_000)]
    pub m: usize,
    #[arg(long, default_value_t = 2)]
    pub doc_len: usize,
    #[arg(long, default_value_t = 0.3)]
    pub p_sep: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Ground-truth output.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Task output; requires --task-topics.
    #[arg(long)]
    pub task: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub task_topics: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    pub task_size: usize,
    #[arg(long, default_value_t = 20)]
    pub task_doc_len: usize,
    #[arg(long, default_value_t = 2.0)]
    pub head_norm: f64,
    #[arg(long, default_value_t = 0.0)]
    pub label_noise: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Bundle output.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub topics: usize,
    #[arg(long, default_value_t = 0.1)]
    pub eps0: f64,
    /// Overrides the random-projection dimension.
    #[arg(long)]
    pub projection_dim: Option<usize>,
}

#[derive(Debug, Args)]
pub struct UnlearnArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    /// Documents to delete, in corpus format.
    #[arg(long)]
    pub forget: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub privacy: PrivacyArgs,
    /// Full training corpus; enables the retrain-oracle diagnostics.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Report output (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Writes the released matrices as tab-separated text.
    #[arg(long)]
    pub released: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RetrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub forget: PathBuf,
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub privacy: PrivacyArgs,
    /// Bundle output for the forced-anchor retrain.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HeadTuneArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub task: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub lambda: f64,
    #[arg(long, default_value = "logistic")]
    pub loss: LossKind,
    /// Bundle output with the head and task embedded.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// A second bundle to compare against.
    #[arg(long)]
    pub against: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CapacityArgs {
    /// Read m, n and r from a bundle.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub r: Option<usize>,
    /// Task coverage q for the downstream capacity.
    #[arg(long)]
    pub q: Option<f64>,
    #[command(flatten)]
    pub privacy: PrivacyArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    /// Regime axes, e.g. "n=100;r=5;m=20000,50000;p_sep=0.3;alpha=0.3".
    #[arg(long, default_value = "")]
    pub grid: String,
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,40")]
    pub forget_sizes: Vec<usize>,
    #[command(flatten)]
    pub privacy: PrivacyArgs,
    /// Observation report output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Writes the calibrated configuration as JSON.
    #[arg(long)]
    pub save: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub seed: u64,
    /// Axes among n, r, doc_len, p_sep, alpha, m_u, repeats, and m (a list).
    #[arg(long, default_value = "m=10000,50000,100000")]
    pub grid: String,
    #[command(flatten)]
    pub privacy: PrivacyArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    read_corpus(open(path)?)
}

fn load_truth(path: &Path) -> Result<GroundTruth> {
    read_truth(open(path)?)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_matrix(w: &mut impl Write, name: &str, m: &DMatrix<f64>) -> Result<()> {
    writeln!(w, "# {name} {} {}", m.nrows(), m.ncols())?;
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| cell(*v)).collect();
        writeln!(w, "{}", cells.join("\t"))?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train_cmd(a),
        Command::Unlearn(a) => unlearn_cmd(a),
        Command::Retrain(a) => retrain_cmd(a),
        Command::HeadTune(a) => head_tune_cmd(a),
        Command::UnlearnHead(a) => unlearn_head_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Capacity(a) => capacity_cmd(a),
        Command::Calibrate(a) => calibrate_cmd(a),
        Command::Bench(a) => bench_cmd(a),
    }
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let gt = GroundTruth::generate(a.n, a.r, a.p_sep, &vec![a.alpha; a.r], &mut rng)?;
    let corpus = generate_corpus(&gt, a.m, a.doc_len, &mut rng)?;
    let mut w = create(&a.out)?;
    write_corpus(&corpus, &mut w)?;
    w.flush()?;
    if let Some(p) = &a.truth {
        let mut w = create(p)?;
        write_truth(&gt, &mut w)?;
        w.flush()?;
    }
    if let Some(p) = &a.task {
        if a.task_topics.is_empty() {
            return Err(Error::InvalidTask("--task requires --task-topics".into()));
        }
        let params = TaskParams {
            topic_subset: a.task_topics.clone(),
            dataset_size: a.task_size,
            label_noise: a.label_noise,
            head_norm: a.head_norm,
            doc_len: a.task_doc_len,
        };
        let task = generate_task(&gt, &params, &mut rng)?;
        let mut w = create(p)?;
        write_task(&task, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let corpus = load_corpus(&a.corpus)?;
    let opts = RecoveryOptions {
        num_topics: a.topics,
        eps0: a.eps0,
        projection_dim: a.projection_dim,
        seed: a.seed,
        ..RecoveryOptions::default()
    };
    let trained = train_from_stats(build_stats(&corpus)?, &opts)?;
    let mut prov = Provenance {
        corpus_path: Some(a.corpus.display().to_string()),
        ..Provenance::default()
    };
    prov.seeds.insert("train".into(), a.seed);
    if let Ok(serde_json::Value::Object(map)) = serde_json::to_value(&opts) {
        for (k, v) in map {
            prov.config.insert(k, v.to_string());
        }
    }
    save_bundle(&StatsBundle::from_trained(trained, prov), &a.out)
}

fn recovery_options(bundle: &StatsBundle) -> RecoveryOptions {
    RecoveryOptions {
        num_topics: bundle.anchors.len(),
        eps0: bundle.model.eps0,
        seed: bundle.anchors.seed,
        projection_dim: (bundle.anchors.projection_dim < bundle.stats.vocab_size())
            .then_some(bundle.anchors.projection_dim),
        ..RecoveryOptions::default()
    }
}

fn unlearn_cmd(a: UnlearnArgs) -> Result<()> {
    let bundle = load_bundle(&a.bundle)?;
    let trained = bundle.trained();
    let cfg = a.privacy.resolve(Some(&trained))?;
    let forget = load_corpus(&a.forget)?;
    let out = unlearn_base(&trained, &forget.docs, &cfg, a.seed)?;

    let oracle_error = match &a.corpus {
        Some(p) => {
            let remaining = load_corpus(p)?.without(&forget.docs)?;
            let oracle = retrain_oracle(&remaining, &trained, &recovery_options(&bundle), &cfg)?;
            let forced = (&out.pre_noise.topics - &oracle.forced.model.topics).amax();
            let fresh = aligned_error(
                &out.pre_noise.topics,
                &oracle.fresh.model.topics,
                Some(&trained.anchors.indices),
                Some(&oracle.fresh.anchors.indices),
            )?;
            Some((forced, fresh, oracle.anchors_changed))
        }
        None => None,
    };

    let mut rep = ExperimentReport::new(
        "unlearn",
        &[
            "m", "m_u", "capacity", "anchor_bound", "kernel", "delta_a", "sigma_a", "delta_r",
            "sigma_r", "err_forced", "err_fresh", "anchors_changed", "downdate_s", "newton_s",
            "rebuild_s", "noise_s", "digest_a",
        ],
    );
    rep.echo("seed", a.seed);
    rep.echo("bundle", a.bundle.display());
    rep.echo_config(&cfg);
    let m = trained.stats.num_docs;
    let t = &out.timings;
    let (ef, efr, ch) = match oracle_error {
        Some((f, fr, c)) => (cell(f), cell(fr), c.to_string()),
        None => ("NA".into(), "NA".into(), "NA".into()),
    };
    rep.push_row(vec![
        m.to_string(),
        out.forgotten.to_string(),
        out.capacity.to_string(),
        out.anchor_bound.to_string(),
        cell(sensitivity_kernel(&cfg, m, out.forgotten, trained.anchors.len())?),
        cell(out.noise_a.delta_sensitivity),
        cell(out.noise_a.sigma),
        cell(out.noise_r.delta_sensitivity),
        cell(out.noise_r.sigma),
        ef,
        efr,
        ch,
        cell(t.downdate.as_secs_f64()),
        cell(t.newton.as_secs_f64()),
        cell(t.rebuild.as_secs_f64()),
        cell(t.noise.as_secs_f64()),
        matrix_digest(&out.released.topics),
    ])?;
    if cfg.noise_enabled {
        rep.ledger.record("topics", &out.noise_a, &cfg);
        rep.ledger.record("topic_covariance", &out.noise_r, &cfg);
    }
    if let Some(p) = &a.released {
        let mut w = create(p)?;
        write_matrix(&mut w, "topics", &out.released.topics)?;
        write_matrix(&mut w, "topic_covariance", &out.released.topic_covariance)?;
        w.flush()?;
    }
    rep.write(a.out.as_deref())
}

fn retrain_cmd(a: RetrainArgs) -> Result<()> {
    let bundle = load_bundle(&a.bundle)?;
    let trained = bundle.trained();
    let cfg = a.privacy.resolve(Some(&trained))?;
    let forget = load_corpus(&a.forget)?;
    let remaining = load_corpus(&a.corpus)?.without(&forget.docs)?;
    let mut opts = recovery_options(&bundle);
    opts.seed = a.seed;
    let report = retrain_oracle(&remaining, &trained, &opts, &cfg)?;

    let mut rep = ExperimentReport::new(
        "retrain",
        &["m", "m_u", "within_anchor_bound", "anchors_changed", "forced_anchors", "fresh_anchors", "digest_forced", "digest_fresh"],
    );
    rep.echo("seed", a.seed);
    rep.echo_config(&cfg);
    let fmt = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    rep.push_row(vec![
        report.forced.stats.num_docs.to_string(),
        forget.len().to_string(),
        report.within_anchor_bound.to_string(),
        report.anchors_changed.to_string(),
        fmt(&report.forced.anchors.indices),
        fmt(&report.fresh.anchors.indices),
        matrix_digest(&report.forced.model.topics),
        matrix_digest(&report.fresh.model.topics),
    ])?;
    if let Some(p) = &a.out {
        let mut prov = bundle.provenance.clone();
        prov.corpus_path = Some(a.corpus.display().to_string());
        prov.seeds.insert("retrain".into(), a.seed);
        save_bundle(&StatsBundle::from_trained(report.forced, prov), p)?;
    }
    rep.write(None)
}

fn head_tune_cmd(a: HeadTuneArgs) -> Result<()> {
    let bundle = load_bundle(&a.bundle)?;
    let task = read_task(open(&a.task)?)?;
    let opts = HeadOptions {
        lambda: a.lambda,
        loss: a.loss,
        ..HeadOptions::default()
    };
    let head = head_tune(&bundle.model.topics, &task, &opts)?;
    let mut bundle = bundle.with_head(head, task);
    bundle.provenance.config.insert("lambda".into(), a.lambda.to_string());
    save_bundle(&bundle, &a.out)
}

fn unlearn_head_cmd(a: UnlearnArgs) -> Result<()> {
    let bundle = load_bundle(&a.bundle)?;
    let (head, task) = match (&bundle.head, &bundle.task) {
        (Some(h), Some(t)) => (h, t),
        _ => return Err(Error::InvalidTask("bundle carries no head; run head-tune first".into())),
    };
    let trained = bundle.trained();
    let cfg = a.privacy.resolve(Some(&trained))?;
    let forget = load_corpus(&a.forget)?;
    let rel = unlearn_realistic(&trained, head, &forget.docs, task, &cfg, a.seed)?;

    let mut rep = ExperimentReport::new(
        "unlearn-head",
        &["m", "m_u", "capacity", "anchor_bound", "kernel", "delta_v", "sigma_v", "v_tilde", "digest_a_s", "elapsed_s"],
    );
    rep.echo("seed", a.seed);
    rep.echo("bundle", a.bundle.display());
    rep.echo_config(&cfg);
    rep.echo("lambda", head.lambda_reg);
    rep.echo("head_norm_bound", head.norm_bound);
    let join = |v: &[f64]| v.iter().map(|x| cell(*x)).collect::<Vec<_>>().join(",");
    rep.push_row(vec![
        trained.stats.num_docs.to_string(),
        rel.forgotten.to_string(),
        rel.capacity.to_string(),
        rel.anchor_bound.to_string(),
        cell(rel.sensitivity.kernel),
        cell(rel.noise.delta_sensitivity),
        cell(rel.noise.sigma),
        join(&rel.v_tilde),
        matrix_digest(&trained.model.topics),
        cell(rel.elapsed.as_secs_f64()),
    ])?;
    if cfg.noise_enabled {
        rep.ledger.record("head", &rel.noise, &cfg);
    }
    if let Some(p) = &a.released {
        let mut w = create(p)?;
        let b = DMatrix::from_column_slice(rel.b_vector.len(), 1, &rel.b_vector);
        write_matrix(&mut w, "b_vector", &b)?;
        w.flush()?;
    }
    rep.write(a.out.as_deref())
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let bundle = load_bundle(&a.bundle)?;
    let mut rep = ExperimentReport::new("eval", &["reference", "err_topics", "err_covariance", "anchors_match"]);
    rep.echo("bundle", a.bundle.display());
    let model = &bundle.model;
    let mut compare = |name: String,
                       a_ref: &DMatrix<f64>,
                       r_ref: &DMatrix<f64>,
                       anchors_ref: &[usize]|
     -> Result<()> {
        let al = align_columns(&model.topics, a_ref, Some(&bundle.anchors.indices), Some(anchors_ref))?;
        let err_a = (al.apply_columns(&model.topics) - a_ref).amax();
        let err_r = (al.apply_square(&model.topic_covariance) - r_ref).amax();
        let mut mine: Vec<usize> = bundle.anchors.indices.clone();
        let mut theirs = anchors_ref.to_vec();
        mine.sort_unstable();
        theirs.sort_unstable();
        rep.push_row(vec![name, cell(err_a), cell(err_r), (mine == theirs).to_string()])
    };
    if let Some(p) = &a.truth {
        let gt = load_truth(p)?;
        compare(p.display().to_string(), &gt.a_star, &gt.topic_moments(), &gt.anchor_indices)?;
    }
    if let Some(p) = &a.against {
        let other = load_bundle(p)?;
        compare(
            p.display().to_string(),
            &other.model.topics,
            &other.model.topic_covariance,
            &other.anchors.indices,
        )?;
    }
    if a.truth.is_none() && a.against.is_none() {
        return Err(Error::InvalidParameter("eval needs --truth or --against".into()));
    }
    rep.write(a.out.as_deref())
}

fn capacity_cmd(a: CapacityArgs) -> Result<()> {
    let bundle = a.bundle.as_deref().map(load_bundle).transpose()?;
    let trained = bundle.as_ref().map(|b| b.trained());
    let pick = |flag: Option<usize>, from: Option<usize>, name: &str| {
        flag.or(from)
            .ok_or_else(|| Error::InvalidParameter(format!("--{name} or --bundle is required")))
    };
    let m = pick(a.m, trained.as_ref().map(|t| t.stats.num_docs), "m")?;
    let n = pick(a.n, trained.as_ref().map(|t| t.stats.vocab_size()), "n")?;
    let r = pick(a.r, trained.as_ref().map(|t| t.anchors.len()), "r")?;
    let q = a.q.or(bundle.as_ref().and_then(|b| b.task.as_ref().map(|t| t.q)));
    let cfg = a.privacy.resolve(trained.as_ref())?;

    let mut rep = ExperimentReport::new("capacity", &["m", "n", "r", "q", "base", "downstream", "anchor_bound"]);
    rep.echo_config(&cfg);
    let downstream = match q {
        Some(q) => deletion_capacity_downstream(&cfg, m, n, r, q)?.to_string(),
        None => "NA".into(),
    };
    rep.push_row(vec![
        m.to_string(),
        n.to_string(),
        r.to_string(),
        q.map(cell).unwrap_or_else(|| "NA".into()),
        deletion_capacity_base(&cfg, m, n, r).to_string(),
        downstream,
        anchor_stability_bound(&cfg, m, r).to_string(),
    ])?;
    rep.write(a.out.as_deref())
}

fn calibrate_cmd(a: CalibrateArgs) -> Result<()> {
    let cfg = a.privacy.resolve(None)?;
    let mut regimes = Vec::new();
    for (i, pt) in expand_grid(&parse_grid(&a.grid)?).into_iter().enumerate() {
        regimes.push(Regime {
            name: format!("regime{i}"),
            n: pt.get("n", 100)?,
            r: pt.get("r", 5)?,
            m: pt.get("m", 20_000)?,
            doc_len: pt.get("doc_len", 2)?,
            p_sep: pt.get("p_sep", 0.3)?,
            alpha: pt.get("alpha", 0.3)?,
            row_concentration: pt.get("row_concentration", 1.0)?,
            forget_sizes: a.forget_sizes.clone(),
        });
    }
    let seeds: Vec<u64> = (0..a.seeds).map(|k| a.seed.wrapping_add(k)).collect();
    let opts = RecoveryOptions {
        eps0: cfg.eps0,
        ..RecoveryOptions::default()
    };
    let report = calibrate_constants(&cfg, &regimes, &seeds, &opts, DEFAULT_MIN_CONSTANT)?;

    let mut rep = ExperimentReport::new(
        "calibrate",
        &["regime", "n", "r", "m", "seed", "m_u", "error", "kernel", "ratio", "anchors_changed", "constant"],
    );
    rep.echo("seed", a.seed);
    rep.echo("seeds", a.seeds);
    rep.echo_config(&cfg);
    for cal in &report.regimes {
        let g = &cal.regime;
        for o in &cal.observations {
            rep.push_row(vec![
                g.name.clone(),
                g.n.to_string(),
                g.r.to_string(),
                g.m.to_string(),
                o.seed.to_string(),
                o.m_u.to_string(),
                cell(o.error),
                cell(o.kernel),
                cell(o.ratio),
                o.anchors_changed.to_string(),
                cell(cal.constant),
            ])?;
        }
    }
    if let Some(p) = &a.save {
        let updated = report.apply(&cfg);
        let json = serde_json::to_string_pretty(&updated).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(p, json)?;
    }
    rep.write(a.out.as_deref())
}

fn bench_cmd(a: BenchArgs) -> Result<()> {
    let axes = parse_grid(&a.grid)?;
    let ms: Vec<usize> = axes
        .iter()
        .find(|(k, _)| k == "m")
        .map(|(_, v)| v.iter().map(|s| s.parse().map_err(|_| Error::Format(format!("bad m {s}")))).collect())
        .transpose()?
        .unwrap_or_else(|| BenchGrid::default().ms);
    let rest: Vec<(String, Vec<String>)> = axes.into_iter().filter(|(k, _)| k != "m").collect();
    let points = expand_grid(&rest);
    let cfg = a.privacy.resolve(None)?;
    let d = BenchGrid::default();
    let mut text = String::new();
    for pt in points {
        let grid = BenchGrid {
            n: pt.get("n", d.n)?,
            r: pt.get("r", d.r)?,
            doc_len: pt.get("doc_len", d.doc_len)?,
            p_sep: pt.get("p_sep", d.p_sep)?,
            alpha: pt.get("alpha", d.alpha)?,
            ms: ms.clone(),
            m_u: pt.get("m_u", d.m_u)?,
            repeats: pt.get("repeats", d.repeats)?,
            seed: a.seed,
        };
        let opts = RecoveryOptions {
            eps0: cfg.eps0,
            ..RecoveryOptions::default()
        };
        let summary = bench_runtime(&grid, &cfg, &opts)?;
        text.push_str(&summary.to_report(&cfg).to_tsv());
    }
    match &a.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
