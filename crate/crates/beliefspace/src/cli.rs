//! Command-line surface. Every command writes its artifacts and a
//! `manifest.json` into `--out`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use beliefspace_core::corpus::{make_folds, render_statement, FoldSplit};
use beliefspace_core::dissonance::{self, DstarBinning};
use beliefspace_core::encoder::format::{model_to_bytes, vectors_to_bytes};
use beliefspace_core::encoder::{
    self, EncoderModel, PrecomputedStore, StatementVectors, TrainConfig,
};
use beliefspace_core::evalkit::{
    eval_triplets, fold_seed, EncoderSource, PipelineConfig, Split, TEST_TRIPLET_SOURCE,
};
use beliefspace_core::predict::{self, DEFAULT_HISTORY_THRESHOLDS};
use beliefspace_core::profile::{Grouping, Party, Profiles};
use beliefspace_core::space::{self, fit_pca, select_by_keywords};
use beliefspace_core::stats;
use beliefspace_core::synth::{generate_synthetic, SynthConfig};
use beliefspace_core::triplets::{sample_triplets, triplet_stats, CoocTable, SamplingConfig};
use beliefspace_core::{BeliefKey, Corpus, Polarity, UserIdx};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::bundle;
use crate::config::apply_config;
use crate::error::{CliError, CliResult};
use crate::export;
use crate::io;
use crate::manifest::{fmt_f64, Manifest, OutputDir};
use crate::svg::{Plot, Series};

#[derive(Debug, Parser)]
#[command(
    name = "beliefspace",
    version,
    about = "Belief embeddings, stance prediction and dissonance analysis from debate votes"
)]
#[command(
    after_help = "Settings can also come from `--config FILE` (key = value lines); flags win over the file."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus with planted communities.
    Synth(SynthArgs),
    /// Validate and normalize debates, votes and exclusions.
    Ingest(IngestArgs),
    /// Sample anchor/positive/negative triplets for one fold.
    Triplets(TripletArgs),
    /// Train the hashed n-gram encoder on one fold's train triplets.
    Train(TrainArgs),
    /// Encode statements into vectors.
    Encode(EncodeArgs),
    /// Principal components of statement vectors.
    Pca(PcaArgs),
    /// Issue polarization between users' self-reported camps.
    Polarization(PolarizationArgs),
    /// Predict held-out stances for one fold.
    Predict(PredictArgs),
    /// Accuracy against relative dissonance, by group and category.
    Dissonance(DissonanceArgs),
    /// Full k-fold pipeline, written as a report bundle.
    Eval(EvalArgs),
    /// Re-aggregate a finished report bundle.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct CorpusInput {
    /// Debates, JSON Lines.
    #[arg(long)]
    pub debates: PathBuf,
    /// Votes, CSV with header user_id,debate_id,polarity.
    #[arg(long)]
    pub votes: PathBuf,
    /// Debate ids to drop, one per line.
    #[arg(long)]
    pub exclusions: Option<PathBuf>,
}

impl CorpusInput {
    fn load(&self, manifest: &mut Manifest) -> CliResult<Corpus> {
        manifest.input(&self.debates)?.input(&self.votes)?;
        if let Some(e) = &self.exclusions {
            manifest.input(e)?;
        }
        Ok(io::load_corpus(&self.debates, &self.votes, self.exclusions.as_deref())?.0)
    }
}

#[derive(Debug, Args)]
pub struct FoldSelect {
    /// Number of folds.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Fold whose test part is held out.
    #[arg(long, default_value_t = 0)]
    pub fold: usize,
}

impl FoldSelect {
    fn split(&self, corpus: &Corpus, seed: u64) -> CliResult<FoldSplit> {
        if self.fold >= self.k {
            return Err(CliError::Usage(format!(
                "--fold {} out of range for --k {}",
                self.fold, self.k
            )));
        }
        let mut folds =
            make_folds(corpus, self.k, seed).map_err(CliError::data("fold assignment"))?;
        Ok(folds.swap_remove(self.fold))
    }

    fn record(&self, m: &mut Manifest) {
        m.set("k", self.k).set("fold", self.fold);
    }
}

#[derive(Debug, Args)]
pub struct SamplingArgs {
    /// Positives per anchor.
    #[arg(long, default_value_t = 5)]
    pub max_pos: usize,
    /// Negatives per anchor.
    #[arg(long, default_value_t = 5)]
    pub max_neg: usize,
    /// Do not force the anchor's opposite in as a negative.
    #[arg(long)]
    pub no_force_opposite: bool,
}

impl SamplingArgs {
    fn config(&self) -> SamplingConfig {
        SamplingConfig {
            max_pos: self.max_pos,
            max_neg: self.max_neg,
            force_opposite: !self.no_force_opposite,
        }
    }

    fn record(&self, m: &mut Manifest) {
        m.set("max-pos", self.max_pos)
            .set("max-neg", self.max_neg)
            .set("force-opposite", !self.no_force_opposite);
    }
}

#[derive(Debug, Args)]
pub struct TrainingArgs {
    #[arg(long, default_value_t = TrainConfig::default().dim)]
    pub dim: usize,
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    pub lr: f64,
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    pub batch_size: usize,
    /// Triplet margin.
    #[arg(long, default_value_t = TrainConfig::default().margin)]
    pub margin: f64,
    /// Feature hash buckets.
    #[arg(long, default_value_t = TrainConfig::default().buckets)]
    pub buckets: u32,
    #[arg(long, default_value_t = TrainConfig::default().hash_seed)]
    pub hash_seed: u64,
    /// Standard deviation of the initial weights.
    #[arg(long, default_value_t = TrainConfig::default().init_scale)]
    pub init_scale: f64,
}

impl TrainingArgs {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            dim: self.dim,
            margin: self.margin,
            learning_rate: self.lr,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
            buckets: self.buckets,
            hash_seed: self.hash_seed,
            init_scale: self.init_scale,
        }
    }

    fn record(&self, m: &mut Manifest) {
        m.set("dim", self.dim)
            .set("epochs", self.epochs)
            .set("lr", self.lr)
            .set("batch-size", self.batch_size)
            .set("margin", self.margin)
            .set("buckets", self.buckets)
            .set("hash-seed", self.hash_seed)
            .set("init-scale", self.init_scale);
    }
}

#[derive(Debug, Args)]
pub struct EncoderInput {
    /// Model file written by `train`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Precomputed statement vectors (JSON Lines or binary).
    #[arg(long)]
    pub vectors: Option<PathBuf>,
}

impl EncoderInput {
    fn is_set(&self) -> bool {
        self.model.is_some() || self.vectors.is_some()
    }

    fn load(&self, manifest: &mut Manifest) -> CliResult<EncoderModel> {
        let model = io::load_encoder(self.model.as_deref(), self.vectors.as_deref())?;
        for p in self.model.iter().chain(&self.vectors) {
            manifest.input(p)?;
        }
        Ok(model)
    }
}

#[derive(Debug, Args)]
pub struct DstarArgs {
    /// Width of the d* bins.
    #[arg(long, default_value_t = DstarBinning::default().width)]
    pub dstar_width: f64,
    /// Start of the d* overflow bin.
    #[arg(long, default_value_t = DstarBinning::default().upper)]
    pub dstar_upper: f64,
    /// Label permutations for the slope test.
    #[arg(long, default_value_t = 1000)]
    pub permutations: usize,
}

impl DstarArgs {
    fn binning(&self) -> CliResult<DstarBinning> {
        DstarBinning::new(self.dstar_width, self.dstar_upper)
            .map_err(|e| CliError::Usage(format!("--dstar-width/--dstar-upper: {e}")))
    }

    fn record(&self, m: &mut Manifest) {
        m.set("dstar-width", self.dstar_width)
            .set("dstar-upper", self.dstar_upper)
            .set("permutations", self.permutations);
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub users: usize,
    #[arg(long, default_value_t = 60)]
    pub debates: usize,
    #[arg(long, default_value_t = 2)]
    pub communities: usize,
    /// Probability that a vote follows the user's community.
    #[arg(long, default_value_t = 0.95)]
    pub alignment: f64,
    /// Fraction of users voting by coin flip.
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    /// Probability that a user votes on a given debate.
    #[arg(long, default_value_t = 0.3)]
    pub participation: f64,
    #[arg(long, default_value_t = 4)]
    pub categories: usize,
    #[arg(long, default_value_t = 6)]
    pub issues: usize,
    #[arg(long, required = true)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub corpus: CorpusInput,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TripletArgs {
    #[command(flatten)]
    pub corpus: CorpusInput,
    #[command(flatten)]
    pub fold: FoldSelect,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Sample from every debate instead of one fold's train part.
    #[arg(long)]
    pub whole_corpus: bool,
    #[arg(long, required = true)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusInput,
    #[command(flatten)]
    pub fold: FoldSelect,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub training: TrainingArgs,
    /// Train on every debate instead of one fold's train part.
    #[arg(long)]
    pub whole_corpus: bool,
    #[arg(long, required = true)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub encoder: EncoderInput,
    /// Encode both statements of every debate in this file.
    #[arg(long, conflicts_with = "texts")]
    pub debates: Option<PathBuf>,
    /// Encode each non-blank line of this file.
    #[arg(long)]
    pub texts: Option<PathBuf>,
    /// Also write the binary vector file.
    #[arg(long)]
    pub binary: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    #[command(flatten)]
    pub encoder: EncoderInput,
    #[arg(long)]
    pub debates: PathBuf,
    /// Restrict to debates whose titles contain one of these phrases (one per line).
    #[arg(long)]
    pub keywords: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub components: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PolarizationArgs {
    #[command(flatten)]
    pub encoder: EncoderInput,
    #[command(flatten)]
    pub corpus: CorpusInput,
    /// Profiles, JSON Lines.
    #[arg(long)]
    pub profiles: PathBuf,
    /// The two parties compared by the pro-ratio gap.
    #[arg(long, num_args = 2, default_values_t = [String::from("Democratic"), String::from("Republican")])]
    pub parties: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub encoder: EncoderInput,
    #[command(flatten)]
    pub corpus: CorpusInput,
    #[command(flatten)]
    pub fold: FoldSelect,
    /// Bin width of the distance curves.
    #[arg(long, default_value_t = 1.0)]
    pub distance_width: f64,
    #[arg(long, required = true)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DissonanceArgs {
    /// Outcomes CSV written by `predict` or `eval`.
    #[arg(long)]
    pub outcomes: PathBuf,
    /// Profiles for the party and religion comparisons.
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    #[command(flatten)]
    pub dstar: DstarArgs,
    #[arg(long, required = true)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub corpus: CorpusInput,
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// STS pairs (TSV: sentence_a, sentence_b, score).
    #[arg(long)]
    pub sts: Option<PathBuf>,
    /// Fixed encoder for every fold instead of per-fold training.
    #[command(flatten)]
    pub encoder: EncoderInput,
    #[command(flatten)]
    pub training: TrainingArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub dstar: DstarArgs,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 1.0)]
    pub distance_width: f64,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, required = true)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Bundle directory written by `eval`.
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parse `args` (program name first), run the command and return the exit code.
pub fn run(args: Vec<String>) -> u8 {
    let args = match apply_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Synth(a) => synth(a),
        Command::Ingest(a) => ingest(a),
        Command::Triplets(a) => triplets(a),
        Command::Train(a) => train(a),
        Command::Encode(a) => encode(a),
        Command::Pca(a) => pca(a),
        Command::Polarization(a) => polarization(a),
        Command::Predict(a) => predict_cmd(a),
        Command::Dissonance(a) => dissonance_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Report(a) => report(a),
    }
}

fn synth(a: SynthArgs) -> CliResult<()> {
    let config = SynthConfig {
        n_users: a.users,
        n_debates: a.debates,
        n_communities: a.communities,
        alignment: a.alignment,
        noise: a.noise,
        participation: a.participation,
        n_categories: a.categories,
        n_issues: a.issues,
        category_alignment: None,
        seed: a.seed,
    };
    let s = generate_synthetic(&config).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut m = Manifest::new("synth", Some(a.seed));
    m.set("users", a.users)
        .set("debates", a.debates)
        .set("communities", a.communities)
        .set("alignment", a.alignment)
        .set("noise", a.noise)
        .set("participation", a.participation)
        .set("categories", a.categories)
        .set("issues", a.issues);
    let mut out = OutputDir::create(&a.out)?;
    out.write("debates.jsonl", io::debates_to_jsonl(s.corpus.debates()))?;
    out.write("votes.csv", io::votes_to_csv(&s.corpus))?;
    out.write("profiles.jsonl", io::profiles_to_jsonl(&s.profiles))?;
    let l = &s.labels;
    let users: Vec<_> = s
        .corpus
        .users()
        .iter()
        .enumerate()
        .map(|(u, id)| json!({ "user_id": id, "community": l.community[u], "noisy": l.noisy[u] }))
        .collect();
    let debates: Vec<_> = s
        .corpus
        .debates()
        .iter()
        .enumerate()
        .map(|(j, d)| json!({ "debate_id": d.debate_id, "threshold": l.thresholds[j], "aligned": l.aligned[j] }))
        .collect();
    out.json(
        "planted.json",
        &json!({
            "ideal_points": l.ideal_points,
            "issue_strengths": l.issue_strengths,
            "users": users,
            "debates": debates,
        }),
    )?;
    out.finish(m)?;
    println!(
        "synthetic corpus: {} users, {} debates, {} votes -> {}",
        s.corpus.n_users(),
        s.corpus.n_debates(),
        s.corpus.votes().len(),
        a.out.display()
    );
    Ok(())
}

fn ingest(a: IngestArgs) -> CliResult<()> {
    let mut m = Manifest::new("ingest", None);
    m.input(&a.corpus.debates)?.input(&a.corpus.votes)?;
    if let Some(e) = &a.corpus.exclusions {
        m.input(e)?;
    }
    let (corpus, report) = io::load_corpus(
        &a.corpus.debates,
        &a.corpus.votes,
        a.corpus.exclusions.as_deref(),
    )?;
    let mut out = OutputDir::create(&a.out)?;
    out.write("debates.jsonl", io::debates_to_jsonl(corpus.debates()))?;
    out.write("votes.csv", io::votes_to_csv(&corpus))?;
    out.json("ingest_report.json", &report)?;
    out.finish(m)?;
    println!(
        "kept {} debates, {} votes, {} users ({} TIE votes dropped, {} duplicates replaced)",
        report.debates_kept,
        report.votes_kept,
        report.unique_users,
        report.tie_votes_dropped,
        report.duplicate_votes_replaced
    );
    Ok(())
}

/// Train-side corpus of the selected fold, or the whole corpus.
fn train_part(
    corpus: &Corpus,
    fold: &FoldSelect,
    whole: bool,
    seed: u64,
) -> CliResult<(Corpus, Option<FoldSplit>)> {
    if whole {
        return Ok((corpus.clone(), None));
    }
    let split = fold.split(corpus, seed)?;
    Ok((corpus.restrict(&split.train_mask()), Some(split)))
}

fn triplets(a: TripletArgs) -> CliResult<()> {
    let mut m = Manifest::new("triplets", Some(a.seed));
    let corpus = a.corpus.load(&mut m)?;
    a.fold.record(&mut m);
    a.sampling.record(&mut m);
    m.set("whole-corpus", a.whole_corpus);
    let (train, split) = train_part(&corpus, &a.fold, a.whole_corpus, a.seed)?;
    let sampling = a.sampling.config();
    let sampled = sample_triplets(
        &CoocTable::build(&train),
        &train,
        &sampling,
        fold_seed(a.seed, "fold-train-triplets", a.fold.fold),
    );
    let mut out = OutputDir::create(&a.out)?;
    export::triplets(&mut out, "triplets.csv", &corpus, &sampled.triplets)?;
    let mut summary = json!({
        "train": { "stats": triplet_stats(&sampled.triplets, &corpus), "sampling": sampled.report },
    });
    if let Some(split) = split {
        let test = corpus.restrict(&split.test_mask());
        let t = sample_triplets(
            &CoocTable::build(&test),
            &test,
            &sampling,
            fold_seed(a.seed, "fold-test-triplets", a.fold.fold),
        );
        export::triplets(&mut out, "test_triplets.csv", &corpus, &t.triplets)?;
        summary["test"] = json!({ "stats": triplet_stats(&t.triplets, &corpus), "sampling": t.report, "source": TEST_TRIPLET_SOURCE });
    }
    out.json("triplet_stats.json", &summary)?;
    out.finish(m)?;
    println!(
        "{} train triplets -> {}",
        sampled.triplets.len(),
        a.out.display()
    );
    Ok(())
}

fn train(a: TrainArgs) -> CliResult<()> {
    let mut m = Manifest::new("train", Some(a.seed));
    let corpus = a.corpus.load(&mut m)?;
    a.fold.record(&mut m);
    a.sampling.record(&mut m);
    a.training.record(&mut m);
    m.set("whole-corpus", a.whole_corpus);
    let (train_corpus, split) = train_part(&corpus, &a.fold, a.whole_corpus, a.seed)?;
    let sampled = sample_triplets(
        &CoocTable::build(&train_corpus),
        &train_corpus,
        &a.sampling.config(),
        fold_seed(a.seed, "fold-train-triplets", a.fold.fold),
    );
    if sampled.triplets.is_empty() {
        return Err(CliError::Invalid(
            "no train triplets could be sampled".into(),
        ));
    }
    let config = a
        .training
        .config(fold_seed(a.seed, "fold-train", a.fold.fold));
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let outcome =
        encoder::train(&sampled.triplets, &corpus, &config).map_err(CliError::data("training"))?;
    let model = EncoderModel::Trained(outcome.model);
    let train_eval = eval_triplets(&model, &corpus, &sampled.triplets, Split::Train)
        .map_err(CliError::data("train triplet evaluation"))?;
    let test_eval = match &split {
        Some(split) => {
            let test = corpus.restrict(&split.test_mask());
            let t = sample_triplets(
                &CoocTable::build(&test),
                &test,
                &a.sampling.config(),
                fold_seed(a.seed, "fold-test-triplets", a.fold.fold),
            );
            if t.triplets.is_empty() {
                None
            } else {
                Some(
                    eval_triplets(&model, &corpus, &t.triplets, Split::Test)
                        .map_err(CliError::data("test triplet evaluation"))?,
                )
            }
        }
        None => None,
    };
    let mut out = OutputDir::create(&a.out)?;
    out.write("model.blfm", model_to_bytes(&model))?;
    export::loss_trace(&mut out, "loss.csv", &outcome.loss_trace)?;
    out.json(
        "train_eval.json",
        &json!({ "train": train_eval, "test": test_eval, "triplets": triplet_stats(&sampled.triplets, &corpus) }),
    )?;
    out.finish(m)?;
    println!(
        "trained on {} triplets; train triplet accuracy {:.4}{} -> {}",
        sampled.triplets.len(),
        train_eval.accuracy,
        test_eval
            .map(|t| format!(", test {:.4}", t.accuracy))
            .unwrap_or_default(),
        a.out.display()
    );
    Ok(())
}

fn encode(a: EncodeArgs) -> CliResult<()> {
    let mut m = Manifest::new("encode", None);
    let model = a.encoder.load(&mut m)?;
    let texts: Vec<String> = match (&a.debates, &a.texts) {
        (Some(d), None) => {
            m.input(d)?;
            let mut texts = Vec::new();
            for debate in io::read_debates(d)? {
                for p in Polarity::BOTH {
                    texts.push(
                        render_statement(&debate.title, p)
                            .map_err(CliError::data(format!("debate {}", debate.debate_id)))?,
                    );
                }
            }
            texts
        }
        (None, Some(t)) => {
            m.input(t)?;
            io::read_text(t)?
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(String::from)
                .collect()
        }
        _ => {
            return Err(CliError::Usage(
                "one of --debates or --texts is required".into(),
            ))
        }
    };
    let vectors = model
        .encode_batch(&texts)
        .map_err(CliError::data("encoding"))?;
    let store = PrecomputedStore::from_pairs(model.dim(), texts.into_iter().zip(vectors))
        .map_err(CliError::data("vector store"))?;
    let mut out = OutputDir::create(&a.out)?;
    out.write("vectors.jsonl", io::vectors_to_jsonl(&store))?;
    if a.binary {
        out.write("vectors.blfv", vectors_to_bytes(&store))?;
    }
    out.finish(m)?;
    println!(
        "encoded {} statements (dim {}) -> {}",
        store.len(),
        store.dim(),
        a.out.display()
    );
    Ok(())
}

fn pca(a: PcaArgs) -> CliResult<()> {
    let mut m = Manifest::new("pca", None);
    let model = a.encoder.load(&mut m)?;
    m.input(&a.debates)?;
    m.set("components", a.components);
    let debates = io::read_debates(&a.debates)?;
    let corpus = Corpus::from_records(debates, Vec::new(), &Default::default())
        .map_err(CliError::data(a.debates.display().to_string()))?
        .0;
    let keys: Vec<BeliefKey> = match &a.keywords {
        Some(k) => {
            m.input(k)?;
            select_by_keywords(&corpus, &io::read_keywords(k)?)
        }
        None => (0..corpus.n_debates() as u32)
            .flat_map(|j| Polarity::BOTH.map(|p| BeliefKey::new(beliefspace_core::DebateIdx(j), p)))
            .collect(),
    };
    let texts: Vec<String> = keys.iter().map(|&k| corpus.statement(k)).collect();
    let vectors = model
        .encode_batch(&texts)
        .map_err(CliError::data("encoding"))?;
    let fit = fit_pca(&vectors, a.components).map_err(CliError::data("PCA"))?;
    let coords: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| fit.project(v))
        .collect::<Result<_, _>>()
        .map_err(CliError::data("projection"))?;

    let mut out = OutputDir::create(&a.out)?;
    let mut header = vec!["debate_id".to_owned(), "polarity".to_owned()];
    header.extend((1..=a.components).map(|i| format!("pc{i}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv(
        "pc_coords.csv",
        &header_refs,
        keys.iter().zip(&coords).map(|(k, c)| {
            let mut row = vec![
                corpus.debate(k.debate).debate_id.clone(),
                k.polarity.as_str().to_owned(),
            ];
            row.extend(c.iter().map(|&x| fmt_f64(x)));
            row
        }),
    )?;
    let ratios = fit.explained_ratio();
    out.csv(
        "explained.csv",
        &["component", "eigenvalue", "explained_ratio"],
        fit.eigenvalues
            .iter()
            .zip(&ratios)
            .enumerate()
            .map(|(i, (e, r))| [(i + 1).to_string(), fmt_f64(*e), fmt_f64(*r)]),
    )?;
    if a.components >= 2 {
        let mut plot = Plot::new("Belief statements, first two components", "PC1", "PC2");
        for p in Polarity::BOTH {
            let pts: Vec<(f64, f64)> = keys
                .iter()
                .zip(&coords)
                .filter(|(k, _)| k.polarity == p)
                .map(|(_, c)| (c[0], c[1]))
                .collect();
            plot = plot.with(Series::points(p.as_str(), pts));
        }
        out.write("pca.svg", plot.render()?.into_bytes())?;
    }
    out.finish(m)?;
    println!(
        "{} statements on {} components (explained {}) -> {}",
        keys.len(),
        a.components,
        ratios
            .iter()
            .map(|r| format!("{r:.3}"))
            .collect::<Vec<_>>()
            .join(", "),
        a.out.display()
    );
    Ok(())
}

fn polarization(a: PolarizationArgs) -> CliResult<()> {
    let mut m = Manifest::new("polarization", None);
    let model = a.encoder.load(&mut m)?;
    let corpus = a.corpus.load(&mut m)?;
    m.input(&a.profiles)?;
    m.set("parties", a.parties.join(","));
    let profiles = io::read_profiles(&a.profiles)?;
    let users: Vec<UserIdx> = (0..corpus.n_users() as u32).map(UserIdx).collect();
    let emb = space::user_embeddings(
        &mut StatementVectors::new(&model, &corpus),
        &corpus,
        &users,
        None,
    )
    .map_err(CliError::data("user embeddings"))?
    .embeddings;
    let (pa, pb) = (Party::parse(&a.parties[0]), Party::parse(&a.parties[1]));
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for issue in space::issue_names(&profiles) {
        match space::polarization(&emb, &corpus, &profiles, &issue) {
            Ok(r) => {
                let gap = space::pro_ratio_gap(&profiles, &issue, &pa, &pb).ok();
                records.push((r, gap));
            }
            Err(e) => skipped.push(format!("{issue}: {e}")),
        }
    }
    let gaps: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|(r, g)| g.map(|g| (g, r.euclid)))
        .collect();
    let (gx, gy): (Vec<f64>, Vec<f64>) = gaps.into_iter().unzip();
    let euclid: Vec<f64> = records.iter().map(|(r, _)| r.euclid).collect();
    let cosine: Vec<f64> = records.iter().map(|(r, _)| r.cosine).collect();

    let mut out = OutputDir::create(&a.out)?;
    export::polarization(&mut out, &records)?;
    out.json(
        "polarization.json",
        &json!({
            "users": emb.len(),
            "issues": records.len(),
            "skipped_issues": skipped,
            "gap_vs_euclid_pearson": stats::pearson(&gx, &gy).ok(),
            "euclid_vs_cosine_spearman": stats::spearman(&euclid, &cosine).ok(),
        }),
    )?;
    if emb.len() >= 2 {
        let vectors: Vec<Vec<f64>> = emb.iter().map(|e| e.vector.clone()).collect();
        let fit = fit_pca(&vectors, 2.min(model.dim())).map_err(CliError::data("user PCA"))?;
        let mut by_party: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
        let mut rows = Vec::new();
        for e in &emb {
            let c = fit
                .project(&e.vector)
                .map_err(CliError::data("projection"))?;
            let id = corpus.user_id(e.user);
            let party = profiles
                .get(id)
                .and_then(|p| p.party.as_ref())
                .map_or("unknown".to_owned(), |p| p.as_str().to_owned());
            let y = c.get(1).copied().unwrap_or(0.0);
            by_party.entry(party.clone()).or_default().push((c[0], y));
            rows.push([
                id.to_owned(),
                party,
                e.support.to_string(),
                fmt_f64(c[0]),
                fmt_f64(y),
            ]);
        }
        out.csv(
            "user_coords.csv",
            &["user_id", "party", "votes", "pc1", "pc2"],
            rows,
        )?;
        let plot = by_party.into_iter().fold(
            Plot::new("Users by party, first two components", "PC1", "PC2"),
            |p, (party, pts)| p.with(Series::points(party, pts)),
        );
        out.write("users.svg", plot.render()?.into_bytes())?;
    }
    out.finish(m)?;
    for (r, g) in &records {
        println!(
            "{:<20} euclid {:.4}  cosine {:.4}  gap {}",
            r.issue,
            r.euclid,
            r.cosine,
            g.map_or("-".to_owned(), |g| format!("{g:.4}"))
        );
    }
    Ok(())
}

fn predict_cmd(a: PredictArgs) -> CliResult<()> {
    let mut m = Manifest::new("predict", Some(a.seed));
    let model = a.encoder.load(&mut m)?;
    let corpus = a.corpus.load(&mut m)?;
    a.fold.record(&mut m);
    m.set("distance-width", a.distance_width);
    let split = a.fold.split(&corpus, a.seed)?;
    let fo = predict::run_fold(&model, &corpus, &split).map_err(CliError::data("prediction"))?;
    let outcomes = &fo.outcomes;
    let breakdown = predict::breakdown(outcomes, &DEFAULT_HISTORY_THRESHOLDS);
    let distance = predict::distance_response(outcomes, a.distance_width)
        .map_err(|e| CliError::Usage(format!("--distance-width: {e}")))?;
    let mut out = OutputDir::create(&a.out)?;
    export::outcomes(&mut out, "outcomes.csv", outcomes)?;
    out.json(
        "metrics.json",
        &json!({
            "fold": a.fold.fold,
            "evaluable_users": fo.user_embeddings.len(),
            "skipped_users": fo.skipped_users.len(),
            "ties": outcomes.iter().filter(|o| o.tie).count(),
            "metrics": breakdown,
            "baseline_random": predict::baseline_random(outcomes, fold_seed(a.seed, "fold-baseline", a.fold.fold)),
            "baseline_majority": predict::baseline_majority(fo.train_majority, outcomes),
            "train_majority": fo.train_majority,
            "distance": distance,
        }),
    )?;
    export::distance(&mut out, "", &distance)?;
    out.finish(m)?;
    println!(
        "{} predictions: accuracy {:.4}, macro-F1 {:.4} -> {}",
        breakdown.overall.n,
        breakdown.overall.accuracy,
        breakdown.overall.macro_f1,
        a.out.display()
    );
    Ok(())
}

fn dissonance_cmd(a: DissonanceArgs) -> CliResult<()> {
    let mut m = Manifest::new("dissonance", Some(a.seed));
    m.input(&a.outcomes)?;
    a.dstar.record(&mut m);
    let binning = a.dstar.binning()?;
    let outcomes = io::read_outcomes(&a.outcomes)?;
    if outcomes.is_empty() {
        return Err(CliError::Invalid(format!(
            "{}: no outcomes",
            a.outcomes.display()
        )));
    }
    let profiles: Option<Profiles> = match &a.profiles {
        Some(p) => {
            m.input(p)?;
            Some(io::read_profiles(p)?)
        }
        None => None,
    };
    let curve = dissonance::accuracy_vs_dstar(&outcomes, &binning);
    let trend =
        dissonance::slope_permutation_test(&outcomes, &binning, a.dstar.permutations, a.seed);
    let mut notes = Vec::new();
    let mut groups = Vec::new();
    if let Some(p) = &profiles {
        for (name, g) in [("party", Grouping::Party), ("religion", Grouping::Religion)] {
            match dissonance::group_compare(&outcomes, p, g, &binning) {
                Ok(c) => groups.push((name, c)),
                Err(e) => notes.push(format!("{name}: {e}")),
            }
        }
    }
    let categories = dissonance::category_table(&outcomes);
    let correlation = match dissonance::category_dstar_correlation(&outcomes) {
        Ok(c) => Some(c.pearson),
        Err(e) => {
            notes.push(format!("category correlation: {e}"));
            None
        }
    };

    let mut out = OutputDir::create(&a.out)?;
    export::dstar_curve(&mut out, "", &curve)?;
    let group_refs: Vec<(&str, &_)> = groups.iter().map(|(n, c)| (*n, c)).collect();
    export::group_comparisons(&mut out, "", &group_refs)?;
    export::categories(&mut out, "", &categories)?;
    out.json(
        "dissonance.json",
        &json!({
            "outcomes": outcomes.len(),
            "excluded_zero_d_min": curve.excluded,
            "slope": curve.slope,
            "permutation_test": trend,
            "category_pearson": correlation,
            "notes": notes,
        }),
    )?;
    out.finish(m)?;
    println!(
        "d* slope {} (one-sided permutation p = {}) over {} outcomes -> {}",
        fmt_f64(curve.slope),
        fmt_f64(trend.p_value),
        outcomes.len(),
        a.out.display()
    );
    Ok(())
}

/// Pipeline settings shared by `eval` and the acceptance harness.
pub fn pipeline_config(a: &EvalArgs, fixed: Option<EncoderModel>) -> CliResult<PipelineConfig> {
    let train = a.training.config(a.seed);
    if fixed.is_none() {
        train
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(PipelineConfig {
        k: a.k,
        seed: a.seed,
        encoder: match fixed {
            Some(m) => EncoderSource::Fixed(m),
            None => EncoderSource::Train(train),
        },
        sampling: a.sampling.config(),
        distance_width: a.distance_width,
        dstar: a.dstar.binning()?,
        permutations: a.dstar.permutations,
        history_thresholds: DEFAULT_HISTORY_THRESHOLDS.to_vec(),
    })
}

fn eval(a: EvalArgs) -> CliResult<()> {
    let mut m = Manifest::new("eval", Some(a.seed));
    let corpus = a.corpus.load(&mut m)?;
    let profiles = match &a.profiles {
        Some(p) => {
            m.input(p)?;
            Some(io::read_profiles(p)?)
        }
        None => None,
    };
    let sts = match &a.sts {
        Some(p) => {
            m.input(p)?;
            Some(io::read_sts(p)?)
        }
        None => None,
    };
    let fixed = if a.encoder.is_set() {
        Some(a.encoder.load(&mut m)?)
    } else {
        None
    };
    if fixed.is_none() {
        a.training.record(&mut m);
    }
    a.sampling.record(&mut m);
    a.dstar.record(&mut m);
    m.set("k", a.k).set("distance-width", a.distance_width);
    let config = pipeline_config(&a, fixed)?;
    let runs = bundle::run_folds(&corpus, profiles.as_ref(), &config, a.threads)?;
    let mut out = OutputDir::create(&a.out)?;
    let agg = bundle::write_bundle(&mut out, &corpus, &runs, sts.as_deref())?;
    out.finish(m)?;
    for f in &agg.failed {
        eprintln!("fold {} failed at {}: {}", f.fold_index, f.stage, f.error);
    }
    print_rows(&agg.rows);
    if agg.folds == 0 {
        return Err(CliError::Invalid("every fold failed".into()));
    }
    Ok(())
}

fn report(a: ReportArgs) -> CliResult<()> {
    let mut m = Manifest::new("report", None);
    let (folds, rows) = bundle::aggregate_dir(&a.run)?;
    for (i, _) in &folds {
        m.input(&a.run.join(format!("fold_{i}")).join("headline.json"))?;
    }
    let mut out = OutputDir::create(&a.out)?;
    out.json(
        "aggregate.json",
        &json!({ "folds": folds.iter().map(|(i, _)| *i).collect::<Vec<_>>(), "rows": rows }),
    )?;
    export::aggregate(&mut out, &rows)?;
    out.write("summary.md", summary_markdown(&a.run, &rows).into_bytes())?;
    out.finish(m)?;
    print_rows(&rows);
    Ok(())
}

fn summary_markdown(run: &Path, rows: &[beliefspace_core::evalkit::AggregateRow]) -> String {
    let mut s = format!(
        "# Report for `{}`\n\n| metric | mean | std | folds |\n|---|---|---|---|\n",
        run.display()
    );
    for r in rows {
        s.push_str(&format!(
            "| {} | {:.4} | {:.4} | {} |\n",
            r.metric, r.mean, r.std, r.folds
        ));
    }
    s
}

fn print_rows(rows: &[beliefspace_core::evalkit::AggregateRow]) {
    for r in rows {
        println!(
            "{:<24} {:>8.4} ± {:.4}  ({} folds)",
            r.metric, r.mean, r.std, r.folds
        );
    }
}
