//! Command line definition and dispatch.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use asrkit_core::analysis::{
    attention_aggregate, codebook_histogram, head_locality_profile, language_centroids, locality_shares,
    AttentionTensor, CodeMode, CodebookStream, FrameMatrix,
};
use asrkit_core::corpus::{ChunkConfig, VadConfig};
use asrkit_core::ctc::Emissions;
use asrkit_core::decoder::{decode, DecodeConfig, NoLm, WordLm};
use asrkit_core::lexicon::{spell, Lexicon};
use asrkit_core::metrics::{char_counts, word_counts, ErrorCounts};
use asrkit_core::ngram::{train, NGramCounts, NGramModel, PruneConfig};
use asrkit_core::sampler::{draw_batch, language_distribution, SamplingPolicy};
use asrkit_core::script::{Script, ScriptMap, Unmappable};
use asrkit_core::tuning::{
    evaluate_point, finish_tuning, group_nbest, rescore, rescore_counts, tune_rescore_weights, GridPoint, GridRange,
    NBestEntry, RescoreGrid, RescoreWeights,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::formats::{arpa, dumps, emissions, list_files, manifest, read_text, tables};
use crate::pipeline::{prepare, PrepareConfig};

/// Environment variable holding the default data root.
pub const DATA_ROOT_ENV: &str = "ASRKIT_DATA_ROOT";
/// Default prune thresholds for orders 1 to 6.
pub const DEFAULT_PRUNE: [u64; 6] = [0, 0, 0, 0, 1, 2];

#[derive(Debug, Parser)]
#[command(
    name = "asrkit",
    version,
    about = "Multilingual speech recognition toolkit: corpus curation, n-gram LMs, CTC decoding"
)]
pub struct Cli {
    /// Relative paths are resolved against this directory.
    #[arg(long, global = true, env = DATA_ROOT_ENV, default_value = ".")]
    pub data_root: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: Option<u16>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Log level for the structured stderr log.
    #[arg(long, global = true, env = "ASRKIT_LOG", default_value = "info")]
    pub log_level: log::LevelFilter,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Standardize, VAD, SNR-filter and chunk `<in>/<language>/*.wav`.
    Prepare(PrepareArgs),
    /// Draw a temperature-sampled batch from a manifest.
    Sample(SampleArgs),
    /// Convert text between Indic scripts through Devanagari.
    Translit(TranslitArgs),
    /// Train or query n-gram language models.
    #[command(subcommand)]
    Lm(LmCommand),
    /// Build a lexicon from text, restricted to the acoustic vocabulary.
    Lexicon(LexiconArgs),
    /// Lexicon-constrained beam search over emissions.
    Decode(DecodeArgs),
    /// Grid search of the LM weight and word bonus on validation data.
    Tune(TuneArgs),
    /// Rescore n-best lists with external LM scores.
    Rescore(RescoreArgs),
    /// Word or character error rate.
    Wer(WerArgs),
    /// Codebook, centroid and attention analyses of model dumps.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 15.0)]
    pub snr_threshold: f64,
    #[arg(long, default_value_t = 25.0)]
    pub max_chunk: f64,
    /// Seconds before the chunk limit searched for silence.
    #[arg(long, default_value_t = 5.0)]
    pub search_window: f64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(0..=3))]
    pub vad_mode: u8,
    #[arg(long, default_value_t = 30)]
    pub vad_frame_ms: u32,
    /// Non-speech runs of at most this many frames between speech are kept.
    #[arg(long, default_value_t = 10)]
    pub vad_hangover: usize,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 0.7)]
    pub alpha: f64,
    #[arg(long, default_value_t = 3.2)]
    pub batch_hours: f64,
    /// Output manifest; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnmappablePolicy {
    Fail,
    Skip,
}

#[derive(Debug, Args)]
pub struct TranslitArgs {
    #[arg(long, value_parser = parse_script)]
    pub from: Script,
    #[arg(long, value_parser = parse_script)]
    pub to: Script,
    #[arg(long, value_enum, default_value_t = UnmappablePolicy::Fail)]
    pub unmappable: UnmappablePolicy,
    /// Replacement exception table.
    #[arg(long)]
    pub exceptions: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum LmCommand {
    /// Interpolated modified Kneser-Ney training to ARPA.
    Train(LmTrainArgs),
    /// Log10 probability of every line read from standard input.
    Score(LmScoreArgs),
}

#[derive(Debug, Args)]
pub struct LmTrainArgs {
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u8).range(1..=16))]
    pub order: u8,
    /// Comma-separated adjusted-count thresholds per order; default
    /// `0,0,0,0,1,2` cut to the order.
    #[arg(long, value_delimiter = ',')]
    pub prune: Option<Vec<u64>>,
    #[arg(long, required = true, num_args = 1..)]
    pub text: Vec<PathBuf>,
    #[arg(long)]
    pub arpa: PathBuf,
}

#[derive(Debug, Args)]
pub struct LmScoreArgs {
    #[arg(long)]
    pub arpa: PathBuf,
}

#[derive(Debug, Args)]
pub struct LexiconArgs {
    /// Text whose distinct words form the lexicon.
    #[arg(long, required = true, num_args = 1..)]
    pub text: Vec<PathBuf>,
    /// Acoustic vocabulary, one token per line.
    #[arg(long)]
    pub vocab: PathBuf,
    /// Vocabulary tokens that are not characters, e.g. blank or silence.
    #[arg(long, num_args = 1.., default_value = "<blank>")]
    pub exclude: Vec<String>,
    /// Text whose most frequent words are added.
    #[arg(long)]
    pub augment: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub top_k: usize,
    /// Text whose OOV rate is logged.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Directory of `<utt_id>.emis` files and `vocab.txt`.
    #[arg(long)]
    pub emissions: PathBuf,
    #[arg(long)]
    pub lexicon: PathBuf,
    /// ARPA model; decoding is acoustic only without it.
    #[arg(long)]
    pub arpa: Option<PathBuf>,
    /// Emission tokens treated like blank.
    #[arg(long)]
    pub boundary: Vec<String>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub beta: f64,
    #[arg(long, default_value_t = 1024)]
    pub beam: usize,
    #[arg(long, default_value_t = 64)]
    pub nbest: usize,
    /// N-best TSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `alpha_range,beta_range`, each `lo:hi:step` or a single value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2(pub GridRange, pub GridRange);

/// `alpha1_range,alpha2_range,beta_range`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid3(pub GridRange, pub GridRange, pub GridRange);

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub search: SearchArgs,
    /// `utt_id<TAB>reference` lines.
    #[arg(long)]
    pub refs: PathBuf,
    #[arg(long, default_value = "-4:4:0.5,0:5:0.5", value_parser = parse_grid2, allow_hyphen_values = true)]
    pub grid: Grid2,
    #[arg(long, default_value_t = 64)]
    pub beam: usize,
    /// Error surface TSV: `alpha<TAB>beta<TAB>wer<TAB>edits<TAB>words`.
    #[arg(long)]
    pub surface: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RescoreArgs {
    #[arg(long)]
    pub nbest: PathBuf,
    #[arg(long)]
    pub elm: PathBuf,
    /// `alpha1,alpha2,beta`.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        conflicts_with = "refs",
        required_unless_present = "refs"
    )]
    pub weights: Option<Vec<f64>>,
    /// Tune the weights against these references.
    #[arg(long)]
    pub refs: Option<PathBuf>,
    #[arg(long, default_value = "-4:4:0.5,-4:4:0.5,0:5:0.5", value_parser = parse_grid3, allow_hyphen_values = true)]
    pub grid: Grid3,
    /// Best hypothesis per utterance; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WerArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Transcript TSV or n-best TSV (rank 0 is used).
    #[arg(long)]
    pub hyp: PathBuf,
    #[arg(long)]
    pub cer: bool,
    /// Also print `utt_id<TAB>rate<TAB>S<TAB>I<TAB>D<TAB>N` per utterance.
    #[arg(long)]
    pub detail: bool,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Code usage histogram over `<in>/<language>/*.code`.
    Codebook(CodebookArgs),
    /// Language centroids over `<in>/<language>/*.fram`.
    Centroids(CentroidArgs),
    /// Span aggregation and locality labels over `<in>/*.attn`.
    Attention(AttentionArgs),
}

#[derive(Debug, Args)]
pub struct CodebookArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Count each group's index separately instead of the pair.
    #[arg(long)]
    pub per_group: bool,
}

#[derive(Debug, Args)]
pub struct CentroidArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Layer the dumps come from, recorded in the report.
    #[arg(long, default_value_t = 0)]
    pub layer: u32,
    /// Frame hop used to report sampled hours.
    #[arg(long, default_value_t = 20)]
    pub frame_ms: u32,
}

#[derive(Debug, Args)]
pub struct AttentionArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Span ids that are silence.
    #[arg(long, value_delimiter = ',')]
    pub silence: Vec<u32>,
}

fn parse_script(s: &str) -> std::result::Result<Script, String> {
    s.parse().map_err(|e: asrkit_core::script::ScriptError| e.to_string())
}

fn parse_ranges(s: &str, n: usize) -> std::result::Result<Vec<GridRange>, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != n {
        return Err(format!("expected {n} comma-separated ranges, got {}", parts.len()));
    }
    parts.iter().map(|p| p.parse::<GridRange>().map_err(|e| e.to_string())).collect()
}

fn parse_grid2(s: &str) -> std::result::Result<Grid2, String> {
    let r = parse_ranges(s, 2)?;
    Ok(Grid2(r[0], r[1]))
}

fn parse_grid3(s: &str) -> std::result::Result<Grid3, String> {
    let r = parse_ranges(s, 3)?;
    Ok(Grid3(r[0], r[1], r[2]))
}

/// Resolves paths against the data root.
struct Paths<'a>(&'a Path);

impl Paths<'_> {
    fn at(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.0.join(p)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => tables::write_text(p, text),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn read_stdin() -> Result<String> {
    let mut s = String::new();
    io::stdin().read_to_string(&mut s).map_err(|e| Error::io("<stdin>", e))?;
    Ok(s)
}

/// Runs the parsed command. Logging must already be initialized.
pub fn run(cli: &Cli) -> Result<()> {
    info!("event=config {cli:?}");
    if let Some(j) = cli.jobs {
        // fails only if a pool already exists, e.g. when called twice in one process
        if rayon::ThreadPoolBuilder::new().num_threads(usize::from(j)).build_global().is_err() {
            warn!("event=jobs_ignored reason=pool_exists");
        }
    }
    let paths = Paths(&cli.data_root);
    match &cli.command {
        Command::Prepare(a) => run_prepare(a, &paths),
        Command::Sample(a) => run_sample(a, cli.seed, &paths),
        Command::Translit(a) => run_translit(a, &paths),
        Command::Lm(LmCommand::Train(a)) => run_lm_train(a, cli.jobs, &paths),
        Command::Lm(LmCommand::Score(a)) => run_lm_score(a, &paths),
        Command::Lexicon(a) => run_lexicon(a, &paths),
        Command::Decode(a) => run_decode(a, &paths),
        Command::Tune(a) => run_tune(a, &paths),
        Command::Rescore(a) => run_rescore(a, &paths),
        Command::Wer(a) => run_wer(a, &paths),
        Command::Analyze(AnalyzeCommand::Codebook(a)) => run_codebook(a, &paths),
        Command::Analyze(AnalyzeCommand::Centroids(a)) => run_centroids(a, &paths),
        Command::Analyze(AnalyzeCommand::Attention(a)) => run_attention(a, &paths),
    }
}

fn run_prepare(a: &PrepareArgs, paths: &Paths) -> Result<()> {
    let cfg = PrepareConfig {
        vad: VadConfig::new(a.vad_frame_ms, a.vad_mode, a.vad_hangover)?,
        chunk: ChunkConfig {
            snr_threshold_db: a.snr_threshold,
            max_chunk_s: a.max_chunk,
            search_window_s: a.search_window,
        },
    };
    prepare(&paths.at(&a.input), &paths.at(&a.out), &cfg)?;
    Ok(())
}

fn run_sample(a: &SampleArgs, seed: u64, paths: &Paths) -> Result<()> {
    let m = manifest::read(&paths.at(&a.manifest))?;
    let dist = language_distribution(&SamplingPolicy::from_manifest(a.alpha, &m))?;
    for (l, p) in &dist.probs {
        info!("event=language_prob language={l} prob={p:.6}");
    }
    let batch = asrkit_core::corpus::CorpusManifest::new(draw_batch(&dist, &m, a.batch_hours, seed)?);
    info!("event=sampled entries={} hours={:.6}", batch.entries.len(), batch.total_hours());
    emit(a.out.as_ref().map(|p| paths.at(p)).as_deref(), &manifest::render(&batch))
}

fn run_translit(a: &TranslitArgs, paths: &Paths) -> Result<()> {
    let map = match &a.exceptions {
        Some(p) => ScriptMap::from_exception_table(&read_text(&paths.at(p))?)?,
        None => ScriptMap::default(),
    };
    let policy = match a.unmappable {
        UnmappablePolicy::Fail => Unmappable::Fail,
        UnmappablePolicy::Skip => Unmappable::Skip,
    };
    let text = read_stdin()?;
    let out = map.transliterate(&text, a.from, a.to, policy)?;
    emit(None, &out)
}

fn prune_config(a: &LmTrainArgs) -> Result<PruneConfig> {
    let order = usize::from(a.order);
    let thresholds = match &a.prune {
        Some(t) if t.len() > order => {
            return Err(Error::Usage(format!("{} prune thresholds for order {order}", t.len())));
        }
        Some(t) => t.clone(),
        None => DEFAULT_PRUNE.iter().copied().take(order).collect(),
    };
    Ok(PruneConfig::new(thresholds)?)
}

fn run_lm_train(a: &LmTrainArgs, jobs: Option<u16>, paths: &Paths) -> Result<()> {
    let prune = prune_config(a)?;
    let order = usize::from(a.order);
    let mut text = String::new();
    for p in &a.text {
        text.push_str(&read_text(&paths.at(p))?);
        text.push('\n');
    }
    let lines: Vec<&str> = text.lines().collect();
    let shards = jobs.map_or_else(rayon::current_num_threads, usize::from).max(1);
    let shard_len = lines.len().div_ceil(shards).max(1);
    let counts = lines
        .par_chunks(shard_len)
        .map(|chunk| {
            let mut c = NGramCounts::new(order)?;
            chunk.iter().for_each(|l| c.add_line(l));
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .try_fold(NGramCounts::new(order)?, |mut acc, c| {
            acc.merge(c);
            Ok::<_, Error>(acc)
        })?;
    let trained = train(&counts, &prune)?;
    let r = &trained.report;
    for &n in &r.fallback_orders {
        warn!("event=discount_fallback order={n} discount={}", asrkit_core::ngram::FALLBACK_DISCOUNT);
    }
    info!("event=trained sentences={} order={order} counted={:?} stored={:?}", counts.sentences(), r.counted, r.stored);
    arpa::write(&paths.at(&a.arpa), &trained.model)
}

fn run_lm_score(a: &LmScoreArgs, paths: &Paths) -> Result<()> {
    let model = arpa::read(&paths.at(&a.arpa))?;
    let text = read_stdin()?;
    let mut out = String::new();
    let mut sentences = Vec::new();
    for line in text.lines() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let _ = writeln!(out, "{:.6}", model.score_sentence(&tokens));
        sentences.push(tokens);
    }
    let ppl = model.perplexity(sentences.iter().map(|s| s.as_slice()));
    info!("event=scored sentences={} perplexity={ppl:.4}", sentences.len());
    emit(None, &out)
}

fn read_words(paths: &Paths, files: &[PathBuf]) -> Result<Vec<String>> {
    let mut words = Vec::new();
    for p in files {
        words.extend(read_text(&paths.at(p))?.split_whitespace().map(String::from));
    }
    Ok(words)
}

fn run_lexicon(a: &LexiconArgs, paths: &Paths) -> Result<()> {
    let vocab = emissions::read_vocab(&paths.at(&a.vocab))?;
    let chars: BTreeSet<String> = vocab.into_iter().filter(|t| !a.exclude.contains(t)).collect();
    let words: BTreeSet<String> = read_words(paths, &a.text)?.into_iter().collect();
    let (mut lex, dropped) = Lexicon::build(&words, &chars)?;
    for d in &dropped {
        warn!("event=dropped_word word={} character={:?}", d.word, d.character);
    }
    if let Some(p) = &a.augment {
        let corpus: Vec<String> = read_words(paths, std::slice::from_ref(p))?
            .into_iter()
            .filter(|w| spell(w).iter().all(|c| chars.contains(c)))
            .collect();
        let before = lex.len();
        lex = lex.augment(&corpus, a.top_k);
        info!("event=augmented added={} top_k={}", lex.len() - before, a.top_k);
    }
    if let Some(p) = &a.reference {
        let reference = read_words(paths, std::slice::from_ref(p))?;
        info!("event=oov rate={:.6} tokens={}", lex.oov_rate(&reference), reference.len());
    }
    info!("event=lexicon words={} dropped={}", lex.len(), dropped.len());
    tables::write_text(&paths.at(&a.out), &tables::render_lexicon(lex.entries()))
}

/// Either an n-gram model or acoustic-only scoring.
enum Lm {
    NGram(NGramModel),
    None,
}

struct Search {
    utterances: Vec<(String, Emissions)>,
    lexicon: Lexicon,
    lm: Lm,
}

fn load_search(a: &SearchArgs, paths: &Paths) -> Result<Search> {
    let utterances = emissions::read_dir(&paths.at(&a.emissions))?;
    if utterances.is_empty() {
        return Err(Error::Input(format!("no .emis files in {}", a.emissions.display())));
    }
    let lexicon = Lexicon::from_entries(tables::read_lexicon(&paths.at(&a.lexicon))?)?;
    let lm = match &a.arpa {
        Some(p) => Lm::NGram(arpa::read(&paths.at(p))?),
        None => Lm::None,
    };
    Ok(Search { utterances, lexicon, lm })
}

fn decode_all<L: WordLm + Sync>(s: &Search, lm: &L, cfg: &DecodeConfig) -> Result<Vec<NBestEntry>>
where
    L::State: Send,
{
    let lists: Vec<Vec<NBestEntry>> = s
        .utterances
        .par_iter()
        .map(|(id, e)| {
            let out = decode(e, &s.lexicon, lm, cfg).map_err(|source| Error::Decode { utt: id.clone(), source })?;
            Ok(out
                .hypotheses
                .iter()
                .enumerate()
                .map(|(rank, h)| NBestEntry {
                    utt_id: id.clone(),
                    rank: rank as u32,
                    am_score: h.am_score,
                    lm_score: h.lm_score,
                    word_count: h.words.len(),
                    text: h.text(),
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(lists.into_iter().flatten().collect())
}

fn run_decode(a: &DecodeArgs, paths: &Paths) -> Result<()> {
    let s = load_search(&a.search, paths)?;
    let cfg = DecodeConfig {
        alpha: a.alpha,
        beta: a.beta,
        beam_size: a.beam,
        n_best: a.nbest,
        boundary_tokens: a.search.boundary.clone(),
    };
    cfg.validate().map_err(|e| Error::Usage(e.to_string()))?;
    let entries = match &s.lm {
        Lm::NGram(m) => decode_all(&s, m, &cfg)?,
        Lm::None => decode_all(&s, &NoLm, &cfg)?,
    };
    info!("event=decoded utterances={} entries={}", s.utterances.len(), entries.len());
    emit(a.out.as_ref().map(|p| paths.at(p)).as_deref(), &tables::render_nbest(&entries))
}

fn tune_surface<L: WordLm + Sync>(
    s: &Search,
    refs: &BTreeMap<String, String>,
    lm: &L,
    points: &[(f64, f64)],
    beam: usize,
) -> Result<Vec<GridPoint>> {
    points
        .par_iter()
        .map(|&(alpha, beta)| {
            let counts = evaluate_point(&s.utterances, refs, &s.lexicon, lm, alpha, beta, beam)?;
            Ok(GridPoint { alpha, beta, counts })
        })
        .collect()
}

fn run_tune(a: &TuneArgs, paths: &Paths) -> Result<()> {
    let s = load_search(&a.search, paths)?;
    let refs = tables::read_transcripts(&paths.at(&a.refs))?;
    asrkit_core::tuning::check_references(&s.utterances, &refs)?;
    if a.beam == 0 {
        return Err(Error::Usage("beam must be at least 1".into()));
    }
    let points: Vec<(f64, f64)> =
        a.grid.0.points().into_iter().flat_map(|al| a.grid.1.points().into_iter().map(move |b| (al, b))).collect();
    let surface = match &s.lm {
        Lm::NGram(m) => tune_surface(&s, &refs, m, &points, a.beam)?,
        Lm::None => tune_surface(&s, &refs, &NoLm, &points, a.beam)?,
    };
    let result = finish_tuning(surface, s.utterances.len())?;
    info!("event=tuned alpha={} beta={} wer={:.6} decodes={}", result.alpha, result.beta, result.wer(), result.decodes);
    if let Some(p) = &a.surface {
        let mut text = String::new();
        for g in &result.surface {
            let rate = g.counts.rate().unwrap_or(f64::NAN);
            let _ = writeln!(
                text,
                "{}\t{}\t{rate:?}\t{}\t{}",
                g.alpha,
                g.beta,
                g.counts.edits(),
                g.counts.reference_tokens
            );
        }
        tables::write_text(&paths.at(p), &text)?;
    }
    emit(None, &format!("{}\t{}\t{:?}\n", result.alpha, result.beta, result.wer()))
}

fn run_rescore(a: &RescoreArgs, paths: &Paths) -> Result<()> {
    let lists = group_nbest(tables::read_nbest(&paths.at(&a.nbest))?);
    let elm = tables::read_elm(&paths.at(&a.elm))?;
    let weights = match (&a.weights, &a.refs) {
        (Some(w), _) => match w[..] {
            [alpha1, alpha2, beta] => RescoreWeights { alpha1, alpha2, beta },
            _ => return Err(Error::Usage(format!("--weights needs 3 values, got {}", w.len()))),
        },
        (None, Some(r)) => {
            let refs = tables::read_transcripts(&paths.at(r))?;
            let grid = RescoreGrid { alpha1: a.grid.0, alpha2: a.grid.1, beta: a.grid.2 };
            let tuned = tune_rescore_weights(&lists, &elm, &refs, &grid)?;
            let rate = tuned.counts.rate().unwrap_or(f64::NAN);
            info!("event=rescore_tuned surface={} wer={rate:.6}", tuned.surface.len());
            let base = rescore_counts(&lists, &elm, &refs, &RescoreWeights { alpha1: 0.0, alpha2: 0.0, beta: 0.0 })?;
            info!("event=acoustic_best wer={:.6}", base.rate().unwrap_or(f64::NAN));
            tuned.weights
        }
        (None, None) => return Err(Error::Usage("either --weights or --refs is required".into())),
    };
    info!("event=weights alpha1={} alpha2={} beta={}", weights.alpha1, weights.alpha2, weights.beta);
    let best = rescore(&lists, &elm, &weights)?;
    let transcripts: BTreeMap<String, String> = best.into_iter().map(|(id, e)| (id, e.text.clone())).collect();
    emit(a.out.as_ref().map(|p| paths.at(p)).as_deref(), &tables::render_transcripts(&transcripts))
}

fn run_wer(a: &WerArgs, paths: &Paths) -> Result<()> {
    let refs = tables::read_transcripts(&paths.at(&a.reference))?;
    let hyps = tables::read_hypotheses(&paths.at(&a.hyp))?;
    if let Some(extra) = hyps.keys().find(|k| !refs.contains_key(*k)) {
        return Err(Error::Input(format!("hypothesis {extra:?} has no reference")));
    }
    let mut total = ErrorCounts::default();
    let mut out = String::new();
    for (id, r) in &refs {
        let h = hyps.get(id).map_or("", String::as_str);
        if !hyps.contains_key(id) {
            warn!("event=missing_hypothesis utt={id}");
        }
        let c = if a.cer { char_counts(r, h) } else { word_counts(r, h) };
        total += c;
        if a.detail {
            let rate = c.rate()?;
            let _ = writeln!(
                out,
                "{id}\t{rate:?}\t{}\t{}\t{}\t{}",
                c.substitutions, c.insertions, c.deletions, c.reference_tokens
            );
        }
    }
    let rate = total.rate()?;
    if a.detail {
        let _ = writeln!(
            out,
            "corpus\t{rate:?}\t{}\t{}\t{}\t{}",
            total.substitutions, total.insertions, total.deletions, total.reference_tokens
        );
    } else {
        let _ = writeln!(out, "{rate:?}");
    }
    info!("event=scored utterances={} edits={} tokens={}", refs.len(), total.edits(), total.reference_tokens);
    emit(None, &out)
}

/// `(language, path)` for files with `ext` under `<dir>/<language>/`.
fn language_files(dir: &Path, ext: &str) -> Result<Vec<(String, PathBuf)>> {
    let mut langs = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.is_dir() {
            langs.push(p);
        }
    }
    langs.sort();
    let mut out = Vec::new();
    for d in langs {
        let l = d.file_name().unwrap_or_default().to_string_lossy().into_owned();
        out.extend(list_files(&d, ext)?.into_iter().map(|p| (l.clone(), p)));
    }
    if out.is_empty() {
        return Err(Error::Input(format!("no <language>/*.{ext} files under {}", dir.display())));
    }
    Ok(out)
}

fn run_codebook(a: &CodebookArgs, paths: &Paths) -> Result<()> {
    let files = language_files(&paths.at(&a.input), "code")?;
    let streams: Vec<CodebookStream> = files
        .par_iter()
        .map(|(l, p)| Ok(CodebookStream { language: l.clone(), indices: dumps::read_codes(p)? }))
        .collect::<Result<_>>()?;
    let mode = if a.per_group { CodeMode::PerGroup } else { CodeMode::Combined };
    let h = codebook_histogram(&streams, mode)?;
    let mut out = String::new();
    for (l, row) in h.languages.iter().zip(&h.counts) {
        for (code, &c) in row.iter().enumerate().filter(|(_, &c)| c > 0) {
            let _ = writeln!(out, "count\t{l}\t{code}\t{c}");
        }
    }
    for (i, x) in h.languages.iter().enumerate() {
        for y in &h.languages[i + 1..] {
            let v = h.overlap_coefficient(x, y).unwrap_or(0.0);
            let _ = writeln!(out, "overlap\t{x}\t{y}\t{v:.6}");
        }
    }
    info!("event=codebook languages={} utterances={}", h.languages.len(), streams.len());
    tables::write_text(&paths.at(&a.out), &out)
}

fn run_centroids(a: &CentroidArgs, paths: &Paths) -> Result<()> {
    let files = language_files(&paths.at(&a.input), "fram")?;
    let mats: Vec<FrameMatrix> = files
        .par_iter()
        .map(|(l, p)| {
            let (frames, dim, data) = dumps::read_frames(p)?;
            Ok(FrameMatrix::new(l.clone(), a.layer, frames, dim, data)?)
        })
        .collect::<Result<_>>()?;
    let centroids = language_centroids(&mats)?;
    let mut frames: BTreeMap<&str, usize> = BTreeMap::new();
    for m in &mats {
        *frames.entry(m.language.as_str()).or_default() += m.frames;
    }
    let mut out = String::new();
    for l in centroids.keys() {
        let hours = frames[l.as_str()] as f64 * f64::from(a.frame_ms) / 1000.0 / 3600.0;
        let _ = writeln!(
            out,
            "# language={l} layer={} utterances={} hours={hours:.6}",
            a.layer,
            mats.iter().filter(|m| &m.language == l).count()
        );
    }
    for (l, c) in &centroids {
        let values: Vec<String> = c.iter().map(|v| format!("{v:.8}")).collect();
        let _ = writeln!(out, "{l}\t{}", values.join("\t"));
    }
    tables::write_text(&paths.at(&a.out), &out)
}

fn run_attention(a: &AttentionArgs, paths: &Paths) -> Result<()> {
    let input = paths.at(&a.input);
    let files = list_files(&input, "attn")?;
    if files.is_empty() {
        return Err(Error::Input(format!("no .attn files in {}", input.display())));
    }
    let mats = files
        .par_iter()
        .map(|p| {
            let (frames, weights, spans) = dumps::read_attention(p)?;
            Ok(attention_aggregate(&AttentionTensor::new(frames, weights, spans)?)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let spans = mats.iter().map(|m| m.spans).max().unwrap_or(0);
    let mut silence = vec![false; spans];
    for &s in &a.silence {
        if let Some(f) = silence.get_mut(s as usize) {
            *f = true;
        }
    }
    let labels = head_locality_profile(&mats, &silence);
    let mut out = String::new();
    for ((p, m), label) in files.iter().zip(&mats).zip(&labels) {
        let name = p.file_stem().unwrap_or_default().to_string_lossy();
        let [next, prev, sil] = locality_shares(m, &silence);
        let _ = writeln!(out, "head\t{name}\t{}\t{next:.6}\t{prev:.6}\t{sil:.6}", label.as_str());
        for i in 0..m.spans {
            for j in 0..m.spans {
                let _ = writeln!(out, "span\t{name}\t{i}\t{j}\t{:.8}", m.get(i, j));
            }
        }
    }
    info!("event=attention heads={} spans={spans}", mats.len());
    tables::write_text(&paths.at(&a.out), &out)
}
