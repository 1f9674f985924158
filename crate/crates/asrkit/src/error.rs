use std::io;
use std::path::{Path, PathBuf};

use asrkit_core::analysis::AnalysisError;
use asrkit_core::corpus::{AudioError, ChunkError, SnrError, VadError};
use asrkit_core::ctc::CtcError;
use asrkit_core::decoder::DecodeError;
use asrkit_core::lexicon::LexiconError;
use asrkit_core::metrics::MetricsError;
use asrkit_core::ngram::NGramError;
use asrkit_core::sampler::SamplerError;
use asrkit_core::script::ScriptError;
use asrkit_core::tuning::TuneError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Wav { path: PathBuf, source: hound::Error },
    #[error("{}:{line}: {reason}", path.display())]
    Format { path: PathBuf, line: usize, reason: String },
    #[error("{}:{line}: malformed ARPA: {reason}", path.display())]
    MalformedArpa { path: PathBuf, line: usize, reason: String },
    #[error("{}: {reason}", path.display())]
    Dump { path: PathBuf, reason: String },
    #[error("{}: {source}", path.display())]
    Emissions { path: PathBuf, source: CtcError },
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Vad(#[from] VadError),
    #[error(transparent)]
    Snr(#[from] SnrError),
    #[error(transparent)]
    Chunk(#[from] ChunkError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error(transparent)]
    NGram(#[from] NGramError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Ctc(#[from] CtcError),
    #[error("utterance {utt}: {source}")]
    Decode { utt: String, source: DecodeError },
    #[error(transparent)]
    Tune(#[from] TuneError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Usage(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        Error::Io { path: path.as_ref().to_path_buf(), source }
    }

    pub fn format(path: impl AsRef<Path>, line: usize, reason: impl Into<String>) -> Self {
        Error::Format { path: path.as_ref().to_path_buf(), line, reason: reason.into() }
    }

    /// Module-qualified error code, e.g. `lm.malformed_arpa`.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io.read_write",
            Error::Wav { .. } => "corpus.wav",
            Error::Format { .. } => "io.format",
            Error::MalformedArpa { .. } => "lm.malformed_arpa",
            Error::Dump { .. } => "analysis.dump",
            Error::Emissions { .. } => "ctc.emissions",
            Error::Audio(_) => "corpus.audio",
            Error::Vad(_) => "corpus.vad",
            Error::Snr(_) => "corpus.snr",
            Error::Chunk(_) => "corpus.chunk",
            Error::Sampler(_) => "sampler",
            Error::Script(_) => "translit",
            Error::NGram(_) => "lm",
            Error::Lexicon(_) => "lexicon",
            Error::Ctc(_) => "ctc",
            Error::Decode { .. } => "decoder",
            Error::Tune(_) => "tune",
            Error::Metrics(_) => "wer",
            Error::Analysis(_) => "analysis",
            Error::Input(_) => "input",
            Error::Usage(_) => "usage",
        }
    }
}
