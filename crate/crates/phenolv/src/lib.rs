//! Configuration-driven runner for the phenotype-structured competition
//! models in `phenolv-core`.
//!
//! A run reads a TOML document ([`config`]), executes one command
//! ([`runner`]), and writes CSV tables plus a JSON manifest ([`output`]).
//! Outputs are buffered until the run succeeds; the manifest is written last.

pub mod config;
pub mod output;
pub mod presets;
pub mod runner;

pub use config::{Command, ConfigError, RunConfig};
pub use output::{FailureRecord, Manifest};
pub use runner::{execute, run_to_dir, RunOutput};

/// Failure of a run, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration")]
    Config(#[from] ConfigError),

    #[error("invalid input: {context}")]
    Input {
        context: String,
        #[source]
        source: phenolv_core::Error,
    },

    #[error("{context} failed")]
    Runtime {
        context: String,
        #[source]
        source: phenolv_core::Error,
    },

    #[error("i/o error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    pub fn input(context: impl Into<String>) -> impl FnOnce(phenolv_core::Error) -> Self {
        let context = context.into();
        move |source| RunError::Input { context, source }
    }

    pub fn runtime(context: impl Into<String>) -> impl FnOnce(phenolv_core::Error) -> Self {
        let context = context.into();
        move |source| RunError::Runtime { context, source }
    }

    /// 1 for configuration and input errors, 2 for failures during computation.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Input { .. } => 1,
            RunError::Runtime { .. } | RunError::Io { .. } => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        if self.exit_code() == 1 {
            "validation"
        } else {
            "runtime"
        }
    }

    /// Messages from the outermost error inwards.
    pub fn chain(&self) -> Vec<String> {
        let mut out = vec![self.to_string()];
        let mut cur: Option<&dyn std::error::Error> = std::error::Error::source(self);
        while let Some(e) = cur {
            out.push(e.to_string());
            cur = e.source();
        }
        out
    }
}
