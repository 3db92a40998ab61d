//! Option handling shared by all subcommands.
//!
//! Every subcommand has one options struct that serves both as its clap
//! argument group and as the schema of its `[section]` in the config file, so
//! flags and file keys correspond one-to-one (`--n-qubits` ↔ `n_qubits`).
//! Flags take precedence over the file; unset options fall back to defaults.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::RunError;

/// Declares an options struct whose fields are all optional, plus the common
/// `seed`, `trials`, `threads` and `out` options, and an `overlay` method that
/// fills unset fields from a second instance.
macro_rules! options {
    (
        $(#[$meta:meta])*
        $name:ident {
            trials: $trials_doc:literal,
            $( $(#[$fmeta:meta])* $field:ident : $ty:ty ),* $(,)?
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Default, clap::Args, serde::Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            /// Master seed for every random draw of the run.
            #[arg(long)]
            pub seed: Option<u64>,
            #[doc = $trials_doc]
            #[arg(long)]
            pub trials: Option<usize>,
            /// Worker threads (default: all cores). Results do not depend on it.
            #[arg(long)]
            pub threads: Option<usize>,
            /// Output directory for report.json and sweep.csv.
            #[arg(long)]
            pub out: Option<std::path::PathBuf>,
            $(
                $(#[$fmeta])*
                #[arg(long)]
                pub $field: Option<$ty>,
            )*
        }

        impl $name {
            /// Keeps every field set here and takes the rest from `file`.
            pub fn overlay(self, file: Self) -> Self {
                Self {
                    seed: self.seed.or(file.seed),
                    trials: self.trials.or(file.trials),
                    threads: self.threads.or(file.threads),
                    out: self.out.or(file.out),
                    $( $field: self.$field.or(file.$field), )*
                }
            }

            pub fn common(&self) -> crate::config::CommonOptions {
                crate::config::CommonOptions {
                    seed: self.seed,
                    threads: self.threads,
                    out: self.out.clone(),
                }
            }
        }
    };
}
pub(crate) use options;

/// The options every subcommand shares, before defaults are applied.
pub struct CommonOptions {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Resolved shared options.
#[derive(Clone, Debug, Serialize)]
pub struct Common {
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: PathBuf,
}

pub const DEFAULT_OUT: &str = "qnoise-out";

impl Common {
    /// A config file is a provenance record, so it must pin the seed unless
    /// `--seed` does; without a file the seed defaults to 0.
    pub fn resolve(
        opts: CommonOptions,
        config_file: Option<&Path>,
        section: &str,
    ) -> Result<Self, RunError> {
        let seed = match (opts.seed, config_file) {
            (Some(seed), _) => seed,
            (None, None) => 0,
            (None, Some(path)) => {
                return Err(RunError::Usage(format!(
                    "missing required key `seed` in section [{section}] of {}",
                    path.display()
                )))
            }
        };
        if opts.threads == Some(0) {
            return Err(RunError::Usage("`threads` must be ≥ 1".into()));
        }
        Ok(Self {
            seed,
            threads: opts.threads,
            out: opts.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        })
    }
}

/// Reads `[section]` of a config file. Keys outside any section are
/// rejected; sections for other subcommands are ignored; a missing section
/// counts as empty.
pub fn load_section<T: DeserializeOwned + Default>(
    path: Option<&Path>,
    section: &str,
) -> Result<T, RunError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut table: toml::Table = text
        .parse()
        .map_err(|e| RunError::Usage(format!("malformed config {}: {e}", path.display())))?;
    if let Some((key, _)) = table.iter().find(|(_, v)| !v.is_table()) {
        return Err(RunError::Usage(format!(
            "key `{key}` in {} is outside any [subcommand] section",
            path.display()
        )));
    }
    match table.remove(section) {
        None => Ok(T::default()),
        Some(value) => value.try_into().map_err(|e: toml::de::Error| {
            RunError::Usage(format!(
                "invalid section [{section}] in {}: {}",
                path.display(),
                e.message()
            ))
        }),
    }
}

/// Fails with a usage error naming `key` unless `ok`.
pub fn require(ok: bool, key: &str, message: &str) -> Result<(), RunError> {
    if ok {
        Ok(())
    } else {
        Err(RunError::Usage(format!("`{key}` {message}")))
    }
}
