use std::path::PathBuf;

use clap::ValueEnum;
use latentem::{FitOptions, Variant};

use crate::error::{CliError, Result};
use crate::text::AlphabetPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    FitLatent,
    FitColatent,
    FitNetwork,
    FitNetworkCo,
    Inspect,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::FitLatent => "fit-latent",
            Command::FitColatent => "fit-colatent",
            Command::FitNetwork => "fit-network",
            Command::FitNetworkCo => "fit-network-co",
            Command::Inspect => "inspect",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Csv,
    Edgelist,
    Text,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input_path: PathBuf,
    pub input_format: InputFormat,
    pub m: usize,
    /// Column groups of the co-latent model; defaults to `m`.
    pub m2: Option<usize>,
    pub variant: Variant,
    pub lambda: f64,
    pub restarts: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    pub output_dir: PathBuf,
    pub alphabet: AlphabetPolicy,
    /// Marginal homogeneity projection period for the `mh` variant.
    pub mh_projection_every: Option<usize>,
}

impl RunConfig {
    pub fn new(command: Command, input_path: impl Into<PathBuf>, input_format: InputFormat) -> Self {
        let defaults = FitOptions::default();
        Self {
            command,
            input_path: input_path.into(),
            input_format,
            m: 2,
            m2: None,
            variant: Variant::General,
            lambda: 1.0,
            restarts: 10,
            seed: 0,
            max_iter: defaults.max_iter,
            tol: defaults.tol,
            output_dir: PathBuf::from("out"),
            alphabet: AlphabetPolicy::Observed,
            mh_projection_every: None,
        }
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }

    pub fn m2(&self) -> usize {
        self.m2.unwrap_or(self.m)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::InvalidConfig(msg));
        if self.m == 0 || self.m2 == Some(0) {
            return bad("the number of groups must be at least 1".into());
        }
        if self.restarts == 0 {
            return bad("at least one restart is required".into());
        }
        if !(self.lambda >= 1.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be a finite number >= 1, got {}", self.lambda));
        }
        if !(self.tol >= 0.0) {
            return bad(format!("tolerance must be non-negative, got {}", self.tol));
        }
        if self.lambda != 1.0 && self.command != Command::FitNetwork {
            return bad(format!("--lambda only applies to fit-network, not {}", self.command.name()));
        }
        if self.m2.is_some() && self.command != Command::FitColatent {
            return bad(format!("--m2 only applies to fit-colatent, not {}", self.command.name()));
        }
        if self.mh_projection_every.is_some() && self.variant != Variant::MarginallyHomogeneous {
            return bad("MH projection requires the mh variant".into());
        }
        Ok(())
    }
}
