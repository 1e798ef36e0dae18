//! Command-line interface of the `csnk` binary.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use csnk_core::tensor_net::Activation;

use crate::data::{gaussian_blobs, load_idx, load_libsvm, synthetic_digits, Dataset};
use crate::error::{HarnessError, Result};
use crate::experiment::{run_experiment, ExperimentSpec, ModelKind, OptimizerKind};
use crate::studies::{run_ablations, run_csfd_study, run_ffd_training_study, FFD_STUDY_STEPS};

#[derive(Debug, Parser)]
#[command(name = "csnk", version, about = "Complex-step Newton-Krylov training experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Derivative error of FFD, CFD and complex steps over a range of h.
    CsfdStudy {
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model and write per-iteration records.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Newton-CG with forward-difference curvature for several steps h.
    FfdStudy {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = FFD_STUDY_STEPS)]
        h: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Eta, early-termination, batch-size, activation and step-rule sweeps.
    Ablate {
        #[command(flatten)]
        common: Common,
        /// Adam learning rate for the activation comparison.
        #[arg(long, default_value_t = 0.01)]
        adam_lr: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [32usize, 128, 512])]
        batch_sizes: Vec<usize>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Logreg,
    Svm,
    Mlp,
    Autoencoder,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OptimizerArg {
    NewtonCg,
    NewtonBacktrack,
    Sgd,
    Adam,
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, value_enum, default_value = "mlp")]
    model: ModelArg,
    #[arg(long, value_enum, default_value = "newton-cg")]
    optimizer: OptimizerArg,
    /// Learning rate for sgd and adam.
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    /// blobs, digits, libsvm:PATH or idx:IMAGES,LABELS
    #[arg(long, default_value = "digits")]
    dataset: String,
    /// Sample count of the synthetic datasets; truncates loaded ones.
    #[arg(long)]
    samples: Option<usize>,
    /// Feature count of the blobs dataset.
    #[arg(long, default_value_t = 20)]
    features: usize,
    /// Class count of the blobs dataset.
    #[arg(long, default_value_t = 2)]
    classes: usize,
    /// Standard deviation of the blob centres.
    #[arg(long, default_value_t = 0.25)]
    separation: f64,
    /// Pixel noise of the digits dataset.
    #[arg(long, default_value_t = 0.12)]
    noise: f64,
    /// Area-average square images to this side length.
    #[arg(long)]
    downsample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    /// Defaults to the full dataset.
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long)]
    eta_tilde: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    no_warm_start: bool,
    #[arg(long)]
    no_early_termination: bool,
    #[arg(long)]
    grad_refresh_every: Option<usize>,
    #[arg(long)]
    cg_max_iters: Option<usize>,
    /// Hidden widths (MLP) or encoder widths (autoencoder).
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long, default_value = "sigmoid")]
    activation: String,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Record elapsed milliseconds (output is then not reproducible).
    #[arg(long)]
    wall_clock: bool,
}

impl Common {
    fn dataset(&self) -> Result<Dataset> {
        let ds = match self.dataset.split_once(':') {
            None if self.dataset == "blobs" => {
                gaussian_blobs(self.samples.unwrap_or(500), self.features, self.classes, self.separation, self.data_seed)?
            }
            None if self.dataset == "digits" => synthetic_digits(self.samples.unwrap_or(1000), self.noise, self.data_seed)?,
            Some(("libsvm", path)) => load_libsvm(Path::new(path), None)?,
            Some(("idx", paths)) => {
                let (img, lbl) = paths
                    .split_once(',')
                    .ok_or_else(|| HarnessError::Usage("idx dataset needs IMAGES,LABELS".into()))?;
                load_idx(Path::new(img), Path::new(lbl))?
            }
            _ => return Err(HarnessError::Usage(format!("unknown dataset `{}`", self.dataset))),
        };
        let ds = match self.samples {
            Some(n) if n < ds.n() => ds.head(n),
            _ => ds,
        };
        match self.downsample {
            Some(side) => ds.downsample_square(side),
            None => Ok(ds),
        }
    }

    fn spec(&self, n: usize) -> Result<ExperimentSpec> {
        let activation: Activation = self.activation.parse()?;
        let model = match self.model {
            ModelArg::Logreg => ModelKind::LogReg,
            ModelArg::Svm => ModelKind::SvmHinge2,
            ModelArg::Mlp => ModelKind::MlpClassifier {
                hidden: self.hidden.clone().unwrap_or_else(|| vec![32, 16]),
                activation,
            },
            ModelArg::Autoencoder => ModelKind::MlpAutoencoder {
                widths: self.hidden.clone().unwrap_or_else(|| vec![32, 16, 8]),
                activation,
            },
        };
        let optimizer = match self.optimizer {
            OptimizerArg::NewtonCg => OptimizerKind::NewtonCg,
            OptimizerArg::NewtonBacktrack => OptimizerKind::NewtonBacktrack,
            OptimizerArg::Sgd => OptimizerKind::Sgd { lr: self.lr },
            OptimizerArg::Adam => OptimizerKind::Adam { lr: self.lr },
        };
        let mut spec = ExperimentSpec::new(model, optimizer, self.batch_size.unwrap_or(n), self.epochs, self.seed);
        if let Some(eta) = self.eta_tilde {
            spec.newton.eta_tilde = eta;
        }
        if let Some(k) = self.grad_refresh_every {
            spec.newton.grad_refresh_every = k;
        }
        if let Some(k) = self.cg_max_iters {
            spec.newton.cg_max_iters = k;
        }
        spec.newton.warm_start = !self.no_warm_start;
        spec.newton.early_termination = !self.no_early_termination;
        spec.max_iterations = self.max_iterations;
        spec.wall_clock = self.wall_clock;
        spec.validate(n)?;
        Ok(spec)
    }

    fn load(&self) -> Result<(Dataset, ExperimentSpec)> {
        let data = self.dataset()?;
        let spec = self.spec(data.n())?;
        Ok((data, spec))
    }
}

fn execute(cli: Cli) -> Result<String> {
    match cli.command {
        Command::CsfdStudy { out } => {
            let rows = run_csfd_study(&out)?;
            Ok(format!("wrote {} rows to {}", rows.len(), out.display()))
        }
        Command::Train { common, out } => {
            let (data, spec) = common.load()?;
            let recs = run_experiment(&spec, &data, &out)?;
            let last = crate::records::final_global_loss(&recs).unwrap_or(f64::NAN);
            Ok(format!("{} iterations, final global loss {last}; wrote {}", recs.len() - 1, out.display()))
        }
        Command::FfdStudy { common, h, out } => {
            let (data, spec) = common.load()?;
            let curves = run_ffd_training_study(&spec, &data, &h, &out)?;
            let summary: Vec<String> = curves
                .iter()
                .map(|c| format!("{}{}: {}", c.label(), c.h.map(|h| format!("(h={h:e})")).unwrap_or_default(), c.run.final_loss))
                .collect();
            Ok(format!("{}; wrote {}", summary.join(", "), out.display()))
        }
        Command::Ablate { common, adam_lr, batch_sizes, out } => {
            let (data, spec) = common.load()?;
            let runs = run_ablations(&spec, &data, adam_lr, &batch_sizes, &out)?;
            Ok(format!("{} runs; wrote {}", runs.len(), out.display()))
        }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code: 0 success, 1 usage, 2 data, 3 numeric.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(msg) => {
            println!("{msg}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
