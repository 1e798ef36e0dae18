//! Training runs: model construction, seeded minibatching and the
//! optimizer loops.

use std::fmt;
use std::path::Path;
use std::time::Instant;

use csnk_core::newton_krylov::{adam_step, newton_step, sgd_step, AdamConfig, AdamState, NewtonConfig, NewtonState, StepRule};
use csnk_core::objective::NetObjective;
use csnk_core::tensor_net::{Activation, Batch, Layer, Loss, Model};
use csnk_core::Objective;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::{HarnessError, Result};
use crate::records::{self, RunRecord};

#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    /// Binary logistic regression, or softmax regression for more classes.
    LogReg,
    /// Linear multi-class squared-hinge SVM.
    SvmHinge2,
    MlpClassifier { hidden: Vec<usize>, activation: Activation },
    /// Encoder widths after the input; the decoder mirrors them and ends in
    /// a sigmoid so reconstructions live in `[0, 1]`.
    MlpAutoencoder { widths: Vec<usize>, activation: Activation },
}

impl ModelKind {
    pub fn build(&self, input_dim: usize, classes: usize) -> Result<(Model, Loss)> {
        let built = match self {
            ModelKind::LogReg if classes <= 2 => (Model::new(vec![Layer::dense(input_dim, 1)])?, Loss::Logistic),
            ModelKind::LogReg => (
                Model::new(vec![Layer::dense(input_dim, classes)])?,
                Loss::CrossEntropySoftmax,
            ),
            ModelKind::SvmHinge2 => (Model::new(vec![Layer::dense(input_dim, classes.max(2))])?, Loss::Hinge2),
            ModelKind::MlpClassifier { hidden, activation } => {
                let mut widths = vec![input_dim];
                widths.extend(hidden);
                widths.push(classes);
                (Model::mlp(&widths, *activation, None)?, Loss::CrossEntropySoftmax)
            }
            ModelKind::MlpAutoencoder { widths, activation } => {
                if widths.is_empty() {
                    return Err(HarnessError::Usage("autoencoder needs at least one width".into()));
                }
                let mut all = vec![input_dim];
                all.extend(widths);
                all.extend(widths.iter().rev().skip(1));
                all.push(input_dim);
                (Model::mlp(&all, *activation, Some(Activation::Sigmoid))?, Loss::Mse)
            }
        };
        Ok(built)
    }

    pub fn is_autoencoder(&self) -> bool {
        matches!(self, ModelKind::MlpAutoencoder { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OptimizerKind {
    NewtonCg,
    /// Newton-CG directions sized by Armijo backtracking (c = 0.01, τ = 0.8).
    NewtonBacktrack,
    Sgd { lr: f64 },
    Adam { lr: f64 },
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptimizerKind::NewtonCg => f.write_str("newton_cg"),
            OptimizerKind::NewtonBacktrack => f.write_str("newton_backtrack"),
            OptimizerKind::Sgd { lr } => write!(f, "sgd(lr={lr})"),
            OptimizerKind::Adam { lr } => write!(f, "adam(lr={lr})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub model: ModelKind,
    pub optimizer: OptimizerKind,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub newton: NewtonConfig,
    /// Stop after this many iterations even mid-epoch.
    pub max_iterations: Option<usize>,
    /// Record elapsed time; off keeps CSV output byte-reproducible.
    pub wall_clock: bool,
}

impl ExperimentSpec {
    pub fn new(model: ModelKind, optimizer: OptimizerKind, batch_size: usize, epochs: usize, seed: u64) -> Self {
        Self {
            model,
            optimizer,
            batch_size,
            epochs,
            seed,
            newton: NewtonConfig::default(),
            max_iterations: None,
            wall_clock: false,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.batch_size == 0 || self.batch_size > n {
            return Err(HarnessError::Usage(format!(
                "batch size {} must lie in [1, {n}]",
                self.batch_size
            )));
        }
        if self.epochs == 0 {
            return Err(HarnessError::Usage("epochs must be at least 1".into()));
        }
        match self.optimizer {
            OptimizerKind::Sgd { lr } | OptimizerKind::Adam { lr } if !(lr > 0.0 && lr.is_finite()) => {
                return Err(HarnessError::Usage(format!("learning rate {lr} must be positive")));
            }
            _ => {}
        }
        self.newton.validate()?;
        Ok(())
    }
}

/// Row indices of every minibatch in `epoch`. A pure function of its
/// arguments; the last batch may be short.
pub fn epoch_batches(seed: u64, epoch: usize, n: usize, batch_size: usize) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order.chunks(batch_size.max(1)).map(<[usize]>::to_vec).collect()
}

/// A finished run.
#[derive(Clone, Debug, PartialEq)]
pub struct Run {
    pub records: Vec<RunRecord>,
    pub params: Vec<f64>,
    pub initial_loss: f64,
    /// Global loss at the final parameters (non-finite after divergence).
    pub final_loss: f64,
    pub diverged: bool,
}

impl Run {
    /// Mean adjustment attempts over the accepted steps of `epoch`.
    pub fn mean_adjust_attempts(&self, epoch: usize) -> Option<f64> {
        let steps: Vec<f64> = self
            .records
            .iter()
            .filter(|r| r.epoch == epoch && r.is_step() && r.gamma > 0.0)
            .map(|r| r.adjust_attempts as f64)
            .collect();
        (!steps.is_empty()).then(|| steps.iter().sum::<f64>() / steps.len() as f64)
    }

    /// Global loss after each iteration, carrying the last known value
    /// forward across iterations that did not refresh it.
    pub fn loss_curve(&self) -> Vec<f64> {
        let mut last = self.initial_loss;
        self.records
            .iter()
            .filter(|r| r.termination != records::INIT)
            .map(|r| {
                if let Some(l) = r.global_loss {
                    last = l;
                }
                last
            })
            .collect()
    }
}

struct Setup {
    model: Model,
    loss: Loss,
    global: Batch,
}

impl Setup {
    fn new(spec: &ExperimentSpec, data: &Dataset) -> Result<Self> {
        spec.validate(data.n())?;
        let (model, loss) = spec.model.build(data.d(), data.classes())?;
        let all: Vec<usize> = (0..data.n()).collect();
        Ok(Self {
            global: make_batch(spec, data, &all, usize::MAX),
            model,
            loss,
        })
    }

    fn global(&self) -> NetObjective<'_> {
        NetObjective::new(&self.model, self.loss, &self.global)
    }
}

fn make_batch(spec: &ExperimentSpec, data: &Dataset, rows: &[usize], id: usize) -> Batch {
    if spec.model.is_autoencoder() {
        data.autoencoder_batch(rows, id)
    } else {
        data.label_batch(rows, id)
    }
}

struct Clock(Option<Instant>);

impl Clock {
    fn ms(&self) -> f64 {
        self.0.map_or(0.0, |t| t.elapsed().as_secs_f64() * 1e3)
    }
}

fn diverged_row(iteration: usize, epoch: usize, batch_loss: f64, clock: &Clock) -> RunRecord {
    RunRecord {
        iteration,
        epoch,
        batch_loss,
        global_loss: Some(f64::NAN),
        eta: 0.0,
        gamma: 0.0,
        cg_iters: 0,
        termination: records::DIVERGED.into(),
        adjust_attempts: 0,
        wall_ms: clock.ms(),
    }
}

/// Trains according to `spec`. Numeric failures inside the optimizer are
/// recorded per row; a non-finite loss ends the run with a `diverged` row.
pub fn train(spec: &ExperimentSpec, data: &Dataset) -> Result<Run> {
    let setup = Setup::new(spec, data)?;
    let global = setup.global();
    let w0 = setup.model.init_params(spec.seed);
    let initial_loss = global.value(&w0[..])?;
    let clock = Clock(spec.wall_clock.then(Instant::now));
    let mut recs = vec![RunRecord {
        iteration: 0,
        epoch: 0,
        batch_loss: initial_loss,
        global_loss: Some(initial_loss),
        eta: 0.0,
        gamma: 0.0,
        cg_iters: 0,
        termination: records::INIT.into(),
        adjust_attempts: 0,
        wall_ms: 0.0,
    }];
    let budget = spec.max_iterations.unwrap_or(usize::MAX);
    let (params, diverged) = match spec.optimizer {
        OptimizerKind::NewtonCg | OptimizerKind::NewtonBacktrack => {
            let mut cfg = spec.newton.clone();
            if spec.optimizer == OptimizerKind::NewtonBacktrack {
                cfg.step_rule = StepRule::ARMIJO_DEFAULT;
            }
            run_newton(spec, data, &setup, &cfg, w0, budget, &clock, &mut recs)?
        }
        OptimizerKind::Sgd { .. } | OptimizerKind::Adam { .. } => {
            run_first_order(spec, data, &setup, w0, budget, &clock, &mut recs)
        }
    };
    let final_loss = if diverged {
        f64::NAN
    } else {
        global.value(&params[..]).unwrap_or(f64::NAN)
    };
    Ok(Run {
        records: recs,
        params,
        initial_loss,
        final_loss,
        diverged,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_newton(
    spec: &ExperimentSpec,
    data: &Dataset,
    setup: &Setup,
    cfg: &NewtonConfig,
    w0: Vec<f64>,
    budget: usize,
    clock: &Clock,
    recs: &mut Vec<RunRecord>,
) -> Result<(Vec<f64>, bool)> {
    let global = setup.global();
    let mut state = NewtonState::new(&global, w0)?;
    let mut iteration = 0;
    for epoch in 1..=spec.epochs {
        state.begin_epoch();
        for rows in epoch_batches(spec.seed, epoch, data.n(), spec.batch_size) {
            if iteration == budget {
                return Ok((state.w, false));
            }
            iteration += 1;
            let batch = make_batch(spec, data, &rows, iteration);
            let out = newton_step(&mut state, &global, &NetObjective::new(&setup.model, setup.loss, &batch), cfg);
            if out.global_loss.is_some_and(|l| !l.is_finite()) {
                recs.push(diverged_row(iteration, epoch, out.batch_loss, clock));
                return Ok((state.w, true));
            }
            let termination = if out.error.is_some() {
                records::NUMERIC_FAILURE.to_string()
            } else {
                out.termination.as_str().to_string()
            };
            recs.push(RunRecord {
                iteration,
                epoch,
                batch_loss: out.batch_loss,
                global_loss: out.global_loss,
                eta: out.eta,
                gamma: out.gamma,
                cg_iters: out.cg_iters,
                termination,
                adjust_attempts: out.adjust_attempts,
                wall_ms: clock.ms(),
            });
        }
        state.epoch += 1;
    }
    Ok((state.w, false))
}

fn run_first_order(
    spec: &ExperimentSpec,
    data: &Dataset,
    setup: &Setup,
    mut w: Vec<f64>,
    budget: usize,
    clock: &Clock,
    recs: &mut Vec<RunRecord>,
) -> (Vec<f64>, bool) {
    let global = setup.global();
    let lr = match spec.optimizer {
        OptimizerKind::Sgd { lr } | OptimizerKind::Adam { lr } => lr,
        _ => unreachable!("first-order optimizer"),
    };
    let adam_cfg = AdamConfig::with_lr(lr);
    let mut adam = AdamState::new(w.len());
    let mut iteration = 0;
    for epoch in 1..=spec.epochs {
        let batches = epoch_batches(spec.seed, epoch, data.n(), spec.batch_size);
        let last = batches.len();
        for (k, rows) in batches.into_iter().enumerate() {
            if iteration == budget {
                return (w, false);
            }
            iteration += 1;
            let batch = make_batch(spec, data, &rows, iteration);
            let obj = NetObjective::new(&setup.model, setup.loss, &batch);
            let (batch_loss, g) = match obj.value_and_grad(&w[..]) {
                Ok(v) if v.1.iter().all(|x| x.is_finite()) => v,
                Ok((l, _)) => {
                    recs.push(diverged_row(iteration, epoch, l, clock));
                    return (w, true);
                }
                Err(_) => {
                    recs.push(diverged_row(iteration, epoch, f64::NAN, clock));
                    return (w, true);
                }
            };
            match spec.optimizer {
                OptimizerKind::Adam { .. } => adam_step(&mut adam, &mut w, &g, &adam_cfg),
                _ => sgd_step(&mut w, &g, lr),
            }
            let end_of_epoch = k + 1 == last || iteration == budget;
            let global_loss = if end_of_epoch {
                Some(global.value(&w[..]).unwrap_or(f64::NAN))
            } else {
                None
            };
            if global_loss.is_some_and(|l| !l.is_finite()) {
                recs.push(diverged_row(iteration, epoch, batch_loss, clock));
                return (w, true);
            }
            recs.push(RunRecord {
                iteration,
                epoch,
                batch_loss,
                global_loss,
                eta: 0.0,
                gamma: lr,
                cg_iters: 0,
                termination: records::FIRST_ORDER.into(),
                adjust_attempts: 0,
                wall_ms: clock.ms(),
            });
        }
    }
    (w, false)
}

/// Trains and writes the records to `out` as CSV.
pub fn run_experiment(spec: &ExperimentSpec, data: &Dataset, out: &Path) -> Result<Vec<RunRecord>> {
    let run = train(spec, data)?;
    records::write_records_file(&run.records, out)?;
    Ok(run.records)
}
