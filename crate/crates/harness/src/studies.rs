//! Derivative-accuracy, finite-difference training and ablation studies.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use csnk_core::csfd::{self, ErrorRow, ExpOverQuadratic};
use csnk_core::newton_krylov::{DerivativeMode, StepRule};
use csnk_core::tensor_net::Activation;

use crate::data::Dataset;
use crate::error::{HarnessError, Result};
use crate::experiment::{train, ExperimentSpec, ModelKind, OptimizerKind, Run};

/// Evaluation point of the derivative-accuracy study.
pub const CSFD_STUDY_X: f64 = 10.0;

/// `d²/dx² eˣ/(x²+1)`.
pub fn exp_over_quadratic_second(x: f64) -> f64 {
    let q = x * x + 1.0;
    let a = x - 1.0;
    x.exp() * (a * a * q + 2.0 * a * q - 4.0 * x * a * a) / (q * q * q)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| HarnessError::io(path, e))
}

/// Error of every scheme for `eˣ/(x²+1)` at x = 10 over `h = 10⁻¹ … 10⁻³⁰`,
/// written as `scheme,h,rel_error`.
pub fn run_csfd_study(out: &Path) -> Result<Vec<ErrorRow>> {
    let rows = csfd::error_curve(
        &ExpOverQuadratic,
        ExpOverQuadratic::derivative,
        exp_over_quadratic_second,
        CSFD_STUDY_X,
        &csfd::log_h_grid(-1, -30),
    )?;
    let mut w = create(out)?;
    csfd::write_error_csv(&rows, &mut w)
        .and_then(|()| w.flush())
        .map_err(|e| HarnessError::io(out, e))?;
    Ok(rows)
}

/// Forward-difference steps the training study accepts.
pub const FFD_STUDY_STEPS: [f64; 5] = [1e-2, 1e-4, 1e-6, 1e-8, 1e-16];
pub const FFD_STUDY_ITERATIONS: usize = 100;

/// One loss curve of the finite-difference training study.
#[derive(Clone, Debug)]
pub struct FfdCurve {
    /// `None` for the complex-step reference.
    pub h: Option<f64>,
    pub run: Run,
}

impl FfdCurve {
    pub fn label(&self) -> &'static str {
        if self.h.is_some() {
            "ffd"
        } else {
            "csfd"
        }
    }
}

/// Trains `spec` for 100 iterations once per forward-difference step in
/// `h_list` and once with complex steps, writing
/// `scheme,h,iteration,batch_loss,global_loss,termination`.
pub fn run_ffd_training_study(spec: &ExperimentSpec, data: &Dataset, h_list: &[f64], out: &Path) -> Result<Vec<FfdCurve>> {
    if let Some(h) = h_list.iter().find(|h| !FFD_STUDY_STEPS.contains(h)) {
        return Err(HarnessError::Usage(format!(
            "FFD step {h} is not one of {FFD_STUDY_STEPS:?}"
        )));
    }
    let mut curves = Vec::new();
    for h in h_list.iter().map(|&h| Some(h)).chain([None]) {
        let mut s = spec.clone();
        s.optimizer = OptimizerKind::NewtonCg;
        s.max_iterations = Some(FFD_STUDY_ITERATIONS);
        s.newton.derivative = match h {
            Some(h) => DerivativeMode::ForwardDifference { h },
            None => DerivativeMode::ComplexStep,
        };
        curves.push(FfdCurve { h, run: train(&s, data)? });
    }
    let mut w = create(out)?;
    let io = |e| HarnessError::io(out, e);
    writeln!(w, "scheme,h,iteration,batch_loss,global_loss,termination").map_err(io)?;
    for c in &curves {
        let h = c.h.map(|h| format!("{h:e}")).unwrap_or_default();
        for r in &c.run.records {
            let g = r.global_loss.map(|g| g.to_string()).unwrap_or_default();
            writeln!(w, "{},{h},{},{},{g},{}", c.label(), r.iteration, r.batch_loss, r.termination).map_err(io)?;
        }
    }
    w.flush().map_err(io)?;
    Ok(curves)
}

/// Values swept by the ablation study.
pub const ETA_SWEEP: [f64; 6] = [0.001, 0.01, 0.05, 0.1, 0.2, 0.5];
pub const ACTIVATION_SWEEP: [Activation; 4] = [Activation::None, Activation::Relu, Activation::Sigmoid, Activation::Sin];

#[derive(Clone, Debug)]
pub struct AblationRun {
    pub axis: &'static str,
    pub variant: String,
    pub run: Run,
}

/// Runs every ablation axis from `base` (an MLP classifier) and writes one
/// CSV per axis into `out_dir`, plus `summary.csv` with the final loss and
/// the mean adjustment attempts of epoch 1.
///
/// `adam_lr` is the learning rate of the Adam comparison on the activation
/// axis. `batch_sizes` lists the batch-size variants.
pub fn run_ablations(
    base: &ExperimentSpec,
    data: &Dataset,
    adam_lr: f64,
    batch_sizes: &[usize],
    out_dir: &Path,
) -> Result<Vec<AblationRun>> {
    let ModelKind::MlpClassifier { hidden, .. } = &base.model else {
        return Err(HarnessError::Usage("ablations run on an MLP classifier".into()));
    };
    let mut runs = Vec::new();
    let newton = |f: &dyn Fn(&mut ExperimentSpec)| {
        let mut s = base.clone();
        s.optimizer = OptimizerKind::NewtonCg;
        f(&mut s);
        s
    };
    for eta in ETA_SWEEP {
        let s = newton(&|s| s.newton.eta_tilde = eta);
        runs.push(AblationRun { axis: "eta", variant: eta.to_string(), run: train(&s, data)? });
    }
    for on in [true, false] {
        let s = newton(&|s| s.newton.early_termination = on);
        let variant = if on { "on" } else { "off" };
        runs.push(AblationRun { axis: "early_termination", variant: variant.into(), run: train(&s, data)? });
    }
    for &bs in batch_sizes {
        let s = newton(&|s| s.batch_size = bs);
        runs.push(AblationRun { axis: "batch_size", variant: bs.to_string(), run: train(&s, data)? });
    }
    for act in ACTIVATION_SWEEP {
        let model = ModelKind::MlpClassifier { hidden: hidden.clone(), activation: act };
        for opt in [OptimizerKind::NewtonCg, OptimizerKind::Adam { lr: adam_lr }] {
            let mut s = base.clone();
            s.model = model.clone();
            s.optimizer = opt;
            runs.push(AblationRun { axis: "activation", variant: format!("{act}/{opt}"), run: train(&s, data)? });
        }
    }
    for (name, rule) in [("taylor_ratio", StepRule::TaylorRatio), ("backtracking", StepRule::ARMIJO_DEFAULT)] {
        let s = newton(&|s| s.newton.step_rule = rule);
        runs.push(AblationRun { axis: "step_rule", variant: name.into(), run: train(&s, data)? });
    }
    write_ablations(&runs, out_dir)?;
    Ok(runs)
}

fn write_ablations(runs: &[AblationRun], out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let mut axes: Vec<&str> = runs.iter().map(|r| r.axis).collect();
    axes.dedup();
    for axis in axes {
        let path = out_dir.join(format!("{axis}.csv"));
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(create(&path)?);
        w.write_record([
            "variant", "iteration", "epoch", "batch_loss", "global_loss", "eta", "gamma", "cg_iters", "termination",
            "adjust_attempts", "wall_ms",
        ])?;
        for r in runs.iter().filter(|r| r.axis == axis) {
            for rec in &r.run.records {
                let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
                w.write_record([
                    r.variant.clone(),
                    rec.iteration.to_string(),
                    rec.epoch.to_string(),
                    rec.batch_loss.to_string(),
                    opt(rec.global_loss),
                    rec.eta.to_string(),
                    rec.gamma.to_string(),
                    rec.cg_iters.to_string(),
                    rec.termination.clone(),
                    rec.adjust_attempts.to_string(),
                    rec.wall_ms.to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| HarnessError::io(&path, e))?;
    }
    let path = out_dir.join("summary.csv");
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(create(&path)?);
    w.write_record(["axis", "variant", "initial_loss", "final_loss", "epoch1_mean_adjust_attempts"])?;
    for r in runs {
        w.write_record([
            r.axis.to_string(),
            r.variant.clone(),
            r.run.initial_loss.to_string(),
            r.run.final_loss.to_string(),
            r.run.mean_adjust_attempts(1).map(|a| a.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::io(&path, e))?;
    Ok(())
}
