use std::fmt;
use std::str::FromStr;

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::multicomplex::Scalar;

/// Batch losses. All reduce over the batch by mean.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Loss {
    /// Softmax cross-entropy over class scores.
    CrossEntropySoftmax,
    /// Sum of squared errors per sample.
    Mse,
    /// Multi-class squared hinge `Σ_{c≠y} max(0, 1 + s_c − s_y)²`.
    Hinge2,
    /// Binary logistic loss on a single score, labels in {0, 1}.
    Logistic,
}

impl Loss {
    pub fn as_str(self) -> &'static str {
        match self {
            Loss::CrossEntropySoftmax => "cross-entropy",
            Loss::Mse => "mse",
            Loss::Hinge2 => "hinge2",
            Loss::Logistic => "logistic",
        }
    }

    fn uses_labels(self) -> bool {
        !matches!(self, Loss::Mse)
    }

    /// Checks that `targets` fit this loss for `outputs` scores per sample.
    pub fn check_targets(self, targets: &Targets, batch: usize, outputs: usize) -> Result<()> {
        match (self.uses_labels(), targets) {
            (true, Targets::Labels(labels)) => {
                if labels.len() != batch {
                    return Err(Error::shape("label count", batch, labels.len()));
                }
                let classes = if self == Loss::Logistic {
                    if outputs != 1 {
                        return Err(Error::shape("logistic score width", 1, outputs));
                    }
                    2
                } else {
                    outputs
                };
                if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
                    return Err(Error::InvalidArgument(format!(
                        "label {bad} out of range for {classes} classes"
                    )));
                }
                Ok(())
            }
            (false, Targets::Values(t)) => {
                if t.shape() != [batch, outputs] {
                    return Err(Error::shape("regression targets", batch * outputs, t.len()));
                }
                Ok(())
            }
            (true, Targets::Values(_)) => Err(Error::InvalidArgument(format!(
                "{} loss needs integer labels",
                self.as_str()
            ))),
            (false, Targets::Labels(_)) => Err(Error::InvalidArgument(
                "mse loss needs real-valued targets".into(),
            )),
        }
    }

    /// Loss value and, if requested, its gradient with respect to `scores`
    /// (`batch × width`, row-major).
    pub(crate) fn evaluate<S: Scalar>(
        self,
        scores: &[S],
        width: usize,
        targets: &Targets,
        with_grad: bool,
    ) -> (S, Option<Vec<S>>) {
        let batch = scores.len() / width;
        let inv_b = 1.0 / batch as f64;
        let mut total = S::zero();
        let mut grad = with_grad.then(|| vec![S::zero(); scores.len()]);
        for b in 0..batch {
            let s = &scores[b * width..(b + 1) * width];
            let g = grad.as_mut().map(|g| &mut g[b * width..(b + 1) * width]);
            total += match (self, targets) {
                (Loss::CrossEntropySoftmax, Targets::Labels(y)) => cross_entropy(s, y[b], g, inv_b),
                (Loss::Hinge2, Targets::Labels(y)) => hinge2(s, y[b], g, inv_b),
                (Loss::Logistic, Targets::Labels(y)) => logistic(s[0], y[b], g, inv_b),
                (Loss::Mse, Targets::Values(t)) => mse(s, t.row(b), g, inv_b),
                _ => unreachable!("targets are validated before evaluation"),
            };
        }
        (total.scale(inv_b), grad)
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Loss::CrossEntropySoftmax, Loss::Mse, Loss::Hinge2, Loss::Logistic]
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown loss `{s}`")))
    }
}

fn cross_entropy<S: Scalar>(s: &[S], y: usize, grad: Option<&mut [S]>, inv_b: f64) -> S {
    // The shift is a constant of differentiation, so taking it from real
    // parts leaves the perturbation untouched.
    let shift = s.iter().map(Scalar::real).fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<S> = s.iter().map(|&v| v - S::from_real(shift)).collect();
    let exps: Vec<S> = shifted.iter().map(|&v| v.exp()).collect();
    let mut sum = S::zero();
    for &e in &exps {
        sum += e;
    }
    if let Some(g) = grad {
        for (c, (gc, &e)) in g.iter_mut().zip(&exps).enumerate() {
            let p = e / sum;
            let p = if c == y { p - S::one() } else { p };
            *gc = p.scale(inv_b);
        }
    }
    sum.ln() - shifted[y]
}

fn hinge2<S: Scalar>(s: &[S], y: usize, mut grad: Option<&mut [S]>, inv_b: f64) -> S {
    let mut total = S::zero();
    let mut gy = S::zero();
    for c in 0..s.len() {
        if c == y {
            continue;
        }
        let margin = S::one() + s[c] - s[y];
        if margin.real() > 0.0 {
            total += margin * margin;
            if let Some(g) = grad.as_deref_mut() {
                let d = margin.scale(2.0 * inv_b);
                g[c] = d;
                gy -= d;
            }
        }
    }
    if let Some(g) = grad {
        g[y] = gy;
    }
    total
}

fn logistic<S: Scalar>(s: S, y: usize, grad: Option<&mut [S]>, inv_b: f64) -> S {
    let softplus = if s.real() > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    };
    let target = S::from_real(y as f64);
    if let Some(g) = grad {
        g[0] = (s.sigmoid() - target).scale(inv_b);
    }
    softplus - target * s
}

fn mse<S: Scalar>(s: &[S], t: &[f64], grad: Option<&mut [S]>, inv_b: f64) -> S {
    let mut total = S::zero();
    let diffs: Vec<S> = s.iter().zip(t).map(|(&v, &t)| v - S::from_real(t)).collect();
    for &d in &diffs {
        total += d * d;
    }
    if let Some(g) = grad {
        for (gj, &d) in g.iter_mut().zip(&diffs) {
            *gj = d.scale(2.0 * inv_b);
        }
    }
    total
}

/// Supervision for a batch.
#[derive(Clone, Debug, PartialEq)]
pub enum Targets {
    /// Class labels, one per sample.
    Labels(Vec<usize>),
    /// Real targets, `batch × outputs`.
    Values(Tensor<f64>),
}

/// A fixed set of samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub(crate) inputs: Tensor<f64>,
    pub(crate) targets: Targets,
    pub(crate) id: usize,
}

impl Batch {
    /// `inputs` must be `batch × features` with at least one row.
    pub fn new(inputs: Tensor<f64>, targets: Targets) -> Result<Self> {
        if inputs.shape().len() != 2 || inputs.rows() == 0 {
            return Err(Error::InvalidArgument(format!(
                "batch inputs must be a non-empty matrix, got shape {:?}",
                inputs.shape()
            )));
        }
        let rows = inputs.rows();
        let target_rows = match &targets {
            Targets::Labels(l) => l.len(),
            Targets::Values(t) => t.rows(),
        };
        if target_rows != rows {
            return Err(Error::shape("batch targets", rows, target_rows));
        }
        Ok(Self {
            inputs,
            targets,
            id: 0,
        })
    }

    /// Tags the batch with an identifier used in error messages.
    pub fn with_id(mut self, id: usize) -> Self {
        self.id = id;
        self
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn inputs(&self) -> &Tensor<f64> {
        &self.inputs
    }

    pub fn targets(&self) -> &Targets {
        &self.targets
    }
}
