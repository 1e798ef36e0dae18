//! Minimal feedforward networks evaluated over any [`Scalar`] kind.
//!
//! `forward` and `backward` run the same code for `f64`, [`Cplx`] and
//! [`BiCplx`] parameters. With zero imaginary parts the complex runs follow
//! the real run bit for bit; with a perturbed parameter vector the imaginary
//! parts carry directional derivatives.
//!
//! [`Cplx`]: crate::multicomplex::Cplx
//! [`BiCplx`]: crate::multicomplex::BiCplx

mod loss;
mod model;
mod tensor;

pub use loss::{Batch, Loss, Targets};
pub use model::{Activation, DenseParams, Layer, Model};
pub use tensor::Tensor;

use crate::error::{Error, Result};
use crate::multicomplex::Scalar;

fn check_inputs<S>(model: &Model, loss: Loss, params: &[S], batch: &Batch) -> Result<()> {
    if params.len() != model.param_count() {
        return Err(Error::shape("parameter vector", model.param_count(), params.len()));
    }
    if batch.inputs.cols() != model.input_dim() {
        return Err(Error::shape("batch features", model.input_dim(), batch.inputs.cols()));
    }
    loss.check_targets(&batch.targets, batch.len(), model.output_dim())
}

fn layer_name(model: &Model, k: usize) -> String {
    match model.layers()[k] {
        Layer::Dense { inputs, outputs, .. } => format!("layer {k} (dense {inputs}->{outputs})"),
        Layer::Activation(a) => format!("layer {k} ({a})"),
    }
}

/// Activations at every layer boundary: `acts[0]` is the input, `acts[k+1]`
/// the output of layer `k`.
fn run_layers<S: Scalar>(model: &Model, params: &[S], batch: &Batch) -> Result<Vec<Vec<S>>> {
    let rows = batch.len();
    let mut acts: Vec<Vec<S>> = Vec::with_capacity(model.layers().len() + 1);
    acts.push(batch.inputs.data().iter().map(|&x| S::from_real(x)).collect());
    for (k, layer) in model.layers().iter().enumerate() {
        let x = acts.last().unwrap();
        let out = match *layer {
            Layer::Dense {
                inputs,
                outputs,
                bias,
            } => {
                let off = model.offset(k);
                let w = &params[off..off + inputs * outputs];
                let b = bias.then(|| &params[off + inputs * outputs..off + inputs * outputs + outputs]);
                let mut out = Vec::with_capacity(rows * outputs);
                for r in 0..rows {
                    let xr = &x[r * inputs..(r + 1) * inputs];
                    for o in 0..outputs {
                        let wo = &w[o * inputs..(o + 1) * inputs];
                        let mut acc = b.map_or(S::zero(), |b| b[o]);
                        for (&wi, &xi) in wo.iter().zip(xr) {
                            acc += wi * xi;
                        }
                        out.push(acc);
                    }
                }
                out
            }
            Layer::Activation(a) => x.iter().map(|&v| a.apply(v)).collect(),
        };
        if !out.iter().all(Scalar::is_finite) {
            return Err(Error::non_finite(format!(
                "{} on batch {}",
                layer_name(model, k),
                batch.id
            )));
        }
        acts.push(out);
    }
    Ok(acts)
}

/// Mean batch loss at `params`.
pub fn forward<S: Scalar>(model: &Model, loss: Loss, params: &[S], batch: &Batch) -> Result<S> {
    check_inputs(model, loss, params, batch)?;
    let acts = run_layers(model, params, batch)?;
    let (value, _) = loss.evaluate(acts.last().unwrap(), model.output_dim(), &batch.targets, false);
    finite_loss(value, loss, batch)
}

fn finite_loss<S: Scalar>(value: S, loss: Loss, batch: &Batch) -> Result<S> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::non_finite(format!("{loss} loss on batch {}", batch.id)))
    }
}

/// Gradient of the mean batch loss with respect to the flat parameters.
pub fn backward<S: Scalar>(model: &Model, loss: Loss, params: &[S], batch: &Batch) -> Result<Vec<S>> {
    value_and_gradient(model, loss, params, batch).map(|(_, g)| g)
}

/// Loss and gradient from one forward and one backward pass.
pub fn value_and_gradient<S: Scalar>(
    model: &Model,
    loss: Loss,
    params: &[S],
    batch: &Batch,
) -> Result<(S, Vec<S>)> {
    check_inputs(model, loss, params, batch)?;
    let acts = run_layers(model, params, batch)?;
    let (value, delta) = loss.evaluate(acts.last().unwrap(), model.output_dim(), &batch.targets, true);
    let value = finite_loss(value, loss, batch)?;
    let mut delta = delta.expect("gradient requested");

    let rows = batch.len();
    let first_dense = model
        .layers()
        .iter()
        .position(|l| matches!(l, Layer::Dense { .. }))
        .unwrap_or(0);
    let mut grad = vec![S::zero(); params.len()];
    for k in (first_dense..model.layers().len()).rev() {
        let x = &acts[k];
        match model.layers()[k] {
            Layer::Dense {
                inputs,
                outputs,
                bias,
            } => {
                let off = model.offset(k);
                let (gw, rest) = grad[off..].split_at_mut(inputs * outputs);
                for r in 0..rows {
                    let xr = &x[r * inputs..(r + 1) * inputs];
                    for o in 0..outputs {
                        let d = delta[r * outputs + o];
                        for (g, &xi) in gw[o * inputs..(o + 1) * inputs].iter_mut().zip(xr) {
                            *g += d * xi;
                        }
                    }
                }
                if bias {
                    for r in 0..rows {
                        for o in 0..outputs {
                            rest[o] += delta[r * outputs + o];
                        }
                    }
                }
                if k > first_dense {
                    let w = &params[off..off + inputs * outputs];
                    let mut back = vec![S::zero(); rows * inputs];
                    for r in 0..rows {
                        let br = &mut back[r * inputs..(r + 1) * inputs];
                        for o in 0..outputs {
                            let d = delta[r * outputs + o];
                            for (b, &wi) in br.iter_mut().zip(&w[o * inputs..(o + 1) * inputs]) {
                                *b += wi * d;
                            }
                        }
                    }
                    delta = back;
                }
            }
            Layer::Activation(a) => {
                let y = &acts[k + 1];
                for ((d, &z), &yv) in delta.iter_mut().zip(x).zip(y) {
                    *d *= a.derivative(z, yv);
                }
            }
        }
    }
    if !grad.iter().all(Scalar::is_finite) {
        return Err(Error::non_finite(format!("gradient on batch {}", batch.id)));
    }
    Ok((value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multicomplex::{BiCplx, Cplx};

    fn scalar_fit(target: f64) -> (Model, Batch) {
        let model = Model::new(vec![Layer::Dense {
            inputs: 1,
            outputs: 1,
            bias: false,
        }])
        .unwrap();
        let batch = Batch::new(
            Tensor::from_vec(vec![1, 1], vec![3.0]).unwrap(),
            Targets::Values(Tensor::from_vec(vec![1, 1], vec![target]).unwrap()),
        )
        .unwrap();
        (model, batch)
    }

    #[test]
    fn single_weight_mse() {
        let (m, b) = scalar_fit(6.0);
        assert_eq!(forward(&m, Loss::Mse, &[2.0], &b).unwrap(), 0.0);
        let (m, b) = scalar_fit(0.0);
        assert_eq!(forward(&m, Loss::Mse, &[2.0], &b).unwrap(), 36.0);
        assert_eq!(backward(&m, Loss::Mse, &[2.0], &b).unwrap(), vec![36.0]);
    }

    #[test]
    fn zero_direction_has_zero_imaginary_part() {
        let (m, b) = scalar_fit(1.0);
        let y = forward(&m, Loss::Mse, &[Cplx::new(2.0, 0.0)], &b).unwrap();
        assert_eq!(y.im, 0.0);
        let y = forward(&m, Loss::Mse, &[BiCplx::from_real(2.0)], &b).unwrap();
        assert_eq!(y.imag2().value, 0.0);
    }

    #[test]
    fn duplicated_rows_leave_gradient_unchanged() {
        let model = Model::mlp(&[3, 4, 2], Activation::Tanh, None).unwrap();
        let w = model.init_params(3);
        let x = vec![0.1, -0.4, 0.9, 1.2, 0.3, -0.7];
        let single = Batch::new(
            Tensor::from_vec(vec![2, 3], x.clone()).unwrap(),
            Targets::Labels(vec![0, 1]),
        )
        .unwrap();
        let mut xx = x.clone();
        xx.extend_from_slice(&x);
        let double = Batch::new(
            Tensor::from_vec(vec![4, 3], xx).unwrap(),
            Targets::Labels(vec![0, 1, 0, 1]),
        )
        .unwrap();
        let g1 = backward(&model, Loss::CrossEntropySoftmax, &w, &single).unwrap();
        let g2 = backward(&model, Loss::CrossEntropySoftmax, &w, &double).unwrap();
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() <= 1e-15 * (1.0 + a.abs()), "{a} {b}");
        }
    }

    #[test]
    fn shape_errors() {
        let model = Model::mlp(&[3, 2], Activation::None, None).unwrap();
        let batch = Batch::new(
            Tensor::from_vec(vec![1, 3], vec![0.0; 3]).unwrap(),
            Targets::Labels(vec![1]),
        )
        .unwrap();
        let w = vec![0.0; model.param_count()];
        assert!(forward(&model, Loss::CrossEntropySoftmax, &w[1..], &batch).is_err());
        assert!(forward(&model, Loss::Mse, &w, &batch).is_err());
        let bad = Batch::new(
            Tensor::from_vec(vec![1, 3], vec![0.0; 3]).unwrap(),
            Targets::Labels(vec![2]),
        )
        .unwrap();
        assert!(forward(&model, Loss::CrossEntropySoftmax, &w, &bad).is_err());
        assert!(Batch::new(Tensor::from_vec(vec![0, 3], vec![]).unwrap(), Targets::Labels(vec![])).is_err());
    }

    #[test]
    fn non_finite_names_the_layer() {
        let model = Model::mlp(&[1, 1, 1], Activation::Sin, None).unwrap();
        let batch = Batch::new(
            Tensor::from_vec(vec![1, 1], vec![1.0]).unwrap(),
            Targets::Values(Tensor::from_vec(vec![1, 1], vec![0.0]).unwrap()),
        )
        .unwrap()
        .with_id(4);
        let w = [f64::INFINITY, 0.0, 1.0, 0.0];
        let err = forward(&model, Loss::Mse, &w, &batch).unwrap_err();
        let Error::NonFinite { location } = err else {
            panic!("{err:?}")
        };
        assert!(location.contains("layer 0") && location.contains("batch 4"), "{location}");
    }

    #[test]
    fn hinge2_value_by_hand() {
        // scores (2, 1.5, -1) with label 0: margins 0.5 and -2 → 0.25
        let model = Model::new(vec![Layer::Dense {
            inputs: 1,
            outputs: 3,
            bias: false,
        }])
        .unwrap();
        let batch = Batch::new(
            Tensor::from_vec(vec![1, 1], vec![1.0]).unwrap(),
            Targets::Labels(vec![0]),
        )
        .unwrap();
        let w = [2.0, 1.5, -1.0];
        assert_eq!(forward(&model, Loss::Hinge2, &w, &batch).unwrap(), 0.25);
        assert_eq!(backward(&model, Loss::Hinge2, &w, &batch).unwrap(), vec![-1.0, 1.0, 0.0]);
    }

    #[test]
    fn logistic_loss_by_hand() {
        let model = Model::new(vec![Layer::Dense {
            inputs: 1,
            outputs: 1,
            bias: false,
        }])
        .unwrap();
        let batch = Batch::new(
            Tensor::from_vec(vec![2, 1], vec![1.0, -2.0]).unwrap(),
            Targets::Labels(vec![1, 0]),
        )
        .unwrap();
        let w = [0.5_f64];
        // softplus(s) − y·s for s = 0.5 (y=1) and s = −1 (y=0)
        let expect = ((1.0 + 0.5f64.exp()).ln() - 0.5 + (1.0 + (-1.0f64).exp()).ln()) / 2.0;
        let got = forward(&model, Loss::Logistic, &w, &batch).unwrap();
        assert!((got - expect).abs() < 1e-15);
    }
}
