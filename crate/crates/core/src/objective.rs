//! Differentiable objectives `f: ℝᴺ → ℝ` that can be evaluated over any
//! [`Scalar`] kind.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::multicomplex::Scalar;
use crate::tensor_net::{self, Batch, Loss, Model};

pub trait Objective {
    fn num_params(&self) -> usize;

    fn value<S: Scalar>(&self, w: &[S]) -> Result<S>;

    fn value_and_grad<S: Scalar>(&self, w: &[S]) -> Result<(S, Vec<S>)>;

    /// Short label used in error messages.
    fn describe(&self) -> String {
        "objective".into()
    }

    fn grad<S: Scalar>(&self, w: &[S]) -> Result<Vec<S>> {
        self.value_and_grad(w).map(|(_, g)| g)
    }
}

impl<O: Objective + ?Sized> Objective for &O {
    fn num_params(&self) -> usize {
        (**self).num_params()
    }
    fn value<S: Scalar>(&self, w: &[S]) -> Result<S> {
        (**self).value(w)
    }
    fn value_and_grad<S: Scalar>(&self, w: &[S]) -> Result<(S, Vec<S>)> {
        (**self).value_and_grad(w)
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// Mean loss of a network over one batch.
#[derive(Clone, Copy, Debug)]
pub struct NetObjective<'a> {
    pub model: &'a Model,
    pub loss: Loss,
    pub batch: &'a Batch,
}

impl<'a> NetObjective<'a> {
    pub fn new(model: &'a Model, loss: Loss, batch: &'a Batch) -> Self {
        Self { model, loss, batch }
    }
}

impl Objective for NetObjective<'_> {
    fn num_params(&self) -> usize {
        self.model.param_count()
    }

    fn value<S: Scalar>(&self, w: &[S]) -> Result<S> {
        tensor_net::forward(self.model, self.loss, w, self.batch)
    }

    fn value_and_grad<S: Scalar>(&self, w: &[S]) -> Result<(S, Vec<S>)> {
        tensor_net::value_and_gradient(self.model, self.loss, w, self.batch)
    }

    fn describe(&self) -> String {
        format!("batch {}", self.batch.id())
    }
}

/// `f(w) = ½ wᵀAw + bᵀw` with symmetric `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct Quadratic {
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Quadratic {
    /// `a` is row-major `n × n` and must be symmetric.
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let n = b.len();
        if a.len() != n * n {
            return Err(Error::shape("quadratic matrix", n * n, a.len()));
        }
        for i in 0..n {
            for j in 0..i {
                if a[i * n + j] != a[j * n + i] {
                    return Err(Error::InvalidArgument(format!(
                        "quadratic matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { n, a, b })
    }

    /// `A = Q diag(eigenvalues) Qᵀ` with a seeded random orthogonal `Q`.
    /// Returns the objective and the columns of `Q`.
    pub fn with_spectrum(eigenvalues: &[f64], b: Vec<f64>, seed: u64) -> Result<(Self, Vec<Vec<f64>>)> {
        let n = eigenvalues.len();
        let q = random_orthonormal(n, seed);
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = (0..n).map(|k| q[k][i] * eigenvalues[k] * q[k][j]).sum();
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        Ok((Self::new(a, b)?, q))
    }

    /// SPD matrix with log-uniform eigenvalues in `[1, cond]` (both ends
    /// included) and a standard-normal-ish linear term.
    pub fn random_spd(n: usize, cond: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_59d);
        let eig: Vec<f64> = (0..n)
            .map(|k| match k {
                0 => 1.0,
                k if k + 1 == n => cond,
                _ => cond.powf(rng.random::<f64>()),
            })
            .collect();
        let b = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        Self::with_spectrum(&eig, b, seed).expect("shapes agree").0
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &[f64] {
        &self.a
    }

    pub fn linear(&self) -> &[f64] {
        &self.b
    }

    /// `A·w` for real `w`.
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        self.a.chunks(self.n).map(|row| dot(row, w)).collect()
    }

    fn check<S>(&self, w: &[S]) -> Result<()> {
        if w.len() != self.n {
            return Err(Error::shape("parameter vector", self.n, w.len()));
        }
        Ok(())
    }

    fn grad_of<S: Scalar>(&self, w: &[S]) -> Vec<S> {
        self.a
            .chunks(self.n)
            .zip(&self.b)
            .map(|(row, &bi)| {
                let mut acc = S::from_real(bi);
                for (&aij, &wj) in row.iter().zip(w) {
                    acc += wj.scale(aij);
                }
                acc
            })
            .collect()
    }
}

impl Objective for Quadratic {
    fn num_params(&self) -> usize {
        self.n
    }

    fn value<S: Scalar>(&self, w: &[S]) -> Result<S> {
        self.value_and_grad(w).map(|(v, _)| v)
    }

    fn value_and_grad<S: Scalar>(&self, w: &[S]) -> Result<(S, Vec<S>)> {
        self.check(w)?;
        let g = self.grad_of(w);
        // ½wᵀAw + bᵀw = ½wᵀ(Aw + b) + ½bᵀw
        let mut v = S::zero();
        for ((&wi, &gi), &bi) in w.iter().zip(&g).zip(&self.b) {
            v += wi * (gi + S::from_real(bi));
        }
        Ok((v.scale(0.5), g))
    }

    fn describe(&self) -> String {
        format!("quadratic (n = {})", self.n)
    }
}

/// `f(w) = Σ wᵢ⁴`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quartic {
    pub dim: usize,
}

impl Objective for Quartic {
    fn num_params(&self) -> usize {
        self.dim
    }

    fn value<S: Scalar>(&self, w: &[S]) -> Result<S> {
        self.value_and_grad(w).map(|(v, _)| v)
    }

    fn value_and_grad<S: Scalar>(&self, w: &[S]) -> Result<(S, Vec<S>)> {
        if w.len() != self.dim {
            return Err(Error::shape("parameter vector", self.dim, w.len()));
        }
        let mut v = S::zero();
        let mut g = Vec::with_capacity(w.len());
        for &wi in w {
            let cube = wi * wi * wi;
            v += cube * wi;
            g.push(cube.scale(4.0));
        }
        Ok((v, g))
    }

    fn describe(&self) -> String {
        "quartic".into()
    }
}

/// `−f`, for adversarial batch tests.
#[derive(Clone, Copy, Debug)]
pub struct Negated<O>(pub O);

impl<O: Objective> Objective for Negated<O> {
    fn num_params(&self) -> usize {
        self.0.num_params()
    }

    fn value<S: Scalar>(&self, w: &[S]) -> Result<S> {
        self.0.value(w).map(|v| -v)
    }

    fn value_and_grad<S: Scalar>(&self, w: &[S]) -> Result<(S, Vec<S>)> {
        let (v, g) = self.0.value_and_grad(w)?;
        Ok((-v, g.into_iter().map(|x| -x).collect()))
    }

    fn describe(&self) -> String {
        format!("negated {}", self.0.describe())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Rows are orthonormal: Gram-Schmidt (applied twice) on uniform vectors.
fn random_orthonormal(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
    while q.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for _ in 0..2 {
            for u in &q {
                let c = dot(u, &v);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= c * ui;
                }
            }
        }
        let len = norm(&v);
        if len > 1e-6 {
            q.push(v.into_iter().map(|x| x / len).collect());
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multicomplex::Cplx;

    #[test]
    fn quadratic_value_and_gradient() {
        let q = Quadratic::new(vec![2.0, 1.0, 1.0, 3.0], vec![1.0, 1.0]).unwrap();
        let (v, g) = q.value_and_grad(&[1.0, -1.0]).unwrap();
        // ½(2 − 2 + 3) + 0
        assert_eq!(v, 1.5);
        assert_eq!(g, vec![2.0, -1.0]);
        assert!(Quadratic::new(vec![2.0, 1.0, 0.0, 3.0], vec![0.0; 2]).is_err());
    }

    #[test]
    fn spectrum_is_reproduced() {
        let (q, vecs) = Quadratic::with_spectrum(&[-2.0, 1.0, 5.0], vec![0.0; 3], 4).unwrap();
        for (lambda, v) in [-2.0, 1.0, 5.0].into_iter().zip(&vecs) {
            let av = q.apply(v);
            for (x, y) in av.iter().zip(v) {
                assert!((x - lambda * y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quartic_complex_step() {
        let h = 1e-20;
        let (v, _) = Quartic { dim: 1 }.value_and_grad(&[Cplx::new(1.0, h)]).unwrap();
        assert_eq!(v.re, 1.0);
        assert_eq!(v.im / h, 4.0);
    }

    #[test]
    fn negation_flips_gradient() {
        let q = Quartic { dim: 2 };
        let g = Negated(q).grad(&[1.0, 2.0]).unwrap();
        assert_eq!(g, vec![-4.0, -32.0]);
    }
}
