//! Complex-step directional derivatives of an [`Objective`].
//!
//! Perturbing every parameter at once along a direction `p` turns the scalar
//! complex-step formulas into directional ones:
//!
//! * `Hp ≈ Im(∇f(w + h·i·p)) / h` from one complex forward and backward pass,
//!   whose real part is the ordinary gradient;
//! * `pᵀHp ≈ Im₁₂(f(w + (h·i₁ + h·i₂)·p)) / h²` from one bicomplex forward pass.

use crate::error::{Error, Result};
use crate::multicomplex::{BiCplx, Cplx, Scalar};
use crate::objective::{norm, Objective};
use crate::tensor_net::Tensor;

pub const CSDD_DEFAULT_H1: f64 = 1e-20;
pub const CSDD_DEFAULT_H2: f64 = 1e-6;
/// Largest parameter count [`brute_hessian`] accepts.
pub const BRUTE_HESSIAN_MAX_PARAMS: usize = 200;

/// Batch gradient and Hessian-vector product from one fused pass.
#[derive(Clone, Debug, PartialEq)]
pub struct GradAndHv {
    pub loss: f64,
    pub g: Vec<f64>,
    pub hv: Vec<f64>,
}

/// `pᵀHp` along the probed direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Curvature {
    pub kappa: f64,
}

fn check_direction<O: Objective>(obj: &O, w: &[f64], p: &[f64], h: f64) -> Result<()> {
    let n = obj.num_params();
    if w.len() != n {
        return Err(Error::shape("parameter vector", n, w.len()));
    }
    if p.len() != n {
        return Err(Error::shape("direction", n, p.len()));
    }
    if !p.iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidArgument("direction has non-finite entries".into()));
    }
    if !(h > 0.0 && h.is_normal()) {
        return Err(Error::InvalidArgument(format!("step {h} must be positive and normal")));
    }
    Ok(())
}

pub fn csdd_grad_hv<O: Objective>(obj: &O, w: &[f64], p: &[f64], h: f64) -> Result<GradAndHv> {
    check_direction(obj, w, p, h)?;
    let wc: Vec<Cplx> = w.iter().zip(p).map(|(&x, &d)| Cplx::new(x, h * d)).collect();
    let (loss, grad) = obj.value_and_grad(&wc)?;
    let g: Vec<f64> = grad.iter().map(|z| z.re).collect();
    let hv: Vec<f64> = grad.iter().map(|z| z.im / h).collect();
    if !hv.iter().all(|x| x.is_finite()) {
        return Err(Error::non_finite(format!(
            "Hessian-vector product on {}",
            obj.describe()
        )));
    }
    Ok(GradAndHv {
        loss: loss.re,
        g,
        hv,
    })
}

pub fn csdd2<O: Objective>(obj: &O, w: &[f64], p: &[f64], h: f64) -> Result<Curvature> {
    check_direction(obj, w, p, h)?;
    // probe along p/‖p‖ and rescale, so the perturbation stays O(h) however long p is
    let scale = norm(p);
    if scale == 0.0 {
        return Ok(Curvature { kappa: 0.0 });
    }
    let wb: Vec<BiCplx> = w
        .iter()
        .zip(p)
        .map(|(&x, &d)| BiCplx::from_parts(x, h * d / scale, h * d / scale, 0.0))
        .collect();
    let kappa = obj.value(&wb)?.imag2().value / (h * h) * (scale * scale);
    if !kappa.is_finite() {
        return Err(Error::non_finite(format!("curvature on {}", obj.describe())));
    }
    Ok(Curvature { kappa })
}

/// Dense Hessian assembled entry by entry from mixed bicomplex partials.
/// Every entry is computed independently, so the result is symmetric only
/// to rounding.
pub fn brute_hessian<O: Objective>(obj: &O, w: &[f64], h: f64) -> Result<Tensor<f64>> {
    let n = obj.num_params();
    if n > BRUTE_HESSIAN_MAX_PARAMS {
        return Err(Error::OracleGuard {
            n,
            max: BRUTE_HESSIAN_MAX_PARAMS,
        });
    }
    check_direction(obj, w, w, h)?;
    let base: Vec<BiCplx> = w.iter().map(|&x| BiCplx::from_real(x)).collect();
    let mut data = vec![0.0; n * n];
    let mut point = base.clone();
    for a in 0..n {
        for b in 0..n {
            point[a] = point[a] + BiCplx::I1.scale(h);
            point[b] = point[b] + BiCplx::I2.scale(h);
            data[a * n + b] = obj.value(&point)?.imag2().value / (h * h);
            point[a] = base[a];
            point[b] = base[b];
        }
    }
    if !data.iter().all(|x| x.is_finite()) {
        return Err(Error::non_finite(format!("Hessian oracle on {}", obj.describe())));
    }
    Tensor::from_vec(vec![n, n], data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{Quadratic, Quartic};

    fn a2() -> Quadratic {
        Quadratic::new(vec![2.0, 1.0, 1.0, 3.0], vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn hv_of_quadratic_is_a_column() {
        let r = csdd_grad_hv(&a2(), &[0.3, -0.2], &[1.0, 0.0], CSDD_DEFAULT_H1).unwrap();
        assert!((r.hv[0] - 2.0).abs() < 1e-12 && (r.hv[1] - 1.0).abs() < 1e-12);
        assert_eq!(r.g, a2().apply(&[0.3, -0.2]));
    }

    #[test]
    fn zero_direction_gives_zero_hv_and_exact_gradient() {
        let w = [0.7, 1.9];
        let r = csdd_grad_hv(&Quartic { dim: 2 }, &w, &[0.0, 0.0], CSDD_DEFAULT_H1).unwrap();
        assert_eq!(r.hv, vec![0.0, 0.0]);
        assert_eq!(r.g, Quartic { dim: 2 }.grad(&w).unwrap());
    }

    #[test]
    fn curvature_of_quadratic() {
        let k = csdd2(&a2(), &[0.0, 0.0], &[1.0, 0.0], CSDD_DEFAULT_H2).unwrap();
        assert!((k.kappa - 2.0).abs() < 1e-12);
        let k = csdd2(&a2(), &[0.5, 0.5], &[1.0, -1.0], CSDD_DEFAULT_H2).unwrap();
        assert!((k.kappa - 3.0).abs() < 1e-12);
    }

    #[test]
    fn brute_hessian_of_quadratic() {
        let h = brute_hessian(&a2(), &[1.0, 2.0], CSDD_DEFAULT_H2).unwrap();
        for (x, y) in h.data().iter().zip([2.0, 1.0, 1.0, 3.0]) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn guard_and_argument_errors() {
        let big = Quartic { dim: 201 };
        assert!(matches!(
            brute_hessian(&big, &[0.0; 201], 1e-6),
            Err(Error::OracleGuard { n: 201, max: 200 })
        ));
        assert!(csdd2(&a2(), &[0.0, 0.0], &[f64::NAN, 0.0], 1e-6).is_err());
        assert!(csdd_grad_hv(&a2(), &[0.0, 0.0], &[1.0], 1e-20).is_err());
        assert!(csdd_grad_hv(&a2(), &[0.0, 0.0], &[1.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn quartic_curvature_matches_closed_form() {
        // pᵀHp = 12 Σ wᵢ² pᵢ²
        let (w, p) = ([1.0, -0.5], [0.3, 2.0]);
        let k = csdd2(&Quartic { dim: 2 }, &w, &p, CSDD_DEFAULT_H2).unwrap().kappa;
        let exact = 12.0 * (0.09 + 0.25 * 4.0);
        assert!((k - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn long_directions_do_not_overflow() {
        let f = Quartic { dim: 2 };
        let p = [3e9, -4e9];
        let k = csdd2(&f, &[0.5, 1.0], &p, CSDD_DEFAULT_H2).unwrap().kappa;
        let exact = 12.0 * (0.25 * 9e18 + 16e18);
        assert!((k - exact).abs() < 1e-9 * exact, "{k}");
    }
}
