use super::{DerivativeMode, EqTracker, NewtonConfig, Termination};
use crate::csdd::{csdd2, csdd_grad_hv, GradAndHv};
use crate::error::{Error, Result};
use crate::objective::{dot, norm, Objective};

/// Second-order probes of one batch objective at a fixed point.
pub(crate) struct Probe<'a, O> {
    obj: &'a O,
    w: &'a [f64],
    mode: DerivativeMode,
    h1: f64,
    h2: f64,
    base: Option<(f64, Vec<f64>)>,
}

impl<'a, O: Objective> Probe<'a, O> {
    pub(crate) fn new(obj: &'a O, w: &'a [f64], cfg: &NewtonConfig) -> Self {
        Self {
            obj,
            w,
            mode: cfg.derivative,
            h1: cfg.h1,
            h2: cfg.h2,
            base: None,
        }
    }

    fn real_grad(&mut self) -> Result<&(f64, Vec<f64>)> {
        if self.base.is_none() {
            self.base = Some(self.obj.value_and_grad(self.w)?);
        }
        Ok(self.base.as_ref().unwrap())
    }

    fn fd_hv(&mut self, p: &[f64], h: f64) -> Result<GradAndHv> {
        let shifted: Vec<f64> = self.w.iter().zip(p).map(|(w, p)| w + h * p).collect();
        let gp = self.obj.grad(&shifted)?;
        let (loss, g) = self.real_grad()?.clone();
        let hv: Vec<f64> = gp.iter().zip(&g).map(|(a, b)| (a - b) / h).collect();
        if !hv.iter().all(|x| x.is_finite()) {
            return Err(Error::non_finite(format!(
                "Hessian-vector product on {}",
                self.obj.describe()
            )));
        }
        Ok(GradAndHv { loss, g, hv })
    }

    pub(crate) fn grad_hv(&mut self, p: &[f64]) -> Result<GradAndHv> {
        match self.mode {
            DerivativeMode::ComplexStep => csdd_grad_hv(self.obj, self.w, p, self.h1),
            DerivativeMode::ForwardDifference { h } => self.fd_hv(p, h),
        }
    }

    pub(crate) fn curvature(&mut self, p: &[f64]) -> Result<f64> {
        match self.mode {
            DerivativeMode::ComplexStep => Ok(csdd2(self.obj, self.w, p, self.h2)?.kappa),
            DerivativeMode::ForwardDifference { h } => Ok(dot(p, &self.fd_hv(p, h)?.hv)),
        }
    }

    pub(crate) fn tracker(&mut self, dw: &[f64], g: &[f64]) -> Result<EqTracker> {
        let dw_h_dw = if dw.iter().all(|&x| x == 0.0) {
            0.0
        } else {
            self.curvature(dw)?
        };
        Ok(EqTracker {
            dw_g: dot(dw, g),
            dw_h_dw,
        })
    }
}

/// Per-iterate diagnostics. Index 0 is the starting point.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KrylovTrace {
    pub residual_norms: Vec<f64>,
    /// `E_Q` at each iterate, from the incrementally updated `H·Δw`.
    pub energies: Vec<f64>,
    /// Curvature divisors used, one per completed iteration.
    pub divisors: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KrylovResult {
    /// The CG iterate. Zero when the first direction already has negative
    /// curvature and there was no warm start.
    pub dw: Vec<f64>,
    pub tracker: EqTracker,
    pub termination: Termination,
    pub cg_iters: usize,
    pub batch_loss: f64,
    pub g_batch: Vec<f64>,
    pub trace: KrylovTrace,
}

impl KrylovResult {
    /// The direction to step along: the CG iterate, or `−g_batch` when CG
    /// stopped on negative curvature before moving.
    pub fn step_direction(&self) -> Vec<f64> {
        if self.termination == Termination::NegativeCurvature && self.dw.iter().all(|&x| x == 0.0) {
            self.g_batch.iter().map(|g| -g).collect()
        } else {
            self.dw.clone()
        }
    }
}

/// CG on `H·Δw = −g` for the batch objective `obj` at `w`, started from
/// `warm`. The batch gradient comes from the same fused pass that applies
/// `H` to `warm`.
pub fn krylov_solve<O: Objective>(
    obj: &O,
    w: &[f64],
    warm: &[f64],
    cfg: &NewtonConfig,
) -> Result<KrylovResult> {
    let mut probe = Probe::new(obj, w, cfg);
    let start = probe.grad_hv(warm)?;
    let g = start.g;
    let tol = cfg.cg_residual_tol * norm(&g);

    let mut dw = warm.to_vec();
    let mut h_dw = start.hv;
    let mut r: Vec<f64> = g.iter().zip(&h_dw).map(|(g, hw)| -(g + hw)).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let energy = |dw: &[f64], h_dw: &[f64]| dot(dw, &g) + 0.5 * dot(dw, h_dw);

    let mut trace = KrylovTrace {
        residual_norms: vec![rr.sqrt()],
        energies: vec![energy(&dw, &h_dw)],
        divisors: Vec::new(),
    };
    let mut termination = Termination::MaxIters;
    let mut iters = 0;
    if rr.sqrt() <= tol {
        termination = Termination::ResidualSmall;
    }
    while termination == Termination::MaxIters && iters < cfg.cg_max_iters {
        let raw = probe.curvature(&p)?;
        if raw < 0.0 && cfg.early_termination {
            termination = Termination::NegativeCurvature;
            break;
        }
        let kappa = if (0.0..cfg.flat_eps).contains(&raw) {
            cfg.flat_momentum_coef * norm(&p)
        } else {
            raw
        };
        let q = probe.grad_hv(&p)?.hv;
        let alpha = rr / kappa;
        for i in 0..dw.len() {
            dw[i] += alpha * p[i];
            h_dw[i] += alpha * q[i];
            r[i] -= alpha * q[i];
        }
        iters += 1;
        let rr_new = dot(&r, &r);
        trace.divisors.push(kappa);
        trace.residual_norms.push(rr_new.sqrt());
        trace.energies.push(energy(&dw, &h_dw));
        if !dw.iter().all(|x| x.is_finite()) {
            return Err(Error::non_finite(format!("CG iterate on {}", obj.describe())));
        }
        if rr_new.sqrt() <= tol {
            termination = Termination::ResidualSmall;
            break;
        }
        let beta = rr_new / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_new;
    }

    let tracker = probe.tracker(&dw, &g)?;
    Ok(KrylovResult {
        dw,
        tracker,
        termination,
        cg_iters: iters,
        batch_loss: start.loss,
        g_batch: g,
        trace,
    })
}
