use super::krylov::Probe;
use super::{
    backtracking_newton_step, krylov_solve, postbatch_screen, prebatch_screen, size_step, NewtonConfig, StepOutcome,
    StepRule,
};
use crate::error::{Error, Result};
use crate::objective::{dot, Objective};

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonState {
    pub w: Vec<f64>,
    pub g_global: Vec<f64>,
    pub global_loss: f64,
    /// Warm start for the next Krylov solve.
    pub dw_prev: Vec<f64>,
    pub batch_index: usize,
    pub epoch: usize,
    /// Accepted steps since the last global-gradient refresh.
    pub since_refresh: usize,
}

impl NewtonState {
    pub fn new<G: Objective>(global: &G, w: Vec<f64>) -> Result<Self> {
        if w.len() != global.num_params() {
            return Err(Error::shape("parameter vector", global.num_params(), w.len()));
        }
        let (global_loss, g_global) = global.value_and_grad(&w)?;
        Ok(Self {
            dw_prev: vec![0.0; w.len()],
            w,
            g_global,
            global_loss,
            batch_index: 0,
            epoch: 0,
            since_refresh: 0,
        })
    }

    /// Clears the warm start and the batch counter.
    pub fn begin_epoch(&mut self) {
        self.dw_prev.iter_mut().for_each(|x| *x = 0.0);
        self.batch_index = 0;
    }
}

/// One outer iteration on `batch`. Numeric failures skip the batch and are
/// reported in the outcome; `state` is then left unchanged.
pub fn newton_step<G: Objective, B: Objective>(
    state: &mut NewtonState,
    global: &G,
    batch: &B,
    cfg: &NewtonConfig,
) -> StepOutcome {
    state.batch_index += 1;
    let (batch_loss, g_local) = match batch.value_and_grad(&state.w[..]) {
        Ok(v) => v,
        Err(e) => return StepOutcome::skipped(f64::NAN, Some(e.to_string())),
    };
    if !prebatch_screen(&g_local, &state.g_global) {
        return StepOutcome::skipped(batch_loss, None);
    }
    match solve_and_move(state, global, batch, cfg) {
        Ok(outcome) => outcome,
        Err(e) => StepOutcome::skipped(batch_loss, Some(e.to_string())),
    }
}

fn solve_and_move<G: Objective, B: Objective>(
    state: &mut NewtonState,
    global: &G,
    batch: &B,
    cfg: &NewtonConfig,
) -> Result<StepOutcome> {
    let warm = if cfg.warm_start {
        state.dw_prev.clone()
    } else {
        vec![0.0; state.w.len()]
    };
    let solve = krylov_solve(batch, &state.w, &warm, cfg)?;
    let direction = solve.step_direction();
    let dw = postbatch_screen(&direction, &state.g_global);
    let tracker = if dw == solve.dw {
        solve.tracker
    } else {
        Probe::new(batch, &state.w, cfg).tracker(&dw, &solve.g_batch)?
    };
    let f_w = solve.batch_loss;
    let size = match cfg.step_rule {
        StepRule::TaylorRatio => size_step(batch, &state.w, &dw, &tracker, f_w, cfg),
        StepRule::Backtracking { c, tau } => {
            backtracking_newton_step(batch, &state.w, &dw, &tracker, f_w, c, tau, cfg)
        }
    };
    let w_new: Vec<f64> = state.w.iter().zip(&dw).map(|(w, d)| w + size.gamma * d).collect();
    if !w_new.iter().all(|x| x.is_finite()) {
        return Err(Error::non_finite(format!("updated parameters on {}", batch.describe())));
    }
    let screened_dot = dot(&dw, &state.g_global);
    let refresh = if state.since_refresh + 1 >= cfg.grad_refresh_every {
        Some(global.value_and_grad(&w_new)?)
    } else {
        None
    };
    state.w = w_new;
    if cfg.warm_start {
        state.dw_prev = dw.iter().map(|d| size.gamma * d).collect();
    }
    state.since_refresh += 1;
    let global_loss = refresh.map(|(loss, g)| {
        state.global_loss = loss;
        state.g_global = g;
        state.since_refresh = 0;
        loss
    });
    Ok(StepOutcome {
        accepted: true,
        gamma: size.gamma,
        eta: size.eta,
        cg_iters: solve.cg_iters,
        termination: solve.termination,
        adjust_attempts: size.attempts,
        batch_loss: f_w,
        global_loss,
        screened_dot,
        min_divisor: solve.trace.divisors.iter().copied().reduce(f64::min),
        error: None,
    })
}

/// One pass over `batches`. The warm start is reset at the epoch boundary.
pub fn newton_epoch<G: Objective, B: Objective>(
    mut state: NewtonState,
    global: &G,
    batches: &[B],
    cfg: &NewtonConfig,
) -> (NewtonState, Vec<StepOutcome>) {
    state.begin_epoch();
    let outcomes = batches
        .iter()
        .map(|b| newton_step(&mut state, global, b, cfg))
        .collect();
    state.epoch += 1;
    (state, outcomes)
}
