use super::{EqTracker, NewtonConfig, MAX_BACKTRACK};
use crate::error::Result;
use crate::objective::Objective;

/// Relative error of the quadratic model for a trial step,
/// `|(Δf − E_Q(γ)) / Δf|`, with `Δf = f_trial − f_w`.
pub fn taylor_ratio(f_w: f64, f_trial: f64, tracker: &EqTracker, gamma: f64) -> f64 {
    let df = f_trial - f_w;
    if df.abs() < 1e-30 {
        return 0.0;
    }
    ((df - tracker.energy(gamma)) / df).abs()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSize {
    pub gamma: f64,
    pub eta: f64,
    pub attempts: usize,
    /// Objective at `w + γ·dw`.
    pub f_trial: f64,
}

fn trial<O: Objective>(obj: &O, w: &[f64], dw: &[f64], gamma: f64) -> Result<f64> {
    let point: Vec<f64> = w.iter().zip(dw).map(|(w, d)| w + gamma * d).collect();
    obj.value(&point)
}

/// `f` at a trial point, with evaluation failures read as `+∞`.
fn trial_or_inf<O: Objective>(obj: &O, w: &[f64], dw: &[f64], gamma: f64) -> f64 {
    match trial(obj, w, dw, gamma) {
        Ok(v) if v.is_finite() => v,
        _ => f64::INFINITY,
    }
}

fn eta_at(f_w: f64, f_trial: f64, tracker: &EqTracker, gamma: f64) -> f64 {
    if f_trial.is_finite() {
        taylor_ratio(f_w, f_trial, tracker, gamma)
    } else {
        f64::INFINITY
    }
}

/// Taylor-ratio step sizing. `f_w` is the batch loss at `w`.
pub fn size_step<O: Objective>(
    obj: &O,
    w: &[f64],
    dw: &[f64],
    tracker: &EqTracker,
    f_w: f64,
    cfg: &NewtonConfig,
) -> StepSize {
    let (lo, hi) = (0.5 * cfg.eta_tilde, cfg.eta_tilde);
    let mut gamma = 1.0;
    let mut f_trial = trial_or_inf(obj, w, dw, gamma);
    let mut eta = eta_at(f_w, f_trial, tracker, gamma);
    if eta <= lo {
        return StepSize {
            gamma,
            eta,
            attempts: 0,
            f_trial,
        };
    }
    let mut attempts = 0;
    while !(lo..=hi).contains(&eta) {
        if attempts == cfg.max_step_adjust {
            gamma = cfg.fallback_gamma;
            f_trial = trial_or_inf(obj, w, dw, gamma);
            eta = eta_at(f_w, f_trial, tracker, gamma);
            break;
        }
        gamma *= if eta > hi { cfg.step_shrink } else { cfg.step_grow };
        attempts += 1;
        f_trial = trial_or_inf(obj, w, dw, gamma);
        eta = eta_at(f_w, f_trial, tracker, gamma);
    }
    StepSize {
        gamma,
        eta,
        attempts,
        f_trial,
    }
}

/// Armijo backtracking. `dw_g` is `Δwᵀ∇f(w)`; `eta` in the result is the
/// Taylor ratio at the accepted step, for reporting.
#[allow(clippy::too_many_arguments)]
pub fn backtracking_newton_step<O: Objective>(
    obj: &O,
    w: &[f64],
    dw: &[f64],
    tracker: &EqTracker,
    f_w: f64,
    c: f64,
    tau: f64,
    cfg: &NewtonConfig,
) -> StepSize {
    let mut gamma = 1.0;
    for k in 0..=MAX_BACKTRACK {
        let f_trial = trial_or_inf(obj, w, dw, gamma);
        if f_trial <= f_w + gamma * c * tracker.dw_g {
            return StepSize {
                gamma,
                eta: eta_at(f_w, f_trial, tracker, gamma),
                attempts: k,
                f_trial,
            };
        }
        gamma *= tau;
    }
    let gamma = cfg.fallback_gamma;
    let f_trial = trial_or_inf(obj, w, dw, gamma);
    StepSize {
        gamma,
        eta: eta_at(f_w, f_trial, tracker, gamma),
        attempts: MAX_BACKTRACK + 1,
        f_trial,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{Quadratic, Quartic};

    fn quartic_tracker() -> EqTracker {
        // f = w⁴ at w = 1, Δw = −0.1: Δwᵀg = −0.4, ΔwᵀHΔw = 12·0.01
        EqTracker {
            dw_g: -0.4,
            dw_h_dw: 0.12,
        }
    }

    #[test]
    fn quartic_taylor_ratio() {
        let f_trial = 0.9f64.powi(4);
        let eta = taylor_ratio(1.0, f_trial, &quartic_tracker(), 1.0);
        assert!((eta - 0.0039 / 0.3439).abs() < 1e-12, "{eta}");
        assert!((eta - 0.01134).abs() < 1e-5);
    }

    #[test]
    fn exact_model_gives_zero_ratio() {
        let t = quartic_tracker();
        assert_eq!(taylor_ratio(0.0, t.energy(0.7), &t, 0.7), 0.0);
        assert_eq!(taylor_ratio(1.0, 1.0, &t, 1.0), 0.0);
    }

    #[test]
    fn quadratic_accepts_unit_step() {
        let q = Quadratic::new(vec![2.0, 1.0, 1.0, 3.0], vec![1.0, 1.0]).unwrap();
        let dw = [-0.4, -0.2];
        let t = EqTracker {
            dw_g: -0.6,
            dw_h_dw: 0.6,
        };
        let s = size_step(&q, &[0.0, 0.0], &dw, &t, 0.0, &NewtonConfig::default());
        assert_eq!((s.gamma, s.attempts), (1.0, 0));
        assert!(s.eta < 1e-12);
    }

    #[test]
    fn quartic_shrinks_into_band() {
        let cfg = NewtonConfig {
            eta_tilde: 0.005,
            ..NewtonConfig::default()
        };
        let s = size_step(&Quartic { dim: 1 }, &[1.0], &[-0.1], &quartic_tracker(), 1.0, &cfg);
        assert_eq!(s.gamma, 0.5);
        assert_eq!(s.attempts, 1);
        assert!((0.0025..=0.005).contains(&s.eta));
        assert!((s.eta - 0.00266).abs() < 1e-5, "{}", s.eta);
    }

    #[test]
    fn oscillation_falls_back() {
        // a model that is never right: η stays at 1 for every γ
        let t = EqTracker {
            dw_g: 0.0,
            dw_h_dw: 0.0,
        };
        let cfg = NewtonConfig::default();
        let s = size_step(&Quartic { dim: 1 }, &[1.0], &[-0.1], &t, 1.0, &cfg);
        assert_eq!(s.gamma, 1e-6);
        assert_eq!(s.attempts, cfg.max_step_adjust);
    }

    #[test]
    fn armijo_examples() {
        let cfg = NewtonConfig::default();
        let q = Quadratic::new(vec![2.0, 1.0, 1.0, 3.0], vec![1.0, 1.0]).unwrap();
        let t = EqTracker {
            dw_g: -0.6,
            dw_h_dw: 0.6,
        };
        let s = backtracking_newton_step(&q, &[0.0, 0.0], &[-0.4, -0.2], &t, 0.0, 0.01, 0.8, &cfg);
        assert_eq!((s.gamma, s.attempts), (1.0, 0));

        let quartic = Quartic { dim: 1 };
        let t = EqTracker {
            dw_g: -4.0 / 3.0,
            dw_h_dw: 12.0 / 9.0,
        };
        let s = backtracking_newton_step(&quartic, &[1.0], &[-1.0 / 3.0], &t, 1.0, 0.01, 0.8, &cfg);
        assert_eq!(s.gamma, 1.0);
        assert!((s.f_trial - 0.19753).abs() < 1e-5);

        // Δwᵀg = 0 while f rises along Δw
        let t = EqTracker {
            dw_g: 0.0,
            dw_h_dw: 0.0,
        };
        let s = backtracking_newton_step(&quartic, &[1.0], &[1.0], &t, 1.0, 0.01, 0.8, &cfg);
        assert_eq!(s.gamma, cfg.fallback_gamma);
        assert_eq!(s.attempts, MAX_BACKTRACK + 1);
    }
}
