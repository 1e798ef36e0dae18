use crate::objective::dot;

/// Keep a batch unless its gradient opposes the global one.
pub fn prebatch_screen(g_local: &[f64], g_global: &[f64]) -> bool {
    dot(g_local, g_global) >= 0.0
}

/// Removes the component of `dw` that ascends along `g_global`.
///
/// The result satisfies `dw·g_global ≤ 0` exactly in floating point: if the
/// projected dot product still rounds positive, the projection is repeated
/// with a slight overshoot.
pub fn postbatch_screen(dw: &[f64], g_global: &[f64]) -> Vec<f64> {
    let gg = dot(g_global, g_global);
    let mut out = dw.to_vec();
    if gg == 0.0 || !gg.is_finite() {
        return out;
    }
    let mut overshoot = 1.0;
    for _ in 0..8 {
        let d = dot(&out, g_global);
        if !(d > 0.0) {
            break;
        }
        let c = overshoot * d / gg;
        for (x, g) in out.iter_mut().zip(g_global) {
            *x -= c * g;
        }
        overshoot *= 2.0;
    }
    out
}
