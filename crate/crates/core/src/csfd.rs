//! Scalar numerical differentiation: forward and central differences and
//! first/second-order complex-step differences, plus the relative-error
//! sweep used to compare them.

use std::fmt;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::multicomplex::{BiCplx, Cplx, Scalar};

/// Default step for [`csfd1`]. No subtraction is involved, so it can sit far
/// below √ε.
pub const CSFD1_DEFAULT_H: f64 = 1e-20;

/// Default step for [`csfd2`]; large enough that the `i₁i₂` coefficient
/// (which scales as h²) stays clear of denormals.
pub const CSFD2_DEFAULT_H: f64 = 1e-6;

/// Smallest step accepted by [`csfd2`] so that h² does not underflow.
pub const CSFD2_MIN_H: f64 = 1e-150;

/// A real function that can be re-evaluated over any [`Scalar`] kind.
pub trait ScalarFn {
    fn eval<S: Scalar>(&self, x: S) -> S;
}

/// `f(x) = eˣ / (x² + 1)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExpOverQuadratic;

impl ExpOverQuadratic {
    /// Closed form `f'(x) = eˣ (x − 1)² / (x² + 1)²`.
    pub fn derivative(x: f64) -> f64 {
        let q = x * x + 1.0;
        x.exp() * (x - 1.0).powi(2) / (q * q)
    }
}

impl ScalarFn for ExpOverQuadratic {
    fn eval<S: Scalar>(&self, x: S) -> S {
        x.exp() / (x * x + S::one())
    }
}

/// `f(x) = slope·x + intercept`.
#[derive(Clone, Copy, Debug)]
pub struct Linear {
    pub slope: f64,
    pub intercept: f64,
}

impl ScalarFn for Linear {
    fn eval<S: Scalar>(&self, x: S) -> S {
        x.scale(self.slope) + S::from_real(self.intercept)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Ffd,
    Cfd,
    Csfd1,
    Csfd2,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::Ffd,
        SchemeKind::Cfd,
        SchemeKind::Csfd1,
        SchemeKind::Csfd2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::Ffd => "FFD",
            SchemeKind::Cfd => "CFD",
            SchemeKind::Csfd1 => "CSFD1",
            SchemeKind::Csfd2 => "CSFD2",
        }
    }

    /// `true` for schemes approximating the second derivative.
    pub fn is_second_order(self) -> bool {
        matches!(self, SchemeKind::Csfd2)
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A differentiation scheme with a validated perturbation size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffScheme {
    kind: SchemeKind,
    h: f64,
}

impl DiffScheme {
    pub fn new(kind: SchemeKind, h: f64) -> Result<Self> {
        check_step(h)?;
        Ok(Self { kind, h })
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn apply<F: ScalarFn>(&self, f: &F, x0: f64) -> Result<f64> {
        match self.kind {
            SchemeKind::Ffd => ffd(|x| f.eval(x), x0, self.h),
            SchemeKind::Cfd => cfd(|x| f.eval(x), x0, self.h),
            SchemeKind::Csfd1 => csfd1(|z: Cplx| f.eval(z), x0, self.h),
            SchemeKind::Csfd2 => csfd2(|z: BiCplx| f.eval(z), x0, self.h),
        }
    }
}

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_normal() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "perturbation size must be a positive normal float, got {h}"
        )))
    }
}

fn finite(v: f64, what: &str, at: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::non_finite(format!("{what} at x = {at}")))
    }
}

/// Forward difference `(f(x0 + h) − f(x0)) / h`.
pub fn ffd(f: impl Fn(f64) -> f64, x0: f64, h: f64) -> Result<f64> {
    check_step(h)?;
    let hi = finite(f(x0 + h), "f", x0 + h)?;
    let lo = finite(f(x0), "f", x0)?;
    Ok((hi - lo) / h)
}

/// Central difference `(f(x0 + h) − f(x0 − h)) / 2h`.
pub fn cfd(f: impl Fn(f64) -> f64, x0: f64, h: f64) -> Result<f64> {
    check_step(h)?;
    let hi = finite(f(x0 + h), "f", x0 + h)?;
    let lo = finite(f(x0 - h), "f", x0 - h)?;
    Ok((hi - lo) / (2.0 * h))
}

/// First-order complex step `Im(f(x0 + h·i)) / h`.
pub fn csfd1(f: impl Fn(Cplx) -> Cplx, x0: f64, h: f64) -> Result<f64> {
    check_step(h)?;
    let y = f(Cplx::new(x0, h));
    if !y.is_finite() {
        return Err(Error::non_finite(format!("complex-step evaluation at x = {x0}")));
    }
    Ok(y.im / h)
}

/// Second-order complex step `Im⁽²⁾(f(x0 + h·i₁ + h·i₂)) / h²`.
pub fn csfd2(f: impl Fn(BiCplx) -> BiCplx, x0: f64, h: f64) -> Result<f64> {
    check_step(h)?;
    if h < CSFD2_MIN_H {
        return Err(Error::InvalidArgument(format!(
            "second-order step {h} is below {CSFD2_MIN_H}; h² would underflow"
        )));
    }
    let y = f(BiCplx::from_parts(x0, h, h, 0.0));
    if !y.is_finite() {
        return Err(Error::non_finite(format!("bicomplex-step evaluation at x = {x0}")));
    }
    Ok(y.imag2().value / (h * h))
}

/// `|approx − exact| / max(|exact|, 1e-300)`.
pub fn relative_error(approx: f64, exact: f64) -> f64 {
    (approx - exact).abs() / exact.abs().max(1e-300)
}

/// One row of an error sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorRow {
    pub scheme: SchemeKind,
    pub h: f64,
    pub rel_error: f64,
}

/// Logarithmic grid `10^from, 10^(from−1), …, 10^to` (descending).
pub fn log_h_grid(from_exp: i32, to_exp: i32) -> Vec<f64> {
    (to_exp..=from_exp).rev().map(|e| 10f64.powi(e)).collect()
}

/// Relative error of every scheme at every `h` in `h_grid`.
///
/// First-order schemes are compared with `first`, [`SchemeKind::Csfd2`] with
/// `second`. Steps below [`CSFD2_MIN_H`] are skipped for the second-order
/// scheme.
pub fn error_curve<F: ScalarFn>(
    f: &F,
    first: impl Fn(f64) -> f64,
    second: impl Fn(f64) -> f64,
    x0: f64,
    h_grid: &[f64],
) -> Result<Vec<ErrorRow>> {
    if h_grid.is_empty() {
        return Err(Error::InvalidArgument("empty h grid".into()));
    }
    for w in h_grid.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::InvalidArgument(
                "h grid must be strictly descending".into(),
            ));
        }
    }
    let d1 = first(x0);
    let d2 = second(x0);
    let mut rows = Vec::with_capacity(4 * h_grid.len());
    for kind in SchemeKind::ALL {
        for &h in h_grid {
            if kind == SchemeKind::Csfd2 && h < CSFD2_MIN_H {
                continue;
            }
            let approx = DiffScheme::new(kind, h)?.apply(f, x0)?;
            let exact = if kind.is_second_order() { d2 } else { d1 };
            rows.push(ErrorRow {
                scheme: kind,
                h,
                rel_error: relative_error(approx, exact),
            });
        }
    }
    Ok(rows)
}

/// Writes rows as `scheme,h,rel_error` CSV with shortest round-trip floats.
pub fn write_error_csv<W: Write>(rows: &[ErrorRow], mut out: W) -> io::Result<()> {
    writeln!(out, "scheme,h,rel_error")?;
    for r in rows {
        writeln!(out, "{},{:e},{:e}", r.scheme, r.h, r.rel_error)?;
    }
    Ok(())
}
