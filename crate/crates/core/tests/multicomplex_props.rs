use csnk_core::csfd::{csfd1, csfd2};
use csnk_core::multicomplex::{BiCplx, Cplx, Scalar};
use proptest::prelude::*;

/// An analytic function with closed-form first and second derivatives.
struct Analytic {
    name: &'static str,
    lo: f64,
    hi: f64,
    f: fn(BiCplx) -> BiCplx,
    fc: fn(Cplx) -> Cplx,
    real: fn(f64) -> f64,
    d1: fn(f64) -> f64,
    d2: fn(f64) -> f64,
}

macro_rules! analytic {
    ($name:literal, $lo:expr, $hi:expr, |$x:ident| $body:expr, $d1:expr, $d2:expr) => {
        Analytic {
            name: $name,
            lo: $lo,
            hi: $hi,
            f: |$x: BiCplx| $body,
            fc: |$x: Cplx| $body,
            real: |$x: f64| $body,
            d1: $d1,
            d2: $d2,
        }
    };
}

fn table() -> Vec<Analytic> {
    fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }
    vec![
        analytic!("exp", -5.0, 5.0, |x| x.exp(), f64::exp, f64::exp),
        analytic!("exp_m1", -5.0, 5.0, |x| x.exp_m1(), f64::exp, f64::exp),
        analytic!("ln", 0.1, 10.0, |x| x.ln(), |x| 1.0 / x, |x| -1.0 / (x * x)),
        analytic!(
            "ln_1p",
            -0.9,
            10.0,
            |x| x.ln_1p(),
            |x| 1.0 / (1.0 + x),
            |x| -1.0 / ((1.0 + x) * (1.0 + x))
        ),
        analytic!("sin", -3.0, 3.0, |x| x.sin(), f64::cos, |x| -x.sin()),
        analytic!("cos", -3.0, 3.0, |x| x.cos(), |x| -x.sin(), |x| -x.cos()),
        analytic!("sinh", -3.0, 3.0, |x| x.sinh(), f64::cosh, f64::sinh),
        analytic!("cosh", -3.0, 3.0, |x| x.cosh(), f64::sinh, f64::cosh),
        analytic!(
            "tan",
            -1.2,
            1.2,
            |x| x.tan(),
            |x| 1.0 + x.tan().powi(2),
            |x| 2.0 * x.tan() * (1.0 + x.tan().powi(2))
        ),
        analytic!(
            "tanh",
            -4.0,
            4.0,
            |x| x.tanh(),
            |x| 1.0 - x.tanh().powi(2),
            |x| -2.0 * x.tanh() * (1.0 - x.tanh().powi(2))
        ),
        analytic!(
            "atan",
            -3.0,
            3.0,
            |x| x.atan(),
            |x| 1.0 / (1.0 + x * x),
            |x| -2.0 * x / (1.0 + x * x).powi(2)
        ),
        analytic!(
            "sqrt",
            0.1,
            10.0,
            |x| x.sqrt(),
            |x| 0.5 / x.sqrt(),
            |x| -0.25 / (x * x * x).sqrt()
        ),
        analytic!(
            "sigmoid",
            -6.0,
            6.0,
            |x| x.sigmoid(),
            |x| sig(x) * (1.0 - sig(x)),
            |x| sig(x) * (1.0 - sig(x)) * (1.0 - 2.0 * sig(x))
        ),
        analytic!("cube", -3.0, 3.0, |x| x.powi(3), |x| 3.0 * x * x, |x| 6.0 * x),
        analytic!(
            "recip",
            0.2,
            5.0,
            |x| x.recip(),
            |x| -1.0 / (x * x),
            |x| 2.0 / (x * x * x)
        ),
    ]
}

fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn first_derivative_matches_closed_form(t in 0.0f64..1.0, k in 1i32..7) {
        let h = 10f64.powi(-6 - 2 * k);
        for e in table() {
            let x = e.lo + t * (e.hi - e.lo);
            let approx = csfd1(e.fc, x, h).unwrap();
            prop_assert!(rel(approx, (e.d1)(x), 1e-300) <= 1e-9, "{} at {x}: {approx}", e.name);
        }
    }

    #[test]
    fn second_derivative_matches_closed_form(t in 0.0f64..1.0) {
        for e in table() {
            let x = e.lo + t * (e.hi - e.lo);
            let approx = csfd2(e.f, x, 1e-5).unwrap();
            prop_assert!(rel(approx, (e.d2)(x), 1.0) <= 1e-6, "{} at {x}: {approx}", e.name);
        }
    }

    #[test]
    fn real_embedding_is_bit_exact(t in 0.0f64..1.0) {
        for e in table() {
            if matches!(e.name, "tan" | "atan") {
                continue;
            }
            let x = e.lo + t * (e.hi - e.lo);
            let r = (e.real)(x);
            prop_assert_eq!((e.fc)(Cplx::from_real(x)).re.to_bits(), r.to_bits(), "{}", e.name);
            prop_assert_eq!((e.f)(BiCplx::from_real(x)).real().to_bits(), r.to_bits(), "{}", e.name);
        }
    }

    #[test]
    fn branch_follows_the_real_part(x in -3.0f64..3.0, a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0) {
        let z = BiCplx::from_parts(x, a, b, c);
        let positive = x > 0.0;
        prop_assert_eq!(z.relu(), if positive { z } else { BiCplx::zero() });
        prop_assert_eq!(z.elu(), if positive { z } else { z.exp_m1() });
        prop_assert_eq!(z.abs(), if x >= 0.0 { z } else { -z });
        let w = Cplx::new(x, a);
        prop_assert_eq!(w.relu(), if positive { w } else { Cplx::zero() });
    }

    #[test]
    fn field_axioms_to_round_off(
        v in prop::collection::vec(prop_oneof![-1e6f64..-1e-6, 1e-6f64..1e6], 12),
    ) {
        let a = BiCplx::from_parts(v[0], v[1], v[2], v[3]);
        let b = BiCplx::from_parts(v[4], v[5], v[6], v[7]);
        let c = BiCplx::from_parts(v[8], v[9], v[10], v[11]);
        let diff = |x: BiCplx, y: BiCplx| (x - y).l1_norm();
        let scale = a.l1_norm() * b.l1_norm() * c.l1_norm();
        prop_assert!(diff((a * b) * c, a * (b * c)) <= 1e-14 * scale);
        let scale = a.l1_norm() * (b.l1_norm() + c.l1_norm());
        prop_assert!(diff(a * (b + c), a * b + a * c) <= 1e-14 * scale);
        prop_assert_eq!(a * b, b * a);
    }

    #[test]
    fn division_inverts_multiplication(
        v in prop::collection::vec(prop_oneof![-1e3f64..-1e-3, 1e-3f64..1e3], 4),
        re in 0.5f64..2.0,
    ) {
        let a = Cplx::new(v[0], v[1]);
        let b = Cplx::new(re * v[2].signum(), v[3]);
        let q = (a * b) / b;
        prop_assert!((q - a).l1_norm() <= 1e-13 * a.l1_norm());
    }

    #[test]
    fn complex_step_is_step_invariant(x in 9.0f64..11.0) {
        let f = |z: Cplx| z.exp() / (z * z + 1.0);
        let g = |z: BiCplx| z.exp() / (z * z + 1.0);
        let d1 = csfd1(f, x, 1e-20).unwrap();
        let d2 = csfd2(g, x, 1e-20).unwrap();
        for h in [1e-10, 1e-12, 1e-14, 1e-16, 1e-18] {
            prop_assert!(rel(csfd1(f, x, h).unwrap(), d1, 1e-300) <= 1e-12);
            prop_assert!(rel(csfd2(g, x, h).unwrap(), d2, 1e-300) <= 1e-12);
        }
    }

    #[test]
    fn mixed_partials_commute(x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let h = 1e-6;
        let f = |x: BiCplx, y: BiCplx| (x * y).sin() + x * x * y.exp();
        let xy = f(
            BiCplx::from_real(x) + BiCplx::I1.scale(h),
            BiCplx::from_real(y) + BiCplx::I2.scale(h),
        )
        .imag2()
        .value;
        let yx = f(
            BiCplx::from_real(x) + BiCplx::I2.scale(h),
            BiCplx::from_real(y) + BiCplx::I1.scale(h),
        )
        .imag2()
        .value;
        prop_assert!(rel(xy, yx, 1e-300) <= 1e-12);
        let exact = (x * y).cos() - x * y * (x * y).sin() + 2.0 * x * y.exp();
        prop_assert!(rel(xy / (h * h), exact, 1.0) <= 1e-8);
    }
}

#[test]
fn ffd_deviates_where_complex_step_does_not() {
    let f = |x: f64| x.exp() / (x * x + 1.0);
    let exact = 10f64.exp() * 81.0 / (101.0 * 101.0);
    let fd = csnk_core::csfd::ffd(f, 10.0, 1e-14).unwrap();
    assert!(rel(fd, exact, 1e-300) > 1e-3);
}
