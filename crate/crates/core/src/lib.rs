//! Complex-step differentiation and a stochastic Newton-Krylov optimizer.
//!
//! * [`multicomplex`]: complex and bicomplex scalars with elementary functions.
//! * [`csfd`]: scalar complex-step and finite-difference derivative schemes.
//! * [`tensor_net`]: small feedforward networks evaluated over any scalar kind.
//! * [`objective`]: the loss-function abstraction shared by solvers and tests.
//! * [`csdd`]: Hessian-vector products and curvature along a direction.
//! * [`newton_krylov`]: the curvature-gated Newton-CG optimizer and baselines.

pub mod csdd;
pub mod csfd;
pub mod error;
pub mod multicomplex;
pub mod newton_krylov;
pub mod objective;
pub mod tensor_net;

pub use error::{Error, Result};
pub use multicomplex::{BiCplx, Cplx, Scalar};
pub use objective::Objective;
