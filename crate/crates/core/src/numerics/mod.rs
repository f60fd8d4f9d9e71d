//! Dense linear algebra and scalar analysis primitives.

pub mod eig;
pub mod expm;
pub mod lyapunov;
pub mod matrix;
pub mod quad;
pub mod roots;

pub use eig::{eig_sym, lambda_min};
pub use expm::mat_exp;
pub use lyapunov::{lyapunov_residual, solve_lyapunov};
pub use matrix::{dot, norm, norm_sq, RealMatrix, RealVector};
pub use quad::quad;
pub use roots::{bisect_root, first_root, scan_first_crossing, Bracket, Scan};
