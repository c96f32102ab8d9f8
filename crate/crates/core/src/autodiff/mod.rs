//! Reverse-mode differentiation over dense `f64` matrices.

mod check;
mod mlp;
mod optim;
mod params;
mod tape;
mod tensor;

pub use check::{grad_check, grad_check_scaled, relative_error, GradCheck};
pub use mlp::{apply_mlp, Activation, Layer, Mlp};
pub use optim::{Optimizer, OptimizerConfig};
pub use params::{ParamId, Parameter, ParameterSet, SavedParam};
pub use tape::{sigmoid, Tape, Var};
pub use tensor::Tensor;
