//! Minimal dense-tensor kernel: the forward/backward primitives the model
//! needs, an Adam optimizer and a finite-difference gradient checker.

mod adam;
mod batchnorm;
mod dropout;
mod gradcheck;
mod ops;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use batchnorm::{BatchNorm, BatchNormCache, DEFAULT_EPS as BN_DEFAULT_EPS, DEFAULT_MOMENTUM as BN_DEFAULT_MOMENTUM};
pub use dropout::{Dropout, DropoutMask};
pub use gradcheck::{grad_check, grad_check_with, relative_error, FdScheme, GradCheckReport, ADAPTIVE_STEPS, DEFAULT_EPS as GRADCHECK_EPS};
pub use ops::{affine, affine_backward, softmax, softmax_rows, softmax_xent, tanh_backward, tanh_op};
pub use tensor::{Parameter, Tensor};
