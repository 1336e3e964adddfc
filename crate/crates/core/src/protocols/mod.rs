//! Secure computation kernels executed by each compute party in lockstep.

pub mod arith;
pub mod argmax;
pub mod binary;
pub mod compare;
mod party;
pub mod reciprocal;
mod session;
pub mod truncate;

pub use arith::{
    beaver_fixed, beaver_raw, mul_int, sec_add, sec_add_public, sec_dot, sec_matmul, sec_matvec,
    sec_mul, sec_scale_int, sec_square, sec_sub, Job,
};
pub use argmax::{argmax_one_hot, argmax_rounds_two_party, sec_argmax};
pub use compare::{sec_ge, sec_ge_batch};
pub use party::{collect_from_compute, share_to_compute, Party};
pub use reciprocal::{reciprocal, sec_reciprocal, ReciprocalConfig, ReciprocalInit};
pub use session::{run_compute, run_compute_with, SessionOutput};
pub(crate) use session::{first_root_error, panic_message};
pub use truncate::{count_wraps, public_div, truncate_many};
