//! Response matrices: loading, validation, one-hot encoding and synthetic generation.

mod encode;
mod io;
mod matrix;
mod synth;
mod validate;

pub use encode::encode_categorical;
pub use io::{
    load_matrix, load_schema, read_matrix, read_schema, save_matrix, save_schema, write_matrix,
};
pub use matrix::{QuestionMeta, ResponseMatrix};
pub use synth::{synth_mixture, MixtureSpec};
pub use validate::{validate, Finding, Locus, ValidationReport};
