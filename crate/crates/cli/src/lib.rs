//! Batch commands behind the `formcheck` binary.

pub mod analyze;
pub mod build_db;
pub mod gen;
pub mod io;
pub mod sweep;

use std::fmt;

/// Marks an error caused by the user's input (exit code 1) rather than a
/// fault of the program (exit code 2).
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input_error(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

/// Errors reading, parsing or validating user data are input errors.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let input = err.chain().any(|e| {
        e.is::<InputError>() || e.is::<std::io::Error>() || e.is::<serde_json::Error>() || e.is::<formcheck_core::Error>()
    });
    if input {
        EXIT_INPUT
    } else {
        EXIT_INTERNAL
    }
}
