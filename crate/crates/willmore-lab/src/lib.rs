//! IO, reports and CLI pipeline around `willmore-core`.

pub mod error;
pub mod io;
pub mod pipeline;
pub mod report;
pub mod source;

pub use error::LabError;
