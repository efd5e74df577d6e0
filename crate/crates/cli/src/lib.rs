//! Instance files, the random generator, and the verbs behind the `lipsel`
//! binary.

pub mod commands;
pub mod generate;
pub mod instance;
pub mod report;

pub use instance::InstanceFile;
