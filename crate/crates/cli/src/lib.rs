//! File formats, the reduction verification harness and the command
//! implementations behind the `tdma-apx` binary.

pub mod commands;
pub mod format;
pub mod verify;

pub use commands::Outcome;
pub use format::{instance_from_json, instance_to_dot, instance_to_json, FormatError, InstanceFile};
pub use verify::{run_verification, Preset, VerificationReport, VerifyParams};
