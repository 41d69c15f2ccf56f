//! Best-arm identification when target arms are additive functions of
//! source arm means.

pub mod cli;
pub mod complexity;
pub mod confidence;
pub mod config;
pub mod env;
pub mod extreal;
pub mod microlucb;
pub mod presets;
pub mod sim;
pub mod tlucb;
pub mod transfer;
