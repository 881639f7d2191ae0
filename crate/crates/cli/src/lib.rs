pub mod bench;
pub mod commands;
pub mod exit;
pub mod report;
pub mod setup;
pub mod stats;
