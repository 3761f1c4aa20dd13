pub mod cache;
pub mod config;
pub mod experiments;
pub mod report;
