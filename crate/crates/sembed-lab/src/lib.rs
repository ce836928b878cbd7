//! Experiment pipelines, configuration and output for `sembed`.

pub mod catalog;
pub mod commands;
pub mod config;
pub mod identity;
pub mod manifest;
pub mod output;
pub mod pipeline;
pub mod plot;
pub mod render;
pub mod sampler_check;
