//! Configuration, coordinate models, mesh and report output, and the pipeline driver.

pub mod config;
pub mod mesh;
pub mod models;
pub mod pipeline;
pub mod report;
