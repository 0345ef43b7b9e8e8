//! Command-line front end for the phasewave solvers: scenario files, the
//! pipelines they name, their artifacts, and the acceptance suite.

pub mod acceptance;
pub mod app;
pub mod config;
pub mod output;
pub mod plot;
pub mod scenario;
