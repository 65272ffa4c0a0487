pub mod backtest;
pub mod config;
pub mod distributions;
pub mod error;
pub mod experiments;
pub mod inference;
pub mod io;
pub mod models;
pub mod rng;
pub mod scoring;
