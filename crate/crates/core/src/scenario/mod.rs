//! Configuration, orchestration across trajectory snapshots, surface export
//! and plotting.

pub mod config;
pub mod export;
pub mod plot;
pub mod runner;

pub use config::{load_config, threads_from_env, Format, Product, RunConfig, OUTPUT_DIR_ENV, THREADS_ENV};
pub use export::{export_surface, import_surface};
pub use plot::emit_plot;
pub use runner::{conjecture_check, run, run_oracle, run_products, RunReport, Summary};
