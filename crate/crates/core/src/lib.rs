pub mod basis;
pub mod bdf;
pub mod config;
pub mod diagnostics;
pub mod entropy;
pub mod error;
pub mod flow;
pub mod harness;
pub mod kkt;
pub mod lagrangian;
pub mod oracle;
pub mod quadrature;
