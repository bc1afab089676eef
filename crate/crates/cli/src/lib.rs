//! Shared pieces of the `sumprod` binary: input helpers and the
//! reproduction suite behind `sumprod repro`.

pub mod io;
pub mod repro;
