//! Exact longest-run distributions for Bernoulli trials and a test of whether
//! basketball scoring runs are longer than a momentum-free process produces.
//!
//! - [`runcore`]: longest success run distribution via an absorbing Markov
//!   chain, with dynamic-programming and enumeration cross-checks.
//! - [`gamedata`]: play-by-play ingestion and same/different sequences.
//! - [`gof`]: expected vs observed frequency tables and chi-square tests.
//! - [`montecarlo`]: seeded null and momentum simulations.
//! - [`analysis`]: the season pipeline used by the `analyze` command.
//! - [`cli`]: the `hoopruns` command line.

pub mod analysis;
pub mod cli;
pub mod gamedata;
pub mod gof;
pub mod montecarlo;
pub mod runcore;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error(transparent)]
    Run(#[from] runcore::RunError),
    #[error(transparent)]
    Data(#[from] gamedata::DataError),
    #[error(transparent)]
    Gof(#[from] gof::GofError),
    #[error(transparent)]
    Sim(#[from] montecarlo::SimError),
}
