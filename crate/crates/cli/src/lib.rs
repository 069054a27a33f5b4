//! Experiment harness for tabular zero-sum Markov games: solve, abstract,
//! train and evaluate, with CSV and SVG outputs.

pub mod config;
pub mod experiments;
pub mod plot;
