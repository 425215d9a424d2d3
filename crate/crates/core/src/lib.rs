//! Bayesian structural time-series models for causal impact analysis of
//! daily series.

pub mod series;
pub mod state_space;
pub mod spike_slab;
pub mod gibbs;
pub mod synth;
pub mod impact;
pub mod prescreen;
pub mod validate;
