//! Numerical workbench: dye-laser Q-switched pulse kinetics, barrier
//! tunnelling, an adiabatic search over discrete energy landscapes driven by
//! tunnelling escapes, and a Bethe-lattice DMFT loop with a second-order
//! impurity solver.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod csv_out;
pub mod dmft;
pub mod laser;
pub mod optimizer;
pub mod reproduce;
pub mod tunneling;
