//! Finite-volume simulation of a chemotaxis system with signal-dependent
//! motility and nutrient consumption, together with the diagnostics used to
//! study boundedness and long-time behavior.

pub mod elliptic;
pub mod grid;
pub mod kinetics;
pub mod solver;
pub mod diagnostics;
pub mod experiments;
