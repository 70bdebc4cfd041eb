//! Exact solving of linear functional equations with finite group symmetry,
//! plus group determinants and their factorisations.

pub mod actions;
pub mod cli;
pub mod dsl;
pub mod exactnum;
pub mod forms;
pub mod groups;
pub mod polyfunc;
pub mod solver;

pub use exactnum::{Cyc, NumError, Rat};
pub use groups::{CoeffVector, Group, GroupError, GroupKind};
pub use polyfunc::{MPoly, PolyError, PolyMatrix, RatFunc};
