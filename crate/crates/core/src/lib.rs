//! Decision procedures for the intuitionistic provability logic iGLC and
//! the Σ1-provability logic of Heyting Arithmetic.

pub mod canonical;
pub mod formula;
pub mod ipc;
pub mod kripke;

pub use canonical::Budget;
pub use formula::{parse, Formula, ParseError};
pub mod ha;
pub mod iglc;
pub mod nnil;
pub mod solovay;
pub mod tnnil;
