pub mod enhance;
pub mod eval;
pub mod mixit;
pub mod mom;
pub mod simulate;
