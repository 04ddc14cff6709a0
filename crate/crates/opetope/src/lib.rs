//! Opetopes as zoom complexes of trees.

pub mod tree;
pub mod constellation;
pub mod opetope;
pub mod calculus;
pub mod checks;
pub mod enumerate;
pub mod fixtures;
pub mod io;
pub mod polyfun;
