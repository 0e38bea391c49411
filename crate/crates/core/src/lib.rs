//! Model checking for Büchi process rewrite systems.

pub mod brs;
pub mod rdha;
pub mod syntax;
pub mod terms;
pub mod decision;
pub mod lp;
pub mod petri;
pub mod seqeng;
pub mod saturate;
pub mod witness;
pub mod checker;
pub mod cli;
pub mod oracle;
