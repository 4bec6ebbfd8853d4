//! Computable PAC learning at desk scale.

pub mod cli;
pub mod exact;
pub mod hypotheses;
pub mod learners;
pub mod machines;
pub mod pac;
pub mod spaces;
pub mod weihrauch;
