//! Dative alternation toolkit: treebank I/O, dative detection, alternation,
//! corpus surgery, linearization, preference scoring and statistics.

pub mod alternation;
pub mod backend;
pub mod detect;
pub mod eval;
pub mod lexicon;
pub mod linearize;
pub mod report;
pub mod stats;
pub mod surgery;
pub mod synth;
pub mod treebank;
