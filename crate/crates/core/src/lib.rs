//! Two-stage conversion of natural-language user stories into pseudocode.
//!
//! Stage 1 turns a task description into Python by retrieval over a task
//! corpus ([`stage1`]). Stage 2 turns Python into pseudocode, either with
//! the three-tier rule engine ([`ruleconv`]) or with a small
//! encoder-decoder transformer trained from scratch ([`tinyformer`]).
//! [`metric`] scores outputs with BLEU and [`pipeline`] wires the stages
//! together.

pub mod corpus;
pub mod metric;
pub mod pylex;
pub mod ruleconv;
pub mod stage1;
pub mod pipeline;
pub mod tinyformer;
