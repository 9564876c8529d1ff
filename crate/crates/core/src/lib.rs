//! Fair exchanges of consumable resources under user-defined policies.
//!
//! Users own multisets of resources and declare, in the MuAC policy
//! language, what they are willing to give and what they require in
//! return. An exchange (a multiset of transfers) is *fair* when every
//! giver's policy is satisfied with no payment counted twice. This crate
//! provides:
//!
//! * [`model`] — exchange environments, policies, and a brute-force
//!   fairness oracle that serves as ground truth;
//! * [`muac`] — lexer, parser and interpreter for MuAC rulesets;
//! * [`logic`] — MuACL formulas, sequents, proof objects and a
//!   proof checker;
//! * [`compile`] — encodings from policies/states/exchanges into MuACL;
//! * [`decide`] — the integer-linear decision procedure (transfer basis,
//!   requirement/promise matrices, Hilbert bases) for fairness;
//! * [`prove`] — proof synthesis, goal-directed search and proof slicing;
//! * [`scenario`] — a text format bundling a universe, state, policies
//!   and proposals;
//! * [`ttp`] — a verify-then-apply ledger service that accepts only
//!   proof-carrying exchanges.

pub mod compile;
pub mod decide;
pub mod logic;
pub mod model;
pub mod muac;
pub mod multiset;
pub mod prove;
pub mod scenario;
pub mod ttp;
