//! Core of the multi-robot dialogue platform.
//!
//! An operator types instructions; the [`dialogue`] manager classifies them
//! against a retrieval corpus, picks the addressed robot and compiles a
//! [`tbs`] command. The [`sim`] engine runs each command as an outcome-typed
//! [`behavior`] state machine over a [`world`] map, and robot status reports
//! flow back to the operator. The [`orchestrator`] owns sessions, logs and
//! metrics.

pub mod behavior;
pub mod demo;
pub mod dialogue;
pub mod orchestrator;
pub mod sim;
pub mod tbs;
pub mod world;
