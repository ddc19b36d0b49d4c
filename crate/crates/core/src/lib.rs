//! Functional GUI test generation guided by retrieved historical test cases.
//!
//! The pipeline has two stages. Retrieval and fusion look up semantically
//! similar test cases in a [`knowledge`] store and fuse them into
//! app-independent [`model::BusinessLogic`] through the [`fusion`] agent.
//! Generation then adapts that logic to a live GUI: the [`device`] agent
//! perceives and acts, the [`decision`] agent selects steps and produces
//! instructions, and the executed history is synthesized into a test case.
//! [`eval`] scores generated cases against ground truth and [`pipeline`]
//! wires everything together.

pub mod decision;
pub mod device;
pub mod eval;
pub mod fusion;
pub mod knowledge;
pub mod llm;
pub mod model;
pub mod pipeline;
