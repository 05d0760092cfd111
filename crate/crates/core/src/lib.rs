//! Reliability of parallelized service function chains.
//!
//! A flow is split into `k` main sub-flows, each traversing its own copy of
//! the chain, and protected by `r` redundant resources: either backup
//! segments, servers and VNF instances shared stage by stage, or `r`
//! erasure-coded redundant sub-flows with private chains, or a hybrid that
//! codes header parts and backs up payload parts.
//!
//! Every probability is available three ways: [`analytic`] closed forms,
//! an exhaustive [`oracle`] over component states, and a seeded
//! [`montecarlo`] estimator. [`codec`] implements the packet-level
//! erasure code and [`experiment`] drives sweeps and CSV output.

pub mod analytic;
pub mod codec;
pub mod experiment;
pub mod model;
pub mod montecarlo;
pub mod oracle;
