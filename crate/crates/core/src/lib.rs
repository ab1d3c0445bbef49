//! Deterministic discrete-event simulator of an edge-cloud cRRM managing
//! small cells on LSA, licensed and unlicensed spectrum.

// `!(x >= lo)` is how range checks reject NaN here.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod crrm;
pub mod engine;
pub mod metrics;
pub mod radio;
pub mod repository;
pub mod scenario;
pub mod sim;
pub mod spectrum;
pub mod traffic;
