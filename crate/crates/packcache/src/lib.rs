//! Trace-driven simulator and analysis toolkit for online packable data
//! caching under a homogeneous cost model: an anticipatory-caching engine
//! with FP-tree mining of co-utilised item pairs, offline-optimal oracles,
//! dual cost ledgers and a parameter-sweep driver.

pub mod accounting;
pub mod engine;
pub mod fpm;
pub mod model;
pub mod oracle;
pub mod sweep;
pub mod trace;
