//! Core domain types: requests, traces and cost parameters.
//!
//! All ids are 0-based internally; the text trace format and all printed
//! output use 1-based ids.

use thiserror::Error;

/// Simulation time. Real-valued so that sub-unit request gaps are expressible.
pub type Timestamp = f64;

/// 0-based data item index, must be `< k` of the owning trace.
pub type ItemId = usize;

/// 0-based cache server index, must be `< m` of the owning trace.
/// Server 0 is the initial holder of every item.
pub type ServerId = usize;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("mu must be > 0, got {0}")]
    InvalidMu(f64),
    #[error("lambda must be > 0, got {0}")]
    InvalidLambda(f64),
    #[error("alpha must be in (0,1], got {0}")]
    InvalidAlpha(f64),
    #[error("gamma must be in (0,1], got {0}")]
    InvalidGamma(f64),
    #[error("request {index}: items not distinct")]
    ItemsNotDistinct { index: usize },
    #[error("request {index}: item id {item} out of range (k={k})")]
    ItemOutOfRange { index: usize, item: usize, k: usize },
    #[error("request {index}: server id {server} out of range (m={m})")]
    ServerOutOfRange {
        index: usize,
        server: usize,
        m: usize,
    },
    #[error("request {index}: timestamp {time} not after previous {prev} (one request per instant)")]
    NonIncreasingTime {
        index: usize,
        time: f64,
        prev: f64,
    },
    #[error("request {index}: negative timestamp {time}")]
    NegativeTime { index: usize, time: f64 },
    #[error("trace needs at least 2 servers, got m={0}")]
    TooFewServers(usize),
}

/// Cost model parameters, validated at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    mu: f64,
    lambda: f64,
    alpha: f64,
    gamma: f64,
}

impl CostParams {
    pub fn new(mu: f64, lambda: f64, alpha: f64, gamma: f64) -> Result<Self, ModelError> {
        if !mu.is_finite() || mu <= 0.0 {
            return Err(ModelError::InvalidMu(mu));
        }
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(ModelError::InvalidLambda(lambda));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(ModelError::InvalidAlpha(alpha));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(ModelError::InvalidGamma(gamma));
        }
        Ok(Self {
            mu,
            lambda,
            alpha,
            gamma,
        })
    }

    /// Paper defaults: mu = lambda = 3, alpha = 0.8, gamma = 0.01.
    pub fn defaults() -> Self {
        Self::new(3.0, 3.0, 0.8, 0.01).expect("defaults are valid")
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Break-even caching window: caching an item for `delta_t` costs exactly
    /// one transfer (`delta_t * mu == lambda`).
    pub fn delta_t(&self) -> Timestamp {
        self.lambda / self.mu
    }

    /// Replaces mu/lambda, keeping alpha and gamma.
    pub fn with_costs(&self, mu: f64, lambda: f64) -> Result<Self, ModelError> {
        Self::new(mu, lambda, self.alpha, self.gamma)
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self, ModelError> {
        Self::new(self.mu, self.lambda, alpha, self.gamma)
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self, ModelError> {
        Self::new(self.mu, self.lambda, self.alpha, gamma)
    }
}

/// The items demanded by one request: one item or two distinct items.
/// Pairs are stored with the lower id first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Items {
    Single(ItemId),
    Pair(ItemId, ItemId),
}

impl Items {
    /// Builds a pair in canonical (ascending) order. Panics on equal ids;
    /// trace validation rejects those before this is reachable.
    pub fn pair(a: ItemId, b: ItemId) -> Self {
        assert_ne!(a, b, "pair items must be distinct");
        if a < b {
            Items::Pair(a, b)
        } else {
            Items::Pair(b, a)
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = ItemId> + '_ {
        let (a, b) = match *self {
            Items::Single(a) => (a, None),
            Items::Pair(a, b) => (a, Some(b)),
        };
        std::iter::once(a).chain(b)
    }

    pub fn len(&self) -> usize {
        match self {
            Items::Single(_) => 1,
            Items::Pair(_, _) => 2,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max_id(&self) -> ItemId {
        match *self {
            Items::Single(a) => a,
            Items::Pair(_, b) => b,
        }
    }
}

/// A timestamped demand for 1-2 items at a server.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Request {
    pub time: Timestamp,
    pub server: ServerId,
    pub items: Items,
}

/// A validated request sequence over `k` items and `m` servers.
/// Timestamps are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    k: usize,
    m: usize,
    requests: Vec<Request>,
}

impl Trace {
    pub fn new(k: usize, m: usize, requests: Vec<Request>) -> Result<Self, ModelError> {
        if m < 2 {
            return Err(ModelError::TooFewServers(m));
        }
        let mut prev: Option<f64> = None;
        for (index, r) in requests.iter().enumerate() {
            if r.time < 0.0 || !r.time.is_finite() {
                return Err(ModelError::NegativeTime {
                    index,
                    time: r.time,
                });
            }
            if let Some(p) = prev {
                if r.time <= p {
                    return Err(ModelError::NonIncreasingTime {
                        index,
                        time: r.time,
                        prev: p,
                    });
                }
            }
            prev = Some(r.time);
            if r.server >= m {
                return Err(ModelError::ServerOutOfRange {
                    index,
                    server: r.server,
                    m,
                });
            }
            if let Items::Pair(a, b) = r.items {
                if a == b {
                    return Err(ModelError::ItemsNotDistinct { index });
                }
            }
            for item in r.items.iter() {
                if item >= k {
                    return Err(ModelError::ItemOutOfRange { index, item, k });
                }
            }
        }
        Ok(Self { k, m, requests })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    /// Order-sensitive fingerprint of (k, m, requests), used to detect
    /// reports from mismatched runs.
    pub fn fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.k.hash(&mut h);
        self.m.hash(&mut h);
        for r in &self.requests {
            r.time.to_bits().hash(&mut h);
            r.server.hash(&mut h);
            r.items.hash(&mut h);
        }
        h.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_t_is_lambda_over_mu() {
        let p = CostParams::new(3.0, 3.0, 0.8, 0.01).unwrap();
        assert_eq!(p.delta_t(), 1.0);
        let p = CostParams::new(1.0, 1.0, 0.8, 0.01).unwrap();
        assert_eq!(p.delta_t(), 1.0);
        let p = CostParams::new(2.0, 4.0, 0.8, 0.01).unwrap();
        assert_eq!(p.delta_t(), 2.0);
    }

    #[test]
    fn break_even_identity() {
        for (mu, lambda) in [(3.0, 3.0), (2.5, 0.5), (0.1, 7.0)] {
            let p = CostParams::new(mu, lambda, 1.0, 1.0).unwrap();
            assert!((p.delta_t() * p.mu() - p.lambda()).abs() < 1e-12);
        }
    }

    #[test]
    fn param_validation() {
        assert!(CostParams::new(3.0, 3.0, 0.8, 0.01).is_ok());
        assert_eq!(
            CostParams::new(3.0, 3.0, 0.0, 0.01),
            Err(ModelError::InvalidAlpha(0.0))
        );
        assert_eq!(
            CostParams::new(3.0, -1.0, 0.8, 0.01),
            Err(ModelError::InvalidLambda(-1.0))
        );
        assert!(CostParams::new(3.0, 3.0, 1.0, 1.0).is_ok());
        assert!(CostParams::new(3.0, 3.0, 1.1, 0.5).is_err());
        assert!(CostParams::new(0.0, 3.0, 0.5, 0.5).is_err());
        assert!(CostParams::new(3.0, 3.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn trace_rejects_non_increasing_timestamps() {
        let reqs = vec![
            Request {
                time: 1.0,
                server: 0,
                items: Items::Single(0),
            },
            Request {
                time: 1.0,
                server: 1,
                items: Items::Single(0),
            },
        ];
        assert!(matches!(
            Trace::new(1, 2, reqs),
            Err(ModelError::NonIncreasingTime { .. })
        ));
    }

    #[test]
    fn trace_rejects_out_of_range_ids() {
        let r = |server, item| Request {
            time: 1.0,
            server,
            items: Items::Single(item),
        };
        assert!(matches!(
            Trace::new(1, 2, vec![r(2, 0)]),
            Err(ModelError::ServerOutOfRange { .. })
        ));
        assert!(matches!(
            Trace::new(1, 2, vec![r(0, 1)]),
            Err(ModelError::ItemOutOfRange { .. })
        ));
    }

    #[test]
    fn pair_is_canonicalised() {
        assert_eq!(Items::pair(3, 1), Items::Pair(1, 3));
        assert_eq!(Items::pair(1, 3), Items::Pair(1, 3));
    }
}
