//! Trace file ingestion/emission and request-sequence generators.
//!
//! File format (UTF-8 text, 1-based ids on the wire):
//! ```text
//! k=<int> m=<int>
//! # comment
//! <time> <server> <item> [<item2>]
//! ```

use crate::model::{CostParams, Items, ModelError, Request, Trace};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: duplicate timestamp {time}")]
    DuplicateTimestamp { line: usize, time: f64 },
    #[error("missing or malformed header (expected `k=<int> m=<int>`)")]
    MissingHeader,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
}

fn malformed(line: usize, msg: impl Into<String>) -> TraceError {
    TraceError::Malformed {
        line,
        msg: msg.into(),
    }
}

/// Parses the text trace format. Ids on the wire are 1-based.
pub fn parse_trace(text: &str) -> Result<Trace, TraceError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or(TraceError::MissingHeader)?;
    let (k, m) = parse_header(header).ok_or(TraceError::MissingHeader)?;
    let _ = hline;

    let mut requests = Vec::new();
    let mut prev_time: Option<f64> = None;
    for (lineno, line) in lines {
        let mut fields = line.split_whitespace();
        let time: f64 = fields
            .next()
            .ok_or_else(|| malformed(lineno, "missing time"))?
            .parse()
            .map_err(|_| malformed(lineno, "bad time"))?;
        let server: usize = fields
            .next()
            .ok_or_else(|| malformed(lineno, "missing server"))?
            .parse()
            .map_err(|_| malformed(lineno, "bad server id"))?;
        let item1: usize = fields
            .next()
            .ok_or_else(|| malformed(lineno, "missing item"))?
            .parse()
            .map_err(|_| malformed(lineno, "bad item id"))?;
        let item2: Option<usize> = match fields.next() {
            Some(f) => Some(f.parse().map_err(|_| malformed(lineno, "bad item id"))?),
            None => None,
        };
        if fields.next().is_some() {
            return Err(malformed(lineno, "too many fields (at most 2 items)"));
        }
        if server == 0 || item1 == 0 || item2 == Some(0) {
            return Err(malformed(lineno, "ids are 1-based; 0 is not a valid id"));
        }
        if prev_time == Some(time) {
            return Err(TraceError::DuplicateTimestamp { line: lineno, time });
        }
        prev_time = Some(time);
        let items = match item2 {
            None => Items::Single(item1 - 1),
            Some(i2) => {
                if i2 == item1 {
                    return Err(malformed(lineno, "items not distinct"));
                }
                Items::pair(item1 - 1, i2 - 1)
            }
        };
        requests.push(Request {
            time,
            server: server - 1,
            items,
        });
    }
    Ok(Trace::new(k, m, requests)?)
}

fn parse_header(header: &str) -> Option<(usize, usize)> {
    let mut k = None;
    let mut m = None;
    for field in header.split_whitespace() {
        let (key, value) = field.split_once('=')?;
        match key {
            "k" => k = value.parse().ok(),
            "m" => m = value.parse().ok(),
            _ => return None,
        }
    }
    Some((k?, m?))
}

/// Emits the text format; `parse_trace(write_trace(t)) == t`.
pub fn write_trace(trace: &Trace) -> String {
    let mut out = String::new();
    out.push_str(&format!("k={} m={}\n", trace.k(), trace.m()));
    for r in trace.requests() {
        match r.items {
            Items::Single(a) => {
                out.push_str(&format!("{} {} {}\n", r.time, r.server + 1, a + 1));
            }
            Items::Pair(a, b) => {
                out.push_str(&format!(
                    "{} {} {} {}\n",
                    r.time,
                    r.server + 1,
                    a + 1,
                    b + 1
                ));
            }
        }
    }
    out
}

/// Synthetic workload: Poisson arrivals, uniform servers, a mix of single
/// requests and pair requests drawn from weighted hot pairs.
#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub k: usize,
    pub m: usize,
    pub n: usize,
    /// Probability a request demands two items.
    pub pair_fraction: f64,
    /// Weighted correlated pairs. Weights are probabilities; the mass not
    /// covered by their sum (capped at 1) falls to uniform random pairs.
    pub hot_pairs: Vec<(usize, usize, f64)>,
    pub mean_gap: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    fn validate(&self) -> Result<(), TraceError> {
        if self.k == 0 || self.m < 2 {
            return Err(TraceError::InvalidConfig(format!(
                "need k >= 1 and m >= 2, got k={} m={}",
                self.k, self.m
            )));
        }
        if !(0.0..=1.0).contains(&self.pair_fraction) {
            return Err(TraceError::InvalidConfig(format!(
                "pair_fraction must be in [0,1], got {}",
                self.pair_fraction
            )));
        }
        if !self.mean_gap.is_finite() || self.mean_gap <= 0.0 {
            return Err(TraceError::InvalidConfig(format!(
                "mean_gap must be > 0, got {}",
                self.mean_gap
            )));
        }
        if self.pair_fraction > 0.0 && self.k < 2 {
            return Err(TraceError::InvalidConfig(
                "pair requests need k >= 2".into(),
            ));
        }
        for &(a, b, w) in &self.hot_pairs {
            if a == b || a >= self.k || b >= self.k {
                return Err(TraceError::InvalidConfig(format!(
                    "hot pair ({a},{b}) invalid for k={}",
                    self.k
                )));
            }
            if !w.is_finite() || w <= 0.0 {
                return Err(TraceError::InvalidConfig(format!(
                    "hot pair weight must be > 0, got {w}"
                )));
            }
        }
        Ok(())
    }
}

/// Deterministic function of the config (including its seed).
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<Trace, TraceError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let gap_dist = Exp::new(1.0 / config.mean_gap).expect("mean_gap > 0");
    let hot_mass: f64 = config.hot_pairs.iter().map(|&(_, _, w)| w).sum::<f64>();

    let mut requests = Vec::with_capacity(config.n);
    let mut t = 0.0f64;
    for _ in 0..config.n {
        let mut next = t + gap_dist.sample(&mut rng);
        if next <= t {
            // zero-probability collision guard: keep one request per instant
            next = t + f64::EPSILON * t.max(1.0);
        }
        t = next;
        let server = rng.random_range(0..config.m);
        let items = if rng.random_bool(config.pair_fraction) {
            let u: f64 = rng.random();
            if !config.hot_pairs.is_empty() && u < hot_mass.min(1.0) {
                let mut pick = u;
                let mut chosen = config.hot_pairs[0];
                for &hp in &config.hot_pairs {
                    if pick < hp.2 {
                        chosen = hp;
                        break;
                    }
                    pick -= hp.2;
                }
                Items::pair(chosen.0, chosen.1)
            } else {
                let a = rng.random_range(0..config.k);
                let mut b = rng.random_range(0..config.k - 1);
                if b >= a {
                    b += 1;
                }
                Items::pair(a, b)
            }
        } else {
            Items::Single(rng.random_range(0..config.k))
        };
        requests.push(Request {
            time: t,
            server,
            items,
        });
    }
    Ok(Trace::new(config.k, config.m, requests)?)
}

/// Lower-bound instance: repeated requests for the same pair, each at a
/// previously unused server, spaced wider than the caching window so no
/// non-forced copy survives between rounds.
#[derive(Debug, Clone, Copy)]
pub struct AdversaryConfig {
    pub rounds: usize,
    /// Inter-request gap; must exceed `delta_t` of the intended params.
    pub gap: f64,
    pub m: usize,
}

pub fn generate_adversarial(
    config: &AdversaryConfig,
    params: &CostParams,
) -> Result<Trace, TraceError> {
    if config.rounds == 0 {
        return Err(TraceError::InvalidConfig("rounds must be >= 1".into()));
    }
    if config.m < config.rounds + 1 {
        return Err(TraceError::InvalidConfig(format!(
            "need m >= rounds + 1 fresh servers, got m={} rounds={}",
            config.m, config.rounds
        )));
    }
    let delta_t = params.delta_t();
    if config.gap.is_nan() || config.gap <= delta_t {
        return Err(TraceError::InvalidConfig(format!(
            "gap must exceed delta_t ({} <= {})",
            config.gap, delta_t
        )));
    }
    let requests = (0..config.rounds)
        .map(|i| Request {
            time: delta_t + i as f64 * config.gap,
            server: i + 1,
            items: Items::pair(0, 1),
        })
        .collect();
    Ok(Trace::new(2, config.m, requests)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_minimal() {
        let t = parse_trace("k=2 m=3\n1.0 2 1 2\n").unwrap();
        assert_eq!(t.k(), 2);
        assert_eq!(t.m(), 3);
        assert_eq!(t.requests().len(), 1);
        let r = t.requests()[0];
        assert_eq!(r.time, 1.0);
        assert_eq!(r.server, 1);
        assert_eq!(r.items, Items::Pair(0, 1));
    }

    #[test]
    fn parse_rejects_duplicate_timestamp() {
        let err = parse_trace("k=2 m=3\n1.0 1 1\n1.0 2 2\n").unwrap_err();
        assert!(matches!(err, TraceError::DuplicateTimestamp { line: 3, .. }));
    }

    #[test]
    fn parse_rejects_equal_items() {
        let err = parse_trace("k=2 m=3\n1.0 2 1 1\n").unwrap_err();
        assert!(matches!(err, TraceError::Malformed { line: 2, .. }));
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = parse_trace("k=2 m=3\n# fine\n1.0 1 1\nnonsense\n").unwrap_err();
        assert!(matches!(err, TraceError::Malformed { line: 4, .. }));
    }

    #[test]
    fn write_empty_trace_is_header_only() {
        let t = Trace::new(3, 4, vec![]).unwrap();
        assert_eq!(write_trace(&t), "k=3 m=4\n");
    }

    #[test]
    fn synthetic_is_deterministic() {
        let cfg = SyntheticConfig {
            k: 5,
            m: 4,
            n: 200,
            pair_fraction: 0.5,
            hot_pairs: vec![(0, 1, 0.4)],
            mean_gap: 1.0,
            seed: 42,
        };
        let a = generate_synthetic(&cfg).unwrap();
        let b = generate_synthetic(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn synthetic_pair_fraction_zero_gives_no_pairs() {
        let cfg = SyntheticConfig {
            k: 5,
            m: 4,
            n: 300,
            pair_fraction: 0.0,
            hot_pairs: vec![],
            mean_gap: 1.0,
            seed: 7,
        };
        let t = generate_synthetic(&cfg).unwrap();
        assert!(t
            .requests()
            .iter()
            .all(|r| matches!(r.items, Items::Single(_))));
    }

    #[test]
    fn synthetic_single_hot_pair_dominates() {
        let cfg = SyntheticConfig {
            k: 5,
            m: 4,
            n: 300,
            pair_fraction: 1.0,
            hot_pairs: vec![(2, 4, 1.0)],
            mean_gap: 1.0,
            seed: 7,
        };
        let t = generate_synthetic(&cfg).unwrap();
        assert!(t
            .requests()
            .iter()
            .all(|r| r.items == Items::Pair(2, 4)));
    }

    #[test]
    fn adversarial_layout() {
        let params = CostParams::new(1.0, 1.0, 0.8, 0.01).unwrap();
        let t = generate_adversarial(
            &AdversaryConfig {
                rounds: 3,
                gap: 2.0,
                m: 4,
            },
            &params,
        )
        .unwrap();
        let times: Vec<f64> = t.requests().iter().map(|r| r.time).collect();
        let servers: Vec<usize> = t.requests().iter().map(|r| r.server).collect();
        assert_eq!(times, vec![1.0, 3.0, 5.0]);
        assert_eq!(servers, vec![1, 2, 3]);
        assert!(t.requests().iter().all(|r| r.items == Items::Pair(0, 1)));
    }

    #[test]
    fn adversarial_rejects_small_gap() {
        let params = CostParams::new(1.0, 1.0, 0.8, 0.01).unwrap();
        assert!(generate_adversarial(
            &AdversaryConfig {
                rounds: 1,
                gap: 1.0,
                m: 2,
            },
            &params,
        )
        .is_err());
    }

    #[test]
    fn generated_traces_round_trip() {
        let cfg = SyntheticConfig {
            k: 6,
            m: 5,
            n: 150,
            pair_fraction: 0.6,
            hot_pairs: vec![(0, 1, 0.3), (2, 3, 0.2)],
            mean_gap: 0.7,
            seed: 99,
        };
        let t = generate_synthetic(&cfg).unwrap();
        let back = parse_trace(&write_trace(&t)).unwrap();
        assert_eq!(t, back);

        let params = CostParams::new(1.0, 1.0, 0.8, 0.01).unwrap();
        let adv = generate_adversarial(
            &AdversaryConfig {
                rounds: 4,
                gap: 1.5,
                m: 6,
            },
            &params,
        )
        .unwrap();
        assert_eq!(parse_trace(&write_trace(&adv)).unwrap(), adv);
    }
}
