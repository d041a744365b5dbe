//! The online packable caching engine and its individually-served baseline.
//!
//! A run is a deterministic event loop over request arrivals and copy
//! expirations. Expiration events are lazily invalidated: one fires only if
//! its due time still equals the copy's current expiration. At equal times
//! arrivals are processed before expirations, so a request landing exactly
//! at an expiry instant is a local hit.

use crate::accounting::{AccountingError, CostReport, PerRequest, SegmentFlags, TransferKind};
use crate::fpm::{FpTree, FrequentSet};
use crate::model::{CostParams, ItemId, Items, Request, ServerId, Timestamp, Trace};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use thiserror::Error;

/// Whether frequent pairs may be shipped as one discounted package.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ServeMode {
    #[default]
    Packed,
    /// The packed branch is disabled; frequent pairs are served exactly as
    /// non-frequent ones.
    Individual,
}

/// Whether a pair request is inserted into the mining history before or
/// after the frequent set used to serve it is computed. Serving from the
/// history strictly before the request is the default; it is what makes the
/// lower-bound instance pay full price on a pair's first-ever request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MiningOrder {
    #[default]
    MineThenInsert,
    InsertThenMine,
}

#[derive(Debug, Clone, Default)]
pub struct EngineConfig {
    pub mode: ServeMode,
    pub mining_order: MiningOrder,
    /// Verify state invariants after every event (used by the test suites).
    pub check_invariants: bool,
    /// Record an (E, c, r_prev) snapshot after every event.
    pub record_trajectory: bool,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("request at t={time} not after engine clock {clock}")]
    RequestOutOfOrder { time: f64, clock: f64 },
    #[error("request references item {item} or server {server} out of range")]
    IdOutOfRange { item: usize, server: usize },
    #[error("invariant violated at t={time}: {msg}")]
    InvariantViolation { time: f64, msg: String },
    #[error(transparent)]
    Accounting(#[from] AccountingError),
}

/// How one request was served.
#[derive(Debug, Clone, PartialEq)]
pub struct ServeOutcome {
    pub transfer_charge: f64,
    pub kind: TransferKind,
    pub sources: Vec<ServerId>,
}

/// One alive copy of an item on a server.
#[derive(Debug, Clone, Copy, PartialEq)]
struct CacheCopy {
    expires: Timestamp,
    /// Placement or last-serve time; caching is accrued from here at the
    /// next serve/drop/finalize boundary.
    anchor: Timestamp,
    /// False only for an origin copy that has never served a request.
    anchor_is_serve: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ExpEvent {
    due: Timestamp,
    item: ItemId,
    server: ServerId,
}

impl Eq for ExpEvent {}

impl Ord for ExpEvent {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.due
            .total_cmp(&other.due)
            .then(self.item.cmp(&other.item))
            .then(self.server.cmp(&other.server))
    }
}

impl PartialOrd for ExpEvent {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// State snapshot for trajectory-identity checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub expirations: Vec<Option<Timestamp>>,
    pub copy_counts: Vec<usize>,
    pub last_serves: Vec<Option<Timestamp>>,
}

pub struct Engine {
    k: usize,
    m: usize,
    params: CostParams,
    config: EngineConfig,
    /// `copies[item][server]`, the paper's E matrix (None = no alive copy).
    copies: Vec<Vec<Option<CacheCopy>>>,
    /// Alive-copy count per item, the paper's c vector.
    copy_count: Vec<usize>,
    /// Last serve time per (item, server), the paper's r tracker.
    last_serve: Vec<Vec<Option<Timestamp>>>,
    clock: Timestamp,
    expirations: BinaryHeap<Reverse<ExpEvent>>,
    miner: FpTree,
    freq_cache: Option<(u64, FrequentSet)>,
    report: CostReport,
    trajectory: Vec<Snapshot>,
}

impl Engine {
    /// All items start with one copy at server 0, expiring a full window
    /// after t=0 and governed by the expiration handler thereafter.
    pub fn new(k: usize, m: usize, params: CostParams, config: EngineConfig) -> Self {
        Self::with_fingerprint(k, m, params, config, 0)
    }

    fn with_fingerprint(
        k: usize,
        m: usize,
        params: CostParams,
        config: EngineConfig,
        fingerprint: u64,
    ) -> Self {
        assert!(k >= 1 && m >= 2, "need k >= 1 and m >= 2");
        let delta_t = params.delta_t();
        let mut copies = vec![vec![None; m]; k];
        let mut expirations = BinaryHeap::new();
        for (item, row) in copies.iter_mut().enumerate() {
            row[0] = Some(CacheCopy {
                expires: delta_t,
                anchor: 0.0,
                anchor_is_serve: false,
            });
            expirations.push(Reverse(ExpEvent {
                due: delta_t,
                item,
                server: 0,
            }));
        }
        Self {
            k,
            m,
            params,
            config,
            copies,
            copy_count: vec![1; k],
            last_serve: vec![vec![None; m]; k],
            clock: 0.0,
            expirations,
            miner: FpTree::new(),
            freq_cache: None,
            report: CostReport::new(params, fingerprint),
            trajectory: Vec::new(),
        }
    }

    pub fn report(&self) -> &CostReport {
        &self.report
    }

    pub fn clock(&self) -> Timestamp {
        self.clock
    }

    pub fn copy_count(&self, item: ItemId) -> usize {
        self.copy_count[item]
    }

    pub fn is_alive(&self, item: ItemId, server: ServerId) -> bool {
        self.copies[item][server].is_some()
    }

    pub fn expiration_of(&self, item: ItemId, server: ServerId) -> Option<Timestamp> {
        self.copies[item][server].map(|c| c.expires)
    }

    fn current_freq(&mut self) -> FrequentSet {
        let generation = self.miner.generation();
        if let Some((cached_gen, set)) = &self.freq_cache {
            if *cached_gen == generation {
                return set.clone();
            }
        }
        let set = self.miner.mine_frequent_pairs(self.params.gamma());
        self.freq_cache = Some((generation, set.clone()));
        set
    }

    /// Lowest-indexed server other than `requester` holding alive copies of
    /// every item in `items`.
    pub fn choose_source(&self, items: &[ItemId], requester: ServerId) -> Option<ServerId> {
        (0..self.m).find(|&s| {
            s != requester && items.iter().all(|&d| self.copies[d][s].is_some())
        })
    }

    /// Serves one arrival, processing any expirations due strictly before it.
    pub fn handle_request(&mut self, request: &Request) -> Result<ServeOutcome, EngineError> {
        let t = request.time;
        if t <= self.clock && self.report.n_requests > 0 {
            return Err(EngineError::RequestOutOfOrder {
                time: t,
                clock: self.clock,
            });
        }
        if request.server >= self.m || request.items.max_id() >= self.k {
            return Err(EngineError::IdOutOfRange {
                item: request.items.max_id(),
                server: request.server,
            });
        }
        self.process_expirations_before(t)?;
        self.clock = t;

        if let (Items::Pair(a, b), MiningOrder::InsertThenMine) =
            (request.items, self.config.mining_order)
        {
            self.miner.insert_transaction(a, b);
        }

        let outcome = self.serve(request)?;

        if let (Items::Pair(a, b), MiningOrder::MineThenInsert) =
            (request.items, self.config.mining_order)
        {
            self.miner.insert_transaction(a, b);
        }

        self.report.record_serve(PerRequest {
            time: t,
            server: request.server,
            items: request.items,
            transfer_charge: outcome.transfer_charge,
            kind: outcome.kind,
        });
        self.after_event()?;
        Ok(outcome)
    }

    fn serve(&mut self, request: &Request) -> Result<ServeOutcome, EngineError> {
        let t = request.time;
        let j = request.server;
        let lambda = self.params.lambda();
        let alpha = self.params.alpha();

        let outcome = match request.items {
            Items::Single(d) => {
                if self.copies[d][j].is_some() {
                    self.touch(d, j, t)?;
                    ServeOutcome {
                        transfer_charge: 0.0,
                        kind: TransferKind::None,
                        sources: vec![],
                    }
                } else {
                    let src = self.choose_source(&[d], j).expect("no data loss");
                    self.place(d, j, t);
                    ServeOutcome {
                        transfer_charge: lambda,
                        kind: TransferKind::Single,
                        sources: vec![src],
                    }
                }
            }
            Items::Pair(a, b) => {
                let alive_a = self.copies[a][j].is_some();
                let alive_b = self.copies[b][j].is_some();
                match (alive_a, alive_b) {
                    (true, true) => {
                        self.touch(a, j, t)?;
                        self.touch(b, j, t)?;
                        ServeOutcome {
                            transfer_charge: 0.0,
                            kind: TransferKind::None,
                            sources: vec![],
                        }
                    }
                    (false, false) => {
                        let frequent = self.current_freq().is_frequent(a, b);
                        // pack only when it strictly wins, so alpha = 1
                        // degenerates exactly to individual serving
                        let packed_source = if self.config.mode == ServeMode::Packed
                            && frequent
                            && alpha < 1.0
                        {
                            self.choose_source(&[a, b], j)
                        } else {
                            None
                        };
                        if let Some(src) = packed_source {
                            self.place(a, j, t);
                            self.place(b, j, t);
                            ServeOutcome {
                                transfer_charge: 2.0 * alpha * lambda,
                                kind: TransferKind::Packed,
                                sources: vec![src],
                            }
                        } else {
                            let src_a = self.choose_source(&[a], j).expect("no data loss");
                            let src_b = self.choose_source(&[b], j).expect("no data loss");
                            self.place(a, j, t);
                            self.place(b, j, t);
                            ServeOutcome {
                                transfer_charge: 2.0 * lambda,
                                kind: TransferKind::TwoIndividual,
                                sources: vec![src_a, src_b],
                            }
                        }
                    }
                    (one_alive, _) => {
                        let (present, absent) = if one_alive { (a, b) } else { (b, a) };
                        let src = self.choose_source(&[absent], j).expect("no data loss");
                        self.touch(present, j, t)?;
                        self.place(absent, j, t);
                        ServeOutcome {
                            transfer_charge: lambda,
                            kind: TransferKind::OneOfPair,
                            sources: vec![src],
                        }
                    }
                }
            }
        };
        Ok(outcome)
    }

    /// Re-serve from an existing local copy: accrue the segment since the
    /// last anchor, then restart the anticipatory window.
    fn touch(&mut self, item: ItemId, server: ServerId, t: Timestamp) -> Result<(), EngineError> {
        let delta_t = self.params.delta_t();
        let copy = self.copies[item][server].as_mut().expect("copy alive");
        let (anchor, is_serve) = (copy.anchor, copy.anchor_is_serve);
        copy.anchor = t;
        copy.anchor_is_serve = true;
        copy.expires = t + delta_t;
        let due = copy.expires;
        Self::accrue_segment(&mut self.report, self.params, anchor, is_serve, t)?;
        self.expirations.push(Reverse(ExpEvent { due, item, server }));
        self.last_serve[item][server] = Some(t);
        Ok(())
    }

    /// Place a fresh transferred copy serving the request at `t`.
    fn place(&mut self, item: ItemId, server: ServerId, t: Timestamp) {
        let due = t + self.params.delta_t();
        self.copies[item][server] = Some(CacheCopy {
            expires: due,
            anchor: t,
            anchor_is_serve: true,
        });
        self.copy_count[item] += 1;
        self.expirations.push(Reverse(ExpEvent { due, item, server }));
        self.last_serve[item][server] = Some(t);
    }

    /// Accrue a copy's caching from its anchor up to `end`, splitting off
    /// the forced / pre-use portion beyond one window.
    fn accrue_segment(
        report: &mut CostReport,
        params: CostParams,
        anchor: Timestamp,
        anchor_is_serve: bool,
        end: Timestamp,
    ) -> Result<(), AccountingError> {
        let delta_t = params.delta_t();
        let dur = end - anchor;
        let windowed = dur.min(delta_t);
        let excess = (dur - delta_t).max(0.0);
        let origin_pre_use = !anchor_is_serve;
        report.accrue(
            windowed,
            SegmentFlags {
                forced: false,
                origin_pre_use,
            },
        )?;
        if excess > 0.0 {
            report.accrue(
                excess,
                SegmentFlags {
                    forced: true,
                    origin_pre_use,
                },
            )?;
        }
        Ok(())
    }

    fn process_expirations_before(&mut self, t: Timestamp) -> Result<(), EngineError> {
        while let Some(&Reverse(ev)) = self.expirations.peek() {
            if ev.due >= t {
                break;
            }
            self.expirations.pop();
            self.handle_expiration(ev.item, ev.server, ev.due)?;
        }
        Ok(())
    }

    /// Copy-expiry handler: stale events are no-ops, a lone copy is
    /// force-retained for another window, any other copy is dropped.
    pub fn handle_expiration(
        &mut self,
        item: ItemId,
        server: ServerId,
        due: Timestamp,
    ) -> Result<(), EngineError> {
        let Some(copy) = self.copies[item][server] else {
            return Ok(());
        };
        if copy.expires != due {
            return Ok(()); // stale event, superseded by a later serve
        }
        self.clock = self.clock.max(due);
        if self.copy_count[item] == 1 {
            let extended = due + self.params.delta_t();
            self.copies[item][server].as_mut().expect("alive").expires = extended;
            self.expirations.push(Reverse(ExpEvent {
                due: extended,
                item,
                server,
            }));
        } else {
            Self::accrue_segment(
                &mut self.report,
                self.params,
                copy.anchor,
                copy.anchor_is_serve,
                due,
            )?;
            self.copies[item][server] = None;
            self.copy_count[item] -= 1;
        }
        self.after_event()?;
        Ok(())
    }

    fn after_event(&mut self) -> Result<(), EngineError> {
        if self.config.check_invariants {
            self.check_invariants()?;
        }
        if self.config.record_trajectory {
            self.trajectory.push(self.snapshot());
        }
        Ok(())
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            expirations: self
                .copies
                .iter()
                .flat_map(|row| row.iter().map(|c| c.map(|c| c.expires)))
                .collect(),
            copy_counts: self.copy_count.clone(),
            last_serves: self
                .last_serve
                .iter()
                .flat_map(|row| row.iter().copied())
                .collect(),
        }
    }

    pub fn check_invariants(&self) -> Result<(), EngineError> {
        let delta_t = self.params.delta_t();
        for item in 0..self.k {
            let alive = self.copies[item].iter().filter(|c| c.is_some()).count();
            if alive != self.copy_count[item] {
                return Err(self.violation(format!(
                    "copy count mismatch for item {item}: c={} alive={alive}",
                    self.copy_count[item]
                )));
            }
            if self.copy_count[item] < 1 {
                return Err(self.violation(format!("data loss: item {item} has no alive copy")));
            }
            for (server, copy) in self.copies[item].iter().enumerate() {
                if let Some(copy) = copy {
                    if copy.expires < self.clock - 1e-9 {
                        return Err(self.violation(format!(
                            "copy ({item},{server}) overdue: expires {} < clock {}",
                            copy.expires, self.clock
                        )));
                    }
                    if copy.expires > self.clock + delta_t + 1e-9 {
                        return Err(self.violation(format!(
                            "copy ({item},{server}) outlives its window: expires {} clock {}",
                            copy.expires, self.clock
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn violation(&self, msg: String) -> EngineError {
        EngineError::InvariantViolation {
            time: self.clock,
            msg,
        }
    }

    /// Drains expirations up to the horizon, truncates alive copies there
    /// and returns the completed report (plus the trajectory if recorded).
    pub fn finish(mut self, t_end: Option<Timestamp>) -> Result<RunResult, EngineError> {
        if let Some(t_end) = t_end {
            while let Some(&Reverse(ev)) = self.expirations.peek() {
                if ev.due > t_end {
                    break;
                }
                self.expirations.pop();
                self.handle_expiration(ev.item, ev.server, ev.due)?;
            }
            self.clock = self.clock.max(t_end);
            let report = &mut self.report;
            for row in &self.copies {
                for copy in row.iter().flatten() {
                    Self::accrue_segment(
                        report,
                        self.params,
                        copy.anchor,
                        copy.anchor_is_serve,
                        t_end,
                    )?;
                }
            }
        }
        Ok(RunResult {
            report: self.report,
            trajectory: self.trajectory,
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub report: CostReport,
    pub trajectory: Vec<Snapshot>,
}

/// Runs a whole trace: arrivals and expirations in time order, horizon at
/// `last request + delta_t`. An empty trace is a zero-length run.
pub fn run_trace_with(
    trace: &Trace,
    params: CostParams,
    config: EngineConfig,
) -> Result<RunResult, EngineError> {
    let mut engine =
        Engine::with_fingerprint(trace.k(), trace.m(), params, config, trace.fingerprint());
    for request in trace.requests() {
        engine.handle_request(request)?;
    }
    let t_end = trace
        .requests()
        .last()
        .map(|r| r.time + params.delta_t());
    engine.finish(t_end)
}

pub fn run_trace(
    trace: &Trace,
    params: CostParams,
    mode: ServeMode,
) -> Result<CostReport, EngineError> {
    run_trace_with(
        trace,
        params,
        EngineConfig {
            mode,
            ..EngineConfig::default()
        },
    )
    .map(|r| r.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{generate_adversarial, generate_synthetic, AdversaryConfig, SyntheticConfig};

    fn checked_config() -> EngineConfig {
        EngineConfig {
            check_invariants: true,
            ..EngineConfig::default()
        }
    }

    fn params(mu: f64, lambda: f64, alpha: f64) -> CostParams {
        CostParams::new(mu, lambda, alpha, 0.01).unwrap()
    }

    fn req(time: f64, server: usize, items: Items) -> Request {
        Request {
            time,
            server,
            items,
        }
    }

    #[test]
    fn init_places_everything_at_origin() {
        let engine = Engine::new(2, 3, params(3.0, 3.0, 0.8), checked_config());
        for d in 0..2 {
            assert_eq!(engine.copy_count(d), 1);
            assert_eq!(engine.expiration_of(d, 0), Some(1.0));
            assert!(!engine.is_alive(d, 1));
            assert!(!engine.is_alive(d, 2));
        }
        engine.check_invariants().unwrap();
    }

    #[test]
    fn early_request_at_origin_is_free() {
        let mut engine = Engine::new(2, 3, params(3.0, 3.0, 0.8), checked_config());
        let out = engine
            .handle_request(&req(0.5, 0, Items::Single(0)))
            .unwrap();
        assert_eq!(out.kind, TransferKind::None);
        assert_eq!(out.transfer_charge, 0.0);
    }

    #[test]
    fn single_miss_transfers_at_lambda() {
        let mut engine = Engine::new(1, 3, params(3.0, 3.0, 0.8), checked_config());
        let out = engine
            .handle_request(&req(5.0, 1, Items::Single(0)))
            .unwrap();
        assert_eq!(out.transfer_charge, 3.0);
        assert_eq!(out.kind, TransferKind::Single);
        assert_eq!(out.sources, vec![0]);
        assert_eq!(engine.expiration_of(0, 1), Some(6.0));
        assert_eq!(engine.copy_count(0), 2);

        // within the window the follow-up is a local hit
        let out = engine
            .handle_request(&req(5.5, 1, Items::Single(0)))
            .unwrap();
        assert_eq!(out.transfer_charge, 0.0);
        assert_eq!(out.kind, TransferKind::None);
        assert_eq!(engine.expiration_of(0, 1), Some(6.5));
    }

    #[test]
    fn frequent_pair_is_packed_at_discount() {
        let p = params(3.0, 3.0, 0.8);
        let mut engine = Engine::new(2, 3, p, checked_config());
        // seed the history: a pair hit at the origin
        let out = engine
            .handle_request(&req(0.5, 0, Items::pair(0, 1)))
            .unwrap();
        assert_eq!(out.kind, TransferKind::None);
        // now frequent, both absent at server 2, origin holds both
        let out = engine
            .handle_request(&req(1.0, 2, Items::pair(0, 1)))
            .unwrap();
        assert_eq!(out.kind, TransferKind::Packed);
        assert!((out.transfer_charge - 4.8).abs() < 1e-12);
        assert_eq!(out.sources, vec![0]);
    }

    #[test]
    fn infrequent_pair_pays_two_transfers() {
        let p = params(3.0, 3.0, 0.8);
        let mut engine = Engine::new(2, 3, p, checked_config());
        let out = engine
            .handle_request(&req(1.0, 2, Items::pair(0, 1)))
            .unwrap();
        assert_eq!(out.kind, TransferKind::TwoIndividual);
        assert!((out.transfer_charge - 6.0).abs() < 1e-12);
    }

    #[test]
    fn half_present_pair_transfers_only_the_missing_item() {
        let p = params(3.0, 3.0, 0.8);
        let mut engine = Engine::new(2, 3, p, checked_config());
        engine
            .handle_request(&req(1.0, 1, Items::Single(0)))
            .unwrap();
        let out = engine
            .handle_request(&req(1.5, 1, Items::pair(0, 1)))
            .unwrap();
        assert_eq!(out.kind, TransferKind::OneOfPair);
        assert!((out.transfer_charge - 3.0).abs() < 1e-12);
    }

    #[test]
    fn expiration_drops_only_non_lone_copies() {
        let p = params(1.0, 1.0, 0.8);
        let mut engine = Engine::new(1, 3, p, checked_config());
        engine
            .handle_request(&req(0.5, 1, Items::Single(0)))
            .unwrap();
        assert_eq!(engine.copy_count(0), 2);
        // origin copy due at 1.0 with c=2: dropped
        engine.handle_expiration(0, 0, 1.0).unwrap();
        assert_eq!(engine.copy_count(0), 1);
        assert!(!engine.is_alive(0, 0));
        // lone copy at server 1 due at 1.5: forced retention
        engine.handle_expiration(0, 1, 1.5).unwrap();
        assert_eq!(engine.copy_count(0), 1);
        assert_eq!(engine.expiration_of(0, 1), Some(2.5));
        // stale due: no-op
        engine.handle_expiration(0, 1, 1.5).unwrap();
        assert_eq!(engine.expiration_of(0, 1), Some(2.5));
    }

    #[test]
    fn choose_source_prefers_lowest_index() {
        let p = params(1.0, 1.0, 0.8);
        let mut engine = Engine::new(1, 3, p, checked_config());
        engine
            .handle_request(&req(0.5, 2, Items::Single(0)))
            .unwrap();
        // holders {0, 2}, requester 1
        assert_eq!(engine.choose_source(&[0], 1), Some(0));
        assert_eq!(engine.choose_source(&[0], 0), Some(2));
    }

    #[test]
    fn empty_trace_costs_nothing() {
        let trace = Trace::new(2, 3, vec![]).unwrap();
        let report = run_trace(&trace, params(3.0, 3.0, 0.8), ServeMode::Packed).unwrap();
        assert_eq!(report.total_cost(), 0.0);
        assert_eq!(report.n_requests, 0);
        assert_eq!(report.avg_total(), 0.0);
    }

    #[test]
    fn adversarial_single_round_costs() {
        let p = params(1.0, 1.0, 0.8);
        let trace = generate_adversarial(
            &AdversaryConfig {
                rounds: 1,
                gap: 2.0,
                m: 2,
            },
            &p,
        )
        .unwrap();
        let report = run_trace(&trace, p, ServeMode::Packed).unwrap();
        assert!((report.transfer_cost - 2.0).abs() < 1e-12);
        assert!((report.proof_mode_cost() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn insert_then_mine_packs_the_first_request() {
        // under the alternative mining order the pair is frequent already
        // on its own first request, so it ships packed from the origin
        let p = params(1.0, 1.0, 0.8);
        let trace = generate_adversarial(
            &AdversaryConfig {
                rounds: 1,
                gap: 2.0,
                m: 2,
            },
            &p,
        )
        .unwrap();
        let result = run_trace_with(
            &trace,
            p,
            EngineConfig {
                mining_order: MiningOrder::InsertThenMine,
                check_invariants: true,
                ..EngineConfig::default()
            },
        )
        .unwrap();
        assert_eq!(result.report.packed_count, 1);
        assert!((result.report.transfer_cost - 1.6).abs() < 1e-12);
    }

    #[test]
    fn alpha_one_runs_are_identical_across_modes() {
        let cfg = SyntheticConfig {
            k: 4,
            m: 4,
            n: 250,
            pair_fraction: 0.7,
            hot_pairs: vec![(0, 1, 0.6)],
            mean_gap: 0.8,
            seed: 5,
        };
        let trace = generate_synthetic(&cfg).unwrap();
        let p = params(3.0, 3.0, 1.0);
        let packed = run_trace(&trace, p, ServeMode::Packed).unwrap();
        let individual = run_trace(&trace, p, ServeMode::Individual).unwrap();
        assert_eq!(packed, individual);
        assert_eq!(packed.packed_count, 0);
    }

    #[test]
    fn modes_share_trajectories() {
        let cfg = SyntheticConfig {
            k: 4,
            m: 4,
            n: 300,
            pair_fraction: 0.7,
            hot_pairs: vec![(0, 1, 0.6)],
            mean_gap: 0.8,
            seed: 6,
        };
        let trace = generate_synthetic(&cfg).unwrap();
        let p = params(3.0, 3.0, 0.7);
        let run = |mode| {
            run_trace_with(
                &trace,
                p,
                EngineConfig {
                    mode,
                    check_invariants: true,
                    record_trajectory: true,
                    ..EngineConfig::default()
                },
            )
            .unwrap()
        };
        let packed = run(ServeMode::Packed);
        let individual = run(ServeMode::Individual);
        assert_eq!(packed.trajectory, individual.trajectory);
        assert_eq!(
            packed.report.caching_cost_total,
            individual.report.caching_cost_total
        );
        assert!(packed.report.transfer_cost <= individual.report.transfer_cost);
    }

    #[test]
    fn out_of_order_request_is_rejected() {
        let p = params(1.0, 1.0, 0.8);
        let mut engine = Engine::new(1, 2, p, checked_config());
        engine
            .handle_request(&req(2.0, 1, Items::Single(0)))
            .unwrap();
        assert!(matches!(
            engine.handle_request(&req(1.0, 1, Items::Single(0))),
            Err(EngineError::RequestOutOfOrder { .. })
        ));
    }

    #[test]
    fn hit_exactly_at_expiry_instant_is_local() {
        let p = params(1.0, 1.0, 0.8);
        let trace = Trace::new(
            1,
            3,
            vec![
                req(0.5, 1, Items::Single(0)),
                // copy at server 1 expires at exactly 1.5
                req(1.5, 1, Items::Single(0)),
            ],
        )
        .unwrap();
        let report = run_trace(&trace, p, ServeMode::Packed).unwrap();
        assert_eq!(report.hit_count, 1);
        assert!((report.transfer_cost - 1.0).abs() < 1e-12);
    }
}
