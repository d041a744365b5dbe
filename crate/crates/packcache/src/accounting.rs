//! Cost ledgers and real-price projection.
//!
//! One engine run fills both caching ledgers at once: the total ledger
//! (every copy-second over the horizon) and the proof ledger (transfer
//! charges plus window-capped retention after each serve, excluding forced
//! lone-copy retention and the origin's pre-first-use holding).

use crate::model::{CostParams, Items, ServerId, Timestamp};
use thiserror::Error;

/// How a request's transfer demand was met.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferKind {
    /// All requested items were locally alive.
    None,
    /// Single-item request served by one transfer.
    Single,
    /// Pair request, both items shipped individually.
    TwoIndividual,
    /// Pair request served by one packed transfer at `2*alpha*lambda`.
    Packed,
    /// Pair request with exactly one item missing; that item transferred.
    OneOfPair,
}

/// Per-request attribution entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerRequest {
    pub time: Timestamp,
    pub server: ServerId,
    pub items: Items,
    pub transfer_charge: f64,
    pub kind: TransferKind,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SegmentFlags {
    /// Lone-copy retention past the anticipatory window.
    pub forced: bool,
    /// Origin copy holding before its first use.
    pub origin_pre_use: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum AccountingError {
    #[error("negative segment duration {0}")]
    NegativeDuration(f64),
    #[error("reports come from different runs (trace or params mismatch)")]
    MismatchedRuns,
    #[error("pricing values must all be positive")]
    InvalidPricing,
}

/// Completed (or accruing) ledger for one engine run.
#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    params: CostParams,
    trace_fingerprint: u64,
    pub transfer_cost: f64,
    pub caching_cost_total: f64,
    pub caching_cost_proof: f64,
    pub n_requests: usize,
    pub packed_count: usize,
    pub individual_pair_count: usize,
    pub hit_count: usize,
    pub single_transfer_count: usize,
    pub one_of_pair_count: usize,
    pub per_request: Vec<PerRequest>,
}

impl CostReport {
    pub fn new(params: CostParams, trace_fingerprint: u64) -> Self {
        Self {
            params,
            trace_fingerprint,
            transfer_cost: 0.0,
            caching_cost_total: 0.0,
            caching_cost_proof: 0.0,
            n_requests: 0,
            packed_count: 0,
            individual_pair_count: 0,
            hit_count: 0,
            single_transfer_count: 0,
            one_of_pair_count: 0,
            per_request: Vec::new(),
        }
    }

    pub fn params(&self) -> &CostParams {
        &self.params
    }

    pub fn trace_fingerprint(&self) -> u64 {
        self.trace_fingerprint
    }

    /// Adds a copy-lifetime segment to the caching ledgers. The proof ledger
    /// receives the window-capped portion unless the segment is forced
    /// retention or origin pre-use.
    pub fn accrue(&mut self, duration: f64, flags: SegmentFlags) -> Result<(), AccountingError> {
        if duration < 0.0 {
            return Err(AccountingError::NegativeDuration(duration));
        }
        let mu = self.params.mu();
        self.caching_cost_total += mu * duration;
        if !flags.forced && !flags.origin_pre_use {
            self.caching_cost_proof += mu * duration.min(self.params.delta_t());
        }
        Ok(())
    }

    pub fn record_serve(&mut self, entry: PerRequest) {
        self.transfer_cost += entry.transfer_charge;
        self.n_requests += 1;
        match entry.kind {
            TransferKind::None => self.hit_count += 1,
            TransferKind::Single => self.single_transfer_count += 1,
            TransferKind::TwoIndividual => self.individual_pair_count += 1,
            TransferKind::Packed => self.packed_count += 1,
            TransferKind::OneOfPair => self.one_of_pair_count += 1,
        }
        self.per_request.push(entry);
    }

    /// Transfer charges plus window-capped retention: the bookkeeping the
    /// competitive analysis charges the online algorithm.
    pub fn proof_mode_cost(&self) -> f64 {
        self.transfer_cost + self.caching_cost_proof
    }

    /// Full ledger: transfers plus every copy-second over the horizon.
    pub fn total_cost(&self) -> f64 {
        self.transfer_cost + self.caching_cost_total
    }

    pub fn avg_transfer(&self) -> f64 {
        self.per_n(self.transfer_cost)
    }

    pub fn avg_total(&self) -> f64 {
        self.per_n(self.total_cost())
    }

    pub fn avg_proof(&self) -> f64 {
        self.per_n(self.proof_mode_cost())
    }

    fn per_n(&self, x: f64) -> f64 {
        if self.n_requests == 0 {
            0.0
        } else {
            x / self.n_requests as f64
        }
    }

    pub const CSV_HEADER: &'static str = "n_requests,transfer_cost,caching_total,caching_proof,total_cost,proof_cost,avg_transfer,avg_total,avg_proof,packed_count,individual_pair_count,hit_count,single_transfer_count,one_of_pair_count";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.n_requests,
            self.transfer_cost,
            self.caching_cost_total,
            self.caching_cost_proof,
            self.total_cost(),
            self.proof_mode_cost(),
            self.avg_transfer(),
            self.avg_total(),
            self.avg_proof(),
            self.packed_count,
            self.individual_pair_count,
            self.hit_count,
            self.single_transfer_count,
            self.one_of_pair_count
        )
    }

    pub fn summary(&self) -> String {
        format!(
            "n_requests         {}\n\
             transfer_cost      {}\n\
             caching_total      {}\n\
             caching_proof      {}\n\
             total_cost         {}\n\
             proof_cost         {}\n\
             avg_transfer       {}\n\
             avg_total          {}\n\
             avg_proof          {}\n\
             packed_count       {}\n\
             individual_pairs   {}\n\
             hit_count          {}\n\
             single_transfers   {}\n\
             one_of_pair        {}",
            self.n_requests,
            self.transfer_cost,
            self.caching_cost_total,
            self.caching_cost_proof,
            self.total_cost(),
            self.proof_mode_cost(),
            self.avg_transfer(),
            self.avg_total(),
            self.avg_proof(),
            self.packed_count,
            self.individual_pair_count,
            self.hit_count,
            self.single_transfer_count,
            self.one_of_pair_count
        )
    }
}

/// Cloud price sheet for the projection, e.g. $0.04/GB-period caching and
/// $0.08/GB transfer.
#[derive(Debug, Clone, Copy)]
pub struct PricingConfig {
    /// Currency per GB per billing period of cached data.
    pub cache_price: f64,
    /// Currency per GB transferred.
    pub transfer_price: f64,
    /// Data volume of one item in GB.
    pub gb_per_item: f64,
    /// Simulated time units per billing period.
    pub period_scale: f64,
}

impl PricingConfig {
    pub fn validate(&self) -> Result<(), AccountingError> {
        let ok = self.cache_price > 0.0
            && self.transfer_price > 0.0
            && self.gb_per_item > 0.0
            && self.period_scale > 0.0;
        if ok {
            Ok(())
        } else {
            Err(AccountingError::InvalidPricing)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricingProjection {
    pub packed_spend: f64,
    pub individual_spend: f64,
    pub saving: f64,
    /// Transfer volume the saving is equivalent to, in GB.
    pub gb_avoided: f64,
}

/// Maps two reports of the same run (packed vs individual serving) onto a
/// currency spend and the saving between them.
pub fn pricing_projection(
    packed: &CostReport,
    individual: &CostReport,
    pricing: &PricingConfig,
) -> Result<PricingProjection, AccountingError> {
    pricing.validate()?;
    if packed.trace_fingerprint != individual.trace_fingerprint
        || packed.params != individual.params
    {
        return Err(AccountingError::MismatchedRuns);
    }
    let spend = |r: &CostReport| {
        // copy-seconds = caching_cost_total / mu; item transfers = cost / lambda
        let copy_periods = r.caching_cost_total / r.params.mu() / pricing.period_scale;
        let item_transfers = r.transfer_cost / r.params.lambda();
        pricing.cache_price * pricing.gb_per_item * copy_periods
            + pricing.transfer_price * pricing.gb_per_item * item_transfers
    };
    let packed_spend = spend(packed);
    let individual_spend = spend(individual);
    let saving = individual_spend - packed_spend;
    Ok(PricingProjection {
        packed_spend,
        individual_spend,
        saving,
        gb_avoided: saving / pricing.transfer_price,
    })
}
