use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::events::Event;
use super::SimError;
use crate::topology::{ChannelPolicy, ImplDefaults};

pub const DEFAULT_MAX_HOPS: usize = 20;
pub const DEFAULT_LOCKTIME_MAX: u32 = 2016;

/// Forwarding rules one side of a channel applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimPolicy {
    pub cltv_expiry_delta: u32,
    pub htlc_minimum_msat: u64,
    pub fee_base_msat: u64,
    pub fee_proportional_millionths: u64,
    pub dust_limit_sat: u64,
}

impl SimPolicy {
    pub fn from_channel_policy(p: &ChannelPolicy, dust_limit_sat: u64) -> Self {
        Self {
            cltv_expiry_delta: p.cltv_expiry_delta,
            htlc_minimum_msat: p.htlc_minimum_msat,
            fee_base_msat: p.fee_base_msat,
            fee_proportional_millionths: p.fee_proportional_millionths,
            dust_limit_sat,
        }
    }

    pub fn from_defaults(d: &ImplDefaults) -> Self {
        Self::from_channel_policy(&d.policy(), d.dust_limit_satoshis)
    }

    pub fn fee_msat(&self, amount_msat: u64) -> u64 {
        ChannelPolicy::new(0, 0, self.fee_base_msat, self.fee_proportional_millionths).fee_msat(amount_msat)
    }
}

impl Default for SimPolicy {
    fn default() -> Self {
        Self {
            cltv_expiry_delta: 40,
            htlc_minimum_msat: 1000,
            fee_base_msat: 1000,
            fee_proportional_millionths: 1,
            dust_limit_sat: 573,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ChannelState {
    Open,
    ForceClosed { height: u32 },
}

/// Parameters of a channel to open.
#[derive(Debug, Clone, PartialEq)]
pub struct SimChannelSpec {
    pub id: String,
    pub a: String,
    pub b: String,
    pub capacity_sat: u64,
    pub funder: Side,
    /// Moved to the non-funding side at open.
    pub push_sat: u64,
    pub slot_limit: u32,
    /// Policy `a` applies when forwarding to `b`.
    pub policy_a: SimPolicy,
    pub policy_b: SimPolicy,
}

impl SimChannelSpec {
    pub fn new(id: impl Into<String>, a: impl Into<String>, b: impl Into<String>, capacity_sat: u64) -> Self {
        Self {
            id: id.into(),
            a: a.into(),
            b: b.into(),
            capacity_sat,
            funder: Side::A,
            push_sat: 0,
            slot_limit: 483,
            policy_a: SimPolicy::default(),
            policy_b: SimPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PendingHtlc {
    pub payment: u64,
    pub hop: usize,
    pub amount_msat: u64,
    pub payment_hash: String,
    pub expiry_height: u32,
    pub offered_by: Side,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimChannel {
    pub id: String,
    pub a: String,
    pub b: String,
    pub capacity_sat: u64,
    pub balance_a_msat: u64,
    pub balance_b_msat: u64,
    pub pending: Vec<PendingHtlc>,
    pub slot_limit: u32,
    pub policy_a: SimPolicy,
    pub policy_b: SimPolicy,
    pub state: ChannelState,
}

impl SimChannel {
    pub fn side_of(&self, node: &str) -> Option<Side> {
        if self.a == node {
            Some(Side::A)
        } else if self.b == node {
            Some(Side::B)
        } else {
            None
        }
    }

    pub fn node(&self, side: Side) -> &str {
        match side {
            Side::A => &self.a,
            Side::B => &self.b,
        }
    }

    pub fn policy(&self, side: Side) -> &SimPolicy {
        match side {
            Side::A => &self.policy_a,
            Side::B => &self.policy_b,
        }
    }

    pub fn balance_msat(&self, side: Side) -> u64 {
        match side {
            Side::A => self.balance_a_msat,
            Side::B => self.balance_b_msat,
        }
    }

    fn balance_mut(&mut self, side: Side) -> &mut u64 {
        match side {
            Side::A => &mut self.balance_a_msat,
            Side::B => &mut self.balance_b_msat,
        }
    }

    pub fn is_open(&self) -> bool {
        self.state == ChannelState::Open
    }

    pub fn free_slots(&self) -> u32 {
        self.slot_limit.saturating_sub(self.pending.len() as u32)
    }

    /// HTLCs below this are never added to the commitment.
    pub fn dust_threshold_msat(&self) -> u64 {
        self.policy_a.dust_limit_sat.max(self.policy_b.dust_limit_sat) * 1000
    }

    pub fn pending_msat(&self) -> u64 {
        self.pending.iter().map(|h| h.amount_msat).sum()
    }

    /// Balances plus in-flight amounts equal the capacity.
    pub fn conserves_capacity(&self) -> bool {
        self.balance_a_msat + self.balance_b_msat + self.pending_msat() == self.capacity_sat * 1000
    }
}

/// One hop of a payment request: `from` offers over `channel_id`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopRef {
    pub channel_id: String,
    pub from: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FinalExpiry {
    /// Stretch the total lock to the locktime cap.
    Max,
    Blocks(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaymentRequest {
    pub hops: Vec<HopRef>,
    /// Delivered to the recipient.
    pub amount_msat: u64,
    pub final_expiry: FinalExpiry,
    /// Recipient withholds the preimage.
    pub hold: bool,
    /// Preimage seed; payments with the same seed share a hash.
    pub preimage: Option<String>,
    pub label: Option<String>,
}

impl PaymentRequest {
    pub fn new(hops: Vec<HopRef>, amount_msat: u64) -> Self {
        Self {
            hops,
            amount_msat,
            final_expiry: FinalExpiry::Blocks(40),
            hold: false,
            preimage: None,
            label: None,
        }
    }

    pub fn held(mut self) -> Self {
        self.hold = true;
        self.final_expiry = FinalExpiry::Max;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PaymentState {
    Pending,
    Fulfilled,
    Failed,
    /// A hop's channel went on chain.
    ForceClosed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LiveHop {
    pub channel: String,
    pub offered_by: Side,
    pub amount_msat: u64,
    pub expiry_height: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimPayment {
    pub id: u64,
    pub label: Option<String>,
    pub payment_hash: String,
    pub hops: Vec<LiveHop>,
    pub state: PaymentState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub max_hops: usize,
    pub locktime_max: u32,
    /// Refuse a new HTLC whose hash is already in flight.
    pub reject_duplicate_hash: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { max_hops: DEFAULT_MAX_HOPS, locktime_max: DEFAULT_LOCKTIME_MAX, reject_duplicate_hash: false }
    }
}

/// Block-level HTLC state machine over a set of channels.
#[derive(Debug, Clone, Default)]
pub struct SimNetwork {
    pub config: SimConfig,
    height: u32,
    channels: Vec<SimChannel>,
    by_id: BTreeMap<String, usize>,
    by_pair: BTreeMap<(String, String), Vec<usize>>,
    payments: Vec<SimPayment>,
    events: Vec<Event>,
}

fn pair_key(u: &str, v: &str) -> (String, String) {
    if u <= v {
        (u.to_string(), v.to_string())
    } else {
        (v.to_string(), u.to_string())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl SimNetwork {
    pub fn new(config: SimConfig) -> Self {
        Self { config, ..Self::default() }
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> &[SimChannel] {
        &self.channels
    }

    pub fn channel(&self, id: &str) -> Option<&SimChannel> {
        self.by_id.get(id).map(|&i| &self.channels[i])
    }

    pub fn payments(&self) -> &[SimPayment] {
        &self.payments
    }

    pub fn payment(&self, id: u64) -> Option<&SimPayment> {
        self.payments.get(id as usize)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub(crate) fn log(&mut self, event: Event) {
        self.events.push(event);
    }

    /// Channels joining two nodes, in opening order.
    pub fn channels_between(&self, u: &str, v: &str) -> Vec<&SimChannel> {
        self.by_pair
            .get(&pair_key(u, v))
            .map(|ix| ix.iter().map(|&i| &self.channels[i]).collect())
            .unwrap_or_default()
    }

    pub fn open_channel(&mut self, spec: SimChannelSpec) -> Result<(), SimError> {
        if self.by_id.contains_key(&spec.id) {
            return Err(SimError::DuplicateChannel(spec.id));
        }
        if spec.capacity_sat == 0 {
            return Err(SimError::ZeroCapacity(spec.id));
        }
        if spec.a == spec.b {
            return Err(SimError::SelfChannel(spec.id));
        }
        if spec.push_sat > spec.capacity_sat {
            return Err(SimError::PushExceedsCapacity(spec.id));
        }
        if spec.slot_limit == 0 {
            return Err(SimError::ZeroSlots(spec.id));
        }
        let funded = (spec.capacity_sat - spec.push_sat) * 1000;
        let pushed = spec.push_sat * 1000;
        let (balance_a_msat, balance_b_msat) = match spec.funder {
            Side::A => (funded, pushed),
            Side::B => (pushed, funded),
        };
        let idx = self.channels.len();
        self.by_id.insert(spec.id.clone(), idx);
        self.by_pair.entry(pair_key(&spec.a, &spec.b)).or_default().push(idx);
        self.log(Event::ChannelOpened {
            channel: spec.id.clone(),
            a: spec.a.clone(),
            b: spec.b.clone(),
            capacity_sat: spec.capacity_sat,
            slot_limit: spec.slot_limit,
            height: self.height,
        });
        self.channels.push(SimChannel {
            id: spec.id,
            a: spec.a,
            b: spec.b,
            capacity_sat: spec.capacity_sat,
            balance_a_msat,
            balance_b_msat,
            pending: Vec::new(),
            slot_limit: spec.slot_limit,
            policy_a: spec.policy_a,
            policy_b: spec.policy_b,
            state: ChannelState::Open,
        });
        Ok(())
    }

    /// Resolve a node path to hops, taking for each step the first open
    /// channel with a free slot (opening order), else the first channel.
    pub fn route_by_nodes<S: AsRef<str>>(&self, path: &[S]) -> Result<Vec<HopRef>, SimError> {
        let mut used: BTreeMap<usize, u32> = BTreeMap::new();
        let mut hops = Vec::with_capacity(path.len().saturating_sub(1));
        for w in path.windows(2) {
            let (u, v) = (w[0].as_ref(), w[1].as_ref());
            let candidates = self.by_pair.get(&pair_key(u, v)).cloned().unwrap_or_default();
            let pick = candidates
                .iter()
                .copied()
                .find(|&i| {
                    let c = &self.channels[i];
                    c.is_open() && c.free_slots() > used.get(&i).copied().unwrap_or(0)
                })
                .or_else(|| candidates.first().copied())
                .ok_or_else(|| SimError::NoChannel { from: u.to_string(), to: v.to_string() })?;
            *used.entry(pick).or_default() += 1;
            hops.push(HopRef { channel_id: self.channels[pick].id.clone(), from: u.to_string() });
        }
        Ok(hops)
    }

    /// Add one HTLC per hop, or nothing at all if any hop refuses.
    pub fn send_payment(&mut self, req: &PaymentRequest) -> Result<u64, SimError> {
        let n = req.hops.len();
        if n == 0 {
            return Err(SimError::EmptyRoute);
        }
        if n > self.config.max_hops {
            return Err(SimError::RouteTooLong { hops: n, max: self.config.max_hops });
        }

        // resolve channels and offering sides
        let mut resolved: Vec<(usize, Side)> = Vec::with_capacity(n);
        let mut at: Option<String> = None;
        for (i, h) in req.hops.iter().enumerate() {
            let &ci = self
                .by_id
                .get(&h.channel_id)
                .ok_or_else(|| SimError::ChannelNotFound(h.channel_id.clone()))?;
            let c = &self.channels[ci];
            if !c.is_open() {
                return Err(SimError::ChannelClosed(c.id.clone()));
            }
            let side = c.side_of(&h.from).ok_or_else(|| SimError::NotAnEndpoint {
                channel: c.id.clone(),
                node: h.from.clone(),
            })?;
            if let Some(prev) = &at {
                if *prev != h.from {
                    return Err(SimError::BrokenPath { hop: i });
                }
            }
            at = Some(c.node(side.other()).to_string());
            resolved.push((ci, side));
        }

        // forwarder of hop i + 1 charges fee and delta on hop i
        let mut amounts = vec![0u64; n];
        let mut expiries = vec![0u32; n];
        let mut deltas: u64 = 0;
        let mut amount = req.amount_msat;
        for i in (0..n).rev() {
            amounts[i] = amount;
            if i > 0 {
                let (ci, side) = resolved[i];
                let p = self.channels[ci].policy(side);
                amount += p.fee_msat(amount);
                deltas += p.cltv_expiry_delta as u64;
            }
        }
        let final_blocks = match req.final_expiry {
            FinalExpiry::Blocks(b) => b as u64,
            FinalExpiry::Max => (self.config.locktime_max as u64).checked_sub(deltas).ok_or(
                SimError::LocktimeExceeded { total: deltas, max: self.config.locktime_max },
            )?,
        };
        let total = deltas + final_blocks;
        if total > self.config.locktime_max as u64 {
            return Err(SimError::LocktimeExceeded { total, max: self.config.locktime_max });
        }
        let mut expiry = self.height as u64 + final_blocks;
        for i in (0..n).rev() {
            expiries[i] = expiry as u32;
            if i > 0 {
                let (ci, side) = resolved[i];
                expiry += self.channels[ci].policy(side).cltv_expiry_delta as u64;
            }
        }

        for (i, &(ci, side)) in resolved.iter().enumerate() {
            let c = &self.channels[ci];
            let min = c.policy(side).htlc_minimum_msat;
            if amounts[i] < min {
                return Err(SimError::AmountBelowMinimum { channel: c.id.clone(), amount_msat: amounts[i], minimum_msat: min });
            }
            let dust = c.dust_threshold_msat();
            if amounts[i] < dust {
                return Err(SimError::BelowDust { channel: c.id.clone(), amount_msat: amounts[i], dust_msat: dust });
            }
        }

        let mut uses: BTreeMap<usize, u32> = BTreeMap::new();
        let mut outflow: BTreeMap<(usize, bool), u64> = BTreeMap::new();
        for (i, &(ci, side)) in resolved.iter().enumerate() {
            *uses.entry(ci).or_default() += 1;
            *outflow.entry((ci, side == Side::A)).or_default() += amounts[i];
        }
        for (&ci, &k) in &uses {
            let c = &self.channels[ci];
            if c.pending.len() as u32 + k > c.slot_limit {
                return Err(SimError::SlotFull { channel: c.id.clone(), limit: c.slot_limit });
            }
        }
        for (&(ci, is_a), &need) in &outflow {
            let c = &self.channels[ci];
            let side = if is_a { Side::A } else { Side::B };
            if c.balance_msat(side) < need {
                return Err(SimError::InsufficientBalance {
                    channel: c.id.clone(),
                    needed_msat: need,
                    available_msat: c.balance_msat(side),
                });
            }
        }

        let id = self.payments.len() as u64;
        let seed = req.preimage.clone().unwrap_or_else(|| format!("payment-{id}"));
        let payment_hash = hex(&Sha256::digest(Sha256::digest(seed.as_bytes())));
        if self.config.reject_duplicate_hash
            && self
                .payments
                .iter()
                .any(|p| p.state == PaymentState::Pending && p.payment_hash == payment_hash)
        {
            return Err(SimError::DuplicateHash(payment_hash));
        }

        let mut hops = Vec::with_capacity(n);
        for (i, &(ci, side)) in resolved.iter().enumerate() {
            let c = &mut self.channels[ci];
            *c.balance_mut(side) -= amounts[i];
            c.pending.push(PendingHtlc {
                payment: id,
                hop: i,
                amount_msat: amounts[i],
                payment_hash: payment_hash.clone(),
                expiry_height: expiries[i],
                offered_by: side,
            });
            hops.push(LiveHop {
                channel: c.id.clone(),
                offered_by: side,
                amount_msat: amounts[i],
                expiry_height: expiries[i],
            });
        }
        self.log(Event::PaymentAdded {
            payment: id,
            label: req.label.clone(),
            channels: hops.iter().map(|h| h.channel.clone()).collect(),
            amount_msat: amounts[0],
            first_expiry: expiries[0],
            height: self.height,
        });
        self.payments.push(SimPayment {
            id,
            label: req.label.clone(),
            payment_hash,
            hops,
            state: PaymentState::Pending,
        });
        if !req.hold {
            self.fulfill_payment(id)?;
        }
        Ok(id)
    }

    fn pending_payment(&self, id: u64) -> Result<&SimPayment, SimError> {
        let p = self.payments.get(id as usize).ok_or(SimError::UnknownPayment(id))?;
        match p.state {
            PaymentState::Pending => Ok(p),
            PaymentState::ForceClosed => {
                let closed = p
                    .hops
                    .iter()
                    .find(|h| !self.channel(&h.channel).is_some_and(|c| c.is_open()))
                    .map(|h| h.channel.clone())
                    .unwrap_or_default();
                Err(SimError::HopForceClosed { payment: id, channel: closed })
            }
            _ => Err(SimError::AlreadyResolved(id)),
        }
    }

    /// Remove the payment's HTLC from one hop, crediting `to_receiver` or the offerer.
    fn settle_hop(&mut self, payment: u64, hop: usize, channel: &str, to_receiver: bool) {
        let ci = self.by_id[channel];
        let c = &mut self.channels[ci];
        if let Some(pos) = c.pending.iter().position(|h| h.payment == payment && h.hop == hop) {
            let h = c.pending.remove(pos);
            let side = if to_receiver { h.offered_by.other() } else { h.offered_by };
            *c.balance_mut(side) += h.amount_msat;
        }
    }

    /// Reveal the preimage: hops settle from the recipient back to the sender.
    pub fn fulfill_payment(&mut self, id: u64) -> Result<(), SimError> {
        let hops = self.pending_payment(id)?.hops.clone();
        for (i, h) in hops.iter().enumerate().rev() {
            self.settle_hop(id, i, &h.channel, true);
        }
        self.payments[id as usize].state = PaymentState::Fulfilled;
        self.log(Event::PaymentFulfilled { payment: id, height: self.height });
        Ok(())
    }

    /// Fail the payment back; every balance returns to its prior value.
    pub fn fail_payment(&mut self, id: u64) -> Result<(), SimError> {
        let hops = self.pending_payment(id)?.hops.clone();
        for (i, h) in hops.iter().enumerate().rev() {
            self.settle_hop(id, i, &h.channel, false);
        }
        self.payments[id as usize].state = PaymentState::Failed;
        self.log(Event::PaymentFailed { payment: id, height: self.height });
        Ok(())
    }

    /// Mine `n` blocks. A channel holding an HTLC past its expiry goes on
    /// chain; the HTLCs it held return to their offerers and the other hops
    /// of those payments are failed back off chain. Returns closed channels.
    pub fn advance_blocks(&mut self, n: u32) -> Result<Vec<String>, SimError> {
        if n == 0 {
            return Err(SimError::ZeroBlocks);
        }
        self.height += n;
        self.log(Event::BlocksMined { count: n, height: self.height });
        let mut closed = Vec::new();
        loop {
            let expired = self
                .channels
                .iter()
                .enumerate()
                .filter(|(_, c)| c.is_open())
                .flat_map(|(ci, c)| c.pending.iter().map(move |h| (h.expiry_height, ci, h.payment)))
                .filter(|&(e, _, _)| e < self.height)
                .min();
            let Some((expiry, ci, payment)) = expired else { break };
            let height = self.height;
            let c = &mut self.channels[ci];
            c.state = ChannelState::ForceClosed { height };
            let htlcs = std::mem::take(&mut c.pending);
            for h in &htlcs {
                *c.balance_mut(h.offered_by) += h.amount_msat;
            }
            let id = c.id.clone();
            self.log(Event::ForceClosed { channel: id.clone(), expired_payment: payment, expiry_height: expiry, height });
            closed.push(id.clone());
            let affected: BTreeSet<u64> = htlcs.iter().map(|h| h.payment).collect();
            for p in affected {
                let hops = self.payments[p as usize].hops.clone();
                for (i, h) in hops.iter().enumerate() {
                    if h.channel != id {
                        self.settle_hop(p, i, &h.channel, false);
                    }
                }
                self.payments[p as usize].state = PaymentState::ForceClosed;
            }
        }
        Ok(closed)
    }

    /// Nodes reachable from `start` over open channels with a free slot,
    /// ignoring channels for which `skip` holds.
    pub fn reachable_with_free_slots<F>(&self, start: &str, mut skip: F) -> BTreeSet<String>
    where
        F: FnMut(&SimChannel) -> bool,
    {
        let mut seen = BTreeSet::from([start.to_string()]);
        let mut stack = vec![start.to_string()];
        let usable: Vec<&SimChannel> = self
            .channels
            .iter()
            .filter(|c| c.is_open() && c.free_slots() > 0 && !skip(c))
            .collect();
        while let Some(u) = stack.pop() {
            for c in &usable {
                let next = if c.a == u {
                    &c.b
                } else if c.b == u {
                    &c.a
                } else {
                    continue;
                };
                if seen.insert(next.clone()) {
                    stack.push(next.clone());
                }
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(push: bool) -> SimNetwork {
        let mut net = SimNetwork::new(SimConfig::default());
        for (id, a, b) in [("ab", "A", "B"), ("bc", "B", "C")] {
            let mut s = SimChannelSpec::new(id, a, b, 1_000_000);
            if push {
                s.push_sat = 500_000;
            }
            net.open_channel(s).unwrap();
        }
        net
    }

    #[test]
    fn open_puts_balance_on_funder() {
        let mut net = line(false);
        let c = net.channel("ab").unwrap();
        assert_eq!((c.balance_a_msat, c.balance_b_msat), (1_000_000_000, 0));
        net.open_channel(SimChannelSpec::new("ab2", "A", "B", 5)).unwrap();
        assert_eq!(net.channels_between("B", "A").len(), 2);
        assert!(matches!(
            net.open_channel(SimChannelSpec::new("ab", "A", "B", 5)),
            Err(SimError::DuplicateChannel(_))
        ));
        let back = net.route_by_nodes(&["B", "A"]).unwrap();
        assert!(matches!(
            net.send_payment(&PaymentRequest::new(back, 1_000_000)),
            Err(SimError::InsufficientBalance { .. })
        ));
    }

    #[test]
    fn fulfill_pays_fees_to_the_middle() {
        let mut net = line(false);
        let r = net.route_by_nodes(&["A", "B", "C"]).unwrap();
        net.send_payment(&PaymentRequest::new(r, 1_000_000)).unwrap();
        let fee = 1000 + 1;
        let ab = net.channel("ab").unwrap();
        let bc = net.channel("bc").unwrap();
        assert_eq!(ab.balance_b_msat, 1_000_000 + fee);
        assert_eq!(bc.balance_b_msat, 1_000_000);
        // B's net gain across both channels is the fee
        assert_eq!(ab.balance_b_msat as i64 - (1_000_000_000 - bc.balance_a_msat) as i64, fee as i64);
        assert!(ab.conserves_capacity() && bc.conserves_capacity());
    }

    #[test]
    fn fail_restores_exactly() {
        let mut net = line(true);
        let before: Vec<_> = net.channels().to_vec();
        let r = net.route_by_nodes(&["A", "B", "C"]).unwrap();
        let id = net.send_payment(&PaymentRequest::new(r, 2_000_000).held()).unwrap();
        assert_eq!(net.channel("ab").unwrap().pending.len(), 1);
        net.fail_payment(id).unwrap();
        assert_eq!(net.channels(), &before[..]);
        assert!(matches!(net.fail_payment(id), Err(SimError::AlreadyResolved(_))));
        assert!(matches!(net.fulfill_payment(99), Err(SimError::UnknownPayment(99))));
    }

    #[test]
    fn expiry_closes_only_the_last_channel() {
        let mut net = line(true);
        let r = net.route_by_nodes(&["A", "B", "C"]).unwrap();
        let mut req = PaymentRequest::new(r, 1_000_000);
        req.hold = true;
        req.final_expiry = FinalExpiry::Blocks(10);
        let id = net.send_payment(&req).unwrap();
        let p = net.payment(id).unwrap();
        assert_eq!(p.hops[0].expiry_height, 50);
        assert_eq!(p.hops[1].expiry_height, 10);
        assert!(net.advance_blocks(10).unwrap().is_empty());
        assert_eq!(net.advance_blocks(1).unwrap(), vec!["bc".to_string()]);
        assert!(net.channel("ab").unwrap().is_open());
        assert!(net.channel("ab").unwrap().pending.is_empty());
        assert!(matches!(net.fulfill_payment(id), Err(SimError::HopForceClosed { .. })));
        assert!(net.advance_blocks(100).unwrap().is_empty());
        assert!(net.channels().iter().all(|c| c.conserves_capacity()));
    }

    #[test]
    fn hop_and_locktime_limits() {
        let mut net = line(true);
        let mut path = vec!["A"];
        for _ in 0..10 {
            path.extend(["B", "A"]);
        }
        let r = net.route_by_nodes(&path).unwrap();
        assert_eq!(r.len(), 20);
        let ok = net.send_payment(&PaymentRequest::new(r.clone(), 1_000_000).held()).unwrap();
        net.fail_payment(ok).unwrap();
        path.push("B");
        let r21 = net.route_by_nodes(&path).unwrap();
        assert!(matches!(
            net.send_payment(&PaymentRequest::new(r21, 1_000_000)),
            Err(SimError::RouteTooLong { hops: 21, .. })
        ));
        // 19 forwarders at 40 = 760, so a final of 1256 is the most allowed
        let mut req = PaymentRequest::new(r, 1_000_000);
        req.final_expiry = FinalExpiry::Blocks(1256);
        let id = net.send_payment(&req).unwrap();
        assert_eq!(net.payment(id).unwrap().state, PaymentState::Fulfilled);
        req.final_expiry = FinalExpiry::Blocks(1257);
        assert!(matches!(net.send_payment(&req), Err(SimError::LocktimeExceeded { total: 2017, .. })));
    }

    #[test]
    fn amount_checks() {
        let mut net = line(true);
        let r = net.route_by_nodes(&["A", "B"]).unwrap();
        assert!(matches!(net.send_payment(&PaymentRequest::new(r.clone(), 500)), Err(SimError::AmountBelowMinimum { .. })));
        assert!(matches!(net.send_payment(&PaymentRequest::new(r, 572_999)), Err(SimError::BelowDust { .. })));
    }

    #[test]
    fn duplicate_hash_toggle() {
        let mut net = line(true);
        let r = net.route_by_nodes(&["A", "B"]).unwrap();
        let mut req = PaymentRequest::new(r, 1_000_000).held();
        req.preimage = Some("same".into());
        net.send_payment(&req).unwrap();
        net.send_payment(&req).unwrap();
        net.config.reject_duplicate_hash = true;
        assert!(matches!(net.send_payment(&req), Err(SimError::DuplicateHash(_))));
    }

    proptest! {
        #[test]
        fn send_then_fail_is_identity(
            steps in prop::collection::vec((0usize..4, 600_000u64..50_000_000, any::<bool>()), 1..40),
            deltas in prop::collection::vec(1u32..200, 3),
        ) {
            let mut net = SimNetwork::new(SimConfig::default());
            for (i, (id, a, b)) in [("ab", "A", "B"), ("bc", "B", "C"), ("cd", "C", "D")].into_iter().enumerate() {
                let mut s = SimChannelSpec::new(id, a, b, 2_000_000);
                s.push_sat = 1_000_000;
                s.slot_limit = 30;
                s.policy_a.cltv_expiry_delta = deltas[i];
                s.policy_b.cltv_expiry_delta = deltas[(i + 1) % 3];
                net.open_channel(s).unwrap();
            }
            let paths: [&[&str]; 4] = [&["A", "B", "C", "D"], &["D", "C", "B"], &["B", "C", "B", "A"], &["C", "D"]];
            let mut live = Vec::new();
            for (p, amount, hold) in steps {
                let r = net.route_by_nodes(paths[p]).unwrap();
                let before: Vec<SimChannel> = net.channels().to_vec();
                let mut req = PaymentRequest::new(r, amount);
                req.hold = true;
                req.final_expiry = FinalExpiry::Blocks(9);
                match net.send_payment(&req) {
                    Ok(id) => {
                        let pay = net.payment(id).unwrap();
                        for w in pay.hops.windows(2) {
                            prop_assert!(w[0].expiry_height > w[1].expiry_height);
                        }
                        if hold {
                            live.push(id);
                        } else {
                            net.fail_payment(id).unwrap();
                            prop_assert_eq!(net.channels(), &before[..]);
                        }
                    }
                    Err(_) => prop_assert_eq!(net.channels(), &before[..]),
                }
                for c in net.channels() {
                    prop_assert!(c.conserves_capacity());
                    prop_assert!(c.pending.len() as u32 <= c.slot_limit);
                }
            }
            for id in live {
                net.fulfill_payment(id).unwrap();
            }
            for c in net.channels() {
                prop_assert!(c.conserves_capacity());
                prop_assert!(c.pending.is_empty());
            }
        }
    }
}
