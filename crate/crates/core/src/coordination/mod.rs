//! The arbitrator/transmitter coordination protocols as explicit message passing.
//!
//! In one-shot mode the arbitrator holds full channel knowledge, computes the Walrasian
//! price and announces it; each transmitter adopts its demand without replying. In
//! iterative mode the arbitrator only knows a few scalars and bisects the price interval
//! on the sign of the reported excess demand for good 1.

mod agents;
mod knowledge;
mod message;
mod transport;

pub use agents::{Arbitrator, Transmitter};
pub use knowledge::{expected_keys, AgentKnowledge, KnowledgeKey, KnowledgeValue, Mode, Role};
pub use message::{from_jsonl, to_jsonl, Destination, Message, MessageKind};
pub use transport::{InProcessQueue, Transport};

use serde::{Deserialize, Serialize};

use crate::economy::Allocation;
use crate::market::{price_bounds, ConsumerParams};
use crate::phy::{derive_gains, sinr_lambda_unchecked, ChannelRealization, Link, SinrPair};
use crate::{Error, Result};

/// Default accuracy of the price-adjustment process.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Bound on delivery rounds in one protocol run; bisection on doubles ends far sooner.
const MAX_ROUNDS: usize = 10_000;

/// One round of the price-adjustment process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub beta: f64,
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub z1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TatonnementTrace {
    /// One row per announced price, then a final row at the terminal price.
    pub rows: Vec<TraceRow>,
    pub final_beta: f64,
    pub converged: bool,
}

impl TatonnementTrace {
    /// Number of interval halvings.
    pub fn iterations(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }
}

/// `ceil(log2(width / epsilon))`, the number of halvings bisection needs.
pub fn expected_iterations(beta_lo: f64, beta_hi: f64, epsilon: f64) -> usize {
    let ratio = (beta_hi - beta_lo) / epsilon;
    if ratio <= 1.0 {
        0
    } else {
        ratio.log2().ceil() as usize
    }
}

pub(crate) fn excess_good1(x11: f64, x12: f64, lambda1: f64) -> f64 {
    x11 + x12 - lambda1
}

/// Excess demand for good 1 means good 1 is too cheap: raise the lower bound.
pub(crate) fn bisection_update(lo: f64, hi: f64, beta: f64, z1: f64) -> (f64, f64, f64) {
    let (lo, hi) = if z1 > 0.0 { (beta, hi) } else { (lo, beta) };
    (lo, hi, 0.5 * (lo + hi))
}

/// Whether another halving is both needed and representable.
pub(crate) fn keep_bisecting(lo: f64, hi: f64, epsilon: f64) -> bool {
    let mid = 0.5 * (lo + hi);
    hi - lo > epsilon && mid > lo && mid < hi
}

/// The price-adjustment process computed directly, without agents.
pub fn tatonnement(ch: &ChannelRealization, epsilon: f64) -> Result<TatonnementTrace> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let gains = derive_gains(ch)?;
    let (mut lo, mut hi) = price_bounds(&gains)?;
    let c1 = ConsumerParams::from_gains(Link::One, &gains);
    let c2 = ConsumerParams::from_gains(Link::Two, &gains);
    let lambda1 = gains.lambda_mrt(Link::One);
    let z1_at = |beta: f64| {
        let (x11, _) = c1.demand_at(beta);
        let (_, x12) = c2.demand_at(1.0 / beta);
        excess_good1(x11, x12, lambda1)
    };

    let mut beta = 0.5 * (lo + hi);
    let mut rows = Vec::new();
    while keep_bisecting(lo, hi, epsilon) {
        let z1 = z1_at(beta);
        rows.push(TraceRow {
            iteration: rows.len(),
            beta,
            beta_lo: lo,
            beta_hi: hi,
            z1,
        });
        (lo, hi, beta) = bisection_update(lo, hi, beta, z1);
    }
    rows.push(TraceRow {
        iteration: rows.len(),
        beta,
        beta_lo: lo,
        beta_hi: hi,
        z1: z1_at(beta),
    });
    Ok(TatonnementTrace {
        rows,
        final_beta: beta,
        converged: hi - lo <= epsilon,
    })
}

/// Knowledge of all three agents.
#[derive(Debug)]
pub struct Agents {
    pub arbitrator: AgentKnowledge,
    pub transmitters: [AgentKnowledge; 2],
}

impl Agents {
    /// Information sets for `mode`, filled from the ground-truth channel.
    pub fn from_channel(ch: &ChannelRealization, mode: Mode) -> Result<Self> {
        Ok(Agents {
            arbitrator: AgentKnowledge::for_role(Role::Arbitrator, mode, ch)?,
            transmitters: [
                AgentKnowledge::for_role(Role::Transmitter(Link::One), mode, ch)?,
                AgentKnowledge::for_role(Role::Transmitter(Link::Two), mode, ch)?,
            ],
        })
    }
}

/// Result of one protocol run.
#[derive(Debug)]
pub struct ProtocolOutcome {
    pub mode: Mode,
    pub final_beta: f64,
    /// `(own, other)` demand of each transmitter at the final price.
    pub demands: [(f64, f64); 2],
    /// The price-adjustment trace; `None` in one-shot mode.
    pub trace: Option<TatonnementTrace>,
    /// The agents after the run, with their knowledge audit logs.
    pub arbitrator: Arbitrator,
    pub transmitters: [Transmitter; 2],
}

/// Runs the protocol over `transport` with a fixed schedule: the arbitrator speaks,
/// transmitter 1 then transmitter 2 answer, and the arbitrator reacts.
pub fn run_protocol<T: Transport>(
    agents: Agents,
    transport: &mut T,
    mode: Mode,
    epsilon: f64,
) -> Result<ProtocolOutcome> {
    let Agents {
        arbitrator,
        transmitters: [k1, k2],
    } = agents;
    let mut arb = Arbitrator::new(arbitrator, mode, epsilon)?;
    let mut txs = [Transmitter::new(k1, mode)?, Transmitter::new(k2, mode)?];
    if txs[0].role() != Role::TRANSMITTERS[0] || txs[1].role() != Role::TRANSMITTERS[1] {
        return Err(Error::Protocol("transmitters given in the wrong order".into()));
    }

    for m in arb.start()? {
        transport.send(m)?;
    }
    let mut rounds = 0;
    loop {
        let mut progressed = false;
        for tx in txs.iter_mut() {
            while let Some(m) = transport.recv(tx.role())? {
                for reply in tx.handle(&m)? {
                    transport.send(reply)?;
                }
                progressed = true;
            }
        }
        while let Some(m) = transport.recv(Role::Arbitrator)? {
            for reply in arb.handle(&m)? {
                transport.send(reply)?;
            }
            progressed = true;
        }
        if !progressed {
            break;
        }
        rounds += 1;
        if rounds > MAX_ROUNDS {
            return Err(Error::Protocol(format!("no termination after {MAX_ROUNDS} rounds")));
        }
    }

    let final_beta = arb
        .final_beta()
        .ok_or_else(|| Error::Protocol("arbitrator did not settle on a price".into()))?;
    let demand = |tx: &Transmitter| {
        tx.demand()
            .ok_or_else(|| Error::Protocol(format!("{} never received a price", tx.role())))
    };
    let demands = [demand(&txs[0])?, demand(&txs[1])?];

    let trace = match mode {
        Mode::OneShot => None,
        Mode::Iterative => {
            let (lo, hi) = arb.interval();
            let mut rows = arb.trace().to_vec();
            rows.push(TraceRow {
                iteration: arb.iteration(),
                beta: final_beta,
                beta_lo: lo,
                beta_hi: hi,
                z1: arb.excess_from(demands[0], demands[1])?,
            });
            Some(TatonnementTrace {
                rows,
                final_beta,
                converged: hi - lo <= epsilon,
            })
        }
    };
    Ok(ProtocolOutcome {
        mode,
        final_beta,
        demands,
        trace,
        arbitrator: arb,
        transmitters: txs,
    })
}

/// Walrasian price, allocation and SINRs assigned by the one-shot protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalrasAssignment {
    pub beta: f64,
    pub allocation: Allocation,
    pub sinr: SinrPair,
}

/// Builds the box allocation and SINRs from a one-shot outcome.
pub fn assignment_from(outcome: &ProtocolOutcome, ch: &ChannelRealization) -> Result<WalrasAssignment> {
    let gains = derive_gains(ch)?;
    let [(x11, x21), (x22, x12)] = outcome.demands;
    let allocation = Allocation::new_box(x11, x21, x12, x22, &gains)?;
    Ok(WalrasAssignment {
        beta: outcome.final_beta,
        allocation,
        sinr: sinr_lambda_unchecked(x11, x22, &gains),
    })
}

/// The one-shot protocol on an in-process queue.
pub fn one_shot_walras(ch: &ChannelRealization) -> Result<WalrasAssignment> {
    derive_gains(ch)?.ensure_nondegenerate()?;
    let mut queue = InProcessQueue::new();
    let outcome = run_protocol(Agents::from_channel(ch, Mode::OneShot)?, &mut queue, Mode::OneShot, DEFAULT_EPSILON)?;
    assignment_from(&outcome, ch)
}

/// Drives a fresh arbitrator with the transmitter messages of a recorded log and checks
/// that it emits exactly the logged arbitrator messages. Returns the final price.
pub fn replay(log: &[Message], arbitrator: AgentKnowledge, mode: Mode, epsilon: f64) -> Result<f64> {
    let mut arb = Arbitrator::new(arbitrator, mode, epsilon)?;
    let mut expected = log.iter().filter(|m| m.from == Role::Arbitrator);
    let mut check = |emitted: Vec<Message>| -> Result<()> {
        for m in emitted {
            match expected.next() {
                Some(logged) if *logged == m => {}
                Some(logged) => {
                    return Err(Error::Protocol(format!("replay diverged: emitted {m:?}, log has {logged:?}")))
                }
                None => return Err(Error::Protocol(format!("replay emitted unlogged {m:?}"))),
            }
        }
        Ok(())
    };
    check(arb.start()?)?;
    for m in log.iter().filter(|m| m.to.includes(Role::Arbitrator)) {
        check(arb.handle(m)?)?;
    }
    if let Some(extra) = expected.next() {
        return Err(Error::Protocol(format!("log has arbitrator message {extra:?} not reproduced")));
    }
    arb.final_beta()
        .ok_or_else(|| Error::Protocol("replayed log does not terminate".into()))
}
