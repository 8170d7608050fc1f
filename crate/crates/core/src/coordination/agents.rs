use super::knowledge::{AgentKnowledge, KnowledgeKey, Mode, Role};
use super::message::{Destination, Message, MessageKind};
use super::{bisection_update, excess_good1, keep_bisecting, TraceRow};
use crate::market::{price_bounds_from, relative_price, walras_price, ConsumerParams};
use crate::phy::{derive_gains, projection_gains, ChannelRealization, Link};
use crate::{Error, Result};

/// The price-setting coordinator. It never computes beamformers.
#[derive(Debug)]
pub struct Arbitrator {
    knowledge: AgentKnowledge,
    mode: Mode,
    epsilon: f64,
    lo: f64,
    hi: f64,
    beta: f64,
    iteration: usize,
    reports: [Option<(f64, f64)>; 2],
    trace: Vec<TraceRow>,
    final_beta: Option<f64>,
}

impl Arbitrator {
    pub fn new(knowledge: AgentKnowledge, mode: Mode, epsilon: f64) -> Result<Self> {
        if knowledge.role() != Role::Arbitrator {
            return Err(Error::Protocol(format!("{} cannot act as arbitrator", knowledge.role())));
        }
        knowledge.validate(mode)?;
        if mode == Mode::Iterative && !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Arbitrator {
            knowledge,
            mode,
            epsilon,
            lo: f64::NAN,
            hi: f64::NAN,
            beta: f64::NAN,
            iteration: 0,
            reports: [None, None],
            trace: Vec::new(),
            final_beta: None,
        })
    }

    pub fn knowledge(&self) -> &AgentKnowledge {
        &self.knowledge
    }

    /// Rows recorded so far, one per completed round.
    pub fn trace(&self) -> &[TraceRow] {
        &self.trace
    }

    pub fn final_beta(&self) -> Option<f64> {
        self.final_beta
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    fn announce(&self, to: Destination, beta: f64) -> Message {
        Message {
            iteration: self.iteration,
            from: Role::Arbitrator,
            to,
            kind: MessageKind::PriceAnnouncement { beta },
        }
    }

    fn terminate(&mut self) -> Vec<Message> {
        self.final_beta = Some(self.beta);
        Role::TRANSMITTERS
            .iter()
            .map(|&r| Message {
                iteration: self.iteration,
                from: Role::Arbitrator,
                to: Destination::To(r),
                kind: MessageKind::Terminate { beta_final: self.beta },
            })
            .collect()
    }

    /// Opening messages of the protocol.
    pub fn start(&mut self) -> Result<Vec<Message>> {
        match self.mode {
            Mode::OneShot => {
                let k = &self.knowledge;
                let h = |from, to| k.vector(KnowledgeKey::Channel { from, to }).map(<[_]>::to_vec);
                let ch = ChannelRealization::new(
                    h(Link::One, Link::One)?,
                    h(Link::One, Link::Two)?,
                    h(Link::Two, Link::One)?,
                    h(Link::Two, Link::Two)?,
                    k.scalar(KnowledgeKey::NoiseVariance)?,
                )?;
                let price = walras_price(&derive_gains(&ch)?)?;
                self.lo = price.beta_lo;
                self.hi = price.beta_hi;
                self.beta = price.beta;
                self.final_beta = Some(price.beta);
                Ok(Role::TRANSMITTERS
                    .iter()
                    .map(|&r| self.announce(Destination::To(r), price.beta))
                    .collect())
            }
            Mode::Iterative => {
                let k = &self.knowledge;
                // the interval is computed once, before the first round
                let (lo, hi) = price_bounds_from(
                    [
                        k.scalar(KnowledgeKey::LambdaMrt(Link::One))?,
                        k.scalar(KnowledgeKey::LambdaMrt(Link::Two))?,
                    ],
                    [
                        k.scalar(KnowledgeKey::ChannelGain { from: Link::One, to: Link::Two })?,
                        k.scalar(KnowledgeKey::ChannelGain { from: Link::Two, to: Link::One })?,
                    ],
                    k.scalar(KnowledgeKey::NoiseVariance)?,
                );
                self.lo = lo;
                self.hi = hi;
                self.beta = 0.5 * (lo + hi);
                if keep_bisecting(lo, hi, self.epsilon) {
                    Ok(vec![self.announce(Destination::Transmitters, self.beta)])
                } else {
                    Ok(self.terminate())
                }
            }
        }
    }

    pub fn handle(&mut self, msg: &Message) -> Result<Vec<Message>> {
        let (x_own, x_other) = match msg.kind {
            MessageKind::DemandReport { x_own, x_other } => (x_own, x_other),
            _ => return Err(Error::Protocol(format!("arbitrator cannot handle {:?}", msg.kind))),
        };
        if self.mode != Mode::Iterative || self.final_beta.is_some() {
            return Err(Error::Protocol("demand report outside a price-adjustment round".into()));
        }
        if msg.iteration != self.iteration {
            return Err(Error::Protocol(format!(
                "report for round {} during round {}",
                msg.iteration, self.iteration
            )));
        }
        let slot = match msg.from {
            Role::Transmitter(Link::One) => 0,
            Role::Transmitter(Link::Two) => 1,
            Role::Arbitrator => return Err(Error::Protocol("report from the arbitrator".into())),
        };
        if self.reports[slot].is_some() {
            return Err(Error::Protocol(format!("duplicate report from {}", msg.from)));
        }
        self.reports[slot] = Some((x_own, x_other));

        let (Some((x11, _)), Some((_, x12))) = (self.reports[0], self.reports[1]) else {
            return Ok(Vec::new());
        };
        let lambda1 = self.knowledge.scalar(KnowledgeKey::LambdaMrt(Link::One))?;
        let z1 = excess_good1(x11, x12, lambda1);
        self.trace.push(TraceRow {
            iteration: self.iteration,
            beta: self.beta,
            beta_lo: self.lo,
            beta_hi: self.hi,
            z1,
        });
        (self.lo, self.hi, self.beta) = bisection_update(self.lo, self.hi, self.beta, z1);
        self.iteration += 1;
        self.reports = [None, None];
        if keep_bisecting(self.lo, self.hi, self.epsilon) {
            Ok(vec![self.announce(Destination::Transmitters, self.beta)])
        } else {
            Ok(self.terminate())
        }
    }

    /// Excess demand for good 1 from the transmitters' final demands.
    pub fn excess_from(&self, demand1: (f64, f64), demand2: (f64, f64)) -> Result<f64> {
        let lambda1 = self.knowledge.scalar(KnowledgeKey::LambdaMrt(Link::One))?;
        Ok(excess_good1(demand1.0, demand2.1, lambda1))
    }
}

/// A link's transmitter, acting as a consumer that reports its demand.
#[derive(Debug)]
pub struct Transmitter {
    link: Link,
    knowledge: AgentKnowledge,
    mode: Mode,
    params: ConsumerParams,
    demand: Option<(f64, f64)>,
    terminated: bool,
}

impl Transmitter {
    pub fn new(knowledge: AgentKnowledge, mode: Mode) -> Result<Self> {
        let link = match knowledge.role() {
            Role::Transmitter(k) => k,
            Role::Arbitrator => return Err(Error::Protocol("arbitrator cannot act as transmitter".into())),
        };
        knowledge.validate(mode)?;
        let l = link.other();
        let hkk = knowledge.vector(KnowledgeKey::Channel { from: link, to: link })?;
        let hkl = knowledge.vector(KnowledgeKey::Channel { from: link, to: l })?;
        let (g, zfg) = projection_gains(hkk, hkl);
        let params = ConsumerParams {
            g,
            zfg,
            lambda_mrt: g / (g + zfg),
            nash_noise: knowledge.scalar(KnowledgeKey::NashNoise(link))?,
            cross_in: knowledge.scalar(KnowledgeKey::ChannelGain { from: l, to: link })?,
        };
        Ok(Transmitter {
            link,
            knowledge,
            mode,
            params,
            demand: None,
            terminated: false,
        })
    }

    pub fn role(&self) -> Role {
        Role::Transmitter(self.link)
    }

    pub fn knowledge(&self) -> &AgentKnowledge {
        &self.knowledge
    }

    pub fn params(&self) -> &ConsumerParams {
        &self.params
    }

    /// Demand `(own, other)` at the last price received.
    pub fn demand(&self) -> Option<(f64, f64)> {
        self.demand
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    pub fn handle(&mut self, msg: &Message) -> Result<Vec<Message>> {
        if self.terminated {
            return Err(Error::Protocol(format!("{} received a message after termination", self.role())));
        }
        match msg.kind {
            MessageKind::PriceAnnouncement { beta } => {
                let d = self.params.demand_at(relative_price(self.link, beta));
                self.demand = Some(d);
                Ok(match self.mode {
                    Mode::OneShot => Vec::new(),
                    Mode::Iterative => vec![Message {
                        iteration: msg.iteration,
                        from: self.role(),
                        to: Destination::To(Role::Arbitrator),
                        kind: MessageKind::DemandReport { x_own: d.0, x_other: d.1 },
                    }],
                })
            }
            MessageKind::Terminate { beta_final } => {
                self.demand = Some(self.params.demand_at(relative_price(self.link, beta_final)));
                self.terminated = true;
                Ok(Vec::new())
            }
            MessageKind::DemandReport { .. } => {
                Err(Error::Protocol(format!("{} cannot handle a demand report", self.role())))
            }
        }
    }
}
