use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::phy::{derive_gains, ChannelRealization, Link};
use crate::{Error, Result};

/// Which protocol the agents run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// The arbitrator computes the Walrasian price from full channel knowledge.
    OneShot,
    /// Distributed price adjustment driven by demand reports.
    Iterative,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::OneShot => "one_shot",
            Mode::Iterative => "iterative",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Arbitrator,
    Transmitter(Link),
}

impl Role {
    pub const TRANSMITTERS: [Role; 2] = [Role::Transmitter(Link::One), Role::Transmitter(Link::Two)];

    pub fn id(&self) -> &'static str {
        match self {
            Role::Arbitrator => "arbitrator",
            Role::Transmitter(Link::One) => "tx1",
            Role::Transmitter(Link::Two) => "tx2",
        }
    }

    pub fn from_id(id: &str) -> Option<Role> {
        match id {
            "arbitrator" => Some(Role::Arbitrator),
            "tx1" => Some(Role::Transmitter(Link::One)),
            "tx2" => Some(Role::Transmitter(Link::Two)),
            _ => None,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// One item of channel-state information an agent may hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KnowledgeKey {
    /// The channel vector from transmitter `from` to receiver `to`.
    Channel { from: Link, to: Link },
    /// `||h_{from,to}||^2`.
    ChannelGain { from: Link, to: Link },
    /// Noise plus interference at receiver `k` in the Nash equilibrium.
    NashNoise(Link),
    LambdaMrt(Link),
    NoiseVariance,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KnowledgeValue {
    Vector(Vec<Complex64>),
    Scalar(f64),
}

/// The information set of one agent. Every read goes through [`AgentKnowledge::get`],
/// which records the key in an audit log, so tests can prove what an agent looked at.
#[derive(Debug)]
pub struct AgentKnowledge {
    role: Role,
    values: BTreeMap<KnowledgeKey, KnowledgeValue>,
    audit: RefCell<Vec<KnowledgeKey>>,
}

/// The keys `role` holds in `mode`.
pub fn expected_keys(role: Role, mode: Mode) -> Vec<KnowledgeKey> {
    use KnowledgeKey::*;
    match (role, mode) {
        (Role::Transmitter(k), _) => {
            let l = k.other();
            vec![
                Channel { from: k, to: k },
                Channel { from: k, to: l },
                NashNoise(k),
                ChannelGain { from: l, to: k },
            ]
        }
        (Role::Arbitrator, Mode::OneShot) => {
            let mut keys: Vec<_> = Link::BOTH
                .iter()
                .flat_map(|&from| Link::BOTH.iter().map(move |&to| Channel { from, to }))
                .collect();
            keys.push(NoiseVariance);
            keys
        }
        (Role::Arbitrator, Mode::Iterative) => vec![
            ChannelGain { from: Link::Two, to: Link::One },
            ChannelGain { from: Link::One, to: Link::Two },
            LambdaMrt(Link::One),
            LambdaMrt(Link::Two),
            NoiseVariance,
        ],
    }
}

impl AgentKnowledge {
    pub fn new(role: Role, values: BTreeMap<KnowledgeKey, KnowledgeValue>) -> Self {
        AgentKnowledge {
            role,
            values,
            audit: RefCell::new(Vec::new()),
        }
    }

    /// The information set of `role` in `mode`, filled from the ground-truth channel.
    pub fn for_role(role: Role, mode: Mode, ch: &ChannelRealization) -> Result<Self> {
        let gains = derive_gains(ch)?;
        let values = expected_keys(role, mode)
            .into_iter()
            .map(|key| {
                let value = match key {
                    KnowledgeKey::Channel { from, to } => KnowledgeValue::Vector(ch.h(from, to).to_vec()),
                    // ||h_lk||^2 is the cross gain of link l
                    KnowledgeKey::ChannelGain { from, .. } => KnowledgeValue::Scalar(gains.cross(from)),
                    KnowledgeKey::NashNoise(k) => KnowledgeValue::Scalar(gains.nash_noise_interference(k)),
                    KnowledgeKey::LambdaMrt(k) => KnowledgeValue::Scalar(gains.lambda_mrt(k)),
                    KnowledgeKey::NoiseVariance => KnowledgeValue::Scalar(ch.sigma2()),
                };
                (key, value)
            })
            .collect();
        Ok(Self::new(role, values))
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn keys(&self) -> impl Iterator<Item = &KnowledgeKey> {
        self.values.keys()
    }

    pub fn get(&self, key: KnowledgeKey) -> Result<&KnowledgeValue> {
        self.audit.borrow_mut().push(key);
        self.values
            .get(&key)
            .ok_or_else(|| Error::Protocol(format!("{} has no access to {key:?}", self.role)))
    }

    pub fn scalar(&self, key: KnowledgeKey) -> Result<f64> {
        match self.get(key)? {
            KnowledgeValue::Scalar(x) => Ok(*x),
            KnowledgeValue::Vector(_) => Err(Error::Protocol(format!("{key:?} is not a scalar"))),
        }
    }

    pub fn vector(&self, key: KnowledgeKey) -> Result<&[Complex64]> {
        match self.get(key)? {
            KnowledgeValue::Vector(v) => Ok(v),
            KnowledgeValue::Scalar(_) => Err(Error::Protocol(format!("{key:?} is not a vector"))),
        }
    }

    /// Every key read so far, in order, including denied reads.
    pub fn audit_log(&self) -> Vec<KnowledgeKey> {
        self.audit.borrow().clone()
    }

    /// Fails unless the held keys are exactly the information set of the role in `mode`.
    pub fn validate(&self, mode: Mode) -> Result<()> {
        let mut want = expected_keys(self.role, mode);
        want.sort();
        let have: Vec<KnowledgeKey> = self.values.keys().copied().collect();
        if have != want {
            return Err(Error::Protocol(format!(
                "{} in {mode} mode holds {have:?}, expected {want:?}",
                self.role
            )));
        }
        Ok(())
    }
}
