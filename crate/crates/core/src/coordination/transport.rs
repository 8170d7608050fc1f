use std::collections::VecDeque;

use super::knowledge::Role;
use super::message::Message;
use crate::Result;

/// Delivers messages between agents and keeps the log of everything sent.
pub trait Transport {
    fn send(&mut self, msg: Message) -> Result<()>;

    /// Next message addressed to `role`, if any.
    fn recv(&mut self, role: Role) -> Result<Option<Message>>;

    fn log(&self) -> &[Message];
}

/// Synchronous in-process queue with one FIFO per agent.
#[derive(Debug, Default)]
pub struct InProcessQueue {
    inboxes: Vec<(Role, VecDeque<Message>)>,
    log: Vec<Message>,
}

impl InProcessQueue {
    pub fn new() -> Self {
        Self::default()
    }

    fn inbox(&mut self, role: Role) -> &mut VecDeque<Message> {
        let idx = match self.inboxes.iter().position(|(r, _)| *r == role) {
            Some(i) => i,
            None => {
                self.inboxes.push((role, VecDeque::new()));
                self.inboxes.len() - 1
            }
        };
        &mut self.inboxes[idx].1
    }
}

impl Transport for InProcessQueue {
    fn send(&mut self, msg: Message) -> Result<()> {
        for role in [Role::Arbitrator, Role::TRANSMITTERS[0], Role::TRANSMITTERS[1]] {
            if msg.to.includes(role) {
                self.inbox(role).push_back(msg);
            }
        }
        self.log.push(msg);
        Ok(())
    }

    fn recv(&mut self, role: Role) -> Result<Option<Message>> {
        Ok(self.inbox(role).pop_front())
    }

    fn log(&self) -> &[Message] {
        &self.log
    }
}
