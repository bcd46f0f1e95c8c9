//! In-process broadcast bus for control-deficiency messages.

use std::collections::VecDeque;

use nalgebra::DVector;

#[derive(Debug, Clone, PartialEq)]
pub struct BroadcastMessage {
    pub sender: usize,
    /// `K_fᵀ ΔF` of the sender.
    pub payload: DVector<f64>,
    /// Tick at which the message was posted.
    pub tick: usize,
}

/// All-to-all delivery after a fixed number of ticks.
#[derive(Debug, Clone, Default)]
pub struct MessageBus {
    delay: usize,
    queue: VecDeque<BroadcastMessage>,
    posted: usize,
}

impl MessageBus {
    pub fn new(delay: usize) -> Self {
        Self {
            delay,
            queue: VecDeque::new(),
            posted: 0,
        }
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn post(&mut self, msg: BroadcastMessage) {
        debug_assert!(msg.payload.iter().all(|x| x.is_finite()));
        self.posted += 1;
        self.queue.push_back(msg);
    }

    /// Total messages posted so far.
    pub fn posted(&self) -> usize {
        self.posted
    }

    /// Removes and returns every message due at `tick`.
    pub fn deliver(&mut self, tick: usize) -> Vec<BroadcastMessage> {
        let mut out = Vec::new();
        while let Some(m) = self.queue.front() {
            if m.tick + self.delay > tick {
                break;
            }
            out.push(self.queue.pop_front().expect("front exists"));
        }
        out
    }
}

/// Fans one round of messages out to `n_agents` inboxes. Every agent,
/// the sender included, receives every message.
pub fn broadcast_round(messages: &[BroadcastMessage], n_agents: usize) -> Vec<Vec<BroadcastMessage>> {
    vec![messages.to_vec(); n_agents]
}

/// Sum of payloads in an inbox, or `None` if it is empty.
pub fn payload_sum(inbox: &[BroadcastMessage]) -> Option<DVector<f64>> {
    let mut it = inbox.iter();
    let first = it.next()?.payload.clone();
    Some(it.fold(first, |acc, m| acc + &m.payload))
}
