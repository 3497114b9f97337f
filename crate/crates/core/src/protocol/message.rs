use std::collections::{HashMap, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::PeerId;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Endpoint {
    Uploader,
    Downloader(PeerId),
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uploader => f.write_str("uploader"),
            Self::Downloader(id) => write!(f, "{id}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payload {
    /// A downloader announces its credits and download capacity.
    Request { credits: f64, capacity: f64 },
    PriceBroadcast { price: f64 },
    DemandReply { bandwidth: f64 },
    AllocationGrant { bandwidth: f64 },
    StreamStart,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub from: Endpoint,
    pub to: Endpoint,
    /// Per-sender sequence number, starting at 0.
    pub seq: u64,
    pub payload: Payload,
}

/// In-process transport. Each batch of messages is shuffled with a seeded
/// generator before delivery, so receivers see an arbitrary but
/// reproducible interleaving.
#[derive(Debug)]
pub(crate) struct Network {
    queue: VecDeque<Message>,
    rng: ChaCha8Rng,
    last_seq: HashMap<Endpoint, u64>,
    delivered: usize,
}

impl Network {
    pub(crate) fn new(seed: u64) -> Self {
        Self {
            queue: VecDeque::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            last_seq: HashMap::new(),
            delivered: 0,
        }
    }

    pub(crate) fn send_batch(&mut self, mut batch: Vec<Message>) {
        for msg in &batch {
            let prev = self.last_seq.insert(msg.from.clone(), msg.seq);
            debug_assert!(
                prev.is_none_or(|p| p < msg.seq),
                "sequence numbers from {} must increase",
                msg.from
            );
            debug_assert!(
                prev.is_some()
                    || matches!(msg.from, Endpoint::Uploader)
                    || matches!(msg.payload, Payload::Request { .. }),
                "first message from {} must be a request",
                msg.from
            );
        }
        batch.shuffle(&mut self.rng);
        self.queue.extend(batch);
    }

    pub(crate) fn recv(&mut self) -> Option<Message> {
        let msg = self.queue.pop_front();
        self.delivered += msg.is_some() as usize;
        msg
    }

    pub(crate) fn delivered(&self) -> usize {
        self.delivered
    }
}
