use std::collections::HashMap;

use crate::error::ProtocolError;
use crate::model::{GameInstance, PeerId, PeerProfile};

use super::message::{Endpoint, Message, Network, Payload};

/// Replaces an honest demand reply: `(peer, price, honest) -> reported`.
pub type MisreportHook = dyn Fn(&PeerId, f64, f64) -> f64;

pub(crate) struct Downloader<'h> {
    profile: PeerProfile,
    seq: u64,
    granted: Option<f64>,
    streaming: bool,
    hook: Option<&'h MisreportHook>,
}

impl<'h> Downloader<'h> {
    fn new(profile: PeerProfile, hook: Option<&'h MisreportHook>) -> Self {
        Self {
            profile,
            seq: 0,
            granted: None,
            streaming: false,
            hook,
        }
    }

    fn send(&mut self, payload: Payload) -> Message {
        let msg = Message {
            from: Endpoint::Downloader(self.profile.id().clone()),
            to: Endpoint::Uploader,
            seq: self.seq,
            payload,
        };
        self.seq += 1;
        msg
    }

    fn request(&mut self) -> Message {
        self.send(Payload::Request {
            credits: self.profile.credits(),
            capacity: self.profile.capacity(),
        })
    }

    fn handle(&mut self, msg: &Message) -> Option<Message> {
        match msg.payload {
            Payload::PriceBroadcast { price } => {
                let honest = self.profile.demand(price);
                let bandwidth = match self.hook {
                    Some(hook) => hook(self.profile.id(), price, honest),
                    None => honest,
                };
                Some(self.send(Payload::DemandReply { bandwidth }))
            }
            Payload::AllocationGrant { bandwidth } => {
                self.granted = Some(bandwidth);
                None
            }
            Payload::StreamStart => {
                self.streaming = true;
                None
            }
            Payload::Request { .. } | Payload::DemandReply { .. } => None,
        }
    }
}

pub(crate) struct Uploader {
    capacity: f64,
    roster: Vec<PeerId>,
    index: HashMap<PeerId, usize>,
    requests: Vec<Option<PeerProfile>>,
    replies: Vec<Option<f64>>,
    seq: u64,
}

impl Uploader {
    fn new(capacity: f64, roster: Vec<PeerId>) -> Self {
        let index = roster.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        let n = roster.len();
        Self {
            capacity,
            roster,
            index,
            requests: vec![None; n],
            replies: vec![None; n],
            seq: 0,
        }
    }

    fn send(&mut self, to: &PeerId, payload: Payload) -> Message {
        let msg = Message {
            from: Endpoint::Uploader,
            to: Endpoint::Downloader(to.clone()),
            seq: self.seq,
            payload,
        };
        self.seq += 1;
        msg
    }

    fn receive(&mut self, msg: Message) -> Result<(), ProtocolError> {
        let Endpoint::Downloader(id) = &msg.from else {
            return Ok(());
        };
        let Some(&i) = self.index.get(id) else {
            return Err(ProtocolError::UnknownPeer(id.clone()));
        };
        match msg.payload {
            Payload::Request { credits, capacity } => {
                self.requests[i] = Some(PeerProfile::new(id.clone(), credits, capacity)?);
            }
            Payload::DemandReply { bandwidth } => self.replies[i] = Some(bandwidth),
            _ => {}
        }
        Ok(())
    }

    /// The game as reconstructed from the requests, in roster order.
    fn game(&self) -> Result<GameInstance, ProtocolError> {
        let peers = self
            .requests
            .iter()
            .zip(&self.roster)
            .map(|(r, id)| {
                r.clone().ok_or_else(|| ProtocolError::MissingMessage {
                    peer: id.clone(),
                    what: "request",
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GameInstance::new(self.capacity, peers)?)
    }

    fn broadcast(&mut self, payload: Payload) -> Vec<Message> {
        let roster = self.roster.clone();
        roster.iter().map(|id| self.send(id, payload)).collect()
    }

    /// All replies of the current round in roster order; each must equal the
    /// best response implied by that peer's request.
    fn take_replies(&mut self, price: f64) -> Result<Vec<f64>, ProtocolError> {
        let mut out = Vec::with_capacity(self.roster.len());
        for (i, id) in self.roster.iter().enumerate() {
            let reported = self.replies[i].take().ok_or_else(|| ProtocolError::MissingMessage {
                peer: id.clone(),
                what: "demand reply",
            })?;
            let expected = self.requests[i].as_ref().map_or(f64::NAN, |p| p.demand(price));
            if reported.to_bits() != expected.to_bits() {
                return Err(ProtocolError::InconsistentReply {
                    peer: id.clone(),
                    price,
                    expected,
                    reported,
                });
            }
            out.push(reported);
        }
        Ok(out)
    }
}

/// One uploader, its downloaders and the transport between them.
pub(crate) struct Session<'h> {
    net: Network,
    uploader: Uploader,
    downloaders: HashMap<PeerId, Downloader<'h>>,
    roster: Vec<PeerId>,
}

impl<'h> Session<'h> {
    pub(crate) fn new(game: &GameInstance, seed: u64, hook: Option<&'h MisreportHook>) -> Self {
        let roster: Vec<PeerId> = game.peers().iter().map(|p| p.id().clone()).collect();
        let downloaders = game
            .peers()
            .iter()
            .map(|p| (p.id().clone(), Downloader::new(p.clone(), hook)))
            .collect();
        Self {
            net: Network::new(seed),
            uploader: Uploader::new(game.uploader_capacity(), roster.clone()),
            downloaders,
            roster,
        }
    }

    pub(crate) fn roster(&self) -> &[PeerId] {
        &self.roster
    }

    pub(crate) fn messages(&self) -> usize {
        self.net.delivered()
    }

    /// Delivers everything queued; replies go out as the next batch. Returns
    /// once the network is quiet.
    fn pump(&mut self) -> Result<(), ProtocolError> {
        loop {
            let mut replies = Vec::new();
            while let Some(msg) = self.net.recv() {
                match &msg.to {
                    Endpoint::Uploader => self.uploader.receive(msg)?,
                    Endpoint::Downloader(id) => {
                        let d = self
                            .downloaders
                            .get_mut(id)
                            .ok_or_else(|| ProtocolError::UnknownPeer(id.clone()))?;
                        replies.extend(d.handle(&msg));
                    }
                }
            }
            if replies.is_empty() {
                return Ok(());
            }
            self.net.send_batch(replies);
        }
    }

    /// Every downloader sends its request; the uploader rebuilds the game.
    pub(crate) fn collect_requests(&mut self) -> Result<GameInstance, ProtocolError> {
        let roster = self.roster.clone();
        let batch = roster
            .iter()
            .map(|id| self.downloaders.get_mut(id).expect("roster peer").request())
            .collect();
        self.net.send_batch(batch);
        self.pump()?;
        self.uploader.game()
    }

    /// Broadcasts `price` and waits for every reply (the round barrier).
    pub(crate) fn price_round(&mut self, price: f64) -> Result<Vec<f64>, ProtocolError> {
        let batch = self.uploader.broadcast(Payload::PriceBroadcast { price });
        self.net.send_batch(batch);
        self.pump()?;
        self.uploader.take_replies(price)
    }

    /// Grants the final allocation and starts streaming to the winners.
    pub(crate) fn grant(&mut self, allocation: &[f64]) -> Result<(), ProtocolError> {
        let roster = self.roster.clone();
        let mut batch = Vec::new();
        for (id, &x) in roster.iter().zip(allocation) {
            batch.push(self.uploader.send(id, Payload::AllocationGrant { bandwidth: x }));
            if x > 0.0 {
                batch.push(self.uploader.send(id, Payload::StreamStart));
            }
        }
        self.net.send_batch(batch);
        self.pump()
    }

    #[cfg(test)]
    pub(crate) fn streaming(&self) -> Vec<(PeerId, Option<f64>, bool)> {
        self.roster
            .iter()
            .map(|id| {
                let d = &self.downloaders[id];
                (id.clone(), d.granted, d.streaming)
            })
            .collect()
    }
}
