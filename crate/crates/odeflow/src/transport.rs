//! Point-to-point message passing between the workers of one process.
//!
//! The halo exchange only needs "send this buffer to rank r" and "receive
//! the buffer rank r sent me with this tag", so that is all a transport has
//! to provide. [`ChannelTransport`] does it with one mpsc inbox per rank.

use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::Mutex;

use thiserror::Error;

/// Which ghost region of the receiver a face is meant for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tag {
    pub component: usize,
    pub side: Side,
}

#[derive(Debug, Clone)]
pub struct Message {
    pub from: usize,
    pub tag: Tag,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("rank {0} is outside the communicator")]
    NoSuchRank(usize),
    #[error("channel to rank {0} closed")]
    Closed(usize),
}

pub trait Transport: Send + Sync {
    fn size(&self) -> usize;

    fn send(&self, to: usize, msg: Message) -> Result<(), TransportError>;

    /// Blocks until the message from `from` carrying `tag` arrives at `rank`.
    /// Messages that arrive out of order are kept for later calls.
    fn recv(&self, rank: usize, from: usize, tag: Tag) -> Result<Message, TransportError>;
}

struct Inbox {
    rx: Receiver<Message>,
    pending: Vec<Message>,
}

pub struct ChannelTransport {
    senders: Vec<Sender<Message>>,
    inboxes: Vec<Mutex<Inbox>>,
}

impl std::fmt::Debug for ChannelTransport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChannelTransport").field("size", &self.senders.len()).finish()
    }
}

impl ChannelTransport {
    pub fn new(size: usize) -> Self {
        let (senders, inboxes) = (0..size)
            .map(|_| {
                let (tx, rx) = channel();
                (tx, Mutex::new(Inbox { rx, pending: Vec::new() }))
            })
            .unzip();
        Self { senders, inboxes }
    }
}

impl Transport for ChannelTransport {
    fn size(&self) -> usize {
        self.senders.len()
    }

    fn send(&self, to: usize, msg: Message) -> Result<(), TransportError> {
        let tx = self.senders.get(to).ok_or(TransportError::NoSuchRank(to))?;
        tx.send(msg).map_err(|_| TransportError::Closed(to))
    }

    fn recv(&self, rank: usize, from: usize, tag: Tag) -> Result<Message, TransportError> {
        let inbox = self.inboxes.get(rank).ok_or(TransportError::NoSuchRank(rank))?;
        let mut inbox = inbox.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(pos) = inbox.pending.iter().position(|m| m.from == from && m.tag == tag) {
            return Ok(inbox.pending.swap_remove(pos));
        }
        loop {
            let msg = inbox.rx.recv().map_err(|_| TransportError::Closed(rank))?;
            if msg.from == from && msg.tag == tag {
                return Ok(msg);
            }
            inbox.pending.push(msg);
        }
    }
}
