//! Runs a [`Node`] over UDP, one wire message per datagram.
//!
//! Single-threaded: the loop waits on the socket until the next gossip tick
//! or the next paced send, whichever is sooner, and hands every datagram to
//! the node in arrival order.

use std::collections::VecDeque;
use std::io;
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use log::{debug, warn};

use crate::gossip::Node;
use crate::log_file::{LogError, LogWriter};
use crate::wire::{decode_message, encode_datagram, Message, MAX_DATAGRAM};

/// Counters kept by a [`UdpRunner`].
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct TransportStats {
    pub datagrams_in: u64,
    pub datagrams_out: u64,
    pub decode_errors: u64,
    pub send_errors: u64,
}

pub struct UdpRunner {
    socket: UdpSocket,
    node: Node<SocketAddr>,
    log: Option<LogWriter>,
    epoch: Instant,
    next_tick: Instant,
    /// Minimum spacing between outgoing datagrams.
    send_gap: Duration,
    next_send: Instant,
    outbox: VecDeque<(SocketAddr, Vec<u8>)>,
    stats: TransportStats,
}

impl std::fmt::Debug for UdpRunner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UdpRunner")
            .field("local", &self.socket.local_addr().ok())
            .field("stats", &self.stats)
            .finish_non_exhaustive()
    }
}

impl UdpRunner {
    pub fn bind(addr: impl ToSocketAddrs, node: Node<SocketAddr>) -> io::Result<Self> {
        let socket = UdpSocket::bind(addr)?;
        let now = Instant::now();
        Ok(Self {
            socket,
            node,
            log: None,
            epoch: now,
            next_tick: now,
            send_gap: Duration::from_micros(200),
            next_send: now,
            outbox: VecDeque::new(),
            stats: TransportStats::default(),
        })
    }

    /// Append every newly stored set to `log`.
    pub fn with_log(mut self, log: LogWriter) -> Self {
        self.log = Some(log);
        self
    }

    pub fn with_send_gap(mut self, gap: Duration) -> Self {
        self.send_gap = gap;
        self
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.socket.local_addr()
    }

    pub fn node(&self) -> &Node<SocketAddr> {
        &self.node
    }

    pub fn node_mut(&mut self) -> &mut Node<SocketAddr> {
        &mut self.node
    }

    pub fn into_node(self) -> Node<SocketAddr> {
        self.node
    }

    pub fn stats(&self) -> TransportStats {
        self.stats
    }

    /// Time since the runner started; the node's clock.
    pub fn clock(&self) -> Duration {
        self.epoch.elapsed()
    }

    fn enqueue(&mut self, to: SocketAddr, msg: &Message) {
        match encode_datagram(msg) {
            Ok(bytes) => self.outbox.push_back((to, bytes)),
            Err(e) => warn!("dropping {} for {to}: {e}", msg.kind()),
        }
    }

    fn flush_due(&mut self) {
        while let Some((to, bytes)) = self.outbox.front() {
            let now = Instant::now();
            if now < self.next_send {
                return;
            }
            match self.socket.send_to(bytes, to) {
                Ok(_) => self.stats.datagrams_out += 1,
                Err(e) => {
                    self.stats.send_errors += 1;
                    debug!("send to {to} failed: {e}");
                }
            }
            self.outbox.pop_front();
            self.next_send = now + self.send_gap;
        }
    }

    fn tick(&mut self) {
        let now = self.clock();
        for (to, ad) in self.node.gossip_tick(now) {
            self.enqueue(to, &Message::Advertisement(ad));
        }
    }

    fn deliver(&mut self, from: SocketAddr, bytes: &[u8]) -> Result<(), LogError> {
        self.stats.datagrams_in += 1;
        let msg = match decode_message(bytes) {
            Ok(m) => m,
            Err(e) => {
                self.stats.decode_errors += 1;
                debug!("undecodable datagram from {from}: {e}");
                return Ok(());
            }
        };
        let payload = match &msg {
            Message::Payload(set) => Some(set.clone()),
            _ => None,
        };
        let before = self.node.arl().set_count();
        let replies = self.node.handle_message(from, msg, self.clock());
        if let (Some(set), Some(log)) = (payload, self.log.as_mut()) {
            if self.node.arl().set_count() > before {
                log.append(&set)?;
            }
        }
        for (to, reply) in replies {
            self.enqueue(to, &reply);
        }
        Ok(())
    }

    /// Process traffic until `deadline` or until `stop` is set, calling
    /// `status` about every `status_every`.
    pub fn run(
        &mut self,
        deadline: Option<Instant>,
        stop: &Arc<AtomicBool>,
        status_every: Duration,
        status: &mut dyn FnMut(&Self),
    ) -> Result<(), LogError> {
        let mut buf = vec![0u8; MAX_DATAGRAM + 1];
        let mut next_status = Instant::now() + status_every;
        while !stop.load(Ordering::Relaxed) {
            let now = Instant::now();
            if deadline.is_some_and(|d| now >= d) {
                break;
            }
            if now >= self.next_tick {
                self.tick();
                self.next_tick = now + self.node.config().gossip_interval;
            }
            if now >= next_status {
                status(self);
                next_status = now + status_every;
            }
            self.flush_due();

            let mut wake = self.next_tick.min(next_status);
            if !self.outbox.is_empty() {
                wake = wake.min(self.next_send);
            }
            if let Some(d) = deadline {
                wake = wake.min(d);
            }
            let wait = wake
                .saturating_duration_since(Instant::now())
                .clamp(Duration::from_micros(100), Duration::from_millis(50));
            self.socket.set_read_timeout(Some(wait))?;
            match self.socket.recv_from(&mut buf) {
                Ok((len, from)) => {
                    let len = len.min(MAX_DATAGRAM + 1);
                    self.deliver(from, &buf[..len])?;
                }
                Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {}
                // ICMP port unreachable from a peer that is down.
                Err(e) if e.kind() == io::ErrorKind::ConnectionRefused => {}
                Err(e) => return Err(e.into()),
            }
        }
        if let Some(log) = self.log.as_mut() {
            log.sync()?;
        }
        Ok(())
    }
}
