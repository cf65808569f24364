use alloc::format;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::rng::stream_rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Delivery<T> {
    Delivered(T),
    Dropped,
}

impl<T> Delivery<T> {
    pub fn into_option(self) -> Option<T> {
        match self {
            Delivery::Delivered(t) => Some(t),
            Delivery::Dropped => None,
        }
    }
}

/// Lossy uplink: each message is dropped independently with `loss_prob`.
#[derive(Debug, Clone)]
pub struct Transport {
    loss_prob: f64,
    rng: ChaCha8Rng,
}

impl Transport {
    pub fn new(loss_prob: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&loss_prob) {
            return Err(Error::Invalid(format!("loss probability {loss_prob} is outside [0, 1)")));
        }
        Ok(Self { loss_prob, rng: stream_rng(seed, 0) })
    }

    pub fn loss_prob(&self) -> f64 {
        self.loss_prob
    }

    pub fn transmit<T>(&mut self, payload: T) -> Delivery<T> {
        if self.loss_prob > 0.0 && self.rng.random_bool(self.loss_prob) {
            Delivery::Dropped
        } else {
            Delivery::Delivered(payload)
        }
    }
}

/// One-shot transmission under its own seed.
pub fn simulate_transport<T>(payload: T, loss_prob: f64, seed: u64) -> Result<Delivery<T>> {
    Ok(Transport::new(loss_prob, seed)?.transmit(payload))
}
