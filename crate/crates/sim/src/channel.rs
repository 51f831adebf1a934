//! Radio channel abstraction: a fixed-capacity link whose per-packet loss
//! probability grows with a power of the inter-vehicle distance and reaches
//! certainty at the edge of radio range.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Signal propagation speed, m/s.
pub const PROPAGATION_SPEED: f64 = 3.0e8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("capacity must be positive, got {0}")]
    Capacity(f64),
    #[error("radio_range must be positive, got {0}")]
    Range(f64),
    #[error("base_loss must be in [0, 1), got {0}")]
    BaseLoss(f64),
    #[error("loss_exponent must be positive, got {0}")]
    Exponent(f64),
    #[error("processing_delay must be non-negative, got {0}")]
    Delay(f64),
}

/// Defaults: 5.5 Mbps, fourth-power loss law reaching certainty at 1200 m
/// with a 1e-5 floor, and 2 ms of per-packet processing in each direction.
/// Under the default mobility profiles this gives roughly one lost packet
/// per four 10 MB transfers and about 617 KB/s for a lossless 1 MB transfer
/// with 25,600-byte chunks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    /// bits/s
    pub capacity: f64,
    /// meters
    pub radio_range: f64,
    pub base_loss: f64,
    pub loss_exponent: f64,
    /// seconds, per packet per direction
    pub processing_delay: f64,
    pub rng_seed: u64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            capacity: 5.5e6,
            radio_range: 1200.0,
            base_loss: 1e-5,
            loss_exponent: 4.0,
            processing_delay: 0.002,
            rng_seed: 0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(self.capacity > 0.0 && self.capacity.is_finite()) {
            return Err(ChannelError::Capacity(self.capacity));
        }
        if !(self.radio_range > 0.0 && self.radio_range.is_finite()) {
            return Err(ChannelError::Range(self.radio_range));
        }
        if !(0.0..1.0).contains(&self.base_loss) {
            return Err(ChannelError::BaseLoss(self.base_loss));
        }
        if !(self.loss_exponent > 0.0 && self.loss_exponent.is_finite()) {
            return Err(ChannelError::Exponent(self.loss_exponent));
        }
        if !(self.processing_delay >= 0.0 && self.processing_delay.is_finite()) {
            return Err(ChannelError::Delay(self.processing_delay));
        }
        Ok(())
    }

    /// Time to clock `bytes` onto the medium.
    pub fn serialization_delay(&self, bytes: usize) -> f64 {
        bytes as f64 * 8.0 / self.capacity
    }

    /// Bytes per second the link can carry at most.
    pub fn byte_rate(&self) -> f64 {
        self.capacity / 8.0
    }
}

/// `p(d) = base + (1 − base)·(d / range)^exponent`, and 1 beyond range.
pub fn loss_probability(d: f64, params: &ChannelParams) -> f64 {
    if d >= params.radio_range {
        return 1.0;
    }
    let d = d.max(0.0);
    let p = params.base_loss
        + (1.0 - params.base_loss) * (d / params.radio_range).powf(params.loss_exponent);
    p.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transmission {
    Delivered { arrival: f64 },
    Dropped,
}

/// Sends one datagram of `packet_bytes` across distance `d` starting at `now`.
pub fn transmit<R: Rng + ?Sized>(
    packet_bytes: usize,
    d: f64,
    params: &ChannelParams,
    rng: &mut R,
    now: f64,
) -> Transmission {
    let p = loss_probability(d, params);
    // always draw so the stream stays aligned regardless of the outcome
    let u: f64 = rng.random();
    if p >= 1.0 || u < p {
        return Transmission::Dropped;
    }
    Transmission::Delivered {
        arrival: now
            + params.serialization_delay(packet_bytes)
            + d / PROPAGATION_SPEED
            + params.processing_delay,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec_params() -> ChannelParams {
        ChannelParams {
            capacity: 5.5e6,
            radio_range: 250.0,
            base_loss: 0.001,
            loss_exponent: 4.0,
            processing_delay: 0.0005,
            rng_seed: 0,
        }
    }

    #[test]
    fn loss_law_boundaries() {
        let p = spec_params();
        assert_eq!(loss_probability(250.0, &p), 1.0);
        assert_eq!(loss_probability(1e6, &p), 1.0);
        assert_eq!(loss_probability(0.0, &p), 0.001);
        // independently: 0.001 + 0.999 * 0.308^4
        let expected = 0.001 + 0.999 * 0.308f64 * 0.308 * 0.308 * 0.308;
        assert!((loss_probability(77.0, &p) - expected).abs() < 1e-12);
        assert!((loss_probability(77.0, &p) - 0.009990179317504).abs() < 1e-12);
    }

    #[test]
    fn serialization_of_a_drp() {
        let p = spec_params();
        assert!((p.serialization_delay(25_617) - 0.037261090909).abs() < 1e-9);
    }

    #[test]
    fn lossless_arrival_is_pure_serialization() {
        let p = ChannelParams {
            base_loss: 0.0,
            processing_delay: 0.0,
            ..spec_params()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            transmit(1_000, 0.0, &p, &mut rng, 2.0),
            Transmission::Delivered {
                arrival: 2.0 + 8_000.0 / 5.5e6
            }
        );
    }

    #[test]
    fn out_of_range_always_drops() {
        let p = spec_params();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert_eq!(
                transmit(100, 300.0, &p, &mut rng, 0.0),
                Transmission::Dropped
            );
        }
    }

    #[test]
    fn validation() {
        assert!(spec_params().validate().is_ok());
        assert!(ChannelParams {
            base_loss: 1.0,
            ..spec_params()
        }
        .validate()
        .is_err());
        assert!(ChannelParams {
            capacity: 0.0,
            ..spec_params()
        }
        .validate()
        .is_err());
        assert!(ChannelParams {
            loss_exponent: 0.0,
            ..spec_params()
        }
        .validate()
        .is_err());
        assert!(ChannelParams {
            radio_range: -1.0,
            ..spec_params()
        }
        .validate()
        .is_err());
    }

    proptest::proptest! {
        #[test]
        fn loss_is_monotone_in_distance(a in 0.0f64..400.0, b in 0.0f64..400.0,
                                        base in 0.0f64..0.99, exp in 0.5f64..8.0) {
            let p = ChannelParams { base_loss: base, loss_exponent: exp, ..spec_params() };
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (pl, ph) = (loss_probability(lo, &p), loss_probability(hi, &p));
            proptest::prop_assert!(pl <= ph);
            proptest::prop_assert!((0.0..=1.0).contains(&pl) && (0.0..=1.0).contains(&ph));
        }
    }
}
