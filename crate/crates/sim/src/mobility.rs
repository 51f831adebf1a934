//! Inter-vehicle distance process.
//!
//! The distance between the two cars follows a mean-reverting random walk
//! whose noise grows with vehicle speed, reflected at the bounds of the
//! scenario. Faster traffic wanders further from the mean and spends more
//! time in the lossy far zone.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MobilityError {
    #[error("speed range must satisfy 0 < min <= max, got [{0}, {1}]")]
    Speed(f64, f64),
    #[error("distance bounds must satisfy min < mean < max, got [{0}, {2}] around {1}")]
    Distance(f64, f64, f64),
    #[error("reversion rate and noise coefficient must be finite and non-negative")]
    Dynamics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobilityProfile {
    /// km/h
    pub speed_min: f64,
    /// km/h
    pub speed_max: f64,
    /// meters
    pub mean_distance: f64,
    /// `[d_min, d_max]` in meters
    pub distance_bounds: [f64; 2],
    /// 1/s
    pub reversion_rate: f64,
    /// meters per √s per km/h
    pub noise_coefficient: f64,
}

pub const DEFAULT_MEAN_DISTANCE: f64 = 77.0;
pub const DEFAULT_BOUNDS: [f64; 2] = [5.0, 350.0];
pub const DEFAULT_REVERSION_RATE: f64 = 0.05;
pub const DEFAULT_NOISE_COEFFICIENT: f64 = 0.6;

impl MobilityProfile {
    pub fn with_speeds(speed_min: f64, speed_max: f64) -> Self {
        Self {
            speed_min,
            speed_max,
            mean_distance: DEFAULT_MEAN_DISTANCE,
            distance_bounds: DEFAULT_BOUNDS,
            reversion_rate: DEFAULT_REVERSION_RATE,
            noise_coefficient: DEFAULT_NOISE_COEFFICIENT,
        }
    }

    /// Urban low speed: 20-30 km/h.
    pub fn urban_low() -> Self {
        Self::with_speeds(20.0, 30.0)
    }

    /// Urban high speed: 40-50 km/h.
    pub fn urban_high() -> Self {
        Self::with_speeds(40.0, 50.0)
    }

    pub fn validate(&self) -> Result<(), MobilityError> {
        if !(self.speed_min > 0.0 && self.speed_min <= self.speed_max && self.speed_max.is_finite())
        {
            return Err(MobilityError::Speed(self.speed_min, self.speed_max));
        }
        let [lo, hi] = self.distance_bounds;
        if !(lo < self.mean_distance && self.mean_distance < hi && lo.is_finite() && hi.is_finite())
        {
            return Err(MobilityError::Distance(lo, self.mean_distance, hi));
        }
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !(ok(self.reversion_rate) && ok(self.noise_coefficient)) {
            return Err(MobilityError::Dynamics);
        }
        Ok(())
    }

    /// One step of the distance process with an explicit standard-normal
    /// draw `xi`.
    pub fn advance_distance(&self, d: f64, speed: f64, dt: f64, xi: f64) -> f64 {
        debug_assert!(dt > 0.0);
        let drift = self.reversion_rate * (self.mean_distance - d) * dt;
        let noise = self.noise_coefficient * speed * dt.sqrt() * xi;
        reflect(d + drift + noise, self.distance_bounds)
    }

    pub fn sample_speed<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.speed_max > self.speed_min {
            rng.random_range(self.speed_min..=self.speed_max)
        } else {
            self.speed_min
        }
    }
}

/// Folds `x` back into `[lo, hi]` by mirroring at the walls.
fn reflect(mut x: f64, [lo, hi]: [f64; 2]) -> f64 {
    let width = hi - lo;
    if !x.is_finite() {
        return lo;
    }
    if x < lo || x > hi {
        let period = 2.0 * width;
        let mut off = (x - lo) % period;
        if off < 0.0 {
            off += period;
        }
        x = if off <= width {
            lo + off
        } else {
            hi - (off - width)
        };
    }
    x.clamp(lo, hi)
}

/// The distance process as a stateful stepper.
#[derive(Debug, Clone)]
pub struct DistanceProcess {
    profile: MobilityProfile,
    distance: f64,
    speed: f64,
}

impl DistanceProcess {
    pub fn new<R: Rng + ?Sized>(profile: MobilityProfile, rng: &mut R) -> Self {
        let speed = profile.sample_speed(rng);
        Self {
            distance: profile.mean_distance,
            profile,
            speed,
        }
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn profile(&self) -> &MobilityProfile {
        &self.profile
    }

    /// Draws a fresh speed within the regime and moves the distance by `dt`.
    pub fn step<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) -> f64 {
        self.speed = self.profile.sample_speed(rng);
        let xi: f64 = rng.sample(StandardNormal);
        self.distance = self
            .profile
            .advance_distance(self.distance, self.speed, dt, xi);
        self.distance
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mean_is_a_fixed_point_without_noise() {
        let p = MobilityProfile::urban_low();
        assert_eq!(p.advance_distance(77.0, 25.0, 0.1, 0.0), 77.0);
    }

    #[test]
    fn drift_toward_mean() {
        let p = MobilityProfile::urban_low();
        let d = p.advance_distance(200.0, 25.0, 1.0, 0.0);
        assert!((d - 193.85).abs() < 1e-12, "{d}");
    }

    #[test]
    fn reflection_at_bounds() {
        assert_eq!(reflect(3.0, [5.0, 350.0]), 7.0);
        assert_eq!(reflect(360.0, [5.0, 350.0]), 340.0);
        assert_eq!(reflect(1000.0, [5.0, 350.0]), 310.0);
        assert_eq!(reflect(f64::NAN, [5.0, 350.0]), 5.0);
        let p = MobilityProfile::urban_high();
        assert!(p.advance_distance(349.0, 50.0, 0.1, 100.0) <= 350.0);
        assert!(p.advance_distance(6.0, 50.0, 0.1, -100.0) >= 5.0);
    }

    #[test]
    fn validation() {
        assert!(MobilityProfile::urban_low().validate().is_ok());
        let mut p = MobilityProfile::urban_low();
        p.speed_min = 0.0;
        assert!(p.validate().is_err());
        let mut p = MobilityProfile::urban_low();
        p.mean_distance = 400.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn long_run_mean_near_scenario_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut proc = DistanceProcess::new(MobilityProfile::urban_low(), &mut rng);
        let mut sum = 0.0;
        for _ in 0..10_000 {
            let d = proc.step(0.1, &mut rng);
            assert!((5.0..=350.0).contains(&d));
            sum += d;
        }
        let mean = sum / 10_000.0;
        assert!((mean - 77.0).abs() <= 10.0, "{mean}");
    }
}
