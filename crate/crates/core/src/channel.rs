//! Log-distance path loss with log-normal shadowing, and RSSI-to-range inversion.
//!
//! A measurement draws one shadowing sample `X ~ N(0, sigma²)` dB, forms the
//! path loss `PL0 + 10·alpha·log10(d/d0) + X` and inverts it back to a range
//! with the noiseless model. The resulting range error is multiplicative,
//! `d_est = d · 10^(X / (10·alpha))`.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Scalar, Vec3};
use crate::trajectory::{Trajectory, Waypoint};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams<T> {
    /// Path loss at the reference distance, dB.
    pub pl0_db: T,
    /// Reference distance, meters.
    pub d0: T,
    /// Path-loss exponent.
    pub alpha: T,
    /// Shadowing standard deviation, dB.
    pub sigma_db: T,
    pub frequency_hz: T,
    /// Carried for completeness; no computation depends on it.
    pub bandwidth_hz: T,
}

impl<T: Scalar> ChannelParams<T> {
    pub fn new(pl0_db: T, d0: T, alpha: T, sigma_db: T, frequency_hz: T, bandwidth_hz: T) -> Result<Self> {
        let p = Self { pl0_db, d0, alpha, sigma_db, frequency_hz, bandwidth_hz };
        p.validate()?;
        Ok(p)
    }

    /// Free-space model: `PL0` is the Friis loss at `d0` for `frequency_hz`.
    pub fn free_space(frequency_hz: T, bandwidth_hz: T, d0: T, alpha: T, sigma_db: T) -> Result<Self> {
        if !(frequency_hz > T::zero()) || !(d0 > T::zero()) {
            return Err(Error::InvalidArgument("frequency and d0 must be positive".into()));
        }
        Self::new(friis_loss_db(d0, frequency_hz), d0, alpha, sigma_db, frequency_hz, bandwidth_hz)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.pl0_db.is_finite()
            && self.d0 > T::zero()
            && self.alpha > T::zero()
            && self.sigma_db >= T::zero()
            && self.sigma_db.is_finite()
            && self.frequency_hz > T::zero()
            && self.bandwidth_hz >= T::zero();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid channel parameters {self:?}")))
        }
    }
}

/// Friis free-space loss `20·log10(4π·d·f/c)` in dB.
pub fn friis_loss_db<T: Scalar>(d: T, frequency_hz: T) -> T {
    let four_pi = T::lit(4.0 * std::f64::consts::PI);
    T::lit(20.0) * (four_pi * d * frequency_hz / T::lit(SPEED_OF_LIGHT)).log10()
}

/// Per-waypoint range observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement<T> {
    /// Waypoint index the measurement was taken at.
    pub index: usize,
    pub est_distance: T,
    pub true_distance: T,
    pub anchor: Vec3<T>,
}

pub fn true_distance<T: Scalar>(target: Vec3<T>, anchor: Vec3<T>) -> T {
    target.distance(anchor)
}

pub fn path_loss_db<T: Scalar>(d: T, params: &ChannelParams<T>, shadowing_db: T) -> Result<T> {
    if !(d > T::zero()) {
        return Err(Error::InvalidArgument(format!("path loss distance must be positive, got {d}")));
    }
    Ok(params.pl0_db + T::lit(10.0) * params.alpha * (d / params.d0).log10() + shadowing_db)
}

/// Range implied by a measured path loss under the noiseless model.
pub fn invert_range<T: Scalar>(measured_pl_db: T, params: &ChannelParams<T>) -> T {
    let exponent = (measured_pl_db - params.pl0_db) / (T::lit(10.0) * params.alpha);
    params.d0 * T::lit(10.0).powf(exponent)
}

/// Takes one measurement of `target` from `waypoint`, consuming exactly one
/// standard-normal draw from `rng`.
pub fn measure<T: Scalar, R: Rng + ?Sized>(
    target: Vec3<T>,
    waypoint: &Waypoint<T>,
    params: &ChannelParams<T>,
    rng: &mut R,
) -> Result<Measurement<T>> {
    let z: f64 = StandardNormal.sample(rng);
    let d = true_distance(target, waypoint.position);
    if !(d > T::zero()) {
        return Err(Error::CoincidentAnchor(waypoint.index));
    }
    let shadowing = params.sigma_db * T::lit(z);
    let pl = path_loss_db(d, params, shadowing)?;
    Ok(Measurement {
        index: waypoint.index,
        est_distance: invert_range(pl, params),
        true_distance: d,
        anchor: waypoint.position,
    })
}

/// Measures every waypoint in flight order; element `i - 1` belongs to waypoint `i`.
pub fn measure_trajectory<T: Scalar, R: Rng + ?Sized>(
    target: Vec3<T>,
    trajectory: &Trajectory<T>,
    params: &ChannelParams<T>,
    rng: &mut R,
) -> Result<Vec<Measurement<T>>> {
    trajectory
        .waypoints()
        .iter()
        .map(|wp| measure(target, wp, params, rng))
        .collect()
}

/// Writes `index,true_d_m,est_d_m` rows.
pub fn write_measurements_csv<T: Scalar, W: Write>(measurements: &[Measurement<T>], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["index", "true_d_m", "est_d_m"])?;
    for m in measurements {
        wtr.write_record([m.index.to_string(), m.true_distance.to_string(), m.est_distance.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}
