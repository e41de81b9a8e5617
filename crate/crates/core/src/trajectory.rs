//! Predefined UAV waypoint paths.
//!
//! Waypoints are indexed from 1, so `trajectory.waypoint(i)` is the UAV
//! location at flight index `i` and `trajectory.len()` is the last index `N`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Scalar, Vec3};

/// Tolerance when checking that the area side is a whole number of spacings.
const DIVISIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint<T> {
    /// 1-based flight index.
    pub index: usize,
    pub position: Vec3<T>,
}

/// Ordered waypoint list with a constant leg length between consecutive points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    waypoints: Vec<Waypoint<T>>,
    leg_length: T,
}

impl<T: Scalar> Trajectory<T> {
    /// Boustrophedon sweep over `[0, area_side]²` at constant altitude.
    ///
    /// Rows run along +x first, then step +y by `spacing` and reverse. The
    /// first waypoint sits at `(0, 0, altitude)`.
    pub fn generate_parallel_track(area_side: T, spacing: T, altitude: T) -> Result<Self> {
        for (name, v) in [("area_side", area_side), ("spacing", spacing), ("altitude", altitude)] {
            if !(v.is_finite() && v > T::zero()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")));
            }
        }
        let ratio = (area_side / spacing).as_f64();
        let cells = ratio.round();
        if cells < 1.0 || (ratio - cells).abs() > DIVISIBILITY_TOL * ratio.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "area_side {area_side} is not an integer multiple of spacing {spacing}"
            )));
        }
        let per_row = cells as usize + 1;
        let mut waypoints = Vec::with_capacity(per_row * per_row);
        for row in 0..per_row {
            let y = spacing * T::lit(row as f64);
            for step in 0..per_row {
                let col = if row % 2 == 0 { step } else { per_row - 1 - step };
                let x = spacing * T::lit(col as f64);
                waypoints.push(Waypoint {
                    index: waypoints.len() + 1,
                    position: Vec3::new(x, y, altitude),
                });
            }
        }
        Ok(Self { waypoints, leg_length: spacing })
    }

    /// Builds a trajectory from explicit positions with a uniform leg length.
    ///
    /// Consecutive positions must be `leg_length` apart (within 1e-9 m).
    pub fn from_positions(positions: &[Vec3<T>], leg_length: T) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::EmptyInput("trajectory positions"));
        }
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("non-finite waypoint position".into()));
        }
        for (k, pair) in positions.windows(2).enumerate() {
            let leg = pair[0].distance(pair[1]);
            if (leg - leg_length).abs().as_f64() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "leg {} -> {} has length {leg}, expected {leg_length}",
                    k + 1,
                    k + 2
                )));
            }
        }
        let waypoints = positions
            .iter()
            .enumerate()
            .map(|(k, &position)| Waypoint { index: k + 1, position })
            .collect();
        Ok(Self { waypoints, leg_length })
    }

    /// Last waypoint index `N`.
    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn leg_length(&self) -> T {
        self.leg_length
    }

    pub fn waypoints(&self) -> &[Waypoint<T>] {
        &self.waypoints
    }

    pub fn waypoint(&self, index: usize) -> Result<&Waypoint<T>> {
        self.check_index(index)?;
        Ok(&self.waypoints[index - 1])
    }

    /// Position of waypoint `index`; panics when out of range.
    pub fn position(&self, index: usize) -> Vec3<T> {
        self.waypoints[index - 1].position
    }

    /// Cumulative path length from waypoint 1 to waypoint `index`.
    pub fn flight_distance(&self, index: usize) -> Result<T> {
        self.check_index(index)?;
        Ok(self.leg_length * T::lit((index - 1) as f64))
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index == 0 || index > self.len() {
            return Err(Error::IndexOutOfRange { index, len: self.len() });
        }
        Ok(())
    }

    /// Writes `index,x_m,y_m,z_m,cum_dist_m` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["index", "x_m", "y_m", "z_m", "cum_dist_m"])?;
        for wp in &self.waypoints {
            let p = wp.position;
            let cum = self.leg_length * T::lit((wp.index - 1) as f64);
            wtr.write_record([
                wp.index.to_string(),
                p.x.to_string(),
                p.y.to_string(),
                p.z.to_string(),
                cum.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}
