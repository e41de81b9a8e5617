//! Anchor-set formation strategies.
//!
//! Each strategy maps the trajectory cursor `n_tilde` (the UAV's current
//! waypoint) to the ordered list of waypoint indices used for localization.
//! All indices are 1-based and never exceed `n_tilde`.

pub mod hull;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::Measurement;
use crate::error::{Error, Result};
use crate::lls::{localize, AnchorSet, ReferenceMode};
use crate::scalar::Scalar;
use crate::trajectory::Trajectory;

use self::hull::{convex_hull, farthest_point_subset, Hull};

/// CHLM never uses more hull vertices than this.
pub const MAX_HULL_ANCHORS: usize = 5;

/// Residuals closer than this are treated as equal by the CON family.
///
/// A three-anchor system on a constant-altitude track is exactly determined
/// in (x, y), so its residual is pure rounding noise.
pub const RESIDUAL_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "CON")]
    Con,
    #[serde(rename = "CON_I")]
    ConI,
    #[serde(rename = "CON_II")]
    ConII,
    #[serde(rename = "CUM")]
    Cum,
    #[serde(rename = "FML")]
    Fml,
    #[serde(rename = "FMLM")]
    Fmlm,
    #[serde(rename = "CHLM")]
    Chlm,
    #[serde(rename = "CLS")]
    Cls,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Con,
        Algorithm::ConI,
        Algorithm::ConII,
        Algorithm::Cum,
        Algorithm::Fml,
        Algorithm::Fmlm,
        Algorithm::Chlm,
        Algorithm::Cls,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Con => "CON",
            Algorithm::ConI => "CON_I",
            Algorithm::ConII => "CON_II",
            Algorithm::Cum => "CUM",
            Algorithm::Fml => "FML",
            Algorithm::Fmlm => "FMLM",
            Algorithm::Chlm => "CHLM",
            Algorithm::Cls => "CLS",
        }
    }

    /// Index gap for the consecutive-point family.
    pub fn con_gap(self) -> Option<usize> {
        match self {
            Algorithm::Con => Some(1),
            Algorithm::ConI => Some(2),
            Algorithm::ConII => Some(3),
            _ => None,
        }
    }

    /// Smallest cursor at which the algorithm can form an anchor set.
    pub fn warmup(self) -> usize {
        match self.con_gap() {
            Some(gap) => 1 + 2 * gap,
            None => 3,
        }
    }

    /// True when the anchor indices depend only on trajectory geometry.
    pub fn is_geometric(self) -> bool {
        matches!(self, Algorithm::Cum | Algorithm::Fml | Algorithm::Fmlm | Algorithm::Chlm)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .trim_start_matches("LLS-")
            .trim_start_matches("lls-")
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .collect::<String>()
            .to_ascii_uppercase();
        Ok(match key.as_str() {
            "CON" => Algorithm::Con,
            "CONI" => Algorithm::ConI,
            "CONII" => Algorithm::ConII,
            "CUM" => Algorithm::Cum,
            "FML" => Algorithm::Fml,
            "FMLM" => Algorithm::Fmlm,
            "CHLM" => Algorithm::Chlm,
            "CLS" => Algorithm::Cls,
            _ => return Err(Error::Config(format!("unknown algorithm '{s}'"))),
        })
    }
}

/// Per-trial memory for the residual-comparing CON family.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionState<T> {
    pub algorithm: Algorithm,
    /// Residual of the set accepted at the previous step; `+∞` before the first.
    pub last_residual: T,
    pub last_upsilon: Vec<usize>,
}

impl<T: Scalar> SelectionState<T> {
    pub fn new(algorithm: Algorithm) -> Self {
        Self { algorithm, last_residual: T::infinity(), last_upsilon: Vec::new() }
    }
}

fn require(n_tilde: usize, required: usize) -> Result<()> {
    if n_tilde < required {
        Err(Error::NotLocalizable { n_tilde, required })
    } else {
        Ok(())
    }
}

fn residual_le<T: Scalar>(current: T, previous: T) -> bool {
    current <= previous || (current - previous).abs() <= T::lit(RESIDUAL_TIE_TOL)
}

/// Consecutive-point selection with gap 1 (CON), 2 (CON-I) or 3 (CON-II).
///
/// The primary set `{N, N-g, N-2g}` is kept when its residual does not exceed
/// the previous step's; otherwise the set shifted back by one is used.
/// Rank-deficient sets carry an infinite residual.
pub fn select_con<T: Scalar>(
    state: &mut SelectionState<T>,
    n_tilde: usize,
    measurements: &[Measurement<T>],
    trajectory: &Trajectory<T>,
    gap: usize,
    mode: ReferenceMode,
) -> Result<Vec<usize>> {
    if !(1..=3).contains(&gap) {
        return Err(Error::InvalidArgument(format!("CON gap must be 1, 2 or 3, got {gap}")));
    }
    require(n_tilde, 1 + 2 * gap)?;
    let residual_of = |ups: &[usize]| {
        let est = localize(ups, measurements, trajectory, mode, n_tilde);
        if est.is_valid() { est.residual } else { T::infinity() }
    };
    let primary = vec![n_tilde, n_tilde - gap, n_tilde - 2 * gap];
    let primary_residual = residual_of(&primary);
    let fallback_feasible = n_tilde >= 2 + 2 * gap;

    let (upsilon, residual) = if !fallback_feasible || residual_le(primary_residual, state.last_residual) {
        (primary, primary_residual)
    } else {
        let shifted = vec![n_tilde - 1, n_tilde - 1 - gap, n_tilde - 1 - 2 * gap];
        let r = residual_of(&shifted);
        (shifted, r)
    };
    state.last_residual = residual;
    state.last_upsilon.clone_from(&upsilon);
    Ok(upsilon)
}

/// Every index flown so far.
pub fn select_cum(n_tilde: usize) -> Result<Vec<usize>> {
    require(n_tilde, 3)?;
    Ok((1..=n_tilde).collect())
}

/// First, middle (`round((N+1)/2)`, halves rounded up) and last index.
pub fn select_fml(n_tilde: usize) -> Result<Vec<usize>> {
    require(n_tilde, 3)?;
    Ok(vec![1, (n_tilde + 2) / 2, n_tilde])
}

/// First and last index plus the middle index `m` that maximizes `d(1,m) + d(m,N)`.
pub fn select_fmlm<T: Scalar>(n_tilde: usize, trajectory: &Trajectory<T>) -> Result<Vec<usize>> {
    require(n_tilde, 3)?;
    let first = trajectory.waypoint(1)?.position;
    let last = trajectory.waypoint(n_tilde)?.position;
    let spread = |m: usize| {
        let p = trajectory.position(m);
        first.distance(p) + p.distance(last)
    };
    let spreads: Vec<T> = (2..n_tilde).map(spread).collect();
    let best = spreads.iter().copied().fold(T::neg_infinity(), T::max);
    // sums that differ only by rounding count as ties
    let floor = best - T::lit(1e-9) * best.max(T::one());
    let best_m = 2 + spreads.iter().position(|&s| s >= floor).expect("at least one candidate");
    Ok(vec![1, best_m, n_tilde])
}

/// CHLM selection over arbitrary ground points, returning 1-based indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HullSelection {
    /// All hull vertices (ascending) before thinning; `None` when the points are collinear.
    pub vertices: Option<Vec<usize>>,
    pub upsilon: Vec<usize>,
}

pub fn chlm_from_points<T: Scalar>(points: &[[T; 2]]) -> Result<HullSelection> {
    require(points.len(), 3)?;
    match convex_hull(points) {
        Hull::Degenerate => Ok(HullSelection { vertices: None, upsilon: select_fml(points.len())? }),
        Hull::Polygon(verts) => {
            let upsilon = farthest_point_subset(&verts, points, MAX_HULL_ANCHORS)
                .into_iter()
                .map(|k| k + 1)
                .collect();
            let mut all: Vec<usize> = verts.into_iter().map(|k| k + 1).collect();
            all.sort_unstable();
            Ok(HullSelection { vertices: Some(all), upsilon })
        }
    }
}

/// Convex-hull corners of the ground-projected prefix `1..=n_tilde`, at most
/// five of them; falls back to FML when the prefix is collinear.
pub fn select_chlm<T: Scalar>(n_tilde: usize, trajectory: &Trajectory<T>) -> Result<Vec<usize>> {
    require(n_tilde, 3)?;
    trajectory.waypoint(n_tilde)?;
    let points: Vec<[T; 2]> = trajectory.waypoints()[..n_tilde].iter().map(|w| w.position.ground()).collect();
    Ok(chlm_from_points(&points)?.upsilon)
}

/// The three indices with the smallest measured range, nearest first.
pub fn select_cls<T: Scalar>(n_tilde: usize, measurements: &[Measurement<T>]) -> Result<Vec<usize>> {
    require(n_tilde, 3)?;
    if measurements.len() < n_tilde {
        return Err(Error::MissingMeasurement(measurements.len() + 1));
    }
    let mut order: Vec<usize> = (1..=n_tilde).collect();
    order.sort_by(|&i, &j| {
        measurements[i - 1]
            .est_distance
            .partial_cmp(&measurements[j - 1].est_distance)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    order.truncate(3);
    Ok(order)
}

/// Anchor indices that depend only on the trajectory, cached per cursor.
#[derive(Debug, Clone)]
pub struct SelectionPlan {
    fml: Vec<Vec<usize>>,
    fmlm: Vec<Vec<usize>>,
    chlm: Vec<Vec<usize>>,
}

impl SelectionPlan {
    pub fn new<T: Scalar>(trajectory: &Trajectory<T>) -> Result<Self> {
        let n = trajectory.len();
        let mut plan = Self { fml: vec![Vec::new(); n + 1], fmlm: vec![Vec::new(); n + 1], chlm: vec![Vec::new(); n + 1] };
        for k in 3..=n {
            plan.fml[k] = select_fml(k)?;
            plan.fmlm[k] = select_fmlm(k, trajectory)?;
            plan.chlm[k] = select_chlm(k, trajectory)?;
        }
        Ok(plan)
    }

    fn cached(&self, algorithm: Algorithm, n_tilde: usize) -> Option<&[usize]> {
        let table = match algorithm {
            Algorithm::Fml => &self.fml,
            Algorithm::Fmlm => &self.fmlm,
            Algorithm::Chlm => &self.chlm,
            _ => return None,
        };
        table.get(n_tilde).filter(|v| !v.is_empty()).map(Vec::as_slice)
    }
}

/// Drives one algorithm along a trajectory for a single trial.
#[derive(Debug, Clone)]
pub struct Selector<T> {
    state: SelectionState<T>,
}

impl<T: Scalar> Selector<T> {
    pub fn new(algorithm: Algorithm) -> Self {
        Self { state: SelectionState::new(algorithm) }
    }

    pub fn algorithm(&self) -> Algorithm {
        self.state.algorithm
    }

    pub fn state(&self) -> &SelectionState<T> {
        &self.state
    }

    /// Anchor indices for cursor `n_tilde`.
    pub fn upsilon(
        &mut self,
        n_tilde: usize,
        plan: Option<&SelectionPlan>,
        measurements: &[Measurement<T>],
        trajectory: &Trajectory<T>,
        mode: ReferenceMode,
    ) -> Result<Vec<usize>> {
        let algorithm = self.state.algorithm;
        if let Some(hit) = plan.and_then(|p| p.cached(algorithm, n_tilde)) {
            return Ok(hit.to_vec());
        }
        match algorithm {
            Algorithm::Con | Algorithm::ConI | Algorithm::ConII => {
                let gap = algorithm.con_gap().expect("CON family");
                select_con(&mut self.state, n_tilde, measurements, trajectory, gap, mode)
            }
            Algorithm::Cum => select_cum(n_tilde),
            Algorithm::Fml => select_fml(n_tilde),
            Algorithm::Fmlm => select_fmlm(n_tilde, trajectory),
            Algorithm::Chlm => select_chlm(n_tilde, trajectory),
            Algorithm::Cls => select_cls(n_tilde, measurements),
        }
    }

    /// Anchor set (indices plus linearization reference) for cursor `n_tilde`.
    pub fn select(
        &mut self,
        n_tilde: usize,
        plan: Option<&SelectionPlan>,
        measurements: &[Measurement<T>],
        trajectory: &Trajectory<T>,
        mode: ReferenceMode,
    ) -> Result<AnchorSet> {
        let upsilon = self.upsilon(n_tilde, plan, measurements, trajectory, mode)?;
        AnchorSet::with_mode(upsilon, measurements, mode)
    }
}
