//! Linearized least-squares localization from range measurements.
//!
//! Subtracting the reference anchor's range equation from every other anchor's
//! equation gives the linear system `A·l = b` with rows
//!
//! ```text
//! A_k = 2 · [x_k - x_r, y_k - y_r, z_k - z_r]
//! b_k = d_r² - d_k² + |p_k|² - |p_r|²
//! ```
//!
//! The system is solved in the minimum-norm least-squares sense. With a
//! constant-altitude trajectory the z column of `A` is identically zero, so
//! the minimum-norm solution pins `z = 0`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::Measurement;
use crate::error::{Error, Result};
use crate::scalar::{Scalar, Vec3};
use crate::trajectory::Trajectory;

/// Singular values below `largest / CONDITION_LIMIT` are treated as zero.
pub const CONDITION_LIMIT: f64 = 1e10;

const MAX_SWEEPS: usize = 60;

/// How the linearization reference is chosen from an anchor set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReferenceMode {
    /// First index of the anchor set.
    #[serde(rename = "SRL")]
    Static,
    /// Anchor with the smallest measured range; ties go to the smaller index.
    #[serde(rename = "DRL")]
    Dynamic,
}

impl ReferenceMode {
    pub const ALL: [ReferenceMode; 2] = [ReferenceMode::Static, ReferenceMode::Dynamic];

    pub fn as_str(self) -> &'static str {
        match self {
            ReferenceMode::Static => "SRL",
            ReferenceMode::Dynamic => "DRL",
        }
    }
}

impl fmt::Display for ReferenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReferenceMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SRL" | "STATIC" => Ok(ReferenceMode::Static),
            "DRL" | "DYNAMIC" => Ok(ReferenceMode::Dynamic),
            other => Err(Error::Config(format!("unknown reference mode '{other}'"))),
        }
    }
}

/// Anchor indices used for one solve plus the linearization reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorSet {
    upsilon: Vec<usize>,
    reference: usize,
}

impl AnchorSet {
    pub fn new(upsilon: Vec<usize>, reference: usize) -> Result<Self> {
        if upsilon.len() < 3 {
            return Err(Error::TooFewAnchors(upsilon.len()));
        }
        for (k, &i) in upsilon.iter().enumerate() {
            if i == 0 {
                return Err(Error::IndexOutOfRange { index: 0, len: 0 });
            }
            if upsilon[..k].contains(&i) {
                return Err(Error::DuplicateAnchor(i));
            }
        }
        if !upsilon.contains(&reference) {
            return Err(Error::ReferenceNotInSet(reference));
        }
        Ok(Self { upsilon, reference })
    }

    /// Forms the set and picks its reference according to `mode`.
    pub fn with_mode<T: Scalar>(upsilon: Vec<usize>, measurements: &[Measurement<T>], mode: ReferenceMode) -> Result<Self> {
        let reference = select_reference(&upsilon, measurements, mode)?;
        Self::new(upsilon, reference)
    }

    pub fn upsilon(&self) -> &[usize] {
        &self.upsilon
    }

    pub fn reference(&self) -> usize {
        self.reference
    }

    pub fn len(&self) -> usize {
        self.upsilon.len()
    }

    pub fn is_empty(&self) -> bool {
        self.upsilon.is_empty()
    }
}

fn measurement_for<T: Scalar>(measurements: &[Measurement<T>], index: usize) -> Result<&Measurement<T>> {
    match index.checked_sub(1).and_then(|k| measurements.get(k)) {
        Some(m) if m.index == index => Ok(m),
        _ => Err(Error::MissingMeasurement(index)),
    }
}

/// Picks the linearization reference from `upsilon`.
///
/// `measurements[i - 1]` must hold the measurement for waypoint `i`.
pub fn select_reference<T: Scalar>(upsilon: &[usize], measurements: &[Measurement<T>], mode: ReferenceMode) -> Result<usize> {
    let first = *upsilon.first().ok_or(Error::EmptyInput("anchor index list"))?;
    match mode {
        ReferenceMode::Static => {
            measurement_for(measurements, first)?;
            Ok(first)
        }
        ReferenceMode::Dynamic => {
            let mut best: Option<(T, usize)> = None;
            for &i in upsilon {
                let d = measurement_for(measurements, i)?.est_distance;
                best = match best {
                    Some((bd, bi)) if bd < d || (bd == d && bi < i) => Some((bd, bi)),
                    _ => Some((d, i)),
                };
            }
            Ok(best.map(|(_, i)| i).expect("non-empty"))
        }
    }
}

/// Dense `(S-1) × 3` system; rows follow the anchor order with the reference skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSystem<T> {
    pub a: Vec<[T; 3]>,
    pub b: Vec<T>,
}

impl<T: Scalar> LinearSystem<T> {
    pub fn rows(&self) -> usize {
        self.a.len()
    }

    /// `A·l`.
    pub fn apply(&self, l: Vec3<T>) -> Vec<T> {
        self.a.iter().map(|r| r[0] * l.x + r[1] * l.y + r[2] * l.z).collect()
    }
}

pub fn build_system<T: Scalar>(
    anchors: &AnchorSet,
    measurements: &[Measurement<T>],
    trajectory: &Trajectory<T>,
) -> Result<LinearSystem<T>> {
    let r = anchors.reference;
    let p_r = trajectory.waypoint(r)?.position;
    let d_r = measurement_for(measurements, r)?.est_distance;
    let lambda = p_r.norm_squared();
    let two = T::lit(2.0);
    let mut a = Vec::with_capacity(anchors.len() - 1);
    let mut b = Vec::with_capacity(anchors.len() - 1);
    for &k in anchors.upsilon.iter().filter(|&&k| k != r) {
        let p_k = trajectory.waypoint(k)?.position;
        let d_k = measurement_for(measurements, k)?.est_distance;
        let diff = p_k - p_r;
        a.push([two * diff.x, two * diff.y, two * diff.z]);
        b.push(d_r * d_r - d_k * d_k + p_k.norm_squared() - lambda);
    }
    Ok(LinearSystem { a, b })
}

/// Minimum-norm least-squares solution with its numerical rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeastSquares<T> {
    pub location: Vec3<T>,
    pub rank: usize,
    /// Singular values of `A`, descending.
    pub singular_values: [T; 3],
}

impl<T: Scalar> LeastSquares<T> {
    /// Fewer than two independent directions cannot pin a ground position.
    pub fn is_valid(&self) -> bool {
        self.rank >= 2
    }
}

/// Solves `A·l = b` in the minimum-norm least-squares sense.
///
/// Uses one-sided Jacobi orthogonalization of the three columns of `A`, so
/// `AᵀA` is never formed. Directions whose singular value falls below the
/// condition cutoff get a zero component.
#[allow(clippy::needless_range_loop)]
pub fn solve<T: Scalar>(system: &LinearSystem<T>) -> LeastSquares<T> {
    let m = system.rows();
    let mut cols: [Vec<T>; 3] = std::array::from_fn(|j| system.a.iter().map(|r| r[j]).collect());
    let mut v = [[T::zero(); 3]; 3];
    for (j, row) in v.iter_mut().enumerate() {
        row[j] = T::one();
    }
    let eps = T::epsilon();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
            for k in 0..m {
                let (cp, cq) = (cols[p][k], cols[q][k]);
                alpha = alpha + cp * cp;
                beta = beta + cq * cq;
                gamma = gamma + cp * cq;
            }
            if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                continue;
            }
            rotated = true;
            let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
            let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
            let c = T::one() / (T::one() + t * t).sqrt();
            let s = c * t;
            for k in 0..m {
                let (cp, cq) = (cols[p][k], cols[q][k]);
                cols[p][k] = c * cp - s * cq;
                cols[q][k] = s * cp + c * cq;
            }
            for row in v.iter_mut() {
                let (vp, vq) = (row[p], row[q]);
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: [T; 3] = std::array::from_fn(|j| cols[j].iter().map(|&c| c * c).sum::<T>().sqrt());
    let largest = norms.iter().copied().fold(T::zero(), T::max);
    let cutoff = largest * (T::one() / T::lit(CONDITION_LIMIT)).max(eps * T::lit(16.0));

    let mut location = [T::zero(); 3];
    let mut rank = 0;
    for j in 0..3 {
        let sigma = norms[j];
        if !(sigma > cutoff) || sigma == T::zero() {
            continue;
        }
        rank += 1;
        // v_j · (c_jᵀ b) / σ_j², since c_j = σ_j u_j
        let proj = cols[j].iter().zip(&system.b).map(|(&c, &b)| c * b).sum::<T>() / (sigma * sigma);
        for (i, l) in location.iter_mut().enumerate() {
            *l = *l + v[i][j] * proj;
        }
    }

    let mut singular_values = norms;
    singular_values.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    LeastSquares { location: Vec3::from_array(location), rank, singular_values }
}

/// `‖b - A·l‖₁ / ‖b‖₁`.
///
/// When `‖b‖₁ = 0` the residual is 0 for an exact fit and `+∞` otherwise.
pub fn relative_residual<T: Scalar>(system: &LinearSystem<T>, location: Vec3<T>) -> T {
    let fitted = system.apply(location);
    let misfit: T = system.b.iter().zip(&fitted).map(|(&b, &f)| (b - f).abs()).sum();
    let scale: T = system.b.iter().map(|b| b.abs()).sum();
    if scale > T::zero() {
        misfit / scale
    } else if misfit == T::zero() {
        T::zero()
    } else {
        T::infinity()
    }
}

/// Why an estimate could not be produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Invalid {
    TooFewAnchors,
    DuplicateAnchor,
    MissingMeasurement,
    IndexOutOfRange,
    /// Anchor geometry spans fewer than two directions (e.g. collinear anchors).
    RankDeficient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate<T> {
    pub location: Vec3<T>,
    pub residual: T,
    /// Trajectory cursor the estimate was formed at.
    pub at_index: usize,
    pub anchors: Option<AnchorSet>,
    pub status: Result<(), Invalid>,
}

impl<T: Scalar> Estimate<T> {
    pub fn is_valid(&self) -> bool {
        self.status.is_ok()
    }

    fn invalid(at_index: usize, anchors: Option<AnchorSet>, why: Invalid) -> Self {
        Self { location: Vec3::zero(), residual: T::infinity(), at_index, anchors, status: Err(why) }
    }
}

fn classify(err: &Error) -> Invalid {
    match err {
        Error::TooFewAnchors(_) | Error::EmptyInput(_) => Invalid::TooFewAnchors,
        Error::DuplicateAnchor(_) => Invalid::DuplicateAnchor,
        Error::MissingMeasurement(_) => Invalid::MissingMeasurement,
        _ => Invalid::IndexOutOfRange,
    }
}

/// Solves an already-formed anchor set.
pub fn localize_set<T: Scalar>(
    anchors: AnchorSet,
    measurements: &[Measurement<T>],
    trajectory: &Trajectory<T>,
    at_index: usize,
) -> Estimate<T> {
    let system = match build_system(&anchors, measurements, trajectory) {
        Ok(s) => s,
        Err(e) => return Estimate::invalid(at_index, Some(anchors), classify(&e)),
    };
    let sol = solve(&system);
    if !sol.is_valid() {
        return Estimate::invalid(at_index, Some(anchors), Invalid::RankDeficient);
    }
    Estimate {
        location: sol.location,
        residual: relative_residual(&system, sol.location),
        at_index,
        anchors: Some(anchors),
        status: Ok(()),
    }
}

/// Reference selection, system build, solve and residual in one call.
pub fn localize<T: Scalar>(
    upsilon: &[usize],
    measurements: &[Measurement<T>],
    trajectory: &Trajectory<T>,
    mode: ReferenceMode,
    at_index: usize,
) -> Estimate<T> {
    match AnchorSet::with_mode(upsilon.to_vec(), measurements, mode) {
        Ok(anchors) => localize_set(anchors, measurements, trajectory, at_index),
        Err(e) => Estimate::invalid(at_index, None, classify(&e)),
    }
}

/// Everything that went into one solve, for golden-file comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateDump<T> {
    pub upsilon: Vec<usize>,
    pub reference: usize,
    pub a: Vec<[T; 3]>,
    pub b: Vec<T>,
    pub location: Option<[T; 3]>,
    pub residual: Option<T>,
}

pub fn debug_dump<T: Scalar>(
    anchors: &AnchorSet,
    measurements: &[Measurement<T>],
    trajectory: &Trajectory<T>,
) -> Result<EstimateDump<T>> {
    let system = build_system(anchors, measurements, trajectory)?;
    let sol = solve(&system);
    let (location, residual) = if sol.is_valid() {
        (Some(sol.location.to_array()), Some(relative_residual(&system, sol.location)))
    } else {
        (None, None)
    };
    Ok(EstimateDump {
        upsilon: anchors.upsilon.clone(),
        reference: anchors.reference,
        a: system.a,
        b: system.b,
        location,
        residual,
    })
}
