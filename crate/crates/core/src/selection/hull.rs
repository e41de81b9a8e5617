//! Planar convex hull (monotone chain) and hull-vertex thinning.

use crate::scalar::Scalar;

/// Relative tolerance for orientation tests, scaled by the squared point-set extent.
const ORIENTATION_TOL: f64 = 1e-12;

/// Outcome of a hull computation over indexed points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Hull {
    /// Vertex positions into the input slice, counter-clockwise, starting at the
    /// leftmost-then-lowest point. Points lying on an edge are not vertices.
    Polygon(Vec<usize>),
    /// All points are collinear (or coincide); no polygon exists.
    Degenerate,
}

fn cross<T: Scalar>(o: [T; 2], a: [T; 2], b: [T; 2]) -> T {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Orientation threshold below which three points count as collinear.
pub fn collinearity_tolerance<T: Scalar>(points: &[[T; 2]]) -> T {
    let mut lo = [T::infinity(); 2];
    let mut hi = [T::neg_infinity(); 2];
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(T::zero());
    extent * extent * T::lit(ORIENTATION_TOL).max(T::epsilon() * T::lit(64.0))
}

/// True when every point lies on a single line.
pub fn all_collinear<T: Scalar>(points: &[[T; 2]]) -> bool {
    let tol = collinearity_tolerance(points);
    let Some(&a) = points.first() else { return true };
    // farthest point from `a` fixes the line direction
    let far = points.iter().copied().fold(a, |best, p| {
        let d = |q: [T; 2]| (q[0] - a[0]).powi(2) + (q[1] - a[1]).powi(2);
        if d(p) > d(best) { p } else { best }
    });
    if far == a {
        return true;
    }
    points.iter().all(|&p| cross(a, far, p).abs() <= tol)
}

/// Andrew's monotone chain. Ties in position keep the smallest input position.
pub fn convex_hull<T: Scalar>(points: &[[T; 2]]) -> Hull {
    if points.len() < 3 || all_collinear(points) {
        return Hull::Degenerate;
    }
    let tol = collinearity_tolerance(points);
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        let (p, q) = (points[i], points[j]);
        p[0].partial_cmp(&q[0])
            .unwrap()
            .then(p[1].partial_cmp(&q[1]).unwrap())
            .then(i.cmp(&j))
    });
    order.dedup_by(|next, kept| points[*next] == points[*kept]);

    let mut chain: Vec<usize> = Vec::with_capacity(2 * order.len());
    for pass in [order.clone(), order.iter().rev().copied().collect()] {
        let start = chain.len();
        for &i in &pass {
            while chain.len() >= start + 2
                && cross(points[chain[chain.len() - 2]], points[chain[chain.len() - 1]], points[i]) <= tol
            {
                chain.pop();
            }
            chain.push(i);
        }
        chain.pop();
    }
    if chain.len() < 3 {
        return Hull::Degenerate;
    }
    Hull::Polygon(chain)
}

/// Thins `vertices` down to `keep` by greedy farthest-point selection.
///
/// Seeds with the smallest index, then repeatedly adds the vertex whose
/// distance to the nearest chosen vertex is largest (ties to the smaller
/// index). Returns ascending indices. `vertices` are indices into `points`.
pub fn farthest_point_subset<T: Scalar>(vertices: &[usize], points: &[[T; 2]], keep: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = vertices.to_vec();
    pool.sort_unstable();
    if pool.len() <= keep {
        return pool;
    }
    let dist = |a: usize, b: usize| {
        let (p, q) = (points[a], points[b]);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
    };
    let mut chosen = vec![pool.remove(0)];
    let mut nearest: Vec<T> = pool.iter().map(|&v| dist(v, chosen[0])).collect();
    while chosen.len() < keep {
        let mut best = 0;
        for k in 1..pool.len() {
            if nearest[k] > nearest[best] {
                best = k;
            }
        }
        let v = pool.remove(best);
        nearest.remove(best);
        for (k, &u) in pool.iter().enumerate() {
            nearest[k] = nearest[k].min(dist(u, v));
        }
        chosen.push(v);
    }
    chosen.sort_unstable();
    chosen
}
