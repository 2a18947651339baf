//! Minimum enclosing balls: a dimension-free core-set approximation, an
//! exact low-dimensional oracle, and a farthest-point diameter lower bound.
//!
//! The core-set iteration (Badoiu–Clarkson) starts at an input point and
//! repeatedly steps 1/(k+1) of the way toward the farthest point; after
//! ceil(1/eps^2) iterations the center is within (1+eps) of optimal. The
//! center after k steps is the running mean of the selected points, so for
//! moderate point counts the farthest-point scans can run against a
//! precomputed Gram matrix, making each iteration O(n) independent of the
//! ambient dimension — loss-vector clouds with d around 5e4 are fine.
//!
//! Twice the returned radius serves as the diameter proxy diam(H) used by
//! the bound calculator; it overestimates the true diameter by at most
//! sqrt(2) in high dimension, and `diameter_lower_bound` exposes the gap.

use crate::error::{Error, Result};
use crate::series::{dist, dist2, PointCloud};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Enclosing ball with approximation slack `eps`.
#[derive(Debug, Clone)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
    pub eps: f64,
}

impl Ball {
    /// Maximum distance from the center to any cloud point; the containment
    /// invariant is radius * (1 + eps) >= this for every input point.
    pub fn max_distance(&self, cloud: &PointCloud) -> f64 {
        cloud
            .iter()
            .map(|p| dist(p, &self.center))
            .fold(0.0, f64::max)
    }
}

/// Point count up to which the Gram-matrix scan is used (n^2 doubles).
const GRAM_LIMIT: usize = 4096;

/// Core-set approximation of the minimum enclosing ball.
///
/// Runs ceil(1/eps^2) iterations; the returned radius is the exact maximum
/// distance from the final center, so containment holds by construction and
/// the radius is at most (1+eps) times optimal.
pub fn miniball_core_set(cloud: &PointCloud, eps: f64) -> Result<Ball> {
    if cloud.is_empty() {
        return Err(Error::domain("cannot enclose an empty cloud"));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::domain(format!("eps must be positive, got {eps}")));
    }
    let n = cloud.len();
    let d = cloud.dim();
    if n == 1 {
        return Ok(Ball {
            center: cloud.point(0).to_vec(),
            radius: 0.0,
            eps,
        });
    }

    let iters = (1.0 / (eps * eps)).ceil() as usize;
    let counts = if n <= GRAM_LIMIT {
        gram_iterations(cloud, iters)
    } else {
        direct_iterations(cloud, iters)
    };

    // The center is the mean of the selected points (the start point counts once).
    let total: f64 = counts.iter().sum::<u64>() as f64;
    let mut center = vec![0.0; d];
    for (i, &c) in counts.iter().enumerate() {
        if c > 0 {
            let w = c as f64 / total;
            for (acc, &x) in center.iter_mut().zip(cloud.point(i)) {
                *acc += w * x;
            }
        }
    }
    let radius = cloud
        .iter()
        .map(|p| dist(p, &center))
        .fold(0.0, f64::max);
    Ok(Ball { center, radius, eps })
}

/// Farthest-point scans against the Gram matrix: per-iteration cost O(n).
/// Returns how many times each point was selected.
fn gram_iterations(cloud: &PointCloud, iters: usize) -> Vec<u64> {
    let n = cloud.len();
    let mut gram = vec![0.0f64; n * n];
    for i in 0..n {
        let pi = cloud.point(i);
        for j in 0..=i {
            let g: f64 = pi.iter().zip(cloud.point(j)).map(|(a, b)| a * b).sum();
            gram[i * n + j] = g;
            gram[j * n + i] = g;
        }
    }
    let norms: Vec<f64> = (0..n).map(|i| gram[i * n + i]).collect();

    // Multiset of selected points, represented by counts; the center is
    // sum/m. dot_t[j] = <x_j, sum>, norm_t2 = |sum|^2.
    let mut counts = vec![0u64; n];
    counts[0] = 1;
    let mut m = 1.0f64;
    let mut dot_t: Vec<f64> = (0..n).map(|j| gram[j]).collect();
    let mut norm_t2 = norms[0];

    for _ in 0..iters {
        // argmax_j |x_j - center|^2, lowest index wins ties.
        let mut best = 0usize;
        let mut best_d2 = f64::NEG_INFINITY;
        for j in 0..n {
            let d2 = norms[j] - 2.0 * dot_t[j] / m + norm_t2 / (m * m);
            if d2 > best_d2 {
                best_d2 = d2;
                best = j;
            }
        }
        counts[best] += 1;
        norm_t2 += 2.0 * dot_t[best] + norms[best];
        let row = &gram[best * n..(best + 1) * n];
        for (t, g) in dot_t.iter_mut().zip(row) {
            *t += g;
        }
        m += 1.0;
    }
    counts
}

/// Plain scans over the raw coordinates: per-iteration cost O(n d).
fn direct_iterations(cloud: &PointCloud, iters: usize) -> Vec<u64> {
    let n = cloud.len();
    let d = cloud.dim();
    let mut counts = vec![0u64; n];
    counts[0] = 1;
    let mut sum: Vec<f64> = cloud.point(0).to_vec();
    let mut m = 1.0f64;
    let mut center = vec![0.0; d];

    for _ in 0..iters {
        for (c, &s) in center.iter_mut().zip(&sum) {
            *c = s / m;
        }
        let mut best = 0usize;
        let mut best_d2 = f64::NEG_INFINITY;
        for j in 0..n {
            let d2 = dist2(cloud.point(j), &center);
            if d2 > best_d2 {
                best_d2 = d2;
                best = j;
            }
        }
        counts[best] += 1;
        for (s, &x) in sum.iter_mut().zip(cloud.point(best)) {
            *s += x;
        }
        m += 1.0;
    }
    counts
}

/// Exact minimum enclosing ball by randomized Welzl recursion.
/// Oracle scope: d <= 3 and n <= 10^4.
pub fn exact_ball_welzl(cloud: &PointCloud) -> Result<Ball> {
    if cloud.is_empty() {
        return Err(Error::domain("cannot enclose an empty cloud"));
    }
    if cloud.dim() > 3 {
        return Err(Error::domain(format!(
            "exact ball supports dimension <= 3, got {}",
            cloud.dim()
        )));
    }
    if cloud.len() > 10_000 {
        return Err(Error::domain(format!(
            "exact ball supports at most 10^4 points, got {}",
            cloud.len()
        )));
    }

    let mut order: Vec<usize> = (0..cloud.len()).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(0x57454C5A);
    order.shuffle(&mut rng);

    let mut boundary = Vec::with_capacity(cloud.dim() + 1);
    let ball = welzl(cloud, &order, &mut boundary);
    Ok(Ball {
        center: ball.0,
        radius: ball.1,
        eps: 0.0,
    })
}

fn welzl(cloud: &PointCloud, pts: &[usize], boundary: &mut Vec<usize>) -> (Vec<f64>, f64) {
    if pts.is_empty() || boundary.len() == cloud.dim() + 1 {
        return ball_of_boundary(cloud, boundary);
    }
    let p = pts[0];
    let ball = welzl(cloud, &pts[1..], boundary);
    if contains(&ball, cloud.point(p)) {
        return ball;
    }
    boundary.push(p);
    let ball = welzl(cloud, &pts[1..], boundary);
    boundary.pop();
    ball
}

fn contains(ball: &(Vec<f64>, f64), p: &[f64]) -> bool {
    if ball.1 < 0.0 {
        return false;
    }
    dist(p, &ball.0) <= ball.1 * (1.0 + 1e-10) + 1e-12
}

/// Smallest ball containing <= d+1 boundary points: try all pairs, then
/// triples, then the full circumsphere. Robust under near-degeneracy.
fn ball_of_boundary(cloud: &PointCloud, boundary: &[usize]) -> (Vec<f64>, f64) {
    let pts: Vec<&[f64]> = boundary.iter().map(|&i| cloud.point(i)).collect();
    match pts.len() {
        0 => (vec![0.0; cloud.dim()], -1.0),
        1 => (pts[0].to_vec(), 0.0),
        _ => {
            let mut candidates: Vec<(Vec<f64>, f64)> = Vec::new();
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    candidates.push(diametral_ball(pts[i], pts[j]));
                }
            }
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    for k in j + 1..pts.len() {
                        candidates.extend(circumball(&[pts[i], pts[j], pts[k]]));
                    }
                }
            }
            if pts.len() == 4 {
                candidates.extend(circumball(&pts));
            }
            candidates
                .into_iter()
                .filter(|ball| pts.iter().all(|p| contains(ball, p)))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap_or_else(|| (pts[0].to_vec(), 0.0))
        }
    }
}

fn diametral_ball(a: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
    let center: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
    (center.clone(), dist(a, &center))
}

/// Circumball of k affinely independent points: the center lies in their
/// affine hull, solved from 2 (p_i - p_0) . c' = |p_i - p_0|^2.
fn circumball(pts: &[&[f64]]) -> Option<(Vec<f64>, f64)> {
    let k = pts.len() - 1;
    let base = pts[0];
    let edges: Vec<Vec<f64>> = pts[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(x, y)| x - y).collect())
        .collect();

    let mut a = vec![0.0; k * k];
    let mut b = vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            a[i * k + j] = 2.0 * edges[i].iter().zip(&edges[j]).map(|(x, y)| x * y).sum::<f64>();
        }
        b[i] = edges[i].iter().map(|x| x * x).sum();
    }
    let coeffs = solve_small(&mut a, &mut b, k)?;

    let mut center = base.to_vec();
    for (coef, edge) in coeffs.iter().zip(&edges) {
        for (c, e) in center.iter_mut().zip(edge) {
            *c += coef * e;
        }
    }
    let radius = dist(base, &center);
    Some((center, radius))
}

/// Gaussian elimination with partial pivoting for k <= 3.
fn solve_small(a: &mut [f64], b: &mut [f64], k: usize) -> Option<Vec<f64>> {
    let scale = a.iter().fold(0.0f64, |acc, &v| acc.max(v.abs())).max(1e-300);
    for col in 0..k {
        let pivot_row = (col..k)
            .max_by(|&i, &j| {
                a[i * k + col]
                    .abs()
                    .partial_cmp(&a[j * k + col].abs())
                    .unwrap()
            })
            .unwrap();
        if a[pivot_row * k + col].abs() < 1e-12 * scale {
            return None;
        }
        if pivot_row != col {
            for j in 0..k {
                a.swap(col * k + j, pivot_row * k + j);
            }
            b.swap(col, pivot_row);
        }
        for row in col + 1..k {
            let f = a[row * k + col] / a[col * k + col];
            for j in col..k {
                a[row * k + j] -= f * a[col * k + j];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for col in (0..k).rev() {
        let mut acc = b[col];
        for j in col + 1..k {
            acc -= a[col * k + j] * x[j];
        }
        x[col] = acc / a[col * k + col];
    }
    Some(x)
}

/// Two-sweep farthest-point heuristic; always a lower bound on the true
/// diameter, and at least diameter/sqrt(3) in Euclidean space.
pub fn diameter_lower_bound(cloud: &PointCloud) -> Result<f64> {
    if cloud.len() < 2 {
        return Err(Error::domain("diameter needs at least 2 points"));
    }
    let p = farthest_from(cloud, cloud.point(0));
    let q = farthest_from(cloud, cloud.point(p));
    Ok(dist(cloud.point(p), cloud.point(q)))
}

fn farthest_from(cloud: &PointCloud, origin: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d2 = f64::NEG_INFINITY;
    for (j, p) in cloud.iter().enumerate() {
        let d2 = dist2(p, origin);
        if d2 > best_d2 {
            best_d2 = d2;
            best = j;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_ball_is_the_midpoint() {
        let c = PointCloud::from_points(&[vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap();
        let ball = miniball_core_set(&c, 1e-3).unwrap();
        assert!((ball.center[0] - 1.0).abs() < 1e-3);
        assert!(ball.center[1].abs() < 1e-3);
        assert!((ball.radius - 1.0).abs() < 1e-3);
    }

    #[test]
    fn equilateral_triangle_circumradius() {
        let h = 3f64.sqrt() / 2.0;
        let c = PointCloud::from_points(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]]).unwrap();
        let ball = miniball_core_set(&c, 1e-3).unwrap();
        assert!((ball.radius - 1.0 / 3f64.sqrt()).abs() < 1e-3, "r={}", ball.radius);
    }

    #[test]
    fn single_point_has_zero_radius() {
        let c = PointCloud::from_points(&[vec![4.0, -1.0, 2.0]]).unwrap();
        let ball = miniball_core_set(&c, 1e-2).unwrap();
        assert_eq!(ball.radius, 0.0);
    }

    #[test]
    fn empty_cloud_is_rejected() {
        assert!(PointCloud::from_points(&[]).is_err());
    }

    #[test]
    fn welzl_unit_square() {
        let c = PointCloud::from_points(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        let ball = exact_ball_welzl(&c).unwrap();
        assert!((ball.center[0] - 0.5).abs() < 1e-9);
        assert!((ball.center[1] - 0.5).abs() < 1e-9);
        assert!((ball.radius - 0.5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn welzl_collinear_points() {
        let c = PointCloud::from_points(&[vec![0.0], vec![1.0], vec![5.0]]).unwrap();
        let ball = exact_ball_welzl(&c).unwrap();
        assert!((ball.center[0] - 2.5).abs() < 1e-9);
        assert!((ball.radius - 2.5).abs() < 1e-9);
    }

    #[test]
    fn welzl_rejects_high_dimension() {
        let c = PointCloud::from_points(&[vec![0.0; 4], vec![1.0; 4]]).unwrap();
        assert!(matches!(exact_ball_welzl(&c), Err(Error::Domain(_))));
    }

    #[test]
    fn lower_bound_of_a_pair_is_their_distance() {
        let c = PointCloud::from_points(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        assert!((diameter_lower_bound(&c).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn hexagon_lower_bound_reaches_opposite_vertices() {
        let pts: Vec<Vec<f64>> = (0..6)
            .map(|k| {
                let a = std::f64::consts::PI / 3.0 * k as f64;
                vec![a.cos(), a.sin()]
            })
            .collect();
        let c = PointCloud::from_points(&pts).unwrap();
        assert!((diameter_lower_bound(&c).unwrap() - 2.0).abs() < 1e-9);
    }
}
