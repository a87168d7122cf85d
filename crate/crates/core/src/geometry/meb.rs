use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{dist_sq, within_sq};
use crate::error::{Error, Result};

/// Shuffle seed for the randomized incremental MEB; fixed so results are
/// reproducible.
pub const MEB_SHUFFLE_SEED: u64 = 0x6d65_625f_7365_6564;

/// Closed Euclidean ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, p: &[f64]) -> bool {
        within_sq(dist_sq(&self.center, p), self.radius)
    }
}

/// Smallest ball whose boundary passes through every point of `support`
/// and whose center lies in their affine hull.  Affinely dependent points
/// are skipped; the returned ball still contains them up to rounding.
fn circumball(support: &[&[f64]], dim: usize) -> Ball {
    match support.len() {
        0 => {
            return Ball {
                center: vec![0.0; dim],
                radius: -1.0,
            }
        }
        1 => {
            return Ball {
                center: support[0].to_vec(),
                radius: 0.0,
            }
        }
        _ => {}
    }
    let p0 = support[0];
    // Orthonormal basis of span{p_i − p0} and the coordinates of each
    // difference vector in it (lower-triangular).
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for p in &support[1..] {
        let mut v: Vec<f64> = p.iter().zip(p0).map(|(a, b)| a - b).collect();
        let len_sq: f64 = v.iter().map(|x| x * x).sum();
        let mut coords = Vec::with_capacity(basis.len() + 1);
        for _ in 0..2 {
            // Two passes of modified Gram–Schmidt for stability.
            for (k, e) in basis.iter().enumerate() {
                let c: f64 = v.iter().zip(e).map(|(a, b)| a * b).sum();
                if coords.len() <= k {
                    coords.push(0.0);
                }
                coords[k] += c;
                v.iter_mut().zip(e).for_each(|(a, b)| *a -= c * b);
            }
        }
        let res: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if res <= 1e-12 * len_sq.sqrt().max(1e-300) {
            continue;
        }
        coords.push(res);
        basis.push(v.into_iter().map(|x| x / res).collect());
        rows.push(coords);
        rhs.push(0.5 * len_sq);
    }
    // Solve rows · y = rhs by forward substitution; center = p0 + Σ y_k e_k.
    let mut y = vec![0.0; rows.len()];
    for i in 0..rows.len() {
        let mut s = rhs[i];
        for k in 0..i {
            s -= rows[i][k] * y[k];
        }
        y[i] = s / rows[i][i];
    }
    let mut center = p0.to_vec();
    for (yk, e) in y.iter().zip(&basis) {
        center.iter_mut().zip(e).for_each(|(c, b)| *c += yk * b);
    }
    let radius = support
        .iter()
        .map(|p| dist_sq(&center, p))
        .fold(0.0f64, f64::max)
        .sqrt();
    Ball { center, radius }
}

fn strictly_outside(ball: &Ball, p: &[f64]) -> bool {
    ball.radius < 0.0 || !within_sq(dist_sq(&ball.center, p), ball.radius)
}

/// Move-to-front Welzl recursion over `pts[..end]` with boundary set `support`.
fn mtf<'a>(pts: &mut Vec<&'a [f64]>, end: usize, support: &mut Vec<&'a [f64]>, dim: usize) -> Ball {
    let mut ball = circumball(support, dim);
    if support.len() == dim + 1 {
        return ball;
    }
    let mut i = 0;
    while i < end {
        let p = pts[i];
        if strictly_outside(&ball, p) {
            support.push(p);
            ball = mtf(pts, i, support, dim);
            support.pop();
            // Move to front so later passes hit hard points first.
            let q = pts.remove(i);
            pts.insert(0, q);
        }
        i += 1;
    }
    ball
}

/// Minimal enclosing ball of a finite point set.
///
/// The radius is the maximum distance from the computed center, so every
/// input point is inside the result.
pub fn min_enclosing_ball(points: &[Vec<f64>]) -> Result<Ball> {
    let refs: Vec<&[f64]> = points.iter().map(|p| p.as_slice()).collect();
    min_enclosing_ball_of(&refs)
}

/// Slice-of-slices variant of [`min_enclosing_ball`].
pub fn min_enclosing_ball_of(points: &[&[f64]]) -> Result<Ball> {
    let first = points
        .first()
        .ok_or_else(|| Error::precondition("minimal enclosing ball of an empty set"))?;
    let dim = first.len();
    let mut pts: Vec<&[f64]> = points.to_vec();
    pts.shuffle(&mut ChaCha8Rng::seed_from_u64(MEB_SHUFFLE_SEED));
    let end = pts.len();
    let mut support = Vec::with_capacity(dim + 1);
    let mut ball = mtf(&mut pts, end, &mut support, dim);
    ball.radius = points
        .iter()
        .map(|p| dist_sq(&ball.center, p))
        .fold(0.0f64, f64::max)
        .sqrt();
    Ok(ball)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute-force oracle: try every subset of size ≤ d+1 as the support,
    /// keep the smallest circumball that contains everything.
    fn brute_meb_radius(points: &[Vec<f64>]) -> f64 {
        let n = points.len();
        let d = points[0].len();
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << n) {
            if mask.count_ones() as usize > d + 1 {
                continue;
            }
            let sup: Vec<&[f64]> = (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| points[i].as_slice())
                .collect();
            let b = circumball(&sup, d);
            let all_in = points
                .iter()
                .all(|p| dist_sq(&b.center, p) <= b.radius * b.radius * (1.0 + 1e-9) + 1e-12);
            if all_in && b.radius < best {
                best = b.radius;
            }
        }
        best
    }

    #[test]
    fn equilateral_triangle() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]];
        let b = min_enclosing_ball(&pts).unwrap();
        assert!((b.radius - 1.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn obtuse_triangle_uses_long_side() {
        let pts = vec![vec![0.0, 0.0], vec![4.0, 0.0], vec![2.0, 0.5]];
        let b = min_enclosing_ball(&pts).unwrap();
        assert!((b.radius - 2.0).abs() < 1e-12);
        assert!((b.center[0] - 2.0).abs() < 1e-12 && b.center[1].abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(min_enclosing_ball(&[]).is_err());
        let one = min_enclosing_ball(&[vec![3.0, -1.0, 2.0]]).unwrap();
        assert_eq!(one.radius, 0.0);
        let dup = min_enclosing_ball(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(dup.radius < 1e-12);
        // Collinear points in 3-D.
        let line: Vec<Vec<f64>> = (0..6)
            .map(|i| vec![i as f64, 2.0 * i as f64, 0.0])
            .collect();
        let b = min_enclosing_ball(&line).unwrap();
        assert!((b.radius - 0.5 * 125f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cube_vertices() {
        let mut pts = Vec::new();
        for m in 0..8u32 {
            pts.push((0..3).map(|k| (m >> k & 1) as f64).collect::<Vec<_>>());
        }
        let b = min_enclosing_ball(&pts).unwrap();
        assert!((b.radius - 3f64.sqrt() / 2.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn matches_brute_force(
            d in 1usize..4,
            raw in proptest::collection::vec(-5.0f64..5.0, 3..24),
        ) {
            let pts: Vec<Vec<f64>> = raw.chunks_exact(d).map(|c| c.to_vec()).take(7).collect();
            prop_assume!(!pts.is_empty());
            let b = min_enclosing_ball(&pts).unwrap();
            for p in &pts {
                prop_assert!(dist_sq(&b.center, p) <= b.radius * b.radius + 1e-9);
            }
            let oracle = brute_meb_radius(&pts);
            prop_assert!((b.radius - oracle).abs() <= 1e-7 * (1.0 + oracle),
                "meb {} vs brute {}", b.radius, oracle);
        }

        #[test]
        fn invariant_under_translation_and_order(
            raw in proptest::collection::vec(-3.0f64..3.0, 4..40),
            shift in proptest::collection::vec(-10.0f64..10.0, 4),
        ) {
            let pts: Vec<Vec<f64>> = raw.chunks_exact(4).map(|c| c.to_vec()).collect();
            let r0 = min_enclosing_ball(&pts).unwrap().radius;
            let moved: Vec<Vec<f64>> = pts.iter().rev()
                .map(|p| p.iter().zip(&shift).map(|(a, s)| a + s).collect())
                .collect();
            let r1 = min_enclosing_ball(&moved).unwrap().radius;
            prop_assert!((r0 - r1).abs() < 1e-8 * (1.0 + r0));
        }
    }
}
