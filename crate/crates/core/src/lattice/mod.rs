//! Full-rank lattices in ℝⁿ: enumeration, quantization, radii and
//! membership.

mod reduce;

pub use reduce::{lll, LLL_DELTA};

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{ball_volume, dist_sq, ln_unit_ball_volume, norm_sq, within_sq};

/// Absolute tolerance on solved coefficients in membership tests.
pub const INTEGRALITY_TOL: f64 = 1e-7;
/// Default cap on the number of points one enumeration may return.
pub const DEFAULT_ENUM_CAP: usize = 1_000_000;

/// Lattice point with its coefficients in the lattice's own basis.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePoint {
    pub coeffs: Vec<i64>,
    pub point: Vec<f64>,
}

/// Full-rank lattice `{B·a : a ∈ ℤⁿ}`, basis vectors as columns of `B`.
///
/// An LLL-reduced copy of the basis and the QR factor of that copy are
/// cached; enumeration runs on the reduced basis and maps coefficients back.
#[derive(Debug, Clone)]
pub struct Lattice {
    basis: DMatrix<f64>,
    inverse: DMatrix<f64>,
    det: f64,
    reduced: DMatrix<f64>,
    /// `reduced = basis · unimodular`, row-major.
    unimodular: Vec<Vec<i64>>,
    q_factor: DMatrix<f64>,
    /// Upper-triangular `R` with `reducedᵀ·reduced = RᵀR`.
    r_factor: DMatrix<f64>,
}

impl Lattice {
    pub fn from_basis(basis: DMatrix<f64>) -> Result<Self> {
        let n = basis.nrows();
        if n == 0 || basis.ncols() != n {
            return Err(Error::precondition(format!(
                "basis must be square and nonempty, got {}x{}",
                basis.nrows(),
                basis.ncols()
            )));
        }
        if n > 64 {
            return Err(Error::precondition("dimensions above 64 are not supported"));
        }
        if basis.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("basis has non-finite entries"));
        }
        let (reduced, unimodular) = lll(&basis);
        let qr = reduced.clone().qr();
        let (q_factor, r_factor) = (qr.q(), qr.r());
        // |det| from the triangular factor of the reduced basis is better
        // conditioned than a direct LU on a skewed basis.
        let det = r_factor.diagonal().iter().map(|x| x.abs()).product::<f64>();
        let scale = (0..n).map(|j| basis.column(j).norm()).product::<f64>();
        if !(det > 0.0) || det <= 1e-13 * scale {
            return Err(Error::domain("basis is singular"));
        }
        let inverse = basis
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::domain("basis is singular"))?;
        Ok(Lattice {
            basis,
            inverse,
            det,
            reduced,
            unimodular,
            q_factor,
            r_factor,
        })
    }

    /// Lattice generated by the given vectors (each becomes a basis column).
    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let n = cols.len();
        if cols.iter().any(|c| c.len() != n) {
            return Err(Error::precondition("basis vectors must have length n"));
        }
        Self::from_basis(DMatrix::from_fn(n, n, |i, j| cols[j][i]))
    }

    /// `ℤⁿ`.
    pub fn integer(n: usize) -> Result<Self> {
        Self::from_basis(DMatrix::identity(n, n))
    }

    /// `a·ℤⁿ`.
    pub fn scaled_integer(n: usize, a: f64) -> Result<Self> {
        Self::from_basis(DMatrix::identity(n, n) * a)
    }

    /// Hexagonal lattice with unit minimum distance.
    pub fn hexagonal() -> Result<Self> {
        Self::from_columns(&[vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]])
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    /// Upper-triangular factor of the Gram matrix of the reduced basis.
    pub fn gram_factor(&self) -> &DMatrix<f64> {
        &self.r_factor
    }

    pub fn reduced_basis(&self) -> &DMatrix<f64> {
        &self.reduced
    }

    /// Ratio of extreme singular values of the basis.
    pub fn condition_number(&self) -> f64 {
        let sv = self.basis.clone().singular_values();
        let max = sv.iter().copied().fold(0.0, f64::max);
        let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }

    /// `B·a`.
    pub fn point(&self, coeffs: &[i64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.basis[(i, j)] * coeffs[j] as f64).sum())
            .collect()
    }

    /// Real coefficients `B⁻¹x`.
    pub fn coordinates(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.inverse[(i, j)] * x[j]).sum())
            .collect()
    }

    /// Lattice scaled by `c`; the cached reduction is reused so radii scale
    /// exactly.
    pub fn scale(&self, c: f64) -> Result<Self> {
        if c == 0.0 || !c.is_finite() {
            return Err(Error::domain(format!(
                "scale factor must be nonzero and finite, got {c}"
            )));
        }
        let n = self.dim() as i32;
        Ok(Lattice {
            basis: &self.basis * c,
            inverse: &self.inverse / c,
            det: self.det * c.abs().powi(n),
            reduced: &self.reduced * c,
            unimodular: self.unimodular.clone(),
            q_factor: self.q_factor.clone(),
            r_factor: &self.r_factor * c,
        })
    }

    /// Linear image `T·Λ` of the lattice, basis `T·B`.
    pub fn transform(&self, t: &DMatrix<f64>) -> Result<Self> {
        Self::from_basis(t * &self.basis)
    }

    /// Whether `x ∈ Λ`, solving `B·a = x` and testing integrality of `a`.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        let a = self.coordinates(x);
        let worst = a.iter().map(|v| (v - v.round()).abs()).fold(0.0, f64::max);
        if worst > 1e-9 && worst <= INTEGRALITY_TOL {
            log::warn!("lattice membership residual {worst:.2e}: basis may be ill-conditioned");
        }
        worst <= INTEGRALITY_TOL
    }

    /// Whether every basis vector of `coarse` lies in `fine`.
    pub fn sublattice_check(coarse: &Lattice, fine: &Lattice) -> bool {
        coarse.dim() == fine.dim()
            && (0..coarse.dim()).all(|j| {
                let col: Vec<f64> = coarse.basis.column(j).iter().copied().collect();
                fine.contains(&col)
            })
    }

    fn original_coeffs(&self, z: &[i64]) -> Vec<i64> {
        self.unimodular
            .iter()
            .map(|row| row.iter().zip(z).map(|(u, zi)| u * zi).sum())
            .collect()
    }

    fn reduced_point(&self, z: &[i64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.reduced[(i, j)] * z[j] as f64).sum())
            .collect()
    }

    /// Calls `visit` with the reduced coefficients and the point of every
    /// lattice point within `r` of `center`.  `visit` returns `false` to stop.
    fn visit_ball(&self, center: &[f64], r: f64, visit: &mut dyn FnMut(&[i64], &[f64]) -> bool) {
        let n = self.dim();
        let t: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|k| self.q_factor[(k, i)] * center[k]).sum())
            .collect();
        // Search slightly wide and filter exactly on the point itself.
        let bound = r * r * (1.0 + 1e-8) + 1e-12 * (1.0 + norm_sq(center));
        let mut z = vec![0i64; n];
        self.descend(n - 1, 0.0, bound, &t, &mut z, center, r, visit);
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        level: usize,
        partial: f64,
        bound: f64,
        t: &[f64],
        z: &mut [i64],
        center: &[f64],
        r: f64,
        visit: &mut dyn FnMut(&[i64], &[f64]) -> bool,
    ) -> bool {
        let rf = &self.r_factor;
        let rii = rf[(level, level)];
        let s = t[level]
            - (level + 1..z.len())
                .map(|j| rf[(level, j)] * z[j] as f64)
                .sum::<f64>();
        let mid = s / rii;
        let width = (bound - partial).max(0.0).sqrt() / rii.abs();
        let lo = (mid - width).ceil() as i64;
        let hi = (mid + width).floor() as i64;
        for zi in lo..=hi {
            let d = rii * zi as f64 - s;
            let p = partial + d * d;
            if p > bound {
                continue;
            }
            z[level] = zi;
            if level == 0 {
                let v = self.reduced_point(z);
                if within_sq(dist_sq(&v, center), r) && !visit(z, &v) {
                    return false;
                }
            } else if !self.descend(level - 1, p, bound, t, z, center, r, visit) {
                return false;
            }
        }
        z[level] = 0;
        true
    }

    fn check_estimate(&self, r: f64, cap: usize) -> Result<()> {
        let n = self.dim();
        let reach = r + self.covering_radius_upper();
        let ln_est = ln_unit_ball_volume(n) + n as f64 * reach.ln() - self.det.ln();
        if ln_est > (cap as f64).ln() {
            return Err(Error::budget(
                format!(
                    "lattice enumeration (estimated {:.3e} points)",
                    ln_est.exp()
                ),
                cap as u64,
            ));
        }
        Ok(())
    }

    /// All lattice points within `r` of `center`, ordered lexicographically
    /// by coefficient vector.
    pub fn enumerate_in_ball(&self, center: &[f64], r: f64) -> Result<Vec<LatticePoint>> {
        self.enumerate_in_ball_capped(center, r, DEFAULT_ENUM_CAP)
    }

    pub fn enumerate_in_ball_capped(
        &self,
        center: &[f64],
        r: f64,
        cap: usize,
    ) -> Result<Vec<LatticePoint>> {
        self.check_ball_args(center, r)?;
        self.check_estimate(r, cap)?;
        let mut out = Vec::new();
        let mut over = false;
        self.visit_ball(center, r, &mut |z, v| {
            if out.len() >= cap {
                over = true;
                return false;
            }
            out.push(LatticePoint {
                coeffs: self.original_coeffs(z),
                point: v.to_vec(),
            });
            true
        });
        if over {
            return Err(Error::budget("lattice enumeration", cap as u64));
        }
        out.sort_by(|a, b| a.coeffs.cmp(&b.coeffs));
        Ok(out)
    }

    /// Number of lattice points within `r` of `center`, optionally skipping
    /// the origin.
    pub fn count_in_ball(
        &self,
        center: &[f64],
        r: f64,
        exclude_zero: bool,
        cap: usize,
    ) -> Result<usize> {
        self.check_ball_args(center, r)?;
        self.check_estimate(r, cap)?;
        let mut count = 0usize;
        self.visit_ball(center, r, &mut |z, _| {
            if !(exclude_zero && z.iter().all(|&c| c == 0)) {
                count += 1;
            }
            count <= cap
        });
        if count > cap {
            return Err(Error::budget("lattice point count", cap as u64));
        }
        Ok(count)
    }

    fn check_ball_args(&self, center: &[f64], r: f64) -> Result<()> {
        if center.len() != self.dim() {
            return Err(Error::precondition(
                "center dimension does not match lattice",
            ));
        }
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::domain(format!(
                "radius must be nonnegative, got {r}"
            )));
        }
        Ok(())
    }

    /// Nearest lattice point with its coefficients.  Ties go to the
    /// lexicographically smallest coefficient vector.
    pub fn quantize_point(&self, x: &[f64]) -> LatticePoint {
        let n = self.dim();
        // Babai rounding in the reduced basis gives an upper bound.
        let t: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|k| self.q_factor[(k, i)] * x[k]).sum())
            .collect();
        let rf = &self.r_factor;
        let mut y = vec![0.0; n];
        for i in (0..n).rev() {
            let s = t[i] - (i + 1..n).map(|j| rf[(i, j)] * y[j]).sum::<f64>();
            y[i] = s / rf[(i, i)];
        }
        let z0: Vec<i64> = y.iter().map(|v| v.round() as i64).collect();
        let seed = self.reduced_point(&z0);
        let r0 = dist_sq(&seed, x).sqrt();
        let mut best: Option<(f64, Vec<i64>, Vec<f64>)> = None;
        self.visit_ball(x, r0, &mut |z, v| {
            let d = dist_sq(v, x);
            let coeffs = self.original_coeffs(z);
            let better = match &best {
                None => true,
                Some((bd, bc, _)) => {
                    let tie = (d - bd).abs() <= 1e-12 * bd.max(1e-300);
                    if tie {
                        coeffs < *bc
                    } else {
                        d < *bd
                    }
                }
            };
            if better {
                best = Some((d, coeffs, v.to_vec()));
            }
            true
        });
        let (_, coeffs, point) = best.unwrap_or_else(|| (0.0, self.original_coeffs(&z0), seed));
        LatticePoint { coeffs, point }
    }

    /// Nearest lattice point `Q_Λ(x)`.
    pub fn quantize(&self, x: &[f64]) -> Vec<f64> {
        self.quantize_point(x).point
    }

    /// `x − Q_Λ(x)`, the representative of `x` in the Voronoi cell.
    pub fn mod_lattice(&self, x: &[f64]) -> Vec<f64> {
        let q = self.quantize(x);
        x.iter().zip(&q).map(|(a, b)| a - b).collect()
    }

    /// Half the length of a shortest nonzero vector.
    pub fn packing_radius(&self) -> f64 {
        let n = self.dim();
        let shortest_col = (0..n)
            .map(|j| self.reduced.column(j).norm())
            .fold(f64::INFINITY, f64::min);
        let origin = vec![0.0; n];
        let mut best = shortest_col;
        self.visit_ball(&origin, shortest_col, &mut |z, v| {
            if z.iter().any(|&c| c != 0) {
                best = best.min(norm_sq(v).sqrt());
            }
            true
        });
        best / 2.0
    }

    /// Radius of the ball whose volume is `det Λ`.
    pub fn effective_radius(&self) -> f64 {
        let n = self.dim() as f64;
        ((self.det.ln() - ln_unit_ball_volume(self.dim())) / n).exp()
    }

    /// `½·√(Σᵢ‖b′ᵢ‖²)` over the reduced basis, an upper bound on the
    /// covering radius.
    pub fn covering_radius_upper(&self) -> f64 {
        0.5 * self.reduced.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Radii with a Monte Carlo lower bracket on the covering radius.
    pub fn radii<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> RadiiReport {
        let n = self.dim();
        let mut lower: f64 = 0.0;
        for _ in 0..samples {
            let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let x: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|j| self.reduced[(i, j)] * u[j]).sum())
                .collect();
            lower = lower.max(norm_sq(&self.mod_lattice(&x)).sqrt());
        }
        let upper = self.covering_radius_upper();
        RadiiReport {
            r_pack: self.packing_radius(),
            r_eff: self.effective_radius(),
            r_cov_lower: lower.min(upper),
            r_cov_upper: upper,
            r_cov_lower_method: "monte-carlo-dither",
            r_cov_upper_method: "reduced-parallelepiped-diagonal",
        }
    }
}

/// Packing, effective and covering radii; the covering radius is bracketed.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiiReport {
    pub r_pack: f64,
    pub r_eff: f64,
    pub r_cov_lower: f64,
    pub r_cov_upper: f64,
    pub r_cov_lower_method: &'static str,
    pub r_cov_upper_method: &'static str,
}

/// `Vₙ·rⁿ / det Λ`, the volume heuristic for the number of lattice points in
/// a radius-`r` ball.
pub fn volume_estimate(lattice: &Lattice, r: f64) -> Result<f64> {
    Ok(ball_volume(lattice.dim(), r)? / lattice.det())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop, prop_assert, proptest, ProptestConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn coords(pts: &[LatticePoint]) -> Vec<Vec<f64>> {
        pts.iter().map(|p| p.point.clone()).collect()
    }

    #[test]
    fn z2_examples() {
        let z2 = Lattice::integer(2).unwrap();
        let pts = z2.enumerate_in_ball(&[0.5, 0.5], 1.0).unwrap();
        assert_eq!(
            coords(&pts),
            vec![
                vec![0.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 0.0],
                vec![1.0, 1.0]
            ]
        );
        let pts = z2.enumerate_in_ball(&[0.0, 0.0], 0.0).unwrap();
        assert_eq!(coords(&pts), vec![vec![0.0, 0.0]]);
        let two = Lattice::scaled_integer(2, 2.0).unwrap();
        assert_eq!(two.enumerate_in_ball(&[0.0, 0.0], 2.0).unwrap().len(), 5);
    }

    #[test]
    fn enumeration_cap() {
        let z3 = Lattice::integer(3).unwrap();
        let err = z3
            .enumerate_in_ball_capped(&[0.0; 3], 20.0, 1000)
            .unwrap_err();
        assert!(err.is_budget());
        assert!(z3.enumerate_in_ball(&[0.0; 3], -1.0).is_err());
    }

    #[test]
    fn quantize_examples() {
        let z2 = Lattice::integer(2).unwrap();
        assert_eq!(z2.quantize(&[0.4, -0.3]), vec![0.0, 0.0]);
        assert_eq!(z2.mod_lattice(&[0.4, -0.3]), vec![0.4, -0.3]);
        let z1 = Lattice::integer(1).unwrap();
        assert_eq!(z1.quantize(&[0.5]), vec![0.0]);
        assert_eq!(z1.quantize(&[-0.5]), vec![-1.0]);
        assert_eq!(z1.quantize(&[1.5]), vec![1.0]);
    }

    #[test]
    fn quantize_against_local_neighbours() {
        let l = Lattice::from_columns(&[vec![2.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let x = [2.1, 0.9];
        let res = norm_sq(&l.mod_lattice(&x));
        for a in -2..=2i64 {
            for b in -2..=2i64 {
                let v = l.point(&[a, b]);
                assert!(res <= dist_sq(&v, &x) + 1e-12);
            }
        }
    }

    #[test]
    fn radii_of_standard_lattices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=6 {
            let z = Lattice::integer(n).unwrap();
            let rep = z.radii(200, &mut rng);
            assert!((rep.r_pack - 0.5).abs() < 1e-12);
            let v = ball_volume(n, 1.0).unwrap();
            assert!((rep.r_eff - v.powf(-1.0 / n as f64)).abs() < 1e-12);
            assert!((rep.r_cov_upper - (n as f64).sqrt() / 2.0).abs() < 1e-12);
            assert!(rep.r_cov_lower <= rep.r_cov_upper);
        }
        let three = Lattice::scaled_integer(2, 3.0).unwrap();
        assert!((three.packing_radius() - 1.5).abs() < 1e-12);
        let hex = Lattice::hexagonal().unwrap();
        assert!((hex.det() - 3f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((hex.packing_radius() - 0.5).abs() < 1e-12);
        assert!((hex.effective_radius() - (3f64.sqrt() / (2.0 * PI)).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn membership() {
        let z2 = Lattice::integer(2).unwrap();
        assert!(z2.contains(&[3.0, -7.0]));
        let two = Lattice::scaled_integer(2, 2.0).unwrap();
        assert!(!two.contains(&[1.0, 0.0]));
        assert!(Lattice::sublattice_check(&two, &z2));
        assert!(!Lattice::sublattice_check(&z2, &two));
        assert!(Lattice::from_columns(&[vec![1.0, 2.0], vec![2.0, 4.0]]).is_err());
        assert!(z2.scale(0.0).is_err());
    }

    #[test]
    fn skewed_basis_enumerates_like_its_reduction() {
        // Same lattice as ℤ², given by a badly skewed basis.
        let l = Lattice::from_columns(&[vec![1.0, 0.0], vec![997.0, 1.0]]).unwrap();
        assert!((l.det() - 1.0).abs() < 1e-9);
        let pts = l.enumerate_in_ball(&[0.3, 0.2], 2.0).unwrap();
        let z = Lattice::integer(2)
            .unwrap()
            .enumerate_in_ball(&[0.3, 0.2], 2.0)
            .unwrap();
        assert_eq!(pts.len(), z.len());
        for p in &pts {
            assert_eq!(l.point(&p.coeffs), p.point);
        }
    }

    fn random_lattice(seed: u64, n: usize) -> Option<Lattice> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-3.0..3.0));
        let l = Lattice::from_basis(m).ok()?;
        (l.condition_number() < 1e3).then_some(l)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn quantize_identity_and_optimality(seed in any::<u64>(), n in 1usize..5,
                                            x in proptest::collection::vec(-10.0f64..10.0, 4)) {
            let Some(l) = random_lattice(seed, n) else { return Ok(()); };
            let x = &x[..n];
            let q = l.quantize_point(x);
            let e = l.mod_lattice(x);
            for i in 0..n {
                prop_assert!((q.point[i] + e[i] - x[i]).abs() < 1e-9);
            }
            prop_assert!(l.contains(&q.point));
            let res = norm_sq(&e);
            // Every neighbour within ±1 in each coefficient is no closer.
            let mut delta = vec![-1i64; n];
            loop {
                let c: Vec<i64> = q.coeffs.iter().zip(&delta).map(|(a, d)| a + d).collect();
                prop_assert!(res <= dist_sq(&l.point(&c), x) * (1.0 + 1e-9) + 1e-9);
                let mut k = 0;
                while k < n && delta[k] == 1 { delta[k] = -1; k += 1; }
                if k == n { break; }
                delta[k] += 1;
            }
        }

        #[test]
        fn scaling_scales_radii(seed in any::<u64>(), n in 2usize..5, c in prop::sample::select(vec![-2.5f64, 0.5, 3.0])) {
            let Some(l) = random_lattice(seed, n) else { return Ok(()); };
            let s = l.scale(c).unwrap();
            let a = c.abs();
            prop_assert!((s.packing_radius() - a * l.packing_radius()).abs() < 1e-9 * (1.0 + a));
            prop_assert!((s.effective_radius() - a * l.effective_radius()).abs() < 1e-9 * (1.0 + a));
            prop_assert!((s.covering_radius_upper() - a * l.covering_radius_upper()).abs() < 1e-9 * (1.0 + a));
        }

        #[test]
        fn radii_are_ordered(seed in any::<u64>(), n in 2usize..5) {
            let Some(l) = random_lattice(seed, n) else { return Ok(()); };
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
            let r = l.radii(50, &mut rng);
            prop_assert!(r.r_pack <= r.r_eff * (1.0 + 1e-12));
            prop_assert!(r.r_eff <= r.r_cov_upper * (1.0 + 1e-12));
            prop_assert!(r.r_cov_lower <= r.r_cov_upper);
        }
    }
}
