//! Periodic infinite constellations `𝒞 = 𝒞′ + αℤⁿ` with `𝒞′ ⊂ [0, α)ⁿ`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{
    ball_volume, dist_sq, grid_net, ln_unit_ball_volume, norm_sq, within_sq, worst_case_list_size,
    ListReport, ReportMode, SearchMode, MEMBERSHIP_REL_TOL,
};

/// Cap on period cells a lifted enumeration may visit.
pub const LIFT_CELL_CAP: f64 = 1e6;

/// Two-sided 95% normal quantile used for Wilson intervals.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicConstellation {
    alpha: f64,
    n: usize,
    points: Vec<Vec<f64>>,
}

/// A constellation point `points[index] + α·shift`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPoint {
    pub index: usize,
    pub shift: Vec<i64>,
    pub point: Vec<f64>,
}

impl PeriodicConstellation {
    /// Wraps the given representatives into `[0, α)ⁿ`.
    pub fn new(alpha: f64, points: Vec<Vec<f64>>) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::domain(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        let Some(first) = points.first() else {
            return Err(Error::domain("a constellation needs at least one point"));
        };
        let n = first.len();
        if n == 0 || points.iter().any(|p| p.len() != n) {
            return Err(Error::precondition(
                "representatives must share a positive dimension",
            ));
        }
        let points = points
            .into_iter()
            .map(|p| p.into_iter().map(|x| wrap_coord(x, alpha)).collect())
            .collect();
        Ok(PeriodicConstellation { alpha, n, points })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Points per unit volume, `M/αⁿ`.
    pub fn density(&self) -> f64 {
        self.len() as f64 / self.alpha.powi(self.n as i32)
    }

    /// `(αⁿ/(Vₙ·M))^{1/n}`.
    pub fn effective_radius(&self) -> f64 {
        let nf = self.n as f64;
        ((nf * self.alpha.ln() - ln_unit_ball_volume(self.n) - (self.len() as f64).ln()) / nf).exp()
    }

    /// Wrap-around distance between two points of the cell.
    pub fn wrap_dist(&self, x: &[f64], y: &[f64]) -> f64 {
        wrap_dist_sq(self.alpha, x, y).sqrt()
    }

    /// Half the smallest wrap-around distance between distinct points, or
    /// `α/2` (the distance to a point's own copies) if that is smaller.
    pub fn packing_radius(&self) -> f64 {
        let mut best = self.alpha * self.alpha;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                best = best.min(wrap_dist_sq(self.alpha, &self.points[i], &self.points[j]));
            }
        }
        best.sqrt() / 2.0
    }

    /// Every constellation point within `r` of `center`, with its shift.
    /// Requires `r < α` so a shift in `{−1, 0, 1}ⁿ` after reducing the
    /// center into the cell reaches every such point.
    pub fn enumerate_in_wrapped_ball(&self, center: &[f64], r: f64) -> Result<Vec<LiftedPoint>> {
        if !(r < self.alpha) {
            return Err(Error::precondition(format!(
                "wrapped-ball radius {r} must be below the period {}",
                self.alpha
            )));
        }
        self.lifted_within(center, r)
    }

    /// Every constellation point within `r` of `center`, for any `r`.
    /// Fails once more than [`LIFT_CELL_CAP`] period cells would be scanned.
    pub fn lifted_within(&self, center: &[f64], r: f64) -> Result<Vec<LiftedPoint>> {
        self.check_dim(center)?;
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::domain(format!(
                "radius must be nonnegative, got {r}"
            )));
        }
        let a = self.alpha;
        let cells: f64 = center
            .iter()
            .map(|&c| ((c + r) / a).floor() - ((c - r) / a).floor() + 1.0)
            .product();
        if cells > LIFT_CELL_CAP {
            return Err(Error::budget(
                "period cells in lifted enumeration",
                LIFT_CELL_CAP as u64,
            ));
        }
        let r_sq = r * r;
        let mut out = Vec::new();
        for (index, p) in self.points.iter().enumerate() {
            let ranges: Vec<(i64, i64)> = p
                .iter()
                .zip(center)
                .map(|(&x, &c)| {
                    (
                        ((c - r - x) / a).ceil() as i64,
                        ((c + r - x) / a).floor() as i64,
                    )
                })
                .collect();
            let mut shift = vec![0i64; self.n];
            self.lift_dfs(
                p, center, r, r_sq, &ranges, 0, 0.0, &mut shift, index, &mut out,
            );
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn lift_dfs(
        &self,
        p: &[f64],
        center: &[f64],
        r: f64,
        r_sq: f64,
        ranges: &[(i64, i64)],
        depth: usize,
        partial: f64,
        shift: &mut Vec<i64>,
        index: usize,
        out: &mut Vec<LiftedPoint>,
    ) {
        if depth == self.n {
            let point: Vec<f64> = p
                .iter()
                .zip(shift.iter())
                .map(|(&x, &k)| x + self.alpha * k as f64)
                .collect();
            if within_sq(dist_sq(&point, center), r) {
                out.push(LiftedPoint {
                    index,
                    shift: shift.clone(),
                    point,
                });
            }
            return;
        }
        let (lo, hi) = ranges[depth];
        // Widen by one so boundary points lost to rounding in the range
        // computation are still tested against the tolerant membership check.
        for k in lo - 1..=hi + 1 {
            let d = p[depth] + self.alpha * k as f64 - center[depth];
            let next = partial + d * d;
            if next > r_sq * (1.0 + MEMBERSHIP_REL_TOL) + 1e-20 {
                continue;
            }
            shift[depth] = k;
            self.lift_dfs(
                p,
                center,
                r,
                r_sq,
                ranges,
                depth + 1,
                next,
                shift,
                index,
                out,
            );
        }
    }

    /// All copies `p + αk` with every coordinate in `[−reach, α + reach]`,
    /// ordered by representative and then by shift.
    fn lift_around_cell(&self, reach: f64) -> Vec<LiftedPoint> {
        let a = self.alpha;
        let mut out = Vec::new();
        for (index, p) in self.points.iter().enumerate() {
            let axes: Vec<Vec<i64>> = p
                .iter()
                .map(|&x| {
                    let lo = ((-reach - x) / a).ceil() as i64;
                    let hi = ((a + reach - x) / a).floor() as i64;
                    (lo..=hi).collect()
                })
                .collect();
            let mut shifts: Vec<Vec<i64>> = vec![Vec::new()];
            for axis in &axes {
                shifts = shifts
                    .into_iter()
                    .flat_map(|s| {
                        axis.iter().map(move |&k| {
                            let mut t = s.clone();
                            t.push(k);
                            t
                        })
                    })
                    .collect();
            }
            for shift in shifts {
                let point = p
                    .iter()
                    .zip(&shift)
                    .map(|(&x, &k)| x + a * k as f64)
                    .collect();
                out.push(LiftedPoint {
                    index,
                    shift,
                    point,
                });
            }
        }
        out
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::precondition(format!(
                "point of dimension {} used with a constellation of dimension {}",
                x.len(),
                self.n
            )));
        }
        Ok(())
    }
}

fn wrap_coord(x: f64, alpha: f64) -> f64 {
    let w = x.rem_euclid(alpha);
    // rem_euclid can round up to α itself for tiny negative inputs.
    if w >= alpha {
        0.0
    } else {
        w
    }
}

/// `min over k ∈ {−1, 0, 1}ⁿ of ‖x − y − αk‖²`, taken per coordinate.
fn wrap_dist_sq(alpha: f64, x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| {
            let d = a - b;
            let m = d.abs().min((d - alpha).abs()).min((d + alpha).abs());
            m * m
        })
        .sum()
}

/// `M` i.i.d. uniform representatives in `[0, α)ⁿ`.
pub fn sample_ic<R: Rng + ?Sized>(
    alpha: f64,
    m: usize,
    n: usize,
    rng: &mut R,
) -> Result<PeriodicConstellation> {
    if !(alpha > 0.0) || !alpha.is_finite() || m == 0 || n == 0 {
        return Err(Error::domain(format!(
            "sample_ic needs alpha > 0, M >= 1, n >= 1 (alpha={alpha}, M={m}, n={n})"
        )));
    }
    let points = (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(0.0..alpha)).collect())
        .collect();
    PeriodicConstellation::new(alpha, points)
}

/// Number of representatives giving `r_eff/√(nN) = 2^δ`:
/// `M = αⁿ/(Vₙ·(√(nN)·2^δ)ⁿ)`, rounded to the nearest integer (at least 1).
pub fn m_for_reff_ratio(alpha: f64, n: usize, noise: f64, delta: f64) -> Result<usize> {
    if !(alpha > 0.0) || !(noise > 0.0) || n == 0 || !delta.is_finite() {
        return Err(Error::domain(format!(
            "m_for_reff_ratio needs alpha > 0, N > 0, n >= 1 (alpha={alpha}, N={noise}, n={n})"
        )));
    }
    let nf = n as f64;
    let target = nf.sqrt() * noise.sqrt() * delta.exp2();
    let ln_m = nf * (alpha.ln() - target.ln()) - ln_unit_ball_volume(n);
    let m = ln_m.exp().round();
    if m > 1e9 {
        return Err(Error::budget("constellation size", 1_000_000_000));
    }
    Ok(m.max(1.0) as usize)
}

/// Search used by [`ic_list_size`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IcSearch {
    /// Exact branch-and-bound over the lifted copies near one cell.
    Exact { node_budget: u64 },
    /// Centers on `εℤⁿ ∩ [0, α)ⁿ` with `ε = √(nN)·δ/3`.
    Net { delta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcListReport {
    pub report: ListReport,
    /// The lifted set the report indexes into.
    pub lifted: Vec<LiftedPoint>,
    /// Analytic list-size bound for the δ given, when one was supplied.
    pub analytic_bound: Option<u64>,
}

/// Worst-case number of constellation points in a radius-`√(nN)` ball.
///
/// Every ball is a translate of one centered in `[0, α)ⁿ`, so it suffices
/// to search over the copies that come within the radius of that cell.
pub fn ic_list_size(
    ic: &PeriodicConstellation,
    noise: f64,
    search: IcSearch,
    delta: Option<f64>,
) -> Result<IcListReport> {
    if !(noise > 0.0) {
        return Err(Error::domain(format!(
            "noise power must be positive, got {noise}"
        )));
    }
    let n = ic.dim();
    let r = (n as f64 * noise).sqrt();
    if !(r < ic.alpha / 2.0) {
        return Err(Error::precondition(format!(
            "noise radius {r} must be below half the period {}",
            ic.alpha
        )));
    }
    let analytic_bound = delta.map(ic_analytic_bound).transpose()?;
    let report_and_lift = match search {
        IcSearch::Exact { node_budget } => {
            let lifted = ic.lift_around_cell(r);
            let pts: Vec<Vec<f64>> = lifted.iter().map(|l| l.point.clone()).collect();
            let report = worst_case_list_size(&pts, r, SearchMode::Exact { node_budget })?;
            (report, lifted)
        }
        IcSearch::Net { delta } => {
            if !(delta > 0.0) {
                return Err(Error::domain(format!(
                    "delta must be positive, got {delta}"
                )));
            }
            let eps = r * delta / 3.0;
            let slack = eps * (n as f64).sqrt() / 2.0;
            let reach = r + slack;
            let lifted = ic.lift_around_cell(reach);
            let centers = grid_net(ic.alpha, eps, n)?;
            let mut best = (0usize, 0usize);
            for (ci, c) in centers.iter().enumerate() {
                let k = lifted
                    .iter()
                    .filter(|l| within_sq(dist_sq(&l.point, c), reach))
                    .count();
                if k > best.0 {
                    best = (k, ci);
                }
            }
            let center = centers[best.1].clone();
            let members = (0..lifted.len())
                .filter(|&i| within_sq(dist_sq(&lifted[i].point, &center), reach))
                .collect();
            let report = ListReport {
                list_size: best.0,
                witness_center: center,
                radius: r,
                mode: ReportMode::NetApproximate { slack },
                witness_members: members,
                nodes: centers.len() as u64,
            };
            (report, lifted)
        }
    };
    let (report, lifted) = report_and_lift;
    Ok(IcListReport {
        report,
        lifted,
        analytic_bound,
    })
}

/// Smallest `L` with `L + 1 > (3/δ)·log₂(12/δ)`, i.e. `⌈(3/δ)·log₂(12/δ)⌉ − 1`.
pub fn ic_analytic_bound(delta: f64) -> Result<u64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::domain(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let x = 3.0 / delta * (12.0 / delta).log2();
    Ok((x.ceil() - 1.0).max(0.0) as u64)
}

/// The second-moment lower-bound argument for random constellations with
/// `α = 4√(nN)`, `ε = √(cN)·n^{1/4}` and `c = 4δ/√(2πe)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IcLowerBoundEval {
    pub c: f64,
    pub eps: f64,
    pub alpha: f64,
    /// `log₂ M` with `M = 2^{(2−δ)n}/Vₙ`.
    pub log2_m: f64,
    /// `log₂` of `L·M·η²·2^{−nδ(L−1)} / (L^{−2L}·2^{−2nδL})`, evaluated
    /// directly from `η = ((√(nN) + √n·ε/2)/α)ⁿ·Vₙ`.
    pub log2_failure: f64,
    /// `log₂` of the closed form `L^{2L+1}/√(πn) · 2^{n(δL + log₂ δ)}`.
    pub log2_failure_asymptotic: f64,
}

/// Evaluates the lower-bound argument at finite `n`.  The variance step
/// reuses the structure of the spherical witness computation.
pub fn ic_lower_bound_eval(n: usize, noise: f64, delta: f64, l: u32) -> Result<IcLowerBoundEval> {
    if n == 0 || !(noise > 0.0) || !(delta > 0.0) || l == 0 {
        return Err(Error::domain(format!(
            "ic_lower_bound_eval needs n >= 1, N > 0, delta > 0, L >= 1 (n={n}, N={noise}, delta={delta}, L={l})"
        )));
    }
    let nf = n as f64;
    let lf = f64::from(l);
    let ln2 = std::f64::consts::LN_2;
    let c = 4.0 * delta / (2.0 * std::f64::consts::PI * std::f64::consts::E).sqrt();
    let eps = (c * noise).sqrt() * nf.powf(0.25);
    let alpha = 4.0 * (nf * noise).sqrt();
    let ln_vn = ln_unit_ball_volume(n);
    let ln_m = (2.0 - delta) * nf * ln2 - ln_vn;
    let ln_eta = nf * (((nf * noise).sqrt() + nf.sqrt() * eps / 2.0) / alpha).ln() + ln_vn;
    let ln_num = lf.ln() + ln_m + 2.0 * ln_eta - nf * delta * (lf - 1.0) * ln2;
    let ln_den = -2.0 * lf * lf.ln() - 2.0 * nf * delta * lf * ln2;
    let log2_failure = (ln_num - ln_den) / ln2;
    let log2_failure_asymptotic = (2.0 * lf + 1.0) * lf.log2()
        - 0.5 * (std::f64::consts::PI * nf).log2()
        + nf * (delta * lf + delta.log2());
    Ok(IcLowerBoundEval {
        c,
        eps,
        alpha,
        log2_m: ln_m / ln2,
        log2_failure,
        log2_failure_asymptotic,
    })
}

/// All constellation points in `B(0, √(nP))`.
pub fn intersect_ball(ic: &PeriodicConstellation, power: f64) -> Result<Vec<Vec<f64>>> {
    if !(power > 0.0) {
        return Err(Error::domain(format!(
            "power must be positive, got {power}"
        )));
    }
    let r = (ic.dim() as f64 * power).sqrt();
    let origin = vec![0.0; ic.dim()];
    Ok(ic
        .lifted_within(&origin, r)?
        .into_iter()
        .map(|l| l.point)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallRateReport {
    pub count: usize,
    /// `(√(nP)/r_eff)ⁿ`, equal to the expected count `Vₙ(√(nP))ⁿ·M/αⁿ`.
    pub expected: f64,
    pub lower: f64,
    pub upper: f64,
    pub within_band: bool,
}

/// Compares `|𝒞 ∩ B(0, √(nP))|` with `(√(nP)/r_eff)ⁿ·(1 ± δ)`.
pub fn ball_rate_check(
    ic: &PeriodicConstellation,
    power: f64,
    delta: f64,
) -> Result<BallRateReport> {
    if !(delta >= 0.0) {
        return Err(Error::domain(format!(
            "delta must be nonnegative, got {delta}"
        )));
    }
    let count = intersect_ball(ic, power)?.len();
    let n = ic.dim();
    let expected = ball_volume(n, (n as f64 * power).sqrt())? * ic.density();
    let lower = expected * (1.0 - delta);
    let upper = expected * (1.0 + delta);
    let c = count as f64;
    Ok(BallRateReport {
        count,
        expected,
        lower,
        upper,
        within_band: c >= lower && c <= upper,
    })
}

/// Largest grid size [`greedy_packing`] will allocate.
pub const GREEDY_GRID_CAP: usize = 50_000_000;

/// Greedy radius-2 packing of the torus `[0, α)ⁿ`.
///
/// Candidates are the grid points of pitch `α/⌈α/h⌉ ≤ h`.  The first grid
/// point (lexicographically) not within wrap distance 2 of a chosen point
/// is chosen next; the construction stops when every grid point is covered.
pub fn greedy_packing(alpha: f64, n: usize, resolution: f64) -> Result<PeriodicConstellation> {
    if !(alpha > 4.0) || !alpha.is_finite() {
        return Err(Error::domain(format!(
            "greedy packing needs alpha > 4, got {alpha}"
        )));
    }
    if n == 0 || n > 5 {
        return Err(Error::domain(format!(
            "greedy packing needs 1 <= n <= 5, got {n}"
        )));
    }
    if !(resolution > 0.0) || resolution > alpha {
        return Err(Error::domain(format!(
            "grid resolution must be in (0, alpha], got {resolution}"
        )));
    }
    let per_axis = (alpha / resolution * (1.0 - 1e-12)).ceil() as usize;
    let total = (per_axis as f64).powi(n as i32);
    if total > GREEDY_GRID_CAP as f64 {
        return Err(Error::budget("greedy packing grid", GREEDY_GRID_CAP as u64));
    }
    let total = total as usize;
    let pitch = alpha / per_axis as f64;
    let coord = |i: usize| i as f64 * pitch;
    let decode = |mut flat: usize| -> Vec<usize> {
        let mut idx = vec![0; n];
        for slot in idx.iter_mut().rev() {
            *slot = flat % per_axis;
            flat /= per_axis;
        }
        idx
    };
    // Grid offsets that can lie within distance 2 of a chosen grid point.
    let reach = (2.0 / pitch).ceil() as i64 + 1;
    let side = (2 * reach + 1).min(per_axis as i64);
    let mut offsets: Vec<Vec<i64>> = vec![Vec::new()];
    for _ in 0..n {
        offsets = offsets
            .into_iter()
            .flat_map(|o| {
                (0..side).map(move |k| {
                    let mut t = o.clone();
                    t.push(k - side / 2);
                    t
                })
            })
            .collect();
    }
    let mut covered = vec![false; total];
    let mut chosen: Vec<Vec<f64>> = Vec::new();
    let mut cursor = 0;
    while cursor < total {
        if covered[cursor] {
            cursor += 1;
            continue;
        }
        let idx = decode(cursor);
        let x: Vec<f64> = idx.iter().map(|&i| coord(i)).collect();
        for o in &offsets {
            let mut flat = 0usize;
            let mut y = Vec::with_capacity(n);
            for (k, &i) in idx.iter().enumerate() {
                let j = (i as i64 + o[k]).rem_euclid(per_axis as i64) as usize;
                flat = flat * per_axis + j;
                y.push(coord(j));
            }
            if !covered[flat] && wrap_dist_sq(alpha, &x, &y) < 4.0 {
                covered[flat] = true;
            }
        }
        covered[cursor] = true;
        chosen.push(x);
    }
    PeriodicConstellation::new(alpha, chosen)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimate {
    pub errors: u64,
    pub trials: u64,
    pub rate: f64,
    /// Wilson 95% interval.
    pub ci_low: f64,
    pub ci_high: f64,
}

impl ErrorEstimate {
    pub fn from_counts(errors: u64, trials: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(errors, trials);
        ErrorEstimate {
            errors,
            trials,
            rate: if trials == 0 {
                0.0
            } else {
                errors as f64 / trials as f64
            },
            ci_low,
            ci_high,
        }
    }
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let t = trials as f64;
    let p = successes as f64 / t;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / t;
    let mid = (p + z2 / (2.0 * t)) / denom;
    let half = Z95 * (p * (1.0 - p) / t + z2 / (4.0 * t * t)).sqrt() / denom;
    ((mid - half).max(0.0), (mid + half).min(1.0))
}

/// True if some constellation point other than `points[index]` itself is
/// strictly closer to `x + z` than `x` is.
///
/// Another copy of `x` is strictly closer exactly when some `|zᵢ| > α/2`;
/// any other representative is compared through the wrap-around metric.
fn decoding_error(ic: &PeriodicConstellation, index: usize, z: &[f64]) -> bool {
    let a = ic.alpha;
    let z_sq = norm_sq(z);
    let guard = z_sq * (1.0 - MEMBERSHIP_REL_TOL);
    if z.iter()
        .any(|&zi| zi.abs() > a / 2.0 * (1.0 + MEMBERSHIP_REL_TOL))
    {
        return true;
    }
    let x = &ic.points[index];
    let y: Vec<f64> = x
        .iter()
        .zip(z)
        .map(|(&xi, &zi)| wrap_coord(xi + zi, a))
        .collect();
    ic.points.iter().enumerate().any(|(j, p)| {
        if j == index {
            return false;
        }
        let mut acc = 0.0;
        for (&u, &v) in y.iter().zip(p) {
            let d = (u - v).abs();
            let m = d.min(a - d);
            acc += m * m;
            if acc >= guard {
                return false;
            }
        }
        true
    })
}

/// Monte Carlo estimate of the probability that minimum-distance decoding
/// of `x + z` fails, for a uniform representative `x` and `z ~ N(0, σ²Iₙ)`.
pub fn awgn_error_mc<R: Rng + ?Sized>(
    ic: &PeriodicConstellation,
    sigma2: f64,
    trials: u64,
    rng: &mut R,
) -> Result<ErrorEstimate> {
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(Error::domain(format!(
            "noise variance must be nonnegative, got {sigma2}"
        )));
    }
    let n = ic.dim();
    if !((n as f64 * sigma2).sqrt() < ic.alpha / 2.0) {
        return Err(Error::precondition(format!(
            "typical noise norm {} must be below half the period {}",
            (n as f64 * sigma2).sqrt(),
            ic.alpha
        )));
    }
    let sigma = sigma2.sqrt();
    let mut errors = 0;
    let mut z = vec![0.0; n];
    for _ in 0..trials {
        let index = rng.random_range(0..ic.len());
        for zi in z.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *zi = sigma * g;
        }
        if decoding_error(ic, index, &z) {
            errors += 1;
        }
    }
    Ok(ErrorEstimate::from_counts(errors, trials))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DEFAULT_NODE_BUDGET;
    use proptest::prelude::{prop, prop_assert, prop_assert_eq, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// Wrap distance over the wider shift set `{−2..2}ⁿ`.
    fn wide_wrap_dist(alpha: f64, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .map(|(&a, &b)| {
                (-2..=2)
                    .map(|k| (a - b - alpha * f64::from(k)).abs())
                    .fold(f64::INFINITY, f64::min)
                    .powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Every point `p + αk` with `k ∈ {−2..2}ⁿ` within `r` of `c`.
    fn brute_lift(ic: &PeriodicConstellation, c: &[f64], r: f64) -> Vec<(usize, Vec<i64>)> {
        let n = ic.dim();
        let mut shifts = vec![Vec::new()];
        for _ in 0..n {
            shifts = shifts
                .into_iter()
                .flat_map(|s: Vec<i64>| {
                    (-2..=2).map(move |k| {
                        let mut t = s.clone();
                        t.push(k);
                        t
                    })
                })
                .collect();
        }
        let mut out = Vec::new();
        for (i, p) in ic.points().iter().enumerate() {
            for s in &shifts {
                let q: Vec<f64> = p
                    .iter()
                    .zip(s)
                    .map(|(&x, &k)| x + ic.alpha() * k as f64)
                    .collect();
                if within_sq(dist_sq(&q, c), r) {
                    out.push((i, s.clone()));
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn effective_radius_example() {
        let ic = sample_ic(4.0, 1, 2, &mut rng(1)).unwrap();
        assert!((ic.effective_radius() - (16.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert_eq!(ic.density(), 1.0 / 16.0);
        assert!(ic.points()[0].iter().all(|&x| (0.0..4.0).contains(&x)));
    }

    #[test]
    fn m_for_ratio_hits_target() {
        let (alpha, n, noise, delta) = (8.0, 3, 1.0, 0.25);
        let m = m_for_reff_ratio(alpha, n, noise, delta).unwrap();
        let exact = alpha.powi(3)
            / (ball_volume(3, 1.0).unwrap() * ((3.0f64).sqrt() * 2f64.powf(delta)).powi(3));
        assert_eq!(m, exact.round() as usize);
        let ic = sample_ic(alpha, m, n, &mut rng(2)).unwrap();
        let ratio = ic.effective_radius() / (3.0f64).sqrt();
        assert!((ratio.log2() - delta).abs() < 0.05);
    }

    #[test]
    fn wrap_examples() {
        let ic = PeriodicConstellation::new(4.0, vec![vec![0.0, 0.0]]).unwrap();
        assert!((ic.wrap_dist(&[0.1, 0.0], &[3.9, 0.0]) - 0.2).abs() < 1e-12);
        assert_eq!(ic.wrap_dist(&[1.3, 2.2], &[1.3, 2.2]), 0.0);
    }

    #[test]
    fn wrapped_ball_needs_radius_below_period() {
        let ic = PeriodicConstellation::new(4.0, vec![vec![1.0, 1.0]]).unwrap();
        assert!(matches!(
            ic.enumerate_in_wrapped_ball(&[0.0, 0.0], 4.0),
            Err(Error::Precondition(_))
        ));
        let hits = ic.enumerate_in_wrapped_ball(&[3.9, 3.9], 1.6).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].shift, vec![1, 1]);
    }

    #[test]
    fn single_point_list_size_is_one() {
        for n in 1..=3 {
            let r = (n as f64).sqrt();
            let ic = sample_ic(4.0 * r, 1, n, &mut rng(n as u64)).unwrap();
            let rep = ic_list_size(
                &ic,
                1.0,
                IcSearch::Exact {
                    node_budget: DEFAULT_NODE_BUDGET,
                },
                Some(0.5),
            )
            .unwrap();
            assert_eq!(rep.report.list_size, 1);
            assert_eq!(rep.analytic_bound, Some(27));
        }
    }

    #[test]
    fn list_size_precondition() {
        let ic = sample_ic(2.0, 3, 2, &mut rng(3)).unwrap();
        let err = ic_list_size(&ic, 1.0, IcSearch::Exact { node_budget: 1000 }, None).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn analytic_bound_values() {
        // L + 1 > 6·log₂ 24 ≈ 27.51, so L = 27.
        assert_eq!(ic_analytic_bound(0.5).unwrap(), 27);
        for delta in [0.25_f64, 0.5, 1.0, 0.1] {
            let x = 3.0 / delta * (12.0 / delta).log2();
            let l = ic_analytic_bound(delta).unwrap() as f64;
            assert!(l + 1.0 > x && l <= x);
        }
        assert!(ic_analytic_bound(0.0).is_err());
    }

    #[test]
    fn exact_list_size_matches_grid_scan() {
        let n = 2;
        let noise = 1.0;
        let r = (2.0f64).sqrt();
        let alpha = 4.0 * r;
        let mut g = rng(11);
        for _ in 0..4 {
            let ic = sample_ic(alpha, 12, n, &mut g).unwrap();
            let rep = ic_list_size(
                &ic,
                noise,
                IcSearch::Exact {
                    node_budget: DEFAULT_NODE_BUDGET,
                },
                None,
            )
            .unwrap();
            let l = rep.report.list_size;
            // Every center is within h/√2 of a grid point of pitch h, so the
            // exact value sits between the grid maxima at r and at r + h.
            let h = 0.02;
            let steps = (alpha / h).ceil() as usize;
            let mut at_r = 0;
            let mut at_slack = 0;
            for i in 0..steps {
                for j in 0..steps {
                    let c = [i as f64 * h, j as f64 * h];
                    let near = ic.lifted_within(&c, r).unwrap().len();
                    let wide = ic.lifted_within(&c, r + h).unwrap().len();
                    at_r = at_r.max(near);
                    at_slack = at_slack.max(wide);
                }
            }
            assert!(at_r <= l && l <= at_slack, "{at_r} <= {l} <= {at_slack}");
        }
    }

    #[test]
    fn net_mode_brackets_exact() {
        let r = (2.0f64).sqrt();
        let ic = sample_ic(4.0 * r, 20, 2, &mut rng(5)).unwrap();
        let exact = ic_list_size(
            &ic,
            1.0,
            IcSearch::Exact {
                node_budget: DEFAULT_NODE_BUDGET,
            },
            None,
        )
        .unwrap()
        .report
        .list_size;
        let net = ic_list_size(&ic, 1.0, IcSearch::Net { delta: 0.5 }, None).unwrap();
        assert!(net.report.list_size >= exact);
        let ReportMode::NetApproximate { slack } = net.report.mode else {
            panic!("net mode must report its slack");
        };
        let widened = worst_case_list_size(
            &ic.lift_around_cell(r + slack)
                .into_iter()
                .map(|l| l.point)
                .collect::<Vec<_>>(),
            r + slack,
            SearchMode::exact(),
        )
        .unwrap()
        .list_size;
        assert!(net.report.list_size <= widened);
    }

    #[test]
    fn intersect_ball_single_lattice() {
        let ic = PeriodicConstellation::new(4.0, vec![vec![0.0, 0.0]]).unwrap();
        // √(2P) = 6.
        let pts = intersect_ball(&ic, 18.0).unwrap();
        let direct = (-2..=2)
            .flat_map(|a| (-2..=2).map(move |b| (a, b)))
            .filter(|&(a, b)| 16 * (a * a + b * b) <= 36)
            .count();
        assert_eq!(pts.len(), direct);
        assert_eq!(pts.len(), 9);
    }

    #[test]
    fn intersect_ball_count_matches_volume_on_average() {
        let mut g = rng(21);
        let (alpha, n, power) = (4.0, 3, 12.0);
        let mut total = 0.0;
        let seeds = 60;
        let mut expected = 0.0;
        for _ in 0..seeds {
            let ic = sample_ic(alpha, 5, n, &mut g).unwrap();
            let rep = ball_rate_check(&ic, power, 0.1).unwrap();
            total += rep.count as f64;
            expected = rep.expected;
        }
        let mean = total / seeds as f64;
        assert!(
            (mean - expected).abs() / expected < 0.05,
            "{mean} vs {expected}"
        );
    }

    #[test]
    fn oversized_ball_is_a_budget_error() {
        let ic = PeriodicConstellation::new(1.0, vec![vec![0.5; 6]]).unwrap();
        assert!(intersect_ball(&ic, 100.0).unwrap_err().is_budget());
    }

    #[test]
    fn greedy_packing_is_a_packing() {
        let ic = greedy_packing(8.0, 2, 0.05).unwrap();
        let pts = ic.points();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                assert!(ic.wrap_dist(&pts[i], &pts[j]) >= 2.0);
            }
        }
        let slack = (2.0f64).sqrt() * 0.05;
        let lower = 64.0 / ball_volume(2, 2.0 + slack).unwrap();
        assert!(pts.len() as f64 >= lower, "{} < {lower}", pts.len());
        assert!(ic.packing_radius() / ic.effective_radius() >= 0.45);
    }

    #[test]
    fn greedy_packing_domain() {
        assert!(greedy_packing(4.0, 2, 0.1).is_err());
        assert!(greedy_packing(8.0, 6, 0.1).is_err());
    }

    #[test]
    fn wilson_interval_contains_rate() {
        let (lo, hi) = wilson_interval(5, 100);
        assert!(lo < 0.05 && 0.05 < hi);
        assert_eq!(wilson_interval(0, 10).0, 0.0);
        let (lo, hi) = wilson_interval(10, 10);
        assert!(lo > 0.6 && (hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn awgn_single_point_matches_coordinate_tail() {
        // With one representative the only competitors are its own copies,
        // which win exactly when some |zᵢ| exceeds α/2.
        let (alpha, n, sigma2) = (4.0, 3, 1.0);
        let ic = PeriodicConstellation::new(alpha, vec![vec![1.0; n]]).unwrap();
        let est = awgn_error_mc(&ic, sigma2, 40_000, &mut rng(8)).unwrap();
        let std = Normal::new(0.0, 1.0).unwrap();
        let q = 1.0 - std.cdf(alpha / 2.0);
        let p = 1.0 - (1.0 - 2.0 * q).powi(n as i32);
        assert!(est.ci_low <= p && p <= est.ci_high, "{p} not in {est:?}");
        // Never more than the chance that the noise leaves the half-period ball.
        let chi = statrs::distribution::ChiSquared::new(n as f64).unwrap();
        let tail = 1.0 - chi.cdf(alpha * alpha / 4.0 / sigma2);
        assert!(p <= tail);
    }

    #[test]
    fn awgn_vanishes_for_tiny_noise() {
        let ic = sample_ic(8.0, 4, 2, &mut rng(9)).unwrap();
        let est = awgn_error_mc(&ic, 1e-8, 2000, &mut rng(10)).unwrap();
        assert_eq!(est.errors, 0);
    }

    #[test]
    fn awgn_precondition() {
        let ic = sample_ic(2.0, 4, 2, &mut rng(9)).unwrap();
        assert!(awgn_error_mc(&ic, 1.0, 10, &mut rng(1)).is_err());
    }

    #[test]
    fn decoding_error_agrees_with_enumeration() {
        let mut g = rng(13);
        let ic = sample_ic(6.0, 10, 2, &mut g).unwrap();
        for _ in 0..500 {
            let index = g.random_range(0..ic.len());
            let z: Vec<f64> = (0..2)
                .map(|_| 1.2 * g.sample::<f64, _>(StandardNormal))
                .collect();
            let x = &ic.points()[index];
            let y: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a + b).collect();
            let z_sq = norm_sq(&z);
            let by_enum = ic.lifted_within(&y, z_sq.sqrt()).unwrap().iter().any(|l| {
                !(l.index == index && l.shift.iter().all(|&k| k == 0))
                    && dist_sq(&l.point, &y) < z_sq * (1.0 - MEMBERSHIP_REL_TOL)
            });
            assert_eq!(decoding_error(&ic, index, &z), by_enum);
        }
    }

    #[test]
    fn lower_bound_eval_matches_closed_form_trend() {
        let e = ic_lower_bound_eval(400, 1.0, 0.1, 5).unwrap();
        assert!(
            (e.c - 0.4 / (2.0 * std::f64::consts::PI * std::f64::consts::E).sqrt()).abs() < 1e-15
        );
        // Below (1/δ)·log₂(1/δ) the closed form has a negative exponent.
        assert!(e.log2_failure_asymptotic < 0.0);
        assert!(e.log2_failure < 0.0);
        // The closed form drops the `1` in `(1 + √c·n^{1/4}/2)²`, so at finite
        // n it undershoots the direct evaluation.
        assert!(e.log2_failure_asymptotic < e.log2_failure);
    }

    proptest! {
        #[test]
        fn wrap_dist_matches_wider_shifts(
            xs in prop::collection::vec(0.0f64..5.0, 6),
        ) {
            let ic = PeriodicConstellation::new(5.0, vec![vec![0.0; 3]]).unwrap();
            let (x, y) = xs.split_at(3);
            prop_assert!((ic.wrap_dist(x, y) - wide_wrap_dist(5.0, x, y)).abs() < 1e-12);
        }

        #[test]
        fn wrap_dist_is_a_metric(xs in prop::collection::vec(0.0f64..3.0, 9)) {
            let ic = PeriodicConstellation::new(3.0, vec![vec![0.0; 3]]).unwrap();
            let (x, rest) = xs.split_at(3);
            let (y, z) = rest.split_at(3);
            prop_assert!((ic.wrap_dist(x, y) - ic.wrap_dist(y, x)).abs() < 1e-15);
            prop_assert!(ic.wrap_dist(x, x) == 0.0);
            prop_assert!(ic.wrap_dist(x, z) <= ic.wrap_dist(x, y) + ic.wrap_dist(y, z) + 1e-12);
        }

        #[test]
        fn lifting_matches_brute_force(
            seed in 0u64..1000,
            n in 1usize..4,
            r in 0.1f64..3.9,
            c in prop::collection::vec(-2.0f64..6.0, 3),
        ) {
            let ic = sample_ic(4.0, 6, n, &mut rng(seed)).unwrap();
            let center = &c[..n];
            let mut got: Vec<(usize, Vec<i64>)> = ic
                .enumerate_in_wrapped_ball(center, r)
                .unwrap()
                .into_iter()
                .map(|l| (l.index, l.shift))
                .collect();
            got.sort();
            // Shifts beyond ±2 cannot reach a center in [−2, 6) at r < 4.
            prop_assert_eq!(got, brute_lift(&ic, center, r));
        }

        #[test]
        fn list_size_is_translation_invariant(
            seed in 0u64..500,
            t in prop::collection::vec(0.0f64..6.0, 2),
        ) {
            let r = (2.0f64).sqrt();
            let alpha = 4.0 * r;
            let ic = sample_ic(alpha, 10, 2, &mut rng(seed)).unwrap();
            let moved = PeriodicConstellation::new(
                alpha,
                ic.points()
                    .iter()
                    .map(|p| vec![p[0] + t[0], p[1] + t[1]])
                    .collect(),
            )
            .unwrap();
            let mode = IcSearch::Exact { node_budget: DEFAULT_NODE_BUDGET };
            let a = ic_list_size(&ic, 1.0, mode, None).unwrap().report.list_size;
            let b = ic_list_size(&moved, 1.0, mode, None).unwrap().report.list_size;
            prop_assert_eq!(a, b);
        }
    }
}
