//! Random spherical codes, radial projection of ball codes, randomized
//! list-size attacks and the second-moment witness count.

use rand::Rng;
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::geometry::{
    count_within, dist_sq, ln_cap_fraction, min_enclosing_ball_of, norm_sq, random_sphere_point,
    within_sq, ChannelParams, ListReport, ReportMode, MEMBERSHIP_REL_TOL,
};

/// Largest `n·R` accepted by [`sample_spherical`].
pub const MAX_LOG2_CODEBOOK: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SphericalCode {
    n: usize,
    power: f64,
    rate: f64,
    points: Vec<Vec<f64>>,
}

impl SphericalCode {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Rate the codebook size was derived from, in bits per dimension.
    pub fn rate(&self) -> f64 {
        self.rate
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

    pub fn radius(&self) -> f64 {
        (self.n as f64 * self.power).sqrt()
    }
}

fn check_code_args(n: usize, power: f64) -> Result<()> {
    if n == 0 || !(power > 0.0) || !power.is_finite() {
        return Err(Error::domain(format!(
            "spherical codes need n >= 1 and P > 0 (n={n}, P={power})"
        )));
    }
    Ok(())
}

/// `M = ⌊2^{nR}⌋` i.i.d. uniform points on `S^{n−1}(0, √(nP))`.
pub fn sample_spherical<R: Rng + ?Sized>(
    n: usize,
    power: f64,
    rate: f64,
    rng: &mut R,
) -> Result<SphericalCode> {
    check_code_args(n, power)?;
    if !(rate >= 0.0) {
        return Err(Error::domain(format!(
            "rate must be nonnegative, got {rate}"
        )));
    }
    let log2_m = n as f64 * rate;
    if log2_m > MAX_LOG2_CODEBOOK {
        return Err(Error::budget(
            "spherical codebook size (log2)",
            MAX_LOG2_CODEBOOK as u64,
        ));
    }
    let m = (log2_m.exp2().floor() as usize).max(1);
    let mut code = sample_spherical_size(n, power, m, rng)?;
    code.rate = rate;
    Ok(code)
}

/// `m` i.i.d. uniform points on `S^{n−1}(0, √(nP))`.
pub fn sample_spherical_size<R: Rng + ?Sized>(
    n: usize,
    power: f64,
    m: usize,
    rng: &mut R,
) -> Result<SphericalCode> {
    check_code_args(n, power)?;
    if m == 0 {
        return Err(Error::domain("a code needs at least one point"));
    }
    let radius = (n as f64 * power).sqrt();
    let points = (0..m)
        .map(|_| random_sphere_point(n, radius, rng))
        .collect();
    Ok(SphericalCode {
        n,
        power,
        rate: (m as f64).log2() / n as f64,
        points,
    })
}

/// Maps each `x` to `x·√(nP)/‖x‖`.
pub fn project_to_sphere(ball_code: &[Vec<f64>], power: f64) -> Result<SphericalCode> {
    let Some(first) = ball_code.first() else {
        return Err(Error::domain("cannot project an empty code"));
    };
    let n = first.len();
    check_code_args(n, power)?;
    if ball_code.iter().any(|x| x.len() != n) {
        return Err(Error::precondition("codewords have mixed dimensions"));
    }
    let zeros: Vec<usize> = (0..ball_code.len())
        .filter(|&i| norm_sq(&ball_code[i]) == 0.0)
        .collect();
    if !zeros.is_empty() {
        return Err(Error::precondition(format!(
            "zero vectors have no radial image (indices {zeros:?})"
        )));
    }
    let radius = (n as f64 * power).sqrt();
    let points = ball_code
        .iter()
        .map(|x| {
            let norm = norm_sq(x).sqrt();
            if (norm - radius).abs() <= MEMBERSHIP_REL_TOL * radius {
                x.clone()
            } else {
                x.iter().map(|v| v * radius / norm).collect()
            }
        })
        .collect();
    Ok(SphericalCode {
        n,
        power,
        rate: (ball_code.len() as f64).log2() / n as f64,
        points,
    })
}

/// Center-selection strategy for [`spherical_list_mc`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Attack {
    /// Uniform direction, radius uniform on the annulus
    /// `[√(nP) − √(nN), √(nP) + √(nN)]`.
    RandomCap,
    /// `y = x + s` for a random codeword `x` and `s` uniform on the sphere
    /// of radius `√(nN)`.
    CodewordSeeded,
    /// Codeword-seeded, and every new best cluster is recentered at its
    /// minimal enclosing ball and grown greedily.
    MebRefined,
}

impl Attack {
    pub const ALL: [Attack; 3] = [
        Attack::RandomCap,
        Attack::CodewordSeeded,
        Attack::MebRefined,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Attack::RandomCap => "random-cap",
            Attack::CodewordSeeded => "codeword-seeded",
            Attack::MebRefined => "meb-refined",
        }
    }
}

impl std::str::FromStr for Attack {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Attack::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown attack strategy {s:?}")))
    }
}

fn members(points: &[Vec<f64>], center: &[f64], r: f64) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| within_sq(dist_sq(&points[i], center), r))
        .collect()
}

/// Recenters `cluster` at its minimal enclosing ball, then repeatedly adds
/// the codeword nearest the current center whose inclusion keeps the
/// enclosing radius within `r`.  Returns the final center.
fn refine(points: &[Vec<f64>], cluster: &[usize], r: f64) -> Result<Vec<f64>> {
    let mut chosen: Vec<usize> = cluster.to_vec();
    let refs: Vec<&[f64]> = chosen.iter().map(|&i| points[i].as_slice()).collect();
    let mut center = min_enclosing_ball_of(&refs)?.center;
    loop {
        let mut outside: Vec<(f64, usize)> = (0..points.len())
            .filter(|i| !chosen.contains(i))
            .map(|i| (dist_sq(&points[i], &center), i))
            .collect();
        outside.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut grown = false;
        for (_, i) in outside {
            let mut trial: Vec<&[f64]> = chosen.iter().map(|&j| points[j].as_slice()).collect();
            trial.push(&points[i]);
            let ball = min_enclosing_ball_of(&trial)?;
            if within_sq(ball.radius * ball.radius, r) {
                chosen.push(i);
                center = ball.center;
                grown = true;
                break;
            }
            if ball.radius > 2.0 * r {
                break;
            }
        }
        if !grown {
            return Ok(center);
        }
    }
}

/// Largest `|code ∩ B(y, √(nN))|` found over `budget` attack centers.
///
/// The result is a lower bound on the worst-case list size.  Each center is
/// drawn from `rng` in sequence and the running maximum is kept, so a larger
/// budget on the same stream never reports less.
pub fn spherical_list_mc<R: Rng + ?Sized>(
    code: &SphericalCode,
    noise: f64,
    attack: Attack,
    budget: u64,
    rng: &mut R,
) -> Result<ListReport> {
    if !(noise > 0.0) {
        return Err(Error::domain(format!(
            "noise power must be positive, got {noise}"
        )));
    }
    if budget == 0 {
        return Err(Error::domain("attack budget must be at least 1"));
    }
    let n = code.dim();
    let pts = code.points();
    let r = (n as f64 * noise).sqrt();
    let big = code.radius();
    let mut best_center = pts[0].clone();
    let mut best = count_within(pts, &best_center, r);
    for _ in 0..budget {
        let center = match attack {
            Attack::RandomCap => {
                let lo = (big - r).max(0.0);
                let rho = rng.random_range(lo..=big + r);
                random_sphere_point(n, rho, rng)
            }
            Attack::CodewordSeeded | Attack::MebRefined => {
                let x = &pts[rng.random_range(0..pts.len())];
                let s = random_sphere_point(n, r, rng);
                x.iter().zip(&s).map(|(a, b)| a + b).collect()
            }
        };
        let k = count_within(pts, &center, r);
        if k > best {
            best = k;
            best_center = center;
            if attack == Attack::MebRefined {
                let cluster = members(pts, &best_center, r);
                let refined = refine(pts, &cluster, r)?;
                let k = count_within(pts, &refined, r);
                if k > best {
                    best = k;
                    best_center = refined;
                }
            }
        }
    }
    Ok(ListReport {
        list_size: best,
        witness_members: members(pts, &best_center, r),
        witness_center: best_center,
        radius: r,
        mode: ReportMode::SearchLowerBound,
        nodes: budget,
    })
}

/// Second-moment bounds on the witness count `W`, all logarithms natural.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessStats {
    /// `ln((M/L)^L·|𝒴|·μ^L)`.
    pub ln_e_w_lower: f64,
    /// `ln(|𝒴|²·L·M^L·μ^{L+1})`.
    pub ln_var_w_upper: f64,
    /// Cap fraction `μ`; zero when it underflows.
    pub mu: f64,
    pub ln_mu: f64,
    /// `ln M` with `M = ⌊2^{nR}⌋`.
    pub ln_m: f64,
    pub l: u32,
    /// `ln |𝒴|` for a volumetric `√(nε)`-net of `S^{n−1}(0, √(n(P − N)))`,
    /// `|𝒴| ≤ (1 + 2√((P − N)/ε))ⁿ`.
    pub ln_net_size: f64,
    /// `ln(L^{2L+1}·μ^{−L+1}·M^{−L})`, the bound on `Var W / E[W]²`.
    pub ln_failure_bound: f64,
    /// `C/δ`; below it the failure bound vanishes with `n`.
    pub l_threshold: f64,
}

impl WitnessStats {
    /// Failure-bound exponent per dimension in bits.
    pub fn failure_exponent_per_dim(&self, n: usize) -> f64 {
        self.ln_failure_bound / (n as f64 * std::f64::consts::LN_2)
    }
}

/// `ln ⌊2^x⌋` for `x ≥ 0`, exact while `2^x` fits a double's integer range.
fn ln_floor_exp2(x: f64) -> f64 {
    if x < 52.0 {
        x.exp2().floor().max(1.0).ln()
    } else {
        x * std::f64::consts::LN_2
    }
}

/// Witness-count bounds for a random spherical code at rate `C − δ`.
pub fn witness_bounds(channel: &ChannelParams, l: u32, eps: f64) -> Result<WitnessStats> {
    if l == 0 {
        return Err(Error::domain("witness bounds need L >= 1"));
    }
    if !(eps > 0.0) {
        return Err(Error::domain(format!(
            "net parameter must be positive, got {eps}"
        )));
    }
    let (n, p, nn) = (channel.n, channel.power, channel.noise);
    if !(nn < p) {
        return Err(Error::domain(format!(
            "witness bounds need N < P (P={p}, N={nn})"
        )));
    }
    let nf = n as f64;
    let lf = f64::from(l);
    let ln_mu = ln_cap_fraction(n, p, nn)?;
    let ln_m = ln_floor_exp2(nf * channel.rate.max(0.0));
    let ln_net_size = nf * (1.0 + 2.0 * ((p - nn) / eps).sqrt()).ln();
    let ln_e_w_lower = lf * (ln_m - lf.ln()) + ln_net_size + lf * ln_mu;
    let ln_var_w_upper = 2.0 * ln_net_size + lf.ln() + lf * ln_m + (lf + 1.0) * ln_mu;
    let ln_failure_bound = (2.0 * lf + 1.0) * lf.ln() + (1.0 - lf) * ln_mu - lf * ln_m;
    Ok(WitnessStats {
        ln_e_w_lower,
        ln_var_w_upper,
        mu: ln_mu.exp(),
        ln_mu,
        ln_m,
        l,
        ln_net_size,
        ln_failure_bound,
        l_threshold: channel.capacity() / channel.delta,
    })
}

/// Largest net accepted by [`empirical_witness`].
pub const WITNESS_NET_CAP: usize = 10_000;
/// Largest code accepted by [`empirical_witness`].
pub const WITNESS_CODE_CAP: usize = 64;
/// Largest `L` accepted by [`empirical_witness`].
pub const WITNESS_L_CAP: u32 = 3;

/// `W = Σ_{y ∈ net} #{L-subsets of the code inside B(y, √(nN))}`.
pub fn empirical_witness(
    code: &SphericalCode,
    noise: f64,
    net: &[Vec<f64>],
    l: u32,
) -> Result<u128> {
    if code.len() > WITNESS_CODE_CAP {
        return Err(Error::budget("witness code size", WITNESS_CODE_CAP as u64));
    }
    if l == 0 || l > WITNESS_L_CAP {
        return Err(Error::budget(
            "witness subset size",
            u64::from(WITNESS_L_CAP),
        ));
    }
    if net.len() > WITNESS_NET_CAP {
        return Err(Error::budget("witness net size", WITNESS_NET_CAP as u64));
    }
    if !(noise > 0.0) {
        return Err(Error::domain(format!(
            "noise power must be positive, got {noise}"
        )));
    }
    let r = (code.dim() as f64 * noise).sqrt();
    Ok(net
        .iter()
        .map(|y| binomial(count_within(code.points(), y, r) as u64, u64::from(l)))
        .sum())
}

fn binomial(k: u64, l: u64) -> u128 {
    if l > k {
        return 0;
    }
    (0..l).fold(1u128, |acc, i| acc * u128::from(k - i) / u128::from(i + 1))
}

/// Witness counts over independent codes sharing one net.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessSample {
    pub values: Vec<u128>,
    pub mean: f64,
    pub variance: f64,
    /// `ln(C(M, L)·|net|·μ^L)`, the exact mean for a net on the sphere of
    /// radius `√(n(P − N))`.
    pub ln_exact_mean: f64,
}

/// Draws one code of `m` points per generator in `rngs` and evaluates `W`
/// on the given net.
pub fn witness_sample<R: Rng>(
    n: usize,
    power: f64,
    noise: f64,
    m: usize,
    l: u32,
    net: &[Vec<f64>],
    rngs: impl IntoIterator<Item = R>,
) -> Result<WitnessSample> {
    let mut values = Vec::new();
    for mut rng in rngs {
        let code = sample_spherical_size(n, power, m, &mut rng)?;
        values.push(empirical_witness(&code, noise, net, l)?);
    }
    if values.is_empty() {
        return Err(Error::domain("witness sample needs at least one seed"));
    }
    let k = values.len() as f64;
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / k;
    let variance = if values.len() > 1 {
        values
            .iter()
            .map(|&v| (v as f64 - mean).powi(2))
            .sum::<f64>()
            / (k - 1.0)
    } else {
        0.0
    };
    let ln_exact_mean = ln_binomial(m as u64, u64::from(l))
        + (net.len() as f64).ln()
        + f64::from(l) * ln_cap_fraction(n, power, noise)?;
    Ok(WitnessSample {
        values,
        mean,
        variance,
        ln_exact_mean,
    })
}
