use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::meb::{min_enclosing_ball_of, Ball};
use super::net::{cartesian, sphere_net, NetKind, NetSpec, SPHERE_NET_CAP};
use super::{dist_sq, within_sq};
use crate::error::{Error, Result};

/// Default node budget for the exact search.
pub const DEFAULT_NODE_BUDGET: u64 = 20_000_000;

/// How a [`ListReport`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReportMode {
    Exact,
    /// Maximum over net centers, counting points within `radius + slack`.
    NetApproximate {
        slack: f64,
    },
    /// Best count found by a randomized search; a lower bound on the true
    /// worst case.
    SearchLowerBound,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SearchMode {
    Exact { node_budget: u64 },
    Net { spec: NetSpec, seed: u64 },
}

impl SearchMode {
    pub fn exact() -> Self {
        SearchMode::Exact {
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

/// Worst-case list size of a finite code together with a witness.
#[derive(Debug, Clone, PartialEq)]
pub struct ListReport {
    pub list_size: usize,
    pub witness_center: Vec<f64>,
    pub radius: f64,
    pub mode: ReportMode,
    /// Indices into the searched point set, ascending.
    pub witness_members: Vec<usize>,
    /// Branch-and-bound nodes visited (exact) or centers scanned (net).
    pub nodes: u64,
}

/// Number of points within `r` of `center`.
pub fn count_within(points: &[Vec<f64>], center: &[f64], r: f64) -> usize {
    points
        .iter()
        .filter(|p| within_sq(dist_sq(p, center), r))
        .count()
}

/// Largest number of `points` that fit in one closed ball of radius `r`.
pub fn worst_case_list_size(points: &[Vec<f64>], r: f64, mode: SearchMode) -> Result<ListReport> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(format!("radius must be positive, got {r}")));
    }
    if let Some(first) = points.first() {
        let d = first.len();
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::precondition("points have mixed dimensions"));
        }
    }
    match mode {
        SearchMode::Exact { node_budget } => exact_search(points, r, node_budget),
        SearchMode::Net { spec, seed } => net_search(points, r, spec, seed),
    }
}

/// Regular grid of centers with the given pitch covering the bounding box
/// of the code widened by `r`.
fn grid_centers(points: &[Vec<f64>], r: f64, pitch: f64) -> Result<Vec<Vec<f64>>> {
    let Some(first) = points.first() else {
        return Ok(Vec::new());
    };
    let d = first.len();
    let mut axes = Vec::with_capacity(d);
    let mut total = 1f64;
    for k in 0..d {
        let lo = points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min) - r;
        let hi = points
            .iter()
            .map(|p| p[k])
            .fold(f64::NEG_INFINITY, f64::max)
            + r;
        let a = (lo / pitch).floor() as i64;
        let b = (hi / pitch).ceil() as i64;
        total *= (b - a + 1) as f64;
        axes.push((a..=b).map(|i| i as f64 * pitch).collect::<Vec<_>>());
    }
    if total > 5e7 {
        return Err(Error::budget("grid centers", 50_000_000));
    }
    let refs: Vec<&[f64]> = axes.iter().map(|a| a.as_slice()).collect();
    Ok(cartesian(&refs))
}

fn net_search(points: &[Vec<f64>], r: f64, spec: NetSpec, seed: u64) -> Result<ListReport> {
    let d = points.first().map_or(0, |p| p.len());
    let slack = spec.slack(d);
    let centers = match spec.kind {
        NetKind::CubeGrid => grid_centers(points, r, spec.eps)?,
        NetKind::Sphere { radius } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sphere_net(d, radius, spec.eps, SPHERE_NET_CAP, &mut rng)?.points
        }
    };
    let reach = r + slack;
    let mut best: Option<(usize, &Vec<f64>)> = None;
    for c in &centers {
        let k = count_within(points, c, reach);
        if best.is_none_or(|(b, _)| k > b) {
            best = Some((k, c));
        }
    }
    let (list_size, center) = match best {
        Some((k, c)) => (k, c.clone()),
        None => (0, vec![0.0; d]),
    };
    let members = (0..points.len())
        .filter(|&i| within_sq(dist_sq(&points[i], &center), reach))
        .collect();
    Ok(ListReport {
        list_size,
        witness_center: center,
        radius: r,
        mode: ReportMode::NetApproximate { slack },
        witness_members: members,
        nodes: centers.len() as u64,
    })
}

struct Search<'a> {
    points: &'a [Vec<f64>],
    r: f64,
    adj: Vec<u64>,
    words: usize,
    best: Vec<usize>,
    best_ball: Ball,
    nodes: u64,
    budget: u64,
}

impl Search<'_> {
    fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    fn fits(&self, set: &[usize]) -> Option<Ball> {
        let refs: Vec<&[f64]> = set.iter().map(|&i| self.points[i].as_slice()).collect();
        let ball = min_enclosing_ball_of(&refs).ok()?;
        within_sq(ball.radius * ball.radius, self.r).then_some(ball)
    }

    fn record(&mut self, set: &[usize], ball: &Ball) {
        if set.len() > self.best.len() {
            self.best = set.to_vec();
            self.best_ball = ball.clone();
        }
    }

    fn grow(&mut self, set: &mut Vec<usize>, ball: &Ball, cands: &[usize]) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            return false;
        }
        self.record(set, ball);
        if set.len() + cands.len() <= self.best.len() {
            return true;
        }
        for (k, &c) in cands.iter().enumerate() {
            if set.len() + cands.len() - k <= self.best.len() {
                break;
            }
            set.push(c);
            let next = if ball.contains(&self.points[c]) {
                Some(ball.clone())
            } else {
                self.fits(set)
            };
            if let Some(nb) = next {
                let rest: Vec<usize> = cands[k + 1..]
                    .iter()
                    .copied()
                    .filter(|&j| self.adjacent(c, j))
                    .collect();
                if !self.grow(set, &nb, &rest) {
                    set.pop();
                    return false;
                }
            }
            set.pop();
        }
        true
    }

    fn report(&self) -> ListReport {
        let mut members = self.best.clone();
        members.sort_unstable();
        ListReport {
            list_size: members.len(),
            witness_center: self.best_ball.center.clone(),
            radius: self.r,
            mode: ReportMode::Exact,
            witness_members: members,
            nodes: self.nodes,
        }
    }
}

fn exact_search(points: &[Vec<f64>], r: f64, budget: u64) -> Result<ListReport> {
    let m = points.len();
    let Some(first) = points.first() else {
        return Ok(ListReport {
            list_size: 0,
            witness_center: Vec::new(),
            radius: r,
            mode: ReportMode::Exact,
            witness_members: Vec::new(),
            nodes: 0,
        });
    };
    let words = m.div_ceil(64);
    let mut adj = vec![0u64; m * words];
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); m];
    for i in 0..m {
        for j in i + 1..m {
            if within_sq(dist_sq(&points[i], &points[j]), 2.0 * r) {
                adj[i * words + j / 64] |= 1 << (j % 64);
                adj[j * words + i / 64] |= 1 << (i % 64);
                neighbors[i].push(j);
                neighbors[j].push(i);
            }
        }
    }
    let mut s = Search {
        points,
        r,
        adj,
        words,
        best: vec![0],
        best_ball: Ball {
            center: first.clone(),
            radius: 0.0,
        },
        nodes: 0,
        budget,
    };

    // Greedy seeding: grow from each point through its nearest neighbours.
    for i in 0..m {
        let mut order = neighbors[i].clone();
        order.sort_by(|&a, &b| {
            dist_sq(&points[i], &points[a]).total_cmp(&dist_sq(&points[i], &points[b]))
        });
        let mut set = vec![i];
        let mut ball = Ball {
            center: points[i].clone(),
            radius: 0.0,
        };
        for j in order {
            if !set.iter().all(|&k| s.adjacent(k, j)) {
                continue;
            }
            set.push(j);
            match s.fits(&set) {
                Some(b) => ball = b,
                None => {
                    set.pop();
                }
            }
        }
        s.record(&set, &ball);
    }

    // Anchor each search at its smallest index.
    for i in 0..m {
        let cands: Vec<usize> = neighbors[i].iter().copied().filter(|&j| j > i).collect();
        if cands.len() < s.best.len() {
            continue;
        }
        let ball = Ball {
            center: points[i].clone(),
            radius: 0.0,
        };
        if !s.grow(&mut vec![i], &ball, &cands) {
            return Err(Error::SearchBudget {
                nodes: s.nodes,
                best: Box::new(s.report()),
            });
        }
    }
    Ok(s.report())
}
