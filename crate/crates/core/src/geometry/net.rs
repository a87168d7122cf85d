use rand::Rng;

use super::{dist_sq, random_sphere_point, within_sq};
use crate::error::{Error, Result};

/// Which family of centers a net-mode search uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NetKind {
    /// Random covering of the sphere of the given radius about the origin.
    Sphere { radius: f64 },
    /// The grid `εℤⁿ` clipped to the bounding box of the code, widened by
    /// the search radius.
    CubeGrid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetSpec {
    pub eps: f64,
    pub kind: NetKind,
}

impl NetSpec {
    pub fn new(eps: f64, kind: NetKind) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::domain(format!(
                "net resolution must be positive, got {eps}"
            )));
        }
        if let NetKind::Sphere { radius } = kind {
            if !(radius > 0.0) {
                return Err(Error::domain(format!(
                    "sphere net radius must be positive, got {radius}"
                )));
            }
        }
        Ok(NetSpec { eps, kind })
    }

    /// Covering radius of the net in dimension `n`: every point of the
    /// covered region is this close to some net point.
    pub fn slack(&self, n: usize) -> f64 {
        match self.kind {
            NetKind::Sphere { .. } => self.eps,
            NetKind::CubeGrid => self.eps * (n as f64).sqrt() / 2.0,
        }
    }
}

/// Random covering of a sphere with its Monte Carlo certificate.
#[derive(Debug, Clone)]
pub struct SphereNet {
    pub points: Vec<Vec<f64>>,
    /// Probe points drawn across all certification rounds.
    pub probes_drawn: usize,
    /// Probe points that were not covered when drawn (each became a net point).
    pub probe_failures: usize,
}

/// Probe points that must all be covered in one round to certify a net.
pub const SPHERE_NET_PROBES: usize = 1000;
/// Default cap on sphere-net size.
pub const SPHERE_NET_CAP: usize = 200_000;

/// Random `eps`-covering of `S^{n−1}(0, radius)`.
///
/// Rounds of [`SPHERE_NET_PROBES`] uniform probes are drawn; uncovered probes
/// join the net.  The net is returned after the first round with no
/// uncovered probe.  Fails once the net would exceed `cap` points.
pub fn sphere_net<R: Rng + ?Sized>(
    n: usize,
    radius: f64,
    eps: f64,
    cap: usize,
    rng: &mut R,
) -> Result<SphereNet> {
    if n == 0 || !(radius > 0.0) || !(eps > 0.0) {
        return Err(Error::domain(format!(
            "sphere_net needs n >= 1, radius > 0, eps > 0 (n={n}, radius={radius}, eps={eps})"
        )));
    }
    let mut net: Vec<Vec<f64>> = Vec::new();
    let mut drawn = 0;
    let mut failures = 0;
    loop {
        let mut round_failures = 0;
        for _ in 0..SPHERE_NET_PROBES {
            let p = random_sphere_point(n, radius, rng);
            drawn += 1;
            if !net.iter().any(|y| within_sq(dist_sq(y, &p), eps)) {
                if net.len() >= cap {
                    return Err(Error::budget("sphere net size", cap as u64));
                }
                net.push(p);
                round_failures += 1;
            }
        }
        failures += round_failures;
        if round_failures == 0 {
            return Ok(SphereNet {
                points: net,
                probes_drawn: drawn,
                probe_failures: failures,
            });
        }
    }
}

/// The grid `εℤⁿ ∩ [0, α)ⁿ`, in lexicographic order.
pub fn grid_net(alpha: f64, eps: f64, n: usize) -> Result<Vec<Vec<f64>>> {
    if !(eps > 0.0) || !(alpha > 0.0) || eps > alpha || n == 0 {
        return Err(Error::domain(format!(
            "grid_net needs 0 < eps <= alpha and n >= 1 (alpha={alpha}, eps={eps}, n={n})"
        )));
    }
    // Points kε with kε < α, allowing for ε dividing α up to rounding.
    let per_axis = ((alpha / eps) * (1.0 - 1e-12)).ceil() as usize;
    let total = (per_axis as f64).powi(n as i32);
    if total > 5e7 {
        return Err(Error::budget("grid net size", 50_000_000));
    }
    let axis: Vec<f64> = (0..per_axis).map(|k| k as f64 * eps).collect();
    Ok(cartesian(&[axis.as_slice()].repeat(n)))
}

/// Lexicographic cartesian product of per-axis coordinate lists.
pub(crate) fn cartesian(axes: &[&[f64]]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::with_capacity(axes.len())];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for &x in axis.iter() {
                let mut p = prefix.clone();
                p.push(x);
                next.push(p);
            }
        }
        out = next;
    }
    out
}
