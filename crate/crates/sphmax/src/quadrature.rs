//! Quadrature on unit spheres and balls.
//!
//! Two families of rules coexist:
//!
//! * Monte Carlo rules (uniform nodes, uniform weights), reproducible from a
//!   64-bit seed, with statistical error estimates;
//! * deterministic tensor product rules in low dimension, with polynomial
//!   moment exactness.
//!
//! Sphere rules carry an explicit measure convention. `Probability` rules
//! have weights summing to one and compute means; `SurfaceArea` rules have
//! weights summing to the total surface measure of the sphere. Ball rules
//! always carry volume weights. The slicing identity
//!
//! ```text
//! int_{S^{mn-1}} F dsigma
//!   = int_{B^{kn}} r_Y^{(m-k)n-1} [ int_{S^{(m-k)n-1}} F(Y, r_Y W) dsigma(W) ] / r_Y  dY,
//! ```
//!
//! with `r_Y = sqrt(1 - |Y|^2)`, decomposes a surface integral over the big
//! sphere into a ball integral over the first `kn` coordinates and dilated
//! sphere integrals over the rest; `slice_integrate` evaluates its right-hand
//! side.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gauss::{gauss_chebyshev2, gauss_legendre, gauss_legendre_on, pairwise_sum};
use crate::rng;

/// Which measure the weights of a sphere rule represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Convention {
    /// Weights sum to 1; integration computes the mean over the sphere.
    Probability,
    /// Weights sum to the surface area of the sphere.
    SurfaceArea,
}

/// How a rule was constructed. Rules with equal provenance (and dimension)
/// have bit-identical nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Provenance {
    MonteCarlo { seed: u64, count: usize },
    ProductRule { order: usize },
}

/// Quadrature nodes on the unit sphere `S^{d-1}` in `R^d`.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    dim: usize,
    /// Flat node storage, `len = count * dim`.
    nodes: Vec<f64>,
    weights: Vec<f64>,
    convention: Convention,
    provenance: Provenance,
}

/// Quadrature nodes strictly inside the unit ball `B^d`, volume weights.
#[derive(Debug, Clone)]
pub struct BallQuadrature {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    provenance: Provenance,
}

/// Outcome of a numerical integration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EstimateResult {
    pub value: f64,
    /// Statistical standard error; 0 for deterministic rules.
    pub std_error: f64,
    /// Number of integrand evaluations behind the estimate.
    pub node_count: usize,
    /// Nodes skipped because of singular evaluations or a degenerate slicing
    /// radius. Zero for ordinary integrations.
    pub rejected: usize,
}

impl EstimateResult {
    pub(crate) fn new(value: f64, std_error: f64, node_count: usize, rejected: usize) -> Self {
        debug_assert!(std_error >= 0.0);
        debug_assert!(node_count >= 1);
        EstimateResult {
            value,
            std_error,
            node_count,
            rejected,
        }
    }

    /// More than 0.1% of nodes rejected marks the estimate unreliable.
    pub fn reliable(&self) -> bool {
        (self.rejected as f64) <= 1e-3 * (self.node_count as f64)
    }
}

/// Common read access for sphere and ball rules.
pub trait Quadrature: Sync {
    fn dim(&self) -> usize;
    fn len(&self) -> usize;
    fn node(&self, i: usize) -> &[f64];
    fn weight(&self, i: usize) -> f64;
    fn is_monte_carlo(&self) -> bool;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

macro_rules! impl_quadrature {
    ($ty:ty) => {
        impl Quadrature for $ty {
            fn dim(&self) -> usize {
                self.dim
            }
            fn len(&self) -> usize {
                self.weights.len()
            }
            fn node(&self, i: usize) -> &[f64] {
                &self.nodes[i * self.dim..(i + 1) * self.dim]
            }
            fn weight(&self, i: usize) -> f64 {
                self.weights[i]
            }
            fn is_monte_carlo(&self) -> bool {
                matches!(self.provenance, Provenance::MonteCarlo { .. })
            }
        }
    };
}

impl_quadrature!(SphereQuadrature);
impl_quadrature!(BallQuadrature);

impl SphereQuadrature {
    pub fn convention(&self) -> Convention {
        self.convention
    }
    pub fn provenance(&self) -> Provenance {
        self.provenance
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl BallQuadrature {
    pub fn provenance(&self) -> Provenance {
        self.provenance
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Gamma(d/2) for integer d >= 1, computed by the recursion
/// Gamma(x+1) = x Gamma(x) from Gamma(1/2) = sqrt(pi) or Gamma(1) = 1.
fn gamma_half(d: usize) -> f64 {
    let (mut g, mut x) = if d.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    while 2.0 * x < d as f64 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Total surface measure of `S^{d-1}`: `2 pi^{d/2} / Gamma(d/2)`.
pub fn surface_area(d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::Domain("surface_area requires d >= 1".into()));
    }
    Ok(2.0 * PI.powf(d as f64 / 2.0) / gamma_half(d))
}

/// Volume of the unit ball `B^d`.
pub fn ball_volume(d: usize) -> Result<f64> {
    Ok(surface_area(d)? / d as f64)
}

/// Internal: sample `count` uniform points on `S^{d-1}` from an explicit
/// substream. Used both by the public constructor and by the slicing
/// integrator, which redraws inner nodes per ball node.
pub(crate) fn sphere_nodes(d: usize, count: usize, seed: u64, task: u64) -> Vec<f64> {
    let mut rng = rng::substream(seed, task);
    let mut nodes = vec![0.0; count * d];
    for i in 0..count {
        rng::unit_vector(&mut rng, &mut nodes[i * d..(i + 1) * d]);
    }
    nodes
}

/// Uniform Monte Carlo rule on `S^{d-1}`, probability convention.
/// Nodes are normalized Gaussian vectors; the same seed reproduces the same
/// nodes bit for bit.
pub fn sample_sphere(d: usize, count: usize, seed: u64) -> Result<SphereQuadrature> {
    if d < 2 {
        return Err(Error::Domain(format!(
            "sphere sampling requires d >= 2, got {d}"
        )));
    }
    if count == 0 {
        return Err(Error::Domain("node count must be positive".into()));
    }
    Ok(SphereQuadrature {
        dim: d,
        nodes: sphere_nodes(d, count, seed, 0),
        weights: vec![1.0 / count as f64; count],
        convention: Convention::Probability,
        provenance: Provenance::MonteCarlo { seed, count },
    })
}

/// Uniform Monte Carlo rule on the unit ball `B^d`, weights `v_d / count`.
/// Points are a uniform direction scaled by `U^{1/d}`.
pub fn sample_ball(d: usize, count: usize, seed: u64) -> Result<BallQuadrature> {
    if d == 0 {
        return Err(Error::Domain("ball sampling requires d >= 1".into()));
    }
    if count == 0 {
        return Err(Error::Domain("node count must be positive".into()));
    }
    let mut rng = rng::substream(seed, 1);
    let mut nodes = vec![0.0; count * d];
    for i in 0..count {
        let slot = &mut nodes[i * d..(i + 1) * d];
        rng::unit_vector(&mut rng, slot);
        let r = rand::Rng::gen::<f64>(&mut rng).powf(1.0 / d as f64);
        for x in slot.iter_mut() {
            *x *= r;
        }
    }
    let w = ball_volume(d)? / count as f64;
    Ok(BallQuadrature {
        dim: d,
        nodes,
        weights: vec![w; count],
        provenance: Provenance::MonteCarlo { seed, count },
    })
}

/// One tensor axis for a polar angle with weight `sin^k(theta)`.
///
/// Substituting `u = cos(theta)` turns the weight into `(1-u^2)^{(k-1)/2}`:
/// a polynomial for odd `k` (handled by Gauss-Legendre with the polynomial
/// folded into the weights) and `sqrt(1-u^2)` times a polynomial for even
/// `k` (handled by Gauss-Chebyshev of the second kind).
fn polar_axis(k: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let q = order + k;
    if k % 2 == 1 {
        let (u, mut w) = gauss_legendre(q);
        for (wi, ui) in w.iter_mut().zip(&u) {
            *wi *= (1.0 - ui * ui).powi(((k - 1) / 2) as i32);
        }
        (u, w)
    } else {
        let (u, mut w) = gauss_chebyshev2(q);
        for (wi, ui) in w.iter_mut().zip(&u) {
            *wi *= (1.0 - ui * ui).powi(((k - 2) / 2) as i32);
        }
        (u, w)
    }
}

/// Deterministic tensor product rule on `S^{d-1}` for `2 <= d <= 6`,
/// surface-area convention. Exact (to rounding) for all polynomials of total
/// degree `<= 2 * order - 1` restricted to the sphere.
pub fn product_rule_sphere(d: usize, order: usize) -> Result<SphereQuadrature> {
    if !(2..=6).contains(&d) {
        return Err(Error::UnsupportedDimension {
            dim: d,
            what: "tensor product sphere rule (supported for 2 <= d <= 6)",
        });
    }
    if order < 2 {
        return Err(Error::Domain("product rule order must be >= 2".into()));
    }
    // Azimuthal angle: equispaced points are exact for trigonometric
    // polynomials of degree < 2 * order.
    let n_phi = 2 * order;
    let w_phi = 2.0 * PI / n_phi as f64;
    let phis: Vec<f64> = (0..n_phi)
        .map(|j| 2.0 * PI * j as f64 / n_phi as f64)
        .collect();

    // Polar angles theta_1..theta_{d-2} with sin powers d-1-j.
    let axes: Vec<(Vec<f64>, Vec<f64>)> =
        (1..d - 1).map(|j| polar_axis(d - 1 - j, order)).collect();

    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut combo = vec![0usize; axes.len()];
    loop {
        let mut w_polar = 1.0;
        for (ax, &c) in axes.iter().zip(&combo) {
            w_polar *= ax.1[c];
        }
        for phi in &phis {
            let mut y = vec![0.0; d];
            let mut s = 1.0;
            for (i, (ax, &c)) in axes.iter().zip(&combo).enumerate() {
                let u = ax.0[c];
                y[i] = s * u;
                s *= (1.0 - u * u).sqrt();
            }
            y[d - 2] = s * phi.cos();
            y[d - 1] = s * phi.sin();
            nodes.extend_from_slice(&y);
            weights.push(w_polar * w_phi);
        }
        // Odometer over the polar axes.
        let mut i = 0;
        loop {
            if i == combo.len() {
                return Ok(SphereQuadrature {
                    dim: d,
                    nodes,
                    weights,
                    convention: Convention::SurfaceArea,
                    provenance: Provenance::ProductRule { order },
                });
            }
            combo[i] += 1;
            if combo[i] < axes[i].0.len() {
                break;
            }
            combo[i] = 0;
            i += 1;
        }
    }
}

/// Deterministic product rule on the unit ball `B^d` (2 <= d <= 6): a
/// Gauss-Legendre radial factor under the substitution `r = sin(phi)` tensored
/// with a product sphere rule. The substitution keeps integrands of the form
/// `g(r) sqrt(1 - r^2)^a` smooth, which is exactly what the slicing identity
/// produces near the ball boundary.
pub fn product_rule_ball(d: usize, order: usize) -> Result<BallQuadrature> {
    let sphere = product_rule_sphere(d, order)?;
    let (phis, wphis) = gauss_legendre_on(order + d + 2, 0.0, PI / 2.0);
    let mut nodes = Vec::with_capacity(sphere.len() * phis.len() * d);
    let mut weights = Vec::with_capacity(sphere.len() * phis.len());
    for (phi, wphi) in phis.iter().zip(&wphis) {
        let r = phi.sin();
        let w_r = wphi * r.powi(d as i32 - 1) * phi.cos();
        for i in 0..sphere.len() {
            let y = sphere.node(i);
            for c in y {
                nodes.push(c * r);
            }
            weights.push(w_r * sphere.weight(i));
        }
    }
    Ok(BallQuadrature {
        dim: d,
        nodes,
        weights,
        provenance: Provenance::ProductRule { order },
    })
}

/// Chunk size for parallel reductions. Fixed so that the reduction tree,
/// and therefore the floating-point result, does not depend on thread count.
const CHUNK: usize = 4096;

struct ChunkStats {
    sum_wf: f64,
    sum_f: f64,
    sum_f2: f64,
    first_bad: Option<(usize, f64)>,
}

/// Integrate `f` with a quadrature rule.
///
/// `value = sum_i w_i f(x_i)`. For Monte Carlo rules the standard error is
/// the weighted sample deviation `W * sd(f) / sqrt(N)` with `W` the total
/// weight; deterministic rules report zero. Nodes where `f` is non-finite
/// abort the integration with an error naming the node.
pub fn integrate<Q, F>(rule: &Q, f: F) -> Result<EstimateResult>
where
    Q: Quadrature,
    F: Fn(&[f64]) -> f64 + Sync,
{
    if rule.len() == 0 {
        return Err(Error::Domain("empty quadrature rule".into()));
    }
    let n = rule.len();
    let n_chunks = n.div_ceil(CHUNK);
    let stats: Vec<ChunkStats> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(n);
            let mut wf = Vec::with_capacity(hi - lo);
            let mut fv = Vec::with_capacity(hi - lo);
            let mut f2 = Vec::with_capacity(hi - lo);
            let mut first_bad = None;
            for i in lo..hi {
                let v = f(rule.node(i));
                if !v.is_finite() && first_bad.is_none() {
                    first_bad = Some((i, v));
                }
                wf.push(rule.weight(i) * v);
                fv.push(v);
                f2.push(v * v);
            }
            ChunkStats {
                sum_wf: pairwise_sum(&wf),
                sum_f: pairwise_sum(&fv),
                sum_f2: pairwise_sum(&f2),
                first_bad,
            }
        })
        .collect();

    if let Some((i, v)) = stats.iter().filter_map(|s| s.first_bad).next() {
        return Err(Error::Evaluation { index: i, value: v });
    }

    let wf: Vec<f64> = stats.iter().map(|s| s.sum_wf).collect();
    let value = pairwise_sum(&wf);
    let std_error = if rule.is_monte_carlo() && n > 1 {
        // Monte Carlo rules have uniform weights w = W / N.
        let total_weight = rule.weight(0) * n as f64;
        let sum_f = pairwise_sum(&stats.iter().map(|s| s.sum_f).collect::<Vec<_>>());
        let sum_f2 = pairwise_sum(&stats.iter().map(|s| s.sum_f2).collect::<Vec<_>>());
        let mean = sum_f / n as f64;
        let var = ((sum_f2 - n as f64 * mean * mean) / (n as f64 - 1.0)).max(0.0);
        total_weight * (var / n as f64).sqrt()
    } else {
        0.0
    };
    Ok(EstimateResult::new(value, std_error, n, 0))
}

/// Evaluate the sliced form of a surface integral over `S^{mn-1}`.
///
/// `f` is a function of `mn` coordinates; `ball_rule` integrates over
/// `B^{kn}` (the first `kn` coordinates) and `inner_rule` over the unit
/// sphere `S^{(m-k)n-1}` (the remaining coordinates before dilation by
/// `r_Y`). The result carries the surface-area convention of the big sphere.
///
/// Monte Carlo inner rules are redrawn per ball node from a derived
/// substream, making per-ball-node contributions independent so that the
/// outer sample variance accounts for the full statistical error.
///
/// Ball nodes with `1 - |Y|^2 < 1e-14` are skipped and counted in
/// `rejected`; the `1/r_Y` singularity they sit on is integrable and the
/// surviving factor `r_Y^{(m-k)n-2}` is bounded.
pub fn slice_integrate<F>(
    m: usize,
    n: usize,
    k: usize,
    f: F,
    ball_rule: &BallQuadrature,
    inner_rule: &SphereQuadrature,
) -> Result<EstimateResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if k == 0 || k >= m {
        return Err(Error::Domain(format!("need 1 <= k < m, got k={k}, m={m}")));
    }
    if n < 2 {
        return Err(Error::Domain(format!("need n >= 2, got {n}")));
    }
    if ball_rule.dim() != k * n {
        return Err(Error::DimensionMismatch {
            what: "slicing ball rule",
            expected: k * n,
            got: ball_rule.dim(),
        });
    }
    if inner_rule.dim() != (m - k) * n {
        return Err(Error::DimensionMismatch {
            what: "slicing inner sphere rule",
            expected: (m - k) * n,
            got: inner_rule.dim(),
        });
    }
    let d_inner = (m - k) * n;
    let d_ball = k * n;
    let alpha = (d_inner - 2) as i32; // exponent of r_Y after the 1/r_Y division
    let sigma_inner = surface_area(d_inner)?;

    // For SurfaceArea inner rules the weighted sum is already the surface
    // integral; probability rules need the total measure factored back in.
    let inner_scale = match inner_rule.convention() {
        Convention::SurfaceArea => 1.0,
        Convention::Probability => sigma_inner,
    };
    let inner_mc = match inner_rule.provenance() {
        Provenance::MonteCarlo { seed, count } => Some((seed, count)),
        Provenance::ProductRule { .. } => None,
    };

    let nb = ball_rule.len();
    struct NodeOut {
        contribution: f64, // w_ball * g
        g: f64,            // r^alpha * inner estimate
        inner_var_term: f64,
        rejected: bool,
        bad: Option<(usize, f64)>,
    }
    let outs: Vec<NodeOut> = (0..nb)
        .into_par_iter()
        .map(|i| {
            let y = ball_rule.node(i);
            let y2: f64 = y.iter().map(|v| v * v).sum();
            let r2 = 1.0 - y2;
            if r2 < 1e-14 {
                return NodeOut {
                    contribution: 0.0,
                    g: 0.0,
                    inner_var_term: 0.0,
                    rejected: true,
                    bad: None,
                };
            }
            let r = r2.sqrt();
            let mut point = vec![0.0; m * n];
            point[..d_ball].copy_from_slice(y);

            // Inner nodes: redrawn for Monte Carlo, reused for product rules.
            let fresh;
            let (inner_nodes, inner_weights, uniform_w): (&[f64], Option<&[f64]>, f64) =
                match inner_mc {
                    Some((seed, count)) => {
                        fresh = sphere_nodes(d_inner, count, seed, i as u64 + 1);
                        (&fresh, None, inner_scale / count as f64)
                    }
                    None => (inner_rule.nodes.as_slice(), Some(inner_rule.weights()), 0.0),
                };
            let count = inner_nodes.len() / d_inner;
            let mut vals = Vec::with_capacity(count);
            let mut bad = None;
            for j in 0..count {
                let w = &inner_nodes[j * d_inner..(j + 1) * d_inner];
                for (slot, c) in point[d_ball..].iter_mut().zip(w) {
                    *slot = r * c;
                }
                let v = f(&point);
                if !v.is_finite() && bad.is_none() {
                    bad = Some((i * count + j, v));
                }
                vals.push(v);
            }
            let inner_integral = match inner_weights {
                Some(ws) => {
                    let wf: Vec<f64> = vals.iter().zip(ws).map(|(v, w)| v * w).collect();
                    pairwise_sum(&wf) * inner_scale
                }
                None => pairwise_sum(&vals) * uniform_w,
            };
            // Per-node inner variance (only meaningful for MC inner rules).
            let inner_var = if inner_mc.is_some() && count > 1 {
                let mean = pairwise_sum(&vals) / count as f64;
                let dev: Vec<f64> = vals.iter().map(|v| (v - mean) * (v - mean)).collect();
                let var = pairwise_sum(&dev) / (count as f64 - 1.0);
                inner_scale * inner_scale * var / count as f64
            } else {
                0.0
            };
            let g = r.powi(alpha) * inner_integral;
            let w_ball = ball_rule.weight(i);
            NodeOut {
                contribution: w_ball * g,
                g,
                inner_var_term: w_ball * w_ball * r.powi(2 * alpha) * inner_var,
                rejected: false,
                bad,
            }
        })
        .collect();

    if let Some((i, v)) = outs.iter().filter_map(|o| o.bad).next() {
        return Err(Error::Evaluation { index: i, value: v });
    }
    let rejected = outs.iter().filter(|o| o.rejected).count();
    let contributions: Vec<f64> = outs.iter().map(|o| o.contribution).collect();
    let value = pairwise_sum(&contributions);

    let inner_len = match inner_mc {
        Some((_, count)) => count,
        None => inner_rule.len(),
    };
    let std_error = if ball_rule.is_monte_carlo() && nb > 1 {
        // Outer Monte Carlo with per-node independence: the sample variance of
        // the g_i captures inner noise as well.
        let total_weight = ball_rule.weight(0) * nb as f64;
        let gs: Vec<f64> = outs.iter().map(|o| o.g).collect();
        let mean = pairwise_sum(&gs) / nb as f64;
        let dev: Vec<f64> = gs.iter().map(|g| (g - mean) * (g - mean)).collect();
        let var = (pairwise_sum(&dev) / (nb as f64 - 1.0)).max(0.0);
        total_weight * (var / nb as f64).sqrt()
    } else {
        // Deterministic ball rule: only the inner Monte Carlo noise remains,
        // independent across ball nodes.
        let terms: Vec<f64> = outs.iter().map(|o| o.inner_var_term).collect();
        pairwise_sum(&terms).max(0.0).sqrt()
    };
    Ok(EstimateResult::new(
        value,
        std_error,
        nb * inner_len,
        rejected,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm2(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn surface_areas_match_closed_forms() {
        assert!((surface_area(2).unwrap() - 2.0 * PI).abs() < 1e-12);
        assert!((surface_area(3).unwrap() - 4.0 * PI).abs() < 1e-12);
        assert!((surface_area(4).unwrap() - 2.0 * PI * PI).abs() < 1e-12);
        assert!((ball_volume(2).unwrap() - PI).abs() < 1e-12);
        assert!(surface_area(0).is_err());
    }

    /// Independent cross-check of surface_area(4) = 2 pi^2: estimate the
    /// measure of a thin shell by cube rejection sampling.
    #[test]
    fn surface_area_4_monte_carlo_shell_oracle() {
        let mut rng = rng::substream(0xA11CE, 0);
        let eps = 0.01;
        let total = 4_000_000usize;
        let mut hits = 0usize;
        let mut x = [0.0f64; 4];
        for _ in 0..total {
            for v in x.iter_mut() {
                *v = 2.0 * rand::Rng::gen::<f64>(&mut rng) - 1.0;
            }
            let r = norm2(&x).sqrt();
            if r <= 1.0 && r > 1.0 - eps {
                hits += 1;
            }
        }
        // Shell volume ~ sigma_4 * eps * (1 - 1.5 eps + O(eps^2)); cube volume 16.
        let shell = 16.0 * hits as f64 / total as f64;
        let sigma_est = shell / (eps * (1.0 - 1.5 * eps + eps * eps));
        let rel = (sigma_est - 2.0 * PI * PI).abs() / (2.0 * PI * PI);
        assert!(rel < 0.02, "shell oracle rel err {rel}");
    }

    #[test]
    fn sphere_sample_nodes_are_unit_and_deterministic() {
        let a = sample_sphere(4, 1000, 42).unwrap();
        let b = sample_sphere(4, 1000, 42).unwrap();
        for i in 0..a.len() {
            assert!((norm2(a.node(i)) - 1.0).abs() < 1e-12);
            assert_eq!(a.node(i), b.node(i));
        }
        let c = sample_sphere(4, 1000, 43).unwrap();
        assert_ne!(a.node(0), c.node(0));
    }

    #[test]
    fn sphere_monte_carlo_moments() {
        let rule = sample_sphere(4, 100_000, 42).unwrap();
        let one = integrate(&rule, |_| 1.0).unwrap();
        assert!((one.value - 1.0).abs() < 1e-12);
        assert_eq!(one.std_error, 0.0);

        let odd = integrate(&rule, |y| y[0]).unwrap();
        assert!(odd.value.abs() <= 3.0 * odd.std_error);

        let sq = integrate(&rule, |y| y[0] * y[0]).unwrap();
        assert!((sq.value - 0.25).abs() <= 3.0 * sq.std_error);
    }

    #[test]
    fn ball_sample_weights_and_moments() {
        let rule = sample_ball(2, 200_000, 7).unwrap();
        let total = integrate(&rule, |_| 1.0).unwrap();
        assert!((total.value - PI).abs() < 1e-12);
        for i in 0..rule.len() {
            assert!(norm2(rule.node(i)) < 1.0);
        }
        // Radial oracle: mean of |y|^2 over B^2 is int_0^1 r^2 * 2r dr = 1/2.
        let m2 = integrate(&rule, norm2).unwrap();
        let mean = m2.value / PI;
        let se = m2.std_error / PI;
        assert!((mean - 0.5).abs() <= 3.0 * se);
        let m1 = integrate(&rule, |y| y[0]).unwrap();
        assert!(m1.value.abs() <= 3.0 * m1.std_error);
    }

    #[test]
    fn product_rule_total_measure_and_symmetry() {
        let r3 = product_rule_sphere(3, 8).unwrap();
        let total = integrate(&r3, |_| 1.0).unwrap();
        assert!((total.value - 4.0 * PI).abs() / (4.0 * PI) < 1e-9);
        let z2 = integrate(&r3, |y| y[2] * y[2]).unwrap();
        assert!((z2.value - 4.0 * PI / 3.0).abs() / (4.0 * PI / 3.0) < 1e-9);
    }

    #[test]
    fn product_rule_quartic_moment_d4() {
        // int_{S^3} y1^4 dsigma = 2 pi^2 * 3/24 = pi^2/4, cross-checked below
        // by plain Monte Carlo.
        let rule = product_rule_sphere(4, 8).unwrap();
        let m = integrate(&rule, |y| y[0].powi(4)).unwrap();
        let exact = PI * PI / 4.0;
        assert!((m.value - exact).abs() / exact < 1e-8);

        let mc = sample_sphere(4, 200_000, 99).unwrap();
        let est = integrate(&mc, |y| y[0].powi(4)).unwrap();
        let sigma4 = 2.0 * PI * PI;
        assert!((sigma4 * est.value - exact).abs() <= 3.0 * sigma4 * est.std_error);
    }

    /// Exact moments of monomials over the sphere via the Gamma formula:
    /// all exponents even: 2 prod Gamma((a_i+1)/2) / Gamma(sum (a_i+1)/2).
    fn exact_monomial_moment(alpha: &[usize]) -> f64 {
        if alpha.iter().any(|a| a % 2 == 1) {
            return 0.0;
        }
        fn gamma_half_arg(two_x: usize) -> f64 {
            // Gamma(two_x / 2)
            super::gamma_half(two_x)
        }
        let mut num = 2.0;
        let mut denom_arg = 0;
        for &a in alpha {
            num *= gamma_half_arg(a + 1);
            denom_arg += a + 1;
        }
        num / gamma_half_arg(denom_arg)
    }

    #[test]
    fn product_rule_monomial_exactness() {
        for (d, order) in [(3usize, 2usize), (3, 4), (4, 3), (5, 2), (6, 2)] {
            let rule = product_rule_sphere(d, order).unwrap();
            let max_deg = 2 * order - 1;
            let mut alphas = vec![vec![0usize; d]];
            // A small deterministic battery of exponent patterns.
            for i in 0..d {
                for deg in 1..=max_deg {
                    let mut a = vec![0; d];
                    a[i] = deg;
                    alphas.push(a);
                }
            }
            let mut mixed = vec![0; d];
            mixed[0] = 2;
            mixed[1] = max_deg.saturating_sub(2).min(2);
            alphas.push(mixed);
            for alpha in alphas {
                if alpha.iter().sum::<usize>() > max_deg {
                    continue;
                }
                let est = integrate(&rule, |y| {
                    y.iter()
                        .zip(&alpha)
                        .map(|(v, &a)| v.powi(a as i32))
                        .product()
                })
                .unwrap();
                let exact = exact_monomial_moment(&alpha);
                let scale = exact.abs().max(1.0);
                assert!(
                    (est.value - exact).abs() / scale < 1e-8,
                    "d={d} order={order} alpha={alpha:?}: {} vs {exact}",
                    est.value
                );
            }
        }
    }

    #[test]
    fn product_rule_ball_total_volume() {
        for d in 2..=4usize {
            let rule = product_rule_ball(d, 8).unwrap();
            let total = integrate(&rule, |_| 1.0).unwrap();
            let v = ball_volume(d).unwrap();
            assert!((total.value - v).abs() / v < 1e-9, "d={d}");
        }
    }

    #[test]
    fn unsupported_dimensions_error() {
        assert!(matches!(
            product_rule_sphere(7, 4),
            Err(Error::UnsupportedDimension { .. })
        ));
        assert!(sample_sphere(1, 10, 0).is_err());
        assert!(sample_sphere(3, 0, 0).is_err());
    }

    #[test]
    fn integrate_reports_bad_node() {
        let rule = sample_sphere(3, 100, 5).unwrap();
        let err = integrate(&rule, |y| if y[0] > -2.0 { f64::NAN } else { 0.0 });
        match err {
            Err(Error::Evaluation { index, .. }) => assert_eq!(index, 0),
            other => panic!("expected evaluation error, got {other:?}"),
        }
    }

    #[test]
    fn integrate_thread_count_invariant() {
        let rule = sample_sphere(4, 50_000, 11).unwrap();
        let f = |y: &[f64]| (y[0] + 0.3 * y[1]).exp();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| integrate(&rule, f).unwrap());
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| integrate(&rule, f).unwrap());
        assert_eq!(one.value.to_bits(), many.value.to_bits());
        assert_eq!(one.std_error.to_bits(), many.std_error.to_bits());
    }

    #[test]
    fn slice_constant_recovers_sphere_area() {
        // m = 2, n = 2, k = 1: F = 1 integrates to sigma(S^3) = 2 pi^2.
        let ball = sample_ball(2, 2000, 21).unwrap();
        let inner = sample_sphere(2, 64, 22).unwrap();
        let est = slice_integrate(2, 2, 1, |_| 1.0, &ball, &inner).unwrap();
        let exact = 2.0 * PI * PI;
        assert!(
            (est.value - exact).abs() <= 3.0 * est.std_error,
            "{} vs {exact} (se {})",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn slice_odd_symmetry_vanishes() {
        let ball = sample_ball(2, 2000, 31).unwrap();
        let inner = sample_sphere(2, 64, 32).unwrap();
        let est = slice_integrate(2, 2, 1, |y| y[0], &ball, &inner).unwrap();
        assert!(est.value.abs() <= 3.0 * est.std_error.max(1e-12));
    }

    #[test]
    fn slice_gaussian_matches_direct() {
        let c = [0.4, -0.2, 0.1, 0.7];
        let f = move |y: &[f64]| {
            let d2: f64 = y.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
            (-d2).exp()
        };
        let ball = sample_ball(2, 4000, 41).unwrap();
        let inner = sample_sphere(2, 64, 42).unwrap();
        let sliced = slice_integrate(2, 2, 1, f, &ball, &inner).unwrap();
        let direct_rule = sample_sphere(4, 100_000, 43).unwrap();
        let direct = integrate(&direct_rule, f).unwrap();
        let sigma4 = 2.0 * PI * PI;
        let diff = (sliced.value - sigma4 * direct.value).abs();
        let se = (sliced.std_error.powi(2) + (sigma4 * direct.std_error).powi(2)).sqrt();
        assert!(diff <= 3.0 * se, "diff {diff} vs 3se {}", 3.0 * se);
    }

    #[test]
    fn slice_product_rules_tight() {
        // Deterministic path: both sides with product rules, 1e-3 relative.
        let cases = [(2usize, 2usize, 1usize), (3, 2, 1), (3, 2, 2), (2, 3, 1)];
        for (m, n, k) in cases {
            let ball = product_rule_ball(k * n, 8).unwrap();
            let inner = product_rule_sphere((m - k) * n, 8).unwrap();
            let direct = product_rule_sphere(m * n, 8).unwrap();
            let f = |y: &[f64]| {
                let d2: f64 = y.iter().map(|a| (a - 0.3) * (a - 0.3)).sum();
                (-d2).exp()
            };
            let sliced = slice_integrate(m, n, k, f, &ball, &inner).unwrap();
            let exact = integrate(&direct, f).unwrap();
            let rel = (sliced.value - exact.value).abs() / exact.value.abs();
            assert!(rel < 1e-3, "(m,n,k)=({m},{n},{k}) rel={rel}");
            assert_eq!(sliced.std_error, 0.0);
        }
    }

    #[test]
    fn slice_rejects_degenerate_nodes() {
        // Hand-built ball rule with one node on the boundary.
        let mut rule = sample_ball(2, 10, 3).unwrap();
        rule.nodes[0] = 1.0 - 1e-16;
        rule.nodes[1] = 0.0;
        let inner = sample_sphere(2, 16, 4).unwrap();
        let est = slice_integrate(2, 2, 1, |_| 1.0, &rule, &inner).unwrap();
        assert_eq!(est.rejected, 1);
        assert!(est.value.is_finite());
    }

    #[test]
    fn blockwise_rotation_invariance() {
        // Rotating both R^2 blocks by the same A in SO(2) leaves integrals
        // over S^3 unchanged up to Monte Carlo error.
        let rule = sample_sphere(4, 100_000, 77).unwrap();
        let (c, s) = (0.6f64.cos(), 0.6f64.sin());
        let f = |y: &[f64]| (y[0] - 0.2 * y[3]).powi(2) + 0.5 * y[1];
        let f_rot = move |y: &[f64]| {
            let r = [
                c * y[0] - s * y[1],
                s * y[0] + c * y[1],
                c * y[2] - s * y[3],
                s * y[2] + c * y[3],
            ];
            f(&r)
        };
        let a = integrate(&rule, f).unwrap();
        let b = integrate(&rule, f_rot).unwrap();
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.value - b.value).abs() <= 3.0 * se);
    }
}
