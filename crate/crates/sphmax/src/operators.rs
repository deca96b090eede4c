//! The operators: m-linear spherical means, the maximal functions over one
//! shared dilation and over independent dilations, the Hardy-Littlewood and
//! linear spherical maximal functions, and the pointwise domination ratio
//! that compares them.
//!
//! All operators are probability averages: the m-linear spherical mean at
//! `(x, t)` is the mean over `(y^1, ..., y^m)` on `S^{mn-1}` of
//! `prod_j f_j(x - t y^j)`, and the maximal value is the supremum of its
//! absolute value over a geometric radius grid plus one local refinement
//! pass. Everything is deterministic given `(inputs, config, seed)`.
//!
//! Direct Monte Carlo evaluations draw one node set per seed and reuse it
//! across dilation radii: the estimated mean is then a smooth function of
//! the radius sampled on a single point cloud, so a supremum over the grid
//! does not maximize over independent noise (which would bias it upward),
//! and evaluations of the same radius agree bit for bit in any context.
//! Sliced evaluations derive their substreams from the dilation values
//! instead, keeping scan points statistically independent across scales.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functions::TestFunction;
use crate::gauss::{gauss_legendre_on, pairwise_sum};
use crate::quadrature::{
    ball_volume, integrate, product_rule_ball, product_rule_sphere, sphere_nodes, surface_area,
    EstimateResult, Quadrature,
};
use crate::rng;

const MEAN_TAG: u64 = 0x6d65616e; // direct multi-linear means
const SLICE_TAG: u64 = 0x736c6963; // sliced evaluation path
const HL_TAG: u64 = 0x686c6d61; // Hardy-Littlewood averages
const LSM_TAG: u64 = 0x73706d61; // linear spherical maximal

/// A strictly increasing grid of dilation radii. Grids are geometric by
/// construction; `refine` inserts the geometric midpoints and keeps the
/// original radii bit for bit, so suprema over refined grids can only grow.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusGrid {
    radii: Vec<f64>,
}

impl RadiusGrid {
    pub fn geometric(t_min: f64, t_max: f64, count: usize) -> Result<Self> {
        if !(t_min > 0.0) || t_max < t_min {
            return Err(Error::Domain(format!(
                "need 0 < t_min <= t_max, got [{t_min}, {t_max}]"
            )));
        }
        if count == 0 {
            return Err(Error::Domain("radius grid needs at least one point".into()));
        }
        if count == 1 {
            if t_max != t_min {
                return Err(Error::Domain(
                    "a single-point grid requires t_min == t_max".into(),
                ));
            }
            return Ok(RadiusGrid { radii: vec![t_min] });
        }
        let log_lo = t_min.ln();
        let log_hi = t_max.ln();
        let radii: Vec<f64> = (0..count)
            .map(|i| (log_lo + (log_hi - log_lo) * i as f64 / (count - 1) as f64).exp())
            .collect();
        for w in radii.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Domain(
                    "radius grid is not strictly increasing".into(),
                ));
            }
        }
        Ok(RadiusGrid { radii })
    }

    /// 64 radii per decade over [1e-3, 1e3].
    pub fn default_grid() -> Self {
        RadiusGrid::geometric(1e-3, 1e3, 6 * 64 + 1).expect("static grid")
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }
    pub fn len(&self) -> usize {
        self.radii.len()
    }
    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Insert the geometric midpoint of every interval. The original radii
    /// are carried over unchanged.
    pub fn refine(&self) -> RadiusGrid {
        let mut out = Vec::with_capacity(2 * self.radii.len() - 1);
        for i in 0..self.radii.len() {
            out.push(self.radii[i]);
            if i + 1 < self.radii.len() {
                out.push(Self::midpoint(self.radii[i], self.radii[i + 1]));
            }
        }
        RadiusGrid { radii: out }
    }

    fn midpoint(a: f64, b: f64) -> f64 {
        (a * b).sqrt()
    }
}

/// Which quadrature backs an operator evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum QuadSpec {
    MonteCarlo { count: usize, seed: u64 },
    Product { order: usize },
}

impl QuadSpec {
    fn seed(&self) -> u64 {
        match self {
            QuadSpec::MonteCarlo { seed, .. } => *seed,
            QuadSpec::Product { .. } => 0,
        }
    }
}

/// How ball nodes are drawn on the sliced evaluation path.
#[derive(Debug, Clone, Serialize)]
pub enum BallScheme {
    /// Uniform over the whole unit ball.
    Uniform { count: usize },
    /// Uniform over a sub-ball; nodes falling outside the unit ball
    /// contribute zero. The sub-ball volume enters the weights, keeping the
    /// estimator unbiased for the restricted integral.
    RegionUniform {
        count: usize,
        center: Vec<f64>,
        radius: f64,
    },
    /// Independent per-block sampling: block `j` is drawn around
    /// `centers[j]` with a log-uniform radius in
    /// `[min_radius_rel * radii[j], radii[j]]` and a uniform direction.
    /// This flattens power singularities at the block centers that make
    /// uniform sampling infinite-variance; the density enters the weights,
    /// so the estimator stays unbiased on the sampled range. The excluded
    /// inner sliver carries the same mass fraction at every dilation, so
    /// scaling exponents are unaffected.
    BlockLogRadial {
        count: usize,
        block_dim: usize,
        centers: Vec<Vec<f64>>,
        radii: Vec<f64>,
        min_radius_rel: f64,
    },
}

/// How the inner sphere factor is integrated on the sliced path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum InnerScheme {
    /// Fresh uniform nodes per ball node.
    MonteCarlo { count: usize },
    /// Deterministic integration over the spherical cap where the single
    /// remaining factor is supported. Requires `m - k = 1` and a radial
    /// inner function with bounded support (power-log or centered
    /// indicator); the cap opening angle is computed exactly from the
    /// support radius. `panels` dyadic panels concentrate nodes towards the
    /// near point of the cap, where power-log factors peak.
    SupportCap { panels: usize },
}

/// Sliced evaluation: split off the first `split` blocks into a ball
/// integral and integrate the rest over dilated spheres.
#[derive(Debug, Clone, Serialize)]
pub struct SliceScheme {
    pub split: usize,
    pub ball: BallScheme,
    pub inner: InnerScheme,
}

/// Configuration for the multilinear operators.
#[derive(Debug, Clone, Serialize)]
pub struct OperatorConfig {
    /// Number of factors m (>= 1).
    pub factors: usize,
    /// Ambient dimension n of each factor.
    pub dim: usize,
    /// Quadrature on `S^{mn-1}` (probability convention).
    pub quad: QuadSpec,
    pub radius_grid: RadiusGrid,
    /// Optional sliced evaluation path for concentrated integrands.
    pub slicing: Option<SliceScheme>,
    /// Whether maximal operators run the local refinement pass after the
    /// grid scan (on by default).
    pub refinement: bool,
}

impl OperatorConfig {
    pub fn monte_carlo(factors: usize, dim: usize, count: usize, seed: u64) -> Self {
        OperatorConfig {
            factors,
            dim,
            quad: QuadSpec::MonteCarlo { count, seed },
            radius_grid: RadiusGrid::default_grid(),
            slicing: None,
            refinement: true,
        }
    }
}

/// Result of a maximal-operator evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct MaximalValue {
    pub value: f64,
    /// Radius (or radii, for the independent-dilation operator) attaining
    /// the maximum.
    pub argmax: Vec<f64>,
    /// Statistical error of the mean estimate at the argmax; the resolution
    /// of the reported value.
    pub std_error: f64,
    /// Set when any contributing mean was flagged unreliable.
    pub unreliable: bool,
}

fn check_inputs(fs: &[TestFunction], x: &[f64], cfg: &OperatorConfig) -> Result<()> {
    if fs.len() != cfg.factors || fs.is_empty() {
        return Err(Error::Config(format!(
            "expected {} factors, got {}",
            cfg.factors,
            fs.len()
        )));
    }
    for f in fs {
        if f.dim() != cfg.dim {
            return Err(Error::DimensionMismatch {
                what: "operator input function",
                expected: cfg.dim,
                got: f.dim(),
            });
        }
    }
    if x.len() != cfg.dim {
        return Err(Error::DimensionMismatch {
            what: "operator evaluation point",
            expected: cfg.dim,
            got: x.len(),
        });
    }
    Ok(())
}

/// `prod_j f_j(x - t_j y^j)` at one sphere node; `None` when some factor hit
/// its singular point.
fn product_at(
    fs: &[TestFunction],
    x: &[f64],
    ts: &[f64],
    node: &[f64],
    n: usize,
    buf: &mut [f64],
) -> Result<Option<f64>> {
    let mut prod = 1.0;
    for (j, f) in fs.iter().enumerate() {
        let block = &node[j * n..(j + 1) * n];
        for (slot, (xi, yi)) in buf.iter_mut().zip(x.iter().zip(block)) {
            *slot = xi - ts[j] * yi;
        }
        match f.eval(buf) {
            Ok(v) => prod *= v,
            Err(Error::SingularPoint) => return Ok(None),
            Err(e) => return Err(e),
        }
        if prod == 0.0 {
            return Ok(Some(0.0));
        }
    }
    Ok(Some(prod))
}

/// The m-linear spherical mean with per-factor dilations
/// `(t_1, ..., t_m)`; the shared-dilation mean is the diagonal case. The
/// evaluation substream is derived from the dilation values, so identical
/// radii reproduce identical estimates in any context.
pub fn mean_at_radii(
    fs: &[TestFunction],
    x: &[f64],
    ts: &[f64],
    cfg: &OperatorConfig,
) -> Result<EstimateResult> {
    check_inputs(fs, x, cfg)?;
    if ts.len() != fs.len() {
        return Err(Error::Config("one dilation radius per factor".into()));
    }
    if ts.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Domain("dilation radii must be positive".into()));
    }
    if let Some(slicing) = &cfg.slicing {
        return sliced_mean(fs, x, ts, cfg, slicing);
    }
    direct_mean(fs, x, ts, cfg)
}

/// The m-linear spherical mean at a single shared dilation `t`.
pub fn spherical_mean_multi(
    fs: &[TestFunction],
    x: &[f64],
    t: f64,
    cfg: &OperatorConfig,
) -> Result<EstimateResult> {
    let ts = vec![t; fs.len()];
    mean_at_radii(fs, x, &ts, cfg)
}

const CHUNK: usize = 2048;

fn direct_mean(
    fs: &[TestFunction],
    x: &[f64],
    ts: &[f64],
    cfg: &OperatorConfig,
) -> Result<EstimateResult> {
    let m = fs.len();
    let n = cfg.dim;
    let d = m * n;
    match cfg.quad {
        QuadSpec::MonteCarlo { count, seed } => {
            if count == 0 {
                return Err(Error::Config("node count must be positive".into()));
            }
            let nodes = sphere_nodes(d, count, seed, MEAN_TAG);
            direct_mean_on_nodes(fs, x, ts, &nodes, n)
        }
        QuadSpec::Product { order } => {
            if d > 6 {
                return Err(Error::Config(format!(
                    "product quadrature supports m*n <= 6, got {d}"
                )));
            }
            let rule = product_rule_sphere(d, order)?;
            let mut buf = vec![0.0; n];
            let mut weighted = Vec::with_capacity(rule.len());
            let mut total_w = Vec::with_capacity(rule.len());
            let mut rejected = 0usize;
            for i in 0..rule.len() {
                match product_at(fs, x, ts, rule.node(i), n, &mut buf)? {
                    Some(v) => {
                        weighted.push(rule.weight(i) * v);
                        total_w.push(rule.weight(i));
                    }
                    None => rejected += 1,
                }
            }
            if total_w.is_empty() {
                return Err(Error::Config(
                    "all quadrature nodes were rejected as singular".into(),
                ));
            }
            // Normalize by the measure actually used; without rejections this
            // is exactly the total surface measure.
            let mean = pairwise_sum(&weighted) / pairwise_sum(&total_w);
            Ok(EstimateResult::new(mean, 0.0, rule.len(), rejected))
        }
    }
}

/// Mean of the factor product over an explicit node cloud on `S^{mn-1}`.
fn direct_mean_on_nodes(
    fs: &[TestFunction],
    x: &[f64],
    ts: &[f64],
    nodes: &[f64],
    n: usize,
) -> Result<EstimateResult> {
    let d = fs.len() * n;
    let count = nodes.len() / d;
    let n_chunks = count.div_ceil(CHUNK);
    struct Stats {
        sum: f64,
        sum2: f64,
        used: usize,
        rejected: usize,
    }
    let stats: Vec<Result<Stats>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(count);
            let mut vals = Vec::with_capacity(hi - lo);
            let mut rejected = 0usize;
            let mut buf = vec![0.0; n];
            for i in lo..hi {
                match product_at(fs, x, ts, &nodes[i * d..(i + 1) * d], n, &mut buf)? {
                    Some(v) => vals.push(v),
                    None => rejected += 1,
                }
            }
            let sum = pairwise_sum(&vals);
            let sq: Vec<f64> = vals.iter().map(|v| v * v).collect();
            Ok(Stats {
                sum,
                sum2: pairwise_sum(&sq),
                used: vals.len(),
                rejected,
            })
        })
        .collect();
    let mut sums = Vec::with_capacity(n_chunks);
    let mut sums2 = Vec::with_capacity(n_chunks);
    let mut used = 0usize;
    let mut rejected = 0usize;
    for st in stats {
        let st = st?;
        sums.push(st.sum);
        sums2.push(st.sum2);
        used += st.used;
        rejected += st.rejected;
    }
    if used == 0 {
        return Err(Error::Config(
            "all quadrature nodes were rejected as singular".into(),
        ));
    }
    let sum = pairwise_sum(&sums);
    let sum2 = pairwise_sum(&sums2);
    let mean = sum / used as f64;
    let std_error = if used > 1 {
        let var = ((sum2 - used as f64 * mean * mean) / (used as f64 - 1.0)).max(0.0);
        (var / used as f64).sqrt()
    } else {
        0.0
    };
    Ok(EstimateResult::new(mean, std_error, count, rejected))
}

/// Surface-measure integral over the unit sphere `S^{D-1}` of
/// `W -> f(x - t r W)` for a radial, boundedly supported `f`, integrated
/// deterministically over the support cap.
fn support_cap_inner(f: &TestFunction, x: &[f64], t: f64, r: f64, panels: usize) -> Result<f64> {
    let d = f.dim();
    let nu = f.radial_support().ok_or_else(|| {
        Error::Config("support-cap integration needs a radial factor with bounded support".into())
    })?;
    let sigma_equator = surface_area(d.max(2) - 1)?;
    let cnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt() / t;
    let rho = nu / t;
    let mut dist_buf = vec![0.0; d];
    let mut fval = |dist: f64| -> Result<f64> {
        dist_buf[0] = dist;
        f.eval(&dist_buf)
    };
    if cnorm == 0.0 {
        // The integrand is constant on the sphere.
        return Ok(surface_area(d)? * fval(t * r)?);
    }
    let cos_min = (r * r + cnorm * cnorm - rho * rho) / (2.0 * r * cnorm);
    if cos_min > 1.0 {
        return Ok(0.0); // the cap is empty
    }
    let phimax = cos_min.max(-1.0).acos();
    // Geometric dyadic panels towards theta = 0 (the near point, where
    // power-log factors are largest), Gauss-Legendre 4 on each.
    let mut total = 0.0;
    let mut hi = phimax;
    for j in 0..=panels {
        let lo = if j == panels {
            0.0
        } else {
            phimax * 0.5f64.powi(j as i32 + 1)
        };
        let (thetas, wts) = gauss_legendre_on(4, lo, hi);
        for (theta, w) in thetas.iter().zip(&wts) {
            // Cancellation-free form of r^2 + c^2 - 2 r c cos(theta).
            let half_sin = (theta / 2.0).sin();
            let dist2 = (r - cnorm) * (r - cnorm) + 4.0 * r * cnorm * half_sin * half_sin;
            let dist = t * dist2.sqrt();
            // A node exactly on a power-log singularity carries no measure;
            // skip it.
            let v = match fval(dist) {
                Ok(v) => v,
                Err(Error::SingularPoint) => continue,
                Err(e) => return Err(e),
            };
            if v != 0.0 {
                total += w * theta.sin().powi(d as i32 - 2) * v;
            }
        }
        hi = lo;
    }
    Ok(sigma_equator * total)
}

/// Draw the ball nodes for one sliced evaluation. Returns flat nodes and
/// per-node weights (reciprocal sampling densities over `count`).
fn ball_scheme_nodes(
    scheme: &BallScheme,
    d_ball: usize,
    seed: u64,
    task: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    match scheme {
        BallScheme::Uniform { count } => {
            if *count == 0 {
                return Err(Error::Config("ball node count must be positive".into()));
            }
            let mut rng = rng::substream(seed, rng::combine(task, 0xba11));
            let mut nodes = vec![0.0; count * d_ball];
            for i in 0..*count {
                let slot = &mut nodes[i * d_ball..(i + 1) * d_ball];
                rng::unit_vector(&mut rng, slot);
                let r = rand::Rng::gen::<f64>(&mut rng).powf(1.0 / d_ball as f64);
                for v in slot.iter_mut() {
                    *v *= r;
                }
            }
            let w = ball_volume(d_ball)? / *count as f64;
            Ok((nodes, vec![w; *count]))
        }
        BallScheme::RegionUniform {
            count,
            center,
            radius,
        } => {
            if *count == 0 {
                return Err(Error::Config("ball node count must be positive".into()));
            }
            if center.len() != d_ball {
                return Err(Error::DimensionMismatch {
                    what: "ball region center",
                    expected: d_ball,
                    got: center.len(),
                });
            }
            if !(*radius > 0.0) {
                return Err(Error::Config("ball region radius must be positive".into()));
            }
            let mut rng = rng::substream(seed, rng::combine(task, 0xba11));
            let mut nodes = vec![0.0; count * d_ball];
            for i in 0..*count {
                let slot = &mut nodes[i * d_ball..(i + 1) * d_ball];
                rng::unit_vector(&mut rng, slot);
                let r = radius * rand::Rng::gen::<f64>(&mut rng).powf(1.0 / d_ball as f64);
                for (v, c) in slot.iter_mut().zip(center) {
                    *v = c + *v * r;
                }
            }
            let w = ball_volume(d_ball)? * radius.powi(d_ball as i32) / *count as f64;
            Ok((nodes, vec![w; *count]))
        }
        BallScheme::BlockLogRadial {
            count,
            block_dim,
            centers,
            radii,
            min_radius_rel,
        } => {
            if *count == 0 {
                return Err(Error::Config("ball node count must be positive".into()));
            }
            let blocks = centers.len();
            if blocks * block_dim != d_ball || radii.len() != blocks {
                return Err(Error::Config(
                    "block sampling: centers/radii do not tile the ball dimension".into(),
                ));
            }
            if !(*min_radius_rel > 0.0 && *min_radius_rel < 1.0) {
                return Err(Error::Config(
                    "block sampling: need 0 < min_radius_rel < 1".into(),
                ));
            }
            let span = (1.0 / min_radius_rel).ln();
            let sigma_block = surface_area(*block_dim)?;
            let mut rng = rng::substream(seed, rng::combine(task, 0xba11));
            let mut nodes = vec![0.0; count * d_ball];
            let mut weights = vec![0.0; *count];
            let mut dir = vec![0.0; *block_dim];
            for i in 0..*count {
                let mut w = 1.0 / *count as f64;
                for (b, (center, rho)) in centers.iter().zip(radii).enumerate() {
                    rng::unit_vector(&mut rng, &mut dir);
                    let u: f64 = rand::Rng::gen(&mut rng);
                    let s = rho * (-span * u).exp();
                    let slot =
                        &mut nodes[i * d_ball + b * block_dim..i * d_ball + (b + 1) * block_dim];
                    for ((v, c), dv) in slot.iter_mut().zip(center).zip(&dir) {
                        *v = c + s * dv;
                    }
                    w *= span * sigma_block * s.powi(*block_dim as i32);
                }
                weights[i] = w;
            }
            Ok((nodes, weights))
        }
    }
}

fn sliced_mean(
    fs: &[TestFunction],
    x: &[f64],
    ts: &[f64],
    cfg: &OperatorConfig,
    scheme: &SliceScheme,
) -> Result<EstimateResult> {
    let m = fs.len();
    let n = cfg.dim;
    let k = scheme.split;
    if k == 0 || k >= m {
        return Err(Error::Config(format!(
            "slicing split must satisfy 1 <= k < m, got k={k}, m={m}"
        )));
    }
    let d_ball = k * n;
    let d_inner = (m - k) * n;
    let alpha = (d_inner - 2) as i32;
    if let InnerScheme::SupportCap { .. } = scheme.inner {
        if m - k != 1 {
            return Err(Error::Config(
                "support-cap inner integration requires m - k = 1".into(),
            ));
        }
    }
    let seed = cfg.quad.seed();
    let task = rng::task_id(SLICE_TAG, ts);
    let (nodes, weights) = ball_scheme_nodes(&scheme.ball, d_ball, seed, task)?;
    let nb = weights.len();
    let sigma_mn = surface_area(m * n)?;
    let sigma_inner = surface_area(d_inner)?;

    struct NodeOut {
        scaled: f64, // count * w_i * g_i, an iid unbiased sample of the integral
        rejected: usize,
    }
    let outs: Vec<Result<NodeOut>> = (0..nb)
        .into_par_iter()
        .map(|i| {
            let y = &nodes[i * d_ball..(i + 1) * d_ball];
            let y2: f64 = y.iter().map(|v| v * v).sum();
            if y2 >= 1.0 {
                // Region sampling may poke outside the unit ball; those
                // points lie outside the integration domain and contribute 0.
                return Ok(NodeOut {
                    scaled: 0.0,
                    rejected: 0,
                });
            }
            let r2 = 1.0 - y2;
            if r2 < 2e-14 {
                // Degenerate slice at the ball boundary.
                return Ok(NodeOut {
                    scaled: 0.0,
                    rejected: 1,
                });
            }
            let r = r2.sqrt();
            let mut buf = vec![0.0; n];
            let mut prod = 1.0;
            for (j, f) in fs[..k].iter().enumerate() {
                let block = &y[j * n..(j + 1) * n];
                for (slot, (xi, yi)) in buf.iter_mut().zip(x.iter().zip(block)) {
                    *slot = xi - ts[j] * yi;
                }
                match f.eval(&buf) {
                    Ok(v) => prod *= v,
                    Err(Error::SingularPoint) => {
                        return Ok(NodeOut {
                            scaled: 0.0,
                            rejected: 1,
                        })
                    }
                    Err(e) => return Err(e),
                }
                if prod == 0.0 {
                    break;
                }
            }
            if prod == 0.0 {
                return Ok(NodeOut {
                    scaled: 0.0,
                    rejected: 0,
                });
            }
            let inner = match scheme.inner {
                InnerScheme::MonteCarlo { count } => {
                    if count == 0 {
                        return Err(Error::Config("inner node count must be positive".into()));
                    }
                    let ws = sphere_nodes(d_inner, count, seed, rng::combine(task, i as u64 + 1));
                    let mut vals = Vec::with_capacity(count);
                    let mut ibuf = vec![0.0; n];
                    for j in 0..count {
                        let w = &ws[j * d_inner..(j + 1) * d_inner];
                        let mut v = 1.0;
                        for (jj, f) in fs[k..].iter().enumerate() {
                            let block = &w[jj * n..(jj + 1) * n];
                            for (slot, (xi, wi)) in ibuf.iter_mut().zip(x.iter().zip(block)) {
                                *slot = xi - ts[k + jj] * r * wi;
                            }
                            match f.eval(&ibuf) {
                                Ok(fv) => v *= fv,
                                Err(Error::SingularPoint) => {
                                    v = 0.0;
                                    break;
                                }
                                Err(e) => return Err(e),
                            }
                            if v == 0.0 {
                                break;
                            }
                        }
                        vals.push(v);
                    }
                    sigma_inner * pairwise_sum(&vals) / count as f64
                }
                InnerScheme::SupportCap { panels } => {
                    support_cap_inner(&fs[m - 1], x, ts[m - 1], r, panels)?
                }
            };
            let g = r.powi(alpha) * prod * inner;
            Ok(NodeOut {
                scaled: nb as f64 * weights[i] * g,
                rejected: 0,
            })
        })
        .collect();

    let mut scaled = Vec::with_capacity(nb);
    let mut rejected = 0usize;
    for o in outs {
        let o = o?;
        scaled.push(o.scaled);
        rejected += o.rejected;
    }
    let sum = pairwise_sum(&scaled);
    let value = sum / (nb as f64 * sigma_mn);
    let std_error = if nb > 1 {
        let mean = sum / nb as f64;
        let dev: Vec<f64> = scaled.iter().map(|z| (z - mean) * (z - mean)).collect();
        let var = (pairwise_sum(&dev) / (nb as f64 - 1.0)).max(0.0);
        (var / nb as f64).sqrt() / sigma_mn
    } else {
        0.0
    };
    let inner_count = match scheme.inner {
        InnerScheme::MonteCarlo { count } => count,
        InnerScheme::SupportCap { panels } => 4 * (panels + 1),
    };
    Ok(EstimateResult::new(
        value,
        std_error,
        nb * inner_count,
        rejected,
    ))
}

/// The m-linear spherical maximal value: the supremum of the absolute mean
/// over the configured radius grid, plus (when enabled) one refinement pass
/// over the ten geometric midpoints closest to the grid argmax. Midpoints
/// come from [`RadiusGrid::refine`], so a run over the refined grid
/// evaluates a superset of the radii and its maximum can only be larger.
pub fn maximal_multi(fs: &[TestFunction], x: &[f64], cfg: &OperatorConfig) -> Result<MaximalValue> {
    check_inputs(fs, x, cfg)?;
    let radii = cfg.radius_grid.radii();
    if radii.is_empty() {
        return Err(Error::Config("empty radius grid".into()));
    }
    // On the direct Monte Carlo path all radii share one node cloud; see the
    // module docs. Other paths evaluate radius by radius.
    let shared_nodes: Option<Vec<f64>> = match (&cfg.slicing, cfg.quad) {
        (None, QuadSpec::MonteCarlo { count, seed }) => {
            if count == 0 {
                return Err(Error::Config("node count must be positive".into()));
            }
            Some(sphere_nodes(fs.len() * cfg.dim, count, seed, MEAN_TAG))
        }
        _ => None,
    };
    let eval = |t: f64| -> Result<EstimateResult> {
        match &shared_nodes {
            Some(nodes) => {
                let ts = vec![t; fs.len()];
                direct_mean_on_nodes(fs, x, &ts, nodes, cfg.dim)
            }
            None => spherical_mean_multi(fs, x, t, cfg),
        }
    };
    let means: Vec<Result<EstimateResult>> = radii.par_iter().map(|t| eval(*t)).collect();
    let mut best = f64::NEG_INFINITY;
    let mut best_i = 0usize;
    let mut best_se = 0.0;
    let mut unreliable = false;
    for (i, m) in means.into_iter().enumerate() {
        let m = m?;
        unreliable |= !m.reliable();
        let v = m.value.abs();
        if v > best {
            best = v;
            best_i = i;
            best_se = m.std_error;
        }
    }
    let mut argmax = radii[best_i];
    if cfg.refinement && radii.len() > 1 {
        // Midpoints of the refined grid, ranked by distance to the argmax
        // interval; take the ten nearest.
        let fine = cfg.radius_grid.refine();
        let mut mids: Vec<(usize, f64)> = fine
            .radii()
            .iter()
            .enumerate()
            .filter(|(i, _)| i % 2 == 1)
            .map(|(i, r)| (i / 2, *r)) // midpoint of coarse interval i/2
            .collect();
        mids.sort_by(|a, b| {
            let da = (a.0 as f64 + 0.5 - best_i as f64).abs();
            let db = (b.0 as f64 + 0.5 - best_i as f64).abs();
            da.partial_cmp(&db).unwrap().then(a.0.cmp(&b.0))
        });
        let extras: Vec<f64> = mids.iter().take(10).map(|(_, r)| *r).collect();
        let vals: Vec<Result<EstimateResult>> = extras.par_iter().map(|t| eval(*t)).collect();
        for (t, v) in extras.iter().zip(vals) {
            let v = v?;
            unreliable |= !v.reliable();
            if v.value.abs() > best {
                best = v.value.abs();
                argmax = *t;
                best_se = v.std_error;
            }
        }
    }
    Ok(MaximalValue {
        value: best,
        argmax: vec![argmax],
        std_error: best_se,
        unreliable,
    })
}

/// Budget cap for the independent-dilation maximal operator.
pub const INDEPENDENT_GRID_BUDGET: usize = 10_000;

/// The stronger maximal operator with one dilation per factor: the maximum
/// of the absolute mean over the full product of the per-factor grids.
pub fn maximal_multi_independent(
    fs: &[TestFunction],
    x: &[f64],
    cfg: &OperatorConfig,
    per_factor_grids: &[RadiusGrid],
) -> Result<MaximalValue> {
    check_inputs(fs, x, cfg)?;
    if per_factor_grids.len() != fs.len() {
        return Err(Error::Config("one radius grid per factor".into()));
    }
    let mut total = 1usize;
    for g in per_factor_grids {
        if g.is_empty() {
            return Err(Error::Config("empty radius grid".into()));
        }
        total = total.saturating_mul(g.len());
    }
    if total > INDEPENDENT_GRID_BUDGET {
        return Err(Error::Config(format!(
            "product grid has {total} points, budget is {INDEPENDENT_GRID_BUDGET}"
        )));
    }
    let m = fs.len();
    type TupleEval = (f64, f64, Vec<f64>, bool);
    let results: Vec<Result<TupleEval>> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut ts = vec![0.0; m];
            let mut rem = flat;
            for j in (0..m).rev() {
                let g = per_factor_grids[j].radii();
                ts[j] = g[rem % g.len()];
                rem /= g.len();
            }
            let est = mean_at_radii(fs, x, &ts, cfg)?;
            Ok((est.value.abs(), est.std_error, ts, !est.reliable()))
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    let mut best_se = 0.0;
    let mut best_ts = Vec::new();
    let mut unreliable = false;
    for r in results {
        let (v, se, ts, u) = r?;
        unreliable |= u;
        if v > best {
            best = v;
            best_se = se;
            best_ts = ts;
        }
    }
    Ok(MaximalValue {
        value: best,
        argmax: best_ts,
        std_error: best_se,
        unreliable,
    })
}

/// Mean of `|f|` over the ball `B(x, r)` with a probability-normalized
/// quadrature; maximum over the radius grid.
pub fn hardy_littlewood(
    f: &TestFunction,
    x: &[f64],
    radius_grid: &RadiusGrid,
    quad: QuadSpec,
) -> Result<MaximalValue> {
    let n = f.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            what: "evaluation point",
            expected: n,
            got: x.len(),
        });
    }
    // One unit-ball offset cloud, rescaled per radius.
    let offsets: Option<Vec<f64>> = match quad {
        QuadSpec::MonteCarlo { count, seed } => {
            if count == 0 {
                return Err(Error::Config("node count must be positive".into()));
            }
            let mut rng = rng::substream(seed, HL_TAG);
            let mut out = vec![0.0; count * n];
            for i in 0..count {
                let slot = &mut out[i * n..(i + 1) * n];
                rng::unit_vector(&mut rng, slot);
                let s = rand::Rng::gen::<f64>(&mut rng).powf(1.0 / n as f64);
                for v in slot.iter_mut() {
                    *v *= s;
                }
            }
            Some(out)
        }
        QuadSpec::Product { .. } => None,
    };
    let evals: Vec<Result<(f64, f64, bool)>> = radius_grid
        .radii()
        .par_iter()
        .map(|r| match (&offsets, quad) {
            (Some(us), QuadSpec::MonteCarlo { count, .. }) => {
                let mut point = vec![0.0; n];
                let mut vals = Vec::with_capacity(count);
                let mut rejected = 0usize;
                for i in 0..count {
                    for ((p, xi), u) in point.iter_mut().zip(x).zip(&us[i * n..(i + 1) * n]) {
                        *p = xi + r * u;
                    }
                    match f.eval(&point) {
                        Ok(v) => vals.push(v.abs()),
                        Err(Error::SingularPoint) => rejected += 1,
                        Err(e) => return Err(e),
                    }
                }
                if vals.is_empty() {
                    return Err(Error::Config("all ball nodes singular".into()));
                }
                let (mean, se) = mean_and_se(&vals);
                Ok((mean, se, rejected as f64 > 1e-3 * count as f64))
            }
            (_, QuadSpec::Product { order }) => {
                let rule = product_rule_ball(n, order)?;
                let v_n = ball_volume(n)?;
                let est = integrate(&rule, |u| {
                    let point: Vec<f64> = x.iter().zip(u).map(|(xi, ui)| xi + r * ui).collect();
                    f.eval(&point).map(|v| v.abs()).unwrap_or(f64::NAN)
                })?;
                Ok((est.value / v_n, 0.0, false))
            }
            _ => unreachable!("offset cloud exists exactly for Monte Carlo"),
        })
        .collect();
    fold_maximal(radius_grid.radii(), evals)
}

/// Absolute mean of `f` over the sphere `x - t S^{n-1}` (probability
/// convention); maximum over the radius grid.
pub fn linear_spherical_maximal(
    f: &TestFunction,
    x: &[f64],
    radius_grid: &RadiusGrid,
    quad: QuadSpec,
) -> Result<MaximalValue> {
    let n = f.dim();
    if n < 2 {
        return Err(Error::Domain("spherical maximal requires n >= 2".into()));
    }
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            what: "evaluation point",
            expected: n,
            got: x.len(),
        });
    }
    let directions: Option<Vec<f64>> = match quad {
        QuadSpec::MonteCarlo { count, seed } => {
            if count == 0 {
                return Err(Error::Config("node count must be positive".into()));
            }
            Some(sphere_nodes(n, count, seed, LSM_TAG))
        }
        QuadSpec::Product { .. } => None,
    };
    let evals: Vec<Result<(f64, f64, bool)>> = radius_grid
        .radii()
        .par_iter()
        .map(|t| match (&directions, quad) {
            (Some(nodes), QuadSpec::MonteCarlo { count, .. }) => {
                let mut point = vec![0.0; n];
                let mut vals = Vec::with_capacity(count);
                let mut rejected = 0usize;
                for i in 0..count {
                    for ((p, xi), yi) in point.iter_mut().zip(x).zip(&nodes[i * n..(i + 1) * n]) {
                        *p = xi - t * yi;
                    }
                    match f.eval(&point) {
                        Ok(v) => vals.push(v),
                        Err(Error::SingularPoint) => rejected += 1,
                        Err(e) => return Err(e),
                    }
                }
                if vals.is_empty() {
                    return Err(Error::Config("all sphere nodes singular".into()));
                }
                let (mean, se) = mean_and_se(&vals);
                Ok((mean.abs(), se, rejected as f64 > 1e-3 * count as f64))
            }
            (_, QuadSpec::Product { order }) => {
                let rule = product_rule_sphere(n, order)?;
                let sigma = surface_area(n)?;
                let est = integrate(&rule, |y| {
                    let point: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| xi - t * yi).collect();
                    f.eval(&point).unwrap_or(f64::NAN)
                })?;
                Ok(((est.value / sigma).abs(), 0.0, false))
            }
            _ => unreachable!("direction cloud exists exactly for Monte Carlo"),
        })
        .collect();
    fold_maximal(radius_grid.radii(), evals)
}

fn mean_and_se(vals: &[f64]) -> (f64, f64) {
    let n = vals.len();
    let mean = pairwise_sum(vals) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = vals.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = (pairwise_sum(&dev) / (n as f64 - 1.0)).max(0.0);
    (mean, (var / n as f64).sqrt())
}

fn fold_maximal(radii: &[f64], evals: Vec<Result<(f64, f64, bool)>>) -> Result<MaximalValue> {
    let mut best = f64::NEG_INFINITY;
    let mut best_se = 0.0;
    let mut arg = radii[0];
    let mut unreliable = false;
    for (r, e) in radii.iter().zip(evals) {
        let (v, se, u) = e?;
        unreliable |= u;
        if v > best {
            best = v;
            best_se = se;
            arg = *r;
        }
    }
    Ok(MaximalValue {
        value: best,
        argmax: vec![arg],
        std_error: best_se,
        unreliable,
    })
}

/// Outcome of a domination-ratio evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct DominationResult {
    pub ratio: f64,
    pub numerator: f64,
    pub numerator_std_error: f64,
    pub denominator: f64,
    pub unreliable: bool,
}

/// Ratio of the multilinear maximal value at `x` to the product
/// `prod_{j != k} M f_j(x) * S f_k(x)` of Hardy-Littlewood maximal values
/// and the linear spherical maximal value of the distinguished factor.
/// `k` is 1-based. A zero numerator gives ratio 0; a zero denominator with a
/// positive numerator is reported as infinity.
pub fn domination_ratio(
    fs: &[TestFunction],
    x: &[f64],
    k: usize,
    cfg: &OperatorConfig,
) -> Result<DominationResult> {
    check_inputs(fs, x, cfg)?;
    if k == 0 || k > fs.len() {
        return Err(Error::Config(format!(
            "factor index must satisfy 1 <= k <= {}, got {k}",
            fs.len()
        )));
    }
    if fs.iter().any(|f| !f.nonnegative()) {
        return Err(Error::Domain(
            "domination ratio requires nonnegative factors".into(),
        ));
    }
    let numer = maximal_multi(fs, x, cfg)?;
    let mut denominator = 1.0;
    let mut unreliable = numer.unreliable;
    for (j, f) in fs.iter().enumerate() {
        let factor = if j + 1 == k {
            linear_spherical_maximal(f, x, &cfg.radius_grid, cfg.quad)?
        } else {
            hardy_littlewood(f, x, &cfg.radius_grid, cfg.quad)?
        };
        unreliable |= factor.unreliable;
        denominator *= factor.value;
    }
    let ratio = if numer.value == 0.0 {
        0.0
    } else if denominator == 0.0 {
        f64::INFINITY
    } else {
        numer.value / denominator
    };
    Ok(DominationResult {
        ratio,
        numerator: numer.value,
        numerator_std_error: numer.std_error,
        denominator,
        unreliable,
    })
}

/// Frozen empirical domination constants per `(m, n)`, calibrated once by a
/// triple-density survey over the standard battery and lattice and fixed at
/// 1.2x the observed maximum. The survey asserts no regression above these.
pub fn empirical_domination_constant(m: usize, n: usize) -> Option<f64> {
    match (m, n) {
        (2, 2) => Some(C_EMP_2_2),
        (3, 2) => Some(C_EMP_3_2),
        _ => None,
    }
}

/// Calibrated by `experiments::domination_survey` at triple the standard
/// density, seed 20260810 (observed maxima 1.028751 and 1.003406, frozen at
/// 1.2x; see `examples/calibrate_domination.rs`).
pub const C_EMP_2_2: f64 = 1.2345;
pub const C_EMP_3_2: f64 = 1.2041;
