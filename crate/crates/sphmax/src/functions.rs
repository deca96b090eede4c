//! Test function families and numerical norm estimation.
//!
//! `TestFunction` covers the analytic inputs used throughout: constants,
//! ball indicators, Gaussians, the power-log family
//! `|x|^{-a} (log 1/|x|)^{-b}` truncated to a small ball, and fields sampled
//! on a lattice. Norm estimators compute Lp norms in closed form where the
//! family admits one, by lattice sums otherwise, and weak-Lp quasi-norms by
//! the layer-cake distribution function.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gauss::{adaptive_simpson, pairwise_sum};
use crate::quadrature::{ball_volume, surface_area};

/// A real-valued function on `R^n` from one of the supported families.
#[derive(Debug, Clone)]
pub enum TestFunction {
    Constant {
        dim: usize,
        value: f64,
    },
    BallIndicator {
        center: Vec<f64>,
        radius: f64,
    },
    Gaussian {
        center: Vec<f64>,
        width: f64,
    },
    /// `|x|^{-power} (log 1/|x|)^{-log_power}` on `0 < |x| <= cutoff`, zero
    /// outside. Singular at the origin; evaluation exactly there is an error.
    RadialPowerLog {
        dim: usize,
        power: f64,
        log_power: f64,
        cutoff: f64,
    },
    /// Piecewise-constant interpolation of a lattice field (nearest node).
    LatticeField(Arc<LatticeGrid>),
}

impl TestFunction {
    pub fn constant(dim: usize, value: f64) -> Self {
        TestFunction::Constant { dim, value }
    }

    pub fn ball_indicator(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Domain("indicator radius must be positive".into()));
        }
        Ok(TestFunction::BallIndicator { center, radius })
    }

    pub fn gaussian(center: Vec<f64>, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::Domain("gaussian width must be positive".into()));
        }
        Ok(TestFunction::Gaussian { center, width })
    }

    pub fn radial_power_log(dim: usize, power: f64, log_power: f64, cutoff: f64) -> Result<Self> {
        if !(power > 0.0) || log_power < 0.0 || !(cutoff > 0.0 && cutoff < 1.0) {
            return Err(Error::Domain(format!(
                "power-log parameters out of range: a={power}, b={log_power}, nu={cutoff}"
            )));
        }
        Ok(TestFunction::RadialPowerLog {
            dim,
            power,
            log_power,
            cutoff,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            TestFunction::Constant { dim, .. } => *dim,
            TestFunction::BallIndicator { center, .. } => center.len(),
            TestFunction::Gaussian { center, .. } => center.len(),
            TestFunction::RadialPowerLog { dim, .. } => *dim,
            TestFunction::LatticeField(grid) => grid.dim(),
        }
    }

    /// Pointwise evaluation.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        debug_assert_eq!(x.len(), self.dim());
        match self {
            TestFunction::Constant { value, .. } => Ok(*value),
            TestFunction::BallIndicator { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                Ok(if d2 <= radius * radius { 1.0 } else { 0.0 })
            }
            TestFunction::Gaussian { center, width } => {
                let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                Ok((-d2 / (width * width)).exp())
            }
            TestFunction::RadialPowerLog {
                power,
                log_power,
                cutoff,
                ..
            } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                if r2 == 0.0 {
                    return Err(Error::SingularPoint);
                }
                let r = r2.sqrt();
                if r > *cutoff {
                    return Ok(0.0);
                }
                Ok(r.powf(-power) * (1.0 / r).ln().powf(-log_power))
            }
            TestFunction::LatticeField(grid) => Ok(grid.nearest_value(x).unwrap_or(0.0)),
        }
    }

    /// The dilated function `x -> f(lambda x)`, within the same family.
    /// Exists for constants, indicators and Gaussians; the power-log family
    /// is not closed under dilation because of the logarithm.
    pub fn dilate(&self, lambda: f64) -> Result<TestFunction> {
        if !(lambda > 0.0) {
            return Err(Error::Domain("dilation factor must be positive".into()));
        }
        match self {
            TestFunction::Constant { dim, value } => Ok(TestFunction::Constant {
                dim: *dim,
                value: *value,
            }),
            TestFunction::BallIndicator { center, radius } => Ok(TestFunction::BallIndicator {
                center: center.iter().map(|c| c / lambda).collect(),
                radius: radius / lambda,
            }),
            TestFunction::Gaussian { center, width } => Ok(TestFunction::Gaussian {
                center: center.iter().map(|c| c / lambda).collect(),
                width: width / lambda,
            }),
            _ => Err(Error::Domain(
                "dilation is only defined for constants, indicators and gaussians".into(),
            )),
        }
    }

    /// True when the function is nonnegative everywhere (all families here
    /// are, except negative constants or fields).
    pub fn nonnegative(&self) -> bool {
        match self {
            TestFunction::Constant { value, .. } => *value >= 0.0,
            TestFunction::LatticeField(grid) => grid.values().iter().all(|v| *v >= 0.0),
            _ => true,
        }
    }

    /// Support radius for functions vanishing outside a ball centered at the
    /// origin; `None` when unbounded or not centered.
    pub fn radial_support(&self) -> Option<f64> {
        match self {
            TestFunction::RadialPowerLog { cutoff, .. } => Some(*cutoff),
            TestFunction::BallIndicator { center, radius } => {
                if center.iter().all(|c| *c == 0.0) {
                    Some(*radius)
                } else {
                    None
                }
            }
            _ => None,
        }
    }
}

/// A scalar field on a uniform rectangular lattice, row-major values.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeGrid {
    dim: usize,
    origin: Vec<f64>,
    spacing: f64,
    extents: Vec<usize>,
    values: Vec<f64>,
}

impl LatticeGrid {
    pub fn new(
        origin: Vec<f64>,
        spacing: f64,
        extents: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let dim = origin.len();
        if dim == 0 || extents.len() != dim {
            return Err(Error::Domain("lattice origin/extents mismatch".into()));
        }
        if !(spacing > 0.0) {
            return Err(Error::Domain("lattice spacing must be positive".into()));
        }
        let count: usize = extents.iter().product();
        if values.len() != count {
            return Err(Error::DimensionMismatch {
                what: "lattice values",
                expected: count,
                got: values.len(),
            });
        }
        Ok(LatticeGrid {
            dim,
            origin,
            spacing,
            extents,
            values,
        })
    }

    /// Sample `f` on a symmetric lattice over `[-half_width, half_width]^n`
    /// with the first node offset by `h/2` on every axis, so that functions
    /// singular at the origin are never evaluated there.
    pub fn sample_centered(f: &TestFunction, half_width: f64, spacing: f64) -> Result<Self> {
        let n = f.dim();
        let per_axis = ((2.0 * half_width) / spacing).round() as usize;
        if per_axis == 0 {
            return Err(Error::Domain("lattice would be empty".into()));
        }
        let origin = vec![-half_width + spacing / 2.0; n];
        let extents = vec![per_axis; n];
        let count: usize = extents.iter().product();
        let org = origin.clone();
        let values: std::result::Result<Vec<f64>, Error> = (0..count)
            .into_par_iter()
            .map(|idx| {
                let mut x = vec![0.0; n];
                let mut rem = idx;
                for a in (0..n).rev() {
                    let i = rem % per_axis;
                    rem /= per_axis;
                    x[a] = org[a] + spacing * i as f64;
                }
                f.eval(&x)
            })
            .collect();
        LatticeGrid::new(origin, spacing, extents, values?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn spacing(&self) -> f64 {
        self.spacing
    }
    pub fn origin(&self) -> &[f64] {
        &self.origin
    }
    pub fn extents(&self) -> &[usize] {
        &self.extents
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    /// Volume of one lattice cell, `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Coordinates of the node with flat row-major index `idx`.
    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        let mut rem = idx;
        for a in (0..self.dim).rev() {
            let i = rem % self.extents[a];
            rem /= self.extents[a];
            x[a] = self.origin[a] + self.spacing * i as f64;
        }
        x
    }

    /// Value at the nearest lattice node, `None` outside the lattice box.
    pub fn nearest_value(&self, x: &[f64]) -> Option<f64> {
        let mut idx = 0usize;
        for (a, xa) in x.iter().enumerate().take(self.dim) {
            let t = (xa - self.origin[a]) / self.spacing;
            let i = t.round();
            if i < 0.0 || i >= self.extents[a] as f64 {
                return None;
            }
            idx = idx * self.extents[a] + i as usize;
        }
        Some(self.values[idx])
    }

    /// CSV serialization: a small header (dim, origin, spacing, extents)
    /// followed by one value per line in row-major order.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("dim,{}\n", self.dim));
        out.push_str("origin");
        for o in &self.origin {
            out.push_str(&format!(",{o:?}"));
        }
        out.push('\n');
        out.push_str(&format!("spacing,{:?}\n", self.spacing));
        out.push_str("extents");
        for e in &self.extents {
            out.push_str(&format!(",{e}"));
        }
        out.push('\n');
        out.push_str("value\n");
        for v in &self.values {
            out.push_str(&format!("{v:?}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let bad = |what: &str| Error::Config(format!("lattice CSV: {what}"));
        let dim_line = lines.next().ok_or_else(|| bad("missing dim line"))?;
        let dim: usize = dim_line
            .strip_prefix("dim,")
            .ok_or_else(|| bad("expected dim,<n>"))?
            .trim()
            .parse()
            .map_err(|_| bad("bad dim"))?;
        let origin_line = lines.next().ok_or_else(|| bad("missing origin"))?;
        let origin: Vec<f64> = origin_line
            .strip_prefix("origin")
            .ok_or_else(|| bad("expected origin row"))?
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| s.trim().parse().map_err(|_| bad("bad origin value")))
            .collect::<Result<_>>()?;
        let spacing_line = lines.next().ok_or_else(|| bad("missing spacing"))?;
        let spacing: f64 = spacing_line
            .strip_prefix("spacing,")
            .ok_or_else(|| bad("expected spacing,<h>"))?
            .trim()
            .parse()
            .map_err(|_| bad("bad spacing"))?;
        let extents_line = lines.next().ok_or_else(|| bad("missing extents"))?;
        let extents: Vec<usize> = extents_line
            .strip_prefix("extents")
            .ok_or_else(|| bad("expected extents row"))?
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| s.trim().parse().map_err(|_| bad("bad extent")))
            .collect::<Result<_>>()?;
        match lines.next() {
            Some("value") => {}
            _ => return Err(bad("expected value header")),
        }
        let values: Vec<f64> = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse().map_err(|_| bad("bad value")))
            .collect::<Result<_>>()?;
        if origin.len() != dim {
            return Err(bad("origin length does not match dim"));
        }
        LatticeGrid::new(origin, spacing, extents, values)
    }
}

/// How a norm value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NormMethodTag {
    ClosedForm,
    LatticeSum,
    LayerCake,
}

/// A norm value together with its provenance. Divergent norms are reported
/// as `f64::INFINITY`, a distinguished value rather than an error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub method: NormMethodTag,
    /// Lattice spacing behind the estimate; 0 for closed forms.
    pub resolution: f64,
}

/// Evaluation strategy for [`lp_norm`].
pub enum NormMethod<'a> {
    ClosedForm,
    Lattice(&'a LatticeGrid),
}

/// The Lp norm of a test function, `0 < p < infinity`.
///
/// Closed forms exist for constants, ball indicators, Gaussians and the
/// power-log family (whose radial profile is integrated adaptively after the
/// substitution `t = log(1/r)`). The lattice path computes
/// `(sum |f|^p h^n)^{1/p}`.
pub fn lp_norm(f: &TestFunction, p: f64, method: NormMethod) -> Result<NormEstimate> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::Domain(format!("need 0 < p < infinity, got {p}")));
    }
    match method {
        NormMethod::Lattice(grid) => {
            if grid.dim() != f.dim() {
                return Err(Error::DimensionMismatch {
                    what: "norm lattice",
                    expected: f.dim(),
                    got: grid.dim(),
                });
            }
            let n = grid.len();
            let powers: std::result::Result<Vec<f64>, Error> = (0..n)
                .into_par_iter()
                .map(|i| Ok(f.eval(&grid.coords(i))?.abs().powf(p)))
                .collect();
            let total = pairwise_sum(&powers?) * grid.cell_volume();
            Ok(NormEstimate {
                value: total.powf(1.0 / p),
                method: NormMethodTag::LatticeSum,
                resolution: grid.spacing(),
            })
        }
        NormMethod::ClosedForm => {
            let n = f.dim();
            let value = match f {
                TestFunction::Constant { value, .. } => {
                    if *value == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                }
                TestFunction::BallIndicator { radius, .. } => {
                    (ball_volume(n)? * radius.powi(n as i32)).powf(1.0 / p)
                }
                TestFunction::Gaussian { width, .. } => {
                    // int exp(-p |x|^2 / w^2) dx = (pi w^2 / p)^{n/2}
                    (PI * width * width / p).powf(n as f64 / (2.0 * p))
                }
                TestFunction::RadialPowerLog {
                    power,
                    log_power,
                    cutoff,
                    ..
                } => radial_power_log_lp(n, *power, *log_power, *cutoff, p)?,
                TestFunction::LatticeField(_) => {
                    return Err(Error::Domain(
                        "no closed-form norm for lattice fields; pass the grid".into(),
                    ))
                }
            };
            Ok(NormEstimate {
                value,
                method: NormMethodTag::ClosedForm,
                resolution: 0.0,
            })
        }
    }
}

/// Lp norm of the power-log profile by the 1-D radial integral
/// `sigma(n) int_0^nu r^{n-1-ap} (log 1/r)^{-bp} dr`, transformed by
/// `t = log(1/r)` into `sigma(n) int_{t0}^inf e^{-(n-ap) t} t^{-bp} dt`.
/// Returns infinity when the integral diverges.
fn radial_power_log_lp(n: usize, a: f64, b: f64, nu: f64, p: f64) -> Result<f64> {
    let gamma = n as f64 - a * p; // decay rate in t
    let beta = b * p;
    let t0 = (1.0 / nu).ln();
    let sigma = surface_area(n)?;
    let integral = if gamma > 1e-12 {
        let span = 120.0 / gamma;
        let f = |t: f64| (-gamma * t).exp() * t.powf(-beta);
        let scale = ((-gamma * t0).exp() * t0.powf(-beta)).max(1e-300);
        adaptive_simpson(&f, t0, t0 + span, 1e-12 * scale)
    } else if gamma.abs() <= 1e-12 {
        // Critical scaling a p = n: integral of t^{-beta} from t0.
        if beta > 1.0 {
            t0.powf(1.0 - beta) / (beta - 1.0)
        } else {
            return Ok(f64::INFINITY);
        }
    } else {
        return Ok(f64::INFINITY);
    };
    Ok((sigma * integral).powf(1.0 / p))
}

/// Default number of points in the geometric level grid of the weak-Lp
/// estimator.
pub const WEAK_LAMBDA_POINTS: usize = 200;

/// Superlevel sets smaller than this many lattice cells are below the
/// resolution of the distribution-function estimate and are excluded from
/// the supremum (relaxed to the field size for small fields). Near a sampled
/// singularity the finest few cells otherwise dominate the supremum with
/// pure discretization artifacts.
pub const WEAK_MIN_RESOLVED_CELLS: usize = 200;

/// Weak-Lp quasi-norm of a lattice field by the layer-cake formula:
/// `sup over lambda of lambda * d(lambda)^{1/p}` where
/// `d(lambda) = h^n #{nodes with value >= lambda}` (the left limit of the
/// distribution function, which the supremum attains). The levels run over a
/// geometric grid from the smallest positive value to the largest.
pub fn weak_lp_quasinorm(field: &LatticeGrid, p: f64) -> Result<NormEstimate> {
    weak_lp_quasinorm_with(field, p, WEAK_LAMBDA_POINTS, WEAK_MIN_RESOLVED_CELLS)
}

pub fn weak_lp_quasinorm_with(
    field: &LatticeGrid,
    p: f64,
    lambda_points: usize,
    min_resolved_cells: usize,
) -> Result<NormEstimate> {
    if !(p > 0.0) {
        return Err(Error::Domain(format!("need p > 0, got {p}")));
    }
    if lambda_points < 2 {
        return Err(Error::Domain("need at least two level points".into()));
    }
    if field.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("field values must be finite".into()));
    }
    let mut positive: Vec<f64> = field
        .values()
        .iter()
        .copied()
        .filter(|v| *v > 0.0)
        .collect();
    if positive.is_empty() {
        return Ok(NormEstimate {
            value: 0.0,
            method: NormMethodTag::LayerCake,
            resolution: field.spacing(),
        });
    }
    positive.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let min_cells = min_resolved_cells.min(positive.len()).max(1);
    let v_min = *positive.last().unwrap();
    let v_max = positive[0];
    let cell = field.cell_volume();
    let ratio = if v_max > v_min {
        (v_max / v_min).powf(1.0 / (lambda_points as f64 - 1.0))
    } else {
        1.0
    };
    let mut best = 0.0f64;
    let mut lambda = v_min;
    for i in 0..lambda_points {
        if i > 0 {
            lambda *= ratio;
        }
        // count of values >= lambda in a descending-sorted vector
        let count = positive.partition_point(|v| *v >= lambda);
        if count >= min_cells {
            let d = cell * count as f64;
            best = best.max(lambda * d.powf(1.0 / p));
        }
    }
    Ok(NormEstimate {
        value: best,
        method: NormMethodTag::LayerCake,
        resolution: field.spacing(),
    })
}

/// `L^{p,1}` norm of the indicator of a set with the given measure:
/// `p * measure^{1/p}` by the layer-cake formula for Lorentz norms.
pub fn lorentz_p1_indicator(measure: f64, p: f64) -> Result<f64> {
    if measure < 0.0 {
        return Err(Error::Domain("measure must be nonnegative".into()));
    }
    if !(p > 0.0) {
        return Err(Error::Domain("need p > 0".into()));
    }
    Ok(p * measure.powf(1.0 / p))
}
