//! Reproduction harness: scaling-law scans for the counterexample families,
//! the ratio monotonicity check for power-log profiles, the slicing identity
//! survey, and the pointwise domination survey.
//!
//! Every experiment is a pure function of `(configuration, seed)`; reports
//! serialize to CSV (per-scale values) and JSON (fit summary and verdict).

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functions::{lp_norm, NormMethod, TestFunction};
use crate::operators::{
    empirical_domination_constant, hardy_littlewood, linear_spherical_maximal, maximal_multi,
    spherical_mean_multi, BallScheme, InnerScheme, OperatorConfig, QuadSpec, RadiusGrid,
    SliceScheme,
};
use crate::quadrature::{integrate, sample_ball, sample_sphere, slice_integrate, surface_area};
use crate::region::ExponentTuple;
use crate::rng;

/// Least-squares fit of `log(value)` against `log(scale)`.
#[derive(Debug, Clone, Serialize)]
pub struct SlopeFit {
    pub log_scale: Vec<f64>,
    pub log_value: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fit a power law through `(scale, value)` pairs. Requires at least four
/// points with positive values.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 4 {
        return Err(Error::Domain(format!(
            "power-law fit needs >= 4 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|(s, v)| !(*s > 0.0) || !(*v > 0.0)) {
        return Err(Error::Domain(
            "power-law fit needs positive scales and values".into(),
        ));
    }
    let log_scale: Vec<f64> = points.iter().map(|(s, _)| s.ln()).collect();
    let log_value: Vec<f64> = points.iter().map(|(_, v)| v.ln()).collect();
    let n = points.len() as f64;
    let mx = log_scale.iter().sum::<f64>() / n;
    let my = log_value.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in log_scale.iter().zip(&log_value) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::Domain("degenerate fit: all scales equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = syy - slope * sxy;
    let r_squared = if syy <= 1e-300 {
        1.0 // flat data perfectly fit by a horizontal line
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(SlopeFit {
        log_scale,
        log_value,
        slope,
        intercept,
        r_squared,
    })
}

/// One measured point of a scaling scan.
#[derive(Debug, Clone, Serialize)]
pub struct ScanPoint {
    pub scale: f64,
    pub value: f64,
    pub std_error: f64,
    pub rejected: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

/// A reproducible experiment result: configuration echo, per-scale values,
/// the power-law fit and the verdict against the expected exponent.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub config: serde_json::Value,
    pub points: Vec<ScanPoint>,
    pub fit: Option<SlopeFit>,
    pub expected_slope: Option<f64>,
    pub slope_tolerance: Option<f64>,
    pub min_r_squared: Option<f64>,
    pub outcome: Outcome,
    pub details: String,
}

impl ExperimentReport {
    /// CSV with columns `R,value,std_error`.
    pub fn points_csv(&self) -> String {
        let mut out = String::from("R,value,std_error\n");
        for p in &self.points {
            out.push_str(&format!("{:?},{:?},{:?}\n", p.scale, p.value, p.std_error));
        }
        out
    }

    /// Pretty JSON summary (slope, r_squared, outcome, per-point data).
    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}

/// The extremal input family for the critical-exponent scan: power-log
/// profiles `|y|^{-n/p_j} (log 1/|y|)^{-m/p_j}` truncated at
/// `nu_j = e^{-m/n}/100` for all but the last factor and `nu_m = e^{-m/n}/2`
/// for the last. Requires every exponent finite (`1/p_j > 0`).
pub fn prop1_functions(tuple: &ExponentTuple) -> Result<Vec<TestFunction>> {
    let m = tuple.factors();
    let n = tuple.ambient_dim();
    let base = (-(m as f64) / n as f64).exp();
    tuple
        .recips()
        .iter()
        .enumerate()
        .map(|(j, r)| {
            let recip = ratio_to_f64(r);
            if recip <= 0.0 {
                return Err(Error::Domain(
                    "the extremal family needs finite exponents (1/p_j > 0)".into(),
                ));
            }
            let a = n as f64 * recip;
            let b = m as f64 * recip;
            let nu = if j + 1 == m { base / 2.0 } else { base / 100.0 };
            TestFunction::radial_power_log(n, a, b, nu)
        })
        .collect()
}

fn ratio_to_f64(r: &crate::region::Q) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Scan parameters for the critical-decay experiment.
#[derive(Debug, Clone, Serialize)]
pub struct Prop1Params {
    pub ball_count: usize,
    /// Smallest sampled block radius relative to the block support radius.
    pub min_radius_rel: f64,
    pub cap_panels: usize,
    pub slope_tolerance: f64,
    pub min_r_squared: f64,
}

impl Prop1Params {
    /// Defaults per factor count: tolerance 0.3 at m = 2, widened to 0.4
    /// for higher multilinearity where per-point variance is larger.
    pub fn for_factors(m: usize) -> Self {
        Prop1Params {
            ball_count: if m <= 2 { 60_000 } else { 120_000 },
            min_radius_rel: 1e-58,
            cap_panels: 40,
            slope_tolerance: if m <= 2 { 0.3 } else { 0.4 },
            min_r_squared: 0.95,
        }
    }
}

fn validate_scan_radii(m: usize, r_list: &[f64]) -> Result<()> {
    if r_list.len() < 4 {
        return Err(Error::Config("need at least 4 scan radii".into()));
    }
    let r_min = (2 * (m - 1) + 1).max(16) as f64;
    if r_list[0] < r_min {
        return Err(Error::Config(format!(
            "smallest scan radius must be >= {r_min} so the slice radius stays above 1/2"
        )));
    }
    let ratio = r_list[1] / r_list[0];
    for w in r_list.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Config("scan radii must increase".into()));
        }
        if ((w[1] / w[0]) / ratio - 1.0).abs() > 1e-6 {
            return Err(Error::Config("scan radii must be geometric".into()));
        }
    }
    Ok(())
}

/// Critical-exponent decay scan: evaluates the fixed-radius m-linear mean of
/// the extremal family at `x = R e_1` with dilation `sqrt(m) R` for each `R`,
/// through the sliced path with support-adapted sampling, and fits the decay
/// exponent. The expected slope is `1 - mn`.
pub fn prop1_scan(
    tuple: &ExponentTuple,
    r_list: &[f64],
    seed: u64,
    params: &Prop1Params,
) -> Result<ExperimentReport> {
    let m = tuple.factors();
    let n = tuple.ambient_dim();
    if tuple.recip_p() != tuple.critical_sum() {
        return Err(Error::Config(format!(
            "the decay scan requires the critical tuple: sum 1/p_j = {}, need {}",
            tuple.recip_p(),
            tuple.critical_sum()
        )));
    }
    validate_scan_radii(m, r_list)?;
    let fs = prop1_functions(tuple)?;
    let base = (-(m as f64) / n as f64).exp();
    let nu_small = base / 100.0;
    let sqrt_m = (m as f64).sqrt();

    let points: Vec<Result<ScanPoint>> = r_list
        .par_iter()
        .map(|&big_r| {
            let mut center = vec![0.0; n];
            center[0] = 1.0 / sqrt_m;
            let scheme = SliceScheme {
                split: m - 1,
                ball: BallScheme::BlockLogRadial {
                    count: params.ball_count,
                    block_dim: n,
                    centers: vec![center; m - 1],
                    radii: vec![nu_small / (sqrt_m * big_r); m - 1],
                    min_radius_rel: params.min_radius_rel,
                },
                inner: InnerScheme::SupportCap {
                    panels: params.cap_panels,
                },
            };
            let cfg = OperatorConfig {
                factors: m,
                dim: n,
                quad: QuadSpec::MonteCarlo {
                    count: params.ball_count,
                    seed,
                },
                radius_grid: RadiusGrid::geometric(1.0, 1.0, 1).expect("single radius"),
                slicing: Some(scheme),
                refinement: false,
            };
            let mut x = vec![0.0; n];
            x[0] = big_r;
            let est = spherical_mean_multi(&fs, &x, sqrt_m * big_r, &cfg)?;
            Ok(ScanPoint {
                scale: big_r,
                value: est.value,
                std_error: est.std_error,
                rejected: est.rejected,
            })
        })
        .collect();
    let points: Vec<ScanPoint> = points.into_iter().collect::<Result<_>>()?;

    let expected = 1.0 - (m * n) as f64;
    let config = serde_json::json!({
        "experiment": "critical-decay",
        "m": m, "n": n,
        "recips": tuple.recips().iter().map(|r| r.to_string()).collect::<Vec<_>>(),
        "R": r_list,
        "seed": seed,
        "params": params,
    });
    finish_scan_report(
        "prop1-decay",
        config,
        points,
        expected,
        params.slope_tolerance,
        params.min_r_squared,
    )
}

fn finish_scan_report(
    name: &str,
    config: serde_json::Value,
    points: Vec<ScanPoint>,
    expected_slope: f64,
    slope_tolerance: f64,
    min_r_squared: f64,
) -> Result<ExperimentReport> {
    let unreliable = points
        .iter()
        .any(|p| p.rejected as f64 > 1e-3 * p.value.max(1.0) || !p.value.is_finite());
    let nonpositive = points.iter().any(|p| p.value <= 0.0);
    if unreliable || nonpositive {
        return Ok(ExperimentReport {
            name: name.into(),
            config,
            points,
            fit: None,
            expected_slope: Some(expected_slope),
            slope_tolerance: Some(slope_tolerance),
            min_r_squared: Some(min_r_squared),
            outcome: Outcome::Inconclusive,
            details: "unreliable or nonpositive estimates; no fit attempted".into(),
        });
    }
    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.scale, p.value)).collect();
    let fit = fit_power_law(&pairs)?;
    let slope_ok = (fit.slope - expected_slope).abs() <= slope_tolerance;
    let r2_ok = fit.r_squared >= min_r_squared;
    let outcome = if slope_ok && r2_ok {
        Outcome::Pass
    } else {
        Outcome::Fail
    };
    let details = format!(
        "slope {:.4} (expected {:.1} +- {}), r^2 {:.4} (min {})",
        fit.slope, expected_slope, slope_tolerance, fit.r_squared, min_r_squared
    );
    Ok(ExperimentReport {
        name: name.into(),
        config,
        points,
        fit: Some(fit),
        expected_slope: Some(expected_slope),
        slope_tolerance: Some(slope_tolerance),
        min_r_squared: Some(min_r_squared),
        outcome,
        details,
    })
}

/// Result of the sub-critical divergence check: cumulative estimates over
/// nested annular strata approaching the singular center.
#[derive(Debug, Clone, Serialize)]
pub struct DivergenceReport {
    pub config: serde_json::Value,
    /// Cumulative estimate after each refinement level.
    pub cumulative: Vec<f64>,
    pub outcome: Outcome,
    pub details: String,
}

/// For tuples beyond the critical hyperplane the fixed-radius mean diverges:
/// each annular stratum closer to the singular center contributes more mass.
/// The check accumulates strata `[rho 4^{-i}, rho 4^{-i+1}]` and verifies
/// strict growth; the cumulative sequence is monotone by construction
/// (nonnegative strata), so the verdict is about strictness and margin.
pub fn prop1_subcritical_divergence(
    tuple: &ExponentTuple,
    big_r: f64,
    levels: usize,
    count_per_level: usize,
    seed: u64,
) -> Result<DivergenceReport> {
    let m = tuple.factors();
    let n = tuple.ambient_dim();
    if tuple.recip_p() <= tuple.critical_sum() {
        return Err(Error::Config(
            "divergence check needs a tuple beyond the critical hyperplane".into(),
        ));
    }
    if levels < 2 {
        return Err(Error::Config("need at least two refinement levels".into()));
    }
    validate_scan_radii(m, &[big_r, big_r * 2.0, big_r * 4.0, big_r * 8.0])?;
    let fs = prop1_functions(tuple)?;
    let base = (-(m as f64) / n as f64).exp();
    let nu_small = base / 100.0;
    let sqrt_m = (m as f64).sqrt();
    let rho = nu_small / (sqrt_m * big_r);
    let mut center = vec![0.0; n];
    center[0] = 1.0 / sqrt_m;
    let mut x = vec![0.0; n];
    x[0] = big_r;

    let mut cumulative = Vec::with_capacity(levels);
    let mut total = 0.0;
    for level in 0..levels {
        let shell_outer = rho * 0.25f64.powi(level as i32);
        let scheme = SliceScheme {
            split: m - 1,
            ball: BallScheme::BlockLogRadial {
                count: count_per_level,
                block_dim: n,
                centers: vec![center.clone(); m - 1],
                radii: vec![shell_outer; m - 1],
                min_radius_rel: 0.25,
            },
            inner: InnerScheme::SupportCap { panels: 40 },
        };
        let cfg = OperatorConfig {
            factors: m,
            dim: n,
            quad: QuadSpec::MonteCarlo {
                count: count_per_level,
                seed: seed.wrapping_add(level as u64),
            },
            radius_grid: RadiusGrid::geometric(1.0, 1.0, 1).expect("single radius"),
            slicing: Some(scheme),
            refinement: false,
        };
        let est = spherical_mean_multi(&fs, &x, sqrt_m * big_r, &cfg)?;
        total += est.value.max(0.0);
        cumulative.push(total);
    }
    let strictly_increasing = cumulative.windows(2).all(|w| w[1] > w[0]);
    let growing = cumulative.windows(2).all(|w| w[1] > w[0] * 1.5); // strata should grow geometrically
    let outcome = if strictly_increasing && growing {
        Outcome::Pass
    } else if strictly_increasing {
        Outcome::Inconclusive
    } else {
        Outcome::Fail
    };
    Ok(DivergenceReport {
        config: serde_json::json!({
            "experiment": "subcritical-divergence",
            "m": m, "n": n,
            "recips": tuple.recips().iter().map(|r| r.to_string()).collect::<Vec<_>>(),
            "R": big_r, "levels": levels, "count_per_level": count_per_level, "seed": seed,
        }),
        cumulative: cumulative.clone(),
        outcome,
        details: format!("cumulative estimates {cumulative:?}"),
    })
}

/// Scan parameters for the indicator-family decay experiment.
#[derive(Debug, Clone, Serialize)]
pub struct Prop2Params {
    pub ball_count: usize,
    pub inner_count: usize,
    pub slope_tolerance: f64,
    pub min_r_squared: f64,
}

impl Prop2Params {
    pub fn for_factors(m: usize) -> Self {
        Prop2Params {
            ball_count: 4000,
            inner_count: 64,
            slope_tolerance: if m <= 2 { 0.3 } else { 0.4 },
            min_r_squared: 0.95,
        }
    }
}

/// Indicator-family decay scan: `k` small-ball indicators and `m - k`
/// constant factors, evaluated at `x = R e_1` with dilation `sqrt(m) R`.
/// The sampling region is the ball around the indicator block centers of
/// radius `1/(2 m R)`, strictly inside the support, so the product factor is
/// identically one there and the mean decays like `R^{-kn}` exactly.
pub fn prop2_scan(
    m: usize,
    n: usize,
    k: usize,
    r_list: &[f64],
    seed: u64,
    params: &Prop2Params,
) -> Result<ExperimentReport> {
    if m < 2 || n < 2 {
        return Err(Error::Config("need m, n >= 2".into()));
    }
    if k == 0 || k >= m {
        return Err(Error::Config(format!("need 1 <= k < m, got k={k}")));
    }
    validate_scan_radii(m, r_list)?;
    let mut fs = Vec::with_capacity(m);
    for _ in 0..k {
        fs.push(TestFunction::ball_indicator(vec![0.0; n], 0.5)?);
    }
    for _ in k..m {
        fs.push(TestFunction::constant(n, 1.0));
    }
    let sqrt_m = (m as f64).sqrt();
    let mut region_center = vec![0.0; k * n];
    for block in 0..k {
        region_center[block * n] = 1.0 / sqrt_m;
    }

    let points: Vec<Result<ScanPoint>> = r_list
        .par_iter()
        .map(|&big_r| {
            let scheme = SliceScheme {
                split: k,
                ball: BallScheme::RegionUniform {
                    count: params.ball_count,
                    center: region_center.clone(),
                    radius: 1.0 / (2.0 * m as f64 * big_r),
                },
                inner: InnerScheme::MonteCarlo {
                    count: params.inner_count,
                },
            };
            let cfg = OperatorConfig {
                factors: m,
                dim: n,
                quad: QuadSpec::MonteCarlo {
                    count: params.ball_count,
                    seed,
                },
                radius_grid: RadiusGrid::geometric(1.0, 1.0, 1).expect("single radius"),
                slicing: Some(scheme),
                refinement: false,
            };
            let mut x = vec![0.0; n];
            x[0] = big_r;
            let est = spherical_mean_multi(&fs, &x, sqrt_m * big_r, &cfg)?;
            Ok(ScanPoint {
                scale: big_r,
                value: est.value,
                std_error: est.std_error,
                rejected: est.rejected,
            })
        })
        .collect();
    let points: Vec<ScanPoint> = points.into_iter().collect::<Result<_>>()?;
    let expected = -((k * n) as f64);
    let config = serde_json::json!({
        "experiment": "indicator-decay",
        "m": m, "n": n, "k": k,
        "R": r_list,
        "seed": seed,
        "params": params,
    });
    finish_scan_report(
        "prop2-decay",
        config,
        points,
        expected,
        params.slope_tolerance,
        params.min_r_squared,
    )
}

/// Result of the power-log ratio monotonicity check.
#[derive(Debug, Clone, Serialize)]
pub struct Lemma2Report {
    pub config: serde_json::Value,
    pub max_ratio: f64,
    pub bound: f64,
    pub samples: usize,
    pub outcome: Outcome,
}

/// Sample pairs `t <= C s` with `t, s < e^{-r2/r1}` and verify that
/// `s^{-r1} (log 1/s)^{-r2} <= C' t^{-r1} (log 1/t)^{-r2}` with
/// `C' = C^{r1}`: the profile `x^{r1} (log x)^{-r2}` is increasing beyond
/// `e^{r2/r1}`, which pins the constant. Half the samples sit exactly on the
/// boundary `t = C s` where the ratio peaks.
pub fn lemma2_check(
    r1: f64,
    r2: f64,
    c_factor: f64,
    samples: usize,
    seed: u64,
) -> Result<Lemma2Report> {
    if !(r1 > 0.0) || !(r2 > 0.0) {
        return Err(Error::Domain("need r1, r2 > 0".into()));
    }
    if c_factor < 1.0 {
        return Err(Error::Domain("need C >= 1".into()));
    }
    if samples == 0 {
        return Err(Error::Config("empty sample region".into()));
    }
    let beta = (-r2 / r1).exp();
    let log_ratio = |s: f64, t: f64| -> f64 {
        // log of [s^{-r1} (log 1/s)^{-r2}] / [t^{-r1} (log 1/t)^{-r2}]
        r1 * (t.ln() - s.ln()) + r2 * ((1.0 / t).ln().ln() - (1.0 / s).ln().ln())
    };
    let span = 40.0 * std::f64::consts::LN_10; // s down to beta * 1e-40
    let chunk = 65_536usize;
    let n_chunks = samples.div_ceil(chunk);
    let maxima: Vec<f64> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = ((c + 1) * chunk).min(samples);
            let mut rng = rng::substream(seed, c as u64);
            let mut best = f64::NEG_INFINITY;
            for i in lo..hi {
                let u: f64 = rand::Rng::gen(&mut rng);
                let s = beta * (-span * (1.0 - u)).exp();
                let t = if i % 2 == 0 {
                    // boundary sample, clipped inside the admissible region
                    (c_factor * s).min(beta * (1.0 - 1e-12))
                } else {
                    let v: f64 = rand::Rng::gen(&mut rng);
                    let t_hi = (c_factor * s).min(beta * (1.0 - 1e-12));
                    t_hi * (-10.0 * std::f64::consts::LN_10 * v).exp()
                };
                best = best.max(log_ratio(s, t));
            }
            best
        })
        .collect();
    let max_ratio = maxima.into_iter().fold(f64::NEG_INFINITY, f64::max).exp();
    let bound = c_factor.powf(r1);
    let outcome = if max_ratio <= bound + 1e-9 {
        Outcome::Pass
    } else {
        Outcome::Fail
    };
    Ok(Lemma2Report {
        config: serde_json::json!({
            "experiment": "power-log-ratio",
            "r1": r1, "r2": r2, "C": c_factor, "samples": samples, "seed": seed,
        }),
        max_ratio,
        bound,
        samples,
        outcome,
    })
}

/// One comparison row of the slicing identity survey.
#[derive(Debug, Clone, Serialize)]
pub struct SliceRow {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub integrand: String,
    pub direct: f64,
    pub direct_se: f64,
    pub sliced: f64,
    pub sliced_se: f64,
    /// |difference| in units of the combined standard error.
    pub sigma_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SliceSurveyReport {
    pub config: serde_json::Value,
    pub rows: Vec<SliceRow>,
    pub max_sigma_distance: f64,
    /// Deviation of the constant integrand at (2,2,1) from the closed-form
    /// total measure of the big sphere, in combined standard errors.
    pub constant_check_sigma: Option<f64>,
    pub outcome: Outcome,
}

type SurveyFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Analytic battery on `R^d`: constants, coordinate monomials up to degree
/// four, and Gaussians centered on and off the sphere.
fn survey_battery(d: usize) -> Vec<(String, SurveyFn)> {
    let mut fs: Vec<(String, SurveyFn)> = vec![
        ("1".into(), Box::new(|_| 1.0)),
        ("y1".into(), Box::new(|y: &[f64]| y[0])),
        ("y1^2".into(), Box::new(|y: &[f64]| y[0] * y[0])),
        ("y1*y2".into(), Box::new(|y: &[f64]| y[0] * y[1])),
        (
            "y1^2*y2^2".into(),
            Box::new(|y: &[f64]| y[0] * y[0] * y[1] * y[1]),
        ),
        ("y1^4".into(), Box::new(|y: &[f64]| y[0].powi(4))),
    ];
    let on_sphere: Vec<f64> = {
        let mut c = vec![0.0; d];
        c[0] = 1.0;
        c
    };
    fs.push((
        "gaussian(on-sphere)".into(),
        Box::new(move |y: &[f64]| {
            let d2: f64 = y
                .iter()
                .zip(&on_sphere)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (-d2).exp()
        }),
    ));
    let off_sphere: Vec<f64> = {
        let mut c = vec![0.0; d];
        c[0] = 0.3;
        if d > 1 {
            c[1] = -0.2;
        }
        c
    };
    fs.push((
        "gaussian(off-sphere)".into(),
        Box::new(move |y: &[f64]| {
            let d2: f64 = y
                .iter()
                .zip(&off_sphere)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (-d2).exp()
        }),
    ));
    fs
}

/// Compare sliced against direct Monte Carlo integration over `S^{mn-1}`
/// for the analytic battery. `nodes_per_side` is the total evaluation budget
/// of each side; the sliced side splits it as (nodes/100) ball nodes times
/// 100 inner nodes.
pub fn slicing_survey(
    cases: &[(usize, usize, usize)],
    nodes_per_side: usize,
    seed: u64,
) -> Result<SliceSurveyReport> {
    if nodes_per_side < 100 {
        return Err(Error::Config("need at least 100 nodes per side".into()));
    }
    let inner_count = 100usize;
    let ball_count = nodes_per_side / inner_count;
    let mut rows = Vec::new();
    let mut constant_check_sigma = None;
    for (case_idx, &(m, n, k)) in cases.iter().enumerate() {
        let d = m * n;
        let sigma_d = surface_area(d)?;
        let battery = survey_battery(d);
        let case_seed = rng::combine(seed, case_idx as u64);
        let ball = sample_ball(k * n, ball_count, rng::combine(case_seed, 1))?;
        let inner = sample_sphere((m - k) * n, inner_count, rng::combine(case_seed, 2))?;
        let direct_rule = sample_sphere(d, nodes_per_side, rng::combine(case_seed, 3))?;
        for (name, f) in &battery {
            let sliced = slice_integrate(m, n, k, f, &ball, &inner)?;
            let direct = integrate(&direct_rule, f)?;
            let direct_value = sigma_d * direct.value;
            let direct_se = sigma_d * direct.std_error;
            let diff = (sliced.value - direct_value).abs();
            let se = (sliced.std_error.powi(2) + direct_se.powi(2)).sqrt();
            let floor = 1e-12 * direct_value.abs().max(sliced.value.abs()).max(1.0);
            let sigma_distance = diff / se.max(floor);
            if name == "1" && (m, n, k) == (2, 2, 1) {
                let exact = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
                let dev = (sliced.value - exact).abs();
                constant_check_sigma = Some(dev / sliced.std_error.max(1e-12 * exact));
            }
            rows.push(SliceRow {
                m,
                n,
                k,
                integrand: name.clone(),
                direct: direct_value,
                direct_se,
                sliced: sliced.value,
                sliced_se: sliced.std_error,
                sigma_distance,
            });
        }
    }
    let max_sigma_distance = rows.iter().map(|r| r.sigma_distance).fold(0.0f64, f64::max);
    let pass = max_sigma_distance <= 3.0 && constant_check_sigma.is_none_or(|s| s <= 3.0);
    Ok(SliceSurveyReport {
        config: serde_json::json!({
            "experiment": "slicing-survey",
            "cases": cases,
            "nodes_per_side": nodes_per_side,
            "seed": seed,
        }),
        rows,
        max_sigma_distance,
        constant_check_sigma,
        outcome: if pass { Outcome::Pass } else { Outcome::Fail },
    })
}

/// One evaluation row of the domination survey.
#[derive(Debug, Clone, Serialize)]
pub struct DominationRow {
    pub battery_index: usize,
    pub x: Vec<f64>,
    pub k: usize,
    pub ratio: f64,
    /// Statistical error of the ratio, propagated from the numerator and
    /// denominator factor estimates.
    pub ratio_std_error: f64,
    pub numerator: f64,
    pub numerator_std_error: f64,
    /// The numerator is statistically resolved (relative error below the
    /// survey threshold). Only resolved rows gate against the frozen
    /// constant; far points where the maximal value shrinks to noise level
    /// say nothing about the pointwise bound and are reported as is.
    pub resolved: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DominationSurveyReport {
    pub config: serde_json::Value,
    /// Maximum over the statistically resolved rows.
    pub max_ratio: f64,
    /// Maximum over every row, resolved or not.
    pub max_ratio_unfiltered: f64,
    pub resolved_rows: usize,
    pub per_k_max: Vec<f64>,
    pub frozen_constant: Option<f64>,
    pub rows: Vec<DominationRow>,
    pub outcome: Outcome,
}

/// The frozen input battery of the domination survey.
pub fn domination_battery(m: usize, n: usize) -> Result<Vec<Vec<TestFunction>>> {
    let g = |center: Vec<f64>, width: f64| TestFunction::gaussian(center, width);
    let ind = |center: Vec<f64>, radius: f64| TestFunction::ball_indicator(center, radius);
    let origin = vec![0.0; n];
    let mut shifted = vec![0.0; n];
    shifted[0] = 0.5;
    let mut shifted2 = vec![0.0; n];
    shifted2[0] = -0.3;
    if n > 1 {
        shifted2[1] = 0.2;
    }
    let mut far_left = vec![0.0; n];
    far_left[0] = -50.0;
    let mut far_right = vec![0.0; n];
    far_right[0] = 50.0;
    let mut tuples: Vec<Vec<TestFunction>> = Vec::new();
    match m {
        2 => {
            tuples.push(vec![g(origin.clone(), 1.0)?, g(origin.clone(), 1.0)?]);
            tuples.push(vec![g(shifted.clone(), 1.0)?, g(shifted2.clone(), 0.7)?]);
            tuples.push(vec![ind(origin.clone(), 1.0)?, g(origin.clone(), 1.0)?]);
            tuples.push(vec![
                ind(shifted.clone(), 0.8)?,
                ind(shifted2.clone(), 1.2)?,
            ]);
            tuples.push(vec![
                TestFunction::constant(n, 1.0),
                g(shifted2.clone(), 0.9)?,
            ]);
            // Reference rows: all constants give ratio one; disjoint far
            // supports give a vanishing numerator.
            tuples.push(vec![
                TestFunction::constant(n, 1.0),
                TestFunction::constant(n, 1.0),
            ]);
            tuples.push(vec![
                ind(far_left.clone(), 0.5)?,
                ind(far_right.clone(), 0.5)?,
            ]);
        }
        3 => {
            tuples.push(vec![
                g(origin.clone(), 1.0)?,
                g(origin.clone(), 1.0)?,
                g(origin.clone(), 1.0)?,
            ]);
            tuples.push(vec![
                g(shifted.clone(), 0.8)?,
                g(shifted2.clone(), 1.1)?,
                ind(origin.clone(), 1.0)?,
            ]);
            tuples.push(vec![
                ind(shifted.clone(), 0.9)?,
                TestFunction::constant(n, 1.0),
                g(origin.clone(), 0.7)?,
            ]);
            tuples.push(vec![
                TestFunction::constant(n, 1.0),
                TestFunction::constant(n, 1.0),
                TestFunction::constant(n, 1.0),
            ]);
        }
        _ => {
            return Err(Error::Config(format!(
                "no frozen battery for m = {m}; supported m: 2, 3"
            )))
        }
    }
    Ok(tuples)
}

/// The frozen evaluation lattice of the domination survey: a centered square
/// grid over `[-2, 2]^n` (9 x 9 for m = 2, 5 x 5 for m = 3; only n = 2 has a
/// frozen lattice).
pub fn domination_lattice(m: usize, n: usize) -> Result<Vec<Vec<f64>>> {
    if n != 2 {
        return Err(Error::Config(format!(
            "no frozen evaluation lattice for n = {n}"
        )));
    }
    let per_axis = if m <= 2 { 9 } else { 5 };
    let mut points = Vec::with_capacity(per_axis * per_axis);
    for i in 0..per_axis {
        for j in 0..per_axis {
            let step = 4.0 / (per_axis - 1) as f64;
            points.push(vec![-2.0 + step * i as f64, -2.0 + step * j as f64]);
        }
    }
    Ok(points)
}

/// Configuration of a domination survey run.
#[derive(Debug, Clone, Serialize)]
pub struct DominationSpec {
    pub node_count: usize,
    pub seed: u64,
    /// Multiplies the node count; calibration runs use 3.
    pub density_multiplier: usize,
}

impl DominationSpec {
    /// Standard survey density. Products of several factors concentrate on
    /// small caps at far evaluation points, so the means need a sizable
    /// cloud before the survey statistic is reproducible across seeds.
    pub fn standard_for(_m: usize, seed: u64) -> Self {
        DominationSpec {
            node_count: 8000,
            seed,
            density_multiplier: 1,
        }
    }
}

/// Relative numerator error above which a survey row does not gate against
/// the frozen constant. Products of m factors concentrate on small caps at
/// far evaluation points, where the maximal value is orders of magnitude
/// below the battery scale and its Monte Carlo estimate is pure noise.
pub const DOMINATION_RESOLUTION: f64 = 0.2;

/// Evaluate the domination ratio over the frozen battery, lattice and every
/// distinguished factor index; report the maximum over resolved rows and
/// compare it against the frozen empirical constant for `(m, n)`.
pub fn domination_survey(
    m: usize,
    n: usize,
    spec: &DominationSpec,
) -> Result<DominationSurveyReport> {
    let battery = domination_battery(m, n)?;
    let lattice = domination_lattice(m, n)?;
    let count = spec.node_count * spec.density_multiplier.max(1);
    let cfg = OperatorConfig {
        factors: m,
        dim: n,
        quad: QuadSpec::MonteCarlo {
            count,
            seed: spec.seed,
        },
        radius_grid: RadiusGrid::geometric(0.05, 20.0, 121)?,
        slicing: None,
        refinement: true,
    };
    let jobs: Vec<(usize, usize)> = (0..battery.len())
        .flat_map(|b| (0..lattice.len()).map(move |x| (b, x)))
        .collect();
    let rows: Vec<Result<Vec<DominationRow>>> = jobs
        .par_iter()
        .map(|&(b, xi)| {
            let fs = &battery[b];
            let x = &lattice[xi];
            let numer = maximal_multi(fs, x, &cfg)?;
            // Shared factors across the m distinguished choices.
            let mut hl = Vec::with_capacity(m);
            let mut sph = Vec::with_capacity(m);
            for f in fs {
                hl.push(hardy_littlewood(f, x, &cfg.radius_grid, cfg.quad)?);
                sph.push(linear_spherical_maximal(f, x, &cfg.radius_grid, cfg.quad)?);
            }
            let resolved =
                numer.value == 0.0 || numer.std_error <= DOMINATION_RESOLUTION * numer.value.abs();
            let rel2 = |v: f64, se: f64| {
                if v == 0.0 {
                    0.0
                } else {
                    (se / v) * (se / v)
                }
            };
            let mut out = Vec::with_capacity(m);
            for k in 1..=m {
                let mut denom = sph[k - 1].value;
                let mut rel_var = rel2(numer.value, numer.std_error)
                    + rel2(sph[k - 1].value, sph[k - 1].std_error);
                for (j, h) in hl.iter().enumerate() {
                    if j + 1 != k {
                        denom *= h.value;
                        rel_var += rel2(h.value, h.std_error);
                    }
                }
                let ratio = if numer.value == 0.0 {
                    0.0
                } else if denom == 0.0 {
                    f64::INFINITY
                } else {
                    numer.value / denom
                };
                out.push(DominationRow {
                    battery_index: b,
                    x: x.clone(),
                    k,
                    ratio,
                    ratio_std_error: if ratio.is_finite() {
                        ratio * rel_var.sqrt()
                    } else {
                        0.0
                    },
                    numerator: numer.value,
                    numerator_std_error: numer.std_error,
                    resolved,
                });
            }
            Ok(out)
        })
        .collect();
    let mut flat = Vec::new();
    for r in rows {
        flat.extend(r?);
    }
    let mut per_k_max = vec![0.0f64; m];
    let mut max_ratio = 0.0f64;
    let mut max_unfiltered = 0.0f64;
    let mut resolved_rows = 0usize;
    for row in &flat {
        max_unfiltered = max_unfiltered.max(row.ratio);
        if row.resolved {
            resolved_rows += 1;
            per_k_max[row.k - 1] = per_k_max[row.k - 1].max(row.ratio);
            max_ratio = max_ratio.max(row.ratio);
        }
    }
    let frozen = empirical_domination_constant(m, n);
    // A regression is a resolved row exceeding the frozen constant by more
    // than three times its own statistical error; a Monte Carlo maximum
    // fluctuates around the frozen level, so a raw comparison would flag
    // noise.
    let outcome = match frozen {
        Some(c) => {
            let regression = flat
                .iter()
                .any(|row| row.resolved && row.ratio > c + 3.0 * row.ratio_std_error);
            if regression {
                Outcome::Fail
            } else {
                Outcome::Pass
            }
        }
        None => Outcome::Inconclusive,
    };
    Ok(DominationSurveyReport {
        config: serde_json::json!({
            "experiment": "domination-survey",
            "m": m, "n": n,
            "node_count": spec.node_count,
            "density_multiplier": spec.density_multiplier,
            "seed": spec.seed,
        }),
        max_ratio,
        max_ratio_unfiltered: max_unfiltered,
        resolved_rows,
        per_k_max,
        frozen_constant: frozen,
        rows: flat,
        outcome,
    })
}

/// Check that the extremal family members have finite norms in their own
/// Lebesgue spaces.
pub fn prop1_norms_finite(tuple: &ExponentTuple) -> Result<bool> {
    let fs = prop1_functions(tuple)?;
    for (f, r) in fs.iter().zip(tuple.recips()) {
        let p = 1.0 / ratio_to_f64(r);
        let norm = lp_norm(f, p, NormMethod::ClosedForm)?;
        if !norm.value.is_finite() {
            return Ok(false);
        }
    }
    Ok(true)
}
