//! Batch front end: experiment configurations in (flags or JSON), CSV, JSON
//! and SVG artifacts out.
//!
//! Exit codes: 0 pass, 1 fail, 2 inconclusive, 3 configuration error.

mod config;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sphmax::error::Error;
use sphmax::experiments::{
    domination_survey, lemma2_check, prop1_scan, prop1_subcritical_divergence, prop2_scan,
    slicing_survey, DominationSpec, Outcome, Prop1Params, Prop2Params,
};
use sphmax::functions::LatticeGrid;
use sphmax::operators::{
    domination_ratio, hardy_littlewood, linear_spherical_maximal, maximal_multi,
    maximal_multi_independent, spherical_mean_multi, OperatorConfig, QuadSpec, RadiusGrid,
};
use sphmax::region::{classify, polytope_vertices, ExponentTuple};

use config::{
    parse_cases, parse_fractions, DominationJob, GridSpec, Lemma2Job, OperatorEvalJob,
    OperatorKind, Prop1Job, Prop2Job, RegionJob, RunConfig, SliceCheckJob, VerticesJob,
};

#[derive(Parser)]
#[command(
    name = "sphmax",
    about = "Multilinear spherical means and maximal functions: batch experiments",
    version
)]
struct Cli {
    /// Cap worker parallelism (default: all cores). Results are identical
    /// for any thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Validate the configuration, print the resolved plan, and exit
    /// without computing.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify an exponent tuple against the boundedness region.
    Region {
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        n: usize,
        /// Comma-separated exact fractions, e.g. 1/2,1/2.
        #[arg(long)]
        recips: String,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Enumerate the vertices of the boundedness polytope as CSV.
    Vertices {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Critical-decay scan of the power-log counterexample family.
    Prop1 {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        recips: String,
        /// Comma-separated geometric radii, e.g. 16,32,64,128,256,512.
        #[arg(long = "R", value_name = "LIST")]
        r_list: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        ball_nodes: Option<usize>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Also run the beyond-critical divergence check at this radius.
        #[arg(long)]
        divergence_check_r: Option<f64>,
    },
    /// Decay scan for indicator inputs (k small balls, m-k constants).
    Prop2 {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long = "R", value_name = "LIST")]
        r_list: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        ball_nodes: Option<usize>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Power-log ratio bound check.
    Lemma2 {
        #[arg(long)]
        r1: f64,
        #[arg(long)]
        r2: f64,
        #[arg(long)]
        c: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Slicing identity survey: sliced vs direct sphere integration.
    SliceCheck {
        /// Cases like "2,2,1;3,2,1;3,2,2;2,3,1".
        #[arg(long)]
        cases: String,
        #[arg(long, default_value_t = 100_000)]
        nodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Pointwise domination survey over the frozen battery and lattice.
    Domination {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        /// Nodes per mean (default: the standard density for m).
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Triple-density calibration run; reports a suggested constant.
        #[arg(long)]
        calibrate: bool,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Evaluate one operator from a JSON job description.
    OperatorEval {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run any subcommand from a JSON configuration document.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_err()
        {
            eprintln!("error: could not configure the thread pool");
            return ExitCode::from(3);
        }
    }
    let job = match build_job(cli.command) {
        Ok(job) => job,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    if cli.dry_run {
        return match dry_run_plan(&job) {
            Ok(plan) => {
                println!("{plan}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(3)
            }
        };
    }
    match execute(job) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Ok(Outcome::Inconclusive) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

/// Convert flag subcommands into job structures (the same ones the JSON
/// configuration parses into).
fn build_job(cmd: Command) -> Result<RunConfig, Error> {
    Ok(match cmd {
        Command::Region { m, n, recips, json } => RunConfig::Region(RegionJob {
            m,
            n,
            recips: recips.split(',').map(|s| s.trim().to_string()).collect(),
            out_json: json,
        }),
        Command::Vertices { m, n, out } => RunConfig::Vertices(VerticesJob { m, n, out_csv: out }),
        Command::Prop1 {
            m,
            n,
            recips,
            r_list,
            seed,
            ball_nodes,
            csv,
            json,
            plot,
            divergence_check_r,
        } => RunConfig::Prop1(Prop1Job {
            m,
            n,
            recips: recips.split(',').map(|s| s.trim().to_string()).collect(),
            r_list: parse_f64_list(&r_list)?,
            seed,
            ball_nodes,
            out_csv: csv,
            out_json: json,
            plot,
            divergence_check_r,
        }),
        Command::Prop2 {
            m,
            n,
            k,
            r_list,
            seed,
            ball_nodes,
            csv,
            json,
            plot,
        } => RunConfig::Prop2(Prop2Job {
            m,
            n,
            k,
            r_list: parse_f64_list(&r_list)?,
            seed,
            ball_nodes,
            out_csv: csv,
            out_json: json,
            plot,
        }),
        Command::Lemma2 {
            r1,
            r2,
            c,
            samples,
            seed,
            json,
        } => RunConfig::Lemma2(Lemma2Job {
            r1,
            r2,
            c,
            samples,
            seed,
            out_json: json,
        }),
        Command::SliceCheck {
            cases,
            nodes,
            seed,
            json,
        } => RunConfig::SliceCheck(SliceCheckJob {
            cases: parse_cases(&cases)?
                .into_iter()
                .map(|(a, b, c)| [a, b, c])
                .collect(),
            nodes,
            seed,
            out_json: json,
        }),
        Command::Domination {
            m,
            n,
            nodes,
            seed,
            calibrate,
            json,
        } => RunConfig::Domination(DominationJob {
            m,
            n,
            nodes: nodes.unwrap_or_else(|| DominationSpec::standard_for(m, 0).node_count),
            seed,
            calibrate,
            out_json: json,
        }),
        Command::OperatorEval { config } => {
            let text = read_file(&config)?;
            let job: OperatorEvalJob = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("bad operator-eval config: {e}")))?;
            RunConfig::OperatorEval(job)
        }
        Command::Run { config } => {
            let text = read_file(&config)?;
            RunConfig::from_json(&text)?
        }
    })
}

fn parse_f64_list(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad number {s:?}")))
        })
        .collect()
}

fn read_file(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn write_artifact(path: &Path, contents: &str) -> Result<(), Error> {
    std::fs::write(path, contents)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

/// The environment seed override applies to every stochastic subcommand.
fn effective_seed(seed: u64) -> Result<u64, Error> {
    match std::env::var("SPHMAX_SEED") {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad SPHMAX_SEED value {text:?}"))),
        Err(_) => Ok(seed),
    }
}

fn dry_run_plan(job: &RunConfig) -> Result<String, Error> {
    // Validate eagerly so a dry run catches configuration mistakes.
    let plan = match job {
        RunConfig::Region(j) => {
            let tuple = region_tuple(j)?;
            serde_json::json!({
                "subcommand": "region",
                "m": tuple.factors(), "n": tuple.ambient_dim(),
                "recips": tuple.recips().iter().map(|r| r.to_string()).collect::<Vec<_>>(),
            })
        }
        RunConfig::Vertices(j) => serde_json::json!({
            "subcommand": "vertices", "m": j.m, "n": j.n,
            "vertex_count": (1usize << j.m) + j.m - 1,
        }),
        RunConfig::Prop1(j) => {
            let tuple = ExponentTuple::new(j.n, parse_fractions(&j.recips.join(","))?)?;
            serde_json::json!({
                "subcommand": "prop1",
                "m": j.m, "n": j.n,
                "recips": tuple.recips().iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                "critical": tuple.recip_p() == tuple.critical_sum(),
                "R": j.r_list,
                "seed": effective_seed(j.seed)?,
                "ball_nodes": j.ball_nodes.unwrap_or(Prop1Params::for_factors(j.m).ball_count),
                "expected_slope": 1.0 - (j.m * j.n) as f64,
            })
        }
        RunConfig::Prop2(j) => serde_json::json!({
            "subcommand": "prop2",
            "m": j.m, "n": j.n, "k": j.k,
            "R": j.r_list,
            "seed": effective_seed(j.seed)?,
            "expected_slope": -((j.k * j.n) as f64),
        }),
        RunConfig::Lemma2(j) => serde_json::json!({
            "subcommand": "lemma2",
            "r1": j.r1, "r2": j.r2, "C": j.c,
            "samples": j.samples,
            "seed": effective_seed(j.seed)?,
            "bound": j.c.powf(j.r1),
        }),
        RunConfig::SliceCheck(j) => serde_json::json!({
            "subcommand": "slice-check",
            "cases": j.cases,
            "nodes_per_side": j.nodes,
            "seed": effective_seed(j.seed)?,
        }),
        RunConfig::Domination(j) => serde_json::json!({
            "subcommand": "domination",
            "m": j.m, "n": j.n,
            "nodes": j.nodes,
            "calibrate": j.calibrate,
            "seed": effective_seed(j.seed)?,
        }),
        RunConfig::OperatorEval(j) => serde_json::json!({
            "subcommand": "operator-eval",
            "op": format!("{:?}", j.op),
            "m": j.m, "n": j.n,
            "functions": j.functions.len(),
            "mode": if j.lattice.is_some() { "lattice-field" } else { "single-point" },
            "seed": effective_seed(j.seed)?,
        }),
    };
    Ok(serde_json::to_string_pretty(&plan).expect("plan serialization"))
}

fn region_tuple(job: &RegionJob) -> Result<ExponentTuple, Error> {
    let recips = parse_fractions(&job.recips.join(","))?;
    if let Some(m) = job.m {
        if m != recips.len() {
            return Err(Error::Config(format!(
                "m = {m} does not match {} reciprocals",
                recips.len()
            )));
        }
    }
    ExponentTuple::new(job.n, recips)
}

fn execute(job: RunConfig) -> Result<Outcome, Error> {
    match job {
        RunConfig::Region(j) => {
            let tuple = region_tuple(&j)?;
            let classification = classify(&tuple);
            let doc = serde_json::json!({
                "m": tuple.factors(),
                "n": tuple.ambient_dim(),
                "recips": tuple.recips().iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                "recip_p": tuple.recip_p().to_string(),
                "critical_sum": tuple.critical_sum().to_string(),
                "verdict": classification.verdict,
                "notes": classification.notes,
            });
            let text = serde_json::to_string_pretty(&doc).expect("verdict serialization");
            println!("{text}");
            if let Some(path) = &j.out_json {
                write_artifact(path, &text)?;
            }
            Ok(Outcome::Pass)
        }
        RunConfig::Vertices(j) => {
            let vertices = polytope_vertices(j.m, j.n)?;
            let mut csv = String::new();
            for i in 1..=j.m {
                if i > 1 {
                    csv.push(',');
                }
                csv.push_str(&format!("recip_{i}"));
            }
            csv.push('\n');
            for v in &vertices {
                let row: Vec<String> = v.recips().iter().map(|r| r.to_string()).collect();
                csv.push_str(&row.join(","));
                csv.push('\n');
            }
            match &j.out_csv {
                Some(path) => write_artifact(path, &csv)?,
                None => print!("{csv}"),
            }
            Ok(Outcome::Pass)
        }
        RunConfig::Prop1(j) => {
            let tuple = ExponentTuple::new(j.n, parse_fractions(&j.recips.join(","))?)?;
            if tuple.factors() != j.m {
                return Err(Error::Config(format!(
                    "m = {} does not match {} reciprocals",
                    j.m,
                    tuple.factors()
                )));
            }
            let mut params = Prop1Params::for_factors(j.m);
            if let Some(b) = j.ball_nodes {
                params.ball_count = b;
            }
            let seed = effective_seed(j.seed)?;
            let report = prop1_scan(&tuple, &j.r_list, seed, &params)?;
            let mut outcome = report.outcome;
            if let Some(r) = j.divergence_check_r {
                // The divergence companion uses the all-ones tuple, the
                // canonical beyond-critical point.
                let ones = ExponentTuple::new(j.n, vec![sphmax::region::Q::from_integer(1); j.m])?;
                let div = prop1_subcritical_divergence(&ones, r, 3, 20_000, seed)?;
                println!(
                    "divergence check: {:?} (cumulative {:?})",
                    div.outcome, div.cumulative
                );
                if div.outcome != Outcome::Pass {
                    outcome = div.outcome;
                }
            }
            emit_report(
                &report,
                j.out_csv.as_deref(),
                j.out_json.as_deref(),
                j.plot.as_deref(),
            )?;
            Ok(outcome)
        }
        RunConfig::Prop2(j) => {
            let mut params = Prop2Params::for_factors(j.m);
            if let Some(b) = j.ball_nodes {
                params.ball_count = b;
            }
            let seed = effective_seed(j.seed)?;
            let report = prop2_scan(j.m, j.n, j.k, &j.r_list, seed, &params)?;
            emit_report(
                &report,
                j.out_csv.as_deref(),
                j.out_json.as_deref(),
                j.plot.as_deref(),
            )?;
            Ok(report.outcome)
        }
        RunConfig::Lemma2(j) => {
            let seed = effective_seed(j.seed)?;
            let report = lemma2_check(j.r1, j.r2, j.c, j.samples, seed)?;
            let text = serde_json::to_string_pretty(&report).expect("report serialization");
            println!("{text}");
            if let Some(path) = &j.out_json {
                write_artifact(path, &text)?;
            }
            Ok(report.outcome)
        }
        RunConfig::SliceCheck(j) => {
            let seed = effective_seed(j.seed)?;
            let cases: Vec<(usize, usize, usize)> =
                j.cases.iter().map(|c| (c[0], c[1], c[2])).collect();
            let report = slicing_survey(&cases, j.nodes, seed)?;
            println!(
                "slicing survey: {:?}, max deviation {:.3} combined standard errors",
                report.outcome, report.max_sigma_distance
            );
            if let Some(path) = &j.out_json {
                write_artifact(
                    path,
                    &serde_json::to_string_pretty(&report).expect("report serialization"),
                )?;
            }
            Ok(report.outcome)
        }
        RunConfig::Domination(j) => {
            let seed = effective_seed(j.seed)?;
            let mut spec = DominationSpec::standard_for(j.m, seed);
            if j.nodes > 0 {
                spec.node_count = j.nodes;
            }
            spec.density_multiplier = if j.calibrate { 3 } else { 1 };
            let report = domination_survey(j.m, j.n, &spec)?;
            if j.calibrate {
                println!(
                    "calibration: max ratio {:.6}, suggested frozen constant {:.4}",
                    report.max_ratio,
                    1.2 * report.max_ratio
                );
            } else {
                println!(
                    "domination survey: {:?}, max ratio {:.6} (frozen constant {:?})",
                    report.outcome, report.max_ratio, report.frozen_constant
                );
            }
            if let Some(path) = &j.out_json {
                write_artifact(
                    path,
                    &serde_json::to_string_pretty(&report).expect("report serialization"),
                )?;
            }
            if j.calibrate {
                Ok(Outcome::Pass)
            } else {
                Ok(report.outcome)
            }
        }
        RunConfig::OperatorEval(j) => run_operator_eval(j),
    }
}

fn emit_report(
    report: &sphmax::experiments::ExperimentReport,
    csv: Option<&Path>,
    json: Option<&Path>,
    plot: Option<&Path>,
) -> Result<(), Error> {
    println!("{}: {:?} ({})", report.name, report.outcome, report.details);
    if let Some(path) = csv {
        write_artifact(path, &report.points_csv())?;
    }
    if let Some(path) = json {
        write_artifact(path, &report.summary_json())?;
    }
    if let Some(path) = plot {
        write_artifact(path, &svg::plot_report(report))?;
    }
    Ok(())
}

fn run_operator_eval(job: OperatorEvalJob) -> Result<Outcome, Error> {
    let seed = effective_seed(job.seed)?;
    let fs: Vec<_> = job
        .functions
        .iter()
        .map(|spec| spec.build(job.n))
        .collect::<Result<_, _>>()?;
    let grid = match &job.radius_grid {
        Some(g) => RadiusGrid::geometric(g.t_min, g.t_max, g.count)?,
        None => RadiusGrid::default_grid(),
    };
    let cfg = OperatorConfig {
        factors: job.m,
        dim: job.n,
        quad: QuadSpec::MonteCarlo {
            count: job.nodes,
            seed,
        },
        radius_grid: grid.clone(),
        slicing: None,
        refinement: true,
    };
    let eval_point = |x: &[f64]| -> Result<f64, Error> {
        Ok(match &job.op {
            OperatorKind::Mean => {
                let t = job
                    .t
                    .ok_or_else(|| Error::Config("mean evaluation needs t".into()))?;
                spherical_mean_multi(&fs, x, t, &cfg)?.value
            }
            OperatorKind::Maximal => maximal_multi(&fs, x, &cfg)?.value,
            OperatorKind::MaximalIndependent => {
                let specs: &[GridSpec] = job.factor_grids.as_deref().ok_or_else(|| {
                    Error::Config("independent maximal needs factor_grids".into())
                })?;
                let grids: Vec<RadiusGrid> = specs
                    .iter()
                    .map(|g| RadiusGrid::geometric(g.t_min, g.t_max, g.count))
                    .collect::<Result<_, _>>()?;
                maximal_multi_independent(&fs, x, &cfg, &grids)?.value
            }
            OperatorKind::HardyLittlewood => hardy_littlewood(&fs[0], x, &grid, cfg.quad)?.value,
            OperatorKind::LinearSpherical => {
                linear_spherical_maximal(&fs[0], x, &grid, cfg.quad)?.value
            }
            OperatorKind::DominationRatio => {
                let k = job
                    .k
                    .ok_or_else(|| Error::Config("domination ratio needs k".into()))?;
                domination_ratio(&fs, x, k, &cfg)?.ratio
            }
        })
    };

    if let Some(lattice) = &job.lattice {
        // Field evaluation over a centered lattice; emitted as lattice CSV.
        let per_axis = ((2.0 * lattice.half_width) / lattice.spacing).round() as usize;
        if per_axis == 0 {
            return Err(Error::Config("lattice would be empty".into()));
        }
        let origin = vec![-lattice.half_width + lattice.spacing / 2.0; job.n];
        let count = per_axis.pow(job.n as u32);
        let mut values = Vec::with_capacity(count);
        for idx in 0..count {
            let mut x = vec![0.0; job.n];
            let mut rem = idx;
            for a in (0..job.n).rev() {
                x[a] = origin[a] + lattice.spacing * (rem % per_axis) as f64;
                rem /= per_axis;
            }
            values.push(eval_point(&x)?);
        }
        let field = LatticeGrid::new(origin, lattice.spacing, vec![per_axis; job.n], values)?;
        let csv = field.to_csv();
        match &job.out_csv {
            Some(path) => write_artifact(path, &csv)?,
            None => print!("{csv}"),
        }
        return Ok(Outcome::Pass);
    }

    let x = job
        .x
        .clone()
        .ok_or_else(|| Error::Config("operator evaluation needs x or lattice".into()))?;
    let value = eval_point(&x)?;
    let doc = serde_json::json!({
        "op": format!("{:?}", job.op),
        "x": x,
        "value": value,
        "seed": seed,
    });
    let text = serde_json::to_string_pretty(&doc).expect("doc serialization");
    println!("{text}");
    if let Some(path) = &job.out_json {
        write_artifact(path, &text)?;
    }
    Ok(Outcome::Pass)
}
