use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use tentlimit::density::{
    markov_density, orbit_histogram_sharded, orbit_series_density, reference_density, ulam_density, StepDensity,
};
use tentlimit::fiber::{build_box_with_budget, holonomy_check, pccomp_box, pccomp_component, ZeroBox};
use tentlimit::regularity::{gap_statistic, typicality_report, TypicalityConfig};
use tentlimit::thread::IntervalThread;
use tentlimit::{Branch, Error, Interval, Precision, TentParams};

use crate::args::{
    BoxArgs, BoxSelect, DecomposeArgs, DensityArgs, GlobalArgs, HolonomyArgs, Method, PrecisionArg, SweepArgs,
    SweepCmd, TypicalityArgs,
};

/// How a command ended when it produced output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    /// A check ran to completion and failed.
    Failed,
    Inconclusive,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Failed => 3,
            Status::Inconclusive => 4,
        }
    }
}

pub struct Outcome {
    pub status: Status,
    pub payload: Value,
    pub csv: String,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self { code: exit_code(&e), message: e.to_string() }
    }
}

/// 2 for bad input, 4 for inconclusive sampling, 3 for numeric failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::SlopeOutOfRange(_)
        | Error::EndpointSlope
        | Error::Domain(_)
        | Error::BadInterval { .. }
        | Error::NotInPreimage(_)
        | Error::DepthMismatch(..)
        | Error::NotFlat { .. }
        | Error::FlatPrefixViolated { .. }
        | Error::NotRealizable(_)
        | Error::InvalidArgument(_)
        | Error::OnCriticalOrbit(_)
        | Error::AtBreakpoint(_) => 2,
        Error::Inconclusive { .. } | Error::MembershipUnknown => 4,
        _ => 3,
    }
}

type CmdResult = Result<Outcome, CliError>;

/// `golden`, `sqrt2` or a decimal slope, in the requested precision mode.
pub fn parse_slope(text: &str, global: &GlobalArgs) -> Result<TentParams, CliError> {
    let p = match text.trim() {
        "golden" => TentParams::golden(),
        "sqrt2" => TentParams::sqrt2(),
        t => {
            let s: f64 = t.parse().map_err(|_| CliError::config(format!("unparsable slope {t:?}")))?;
            TentParams::new(s)?
        }
    };
    p.require_interior(global.allow_endpoint)?;
    Ok(p.in_mode(match global.precision {
        PrecisionArg::Scalar => Precision::Scalar,
        PrecisionArg::Enclosure => Precision::Enclosure,
    }))
}

fn density_for(p: &TentParams, args: &DensityArgs) -> Result<StepDensity, CliError> {
    let markov = || p.in_mode(Precision::Scalar).detect_markov(64, args.markov_tol);
    Ok(match args.method {
        Method::Auto => match markov() {
            Some(ms) => markov_density(p, &ms)?,
            None => orbit_series_density(p)?,
        },
        Method::Markov => {
            let ms = markov().ok_or_else(|| {
                CliError::config(format!(
                    "no finite critical orbit found for slope {} within tolerance {}",
                    p.slope(),
                    args.markov_tol
                ))
            })?;
            markov_density(p, &ms)?
        }
        Method::Ulam => ulam_density(p, args.bins, args.max_iterations)?,
        Method::Series => orbit_series_density(p)?,
        Method::Histogram => orbit_histogram_sharded(p, args.seed, args.orbit_length, args.bins, args.shards)?,
    })
}

pub fn density(global: &GlobalArgs, args: &DensityArgs) -> CmdResult {
    let p = parse_slope(&args.slope.slope, global)?;
    let d = density_for(&p, args)?;
    Ok(Outcome {
        status: Status::Ok,
        payload: json!({ "density": &d, "diagnostics": d.diagnostics() }),
        csv: d.to_csv(),
    })
}

fn select_base(p: &TentParams, phi: &StepDensity, select: &BoxSelect) -> Result<Interval, CliError> {
    if let (Some(lo), Some(hi)) = (select.lo, select.hi) {
        return Ok(Interval::new(lo, hi)?);
    }
    match select.component_index {
        Some(i) => {
            let comps = p.complement_components(select.prefix);
            comps.get(i).copied().ok_or_else(|| {
                CliError::config(format!("component index {i} out of range: {} components", comps.len()))
            })
        }
        None => Ok(pccomp_component(p, phi, select.prefix).1),
    }
}

fn build(p: &TentParams, select: &BoxSelect) -> Result<ZeroBox, CliError> {
    let phi = reference_density(p)?;
    let j = select_base(p, &phi, select)?;
    Ok(build_box_with_budget(p, &phi, j, select.prefix, select.depth, select.budget)?)
}

pub fn zero_box(global: &GlobalArgs, args: &BoxArgs) -> CmdResult {
    let p = parse_slope(&args.slope.slope, global)?;
    let b = build(&p, &args.select)?;
    let probe = match args.probe {
        Some(x) => x,
        None => *b.probes(1).first().ok_or_else(|| CliError::config("no admissible probe in the base interval"))?,
    };
    let alpha = b.alpha(probe)?;
    let mut csv = String::from("depth,path,parent_lo,parent_hi,critical_lo,critical_hi\n");
    for e in &b.excluded {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            e.depth(),
            e.path,
            e.parent.lo,
            e.parent.hi,
            e.critical.lo,
            e.critical.hi
        );
    }
    Ok(Outcome { status: Status::Ok, payload: json!({ "box": &b, "probe": probe, "alpha": alpha }), csv })
}

pub fn holonomy(global: &GlobalArgs, args: &HolonomyArgs) -> CmdResult {
    let p = parse_slope(&args.slope.slope, global)?;
    let b = build(&p, &args.select)?;
    let report = holonomy_check(&b, &b.probes(args.probes))?;
    let mut csv = String::from("probe,alpha_lower,alpha_upper\n");
    for (x, a) in report.probes.iter().zip(&report.alphas) {
        let _ = writeln!(csv, "{x},{},{}", a.lower, a.upper);
    }
    Ok(Outcome {
        status: if report.pass { Status::Ok } else { Status::Failed },
        payload: json!({
            "base": b.base,
            "prefix": b.prefix,
            "depth": b.depth,
            "excluded": b.excluded.len(),
            "tail_bound": b.tail_bound,
            "report": report,
        }),
        csv,
    })
}

pub fn typicality(global: &GlobalArgs, args: &TypicalityArgs) -> CmdResult {
    let p = parse_slope(&args.slope.slope, global)?;
    let phi = reference_density(&p)?;
    let config = TypicalityConfig {
        seed: args.seed,
        prefix: args.prefix,
        box_depth: args.depth,
        visit_depth: args.visit_depth,
        samples: args.samples,
        period_bound: args.period_bound,
        gap_depths: args.gap_n.clone(),
        max_unknown: args.max_unknown,
    };
    match typicality_report(&p, &phi, &config) {
        Ok(report) => {
            let mut csv = String::from("depth,fraction,unknown\n");
            for (d, (f, u)) in report.visit.fractions.iter().zip(&report.visit.unknown).enumerate() {
                let _ = writeln!(csv, "{d},{f},{u}");
            }
            Ok(Outcome { status: Status::Ok, payload: serde_json::to_value(&report).expect("serializable"), csv })
        }
        Err(e @ Error::Inconclusive { .. }) => {
            let gaps: Vec<Value> = args
                .gap_n
                .iter()
                .filter_map(|&n| gap_statistic(&p, n).ok().map(|g| json!({ "n": n, "gap": g })))
                .collect();
            let mut csv = String::from("n,gap\n");
            for g in &gaps {
                let _ = writeln!(csv, "{},{}", g["n"], g["gap"]);
            }
            Ok(Outcome {
                status: Status::Inconclusive,
                payload: json!({ "slope": p.slope(), "gap_statistics": gaps, "error": e.to_string() }),
                csv,
            })
        }
        Err(e) => Err(e.into()),
    }
}

pub fn decompose(global: &GlobalArgs, args: &DecomposeArgs) -> CmdResult {
    let p = parse_slope(&args.slope.slope, global)?;
    let tail = Branch::parse_word(&args.tail)?;
    let thread = IntervalThread::from_level(&p, args.m, Interval::new(args.lo, args.hi)?, &tail)?;
    let dec = thread.flat_decompose(&p, args.m)?;
    Ok(Outcome {
        status: Status::Ok,
        payload: json!({
            "level": dec.level,
            "pieces": dec.pieces.len(),
            "rho": dec.rho(),
            "flat_to_depth": thread.depth(),
            "decomposition": &dec,
        }),
        csv: dec.to_csv(),
    })
}

#[derive(Serialize)]
struct SweepRow {
    slope: f64,
    value: Option<f64>,
    pass: Option<bool>,
    error: Option<String>,
}

fn sweep_grid(args: &SweepArgs) -> Result<Vec<f64>, CliError> {
    let valid = args.from.is_finite() && args.to.is_finite() && args.step.is_finite() && args.step > 0.0;
    if !valid || args.from > args.to {
        return Err(CliError::config(format!(
            "empty slope range: from {} to {} step {}",
            args.from, args.to, args.step
        )));
    }
    let count = ((args.to - args.from) / args.step + 1e-9).floor() as usize + 1;
    // computing each point from its index keeps the grid free of drift
    Ok((0..count).map(|k| args.from + k as f64 * args.step).collect())
}

fn sweep_point(global: &GlobalArgs, args: &SweepArgs, s: f64) -> Result<(f64, Option<bool>), CliError> {
    let p = parse_slope(&s.to_string(), global)?;
    match args.cmd {
        SweepCmd::Gap => Ok((gap_statistic(&p, args.n)?, None)),
        SweepCmd::Sup => Ok((reference_density(&p)?.sup(), None)),
        SweepCmd::Holonomy => {
            let phi = reference_density(&p)?;
            let r = pccomp_box(&p, &phi, args.prefix, args.depth)?;
            let h = holonomy_check(&r.zero_box, &r.zero_box.probes(args.probes))?;
            Ok((h.max_difference, Some(h.pass)))
        }
        SweepCmd::Pccomp => {
            let phi = reference_density(&p)?;
            let r = pccomp_box(&p, &phi, args.prefix, args.depth)?;
            Ok((r.alpha.lower, Some(r.alpha_bound_met)))
        }
    }
}

pub fn sweep(global: &GlobalArgs, args: &SweepArgs) -> CmdResult {
    let grid = sweep_grid(args)?;
    for &s in &grid {
        parse_slope(&s.to_string(), global)?;
    }
    let rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|&s| match sweep_point(global, args, s) {
            Ok((value, pass)) => SweepRow { slope: s, value: Some(value), pass, error: None },
            Err(e) => SweepRow { slope: s, value: None, pass: None, error: Some(e.message) },
        })
        .collect();
    let name = match args.cmd {
        SweepCmd::Gap => "max_gap",
        SweepCmd::Holonomy => "max_difference",
        SweepCmd::Sup => "sup",
        SweepCmd::Pccomp => "alpha_lower",
    };
    let mut csv = format!("slope,{name},pass,error\n");
    for r in &rows {
        let opt = |v: Option<String>| v.unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            r.slope,
            opt(r.value.map(|v| v.to_string())),
            opt(r.pass.map(|v| v.to_string())),
            opt(r.error.as_ref().map(|e| format!("\"{}\"", e.replace('"', "'"))))
        );
    }
    let failures = rows.iter().filter(|r| r.error.is_some()).count();
    Ok(Outcome {
        status: Status::Ok,
        payload: json!({ "statistic": name, "points": rows.len(), "failures": failures, "rows": rows }),
        csv,
    })
}
