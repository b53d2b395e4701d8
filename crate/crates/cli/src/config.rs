use std::fs;
use std::io::{ErrorKind, Write};

use serde::Deserialize;

use qfridge::io::params_from_json;
use qfridge::optimize::OptimizationProblem;
use qfridge::FridgeParams;

use crate::{CliError, ParamFlags, ProblemFlags};

pub fn read(path: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {path}: {e}")))
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&str>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("cannot write {p}: {e}"))),
        None => {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{text}") {
                Err(e) if e.kind() != ErrorKind::BrokenPipe => {
                    Err(CliError::Io(format!("cannot write to stdout: {e}")))
                }
                _ => Ok(()),
            }
        }
    }
}

/// File values first, flags on top; every field must end up set.
pub fn fridge_params(flags: &ParamFlags) -> Result<FridgeParams, CliError> {
    let base = match &flags.params {
        Some(path) => {
            let p = params_from_json(&read(path)?)
                .map_err(|e| CliError::Config(format!("{path}: {e}")))?;
            [
                Some(p.e1),
                Some(p.e3),
                Some(p.g),
                Some(p.p[0]),
                Some(p.p[1]),
                Some(p.p[2]),
                Some(p.temps[0]),
                Some(p.temps[1]),
                Some(p.temps[2]),
            ]
        }
        None => [None; 9],
    };
    let over = [
        flags.e1, flags.e3, flags.g, flags.p1, flags.p2, flags.p3, flags.tc, flags.tr, flags.th,
    ];
    let names = ["E1", "E3", "g", "p1", "p2", "p3", "TC", "TR", "TH"];
    let mut v = [0.0; 9];
    for k in 0..9 {
        v[k] = over[k].or(base[k]).ok_or_else(|| {
            CliError::Config(format!("missing parameter {} (use --params or --{})", names[k], names[k].to_lowercase()))
        })?;
    }
    let p = FridgeParams::new(v[0], v[1], v[2], [v[3], v[4], v[5]], [v[6], v[7], v[8]]);
    p.validate()?;
    Ok(p)
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    #[serde(rename = "E1")]
    e1: Option<f64>,
    p1: Option<f64>,
    #[serde(rename = "TC")]
    tc: Option<f64>,
    #[serde(rename = "TR")]
    tr: Option<f64>,
    #[serde(rename = "TH")]
    th: Option<f64>,
    bound: Option<f64>,
    e3_min: Option<f64>,
    e3_max: Option<f64>,
    rate_floor: Option<f64>,
}

/// Problem template; `TR` and `TH` default to 1.1 and 1e4.
pub fn problem(flags: &ProblemFlags) -> Result<OptimizationProblem, CliError> {
    let file: ProblemFile = match &flags.params {
        Some(path) => serde_json::from_str(&read(path)?)
            .map_err(|e| CliError::Config(format!("{path}: {e}")))?,
        None => ProblemFile::default(),
    };
    let tr = flags.tr.or(file.tr).unwrap_or(1.1);
    let th = flags.th.or(file.th).unwrap_or(1e4);
    let mut p = OptimizationProblem::new(tr, th, false);
    if let Some(e1) = flags.e1.or(file.e1) {
        p.e1 = e1;
        p.e3_min = e1 + 1e-3;
    }
    if let Some(v) = flags.p1.or(file.p1) {
        p.p1 = v;
    }
    if let Some(v) = flags.tc.or(file.tc) {
        p.tc = v;
    }
    if let Some(b) = flags.bound.or(file.bound) {
        p.p2_max = b;
        p.p3_max = b;
        p.g_max = b;
    }
    if let Some(v) = flags.e3_min.or(file.e3_min) {
        p.e3_min = v;
    }
    if let Some(v) = flags.e3_max.or(file.e3_max) {
        p.e3_max = v;
    }
    if let Some(v) = flags.rate_floor.or(file.rate_floor) {
        p.rate_floor = v;
    }
    Ok(p)
}
