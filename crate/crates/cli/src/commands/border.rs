use std::f64::consts::PI;

use frv_core::engine::{borderline_scan, Ray};
use frv_core::Complex;
use rayon::prelude::*;

use super::failure_report;
use crate::args::{BorderArgs, Engine};
use crate::error::{CliError, CliResult};
use crate::io::{fmt_f64, write_output, Table};

pub fn border_table(curves: &[Vec<Complex>]) -> Vec<u8> {
    let mut t = Table::new(&["curve", "x", "y"]);
    for (k, curve) in curves.iter().enumerate() {
        for z in curve {
            t.row([k.to_string(), fmt_f64(z.re), fmt_f64(z.im)]);
        }
    }
    t.into_bytes()
}

/// Outer border from ray scans of the numerical solver.
fn scanned(args: &BorderArgs) -> CliResult<Vec<Vec<Complex>>> {
    let model = args.model.model;
    let sum = model.blue_sum();
    let (sx, sy) = model.border().semi_axes();
    let reach = 1.5 * sx.max(sy);
    let n = args.points;
    let found: Vec<Result<Complex, (f64, f64, String)>> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let theta = 2.0 * PI * (i % n) as f64 / n as f64;
            let ray = Ray::polar(theta, reach);
            borderline_scan(&sum, &ray, 1e-10)
                .map(|t| ray.at(t))
                .map_err(|e| (theta.cos(), theta.sin(), e.to_string()))
        })
        .collect();
    let failures: Vec<_> = found.iter().filter_map(|r| r.as_ref().err().cloned()).collect();
    if !failures.is_empty() {
        return Err(CliError::SolverFailure {
            count: failures.len(),
            total: n + 1,
            report: failure_report(&failures),
        });
    }
    Ok(vec![found.into_iter().map(|r| r.expect("checked")).collect()])
}

pub fn border(args: &BorderArgs) -> CliResult<()> {
    if args.points < 3 {
        return Err(CliError::Input("need at least 3 points per curve".into()));
    }
    let curves = match args.engine {
        Engine::Closed => args.model.model.border().curves(args.points),
        Engine::Newton => scanned(args)?,
    };
    write_output(&args.out, &border_table(&curves))
}
