use frv_core::engine::{density_grid, Branch};
use frv_core::spectra::Bounds;
use frv_core::Complex;
use rayon::prelude::*;

use super::{border::border_table, failure_report, linspace};
use crate::args::{Engine, SolveArgs};
use crate::error::{CliError, CliResult};
use crate::io::{fmt_f64, write_output, Table};

pub const SOLVE_HEADER: [&str; 7] = ["x", "y", "rho", "reG", "imG", "negC", "inside"];

struct Point {
    rho: f64,
    greens: Complex,
    neg_corr: f64,
    inside: bool,
}

type Cell = Result<Point, String>;

fn closed(args: &SolveArgs, xs: &[f64], ys: &[f64]) -> Vec<Vec<Cell>> {
    let model = args.model.model;
    ys.par_iter()
        .map(|&y| {
            xs.iter()
                .map(|&x| {
                    model
                        .solution(Complex::new(x, y))
                        .map(|s| Point {
                            rho: s.density,
                            greens: s.greens,
                            neg_corr: s.neg_corr,
                            inside: s.inside(),
                        })
                        .map_err(|e| e.to_string())
                })
                .collect()
        })
        .collect()
}

fn newton(args: &SolveArgs, xs: &[f64], ys: &[f64]) -> Vec<Vec<Cell>> {
    density_grid(&args.model.model.blue_sum(), xs, ys, args.fd_step)
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|r| {
                    r.map(|(s, d)| Point {
                        rho: d.rho,
                        greens: s.greens,
                        neg_corr: s.corr,
                        inside: s.branch == Branch::NonHolomorphic,
                    })
                    .map_err(|e| e.to_string())
                })
                .collect()
        })
        .collect()
}

pub fn solve(args: &SolveArgs) -> CliResult<()> {
    let model = args.model.model;
    if !(args.fd_step > 0.0 && args.fd_step.is_finite()) {
        return Err(CliError::Input(format!("fd step must be positive, got {}", args.fd_step)));
    }
    let b = args.bounds.map(|b| b.0).unwrap_or_else(|| Bounds::around(&model.border(), 1.2));
    let n = args.grid as usize;
    let (xs, ys) = (linspace(b.x0, b.x1, n), linspace(b.y0, b.y1, n));
    let grid = match args.engine {
        Engine::Closed => closed(args, &xs, &ys),
        Engine::Newton => newton(args, &xs, &ys),
    };

    let mut table = Table::new(&SOLVE_HEADER);
    let mut failures = Vec::new();
    for (row, &y) in grid.iter().zip(&ys) {
        for (cell, &x) in row.iter().zip(&xs) {
            match cell {
                Ok(p) => table.row([
                    fmt_f64(x),
                    fmt_f64(y),
                    fmt_f64(p.rho),
                    fmt_f64(p.greens.re),
                    fmt_f64(p.greens.im),
                    fmt_f64(p.neg_corr),
                    p.inside.to_string(),
                ]),
                Err(e) => failures.push((x, y, e.clone())),
            }
        }
    }
    if !failures.is_empty() {
        return Err(CliError::SolverFailure {
            count: failures.len(),
            total: n * n,
            report: failure_report(&failures),
        });
    }
    write_output(&args.out, &table.into_bytes())?;
    if let Some(path) = &args.border_out {
        write_output(path, &border_table(&model.border().curves(512)))?;
    }
    Ok(())
}
