use std::collections::BTreeSet;

use frv_core::models::{BorderSpec, ModelSpec};
use frv_core::spectra::{RadialHistogram, RADIAL_EXTENT};
use frv_core::Complex;

use super::solve::SOLVE_HEADER;
use crate::args::{PlotArgs, PlotKind};
use crate::error::{CliError, CliResult};
use crate::io::{load_cloud, parse_field, parse_table, read_bytes, write_output};
use crate::svg::Frame;

const BORDER_COLOR: &str = "#d6604d";

fn overlay_border(frame: &mut Frame, border: &BorderSpec) {
    for curve in border.curves(512) {
        let pts: Vec<(f64, f64)> = curve.iter().map(|z| (z.re, z.im)).collect();
        frame.polyline(&pts, BORDER_COLOR);
    }
}

fn scatter(points: &[Complex], model: &ModelSpec) -> String {
    let border = model.border();
    let (sx, sy) = border.semi_axes();
    let (hx, hy) = (1.2 * sx, 1.2 * sy);
    let mut f = Frame::new(-hx, hx, -hy, hy);
    f.points(points, "#2166ac");
    overlay_border(&mut f, &border);
    f.render(&format!("{model}: {} eigenvalues", points.len()), "Re z", "Im z")
}

fn radial(points: &[Complex], model: &ModelSpec, bins: usize) -> CliResult<String> {
    let BorderSpec::Circle { radius } = model.border() else {
        return Err(CliError::Input(format!("radial plots need a circular model, {model} is not")));
    };
    let r_max = RADIAL_EXTENT * radius;
    let hist = RadialHistogram::new(points, r_max, bins);
    let theory: Vec<(f64, f64)> = (0..=400)
        .map(|i| {
            let r = r_max * i as f64 / 400.0;
            (r, model.density(Complex::new(r, 0.0)).unwrap_or(0.0))
        })
        .collect();
    let top = theory
        .iter()
        .map(|t| t.1)
        .chain(hist.density.iter().copied())
        .fold(0.0, f64::max);
    let mut f = Frame::new(0.0, r_max, 0.0, 1.1 * top);
    let bars: Vec<(f64, f64, f64)> = (0..bins)
        .map(|k| {
            let (l, r) = hist.edges(k);
            (l, r, hist.density[k])
        })
        .collect();
    f.bars(&bars, "#4393c3");
    f.polyline(&theory, BORDER_COLOR);
    Ok(f.render(&format!("{model}: radial density"), "|z|", "rho"))
}

fn density(args: &PlotArgs) -> CliResult<String> {
    let bytes = read_bytes(&args.input)?;
    let rows = parse_table(&args.input, &bytes, &SOLVE_HEADER)?;
    let mut pts = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let f = |k: usize| parse_field(&args.input, i + 1, &r[k]);
        pts.push((f(0)?, f(1)?, f(2)?));
    }
    let key = |v: f64| v.to_bits();
    let xs: BTreeSet<u64> = pts.iter().map(|p| key(p.0)).collect();
    let ys: BTreeSet<u64> = pts.iter().map(|p| key(p.1)).collect();
    if xs.len() < 2 || ys.len() < 2 || xs.len() * ys.len() != pts.len() {
        return Err(CliError::Input(format!("{}: not a rectangular grid", args.input.display())));
    }
    let lo = |s: &BTreeSet<u64>| f64::from_bits(*s.iter().next().expect("non-empty"));
    let hi = |s: &BTreeSet<u64>| f64::from_bits(*s.iter().next_back().expect("non-empty"));
    let (x0, x1, y0, y1) = (lo(&xs), hi(&xs), lo(&ys), hi(&ys));
    let (dx, dy) = ((x1 - x0) / (xs.len() - 1) as f64, (y1 - y0) / (ys.len() - 1) as f64);
    let cells: Vec<_> = pts
        .iter()
        .map(|&(x, y, rho)| (x - dx / 2.0, x + dx / 2.0, y - dy / 2.0, y + dy / 2.0, rho))
        .collect();
    let max = pts.iter().map(|p| p.2).fold(0.0, f64::max);
    let mut f = Frame::new(x0 - dx / 2.0, x1 + dx / 2.0, y0 - dy / 2.0, y1 + dy / 2.0);
    f.cells(&cells, if max > 0.0 { max } else { 1.0 });
    if let Some(model) = args.model {
        overlay_border(&mut f, &model.border());
    }
    Ok(f.render(&format!("density, max {max:.4}"), "Re z", "Im z"))
}

pub fn plot(args: &PlotArgs) -> CliResult<()> {
    if args.bins == 0 {
        return Err(CliError::Input("bins must be positive".into()));
    }
    let svg = match args.kind {
        PlotKind::Density => density(args)?,
        kind => {
            let loaded = load_cloud(&args.input, None)?;
            let model = args.model.unwrap_or(loaded.config.model);
            if kind == PlotKind::Scatter {
                scatter(&loaded.points, &model)
            } else {
                radial(&loaded.points, &model, args.bins)?
            }
        }
    };
    write_output(&args.out, svg.as_bytes())
}
