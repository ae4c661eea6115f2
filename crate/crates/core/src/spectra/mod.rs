//! Spectral statistics of eigenvalue clouds and their comparison with theory.

pub mod linalg;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{realize_sample, EigCloud};
use crate::error::{Error, Result};
use crate::models::{BorderSpec, ModelSpec};

pub use linalg::{eig_decompose, eig_general, EigenDecomposition};

/// Inflation of the outer border when counting "outside" eigenvalues.
pub const BORDER_INFLATION: f64 = 1.05;
/// Shrink factor of the hole when counting eigenvalues inside it.
pub const HOLE_SHRINK: f64 = 0.95;
/// Radial histograms extend to this multiple of the border radius.
pub const RADIAL_EXTENT: f64 = 1.05;
/// Eigenvector matrices with a larger Frobenius condition number are rejected.
pub const MAX_EIGENBASIS_CONDITION: f64 = 1e12;

/// Counts in concentric shells `[r_k, r_{k+1})` of equal width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialHistogram {
    pub r_max: f64,
    pub bins: usize,
    pub counts: Vec<u64>,
    /// Points with `|z| >= r_max`.
    pub beyond: u64,
    pub total: u64,
    /// `count / (total * pi (r_{k+1}^2 - r_k^2))`.
    pub density: Vec<f64>,
}

impl RadialHistogram {
    pub fn new(points: &[Complex64], r_max: f64, bins: usize) -> Self {
        let mut counts = vec![0u64; bins];
        let mut beyond = 0;
        let w = r_max / bins as f64;
        for z in points {
            let k = (z.norm() / w) as usize;
            if k < bins {
                counts[k] += 1;
            } else {
                beyond += 1;
            }
        }
        let total = points.len() as u64;
        let density = (0..bins)
            .map(|k| counts[k] as f64 / (total.max(1) as f64 * Self::area_of(w, k)))
            .collect();
        Self {
            r_max,
            bins,
            counts,
            beyond,
            total,
            density,
        }
    }

    fn area_of(w: f64, k: usize) -> f64 {
        let (r0, r1) = (k as f64 * w, (k + 1) as f64 * w);
        PI * (r1 * r1 - r0 * r0)
    }

    pub fn edges(&self, k: usize) -> (f64, f64) {
        let w = self.r_max / self.bins as f64;
        (k as f64 * w, (k + 1) as f64 * w)
    }

    pub fn area(&self, k: usize) -> f64 {
        Self::area_of(self.r_max / self.bins as f64, k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Bounds {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x0 < x1 && y0 < y1) {
            return Err(Error::InvalidConfig(format!(
                "bounds must be ordered, got {x0}:{x1}:{y0}:{y1}"
            )));
        }
        Ok(Self { x0, x1, y0, y1 })
    }

    /// Box around the outer border, padded by `pad` times its semi-axes.
    pub fn around(border: &BorderSpec, pad: f64) -> Self {
        let (sx, sy) = border.semi_axes();
        Self {
            x0: -sx * pad,
            x1: sx * pad,
            y0: -sy * pad,
            y1: sy * pad,
        }
    }
}

/// Counts on a uniform `nx * ny` grid of cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram2D {
    pub bounds: Bounds,
    pub nx: usize,
    pub ny: usize,
    /// Row-major, `counts[iy * nx + ix]`.
    pub counts: Vec<u64>,
    pub beyond: u64,
    pub total: u64,
    pub density: Vec<f64>,
}

impl Histogram2D {
    pub fn new(points: &[Complex64], bounds: Bounds, nx: usize, ny: usize) -> Self {
        let mut counts = vec![0u64; nx * ny];
        let mut beyond = 0;
        let (dx, dy) = ((bounds.x1 - bounds.x0) / nx as f64, (bounds.y1 - bounds.y0) / ny as f64);
        for z in points {
            let fx = (z.re - bounds.x0) / dx;
            let fy = (z.im - bounds.y0) / dy;
            if fx >= 0.0 && fy >= 0.0 && (fx as usize) < nx && (fy as usize) < ny {
                counts[fy as usize * nx + fx as usize] += 1;
            } else {
                beyond += 1;
            }
        }
        let total = points.len() as u64;
        let area = dx * dy;
        let density = counts
            .iter()
            .map(|&c| c as f64 / (total.max(1) as f64 * area))
            .collect();
        Self {
            bounds,
            nx,
            ny,
            counts,
            beyond,
            total,
            density,
        }
    }

    pub fn cell_size(&self) -> (f64, f64) {
        (
            (self.bounds.x1 - self.bounds.x0) / self.nx as f64,
            (self.bounds.y1 - self.bounds.y0) / self.ny as f64,
        )
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Complex64 {
        let (dx, dy) = self.cell_size();
        Complex64::new(
            self.bounds.x0 + (ix as f64 + 0.5) * dx,
            self.bounds.y0 + (iy as f64 + 0.5) * dy,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ComparisonReport {
    /// `sum |rho_hat - rho| * cell area`, including the mass outside the binned range.
    pub l1_distance: f64,
    /// Largest `|rho_hat - rho|` over the bins.
    pub max_bin_deviation: f64,
    /// Fraction beyond the border inflated by [`BORDER_INFLATION`].
    pub outside_fraction: f64,
    /// Fraction within [`HOLE_SHRINK`] times the hole radius, when there is a hole.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inside_hole_fraction: Option<f64>,
    pub bins: usize,
    pub point_count: usize,
    /// Empirical and theoretical density in the innermost radial bin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_bin: Option<OriginBin>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OriginBin {
    pub radius: f64,
    pub sampled: f64,
    pub theory: f64,
}

/// 5-point Gauss-Legendre on `[a, b]` split into `pieces`.
fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, pieces: usize) -> f64 {
    const X: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683,
        0.538_469_310_105_683,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_889,
        0.478_628_670_499_366,
        0.478_628_670_499_366,
        0.236_926_885_056_189,
        0.236_926_885_056_189,
    ];
    let h = (b - a) / pieces as f64;
    let mut s = 0.0;
    for p in 0..pieces {
        let mid = a + (p as f64 + 0.5) * h;
        for k in 0..5 {
            s += W[k] * f(mid + 0.5 * h * X[k]);
        }
    }
    s * 0.5 * h
}

/// `int_{r0}^{r1} f(r) 2 pi r dr`, split at the discontinuity `r_cut`.
fn shell_mass<F: Fn(f64) -> f64>(f: &F, r0: f64, r1: f64, r_cut: f64) -> f64 {
    let g = |r: f64| f(r) * 2.0 * PI * r;
    if r_cut > r0 && r_cut < r1 {
        integrate(g, r0, r_cut, 16) + integrate(g, r_cut, r1, 16)
    } else {
        integrate(g, r0, r1, 16)
    }
}

fn require_points(points: &[Complex64]) -> Result<()> {
    if points.is_empty() {
        Err(Error::EmptyCloud)
    } else {
        Ok(())
    }
}

fn border_fractions(points: &[Complex64], border: &BorderSpec) -> (f64, Option<f64>) {
    let n = points.len() as f64;
    let outside = points
        .iter()
        .filter(|z| !border.within_outer(**z, BORDER_INFLATION))
        .count() as f64
        / n;
    let hole = border.hole_radius().filter(|h| *h > 0.0).map(|_| {
        points.iter().filter(|z| border.within_hole(**z, HOLE_SHRINK)).count() as f64 / n
    });
    (outside, hole)
}

/// Radial comparison for a circularly symmetric model; bins span
/// `[0, RADIAL_EXTENT * border radius]`.
pub fn radial_compare_points(points: &[Complex64], model: &ModelSpec, bins: usize) -> Result<ComparisonReport> {
    require_points(points)?;
    if !model.is_radial() {
        return Err(Error::InvalidConfig(format!("{model} is not circularly symmetric")));
    }
    if bins == 0 {
        return Err(Error::InvalidConfig("need at least one bin".into()));
    }
    let border = model.border();
    let BorderSpec::Circle { radius } = border else {
        unreachable!("radial models have circular borders")
    };
    let hist = RadialHistogram::new(points, RADIAL_EXTENT * radius, bins);
    let rho = |r: f64| model.density(Complex64::new(r, 0.0)).unwrap_or(0.0);
    let mut l1 = hist.beyond as f64 / hist.total as f64;
    let mut max_dev = 0.0f64;
    let mut origin = None;
    for k in 0..bins {
        let (r0, r1) = hist.edges(k);
        let area = hist.area(k);
        let theory = shell_mass(&rho, r0, r1, radius) / area;
        let dev = (hist.density[k] - theory).abs();
        l1 += dev * area;
        max_dev = max_dev.max(dev);
        if k == 0 {
            origin = Some(OriginBin {
                radius: r1,
                sampled: hist.density[0],
                theory,
            });
        }
    }
    let (outside_fraction, inside_hole_fraction) = border_fractions(points, &border);
    Ok(ComparisonReport {
        l1_distance: l1,
        max_bin_deviation: max_dev,
        outside_fraction,
        inside_hole_fraction,
        bins,
        point_count: points.len(),
        origin_bin: origin,
    })
}

pub fn radial_compare(cloud: &EigCloud, model: &ModelSpec, bins: usize) -> Result<ComparisonReport> {
    radial_compare_points(&cloud.points, model, bins)
}

/// Sub-cell samples per axis when averaging the theoretical density over a cell.
const CELL_SUBSAMPLES: usize = 8;

/// Planar comparison on a `grid * grid` histogram covering the border box padded by 10%.
pub fn planar_compare_points(points: &[Complex64], model: &ModelSpec, grid: usize) -> Result<ComparisonReport> {
    require_points(points)?;
    if grid == 0 {
        return Err(Error::InvalidConfig("need at least one cell".into()));
    }
    let border = model.border();
    let hist = Histogram2D::new(points, Bounds::around(&border, 1.1), grid, grid);
    let (dx, dy) = hist.cell_size();
    let k = CELL_SUBSAMPLES;
    let theory: Vec<f64> = (0..grid * grid)
        .into_par_iter()
        .map(|cell| {
            let (ix, iy) = (cell % grid, cell / grid);
            let c0 = hist.cell_center(ix, iy) - Complex64::new(0.5 * dx, 0.5 * dy);
            let mut s = 0.0;
            for a in 0..k {
                for b in 0..k {
                    let z = c0 + Complex64::new((a as f64 + 0.5) * dx / k as f64, (b as f64 + 0.5) * dy / k as f64);
                    s += model.density(z).unwrap_or(0.0);
                }
            }
            s / (k * k) as f64
        })
        .collect();
    let area = dx * dy;
    let mut l1 = hist.beyond as f64 / hist.total as f64;
    let mut max_dev = 0.0f64;
    for (d, t) in hist.density.iter().zip(&theory) {
        let dev = (d - t).abs();
        l1 += dev * area;
        max_dev = max_dev.max(dev);
    }
    let (outside_fraction, inside_hole_fraction) = border_fractions(points, &border);
    Ok(ComparisonReport {
        l1_distance: l1,
        max_bin_deviation: max_dev,
        outside_fraction,
        inside_hole_fraction,
        bins: grid * grid,
        point_count: points.len(),
        origin_bin: None,
    })
}

pub fn planar_compare(cloud: &EigCloud, model: &ModelSpec, grid: usize) -> Result<ComparisonReport> {
    planar_compare_points(&cloud.points, model, grid)
}

/// Eigenvalues with their overlaps `O_i = (L_i L_i^dagger)(R_i^dagger R_i)`, where the
/// left eigenvectors are the rows of `R^-1`.
pub fn overlap_correlator(a: &DMatrix<Complex64>) -> Result<Vec<(Complex64, f64)>> {
    let form = linalg::schur(a)?;
    let y = linalg::triangular_eigenvectors(&form.t);
    let n = a.nrows();
    // A = Z T Z^H, eigenvectors Z Y; Z unitary so the norms are those of Y and Y^-1
    let yinv = y
        .clone()
        .solve_upper_triangular(&DMatrix::<Complex64>::identity(n, n))
        .ok_or(Error::IllConditionedEigenbasis { condition: f64::INFINITY })?;
    let mut out = Vec::with_capacity(n);
    let mut sum = 0.0;
    for k in 0..n {
        let right = y.column(k).norm_squared();
        let left = yinv.row(k).norm_squared();
        let o = right * left;
        sum += o;
        out.push((form.t[(k, k)], o));
    }
    // Frobenius condition number of the column-normalized eigenvector matrix
    let condition = (n as f64 * sum).sqrt();
    if !(condition < MAX_EIGENBASIS_CONDITION) {
        return Err(Error::IllConditionedEigenbasis { condition });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OverlapReport {
    /// `sum |c_hat - c| * shell area` with `c = -C/pi`.
    pub l1_distance: f64,
    /// Estimated `int (-C/pi) d^2 z`.
    pub total: f64,
    pub theory_total: f64,
    pub r_max: f64,
    /// Per-shell estimate `sum O / (S N^2 area)`.
    pub estimate: Vec<f64>,
    pub theory: Vec<f64>,
}

/// Binned overlap estimator for a circular model against `-C/pi`.
///
/// Overlaps grow like `N`, so each sample's sum is normalized by `N^2`.
pub fn overlap_compare(
    samples: &[Vec<(Complex64, f64)>],
    n: usize,
    model: &ModelSpec,
    bins: usize,
) -> Result<OverlapReport> {
    if samples.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let BorderSpec::Circle { radius } = model.border() else {
        return Err(Error::InvalidConfig(format!("{model} is not circularly symmetric")));
    };
    let r_max = RADIAL_EXTENT * radius;
    let w = r_max / bins as f64;
    let norm = 1.0 / (samples.len() as f64 * (n * n) as f64);
    let mut sums = vec![0.0; bins];
    let mut beyond = 0.0;
    for s in samples {
        for (l, o) in s {
            let k = (l.norm() / w) as usize;
            if k < bins {
                sums[k] += o * norm;
            } else {
                beyond += o * norm;
            }
        }
    }
    let negc = |r: f64| {
        model
            .solution(Complex64::new(r, 0.0))
            .map(|s| s.neg_corr / PI)
            .unwrap_or(0.0)
    };
    let mut l1 = beyond;
    let mut estimate = Vec::with_capacity(bins);
    let mut theory = Vec::with_capacity(bins);
    let mut theory_total = 0.0;
    for k in 0..bins {
        let (r0, r1) = (k as f64 * w, (k + 1) as f64 * w);
        let area = PI * (r1 * r1 - r0 * r0);
        let mass = shell_mass(&negc, r0, r1, radius);
        theory_total += mass;
        l1 += (sums[k] - mass).abs();
        estimate.push(sums[k] / area);
        theory.push(mass / area);
    }
    Ok(OverlapReport {
        l1_distance: l1,
        total: sums.iter().sum::<f64>() + beyond,
        theory_total,
        r_max,
        estimate,
        theory,
    })
}

/// Overlaps of every sample of `cloud`'s configuration, regenerating the matrices.
pub fn sample_overlaps(
    model: &ModelSpec,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<Vec<(Complex64, f64)>>> {
    (0..samples)
        .into_par_iter()
        .map(|s| {
            overlap_correlator(&realize_sample(model, n, seed, s as u64)).map_err(|e| Error::Sample {
                sample: s,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Convex hull by the monotone chain, counter-clockwise, without repeated endpoint.
pub fn convex_hull(points: &[Complex64]) -> Vec<Complex64> {
    let mut p: Vec<Complex64> = points.to_vec();
    p.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: Complex64, a: Complex64, b: Complex64| {
        (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
    };
    let mut hull: Vec<Complex64> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Complex64>> = if pass == 0 {
            Box::new(p.iter())
        } else {
            Box::new(p.iter().rev())
        };
        for &q in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    hull
}

/// Mean over samples of the mean modulus of the convex-hull vertices.
pub fn hull_radius(cloud: &EigCloud) -> Result<f64> {
    require_points(&cloud.points)?;
    let radii: Vec<f64> = cloud
        .per_sample()
        .map(|s| {
            let h = convex_hull(s);
            h.iter().map(|z| z.norm()).sum::<f64>() / h.len() as f64
        })
        .collect();
    Ok(radii.iter().sum::<f64>() / radii.len() as f64)
}
