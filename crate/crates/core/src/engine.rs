//! The quaternion addition law and its numerical inversion.
//!
//! For free summands `X_1 + ... + X_n` the quaternion Blue's functions add as
//! `B(Q) = sum_i B_i(Q) - (n - 1) Q^-1`. Solving `B(Q) = diag(z, conj z)` for
//! `Q = (a, b)` gives the Green's function `G(z) = a` and the eigenvector
//! correlator `-C(z) = |b|^2`.
//!
//! Summands come in two kinds. An *explicit* term knows its Blue's function in
//! closed form, stored as `R(Q) + Q^-1` with a regular part `R` so that the
//! `Q^-1` poles can be cancelled exactly. An *implicit* term only knows its
//! quaternion Green's function (CUE, generic unitary or Hermitian measures);
//! its Blue's function value `W` becomes an extra unknown tied to `Q` by
//! `G(W) = Q`.
//!
//! Only `|b|` is observable, so `b` is kept real and non-negative. The
//! b-equations are divided by `b`, which removes the trivial `b = 0` family and
//! keeps Newton well conditioned as the border (`b -> 0`) is approached. The
//! implicit unknowns use `d = b * kappa` for the same reason. The result is a
//! consistent system with one more equation than unknowns, solved in the
//! least-squares sense.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::green::{self, ComplexGreens};
use crate::quaternion::Quaternion;
use crate::solver::{damped_newton, NewtonOptions};

/// A quaternion-valued map.
pub type QuaternionMap = Arc<dyn Fn(&Quaternion) -> Result<Quaternion> + Send + Sync>;

/// Non-holomorphic solutions need `|b|^2` above this.
pub const NONHOLOMORPHIC_MIN_CORR: f64 = 1e-12;

/// `b` is clamped to this in the reduced equations.
const B_FLOOR: f64 = 1e-14;

#[derive(Clone)]
pub enum BlueTerm {
    /// `B(Q) = R(Q) + Q^-1` with `R` given.
    Explicit { label: String, regular: QuaternionMap },
    /// Blue's function defined as the inverse of the quaternion Green's function `green`.
    Implicit { label: String, green: QuaternionMap },
}

impl fmt::Debug for BlueTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlueTerm::Explicit { label, .. } => write!(f, "Explicit({label})"),
            BlueTerm::Implicit { label, .. } => write!(f, "Implicit({label})"),
        }
    }
}

impl BlueTerm {
    /// The zero matrix: `B(Q) = Q^-1`.
    pub fn zero() -> Self {
        BlueTerm::Explicit {
            label: "zero".into(),
            regular: Arc::new(|_| Ok(Quaternion::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)))),
        }
    }

    /// `p * GUE`: `B(Q) = p^2 Q + Q^-1`.
    pub fn gue(p: f64) -> Self {
        let p2 = p * p;
        BlueTerm::Explicit {
            label: format!("gue:{p}"),
            regular: Arc::new(move |q| Ok(q.scale(p2))),
        }
    }

    /// `k * CUE`, via `G_kU(Q) = G_U(Q/k) / k`.
    pub fn cue(scale: f64) -> Self {
        BlueTerm::Implicit {
            label: format!("cue@{scale}"),
            green: Arc::new(move |q| {
                Ok(green::cue_quaternion_green(&q.scale(1.0 / scale))?.scale(1.0 / scale))
            }),
        }
    }

    /// A unitary ensemble given by its complex Green's function.
    pub fn unitary(greens: Arc<dyn ComplexGreens>, scale: f64) -> Self {
        BlueTerm::Implicit {
            label: format!("unitary:{greens:?}@{scale}"),
            green: Arc::new(move |q| {
                Ok(green::unitary_quaternion_green(greens.as_ref(), &q.scale(1.0 / scale))?
                    .scale(1.0 / scale))
            }),
        }
    }

    /// A Hermitian ensemble given by its complex Green's function.
    pub fn hermitian(greens: Arc<dyn ComplexGreens>, scale: f64) -> Self {
        BlueTerm::Implicit {
            label: format!("hermitian:{greens:?}@{scale}"),
            green: Arc::new(move |q| {
                Ok(green::hermitian_quaternion_green(greens.as_ref(), &q.scale(1.0 / scale))?
                    .scale(1.0 / scale))
            }),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            BlueTerm::Explicit { label, .. } | BlueTerm::Implicit { label, .. } => label,
        }
    }

    /// `B(Q)`. Implicit terms are inverted by Newton from `seed` (default `Q^-1`).
    pub fn blue(&self, q: &Quaternion, seed: Option<Quaternion>) -> Result<Quaternion> {
        match self {
            BlueTerm::Explicit { regular, .. } => Ok(regular(q)? + q.inverse()?),
            BlueTerm::Implicit { green, .. } => {
                green::invert_quaternion_green(|w| green(w), q, seed)
            }
        }
    }
}

/// A free sum of terms, each with a multiplicity.
#[derive(Debug, Clone)]
pub struct BlueSum {
    terms: Vec<(BlueTerm, usize)>,
}

impl BlueSum {
    pub fn new(terms: Vec<(BlueTerm, usize)>) -> Result<Self> {
        let terms: Vec<_> = terms.into_iter().filter(|(_, m)| *m > 0).collect();
        if terms.is_empty() {
            return Err(Error::InvalidConfig("a Blue's sum needs at least one term".into()));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[(BlueTerm, usize)] {
        &self.terms
    }

    /// Total number of summands, counting multiplicity.
    pub fn term_count(&self) -> usize {
        self.terms.iter().map(|(_, m)| m).sum()
    }

    fn implicit_count(&self) -> usize {
        self.terms
            .iter()
            .filter(|(t, _)| matches!(t, BlueTerm::Implicit { .. }))
            .map(|(_, m)| m)
            .sum()
    }

    fn implicit_terms(&self) -> impl Iterator<Item = (&QuaternionMap, usize)> {
        self.terms.iter().filter_map(|(t, m)| match t {
            BlueTerm::Implicit { green, .. } => Some((green, *m)),
            _ => None,
        })
    }

    /// `sum_i B_i(Q) - (n-1) Q^-1`.
    pub fn eval(&self, q: &Quaternion) -> Result<Quaternion> {
        let qinv = q.inverse()?;
        let mut out = qinv.scale(-(self.term_count() as f64 - 1.0));
        for (term, m) in &self.terms {
            out = out + term.blue(q, None)?.scale(*m as f64);
        }
        Ok(out)
    }
}

/// Which solution family an inversion landed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `|b| > 0`: inside the eigenvalue support.
    NonHolomorphic,
    /// `b = 0`: the ordinary complex Green's function.
    Holomorphic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionResult {
    pub q: Quaternion,
    /// `G(z) = a`.
    pub greens: Complex64,
    /// `|b|^2 = -C(z)`.
    pub corr: f64,
    pub converged: bool,
    /// Max-norm of `B(Q) - diag(z)` together with the implicit-term consistency `G_i(W_i) - Q`.
    pub residual: f64,
    pub branch: Branch,
    pub iterations: usize,
    /// Blue's function value of each distinct implicit term.
    pub blue_values: Vec<Quaternion>,
}

fn inv_or_zero(z: Complex64) -> Complex64 {
    if z.norm() > 1e-8 {
        z.inv()
    } else {
        Complex64::new(0.0, 0.0)
    }
}

struct Layout {
    implicit: usize,
    holomorphic: bool,
}

impl Layout {
    fn unknowns(&self) -> usize {
        if self.holomorphic {
            2 + 2 * self.implicit
        } else {
            3 + 4 * self.implicit
        }
    }

    fn residuals(&self) -> usize {
        if self.holomorphic {
            2 + 2 * self.implicit
        } else {
            4 + 4 * self.implicit
        }
    }
}

fn explicit_regular_sum(sum: &BlueSum, q: &Quaternion) -> Result<Quaternion> {
    let mut out = Quaternion::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for (t, m) in sum.terms() {
        if let BlueTerm::Explicit { regular, .. } = t {
            out = out + regular(q)?.scale(*m as f64);
        }
    }
    Ok(out)
}

/// Residual of the reduced system (see module docs).
fn residual(sum: &BlueSum, z: Complex64, lay: &Layout, x: &[f64], r: &mut [f64]) -> Result<()> {
    let a = Complex64::new(x[0], x[1]);
    let k = sum.implicit_count() as f64;
    if lay.holomorphic {
        let q = Quaternion::diag(a);
        let mut sa = explicit_regular_sum(sum, &q)?.a - z;
        if k != 1.0 {
            sa -= (k - 1.0) * q.inverse()?.a;
        }
        for (j, (g, m)) in sum.implicit_terms().enumerate() {
            let c = Complex64::new(x[2 + 2 * j], x[3 + 2 * j]);
            sa += m as f64 * c;
            let gw = g(&Quaternion::diag(c))?;
            r[2 + 2 * j] = gw.a.re - a.re;
            r[3 + 2 * j] = gw.a.im - a.im;
        }
        r[0] = sa.re;
        r[1] = sa.im;
        return Ok(());
    }

    let b = x[2].abs().max(B_FLOOR);
    let q = Quaternion::new(a, Complex64::new(b, 0.0));
    let det = q.det();
    let reg = explicit_regular_sum(sum, &q)?;
    let mut sa = reg.a - z - (k - 1.0) * a.conj() / det;
    let mut sb = reg.b / b + (k - 1.0) / det;
    for (j, (g, m)) in sum.implicit_terms().enumerate() {
        let o = 3 + 4 * j;
        let c = Complex64::new(x[o], x[o + 1]);
        let kappa = Complex64::new(x[o + 2], x[o + 3]);
        sa += m as f64 * c;
        sb += m as f64 * kappa;
        let gw = g(&Quaternion::new(c, kappa * b))?;
        let ra = gw.a - a;
        let rb = gw.b / b - 1.0;
        r[4 + 4 * j] = ra.re;
        r[5 + 4 * j] = ra.im;
        r[6 + 4 * j] = rb.re;
        r[7 + 4 * j] = rb.im;
    }
    r[0] = sa.re;
    r[1] = sa.im;
    r[2] = sb.re;
    r[3] = sb.im;
    Ok(())
}

fn unpack(lay: &Layout, x: &[f64]) -> (Quaternion, Vec<Quaternion>) {
    let a = Complex64::new(x[0], x[1]);
    if lay.holomorphic {
        let ws = (0..lay.implicit)
            .map(|j| Quaternion::diag(Complex64::new(x[2 + 2 * j], x[3 + 2 * j])))
            .collect();
        return (Quaternion::diag(a), ws);
    }
    let b = x[2].abs();
    let ws = (0..lay.implicit)
        .map(|j| {
            let o = 3 + 4 * j;
            Quaternion::new(
                Complex64::new(x[o], x[o + 1]),
                Complex64::new(x[o + 2], x[o + 3]) * b,
            )
        })
        .collect();
    (Quaternion::new(a, Complex64::new(b, 0.0)), ws)
}

/// Unreduced residual of a candidate: addition law plus implicit consistency.
fn full_residual(sum: &BlueSum, z: Complex64, q: &Quaternion, ws: &[Quaternion]) -> Result<f64> {
    let k = sum.implicit_count() as f64;
    let mut total = explicit_regular_sum(sum, q)?;
    if k != 1.0 {
        total = total - q.inverse()?.scale(k - 1.0);
    }
    let mut worst = 0.0f64;
    for ((g, m), w) in sum.implicit_terms().zip(ws) {
        total = total + w.scale(m as f64);
        worst = worst.max(g(w)?.max_abs_diff(q));
    }
    Ok(worst.max(total.max_abs_diff(&Quaternion::diag(z))))
}

/// Packs a seed `Q` into unknowns; each implicit `W` is `B_i(Q)` when it can be
/// inverted and an equal split of the addition law otherwise.
fn seed_vector(
    sum: &BlueSum,
    z: Complex64,
    lay: &Layout,
    q: &Quaternion,
    ws: Option<&[Quaternion]>,
) -> Vec<f64> {
    let k = sum.implicit_count().max(1) as f64;
    let split = (|| -> Result<Quaternion> {
        let mut rest = Quaternion::diag(z) - explicit_regular_sum(sum, q)?;
        rest = rest + q.inverse()?.scale(k - 1.0);
        Ok(rest.scale(1.0 / k))
    })()
    .unwrap_or_else(|_| Quaternion::diag(z.scale(1.0 / k)));

    let mut x = vec![q.a.re, q.a.im];
    if !lay.holomorphic {
        x.push(q.b.norm());
    }
    let b = q.b.norm().max(B_FLOOR);
    for (j, (g, _)) in sum.implicit_terms().enumerate() {
        let w = ws
            .and_then(|w| w.get(j).copied())
            .or_else(|| green::invert_quaternion_green(|w| g(w), q, None).ok())
            .unwrap_or(split);
        x.extend([w.a.re, w.a.im]);
        if !lay.holomorphic {
            let kappa = w.b / b;
            x.extend([kappa.re, kappa.im]);
        }
    }
    x
}

/// Newton iterates past the acceptance threshold so that the unreduced
/// residual also lands below it.
const NEWTON_TOLERANCE: f64 = 1e-12;
const ACCEPT_TOLERANCE: f64 = 1e-10;

fn solve_from(
    sum: &BlueSum,
    z: Complex64,
    branch: Branch,
    seed: &Quaternion,
    ws: Option<&[Quaternion]>,
) -> Option<InversionResult> {
    let lay = Layout {
        implicit: sum.implicit_terms().count(),
        holomorphic: branch == Branch::Holomorphic,
    };
    let x0 = seed_vector(sum, z, &lay, seed, ws);
    debug_assert_eq!(x0.len(), lay.unknowns());
    let out = damped_newton(
        |x, r| residual(sum, z, &lay, x, r),
        &x0,
        lay.residuals(),
        &NewtonOptions {
            tolerance: NEWTON_TOLERANCE,
            ..NewtonOptions::default()
        },
    );
    if !out.x.iter().all(|v| v.is_finite()) {
        return None;
    }
    let (q, blue_values) = unpack(&lay, &out.x);
    let full = full_residual(sum, z, &q, &blue_values).unwrap_or(f64::INFINITY);
    let corr = q.b.norm_sqr();
    let residual = full.max(out.residual);
    Some(InversionResult {
        q,
        greens: q.a,
        corr,
        converged: residual < ACCEPT_TOLERANCE,
        residual,
        branch,
        iterations: out.iterations,
        blue_values,
    })
}

fn accept(r: &InversionResult) -> bool {
    r.converged && (r.branch == Branch::Holomorphic || r.corr > NONHOLOMORPHIC_MIN_CORR)
}

fn seeds_for(z: Complex64, branch: Branch, prev: Option<&InversionResult>) -> Vec<(Quaternion, Option<Vec<Quaternion>>)> {
    let mut seeds = Vec::new();
    match prev.filter(|p| p.q.is_finite()) {
        Some(p) if p.branch == branch => seeds.push((p.q, Some(p.blue_values.clone()))),
        // G is continuous across the border, so a non-holomorphic neighbour
        // selects the holomorphic branch on the other side (relevant in holes)
        Some(p) if branch == Branch::Holomorphic => seeds.push((
            Quaternion::diag(p.greens),
            Some(p.blue_values.iter().map(|w| Quaternion::diag(w.a)).collect()),
        )),
        _ => {}
    }
    let inv = inv_or_zero(z);
    match branch {
        Branch::NonHolomorphic => {
            let half = Complex64::new(0.5, 0.0);
            seeds.push((Quaternion::new(inv, half), None));
            seeds.push((Quaternion::new(z.conj() * 0.25, half), None));
        }
        Branch::Holomorphic => {
            seeds.push((Quaternion::diag(inv), None));
            seeds.push((Quaternion::diag(Complex64::new(0.0, 0.0)), None));
        }
    }
    seeds
}

/// Solves on one branch only, trying the continuation seed first.
pub fn invert_blue_on_branch(
    sum: &BlueSum,
    z: Complex64,
    branch: Branch,
    seed: Option<&InversionResult>,
) -> Result<InversionResult> {
    let mut best = f64::INFINITY;
    for (q, ws) in seeds_for(z, branch, seed) {
        if let Some(r) = solve_from(sum, z, branch, &q, ws.as_deref()) {
            if accept(&r) {
                return Ok(r);
            }
            best = best.min(r.residual);
        }
    }
    Err(Error::NoConvergence { best_residual: best })
}

/// Solves `B(Q) = diag(z, conj z)`. A non-holomorphic solution is preferred
/// whenever one exists; otherwise the holomorphic one is returned.
pub fn invert_blue_at(
    sum: &BlueSum,
    z: Complex64,
    seed: Option<&InversionResult>,
) -> Result<InversionResult> {
    let nonholo = invert_blue_on_branch(sum, z, Branch::NonHolomorphic, seed);
    match nonholo {
        Ok(r) => Ok(r),
        Err(Error::NoConvergence { best_residual: b1 }) => {
            invert_blue_on_branch(sum, z, Branch::Holomorphic, seed).map_err(|e| match e {
                Error::NoConvergence { best_residual: b2 } => Error::NoConvergence {
                    best_residual: b1.min(b2),
                },
                other => other,
            })
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub rho: f64,
    /// Imaginary part of `(1/pi) d G / d conj(z)`; zero for an exact Green's function.
    pub imag: f64,
}

fn density_from_partials(gx: Complex64, gy: Complex64) -> DensityEstimate {
    let k = 1.0 / (2.0 * std::f64::consts::PI);
    DensityEstimate {
        rho: k * (gx.re - gy.im),
        imag: k * (gx.im + gy.re),
    }
}

/// `rho = (1/pi) dG/d(conj z)` by central differences on a 4-point stencil.
pub fn density_from_greens<F>(g: F, x: f64, y: f64, h: f64) -> Result<DensityEstimate>
where
    F: Fn(f64, f64) -> Result<Complex64>,
{
    let at = |px: f64, py: f64| {
        g(px, py).map_err(|e| Error::StencilFailure {
            x: px,
            y: py,
            reason: e.to_string(),
        })
    };
    let gx = (at(x + h, y)? - at(x - h, y)?) / (2.0 * h);
    let gy = (at(x, y + h)? - at(x, y - h)?) / (2.0 * h);
    Ok(density_from_partials(gx, gy))
}

/// Directional derivative of `f` at 0, falling back to a second-order one-sided
/// formula when one side of the stencil is unavailable.
fn robust_derivative<F>(f: F, f0: Complex64, h: f64) -> Option<Complex64>
where
    F: Fn(f64) -> Option<Complex64>,
{
    match (f(h), f(-h)) {
        (Some(p), Some(m)) => Some((p - m) / (2.0 * h)),
        (Some(p), None) => f(2.0 * h).map(|p2| (-3.0 * f0 + 4.0 * p - p2) / (2.0 * h)),
        (None, Some(m)) => f(-2.0 * h).map(|m2| (3.0 * f0 - 4.0 * m + m2) / (2.0 * h)),
        (None, None) => None,
    }
}

/// Density at `z` from the numerical Green's function, staying on the branch of
/// `center` so that the stencil never straddles the border.
pub fn engine_density(
    sum: &BlueSum,
    z: Complex64,
    center: &InversionResult,
    h: f64,
) -> Result<DensityEstimate> {
    let g_at = |w: Complex64| {
        invert_blue_on_branch(sum, w, center.branch, Some(center))
            .ok()
            .map(|r| r.greens)
    };
    let fail = |reason: &str| Error::StencilFailure {
        x: z.re,
        y: z.im,
        reason: reason.into(),
    };
    let gx = robust_derivative(|t| g_at(z + t), center.greens, h).ok_or_else(|| fail("x stencil"))?;
    let gy = robust_derivative(|t| g_at(z + Complex64::new(0.0, t)), center.greens, h)
        .ok_or_else(|| fail("y stencil"))?;
    Ok(density_from_partials(gx, gy))
}

/// Solves at `z` and returns the solution together with its density.
pub fn solve_with_density(
    sum: &BlueSum,
    z: Complex64,
    seed: Option<&InversionResult>,
    h: f64,
) -> Result<(InversionResult, DensityEstimate)> {
    let r = invert_blue_at(sum, z, seed)?;
    let d = engine_density(sum, z, &r, h)?;
    Ok((r, d))
}

/// A half-line `origin + t * direction`, `0 <= t <= t_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Complex64,
    pub direction: Complex64,
    pub t_max: f64,
}

impl Ray {
    /// Ray from the origin at angle `theta`.
    pub fn polar(theta: f64, t_max: f64) -> Self {
        Self {
            origin: Complex64::new(0.0, 0.0),
            direction: Complex64::from_polar(1.0, theta),
            t_max,
        }
    }

    pub fn at(&self, t: f64) -> Complex64 {
        self.origin + self.direction * t
    }
}

const SCAN_STEPS: usize = 256;

/// Distance along `ray` of the outermost point where the non-holomorphic
/// solution (`|b|^2 > tol`) ceases to exist.
pub fn borderline_scan(sum: &BlueSum, ray: &Ray, tol: f64) -> Result<f64> {
    let inside = |t: f64, seed: Option<&InversionResult>| {
        invert_blue_on_branch(sum, ray.at(t), Branch::NonHolomorphic, seed)
            .ok()
            .filter(|r| r.corr > tol)
    };
    let dt = ray.t_max / SCAN_STEPS as f64;
    let mut last_inside: Option<(f64, InversionResult)> = None;
    let mut first_outside_after: Option<f64> = None;
    let mut prev: Option<InversionResult> = None;
    for i in 0..=SCAN_STEPS {
        let t = i as f64 * dt;
        match inside(t, prev.as_ref()) {
            Some(r) => {
                prev = Some(r.clone());
                last_inside = Some((t, r));
                first_outside_after = None;
            }
            None => {
                prev = None;
                if last_inside.is_some() && first_outside_after.is_none() {
                    first_outside_after = Some(t);
                }
            }
        }
    }
    let (Some((mut lo, mut seed)), Some(mut hi)) = (last_inside, first_outside_after) else {
        return Err(Error::NoBracket);
    };
    while hi - lo > 1e-13 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        match inside(mid, Some(&seed)) {
            Some(r) => {
                lo = mid;
                seed = r;
            }
            None => hi = mid,
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solves on a rectangular grid, `out[iy][ix]`. Rows run in parallel; within a
/// row each point seeds the next, so results do not depend on thread count.
pub fn solve_grid(sum: &BlueSum, xs: &[f64], ys: &[f64]) -> Vec<Vec<Result<InversionResult>>> {
    ys.par_iter()
        .map(|&y| {
            let mut prev: Option<InversionResult> = None;
            xs.iter()
                .map(|&x| {
                    let r = invert_blue_at(sum, Complex64::new(x, y), prev.as_ref());
                    prev = r.as_ref().ok().cloned();
                    r
                })
                .collect()
        })
        .collect()
}

/// Grid of solutions and densities; see [`solve_grid`].
pub fn density_grid(
    sum: &BlueSum,
    xs: &[f64],
    ys: &[f64],
    h: f64,
) -> Vec<Vec<Result<(InversionResult, DensityEstimate)>>> {
    ys.par_iter()
        .map(|&y| {
            let mut prev: Option<InversionResult> = None;
            xs.iter()
                .map(|&x| {
                    let r = solve_with_density(sum, Complex64::new(x, y), prev.as_ref(), h);
                    prev = r.as_ref().ok().map(|(s, _)| s.clone());
                    r
                })
                .collect()
        })
        .collect()
}
