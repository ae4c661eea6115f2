//! Closed-form solutions of the three solvable models: sums of free CUE
//! matrices (optionally rescaled) and CUE plus a rescaled GUE.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::{self, BlueSum, BlueTerm};
use crate::error::{Error, Result};
use crate::green::{g_cue, g_gue};

/// `|b|^2` threshold separating the support from its complement.
pub const INSIDE_TOL: f64 = 1e-10;
/// Real roots of the cubic have `|Im| < ROOT_IMAG_TOL`.
pub const ROOT_IMAG_TOL: f64 = 1e-10;
/// Stencil step used when the closed density formula degenerates.
pub const FALLBACK_FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// `scale * (U_1 + ... + U_M)` with free Haar unitaries.
    CueSum { m: usize, scale: f64 },
    /// `U + p H` with `U` Haar and `H` from GUE.
    CueGue { p: f64 },
}

impl ModelSpec {
    pub const CUE_PLUS_CUE: ModelSpec = ModelSpec::CueSum { m: 2, scale: 1.0 };

    /// `M` unitaries scaled by `1/sqrt(M)`, the finite-M free diffusion with unit radius.
    pub fn diffusion(m: usize) -> Self {
        ModelSpec::CueSum {
            m,
            scale: 1.0 / (m as f64).sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelSpec::CueSum { m, scale } => {
                if m < 2 {
                    return Err(Error::InvalidConfig(format!("CUE sum needs M >= 2, got {m}")));
                }
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(Error::InvalidConfig(format!("scale must be positive, got {scale}")));
                }
            }
            ModelSpec::CueGue { p } => {
                if !(p >= 0.0 && p.is_finite()) {
                    return Err(Error::InvalidConfig(format!("p must be non-negative, got {p}")));
                }
            }
        }
        Ok(())
    }

    pub fn border(&self) -> BorderSpec {
        match *self {
            ModelSpec::CueSum { m, scale } => BorderSpec::Circle {
                radius: scale * (m as f64).sqrt(),
            },
            ModelSpec::CueGue { p } => cue_gue_border(p),
        }
    }

    /// Analytic Green's function, correlator and density at `z`.
    pub fn solution(&self, z: Complex64) -> Result<SolutionPoint> {
        match *self {
            ModelSpec::CueSum { m, scale } => Ok(cue_sum_solution(m, scale, z)),
            ModelSpec::CueGue { p } => cue_gue_solution(z.re, z.im, p),
        }
    }

    pub fn density(&self, z: Complex64) -> Result<f64> {
        Ok(self.solution(z)?.density)
    }

    /// The same model as a sum of Blue's-function terms for the numerical engine.
    pub fn blue_sum(&self) -> BlueSum {
        let terms = match *self {
            ModelSpec::CueSum { m, scale } => vec![(BlueTerm::cue(scale), m)],
            ModelSpec::CueGue { p } => vec![(BlueTerm::cue(1.0), 1), (BlueTerm::gue(p), 1)],
        };
        BlueSum::new(terms).expect("model sums are non-empty")
    }

    /// Whether the density depends on `|z|` only.
    pub fn is_radial(&self) -> bool {
        matches!(self, ModelSpec::CueSum { .. })
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ModelSpec::CueSum { m: 2, scale: 1.0 } => write!(f, "cue+cue"),
            ModelSpec::CueSum { m, scale: 1.0 } => write!(f, "mcue:{m}"),
            ModelSpec::CueSum { m, scale } if scale == 1.0 / (m as f64).sqrt() => write!(f, "mcue:{m}@norm"),
            ModelSpec::CueSum { m, scale } => write!(f, "mcue:{m}@{scale:?}"),
            ModelSpec::CueGue { p } => write!(f, "cue+gue:{p:?}"),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    /// `cue+cue`, `mcue:M`, `mcue:M@scale`, `mcue:M@norm` (scale `1/sqrt(M)`), `cue+gue:p`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unrecognized model '{s}'"));
        let s = s.trim();
        let spec = if s.eq_ignore_ascii_case("cue+cue") {
            ModelSpec::CUE_PLUS_CUE
        } else if let Some(rest) = s.strip_prefix("mcue:") {
            let (m, scale) = match rest.split_once('@') {
                Some((m, sc)) => (m, Some(sc)),
                None => (rest, None),
            };
            let m: usize = m.trim().parse().map_err(|_| bad())?;
            let scale = match scale.map(str::trim) {
                None => 1.0,
                Some("norm") => 1.0 / (m as f64).sqrt(),
                Some(v) => v.parse().map_err(|_| bad())?,
            };
            ModelSpec::CueSum { m, scale }
        } else if let Some(p) = s.strip_prefix("cue+gue:") {
            ModelSpec::CueGue {
                p: p.trim().parse().map_err(|_| bad())?,
            }
        } else {
            return Err(bad());
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Where a point sits relative to the support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Inside,
    Outside,
    /// Inside the inner circle of the CUE+pGUE annulus (`p < 1`).
    Hole,
    Border,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionPoint {
    pub z: Complex64,
    /// Non-holomorphic Green's function inside the support, holomorphic outside.
    pub greens: Complex64,
    /// `-C(z) = |b|^2`.
    pub neg_corr: f64,
    pub density: f64,
    pub region: Region,
}

impl SolutionPoint {
    pub fn inside(&self) -> bool {
        self.region == Region::Inside
    }
}

/// Closed form for `scale * (U_1 + ... + U_M)`.
///
/// Inside `|z/scale| < sqrt(M)`:
/// `G = conj(z)(M-1)/(M^2-|z|^2)`, `-C = M(M-1)(M-|z|^2)/(M^2-|z|^2)^2`,
/// `rho = M^2(M-1)/(pi (M^2-|z|^2)^2)`, all in units of `scale`. Outside the
/// disc the holomorphic branch is exactly `G = 1/z`.
pub fn cue_sum_solution(m: usize, scale: f64, z: Complex64) -> SolutionPoint {
    let mf = m as f64;
    let w = z / scale;
    let r2 = w.norm_sqr();
    if r2 < mf {
        let den = mf * mf - r2;
        SolutionPoint {
            z,
            greens: w.conj() * (mf - 1.0) / den / scale,
            neg_corr: mf * (mf - 1.0) * (mf - r2) / (den * den) / (scale * scale),
            density: mf * mf * (mf - 1.0) / (PI * den * den) / (scale * scale),
            region: Region::Inside,
        }
    } else {
        SolutionPoint {
            z,
            greens: z.inv(),
            neg_corr: 0.0,
            density: 0.0,
            region: if r2 == mf { Region::Border } else { Region::Outside },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BorderSpec {
    Circle { radius: f64 },
    /// `a x^2 + b y^2 = 1`, with an optional inner circle.
    Ellipse { a: f64, b: f64, hole_radius: Option<f64> },
}

impl BorderSpec {
    /// 1 on the outer border, below 1 inside.
    pub fn outer_level(&self, z: Complex64) -> f64 {
        match *self {
            BorderSpec::Circle { radius } => z.norm_sqr() / (radius * radius),
            BorderSpec::Ellipse { a, b, .. } => a * z.re * z.re + b * z.im * z.im,
        }
    }

    /// Inside the outer border blown up by `factor`.
    pub fn within_outer(&self, z: Complex64, factor: f64) -> bool {
        self.outer_level(z) <= factor * factor
    }

    pub fn hole_radius(&self) -> Option<f64> {
        match *self {
            BorderSpec::Ellipse { hole_radius, .. } => hole_radius,
            BorderSpec::Circle { .. } => None,
        }
    }

    /// Inside the hole shrunk by `factor`; `false` when there is no hole.
    pub fn within_hole(&self, z: Complex64, factor: f64) -> bool {
        self.hole_radius().is_some_and(|h| z.norm() < factor * h)
    }

    /// Semi-axes of the outer border along x and y.
    pub fn semi_axes(&self) -> (f64, f64) {
        match *self {
            BorderSpec::Circle { radius } => (radius, radius),
            BorderSpec::Ellipse { a, b, .. } => (1.0 / a.sqrt(), 1.0 / b.sqrt()),
        }
    }

    /// Distance from the origin to the outer border at angle `theta`.
    pub fn outer_radius_at(&self, theta: f64) -> f64 {
        1.0 / self.outer_level(Complex64::from_polar(1.0, theta)).sqrt()
    }

    /// Polylines of `n` points tracing every border curve.
    pub fn curves(&self, n: usize) -> Vec<Vec<Complex64>> {
        let ring = |r: &dyn Fn(f64) -> f64| -> Vec<Complex64> {
            (0..=n)
                .map(|i| {
                    let t = 2.0 * PI * i as f64 / n as f64;
                    Complex64::from_polar(r(t), t)
                })
                .collect()
        };
        let mut out = vec![ring(&|t| self.outer_radius_at(t))];
        if let Some(h) = self.hole_radius().filter(|h| *h > 0.0) {
            out.push(ring(&|_| h));
        }
        out
    }
}

/// Ellipse `((1+p^2)/(1+2p^2)^2) x^2 + (1+p^2) y^2 = 1`, plus the circle
/// `|z|^2 = 1 - p^2` when `p <= 1`.
pub fn cue_gue_border(p: f64) -> BorderSpec {
    let p2 = p * p;
    BorderSpec::Ellipse {
        a: (1.0 + p2) / ((1.0 + 2.0 * p2) * (1.0 + 2.0 * p2)),
        b: 1.0 + p2,
        hole_radius: (p <= 1.0).then(|| (1.0 - p2).max(0.0).sqrt()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicSolution {
    /// `Re G`.
    pub omega: f64,
    /// `Im G`.
    pub omega_prime: f64,
    /// `a c`, with `c` the CUE Blue's component.
    pub alpha: f64,
    pub b_squared: f64,
    /// Every real root of the cubic that was examined.
    pub roots_considered: Vec<f64>,
    /// For anything but `Inside` the fields describe the holomorphic solution.
    pub branch: Region,
}

/// Coefficients `[c0, c1, c2, c3]` of the cubic in `omega`:
/// `(p^2-1)x + x^3 + x y^2 + p^2(1 - 2p^2 - 5x^2 - y^2) w + 8p^4 x w^2 - 4p^6 w^3`.
pub fn cue_gue_cubic(x: f64, y: f64, p: f64) -> [f64; 4] {
    let p2 = p * p;
    [
        (p2 - 1.0) * x + x * x * x + x * y * y,
        p2 * (1.0 - 2.0 * p2 - 5.0 * x * x - y * y),
        8.0 * p2 * p2 * x,
        -4.0 * p2 * p2 * p2,
    ]
}

fn horner(c: &[f64; 4], w: f64) -> (f64, f64) {
    let v = ((c[3] * w + c[2]) * w + c[1]) * w + c[0];
    let d = (3.0 * c[3] * w + 2.0 * c[2]) * w + c[1];
    (v, d)
}

/// Cubic residual relative to the size of its terms.
pub fn cubic_relative_residual(c: &[f64; 4], w: f64) -> f64 {
    let scale = c[0].abs() + (c[1] * w).abs() + (c[2] * w * w).abs() + (c[3] * w * w * w).abs();
    horner(c, w).0.abs() / scale.max(f64::MIN_POSITIVE)
}

/// Real roots by companion-matrix eigenvalues, each polished by Newton.
pub fn real_cubic_roots(c: &[f64; 4]) -> Vec<f64> {
    let companion = Matrix3::new(
        0.0, 0.0, -c[0] / c[3],
        1.0, 0.0, -c[1] / c[3],
        0.0, 1.0, -c[2] / c[3],
    );
    let mut roots: Vec<f64> = companion
        .complex_eigenvalues()
        .iter()
        .filter(|l| l.im.abs() < ROOT_IMAG_TOL * l.re.abs().max(1.0))
        .map(|l| {
            let mut w = l.re;
            for _ in 0..4 {
                let (v, d) = horner(c, w);
                if d == 0.0 {
                    break;
                }
                let next = w - v / d;
                if !next.is_finite() || (next - w).abs() > 1e-6 * w.abs().max(1.0) {
                    break;
                }
                w = next;
            }
            w
        })
        .collect();
    roots.sort_by(f64::total_cmp);
    roots
}

struct Candidate {
    omega: f64,
    omega_prime: f64,
    alpha: f64,
    b_squared: f64,
}

/// Evaluates the root-dependent unknowns for a root `omega` of the cubic.
fn candidate(x: f64, y: f64, p: f64, omega: f64, on_axis: bool) -> Result<Option<Candidate>> {
    let p2 = p * p;
    if on_axis && omega == 0.0 {
        // x = 0, omega = 0: with v = p^2 w' - y the CUE equations give v = p^2 y/(y^2 - 1)
        if (y * y - 1.0).abs() < 1e-14 {
            return Ok(None);
        }
        let v = p2 * y / (y * y - 1.0);
        let omega_prime = (v + y) / p2;
        let alpha = omega_prime * v;
        let t = v * v - 1.0 - p2 * (2.0 * alpha - 1.0);
        return Ok(Some(Candidate {
            omega,
            omega_prime,
            alpha,
            b_squared: t / (p2 * p2),
        }));
    }
    if omega == 0.0 {
        return Ok(None);
    }
    let den = 2.0 * p2 * omega - x;
    if den.abs() < 1e-12 {
        return Err(Error::DenominatorCollapse { value: den });
    }
    let omega_prime = y * omega / den;
    let alpha = x * omega - p2 * omega * omega + p2 * omega_prime * omega_prime - y * omega_prime;
    let bp4 = (x / omega - 3.0 * p2) * alpha + p2 - 1.0;
    Ok(Some(Candidate {
        omega,
        omega_prime,
        alpha,
        b_squared: bp4 / (p2 * p2),
    }))
}

/// Holomorphic Green's function of CUE + pGUE: `G_pH(z)` outside the ellipse,
/// `0` in the hole.
fn cue_gue_holomorphic(z: Complex64, p: f64) -> Complex64 {
    if p == 0.0 {
        return g_cue(z).unwrap_or_default();
    }
    let border = cue_gue_border(p);
    if border.within_hole(z, 1.0) {
        Complex64::new(0.0, 0.0)
    } else {
        g_gue(z / p) / p
    }
}

/// Solves the cubic at `(x, y)` and applies the branch rule. With `prev`, ties
/// between several admissible roots go to the one closest to `prev`.
pub fn cue_gue_omega_near(x: f64, y: f64, p: f64, prev: Option<f64>) -> Result<CubicSolution> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidConfig(format!("cubic needs p > 0, got {p}")));
    }
    let on_axis = x.abs() < 1e-10;
    let x = if on_axis { 0.0 } else { x };
    let coeffs = cue_gue_cubic(x, y, p);
    let mut roots = real_cubic_roots(&coeffs);
    if on_axis {
        // the cubic factors as w (c1 + c3 w^2); keep the exact zero root
        roots.retain(|w| w.abs() > 1e-12);
        roots.push(0.0);
        roots.sort_by(f64::total_cmp);
    }

    let mut collapse = None;
    let mut admissible = Vec::new();
    for &w in &roots {
        match candidate(x, y, p, w, on_axis) {
            Ok(Some(c)) if c.b_squared > INSIDE_TOL => admissible.push(c),
            Ok(_) => {}
            Err(e) => collapse = Some(e),
        }
    }

    let chosen = match admissible.len() {
        0 => None,
        1 => admissible.pop(),
        _ => match prev {
            Some(w0) => admissible
                .into_iter()
                .min_by(|a, b| (a.omega - w0).abs().total_cmp(&(b.omega - w0).abs())),
            None => return Err(Error::NoValidRoot { x, y }),
        },
    };

    if let Some(c) = chosen {
        return Ok(CubicSolution {
            omega: c.omega,
            omega_prime: c.omega_prime,
            alpha: c.alpha,
            b_squared: c.b_squared,
            roots_considered: roots,
            branch: Region::Inside,
        });
    }
    if let Some(e) = collapse {
        return Err(e);
    }

    let z = Complex64::new(x, y);
    let border = cue_gue_border(p);
    let on_outer = (border.outer_level(z) - 1.0).abs() < 1e-9;
    let on_hole = border.hole_radius().is_some_and(|h| (z.norm() - h).abs() < 1e-9);
    let branch = if on_outer || on_hole {
        Region::Border
    } else if border.within_hole(z, 1.0) {
        Region::Hole
    } else {
        Region::Outside
    };
    let g = cue_gue_holomorphic(z, p);
    Ok(CubicSolution {
        omega: g.re,
        omega_prime: g.im,
        alpha: (g * (z - p * p * g)).re,
        b_squared: 0.0,
        roots_considered: roots,
        branch,
    })
}

pub fn cue_gue_omega(x: f64, y: f64, p: f64) -> Result<CubicSolution> {
    cue_gue_omega_near(x, y, p, None)
}

/// The closed density formula in terms of `omega`; `None` when its denominator vanishes.
fn cue_gue_density_formula(x: f64, y: f64, p: f64, w: f64) -> Option<f64> {
    let p2 = p * p;
    let p4 = p2 * p2;
    let p6 = p4 * p2;
    let p8 = p4 * p4;
    let p10 = p8 * p2;
    let (x2, y2) = (x * x, y * y);
    let w2 = w * w;
    let num_terms = [
        x2 * (1.0 - p2) - 3.0 * x2 * x2 - 3.0 * x2 * y2,
        p2 * x * (-3.0 + 2.0 * p2 + 17.0 * x2 + 5.0 * y2) * w,
        2.0 * p4 * (1.0 - 17.0 * x2 - y2) * w2,
        28.0 * p6 * x * w2 * w,
        -8.0 * p8 * w2 * w2,
    ];
    let den_terms = [
        -p2 * (x2 * (2.0 * p2 - 1.0) + 5.0 * x2 * x2 + x2 * y2),
        -4.0 * p4 * x * (1.0 - 2.0 * p2 - 9.0 * x2 - y2) * w,
        -4.0 * p6 * (-1.0 + 2.0 * p2 + 24.0 * x2 + y2) * w2,
        112.0 * p8 * x * w2 * w,
        -48.0 * p10 * w2 * w2,
    ];
    let num: f64 = num_terms.iter().sum();
    let den: f64 = den_terms.iter().sum();
    let den_scale: f64 = den_terms.iter().map(|t| t.abs()).sum();
    if den_scale == 0.0 || den.abs() < 1e-12 * den_scale {
        return None;
    }
    Some(num / (2.0 * PI * den))
}

/// Density of CUE + pGUE by implicit differentiation of the cubic:
/// `rho = (w_x + w_y x y/D^2 - w/D) / (2 pi)` with `D = 2p^2 w - x`.
pub fn cue_gue_density_implicit(x: f64, y: f64, p: f64, w: f64) -> f64 {
    let p2 = p * p;
    let p4 = p2 * p2;
    let fw = p2 * (1.0 - 2.0 * p2 - 5.0 * x * x - y * y) + 16.0 * p4 * x * w - 12.0 * p4 * p2 * w * w;
    let wx = (1.0 - p2 - 3.0 * x * x - y * y + 10.0 * p2 * x * w - 8.0 * p4 * w * w) / fw;
    let wy = 2.0 * y * (p2 * w - x) / fw;
    let d = 2.0 * p2 * w - x;
    (wx + wy * x * y / (d * d) - w / d) / (2.0 * PI)
}

/// Closed-form Green's function, correlator and density of CUE + pGUE.
pub fn cue_gue_solution(x: f64, y: f64, p: f64) -> Result<SolutionPoint> {
    let z = Complex64::new(x, y);
    if p == 0.0 {
        return Ok(SolutionPoint {
            z,
            greens: g_cue(z)?,
            neg_corr: 0.0,
            density: 0.0,
            region: Region::Outside,
        });
    }
    let sol = cue_gue_omega(x, y, p)?;
    let greens = Complex64::new(sol.omega, sol.omega_prime);
    if sol.branch != Region::Inside {
        return Ok(SolutionPoint {
            z,
            greens,
            neg_corr: 0.0,
            density: 0.0,
            region: sol.branch,
        });
    }
    let density = match cue_gue_density_formula(x, y, p, sol.omega) {
        Some(rho) => rho,
        None => {
            let g = |px: f64, py: f64| {
                let s = cue_gue_omega_near(px, py, p, Some(sol.omega))?;
                Ok(Complex64::new(s.omega, s.omega_prime))
            };
            engine::density_from_greens(g, x, y, FALLBACK_FD_STEP)?.rho
        }
    };
    Ok(SolutionPoint {
        z,
        greens,
        neg_corr: sol.b_squared,
        density,
        region: Region::Inside,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{density_from_greens, invert_blue_at};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cue_cue_constants() {
        let s = cue_sum_solution(2, 1.0, c(0.0, 0.0));
        assert!((s.density - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((s.density - 0.0795775).abs() < 1e-7);
        assert_eq!(s.greens, c(0.0, 0.0));
        assert!((s.neg_corr - 0.25).abs() < 1e-15);

        let s = cue_sum_solution(2, 1.0, c(1.0, 0.0));
        assert!((s.greens - c(1.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!((s.neg_corr - 2.0 / 9.0).abs() < 1e-15);
        assert!((s.density - 4.0 / (9.0 * PI)).abs() < 1e-15);
        assert!((s.density - 0.141471).abs() < 1e-6);

        // density 4/(pi (4 - |z|^2)^2), border sqrt 2
        let z = c(0.6, -0.7);
        let s = cue_sum_solution(2, 1.0, z);
        let r2 = z.norm_sqr();
        assert!((s.density - 4.0 / (PI * (4.0 - r2).powi(2))).abs() < 1e-15);
        assert!(cue_sum_solution(2, 1.0, c(1.414, 0.0)).inside());
        assert!(!cue_sum_solution(2, 1.0, c(1.4143, 0.0)).inside());

        let s = cue_sum_solution(2, 1.0, c(2.0, 0.0));
        assert_eq!((s.greens, s.neg_corr, s.density), (c(0.5, 0.0), 0.0, 0.0));
    }

    #[test]
    fn diffusion_constants() {
        let s = cue_sum_solution(3, 1.0 / 3f64.sqrt(), c(0.0, 0.0));
        assert!((s.density - (1.0 - 1.0 / 3.0) / PI).abs() < 1e-14);
        assert!((s.density - 0.21221).abs() < 1e-5);
        assert_eq!(ModelSpec::diffusion(3).border(), BorderSpec::Circle { radius: 1.0 });

        let mut last = 0.0;
        for m in [2, 3, 5, 10, 100, 1000] {
            let s = cue_sum_solution(m, 1.0 / (m as f64).sqrt(), c(0.0, 0.0));
            assert!(s.density > last);
            last = s.density;
        }
        assert!(last < 1.0 / PI);

        for m in [3usize, 5, 10] {
            let mf = m as f64;
            for i in 0..100 {
                let r = 0.99 * i as f64 / 100.0;
                let z = Complex64::from_polar(r, 0.37 * i as f64);
                let s = cue_sum_solution(m, 1.0 / mf.sqrt(), z);
                let want = (1.0 - 1.0 / mf) / (PI * (1.0 - r * r / mf).powi(2));
                assert!((s.density - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scaling_coherence() {
        let z = c(0.3, 0.5);
        for (m, k) in [(2, 1.7), (4, 0.3), (7, 2.5)] {
            let base = cue_sum_solution(m, 1.0, z);
            let scaled = cue_sum_solution(m, k, z * k);
            assert!((scaled.greens - base.greens / k).norm() < 1e-14);
            assert!((scaled.neg_corr - base.neg_corr / (k * k)).abs() < 1e-14);
            assert!((scaled.density - base.density / (k * k)).abs() < 1e-14);
        }
    }

    #[test]
    fn ellipse_constants() {
        let BorderSpec::Ellipse { a, b, hole_radius } = cue_gue_border(0.5) else {
            panic!()
        };
        assert!((a - 1.25 / 2.25).abs() < 1e-15);
        assert_eq!(b, 1.25);
        let (sx, sy) = cue_gue_border(0.5).semi_axes();
        assert!((sx - 1.34164).abs() < 1e-5 && (sy - 0.89443).abs() < 1e-5);
        assert!((hole_radius.unwrap() - 0.75f64.sqrt()).abs() < 1e-15);

        let border = cue_gue_border(1.0);
        let (sx, sy) = border.semi_axes();
        assert!((sx - 3.0 / 2f64.sqrt()).abs() < 1e-14);
        assert!((sy - 1.0 / 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(border.hole_radius(), Some(0.0));

        assert_eq!(
            cue_gue_border(0.0),
            BorderSpec::Ellipse { a: 1.0, b: 1.0, hole_radius: Some(1.0) }
        );
        assert_eq!(cue_gue_border(2.0).hole_radius(), None);
    }

    #[test]
    fn border_omega_solves_cubic() {
        for &p in &[0.5, 0.75, 1.0, 2.0] {
            let border = cue_gue_border(p);
            for i in 0..100 {
                let t = 2.0 * PI * (i as f64 + 0.5) / 100.0;
                let z = Complex64::from_polar(border.outer_radius_at(t), t);
                let w = z.re / (1.0 + 2.0 * p * p);
                let coeffs = cue_gue_cubic(z.re, z.im, p);
                assert!(horner(&coeffs, w).0.abs() < 1e-10, "p={p} t={t}");
                let cand = candidate(z.re, z.im, p, w, false).unwrap().unwrap();
                assert!(cand.b_squared.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn vanishing_p_collapses_to_circle() {
        // at p -> 0 the cubic reduces to x(x^2 + y^2 - 1)
        let c0 = cue_gue_cubic(0.6, 0.8, 1e-9);
        assert!(c0[0].abs() < 1e-15);
        assert!(cue_gue_cubic(0.3, 0.2, 0.0)[1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn interior_point_on_real_axis() {
        let (x, y, p) = (1.2, 0.0, 0.5);
        let sol = cue_gue_omega(x, y, p).unwrap();
        assert_eq!(sol.branch, Region::Inside);
        assert!(sol.b_squared > 0.0);
        // independent oracle: Cardano on the depressed cubic (one real root here)
        let coeffs = cue_gue_cubic(x, y, p);
        let (a2, a1, a0) = (coeffs[2] / coeffs[3], coeffs[1] / coeffs[3], coeffs[0] / coeffs[3]);
        let pp = a1 - a2 * a2 / 3.0;
        let qq = 2.0 * a2.powi(3) / 27.0 - a2 * a1 / 3.0 + a0;
        let disc = (qq / 2.0).powi(2) + (pp / 3.0).powi(3);
        assert!(disc > 0.0);
        let t = (-qq / 2.0 + disc.sqrt()).cbrt() + (-qq / 2.0 - disc.sqrt()).cbrt();
        assert_eq!(sol.roots_considered.len(), 1);
        assert!((sol.omega - (t - a2 / 3.0)).abs() < 1e-12);
        assert!(cubic_relative_residual(&coeffs, sol.omega) < 1e-12);
        assert!((sol.omega_prime * (2.0 * p * p * sol.omega - x) - y * sol.omega).abs() < 1e-15);
    }

    #[test]
    fn density_formula_matches_implicit_and_finite_difference() {
        for &(x, y, p) in &[(1.2, 0.0, 0.5), (0.6, 0.5, 0.75), (1.0, 0.2, 2.0), (0.5, -0.3, 1.0)] {
            let s = cue_gue_solution(x, y, p).unwrap();
            assert!(s.inside());
            let w = s.greens.re;
            assert!((s.density - cue_gue_density_implicit(x, y, p, w)).abs() < 1e-12);
            let g = |px: f64, py: f64| {
                let s = cue_gue_omega_near(px, py, p, Some(w))?;
                Ok(Complex64::new(s.omega, s.omega_prime))
            };
            let fd = density_from_greens(g, x, y, 1e-5).unwrap();
            assert!((fd.rho - s.density).abs() < 1e-6, "{x} {y} {p}");
            assert!(fd.imag.abs() < 1e-6);
        }
    }

    #[test]
    fn density_parities() {
        for &p in &[0.5, 0.75, 2.0] {
            for &(x, y) in &[(0.9, 0.3), (1.1, 0.1), (0.2, 0.6)] {
                let base = cue_gue_solution(x, y, p).unwrap();
                for (sx, sy) in [(1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    let other = cue_gue_solution(sx * x, sy * y, p).unwrap();
                    assert_eq!(base.region, other.region);
                    assert!((base.density - other.density).abs() < 1e-12);
                }
            }
        }
        assert_eq!(cue_gue_solution(5.0, 0.0, 2.0).unwrap().density, 0.0);
    }

    #[test]
    fn imaginary_axis_is_continuous() {
        for &(y, p) in &[(0.3, 2.0), (0.4, 1.0), (0.9, 0.5)] {
            let on = cue_gue_solution(0.0, y, p).unwrap();
            let near = cue_gue_solution(1e-7, y, p).unwrap();
            assert_eq!(on.region, near.region);
            assert!((on.greens - near.greens).norm() < 1e-6);
            assert!((on.neg_corr - near.neg_corr).abs() < 1e-6);
            assert!((on.density - near.density).abs() < 1e-5);
        }
    }

    #[test]
    fn hole_boundary_limit() {
        // |b|^2 vanishes linearly in the distance to the inner circle
        let p: f64 = 0.5;
        let h = (1.0 - p * p).sqrt();
        for i in 0..8 {
            let t = 0.3 + i as f64 * 0.7;
            let at = |d: f64| {
                let z = Complex64::from_polar(h + d, t);
                cue_gue_solution(z.re, z.im, p).unwrap().neg_corr
            };
            let (b3, b5) = (at(1e-3), at(1e-5));
            assert!(b3 > 0.0 && b5 > 0.0);
            assert!(b5 < 1e-3, "{b5}");
            let (s3, s5) = (b3 / 1e-3, b5 / 1e-5);
            assert!((s3 - s5).abs() < 0.05 * s5, "{s3} {s5}");
        }
        let s = cue_gue_solution(0.1, 0.1, p).unwrap();
        assert_eq!(s.region, Region::Hole);
        assert_eq!(s.greens, c(0.0, 0.0));
    }

    #[test]
    fn closed_forms_agree_with_engine() {
        let model = ModelSpec::CueGue { p: 2.0 };
        let s = model.solution(c(1.0, 0.0)).unwrap();
        let r = invert_blue_at(&model.blue_sum(), c(1.0, 0.0), None).unwrap();
        assert!((s.greens - r.greens).norm() < 1e-8);
        assert!((s.neg_corr - r.corr).abs() < 1e-8);

        let model = ModelSpec::diffusion(5);
        let z = c(0.3, -0.4);
        let s = model.solution(z).unwrap();
        let r = invert_blue_at(&model.blue_sum(), z, None).unwrap();
        assert!((s.greens - r.greens).norm() < 1e-8, "{s:?} {r:?}");
        assert!((s.neg_corr - r.corr).abs() < 1e-8);

        // outside the p = 0.5 ellipse and in its hole
        let model = ModelSpec::CueGue { p: 0.5 };
        for z in [c(1.6, 0.3), c(0.2, -0.3)] {
            let s = model.solution(z).unwrap();
            let r = invert_blue_at(&model.blue_sum(), z, None).unwrap();
            assert!((s.greens - r.greens).norm() < 1e-8, "{z}");
            assert!(r.corr < 1e-8);
        }
    }

    #[test]
    fn grammar_round_trip() {
        for (text, spec) in [
            ("cue+cue", ModelSpec::CUE_PLUS_CUE),
            ("mcue:2", ModelSpec::CUE_PLUS_CUE),
            ("mcue:5", ModelSpec::CueSum { m: 5, scale: 1.0 }),
            ("mcue:4@0.5", ModelSpec::CueSum { m: 4, scale: 0.5 }),
            ("mcue:10@norm", ModelSpec::diffusion(10)),
            ("cue+gue:0.75", ModelSpec::CueGue { p: 0.75 }),
        ] {
            let parsed: ModelSpec = text.parse().unwrap();
            assert_eq!(parsed, spec);
            assert_eq!(parsed.to_string().parse::<ModelSpec>().unwrap(), spec);
        }
        for bad in ["", "cue", "mcue:1", "mcue:x", "mcue:3@-1", "cue+gue:-0.5", "cue+gue:"] {
            assert!(bad.parse::<ModelSpec>().is_err(), "{bad}");
        }
    }
}
