//! Complex and quaternion Green's functions of the building-block ensembles.
//!
//! Hermitian and unitary matrices satisfy `X^dagger = f(X)` for a rational `f`,
//! so their quaternion Green's function follows from the ordinary complex one
//! through a pair of scalar "gamma" coefficients. This module implements that
//! reduction for a generic unitary or Hermitian measure together with the
//! closed forms for CUE and GUE, and the Blue's-function relations used by the
//! addition engine.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quaternion::Quaternion;
use crate::solver::{self, NewtonOptions};

/// Tolerance for `|z| = 1` in [`g_cue`].
pub const UNIT_CIRCLE_TOL: f64 = 1e-12;

/// Below this `(|c|-1)^2 + |d|^2` the two unitary roots coincide.
const DEGENERATE_GAP: f64 = 1e-28;

/// Relative root separation below which gamma pairs switch to derivative form.
const GAMMA_DEGENERATE: f64 = 1e-8;

/// `|c|` below which the generic unitary formula is replaced by the c = 0 one.
/// The generic gamma pair loses about `eps/|c|` to cancellation while the
/// c = 0 formula is off by `O(|c|)`, so the crossover sits near `sqrt(eps)`.
const SMALL_C: f64 = 1e-8;

/// The complex Green's function `G(z) = <(1/N) Tr (z - X)^-1>` of some ensemble.
pub trait ComplexGreens: Send + Sync + fmt::Debug {
    fn eval(&self, z: Complex64) -> Result<Complex64>;

    /// `m_1 = <(1/N) Tr X>`.
    fn first_moment(&self) -> Complex64;

    /// `G'(z)`; central differences unless overridden.
    fn derivative(&self, z: Complex64) -> Result<Complex64> {
        let h = 1e-6 * z.norm().max(1.0);
        let hp = self.eval(z + h)?;
        let hm = self.eval(z - h)?;
        Ok((hp - hm) / (2.0 * h))
    }
}

/// Haar-distributed unitary matrices: eigenvalues uniform on the unit circle.
#[derive(Debug, Clone, Copy, Default)]
pub struct CueGreens;

/// GUE normalized so that the spectrum fills the semicircle on `[-2, 2]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GueGreens;

/// `1/z` outside the unit disc, `0` inside.
pub fn g_cue(z: Complex64) -> Result<Complex64> {
    let r = z.norm();
    if (r - 1.0).abs() < UNIT_CIRCLE_TOL {
        return Err(Error::OnUnitCircle);
    }
    Ok(if r > 1.0 { z.inv() } else { Complex64::new(0.0, 0.0) })
}

/// `(z - sqrt(z^2 - 4)) / 2` on the branch with `G(z) ~ 1/z` at infinity.
pub fn g_gue(z: Complex64) -> Complex64 {
    // sqrt(z-2)*sqrt(z+2) puts the cut exactly on [-2, 2]
    let root = (z - 2.0).sqrt() * (z + 2.0).sqrt();
    (z - root) * 0.5
}

fn g_gue_derivative(z: Complex64) -> Complex64 {
    let root = (z - 2.0).sqrt() * (z + 2.0).sqrt();
    (Complex64::new(1.0, 0.0) - z / root) * 0.5
}

impl ComplexGreens for CueGreens {
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        g_cue(z)
    }

    fn first_moment(&self) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    fn derivative(&self, z: Complex64) -> Result<Complex64> {
        let g = g_cue(z)?;
        Ok(-g * g)
    }
}

impl ComplexGreens for GueGreens {
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        Ok(g_gue(z))
    }

    fn first_moment(&self) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    fn derivative(&self, z: Complex64) -> Result<Complex64> {
        Ok(g_gue_derivative(z))
    }
}

/// The two scalar coefficients of a Hermitized quaternion Green's function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPair {
    pub gamma: Complex64,
    pub gamma_prime: Complex64,
}

/// Roots of `conj(c) u^2 - g u + c = 0` with `g = |c|^2 + |d|^2 + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitaryRoots {
    /// The root outside the unit circle.
    pub u1: Complex64,
    /// `1 / conj(u1)`.
    pub u2: Complex64,
    pub g: f64,
    /// `sqrt(g^2 - 4|c|^2)`, always real and non-negative.
    pub beta: f64,
}

/// `sqrt(g^2 - 4|c|^2)` computed as `sqrt(((|c|-1)^2 + |d|^2)(g + 2|c|))`.
fn unitary_beta(c: Complex64, d: Complex64) -> (f64, f64, f64) {
    let s = c.norm();
    let gap = (s - 1.0) * (s - 1.0) + d.norm_sqr();
    let g = c.norm_sqr() + d.norm_sqr() + 1.0;
    ((gap * (g + 2.0 * s)).sqrt(), g, gap)
}

/// Solves the unitary quadratic for a quaternion `Q = (c, d)`.
pub fn unitary_u_pair(q: &Quaternion) -> Result<UnitaryRoots> {
    let (c, d) = (q.a, q.b);
    if c.norm() == 0.0 {
        return Err(Error::ZeroC);
    }
    let (beta, g, gap) = unitary_beta(c, d);
    if gap < DEGENERATE_GAP {
        return Err(Error::DegenerateQuadratic);
    }
    let u1 = (g + beta) / (2.0 * c.conj());
    // u1 * u2 = c / conj(c); avoids cancellation in g - beta
    let u2 = c / (c.conj() * u1);
    Ok(UnitaryRoots { u1, u2, g, beta })
}

fn divided_differences(
    greens: &dyn ComplexGreens,
    p: Complex64,
    q: Complex64,
) -> Result<GammaPair> {
    let gp = greens.eval(p)?;
    if (p - q).norm() < GAMMA_DEGENERATE * p.norm().max(1.0) {
        let dg = greens.derivative(p)?;
        return Ok(GammaPair {
            gamma: gp + p * dg,
            gamma_prime: dg,
        });
    }
    let gq = greens.eval(q)?;
    Ok(GammaPair {
        gamma: (p * gp - q * gq) / (p - q),
        gamma_prime: (gp - gq) / (p - q),
    })
}

/// Two-variable gamma pair over `(u1, u2)`.
pub fn unitary_gamma(greens: &dyn ComplexGreens, roots: &UnitaryRoots) -> Result<GammaPair> {
    divided_differences(greens, roots.u1, roots.u2)
}

/// Single-variable gamma pair over `u = u1`, using the unitary reflection
/// `conj(G(z)) = (1/conj z)(1 - G(1/conj z)/conj z)`. Valid for `|u| > 1`.
pub fn unitary_gamma_reflected(greens: &dyn ComplexGreens, u: Complex64) -> Result<GammaPair> {
    let gu = greens.eval(u)?;
    let ugu = u * gu;
    let den = u - u.conj().inv();
    Ok(GammaPair {
        gamma: (ugu + ugu.conj() - 1.0) / den,
        gamma_prime: (gu + u.conj() * (ugu.conj() - 1.0)) / den,
    })
}

/// Hermitized quaternion Green's function of a unitary ensemble, returned in
/// quaternion coordinates: `a` is the 11-entry and the 21-entry is `i*b`.
pub fn unitary_quaternion_green(greens: &dyn ComplexGreens, q: &Quaternion) -> Result<Quaternion> {
    let (c, d) = (q.a, q.b);
    if c.norm() < SMALL_C {
        let s = -1.0 / (d.norm_sqr() + 1.0);
        return Ok(Quaternion::new(greens.first_moment().conj() * s, d * s));
    }
    let roots = match unitary_u_pair(q) {
        Err(Error::DegenerateQuadratic) => return Err(Error::OnUnitCircleSingularity),
        other => other?,
    };
    let gp = unitary_gamma(greens, &roots)?;
    let cc = c.conj();
    Ok(Quaternion::new(
        gp.gamma - gp.gamma_prime / cc,
        -d * gp.gamma / cc,
    ))
}

/// Closed-form quaternion Green's function of CUE.
///
/// `a = 1/(2c) + (|c|^2 - |d|^2 - 1)/(2 c beta)`, `b = -d / beta`,
/// `beta = sqrt(g^2 - 4|c|^2)`; at `c = 0` it is `(0, -d/(|d|^2 + 1))`.
pub fn cue_quaternion_green(q: &Quaternion) -> Result<Quaternion> {
    let (c, d) = (q.a, q.b);
    let (beta, _, gap) = unitary_beta(c, d);
    if gap < DEGENERATE_GAP {
        return Err(Error::OnUnitCircleSingularity);
    }
    let s = c.norm_sqr();
    let t = d.norm_sqr();
    if s == 0.0 {
        return Ok(Quaternion::new(Complex64::new(0.0, 0.0), -d / (t + 1.0)));
    }
    // beta + s - t - 1, rewritten when it cancels: beta^2 - (1+t-s)^2 = 4st
    let base = 1.0 + t - s;
    let num = if base > 0.0 {
        4.0 * s * t / (beta + base)
    } else {
        beta - base
    };
    Ok(Quaternion::new(num / (2.0 * c * beta), -d / beta))
}

/// Hermitian gamma pair over the eigenvalues `q, conj(q)` of `Q`.
pub fn hermitian_gamma(greens: &dyn ComplexGreens, q: &Quaternion) -> Result<GammaPair> {
    let (ev, ev_bar) = q.eigenvalues();
    divided_differences(greens, ev, ev_bar)
}

/// `G_H(Q) = gamma * 1 - gamma' * Q^dagger` for a Hermitian ensemble.
pub fn hermitian_quaternion_green(
    greens: &dyn ComplexGreens,
    q: &Quaternion,
) -> Result<Quaternion> {
    let gp = hermitian_gamma(greens, q)?;
    let adj = q.adjoint();
    Ok(Quaternion::new(
        gp.gamma - gp.gamma_prime * adj.a,
        -gp.gamma_prime * adj.b,
    ))
}

/// Blue's function of `p * GUE`: `p^2 Q + 1/Q`.
pub fn gue_quaternion_blue(q: &Quaternion, p: f64) -> Result<Quaternion> {
    Ok(q.scale(p * p) + q.inverse()?)
}

/// Residual `G_CUE(trial) - target` as four reals; zero iff `trial = B_CUE(target)`.
pub fn cue_blue_equations(target: &Quaternion, trial: &Quaternion) -> Result<[f64; 4]> {
    let g = cue_quaternion_green(trial)?;
    let r = g - *target;
    Ok([r.a.re, r.a.im, r.b.re, r.b.im])
}

/// Reduced CUE Blue equations in the real unknowns `alpha = a c` and
/// `beta = sqrt(g^2 - 4|c|^2)`, with `d = -b beta`:
///
/// ```text
/// beta = sqrt(g^2 - 4 alpha^2/|a|^2)
/// (2 alpha - 1) beta = alpha^2/|a|^2 - |b|^2 beta^2 - 1
/// g = alpha^2/|a|^2 + |b|^2 beta^2 + 1
/// ```
///
/// Returns the two residuals (first equation squared to stay polynomial).
pub fn cue_blue_reduced_residual(target: &Quaternion, alpha: f64, beta: f64) -> [f64; 2] {
    let a2 = target.a.norm_sqr();
    let b2 = target.b.norm_sqr();
    let s = alpha * alpha / a2;
    let g = s + b2 * beta * beta + 1.0;
    [
        beta * beta - (g * g - 4.0 * s),
        (2.0 * alpha - 1.0) * beta - (s - b2 * beta * beta - 1.0),
    ]
}

/// Blue's function of CUE on the `c = 0` branch: requires `a = conj(m_1) = 0`
/// and `0 < |b| <= 1/2`; then `d = -(1 + sqrt(1 - 4|b|^2)) / (2 conj(b))`.
pub fn cue_blue_at_zero_c(b: Complex64) -> Result<Quaternion> {
    let m = b.norm();
    if !(m > 0.0 && m <= 0.5) {
        return Err(Error::NoBlueAtZeroC { b_abs: m });
    }
    let disc = (1.0 - 4.0 * m * m).max(0.0).sqrt();
    let d = -(1.0 + disc) / (2.0 * b.conj());
    Ok(Quaternion::new(Complex64::new(0.0, 0.0), d))
}

/// Numerically inverts a quaternion Green's function: finds `W` with
/// `green(W) = target`, starting from `seed` (default `1/target`).
pub fn invert_quaternion_green<F>(
    green: F,
    target: &Quaternion,
    seed: Option<Quaternion>,
) -> Result<Quaternion>
where
    F: Fn(&Quaternion) -> Result<Quaternion>,
{
    let seed = match seed {
        Some(s) => s,
        None => target.inverse()?,
    };
    let x0 = [seed.a.re, seed.a.im, seed.b.re, seed.b.im];
    let out = solver::damped_newton(
        |x, r| {
            let w = Quaternion::new(Complex64::new(x[0], x[1]), Complex64::new(x[2], x[3]));
            let d = green(&w)? - *target;
            r.copy_from_slice(&[d.a.re, d.a.im, d.b.re, d.b.im]);
            Ok(())
        },
        &x0,
        4,
        &NewtonOptions::default(),
    );
    if !out.converged {
        return Err(Error::NoConvergence {
            best_residual: out.residual,
        });
    }
    let x = out.x;
    Ok(Quaternion::new(
        Complex64::new(x[0], x[1]),
        Complex64::new(x[2], x[3]),
    ))
}

/// Blue's function of CUE at `target`, by Newton inversion of [`cue_quaternion_green`].
pub fn cue_quaternion_blue(target: &Quaternion, seed: Option<Quaternion>) -> Result<Quaternion> {
    invert_quaternion_green(cue_quaternion_green, target, seed)
}
