//! Random matrix sampling: Haar unitaries, GUE, and realizations of the models.
//!
//! ## Stream protocol
//!
//! Every matrix draws from its own ChaCha20 stream. The 256-bit key holds the
//! 64-bit seed in little-endian order in its first 8 bytes (the rest is zero),
//! and the stream id is `sample * 2^16 + matrix`. Uniforms are
//! `((next_u64 >> 11) + 0.5) * 2^-53`, standard normals come in Box-Muller
//! pairs `(r cos t, r sin t)` with `r = sqrt(-2 ln u1)`, `t = 2 pi u2`, and
//! matrices are filled column by column, real part first. Matrix indices are
//! `j` for the `j`-th unitary of a CUE sum; `0` (unitary) and `1` (GUE) for
//! CUE + pGUE.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::spectra::linalg;

pub type CMatrix = DMatrix<Complex64>;

/// Gaussian stream keyed by `(seed, sample, matrix)`.
pub struct GaussianStream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64, sample: u64, matrix: u16) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream((sample << 16) | matrix as u64);
        Self { rng, spare: None }
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        let r = (-2.0 * self.uniform().ln()).sqrt();
        let t = 2.0 * std::f64::consts::PI * self.uniform();
        self.spare = Some(r * t.sin());
        r * t.cos()
    }

    /// Complex Gaussian with variance 1/2 in each of the real and imaginary parts.
    pub fn complex_normal(&mut self) -> Complex64 {
        let re = self.normal();
        let im = self.normal();
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }
}

/// Complex Ginibre matrix, `E|a_ij|^2 = 1`.
pub fn sample_ginibre(n: usize, stream: &mut GaussianStream) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            m[(i, j)] = stream.complex_normal();
        }
    }
    m
}

/// Haar unitary: QR of a Ginibre matrix with the phases of `diag(R)` moved into `Q`.
pub fn sample_cue(n: usize, stream: &mut GaussianStream) -> CMatrix {
    let qr = sample_ginibre(n, stream).qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    q
}

/// GUE with spectrum on `[-2, 2]`: `H = (A + A^dagger) / sqrt(2n)`.
pub fn sample_gue(n: usize, stream: &mut GaussianStream) -> CMatrix {
    let a = sample_ginibre(n, stream);
    let mut h = &a + a.adjoint();
    h /= Complex64::new((2.0 * n as f64).sqrt(), 0.0);
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub model: ModelSpec,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!("n must be at least 2, got {}", self.n)));
        }
        if self.samples < 1 {
            return Err(Error::InvalidConfig("samples must be at least 1".into()));
        }
        if self.samples as u64 >= 1 << 48 {
            return Err(Error::InvalidConfig("too many samples for the stream layout".into()));
        }
        if let ModelSpec::CueSum { m, .. } = self.model {
            if m > u16::MAX as usize {
                return Err(Error::InvalidConfig(format!("M = {m} exceeds the stream layout")));
            }
        }
        Ok(())
    }
}

/// Eigenvalues of all samples, ordered by sample and then by solver output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigCloud {
    pub config: EnsembleConfig,
    pub points: Vec<Complex64>,
}

impl EigCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Eigenvalues of each sample.
    pub fn per_sample(&self) -> impl Iterator<Item = &[Complex64]> {
        self.points.chunks(self.config.n)
    }
}

/// The matrix of one model realization.
pub fn realize_sample(model: &ModelSpec, n: usize, seed: u64, sample: u64) -> CMatrix {
    match *model {
        ModelSpec::CueSum { m, scale } => {
            let mut sum = CMatrix::zeros(n, n);
            for j in 0..m {
                sum += sample_cue(n, &mut GaussianStream::new(seed, sample, j as u16));
            }
            sum * Complex64::new(scale, 0.0)
        }
        ModelSpec::CueGue { p } => {
            let u = sample_cue(n, &mut GaussianStream::new(seed, sample, 0));
            let h = sample_gue(n, &mut GaussianStream::new(seed, sample, 1));
            u + h * Complex64::new(p, 0.0)
        }
    }
}

/// Samples and diagonalizes `config.samples` independent realizations.
pub fn realize_model(config: &EnsembleConfig) -> Result<EigCloud> {
    config.validate()?;
    let per: Vec<Vec<Complex64>> = (0..config.samples)
        .into_par_iter()
        .map(|s| {
            let a = realize_sample(&config.model, config.n, config.seed, s as u64);
            linalg::eig_general(&a).map_err(|e| Error::Sample {
                sample: s,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    Ok(EigCloud {
        config: *config,
        points: per.into_iter().flatten().collect(),
    })
}

/// The first `count` standard normals of stream `(seed, sample, matrix)`.
pub fn golden_normals(seed: u64, sample: u64, matrix: u16, count: usize) -> Vec<f64> {
    let mut s = GaussianStream::new(seed, sample, matrix);
    (0..count).map(|_| s.normal()).collect()
}
