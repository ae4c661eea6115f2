//! Dense complex eigen-decomposition: Householder reduction to Hessenberg form,
//! single-shift QR iteration to the complex Schur form `A = Z T Z^H`, and
//! eigenvectors by back-substitution on `T`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Iterations allowed per eigenvalue before giving up.
const ITERS_PER_EIGENVALUE: usize = 60;

/// Column-major square matrix with cheap unchecked-style indexing.
#[derive(Clone)]
struct Mat {
    n: usize,
    d: Vec<C>,
}

impl Mat {
    fn from_dmatrix(a: &DMatrix<C>) -> Self {
        Self {
            n: a.nrows(),
            d: a.as_slice().to_vec(),
        }
    }

    fn identity(n: usize) -> Self {
        let mut d = vec![ZERO; n * n];
        for i in 0..n {
            d[i * n + i] = ONE;
        }
        Self { n, d }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> C {
        self.d[j * self.n + i]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: C) {
        self.d[j * self.n + i] = v;
    }

    fn to_dmatrix(&self) -> DMatrix<C> {
        DMatrix::from_column_slice(self.n, self.n, &self.d)
    }
}

/// `A = Z T Z^H` with `Z` unitary and `T` upper triangular.
#[derive(Debug, Clone)]
pub struct SchurForm {
    pub z: DMatrix<C>,
    pub t: DMatrix<C>,
}

/// Reduces `a` to upper Hessenberg form in place and accumulates the unitary factor in `z`.
fn hessenberg(a: &mut Mat, z: &mut Mat) {
    let n = a.n;
    let mut v = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let norm: f64 = (k + 1..n).map(|i| a.at(i, k).norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a.at(k + 1, k);
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let alpha = -phase * norm;
        // v = x - alpha e1, H = I - 2 v v^H / (v^H v)
        for i in k + 1..n {
            v[i] = a.at(i, k);
        }
        v[k + 1] -= alpha;
        let vnorm2: f64 = (k + 1..n).map(|i| v[i].norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let tau = 2.0 / vnorm2;
        // A <- H A on rows k+1.., columns k..
        for j in k..n {
            let mut s = ZERO;
            for i in k + 1..n {
                s += v[i].conj() * a.at(i, j);
            }
            let s = s * tau;
            for i in k + 1..n {
                let val = a.at(i, j) - v[i] * s;
                a.set(i, j, val);
            }
        }
        // A <- A H on all rows, columns k+1..
        for i in 0..n {
            let mut s = ZERO;
            for j in k + 1..n {
                s += a.at(i, j) * v[j];
            }
            let s = s * tau;
            for j in k + 1..n {
                let val = a.at(i, j) - s * v[j].conj();
                a.set(i, j, val);
            }
        }
        // Z <- Z H
        for i in 0..n {
            let mut s = ZERO;
            for j in k + 1..n {
                s += z.at(i, j) * v[j];
            }
            let s = s * tau;
            for j in k + 1..n {
                let val = z.at(i, j) - s * v[j].conj();
                z.set(i, j, val);
            }
        }
        a.set(k + 1, k, alpha);
        for i in k + 2..n {
            a.set(i, k, ZERO);
        }
    }
}

/// Eigenvalue of `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: C, b: C, c: C, d: C) -> C {
    let delta = (a - d) * 0.5;
    let bc = b * c;
    let root = (delta * delta + bc).sqrt();
    let den = if (delta + root).norm() >= (delta - root).norm() {
        delta + root
    } else {
        delta - root
    };
    if den.norm() == 0.0 {
        d
    } else {
        d - bc / den
    }
}

/// Rotation `[[c, s], [-conj(s), c]]` mapping `(x, y)` to `(r, 0)`.
fn givens(x: C, y: C) -> (f64, C) {
    let ax = x.norm();
    let r = ax.hypot(y.norm());
    if r == 0.0 {
        return (1.0, ZERO);
    }
    if ax == 0.0 {
        return (0.0, y.conj() / y.norm());
    }
    let alpha = x / ax;
    (ax / r, alpha * y.conj() / r)
}

fn rotate_rows(h: &mut Mat, k: usize, c: f64, s: C, from: usize) {
    for j in from..h.n {
        let u = h.at(k, j);
        let w = h.at(k + 1, j);
        h.set(k, j, u * c + s * w);
        h.set(k + 1, j, -s.conj() * u + w * c);
    }
}

fn rotate_cols(h: &mut Mat, k: usize, c: f64, s: C, to: usize) {
    let n = h.n;
    let (left, right) = h.d.split_at_mut((k + 1) * n);
    let ck = &mut left[k * n..k * n + to];
    let ck1 = &mut right[..to];
    for i in 0..to {
        let u = ck[i];
        let w = ck1[i];
        ck[i] = u * c + s.conj() * w;
        ck1[i] = -s * u + w * c;
    }
}

/// Complex Schur decomposition.
pub fn schur(a: &DMatrix<C>) -> Result<SchurForm> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidConfig("eigen-decomposition needs a square matrix".into()));
    }
    if !a.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidConfig("matrix has non-finite entries".into()));
    }
    let n = a.nrows();
    let mut h = Mat::from_dmatrix(a);
    let mut z = Mat::identity(n);
    if n <= 1 {
        return Ok(SchurForm {
            z: z.to_dmatrix(),
            t: h.to_dmatrix(),
        });
    }
    hessenberg(&mut h, &mut z);

    let scale = h.d.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let budget = ITERS_PER_EIGENVALUE * n;
    while hi > 0 {
        // deflation point
        let mut l = hi;
        while l > 0 {
            let sub = h.at(l, l - 1).norm();
            let diag = h.at(l, l).norm() + h.at(l - 1, l - 1).norm();
            let reference = if diag == 0.0 { scale } else { diag };
            if sub <= f64::EPSILON * reference {
                h.set(l, l - 1, ZERO);
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > budget {
            return Err(Error::ConvergenceFailure { iterations: total });
        }

        let mu = if iter % 11 == 10 {
            // exceptional shift to break cycles
            h.at(hi, hi) + C::new(0.75 * h.at(hi, hi - 1).norm(), 0.0)
        } else {
            wilkinson_shift(
                h.at(hi - 1, hi - 1),
                h.at(hi - 1, hi),
                h.at(hi, hi - 1),
                h.at(hi, hi),
            )
        };

        let mut x = h.at(l, l) - mu;
        let mut y = h.at(l + 1, l);
        for k in l..hi {
            let (c, s) = givens(x, y);
            let from = if k > l { k - 1 } else { l };
            rotate_rows(&mut h, k, c, s, from);
            let to = (k + 3).min(hi + 1);
            rotate_cols(&mut h, k, c, s, to);
            rotate_cols(&mut z, k, c, s, n);
            if k > l {
                h.set(k + 1, k - 1, ZERO);
            }
            if k + 1 < hi {
                x = h.at(k + 1, k);
                y = h.at(k + 2, k);
            }
        }
    }

    // clear round-off below the diagonal
    for j in 0..n {
        for i in j + 1..n {
            h.set(i, j, ZERO);
        }
    }
    Ok(SchurForm {
        z: z.to_dmatrix(),
        t: h.to_dmatrix(),
    })
}

/// Upper-triangular `Y` with unit diagonal whose columns are eigenvectors of `t`.
pub fn triangular_eigenvectors(t: &DMatrix<C>) -> DMatrix<C> {
    let n = t.nrows();
    let tnorm = t.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let small = (f64::EPSILON * tnorm).max(f64::MIN_POSITIVE);
    let mut y = DMatrix::<C>::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = ONE;
        for i in (0..k).rev() {
            let mut s = ZERO;
            for j in i + 1..=k {
                s += t[(i, j)] * y[(j, k)];
            }
            let mut den = t[(i, i)] - lambda;
            if den.norm() < small {
                den = C::new(small, 0.0);
            }
            y[(i, k)] = -s / den;
        }
    }
    y
}

fn pair_residual(a: &DMatrix<C>, lambda: C, v: &nalgebra::DVector<C>) -> f64 {
    let r = a * v - v * lambda;
    r.norm() / v.norm()
}

/// Checks `|A v - lambda v| <= 1e-8 |A|` on five eigenpairs spread over the spectrum.
fn verify_pairs(a: &DMatrix<C>, form: &SchurForm, y: Option<&DMatrix<C>>) -> Result<()> {
    let n = a.nrows();
    let anorm = a.norm().max(f64::MIN_POSITIVE);
    let owned;
    let y = match y {
        Some(y) => y,
        None => {
            owned = triangular_eigenvectors(&form.t);
            &owned
        }
    };
    for k in (0..5).map(|i| i * n / 5).filter(|&k| k < n) {
        let v = &form.z * y.column(k);
        let res = pair_residual(a, form.t[(k, k)], &v);
        if !(res <= 1e-8 * anorm) {
            return Err(Error::ConvergenceFailure { iterations: 0 });
        }
    }
    Ok(())
}

/// Eigenvalues of a general complex matrix, in Schur-diagonal order.
pub fn eig_general(a: &DMatrix<C>) -> Result<Vec<C>> {
    let form = schur(a)?;
    verify_pairs(a, &form, None)?;
    Ok((0..a.nrows()).map(|k| form.t[(k, k)]).collect())
}

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<C>,
    /// Unit-norm right eigenvectors as columns.
    pub vectors: DMatrix<C>,
    /// Schur form the vectors were built from.
    pub schur: SchurForm,
    /// Triangular eigenvector matrix of `T` (unit diagonal).
    pub triangular: DMatrix<C>,
}

pub fn eig_decompose(a: &DMatrix<C>) -> Result<EigenDecomposition> {
    let form = schur(a)?;
    let y = triangular_eigenvectors(&form.t);
    verify_pairs(a, &form, Some(&y))?;
    let mut vectors = &form.z * &y;
    for mut col in vectors.column_iter_mut() {
        let nrm = col.norm();
        col /= C::new(nrm, 0.0);
    }
    Ok(EigenDecomposition {
        values: (0..a.nrows()).map(|k| form.t[(k, k)]).collect(),
        vectors,
        schur: form,
        triangular: y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn sorted(mut v: Vec<C>) -> Vec<C> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn diagonal_matrix() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 2.0), c(-3.0, 0.0)]));
        let ev = sorted(eig_general(&a).unwrap());
        assert_eq!(ev, vec![c(-3.0, 0.0), c(0.0, 2.0), c(1.0, 0.0)]);
    }

    #[test]
    fn rotation_generator() {
        let a = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)]);
        let ev = sorted(eig_general(&a).unwrap());
        assert!((ev[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((ev[1] - c(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn companion_of_cube_roots() {
        // t^3 - 1
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0),
                c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
                c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0),
            ],
        );
        let ev = eig_general(&a).unwrap();
        for k in 0..3 {
            let root = C::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 3.0);
            assert!(ev.iter().any(|l| (l - root).norm() < 1e-12), "{root}");
        }
    }

    #[test]
    fn schur_reconstructs_random_matrix() {
        let n = 40;
        let a = DMatrix::from_fn(n, n, |i, j| {
            let t = (i * 7 + j * 13) as f64;
            c((t * 0.37).sin(), (t * 0.91).cos())
        });
        let form = schur(&a).unwrap();
        let back = &form.z * &form.t * form.z.adjoint();
        assert!((back - &a).norm() < 1e-11 * a.norm());
        let zz = &form.z * form.z.adjoint();
        assert!((zz - DMatrix::<C>::identity(n, n)).norm() < 1e-12);
        for j in 0..n {
            for i in j + 1..n {
                assert_eq!(form.t[(i, j)], ZERO);
            }
        }
        let d = eig_decompose(&a).unwrap();
        for k in 0..n {
            let v = d.vectors.column(k).into_owned();
            assert!(pair_residual(&a, d.values[k], &v) < 1e-10 * a.norm());
        }
    }

    #[test]
    fn rejects_non_finite_input() {
        let a = DMatrix::from_element(3, 3, c(f64::NAN, 0.0));
        assert!(eig_general(&a).is_err());
    }
}
