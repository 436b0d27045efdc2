//! Dense complex linear algebra used throughout the crate.
//!
//! Propagators are computed from Hermitian eigendecompositions, never from
//! series expansions. Matrices whose imaginary parts are exactly zero take a
//! real-symmetric path, which is what keeps the large noise ensembles cheap.

use faer::{Mat, Side};

use crate::error::{Error, Result};

pub use faer::c64;

/// Dense complex matrix.
pub type CMat = Mat<c64>;

/// Fixed-size 3x3 complex matrix, row major.
pub type Mat3 = [[c64; 3]; 3];

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const I: c64 = c64 { re: 0.0, im: 1.0 };

/// `e^{-i x}`.
#[inline]
pub fn phase(x: f64) -> c64 {
    c64::new(x.cos(), -x.sin())
}

pub fn max_abs(m: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

/// `max |m - m^dagger|`.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..=j {
            best = best.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    best
}

/// `max |u^dagger u - 1|`.
pub fn unitarity_defect(u: &CMat) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    let mut best = 0.0f64;
    for a in 0..n {
        for b in a..n {
            let mut s = ZERO;
            for k in 0..n {
                s += u[(k, a)].conj() * u[(k, b)];
            }
            if a == b {
                s -= ONE;
            }
            best = best.max(s.norm());
        }
    }
    best
}

pub fn adjoint(m: &CMat) -> CMat {
    CMat::from_fn(m.ncols(), m.nrows(), |i, j| m[(j, i)].conj())
}

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    a * b
}

/// `[a, b] = ab - ba`.
pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    let ab = a * b;
    let ba = b * a;
    ab - ba
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            best = best.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    best
}

/// Smallest `max |a - e^{i chi} b|` over global phases, with the phase taken
/// from the largest overlap `tr(b^dagger a)`.
pub fn max_abs_diff_up_to_phase(a: &CMat, b: &CMat) -> f64 {
    let mut overlap = ZERO;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            overlap += b[(i, j)].conj() * a[(i, j)];
        }
    }
    let rot = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { ONE };
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            best = best.max((a[(i, j)] - rot * b[(i, j)]).norm());
        }
    }
    best
}

fn is_real(m: &CMat) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].im == 0.0))
}

enum Vectors {
    Real(Mat<f64>),
    Complex(CMat),
}

/// Eigendecomposition `H = V diag(values) V^dagger` of a Hermitian matrix.
pub struct HermitianEigen {
    values: Vec<f64>,
    vectors: Vectors,
}

impl HermitianEigen {
    pub fn new(h: &CMat) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::ContractViolation(format!(
                "eigendecomposition of a non-square {}x{} matrix",
                h.nrows(),
                h.ncols()
            )));
        }
        if is_real(h) {
            let re = Mat::<f64>::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)].re);
            let evd = re
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::Eigen(format!("{e:?}")))?;
            let s = evd.S().column_vector();
            let values = (0..h.nrows()).map(|k| s[k]).collect();
            Ok(Self { values, vectors: Vectors::Real(evd.U().to_owned()) })
        } else {
            let evd = h
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::Eigen(format!("{e:?}")))?;
            let s = evd.S().column_vector();
            let values = (0..h.nrows()).map(|k| s[k].re).collect();
            Ok(Self { values, vectors: Vectors::Complex(evd.U().to_owned()) })
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Eigenvalues in nondecreasing order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> CMat {
        match &self.vectors {
            Vectors::Real(v) => CMat::from_fn(v.nrows(), v.ncols(), |i, j| c64::new(v[(i, j)], 0.0)),
            Vectors::Complex(v) => v.clone(),
        }
    }

    /// `exp(-i H t)`.
    pub fn propagator(&self, t: f64) -> CMat {
        let n = self.dim();
        let v = self.vectors();
        let scaled = CMat::from_fn(n, n, |i, k| v[(i, k)] * phase(self.values[k] * t));
        let vh = adjoint(&v);
        &scaled * &vh
    }

    /// `exp(-i H t) psi` without forming the propagator.
    pub fn apply(&self, t: f64, psi: &[c64]) -> Vec<c64> {
        let n = self.dim();
        assert_eq!(psi.len(), n, "state dimension mismatch");
        let mut out = vec![ZERO; n];
        match &self.vectors {
            Vectors::Real(v) => {
                for k in 0..n {
                    let col = v.col(k);
                    let mut coef = ZERO;
                    for (i, p) in psi.iter().enumerate() {
                        coef += *p * col[i];
                    }
                    coef *= phase(self.values[k] * t);
                    for (i, o) in out.iter_mut().enumerate() {
                        *o += coef * col[i];
                    }
                }
            }
            Vectors::Complex(v) => {
                for k in 0..n {
                    let col = v.col(k);
                    let mut coef = ZERO;
                    for (i, p) in psi.iter().enumerate() {
                        coef += col[i].conj() * *p;
                    }
                    coef *= phase(self.values[k] * t);
                    for (i, o) in out.iter_mut().enumerate() {
                        *o += coef * col[i];
                    }
                }
            }
        }
        out
    }
}

/// `exp(-i H t)` for Hermitian `h`.
pub fn expm_hermitian(h: &CMat, t: f64) -> Result<CMat> {
    Ok(HermitianEigen::new(h)?.propagator(t))
}

pub fn basis_vector(n: usize, k: usize) -> Vec<c64> {
    let mut v = vec![ZERO; n];
    v[k] = ONE;
    v
}

pub fn inner(a: &[c64], b: &[c64]) -> c64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn mat3_to_cmat(m: &Mat3) -> CMat {
    CMat::from_fn(3, 3, |i, j| m[i][j])
}

pub fn cmat_to_mat3(m: &CMat) -> Mat3 {
    assert_eq!((m.nrows(), m.ncols()), (3, 3));
    let mut out = [[ZERO; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = m[(i, j)];
        }
    }
    out
}

pub fn mat3_identity() -> Mat3 {
    [[ONE, ZERO, ZERO], [ZERO, ONE, ZERO], [ZERO, ZERO, ONE]]
}

pub fn mul3(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub fn mul3_vec(a: &Mat3, v: &[c64; 3]) -> [c64; 3] {
    [
        a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
        a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
        a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
    ]
}

/// Cyclic Jacobi eigendecomposition of a 3x3 Hermitian matrix.
///
/// Returns eigenvalues and a unitary whose columns are the eigenvectors.
pub fn eigh3(h: &Mat3) -> ([f64; 3], Mat3) {
    let mut a = *h;
    let mut v = [[ONE, ZERO, ZERO], [ZERO, ONE, ZERO], [ZERO, ZERO, ONE]];
    let scale = h.iter().flatten().map(|x| x.norm()).fold(0.0f64, f64::max);
    if scale == 0.0 {
        return ([0.0; 3], v);
    }
    let floor = (scale * 1e-18).powi(2);
    for _sweep in 0..64 {
        let off = a[0][1].norm_sqr() + a[0][2].norm_sqr() + a[1][2].norm_sqr();
        if off <= floor {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[p][q];
            let r = apq.norm();
            if r <= scale * 1e-300 {
                continue;
            }
            // Strip the phase of a_pq, then a real Givens rotation zeroes it.
            let w = apq / r;
            let theta = 0.5 * (2.0 * r).atan2(a[q][q].re - a[p][p].re);
            let (s, c) = theta.sin_cos();
            // Columns p, q of the 3x3 unitary G = diag(1, w^*) R acting on (p, q).
            let gpp = c64::new(c, 0.0);
            let gpq = c64::new(s, 0.0);
            let gqp = -w.conj() * s;
            let gqq = w.conj() * c;
            // a <- G^dagger a G
            for row in a.iter_mut() {
                let (xp, xq) = (row[p], row[q]);
                row[p] = xp * gpp + xq * gqp;
                row[q] = xp * gpq + xq * gqq;
            }
            for k in 0..3 {
                let (xp, xq) = (a[p][k], a[q][k]);
                a[p][k] = gpp.conj() * xp + gqp.conj() * xq;
                a[q][k] = gpq.conj() * xp + gqq.conj() * xq;
            }
            a[p][q] = ZERO;
            a[q][p] = ZERO;
            a[p][p].im = 0.0;
            a[q][q].im = 0.0;
            for row in v.iter_mut() {
                let (xp, xq) = (row[p], row[q]);
                row[p] = xp * gpp + xq * gqp;
                row[q] = xp * gpq + xq * gqq;
            }
        }
    }
    ([a[0][0].re, a[1][1].re, a[2][2].re], v)
}

/// `exp(-i H t)` for a 3x3 Hermitian matrix via [`eigh3`].
pub fn expm3(h: &Mat3, t: f64) -> Mat3 {
    let (w, v) = eigh3(h);
    let e = [phase(w[0] * t), phase(w[1] * t), phase(w[2] * t)];
    let mut out = [[ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = v[i][0] * e[0] * v[j][0].conj()
                + v[i][1] * e[1] * v[j][1].conj()
                + v[i][2] * e[2] * v[j][2].conj();
        }
    }
    out
}
