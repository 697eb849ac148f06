//! Dense complex matrices for qubit and two-qubit operators.
//!
//! Everything here is sized for dimension 2 and 4 (and up to 8). Storage is
//! row-major. The Hermitian eigensolver is a cyclic complex Jacobi method,
//! which is exact to roundoff at these sizes and needs no LAPACK.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Elementwise tolerance for treating a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Negative eigenvalues above `-PSD_CLAMP` are treated as zero by [`psd_sqrt`].
pub const PSD_CLAMP: f64 = 1e-10;

const JACOBI_OFF_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub(crate) fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Dense square complex matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::default(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = cr(1.0);
        }
        m
    }

    /// Builds a matrix from row-major entries. Panics if `entries.len()` is
    /// not a perfect square.
    pub fn from_vec(dim: usize, entries: Vec<Complex64>) -> Self {
        assert_eq!(entries.len(), dim * dim, "entries length must be dim^2");
        Self { dim, data: entries }
    }

    pub fn from_real(dim: usize, entries: &[f64]) -> Self {
        Self::from_vec(dim, entries.iter().map(|&r| cr(r)).collect())
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = cr(d);
        }
        m
    }

    /// `|psi><psi|` for a (not necessarily normalized) ket.
    pub fn projector(ket: &[Complex64]) -> Self {
        let n = ket.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = ket[i] * ket[j].conj();
            }
        }
        m
    }

    pub fn pauli_x() -> Self {
        Self::from_real(2, &[0.0, 1.0, 1.0, 0.0])
    }

    pub fn pauli_y() -> Self {
        Self::from_vec(2, vec![cr(0.0), c(0.0, -1.0), c(0.0, 1.0), cr(0.0)])
    }

    pub fn pauli_z() -> Self {
        Self::from_real(2, &[1.0, 0.0, 0.0, -1.0])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Real part of `Tr(self * other)` without forming the product.
    pub fn trace_product_re(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                let b = other.data[k * n + i];
                acc += a.re * b.re - a.im * b.im;
            }
        }
        acc
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, other: &Self, s: f64) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest elementwise deviation from Hermiticity.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol * self.max_abs().max(1.0)
    }

    /// `(A + A^dag) / 2`
    pub fn hermitian_part(&self) -> Self {
        let n = self.dim;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
            }
        }
        m
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    fn check_hermitian(&self) -> Result<()> {
        let deviation = self.hermitian_deviation();
        if deviation > HERMITIAN_TOL * self.max_abs().max(1.0) {
            Err(Error::NotHermitian { deviation })
        } else {
            Ok(())
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale(-1.0)
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!(self.dim, rhs.dim);
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

/// Kronecker product: the `(i, j)` block of the result is `a[i][j] * b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (na, nb) = (a.dim, b.dim);
    let n = na * nb;
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..na {
        for j in 0..na {
            let aij = a[(i, j)];
            for k in 0..nb {
                for l in 0..nb {
                    out[(i * nb + k, j * nb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of two kets.
pub fn kron_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| x * y))
        .collect()
}

fn check_two_qubit(a: &ComplexMatrix) -> Result<()> {
    if a.dim != 4 {
        return Err(Error::WrongDimension {
            expected: 4,
            actual: a.dim,
        });
    }
    Ok(())
}

/// Transpose of the second tensor factor of an operator on 2 x 2.
pub fn partial_transpose(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_two_qubit(a)?;
    let mut out = ComplexMatrix::zeros(4);
    for i1 in 0..2 {
        for i2 in 0..2 {
            for j1 in 0..2 {
                for j2 in 0..2 {
                    out[(2 * i1 + j2, 2 * j1 + i2)] = a[(2 * i1 + i2, 2 * j1 + j2)];
                }
            }
        }
    }
    Ok(out)
}

/// Trace over the second qubit.
pub fn partial_trace_b(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_two_qubit(a)?;
    let mut out = ComplexMatrix::zeros(2);
    for i in 0..2 {
        for j in 0..2 {
            out[(i, j)] = a[(2 * i, 2 * j)] + a[(2 * i + 1, 2 * j + 1)];
        }
    }
    Ok(out)
}

/// Trace over the first qubit.
pub fn partial_trace_a(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_two_qubit(a)?;
    let mut out = ComplexMatrix::zeros(2);
    for i in 0..2 {
        for j in 0..2 {
            out[(i, j)] = a[(i, j)] + a[(2 + i, 2 + j)];
        }
    }
    Ok(out)
}

/// `Tr_B((I (x) rho) M)` for a qubit operator `rho` and two-qubit `m`.
pub fn contract_b(m: &ComplexMatrix, rho: &ComplexMatrix) -> ComplexMatrix {
    debug_assert!(m.dim == 4 && rho.dim == 2);
    let mut out = ComplexMatrix::zeros(2);
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = Complex64::default();
            for k in 0..2 {
                for l in 0..2 {
                    acc += rho[(k, l)] * m[(2 * i + l, 2 * j + k)];
                }
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// `Tr_A((rho (x) I) M)` for a qubit operator `rho` and two-qubit `m`.
pub fn contract_a(m: &ComplexMatrix, rho: &ComplexMatrix) -> ComplexMatrix {
    debug_assert!(m.dim == 4 && rho.dim == 2);
    let mut out = ComplexMatrix::zeros(2);
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = Complex64::default();
            for k in 0..2 {
                for l in 0..2 {
                    acc += rho[(k, l)] * m[(2 * l + i, 2 * k + j)];
                }
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn min(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }

    /// `V f(Lambda) V^dag`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.vectors.dim;
        let mut out = ComplexMatrix::zeros(n);
        for (k, &lam) in self.values.iter().enumerate() {
            let fl = f(lam);
            if fl == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = self.vectors[(i, k)] * fl;
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// The input is symmetrized before rotating. Eigenvalues come out in
/// descending order (stable on ties) and each eigenvector has its first
/// non-negligible component made real and positive.
pub fn eig_hermitian(a: &ComplexMatrix) -> Result<HermitianEigen> {
    a.check_hermitian()?;
    let n = a.dim;
    let mut m = a.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = m.frobenius_norm().max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_OFF_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut m, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).expect("finite eigenvalues"));

    let mut vectors = ComplexMatrix::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        let col = v.column(old_col);
        let phase = col
            .iter()
            .find(|z| z.norm() > 1e-12)
            .map(|z| z.conj() / z.norm())
            .unwrap_or(cr(1.0));
        for i in 0..n {
            vectors[(i, new_col)] = col[i] * phase;
        }
    }
    Ok(HermitianEigen {
        values: order.iter().map(|&i| diag[i]).collect(),
        vectors,
    })
}

/// One complex Jacobi rotation annihilating `m[p][q]`; accumulates into `v`.
fn jacobi_rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let r = apq.norm();
    if r < f64::MIN_POSITIVE {
        return;
    }
    // Phase e^{-i phi} turns the pivot real, then a real rotation zeroes it.
    let phase = apq.conj() / r;
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta >= 0.0 {
        1.0 / (theta + (theta * theta + 1.0).sqrt())
    } else {
        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
    };
    let cs = 1.0 / (t * t + 1.0).sqrt();
    let sn = t * cs;
    // U restricted to (p, q): rows p = (c, s), q = e^{-i phi} (-s, c).
    let u_pp = cr(cs);
    let u_pq = cr(sn);
    let u_qp = phase * (-sn);
    let u_qq = phase * cs;

    let n = m.dim;
    // m <- m U
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = mkp * u_pp + mkq * u_qp;
        m[(k, q)] = mkp * u_pq + mkq * u_qq;
    }
    // m <- U^dag m
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = u_pp.conj() * mpk + u_qp.conj() * mqk;
        m[(q, k)] = u_pq.conj() * mpk + u_qq.conj() * mqk;
    }
    m[(p, q)] = Complex64::default();
    m[(q, p)] = Complex64::default();
    m[(p, p)] = cr(m[(p, p)].re);
    m[(q, q)] = cr(m[(q, q)].re);
    // v <- v U
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * u_pp + vkq * u_qp;
        v[(k, q)] = vkp * u_pq + vkq * u_qq;
    }
}

/// `true` iff the smallest eigenvalue is at least `-tol`.
pub fn is_psd(a: &ComplexMatrix, tol: f64) -> Result<bool> {
    Ok(eig_hermitian(a)?.min() >= -tol)
}

/// Principal square root of a PSD matrix.
pub fn psd_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(a)?;
    let min = eig.min();
    if min < -PSD_CLAMP * a.max_abs().max(1.0) {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(eig.reconstruct_with(|l| l.max(0.0).sqrt()))
}

/// `(A + reg I)^{-1/2}` for PSD `A`; negative eigenvalues are clamped first.
pub(crate) fn psd_inv_sqrt(a: &ComplexMatrix, reg: f64) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(a)?;
    Ok(eig.reconstruct_with(|l| 1.0 / (l.max(0.0) + reg).sqrt()))
}

/// Projection onto the PSD cone (negative eigenvalues set to zero).
pub(crate) fn psd_part(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(eig_hermitian(a)?.reconstruct_with(|l| l.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn phi_plus() -> ComplexMatrix {
        let s = FRAC_1_SQRT_2;
        ComplexMatrix::projector(&[cr(s), cr(0.0), cr(0.0), cr(s)])
    }

    #[test]
    fn kron_examples() {
        let zz = kron(&ComplexMatrix::pauli_z(), &ComplexMatrix::pauli_z());
        assert_eq!(zz, ComplexMatrix::from_diag(&[1.0, -1.0, -1.0, 1.0]));
        let ii = kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2));
        assert_eq!(ii, ComplexMatrix::identity(4));
        let p0 = ComplexMatrix::from_diag(&[1.0, 0.0]);
        assert_eq!(kron(&p0, &p0), ComplexMatrix::from_diag(&[1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn eig_small_examples() {
        let e = eig_hermitian(&ComplexMatrix::from_diag(&[1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![2.0, 1.0]);
        let e = eig_hermitian(&ComplexMatrix::pauli_x()).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] + 1.0).abs() < 1e-14);
        let e = eig_hermitian(&ComplexMatrix::pauli_y()).unwrap();
        let back = e.reconstruct_with(|l| l);
        assert!(back.max_abs_diff(&ComplexMatrix::pauli_y()) < 1e-14);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let a = ComplexMatrix::from_real(2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(eig_hermitian(&a), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn eigenvector_phase_is_fixed() {
        let e = eig_hermitian(&ComplexMatrix::pauli_y()).unwrap();
        for k in 0..2 {
            let first = e.vectors.column(k).into_iter().find(|z| z.norm() > 1e-12).unwrap();
            assert!(first.im.abs() < 1e-15 && first.re > 0.0);
        }
    }

    #[test]
    fn partial_transpose_examples() {
        let id = ComplexMatrix::identity(4);
        assert_eq!(partial_transpose(&id).unwrap(), id);

        let a = ComplexMatrix::from_vec(2, vec![c(1.0, 0.0), c(0.5, 0.3), c(0.2, -0.1), c(-2.0, 0.0)]);
        let b = ComplexMatrix::from_vec(2, vec![c(0.3, 0.0), c(0.0, 1.0), c(0.7, 0.2), c(0.1, 0.0)]);
        let pt = partial_transpose(&kron(&a, &b)).unwrap();
        assert!(pt.max_abs_diff(&kron(&a, &b.transpose())) < 1e-15);

        // index bookkeeping: |phi+><phi+| has 1/2 at (0,0),(0,3),(3,0),(3,3);
        // swapping the second-factor indices moves (0,3) -> (1,2), (3,0) -> (2,1).
        let mut swap_half = ComplexMatrix::zeros(4);
        for &(i, j) in &[(0, 0), (3, 3), (1, 2), (2, 1)] {
            swap_half[(i, j)] = cr(0.5);
        }
        assert!(partial_transpose(&phi_plus()).unwrap().max_abs_diff(&swap_half) < 1e-15);
        assert!(matches!(
            partial_transpose(&ComplexMatrix::identity(2)),
            Err(Error::WrongDimension { expected: 4, actual: 2 })
        ));
    }

    #[test]
    fn phi_plus_partial_transpose_spectrum() {
        // SWAP/2 has eigenvalues 1/2 (x3, symmetric subspace) and -1/2 (singlet).
        let e = eig_hermitian(&partial_transpose(&phi_plus()).unwrap()).unwrap();
        assert!((e.min() + 0.5).abs() < 1e-12);
        assert!((e.max() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_examples() {
        let tr = partial_trace_b(&phi_plus()).unwrap();
        assert!(tr.max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);
        let tr = partial_trace_b(&ComplexMatrix::identity(4)).unwrap();
        assert_eq!(tr, ComplexMatrix::identity(2).scale(2.0));
        let a = ComplexMatrix::pauli_x();
        let b = ComplexMatrix::from_diag(&[0.25, 0.5]);
        let tr = partial_trace_b(&kron(&a, &b)).unwrap();
        assert!(tr.max_abs_diff(&a.scale(0.75)) < 1e-15);
        let tr = partial_trace_a(&kron(&a, &b)).unwrap();
        assert!(tr.max_abs_diff(&b.scale(0.0)) < 1e-15);
    }

    #[test]
    fn contractions_match_explicit_products() {
        let m = phi_plus();
        let rho = ComplexMatrix::from_vec(2, vec![cr(0.6), c(0.1, 0.2), c(0.1, -0.2), cr(0.4)]);
        let id = ComplexMatrix::identity(2);
        let direct_b = partial_trace_b(&(&kron(&id, &rho) * &m)).unwrap();
        assert!(contract_b(&m, &rho).max_abs_diff(&direct_b) < 1e-15);
        let direct_a = partial_trace_a(&(&kron(&rho, &id) * &m)).unwrap();
        assert!(contract_a(&m, &rho).max_abs_diff(&direct_a) < 1e-15);
    }

    #[test]
    fn psd_checks() {
        assert!(is_psd(&ComplexMatrix::identity(4), 1e-12).unwrap());
        assert!(!is_psd(&ComplexMatrix::identity(2).scale(-1.0), 1e-12).unwrap());
        assert!(is_psd(&phi_plus(), 1e-12).unwrap());
    }

    #[test]
    fn psd_sqrt_examples() {
        let id = ComplexMatrix::identity(4);
        assert!(psd_sqrt(&id).unwrap().max_abs_diff(&id) < 1e-14);
        let r = psd_sqrt(&ComplexMatrix::from_diag(&[4.0, 1.0])).unwrap();
        assert!(r.max_abs_diff(&ComplexMatrix::from_diag(&[2.0, 1.0])) < 1e-14);
        // rank one: sqrt(4 P) = 2 P for a projector P
        let r = psd_sqrt(&phi_plus().scale(4.0)).unwrap();
        assert!(r.max_abs_diff(&phi_plus().scale(2.0)) < 1e-12);
        assert!(matches!(
            psd_sqrt(&ComplexMatrix::from_diag(&[1.0, -0.5])),
            Err(Error::NotPsd { .. })
        ));
        // tiny negative eigenvalues are clamped
        let r = psd_sqrt(&ComplexMatrix::from_diag(&[1.0, -1e-12])).unwrap();
        assert!(r.max_abs_diff(&ComplexMatrix::from_diag(&[1.0, 0.0])) < 1e-14);
    }
}
