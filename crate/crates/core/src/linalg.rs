//! Dense complex matrix helpers shared by the simulator.
//!
//! Storage is `faer::Mat<c64>`; the general eigensolver and QR come from
//! faer. Two-site gates are small enough that their logarithms and
//! fractional powers are done in closed form here.

use std::f64::consts::PI;

pub use faer::c64;

use crate::error::{Error, Result};

pub type CMat = faer::Mat<c64>;

/// A 2x2 complex matrix in row-major order.
pub type Mat2 = [[c64; 2]; 2];

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// `Omega_{kj} = omega^{kj} / sqrt(N)` with `omega = exp(2 pi i / N)`.
pub fn dft_matrix(n: usize) -> CMat {
    let norm = 1.0 / (n as f64).sqrt();
    CMat::from_fn(n, n, |k, j| {
        // reduce k*j mod n first so the phase argument stays small
        let e = (k * j) % n;
        c64::cis(2.0 * PI * e as f64 / n as f64) * norm
    })
}

pub fn adjoint(a: &CMat) -> CMat {
    a.adjoint().to_owned()
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.nrows(), b.nrows());
    assert_eq!(a.ncols(), b.ncols());
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

/// Multiplies `a` by the global phase that matches it to `reference` at the
/// reference's largest-magnitude entry.
pub fn align_global_phase(a: &CMat, reference: &CMat) -> CMat {
    let (mut bi, mut bj, mut best) = (0, 0, -1.0);
    for j in 0..reference.ncols() {
        for i in 0..reference.nrows() {
            let v = reference[(i, j)].norm();
            if v > best {
                best = v;
                bi = i;
                bj = j;
            }
        }
    }
    let z = a[(bi, bj)];
    if z.norm() == 0.0 {
        return a.clone();
    }
    let ratio = reference[(bi, bj)] / z;
    let phase = ratio / ratio.norm();
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * phase)
}

/// Entrywise distance after removing the global phase.
pub fn phase_aligned_diff(a: &CMat, reference: &CMat) -> f64 {
    max_abs_diff(&align_global_phase(a, reference), reference)
}

/// `max |U U^dag - I|`.
pub fn unitarity_deviation(u: &CMat) -> f64 {
    let prod = u * u.adjoint();
    max_abs_diff(&prod, &identity(u.nrows()))
}

/// `max |H - H^dag|`.
pub fn hermiticity_deviation(h: &CMat) -> f64 {
    let n = h.nrows();
    let mut m = 0.0f64;
    for i in 0..n {
        for j in i..n {
            m = m.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    m
}

/// Kronecker product with row-major composite indexing:
/// `(a kron b)[(ia * nb + ib, ja * nb + jb)] = a[(ia, ja)] * b[(ib, jb)]`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let mut out = CMat::zeros(a.nrows() * b.nrows(), a.ncols() * b.ncols());
    faer::linalg::kron::kron(out.as_mut(), a.as_ref(), b.as_ref());
    out
}

/// Left-multiplies rows `(site, site + 1)` of `m` by the 2x2 block `g`.
pub fn apply_pair_left(m: &mut CMat, site: usize, g: &Mat2) {
    for j in 0..m.ncols() {
        let a = m[(site, j)];
        let b = m[(site + 1, j)];
        m[(site, j)] = g[0][0] * a + g[0][1] * b;
        m[(site + 1, j)] = g[1][0] * a + g[1][1] * b;
    }
}

/// Left-multiplies row `site` of `m` by `z`.
pub fn apply_site_left(m: &mut CMat, site: usize, z: c64) {
    for j in 0..m.ncols() {
        m[(site, j)] *= z;
    }
}

/// Wraps an angle into the principal interval `(-pi, pi]`.
///
/// Values within 1e-12 of `-pi` land on `+pi`.
pub fn principal_angle(x: f64) -> f64 {
    let mut w = x.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    if w <= -PI + 1e-12 {
        w += 2.0 * PI;
    }
    w
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat2_adjoint(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

pub fn mat2_unitarity_deviation(u: &Mat2) -> f64 {
    let p = mat2_mul(u, &mat2_adjoint(u));
    let mut m = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let id = if i == j { ONE } else { ZERO };
            m = m.max((p[i][j] - id).norm());
        }
    }
    m
}

/// Spectral decomposition of a 2x2 unitary: `U = e^{i a} P_a + e^{i b} P_b`
/// with principal eigenphases and orthogonal projectors.
#[derive(Debug, Clone, Copy)]
pub struct UnitarySpectrum2 {
    pub phases: [f64; 2],
    pub projectors: [Mat2; 2],
}

/// Writes `U = e^{i alpha} (a0 I + i v.sigma)` with `a0^2 + |v|^2 = 1`; the
/// eigenphases are `alpha +- theta` with `cos theta = a0`, and the
/// eigenprojectors are `(I +- n.sigma) / 2`.
pub fn unitary_spectrum2(u: &Mat2) -> UnitarySpectrum2 {
    let det = u[0][0] * u[1][1] - u[0][1] * u[1][0];
    let alpha = 0.5 * det.arg();
    let rot = c64::cis(-alpha);
    let s = [[u[0][0] * rot, u[0][1] * rot], [u[1][0] * rot, u[1][1] * rot]];
    let a0 = 0.5 * (s[0][0] + s[1][1]).re;
    let vz = 0.5 * (s[0][0] - s[1][1]).im;
    let vy = 0.5 * (s[0][1] - s[1][0]).re;
    let vx = 0.5 * (s[0][1] + s[1][0]).im;
    let vnorm = (vx * vx + vy * vy + vz * vz).sqrt();
    let theta = vnorm.atan2(a0);
    if vnorm < 1e-15 {
        let id = [[ONE, ZERO], [ZERO, ONE]];
        let zero = [[ZERO; 2]; 2];
        let ph = principal_angle(alpha + theta);
        return UnitarySpectrum2 {
            phases: [ph, ph],
            projectors: [id, zero],
        };
    }
    let (nx, ny, nz) = (vx / vnorm, vy / vnorm, vz / vnorm);
    // n.sigma = [[nz, nx - i ny], [nx + i ny, -nz]]
    let proj = |sign: f64| -> Mat2 {
        [
            [c64::new(0.5 * (1.0 + sign * nz), 0.0), c64::new(0.5 * sign * nx, -0.5 * sign * ny)],
            [c64::new(0.5 * sign * nx, 0.5 * sign * ny), c64::new(0.5 * (1.0 - sign * nz), 0.0)],
        ]
    };
    UnitarySpectrum2 {
        phases: [principal_angle(alpha + theta), principal_angle(alpha - theta)],
        projectors: [proj(1.0), proj(-1.0)],
    }
}

impl UnitarySpectrum2 {
    /// `sum_k f(phase_k) P_k`.
    pub fn map(&self, f: impl Fn(f64) -> c64) -> Mat2 {
        let mut out = [[ZERO; 2]; 2];
        for k in 0..2 {
            let w = f(self.phases[k]);
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] += w * self.projectors[k][i][j];
                }
            }
        }
        out
    }

    /// Hermitian generator `H` with `e^{-iH} = U` on the principal branch.
    pub fn generator(&self) -> Mat2 {
        self.map(|p| c64::new(-p, 0.0))
    }

    /// `exp(-i s H)`, i.e. the principal-branch power `U^s`.
    pub fn power(&self, s: f64) -> Mat2 {
        self.map(|p| c64::cis(s * p))
    }
}

/// Exponential `exp(-i t H)` of a Hermitian matrix via its eigendecomposition.
pub fn hermitian_exp(h: &CMat, t: f64) -> Result<CMat> {
    let n = h.nrows();
    if n == 1 {
        let e = h[(0, 0)].re;
        return Ok(CMat::from_fn(1, 1, |_, _| c64::cis(-e * t)));
    }
    let evd = h
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| Error::Eigen)?;
    let vecs = evd.U();
    let vals = evd.S().column_vector();
    let scaled = CMat::from_fn(n, n, |i, k| vecs[(i, k)] * c64::cis(-vals[k].re * t));
    Ok(&scaled * vecs.adjoint())
}

/// Eigenvalues and eigenvectors of a Hermitian matrix, ascending.
pub fn hermitian_eigen(h: &CMat) -> Result<(Vec<f64>, CMat)> {
    let evd = h
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| Error::Eigen)?;
    let vals = evd.S().column_vector().iter().map(|z| z.re).collect();
    Ok((vals, evd.U().to_owned()))
}

/// The Pauli combination `d0 I + d.sigma`.
pub fn pauli_block(d0: f64, d: [f64; 3]) -> CMat {
    let mut h = CMat::zeros(2, 2);
    h[(0, 0)] = c64::new(d0 + d[2], 0.0);
    h[(1, 1)] = c64::new(d0 - d[2], 0.0);
    h[(0, 1)] = c64::new(d[0], -d[1]);
    h[(1, 0)] = c64::new(d[0], d[1]);
    h
}
