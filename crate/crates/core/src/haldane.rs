//! Flat-band Haldane model on the engineered momentum grid.
//!
//! The Bloch Hamiltonian is `d0 + d(k).sigma` with the honeycomb d-vector.
//! Normalizing `d` to a constant length makes both bands exactly flat. The
//! topology is read three ways: the analytic Chern formula, a lattice
//! field-strength Chern number of the sampled blocks, and the Bott index of
//! the engineered (possibly noisy) real-space unitary.

use std::f64::consts::PI;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::NoiseModel;
use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat};
use crate::protocol::{
    build_protocol_unitary_with, extract_spectrum, qqft_sequence, split_index, MomentumModel, WRAP_MARGIN,
};
use crate::stats;
use crate::engine::UnitaryMatrix;

/// Default evolution time, ms.
pub const DEFAULT_TIME_MS: f64 = 1.0 / (2.0 * PI);

/// Default momentum grid per axis.
pub const DEFAULT_GRID: usize = 16;

/// Smallest eigenvalue modulus of the projected commutator accepted by
/// [`bott_index`].
pub const NEAR_SINGULAR_TOL: f64 = 1e-8;

/// Nearest-neighbour bond vectors of the honeycomb, unit length, 120 degrees apart.
pub const BONDS: [[f64; 2]; 3] = [
    [0.0, 1.0],
    [-0.866_025_403_784_438_6, -0.5],
    [0.866_025_403_784_438_6, -0.5],
];

/// `g1 = e2 - e3`, `g2 = e3 - e1`, `g3 = e1 - e2`.
pub fn g_vectors() -> [[f64; 2]; 3] {
    let e = BONDS;
    let sub = |a: [f64; 2], b: [f64; 2]| [a[0] - b[0], a[1] - b[1]];
    [sub(e[1], e[2]), sub(e[2], e[0]), sub(e[0], e[1])]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaldaneParams {
    pub t1: f64,
    pub t2: f64,
    /// Flux phase.
    pub phi: f64,
    /// Sublattice mass.
    pub m: f64,
    /// Constant energy offset of both bands.
    #[serde(default)]
    pub d0: f64,
    /// `|d|` after flattening, rad/ms.
    pub target_norm: f64,
}

impl Default for HaldaneParams {
    fn default() -> Self {
        Self { t1: 1.0, t2: 1.0 / 3f64.sqrt(), phi: -PI / 2.0, m: 0.0, d0: 0.0, target_norm: 2.0 * PI }
    }
}

impl HaldaneParams {
    pub fn with_phase(mut self, phi: f64, m: f64) -> Self {
        self.phi = phi;
        self.m = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.t1.is_nan() || self.t1 <= 0.0 {
            return Err(Error::InvalidSize(format!("t1 must be positive, got {}", self.t1)));
        }
        if self.target_norm.is_nan() || self.target_norm <= 0.0 {
            return Err(Error::InvalidSize(format!("target norm must be positive, got {}", self.target_norm)));
        }
        Ok(())
    }
}

/// Momentum with `k.g2 = 2 pi mx / N` and `k.g3 = 2 pi my / N`.
pub fn bz_momentum(mx: usize, my: usize, grid: usize) -> [f64; 2] {
    let th1 = 2.0 * PI * mx as f64 / grid as f64;
    let th2 = 2.0 * PI * my as f64 / grid as f64;
    [(th1 + th2) / 3f64.sqrt(), (th2 - th1) / 3.0]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DVector {
    pub d0: f64,
    pub d: [f64; 3],
}

pub fn d_vector(k: [f64; 2], p: &HaldaneParams) -> DVector {
    let g = g_vectors();
    let dot = |v: [f64; 2]| k[0] * v[0] + k[1] * v[1];
    let (a1, a2, a3) = (dot(g[0]), dot(g[1]), dot(g[2]));
    let d1 = p.t1 * (1.0 + a2.cos() + a3.cos());
    let d2 = p.t1 * (a2.sin() - a3.sin());
    let d3 = p.m - 2.0 * p.t2 * p.phi.sin() * (a1.sin() + a2.sin() + a3.sin());
    DVector { d0: p.d0, d: [d1, d2, d3] }
}

/// Rescales `d` to length `target_norm`.
pub fn flatten(d: [f64; 3], target_norm: f64) -> Result<[f64; 3]> {
    let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Err(Error::SingularPoint);
    }
    let s = target_norm / norm;
    Ok([d[0] * s, d[1] * s, d[2] * s])
}

/// The unflattened Bloch blocks on a `grid x grid` mesh.
pub fn haldane_model(p: &HaldaneParams, grid: usize, time: f64) -> Result<MomentumModel> {
    p.validate()?;
    MomentumModel::from_fn(2, 2, grid, time, |m| {
        let dv = d_vector(bz_momentum(m[0], m[1], grid), p);
        Ok(linalg::pauli_block(dv.d0, dv.d))
    })
}

/// Blocks with `|d| = target_norm` at every grid point.
pub fn flat_haldane_model(p: &HaldaneParams, grid: usize, time: f64) -> Result<MomentumModel> {
    p.validate()?;
    MomentumModel::from_fn(2, 2, grid, time, |m| {
        let dv = d_vector(bz_momentum(m[0], m[1], grid), p);
        Ok(linalg::pauli_block(dv.d0, flatten(dv.d, p.target_norm)?))
    })
}

/// `-1/2 [sgn(M + 3 sqrt3 t2 sin phi) - sgn(M - 3 sqrt3 t2 sin phi)]`.
pub fn chern_analytic(p: &HaldaneParams) -> Result<i32> {
    let w = 3.0 * 3f64.sqrt() * p.t2 * p.phi.sin();
    let (a, b) = (p.m + w, p.m - w);
    if a.abs() < 1e-12 || b.abs() < 1e-12 {
        return Err(Error::PhaseBoundary(format!("M = {}, phi = {}", p.m, p.phi)));
    }
    let sgn = |x: f64| if x > 0.0 { 1 } else { -1 };
    Ok(-(sgn(a) - sgn(b)) / 2)
}

/// Lattice field-strength Chern number of the lower band of a two-band,
/// two-dimensional model.
pub fn chern_fhs(model: &MomentumModel) -> Result<i32> {
    if model.d() != 2 {
        return Err(Error::UnsupportedDimension(model.d()));
    }
    if model.l() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: model.l() });
    }
    let n = model.grid();
    let mut lower = Vec::with_capacity(n * n);
    for h in model.blocks() {
        let (vals, vecs) = linalg::hermitian_eigen(h)?;
        if vals[1] - vals[0] < 1e-9 {
            return Err(Error::GapClosed(vals[1] - vals[0]));
        }
        lower.push([vecs[(0, 0)], vecs[(1, 0)]]);
    }
    let u = |a: usize, b: usize| lower[(a % n) * n + (b % n)];
    let link = |x: [c64; 2], y: [c64; 2]| x[0].conj() * y[0] + x[1].conj() * y[1];
    let mut flux = 0.0;
    for a in 0..n {
        for b in 0..n {
            let w = link(u(a, b), u(a + 1, b))
                * link(u(a + 1, b), u(a + 1, b + 1))
                * link(u(a + 1, b + 1), u(a, b + 1))
                * link(u(a, b + 1), u(a, b));
            flux += w.arg();
        }
    }
    Ok((flux / (2.0 * PI)).round() as i32)
}

/// Bott index of the lowest `filled_bands` bands of `u`, returned before
/// rounding.
///
/// Sites are read from the composite layout of a two-dimensional model with
/// `l` orbitals on a `grid x grid` lattice. With `Q` an orthonormal basis of
/// the occupied eigenvectors and `X`, `Y` the grid coordinates,
/// `V_x = Q^dag e^{2 pi i X / N} Q`, likewise `V_y`, and the index is
/// `sum arg eig(V_x V_y V_x^dag V_y^dag) / 2 pi`.
pub fn bott_index(u: &UnitaryMatrix, time: f64, l: usize, grid: usize, filled_bands: usize) -> Result<f64> {
    let dim = u.dim();
    if dim != grid * grid * l {
        return Err(Error::DimensionMismatch { expected: grid * grid * l, found: dim });
    }
    if filled_bands == 0 || filled_bands >= l {
        return Err(Error::InvalidSize(format!("need 0 < filled bands < {l}, got {filled_bands}")));
    }
    let evd = u.as_mat().eigen().map_err(|_| Error::Eigen)?;
    let s = evd.S().column_vector();
    let mut energies = Vec::with_capacity(dim);
    for i in 0..dim {
        let phase = linalg::principal_angle(s[i].arg());
        if phase.abs() >= PI - WRAP_MARGIN {
            return Err(Error::InvalidTime { phase, time });
        }
        energies.push(-phase / time);
    }
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]).then(a.cmp(&b)));
    let n_occ = grid * grid * filled_bands;
    let gap = energies[order[n_occ]] - energies[order[n_occ - 1]];
    if gap <= 0.0 {
        return Err(Error::GapClosed(gap));
    }

    let vecs = evd.U();
    let occ = Mat::from_fn(dim, n_occ, |i, j| vecs[(i, order[j])]);
    let q = occ.qr().compute_thin_Q();
    let (px, py): (Vec<c64>, Vec<c64>) = (0..dim)
        .map(|i| {
            let (m, _) = split_index(i, 2, grid, l);
            let f = |x: usize| c64::cis(2.0 * PI * x as f64 / grid as f64);
            (f(m[0]), f(m[1]))
        })
        .unzip();
    let project = |phases: &[c64]| -> CMat {
        let scaled = CMat::from_fn(dim, n_occ, |i, j| phases[i] * q[(i, j)]);
        q.adjoint() * &scaled
    };
    let vx = project(&px);
    let vy = project(&py);
    let w = &vx * &vy * vx.adjoint() * vy.adjoint();
    let eig = w.eigenvalues().map_err(|_| Error::Eigen)?;
    let smallest = eig.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    if smallest < NEAR_SINGULAR_TOL {
        return Err(Error::NearSingular(smallest));
    }
    Ok(eig.iter().map(|z| z.arg()).sum::<f64>() / (2.0 * PI))
}

/// One row of the gap/width noise sweep, energies in rad/ms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sigma: f64,
    pub realizations: usize,
    pub mean_gap: f64,
    pub mean_width: f64,
    pub stderr_gap: f64,
    pub stderr_width: f64,
    /// Mean and standard error of the per-realization ratio `W / G`.
    pub mean_ratio: f64,
    pub stderr_ratio: f64,
}

/// Band gap and width of the flat model averaged over noise realizations.
///
/// Realization `r` uses stream `r` of `template` at each sigma, so the
/// sweep reuses the same normal draws across sigma values. Realizations run
/// on the current rayon pool and are reduced in index order.
pub fn noise_sweep_gap_width(
    p: &HaldaneParams,
    grid: usize,
    sigmas: &[f64],
    n_realizations: usize,
    template: &NoiseModel,
) -> Result<Vec<SweepRow>> {
    if n_realizations == 0 {
        return Err(Error::InvalidSize("need at least one realization".into()));
    }
    let model = flat_haldane_model(p, grid, DEFAULT_TIME_MS)?;
    let seq = qqft_sequence(grid)?;
    sigmas
        .iter()
        .map(|&sigma| {
            let base = NoiseModel { sigma, ..*template };
            let samples: Vec<(f64, f64)> = (0..n_realizations as u64)
                .into_par_iter()
                .map(|r| {
                    let u = build_protocol_unitary_with(&model, &seq, &base.with_stream(r))?;
                    let spec = extract_spectrum(&u, model.time(), 2)?;
                    Ok((spec.band_gap().unwrap_or(f64::NAN), spec.band_width()))
                })
                .collect::<Result<_>>()?;
            let gaps: Vec<f64> = samples.iter().map(|s| s.0).collect();
            let widths: Vec<f64> = samples.iter().map(|s| s.1).collect();
            let ratios: Vec<f64> = samples.iter().map(|s| s.1 / s.0).collect();
            Ok(SweepRow {
                sigma,
                realizations: n_realizations,
                mean_gap: stats::mean(&gaps),
                mean_width: stats::mean(&widths),
                stderr_gap: stats::std_error(&gaps),
                stderr_width: stats::std_error(&widths),
                mean_ratio: stats::mean(&ratios),
                stderr_ratio: stats::std_error(&ratios),
            })
        })
        .collect()
}

/// Bott index of one noisy realization of the flat model at `p`.
pub fn flat_band_bott(p: &HaldaneParams, grid: usize, noise: &NoiseModel) -> Result<f64> {
    let model = flat_haldane_model(p, grid, DEFAULT_TIME_MS)?;
    let seq = qqft_sequence(grid)?;
    let u = build_protocol_unitary_with(&model, &seq, noise)?;
    bott_index(&u, model.time(), 2, grid, 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub phi: f64,
    pub m: f64,
    /// Unrounded Bott index, absent where the gap closes on the grid.
    pub bott: Option<f64>,
    /// Analytic Chern number, absent on phase boundaries.
    pub chern: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub phis: Vec<f64>,
    pub masses: Vec<f64>,
    /// Row-major over `(phi, M)`.
    pub cells: Vec<PhaseCell>,
}

/// `count` evenly spaced points over `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
    }
}

/// Bott index and analytic Chern number over a `(phi, M)` grid. Cell `c`
/// uses noise stream `template.stream_id + c`.
pub fn phase_diagram(
    base: &HaldaneParams,
    phis: &[f64],
    masses: &[f64],
    grid: usize,
    template: &NoiseModel,
) -> Result<PhaseDiagram> {
    base.validate()?;
    let seq = qqft_sequence(grid)?;
    let points: Vec<(f64, f64)> = phis.iter().flat_map(|&phi| masses.iter().map(move |&m| (phi, m))).collect();
    let cells = points
        .par_iter()
        .enumerate()
        .map(|(c, &(phi, m))| {
            let p = base.with_phase(phi, m);
            let chern = chern_analytic(&p).ok();
            let noise = template.with_stream(template.stream_id.wrapping_add(c as u64));
            let bott = match flat_haldane_model(&p, grid, DEFAULT_TIME_MS) {
                Ok(model) => {
                    let u = build_protocol_unitary_with(&model, &seq, &noise)?;
                    match bott_index(&u, model.time(), 2, grid, 1) {
                        Ok(b) => Some(b),
                        Err(Error::GapClosed(_) | Error::NearSingular(_)) => None,
                        Err(e) => return Err(e),
                    }
                }
                Err(Error::SingularPoint) => None,
                Err(e) => return Err(e),
            };
            Ok(PhaseCell { phi, m, bott, chern })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseDiagram { phis: phis.to_vec(), masses: masses.to_vec(), cells })
}
