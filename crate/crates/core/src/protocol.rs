//! The engineered evolution `U = V e^{-i H_D T} V^dag`.
//!
//! `H_D` is block diagonal in momentum space, with one `l x l` Bloch block
//! per grid point. `V` is the QQFT on each spatial axis, tensored with the
//! identity on the orbital factor. Energies are read back from the
//! eigenphases of `U`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::circuit::{build_generic_qqft, build_radix2_qqft, CircuitSequence, MAX_RADIX2_EXPONENT};
use crate::engine::{
    self, apply_noisy_inverse, apply_noisy_sequence, Channel, NoiseModel, UnitaryMatrix, HERMITICITY_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Recoil frequency `E_R / hbar` of the lithium calibration, in rad/ms.
pub const RECOIL_RAD_PER_MS: f64 = 2.0 * PI * 25.12;

/// Largest composite dimension a momentum model may have.
pub const MAX_MODEL_DIM: usize = engine::DEFAULT_MAX_DIM;

/// Composite index `((m_1 N + m_2) N + ...) l + alpha`, shared by the
/// tensor products and the diagonal blocks.
pub fn composite_index(m: &[usize], alpha: usize, grid: usize, l: usize) -> usize {
    m.iter().fold(0, |acc, &mi| acc * grid + mi) * l + alpha
}

/// Inverse of [`composite_index`].
pub fn split_index(index: usize, d: usize, grid: usize, l: usize) -> (Vec<usize>, usize) {
    let alpha = index % l;
    let mut point = index / l;
    let mut m = vec![0; d];
    for k in (0..d).rev() {
        m[k] = point % grid;
        point /= grid;
    }
    (m, alpha)
}

/// Bloch Hamiltonians `H(k_m)` sampled on a uniform `grid^d` momentum grid.
#[derive(Debug, Clone)]
pub struct MomentumModel {
    d: usize,
    l: usize,
    grid: usize,
    time: f64,
    blocks: Vec<CMat>,
}

impl MomentumModel {
    /// Samples `sampler(m)` at every grid point `m`, in layout order.
    pub fn from_fn(
        d: usize,
        l: usize,
        grid: usize,
        time: f64,
        mut sampler: impl FnMut(&[usize]) -> Result<CMat>,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::UnsupportedDimension(0));
        }
        if grid < 2 || l == 0 {
            return Err(Error::InvalidSize(format!("need grid >= 2 and l >= 1, got grid={grid}, l={l}")));
        }
        if !time.is_finite() {
            return Err(Error::InvalidSize(format!("evolution time must be finite, got {time}")));
        }
        let n_points = (0..d)
            .try_fold(1usize, |acc, _| acc.checked_mul(grid))
            .filter(|&p| p.checked_mul(l).is_some_and(|dim| dim <= MAX_MODEL_DIM))
            .ok_or(Error::DimensionOverflow(grid.saturating_pow(d as u32).saturating_mul(l), MAX_MODEL_DIM))?;
        let mut blocks = Vec::with_capacity(n_points);
        for p in 0..n_points {
            let (m, _) = split_index(p, d, grid, 1);
            let h = sampler(&m)?;
            if h.nrows() != l || h.ncols() != l {
                return Err(Error::DimensionMismatch { expected: l, found: h.nrows().max(h.ncols()) });
            }
            let dev = linalg::hermiticity_deviation(&h);
            if dev.is_nan() || dev >= HERMITICITY_TOL {
                return Err(Error::NotHermitian(dev));
            }
            blocks.push(h);
        }
        Ok(Self { d, l, grid, time, blocks })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn n_points(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.blocks.len() * self.l
    }

    /// Blocks in layout order.
    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn block(&self, m: &[usize]) -> &CMat {
        &self.blocks[composite_index(m, 0, self.grid, 1)]
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// Energies straight from the blocks, globally sorted into bands.
    pub fn exact_spectrum(&self) -> Result<SpectrumResult> {
        let mut all = Vec::with_capacity(self.dim());
        for h in &self.blocks {
            all.extend(linalg::hermitian_eigen(h)?.0);
        }
        Ok(SpectrumResult::from_energies(all, self.l))
    }
}

/// The QQFT sequence used for one axis of length `grid`.
pub fn qqft_sequence(grid: usize) -> Result<CircuitSequence> {
    if grid.is_power_of_two() && grid >= 2 && grid.trailing_zeros() <= MAX_RADIX2_EXPONENT {
        build_radix2_qqft(grid.trailing_zeros())
    } else {
        build_generic_qqft(grid)
    }
}

/// The per-axis QQFT `V` and noisy inverse `W^dag` of one realization,
/// tensored over axes and the orbital factor.
fn protocol_frames(model: &MomentumModel, seq: &CircuitSequence, noise: &NoiseModel) -> Result<(UnitaryMatrix, UnitaryMatrix)> {
    let orbital = UnitaryMatrix::identity(model.l());
    let mut v = UnitaryMatrix::identity(1);
    let mut w_dag = UnitaryMatrix::identity(1);
    for axis in 0..model.d() {
        let fwd = apply_noisy_sequence(seq, noise, Channel::Forward(axis));
        let inv = apply_noisy_inverse(seq, noise, Channel::Inverse(axis));
        v = engine::tensor_product_with_limit(&v, &fwd, MAX_MODEL_DIM)?;
        w_dag = engine::tensor_product_with_limit(&w_dag, &inv, MAX_MODEL_DIM)?;
    }
    v = engine::tensor_product_with_limit(&v, &orbital, MAX_MODEL_DIM)?;
    w_dag = engine::tensor_product_with_limit(&w_dag, &orbital, MAX_MODEL_DIM)?;
    Ok((v, w_dag))
}

/// One realization of `V e^{-i H_D T} V^dag` with independent noise on the
/// forward and inverse transforms.
pub fn build_protocol_unitary(model: &MomentumModel, noise: &NoiseModel) -> Result<UnitaryMatrix> {
    if !(1..=2).contains(&model.d()) {
        return Err(Error::UnsupportedDimension(model.d()));
    }
    let seq = qqft_sequence(model.grid())?;
    build_protocol_unitary_with(model, &seq, noise)
}

/// As [`build_protocol_unitary`], reusing an already compiled axis sequence.
pub fn build_protocol_unitary_with(
    model: &MomentumModel,
    seq: &CircuitSequence,
    noise: &NoiseModel,
) -> Result<UnitaryMatrix> {
    if !(1..=2).contains(&model.d()) {
        return Err(Error::UnsupportedDimension(model.d()));
    }
    if seq.n_sites() != model.grid() {
        return Err(Error::DimensionMismatch { expected: model.grid(), found: seq.n_sites() });
    }
    let (v, w_dag) = protocol_frames(model, seq, noise)?;
    let diag = engine::noisy_diagonal_evolution(model, model.time(), noise)?;
    let vd = v.as_mat() * diag.as_mat();
    Ok(UnitaryMatrix::from_trusted(&vd * w_dag.as_mat()))
}

/// Energies `E = -arg(lambda) / T`, sorted and split into `l` bands of
/// equal size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    bands: Vec<Vec<f64>>,
}

impl SpectrumResult {
    fn from_energies(mut all: Vec<f64>, l: usize) -> Self {
        all.sort_by(f64::total_cmp);
        let per = all.len() / l;
        Self { bands: all.chunks(per.max(1)).map(<[f64]>::to_vec).collect() }
    }

    pub fn bands(&self) -> &[Vec<f64>] {
        &self.bands
    }

    pub fn energies(&self) -> impl Iterator<Item = f64> + '_ {
        self.bands.iter().flatten().copied()
    }

    /// `min E_upper - max E_lower` between bands 0 and 1.
    pub fn band_gap(&self) -> Option<f64> {
        let lo = self.bands.first()?;
        let hi = self.bands.get(1)?;
        Some(hi.first()? - lo.last()?)
    }

    /// Spread `max - min` of the lowest band.
    pub fn band_width(&self) -> f64 {
        match self.bands.first() {
            Some(b) if !b.is_empty() => b[b.len() - 1] - b[0],
            _ => 0.0,
        }
    }

    /// True when the lowest band does not sit strictly below the next one,
    /// so the global split into bands is ambiguous.
    pub fn degenerate_split(&self) -> bool {
        self.band_gap().is_some_and(|g| g <= 0.0)
    }
}

/// Eigenphases within this distance of `+-pi` are treated as wrapped.
pub const WRAP_MARGIN: f64 = 1e-9;

pub fn extract_spectrum(u: &UnitaryMatrix, time: f64, l: usize) -> Result<SpectrumResult> {
    if l == 0 || !u.dim().is_multiple_of(l) {
        return Err(Error::DimensionMismatch { expected: l, found: u.dim() });
    }
    if !(time.is_finite() && time > 0.0) {
        return Err(Error::InvalidSize(format!("evolution time must be positive, got {time}")));
    }
    let eig = u.as_mat().eigenvalues().map_err(|_| Error::Eigen)?;
    let mut energies = Vec::with_capacity(eig.len());
    for lambda in eig {
        let phase = linalg::principal_angle(lambda.arg());
        if phase.abs() >= PI - WRAP_MARGIN {
            return Err(Error::InvalidTime { phase, time });
        }
        energies.push(-phase / time);
    }
    Ok(SpectrumResult::from_energies(energies, l))
}

/// Duration of one QQFT cycle on the optical-lattice calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuntimeEstimate {
    pub depth: u64,
    /// `pi / (2 J)` in ms.
    pub gate_time_ms: f64,
    pub total_ms: f64,
}

/// `D(n) * pi / (2 J)` with `J = j_over_er * E_R`.
pub fn estimate_runtime(n: u32, j_over_er: f64) -> Result<RuntimeEstimate> {
    let depth = crate::circuit::depth_formula(n)?;
    Ok(runtime_for_depth(depth, j_over_er))
}

/// The same calibration applied to an arbitrary step count.
pub fn runtime_for_depth(depth: u64, j_over_er: f64) -> RuntimeEstimate {
    let j = j_over_er * RECOIL_RAD_PER_MS;
    let gate_time_ms = PI / (2.0 * j);
    RuntimeEstimate { depth, gate_time_ms, total_ms: depth as f64 * gate_time_ms }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    fn diagonal_1d(grid: usize, energies: &[f64], time: f64) -> MomentumModel {
        MomentumModel::from_fn(1, 1, grid, time, |m| Ok(CMat::from_fn(1, 1, |_, _| c64::new(energies[m[0]], 0.0))))
            .unwrap()
    }

    #[test]
    fn layout_roundtrip() {
        for idx in 0..(5 * 5 * 3) {
            let (m, a) = split_index(idx, 2, 5, 3);
            assert_eq!(composite_index(&m, a, 5, 3), idx);
        }
        assert_eq!(composite_index(&[2, 3], 1, 4, 2), (2 * 4 + 3) * 2 + 1);
    }

    #[test]
    fn zero_hamiltonian_gives_identity() {
        for grid in [4, 6] {
            let model = MomentumModel::from_fn(2, 2, grid, 1.0, |_| Ok(CMat::zeros(2, 2))).unwrap();
            let u = build_protocol_unitary(&model, &NoiseModel::noiseless()).unwrap();
            assert!(linalg::max_abs_diff(u.as_mat(), &linalg::identity(model.dim())) < 1e-12);
            let spec = extract_spectrum(&u, 1.0, 2).unwrap();
            assert!(spec.energies().all(|e| e.abs() < 1e-12));
        }
    }

    #[test]
    fn four_site_matches_plane_wave_oracle() {
        let e = [0.3, -1.1, 2.0, 0.7];
        let t = 0.9;
        let u = build_protocol_unitary(&diagonal_1d(4, &e, t), &NoiseModel::noiseless()).unwrap();
        // sum_m e^{-i E_m T} |k_m><k_m| with <x|k_m> = e^{2 pi i m x / 4} / 2
        let want = CMat::from_fn(4, 4, |x, y| {
            (0..4)
                .map(|m| {
                    let phase = 2.0 * PI * (m as f64) * (x as f64 - y as f64) / 4.0;
                    c64::cis(phase - e[m] * t) * 0.25
                })
                .sum()
        });
        assert!(linalg::max_abs_diff(u.as_mat(), &want) < 1e-13);
    }

    #[test]
    fn diagonal_energies_roundtrip() {
        for grid in [8, 5] {
            let e: Vec<f64> = (0..grid).map(|m| (m as f64 * 0.37).sin() * 2.5).collect();
            let model = diagonal_1d(grid, &e, 1.0);
            let u = build_protocol_unitary(&model, &NoiseModel::noiseless()).unwrap();
            let got: Vec<f64> = extract_spectrum(&u, 1.0, 1).unwrap().energies().collect();
            let mut want = e.clone();
            want.sort_by(f64::total_cmp);
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn wrapped_phase_is_reported() {
        let model = diagonal_1d(4, &[0.0, 1.0, 2.0, 3.5], 1.0);
        let u = build_protocol_unitary(&model, &NoiseModel::noiseless()).unwrap();
        // 3.5 rad aliases onto -2.78 rad; a time that puts it exactly on pi must fail
        let model = diagonal_1d(4, &[0.0, 1.0, 2.0, PI], 1.0);
        let v = build_protocol_unitary(&model, &NoiseModel::noiseless()).unwrap();
        assert!(extract_spectrum(&u, 1.0, 1).is_ok());
        assert!(matches!(extract_spectrum(&v, 1.0, 1), Err(Error::InvalidTime { .. })));
    }

    #[test]
    fn gap_and_width_follow_definitions() {
        let s = SpectrumResult::from_energies(vec![1.0, -2.0, -1.5, 3.0], 2);
        assert_eq!(s.bands()[0], vec![-2.0, -1.5]);
        assert_eq!(s.band_gap(), Some(2.5));
        assert_eq!(s.band_width(), 0.5);
        assert!(!s.degenerate_split());
        assert_eq!(SpectrumResult::from_energies(vec![0.0, 0.0], 1).band_gap(), None);
    }

    #[test]
    fn rejects_bad_models() {
        assert!(matches!(
            MomentumModel::from_fn(1, 2, 4, 1.0, |_| Ok(CMat::from_fn(2, 2, |i, j| c64::new(0.0, (i + j) as f64)))),
            Err(Error::NotHermitian(_))
        ));
        assert!(MomentumModel::from_fn(1, 2, 1, 1.0, |_| Ok(CMat::zeros(2, 2))).is_err());
        assert!(MomentumModel::from_fn(1, 2, 4, 1.0, |_| Ok(CMat::zeros(3, 3))).is_err());
        let three_d = MomentumModel::from_fn(3, 1, 2, 1.0, |_| Ok(CMat::zeros(1, 1))).unwrap();
        assert!(matches!(
            build_protocol_unitary(&three_d, &NoiseModel::noiseless()),
            Err(Error::UnsupportedDimension(3))
        ));
    }

    #[test]
    fn runtime_calibration() {
        let r = estimate_runtime(5, 0.01).unwrap();
        assert_eq!(r.depth, 106);
        assert!((r.gate_time_ms - 0.9952).abs() < 1e-3);
        assert!((r.total_ms - 105.5).abs() < 0.1);
        let doubled = estimate_runtime(5, 0.02).unwrap();
        assert!((doubled.total_ms * 2.0 - r.total_ms).abs() < 1e-12);
        assert!((estimate_runtime(4, 0.01).unwrap().total_ms - 42.8).abs() < 0.1);
    }

    #[test]
    fn sequence_choice_by_grid() {
        assert_eq!(qqft_sequence(16).unwrap().route(), crate::circuit::Route::Radix2);
        assert_eq!(qqft_sequence(33).unwrap().route(), crate::circuit::Route::Givens);
    }
}
