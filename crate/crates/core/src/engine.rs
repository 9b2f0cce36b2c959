//! Dense single-particle evolution and the multiplicative gate-noise model.
//!
//! Every gate is `e^{-iH}` for a local Hermitian generator `H` taken on the
//! principal branch. Noise rescales that generator, `H -> (1 + delta) H`,
//! which is the same as raising the gate to the power `1 + delta`, so noisy
//! products stay exactly unitary.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::circuit::{apply_local, CircuitSequence, GateSpec, LocalUnitary};
use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat, Mat2};
use crate::protocol::MomentumModel;

/// Largest matrix dimension `tensor_product` will build by default.
pub const DEFAULT_MAX_DIM: usize = 4096;

/// Tolerance on `max |U U^dag - I|` accepted by [`UnitaryMatrix::new`].
pub const UNITARITY_TOL: f64 = 1e-10;

/// Tolerance on `max |H - H^dag|` accepted by [`HermitianGenerator::new`].
pub const HERMITICITY_TOL: f64 = 1e-12;

/// A dense square matrix checked to be unitary.
#[derive(Debug, Clone)]
pub struct UnitaryMatrix(CMat);

impl UnitaryMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let dev = linalg::unitarity_deviation(&m);
        if dev.is_nan() || dev >= UNITARITY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix built from unitary factors without re-checking it.
    pub(crate) fn from_trusted(m: CMat) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self(linalg::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_mat(&self) -> &CMat {
        &self.0
    }

    pub fn into_inner(self) -> CMat {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(linalg::adjoint(&self.0))
    }

    /// The product `self * rhs` (`rhs` acts first).
    pub fn compose(&self, rhs: &UnitaryMatrix) -> Result<Self> {
        if self.dim() != rhs.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: rhs.dim() });
        }
        Ok(Self(&self.0 * &rhs.0))
    }

    pub fn unitarity_deviation(&self) -> f64 {
        linalg::unitarity_deviation(&self.0)
    }

    /// True when every entry has the same bit pattern in both matrices.
    pub fn bit_identical(&self, other: &UnitaryMatrix) -> bool {
        self.dim() == other.dim()
            && (0..self.dim()).all(|j| {
                (0..self.dim()).all(|i| {
                    let (a, b) = (self.0[(i, j)], other.0[(i, j)]);
                    a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()
                })
            })
    }

    /// Debug dump: one line per row, `re,im` pairs separated by commas.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|j| format!("{},{}", self.0[(i, j)].re, self.0[(i, j)].im))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// A Hermitian matrix `H`; the associated gate is `e^{-iH}`.
#[derive(Debug, Clone)]
pub struct HermitianGenerator(CMat);

impl HermitianGenerator {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let dev = linalg::hermiticity_deviation(&m);
        if dev.is_nan() || dev >= HERMITICITY_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_mat(&self) -> &CMat {
        &self.0
    }

    /// `e^{-iH}`.
    pub fn exp(&self) -> Result<UnitaryMatrix> {
        Ok(UnitaryMatrix::from_trusted(linalg::hermitian_exp(&self.0, 1.0)?))
    }

    /// The generator multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self(CMat::from_fn(self.dim(), self.dim(), |i, j| self.0[(i, j)] * s))
    }
}

fn mat2_to_cmat(m: &Mat2) -> CMat {
    CMat::from_fn(2, 2, |i, j| m[i][j])
}

/// Generator of a gate on its own support: `1 x 1` for phases, `2 x 2` for
/// pair gates.
pub fn gate_to_generator(g: &GateSpec) -> HermitianGenerator {
    match g.local_unitary() {
        LocalUnitary::Site(z) => {
            HermitianGenerator(CMat::from_fn(1, 1, |_, _| c64::new(-linalg::principal_angle(z.arg()), 0.0)))
        }
        LocalUnitary::Pair(u) => HermitianGenerator(mat2_to_cmat(&linalg::unitary_spectrum2(&u).generator())),
    }
}

/// Principal-branch generator of a `1 x 1` or `2 x 2` unitary.
pub fn local_generator(u: &CMat) -> Result<HermitianGenerator> {
    if u.nrows() != u.ncols() {
        return Err(Error::DimensionMismatch { expected: u.nrows(), found: u.ncols() });
    }
    let dev = linalg::unitarity_deviation(u);
    if dev.is_nan() || dev >= UNITARITY_TOL {
        return Err(Error::NotUnitary(dev));
    }
    match u.nrows() {
        1 => Ok(HermitianGenerator(CMat::from_fn(1, 1, |_, _| {
            c64::new(-linalg::principal_angle(u[(0, 0)].arg()), 0.0)
        }))),
        2 => {
            let m = [[u[(0, 0)], u[(0, 1)]], [u[(1, 0)], u[(1, 1)]]];
            Ok(HermitianGenerator(mat2_to_cmat(&linalg::unitary_spectrum2(&m).generator())))
        }
        d => Err(Error::UnsupportedDimension(d)),
    }
}

/// Whether one noise draw is shared by a whole Hamiltonian step or each gate
/// gets its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseGranularity {
    #[default]
    PerStep,
    PerGate,
}

/// Independent noise source inside one realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    /// Forward QQFT along spatial axis `k`.
    Forward(usize),
    /// Inverse QQFT along spatial axis `k`.
    Inverse(usize),
    /// The diagonal momentum-space evolution.
    Diagonal,
}

impl Channel {
    fn index(self) -> u128 {
        match self {
            Channel::Forward(k) => 2 * k as u128,
            Channel::Inverse(k) => 2 * k as u128 + 1,
            Channel::Diagonal => 64,
        }
    }
}

// Channels start 2^48 words apart in the ChaCha keystream.
const CHANNEL_STRIDE_BITS: u32 = 48;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma: f64,
    pub seed: u64,
    /// Realization index.
    pub stream_id: u64,
    #[serde(default)]
    pub granularity: NoiseGranularity,
    /// Also perturb the diagonal evolution `e^{-i H_D T}`.
    #[serde(default)]
    pub on_diagonal: bool,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::noiseless()
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self { sigma: 0.0, seed: 0, stream_id: 0, granularity: NoiseGranularity::PerStep, on_diagonal: false }
    }

    pub fn new(sigma: f64, seed: u64, stream_id: u64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidSize(format!("noise sigma must be finite and >= 0, got {sigma}")));
        }
        Ok(Self { sigma, seed, stream_id, ..Self::noiseless() })
    }

    pub fn with_stream(mut self, stream_id: u64) -> Self {
        self.stream_id = stream_id;
        self
    }

    pub fn with_granularity(mut self, granularity: NoiseGranularity) -> Self {
        self.granularity = granularity;
        self
    }

    pub fn with_diagonal(mut self, on: bool) -> Self {
        self.on_diagonal = on;
        self
    }

    pub fn is_noiseless(&self) -> bool {
        self.sigma == 0.0
    }

    /// Deterministic draw sequence for one channel of this realization.
    pub fn stream(&self, channel: Channel) -> NoiseStream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng.set_word_pos(channel.index() << CHANNEL_STRIDE_BITS);
        NoiseStream { rng, sigma: self.sigma }
    }
}

pub struct NoiseStream {
    rng: ChaCha8Rng,
    sigma: f64,
}

impl NoiseStream {
    /// Next relative generator error `delta ~ N(0, sigma^2)`.
    pub fn next_delta(&mut self) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        self.sigma * z
    }
}

fn noisy_local(g: &GateSpec, delta: f64) -> LocalUnitary {
    let exact = g.local_unitary();
    if delta == 0.0 {
        return exact;
    }
    let s = 1.0 + delta;
    match exact {
        LocalUnitary::Site(z) => LocalUnitary::Site(c64::cis(s * linalg::principal_angle(z.arg()))),
        LocalUnitary::Pair(u) => LocalUnitary::Pair(linalg::unitary_spectrum2(&u).power(s)),
    }
}

/// `prod_s e^{-i (1 + delta_s) H^[s]}` for one realization of `noise` on `channel`.
pub fn apply_noisy_sequence(seq: &CircuitSequence, noise: &NoiseModel, channel: Channel) -> UnitaryMatrix {
    let mut stream = noise.stream(channel);
    let mut u = linalg::identity(seq.n_sites());
    for step in seq.steps() {
        let mut delta = match noise.granularity {
            NoiseGranularity::PerStep => stream.next_delta(),
            NoiseGranularity::PerGate => 0.0,
        };
        for g in step {
            if noise.granularity == NoiseGranularity::PerGate {
                delta = stream.next_delta();
            }
            apply_local(&mut u, g.site, &noisy_local(g, delta));
        }
    }
    UnitaryMatrix::from_trusted(u)
}

/// Noisy inverse: the adjoint of an independent noisy forward run.
pub fn apply_noisy_inverse(seq: &CircuitSequence, noise: &NoiseModel, channel: Channel) -> UnitaryMatrix {
    apply_noisy_sequence(seq, noise, channel).adjoint()
}

pub fn tensor_product(a: &UnitaryMatrix, b: &UnitaryMatrix) -> Result<UnitaryMatrix> {
    tensor_product_with_limit(a, b, DEFAULT_MAX_DIM)
}

pub fn tensor_product_with_limit(a: &UnitaryMatrix, b: &UnitaryMatrix, max_dim: usize) -> Result<UnitaryMatrix> {
    let dim = a
        .dim()
        .checked_mul(b.dim())
        .ok_or(Error::DimensionOverflow(usize::MAX, max_dim))?;
    if dim > max_dim {
        return Err(Error::DimensionOverflow(dim, max_dim));
    }
    Ok(UnitaryMatrix::from_trusted(linalg::kron(a.as_mat(), b.as_mat())))
}

/// Block-diagonal `e^{-i H(m) T}` in the shared composite layout.
pub fn diagonal_momentum_evolution(model: &MomentumModel, time: f64) -> Result<UnitaryMatrix> {
    let l = model.l();
    let mut u = CMat::zeros(model.dim(), model.dim());
    for (p, h) in model.blocks().iter().enumerate() {
        let dev = linalg::hermiticity_deviation(h);
        if dev >= HERMITICITY_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let block = linalg::hermitian_exp(h, time)?;
        for a in 0..l {
            for b in 0..l {
                u[(p * l + a, p * l + b)] = block[(a, b)];
            }
        }
    }
    Ok(UnitaryMatrix::from_trusted(u))
}

/// Diagonal evolution with the whole layer's generator scaled by one draw
/// from the diagonal channel when `noise.on_diagonal` is set.
pub fn noisy_diagonal_evolution(model: &MomentumModel, time: f64, noise: &NoiseModel) -> Result<UnitaryMatrix> {
    let scale = if noise.on_diagonal { 1.0 + noise.stream(Channel::Diagonal).next_delta() } else { 1.0 };
    diagonal_momentum_evolution(model, time * scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_radix2_qqft, sequence_to_unitary, GateKind};

    fn local_dense(g: &GateSpec) -> CMat {
        match g.local_unitary() {
            LocalUnitary::Site(z) => CMat::from_fn(1, 1, |_, _| z),
            LocalUnitary::Pair(m) => mat2_to_cmat(&m),
        }
    }

    #[test]
    fn generator_roundtrip_on_every_kind() {
        let gates = [
            GateSpec::swap(0, 0),
            GateSpec::mix(0, std::f64::consts::FRAC_PI_4, 0.0, 0),
            GateSpec::mix(0, 0.3, -2.0, 0),
            GateSpec::mix(0, 0.0, 0.0, 0),
            GateSpec::phase(0, 2.5, 0),
            GateSpec::phase(0, -std::f64::consts::PI, 0),
        ];
        for g in &gates {
            let h = gate_to_generator(g);
            assert!(linalg::hermiticity_deviation(h.as_mat()) < 1e-14);
            let back = h.exp().unwrap();
            assert!(linalg::max_abs_diff(back.as_mat(), &local_dense(g)) < 1e-10, "{g:?}");
        }
    }

    #[test]
    fn swap_generator_spectrum() {
        let h = gate_to_generator(&GateSpec::swap(0, 0));
        let (vals, _) = linalg::hermitian_eigen(h.as_mat()).unwrap();
        // e^{-iH} has eigenphases 0 and +pi, so H has eigenvalues -pi and 0
        assert!((vals[0] + std::f64::consts::PI).abs() < 1e-12);
        assert!(vals[1].abs() < 1e-12);
    }

    #[test]
    fn identity_has_zero_generator() {
        let h = local_generator(&linalg::identity(2)).unwrap();
        assert!(h.as_mat().norm_max() < 1e-15);
        assert!(local_generator(&CMat::from_fn(2, 2, |_, _| c64::new(1.0, 0.0))).is_err());
        assert!(matches!(local_generator(&linalg::identity(3)), Err(Error::UnsupportedDimension(3))));
    }

    #[test]
    fn noiseless_matches_exact_product() {
        let seq = build_radix2_qqft(3).unwrap();
        let exact = sequence_to_unitary(&seq);
        for gran in [NoiseGranularity::PerStep, NoiseGranularity::PerGate] {
            let noise = NoiseModel::noiseless().with_granularity(gran);
            let u = apply_noisy_sequence(&seq, &noise, Channel::Forward(0));
            assert_eq!(linalg::max_abs_diff(u.as_mat(), &exact), 0.0);
        }
    }

    #[test]
    fn noisy_products_are_unitary_and_reproducible() {
        let seq = build_radix2_qqft(2).unwrap();
        let noise = NoiseModel::new(1e-2, 7, 3).unwrap();
        let a = apply_noisy_sequence(&seq, &noise, Channel::Forward(0));
        let b = apply_noisy_sequence(&seq, &noise, Channel::Forward(0));
        assert!(a.bit_identical(&b));
        assert!(a.unitarity_deviation() < 1e-12);
        let c = apply_noisy_sequence(&seq, &noise, Channel::Inverse(0));
        assert!(!a.bit_identical(&c));
        let d = apply_noisy_sequence(&seq, &noise.with_stream(4), Channel::Forward(0));
        assert!(!a.bit_identical(&d));
    }

    #[test]
    fn error_grows_linearly_in_sigma() {
        let seq = build_radix2_qqft(3).unwrap();
        let exact = sequence_to_unitary(&seq);
        let errs: Vec<f64> = [1e-5, 1e-4, 1e-3]
            .iter()
            .map(|&s| {
                let u = apply_noisy_sequence(&seq, &NoiseModel::new(s, 11, 0).unwrap(), Channel::Forward(0));
                linalg::max_abs_diff(u.as_mat(), &exact)
            })
            .collect();
        // same normal draws at every sigma, so the ratios sit near 10
        for w in errs.windows(2) {
            let r = w[1] / w[0];
            assert!((9.0..11.0).contains(&r), "ratio {r} from {errs:?}");
        }
    }

    #[test]
    fn draws_follow_the_requested_width() {
        let noise = NoiseModel::new(0.5, 1, 0).unwrap();
        let mut s = noise.stream(Channel::Diagonal);
        let xs: Vec<f64> = (0..20000).map(|_| s.next_delta()).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.02);
        assert!((var.sqrt() - 0.5).abs() < 0.02);
        assert!(NoiseModel::new(-1.0, 0, 0).is_err());
    }

    #[test]
    fn kron_of_two_point_dfts_is_2d_dft() {
        let h = UnitaryMatrix::new(linalg::dft_matrix(2)).unwrap();
        let k = tensor_product(&h, &h).unwrap();
        // brute-force 2D DFT on a 2x2 grid, row-major (x, y) -> 2x + y
        let want = CMat::from_fn(4, 4, |r, c| {
            let (kx, ky, x, y) = (r / 2, r % 2, c / 2, c % 2);
            let phase = std::f64::consts::PI * ((kx * x + ky * y) as f64);
            c64::cis(phase) * 0.5
        });
        assert!(linalg::max_abs_diff(k.as_mat(), &want) < 1e-15);
        let i2 = UnitaryMatrix::identity(2);
        assert!(linalg::max_abs_diff(tensor_product(&i2, &i2).unwrap().as_mat(), &linalg::identity(4)) == 0.0);
        let i3 = UnitaryMatrix::identity(3);
        assert_eq!(tensor_product(&i3, &i2).unwrap().dim(), 6);
        assert!(matches!(tensor_product_with_limit(&i3, &i2, 5), Err(Error::DimensionOverflow(6, 5))));
    }

    #[test]
    fn unitary_constructor_checks() {
        assert!(UnitaryMatrix::new(linalg::dft_matrix(5)).is_ok());
        let mut m = linalg::identity(2);
        m[(0, 0)] = c64::new(1.1, 0.0);
        assert!(matches!(UnitaryMatrix::new(m), Err(Error::NotUnitary(_))));
        assert!(HermitianGenerator::new(CMat::from_fn(2, 2, |i, j| c64::new(0.0, (i + 2 * j) as f64))).is_err());
    }

    #[test]
    fn csv_dump_is_row_major_pairs() {
        let u = UnitaryMatrix::new(linalg::dft_matrix(2)).unwrap();
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].split(',').count(), 4);
        assert!(rows[1].contains("-0.7071067811865475"));
    }

    #[test]
    fn per_gate_noise_uses_more_draws() {
        let seq = build_radix2_qqft(3).unwrap();
        let base = NoiseModel::new(1e-2, 5, 0).unwrap();
        let a = apply_noisy_sequence(&seq, &base, Channel::Forward(0));
        let b = apply_noisy_sequence(&seq, &base.with_granularity(NoiseGranularity::PerGate), Channel::Forward(0));
        assert!(!a.bit_identical(&b));
        assert!(seq.gates().iter().any(|g| matches!(g.kind, GateKind::Mix { .. })));
    }
}
