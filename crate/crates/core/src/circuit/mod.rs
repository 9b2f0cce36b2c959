//! Strictly local gate sequences realizing the one-dimensional QQFT.
//!
//! A sequence is an ordered list of nearest-neighbour gates. Each gate carries
//! a `step` tag: gates sharing a step act on disjoint sites and together form
//! one Hamiltonian step `H_p^[s]`. The sequence depth `D` is the number of
//! steps.

mod givens;
mod radix2;
mod wire;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat, Mat2, ONE, ZERO};

pub use givens::build_generic_qqft;
pub use radix2::{build_radix2_qqft, reorder_layers, reorder_permutation, MAX_RADIX2_EXPONENT};
pub use wire::SCHEMA;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GateKind {
    /// Exchange of the pair `(site, site + 1)`.
    Swap,
    /// `[[cos t, e^{i phi} sin t], [sin t, -e^{i phi} cos t]]` on `(site, site + 1)`.
    Mix { theta: f64, phi: f64 },
    /// `e^{i lambda}` on `site`.
    Phase { lambda: f64 },
}

/// The local action of a gate on the sites it touches.
#[derive(Debug, Clone, Copy)]
pub enum LocalUnitary {
    Site(c64),
    Pair(Mat2),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateSpec {
    pub kind: GateKind,
    /// Lowest site the gate touches.
    pub site: usize,
    /// Hamiltonian step this gate belongs to.
    pub step: usize,
}

impl GateSpec {
    pub fn swap(site: usize, step: usize) -> Self {
        Self { kind: GateKind::Swap, site, step }
    }

    pub fn mix(site: usize, theta: f64, phi: f64, step: usize) -> Self {
        Self { kind: GateKind::Mix { theta, phi }, site, step }
    }

    pub fn phase(site: usize, lambda: f64, step: usize) -> Self {
        Self { kind: GateKind::Phase { lambda }, site, step }
    }

    /// Sites touched; pair gates always touch adjacent sites.
    pub fn sites(&self) -> std::ops::Range<usize> {
        match self.kind {
            GateKind::Phase { .. } => self.site..self.site + 1,
            _ => self.site..self.site + 2,
        }
    }

    pub fn local_unitary(&self) -> LocalUnitary {
        match self.kind {
            GateKind::Swap => LocalUnitary::Pair([[ZERO, ONE], [ONE, ZERO]]),
            GateKind::Mix { theta, phi } => {
                let (s, c) = theta.sin_cos();
                let e = c64::cis(phi);
                LocalUnitary::Pair([
                    [c64::new(c, 0.0), e * s],
                    [c64::new(s, 0.0), -e * c],
                ])
            }
            GateKind::Phase { lambda } => LocalUnitary::Site(c64::cis(lambda)),
        }
    }

    /// The gate embedded in an `n_sites`-dimensional single-particle space.
    pub fn dense(&self, n_sites: usize) -> Result<CMat> {
        if self.sites().end > n_sites {
            return Err(Error::GateOutOfBounds { site: self.site, n_sites });
        }
        let mut m = linalg::identity(n_sites);
        apply_local(&mut m, self.site, &self.local_unitary());
        Ok(m)
    }
}

pub(crate) fn apply_local(m: &mut CMat, site: usize, u: &LocalUnitary) {
    match u {
        LocalUnitary::Site(z) => linalg::apply_site_left(m, site, *z),
        LocalUnitary::Pair(g) => linalg::apply_pair_left(m, site, g),
    }
}

/// Which construction produced a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Analytic construction for `N = 2^n`, `D = (n+2) 2^{n-1} - n - 1`.
    Radix2,
    /// Nearest-neighbour Givens elimination, `D <= N^2`.
    Givens,
}

impl Route {
    pub fn scaling(&self) -> &'static str {
        match self {
            Route::Radix2 => "D ~ N log N",
            Route::Givens => "D ~ N^2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSequence {
    n_sites: usize,
    route: Route,
    gates: Vec<GateSpec>,
    depth: usize,
}

impl CircuitSequence {
    /// Validates locality, bounds, step ordering and step disjointness.
    pub fn new(n_sites: usize, route: Route, gates: Vec<GateSpec>) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidSize("a sequence needs at least one site".into()));
        }
        let mut last_step = 0;
        let mut touched = vec![usize::MAX; n_sites];
        for g in &gates {
            if g.sites().end > n_sites {
                return Err(Error::GateOutOfBounds { site: g.site, n_sites });
            }
            if g.step < last_step {
                return Err(Error::Schema(format!(
                    "step tags must be non-decreasing (step {} after {})",
                    g.step, last_step
                )));
            }
            last_step = g.step;
            for s in g.sites() {
                if touched[s] == g.step {
                    return Err(Error::OverlappingStep { step: g.step, site: s });
                }
                touched[s] = g.step;
            }
        }
        let depth = count_steps(&gates);
        Ok(Self { n_sites, route, gates, depth })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn route(&self) -> Route {
        self.route
    }

    pub fn gates(&self) -> &[GateSpec] {
        &self.gates
    }

    /// Number of Hamiltonian steps `D`.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    /// Gates grouped by step, in application order.
    pub fn steps(&self) -> impl Iterator<Item = &[GateSpec]> {
        self.gates.chunk_by(|a, b| a.step == b.step)
    }

    pub fn to_json(&self) -> Result<String> {
        wire::to_json(self)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        wire::from_json(s)
    }
}

fn count_steps(gates: &[GateSpec]) -> usize {
    gates.chunk_by(|a, b| a.step == b.step).count()
}

/// Dense product of all gates, first gate applied first.
pub fn sequence_to_unitary(seq: &CircuitSequence) -> CMat {
    let mut u = linalg::identity(seq.n_sites);
    for g in &seq.gates {
        apply_local(&mut u, g.site, &g.local_unitary());
    }
    u
}

/// `D = (n+2) 2^{n-1} - n - 1`.
pub fn depth_formula(n: u32) -> Result<u64> {
    if n == 0 || n > 62 {
        return Err(Error::InvalidSize(format!("depth formula needs 1 <= n <= 62, got {n}")));
    }
    let n64 = n as u64;
    Ok((n64 + 2) * (1u64 << (n - 1)) - n64 - 1)
}

/// The same count written as `sum_q (2^{n-1} + 2^q - 1) = (2^{n-1} - 1) n + 2^n - 1`.
pub fn depth_formula_stepwise(n: u32) -> Result<u64> {
    if n == 0 || n > 62 {
        return Err(Error::InvalidSize(format!("depth formula needs 1 <= n <= 62, got {n}")));
    }
    let n64 = n as u64;
    Ok(((1u64 << (n - 1)) - 1) * n64 + (1u64 << n) - 1)
}

/// Binary digits of a site or momentum index, least significant first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitDecomposition {
    index: usize,
    bits: Vec<u8>,
}

impl BitDecomposition {
    pub fn new(index: usize, n_bits: u32) -> Result<Self> {
        if n_bits < usize::BITS && index >> n_bits != 0 {
            return Err(Error::OutOfRange { what: "bit decomposition", index, limit: 1 << n_bits });
        }
        let bits = (0..n_bits).map(|i| ((index >> i) & 1) as u8).collect();
        Ok(Self { index, bits })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// Bit `k_i`.
    pub fn bit(&self, i: usize) -> u8 {
        self.bits[i]
    }

    /// Bits ordered `(k_{n-1}, ..., k_0)`.
    pub fn msb_first(&self) -> Vec<u8> {
        self.bits.iter().rev().copied().collect()
    }

    pub fn reconstruct(&self) -> usize {
        self.bits
            .iter()
            .enumerate()
            .map(|(i, &b)| (b as usize) << i)
            .sum()
    }
}

/// The 2x2 block shared by every pair in the mixing layer of stage `q`.
pub(crate) fn hadamard_like(phi: f64) -> GateKind {
    GateKind::Mix { theta: std::f64::consts::FRAC_PI_4, phi }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_formulas_agree() {
        for n in 1..=40 {
            assert_eq!(depth_formula(n).unwrap(), depth_formula_stepwise(n).unwrap(), "n={n}");
        }
        assert_eq!(depth_formula(1).unwrap(), 1);
        assert_eq!(depth_formula(2).unwrap(), 5);
        assert_eq!(depth_formula(4).unwrap(), 43);
        assert_eq!(depth_formula(5).unwrap(), 106);
        assert!(depth_formula(0).is_err());
    }

    #[test]
    fn bits_reconstruct() {
        for idx in 0..64 {
            let b = BitDecomposition::new(idx, 6).unwrap();
            assert_eq!(b.reconstruct(), idx);
        }
        let b = BitDecomposition::new(6, 3).unwrap();
        assert_eq!(b.msb_first(), vec![1, 1, 0]);
        assert!(BitDecomposition::new(8, 3).is_err());
    }

    #[test]
    fn mix_is_unitary_and_swap_permutes() {
        let g = GateSpec::mix(0, 0.3, 1.2, 0);
        if let LocalUnitary::Pair(m) = g.local_unitary() {
            assert!(linalg::mat2_unitarity_deviation(&m) < 1e-15);
        } else {
            panic!("mix is a pair gate");
        }
        let s = GateSpec::swap(1, 0).dense(4).unwrap();
        assert_eq!(s[(1, 2)], ONE);
        assert_eq!(s[(2, 1)], ONE);
        assert_eq!(s[(0, 0)], ONE);
        assert_eq!(s[(1, 1)], ZERO);
    }

    #[test]
    fn empty_sequence_is_identity() {
        let seq = CircuitSequence::new(3, Route::Givens, vec![]).unwrap();
        assert_eq!(seq.depth(), 0);
        assert_eq!(linalg::max_abs_diff(&sequence_to_unitary(&seq), &linalg::identity(3)), 0.0);
    }

    #[test]
    fn rejects_bad_sequences() {
        assert!(matches!(
            CircuitSequence::new(3, Route::Givens, vec![GateSpec::swap(2, 0)]),
            Err(Error::GateOutOfBounds { .. })
        ));
        assert!(matches!(
            CircuitSequence::new(4, Route::Givens, vec![GateSpec::swap(0, 0), GateSpec::swap(1, 0)]),
            Err(Error::OverlappingStep { .. })
        ));
        assert!(CircuitSequence::new(4, Route::Givens, vec![GateSpec::swap(0, 1), GateSpec::swap(2, 0)]).is_err());
        assert!(GateSpec::phase(4, 0.1, 0).dense(4).is_err());
    }
}
