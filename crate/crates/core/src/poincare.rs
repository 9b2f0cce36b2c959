//! 1+1D Poincaré crystal on an `N`-site ring.
//!
//! Spacetime points `(m, n)` (time step, site) are grouped into orbits of the
//! integer Lorentz matrix `L = [[g, 1], [g^2 - 1, g]]` acting mod `N`. A
//! dispersion whose graph `{(k, j(k))}` is invariant under the dual action on
//! momentum space makes the retarded propagator constant on each orbit.
//! `S_L` measures how far noisy hopping probabilities drift from that
//! pattern and `S_P` how far they drift from the clean result.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{apply_noisy_inverse, apply_noisy_sequence, Channel, NoiseModel};
use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat};
use crate::protocol::qqft_sequence;
use crate::stats;

pub const DEFAULT_SITES: usize = 33;
pub const DEFAULT_GAMMA: usize = 2;

/// Search nodes explored before [`build_dispersion`] gives up.
pub const DISPERSION_SEARCH_BUDGET: usize = 2_000_000;

/// `(m, n) -> (g m + n, (g^2 - 1) m + g n) mod N`.
pub fn lorentz_map(m: usize, n: usize, gamma: usize, big_n: usize) -> (usize, usize) {
    let g = gamma % big_n;
    let g2 = (gamma * gamma - 1) % big_n;
    ((g * m + n) % big_n, (g2 * m + g * n) % big_n)
}

/// Dual action on `(k, j)`: `(g k + j, (g^2 - 1) k + g j) mod N`.
pub fn momentum_action(k: usize, j: usize, gamma: usize, big_n: usize) -> (usize, usize) {
    lorentz_map(k, j, gamma, big_n)
}

fn orbit(start: (usize, usize), step: impl Fn(usize, usize) -> (usize, usize)) -> Vec<(usize, usize)> {
    let mut out = vec![start];
    let mut cur = step(start.0, start.1);
    while cur != start {
        out.push(cur);
        cur = step(cur.0, cur.1);
    }
    out
}

fn check_lattice_args(big_n: usize, gamma: usize) -> Result<()> {
    if big_n < 2 {
        return Err(Error::InvalidSize(format!("need N >= 2, got {big_n}")));
    }
    if gamma < 2 {
        return Err(Error::InvalidSize(format!("need gamma >= 2, got {gamma}")));
    }
    Ok(())
}

/// The `N x N` spacetime grid partitioned into Lorentz orbits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LorentzLattice {
    n: usize,
    gamma: usize,
    classes: Vec<Vec<(usize, usize)>>,
    class_of: Vec<usize>,
}

impl LorentzLattice {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    /// `L` as an integer matrix; its determinant is 1.
    pub fn matrix(&self) -> [[i64; 2]; 2] {
        let g = self.gamma as i64;
        [[g, 1], [g * g - 1, g]]
    }

    /// Orbits in discovery order, each listed along the map.
    pub fn classes(&self) -> &[Vec<(usize, usize)>] {
        &self.classes
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        self.classes.iter().map(Vec::len).collect()
    }

    pub fn class_of(&self, m: usize, n: usize) -> usize {
        self.class_of[m * self.n + n]
    }
}

/// Orbits of [`lorentz_map`] on `Z_N x Z_N`.
pub fn equivalence_classes(big_n: usize, gamma: usize) -> Result<LorentzLattice> {
    check_lattice_args(big_n, gamma)?;
    let mut class_of = vec![usize::MAX; big_n * big_n];
    let mut classes = Vec::new();
    for m in 0..big_n {
        for n in 0..big_n {
            if class_of[m * big_n + n] != usize::MAX {
                continue;
            }
            let o = orbit((m, n), |a, b| lorentz_map(a, b, gamma, big_n));
            for &(a, b) in &o {
                class_of[a * big_n + b] = classes.len();
            }
            classes.push(o);
        }
    }
    Ok(LorentzLattice { n: big_n, gamma, classes, class_of })
}

/// Quantized dispersion `E_k = 2 pi j(k) / (N tau)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dispersion {
    pub n: usize,
    pub gamma: usize,
    pub j: Vec<usize>,
}

impl Dispersion {
    /// `E_k tau`, with the period `tau` as the time unit.
    pub fn energy(&self, k: usize) -> f64 {
        2.0 * PI * self.j[k] as f64 / self.n as f64
    }

    /// The graph of `j` is mapped onto itself by [`momentum_action`].
    pub fn is_lorentz_invariant(&self) -> bool {
        (0..self.n).all(|k| {
            let (k2, j2) = momentum_action(k, self.j[k], self.gamma, self.n);
            self.j[k2] == j2
        })
    }

    /// `j(-k) = -j(k) mod N`.
    pub fn is_odd(&self) -> bool {
        (0..self.n).all(|k| self.j[(self.n - k) % self.n] == (self.n - self.j[k]) % self.n)
    }
}

struct Search<'a> {
    n: usize,
    gamma: usize,
    odd: bool,
    table: Vec<Option<usize>>,
    nodes: usize,
    budget: &'a mut usize,
}

impl Search<'_> {
    /// Depth-first over `k` ascending and `j` ascending, so the first table
    /// found is the lexicographically smallest.
    fn run(&mut self, mut k: usize) -> Option<Vec<usize>> {
        while k < self.n && self.table[k].is_some() {
            k += 1;
        }
        if k == self.n {
            let table: Vec<usize> = self.table.iter().map(|x| x.unwrap_or(0)).collect();
            return table.iter().any(|&x| x != 0).then_some(table);
        }
        for j in 0..self.n {
            self.nodes += 1;
            if self.nodes > *self.budget {
                return None;
            }
            let (n, gamma) = (self.n, self.gamma);
            let act = |a: usize, b: usize| momentum_action(a, b, gamma, n);
            let mut pts = orbit((k, j), act);
            if self.odd {
                pts.extend(orbit(((n - k) % n, (n - j) % n), act));
            }
            let mut added = Vec::new();
            let mut ok = true;
            for (kk, jj) in pts {
                match self.table[kk] {
                    Some(cur) if cur != jj => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        self.table[kk] = Some(jj);
                        added.push(kk);
                    }
                }
            }
            if ok {
                if let Some(t) = self.run(k + 1) {
                    return Some(t);
                }
            }
            for kk in added {
                self.table[kk] = None;
            }
        }
        None
    }
}

/// Smallest nontrivial Lorentz-invariant dispersion, odd ones first.
pub fn build_dispersion(big_n: usize, gamma: usize) -> Result<Dispersion> {
    check_lattice_args(big_n, gamma)?;
    let mut budget = DISPERSION_SEARCH_BUDGET;
    for odd in [true, false] {
        let mut s = Search { n: big_n, gamma, odd, table: vec![None; big_n], nodes: 0, budget: &mut budget };
        if let Some(j) = s.run(0) {
            return Ok(Dispersion { n: big_n, gamma, j });
        }
    }
    let mut seen = vec![false; big_n * big_n];
    let mut orbits = Vec::new();
    for k in 0..big_n {
        for j in 0..big_n {
            if !seen[k * big_n + j] {
                let o = orbit((k, j), |a, b| momentum_action(a, b, gamma, big_n));
                for &(a, b) in &o {
                    seen[a * big_n + b] = true;
                }
                orbits.push(o.len());
            }
        }
    }
    Err(Error::NoDispersion { n: big_n, gamma, orbits })
}

/// How the single-particle QQFT is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreensRoute {
    /// Compiled (and possibly noisy) gate sequence.
    Qqft,
    /// The exact DFT matrix; noise is ignored.
    ExactDft,
}

/// Hopping probabilities `P[n1][m][n] = |U(m)[n1 + n, n1]|^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTensor {
    n: usize,
    data: Vec<f64>,
}

impl ProbabilityTensor {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, n1: usize, m: usize, n: usize) -> f64 {
        self.data[(n1 * self.n + m) * self.n + n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Largest `|sum_n P[n1][m][n] - 1|`.
    pub fn normalization_error(&self) -> f64 {
        self.data
            .chunks(self.n)
            .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct GreensResult {
    /// `G[(n, m)] = -i U(m)[n, 0]`.
    pub g: CMat,
    pub p: ProbabilityTensor,
}

/// Retarded Green's function at stroboscopic times `m = 0..N`.
///
/// `U(m) = V diag(e^{-i m E_k}) W^dag` with `V` the QQFT and `W^dag` an
/// independent realization of its inverse. One realization of each is
/// shared by every `m`.
pub fn greens_function(disp: &Dispersion, noise: &NoiseModel, route: GreensRoute) -> Result<GreensResult> {
    let n = disp.n;
    if disp.j.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: disp.j.len() });
    }
    let (v, w_dag) = match route {
        GreensRoute::ExactDft => {
            let f = linalg::dft_matrix(n);
            let fd = linalg::adjoint(&f);
            (f, fd)
        }
        GreensRoute::Qqft => {
            let seq = qqft_sequence(n)?;
            (
                apply_noisy_sequence(&seq, noise, Channel::Forward(0)).into_inner(),
                apply_noisy_inverse(&seq, noise, Channel::Inverse(0)).into_inner(),
            )
        }
    };
    let scale = if noise.on_diagonal && route == GreensRoute::Qqft {
        1.0 + noise.stream(Channel::Diagonal).next_delta()
    } else {
        1.0
    };
    let mut g = CMat::zeros(n, n);
    let mut data = vec![0.0; n * n * n];
    for m in 0..n {
        let phases: Vec<c64> = (0..n).map(|k| c64::cis(-(m as f64) * scale * disp.energy(k))).collect();
        let vd = CMat::from_fn(n, n, |r, k| v[(r, k)] * phases[k]);
        let u = &vd * &w_dag;
        for row in 0..n {
            g[(row, m)] = c64::new(0.0, -1.0) * u[(row, 0)];
        }
        for n1 in 0..n {
            for dn in 0..n {
                data[(n1 * n + m) * n + dn] = u[((n1 + dn) % n, n1)].norm_sqr();
            }
        }
    }
    Ok(GreensResult { g, p: ProbabilityTensor { n, data } })
}

/// Largest `|G[n, m] - G[n', m']|` over `(m', n') = L (m, n)`.
pub fn lorentz_deviation(g: &CMat, lattice: &LorentzLattice) -> f64 {
    let n = lattice.n();
    let mut worst = 0.0f64;
    for m in 0..n {
        for s in 0..n {
            let (m2, s2) = lorentz_map(m, s, lattice.gamma(), n);
            worst = worst.max((g[(s, m)] - g[(s2, m2)]).norm());
        }
    }
    worst
}

/// `S_L = sqrt(1/N^3 sum_alpha sum_{n1} sum_{(m,n) in C_alpha} (P - Pbar_alpha)^2)`.
pub fn s_lorentz(p: &ProbabilityTensor, lattice: &LorentzLattice) -> Result<f64> {
    let n = p.n();
    if lattice.n() != n {
        return Err(Error::DimensionMismatch { expected: lattice.n(), found: n });
    }
    let mut total = 0.0;
    for class in lattice.classes() {
        let count = (class.len() * n) as f64;
        let mean = (0..n)
            .flat_map(|n1| class.iter().map(move |&(m, s)| (n1, m, s)))
            .map(|(n1, m, s)| p.get(n1, m, s))
            .sum::<f64>()
            / count;
        for n1 in 0..n {
            for &(m, s) in class {
                total += (p.get(n1, m, s) - mean).powi(2);
            }
        }
    }
    Ok((total / (n as f64).powi(3)).sqrt())
}

/// `S_P = sqrt(1/N^3 sum (P_noisy - P_clean)^2)`.
pub fn s_total(noisy: &ProbabilityTensor, clean: &ProbabilityTensor) -> Result<f64> {
    if noisy.n != clean.n {
        return Err(Error::DimensionMismatch { expected: clean.n, found: noisy.n });
    }
    let sum: f64 = noisy.data.iter().zip(&clean.data).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((sum / (noisy.n as f64).powi(3)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryRow {
    pub sigma: f64,
    pub samples: usize,
    pub mean_s_l: f64,
    pub mean_s_p: f64,
    pub stderr_s_l: f64,
    pub stderr_s_p: f64,
}

/// Mean `S_L` and `S_P` over noise samples at each sigma. Sample `r` uses
/// stream `r` of `template`; samples run on the current rayon pool and are
/// reduced in index order.
pub fn symmetry_sweep(
    disp: &Dispersion,
    lattice: &LorentzLattice,
    sigmas: &[f64],
    samples: usize,
    template: &NoiseModel,
) -> Result<Vec<SymmetryRow>> {
    if samples == 0 {
        return Err(Error::InvalidSize("need at least one sample".into()));
    }
    let clean = greens_function(disp, &NoiseModel::noiseless(), GreensRoute::Qqft)?.p;
    sigmas
        .iter()
        .map(|&sigma| {
            let base = NoiseModel { sigma, ..*template };
            let pairs: Vec<(f64, f64)> = (0..samples as u64)
                .into_par_iter()
                .map(|r| {
                    let p = greens_function(disp, &base.with_stream(r), GreensRoute::Qqft)?.p;
                    Ok((s_lorentz(&p, lattice)?, s_total(&p, &clean)?))
                })
                .collect::<Result<_>>()?;
            let sl: Vec<f64> = pairs.iter().map(|x| x.0).collect();
            let sp: Vec<f64> = pairs.iter().map(|x| x.1).collect();
            Ok(SymmetryRow {
                sigma,
                samples,
                mean_s_l: stats::mean(&sl),
                mean_s_p: stats::mean(&sp),
                stderr_s_l: stats::std_error(&sl),
                stderr_s_p: stats::std_error(&sp),
            })
        })
        .collect()
}
