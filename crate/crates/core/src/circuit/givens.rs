//! Nearest-neighbour decomposition of the DFT for arbitrary `N`.
//!
//! The DFT matrix is reduced to a diagonal by eliminating each column from
//! the bottom up with adjacent-pair rotations. Reversing the eliminations
//! gives a sequence of `Mix` and `Phase` gates, which is then packed into
//! steps as early as site availability allows.

use super::{CircuitSequence, GateKind, GateSpec, Route};
use crate::error::{Error, Result};
use crate::linalg::{self, c64};

struct Elimination {
    row: usize,
    theta: f64,
    lambda: f64,
}

pub fn build_generic_qqft(n: usize) -> Result<CircuitSequence> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("generic QQFT needs N >= 2, got {n}")));
    }
    let mut w = linalg::dft_matrix(n);
    let mut eliminations = Vec::with_capacity(n * (n - 1) / 2);
    for c in 0..n - 1 {
        for r in (c + 1..n).rev() {
            let a = w[(r - 1, c)];
            let b = w[(r, c)];
            let lambda = a.arg() - b.arg();
            let theta = b.norm().atan2(a.norm());
            let (s, co) = theta.sin_cos();
            let e = c64::cis(lambda);
            let g = [
                [c64::new(co, 0.0), e * s],
                [c64::new(s, 0.0), -e * co],
            ];
            linalg::apply_pair_left(&mut w, r - 1, &g);
            eliminations.push(Elimination { row: r, theta, lambda });
        }
    }

    // Omega = G_1^dag ... G_K^dag diag(w_ii); each G^dag = diag(1, e^{-i lambda}) M(theta, 0).
    let mut kinds: Vec<(GateKind, usize)> = (0..n)
        .map(|i| (GateKind::Phase { lambda: w[(i, i)].arg() }, i))
        .collect();
    for el in eliminations.iter().rev() {
        kinds.push((GateKind::Mix { theta: el.theta, phi: 0.0 }, el.row - 1));
        kinds.push((GateKind::Phase { lambda: -el.lambda }, el.row));
    }

    let mut busy = vec![0usize; n];
    let mut gates: Vec<GateSpec> = kinds
        .into_iter()
        .map(|(kind, site)| {
            let mut g = GateSpec { kind, site, step: 0 };
            g.step = g.sites().map(|s| busy[s]).max().unwrap_or(0);
            for s in g.sites() {
                busy[s] = g.step + 1;
            }
            g
        })
        .collect();
    gates.sort_by_key(|g| g.step);
    CircuitSequence::new(n, Route::Givens, gates)
}
