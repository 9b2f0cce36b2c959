//! Analytic QQFT for `N = 2^n`.
//!
//! `Omega = Omega^[n-1] ... Omega^[0]` with
//! `Omega^[q] = R^[q] A^[q] R^[n-1]^dag`. `R^[p]` is a bit rotation of the low
//! `p + 1` index bits (`k_p <- j_0`, `k_{i-1} <- j_i`) built from nested
//! composite swaps `S^[j j'] = (j, j+1)(j+2, j+3)...(j'-1, j')`; `A^[q]` mixes
//! every pair `(2r, 2r+1)` with a relative phase set by the upper bits of `2r`.

use std::f64::consts::PI;

use super::{hadamard_like, CircuitSequence, GateSpec, Route};
use crate::error::{Error, Result};

/// Largest supported exponent; the swap count grows as `n N^2 / 8`.
pub const MAX_RADIX2_EXPONENT: u32 = 11;

fn check_exponent(n: u32) -> Result<()> {
    if n == 0 || n > MAX_RADIX2_EXPONENT {
        return Err(Error::InvalidSize(format!(
            "radix-2 QQFT needs 1 <= n <= {MAX_RADIX2_EXPONENT}, got {n}"
        )));
    }
    Ok(())
}

/// Swap layers of `R^[p]` in application order, each layer listed by the
/// lower site of every swapped pair.
///
/// The widest composite swap `S^[2^{p+1} g + 1, 2^{p+1} g + 2^{p+1} - 2]` acts
/// first and the innermost `S^[2^{p+1} g + 2^p - 1, 2^{p+1} g + 2^p]` last.
/// Blocks with different `g` are disjoint and share a layer.
pub fn reorder_layers(p: u32, n: u32) -> Result<Vec<Vec<usize>>> {
    check_exponent(n)?;
    if p >= n {
        return Err(Error::OutOfRange { what: "reorder index p", index: p as usize, limit: n as usize });
    }
    let half = 1usize << p;
    let block = half << 1;
    let blocks = 1usize << (n - p - 1);
    let layers = (1..half)
        .rev()
        .map(|t| {
            (0..blocks)
                .flat_map(|g| {
                    let lo = block * g + half - t;
                    let hi = block * g + half + t - 1;
                    (lo..hi).step_by(2)
                })
                .collect()
        })
        .collect();
    Ok(layers)
}

/// Swap gates realizing `R^[p]`, one step per composite-swap layer.
pub fn reorder_permutation(p: u32, n: u32) -> Result<Vec<GateSpec>> {
    Ok(reorder_layers(p, n)?
        .into_iter()
        .enumerate()
        .flat_map(|(step, layer)| layer.into_iter().map(move |site| GateSpec::swap(site, step)))
        .collect())
}

/// Relative phase exponent of the pair whose lower site is `site` in stage
/// `q`: `2^{n-2} j_q + 2^{n-3} j_{q-1} + ... + 2^{n-q-1} j_1`.
fn mixing_exponent(site: usize, q: u32, n: u32) -> usize {
    (1..=q)
        .map(|i| ((site >> i) & 1) << (n - 2 - (q - i)))
        .sum()
}

pub fn build_radix2_qqft(n: u32) -> Result<CircuitSequence> {
    check_exponent(n)?;
    let n_sites = 1usize << n;
    let mut gates = Vec::new();
    let mut step = 0;
    let push_layers = |gates: &mut Vec<GateSpec>, layers: &[Vec<usize>], step: &mut usize| {
        for layer in layers {
            gates.extend(layer.iter().map(|&site| GateSpec::swap(site, *step)));
            *step += 1;
        }
    };

    let top = reorder_layers(n - 1, n)?;
    let top_inverse: Vec<Vec<usize>> = top.iter().rev().cloned().collect();
    for q in 0..n {
        push_layers(&mut gates, &top_inverse, &mut step);
        for r in 0..n_sites / 2 {
            let site = 2 * r;
            let phi = 2.0 * PI * mixing_exponent(site, q, n) as f64 / n_sites as f64;
            gates.push(GateSpec { kind: hadamard_like(phi), site, step });
        }
        step += 1;
        push_layers(&mut gates, &reorder_layers(q, n)?, &mut step);
    }
    CircuitSequence::new(n_sites, Route::Radix2, gates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{depth_formula, sequence_to_unitary};
    use crate::linalg::{self, c64, CMat};

    /// `R^[p]_{kj}` straight from its delta-product definition.
    fn rotation_oracle(p: u32, n: u32) -> Vec<usize> {
        let size = 1usize << n;
        (0..size)
            .map(|j| {
                let bit = |i: u32| (j >> i) & 1;
                let mut k = 0;
                for i in p + 1..n {
                    k |= bit(i) << i;
                }
                k |= bit(0) << p;
                for i in 1..=p {
                    k |= bit(i) << (i - 1);
                }
                k
            })
            .collect()
    }

    fn swaps_as_permutation(p: u32, n: u32) -> Vec<usize> {
        // perm[j] = where the amplitude at site j ends up
        let size = 1usize << n;
        let mut pos: Vec<usize> = (0..size).collect();
        for layer in reorder_layers(p, n).unwrap() {
            for a in layer {
                for x in pos.iter_mut() {
                    if *x == a {
                        *x = a + 1;
                    } else if *x == a + 1 {
                        *x = a;
                    }
                }
            }
        }
        pos
    }

    #[test]
    fn r0_is_identity() {
        for n in 1..=5 {
            assert!(reorder_permutation(0, n).unwrap().is_empty());
        }
    }

    #[test]
    fn top_rotation_for_four_sites_is_single_swap() {
        let g = reorder_permutation(1, 2).unwrap();
        assert_eq!(g, vec![GateSpec::swap(1, 0)]);
        // (j1 j0) -> (j0 j1): 0->0, 1->2, 2->1, 3->3
        assert_eq!(rotation_oracle(1, 2), vec![0, 2, 1, 3]);
        assert_eq!(swaps_as_permutation(1, 2), vec![0, 2, 1, 3]);
    }

    #[test]
    fn swap_layers_realize_bit_rotation() {
        for n in 1..=7 {
            for p in 0..n {
                assert_eq!(swaps_as_permutation(p, n), rotation_oracle(p, n), "p={p} n={n}");
            }
        }
    }

    #[test]
    fn out_of_range_p_rejected() {
        assert!(reorder_permutation(3, 3).is_err());
        assert!(build_radix2_qqft(0).is_err());
        assert!(build_radix2_qqft(MAX_RADIX2_EXPONENT + 1).is_err());
    }

    #[test]
    fn depth_matches_formula() {
        for n in 1..=8 {
            let seq = build_radix2_qqft(n).unwrap();
            assert_eq!(seq.depth() as u64, depth_formula(n).unwrap());
        }
        let one = build_radix2_qqft(1).unwrap();
        assert_eq!(one.gate_count(), 1);
        assert!(matches!(one.gates()[0].kind, crate::circuit::GateKind::Mix { .. }));
    }

    #[test]
    fn four_site_column_one() {
        let u = sequence_to_unitary(&build_radix2_qqft(2).unwrap());
        let expect = [c64::new(0.5, 0.0), c64::new(0.0, 0.5), c64::new(-0.5, 0.0), c64::new(0.0, -0.5)];
        for (k, e) in expect.iter().enumerate() {
            assert!((u[(k, 1)] - e).norm() < 1e-14);
        }
    }

    #[test]
    fn reproduces_dft_up_to_64_sites() {
        for n in 1..=6 {
            let u = sequence_to_unitary(&build_radix2_qqft(n).unwrap());
            let err = linalg::max_abs_diff(&u, &linalg::dft_matrix(1 << n));
            assert!(err < 1e-12, "n={n} err={err}");
        }
    }

    #[test]
    fn two_site_sequence_is_hadamard() {
        let u = sequence_to_unitary(&build_radix2_qqft(1).unwrap());
        let h = 1.0 / 2f64.sqrt();
        let want = CMat::from_fn(2, 2, |i, j| c64::new(if i == 1 && j == 1 { -h } else { h }, 0.0));
        assert!(linalg::max_abs_diff(&u, &want) < 1e-15);
    }
}
