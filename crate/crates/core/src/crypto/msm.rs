//! Scalar multiplication in G1: precomputed fixed-base tables, windowed
//! variable-base multiplication, and a bucket (Pippenger) multi-scalar
//! multiplication.
//!
//! None of these are constant time in the scalar.

use bls12_381::{G1Affine, G1Projective, Scalar};
use group::Wnaf;

use crate::par::{self, Execution};

const WINDOW: usize = 6;
const WINDOWS: usize = 255usize.div_ceil(WINDOW);
const ROW: usize = (1 << WINDOW) - 1;

/// Precomputed multiples `j · 2^(W·k) · P` for a fixed base `P`.
pub struct FixedBase {
    base: G1Projective,
    table: Vec<G1Affine>,
}

impl FixedBase {
    pub fn new(base: G1Projective) -> Self {
        let mut proj = Vec::with_capacity(WINDOWS * ROW);
        let mut row_base = base;
        for _ in 0..WINDOWS {
            let mut acc = row_base;
            for _ in 0..ROW {
                proj.push(acc);
                acc += row_base;
            }
            // acc = 2^W · row_base
            row_base = acc;
        }
        let mut table = vec![G1Affine::identity(); proj.len()];
        G1Projective::batch_normalize(&proj, &mut table);
        Self { base, table }
    }

    pub fn base(&self) -> &G1Projective {
        &self.base
    }

    pub fn mul(&self, s: &Scalar) -> G1Projective {
        let bytes = s.to_bytes();
        let mut acc = G1Projective::identity();
        for k in 0..WINDOWS {
            let d = window_digit(&bytes, k * WINDOW, WINDOW);
            if d != 0 {
                acc = acc.add_mixed(&self.table[k * ROW + d - 1]);
            }
        }
        acc
    }
}

/// Builds several tables at once.
pub fn fixed_bases(exec: Execution, bases: &[G1Projective]) -> Vec<FixedBase> {
    par::map(exec, bases, |b| FixedBase::new(*b))
}

/// Sum of fixed-base products.
pub fn fixed_sum(terms: &[(&FixedBase, Scalar)]) -> G1Projective {
    terms.iter().map(|(t, s)| t.mul(s)).sum()
}

/// Variable-base multiplication with a width-4 NAF.
pub fn mul(p: &G1Projective, s: &Scalar) -> G1Projective {
    Wnaf::new().scalar(s).base(*p)
}

fn window_digit(le_bytes: &[u8; 32], bit: usize, width: usize) -> usize {
    let mut d = 0usize;
    for i in 0..width {
        let b = bit + i;
        if b >= 256 {
            break;
        }
        if (le_bytes[b / 8] >> (b % 8)) & 1 == 1 {
            d |= 1 << i;
        }
    }
    d
}

/// Multi-scalar multiplication `Σ sᵢ·Pᵢ` with the default execution strategy.
pub fn msm(points: &[G1Projective], scalars: &[Scalar]) -> G1Projective {
    msm_with(Execution::default(), points, scalars)
}

/// Bucket method; windows are independent and are processed in parallel
/// under [`Execution::Parallel`].
pub fn msm_with(exec: Execution, points: &[G1Projective], scalars: &[Scalar]) -> G1Projective {
    assert_eq!(points.len(), scalars.len(), "msm length mismatch");
    let n = points.len();
    if n < 8 {
        return points.iter().zip(scalars).map(|(p, s)| mul(p, s)).sum();
    }
    let log2 = (usize::BITS - n.leading_zeros()) as usize - 1;
    let c = log2.saturating_sub(2).clamp(3, 12);
    let mut affine = vec![G1Affine::identity(); n];
    G1Projective::batch_normalize(points, &mut affine);
    let bytes: Vec<[u8; 32]> = scalars.iter().map(|s| s.to_bytes()).collect();
    let windows = 255usize.div_ceil(c);

    let partials = par::map_range(exec, windows, |w| {
        let mut buckets = vec![G1Projective::identity(); (1 << c) - 1];
        for (p, b) in affine.iter().zip(&bytes) {
            let d = window_digit(b, w * c, c);
            if d != 0 {
                buckets[d - 1] = buckets[d - 1].add_mixed(p);
            }
        }
        let mut running = G1Projective::identity();
        let mut sum = G1Projective::identity();
        for b in buckets.into_iter().rev() {
            running += b;
            sum += running;
        }
        sum
    });

    let mut acc = G1Projective::identity();
    for sum in partials.into_iter().rev() {
        for _ in 0..c {
            acc = acc.double();
        }
        acc += sum;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use ff::Field;
    use group::Group;
    use rand_chacha::ChaCha20Rng;
    use rand_core::SeedableRng;

    fn naive(points: &[G1Projective], scalars: &[Scalar]) -> G1Projective {
        points.iter().zip(scalars).map(|(p, s)| p * s).sum()
    }

    #[test]
    fn fixed_base_matches_naive() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let p = G1Projective::random(&mut rng);
        let t = FixedBase::new(p);
        for s in [Scalar::ZERO, Scalar::ONE, -Scalar::ONE, Scalar::from(64u64)] {
            assert_eq!(t.mul(&s), p * s);
        }
        for _ in 0..20 {
            let s = Scalar::random(&mut rng);
            assert_eq!(t.mul(&s), p * s);
        }
    }

    #[test]
    fn wnaf_matches_naive() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let p = G1Projective::random(&mut rng);
        let s = Scalar::random(&mut rng);
        assert_eq!(mul(&p, &s), p * s);
    }

    #[test]
    fn msm_matches_naive_at_several_sizes() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for n in [0usize, 1, 7, 8, 31, 32, 70] {
            let pts: Vec<_> = (0..n).map(|_| G1Projective::random(&mut rng)).collect();
            let sc: Vec<_> = (0..n).map(|_| Scalar::random(&mut rng)).collect();
            let expect = naive(&pts, &sc);
            assert_eq!(msm_with(Execution::Sequential, &pts, &sc), expect, "n={n}");
            assert_eq!(msm_with(Execution::Parallel, &pts, &sc), expect, "n={n}");
        }
    }

    #[test]
    fn msm_handles_identity_and_small_scalars() {
        let g = G1Projective::generator();
        let pts = vec![G1Projective::identity(), g, g, g, g, g, g, g, g];
        let sc: Vec<_> = (0..9u64).map(Scalar::from).collect();
        assert_eq!(msm(&pts, &sc), g * Scalar::from(36u64));
    }
}
