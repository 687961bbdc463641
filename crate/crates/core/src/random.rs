//! Seeded generators for rational test data.

use num::Zero;
use rand::Rng;

use crate::adapted::AdaptedFrame;
use crate::exactalg::{rat, ratio, symmetric_eigenvalues, ExactMatrix, Rational};

/// `B·Bᵀ + I` with integer entries of `B` in `[-3, 3]`.
pub fn random_spd<R: Rng + ?Sized>(rng: &mut R, k: usize) -> ExactMatrix {
    let b = ExactMatrix::from_rows((0..k).map(|_| (0..k).map(|_| rat(rng.gen_range(-3..=3))).collect()).collect());
    b.mul(&b.transpose()).add(&ExactMatrix::identity(k))
}

/// Rational in `[-3, 3]` with denominator in `1..=4`.
pub fn random_rational<R: Rng + ?Sized>(rng: &mut R) -> Rational {
    let d = rng.gen_range(1..=4);
    ratio(rng.gen_range(-3 * d..=3 * d), d)
}

pub fn random_point<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Rational> {
    (0..n).map(|_| random_rational(rng)).collect()
}

/// Largest condition number accepted by [`random_frame_change`].
pub const MAX_FRAME_CHANGE_COND: f64 = 100.0;

/// Invertible block lower triangular change for `frame`'s layers, with
/// condition number at most [`MAX_FRAME_CHANGE_COND`].
pub fn random_frame_change<R: Rng + ?Sized>(rng: &mut R, frame: &AdaptedFrame) -> ExactMatrix {
    let n = frame.dim();
    loop {
        let mut t = ExactMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                if frame.layer_of(j) <= frame.layer_of(i) {
                    t[(j, i)] = random_rational(rng);
                }
            }
        }
        if condition_number(&t).is_some_and(|c| c <= MAX_FRAME_CHANGE_COND) {
            return t;
        }
    }
}

/// 2-norm condition number; `None` if singular.
fn condition_number(t: &ExactMatrix) -> Option<f64> {
    if t.det().map_or(true, |d| d.is_zero()) {
        return None;
    }
    let tf = t.to_float();
    let ev = symmetric_eigenvalues(&tf.transpose().mul(&tf)).ok()?;
    let (lo, hi) = (ev.first()?, ev.last()?);
    (*lo > 0.0).then(|| (hi / lo).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::popp::LocalStructure;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn spd_and_deterministic() {
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        for k in 1..5 {
            let m = random_spd(&mut a, k);
            assert!(m.is_positive_definite());
            assert_eq!(m, random_spd(&mut b, k));
        }
    }

    #[test]
    fn frame_changes_are_admissible() {
        let spec = catalog::engel();
        let local = LocalStructure::at(&spec, &spec.sample_points()[2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let t = random_frame_change(&mut rng, &local.frame);
            assert!(local.frame.transformed(&spec, &t).is_ok());
            assert!(condition_number(&t).unwrap() <= MAX_FRAME_CHANGE_COND);
        }
    }
}
