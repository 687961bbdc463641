//! Cross-checks against independent dense linear algebra.

use nalgebra::DMatrix;
use popp_core::catalog;
use popp_core::exactalg::{gen_eigenvalues, rat, rel_diff, to_f64, ExactMatrix, FloatMatrix};
use popp_core::popp::{density_in_frame, LocalStructure};
use popp_core::random::{random_frame_change, random_spd};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dense(m: &FloatMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

fn dense_exact(m: &ExactMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| to_f64(&m[(i, j)]))
}

/// Eigenvalues of `g⁻¹h` through nalgebra's symmetric solver on `g^{-1/2} h g^{-1/2}`.
fn nalgebra_gen_eig(g: &DMatrix<f64>, h: &DMatrix<f64>) -> Vec<f64> {
    let eg = g.clone().symmetric_eigen();
    let inv_sqrt = &eg.eigenvectors * DMatrix::from_diagonal(&eg.eigenvalues.map(|l| 1.0 / l.sqrt())) * eg.eigenvectors.transpose();
    let m = &inv_sqrt * h * &inv_sqrt;
    let mut v: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn generalized_eigenvalues_match_nalgebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 1..=6 {
        for _ in 0..20 {
            let g = random_spd(&mut rng, k);
            let h = random_spd(&mut rng, k);
            let ours = gen_eigenvalues(&g.to_float(), &h.to_float()).unwrap();
            let theirs = nalgebra_gen_eig(&dense_exact(&g), &dense_exact(&h));
            for (a, b) in ours.iter().zip(&theirs) {
                assert!(rel_diff(*a, *b) < 1e-10, "k={k}: {ours:?} vs {theirs:?}");
            }
            let prod: f64 = ours.iter().product();
            let det_ratio = to_f64(&h.det().unwrap()) / to_f64(&g.det().unwrap());
            assert!(rel_diff(prod, det_ratio) < 1e-10);
        }
    }
}

#[test]
fn exact_rank_and_det_match_nalgebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let r = rng.gen_range(1..=5);
        let c = rng.gen_range(1..=5);
        // Low-rank products hit the rank-deficient branch often.
        let inner = rng.gen_range(1..=5);
        let a = ExactMatrix::from_rows((0..r).map(|_| (0..inner).map(|_| rat(rng.gen_range(-2..=2))).collect()).collect());
        let b = ExactMatrix::from_rows((0..inner).map(|_| (0..c).map(|_| rat(rng.gen_range(-2..=2))).collect()).collect());
        let m = a.mul(&b);
        let d = dense_exact(&m);
        assert_eq!(m.rank(), d.rank(1e-9), "{m:?}");
        if r == c {
            let det = to_f64(&m.det().unwrap());
            assert!((det - d.determinant()).abs() <= 1e-9 * det.abs().max(1.0));
        }
    }
}

/// Density `√det ḡ / |det F|` from the full extension, computed with nalgebra.
fn oracle_density(local: &LocalStructure, metric: &ExactMatrix) -> f64 {
    let ext = local.extension(metric).unwrap();
    let gbar = dense(&ext.full_matrix());
    let f = dense_exact(local.frame.frame_matrix());
    gbar.determinant().sqrt() / f.determinant().abs()
}

#[test]
fn density_matches_determinant_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for spec in [catalog::heisenberg(1), catalog::heisenberg(2), catalog::engel(), catalog::euclidean(3)] {
        for p in spec.sample_points() {
            let local = LocalStructure::at(&spec, p).unwrap();
            let g = random_spd(&mut rng, spec.rank());
            let t = random_frame_change(&mut rng, &local.frame);
            let other = local.with_frame(local.frame.transformed(&spec, &t).unwrap());
            let ours = density_in_frame(&other.frame, &other.extension(&g).unwrap()).unwrap();
            let oracle = oracle_density(&local, &g);
            assert!(rel_diff(ours, oracle) < 1e-9, "{}: {ours} vs {oracle}", spec.name());
        }
    }
}
