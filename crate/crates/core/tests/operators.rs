use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use entromin::operators::{make_gaussian, make_srm, make_wavelet_frame};
use entromin::solver::estimate_kappa;
use entromin::{LinearOperator, RandomSeed};

fn to_matrix(op: &LinearOperator) -> DMatrix<f64> {
    let d = op.to_dense().unwrap();
    DMatrix::from_row_slice(op.rows(), op.cols(), d.data())
}

fn gaussian_vec(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Orthonormal DCT-II matrix from its closed form.
fn dct_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |k, j| {
        let c = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        c * (PI * (j as f64 + 0.5) * k as f64 / n as f64).cos()
    })
}

fn sorted_abs(v: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = v.map(f64::abs).collect();
    out.sort_by(f64::total_cmp);
    out
}

#[test]
fn adjoints_pass_dot_tests_for_every_kind() {
    let mut rng = RandomSeed::new(77, 0).rng();
    let srm = make_srm(48, 64, RandomSeed::new(1, 0)).unwrap();
    let frame = make_wavelet_frame(8, 1).unwrap();
    let dense = LinearOperator::dense(3, 4, (0..12).map(|k| k as f64 - 5.5).collect()).unwrap();
    let ops = [
        LinearOperator::identity(9).unwrap(),
        dense,
        make_gaussian(20, 50, RandomSeed::new(2, 0)).unwrap(),
        srm.clone(),
        frame.clone(),
        LinearOperator::compose(vec![srm, frame]).unwrap(),
    ];
    for op in &ops {
        for _ in 0..5 {
            let x = gaussian_vec(op.cols(), &mut rng);
            let y = gaussian_vec(op.rows(), &mut rng);
            let ax = op.apply(&x).unwrap();
            let aty = op.adjoint(&y).unwrap();
            let lhs: f64 = ax.iter().zip(&y).map(|(a, b)| a * b).sum();
            let rhs: f64 = x.iter().zip(&aty).map(|(a, b)| a * b).sum();
            let scale = (x.iter().map(|v| v * v).sum::<f64>() * y.iter().map(|v| v * v).sum::<f64>()).sqrt();
            assert!((lhs - rhs).abs() / scale < 1e-10, "{}: {lhs} vs {rhs}", op.kind());
        }
    }
}

#[test]
fn srm_rows_are_orthonormal() {
    let mut rng = RandomSeed::new(78, 0).rng();
    for k in 0..50 {
        let n = rng.gen_range(4..=96);
        let m = rng.gen_range(1..=n);
        let u = to_matrix(&make_srm(m, n, RandomSeed::new(k, 3)).unwrap());
        let gram = &u * u.transpose();
        let err = (gram - DMatrix::identity(m, m)).abs().max();
        assert!(err < 1e-10, "{m}x{n}: {err}");
    }
}

#[test]
fn srm_rows_are_signed_permuted_dct_rows() {
    let n = 64;
    let op = make_srm(24, n, RandomSeed::new(5, 0)).unwrap();
    let LinearOperator::Srm(srm) = &op else { panic!("expected an SRM") };
    let u = to_matrix(&op);
    let f = dct_matrix(n);
    for (r, &k) in srm.selected_rows().iter().enumerate() {
        let got = sorted_abs(u.row(r).iter().copied());
        let want = sorted_abs(f.row(k).iter().copied());
        let err = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "row {r} (dct row {k}): {err}");
    }
}

#[test]
fn wavelet_frame_is_tight_and_redundant() {
    for side in [16, 64] {
        let levels = if side == 16 { 2 } else { 4 };
        let v = make_wavelet_frame(side, levels).unwrap();
        assert_eq!(v.rows(), side * side);
        assert_eq!(v.cols(), 4 * side * side);
        let mut rng = RandomSeed::new(side as u64, 0).rng();
        for _ in 0..3 {
            let s = gaussian_vec(side * side, &mut rng);
            let back = v.apply(&v.adjoint(&s).unwrap()).unwrap();
            let err: f64 = back.iter().zip(&s).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let norm: f64 = s.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!(err / norm < 1e-10, "side {side}: {}", err / norm);
        }
    }
    let v = to_matrix(&make_wavelet_frame(16, 2).unwrap());
    let vvt = &v * v.transpose();
    assert!((vvt - DMatrix::identity(256, 256)).abs().max() < 1e-10);
    let vtv = v.transpose() * &v;
    let id = DMatrix::<f64>::identity(1024, 1024);
    let rel = (&vtv - &id).norm() / id.norm();
    assert!(rel > 0.1, "VᵀV too close to I: {rel}");
}

#[test]
fn kappa_matches_eigen_oracle() {
    for (k, (m, n)) in [(20, 60), (50, 100), (80, 80)].into_iter().enumerate() {
        let op = make_gaussian(m, n, RandomSeed::new(k as u64, 9)).unwrap();
        let a = to_matrix(&op);
        let lmax = (a.transpose() * &a).symmetric_eigen().eigenvalues.max();
        let kappa = estimate_kappa(&op, 1e-9).unwrap();
        let ratio = kappa / (2.0 * lmax);
        assert!((1.0..1.0101).contains(&ratio), "{m}x{n}: ratio {ratio}");
    }
}

#[test]
fn gaussian_rows_are_centered_unit_vectors() {
    let a = to_matrix(&make_gaussian(30, 70, RandomSeed::new(4, 4)).unwrap());
    for row in a.row_iter() {
        assert!(row.sum().abs() < 1e-12);
        assert!((row.norm() - 1.0).abs() < 1e-12);
    }
}
