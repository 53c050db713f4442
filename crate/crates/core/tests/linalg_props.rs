use dfop_core::linalg::{outer_rank1_downdate, solve_spd, spectral_norm, SymMatrix};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn to_na(a: &SymMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.dim(), a.dim(), a.as_slice())
}

fn spd_from(d: usize, entries: &[f64]) -> SymMatrix {
    let b = DMatrix::from_row_slice(d, d, &entries[..d * d]);
    let a = &b * b.transpose() + DMatrix::identity(d, d) * 0.5;
    SymMatrix::from_row_major(d, a.as_slice().to_vec()).unwrap()
}

fn spd_case() -> impl Strategy<Value = (SymMatrix, Vec<f64>)> {
    (1usize..=8).prop_flat_map(|d| {
        (
            prop::collection::vec(-1.0f64..1.0, d * d),
            prop::collection::vec(-1.0f64..1.0, d),
            0.0f64..10.0,
        )
            .prop_map(move |(m, x, len)| {
                let n = x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
                (spd_from(d, &m), x.iter().map(|v| v * len / n).collect())
            })
    })
}

proptest! {
    #[test]
    fn downdate_is_inverse_of_updated_information((p, x) in spd_case(), alpha in 0.05f64..1.0, beta in 0.0f64..1.0) {
        let d = p.dim();
        let out = outer_rank1_downdate(&p, &x, alpha, beta).unwrap();
        let xv = DVector::from_column_slice(&x);
        let info = to_na(&p).try_inverse().unwrap() * alpha + &xv * xv.transpose() * beta;
        let prod = to_na(&out) * &info;
        let err = (prod - DMatrix::<f64>::identity(d, d)).amax();
        prop_assert!(err <= 1e-8, "identity residual {err}");
        prop_assert!(out.max_asymmetry() <= 1e-12);
    }

    #[test]
    fn downdate_matches_explicit_inverse((p, x) in spd_case()) {
        let out = outer_rank1_downdate(&p, &x, 0.9, 0.1).unwrap();
        let xv = DVector::from_column_slice(&x);
        let explicit = (to_na(&p).try_inverse().unwrap() * 0.9 + &xv * xv.transpose() * 0.1)
            .try_inverse()
            .unwrap();
        let scale = explicit.amax().max(1.0);
        prop_assert!((to_na(&out) - explicit).amax() <= 1e-9 * scale);
    }

    #[test]
    fn solve_spd_residual((a, b) in spd_case()) {
        let x = solve_spd(&a, &b).unwrap();
        let r = a.mul_vec(&x);
        let res: f64 = r.iter().zip(&b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
        let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(res <= 1e-8 * bn.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn spectral_norm_matches_eigensolve(d in 1usize..=8, m in prop::collection::vec(-5.0f64..5.0, 64)) {
        let b = DMatrix::from_row_slice(d, d, &m[..d * d]);
        let sym = (&b + b.transpose()) * 0.5;
        let a = SymMatrix::from_row_major(d, sym.as_slice().to_vec()).unwrap();
        let want = sym.symmetric_eigenvalues().amax();
        let got = spectral_norm(&a);
        prop_assert!((got - want).abs() <= 1e-6 * want.max(1e-12), "{got} vs {want}");
    }
}

#[test]
fn downdate_fixed_examples() {
    let out = outer_rank1_downdate(&SymMatrix::identity(2), &[0.0, 0.0], 0.5, 0.5).unwrap();
    assert_eq!(out, SymMatrix::scaled_identity(2, 2.0));
    let out = outer_rank1_downdate(&SymMatrix::identity(1), &[1.0], 1.0, 1.0).unwrap();
    assert!((out.get(0, 0) - 0.5).abs() < 1e-15);
}

#[test]
fn solve_fixed_examples() {
    let b = [0.3, -7.0, 2.5];
    assert_eq!(solve_spd(&SymMatrix::identity(3), &b).unwrap(), b);
    let x = solve_spd(&SymMatrix::diagonal(&[2.0, 4.0]), &[2.0, 8.0]).unwrap();
    assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
}
