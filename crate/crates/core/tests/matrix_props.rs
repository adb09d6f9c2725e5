mod common;

use common::dense;
use nalgebra::DVector;
use proptest::prelude::*;
use tmest::{io, Error, RouteMatrix};

fn pattern() -> impl Strategy<Value = (usize, usize, Vec<(usize, usize)>)> {
    (1usize..9, 1usize..9).prop_flat_map(|(m, n)| {
        proptest::collection::vec(any::<bool>(), m * n).prop_map(move |mask| {
            let entries = mask
                .iter()
                .enumerate()
                .filter(|(_, &on)| on)
                .map(|(idx, _)| (idx / n, idx % n))
                .collect();
            (m, n, entries)
        })
    })
}

fn vec_of(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-10.0f64..10.0, len)
}

proptest! {
    #[test]
    fn adjoint_identity((m, n, entries) in pattern(), seed in 0u64..1000) {
        let a = RouteMatrix::from_entries(m, n, &entries).unwrap();
        let mut r = common::rng(seed);
        let x = common::uniform_vec(&mut r, n, -5.0, 5.0);
        let y = common::uniform_vec(&mut r, m, -5.0, 5.0);
        let lhs: f64 = a.matvec(&x).unwrap().iter().zip(&y).map(|(u, v)| u * v).sum();
        let rhs: f64 = a.rmatvec(&y).unwrap().iter().zip(&x).map(|(u, v)| u * v).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn products_match_dense((m, n, entries) in pattern(), x in vec_of(8), y in vec_of(8)) {
        let a = RouteMatrix::from_entries(m, n, &entries).unwrap();
        let d = dense(&a);
        let x = &x[..n];
        let y = &y[..m];
        let ax = &d * DVector::from_column_slice(x);
        let aty = d.transpose() * DVector::from_column_slice(y);
        for (u, v) in a.matvec(x).unwrap().iter().zip(ax.iter()) {
            prop_assert!((u - v).abs() <= 1e-12);
        }
        for (u, v) in a.rmatvec(y).unwrap().iter().zip(aty.iter()) {
            prop_assert!((u - v).abs() <= 1e-12);
        }
        prop_assert!(a.is_transpose_consistent());
        for &(i, j) in &entries {
            prop_assert!(a.contains(i, j));
        }
    }

    #[test]
    fn stats_invariants((m, n, entries) in pattern()) {
        let a = RouteMatrix::from_entries(m, n, &entries).unwrap();
        let st = a.stats(200);
        prop_assert_eq!(st.nnz, entries.len());
        prop_assert_eq!((0..n).map(|k| a.col_nnz(k)).sum::<usize>(), st.nnz);
        prop_assert_eq!((0..m).map(|i| a.row_nnz(i)).sum::<usize>(), st.nnz);
        prop_assert_eq!(st.trace_bound, st.nnz as f64);
        prop_assert!((st.s - st.nnz as f64 / n as f64).abs() < 1e-15);
        prop_assert!((st.s_tilde - st.nnz as f64 / m as f64).abs() < 1e-15);
        let d = dense(&a);
        let eig = (d.transpose() * &d).symmetric_eigen().eigenvalues.max();
        // Rayleigh quotients never exceed the top eigenvalue
        prop_assert!(st.sigma_max_est <= eig + 1e-9);
        prop_assert!(eig <= st.trace_bound + 1e-9);
        prop_assert!(st.max_col_sq as f64 <= eig + 1e-9);
    }

    #[test]
    fn column_axpy_adds_the_column((m, n, entries) in pattern(), k in 0usize..8, t in -3.0f64..3.0) {
        let a = RouteMatrix::from_entries(m, n, &entries).unwrap();
        let k = k % n;
        let mut r = vec![1.0; m];
        a.column_axpy(k, t, &mut r).unwrap();
        let mut e = vec![0.0; n];
        e[k] = t;
        let expected: Vec<f64> = a.matvec(&e).unwrap().iter().map(|v| v + 1.0).collect();
        prop_assert_eq!(r, expected);
        prop_assert!(a.column_axpy(n, t, &mut vec![0.0; m]).is_err());
    }

    #[test]
    fn pattern_round_trip((m, n, entries) in pattern()) {
        let a = RouteMatrix::from_entries(m, n, &entries).unwrap();
        let mut buf = Vec::new();
        a.write_pattern(&mut buf).unwrap();
        let back = RouteMatrix::read_pattern(&buf[..]).unwrap();
        prop_assert_eq!(a, back);
    }

    #[test]
    fn vector_round_trip(v in proptest::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 0..20)) {
        let mut buf = Vec::new();
        io::write_vector(&mut buf, &v).unwrap();
        prop_assert_eq!(io::read_vector(&buf[..]).unwrap(), v);
    }
}

#[test]
fn rejects_duplicates_and_out_of_range() {
    assert!(RouteMatrix::from_entries(2, 2, &[(0, 0), (0, 0)]).is_err());
    assert!(RouteMatrix::from_entries(2, 2, &[(2, 0)]).is_err());
    assert!(RouteMatrix::from_entries(2, 2, &[(0, 5)]).is_err());
    assert!(RouteMatrix::from_columns(2, vec![vec![0, 0]]).is_err());
}

#[test]
fn dimension_mismatch_is_reported() {
    let a = RouteMatrix::identity(3).unwrap();
    assert!(matches!(a.matvec(&[1.0, 2.0]), Err(Error::Dimension { .. })));
    assert!(matches!(a.rmatvec(&[1.0]), Err(Error::Dimension { .. })));
}

#[test]
fn all_ones_two_by_two_stats() {
    let a = RouteMatrix::from_entries(2, 2, &[(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
    let st = a.stats(100);
    assert_eq!(st.nnz, 4);
    assert_eq!(st.max_col_sq, 2);
    assert!((st.sigma_max_est - 4.0).abs() < 1e-12);
    assert!(st.sigma_max_est <= st.trace_bound);
}

#[test]
fn malformed_pattern_reports_line() {
    let text = "%%MatrixMarket matrix coordinate pattern general\n2 2 2\n1 1\n1 x\n";
    match RouteMatrix::read_pattern(text.as_bytes()) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("expected parse error, got {other:?}"),
    }
}
