use holomenta_core::expr::{BinaryOp, Expression, Function};
use holomenta_core::geom::{self, DirectSum, Matrix, SubspaceBasis, Vector};
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = Expression> {
    prop_oneof![
        (0u32..1000, 0i32..3).prop_map(|(m, e)| Expression::Constant(m as f64 / 10f64.powi(e))),
        prop::sample::select(vec!["x", "y", "z"]).prop_map(Expression::variable),
    ]
}

fn expression() -> impl Strategy<Value = Expression> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expression::Neg(Box::new(e))),
            (
                prop::sample::select(vec![BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div, BinaryOp::Pow]),
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, l, r)| Expression::Binary {
                    op,
                    lhs: Box::new(l),
                    rhs: Box::new(r)
                }),
            (prop::sample::select(Function::ALL.to_vec()), inner).prop_map(|(func, a)| Expression::Call {
                func,
                arg: Box::new(a)
            }),
        ]
    })
}

fn smooth() -> impl Strategy<Value = String> {
    prop::sample::select(vec![
        "x^2*y",
        "sin(x)*cos(y)",
        "exp(0.3*x) - y",
        "sqrt(1+y^2)*x",
        "x/(2+cos(y))",
        "log(2+sin(x*y))",
    ])
    .prop_map(String::from)
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-1.0f64..1.0, rows * cols).prop_map(move |v| Matrix::from_vec(rows, cols, v))
}

proptest! {
    #[test]
    fn printing_then_parsing_is_identity(e in expression()) {
        let printed = e.to_string();
        prop_assert_eq!(Expression::parse(&printed).unwrap(), e);
    }

    #[test]
    fn gradient_is_linear(f in smooth(), g in smooth(), a in -2.0f64..2.0, b in -2.0f64..2.0,
                          x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let names = ["x", "y"];
        let at = [("x", x), ("y", y)];
        let combo = Expression::parse(&format!("({a})*({f}) + ({b})*({g})")).unwrap();
        let gf = Expression::parse(&f).unwrap().gradient(&at, &names).unwrap();
        let gg = Expression::parse(&g).unwrap().gradient(&at, &names).unwrap();
        let gc = combo.gradient(&at, &names).unwrap();
        for i in 0..2 {
            prop_assert!((gc[i] - (a * gf[i] + b * gg[i])).abs() < 1e-6);
        }
    }

    #[test]
    fn grassmann_identity(a in matrix(5, 3), b in matrix(5, 3), shared in 0usize..3) {
        let mut b = b;
        for k in 0..shared {
            b.set_column(k, &a.column(k));
        }
        let sa = SubspaceBasis::span_of(&a, 1e-9);
        let sb = SubspaceBasis::span_of(&b, 1e-9);
        let sum = geom::subspace_sum(&sa, &sb);
        let cap = geom::subspace_intersection(&sa, &sb);
        prop_assert_eq!(sum.dim() + cap.dim(), sa.dim() + sb.dim());
    }

    #[test]
    fn direct_sum_projectors(a in matrix(4, 2), b in matrix(4, 2), v in prop::collection::vec(-1.0f64..1.0, 4)) {
        let v = Vector::from_vec(v);
        let Ok(ds) = DirectSum::new(&a, &b, 1e-9) else {
            return Ok(());
        };
        // Skip nearly degenerate splittings.
        prop_assume!(geom::condition_number(&Matrix::from_columns(&[
            a.column(0), a.column(1), b.column(0), b.column(1)
        ])) < 1e6);
        let pa = ds.project_first(&v).unwrap();
        let pb = ds.project_second(&v).unwrap();
        prop_assert!((&pa + &pb - &v).norm() < 1e-9);
        prop_assert!((ds.project_first(&pa).unwrap() - &pa).norm() < 1e-9);
        prop_assert!(ds.project_second(&pa).unwrap().norm() < 1e-9);
        prop_assert!((ds.project_second(&pb).unwrap() - &pb).norm() < 1e-9);
    }

    #[test]
    fn bracket_is_antisymmetric(c in prop::collection::vec(-1.0f64..1.0, 6), q in prop::collection::vec(-1.0f64..1.0, 2)) {
        let q = Vector::from_vec(q);
        let f = |x: &Vector| Ok(Vector::from_vec(vec![c[0] * x[1] * x[1] + c[1], (c[2] * x[0]).sin()]));
        let g = |x: &Vector| Ok(Vector::from_vec(vec![c[3] * x[0] * x[1], (c[4] * x[1]).exp() + c[5]]));
        let ab = geom::lie_bracket(f, g, &q).unwrap();
        let ba = geom::lie_bracket(g, f, &q).unwrap();
        prop_assert!((ab + ba).norm() < 1e-6);
    }
}
