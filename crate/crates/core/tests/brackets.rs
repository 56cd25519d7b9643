use quasiclassical::moment_algebra::{build_bracket_table, closed_form_bracket, truncate};
use quasiclassical::weyl_algebra::bracket_oracle;
use quasiclassical::{MomentIndex, MomentPolynomial, Rational};

fn d(a: u32, b: u32) -> MomentIndex {
    MomentIndex::single(a, b)
}

fn times(n: i64, m: &MomentIndex) -> MomentPolynomial {
    MomentPolynomial::moment(m).scale(&Rational::from_integer(n.into()))
}

#[test]
fn second_order_block() {
    assert_eq!(closed_form_bracket(&d(2, 0), &d(0, 2)), times(4, &d(1, 1)));
    assert_eq!(closed_form_bracket(&d(2, 0), &d(1, 1)), times(2, &d(2, 0)));
    assert_eq!(closed_form_bracket(&d(1, 1), &d(0, 2)), times(2, &d(0, 2)));
}

#[test]
fn cross_pair_bracket() {
    let x1x2 = MomentIndex::new(vec![(1, 0), (1, 0)]);
    let p2sq = MomentIndex::new(vec![(0, 0), (0, 2)]);
    let x1p2 = MomentIndex::new(vec![(1, 0), (0, 1)]);
    let expected = times(2, &x1p2);
    assert_eq!(closed_form_bracket(&x1x2, &p2sq), expected);
    assert_eq!(bracket_oracle(&x1x2, &p2sq).unwrap(), expected);
}

#[test]
fn third_order_bracket_carries_hbar_squared() {
    let br = closed_form_bracket(&d(3, 0), &d(0, 3));
    assert!(br
        .terms()
        .any(|(m, _)| MomentPolynomial::twice_hbar_order(m) == 4));
    assert_eq!(br, bracket_oracle(&d(3, 0), &d(0, 3)).unwrap());
}

#[test]
fn table_entries_respect_truncation() {
    for order in 2..=4 {
        let table = build_bracket_table(order, 1).unwrap();
        assert!(table.mismatches().is_empty());
        for ((a, b), p) in table.entries() {
            assert_eq!(&truncate(p, order), p, "{a:?} {b:?}");
        }
    }
}

#[test]
fn table_rejects_order_one() {
    assert!(build_bracket_table(1, 1).is_err());
}
