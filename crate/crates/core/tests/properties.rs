use std::collections::BTreeMap;

use freefock::algebra::{centered_projection, BooleanModel};
use freefock::cumulants::{
    boolean_cumulants, cfree_cumulants, free_cumulants, moments_from_cumulants, Cached, TableMoments,
};
use freefock::fockspace::{operator_norm, FockModel};
use freefock::partitions::{catalan, enumerate, BlockKind, PartitionClass};
use freefock::spectral::{free_binomial_measure, psi_measure, ricard_measures, CauchyTransform};
use freefock::states::phi_t;
use freefock::{CumulantTable, Family, Handle, Letter, MatrixModel, NCPoly, StateOracle, Variant, Word, C64};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn complex_vec(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| c(a, b)), n)
}

fn matrix_model() -> impl Strategy<Value = MatrixModel> {
    (complex_vec(9), complex_vec(9), complex_vec(3)).prop_filter_map("zero state vector", |(x, y, w)| {
        if w.iter().map(|z| z.norm_sqr()).sum::<f64>() < 1e-3 {
            return None;
        }
        let gens = [
            ("x".to_string(), DMatrix::from_row_slice(3, 3, &x)),
            ("y".to_string(), DMatrix::from_row_slice(3, 3, &y)),
        ];
        MatrixModel::new(gens, Some(DVector::from_vec(w))).ok()
    })
}

fn word_over(names: &'static [&'static str], max: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(0..names.len(), 0..=max)
        .prop_map(move |ix| Word(ix.into_iter().map(|i| Letter::new(names[i])).collect()))
}

fn random_table(family: Family, n: usize, values: &[C64], psi: &[C64]) -> CumulantTable {
    let root: Vec<Handle> = (0..n).map(|i| Handle(i % 2)).collect();
    let mut v = BTreeMap::new();
    let mut p = BTreeMap::new();
    let mut k = 0;
    for mask in 1u32..(1 << n) {
        let key: Vec<Handle> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| root[i]).collect();
        if !v.contains_key(&key) {
            v.insert(key.clone(), values[k % values.len()]);
            p.insert(key, psi[k % psi.len()]);
            k += 1;
        }
    }
    CumulantTable { family, roots: vec![root], values: v, psi: (family == Family::CFree).then_some(p) }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn star_reverses_and_conjugates(m in matrix_model(), w in word_over(&["x", "y", "x*", "y*"], 7)) {
        let a = m.moment(&w.star()).unwrap();
        let b = m.moment(&w).unwrap().conj();
        prop_assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn state_is_linear(m in matrix_model(), u in word_over(&["x", "y"], 5), v in word_over(&["x", "y*"], 5),
                       s in complex_vec(2)) {
        let o: StateOracle = m.into();
        let p = NCPoly::word(u.clone()).scale(s[0]).add(&NCPoly::word(v.clone()).scale(s[1]));
        let lhs = o.phi(&p).unwrap();
        let rhs = o.moment(&u).unwrap() * s[0] + o.moment(&v).unwrap() * s[1];
        prop_assert!((lhs - rhs).norm() < 1e-10);
        prop_assert!((o.moment(&Word::unit()).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn cumulant_moment_round_trip(n in 1usize..=7, fam in 0usize..3, values in complex_vec(64), psi in complex_vec(64)) {
        let family = [Family::Free, Family::Boolean, Family::CFree][fam];
        let table = random_table(family, n, &values, &psi);
        let root = table.roots[0].clone();
        let phi = Cached::new(TableMoments(&table));
        let back = match family {
            Family::Free => free_cumulants(&phi, &root).unwrap(),
            Family::Boolean => boolean_cumulants(&phi, &root).unwrap(),
            Family::CFree => {
                let psi_table = CumulantTable {
                    family: Family::Free,
                    roots: table.roots.clone(),
                    values: table.psi.clone().unwrap(),
                    psi: None,
                };
                cfree_cumulants(&phi, &Cached::new(TableMoments(&psi_table)), &root).unwrap()
            }
        };
        prop_assert!((back - table.get(&root).unwrap()).norm() < 1e-10);
        prop_assert!((moments_from_cumulants(&table, &[]).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn associator_identity(seed in complex_vec(12), word in word_over(&["p1", "p2", "u1", "u2"], 3)) {
        let bm = BooleanModel::new(&[0.3, 0.6]).unwrap();
        let o = bm.oracle();
        let build = |k: usize| {
            let f = NCPoly::generator("p1").scale(seed[k])
                .add(&NCPoly::generator("p2").scale(seed[k + 1]))
                .add(&NCPoly::generator("u1").mul(&NCPoly::generator("p2")).scale(seed[k + 2]))
                .add(&NCPoly::generator("u2").scale(seed[k + 3]));
            o.center(&f).unwrap()
        };
        let (f, g, h) = (build(0), build(4), build(8));
        let lhs = o.lambda(&f, &o.lambda(&g, &h).unwrap()).unwrap()
            .sub(&o.lambda(&o.lambda(&f, &g).unwrap(), &h).unwrap());
        let rhs = f.scale(-o.phi(&g.mul(&h)).unwrap()).add(&h.scale(o.phi(&f.mul(&g)).unwrap()));
        let test = NCPoly::word(word);
        let d = lhs.sub(&rhs);
        prop_assert!(o.phi(&test.mul(&d)).unwrap().norm() < 1e-10);
        prop_assert!(o.phi(&d.mul(&test)).unwrap().norm() < 1e-10);
    }

    #[test]
    fn measures_have_unit_mass(alpha in 0.05f64..0.95, t in 0.05f64..4.0) {
        for m in [free_binomial_measure(alpha, t).unwrap(), psi_measure(alpha, t).unwrap()] {
            prop_assert!((m.total_mass().unwrap() - 1.0).abs() < 1e-8, "{} mass", m.label);
            if let Some((a, b)) = m.support() {
                for i in 0..=50 {
                    let x = a + (b - a) * i as f64 / 50.0;
                    prop_assert!(m.density(x) >= -1e-12);
                }
            }
        }
    }

    #[test]
    fn cauchy_transforms_are_herglotz(alpha in 0.05f64..0.95, t in 0.05f64..4.0, x in -3.0f64..3.0, y in 1e-3f64..2.0) {
        for g in [CauchyTransform::free_binomial(alpha, t).unwrap(), CauchyTransform::psi(alpha, t).unwrap()] {
            prop_assert!(g.eval(c(x, y)).unwrap().im < 0.0);
            let z = c(1e3, 1.0);
            prop_assert!((g.eval(z).unwrap() * z - 1.0).norm() < 1e-2);
        }
    }

    #[test]
    fn norm_bound_holds(alpha in 0.1f64..0.9, t in 0.1f64..3.0, s in 0.1f64..5.0) {
        let o: StateOracle = MatrixModel::bernoulli(alpha).unwrap().into();
        let f = centered_projection(alpha);
        for variant in [Variant::Phi, Variant::Psi, Variant::Ricard] {
            let model = FockModel::build(&o, variant, t, 5).unwrap();
            prop_assert!(model.norm_bound_check(&f).unwrap());
            prop_assert!(model.norm_bound_check(&f.scale(s)).unwrap());
        }
    }

    #[test]
    fn phi_t_is_multilinear(t in 0.0f64..3.0, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let bm = BooleanModel::new(&[0.3, 0.5]).unwrap();
        let o = bm.oracle();
        let (p, q) = (bm.centered(1), bm.centered(2));
        let mix = p.scale(c(a, 0.0)).add(&q.scale(c(b, 0.0)));
        let lhs = phi_t(&o, &[p.clone(), mix, q.clone(), p.clone()], t).unwrap();
        let rhs = phi_t(&o, &[p.clone(), p.clone(), q.clone(), p.clone()], t).unwrap() * a
            + phi_t(&o, &[p.clone(), q.clone(), q.clone(), p.clone()], t).unwrap() * b;
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }
}

#[test]
fn noncrossing_counts_are_catalan() {
    for n in 1..=12 {
        assert_eq!(enumerate(n, PartitionClass::Noncrossing).unwrap().len() as u64, catalan(n), "n = {n}");
    }
}

#[test]
fn class_inclusions_and_block_kinds() {
    for n in 1..=8 {
        let nc = enumerate(n, PartitionClass::Noncrossing).unwrap();
        for class in [
            PartitionClass::Interval,
            PartitionClass::IrreducibleNC,
            PartitionClass::NoSingletonNC,
            PartitionClass::IrreducibleNoSingletonNC,
        ] {
            for p in enumerate(n, class).unwrap() {
                assert!(nc.contains(&p), "{class:?} member outside NC({n})");
            }
        }
        let both: Vec<_> = enumerate(n, PartitionClass::IrreducibleNC)
            .unwrap()
            .into_iter()
            .filter(|p| !p.has_singleton())
            .collect();
        assert_eq!(both, enumerate(n, PartitionClass::IrreducibleNoSingletonNC).unwrap());
        let irreducible: Vec<_> = nc.iter().filter(|p| p.outer_block().is_some()).cloned().collect();
        assert_eq!(irreducible, enumerate(n, PartitionClass::IrreducibleNC).unwrap());
        for p in &nc {
            let kinds = p.classify_blocks().unwrap();
            assert!(kinds.contains(&BlockKind::Outer));
            let (inner, outer) = p.inner_outer_counts().unwrap();
            assert_eq!(inner + outer, p.len());
        }
    }
}

#[test]
fn ricard_measures_are_probability_laws() {
    for theta in [0.25, 0.5, 0.75] {
        let (r1, r2) = ricard_measures(theta).unwrap();
        assert!((r1.total_mass().unwrap() - 1.0).abs() < 1e-8);
        assert!((r2.total_mass().unwrap() - 1.0).abs() < 1e-8);
    }
    let (r1, _) = ricard_measures(0.5).unwrap();
    assert!(r1.atoms.is_empty());
}

#[test]
fn field_operators_are_bounded_by_the_printed_constant() {
    let o: StateOracle = MatrixModel::bernoulli(0.3).unwrap().into();
    let f = centered_projection(0.3);
    let model = FockModel::build(&o, Variant::Phi, 1.0, 5).unwrap();
    let x = model.field_operator(&f).unwrap();
    let (norm, bound) = model.norm_bound(&f).unwrap();
    assert!((operator_norm(&x.matrix) - norm).abs() < 1e-12);
    assert!(norm <= bound);
    assert!(model.norm_bound_check(&NCPoly::zero()).unwrap());
}
