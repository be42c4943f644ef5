use gaugebc::dn::assemble_dn;
use gaugebc::hodge::hmf_decompose;
use gaugebc::topology::{betti_numbers, relative_betti_numbers};
use gaugebc::{collar, gen_annulus, gen_circle, gen_disk, DecOperators};
use nalgebra::DVector;
use proptest::prelude::*;

const TAU: f64 = 1e-10;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn generated_meshes_have_expected_topology(m in 6usize..20) {
        let d = gen_disk(m).unwrap();
        prop_assert_eq!(betti_numbers(&d).unwrap(), vec![1, 0, 0]);
        prop_assert_eq!(relative_betti_numbers(&d).unwrap(), vec![0, 0, 1]);
        let a = gen_annulus(m, 1.0, 2.0).unwrap();
        prop_assert_eq!(betti_numbers(&a).unwrap(), vec![1, 1, 0]);
        let c = collar(&gen_circle(m).unwrap(), 2, 0.5).unwrap();
        prop_assert_eq!(c.euler_characteristic(), 0);
        let ops = DecOperators::build(&c).unwrap();
        prop_assert_eq!(ops.dd_defect(0), 0);
        prop_assert_eq!(ops.trace_commutation_defect(0).unwrap(), 0);
    }

    #[test]
    fn hmf_split_is_orthogonal_and_complete(seed in proptest::collection::vec(-1.0f64..1.0, 80)) {
        let ops = DecOperators::build(&gen_disk(16).unwrap()).unwrap();
        let w = DVector::from_vec(seed);
        let s = hmf_decompose(&ops, 1, &w, TAU).unwrap();
        prop_assert!(s.reconstruction_residual(ops.mass(1), &w) <= 1e-8);
        prop_assert!(s.orthogonality_defect(ops.mass(1), &w) <= 1e-8);
    }

    #[test]
    fn dn_is_gauge_invariant(x in proptest::collection::vec(-1.0f64..1.0, 32),
                            f in proptest::collection::vec(-1.0f64..1.0, 32)) {
        let a = gen_annulus(16, 1.0, 2.0).unwrap();
        let ops = DecOperators::build(&a).unwrap();
        let dn = assemble_dn(&ops, 1.0, TAU).unwrap();
        let sigma = ops.boundary_ops().unwrap();
        let x = DVector::from_vec(x);
        let shifted = &x + sigma.d_ref(0) * DVector::from_vec(f);
        let diff = (&dn.lambda * &x - &dn.lambda * &shifted).norm();
        prop_assert!(diff <= 1e-8 * dn.lambda.norm() * x.norm().max(1.0));
    }

    #[test]
    fn adjointness_on_random_pairs(a in proptest::collection::vec(-1.0f64..1.0, 33),
                                   b in proptest::collection::vec(-1.0f64..1.0, 80)) {
        let ops = DecOperators::build(&gen_disk(16).unwrap()).unwrap();
        prop_assert!(ops.adjointness_defect(0, &DVector::from_vec(a), &DVector::from_vec(b)) <= 1e-12);
    }
}
