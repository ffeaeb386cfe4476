mod common;

use discordium::pauli_state::*;
use discordium::spectral::*;
use proptest::prelude::*;

fn numeric(p: &FamilyParams) -> SpectrumResult {
    hermitian_eigenvalues(&realize(&build_symmetric_family(p).unwrap()).unwrap()).unwrap()
}

proptest! {
    #[test]
    fn binary_h_is_even(y in -0.9f64..0.9, t in 0.0f64..=1.0) {
        let x = t * (1.0 + y);
        let a = binary_h(x, y).unwrap();
        let b = binary_h(-x, y).unwrap();
        prop_assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn binary_h_nondecreasing(y in -0.9f64..0.9) {
        let top = 1.0 + y;
        let mut prev = binary_h(0.0, y).unwrap();
        for i in 1..=200 {
            let v = binary_h(top * i as f64 / 200.0, y).unwrap();
            prop_assert!(v >= prev - 1e-14);
            prev = v;
        }
    }
}

#[test]
fn three_qubit_closed_form_matches_eigensolver() {
    let mut r = common::rng(31);
    for _ in 0..50 {
        let p = common::any_family(&mut r, 3);
        let d = closed_form_spectrum_3q(&p).unwrap().max_abs_diff(&numeric(&p));
        assert!(d < 1e-10, "{p:?}: {d}");
    }
}

#[test]
fn four_qubit_corrected_matches_printed_fails() {
    let mut r = common::rng(32);
    for _ in 0..50 {
        let p = common::any_family(&mut r, 4);
        let num = numeric(&p);
        assert!(closed_form_spectrum_4q(&p).unwrap().max_abs_diff(&num) < 1e-10, "{p:?}");
        let printed = printed_spectrum_4q(&p).unwrap();
        if p.c3.abs() > 1e-3 {
            assert!(printed.max_abs_diff(&num) > 1e-10);
            assert!((printed.trace() - (1.0 - 6.0 * p.c3 / 16.0)).abs() < 1e-12);
        }
    }
}

#[test]
fn maximally_mixed_entropy() {
    for n in 1..=6 {
        let s = von_neumann_entropy(&DensityMatrix::maximally_mixed(n)).unwrap();
        assert!((s - n as f64).abs() < 1e-12);
    }
}

#[test]
fn diagonal_field_spectrum_matches_eigensolver() {
    let fields = [0.1, -0.25, 0.3, 0.05];
    let p = DiagonalFieldParams::new(fields.to_vec()).unwrap();
    let num = hermitian_eigenvalues(&realize(&build_diagonal_field(&p).unwrap()).unwrap()).unwrap();
    assert!(diagonal_field_spectrum(&fields).max_abs_diff(&num) < 1e-14);
}
