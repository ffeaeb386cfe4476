#![allow(dead_code)]

use discordium::pauli_state::{
    build_symmetric_family, realize, validate_state, DensityMatrix, FamilyParams,
};
use discordium::spectral::hermitian_eigenvalues;
use discordium::C64;
use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Smallest eigenvalue of the realized family state.
pub fn family_min_eig(p: &FamilyParams) -> f64 {
    let rho = realize(&build_symmetric_family(p).unwrap()).unwrap();
    hermitian_eigenvalues(&rho).unwrap().min()
}

/// Rejection sampler over physical family states with a small positivity
/// margin so the oracle never sits on the boundary.
pub fn sample_family(
    rng: &mut ChaCha8Rng,
    n: usize,
    mut draw: impl FnMut(&mut ChaCha8Rng) -> (f64, f64, f64, f64),
) -> FamilyParams {
    loop {
        let (c1, c2, c3, s) = draw(rng);
        if let Ok(p) = FamilyParams::new(n, c1, c2, c3, s) {
            if family_min_eig(&p) > 1e-4 {
                return p;
            }
        }
    }
}

pub fn any_family(rng: &mut ChaCha8Rng, n: usize) -> FamilyParams {
    sample_family(rng, n, |r| {
        (
            r.random_range(-0.9..0.9),
            r.random_range(-0.9..0.9),
            r.random_range(-0.9..0.9),
            r.random_range(-0.4..0.4),
        )
    })
}

/// `c3 <= 0`, `c3^2 >= c^2`, `s != 0`.
pub fn case1_family(rng: &mut ChaCha8Rng, n: usize) -> FamilyParams {
    sample_family(rng, n, |r| {
        let c3: f64 = r.random_range(-0.9..-0.05);
        let a = c3.abs();
        let mut s: f64 = r.random_range(-0.3..0.3);
        if s.abs() < 0.02 {
            s = 0.02f64.copysign(s);
        }
        (r.random_range(-a..=a), r.random_range(-a..=a), c3, s)
    })
}

pub fn bell_diagonal(rng: &mut ChaCha8Rng) -> FamilyParams {
    sample_family(rng, 2, |r| {
        (r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), 0.0)
    })
}

fn qubit(r: [f64; 3]) -> DMatrix<C64> {
    let h = 0.5;
    DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(h * (1.0 + r[2]), 0.0),
            C64::new(h * r[0], -h * r[1]),
            C64::new(h * r[0], h * r[1]),
            C64::new(h * (1.0 - r[2]), 0.0),
        ],
    )
}

/// Random product of single-qubit states with Bloch lengths below 0.95.
pub fn product_state(rng: &mut ChaCha8Rng, n: usize) -> DensityMatrix {
    let mut m = DMatrix::<C64>::identity(1, 1);
    for _ in 0..n {
        let len: f64 = rng.random_range(0.0..0.95);
        let cos_t: f64 = rng.random_range(-1.0..1.0);
        let sin_t = (1.0 - cos_t * cos_t).sqrt();
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        m = m.kronecker(&qubit([len * sin_t * phi.cos(), len * sin_t * phi.sin(), len * cos_t]));
    }
    let rho = DensityMatrix::from_matrix(n, m).unwrap();
    assert!(validate_state(&rho, 1e-10).is_physical);
    rho
}
