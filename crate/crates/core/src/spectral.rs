//! Eigenvalues, von Neumann entropy and the `H_y(x)` helper.

use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::pauli_state::{hermitian_deviation, DensityMatrix, FamilyParams, GhzParams};
use crate::{Error, Result};

/// Eigenvalues below this are dropped from entropy sums.
pub const EIGEN_FLOOR: f64 = 1e-14;

/// Log arguments down to `-DOMAIN_SLACK` are treated as zero.
const DOMAIN_SLACK: f64 = 1e-12;

/// `x log2 x` with `0 log 0 = 0`; negative inputs are clamped to zero.
pub fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// `H_y(x) = (1+y+x) log2(1+y+x) + (1+y-x) log2(1+y-x)`.
pub fn binary_h(x: f64, y: f64) -> Result<f64> {
    let a = 1.0 + y + x;
    let b = 1.0 + y - x;
    if !(a >= -DOMAIN_SLACK && b >= -DOMAIN_SLACK) {
        return Err(Error::Domain { x, y });
    }
    Ok(xlog2x(a) + xlog2x(b))
}

/// [`binary_h`] without the domain check, for inner loops that already
/// stay on physical states.
#[inline]
pub fn binary_h_clamped(x: f64, y: f64) -> f64 {
    xlog2x(1.0 + y + x) + xlog2x(1.0 + y - x)
}

/// `H(x) = H_0(x)`.
#[inline]
pub fn h0(x: f64) -> f64 {
    binary_h_clamped(x, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSource {
    Numeric,
    ClosedForm3q,
    ClosedForm4q,
    ClosedFormGhz,
    ClosedFormDiagonal,
}

/// Eigenvalues in descending order together with how they were obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    pub source: SpectrumSource,
}

impl SpectrumResult {
    fn new(mut eigenvalues: Vec<f64>, source: SpectrumSource) -> Self {
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        Self { eigenvalues, source }
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NAN)
    }

    /// `sum_i lambda_i log2 lambda_i`, i.e. minus the entropy.
    pub fn sum_lambda_log2_lambda(&self) -> f64 {
        self.eigenvalues
            .iter()
            .filter(|&&l| l >= EIGEN_FLOOR)
            .map(|&l| xlog2x(l))
            .sum()
    }

    /// Entropy in bits.
    pub fn entropy(&self) -> f64 {
        -self.sum_lambda_log2_lambda()
    }

    /// Largest elementwise distance between two sorted spectra.
    pub fn max_abs_diff(&self, other: &SpectrumResult) -> f64 {
        if self.eigenvalues.len() != other.eigenvalues.len() {
            return f64::INFINITY;
        }
        self.eigenvalues
            .iter()
            .zip(&other.eigenvalues)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Full real spectrum of a Hermitian matrix.
pub fn hermitian_eigenvalues(rho: &DensityMatrix) -> Result<SpectrumResult> {
    let dev = hermitian_deviation(rho.matrix());
    if dev > 1e-10 {
        return Err(Error::NotHermitian(dev));
    }
    let m = rho.matrix();
    let h = (m + m.adjoint()).unscale(2.0);
    let eig = SymmetricEigen::new(h).eigenvalues;
    Ok(SpectrumResult::new(eig.iter().copied().collect(), SpectrumSource::Numeric))
}

/// `S(rho) = -tr rho log2 rho` in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let spec = hermitian_eigenvalues(rho)?;
    if spec.min() < -1e-8 {
        return Err(Error::Unphysical(spec.min()));
    }
    Ok(spec.entropy())
}

/// Entropy of a qubit whose Bloch vector has length `r`.
#[inline]
pub fn qubit_entropy(r: f64) -> f64 {
    1.0 - 0.5 * h0(r.min(1.0))
}

fn expect_n(params: &FamilyParams, n: usize) -> Result<()> {
    if params.n_qubits != n {
        return Err(Error::WrongQubitCount { expected: n, got: params.n_qubits });
    }
    Ok(())
}

fn pm(center: f64, half: f64, mult: usize, scale: f64, out: &mut Vec<f64>) {
    for _ in 0..mult {
        out.push((center + half) / scale);
        out.push((center - half) / scale);
    }
}

/// Three-qubit family: `(1 +- sqrt(c1^2+c2^2+c3^2-2 c3 s+s^2))/8` three times
/// each and `(1 +- sqrt(c1^2+c2^2+c3^2+6 c3 s+9 s^2))/8` once each.
pub fn closed_form_spectrum_3q(params: &FamilyParams) -> Result<SpectrumResult> {
    expect_n(params, 3)?;
    let FamilyParams { c1, c2, c3, s, .. } = *params;
    let perp = c1 * c1 + c2 * c2;
    let a = (perp + (c3 - s).powi(2)).sqrt();
    let b = (perp + (c3 + 3.0 * s).powi(2)).sqrt();
    let mut ev = Vec::with_capacity(8);
    pm(1.0, a, 3, 8.0, &mut ev);
    pm(1.0, b, 1, 8.0, &mut ev);
    Ok(SpectrumResult::new(ev, SpectrumSource::ClosedForm3q))
}

/// Four-qubit family from its 2x2 blocks on `{|b>, |~b>}`:
/// weight-2 strings give `(1 + c3 +- (c1+c2))/16` (three pairs), odd
/// weights `(1 - c3 +- sqrt((c1-c2)^2 + 4 s^2))/16` (four pairs) and the
/// all-equal strings `(1 + c3 +- sqrt((c1+c2)^2 + 16 s^2))/16`.
pub fn closed_form_spectrum_4q(params: &FamilyParams) -> Result<SpectrumResult> {
    expect_n(params, 4)?;
    let FamilyParams { c1, c2, c3, s, .. } = *params;
    let mut ev = Vec::with_capacity(16);
    pm(1.0 + c3, c1 + c2, 3, 16.0, &mut ev);
    pm(1.0 - c3, ((c1 - c2).powi(2) + 4.0 * s * s).sqrt(), 4, 16.0, &mut ev);
    pm(1.0 + c3, ((c1 + c2).powi(2) + 16.0 * s * s).sqrt(), 1, 16.0, &mut ev);
    Ok(SpectrumResult::new(ev, SpectrumSource::ClosedForm4q))
}

/// The alternative four-qubit listing with `(1 +- (c1+c2+c3))/16` in place
/// of the weight-2 block values. Its trace is `1 - 6 c3 / 16`, so it is
/// only a valid spectrum at `c3 = 0`; kept for discrepancy reports.
pub fn printed_spectrum_4q(params: &FamilyParams) -> Result<SpectrumResult> {
    expect_n(params, 4)?;
    let FamilyParams { c1, c2, c3, s, .. } = *params;
    let mut ev = Vec::with_capacity(16);
    pm(1.0, c1 + c2 + c3, 3, 16.0, &mut ev);
    pm(1.0 - c3, ((c1 - c2).powi(2) + 4.0 * s * s).sqrt(), 4, 16.0, &mut ev);
    pm(1.0 + c3, ((c1 + c2).powi(2) + 16.0 * s * s).sqrt(), 1, 16.0, &mut ev);
    Ok(SpectrumResult::new(ev, SpectrumSource::ClosedForm4q))
}

/// Noisy GHZ: `(1-mu)/2^N` with multiplicity `2^N - 1` and
/// `(1 + (2^N - 1) mu)/2^N` once.
pub fn closed_form_spectrum_ghz(params: &GhzParams) -> Result<SpectrumResult> {
    params.validate()?;
    let dim = (1usize << params.n_qubits) as f64;
    let mu = params.mu;
    let mut ev = vec![(1.0 - mu) / dim; (1usize << params.n_qubits) - 1];
    ev.push((1.0 + (dim - 1.0) * mu) / dim);
    Ok(SpectrumResult::new(ev, SpectrumSource::ClosedFormGhz))
}

/// Spectrum of the diagonal state `2^-N (I + sum_i s_i Z_i)`: one
/// eigenvalue `(1 + sum_i (-1)^{u_i} s_i) / 2^N` per bit string `u`.
pub fn diagonal_field_spectrum(fields: &[f64]) -> SpectrumResult {
    let n = fields.len();
    let dim = 1usize << n;
    let ev = (0..dim)
        .map(|u| {
            let shift: f64 = fields
                .iter()
                .enumerate()
                .map(|(i, &s)| if (u >> (n - 1 - i)) & 1 == 0 { s } else { -s })
                .sum();
            (1.0 + shift) / dim as f64
        })
        .collect();
    SpectrumResult::new(ev, SpectrumSource::ClosedFormDiagonal)
}
