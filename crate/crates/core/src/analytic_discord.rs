//! Closed-form discord for the symmetric family, the diagonal-field family
//! and noisy GHZ states, with explicit case-region dispatch.

use serde::Serialize;

use crate::pauli_state::{
    build_symmetric_family, realize, DiagonalFieldParams, FamilyParams, GhzParams,
};
use crate::spectral::{
    binary_h_clamped, closed_form_spectrum_3q, closed_form_spectrum_4q, closed_form_spectrum_ghz,
    diagonal_field_spectrum, h0, hermitian_eigenvalues, xlog2x, SpectrumResult,
};
use crate::{Error, Result};

/// `s` is treated as zero below this magnitude.
pub const S_ZERO_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    /// `c3 <= 0` with `c3^2 >= c^2`, or the field inequality; the optimal
    /// measurement is along z on every qubit.
    Case1,
    /// `s = 0`; the optimum follows the largest correlation `C`.
    Case2SZero,
    /// No closed form; use the measurement oracle.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseRegion {
    pub region: Region,
    /// `max(|c1|, |c2|)`.
    pub c: f64,
    /// `max(|c1|, |c2|, |c3|)`.
    pub big_c: f64,
    pub condition_detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscordResult {
    /// Discord in bits.
    pub value: f64,
    pub region: Option<CaseRegion>,
    /// Which closed form produced `value`.
    pub branch: String,
    pub max_w: Option<f64>,
    pub spectrum_used: Option<SpectrumResult>,
}

/// Argument pattern used for `max W`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MaxWPattern {
    /// `H` arguments alternate with the parity of the number of minus
    /// outcomes; canonical for every N.
    Parity,
    /// Three-qubit listing `H_2s(|s+c3|) + H_-2s(|s-c3|) + H(|s+c3|) + H(|s-c3|)`,
    /// kept for discrepancy reports.
    Printed,
}

fn case1_holds(n: usize, c: f64, c3: f64, s: f64) -> (bool, String) {
    if c3 <= 0.0 && c3 * c3 >= c * c {
        return (true, format!("c3 = {c3} <= 0 and c3^2 >= c^2 = {}", c * c));
    }
    let denom = 1.0 - (n as f64 - 2.0) * s.abs();
    if c3 < 0.0 && denom > 0.0 && s * s / denom >= (c3 * c3 - c * c) / c3 {
        return (
            true,
            format!("s^2/(1-(N-2)|s|) = {} >= (c3^2-c^2)/c3 = {}", s * s / denom, (c3 * c3 - c * c) / c3),
        );
    }
    (false, format!("c3 = {c3}, c = {c}, s = {s}: no case-1 inequality holds"))
}

/// Region classification. `s = 0` selects Case 2 even when Case 1 holds too.
pub fn classify_region(params: &FamilyParams) -> CaseRegion {
    let FamilyParams { n_qubits, c1, c2, c3, s } = *params;
    let c = c1.abs().max(c2.abs());
    let big_c = c.max(c3.abs());
    let (case1, detail) = case1_holds(n_qubits, c, c3, s);
    let (region, condition_detail) = if s.abs() <= S_ZERO_TOL {
        let extra = if case1 { "; case 1 also holds" } else { "" };
        (Region::Case2SZero, format!("s = 0, C = {big_c}{extra}"))
    } else if case1 {
        (Region::Case1, detail)
    } else {
        (Region::None, detail)
    };
    CaseRegion { region, c, big_c, condition_detail }
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `max W = 2^-N sum_{j=0}^{N-1} C(N-1, j) H_{(N-1-2j) s}(|s + (-1)^j c3|)`,
/// the all-z measurement value where `j` counts minus outcomes.
pub fn max_w_parity(n: usize, c3: f64, s: f64) -> f64 {
    let m = n - 1;
    let total: f64 = (0..=m)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let shift = (m as f64 - 2.0 * j as f64) * s;
            binomial(m, j) * binary_h_clamped((s + sign * c3).abs(), shift)
        })
        .sum();
    total / (1u64 << n) as f64
}

/// Three-qubit `max W` with the alternative argument listing.
pub fn max_w_printed_3q(c3: f64, s: f64) -> f64 {
    let plus = (s + c3).abs();
    let minus = (s - c3).abs();
    (binary_h_clamped(plus, 2.0 * s)
        + binary_h_clamped(minus, -2.0 * s)
        + h0(plus)
        + h0(minus))
        / 8.0
}

/// Four-qubit bracket `[H_3s(|s+c3|) + H_-3s(|s-c3|) + 3 H_s(|s-c3|) + 3 H_-s(|s+c3|)] / 16`.
pub fn max_w_four_qubit(c3: f64, s: f64) -> f64 {
    let plus = (s + c3).abs();
    let minus = (s - c3).abs();
    (binary_h_clamped(plus, 3.0 * s)
        + binary_h_clamped(minus, -3.0 * s)
        + 3.0 * binary_h_clamped(minus, s)
        + 3.0 * binary_h_clamped(plus, -s))
        / 16.0
}

/// `max W` through the four residue-class listings `N = 4n, 4n+1, 4n+2,
/// 4n+3` with `n >= 1`. Must agree with [`max_w_parity`].
pub fn max_w_by_residue(n_qubits: usize, c3: f64, s: f64) -> Result<f64> {
    if n_qubits < 4 {
        return Err(Error::ParamRange(format!(
            "residue listings need N >= 4, got {n_qubits}"
        )));
    }
    let n = n_qubits / 4;
    let plus = (s + c3).abs();
    let minus = (s - c3).abs();
    let h = |shift: i64, x: f64| binary_h_clamped(x, shift as f64 * s);
    let n4 = 4 * n as i64;
    let mut total = 0.0;
    match n_qubits % 4 {
        0 => {
            for k in 0..2 * n {
                let ki = k as i64;
                total += binomial(4 * n - 1, 2 * k) * h(n4 - 4 * ki - 1, plus);
                total += binomial(4 * n - 1, 2 * k + 1) * h(n4 - 4 * ki - 3, minus);
            }
        }
        1 => {
            for k in 0..=2 * n {
                total += binomial(4 * n, 2 * k) * h(n4 - 4 * k as i64, plus);
            }
            for k in 0..2 * n {
                total += binomial(4 * n, 2 * k + 1) * h(n4 - 4 * k as i64 - 2, minus);
            }
        }
        2 => {
            for k in 0..=2 * n {
                let ki = k as i64;
                total += binomial(4 * n + 1, 2 * k) * h(n4 - 4 * ki + 1, plus);
                total += binomial(4 * n + 1, 2 * k + 1) * h(n4 - 4 * ki - 1, minus);
            }
        }
        _ => {
            for k in 0..=2 * n + 1 {
                total += binomial(4 * n + 2, 2 * k) * h(n4 - 4 * k as i64 + 2, plus);
            }
            for k in 0..=2 * n {
                total += binomial(4 * n + 2, 2 * k + 1) * h(n4 - 4 * k as i64, minus);
            }
        }
    }
    Ok(total / (1u64 << n_qubits) as f64)
}

/// `max W` for parameters in the Case 1 region.
pub fn max_w(params: &FamilyParams, pattern: MaxWPattern) -> Result<f64> {
    params.validate()?;
    let FamilyParams { n_qubits, c1, c2, c3, s } = *params;
    let c = c1.abs().max(c2.abs());
    let (case1, detail) = case1_holds(n_qubits, c, c3, s);
    if !case1 {
        return Err(Error::RegionMismatch(detail));
    }
    match pattern {
        MaxWPattern::Parity => Ok(max_w_parity(n_qubits, c3, s)),
        MaxWPattern::Printed if n_qubits == 3 => Ok(max_w_printed_3q(c3, s)),
        MaxWPattern::Printed => Err(Error::RegionMismatch(format!(
            "the printed pattern is a three-qubit listing, got N = {n_qubits}"
        ))),
    }
}

/// Closed-form spectrum for N = 3, 4; dense eigensolver otherwise.
pub fn family_spectrum(params: &FamilyParams) -> Result<SpectrumResult> {
    match params.n_qubits {
        3 => closed_form_spectrum_3q(params),
        4 => closed_form_spectrum_4q(params),
        _ => hermitian_eigenvalues(&realize(&build_symmetric_family(params)?)?),
    }
}

fn size_label(n: usize) -> String {
    match n {
        2..=4 => format!("{n}q"),
        _ => format!("{n}q/mod4={}", n % 4),
    }
}

/// Discord of the symmetric family from its case region.
pub fn discord_symmetric(params: &FamilyParams) -> Result<DiscordResult> {
    params.validate()?;
    let region = classify_region(params);
    let n = params.n_qubits;
    let FamilyParams { c1, c2, c3, s, .. } = *params;
    match region.region {
        Region::Case2SZero => {
            let half_hc = 0.5 * h0(region.big_c);
            let (value, spectrum) = match n {
                3 => {
                    let r = (c1 * c1 + c2 * c2 + c3 * c3).sqrt();
                    (0.5 * h0(r) - half_hc, closed_form_spectrum_3q(params)?)
                }
                4 => {
                    let bracket = xlog2x(1.0 + c1 + c2 + c3)
                        + xlog2x(1.0 + c1 - c2 - c3)
                        + xlog2x(1.0 - c1 + c2 - c3)
                        + xlog2x(1.0 - c1 - c2 + c3);
                    (0.25 * bracket - half_hc, closed_form_spectrum_4q(params)?)
                }
                _ => {
                    let spec = family_spectrum(params)?;
                    (spec.sum_lambda_log2_lambda() + n as f64 - half_hc, spec)
                }
            };
            Ok(DiscordResult {
                value,
                branch: format!("{}/case2", size_label(n)),
                region: Some(region),
                max_w: Some(half_hc),
                spectrum_used: Some(spectrum),
            })
        }
        Region::Case1 => {
            let spec = family_spectrum(params)?;
            let w = max_w_parity(n, c3, s);
            let branch = if n == 3 {
                "3q/case1(parity)".to_string()
            } else {
                format!("{}/case1", size_label(n))
            };
            Ok(DiscordResult {
                value: spec.sum_lambda_log2_lambda() + n as f64 - w,
                branch,
                region: Some(region),
                max_w: Some(w),
                spectrum_used: Some(spec),
            })
        }
        Region::None => Err(Error::NoAnalyticCase(region.condition_detail)),
    }
}

/// Discord of `2^-N (I + sum_i s_i Z_i)`:
/// `sum lambda log2 lambda + N - 2^-N sum_u H_{sum_{i<N} (-1)^{u_i} s_i}(|s_N|)`.
/// The state is diagonal in a product basis, so the value is zero.
pub fn discord_diagonal_field(params: &DiagonalFieldParams) -> Result<DiscordResult> {
    params.validate()?;
    let n = params.n_qubits();
    let total: f64 = params.fields.iter().map(|s| s.abs()).sum();
    if total > 1.0 + 1e-12 {
        // the smallest eigenvalue is (1 - sum |s_i|) / 2^N
        return Err(Error::Unphysical((1.0 - total) / (1u64 << n) as f64));
    }
    if n < 2 {
        return Err(Error::ParamRange("discord needs at least two qubits".into()));
    }
    let spec = diagonal_field_spectrum(&params.fields);
    let last = params.fields[n - 1].abs();
    let head = &params.fields[..n - 1];
    let w: f64 = (0..1usize << (n - 1))
        .map(|u| {
            let shift: f64 = head
                .iter()
                .enumerate()
                .map(|(i, &s)| if (u >> i) & 1 == 0 { s } else { -s })
                .sum();
            binary_h_clamped(last, shift)
        })
        .sum::<f64>()
        / (1u64 << n) as f64;
    Ok(DiscordResult {
        value: spec.sum_lambda_log2_lambda() + n as f64 - w,
        region: None,
        branch: "diagonal-field".into(),
        max_w: Some(w),
        spectrum_used: Some(spec),
    })
}

/// Noisy GHZ discord:
/// `(1-mu)/2^N log2(1-mu) + (1+(2^N-1)mu)/2^N log2(1+(2^N-1)mu)
///  - (1+(2^{N-1}-1)mu)/2^{N-1} log2(1+(2^{N-1}-1)mu)`.
pub fn discord_ghz(params: &GhzParams) -> Result<DiscordResult> {
    params.validate()?;
    let full = (1u64 << params.n_qubits) as f64;
    let half = full / 2.0;
    let mu = params.mu;
    let value = (xlog2x(1.0 - mu) + xlog2x(1.0 + (full - 1.0) * mu)) / full
        - xlog2x(1.0 + (half - 1.0) * mu) / half;
    Ok(DiscordResult {
        value,
        region: None,
        branch: "ghz".into(),
        max_w: None,
        spectrum_used: Some(closed_form_spectrum_ghz(params)?),
    })
}
