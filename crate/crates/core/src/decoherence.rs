//! Local phase-flip channel, evolved-state discord and freezing detection.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic_discord::{classify_region, discord_symmetric, max_w_parity, DiscordResult, Region};
use crate::measurement_oracle::{minimize_discord, minimize_reduced, OracleConfig};
use crate::numfmt::sig9;
use crate::pauli_state::{build_symmetric_family, realize, DensityMatrix, FamilyParams, PauliSum};
use crate::spectral::{binary_h_clamped, closed_form_spectrum_3q, closed_form_spectrum_4q, h0};
use crate::{Error, Result, C64};

/// Plateau deviation that ends a frozen segment in a series.
pub const PLATEAU_TOL: f64 = 1e-6;
/// Default tolerance on `c2 = +-c1 c3` in freeze detection.
pub const FREEZE_MATCH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelParams {
    pub p: f64,
    pub gamma: Option<f64>,
    pub t: Option<f64>,
}

impl ChannelParams {
    pub fn new(p: f64) -> Result<Self> {
        check_p(p)?;
        Ok(Self { p, gamma: None, t: None })
    }

    /// `p = 1 - exp(-gamma t)`.
    pub fn from_rate(gamma: f64, t: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0 && t.is_finite() && t >= 0.0) {
            return Err(Error::ParamRange(format!("rate {gamma} and time {t} must be nonnegative")));
        }
        let p = -(-gamma * t).exp_m1();
        check_p(p)?;
        Ok(Self { p, gamma: Some(gamma), t: Some(t) })
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ParamRange(format!("p = {p} outside [0, 1]")));
    }
    Ok(())
}

/// Products of the per-site pair `sqrt(1-p/2) I`, `sqrt(p/2) Z`.
#[derive(Debug, Clone)]
pub struct KrausSet {
    pub n_qubits: usize,
    pub operators: Vec<DMatrix<C64>>,
}

impl KrausSet {
    /// `max |sum K^dag K - I|`.
    pub fn completeness_error(&self) -> f64 {
        let dim = 1usize << self.n_qubits;
        let mut sum = DMatrix::<C64>::zeros(dim, dim);
        for k in &self.operators {
            sum += k.adjoint() * k;
        }
        (sum - DMatrix::<C64>::identity(dim, dim)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.n_qubits() != self.n_qubits {
            return Err(Error::WrongQubitCount { expected: self.n_qubits, got: rho.n_qubits() });
        }
        let dim = rho.dim();
        let mut out = DMatrix::<C64>::zeros(dim, dim);
        for k in &self.operators {
            out += k * rho.matrix() * k.adjoint();
        }
        DensityMatrix::from_matrix(self.n_qubits, out)
    }
}

pub fn phase_flip_kraus(n_qubits: usize, p: f64) -> Result<KrausSet> {
    check_p(p)?;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let a = C64::new((1.0 - 0.5 * p).sqrt(), 0.0);
    let b = C64::new((0.5 * p).sqrt(), 0.0);
    let site = [
        DMatrix::from_row_slice(2, 2, &[a * one, zero, zero, a * one]),
        DMatrix::from_row_slice(2, 2, &[b * one, zero, zero, -b * one]),
    ];
    let mut ops = vec![DMatrix::<C64>::identity(1, 1)];
    for _ in 0..n_qubits {
        ops = ops
            .iter()
            .flat_map(|k| site.iter().map(move |g| k.kronecker(g)))
            .collect();
    }
    Ok(KrausSet { n_qubits, operators: ops })
}

/// Scales each word by `(1-p)^w`, `w` its number of X and Y letters.
pub fn apply_phase_flip(state: &PauliSum, p: f64) -> Result<PauliSum> {
    check_p(p)?;
    state.map_weights(|word, w| w * (1.0 - p).powi(word.flip_weight() as i32))
}

/// Family parameters after dephasing: `c1, c2` pick up `(1-p)^N`.
pub fn evolved_params(params: &FamilyParams, p: f64) -> Result<FamilyParams> {
    check_p(p)?;
    let damp = (1.0 - p).powi(params.n_qubits as i32);
    FamilyParams::new(params.n_qubits, params.c1 * damp, params.c2 * damp, params.c3, params.s)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DynamicsIntermediates {
    pub zeta: Option<f64>,
    pub eta: Option<f64>,
    pub e: Option<f64>,
    pub f: Option<f64>,
    pub g: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolvedDiscord {
    pub result: DiscordResult,
    pub intermediates: DynamicsIntermediates,
}

/// Discord of the dephased family. N = 3 uses
/// `sum lambda log2 lambda + 3 = (3/8) H(zeta) + (1/8) H(eta)`; N = 4 uses
/// `(3/16) H_c3(e) + (1/4) H_-c3(f) + (1/16) H_c3(g)` with
/// `e = (c1+c2)(1-p)^4`. Other N go through [`discord_symmetric`].
pub fn evolved_discord(params: &FamilyParams, p: f64) -> Result<EvolvedDiscord> {
    params.validate()?;
    let ev = evolved_params(params, p)?;
    let region = classify_region(&ev);
    let n = params.n_qubits;
    if n != 3 && n != 4 {
        let result = discord_symmetric(&ev).map_err(|e| match e {
            Error::NoAnalyticCase(d) => Error::RegionMismatch(d),
            other => other,
        })?;
        return Ok(EvolvedDiscord { result, intermediates: DynamicsIntermediates::default() });
    }
    let subtract = match region.region {
        Region::Case2SZero => 0.5 * h0(region.big_c),
        Region::Case1 => max_w_parity(n, ev.c3, ev.s),
        Region::None => return Err(Error::RegionMismatch(region.condition_detail)),
    };
    let FamilyParams { c1, c2, c3, s, .. } = ev;
    let (sum_log, intermediates, spectrum) = if n == 3 {
        let perp = c1 * c1 + c2 * c2;
        let zeta = (perp + (c3 - s).powi(2)).sqrt();
        let eta = (perp + (c3 + 3.0 * s).powi(2)).sqrt();
        let v = 0.375 * h0(zeta) + 0.125 * h0(eta) - 3.0;
        let im = DynamicsIntermediates { zeta: Some(zeta), eta: Some(eta), ..Default::default() };
        (v, im, closed_form_spectrum_3q(&ev)?)
    } else {
        let e = c1 + c2;
        let f = ((c1 - c2).powi(2) + 4.0 * s * s).sqrt();
        let g = ((c1 + c2).powi(2) + 16.0 * s * s).sqrt();
        let v = (3.0 * binary_h_clamped(e, c3) + 4.0 * binary_h_clamped(f, -c3) + binary_h_clamped(g, c3))
            / 16.0
            - 4.0;
        let im = DynamicsIntermediates { e: Some(e), f: Some(f), g: Some(g), ..Default::default() };
        (v, im, closed_form_spectrum_4q(&ev)?)
    };
    let case = match region.region {
        Region::Case1 => "case1",
        _ => "case2",
    };
    let branch = format!("{n}q/{case}/evolved");
    Ok(EvolvedDiscord {
        result: DiscordResult {
            value: sum_log + n as f64 - subtract,
            region: Some(region),
            branch,
            max_w: Some(subtract),
            spectrum_used: Some(spectrum),
        },
        intermediates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMethod {
    Analytic,
    /// Reduced `z3` optimizer, N <= 6.
    Reduced,
    /// Full tree minimization on the dense state, N <= 4.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsRow {
    pub p: f64,
    /// `None` when this row failed; see `error`.
    pub discord_bits: Option<f64>,
    pub branch: String,
    pub intermediates: DynamicsIntermediates,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsSeries {
    pub rows: Vec<DynamicsRow>,
}

impl DynamicsSeries {
    pub fn values(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.discord_bits).collect()
    }

    /// `p,discord_bits,branch` with nine significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,discord_bits,branch\n");
        for r in &self.rows {
            let v = r.discord_bits.map(sig9).unwrap_or_else(|| "nan".into());
            out.push_str(&format!("{},{},{}\n", sig9(r.p), v, r.branch));
        }
        out
    }
}

/// `steps` evenly spaced points from 0 to `p_max` inclusive.
pub fn p_grid(steps: usize, p_max: f64) -> Result<Vec<f64>> {
    check_p(p_max)?;
    match steps {
        0 => Err(Error::ParamRange("grid needs at least one point".into())),
        1 => Ok(vec![0.0]),
        _ => Ok((0..steps).map(|i| p_max * i as f64 / (steps - 1) as f64).collect()),
    }
}

/// Grid over `t` in `[0, t_max]` mapped through `p = 1 - exp(-gamma t)`.
pub fn time_grid(gamma: f64, t_max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::ParamRange("grid needs at least one point".into()));
    }
    let denom = (steps.max(2) - 1) as f64;
    (0..steps)
        .map(|i| ChannelParams::from_rate(gamma, t_max * i as f64 / denom).map(|c| c.p))
        .collect()
}

fn sweep_row(params: &FamilyParams, p: f64, method: SweepMethod, cfg: &OracleConfig) -> DynamicsRow {
    let outcome: Result<(f64, String, DynamicsIntermediates)> = (|| match method {
        SweepMethod::Analytic => {
            let ev = evolved_discord(params, p)?;
            Ok((ev.result.value, ev.result.branch, ev.intermediates))
        }
        SweepMethod::Reduced => {
            let r = minimize_reduced(&evolved_params(params, p)?, cfg)?;
            Ok((r.value, "reduced-oracle".into(), DynamicsIntermediates::default()))
        }
        SweepMethod::Oracle => {
            let rho = realize(&apply_phase_flip(&build_symmetric_family(params)?, p)?)?;
            let r = minimize_discord(&rho, cfg)?;
            Ok((r.value, "oracle".into(), DynamicsIntermediates::default()))
        }
    })();
    match outcome {
        Ok((v, branch, intermediates)) => {
            DynamicsRow { p, discord_bits: Some(v), branch, intermediates, error: None }
        }
        Err(e) => DynamicsRow {
            p,
            discord_bits: None,
            branch: "error".into(),
            intermediates: DynamicsIntermediates::default(),
            error: Some(e.to_string()),
        },
    }
}

/// Discord along `grid`; rows come back in grid order and a failing row is
/// marked instead of aborting the sweep.
pub fn dynamics_sweep(
    params: &FamilyParams,
    grid: &[f64],
    method: SweepMethod,
    cfg: &OracleConfig,
) -> Result<DynamicsSeries> {
    params.validate()?;
    if grid.is_empty() {
        return Err(Error::ParamRange("empty grid".into()));
    }
    for p in grid {
        check_p(*p)?;
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::ParamRange("grid must be strictly increasing".into()));
    }
    let rows = grid.par_iter().map(|&p| sweep_row(params, p, method, cfg)).collect();
    Ok(DynamicsSeries { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FreezeMethod {
    AnalyticBoundary,
    SeriesChangepoint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreezeReport {
    pub frozen: bool,
    pub frozen_value: Option<f64>,
    pub p_star: Option<f64>,
    pub method: FreezeMethod,
}

impl FreezeReport {
    fn not_frozen() -> Self {
        Self { frozen: false, frozen_value: None, p_star: None, method: FreezeMethod::AnalyticBoundary }
    }
}

/// Freezing needs `s = 0`, even N, `c2 = (-1)^{N/2} c1 c3` (the spectrum
/// then factorizes into a `c3` part and an in-plane part) and
/// `|c1| >= |c3|`. The plateau ends where `|c1| (1-p)^N = |c3|`.
pub fn detect_freeze_transition(params: &FamilyParams) -> FreezeReport {
    detect_freeze_transition_with_tol(params, FREEZE_MATCH_TOL)
}

/// As [`detect_freeze_transition`] with an explicit tolerance on the
/// `c2` relation, for parameters typed as rounded decimals.
pub fn detect_freeze_transition_with_tol(params: &FamilyParams, tol: f64) -> FreezeReport {
    let FamilyParams { n_qubits: n, c1, c2, c3, s } = *params;
    if s.abs() > 1e-14 || n % 2 == 1 {
        return FreezeReport::not_frozen();
    }
    let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
    if (c2 - sign * c1 * c3).abs() > tol || c1.abs() < c3.abs() || c1 == 0.0 {
        return FreezeReport::not_frozen();
    }
    let boundary = 1.0 - (c3.abs() / c1.abs()).powf(1.0 / n as f64);
    // refine on the sign change of |c1|(1-p)^N - |c3|
    let gap = |p: f64| c1.abs() * (1.0 - p).powi(n as i32) - c3.abs();
    let (mut lo, mut hi) = ((boundary - 1e-6).max(0.0), (boundary + 1e-6).min(1.0));
    if gap(lo) >= 0.0 && gap(hi) <= 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if gap(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
    }
    FreezeReport {
        frozen: true,
        frozen_value: Some(0.5 * h0(c3)),
        p_star: Some(0.5 * (lo + hi)),
        method: FreezeMethod::AnalyticBoundary,
    }
}

/// First grid `p` whose value leaves `frozen_value` by more than
/// [`PLATEAU_TOL`], or `None` if the plateau never ends on the grid.
pub fn series_changepoint(series: &DynamicsSeries, frozen_value: f64) -> Option<f64> {
    series
        .rows
        .iter()
        .find(|r| r.discord_bits.is_none_or(|v| (v - frozen_value).abs() > PLATEAU_TOL))
        .map(|r| r.p)
}

/// Freeze report read off a computed series.
pub fn freeze_from_series(series: &DynamicsSeries, frozen_value: f64) -> FreezeReport {
    let first_ok = series
        .rows
        .first()
        .and_then(|r| r.discord_bits)
        .is_some_and(|v| (v - frozen_value).abs() <= PLATEAU_TOL);
    FreezeReport {
        frozen: first_ok,
        frozen_value: first_ok.then_some(frozen_value),
        p_star: if first_ok { series_changepoint(series, frozen_value) } else { None },
        method: FreezeMethod::SeriesChangepoint,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn freezing(n: usize) -> FamilyParams {
        let c1 = 5.0 / 6.0;
        FamilyParams::new(n, c1, c1 * -0.2, -0.2, 0.0).unwrap()
    }

    #[test]
    fn channel_params() {
        assert!(ChannelParams::new(1.2).is_err());
        let c = ChannelParams::from_rate(0.5, 2.0).unwrap();
        assert!((c.p - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert!(ChannelParams::from_rate(-1.0, 1.0).is_err());
    }

    #[test]
    fn kraus_identity_at_zero() {
        let rho = realize(&build_symmetric_family(&FamilyParams::new(3, 0.2, 0.1, -0.3, 0.1).unwrap()).unwrap()).unwrap();
        let out = phase_flip_kraus(3, 0.0).unwrap().apply(&rho).unwrap();
        assert!(out.max_abs_diff(&rho) < 1e-14);
    }

    #[test]
    fn kraus_completeness() {
        for n in 1..=4 {
            for p in [0.0, 0.25, 1.0] {
                let k = phase_flip_kraus(n, p).unwrap();
                assert_eq!(k.operators.len(), 1 << n);
                assert!(k.completeness_error() < 1e-12);
            }
        }
    }

    #[test]
    fn coefficient_rule() {
        let fam = FamilyParams::new(3, 0.4, 0.2, -0.1, 0.05).unwrap();
        let out = apply_phase_flip(&build_symmetric_family(&fam).unwrap(), 0.3).unwrap();
        assert!((out.weight_of("XXX") - 0.4 * 0.7f64.powi(3)).abs() < 1e-15);
        assert!((out.weight_of("YYY") - 0.2 * 0.7f64.powi(3)).abs() < 1e-15);
        assert_eq!(out.weight_of("ZZZ"), -0.1);
        assert_eq!(out.weight_of("IZI"), 0.05);
        let gone = apply_phase_flip(&build_symmetric_family(&fam).unwrap(), 1.0).unwrap();
        assert_eq!(gone.weight_of("XXX"), 0.0);
    }

    #[test]
    fn evolved_matches_static_at_zero() {
        for p in [
            FamilyParams::new(3, 0.1, 0.1, -0.2, 0.3).unwrap(),
            FamilyParams::new(3, 0.3, 0.2, 0.1, 0.0).unwrap(),
            FamilyParams::new(4, 0.1, 0.2, -0.3, 0.1).unwrap(),
            freezing(4),
        ] {
            let a = evolved_discord(&p, 0.0).unwrap().result.value;
            let b = discord_symmetric(&p).unwrap().value;
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn three_qubit_zero_field_form() {
        let p = FamilyParams::new(3, 0.1, 0.05, -0.4, 0.0).unwrap();
        let pp = 0.2;
        let z = ((0.1f64.powi(2) + 0.05f64.powi(2)) * 0.8f64.powi(6) + 0.16).sqrt();
        let want = 0.375 * h0(z) + 0.125 * h0(z) - 0.5 * h0(0.4);
        let got = evolved_discord(&p, pp).unwrap();
        assert!((got.result.value - want).abs() < 1e-14);
        assert_eq!(got.intermediates.zeta, got.intermediates.eta);
    }

    #[test]
    fn four_qubit_plateau() {
        let frozen = 0.5 * h0(0.2);
        for p in [0.0, 0.1, 0.2, 0.29] {
            let v = evolved_discord(&freezing(4), p).unwrap().result.value;
            assert!((v - frozen).abs() < 1e-12, "p = {p}: {v}");
        }
        assert!(evolved_discord(&freezing(4), 0.35).unwrap().result.value < frozen - 1e-4);
    }

    #[test]
    fn freeze_report_examples() {
        let r = detect_freeze_transition(&freezing(4));
        assert!(r.frozen);
        let p_star = r.p_star.unwrap();
        assert!((p_star - (1.0 - 0.24f64.powf(0.25))).abs() < 1e-12);
        assert!((p_star - 0.3001).abs() < 1e-4);

        let edge = FamilyParams::new(4, 0.3, 0.09, 0.3, 0.0).unwrap();
        assert!(detect_freeze_transition(&edge).p_star.unwrap().abs() < 1e-12);

        let never = FamilyParams::new(4, 0.2, 0.2 * -0.5, -0.5, 0.0).unwrap();
        assert!(!detect_freeze_transition(&never).frozen);
        assert!(!detect_freeze_transition(&freezing(3)).frozen);
        let with_field = FamilyParams::new(4, 5.0 / 6.0, -1.0 / 6.0, -0.2, 0.1).unwrap();
        assert!(!detect_freeze_transition(&with_field).frozen);

        let rounded = FamilyParams::new(4, 0.833_333_333_3, -0.166_666_666_7, -0.2, 0.0).unwrap();
        assert!(!detect_freeze_transition(&rounded).frozen);
        assert!(detect_freeze_transition_with_tol(&rounded, 1e-9).frozen);
    }

    #[test]
    fn sweep_single_point_and_csv() {
        let cfg = OracleConfig::default();
        let s = dynamics_sweep(&freezing(4), &[0.0], SweepMethod::Analytic, &cfg).unwrap();
        assert_eq!(s.rows.len(), 1);
        assert!((s.rows[0].discord_bits.unwrap() - discord_symmetric(&freezing(4)).unwrap().value).abs() < 1e-12);
        assert_eq!(s.to_csv(), "p,discord_bits,branch\n0,0.0290494055,4q/case2/evolved\n");
        assert!(dynamics_sweep(&freezing(4), &[0.2, 0.1], SweepMethod::Analytic, &cfg).is_err());
    }

    #[test]
    fn failing_rows_are_marked() {
        let p = FamilyParams::new(3, 0.6, 0.6, 0.5, 0.2).unwrap();
        let s = dynamics_sweep(&p, &[0.0, 0.5], SweepMethod::Analytic, &OracleConfig::default()).unwrap();
        assert!(s.rows[0].error.is_some());
        assert_eq!(s.rows[0].branch, "error");
    }

    #[test]
    fn grids() {
        let g = p_grid(91, 0.9).unwrap();
        assert_eq!(g.len(), 91);
        assert!((g[29] - 0.29).abs() < 1e-15);
        assert_eq!(g[90], 0.9);
        let t = time_grid(1.0, 2.0, 3).unwrap();
        assert!((t[2] - (1.0 - (-2.0f64).exp())).abs() < 1e-15);
    }
}
