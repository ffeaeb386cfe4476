//! Numerical discord by minimizing over sequential conditional projective
//! measurements, plus the reduced `z3` optimizer for the symmetric family.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic_discord::family_spectrum;
use crate::nelder_mead::{self, SimplexOptions};
use crate::pauli_state::{partial_trace, DensityMatrix, FamilyParams};
use crate::spectral::{binary_h_clamped, h0, qubit_entropy, von_neumann_entropy, xlog2x};
use crate::{Error, Result, C64};

/// Largest N accepted by [`minimize_discord`].
pub const FULL_ORACLE_CAP: usize = 4;
/// Largest N accepted by [`minimize_reduced`].
pub const REDUCED_ORACLE_CAP: usize = 6;
/// Branches below this probability are dropped from entropy averages.
pub const NEGLIGIBLE_PROBABILITY: f64 = 1e-14;
/// Spread above which the start count is doubled once.
pub const RUGGED_SPREAD: f64 = 1e-4;

const UNIT_TOL: f64 = 1e-12;

/// Unit Bloch vector `(z1, z2, z3)` of a projective measurement
/// `P_+- = (I +- z.sigma)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochDirection {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochDirection {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::ParamRange(format!("direction norm {norm} is not 1")));
        }
        Ok(Self { x, y, z })
    }

    /// `(sin t cos f, sin t sin f, cos t)`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self { x: st * cp, y: st * sp, z: ct }
    }

    pub fn plus_z() -> Self {
        Self { x: 0.0, y: 0.0, z: 1.0 }
    }

    pub fn flipped(self) -> Self {
        Self { x: -self.x, y: -self.y, z: -self.z }
    }

    fn norm_error(&self) -> f64 {
        ((self.x * self.x + self.y * self.y + self.z * self.z).sqrt() - 1.0).abs()
    }

    /// Entries `(P00, P01, P10, P11)` of `(I + sign z.sigma)/2`.
    fn projector(&self, sign: f64) -> [C64; 4] {
        [
            C64::new(0.5 * (1.0 + sign * self.z), 0.0),
            C64::new(0.5 * sign * self.x, -0.5 * sign * self.y),
            C64::new(0.5 * sign * self.x, 0.5 * sign * self.y),
            C64::new(0.5 * (1.0 - sign * self.z), 0.0),
        ]
    }
}

/// One direction per outcome prefix of the first `n_measured` qubits,
/// stored in heap order: the prefix `u1..uk` (bit 0 is the `+` outcome,
/// `u1` most significant) lives at `2^k - 1 + value(u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementTree {
    pub n_measured: usize,
    pub directions: Vec<BlochDirection>,
}

/// Heap index of the node reached after `len` outcomes with value `prefix`.
pub fn node_index(len: usize, prefix: usize) -> usize {
    (1usize << len) - 1 + prefix
}

impl MeasurementTree {
    pub fn new(n_measured: usize, directions: Vec<BlochDirection>) -> Result<Self> {
        let expected = (1usize << n_measured) - 1;
        if n_measured == 0 || directions.len() != expected {
            return Err(Error::IncompleteTree { expected, got: directions.len() });
        }
        if let Some(d) = directions.iter().find(|d| d.norm_error() > UNIT_TOL) {
            return Err(Error::ParamRange(format!("non-unit direction {d:?}")));
        }
        Ok(Self { n_measured, directions })
    }

    /// The same direction at every node.
    pub fn uniform(n_measured: usize, dir: BlochDirection) -> Result<Self> {
        Self::new(n_measured, vec![dir; (1usize << n_measured) - 1])
    }

    /// Two angles `(theta, phi)` per node in heap order.
    pub fn from_angles(n_measured: usize, angles: &[f64]) -> Result<Self> {
        let dirs = angles
            .chunks(2)
            .map(|c| BlochDirection::from_angles(c[0], c[1]))
            .collect();
        Self::new(n_measured, dirs)
    }

    /// Directions drawn uniformly on the sphere.
    pub fn random(n_measured: usize, rng: &mut impl RngExt) -> Self {
        let angles = random_angles(n_measured, rng);
        Self::from_angles(n_measured, &angles).expect("angles give unit vectors")
    }

    pub fn direction(&self, len: usize, prefix: usize) -> BlochDirection {
        self.directions[node_index(len, prefix)]
    }

    /// Every direction negated. Negating swaps the `+`/`-` labels, so the
    /// node for prefix `u` takes the old node for the complemented prefix.
    pub fn flipped(&self) -> Self {
        let mut directions = Vec::with_capacity(self.directions.len());
        for len in 0..self.n_measured {
            let top = (1usize << len) - 1;
            directions.extend((0..=top).map(|u| self.direction(len, top - u).flipped()));
        }
        Self { n_measured: self.n_measured, directions }
    }
}

fn random_angles(n_measured: usize, rng: &mut impl RngExt) -> Vec<f64> {
    let nodes = (1usize << n_measured) - 1;
    let mut out = Vec::with_capacity(2 * nodes);
    for _ in 0..nodes {
        let cos_t: f64 = rng.random_range(-1.0..=1.0);
        out.push(cos_t.acos());
        out.push(rng.random_range(0.0..2.0 * PI));
    }
    out
}

fn default_starts() -> usize {
    64
}
fn default_max_iters() -> usize {
    2000
}
fn default_f_tol() -> f64 {
    1e-9
}
fn default_seed() -> u64 {
    42
}
fn default_axes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_f_tol")]
    pub f_tol: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_axes")]
    pub include_axes_starts: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            starts: default_starts(),
            max_iters: default_max_iters(),
            f_tol: default_f_tol(),
            seed: default_seed(),
            include_axes_starts: default_axes(),
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 {
            return Err(Error::ParamRange("starts must be at least 1".into()));
        }
        if !(self.f_tol.is_finite() && self.f_tol >= 0.0) {
            return Err(Error::ParamRange(format!("f_tol {} is not a tolerance", self.f_tol)));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Reduced coordinates: `z3` per tree node in heap order and optional
/// per-path radicands that replace the computed ones.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedPoint {
    pub z3: Vec<f64>,
    /// One value per deepest node (`2^{N-2}` entries).
    pub radicands: Option<Vec<f64>>,
}

impl ReducedPoint {
    pub fn uniform(n_qubits: usize, z: f64) -> Self {
        Self { z3: vec![z; (1usize << (n_qubits - 1)) - 1], radicands: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BestPoint {
    Tree(MeasurementTree),
    Reduced(ReducedPoint),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    /// Discord in bits.
    pub value: f64,
    pub best: BestPoint,
    pub starts_run: usize,
    pub starts_converged: usize,
    /// Max minus min over converged local optima.
    pub spread: f64,
}

/// One measured outcome string with its post-measurement state.
#[derive(Debug, Clone)]
pub struct ConditionalBranch {
    /// Outcome bits, 0 for `+`.
    pub outcomes: Vec<u8>,
    pub probability: f64,
    /// `Pi rho Pi / p`; `None` when `p` is below [`NEGLIGIBLE_PROBABILITY`].
    pub state: Option<DensityMatrix>,
}

impl ConditionalBranch {
    pub fn negligible(&self) -> bool {
        self.state.is_none()
    }
}

fn check_level(rho: &DensityMatrix, tree: &MeasurementTree, k: usize) -> Result<()> {
    let n = rho.n_qubits();
    if tree.n_measured != n - 1 {
        return Err(Error::IncompleteTree {
            expected: (1usize << (n - 1)) - 1,
            got: tree.directions.len(),
        });
    }
    if k == 0 || k >= n {
        return Err(Error::InvalidLevel { k, n });
    }
    Ok(())
}

fn projector_matrix(dir: &BlochDirection, sign: f64) -> DMatrix<C64> {
    let p = dir.projector(sign);
    DMatrix::from_row_slice(2, 2, &p)
}

/// The `2^k` outcomes of measuring the first `k` qubits along `tree`.
pub fn conditional_ensemble(
    rho: &DensityMatrix,
    tree: &MeasurementTree,
    k: usize,
) -> Result<Vec<ConditionalBranch>> {
    check_level(rho, tree, k)?;
    let n = rho.n_qubits();
    let rest = DMatrix::<C64>::identity(1 << (n - k), 1 << (n - k));
    let mut out = Vec::with_capacity(1 << k);
    for value in 0..1usize << k {
        let outcomes: Vec<u8> = (0..k).map(|i| ((value >> (k - 1 - i)) & 1) as u8).collect();
        let mut pi = DMatrix::<C64>::identity(1, 1);
        for (len, &bit) in outcomes.iter().enumerate() {
            let dir = tree.direction(len, value >> (k - len));
            let sign = if bit == 0 { 1.0 } else { -1.0 };
            pi = pi.kronecker(&projector_matrix(&dir, sign));
        }
        let pi = pi.kronecker(&rest);
        let unnorm = &pi * rho.matrix() * &pi;
        let probability = unnorm.trace().re;
        let state = if probability < NEGLIGIBLE_PROBABILITY {
            None
        } else {
            Some(DensityMatrix::from_unnormalized(n, unnorm))
        };
        out.push(ConditionalBranch { outcomes, probability, state });
    }
    Ok(out)
}

/// `tr_1[(P (x) I) m]` for the projector with entries `p`.
fn measure_first(m: &DMatrix<C64>, p: &[C64; 4]) -> DMatrix<C64> {
    let d = m.nrows() / 2;
    DMatrix::from_fn(d, d, |i, j| {
        p[0] * m[(i, j)] + p[2] * m[(i, d + j)] + p[1] * m[(d + i, j)] + p[3] * m[(d + i, d + j)]
    })
}

/// `p S(m / p)` for the first-qubit marginal of an unnormalized block `m`.
fn weighted_first_qubit_entropy(m: &DMatrix<C64>) -> f64 {
    let d = m.nrows() / 2;
    let (mut a, mut b, mut off) = (0.0, 0.0, C64::new(0.0, 0.0));
    for i in 0..d {
        a += m[(i, i)].re;
        b += m[(d + i, d + i)].re;
        off += m[(i, d + i)];
    }
    let p = a + b;
    if p < NEGLIGIBLE_PROBABILITY {
        return 0.0;
    }
    let r = ((a - b).powi(2) + 4.0 * off.norm_sqr()).sqrt() / p;
    p * qubit_entropy(r)
}

fn descend(m: &DMatrix<C64>, tree: &MeasurementTree, len: usize, prefix: usize, levels: &mut [f64]) {
    let dir = tree.direction(len, prefix);
    for (bit, sign) in [(0usize, 1.0), (1, -1.0)] {
        let child = measure_first(m, &dir.projector(sign));
        let p: f64 = (0..child.nrows()).map(|i| child[(i, i)].re).sum();
        if p < NEGLIGIBLE_PROBABILITY {
            continue;
        }
        levels[len] += weighted_first_qubit_entropy(&child);
        if len + 1 < tree.n_measured {
            descend(&child, tree, len + 1, 2 * prefix + bit, levels);
        }
    }
}

/// `S_{A_{k+1} | Pi^{A_1..A_k}}` for `k = 1..N-1`, all at once.
fn all_conditional_entropies(rho: &DensityMatrix, tree: &MeasurementTree) -> Vec<f64> {
    let mut levels = vec![0.0; tree.n_measured];
    descend(rho.matrix(), tree, 0, 0, &mut levels);
    levels
}

/// Average entropy of qubit `k+1` over the outcomes of measuring qubits
/// `1..k` along `tree`.
pub fn measured_conditional_entropy(
    rho: &DensityMatrix,
    tree: &MeasurementTree,
    k: usize,
) -> Result<f64> {
    check_level(rho, tree, k)?;
    Ok(all_conditional_entropies(rho, tree)[k - 1])
}

/// `S(rho) - S(rho_{A_1})`.
fn unmeasured_conditional(rho: &DensityMatrix) -> Result<f64> {
    Ok(von_neumann_entropy(rho)? - von_neumann_entropy(&partial_trace(rho, &[1])?)?)
}

/// Discord bracket for a fixed tree.
pub fn discord_objective(rho: &DensityMatrix, tree: &MeasurementTree) -> Result<f64> {
    if rho.n_qubits() < 2 {
        return Err(Error::ParamRange("discord needs at least two qubits".into()));
    }
    check_level(rho, tree, 1)?;
    let base = unmeasured_conditional(rho)?;
    Ok(all_conditional_entropies(rho, tree).iter().sum::<f64>() - base)
}

fn axis_angles(i: usize) -> (f64, f64) {
    match i {
        0 => (0.0, 0.0),
        1 => (PI, 0.0),
        2 => (0.5 * PI, 0.0),
        3 => (0.5 * PI, PI),
        4 => (0.5 * PI, 0.5 * PI),
        _ => (0.5 * PI, 1.5 * PI),
    }
}

fn start_point(cfg: &OracleConfig, index: usize, n_measured: usize) -> Vec<f64> {
    let nodes = (1usize << n_measured) - 1;
    if cfg.include_axes_starts && index < 6 {
        let (t, f) = axis_angles(index);
        return (0..nodes).flat_map(|_| [t, f]).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    random_angles(n_measured, &mut rng)
}

fn simplex_opts(cfg: &OracleConfig, step: f64) -> SimplexOptions {
    SimplexOptions { max_iters: cfg.max_iters, f_tol: cfg.f_tol, initial_step: step }
}

struct Local {
    x: Vec<f64>,
    f: f64,
    converged: bool,
}

/// Runs starts `range` in parallel and keeps them in index order.
fn run_starts<F>(range: std::ops::Range<usize>, f: F) -> Vec<Local>
where
    F: Fn(usize) -> Local + Sync,
{
    range.into_par_iter().map(&f).collect()
}

fn summarize(locals: &[Local]) -> (usize, f64, f64, usize) {
    let (best, _) = locals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.f.total_cmp(&b.1.f).then(a.0.cmp(&b.0)))
        .expect("at least one start");
    let conv: Vec<f64> = locals.iter().filter(|l| l.converged).map(|l| l.f).collect();
    let spread = if conv.is_empty() {
        0.0
    } else {
        conv.iter().cloned().fold(f64::MIN, f64::max) - conv.iter().cloned().fold(f64::MAX, f64::min)
    };
    (best, locals[best].f, spread, conv.len())
}

/// Multi-start simplex search; doubles the start count once when the
/// converged optima disagree by more than [`RUGGED_SPREAD`].
fn multistart<F>(cfg: &OracleConfig, f: F) -> (Vec<Local>, usize)
where
    F: Fn(usize) -> Local + Sync,
{
    let mut locals = run_starts(0..cfg.starts, &f);
    let (_, _, spread, _) = summarize(&locals);
    if spread > RUGGED_SPREAD {
        locals.extend(run_starts(cfg.starts..2 * cfg.starts, &f));
    }
    let best = summarize(&locals).0;
    (locals, best)
}

/// Minimum of [`discord_objective`] over trees, with the default cap.
pub fn minimize_discord(rho: &DensityMatrix, cfg: &OracleConfig) -> Result<OracleResult> {
    minimize_discord_with_cap(rho, cfg, FULL_ORACLE_CAP)
}

pub fn minimize_discord_with_cap(
    rho: &DensityMatrix,
    cfg: &OracleConfig,
    cap: usize,
) -> Result<OracleResult> {
    cfg.validate()?;
    let n = rho.n_qubits();
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    if n < 2 {
        return Err(Error::ParamRange("discord needs at least two qubits".into()));
    }
    let base = unmeasured_conditional(rho)?;
    let n_measured = n - 1;
    let objective = |angles: &[f64]| -> f64 {
        let tree = MeasurementTree::from_angles(n_measured, angles).expect("angles give unit vectors");
        all_conditional_entropies(rho, &tree).iter().sum::<f64>() - base
    };
    let local = |index: usize| -> Local {
        let x0 = start_point(cfg, index, n_measured);
        let first = nelder_mead::minimize(objective, &x0, simplex_opts(cfg, 0.5));
        let polish = nelder_mead::minimize(objective, &first.x, simplex_opts(cfg, 0.05));
        let (x, f) = if polish.f <= first.f { (polish.x, polish.f) } else { (first.x, first.f) };
        Local { x, f, converged: first.converged && polish.converged }
    };
    let (locals, best) = multistart(cfg, local);
    let (_, value, spread, converged) = summarize(&locals);
    let tree = MeasurementTree::from_angles(n_measured, &locals[best].x)?;
    Ok(OracleResult {
        value,
        best: BestPoint::Tree(tree),
        starts_run: locals.len(),
        starts_converged: converged,
        spread,
    })
}

/// How the last-level Bloch length is built from the reduced coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Radicand {
    /// `phi = c^2 prod(1 - z3^2) + c3^2 prod z3^2`, the best in-plane choice.
    #[default]
    Planar,
    /// `psi = c^2 [1 - (prod z3)^2] + c3^2 (prod z3)^2`, an upper envelope.
    Envelope,
}

/// Sign attached to the `2 s c3` cross term in the last-level radicand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CrossTerm {
    /// Product of all outcome signs.
    #[default]
    Parity,
    /// Sign of the final outcome only.
    LastOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReducedOptions {
    pub radicand: Radicand,
    pub cross_term: CrossTerm,
}

/// `levels[k-1] = 1 - S_k`; `g`, `f`, `t` are the first three of them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedObjective {
    pub g: f64,
    pub f: Option<f64>,
    pub t: Option<f64>,
    pub levels: Vec<f64>,
    pub y: f64,
    /// `Y + H(s)/2`.
    pub w: f64,
}

struct ReducedCtx<'a> {
    n_measured: usize,
    c: f64,
    c3: f64,
    s: f64,
    z3: &'a [f64],
    radicands: Option<&'a [f64]>,
    opts: ReducedOptions,
}

#[derive(Clone, Copy)]
struct PathState {
    a: f64,
    signed: f64,
    prod_z: f64,
    prod_q: f64,
}

fn reduced_descend(ctx: &ReducedCtx, len: usize, prefix: usize, st: PathState, levels: &mut [f64]) {
    let idx = node_index(len, prefix);
    let z = ctx.z3[idx];
    let k = len + 1;
    let weight = 1.0 / (1u64 << (k + 1)) as f64;
    for (bit, eps) in [(0usize, 1.0), (1, -1.0)] {
        let next = PathState {
            a: st.a + ctx.s * eps * z,
            signed: st.signed * eps * z,
            prod_z: st.prod_z * z,
            prod_q: st.prod_q * (1.0 - z * z),
        };
        let bloch = if k < ctx.n_measured {
            ctx.s.abs()
        } else {
            let phi = match (ctx.radicands, ctx.opts.radicand) {
                (Some(r), _) => r[prefix],
                (None, Radicand::Planar) => {
                    ctx.c * ctx.c * next.prod_q + ctx.c3 * ctx.c3 * next.prod_z * next.prod_z
                }
                (None, Radicand::Envelope) => {
                    let pz2 = next.prod_z * next.prod_z;
                    ctx.c * ctx.c * (1.0 - pz2) + ctx.c3 * ctx.c3 * pz2
                }
            };
            let cross = match ctx.opts.cross_term {
                CrossTerm::Parity => next.signed,
                CrossTerm::LastOutcome => eps * next.prod_z,
            };
            (phi + ctx.s * ctx.s + 2.0 * ctx.s * ctx.c3 * cross).max(0.0).sqrt()
        };
        levels[len] += weight * (binary_h_clamped(bloch, next.a) - 2.0 * xlog2x(1.0 + next.a));
        if k < ctx.n_measured {
            reduced_descend(ctx, len + 1, 2 * prefix + bit, next, levels);
        }
    }
}

/// Reduced objective at `point`. With `radicands` set, those values replace
/// the computed last-level radicands path by path.
pub fn reduced_objective(
    params: &FamilyParams,
    point: &ReducedPoint,
    opts: ReducedOptions,
) -> Result<ReducedObjective> {
    params.validate()?;
    let n = params.n_qubits;
    let nodes = (1usize << (n - 1)) - 1;
    if point.z3.len() != nodes {
        return Err(Error::IncompleteTree { expected: nodes, got: point.z3.len() });
    }
    if let Some(z) = point.z3.iter().find(|z| !(-1.0..=1.0).contains(*z)) {
        return Err(Error::ParamRange(format!("z3 = {z} outside [-1, 1]")));
    }
    if let Some(r) = &point.radicands {
        let paths = 1usize << (n - 2);
        if r.len() != paths {
            return Err(Error::IncompleteTree { expected: paths, got: r.len() });
        }
        if let Some(v) = r.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::ParamRange(format!("radicand {v} is negative")));
        }
    }
    Ok(reduced_objective_unchecked(params, &point.z3, point.radicands.as_deref(), opts))
}

fn reduced_objective_unchecked(
    params: &FamilyParams,
    z3: &[f64],
    radicands: Option<&[f64]>,
    opts: ReducedOptions,
) -> ReducedObjective {
    let n = params.n_qubits;
    let ctx = ReducedCtx {
        n_measured: n - 1,
        c: params.c1.abs().max(params.c2.abs()),
        c3: params.c3,
        s: params.s,
        z3,
        radicands,
        opts,
    };
    let mut levels = vec![0.0; n - 1];
    let start = PathState { a: 0.0, signed: 1.0, prod_z: 1.0, prod_q: 1.0 };
    reduced_descend(&ctx, 0, 0, start, &mut levels);
    let y: f64 = levels.iter().sum();
    ReducedObjective {
        g: levels[0],
        f: levels.get(1).copied(),
        t: levels.get(2).copied(),
        y,
        w: y + 0.5 * h0(params.s),
        levels,
    }
}

/// Reduced-coordinate value of `Y` along `z3` (radicands computed).
fn reduced_y(params: &FamilyParams, z3: &[f64], opts: ReducedOptions) -> f64 {
    reduced_objective_unchecked(params, z3, None, opts).y
}

const GRID_STEPS: usize = 100;
/// Full product grid up to this many coordinates.
const FULL_GRID_DIMS: usize = 3;
/// Coordinate-ascent starts for higher dimensions.
const ASCENT_STARTS: usize = 16;

fn grid_value(i: usize, lo: f64) -> f64 {
    lo + (1.0 - lo) * i as f64 / GRID_STEPS as f64
}

fn coordinate_ascent(params: &FamilyParams, mut z: Vec<f64>, lo: f64, opts: ReducedOptions) -> (Vec<f64>, f64) {
    let mut best = reduced_y(params, &z, opts);
    loop {
        let before = best;
        for d in 0..z.len() {
            let keep = z[d];
            let mut arg = keep;
            for i in 0..=GRID_STEPS {
                z[d] = grid_value(i, lo);
                let v = reduced_y(params, &z, opts);
                if v > best {
                    best = v;
                    arg = z[d];
                }
            }
            z[d] = arg;
        }
        if best <= before {
            return (z, best);
        }
    }
}

/// Maximizes `Y` over the reduced coordinates and assembles the discord
/// `sum lambda log2 lambda + N - H(s)/2 - max Y`.
pub fn minimize_reduced(params: &FamilyParams, cfg: &OracleConfig) -> Result<OracleResult> {
    minimize_reduced_with(params, cfg, ReducedOptions::default())
}

pub fn minimize_reduced_with(
    params: &FamilyParams,
    cfg: &OracleConfig,
    opts: ReducedOptions,
) -> Result<OracleResult> {
    cfg.validate()?;
    params.validate()?;
    let n = params.n_qubits;
    if n > REDUCED_ORACLE_CAP {
        return Err(Error::CapExceeded { n, cap: REDUCED_ORACLE_CAP });
    }
    let dims = (1usize << (n - 1)) - 1;
    // Flipping a node's z3 together with its outcome labels leaves the
    // parity form unchanged, so [0, 1] suffices there.
    let lo = match opts.cross_term {
        CrossTerm::Parity => 0.0,
        CrossTerm::LastOutcome => -1.0,
    };

    let seeds: Vec<(Vec<f64>, f64)> = if dims <= FULL_GRID_DIMS {
        let total = (GRID_STEPS + 1).pow(dims as u32);
        let best = (0..total)
            .into_par_iter()
            .map(|flat| {
                let mut rem = flat;
                let z: Vec<f64> = (0..dims)
                    .map(|_| {
                        let i = rem % (GRID_STEPS + 1);
                        rem /= GRID_STEPS + 1;
                        grid_value(i, lo)
                    })
                    .collect();
                let v = reduced_y(params, &z, opts);
                (flat, v, z)
            })
            .reduce_with(|a, b| match a.1.total_cmp(&b.1) {
                std::cmp::Ordering::Less => b,
                std::cmp::Ordering::Greater => a,
                std::cmp::Ordering::Equal => if a.0 <= b.0 { a } else { b },
            })
            .expect("grid is nonempty");
        vec![(best.2, best.1)]
    } else {
        let starts = cfg.starts.min(ASCENT_STARTS);
        (0..starts)
            .into_par_iter()
            .map(|index| {
                let z0 = match index {
                    0 => vec![1.0; dims],
                    1 => vec![lo.max(0.0); dims],
                    _ => {
                        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                        rng.set_stream(index as u64);
                        (0..dims).map(|_| grid_value(rng.random_range(0..=GRID_STEPS), lo)).collect()
                    }
                };
                coordinate_ascent(params, z0, lo, opts)
            })
            .collect()
    };

    let clamp = |x: &[f64]| -> Vec<f64> { x.iter().map(|v| v.clamp(lo, 1.0)).collect() };
    let polished: Vec<Local> = seeds
        .into_iter()
        .map(|(z, v)| {
            let neg = |x: &[f64]| -reduced_y(params, &clamp(x), opts);
            let out = nelder_mead::minimize(neg, &z, simplex_opts(cfg, 0.01));
            if -out.f > v {
                Local { x: clamp(&out.x), f: -out.f, converged: out.converged }
            } else {
                Local { x: z, f: v, converged: out.converged }
            }
        })
        .collect();
    // Local.f holds max Y here, so negate for the shared summary.
    let as_min: Vec<Local> = polished
        .iter()
        .map(|l| Local { x: l.x.clone(), f: -l.f, converged: l.converged })
        .collect();
    let (best, neg_y, spread, converged) = summarize(&as_min);
    let max_y = -neg_y;

    let spectrum = family_spectrum(params)?;
    let value = spectrum.sum_lambda_log2_lambda() + n as f64 - 0.5 * h0(params.s) - max_y;
    let point = ReducedPoint { z3: polished[best].x.clone(), radicands: None };
    Ok(OracleResult {
        value,
        best: BestPoint::Reduced(point),
        starts_run: polished.len(),
        starts_converged: converged,
        spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli_state::{build_noisy_ghz_dense, build_symmetric_family, realize, GhzParams};

    fn family(n: usize, c1: f64, c2: f64, c3: f64, s: f64) -> (FamilyParams, DensityMatrix) {
        let p = FamilyParams::new(n, c1, c2, c3, s).unwrap();
        let rho = realize(&build_symmetric_family(&p).unwrap()).unwrap();
        (p, rho)
    }

    fn z_tree(n_measured: usize) -> MeasurementTree {
        MeasurementTree::uniform(n_measured, BlochDirection::plus_z()).unwrap()
    }

    #[test]
    fn tree_shape_checks() {
        assert!(MeasurementTree::new(2, vec![BlochDirection::plus_z(); 2]).is_err());
        assert!(MeasurementTree::new(2, vec![BlochDirection { x: 0.5, y: 0.0, z: 0.5 }; 3]).is_err());
        assert_eq!(node_index(0, 0), 0);
        assert_eq!(node_index(1, 1), 2);
        assert_eq!(node_index(2, 0), 3);
    }

    #[test]
    fn ensemble_probabilities_family() {
        let (_, rho) = family(3, 0.1, 0.1, -0.2, 0.3);
        let br = conditional_ensemble(&rho, &z_tree(2), 1).unwrap();
        assert_eq!(br.len(), 2);
        assert!((br[0].probability - 0.65).abs() < 1e-12);
        assert!((br[1].probability - 0.35).abs() < 1e-12);
    }

    #[test]
    fn ensemble_ghz_pure_branches() {
        let rho = build_noisy_ghz_dense(&GhzParams::new(2, 1.0).unwrap()).unwrap();
        let br = conditional_ensemble(&rho, &z_tree(1), 1).unwrap();
        assert!((br[0].probability - 0.5).abs() < 1e-12);
        let s0 = br[0].state.as_ref().unwrap();
        assert!((s0.matrix()[(0, 0)].re - 1.0).abs() < 1e-12);
        let s1 = br[1].state.as_ref().unwrap();
        assert!((s1.matrix()[(3, 3)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ensemble_flags_zero_branches() {
        let rho = build_noisy_ghz_dense(&GhzParams::new(2, 1.0).unwrap()).unwrap();
        let p = DensityMatrix::from_unnormalized(2, {
            let mut m = rho.matrix().clone() * C64::new(0.0, 0.0);
            m[(0, 0)] = C64::new(1.0, 0.0);
            m
        });
        let br = conditional_ensemble(&p, &z_tree(1), 1).unwrap();
        assert!(!br[0].negligible());
        assert!(br[1].negligible());
        assert!(measured_conditional_entropy(&p, &z_tree(1), 1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn invalid_levels() {
        let (_, rho) = family(3, 0.1, 0.1, -0.2, 0.3);
        assert!(matches!(conditional_ensemble(&rho, &z_tree(2), 0), Err(Error::InvalidLevel { .. })));
        assert!(matches!(conditional_ensemble(&rho, &z_tree(2), 3), Err(Error::InvalidLevel { .. })));
        assert!(matches!(discord_objective(&rho, &z_tree(1)), Err(Error::IncompleteTree { .. })));
    }

    #[test]
    fn ghz_pure_level_two_entropy() {
        let rho = build_noisy_ghz_dense(&GhzParams::new(3, 1.0).unwrap()).unwrap();
        assert!(measured_conditional_entropy(&rho, &z_tree(2), 2).unwrap().abs() < 1e-12);
    }

    #[test]
    fn level_one_matches_g() {
        let (p, rho) = family(3, 0.1, 0.1, -0.2, 0.3);
        let g = reduced_objective(&p, &ReducedPoint::uniform(3, 1.0), ReducedOptions::default()).unwrap().g;
        let s1 = measured_conditional_entropy(&rho, &z_tree(2), 1).unwrap();
        assert!((s1 - (1.0 - g)).abs() < 1e-12);
    }

    #[test]
    fn g_examples() {
        let p = FamilyParams::new(3, 0.0, 0.0, 0.0, 0.3).unwrap();
        let at = |z: f64| {
            reduced_objective(&p, &ReducedPoint { z3: vec![z, 1.0, 1.0], radicands: None }, ReducedOptions::default())
                .unwrap()
                .g
        };
        assert!((at(0.0) - 0.5 * h0(0.3)).abs() < 1e-15);
        assert!((at(0.0) - 0.065_931_9).abs() < 1e-7);
        assert!((at(1.0) - (0.25 * h0(0.6) - 0.5 * h0(0.3))).abs() < 1e-15);
        assert!((at(1.0) - 0.073_104_1).abs() < 1e-7);
    }

    #[test]
    fn all_z_objective_matches_reduced_assembly() {
        for &(n, c1, c2, c3, s) in &[(3, 0.1, 0.1, -0.2, 0.3), (3, 0.2, -0.1, 0.4, -0.1), (4, 0.1, 0.2, -0.3, 0.1)] {
            let (p, rho) = family(n, c1, c2, c3, s);
            let direct = discord_objective(&rho, &z_tree(n - 1)).unwrap();
            let red = reduced_objective(&p, &ReducedPoint::uniform(n, 1.0), ReducedOptions::default()).unwrap();
            let spec = family_spectrum(&p).unwrap();
            let assembled = spec.sum_lambda_log2_lambda() + n as f64 - 0.5 * h0(s) - red.y;
            assert!((direct - assembled).abs() < 1e-10, "{direct} vs {assembled}");
        }
    }

    #[test]
    fn w_at_ones_with_zero_field() {
        let p = FamilyParams::new(4, 0.3, 0.1, -0.4, 0.0).unwrap();
        let w = reduced_objective(&p, &ReducedPoint::uniform(4, 1.0), ReducedOptions::default()).unwrap().w;
        assert!((w - 0.5 * h0(0.4)).abs() < 1e-14);
    }

    #[test]
    fn reduced_rejects_bad_points() {
        let p = FamilyParams::new(3, 0.1, 0.1, -0.2, 0.3).unwrap();
        let bad = ReducedPoint { z3: vec![1.2, 0.0, 0.0], radicands: None };
        assert!(reduced_objective(&p, &bad, ReducedOptions::default()).is_err());
        let short = ReducedPoint { z3: vec![1.0], radicands: None };
        assert!(reduced_objective(&p, &short, ReducedOptions::default()).is_err());
    }

    #[test]
    fn maximally_mixed_is_zero() {
        let rho = DensityMatrix::maximally_mixed(3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tree = MeasurementTree::random(2, &mut rng);
        assert!(discord_objective(&rho, &tree).unwrap().abs() < 1e-12);
        let br = conditional_ensemble(&rho, &tree, 2).unwrap();
        for b in br {
            assert!((b.probability - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn bell_diagonal_z_tree() {
        let (_, rho) = family(2, 0.3, 0.2, 0.1, 0.0);
        let spec = crate::spectral::hermitian_eigenvalues(&rho).unwrap();
        let want = 2.0 + spec.sum_lambda_log2_lambda() - 0.5 * h0(0.1);
        assert!((discord_objective(&rho, &z_tree(1)).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn oracle_small_cases() {
        let cfg = OracleConfig { starts: 8, ..Default::default() };
        let (_, rho) = family(2, 0.3, 0.2, 0.1, 0.0);
        let r = minimize_discord(&rho, &cfg).unwrap();
        assert!((r.value - 0.050_684).abs() < 5e-3, "{}", r.value);

        let ghz = build_noisy_ghz_dense(&GhzParams::new(2, 0.5).unwrap()).unwrap();
        let r = minimize_discord(&ghz, &cfg).unwrap();
        assert!((r.value - 0.262_483).abs() < 5e-3, "{}", r.value);
    }

    #[test]
    fn oracle_cap() {
        let rho = DensityMatrix::maximally_mixed(5);
        assert!(matches!(
            minimize_discord(&rho, &OracleConfig::default()),
            Err(Error::CapExceeded { n: 5, cap: 4 })
        ));
        let p = FamilyParams::new(7, 0.1, 0.1, 0.1, 0.0).unwrap();
        assert!(minimize_reduced(&p, &OracleConfig::default()).is_err());
    }

    #[test]
    fn oracle_is_deterministic() {
        let cfg = OracleConfig { starts: 6, seed: 7, ..Default::default() };
        let (_, rho) = family(3, 0.3, 0.3, 0.2, 0.1);
        let a = minimize_discord(&rho, &cfg).unwrap();
        let b = minimize_discord(&rho, &cfg).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.best, b.best);
    }

    #[test]
    fn config_json() {
        let cfg = OracleConfig::from_json(r#"{"starts":64,"max_iters":2000,"f_tol":1e-9,"seed":42}"#).unwrap();
        assert_eq!(cfg, OracleConfig::default());
        assert!(OracleConfig::from_json(r#"{"starts":0}"#).is_err());
    }

    #[test]
    fn reduced_case1_maximizer_at_ones() {
        let p = FamilyParams::new(3, 0.1, 0.1, -0.2, 0.3).unwrap();
        let r = minimize_reduced(&p, &OracleConfig::default()).unwrap();
        let BestPoint::Reduced(pt) = r.best else { panic!() };
        assert!((pt.z3[1] - 1.0).abs() < 1e-9 && (pt.z3[2] - 1.0).abs() < 1e-9, "{:?}", pt.z3);
    }

    #[test]
    fn reduced_zero_field_gives_half_h_c() {
        let p = FamilyParams::new(3, 0.3, 0.2, 0.1, 0.0).unwrap();
        let r = minimize_reduced(&p, &OracleConfig::default()).unwrap();
        let spec = family_spectrum(&p).unwrap();
        let max_y = spec.sum_lambda_log2_lambda() + 3.0 - r.value;
        assert!((max_y - 0.5 * h0(0.3)).abs() < 1e-9);
    }
}
