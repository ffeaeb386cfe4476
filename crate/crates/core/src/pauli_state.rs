//! State families in Pauli-sum form, dense realization, physicality checks
//! and partial traces.
//!
//! A [`PauliSum`] stores the weights `w(P)` of the expansion
//! `rho = 2^-N * sum_P w(P) P`, so the identity word always carries weight 1.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Largest qubit count realized densely unless the caller overrides it.
pub const DEFAULT_DENSE_CAP: usize = 8;

/// Entrywise Hermiticity tolerance for [`DensityMatrix`].
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Trace tolerance for [`DensityMatrix`].
pub const TRACE_TOL: f64 = 1e-12;

/// Default tolerance of [`validate_state`].
pub const PHYSICAL_TOL: f64 = 1e-10;

/// Single-qubit Pauli letter. `X`, `Y`, `Z` are sigma_1, sigma_2, sigma_3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// True for the letters that flip the computational basis (X and Y).
    pub fn is_flip(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }
}

/// Tensor product of single-qubit Pauli letters, qubit 1 first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliWord(Vec<Pauli>);

impl PauliWord {
    pub fn new(letters: Vec<Pauli>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::ParseWord("empty word".into()));
        }
        Ok(Self(letters))
    }

    pub fn identity(n: usize) -> Self {
        Self(vec![Pauli::I; n])
    }

    /// `letter` on every site.
    pub fn uniform(n: usize, letter: Pauli) -> Self {
        Self(vec![letter; n])
    }

    /// Identity everywhere except `letter` at the 0-based `site`.
    pub fn single_site(n: usize, site: usize, letter: Pauli) -> Self {
        let mut letters = vec![Pauli::I; n];
        letters[site] = letter;
        Self(letters)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    /// Number of X or Y letters.
    pub fn flip_weight(&self) -> usize {
        self.0.iter().filter(|p| p.is_flip()).count()
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|ch| match ch {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::ParseWord(format!("unexpected letter {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(letters)
    }
}

/// Sparse real-weighted Pauli expansion of an N-qubit operator with unit
/// trace: `rho = 2^-N * sum_P w(P) P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PauliSumJson", into = "PauliSumJson")]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<PauliWord, f64>,
}

impl PauliSum {
    /// Builds a sum from `(word, weight)` pairs. Repeated words are summed,
    /// zero weights dropped, and the identity weight must come out as 1.
    pub fn new(n_qubits: usize, terms: impl IntoIterator<Item = (PauliWord, f64)>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::ParamRange("a Pauli sum needs at least one qubit".into()));
        }
        let mut map: BTreeMap<PauliWord, f64> = BTreeMap::new();
        for (word, w) in terms {
            if word.len() != n_qubits {
                return Err(Error::ParseWord(format!(
                    "word {word} has length {}, expected {n_qubits}",
                    word.len()
                )));
            }
            if !w.is_finite() {
                return Err(Error::ParamRange(format!("weight of {word} is not finite")));
            }
            *map.entry(word).or_insert(0.0) += w;
        }
        map.retain(|_, w| *w != 0.0);
        let id = map.get(&PauliWord::identity(n_qubits)).copied().unwrap_or(0.0);
        if id != 1.0 {
            return Err(Error::ParamRange(format!("identity weight must be 1, got {id}")));
        }
        Ok(Self { n_qubits, terms: map })
    }

    /// The maximally mixed state on `n_qubits`.
    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, [(PauliWord::identity(n_qubits), 1.0)])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Weight of `word`, zero when absent.
    pub fn weight(&self, word: &PauliWord) -> f64 {
        self.terms.get(word).copied().unwrap_or(0.0)
    }

    /// Weight of the word spelled by `word`; zero for absent or malformed words.
    pub fn weight_of(&self, word: &str) -> f64 {
        word.parse::<PauliWord>().map(|w| self.weight(&w)).unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliWord, f64)> {
        self.terms.iter().map(|(k, &v)| (k, v))
    }

    /// Applies `f(word, weight)` to every weight. The identity weight must
    /// remain 1.
    pub fn map_weights(&self, mut f: impl FnMut(&PauliWord, f64) -> f64) -> Result<Self> {
        Self::new(
            self.n_qubits,
            self.terms.iter().map(|(k, &v)| (k.clone(), f(k, v))),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Serialize, Deserialize)]
struct PauliSumJson {
    n: usize,
    terms: Vec<PauliTermJson>,
}

#[derive(Serialize, Deserialize)]
struct PauliTermJson {
    word: String,
    w: f64,
}

impl TryFrom<PauliSumJson> for PauliSum {
    type Error = Error;

    fn try_from(raw: PauliSumJson) -> Result<Self> {
        let terms = raw
            .terms
            .into_iter()
            .map(|t| Ok((t.word.parse::<PauliWord>()?, t.w)))
            .collect::<Result<Vec<_>>>()?;
        PauliSum::new(raw.n, terms)
    }
}

impl From<PauliSum> for PauliSumJson {
    fn from(sum: PauliSum) -> Self {
        PauliSumJson {
            n: sum.n_qubits,
            terms: sum
                .terms
                .into_iter()
                .map(|(word, w)| PauliTermJson { word: word.to_string(), w })
                .collect(),
        }
    }
}

fn check_unit_interval(name: &str, x: f64) -> Result<()> {
    if !x.is_finite() || !(-1.0..=1.0).contains(&x) {
        return Err(Error::ParamRange(format!("{name} = {x} is outside [-1, 1]")));
    }
    Ok(())
}

/// Parameters of the symmetric family
/// `rho = 2^-N (I + c1 X..X + c2 Y..Y + c3 Z..Z + s sum_i Z_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub n_qubits: usize,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub s: f64,
}

impl FamilyParams {
    pub fn new(n_qubits: usize, c1: f64, c2: f64, c3: f64, s: f64) -> Result<Self> {
        let p = Self { n_qubits, c1, c2, c3, s };
        p.validate()?;
        Ok(p)
    }

    /// Range checks only; positivity is checked on the realized matrix.
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 2 {
            return Err(Error::ParamRange(format!(
                "family needs N >= 2, got {}",
                self.n_qubits
            )));
        }
        check_unit_interval("c1", self.c1)?;
        check_unit_interval("c2", self.c2)?;
        check_unit_interval("c3", self.c3)?;
        check_unit_interval("s", self.s)
    }
}

/// Local longitudinal fields `s_1..s_N` of the diagonal family
/// `2^-N (I + sum_i s_i Z_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalFieldParams {
    pub fields: Vec<f64>,
}

impl DiagonalFieldParams {
    pub fn new(fields: Vec<f64>) -> Result<Self> {
        let p = Self { fields };
        p.validate()?;
        Ok(p)
    }

    pub fn n_qubits(&self) -> usize {
        self.fields.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.fields.is_empty() {
            return Err(Error::ParamRange("at least one field is required".into()));
        }
        for (i, &s) in self.fields.iter().enumerate() {
            check_unit_interval(&format!("s_{}", i + 1), s)?;
        }
        Ok(())
    }
}

/// White-noise mixture `mu |GHZ><GHZ| + (1 - mu) I / 2^N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhzParams {
    pub n_qubits: usize,
    pub mu: f64,
}

impl GhzParams {
    pub fn new(n_qubits: usize, mu: f64) -> Result<Self> {
        let p = Self { n_qubits, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 2 {
            return Err(Error::ParamRange(format!("GHZ needs N >= 2, got {}", self.n_qubits)));
        }
        if !self.mu.is_finite() || !(0.0..=1.0).contains(&self.mu) {
            return Err(Error::ParamRange(format!("mu = {} is outside [0, 1]", self.mu)));
        }
        Ok(())
    }
}

/// Dense Hermitian unit-trace matrix on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    /// Wraps `matrix`, checking shape, Hermiticity and trace. Positivity is
    /// not required here; see [`validate_state`].
    pub fn from_matrix(n_qubits: usize, matrix: DMatrix<C64>) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::BadMatrix(format!(
                "expected {dim}x{dim}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let dev = hermitian_deviation(&matrix);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::BadMatrix(format!("trace {tr} differs from 1")));
        }
        Ok(Self { n_qubits, matrix })
    }

    /// Normalizes a Hermitian positive operator by its trace, symmetrizing
    /// away rounding noise.
    pub(crate) fn from_unnormalized(n_qubits: usize, matrix: DMatrix<C64>) -> Self {
        let tr = matrix.trace().re;
        let m = (&matrix + matrix.adjoint()).unscale(2.0 * tr);
        Self { n_qubits, matrix: m }
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        Self {
            n_qubits,
            matrix: DMatrix::identity(dim, dim).unscale(dim as f64),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Outcome of [`validate_state`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationReport {
    pub hermitian: bool,
    pub trace_deviation: f64,
    pub min_eigenvalue: f64,
    pub is_physical: bool,
}

/// The symmetric family of Pauli correlations `c1, c2, c3` plus a uniform
/// longitudinal field `s` on every qubit.
pub fn build_symmetric_family(params: &FamilyParams) -> Result<PauliSum> {
    params.validate()?;
    let n = params.n_qubits;
    let mut terms = vec![
        (PauliWord::identity(n), 1.0),
        (PauliWord::uniform(n, Pauli::X), params.c1),
        (PauliWord::uniform(n, Pauli::Y), params.c2),
        (PauliWord::uniform(n, Pauli::Z), params.c3),
    ];
    terms.extend((0..n).map(|i| (PauliWord::single_site(n, i, Pauli::Z), params.s)));
    PauliSum::new(n, terms)
}

/// Diagonal state `2^-N (I + sum_i s_i Z_i)`. It is positive only when
/// `sum_i |s_i| <= 1`; the constructor checks the per-site range alone.
pub fn build_diagonal_field(params: &DiagonalFieldParams) -> Result<PauliSum> {
    params.validate()?;
    let n = params.n_qubits();
    let mut terms = vec![(PauliWord::identity(n), 1.0)];
    terms.extend(
        params
            .fields
            .iter()
            .enumerate()
            .map(|(i, &s)| (PauliWord::single_site(n, i, Pauli::Z), s)),
    );
    PauliSum::new(n, terms)
}

/// Noisy GHZ state assembled directly in the computational basis.
pub fn build_noisy_ghz_dense(params: &GhzParams) -> Result<DensityMatrix> {
    params.validate()?;
    let dim = 1usize << params.n_qubits;
    let mu = params.mu;
    let noise = (1.0 - mu) / dim as f64;
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = C64::new(noise, 0.0);
    }
    let last = dim - 1;
    m[(0, 0)] += C64::new(0.5 * mu, 0.0);
    m[(last, last)] += C64::new(0.5 * mu, 0.0);
    m[(0, last)] = C64::new(0.5 * mu, 0.0);
    m[(last, 0)] = C64::new(0.5 * mu, 0.0);
    Ok(DensityMatrix { n_qubits: params.n_qubits, matrix: m })
}

/// All `k`-subsets of `0..n`, in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        let remaining = k - current.len();
        for i in start..=(n - remaining) {
            current.push(i);
            rec(i + 1, n, k, current, out);
            current.pop();
        }
    }
    rec(0, n, k, &mut current, &mut out);
    out
}

/// Noisy GHZ state as a Pauli expansion: `X^N` plus, for each even count
/// `2t`, every arrangement of `2t` Z's among identities (weight `mu`) and of
/// `2t` Y's among X's (weight `(-1)^t mu`).
pub fn build_noisy_ghz_pauli(params: &GhzParams) -> Result<PauliSum> {
    params.validate()?;
    let n = params.n_qubits;
    let mu = params.mu;
    let mut terms = vec![
        (PauliWord::identity(n), 1.0),
        (PauliWord::uniform(n, Pauli::X), mu),
    ];
    for t in 1..=n / 2 {
        let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
        for sites in combinations(n, 2 * t) {
            let mut z = vec![Pauli::I; n];
            let mut y = vec![Pauli::X; n];
            for &i in &sites {
                z[i] = Pauli::Z;
                y[i] = Pauli::Y;
            }
            terms.push((PauliWord(z), mu));
            terms.push((PauliWord(y), sign * mu));
        }
    }
    PauliSum::new(n, terms)
}

/// Dense realization with the default qubit cap.
pub fn realize(sum: &PauliSum) -> Result<DensityMatrix> {
    realize_with_cap(sum, DEFAULT_DENSE_CAP)
}

/// Dense realization `2^-N sum_P w(P) P`, refusing more than `cap` qubits.
pub fn realize_with_cap(sum: &PauliSum, cap: usize) -> Result<DensityMatrix> {
    let n = sum.n_qubits();
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    let dim = 1usize << n;
    let scale = 1.0 / dim as f64;
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for (word, w) in sum.iter() {
        let mut flip = 0usize;
        for (q, p) in word.letters().iter().enumerate() {
            if p.is_flip() {
                flip |= 1 << (n - 1 - q);
            }
        }
        for col in 0..dim {
            // P|col> = phase |col ^ flip>
            let mut phase = C64::new(1.0, 0.0);
            for (q, p) in word.letters().iter().enumerate() {
                let bit = (col >> (n - 1 - q)) & 1;
                match p {
                    Pauli::I | Pauli::X => {}
                    Pauli::Y => {
                        phase *= if bit == 0 { C64::new(0.0, 1.0) } else { C64::new(0.0, -1.0) };
                    }
                    Pauli::Z => {
                        if bit == 1 {
                            phase = -phase;
                        }
                    }
                }
            }
            m[(col ^ flip, col)] += phase * (w * scale);
        }
    }
    Ok(DensityMatrix { n_qubits: n, matrix: m })
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub(crate) fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    let h = (m + m.adjoint()).unscale(2.0);
    SymmetricEigen::new(h).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Hermiticity, trace and positivity checks; `tol` bounds the trace
/// deviation and how negative the smallest eigenvalue may be.
pub fn validate_state(rho: &DensityMatrix, tol: f64) -> ValidationReport {
    let m = rho.matrix();
    let hermitian = hermitian_deviation(m) <= HERMITIAN_TOL.max(tol * 1e-2);
    let trace_deviation = (m.trace() - C64::new(1.0, 0.0)).norm();
    let min_eigenvalue = min_eigenvalue(m);
    let is_physical = hermitian && trace_deviation <= tol && min_eigenvalue >= -tol;
    ValidationReport { hermitian, trace_deviation, min_eigenvalue, is_physical }
}

/// Reduced state on the 1-based qubits in `keep`, ordered as given after
/// sorting.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    if keep.is_empty() {
        return Err(Error::InvalidIndices("keep set is empty".into()));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() {
        return Err(Error::InvalidIndices(format!("duplicate indices in {keep:?}")));
    }
    if let Some(&bad) = kept.iter().find(|&&q| q == 0 || q > n) {
        return Err(Error::InvalidIndices(format!("qubit {bad} not in 1..={n}")));
    }
    let traced: Vec<usize> = (1..=n).filter(|q| !kept.contains(q)).collect();
    let bit = |q: usize| n - q; // bit position of 1-based qubit q
    let k = kept.len();
    let out_dim = 1usize << k;
    let env_dim = 1usize << traced.len();

    // full index from (kept bits, traced bits)
    let compose = |a: usize, e: usize| -> usize {
        let mut idx = 0usize;
        for (pos, &q) in kept.iter().enumerate() {
            if (a >> (k - 1 - pos)) & 1 == 1 {
                idx |= 1 << bit(q);
            }
        }
        for (pos, &q) in traced.iter().enumerate() {
            if (e >> (traced.len() - 1 - pos)) & 1 == 1 {
                idx |= 1 << bit(q);
            }
        }
        idx
    };

    let m = rho.matrix();
    let mut out = DMatrix::<C64>::zeros(out_dim, out_dim);
    for a in 0..out_dim {
        for b in 0..out_dim {
            let mut acc = C64::new(0.0, 0.0);
            for e in 0..env_dim {
                acc += m[(compose(a, e), compose(b, e))];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(DensityMatrix { n_qubits: k, matrix: out })
}
