//! Fully-connected spin Hamiltonians and their excitation-number sectors.
//!
//! `H = sum_{i<j} (J_ij s+_i s-_j + h.c.) + sum_{i<j} U_ij Z_i Z_j + sum_j B_j Z_j`
//! with `Z|0> = +|0>` and `Z|1> = -|1>`; an excitation is a qubit in `|1>`.
//! Each unordered pair carries a single coupling, so `<i|H|j> = J_ij` for
//! `i < j` in the single-excitation sector.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, hermiticity_defect, CMat, ZERO};

/// Largest qubit count for which the full `2^n` space is built.
pub const MAX_FULL_SPACE: usize = 12;

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpinModel", into = "RawSpinModel")]
pub struct SpinModel {
    n: usize,
    couplings: BTreeMap<(usize, usize), c64>,
    zz: BTreeMap<(usize, usize), f64>,
    fields: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawSpinModel {
    n: usize,
    #[serde(default)]
    couplings: Vec<(usize, usize, f64, f64)>,
    #[serde(default)]
    zz: Vec<(usize, usize, f64)>,
    fields: Vec<f64>,
}

impl TryFrom<RawSpinModel> for SpinModel {
    type Error = Error;

    fn try_from(raw: RawSpinModel) -> Result<Self> {
        let mut m = SpinModel::new(raw.n)?;
        if raw.fields.len() != raw.n {
            return Err(Error::Parse(format!("expected {} fields, got {}", raw.n, raw.fields.len())));
        }
        for (k, b) in raw.fields.iter().enumerate() {
            m.set_field(k + 1, *b)?;
        }
        for (i, j, re, im) in raw.couplings {
            if m.coupling_entry(i, j).is_some() {
                return Err(Error::Parse(format!("duplicate coupling for pair ({i}, {j})")));
            }
            m.set_coupling(i, j, c64::new(re, im))?;
        }
        for (i, j, u) in raw.zz {
            let key = m.pair_key(i, j)?;
            if m.zz.contains_key(&key) {
                return Err(Error::Parse(format!("duplicate zz term for pair ({i}, {j})")));
            }
            m.set_zz(i, j, u)?;
        }
        Ok(m)
    }
}

impl From<SpinModel> for RawSpinModel {
    fn from(m: SpinModel) -> Self {
        RawSpinModel {
            n: m.n,
            couplings: m.couplings.iter().map(|(&(i, j), c)| (i, j, c.re, c.im)).collect(),
            zz: m.zz.iter().map(|(&(i, j), u)| (i, j, *u)).collect(),
            fields: m.fields,
        }
    }
}

impl SpinModel {
    /// Model on `n` qubits with every term zero.
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize(format!("need at least 2 qubits, got {n}")));
        }
        Ok(Self { n, couplings: BTreeMap::new(), zz: BTreeMap::new(), fields: vec![0.0; n] })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    fn pair_key(&self, i: usize, j: usize) -> Result<(usize, usize)> {
        if i == 0 || j == 0 || i > self.n || j > self.n {
            return Err(Error::Parse(format!("pair ({i}, {j}) out of range 1..={}", self.n)));
        }
        if i == j {
            return Err(Error::Parse(format!("pair ({i}, {j}) repeats a qubit")));
        }
        Ok((i.min(j), i.max(j)))
    }

    fn coupling_entry(&self, i: usize, j: usize) -> Option<c64> {
        let key = (i.min(j), i.max(j));
        self.couplings.get(&key).copied()
    }

    /// Sets the flip-flop amplitude of `s+_i s-_j`; the reversed pair stores
    /// the conjugate.
    pub fn set_coupling(&mut self, i: usize, j: usize, value: c64) -> Result<()> {
        let key = self.pair_key(i, j)?;
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(Error::Parse(format!("non-finite coupling on ({i}, {j})")));
        }
        let v = if i < j { value } else { value.conj() };
        self.couplings.insert(key, v);
        Ok(())
    }

    /// Amplitude `J_ij`; zero when absent.
    pub fn coupling(&self, i: usize, j: usize) -> c64 {
        match self.coupling_entry(i, j) {
            Some(v) if i < j => v,
            Some(v) => v.conj(),
            None => ZERO,
        }
    }

    pub fn couplings(&self) -> impl Iterator<Item = ((usize, usize), c64)> + '_ {
        self.couplings.iter().map(|(&k, &v)| (k, v))
    }

    pub fn set_zz(&mut self, i: usize, j: usize, u: f64) -> Result<()> {
        let key = self.pair_key(i, j)?;
        if !u.is_finite() {
            return Err(Error::Parse(format!("non-finite zz term on ({i}, {j})")));
        }
        self.zz.insert(key, u);
        Ok(())
    }

    pub fn zz(&self, i: usize, j: usize) -> f64 {
        self.zz.get(&(i.min(j), i.max(j))).copied().unwrap_or(0.0)
    }

    pub fn set_field(&mut self, j: usize, b: f64) -> Result<()> {
        if j == 0 || j > self.n {
            return Err(Error::Parse(format!("field index {j} out of range 1..={}", self.n)));
        }
        if !b.is_finite() {
            return Err(Error::Parse(format!("non-finite field on qubit {j}")));
        }
        self.fields[j - 1] = b;
        Ok(())
    }

    /// Every coefficient multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            couplings: self.couplings.iter().map(|(&k, &v)| (k, v * c)).collect(),
            zz: self.zz.iter().map(|(&k, &v)| (k, v * c)).collect(),
            fields: self.fields.iter().map(|b| b * c).collect(),
        }
    }

    /// Relabels qubits `a` and `b`.
    pub fn swap_qubits(&self, a: usize, b: usize) -> Result<Self> {
        if a == 0 || b == 0 || a > self.n || b > self.n {
            return Err(Error::Parse(format!("qubit labels ({a}, {b}) out of range")));
        }
        let relabel = |q: usize| if q == a { b } else if q == b { a } else { q };
        let mut out = Self::new(self.n)?;
        for (&(i, j), &v) in &self.couplings {
            out.set_coupling(relabel(i), relabel(j), v)?;
        }
        for (&(i, j), &u) in &self.zz {
            out.set_zz(relabel(i), relabel(j), u)?;
        }
        for q in 1..=self.n {
            out.fields[relabel(q) - 1] = self.fields[q - 1];
        }
        Ok(out)
    }

    /// Energy of a computational basis state; `excited[k]` is qubit `k+1`.
    fn diagonal_energy(&self, excited: impl Fn(usize) -> bool) -> f64 {
        let z = |q: usize| if excited(q) { -1.0 } else { 1.0 };
        let mut e = 0.0;
        for (k, b) in self.fields.iter().enumerate() {
            e += b * z(k + 1);
        }
        for (&(i, j), u) in &self.zz {
            e += u * z(i) * z(j);
        }
        e
    }
}

/// Uniform couplings `j0` on every pair, fields `-(n/2) j0` on the end qubits.
pub fn build_h_opt(n: usize, j0: f64) -> Result<SpinModel> {
    check_chain(n, j0)?;
    let mut m = SpinModel::new(n)?;
    for i in 1..=n {
        for j in i + 1..=n {
            m.set_coupling(i, j, c64::new(j0, 0.0))?;
        }
    }
    let b = -(n as f64) / 2.0 * j0;
    m.set_field(1, b)?;
    m.set_field(n, b)?;
    Ok(m)
}

/// End qubits coupled to each other and to every intermediate qubit, no
/// couplings among intermediates, fields `-(3/2) j0` on the ends.
pub fn build_h_opt_prime(n: usize, j0: f64) -> Result<SpinModel> {
    check_chain(n, j0)?;
    let mut m = SpinModel::new(n)?;
    let j = c64::new(j0, 0.0);
    m.set_coupling(1, n, j)?;
    for k in 2..n {
        m.set_coupling(1, k, j)?;
        m.set_coupling(k, n, j)?;
    }
    m.set_field(1, -1.5 * j0)?;
    m.set_field(n, -1.5 * j0)?;
    Ok(m)
}

fn check_chain(n: usize, j0: f64) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidSize(format!(
            "need at least one intermediate qubit (n >= 3), got n = {n}"
        )));
    }
    if !(j0 > 0.0 && j0.is_finite()) {
        return Err(Error::Domain(format!("coupling scale must be positive, got {j0}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "n")]
pub enum Basis {
    SingleExcitation(usize),
    FullSpace(usize),
    Effective3,
}

impl Basis {
    pub fn dim(&self) -> usize {
        match *self {
            Basis::SingleExcitation(n) => n,
            Basis::FullSpace(n) => 1usize << n,
            Basis::Effective3 => 3,
        }
    }
}

/// A Hermitian matrix representing `H` in one conserved sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorMatrix {
    entries: CMat,
    basis: Basis,
    vacuum_phase_rate: f64,
}

impl SectorMatrix {
    pub fn new(entries: CMat, basis: Basis, vacuum_phase_rate: f64) -> Result<Self> {
        let dim = basis.dim();
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::ContractViolation(format!(
                "{:?} needs a {dim}x{dim} matrix, got {}x{}",
                basis,
                entries.nrows(),
                entries.ncols()
            )));
        }
        let defect = hermiticity_defect(&entries);
        if defect > HERMITIAN_TOL {
            return Err(Error::ContractViolation(format!("matrix is not Hermitian (defect {defect:.3e})")));
        }
        Ok(Self { entries, basis, vacuum_phase_rate })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn into_entries(self) -> CMat {
        self.entries
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    /// Energy of the all-`|0>` state.
    pub fn vacuum_phase_rate(&self) -> f64 {
        self.vacuum_phase_rate
    }

    /// Same sector, `entries + c I`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut e = self.entries.clone();
        for k in 0..e.nrows() {
            e[(k, k)] += c64::new(c, 0.0);
        }
        Self { entries: e, basis: self.basis, vacuum_phase_rate: self.vacuum_phase_rate }
    }
}

/// `H` restricted to states with exactly one qubit in `|1>`, ordered by qubit.
pub fn project_single_excitation(model: &SpinModel) -> SectorMatrix {
    let n = model.n;
    let mut h = CMat::zeros(n, n);
    for (&(i, j), &v) in &model.couplings {
        h[(i - 1, j - 1)] = v;
        h[(j - 1, i - 1)] = v.conj();
    }
    for k in 1..=n {
        h[(k - 1, k - 1)] = c64::new(model.diagonal_energy(|q| q == k), 0.0);
    }
    let vacuum = model.diagonal_energy(|_| false);
    SectorMatrix { entries: h, basis: Basis::SingleExcitation(n), vacuum_phase_rate: vacuum }
}

/// Bit of qubit `q` (1-based) in a full-space index; qubit 1 is the most
/// significant bit.
#[inline]
pub fn qubit_mask(n: usize, q: usize) -> usize {
    1usize << (n - q)
}

/// The full `2^n` Hamiltonian.
pub fn project_full_space(model: &SpinModel) -> Result<SectorMatrix> {
    let n = model.n;
    if n > MAX_FULL_SPACE {
        return Err(Error::SizeLimit { n, max: MAX_FULL_SPACE });
    }
    let dim = 1usize << n;
    let mut h = CMat::zeros(dim, dim);
    for s in 0..dim {
        h[(s, s)] = c64::new(model.diagonal_energy(|q| s & qubit_mask(n, q) != 0), 0.0);
    }
    for (&(i, j), &v) in &model.couplings {
        let (mi, mj) = (qubit_mask(n, i), qubit_mask(n, j));
        for s in 0..dim {
            // s+_i s-_j moves the excitation from j to i.
            if s & mj != 0 && s & mi == 0 {
                let t = (s ^ mj) | mi;
                h[(t, s)] += v;
                h[(s, t)] += v.conj();
            }
        }
    }
    let vacuum = model.diagonal_energy(|_| false);
    Ok(SectorMatrix { entries: h, basis: Basis::FullSpace(n), vacuum_phase_rate: vacuum })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub label: String,
    pub magnitude: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub violations: Vec<Violation>,
    /// Largest `|J| / bound` over all checked couplings.
    pub max_ratio: f64,
}

impl ConstraintReport {
    pub(crate) fn from_checks(checks: impl IntoIterator<Item = (String, f64, f64)>) -> Self {
        let mut violations = Vec::new();
        let mut max_ratio = 0.0f64;
        for (label, magnitude, bound) in checks {
            max_ratio = max_ratio.max(magnitude / bound);
            if magnitude > bound {
                violations.push(Violation { label, magnitude, bound });
            }
        }
        Self { violations, max_ratio }
    }

    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Pairs with `|J_ij| > j0`.
pub fn check_coupling_bounds(model: &SpinModel, j0: f64) -> ConstraintReport {
    ConstraintReport::from_checks(
        model.couplings.iter().map(|(&(i, j), v)| (format!("J_{i},{j}"), v.norm(), j0)),
    )
}
