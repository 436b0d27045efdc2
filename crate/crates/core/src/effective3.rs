//! The three-level reduction over `{|phi1>, |phi2>, |phi3>}`.
//!
//! `|phi1>` and `|phi3>` carry the excitation on the first and last qubit;
//! `|phi2>` is the W-state of the `n - 2` intermediate qubits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, cmat_to_mat3, mat3_to_cmat, unitarity_defect, CMat, Mat3, ZERO};
use crate::spin_model::{project_single_excitation, Basis, ConstraintReport, SectorMatrix, SpinModel};

const SYMMETRY_TOL: f64 = 1e-12;
pub const BOUNDARY_TOL: f64 = 1e-9;
const UNITARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEffective3", into = "RawEffective3")]
pub struct Effective3 {
    pub j1a: c64,
    pub jan: c64,
    pub j1n: c64,
    pub d1: f64,
    pub da: f64,
    pub dn: f64,
}

#[derive(Serialize, Deserialize)]
struct RawEffective3 {
    j1a: [f64; 2],
    jan: [f64; 2],
    j1n: [f64; 2],
    d1: f64,
    da: f64,
    dn: f64,
}

impl TryFrom<RawEffective3> for Effective3 {
    type Error = Error;

    fn try_from(r: RawEffective3) -> Result<Self> {
        let all = [r.j1a[0], r.j1a[1], r.jan[0], r.jan[1], r.j1n[0], r.j1n[1], r.d1, r.da, r.dn];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parse("non-finite entry in effective Hamiltonian".into()));
        }
        Ok(Effective3 {
            j1a: c64::new(r.j1a[0], r.j1a[1]),
            jan: c64::new(r.jan[0], r.jan[1]),
            j1n: c64::new(r.j1n[0], r.j1n[1]),
            d1: r.d1,
            da: r.da,
            dn: r.dn,
        })
    }
}

impl From<Effective3> for RawEffective3 {
    fn from(h: Effective3) -> Self {
        RawEffective3 {
            j1a: [h.j1a.re, h.j1a.im],
            jan: [h.jan.re, h.jan.im],
            j1n: [h.j1n.re, h.j1n.im],
            d1: h.d1,
            da: h.da,
            dn: h.dn,
        }
    }
}

impl Effective3 {
    pub const ZERO: Effective3 = Effective3 { j1a: ZERO, jan: ZERO, j1n: ZERO, d1: 0.0, da: 0.0, dn: 0.0 };

    /// The optimal constant Hamiltonian: couplings at their bounds and
    /// diagonal `(0, -3 j0, 0)`.
    pub fn optimal(n: usize, j0: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidSize(format!("need n >= 3, got {n}")));
        }
        let b = ((n - 2) as f64).sqrt() * j0;
        Ok(Self {
            j1a: c64::new(b, 0.0),
            jan: c64::new(b, 0.0),
            j1n: c64::new(j0, 0.0),
            d1: 0.0,
            da: -3.0 * j0,
            dn: 0.0,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("effective Hamiltonian serializes")
    }

    pub fn matrix(&self) -> Mat3 {
        [
            [c64::new(self.d1, 0.0), self.j1a, self.j1n],
            [self.j1a.conj(), c64::new(self.da, 0.0), self.jan],
            [self.j1n.conj(), self.jan.conj(), c64::new(self.dn, 0.0)],
        ]
    }

    pub fn to_cmat(&self) -> CMat {
        mat3_to_cmat(&self.matrix())
    }

    pub fn to_sector(&self) -> SectorMatrix {
        SectorMatrix::new(self.to_cmat(), Basis::Effective3, 0.0).expect("Hermitian by construction")
    }

    /// Reads the upper triangle and diagonal of a Hermitian 3x3 matrix.
    pub fn from_matrix(m: &Mat3) -> Self {
        Self { j1a: m[0][1], jan: m[1][2], j1n: m[0][2], d1: m[0][0].re, da: m[1][1].re, dn: m[2][2].re }
    }

    pub fn from_sector(s: &SectorMatrix) -> Result<Self> {
        if s.basis() != Basis::Effective3 {
            return Err(Error::UnsupportedBasis(format!("{:?} is not the three-level basis", s.basis())));
        }
        Ok(Self::from_matrix(&cmat_to_mat3(s.entries())))
    }

    pub fn off_diagonal(&self) -> Self {
        Self { d1: 0.0, da: 0.0, dn: 0.0, ..*self }
    }

    pub fn diagonal(&self) -> [f64; 3] {
        [self.d1, self.da, self.dn]
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self { d1: self.d1 + c, da: self.da + c, dn: self.dn + c, ..*self }
    }
}

/// Single-excitation vectors of `|phi1>, |phi2>, |phi3>` for `n` qubits.
pub fn symmetric_basis(n: usize) -> [Vec<c64>; 3] {
    assert!(n >= 3, "symmetric basis needs n >= 3");
    let mut p1 = vec![ZERO; n];
    let mut p2 = vec![ZERO; n];
    let mut p3 = vec![ZERO; n];
    p1[0] = c64::new(1.0, 0.0);
    p3[n - 1] = c64::new(1.0, 0.0);
    let w = 1.0 / ((n - 2) as f64).sqrt();
    for x in p2.iter_mut().take(n - 1).skip(1) {
        *x = c64::new(w, 0.0);
    }
    [p1, p2, p3]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reduction {
    pub effective: Effective3,
    /// Energy removed from every level (the `|phi3>` energy).
    pub shift: f64,
}

/// Reduces a model symmetric under permutations of qubits `2..n-1`.
pub fn reduce_to_effective(model: &SpinModel) -> Result<Reduction> {
    let n = model.n();
    if n < 3 {
        return Err(Error::InvalidSize(format!("need n >= 3, got {n}")));
    }
    let s = project_single_excitation(model);
    let h = s.entries();
    let last = n - 1;
    let mids: Vec<usize> = (1..last).collect();

    let same = |a: c64, b: c64| (a - b).norm() <= SYMMETRY_TOL;
    let first_mid = mids[0];
    let j1m = h[(0, first_mid)];
    let jmn = h[(first_mid, last)];
    let dm = h[(first_mid, first_mid)];
    for &k in &mids[1..] {
        if !same(h[(0, k)], j1m) {
            return Err(Error::NotSymmetric(format!("J_1,{} differs from J_1,{}", k + 1, first_mid + 1)));
        }
        if !same(h[(k, last)], jmn) {
            return Err(Error::NotSymmetric(format!("J_{},{n} differs from J_{},{n}", k + 1, first_mid + 1)));
        }
        if !same(h[(k, k)], dm) {
            return Err(Error::NotSymmetric(format!(
                "energy of qubit {} differs from qubit {}",
                k + 1,
                first_mid + 1
            )));
        }
    }
    let mut jmm = ZERO;
    if mids.len() >= 2 {
        jmm = h[(mids[0], mids[1])];
        for (a, &k) in mids.iter().enumerate() {
            for &l in &mids[a + 1..] {
                if !same(h[(k, l)], jmm) {
                    return Err(Error::NotSymmetric(format!(
                        "J_{},{} differs from J_{},{}",
                        k + 1,
                        l + 1,
                        mids[0] + 1,
                        mids[1] + 1
                    )));
                }
            }
        }
        if jmm.im.abs() > SYMMETRY_TOL {
            return Err(Error::NotSymmetric(format!(
                "intermediate coupling J_{},{} is not real",
                mids[0] + 1,
                mids[1] + 1
            )));
        }
    }
    let na = (n - 2) as f64;
    let shift = h[(last, last)].re;
    let effective = Effective3 {
        j1a: j1m * na.sqrt(),
        jan: jmn * na.sqrt(),
        j1n: h[(0, last)],
        d1: h[(0, 0)].re - shift,
        da: dm.re + (na - 1.0) * jmm.re - shift,
        dn: 0.0,
    };
    Ok(Reduction { effective, shift })
}

/// Bounds `|j1a|, |jan| <= sqrt(n-2) j0` and `|j1n| <= j0`.
pub fn check_effective_bounds(h: &Effective3, n: usize, j0: f64) -> ConstraintReport {
    let collective = ((n.max(2) - 2) as f64).sqrt() * j0;
    ConstraintReport::from_checks([
        ("J_1A".to_string(), h.j1a.norm(), collective),
        ("J_AN".to_string(), h.jan.norm(), collective),
        ("J_1N".to_string(), h.j1n.norm(), j0),
    ])
}

/// One piece of an interaction-picture schedule.
///
/// Inside the segment the coupling between levels `r` and `c` is
/// `couplings[r][c] * exp(i (rates[r] - rates[c]) (t - start_time))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatingSegment {
    pub duration: f64,
    pub start_time: f64,
    pub couplings: Effective3,
    pub rates: [f64; 3],
}

impl RotatingSegment {
    fn at(&self, local: f64) -> Effective3 {
        let r = self.rates;
        let rot = |a: usize, b: usize| {
            let x = (r[a] - r[b]) * local;
            c64::new(x.cos(), x.sin())
        };
        Effective3 {
            j1a: self.couplings.j1a * rot(0, 1),
            jan: self.couplings.jan * rot(1, 2),
            j1n: self.couplings.j1n * rot(0, 2),
            ..Effective3::ZERO
        }
    }
}

/// A schedule viewed in the frame that removes its diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionSchedule {
    pub segments: Vec<RotatingSegment>,
    original: Vec<(f64, Effective3)>,
}

impl InteractionSchedule {
    pub fn total_time(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Accumulated diagonal phases `theta_k(T) = int_0^T delta_k`.
    pub fn frame_phases(&self) -> [f64; 3] {
        let mut th = [0.0; 3];
        for s in &self.segments {
            for (k, t) in th.iter_mut().enumerate() {
                *t += s.rates[k] * s.duration;
            }
        }
        th
    }

    /// Coupling matrix (zero diagonal) at time `t`; times past the end use the
    /// last segment.
    pub fn coupling_at(&self, t: f64) -> Effective3 {
        let mut chosen = None;
        for s in &self.segments {
            chosen = Some(s);
            if t < s.start_time + s.duration {
                break;
            }
        }
        match chosen {
            Some(s) => s.at(t - s.start_time),
            None => Effective3::ZERO,
        }
    }

    /// Exact interaction-picture propagator `exp(i Theta(T)) U(T)`.
    pub fn propagator(&self) -> Mat3 {
        let mut u = crate::linalg::mat3_identity();
        for (dt, h) in &self.original {
            u = crate::linalg::mul3(&crate::linalg::expm3(&h.matrix(), *dt), &u);
        }
        let th = self.frame_phases();
        for (r, row) in u.iter_mut().enumerate() {
            let p = c64::new(th[r].cos(), th[r].sin());
            for x in row.iter_mut() {
                *x *= p;
            }
        }
        u
    }

    /// Piecewise-constant approximation with `substeps` midpoint samples per
    /// segment.
    pub fn sampled(&self, substeps: usize) -> Vec<(f64, Effective3)> {
        let k = substeps.max(1);
        let mut out = Vec::with_capacity(self.segments.len() * k);
        for s in &self.segments {
            let dt = s.duration / k as f64;
            for i in 0..k {
                out.push((dt, s.at((i as f64 + 0.5) * dt)));
            }
        }
        out
    }
}

/// Moves a piecewise-constant schedule into the interaction picture of its
/// diagonal. Durations must be positive.
pub fn to_interaction_picture(schedule: &[(f64, Effective3)]) -> Result<InteractionSchedule> {
    let mut segments = Vec::with_capacity(schedule.len());
    let mut theta = [0.0f64; 3];
    let mut start = 0.0;
    for (dt, h) in schedule {
        if !(*dt > 0.0 && dt.is_finite()) {
            return Err(Error::ContractViolation(format!("segment duration must be positive, got {dt}")));
        }
        // Couplings carry the phases accumulated before this segment.
        let entry = RotatingSegment { duration: *dt, start_time: start, couplings: h.off_diagonal(), rates: theta };
        let couplings = entry.at(1.0);
        segments.push(RotatingSegment { duration: *dt, start_time: start, couplings, rates: h.diagonal() });
        for (k, t) in theta.iter_mut().enumerate() {
            *t += h.diagonal()[k] * dt;
        }
        start += dt;
    }
    Ok(InteractionSchedule { segments, original: schedule.to_vec() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferDecomposition {
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub phi: f64,
    pub valid: bool,
}

/// Unitary of the ideal transfer form: `|phi1>` lands on `|phi3>` and the
/// `{|phi2>, |phi3>}` block is a rotation by `theta`.
pub fn transfer_form(theta: f64, alpha: f64, beta: f64, phi: f64) -> Mat3 {
    let e = |x: f64| c64::new(x.cos(), x.sin());
    let (s, c) = theta.sin_cos();
    [
        [ZERO, ZERO, e(phi)],
        [e(-alpha) * c, -e(-beta) * s, ZERO],
        [e(beta) * s, e(alpha) * c, ZERO],
    ]
}

fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(std::f64::consts::TAU);
    if y > std::f64::consts::PI {
        y - std::f64::consts::TAU
    } else {
        y
    }
}

/// Tests `u` against the transfer form and extracts its angles.
///
/// `valid` depends only on the zero pattern and entry moduli. Angles use
/// `theta` in `[0, pi/2]` and phases in `(-pi, pi]`; a phase whose entries
/// vanish is reported as 0.
pub fn boundary_form_check(u: &CMat, tol: f64) -> Result<TransferDecomposition> {
    if u.nrows() != 3 || u.ncols() != 3 {
        return Err(Error::ContractViolation(format!("expected 3x3, got {}x{}", u.nrows(), u.ncols())));
    }
    let defect = unitarity_defect(u);
    if !(defect <= UNITARITY_TOL) {
        return Err(Error::ContractViolation(format!("input is not unitary (defect {defect:.3e})")));
    }
    let a = |i: usize, j: usize| u[(i, j)].norm();
    let zeros = a(0, 0) <= tol && a(0, 1) <= tol && a(1, 2) <= tol && a(2, 2) <= tol;
    let moduli = (a(0, 2) - 1.0).abs() <= tol && (a(1, 0) - a(2, 1)).abs() <= tol && (a(1, 1) - a(2, 0)).abs() <= tol;

    let theta = a(2, 0).atan2(a(1, 0));
    let phi = wrap(u[(0, 2)].arg());
    let alpha = if a(1, 0) > tol {
        wrap(-u[(1, 0)].arg())
    } else if a(2, 1) > tol {
        wrap(u[(2, 1)].arg())
    } else {
        0.0
    };
    let beta = if a(2, 0) > tol {
        wrap(u[(2, 0)].arg())
    } else if a(1, 1) > tol {
        wrap(-(-u[(1, 1)]).arg())
    } else {
        0.0
    };
    Ok(TransferDecomposition { theta, alpha, beta, phi, valid: zeros && moduli })
}
