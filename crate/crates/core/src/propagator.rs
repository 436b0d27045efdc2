//! Unitary evolution of sector matrices.

use crate::error::{Error, Result};
use crate::linalg::{c64, hermiticity_defect, CMat, HermitianEigen, ZERO};
use crate::spin_model::{project_full_space, qubit_mask, Basis, SectorMatrix, SpinModel};

/// Largest qubit count accepted by [`lr_commutator_check`].
pub const MAX_LR_QUBITS: usize = 10;

/// Piecewise-constant Hamiltonian; segments act in order.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSchedule {
    segments: Vec<(f64, SectorMatrix)>,
}

impl ControlSchedule {
    pub fn new(segments: Vec<(f64, SectorMatrix)>) -> Result<Self> {
        let Some((_, first)) = segments.first() else {
            return Err(Error::ContractViolation("schedule has no segments".into()));
        };
        let basis = first.basis();
        for (k, (dt, h)) in segments.iter().enumerate() {
            if !(*dt > 0.0 && dt.is_finite()) {
                return Err(Error::ContractViolation(format!("segment {k} has duration {dt}")));
            }
            if h.basis() != basis {
                return Err(Error::ContractViolation(format!(
                    "segment {k} is in {:?}, expected {:?}",
                    h.basis(),
                    basis
                )));
            }
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[(f64, SectorMatrix)] {
        &self.segments
    }

    pub fn basis(&self) -> Basis {
        self.segments[0].1.basis()
    }

    pub fn total_time(&self) -> f64 {
        self.segments.iter().map(|(dt, _)| dt).sum()
    }
}

/// `exp(-i h t)`.
pub fn evolve_constant(h: &SectorMatrix, t: f64) -> Result<CMat> {
    Ok(HermitianEigen::new(h.entries())?.propagator(t))
}

/// `exp(-i h t)` for a bare matrix, checking Hermiticity first.
pub fn evolve_matrix(h: &CMat, t: f64) -> Result<CMat> {
    let defect = hermiticity_defect(h);
    if !(defect <= 1e-12) {
        return Err(Error::ContractViolation(format!("matrix is not Hermitian (defect {defect:.3e})")));
    }
    Ok(HermitianEigen::new(h)?.propagator(t))
}

/// Time-ordered product, later segments on the left.
pub fn evolve_schedule(s: &ControlSchedule) -> Result<CMat> {
    let mut u: Option<CMat> = None;
    for (dt, h) in &s.segments {
        let step = evolve_constant(h, *dt)?;
        u = Some(match u {
            None => step,
            Some(prev) => &step * &prev,
        });
    }
    Ok(u.expect("schedule is non-empty"))
}

/// `exp(-i h t) psi`.
pub fn evolve_state(h: &SectorMatrix, t: f64, psi: &[c64]) -> Result<Vec<c64>> {
    if psi.len() != h.dim() {
        return Err(Error::ContractViolation(format!("state has {} entries, matrix is {}", psi.len(), h.dim())));
    }
    Ok(HermitianEigen::new(h.entries())?.apply(t, psi))
}

/// `|<phi3| u |phi1>|`: the corner entry of the three-level or
/// single-excitation propagator.
pub fn transfer_fidelity(u: &CMat, basis: Basis) -> Result<f64> {
    match basis {
        Basis::FullSpace(_) => Err(Error::UnsupportedBasis(
            "transfer fidelity is defined on the excitation sectors; use the commutator check for the full space"
                .into(),
        )),
        _ => {
            let d = basis.dim();
            if u.nrows() != d || u.ncols() != d {
                return Err(Error::ContractViolation(format!(
                    "{:?} needs a {d}x{d} propagator, got {}x{}",
                    basis,
                    u.nrows(),
                    u.ncols()
                )));
            }
            Ok(u[(d - 1, 0)].norm())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSignature {
    /// `<0| [Y_n(t), X_1] |0>` under the bare evolution.
    pub raw: c64,
    /// The same expectation after a `Z` rotation on qubit `n` that gives the
    /// transferred amplitude the vacuum's phase.
    pub corrected: c64,
    /// Rotation angle used for `corrected`.
    pub correction: f64,
}

/// Commutator `<0| [Y_n(t), X_1(0)] |0>` in the full space, all qubits
/// starting in `|0>`.
pub fn lr_commutator_check(model: &SpinModel, t: f64) -> Result<LrSignature> {
    let n = model.n();
    if n > MAX_LR_QUBITS {
        return Err(Error::SizeLimit { n, max: MAX_LR_QUBITS });
    }
    let h = project_full_space(model)?;
    let eig = HermitianEigen::new(h.entries())?;
    let dim = 1usize << n;
    let m1 = qubit_mask(n, 1);
    let mn = qubit_mask(n, n);

    let mut vac = vec![ZERO; dim];
    vac[0] = c64::new(1.0, 0.0);
    let mut flipped = vec![ZERO; dim];
    flipped[m1] = c64::new(1.0, 0.0);
    let a = eig.apply(t, &vac);
    let b = eig.apply(t, &flipped);

    let signature = |a: &[c64], b: &[c64]| {
        // <a| Y_n |b>
        let mut s = ZERO;
        for (k, bk) in b.iter().enumerate() {
            let target = k ^ mn;
            let y = if k & mn == 0 { c64::new(0.0, 1.0) } else { c64::new(0.0, -1.0) };
            s += a[target].conj() * y * bk;
        }
        c64::new(0.0, 2.0 * s.im)
    };
    let raw = signature(&a, &b);

    let transferred = b[mn];
    let correction = if transferred.norm() < 1e-12 { 0.0 } else { a[0].arg() - transferred.arg() };
    let rot = c64::new(correction.cos(), correction.sin());
    let rotate = |v: &[c64]| -> Vec<c64> {
        v.iter().enumerate().map(|(k, x)| if k & mn != 0 { *x * rot } else { *x }).collect()
    };
    let corrected = signature(&rotate(&a), &rotate(&b));
    Ok(LrSignature { raw, corrected, correction })
}
