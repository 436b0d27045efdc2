//! Brachistochrone conditions for the three-level transfer problem.
//!
//! The multiplier operator `F` must satisfy `i dF/dt = [H, F]`, the
//! normalization `Tr[F H_c] = 1` where `H_c` is the coupling (off-diagonal)
//! part of `H`, each inequality `|J|^2 + s^2 = bound^2` and complementarity
//! `lambda s = 0`. Couplings are in physical units throughout, so the bound on
//! `J_1A` and `J_AN` is `sqrt(n-2) j0`.

use serde::Serialize;

use crate::effective3::Effective3;
use crate::error::{Error, Result};
use crate::linalg::{c64, cmat_to_mat3, mat3_to_cmat, CMat, Mat3, ZERO};
use crate::propagator::ControlSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct QBMultipliers {
    pub lam1: f64,
    pub lam2: f64,
    pub lam1a: f64,
    pub laman: f64,
    pub lam1n: f64,
    pub s1a: f64,
    pub san: f64,
    pub s1n: f64,
}

impl QBMultipliers {
    /// The five multipliers in the order `lam1, lam2, lam1a, laman, lam1n`.
    pub fn lambdas(&self) -> [f64; 5] {
        [self.lam1, self.lam2, self.lam1a, self.laman, self.lam1n]
    }

    pub fn with_lambda(&self, index: usize, value: f64) -> Self {
        let mut m = *self;
        match index {
            0 => m.lam1 = value,
            1 => m.lam2 = value,
            2 => m.lam1a = value,
            3 => m.laman = value,
            4 => m.lam1n = value,
            _ => panic!("multiplier index {index} out of range"),
        }
        m
    }
}

pub fn build_f(m: &QBMultipliers, h: &Effective3) -> Mat3 {
    let f12 = h.j1a * m.lam1a;
    let f13 = h.j1n * m.lam1n;
    let f23 = h.jan * m.laman;
    [
        [c64::new(m.lam1 + m.lam2, 0.0), f12, f13],
        [f12.conj(), c64::new(-2.0 * m.lam2, 0.0), f23],
        [f13.conj(), f23.conj(), c64::new(-m.lam1 + m.lam2, 0.0)],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommutatorOrder {
    /// `i dF/dt = [H, F]`
    HF,
    /// `i dF/dt = [F, H]`
    FH,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    /// Max-abs mismatch of the equation of motion for `F`.
    pub qb: f64,
    /// `|Tr[F H_c] - 1|`.
    pub normalization: f64,
    /// `| |J|^2 + s^2 - bound^2 |`.
    pub constraint: f64,
    /// `|lambda s|`.
    pub complementarity: f64,
    pub grid: usize,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        self.qb.max(self.normalization).max(self.constraint).max(self.complementarity)
    }
}

fn mat3_sub(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][j] - b[i][j];
        }
    }
    out
}

fn comm3(a: &Mat3, b: &Mat3) -> Mat3 {
    mat3_sub(&crate::linalg::mul3(a, b), &crate::linalg::mul3(b, a))
}

fn max_abs3(a: &Mat3) -> f64 {
    a.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max)
}

fn normalization(m: &QBMultipliers, h: &Effective3) -> f64 {
    2.0 * (m.lam1a * h.j1a.norm_sqr() + m.laman * h.jan.norm_sqr() + m.lam1n * h.j1n.norm_sqr())
}

/// Residuals with the default ordering `i dF/dt = [H, F]`.
pub fn qb_residuals(h_traj: &ControlSchedule, m_traj: &[QBMultipliers], n: usize, j0: f64) -> Result<ResidualReport> {
    qb_residuals_with(h_traj, m_traj, n, j0, CommutatorOrder::HF)
}

/// Residuals of a piecewise-constant trajectory with one multiplier set per
/// segment. `F` is sampled at segment midpoints; its derivative is the
/// centered difference between neighbouring midpoints, compared against the
/// commutator of the averaged neighbours. A constant trajectory therefore
/// reports exactly `max |[H, F]|`.
pub fn qb_residuals_with(
    h_traj: &ControlSchedule,
    m_traj: &[QBMultipliers],
    n: usize,
    j0: f64,
    order: CommutatorOrder,
) -> Result<ResidualReport> {
    let segs = h_traj.segments();
    if m_traj.len() != segs.len() {
        return Err(Error::ContractViolation(format!(
            "{} multiplier sets for {} segments",
            m_traj.len(),
            segs.len()
        )));
    }
    if n < 3 {
        return Err(Error::InvalidSize(format!("need n >= 3, got {n}")));
    }
    let hs: Vec<Effective3> = segs.iter().map(|(_, s)| Effective3::from_sector(s)).collect::<Result<_>>()?;
    let fs: Vec<Mat3> = hs.iter().zip(m_traj).map(|(h, m)| build_f(m, h)).collect();
    let bound_a = ((n - 2) as f64).sqrt() * j0;

    let ordered = |h: &Mat3, f: &Mat3| match order {
        CommutatorOrder::HF => comm3(h, f),
        CommutatorOrder::FH => comm3(f, h),
    };

    let mut qb = 0.0f64;
    if segs.len() == 1 {
        qb = max_abs3(&ordered(&hs[0].matrix(), &fs[0]));
    }
    for k in 0..segs.len().saturating_sub(1) {
        let gap = 0.5 * (segs[k].0 + segs[k + 1].0);
        let avg = |a: &Mat3, b: &Mat3| {
            let mut out = [[ZERO; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    out[i][j] = (a[i][j] + b[i][j]) * 0.5;
                }
            }
            out
        };
        let hm = avg(&hs[k].matrix(), &hs[k + 1].matrix());
        let fm = avg(&fs[k], &fs[k + 1]);
        let rhs = ordered(&hm, &fm);
        let mut lhs = mat3_sub(&fs[k + 1], &fs[k]);
        for x in lhs.iter_mut().flatten() {
            *x *= c64::new(0.0, 1.0 / gap);
        }
        qb = qb.max(max_abs3(&mat3_sub(&lhs, &rhs)));
    }

    let mut norm = 0.0f64;
    let mut constraint = 0.0f64;
    let mut comp = 0.0f64;
    for (h, m) in hs.iter().zip(m_traj) {
        norm = norm.max((normalization(m, h) - 1.0).abs());
        for (j, s, b, lam) in [
            (h.j1a, m.s1a, bound_a, m.lam1a),
            (h.jan, m.san, bound_a, m.laman),
            (h.j1n, m.s1n, j0, m.lam1n),
        ] {
            constraint = constraint.max((j.norm_sqr() + s * s - b * b).abs());
            comp = comp.max((lam * s).abs());
        }
    }
    Ok(ResidualReport { qb, normalization: norm, constraint, complementarity: comp, grid: segs.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Constraint {
    #[serde(rename = "1A")]
    OneA,
    #[serde(rename = "AN")]
    AN,
    #[serde(rename = "1N")]
    OneN,
}

impl Constraint {
    pub fn label(&self) -> &'static str {
        match self {
            Constraint::OneA => "1A",
            Constraint::AN => "AN",
            Constraint::OneN => "1N",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseSpec {
    pub id: u8,
    pub zero_multipliers: Vec<Constraint>,
    pub zero_slacks: Vec<Constraint>,
    pub has_minimum: bool,
}

/// The eight complementarity patterns. Cases 1-5 admit no time-optimal
/// solution: either the normalization cannot hold or the stationarity
/// equations force an asymmetric, non-saturated schedule that reduces to
/// another case.
pub fn case_catalog() -> Vec<CaseSpec> {
    use Constraint::*;
    let row = |id, zm: &[Constraint], has| {
        let zs = [OneA, AN, OneN].into_iter().filter(|c| !zm.contains(c)).collect();
        CaseSpec { id, zero_multipliers: zm.to_vec(), zero_slacks: zs, has_minimum: has }
    };
    vec![
        row(1, &[OneA, AN, OneN], false),
        row(2, &[AN, OneN], false),
        row(3, &[OneA, OneN], false),
        row(4, &[AN], false),
        row(5, &[OneA], false),
        row(6, &[OneA, AN], true),
        row(7, &[OneN], true),
        row(8, &[], true),
    ]
}

fn check_params(n: usize, j0: f64) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidSize(format!("need n >= 3, got {n}")));
    }
    if !(j0 > 0.0 && j0.is_finite()) {
        return Err(Error::Domain(format!("j0 must be positive, got {j0}")));
    }
    Ok(())
}

fn check_j1n_bar(j: f64, j0: f64) -> Result<()> {
    if !j.is_finite() || j.abs() > j0 {
        return Err(Error::ConstraintViolation(format!("|J_1N| average {j} exceeds j0 = {j0}")));
    }
    Ok(())
}

/// Minimum transfer time of a case, `None` where no minimum exists.
pub fn case_minimum_time(case_id: u8, n: usize, j0: f64, j1n_bar: Option<f64>) -> Result<Option<f64>> {
    check_params(n, j0)?;
    let pi = std::f64::consts::PI;
    match case_id {
        1..=5 => Ok(None),
        6 => Ok(Some(pi / (2.0 * j0))),
        7 => {
            let j = j1n_bar.ok_or_else(|| Error::Domain("case 7 needs the average |J_1N|".into()))?;
            check_j1n_bar(j, j0)?;
            Ok(Some(pi / (2.0 * (n - 2) as f64 * j0 * j0 + 4.0 * j * j).sqrt()))
        }
        8 => Ok(Some(pi / (j0 * (2.0 * n as f64).sqrt()))),
        other => Err(Error::UnsupportedCase(other)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CaseKind {
    /// Direct `1-N` coupling `j0 e^{-i phi}` only.
    Six { phi: f64 },
    /// Mirror-symmetric saturated couplings with diagonal `c - j1n_bar` on
    /// both end levels.
    Seven { c1a: f64, j1n_bar: f64 },
    /// Saturated couplings and `J_AN = +/- J_1A`, end diagonals `c1a`.
    Four { c1a: f64, plus: bool },
    /// Case 7 at saturation, `c1a = 4 j0`.
    Eight,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseParams {
    pub n: usize,
    pub j0: f64,
    pub kind: CaseKind,
}

impl CaseParams {
    pub fn case_id(&self) -> u8 {
        match self.kind {
            CaseKind::Six { .. } => 6,
            CaseKind::Seven { .. } => 7,
            CaseKind::Four { .. } => 4,
            CaseKind::Eight => 8,
        }
    }

    /// Parameters that realize the case's minimum time.
    pub fn optimal(case_id: u8, n: usize, j0: f64, j1n_bar: Option<f64>) -> Result<Self> {
        check_params(n, j0)?;
        let kind = match case_id {
            6 => CaseKind::Six { phi: 0.0 },
            7 => {
                let j = j1n_bar.ok_or_else(|| Error::Domain("case 7 needs the average |J_1N|".into()))?;
                check_j1n_bar(j, j0)?;
                CaseKind::Seven { c1a: 4.0 * j.abs(), j1n_bar: j.abs() }
            }
            8 => CaseKind::Eight,
            other => return Err(Error::UnsupportedCase(other)),
        };
        Ok(Self { n, j0, kind })
    }
}

fn seven_parts(p: &CaseParams) -> (f64, f64) {
    match p.kind {
        CaseKind::Seven { c1a, j1n_bar } => (c1a, j1n_bar),
        CaseKind::Eight => (4.0 * p.j0, p.j0),
        _ => unreachable!(),
    }
}

/// The constant Hamiltonian whose propagator [`case_unitary`] evaluates.
pub fn case_hamiltonian(p: &CaseParams) -> Result<Effective3> {
    check_params(p.n, p.j0)?;
    let b = c64::new(((p.n - 2) as f64).sqrt() * p.j0, 0.0);
    Ok(match p.kind {
        CaseKind::Six { phi } => Effective3 {
            j1n: c64::new(phi.cos(), -phi.sin()) * p.j0,
            ..Effective3::ZERO
        },
        CaseKind::Four { c1a, plus } => {
            let s = if plus { 1.0 } else { -1.0 };
            Effective3 { j1a: b, jan: b * s, j1n: c64::new(p.j0, 0.0), d1: c1a, da: 0.0, dn: c1a }
        }
        CaseKind::Seven { .. } | CaseKind::Eight => {
            let (c, j) = seven_parts(p);
            Effective3 { j1a: b, jan: b, j1n: c64::new(j, 0.0), d1: c - j, da: 0.0, dn: c - j }
        }
    })
}

/// `exp(-i x)`
fn ph(x: f64) -> c64 {
    c64::new(x.cos(), -x.sin())
}

/// Closed-form propagator `exp(-i H t)` of [`case_hamiltonian`].
pub fn case_unitary(p: &CaseParams, t: f64) -> Result<CMat> {
    check_params(p.n, p.j0)?;
    let j0 = p.j0;
    let na = (p.n - 2) as f64;
    let i = c64::new(0.0, 1.0);
    let m: Mat3 = match p.kind {
        CaseKind::Six { phi } => {
            let (s, c) = (j0 * t).sin_cos();
            let u13 = -i * ph(phi) * s;
            let u31 = -i * ph(-phi) * s;
            let cc = c64::new(c, 0.0);
            [[cc, ZERO, u13], [ZERO, c64::new(1.0, 0.0), ZERO], [u31, ZERO, cc]]
        }
        CaseKind::Four { c1a, plus } => {
            let sign = if plus { 1.0 } else { -1.0 };
            let lone = c1a - sign * j0;
            let kappa = c1a + sign * j0;
            let omega = (kappa * kappa + 8.0 * na * j0 * j0).sqrt();
            symmetric_block(lone, kappa, omega, na, j0, t, sign)
        }
        CaseKind::Seven { .. } | CaseKind::Eight => {
            let (c, j) = seven_parts(p);
            let omega = (c * c + 8.0 * na * j0 * j0).sqrt();
            symmetric_block(c - 2.0 * j, c, omega, na, j0, t, 1.0)
        }
    };
    Ok(mat3_to_cmat(&m))
}

/// Propagator of a mirror-symmetric Hamiltonian with one decoupled end-level
/// combination at energy `lone` and a two-level block of trace `kappa` and
/// splitting `omega`. `sign` is the relative sign of `J_AN` and `J_1A`.
fn symmetric_block(lone: f64, kappa: f64, omega: f64, na: f64, j0: f64, t: f64, sign: f64) -> Mat3 {
    let i = c64::new(0.0, 1.0);
    let (s, c) = (omega * t / 2.0).sin_cos();
    let half = ph(kappa * t / 2.0);
    let u11 = ph(lone * t) * 0.5 + half * (c64::new(c, 0.0) - i * (kappa / omega * s)) * 0.5;
    let u12 = -i * half * (2.0 * na.sqrt() * j0 / omega * s);
    let u13 = (u11 - ph(lone * t)) * sign;
    let u22 = half * (c64::new(c, 0.0) + i * (kappa / omega * s));
    [[u11, u12, u13], [u12, u22, u12 * sign], [u13, u12 * sign, u11]]
}

/// Stationary multipliers for the constant optimal Hamiltonians of cases 6,
/// 7 and 8.
///
/// Case 8 has a one-parameter family of stationary sets (see
/// [`case8_multipliers`]); the representative returned here has
/// `lam1n = 0`, which is the saturation limit of case 7.
pub fn stationary_multipliers(case_id: u8, n: usize, j0: f64, j1n_bar: Option<f64>) -> Result<QBMultipliers> {
    check_params(n, j0)?;
    let na = (n - 2) as f64;
    let bound_a = na.sqrt() * j0;
    match case_id {
        6 => Ok(QBMultipliers {
            lam1n: 1.0 / (2.0 * j0 * j0),
            s1a: bound_a,
            san: bound_a,
            ..Default::default()
        }),
        7 => {
            let j = j1n_bar.ok_or_else(|| Error::Domain("case 7 needs the average |J_1N|".into()))?;
            check_j1n_bar(j, j0)?;
            let j = j.abs();
            Ok(QBMultipliers {
                lam2: j / (3.0 * na * j0 * j0),
                lam1a: 1.0 / (4.0 * na * j0 * j0),
                laman: 1.0 / (4.0 * na * j0 * j0),
                s1n: (j0 * j0 - j * j).max(0.0).sqrt(),
                ..Default::default()
            })
        }
        8 => case8_multipliers(n, j0, 0.0),
        other => Err(Error::UnsupportedCase(other)),
    }
}

/// Member of the case-8 stationary family labelled by `lam1n`:
/// normalization fixes `lam1a = laman = (1/(2 j0^2) - lam1n) / (2 (n-2))` and
/// stationarity fixes `lam2 = j0 (4 lam1a - lam1n) / 3`.
pub fn case8_multipliers(n: usize, j0: f64, lam1n: f64) -> Result<QBMultipliers> {
    check_params(n, j0)?;
    let na = (n - 2) as f64;
    let lam1a = (1.0 / (2.0 * j0 * j0) - lam1n) / (2.0 * na);
    Ok(QBMultipliers {
        lam2: j0 * (4.0 * lam1a - lam1n) / 3.0,
        lam1a,
        laman: lam1a,
        lam1n,
        ..Default::default()
    })
}

/// Constant trajectory of a supported case over its minimum time, split into
/// `grid` equal segments, with its stationary multipliers.
pub fn stationary_trajectory(
    case_id: u8,
    n: usize,
    j0: f64,
    j1n_bar: Option<f64>,
    grid: usize,
) -> Result<(ControlSchedule, Vec<QBMultipliers>)> {
    if grid == 0 {
        return Err(Error::Domain("grid must have at least one segment".into()));
    }
    let m = stationary_multipliers(case_id, n, j0, j1n_bar)?;
    let t = case_minimum_time(case_id, n, j0, j1n_bar)?.expect("supported cases have a minimum");
    let h = match case_id {
        8 => Effective3::optimal(n, j0)?,
        _ => case_hamiltonian(&CaseParams::optimal(case_id, n, j0, j1n_bar)?)?,
    };
    let dt = t / grid as f64;
    let sched = ControlSchedule::new(vec![(dt, h.to_sector()); grid])?;
    Ok((sched, vec![m; grid]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaPoint {
    pub x: u32,
    /// Objective on the `gamma = (x+1)/x` branch, if it has a real solution.
    pub g_plus: Option<f64>,
    /// Objective on the `gamma = (x-1)/x` branch.
    pub g_minus: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaScan {
    pub points: Vec<LemmaPoint>,
    pub minimizer: u32,
    pub minimizer_plus_branch: bool,
    pub min_g: f64,
}

/// Objective `x / sqrt(q^2 + y^2)` where `y` is the largest-magnitude real
/// root of `(y - r)^2 = gamma^2 (q^2 + y^2)`.
fn lemma_objective(x: f64, gamma: f64, q: f64, r: f64) -> Option<f64> {
    let a = 1.0 - gamma * gamma;
    let b = -2.0 * r;
    let c = r * r - gamma * gamma * q * q;
    let roots: Vec<f64> = if a.abs() < 1e-15 {
        if b == 0.0 {
            vec![]
        } else {
            vec![-c / b]
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            vec![]
        } else {
            let sq = disc.sqrt();
            vec![(-b + sq) / (2.0 * a), (-b - sq) / (2.0 * a)]
        }
    };
    let y = roots.into_iter().filter(|y| y.is_finite()).max_by(|a, b| a.abs().total_cmp(&b.abs()))?;
    Some(x / (q * q + y * y).sqrt())
}

/// Grid scan of the constant-value problem over integer `x` in `1..=x_max`.
pub fn lemma_grid_scan(q: f64, r: f64, x_max: u32) -> Result<LemmaScan> {
    if !(q > 0.0) || !(r >= 0.0) || !q.is_finite() || !r.is_finite() {
        return Err(Error::Domain(format!("need q > 0 and r >= 0, got q = {q}, r = {r}")));
    }
    if x_max < 1 {
        return Err(Error::Domain("x_max must be at least 1".into()));
    }
    let mut points = Vec::with_capacity(x_max as usize);
    let mut best: Option<(f64, u32, bool)> = None;
    for x in 1..=x_max {
        let xf = x as f64;
        let g_plus = lemma_objective(xf, (xf + 1.0) / xf, q, r);
        let g_minus = lemma_objective(xf, (xf - 1.0) / xf, q, r);
        for (g, plus) in [(g_plus, true), (g_minus, false)] {
            if let Some(g) = g {
                if best.map_or(true, |(b, _, _)| g < b) {
                    best = Some((g, x, plus));
                }
            }
        }
        points.push(LemmaPoint { x, g_plus, g_minus });
    }
    let (min_g, minimizer, plus) =
        best.ok_or_else(|| Error::Domain("no admissible point on the scanned grid".into()))?;
    Ok(LemmaScan { points, minimizer, minimizer_plus_branch: plus, min_g })
}

/// `F` for a constant Hamiltonian, as a dense matrix.
pub fn f_matrix(m: &QBMultipliers, h: &Effective3) -> CMat {
    mat3_to_cmat(&build_f(m, h))
}

/// Reads an `F` matrix back into multipliers given the couplings it was built
/// from; slacks are left at zero.
pub fn multipliers_from_f(f: &CMat, h: &Effective3) -> QBMultipliers {
    let f = cmat_to_mat3(f);
    let ratio = |x: c64, j: c64| if j.norm() > 0.0 { (x / j).re } else { 0.0 };
    let lam2 = -f[1][1].re / 2.0;
    QBMultipliers {
        lam1: f[0][0].re - lam2,
        lam2,
        lam1a: ratio(f[0][1], h.j1a),
        laman: ratio(f[1][2], h.jan),
        lam1n: ratio(f[0][2], h.j1n),
        ..Default::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effective3::{boundary_form_check, to_interaction_picture, BOUNDARY_TOL};
    use crate::linalg::{expm_hermitian, max_abs_diff, unitarity_defect};
    use faer::prelude::*;
    use faer::Mat;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn build_f_examples() {
        let h = Effective3::optimal(5, 1.0).unwrap();
        assert_eq!(build_f(&QBMultipliers::default(), &h), [[ZERO; 3]; 3]);
        let m = QBMultipliers { lam1: 1.0, ..Default::default() };
        let f = build_f(&m, &Effective3::ZERO);
        assert_eq!(f[0][0].re, 1.0);
        assert_eq!(f[1][1].re, 0.0);
        assert_eq!(f[2][2].re, -1.0);
    }

    #[test]
    fn f_round_trips_through_matrix() {
        let h = Effective3 { j1a: c64::new(0.3, 0.4), jan: c64::new(-1.0, 0.2), j1n: c64::new(0.0, 0.7), ..Effective3::ZERO };
        let m = QBMultipliers { lam1: 0.1, lam2: -0.3, lam1a: 0.5, laman: 0.25, lam1n: 2.0, ..Default::default() };
        let back = multipliers_from_f(&f_matrix(&m, &h), &h);
        for (a, b) in back.lambdas().iter().zip(m.lambdas()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_trajectory_reports_commutator() {
        let h = Effective3::optimal(6, 1.0).unwrap();
        let m = QBMultipliers { lam1: 0.3, lam2: 0.1, lam1a: 0.2, laman: 0.05, lam1n: 0.4, ..Default::default() };
        let f = build_f(&m, &h);
        let want = max_abs3(&comm3(&h.matrix(), &f));
        assert!(want > 0.1);
        let sched = ControlSchedule::new(vec![(0.01, h.to_sector()); 20]).unwrap();
        let r = qb_residuals(&sched, &vec![m; 20], 6, 1.0).unwrap();
        assert!((r.qb - want).abs() < 1e-14);
        let one = ControlSchedule::new(vec![(0.2, h.to_sector())]).unwrap();
        assert!((qb_residuals(&one, &[m], 6, 1.0).unwrap().qb - want).abs() < 1e-14);
    }

    #[test]
    fn zero_multipliers_miss_normalization() {
        let h = Effective3::optimal(6, 1.0).unwrap();
        let sched = ControlSchedule::new(vec![(0.1, h.to_sector()); 4]).unwrap();
        let r = qb_residuals(&sched, &[QBMultipliers::default(); 4], 6, 1.0).unwrap();
        assert_eq!(r.normalization, 1.0);
        assert!(qb_residuals(&sched, &[QBMultipliers::default(); 3], 6, 1.0).is_err());
    }

    #[test]
    fn stationary_cases_have_tiny_residuals() {
        for (case, j) in [(8u8, None), (7, Some(1.0)), (7, Some(0.4)), (6, None)] {
            for n in [3usize, 5, 8, 40] {
                let (sched, ms) = stationary_trajectory(case, n, 1.0, j, 1000).unwrap();
                let r = qb_residuals(&sched, &ms, n, 1.0).unwrap();
                assert!(r.max() <= 1e-12, "case {case} n {n}: {r:?}");
            }
        }
    }

    #[test]
    fn case8_representative() {
        let m = stationary_multipliers(8, 8, 1.0, None).unwrap();
        assert!((m.lam1a - 1.0 / 24.0).abs() < 1e-15);
        assert!((m.lam2 - 1.0 / 18.0).abs() < 1e-15);
        assert_eq!(m.lam1, 0.0);
        assert_eq!(m.lam1a, m.laman);
        assert_eq!(stationary_multipliers(7, 8, 1.0, Some(1.0)).unwrap(), m);
        assert_eq!(stationary_multipliers(3, 8, 1.0, None).unwrap_err(), Error::UnsupportedCase(3));
    }

    #[test]
    fn case8_family_is_stationary() {
        let h = Effective3::optimal(7, 1.3).unwrap();
        for lam1n in [-0.2, 0.0, 0.1, 0.29] {
            let m = case8_multipliers(7, 1.3, lam1n).unwrap();
            let f = build_f(&m, &h);
            assert!(max_abs3(&comm3(&h.matrix(), &f)) < 1e-13);
            assert!((normalization(&m, &h) - 1.0).abs() < 1e-13);
        }
    }

    /// Stationarity and normalization assembled as a real linear system in
    /// `(lam1a, lam1n, lam2)` with `lam1 = 0` and `laman = lam1a`, solved by
    /// least squares.
    fn oracle(h: &Effective3, extra_lam1n_zero: bool) -> (Vec<f64>, usize) {
        let basis = [
            QBMultipliers { lam1a: 1.0, laman: 1.0, ..Default::default() },
            QBMultipliers { lam1n: 1.0, ..Default::default() },
            QBMultipliers { lam2: 1.0, ..Default::default() },
        ];
        let cols: Vec<Mat3> = basis.iter().map(|m| comm3(&h.matrix(), &build_f(m, h))).collect();
        let mut rows: Vec<([f64; 3], f64)> = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                rows.push(([cols[0][i][j].re, cols[1][i][j].re, cols[2][i][j].re], 0.0));
                rows.push(([cols[0][i][j].im, cols[1][i][j].im, cols[2][i][j].im], 0.0));
            }
        }
        rows.push(([normalization(&basis[0], h), normalization(&basis[1], h), 0.0], 1.0));
        if extra_lam1n_zero {
            rows.push(([0.0, 1.0, 0.0], 0.0));
        }
        let a = Mat::<f64>::from_fn(rows.len(), 3, |r, c| rows[r].0[c]);
        let b = Mat::<f64>::from_fn(rows.len(), 1, |r, _| rows[r].1);
        let x = a.qr().solve_lstsq(&b);
        let sv = a.singular_values().unwrap();
        let rank = sv.iter().filter(|s| **s > 1e-10 * sv[0]).count();
        ((0..3).map(|k| x[(k, 0)]).collect(), rank)
    }

    #[test]
    fn multipliers_match_linear_solve() {
        for n in [3usize, 4, 8, 17] {
            for j0 in [0.5, 1.0, 2.0] {
                let h = Effective3::optimal(n, j0).unwrap();
                let (_, rank) = oracle(&h, false);
                assert_eq!(rank, 2, "case 8 leaves one free direction");
                let (x, rank) = oracle(&h, true);
                assert_eq!(rank, 3);
                let m = stationary_multipliers(8, n, j0, None).unwrap();
                assert!((x[0] - m.lam1a).abs() < 1e-12);
                assert!(x[1].abs() < 1e-12);
                assert!((x[2] - m.lam2).abs() < 1e-12);

                for jbar in [0.2 * j0, 0.7 * j0] {
                    let p = CaseParams::optimal(7, n, j0, Some(jbar)).unwrap();
                    let h7 = case_hamiltonian(&p).unwrap();
                    let (x, rank) = oracle(&h7, true);
                    assert_eq!(rank, 3);
                    let m = stationary_multipliers(7, n, j0, Some(jbar)).unwrap();
                    assert!((x[0] - m.lam1a).abs() < 1e-12);
                    assert!((x[2] - m.lam2).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn multipliers_scale_with_j0() {
        let a = stationary_multipliers(8, 9, 1.0, None).unwrap();
        let b = stationary_multipliers(8, 9, 2.0, None).unwrap();
        assert!((b.lam1a - a.lam1a / 4.0).abs() < 1e-15);
        assert!((b.lam2 - a.lam2 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn perturbed_multipliers_fail() {
        let (sched, ms) = stationary_trajectory(8, 8, 1.0, None, 1000).unwrap();
        let m = ms[0];
        let scale = m.lambdas().iter().fold(0.0f64, |a, b| a.max(b.abs()));
        for k in 0..5 {
            let v = m.lambdas()[k];
            let dv = if v == 0.0 { 0.01 * scale } else { 0.01 * v };
            let p = m.with_lambda(k, v + dv);
            let r = qb_residuals(&sched, &vec![p; 1000], 8, 1.0).unwrap();
            assert!(r.max() > 1e-3, "multiplier {k}: {r:?}");
        }
    }

    #[test]
    fn interaction_frame_selects_commutator_order() {
        let n = 6;
        let h = Effective3::optimal(n, 1.0).unwrap();
        let m = stationary_multipliers(8, n, 1.0, None).unwrap();
        let t = case_minimum_time(8, n, 1.0, None).unwrap().unwrap();
        let ip = to_interaction_picture(&[(t, h)]).unwrap();
        let run = |k: usize, order| {
            let samples = ip.sampled(k);
            let segs = samples.iter().map(|(dt, e)| (*dt, e.to_sector())).collect();
            let sched = ControlSchedule::new(segs).unwrap();
            qb_residuals_with(&sched, &vec![m; k], n, 1.0, order).unwrap().qb
        };
        let (a, b) = (run(200, CommutatorOrder::HF), run(400, CommutatorOrder::HF));
        assert!(a < 1e-3 && a / b > 3.5, "{a} {b}");
        assert!(run(400, CommutatorOrder::FH) > 0.1);
    }

    #[test]
    fn table_times() {
        assert!((case_minimum_time(8, 8, 1.0, None).unwrap().unwrap() - PI / 4.0).abs() < 1e-15);
        assert!((case_minimum_time(7, 8, 1.0, Some(1.0)).unwrap().unwrap() - PI / 4.0).abs() < 1e-15);
        assert!((case_minimum_time(6, 11, 2.0, None).unwrap().unwrap() - PI / 4.0).abs() < 1e-15);
        for c in 1..=5 {
            assert_eq!(case_minimum_time(c, 8, 1.0, None).unwrap(), None);
        }
        assert!(matches!(case_minimum_time(7, 8, 1.0, Some(1.2)), Err(Error::ConstraintViolation(_))));
        assert!(matches!(case_minimum_time(9, 8, 1.0, None), Err(Error::UnsupportedCase(9))));
    }

    #[test]
    fn catalog_partitions_constraints() {
        let cat = case_catalog();
        assert_eq!(cat.len(), 8);
        for c in &cat {
            assert_eq!(c.zero_multipliers.len() + c.zero_slacks.len(), 3);
            for z in &c.zero_multipliers {
                assert!(!c.zero_slacks.contains(z));
            }
            assert_eq!(c.has_minimum, c.id >= 6);
        }
    }

    #[test]
    fn case_unitaries_at_zero_are_identity() {
        let kinds = [
            CaseKind::Six { phi: 0.7 },
            CaseKind::Seven { c1a: 1.3, j1n_bar: 0.4 },
            CaseKind::Four { c1a: 2.0, plus: false },
            CaseKind::Eight,
        ];
        for kind in kinds {
            let u = case_unitary(&CaseParams { n: 6, j0: 1.0, kind }, 0.0).unwrap();
            assert!(max_abs_diff(&u, &CMat::identity(3, 3)) < 1e-15);
        }
    }

    #[test]
    fn case6_transfers_at_its_minimum_time() {
        let p = CaseParams { n: 5, j0: 1.0, kind: CaseKind::Six { phi: 0.0 } };
        let u = case_unitary(&p, PI / 2.0).unwrap();
        assert!((u[(0, 2)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn case8_is_the_shifted_optimal_matrix() {
        let n = 8;
        let p = CaseParams { n, j0: 1.0, kind: CaseKind::Eight };
        let h = case_hamiltonian(&p).unwrap();
        assert_eq!(h, Effective3::optimal(n, 1.0).unwrap().shifted(3.0));
        let four = CaseParams { n, j0: 1.0, kind: CaseKind::Four { c1a: 3.0, plus: true } };
        assert_eq!(case_hamiltonian(&four).unwrap(), h);
        for t in [0.1, 0.5, PI / 4.0] {
            assert!(max_abs_diff(&case_unitary(&p, t).unwrap(), &case_unitary(&four, t).unwrap()) < 1e-13);
        }
    }

    #[test]
    fn boundary_form_only_at_minimum_time() {
        let params = [
            CaseParams::optimal(6, 5, 1.0, None).unwrap(),
            CaseParams::optimal(7, 5, 1.0, Some(0.5)).unwrap(),
            CaseParams::optimal(7, 9, 1.0, Some(1.0)).unwrap(),
            CaseParams::optimal(8, 9, 1.0, None).unwrap(),
        ];
        for p in params {
            let jbar = match p.kind {
                CaseKind::Seven { j1n_bar, .. } => Some(j1n_bar),
                _ => None,
            };
            let t_min = case_minimum_time(p.case_id(), p.n, p.j0, jbar).unwrap().unwrap();
            assert!(boundary_form_check(&case_unitary(&p, t_min).unwrap(), BOUNDARY_TOL).unwrap().valid);
            for k in 1..1000 {
                let t = t_min * k as f64 / 1000.0;
                let d = boundary_form_check(&case_unitary(&p, t).unwrap(), BOUNDARY_TOL).unwrap();
                assert!(!d.valid, "{p:?} at t = {t}");
            }
        }
    }

    #[test]
    fn lemma_examples() {
        let s = lemma_grid_scan(8f64.sqrt(), 0.0, 10).unwrap();
        assert_eq!(s.minimizer, 1);
        assert!((s.min_g - 1.0 / 8f64.sqrt()).abs() < 1e-15);
        let s = lemma_grid_scan(1.0, 1.0, 10).unwrap();
        assert_eq!(s.minimizer, 1);
        assert!((s.min_g - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(lemma_grid_scan(0.0, 1.0, 10).is_err());
    }

    proptest! {
        #[test]
        fn f_is_traceless_and_hermitian(v in proptest::collection::vec(-3.0f64..3.0, 11)) {
            let h = Effective3 {
                j1a: c64::new(v[0], v[1]), jan: c64::new(v[2], v[3]), j1n: c64::new(v[4], v[5]),
                ..Effective3::ZERO
            };
            let m = QBMultipliers { lam1: v[6], lam2: v[7], lam1a: v[8], laman: v[9], lam1n: v[10], ..Default::default() };
            let f = f_matrix(&m, &h);
            let tr = f[(0, 0)] + f[(1, 1)] + f[(2, 2)];
            prop_assert!(tr.norm() < 1e-14);
            prop_assert!(crate::linalg::hermiticity_defect(&f) == 0.0);
        }

        #[test]
        fn closed_forms_match_numeric_propagators(
            n in 3usize..30,
            j0 in 0.3f64..2.0,
            c in -5.0f64..5.0,
            frac in 0.0f64..1.0,
            phi in -3.0f64..3.0,
            plus in any::<bool>(),
            t in 0.0f64..4.0,
        ) {
            let kinds = [
                CaseKind::Six { phi },
                CaseKind::Seven { c1a: c, j1n_bar: frac * j0 },
                CaseKind::Four { c1a: c, plus },
                CaseKind::Eight,
            ];
            for kind in kinds {
                let p = CaseParams { n, j0, kind };
                let closed = case_unitary(&p, t).unwrap();
                let numeric = expm_hermitian(&case_hamiltonian(&p).unwrap().to_cmat(), t).unwrap();
                prop_assert!(max_abs_diff(&closed, &numeric) < 1e-10, "{:?}", kind);
                prop_assert!(unitarity_defect(&closed) < 1e-12);
            }
        }

        #[test]
        fn case7_time_decreases_toward_case8(n in 3usize..60, j0 in 0.2f64..3.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = (a.min(b) * j0, a.max(b) * j0);
            prop_assume!(hi - lo > 1e-9);
            let t_lo = case_minimum_time(7, n, j0, Some(lo)).unwrap().unwrap();
            let t_hi = case_minimum_time(7, n, j0, Some(hi)).unwrap().unwrap();
            prop_assert!(t_hi < t_lo);
            let t7 = case_minimum_time(7, n, j0, Some(j0)).unwrap().unwrap();
            let t8 = case_minimum_time(8, n, j0, None).unwrap().unwrap();
            prop_assert!((t7 - t8).abs() <= 1e-14 * t8);
            prop_assert!(t8 < case_minimum_time(6, n, j0, None).unwrap().unwrap());
        }

        #[test]
        fn lemma_minimizer_is_stable(q in 0.1f64..10.0, r in 0.0f64..10.0, x_max in 3u32..40) {
            let small = lemma_grid_scan(q, r, x_max).unwrap();
            let big = lemma_grid_scan(q, r, x_max + 25).unwrap();
            prop_assert_eq!(small.minimizer, big.minimizer);
            prop_assert_eq!(small.minimizer, 1);
        }
    }
}
