//! Numerical search for the shortest transfer time of the three-level model.
//!
//! Pulses are piecewise constant with equal segment lengths. Couplings obey
//! `|j1a|, |jan| <= sqrt(n-2) j0` and `|j1n| <= j0`; diagonals are boxed to
//! `|d| <= 2 n j0` so the search stays finite.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::effective3::Effective3;
use crate::error::{Error, Result};
use crate::linalg::{c64, expm3, mul3_vec, Mat3, ONE, ZERO};
use crate::propagator::ControlSchedule;
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseFamily {
    /// Complex couplings and three free diagonals per segment.
    General,
    /// Real couplings of either sign and three free diagonals.
    Real,
    /// `j1a = jan` real, `j1n` real, `d1 = dn = 0`, free `da`.
    RealSymmetric,
}

impl PulseFamily {
    fn width(self) -> usize {
        match self {
            PulseFamily::General => 9,
            PulseFamily::Real => 6,
            PulseFamily::RealSymmetric => 3,
        }
    }

    fn decode(self, x: &[f64]) -> Effective3 {
        match self {
            PulseFamily::General => Effective3 {
                j1a: c64::new(x[0], x[1]),
                jan: c64::new(x[2], x[3]),
                j1n: c64::new(x[4], x[5]),
                d1: x[6],
                da: x[7],
                dn: x[8],
            },
            PulseFamily::Real => Effective3 {
                j1a: c64::new(x[0], 0.0),
                jan: c64::new(x[1], 0.0),
                j1n: c64::new(x[2], 0.0),
                d1: x[3],
                da: x[4],
                dn: x[5],
            },
            PulseFamily::RealSymmetric => Effective3 {
                j1a: c64::new(x[0], 0.0),
                jan: c64::new(x[0], 0.0),
                j1n: c64::new(x[1], 0.0),
                d1: 0.0,
                da: x[2],
                dn: 0.0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PulseParams {
    pub n: usize,
    pub j0: f64,
    pub total_time: f64,
    pub segments: Vec<Effective3>,
    /// Magnitude bounds on `(j1a, jan, j1n)`.
    pub bounds: [f64; 3],
    pub diag_bound: f64,
}

fn clip(z: c64, bound: f64) -> c64 {
    let r = z.norm();
    if r <= bound {
        return z;
    }
    let mut w = z * (bound / r);
    while w.norm() > bound {
        w *= 1.0 - f64::EPSILON;
    }
    w
}

impl PulseParams {
    pub fn new(n: usize, j0: f64, total_time: f64, segments: Vec<Effective3>) -> Self {
        let b = ((n - 2) as f64).sqrt() * j0;
        Self { n, j0, total_time, segments, bounds: [b, b, j0], diag_bound: 2.0 * n as f64 * j0 }
    }

    pub fn n_segments(&self) -> usize {
        self.segments.len()
    }

    /// Radial clipping of each coupling onto its disc, diagonals onto the box.
    pub fn projected(&self) -> Self {
        let [ba, bn, b1n] = self.bounds;
        let d = self.diag_bound;
        let segments = self
            .segments
            .iter()
            .map(|s| Effective3 {
                j1a: clip(s.j1a, ba),
                jan: clip(s.jan, bn),
                j1n: clip(s.j1n, b1n),
                d1: s.d1.clamp(-d, d),
                da: s.da.clamp(-d, d),
                dn: s.dn.clamp(-d, d),
            })
            .collect();
        Self { segments, ..self.clone() }
    }

    pub fn within_bounds(&self) -> bool {
        let tol = 1.0 + 1e-12;
        self.segments.iter().all(|s| {
            s.j1a.norm() <= self.bounds[0] * tol
                && s.jan.norm() <= self.bounds[1] * tol
                && s.j1n.norm() <= self.bounds[2] * tol
                && s.diagonal().iter().all(|d| d.abs() <= self.diag_bound * tol)
        })
    }

    fn touches_bound(&self) -> bool {
        let near = 1.0 - 1e-9;
        self.segments.iter().any(|s| {
            s.j1a.norm() >= self.bounds[0] * near
                || s.jan.norm() >= self.bounds[1] * near
                || s.j1n.norm() >= self.bounds[2] * near
        })
    }

    pub fn segment_duration(&self) -> f64 {
        self.total_time / self.segments.len() as f64
    }

    /// Schedule for the general propagator; needs `total_time > 0`.
    pub fn schedule(&self) -> Result<ControlSchedule> {
        let dt = self.segment_duration();
        ControlSchedule::new(self.segments.iter().map(|s| (dt, s.to_sector())).collect())
    }

    /// `|<3| U |1>|` through the closed 3x3 exponentials.
    pub fn fidelity(&self) -> f64 {
        if self.total_time == 0.0 {
            return 0.0;
        }
        let dt = self.segment_duration();
        let mut psi = [ONE, ZERO, ZERO];
        for s in &self.segments {
            psi = mul3_vec(&expm3(&s.matrix(), dt), &psi);
        }
        psi[2].norm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub best_fidelity: f64,
    pub best_pulse: PulseParams,
    pub evaluations: u64,
    pub seed: u64,
    /// Final fidelity of every restart, by restart index.
    pub restart_fidelities: Vec<f64>,
    pub restarts_hit_bound: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub n_segments: usize,
    pub restarts: usize,
    pub seed: u64,
    pub family: PulseFamily,
    pub max_iters: usize,
    /// A restart stops as soon as it reaches this fidelity.
    pub stop_at: Option<f64>,
}

impl OptimizerConfig {
    pub fn new(n_segments: usize, restarts: usize, seed: u64) -> Self {
        Self { n_segments, restarts, seed, family: PulseFamily::General, max_iters: 400, stop_at: None }
    }
}

/// Projected gradient ascent over general pulses.
pub fn optimize_pulse(
    n: usize,
    j0: f64,
    total_time: f64,
    n_segments: usize,
    restarts: usize,
    seed: u64,
) -> Result<SearchResult> {
    optimize_pulse_with(n, j0, total_time, &OptimizerConfig::new(n_segments, restarts, seed))
}

struct Problem {
    family: PulseFamily,
    segments: usize,
    dt: f64,
    bounds: [f64; 3],
    diag_bound: f64,
    evaluations: u64,
}

impl Problem {
    fn width(&self) -> usize {
        self.family.width()
    }

    fn project(&self, x: &mut [f64]) {
        let d = self.diag_bound;
        let [ba, bn, b1n] = self.bounds;
        for seg in x.chunks_mut(self.width()) {
            match self.family {
                PulseFamily::General => {
                    for (k, b) in [(0, ba), (2, bn), (4, b1n)] {
                        let z = clip(c64::new(seg[k], seg[k + 1]), b);
                        seg[k] = z.re;
                        seg[k + 1] = z.im;
                    }
                    for v in &mut seg[6..9] {
                        *v = v.clamp(-d, d);
                    }
                }
                PulseFamily::Real => {
                    for (k, b) in [(0, ba), (1, bn), (2, b1n)] {
                        seg[k] = seg[k].clamp(-b, b);
                    }
                    for v in &mut seg[3..6] {
                        *v = v.clamp(-d, d);
                    }
                }
                PulseFamily::RealSymmetric => {
                    seg[0] = seg[0].clamp(-ba.min(bn), ba.min(bn));
                    seg[1] = seg[1].clamp(-b1n, b1n);
                    seg[2] = seg[2].clamp(-d, d);
                }
            }
        }
    }

    fn propagators(&self, x: &[f64]) -> Vec<Mat3> {
        x.chunks(self.width()).map(|seg| expm3(&self.family.decode(seg).matrix(), self.dt)).collect()
    }

    /// `|<3|U|1>|^2`.
    fn objective(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        let mut psi = [ONE, ZERO, ZERO];
        for u in self.propagators(x) {
            psi = mul3_vec(&u, &psi);
        }
        psi[2].norm_sqr()
    }

    /// Central differences, each reusing the products on either side of the
    /// perturbed segment.
    fn gradient(&mut self, x: &[f64]) -> Vec<f64> {
        let w = self.width();
        let us = self.propagators(x);
        // fwd[k] = U_{k-1} ... U_0 |1>, bwd[k] = <3| U_{S-1} ... U_{k+1}.
        let mut fwd = Vec::with_capacity(self.segments);
        let mut psi = [ONE, ZERO, ZERO];
        for u in &us {
            fwd.push(psi);
            psi = mul3_vec(u, &psi);
        }
        let mut bwd = vec![[ZERO; 3]; self.segments];
        let mut row = [ZERO, ZERO, ONE];
        for k in (0..self.segments).rev() {
            bwd[k] = row;
            let u = &us[k];
            row = [
                row[0] * u[0][0] + row[1] * u[1][0] + row[2] * u[2][0],
                row[0] * u[0][1] + row[1] * u[1][1] + row[2] * u[2][1],
                row[0] * u[0][2] + row[1] * u[1][2] + row[2] * u[2][2],
            ];
        }
        let mut g = vec![0.0; x.len()];
        let mut seg = vec![0.0; w];
        for k in 0..self.segments {
            seg.copy_from_slice(&x[k * w..(k + 1) * w]);
            for p in 0..w {
                let x0 = seg[p];
                let h = 1e-6 * x0.abs().max(1.0);
                let mut f = [0.0; 2];
                for (slot, s) in [1.0, -1.0].into_iter().enumerate() {
                    seg[p] = x0 + s * h;
                    let u = expm3(&self.family.decode(&seg).matrix(), self.dt);
                    let v = mul3_vec(&u, &fwd[k]);
                    let amp = bwd[k][0] * v[0] + bwd[k][1] * v[1] + bwd[k][2] * v[2];
                    f[slot] = amp.norm_sqr();
                }
                self.evaluations += 2;
                seg[p] = x0;
                g[k * w + p] = (f[0] - f[1]) / (2.0 * h);
            }
        }
        g
    }

    fn initial(&self, rng: &mut Stream) -> Vec<f64> {
        let [ba, bn, b1n] = self.bounds;
        let half = 0.5 * self.diag_bound;
        let mut x = Vec::with_capacity(self.segments * self.width());
        for _ in 0..self.segments {
            match self.family {
                PulseFamily::General => {
                    for b in [ba, bn, b1n] {
                        let r = b * rng.uniform();
                        let t = TAU * rng.uniform();
                        x.push(r * t.cos());
                        x.push(r * t.sin());
                    }
                    for _ in 0..3 {
                        x.push(rng.uniform_in(-half, half));
                    }
                }
                PulseFamily::Real => {
                    for b in [ba, bn, b1n] {
                        x.push(rng.uniform_in(-b, b));
                    }
                    for _ in 0..3 {
                        x.push(rng.uniform_in(-half, half));
                    }
                }
                PulseFamily::RealSymmetric => {
                    let b = ba.min(bn);
                    x.push(rng.uniform_in(-b, b));
                    x.push(rng.uniform_in(-b1n, b1n));
                    x.push(rng.uniform_in(-half, half));
                }
            }
        }
        x
    }

    fn coordinate_search(&mut self, x: &mut [f64], f: &mut f64) -> bool {
        let mut improved = false;
        let mut step = 1e-2 * self.bounds[0].max(1.0);
        while step > 1e-10 {
            let mut moved = false;
            for p in 0..x.len() {
                for s in [1.0, -1.0] {
                    let mut y = x.to_vec();
                    y[p] += s * step;
                    self.project(&mut y);
                    let fy = self.objective(&y);
                    if fy > *f {
                        x.copy_from_slice(&y);
                        *f = fy;
                        moved = true;
                        improved = true;
                        break;
                    }
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        improved
    }

    fn ascend(&mut self, mut x: Vec<f64>, max_iters: usize, stop: f64) -> (Vec<f64>, f64) {
        self.project(&mut x);
        let mut f = self.objective(&x);
        let mut alpha = 1.0;
        let mut stalled = 0;
        for _ in 0..max_iters {
            if f >= stop {
                break;
            }
            let g = self.gradient(&x);
            let mut accepted = false;
            while alpha > 1e-14 {
                let mut y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + alpha * b).collect();
                self.project(&mut y);
                let gain: f64 = g.iter().zip(y.iter().zip(&x)).map(|(gi, (yi, xi))| gi * (yi - xi)).sum();
                let fy = self.objective(&y);
                if gain > 0.0 && fy >= f + 1e-4 * gain {
                    stalled = if fy - f < 1e-14 { stalled + 1 } else { 0 };
                    x = y;
                    f = fy;
                    accepted = true;
                    alpha *= 2.0;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted || stalled >= 10 {
                if !self.coordinate_search(&mut x, &mut f) {
                    break;
                }
                alpha = 1.0;
                stalled = 0;
            }
        }
        (x, f)
    }
}

pub fn optimize_pulse_with(n: usize, j0: f64, total_time: f64, cfg: &OptimizerConfig) -> Result<SearchResult> {
    if n < 3 {
        return Err(Error::InvalidSize(format!("need n >= 3, got {n}")));
    }
    if cfg.n_segments == 0 || cfg.restarts == 0 {
        return Err(Error::Domain("need at least one segment and one restart".into()));
    }
    if !(j0 > 0.0 && j0.is_finite()) || !(total_time >= 0.0 && total_time.is_finite()) {
        return Err(Error::Domain(format!("invalid j0 = {j0} or time = {total_time}")));
    }
    let template = PulseParams::new(n, j0, total_time, vec![Effective3::ZERO; cfg.n_segments]);
    let problem = || Problem {
        family: cfg.family,
        segments: cfg.n_segments,
        dt: template.segment_duration(),
        bounds: template.bounds,
        diag_bound: template.diag_bound,
        evaluations: 0,
    };
    let stop = cfg.stop_at.map_or(1.0 - 1e-15, |s| s * s);
    let runs: Vec<(Vec<f64>, f64, u64)> = (0..cfg.restarts as u64)
        .into_par_iter()
        .map(|r| {
            let mut p = problem();
            let mut rng = Stream::derived(cfg.seed, r);
            let x0 = p.initial(&mut rng);
            let (x, f) = if total_time == 0.0 { (x0, 0.0) } else { p.ascend(x0, cfg.max_iters, stop) };
            (x, f, p.evaluations)
        })
        .collect();

    let w = cfg.family.width();
    let pulses: Vec<PulseParams> = runs
        .iter()
        .map(|(x, _, _)| {
            let segs = x.chunks(w).map(|s| cfg.family.decode(s)).collect();
            PulseParams { segments: segs, ..template.clone() }
        })
        .collect();
    let restart_fidelities: Vec<f64> = pulses.iter().map(|p| p.fidelity()).collect();
    let mut best = 0;
    for (k, f) in restart_fidelities.iter().enumerate() {
        if *f > restart_fidelities[best] {
            best = k;
        }
    }
    Ok(SearchResult {
        best_fidelity: restart_fidelities[best],
        best_pulse: pulses[best].clone(),
        evaluations: runs.iter().map(|r| r.2).sum(),
        seed: cfg.seed,
        restarts_hit_bound: pulses.iter().filter(|p| p.touches_bound()).count(),
        restart_fidelities,
    })
}

/// `pi / (j0 sqrt(2n))`.
pub fn analytic_min_time(n: usize, j0: f64) -> f64 {
    PI / (j0 * (2.0 * n as f64).sqrt())
}

/// One optimizer call made by the bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionSample {
    #[serde(rename = "T")]
    pub t: f64,
    pub best_fidelity: f64,
    pub evaluations: u64,
    pub restarts_hit_bound: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BisectionResult {
    /// Smallest sampled time meeting the target; `None` if even the upper
    /// end of the bracket failed.
    pub t_star: Option<f64>,
    pub target: f64,
    /// Sorted by time.
    pub samples: Vec<BisectionSample>,
    /// A shorter time succeeded where a longer one failed.
    pub non_monotonic: bool,
}

/// Bisects on `[0, 2 pi / (j0 sqrt(2n))]` for the shortest time whose
/// optimized fidelity reaches `fid_target`.
pub fn min_time_bisection(
    n: usize,
    j0: f64,
    fid_target: f64,
    time_tol: f64,
    cfg: &OptimizerConfig,
) -> Result<BisectionResult> {
    if !(fid_target < 1.0) || fid_target.is_nan() {
        return Err(Error::Domain(format!("target fidelity must be below 1, got {fid_target}")));
    }
    if !(time_tol > 0.0) {
        return Err(Error::Domain(format!("time tolerance must be positive, got {time_tol}")));
    }
    let cfg = OptimizerConfig { stop_at: Some(fid_target), ..*cfg };
    let mut samples = Vec::new();
    let probe = |t: f64, samples: &mut Vec<BisectionSample>| -> Result<bool> {
        let r = optimize_pulse_with(n, j0, t, &cfg)?;
        samples.push(BisectionSample {
            t,
            best_fidelity: r.best_fidelity,
            evaluations: r.evaluations,
            restarts_hit_bound: r.restarts_hit_bound,
        });
        Ok(r.best_fidelity >= fid_target)
    };

    let mut lo = 0.0;
    let mut hi = 2.0 * analytic_min_time(n, j0);
    let t_star = if probe(lo, &mut samples)? {
        Some(0.0)
    } else if !probe(hi, &mut samples)? {
        None
    } else {
        while hi - lo > time_tol {
            let mid = 0.5 * (lo + hi);
            if probe(mid, &mut samples)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    };

    samples.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut non_monotonic = false;
    let mut seen_success = false;
    for s in &samples {
        let ok = s.best_fidelity >= fid_target;
        if seen_success && !ok {
            non_monotonic = true;
        }
        seen_success |= ok;
    }
    Ok(BisectionResult { t_star, target: fid_target, samples, non_monotonic })
}

/// CSV with columns `T,best_fidelity,evaluations,restarts_hit_bound`.
pub fn bisection_csv_string(samples: &[BisectionSample]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in samples {
        w.serialize(s).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
}
