//! Static coefficient disorder on the optimal Hamiltonians.
//!
//! Every unordered pair gets an independent Gaussian flip-flop error of width
//! `sigma_c` and the two end fields get errors of width `sigma_f`. Trials run
//! in the single-excitation sector; trial `k` draws from stream `(seed, k)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{basis_vector, c64, inner, CMat, HermitianEigen, ZERO};
use crate::rng::Stream;
use crate::spin_model::{build_h_opt, build_h_opt_prime, project_single_excitation, SectorMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianKind {
    Opt,
    OptPrime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub n: usize,
    pub j0: f64,
    pub sigma_c: f64,
    pub sigma_f: f64,
    pub trials: usize,
    pub seed: u64,
    pub hamiltonian: HamiltonianKind,
}

impl NoiseConfig {
    pub fn new(n: usize, sigma_c: f64, sigma_f: f64, trials: usize, seed: u64) -> Self {
        Self { n, j0: 1.0, sigma_c, sigma_f, trials, seed, hamiltonian: HamiltonianKind::Opt }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidSize(format!("need n >= 3, got {}", self.n)));
        }
        if !(self.j0 > 0.0 && self.j0.is_finite()) {
            return Err(Error::Domain(format!("j0 must be positive, got {}", self.j0)));
        }
        if !(self.sigma_c >= 0.0 && self.sigma_f >= 0.0 && self.sigma_c.is_finite() && self.sigma_f.is_finite()) {
            return Err(Error::Domain("noise widths must be finite and nonnegative".into()));
        }
        if self.trials == 0 {
            return Err(Error::Domain("need at least one trial".into()));
        }
        Ok(())
    }

    /// Optimal transfer time `pi / (j0 sqrt(2n))`.
    pub fn transfer_time(&self) -> f64 {
        PI / (self.j0 * (2.0 * self.n as f64).sqrt())
    }
}

/// Noiseless single-excitation matrix of the configured Hamiltonian.
pub fn base_matrix(cfg: &NoiseConfig) -> Result<SectorMatrix> {
    cfg.validate()?;
    let model = match cfg.hamiltonian {
        HamiltonianKind::Opt => build_h_opt(cfg.n, cfg.j0)?,
        HamiltonianKind::OptPrime => build_h_opt_prime(cfg.n, cfg.j0)?,
    };
    Ok(project_single_excitation(&model))
}

/// Adds one disorder draw to `base`. Pairs are drawn in lexicographic order,
/// then the two end fields; draws happen even when a width is zero so that
/// streams stay aligned across configurations.
pub fn perturb(base: &SectorMatrix, cfg: &NoiseConfig, rng: &mut Stream) -> SectorMatrix {
    let n = base.dim();
    let mut h = base.entries().clone();
    for i in 0..n {
        for j in i + 1..n {
            let e = cfg.sigma_c * rng.gaussian();
            h[(i, j)] += c64::new(e, 0.0);
            h[(j, i)] += c64::new(e, 0.0);
        }
    }
    let e1 = cfg.sigma_f * rng.gaussian();
    let en = cfg.sigma_f * rng.gaussian();
    // Z_1 and Z_n are -1 on their own excitation and +1 elsewhere.
    for k in 0..n {
        let z1 = if k == 0 { -1.0 } else { 1.0 };
        let zn = if k == n - 1 { -1.0 } else { 1.0 };
        h[(k, k)] += c64::new(e1 * z1 + en * zn, 0.0);
    }
    SectorMatrix::new(h, base.basis(), base.vacuum_phase_rate() + e1 + en).expect("perturbation keeps Hermiticity")
}

pub fn sample_noisy_hamiltonian(cfg: &NoiseConfig, rng: &mut Stream) -> Result<SectorMatrix> {
    Ok(perturb(&base_matrix(cfg)?, cfg, rng))
}

/// `<phi1| exp(i base t) exp(-i noisy t) |phi1>`.
pub fn trial_fidelity(noisy: &SectorMatrix, base: &SectorMatrix, t: f64) -> Result<c64> {
    if noisy.dim() != base.dim() {
        return Err(Error::ContractViolation(format!(
            "noisy matrix is {}-dimensional, base is {}",
            noisy.dim(),
            base.dim()
        )));
    }
    let phi1 = basis_vector(base.dim(), 0);
    let reference = HermitianEigen::new(base.entries())?.apply(t, &phi1);
    overlap_with(&reference, noisy, t)
}

fn overlap_with(reference: &[c64], noisy: &SectorMatrix, t: f64) -> Result<c64> {
    let phi1 = basis_vector(noisy.dim(), 0);
    let evolved = HermitianEigen::new(noisy.entries())?.apply(t, &phi1);
    Ok(inner(reference, &evolved))
}

/// Ways of turning a complex overlap `F` into an infidelity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Infidelity {
    /// `|1 - F|`
    Overlap,
    /// `1 - |F|`
    Modulus,
    /// `1 - Re F`
    Real,
    /// `1 - |F|^2`
    Squared,
}

impl Infidelity {
    pub const ALL: [Infidelity; 4] = [Infidelity::Overlap, Infidelity::Modulus, Infidelity::Real, Infidelity::Squared];

    pub fn of(&self, f: c64) -> f64 {
        match self {
            Infidelity::Overlap => (c64::new(1.0, 0.0) - f).norm(),
            Infidelity::Modulus => 1.0 - f.norm(),
            Infidelity::Real => 1.0 - f.re,
            Infidelity::Squared => 1.0 - f.norm_sqr(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Infidelity::Overlap => "overlap",
            Infidelity::Modulus => "modulus",
            Infidelity::Real => "real",
            Infidelity::Squared => "squared",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown infidelity measure '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseTrialStats {
    pub mean_infidelity: f64,
    pub std_error: f64,
    pub trials: usize,
    pub seed: u64,
    pub infidelity_definition: Infidelity,
}

/// Complex overlaps of every trial, in trial order.
pub fn run_trials(cfg: &NoiseConfig) -> Result<Vec<c64>> {
    let base = base_matrix(cfg)?;
    let t = cfg.transfer_time();
    let reference = HermitianEigen::new(base.entries())?.apply(t, &basis_vector(cfg.n, 0));
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = Stream::derived(cfg.seed, k);
            overlap_with(&reference, &perturb(&base, cfg, &mut rng), t)
        })
        .collect()
}

/// Mean and standard error of `measure` over the overlaps, summed in order.
pub fn summarize(overlaps: &[c64], measure: Infidelity, seed: u64) -> NoiseTrialStats {
    let k = overlaps.len();
    let xs: Vec<f64> = overlaps.iter().map(|f| measure.of(*f)).collect();
    let mean = xs.iter().sum::<f64>() / k as f64;
    let std_error = if k > 1 {
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1) as f64;
        (var / k as f64).sqrt()
    } else {
        0.0
    };
    NoiseTrialStats { mean_infidelity: mean, std_error, trials: k, seed, infidelity_definition: measure }
}

/// Ensemble statistics of `1 - |F|`.
pub fn run_mc(cfg: &NoiseConfig) -> Result<NoiseTrialStats> {
    run_mc_with(cfg, Infidelity::Modulus)
}

pub fn run_mc_with(cfg: &NoiseConfig, measure: Infidelity) -> Result<NoiseTrialStats> {
    Ok(summarize(&run_trials(cfg)?, measure, cfg.seed))
}

/// Statistics for every measure from a single set of trials.
pub fn run_mc_all(cfg: &NoiseConfig) -> Result<Vec<NoiseTrialStats>> {
    let f = run_trials(cfg)?;
    Ok(Infidelity::ALL.iter().map(|m| summarize(&f, *m, cfg.seed)).collect())
}

/// `|(eps1 - epsN) t|` at the optimal time.
pub fn first_order_infidelity(eps1: f64, eps_n: f64, n: usize, j0: f64) -> f64 {
    ((eps1 - eps_n) * PI / (j0 * (2.0 * n as f64).sqrt())).abs()
}

/// First-order Dyson phase `int_0^t <psi(s)| V |psi(s)> ds` with
/// `psi(s) = exp(-i base s) |phi1>`. To this order `F = exp(-i theta)`.
pub fn first_order_phase(base: &SectorMatrix, perturbation: &CMat, t: f64) -> Result<f64> {
    let n = base.dim();
    if perturbation.nrows() != n || perturbation.ncols() != n {
        return Err(Error::ContractViolation("perturbation does not match the base dimension".into()));
    }
    let eig = HermitianEigen::new(base.entries())?;
    let v = eig.vectors();
    let e = eig.values();
    // Coefficients of phi1 and V in the eigenbasis.
    let c: Vec<c64> = (0..n).map(|k| v[(0, k)].conj()).collect();
    let vk = &(&crate::linalg::adjoint(&v) * perturbation) * &v;
    let mut theta = ZERO;
    for k in 0..n {
        for l in 0..n {
            let w = e[k] - e[l];
            let integral = if (w * t).abs() < 1e-12 {
                c64::new(t, 0.0)
            } else {
                (c64::new((w * t).cos(), (w * t).sin()) - 1.0) / c64::new(0.0, w)
            };
            theta += c[k].conj() * vk[(k, l)] * c[l] * integral;
        }
    }
    Ok(theta.re)
}

/// Diagonal perturbation produced by end-field errors `eps1`, `epsN`.
pub fn field_perturbation(n: usize, eps1: f64, eps_n: f64) -> CMat {
    CMat::from_fn(n, n, |i, j| {
        if i != j {
            ZERO
        } else {
            let z1 = if i == 0 { -1.0 } else { 1.0 };
            let zn = if i == n - 1 { -1.0 } else { 1.0 };
            c64::new(eps1 * z1 + eps_n * zn, 0.0)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    Power,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fit {
    pub model: FitModel,
    /// `[exponent, prefactor]` for a power law, `[slope, intercept]` for a line.
    pub params: [f64; 2],
    pub r2: f64,
    /// Every abscissa equal; slope undefined.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

fn ols(points: &[(f64, f64)]) -> (f64, f64, f64, bool) {
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= f64::EPSILON * points.iter().map(|p| p.0 * p.0).sum::<f64>() {
        return (f64::NAN, my, f64::NAN, true);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    (slope, intercept, r2, false)
}

/// Least squares for `y = prefactor * x^exponent` in log-log coordinates.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<Fit> {
    if points.len() < 3 {
        return Err(Error::Domain(format!("need at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|p| !(p.0 > 0.0 && p.1 > 0.0) || !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::Domain("power-law fit needs positive finite data".into()));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|p| (p.0.ln(), p.1.ln())).collect();
    let (b, a, r2, degenerate) = ols(&logs);
    Ok(Fit { model: FitModel::Power, params: [b, a.exp()], r2, degenerate })
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn fit_linear(points: &[(f64, f64)]) -> Result<Fit> {
    if points.len() < 3 {
        return Err(Error::Domain(format!("need at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::Domain("linear fit needs finite data".into()));
    }
    let (slope, intercept, r2, degenerate) = ols(points);
    Ok(Fit { model: FitModel::Linear, params: [slope, intercept], r2, degenerate })
}

/// One line of a sweep CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub sigma_c: f64,
    pub sigma_f: f64,
    pub trials: usize,
    pub seed: u64,
    pub mean_infidelity: f64,
    pub std_error: f64,
}

impl SweepRow {
    pub fn new(cfg: &NoiseConfig, stats: &NoiseTrialStats) -> Self {
        Self {
            n: cfg.n,
            sigma_c: cfg.sigma_c,
            sigma_f: cfg.sigma_f,
            trials: stats.trials,
            seed: stats.seed,
            mean_infidelity: stats.mean_infidelity,
            std_error: stats.std_error,
        }
    }
}

const SWEEP_HEADER: [&str; 7] = ["n", "sigma_c", "sigma_f", "trials", "seed", "mean_infidelity", "std_error"];

pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(())
}

pub fn sweep_csv_string(rows: &[SweepRow]) -> String {
    let mut buf = Vec::new();
    write_sweep_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

/// Parses a sweep CSV with the exact header
/// `n,sigma_c,sigma_f,trials,seed,mean_infidelity,std_error`.
pub fn read_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != SWEEP_HEADER {
        return Err(Error::Parse(format!("unexpected sweep header: {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        let row: SweepRow = rec?;
        let finite = [row.sigma_c, row.sigma_f, row.mean_infidelity, row.std_error].iter().all(|x| x.is_finite());
        if !finite || row.sigma_c < 0.0 || row.sigma_f < 0.0 || row.std_error < 0.0 || row.trials == 0 {
            return Err(Error::Parse(format!("invalid sweep row {row:?}")));
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_noise_is_exact() {
        let cfg = NoiseConfig::new(12, 0.0, 0.0, 5, 9);
        let base = base_matrix(&cfg).unwrap();
        let mut rng = Stream::new(1);
        let noisy = perturb(&base, &cfg, &mut rng);
        assert_eq!(noisy.entries(), base.entries());
        let s = run_mc(&cfg).unwrap();
        assert!(s.mean_infidelity.abs() < 1e-13);
        assert!(s.std_error < 1e-13);
        for m in Infidelity::ALL {
            assert!(run_mc_with(&cfg, m).unwrap().mean_infidelity.abs() < 1e-13);
        }
    }

    #[test]
    fn coupling_noise_leaves_diagonal() {
        let cfg = NoiseConfig::new(9, 0.3, 0.0, 1, 0);
        let base = base_matrix(&cfg).unwrap();
        let noisy = perturb(&base, &cfg, &mut Stream::new(5));
        for k in 0..9 {
            assert_eq!(noisy.entries()[(k, k)], base.entries()[(k, k)]);
        }
        assert!(crate::linalg::max_abs_diff(noisy.entries(), base.entries()) > 0.0);
        assert_eq!(crate::linalg::hermiticity_defect(noisy.entries()), 0.0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = NoiseConfig::new(7, 0.1, 0.2, 3, 77);
        let a = sample_noisy_hamiltonian(&cfg, &mut Stream::derived(77, 2)).unwrap();
        let b = sample_noisy_hamiltonian(&cfg, &mut Stream::derived(77, 2)).unwrap();
        assert_eq!(a, b);
        assert_eq!(run_trials(&cfg).unwrap(), run_trials(&cfg).unwrap());
    }

    #[test]
    fn fidelity_of_base_and_shift() {
        let cfg = NoiseConfig::new(10, 0.0, 0.0, 1, 0);
        let base = base_matrix(&cfg).unwrap();
        let t = cfg.transfer_time();
        let f = trial_fidelity(&base, &base, t).unwrap();
        assert!((f - c64::new(1.0, 0.0)).norm() < 1e-14);
        let f = trial_fidelity(&base.shifted(0.37), &base, t).unwrap();
        assert!((f.norm() - 1.0).abs() < 1e-14);
        let small = base_matrix(&NoiseConfig::new(5, 0.0, 0.0, 1, 0)).unwrap();
        assert!(matches!(trial_fidelity(&small, &base, t), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn field_noise_single_trial_order_of_magnitude() {
        let cfg = NoiseConfig::new(100, 0.0, 0.1, 1, 2024);
        let f = run_trials(&cfg).unwrap()[0];
        let inf = Infidelity::Overlap.of(f);
        assert!(inf > 1e-4 && inf < 0.1, "{inf}");
        assert!(Infidelity::Modulus.of(f) < inf);
    }

    #[test]
    fn first_order_formula() {
        assert_eq!(first_order_infidelity(0.3, 0.3, 100, 1.0), 0.0);
        let v = first_order_infidelity(0.1, -0.1, 100, 1.0);
        assert!((v - 0.2 * PI / 200f64.sqrt()).abs() < 1e-15);
        assert!((v - 0.0444288).abs() < 1e-7);
    }

    #[test]
    fn first_order_phase_tracks_exact_overlap() {
        let cfg = NoiseConfig::new(40, 0.0, 0.0, 1, 0);
        let base = base_matrix(&cfg).unwrap();
        let t = cfg.transfer_time();
        let (e1, en) = (0.004, -0.003);
        let v = field_perturbation(40, e1, en);
        let noisy = SectorMatrix::new(base.entries() + &v, base.basis(), 0.0).unwrap();
        let f = trial_fidelity(&noisy, &base, t).unwrap();
        let theta = first_order_phase(&base, &v, t).unwrap();
        let exact = Infidelity::Overlap.of(f);
        assert!((exact - theta.abs()).abs() < 1e-3 * exact, "{exact} {theta}");
    }

    #[test]
    fn infidelity_measures() {
        let f = c64::new(0.6, 0.8);
        assert!((Infidelity::Overlap.of(f) - (0.16f64 + 0.64).sqrt()).abs() < 1e-15);
        assert!(Infidelity::Modulus.of(f).abs() < 1e-15);
        assert!((Infidelity::Real.of(f) - 0.4).abs() < 1e-15);
        assert!(Infidelity::Squared.of(f).abs() < 1e-15);
        for m in Infidelity::ALL {
            assert_eq!(Infidelity::parse(m.name()).unwrap(), m);
        }
        assert!(Infidelity::parse("fidelity").is_err());
    }

    #[test]
    fn fits_on_synthetic_data() {
        let pts: Vec<(f64, f64)> = [10.0, 20.0, 40.0, 80.0].iter().map(|&n: &f64| (n, 3.0 * n.powf(-0.5))).collect();
        let f = fit_power_law(&pts).unwrap();
        assert!((f.params[0] + 0.5).abs() < 1e-12);
        assert!((f.params[1] - 3.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);

        let flat = fit_power_law(&[(1.0, 2.0), (2.0, 2.0), (3.0, 2.0)]).unwrap();
        assert!(flat.params[0].abs() < 1e-12);

        let line = fit_linear(&[(0.1, 0.2), (0.2, 0.4), (0.3, 0.6)]).unwrap();
        assert!((line.params[0] - 2.0).abs() < 1e-12);
        assert!(line.params[1].abs() < 1e-12);
        assert!((line.r2 - 1.0).abs() < 1e-12);

        let degenerate = fit_linear(&[(0.5, 0.1), (0.5, 0.2), (0.5, 0.3)]).unwrap();
        assert!(degenerate.degenerate);

        assert!(matches!(fit_power_law(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]), Err(Error::Domain(_))));
        assert!(matches!(fit_linear(&[(1.0, 1.0), (2.0, 0.0)]), Err(Error::Domain(_))));
    }

    #[test]
    fn fit_json_shape() {
        let f = fit_linear(&[(0.1, 0.2), (0.2, 0.4), (0.3, 0.6)]).unwrap();
        let v: serde_json::Value = serde_json::to_value(f).unwrap();
        assert_eq!(v["model"], "linear");
        assert_eq!(v["params"].as_array().unwrap().len(), 2);
        assert!(v.get("degenerate").is_none());
    }

    #[test]
    fn sweep_csv_round_trip() {
        let rows = vec![
            SweepRow { n: 25, sigma_c: 0.1, sigma_f: 0.0, trials: 100, seed: 1, mean_infidelity: 0.015, std_error: 0.001 },
            SweepRow { n: 50, sigma_c: 0.1, sigma_f: 0.0, trials: 100, seed: 1, mean_infidelity: 0.011, std_error: 0.0008 },
        ];
        let text = sweep_csv_string(&rows);
        assert!(text.starts_with("n,sigma_c,sigma_f,trials,seed,mean_infidelity,std_error\n"));
        assert_eq!(read_sweep_csv(&text).unwrap(), rows);
        assert!(read_sweep_csv("a,b\n1,2\n").is_err());
        assert!(read_sweep_csv("n,sigma_c,sigma_f,trials,seed,mean_infidelity,std_error\n5,-1,0,1,1,0,0\n").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn overlaps_bounded_and_shift_invariant(n in 3usize..30, sc in 0.0f64..0.5, sf in 0.0f64..0.5, seed in any::<u64>(), shift in -3.0f64..3.0) {
            let cfg = NoiseConfig::new(n, sc, sf, 1, seed);
            let base = base_matrix(&cfg).unwrap();
            let noisy = perturb(&base, &cfg, &mut Stream::derived(seed, 0));
            let t = cfg.transfer_time();
            let f = trial_fidelity(&noisy, &base, t).unwrap();
            prop_assert!(f.norm() <= 1.0 + 1e-12);
            let g = trial_fidelity(&noisy.shifted(shift), &base, t).unwrap();
            prop_assert!((Infidelity::Modulus.of(f) - Infidelity::Modulus.of(g)).abs() <= 1e-12);
        }

        #[test]
        fn power_fit_recovers_exponent(b in -2.0f64..2.0, a in 0.1f64..10.0) {
            let pts: Vec<(f64, f64)> = (1..6).map(|k| { let x = 5.0 * k as f64; (x, a * x.powf(b)) }).collect();
            let f = fit_power_law(&pts).unwrap();
            prop_assert!((f.params[0] - b).abs() < 1e-10);
            prop_assert!((f.params[1] - a).abs() < 1e-9 * a);
        }
    }
}
