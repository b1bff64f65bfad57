//! Logical error rates of surface-code patches under transversal operation.
//!
//! Per qubit and SE round the logical error is `C * (sum_j p_j / p_thres)^k`
//! with `k = (d + 1) / 2`. Gate noise contributes `p_phys (1 + alpha x)`
//! where `x` is the number of transversal CNOTs per SE round, and idling
//! between rounds adds `dt / T_coh`.

use serde::{Deserialize, Serialize};

use crate::distance::CodeDistance;
use crate::error::{Error, Result};
use crate::physical::PhysicalParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorModelParams {
    pub c: f64,
    pub lambda: f64,
    pub p_phys: f64,
    pub p_thres: f64,
    pub alpha: f64,
}

impl Default for ErrorModelParams {
    fn default() -> Self {
        Self {
            c: 0.1,
            lambda: 10.0,
            p_phys: 1e-3,
            p_thres: 1e-2,
            alpha: 1.0 / 6.0,
        }
    }
}

impl ErrorModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::domain(format!("C must be positive, got {}", self.c)));
        }
        if !(self.lambda > 1.0 && self.lambda.is_finite()) {
            return Err(Error::domain(format!(
                "Lambda must exceed 1 (below threshold), got {}",
                self.lambda
            )));
        }
        if !(self.p_phys > 0.0 && self.p_phys < self.p_thres && self.p_thres < 1.0) {
            return Err(Error::domain(format!(
                "need 0 < p_phys < p_thres < 1, got p_phys={} p_thres={}",
                self.p_phys, self.p_thres
            )));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::domain(format!(
                "alpha must be non-negative, got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    /// Per-round error ratio `(alpha x + 1) / Lambda` under a gate load.
    pub fn gate_ratio(&self, x: f64) -> f64 {
        (self.alpha * x + 1.0) / self.lambda
    }
}

/// Transversal load on a patch: CNOTs per SE round and idle time between rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateLoad {
    pub cnots_per_se_round: f64,
    pub idle_time_per_round_s: f64,
}

impl GateLoad {
    pub const MEMORY: GateLoad = GateLoad {
        cnots_per_se_round: 0.0,
        idle_time_per_round_s: 0.0,
    };

    pub fn gates(x: f64) -> Self {
        Self {
            cnots_per_se_round: x,
            idle_time_per_round_s: 0.0,
        }
    }
}

pub fn memory_error_per_round(d: CodeDistance, em: &ErrorModelParams) -> f64 {
    em.c / em.lambda.powi(d.half_plus() as i32)
}

/// Logical error per qubit per SE round under `load`.
pub fn round_error(
    d: CodeDistance,
    load: GateLoad,
    em: &ErrorModelParams,
    pp: &PhysicalParams,
) -> f64 {
    let idle = load.idle_time_per_round_s / pp.coherence_time_s;
    let ratio = em.gate_ratio(load.cnots_per_se_round) + idle / em.p_thres;
    em.c * ratio.powi(d.half_plus() as i32)
}

/// Error of one transversal CNOT: two patches, `1/x` SE rounds each.
pub fn cnot_logical_error(d: CodeDistance, x: f64, em: &ErrorModelParams) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!(
            "CNOTs per SE round must be positive, got {x}"
        )));
    }
    Ok(2.0 * em.c / x * em.gate_ratio(x).powi(d.half_plus() as i32))
}

pub fn effective_threshold(x: f64, alpha: f64, p_thres: f64) -> f64 {
    p_thres / (alpha * x + 1.0)
}

/// Smallest odd `d >= 3` with `prefactor * ratio^((d+1)/2) <= target`.
pub fn distance_for(prefactor: f64, ratio: f64, target: f64) -> Result<CodeDistance> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::domain(format!(
            "target error must be in (0, 1), got {target}"
        )));
    }
    if !(ratio < 1.0) {
        return Err(Error::infeasible(format!(
            "error ratio {ratio:.4} is not below threshold; no distance reaches {target:e}"
        )));
    }
    let value = |d: CodeDistance| prefactor * ratio.powi(d.half_plus() as i32);
    if ratio <= 0.0 {
        return Ok(CodeDistance::MIN);
    }
    let k = ((target / prefactor).ln() / ratio.ln()).ceil().max(2.0);
    if k > 1e6 {
        return Err(Error::infeasible(format!(
            "required distance exceeds 2e6 for {target:e}"
        )));
    }
    let mut d = CodeDistance::at_least((2.0 * k - 1.0) as u32);
    while d > CodeDistance::MIN && value(CodeDistance::new(d.get() - 2)?) <= target {
        d = CodeDistance::new(d.get() - 2)?;
    }
    while value(d) > target {
        d = d.next();
    }
    Ok(d)
}

pub fn required_distance(target: f64, x: f64, em: &ErrorModelParams) -> Result<CodeDistance> {
    if !(x > 0.0) {
        return Err(Error::domain(format!(
            "CNOTs per SE round must be positive, got {x}"
        )));
    }
    distance_for(2.0 * em.c / x, em.gate_ratio(x), target)
}

pub fn idle_error_per_interval(dt: f64, pp: &PhysicalParams) -> Result<f64> {
    if !(dt >= 0.0) {
        return Err(Error::domain(format!(
            "idle interval must be non-negative, got {dt}"
        )));
    }
    Ok(dt / pp.coherence_time_s)
}

/// Relative space-time volume per logical CNOT at `x` CNOTs per SE round.
pub fn volume_per_cnot(x: f64, target: f64, em: &ErrorModelParams) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!(
            "CNOTs per SE round must be positive, got {x}"
        )));
    }
    let num = (x * target / (2.0 * em.c)).ln();
    let den = ((em.alpha * x + 1.0) * em.lambda).ln();
    Ok(num * num / (den * den) * (4.0 / x + 1.0))
}

/// Cost model for a register that idles in storage and is periodically
/// brought out for one SE round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageModel {
    /// Time a patch spends out of dense storage per SE round.
    pub excursion_s: f64,
    /// Tolerated logical error per logical qubit per second.
    pub error_rate_per_s: f64,
}

impl StorageModel {
    /// Continuous distance needed at SE interval `dt`, or `None` when the
    /// interval is above threshold.
    pub fn distance_continuous(
        &self,
        dt: f64,
        em: &ErrorModelParams,
        pp: &PhysicalParams,
    ) -> Option<f64> {
        let ratio = 1.0 / em.lambda + dt / pp.coherence_time_s / em.p_thres;
        if ratio >= 1.0 {
            return None;
        }
        let per_round = self.error_rate_per_s * dt;
        let k = (per_round / em.c).ln() / ratio.ln();
        Some((2.0 * k - 1.0).max(3.0))
    }

    /// Physical qubit-seconds per logical qubit per second of storage.
    pub fn volume_rate(&self, dt: f64, em: &ErrorModelParams, pp: &PhysicalParams) -> f64 {
        match self.distance_continuous(dt, em, pp) {
            Some(d) => {
                let data = d * d;
                let full = 2.0 * d * d - 1.0;
                (data * dt + full * self.excursion_s) / dt
            }
            None => f64::INFINITY,
        }
    }

    /// SE interval minimising [`Self::volume_rate`].
    pub fn optimal_interval(&self, em: &ErrorModelParams, pp: &PhysicalParams) -> Result<f64> {
        let f = |dt: f64| self.volume_rate(dt, em, pp);
        let lo = (self.excursion_s * 1e-3).max(1e-7);
        let hi = pp.coherence_time_s * em.p_thres;
        let n = 400;
        let grid: Vec<f64> = (0..=n)
            .map(|i| lo * (hi / lo).powf(i as f64 / n as f64))
            .collect();
        let (best, fbest) = grid
            .iter()
            .enumerate()
            .map(|(i, &t)| (i, f(t)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("grid is nonempty");
        if !fbest.is_finite() {
            return Err(Error::infeasible("no storage interval is below threshold"));
        }
        let a = grid[best.saturating_sub(1)].ln();
        let b = grid[(best + 1).min(n)].ln();
        Ok(golden_min(|u| f(u.exp()), a, b, 1e-10).exp())
    }
}

pub(crate) fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (1.0 + a.abs() + b.abs()) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// One decoder-simulation sample: logical error per qubit per SE round at
/// distance `d` with `x` transversal CNOTs per round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitDataPoint {
    pub d: u32,
    pub x: f64,
    pub p_l: f64,
    #[serde(alias = "uncertainty")]
    pub sigma: f64,
}

/// Parameters held constant during a fit.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FitFixed {
    pub c: Option<f64>,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub params: ErrorModelParams,
    /// Weighted residual sum of squares in the log domain.
    pub rss: f64,
}

struct Prepared {
    k: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
}

impl Prepared {
    /// Closed-form weighted least squares for `(ln C, ln Lambda)` at fixed alpha.
    fn solve(&self, alpha: f64, fixed: &FitFixed) -> (f64, f64, f64) {
        let z: Vec<f64> = (0..self.y.len())
            .map(|i| self.y[i] - self.k[i] * (alpha * self.x[i] + 1.0).ln())
            .collect();
        let sw: f64 = self.w.iter().sum();
        let swk: f64 = self.w.iter().zip(&self.k).map(|(w, k)| w * k).sum();
        let swkk: f64 = self.w.iter().zip(&self.k).map(|(w, k)| w * k * k).sum();
        let swz: f64 = self.w.iter().zip(&z).map(|(w, z)| w * z).sum();
        let swkz: f64 = (0..z.len()).map(|i| self.w[i] * self.k[i] * z[i]).sum();

        // z = a + b k with a = ln C, b = -ln Lambda
        let (a, b) = match (fixed.c, fixed.lambda) {
            (Some(c), Some(l)) => (c.ln(), -l.ln()),
            (Some(c), None) => {
                let a = c.ln();
                (a, (swkz - a * swk) / swkk)
            }
            (None, Some(l)) => {
                let b = -l.ln();
                ((swz - b * swk) / sw, b)
            }
            (None, None) => {
                let det = sw * swkk - swk * swk;
                let b = (sw * swkz - swk * swz) / det;
                ((swz - b * swk) / sw, b)
            }
        };
        let rss = (0..z.len())
            .map(|i| {
                let r = z[i] - a - b * self.k[i];
                self.w[i] * r * r
            })
            .sum();
        (a, b, rss)
    }
}

/// Weighted log-domain least-squares fit of `(C, Lambda, alpha)`.
///
/// For fixed alpha the problem is linear in `(ln C, ln Lambda)`; alpha is
/// found by a deterministic scan followed by golden-section refinement.
pub fn fit_error_model(data: &[FitDataPoint], fixed: &FitFixed) -> Result<FitResult> {
    if data.len() < 3 {
        return Err(Error::Underdetermined(format!(
            "need at least 3 data points, got {}",
            data.len()
        )));
    }
    for p in data {
        if p.d < 3 || p.d % 2 == 0 {
            return Err(Error::domain(format!(
                "invalid code distance {} in fit data",
                p.d
            )));
        }
        if !(p.p_l > 0.0 && p.p_l < 1.0) {
            return Err(Error::domain(format!(
                "p_L must be in (0, 1), got {}",
                p.p_l
            )));
        }
        if !(p.x >= 0.0) {
            return Err(Error::domain(format!(
                "x must be non-negative, got {}",
                p.x
            )));
        }
    }
    let distinct = |v: Vec<f64>| {
        let mut v = v;
        v.sort_by(f64::total_cmp);
        v.dedup();
        v.len()
    };
    if fixed.c.is_none()
        && fixed.lambda.is_none()
        && distinct(data.iter().map(|p| p.d as f64).collect()) < 2
    {
        return Err(Error::Underdetermined(
            "C and Lambda cannot be separated with a single code distance".into(),
        ));
    }
    if fixed.alpha.is_none() && distinct(data.iter().map(|p| p.x).collect()) < 2 {
        return Err(Error::Underdetermined(
            "alpha cannot be estimated from a single CNOT load".into(),
        ));
    }

    let prep = Prepared {
        k: data.iter().map(|p| p.d.div_ceil(2) as f64).collect(),
        x: data.iter().map(|p| p.x).collect(),
        y: data.iter().map(|p| p.p_l.ln()).collect(),
        w: data
            .iter()
            .map(|p| {
                let rel = p.sigma / p.p_l;
                if rel > 0.0 && rel.is_finite() {
                    1.0 / (rel * rel)
                } else {
                    1.0
                }
            })
            .collect(),
    };

    let alpha = match fixed.alpha {
        Some(a) => a,
        None => {
            let rss = |a: f64| prep.solve(a, fixed).2;
            let n = 2000;
            let amax = 20.0;
            let grid: Vec<f64> = (0..=n).map(|i| amax * i as f64 / n as f64).collect();
            let best = (0..=n)
                .min_by(|&i, &j| rss(grid[i]).total_cmp(&rss(grid[j])))
                .expect("grid is nonempty");
            let lo = grid[best.saturating_sub(1)];
            let hi = grid[(best + 1).min(n)];
            golden_min(rss, lo, hi, 1e-15).max(0.0)
        }
    };
    let (a, b, rss) = prep.solve(alpha, fixed);
    let c = fixed.c.unwrap_or(a.exp());
    let lambda = fixed.lambda.unwrap_or((-b).exp());
    let p_thres = ErrorModelParams::default().p_thres;
    Ok(FitResult {
        params: ErrorModelParams {
            c,
            lambda,
            p_phys: p_thres / lambda,
            p_thres,
            alpha,
        },
        rss,
    })
}

/// Reads `d,x,p_L,sigma` rows (header required).
pub fn read_fit_csv<R: std::io::Read>(reader: R) -> Result<Vec<FitDataPoint>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |names: &[&str]| {
        headers
            .iter()
            .position(|h| names.iter().any(|n| h.eq_ignore_ascii_case(n)))
            .ok_or_else(|| Error::Parse(format!("fit data is missing column {}", names[0])))
    };
    let (cd, cx, cp, cs) = (
        col(&["d"])?,
        col(&["x"])?,
        col(&["p_L", "p_l"])?,
        col(&["sigma", "uncertainty"])?,
    );
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", line + 2)))
        };
        let d = num(cd)?;
        if d.fract() != 0.0 || d < 0.0 {
            return Err(Error::Parse(format!(
                "row {}: d must be an integer",
                line + 2
            )));
        }
        out.push(FitDataPoint {
            d: d as u32,
            x: num(cx)?,
            p_l: num(cp)?,
            sigma: num(cs)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(v: u32) -> CodeDistance {
        CodeDistance::new(v).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn memory_rates() {
        let em = ErrorModelParams::default();
        assert!(rel(memory_error_per_round(d(27), &em), 1e-15) < 1e-12);
        assert!(rel(memory_error_per_round(d(3), &em), 1e-3) < 1e-12);
        let em20 = ErrorModelParams {
            lambda: 20.0,
            p_phys: 5e-4,
            ..em
        };
        assert!(rel(memory_error_per_round(d(11), &em20), 1.5625e-9) < 1e-12);
    }

    #[test]
    fn cnot_error_values() {
        let em = ErrorModelParams::default();
        let oracle = |dd: u32, x: f64| {
            2.0 * 0.1 / x * ((x / 6.0 + 1.0) / 10.0f64).powf(dd.div_ceil(2) as f64)
        };
        let v = cnot_logical_error(d(27), 1.0, &em).unwrap();
        assert!(rel(v, oracle(27, 1.0)) < 1e-12);
        assert!(rel(v, 1.74e-14) < 0.01, "{v}");
        let v25 = cnot_logical_error(d(25), 1.0, &em).unwrap();
        assert!(rel(v25, oracle(25, 1.0)) < 1e-12);
        assert!(v25 <= 1e-12);
        assert!(cnot_logical_error(d(23), 1.0, &em).unwrap() > 1e-12);
        assert!(cnot_logical_error(d(25), 0.0, &em).is_err());
    }

    #[test]
    fn memory_limit_recovered() {
        let em = ErrorModelParams::default();
        let x = 1e-6;
        for dd in [3, 11, 27] {
            let v = x * cnot_logical_error(d(dd), x, &em).unwrap() / 2.0;
            assert!(rel(v, memory_error_per_round(d(dd), &em)) < 1e-3);
        }
    }

    #[test]
    fn thresholds() {
        let t = effective_threshold(1.0, 1.0 / 6.0, 0.01);
        assert!((t / 0.01 - 6.0 / 7.0).abs() <= f64::EPSILON);
        assert!((0.008..=0.0087).contains(&t));
        assert_eq!(effective_threshold(0.0, 1.0 / 6.0, 0.01), 0.01);
        assert!(rel(effective_threshold(1.0, 0.667, 0.01), 0.006) < 0.001);
    }

    fn brute_distance(target: f64, x: f64, em: &ErrorModelParams) -> Option<u32> {
        (3..=4001u32)
            .step_by(2)
            .find(|&dd| cnot_logical_error(d(dd), x, em).unwrap() <= target)
    }

    #[test]
    fn distance_solver_examples() {
        let em = ErrorModelParams::default();
        assert_eq!(required_distance(1e-12, 1.0, &em).unwrap().get(), 25);
        assert_eq!(brute_distance(1e-12, 1.0, &em), Some(25));
        assert_eq!(required_distance(0.5, 1.0, &em).unwrap().get(), 3);
        let quarter = required_distance(1e-12, 0.25, &em).unwrap().get();
        assert_eq!(Some(quarter), brute_distance(1e-12, 0.25, &em));
    }

    #[test]
    fn distance_solver_infeasible() {
        let em = ErrorModelParams {
            alpha: 10.0,
            ..Default::default()
        };
        assert!(matches!(
            required_distance(1e-12, 1.0, &em),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn idle_interval() {
        let pp = PhysicalParams::default();
        assert!(rel(idle_error_per_interval(8e-3, &pp).unwrap(), 8e-4) < 1e-12);
        assert_eq!(idle_error_per_interval(0.0, &pp).unwrap(), 0.0);
        assert!(idle_error_per_interval(-1.0, &pp).is_err());
    }

    #[test]
    fn storage_optimum_near_gate_scale() {
        let pp = PhysicalParams::default();
        let em = ErrorModelParams::default();
        let s = StorageModel {
            excursion_s: 1.85e-3,
            error_rate_per_s: 1e-13,
        };
        let dt = s.optimal_interval(&em, &pp).unwrap();
        assert!((4e-3..=16e-3).contains(&dt), "{dt}");
        // minimum really is a minimum
        for f in [0.5, 0.9, 1.1, 2.0] {
            assert!(s.volume_rate(dt * f, &em, &pp) >= s.volume_rate(dt, &em, &pp));
        }
    }

    #[test]
    fn volume_curve() {
        let em = ErrorModelParams::default();
        let oracle = |x: f64| {
            let n = (x * 1e-12 / 0.2f64).ln();
            let m = ((x / 6.0 + 1.0) * 10.0f64).ln();
            n * n / (m * m) * (4.0 / x + 1.0)
        };
        let v1 = volume_per_cnot(1.0, 1e-12, &em).unwrap();
        assert!(rel(v1, oracle(1.0)) < 1e-12);
        assert!((v1 - 561.0).abs() < 1.0, "{v1}");
        let ratio = v1 / volume_per_cnot(0.25, 1e-12, &em).unwrap();
        assert!((ratio - 0.24).abs() < 0.01, "{ratio}");
        let xs = [0.25, 0.5, 1.0, 2.0, 4.0];
        let best = xs
            .iter()
            .copied()
            .min_by(|a, b| {
                volume_per_cnot(*a, 1e-12, &em)
                    .unwrap()
                    .total_cmp(&volume_per_cnot(*b, 1e-12, &em).unwrap())
            })
            .unwrap();
        assert!(best >= 1.0);
    }

    fn synthetic(c: f64, lambda: f64, alpha: f64) -> Vec<FitDataPoint> {
        let mut out = Vec::new();
        for dd in [3u32, 5, 7, 9, 11] {
            for x in [0.0, 0.5, 1.0, 2.0] {
                let k = dd.div_ceil(2) as i32;
                let p = c * ((alpha * x + 1.0) / lambda).powi(k);
                out.push(FitDataPoint {
                    d: dd,
                    x,
                    p_l: p,
                    sigma: 0.0,
                });
            }
        }
        out
    }

    #[test]
    fn exact_recovery() {
        let data = synthetic(0.1, 20.0, 1.0 / 6.0);
        let fit = fit_error_model(&data, &FitFixed::default()).unwrap();
        assert!(rel(fit.params.c, 0.1) < 1e-6, "{:?}", fit);
        assert!(rel(fit.params.lambda, 20.0) < 1e-6);
        assert!(rel(fit.params.alpha, 1.0 / 6.0) < 1e-6);
    }

    #[test]
    fn fixed_members_are_held() {
        let data = synthetic(0.1, 20.0, 1.0 / 6.0);
        let fixed = FitFixed {
            alpha: Some(0.3),
            ..Default::default()
        };
        let fit = fit_error_model(&data, &fixed).unwrap();
        assert_eq!(fit.params.alpha, 0.3);
        let fixed = FitFixed {
            c: Some(0.1),
            lambda: Some(20.0),
            alpha: None,
        };
        let fit = fit_error_model(&data, &fixed).unwrap();
        assert_eq!((fit.params.c, fit.params.lambda), (0.1, 20.0));
        assert!(rel(fit.params.alpha, 1.0 / 6.0) < 1e-6);
    }

    #[test]
    fn noisy_recovery() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let clean = synthetic(0.1, 20.0, 1.0 / 6.0);
        for _ in 0..50 {
            let noisy: Vec<FitDataPoint> = clean
                .iter()
                .map(|p| {
                    let f = 1.0 + rng.gen_range(-0.05..0.05);
                    FitDataPoint {
                        p_l: p.p_l * f,
                        sigma: 0.05 * p.p_l,
                        ..*p
                    }
                })
                .collect();
            let fit = fit_error_model(&noisy, &FitFixed::default()).unwrap();
            assert!(rel(fit.params.lambda, 20.0) < 0.1, "{:?}", fit.params);
        }
    }

    #[test]
    fn underdetermined_cases() {
        let single_x: Vec<_> = synthetic(0.1, 20.0, 0.2)
            .into_iter()
            .filter(|p| p.x == 1.0)
            .collect();
        assert!(matches!(
            fit_error_model(&single_x, &FitFixed::default()),
            Err(Error::Underdetermined(_))
        ));
        let single_d: Vec<_> = synthetic(0.1, 20.0, 0.2)
            .into_iter()
            .filter(|p| p.d == 7)
            .collect();
        assert!(matches!(
            fit_error_model(&single_d, &FitFixed::default()),
            Err(Error::Underdetermined(_))
        ));
        assert!(matches!(
            fit_error_model(&single_d[..2], &FitFixed::default()),
            Err(Error::Underdetermined(_))
        ));
    }

    #[test]
    fn csv_ingest() {
        let text = "d,x,p_L,sigma\n3,1.0,1e-3,1e-5\n5, 0.5 ,2e-4,0\n";
        let rows = read_fit_csv(text.as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].d, 5);
        assert!(read_fit_csv("d,x,p_L\n3,1,0.1\n".as_bytes()).is_err());
        assert!(read_fit_csv("d,x,p_L,sigma\n3,abc,0.1,0\n".as_bytes()).is_err());
    }

    fn below_threshold() -> impl Strategy<Value = (ErrorModelParams, f64)> {
        (0.01f64..1.0, 1.5f64..40.0, 0.0f64..2.0, 0.05f64..4.0).prop_filter_map(
            "must be below threshold",
            |(c, lambda, alpha, x)| {
                let em = ErrorModelParams {
                    c,
                    lambda,
                    alpha,
                    p_phys: 0.01 / lambda,
                    p_thres: 0.01,
                };
                (em.gate_ratio(x) < 0.9).then_some((em, x))
            },
        )
    }

    proptest! {
        #[test]
        fn solver_matches_scan((em, x) in below_threshold(), lt in -15.0f64..-1.0) {
            let target = 10f64.powf(lt);
            let got = required_distance(target, x, &em).unwrap().get();
            prop_assert_eq!(Some(got), brute_distance(target, x, &em));
        }

        #[test]
        fn solver_monotone((em, x) in below_threshold(), lt in -15.0f64..-1.0, step in 0.0f64..3.0) {
            let tight = required_distance(10f64.powf(lt - step), x, &em).unwrap();
            let loose = required_distance(10f64.powf(lt), x, &em).unwrap();
            prop_assert!(tight >= loose);
        }

        #[test]
        fn cnot_error_orderings(dd in 1u32..30, x in 0.05f64..4.0, a in 0.0f64..1.0, da in 0.01f64..1.0) {
            let em = ErrorModelParams { alpha: a, ..Default::default() };
            let d1 = d(2 * dd + 1);
            let e = cnot_logical_error(d1, x, &em).unwrap();
            prop_assert!(cnot_logical_error(d1.next(), x, &em).unwrap() < e);
            let em2 = ErrorModelParams { alpha: a + da, ..em };
            prop_assert!(cnot_logical_error(d1, x, &em2).unwrap() > e);
        }
    }
}
