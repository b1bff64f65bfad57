//! Pairwise coordinate descent over algorithm parameters, and sensitivity
//! curves that re-optimize at every point of one physical axis.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::CodeDistance;
use crate::error::{Error, Result};
use crate::shor::{estimate, EstimateReport, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    #[serde(alias = "spacetime_volume")]
    Volume,
    Runtime,
    Qubits,
}

impl Objective {
    pub fn of(self, r: &EstimateReport) -> f64 {
        match self {
            Objective::Volume => r.spacetime_volume,
            Objective::Runtime => r.runtime_s,
            Objective::Qubits => r.total_physical_qubits as f64,
        }
    }
}

/// Grids for each swept parameter plus optional constraint overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub objective: Objective,
    pub w_exp: Vec<u32>,
    pub w_mul: Vec<u32>,
    pub r_sep: Vec<u64>,
    pub max_factories: Vec<u64>,
    pub d: Vec<u32>,
    pub ghz_grid_spacing: Vec<u64>,
    pub pipeline_copies: Vec<u64>,
    pub max_passes: usize,
    /// Replaces the scenario's qubit cap when set.
    pub qubit_cap: Option<u64>,
    /// Replaces the scenario's total error budget when set.
    pub error_budget: Option<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            objective: Objective::Volume,
            w_exp: (1..=6).collect(),
            w_mul: (1..=6).collect(),
            r_sep: vec![32, 48, 64, 96, 128, 192, 256, 384, 512, 768, 1024],
            max_factories: vec![16, 24, 32, 48, 64, 96, 128, 192, 256],
            d: (19..=45).step_by(2).collect(),
            ghz_grid_spacing: vec![1, 2, 3, 4],
            pipeline_copies: vec![1, 2, 3, 4],
            max_passes: 8,
            qubit_cap: None,
            error_budget: None,
        }
    }
}

impl SweepSpec {
    /// A spec whose grids hold only the scenario's own values.
    pub fn pinned(s: &Scenario) -> Self {
        let p = Point::of(s);
        Self {
            w_exp: vec![p.w_exp],
            w_mul: vec![p.w_mul],
            r_sep: vec![p.r_sep],
            max_factories: vec![p.max_factories],
            d: vec![p.d],
            ghz_grid_spacing: vec![p.ghz_grid_spacing],
            pipeline_copies: vec![p.pipeline_copies],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("w_exp", self.w_exp.is_empty()),
            ("w_mul", self.w_mul.is_empty()),
            ("r_sep", self.r_sep.is_empty()),
            ("max_factories", self.max_factories.is_empty()),
            ("d", self.d.is_empty()),
            ("ghz_grid_spacing", self.ghz_grid_spacing.is_empty()),
            ("pipeline_copies", self.pipeline_copies.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::domain(format!("sweep grid {name} is empty")));
        }
        if let Some(&d) = self.d.iter().find(|&&d| CodeDistance::new(d).is_err()) {
            return Err(Error::domain(format!(
                "sweep distance {d} is not an odd integer >= 3"
            )));
        }
        if self.max_passes == 0 {
            return Err(Error::domain("max_passes must be positive"));
        }
        Ok(())
    }

    /// Inserts grid midpoints on both sides of the incumbent.
    pub fn refined_around(&self, p: &Point) -> Self {
        fn refine<T: Copy + Ord + Into<u64> + TryFrom<u64>>(
            grid: &[T],
            at: T,
            snap: impl Fn(u64) -> u64,
        ) -> Vec<T> {
            let mut g: Vec<T> = grid.to_vec();
            g.push(at);
            g.sort_unstable();
            g.dedup();
            let i = g.binary_search(&at).expect("incumbent was inserted");
            let mut extra = Vec::new();
            for j in [i.checked_sub(1), Some(i + 1)].into_iter().flatten() {
                if let Some(&other) = g.get(j) {
                    let (a, b) = (at.into().min(other.into()), at.into().max(other.into()));
                    let mid = snap((a + b) / 2);
                    if mid > a && mid < b {
                        if let Ok(v) = T::try_from(mid) {
                            extra.push(v);
                        }
                    }
                }
            }
            g.extend(extra);
            g.sort_unstable();
            g.dedup();
            g
        }
        let id = |v: u64| v;
        let odd = |v: u64| if v.is_multiple_of(2) { v + 1 } else { v };
        Self {
            w_exp: refine(&self.w_exp, p.w_exp, id),
            w_mul: refine(&self.w_mul, p.w_mul, id),
            r_sep: refine(&self.r_sep, p.r_sep, id),
            max_factories: refine(&self.max_factories, p.max_factories, id),
            d: refine(&self.d, p.d, odd),
            ghz_grid_spacing: refine(&self.ghz_grid_spacing, p.ghz_grid_spacing, id),
            pipeline_copies: refine(&self.pipeline_copies, p.pipeline_copies, id),
            ..self.clone()
        }
    }
}

/// One assignment of the swept parameters. Field order is the tie-break
/// order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Point {
    pub w_exp: u32,
    pub w_mul: u32,
    pub r_sep: u64,
    pub max_factories: u64,
    pub d: u32,
    pub ghz_grid_spacing: u64,
    pub pipeline_copies: u64,
}

impl Point {
    pub fn of(s: &Scenario) -> Self {
        Self {
            w_exp: s.algorithm.w_exp,
            w_mul: s.algorithm.w_mul,
            r_sep: s.algorithm.r_sep,
            max_factories: s.algorithm.max_factories,
            d: s.algorithm.d.get(),
            ghz_grid_spacing: s.lookup.ghz_grid_spacing,
            pipeline_copies: s.lookup.pipeline_copies,
        }
    }

    pub fn apply(&self, base: &Scenario) -> Result<Scenario> {
        let mut s = base.clone();
        s.algorithm.w_exp = self.w_exp;
        s.algorithm.w_mul = self.w_mul;
        s.algorithm.r_sep = self.r_sep;
        s.algorithm.max_factories = self.max_factories;
        s.algorithm.d = CodeDistance::new(self.d)?;
        s.lookup.ghz_grid_spacing = self.ghz_grid_spacing;
        s.lookup.pipeline_copies = self.pipeline_copies;
        Ok(s)
    }
}

/// Parameter groups swept jointly, in pass order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Windows,
    RunwayFactories,
    Distance,
    Fanout,
}

impl Group {
    pub const ALL: [Group; 4] = [
        Group::Windows,
        Group::RunwayFactories,
        Group::Distance,
        Group::Fanout,
    ];

    fn candidates(self, at: &Point, spec: &SweepSpec) -> Vec<Point> {
        let mut out = Vec::new();
        match self {
            Group::Windows => {
                for &a in &spec.w_exp {
                    for &b in &spec.w_mul {
                        out.push(Point {
                            w_exp: a,
                            w_mul: b,
                            ..*at
                        });
                    }
                }
            }
            Group::RunwayFactories => {
                for &a in &spec.r_sep {
                    for &b in &spec.max_factories {
                        out.push(Point {
                            r_sep: a,
                            max_factories: b,
                            ..*at
                        });
                    }
                }
            }
            Group::Distance => {
                for &d in &spec.d {
                    out.push(Point { d, ..*at });
                }
            }
            Group::Fanout => {
                for &a in &spec.ghz_grid_spacing {
                    for &b in &spec.pipeline_copies {
                        out.push(Point {
                            ghz_grid_spacing: a,
                            pipeline_copies: b,
                            ..*at
                        });
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Windows => "windows",
            Group::RunwayFactories => "runway_factories",
            Group::Distance => "distance",
            Group::Fanout => "fanout",
        })
    }
}

/// Result of estimating one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub point: Point,
    /// Infinite when the estimate itself failed.
    pub objective: f64,
    pub report: Option<EstimateReport>,
    pub violations: Vec<String>,
}

impl Evaluation {
    pub fn feasible(&self) -> bool {
        self.report.is_some() && self.violations.is_empty()
    }

    /// Infinite when the estimate itself failed.
    pub fn excess(&self) -> f64 {
        self.report
            .as_ref()
            .map_or(f64::INFINITY, |r| r.constraint_excess)
    }
}

/// Orders feasible points by objective and infeasible ones by how far they
/// overshoot their constraints, breaking ties on the parameter tuple.
fn rank(a: &Evaluation, b: &Evaluation) -> Ordering {
    b.feasible()
        .cmp(&a.feasible())
        .then_with(|| a.excess().total_cmp(&b.excess()))
        .then_with(|| a.objective.total_cmp(&b.objective))
        .then_with(|| a.point.cmp(&b.point))
}

/// Scenario with the spec's constraint overrides applied.
fn constrained(base: &Scenario, spec: &SweepSpec) -> Scenario {
    let mut s = base.clone();
    if let Some(cap) = spec.qubit_cap {
        s.algorithm.qubit_cap = Some(cap);
    }
    if let Some(b) = spec.error_budget {
        s.algorithm.total_error_budget = b;
    }
    s
}

/// Estimates one point of an already constrained scenario.
pub fn evaluate(point: Point, base: &Scenario, objective: Objective) -> Evaluation {
    match point.apply(base).and_then(|s| estimate(&s)) {
        Ok(r) => Evaluation {
            point,
            objective: objective.of(&r),
            violations: r.violations.clone(),
            report: Some(r),
        },
        Err(e) => Evaluation {
            point,
            objective: f64::INFINITY,
            report: None,
            violations: vec![e.to_string()],
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    /// Index of the descent start this row belongs to.
    pub start: usize,
    pub pass: usize,
    pub group: Group,
    pub w_exp: u32,
    pub w_mul: u32,
    pub r_sep: u64,
    pub max_factories: u64,
    pub d: u32,
    pub ghz_grid_spacing: u64,
    pub pipeline_copies: u64,
    pub objective: f64,
    pub spacetime_volume: f64,
    pub runtime_s: f64,
    pub physical_qubits: u64,
    pub total_error: f64,
    pub feasible: bool,
    pub violation_count: usize,
    pub constraint_excess: f64,
    /// Best point of its group evaluation.
    pub selected: bool,
}

impl TraceRow {
    fn new(start: usize, pass: usize, group: Group, e: &Evaluation, selected: bool) -> Self {
        let p = e.point;
        let (volume, runtime, qubits, error) = match &e.report {
            Some(r) => (
                r.spacetime_volume,
                r.runtime_s,
                r.total_physical_qubits,
                r.total_error,
            ),
            None => (f64::NAN, f64::NAN, 0, f64::NAN),
        };
        Self {
            start,
            pass,
            group,
            w_exp: p.w_exp,
            w_mul: p.w_mul,
            r_sep: p.r_sep,
            max_factories: p.max_factories,
            d: p.d,
            ghz_grid_spacing: p.ghz_grid_spacing,
            pipeline_copies: p.pipeline_copies,
            objective: e.objective,
            spacetime_volume: volume,
            runtime_s: runtime,
            physical_qubits: qubits,
            total_error: error,
            feasible: e.feasible(),
            violation_count: e.violations.len(),
            constraint_excess: e.excess(),
            selected,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub best: Evaluation,
    /// Fully configured scenario at the best point.
    pub scenario: Scenario,
    pub trace: Vec<TraceRow>,
    pub passes: usize,
    pub evaluations: usize,
}

struct Descent<'a> {
    base: &'a Scenario,
    objective: Objective,
    cache: BTreeMap<Point, Evaluation>,
    trace: Vec<TraceRow>,
    passes: usize,
    starts: usize,
}

impl Descent<'_> {
    fn ensure(&mut self, points: &[Point]) {
        let missing: Vec<Point> = points
            .iter()
            .filter(|p| !self.cache.contains_key(p))
            .copied()
            .collect();
        let (base, objective) = (self.base, self.objective);
        let fresh: Vec<Evaluation> = missing
            .par_iter()
            .map(|&p| evaluate(p, base, objective))
            .collect();
        for e in fresh {
            self.cache.insert(e.point, e);
        }
    }

    fn run(&mut self, spec: &SweepSpec, start: Point) -> Point {
        self.ensure(&[start]);
        self.starts += 1;
        let mut incumbent = start;
        for pass in 1..=spec.max_passes {
            self.passes += 1;
            let mut improved = false;
            for group in Group::ALL {
                let points = group.candidates(&incumbent, spec);
                self.ensure(&points);
                let best = points
                    .iter()
                    .map(|p| &self.cache[p])
                    .min_by(|a, b| rank(a, b))
                    .expect("grids are nonempty");
                let best_point = best.point;
                if rank(best, &self.cache[&incumbent]) == Ordering::Less {
                    incumbent = best_point;
                    improved = true;
                }
                for p in &points {
                    let row =
                        TraceRow::new(self.starts, pass, group, &self.cache[p], *p == best_point);
                    self.trace.push(row);
                }
            }
            if !improved {
                break;
            }
        }
        incumbent
    }
}

fn diagnostics(cache: &BTreeMap<Point, Evaluation>) -> String {
    const SHOWN: usize = 12;
    let mut lines: Vec<String> = cache
        .values()
        .take(SHOWN)
        .map(|e| format!("  {:?}: {}", e.point, e.violations.join("; ")))
        .collect();
    if cache.len() > SHOWN {
        lines.push(format!("  ... {} more points", cache.len() - SHOWN));
    }
    format!("no feasible point in the sweep\n{}", lines.join("\n"))
}

/// Descent starts: the scenario's own point, then that point at every
/// combination of distance and GHZ grid spacing in the spec. These two move
/// the footprint most, and single-group moves cannot trade one for the other.
fn starts(spec: &SweepSpec, base: Point) -> Vec<Point> {
    let mut out = vec![base];
    for &d in &spec.d {
        for &s in &spec.ghz_grid_spacing {
            let p = Point {
                d,
                ghz_grid_spacing: s,
                ..base
            };
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    out
}

/// Multi-start pairwise coordinate descent. With `refine`, the grids are
/// densified around the winner and the descent resumes from it.
pub fn optimize(spec: &SweepSpec, base: &Scenario, refine: bool) -> Result<OptimizeResult> {
    spec.validate()?;
    base.validate()?;
    let scenario = constrained(base, spec);
    let mut descent = Descent {
        base: &scenario,
        objective: spec.objective,
        cache: BTreeMap::new(),
        trace: Vec::new(),
        passes: 0,
        starts: 0,
    };
    let mut best = Point::of(base);
    for start in starts(spec, best) {
        let end = descent.run(spec, start);
        if rank(&descent.cache[&end], &descent.cache[&best]) == Ordering::Less {
            best = end;
        }
    }
    if refine {
        best = descent.run(&spec.refined_around(&best), best);
    }
    let eval = descent.cache[&best].clone();
    if !eval.feasible() {
        return Err(Error::Infeasible(diagnostics(&descent.cache)));
    }
    Ok(OptimizeResult {
        scenario: best.apply(&scenario)?,
        best: eval,
        evaluations: descent.cache.len(),
        trace: descent.trace,
        passes: descent.passes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Alpha,
    /// Seconds.
    CoherenceTime,
    /// Multiplier on the tweezer acceleration.
    AccelerationScale,
    /// Seconds. Measurement and decoding times are clamped to it.
    ReactionTime,
    /// Physical qubits.
    QubitCap,
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "alpha" => Axis::Alpha,
            "coherence_time" => Axis::CoherenceTime,
            "acceleration_scale" => Axis::AccelerationScale,
            "reaction_time" => Axis::ReactionTime,
            "qubit_cap" => Axis::QubitCap,
            _ => {
                return Err(Error::domain(format!(
                    "unknown axis {s}; expected alpha, coherence_time, acceleration_scale, reaction_time or qubit_cap"
                )))
            }
        })
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Alpha => "alpha",
            Axis::CoherenceTime => "coherence_time",
            Axis::AccelerationScale => "acceleration_scale",
            Axis::ReactionTime => "reaction_time",
            Axis::QubitCap => "qubit_cap",
        })
    }
}

impl Axis {
    /// Scenario and spec with the axis set to `value`.
    pub fn apply(
        self,
        value: f64,
        base: &Scenario,
        spec: &SweepSpec,
    ) -> Result<(Scenario, SweepSpec)> {
        let mut s = base.clone();
        let mut sp = spec.clone();
        match self {
            Axis::Alpha => s.error_model.alpha = value,
            Axis::CoherenceTime => s.physical.coherence_time_s = value,
            Axis::AccelerationScale => s.physical = s.physical.with_acceleration_scale(value),
            Axis::ReactionTime => {
                s.physical.reaction_time_s = value;
                s.physical.measure_time_s = s.physical.measure_time_s.min(value);
                s.physical.decode_time_s = s.physical.decode_time_s.min(value);
            }
            Axis::QubitCap => {
                if !(value >= 1.0) {
                    return Err(Error::domain(format!(
                        "qubit cap must be at least 1, got {value}"
                    )));
                }
                sp.qubit_cap = Some(value.round() as u64);
            }
        }
        s.validate()?;
        Ok((s, sp))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub axis: Axis,
    pub value: f64,
    pub feasible: bool,
    pub spacetime_volume: f64,
    pub runtime_s: f64,
    pub physical_qubits: u64,
    pub d: u32,
    pub w_exp: u32,
    pub w_mul: u32,
    pub r_sep: u64,
    pub max_factories: u64,
    pub ghz_grid_spacing: u64,
    pub pipeline_copies: u64,
    pub lookup_time_s: f64,
    pub addition_time_s: f64,
}

/// Re-optimizes at every grid value. Points without a feasible
/// configuration are kept with `feasible = false`.
pub fn sensitivity_run(
    axis: Axis,
    grid: &[f64],
    base: &Scenario,
    spec: &SweepSpec,
) -> Result<Vec<SensitivityRow>> {
    let prepared = grid
        .iter()
        .map(|&v| axis.apply(v, base, spec).map(|(s, sp)| (v, s, sp)))
        .collect::<Result<Vec<_>>>()?;
    prepared
        .par_iter()
        .map(|(value, s, sp)| {
            let best = match optimize(sp, s, false) {
                Ok(r) => Some(r),
                Err(Error::Infeasible(_)) => None,
                Err(e) => return Err(e),
            };
            let p = best
                .as_ref()
                .map(|r| r.best.point)
                .unwrap_or_else(|| Point::of(s));
            let report = best.as_ref().and_then(|r| r.best.report.as_ref());
            Ok(SensitivityRow {
                axis,
                value: *value,
                feasible: best.is_some(),
                spacetime_volume: report.map_or(f64::NAN, |r| r.spacetime_volume),
                runtime_s: report.map_or(f64::NAN, |r| r.runtime_s),
                physical_qubits: report.map_or(0, |r| r.total_physical_qubits),
                d: p.d,
                w_exp: p.w_exp,
                w_mul: p.w_mul,
                r_sep: p.r_sep,
                max_factories: p.max_factories,
                ghz_grid_spacing: p.ghz_grid_spacing,
                pipeline_copies: p.pipeline_copies,
                lookup_time_s: report.map_or(f64::NAN, |r| r.lookup_time_s + r.unlookup_time_s),
                addition_time_s: report.map_or(f64::NAN, |r| r.addition_time_s),
            })
        })
        .collect()
}
