//! Hardware timescales and the conversion of move schedules into wall-clock time.
//!
//! All quantities are SI: lengths in metres, durations in seconds. Move
//! schedules are written in units of one patch width (`d * l`) so the same
//! schedule rescales with code distance.

use serde::{Deserialize, Serialize};

use crate::distance::CodeDistance;
use crate::error::{Error, Result};

/// Number of transversal gate layers in one syndrome-extraction round.
pub const SE_GATE_LAYERS: u32 = 4;
/// Measure-qubit shuttles per syndrome-extraction round, one site each.
pub const SE_SHUTTLES: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub site_spacing_m: f64,
    pub acceleration_m_s2: f64,
    pub gate_time_s: f64,
    pub measure_time_s: f64,
    pub decode_time_s: f64,
    pub reaction_time_s: f64,
    pub coherence_time_s: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            site_spacing_m: 12e-6,
            acceleration_m_s2: 5500.0,
            gate_time_s: 1e-6,
            measure_time_s: 500e-6,
            decode_time_s: 500e-6,
            reaction_time_s: 1e-3,
            coherence_time_s: 10.0,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("site_spacing", self.site_spacing_m),
            ("acceleration", self.acceleration_m_s2),
            ("gate_time", self.gate_time_s),
            ("measure_time", self.measure_time_s),
            ("decode_time", self.decode_time_s),
            ("reaction_time", self.reaction_time_s),
            ("coherence_time", self.coherence_time_s),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if self.reaction_time_s < self.measure_time_s {
            return Err(Error::domain(format!(
                "reaction time {} s is shorter than the measurement time {} s",
                self.reaction_time_s, self.measure_time_s
            )));
        }
        Ok(())
    }

    /// Side length of one code patch, `d * l`.
    pub fn patch_width_m(&self, d: CodeDistance) -> f64 {
        d.get() as f64 * self.site_spacing_m
    }

    /// Gate layers and measure-qubit shuttles of one SE round, excluding the
    /// ancilla measurement itself.
    pub fn se_round_core_time(&self) -> f64 {
        let shuttle = move_time(self.site_spacing_m, self).expect("site spacing is positive");
        SE_GATE_LAYERS as f64 * self.gate_time_s + SE_SHUTTLES as f64 * shuttle
    }

    /// Same hardware with the acceleration multiplied by `scale`.
    pub fn with_acceleration_scale(mut self, scale: f64) -> Self {
        self.acceleration_m_s2 *= scale;
        self
    }
}

/// Accelerate over the first half of the distance and decelerate over the
/// second: `t = 2 * sqrt(L / a)`.
pub fn move_time(distance_m: f64, params: &PhysicalParams) -> Result<f64> {
    if !(distance_m >= 0.0) || !distance_m.is_finite() {
        return Err(Error::domain(format!(
            "move distance must be non-negative, got {distance_m}"
        )));
    }
    Ok(2.0 * (distance_m / params.acceleration_m_s2).sqrt())
}

/// Time to move a block by `patches` patch widths at distance `d`.
pub fn patch_move_time(patches: f64, d: CodeDistance, params: &PhysicalParams) -> Result<f64> {
    move_time(patches * params.patch_width_m(d), params)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoveStep {
    /// Distance in units of the patch width `d * l`.
    pub distance_patches: f64,
    /// Steps sharing a group move simultaneously.
    pub parallel_group: u32,
}

impl MoveStep {
    pub fn new(distance_patches: f64, parallel_group: u32) -> Self {
        Self {
            distance_patches,
            parallel_group,
        }
    }
}

/// One sequential piece of a gadget schedule.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CycleBudget {
    pub gate_layers: u32,
    pub move_steps: Vec<MoveStep>,
    pub se_rounds: u32,
    /// Ancilla measurements may overlap with the moves of this budget.
    pub includes_measurement: bool,
}

impl CycleBudget {
    pub fn is_empty(&self) -> bool {
        self.gate_layers == 0 && self.move_steps.is_empty() && self.se_rounds == 0
    }

    pub fn max_move_patches(&self) -> f64 {
        self.move_steps
            .iter()
            .map(|s| s.distance_patches)
            .fold(0.0, f64::max)
    }

    /// Duration of each parallel move group, in group order.
    fn group_durations(&self, d: CodeDistance, params: &PhysicalParams) -> Result<Vec<f64>> {
        let mut groups: Vec<(u32, f64)> = Vec::new();
        for step in &self.move_steps {
            let t = patch_move_time(step.distance_patches, d, params)?;
            match groups.iter_mut().find(|(g, _)| *g == step.parallel_group) {
                Some((_, longest)) => *longest = longest.max(t),
                None => groups.push((step.parallel_group, t)),
            }
        }
        groups.sort_by_key(|(g, _)| *g);
        Ok(groups.into_iter().map(|(_, t)| t).collect())
    }
}

/// Wall-clock duration of one schedule piece.
///
/// Each SE round ends with an ancilla measurement. With pipelining, the i-th
/// round's measurement runs concurrently with the i-th longest move group and
/// only the uncovered remainder `max(0, t_meas - t_move)` is serial.
pub fn qec_cycle_time(
    budget: &CycleBudget,
    d: CodeDistance,
    params: &PhysicalParams,
) -> Result<f64> {
    if budget.is_empty() {
        return Ok(0.0);
    }
    let groups = budget.group_durations(d, params)?;
    let moves: f64 = groups.iter().sum();
    let gates = budget.gate_layers as f64 * params.gate_time_s;
    let rounds = budget.se_rounds as f64 * params.se_round_core_time();

    let measurement = if budget.includes_measurement {
        let mut cover = groups.clone();
        cover.sort_by(|a, b| b.total_cmp(a));
        (0..budget.se_rounds as usize)
            .map(|i| {
                let overlap = cover.get(i).copied().unwrap_or(0.0);
                (params.measure_time_s - overlap).max(0.0)
            })
            .sum()
    } else {
        budget.se_rounds as f64 * params.measure_time_s
    };

    Ok(gates + moves + rounds + measurement)
}

/// Sum of [`qec_cycle_time`] over sequential schedule pieces.
pub fn schedule_time(
    schedule: &[CycleBudget],
    d: CodeDistance,
    params: &PhysicalParams,
) -> Result<f64> {
    schedule.iter().map(|b| qec_cycle_time(b, d, params)).sum()
}

/// Copies of a block needed to keep a reaction-limited stream running:
/// `ceil(activity * t_block / t_r)`.
pub fn parallel_copies(t_block: f64, t_r: f64, activity_fraction: f64) -> Result<u64> {
    if !(t_block > 0.0) || !(t_r > 0.0) {
        return Err(Error::domain("block and reaction times must be positive"));
    }
    if !(activity_fraction > 0.0 && activity_fraction <= 1.0) {
        return Err(Error::domain(format!(
            "activity fraction must be in (0, 1], got {activity_fraction}"
        )));
    }
    Ok(ceil_tolerant(activity_fraction * t_block / t_r).max(1.0) as u64)
}

/// `ceil` that ignores floating-point noise just above an integer.
pub(crate) fn ceil_tolerant(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(v: u32) -> CodeDistance {
        CodeDistance::new(v).unwrap()
    }

    #[test]
    fn calibration_move_is_200_us() {
        let p = PhysicalParams::default();
        let t = move_time(55e-6, &p).unwrap();
        assert!((t - 200e-6).abs() < 1e-15, "{t}");
        assert_eq!(move_time(0.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn one_site_move() {
        let p = PhysicalParams::default();
        let t = move_time(12e-6, &p).unwrap();
        assert!((t * 1e6 - 93.4).abs() < 0.05, "{}", t * 1e6);
    }

    #[test]
    fn patch_width_move_is_about_half_a_millisecond() {
        let p = PhysicalParams::default();
        let t = patch_move_time(1.0, d(27), &p).unwrap();
        assert!((t * 1e6 - 485.3).abs() < 0.5, "{}", t * 1e6);
        assert!((t - 500e-6).abs() / 500e-6 < 0.05);
    }

    #[test]
    fn negative_distance_rejected() {
        let p = PhysicalParams::default();
        assert!(matches!(move_time(-1e-6, &p), Err(Error::Domain(_))));
        assert!(move_time(f64::NAN, &p).is_err());
    }

    #[test]
    fn transversal_cnot_cycle() {
        let p = PhysicalParams::default();
        let b = CycleBudget {
            gate_layers: 1,
            move_steps: vec![MoveStep::new(1.0, 0)],
            se_rounds: 1,
            includes_measurement: true,
        };
        let t = qec_cycle_time(&b, d(27), &p).unwrap();
        assert!((t - 900e-6).abs() / 900e-6 < 0.15, "{}", t * 1e6);
        let gate_and_se = p.gate_time_s + p.se_round_core_time();
        assert!((gate_and_se - 400e-6).abs() / 400e-6 < 0.15);
    }

    #[test]
    fn empty_budget_is_free() {
        let p = PhysicalParams::default();
        assert_eq!(
            qec_cycle_time(&CycleBudget::default(), d(27), &p).unwrap(),
            0.0
        );
    }

    #[test]
    fn maj_diagonal_move() {
        let p = PhysicalParams::default();
        let b = CycleBudget {
            gate_layers: 0,
            move_steps: vec![MoveStep::new(2f64.sqrt(), 0)],
            se_rounds: 0,
            includes_measurement: false,
        };
        let t = qec_cycle_time(&b, d(27), &p).unwrap();
        let expected = 2.0 * (27.0 * 12e-6 * 2f64.sqrt() / 5500.0).sqrt();
        assert!((t - expected).abs() < 1e-15);
        assert!((t * 1e6 - 577.0).abs() < 1.0);
    }

    #[test]
    fn parallel_group_takes_longest_member() {
        let p = PhysicalParams::default();
        let b = CycleBudget {
            gate_layers: 0,
            move_steps: vec![
                MoveStep::new(1.0, 3),
                MoveStep::new(4.0, 3),
                MoveStep::new(1.0, 7),
            ],
            se_rounds: 0,
            includes_measurement: false,
        };
        let t = qec_cycle_time(&b, d(27), &p).unwrap();
        let one = patch_move_time(1.0, d(27), &p).unwrap();
        assert!((t - 3.0 * one).abs() < 1e-15);
    }

    #[test]
    fn copies() {
        assert_eq!(parallel_copies(10e-3, 1e-3, 1.0).unwrap(), 10);
        assert_eq!(parallel_copies(1e-3, 1e-3, 1.0).unwrap(), 1);
        assert_eq!(parallel_copies(278e-3, 1e-3, 0.5).unwrap(), 139);
        assert_eq!(parallel_copies(0.1e-3, 1e-3, 0.01).unwrap(), 1);
        assert!(parallel_copies(1e-3, 1e-3, 0.0).is_err());
        assert!(parallel_copies(0.0, 1e-3, 1.0).is_err());
    }

    #[test]
    fn reaction_must_cover_measurement() {
        let p = PhysicalParams {
            reaction_time_s: 100e-6,
            ..PhysicalParams::default()
        };
        assert!(p.validate().is_err());
        assert!(PhysicalParams::default().validate().is_ok());
    }
}
