//! Two-stage magic-state supply: cultivated T states feeding an 8T-to-CCZ
//! distillation block.

use std::io::Read;

use crate::distance::CodeDistance;
use crate::error::{Error, Result};
use crate::error_model::{distance_for, ErrorModelParams};
use crate::layout::{
    factory_layout_with_rounds, GadgetLayout, CULTIVATION_PER_ROW, FACTORY_STAGE2_HEIGHT,
    FACTORY_WIDTH,
};
use crate::physical::{schedule_time, PhysicalParams};

/// Leading-order distillation coefficient of the 8T-to-CCZ circuit.
pub const CCZ_COEFFICIENT: f64 = 28.0;
/// Share of the CCZ target that the Clifford part of the factory may use.
pub const CLIFFORD_SHARE: f64 = 0.1;
/// SE rounds per factory layer tried when the choice is left open.
pub const SE_SWEEP: [f64; 5] = [1.0 / 3.0, 0.5, 1.0, 2.0, 3.0];

/// Atoms of one cultivation copy: an eighth of a 12-patch row at d = 27.
pub const CULTIVATION_COPY_QUBITS: f64 = 12.0 * 1457.0 / 8.0;

const STAGE2_LAYERS: u32 = 5;

/// Expected cultivation cost per T state versus its output error.
#[derive(Debug, Clone, PartialEq)]
pub struct CultivationCurve {
    /// `(t_error, qubit_rounds)` sorted by increasing error.
    points: Vec<(f64, f64)>,
}

impl Default for CultivationCurve {
    fn default() -> Self {
        Self {
            points: vec![(7.7e-8, 6.0e4), (7.7e-7, 1.5e4), (7.7e-6, 3.8e3)],
        }
    }
}

impl CultivationCurve {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::domain("cultivation curve needs at least two points"));
        }
        if points
            .iter()
            .any(|&(e, v)| !(e > 0.0 && e < 1.0 && v > 0.0 && v.is_finite()))
        {
            return Err(Error::domain(
                "cultivation points need error in (0,1) and positive volume",
            ));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points
            .windows(2)
            .any(|w| !(w[1].0 > w[0].0 && w[1].1 < w[0].1))
        {
            return Err(Error::domain(
                "cultivation volume must strictly decrease as the error increases",
            ));
        }
        Ok(Self { points })
    }

    /// Reads `t_error,qubit_rounds` rows with a header.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut points = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |j: usize| -> Result<f64> {
                rec.get(j)
                    .ok_or_else(|| {
                        Error::Parse(format!("cultivation row {}: missing column", i + 2))
                    })?
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("cultivation row {}: {e}", i + 2)))
            };
            points.push((field(0)?, field(1)?));
        }
        Self::new(points)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Qubit-rounds per T state, log-log interpolated and extrapolated
    /// linearly from the end segments.
    pub fn volume_at(&self, t_error: f64) -> Result<f64> {
        if !(t_error > 0.0) {
            return Err(Error::domain(format!(
                "T error must be positive, got {t_error}"
            )));
        }
        let i = self
            .points
            .windows(2)
            .position(|w| t_error <= w[1].0)
            .unwrap_or(self.points.len() - 2);
        let (e0, v0) = self.points[i];
        let (e1, v1) = self.points[i + 1];
        if t_error == e0 {
            return Ok(v0);
        }
        if t_error == e1 {
            return Ok(v1);
        }
        let slope = (v1.ln() - v0.ln()) / (e1.ln() - e0.ln());
        Ok((v0.ln() + slope * (t_error.ln() - e0.ln())).exp())
    }
}

/// CCZ error for input T error `t_error` and Clifford floor `floor`.
pub fn ccz_error(t_error: f64, floor: f64) -> Result<f64> {
    if !(0.0..0.01).contains(&t_error) {
        return Err(Error::domain(format!(
            "T error must be in [0, 0.01), got {t_error}"
        )));
    }
    Ok(CCZ_COEFFICIENT * t_error * t_error + floor)
}

pub fn required_t_error(ccz_target: f64, floor: f64) -> Result<f64> {
    if !(ccz_target > floor) {
        return Err(Error::infeasible(format!(
            "CCZ target {ccz_target:e} is not above the Clifford floor {floor:e}"
        )));
    }
    Ok(((ccz_target - floor) / CCZ_COEFFICIENT).sqrt())
}

/// Clifford logical error of one stage-2 pass at distance `d`.
pub fn clifford_floor(d: CodeDistance, rounds_per_layer: f64, em: &ErrorModelParams) -> f64 {
    let (prefactor, ratio) = floor_terms(rounds_per_layer, em);
    prefactor * ratio.powi(d.half_plus() as i32)
}

fn stage2_rounds(rounds_per_layer: f64) -> u32 {
    crate::physical::ceil_tolerant(STAGE2_LAYERS as f64 * rounds_per_layer).max(1.0) as u32
}

/// Patch-rounds times `C`, and the per-round error ratio, of stage 2.
fn floor_terms(rounds_per_layer: f64, em: &ErrorModelParams) -> (f64, f64) {
    let rounds = stage2_rounds(rounds_per_layer);
    let x = STAGE2_LAYERS as f64 / rounds as f64;
    let patches = (FACTORY_WIDTH * FACTORY_STAGE2_HEIGHT) as f64;
    (patches * (rounds + 1) as f64 * em.c, em.gate_ratio(x))
}

/// One 8T-to-CCZ factory together with its cultivation row.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoryModel {
    pub d: CodeDistance,
    pub rounds_per_layer: f64,
    pub t_input_error: f64,
    pub ccz_output_error: f64,
    pub clifford_floor: f64,
    pub stage2_time_s: f64,
    pub cultivation_time_s: f64,
    pub cycle_duration_s: f64,
    pub footprint: GadgetLayout,
    /// CCZ states per second.
    pub throughput: f64,
}

impl FactoryModel {
    pub fn physical_qubits(&self) -> u64 {
        self.footprint.physical_qubits(self.d)
    }

    /// Qubit-seconds spent per CCZ state.
    pub fn volume_per_ccz(&self) -> f64 {
        self.physical_qubits() as f64 * self.cycle_duration_s
    }
}

/// SE round of a bare patch including its readout.
fn plain_round(pp: &PhysicalParams) -> f64 {
    pp.se_round_core_time() + pp.measure_time_s
}

pub fn factory_with_rounds(
    ccz_target: f64,
    rounds_per_layer: f64,
    curve: &CultivationCurve,
    em: &ErrorModelParams,
    pp: &PhysicalParams,
) -> Result<FactoryModel> {
    if !(ccz_target > 0.0 && ccz_target < 1.0) {
        return Err(Error::domain(format!(
            "CCZ target must be in (0, 1), got {ccz_target}"
        )));
    }
    let (prefactor, ratio) = floor_terms(rounds_per_layer, em);
    let d = distance_for(prefactor, ratio, CLIFFORD_SHARE * ccz_target)?;
    let floor = clifford_floor(d, rounds_per_layer, em);
    let t_error = required_t_error(ccz_target, floor)?;
    let out = ccz_error(t_error, floor)?;

    let footprint = factory_layout_with_rounds(d, CULTIVATION_PER_ROW, rounds_per_layer)?;
    let stage2 = schedule_time(&footprint.schedule, d, pp)? + pp.reaction_time_s;

    let rounds_per_t = curve.volume_at(t_error)? / CULTIVATION_COPY_QUBITS;
    let cultivation = rounds_per_t * plain_round(pp);

    let cycle = stage2.max(cultivation);
    Ok(FactoryModel {
        d,
        rounds_per_layer,
        t_input_error: t_error,
        ccz_output_error: out,
        clifford_floor: floor,
        stage2_time_s: stage2,
        cultivation_time_s: cultivation,
        cycle_duration_s: cycle,
        footprint,
        throughput: 1.0 / cycle,
    })
}

/// Builds one factory per entry of [`SE_SWEEP`].
pub fn factory_sweep(
    ccz_target: f64,
    curve: &CultivationCurve,
    em: &ErrorModelParams,
    pp: &PhysicalParams,
) -> Result<Vec<FactoryModel>> {
    SE_SWEEP
        .iter()
        .map(|&r| factory_with_rounds(ccz_target, r, curve, em, pp))
        .collect()
}

pub fn factory_build(
    ccz_target: f64,
    curve: &CultivationCurve,
    em: &ErrorModelParams,
    pp: &PhysicalParams,
) -> Result<FactoryModel> {
    let candidates = factory_sweep(ccz_target, curve, em, pp)?;
    Ok(candidates
        .into_iter()
        .min_by(|a, b| a.volume_per_ccz().total_cmp(&b.volume_per_ccz()))
        .expect("sweep is nonempty"))
}
