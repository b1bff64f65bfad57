//! Patch-level footprints and move schedules of the gadgets.
//!
//! Distances are in patch widths. A layout is independent of the code
//! distance; `d` only enters when converting to atoms or seconds.

use std::io::Write;

use serde::Serialize;

use crate::distance::CodeDistance;
use crate::error::{Error, Result};
use crate::physical::{qec_cycle_time, CycleBudget, MoveStep, PhysicalParams};

/// Height of the factory's CNOT/teleportation region above the cultivation row.
pub const FACTORY_STAGE2_HEIGHT: u64 = 4;
/// Width of the factory in patches.
pub const FACTORY_WIDTH: u64 = 12;
/// Cultivation copies that fit in one 12-patch factory row.
pub const CULTIVATION_PER_ROW: u64 = 8;
/// Fraction of time a MAJ/UMA block is busy within its reaction-limited slot.
pub const MAJ_ACTIVITY: f64 = 0.75;
/// Fraction of lookup targets touched by an average table entry.
pub const ACTIVE_TARGET_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PatchGrid {
    pub width: u64,
    pub height: u64,
}

impl PatchGrid {
    pub fn new(width: u64, height: u64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::domain(format!(
                "patch grid {width}x{height} is empty"
            )));
        }
        Ok(Self { width, height })
    }

    pub fn patches(&self) -> u64 {
        self.width * self.height
    }

    pub fn side_m(&self, d: CodeDistance, pp: &PhysicalParams) -> f64 {
        pp.patch_width_m(d)
    }
}

pub fn physical_qubits(grid: &PatchGrid, d: CodeDistance) -> u64 {
    grid.patches() * d.qubits_per_patch()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GadgetLayout {
    pub name: String,
    pub grid: PatchGrid,
    /// Patches actually populated; at most `grid.patches()`.
    pub occupied_patches: u64,
    pub schedule: Vec<CycleBudget>,
    pub max_move_patches: f64,
    pub storage_density_factor: f64,
}

impl GadgetLayout {
    pub fn physical_qubits(&self, d: CodeDistance) -> u64 {
        let raw = self.occupied_patches as f64 * d.qubits_per_patch() as f64;
        (raw / self.storage_density_factor).ceil() as u64
    }

    pub fn duration(&self, d: CodeDistance, pp: &PhysicalParams) -> Result<f64> {
        crate::physical::schedule_time(&self.schedule, d, pp)
    }

    /// Every scheduled move stays within `max_move_patches`.
    pub fn check_moves(&self) -> Result<()> {
        for (i, b) in self.schedule.iter().enumerate() {
            for s in &b.move_steps {
                if !(s.distance_patches >= 0.0)
                    || s.distance_patches > self.max_move_patches * (1.0 + 1e-12)
                {
                    return Err(Error::domain(format!(
                        "{}: stage {i} moves {} patches, limit {}",
                        self.name, s.distance_patches, self.max_move_patches
                    )));
                }
            }
        }
        if self.occupied_patches > self.grid.patches() {
            return Err(Error::domain(format!(
                "{}: more patches than grid cells",
                self.name
            )));
        }
        Ok(())
    }

    /// Writes patch coordinates and schedule stages as one CSV table.
    pub fn write_csv<W: Write>(&self, d: CodeDistance, pp: &PhysicalParams, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "gadget",
            "kind",
            "index",
            "x",
            "y",
            "gate_layers",
            "max_move_patches",
            "se_rounds",
            "duration_s",
        ])?;
        for i in 0..self.occupied_patches {
            let (x, y) = (i % self.grid.width, i / self.grid.width);
            w.write_record([
                self.name.as_str(),
                "patch",
                &i.to_string(),
                &x.to_string(),
                &y.to_string(),
                "",
                "",
                "",
                "",
            ])?;
        }
        for (i, b) in self.schedule.iter().enumerate() {
            w.write_record([
                self.name.as_str(),
                "stage",
                &i.to_string(),
                "",
                "",
                &b.gate_layers.to_string(),
                &b.max_move_patches().to_string(),
                &b.se_rounds.to_string(),
                &qec_cycle_time(b, d, pp)?.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A transversal gate layer with its move and one pipelined SE round.
pub(crate) fn gate_stage(move_patches: f64, se_rounds: u32) -> CycleBudget {
    CycleBudget {
        gate_layers: 1,
        move_steps: if move_patches > 0.0 {
            vec![MoveStep::new(move_patches, 0)]
        } else {
            Vec::new()
        },
        se_rounds,
        includes_measurement: true,
    }
}

/// Logical measurement: one round of readout that nothing overlaps.
pub(crate) fn measure_stage() -> CycleBudget {
    CycleBudget {
        gate_layers: 0,
        move_steps: Vec::new(),
        se_rounds: 1,
        includes_measurement: false,
    }
}

/// 3x2 MAJ (or UMA) block: one Toffoli followed by three auto-corrected CZ slots.
pub fn maj_block_layout(d: CodeDistance) -> GadgetLayout {
    let _ = d;
    let diag = 2f64.sqrt();
    let schedule = vec![
        gate_stage(1.0, 1),
        gate_stage(1.0, 1),
        gate_stage(diag, 1),
        gate_stage(1.0, 1),
        gate_stage(1.0, 1),
        gate_stage(1.0, 1),
    ];
    GadgetLayout {
        name: "maj".into(),
        grid: PatchGrid {
            width: 3,
            height: 2,
        },
        occupied_patches: 6,
        schedule,
        max_move_patches: diag,
        storage_density_factor: 1.0,
    }
}

/// Number of schedule slots in [`maj_block_layout`] belonging to the Toffoli.
pub const MAJ_TOFFOLI_SLOTS: usize = 3;

/// GHZ and helper patch counts for a fan-out to `targets` patches laid out in
/// rows of `ceil(sqrt(targets))`, with one grid GHZ qubit every `spacing`
/// columns and extra GHZ qubits for the expected active targets in between.
pub fn ghz_counts(targets: u64, spacing: u64) -> (u64, u64) {
    if targets <= 1 {
        return (1, 0);
    }
    let width = (targets as f64).sqrt().ceil() as u64;
    let mut grid = 0;
    let mut left = targets;
    while left > 0 {
        let row = left.min(width);
        grid += row.div_ceil(spacing);
        left -= row;
    }
    let fill = ((targets - grid) as f64 * ACTIVE_TARGET_FRACTION).ceil() as u64;
    let ghz = grid + fill;
    (ghz, ghz - 1)
}

pub fn ghz_fanout_layout(targets: u64, grid_spacing: u64, d: CodeDistance) -> Result<GadgetLayout> {
    let _ = d;
    if targets == 0 || grid_spacing == 0 {
        return Err(Error::domain(
            "fan-out needs at least one target and a positive grid spacing",
        ));
    }
    let (ghz, helpers) = ghz_counts(targets, grid_spacing);
    let s = grid_spacing as f64;
    let schedule = if targets == 1 && grid_spacing == 1 {
        vec![gate_stage(1.0, 1)]
    } else {
        vec![
            CycleBudget {
                gate_layers: 1,
                move_steps: Vec::new(),
                se_rounds: 1,
                includes_measurement: true,
            },
            gate_stage(s / 2.0, 1),
            gate_stage(s / 2.0, 1),
            measure_stage(),
            gate_stage(s, 1),
            measure_stage(),
        ]
    };
    let occupied = targets + ghz + helpers;
    let width = (targets as f64).sqrt().ceil() as u64;
    Ok(GadgetLayout {
        name: "ghz_fanout".into(),
        grid: PatchGrid::new(width, occupied.div_ceil(width))?,
        occupied_patches: occupied,
        schedule,
        max_move_patches: s.max(1.0),
        storage_density_factor: 1.0,
    })
}

/// Stage-2 schedule of the 8T-to-CCZ factory: four CNOT layers plus the
/// teleported T layer, `ceil(5 r)` SE rounds spread over them, then readout.
pub fn factory_stage2_schedule(rounds_per_layer: f64) -> Result<Vec<CycleBudget>> {
    if !(rounds_per_layer > 0.0) {
        return Err(Error::domain("SE rounds per layer must be positive"));
    }
    let layers = 5u32;
    let total = crate::physical::ceil_tolerant(layers as f64 * rounds_per_layer) as u32;
    let mut schedule: Vec<CycleBudget> = (0..layers)
        .map(|i| {
            let r = (i + 1) * total / layers - i * total / layers;
            gate_stage(1.0, r)
        })
        .collect();
    schedule.push(measure_stage());
    Ok(schedule)
}

pub fn factory_layout(d: CodeDistance, cultivation_copies: u64) -> Result<GadgetLayout> {
    factory_layout_with_rounds(d, cultivation_copies, 1.0)
}

pub fn factory_layout_with_rounds(
    d: CodeDistance,
    cultivation_copies: u64,
    rounds_per_layer: f64,
) -> Result<GadgetLayout> {
    let _ = d;
    if cultivation_copies == 0 {
        return Err(Error::domain("factory needs at least one cultivation copy"));
    }
    let rows = cultivation_copies.div_ceil(CULTIVATION_PER_ROW) + FACTORY_STAGE2_HEIGHT;
    Ok(GadgetLayout {
        name: "factory".into(),
        grid: PatchGrid::new(FACTORY_WIDTH, rows)?,
        occupied_patches: FACTORY_WIDTH * rows,
        schedule: factory_stage2_schedule(rounds_per_layer)?,
        max_move_patches: 1.0,
        storage_density_factor: 1.0,
    })
}

/// Idle register of `logical` patches, optionally compressed.
pub fn storage_layout(logical: u64, density: f64) -> Result<GadgetLayout> {
    if !(density >= 1.0) {
        return Err(Error::domain(format!(
            "storage density factor must be >= 1, got {density}"
        )));
    }
    let width = ((logical.max(1)) as f64).sqrt().ceil() as u64;
    Ok(GadgetLayout {
        name: "storage".into(),
        grid: PatchGrid::new(width, logical.max(1).div_ceil(width))?,
        occupied_patches: logical,
        schedule: Vec::new(),
        max_move_patches: 0.0,
        storage_density_factor: density,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physical::patch_move_time;
    use proptest::prelude::*;

    fn d(v: u32) -> CodeDistance {
        CodeDistance::new(v).unwrap()
    }

    #[test]
    fn qubit_counts() {
        let one = PatchGrid::new(1, 1).unwrap();
        assert_eq!(physical_qubits(&one, d(27)), 1457);
        assert_eq!(physical_qubits(&one, d(3)), 17);
        let maj = maj_block_layout(d(27));
        assert_eq!(physical_qubits(&maj.grid, d(27)), 8742);
        assert_eq!(maj.physical_qubits(d(27)), 8742);
        assert!(PatchGrid::new(0, 2).is_err());
    }

    #[test]
    fn maj_schedule() {
        let maj = maj_block_layout(d(27));
        assert_eq!(maj.max_move_patches, 2f64.sqrt());
        assert_eq!(maj.schedule.len(), MAJ_TOFFOLI_SLOTS + 3);
        assert!(maj
            .schedule
            .iter()
            .all(|b| b.se_rounds == 1 && b.gate_layers == 1));
        maj.check_moves().unwrap();
    }

    #[test]
    fn ghz_degenerate() {
        let l = ghz_fanout_layout(1, 1, d(27)).unwrap();
        assert_eq!(l.schedule.len(), 1);
        assert_eq!(l.occupied_patches, 2);
    }

    #[test]
    fn ghz_spacing_two() {
        let pp = PhysicalParams::default();
        let l = ghz_fanout_layout(2965, 2, d(27)).unwrap();
        assert_eq!(l.max_move_patches, 2.0);
        let t = patch_move_time(l.max_move_patches, d(27), &pp).unwrap();
        assert!((t * 1e6 - 686.3).abs() < 0.5, "{}", t * 1e6);
        let (ghz, helpers) = ghz_counts(2965, 2);
        let ratio = (ghz + helpers) as f64 / 2965.0;
        assert!((1.5..=2.5).contains(&ratio), "{ratio}");
        assert_eq!(l.schedule.len(), 6);
        l.check_moves().unwrap();
    }

    /// Walks the target rows one position at a time.
    fn ghz_oracle(targets: u64, spacing: u64) -> u64 {
        let width = (1..=targets).find(|w| w * w >= targets).unwrap();
        let mut grid = 0;
        let mut uncovered = 0u64;
        for t in 0..targets {
            if (t % width) % spacing == 0 {
                grid += 1;
            } else {
                uncovered += 1;
            }
        }
        grid + uncovered.div_ceil(2)
    }

    #[test]
    fn factory_dimensions() {
        let pp = PhysicalParams::default();
        let f = factory_layout(d(27), 8).unwrap();
        assert_eq!(f.grid.width, FACTORY_WIDTH);
        assert_eq!(f.grid.height, 1 + FACTORY_STAGE2_HEIGHT);
        let row_width = f.grid.width as f64 * f.grid.side_m(d(27), &pp);
        assert!((row_width - 12.0 * 27.0 * 12e-6).abs() < 1e-15);
        assert_eq!(
            factory_layout(d(27), 9).unwrap().grid.height,
            2 + FACTORY_STAGE2_HEIGHT
        );
        assert!(factory_layout(d(27), 0).is_err());
        f.check_moves().unwrap();
    }

    #[test]
    fn factory_round_distribution() {
        for (r, total) in [(1.0 / 3.0, 2), (0.5, 3), (1.0, 5), (2.0, 10), (3.0, 15)] {
            let s = factory_stage2_schedule(r).unwrap();
            let got: u32 = s[..5].iter().map(|b| b.se_rounds).sum();
            assert_eq!(got, total, "r={r}");
        }
    }

    #[test]
    fn storage_density() {
        let s = storage_layout(1000, 10.0).unwrap();
        assert_eq!(s.physical_qubits(d(27)), 145_700);
        assert!(storage_layout(10, 0.5).is_err());
    }

    #[test]
    fn layout_csv() {
        let pp = PhysicalParams::default();
        let mut buf = Vec::new();
        maj_block_layout(d(27))
            .write_csv(d(27), &pp, &mut buf)
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 6 + 6);
        assert!(text.lines().nth(1).unwrap().starts_with("maj,patch,0,0,0"));
    }

    proptest! {
        #[test]
        fn ghz_count_matches_walk(t in 1u64..3000, s in 1u64..6) {
            let (ghz, helpers) = ghz_counts(t, s);
            prop_assert_eq!(ghz, if t == 1 { 1 } else { ghz_oracle(t, s) });
            prop_assert_eq!(helpers, ghz - 1);
        }

        #[test]
        fn doubling_spacing(t in 1u64..5000, s in 1u64..8) {
            let pp = PhysicalParams::default();
            let a = ghz_fanout_layout(t, s, d(27)).unwrap();
            let b = ghz_fanout_layout(t, 2 * s, d(27)).unwrap();
            prop_assert!(b.occupied_patches <= a.occupied_patches);
            let ta = patch_move_time(a.max_move_patches, d(27), &pp).unwrap();
            let tb = patch_move_time(b.max_move_patches, d(27), &pp).unwrap();
            prop_assert!(tb >= ta);
            a.check_moves().unwrap();
            b.check_moves().unwrap();
        }

        #[test]
        fn qubits_quadratic(w in 1u64..50, h in 1u64..50, k in 1u32..40) {
            let g = PatchGrid::new(w, h).unwrap();
            let dd = d(2 * k + 1);
            prop_assert_eq!(physical_qubits(&g, dd), w * h * (2 * (dd.get() as u64).pow(2) - 1));
        }
    }
}
