//! Markdown and CSV output.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::distance::CodeDistance;
use crate::error::Result;
use crate::layout::{
    factory_layout_with_rounds, ghz_fanout_layout, maj_block_layout, GadgetLayout,
    CULTIVATION_PER_ROW,
};
use crate::shor::{EstimateReport, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakdownRow {
    pub phase: String,
    pub component: String,
    pub qubits: u64,
    /// Fraction of the total logical error.
    pub error_share: f64,
}

pub fn breakdown_rows(r: &EstimateReport) -> Vec<BreakdownRow> {
    r.breakdown
        .iter()
        .map(|c| BreakdownRow {
            phase: c.phase.clone(),
            component: c.component.clone(),
            qubits: c.qubits,
            error_share: if r.total_error > 0.0 {
                c.error / r.total_error
            } else {
                0.0
            },
        })
        .collect()
}

/// Writes serializable rows as CSV with a header.
pub fn write_csv<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn render_markdown(r: &EstimateReport) -> String {
    let mut s = String::new();
    let status = if r.feasible() {
        "feasible"
    } else {
        "INFEASIBLE"
    };
    let _ = writeln!(s, "# Resource estimate ({status})\n");
    let _ = writeln!(s, "| quantity | value |\n|---|---|");
    let rows = [
        (
            "physical qubits",
            format!("{:.2} million", r.total_physical_qubits as f64 / 1e6),
        ),
        (
            "runtime",
            format!("{:.2} days ({:.3e} s)", r.runtime_days(), r.runtime_s),
        ),
        (
            "space-time volume",
            format!("{:.3e} qubit-s", r.spacetime_volume),
        ),
        ("code distance", r.d.to_string()),
        ("lookup-additions", r.lookup_addition_count.to_string()),
        ("CCZ states", format!("{:.3e}", r.ccz_count as f64)),
        (
            "lookup + unlookup",
            format!("{:.4} s + {:.4} s", r.lookup_time_s, r.unlookup_time_s),
        ),
        ("addition", format!("{:.4} s", r.addition_time_s)),
        (
            "lookup-phase qubits",
            format!("{:.2} million", r.lookup_phase_qubits as f64 / 1e6),
        ),
        (
            "addition-phase qubits",
            format!("{:.2} million", r.addition_phase_qubits as f64 / 1e6),
        ),
        (
            "storage SE interval",
            format!("{:.2} ms", r.storage_interval_s * 1e3),
        ),
        ("total logical error", format!("{:.4}", r.total_error)),
        ("  from CCZ states", format!("{:.4}", r.ccz_error)),
        (
            "  from Clifford and idling",
            format!("{:.4}", r.clifford_error),
        ),
        ("  from runways", format!("{:.3e}", r.runway_error)),
    ];
    for (k, v) in rows {
        let _ = writeln!(s, "| {k} | {v} |");
    }

    let _ = writeln!(s, "\n## Factory\n");
    let _ = writeln!(s, "| quantity | value |\n|---|---|");
    let rows = [
        ("distance", r.factory_d.to_string()),
        (
            "SE rounds per layer",
            format!("{}", r.factory_se_rounds_per_layer),
        ),
        ("cycle", format!("{:.3} ms", r.factory_cycle_s * 1e3)),
        ("throughput", format!("{:.1} CCZ/s", r.factory_throughput)),
        ("qubits per factory", r.factory_qubits.to_string()),
        (
            "factories (lookup / addition)",
            format!("{} / {}", r.factories_lookup, r.factories_addition),
        ),
        (
            "CCZ error (target / achieved)",
            format!("{:.3e} / {:.3e}", r.per_ccz_target, r.per_ccz_error),
        ),
    ];
    for (k, v) in rows {
        let _ = writeln!(s, "| {k} | {v} |");
    }

    let _ = writeln!(s, "\n## Breakdown\n");
    let _ = writeln!(
        s,
        "| phase | component | qubits | error share |\n|---|---|---:|---:|"
    );
    for b in breakdown_rows(r) {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {:.4} |",
            b.phase, b.component, b.qubits, b.error_share
        );
    }

    if !r.violations.is_empty() {
        let _ = writeln!(s, "\n## Violations\n");
        for v in &r.violations {
            let _ = writeln!(s, "- {v}");
        }
    }
    let _ = writeln!(s, "\n## Assumptions\n");
    for a in &r.assumptions {
        let _ = writeln!(s, "- {a}");
    }
    s
}

/// Gadget layouts of a scenario, each with the distance it runs at.
pub fn scenario_layouts(
    s: &Scenario,
    r: &EstimateReport,
) -> Result<Vec<(GadgetLayout, CodeDistance)>> {
    let d = s.algorithm.d;
    let factory_d = CodeDistance::new(r.factory_d)?;
    let targets = s.algorithm.adder().padded_bits();
    Ok(vec![
        (maj_block_layout(d), d),
        (ghz_fanout_layout(targets, s.lookup.ghz_grid_spacing, d)?, d),
        (
            factory_layout_with_rounds(
                factory_d,
                CULTIVATION_PER_ROW,
                r.factory_se_rounds_per_layer,
            )?,
            factory_d,
        ),
    ])
}

/// Writes one `<name>.csv` per gadget into `dir`.
pub fn emit_layouts(s: &Scenario, r: &EstimateReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (layout, d) in scenario_layouts(s, r)? {
        let path = dir.join(format!("{}.csv", layout.name));
        let file = std::fs::File::create(&path)?;
        layout.write_csv(d, &s.physical, std::io::BufWriter::new(file))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shor::estimate;

    #[test]
    fn shares_sum_to_one() {
        let r = estimate(&Scenario::rsa2048()).unwrap();
        let total: f64 = breakdown_rows(&r).iter().map(|b| b.error_share).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn markdown_headline() {
        let r = estimate(&Scenario::rsa2048()).unwrap();
        let md = render_markdown(&r);
        assert!(md.contains("physical qubits"));
        assert!(md.contains("days"));
        assert!(md.contains("| addition | factories |"));
    }

    #[test]
    fn csv_header() {
        let r = estimate(&Scenario::rsa2048()).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &breakdown_rows(&r)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("phase,component,qubits,error_share\n"));
    }

    #[test]
    fn layouts_are_written() {
        let s = Scenario::rsa2048();
        let r = estimate(&s).unwrap();
        let dir = std::env::temp_dir().join(format!("layouts-{}", std::process::id()));
        let files = emit_layouts(&s, &r, &dir).unwrap();
        assert_eq!(files.len(), 3);
        for f in &files {
            let text = std::fs::read_to_string(f).unwrap();
            assert!(text.lines().count() > 1);
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
