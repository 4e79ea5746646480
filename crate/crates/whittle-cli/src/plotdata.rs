//! Long-format CSV for the two figure families.
//!
//! Everything is `step,series,value` so downstream plotting tools can pivot
//! on the series name; this crate never draws anything itself.

use std::io::{self, Write};
use whittle_core::harness::{lambda_labels, quantile_sorted, RunRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Index-estimate trajectories of one run, with `exact_*` reference
    /// series alongside when an exact table is supplied.
    Indices,
    /// Median running average reward, one series per record group.
    Rewards,
}

/// Flattens run records into long-format CSV rows.
///
/// `groups` pairs a series label with the records it summarizes. The
/// `indices` figure uses only the first record of the first non-empty group
/// (one trajectory per line is what the figure wants; replications belong in
/// the rewards figure). An empty record set yields just the header.
pub fn emit_plot_data<W: Write>(
    groups: &[(&str, &[RunRecord])],
    figure: Figure,
    exact: Option<&[f64]>,
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "step,series,value")?;
    match figure {
        Figure::Indices => {
            let Some(record) = groups.iter().flat_map(|(_, rs)| rs.iter()).next() else {
                return Ok(());
            };
            let labels = lambda_labels(&record.class_dims);
            for row in &record.rows {
                for (k, label) in labels.iter().enumerate() {
                    writeln!(out, "{},{},{}", row.step, label, row.lambda[k])?;
                }
                if let Some(table) = exact {
                    for (k, label) in labels.iter().enumerate() {
                        writeln!(out, "{},exact_{},{}", row.step, label, table[k])?;
                    }
                }
            }
        }
        Figure::Rewards => {
            for (label, records) in groups {
                let Some(first) = records.first() else { continue };
                for (i, row) in first.rows.iter().enumerate() {
                    let mut vals: Vec<f64> = records
                        .iter()
                        .filter_map(|r| r.rows.get(i))
                        .map(|r| r.avg_reward)
                        .collect();
                    vals.sort_by(f64::total_cmp);
                    writeln!(out, "{},{},{}", row.step, label, quantile_sorted(&vals, 0.5))?;
                }
            }
        }
    }
    Ok(())
}
