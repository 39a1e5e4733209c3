//! The six feature/aggregation/selection toggles of the ablation study.

use std::fmt::Write as _;

use super::{evaluate, fit_clouds, Aggregation, PipelineConfig};
use crate::error::{Error, Result};
use crate::features::FeatureSets;
use crate::geometry::PointCloud;

/// One configuration of the study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AblationRow {
    /// 1-based row id.
    pub id: usize,
    pub feature_sets: FeatureSets,
    pub aggregation: Aggregation,
    pub dft: bool,
}

impl AblationRow {
    /// `base` with this row's toggles. With a fixed channel count the
    /// selection size is clamped to the descriptor length, which matters for
    /// global pooling.
    pub fn apply(&self, base: &PipelineConfig) -> PipelineConfig {
        let mut config = base.clone();
        config.feature_sets = self.feature_sets;
        config.aggregation = self.aggregation;
        config.dft_enabled = self.dft;
        if config.saab_energy_threshold.is_none() {
            let available = config.descriptor_len(config.saab_channels);
            config.selection.num_selected = config.selection.num_selected.min(available);
        }
        config
    }
}

const fn sets(geometric: bool, covariance: bool, octant: bool) -> FeatureSets {
    FeatureSets {
        geometric,
        covariance,
        octant,
    }
}

/// Rows in table order: drop geometric, drop covariance, drop octant, full,
/// global pooling, no selection.
pub fn ablation_rows() -> [AblationRow; 6] {
    let full = sets(true, true, true);
    let row = |id, feature_sets, aggregation, dft| AblationRow {
        id,
        feature_sets,
        aggregation,
        dft,
    };
    [
        row(1, sets(false, true, true), Aggregation::Local, true),
        row(2, sets(true, false, true), Aggregation::Local, true),
        row(3, sets(true, true, false), Aggregation::Local, true),
        row(4, full, Aggregation::Local, true),
        row(5, full, Aggregation::Global, true),
        row(6, full, Aggregation::Local, false),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationResult {
    pub row: AblationRow,
    pub accuracy: f64,
}

/// Trains and evaluates each requested row (all six when `row_ids` is empty)
/// with the base config's rotation protocols.
pub fn run_ablation(
    train: &[PointCloud],
    test: &[PointCloud],
    class_names: &[String],
    base: &PipelineConfig,
    row_ids: &[usize],
) -> Result<Vec<AblationResult>> {
    let rows = ablation_rows();
    let chosen: Vec<AblationRow> = if row_ids.is_empty() {
        rows.to_vec()
    } else {
        row_ids
            .iter()
            .map(|&id| {
                rows.iter()
                    .find(|r| r.id == id)
                    .copied()
                    .ok_or_else(|| Error::Config(format!("ablation row {id} does not exist (1-6)")))
            })
            .collect::<Result<_>>()?
    };
    chosen
        .into_iter()
        .map(|row| {
            let config = row.apply(base);
            log::info!("ablation row {}: {}", row.id, describe(&row));
            let model = fit_clouds(train, class_names, &config)?;
            let evaluation = evaluate(&model, test, config.test_rotation)?;
            Ok(AblationResult {
                row,
                accuracy: evaluation.accuracy,
            })
        })
        .collect()
}

fn describe(row: &AblationRow) -> String {
    format!(
        "features={} aggregation={} dft={}",
        super::format_feature_sets(&row.feature_sets),
        row.aggregation,
        row.dft
    )
}

/// `config_id,geometric,covariance,octant,aggregation,dft,accuracy`.
pub fn write_ablation_csv(results: &[AblationResult]) -> String {
    let mut out = String::from("config_id,geometric,covariance,octant,aggregation,dft,accuracy\n");
    for r in results {
        let s = r.row.feature_sets;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:.6}",
            r.row.id,
            u8::from(s.geometric),
            u8::from(s.covariance),
            u8::from(s.octant),
            r.row.aggregation,
            u8::from(r.row.dft),
            r.accuracy
        );
    }
    out
}
