//! End-to-end training, prediction and evaluation.

mod ablation;
mod config;
mod model_io;

use std::path::Path;
use std::time::Instant;

use ndarray::{Array1, Array2, Axis};
use rayon::prelude::*;

pub use ablation::{ablation_rows, run_ablation, write_ablation_csv, AblationResult, AblationRow};
pub use config::{format_feature_sets, parse_feature_sets, Aggregation, PipelineConfig, CONFIG_KEYS};
pub use model_io::{load_model, model_from_bytes, model_to_bytes, save_model, FORMAT_VERSION, MAGIC};

use crate::aggregation::{aggregate_global, aggregate_regional, CloudDescriptor};
use crate::align::canonicalize;
use crate::classifier::{argmax, fit_classifier, relative_ridge, top2_margin, LinearModel};
use crate::dataset::{derive_seed, load_dataset, stream, DatasetManifest};
use crate::dft::select_features;
use crate::error::{Error, Result};
use crate::features::{point_features, PointFeatureMatrix};
use crate::geometry::{apply_rotation, normalize, random_rotation, PointCloud, RotationProtocol};
use crate::knn::NeighborIndex;
use crate::saab::{apply_saab, fit_saab_from_stats, SaabModel, SaabStats};

/// Above this many bytes of per-point features, training recomputes them in
/// the descriptor pass instead of keeping them in memory.
const FEATURE_CACHE_BYTES: usize = 2 << 30;

/// Everything needed to classify new clouds.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub config: PipelineConfig,
    pub class_names: Vec<String>,
    pub saab: SaabModel,
    /// Descriptor columns fed to the classifier, most discriminant first.
    pub selected: Vec<usize>,
    pub classifier: LinearModel,
}

impl TrainedModel {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn descriptor(&self, cloud: &PointCloud) -> Result<CloudDescriptor> {
        extract_descriptor(cloud, &self.config, &self.saab)
    }

    /// Predicted class and per-class scores.
    pub fn predict(&self, cloud: &PointCloud) -> Result<(usize, Array1<f64>)> {
        let descriptor = self.descriptor(cloud)?;
        let selected = descriptor.values.select(Axis(0), &self.selected);
        self.classifier.predict(selected.view())
    }

    pub fn predict_descriptors(&self, descriptors: &Array2<f64>) -> Result<(Vec<usize>, Array2<f64>)> {
        let selected = descriptors.select(Axis(1), &self.selected);
        self.classifier.predict_batch(selected.view())
    }
}

/// Canonical cloud plus its per-point features.
fn aligned_features(cloud: &PointCloud, config: &PipelineConfig) -> Result<(PointCloud, PointFeatureMatrix)> {
    let (aligned, _frame) = canonicalize(cloud)?;
    config.features.validate_for(aligned.len())?;
    let index = NeighborIndex::build(&aligned.points);
    let features = point_features(&aligned, &index, &config.features, &config.feature_sets)?;
    Ok((aligned, features))
}

fn pool(
    aligned: &PointCloud,
    features: &PointFeatureMatrix,
    config: &PipelineConfig,
    saab: &SaabModel,
) -> Result<CloudDescriptor> {
    let reduced = apply_saab(saab, features.values())?;
    match config.aggregation {
        Aggregation::Local => aggregate_regional(reduced.view(), &aligned.points, &config.region_set()),
        Aggregation::Global => aggregate_global(reduced.view()),
    }
}

/// normalize → principal alignment → neighbor features → Saab → pooling.
pub fn extract_descriptor(cloud: &PointCloud, config: &PipelineConfig, saab: &SaabModel) -> Result<CloudDescriptor> {
    let (aligned, features) = aligned_features(cloud, config)?;
    pool(&aligned, &features, config, saab)
}

/// Descriptors of many clouds, computed in parallel, one row per cloud.
pub fn extract_descriptors(clouds: &[PointCloud], config: &PipelineConfig, saab: &SaabModel) -> Result<Array2<f64>> {
    let rows: Vec<CloudDescriptor> = clouds
        .par_iter()
        .map(|c| extract_descriptor(c, config, saab))
        .collect::<Result<_>>()?;
    stack(rows)
}

fn stack(rows: Vec<CloudDescriptor>) -> Result<Array2<f64>> {
    let width = rows.first().map_or(0, CloudDescriptor::len);
    let mut out = Array2::zeros((rows.len(), width));
    for (mut target, row) in out.rows_mut().into_iter().zip(&rows) {
        if row.len() != width {
            return Err(Error::ShapeMismatch("descriptors differ in length".into()));
        }
        target.assign(&row.values);
    }
    Ok(out)
}

/// Normalizes every cloud and rotates it under `protocol` with a per-cloud
/// seed derived from `seed`, the cloud's position and `stream_id`.
pub fn rotate_dataset(
    clouds: &[PointCloud],
    protocol: RotationProtocol,
    seed: u64,
    stream_id: u64,
) -> Result<Vec<PointCloud>> {
    clouds
        .par_iter()
        .enumerate()
        .map(|(i, cloud)| {
            let normalized = normalize(cloud)?;
            let rotation = random_rotation(protocol, derive_seed(seed, i, stream_id));
            Ok(apply_rotation(&normalized, &rotation))
        })
        .collect()
}

fn labels_of(clouds: &[PointCloud], num_classes: usize) -> Result<Vec<usize>> {
    clouds
        .iter()
        .enumerate()
        .map(|(i, c)| match c.label {
            Some(l) if l < num_classes => Ok(l),
            Some(l) => Err(Error::InvalidInput(format!(
                "cloud {i} has label {l} outside {num_classes} classes"
            ))),
            None => Err(Error::InvalidInput(format!("cloud {i} has no label"))),
        })
        .collect()
}

/// Per-stage wall-clock seconds and the accuracy on the training set.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub stage_seconds: Vec<(&'static str, f64)>,
    pub training_accuracy: f64,
    pub descriptor_len: usize,
}

/// Trains on labelled in-memory clouds.
pub fn fit_clouds(clouds: &[PointCloud], class_names: &[String], config: &PipelineConfig) -> Result<TrainedModel> {
    fit_clouds_with_report(clouds, class_names, config).map(|(model, _)| model)
}

pub fn fit_clouds_with_report(
    clouds: &[PointCloud],
    class_names: &[String],
    config: &PipelineConfig,
) -> Result<(TrainedModel, FitReport)> {
    config.validate()?;
    let num_classes = class_names.len();
    let labels = labels_of(clouds, num_classes)?;
    let mut present = vec![false; num_classes];
    for &l in &labels {
        present[l] = true;
    }
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::InvalidInput(
            "training needs at least two classes with samples".into(),
        ));
    }

    let mut stages = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &'static str, stages: &mut Vec<(&'static str, f64)>| {
        stages.push((name, clock.elapsed().as_secs_f64()));
        log::info!("{name}: {:.2}s", clock.elapsed().as_secs_f64());
        clock = Instant::now();
    };

    let rotated = rotate_dataset(clouds, config.train_rotation, config.seed, stream::TRAIN_ROTATION)?;
    lap("rotate", &mut stages);

    // One neighbor pass per cloud; features are kept for the pooling pass
    // when they fit in memory.
    let total_rows: usize = rotated.iter().map(PointCloud::len).sum();
    let cache = total_rows * crate::features::FEATURE_DIM * 8 <= FEATURE_CACHE_BYTES;
    let per_cloud: Vec<(SaabStats, Option<(PointCloud, PointFeatureMatrix)>)> = rotated
        .par_iter()
        .map(|cloud| {
            let (aligned, features) = aligned_features(cloud, config)?;
            let stats = SaabStats::from_rows(features.values());
            Ok((stats, cache.then_some((aligned, features))))
        })
        .collect::<Result<_>>()?;
    let mut stats = SaabStats::new(crate::features::FEATURE_DIM);
    let mut cached = Vec::with_capacity(if cache { per_cloud.len() } else { 0 });
    for (s, c) in per_cloud {
        stats.merge(&s);
        cached.extend(c);
    }
    lap("point features", &mut stages);

    let saab = fit_saab_from_stats(&stats, config.channel_selection())?;
    lap("saab fit", &mut stages);

    let descriptors = if cache {
        let rows: Vec<CloudDescriptor> = cached
            .par_iter()
            .map(|(aligned, features)| pool(aligned, features, config, &saab))
            .collect::<Result<_>>()?;
        stack(rows)?
    } else {
        extract_descriptors(&rotated, config, &saab)?
    };
    drop(cached);
    lap("descriptors", &mut stages);

    let selected = if config.dft_enabled {
        select_features(descriptors.view(), &labels, num_classes, &config.selection)?
    } else {
        (0..descriptors.ncols()).collect()
    };
    lap("feature selection", &mut stages);

    let x = descriptors.select(Axis(1), &selected);
    let lambda = relative_ridge(x.view(), config.ridge);
    let classifier = fit_classifier(x.view(), &labels, num_classes, lambda)?;
    lap("classifier", &mut stages);

    let (predicted, _) = classifier.predict_batch(x.view())?;
    let correct = predicted.iter().zip(&labels).filter(|(p, l)| p == l).count();
    let report = FitReport {
        stage_seconds: stages,
        training_accuracy: correct as f64 / labels.len() as f64,
        descriptor_len: descriptors.ncols(),
    };
    let model = TrainedModel {
        config: config.clone(),
        class_names: class_names.to_vec(),
        saab,
        selected,
        classifier,
    };
    Ok((model, report))
}

/// Loads, samples and trains from a manifest.
pub fn fit_pipeline(manifest: &DatasetManifest, config: &PipelineConfig) -> Result<TrainedModel> {
    fit_pipeline_with_report(manifest, config).map(|(model, _)| model)
}

pub fn fit_pipeline_with_report(
    manifest: &DatasetManifest,
    config: &PipelineConfig,
) -> Result<(TrainedModel, FitReport)> {
    let clouds = load_dataset(manifest, config.points_per_cloud, config.seed)?;
    fit_clouds_with_report(&clouds, &manifest.class_names, config)
}

/// Test-set metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `None` for classes without test samples.
    pub per_class_accuracy: Vec<Option<f64>>,
    /// `confusion[truth][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub predictions: Vec<usize>,
    pub labels: Vec<usize>,
    /// Gap between the two best class scores per cloud.
    pub margins: Vec<f64>,
}

impl Evaluation {
    pub fn from_predictions(
        predictions: Vec<usize>,
        labels: Vec<usize>,
        margins: Vec<f64>,
        num_classes: usize,
    ) -> Self {
        let mut confusion = vec![vec![0usize; num_classes]; num_classes];
        for (&p, &l) in predictions.iter().zip(&labels) {
            confusion[l][p] += 1;
        }
        let correct: usize = (0..num_classes).map(|c| confusion[c][c]).sum();
        let per_class_accuracy = confusion
            .iter()
            .enumerate()
            .map(|(c, row)| {
                let support: usize = row.iter().sum();
                (support > 0).then(|| row[c] as f64 / support as f64)
            })
            .collect();
        Evaluation {
            accuracy: if labels.is_empty() {
                0.0
            } else {
                correct as f64 / labels.len() as f64
            },
            per_class_accuracy,
            confusion,
            predictions,
            labels,
            margins,
        }
    }

    /// `class,support,correct,accuracy` rows plus an `overall` row.
    pub fn metrics_csv(&self, class_names: &[String]) -> String {
        let mut out = String::from("class,support,correct,accuracy\n");
        for (c, name) in class_names.iter().enumerate() {
            let support: usize = self.confusion[c].iter().sum();
            let accuracy = self.per_class_accuracy[c].map_or(String::new(), |a| format!("{a:.6}"));
            out.push_str(&format!("{name},{support},{},{accuracy}\n", self.confusion[c][c]));
        }
        let correct: usize = (0..class_names.len()).map(|c| self.confusion[c][c]).sum();
        out.push_str(&format!(
            "overall,{},{correct},{:.6}\n",
            self.labels.len(),
            self.accuracy
        ));
        out
    }

    /// Human-readable summary with the confusion matrix.
    pub fn report(&self, class_names: &[String]) -> String {
        let mut out = format!(
            "accuracy: {:.2}% ({} clouds)\n\nper class:\n",
            100.0 * self.accuracy,
            self.labels.len()
        );
        let width = class_names.iter().map(String::len).max().unwrap_or(5).max(5);
        for (c, name) in class_names.iter().enumerate() {
            match self.per_class_accuracy[c] {
                Some(a) => out.push_str(&format!("  {name:width$}  {:6.2}%\n", 100.0 * a)),
                None => out.push_str(&format!("  {name:width$}       -\n")),
            }
        }
        out.push_str("\nconfusion (rows: truth, columns: predicted):\n");
        for (c, row) in self.confusion.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:4}")).collect();
            out.push_str(&format!("  {:width$} {}\n", class_names[c], cells.join("")));
        }
        out
    }
}

/// Rotates the test clouds under `protocol` and classifies them.
pub fn evaluate(model: &TrainedModel, clouds: &[PointCloud], protocol: RotationProtocol) -> Result<Evaluation> {
    let labels = labels_of(clouds, model.num_classes())?;
    let rotated = rotate_dataset(clouds, protocol, model.config.seed, stream::TEST_ROTATION)?;
    let descriptors = extract_descriptors(&rotated, &model.config, &model.saab)?;
    let (predictions, scores) = model.predict_descriptors(&descriptors)?;
    let margins = scores.rows().into_iter().map(top2_margin).collect();
    debug_assert!(scores
        .rows()
        .into_iter()
        .zip(&predictions)
        .all(|(s, &p)| argmax(s) == p));
    Ok(Evaluation::from_predictions(
        predictions,
        labels,
        margins,
        model.num_classes(),
    ))
}

/// Mesh-sampling seed for test manifests, kept apart from the training one
/// so a file listed in both splits is not sampled identically.
pub fn test_sampling_seed(seed: u64) -> u64 {
    seed ^ 0x7E57_0000_0000_7E57
}

/// Loads a test manifest with its labels mapped onto `class_names`.
pub fn load_test_set(
    manifest_path: impl AsRef<Path>,
    class_names: &[String],
    config: &PipelineConfig,
) -> Result<(DatasetManifest, Vec<PointCloud>)> {
    let manifest = DatasetManifest::load_with_classes(manifest_path, Some(class_names))?;
    let clouds = load_dataset(&manifest, config.points_per_cloud, test_sampling_seed(config.seed))?;
    Ok((manifest, clouds))
}

/// Evaluates on a manifest whose labels are mapped onto the model's classes.
pub fn evaluate_manifest(
    model: &TrainedModel,
    manifest_path: impl AsRef<Path>,
    protocol: RotationProtocol,
) -> Result<Evaluation> {
    let (_, clouds) = load_test_set(manifest_path, &model.class_names, &model.config)?;
    evaluate(model, &clouds, protocol)
}
