use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use rihop_core::pipeline::{parse_feature_sets, Aggregation};
use rihop_core::RotationProtocol;

#[derive(Debug, Parser)]
#[command(name = "rihop", version, about = "Rotation-invariant point cloud classification")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample, normalize and optionally rotate a dataset into XYZ files.
    Prepare(PrepareArgs),
    /// Train a model from a manifest.
    Fit(FitArgs),
    /// Evaluate a model on a test manifest.
    Eval(EvalArgs),
    /// Run the feature/aggregation/selection ablation.
    Ablate(AblateArgs),
    /// Write a procedural train/test dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Input manifest (`path,label` CSV).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory for XYZ files and `manifest.csv`.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Points sampled per mesh.
    #[arg(long, default_value_t = 1024)]
    pub points: usize,
    /// Rotation applied to every cloud: none, z or so3.
    #[arg(long, default_value_t = RotationProtocol::None)]
    pub rotate: RotationProtocol,
    /// Master seed for sampling and rotations.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Training hyperparameters. Field names equal the config-file keys; a flag
/// given on the command line overrides the file, which overrides the
/// defaults shown here.
#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// key=value file with any of the options below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Points sampled per mesh.
    #[arg(long, default_value_t = 1024)]
    pub points: usize,
    /// Neighbors for the geometric features.
    #[arg(long, default_value_t = 128)]
    pub k_geo: usize,
    /// Neighbors for the covariance features.
    #[arg(long, default_value_t = 32)]
    pub k_cov: usize,
    /// Neighbors for the octant features.
    #[arg(long, default_value_t = 64)]
    pub k_oct: usize,
    /// Enabled feature sets, comma separated.
    #[arg(long, default_value = "geo,cov,oct", value_parser = feature_sets)]
    pub features: String,
    /// Saab channels kept, DC included.
    #[arg(long, default_value_t = 40)]
    pub saab_channels: usize,
    /// Keep AC channels up to this energy fraction instead ("none" to disable).
    #[arg(long, default_value = "none", value_parser = optional_fraction)]
    pub saab_energy: String,
    /// Pooling: local (cones and spheres) or global.
    #[arg(long, default_value_t = Aggregation::Local)]
    pub aggregation: Aggregation,
    /// Offsets of the two sphere centers along each axis.
    #[arg(long, default_value = "0.25,0.75", value_parser = center_pair)]
    pub sphere_centers: String,
    /// Discriminant feature selection on or off.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub dft: bool,
    /// Descriptor dimensions kept by the selection.
    #[arg(long, default_value_t = 2700)]
    pub dft_top: usize,
    /// Candidate split thresholds per dimension.
    #[arg(long, default_value_t = 31)]
    pub dft_thresholds: usize,
    /// Ridge strength as a multiple of trace(XcᵀXc)/k of the centered selected features.
    #[arg(long, default_value_t = 1e-4)]
    pub ridge: f64,
    /// Rotation applied to training clouds: none, z or so3.
    #[arg(long, default_value_t = RotationProtocol::None)]
    pub train_rotation: RotationProtocol,
    /// Rotation applied to test clouds: none, z or so3.
    #[arg(long, default_value_t = RotationProtocol::None)]
    pub test_rotation: RotationProtocol,
    /// Master seed for sampling and rotations.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Training manifest.
    #[arg(long)]
    pub train: PathBuf,
    /// Where to write the model.
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Test manifest.
    #[arg(long)]
    pub test: PathBuf,
    /// Rotation applied to test clouds (default: the model's test rotation).
    #[arg(long)]
    pub rotation: Option<RotationProtocol>,
    /// Per-class metrics CSV.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Per-cloud predictions CSV.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Comma-separated row ids 1-6 (default: all).
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<usize>,
    /// CSV output (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    /// basic, all, mixed, or a comma-separated list of shape names.
    #[arg(long, default_value = "basic")]
    pub kinds: String,
    #[arg(long, default_value_t = 40)]
    pub train_per_class: usize,
    #[arg(long, default_value_t = 20)]
    pub test_per_class: usize,
    /// Points per cloud.
    #[arg(long, default_value_t = 1024)]
    pub points: usize,
    /// Seed of the training split; the test split uses seed + 1.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn feature_sets(value: &str) -> Result<String, String> {
    parse_feature_sets(value)
        .map(|_| value.to_string())
        .map_err(|e| e.to_string())
}

fn optional_fraction(value: &str) -> Result<String, String> {
    if value == "none" {
        return Ok(value.to_string());
    }
    match value.parse::<f64>() {
        Ok(t) if (0.0..=1.0).contains(&t) => Ok(value.to_string()),
        _ => Err("expected 'none' or a number in [0, 1]".into()),
    }
}

fn center_pair(value: &str) -> Result<String, String> {
    let parts: Vec<&str> = value.split(',').collect();
    if parts.len() == 2 && parts.iter().all(|p| p.trim().parse::<f64>().is_ok_and(f64::is_finite)) {
        Ok(value.to_string())
    } else {
        Err("expected two comma-separated numbers".into())
    }
}
