use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::parser::ValueSource;
use clap::ArgMatches;
use log::info;

use rihop_core::dataset::{derive_seed, load_dataset, stream, write_xyz, DatasetManifest, ManifestEntry};
use rihop_core::geometry::{apply_rotation, normalize, random_rotation};
use rihop_core::pipeline::{
    evaluate, fit_pipeline_with_report, load_model, load_test_set, run_ablation, save_model, write_ablation_csv,
    PipelineConfig, CONFIG_KEYS,
};
use rihop_core::synthetic::{ShapeKind, SyntheticDataset};

use crate::args::{AblateArgs, EvalArgs, FitArgs, PipelineArgs, PrepareArgs, SynthArgs};

/// Defaults, then the config file, then flags given explicitly.
pub fn pipeline_config(args: &PipelineArgs, matches: &ArgMatches) -> Result<PipelineConfig> {
    let mut config = PipelineConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        config
            .apply_kv(&text)
            .with_context(|| format!("in config file {}", path.display()))?;
    }
    for key in CONFIG_KEYS {
        if matches.value_source(key) != Some(ValueSource::CommandLine) {
            continue;
        }
        let raw = matches
            .get_raw(key)
            .and_then(|mut values| values.next())
            .and_then(|v| v.to_str())
            .context("flag value is not UTF-8")?;
        config.set(key, raw)?;
    }
    config.validate()?;
    Ok(config)
}

pub fn prepare(args: &PrepareArgs) -> Result<()> {
    let manifest = DatasetManifest::load(&args.manifest)?;
    let clouds = load_dataset(&manifest, args.points, args.seed)?;
    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;

    let mut entries = Vec::with_capacity(clouds.len());
    for (i, (cloud, entry)) in clouds.iter().zip(&manifest.entries).enumerate() {
        let normalized = normalize(cloud)?;
        let rotation = random_rotation(args.rotate, derive_seed(args.seed, i, stream::PREPARE_ROTATION));
        let prepared = apply_rotation(&normalized, &rotation);
        let class_dir = args.out_dir.join(&manifest.class_names[entry.label]);
        fs::create_dir_all(&class_dir).with_context(|| format!("creating {}", class_dir.display()))?;
        let stem = entry.path.file_stem().and_then(|s| s.to_str()).unwrap_or("cloud");
        let path = class_dir.join(format!("{stem}_{i:05}.xyz"));
        write_xyz(&path, &prepared)?;
        entries.push(ManifestEntry {
            path,
            label: entry.label,
        });
    }
    let out = DatasetManifest::new(entries, manifest.class_names.clone())?;
    let out_path = args.out_dir.join("manifest.csv");
    out.save(&out_path)?;
    info!("wrote {} clouds and {}", out.entries.len(), out_path.display());
    Ok(())
}

pub fn fit(args: &FitArgs, matches: &ArgMatches) -> Result<()> {
    let config = pipeline_config(&args.pipeline, matches)?;
    let manifest = DatasetManifest::load(&args.train)?;
    info!(
        "training on {} clouds, {} classes",
        manifest.entries.len(),
        manifest.class_names.len()
    );
    let (model, report) = fit_pipeline_with_report(&manifest, &config)?;
    save_model(&model, &args.model)?;

    println!("stage timings:");
    for (stage, seconds) in &report.stage_seconds {
        println!("  {stage:<18} {seconds:8.2}s");
    }
    println!(
        "descriptor {} -> {} selected dimensions",
        report.descriptor_len,
        model.selected.len()
    );
    println!("training accuracy: {:.2}%", 100.0 * report.training_accuracy);
    println!("model written to {}", args.model.display());
    Ok(())
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let protocol = args.rotation.unwrap_or(model.config.test_rotation);
    let (manifest, clouds) = load_test_set(&args.test, &model.class_names, &model.config)?;
    let evaluation = evaluate(&model, &clouds, protocol)?;
    println!("rotation: {protocol}");
    print!("{}", evaluation.report(&model.class_names));

    if let Some(path) = &args.metrics {
        write_file(path, &evaluation.metrics_csv(&model.class_names))?;
    }
    if let Some(path) = &args.predictions {
        let mut csv = String::from("path,label,predicted,margin\n");
        for (i, entry) in manifest.entries.iter().enumerate() {
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                entry.path.display(),
                model.class_names[evaluation.labels[i]],
                model.class_names[evaluation.predictions[i]],
                evaluation.margins[i]
            );
        }
        write_file(path, &csv)?;
    }
    Ok(())
}

pub fn ablate(args: &AblateArgs, matches: &ArgMatches) -> Result<()> {
    let base = pipeline_config(&args.pipeline, matches)?;
    let train = DatasetManifest::load(&args.train)?;
    let train_clouds = load_dataset(&train, base.points_per_cloud, base.seed)?;
    let (_, test_clouds) = load_test_set(&args.test, &train.class_names, &base)?;
    let results = run_ablation(&train_clouds, &test_clouds, &train.class_names, &base, &args.grid)?;
    let csv = write_ablation_csv(&results);
    match &args.out {
        Some(path) => write_file(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn parse_kinds(spec: &str) -> Result<Vec<ShapeKind>> {
    Ok(match spec {
        "basic" => ShapeKind::BASIC.to_vec(),
        "all" => ShapeKind::ALL.to_vec(),
        "mixed" => ShapeKind::MIXED.to_vec(),
        list => list
            .split(',')
            .map(|name| {
                ShapeKind::from_name(name.trim())
                    .ok_or_else(|| rihop_core::Error::Config(format!("unknown shape '{name}'")))
            })
            .collect::<std::result::Result<_, _>>()?,
    })
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let kinds = parse_kinds(&args.kinds)?;
    if kinds.len() < 2 {
        bail!(rihop_core::Error::Config("at least two shape kinds are needed".into()));
    }
    for (split, per_class, seed) in [
        ("train", args.train_per_class, args.seed),
        ("test", args.test_per_class, args.seed.wrapping_add(1)),
    ] {
        let data = SyntheticDataset::generate(&kinds, per_class, args.points, seed);
        let mut entries = Vec::with_capacity(data.clouds.len());
        for (i, cloud) in data.clouds.iter().enumerate() {
            let label = cloud.label.expect("synthetic clouds are labelled");
            let dir: PathBuf = args.out_dir.join(split).join(&data.class_names[label]);
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(format!("{i:05}.xyz"));
            write_xyz(&path, cloud)?;
            entries.push(ManifestEntry { path, label });
        }
        let manifest = DatasetManifest::new(entries, data.class_names.clone())?;
        let path = args.out_dir.join(format!("{split}.csv"));
        manifest.save(&path)?;
        info!("wrote {} {split} clouds and {}", manifest.entries.len(), path.display());
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
