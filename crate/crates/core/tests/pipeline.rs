use std::fs;
use std::path::Path;

use ndarray::Axis;
use rihop_core::dataset::{DatasetManifest, ManifestEntry};
use rihop_core::pipeline::{
    evaluate, extract_descriptors, fit_clouds, fit_clouds_with_report, fit_pipeline, load_model, model_from_bytes,
    model_to_bytes, save_model, Aggregation, PipelineConfig,
};
use rihop_core::synthetic::{ShapeKind, SyntheticDataset};
use rihop_core::{Error, RotationProtocol};

fn small_config() -> PipelineConfig {
    let mut config = PipelineConfig {
        points_per_cloud: 256,
        train_rotation: RotationProtocol::So3,
        ..PipelineConfig::default()
    };
    config.selection.num_selected = 300;
    config
}

fn toy() -> SyntheticDataset {
    SyntheticDataset::generate(&ShapeKind::BASIC, 5, 256, 7)
}

#[test]
fn single_and_batch_prediction_agree() {
    let data = toy();
    let (model, report) = fit_clouds_with_report(&data.clouds, &data.class_names, &small_config()).unwrap();
    assert_eq!(report.descriptor_len, 4800);
    assert_eq!(model.selected.len(), 300);
    assert_eq!(report.training_accuracy, 1.0);
    let stages: Vec<&str> = report.stage_seconds.iter().map(|(s, _)| *s).collect();
    assert_eq!(
        stages,
        [
            "rotate",
            "point features",
            "saab fit",
            "descriptors",
            "feature selection",
            "classifier"
        ]
    );

    let evaluation = evaluate(&model, &data.clouds, RotationProtocol::None).unwrap();
    for (cloud, &predicted) in data.clouds.iter().zip(&evaluation.predictions) {
        assert_eq!(model.predict(cloud).unwrap().0, predicted);
    }
    let total: usize = evaluation.confusion.iter().flatten().sum();
    assert_eq!(total, data.clouds.len());
    assert!(evaluation.margins.iter().all(|&m| m >= 0.0));
}

#[test]
fn descriptors_follow_model_layout() {
    let data = toy();
    let model = fit_clouds(&data.clouds, &data.class_names, &small_config()).unwrap();
    let descriptors = extract_descriptors(&data.clouds[..3], &model.config, &model.saab).unwrap();
    assert_eq!(descriptors.dim(), (3, 4800));
    let single = model.descriptor(&data.clouds[1]).unwrap();
    assert_eq!(descriptors.index_axis(Axis(0), 1), single.values);
}

#[test]
fn global_pooling_and_no_selection() {
    let data = toy();
    let mut config = small_config();
    config.aggregation = Aggregation::Global;
    config.dft_enabled = false;
    let model = fit_clouds(&data.clouds, &data.class_names, &config).unwrap();
    assert_eq!(model.selected, (0..160).collect::<Vec<_>>());

    config.dft_enabled = true;
    config.selection.num_selected = 161;
    assert!(matches!(
        fit_clouds(&data.clouds, &data.class_names, &config),
        Err(Error::Config(_))
    ));
}

#[test]
fn energy_threshold_picks_channel_count() {
    let data = toy();
    let mut config = small_config();
    config.saab_energy_threshold = Some(0.9);
    config.dft_enabled = false;
    let model = fit_clouds(&data.clouds, &data.class_names, &config).unwrap();
    let channels = model.saab.num_channels();
    assert!(channels > 1 && channels < 68);
    assert_eq!(model.selected.len(), 120 * channels);
}

#[test]
fn training_input_errors() {
    let data = toy();
    let one_class: Vec<_> = data.clouds.iter().filter(|c| c.label == Some(0)).cloned().collect();
    assert!(matches!(
        fit_clouds(&one_class, &data.class_names, &small_config()),
        Err(Error::InvalidInput(_))
    ));

    let mut unlabeled = data.clouds.clone();
    unlabeled[2].label = None;
    assert!(fit_clouds(&unlabeled, &data.class_names, &small_config()).is_err());

    let mut config = small_config();
    config.features.k_geometric = 300;
    assert!(matches!(
        fit_clouds(&data.clouds, &data.class_names, &config),
        Err(Error::Config(_))
    ));
}

#[test]
fn model_file_round_trip_and_corruption() {
    let data = toy();
    let model = fit_clouds(&data.clouds, &data.class_names, &small_config()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.bin");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded, model);

    let bytes = fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"S3I1");
    for position in [4, 40, bytes.len() / 2, bytes.len() - 1] {
        let mut corrupt = bytes.clone();
        corrupt[position] ^= 0x10;
        assert!(
            matches!(model_from_bytes(&corrupt), Err(Error::Checksum)),
            "byte {position}"
        );
    }
    assert!(matches!(
        model_from_bytes(&bytes[..bytes.len() - 3]),
        Err(Error::Checksum)
    ));
    assert!(matches!(model_from_bytes(b"nope"), Err(Error::ModelFormat(_))));
    assert_eq!(model_to_bytes(&loaded), bytes);
}

fn write_box_off(path: &Path, size: [f64; 3]) {
    let mut text = String::from("OFF\n8 12 0\n");
    for c in 0..8 {
        let s = |bit: usize| if c & bit != 0 { 0.5 } else { -0.5 };
        text.push_str(&format!("{} {} {}\n", s(4) * size[0], s(2) * size[1], s(1) * size[2]));
    }
    for q in [
        [0, 1, 3, 2],
        [4, 6, 7, 5],
        [0, 4, 5, 1],
        [2, 3, 7, 6],
        [0, 2, 6, 4],
        [1, 5, 7, 3],
    ] {
        text.push_str(&format!("3 {} {} {}\n3 {} {} {}\n", q[0], q[1], q[2], q[0], q[2], q[3]));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn trains_from_off_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut entries = Vec::new();
    for i in 0..6 {
        let t = 1.0 + 0.05 * i as f64;
        let slab = dir.path().join(format!("slab_{i}.off"));
        write_box_off(&slab, [2.0 * t, 1.0, 0.1]);
        entries.push(ManifestEntry { path: slab, label: 1 });
        let rod = dir.path().join(format!("rod_{i}.off"));
        write_box_off(&rod, [2.0 * t, 0.3, 0.25]);
        entries.push(ManifestEntry { path: rod, label: 0 });
    }
    let manifest = DatasetManifest::new(entries, vec!["rod".into(), "slab".into()]).unwrap();
    let manifest_path = dir.path().join("train.csv");
    manifest.save(&manifest_path).unwrap();
    let text = fs::read_to_string(&manifest_path).unwrap();
    assert!(text.starts_with("path,label\nslab_0.off,slab\n"), "{text}");

    let reloaded = DatasetManifest::load(&manifest_path).unwrap();
    let mut config = small_config();
    config.selection.num_selected = 200;
    let model = fit_pipeline(&reloaded, &config).unwrap();
    assert_eq!(model.class_names, ["rod", "slab"]);
    let evaluation = rihop_core::pipeline::evaluate_manifest(&model, &manifest_path, RotationProtocol::So3).unwrap();
    assert_eq!(evaluation.accuracy, 1.0);
}
