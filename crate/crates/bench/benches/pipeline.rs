use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ndarray::Array2;

use rihop_core::aggregation::{aggregate_regional, RegionSet};
use rihop_core::align::canonicalize;
use rihop_core::dft::{select_features, SelectionConfig};
use rihop_core::features::{point_features, FeatureConfig, FeatureSets};
use rihop_core::knn::NeighborIndex;
use rihop_core::pipeline::{fit_clouds, PipelineConfig};
use rihop_core::synthetic::{ShapeKind, SyntheticDataset};
use rihop_core::PointCloud;

fn aligned_cloud(n: usize) -> PointCloud {
    let data = SyntheticDataset::generate(&[ShapeKind::Torus, ShapeKind::Cone], 1, n, 1);
    canonicalize(&data.clouds[0]).unwrap().0
}

fn knn(c: &mut Criterion) {
    let mut group = c.benchmark_group("knn");
    for n in [1024, 2048] {
        let cloud = aligned_cloud(n);
        group.bench_with_input(BenchmarkId::new("build", n), &cloud, |b, cloud| {
            b.iter(|| NeighborIndex::build(black_box(&cloud.points)))
        });
        let index = NeighborIndex::build(&cloud.points);
        group.bench_with_input(BenchmarkId::new("all_points_k128", n), &index, |b, index| {
            b.iter(|| {
                for i in 0..index.len() {
                    black_box(index.query_point(i, 128, false));
                }
            })
        });
    }
    group.finish();
}

fn features(c: &mut Criterion) {
    let cloud = aligned_cloud(1024);
    let index = NeighborIndex::build(&cloud.points);
    let config = FeatureConfig::default();
    c.bench_function("point_features_1024", |b| {
        b.iter(|| point_features(black_box(&cloud), &index, &config, &FeatureSets::default()).unwrap())
    });
}

fn aggregation(c: &mut Criterion) {
    let cloud = aligned_cloud(1024);
    let features = Array2::from_shape_fn((1024, 40), |(i, j)| ((i * 40 + j) as f64 * 0.37).sin());
    let regions = RegionSet::default();
    c.bench_function("regional_pooling_1024x40", |b| {
        b.iter(|| aggregate_regional(black_box(features.view()), &cloud.points, &regions).unwrap())
    });
}

fn dft(c: &mut Criterion) {
    let (m, f, classes) = (400, 4800, 10);
    let labels: Vec<usize> = (0..m).map(|i| i % classes).collect();
    let descriptors = Array2::from_shape_fn((m, f), |(i, j)| {
        ((i * 7919 + j * 104_729) as f64 * 1e-3).sin() + 0.01 * (labels[i] * (j % 5)) as f64
    });
    let config = SelectionConfig::default();
    let mut group = c.benchmark_group("dft");
    group.sample_size(10);
    group.bench_function("select_400x4800", |b| {
        b.iter(|| select_features(black_box(descriptors.view()), &labels, classes, &config).unwrap())
    });
    group.finish();
}

fn end_to_end(c: &mut Criterion) {
    let data = SyntheticDataset::generate(&ShapeKind::BASIC, 10, 512, 2);
    let mut config = PipelineConfig {
        points_per_cloud: 512,
        ..PipelineConfig::default()
    };
    config.selection.num_selected = 1000;
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    group.bench_function("fit_40_clouds_512", |b| {
        b.iter(|| fit_clouds(black_box(&data.clouds), &data.class_names, &config).unwrap())
    });
    group.finish();
}

criterion_group!(benches, knn, features, aggregation, dft, end_to_end);
criterion_main!(benches);
