use std::fmt::Write as _;
use std::str::FromStr;

use crate::aggregation::RegionSet;
use crate::dft::SelectionConfig;
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureSets};
use crate::geometry::RotationProtocol;
use crate::saab::ChannelSelection;

/// How per-point features are pooled into a cloud descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// 12 cones and 12 spheres, five statistics each.
    #[default]
    Local,
    /// All points at once, four statistics.
    Global,
}

impl std::fmt::Display for Aggregation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Aggregation::Local => "local",
            Aggregation::Global => "global",
        })
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local" => Ok(Aggregation::Local),
            "global" => Ok(Aggregation::Global),
            other => Err(Error::Config(format!(
                "aggregation must be local or global, got '{other}'"
            ))),
        }
    }
}

/// Every knob of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub points_per_cloud: usize,
    pub features: FeatureConfig,
    pub feature_sets: FeatureSets,
    pub saab_channels: usize,
    /// When set, overrides `saab_channels` with an energy criterion.
    pub saab_energy_threshold: Option<f64>,
    pub aggregation: Aggregation,
    pub sphere_centers: [f64; 2],
    pub dft_enabled: bool,
    pub selection: SelectionConfig,
    /// Ridge strength relative to `trace(XcᵀXc) / k` of the selected features.
    pub ridge: f64,
    pub train_rotation: RotationProtocol,
    pub test_rotation: RotationProtocol,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            points_per_cloud: 1024,
            features: FeatureConfig::default(),
            feature_sets: FeatureSets::default(),
            saab_channels: 40,
            saab_energy_threshold: None,
            aggregation: Aggregation::Local,
            sphere_centers: [0.25, 0.75],
            dft_enabled: true,
            selection: SelectionConfig::default(),
            ridge: 1e-4,
            train_rotation: RotationProtocol::None,
            test_rotation: RotationProtocol::None,
            seed: 0,
        }
    }
}

/// Keys accepted by [`PipelineConfig::set`], in serialization order.
pub const CONFIG_KEYS: [&str; 16] = [
    "points",
    "k_geo",
    "k_cov",
    "k_oct",
    "features",
    "saab_channels",
    "saab_energy",
    "aggregation",
    "sphere_centers",
    "dft",
    "dft_top",
    "dft_thresholds",
    "ridge",
    "train_rotation",
    "test_rotation",
    "seed",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key}: cannot parse '{value}': {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        other => Err(Error::Config(format!("{key}: expected a boolean, got '{other}'"))),
    }
}

pub fn parse_feature_sets(value: &str) -> Result<FeatureSets> {
    let mut sets = FeatureSets {
        geometric: false,
        covariance: false,
        octant: false,
    };
    for token in value.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match token {
            "geo" | "geometric" => sets.geometric = true,
            "cov" | "covariance" | "eigen" => sets.covariance = true,
            "oct" | "octant" => sets.octant = true,
            other => return Err(Error::Config(format!("unknown feature set '{other}'"))),
        }
    }
    if !sets.any() {
        return Err(Error::Config("at least one feature set must be enabled".into()));
    }
    Ok(sets)
}

pub fn format_feature_sets(sets: &FeatureSets) -> String {
    let mut names = Vec::new();
    if sets.geometric {
        names.push("geo");
    }
    if sets.covariance {
        names.push("cov");
    }
    if sets.octant {
        names.push("oct");
    }
    names.join(",")
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.features.validate()?;
        if !self.feature_sets.any() {
            return Err(Error::Config("at least one feature set must be enabled".into()));
        }
        if self.points_per_cloud == 0 {
            return Err(Error::Config("points must be positive".into()));
        }
        if self.saab_channels == 0 || self.saab_channels > crate::features::FEATURE_DIM {
            return Err(Error::Config(format!(
                "saab_channels must be in 1..={}",
                crate::features::FEATURE_DIM
            )));
        }
        if let Some(t) = self.saab_energy_threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Config(format!("saab_energy must be in [0, 1], got {t}")));
            }
        }
        if self.selection.num_selected == 0 || self.selection.num_candidate_thresholds == 0 {
            return Err(Error::Config("dft_top and dft_thresholds must be positive".into()));
        }
        if !self.ridge.is_finite() || self.ridge < 0.0 {
            return Err(Error::Config(format!("ridge must be non-negative, got {}", self.ridge)));
        }
        if !self.sphere_centers.iter().all(|c| c.is_finite()) {
            return Err(Error::Config("sphere centers must be finite".into()));
        }
        Ok(())
    }

    pub fn channel_selection(&self) -> ChannelSelection {
        match self.saab_energy_threshold {
            Some(t) => ChannelSelection::EnergyThreshold(t),
            None => ChannelSelection::Fixed(self.saab_channels),
        }
    }

    pub fn region_set(&self) -> RegionSet {
        RegionSet::with_sphere_centers(self.sphere_centers, 0.25)
    }

    /// Descriptor length for `channels` Saab channels.
    pub fn descriptor_len(&self, channels: usize) -> usize {
        match self.aggregation {
            Aggregation::Local => self.region_set().descriptor_len(channels),
            Aggregation::Global => crate::aggregation::GLOBAL_STATS * channels,
        }
    }

    /// Sets one field from its textual key. Hyphens and underscores are
    /// interchangeable in keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "points" => self.points_per_cloud = parse(&key, value)?,
            "k_geo" => self.features.k_geometric = parse(&key, value)?,
            "k_cov" => self.features.k_covariance = parse(&key, value)?,
            "k_oct" => self.features.k_octant = parse(&key, value)?,
            "features" => self.feature_sets = parse_feature_sets(value)?,
            "saab_channels" => self.saab_channels = parse(&key, value)?,
            "saab_energy" => {
                self.saab_energy_threshold = match value {
                    "none" | "" => None,
                    v => Some(parse(&key, v)?),
                }
            }
            "aggregation" => self.aggregation = value.parse()?,
            "sphere_centers" => {
                let parts: Vec<f64> = value.split(',').map(|v| parse(&key, v.trim())).collect::<Result<_>>()?;
                self.sphere_centers = parts
                    .try_into()
                    .map_err(|_| Error::Config("sphere_centers takes two values".into()))?;
            }
            "dft" => self.dft_enabled = parse_bool(&key, value)?,
            "dft_top" => self.selection.num_selected = parse(&key, value)?,
            "dft_thresholds" => self.selection.num_candidate_thresholds = parse(&key, value)?,
            "ridge" => self.ridge = parse(&key, value)?,
            "train_rotation" => self.train_rotation = value.parse()?,
            "test_rotation" => self.test_rotation = value.parse()?,
            "seed" => self.seed = parse(&key, value)?,
            other => return Err(Error::Config(format!("unknown configuration key '{other}'"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines; blank lines and `#` comments are skipped.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            self.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut config = PipelineConfig::default();
        config.apply_kv(text)?;
        config.validate()?;
        Ok(config)
    }

    /// One `key=value` line per field, in [`CONFIG_KEYS`] order. Floats use
    /// their shortest round-trip representation.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let energy = self.saab_energy_threshold.map_or("none".to_string(), |t| t.to_string());
        let values = [
            self.points_per_cloud.to_string(),
            self.features.k_geometric.to_string(),
            self.features.k_covariance.to_string(),
            self.features.k_octant.to_string(),
            format_feature_sets(&self.feature_sets),
            self.saab_channels.to_string(),
            energy,
            self.aggregation.to_string(),
            format!("{},{}", self.sphere_centers[0], self.sphere_centers[1]),
            self.dft_enabled.to_string(),
            self.selection.num_selected.to_string(),
            self.selection.num_candidate_thresholds.to_string(),
            self.ridge.to_string(),
            self.train_rotation.to_string(),
            self.test_rotation.to_string(),
            self.seed.to_string(),
        ];
        for (key, value) in CONFIG_KEYS.iter().zip(values) {
            let _ = writeln!(out, "{key}={value}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_published_setup() {
        let c = PipelineConfig::default();
        assert_eq!(
            (c.features.k_geometric, c.features.k_covariance, c.features.k_octant),
            (128, 32, 64)
        );
        assert_eq!(c.selection.num_selected, 2700);
        assert_eq!(c.descriptor_len(c.saab_channels), 4800);
        let global = PipelineConfig {
            aggregation: Aggregation::Global,
            ..c
        };
        assert_eq!(global.descriptor_len(40), 160);
    }

    #[test]
    fn kv_round_trip() {
        let mut c = PipelineConfig::default();
        c.set("ridge", "0.000123456789012345").unwrap();
        c.set("features", "cov,oct").unwrap();
        c.set("saab-energy", "0.95").unwrap();
        c.set("train_rotation", "z").unwrap();
        c.set("sphere_centers", "1,0.75").unwrap();
        c.set("dft", "off").unwrap();
        let back = PipelineConfig::from_kv(&c.to_kv()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(PipelineConfig::from_kv("colour=red").is_err());
        assert!(PipelineConfig::from_kv("k_geo=many").is_err());
        assert!(PipelineConfig::from_kv("features=").is_err());
        assert!(PipelineConfig::from_kv("aggregation=bow").is_err());
        assert!(PipelineConfig::from_kv("just a line").is_err());
        assert!(PipelineConfig::from_kv("saab_channels=69").is_err());
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = PipelineConfig::from_kv("# header\n\nk_geo = 16  # smaller\nseed=9\n").unwrap();
        assert_eq!(c.features.k_geometric, 16);
        assert_eq!(c.seed, 9);
    }
}
