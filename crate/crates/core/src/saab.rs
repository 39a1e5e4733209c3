//! One-stage Saab transform: a constant DC kernel plus PCA-derived AC
//! kernels fitted on the DC-free residual of the training rows.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// How many output channels to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelSelection {
    /// DC plus `n - 1` AC channels.
    Fixed(usize),
    /// DC plus as many AC channels as needed for the cumulative AC energy to
    /// reach this fraction of the total.
    EnergyThreshold(f64),
}

/// Running mean and scatter matrix of feature rows. Partial statistics merge
/// exactly, so per-cloud accumulation can run in parallel and be combined
/// in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct SaabStats {
    count: usize,
    mean: Array1<f64>,
    scatter: Array2<f64>,
}

impl SaabStats {
    pub fn new(dim: usize) -> Self {
        SaabStats {
            count: 0,
            mean: Array1::zeros(dim),
            scatter: Array2::zeros((dim, dim)),
        }
    }

    pub fn from_rows(rows: ArrayView2<'_, f64>) -> Self {
        let count = rows.nrows();
        let dim = rows.ncols();
        if count == 0 {
            return Self::new(dim);
        }
        let mean = rows.mean_axis(Axis(0)).expect("non-empty");
        let centered = &rows - &mean;
        let scatter = centered.t().dot(&centered);
        SaabStats { count, mean, scatter }
    }

    /// Combines two partial statistics (pairwise update of mean and scatter).
    pub fn merge(&mut self, other: &SaabStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta = &other.mean - &self.mean;
        let outer = delta
            .view()
            .insert_axis(Axis(1))
            .dot(&delta.view().insert_axis(Axis(0)));
        self.scatter = &self.scatter + &other.scatter + outer * (na * nb / n);
        self.mean = &self.mean + &(delta * (nb / n));
        self.count += other.count;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    /// Population covariance.
    pub fn covariance(&self) -> Array2<f64> {
        &self.scatter / self.count.max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaabModel {
    pub feature_mean: Array1<f64>,
    pub dc_kernel: Array1<f64>,
    /// (D-1)×F, orthonormal rows orthogonal to the DC kernel.
    pub ac_kernels: Array2<f64>,
    /// Training variance of every output channel; index 0 is DC.
    pub energies: Vec<f64>,
    /// Kept for file compatibility; always zero for a single stage.
    pub bias: f64,
    /// Some kept AC channels carry no training variance.
    pub rank_deficient: bool,
}

impl SaabModel {
    pub fn num_channels(&self) -> usize {
        self.ac_kernels.nrows() + 1
    }

    pub fn input_dim(&self) -> usize {
        self.feature_mean.len()
    }

    /// All kernels stacked, DC first: D×F.
    pub fn kernels(&self) -> Array2<f64> {
        let dc = self.dc_kernel.view().insert_axis(Axis(0));
        ndarray::concatenate(Axis(0), &[dc, self.ac_kernels.view()]).expect("same width")
    }
}

pub fn fit_saab(rows: ArrayView2<'_, f64>, num_channels: usize) -> Result<SaabModel> {
    fit_saab_from_stats(&SaabStats::from_rows(rows), ChannelSelection::Fixed(num_channels))
}

pub fn fit_saab_from_stats(stats: &SaabStats, selection: ChannelSelection) -> Result<SaabModel> {
    let dim = stats.dim();
    if dim < 2 {
        return Err(Error::InvalidInput(format!("feature dimension {dim} is too small")));
    }
    if stats.count() < dim {
        return Err(Error::InvalidInput(format!(
            "Saab fit needs at least {dim} rows, got {}",
            stats.count()
        )));
    }
    if let ChannelSelection::Fixed(d) = selection {
        if d == 0 || d > dim {
            return Err(Error::Config(format!("channel count {d} outside 1..={dim}")));
        }
    }
    if let ChannelSelection::EnergyThreshold(t) = selection {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Config(format!("energy threshold {t} outside [0, 1]")));
        }
    }

    let cov = stats.covariance();
    let cov = DMatrix::from_fn(dim, dim, |r, c| cov[(r, c)]);
    let dc = DMatrix::from_element(dim, 1, 1.0 / (dim as f64).sqrt());

    // Householder reflection sending e1 to the DC kernel; its remaining
    // columns span the DC-free subspace.
    let mut w = dc.clone();
    w[0] -= 1.0;
    let reflect = DMatrix::<f64>::identity(dim, dim) - &w * w.transpose() * (2.0 / w.norm_squared());
    let basis = reflect.columns(1, dim - 1).into_owned();

    let reduced = basis.transpose() * &cov * &basis;
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..dim - 1).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let ac_energies: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();

    let ac_count = match selection {
        ChannelSelection::Fixed(d) => d - 1,
        ChannelSelection::EnergyThreshold(t) => {
            let total: f64 = ac_energies.iter().sum();
            let mut acc = 0.0;
            let mut kept = 0;
            while total > 0.0 && kept < ac_energies.len() && acc < t * total {
                acc += ac_energies[kept];
                kept += 1;
            }
            kept
        }
    };

    let mut ac_kernels = Array2::zeros((ac_count, dim));
    for (row, &i) in order.iter().take(ac_count).enumerate() {
        let mut kernel = &basis * eig.eigenvectors.column(i);
        // Sign convention: largest-magnitude component positive.
        let pivot = kernel
            .iter()
            .copied()
            .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
        if pivot < 0.0 {
            kernel = -kernel;
        }
        let norm = kernel.norm();
        for c in 0..dim {
            ac_kernels[(row, c)] = kernel[c] / norm;
        }
    }

    let dc_energy = (dc.transpose() * &cov * &dc)[(0, 0)].max(0.0);
    let trace = cov.trace();
    let rank_deficient = ac_energies[..ac_count]
        .iter()
        .any(|&e| e <= 1e-12 * trace.max(f64::MIN_POSITIVE));
    if rank_deficient {
        log::warn!("Saab: some of the {ac_count} AC channels carry no variance");
    }

    let mut energies = Vec::with_capacity(ac_count + 1);
    energies.push(dc_energy);
    energies.extend_from_slice(&ac_energies[..ac_count]);

    Ok(SaabModel {
        feature_mean: stats.mean().clone(),
        dc_kernel: Array1::from_elem(dim, 1.0 / (dim as f64).sqrt()),
        ac_kernels,
        energies,
        bias: 0.0,
        rank_deficient,
    })
}

/// Projects rows onto the DC and AC kernels: N×F → N×D.
pub fn apply_saab(model: &SaabModel, rows: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if rows.ncols() != model.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "Saab model expects {} columns, got {}",
            model.input_dim(),
            rows.ncols()
        )));
    }
    let centered = &rows - &model.feature_mean;
    Ok(centered.dot(&model.kernels().t()))
}
