//! Linear least-squares classifier on one-hot targets.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Weights of a linear scorer: `k` feature rows followed by a bias row,
/// one column per class.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Array2<f64>,
}

impl LinearModel {
    pub fn num_features(&self) -> usize {
        self.weights.nrows() - 1
    }

    pub fn num_classes(&self) -> usize {
        self.weights.ncols()
    }

    pub fn scores(&self, features: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        self.check_width(features.len())?;
        let k = self.num_features();
        let w = self.weights.slice(ndarray::s![..k, ..]);
        Ok(features.dot(&w) + self.weights.row(k))
    }

    /// Row-by-row scores; each row matches [`LinearModel::scores`] exactly.
    pub fn scores_batch(&self, features: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_width(features.ncols())?;
        let mut out = Array2::zeros((features.nrows(), self.num_classes()));
        for (row, mut target) in features.rows().into_iter().zip(out.rows_mut()) {
            target.assign(&self.scores(row)?);
        }
        Ok(out)
    }

    /// Highest-scoring class; ties go to the smallest class index.
    pub fn predict(&self, features: ArrayView1<'_, f64>) -> Result<(usize, Array1<f64>)> {
        let scores = self.scores(features)?;
        Ok((argmax(scores.view()), scores))
    }

    pub fn predict_batch(&self, features: ArrayView2<'_, f64>) -> Result<(Vec<usize>, Array2<f64>)> {
        let scores = self.scores_batch(features)?;
        let classes = scores.rows().into_iter().map(argmax).collect();
        Ok((classes, scores))
    }

    fn check_width(&self, width: usize) -> Result<()> {
        if width != self.num_features() {
            return Err(Error::ShapeMismatch(format!(
                "classifier expects {} features, got {width}",
                self.num_features()
            )));
        }
        Ok(())
    }
}

pub fn argmax(scores: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Gap between the two highest scores.
pub fn top2_margin(scores: ArrayView1<'_, f64>) -> f64 {
    let mut top = [f64::NEG_INFINITY; 2];
    for &s in scores {
        if s > top[0] {
            top = [s, top[0]];
        } else if s > top[1] {
            top[1] = s;
        }
    }
    top[0] - top[1]
}

/// `scale * trace(XcᵀXc) / k` for column-centered features `Xc`: a ridge
/// strength that follows the feature scale.
pub fn relative_ridge(features: ArrayView2<'_, f64>, scale: f64) -> f64 {
    let k = features.ncols().max(1) as f64;
    let mean = features.mean_axis(Axis(0));
    match mean {
        Some(mean) => {
            let centered = &features - &mean;
            scale * centered.iter().map(|v| v * v).sum::<f64>() / k
        }
        None => 0.0,
    }
}

fn to_nalgebra(a: ArrayView2<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |r, c| a[(r, c)])
}

/// Minimizes `‖[X 1] W − Y‖² + λ‖W_features‖²` over one-hot targets `Y`.
/// The bias row is not penalized. `λ = 0` yields the minimum-norm solution.
pub fn fit_classifier(
    features: ArrayView2<'_, f64>,
    labels: &[usize],
    num_classes: usize,
    ridge: f64,
) -> Result<LinearModel> {
    let (m, k) = features.dim();
    if m == 0 {
        return Err(Error::InvalidInput("classifier needs at least one sample".into()));
    }
    if labels.len() != m {
        return Err(Error::ShapeMismatch(format!("{m} samples for {} labels", labels.len())));
    }
    if !ridge.is_finite() || ridge < 0.0 {
        return Err(Error::Config(format!(
            "ridge must be finite and non-negative, got {ridge}"
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::InvalidInput(format!(
            "label {bad} outside {num_classes} classes"
        )));
    }

    let x_mean = features.mean_axis(Axis(0)).expect("m > 0");
    let mut y = Array2::<f64>::zeros((m, num_classes));
    for (i, &l) in labels.iter().enumerate() {
        y[(i, l)] = 1.0;
    }
    let y_mean = y.mean_axis(Axis(0)).expect("m > 0");
    let xc = to_nalgebra((&features - &x_mean).view());
    let yc = to_nalgebra((&y - &y_mean).view());

    let w: DMatrix<f64> = if ridge > 0.0 {
        if k <= m {
            let gram = xc.tr_mul(&xc) + DMatrix::<f64>::identity(k, k) * ridge;
            let rhs = xc.tr_mul(&yc);
            gram.cholesky()
                .ok_or_else(|| Error::InvalidInput("regularized Gram matrix is not positive definite".into()))?
                .solve(&rhs)
        } else {
            // Dual form: W = Xcᵀ (Xc Xcᵀ + λI)⁻¹ Yc.
            let kernel = &xc * xc.transpose() + DMatrix::<f64>::identity(m, m) * ridge;
            let alpha = kernel
                .cholesky()
                .ok_or_else(|| Error::InvalidInput("regularized kernel matrix is not positive definite".into()))?
                .solve(&yc);
            xc.tr_mul(&alpha)
        }
    } else {
        let svd = xc.svd(true, true);
        let largest = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let eps = largest * m.max(k) as f64 * f64::EPSILON;
        svd.solve(&yc, eps).map_err(|e| Error::InvalidInput(e.to_string()))?
    };

    let mut weights = Array2::zeros((k + 1, num_classes));
    for r in 0..k {
        for c in 0..num_classes {
            weights[(r, c)] = w[(r, c)];
        }
    }
    for c in 0..num_classes {
        let offset: f64 = (0..k).map(|r| x_mean[r] * w[(r, c)]).sum();
        weights[(k, c)] = y_mean[c] - offset;
    }
    Ok(LinearModel { weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn separable_1d() {
        let x = array![[-1.0], [-1.0], [1.0], [1.0]];
        let model = fit_classifier(x.view(), &[0, 0, 1, 1], 2, 0.0).unwrap();
        // score difference is linear in x and vanishes at 0
        let s = model.scores(array![0.0].view()).unwrap();
        assert!((s[0] - s[1]).abs() < 1e-12);
        let (pred, _) = model.predict_batch(x.view()).unwrap();
        assert_eq!(pred, vec![0, 0, 1, 1]);
    }

    fn random_problem(m: usize, k: usize, c: usize, seed: u64) -> (Array2<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<usize> = (0..m).map(|_| rng.random_range(0..c)).collect();
        let x = Array2::from_shape_fn((m, k), |(r, j)| {
            labels[r] as f64 * ((j % 3) as f64 - 1.0) + rng.random_range(-2.0..2.0) + 3.0
        });
        (x, labels)
    }

    /// ‖(AᵀA + λD)W − AᵀY‖∞ for the augmented design A = [X 1], D = diag(1..1, 0).
    fn normal_equation_residual(
        x: &Array2<f64>,
        labels: &[usize],
        c: usize,
        lambda: f64,
        model: &LinearModel,
    ) -> (f64, f64) {
        let (m, k) = x.dim();
        let mut a = Array2::ones((m, k + 1));
        a.slice_mut(ndarray::s![.., ..k]).assign(x);
        let mut y = Array2::<f64>::zeros((m, c));
        for (i, &l) in labels.iter().enumerate() {
            y[(i, l)] = 1.0;
        }
        let mut lhs = a.t().dot(&a);
        for i in 0..k {
            lhs[(i, i)] += lambda;
        }
        let residual = lhs.dot(&model.weights) - a.t().dot(&y);
        let scale = a.t().dot(&y).iter().fold(0.0f64, |s, v| s.max(v.abs()));
        (residual.iter().fold(0.0f64, |s, v| s.max(v.abs())), scale)
    }

    #[test]
    fn normal_equations_hold_primal_and_dual() {
        for (m, k) in [(120, 10), (30, 80)] {
            let (x, labels) = random_problem(m, k, 4, m as u64);
            let lambda = relative_ridge(x.view(), 1e-3);
            let model = fit_classifier(x.view(), &labels, 4, lambda).unwrap();
            let (res, scale) = normal_equation_residual(&x, &labels, 4, lambda, &model);
            assert!(res <= 1e-8 * scale, "m={m} k={k}: {res} vs {scale}");
        }
    }

    #[test]
    fn unregularized_least_squares() {
        let (x, labels) = random_problem(100, 8, 3, 5);
        let model = fit_classifier(x.view(), &labels, 3, 0.0).unwrap();
        let (res, scale) = normal_equation_residual(&x, &labels, 3, 0.0, &model);
        assert!(res <= 1e-8 * scale);
    }

    #[test]
    fn rank_deficient_gets_minimum_norm() {
        // duplicated column: the weight splits evenly between the copies
        let base = array![[-1.0], [-0.5], [0.5], [1.0]];
        let x = ndarray::concatenate(Axis(1), &[base.view(), base.view()]).unwrap();
        let model = fit_classifier(x.view(), &[0, 0, 1, 1], 2, 0.0).unwrap();
        for c in 0..2 {
            assert!((model.weights[(0, c)] - model.weights[(1, c)]).abs() < 1e-12);
        }
        let (pred, _) = model.predict_batch(x.view()).unwrap();
        assert_eq!(pred, vec![0, 0, 1, 1]);
    }

    #[test]
    fn huge_ridge_gives_class_priors() {
        let (x, labels) = random_problem(50, 6, 3, 9);
        let model = fit_classifier(x.view(), &labels, 3, 1e9).unwrap();
        for r in 0..6 {
            for c in 0..3 {
                assert!(model.weights[(r, c)].abs() <= 1e-3);
            }
        }
        for c in 0..3 {
            let prior = labels.iter().filter(|&&l| l == c).count() as f64 / 50.0;
            assert!((model.weights[(6, c)] - prior).abs() <= 1e-3);
        }
    }

    #[test]
    fn ties_go_to_the_first_class() {
        let model = LinearModel {
            weights: Array2::from_elem((3, 4), 0.25),
        };
        let (class, _) = model.predict(array![1.0, -2.0].view()).unwrap();
        assert_eq!(class, 0);
    }

    #[test]
    fn batch_equals_loop_and_scaling_keeps_argmax() {
        let (x, labels) = random_problem(80, 5, 4, 11);
        let model = fit_classifier(x.view(), &labels, 4, 1e-2).unwrap();
        let (batch, scores) = model.predict_batch(x.view()).unwrap();
        for (i, row) in x.rows().into_iter().enumerate() {
            let (single, s) = model.predict(row).unwrap();
            assert_eq!(single, batch[i]);
            assert_eq!(argmax((&s * 3.5).view()), single);
            assert_eq!(s, scores.row(i));
        }
    }

    #[test]
    fn fitting_is_deterministic() {
        let (x, labels) = random_problem(60, 90, 3, 12);
        let a = fit_classifier(x.view(), &labels, 3, 0.1).unwrap();
        let b = fit_classifier(x.view(), &labels, 3, 0.1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dimension_mismatch() {
        let model = LinearModel {
            weights: Array2::zeros((3, 2)),
        };
        assert!(model.predict(array![1.0].view()).is_err());
        assert!(fit_classifier(Array2::<f64>::zeros((0, 2)).view(), &[], 2, 1.0).is_err());
    }

    #[test]
    fn margin() {
        assert_eq!(top2_margin(array![0.1, 0.7, 0.4].view()), 0.7 - 0.4);
        assert_eq!(top2_margin(array![0.5, 0.5].view()), 0.0);
    }
}
