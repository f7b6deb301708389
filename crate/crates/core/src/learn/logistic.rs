//! L2-regularised logistic regression fitted by full-batch gradient descent.

use serde::{Deserialize, Serialize};

use super::{sigmoid, LearnError, MODEL_FORMAT_VERSION};
use crate::dataset::{LabeledDataset, Standardizer};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    /// Multiplier on the per-coordinate step `1 / L_j`; halved whenever a
    /// step would increase the loss.
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub l2: f64,
    /// Stop once the gradient norm falls below this.
    pub tolerance: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1.0,
            max_epochs: 5000,
            l2: 1e-3,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub format: String,
    pub version: u32,
    pub feature_names: Vec<String>,
    pub scaler: Standardizer,
    pub intercept: f64,
    pub weights: Vec<f64>,
    pub config: LogisticConfig,
    pub epochs: usize,
    pub final_loss: f64,
    /// Set when training saw a single class; predictions are then the class
    /// rate.
    pub constant: Option<f64>,
}

fn softplus(m: f64) -> f64 {
    m.max(0.0) + (-m.abs()).exp().ln_1p()
}

/// Mean log-loss plus `l2/2 * |w|^2` and its gradient. `params[0]` is the
/// intercept (not penalised); `rows` are already standardized.
pub fn loss_and_gradient(params: &[f64], rows: &[Vec<f64>], labels: &[bool], l2: f64) -> (f64, Vec<f64>) {
    let n = rows.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; params.len()];
    for (x, &y) in rows.iter().zip(labels) {
        let m = params[0] + x.iter().zip(&params[1..]).map(|(a, b)| a * b).sum::<f64>();
        let t = if y { 1.0 } else { 0.0 };
        loss += softplus(m) - t * m;
        let r = sigmoid(m) - t;
        grad[0] += r;
        for (g, v) in grad[1..].iter_mut().zip(x) {
            *g += r * v;
        }
    }
    loss /= n;
    grad.iter_mut().for_each(|g| *g /= n);
    let w = &params[1..];
    loss += 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
    for (g, v) in grad[1..].iter_mut().zip(w) {
        *g += l2 * v;
    }
    (loss, grad)
}

pub fn train_logistic(ds: &LabeledDataset, cfg: &LogisticConfig) -> Result<LogisticModel, LearnError> {
    if ds.is_empty() {
        return Err(LearnError::EmptyInput("training set is empty".into()));
    }
    if !ds.all_finite() {
        return Err(LearnError::NonFinite("training features".into()));
    }
    let d = ds.dim();
    let scaler = Standardizer::fit(&ds.rows);
    let mut model = LogisticModel {
        format: "veriscope-logistic".into(),
        version: MODEL_FORMAT_VERSION,
        feature_names: ds.feature_names.clone(),
        scaler,
        intercept: 0.0,
        weights: vec![0.0; d],
        config: *cfg,
        epochs: 0,
        final_loss: 0.0,
        constant: None,
    };
    if !ds.both_classes() {
        let (_, pos) = ds.class_counts();
        model.constant = Some(pos as f64 / ds.len() as f64);
        return Ok(model);
    }
    let z = model.scaler.transform(&ds.rows);
    let n = z.len() as f64;
    // Diagonal curvature bounds of the loss.
    let mut step = vec![1.0 / 0.25; d + 1];
    for j in 0..d {
        let sq: f64 = z.iter().map(|r| r[j] * r[j]).sum::<f64>() / n;
        step[j + 1] = 1.0 / (0.25 * sq + cfg.l2).max(1e-12);
    }
    let mut params = vec![0.0; d + 1];
    let (mut loss, mut grad) = loss_and_gradient(&params, &z, &ds.labels, cfg.l2);
    let mut scale = cfg.learning_rate;
    let mut epochs = 0;
    while epochs < cfg.max_epochs {
        if !loss.is_finite() {
            return Err(LearnError::NonFinite("logistic loss".into()));
        }
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm < cfg.tolerance {
            break;
        }
        epochs += 1;
        loop {
            let trial: Vec<f64> = params
                .iter()
                .zip(&grad)
                .zip(&step)
                .map(|((p, g), s)| p - scale * s * g)
                .collect();
            let (l, g) = loss_and_gradient(&trial, &z, &ds.labels, cfg.l2);
            if l <= loss || scale < 1e-12 {
                params = trial;
                loss = l;
                grad = g;
                break;
            }
            scale *= 0.5;
        }
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(LearnError::NonFinite("logistic weights".into()));
    }
    model.intercept = params[0];
    model.weights = params[1..].to_vec();
    model.epochs = epochs;
    model.final_loss = loss;
    Ok(model)
}

impl LogisticModel {
    pub fn margin(&self, x: &[f64]) -> Result<f64, LearnError> {
        if x.len() != self.weights.len() {
            return Err(LearnError::LengthMismatch {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        let z = self.scaler.transform_row(x);
        Ok(self.intercept + z.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>())
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, LearnError> {
        let m = self.margin(x)?;
        Ok(self.constant.unwrap_or_else(|| sigmoid(m)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> LabeledDataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..20 {
            rows.push(vec![-1.0]);
            labels.push(false);
            rows.push(vec![1.0]);
            labels.push(true);
        }
        LabeledDataset::from_rows(rows, labels)
    }

    #[test]
    fn separable_data_is_fit() {
        let ds = separable();
        let m = train_logistic(&ds, &LogisticConfig::default()).unwrap();
        assert!(m.weights[0] > 0.0);
        for (x, &y) in ds.rows.iter().zip(&ds.labels) {
            assert_eq!(m.predict_proba(x).unwrap() >= 0.5, y);
        }
    }

    #[test]
    fn single_class_predicts_class_rate() {
        let ds = LabeledDataset::from_rows(vec![vec![1.0], vec![2.0]], vec![true, true]);
        let m = train_logistic(&ds, &LogisticConfig::default()).unwrap();
        assert_eq!(m.constant, Some(1.0));
        assert_eq!(m.predict_proba(&[5.0]).unwrap(), 1.0);
    }

    #[test]
    fn heavy_regularisation_gives_base_rate() {
        let mut ds = separable();
        ds.rows.push(vec![1.0]);
        ds.labels.push(true);
        ds.provenance.push(crate::dataset::Provenance::Original);
        ds.ids.push("x".into());
        let cfg = LogisticConfig {
            l2: 1e6,
            ..Default::default()
        };
        let m = train_logistic(&ds, &cfg).unwrap();
        assert!(m.weights[0].abs() < 1e-5);
        let rate = 21.0 / 41.0;
        assert!((m.predict_proba(&[0.3]).unwrap() - rate).abs() < 1e-4);
    }

    #[test]
    fn zero_weights_give_one_half() {
        let m = LogisticModel {
            format: String::new(),
            version: 1,
            feature_names: vec!["a".into()],
            scaler: Standardizer::identity(1),
            intercept: 0.0,
            weights: vec![0.0],
            config: LogisticConfig::default(),
            epochs: 0,
            final_loss: 0.0,
            constant: None,
        };
        assert_eq!(m.predict_proba(&[123.0]).unwrap(), 0.5);
        assert!(m.predict_proba(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos(), (i % 3) as f64 - 1.0])
            .collect();
        let labels: Vec<bool> = (0..30).map(|i| (i * 7) % 5 < 2).collect();
        let params = [0.2, -0.5, 1.3, 0.7];
        let (_, g) = loss_and_gradient(&params, &rows, &labels, 0.1);
        let h = 1e-6;
        for j in 0..params.len() {
            let mut up = params;
            let mut dn = params;
            up[j] += h;
            dn[j] -= h;
            let fd = (loss_and_gradient(&up, &rows, &labels, 0.1).0
                - loss_and_gradient(&dn, &rows, &labels, 0.1).0)
                / (2.0 * h);
            assert!((fd - g[j]).abs() <= 1e-6 * g[j].abs().max(1.0), "{j}: {fd} vs {}", g[j]);
        }
    }
}
