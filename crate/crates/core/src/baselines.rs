//! Linear soft-margin SVM baselines: a deterministic dual coordinate-descent
//! binary machine plus one-vs-one and one-vs-rest multiclass wrappers.
//!
//! The intercept is handled as an augmented, regularized feature, so the
//! trained machine minimizes `1/2 (||w||^2 + b^2) + C * sum hinge` — the
//! variant the dual coordinate-descent method solves exactly.

use std::path::Path;

use thiserror::Error;

use crate::dataset::Dataset;

const KKT_TOL: f64 = 1e-6;
const MAX_SWEEPS: usize = 100_000;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("binary SVM needs exactly two classes, got {0}")]
    NotBinary(usize),
    #[error("invalid soft-margin cost {0}")]
    InvalidCost(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BinarySvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c_param: f64,
}

impl BinarySvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    /// Primal objective `1/2 (||w||^2 + b^2) + C * sum hinge` over labeled
    /// points with `y` in {-1, +1}.
    pub fn primal_objective(&self, points: &[Vec<f64>], y: &[f64]) -> f64 {
        let reg = 0.5
            * (self.weights.iter().map(|w| w * w).sum::<f64>() + self.bias * self.bias);
        let hinge: f64 = points
            .iter()
            .zip(y)
            .map(|(p, &yi)| (1.0 - yi * self.decision(p)).max(0.0))
            .sum();
        reg + self.c_param * hinge
    }
}

/// Trains a binary machine on points with labels in {-1, +1} by dual
/// coordinate descent with a fixed sweep order; stops when the maximum
/// projected-gradient violation drops below the KKT tolerance.
pub fn fit_binary_pm(
    points: &[Vec<f64>],
    y: &[f64],
    c_param: f64,
) -> Result<BinarySvm, BaselineError> {
    if !(c_param > 0.0) {
        return Err(BaselineError::InvalidCost(c_param));
    }
    let n = points.len();
    let d = points[0].len();
    // augmented feature space: (x, 1); q_ii = ||x_i||^2 + 1
    let q: Vec<f64> = points
        .iter()
        .map(|p| p.iter().map(|v| v * v).sum::<f64>() + 1.0)
        .collect();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    for _ in 0..MAX_SWEEPS {
        let mut max_violation = 0.0f64;
        for i in 0..n {
            let margin: f64 =
                y[i] * (points[i].iter().zip(&w).map(|(x, wv)| x * wv).sum::<f64>() + b);
            let g = margin - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= c_param {
                g.max(0.0)
            } else {
                g
            };
            max_violation = max_violation.max(pg.abs());
            if pg.abs() > 1e-14 {
                let na = (alpha[i] - g / q[i]).clamp(0.0, c_param);
                let delta = (na - alpha[i]) * y[i];
                if delta != 0.0 {
                    for (wv, x) in w.iter_mut().zip(&points[i]) {
                        *wv += delta * x;
                    }
                    b += delta;
                    alpha[i] = na;
                }
            }
        }
        if max_violation < KKT_TOL {
            break;
        }
    }
    Ok(BinarySvm {
        weights: w,
        bias: b,
        c_param,
    })
}

/// Trains on a two-class dataset; the higher class id is the positive side.
pub fn fit_binary_svm(data: &Dataset, c_param: f64) -> Result<BinarySvm, BaselineError> {
    if data.class_count() != 2 {
        return Err(BaselineError::NotBinary(data.class_count()));
    }
    let y: Vec<f64> = data
        .labels()
        .iter()
        .map(|&l| if l == 2 { 1.0 } else { -1.0 })
        .collect();
    fit_binary_pm(data.points(), &y, c_param)
}

/// One machine per unordered class pair; prediction by majority vote with
/// ties broken toward the lowest class id.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OvoModel {
    /// (low class, high class, machine with the high class positive).
    pub machines: Vec<(usize, usize, BinarySvm)>,
    pub class_count: usize,
}

pub fn ovo_fit(data: &Dataset, c_param: f64) -> Result<OvoModel, BaselineError> {
    let k = data.class_count();
    let mut machines = Vec::new();
    for lo in 1..=k {
        for hi in lo + 1..=k {
            let mut pts = Vec::new();
            let mut y = Vec::new();
            for i in 0..data.len() {
                if data.label(i) == lo || data.label(i) == hi {
                    pts.push(data.point(i).to_vec());
                    y.push(if data.label(i) == hi { 1.0 } else { -1.0 });
                }
            }
            machines.push((lo, hi, fit_binary_pm(&pts, &y, c_param)?));
        }
    }
    Ok(OvoModel {
        machines,
        class_count: k,
    })
}

impl OvoModel {
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut votes = vec![0usize; self.class_count + 1];
        for (lo, hi, svm) in &self.machines {
            let winner = if svm.decision(x) >= 0.0 { *hi } else { *lo };
            votes[winner] += 1;
        }
        (1..=self.class_count)
            .max_by_key(|&k| (votes[k], usize::MAX - k)) // ties -> lowest class
            .unwrap()
    }

    pub fn accuracy(&self, data: &Dataset) -> f64 {
        let hits = (0..data.len())
            .filter(|&i| self.predict(data.point(i)) == data.label(i))
            .count();
        hits as f64 / data.len() as f64
    }
}

/// One machine per class against the rest; prediction by maximal decision
/// value, ties broken toward the lowest class id.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OvrModel {
    /// `machines[k-1]` has class `k` positive.
    pub machines: Vec<BinarySvm>,
}

pub fn ovr_fit(data: &Dataset, c_param: f64) -> Result<OvrModel, BaselineError> {
    let mut machines = Vec::new();
    for class in 1..=data.class_count() {
        let y: Vec<f64> = data
            .labels()
            .iter()
            .map(|&l| if l == class { 1.0 } else { -1.0 })
            .collect();
        machines.push(fit_binary_pm(data.points(), &y, c_param)?);
    }
    Ok(OvrModel { machines })
}

impl OvrModel {
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut best = 0;
        for (k, svm) in self.machines.iter().enumerate() {
            if svm.decision(x) > self.machines[best].decision(x) {
                best = k;
            }
        }
        best + 1
    }

    pub fn accuracy(&self, data: &Dataset) -> f64 {
        let hits = (0..data.len())
            .filter(|&i| self.predict(data.point(i)) == data.label(i))
            .count();
        hits as f64 / data.len() as f64
    }
}

/// Versioned JSON persistence shared by both multiclass wrappers.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum BaselineModel {
    Ovo(OvoModel),
    Ovr(OvrModel),
}

#[derive(serde::Serialize, serde::Deserialize)]
struct SavedBaseline {
    version: u32,
    model: BaselineModel,
}

pub fn save_baseline(model: &BaselineModel, path: impl AsRef<Path>) -> Result<(), BaselineError> {
    let doc = SavedBaseline {
        version: 1,
        model: model.clone(),
    };
    std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

pub fn load_baseline(path: impl AsRef<Path>) -> Result<BaselineModel, BaselineError> {
    let doc: SavedBaseline = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    Ok(doc.model)
}
