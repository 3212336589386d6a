//! Kernelized models: Gram matrix and pseudoinverse, q-space model
//! construction, and kernel score evaluation for out-of-sample points.
//!
//! The model is parameterized by dual coefficients `q_r` with `lambda_r =
//! K q_r`, so the range condition on `lambda_r` holds structurally and the
//! norm constraint becomes the PSD quadratic guard `q_r' K q_r <= kappa^2`,
//! enforced by the solver's lazy supporting-hyperplane cuts.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::dataset::Dataset;
use crate::milp::{
    build_core_model, ConicGuard, CoefStyle, CoreModelSpec, MilpModel, ModelError,
    SymmetryStrategy,
};

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("kernel value not finite for points {i}, {j}")]
    NonFinite { i: usize, j: usize },
    #[error("gram matrix is not positive semidefinite: eigenvalue {0}")]
    NotPsd(f64),
    #[error("invalid kernel parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The kernel function.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum KernelFn {
    Linear,
    /// `K(x,y) = exp(-sigma * ||x - y||^2)`.
    Rbf { sigma: f64 },
    /// `K(x,y) = (x.y + offset)^degree`.
    Polynomial { degree: u32, offset: f64 },
}

impl KernelFn {
    pub fn validate(&self) -> Result<(), KernelError> {
        match self {
            KernelFn::Linear => Ok(()),
            KernelFn::Rbf { sigma } if *sigma > 0.0 => Ok(()),
            KernelFn::Rbf { sigma } => Err(KernelError::InvalidParameter(format!(
                "rbf sigma must be positive, got {sigma}"
            ))),
            KernelFn::Polynomial { degree, offset } if *degree >= 1 && *offset >= 0.0 => Ok(()),
            KernelFn::Polynomial { degree, offset } => Err(KernelError::InvalidParameter(
                format!("polynomial needs degree >= 1 and offset >= 0, got ({degree}, {offset})"),
            )),
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let dot = || x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        match self {
            KernelFn::Linear => dot(),
            KernelFn::Rbf { sigma } => {
                let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-sigma * sq).exp()
            }
            KernelFn::Polynomial { degree, offset } => (dot() + offset).powi(*degree as i32),
        }
    }
}

const EIG_TOL: f64 = 1e-10;
const PSD_SLACK: f64 = 1e-8;

/// Gram matrix with its Moore-Penrose pseudoinverse and numerical rank.
#[derive(Debug, Clone)]
pub struct GramBundle {
    pub gram: DMatrix<f64>,
    pub pinv: DMatrix<f64>,
    pub rank: usize,
    pub eig_tol: f64,
    /// Smallest retained (positive) eigenvalue; bounds the dual coefficients.
    pub min_pos_eig: f64,
}

impl GramBundle {
    /// Builds the bundle from an explicit symmetric PSD matrix.
    pub fn from_matrix(gram: DMatrix<f64>) -> Result<GramBundle, KernelError> {
        let n = gram.nrows();
        assert_eq!(n, gram.ncols());
        let sym_err = (&gram - gram.transpose()).abs().max();
        assert!(sym_err <= 1e-10, "gram matrix asymmetric by {sym_err}");
        let eig = gram.clone().symmetric_eigen();
        let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
        let mut pinv = DMatrix::zeros(n, n);
        let mut rank = 0usize;
        let mut min_pos = f64::INFINITY;
        let cutoff = EIG_TOL * lmax.max(1e-300);
        for (k, &l) in eig.eigenvalues.iter().enumerate() {
            if l < -PSD_SLACK * lmax.max(1.0) {
                return Err(KernelError::NotPsd(l));
            }
            if l > cutoff {
                let v = eig.eigenvectors.column(k);
                pinv += v * v.transpose() / l;
                rank += 1;
                min_pos = min_pos.min(l);
            }
        }
        let bundle = GramBundle {
            gram,
            pinv,
            rank,
            eig_tol: EIG_TOL,
            min_pos_eig: if min_pos.is_finite() { min_pos } else { 0.0 },
        };
        // Moore-Penrose identities, scaled by the spectrum
        let scale = lmax.max(1.0);
        let e1 = (&bundle.gram * &bundle.pinv * &bundle.gram - &bundle.gram).abs().max();
        assert!(e1 <= 1e-6 * scale, "K K+ K = K violated by {e1}");
        let e2 = (&bundle.pinv * &bundle.gram * &bundle.pinv - &bundle.pinv).abs().max();
        assert!(
            e2 <= 1e-6 * scale.max(1.0 / bundle.min_pos_eig.max(1e-12)),
            "K+ K K+ = K+ violated by {e2}"
        );
        Ok(bundle)
    }
}

/// Pairwise Gram matrix of the dataset under the kernel.
pub fn gram(data: &Dataset, kfn: &KernelFn) -> Result<GramBundle, KernelError> {
    kfn.validate()?;
    let n = data.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = kfn.eval(data.point(i), data.point(j));
            if !v.is_finite() {
                return Err(KernelError::NonFinite { i, j });
            }
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    GramBundle::from_matrix(k)
}

/// Builds the kernelized arrangement model. Identical combinatorial block to
/// the linear formulation; error rows use the kernel scores `sum_j K_ij q_rj
/// + b_r`, with the norm guard `q_r' K q_r <= kappa^2` enforced lazily.
///
/// Big-M values extend the linear derivation through the feature-space norm
/// `||phi(x_i)|| = sqrt(K_ii)`.
pub fn build_kernel_model(
    data: &Dataset,
    m: usize,
    kappa: f64,
    kfn: &KernelFn,
    symmetry: SymmetryStrategy,
) -> Result<(MilpModel, GramBundle), KernelError> {
    if !(kappa > 0.0) {
        return Err(KernelError::InvalidParameter(format!(
            "kappa must be positive, got {kappa}"
        )));
    }
    let bundle = gram(data, kfn)?;
    let n = data.len();
    let cells = crate::arrangement::enumerate_cells(m).map_err(ModelError::from)?;
    let branch = crate::arrangement::branch_sets(&cells);

    let diag_norm: Vec<f64> = (0..n).map(|i| bundle.gram[(i, i)].max(0.0).sqrt()).collect();
    let max_norm = diag_norm.iter().fold(0.0f64, |a, &b| a.max(b));
    let delta: Vec<f64> = diag_norm
        .iter()
        .map(|&d| kappa * d + 2.0 + kappa * max_norm)
        .collect();
    // any feasible hyperplane has a minimal-norm dual representation with
    // ||q||_2 <= kappa / sqrt(smallest positive eigenvalue)
    let qb = if bundle.min_pos_eig > 0.0 {
        kappa / bundle.min_pos_eig.sqrt()
    } else {
        kappa
    };
    let score_rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| bundle.gram[(i, j)]).collect())
        .collect();
    let spec = CoreModelSpec {
        data,
        branch: &branch,
        score_rows,
        coef_count: n,
        coef_bounds: vec![(-qb, qb); n],
        intercept_bounds: (-(1.0 + kappa * max_norm), 1.0 + kappa * max_norm),
        delta,
        coef_style: CoefStyle::KernelDual,
        ordered_bias_allowed: true,
    };
    let mut model = build_core_model(&spec, symmetry);
    let matrix: Vec<f64> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| bundle.gram[(i, j)])
        .collect();
    for r in 0..m {
        model.guards.push(ConicGuard::QuadForm {
            vars: (r * n..(r + 1) * n).collect(),
            matrix: matrix.clone(),
            kappa,
        });
    }
    model.validate()?;
    Ok((model, bundle))
}

/// The kernel score machine of a fitted classifier: dual coefficients over
/// the support (training) points plus intercepts.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KernelClassifier {
    pub kfn: KernelFn,
    pub support_points: Vec<Vec<f64>>,
    /// One dual vector `q_r` per separating surface.
    pub duals: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
}

impl KernelClassifier {
    /// Hyperplane scores `s_r = sum_j q_rj K(x_j, x) + b_r`.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let kx: Vec<f64> = self
            .support_points
            .iter()
            .map(|p| self.kfn.eval(p, x))
            .collect();
        self.duals
            .iter()
            .zip(&self.intercepts)
            .map(|(q, b)| q.iter().zip(&kx).map(|(qi, ki)| qi * ki).sum::<f64>() + b)
            .collect()
    }

    /// Squared feature-space norm `q_r' K q_r` of surface `r` under the
    /// training Gram matrix.
    pub fn sq_norm(&self, bundle: &GramBundle, r: usize) -> f64 {
        let q = &self.duals[r];
        let n = q.len();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += q[i] * bundle.gram[(i, j)] * q[j];
            }
        }
        acc
    }
}
