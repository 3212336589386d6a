//! The fitted-classifier abstraction: training entry points, the decision
//! rule with its empty-cell fallback, error/accuracy metrics, and versioned
//! JSON serialization.

use std::path::Path;

use thiserror::Error;

use crate::arrangement::{branch_sets, enumerate_cells, tree_leaf_sets, BranchSets};
use crate::dataset::Dataset;
use crate::kernel::{build_kernel_model, KernelClassifier, KernelError, KernelFn};
use crate::milp::{
    build_arrangement_model, build_tree_model, AKind, MilpModel, ModelError, PNorm,
    SymmetryStrategy, VarRole,
};
use crate::solver::{self, SolveOptions, SolveStatus};

pub const CLASSIFIER_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("solver found no incumbent (status {0:?})")]
    NoIncumbent(SolveStatus),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported classifier file version {0} (this build reads version {CLASSIFIER_FORMAT_VERSION})")]
    VersionMismatch(u32),
}

/// Which model family `fit` trains.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum FitMode {
    Arrangement { m: usize },
    Tree { depth: usize },
    Kernel { m: usize, kappa: f64, kfn: KernelFn },
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct FitConfig {
    pub mode: FitMode,
    /// Coefficient family for the linear and tree modes (the kernel mode
    /// carries its own `kappa`).
    pub a_kind: AKind,
    pub symmetry: SymmetryStrategy,
    pub solve: SolveOptions,
    /// Use the literal signed-agreement fallback score instead of the hinge
    /// form when predicting in untrained cells.
    pub literal_fallback: bool,
}

impl FitConfig {
    pub fn arrangement(m: usize, a_kind: AKind) -> FitConfig {
        FitConfig {
            mode: FitMode::Arrangement { m },
            a_kind,
            symmetry: SymmetryStrategy::default(),
            solve: SolveOptions::default(),
            literal_fallback: false,
        }
    }

    pub fn tree(depth: usize, a_kind: AKind) -> FitConfig {
        FitConfig {
            mode: FitMode::Tree { depth },
            a_kind,
            symmetry: SymmetryStrategy::default(),
            solve: SolveOptions::default(),
            literal_fallback: false,
        }
    }

    pub fn kernel(m: usize, kappa: f64, kfn: KernelFn) -> FitConfig {
        FitConfig {
            mode: FitMode::Kernel { m, kappa, kfn },
            a_kind: AKind::NormBall { p: PNorm::L2, kappa },
            symmetry: SymmetryStrategy::default(),
            solve: SolveOptions::default(),
            literal_fallback: false,
        }
    }
}

/// A trained classifier. `cell_signs[c]` lists the (split, side) pairs that
/// define cell `c`: all splits in arrangement mode, only the root-to-leaf
/// path in tree mode.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Classifier {
    pub config: FitConfig,
    /// Explicit hyperplanes (linear and tree modes; derived ones are not
    /// stored for kernel mode).
    pub hyperplanes: Vec<(Vec<f64>, f64)>,
    pub kernel: Option<KernelClassifier>,
    pub cell_signs: Vec<Vec<(usize, i8)>>,
    /// Total map cell -> class, including untrained cells (recorded from the
    /// incumbent but not trusted for prediction).
    pub cell_classes: Vec<usize>,
    pub trained_cells: Vec<bool>,
    pub feature_count: usize,
    pub class_count: usize,
    pub objective: f64,
    pub rel_gap: f64,
    pub optimal: bool,
    pub warnings: Vec<String>,
    /// Original label names indexed by `class - 1`, when the training data
    /// carried them (CSV sources); `None` for programmatic datasets.
    #[serde(default)]
    pub class_names: Option<Vec<String>>,
}

impl PartialEq for FitConfig {
    fn eq(&self, other: &Self) -> bool {
        serde_json::to_string(self).ok() == serde_json::to_string(other).ok()
    }
}

fn cell_sign_lists(branch: &BranchSets) -> Vec<Vec<(usize, i8)>> {
    let mut signs = vec![Vec::new(); branch.cell_count];
    for r in 0..branch.split_count() {
        for &c in &branch.plus[r] {
            signs[c].push((r, 1));
        }
        for &c in &branch.minus[r] {
            signs[c].push((r, -1));
        }
    }
    for s in &mut signs {
        s.sort_unstable();
    }
    signs
}

fn mode_branch_sets(mode: &FitMode) -> Result<BranchSets, ModelError> {
    Ok(match mode {
        FitMode::Arrangement { m } | FitMode::Kernel { m, .. } => {
            branch_sets(&enumerate_cells(*m)?)
        }
        FitMode::Tree { depth } => tree_leaf_sets(*depth)?,
    })
}

pub fn fit(data: &Dataset, config: &FitConfig) -> Result<Classifier, ClassifierError> {
    fit_with_warm_start(data, config, None)
}

/// Fits a classifier, optionally warm-starting the solver from a previous
/// solution's hyperplanes (used by the dynamic-clustering heuristic).
pub fn fit_with_warm_start(
    data: &Dataset,
    config: &FitConfig,
    warm_hyperplanes: Option<&[(Vec<f64>, f64)]>,
) -> Result<Classifier, ClassifierError> {
    let branch = mode_branch_sets(&config.mode)?;
    let cell_signs = cell_sign_lists(&branch);
    let mut warnings = Vec::new();
    if branch.cell_count < data.class_count() {
        warnings.push(format!(
            "{} cells cannot cover {} classes; training error will be positive",
            branch.cell_count,
            data.class_count()
        ));
    }

    let model = match &config.mode {
        FitMode::Arrangement { m } => {
            build_arrangement_model(data, *m, &config.a_kind, config.symmetry)?
        }
        FitMode::Tree { depth } => build_tree_model(data, *depth, &config.a_kind, config.symmetry)?,
        FitMode::Kernel { m, kappa, kfn } => {
            build_kernel_model(data, *m, *kappa, kfn, config.symmetry)?.0
        }
    };

    let warm = warm_hyperplanes.and_then(|hp| {
        warm_incumbent(&model, data, &branch, &cell_signs, &config.a_kind, hp)
    });
    let res = solver::solve_with_incumbent(&model, &config.solve, warm.as_deref(), None);
    let incumbent = match res.incumbent {
        Some(x) => x,
        None => return Err(ClassifierError::NoIncumbent(res.status)),
    };

    let m_splits = branch.split_count();
    let cells = branch.cell_count;
    let d = data.feature_count();
    let n = data.len();

    let mut hyperplanes = Vec::new();
    let mut kernel = None;
    match &config.mode {
        FitMode::Kernel { kappa: _, kfn, .. } => {
            let mut duals = vec![vec![0.0; n]; m_splits];
            let mut intercepts = vec![0.0; m_splits];
            for (j, v) in model.variables.iter().enumerate() {
                match v.role {
                    VarRole::DualCoef { r, j: jj } => duals[r][jj] = incumbent[j],
                    VarRole::Intercept { r } => intercepts[r] = incumbent[j],
                    _ => {}
                }
            }
            kernel = Some(KernelClassifier {
                kfn: kfn.clone(),
                support_points: data.points().to_vec(),
                duals,
                intercepts,
            });
        }
        _ => {
            let mut a = vec![vec![0.0; d]; m_splits];
            let mut b = vec![0.0; m_splits];
            for (j, v) in model.variables.iter().enumerate() {
                match v.role {
                    VarRole::Coef { r, j: jj } => a[r][jj] = incumbent[j],
                    VarRole::Intercept { r } => b[r] = incumbent[j],
                    _ => {}
                }
            }
            hyperplanes = a.into_iter().zip(b).collect();
        }
    }

    let mut cell_classes = vec![1usize; cells];
    let mut trained_cells = vec![false; cells];
    for (j, v) in model.variables.iter().enumerate() {
        if let VarRole::CellClass { c, k } = v.role {
            if incumbent[j] > 0.5 {
                cell_classes[c] = k;
            }
        }
    }
    for (j, v) in model.variables.iter().enumerate() {
        if let VarRole::PointCell { c, .. } = v.role {
            if incumbent[j] > 0.5 {
                trained_cells[c] = true;
            }
        }
    }
    Ok(Classifier {
        config: config.clone(),
        hyperplanes,
        kernel,
        cell_signs,
        cell_classes,
        trained_cells,
        feature_count: d,
        class_count: data.class_count(),
        objective: res.objective,
        rel_gap: res.rel_gap,
        optimal: res.status == SolveStatus::Optimal,
        warnings,
        class_names: None,
    })
}

/// Lifts a set of hyperplanes into a full incumbent vector for the model, or
/// `None` when the hyperplanes do not fit the coefficient family. The
/// resulting vector is verified by the solver before being trusted.
fn warm_incumbent(
    model: &MilpModel,
    data: &Dataset,
    branch: &BranchSets,
    cell_signs: &[Vec<(usize, i8)>],
    a_kind: &AKind,
    hyperplanes: &[(Vec<f64>, f64)],
) -> Option<Vec<f64>> {
    let m = branch.split_count();
    if hyperplanes.len() != m || hyperplanes.iter().any(|(a, _)| a.len() != data.feature_count()) {
        return None;
    }
    let n = data.len();
    let cells = branch.cell_count;
    let mut x = vec![0.0; model.num_vars()];

    // explicit coefficients and intercepts
    for (j, v) in model.variables.iter().enumerate() {
        match v.role {
            VarRole::Coef { r, j: jj } => x[j] = hyperplanes[r].0[jj],
            VarRole::Intercept { r } => x[j] = hyperplanes[r].1,
            VarRole::DualCoef { .. } => return None, // kernel warm start unsupported
            _ => {}
        }
    }
    // family encoding auxiliaries
    for (j, v) in model.variables.iter().enumerate() {
        match v.role {
            VarRole::CoefPos { r, j: jj } => x[j] = hyperplanes[r].0[jj].max(0.0),
            VarRole::CoefNeg { r, j: jj } => x[j] = (-hyperplanes[r].0[jj]).max(0.0),
            VarRole::AxisSelect { r, j: jj } => {
                let a = &hyperplanes[r].0;
                let best = (0..a.len())
                    .max_by(|&p, &q| a[p].abs().partial_cmp(&a[q].abs()).unwrap())
                    .unwrap();
                x[j] = if jj == best { 1.0 } else { 0.0 };
            }
            VarRole::CandidateSelect { r, l } => {
                let AKind::DiscreteList { candidates } = a_kind else {
                    return None;
                };
                let (a, b) = &candidates[l];
                let matches = a
                    .iter()
                    .zip(&hyperplanes[r].0)
                    .all(|(p, q)| (p - q).abs() < 1e-9)
                    && (b - hyperplanes[r].1).abs() < 1e-9;
                x[j] = if matches { 1.0 } else { 0.0 };
            }
            _ => {}
        }
    }

    // geometric cell of every point under the warm hyperplanes
    let scores: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            hyperplanes
                .iter()
                .map(|(a, b)| {
                    a.iter().zip(data.point(i)).map(|(ai, xi)| ai * xi).sum::<f64>() + b
                })
                .collect()
        })
        .collect();
    let geo_cell: Vec<usize> = (0..n)
        .map(|i| cell_matching(cell_signs, &scores[i]))
        .collect();

    // cell classes: majority vote, honoring bound-fixed z variables
    let mut votes = vec![vec![0usize; data.class_count() + 1]; cells];
    for i in 0..n {
        votes[geo_cell[i]][data.label(i)] += 1;
    }
    let mut cell_class = vec![0usize; cells];
    for c in 0..cells {
        let best = (1..=data.class_count()).max_by_key(|&k| votes[c][k]).unwrap();
        cell_class[c] = if votes[c][best] > 0 { best } else { 0 };
    }
    for v in &model.variables {
        if let VarRole::CellClass { c, k } = v.role {
            if v.lb > 0.5 {
                cell_class[c] = k; // symmetry fixing
            }
        }
    }
    // give every class at least one cell, using empty cells first
    for k in 1..=data.class_count() {
        if !cell_class.contains(&k) {
            if let Some(c) = (0..cells).find(|&c| cell_class[c] == 0) {
                cell_class[c] = k;
            } else if let Some(c) = (0..cells).rev().find(|&c| {
                votes[c].iter().sum::<usize>() == 0 || cell_class.iter().filter(|&&x| x == cell_class[c]).count() > 1
            }) {
                cell_class[c] = k;
            } else {
                return None;
            }
        }
    }
    for c in 0..cells {
        if cell_class[c] == 0 {
            cell_class[c] = 1;
        }
    }

    // point-to-cell assignment: own cell when the class matches, otherwise
    // the cheapest same-class cell by hinge score
    let mut point_cell = vec![0usize; n];
    for i in 0..n {
        let yi = data.label(i);
        if cell_class[geo_cell[i]] == yi {
            point_cell[i] = geo_cell[i];
        } else {
            let mut best = None;
            for c in 0..cells {
                if cell_class[c] != yi {
                    continue;
                }
                let cost: f64 = cell_signs[c]
                    .iter()
                    .map(|&(r, s)| (1.0 - s as f64 * scores[i][r]).max(0.0))
                    .sum();
                match best {
                    Some((bc, _)) if cost >= bc => {}
                    _ => best = Some((cost, c)),
                }
            }
            point_cell[i] = best?.1;
        }
    }
    // honor a pinned point-cell variable (symmetry fixing)
    for v in &model.variables {
        if let VarRole::PointCell { i, c } = v.role {
            if v.lb > 0.5 {
                if cell_class[c] != data.label(i) {
                    return None;
                }
                point_cell[i] = c;
            }
        }
    }

    for (j, v) in model.variables.iter().enumerate() {
        match v.role {
            VarRole::PointCell { i, c } => x[j] = if point_cell[i] == c { 1.0 } else { 0.0 },
            VarRole::CellClass { c, k } => x[j] = if cell_class[c] == k { 1.0 } else { 0.0 },
            VarRole::Left { r, i } => {
                x[j] = if branch.plus[r].contains(&point_cell[i]) { 1.0 } else { 0.0 }
            }
            VarRole::Right { r, i } => {
                x[j] = if branch.minus[r].contains(&point_cell[i]) { 1.0 } else { 0.0 }
            }
            _ => {}
        }
    }
    // complete slack-like variables (hinge errors) from their rows: for each
    // >= row with a single hinge variable, raise it to the required level
    let hinge_idx: Vec<Option<usize>> = model
        .variables
        .iter()
        .map(|v| match v.role {
            VarRole::Hinge { .. } => Some(0),
            _ => None,
        })
        .collect();
    for con in &model.constraints {
        if con.sense != crate::milp::Sense::Ge {
            continue;
        }
        let hinges: Vec<usize> = con
            .coeffs
            .iter()
            .filter(|&&(j, _)| hinge_idx[j].is_some())
            .map(|&(j, _)| j)
            .collect();
        if hinges.len() != 1 {
            continue;
        }
        let h = hinges[0];
        let coef_h = con.coeffs.iter().find(|&&(j, _)| j == h).unwrap().1;
        let rest: f64 = con
            .coeffs
            .iter()
            .filter(|&&(j, _)| j != h)
            .map(|&(j, c)| c * x[j])
            .sum();
        let needed = (con.rhs - rest) / coef_h;
        if needed > x[h] {
            x[h] = needed;
        }
    }
    Some(x)
}

/// First cell whose sign list matches the score signs (tie at 0 counts as
/// the left/plus branch).
fn cell_matching(cell_signs: &[Vec<(usize, i8)>], scores: &[f64]) -> usize {
    for (c, signs) in cell_signs.iter().enumerate() {
        if signs
            .iter()
            .all(|&(r, s)| (scores[r] >= 0.0) == (s > 0))
        {
            return c;
        }
    }
    0
}

impl Classifier {
    /// Split scores of a query point: `a_r . x + b_r` or the kernel scores.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>, ClassifierError> {
        if x.len() != self.feature_count {
            return Err(ClassifierError::DimensionMismatch {
                expected: self.feature_count,
                got: x.len(),
            });
        }
        Ok(match &self.kernel {
            Some(k) => k.scores(x),
            None => self
                .hyperplanes
                .iter()
                .map(|(a, b)| a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>() + b)
                .collect(),
        })
    }

    /// The cell of a query point by its sign pattern.
    pub fn cell_of(&self, x: &[f64]) -> Result<usize, ClassifierError> {
        Ok(cell_matching(&self.cell_signs, &self.scores(x)?))
    }

    /// Predicted class: the cell's class when the point lands in a trained
    /// cell; otherwise the class of the trained cell minimizing the fallback
    /// score (hinge by default), ties broken by lowest cell index.
    pub fn predict(&self, x: &[f64]) -> Result<usize, ClassifierError> {
        let scores = self.scores(x)?;
        let c = cell_matching(&self.cell_signs, &scores);
        if self.trained_cells[c] {
            return Ok(self.cell_classes[c]);
        }
        let mut best: Option<(f64, usize)> = None;
        for (cc, signs) in self.cell_signs.iter().enumerate() {
            if !self.trained_cells[cc] {
                continue;
            }
            let score: f64 = if self.config.literal_fallback {
                signs.iter().map(|&(r, s)| s as f64 * scores[r]).sum()
            } else {
                signs
                    .iter()
                    .map(|&(r, s)| (1.0 - s as f64 * scores[r]).max(0.0))
                    .sum()
            };
            match best {
                Some((bs, _)) if score >= bs => {}
                _ => best = Some((score, cc)),
            }
        }
        Ok(match best {
            Some((_, cc)) => self.cell_classes[cc],
            None => 1,
        })
    }

    /// Total hinge error over the dataset: for each point, the cheapest cell
    /// of its own class (over the total cell-class map); equals the MILP
    /// objective on an optimal incumbent.
    pub fn training_error(&self, data: &Dataset) -> Result<f64, ClassifierError> {
        let mut total = 0.0;
        for i in 0..data.len() {
            let scores = self.scores(data.point(i))?;
            let yi = data.label(i);
            let class_cells: Vec<usize> = (0..self.cell_classes.len())
                .filter(|&c| self.cell_classes[c] == yi)
                .collect();
            let candidates: Vec<usize> = if class_cells.is_empty() {
                (0..self.cell_classes.len()).collect()
            } else {
                class_cells
            };
            let err = candidates
                .iter()
                .map(|&c| {
                    self.cell_signs[c]
                        .iter()
                        .map(|&(r, s)| (1.0 - s as f64 * scores[r]).max(0.0))
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
            total += err;
        }
        Ok(total)
    }

    /// Fraction of points whose prediction matches the label.
    pub fn accuracy(&self, data: &Dataset) -> Result<f64, ClassifierError> {
        let mut hits = 0usize;
        for i in 0..data.len() {
            if self.predict(data.point(i))? == data.label(i) {
                hits += 1;
            }
        }
        Ok(hits as f64 / data.len() as f64)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ClassifierError> {
        let doc = SavedClassifier {
            version: CLASSIFIER_FORMAT_VERSION,
            classifier: self.clone(),
        };
        let text = serde_json::to_string_pretty(&doc)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Classifier, ClassifierError> {
        let text = std::fs::read_to_string(path)?;
        let header: VersionHeader = serde_json::from_str(&text)?;
        if header.version != CLASSIFIER_FORMAT_VERSION {
            return Err(ClassifierError::VersionMismatch(header.version));
        }
        let doc: SavedClassifier = serde_json::from_str(&text)?;
        Ok(doc.classifier)
    }
}

#[derive(serde::Serialize, serde::Deserialize)]
struct SavedClassifier {
    version: u32,
    classifier: Classifier,
}

#[derive(serde::Deserialize)]
struct VersionHeader {
    version: u32,
}
