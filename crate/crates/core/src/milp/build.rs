//! Builders for the arrangement formulation and its tree-structured variant.
//!
//! The combinatorial block (assignment, branch-indicator, and error rows) is
//! shared between the linear, tree, and kernelized models; only the score
//! expression, the coefficient family encoding, and the branch sets differ.

use crate::arrangement::{branch_sets, enumerate_cells, tree_leaf_sets, BranchSets};
use crate::dataset::Dataset;

use super::{
    compute_big_m, AKind, ConicGuard, Constraint, MilpModel, ModelError, PNorm, Sense,
    SymmetryStrategy, VarKind, VarRole, Variable,
};

pub(crate) enum CoefStyle {
    /// Explicit hyperplane coefficients a_{r,j}.
    Explicit,
    /// Kernel dual coefficients q_{r,j} (free variables).
    KernelDual,
}

pub(crate) struct CoreModelSpec<'a> {
    pub data: &'a Dataset,
    pub branch: &'a BranchSets,
    /// Per-point coefficients of the score expression: the score of point `i`
    /// on split `r` is `sum_j score_rows[i][j] * coef_{r,j} + b_r`.
    pub score_rows: Vec<Vec<f64>>,
    pub coef_count: usize,
    /// Per-coefficient (lb, ub), applied to every split.
    pub coef_bounds: Vec<(f64, f64)>,
    pub intercept_bounds: (f64, f64),
    pub delta: Vec<f64>,
    pub coef_style: CoefStyle,
    /// Ordered-bias symmetry only makes sense when splits are interchangeable.
    pub ordered_bias_allowed: bool,
}

/// Builds the shared model skeleton: variable blocks
/// `[coef | b | e | t | u | v | z]`, the assignment and branch-indicator
/// rows, the big-M error rows, the symmetry rows, and the hinge objective.
pub(crate) fn build_core_model(spec: &CoreModelSpec, symmetry: SymmetryStrategy) -> MilpModel {
    let n = spec.data.len();
    let k_count = spec.data.class_count();
    let m = spec.branch.split_count();
    let cells = spec.branch.cell_count;
    let cc = spec.coef_count;

    let mut variables = Vec::with_capacity(m * cc + m + 2 * n * m + n * m + n * cells + cells * k_count);
    for r in 0..m {
        for j in 0..cc {
            let (lb, ub) = spec.coef_bounds[j];
            let (name, role) = match spec.coef_style {
                CoefStyle::Explicit => (format!("a_{r}_{j}"), VarRole::Coef { r, j }),
                CoefStyle::KernelDual => (format!("q_{r}_{j}"), VarRole::DualCoef { r, j }),
            };
            variables.push(Variable {
                name,
                kind: VarKind::Continuous,
                lb,
                ub,
                role,
            });
        }
    }
    let off_b = variables.len();
    for r in 0..m {
        variables.push(Variable {
            name: format!("b_{r}"),
            kind: VarKind::Continuous,
            lb: spec.intercept_bounds.0,
            ub: spec.intercept_bounds.1,
            role: VarRole::Intercept { r },
        });
    }
    let off_e = variables.len();
    for i in 0..n {
        for r in 0..m {
            variables.push(Variable {
                name: format!("e_{i}_{r}"),
                kind: VarKind::Continuous,
                lb: 0.0,
                ub: f64::INFINITY,
                role: VarRole::Hinge { i, r },
            });
        }
    }
    let off_t = variables.len();
    for r in 0..m {
        for i in 0..n {
            variables.push(Variable {
                name: format!("t_{r}_{i}"),
                kind: VarKind::Continuous, // integrality relaxed
                lb: 0.0,
                ub: 1.0,
                role: VarRole::Left { r, i },
            });
        }
    }
    let off_u = variables.len();
    for r in 0..m {
        for i in 0..n {
            variables.push(Variable {
                name: format!("u_{r}_{i}"),
                kind: VarKind::Continuous,
                lb: 0.0,
                ub: 1.0,
                role: VarRole::Right { r, i },
            });
        }
    }
    let off_v = variables.len();
    for i in 0..n {
        for c in 0..cells {
            variables.push(Variable {
                name: format!("v_{i}_{c}"),
                kind: VarKind::Binary,
                lb: 0.0,
                ub: 1.0,
                role: VarRole::PointCell { i, c },
            });
        }
    }
    let off_z = variables.len();
    for c in 0..cells {
        for k in 1..=k_count {
            variables.push(Variable {
                name: format!("z_{c}_{k}"),
                kind: VarKind::Binary,
                lb: 0.0,
                ub: 1.0,
                role: VarRole::CellClass { c, k },
            });
        }
    }

    let coef = |r: usize, j: usize| r * cc + j;
    let b = |r: usize| off_b + r;
    let e = |i: usize, r: usize| off_e + i * m + r;
    let t = |r: usize, i: usize| off_t + r * n + i;
    let u = |r: usize, i: usize| off_u + r * n + i;
    let v = |i: usize, c: usize| off_v + i * cells + c;
    let z = |c: usize, k: usize| off_z + c * k_count + (k - 1);

    let mut constraints = Vec::new();
    // each point sits in exactly one cell
    for i in 0..n {
        constraints.push(Constraint {
            coeffs: (0..cells).map(|c| (v(i, c), 1.0)).collect(),
            sense: Sense::Eq,
            rhs: 1.0,
        });
    }
    // each cell gets exactly one class
    for c in 0..cells {
        constraints.push(Constraint {
            coeffs: (1..=k_count).map(|k| (z(c, k), 1.0)).collect(),
            sense: Sense::Eq,
            rhs: 1.0,
        });
    }
    // a point may only occupy a cell assigned to its class
    for i in 0..n {
        let yi = spec.data.label(i);
        for c in 0..cells {
            constraints.push(Constraint {
                coeffs: vec![(v(i, c), 1.0), (z(c, yi), -1.0)],
                sense: Sense::Le,
                rhs: 0.0,
            });
        }
    }
    // branch indicators from the cell assignment
    for r in 0..m {
        for i in 0..n {
            let mut coeffs = vec![(t(r, i), 1.0)];
            coeffs.extend(spec.branch.plus[r].iter().map(|&c| (v(i, c), -1.0)));
            constraints.push(Constraint {
                coeffs,
                sense: Sense::Eq,
                rhs: 0.0,
            });
        }
    }
    for r in 0..m {
        for i in 0..n {
            let mut coeffs = vec![(u(r, i), 1.0)];
            coeffs.extend(spec.branch.minus[r].iter().map(|&c| (v(i, c), -1.0)));
            constraints.push(Constraint {
                coeffs,
                sense: Sense::Eq,
                rhs: 0.0,
            });
        }
    }
    // big-M hinge rows:
    //   e_ir >= 1 - score_i(r) - Delta_i (1 - t_ri)
    //   e_ir >= 1 + score_i(r) - Delta_i (1 - u_ri)
    for i in 0..n {
        for r in 0..m {
            let d = spec.delta[i];
            let mut coeffs = vec![(e(i, r), 1.0)];
            for j in 0..cc {
                let x = spec.score_rows[i][j];
                if x != 0.0 {
                    coeffs.push((coef(r, j), x));
                }
            }
            coeffs.push((b(r), 1.0));
            coeffs.push((t(r, i), -d));
            constraints.push(Constraint {
                coeffs,
                sense: Sense::Ge,
                rhs: 1.0 - d,
            });

            let mut coeffs = vec![(e(i, r), 1.0)];
            for j in 0..cc {
                let x = spec.score_rows[i][j];
                if x != 0.0 {
                    coeffs.push((coef(r, j), -x));
                }
            }
            coeffs.push((b(r), -1.0));
            coeffs.push((u(r, i), -d));
            constraints.push(Constraint {
                coeffs,
                sense: Sense::Ge,
                rhs: 1.0 - d,
            });
        }
    }

    // symmetry reduction
    let ordered_bias = matches!(symmetry, SymmetryStrategy::OrderedBias | SymmetryStrategy::Both)
        && spec.ordered_bias_allowed;
    let cell_fix = matches!(symmetry, SymmetryStrategy::CellFix | SymmetryStrategy::Both);
    if ordered_bias {
        for r in 0..m.saturating_sub(1) {
            constraints.push(Constraint {
                coeffs: vec![(b(r), 1.0), (b(r + 1), -1.0)],
                sense: Sense::Ge,
                rhs: 0.0,
            });
        }
        variables[b(m - 1)].lb = 0.0;
    }
    if cell_fix {
        // fix cell 0 to class 1 and pin the first class-1 point to it
        let zi = z(0, 1);
        variables[zi].lb = 1.0;
        if let Some(i) = (0..n).find(|&i| spec.data.label(i) == 1) {
            let vi = v(i, 0);
            variables[vi].lb = 1.0;
        }
    }

    let objective = (0..n)
        .flat_map(|i| (0..m).map(move |r| (i, r)))
        .map(|(i, r)| (e(i, r), 1.0))
        .collect();

    MilpModel {
        variables,
        constraints,
        objective,
        guards: Vec::new(),
    }
}

/// Bounds, big-M values, and intercept bound implied by a coefficient family.
fn family_geometry(
    data: &Dataset,
    a_kind: &AKind,
) -> (Vec<(f64, f64)>, (f64, f64), Vec<f64>) {
    let d = data.feature_count();
    match a_kind {
        AKind::NormBall { p, kappa } => {
            let delta = compute_big_m(data, *kappa, *p);
            let bar: f64 = data
                .points()
                .iter()
                .map(|x| kappa * p.eval(x))
                .fold(0.0, f64::max);
            (
                vec![(-kappa, *kappa); d],
                (-(1.0 + bar), 1.0 + bar),
                delta,
            )
        }
        AKind::AxisAligned { kappa } => {
            let delta = compute_big_m(data, *kappa, PNorm::LInf);
            let bar: f64 = data
                .points()
                .iter()
                .map(|x| kappa * PNorm::LInf.eval(x))
                .fold(0.0, f64::max);
            (
                vec![(-kappa, *kappa); d],
                (-(1.0 + bar), 1.0 + bar),
                delta,
            )
        }
        AKind::DiscreteList { candidates } => {
            let mut coef_bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); d];
            let mut b_lo = f64::INFINITY;
            let mut b_hi = f64::NEG_INFINITY;
            for (a, b) in candidates {
                for j in 0..d {
                    coef_bounds[j].0 = coef_bounds[j].0.min(a[j]);
                    coef_bounds[j].1 = coef_bounds[j].1.max(a[j]);
                }
                b_lo = b_lo.min(*b);
                b_hi = b_hi.max(*b);
            }
            let delta = data
                .points()
                .iter()
                .map(|x| {
                    let worst = candidates
                        .iter()
                        .map(|(a, b)| {
                            (a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>() + b).abs()
                        })
                        .fold(0.0f64, f64::max);
                    (1.0 + worst).max(2.0)
                })
                .collect();
            (coef_bounds, (b_lo, b_hi), delta)
        }
    }
}

/// Appends the coefficient-family encoding (extra variables, rows, or lazy
/// guards) to a core model with explicit coefficients.
fn append_family_encoding(model: &mut MilpModel, a_kind: &AKind, m: usize, d: usize) {
    let coef = |r: usize, j: usize| r * d + j;
    match a_kind {
        AKind::NormBall { p: PNorm::L1, .. } => {
            // q = infinity: the box bounds are the exact encoding
        }
        AKind::NormBall { p: PNorm::L2, kappa } => {
            for r in 0..m {
                model.guards.push(ConicGuard::NormBall {
                    vars: (0..d).map(|j| coef(r, j)).collect(),
                    kappa: *kappa,
                });
            }
        }
        AKind::NormBall { p: PNorm::LInf, kappa } => {
            // q = 1: split a = a+ - a- and bound the sum
            for r in 0..m {
                let base = model.variables.len();
                for j in 0..d {
                    model.variables.push(Variable {
                        name: format!("ap_{r}_{j}"),
                        kind: VarKind::Continuous,
                        lb: 0.0,
                        ub: *kappa,
                        role: VarRole::CoefPos { r, j },
                    });
                    model.variables.push(Variable {
                        name: format!("an_{r}_{j}"),
                        kind: VarKind::Continuous,
                        lb: 0.0,
                        ub: *kappa,
                        role: VarRole::CoefNeg { r, j },
                    });
                }
                for j in 0..d {
                    model.constraints.push(Constraint {
                        coeffs: vec![
                            (coef(r, j), 1.0),
                            (base + 2 * j, -1.0),
                            (base + 2 * j + 1, 1.0),
                        ],
                        sense: Sense::Eq,
                        rhs: 0.0,
                    });
                }
                model.constraints.push(Constraint {
                    coeffs: (0..2 * d).map(|idx| (base + idx, 1.0)).collect(),
                    sense: Sense::Le,
                    rhs: *kappa,
                });
            }
        }
        AKind::AxisAligned { kappa } => {
            for r in 0..m {
                let base = model.variables.len();
                for j in 0..d {
                    model.variables.push(Variable {
                        name: format!("s_{r}_{j}"),
                        kind: VarKind::Binary,
                        lb: 0.0,
                        ub: 1.0,
                        role: VarRole::AxisSelect { r, j },
                    });
                }
                model.constraints.push(Constraint {
                    coeffs: (0..d).map(|j| (base + j, 1.0)).collect(),
                    sense: Sense::Eq,
                    rhs: 1.0,
                });
                for j in 0..d {
                    model.constraints.push(Constraint {
                        coeffs: vec![(coef(r, j), 1.0), (base + j, -kappa)],
                        sense: Sense::Le,
                        rhs: 0.0,
                    });
                    model.constraints.push(Constraint {
                        coeffs: vec![(coef(r, j), 1.0), (base + j, *kappa)],
                        sense: Sense::Ge,
                        rhs: 0.0,
                    });
                }
            }
        }
        AKind::DiscreteList { candidates } => {
            let b_off = m * d;
            for r in 0..m {
                let base = model.variables.len();
                for l in 0..candidates.len() {
                    model.variables.push(Variable {
                        name: format!("w_{r}_{l}"),
                        kind: VarKind::Binary,
                        lb: 0.0,
                        ub: 1.0,
                        role: VarRole::CandidateSelect { r, l },
                    });
                }
                model.constraints.push(Constraint {
                    coeffs: (0..candidates.len()).map(|l| (base + l, 1.0)).collect(),
                    sense: Sense::Eq,
                    rhs: 1.0,
                });
                for j in 0..d {
                    let mut coeffs = vec![(coef(r, j), 1.0)];
                    coeffs.extend(
                        candidates
                            .iter()
                            .enumerate()
                            .filter(|(_, (a, _))| a[j] != 0.0)
                            .map(|(l, (a, _))| (base + l, -a[j])),
                    );
                    model.constraints.push(Constraint {
                        coeffs,
                        sense: Sense::Eq,
                        rhs: 0.0,
                    });
                }
                let mut coeffs = vec![(b_off + r, 1.0)];
                coeffs.extend(
                    candidates
                        .iter()
                        .enumerate()
                        .filter(|(_, (_, b))| *b != 0.0)
                        .map(|(l, (_, b))| (base + l, -*b)),
                );
                model.constraints.push(Constraint {
                    coeffs,
                    sense: Sense::Eq,
                    rhs: 0.0,
                });
            }
        }
    }
}

/// Builds the hyperplane-arrangement model: binaries `v_ic`, `z_ck`,
/// continuous branch indicators, big-M hinge rows, the coefficient-family
/// encoding, and the requested symmetry rows. Objective: total hinge error.
pub fn build_arrangement_model(
    data: &Dataset,
    m: usize,
    a_kind: &AKind,
    symmetry: SymmetryStrategy,
) -> Result<MilpModel, ModelError> {
    a_kind.validate(data.feature_count())?;
    let cells = enumerate_cells(m)?;
    if data.len().saturating_mul(cells.len()) > 20_000_000 {
        return Err(ModelError::TooLarge(format!(
            "n * 2^m = {} exceeds the materializable range",
            data.len() * cells.len()
        )));
    }
    let branch = branch_sets(&cells);
    build_with_branch_sets(data, &branch, a_kind, symmetry, true)
}

/// Builds the tree-structured variant: same formulation, but branch sets come
/// from the descendant-leaf structure of a complete depth-`D` binary tree.
/// Ordered-bias symmetry is disabled (branch nodes are not interchangeable).
pub fn build_tree_model(
    data: &Dataset,
    depth: usize,
    a_kind: &AKind,
    symmetry: SymmetryStrategy,
) -> Result<MilpModel, ModelError> {
    a_kind.validate(data.feature_count())?;
    let branch = tree_leaf_sets(depth)?;
    build_with_branch_sets(data, &branch, a_kind, symmetry, false)
}

/// Like [`build_arrangement_model`], but scales every deactivation constant
/// `Delta_i` by `delta_scale`. Useful for verifying that the derived constants
/// are already non-binding (scaling them up must not change the optimum).
pub fn build_arrangement_model_scaled_delta(
    data: &Dataset,
    m: usize,
    a_kind: &AKind,
    symmetry: SymmetryStrategy,
    delta_scale: f64,
) -> Result<MilpModel, ModelError> {
    a_kind.validate(data.feature_count())?;
    let cells = enumerate_cells(m)?;
    let branch = branch_sets(&cells);
    build_with_branch_sets_scaled(data, &branch, a_kind, symmetry, true, delta_scale)
}

fn build_with_branch_sets(
    data: &Dataset,
    branch: &BranchSets,
    a_kind: &AKind,
    symmetry: SymmetryStrategy,
    ordered_bias_allowed: bool,
) -> Result<MilpModel, ModelError> {
    build_with_branch_sets_scaled(data, branch, a_kind, symmetry, ordered_bias_allowed, 1.0)
}

fn build_with_branch_sets_scaled(
    data: &Dataset,
    branch: &BranchSets,
    a_kind: &AKind,
    symmetry: SymmetryStrategy,
    ordered_bias_allowed: bool,
    delta_scale: f64,
) -> Result<MilpModel, ModelError> {
    let d = data.feature_count();
    let m = branch.split_count();
    let (coef_bounds, intercept_bounds, mut delta) = family_geometry(data, a_kind);
    for dv in &mut delta {
        *dv *= delta_scale;
    }
    let spec = CoreModelSpec {
        data,
        branch,
        score_rows: data.points().to_vec(),
        coef_count: d,
        coef_bounds,
        intercept_bounds,
        delta,
        coef_style: CoefStyle::Explicit,
        ordered_bias_allowed,
    };
    let mut model = build_core_model(&spec, symmetry);
    append_family_encoding(&mut model, a_kind, m, d);
    model.validate()?;
    Ok(model)
}
