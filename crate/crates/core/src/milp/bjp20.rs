//! The prior multiclass-SVM hyperplane-arrangement MIP, kept as a benchmark
//! opponent. It assigns points (not cells) to classes, picks per-point
//! representatives, and trades off margin against in-margin and out-margin
//! errors through two cost parameters.

use crate::arrangement::ArrangementError;
use crate::dataset::Dataset;

use super::{
    compute_big_m, ConicGuard, Constraint, MilpModel, ModelError, PNorm, Sense, VarKind, VarRole,
    Variable,
};

/// Default cap on the squared-norm variable theta. The original description
/// leaves theta unbounded; a finite cap is required for valid big-T values,
/// so it is exposed as a configuration knob.
pub const DEFAULT_THETA_HAT: f64 = 100.0;

/// Builds the benchmark model with the default theta cap.
pub fn build_bjp20_model(
    data: &Dataset,
    m: usize,
    c1: f64,
    c2: f64,
) -> Result<MilpModel, ModelError> {
    build_bjp20_model_with_theta(data, m, c1, c2, DEFAULT_THETA_HAT)
}

/// Builds the benchmark model.
///
/// Objective: `theta + c1 * sum e^O + c2 * sum e^I`. The quadratic margin
/// rows `theta >= ||a_r||^2` become lazy convex guards; the l1-norm class
/// consistency rows are linearized with absolute-value auxiliaries. Big-T is
/// derived from the norm bound `||a_r||_2 <= sqrt(theta_hat)`.
pub fn build_bjp20_model_with_theta(
    data: &Dataset,
    m: usize,
    c1: f64,
    c2: f64,
    theta_hat: f64,
) -> Result<MilpModel, ModelError> {
    if m == 0 || m > 20 {
        return Err(ModelError::Arrangement(
            ArrangementError::HyperplaneCountOutOfRange(m),
        ));
    }
    if !(c1 > 0.0) || !(c2 > 0.0) {
        return Err(ModelError::InvalidParameter(format!(
            "cost parameters must be positive, got c1={c1}, c2={c2}"
        )));
    }
    if !(theta_hat > 0.0) {
        return Err(ModelError::InvalidParameter(format!(
            "theta cap must be positive, got {theta_hat}"
        )));
    }

    let n = data.len();
    let d = data.feature_count();
    let k_count = data.class_count();
    let kappa = theta_hat.sqrt();
    let big_t = compute_big_m(data, kappa, PNorm::L2)
        .into_iter()
        .fold(0.0f64, f64::max);
    let bar: f64 = data
        .points()
        .iter()
        .map(|x| kappa * PNorm::L2.eval(x))
        .fold(0.0, f64::max);

    let mut variables = Vec::new();
    for r in 0..m {
        for j in 0..d {
            variables.push(Variable {
                name: format!("a_{r}_{j}"),
                kind: VarKind::Continuous,
                lb: -kappa,
                ub: kappa,
                role: VarRole::Coef { r, j },
            });
        }
    }
    let off_b = variables.len();
    for r in 0..m {
        variables.push(Variable {
            name: format!("b_{r}"),
            kind: VarKind::Continuous,
            lb: -(1.0 + bar),
            ub: 1.0 + bar,
            role: VarRole::Intercept { r },
        });
    }
    let off_eo = variables.len();
    for i in 0..n {
        for r in 0..m {
            variables.push(Variable {
                name: format!("eO_{i}_{r}"),
                kind: VarKind::Continuous,
                lb: 0.0,
                ub: f64::INFINITY,
                role: VarRole::OutMargin { i, r },
            });
        }
    }
    let off_ei = variables.len();
    for i in 0..n {
        for r in 0..m {
            variables.push(Variable {
                name: format!("eI_{i}_{r}"),
                kind: VarKind::Continuous,
                lb: 0.0,
                ub: f64::INFINITY,
                role: VarRole::InMargin { i, r },
            });
        }
    }
    let theta = variables.len();
    variables.push(Variable {
        name: "theta".into(),
        kind: VarKind::Continuous,
        lb: 0.0,
        ub: theta_hat,
        role: VarRole::Theta,
    });
    let off_t = variables.len();
    for r in 0..m {
        for i in 0..n {
            variables.push(Variable {
                name: format!("t_{r}_{i}"),
                kind: VarKind::Binary,
                lb: 0.0,
                ub: 1.0,
                role: VarRole::Left { r, i },
            });
        }
    }
    let off_z = variables.len();
    for i in 0..n {
        for k in 1..=k_count {
            variables.push(Variable {
                name: format!("z_{i}_{k}"),
                kind: VarKind::Binary,
                lb: 0.0,
                ub: 1.0,
                role: VarRole::PointClass { i, k },
            });
        }
    }
    let off_xi = variables.len();
    for i in 0..n {
        variables.push(Variable {
            name: format!("xi_{i}"),
            kind: VarKind::Binary,
            lb: 0.0,
            ub: 1.0,
            role: VarRole::Misclassified { i },
        });
    }
    let off_h = variables.len();
    for i in 0..n {
        for j in 0..n {
            // representatives only make sense within a class; cross-class
            // entries are declared (they are part of the model's variable
            // count) but pinned to zero
            let ub = if data.label(i) == data.label(j) {
                1.0
            } else {
                0.0
            };
            variables.push(Variable {
                name: format!("h_{i}_{j}"),
                kind: VarKind::Binary,
                lb: 0.0,
                ub,
                role: VarRole::Representative { i, j },
            });
        }
    }
    // l1 linearization auxiliaries over unordered pairs i < j
    let mut wz_base = vec![vec![0usize; n]; n];
    let mut st_base = vec![vec![0usize; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            wz_base[i][j] = variables.len();
            for k in 1..=k_count {
                variables.push(Variable {
                    name: format!("wz_{i}_{j}_{k}"),
                    kind: VarKind::Continuous,
                    lb: 0.0,
                    ub: 1.0,
                    role: VarRole::ClassDiff { i, j, k },
                });
            }
            st_base[i][j] = variables.len();
            for r in 0..m {
                variables.push(Variable {
                    name: format!("st_{r}_{i}_{j}"),
                    kind: VarKind::Continuous,
                    lb: 0.0,
                    ub: 1.0,
                    role: VarRole::SideDiff { r, i, j },
                });
            }
        }
    }

    let a = |r: usize, j: usize| r * d + j;
    let b = |r: usize| off_b + r;
    let eo = |i: usize, r: usize| off_eo + i * m + r;
    let ei = |i: usize, r: usize| off_ei + i * m + r;
    let t = |r: usize, i: usize| off_t + r * n + i;
    let z = |i: usize, k: usize| off_z + i * k_count + (k - 1);
    let xi = |i: usize| off_xi + i;
    let h = |i: usize, j: usize| off_h + i * n + j;

    let score = |r: usize, i: usize, sign: f64| -> Vec<(usize, f64)> {
        let mut coeffs: Vec<(usize, f64)> = data.point(i)
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(|(j, &x)| (a(r, j), sign * x))
            .collect();
        coeffs.push((b(r), sign));
        coeffs
    };

    let mut constraints = Vec::new();
    // side indicators: a.x_i + b >= -T(1 - t_ri) and a.x_i + b <= T t_ri
    for r in 0..m {
        for i in 0..n {
            let mut coeffs = score(r, i, 1.0);
            coeffs.push((t(r, i), -big_t));
            constraints.push(Constraint {
                coeffs,
                sense: Sense::Ge,
                rhs: -big_t,
            });
            let mut coeffs = score(r, i, 1.0);
            coeffs.push((t(r, i), -big_t));
            constraints.push(Constraint {
                coeffs,
                sense: Sense::Le,
                rhs: 0.0,
            });
        }
    }
    // each point gets exactly one class
    for i in 0..n {
        constraints.push(Constraint {
            coeffs: (1..=k_count).map(|k| (z(i, k), 1.0)).collect(),
            sense: Sense::Eq,
            rhs: 1.0,
        });
    }
    // ||z_i - z_j||_1 <= 2 ||t_i - t_j||_1 via absolute-value auxiliaries:
    // wz_ijk sits above |z_ik - z_jk|, st_ijr below |t_ri - t_rj|
    for i in 0..n {
        for j in i + 1..n {
            for k in 1..=k_count {
                let wz = wz_base[i][j] + (k - 1);
                constraints.push(Constraint {
                    coeffs: vec![(wz, 1.0), (z(i, k), -1.0), (z(j, k), 1.0)],
                    sense: Sense::Ge,
                    rhs: 0.0,
                });
                constraints.push(Constraint {
                    coeffs: vec![(wz, 1.0), (z(i, k), 1.0), (z(j, k), -1.0)],
                    sense: Sense::Ge,
                    rhs: 0.0,
                });
            }
            for r in 0..m {
                let st = st_base[i][j] + r;
                constraints.push(Constraint {
                    coeffs: vec![(st, 1.0), (t(r, i), -1.0), (t(r, j), -1.0)],
                    sense: Sense::Le,
                    rhs: 0.0,
                });
                constraints.push(Constraint {
                    coeffs: vec![(st, 1.0), (t(r, i), 1.0), (t(r, j), 1.0)],
                    sense: Sense::Le,
                    rhs: 2.0,
                });
            }
            let mut coeffs: Vec<(usize, f64)> =
                (0..k_count).map(|k| (wz_base[i][j] + k, 1.0)).collect();
            coeffs.extend((0..m).map(|r| (st_base[i][j] + r, -2.0)));
            constraints.push(Constraint {
                coeffs,
                sense: Sense::Le,
                rhs: 0.0,
            });
        }
    }
    // one representative per point, chosen within its class
    for i in 0..n {
        constraints.push(Constraint {
            coeffs: (0..n)
                .filter(|&j| data.label(j) == data.label(i))
                .map(|j| (h(i, j), 1.0))
                .collect(),
            sense: Sense::Eq,
            rhs: 1.0,
        });
    }
    // misclassified points cannot represent anyone
    for i in 0..n {
        for j in 0..n {
            if i != j && data.label(i) == data.label(j) {
                constraints.push(Constraint {
                    coeffs: vec![(xi(j), 1.0), (h(i, j), 1.0)],
                    sense: Sense::Le,
                    rhs: 1.0,
                });
            }
        }
    }
    // well-classified points represent themselves: h_ii + xi_i = 1
    for i in 0..n {
        constraints.push(Constraint {
            coeffs: vec![(h(i, i), 1.0), (xi(i), 1.0)],
            sense: Sense::Eq,
            rhs: 1.0,
        });
    }
    // "well classified" means assigned its own class: z_{i,y_i} = 1 - xi_i.
    // Without this link the xi/h machinery is vacuous and the model is
    // trivially zero (a = 0, every point "well classified").
    for i in 0..n {
        constraints.push(Constraint {
            coeffs: vec![(z(i, data.label(i)), 1.0), (xi(i), 1.0)],
            sense: Sense::Eq,
            rhs: 1.0,
        });
    }
    // in-margin and out-margin error definitions, relative to the chosen
    // representative j of point i (same-class ordered pairs, i = j included)
    for i in 0..n {
        for j in 0..n {
            if data.label(i) != data.label(j) {
                continue;
            }
            for r in 0..m {
                // a.x_i + b >= 1 - eI_ir - T (3 - t_ri - t_rj - h_ij)
                let mut coeffs = score(r, i, 1.0);
                coeffs.push((ei(i, r), 1.0));
                coeffs.push((t(r, i), -big_t));
                coeffs.push((t(r, j), -big_t));
                coeffs.push((h(i, j), -big_t));
                constraints.push(Constraint {
                    coeffs,
                    sense: Sense::Ge,
                    rhs: 1.0 - 3.0 * big_t,
                });
                // a.x_i + b <= -1 + eI_ir + T (1 + t_ri + t_rj - h_ij)
                let mut coeffs = score(r, i, 1.0);
                coeffs.push((ei(i, r), -1.0));
                coeffs.push((t(r, i), -big_t));
                coeffs.push((t(r, j), -big_t));
                coeffs.push((h(i, j), big_t));
                constraints.push(Constraint {
                    coeffs,
                    sense: Sense::Le,
                    rhs: -1.0 + big_t,
                });
                // eO_ir >= 1 - a.x_i - b - T (2 + t_ri - t_rj - h_ij)
                let mut coeffs = score(r, i, 1.0);
                coeffs.push((eo(i, r), 1.0));
                coeffs.push((t(r, i), -big_t));
                coeffs.push((t(r, j), big_t));
                coeffs.push((h(i, j), big_t));
                constraints.push(Constraint {
                    coeffs,
                    sense: Sense::Ge,
                    rhs: 1.0 - 2.0 * big_t,
                });
                // eO_ir >= 1 + a.x_i + b - T (2 - t_ri + t_rj - h_ij)
                let mut coeffs = score(r, i, -1.0);
                coeffs.push((eo(i, r), 1.0));
                coeffs.push((t(r, i), big_t));
                coeffs.push((t(r, j), -big_t));
                coeffs.push((h(i, j), big_t));
                constraints.push(Constraint {
                    coeffs,
                    sense: Sense::Ge,
                    rhs: 1.0 - 2.0 * big_t,
                });
            }
        }
    }

    let mut objective = vec![(theta, 1.0)];
    for i in 0..n {
        for r in 0..m {
            objective.push((eo(i, r), c1));
            objective.push((ei(i, r), c2));
        }
    }

    let guards = (0..m)
        .map(|r| ConicGuard::SqNormLeVar {
            vars: (0..d).map(|j| a(r, j)).collect(),
            bound_var: theta,
        })
        .collect();

    let model = MilpModel {
        variables,
        constraints,
        objective,
        guards,
    };
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_blobs, BlobSpec};

    fn tiny_data(n: usize) -> Dataset {
        generate_blobs(&BlobSpec {
            n,
            clusters_per_class: 1,
            class_count: 2,
            dimension: 2,
            spread: 1.0,
            seed: 1,
        })
        .unwrap()
    }

    #[test]
    fn binary_count_n10_m2_k2() {
        let data = tiny_data(10);
        let model = build_bjp20_model(&data, 2, 1.0, 1.0).unwrap();
        // n^2 + nm + nK + n = 100 + 20 + 20 + 10
        assert_eq!(model.num_binaries(), 150);
    }

    #[test]
    fn self_representation_rows_present() {
        let data = tiny_data(6);
        let model = build_bjp20_model(&data, 1, 1.0, 2.0).unwrap();
        let mut found = 0;
        for con in &model.constraints {
            if con.sense == Sense::Eq && con.rhs == 1.0 && con.coeffs.len() == 2 {
                let roles: Vec<&VarRole> = con
                    .coeffs
                    .iter()
                    .map(|&(j, _)| &model.variables[j].role)
                    .collect();
                if let [VarRole::Representative { i, j }, VarRole::Misclassified { i: i2 }] =
                    roles[..]
                {
                    if i == j && i == i2 {
                        found += 1;
                    }
                }
            }
        }
        assert_eq!(found, data.len());
    }

    #[test]
    fn misclassified_point_cannot_represent_others() {
        let data = tiny_data(6);
        let model = build_bjp20_model(&data, 1, 1.0, 1.0).unwrap();
        // some (xi_j + h_ij <= 1) row exists for a same-class pair i != j
        let found = model.constraints.iter().any(|con| {
            con.sense == Sense::Le
                && con.rhs == 1.0
                && con.coeffs.len() == 2
                && con.coeffs.iter().any(|&(j, _)| {
                    matches!(model.variables[j].role, VarRole::Misclassified { .. })
                })
                && con.coeffs.iter().any(|&(j, _)| {
                    matches!(
                        model.variables[j].role,
                        VarRole::Representative { i, j } if i != j
                    )
                })
        });
        assert!(found);
    }

    #[test]
    fn cross_class_representatives_pinned_to_zero() {
        let data = tiny_data(6);
        let model = build_bjp20_model(&data, 1, 1.0, 1.0).unwrap();
        for v in &model.variables {
            if let VarRole::Representative { i, j } = v.role {
                if data.label(i) != data.label(j) {
                    assert_eq!(v.ub, 0.0);
                }
            }
        }
    }

    #[test]
    fn theta_guard_per_hyperplane() {
        let data = tiny_data(6);
        let model = build_bjp20_model(&data, 3, 1.0, 1.0).unwrap();
        assert_eq!(model.guards.len(), 3);
        let theta = model.var_index(&VarRole::Theta).unwrap();
        for g in &model.guards {
            match g {
                ConicGuard::SqNormLeVar { bound_var, .. } => assert_eq!(*bound_var, theta),
                other => panic!("unexpected guard {other:?}"),
            }
        }
    }

    #[test]
    fn misclassification_linked_to_assignment() {
        let data = tiny_data(6);
        let model = build_bjp20_model(&data, 1, 1.0, 1.0).unwrap();
        // every point has a z_{i,y_i} + xi_i = 1 row
        let mut found = vec![false; data.len()];
        for con in &model.constraints {
            if con.sense == Sense::Eq && con.rhs == 1.0 && con.coeffs.len() == 2 {
                let roles: Vec<&VarRole> = con
                    .coeffs
                    .iter()
                    .map(|&(j, _)| &model.variables[j].role)
                    .collect();
                if let [VarRole::PointClass { i, k }, VarRole::Misclassified { i: i2 }] = roles[..]
                {
                    if i == i2 && *k == data.label(*i) {
                        found[*i] = true;
                    }
                }
            }
        }
        assert!(found.iter().all(|&f| f));
    }

    #[test]
    fn rejects_nonpositive_costs() {
        let data = tiny_data(6);
        assert!(build_bjp20_model(&data, 1, 0.0, 1.0).is_err());
        assert!(build_bjp20_model(&data, 1, 1.0, -2.0).is_err());
        assert!(build_bjp20_model(&data, 0, 1.0, 1.0).is_err());
    }
}
