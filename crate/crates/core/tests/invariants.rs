//! Property-based invariant suites, one module per library area.

use hyparr::arrangement::{enumerate_cells, sign_pattern, Cell};
use hyparr::classifier::{fit, FitConfig};
use hyparr::dataset::{generate_blobs, BlobSpec, Dataset, LabelColumn};
use hyparr::heuristic::{centroid_dataset, init_clusters, kmeans};
use hyparr::kernel::{gram, KernelFn};
use hyparr::milp::{build_arrangement_model, AKind, PNorm, SymmetryStrategy, VarRole};
use hyparr::solver::{solve, SolveOptions, SolveStatus};
use proptest::prelude::*;

fn norm_ball(kappa: f64) -> AKind {
    AKind::NormBall { p: PNorm::L2, kappa }
}

fn blob(n: usize, b: usize, k: usize, d: usize, spread: f64, seed: u64) -> Dataset {
    generate_blobs(&BlobSpec {
        n,
        clusters_per_class: b,
        class_count: k,
        dimension: d,
        spread,
        seed,
    })
    .unwrap()
}

fn tight() -> SolveOptions {
    SolveOptions {
        time_limit: 60.0,
        rel_gap_target: 1e-9,
        ..Default::default()
    }
}

/// Strategy: a small random dataset with two classes in the plane.
fn small_blob() -> impl Strategy<Value = Dataset> {
    (4usize..=8, 1u64..500, 1u32..30).prop_map(|(n, seed, spread10)| {
        blob(n, 1, 2, 2, spread10 as f64 / 10.0, seed)
    })
}

mod arrangement_invariants {
    use super::*;

    proptest! {
        /// Cell index <-> sign vector is a bijection on 2^m cells.
        #[test]
        fn cell_encoding_bijection(m in 1usize..=10) {
            let cells = enumerate_cells(m).unwrap();
            prop_assert_eq!(cells.len(), 1usize << m);
            for (i, c) in cells.iter().enumerate() {
                prop_assert_eq!(c.index(), i);
                prop_assert_eq!(c.signs.len(), m);
                let rebuilt = Cell {
                    signs: (0..m).map(|r| if i >> r & 1 == 1 { 1 } else { -1 }).collect(),
                };
                prop_assert_eq!(c, &rebuilt);
            }
        }

        /// A query point's sign pattern indexes the cell that contains it.
        #[test]
        fn sign_pattern_matches_definition(
            coords in proptest::collection::vec(-5.0f64..5.0, 6),
            x in proptest::collection::vec(-5.0f64..5.0, 2),
        ) {
            let hps: Vec<(Vec<f64>, f64)> = coords
                .chunks(3)
                .map(|c| (vec![c[0], c[1]], c[2]))
                .collect();
            let cell = sign_pattern(&hps, &x);
            for (r, (a, b)) in hps.iter().enumerate() {
                let v = a[0] * x[0] + a[1] * x[1] + b;
                prop_assert_eq!(cell.signs[r] > 0, v >= 0.0);
            }
        }
    }
}

mod model_invariants {
    use super::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        /// On every incumbent the relaxed branch indicators satisfy t + u = 1
        /// and are integral.
        #[test]
        fn branch_indicators_partition(data in small_blob()) {
            let model =
                build_arrangement_model(&data, 1, &norm_ball(2.0), SymmetryStrategy::CellFix)
                    .unwrap();
            let res = solve(&model, &tight());
            prop_assert_eq!(res.status, SolveStatus::Optimal);
            let x = res.incumbent.unwrap();
            for (j, v) in model.variables.iter().enumerate() {
                if let VarRole::Left { r, i } = v.role {
                    let u = model.var_index(&VarRole::Right { r, i }).unwrap();
                    prop_assert!((x[j] + x[u] - 1.0).abs() < 1e-6);
                    prop_assert!((x[j] - x[j].round()).abs() < 1e-6);
                }
            }
        }

        /// Relabeling the classes permutes nothing that matters: the optimal
        /// objective is invariant under swapping class 1 and 2.
        #[test]
        fn objective_label_permutation_invariant(data in small_blob()) {
            let swapped = Dataset::new(
                data.points().to_vec(),
                data.labels().iter().map(|&y| 3 - y).collect(),
            )
            .unwrap();
            let m1 = build_arrangement_model(&data, 1, &norm_ball(2.0), SymmetryStrategy::CellFix)
                .unwrap();
            let m2 =
                build_arrangement_model(&swapped, 1, &norm_ball(2.0), SymmetryStrategy::CellFix)
                    .unwrap();
            let (r1, r2) = (solve(&m1, &tight()), solve(&m2, &tight()));
            prop_assert_eq!(r1.status, SolveStatus::Optimal);
            prop_assert_eq!(r2.status, SolveStatus::Optimal);
            prop_assert!((r1.objective - r2.objective).abs() < 1e-6);
        }

        /// Identical inputs give identical classifiers, bit for bit.
        #[test]
        fn fit_deterministic(data in small_blob()) {
            let cfg = FitConfig::arrangement(1, norm_ball(2.0));
            let f1 = fit(&data, &cfg).unwrap();
            let f2 = fit(&data, &cfg).unwrap();
            prop_assert_eq!(f1, f2);
        }
    }
}

mod kernel_invariants {
    use super::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        /// The computed pseudoinverse satisfies the Moore-Penrose identities
        /// K K+ K = K, K+ K K+ = K+, and both products are symmetric.
        #[test]
        fn moore_penrose_identities(
            n in 3usize..=10,
            seed in 1u64..1000,
            sigma10 in 2u32..40,
        ) {
            let data = blob(n, 1, 2, 3, 1.0, seed);
            let kfn = KernelFn::Rbf { sigma: sigma10 as f64 / 10.0 };
            let bundle = gram(&data, &kfn).unwrap();
            let k = &bundle.gram;
            let p = &bundle.pinv;
            prop_assert!((k * p * k - k).norm() < 1e-7);
            prop_assert!((p * k * p - p).norm() < 1e-7);
            prop_assert!(((k * p) - (k * p).transpose()).norm() < 1e-7);
            prop_assert!(((p * k) - (p * k).transpose()).norm() < 1e-7);
        }
    }
}

mod heuristic_invariants {
    use super::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        /// Seeded clustering never mixes classes within a cluster, covers all
        /// points, and its centroid dataset carries the cluster labels.
        #[test]
        fn clustering_class_purity(
            n in 20usize..=60,
            k in 2usize..=3,
            per_class in 1usize..=3,
            seed in 1u64..500,
        ) {
            let data = blob(n, 2, k, 2, 1.0, seed);
            let clustering = init_clusters(&data, per_class, seed).unwrap();
            prop_assert!(clustering.validate(&data));
            for (i, &c) in clustering.assignment.iter().enumerate() {
                prop_assert_eq!(clustering.cluster_labels[c], data.label(i));
            }
            let cds = centroid_dataset(&clustering).unwrap();
            prop_assert_eq!(cds.len(), clustering.cluster_count());
            for (c, &lbl) in clustering.cluster_labels.iter().enumerate() {
                prop_assert_eq!(cds.label(c), lbl);
            }
        }

        /// k-means on a single class keeps every point assigned and the
        /// centroids inside the data's bounding box.
        #[test]
        fn kmeans_assigns_everything(
            n in 8usize..=30,
            clusters in 1usize..=4,
            seed in 1u64..500,
        ) {
            let data = blob(n, 1, 2, 2, 1.0, seed);
            let points: Vec<Vec<f64>> =
                (0..data.len()).filter(|&i| data.label(i) == 1).map(|i| data.point(i).to_vec()).collect();
            prop_assume!(points.len() >= clusters);
            let (assign, centroids) = kmeans(&points, clusters, seed).unwrap();
            prop_assert_eq!(assign.len(), points.len());
            for &c in &assign {
                prop_assert!(c < centroids.len());
            }
            for j in 0..2 {
                let lo = points.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min);
                let hi = points.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max);
                for c in &centroids {
                    prop_assert!(c[j] >= lo - 1e-9 && c[j] <= hi + 1e-9);
                }
            }
        }
    }
}

mod serialization_invariants {
    use super::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        /// Classifier JSON round-trips exactly.
        #[test]
        fn classifier_roundtrip(data in small_blob()) {
            let cfg = FitConfig::arrangement(1, norm_ball(2.0));
            let clf = fit(&data, &cfg).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("clf.json");
            clf.save(&path).unwrap();
            let back = hyparr::Classifier::load(&path).unwrap();
            prop_assert_eq!(clf, back);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        /// Dataset CSV round-trips: points to full float precision, labels
        /// exactly.
        #[test]
        fn dataset_csv_roundtrip(n in 4usize..=30, seed in 1u64..1000) {
            let data = blob(n, 1, 2, 3, 1.0, seed);
            let mut buf = Vec::new();
            data.write_csv(&mut buf).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("d.csv");
            std::fs::write(&path, &buf).unwrap();
            let back = Dataset::load_csv(&path, &LabelColumn::Name("label".into())).unwrap();
            prop_assert_eq!(back.labels(), data.labels());
            for i in 0..n {
                for j in 0..3 {
                    prop_assert!((back.point(i)[j] - data.point(i)[j]).abs() < 1e-12);
                }
            }
        }
    }
}
