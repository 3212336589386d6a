//! Dynamic-clustering matheuristic: train the exact model on class-pure
//! cluster centroids, evaluate on the full data, split clusters cut by the
//! fitted hyperplanes, merge small fragments, and iterate.

use std::io::Write;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::classifier::{fit_with_warm_start, Classifier, ClassifierError, FitConfig};
use crate::dataset::Dataset;

#[derive(Debug, Error)]
pub enum HeuristicError {
    #[error("k = {k} exceeds the number of distinct points ({distinct})")]
    TooManyClusters { k: usize, distinct: usize },
    #[error("class {class} has {points} points, fewer than {requested} clusters")]
    ClassTooSmall {
        class: usize,
        points: usize,
        requested: usize,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("inner fit failed at iteration {iteration}: {source}")]
    FitFailed {
        iteration: usize,
        source: ClassifierError,
    },
    #[error(transparent)]
    Data(#[from] crate::dataset::DataError),
}

/// A class-pure clustering of the training points.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Point index -> cluster id.
    pub assignment: Vec<usize>,
    /// Cluster id -> centroid.
    pub centroids: Vec<Vec<f64>>,
    /// Cluster id -> class (every member shares it).
    pub cluster_labels: Vec<usize>,
    pub iteration: usize,
}

impl Clustering {
    pub fn cluster_count(&self) -> usize {
        self.centroids.len()
    }

    /// Checks class purity, centroid means, and total assignment.
    pub fn validate(&self, data: &Dataset) -> bool {
        let k = self.cluster_count();
        if self.assignment.len() != data.len() || self.cluster_labels.len() != k {
            return false;
        }
        let mut sums = vec![vec![0.0; data.feature_count()]; k];
        let mut counts = vec![0usize; k];
        for (i, &c) in self.assignment.iter().enumerate() {
            if c >= k || self.cluster_labels[c] != data.label(i) {
                return false;
            }
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(data.point(i)) {
                *s += v;
            }
        }
        counts.iter().all(|&c| c > 0)
            && (0..k).all(|c| {
                self.centroids[c]
                    .iter()
                    .zip(&sums[c])
                    .all(|(&ctr, &s)| (ctr - s / counts[c] as f64).abs() <= 1e-9)
            })
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn mean(points: &[Vec<f64>], members: &[usize]) -> Vec<f64> {
    let d = points[members[0]].len();
    let mut m = vec![0.0; d];
    for &i in members {
        for (mj, v) in m.iter_mut().zip(&points[i]) {
            *mj += v;
        }
    }
    for mj in &mut m {
        *mj /= members.len() as f64;
    }
    m
}

/// Lloyd's algorithm with k-means++ style seeding. Deterministic per seed;
/// empty clusters are reseeded to the point farthest from its centroid.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
) -> Result<(Vec<usize>, Vec<Vec<f64>>), HeuristicError> {
    let mut distinct: Vec<&Vec<f64>> = points.iter().collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if k == 0 || k > distinct.len() {
        return Err(HeuristicError::TooManyClusters {
            k,
            distinct: distinct.len(),
        });
    }
    let n = points.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding: first center uniform, then proportional to squared
    // distance from the nearest chosen center
    let mut centers: Vec<Vec<f64>> = vec![points[rng.gen_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // all remaining points coincide with a center; take any distinct one
            points
                .iter()
                .position(|p| centers.iter().all(|c| sq_dist(p, c) > 0.0))
                .unwrap_or(0)
        } else {
            let mut target = rng.gen_range(0.0..total);
            let mut idx = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    idx = i;
                    break;
                }
                target -= w;
            }
            idx
        };
        centers.push(points[next].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, centers.last().unwrap()));
        }
    }

    let mut assignment = vec![0usize; n];
    for _ in 0..300 {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| {
                    sq_dist(p, &centers[a])
                        .partial_cmp(&sq_dist(p, &centers[b]))
                        .unwrap()
                })
                .unwrap();
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        // reseed empty clusters to the globally farthest point
        for c in 0..k {
            if !assignment.contains(&c) {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(&points[a], &centers[assignment[a]])
                            .partial_cmp(&sq_dist(&points[b], &centers[assignment[b]]))
                            .unwrap()
                    })
                    .unwrap();
                assignment[far] = c;
                changed = true;
            }
        }
        for c in 0..k {
            let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == c).collect();
            centers[c] = mean(points, &members);
        }
        if !changed {
            break;
        }
    }
    Ok((assignment, centers))
}

/// Runs k-means independently within each class; cluster ids are globally
/// unique and grouped by class.
pub fn init_clusters(
    data: &Dataset,
    n_clusters_per_class: usize,
    seed: u64,
) -> Result<Clustering, HeuristicError> {
    let mut assignment = vec![0usize; data.len()];
    let mut centroids = Vec::new();
    let mut cluster_labels = Vec::new();
    for class in 1..=data.class_count() {
        let members: Vec<usize> = (0..data.len()).filter(|&i| data.label(i) == class).collect();
        if members.len() < n_clusters_per_class {
            return Err(HeuristicError::ClassTooSmall {
                class,
                points: members.len(),
                requested: n_clusters_per_class,
            });
        }
        let pts: Vec<Vec<f64>> = members.iter().map(|&i| data.point(i).to_vec()).collect();
        let (asg, ctrs) = kmeans(&pts, n_clusters_per_class, seed.wrapping_add(class as u64))?;
        let base = centroids.len();
        for (local, &i) in asg.iter().zip(&members) {
            assignment[i] = base + local;
        }
        centroids.extend(ctrs);
        cluster_labels.extend(std::iter::repeat(class).take(n_clusters_per_class));
    }
    Ok(Clustering {
        assignment,
        centroids,
        cluster_labels,
        iteration: 0,
    })
}

/// One row per cluster: (centroid, cluster class).
pub fn centroid_dataset(clustering: &Clustering) -> Result<Dataset, HeuristicError> {
    Ok(Dataset::new(
        clustering.centroids.clone(),
        clustering.cluster_labels.clone(),
    )?)
}

/// Splits every cluster by the sign patterns of its members under the fitted
/// hyperplanes, then merges fragments smaller than `min_cluster_size` into
/// the nearest same-class cluster (centroid distance). Invariants restored.
pub fn split_merge(
    clustering: &Clustering,
    data: &Dataset,
    clf: &Classifier,
    min_cluster_size: usize,
) -> Result<Clustering, ClassifierError> {
    // split: fragment key = (old cluster, sign pattern)
    let mut frag_of_key: Vec<((usize, Vec<i8>), Vec<usize>)> = Vec::new();
    for i in 0..data.len() {
        let scores = clf.scores(data.point(i))?;
        let signs: Vec<i8> = scores.iter().map(|&s| if s >= 0.0 { 1 } else { -1 }).collect();
        let key = (clustering.assignment[i], signs);
        match frag_of_key.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(i),
            None => frag_of_key.push((key, vec![i])),
        }
    }
    let mut members: Vec<Vec<usize>> = frag_of_key.into_iter().map(|(_, m)| m).collect();
    let mut labels: Vec<usize> = members.iter().map(|m| data.label(m[0])).collect();
    let mut centroids: Vec<Vec<f64>> = members.iter().map(|m| mean(data.points(), m)).collect();

    // merge: smallest undersized fragment first, into the nearest same-class
    // cluster; a class reduced to one cluster keeps it regardless of size
    loop {
        let small = (0..members.len())
            .filter(|&c| {
                members[c].len() < min_cluster_size
                    && labels.iter().filter(|&&l| l == labels[c]).count() > 1
            })
            .min_by_key(|&c| (members[c].len(), c));
        let Some(c) = small else { break };
        let target = (0..members.len())
            .filter(|&t| t != c && labels[t] == labels[c])
            .min_by(|&a, &b| {
                sq_dist(&centroids[a], &centroids[c])
                    .partial_cmp(&sq_dist(&centroids[b], &centroids[c]))
                    .unwrap()
            })
            .unwrap();
        let moved = members.remove(c);
        labels.remove(c);
        centroids.remove(c);
        let target = if target > c { target - 1 } else { target };
        members[target].extend(moved);
        centroids[target] = mean(data.points(), &members[target]);
    }

    let mut assignment = vec![0usize; data.len()];
    for (c, m) in members.iter().enumerate() {
        for &i in m {
            assignment[i] = c;
        }
    }
    Ok(Clustering {
        assignment,
        centroids,
        cluster_labels: labels,
        iteration: clustering.iteration + 1,
    })
}

#[derive(Debug, Clone)]
pub struct DynamicConfig {
    pub n_clusters_per_class: usize,
    pub max_iterations: usize,
    /// Wall-clock limit in seconds over the whole loop; the iteration in
    /// flight when it expires still completes.
    pub time_limit: f64,
    pub improvement_tol: f64,
    pub min_cluster_size: usize,
    pub seed: u64,
}

impl Default for DynamicConfig {
    fn default() -> Self {
        DynamicConfig {
            n_clusters_per_class: 3,
            max_iterations: 100,
            time_limit: 600.0,
            improvement_tol: 1e-6,
            min_cluster_size: 3,
            seed: 0,
        }
    }
}

/// One trace line per completed iteration.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub iteration: usize,
    pub clusters: usize,
    pub centroid_n: usize,
    pub objective_centroid: f64,
    pub error_full: f64,
    pub seconds: f64,
    pub stop_reason: String,
}

/// Writes the trace in CSV form.
pub fn write_trace_csv(rows: &[TraceRow], mut w: impl Write) -> std::io::Result<()> {
    writeln!(
        w,
        "iteration,clusters,centroid_n,objective_centroid,error_full,seconds,stop_reason"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.iteration, r.clusters, r.centroid_n, r.objective_centroid, r.error_full, r.seconds,
            r.stop_reason
        )?;
    }
    Ok(())
}

/// The dynamic-clustering loop: fit on centroids, score on the full data,
/// split/merge, repeat. Returns the best classifier seen by full-data error
/// together with the per-iteration trace.
pub fn dynamic_fit(
    data: &Dataset,
    fit_config: &FitConfig,
    config: &DynamicConfig,
) -> Result<(Classifier, Vec<TraceRow>), HeuristicError> {
    if config.max_iterations == 0 || !(config.time_limit > 0.0) || !(config.improvement_tol >= 0.0)
    {
        return Err(HeuristicError::InvalidConfig(format!("{config:?}")));
    }
    let start = Instant::now();
    let mut clustering = init_clusters(data, config.n_clusters_per_class, config.seed)?;
    let mut trace: Vec<TraceRow> = Vec::new();
    let mut best: Option<(f64, Classifier)> = None;
    let mut prev_centroids: Option<Dataset> = None;
    let mut prev_hyperplanes: Option<Vec<(Vec<f64>, f64)>> = None;

    for iteration in 1..=config.max_iterations {
        let cds = centroid_dataset(&clustering)?;
        if prev_centroids.as_ref() == Some(&cds) {
            if let Some(last) = trace.last_mut() {
                last.stop_reason = "stable_clusters".into();
            }
            break;
        }
        let t0 = Instant::now();
        let clf = fit_with_warm_start(&cds, fit_config, prev_hyperplanes.as_deref())
            .map_err(|source| HeuristicError::FitFailed { iteration, source })?;
        let error_full = clf
            .training_error(data)
            .map_err(|source| HeuristicError::FitFailed { iteration, source })?;
        let seconds = t0.elapsed().as_secs_f64();
        trace.push(TraceRow {
            iteration,
            clusters: clustering.cluster_count(),
            centroid_n: cds.len(),
            objective_centroid: clf.objective,
            error_full,
            seconds,
            stop_reason: String::new(),
        });
        let best_prev = best.as_ref().map(|(e, _)| *e);
        prev_hyperplanes = (!clf.hyperplanes.is_empty()).then(|| clf.hyperplanes.clone());
        if best_prev.map_or(true, |e| error_full < e) {
            best = Some((error_full, clf.clone()));
        }
        let last = trace.last_mut().unwrap();
        if let Some(e) = best_prev {
            let improvement = (e - error_full) / e.max(1e-12);
            if improvement < config.improvement_tol {
                last.stop_reason = "no_improvement".into();
                break;
            }
        }
        if start.elapsed().as_secs_f64() > config.time_limit {
            last.stop_reason = "time_limit".into();
            break;
        }
        if iteration == config.max_iterations {
            last.stop_reason = "max_iterations".into();
            break;
        }
        prev_centroids = Some(cds);
        clustering = split_merge(&clustering, data, &clf, config.min_cluster_size)
            .map_err(|source| HeuristicError::FitFailed { iteration, source })?;
        debug_assert!(clustering.validate(data));
    }

    let (_, clf) = best.expect("at least one iteration ran");
    Ok((clf, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier;
    use crate::dataset::{generate_blobs, BlobSpec};
    use crate::milp::{AKind, PNorm};

    fn l2(kappa: f64) -> AKind {
        AKind::NormBall {
            p: PNorm::L2,
            kappa,
        }
    }

    #[test]
    fn kmeans_two_pairs() {
        let points = vec![
            vec![0.0, 0.0],
            vec![0.0, 0.2],
            vec![5.0, 5.0],
            vec![5.0, 5.2],
        ];
        let (asg, ctrs) = kmeans(&points, 2, 7).unwrap();
        assert_eq!(asg[0], asg[1]);
        assert_eq!(asg[2], asg[3]);
        assert_ne!(asg[0], asg[2]);
        let mut means: Vec<Vec<f64>> = ctrs;
        means.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(means[0], vec![0.0, 0.1]);
        assert_eq!(means[1], vec![5.0, 5.1]);
    }

    #[test]
    fn kmeans_k_equals_n() {
        let points = vec![vec![0.0], vec![1.0], vec![2.0]];
        let (asg, ctrs) = kmeans(&points, 3, 1).unwrap();
        // zero inertia: each point sits exactly on its centroid
        for (i, p) in points.iter().enumerate() {
            assert_eq!(&ctrs[asg[i]], p);
        }
        let mut distinct = asg.clone();
        distinct.sort_unstable();
        distinct.dedup();
        assert_eq!(distinct.len(), 3);
    }

    #[test]
    fn kmeans_deterministic() {
        let points: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![(i % 7) as f64, (i % 5) as f64])
            .collect();
        let a = kmeans(&points, 4, 42).unwrap();
        let b = kmeans(&points, 4, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kmeans_rejects_too_many_clusters() {
        let points = vec![vec![1.0], vec![1.0], vec![2.0]];
        assert!(matches!(
            kmeans(&points, 3, 0),
            Err(HeuristicError::TooManyClusters { k: 3, distinct: 2 })
        ));
    }

    #[test]
    fn init_clusters_class_means() {
        let data = Dataset::new(
            vec![vec![0.0, 0.0], vec![0.0, 2.0], vec![4.0, 0.0], vec![4.0, 2.0]],
            vec![1, 1, 2, 2],
        )
        .unwrap();
        let cl = init_clusters(&data, 1, 0).unwrap();
        assert!(cl.validate(&data));
        assert_eq!(cl.cluster_count(), 2);
        assert_eq!(cl.centroids[0], vec![0.0, 1.0]);
        assert_eq!(cl.centroids[1], vec![4.0, 1.0]);
        assert_eq!(cl.cluster_labels, vec![1, 2]);
    }

    #[test]
    fn init_clusters_count_and_purity() {
        let data = generate_blobs(&BlobSpec {
            n: 90,
            clusters_per_class: 3,
            class_count: 3,
            dimension: 2,
            spread: 1.0,
            seed: 4,
        })
        .unwrap();
        let cl = init_clusters(&data, 3, 11).unwrap();
        assert_eq!(cl.cluster_count(), 9);
        assert!(cl.validate(&data));
    }

    #[test]
    fn init_clusters_rejects_small_class() {
        let data = Dataset::new(vec![vec![0.0], vec![1.0], vec![2.0]], vec![1, 1, 2]).unwrap();
        assert!(matches!(
            init_clusters(&data, 2, 0),
            Err(HeuristicError::ClassTooSmall { class: 2, .. })
        ));
    }

    #[test]
    fn centroid_dataset_singletons_reproduce_data() {
        let data = Dataset::new(
            vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 0.0]],
            vec![1, 2, 1],
        )
        .unwrap();
        // n_clusters_per_class = class sizes -> singleton clusters
        let cl = Clustering {
            assignment: vec![0, 2, 1],
            centroids: vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 1.0]],
            cluster_labels: vec![1, 1, 2],
            iteration: 0,
        };
        assert!(cl.validate(&data));
        let cds = centroid_dataset(&cl).unwrap();
        assert_eq!(cds.len(), 3);
        // same multiset of (point, label)
        for i in 0..data.len() {
            assert!((0..cds.len())
                .any(|j| cds.point(j) == data.point(i) && cds.label(j) == data.label(i)));
        }
    }

    fn hand_classifier(hyperplanes: Vec<(Vec<f64>, f64)>) -> Classifier {
        let m = hyperplanes.len();
        let data = Dataset::new(vec![vec![0.0, 0.0], vec![1.0, 1.0]], vec![1, 2]).unwrap();
        let mut clf =
            classifier::fit(&data, &FitConfig::arrangement(m, l2(10.0))).unwrap();
        clf.hyperplanes = hyperplanes;
        clf
    }

    #[test]
    fn split_unchanged_when_no_cut() {
        let data = Dataset::new(
            vec![vec![0.0, 0.0], vec![0.2, 0.0], vec![5.0, 0.0], vec![5.2, 0.0]],
            vec![1, 1, 2, 2],
        )
        .unwrap();
        let cl = init_clusters(&data, 1, 0).unwrap();
        let clf = hand_classifier(vec![(vec![1.0, 0.0], -2.0)]);
        let next = split_merge(&cl, &data, &clf, 1).unwrap();
        assert_eq!(next.cluster_count(), 2);
        assert!(next.validate(&data));
    }

    #[test]
    fn split_straddling_cluster_side_means() {
        // one class-1 cluster straddles x = 1; class 2 far right
        let data = Dataset::new(
            vec![
                vec![0.0, 0.0],
                vec![0.5, 0.0],
                vec![1.5, 0.0],
                vec![2.0, 0.0],
                vec![9.0, 0.0],
            ],
            vec![1, 1, 1, 1, 2],
        )
        .unwrap();
        let cl = init_clusters(&data, 1, 0).unwrap();
        let clf = hand_classifier(vec![(vec![1.0, 0.0], -1.0)]);
        let next = split_merge(&cl, &data, &clf, 1).unwrap();
        assert_eq!(next.cluster_count(), 3);
        assert!(next.validate(&data));
        let mut class1: Vec<Vec<f64>> = (0..next.cluster_count())
            .filter(|&c| next.cluster_labels[c] == 1)
            .map(|c| next.centroids[c].clone())
            .collect();
        class1.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(class1, vec![vec![0.25, 0.0], vec![1.75, 0.0]]);
    }

    #[test]
    fn small_fragment_merges_into_nearest_same_class_cluster() {
        // class 1: cluster A around x=0 (3 points), cluster B around x=4
        // (3 points), and a lone point at x=3.2 split off by the hyperplane
        // x >= 3 -> fragment of size 1 must merge into B (nearer than A)
        let data = Dataset::new(
            vec![
                vec![0.0, 0.0],
                vec![0.1, 0.0],
                vec![0.2, 0.0],
                vec![2.6, 0.0], // will be cut off from cluster A
                vec![4.0, 0.0],
                vec![4.1, 0.0],
                vec![4.2, 0.0],
                vec![9.0, 0.0],
                vec![9.1, 0.0],
                vec![9.2, 0.0],
            ],
            vec![1, 1, 1, 1, 1, 1, 1, 2, 2, 2],
        )
        .unwrap();
        let cl = Clustering {
            assignment: vec![0, 0, 0, 0, 1, 1, 1, 2, 2, 2],
            centroids: vec![
                vec![0.725, 0.0],
                vec![4.1, 0.0],
                vec![9.1, 0.0],
            ],
            cluster_labels: vec![1, 1, 2],
            iteration: 0,
        };
        assert!(cl.validate(&data));
        let clf = hand_classifier(vec![(vec![1.0, 0.0], -2.0)]);
        let next = split_merge(&cl, &data, &clf, 3).unwrap();
        assert!(next.validate(&data));
        assert_eq!(next.cluster_count(), 3);
        // the lone x=2.6 point joined the x~4 cluster (centroid distance
        // |2.6-4.1| < |2.6-0.1|), giving centroid (2.6+4+4.1+4.2)/4 = 3.725
        let c = next.assignment[3];
        assert_eq!(next.cluster_labels[c], 1);
        assert!((next.centroids[c][0] - 3.725).abs() < 1e-12);
    }

    #[test]
    fn dynamic_fit_separable_stops_early() {
        let data = Dataset::new(
            vec![
                vec![0.0, 0.0],
                vec![0.1, 0.1],
                vec![0.0, 0.2],
                vec![0.2, 0.1],
                vec![1.0, 1.0],
                vec![0.9, 0.8],
                vec![1.0, 0.9],
                vec![0.8, 1.0],
            ],
            vec![1, 1, 1, 1, 2, 2, 2, 2],
        )
        .unwrap();
        let fit_cfg = FitConfig::arrangement(1, l2(10.0));
        let cfg = DynamicConfig {
            n_clusters_per_class: 1,
            ..Default::default()
        };
        let (clf, trace) = dynamic_fit(&data, &fit_cfg, &cfg).unwrap();
        // one cluster per class and fragments below min_cluster_size merge
        // straight back: the clustering is a fixed point after one iteration
        assert!(trace.len() <= 2, "trace: {trace:?}");
        let last = trace.last().unwrap();
        assert!(
            last.stop_reason == "no_improvement" || last.stop_reason == "stable_clusters",
            "{}",
            last.stop_reason
        );
        // the centroid model itself is separable: zero centroid objective
        assert!(trace[0].objective_centroid.abs() < 1e-6);
        // the returned classifier separates the two centroids' classes
        assert_eq!(clf.predict(&[0.075, 0.1]).unwrap(), 1);
        assert_eq!(clf.predict(&[0.925, 0.925]).unwrap(), 2);
    }

    #[test]
    fn dynamic_fit_never_beats_exact_optimum() {
        let data = generate_blobs(&BlobSpec {
            n: 24,
            clusters_per_class: 1,
            class_count: 2,
            dimension: 2,
            spread: 3.0,
            seed: 21,
        })
        .unwrap();
        let fit_cfg = FitConfig::arrangement(1, l2(3.0));
        let exact = classifier::fit(&data, &fit_cfg).unwrap();
        assert!(exact.optimal);
        let cfg = DynamicConfig {
            n_clusters_per_class: 2,
            ..Default::default()
        };
        let (clf, trace) = dynamic_fit(&data, &fit_cfg, &cfg).unwrap();
        let err = clf.training_error(&data).unwrap();
        assert!(
            err >= exact.objective - 1e-6,
            "heuristic {err} beats exact {}",
            exact.objective
        );
        // returned classifier's error equals the trace minimum
        let min_trace = trace.iter().map(|r| r.error_full).fold(f64::INFINITY, f64::min);
        assert!((err - min_trace).abs() < 1e-9);
        assert!(trace.len() <= cfg.max_iterations);
    }

    #[test]
    fn trace_csv_format() {
        let rows = vec![TraceRow {
            iteration: 1,
            clusters: 4,
            centroid_n: 4,
            objective_centroid: 0.5,
            error_full: 1.25,
            seconds: 0.01,
            stop_reason: "no_improvement".into(),
        }];
        let mut buf = Vec::new();
        write_trace_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "iteration,clusters,centroid_n,objective_centroid,error_full,seconds,stop_reason"
        );
        assert!(lines.next().unwrap().starts_with("1,4,4,0.5,1.25,"));
    }
}
