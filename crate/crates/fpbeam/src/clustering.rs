//! Affinity-propagation clustering of WiFi RSS fingerprints.
//!
//! Each best-sector group is clustered independently. Similarities are
//! negative squared Euclidean distances; every point gets the same
//! preference (a scaled median of the off-diagonal similarities), so all
//! points are equally eligible to become exemplars. Exemplars are always
//! members of the input set.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::antenna::SectorId;
use crate::fingerprint::SectorGroup;

/// Pairwise similarities with the shared preference on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    /// Row-major K x K.
    pub s: Vec<Vec<f64>>,
    /// The preference scale factor used.
    pub chi: f64,
}

impl SimilarityMatrix {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn preference(&self) -> f64 {
        self.s[0][0]
    }
}

/// Knobs of the message-passing loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusteringParams {
    /// Preference scale factor applied to the median similarity.
    pub chi: f64,
    /// Damping factor in (0, 1).
    pub damping: f64,
    pub max_iterations: usize,
    /// Iterations the exemplar set must stay unchanged to declare
    /// convergence.
    pub stable_window: usize,
}

impl Default for ClusteringParams {
    fn default() -> Self {
        ClusteringParams {
            chi: 0.3,
            damping: 0.5,
            max_iterations: 200,
            stable_window: 15,
        }
    }
}

/// Outcome of clustering one group: which members are exemplars and how
/// the rest map onto them.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    /// Indices into the input point list, ascending.
    pub exemplars: Vec<usize>,
    /// For each input point, an index into `exemplars`.
    pub assignment: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Error)]
pub enum ClusteringError {
    #[error("similarity matrix contains a non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("clustering failed for mm-w AP {ap_index} sector {sector_id}: {source}")]
    Group {
        ap_index: usize,
        sector_id: SectorId,
        source: Box<ClusteringError>,
    },
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Negative squared distances off the diagonal; the shared preference
/// `chi * median(off-diagonal)` on the diagonal. A single point gets
/// preference 0 by convention.
#[allow(clippy::needless_range_loop)]
pub fn similarity_matrix(group: &SectorGroup, chi: f64) -> SimilarityMatrix {
    assert!(chi > 0.0, "chi must be positive");
    let k = group.len();
    assert!(k >= 1, "group must be nonempty");
    let mut s = vec![vec![0.0; k]; k];
    let mut off = Vec::with_capacity(k * (k - 1));
    for i in 0..k {
        for j in 0..k {
            if i != j {
                let d = -squared_distance(&group.members[i].1, &group.members[j].1);
                s[i][j] = d;
                off.push(d);
            }
        }
    }
    let preference = if off.is_empty() { 0.0 } else { chi * median(&mut off) };
    for (i, row) in s.iter_mut().enumerate() {
        row[i] = preference;
    }
    SimilarityMatrix { s, chi }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Runs damped responsibility/availability message passing until the
/// exemplar set is stable or the iteration budget runs out.
///
/// A point k is declared an exemplar when `r(k,k) + a(k,k) > 0`; each
/// remaining point joins the exemplar with the highest similarity. If no
/// diagonal turns positive, the single point with the best
/// preference-adjusted net similarity is used, so at least one exemplar
/// always emerges.
pub fn affinity_propagate(
    sim: &SimilarityMatrix,
    params: &ClusteringParams,
) -> Result<ClusterResult, ClusteringError> {
    let k = sim.len();
    for (i, row) in sim.s.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(ClusteringError::NonFinite(i, j));
            }
        }
    }
    if k == 1 {
        return Ok(ClusterResult {
            exemplars: vec![0],
            assignment: vec![0],
            iterations: 0,
            converged: true,
        });
    }

    let lambda = params.damping;
    let s = &sim.s;
    let mut r = vec![vec![0.0f64; k]; k];
    let mut a = vec![vec![0.0f64; k]; k];
    let mut last_exemplars: Vec<usize> = Vec::new();
    let mut stable = 0usize;
    let mut iterations = 0usize;
    let mut converged = false;

    for iter in 0..params.max_iterations {
        iterations = iter + 1;

        // responsibilities
        for i in 0..k {
            // the two largest values of a(i, .) + s(i, .)
            let mut best = f64::NEG_INFINITY;
            let mut second = f64::NEG_INFINITY;
            let mut best_idx = 0usize;
            for j in 0..k {
                let v = a[i][j] + s[i][j];
                if v > best {
                    second = best;
                    best = v;
                    best_idx = j;
                } else if v > second {
                    second = v;
                }
            }
            for j in 0..k {
                let competitor = if j == best_idx { second } else { best };
                let new = s[i][j] - competitor;
                r[i][j] = lambda * r[i][j] + (1.0 - lambda) * new;
            }
        }

        // availabilities
        for j in 0..k {
            let pos_sum: f64 = (0..k).filter(|&i| i != j).map(|i| r[i][j].max(0.0)).sum();
            for i in 0..k {
                let new = if i == j {
                    pos_sum
                } else {
                    (r[j][j] + pos_sum - r[i][j].max(0.0)).min(0.0)
                };
                a[i][j] = lambda * a[i][j] + (1.0 - lambda) * new;
            }
        }

        let exemplars: Vec<usize> = (0..k).filter(|&j| r[j][j] + a[j][j] > 0.0).collect();
        if !exemplars.is_empty() && exemplars == last_exemplars {
            stable += 1;
            if stable >= params.stable_window {
                converged = true;
                break;
            }
        } else {
            stable = 0;
        }
        last_exemplars = exemplars;
    }

    let mut exemplars: Vec<usize> = (0..k).filter(|&j| r[j][j] + a[j][j] > 0.0).collect();
    if exemplars.is_empty() {
        // fall back to the best single exemplar
        let best = (0..k)
            .max_by(|&x, &y| {
                let nx = net_similarity_single(s, x);
                let ny = net_similarity_single(s, y);
                nx.partial_cmp(&ny).unwrap()
            })
            .unwrap();
        exemplars = vec![best];
    }
    refine_exemplars(s, &mut exemplars);

    let assignment = assign_to_exemplars(s, &exemplars);
    Ok(ClusterResult {
        exemplars,
        assignment,
        iterations,
        converged,
    })
}

/// Net similarity of an exemplar subset: the preferences of the chosen
/// exemplars plus every other point's similarity to its closest exemplar.
#[allow(clippy::needless_range_loop)]
fn net_similarity(s: &[Vec<f64>], exemplars: &[usize]) -> f64 {
    let mut total: f64 = exemplars.iter().map(|&e| s[e][e]).sum();
    for i in 0..s.len() {
        if exemplars.contains(&i) {
            continue;
        }
        total += exemplars
            .iter()
            .map(|&e| s[i][e])
            .fold(f64::NEG_INFINITY, f64::max);
    }
    total
}

/// Greedy hill-climbing on the net similarity: repeatedly applies the best
/// single add, drop, or swap of an exemplar until no move improves. Cleans
/// up the occasional poor local optimum the message passing settles into.
fn refine_exemplars(s: &[Vec<f64>], exemplars: &mut Vec<usize>) {
    let k = s.len();
    let mut current = net_similarity(s, exemplars);
    loop {
        let mut best: Option<(Vec<usize>, f64)> = None;
        let mut consider = |cand: Vec<usize>| {
            let v = net_similarity(s, &cand);
            if v > best.as_ref().map_or(current, |(_, b)| *b) + 1e-12 {
                best = Some((cand, v));
            }
        };
        for j in 0..k {
            if !exemplars.contains(&j) {
                let mut cand = exemplars.clone();
                cand.push(j);
                cand.sort_unstable();
                consider(cand);
            }
        }
        if exemplars.len() > 1 {
            for pos in 0..exemplars.len() {
                let mut cand = exemplars.clone();
                cand.remove(pos);
                consider(cand);
            }
        }
        for pos in 0..exemplars.len() {
            for j in 0..k {
                if !exemplars.contains(&j) {
                    let mut cand = exemplars.clone();
                    cand[pos] = j;
                    cand.sort_unstable();
                    consider(cand);
                }
            }
        }
        match best {
            Some((cand, v)) => {
                *exemplars = cand;
                current = v;
            }
            None => break,
        }
    }
}

fn net_similarity_single(s: &[Vec<f64>], e: usize) -> f64 {
    let k = s.len();
    s[e][e] + (0..k).filter(|&i| i != e).map(|i| s[i][e]).sum::<f64>()
}

fn assign_to_exemplars(s: &[Vec<f64>], exemplars: &[usize]) -> Vec<usize> {
    (0..s.len())
        .map(|i| {
            if let Some(pos) = exemplars.iter().position(|&e| e == i) {
                return pos;
            }
            let mut best_pos = 0usize;
            let mut best_sim = f64::NEG_INFINITY;
            for (pos, &e) in exemplars.iter().enumerate() {
                if s[i][e] > best_sim {
                    best_sim = s[i][e];
                    best_pos = pos;
                }
            }
            best_pos
        })
        .collect()
}

/// The clustered exemplars of one (mm-w AP, sector id) group.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorExemplars {
    pub ap_index: usize,
    pub sector_id: SectorId,
    /// Global LP indices of the group members, in group order.
    pub member_lps: Vec<usize>,
    /// Indices into `member_lps` of the chosen exemplars, ascending.
    pub exemplar_members: Vec<usize>,
    /// The exemplar WiFi RSS vectors (copies of group member vectors).
    pub exemplar_vectors: Vec<Vec<f64>>,
    /// For each member, the index of its exemplar in `exemplar_vectors`.
    pub assignment: Vec<usize>,
}

impl SectorExemplars {
    pub fn cluster_count(&self) -> usize {
        self.exemplar_vectors.len()
    }
}

/// All exemplars, keyed by (mm-w AP index, sector id).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExemplarSet {
    /// Sorted by (ap_index, sector_id).
    pub entries: Vec<SectorExemplars>,
}

impl ExemplarSet {
    pub fn get(&self, ap_index: usize, sector_id: SectorId) -> Option<&SectorExemplars> {
        self.entries
            .iter()
            .find(|e| e.ap_index == ap_index && e.sector_id == sector_id)
    }

    pub fn sectors_for_ap(&self, ap_index: usize) -> impl Iterator<Item = &SectorExemplars> {
        self.entries.iter().filter(move |e| e.ap_index == ap_index)
    }
}

/// Clusters every group independently and collects the exemplars.
pub fn build_exemplar_set(
    groups: &[SectorGroup],
    params: &ClusteringParams,
) -> Result<ExemplarSet, ClusteringError> {
    let mut entries = Vec::with_capacity(groups.len());
    for group in groups {
        let sim = similarity_matrix(group, params.chi);
        let result = affinity_propagate(&sim, params).map_err(|e| ClusteringError::Group {
            ap_index: group.ap_index,
            sector_id: group.sector_id,
            source: Box::new(e),
        })?;
        entries.push(SectorExemplars {
            ap_index: group.ap_index,
            sector_id: group.sector_id,
            member_lps: group.members.iter().map(|(l, _)| *l).collect(),
            exemplar_vectors: result
                .exemplars
                .iter()
                .map(|&e| group.members[e].1.clone())
                .collect(),
            exemplar_members: result.exemplars,
            assignment: result.assignment,
        });
    }
    entries.sort_by_key(|e| (e.ap_index, e.sector_id));
    Ok(ExemplarSet { entries })
}


#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn group_from(vectors: Vec<Vec<f64>>) -> SectorGroup {
        SectorGroup {
            ap_index: 0,
            sector_id: 1,
            members: vectors.into_iter().enumerate().collect(),
        }
    }

    #[test]
    fn similarity_hand_example() {
        let g = group_from(vec![vec![0.0, 0.0], vec![3.0, 4.0]]);
        let sim = similarity_matrix(&g, 0.3);
        assert_eq!(sim.s[0][1], -25.0);
        assert_eq!(sim.s[1][0], -25.0);
        assert_eq!(sim.s[0][0], -7.5);
        assert_eq!(sim.s[1][1], -7.5);
    }

    #[test]
    fn similarity_duplicates_all_zero() {
        let g = group_from(vec![vec![1.0, 2.0]; 3]);
        let sim = similarity_matrix(&g, 0.3);
        for row in &sim.s {
            assert!(row.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn similarity_singleton_convention() {
        let g = group_from(vec![vec![5.0]]);
        let sim = similarity_matrix(&g, 0.3);
        assert_eq!(sim.s, vec![vec![0.0]]);
    }

    #[test]
    fn single_point_is_own_exemplar() {
        let g = group_from(vec![vec![5.0, 5.0]]);
        let sim = similarity_matrix(&g, 0.3);
        let r = affinity_propagate(&sim, &ClusteringParams::default()).unwrap();
        assert_eq!(r.exemplars, vec![0]);
        assert_eq!(r.assignment, vec![0]);
    }

    #[test]
    fn two_blobs_give_two_clusters() {
        // two tight 3-point blobs centered 100 apart in RSS space
        let g = group_from(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![100.0, 0.0],
            vec![101.0, 0.0],
            vec![100.0, 1.0],
        ]);
        let sim = similarity_matrix(&g, 0.3);
        let r = affinity_propagate(&sim, &ClusteringParams::default()).unwrap();
        assert_eq!(r.exemplars.len(), 2);
        assert!(r.exemplars[0] < 3 && r.exemplars[1] >= 3);
        for i in 0..3 {
            assert_eq!(r.assignment[i], 0);
            assert_eq!(r.assignment[i + 3], 1);
        }
        // matches the brute-force optimum
        let (_, opt) = oracle::best_subset(&sim.s);
        let got = oracle::net_similarity(&sim.s, &r.exemplars);
        assert!(got >= opt - 1e-9, "got {got}, optimum {opt}");
    }

    #[test]
    fn identical_points_collapse_to_one_cluster() {
        let g = group_from(vec![vec![7.0, 7.0]; 5]);
        let sim = similarity_matrix(&g, 0.3);
        let r = affinity_propagate(&sim, &ClusteringParams::default()).unwrap();
        assert_eq!(r.exemplars.len(), 1);
        let got = oracle::net_similarity(&sim.s, &r.exemplars);
        let (_, opt) = oracle::best_subset(&sim.s);
        assert_eq!(got, opt);
    }

    #[test]
    fn non_finite_similarity_rejected() {
        let sim = SimilarityMatrix {
            s: vec![vec![0.0, f64::NAN], vec![-1.0, 0.0]],
            chi: 0.3,
        };
        assert!(matches!(
            affinity_propagate(&sim, &ClusteringParams::default()),
            Err(ClusteringError::NonFinite(0, 1))
        ));
    }

    fn random_group(rng: &mut ChaCha8Rng, k: usize, dims: usize) -> SectorGroup {
        group_from(
            (0..k)
                .map(|_| (0..dims).map(|_| rng.gen_range(-90.0..-30.0)).collect())
                .collect(),
        )
    }

    #[test]
    fn near_optimal_on_random_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let k = rng.gen_range(2..=8);
            let g = random_group(&mut rng, k, 4);
            let sim = similarity_matrix(&g, 0.3);
            let r = affinity_propagate(&sim, &ClusteringParams::default()).unwrap();
            let got = oracle::net_similarity(&sim.s, &r.exemplars);
            let (_, opt) = oracle::best_subset(&sim.s);
            assert!(got >= opt - 0.05 * opt.abs(), "got {got}, optimum {opt}");
        }
    }

    #[test]
    fn exemplars_are_members_and_assignment_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let k = rng.gen_range(2..=12);
            let g = random_group(&mut rng, k, 3);
            let params = ClusteringParams::default();
            let set = build_exemplar_set(std::slice::from_ref(&g), &params).unwrap();
            let e = &set.entries[0];
            for vec in &e.exemplar_vectors {
                assert!(g.members.iter().any(|(_, m)| m == vec));
            }
            let sim = similarity_matrix(&g, params.chi);
            for (i, &assigned) in e.assignment.iter().enumerate() {
                let member_exemplar = e.exemplar_members[assigned];
                if e.exemplar_members.contains(&i) {
                    assert_eq!(member_exemplar, i);
                    continue;
                }
                let best = e
                    .exemplar_members
                    .iter()
                    .map(|&ex| sim.s[i][ex])
                    .fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(sim.s[i][member_exemplar], best);
            }
        }
    }

    #[test]
    fn permutation_preserves_exemplar_vector_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let g = random_group(&mut rng, 7, 3);
        let params = ClusteringParams::default();
        let base = build_exemplar_set(std::slice::from_ref(&g), &params).unwrap();

        let mut reversed = g.clone();
        reversed.members.reverse();
        let perm = build_exemplar_set(std::slice::from_ref(&reversed), &params).unwrap();

        let mut a: Vec<_> = base.entries[0].exemplar_vectors.clone();
        let mut b: Vec<_> = perm.entries[0].exemplar_vectors.clone();
        let key = |v: &Vec<f64>| format!("{v:?}");
        a.sort_by_key(key);
        b.sort_by_key(key);
        assert_eq!(a, b);
    }

    #[test]
    fn stronger_preference_penalty_yields_fewer_clusters() {
        // statistically: chi = 1.0 (more negative preferences) never
        // produces more clusters on average than chi = 0.1
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut small_chi_total = 0usize;
        let mut large_chi_total = 0usize;
        for _ in 0..100 {
            let k = rng.gen_range(3..=10);
            let g = random_group(&mut rng, k, 3);
            let mut params = ClusteringParams {
                chi: 0.1,
                ..ClusteringParams::default()
            };
            let sim = similarity_matrix(&g, params.chi);
            small_chi_total += affinity_propagate(&sim, &params).unwrap().exemplars.len();
            params.chi = 1.0;
            let sim = similarity_matrix(&g, params.chi);
            large_chi_total += affinity_propagate(&sim, &params).unwrap().exemplars.len();
        }
        assert!(large_chi_total <= small_chi_total);
    }

    #[test]
    fn empty_group_list_gives_empty_set() {
        let set = build_exemplar_set(&[], &ClusteringParams::default()).unwrap();
        assert!(set.entries.is_empty());
    }

    #[test]
    fn singleton_groups_keep_their_vector() {
        let groups = vec![
            SectorGroup {
                ap_index: 0,
                sector_id: 3,
                members: vec![(0, vec![-50.0, -60.0])],
            },
            SectorGroup {
                ap_index: 0,
                sector_id: 9,
                members: vec![(1, vec![-55.0, -45.0])],
            },
        ];
        let set = build_exemplar_set(&groups, &ClusteringParams::default()).unwrap();
        assert_eq!(set.entries.len(), 2);
        assert_eq!(set.get(0, 3).unwrap().exemplar_vectors, vec![vec![-50.0, -60.0]]);
        assert_eq!(set.get(0, 9).unwrap().exemplar_vectors, vec![vec![-55.0, -45.0]]);
    }
}
