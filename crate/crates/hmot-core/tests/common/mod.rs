//! Shared generators and oracles for the integration suites.

use hmot_core::heatmap::{Heatmap, LandmarkPoint, NormalizedHeatmap};
use hmot_core::ot::{sinkhorn_solve, GroundCost, SinkhornConfig};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit(r: &mut ChaCha8Rng) -> f64 {
    (r.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn normal(r: &mut ChaCha8Rng) -> f64 {
    let u = 1.0 - unit(r);
    let v = unit(r);
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// Softmax of scaled standard-normal logits: a rough, full-support
/// distribution.
pub fn random_softmax(h: usize, w: usize, tau: f64, r: &mut ChaCha8Rng) -> NormalizedHeatmap {
    let logits: Vec<f64> = (0..h * w).map(|_| normal(r) * tau).collect();
    hmot_core::ot::softmax_normalize(&Heatmap::new(h, w, logits).unwrap())
}

/// Normalized Gaussian blob with a uniformly random interior center.
pub fn random_blob(h: usize, w: usize, sigma: f64, r: &mut ChaCha8Rng) -> NormalizedHeatmap {
    let cx = unit(r) * (w - 1) as f64;
    let cy = unit(r) * (h - 1) as f64;
    hmot_core::heatmap::make_normalized_target(LandmarkPoint::new(cx, cy), sigma, h, w).unwrap()
}

/// Pair of blobs whose centers stay at least `min_sep` pixels apart, so the
/// pair represents a meaningful localization error rather than two
/// almost-identical distributions (whose W1 distance vanishes and makes any
/// relative comparison ill-posed).
pub fn random_blob_pair(
    h: usize,
    w: usize,
    sigma: f64,
    min_sep: f64,
    r: &mut ChaCha8Rng,
) -> (NormalizedHeatmap, NormalizedHeatmap) {
    loop {
        let ax = unit(r) * (w - 1) as f64;
        let ay = unit(r) * (h - 1) as f64;
        let bx = unit(r) * (w - 1) as f64;
        let by = unit(r) * (h - 1) as f64;
        if ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt() >= min_sep {
            return (
                hmot_core::heatmap::make_normalized_target(LandmarkPoint::new(ax, ay), sigma, h, w)
                    .unwrap(),
                hmot_core::heatmap::make_normalized_target(LandmarkPoint::new(bx, by), sigma, h, w)
                    .unwrap(),
            );
        }
    }
}

/// Distribution supported on `k` random cells with random positive masses.
pub fn random_sparse(h: usize, w: usize, k: usize, r: &mut ChaCha8Rng) -> NormalizedHeatmap {
    let n = h * w;
    let mut values = vec![0.0f64; n];
    let mut placed = 0;
    while placed < k {
        let cell = (unit(r) * n as f64) as usize % n;
        if values[cell] == 0.0 {
            values[cell] = 0.05 + unit(r);
            placed += 1;
        }
    }
    let sum: f64 = values.iter().sum();
    for v in values.iter_mut() {
        *v /= sum;
    }
    NormalizedHeatmap::new(Heatmap::new(h, w, values).unwrap()).unwrap()
}

/// Exact minimum transport cost by enumerating every vertex of the
/// transportation polytope (spanning-tree basic solutions). Exponential in
/// the support size; callers keep supports at or below 5 x 5.
pub fn brute_force_w1(u: &NormalizedHeatmap, v: &NormalizedHeatmap) -> f64 {
    let (h, w) = u.shape();
    let cost = GroundCost::new(h, w).unwrap();
    let sources: Vec<usize> = (0..h * w).filter(|&i| u.values()[i] > 0.0).collect();
    let sinks: Vec<usize> = (0..h * w).filter(|&j| v.values()[j] > 0.0).collect();
    let m = sources.len();
    let n = sinks.len();
    let edges = m * n;
    assert!(edges <= 25, "brute-force oracle limited to tiny supports");
    let need = m + n - 1;

    let supplies: Vec<f64> = sources.iter().map(|&i| u.values()[i]).collect();
    let demands: Vec<f64> = sinks.iter().map(|&j| v.values()[j]).collect();

    let mut best = f64::INFINITY;
    // Iterate subsets of edges with |S| = m + n - 1 via bitmask.
    for mask in 0u32..(1u32 << edges) {
        if mask.count_ones() as usize != need {
            continue;
        }
        // Union-find to require a spanning tree over the m + n nodes.
        let mut parent: Vec<usize> = (0..m + n).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
            let mut x = x;
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut acyclic = true;
        for e in 0..edges {
            if mask & (1 << e) != 0 {
                let (i, j) = (e / n, m + e % n);
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri == rj {
                    acyclic = false;
                    break;
                }
                parent[ri] = rj;
            }
        }
        if !acyclic {
            continue;
        }

        // Solve the tree by leaf elimination.
        let mut balance: Vec<f64> = supplies
            .iter()
            .cloned()
            .chain(demands.iter().map(|d| -d))
            .collect();
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m + n]; // (edge, other)
        for e in 0..edges {
            if mask & (1 << e) != 0 {
                let (i, j) = (e / n, m + e % n);
                adj[i].push((e, j));
                adj[j].push((e, i));
            }
        }
        let mut degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();
        let mut removed_edge = vec![false; edges];
        let mut removed_node = vec![false; m + n];
        let mut flow = vec![0.0f64; edges];
        let mut feasible = true;
        for _ in 0..need {
            let leaf = (0..m + n)
                .find(|&x| !removed_node[x] && degree[x] == 1)
                .expect("tree always has a leaf");
            let &(e, other) = adj[leaf]
                .iter()
                .find(|&&(e, _)| !removed_edge[e])
                .expect("leaf has one live edge");
            // Flow on the edge carries the leaf's remaining balance toward
            // the rest of the tree; sign follows source -> sink orientation.
            let f = if leaf < m { balance[leaf] } else { -balance[leaf] };
            flow[e] = f;
            if f < -1e-12 {
                feasible = false;
                break;
            }
            balance[other] += balance[leaf];
            balance[leaf] = 0.0;
            removed_edge[e] = true;
            removed_node[leaf] = true;
            degree[leaf] -= 1;
            degree[other] -= 1;
        }
        if !feasible {
            continue;
        }
        let mut total = 0.0;
        for e in 0..edges {
            if mask & (1 << e) != 0 && flow[e] > 0.0 {
                total += flow[e] * cost.cost(sources[e / n], sinks[e % n]);
            }
        }
        best = best.min(total);
    }
    assert!(best.is_finite(), "no feasible vertex found");
    best
}

/// Closed-form Wasserstein-1 on a 1 x W grid via CDF differences.
pub fn w1_closed_form_1d(u: &NormalizedHeatmap, v: &NormalizedHeatmap) -> f64 {
    assert_eq!(u.height(), 1);
    let w = u.width();
    let norm = (w - 1) as f64;
    let (mut cu, mut cv, mut acc) = (0.0, 0.0, 0.0);
    for k in 0..w - 1 {
        cu += u.values()[k];
        cv += v.values()[k];
        acc += (cu - cv).abs();
    }
    acc / norm
}

/// Central finite difference of a scalar function of logits.
pub fn fd_gradient(
    logits: &[f64],
    h: usize,
    w: usize,
    step: f64,
    mut f: impl FnMut(&Heatmap) -> f64,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(logits.len());
    let mut work = logits.to_vec();
    for k in 0..logits.len() {
        work[k] = logits[k] + step;
        let fp = f(&Heatmap::new(h, w, work.clone()).unwrap());
        work[k] = logits[k] - step;
        let fm = f(&Heatmap::new(h, w, work.clone()).unwrap());
        work[k] = logits[k];
        out.push((fp - fm) / (2.0 * step));
    }
    out
}

/// The entropic objective used by Wasserstein finite-difference checks,
/// warm-started from a base solution so each perturbed solve is cheap and
/// tightly converged.
pub struct EntropicProbe {
    pub target: NormalizedHeatmap,
    pub cfg: SinkhornConfig,
    pub warm: Option<(Vec<f64>, Vec<f64>)>,
}

impl EntropicProbe {
    pub fn new(target: NormalizedHeatmap, cfg: SinkhornConfig) -> Self {
        Self {
            target,
            cfg,
            warm: None,
        }
    }

    pub fn value(&mut self, logits: &Heatmap) -> f64 {
        let p = hmot_core::ot::softmax_normalize(logits);
        let warm = self
            .warm
            .as_ref()
            .map(|(f, g)| (f.as_slice(), g.as_slice()));
        let sol = sinkhorn_solve(&p, &self.target, &self.cfg, warm).unwrap();
        assert!(sol.converged, "probe solve must converge");
        self.warm = Some((sol.potential_source.clone(), sol.potential_target.clone()));
        sol.entropic_value
    }
}

/// Largest relative error between analytic and reference gradients, with the
/// denominator floored to dodge 0/0 on dead components.
pub fn max_rel_err(analytic: &[f64], reference: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(reference.iter())
        .map(|(a, r)| (a - r).abs() / r.abs().max(floor))
        .fold(0.0, f64::max)
}
