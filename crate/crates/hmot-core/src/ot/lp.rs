//! Exact Wasserstein-1 oracle: the dense transportation problem solved by
//! successive shortest augmenting paths with node potentials.
//!
//! Restricted to grids of at most [`LP_CELL_LIMIT`] cells, which caps the
//! materialized cost matrix at 256^2 entries and keeps the oracle simple
//! enough to trust. Each augmentation runs one dense Dijkstra over the
//! bipartite residual graph on Johnson-reduced costs, so arc costs stay
//! non-negative throughout and float rounding cannot produce negative cycles.

use alloc::vec;
use alloc::vec::Vec;

use crate::heatmap::NormalizedHeatmap;
use crate::ot::grid::GroundCost;
use crate::ot::TransportPlan;
use crate::{Error, Result};

/// Maximum number of grid cells the oracle accepts.
pub const LP_CELL_LIMIT: usize = 256;

/// Mass below this is treated as already shipped (inputs are normalized, so
/// leftover imbalance is float noise well under the 1e-9 marginal tolerance).
const MASS_EPS: f64 = 1e-13;

/// Exact minimum-cost transport between two normalized heatmaps.
#[derive(Debug, Clone)]
pub struct ExactW1 {
    pub distance: f64,
    pub plan: TransportPlan,
}

pub(crate) fn solve(source: &NormalizedHeatmap, target: &NormalizedHeatmap) -> Result<ExactW1> {
    source.as_heatmap().same_shape(target.as_heatmap())?;
    let (h, w) = source.shape();
    let cells = h * w;
    if cells > LP_CELL_LIMIT {
        return Err(Error::GridTooLarge {
            cells,
            limit: LP_CELL_LIMIT,
        });
    }
    let cost = GroundCost::new(h, w)?;

    // Compact the problem to positive-mass cells.
    let sources: Vec<usize> = (0..cells).filter(|&i| source.values()[i] > 0.0).collect();
    let sinks: Vec<usize> = (0..cells).filter(|&j| target.values()[j] > 0.0).collect();
    let m = sources.len();
    let n = sinks.len();
    let mut supply: Vec<f64> = sources.iter().map(|&i| source.values()[i]).collect();
    // Scale demands so total demand equals total supply exactly; the inputs
    // agree to 1e-9 already and the plan tolerance absorbs the rescale.
    let total_supply: f64 = supply.iter().sum();
    let total_demand: f64 = sinks.iter().map(|&j| target.values()[j]).sum();
    let mut demand: Vec<f64> = sinks
        .iter()
        .map(|&j| target.values()[j] * (total_supply / total_demand))
        .collect();

    let c = |si: usize, tj: usize| cost.cost(sources[si], sinks[tj]);

    let mut flow = vec![0.0f64; m * n];
    // Node layout: 0..m sources, m..m+n sinks.
    let v = m + n;
    let mut pot = vec![0.0f64; v];
    let mut dist = vec![0.0f64; v];
    let mut settled = vec![false; v];
    let mut parent = vec![usize::MAX; v];

    let max_augmentations = 50 * (m + n);
    let mut augmentations = 0usize;
    loop {
        let mut remaining_supply = 0.0;
        for &s in supply.iter() {
            remaining_supply += s;
        }
        if remaining_supply <= MASS_EPS {
            break;
        }
        augmentations += 1;
        if augmentations > max_augmentations {
            return Err(Error::InvalidParameter {
                what: "transportation solve",
                reason: "augmentation cap exceeded (should not happen)",
            });
        }

        // Multi-source Dijkstra on reduced costs from every source with
        // remaining supply.
        for x in dist.iter_mut() {
            *x = f64::INFINITY;
        }
        for x in settled.iter_mut() {
            *x = false;
        }
        for x in parent.iter_mut() {
            *x = usize::MAX;
        }
        for (si, &s) in supply.iter().enumerate() {
            if s > MASS_EPS {
                dist[si] = 0.0;
            }
        }
        let mut reached_sink = usize::MAX;
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for x in 0..v {
                if !settled[x] && dist[x] < best {
                    best = dist[x];
                    u = x;
                }
            }
            if u == usize::MAX {
                break;
            }
            settled[u] = true;
            if u >= m && demand[u - m] > MASS_EPS {
                reached_sink = u - m;
                break;
            }
            if u < m {
                // Forward arcs source -> every sink, infinite capacity.
                let si = u;
                for tj in 0..n {
                    let node = m + tj;
                    if settled[node] {
                        continue;
                    }
                    let rc = (c(si, tj) + pot[si] - pot[node]).max(0.0);
                    let nd = dist[u] + rc;
                    if nd < dist[node] {
                        dist[node] = nd;
                        parent[node] = u;
                    }
                }
            } else {
                // Backward arcs sink -> source, capacity = current flow.
                let tj = u - m;
                for si in 0..m {
                    if settled[si] || flow[si * n + tj] <= MASS_EPS {
                        continue;
                    }
                    let rc = (-c(si, tj) + pot[u] - pot[si]).max(0.0);
                    let nd = dist[u] + rc;
                    if nd < dist[si] {
                        dist[si] = nd;
                        parent[si] = u;
                    }
                }
            }
        }
        if reached_sink == usize::MAX {
            // No reachable sink with demand left: the residue is float noise.
            break;
        }

        // Walk back to the originating source, collecting the bottleneck.
        let sink_node = m + reached_sink;
        let mut bottleneck = demand[reached_sink];
        let mut node = sink_node;
        while parent[node] != usize::MAX {
            let p = parent[node];
            if node >= m {
                // forward arc p(source) -> node(sink): no capacity bound
            } else {
                // backward arc p(sink) -> node(source): bounded by flow
                bottleneck = bottleneck.min(flow[node * n + (p - m)]);
            }
            node = p;
        }
        let origin = node;
        bottleneck = bottleneck.min(supply[origin]);

        let mut nodeb = sink_node;
        while parent[nodeb] != usize::MAX {
            let p = parent[nodeb];
            if nodeb >= m {
                flow[p * n + (nodeb - m)] += bottleneck;
            } else {
                flow[nodeb * n + (p - m)] -= bottleneck;
            }
            nodeb = p;
        }
        supply[origin] -= bottleneck;
        demand[reached_sink] -= bottleneck;

        // Johnson potential update keeps reduced costs non-negative.
        let dcap = dist[sink_node];
        for x in 0..v {
            pot[x] += if dist[x] < dcap { dist[x] } else { dcap };
        }
    }

    let mut distance = 0.0;
    let mut coupling = vec![0.0f64; cells * cells];
    for si in 0..m {
        for tj in 0..n {
            let fl = flow[si * n + tj];
            if fl > 0.0 {
                distance += fl * c(si, tj);
                coupling[sources[si] * cells + sinks[tj]] = fl;
            }
        }
    }
    Ok(ExactW1 {
        distance,
        plan: TransportPlan::new(coupling, source.clone(), target.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heatmap::{point_mass, Heatmap, NormalizedHeatmap};

    #[test]
    fn identical_inputs_give_diagonal_plan() {
        let u = NormalizedHeatmap::new(
            Heatmap::new(2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap(),
        )
        .unwrap();
        let r = solve(&u, &u).unwrap();
        assert_eq!(r.distance, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { u.values()[i] } else { 0.0 };
                assert!((r.plan.coupling()[i * 4 + j] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn forced_single_coupling() {
        let u = point_mass(1, 4, 0, 0).unwrap();
        let v = point_mass(1, 4, 0, 3).unwrap();
        let r = solve(&u, &v).unwrap();
        assert_eq!(r.distance, 1.0);
    }

    #[test]
    fn split_mass_matches_brute_force_value() {
        // {0.5 at x=0, 0.5 at x=2} vs {1.0 at x=1} on a 1x3 grid: every
        // feasible coupling ships 0.5 across distance 1/2 twice.
        let u = NormalizedHeatmap::new(Heatmap::new(1, 3, vec![0.5, 0.0, 0.5]).unwrap()).unwrap();
        let v = point_mass(1, 3, 0, 1).unwrap();
        let r = solve(&u, &v).unwrap();
        assert!((r.distance - 0.5).abs() < 1e-12);
        r.plan.validate(1e-9).unwrap();
    }

    #[test]
    fn size_limit_refused_with_message() {
        let u = crate::heatmap::uniform(17, 17).unwrap();
        let err = solve(&u, &u).unwrap_err();
        match err {
            Error::GridTooLarge { cells, limit } => {
                assert_eq!(cells, 289);
                assert_eq!(limit, 256);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn translation_of_point_mass_is_exact() {
        // (3,4) offset on a 16x16 grid: cost 5/15 exactly.
        let u = point_mass(16, 16, 2, 3).unwrap();
        let v = point_mass(16, 16, 6, 6).unwrap();
        let r = solve(&u, &v).unwrap();
        assert_eq!(r.distance, 5.0 / 15.0);
    }
}
