//! Hyperbolic filling of a finite metric measure space.
//!
//! Vertices are `(point, level)` pairs over nested separated nets; two
//! vertices are neighbors when their net balls intersect (vertical rule for
//! adjacent levels, horizontal rule with slack `τ` within a level). The
//! unit-edge graph is uniformized with density `e^{-ε t}` (`ε = log α`,
//! `t` = hop distance to the root) and the base measure `ν` is lifted to an
//! edge measure `μ_β`. The base space is attached as a boundary at the
//! deepest level through nearest-net anchors with Voronoi weights.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::space::{FiniteMetricMeasureSpace, NetHierarchy};

/// Construction parameters and the derived exponents.
///
/// `epsilon = log α`, `beta = ε p (1 - θ)`, and the codimension
/// `Θ = β/ε = p (1 - θ)`, so `θ = 1 - Θ/p` holds identically.
#[derive(Debug, Clone, Copy)]
pub struct FillingParams {
    alpha: f64,
    tau: f64,
    depth: usize,
    p: f64,
    theta: f64,
}

impl FillingParams {
    pub fn new(alpha: f64, tau: f64, depth: usize, p: f64, theta: f64) -> Result<Self> {
        if !(alpha > 1.0) {
            return Err(Error::InvalidParam(format!("alpha = {alpha} must exceed 1")));
        }
        if !(tau > 1.0) {
            return Err(Error::InvalidParam(format!("tau = {tau} must exceed 1")));
        }
        if depth == 0 {
            return Err(Error::InvalidParam("depth must be at least 1".into()));
        }
        if !(p > 1.0) {
            return Err(Error::InvalidParam(format!("p = {p} must exceed 1")));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParam(format!(
                "theta = {theta} must lie in (0, 1)"
            )));
        }
        let params = Self {
            alpha,
            tau,
            depth,
            p,
            theta,
        };
        debug_assert!(params.codimension() > 0.0 && params.codimension() < p);
        Ok(params)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Uniformization exponent `ε = log α`.
    pub fn epsilon(&self) -> f64 {
        self.alpha.ln()
    }

    /// Measure-lift exponent `β = ε p (1 - θ)`.
    pub fn beta(&self) -> f64 {
        self.epsilon() * self.p * (1.0 - self.theta)
    }

    /// Codimension `Θ = β / ε = p (1 - θ)`.
    pub fn codimension(&self) -> f64 {
        self.p * (1.0 - self.theta)
    }

    pub fn with_depth(&self, depth: usize) -> Result<Self> {
        Self::new(self.alpha, self.tau, depth, self.p, self.theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Vertical,
    Horizontal,
}

impl EdgeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeKind::Vertical => "vertical",
            EdgeKind::Horizontal => "horizontal",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FillingVertex {
    /// Index of the underlying point of `Z`.
    pub point: usize,
    pub level: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct FillingEdge {
    pub a: usize,
    pub b: usize,
    pub kind: EdgeKind,
    /// Uniformized length `ℓ_ε(e)`.
    pub unif_length: f64,
    /// Lifted edge measure `μ_β(e)`.
    pub measure: f64,
}

/// Anchoring of the base space onto the deepest net level.
#[derive(Debug, Clone)]
pub struct BoundaryMap {
    /// Per point of `Z`: the vertex index of its anchor at level `N`.
    pub anchor_of: Vec<usize>,
    /// Per point of `Z`: its Voronoi ν-weight.
    pub weight: Vec<f64>,
    anchor_vertices: Vec<usize>,
}

impl BoundaryMap {
    /// Distinct anchor vertex indices, ascending.
    pub fn anchor_vertices(&self) -> &[usize] {
        &self.anchor_vertices
    }

    /// Per-vertex lumped data: `Σ f(z) w(z)` over the points anchored at each
    /// vertex, zero elsewhere.
    pub fn lumped(&self, f: &[f64], n_vertices: usize) -> Vec<f64> {
        let mut rhs = vec![0.0; n_vertices];
        for (z, &a) in self.anchor_of.iter().enumerate() {
            rhs[a] += f[z] * self.weight[z];
        }
        rhs
    }

    /// Compatibility functional `Σ f(z) w(z)`.
    pub fn weighted_sum(&self, f: &[f64]) -> f64 {
        self.anchor_of
            .iter()
            .enumerate()
            .map(|(z, _)| f[z] * self.weight[z])
            .sum()
    }

    /// Weighted norm `(Σ |f(z)|^q w(z))^{1/q}`.
    pub fn weighted_norm(&self, f: &[f64], q: f64) -> f64 {
        self.weight
            .iter()
            .zip(f)
            .map(|(&w, &v)| v.abs().powf(q) * w)
            .sum::<f64>()
            .powf(1.0 / q)
    }
}

/// Trapezoid value of the uniformization density `e^{-εt}` along a unit edge.
pub fn unif_edge_length(epsilon: f64, t_a: f64, t_b: f64) -> f64 {
    0.5 * ((-epsilon * t_a).exp() + (-epsilon * t_b).exp())
}

/// Half-edge split of the lifted measure: each endpoint is its own nearest
/// vertex for its half of the edge.
pub fn lifted_edge_measure(beta: f64, t_a: f64, t_b: f64, ball_a: f64, ball_b: f64) -> f64 {
    0.5 * ((-beta * t_a).exp() * ball_a + (-beta * t_b).exp() * ball_b)
}

#[derive(Debug, Clone, Copy)]
pub struct CodimensionReport {
    pub ratio_min: f64,
    pub ratio_max: f64,
}

impl CodimensionReport {
    pub fn spread(&self) -> f64 {
        self.ratio_max / self.ratio_min
    }
}

/// The filling graph `Ω ∪ ∂Ω`, immutable once built.
#[derive(Debug, Clone)]
pub struct FillingGraph {
    params: FillingParams,
    vertices: Vec<FillingVertex>,
    edges: Vec<FillingEdge>,
    hyp_dist: Vec<usize>,
    vertex_measure: Vec<f64>,
    index: HashMap<(usize, usize), usize>,
    boundary: BoundaryMap,
}

impl FillingGraph {
    /// Build the depth-`N` filling over the given nets: vertex set
    /// `∪_n S_n × {n}`, edges by the two ball-intersection rules, then
    /// uniformized lengths, lifted measures and the boundary anchoring.
    pub fn build(
        space: &FiniteMetricMeasureSpace,
        nets: &NetHierarchy,
        params: FillingParams,
    ) -> Result<Self> {
        if nets.alpha() != params.alpha() || nets.depth() != params.depth() {
            return Err(Error::ParamMismatch {
                net_alpha: nets.alpha(),
                net_depth: nets.depth(),
                param_alpha: params.alpha(),
                param_depth: params.depth(),
            });
        }
        let depth = params.depth();
        let alpha = params.alpha();

        let mut vertices = Vec::new();
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        for level in 0..=depth {
            for &point in nets.level(level) {
                index.insert((point, level), vertices.len());
                vertices.push(FillingVertex { point, level });
            }
        }

        let mut edges: Vec<(usize, usize, EdgeKind)> = Vec::new();
        for level in 0..=depth {
            let scale = alpha.powi(-(level as i32));
            let members = nets.level(level);
            // horizontal: balls of radius τ α^{-n} intersect
            for (ai, &x) in members.iter().enumerate() {
                for &y in &members[ai + 1..] {
                    if space.dist(x, y) < 2.0 * params.tau() * scale {
                        edges.push((index[&(x, level)], index[&(y, level)], EdgeKind::Horizontal));
                    }
                }
            }
            // vertical: balls of radius α^{-n}, α^{-(n+1)} intersect
            if level < depth {
                let next_scale = alpha.powi(-(level as i32) - 1);
                for &x in members {
                    for &y in nets.level(level + 1) {
                        if space.dist(x, y) < scale + next_scale {
                            edges.push((
                                index[&(x, level)],
                                index[&(y, level + 1)],
                                EdgeKind::Vertical,
                            ));
                        }
                    }
                }
            }
        }
        edges.sort_by_key(|&(a, b, _)| (a, b));

        let n_v = vertices.len();
        let mut incident = vec![Vec::new(); n_v];
        for (ei, &(a, b, _)) in edges.iter().enumerate() {
            incident[a].push(ei);
            incident[b].push(ei);
        }

        // hop distance to the root (vertex 0 is the unique level-0 vertex)
        let mut hyp_dist = vec![usize::MAX; n_v];
        let mut queue = std::collections::VecDeque::new();
        hyp_dist[0] = 0;
        queue.push_back(0usize);
        while let Some(v) = queue.pop_front() {
            for &ei in &incident[v] {
                let (a, b, _) = edges[ei];
                let w = if a == v { b } else { a };
                if hyp_dist[w] == usize::MAX {
                    hyp_dist[w] = hyp_dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        let unreached = hyp_dist.iter().filter(|&&d| d == usize::MAX).count();
        if unreached > 0 {
            return Err(Error::DisconnectedFilling {
                unreached,
                total: n_v,
            });
        }

        let epsilon = params.epsilon();
        let beta = params.beta();
        let full_edges: Vec<FillingEdge> = edges
            .iter()
            .map(|&(a, b, kind)| {
                let ta = hyp_dist[a] as f64;
                let tb = hyp_dist[b] as f64;
                let va = vertices[a];
                let vb = vertices[b];
                let ball_a = space.ball_mass(va.point, alpha.powi(-(va.level as i32)));
                let ball_b = space.ball_mass(vb.point, alpha.powi(-(vb.level as i32)));
                FillingEdge {
                    a,
                    b,
                    kind,
                    unif_length: unif_edge_length(epsilon, ta, tb),
                    measure: lifted_edge_measure(beta, ta, tb, ball_a, ball_b),
                }
            })
            .collect();

        let mut vertex_measure = vec![0.0; n_v];
        for e in &full_edges {
            vertex_measure[e.a] += 0.5 * e.measure;
            vertex_measure[e.b] += 0.5 * e.measure;
        }

        // anchor every z at its nearest deepest-level net point, lowest index on ties
        let mut anchor_of = Vec::with_capacity(space.n());
        let mut weight = Vec::with_capacity(space.n());
        for z in 0..space.n() {
            let mut best = usize::MAX;
            let mut best_d = f64::INFINITY;
            for &m in nets.level(depth) {
                let d = space.dist(z, m);
                if d < best_d {
                    best_d = d;
                    best = m;
                }
            }
            anchor_of.push(index[&(best, depth)]);
            weight.push(space.mass(z));
        }
        let mut anchor_vertices: Vec<usize> = anchor_of.clone();
        anchor_vertices.sort_unstable();
        anchor_vertices.dedup();

        Ok(Self {
            params,
            vertices,
            edges: full_edges,
            hyp_dist,
            vertex_measure,
            index,
            boundary: BoundaryMap {
                anchor_of,
                weight,
                anchor_vertices,
            },
        })
    }

    pub fn vertex_at(&self, point: usize, level: usize) -> Option<usize> {
        self.index.get(&(point, level)).copied()
    }

    pub fn params(&self) -> &FillingParams {
        self.params_ref()
    }

    fn params_ref(&self) -> &FillingParams {
        &self.params
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[FillingVertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[FillingEdge] {
        &self.edges
    }

    pub fn root(&self) -> usize {
        0
    }

    /// Hop distance to the root in the unit-edge metric.
    pub fn hyp_dist_to_root(&self, v: usize) -> usize {
        self.hyp_dist[v]
    }

    /// μ_β vertex weights: half the measure of the incident edges.
    pub fn vertex_measures(&self) -> &[f64] {
        &self.vertex_measure
    }

    pub fn total_measure(&self) -> f64 {
        self.edges.iter().map(|e| e.measure).sum()
    }

    pub fn boundary(&self) -> &BoundaryMap {
        &self.boundary
    }

    /// Edge index pairs with uniformized lengths, for shortest-path work.
    pub fn length_adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for e in &self.edges {
            adj[e.a].push((e.b, e.unif_length));
            adj[e.b].push((e.a, e.unif_length));
        }
        adj
    }

    /// Shortest-path `d_ε` distances from a vertex.
    pub fn unif_distances_from(&self, source: usize) -> Vec<f64> {
        crate::graphutil::dijkstra(&self.length_adjacency(), source)
    }

    /// Ratio scan for the codimension hypothesis: for every boundary point
    /// `z` and dyadic radius `r = α^{-k}`, `k = 1..N-1`, compare
    /// `ν(B_Z(z,r)) r^Θ` with the `μ_β`-mass of the `d_ε`-ball of radius `r`
    /// around the anchor of `z`. The filling is a metric measure graph, so
    /// the ball mass resolves partial edges (μ_β spread uniformly along each
    /// edge's uniformized length).
    pub fn codimension_check(&self, space: &FiniteMetricMeasureSpace) -> CodimensionReport {
        self.codimension_check_up_to(space, self.params.depth() - 1)
    }

    /// [`Self::codimension_check`] restricted to radii `k = 1..=max_k`; used
    /// to compare graphs of different depths over a common radius set.
    pub fn codimension_check_up_to(
        &self,
        space: &FiniteMetricMeasureSpace,
        max_k: usize,
    ) -> CodimensionReport {
        let theta_codim = self.params.codimension();
        let depth = max_k + 1;
        let alpha = self.params.alpha();
        let adj = self.length_adjacency();
        let mut dist_cache: HashMap<usize, Vec<f64>> = HashMap::new();

        let mut ratio_min = f64::INFINITY;
        let mut ratio_max = 0.0f64;
        for z in 0..space.n() {
            let anchor = self.boundary.anchor_of[z];
            let dists = dist_cache
                .entry(anchor)
                .or_insert_with(|| crate::graphutil::dijkstra(&adj, anchor));
            for k in 1..depth {
                let r = alpha.powi(-(k as i32));
                let base = space.ball_mass(z, r) * r.powf(theta_codim);
                let mut graph_mass = 0.0;
                for e in &self.edges {
                    let inside = ((r - dists[e.a]).max(0.0) + (r - dists[e.b]).max(0.0))
                        .min(e.unif_length);
                    graph_mass += e.measure * inside / e.unif_length;
                }
                if graph_mass > 0.0 {
                    let ratio = base / graph_mass;
                    ratio_min = ratio_min.min(ratio);
                    ratio_max = ratio_max.max(ratio);
                }
            }
        }
        CodimensionReport {
            ratio_min,
            ratio_max,
        }
    }

    /// Discrete analog of pairing against the boundary cutoff `η_ε`: with
    /// `η = 1` on levels `≤ N-k`, `0` on level `N` and linear in between,
    /// returns for each boundary anchor the accumulated signed flux
    /// `Σ c_e |δu|^{p-2} δu · δη` localized to the anchor's vertical fiber.
    /// For a Neumann solution this reproduces `-(f·w)` per anchor.
    pub fn flux_pairing(&self, u: &[f64], p: f64, cutoff_levels: usize) -> Result<Vec<(usize, f64)>> {
        let depth = self.params.depth();
        if cutoff_levels == 0 || cutoff_levels >= depth {
            return Err(Error::InvalidParam(format!(
                "cutoff {cutoff_levels} must lie in 1..depth ({depth})"
            )));
        }
        let anchors = self.boundary.anchor_vertices();
        let k = cutoff_levels as f64;
        let mut eta = Vec::with_capacity(self.vertices.len());
        let mut region = Vec::with_capacity(self.vertices.len());
        for v in &self.vertices {
            let lvl = v.level;
            if lvl + cutoff_levels <= depth {
                eta.push(1.0);
                region.push(None);
            } else {
                eta.push((depth - lvl) as f64 / k);
                let fiber_anchor = self.index[&(v.point, depth)];
                let slot = anchors
                    .binary_search(&fiber_anchor)
                    .expect("level-N vertices anchor themselves");
                region.push(Some(slot));
            }
        }
        let net = crate::calculus::Network::from_filling(self);
        let flux = crate::calculus::flux_localized(&net, u, p, &eta, &region, anchors.len());
        Ok(anchors.iter().cloned().zip(flux).collect())
    }

    /// Line-oriented export: one record per vertex and per edge.
    pub fn export<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for (i, v) in self.vertices.iter().enumerate() {
            writeln!(w, "vertex {} {} {} {}", i, v.point, v.level, self.hyp_dist[i])?;
        }
        for e in &self.edges {
            writeln!(
                w,
                "edge {} {} {} {} {}",
                e.a,
                e.b,
                e.kind.as_str(),
                e.unif_length,
                e.measure
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn params(depth: usize) -> FillingParams {
        FillingParams::new(2.0, 1.5, depth, 2.0, 0.5).unwrap()
    }

    fn single_point() -> FiniteMetricMeasureSpace {
        FiniteMetricMeasureSpace::load_matrix(vec![vec![0.0]], vec![1.0], None).unwrap()
    }

    fn build(space: &FiniteMetricMeasureSpace, p: FillingParams) -> FillingGraph {
        let nets = space.greedy_net_hierarchy(p.alpha(), p.depth()).unwrap();
        FillingGraph::build(space, &nets, p).unwrap()
    }

    #[test]
    fn derived_exponents_consistent() {
        let p = FillingParams::new(2.0, 1.5, 4, 3.0, 0.25).unwrap();
        assert_eq!(p.epsilon(), 2.0f64.ln());
        assert_eq!(p.codimension(), 3.0 * 0.75);
        assert!((p.beta() - p.epsilon() * p.codimension()).abs() < 1e-15);
        // theta = 1 - Theta/p identically
        assert_eq!(1.0 - p.codimension() / p.p(), p.theta());
        assert!(FillingParams::new(1.0, 1.5, 4, 2.0, 0.5).is_err());
        assert!(FillingParams::new(2.0, 1.0, 4, 2.0, 0.5).is_err());
        assert!(FillingParams::new(2.0, 1.5, 4, 1.0, 0.5).is_err());
        assert!(FillingParams::new(2.0, 1.5, 4, 2.0, 1.0).is_err());
    }

    #[test]
    fn single_point_gives_path_graph() {
        let space = single_point();
        let g = build(&space, params(4));
        assert_eq!(g.n_vertices(), 5);
        assert_eq!(g.edges().len(), 4);
        for (i, e) in g.edges().iter().enumerate() {
            assert_eq!(e.kind, EdgeKind::Vertical);
            assert_eq!((e.a, e.b), (i, i + 1));
        }
        for v in 0..g.n_vertices() {
            assert_eq!(g.hyp_dist_to_root(v), v);
        }
    }

    #[test]
    fn single_point_closed_forms() {
        let space = single_point();
        let p = params(4);
        let g = build(&space, p);
        let eps = p.epsilon();
        let beta = p.beta();
        for (n, e) in g.edges().iter().enumerate() {
            let t = n as f64;
            let want_len = 0.5 * ((-eps * t).exp() + (-eps * (t + 1.0)).exp());
            let want_mu = 0.5 * ((-beta * t).exp() + (-beta * (t + 1.0)).exp());
            assert!((e.unif_length - want_len).abs() < 1e-15);
            assert!((e.measure - want_mu).abs() < 1e-15);
        }
        // root edge: (1 + 1/alpha)/2
        assert!((g.edges()[0].unif_length - 0.5 * (1.0 + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn unif_length_limit_eps_zero() {
        assert_eq!(unif_edge_length(0.0, 3.0, 4.0), 1.0);
    }

    #[test]
    fn lifted_measure_limit_beta_zero() {
        assert_eq!(lifted_edge_measure(0.0, 3.0, 4.0, 0.25, 0.75), 0.5);
    }

    #[test]
    fn total_measure_has_geometric_tail() {
        let space = single_point();
        let beta = params(2).beta();
        let limit = 0.5 * (1.0 + (-beta).exp()) / (1.0 - (-beta).exp());
        let mut last = 0.0;
        for depth in 2..10 {
            let g = build(&space, params(depth));
            let total = g.total_measure();
            assert!(total > last);
            assert!(total < limit);
            last = total;
        }
        assert!((limit - last) / limit < 0.01);
    }

    #[test]
    fn cycle4_vertices_and_edges() {
        let space = fixtures::cycle(4).unwrap();
        let g = build(&space, params(2));
        // levels: {0}, {0,2}, {0,1,2,3}
        assert_eq!(g.n_vertices(), 7);
        let find = |point: usize, level: usize| {
            g.vertices()
                .iter()
                .position(|v| v.point == point && v.level == level)
                .unwrap()
        };
        let has_edge = |a: usize, b: usize| {
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            g.edges().iter().any(|e| e.a == a && e.b == b)
        };
        // horizontal at level 1: d(0,2) = 1/2 < 2 * 1.5 * (1/2)
        assert!(has_edge(find(0, 1), find(2, 1)));
        // root connects to every level-1 vertex
        assert!(has_edge(0, find(0, 1)));
        assert!(has_edge(0, find(2, 1)));
        // same-point vertical chains always present
        assert!(has_edge(find(0, 1), find(0, 2)));
        // every pair at level 2 is within 2 * 1.5 * (1/4) = 0.75 except none
        for x in 0..4 {
            for y in (x + 1)..4 {
                assert_eq!(
                    has_edge(find(x, 2), find(y, 2)),
                    space.dist(x, y) < 0.75,
                    "horizontal rule mismatch for ({x},{y})"
                );
            }
        }
    }

    #[test]
    fn param_mismatch_rejected() {
        let space = fixtures::cycle(4).unwrap();
        let nets = space.greedy_net_hierarchy(2.0, 3).unwrap();
        let err = FillingGraph::build(&space, &nets, params(2)).unwrap_err();
        assert!(matches!(err, Error::ParamMismatch { .. }));
    }

    #[test]
    fn boundary_anchoring_ties_go_low() {
        let space = fixtures::cycle(4).unwrap();
        let g = build(&space, params(1));
        // S_1 = {0, 2}; points 1 and 3 tie at distance 1/4 to both anchors
        let find = |point: usize| {
            g.vertices()
                .iter()
                .position(|v| v.point == point && v.level == 1)
                .unwrap()
        };
        let b = g.boundary();
        assert_eq!(b.anchor_of[0], find(0));
        assert_eq!(b.anchor_of[1], find(0));
        assert_eq!(b.anchor_of[2], find(2));
        assert_eq!(b.anchor_of[3], find(0));
        let lumped = b.lumped(&[1.0; 4], g.n_vertices());
        assert_eq!(lumped[find(0)], 0.75);
        assert_eq!(lumped[find(2)], 0.25);
    }

    #[test]
    fn deep_boundary_is_identity() {
        let space = fixtures::cycle(4).unwrap();
        let g = build(&space, params(3));
        let b = g.boundary();
        let mut total = 0.0;
        for z in 0..4 {
            let v = g.vertices()[b.anchor_of[z]];
            assert_eq!(v.point, z);
            assert_eq!(v.level, 3);
            total += b.weight[z];
        }
        assert!((total - space.total_mass()).abs() < 1e-15);
    }

    #[test]
    fn root_distance_bounded() {
        for space in [single_point(), fixtures::cycle(8).unwrap()] {
            let p = params(5);
            let g = build(&space, p);
            let a = p.alpha();
            let bound = (1.0 + 1.0 / a) / (2.0 * (1.0 - 1.0 / a));
            let dists = g.unif_distances_from(g.root());
            for (v, vert) in g.vertices().iter().enumerate() {
                if vert.level == p.depth() {
                    assert!(dists[v] <= bound + 1e-12);
                }
            }
        }
    }

    #[test]
    fn levels_above_root_stay_connected() {
        for space in [single_point(), fixtures::cycle(4).unwrap()] {
            let g = build(&space, params(2));
            let n = g.n_vertices();
            let mut adj = vec![Vec::new(); n];
            for e in g.edges() {
                if e.a != g.root() && e.b != g.root() {
                    adj[e.a].push(e.b);
                    adj[e.b].push(e.a);
                }
            }
            let start = (0..n).find(|&v| g.vertices()[v].level == 1).unwrap();
            let mut seen = vec![false; n];
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            for v in 1..n {
                assert!(seen[v], "vertex {v} cut off by removing the root");
            }
        }
    }

    #[test]
    fn lengths_and_measures_decay_along_chains() {
        let space = fixtures::cycle(8).unwrap();
        let g = build(&space, params(4));
        // compare same-point vertical edges at consecutive depths
        for e in g.edges() {
            if e.kind != EdgeKind::Vertical {
                continue;
            }
            let (pa, la) = (g.vertices()[e.a].point, g.vertices()[e.a].level);
            for e2 in g.edges() {
                if e2.kind == EdgeKind::Vertical
                    && g.vertices()[e2.a].point == pa
                    && g.vertices()[e2.a].level == la + 1
                    && g.vertices()[e2.b].point == g.vertices()[e.b].point
                {
                    assert!(e2.unif_length < e.unif_length);
                    assert!(e2.measure < e.measure);
                }
            }
        }
    }

    #[test]
    fn codimension_single_point_tight() {
        let space = single_point();
        // β = ε here, so μ_β has unit density per unit d_ε-length along the
        // path and every ratio is exactly 1
        let g = build(&space, params(6));
        let rep = g.codimension_check(&space);
        assert!(rep.ratio_min > 0.0);
        assert!((rep.spread() - 1.0).abs() < 1e-9, "spread = {}", rep.spread());

        // with Θ ≠ 1 the density varies along the path; the geometric-sum
        // factor stays below 2
        let p = FillingParams::new(2.0, 1.5, 6, 2.0, 0.25).unwrap();
        let g = build(&space, p);
        let rep = g.codimension_check(&space);
        assert!(rep.spread() < 2.0, "spread = {}", rep.spread());
    }

    #[test]
    fn export_is_line_oriented() {
        let space = single_point();
        let g = build(&space, params(2));
        let mut buf = Vec::new();
        g.export(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3 + 2);
        assert!(lines[0].starts_with("vertex 0 0 0"));
        assert!(lines[3].starts_with("edge 0 1 vertical"));
    }
}
