//! Path embeddings and upper-envelope machinery.
//!
//! A path between two points is embedded onto the x-axis. Every vertex `v`
//! projects onto the path at `p_v` with overhang `h_v`, and contributes the
//! V-shaped cost `f_v(x) = w_v (h_v + |x - p_v|)`. The increasing arm
//! (`f_v^+`, zero left of the apex) and the decreasing arm (`f_v^-`, zero
//! right of the apex) form the upper envelopes `E_L` and `E_R` that drive
//! both the baseline scan and the prune-and-search solver.
//!
//! Queries at `t ± ε` are answered symbolically through [`DualValue`]:
//! a pair `(value, drift)` ordered lexicographically, so no numeric epsilon
//! is ever chosen.

use std::cmp::Ordering;

use crate::error::SolverError;
use crate::scalar::Scalar;
use crate::tree::{EdgeId, PointRef, VertexId, WeightedTree};

/// Which arm of the V-shape a line describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Increasing arm `f_v^+`: zero strictly left of the apex.
    Plus,
    /// Decreasing arm `f_v^-`: zero strictly right of the apex.
    Minus,
}

/// `value + drift·ε` for the symbolic infinitesimal `ε`.
///
/// Ordering is lexicographic on `(value, drift)`: for linear `f`, `g`,
/// `f(t+ε) < g(t+ε)` iff `f(t) < g(t)`, or they tie and `f` grows slower.
#[derive(Debug, Clone, PartialEq)]
pub struct DualValue<S> {
    pub value: S,
    pub drift: S,
}

impl<S: Scalar> DualValue<S> {
    pub fn exact(value: S) -> Self {
        DualValue {
            value,
            drift: S::zero(),
        }
    }

    /// The point `t - ε`.
    pub fn just_below(value: S) -> Self {
        DualValue {
            value,
            drift: -S::one(),
        }
    }

    /// The point `t + ε`.
    pub fn just_above(value: S) -> Self {
        DualValue {
            value,
            drift: S::one(),
        }
    }

    pub fn zero() -> Self {
        DualValue {
            value: S::zero(),
            drift: S::zero(),
        }
    }

    pub fn cmp_dual(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then_with(|| self.drift.total_cmp(&other.drift))
    }

    pub fn add(&self, other: &Self) -> Self {
        DualValue {
            value: self.value.clone() + other.value.clone(),
            drift: self.drift.clone() + other.drift.clone(),
        }
    }

    pub fn scale(&self, k: &S) -> Self {
        DualValue {
            value: self.value.clone() * k.clone(),
            drift: self.drift.clone() * k.clone(),
        }
    }

    fn max_assign(&mut self, other: DualValue<S>) {
        if self.cmp_dual(&other) == Ordering::Less {
            *self = other;
        }
    }
}

/// One arm of a vertex's cost V-shape in path coordinates.
///
/// The full line through the arm has slope `±w` and passes through the
/// apex `(apex_x, apex_val)`; outside its domain the arm evaluates to zero.
#[derive(Debug, Clone)]
pub struct CostLine<S> {
    pub vertex: VertexId,
    pub side: Side,
    pub w: S,
    pub apex_x: S,
    pub apex_val: S,
}

impl<S: Scalar> CostLine<S> {
    /// Slope of the unclipped line.
    pub fn slope(&self) -> S {
        match self.side {
            Side::Plus => self.w.clone(),
            Side::Minus => -self.w.clone(),
        }
    }

    /// Intercept of the unclipped line.
    pub fn intercept(&self) -> S {
        self.apex_val.clone() - self.slope() * self.apex_x.clone()
    }

    /// Value of the unclipped line at `x`.
    pub fn full_eval(&self, x: &S) -> S {
        self.slope() * x.clone() + self.intercept()
    }

    /// Clipped evaluation at a dual point (zero outside the arm's domain).
    pub fn eval_dual(&self, x: &DualValue<S>) -> DualValue<S> {
        let apex = DualValue::exact(self.apex_x.clone());
        let active = match self.side {
            Side::Plus => x.cmp_dual(&apex) != Ordering::Less,
            Side::Minus => x.cmp_dual(&apex) != Ordering::Greater,
        };
        if !active {
            return DualValue::zero();
        }
        match self.side {
            Side::Plus => DualValue {
                value: self.apex_val.clone() + self.w.clone() * (x.value.clone() - self.apex_x.clone()),
                drift: self.w.clone() * x.drift.clone(),
            },
            Side::Minus => DualValue {
                value: self.apex_val.clone() + self.w.clone() * (self.apex_x.clone() - x.value.clone()),
                drift: -(self.w.clone() * x.drift.clone()),
            },
        }
    }

    /// Clipped evaluation at an exact coordinate.
    pub fn eval(&self, x: &S) -> S {
        self.eval_dual(&DualValue::exact(x.clone())).value
    }

    /// Unclipped evaluation at a dual point.
    pub fn full_eval_dual(&self, x: &DualValue<S>) -> DualValue<S> {
        let slope = self.slope();
        DualValue {
            value: slope.clone() * x.value.clone() + self.intercept(),
            drift: slope * x.drift.clone(),
        }
    }

    /// Solves `f(x) = xi` on the arm's domain; `None` when `xi` is below
    /// the apex value (the arm never reaches it).
    pub fn solve(&self, xi: &DualValue<S>) -> Option<DualValue<S>> {
        let apex_val = DualValue::exact(self.apex_val.clone());
        if xi.cmp_dual(&apex_val) == Ordering::Less {
            return None;
        }
        match self.side {
            Side::Plus => Some(DualValue {
                value: self.apex_x.clone()
                    + (xi.value.clone() - self.apex_val.clone()) / self.w.clone(),
                drift: xi.drift.clone() / self.w.clone(),
            }),
            Side::Minus => Some(DualValue {
                value: self.apex_x.clone()
                    - (xi.value.clone() - self.apex_val.clone()) / self.w.clone(),
                drift: -(xi.drift.clone() / self.w.clone()),
            }),
        }
    }
}

/// Intersection of the two unclipped lines. `None` when parallel.
pub fn intersection<S: Scalar>(f: &CostLine<S>, g: &CostLine<S>) -> Option<S> {
    debug_assert_eq!(f.side, g.side);
    let (sf, sg) = (f.slope(), g.slope());
    if sf == sg {
        return None;
    }
    Some((g.intercept() - f.intercept()) / (sf - sg))
}

/// Max of clipped arms at a dual point; `None` is the "-infinity" value of
/// the empty set.
pub fn envelope_eval<S: Scalar>(lines: &[CostLine<S>], x: &DualValue<S>) -> Option<DualValue<S>> {
    let mut best: Option<DualValue<S>> = None;
    for line in lines {
        let val = line.eval_dual(x);
        match &mut best {
            None => best = Some(val),
            Some(b) => b.max_assign(val),
        }
    }
    best
}

/// Inverse envelope query.
///
/// For `Minus`, the largest `x` with `f_v^-(x) = xi` over the set; for
/// `Plus`, symmetrically the smallest. Errors when `xi` is below every
/// arm's reachable range.
pub fn inverse_query<S: Scalar>(
    lines: &[CostLine<S>],
    xi: &DualValue<S>,
    side: Side,
) -> Result<DualValue<S>, SolverError> {
    let mut best: Option<DualValue<S>> = None;
    for line in lines {
        debug_assert_eq!(line.side, side);
        if let Some(x) = line.solve(xi) {
            match &mut best {
                None => best = Some(x),
                Some(b) => {
                    let better = match side {
                        Side::Minus => x.cmp_dual(b) == Ordering::Greater,
                        Side::Plus => x.cmp_dual(b) == Ordering::Less,
                    };
                    if better {
                        *b = x;
                    }
                }
            }
        }
    }
    best.ok_or(SolverError::InverseOutOfRange)
}

// ---------------------------------------------------------------------------
// Path embedding
// ---------------------------------------------------------------------------

/// Projection of a vertex onto the embedded path.
#[derive(Debug, Clone)]
pub struct Proj<S> {
    /// x-coordinate of the closest path point.
    pub x: S,
    /// Distance from the vertex to that point.
    pub h: S,
}

#[derive(Debug, Clone)]
struct PathSpan<S> {
    edge: EdgeId,
    x_start: S,
    x_end: S,
    /// Edge offset corresponding to `x_start`.
    off_start: S,
    /// +1 when x grows with the edge offset, -1 otherwise.
    forward: bool,
}

/// The path from `c1` to `c2` embedded on the x-axis, with `x(c1) = 0`,
/// plus every vertex's projection onto it.
#[derive(Debug, Clone)]
pub struct PathEmbedding<S> {
    pub total: S,
    /// x-coordinate of the weighted center `c` (set by [`embed`]).
    pub xc: S,
    proj: Vec<Proj<S>>,
    spans: Vec<PathSpan<S>>,
    path_vertices: Vec<(VertexId, S)>,
    start: PointRef<S>,
    end: PointRef<S>,
}

impl<S: Scalar> PathEmbedding<S> {
    pub fn proj(&self, v: VertexId) -> &Proj<S> {
        &self.proj[v]
    }

    pub fn path_vertices(&self) -> &[(VertexId, S)] {
        &self.path_vertices
    }

    pub fn start(&self) -> &PointRef<S> {
        &self.start
    }

    pub fn end(&self) -> &PointRef<S> {
        &self.end
    }

    /// Cost arm of vertex `v` on the requested side.
    pub fn line(&self, t: &WeightedTree<S>, v: VertexId, side: Side) -> CostLine<S> {
        let p = &self.proj[v];
        CostLine {
            vertex: v,
            side,
            w: t.weight(v).clone(),
            apex_x: p.x.clone(),
            apex_val: t.weight(v).clone() * p.h.clone(),
        }
    }

    /// Cost arms for a set of vertices.
    pub fn lines(&self, t: &WeightedTree<S>, ids: &[VertexId], side: Side) -> Vec<CostLine<S>> {
        ids.iter().map(|&v| self.line(t, v, side)).collect()
    }

    /// Materializes an x-coordinate back to a tree point. Coordinates are
    /// clamped into `[0, total]`.
    pub fn point_at(&self, t: &WeightedTree<S>, x: &S) -> PointRef<S> {
        let x = x.clone().max_val(S::zero()).min_val(self.total.clone());
        if self.spans.is_empty() {
            return self.start.clone();
        }
        for span in &self.spans {
            if x.total_cmp(&span.x_end) != Ordering::Greater {
                let delta = x - span.x_start.clone();
                let off = if span.forward {
                    span.off_start.clone() + delta
                } else {
                    span.off_start.clone() - delta
                };
                let len = t.edge(span.edge).len.clone();
                let off = off.max_val(S::zero()).min_val(len);
                return t
                    .point_on_edge(span.edge, off)
                    .expect("span offset within edge");
            }
        }
        self.end.clone()
    }

    /// x-coordinate of a point known to lie on the path.
    pub fn locate(&self, t: &WeightedTree<S>, p: &PointRef<S>) -> Result<S, SolverError> {
        match p {
            PointRef::Vertex(v) => self
                .path_vertices
                .iter()
                .find(|(pv, _)| pv == v)
                .map(|(_, x)| x.clone())
                .or_else(|| {
                    // Endpoints may be vertex-anchored without being listed
                    // when the path is a single partial edge.
                    if &self.start == p {
                        Some(S::zero())
                    } else if &self.end == p {
                        Some(self.total.clone())
                    } else {
                        None
                    }
                })
                .ok_or(SolverError::NotOnPath),
            PointRef::Interior { edge, offset } => {
                for span in &self.spans {
                    if span.edge == *edge {
                        let delta = if span.forward {
                            offset.clone() - span.off_start.clone()
                        } else {
                            span.off_start.clone() - offset.clone()
                        };
                        let x = span.x_start.clone() + delta;
                        if x.total_cmp(&span.x_start) != Ordering::Less
                            && x.total_cmp(&span.x_end) != Ordering::Greater
                        {
                            return Ok(x);
                        }
                    }
                }
                let _ = t;
                Err(SolverError::NotOnPath)
            }
        }
    }
}

/// Embeds the path between two points, recording every vertex projection.
/// Runs in one tree traversal.
pub fn embed_path<S: Scalar>(
    t: &WeightedTree<S>,
    a: &PointRef<S>,
    b: &PointRef<S>,
) -> PathEmbedding<S> {
    let n = t.n();

    // Same-edge case: the path is a single (partial) edge segment.
    if let (
        PointRef::Interior { edge: ea, offset: oa },
        PointRef::Interior { edge: eb, offset: ob },
    ) = (a, b)
    {
        if ea == eb {
            let (lo, hi, fwd) = if oa.total_cmp(ob) != Ordering::Greater {
                (oa.clone(), ob.clone(), true)
            } else {
                (ob.clone(), oa.clone(), true)
            };
            // Orient from a to b regardless of offset order.
            let forward = oa.total_cmp(ob) != Ordering::Greater;
            let total = hi.clone() - lo.clone();
            let _ = fwd;
            let e = t.edge(*ea);
            // Distances from each endpoint give projections: every vertex
            // enters this edge through u or v.
            let du = t.distances_from_point(&t.vertex_point(e.u));
            let dv = t.distances_from_point(&t.vertex_point(e.v));
            let (xa_u, xb_u) = (oa.clone(), ob.clone());
            let mut proj = Vec::with_capacity(n);
            for v in 0..n {
                // Path from v reaches the edge at offset 0 (via u) or at
                // offset len (via v); clamp into [min(oa,ob), max(oa,ob)].
                let via_u = du[v].clone() + xa_u.clone().min_val(xb_u.clone()) - S::zero();
                let via_v =
                    dv[v].clone() + (e.len.clone() - xa_u.clone().max_val(xb_u.clone()));
                // Entry offset on the edge: u side enters at the low end.
                let enters_u = via_u.total_cmp(&via_v) != Ordering::Greater;
                let lo_off = xa_u.clone().min_val(xb_u.clone());
                let hi_off = xa_u.clone().max_val(xb_u.clone());
                let (entry_off, h) = if enters_u {
                    (lo_off.clone(), du[v].clone() + (lo_off.clone() - S::zero()))
                } else {
                    (hi_off.clone(), dv[v].clone() + (e.len.clone() - hi_off.clone()))
                };
                let x_along = if forward {
                    entry_off.clone() - lo.clone()
                } else {
                    hi.clone() - entry_off.clone()
                };
                proj.push(Proj { x: x_along, h });
            }
            let span = PathSpan {
                edge: *ea,
                x_start: S::zero(),
                x_end: total.clone(),
                off_start: if forward { lo.clone() } else { hi.clone() },
                forward,
            };
            return PathEmbedding {
                total,
                xc: S::zero(),
                proj,
                spans: vec![span],
                path_vertices: Vec::new(),
                start: a.clone(),
                end: b.clone(),
            };
        }
    }

    // General case. Walk the tree from `a`, recording parents, then trace
    // back from `b`'s entry endpoint.
    let dist = t.distances_from_point(a);
    let mut parent: Vec<Option<(VertexId, EdgeId)>> = vec![None; n];
    let mut order: Vec<VertexId> = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    let push_root = |v: VertexId, visited: &mut Vec<bool>, order: &mut Vec<VertexId>| {
        if !visited[v] {
            visited[v] = true;
            order.push(v);
        }
    };
    match a {
        PointRef::Vertex(v) => push_root(*v, &mut visited, &mut order),
        PointRef::Interior { edge, .. } => {
            let e = t.edge(*edge);
            push_root(e.u, &mut visited, &mut order);
            push_root(e.v, &mut visited, &mut order);
        }
    }
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        for &(w, eid) in t.neighbors(v) {
            if !visited[w] {
                visited[w] = true;
                parent[w] = Some((v, eid));
                order.push(w);
            }
        }
    }

    // Entry vertex on b's side and the partial tail towards b.
    let (entry_b, tail): (VertexId, Option<(EdgeId, S, bool)>) = match b {
        PointRef::Vertex(v) => (*v, None),
        PointRef::Interior { edge, offset } => {
            let e = t.edge(*edge);
            let via_u = dist[e.u].clone() + offset.clone();
            let via_v = dist[e.v].clone() + (e.len.clone() - offset.clone());
            if via_u.total_cmp(&via_v) != Ordering::Greater {
                // Enter through u: offsets grow along the travel direction.
                (e.u, Some((*edge, offset.clone(), true)))
            } else {
                (e.v, Some((*edge, e.len.clone() - offset.clone(), false)))
            }
        }
    };

    // Vertex chain from a's entry to b's entry.
    let mut chain = vec![entry_b];
    while let Some((p, _)) = parent[chain[chain.len() - 1]] {
        chain.push(p);
    }
    chain.reverse();
    // chain[0] is one of a's roots; if a is interior with two roots, make
    // sure we start at the root on the path (the one the chain begins at).

    let mut spans: Vec<PathSpan<S>> = Vec::new();
    let mut path_vertices: Vec<(VertexId, S)> = Vec::new();
    let mut x = S::zero();

    // Partial head edge when a is interior.
    if let PointRef::Interior { edge, offset } = a {
        let e = t.edge(*edge);
        let first = chain[0];
        debug_assert!(first == e.u || first == e.v);
        if first == e.u {
            // Travel from the interior point down to u: offsets shrink.
            spans.push(PathSpan {
                edge: *edge,
                x_start: S::zero(),
                x_end: offset.clone(),
                off_start: offset.clone(),
                forward: false,
            });
            x = offset.clone();
        } else {
            spans.push(PathSpan {
                edge: *edge,
                x_start: S::zero(),
                x_end: e.len.clone() - offset.clone(),
                off_start: offset.clone(),
                forward: true,
            });
            x = e.len.clone() - offset.clone();
        }
    }

    path_vertices.push((chain[0], x.clone()));
    for win in chain.windows(2) {
        let (from, to) = (win[0], win[1]);
        let (_, eid) = parent[to].expect("chain follows parents");
        let e = t.edge(eid);
        let forward = e.u == from;
        spans.push(PathSpan {
            edge: eid,
            x_start: x.clone(),
            x_end: x.clone() + e.len.clone(),
            off_start: if forward { S::zero() } else { e.len.clone() },
            forward,
        });
        x = x + e.len.clone();
        path_vertices.push((to, x.clone()));
    }

    // Partial tail edge when b is interior.
    if let Some((eid, seg_len, forward)) = tail {
        let e = t.edge(eid);
        spans.push(PathSpan {
            edge: eid,
            x_start: x.clone(),
            x_end: x.clone() + seg_len.clone(),
            off_start: if forward { S::zero() } else { e.len.clone() },
            forward,
        });
        x = x + seg_len;
    }
    let total = x;

    // Projections: multi-source traversal from the path.
    let mut proj: Vec<Option<Proj<S>>> = vec![None; n];
    let mut queue: Vec<VertexId> = Vec::with_capacity(n);
    for (v, xv) in &path_vertices {
        proj[*v] = Some(Proj {
            x: xv.clone(),
            h: S::zero(),
        });
        queue.push(*v);
    }
    // Off-path endpoints of partial edges hang beyond the path ends.
    match a {
        PointRef::Interior { edge, offset } => {
            let e = t.edge(*edge);
            let on_path = chain[0];
            let (off_v, h) = if on_path == e.u {
                (e.v, e.len.clone() - offset.clone())
            } else {
                (e.u, offset.clone())
            };
            if proj[off_v].is_none() {
                proj[off_v] = Some(Proj { x: S::zero(), h });
                queue.push(off_v);
            }
        }
        PointRef::Vertex(_) => {}
    }
    match b {
        PointRef::Interior { edge, offset } => {
            let e = t.edge(*edge);
            let on_path = entry_b;
            let (off_v, h) = if on_path == e.u {
                (e.v, e.len.clone() - offset.clone())
            } else {
                (e.u, offset.clone())
            };
            if proj[off_v].is_none() {
                proj[off_v] = Some(Proj {
                    x: total.clone(),
                    h,
                });
                queue.push(off_v);
            }
        }
        PointRef::Vertex(_) => {}
    }
    let mut head = 0;
    while head < queue.len() {
        let v = queue[head];
        head += 1;
        let pv = proj[v].clone().unwrap();
        for &(w, eid) in t.neighbors(v) {
            if proj[w].is_none() {
                proj[w] = Some(Proj {
                    x: pv.x.clone(),
                    h: pv.h.clone() + t.edge(eid).len.clone(),
                });
                queue.push(w);
            }
        }
    }

    PathEmbedding {
        total,
        xc: S::zero(),
        proj: proj.into_iter().map(|p| p.unwrap()).collect(),
        spans,
        path_vertices,
        start: a.clone(),
        end: b.clone(),
    }
}

/// Embeds `π(c1, c2)` and locates the center `c` on it.
pub fn embed<S: Scalar>(
    t: &WeightedTree<S>,
    c1: &PointRef<S>,
    c: &PointRef<S>,
    c2: &PointRef<S>,
) -> Result<PathEmbedding<S>, SolverError> {
    let mut emb = embed_path(t, c1, c2);
    let xc = emb.locate(t, c)?;
    emb.xc = xc;
    Ok(emb)
}

// ---------------------------------------------------------------------------
// Explicit envelope construction
// ---------------------------------------------------------------------------

/// One linear piece: value `slope * x + intercept` on `[x0, x1]`.
#[derive(Debug, Clone)]
pub struct EnvSegment<S> {
    pub x0: S,
    pub x1: S,
    pub slope: S,
    pub intercept: S,
}

impl<S: Scalar> EnvSegment<S> {
    pub fn value_at(&self, x: &S) -> S {
        self.slope.clone() * x.clone() + self.intercept.clone()
    }
}

/// Explicit piecewise-linear upper envelope on an interval. Segments are
/// contiguous in x but may disagree in value at shared breakpoints (jumps).
///
/// Breakpoint values follow the arms' closed-apex semantics: plus-side
/// envelopes are right-continuous (an arm is active at and after its apex),
/// minus-side envelopes are left-continuous.
#[derive(Debug, Clone)]
pub struct PiecewiseEnvelope<S> {
    pub segments: Vec<EnvSegment<S>>,
    pub lo: S,
    pub hi: S,
    pub side: Side,
}

impl<S: Scalar> PiecewiseEnvelope<S> {
    pub fn eval(&self, x: &S) -> S {
        let x = x.clone().max_val(self.lo.clone()).min_val(self.hi.clone());
        let mut lo = 0usize;
        let mut hi = self.segments.len();
        match self.side {
            Side::Plus => {
                // Last segment with x0 <= x.
                while lo + 1 < hi {
                    let mid = (lo + hi) / 2;
                    if self.segments[mid].x0.total_cmp(&x) != Ordering::Greater {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
            }
            Side::Minus => {
                // First segment with x1 >= x.
                while lo + 1 < hi {
                    let mid = (lo + hi) / 2;
                    if self.segments[mid - 1].x1.total_cmp(&x) == Ordering::Less {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                // Walk back to the earliest segment reaching x.
                while lo > 0 && self.segments[lo - 1].x1.total_cmp(&x) != Ordering::Less {
                    lo -= 1;
                }
            }
        }
        self.segments[lo].value_at(&x)
    }

    /// Interior bending points (segment boundaries), deduplicated.
    pub fn breakpoints(&self) -> Vec<S> {
        let mut out = Vec::new();
        for i in 1..self.segments.len() {
            let x = self.segments[i].x0.clone();
            if out.last().map_or(true, |l: &S| *l != x) {
                out.push(x);
            }
        }
        out
    }

    /// True when adjacent segments agree in value at every breakpoint.
    pub fn is_continuous(&self) -> bool {
        self.segments.windows(2).all(|w| {
            let left = w[0].value_at(&w[0].x1);
            let right = w[1].value_at(&w[1].x0);
            left == right
        })
    }

    /// Continuous with nondecreasing slopes.
    pub fn is_convex(&self) -> bool {
        self.is_continuous()
            && self
                .segments
                .windows(2)
                .all(|w| w[0].slope.total_cmp(&w[1].slope) != Ordering::Greater)
    }
}

/// Builds the explicit upper envelope of clipped arms on `[lo, hi]`.
///
/// For `Plus` arms this is `max over v with apex_x <= x of the full line`,
/// and zero before the first apex; `Minus` is the mirror image.
pub fn build_envelope<S: Scalar>(
    lines: &[CostLine<S>],
    lo: &S,
    hi: &S,
) -> PiecewiseEnvelope<S> {
    if lines.is_empty() {
        return PiecewiseEnvelope {
            segments: vec![EnvSegment {
                x0: lo.clone(),
                x1: hi.clone(),
                slope: S::zero(),
                intercept: S::zero(),
            }],
            lo: lo.clone(),
            hi: hi.clone(),
            side: Side::Plus,
        };
    }
    let side = lines[0].side;
    debug_assert!(lines.iter().all(|l| l.side == side));

    // Reduce Minus to Plus by reflecting x -> -x.
    let (plus_lines, lo_p, hi_p): (Vec<(S, S, S)>, S, S) = match side {
        Side::Plus => (
            lines
                .iter()
                .map(|l| (l.apex_x.clone(), l.apex_val.clone(), l.w.clone()))
                .collect(),
            lo.clone(),
            hi.clone(),
        ),
        Side::Minus => (
            lines
                .iter()
                .map(|l| (-l.apex_x.clone(), l.apex_val.clone(), l.w.clone()))
                .collect(),
            -hi.clone(),
            -lo.clone(),
        ),
    };

    // Build on a slightly extended interval so arms whose apex sits exactly
    // at the right boundary still contribute there, then clip back.
    let hi_ext = hi_p.clone() + S::one();
    let segs = build_plus_envelope(plus_lines, &lo_p, &hi_ext);
    let segments: Vec<EnvSegment<S>> = match side {
        Side::Plus => segs,
        Side::Minus => segs
            .into_iter()
            .rev()
            .map(|s| EnvSegment {
                x0: -s.x1,
                x1: -s.x0,
                slope: -s.slope,
                intercept: s.intercept,
            })
            .collect(),
    };
    // Clip to [lo, hi]. A breakpoint exactly at the clip boundary keeps a
    // zero-length segment so right-continuous evaluation stays faithful.
    let mut clipped: Vec<EnvSegment<S>> = Vec::with_capacity(segments.len());
    for mut seg in segments {
        if seg.x1.total_cmp(lo) == Ordering::Less || seg.x0.total_cmp(hi) == Ordering::Greater {
            continue;
        }
        if seg.x0.total_cmp(lo) == Ordering::Less {
            seg.x0 = lo.clone();
        }
        if seg.x1.total_cmp(hi) == Ordering::Greater {
            seg.x1 = hi.clone();
        }
        let zero_len = seg.x0 == seg.x1;
        if zero_len {
            // Zero-length segments carry the closed-boundary value: at hi
            // for plus envelopes, at lo for minus envelopes.
            let at_closed_end = match side {
                Side::Plus => seg.x0.total_cmp(hi) == Ordering::Equal,
                Side::Minus => seg.x0.total_cmp(lo) == Ordering::Equal,
            };
            if !at_closed_end {
                continue;
            }
        }
        clipped.push(seg);
    }
    if clipped.is_empty() {
        clipped.push(EnvSegment {
            x0: lo.clone(),
            x1: hi.clone(),
            slope: S::zero(),
            intercept: S::zero(),
        });
    }
    PiecewiseEnvelope {
        segments: clipped,
        lo: lo.clone(),
        hi: hi.clone(),
        side,
    }
}

/// Envelope of increasing arms `(apex_x, apex_val, w)` over `[lo, hi]`,
/// computed by divide-and-conquer merging of piecewise-linear functions.
///
/// Boundary convention is right-continuity: the value at a breakpoint
/// belongs to the segment starting there (an arm is active at its apex).
fn build_plus_envelope<S: Scalar>(lines: Vec<(S, S, S)>, lo: &S, hi: &S) -> Vec<EnvSegment<S>> {
    let zero_seg = |x0: S, x1: S| EnvSegment {
        x0,
        x1,
        slope: S::zero(),
        intercept: S::zero(),
    };
    // Per-arm base function on [lo, hi]: zero before the apex, the full
    // line after it.
    let mut pieces: Vec<Vec<EnvSegment<S>>> = Vec::new();
    for (ax, aval, w) in lines {
        if ax.total_cmp(hi) == Ordering::Greater {
            continue; // never active on the interval
        }
        let slope = w.clone();
        let intercept = aval.clone() - w.clone() * ax.clone();
        if ax.total_cmp(lo) != Ordering::Greater {
            pieces.push(vec![EnvSegment {
                x0: lo.clone(),
                x1: hi.clone(),
                slope,
                intercept,
            }]);
        } else {
            pieces.push(vec![
                zero_seg(lo.clone(), ax.clone()),
                EnvSegment {
                    x0: ax,
                    x1: hi.clone(),
                    slope,
                    intercept,
                },
            ]);
        }
    }
    if pieces.is_empty() {
        return vec![zero_seg(lo.clone(), hi.clone())];
    }
    while pieces.len() > 1 {
        let mut next = Vec::with_capacity(pieces.len().div_ceil(2));
        let mut it = pieces.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(merge_max(a, b)),
                None => next.push(a),
            }
        }
        pieces = next;
    }
    pieces.pop().unwrap()
}

/// Pointwise max of two piecewise-linear functions tiling the same interval.
fn merge_max<S: Scalar>(a: Vec<EnvSegment<S>>, b: Vec<EnvSegment<S>>) -> Vec<EnvSegment<S>> {
    let mut out: Vec<EnvSegment<S>> = Vec::with_capacity(a.len() + b.len());
    let mut push = |x0: S, x1: S, slope: S, intercept: S| {
        if x1.total_cmp(&x0) != Ordering::Greater {
            return;
        }
        if let Some(last) = out.last_mut() {
            if last.slope == slope && last.intercept == intercept && last.x1 == x0 {
                last.x1 = x1;
                return;
            }
        }
        out.push(EnvSegment {
            x0,
            x1,
            slope,
            intercept,
        });
    };

    let (mut i, mut j) = (0usize, 0usize);
    let mut x = a[0].x0.clone();
    let end = a.last().unwrap().x1.clone();
    while x.total_cmp(&end) == Ordering::Less {
        let sa = &a[i];
        let sb = &b[j];
        let cell_end = if sa.x1.total_cmp(&sb.x1) == Ordering::Less {
            sa.x1.clone()
        } else {
            sb.x1.clone()
        };
        // Compare the two lines on [x, cell_end].
        let va0 = sa.value_at(&x);
        let vb0 = sb.value_at(&x);
        let va1 = sa.value_at(&cell_end);
        let vb1 = sb.value_at(&cell_end);
        let a_ge_0 = va0.total_cmp(&vb0) != Ordering::Less;
        let b_ge_0 = vb0.total_cmp(&va0) != Ordering::Less;
        let a_ge_1 = va1.total_cmp(&vb1) != Ordering::Less;
        let b_ge_1 = vb1.total_cmp(&va1) != Ordering::Less;
        if a_ge_0 && a_ge_1 {
            push(x.clone(), cell_end.clone(), sa.slope.clone(), sa.intercept.clone());
        } else if b_ge_0 && b_ge_1 {
            push(x.clone(), cell_end.clone(), sb.slope.clone(), sb.intercept.clone());
        } else {
            // Exactly one crossing strictly inside the cell.
            let x_star = (sb.intercept.clone() - sa.intercept.clone())
                / (sa.slope.clone() - sb.slope.clone());
            if a_ge_0 {
                push(x.clone(), x_star.clone(), sa.slope.clone(), sa.intercept.clone());
                push(x_star, cell_end.clone(), sb.slope.clone(), sb.intercept.clone());
            } else {
                push(x.clone(), x_star.clone(), sb.slope.clone(), sb.intercept.clone());
                push(x_star, cell_end.clone(), sa.slope.clone(), sa.intercept.clone());
            }
        }
        x = cell_end;
        if i + 1 < a.len() && a[i + 1].x0.total_cmp(&x) != Ordering::Greater {
            i += 1;
        }
        if j + 1 < b.len() && b[j + 1].x0.total_cmp(&x) != Ordering::Greater {
            j += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{Rat, Scalar};
    use crate::tree::WeightedTree;

    fn rat(n: i64, d: i64) -> Rat {
        <Rat as Scalar>::from_ratio(n, d)
    }

    fn int(n: i64) -> Rat {
        <Rat as Scalar>::from_i64(n)
    }

    fn plus(w: i64, apex_x: Rat, apex_val: Rat) -> CostLine<Rat> {
        CostLine {
            vertex: 0,
            side: Side::Plus,
            w: int(w),
            apex_x,
            apex_val,
        }
    }

    fn minus(w: i64, apex_x: Rat, apex_val: Rat) -> CostLine<Rat> {
        CostLine {
            vertex: 0,
            side: Side::Minus,
            w: int(w),
            apex_x,
            apex_val,
        }
    }

    fn unit_path(n: usize) -> WeightedTree<Rat> {
        let weights = vec![int(1); n];
        let edges = (0..n - 1).map(|i| (i, i + 1, int(1))).collect();
        WeightedTree::new(weights, edges).unwrap()
    }

    #[test]
    fn dual_ordering_is_lexicographic() {
        let a = DualValue {
            value: int(3),
            drift: int(-1),
        };
        let b = DualValue {
            value: int(3),
            drift: int(0),
        };
        let c = DualValue {
            value: int(4),
            drift: int(-5),
        };
        assert_eq!(a.cmp_dual(&b), std::cmp::Ordering::Less);
        assert_eq!(b.cmp_dual(&c), std::cmp::Ordering::Less);
    }

    #[test]
    fn embed_unit_path() {
        let t = unit_path(3);
        let emb = embed_path(&t, &t.vertex_point(0), &t.vertex_point(2));
        assert_eq!(emb.total, int(2));
        assert_eq!(emb.proj(1).x, int(1));
        assert_eq!(emb.proj(1).h, int(0));
        // Materialize back.
        let p = emb.point_at(&t, &rat(3, 2));
        assert_eq!(p, t.point_on_edge(1, rat(1, 2)).unwrap());
        assert_eq!(emb.locate(&t, &p).unwrap(), rat(3, 2));
    }

    #[test]
    fn embed_projects_hanging_vertex() {
        // v3 hangs at distance 2 off the path point x = 1.
        let t = WeightedTree::new(
            vec![int(1); 4],
            vec![(0, 1, int(1)), (1, 2, int(1)), (1, 3, int(2))],
        )
        .unwrap();
        let emb = embed_path(&t, &t.vertex_point(0), &t.vertex_point(2));
        assert_eq!(emb.proj(3).x, int(1));
        assert_eq!(emb.proj(3).h, int(2));
    }

    #[test]
    fn embed_partial_edges() {
        let t = unit_path(3);
        let a = t.point_on_edge(0, rat(1, 4)).unwrap();
        let b = t.point_on_edge(1, rat(3, 4)).unwrap();
        let emb = embed_path(&t, &a, &b);
        assert_eq!(emb.total, rat(3, 2));
        // Vertex 0 hangs beyond the start.
        assert_eq!(emb.proj(0).x, int(0));
        assert_eq!(emb.proj(0).h, rat(1, 4));
        assert_eq!(emb.proj(1).x, rat(3, 4));
        // Round trip through materialization.
        for x in [int(0), rat(1, 2), rat(5, 4), rat(3, 2)] {
            let p = emb.point_at(&t, &x);
            assert_eq!(emb.locate(&t, &p).unwrap(), x);
        }
    }

    #[test]
    fn embed_same_edge() {
        let t = unit_path(2);
        let a = t.point_on_edge(0, rat(1, 4)).unwrap();
        let b = t.point_on_edge(0, rat(3, 4)).unwrap();
        let emb = embed_path(&t, &a, &b);
        assert_eq!(emb.total, rat(1, 2));
        assert_eq!(emb.proj(0).x, int(0));
        assert_eq!(emb.proj(0).h, rat(1, 4));
        assert_eq!(emb.proj(1).x, rat(1, 2));
        assert_eq!(emb.proj(1).h, rat(1, 4));
    }

    #[test]
    fn envelope_eval_examples() {
        // One plus-arm with w = 2, apex at x = 1, h = 0.
        let l = plus(2, int(1), int(0));
        assert_eq!(
            envelope_eval(&[l.clone()], &DualValue::exact(int(3))).unwrap().value,
            int(4)
        );
        assert_eq!(
            envelope_eval(&[l.clone()], &DualValue::exact(int(0))).unwrap().value,
            int(0)
        );
        assert!(envelope_eval::<Rat>(&[], &DualValue::exact(int(0))).is_none());

        // Two plus-arms crossing at x = 5: the steeper one wins at 5 + eps.
        let f = plus(1, int(0), int(0)); // x
        let g = plus(2, int(5), int(5)); // 2x - 5, apex value 5 at x=5
        assert_eq!(intersection(&f, &g), Some(int(5)));
        let at = envelope_eval(&[f, g], &DualValue::just_above(int(5))).unwrap();
        assert_eq!(at.value, int(5));
        assert_eq!(at.drift, int(2)); // steeper slope carries the drift
    }

    #[test]
    fn inverse_query_examples() {
        // Minus arm w = 2, apex x = 1, h = 0: solve 2(1 - x) = 1 -> 1/2.
        let l = minus(2, int(1), int(0));
        let x = inverse_query(&[l], &DualValue::exact(int(1)), Side::Minus).unwrap();
        assert_eq!(x.value, rat(1, 2));

        // Two minus arms with solutions 1/2 and 3/4: max rule picks 3/4.
        let l1 = minus(2, int(1), int(0));
        let l2 = minus(4, int(1), int(0)); // 4(1-x)=1 -> x = 3/4
        let x = inverse_query(&[l1, l2], &DualValue::exact(int(1)), Side::Minus).unwrap();
        assert_eq!(x.value, rat(3, 4));

        // xi equal to the apex value returns the apex.
        let l3 = minus(3, int(2), int(6));
        let x = inverse_query(&[l3], &DualValue::exact(int(6)), Side::Minus).unwrap();
        assert_eq!(x.value, int(2));

        // xi below every apex errors.
        let l4 = minus(3, int(2), int(6));
        assert!(inverse_query(&[l4], &DualValue::exact(int(1)), Side::Minus).is_err());
    }

    #[test]
    fn intersection_examples() {
        // f(x) = 2x, g(x) = x + 3 cross at 3.
        let f = plus(2, int(0), int(0));
        let g = plus(1, int(-3), int(0));
        assert_eq!(intersection(&f, &g), Some(int(3)));
        let h = plus(2, int(1), int(5));
        assert_eq!(intersection(&f, &h), None); // parallel
    }

    #[test]
    fn build_envelope_single_line() {
        let l = plus(2, int(1), int(3));
        let env = build_envelope(&[l], &int(1), &int(4));
        assert_eq!(env.segments.len(), 1);
        assert_eq!(env.eval(&int(2)), int(5));
    }

    #[test]
    fn build_envelope_two_crossing_lines() {
        let f = plus(1, int(0), int(0));
        let g = plus(2, int(0), int(-2)); // 2x - 2, crosses x at 2
        let env = build_envelope(&[f, g], &int(0), &int(5));
        assert_eq!(env.segments.len(), 2);
        assert_eq!(env.segments[1].x0, int(2));
        assert!(env.is_convex());
    }

    #[test]
    fn build_envelope_records_jumps() {
        // Arm activating above the running envelope creates a jump.
        let low = plus(1, int(0), int(0));
        let spike = plus(1, int(1), int(5));
        let env = build_envelope(&[low, spike], &int(0), &int(3));
        assert!(!env.is_continuous());
        assert_eq!(env.eval(&rat(999, 1000)), rat(999, 1000));
        assert_eq!(env.eval(&int(1)), int(5));
    }

    #[test]
    fn build_envelope_matches_pointwise_eval() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let k = rng.gen_range(1..8);
            let mut lines = Vec::new();
            for v in 0..k {
                let w = rng.gen_range(1..6);
                let ax = rat(rng.gen_range(-8..16), rng.gen_range(1..4));
                let av = rat(rng.gen_range(0..20), rng.gen_range(1..4));
                let mut l = plus(w, ax, av);
                l.vertex = v;
                lines.push(l);
            }
            let lo = int(0);
            let hi = int(10);
            let env = build_envelope(&lines, &lo, &hi);
            for _ in 0..60 {
                let x = rat(rng.gen_range(0..100), 10);
                let direct = envelope_eval(&lines, &DualValue::exact(x.clone()))
                    .unwrap()
                    .value;
                assert_eq!(env.eval(&x), direct, "mismatch at {x}");
            }
            // Segments tile [lo, hi].
            assert_eq!(env.segments.first().unwrap().x0, lo);
            assert_eq!(env.segments.last().unwrap().x1, hi);
            for w in env.segments.windows(2) {
                assert_eq!(w[0].x1, w[1].x0);
            }
        }
    }

    #[test]
    fn build_envelope_minus_side() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(43);
        for _ in 0..30 {
            let k = rng.gen_range(1..8);
            let mut lines = Vec::new();
            for v in 0..k {
                let w = rng.gen_range(1..6);
                let ax = rat(rng.gen_range(-4..20), rng.gen_range(1..4));
                let av = rat(rng.gen_range(0..20), rng.gen_range(1..4));
                let mut l = minus(w, ax, av);
                l.vertex = v;
                lines.push(l);
            }
            let env = build_envelope(&lines, &int(0), &int(10));
            for _ in 0..60 {
                let x = rat(rng.gen_range(0..100), 10);
                let direct = envelope_eval(&lines, &DualValue::exact(x.clone()))
                    .unwrap()
                    .value;
                assert_eq!(env.eval(&x), direct, "mismatch at {x}");
            }
        }
    }
}
