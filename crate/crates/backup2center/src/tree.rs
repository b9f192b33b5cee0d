//! Tree model: weighted trees, points on edges, distances, eccentricities
//! and proximity partitions.
//!
//! Trees are immutable after construction. Vertex ids are dense `0..n-1`
//! and edge endpoints are stored with the lower id first, so offsets are
//! always measured from the lower-id endpoint.

use std::cmp::Ordering;

use serde_json::Value;

use crate::error::{ParseError, TreeError};
use crate::scalar::{format_rat, parse_rat, Rat, Scalar};

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge<S> {
    pub u: VertexId,
    pub v: VertexId,
    pub len: S,
}

/// A location on the tree: either exactly at a vertex, or strictly inside
/// an edge at a positive offset from the lower-id endpoint.
///
/// Offsets equal to `0` or to the full edge length canonicalize to the
/// `Vertex` form, so point equality is decidable by structural equality.
#[derive(Debug, Clone, PartialEq)]
pub enum PointRef<S> {
    Vertex(VertexId),
    Interior { edge: EdgeId, offset: S },
}

impl<S: Scalar> PointRef<S> {
    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> PointRef<T> {
        match self {
            PointRef::Vertex(v) => PointRef::Vertex(*v),
            PointRef::Interior { edge, offset } => PointRef::Interior {
                edge: *edge,
                offset: f(offset),
            },
        }
    }
}

/// Proximity partition of the vertex set w.r.t. two points. Ties go to the
/// first point's side.
#[derive(Debug, Clone)]
pub struct Partition {
    pub in_v1: Vec<bool>,
}

impl Partition {
    pub fn v1(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.in_v1
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(v, _)| v)
    }

    pub fn v2(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.in_v1
            .iter()
            .enumerate()
            .filter(|(_, b)| !**b)
            .map(|(v, _)| v)
    }
}

/// Immutable tree with nonnegative vertex weights and edge lengths.
///
/// After [`WeightedTree::normalize`] all lengths are positive and every
/// vertex with weight zero is either gone or flagged as non-demand.
#[derive(Debug, Clone)]
pub struct WeightedTree<S> {
    weights: Vec<S>,
    edges: Vec<Edge<S>>,
    adj: Vec<Vec<(VertexId, EdgeId)>>,
    demand: Vec<bool>,
}

impl<S: Scalar> WeightedTree<S> {
    /// Builds and validates a tree from weights and edges.
    pub fn new(weights: Vec<S>, edges: Vec<(VertexId, VertexId, S)>) -> Result<Self, TreeError> {
        let n = weights.len();
        if n == 0 {
            return Err(TreeError::Structure("tree has no vertices".to_string()));
        }
        if edges.len() != n - 1 {
            return Err(TreeError::Structure(format!(
                "expected {} edges, got {}",
                n - 1,
                edges.len()
            )));
        }
        for w in &weights {
            if w.total_cmp(&S::zero()) == Ordering::Less {
                return Err(TreeError::Structure("negative vertex weight".to_string()));
            }
        }
        let mut stored = Vec::with_capacity(edges.len());
        let mut adj = vec![Vec::new(); n];
        let mut dsu: Vec<usize> = (0..n).collect();
        for (u, v, len) in edges {
            if u >= n || v >= n || u == v {
                return Err(TreeError::Structure(format!("bad edge ({u}, {v})")));
            }
            if len.total_cmp(&S::zero()) == Ordering::Less {
                return Err(TreeError::Structure("negative edge length".to_string()));
            }
            let (ru, rv) = (dsu_find(&mut dsu, u), dsu_find(&mut dsu, v));
            if ru == rv {
                return Err(TreeError::Structure(format!(
                    "edge ({u}, {v}) closes a cycle"
                )));
            }
            dsu[ru] = rv;
            let eid = stored.len();
            let (lo, hi) = if u < v { (u, v) } else { (v, u) };
            stored.push(Edge { u: lo, v: hi, len });
            adj[lo].push((hi, eid));
            adj[hi].push((lo, eid));
        }
        let demand = weights
            .iter()
            .map(|w| w.total_cmp(&S::zero()) == Ordering::Greater)
            .collect();
        Ok(Self {
            weights,
            edges: stored,
            adj,
            demand,
        })
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn weight(&self, v: VertexId) -> &S {
        &self.weights[v]
    }

    pub fn edge(&self, e: EdgeId) -> &Edge<S> {
        &self.edges[e]
    }

    pub fn edges(&self) -> &[Edge<S>] {
        &self.edges
    }

    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v].len()
    }

    /// True if `v` carries demand (positive weight).
    pub fn is_demand(&self, v: VertexId) -> bool {
        self.demand[v]
    }

    pub fn demand_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.n()).filter(|&v| self.demand[v])
    }

    pub fn has_demand(&self) -> bool {
        self.demand.iter().any(|&d| d)
    }

    /// Maps the tree into another scalar type (e.g. `Rat` → `f64`).
    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> WeightedTree<T> {
        WeightedTree {
            weights: self.weights.iter().map(&f).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge {
                    u: e.u,
                    v: e.v,
                    len: f(&e.len),
                })
                .collect(),
            adj: self.adj.clone(),
            demand: self.demand.clone(),
        }
    }

    /// Point anchored at a vertex.
    pub fn vertex_point(&self, v: VertexId) -> PointRef<S> {
        debug_assert!(v < self.n());
        PointRef::Vertex(v)
    }

    /// Point on edge `e` at `offset` from the lower-id endpoint, canonicalized.
    pub fn point_on_edge(&self, e: EdgeId, offset: S) -> Result<PointRef<S>, TreeError> {
        if e >= self.edges.len() {
            return Err(TreeError::PointOffTree { edge: e });
        }
        let edge = &self.edges[e];
        if offset.total_cmp(&S::zero()) == Ordering::Less
            || offset.total_cmp(&edge.len) == Ordering::Greater
        {
            return Err(TreeError::OffsetOutOfRange { edge: e });
        }
        if offset.is_zero() {
            Ok(PointRef::Vertex(edge.u))
        } else if offset == edge.len {
            Ok(PointRef::Vertex(edge.v))
        } else {
            Ok(PointRef::Interior { edge: e, offset })
        }
    }

    /// The vertex a point coincides with, if any.
    pub fn point_vertex(&self, p: &PointRef<S>) -> Option<VertexId> {
        match p {
            PointRef::Vertex(v) => Some(*v),
            PointRef::Interior { .. } => None,
        }
    }

    /// Reports a point as `(u, v, offset-from-u)` on some incident edge.
    /// Returns `None` only for the single-vertex tree, which has no edges.
    pub fn point_edge_form(&self, p: &PointRef<S>) -> Option<(VertexId, VertexId, S)> {
        match p {
            PointRef::Interior { edge, offset } => {
                let e = &self.edges[*edge];
                Some((e.u, e.v, offset.clone()))
            }
            PointRef::Vertex(v) => {
                let (_, eid) = self.adj[*v].iter().min_by_key(|(_, eid)| *eid)?;
                let e = &self.edges[*eid];
                if e.u == *v {
                    Some((e.u, e.v, S::zero()))
                } else {
                    Some((e.u, e.v, e.len.clone()))
                }
            }
        }
    }

    /// Distances from a point to every vertex, one tree traversal.
    pub fn distances_from_point(&self, p: &PointRef<S>) -> Vec<S> {
        let mut dist: Vec<Option<S>> = vec![None; self.n()];
        let mut stack: Vec<VertexId> = Vec::with_capacity(self.n());
        match p {
            PointRef::Vertex(v) => {
                dist[*v] = Some(S::zero());
                stack.push(*v);
            }
            PointRef::Interior { edge, offset } => {
                let e = &self.edges[*edge];
                dist[e.u] = Some(offset.clone());
                dist[e.v] = Some(e.len.clone() - offset.clone());
                stack.push(e.u);
                stack.push(e.v);
            }
        }
        while let Some(v) = stack.pop() {
            let dv = dist[v].clone().unwrap();
            for &(w, eid) in &self.adj[v] {
                if dist[w].is_none() {
                    dist[w] = Some(dv.clone() + self.edges[eid].len.clone());
                    stack.push(w);
                }
            }
        }
        dist.into_iter().map(|d| d.unwrap()).collect()
    }

    /// Distance between two points (sum of edge lengths on the unique path).
    pub fn distance(&self, a: &PointRef<S>, b: &PointRef<S>) -> S {
        if let (
            PointRef::Interior { edge: ea, offset: oa },
            PointRef::Interior { edge: eb, offset: ob },
        ) = (a, b)
        {
            if ea == eb {
                return if oa.total_cmp(ob) == Ordering::Greater {
                    oa.clone() - ob.clone()
                } else {
                    ob.clone() - oa.clone()
                };
            }
        }
        let dist = self.distances_from_point(a);
        self.point_distance_from_table(&dist, b)
    }

    /// Distance to `b` given a table of vertex distances from some source
    /// point that is known not to lie in the interior of `b`'s edge.
    pub fn point_distance_from_table(&self, dist: &[S], b: &PointRef<S>) -> S {
        match b {
            PointRef::Vertex(v) => dist[*v].clone(),
            PointRef::Interior { edge, offset } => {
                let e = &self.edges[*edge];
                let via_u = dist[e.u].clone() + offset.clone();
                let via_v = dist[e.v].clone() + (e.len.clone() - offset.clone());
                via_u.min_val(via_v)
            }
        }
    }

    /// Maximum weighted distance from a demand set to the point, with a
    /// witness vertex attaining it.
    pub fn eccentricity(
        &self,
        a: &PointRef<S>,
        demand: &[VertexId],
    ) -> Result<(S, VertexId), TreeError> {
        if demand.is_empty() {
            return Err(TreeError::EmptyDemand);
        }
        let dist = self.distances_from_point(a);
        let mut best: Option<(S, VertexId)> = None;
        for &v in demand {
            let cost = self.weights[v].clone() * dist[v].clone();
            if best
                .as_ref()
                .map_or(true, |(b, _)| cost.total_cmp(b) == Ordering::Greater)
            {
                best = Some((cost, v));
            }
        }
        Ok(best.unwrap())
    }

    /// Eccentricity over all demand vertices; `None` when the tree carries
    /// no demand at all (the "no demand" value, ordered below everything).
    pub fn ecc_all(&self, a: &PointRef<S>) -> Option<(S, VertexId)> {
        let dist = self.distances_from_point(a);
        self.ecc_from_table(&dist, |v| self.demand[v])
    }

    /// Eccentricity over the demand vertices selected by `keep`, from a
    /// precomputed distance table.
    pub fn ecc_from_table(
        &self,
        dist: &[S],
        keep: impl Fn(VertexId) -> bool,
    ) -> Option<(S, VertexId)> {
        let mut best: Option<(S, VertexId)> = None;
        for v in 0..self.n() {
            if !self.demand[v] || !keep(v) {
                continue;
            }
            let cost = self.weights[v].clone() * dist[v].clone();
            if best
                .as_ref()
                .map_or(true, |(b, _)| cost.total_cmp(b) == Ordering::Greater)
            {
                best = Some((cost, v));
            }
        }
        best
    }

    /// Proximity partition w.r.t. `(a1, a2)`: `v` lands in `V1` iff
    /// `d(v, a1) <= d(v, a2)`. For `a1 == a2` this yields `(V, ∅)`.
    pub fn partition(&self, a1: &PointRef<S>, a2: &PointRef<S>) -> Partition {
        let d1 = self.distances_from_point(a1);
        let d2 = self.distances_from_point(a2);
        let in_v1 = (0..self.n())
            .map(|v| d1[v].total_cmp(&d2[v]) != Ordering::Greater)
            .collect();
        Partition { in_v1 }
    }
}

fn dsu_find(dsu: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while dsu[r] != r {
        r = dsu[r];
    }
    let mut c = x;
    while dsu[c] != c {
        let next = dsu[c];
        dsu[c] = r;
        c = next;
    }
    r
}

// ---------------------------------------------------------------------------
// Parsing and serialization
// ---------------------------------------------------------------------------

impl WeightedTree<Rat> {
    /// Parses either the line-oriented text format or the JSON format,
    /// detected from the first non-blank character.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        if text.trim_start().starts_with('{') {
            Self::parse_json(text)
        } else {
            Self::parse_text(text)
        }
    }

    /// Text format (`#` starts a comment):
    ///
    /// ```text
    /// n
    /// <id> <weight>     (n lines; weight is decimal or p/q)
    /// <u> <v> <length>  (n-1 lines)
    /// ```
    pub fn parse_text(text: &str) -> Result<Self, ParseError> {
        let mut lines = text.lines().enumerate().filter_map(|(i, raw)| {
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                None
            } else {
                Some((i + 1, body.to_string()))
            }
        });

        let (first_no, first) = lines.next().ok_or(ParseError::MalformedLine {
            line: 1,
            text: "<empty document>".to_string(),
        })?;
        let n: usize = first.parse().map_err(|_| ParseError::MalformedLine {
            line: first_no,
            text: first.clone(),
        })?;
        if n == 0 {
            return Err(ParseError::MalformedLine {
                line: first_no,
                text: first,
            });
        }

        let mut weights: Vec<Option<Rat>> = vec![None; n];
        let mut weight_lines = vec![0usize; n];
        for _ in 0..n {
            let (no, body) = lines.next().ok_or(ParseError::MalformedLine {
                line: first_no,
                text: "unexpected end of vertex list".to_string(),
            })?;
            let mut it = body.split_whitespace();
            let (id_tok, w_tok) = match (it.next(), it.next(), it.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => {
                    return Err(ParseError::MalformedLine {
                        line: no,
                        text: body,
                    })
                }
            };
            let id: usize = id_tok.parse().map_err(|_| ParseError::MalformedLine {
                line: no,
                text: body.clone(),
            })?;
            if id >= n {
                return Err(ParseError::VertexIdOutOfRange { line: no, id, n });
            }
            if weights[id].is_some() {
                return Err(ParseError::DuplicateVertex { line: no, id });
            }
            let w = parse_rat(w_tok).map_err(|_| ParseError::MalformedLine {
                line: no,
                text: body.clone(),
            })?;
            if w < <Rat as num_traits::Zero>::zero() {
                return Err(ParseError::NegativeWeight {
                    line: no,
                    vertex: id,
                });
            }
            weights[id] = Some(w);
            weight_lines[id] = no;
        }

        let mut edges = Vec::with_capacity(n.saturating_sub(1));
        let mut seen = std::collections::HashSet::new();
        let mut dsu: Vec<usize> = (0..n).collect();
        for (no, body) in lines {
            let mut it = body.split_whitespace();
            let (u_tok, v_tok, l_tok) = match (it.next(), it.next(), it.next(), it.next()) {
                (Some(a), Some(b), Some(c), None) => (a, b, c),
                _ => {
                    return Err(ParseError::MalformedLine {
                        line: no,
                        text: body,
                    })
                }
            };
            let u: usize = u_tok.parse().map_err(|_| ParseError::MalformedLine {
                line: no,
                text: body.clone(),
            })?;
            let v: usize = v_tok.parse().map_err(|_| ParseError::MalformedLine {
                line: no,
                text: body.clone(),
            })?;
            if u >= n {
                return Err(ParseError::VertexIdOutOfRange { line: no, id: u, n });
            }
            if v >= n {
                return Err(ParseError::VertexIdOutOfRange { line: no, id: v, n });
            }
            if u == v {
                return Err(ParseError::CycleDetected { line: no, u, v });
            }
            let len = parse_rat(l_tok).map_err(|_| ParseError::MalformedLine {
                line: no,
                text: body.clone(),
            })?;
            if len < <Rat as num_traits::Zero>::zero() {
                return Err(ParseError::NegativeLength { line: no, u, v });
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(ParseError::DuplicateEdge {
                    line: no,
                    u: key.0,
                    v: key.1,
                });
            }
            let (ru, rv) = (dsu_find(&mut dsu, u), dsu_find(&mut dsu, v));
            if ru == rv {
                return Err(ParseError::CycleDetected { line: no, u, v });
            }
            dsu[ru] = rv;
            edges.push((u, v, len));
        }

        if edges.len() < n - 1 {
            return Err(ParseError::Disconnected {
                expected: n - 1,
                found: edges.len(),
            });
        }

        let weights: Vec<Rat> = weights.into_iter().map(|w| w.unwrap()).collect();
        WeightedTree::new(weights, edges).map_err(|e| ParseError::Invalid(e.to_string()))
    }

    /// JSON format: `{"vertices":[{"id":0,"w":1}],"edges":[{"u":0,"v":1,"len":2}]}`.
    /// Weights and lengths may be numbers or `"p/q"` strings.
    pub fn parse_json(text: &str) -> Result<Self, ParseError> {
        let doc: Value =
            serde_json::from_str(text).map_err(|e| ParseError::BadJson(e.to_string()))?;
        let verts = doc
            .get("vertices")
            .and_then(Value::as_array)
            .ok_or_else(|| ParseError::BadJson("missing `vertices` array".to_string()))?;
        let n = verts.len();
        if n == 0 {
            return Err(ParseError::BadJson("empty vertex list".to_string()));
        }
        let mut weights: Vec<Option<Rat>> = vec![None; n];
        for item in verts {
            let id = item
                .get("id")
                .and_then(Value::as_u64)
                .ok_or_else(|| ParseError::BadJson("vertex without valid `id`".to_string()))?
                as usize;
            if id >= n {
                return Err(ParseError::VertexIdOutOfRange { line: 0, id, n });
            }
            if weights[id].is_some() {
                return Err(ParseError::DuplicateVertex { line: 0, id });
            }
            let w = json_rat(item.get("w"))
                .map_err(|m| ParseError::BadJson(format!("vertex {id}: {m}")))?;
            if w < <Rat as num_traits::Zero>::zero() {
                return Err(ParseError::NegativeWeight {
                    line: 0,
                    vertex: id,
                });
            }
            weights[id] = Some(w);
        }
        let edges_json = doc
            .get("edges")
            .and_then(Value::as_array)
            .ok_or_else(|| ParseError::BadJson("missing `edges` array".to_string()))?;
        let mut edges = Vec::with_capacity(edges_json.len());
        let mut seen = std::collections::HashSet::new();
        let mut dsu: Vec<usize> = (0..n).collect();
        for item in edges_json {
            let u = item
                .get("u")
                .and_then(Value::as_u64)
                .ok_or_else(|| ParseError::BadJson("edge without valid `u`".to_string()))?
                as usize;
            let v = item
                .get("v")
                .and_then(Value::as_u64)
                .ok_or_else(|| ParseError::BadJson("edge without valid `v`".to_string()))?
                as usize;
            if u >= n {
                return Err(ParseError::VertexIdOutOfRange { line: 0, id: u, n });
            }
            if v >= n {
                return Err(ParseError::VertexIdOutOfRange { line: 0, id: v, n });
            }
            if u == v {
                return Err(ParseError::CycleDetected { line: 0, u, v });
            }
            let len = json_rat(item.get("len"))
                .map_err(|m| ParseError::BadJson(format!("edge ({u},{v}): {m}")))?;
            if len < <Rat as num_traits::Zero>::zero() {
                return Err(ParseError::NegativeLength { line: 0, u, v });
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(ParseError::DuplicateEdge {
                    line: 0,
                    u: key.0,
                    v: key.1,
                });
            }
            let (ru, rv) = (dsu_find(&mut dsu, u), dsu_find(&mut dsu, v));
            if ru == rv {
                return Err(ParseError::CycleDetected { line: 0, u, v });
            }
            dsu[ru] = rv;
            edges.push((u, v, len));
        }
        if edges.len() < n - 1 {
            return Err(ParseError::Disconnected {
                expected: n - 1,
                found: edges.len(),
            });
        }
        WeightedTree::new(weights.into_iter().map(|w| w.unwrap()).collect(), edges)
            .map_err(|e| ParseError::Invalid(e.to_string()))
    }

    /// Canonical text form: vertices ascending, edges sorted by endpoints,
    /// rationals reduced.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{}\n", self.n()));
        for v in 0..self.n() {
            out.push_str(&format!("{} {}\n", v, format_rat(&self.weights[v])));
        }
        let mut order: Vec<usize> = (0..self.edges.len()).collect();
        order.sort_by_key(|&e| (self.edges[e].u, self.edges[e].v));
        for e in order {
            let edge = &self.edges[e];
            out.push_str(&format!(
                "{} {} {}\n",
                edge.u,
                edge.v,
                format_rat(&edge.len)
            ));
        }
        out
    }
}

fn json_rat(v: Option<&Value>) -> Result<Rat, String> {
    match v {
        Some(Value::String(s)) => parse_rat(s),
        Some(Value::Number(num)) => {
            if let Some(i) = num.as_i64() {
                Ok(<Rat as Scalar>::from_i64(i))
            } else if let Some(f) = num.as_f64() {
                Rat::from_float(f).ok_or_else(|| format!("non-finite number {f}"))
            } else {
                Err(format!("unsupported number {num}"))
            }
        }
        _ => Err("missing numeric field".to_string()),
    }
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

/// One original-edge segment of a normalized edge's chain, listed from the
/// normalized lower-id endpoint towards the higher-id endpoint.
#[derive(Debug, Clone)]
struct Segment<S> {
    orig_edge: EdgeId,
    /// Traversal runs from the original edge's lower endpoint to the higher.
    forward: bool,
    len: S,
}

/// Converts points on the normalized tree back to the original tree.
#[derive(Debug, Clone)]
pub struct BackMap<S> {
    /// Representative original vertex for each normalized vertex.
    vertex_rep: Vec<VertexId>,
    /// Original-edge chain for each normalized edge.
    chains: Vec<Vec<Segment<S>>>,
}

impl<S: Scalar> BackMap<S> {
    /// Maps a point on the normalized tree to the corresponding point on
    /// the original tree.
    pub fn map_point(
        &self,
        original: &WeightedTree<S>,
        p: &PointRef<S>,
    ) -> Result<PointRef<S>, TreeError> {
        match p {
            PointRef::Vertex(v) => Ok(original.vertex_point(self.vertex_rep[*v])),
            PointRef::Interior { edge, offset } => {
                let chain = &self.chains[*edge];
                let mut remaining = offset.clone();
                for seg in chain {
                    if remaining.total_cmp(&seg.len) != Ordering::Greater {
                        let orig_off = if seg.forward {
                            remaining
                        } else {
                            seg.len.clone() - remaining
                        };
                        return original.point_on_edge(seg.orig_edge, orig_off);
                    }
                    remaining = remaining - seg.len.clone();
                }
                // Rounding in float mode can leave a hair past the last
                // segment; clamp to its far end.
                let seg = chain.last().expect("nonempty chain");
                let orig_off = if seg.forward {
                    seg.len.clone()
                } else {
                    S::zero()
                };
                original.point_on_edge(seg.orig_edge, orig_off)
            }
        }
    }
}

impl<S: Scalar> WeightedTree<S> {
    /// Normalizes the instance to positive weights and lengths:
    ///
    /// * zero-length edges are contracted into a single vertex carrying the
    ///   larger weight;
    /// * zero-weight degree-2 vertices are spliced out, merging their two
    ///   incident edges;
    /// * remaining zero-weight vertices (degree != 2) stay as non-demand
    ///   structure points.
    ///
    /// The returned [`BackMap`] converts points on the normalized tree to
    /// points on `self`.
    pub fn normalize(&self) -> (WeightedTree<S>, BackMap<S>) {
        let n = self.n();

        // Contract zero-length edges with union-find.
        let mut dsu: Vec<usize> = (0..n).collect();
        for e in &self.edges {
            if e.len.is_zero() {
                let (ru, rv) = (dsu_find(&mut dsu, e.u), dsu_find(&mut dsu, e.v));
                if ru != rv {
                    let keep = ru.min(rv);
                    let other = ru.max(rv);
                    dsu[other] = keep;
                }
            }
        }
        let group: Vec<usize> = (0..n).map(|v| dsu_find(&mut dsu, v)).collect();
        let mut reps: Vec<usize> = group.clone();
        reps.sort_unstable();
        reps.dedup();
        let mut mid_of = vec![usize::MAX; n];
        for (mid, &rep) in reps.iter().enumerate() {
            mid_of[rep] = mid;
        }
        let m = reps.len();
        let mut mid_weight: Vec<S> = vec![S::zero(); m];
        let mut mid_rep: Vec<usize> = vec![usize::MAX; m];
        for v in 0..n {
            let mid = mid_of[group[v]];
            if mid_rep[mid] == usize::MAX {
                mid_rep[mid] = v;
            }
            if self.weights[v].total_cmp(&mid_weight[mid]) == Ordering::Greater {
                mid_weight[mid] = self.weights[v].clone();
                mid_rep[mid] = v;
            }
        }
        // Edges surviving contraction, with their original edge id.
        let mut mid_edges: Vec<(usize, usize, S, EdgeId)> = Vec::new();
        for (eid, e) in self.edges.iter().enumerate() {
            if e.len.is_zero() {
                continue;
            }
            let (a, b) = (mid_of[group[e.u]], mid_of[group[e.v]]);
            debug_assert_ne!(a, b);
            mid_edges.push((a, b, e.len.clone(), eid));
        }

        // Splice zero-weight degree-2 vertices out of the contracted tree.
        // Work on an adjacency of (neighbor, mid-edge index); chains collapse
        // into single merged edges whose segment lists concatenate.
        let mut madj: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (i, &(a, b, _, _)) in mid_edges.iter().enumerate() {
            madj[a].push(i);
            madj[b].push(i);
        }
        let splice: Vec<bool> = (0..m)
            .map(|v| mid_weight[v].is_zero() && madj[v].len() == 2)
            .collect();

        // Final vertex ids for kept vertices.
        let kept: Vec<usize> = (0..m).filter(|&v| !splice[v]).collect();
        let mut fid_of = vec![usize::MAX; m];
        for (fid, &v) in kept.iter().enumerate() {
            fid_of[v] = fid;
        }

        // Walk maximal chains between kept endpoints.
        let mut used = vec![false; mid_edges.len()];
        let mut final_edges: Vec<(usize, usize, S)> = Vec::new();
        let mut final_chains: Vec<Vec<Segment<S>>> = Vec::new();
        for &start in &kept {
            for &first in &madj[start] {
                if used[first] {
                    continue;
                }
                // Only walk chains from kept endpoints so each merged edge
                // is discovered exactly once (from one of its two ends).
                let mut segs: Vec<Segment<S>> = Vec::new();
                let mut total = S::zero();
                let mut prev = start;
                let mut cur_edge = first;
                loop {
                    used[cur_edge] = true;
                    let (a, b, ref len, orig) = mid_edges[cur_edge];
                    let next = if a == prev { b } else { a };
                    let orig_e = self.edge(orig);
                    // Direction of travel vs the ORIGINAL edge orientation:
                    // we travel prev -> next; original edge runs rep(u)->rep(v).
                    let travel_forward = mid_of[group[orig_e.u]] == prev;
                    segs.push(Segment {
                        orig_edge: orig,
                        forward: travel_forward,
                        len: len.clone(),
                    });
                    total = total + len.clone();
                    if !splice[next] {
                        let (fu, fv) = (fid_of[start], fid_of[next]);
                        // Chains are recorded from the lower final id.
                        if fu <= fv {
                            final_edges.push((fu, fv, total.clone()));
                            final_chains.push(segs);
                        } else {
                            final_edges.push((fv, fu, total.clone()));
                            segs.reverse();
                            for s in &mut segs {
                                s.forward = !s.forward;
                            }
                            final_chains.push(segs);
                        }
                        break;
                    }
                    let candidates = &madj[next];
                    let follow = if candidates[0] == cur_edge {
                        candidates[1]
                    } else {
                        candidates[0]
                    };
                    prev = next;
                    cur_edge = follow;
                }
            }
        }

        // Dedupe chains discovered from both ends (kept-to-kept chains are
        // walked once thanks to `used`, so nothing to do) and assemble.
        let weights: Vec<S> = kept.iter().map(|&v| mid_weight[v].clone()).collect();
        let normalized = WeightedTree::new(weights, final_edges.clone())
            .expect("normalization preserves tree structure");

        // WeightedTree::new re-sorts endpoints low-high but keeps list order,
        // so chain i still describes edge i. If endpoints were swapped by
        // construction above we already oriented the chain from the lower id.
        let vertex_rep: Vec<VertexId> = kept.iter().map(|&mid| mid_rep[mid]).collect();

        (
            normalized,
            BackMap {
                vertex_rep,
                chains: final_chains,
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rat;

    fn rat(n: i64, d: i64) -> Rat {
        <Rat as Scalar>::from_ratio(n, d)
    }

    fn int(n: i64) -> Rat {
        <Rat as Scalar>::from_i64(n)
    }

    fn unit_path(n: usize) -> WeightedTree<Rat> {
        let weights = vec![int(1); n];
        let edges = (0..n - 1).map(|i| (i, i + 1, int(1))).collect();
        WeightedTree::new(weights, edges).unwrap()
    }

    #[test]
    fn parses_two_vertex_document() {
        let doc = "2\n0 1\n1 3\n0 1 2\n";
        let t = WeightedTree::parse_text(doc).unwrap();
        assert_eq!(t.n(), 2);
        assert_eq!(*t.weight(0), int(1));
        assert_eq!(*t.weight(1), int(3));
        assert_eq!(t.edge(0).len, int(2));
    }

    #[test]
    fn parses_comments_and_fractions() {
        let doc = "# demo\n3\n0 1/2\n1 2.5 # half\n2 1\n0 1 1/3\n1 2 2\n";
        let t = WeightedTree::parse_text(doc).unwrap();
        assert_eq!(*t.weight(0), rat(1, 2));
        assert_eq!(*t.weight(1), rat(5, 2));
        assert_eq!(t.edge(0).len, rat(1, 3));
    }

    #[test]
    fn duplicate_edge_is_reported() {
        let doc = "3\n0 1\n1 1\n2 1\n0 1 1\n0 1 1\n";
        match WeightedTree::parse_text(doc) {
            Err(ParseError::DuplicateEdge { line, u, v }) => {
                assert_eq!((line, u, v), (6, 0, 1));
            }
            other => panic!("expected duplicate edge, got {other:?}"),
        }
    }

    #[test]
    fn missing_edges_mean_disconnected() {
        let doc = "3\n0 1\n1 1\n2 1\n0 1 1\n";
        match WeightedTree::parse_text(doc) {
            Err(ParseError::Disconnected { expected, found }) => {
                assert_eq!((expected, found), (2, 1));
            }
            other => panic!("expected disconnected, got {other:?}"),
        }
    }

    #[test]
    fn cycle_is_reported() {
        let doc = "3\n0 1\n1 1\n2 1\n0 1 1\n1 2 1\n0 2 1\n";
        assert!(matches!(
            WeightedTree::parse_text(doc),
            Err(ParseError::CycleDetected { .. })
        ));
    }

    #[test]
    fn negative_weight_is_reported() {
        let doc = "2\n0 -1\n1 1\n0 1 1\n";
        assert!(matches!(
            WeightedTree::parse_text(doc),
            Err(ParseError::NegativeWeight { vertex: 0, .. })
        ));
    }

    #[test]
    fn json_roundtrip_matches_text() {
        let json = r#"{"vertices":[{"id":0,"w":1},{"id":1,"w":"3/2"}],
                       "edges":[{"u":0,"v":1,"len":2}]}"#;
        let t = WeightedTree::parse_json(json).unwrap();
        assert_eq!(*t.weight(1), rat(3, 2));
        let text = t.to_text();
        let t2 = WeightedTree::parse_text(&text).unwrap();
        assert_eq!(t2.to_text(), text);
    }

    #[test]
    fn distance_examples() {
        let t = WeightedTree::new(vec![int(1), int(3)], vec![(0, 1, int(2))]).unwrap();
        let a = t.vertex_point(0);
        let b = t.vertex_point(1);
        assert_eq!(t.distance(&a, &b), int(2));
        assert_eq!(t.distance(&a, &a), int(0));

        let p = unit_path(3);
        let m1 = p.point_on_edge(0, rat(1, 2)).unwrap();
        let m2 = p.point_on_edge(1, rat(1, 2)).unwrap();
        assert_eq!(p.distance(&m1, &m2), int(1));
    }

    #[test]
    fn point_canonicalization() {
        let p = unit_path(3);
        assert_eq!(p.point_on_edge(1, int(0)).unwrap(), PointRef::Vertex(1));
        assert_eq!(p.point_on_edge(1, int(1)).unwrap(), PointRef::Vertex(2));
        assert_eq!(
            p.point_on_edge(0, int(1)).unwrap(),
            p.point_on_edge(1, int(0)).unwrap()
        );
        assert!(p.point_on_edge(0, int(2)).is_err());
    }

    #[test]
    fn eccentricity_examples() {
        let t = WeightedTree::new(vec![int(1), int(3)], vec![(0, 1, int(2))]).unwrap();
        let mid = t.point_on_edge(0, int(1)).unwrap();
        let (ecc, witness) = t.eccentricity(&mid, &[0, 1]).unwrap();
        assert_eq!(ecc, int(3));
        assert_eq!(witness, 1);

        let (zero, _) = t.eccentricity(&t.vertex_point(0), &[0]).unwrap();
        assert_eq!(zero, int(0));
        assert!(matches!(
            t.eccentricity(&mid, &[]),
            Err(TreeError::EmptyDemand)
        ));

        let star = WeightedTree::new(
            vec![int(1); 4],
            vec![(0, 1, int(1)), (0, 2, int(1)), (0, 3, int(1))],
        )
        .unwrap();
        let (hub_ecc, _) = star.eccentricity(&star.vertex_point(0), &[0, 1, 2, 3]).unwrap();
        assert_eq!(hub_ecc, int(1));
    }

    #[test]
    fn partition_examples() {
        let p = unit_path(3);
        let part = p.partition(&p.vertex_point(0), &p.vertex_point(2));
        assert_eq!(part.in_v1, vec![true, true, false]); // middle vertex ties into V1

        let same = p.partition(&p.vertex_point(0), &p.vertex_point(0));
        assert!(same.in_v1.iter().all(|&b| b));

        let a2 = p.point_on_edge(0, rat(1, 2)).unwrap();
        let part2 = p.partition(&p.vertex_point(0), &a2);
        assert_eq!(part2.in_v1, vec![true, false, false]);
    }

    #[test]
    fn partition_swap_moves_only_ties() {
        let p = unit_path(4);
        let a = p.vertex_point(0);
        let b = p.vertex_point(3);
        let fwd = p.partition(&a, &b);
        let rev = p.partition(&b, &a);
        for v in 0..4 {
            let d1 = p.distance(&a, &p.vertex_point(v));
            let d2 = p.distance(&b, &p.vertex_point(v));
            if d1 != d2 {
                assert_eq!(fwd.in_v1[v], !rev.in_v1[v]);
            } else {
                assert!(fwd.in_v1[v] && rev.in_v1[v]);
            }
        }
    }

    #[test]
    fn metric_properties_on_random_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let t = WeightedTree::new(
            vec![int(1), int(2), int(3), int(1), int(2)],
            vec![
                (0, 1, int(2)),
                (1, 2, int(3)),
                (1, 3, int(1)),
                (3, 4, int(4)),
            ],
        )
        .unwrap();
        let rand_point = |rng: &mut rand_chacha::ChaCha8Rng| {
            let e = rng.gen_range(0..t.num_edges());
            let den = rng.gen_range(1..6i64);
            let num = rng.gen_range(0..=den * t.edge(e).len.to_f64() as i64);
            t.point_on_edge(e, rat(num, den)).unwrap()
        };
        for _ in 0..200 {
            let a = rand_point(&mut rng);
            let b = rand_point(&mut rng);
            let dab = t.distance(&a, &b);
            assert_eq!(dab, t.distance(&b, &a));
            assert_eq!(dab == int(0), a == b);
        }
        // Path additivity: b on path(a, c) implies d(a,c) = d(a,b) + d(b,c).
        let a = t.vertex_point(0);
        let b = t.vertex_point(1);
        let c = t.vertex_point(4);
        assert_eq!(
            t.distance(&a, &c),
            t.distance(&a, &b) + t.distance(&b, &c)
        );
    }

    #[test]
    fn normalize_splices_degree2_zero_weight() {
        let t = WeightedTree::new(
            vec![int(1), int(0), int(2)],
            vec![(0, 1, int(1)), (1, 2, int(2))],
        )
        .unwrap();
        let (norm, back) = t.normalize();
        assert_eq!(norm.n(), 2);
        assert_eq!(norm.edge(0).len, int(3));
        // A point 1/2 into the merged edge sits on the first original edge.
        let p = norm.point_on_edge(0, rat(1, 2)).unwrap();
        let orig = back.map_point(&t, &p).unwrap();
        assert_eq!(
            orig,
            t.point_on_edge(0, rat(1, 2)).unwrap()
        );
        // A point 2 into the merged edge sits 1 into the second original edge.
        let q = norm.point_on_edge(0, int(2)).unwrap();
        let orig_q = back.map_point(&t, &q).unwrap();
        assert_eq!(orig_q, t.point_on_edge(1, int(1)).unwrap());
    }

    #[test]
    fn normalize_contracts_zero_length_edges() {
        let t = WeightedTree::new(vec![int(2), int(5)], vec![(0, 1, int(0))]).unwrap();
        let (norm, back) = t.normalize();
        assert_eq!(norm.n(), 1);
        assert_eq!(*norm.weight(0), int(5));
        let orig = back.map_point(&t, &norm.vertex_point(0)).unwrap();
        assert_eq!(orig, t.vertex_point(1)); // representative carries weight 5
    }

    #[test]
    fn normalize_identity_on_positive_trees() {
        let t = WeightedTree::new(
            vec![int(1), int(2), int(3)],
            vec![(0, 1, int(1)), (1, 2, int(2))],
        )
        .unwrap();
        let (norm, back) = t.normalize();
        assert_eq!(norm.n(), 3);
        assert_eq!(norm.to_text(), t.to_text());
        let p = norm.point_on_edge(1, rat(1, 2)).unwrap();
        assert_eq!(back.map_point(&t, &p).unwrap(), p);
    }

    #[test]
    fn normalize_keeps_zero_weight_branch_vertices() {
        // Zero-weight hub of degree 3 cannot be spliced; it stays non-demand.
        let t = WeightedTree::new(
            vec![int(0), int(1), int(1), int(1)],
            vec![(0, 1, int(1)), (0, 2, int(1)), (0, 3, int(1))],
        )
        .unwrap();
        let (norm, _) = t.normalize();
        assert_eq!(norm.n(), 4);
        assert!(!norm.is_demand(0));
        assert_eq!(norm.demand_vertices().count(), 3);
    }
}
