//! Independent correctness references for the backup 2-center solver.
//!
//! Three routes of increasing blindness:
//!
//! * [`bu2center_tree_baseline`] builds explicit upper envelopes and scans
//!   their bending points with a coupled two-pointer (`O(n log n)`).
//! * [`bending_point_oracle`] evaluates the coupled objective at every
//!   pairwise arm intersection and apex, with direct loops and no envelope
//!   construction (`O(n^2)` candidates; the gold standard in tests).
//! * [`grid_oracle`] brute-forces a 2-D grid over all point pairs on all
//!   edge pairs, restricted to nothing (tests the path restriction itself).

use std::cmp::Ordering;

use crate::envelope::{build_envelope, embed, intersection, CostLine, DualValue,
                      PathEmbedding, PiecewiseEnvelope, Side};
use crate::error::SolverError;
use crate::scalar::Scalar;
use crate::solver::{psi, resolve_shortcuts, FailureProbs, ShortcutOutcome};
use crate::tree::{PointRef, VertexId, WeightedTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    Baseline,
    BendingExact,
    Grid2D,
}

/// A reference answer: the pair, its value recomputed from the tree, and a
/// work counter (candidate or grid-pair count).
#[derive(Debug, Clone)]
pub struct OracleReport<S> {
    pub value: S,
    pub pair: (PointRef<S>, PointRef<S>),
    pub method: OracleMethod,
    pub work: u64,
}

fn report<S: Scalar>(
    t: &WeightedTree<S>,
    pair: (PointRef<S>, PointRef<S>),
    method: OracleMethod,
    work: u64,
    p: &FailureProbs<S>,
) -> OracleReport<S> {
    let value = psi(t, &pair.0, &pair.1, p);
    OracleReport {
        value,
        pair,
        method,
        work,
    }
}

// ---------------------------------------------------------------------------
// Envelope-scan baseline
// ---------------------------------------------------------------------------

/// Leftmost x with `env(x) = xi` on a nondecreasing continuous envelope.
fn env_inverse_leftmost<S: Scalar>(env: &PiecewiseEnvelope<S>, xi: &S) -> Option<S> {
    for seg in &env.segments {
        let v0 = seg.value_at(&seg.x0);
        let v1 = seg.value_at(&seg.x1);
        if xi.total_cmp(&v0) != Ordering::Less && xi.total_cmp(&v1) != Ordering::Greater {
            if seg.slope.is_zero() {
                return Some(seg.x0.clone());
            }
            return Some((xi.clone() - seg.intercept.clone()) / seg.slope.clone());
        }
    }
    None
}

/// Rightmost x with `env(x) = xi` on a nonincreasing continuous envelope,
/// scanning right-to-left starting at `*cursor` (a two-pointer: callers
/// query nondecreasing `xi`, so the cursor only ever moves left).
fn env_inverse_rightmost_monotone<S: Scalar>(
    env: &PiecewiseEnvelope<S>,
    xi: &S,
    cursor: &mut usize,
) -> Option<S> {
    loop {
        let seg = &env.segments[*cursor];
        let v0 = seg.value_at(&seg.x0);
        let v1 = seg.value_at(&seg.x1);
        // Nonincreasing envelope: v0 >= v1 within a segment.
        if xi.total_cmp(&v1) != Ordering::Greater {
            // xi below (or at) the right end: solution is right of here;
            // but since queries grow this segment's right end is the spot.
            if xi.total_cmp(&v1) == Ordering::Equal {
                // Flat run: extend right while the value persists.
                return Some(seg.x1.clone());
            }
            // xi < envelope minimum on this suffix; out of range.
            return None;
        }
        if xi.total_cmp(&v0) != Ordering::Greater {
            // v1 < xi <= v0: the crossing lives in this segment.
            if seg.slope.is_zero() {
                return Some(seg.x1.clone());
            }
            return Some((xi.clone() - seg.intercept.clone()) / seg.slope.clone());
        }
        if *cursor == 0 {
            return None;
        }
        *cursor -= 1;
    }
}

/// The envelope-scan reference: explicit `E_L` and `E_R`, candidates at
/// every bending point of either envelope on the left half plus the
/// coupling preimages of every right-half bending point, evaluated with a
/// coupled pointer that only moves left.
pub fn bu2center_tree_baseline<S: Scalar>(
    t: &WeightedTree<S>,
    p: &FailureProbs<S>,
) -> Result<OracleReport<S>, SolverError> {
    let (norm, back) = t.normalize();
    let anchors = match resolve_shortcuts(&norm, p)? {
        ShortcutOutcome::Pair(b1, b2) => {
            let ob1 = back.map_point(t, &b1)?;
            let ob2 = back.map_point(t, &b2)?;
            return Ok(report(t, (ob1, ob2), OracleMethod::Baseline, 0, p));
        }
        ShortcutOutcome::Search(a) => a,
    };
    let emb = embed(&norm, &anchors.pair.c1, &anchors.center.point, &anchors.pair.c2)?;
    let demand: Vec<VertexId> = norm.demand_vertices().collect();
    let plus: Vec<CostLine<S>> = emb.lines(&norm, &demand, Side::Plus);
    let minus: Vec<CostLine<S>> = emb.lines(&norm, &demand, Side::Minus);
    let zero = S::zero();
    let e_l = build_envelope(&plus, &zero, &emb.total);
    let e_r = build_envelope(&minus, &zero, &emb.total);
    let mut work = (plus.len() + minus.len()) as u64;

    let xc = emb.xc.clone();
    let in_left = |x: &S| x.total_cmp(&zero) != Ordering::Less && x.total_cmp(&xc) != Ordering::Greater;
    let in_right = |x: &S| x.total_cmp(&xc) != Ordering::Less && x.total_cmp(&emb.total) != Ordering::Greater;

    // Left-half candidates.
    let mut xs: Vec<S> = vec![zero.clone(), xc.clone()];
    for bp in e_l.breakpoints().into_iter().chain(e_r.breakpoints()) {
        if in_left(&bp) {
            xs.push(bp);
        }
    }
    // Right-half bends pulled back through the coupling E_L(x) = E_R(y).
    for bp in e_l
        .breakpoints()
        .into_iter()
        .chain(e_r.breakpoints())
        .chain([xc.clone(), emb.total.clone()])
    {
        if in_right(&bp) {
            let xi = e_r.eval(&bp);
            if let Some(x) = env_inverse_leftmost(&e_l, &xi) {
                if in_left(&x) {
                    xs.push(x);
                }
            }
        }
    }
    xs.sort_by(|a, b| a.total_cmp(b));
    xs.dedup();
    work += xs.len() as u64;

    let (co_max, co_e1, co_e2) = p.coefficients();
    let mut cursor = e_r.segments.len() - 1;
    let mut last_partner: Option<S> = None;
    let mut best: Option<(S, S, S, bool)> = None; // value, x, partner, flipped
    for x in xs {
        let xi = e_l.eval(&x);
        let Some(partner) = env_inverse_rightmost_monotone(&e_r, &xi, &mut cursor) else {
            continue;
        };
        let partner = partner.max_val(xc.clone()).min_val(emb.total.clone());
        // The coupled pointer never moves right as the scan advances.
        if let Some(prev) = &last_partner {
            debug_assert!(
                partner.total_cmp(prev) != Ordering::Greater,
                "coupled pointer moved right"
            );
        }
        last_partner = Some(partner.clone());
        let er_x = e_r.eval(&x);
        let el_y = e_l.eval(&partner);
        let v_a = co_max.clone() * xi.clone() + co_e1.clone() * er_x.clone()
            + co_e2.clone() * el_y.clone();
        let candidates: [(S, bool); 2] = [
            (v_a, false),
            (
                co_max.clone() * xi.clone() + co_e1.clone() * el_y + co_e2.clone() * er_x,
                true,
            ),
        ];
        for (v, flipped) in candidates {
            if p.is_symmetric() && flipped {
                continue;
            }
            let better = best
                .as_ref()
                .map_or(true, |(bv, _, _, _)| v.total_cmp(bv) == Ordering::Less);
            if better {
                best = Some((v, x.clone(), partner.clone(), flipped));
            }
        }
    }
    let (_, x, partner, flipped) =
        best.ok_or_else(|| SolverError::Invariant("baseline scan found no candidates".into()))?;
    let left_pt = emb.point_at(&norm, &x);
    let right_pt = emb.point_at(&norm, &partner);
    let (b1, b2) = if flipped {
        (right_pt, left_pt)
    } else {
        (left_pt, right_pt)
    };

    // The coincident center is always a candidate.
    let cc = anchors.center.point.clone();
    let v_pair = psi(&norm, &b1, &b2, p);
    let v_cc = psi(&norm, &cc, &cc, p);
    let (b1, b2) = if v_cc.total_cmp(&v_pair) == Ordering::Less {
        (cc.clone(), cc)
    } else {
        (b1, b2)
    };

    let ob1 = back.map_point(t, &b1)?;
    let ob2 = back.map_point(t, &b2)?;
    Ok(report(t, (ob1, ob2), OracleMethod::Baseline, work, p))
}

// ---------------------------------------------------------------------------
// Exhaustive bending-point oracle
// ---------------------------------------------------------------------------

/// Direct-loop context for exhaustive coupled evaluations: no envelope
/// structures, no pruning, just the embedding and the full demand set.
struct BendingCtx<'a, S> {
    norm: &'a WeightedTree<S>,
    emb: &'a PathEmbedding<S>,
    demand: Vec<VertexId>,
}

impl<S: Scalar> BendingCtx<'_, S> {
    fn arm(&self, v: VertexId, side: Side) -> CostLine<S> {
        self.emb.line(self.norm, v, side)
    }

    fn e_l(&self, x: &S) -> S {
        let q = DualValue::exact(x.clone());
        let mut best = S::zero();
        for &v in &self.demand {
            let val = self.arm(v, Side::Plus).eval_dual(&q).value;
            if val.total_cmp(&best) == Ordering::Greater {
                best = val;
            }
        }
        best
    }

    fn e_r(&self, x: &S) -> S {
        let q = DualValue::exact(x.clone());
        let mut best = S::zero();
        for &v in &self.demand {
            let val = self.arm(v, Side::Minus).eval_dual(&q).value;
            if val.total_cmp(&best) == Ordering::Greater {
                best = val;
            }
        }
        best
    }

    /// `max{x : f_v^-(x) = xi}` over the full demand set.
    fn coupled_right(&self, xi: &S) -> Option<S> {
        let q = DualValue::exact(xi.clone());
        let mut best: Option<S> = None;
        for &v in &self.demand {
            if let Some(x) = self.arm(v, Side::Minus).solve(&q) {
                if best
                    .as_ref()
                    .map_or(true, |b| x.value.total_cmp(b) == Ordering::Greater)
                {
                    best = Some(x.value);
                }
            }
        }
        best
    }

    /// `min{x : f_v^+(x) = xi}` over the full demand set.
    fn coupled_left(&self, xi: &S) -> Option<S> {
        let q = DualValue::exact(xi.clone());
        let mut best: Option<S> = None;
        for &v in &self.demand {
            if let Some(x) = self.arm(v, Side::Plus).solve(&q) {
                if best
                    .as_ref()
                    .map_or(true, |b| x.value.total_cmp(b) == Ordering::Less)
                {
                    best = Some(x.value);
                }
            }
        }
        best
    }
}

/// Exhaustive coupled-scan oracle over every pairwise intersection and
/// apex of the cost arms. Quadratic candidate count; the reference all
/// equivalence suites compare against.
pub fn bending_point_oracle<S: Scalar>(
    t: &WeightedTree<S>,
    p: &FailureProbs<S>,
) -> Result<OracleReport<S>, SolverError> {
    Ok(bending_point_oracle_batch(t, std::slice::from_ref(p))?
        .pop()
        .expect("one probe, one report"))
}

/// Batched variant sharing anchors, the embedding and the candidate set
/// across several probability pairs on the same tree.
pub fn bending_point_oracle_batch<S: Scalar>(
    t: &WeightedTree<S>,
    probs: &[FailureProbs<S>],
) -> Result<Vec<OracleReport<S>>, SolverError> {
    let (norm, back) = t.normalize();
    let mut reports: Vec<Option<OracleReport<S>>> = vec![None; probs.len()];

    // Shortcut evaluation is per-probs; non-shortcut work is shared.
    let mut searchers: Vec<usize> = Vec::new();
    let mut anchors = None;
    for (i, p) in probs.iter().enumerate() {
        match resolve_shortcuts(&norm, p)? {
            ShortcutOutcome::Pair(b1, b2) => {
                let ob1 = back.map_point(t, &b1)?;
                let ob2 = back.map_point(t, &b2)?;
                reports[i] = Some(report(t, (ob1, ob2), OracleMethod::BendingExact, 0, p));
            }
            ShortcutOutcome::Search(a) => {
                anchors = Some(a);
                searchers.push(i);
            }
        }
    }
    if searchers.is_empty() {
        return Ok(reports.into_iter().map(|r| r.unwrap()).collect());
    }
    let anchors = anchors.expect("anchors computed for searching probs");
    let emb = embed(&norm, &anchors.pair.c1, &anchors.center.point, &anchors.pair.c2)?;
    let demand: Vec<VertexId> = norm.demand_vertices().collect();
    let ctx = BendingCtx {
        norm: &norm,
        emb: &emb,
        demand: demand.clone(),
    };

    let zero = S::zero();
    let xc = emb.xc.clone();
    let total = emb.total.clone();
    let in_left =
        |x: &S| x.total_cmp(&zero) != Ordering::Less && x.total_cmp(&xc) != Ordering::Greater;
    let in_right =
        |x: &S| x.total_cmp(&xc) != Ordering::Less && x.total_cmp(&total) != Ordering::Greater;

    // Candidate coordinates: every apex and pairwise intersection of both
    // arm families, on the left half directly and on the right half pulled
    // back through the coupling.
    let mut xs: Vec<S> = vec![zero.clone(), xc.clone()];
    let mut right_bends: Vec<S> = vec![xc.clone(), total.clone()];
    for side in [Side::Plus, Side::Minus] {
        for (i, &a) in demand.iter().enumerate() {
            let la = ctx.arm(a, side);
            if in_left(&la.apex_x) {
                xs.push(la.apex_x.clone());
            }
            if in_right(&la.apex_x) {
                right_bends.push(la.apex_x.clone());
            }
            for &b in &demand[i + 1..] {
                if let Some(x) = intersection(&la, &ctx.arm(b, side)) {
                    if in_left(&x) {
                        xs.push(x.clone());
                    }
                    if in_right(&x) {
                        right_bends.push(x);
                    }
                }
            }
        }
    }
    for y in right_bends {
        let xi = ctx.e_r(&y);
        if let Some(x) = ctx.coupled_left(&xi) {
            if in_left(&x) {
                xs.push(x);
            }
        }
    }
    xs.sort_by(|a, b| a.total_cmp(b));
    xs.dedup();

    // Evaluate the three envelope values once per candidate; each probs
    // entry only recombines them linearly.
    let mut evals: Vec<(S, S, S, S)> = Vec::with_capacity(xs.len()); // x, E_L(x), E_R(x), E_L(x*)
    let mut partners: Vec<S> = Vec::with_capacity(xs.len());
    for x in &xs {
        let xi = ctx.e_l(x);
        let Some(partner) = ctx.coupled_right(&xi) else {
            continue;
        };
        let partner = partner.max_val(xc.clone()).min_val(total.clone());
        let er_x = ctx.e_r(x);
        let el_y = ctx.e_l(&partner);
        evals.push((x.clone(), xi, er_x, el_y));
        partners.push(partner);
    }
    let work = (evals.len() * demand.len()) as u64;

    for &pi in &searchers {
        let p = &probs[pi];
        let (co_max, co_e1, co_e2) = p.coefficients();
        let mut best: Option<(S, usize, bool)> = None;
        for (idx, (_, xi, er_x, el_y)) in evals.iter().enumerate() {
            let forms: [(S, bool); 2] = [
                (
                    co_max.clone() * xi.clone()
                        + co_e1.clone() * er_x.clone()
                        + co_e2.clone() * el_y.clone(),
                    false,
                ),
                (
                    co_max.clone() * xi.clone()
                        + co_e1.clone() * el_y.clone()
                        + co_e2.clone() * er_x.clone(),
                    true,
                ),
            ];
            for (v, flipped) in forms {
                if p.is_symmetric() && flipped {
                    continue;
                }
                let better = best
                    .as_ref()
                    .map_or(true, |(bv, _, _)| v.total_cmp(bv) == Ordering::Less);
                if better {
                    best = Some((v, idx, flipped));
                }
            }
        }
        let (_, idx, flipped) = best
            .ok_or_else(|| SolverError::Invariant("bending scan found no candidates".into()))?;
        let left_pt = emb.point_at(&norm, &evals[idx].0);
        let right_pt = emb.point_at(&norm, &partners[idx]);
        let (b1, b2) = if flipped {
            (right_pt, left_pt)
        } else {
            (left_pt, right_pt)
        };
        // Net against the coincident center.
        let cc = anchors.center.point.clone();
        let v_pair = psi(&norm, &b1, &b2, p);
        let v_cc = psi(&norm, &cc, &cc, p);
        let (b1, b2) = if v_cc.total_cmp(&v_pair) == Ordering::Less {
            (cc.clone(), cc)
        } else {
            (b1, b2)
        };
        let ob1 = back.map_point(t, &b1)?;
        let ob2 = back.map_point(t, &b2)?;
        reports[pi] = Some(report(t, (ob1, ob2), OracleMethod::BendingExact, work, p));
    }
    Ok(reports.into_iter().map(|r| r.unwrap()).collect())
}

// ---------------------------------------------------------------------------
// 2-D grid oracle
// ---------------------------------------------------------------------------

/// Brute-force minimum of the objective over a 2-D grid of point pairs on
/// all edge pairs. No path restriction at all, so it bounds what any
/// path-restricted method can miss (up to the grid's Lipschitz slack).
/// Tiny trees only.
pub fn grid_oracle<S: Scalar>(
    t: &WeightedTree<S>,
    p: &FailureProbs<S>,
    resolution: &S,
) -> Result<OracleReport<S>, SolverError> {
    if resolution.total_cmp(&S::zero()) != Ordering::Greater {
        return Err(SolverError::Invariant("resolution must be positive".into()));
    }
    // Grid points: all vertices plus interior samples every `resolution`.
    let mut points: Vec<PointRef<S>> = (0..t.n()).map(|v| t.vertex_point(v)).collect();
    for e in 0..t.num_edges() {
        let len = t.edge(e).len.clone();
        let mut off = resolution.clone();
        while off.total_cmp(&len) == Ordering::Less {
            points.push(t.point_on_edge(e, off.clone()).expect("offset within edge"));
            off = off + resolution.clone();
        }
    }
    let tables: Vec<Vec<S>> = points.iter().map(|pt| t.distances_from_point(pt)).collect();
    let weights: Vec<S> = (0..t.n()).map(|v| t.weight(v).clone()).collect();
    let demand: Vec<VertexId> = t.demand_vertices().collect();
    let (co_max, co_e1, co_e2) = p.coefficients();

    let eval = |di: &[S], dj: &[S]| -> S {
        let mut side1: Option<S> = None;
        let mut side2: Option<S> = None;
        let mut ecc1 = S::zero();
        let mut ecc2 = S::zero();
        for &v in &demand {
            let c1 = weights[v].clone() * di[v].clone();
            let c2 = weights[v].clone() * dj[v].clone();
            if c1.total_cmp(&ecc1) == Ordering::Greater {
                ecc1 = c1.clone();
            }
            if c2.total_cmp(&ecc2) == Ordering::Greater {
                ecc2 = c2.clone();
            }
            if di[v].total_cmp(&dj[v]) != Ordering::Greater {
                if side1.as_ref().map_or(true, |s| c1.total_cmp(s) == Ordering::Greater) {
                    side1 = Some(c1);
                }
            } else if side2.as_ref().map_or(true, |s| c2.total_cmp(s) == Ordering::Greater) {
                side2 = Some(c2);
            }
        }
        let max_term = match (side1, side2) {
            (Some(a), Some(b)) => a.max_val(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => S::zero(),
        };
        co_max.clone() * max_term + co_e1.clone() * ecc1 + co_e2.clone() * ecc2
    };

    let symmetric = p.is_symmetric();
    let mut work = 0u64;
    let mut best: Option<(S, usize, usize)> = None;
    for i in 0..points.len() {
        let j_start = if symmetric { i } else { 0 };
        for j in j_start..points.len() {
            work += 1;
            let v = eval(&tables[i], &tables[j]);
            let better = best
                .as_ref()
                .map_or(true, |(bv, _, _)| v.total_cmp(bv) == Ordering::Less);
            if better {
                best = Some((v, i, j));
            }
        }
    }
    let (_, i, j) = best.ok_or_else(|| SolverError::Invariant("empty grid".into()))?;
    Ok(report(
        t,
        (points[i].clone(), points[j].clone()),
        OracleMethod::Grid2D,
        work,
        p,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rat;
    use crate::solver::backup_2center;

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

    fn probs(n: i64, d: i64) -> FailureProbs<Rat> {
        FailureProbs::symmetric(rat(n, d)).unwrap()
    }

    #[test]
    fn baseline_zero_rho_is_two_center_cost() {
        let t = unit_path(3);
        let r = bu2center_tree_baseline(&t, &probs(0, 1)).unwrap();
        assert_eq!(r.value, rat(1, 2));
    }

    #[test]
    fn bending_zero_rho_is_two_center_cost() {
        let t = unit_path(3);
        let r = bending_point_oracle(&t, &probs(0, 1)).unwrap();
        assert_eq!(r.value, rat(1, 2));
    }

    #[test]
    fn all_three_agree_on_small_random_trees() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for case in 0..30 {
            let n = rng.gen_range(2..16);
            let weights: Vec<Rat> = (0..n).map(|_| int(rng.gen_range(1..9))).collect();
            let edges: Vec<(usize, usize, Rat)> = (1..n)
                .map(|v| (rng.gen_range(0..v), v, int(rng.gen_range(1..6))))
                .collect();
            let t = WeightedTree::new(weights, edges).unwrap();
            for (num, den) in [(0i64, 1i64), (1, 10), (1, 2), (9, 10)] {
                let p = probs(num, den);
                let sol = backup_2center(&t, &p).unwrap();
                let base = bu2center_tree_baseline(&t, &p).unwrap();
                let bend = bending_point_oracle(&t, &p).unwrap();
                assert_eq!(sol.value, base.value, "case {case} rho {num}/{den}");
                assert_eq!(sol.value, bend.value, "case {case} rho {num}/{den}");
            }
        }
    }

    #[test]
    fn two_vertex_symmetric_identical_output() {
        let t = WeightedTree::new(vec![int(1), int(1)], vec![(0, 1, int(2))]).unwrap();
        let p = probs(1, 2);
        let sol = backup_2center(&t, &p).unwrap();
        let base = bu2center_tree_baseline(&t, &p).unwrap();
        assert_eq!(sol.value, base.value);
        assert_eq!((sol.b1, sol.b2), base.pair);
    }

    #[test]
    fn grid_oracle_degenerate_resolution() {
        // Resolution beyond the diameter samples only vertex anchors.
        let t = unit_path(3);
        let r = grid_oracle(&t, &probs(1, 2), &int(10)).unwrap();
        assert_eq!(r.work, 3 * 2); // ordered pairs i <= j of 3 points: 6
    }

    #[test]
    fn grid_oracle_respects_lipschitz_slack() {
        let t = unit_path(3);
        let p = probs(1, 2);
        let bend = bending_point_oracle(&t, &p).unwrap();
        let grid = grid_oracle(&t, &p, &rat(1, 64)).unwrap();
        // max weight 1: slack = 2 * 1 * (1/64).
        let slack = rat(2, 64);
        assert!(bend.value <= grid.value.clone() + slack);
        assert!(grid.value >= bend.value.clone()); // grid is a restriction
    }
}
