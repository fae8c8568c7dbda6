//! Generalized graphs and abstract Lyapunov graphs.
//!
//! A generalized graph is a loopless multigraph over two sorts of points:
//! vertices (degree 1 or 3 in everything this module handles) and ends
//! (gluing stubs, each incident to exactly one edge). Piece graphs are built
//! per Seifert piece from the link counts, glued along matching end labels
//! into one graph per manifold, tested for class-S membership, oriented into
//! a Lyapunov graph (acyclic, with every source and sink at a degree-1
//! vertex), and finally cut into one block per saddle.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graphs::MultiGraph;
use crate::ids::{KnotId, PieceId, TorusId};
use crate::link::PieceCounts;
use crate::manifold::{EdgeSlot, GraphManifold};
use crate::seifert::SeifertPiece;

/// Sort of a point in a generalized graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    /// An ordinary vertex; a degree-1 vertex is a leaf.
    Vertex,
    /// A gluing stub, consumed when piece graphs are fused.
    End,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Point {
    /// Unique stable name; drives deterministic choices and the DOT export.
    pub name: String,
    pub kind: PointKind,
    /// Piece the point projects to, for points that came from a piece graph.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub piece: Option<PieceId>,
    /// Closed-orbit label attached by a sigma assignment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knot: Option<KnotId>,
    /// Gluing label; present exactly on `End` points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_label: Option<EdgeSlot>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub a: usize,
    pub b: usize,
    /// Orientation: the endpoint the edge points at, once chosen.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head: Option<usize>,
    /// Decomposition-torus label on edges produced by gluing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jsj: Option<TorusId>,
}

/// A loopless multigraph over named points. Edges join two distinct points.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralizedGraph {
    pub points: Vec<Point>,
    pub edges: Vec<GraphEdge>,
}

impl GeneralizedGraph {
    pub fn add_vertex(&mut self, name: impl Into<String>) -> usize {
        self.points.push(Point {
            name: name.into(),
            kind: PointKind::Vertex,
            piece: None,
            knot: None,
            end_label: None,
        });
        self.points.len() - 1
    }

    pub fn add_end(&mut self, name: impl Into<String>, label: Option<EdgeSlot>) -> usize {
        self.points.push(Point {
            name: name.into(),
            kind: PointKind::End,
            piece: None,
            knot: None,
            end_label: label,
        });
        self.points.len() - 1
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> usize {
        assert_ne!(a, b, "edges join two distinct points");
        self.edges.push(GraphEdge { a, b, head: None, jsj: None });
        self.edges.len() - 1
    }

    pub fn orient_edge(&mut self, edge: usize, head: usize) {
        let e = &mut self.edges[edge];
        assert!(head == e.a || head == e.b, "head must be an endpoint of the edge");
        e.head = Some(head);
    }

    pub fn degree(&self, point: usize) -> usize {
        self.edges.iter().filter(|e| e.a == point || e.b == point).count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.points.len()];
        for e in &self.edges {
            deg[e.a] += 1;
            deg[e.b] += 1;
        }
        deg
    }

    pub fn incident(&self, point: usize) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.a == point || e.b == point)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn other_end(&self, edge: usize, point: usize) -> usize {
        let e = &self.edges[edge];
        if e.a == point {
            e.b
        } else {
            e.a
        }
    }

    pub fn point_named(&self, name: &str) -> Option<usize> {
        self.points.iter().position(|p| p.name == name)
    }

    pub(crate) fn multigraph(&self) -> MultiGraph {
        MultiGraph::new(self.points.len(), self.edges.iter().map(|e| (e.a, e.b)).collect())
    }
}

/// First Betti numbers per connected component, plus a connectivity flag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Betti {
    pub per_component: Vec<usize>,
    pub connected: bool,
}

impl Betti {
    /// The single value; meaningful for connected graphs.
    pub fn value(&self) -> usize {
        assert!(self.connected, "betti value of a disconnected graph");
        self.per_component.first().copied().unwrap_or(0)
    }
}

/// Independent cycle count: edges - points + 1, per component.
pub fn betti(g: &GeneralizedGraph) -> Betti {
    let comp = g.multigraph().components();
    let k = comp.iter().copied().max().map_or(0, |c| c + 1);
    let mut points = vec![0usize; k];
    let mut edges = vec![0usize; k];
    for &c in &comp {
        points[c] += 1;
    }
    for e in &g.edges {
        edges[comp[e.a]] += 1;
    }
    let per_component = points.iter().zip(&edges).map(|(p, e)| e + 1 - p).collect();
    Betti { per_component, connected: k <= 1 }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BuildError {
    #[error("piece {piece}: infeasible counts: {inequality}")]
    Infeasible { piece: PieceId, inequality: String },
    #[error("piece {piece}: expected {expected} end labels, got {got}")]
    EndLabelCount { piece: PieceId, expected: usize, got: usize },
}

/// A piece graph plus the metadata later stages need.
#[derive(Clone, Debug)]
pub struct PieceGraph {
    pub graph: GeneralizedGraph,
    /// The input counts with `y` filled in from the built shape.
    pub counts: PieceCounts,
    /// Trivalent vertices, in spine order.
    pub saddle_points: Vec<usize>,
    /// Degree-1 vertices, in attachment order.
    pub leaf_points: Vec<usize>,
    /// End points, in `end_labels` order. The first two end labels sit at
    /// opposite extremes of the spine, so a caller that lists a piece's cycle
    /// ports first routes the glued cycle through the whole spine.
    pub end_points: Vec<usize>,
}

/// Trivalent points adjacent to at least two degree-1 vertices (leaves, not
/// ends). Their flanking leaves must later map to singular fibers.
pub fn flanked_saddles(g: &GeneralizedGraph) -> Vec<usize> {
    let deg = g.degrees();
    let mut out = Vec::new();
    for p in 0..g.points.len() {
        if deg[p] != 3 {
            continue;
        }
        let leaf_neighbors = g
            .edges
            .iter()
            .filter(|e| e.a == p || e.b == p)
            .filter(|e| {
                let o = if e.a == p { e.b } else { e.a };
                deg[o] == 1 && g.points[o].kind == PointKind::Vertex
            })
            .count();
        if leaf_neighbors >= 2 {
            out.push(p);
        }
    }
    out
}

/// Build the canonical graph of one piece: a spine of `x` trivalent vertices
/// carrying `z` leaves and `b` labeled ends, with `g` independent cycles.
///
/// Shape: spine path v1..vx; for g >= 1 a long edge (v1, vx); each further
/// handle doubles one interior spine edge. Free attachment slots are filled
/// extremes-first, ends before leaves, so the first two end labels land on
/// opposite spine extremes and, for a closed piece, both extremes keep two
/// leaves each (the count y of doubly-flanked vertices is 2, 1, or 0 for
/// (g=0,b=0), (g=0,b=1), and every other shape, giving 2y <= m).
pub fn build_piece_graph(
    piece: &SeifertPiece,
    counts: PieceCounts,
    end_labels: &[EdgeSlot],
) -> Result<PieceGraph, BuildError> {
    let x = counts.x as usize;
    let z = counts.z as usize;
    let m = counts.m as usize;
    let g = piece.genus as usize;
    let b = piece.boundary_count as usize;
    let infeasible = |inequality: &str| BuildError::Infeasible {
        piece: piece.id.clone(),
        inequality: inequality.to_string(),
    };
    if end_labels.len() != b {
        return Err(BuildError::EndLabelCount {
            piece: piece.id.clone(),
            expected: b,
            got: end_labels.len(),
        });
    }
    if x < 1 {
        return Err(infeasible("x >= 1"));
    }
    if (z + b) as i64 != x as i64 - 2 * g as i64 + 2 {
        return Err(BuildError::Infeasible {
            piece: piece.id.clone(),
            inequality: format!("z+b != x-2g+2 ({z}+{b} != {x}-{}+2)", 2 * g),
        });
    }
    if b == 0 && x < 2 {
        return Err(infeasible("x >= 2 when b = 0"));
    }
    if g >= 1 && x < 2 {
        return Err(infeasible("x >= 2 when g >= 1"));
    }
    if b + z < 2 {
        return Err(infeasible("b+z >= 2"));
    }
    if m > z {
        return Err(infeasible("m <= z"));
    }
    if g == 0 && b == 0 && m < 4 {
        return Err(infeasible("m >= 4 when g = 0 and b = 0"));
    }
    if g == 0 && b == 1 && m < 2 {
        return Err(infeasible("m >= 2 when g = 0 and b = 1"));
    }

    let mut graph = GeneralizedGraph::default();
    let mut saddle_points = Vec::with_capacity(x);
    for i in 1..=x {
        let idx = graph.points.len();
        graph.points.push(Point {
            name: format!("{}.v{}", piece.id, i),
            kind: PointKind::Vertex,
            piece: Some(piece.id.clone()),
            knot: None,
            end_label: None,
        });
        saddle_points.push(idx);
    }
    for i in 1..x {
        graph.add_edge(saddle_points[i - 1], saddle_points[i]);
    }
    if g >= 1 {
        graph.add_edge(saddle_points[0], saddle_points[x - 1]);
        for h in 1..g {
            // Handle h doubles the interior spine edge (v_{2h}, v_{2h+1});
            // b+z >= 2 gives x >= 2g, so these stay strictly interior.
            debug_assert!(2 * h + 1 < x);
            graph.add_edge(saddle_points[2 * h - 1], saddle_points[2 * h]);
        }
    }

    // Remaining attachment slots, spine extremes first.
    let mut caps = vec![3usize; x];
    for e in &graph.edges {
        let pa = saddle_points.iter().position(|&s| s == e.a).expect("spine point");
        let pb = saddle_points.iter().position(|&s| s == e.b).expect("spine point");
        caps[pa] -= 1;
        caps[pb] -= 1;
    }
    let mut slot_order: Vec<usize> = Vec::new();
    if x >= 2 {
        if caps[0] > 0 {
            slot_order.push(0);
            caps[0] -= 1;
        }
        if caps[x - 1] > 0 {
            slot_order.push(x - 1);
            caps[x - 1] -= 1;
        }
    }
    for (v, &cap) in caps.iter().enumerate() {
        for _ in 0..cap {
            slot_order.push(v);
        }
    }
    assert_eq!(slot_order.len(), z + b, "free slots are pinned by z+b = x-2g+2");

    let mut end_points = Vec::with_capacity(b);
    for (j, label) in end_labels.iter().enumerate() {
        let v = saddle_points[slot_order[j]];
        let idx = graph.points.len();
        graph.points.push(Point {
            name: format!("{}.e{}", piece.id, j + 1),
            kind: PointKind::End,
            piece: Some(piece.id.clone()),
            knot: None,
            end_label: Some(label.clone()),
        });
        graph.add_edge(v, idx);
        end_points.push(idx);
    }
    let mut leaf_points = Vec::with_capacity(z);
    for j in 0..z {
        let v = saddle_points[slot_order[b + j]];
        let idx = graph.points.len();
        graph.points.push(Point {
            name: format!("{}.l{}", piece.id, j + 1),
            kind: PointKind::Vertex,
            piece: Some(piece.id.clone()),
            knot: None,
            end_label: None,
        });
        graph.add_edge(v, idx);
        leaf_points.push(idx);
    }

    let bt = betti(&graph);
    assert!(bt.connected, "piece graphs are connected by construction");
    assert_eq!(bt.value(), g, "piece graph cycle rank equals the genus");
    let y = flanked_saddles(&graph).len() as u32;
    // y = 2 forces (g, b) = (0, 0) and y = 1 forces (0, 1); the m floors
    // rejected above make the flanking bound automatic.
    assert!(
        2 * y as usize <= m,
        "piece {}: flanked vertices exceed the singular fibers",
        piece.id
    );
    Ok(PieceGraph {
        graph,
        counts: PieceCounts { y, ..counts },
        saddle_points,
        leaf_points,
        end_points,
    })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GluingError {
    #[error("piece graphs do not match the decomposition graph: {0}")]
    PieceMismatch(String),
    #[error("torus {torus}: {detail}")]
    LabelMismatch { torus: TorusId, detail: String },
    #[error("end {end} carries label {label}, which is not a decomposition torus")]
    UnknownLabel { end: String, label: String },
    #[error("the glued graph is disconnected; the decomposition graph must be connected")]
    Disconnected,
}

/// The projection from a glued graph back onto the decomposition graph:
/// fused edges map to tori, every point maps to its piece.
#[derive(Clone, Debug, Default)]
pub struct Projection {
    pub edge_to_torus: BTreeMap<usize, TorusId>,
    pub torus_to_edge: BTreeMap<TorusId, usize>,
    pub point_to_piece: BTreeMap<usize, PieceId>,
    pub piece_points: BTreeMap<PieceId, Vec<usize>>,
}

/// Fuse piece graphs along equal end labels: the two ends carrying a torus's
/// slots 0 and 1 are removed and their attachment edges melt into one edge
/// labeled by the torus. Piece graphs are given in decomposition order.
pub fn glue_graphs(
    piece_graphs: &[PieceGraph],
    w: &GraphManifold,
) -> Result<(GeneralizedGraph, Projection), GluingError> {
    if piece_graphs.len() != w.pieces.len() {
        return Err(GluingError::PieceMismatch(format!(
            "expected {} piece graphs, got {}",
            w.pieces.len(),
            piece_graphs.len()
        )));
    }
    for (i, pg) in piece_graphs.iter().enumerate() {
        let expected = &w.pieces[i].id;
        for p in &pg.graph.points {
            if p.piece.as_ref() != Some(expected) {
                return Err(GluingError::PieceMismatch(format!(
                    "graph {} contains point {} of piece {}, expected {}",
                    i,
                    p.name,
                    p.piece.as_ref().map(|q| q.as_str()).unwrap_or("-"),
                    expected
                )));
            }
        }
    }

    let mut glued = GeneralizedGraph::default();
    let mut projection = Projection::default();
    let mut names = BTreeSet::new();
    // (torus, slot) -> (inner point in the glued arena, end name).
    let mut pending: BTreeMap<(TorusId, u8), (usize, String)> = BTreeMap::new();
    for (gi, pg) in piece_graphs.iter().enumerate() {
        let piece_id = w.pieces[gi].id.clone();
        let mut map = vec![usize::MAX; pg.graph.points.len()];
        for (pi, p) in pg.graph.points.iter().enumerate() {
            if p.kind == PointKind::End {
                continue;
            }
            if !names.insert(p.name.clone()) {
                return Err(GluingError::PieceMismatch(format!(
                    "duplicate point name {}",
                    p.name
                )));
            }
            map[pi] = glued.points.len();
            glued.points.push(p.clone());
            projection.point_to_piece.insert(map[pi], piece_id.clone());
            projection.piece_points.entry(piece_id.clone()).or_default().push(map[pi]);
        }
        for e in &pg.graph.edges {
            let ka = pg.graph.points[e.a].kind;
            let kb = pg.graph.points[e.b].kind;
            match (ka, kb) {
                (PointKind::End, PointKind::End) => {
                    return Err(GluingError::PieceMismatch(format!(
                        "edge {}-{} joins two ends",
                        pg.graph.points[e.a].name, pg.graph.points[e.b].name
                    )));
                }
                (PointKind::End, _) | (_, PointKind::End) => {
                    let (end, inner) = if ka == PointKind::End { (e.a, e.b) } else { (e.b, e.a) };
                    let point = &pg.graph.points[end];
                    let Some(label) = point.end_label.clone() else {
                        return Err(GluingError::PieceMismatch(format!(
                            "end {} has no label",
                            point.name
                        )));
                    };
                    let key = (label.torus.clone(), label.slot);
                    if let Some((_, first)) = pending.get(&key) {
                        return Err(GluingError::LabelMismatch {
                            torus: label.torus.clone(),
                            detail: format!(
                                "slot {} is carried by both {} and {}",
                                label.slot, first, point.name
                            ),
                        });
                    }
                    pending.insert(key, (map[inner], point.name.clone()));
                }
                _ => {
                    glued.edges.push(GraphEdge {
                        a: map[e.a],
                        b: map[e.b],
                        head: e.head.map(|h| map[h]),
                        jsj: None,
                    });
                }
            }
        }
    }
    for edge in &w.edges {
        let lo = pending.remove(&(edge.id.clone(), 0));
        let hi = pending.remove(&(edge.id.clone(), 1));
        let (Some((a, _)), Some((b, _))) = (lo, hi) else {
            return Err(GluingError::LabelMismatch {
                torus: edge.id.clone(),
                detail: "an end for one of its slots is missing".to_string(),
            });
        };
        if a == b {
            return Err(GluingError::LabelMismatch {
                torus: edge.id.clone(),
                detail: "both ends attach to the same point; the fused edge would be a loop"
                    .to_string(),
            });
        }
        let idx = glued.edges.len();
        glued.edges.push(GraphEdge { a, b, head: None, jsj: Some(edge.id.clone()) });
        projection.edge_to_torus.insert(idx, edge.id.clone());
        projection.torus_to_edge.insert(edge.id.clone(), idx);
    }
    if let Some(((torus, slot), (_, end))) = pending.into_iter().next() {
        return Err(GluingError::UnknownLabel {
            end,
            label: format!("{torus}[{slot}]"),
        });
    }
    if !glued.multigraph().is_connected() {
        return Err(GluingError::Disconnected);
    }
    // The star of each piece must come back as a connected subgraph with one
    // fused edge per boundary torus.
    for piece in &w.pieces {
        let members = &projection.piece_points[&piece.id];
        let index: BTreeMap<usize, usize> =
            members.iter().enumerate().map(|(k, &p)| (p, k)).collect();
        let mut sub = Vec::new();
        let mut fused_slots = 0usize;
        for e in &glued.edges {
            let (ia, ib) = (index.get(&e.a), index.get(&e.b));
            if e.jsj.is_some() {
                fused_slots += usize::from(ia.is_some()) + usize::from(ib.is_some());
            } else if let (Some(&a), Some(&b)) = (ia, ib) {
                sub.push((a, b));
            }
        }
        assert!(
            MultiGraph::new(members.len(), sub).is_connected(),
            "piece subgraphs stay connected under gluing"
        );
        assert_eq!(
            fused_slots, piece.boundary_count as usize,
            "piece {} must touch one fused edge slot per boundary torus",
            piece.id
        );
    }
    Ok((glued, projection))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassSViolation {
    #[error("point {point} has degree {degree}; only 1 and 3 are allowed")]
    BadDegree { point: String, degree: usize },
    #[error("the graph is disconnected")]
    Disconnected,
    #[error("the edge at degree-1 point {point} is unoriented")]
    UnorientedLeafEdge { point: String },
    #[error("no degree-1 point is a source")]
    NoSourceLeaf,
    #[error("no degree-1 point is a sink")]
    NoSinkLeaf,
    #[error("removing {cut} leaves a component with no degree-1 point (the one containing {component_point})")]
    BareComponent { cut: String, component_point: String },
}

/// Class-S membership: all degrees 1 or 3, connected, leaf edges oriented
/// with both a source leaf and a sink leaf present, and no separating point
/// (any vertex or edge midpoint) with a leafless complementary component.
/// The witness is the first violation in a fixed scan order.
pub fn in_class_s(g: &GeneralizedGraph) -> Result<(), ClassSViolation> {
    let deg = g.degrees();
    for (p, &d) in deg.iter().enumerate() {
        if d != 1 && d != 3 {
            return Err(ClassSViolation::BadDegree { point: g.points[p].name.clone(), degree: d });
        }
    }
    let mg = g.multigraph();
    if !mg.is_connected() {
        return Err(ClassSViolation::Disconnected);
    }
    let mut has_source = false;
    let mut has_sink = false;
    for (p, &d) in deg.iter().enumerate() {
        if d != 1 {
            continue;
        }
        let e = &g.edges[g.incident(p)[0]];
        match e.head {
            None => {
                return Err(ClassSViolation::UnorientedLeafEdge {
                    point: g.points[p].name.clone(),
                })
            }
            Some(h) if h == p => has_sink = true,
            Some(_) => has_source = true,
        }
    }
    if !has_source {
        return Err(ClassSViolation::NoSourceLeaf);
    }
    if !has_sink {
        return Err(ClassSViolation::NoSinkLeaf);
    }
    let bare = |comp: &[usize], skip: Option<usize>| -> Option<(usize, usize)> {
        // First component, by smallest member, with no degree-1 point.
        let k = comp.iter().copied().filter(|&c| c != usize::MAX).max().map_or(0, |c| c + 1);
        let mut leafy = vec![false; k];
        let mut first = vec![usize::MAX; k];
        for (p, &c) in comp.iter().enumerate() {
            if c == usize::MAX || Some(p) == skip {
                continue;
            }
            if deg[p] == 1 {
                leafy[c] = true;
            }
            if first[c] == usize::MAX {
                first[c] = p;
            }
        }
        (0..k).find(|&c| !leafy[c] && first[c] != usize::MAX).map(|c| (c, first[c]))
    };
    for p in 0..g.points.len() {
        let comp = mg.components_with(None, Some(p));
        if let Some((_, q)) = bare(&comp, Some(p)) {
            return Err(ClassSViolation::BareComponent {
                cut: g.points[p].name.clone(),
                component_point: g.points[q].name.clone(),
            });
        }
    }
    for i in 0..g.edges.len() {
        let comp = mg.components_with(Some(i), None);
        if let Some((_, q)) = bare(&comp, None) {
            let e = &g.edges[i];
            return Err(ClassSViolation::BareComponent {
                cut: format!(
                    "the midpoint of edge {} ({}-{})",
                    i, g.points[e.a].name, g.points[e.b].name
                ),
                component_point: g.points[q].name.clone(),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrientError {
    #[error("graph is not in class S: {0}")]
    NotInClassS(ClassSViolation),
    #[error("orientation search exhausted its candidates; this cannot happen for class-S inputs")]
    AlgorithmFailure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VertexClass {
    Saddle,
    SourceLeaf,
    SinkLeaf,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LyapunovError {
    #[error("edge {index} is unoriented")]
    Unoriented { index: usize },
    #[error("point {point} has degree {degree}; only 1 and 3 are allowed")]
    BadDegree { point: String, degree: usize },
    #[error("point {point} has in-degree {ins} and out-degree {outs}; sources and sinks must have degree 1")]
    InteriorExtremum { point: String, ins: usize, outs: usize },
    #[error("oriented cycle through point {point}")]
    OrientedCycle { point: String },
}

/// A totally oriented generalized graph satisfying the Lyapunov conditions:
/// no oriented cycles, and every point with no incoming or no outgoing edge
/// has degree 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LyapunovGraph {
    pub graph: GeneralizedGraph,
}

impl LyapunovGraph {
    pub fn validate(&self) -> Result<(), LyapunovError> {
        let g = &self.graph;
        let n = g.points.len();
        let mut ins = vec![0usize; n];
        let mut outs = vec![0usize; n];
        let mut arcs = Vec::with_capacity(g.edges.len());
        for (i, e) in g.edges.iter().enumerate() {
            let Some(h) = e.head else {
                return Err(LyapunovError::Unoriented { index: i });
            };
            debug_assert!(h == e.a || h == e.b);
            let tail = if h == e.a { e.b } else { e.a };
            ins[h] += 1;
            outs[tail] += 1;
            arcs.push((tail, h));
        }
        for p in 0..n {
            let d = ins[p] + outs[p];
            if d != 1 && d != 3 {
                return Err(LyapunovError::BadDegree { point: g.points[p].name.clone(), degree: d });
            }
            if d == 3 && (ins[p] == 0 || outs[p] == 0) {
                return Err(LyapunovError::InteriorExtremum {
                    point: g.points[p].name.clone(),
                    ins: ins[p],
                    outs: outs[p],
                });
            }
        }
        // Topological elimination; leftovers lie on an oriented cycle.
        let mut indeg = ins.clone();
        let mut queue: Vec<usize> = (0..n).filter(|&p| indeg[p] == 0).collect();
        let mut seen = 0usize;
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(t, h) in &arcs {
            succ[t].push(h);
        }
        while let Some(p) = queue.pop() {
            seen += 1;
            for &h in &succ[p] {
                indeg[h] -= 1;
                if indeg[h] == 0 {
                    queue.push(h);
                }
            }
        }
        if seen != n {
            let witness = (0..n)
                .filter(|&p| indeg[p] > 0)
                .min_by(|&a, &b| g.points[a].name.cmp(&g.points[b].name))
                .expect("a leftover point exists");
            return Err(LyapunovError::OrientedCycle { point: g.points[witness].name.clone() });
        }
        Ok(())
    }

    pub fn class_of(&self, point: usize) -> VertexClass {
        let mut degree = 0usize;
        let mut incoming = 0usize;
        for e in &self.graph.edges {
            if e.a == point || e.b == point {
                degree += 1;
                if e.head == Some(point) {
                    incoming += 1;
                }
            }
        }
        if degree == 1 {
            if incoming == 1 {
                VertexClass::SinkLeaf
            } else {
                VertexClass::SourceLeaf
            }
        } else {
            VertexClass::Saddle
        }
    }
}

#[derive(Clone, Debug)]
struct WorkPoint {
    name: String,
    /// Original arena point this one stands for; a synthesized leaf stands
    /// for the deleted path vertex behind its cut edge.
    orig: usize,
}

#[derive(Clone, Debug)]
struct WorkEdge {
    a: usize,
    b: usize,
    /// Local orientation, when already fixed.
    head: Option<usize>,
    /// Original arena edge index.
    orig: usize,
}

#[derive(Clone, Debug, Default)]
struct Work {
    points: Vec<WorkPoint>,
    edges: Vec<WorkEdge>,
}

/// Extend the leaf orientations of a class-S graph to a total acyclic
/// orientation whose sources and sinks are all leaves.
///
/// The search mirrors the existence proof: pick a shortest path from a
/// source leaf to a sink leaf (lexicographic tie-break), orient it forward,
/// delete it, and recurse on the remaining components with their cut edges
/// re-leafed (first cut in path order becomes a source, the rest sinks; a
/// single free cut supplies whichever kind its component lacks). Path choices
/// are backtracked when a branch dies; the result is validated before it is
/// returned. Interior orientations present on the input are recomputed.
pub fn orient(g: &GeneralizedGraph) -> Result<LyapunovGraph, OrientError> {
    if let Err(v) = in_class_s(g) {
        return Err(OrientError::NotInClassS(v));
    }
    let deg = g.degrees();
    let root = Work {
        points: g
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| WorkPoint { name: p.name.clone(), orig: i })
            .collect(),
        edges: g
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| WorkEdge {
                a: e.a,
                b: e.b,
                head: if deg[e.a] == 1 || deg[e.b] == 1 { e.head } else { None },
                orig: i,
            })
            .collect(),
    };
    let mut out: Vec<Option<usize>> = root.edges.iter().map(|e| e.head).collect();
    if !solve(&root, &mut out) {
        return Err(OrientError::AlgorithmFailure);
    }
    let mut oriented = g.clone();
    for (i, e) in oriented.edges.iter_mut().enumerate() {
        let Some(h) = out[i] else {
            return Err(OrientError::AlgorithmFailure);
        };
        e.head = Some(h);
    }
    let result = LyapunovGraph { graph: oriented };
    if result.validate().is_err() {
        return Err(OrientError::AlgorithmFailure);
    }
    for (i, e) in g.edges.iter().enumerate() {
        let leaf_edge = deg[e.a] == 1 || deg[e.b] == 1;
        if leaf_edge && e.head.is_some() && result.graph.edges[i].head != e.head {
            return Err(OrientError::AlgorithmFailure);
        }
    }
    Ok(result)
}

fn solve(w: &Work, out: &mut Vec<Option<usize>>) -> bool {
    if w.points.is_empty() {
        return true;
    }
    let n = w.points.len();
    let mut deg = vec![0usize; n];
    let mut inc: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, e) in w.edges.iter().enumerate() {
        deg[e.a] += 1;
        deg[e.b] += 1;
        inc[e.a].push(i);
        inc[e.b].push(i);
    }
    let mut sources = Vec::new();
    let mut sinks = Vec::new();
    for p in 0..n {
        match deg[p] {
            0 => return false,
            1 => match w.edges[inc[p][0]].head {
                Some(h) if h == p => sinks.push(p),
                Some(_) => sources.push(p),
                None => return false,
            },
            _ => {}
        }
    }
    if sources.is_empty() || sinks.is_empty() {
        return false;
    }
    sources.sort_by(|&x, &y| w.points[x].name.cmp(&w.points[y].name));
    sinks.sort_by(|&x, &y| w.points[x].name.cmp(&w.points[y].name));
    let mut candidates: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for &s in &sources {
        for &t in &sinks {
            if let Some(path) = shortest_path(w, &inc, s, t) {
                candidates.push(path);
            }
        }
    }
    // Stable by length: ties stay in (source name, sink name) order.
    candidates.sort_by_key(|(_, eds)| eds.len());
    for (pts, eds) in &candidates {
        let mut trial = out.clone();
        if apply_gamma(w, &deg, &inc, pts, eds, &mut trial) {
            *out = trial;
            return true;
        }
    }
    false
}

/// Breadth-first shortest path from `s` to `t`; among shortest paths, walks
/// greedily by (neighbor name, edge index). Returns (points, edges).
fn shortest_path(w: &Work, inc: &[Vec<usize>], s: usize, t: usize) -> Option<(Vec<usize>, Vec<usize>)> {
    let n = w.points.len();
    let mut dist = vec![usize::MAX; n];
    dist[t] = 0;
    let mut queue = VecDeque::from([t]);
    while let Some(v) = queue.pop_front() {
        for &ei in &inc[v] {
            let o = w_other(w, ei, v);
            if dist[o] == usize::MAX {
                dist[o] = dist[v] + 1;
                queue.push_back(o);
            }
        }
    }
    if dist[s] == usize::MAX {
        return None;
    }
    let mut pts = vec![s];
    let mut eds = Vec::new();
    let mut cur = s;
    while cur != t {
        let mut best: Option<(&str, usize, usize)> = None;
        for &ei in &inc[cur] {
            let o = w_other(w, ei, cur);
            if dist[o] != usize::MAX && dist[o] + 1 == dist[cur] {
                let key = (w.points[o].name.as_str(), ei);
                if best.is_none_or(|(bn, be, _)| key < (bn, be)) {
                    best = Some((key.0, key.1, o));
                }
            }
        }
        let (_, ei, o) = best?;
        pts.push(o);
        eds.push(ei);
        cur = o;
    }
    Some((pts, eds))
}

fn w_other(w: &Work, edge: usize, point: usize) -> usize {
    let e = &w.edges[edge];
    if e.a == point {
        e.b
    } else {
        e.a
    }
}

/// Record an orientation decision for a work edge into the original-indexed
/// table; an existing entry must agree.
fn set_head(w: &Work, edge: usize, head_local: usize, trial: &mut [Option<usize>]) -> bool {
    let e = &w.edges[edge];
    debug_assert!(head_local == e.a || head_local == e.b);
    let value = w.points[head_local].orig;
    match trial[e.orig] {
        None => {
            trial[e.orig] = Some(value);
            true
        }
        Some(existing) => existing == value,
    }
}

fn apply_gamma(
    w: &Work,
    deg: &[usize],
    inc: &[Vec<usize>],
    pts: &[usize],
    eds: &[usize],
    trial: &mut Vec<Option<usize>>,
) -> bool {
    let mut pos: BTreeMap<usize, usize> = BTreeMap::new();
    for (k, &p) in pts.iter().enumerate() {
        pos.insert(p, k);
    }
    let on_path: BTreeSet<usize> = eds.iter().copied().collect();
    for (k, &ei) in eds.iter().enumerate() {
        if !set_head(w, ei, pts[k + 1], trial) {
            return false;
        }
    }
    let mut rem_index = vec![usize::MAX; w.points.len()];
    let mut rem_points = Vec::new();
    for (p, slot) in rem_index.iter_mut().enumerate() {
        if !pos.contains_key(&p) {
            *slot = rem_points.len();
            rem_points.push(p);
        }
    }
    let mut rem_edges: Vec<(usize, usize)> = Vec::new();
    let mut rem_edge_ids: Vec<usize> = Vec::new();
    let mut cuts: Vec<(usize, usize, usize)> = Vec::new(); // (path position, edge, outer point)
    for (i, e) in w.edges.iter().enumerate() {
        match (pos.get(&e.a), pos.get(&e.b)) {
            (Some(&pa), Some(&pb)) => {
                if on_path.contains(&i) {
                    continue;
                }
                // A chord between two path vertices points forward.
                let head = if pa < pb { e.b } else { e.a };
                if !set_head(w, i, head, trial) {
                    return false;
                }
            }
            (Some(&pa), None) => cuts.push((pa, i, e.b)),
            (None, Some(&pb)) => cuts.push((pb, i, e.a)),
            (None, None) => {
                rem_edges.push((rem_index[e.a], rem_index[e.b]));
                rem_edge_ids.push(i);
            }
        }
    }
    cuts.sort();
    let comp = MultiGraph::new(rem_points.len(), rem_edges.clone()).components();
    let ncomp = comp.iter().copied().max().map_or(0, |c| c + 1);
    for c in 0..ncomp {
        let members: Vec<usize> = (0..rem_points.len())
            .filter(|&ri| comp[ri] == c)
            .map(|ri| rem_points[ri])
            .collect();
        let comp_cuts: Vec<(usize, usize, usize)> = cuts
            .iter()
            .filter(|&&(_, _, outer)| comp[rem_index[outer]] == c)
            .copied()
            .collect();
        if comp_cuts.is_empty() {
            return false;
        }
        let mut have_source = false;
        let mut have_sink = false;
        for &p in &members {
            if deg[p] != 1 {
                continue;
            }
            match w.edges[inc[p][0]].head {
                Some(h) if h == p => have_sink = true,
                Some(_) => have_source = true,
                None => {}
            }
        }
        // An already-oriented cut supplies the component with the matching
        // kind through its synthesized leaf: inward means a new source.
        for &(_, ei, outer) in &comp_cuts {
            if let Some(h) = w.edges[ei].head {
                if h == outer {
                    have_source = true;
                } else {
                    have_sink = true;
                }
            }
        }
        let free: Vec<(usize, usize, usize)> = comp_cuts
            .iter()
            .filter(|&&(_, ei, _)| w.edges[ei].head.is_none())
            .copied()
            .collect();
        let decisions: Vec<(usize, bool)> = match free.len() {
            0 => Vec::new(),
            1 => {
                // Supply whichever kind the component lacks; default inward.
                let into = match (have_source, have_sink) {
                    (false, _) => true,
                    (true, false) => false,
                    (true, true) => true,
                };
                vec![(free[0].1, into)]
            }
            _ => free.iter().enumerate().map(|(k, &(_, ei, _))| (ei, k == 0)).collect(),
        };
        for &(ei, into) in &decisions {
            let e = &w.edges[ei];
            let (path_end, outer) =
                if pos.contains_key(&e.a) { (e.a, e.b) } else { (e.b, e.a) };
            let head = if into { outer } else { path_end };
            if !set_head(w, ei, head, trial) {
                return false;
            }
            if into {
                have_source = true;
            } else {
                have_sink = true;
            }
        }
        if !have_source || !have_sink {
            return false;
        }
        let mut sub = Work::default();
        let mut sub_index = vec![usize::MAX; w.points.len()];
        for &p in &members {
            sub_index[p] = sub.points.len();
            sub.points.push(WorkPoint { name: w.points[p].name.clone(), orig: w.points[p].orig });
        }
        for (re, &(ra, _)) in rem_edges.iter().enumerate() {
            if comp[ra] != c {
                continue;
            }
            let e = &w.edges[rem_edge_ids[re]];
            sub.edges.push(WorkEdge {
                a: sub_index[e.a],
                b: sub_index[e.b],
                head: e.head.map(|h| sub_index[h]),
                orig: e.orig,
            });
        }
        for &(_, ei, outer) in &comp_cuts {
            let e = &w.edges[ei];
            let path_end = if pos.contains_key(&e.a) { e.a } else { e.b };
            let leaf = sub.points.len();
            sub.points.push(WorkPoint {
                name: format!("~{}", w.points[path_end].name),
                orig: w.points[path_end].orig,
            });
            let orig_head = trial[e.orig].expect("cut edges are decided before recursing");
            let a = sub_index[outer];
            let head = if orig_head == w.points[outer].orig { a } else { leaf };
            sub.edges.push(WorkEdge { a, b: leaf, head: Some(head), orig: e.orig });
        }
        if !solve(&sub, trial) {
            return false;
        }
    }
    true
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BlockError {
    #[error("graph has no saddle vertex")]
    NoSaddle,
}

/// The direction of a cut edge as seen from one block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockCut {
    /// Edge index in the host graph.
    pub edge: usize,
    /// True when the flow leaves the block through this cut.
    pub outgoing: bool,
}

/// One saddle with its adjacent leaves; saddle-to-saddle edges are cut at
/// their midpoints and replaced by ends.
#[derive(Clone, Debug)]
pub struct Block {
    /// Deterministic id: the saddle's point name.
    pub id: String,
    /// Saddle point index in the host graph.
    pub saddle: usize,
    /// Adjacent degree-1 point indices in the host graph.
    pub leaves: Vec<usize>,
    pub cuts: Vec<BlockCut>,
    /// The block as a standalone graph: the saddle, its leaves, one end per
    /// cut, orientations kept.
    pub graph: GeneralizedGraph,
}

/// Cut a Lyapunov graph into its saddle blocks, in saddle arena order.
pub fn blocks(l: &LyapunovGraph) -> Result<Vec<Block>, BlockError> {
    let g = &l.graph;
    let deg = g.degrees();
    let saddles: Vec<usize> = (0..g.points.len()).filter(|&p| deg[p] == 3).collect();
    if saddles.is_empty() {
        return Err(BlockError::NoSaddle);
    }
    let mut out = Vec::new();
    for &s in &saddles {
        let mut graph = GeneralizedGraph::default();
        graph.points.push(g.points[s].clone());
        let mut leaves = Vec::new();
        let mut cuts = Vec::new();
        for (i, e) in g.edges.iter().enumerate() {
            if e.a != s && e.b != s {
                continue;
            }
            let other = if e.a == s { e.b } else { e.a };
            let outgoing = e.head != Some(s);
            let local = if deg[other] == 3 {
                cuts.push(BlockCut { edge: i, outgoing });
                graph.points.push(Point {
                    name: format!("cut.e{i}"),
                    kind: PointKind::End,
                    piece: g.points[s].piece.clone(),
                    knot: None,
                    end_label: None,
                });
                graph.points.len() - 1
            } else {
                leaves.push(other);
                graph.points.push(g.points[other].clone());
                graph.points.len() - 1
            };
            let ne = graph.add_edge(0, local);
            graph.edges[ne].jsj = e.jsj.clone();
            graph.edges[ne].head = Some(if outgoing { local } else { 0 });
        }
        out.push(Block { id: g.points[s].name.clone(), saddle: s, leaves, cuts, graph });
    }
    Ok(out)
}

/// Blocks in an order compatible with the flow: every saddle-to-saddle edge
/// goes from an earlier block to a later one. Kahn's scheme with block-id
/// tie-breaks makes the order deterministic.
pub fn order_blocks(l: &LyapunovGraph) -> Result<Vec<Block>, BlockError> {
    let list = blocks(l)?;
    let index_of: BTreeMap<usize, usize> = list.iter().enumerate().map(|(i, b)| (b.saddle, i)).collect();
    let g = &l.graph;
    let deg = g.degrees();
    let mut succs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); list.len()];
    let mut indeg = vec![0usize; list.len()];
    for e in &g.edges {
        if deg[e.a] != 3 || deg[e.b] != 3 {
            continue;
        }
        let h = e.head.expect("Lyapunov graphs are totally oriented");
        let t = if h == e.a { e.b } else { e.a };
        let (bt, bh) = (index_of[&t], index_of[&h]);
        if succs[bt].insert(bh) {
            indeg[bh] += 1;
        }
    }
    let mut ready: BTreeSet<(String, usize)> = (0..list.len())
        .filter(|&i| indeg[i] == 0)
        .map(|i| (list[i].id.clone(), i))
        .collect();
    let mut order = Vec::new();
    while let Some(entry) = ready.iter().next().cloned() {
        ready.remove(&entry);
        let i = entry.1;
        order.push(i);
        for &j in &succs[i] {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                ready.insert((list[j].id.clone(), j));
            }
        }
    }
    assert_eq!(order.len(), list.len(), "the block graph of an acyclic orientation is acyclic");
    Ok(order.into_iter().map(|i| list[i].clone()).collect())
}

/// Deterministic DOT rendering: saddles as circles, leaves as squares, ends
/// as diamonds; oriented edges as arrows, unoriented ones without a head;
/// knot labels on points, torus labels on fused edges. Output is stable for
/// a given arena, so renders diff cleanly.
pub fn to_dot(g: &GeneralizedGraph) -> String {
    let deg = g.degrees();
    let mut s = String::from("digraph lyapunov {\n");
    for (i, p) in g.points.iter().enumerate() {
        let shape = match p.kind {
            PointKind::End => "diamond",
            PointKind::Vertex if deg[i] == 1 => "square",
            PointKind::Vertex => "circle",
        };
        let mut attrs = format!("shape={shape}");
        if let Some(k) = &p.knot {
            attrs.push_str(&format!(", label=\"{k}\""));
        }
        s.push_str(&format!("  \"{}\" [{}];\n", p.name, attrs));
    }
    for e in &g.edges {
        let mut attrs: Vec<String> = Vec::new();
        let (tail, head) = match e.head {
            Some(h) if h == e.b => (e.a, e.b),
            Some(_) => (e.b, e.a),
            None => {
                attrs.push("dir=none".to_string());
                (e.a, e.b)
            }
        };
        if let Some(t) = &e.jsj {
            attrs.push(format!("label=\"{t}\""));
        }
        let suffix =
            if attrs.is_empty() { String::new() } else { format!(" [{}]", attrs.join(", ")) };
        s.push_str(&format!(
            "  \"{}\" -> \"{}\"{};\n",
            g.points[tail].name, g.points[head].name, suffix
        ));
    }
    s.push_str("}\n");
    s
}
