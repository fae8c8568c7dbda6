//! Fat-round-handle blocks and certificates.
//!
//! Each saddle block of an oriented Lyapunov graph corresponds to one
//! Seifert-fibered building block from a three-entry catalog: a pants piece
//! M(0,3;), a one-orbit piece M(0,2; q/p) (a thickened torus when p = 1),
//! or a two-orbit piece M(0,1; q1/p1, q2/p2). A certificate records, per
//! piece of the decomposition, the ordered block list, the assignment of
//! closed orbits to graph vertices, and the internal gluings; the verifier
//! re-derives all of it from the graph and accepts only exact agreement.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::{DiagCode, Diagnostics};
use crate::graphs::MultiGraph;
use crate::ids::{KnotId, PieceId};
use crate::link::{
    end_knots_in_assignment_order, saddles_in_id_order, CableClass, IndexedLink, KnotKind,
};
use crate::lyagraph::{
    blocks, flanked_saddles, Block, GeneralizedGraph, LyapunovGraph, PieceGraph, PointKind,
    Projection,
};
use crate::manifold::GraphManifold;
use crate::Slope;

/// Topological shape of one block. The regular slope 0/1 marks the thickened
/// torus inside the one-orbit entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BlockShape {
    /// M(0,3;): three boundary tori, no closed orbit besides the saddle.
    Pants,
    /// M(0,2; q/p): two boundary tori, one orbit on the core fiber.
    OneSing { slope: Slope },
    /// M(0,1; q1/p1, q2/p2): one boundary torus, two core orbits; at most
    /// one of the slopes may be regular.
    TwoSing { slopes: (Slope, Slope) },
}

impl BlockShape {
    pub fn boundary_tori(&self) -> usize {
        match self {
            BlockShape::Pants => 3,
            BlockShape::OneSing { .. } => 2,
            BlockShape::TwoSing { .. } => 1,
        }
    }

    /// Closed orbits carried by the block, saddle included: 4 minus the
    /// number of boundary tori.
    pub fn knot_count(&self) -> usize {
        4 - self.boundary_tori()
    }

    pub fn singular_slopes(&self) -> Vec<&Slope> {
        let all: Vec<&Slope> = match self {
            BlockShape::Pants => Vec::new(),
            BlockShape::OneSing { slope } => vec![slope],
            BlockShape::TwoSing { slopes } => vec![&slopes.0, &slopes.1],
        };
        all.into_iter().filter(|s| s.is_singular()).collect()
    }
}

/// One boundary torus of a block: the host-graph edge it lies over and
/// whether the flow leaves the block through it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryRole {
    pub edge: usize,
    pub outgoing: bool,
}

/// A non-saddle closed orbit carried by a block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafKnot {
    pub knot: KnotId,
    pub index: u8,
}

/// One fat round handle: a catalog shape with its orbits and boundary roles.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrhBlock {
    /// The saddle vertex name; doubles as the block id in the order.
    pub id: String,
    pub shape: BlockShape,
    pub saddle_knot: KnotId,
    pub leaf_knots: Vec<LeafKnot>,
    pub boundary_roles: Vec<BoundaryRole>,
    /// Torus-knot pair class; only a thickened torus (OneSing with p = 1)
    /// after a change-of-fibers step carries one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cable_class: Option<CableClass>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CatalogError {
    #[error("block {block}: {got} boundary tori, the shape requires {expected}")]
    BoundaryCount { block: String, got: usize, expected: usize },
    #[error("block {block}: carries {got} knots, the shape requires 4-{tori} = {expected}")]
    KnotCount { block: String, got: usize, tori: usize, expected: usize },
    #[error("block {block}: both slopes are regular; their denominators must not multiply to 1")]
    BothRegular { block: String },
    #[error("block {block}: leaf knot {knot} has index {index}, expected 0 or 2")]
    LeafIndex { block: String, knot: KnotId, index: u8 },
    #[error("block {block}: only a thickened torus carries a cable class")]
    CableNotAllowed { block: String },
}

impl FrhBlock {
    /// Catalog membership: boundary and knot counts per shape, slope
    /// restrictions, and the cable-class placement rule.
    pub fn validate(&self) -> Result<(), CatalogError> {
        let tori = self.shape.boundary_tori();
        if self.boundary_roles.len() != tori {
            return Err(CatalogError::BoundaryCount {
                block: self.id.clone(),
                got: self.boundary_roles.len(),
                expected: tori,
            });
        }
        let knots = 1 + self.leaf_knots.len();
        if knots != self.shape.knot_count() {
            return Err(CatalogError::KnotCount {
                block: self.id.clone(),
                got: knots,
                tori,
                expected: 4 - tori,
            });
        }
        if let BlockShape::TwoSing { slopes } = &self.shape {
            if !slopes.0.is_singular() && !slopes.1.is_singular() {
                return Err(CatalogError::BothRegular { block: self.id.clone() });
            }
        }
        for lk in &self.leaf_knots {
            if lk.index != 0 && lk.index != 2 {
                return Err(CatalogError::LeafIndex {
                    block: self.id.clone(),
                    knot: lk.knot.clone(),
                    index: lk.index,
                });
            }
        }
        if self.cable_class.is_some() {
            let thickened =
                matches!(&self.shape, BlockShape::OneSing { slope } if !slope.is_singular());
            if !thickened {
                return Err(CatalogError::CableNotAllowed { block: self.id.clone() });
            }
        }
        Ok(())
    }
}

/// Per-piece bijection from degree-1 graph vertices to the piece's
/// index-0/2 records.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaAssignment {
    pub piece: PieceId,
    /// Leaf point name to knot id; total on the piece's leaves.
    pub map: BTreeMap<String, KnotId>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SigmaError {
    #[error("piece {piece}: {flanking} flanking leaves but only {singular} singular end knots")]
    Infeasible { piece: PieceId, flanking: usize, singular: usize },
    #[error("piece {piece}: {leaves} leaves cannot match {knots} end knots")]
    CountMismatch { piece: PieceId, leaves: usize, knots: usize },
}

/// Deterministic assignment: leaves flanking a doubly-flanked saddle consume
/// the singular fibers first (in slope order), the remaining leaves take the
/// remaining end knots in id order. Leaves are visited in attachment order.
pub fn assign_sigma(pg: &PieceGraph, l: &IndexedLink) -> Result<SigmaAssignment, SigmaError> {
    let piece = pg
        .graph
        .points
        .first()
        .and_then(|p| p.piece.clone())
        .expect("piece graphs label every point with their piece");
    let flanked: BTreeSet<usize> = flanked_saddles(&pg.graph).into_iter().collect();
    let mut flanking = Vec::new();
    let mut plain = Vec::new();
    for &leaf in &pg.leaf_points {
        let e = pg.graph.incident(leaf)[0];
        if flanked.contains(&pg.graph.other_end(e, leaf)) {
            flanking.push(leaf);
        } else {
            plain.push(leaf);
        }
    }
    let ordered = end_knots_in_assignment_order(l, &piece);
    let singular = ordered
        .iter()
        .filter(|k| matches!(k.kind, KnotKind::SingularFiber(_)))
        .count();
    if flanking.len() > singular {
        return Err(SigmaError::Infeasible {
            piece: piece.clone(),
            flanking: flanking.len(),
            singular,
        });
    }
    if pg.leaf_points.len() != ordered.len() {
        return Err(SigmaError::CountMismatch {
            piece: piece.clone(),
            leaves: pg.leaf_points.len(),
            knots: ordered.len(),
        });
    }
    let mut map = BTreeMap::new();
    for (&leaf, knot) in flanking.iter().zip(&ordered) {
        map.insert(pg.graph.points[leaf].name.clone(), knot.id.clone());
    }
    let mut rest: Vec<_> = ordered[flanking.len()..].to_vec();
    rest.sort_by(|a, b| a.id.cmp(&b.id));
    for (&leaf, knot) in plain.iter().zip(&rest) {
        map.insert(pg.graph.points[leaf].name.clone(), knot.id.clone());
    }
    Ok(SigmaAssignment { piece, map })
}

/// Translate one graph block into its catalog entry, reading the orbit
/// assignment off the knot labels of the host graph (the caller labels the
/// graph before cutting blocks). Shapes follow the leaf count: none makes a
/// pants, one a one-orbit piece, two a two-orbit piece with the slope pair
/// sorted for a canonical record.
pub fn block_to_frh(block: &Block, host: &GeneralizedGraph, l: &IndexedLink) -> FrhBlock {
    let saddle_knot = host.points[block.saddle]
        .knot
        .clone()
        .expect("the host graph labels every saddle with its orbit");
    let mut carried: Vec<(Slope, LeafKnot, Option<CableClass>)> = Vec::new();
    for &leaf in &block.leaves {
        let knot_id = host.points[leaf]
            .knot
            .clone()
            .expect("the host graph labels every leaf with its orbit");
        let rec = l.knot(&knot_id).expect("labels refer to link records");
        let (slope, cable) = match &rec.kind {
            KnotKind::SingularFiber(s) => (s.clone(), None),
            KnotKind::RegularFiber => (Slope::regular(), None),
            KnotKind::CabledPair(c) => (Slope::regular(), Some(c.clone())),
        };
        carried.push((slope, LeafKnot { knot: knot_id, index: rec.index }, cable));
    }
    carried.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.knot.cmp(&b.1.knot)));
    assert_eq!(
        block.leaves.len() + block.cuts.len(),
        3,
        "saddle blocks have three attachments"
    );
    let cable_class = carried.iter().find_map(|(_, _, c)| c.clone());
    let mut it = carried.into_iter();
    let (shape, leaf_knots) = match (it.next(), it.next()) {
        (None, _) => (BlockShape::Pants, Vec::new()),
        (Some((slope, lk, _)), None) => (BlockShape::OneSing { slope }, vec![lk]),
        (Some((s1, k1, _)), Some((s2, k2, _))) => {
            (BlockShape::TwoSing { slopes: (s1, s2) }, vec![k1, k2])
        }
    };
    assert!(it.next().is_none(), "a saddle touches at most two leaves");
    FrhBlock {
        id: block.id.clone(),
        shape,
        saddle_knot,
        leaf_knots,
        boundary_roles: block
            .cuts
            .iter()
            .map(|c| BoundaryRole { edge: c.edge, outgoing: c.outgoing })
            .collect(),
        cable_class,
    }
}

/// An internal gluing: two blocks of the same piece share the boundary torus
/// lying over one saddle-to-saddle edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gluing {
    pub edge: usize,
    /// Block the flow leaves through this interface.
    pub from: String,
    /// Block the flow enters.
    pub to: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigmaPair {
    pub leaf: String,
    pub knot: KnotId,
}

/// Everything certified about one decomposition piece.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PieceCertificate {
    pub piece: PieceId,
    /// The piece's blocks in global assembly order.
    pub blocks: Vec<FrhBlock>,
    pub sigma: Vec<SigmaPair>,
    pub gluings: Vec<Gluing>,
}

/// The full witness: the labeled, oriented graph, the global assembly order,
/// and one entry per decomposition piece. The projection to the decomposition
/// is carried by the piece and torus labels on the graph itself.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrhCertificate {
    pub graph: LyapunovGraph,
    pub order: Vec<String>,
    pub pieces: Vec<PieceCertificate>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AssemblyError {
    #[error("piece {piece}: {knots} saddle knots for {vertices} saddle vertices")]
    SaddleCountMismatch { piece: PieceId, knots: usize, vertices: usize },
    #[error("piece {piece}: slope multiset mismatch between blocks and piece")]
    SlopeMismatch { piece: PieceId },
    #[error("piece {piece}: {tori} boundary tori minus 2*{gluings} gluings is not {expected}")]
    BoundaryMismatch { piece: PieceId, tori: usize, gluings: usize, expected: u32 },
    #[error("piece {piece}: graph cycle rank {got} does not match genus {expected}")]
    GenusMismatch { piece: PieceId, got: usize, expected: u32 },
    #[error("graph names piece {piece}, which the manifold does not contain")]
    UnknownPiece { piece: PieceId },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

/// Cycle rank of one piece's subgraph (fused decomposition edges excluded);
/// None when the subgraph is disconnected.
fn piece_subgraph_betti(g: &GeneralizedGraph, members: &[usize]) -> Option<usize> {
    let index: BTreeMap<usize, usize> = members.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    let mut edges = Vec::new();
    for e in &g.edges {
        if e.jsj.is_some() {
            continue;
        }
        if let (Some(&a), Some(&b)) = (index.get(&e.a), index.get(&e.b)) {
            edges.push((a, b));
        }
    }
    let count = edges.len();
    if !MultiGraph::new(members.len(), edges).is_connected() {
        return None;
    }
    Some(count + 1 - members.len())
}

/// Assemble the certificate: label the graph with the orbit assignment,
/// translate the ordered blocks into catalog entries, group them by piece
/// with their internal gluings, and check every per-piece invariant.
pub fn assemble_certificate(
    w: &GraphManifold,
    l: &IndexedLink,
    lg: &LyapunovGraph,
    projection: &Projection,
    sigmas: &[SigmaAssignment],
    ordered: &[Block],
) -> Result<FrhCertificate, AssemblyError> {
    let mut graph = lg.graph.clone();
    let name_index: BTreeMap<String, usize> =
        graph.points.iter().enumerate().map(|(i, p)| (p.name.clone(), i)).collect();
    for sigma in sigmas {
        if w.piece(&sigma.piece).is_none() {
            return Err(AssemblyError::UnknownPiece { piece: sigma.piece.clone() });
        }
        for (leaf, knot) in &sigma.map {
            let &idx = name_index.get(leaf).expect("sigma names existing leaves");
            graph.points[idx].knot = Some(knot.clone());
        }
    }
    let deg = graph.degrees();
    for piece in &w.pieces {
        let members = projection
            .piece_points
            .get(&piece.id)
            .expect("the projection covers every piece");
        let vertices: Vec<usize> = members.iter().copied().filter(|&p| deg[p] == 3).collect();
        let knots = saddles_in_id_order(l, &piece.id);
        if vertices.len() != knots.len() {
            return Err(AssemblyError::SaddleCountMismatch {
                piece: piece.id.clone(),
                knots: knots.len(),
                vertices: vertices.len(),
            });
        }
        for (&v, k) in vertices.iter().zip(&knots) {
            graph.points[v].knot = Some(k.id.clone());
        }
    }

    let mut piece_blocks: BTreeMap<PieceId, Vec<FrhBlock>> = BTreeMap::new();
    let mut order = Vec::with_capacity(ordered.len());
    for block in ordered {
        let frh = block_to_frh(block, &graph, l);
        frh.validate()?;
        let piece = graph.points[block.saddle]
            .piece
            .clone()
            .expect("saddles carry piece labels");
        order.push(frh.id.clone());
        piece_blocks.entry(piece).or_default().push(frh);
    }

    let mut piece_gluings: BTreeMap<PieceId, Vec<Gluing>> = BTreeMap::new();
    for (i, e) in graph.edges.iter().enumerate() {
        if e.jsj.is_some() || deg[e.a] != 3 || deg[e.b] != 3 {
            continue;
        }
        let pa = graph.points[e.a].piece.as_ref();
        let pb = graph.points[e.b].piece.as_ref();
        assert_eq!(pa, pb, "unfused edges stay inside one piece");
        let head = e.head.expect("oriented graph");
        let tail = if head == e.a { e.b } else { e.a };
        piece_gluings.entry(pa.expect("piece label").clone()).or_default().push(Gluing {
            edge: i,
            from: graph.points[tail].name.clone(),
            to: graph.points[head].name.clone(),
        });
    }
    for edge in &w.edges {
        let carriers = graph.edges.iter().filter(|e| e.jsj.as_ref() == Some(&edge.id)).count();
        assert_eq!(carriers, 1, "each decomposition torus lies under exactly one edge");
    }

    let mut pieces = Vec::with_capacity(w.pieces.len());
    for piece in &w.pieces {
        let sigma = sigmas
            .iter()
            .find(|s| s.piece == piece.id)
            .expect("one sigma assignment per piece");
        let blocks = piece_blocks.remove(&piece.id).unwrap_or_default();
        let gluings = piece_gluings.remove(&piece.id).unwrap_or_default();
        let mut block_slopes: Vec<Slope> = blocks
            .iter()
            .flat_map(|b| b.shape.singular_slopes().into_iter().cloned())
            .collect();
        block_slopes.sort();
        let mut piece_slopes: Vec<Slope> = piece.singular_slopes().into_iter().cloned().collect();
        piece_slopes.sort();
        if block_slopes != piece_slopes {
            return Err(AssemblyError::SlopeMismatch { piece: piece.id.clone() });
        }
        let tori: usize = blocks.iter().map(|b| b.shape.boundary_tori()).sum();
        if tori != 2 * gluings.len() + piece.boundary_count as usize {
            return Err(AssemblyError::BoundaryMismatch {
                piece: piece.id.clone(),
                tori,
                gluings: gluings.len(),
                expected: piece.boundary_count,
            });
        }
        let members = &projection.piece_points[&piece.id];
        let betti = piece_subgraph_betti(&graph, members);
        if betti != Some(piece.genus as usize) {
            return Err(AssemblyError::GenusMismatch {
                piece: piece.id.clone(),
                got: betti.unwrap_or(usize::MAX),
                expected: piece.genus,
            });
        }
        pieces.push(PieceCertificate {
            piece: piece.id.clone(),
            blocks,
            sigma: sigma
                .map
                .iter()
                .map(|(leaf, knot)| SigmaPair { leaf: leaf.clone(), knot: knot.clone() })
                .collect(),
            gluings,
        });
    }
    Ok(FrhCertificate { graph: LyapunovGraph { graph }, order, pieces })
}

/// Re-check a certificate from scratch against the manifold and link. Every
/// derivable datum is re-derived from the graph and compared with the stored
/// record; diagnostics accumulate instead of stopping at the first failure,
/// except where broken structure makes later checks meaningless.
pub fn verify_certificate(
    w: &GraphManifold,
    l: &IndexedLink,
    c: &FrhCertificate,
) -> (bool, Diagnostics) {
    let mut diags = Diagnostics::new();
    let g = &c.graph.graph;
    if let Err(e) = c.graph.validate() {
        diags.error(DiagCode::GraphNotLyapunov, "graph", e.to_string());
        return (false, diags);
    }

    // Projection structure: piece labels on points, torus labels on edges.
    let mut piece_points: BTreeMap<PieceId, Vec<usize>> = BTreeMap::new();
    for (i, p) in g.points.iter().enumerate() {
        if p.kind != PointKind::Vertex {
            diags.error(DiagCode::ProjectionInvalid, &p.name, "certificate graphs carry no ends");
        }
        match &p.piece {
            None => {
                diags.error(DiagCode::ProjectionInvalid, &p.name, "point carries no piece label")
            }
            Some(pid) if w.piece(pid).is_none() => diags.error(
                DiagCode::ProjectionInvalid,
                &p.name,
                format!("point lies over unknown piece {pid}"),
            ),
            Some(pid) => piece_points.entry(pid.clone()).or_default().push(i),
        }
    }
    let mut torus_edges: BTreeMap<&crate::ids::TorusId, usize> = BTreeMap::new();
    for e in &g.edges {
        match &e.jsj {
            Some(t) => {
                let Some(w_edge) = w.edge(t) else {
                    diags.error(
                        DiagCode::ProjectionInvalid,
                        t.as_str(),
                        "edge lies over an unknown decomposition torus",
                    );
                    continue;
                };
                *torus_edges.entry(t).or_insert(0) += 1;
                let mut got = [g.points[e.a].piece.clone(), g.points[e.b].piece.clone()];
                let mut want =
                    [Some(w_edge.ends.0.clone()), Some(w_edge.ends.1.clone())];
                got.sort();
                want.sort();
                if got != want {
                    diags.error(
                        DiagCode::ProjectionInvalid,
                        t.as_str(),
                        "fused edge does not join the torus's two pieces",
                    );
                }
            }
            None => {
                if g.points[e.a].piece != g.points[e.b].piece {
                    diags.error(
                        DiagCode::ProjectionInvalid,
                        &g.points[e.a].name,
                        "unfused edge crosses between pieces",
                    );
                }
            }
        }
    }
    for edge in &w.edges {
        let count = torus_edges.get(&edge.id).copied().unwrap_or(0);
        if count != 1 {
            diags.error(
                DiagCode::ProjectionInvalid,
                edge.id.as_str(),
                format!("decomposition torus must lie under exactly one edge, found {count}"),
            );
        }
    }
    if !diags.is_clean() {
        return (false, diags);
    }

    // Per-piece graph shape: connected subgraph of the right cycle rank,
    // touching one fused edge slot per boundary torus.
    let deg = g.degrees();
    for piece in &w.pieces {
        let Some(members) = piece_points.get(&piece.id) else {
            diags.error(DiagCode::ProjectionInvalid, piece.id.as_str(), "piece has no points");
            continue;
        };
        match piece_subgraph_betti(g, members) {
            None => diags.error(
                DiagCode::ProjectionInvalid,
                piece.id.as_str(),
                "piece subgraph is disconnected",
            ),
            Some(b) if b != piece.genus as usize => diags.error(
                DiagCode::GraphBettiMismatch,
                piece.id.as_str(),
                format!("piece subgraph has cycle rank {b}, genus is {}", piece.genus),
            ),
            Some(_) => {}
        }
        let in_piece: BTreeSet<usize> = members.iter().copied().collect();
        let slots: usize = g
            .edges
            .iter()
            .filter(|e| e.jsj.is_some())
            .map(|e| {
                usize::from(in_piece.contains(&e.a)) + usize::from(in_piece.contains(&e.b))
            })
            .sum();
        if slots != piece.boundary_count as usize {
            diags.error(
                DiagCode::ProjectionInvalid,
                piece.id.as_str(),
                format!(
                    "piece touches {slots} fused edge slots, boundary count is {}",
                    piece.boundary_count
                ),
            );
        }
    }

    // The assembly order must list each derived block once and respect every
    // oriented saddle-to-saddle edge.
    let derived = match blocks(&c.graph) {
        Ok(b) => b,
        Err(e) => {
            diags.error(DiagCode::BlockOrderInvalid, "order", e.to_string());
            return (false, diags);
        }
    };
    let derived_by_id: BTreeMap<&str, &Block> =
        derived.iter().map(|b| (b.id.as_str(), b)).collect();
    let mut position: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, id) in c.order.iter().enumerate() {
        if !derived_by_id.contains_key(id.as_str()) {
            diags.error(DiagCode::BlockOrderInvalid, id, "order names no block of the graph");
        }
        if position.insert(id.as_str(), i).is_some() {
            diags.error(DiagCode::BlockOrderInvalid, id, "order lists the block twice");
        }
    }
    for b in &derived {
        if !position.contains_key(b.id.as_str()) {
            diags.error(DiagCode::BlockOrderInvalid, &b.id, "block is missing from the order");
        }
    }
    if diags.is_clean() {
        for e in &g.edges {
            if deg[e.a] != 3 || deg[e.b] != 3 {
                continue;
            }
            let head = e.head.expect("validated graphs are oriented");
            let tail = if head == e.a { e.b } else { e.a };
            let (tn, hn) = (g.points[tail].name.as_str(), g.points[head].name.as_str());
            if position[tn] >= position[hn] {
                diags.error(
                    DiagCode::BlockOrderInvalid,
                    hn,
                    format!("block {hn} is ordered before its predecessor {tn}"),
                );
            }
        }
    }

    // Orbit assignment: sigma bijections, flanking rule, orientation rule,
    // and agreement with the knot labels on the graph.
    let mut seen_pieces = BTreeSet::new();
    for pc in &c.pieces {
        if w.piece(&pc.piece).is_none() {
            diags.error(DiagCode::ProjectionInvalid, pc.piece.as_str(), "unknown piece entry");
            continue;
        }
        if !seen_pieces.insert(pc.piece.clone()) {
            diags.error(DiagCode::ProjectionInvalid, pc.piece.as_str(), "duplicate piece entry");
        }
    }
    for piece in &w.pieces {
        if !seen_pieces.contains(&piece.id) {
            diags.error(
                DiagCode::ProjectionInvalid,
                piece.id.as_str(),
                "certificate has no entry for this piece",
            );
        }
    }
    if !diags.is_clean() {
        return (false, diags);
    }
    let flanked: BTreeSet<usize> = flanked_saddles(g).into_iter().collect();
    let mut labels_ok = true;
    for pc in &c.pieces {
        let members = &piece_points[&pc.piece];
        let leaves: Vec<usize> = members.iter().copied().filter(|&p| deg[p] == 1).collect();
        let sigma: BTreeMap<&str, &KnotId> =
            pc.sigma.iter().map(|s| (s.leaf.as_str(), &s.knot)).collect();
        if sigma.len() != pc.sigma.len() {
            diags.error(DiagCode::SigmaNotBijective, pc.piece.as_str(), "a leaf is listed twice");
            labels_ok = false;
        }
        let leaf_names: BTreeSet<&str> =
            leaves.iter().map(|&p| g.points[p].name.as_str()).collect();
        let sigma_names: BTreeSet<&str> = sigma.keys().copied().collect();
        if leaf_names != sigma_names {
            diags.error(
                DiagCode::SigmaNotBijective,
                pc.piece.as_str(),
                "sigma does not cover exactly the piece's degree-1 vertices",
            );
            labels_ok = false;
            continue;
        }
        let mut end_ids: Vec<&KnotId> = l
            .knots_in(&pc.piece)
            .filter(|k| k.is_end_knot())
            .map(|k| &k.id)
            .collect();
        end_ids.sort();
        let mut image: Vec<&KnotId> = sigma.values().copied().collect();
        image.sort();
        if end_ids != image {
            diags.error(
                DiagCode::SigmaNotBijective,
                pc.piece.as_str(),
                "sigma image is not exactly the piece's index-0/2 records",
            );
            labels_ok = false;
            continue;
        }
        for &leaf in &leaves {
            let name = g.points[leaf].name.as_str();
            let knot_id = sigma[name];
            let rec = l.knot(knot_id).expect("image ids are link records");
            let e = g.incident(leaf)[0];
            let saddle = g.other_end(e, leaf);
            if flanked.contains(&saddle) && !matches!(rec.kind, KnotKind::SingularFiber(_)) {
                diags.error(
                    DiagCode::SigmaFlankingNotSingular,
                    name,
                    format!("flanking leaf maps to non-singular record {knot_id}"),
                );
            }
            let is_sink = g.edges[e].head == Some(leaf);
            let want_sink = rec.index == 0;
            if is_sink != want_sink {
                diags.error(
                    DiagCode::SigmaOrientationMismatch,
                    name,
                    format!(
                        "index-{} record {knot_id} sits on a {} leaf",
                        rec.index,
                        if is_sink { "sink" } else { "source" }
                    ),
                );
            }
            if g.points[leaf].knot.as_ref() != Some(knot_id) {
                diags.error(
                    DiagCode::ProjectionInvalid,
                    name,
                    "graph knot label disagrees with sigma",
                );
                labels_ok = false;
            }
        }
        // Saddle labels: the piece's index-1 records, each exactly once.
        let mut saddle_labels: Vec<&KnotId> = Vec::new();
        for &p in members {
            if deg[p] != 3 {
                continue;
            }
            match &g.points[p].knot {
                Some(k) => saddle_labels.push(k),
                None => {
                    diags.error(
                        DiagCode::ProjectionInvalid,
                        &g.points[p].name,
                        "saddle carries no orbit label",
                    );
                    labels_ok = false;
                }
            }
        }
        saddle_labels.sort();
        let mut saddle_ids: Vec<&KnotId> =
            saddles_in_id_order(l, &pc.piece).iter().map(|k| &k.id).collect();
        saddle_ids.sort();
        if labels_ok && saddle_labels != saddle_ids {
            diags.error(
                DiagCode::BlockKnotCountWrong,
                pc.piece.as_str(),
                "saddle labels are not exactly the piece's index-1 records",
            );
            labels_ok = false;
        }
    }

    // Stored blocks against re-derived ones, catalog membership, slope
    // conservation, gluings, and boundary arithmetic.
    for pc in &c.pieces {
        let expected_ids: Vec<&str> = c
            .order
            .iter()
            .filter(|id| {
                derived_by_id
                    .get(id.as_str())
                    .is_some_and(|b| g.points[b.saddle].piece.as_ref() == Some(&pc.piece))
            })
            .map(|id| id.as_str())
            .collect();
        let stored_ids: Vec<&str> = pc.blocks.iter().map(|b| b.id.as_str()).collect();
        if expected_ids != stored_ids {
            diags.error(
                DiagCode::BlockOrderInvalid,
                pc.piece.as_str(),
                "piece block list disagrees with the assembly order",
            );
        }
        for stored in &pc.blocks {
            if let Err(e) = stored.validate() {
                let code = match &e {
                    CatalogError::BoundaryCount { .. }
                    | CatalogError::BothRegular { .. }
                    | CatalogError::LeafIndex { .. } => DiagCode::BlockShapeInvalid,
                    CatalogError::KnotCount { .. } => DiagCode::BlockKnotCountWrong,
                    CatalogError::CableNotAllowed { .. } => DiagCode::CableClassInvalid,
                };
                diags.error(code, &stored.id, e.to_string());
            }
            let Some(derived_block) = derived_by_id.get(stored.id.as_str()) else {
                continue;
            };
            if !labels_ok {
                continue;
            }
            let expected = block_to_frh(derived_block, g, l);
            if expected.shape != stored.shape {
                diags.error(DiagCode::BlockShapeInvalid, &stored.id, "shape disagrees with graph");
            }
            if expected.saddle_knot != stored.saddle_knot
                || expected.leaf_knots != stored.leaf_knots
            {
                diags.error(
                    DiagCode::BlockKnotCountWrong,
                    &stored.id,
                    "orbit records disagree with the graph labels",
                );
            }
            if expected.boundary_roles != stored.boundary_roles {
                diags.error(
                    DiagCode::BlockShapeInvalid,
                    &stored.id,
                    "boundary roles disagree with the edge orientations",
                );
            }
            if expected.cable_class != stored.cable_class {
                diags.error(
                    DiagCode::CableClassInvalid,
                    &stored.id,
                    "cable class disagrees with the link records",
                );
            }
        }
        let piece = w.piece(&pc.piece).expect("checked above");
        let mut block_slopes: Vec<&Slope> =
            pc.blocks.iter().flat_map(|b| b.shape.singular_slopes()).collect();
        block_slopes.sort();
        let mut piece_slopes = piece.singular_slopes();
        piece_slopes.sort();
        if block_slopes != piece_slopes {
            diags.error(DiagCode::BlockSlopesWrong, pc.piece.as_str(), "slope multiset mismatch");
        }
        let mut expected_gluings = Vec::new();
        for (i, e) in g.edges.iter().enumerate() {
            if e.jsj.is_some() || deg[e.a] != 3 || deg[e.b] != 3 {
                continue;
            }
            if g.points[e.a].piece.as_ref() != Some(&pc.piece) {
                continue;
            }
            let head = e.head.expect("validated graphs are oriented");
            let tail = if head == e.a { e.b } else { e.a };
            expected_gluings.push(Gluing {
                edge: i,
                from: g.points[tail].name.clone(),
                to: g.points[head].name.clone(),
            });
        }
        if expected_gluings != pc.gluings {
            diags.error(
                DiagCode::GluingInvalid,
                pc.piece.as_str(),
                "gluing list disagrees with the graph's internal edges",
            );
        }
        let tori: usize = pc.blocks.iter().map(|b| b.shape.boundary_tori()).sum();
        if tori != 2 * pc.gluings.len() + piece.boundary_count as usize {
            diags.error(
                DiagCode::BoundaryArithmeticWrong,
                pc.piece.as_str(),
                format!(
                    "{tori} boundary tori minus 2*{} gluings is not {}",
                    pc.gluings.len(),
                    piece.boundary_count
                ),
            );
        }
    }
    (diags.is_clean(), diags)
}
