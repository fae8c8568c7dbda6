//! Graph manifolds presented by their torus decomposition graph.
//!
//! Pieces are the vertices, decomposition tori the edges; loops and parallel
//! edges are allowed. Only closed manifolds are accepted at top level, so
//! every boundary torus of every piece is matched by an edge endpoint.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::diag::{DiagCode, Diagnostics};
use crate::graphs::MultiGraph;
use crate::ids::{PieceId, TorusId};
use crate::seifert::SeifertPiece;

/// An edge of the decomposition graph. `ends` are unordered; a loop repeats
/// the same piece.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsjEdge {
    pub id: TorusId,
    pub ends: (PieceId, PieceId),
}

/// One attachment of an edge to a piece: slot 0 is the first entry of `ends`,
/// slot 1 the second. A loop occupies both slots of the same piece.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeSlot {
    pub torus: TorusId,
    pub slot: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphManifold {
    pub pieces: Vec<SeifertPiece>,
    pub edges: Vec<JsjEdge>,
}

impl GraphManifold {
    pub fn new(pieces: Vec<SeifertPiece>, edges: Vec<JsjEdge>) -> Self {
        GraphManifold { pieces, edges }
    }

    pub fn piece(&self, id: &PieceId) -> Option<&SeifertPiece> {
        self.pieces.iter().find(|p| &p.id == id)
    }

    pub fn edge(&self, id: &TorusId) -> Option<&JsjEdge> {
        self.edges.iter().find(|e| &e.id == id)
    }

    fn piece_index(&self) -> BTreeMap<&PieceId, usize> {
        self.pieces.iter().enumerate().map(|(i, p)| (&p.id, i)).collect()
    }

    /// Adjacency as (edge index, neighbor piece index) per piece. Loops
    /// appear twice at their piece. Panics on endpoints that are not pieces;
    /// run `validate` first.
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let idx = self.piece_index();
        let mut adj = vec![Vec::new(); self.pieces.len()];
        for (ei, e) in self.edges.iter().enumerate() {
            let a = idx[&e.ends.0];
            let b = idx[&e.ends.1];
            adj[a].push((ei, b));
            if a != b {
                adj[b].push((ei, a));
            } else {
                adj[a].push((ei, a));
            }
        }
        adj
    }

    /// The decomposition graph as a plain multigraph over piece indices.
    pub(crate) fn as_multigraph(&self) -> MultiGraph {
        let idx = self.piece_index();
        MultiGraph::new(
            self.pieces.len(),
            self.edges.iter().map(|e| (idx[&e.ends.0], idx[&e.ends.1])).collect(),
        )
    }

    /// Component label per piece, skipping one edge if requested.
    fn components(&self, skip_edge: Option<usize>) -> Vec<usize> {
        self.as_multigraph().components_with(skip_edge, None)
    }

    /// Structural validation: ids unique, endpoints known, boundary counts
    /// matched (closed), graph connected, and the edgeless case is a single
    /// closed piece.
    pub fn validate(&self) -> Diagnostics {
        let mut diags = Diagnostics::new();
        if self.pieces.is_empty() {
            diags.error(DiagCode::EmptyManifold, "-", "manifold has no pieces");
            return diags;
        }
        let mut seen = BTreeMap::new();
        for p in &self.pieces {
            if seen.insert(&p.id, ()).is_some() {
                diags.error(DiagCode::DuplicateId, p.id.as_str(), "duplicate piece id");
            }
        }
        let mut seen_edges = BTreeMap::new();
        for e in &self.edges {
            if seen_edges.insert(&e.id, ()).is_some() {
                diags.error(DiagCode::DuplicateId, e.id.as_str(), "duplicate torus id");
            }
            for end in [&e.ends.0, &e.ends.1] {
                if !seen.contains_key(end) {
                    diags.error(
                        DiagCode::UnknownPiece,
                        e.id.as_str(),
                        format!("edge endpoint {end} is not a piece"),
                    );
                }
            }
        }
        if !diags.is_clean() {
            return diags;
        }
        let mut degrees = vec![0u32; self.pieces.len()];
        let idx = self.piece_index();
        for e in &self.edges {
            degrees[idx[&e.ends.0]] += 1;
            degrees[idx[&e.ends.1]] += 1;
        }
        for (p, &deg) in self.pieces.iter().zip(&degrees) {
            if p.boundary_count != deg {
                diags.error(
                    DiagCode::BoundaryCountMismatch,
                    p.id.as_str(),
                    format!(
                        "piece declares {} boundary tori but meets {} edge endpoints",
                        p.boundary_count, deg
                    ),
                );
            }
        }
        if self.edges.is_empty() && self.pieces.len() != 1 {
            diags.error(
                DiagCode::Disconnected,
                "-",
                "no edges but more than one piece",
            );
        }
        let comp = self.components(None);
        if comp.iter().any(|&c| c != 0) {
            diags.error(DiagCode::Disconnected, "-", "decomposition graph is disconnected");
        }
        diags
    }

    /// Admissibility of the whole presentation: structure valid, no fiber of
    /// order 2 anywhere, and no piece on the non-unique-fibering exception
    /// list. Closed low-genus pieces outside the list get an assumption
    /// warning: their fibering is taken as unique.
    pub fn is_ordinary(&self) -> (bool, Diagnostics) {
        let mut diags = self.validate();
        if !diags.is_clean() {
            return (false, diags);
        }
        for p in &self.pieces {
            if p.has_forbidden_half_slope() {
                diags.error(
                    DiagCode::HalfSlope,
                    p.id.as_str(),
                    "piece carries a fiber of order 2",
                );
                continue;
            }
            if p.is_fibering_exceptional() {
                diags.error(
                    DiagCode::FiberingExceptional,
                    p.id.as_str(),
                    "piece admits more than one Seifert fibering",
                );
                continue;
            }
            if p.boundary_count == 0 && p.genus <= 1 {
                diags.warning(
                    DiagCode::FiberingAssumed,
                    p.id.as_str(),
                    "closed low-genus piece outside the exception list; fibering assumed unique",
                );
            }
        }
        (diags.is_clean(), diags)
    }

    /// Edges whose removal disconnects the graph, in input order. Loops and
    /// members of parallel families are never separating.
    pub fn separating_edges(&self) -> Vec<TorusId> {
        let bridges = self.bridge_flags();
        self.edges
            .iter()
            .enumerate()
            .filter(|(i, _)| bridges[*i])
            .map(|(_, e)| e.id.clone())
            .collect()
    }

    /// Bridge flag per edge index; parallel edges cancel, loops never bridge.
    pub(crate) fn bridge_flags(&self) -> Vec<bool> {
        self.as_multigraph().bridges()
    }

    /// Piece ids on the two sides after cutting one edge, or `None` when the
    /// edge does not separate. The side containing the edge's first endpoint
    /// comes first; both sides are sorted.
    pub fn component_pieces_after_cut(&self, edge: &TorusId) -> Option<(Vec<PieceId>, Vec<PieceId>)> {
        let ei = self.edges.iter().position(|e| &e.id == edge)?;
        let comp = self.components(Some(ei));
        let idx = self.piece_index();
        let a = comp[idx[&self.edges[ei].ends.0]];
        let b = comp[idx[&self.edges[ei].ends.1]];
        if a == b {
            return None;
        }
        let mut side_a = Vec::new();
        let mut side_b = Vec::new();
        for (p, &c) in self.pieces.iter().zip(&comp) {
            if c == a {
                side_a.push(p.id.clone());
            } else if c == b {
                side_b.push(p.id.clone());
            }
        }
        side_a.sort();
        side_b.sort();
        Some((side_a, side_b))
    }

    /// For every piece that lies on a cycle of the graph, two incident edge
    /// slots lying on a common cycle through it, chosen deterministically
    /// (smallest non-bridge slot; its cycle closed by a shortest path). These
    /// are where the builders place the cycle ports.
    pub fn cycle_ports(&self) -> BTreeMap<PieceId, (EdgeSlot, EdgeSlot)> {
        let bridges = self.bridge_flags();
        let idx = self.piece_index();
        let mut out = BTreeMap::new();
        for piece in &self.pieces {
            let v = idx[&piece.id];
            // Incident non-bridge slots in (torus id, slot) order.
            let mut slots: Vec<(usize, u8)> = Vec::new();
            for (ei, e) in self.edges.iter().enumerate() {
                if bridges[ei] {
                    continue;
                }
                if e.ends.0 == piece.id {
                    slots.push((ei, 0));
                }
                if e.ends.1 == piece.id {
                    slots.push((ei, 1));
                }
            }
            slots.sort_by(|a, b| {
                (&self.edges[a.0].id, a.1).cmp(&(&self.edges[b.0].id, b.1))
            });
            let Some(&(ei, slot)) = slots.first() else {
                continue;
            };
            let e = &self.edges[ei];
            if e.ends.0 == e.ends.1 {
                // A loop is its own cycle; both slots are the ports.
                out.insert(
                    piece.id.clone(),
                    (
                        EdgeSlot { torus: e.id.clone(), slot: 0 },
                        EdgeSlot { torus: e.id.clone(), slot: 1 },
                    ),
                );
                continue;
            }
            // Shortest path from the far endpoint back to this piece avoiding
            // the chosen edge; its final edge is the second port.
            let far = if e.ends.0 == piece.id { idx[&e.ends.1] } else { idx[&e.ends.0] };
            let adj = self.adjacency();
            let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.pieces.len()];
            let mut seen = vec![false; self.pieces.len()];
            let mut queue = std::collections::VecDeque::new();
            seen[far] = true;
            queue.push_back(far);
            'bfs: while let Some(u) = queue.pop_front() {
                let mut nbrs: Vec<(usize, usize)> = adj[u]
                    .iter()
                    .copied()
                    .filter(|&(fe, _)| fe != ei)
                    .collect();
                nbrs.sort_by(|a, b| self.edges[a.0].id.cmp(&self.edges[b.0].id));
                for (fe, w) in nbrs {
                    if seen[w] {
                        continue;
                    }
                    seen[w] = true;
                    prev[w] = Some((fe, u));
                    if w == v {
                        break 'bfs;
                    }
                    queue.push_back(w);
                }
            }
            let Some((fe, _)) = prev[v] else {
                // Should not happen for a non-bridge edge; skip defensively.
                continue;
            };
            let f = &self.edges[fe];
            let f_slot = if f.ends.0 == piece.id { 0 } else { 1 };
            out.insert(
                piece.id.clone(),
                (
                    EdgeSlot { torus: e.id.clone(), slot },
                    EdgeSlot { torus: f.id.clone(), slot: f_slot },
                ),
            );
        }
        out
    }

    /// All edge slots incident to a piece, in (torus id, slot) order.
    pub fn incident_slots(&self, piece: &PieceId) -> Vec<EdgeSlot> {
        let mut slots = Vec::new();
        for e in &self.edges {
            if &e.ends.0 == piece {
                slots.push(EdgeSlot { torus: e.id.clone(), slot: 0 });
            }
            if &e.ends.1 == piece {
                slots.push(EdgeSlot { torus: e.id.clone(), slot: 1 });
            }
        }
        slots.sort();
        slots
    }
}
