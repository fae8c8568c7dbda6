//! Top-level decisions.
//!
//! `realize` turns an accepted base link into a verified certificate;
//! `is_realizable` checks a full presentation, base plus operation history,
//! and reports diagnostics-style; `enumerate_links` lists all accepted base
//! links within a saddle budget, as a deterministic test generator.

use thiserror::Error;

use crate::diag::{DiagCode, Diagnostics};
use crate::frh::{assemble_certificate, assign_sigma, verify_certificate, FrhCertificate};
use crate::link::{
    counts, is_jsj_related, resolve_history, IndexedLink, KnotKind, KnotRecord,
};
use crate::lyagraph::{build_piece_graph, glue_graphs, order_blocks, orient};
use crate::manifold::{EdgeSlot, GraphManifold};
use crate::ops::LinkState;
use crate::Slope;

#[derive(Debug, Error, Clone)]
pub enum RealizeError {
    /// The pair failed the acceptance conditions; the diagnostics say why.
    #[error("base link not accepted:\n{0}")]
    NotAccepted(Diagnostics),
    /// Realization starts from a base link; resolve the history first.
    #[error("the link carries {0} history steps; realization takes a base link")]
    HistoryPresent(usize),
}

/// Realize an accepted base link as the closed-orbit link of a flow: build
/// and orient the graph, assign the orbits, and assemble the certificate.
/// Past the acceptance check every failure is a bug, not a rejection: the
/// acceptance conditions entail each pipeline precondition, so internal
/// stages panic instead of returning errors.
pub fn realize(w: &GraphManifold, l: &IndexedLink) -> Result<FrhCertificate, RealizeError> {
    if !l.history.is_empty() {
        return Err(RealizeError::HistoryPresent(l.history.len()));
    }
    let (accepted, diags) = is_jsj_related(w, l);
    if !accepted {
        return Err(RealizeError::NotAccepted(diags));
    }
    let ports = w.cycle_ports();
    let mut piece_graphs = Vec::new();
    let mut sigmas = Vec::new();
    for piece in &w.pieces {
        let c = counts(l, piece).expect("accepted links are base links");
        // A cycle through the piece must enter and leave at the two spine
        // extremes; those slots go first.
        let mut labels: Vec<EdgeSlot> = Vec::new();
        if let Some((a, b)) = ports.get(&piece.id) {
            labels.push(a.clone());
            labels.push(b.clone());
        }
        for slot in w.incident_slots(&piece.id) {
            if !labels.contains(&slot) {
                labels.push(slot);
            }
        }
        let pg = build_piece_graph(piece, c, &labels)
            .expect("accepted counts satisfy the builder inequalities");
        sigmas.push(assign_sigma(&pg, l).expect("accepted counts admit an orbit assignment"));
        piece_graphs.push(pg);
    }
    let (mut glued, projection) =
        glue_graphs(&piece_graphs, w).expect("accepted manifolds glue connectedly");
    for sigma in &sigmas {
        for (leaf, knot) in &sigma.map {
            let p = glued.point_named(leaf).expect("leaves survive gluing");
            let e = glued.incident(p)[0];
            let index = l.knot(knot).expect("assignments map to records").index;
            let head = if index == 0 { p } else { glued.other_end(e, p) };
            glued.orient_edge(e, head);
        }
    }
    let lg = orient(&glued).expect("accepted links admit a Lyapunov orientation");
    let ordered = order_blocks(&lg).expect("acyclic orientations admit a block order");
    let cert = assemble_certificate(w, l, &lg, &projection, &sigmas, &ordered)
        .expect("assembly invariants hold on accepted links");
    let (ok, vdiags) = verify_certificate(w, l, &cert);
    assert!(ok, "assembled certificate must verify:\n{vdiags}");
    Ok(cert)
}

/// Outcome of checking a full presentation: the verdict, the diagnostics
/// behind it, and on success the base certificate plus the resolved history.
#[derive(Debug, Clone)]
pub struct RealizabilityReport {
    pub realizable: bool,
    pub diagnostics: Diagnostics,
    pub certificate: Option<FrhCertificate>,
    pub resolved: Option<LinkState>,
}

/// Decide whether the presented link, base records plus history, is the
/// closed-orbit link of some flow on `w`: the base must be accepted and
/// every history step must validate in order (a change of regular fibers at
/// most once, first). On success the certificate realizes the base and the
/// resolved state gives the final symbolic knot multiset.
pub fn is_realizable(w: &GraphManifold, l: &IndexedLink) -> RealizabilityReport {
    let base = IndexedLink::base(l.knots.clone());
    let (accepted, mut diagnostics) = is_jsj_related(w, &base);
    if !accepted {
        return RealizabilityReport {
            realizable: false,
            diagnostics,
            certificate: None,
            resolved: None,
        };
    }
    let resolved = match resolve_history(w, l) {
        Ok(state) => state,
        Err(e) => {
            diagnostics.error(
                DiagCode::HistoryStepInvalid,
                format!("step {}", e.index),
                e.source.to_string(),
            );
            return RealizabilityReport {
                realizable: false,
                diagnostics,
                certificate: None,
                resolved: None,
            };
        }
    };
    let certificate = realize(w, &base).expect("accepted base links realize");
    RealizabilityReport {
        realizable: true,
        diagnostics,
        certificate: Some(certificate),
        resolved: Some(resolved),
    }
}

/// All accepted base links on `w` with at most `max_saddles` index-1
/// components in total, one representative per class under interchanging
/// same-index regular fibers of a piece. Deterministic order: per-piece
/// saddle counts ascend lexicographically along `w.pieces`; within a count,
/// singular-fiber indices (slope order, 0 before 2), then the number of
/// index-0 regular fibers. The stream is materialized; the space grows
/// exponentially in the budget and the singular fiber counts.
pub fn enumerate_links(w: &GraphManifold, max_saddles: u32) -> Vec<IndexedLink> {
    let (ordinary, _) = w.is_ordinary();
    assert!(ordinary, "enumeration requires an ordinary manifold");
    let mut feasible: Vec<Vec<u32>> = Vec::new();
    for p in &w.pieces {
        let g = i64::from(p.genus);
        let b = i64::from(p.boundary_count);
        let m = p.singular_count() as i64;
        assert!(m <= 20, "enumeration is exponential in singular fibers per piece");
        if (g == 0 && b == 0 && m < 4) || (g == 0 && b == 1 && m < 2) {
            return Vec::new();
        }
        let xs: Vec<u32> = (1..=i64::from(max_saddles))
            .filter(|&x| {
                let z = x - 2 * g + 2 - b;
                z >= m && z + b >= 2 && !((b == 0 || g >= 1) && x < 2)
            })
            .map(|x| x as u32)
            .collect();
        if xs.is_empty() {
            return Vec::new();
        }
        feasible.push(xs);
    }
    // Minimum saddle budget for pieces i.. , for pruning.
    let mut suffix_min = vec![0u32; w.pieces.len() + 1];
    for i in (0..w.pieces.len()).rev() {
        suffix_min[i] = suffix_min[i + 1] + feasible[i][0];
    }
    let mut out = Vec::new();
    let mut choice = Vec::new();
    extend_choices(w, &feasible, &suffix_min, max_saddles, &mut choice, &mut out);
    out
}

/// Per-piece choice of an enumeration candidate: saddle count, singular
/// index bitmask (bit set means index 2), count of index-0 regular fibers.
type PieceChoice = (u32, u32, u32);

fn extend_choices(
    w: &GraphManifold,
    feasible: &[Vec<u32>],
    suffix_min: &[u32],
    budget: u32,
    choice: &mut Vec<PieceChoice>,
    out: &mut Vec<IndexedLink>,
) {
    let i = choice.len();
    if i == w.pieces.len() {
        let candidate = build_candidate(w, choice);
        if is_jsj_related(w, &candidate).0 {
            out.push(candidate);
        }
        return;
    }
    let p = &w.pieces[i];
    let m = p.singular_count() as u32;
    for &x in &feasible[i] {
        if x + suffix_min[i + 1] > budget {
            break;
        }
        let z = (i64::from(x) - 2 * i64::from(p.genus) + 2 - i64::from(p.boundary_count)) as u32;
        let regular = z - m;
        for mask in 0..1u32 << m {
            for zeros in 0..=regular {
                choice.push((x, mask, zeros));
                extend_choices(w, feasible, suffix_min, budget - x, choice, out);
                choice.pop();
            }
        }
    }
}

fn build_candidate(w: &GraphManifold, choice: &[PieceChoice]) -> IndexedLink {
    let mut knots = Vec::new();
    for (p, &(x, mask, zeros)) in w.pieces.iter().zip(choice) {
        let mut slopes: Vec<&Slope> = p.singular_slopes();
        slopes.sort();
        for (j, s) in slopes.iter().enumerate() {
            let index = if mask >> j & 1 == 1 { 2 } else { 0 };
            knots.push(KnotRecord::new(
                format!("{}.k{}", p.id, j + 1),
                p.id.clone(),
                index,
                KnotKind::SingularFiber((*s).clone()),
            ));
        }
        let z = (i64::from(x) - 2 * i64::from(p.genus) + 2 - i64::from(p.boundary_count)) as u32;
        for j in 0..z - slopes.len() as u32 {
            let index = if j < zeros { 0 } else { 2 };
            knots.push(KnotRecord::new(
                format!("{}.r{}", p.id, j + 1),
                p.id.clone(),
                index,
                KnotKind::RegularFiber,
            ));
        }
        for j in 0..x {
            knots.push(KnotRecord::new(
                format!("{}.s{}", p.id, j + 1),
                p.id.clone(),
                1,
                KnotKind::RegularFiber,
            ));
        }
    }
    IndexedLink::base(knots)
}
