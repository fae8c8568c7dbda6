//! Seeded generators shared by the integration suites: admissible manifolds,
//! accepted base links over them, and budgets for the link enumerator.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use nmslink_core::link::is_jsj_related;
use nmslink_core::{
    GraphManifold, IndexedLink, Int, JsjEdge, KnotKind, KnotRecord, SeifertPiece, Slope,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sl(q: i64, p: i64) -> Slope {
    Slope::new(Int::from(q), Int::from(p)).expect("reduced slope")
}

/// A random singular slope avoiding order 2 (so the piece stays admissible).
pub fn random_singular_slope(r: &mut ChaCha8Rng) -> Slope {
    let p: i64 = *[3, 4, 5, 7].choose(r).expect("non-empty");
    let q = match p {
        4 => *[1, 3].choose(r).expect("non-empty"),
        _ => r.gen_range(1..p),
    };
    sl(q, p)
}

/// Smallest per-piece singular-fiber count that keeps the piece admissible
/// and satisfiable: closed and one-holed genus-0 bases need extra fibers.
fn singular_floor(genus: u32, boundary: u32) -> u32 {
    if genus != 0 {
        return 0;
    }
    match boundary {
        0 => 4,
        1 => 2,
        2 => 1,
        _ => 0,
    }
}

/// A random admissible closed presentation with `n_pieces` pieces: a random
/// connected decomposition graph (spanning tree plus up to two extra edges),
/// genera up to `max_genus`, and singular-fiber counts up to `max_singular`
/// past each piece's floor.
pub fn random_ordinary_manifold(
    r: &mut ChaCha8Rng,
    n_pieces: usize,
    max_singular: u32,
    max_genus: u32,
) -> GraphManifold {
    assert!(n_pieces >= 1);
    let mut edges = Vec::new();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 1..n_pieces {
        pairs.push((r.gen_range(0..i), i));
    }
    if n_pieces >= 2 {
        for _ in 0..r.gen_range(0..=2u32) {
            let a = r.gen_range(0..n_pieces);
            let b = r.gen_range(0..n_pieces);
            if a != b {
                pairs.push((a.min(b), a.max(b)));
            }
        }
    }
    let mut boundary = vec![0u32; n_pieces];
    for (t, &(a, b)) in pairs.iter().enumerate() {
        boundary[a] += 1;
        boundary[b] += 1;
        edges.push(JsjEdge {
            id: format!("t{}", t + 1).into(),
            ends: (format!("P{}", a + 1).into(), format!("P{}", b + 1).into()),
        });
    }
    let mut pieces = Vec::new();
    for (i, &b) in boundary.iter().enumerate() {
        let genus = r.gen_range(0..=max_genus);
        let floor = singular_floor(genus, b);
        let m = floor.max(r.gen_range(0..=max_singular));
        let mut slopes: Vec<Slope> = (0..m).map(|_| random_singular_slope(r)).collect();
        if r.gen_bool(0.15) {
            // A denominator-1 marker on a regular fiber; affects no count.
            slopes.push(sl(r.gen_range(0..3), 1));
        }
        pieces.push(SeifertPiece::new(format!("P{}", i + 1), genus, b, slopes));
    }
    let w = GraphManifold::new(pieces, edges);
    let (ok, diags) = w.is_ordinary();
    assert!(ok, "generator must emit admissible manifolds:\n{diags}");
    w
}

/// Smallest admissible number of index-0/2 records for a piece.
pub fn end_knot_floor(piece: &SeifertPiece) -> i64 {
    let g = piece.genus as i64;
    let b = piece.boundary_count as i64;
    let m = piece.singular_count() as i64;
    let mut floor = m.max(2 - b).max(3 - b - 2 * g).max(0);
    if b == 0 || g >= 1 {
        floor = floor.max(4 - b - 2 * g);
    }
    floor
}

/// A random base link the acceptance predicate provably accepts: end-knot
/// counts start at their floors, separating-torus sides and the global total
/// are topped up, saddle counts come from the per-piece identity, and the
/// extreme indices are patched to occur on both ends of the flow.
pub fn accepted_link(r: &mut ChaCha8Rng, w: &GraphManifold) -> IndexedLink {
    let mut z: Vec<i64> = w
        .pieces
        .iter()
        .map(|p| end_knot_floor(p) + r.gen_range(0..=2))
        .collect();
    let index_of: std::collections::BTreeMap<&str, usize> =
        w.pieces.iter().enumerate().map(|(i, p)| (p.id.as_str(), i)).collect();
    loop {
        let mut bumped = false;
        for t in w.separating_edges() {
            let Some((left, right)) = w.component_pieces_after_cut(&t) else {
                continue;
            };
            for side in [&left, &right] {
                let total: i64 = side.iter().map(|p| z[index_of[p.as_str()]]).sum();
                if total == 0 {
                    let pick = side.choose(r).expect("non-empty side");
                    z[index_of[pick.as_str()]] += 1;
                    bumped = true;
                }
            }
        }
        if z.iter().sum::<i64>() < 2 {
            let pick = r.gen_range(0..z.len());
            z[pick] += 1;
            bumped = true;
        }
        if !bumped {
            break;
        }
    }
    let mut knots = Vec::new();
    for (i, p) in w.pieces.iter().enumerate() {
        let g = p.genus as i64;
        let b = p.boundary_count as i64;
        let x = z[i] + b + 2 * g - 2;
        assert!(x >= 1, "identity keeps the saddle count positive");
        for (j, s) in p.singular_slopes().into_iter().enumerate() {
            let index = if r.gen_bool(0.5) { 0 } else { 2 };
            knots.push(KnotRecord::new(
                format!("{}k{}", p.id, j + 1),
                p.id.clone(),
                index,
                KnotKind::SingularFiber(s.clone()),
            ));
        }
        for j in 0..z[i] - p.singular_count() as i64 {
            let index = if r.gen_bool(0.5) { 0 } else { 2 };
            knots.push(KnotRecord::new(
                format!("{}r{}", p.id, j + 1),
                p.id.clone(),
                index,
                KnotKind::RegularFiber,
            ));
        }
        for j in 0..x {
            knots.push(KnotRecord::new(
                format!("{}s{}", p.id, j + 1),
                p.id.clone(),
                1,
                KnotKind::RegularFiber,
            ));
        }
    }
    let ends: Vec<usize> =
        (0..knots.len()).filter(|&i| knots[i].is_end_knot()).collect();
    assert!(ends.len() >= 2, "global end-knot total is at least 2");
    if !knots.iter().any(|k| k.index == 0) {
        knots[*ends.choose(r).expect("non-empty")].index = 0;
    }
    if !knots.iter().any(|k| k.index == 2) {
        let zero = knots.iter().position(|k| k.index == 0).expect("just ensured");
        let pick = loop {
            let c = *ends.choose(r).expect("non-empty");
            if c != zero {
                break c;
            }
        };
        knots[pick].index = 2;
    }
    let l = IndexedLink::base(knots);
    let (ok, diags) = is_jsj_related(w, &l);
    assert!(ok, "generator must emit accepted links:\n{diags}");
    l
}

/// Minimal admissible saddle count of one piece, via the identity.
pub fn min_saddles(piece: &SeifertPiece) -> i64 {
    end_knot_floor(piece) + piece.boundary_count as i64 + 2 * piece.genus as i64 - 2
}

/// A chain manifold A - M1 - ... - Mk - B: singularly-fibered one-holed
/// endpoints, positive-genus product-free middles. Its minimal-budget
/// enumeration stays small while exercising 4-6 pieces and bridge edges.
pub fn chain_manifold(r: &mut ChaCha8Rng, n_pieces: usize) -> GraphManifold {
    assert!(n_pieces >= 3);
    let mut pieces = Vec::new();
    let mut edges = Vec::new();
    for i in 0..n_pieces {
        let endpoint = i == 0 || i + 1 == n_pieces;
        let (genus, b, m) = if endpoint {
            (0, 1, 2 + r.gen_range(0..=1))
        } else {
            (r.gen_range(1..=2), 2, 0)
        };
        let slopes = (0..m).map(|_| random_singular_slope(r)).collect();
        pieces.push(SeifertPiece::new(format!("P{}", i + 1), genus, b, slopes));
    }
    for i in 1..n_pieces {
        edges.push(JsjEdge {
            id: format!("t{i}").into(),
            ends: (format!("P{i}").into(), format!("P{}", i + 1).into()),
        });
    }
    let w = GraphManifold::new(pieces, edges);
    let (ok, diags) = w.is_ordinary();
    assert!(ok, "chain manifolds are admissible:\n{diags}");
    w
}

/// The manifold corpus behind the enumeration-based criteria: each entry is
/// a manifold plus a saddle budget its enumeration can afford.
pub fn enumeration_corpus(seed: u64) -> Vec<(GraphManifold, u32)> {
    let r = &mut rng(seed);
    let mut out = Vec::new();
    for _ in 0..12 {
        let w = random_ordinary_manifold(r, 1, 4, 3);
        let budget = min_saddles(&w.pieces[0]) + 3;
        out.push((w, budget as u32));
    }
    for _ in 0..6 {
        let w = random_ordinary_manifold(r, 2, 4, 3);
        let budget: i64 = w.pieces.iter().map(min_saddles).sum::<i64>() + 2;
        out.push((w, budget as u32));
    }
    for _ in 0..4 {
        let w = random_ordinary_manifold(r, 3, 4, 3);
        let budget: i64 = w.pieces.iter().map(min_saddles).sum::<i64>() + 1;
        out.push((w, budget as u32));
    }
    for _ in 0..8 {
        let n = 4 + (out.len() % 3);
        let w = chain_manifold(r, n);
        let budget: i64 = w.pieces.iter().map(min_saddles).sum();
        out.push((w, budget as u32));
    }
    out
}
