//! Hand-checked inputs shared across unit tests.

use crate::link::{IndexedLink, KnotKind, KnotRecord};
use crate::manifold::{GraphManifold, JsjEdge};
use crate::seifert::SeifertPiece;
use crate::Slope;

pub fn sl(q: i64, p: i64) -> Slope {
    Slope::new(q.into(), p.into()).unwrap()
}

/// One closed genus-2 piece with three singular fibers. The accepted link
/// has four end knots and six saddles: 4 + 0 = 6 - 4 + 2.
pub fn seven_example() -> (GraphManifold, IndexedLink) {
    let w = GraphManifold::new(
        vec![SeifertPiece::new("P", 2, 0, vec![sl(1, 3), sl(1, 4), sl(1, 5)])],
        vec![],
    );
    let mut knots = vec![
        KnotRecord::new("k1", "P", 0, KnotKind::SingularFiber(sl(1, 3))),
        KnotRecord::new("k2", "P", 0, KnotKind::SingularFiber(sl(1, 4))),
        KnotRecord::new("k3", "P", 2, KnotKind::SingularFiber(sl(1, 5))),
        KnotRecord::new("k4", "P", 2, KnotKind::RegularFiber),
    ];
    for i in 0..6 {
        knots.push(KnotRecord::new(format!("s{i}"), "P", 1, KnotKind::RegularFiber));
    }
    (w, IndexedLink::base(knots))
}

/// Two one-holed pieces joined along one torus, one saddle each.
pub fn two_piece() -> (GraphManifold, IndexedLink) {
    let w = GraphManifold::new(
        vec![
            SeifertPiece::new("A", 0, 1, vec![sl(1, 3), sl(1, 4)]),
            SeifertPiece::new("B", 0, 1, vec![sl(1, 3), sl(2, 5)]),
        ],
        vec![JsjEdge { id: "t".into(), ends: ("A".into(), "B".into()) }],
    );
    let l = IndexedLink::base(vec![
        KnotRecord::new("a1", "A", 0, KnotKind::SingularFiber(sl(1, 3))),
        KnotRecord::new("a2", "A", 2, KnotKind::SingularFiber(sl(1, 4))),
        KnotRecord::new("a3", "A", 1, KnotKind::RegularFiber),
        KnotRecord::new("b1", "B", 0, KnotKind::SingularFiber(sl(1, 3))),
        KnotRecord::new("b2", "B", 2, KnotKind::SingularFiber(sl(2, 5))),
        KnotRecord::new("b3", "B", 1, KnotKind::RegularFiber),
    ]);
    (w, l)
}

/// Like `two_piece`, but piece A carries an extra regular end knot and a
/// second saddle, so some of its torus sets contain a thickened-torus block
/// (a one-saddle block whose single leaf is a regular fiber).
pub fn two_piece_with_product_block() -> (GraphManifold, IndexedLink) {
    let w = GraphManifold::new(
        vec![
            SeifertPiece::new("A", 0, 1, vec![sl(1, 3), sl(1, 4)]),
            SeifertPiece::new("B", 0, 1, vec![sl(1, 3), sl(2, 5)]),
        ],
        vec![JsjEdge { id: "t".into(), ends: ("A".into(), "B".into()) }],
    );
    let l = IndexedLink::base(vec![
        KnotRecord::new("a1", "A", 0, KnotKind::SingularFiber(sl(1, 3))),
        KnotRecord::new("a2", "A", 2, KnotKind::SingularFiber(sl(1, 4))),
        KnotRecord::new("a3", "A", 1, KnotKind::RegularFiber),
        KnotRecord::new("a4", "A", 0, KnotKind::RegularFiber),
        KnotRecord::new("a5", "A", 1, KnotKind::RegularFiber),
        KnotRecord::new("b1", "B", 0, KnotKind::SingularFiber(sl(1, 3))),
        KnotRecord::new("b2", "B", 2, KnotKind::SingularFiber(sl(2, 5))),
        KnotRecord::new("b3", "B", 1, KnotKind::RegularFiber),
    ]);
    (w, l)
}
