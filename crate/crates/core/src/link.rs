//! Indexed links presented symbolically over a graph manifold.
//!
//! A link is a multiset of fiber records. Each record names the piece it
//! lives in, an index in {0, 1, 2} (dimension of the unstable manifold of the
//! would-be closed orbit), and a kind: a singular fiber carries its slope, a
//! regular fiber does not, and a cabled pair only appears after a
//! change-of-fibers step. On top of the base records a link may carry a
//! history of operations; every decision about the base ignores the history.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_traits::Signed;
use serde::de;
use serde::ser::SerializeTuple;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::diag::{DiagCode, Diagnostics};
use crate::ids::{KnotId, PieceId};
use crate::manifold::GraphManifold;
use crate::ops::OperationStep;
use crate::seifert::SeifertPiece;
use crate::{Int, Slope};

/// A primitive class a·(fiber) + b·(section) on a torus, the parameter of a
/// cabling. Normalized so the first nonzero entry is positive; (1, 0) is the
/// fiber class itself.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CableClass {
    a: Int,
    b: Int,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassError {
    #[error("cable class is not a primitive pair")]
    NotPrimitive,
}

impl CableClass {
    pub fn new(a: Int, b: Int) -> Result<Self, ClassError> {
        let g = a.gcd(&b);
        if g != Int::from(1) {
            return Err(ClassError::NotPrimitive);
        }
        let flip = a.is_negative() || (a == Int::from(0) && b.is_negative());
        if flip {
            Ok(CableClass { a: -a, b: -b })
        } else {
            Ok(CableClass { a, b })
        }
    }

    pub fn fiber() -> Self {
        CableClass { a: Int::from(1), b: Int::from(0) }
    }

    pub fn is_fiber(&self) -> bool {
        self.a == Int::from(1) && self.b == Int::from(0)
    }

    pub fn first(&self) -> &Int {
        &self.a
    }

    pub fn second(&self) -> &Int {
        &self.b
    }
}

impl fmt::Display for CableClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

impl fmt::Debug for CableClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

/// Serialized as the two-element array [a, b], full precision.
impl Serialize for CableClass {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut t = serializer.serialize_tuple(2)?;
        for v in [&self.a, &self.b] {
            let n: serde_json::Number = v
                .to_string()
                .parse()
                .map_err(|_| serde::ser::Error::custom("class entry is not a JSON number"))?;
            t.serialize_element(&n)?;
        }
        t.end()
    }
}

impl<'de> Deserialize<'de> for CableClass {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> de::Visitor<'de> for V {
            type Value = CableClass;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an [a, b] integer pair")
            }
            fn visit_seq<A: de::SeqAccess<'de>>(self, mut seq: A) -> Result<CableClass, A::Error> {
                let a: serde_json::Number =
                    seq.next_element()?.ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let b: serde_json::Number =
                    seq.next_element()?.ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if seq.next_element::<serde_json::Number>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                let a = Int::from_str(&a.to_string())
                    .map_err(|_| de::Error::custom("class entry is not an integer"))?;
                let b = Int::from_str(&b.to_string())
                    .map_err(|_| de::Error::custom("class entry is not an integer"))?;
                CableClass::new(a, b).map_err(|e| de::Error::custom(e.to_string()))
            }
        }
        deserializer.deserialize_tuple(2, V)
    }
}

/// What a link record is: a singular fiber (with its slope), a regular fiber,
/// or a member of a cabled pair produced by a change-of-fibers step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KnotKind {
    SingularFiber(Slope),
    RegularFiber,
    CabledPair(CableClass),
}

/// One component of an indexed link.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnotRecord {
    pub id: KnotId,
    pub piece: PieceId,
    pub index: u8,
    pub kind: KnotKind,
}

impl KnotRecord {
    pub fn new(id: impl Into<KnotId>, piece: impl Into<PieceId>, index: u8, kind: KnotKind) -> Self {
        KnotRecord { id: id.into(), piece: piece.into(), index, kind }
    }

    /// Index-1 records become the saddle orbits.
    pub fn is_saddle(&self) -> bool {
        self.index == 1
    }

    /// Index-0 and index-2 records become the closed attracting/repelling
    /// orbits, the degree-1 vertices of the Lyapunov graph.
    pub fn is_end_knot(&self) -> bool {
        self.index == 0 || self.index == 2
    }
}

#[derive(Serialize, Deserialize)]
struct KnotRecordWire {
    id: KnotId,
    piece: PieceId,
    index: u8,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slope: Option<Slope>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class: Option<CableClass>,
}

impl Serialize for KnotRecord {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let (kind, slope, class) = match &self.kind {
            KnotKind::SingularFiber(s) => ("singular", Some(s.clone()), None),
            KnotKind::RegularFiber => ("regular", None, None),
            KnotKind::CabledPair(c) => ("cabled", None, Some(c.clone())),
        };
        KnotRecordWire {
            id: self.id.clone(),
            piece: self.piece.clone(),
            index: self.index,
            kind: kind.to_string(),
            slope,
            class,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for KnotRecord {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let w = KnotRecordWire::deserialize(deserializer)?;
        if w.index > 2 {
            return Err(de::Error::custom(format!("knot index {} out of range", w.index)));
        }
        let kind = match w.kind.as_str() {
            "singular" => {
                let s = w.slope.ok_or_else(|| de::Error::custom("singular knot needs a slope"))?;
                if w.class.is_some() {
                    return Err(de::Error::custom("singular knot must not carry a class"));
                }
                KnotKind::SingularFiber(s)
            }
            "regular" => {
                if w.slope.is_some() || w.class.is_some() {
                    return Err(de::Error::custom("regular knot carries no slope or class"));
                }
                KnotKind::RegularFiber
            }
            "cabled" => {
                let c = w.class.ok_or_else(|| de::Error::custom("cabled knot needs a class"))?;
                if w.slope.is_some() {
                    return Err(de::Error::custom("cabled knot must not carry a slope"));
                }
                KnotKind::CabledPair(c)
            }
            other => return Err(de::Error::custom(format!("unknown knot kind {other:?}"))),
        };
        Ok(KnotRecord { id: w.id, piece: w.piece, index: w.index, kind })
    }
}

/// An indexed link: base records plus an operation history. All structural
/// decisions read the base; the history is folded separately.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexedLink {
    pub knots: Vec<KnotRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<OperationStep>,
}

impl IndexedLink {
    pub fn base(knots: Vec<KnotRecord>) -> Self {
        IndexedLink { knots, history: Vec::new() }
    }

    pub fn knot(&self, id: &KnotId) -> Option<&KnotRecord> {
        self.knots.iter().find(|k| &k.id == id)
    }

    pub fn knots_in<'a>(&'a self, piece: &'a PieceId) -> impl Iterator<Item = &'a KnotRecord> {
        self.knots.iter().filter(move |k| &k.piece == piece)
    }
}

/// Per-piece census of a base link. `y` is filled in by the graph builder
/// (vertices flanked by two degree-1 neighbors); plain counting leaves it 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PieceCounts {
    /// Index-1 records: saddle orbits, trivalent vertices.
    pub x: u32,
    /// Index-0/2 records: attracting/repelling orbits, degree-1 vertices.
    pub z: u32,
    /// Singular fibers of the piece itself.
    pub m: u32,
    /// Saddle vertices adjacent to two degree-1 vertices, once built.
    pub y: u32,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CountsError {
    #[error("counts apply to base links only; resolve the history first")]
    UseBaseOnly,
}

/// Count a base link's records lying in one piece.
pub fn counts(l: &IndexedLink, piece: &SeifertPiece) -> Result<PieceCounts, CountsError> {
    if !l.history.is_empty() {
        return Err(CountsError::UseBaseOnly);
    }
    let mut x = 0;
    let mut z = 0;
    for k in l.knots_in(&piece.id) {
        if k.is_saddle() {
            x += 1;
        } else {
            z += 1;
        }
    }
    Ok(PieceCounts { x, z, m: piece.singular_count() as u32, y: 0 })
}

/// Structural checks on the base records alone: unique ids, known pieces,
/// coherent kind/index combinations, and no cabled pairs before any history.
pub fn validate_link(w: &GraphManifold, l: &IndexedLink) -> Diagnostics {
    let mut diags = Diagnostics::new();
    let mut seen = BTreeSet::new();
    for k in &l.knots {
        if !seen.insert(&k.id) {
            diags.error(DiagCode::DuplicateId, k.id.as_str(), "duplicate knot id");
        }
        if w.piece(&k.piece).is_none() {
            diags.error(
                DiagCode::UnknownPiece,
                k.id.as_str(),
                format!("knot lies in unknown piece {}", k.piece),
            );
        }
        match &k.kind {
            KnotKind::SingularFiber(_) if k.index == 1 => {
                diags.error(
                    DiagCode::BadIndexForKind,
                    k.id.as_str(),
                    "a singular fiber must have index 0 or 2",
                );
            }
            KnotKind::CabledPair(_) => {
                diags.error(
                    DiagCode::CabledPairInBase,
                    k.id.as_str(),
                    "cabled pairs arise only from a change-of-fibers step, not in a base link",
                );
            }
            _ => {}
        }
        if k.index > 2 {
            diags.error(DiagCode::BadIndexForKind, k.id.as_str(), "knot index out of range");
        }
    }
    diags
}

/// Decide whether the base link is related to the torus decomposition of an
/// ordinary graph manifold: condition (1), an index-0/2 component on each
/// side of every separating torus (and both extreme indices present at all);
/// condition (2), the singular fibers of each piece appear exactly once each
/// as index-0/2 records; condition (3), per piece z + b = x − 2g + 2.
///
/// The trailing inequality diagnostics are consequences of (1)–(3) on
/// ordinary manifolds and can only fire alongside a primary failure.
pub fn is_jsj_related(w: &GraphManifold, l: &IndexedLink) -> (bool, Diagnostics) {
    let (ordinary, mut diags) = w.is_ordinary();
    if !ordinary {
        return (false, diags);
    }
    diags.merge(validate_link(w, l));
    if !diags.is_clean() {
        return (false, diags);
    }

    // Condition (2): per piece, singular records match the piece's singular
    // fiber multiset.
    for p in &w.pieces {
        let mut have: Vec<Slope> = l
            .knots_in(&p.id)
            .filter_map(|k| match &k.kind {
                KnotKind::SingularFiber(s) => Some(s.clone()),
                _ => None,
            })
            .collect();
        have.sort();
        let mut want: Vec<Slope> = p.singular_slopes().into_iter().cloned().collect();
        want.sort();
        if have != want {
            let have_s: Vec<String> = have.iter().map(|s| s.to_string()).collect();
            let want_s: Vec<String> = want.iter().map(|s| s.to_string()).collect();
            diags.error(
                DiagCode::SingularFiberMultisetMismatch,
                p.id.as_str(),
                format!(
                    "singular records [{}] do not match the piece's singular fibers [{}]",
                    have_s.join(", "),
                    want_s.join(", ")
                ),
            );
        }
    }

    // Condition (1), global part: both extreme indices occur.
    if !l.knots.iter().any(|k| k.index == 0) {
        diags.error(DiagCode::MissingIndexZero, "-", "link has no index-0 component");
    }
    if !l.knots.iter().any(|k| k.index == 2) {
        diags.error(DiagCode::MissingIndexTwo, "-", "link has no index-2 component");
    }

    // Condition (1), separating part: each side of each separating torus
    // contains an index-0/2 component.
    for t in w.separating_edges() {
        let Some((left, right)) = w.component_pieces_after_cut(&t) else {
            continue;
        };
        for side in [&left, &right] {
            let pieces: BTreeSet<&PieceId> = side.iter().collect();
            let has_end = l.knots.iter().any(|k| k.is_end_knot() && pieces.contains(&k.piece));
            if !has_end {
                diags.error(
                    DiagCode::SeparatingTorusSideWithoutKnot,
                    t.as_str(),
                    format!(
                        "the side containing piece {} has no index-0/2 component",
                        side.first().map(|p| p.as_str()).unwrap_or("-")
                    ),
                );
            }
        }
    }

    // Condition (3) and its consequences, per piece.
    let mut total_z: i64 = 0;
    let mut total_x: i64 = 0;
    let mut total_g: i64 = 0;
    for p in &w.pieces {
        let c = counts(l, p).expect("base link checked above");
        let (x, z, m) = (c.x as i64, c.z as i64, c.m as i64);
        let b = p.boundary_count as i64;
        let g = p.genus as i64;
        total_z += z;
        total_x += x;
        total_g += g;
        if z + b != x - 2 * g + 2 {
            diags.error(
                DiagCode::CountIdentityViolated,
                p.id.as_str(),
                format!("condition (3) violated: {z}+{b} != {x}-{}+2", 2 * g),
            );
        }
        if b + z < 2 {
            diags.error(
                DiagCode::BoundaryPlusEndKnotsTooFew,
                p.id.as_str(),
                format!("boundary tori plus index-0/2 components must total at least 2, got {b}+{z}"),
            );
        }
        if m > z {
            diags.error(
                DiagCode::SingularExceedsEndKnots,
                p.id.as_str(),
                format!("{m} singular fibers need {m} index-0/2 components, got {z}"),
            );
        }
        if x == 0 {
            diags.error(DiagCode::NoIndexOneKnot, p.id.as_str(), "piece has no index-1 component");
        }
        if (b == 0 || g >= 1) && x < 2 {
            diags.error(
                DiagCode::IndexOneKnotsTooFew,
                p.id.as_str(),
                format!("piece needs at least 2 index-1 components, got {x}"),
            );
        }
        if g == 0 && b == 0 && m < 4 {
            diags.error(
                DiagCode::SingularTooFewClosed,
                p.id.as_str(),
                format!("closed genus-0 piece needs at least 4 singular fibers, got {m}"),
            );
        }
        if g == 0 && b == 1 && m < 2 {
            diags.error(
                DiagCode::SingularTooFewDisk,
                p.id.as_str(),
                format!("one-holed genus-0 piece needs at least 2 singular fibers, got {m}"),
            );
        }
    }
    if total_z < 2 {
        diags.error(
            DiagCode::TotalEndKnotsTooFew,
            "-",
            format!("link needs at least 2 index-0/2 components in total, got {total_z}"),
        );
    }

    let accepted = diags.is_clean();
    if accepted {
        // Summing condition (3) over pieces: every boundary torus is shared
        // by exactly two edge slots.
        let e = w.edges.len() as i64;
        let s = w.pieces.len() as i64;
        assert_eq!(total_z + 2 * e, total_x - 2 * total_g + 2 * s, "summed count identity");
    }
    (accepted, diags)
}

/// Resolve the history into a final symbolic knot multiset. Delegates each
/// step to the operations module; the first invalid step aborts with its
/// index.
pub fn resolve_history(
    w: &GraphManifold,
    l: &IndexedLink,
) -> Result<crate::ops::LinkState, crate::ops::HistoryError> {
    crate::ops::run_history(w, l)
}

/// Group the index-0/2 records of one piece by kind, for assignment order:
/// singular fibers sorted by slope, then regular fibers by id.
pub(crate) fn end_knots_in_assignment_order<'a>(
    l: &'a IndexedLink,
    piece: &'a PieceId,
) -> Vec<&'a KnotRecord> {
    let mut singular: Vec<&KnotRecord> = Vec::new();
    let mut regular: Vec<&KnotRecord> = Vec::new();
    for k in l.knots_in(piece) {
        if !k.is_end_knot() {
            continue;
        }
        match &k.kind {
            KnotKind::SingularFiber(_) => singular.push(k),
            _ => regular.push(k),
        }
    }
    singular.sort_by(|a, b| {
        let sa = match &a.kind {
            KnotKind::SingularFiber(s) => s,
            _ => unreachable!(),
        };
        let sb = match &b.kind {
            KnotKind::SingularFiber(s) => s,
            _ => unreachable!(),
        };
        sa.cmp(sb).then_with(|| a.id.cmp(&b.id))
    });
    regular.sort_by(|a, b| a.id.cmp(&b.id));
    singular.into_iter().chain(regular).collect()
}

/// Saddle (index-1) records of one piece in id order.
pub(crate) fn saddles_in_id_order<'a>(l: &'a IndexedLink, piece: &'a PieceId) -> Vec<&'a KnotRecord> {
    let mut out: Vec<&KnotRecord> = l.knots_in(piece).filter(|k| k.is_saddle()).collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}
