//! The link operations: the closed operation list I–VII, the S³ link grammar
//! they generate, incompressible torus sets related to a link, and the change
//! of regular fibers.
//!
//! Links built here are symbolic multisets of knot descriptors. Operations
//! never embed curves; they rewrite descriptors, and every rewrite asserts
//! its exact count delta and preserves the presence of both extreme indices.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_traits::Signed;
use serde::de;
use serde::ser::SerializeTuple;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::diag::{DiagCode, Diagnostics};
use crate::graphs::MultiGraph;
use crate::ids::{KnotId, PieceId, TorusId};
use crate::link::{self, CableClass, IndexedLink, KnotKind};
use crate::manifold::GraphManifold;
use crate::Int;

/// A raw integer pair as written in manifests. Unlike [`CableClass`] it is
/// not normalized or checked at parse time, so invalid parameters surface as
/// step validation failures rather than parse failures.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassPair(pub Int, pub Int);

impl ClassPair {
    pub fn to_class(&self) -> Result<CableClass, crate::link::ClassError> {
        CableClass::new(self.0.clone(), self.1.clone())
    }
}

impl fmt::Display for ClassPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.0, self.1)
    }
}

impl fmt::Debug for ClassPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.0, self.1)
    }
}

impl Serialize for ClassPair {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut t = serializer.serialize_tuple(2)?;
        for v in [&self.0, &self.1] {
            let n: serde_json::Number = v
                .to_string()
                .parse()
                .map_err(|_| serde::ser::Error::custom("class entry is not a JSON number"))?;
            t.serialize_element(&n)?;
        }
        t.end()
    }
}

impl<'de> Deserialize<'de> for ClassPair {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> de::Visitor<'de> for V {
            type Value = ClassPair;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a [a, b] integer pair")
            }
            fn visit_seq<A: de::SeqAccess<'de>>(self, mut seq: A) -> Result<ClassPair, A::Error> {
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
                Ok(ClassPair(a, b))
            }
        }
        deserializer.deserialize_tuple(2, V)
    }
}

/// Expression tree generating indexed links in S³ over the closed operation
/// list, with the North–South-flow two-component unknot as the axiom. The
/// axiom evaluation lives in [`hopf_ns_axiom`]; further seeds can be added
/// there without touching the grammar.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op")]
pub enum S3LinkExpr {
    #[serde(rename = "hopf_ns")]
    HopfNS,
    I {
        l1: Box<S3LinkExpr>,
        l2: Box<S3LinkExpr>,
    },
    II {
        l1: Box<S3LinkExpr>,
        l2: Box<S3LinkExpr>,
        drop: String,
    },
    III {
        l1: Box<S3LinkExpr>,
        knot: String,
        l2: Box<S3LinkExpr>,
    },
    IV {
        l1: Box<S3LinkExpr>,
        knot: String,
        l2: Box<S3LinkExpr>,
        drop: String,
    },
    V {
        l1: Box<S3LinkExpr>,
        knot: String,
        l2: Box<S3LinkExpr>,
        sum_with: String,
        index: u8,
    },
    VI {
        l1: Box<S3LinkExpr>,
        knot: String,
        class: ClassPair,
        core_index: u8,
        cable_index: u8,
    },
    VII {
        l1: Box<S3LinkExpr>,
        knot: String,
        #[serde(with = "crate::slope::bigint_json")]
        q: Int,
    },
}

/// One step of a link's history. The running link plays the role of the
/// first factor; S³ factors are given as expressions. Variants keep the
/// Roman numerals of the operation list.
#[allow(clippy::upper_case_acronyms)]
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op")]
pub enum OperationStep {
    I {
        l2: S3LinkExpr,
    },
    II {
        l2: S3LinkExpr,
        drop: String,
    },
    III {
        knot: String,
        l2: S3LinkExpr,
    },
    IV {
        knot: String,
        l2: S3LinkExpr,
        drop: String,
    },
    V {
        knot: String,
        l2: S3LinkExpr,
        sum_with: String,
        index: u8,
    },
    VI {
        knot: String,
        class: ClassPair,
        core_index: u8,
        cable_index: u8,
    },
    VII {
        knot: String,
        #[serde(with = "crate::slope::bigint_json")]
        q: Int,
    },
    #[serde(rename = "change_regular_fibers")]
    ChangeRegularFibers {
        torus_set: TorusSet,
        cables: Vec<CableAssign>,
    },
}

/// An incompressible torus set related to a base link, given combinatorially:
/// per piece, the partition of its knots into one-saddle blocks, the pairing
/// of block boundary tori inside the piece, and the assignment of the piece's
/// decomposition-torus slots to blocks.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TorusSet {
    pub pieces: Vec<PieceTori>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PieceTori {
    pub piece: PieceId,
    pub blocks: Vec<BlockKnots>,
    /// Pairings of block boundary tori within the piece; parallel pairs
    /// repeat, and a block never pairs with itself.
    pub internal: Vec<(usize, usize)>,
    /// Which block meets each decomposition-torus slot of the piece.
    pub boundary: Vec<BoundaryAssign>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockKnots {
    pub saddle: KnotId,
    pub leaves: Vec<KnotId>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BoundaryAssign {
    pub torus: TorusId,
    pub slot: u8,
    pub block: usize,
}

/// One cabling choice of a change-of-fibers step: the block must be a
/// thickened-torus block (one saddle, one regular-fiber leaf).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CableAssign {
    pub piece: PieceId,
    pub block: usize,
    pub class: ClassPair,
}

impl TorusSet {
    /// Bring the set to its canonical form: blocks sorted by saddle id with
    /// internal and boundary references remapped, leaves and pairings sorted.
    pub fn canonicalize(&mut self) {
        for pt in &mut self.pieces {
            let mut order: Vec<usize> = (0..pt.blocks.len()).collect();
            order.sort_by(|&a, &b| pt.blocks[a].saddle.cmp(&pt.blocks[b].saddle));
            let mut rank = vec![0usize; order.len()];
            for (new, &old) in order.iter().enumerate() {
                rank[old] = new;
            }
            let mut blocks: Vec<BlockKnots> = order.iter().map(|&i| pt.blocks[i].clone()).collect();
            for b in &mut blocks {
                b.leaves.sort();
            }
            pt.blocks = blocks;
            for e in &mut pt.internal {
                let (a, b) = (rank[e.0], rank[e.1]);
                *e = (a.min(b), a.max(b));
            }
            pt.internal.sort_unstable();
            for ba in &mut pt.boundary {
                ba.block = rank[ba.block];
            }
            pt.boundary.sort_by(|x, y| (&x.torus, x.slot).cmp(&(&y.torus, y.slot)));
        }
        self.pieces.sort_by(|a, b| a.piece.cmp(&b.piece));
    }
}

/// A knot descriptor in a resolved link state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateKnot {
    pub id: String,
    pub index: u8,
    /// Piece of the ambient manifold, for base fibers and their satellites;
    /// knots imported from S³ factors carry none.
    pub piece: Option<PieceId>,
    pub shape: KnotShape,
}

/// Symbolic shape of a knot: base fibers, unknots, and the satellite and sum
/// constructions the operations introduce. Expressions are kept as written;
/// no simplification (such as absorbing unknot summands) is applied.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KnotShape {
    BaseFiber { knot: KnotId, kind: KnotKind },
    Unknot,
    Meridian(Box<KnotShape>),
    Cable { class: CableClass, of: Box<KnotShape> },
    Sum(Box<KnotShape>, Box<KnotShape>),
}

impl fmt::Display for KnotShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KnotShape::BaseFiber { knot, kind } => match kind {
                KnotKind::SingularFiber(s) => write!(f, "singular_fiber({knot}, {s})"),
                KnotKind::RegularFiber => write!(f, "fiber({knot})"),
                KnotKind::CabledPair(c) => write!(f, "cabled_fiber({knot}, {c})"),
            },
            KnotShape::Unknot => write!(f, "unknot"),
            KnotShape::Meridian(of) => write!(f, "meridian({of})"),
            KnotShape::Cable { class, of } => write!(f, "cable({class}, {of})"),
            KnotShape::Sum(a, b) => write!(f, "sum({a}, {b})"),
        }
    }
}

/// A link mid-history: the pristine base plus the current knot multiset.
#[derive(Clone, Debug)]
pub struct LinkState {
    base: IndexedLink,
    pub knots: Vec<StateKnot>,
    pub changed_fibers: bool,
    steps_applied: usize,
}

impl LinkState {
    pub fn from_base(l: &IndexedLink) -> Self {
        let knots = l
            .knots
            .iter()
            .map(|k| StateKnot {
                id: k.id.as_str().to_owned(),
                index: k.index,
                piece: Some(k.piece.clone()),
                shape: KnotShape::BaseFiber { knot: k.id.clone(), kind: k.kind.clone() },
            })
            .collect();
        LinkState {
            base: IndexedLink::base(l.knots.clone()),
            knots,
            changed_fibers: false,
            steps_applied: 0,
        }
    }

    pub fn base(&self) -> &IndexedLink {
        &self.base
    }

    pub fn steps_applied(&self) -> usize {
        self.steps_applied
    }

    pub fn count_index(&self, index: u8) -> usize {
        self.knots.iter().filter(|k| k.index == index).count()
    }

    pub fn has_both_extremes(&self) -> bool {
        has_both(&self.knots)
    }

    pub fn knot(&self, id: &str) -> Option<&StateKnot> {
        self.knots.iter().find(|k| k.id == id)
    }

    /// Human-readable listing, one knot per line, in id order.
    pub fn summary(&self) -> String {
        let mut rows: Vec<&StateKnot> = self.knots.iter().collect();
        rows.sort_by(|a, b| a.id.cmp(&b.id));
        let mut out = String::new();
        for k in rows {
            let piece = k.piece.as_ref().map(|p| p.as_str()).unwrap_or("-");
            out.push_str(&format!("{} index={} piece={} {}\n", k.id, k.index, piece, k.shape));
        }
        out
    }
}

fn has_both(knots: &[StateKnot]) -> bool {
    knots.iter().any(|k| k.index == 0) && knots.iter().any(|k| k.index == 2)
}

/// Why a step was rejected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepReason {
    UnknownKnot(String),
    WrongIndex { knot: String, need: &'static str, got: u8 },
    IndexPairMismatch { k1: u8, k2: u8 },
    ResultIndexNotAmongSummands { index: u8 },
    WouldDropLastExtreme { index: u8 },
    ClassNotPrimitive,
    CableFirstNotPositive,
    ParameterMustBeOdd,
    ChangeNotFirst,
    CablesDomainMismatch(String),
    TorusSetRejected(String),
    IdCollision(String),
    NotInOperationList,
}

impl fmt::Display for StepReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepReason::UnknownKnot(id) => write!(f, "knot {id:?} does not exist here"),
            StepReason::WrongIndex { knot, need, got } => {
                write!(f, "knot {knot:?} must have index {need}, has {got}")
            }
            StepReason::IndexPairMismatch { k1, k2 } => {
                write!(f, "indices must satisfy Ind(k1) = 2 - Ind(k2), got {k1} and {k2}")
            }
            StepReason::ResultIndexNotAmongSummands { index } => {
                write!(f, "resulting index {index} is neither summand's index")
            }
            StepReason::WouldDropLastExtreme { index } => {
                write!(f, "step would leave the link without an index-{index} component")
            }
            StepReason::ClassNotPrimitive => write!(f, "cable parameters must be coprime"),
            StepReason::CableFirstNotPositive => {
                write!(f, "first cable parameter must be at least 1")
            }
            StepReason::ParameterMustBeOdd => write!(f, "parameter q must be odd"),
            StepReason::ChangeNotFirst => {
                write!(f, "a change of regular fibers is allowed only as the first step, at most once")
            }
            StepReason::CablesDomainMismatch(msg) => write!(f, "{msg}"),
            StepReason::TorusSetRejected(msg) => write!(f, "torus set rejected: {msg}"),
            StepReason::IdCollision(id) => write!(f, "generated id {id:?} collides with an existing knot"),
            StepReason::NotInOperationList => {
                write!(f, "a change of regular fibers is not one of the closed operations")
            }
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum StepError {
    #[error("invalid step at {path}: {reason}")]
    InvalidStep { path: String, reason: StepReason },
    #[error("cable assigned to block {block} of piece {piece}, which is not a thickened-torus block: {reason}")]
    InvalidTarget { piece: String, block: usize, reason: String },
    #[error("invalid cable class {class}: parameters must be coprime")]
    InvalidClass { class: String },
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("history step {index}: {source}")]
pub struct HistoryError {
    pub index: usize,
    pub source: StepError,
}

/// Evaluation of the grammar's axiom: an attracting and a repelling unknot.
pub fn hopf_ns_axiom() -> Vec<StateKnot> {
    vec![
        StateKnot { id: "h0".into(), index: 0, piece: None, shape: KnotShape::Unknot },
        StateKnot { id: "h2".into(), index: 2, piece: None, shape: KnotShape::Unknot },
    ]
}

/// Shared parameters of one rewrite, borrowed from either grammar node or
/// history step.
#[allow(clippy::upper_case_acronyms)]
enum CoreParams<'a> {
    I,
    II { drop: &'a str },
    III { knot: &'a str },
    IV { knot: &'a str, drop: &'a str },
    V { knot: &'a str, sum_with: &'a str, index: u8 },
    VI { knot: &'a str, class: &'a ClassPair, core_index: u8, cable_index: u8 },
    VII { knot: &'a str, q: &'a Int },
}

struct CoreOut {
    /// Own knots that survive, ids untouched.
    kept: Vec<StateKnot>,
    /// Knots imported from the S³ factor, ids untouched.
    imported: Vec<StateKnot>,
    /// Newly created knots with bare ids.
    created: Vec<StateKnot>,
}

/// Count delta of one rewrite given the factor size.
fn expected_delta(op: &CoreParams, l2_len: usize) -> i64 {
    match op {
        CoreParams::I => l2_len as i64 + 1,
        CoreParams::II { .. } | CoreParams::III { .. } => l2_len as i64,
        CoreParams::IV { .. } => l2_len as i64 - 1,
        CoreParams::V { .. } | CoreParams::VII { .. } => 1,
        CoreParams::VI { .. } => 2,
    }
}

fn find_knot(knots: &[StateKnot], id: &str) -> Result<usize, StepReason> {
    knots
        .iter()
        .position(|k| k.id == id)
        .ok_or_else(|| StepReason::UnknownKnot(id.to_owned()))
}

fn need_extreme(knots: &[StateKnot], at: usize) -> Result<u8, StepReason> {
    let k = &knots[at];
    if k.index == 0 || k.index == 2 {
        Ok(k.index)
    } else {
        Err(StepReason::WrongIndex { knot: k.id.clone(), need: "0 or 2", got: k.index })
    }
}

/// Apply one rewrite to `own` with evaluated factor `l2`. The caller prefixes
/// the parts and re-checks the count delta.
fn core_apply(
    own: &[StateKnot],
    l2: Option<&[StateKnot]>,
    op: &CoreParams,
) -> Result<CoreOut, StepReason> {
    let u = |id: &str| StateKnot {
        id: id.to_owned(),
        index: 1,
        piece: None,
        shape: KnotShape::Unknot,
    };
    match op {
        CoreParams::I => {
            let l2 = l2.expect("factor required");
            Ok(CoreOut { kept: own.to_vec(), imported: l2.to_vec(), created: vec![u("u")] })
        }
        CoreParams::II { drop } => {
            let l2 = l2.expect("factor required");
            let at = find_knot(l2, drop)?;
            need_extreme(l2, at)?;
            let mut imported = l2.to_vec();
            imported.remove(at);
            Ok(CoreOut { kept: own.to_vec(), imported, created: vec![u("u")] })
        }
        CoreParams::III { knot } => {
            let l2 = l2.expect("factor required");
            let at = find_knot(own, knot)?;
            need_extreme(own, at)?;
            let mut kept = own.to_vec();
            kept.remove(at);
            Ok(CoreOut { kept, imported: l2.to_vec(), created: vec![u("u")] })
        }
        CoreParams::IV { knot, drop } => {
            let l2 = l2.expect("factor required");
            let own_at = find_knot(own, knot)?;
            let i = need_extreme(own, own_at)?;
            let l2_at = find_knot(l2, drop)?;
            let j = l2[l2_at].index;
            if j != 2 - i {
                return Err(StepReason::IndexPairMismatch { k1: i, k2: j });
            }
            let mut kept = own.to_vec();
            kept.remove(own_at);
            let mut imported = l2.to_vec();
            imported.remove(l2_at);
            Ok(CoreOut { kept, imported, created: vec![u("u")] })
        }
        CoreParams::V { knot, sum_with, index } => {
            let l2 = l2.expect("factor required");
            let own_at = find_knot(own, knot)?;
            let i = need_extreme(own, own_at)?;
            let l2_at = find_knot(l2, sum_with)?;
            let j = need_extreme(l2, l2_at)?;
            if *index != i && *index != j {
                return Err(StepReason::ResultIndexNotAmongSummands { index: *index });
            }
            // The factor contributes only the summand, so losing the last
            // index-0 or index-2 component must be refused here.
            for extreme in [0u8, 2u8] {
                let after = own.iter().filter(|k| k.index == extreme).count()
                    - usize::from(i == extreme)
                    + usize::from(*index == extreme);
                if after == 0 {
                    return Err(StepReason::WouldDropLastExtreme { index: extreme });
                }
            }
            let sum_shape =
                KnotShape::Sum(Box::new(own[own_at].shape.clone()), Box::new(l2[l2_at].shape.clone()));
            let piece = own[own_at].piece.clone();
            let mut kept = own.to_vec();
            kept.remove(own_at);
            let meridian = StateKnot {
                id: "m".into(),
                index: 1,
                piece: piece.clone(),
                shape: KnotShape::Meridian(Box::new(sum_shape.clone())),
            };
            let sum = StateKnot { id: "s".into(), index: *index, piece, shape: sum_shape };
            Ok(CoreOut { kept, imported: Vec::new(), created: vec![sum, meridian] })
        }
        CoreParams::VI { knot, class, core_index, cable_index } => {
            let at = find_knot(own, knot)?;
            let i = need_extreme(own, at)?;
            if class.0 < Int::from(1) {
                return Err(StepReason::CableFirstNotPositive);
            }
            let cable_class = class.to_class().map_err(|_| StepReason::ClassNotPrimitive)?;
            for idx in [*core_index, *cable_index] {
                if idx != 0 && idx != 2 {
                    return Err(StepReason::WrongIndex {
                        knot: (*knot).to_owned(),
                        need: "0 or 2",
                        got: idx,
                    });
                }
            }
            if *core_index != i && *cable_index != i {
                return Err(StepReason::ResultIndexNotAmongSummands { index: i });
            }
            let of = Box::new(own[at].shape.clone());
            let piece = own[at].piece.clone();
            let mut kept = own.to_vec();
            kept.remove(at);
            let created = vec![
                StateKnot {
                    id: "core".into(),
                    index: *core_index,
                    piece: piece.clone(),
                    shape: *of.clone(),
                },
                StateKnot {
                    id: "cab0".into(),
                    index: *cable_index,
                    piece: piece.clone(),
                    shape: KnotShape::Cable { class: cable_class.clone(), of: of.clone() },
                },
                StateKnot {
                    id: "cab1".into(),
                    index: 1,
                    piece,
                    shape: KnotShape::Cable { class: cable_class, of },
                },
            ];
            Ok(CoreOut { kept, imported: Vec::new(), created })
        }
        CoreParams::VII { knot, q } => {
            let at = find_knot(own, knot)?;
            let i = need_extreme(own, at)?;
            if ((*q).clone() % Int::from(2)).abs() != Int::from(1) {
                return Err(StepReason::ParameterMustBeOdd);
            }
            let class = CableClass::new(Int::from(2), (*q).clone())
                .expect("2 is coprime to every odd number");
            let of = Box::new(own[at].shape.clone());
            let piece = own[at].piece.clone();
            let mut kept = own.to_vec();
            kept.remove(at);
            let created = vec![
                StateKnot { id: "core".into(), index: 1, piece: piece.clone(), shape: *of.clone() },
                StateKnot { id: "cab".into(), index: i, piece, shape: KnotShape::Cable { class, of } },
            ];
            Ok(CoreOut { kept, imported: Vec::new(), created })
        }
    }
}

fn prefix_knots(mut v: Vec<StateKnot>, p: &str) -> Vec<StateKnot> {
    for k in &mut v {
        k.id = format!("{p}{}", k.id);
    }
    v
}

fn path_string(path: &[&str]) -> String {
    if path.is_empty() {
        "root".to_owned()
    } else {
        path.join(".")
    }
}

/// Evaluate an S³ expression into its knot multiset. Child ids are prefixed
/// "1."/"2." per level; knots created at a node get bare ids.
pub fn eval_s3(e: &S3LinkExpr) -> Result<Vec<StateKnot>, StepError> {
    let mut path = Vec::new();
    eval_node(e, &mut path)
}

fn eval_node(e: &S3LinkExpr, path: &mut Vec<&'static str>) -> Result<Vec<StateKnot>, StepError> {
    fn sub(
        child: &S3LinkExpr,
        seg: &'static str,
        path: &mut Vec<&'static str>,
    ) -> Result<Vec<StateKnot>, StepError> {
        path.push(seg);
        let r = eval_node(child, path);
        path.pop();
        r
    }
    let (own, l2, params) = match e {
        S3LinkExpr::HopfNS => return Ok(hopf_ns_axiom()),
        S3LinkExpr::I { l1, l2 } => (sub(l1, "l1", path)?, Some(sub(l2, "l2", path)?), CoreParams::I),
        S3LinkExpr::II { l1, l2, drop } => {
            (sub(l1, "l1", path)?, Some(sub(l2, "l2", path)?), CoreParams::II { drop })
        }
        S3LinkExpr::III { l1, knot, l2 } => {
            (sub(l1, "l1", path)?, Some(sub(l2, "l2", path)?), CoreParams::III { knot })
        }
        S3LinkExpr::IV { l1, knot, l2, drop } => {
            (sub(l1, "l1", path)?, Some(sub(l2, "l2", path)?), CoreParams::IV { knot, drop })
        }
        S3LinkExpr::V { l1, knot, l2, sum_with, index } => (
            sub(l1, "l1", path)?,
            Some(sub(l2, "l2", path)?),
            CoreParams::V { knot, sum_with, index: *index },
        ),
        S3LinkExpr::VI { l1, knot, class, core_index, cable_index } => (
            sub(l1, "l1", path)?,
            None,
            CoreParams::VI { knot, class, core_index: *core_index, cable_index: *cable_index },
        ),
        S3LinkExpr::VII { l1, knot, q } => {
            (sub(l1, "l1", path)?, None, CoreParams::VII { knot, q })
        }
    };
    let l2_len = l2.as_ref().map_or(0, |v| v.len());
    let out = core_apply(&own, l2.as_deref(), &params)
        .map_err(|reason| StepError::InvalidStep { path: path_string(path), reason })?;
    let own_len = own.len() as i64;
    let mut knots = prefix_knots(out.kept, "1.");
    knots.extend(prefix_knots(out.imported, "2."));
    knots.extend(out.created);
    assert_eq!(knots.len() as i64 - own_len, expected_delta(&params, l2_len), "count delta");
    assert!(has_both(&knots), "grammar invariant: both extreme indices present");
    Ok(knots)
}

fn step_core_params(step: &OperationStep) -> Option<(Option<&S3LinkExpr>, CoreParams<'_>)> {
    match step {
        OperationStep::I { l2 } => Some((Some(l2), CoreParams::I)),
        OperationStep::II { l2, drop } => Some((Some(l2), CoreParams::II { drop })),
        OperationStep::III { knot, l2 } => Some((Some(l2), CoreParams::III { knot })),
        OperationStep::IV { knot, l2, drop } => Some((Some(l2), CoreParams::IV { knot, drop })),
        OperationStep::V { knot, l2, sum_with, index } => {
            Some((Some(l2), CoreParams::V { knot, sum_with, index: *index }))
        }
        OperationStep::VI { knot, class, core_index, cable_index } => Some((
            None,
            CoreParams::VI { knot, class, core_index: *core_index, cable_index: *cable_index },
        )),
        OperationStep::VII { knot, q } => Some((None, CoreParams::VII { knot, q })),
        OperationStep::ChangeRegularFibers { .. } => None,
    }
}

/// Check one step against the current state without applying it.
pub fn validate_step(
    w: &GraphManifold,
    state: &LinkState,
    step: &OperationStep,
) -> Result<(), StepError> {
    match step {
        OperationStep::ChangeRegularFibers { torus_set, cables } => {
            validate_change(w, state, torus_set, cables).map(|_| ())
        }
        _ => apply_op_a(w, state, step).map(|_| ()),
    }
}

/// Apply one closed-list operation (I–VII). New and imported knots get the
/// prefix "s<n>." for step number n.
pub fn apply_op_a(
    w: &GraphManifold,
    state: &LinkState,
    step: &OperationStep,
) -> Result<LinkState, StepError> {
    let _ = w;
    let here = format!("step {}", state.steps_applied);
    let Some((l2_expr, params)) = step_core_params(step) else {
        return Err(StepError::InvalidStep {
            path: here,
            reason: StepReason::NotInOperationList,
        });
    };
    let l2 = match l2_expr {
        Some(e) => Some(eval_s3(e)?),
        None => None,
    };
    let l2_len = l2.as_ref().map_or(0, |v| v.len());
    let out = core_apply(&state.knots, l2.as_deref(), &params)
        .map_err(|reason| StepError::InvalidStep { path: here.clone(), reason })?;
    // Created knots live directly under the step prefix; imported factor
    // knots additionally carry the factor's operand position, mirroring the
    // expression evaluator, so the two namespaces can never collide.
    let prefix = format!("s{}.", state.steps_applied);
    let factor_prefix = format!("s{}.2.", state.steps_applied);
    let mut knots = out.kept;
    knots.extend(prefix_knots(out.imported, &factor_prefix));
    knots.extend(prefix_knots(out.created, &prefix));
    let mut seen = BTreeSet::new();
    for k in &knots {
        if !seen.insert(&k.id) {
            return Err(StepError::InvalidStep {
                path: here,
                reason: StepReason::IdCollision(k.id.clone()),
            });
        }
    }
    assert_eq!(
        knots.len() as i64 - state.knots.len() as i64,
        expected_delta(&params, l2_len),
        "count delta"
    );
    let next = LinkState {
        base: state.base.clone(),
        knots,
        changed_fibers: state.changed_fibers,
        steps_applied: state.steps_applied + 1,
    };
    if state.has_both_extremes() {
        assert!(next.has_both_extremes(), "operations preserve both extreme indices");
    }
    Ok(next)
}

/// The thickened-torus blocks of a torus set: exactly one leaf, and that
/// leaf a regular fiber of the base link.
pub fn product_blocks(l: &IndexedLink, ts: &TorusSet) -> Vec<(PieceId, usize)> {
    let mut out = Vec::new();
    for pt in &ts.pieces {
        for (bi, b) in pt.blocks.iter().enumerate() {
            if b.leaves.len() != 1 {
                continue;
            }
            let regular = l
                .knot(&b.leaves[0])
                .map(|k| matches!(k.kind, KnotKind::RegularFiber))
                .unwrap_or(false);
            if regular {
                out.push((pt.piece.clone(), bi));
            }
        }
    }
    out
}

fn validate_change<'a>(
    w: &GraphManifold,
    state: &LinkState,
    ts: &TorusSet,
    cables: &'a [CableAssign],
) -> Result<Vec<(&'a CableAssign, CableClass)>, StepError> {
    let here = "step 0 (change of regular fibers)".to_owned();
    if state.steps_applied != 0 || state.changed_fibers {
        return Err(StepError::InvalidStep { path: here, reason: StepReason::ChangeNotFirst });
    }
    let diags = check_torus_set(w, &state.base, ts);
    if !diags.is_clean() {
        let first = diags.errors().next().expect("unclean has an error");
        return Err(StepError::InvalidStep {
            path: here,
            reason: StepReason::TorusSetRejected(format!("{first}")),
        });
    }
    let products: BTreeSet<(PieceId, usize)> = product_blocks(&state.base, ts).into_iter().collect();
    let mut seen: BTreeSet<(PieceId, usize)> = BTreeSet::new();
    let mut resolved = Vec::new();
    for c in cables {
        let key = (c.piece.clone(), c.block);
        if !products.contains(&key) {
            return Err(StepError::InvalidTarget {
                piece: c.piece.as_str().to_owned(),
                block: c.block,
                reason: "block is not a one-saddle block with a single regular-fiber leaf".into(),
            });
        }
        if !seen.insert(key) {
            return Err(StepError::InvalidStep {
                path: here,
                reason: StepReason::CablesDomainMismatch(format!(
                    "block {} of piece {} is cabled twice",
                    c.block, c.piece
                )),
            });
        }
        let class = c
            .class
            .to_class()
            .map_err(|_| StepError::InvalidClass { class: c.class.to_string() })?;
        resolved.push((c, class));
    }
    if seen.len() != products.len() {
        let missing = products
            .iter()
            .find(|k| !seen.contains(k))
            .expect("some block is uncovered");
        return Err(StepError::InvalidStep {
            path: here,
            reason: StepReason::CablesDomainMismatch(format!(
                "every thickened-torus block needs a class; block {} of piece {} has none",
                missing.1, missing.0
            )),
        });
    }
    Ok(resolved)
}

/// Apply a change of regular fibers: in every cabled thickened-torus block,
/// the saddle knot and the leaf knot become members of a cabled pair of the
/// given class; the fiber class (1,0) leaves them untouched.
pub fn apply_change_fibers(
    w: &GraphManifold,
    state: &LinkState,
    ts: &TorusSet,
    cables: &[CableAssign],
) -> Result<LinkState, StepError> {
    let resolved = validate_change(w, state, ts, cables)?;
    let mut next = LinkState {
        base: state.base.clone(),
        knots: state.knots.clone(),
        changed_fibers: true,
        steps_applied: state.steps_applied + 1,
    };
    for (c, class) in resolved {
        if class.is_fiber() {
            continue;
        }
        let pt = ts.pieces.iter().find(|p| p.piece == c.piece).expect("validated");
        let block = &pt.blocks[c.block];
        for id in [&block.saddle, &block.leaves[0]] {
            let k = next
                .knots
                .iter_mut()
                .find(|k| k.id == id.as_str())
                .expect("torus set validated against the base");
            k.shape =
                KnotShape::BaseFiber { knot: id.clone(), kind: KnotKind::CabledPair(class.clone()) };
        }
    }
    assert_eq!(next.knots.len(), state.knots.len(), "change of fibers keeps the knot count");
    Ok(next)
}

/// Fold a link's history into its final state. The first invalid step aborts
/// with its index.
pub fn run_history(w: &GraphManifold, l: &IndexedLink) -> Result<LinkState, HistoryError> {
    let mut state = LinkState::from_base(l);
    for (index, step) in l.history.iter().enumerate() {
        state = match step {
            OperationStep::ChangeRegularFibers { torus_set, cables } => {
                apply_change_fibers(w, &state, torus_set, cables)
            }
            _ => apply_op_a(w, &state, step),
        }
        .map_err(|source| HistoryError { index, source })?;
    }
    Ok(state)
}

/// Independent checker for torus sets: every condition is re-derived from
/// the manifold and the base link, no shared state with the enumerator.
pub fn check_torus_set(w: &GraphManifold, l: &IndexedLink, ts: &TorusSet) -> Diagnostics {
    let mut diags = Diagnostics::new();
    let have: Vec<&PieceId> = ts.pieces.iter().map(|p| &p.piece).collect();
    let have_set: BTreeSet<&PieceId> = have.iter().copied().collect();
    if have.len() != have_set.len() {
        diags.error(DiagCode::TorusSetInvalid, "-", "a piece appears twice in the torus set");
    }
    let want: BTreeSet<&PieceId> = w.pieces.iter().map(|p| &p.id).collect();
    if have_set != want {
        diags.error(
            DiagCode::TorusSetInvalid,
            "-",
            "torus set does not cover exactly the pieces of the manifold",
        );
    }
    if !diags.is_clean() {
        return diags;
    }

    for pt in &ts.pieces {
        let piece = w.piece(&pt.piece).expect("coverage checked");
        let subject = pt.piece.as_str();

        // Blocks partition the saddles.
        let mut saddle_ids: Vec<&KnotId> =
            link::saddles_in_id_order(l, &pt.piece).iter().map(|k| &k.id).collect();
        saddle_ids.sort();
        let mut block_saddles: Vec<&KnotId> = pt.blocks.iter().map(|b| &b.saddle).collect();
        block_saddles.sort();
        if saddle_ids != block_saddles {
            diags.error(
                DiagCode::TorusSetInvalid,
                subject,
                "block saddles do not match the piece's index-1 knots exactly",
            );
            continue;
        }

        // Leaves partition the end knots, at most two per block, and a
        // two-leaf block contains a singular fiber.
        let mut end_ids: Vec<&KnotId> = l
            .knots_in(&pt.piece)
            .filter(|k| k.is_end_knot())
            .map(|k| &k.id)
            .collect();
        end_ids.sort();
        let mut block_leaves: Vec<&KnotId> = Vec::new();
        for b in &pt.blocks {
            if b.leaves.len() > 2 {
                diags.error(
                    DiagCode::TorusSetInvalid,
                    subject,
                    format!("block of saddle {} has more than two leaf knots", b.saddle),
                );
            }
            if b.leaves.len() == 2 {
                let singular = b.leaves.iter().any(|id| {
                    l.knot(id)
                        .map(|k| matches!(k.kind, KnotKind::SingularFiber(_)))
                        .unwrap_or(false)
                });
                if !singular {
                    diags.error(
                        DiagCode::TorusSetInvalid,
                        subject,
                        format!(
                            "block of saddle {} pairs two regular fibers; a two-leaf block needs a singular fiber",
                            b.saddle
                        ),
                    );
                }
            }
            block_leaves.extend(b.leaves.iter());
        }
        block_leaves.sort();
        if end_ids != block_leaves {
            diags.error(
                DiagCode::TorusSetInvalid,
                subject,
                "block leaves do not match the piece's index-0/2 knots exactly",
            );
            continue;
        }

        // Boundary slots covered exactly; references in range.
        let mut want_slots: Vec<(TorusId, u8)> = w
            .incident_slots(&pt.piece)
            .into_iter()
            .map(|s| (s.torus, s.slot))
            .collect();
        want_slots.sort();
        let mut have_slots: Vec<(TorusId, u8)> =
            pt.boundary.iter().map(|b| (b.torus.clone(), b.slot)).collect();
        have_slots.sort();
        if want_slots != have_slots {
            diags.error(
                DiagCode::TorusSetInvalid,
                subject,
                "boundary assignment does not cover the piece's decomposition-torus slots exactly",
            );
            continue;
        }
        let n = pt.blocks.len();
        if pt.boundary.iter().any(|b| b.block >= n)
            || pt.internal.iter().any(|&(a, b)| a >= n || b >= n)
        {
            diags.error(DiagCode::TorusSetInvalid, subject, "block reference out of range");
            continue;
        }
        if pt.internal.iter().any(|&(a, b)| a == b) {
            diags.error(
                DiagCode::TorusSetInvalid,
                subject,
                "an internal pairing joins a block to itself",
            );
            continue;
        }

        // Each block has exactly three boundary tori.
        let mut degree: Vec<usize> = pt.blocks.iter().map(|b| b.leaves.len()).collect();
        for &(a, b) in &pt.internal {
            degree[a] += 1;
            degree[b] += 1;
        }
        for ba in &pt.boundary {
            degree[ba.block] += 1;
        }
        if let Some(bad) = degree.iter().position(|&d| d != 3) {
            diags.error(
                DiagCode::TorusSetInvalid,
                subject,
                format!(
                    "block of saddle {} closes {} boundary tori, needs exactly 3",
                    pt.blocks[bad].saddle, degree[bad]
                ),
            );
            continue;
        }

        // Connected inside the piece, with the forced cycle rank.
        let mg = MultiGraph::new(n, pt.internal.clone());
        if !mg.is_connected() {
            diags.error(
                DiagCode::TorusSetInvalid,
                subject,
                "internal pairings do not connect the piece's blocks",
            );
            continue;
        }
        let expect_internal = n + piece.genus as usize;
        if pt.internal.len() + 1 != expect_internal {
            diags.error(
                DiagCode::TorusSetInvalid,
                subject,
                format!(
                    "piece needs {} internal pairings for genus {}, got {}",
                    expect_internal - 1,
                    piece.genus,
                    pt.internal.len()
                ),
            );
        }
    }
    if !diags.is_clean() {
        return diags;
    }

    // Every separating torus of the refined decomposition needs an index-0/2
    // knot on both sides.
    let (mg, labels, leaf_counts) = refined_graph(w, ts);
    let bridges = mg.bridges();
    for (ei, is_bridge) in bridges.iter().enumerate() {
        if !is_bridge {
            continue;
        }
        let comp = mg.components_with(Some(ei), None);
        let mut side_leaves = BTreeMap::new();
        for (node, &c) in comp.iter().enumerate() {
            *side_leaves.entry(c).or_insert(0usize) += leaf_counts[node];
        }
        for (side, leaves) in side_leaves {
            if leaves == 0 {
                diags.error(
                    DiagCode::SeparatingTorusSideWithoutKnot,
                    labels[ei].clone(),
                    format!("side {side} of this separating torus has no index-0/2 knot"),
                );
            }
        }
    }
    diags
}

/// The refined block multigraph of a torus set: nodes are blocks across all
/// pieces, edges are internal pairings plus decomposition tori. Returns the
/// graph, an edge label per edge, and the leaf count per node. Requires the
/// set to cover the manifold's pieces and slots.
fn refined_graph(w: &GraphManifold, ts: &TorusSet) -> (MultiGraph, Vec<String>, Vec<usize>) {
    let mut offsets = BTreeMap::new();
    let mut total = 0usize;
    let mut leaf_counts = Vec::new();
    for pt in &ts.pieces {
        offsets.insert(&pt.piece, total);
        total += pt.blocks.len();
        leaf_counts.extend(pt.blocks.iter().map(|b| b.leaves.len()));
    }
    let mut edges = Vec::new();
    let mut labels = Vec::new();
    for pt in &ts.pieces {
        let off = offsets[&pt.piece];
        for &(a, b) in &pt.internal {
            edges.push((off + a, off + b));
            labels.push(format!("{}:{}-{}", pt.piece, a, b));
        }
    }
    for e in &w.edges {
        let block_at = |piece: &PieceId, slot: u8| -> usize {
            let pt = ts.pieces.iter().find(|p| &p.piece == piece).expect("coverage checked");
            let ba = pt
                .boundary
                .iter()
                .find(|b| b.torus == e.id && b.slot == slot)
                .expect("slots covered");
            offsets[piece] + ba.block
        };
        edges.push((block_at(&e.ends.0, 0), block_at(&e.ends.1, 1)));
        labels.push(e.id.as_str().to_owned());
    }
    (MultiGraph::new(total, edges), labels, leaf_counts)
}

/// Enumerated torus sets, deterministic order, capped.
#[derive(Clone, Debug)]
pub struct TorusSetStream {
    pub sets: Vec<TorusSet>,
    /// True when the cap cut the enumeration short.
    pub truncated: bool,
}

/// Default cap on enumerated torus sets.
pub const TORUS_SET_CAP: usize = 10_000;

/// Enumerate the torus sets related to an accepted base link: all ways to
/// partition each piece's knots into one-saddle blocks, pair block tori
/// inside the piece, and route the piece's decomposition-torus slots, subject
/// to the separation condition on the refined graph. Deterministic; stops
/// after `limit` sets and flags truncation.
pub fn find_torus_sets(w: &GraphManifold, l: &IndexedLink, limit: usize) -> TorusSetStream {
    let (accepted, _) = link::is_jsj_related(w, l);
    if !accepted {
        return TorusSetStream { sets: Vec::new(), truncated: false };
    }
    let mut sets: BTreeSet<TorusSet> = BTreeSet::new();
    let mut truncated = false;
    let mut partial: Vec<PieceTori> = Vec::new();
    search_pieces(w, l, 0, &mut partial, &mut sets, limit, &mut truncated);
    let stream = TorusSetStream { sets: sets.into_iter().collect(), truncated };
    if !stream.truncated {
        assert!(!stream.sets.is_empty(), "an accepted link always admits at least one torus set");
    }
    for ts in &stream.sets {
        debug_assert!(check_torus_set(w, l, ts).is_clean(), "emitted set fails its own checker");
    }
    stream
}

/// Depth-first product over per-piece arrangements; returning false stops
/// the whole search once the cap is hit.
fn search_pieces(
    w: &GraphManifold,
    l: &IndexedLink,
    at: usize,
    partial: &mut Vec<PieceTori>,
    sets: &mut BTreeSet<TorusSet>,
    limit: usize,
    truncated: &mut bool,
) -> bool {
    if at == w.pieces.len() {
        let mut candidate = TorusSet { pieces: partial.clone() };
        if !separation_holds(w, &candidate) {
            return true;
        }
        if sets.len() >= limit {
            *truncated = true;
            return false;
        }
        candidate.canonicalize();
        sets.insert(candidate);
        return true;
    }
    let id = w.pieces[at].id.clone();
    for_each_arrangement(w, l, &id, &mut |pt| {
        partial.push(pt);
        let keep = search_pieces(w, l, at + 1, partial, sets, limit, truncated);
        partial.pop();
        keep
    })
}

/// Every separating torus of the refined graph has an index-0/2 knot on both
/// sides.
fn separation_holds(w: &GraphManifold, ts: &TorusSet) -> bool {
    let (mg, _, leaf_counts) = refined_graph(w, ts);
    let bridges = mg.bridges();
    bridges.iter().enumerate().all(|(ei, &is_bridge)| {
        if !is_bridge {
            return true;
        }
        let comp = mg.components_with(Some(ei), None);
        let mut sides = BTreeMap::new();
        for (node, &c) in comp.iter().enumerate() {
            *sides.entry(c).or_insert(0usize) += leaf_counts[node];
        }
        sides.values().all(|&n| n > 0)
    })
}

/// Stream every block arrangement of one piece in a deterministic order:
/// leaf placement, then slot routing, then internal pairing, keeping the
/// connected ones. The callback returns false to stop. The count identity of
/// an accepted link forces the pairing count to saddles + genus - 1, so
/// connectivity alone pins the cycle rank to the genus.
fn for_each_arrangement(
    w: &GraphManifold,
    l: &IndexedLink,
    piece: &PieceId,
    f: &mut dyn FnMut(PieceTori) -> bool,
) -> bool {
    let saddles: Vec<KnotId> =
        link::saddles_in_id_order(l, piece).iter().map(|k| k.id.clone()).collect();
    let x = saddles.len();
    if x == 0 {
        return true;
    }
    let leaves: Vec<(KnotId, bool)> = {
        let mut v: Vec<(KnotId, bool)> = l
            .knots_in(piece)
            .filter(|k| k.is_end_knot())
            .map(|k| (k.id.clone(), matches!(k.kind, KnotKind::SingularFiber(_))))
            .collect();
        v.sort();
        v
    };
    let slots = w.incident_slots(piece);
    let mut leaf_assign = vec![0usize; leaves.len()];
    leaf_phase(0, x, &leaves, &mut leaf_assign, &mut |la: &[usize]| {
        let mut capacity = vec![3usize; x];
        for &bk in la {
            capacity[bk] -= 1;
        }
        let la = la.to_vec();
        let mut slot_assign = vec![0usize; slots.len()];
        slot_phase(0, x, &capacity, &mut slot_assign, &mut |sa: &[usize]| {
            let mut degrees = capacity.clone();
            for &bk in sa {
                degrees[bk] -= 1;
            }
            let sa = sa.to_vec();
            let mut edges = Vec::new();
            pair_phase(&mut degrees, (usize::MAX, 0), &mut edges, &mut |internal| {
                if !MultiGraph::new(x, internal.to_vec()).is_connected() {
                    return true;
                }
                let mut blocks: Vec<BlockKnots> = saddles
                    .iter()
                    .map(|s| BlockKnots { saddle: s.clone(), leaves: Vec::new() })
                    .collect();
                for (li, &bk) in la.iter().enumerate() {
                    blocks[bk].leaves.push(leaves[li].0.clone());
                }
                let boundary = slots
                    .iter()
                    .zip(&sa)
                    .map(|(s, &bk)| BoundaryAssign {
                        torus: s.torus.clone(),
                        slot: s.slot,
                        block: bk,
                    })
                    .collect();
                f(PieceTori {
                    piece: piece.clone(),
                    blocks,
                    internal: internal.to_vec(),
                    boundary,
                })
            })
        })
    })
}

/// Assign each leaf knot to a block: at most two per block, and a pair must
/// contain a singular fiber. Lexicographic over block indices.
fn leaf_phase(
    at: usize,
    x: usize,
    leaves: &[(KnotId, bool)],
    leaf_assign: &mut Vec<usize>,
    next: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    if at == leaves.len() {
        return next(leaf_assign);
    }
    for bk in 0..x {
        let prior: Vec<usize> = (0..at).filter(|&i| leaf_assign[i] == bk).collect();
        if prior.len() >= 2 {
            continue;
        }
        if prior.len() == 1 && !leaves[prior[0]].1 && !leaves[at].1 {
            continue;
        }
        leaf_assign[at] = bk;
        if !leaf_phase(at + 1, x, leaves, leaf_assign, next) {
            return false;
        }
    }
    true
}

/// Route each boundary slot to a block with spare capacity. Lexicographic.
fn slot_phase(
    at: usize,
    x: usize,
    capacity: &[usize],
    slot_assign: &mut Vec<usize>,
    next: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    if at == slot_assign.len() {
        return next(slot_assign);
    }
    for bk in 0..x {
        let used = slot_assign[..at].iter().filter(|&&v| v == bk).count();
        if used >= capacity[bk] {
            continue;
        }
        slot_assign[at] = bk;
        if !slot_phase(at + 1, x, capacity, slot_assign, next) {
            return false;
        }
    }
    true
}

/// Callback fed each complete pairing; return false to stop early.
type PairingSink<'a> = dyn FnMut(&[(usize, usize)]) -> bool + 'a;

/// Enumerate loopless multigraphs with the given remaining degree sequence,
/// each exactly once: always extend at the smallest vertex with remaining
/// degree, partners non-decreasing per vertex.
fn pair_phase(
    degrees: &mut Vec<usize>,
    floor: (usize, usize),
    edges: &mut Vec<(usize, usize)>,
    next: &mut PairingSink<'_>,
) -> bool {
    let Some(i) = degrees.iter().position(|&d| d > 0) else {
        return next(edges);
    };
    let start = if floor.0 == i { floor.1 } else { i + 1 };
    for j in start.max(i + 1)..degrees.len() {
        if degrees[j] == 0 {
            continue;
        }
        degrees[i] -= 1;
        degrees[j] -= 1;
        edges.push((i, j));
        let keep = pair_phase(degrees, (i, j), edges, next);
        edges.pop();
        degrees[i] += 1;
        degrees[j] += 1;
        if !keep {
            return false;
        }
    }
    true
}
