//! Seifert-fibered pieces and their per-piece admissibility checks.
//!
//! A piece is presented by its orientable base genus, its boundary count, and
//! its multiset of slopes q/p. A slope marks a singular fiber exactly when
//! p >= 2; p = 1 entries are markers on regular fibers and never affect any
//! count. Bases are orientable by construction (genus is a plain count), so
//! orientability never needs checking.

use serde::{Deserialize, Serialize};

use crate::ids::PieceId;
use crate::Slope;

/// One Seifert-fibered piece of a decomposition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeifertPiece {
    pub id: PieceId,
    /// Genus of the orientable base surface.
    pub genus: u32,
    /// Number of boundary tori; kept equal to the incident edge endpoints of
    /// the decomposition graph (a loop counts twice).
    pub boundary_count: u32,
    /// Slope multiset q1/p1, ..., qk/pk.
    pub slopes: Vec<Slope>,
}

impl SeifertPiece {
    pub fn new(id: impl Into<PieceId>, genus: u32, boundary_count: u32, slopes: Vec<Slope>) -> Self {
        SeifertPiece { id: id.into(), genus, boundary_count, slopes }
    }

    /// Slopes with denominator >= 2, i.e. the singular fibers.
    pub fn singular_slopes(&self) -> Vec<&Slope> {
        self.slopes.iter().filter(|s| s.is_singular()).collect()
    }

    /// Number of singular fibers, written m elsewhere.
    pub fn singular_count(&self) -> usize {
        self.slopes.iter().filter(|s| s.is_singular()).count()
    }

    /// True when some fiber has order exactly 2. Such pieces are always
    /// rejected by the admissibility predicate.
    pub fn has_forbidden_half_slope(&self) -> bool {
        self.slopes.iter().any(|s| s.has_denominator_two())
    }

    /// True when the piece is on the exception list of manifolds without a
    /// unique Seifert fibering:
    ///
    /// - genus 0, one boundary torus, at most one singular fiber: a solid
    ///   torus (possibly fibered around one exceptional fiber);
    /// - genus 0, two boundary tori, no singular fiber: the product of a
    ///   torus and an interval;
    /// - genus 0, one boundary torus, exactly two singular fibers both of
    ///   order 2: the twisted interval bundle over the Klein bottle (with
    ///   boundary present, slopes count modulo 1, so any odd q/2 pair
    ///   matches);
    /// - genus 0, closed, at most three singular fibers: the small closed
    ///   cases.
    ///
    /// Everything outside the list is treated as uniquely fibered; the
    /// admissibility pass emits an assumption warning for the closed
    /// low-genus cases it cannot distinguish.
    pub fn is_fibering_exceptional(&self) -> bool {
        if self.genus != 0 {
            return false;
        }
        let m = self.singular_count();
        match self.boundary_count {
            0 => m <= 3,
            1 => {
                m <= 1
                    || (m == 2
                        && self
                            .slopes
                            .iter()
                            .filter(|s| s.is_singular())
                            .all(|s| s.has_denominator_two()))
            }
            2 => m == 0,
            _ => false,
        }
    }
}
