//! Manifest formats: the JSON wire forms for manifolds, links, certificates,
//! and torus-set listings.
//!
//! A manifold manifest lists pieces and tori; per-piece boundary counts are
//! derived from the tori, a loop contributing two. Links and certificates
//! use the engine's serde forms directly. Parsing reports JSON positions;
//! structural validation stays with the caller.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use nmslink_core::ops::{TorusSet, TorusSetStream};
use nmslink_core::{
    FrhCertificate, GraphManifold, IndexedLink, JsjEdge, PieceId, SeifertPiece, Slope, TorusId,
};

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("inconsistent manifest: {0}")]
    Inconsistent(String),
}

#[derive(Serialize, Deserialize)]
struct ManifoldWire {
    pieces: Vec<PieceWire>,
    #[serde(default)]
    tori: Vec<TorusWire>,
}

#[derive(Serialize, Deserialize)]
struct PieceWire {
    id: PieceId,
    genus: u32,
    #[serde(default)]
    slopes: Vec<Slope>,
}

#[derive(Serialize, Deserialize)]
struct TorusWire {
    id: TorusId,
    ends: (PieceId, PieceId),
}

pub fn parse_manifold(text: &str) -> Result<GraphManifold, ManifestError> {
    let wire: ManifoldWire = serde_json::from_str(text).map_err(json_err)?;
    let mut boundary: BTreeMap<&PieceId, u32> = wire.pieces.iter().map(|p| (&p.id, 0)).collect();
    if boundary.len() != wire.pieces.len() {
        return Err(ManifestError::Inconsistent("duplicate piece id".into()));
    }
    for t in &wire.tori {
        for end in [&t.ends.0, &t.ends.1] {
            match boundary.get_mut(end) {
                Some(b) => *b += 1,
                None => {
                    return Err(ManifestError::Inconsistent(format!(
                        "torus {} ends at unknown piece {}",
                        t.id, end
                    )))
                }
            }
        }
    }
    let pieces = wire
        .pieces
        .iter()
        .map(|p| SeifertPiece::new(p.id.clone(), p.genus, boundary[&p.id], p.slopes.clone()))
        .collect();
    let edges =
        wire.tori.iter().map(|t| JsjEdge { id: t.id.clone(), ends: t.ends.clone() }).collect();
    Ok(GraphManifold::new(pieces, edges))
}

/// Canonical form: `parse_manifold` composed with this is the identity on
/// its output. Exercised by the round-trip tests; the binary only parses.
#[cfg(test)]
pub fn manifold_to_json(w: &GraphManifold) -> String {
    let wire = ManifoldWire {
        pieces: w
            .pieces
            .iter()
            .map(|p| PieceWire { id: p.id.clone(), genus: p.genus, slopes: p.slopes.clone() })
            .collect(),
        tori: w.edges.iter().map(|e| TorusWire { id: e.id.clone(), ends: e.ends.clone() }).collect(),
    };
    to_pretty(&wire)
}

pub fn parse_link(text: &str) -> Result<IndexedLink, ManifestError> {
    serde_json::from_str(text).map_err(json_err)
}

/// Canonical form: `parse_link` composed with this is the identity on its
/// output. Exercised by the round-trip tests; the binary emits links only
/// in the one-line stream form.
#[cfg(test)]
pub fn link_to_json(l: &IndexedLink) -> String {
    to_pretty(l)
}

/// One-line form, for streamed output.
pub fn link_to_json_line(l: &IndexedLink) -> String {
    serde_json::to_string(l).expect("links serialize")
}

pub fn parse_certificate(text: &str) -> Result<FrhCertificate, ManifestError> {
    serde_json::from_str(text).map_err(json_err)
}

pub fn certificate_to_json(c: &FrhCertificate) -> String {
    to_pretty(c)
}

#[derive(Serialize)]
struct TorusSetsWire<'a> {
    sets: &'a [TorusSet],
    truncated: bool,
}

pub fn torus_sets_to_json(stream: &TorusSetStream) -> String {
    to_pretty(&TorusSetsWire { sets: &stream.sets, truncated: stream.truncated })
}

fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("wire forms serialize");
    text.push('\n');
    text
}

fn json_err(e: serde_json::Error) -> ManifestError {
    ManifestError::Json(e.to_string())
}
