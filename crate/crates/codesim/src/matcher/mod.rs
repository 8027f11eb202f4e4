//! Pairs the comparison units of two programs, tiles each paired key
//! stream with greedy string tiling, and folds the outcome into the
//! matched-token metrics used for ranking.

pub mod gst;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::frontend::SourceUnit;
use crate::lowering::CompileError;
use crate::pipeline::{build_units, Approach, CompareUnit};

pub use gst::{tile, Tile, INITIAL_SEARCH_LENGTH};

pub const DEFAULT_MIN_MATCH: usize = 3;

/// One row of the greedy unit pairing. A `None` side means the other
/// side's unit found no partner and contributes all of its tokens as
/// mismatch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitPair {
    pub unit_a: Option<String>,
    pub unit_b: Option<String>,
    pub matched: usize,
    pub len_a: usize,
    pub len_b: usize,
    pub tiles: Vec<Tile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub unit_pairing: Vec<UnitPair>,
    pub matched_total: usize,
    pub len_a: usize,
    pub len_b: usize,
    /// Mismatched tokens: `len_a + len_b - 2 * matched_total`.
    pub mt: i64,
    /// Reverse of `mt`; higher means more similar.
    pub rmt: i64,
    /// `2 * matched_total / (len_a + len_b)`, defined as 1 for two empty
    /// programs.
    pub similarity: f64,
}

/// Compares two unit lists. The result does not depend on argument order
/// beyond the obvious mirroring: internally the smaller side (by total
/// length, then by a full dump of the units) always plays the same role,
/// so `compare(a, b)` and `compare(b, a)` tile identically.
pub fn compare(a: &[CompareUnit], b: &[CompareUnit], min_match: usize) -> ComparisonResult {
    let total = |units: &[CompareUnit]| units.iter().map(|u| u.keys.len()).sum::<usize>();
    let (total_a, total_b) = (total(a), total(b));
    let swapped = (total_a, a) > (total_b, b);
    let (x, y) = if swapped { (b, a) } else { (a, b) };

    let mut cells: Vec<Vec<(usize, Vec<Tile>)>> = Vec::with_capacity(x.len());
    for ux in x {
        let mut row = Vec::with_capacity(y.len());
        for uy in y {
            let mut ids = HashMap::new();
            let ka = encode(&ux.keys, &mut ids);
            let kb = encode(&uy.keys, &mut ids);
            let tiles = gst::tile(&ka, &kb, min_match);
            let matched = tiles.iter().map(|t| t.length).sum();
            row.push((matched, tiles));
        }
        cells.push(row);
    }

    let mut used_x = vec![false; x.len()];
    let mut used_y = vec![false; y.len()];
    let mut pairing = Vec::new();
    loop {
        let mut best: Option<(usize, usize)> = None;
        for xi in 0..x.len() {
            if used_x[xi] {
                continue;
            }
            for yi in 0..y.len() {
                if used_y[yi] {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bx, by)) => {
                        let (m, bm) = (cells[xi][yi].0, cells[bx][by].0);
                        m > bm
                            || (m == bm
                                && (&x[xi].name, &y[yi].name) < (&x[bx].name, &y[by].name))
                    }
                };
                if better {
                    best = Some((xi, yi));
                }
            }
        }
        let Some((xi, yi)) = best else { break };
        let (matched, ref tiles) = cells[xi][yi];
        if matched == 0 {
            break;
        }
        used_x[xi] = true;
        used_y[yi] = true;
        pairing.push(UnitPair {
            unit_a: Some(x[xi].name.clone()),
            unit_b: Some(y[yi].name.clone()),
            matched,
            len_a: x[xi].keys.len(),
            len_b: y[yi].keys.len(),
            tiles: tiles.clone(),
        });
    }
    for (xi, ux) in x.iter().enumerate() {
        if !used_x[xi] {
            pairing.push(UnitPair {
                unit_a: Some(ux.name.clone()),
                unit_b: None,
                matched: 0,
                len_a: ux.keys.len(),
                len_b: 0,
                tiles: Vec::new(),
            });
        }
    }
    for (yi, uy) in y.iter().enumerate() {
        if !used_y[yi] {
            pairing.push(UnitPair {
                unit_a: None,
                unit_b: Some(uy.name.clone()),
                matched: 0,
                len_a: 0,
                len_b: uy.keys.len(),
                tiles: Vec::new(),
            });
        }
    }

    if swapped {
        for pair in &mut pairing {
            std::mem::swap(&mut pair.unit_a, &mut pair.unit_b);
            std::mem::swap(&mut pair.len_a, &mut pair.len_b);
            for t in &mut pair.tiles {
                std::mem::swap(&mut t.start_a, &mut t.start_b);
            }
        }
    }

    let matched_total: usize = pairing.iter().map(|p| p.matched).sum();
    let mt = (total_a + total_b) as i64 - 2 * matched_total as i64;
    let similarity = if total_a + total_b == 0 {
        1.0
    } else {
        2.0 * matched_total as f64 / (total_a + total_b) as f64
    };
    ComparisonResult {
        unit_pairing: pairing,
        matched_total,
        len_a: total_a,
        len_b: total_b,
        mt,
        rmt: -mt,
        similarity,
    }
}

/// Builds the units of both programs under `approach` and compares them.
pub fn compare_sources(
    a: &SourceUnit,
    b: &SourceUnit,
    approach: Approach,
    min_match: usize,
) -> Result<ComparisonResult, CompileError> {
    let ua = build_units(a, approach)?;
    let ub = build_units(b, approach)?;
    Ok(compare(&ua.units, &ub.units, min_match))
}

fn encode<'a>(keys: &'a [String], ids: &mut HashMap<&'a str, u32>) -> Vec<u32> {
    keys.iter()
        .map(|k| {
            let next = ids.len() as u32;
            *ids.entry(k.as_str()).or_insert(next)
        })
        .collect()
}
