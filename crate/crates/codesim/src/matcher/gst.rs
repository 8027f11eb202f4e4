use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

/// One maximal tiled match between the two streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tile {
    pub start_a: usize,
    pub start_b: usize,
    pub length: usize,
}

pub const INITIAL_SEARCH_LENGTH: usize = 20;

const BASE: u64 = 1_000_003;

/// Greedy string tiling with a Karp-Rabin scan. Matches are hashed per
/// search window, verified token-by-token (a hash collision can never
/// change the result), queued by length, and tiled longest class first with
/// ties broken by `(start_a, start_b)`. A queued match that got partially
/// covered by an earlier tile re-queues its still-free fragments at their
/// own length. The search length follows the usual halving schedule down to
/// `min_match`.
pub fn tile(a: &[u32], b: &[u32], min_match: usize) -> Vec<Tile> {
    let mml = min_match.max(1);
    let mut marked_a = vec![false; a.len()];
    let mut marked_b = vec![false; b.len()];
    let mut tiles = Vec::new();
    let mut s = INITIAL_SEARCH_LENGTH.max(mml);
    loop {
        let (mut queue, lmax) = scan(a, b, &marked_a, &marked_b, s);
        if lmax > 2 * s {
            s = lmax;
            continue;
        }
        mark(&mut marked_a, &mut marked_b, &mut queue, s, &mut tiles);
        if s > 2 * mml {
            s /= 2;
        } else if s > mml {
            s = mml;
        } else {
            break;
        }
    }
    tiles.sort_unstable_by_key(|t| (t.start_a, t.start_b));
    tiles
}

/// Hash of every length-`s` window lying in completely unmarked territory,
/// rolled per contiguous run.
fn window_hashes(tokens: &[u32], marked: &[bool], s: usize) -> Vec<(usize, u64)> {
    let mut out = Vec::new();
    let pow = BASE.wrapping_pow(s as u32 - 1);
    let mut run_start = 0;
    for i in 0..=tokens.len() {
        if i < tokens.len() && !marked[i] {
            continue;
        }
        let run = &tokens[run_start..i];
        if run.len() >= s {
            let mut h: u64 = 0;
            for t in &run[..s] {
                h = h.wrapping_mul(BASE).wrapping_add(u64::from(*t) + 1);
            }
            out.push((run_start, h));
            for k in 0..run.len() - s {
                h = h
                    .wrapping_sub((u64::from(run[k]) + 1).wrapping_mul(pow))
                    .wrapping_mul(BASE)
                    .wrapping_add(u64::from(run[k + s]) + 1);
                out.push((run_start + k + 1, h));
            }
        }
        run_start = i + 1;
    }
    out
}

type MatchQueue = BTreeMap<usize, Vec<(usize, usize)>>;

/// All left-maximal matches of length at least `s` between unmarked runs,
/// keyed by their full (right-extended) length.
fn scan(a: &[u32], b: &[u32], ma: &[bool], mb: &[bool], s: usize) -> (MatchQueue, usize) {
    let mut queue = MatchQueue::new();
    let mut lmax = 0;
    if s == 0 || a.len() < s || b.len() < s {
        return (queue, lmax);
    }
    let mut table: HashMap<u64, Vec<usize>> = HashMap::new();
    for (j, h) in window_hashes(b, mb, s) {
        table.entry(h).or_default().push(j);
    }
    for (i, h) in window_hashes(a, ma, s) {
        let Some(js) = table.get(&h) else { continue };
        for &j in js {
            if a[i..i + s] != b[j..j + s] {
                continue;
            }
            if i > 0 && j > 0 && !ma[i - 1] && !mb[j - 1] && a[i - 1] == b[j - 1] {
                continue;
            }
            let mut len = s;
            while i + len < a.len()
                && j + len < b.len()
                && !ma[i + len]
                && !mb[j + len]
                && a[i + len] == b[j + len]
            {
                len += 1;
            }
            queue.entry(len).or_default().push((i, j));
            lmax = lmax.max(len);
        }
    }
    (queue, lmax)
}

fn mark(
    ma: &mut [bool],
    mb: &mut [bool],
    queue: &mut MatchQueue,
    s: usize,
    tiles: &mut Vec<Tile>,
) {
    while let Some((&len, _)) = queue.iter().next_back() {
        if len < s {
            break;
        }
        let mut entries = queue.remove(&len).expect("class present");
        entries.sort_unstable();
        for (i, j) in entries {
            let occluded = (0..len).any(|k| ma[i + k] || mb[j + k]);
            if !occluded {
                for k in 0..len {
                    ma[i + k] = true;
                    mb[j + k] = true;
                }
                tiles.push(Tile { start_a: i, start_b: j, length: len });
                continue;
            }
            // Re-queue the fragments that are still free on both sides;
            // anything below the current search length is rediscovered by a
            // later scan.
            let mut k = 0;
            while k < len {
                while k < len && (ma[i + k] || mb[j + k]) {
                    k += 1;
                }
                let start = k;
                while k < len && !ma[i + k] && !mb[j + k] {
                    k += 1;
                }
                if k - start >= s {
                    queue.entry(k - start).or_default().push((i + start, j + start));
                }
            }
        }
    }
}
