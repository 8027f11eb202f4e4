//! Corpus evaluation: compares every case under all three approaches,
//! folds the outcomes into per-level statistics, and ranks the approaches
//! per case with dense tie-aware ranking.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend;
use crate::matcher::compare_sources;
use crate::pipeline::{Approach, APPROACHES};

#[derive(Debug, Error)]
pub enum CorpusFormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Layout { path: String, message: String },
}

/// One value per approach, in the fixed sta / lla / ext order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerApproach<T> {
    pub sta: T,
    pub lla: T,
    pub ext: T,
}

impl<T> PerApproach<T> {
    pub fn get(&self, approach: Approach) -> &T {
        match approach {
            Approach::Sta => &self.sta,
            Approach::Lla => &self.lla,
            Approach::ExtLla => &self.ext,
        }
    }

    fn get_mut(&mut self, approach: Approach) -> &mut T {
        match approach {
            Approach::Sta => &mut self.sta,
            Approach::Lla => &mut self.lla,
            Approach::ExtLla => &mut self.ext,
        }
    }
}

/// One compared case: the reversed mismatch score and normalized
/// similarity per approach, and the dense rank each approach earned.
/// Similarity is reported for context only; ranking uses rmt alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseRow {
    pub case_id: String,
    pub level: u8,
    pub rmt: PerApproach<i64>,
    pub similarity: PerApproach<f64>,
    pub rank: PerApproach<u8>,
}

/// An exact mean: the rmt sum over the case count, reduced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: i64,
    pub den: i64,
}

impl Ratio {
    pub fn new(num: i64, den: i64) -> Ratio {
        if den == 0 {
            return Ratio { num: 0, den: 1 };
        }
        let sign = den.signum();
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i64;
        Ratio { num: sign * num / g, den: sign * den / g }
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ApproachStats {
    pub mean_rmt: Ratio,
    pub zero_rmt: usize,
    pub min_rmt: i64,
    pub max_rmt: i64,
}

/// Head-to-head record of two approaches over one level: how often the
/// left one scored a strictly higher rmt, a tie, or a strictly lower one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pairwise {
    pub left: String,
    pub right: String,
    pub left_wins: usize,
    pub ties: usize,
    pub right_wins: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: u8,
    pub cases: usize,
    pub stats: PerApproach<ApproachStats>,
    pub pairwise: Vec<Pairwise>,
}

/// Whole-corpus ranking: every case row plus the per-approach histogram
/// of earned ranks (index 0 counts rank 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingTable {
    pub rows: Vec<CaseRow>,
    pub histogram: PerApproach<[usize; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvalidCase {
    pub case_id: String,
    pub level: u8,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub min_match: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ReportConfig,
    pub levels: Vec<LevelReport>,
    pub ranking: RankingTable,
    pub invalid_cases: Vec<InvalidCase>,
}

/// Dense ranking over descending rmt: the highest value takes rank 1,
/// ties share a rank, and the next distinct value takes the next rank.
pub fn rank_case(rmts: &PerApproach<i64>) -> PerApproach<u8> {
    let values = [rmts.sta, rmts.lla, rmts.ext];
    let mut ranks = PerApproach::default();
    for approach in APPROACHES {
        let value = *rmts.get(approach);
        let above: std::collections::BTreeSet<i64> =
            values.iter().copied().filter(|&v| v > value).collect();
        *ranks.get_mut(approach) = (1 + above.len()) as u8;
    }
    ranks
}

/// Folds one level's case rows into its report.
pub fn summarize(level: u8, rows: &[&CaseRow]) -> LevelReport {
    let mut stats = PerApproach::<ApproachStats>::default();
    for approach in APPROACHES {
        let values: Vec<i64> = rows.iter().map(|r| *r.rmt.get(approach)).collect();
        *stats.get_mut(approach) = ApproachStats {
            mean_rmt: Ratio::new(values.iter().sum(), values.len() as i64),
            zero_rmt: values.iter().filter(|&&v| v == 0).count(),
            min_rmt: values.iter().min().copied().unwrap_or(0),
            max_rmt: values.iter().max().copied().unwrap_or(0),
        };
    }
    let mut pairwise = Vec::new();
    for (i, left) in APPROACHES.iter().enumerate() {
        for right in &APPROACHES[i + 1..] {
            let mut record = Pairwise {
                left: left.to_string(),
                right: right.to_string(),
                left_wins: 0,
                ties: 0,
                right_wins: 0,
            };
            for row in rows {
                let (l, r) = (*row.rmt.get(*left), *row.rmt.get(*right));
                match l.cmp(&r) {
                    std::cmp::Ordering::Greater => record.left_wins += 1,
                    std::cmp::Ordering::Equal => record.ties += 1,
                    std::cmp::Ordering::Less => record.right_wins += 1,
                }
            }
            pairwise.push(record);
        }
    }
    LevelReport { level, cases: rows.len(), stats, pairwise }
}

/// Walks a corpus tree, compares every case under the three approaches,
/// and assembles the full report. Cases whose sources fail to compile are
/// listed as invalid and left out of the statistics, never dropped
/// silently. A malformed tree is an error.
pub fn evaluate_corpus(root: &Path, min_match: usize) -> Result<Report, CorpusFormatError> {
    let mut rows: Vec<CaseRow> = Vec::new();
    let mut invalid: Vec<InvalidCase> = Vec::new();

    for (level, level_dir) in level_dirs(root)? {
        for case_dir in sorted_dirs(&level_dir)? {
            let case_id = dir_name(&case_dir);
            let original = case_dir.join("original.mj");
            let plagiarized = case_dir.join("plagiarized.mj");
            for required in [&original, &plagiarized] {
                if !required.is_file() {
                    return Err(CorpusFormatError::Layout {
                        path: case_dir.display().to_string(),
                        message: format!("missing {}", dir_name(required)),
                    });
                }
            }
            match compare_case(&original, &plagiarized, min_match) {
                Ok((rmt, similarity)) => {
                    let rank = rank_case(&rmt);
                    rows.push(CaseRow { case_id, level, rmt, similarity, rank });
                }
                Err(reason) => invalid.push(InvalidCase { case_id, level, reason }),
            }
        }
    }

    let mut levels = Vec::new();
    let mut seen: Vec<u8> = rows.iter().map(|r| r.level).collect();
    seen.sort_unstable();
    seen.dedup();
    for level in seen {
        let slice: Vec<&CaseRow> = rows.iter().filter(|r| r.level == level).collect();
        levels.push(summarize(level, &slice));
    }

    let mut histogram = PerApproach::<[usize; 3]>::default();
    for row in &rows {
        for approach in APPROACHES {
            histogram.get_mut(approach)[(*row.rank.get(approach) - 1) as usize] += 1;
        }
    }

    Ok(Report {
        config: ReportConfig { min_match },
        levels,
        ranking: RankingTable { rows, histogram },
        invalid_cases: invalid,
    })
}

fn compare_case(
    original: &Path,
    plagiarized: &Path,
    min_match: usize,
) -> Result<(PerApproach<i64>, PerApproach<f64>), String> {
    let a = frontend::load(original).map_err(|e| e.to_string())?;
    let b = frontend::load(plagiarized).map_err(|e| e.to_string())?;
    let mut rmt = PerApproach::default();
    let mut similarity = PerApproach::default();
    for approach in APPROACHES {
        let result = compare_sources(&a, &b, approach, min_match).map_err(|e| e.to_string())?;
        *rmt.get_mut(approach) = result.rmt;
        *similarity.get_mut(approach) = result.similarity;
    }
    Ok((rmt, similarity))
}

fn level_dirs(root: &Path) -> Result<Vec<(u8, PathBuf)>, CorpusFormatError> {
    let mut found = Vec::new();
    for dir in sorted_dirs(root)? {
        let name = dir_name(&dir);
        let Some(level) = name.strip_prefix("level-").and_then(|n| n.parse::<u8>().ok()) else {
            return Err(CorpusFormatError::Layout {
                path: dir.display().to_string(),
                message: "expected a level-<n> directory".into(),
            });
        };
        found.push((level, dir));
    }
    if found.is_empty() {
        return Err(CorpusFormatError::Layout {
            path: root.display().to_string(),
            message: "no level directories".into(),
        });
    }
    found.sort();
    Ok(found)
}

fn sorted_dirs(dir: &Path) -> Result<Vec<PathBuf>, CorpusFormatError> {
    let entries = fs::read_dir(dir).map_err(|source| CorpusFormatError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut dirs = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| CorpusFormatError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        if entry.path().is_dir() {
            dirs.push(entry.path());
        }
    }
    dirs.sort();
    Ok(dirs)
}

fn dir_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Writes `report.json` and `ranking.csv` under `out`.
pub fn write_report(report: &Report, out: &Path) -> Result<(), CorpusFormatError> {
    fs::create_dir_all(out).map_err(|source| CorpusFormatError::Io {
        path: out.display().to_string(),
        source,
    })?;
    let json = serde_json::to_string_pretty(report).expect("report serializes") + "\n";
    write_file(&out.join("report.json"), &json)?;
    write_file(&out.join("ranking.csv"), &render_csv(report))
}

fn write_file(path: &Path, text: &str) -> Result<(), CorpusFormatError> {
    fs::write(path, text).map_err(|source| CorpusFormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn render_csv(report: &Report) -> String {
    let mut out = String::from("case_id,level,rmt_sta,rmt_lla,rmt_ext,rank_sta,rank_lla,rank_ext\n");
    for row in &report.ranking.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.case_id,
            row.level,
            row.rmt.sta,
            row.rmt.lla,
            row.rmt.ext,
            row.rank.sta,
            row.rank.lla,
            row.rank.ext
        )
        .expect("string write");
    }
    out
}

/// Human-readable summary: per-level means to two decimals, then the
/// rank histogram.
pub fn render_text(report: &Report) -> String {
    let mut out = String::new();
    for lv in &report.levels {
        writeln!(out, "level {} ({} cases)", lv.level, lv.cases).expect("string write");
        for approach in APPROACHES {
            let s = lv.stats.get(approach);
            writeln!(
                out,
                "  {:<8} mean rmt {:>8.2}  zero {:>3}  min {:>5}  max {:>5}",
                approach.to_string(),
                s.mean_rmt.as_f64(),
                s.zero_rmt,
                s.min_rmt,
                s.max_rmt
            )
            .expect("string write");
        }
    }
    writeln!(out, "ranking over {} cases", report.ranking.rows.len()).expect("string write");
    for approach in APPROACHES {
        let h = report.ranking.histogram.get(approach);
        writeln!(
            out,
            "  {:<8} rank1 {:>3}  rank2 {:>3}  rank3 {:>3}",
            approach.to_string(),
            h[0],
            h[1],
            h[2]
        )
        .expect("string write");
    }
    if !report.invalid_cases.is_empty() {
        writeln!(out, "invalid cases: {}", report.invalid_cases.len()).expect("string write");
        for c in &report.invalid_cases {
            writeln!(out, "  level {} {}: {}", c.level, c.case_id, c.reason).expect("string write");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn per(sta: i64, lla: i64, ext: i64) -> PerApproach<i64> {
        PerApproach { sta, lla, ext }
    }

    #[test]
    fn dense_ranking_shares_ranks_on_ties() {
        assert_eq!(rank_case(&per(-10, -3, -3)), PerApproach { sta: 2, lla: 1, ext: 1 });
        assert_eq!(rank_case(&per(-2, -1, 0)), PerApproach { sta: 3, lla: 2, ext: 1 });
        assert_eq!(rank_case(&per(-7, -7, -7)), PerApproach { sta: 1, lla: 1, ext: 1 });
        assert_eq!(rank_case(&per(-7, 0, 0)), PerApproach { sta: 2, lla: 1, ext: 1 });
    }

    #[test]
    fn summaries_count_wins_ties_and_extremes() {
        let rows = [
            CaseRow {
                case_id: "case-01".into(),
                level: 2,
                rmt: per(-6, 0, 0),
                similarity: PerApproach { sta: 0.7, lla: 1.0, ext: 1.0 },
                rank: rank_case(&per(-6, 0, 0)),
            },
            CaseRow {
                case_id: "case-02".into(),
                level: 2,
                rmt: per(-4, -2, 0),
                similarity: PerApproach { sta: 0.8, lla: 0.9, ext: 1.0 },
                rank: rank_case(&per(-4, -2, 0)),
            },
        ];
        let refs: Vec<&CaseRow> = rows.iter().collect();
        let report = summarize(2, &refs);
        assert_eq!(report.cases, 2);
        assert_eq!(report.stats.sta.mean_rmt, Ratio::new(-10, 2));
        assert_eq!(report.stats.sta.mean_rmt, Ratio { num: -5, den: 1 });
        assert_eq!(report.stats.ext.zero_rmt, 2);
        assert_eq!((report.stats.lla.min_rmt, report.stats.lla.max_rmt), (-2, 0));
        let sta_ext = report
            .pairwise
            .iter()
            .find(|p| p.left == "sta" && p.right == "ext-lla")
            .expect("pair present");
        assert_eq!((sta_ext.left_wins, sta_ext.ties, sta_ext.right_wins), (0, 0, 2));
    }

    #[test]
    fn ratios_reduce_and_survive_json() {
        assert_eq!(Ratio::new(-32, 10), Ratio { num: -16, den: 5 });
        assert_eq!(Ratio::new(0, 7), Ratio { num: 0, den: 1 });
        assert_eq!(Ratio::new(3, -6), Ratio { num: -1, den: 2 });
        let text = serde_json::to_string(&Ratio::new(-32, 10)).expect("serialize");
        assert_eq!(text, r#"{"num":-16,"den":5}"#);
    }

    fn arbitrary_rows() -> impl Strategy<Value = Vec<CaseRow>> {
        let rmt = -40i64..=0;
        proptest::collection::vec((1u8..=6, rmt.clone(), rmt.clone(), rmt), 1..60).prop_map(
            |raw| {
                raw.into_iter()
                    .enumerate()
                    .map(|(i, (level, sta, lla, ext))| {
                        let rmt = per(sta, lla, ext);
                        CaseRow {
                            case_id: format!("case-{i:02}"),
                            level,
                            similarity: PerApproach::default(),
                            rank: rank_case(&rmt),
                            rmt,
                        }
                    })
                    .collect()
            },
        )
    }

    proptest! {
        #[test]
        fn ranks_stay_dense_and_ordered(rows in arbitrary_rows()) {
            for row in &rows {
                let ranks = [row.rank.sta, row.rank.lla, row.rank.ext];
                prop_assert!(ranks.iter().all(|r| (1..=3).contains(r)));
                prop_assert!(ranks.contains(&1));
                for a in APPROACHES {
                    for b in APPROACHES {
                        let (ra, rb) = (*row.rank.get(a), *row.rank.get(b));
                        let (va, vb) = (*row.rmt.get(a), *row.rmt.get(b));
                        if va > vb {
                            prop_assert!(ra < rb);
                        } else if va == vb {
                            prop_assert_eq!(ra, rb);
                        }
                    }
                }
                // Dense: no rank is skipped below an occupied one.
                let max = *ranks.iter().max().expect("three ranks");
                for r in 1..=max {
                    prop_assert!(ranks.contains(&r));
                }
            }
        }

        #[test]
        fn level_summaries_merge_into_the_whole(rows in arbitrary_rows()) {
            // Pairwise counts per level sum to the level case count, and
            // ranking the merged corpus equals concatenating the slices.
            let mut seen: Vec<u8> = rows.iter().map(|r| r.level).collect();
            seen.sort_unstable();
            seen.dedup();
            let mut merged = 0usize;
            for level in seen {
                let slice: Vec<&CaseRow> = rows.iter().filter(|r| r.level == level).collect();
                let report = summarize(level, &slice);
                for pair in &report.pairwise {
                    prop_assert_eq!(pair.left_wins + pair.ties + pair.right_wins, report.cases);
                }
                let total: i64 = slice.iter().map(|r| r.rmt.ext).sum();
                prop_assert_eq!(report.stats.ext.mean_rmt, Ratio::new(total, report.cases as i64));
                prop_assert!(report.stats.ext.mean_rmt.as_f64() <= 0.0);
                merged += report.cases;
            }
            prop_assert_eq!(merged, rows.len());
            let mut histogram = PerApproach::<[usize; 3]>::default();
            for row in &rows {
                for approach in APPROACHES {
                    histogram.get_mut(approach)[(*row.rank.get(approach) - 1) as usize] += 1;
                }
            }
            for approach in APPROACHES {
                let h = histogram.get(approach);
                prop_assert_eq!(h[0] + h[1] + h[2], rows.len());
            }
        }
    }

    #[test]
    fn reports_render_to_csv_with_one_row_per_case() {
        let rmt = per(-6, -2, 0);
        let report = Report {
            config: ReportConfig { min_match: 3 },
            levels: vec![],
            ranking: RankingTable {
                rows: vec![CaseRow {
                    case_id: "case-01-rename-locals".into(),
                    level: 2,
                    similarity: PerApproach::default(),
                    rank: rank_case(&rmt),
                    rmt,
                }],
                histogram: PerApproach::default(),
            },
            invalid_cases: vec![],
        };
        let csv = render_csv(&report);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next(),
            Some("case_id,level,rmt_sta,rmt_lla,rmt_ext,rank_sta,rank_lla,rank_ext")
        );
        assert_eq!(lines.next(), Some("case-01-rename-locals,2,-6,-2,0,3,2,1"));
        assert_eq!(lines.next(), None);
    }
}
