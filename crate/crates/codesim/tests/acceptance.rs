//! Acceptance gate for the whole toolkit. Each test covers one release
//! criterion, prints a single `criterion NN <name>: pass|fail` line, and
//! asserts with the offending cases listed. The corpus under test is the
//! one the committed seeds generate at the default configuration, built
//! once and shared.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use codesim::attacks::{evaluate, generate_corpus, parse_input_script, CorpusConfig};
use codesim::frontend::{self, SourceUnit};
use codesim::harness::{evaluate_corpus, write_report, CaseRow, Report};
use codesim::matcher::{compare_sources, tile, DEFAULT_MIN_MATCH};
use codesim::pipeline::{build_units, Approach};

const GENERATOR_SEED: u64 = 2024;
const PER_LEVEL: usize = 10;

struct Fixture {
    root: tempfile::TempDir,
    report: Report,
    evaluate_elapsed: Duration,
}

impl Fixture {
    fn corpus(&self) -> PathBuf {
        self.root.path().join("corpus")
    }

    fn case_dir(&self, row: &CaseRow) -> PathBuf {
        self.corpus().join(format!("level-{}", row.level)).join(&row.case_id)
    }
}

static FIXTURE: LazyLock<Fixture> = LazyLock::new(|| {
    let root = tempfile::tempdir().expect("tempdir");
    let corpus = root.path().join("corpus");
    generate_corpus(&CorpusConfig {
        seeds: seeds_dir(),
        out: corpus.clone(),
        per_level: PER_LEVEL,
        seed: GENERATOR_SEED,
    })
    .expect("corpus generates");
    let started = Instant::now();
    let report = evaluate_corpus(&corpus, DEFAULT_MIN_MATCH).expect("corpus evaluates");
    let evaluate_elapsed = started.elapsed();
    assert!(report.invalid_cases.is_empty(), "{:?}", report.invalid_cases);
    Fixture { root, report, evaluate_elapsed }
});

fn seeds_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../seeds")
}

fn rows() -> &'static [CaseRow] {
    &FIXTURE.report.ranking.rows
}

fn rows_with(slug: &str) -> Vec<&'static CaseRow> {
    rows().iter().filter(|r| r.case_id.ends_with(slug)).collect()
}

fn load_case(row: &CaseRow) -> (SourceUnit, SourceUnit) {
    let dir = FIXTURE.case_dir(row);
    let original = frontend::load(&dir.join("original.mj")).expect("original parses");
    let plagiarized = frontend::load(&dir.join("plagiarized.mj")).expect("plagiarized parses");
    (original, plagiarized)
}

fn verdict(number: usize, name: &str, violations: Vec<String>) {
    let outcome = if violations.is_empty() { "pass" } else { "fail" };
    println!("criterion {number:02} {name}: {outcome}");
    assert!(violations.is_empty(), "{}", violations.join("\n"));
}

#[test]
fn criterion_01_level_1_and_2_cases_match_exactly() {
    let mut violations = Vec::new();
    let started = Instant::now();
    for row in rows().iter().filter(|r| r.level <= 2) {
        let (original, plagiarized) = load_case(row);
        for approach in [Approach::Lla, Approach::ExtLla] {
            let result = compare_sources(&original, &plagiarized, approach, DEFAULT_MIN_MATCH)
                .expect("case compiles");
            if result.rmt != 0 {
                violations.push(format!("{}: {approach} rmt {}", row.case_id, result.rmt));
            }
        }
    }
    let elapsed = started.elapsed();
    if elapsed >= Duration::from_secs(5) {
        violations.push(format!("took {elapsed:?}"));
    }
    verdict(1, "level-1-2-exactness", violations);
}

#[test]
fn criterion_02_sta_penalizes_every_rename() {
    let mut violations = Vec::new();
    for row in rows().iter().filter(|r| r.level == 2) {
        let (original, plagiarized) = load_case(row);
        if original.text == plagiarized.text {
            violations.push(format!("{}: no identifier changed", row.case_id));
        }
        if row.rmt.sta >= 0 {
            violations.push(format!("{}: sta rmt {}", row.case_id, row.rmt.sta));
        }
    }
    verdict(2, "sta-rename-sensitivity", violations);
}

#[test]
fn criterion_03_mean_ext_rmt_never_recovers_across_levels() {
    let mut violations = Vec::new();
    let mut means: Vec<(u8, i64, i64)> = Vec::new();
    for level in 1..=6u8 {
        let level_rows: Vec<&CaseRow> = rows().iter().filter(|r| r.level == level).collect();
        if level_rows.is_empty() {
            violations.push(format!("level {level} has no cases"));
            continue;
        }
        let sum = level_rows.iter().map(|r| r.rmt.ext).sum();
        means.push((level, sum, level_rows.len() as i64));
    }
    for pair in means.windows(2) {
        let ((lo, sum_lo, n_lo), (hi, sum_hi, n_hi)) = (pair[0], pair[1]);
        if sum_lo * n_hi < sum_hi * n_lo {
            violations.push(format!(
                "level {lo} mean {}/{} < level {hi} mean {}/{}",
                sum_lo, n_lo, sum_hi, n_hi
            ));
        }
    }
    verdict(3, "monotone-degradation", violations);
}

#[test]
fn criterion_04_ext_lla_dominates_the_ranking() {
    let mut violations = Vec::new();
    let n = rows().len();
    let at_least_sta = rows().iter().filter(|r| r.rmt.ext >= r.rmt.sta).count();
    if at_least_sta * 100 < n * 95 {
        violations.push(format!("ext >= sta on only {at_least_sta} of {n} cases"));
    }
    let rank_one = rows().iter().filter(|r| r.rank.ext == 1).count();
    if rank_one * 100 < n * 95 {
        violations.push(format!("ext holds rank 1 on only {rank_one} of {n} cases"));
    }
    if FIXTURE.evaluate_elapsed >= Duration::from_secs(60) {
        violations.push(format!("evaluation took {:?}", FIXTURE.evaluate_elapsed));
    }
    verdict(4, "ext-lla-dominance", violations);
}

#[test]
fn criterion_05_loop_sugar_swaps_stay_invisible() {
    let mut violations = Vec::new();
    let cases = rows_with("while-to-for");
    if cases.is_empty() {
        violations.push("no while-to-for cases generated".to_string());
    }
    for row in cases {
        if row.rmt.lla != 0 || row.rmt.ext != 0 {
            violations.push(format!(
                "{}: lla {} ext {}",
                row.case_id, row.rmt.lla, row.rmt.ext
            ));
        }
    }
    verdict(5, "while-for-uniformity", violations);
}

#[test]
fn criterion_06_scope_paths_expose_guarded_dowhile_bodies() {
    let mut violations = Vec::new();
    let cases = rows_with("while-to-dowhile");
    if cases.is_empty() {
        violations.push("no while-to-dowhile cases generated".to_string());
    }
    for row in cases {
        if row.rmt.ext >= row.rmt.lla {
            violations.push(format!(
                "{}: ext {} not below lla {}",
                row.case_id, row.rmt.ext, row.rmt.lla
            ));
        }
        let (original, plagiarized) = load_case(row);
        let built = build_units(&plagiarized, Approach::ExtLla).expect("case compiles");
        let keys: BTreeMap<&str, &[String]> =
            built.units.iter().map(|u| (u.name.as_str(), u.keys.as_slice())).collect();
        let loop_tokens: usize = built
            .units
            .iter()
            .flat_map(|u| &u.keys)
            .filter(|k| k.contains("dowhile-body"))
            .count();
        if loop_tokens == 0 {
            violations.push(format!("{}: no do-while body tokens emitted", row.case_id));
        }
        let result = compare_sources(&original, &plagiarized, Approach::ExtLla, DEFAULT_MIN_MATCH)
            .expect("case compiles");
        for pair in &result.unit_pairing {
            let Some(unit) = pair.unit_b.as_deref().and_then(|name| keys.get(name)) else {
                continue;
            };
            for t in &pair.tiles {
                for key in &unit[t.start_b..t.start_b + t.length] {
                    if key.contains("dowhile-body") {
                        violations.push(format!("{}: tiled loop token {key}", row.case_id));
                    }
                }
            }
        }
    }
    verdict(6, "dowhile-flow-weighting", violations);
}

#[test]
fn criterion_07_declaration_moves_cut_the_right_way() {
    let mut violations = Vec::new();
    let out_of_loop = rows_with("relocate-decl-out-of-loop");
    if out_of_loop.is_empty() {
        violations.push("no relocate-decl-out-of-loop cases generated".to_string());
    }
    for row in out_of_loop {
        if row.rmt.lla <= row.rmt.ext {
            violations.push(format!(
                "{}: lla {} not above ext {}",
                row.case_id, row.rmt.lla, row.rmt.ext
            ));
        }
    }
    let to_global = rows_with("relocate-decl-to-global");
    if to_global.is_empty() {
        violations.push("no relocate-decl-to-global cases generated".to_string());
    }
    for row in to_global {
        if row.rmt.ext >= 0 {
            violations.push(format!("{}: ext rmt {}", row.case_id, row.rmt.ext));
        }
    }
    verdict(7, "relocation-sensitivity", violations);
}

#[test]
fn criterion_08_argument_removal_never_hurts() {
    let mut violations = Vec::new();
    let mut population = 0usize;
    let mut strict = 0usize;
    for row in rows().iter().filter(|r| r.level == 4) {
        let (original, plagiarized) = load_case(row);
        let before = arities(&original);
        let after = arities(&plagiarized);
        // The attacked call site's argc is the arity of the one function
        // that appeared or disappeared.
        let argc = before
            .iter()
            .filter(|(name, _)| !after.contains_key(name.as_str()))
            .chain(after.iter().filter(|(name, _)| !before.contains_key(name.as_str())))
            .map(|(_, argc)| *argc)
            .max();
        let Some(argc) = argc else {
            violations.push(format!("{}: function set unchanged", row.case_id));
            continue;
        };
        if argc == 0 {
            continue;
        }
        population += 1;
        if row.rmt.ext < row.rmt.lla {
            violations.push(format!(
                "{}: ext {} below lla {}",
                row.case_id, row.rmt.ext, row.rmt.lla
            ));
        }
        if row.rmt.ext > row.rmt.lla {
            strict += 1;
        }
    }
    if population == 0 {
        violations.push("no level-4 case touches an argument-taking call".to_string());
    } else if strict == 0 {
        violations.push("ext never strictly above lla".to_string());
    }
    verdict(8, "argument-removal-benefit", violations);
}

fn arities(unit: &SourceUnit) -> BTreeMap<String, usize> {
    unit.ast.functions.iter().map(|f| (f.name.clone(), f.params.len())).collect()
}

#[test]
fn criterion_09_tiling_agrees_with_the_quadratic_reference() {
    let mut violations = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let started = Instant::now();
    for round in 0..1000 {
        let alphabet = rng.gen_range(2..8u32);
        let a: Vec<u32> = (0..rng.gen_range(0..=30)).map(|_| rng.gen_range(0..alphabet)).collect();
        let b: Vec<u32> = (0..rng.gen_range(0..=30)).map(|_| rng.gen_range(0..alphabet)).collect();
        let min_match = rng.gen_range(1..=4);
        let tiles = tile(&a, &b, min_match);
        let matched: usize = tiles.iter().map(|t| t.length).sum();
        let want: usize = reference_tiles(&a, &b, min_match).iter().map(|t| t.2).sum();
        if matched != want {
            violations.push(format!(
                "round {round}: matched {matched}, reference {want} (mml {min_match}, a {a:?}, b {b:?})"
            ));
            continue;
        }
        let mut free_a = vec![true; a.len()];
        let mut free_b = vec![true; b.len()];
        for t in &tiles {
            if t.length < min_match {
                violations.push(format!("round {round}: tile below {min_match}: {t:?}"));
            }
            for k in 0..t.length {
                if a[t.start_a + k] != b[t.start_b + k]
                    || !free_a[t.start_a + k]
                    || !free_b[t.start_b + k]
                {
                    violations.push(format!("round {round}: overlapping tile {t:?}"));
                    break;
                }
                free_a[t.start_a + k] = false;
                free_b[t.start_b + k] = false;
            }
        }
        if matched > a.len().min(b.len()) {
            violations.push(format!("round {round}: matched {matched} beyond stream length"));
        }
        if violations.len() > 5 {
            break;
        }
    }
    let elapsed = started.elapsed();
    if elapsed >= Duration::from_secs(10) {
        violations.push(format!("took {elapsed:?}"));
    }
    verdict(9, "matcher-oracle", violations);
}

/// Reference tiler: quadratic and hash-free. Each round scans every start
/// pair for the longest common run of unmarked tokens, ties going to the
/// smallest pair, and marks it, until nothing of `min_match` is left.
fn reference_tiles(a: &[u32], b: &[u32], min_match: usize) -> Vec<(usize, usize, usize)> {
    let mml = min_match.max(1);
    let mut free_a = vec![true; a.len()];
    let mut free_b = vec![true; b.len()];
    let mut tiles = Vec::new();
    loop {
        let mut best: Option<(usize, usize, usize)> = None;
        for i in 0..a.len() {
            for j in 0..b.len() {
                let mut len = 0;
                while i + len < a.len()
                    && j + len < b.len()
                    && free_a[i + len]
                    && free_b[j + len]
                    && a[i + len] == b[j + len]
                {
                    len += 1;
                }
                if len >= mml && best.map_or(true, |(_, _, bl)| len > bl) {
                    best = Some((i, j, len));
                }
            }
        }
        let Some((i, j, len)) = best else { break };
        for k in 0..len {
            free_a[i + k] = false;
            free_b[j + k] = false;
        }
        tiles.push((i, j, len));
    }
    tiles
}

#[test]
fn criterion_10_metric_identities_hold_on_real_programs() {
    let mut violations = Vec::new();
    let sources: Vec<SourceUnit> = rows()
        .iter()
        .flat_map(|row| {
            let (original, plagiarized) = load_case(row);
            [original, plagiarized]
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for round in 0..100 {
        let a = &sources[rng.gen_range(0..sources.len())];
        let b = &sources[rng.gen_range(0..sources.len())];
        let approach = [Approach::Sta, Approach::Lla, Approach::ExtLla][round % 3];
        let fwd = compare_sources(a, b, approach, DEFAULT_MIN_MATCH).expect("compiles");
        let rev = compare_sources(b, a, approach, DEFAULT_MIN_MATCH).expect("compiles");
        let mt = (fwd.len_a + fwd.len_b) as i64 - 2 * fwd.matched_total as i64;
        let similarity = if fwd.len_a + fwd.len_b == 0 {
            1.0
        } else {
            2.0 * fwd.matched_total as f64 / (fwd.len_a + fwd.len_b) as f64
        };
        if fwd.mt != mt || fwd.rmt != -mt || fwd.similarity != similarity {
            violations.push(format!("round {round}: metric identities broken: {fwd:?}"));
        }
        if (fwd.mt, fwd.rmt, fwd.similarity) != (rev.mt, rev.rmt, rev.similarity)
            || (fwd.len_a, fwd.len_b) != (rev.len_b, rev.len_a)
        {
            violations.push(format!("round {round}: comparison not symmetric"));
        }
        let this = compare_sources(a, a, approach, DEFAULT_MIN_MATCH).expect("compiles");
        if this.rmt != 0 {
            violations.push(format!("round {round}: self comparison rmt {}", this.rmt));
        }
    }
    verdict(10, "metric-identities", violations);
}

#[test]
fn criterion_11_attacks_preserve_program_behavior() {
    let mut violations = Vec::new();
    for row in rows().iter().filter(|r| r.level <= 5) {
        let (original, plagiarized) = load_case(row);
        let script = std::fs::read_to_string(FIXTURE.case_dir(row).join("input.txt"))
            .expect("input script");
        let input = parse_input_script(&script).expect("input parses");
        let want = evaluate(&original.ast, &input);
        let got = evaluate(&plagiarized.ast, &input);
        if want.is_err() || want != got {
            violations.push(format!("{}: {want:?} vs {got:?}", row.case_id));
        }
    }
    verdict(11, "semantic-preservation", violations);
}

#[test]
fn criterion_12_generation_and_evaluation_are_deterministic() {
    let mut violations = Vec::new();
    let scratch = tempfile::tempdir().expect("tempdir");
    let mut trees = Vec::new();
    for name in ["first", "second"] {
        let corpus = scratch.path().join(name);
        generate_corpus(&CorpusConfig {
            seeds: seeds_dir(),
            out: corpus.clone(),
            per_level: PER_LEVEL,
            seed: GENERATOR_SEED,
        })
        .expect("corpus generates");
        let report = evaluate_corpus(&corpus, DEFAULT_MIN_MATCH).expect("corpus evaluates");
        let out = scratch.path().join(format!("{name}-report"));
        write_report(&report, &out).expect("report writes");
        let mut files = walk(&corpus);
        files.extend(walk(&out));
        trees.push(files);
    }
    let (first, second) = (&trees[0], &trees[1]);
    if first.len() != second.len() {
        violations.push(format!("file counts differ: {} vs {}", first.len(), second.len()));
    }
    for ((path_a, bytes_a), (path_b, bytes_b)) in first.iter().zip(second) {
        if path_a != path_b {
            violations.push(format!("tree shapes diverge at {path_a} vs {path_b}"));
            break;
        }
        if bytes_a != bytes_b {
            violations.push(format!("{path_a}: contents differ between runs"));
        }
    }
    verdict(12, "determinism", violations);
}

/// All files under `root` as (path relative to root, contents), sorted.
fn walk(root: &Path) -> Vec<(String, Vec<u8>)> {
    fn collect(dir: &Path, root: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in std::fs::read_dir(dir).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                collect(&path, root, out);
            } else {
                let rel = path.strip_prefix(root).expect("under root");
                let bytes = std::fs::read(&path).expect("readable file");
                out.push((rel.display().to_string(), bytes));
            }
        }
    }
    let mut out = Vec::new();
    collect(root, root, &mut out);
    out.sort();
    out
}
