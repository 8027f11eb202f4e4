//! Attack corpus generation.
//!
//! A corpus is a directory tree of plagiarism cases grouped by difficulty
//! level. Each case pairs a seed program (`original.mj`) with a disguised
//! copy (`plagiarized.mj`), the input script both run on, and the attack
//! specs that produced the copy. Every case is validated by running both
//! programs through the reference evaluator and comparing traces; a case
//! only lands in the corpus if the disguise preserved behaviour.
//!
//! Generation is fully deterministic: one master seed fixes the per-case
//! seeds up front, so two runs with the same seeds directory and settings
//! produce byte-identical trees.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::{self, FrontendError, SourceUnit};

use super::eval::{evaluate, parse_input_script};
use super::{apply_attack, AttackError, AttackKind, AttackSpec};

const MAX_ATTEMPTS: usize = 64;
pub const LEVELS: std::ops::RangeInclusive<u8> = 1..=6;

#[derive(Clone, Debug)]
pub struct CorpusConfig {
    pub seeds: PathBuf,
    pub out: PathBuf,
    pub per_level: usize,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("seed program failed to load: {0}")]
    Seed(#[from] FrontendError),
    #[error("seed input script {path}: {message}")]
    InputScript { path: String, message: String },
    #[error("no seed programs found in {0}")]
    NoSeeds(String),
    #[error("no rewrite pairs found in {0} (expected NAME.a.mj / NAME.b.mj)")]
    NoPairs(String),
    #[error("level {level} {kind}: no valid case after {attempts} attempts")]
    GenerationExhausted { level: u8, kind: AttackKind, attempts: usize },
    #[error(transparent)]
    Attack(#[from] AttackError),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub generator_seed: u64,
    pub per_level: usize,
    pub total_cases: usize,
    pub levels: Vec<ManifestLevel>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestLevel {
    pub level: u8,
    pub cases: Vec<ManifestCase>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestCase {
    pub case_id: String,
    pub seed: String,
    pub attacks: Vec<AttackSpec>,
}

struct Seed {
    name: String,
    unit: SourceUnit,
    input_text: String,
    input: Vec<i64>,
}

struct SeedPair {
    name: String,
    a: SourceUnit,
    b: SourceUnit,
    input_text: String,
    input: Vec<i64>,
}

struct BuiltCase {
    case_id: String,
    seed_name: String,
    original_text: String,
    plagiarized_text: String,
    input_text: String,
    attacks: Vec<AttackSpec>,
}

/// The attack mix per level, as weights that scale with the case count.
fn level_mix(level: u8) -> &'static [(AttackKind, usize)] {
    match level {
        1 => &[(AttackKind::CommentStrip, 5), (AttackKind::WhitespaceReflow, 5)],
        2 => &[(AttackKind::RenameLocals, 5), (AttackKind::RenameFunctions, 5)],
        3 => &[
            (AttackKind::RelocateDeclInBlock, 7),
            (AttackKind::RelocateDeclToGlobal, 2),
            (AttackKind::RelocateDeclOutOfLoop, 1),
        ],
        4 => &[(AttackKind::ExtractBlock, 5), (AttackKind::InlineFunction, 5)],
        5 => &[
            (AttackKind::WhileToFor, 3),
            (AttackKind::WhileToDowhile, 2),
            (AttackKind::SwitchToIfchain, 3),
            (AttackKind::ExpandCompoundAssign, 2),
        ],
        _ => &[(AttackKind::LogicRewrite, 10)],
    }
}

/// Splits `n` cases across a level's mix by largest remainder, so any case
/// count gets as close to the intended ratios as integers allow.
fn kinds_for(level: u8, n: usize) -> Vec<AttackKind> {
    let mix = level_mix(level);
    let total: usize = mix.iter().map(|(_, w)| w).sum();
    let mut counts: Vec<usize> = mix.iter().map(|(_, w)| w * n / total).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..mix.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(mix[i].1 * n % total), i));
    for &i in order.iter().take(n - assigned) {
        counts[i] += 1;
    }
    mix.iter()
        .zip(counts)
        .flat_map(|(&(kind, _), c)| std::iter::repeat(kind).take(c))
        .collect()
}

pub fn generate_corpus(config: &CorpusConfig) -> Result<Manifest, CorpusError> {
    let seeds = load_seeds(&config.seeds)?;
    let pairs = load_pairs(&config.seeds.join("level6"))?;
    if seeds.is_empty() {
        return Err(CorpusError::NoSeeds(config.seeds.display().to_string()));
    }
    if pairs.is_empty() && config.per_level > 0 {
        return Err(CorpusError::NoPairs(config.seeds.join("level6").display().to_string()));
    }

    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let mut levels = Vec::new();
    for level in LEVELS {
        let kinds = kinds_for(level, config.per_level);
        // Fix per-case seeds before generating, so one case's retries
        // cannot shift the choices of the cases after it.
        let case_seeds: Vec<u64> = kinds.iter().map(|_| master.gen()).collect();
        let mut cases = Vec::new();
        for (idx, (&kind, &case_seed)) in kinds.iter().zip(&case_seeds).enumerate() {
            let case_id = format!("case-{:02}-{}", idx + 1, kind.name());
            let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
            let case = if kind == AttackKind::LogicRewrite {
                build_rewrite_case(&pairs, level, idx, case_id, &mut rng)?
            } else {
                build_case(&seeds, level, kind, case_id, &mut rng)?
            };
            cases.push(case);
        }
        levels.push((level, cases));
    }

    write_tree(&config.out, &levels)?;
    let manifest = Manifest {
        generator_seed: config.seed,
        per_level: config.per_level,
        total_cases: levels.iter().map(|(_, c)| c.len()).sum(),
        levels: levels
            .iter()
            .map(|(level, cases)| ManifestLevel {
                level: *level,
                cases: cases
                    .iter()
                    .map(|c| ManifestCase {
                        case_id: c.case_id.clone(),
                        seed: c.seed_name.clone(),
                        attacks: c.attacks.clone(),
                    })
                    .collect(),
            })
            .collect(),
    };
    let path = config.out.join("manifest.json");
    write_text(&path, &to_json(&manifest))?;
    Ok(manifest)
}

fn build_case(
    seeds: &[Seed],
    level: u8,
    kind: AttackKind,
    case_id: String,
    rng: &mut ChaCha8Rng,
) -> Result<BuiltCase, CorpusError> {
    for _ in 0..MAX_ATTEMPTS {
        let seed = &seeds[rng.gen_range(0..seeds.len())];
        let main = AttackSpec { level, kind, seed: rng.gen() };
        let mut attacks = vec![main];
        let mut unit = match apply_attack(&seed.unit, &main) {
            Ok(u) => u,
            Err(AttackError::NotApplicable { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        if level >= 3 {
            let rename = AttackSpec { level, kind: AttackKind::RenameLocals, seed: rng.gen() };
            match apply_attack(&unit, &rename) {
                Ok(u) => {
                    unit = u;
                    attacks.push(rename);
                }
                Err(AttackError::NotApplicable { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }
        let want = evaluate(&seed.unit.ast, &seed.input);
        if want.is_err() || want != evaluate(&unit.ast, &seed.input) {
            continue;
        }
        return Ok(BuiltCase {
            case_id,
            seed_name: seed.name.clone(),
            original_text: seed.unit.text.clone(),
            plagiarized_text: unit.text.clone(),
            input_text: seed.input_text.clone(),
            attacks,
        });
    }
    Err(CorpusError::GenerationExhausted { level, kind, attempts: MAX_ATTEMPTS })
}

fn build_rewrite_case(
    pairs: &[SeedPair],
    level: u8,
    idx: usize,
    case_id: String,
    rng: &mut ChaCha8Rng,
) -> Result<BuiltCase, CorpusError> {
    let pair = &pairs[idx % pairs.len()];
    for _ in 0..MAX_ATTEMPTS {
        let mut attacks =
            vec![AttackSpec { level, kind: AttackKind::LogicRewrite, seed: rng.gen() }];
        let mut unit = pair.b.clone();
        let rename = AttackSpec { level, kind: AttackKind::RenameLocals, seed: rng.gen() };
        match apply_attack(&unit, &rename) {
            Ok(u) => {
                unit = u;
                attacks.push(rename);
            }
            Err(AttackError::NotApplicable { .. }) => {}
            Err(e) => return Err(e.into()),
        }
        let want = evaluate(&pair.a.ast, &pair.input);
        if want.is_err() || want != evaluate(&unit.ast, &pair.input) {
            continue;
        }
        return Ok(BuiltCase {
            case_id,
            seed_name: pair.name.clone(),
            original_text: pair.a.text.clone(),
            plagiarized_text: unit.text.clone(),
            input_text: pair.input_text.clone(),
            attacks,
        });
    }
    Err(CorpusError::GenerationExhausted {
        level,
        kind: AttackKind::LogicRewrite,
        attempts: MAX_ATTEMPTS,
    })
}

fn load_seeds(dir: &Path) -> Result<Vec<Seed>, CorpusError> {
    let mut names: Vec<String> = Vec::new();
    for entry in read_dir(dir)? {
        let path = entry;
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        if path.is_file() && name.ends_with(".mj") {
            names.push(name.to_string());
        }
    }
    names.sort();
    let mut seeds = Vec::new();
    for name in names {
        let unit = frontend::load(&dir.join(&name))?;
        let (input_text, input) = load_input(&dir.join(name.replace(".mj", ".in")))?;
        seeds.push(Seed { name, unit, input_text, input });
    }
    Ok(seeds)
}

fn load_pairs(dir: &Path) -> Result<Vec<SeedPair>, CorpusError> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut stems: Vec<String> = Vec::new();
    for path in read_dir(dir)? {
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        if let Some(stem) = name.strip_suffix(".a.mj") {
            stems.push(stem.to_string());
        }
    }
    stems.sort();
    let mut pairs = Vec::new();
    for stem in stems {
        let a = frontend::load(&dir.join(format!("{stem}.a.mj")))?;
        let b = frontend::load(&dir.join(format!("{stem}.b.mj")))?;
        let (input_text, input) = load_input(&dir.join(format!("{stem}.in")))?;
        pairs.push(SeedPair { name: stem, a, b, input_text, input });
    }
    Ok(pairs)
}

fn load_input(path: &Path) -> Result<(String, Vec<i64>), CorpusError> {
    if !path.is_file() {
        return Ok((String::new(), Vec::new()));
    }
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let input = parse_input_script(&text).map_err(|message| CorpusError::InputScript {
        path: path.display().to_string(),
        message,
    })?;
    Ok((text, input))
}

fn read_dir(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let entries = fs::read_dir(dir).map_err(|source| CorpusError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut paths = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| CorpusError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        paths.push(entry.path());
    }
    Ok(paths)
}

fn write_tree(out: &Path, levels: &[(u8, Vec<BuiltCase>)]) -> Result<(), CorpusError> {
    for (level, cases) in levels {
        for case in cases {
            let dir = out.join(format!("level-{level}")).join(&case.case_id);
            fs::create_dir_all(&dir).map_err(|source| CorpusError::Io {
                path: dir.display().to_string(),
                source,
            })?;
            write_text(&dir.join("original.mj"), &case.original_text)?;
            write_text(&dir.join("plagiarized.mj"), &case.plagiarized_text)?;
            write_text(&dir.join("input.txt"), &case.input_text)?;
            write_text(&dir.join("attacks.json"), &to_json(&case.attacks))?;
        }
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), CorpusError> {
    fs::write(path, text).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut json = serde_json::to_string_pretty(value).expect("serializable");
    json.push('\n');
    json
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seeds_dir() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../seeds")
    }

    #[test]
    fn the_mix_split_respects_weights_at_any_count() {
        for level in LEVELS {
            for n in [1usize, 3, 7, 10, 25] {
                let kinds = kinds_for(level, n);
                assert_eq!(kinds.len(), n, "level {level} count {n}");
                for kind in &kinds {
                    assert!(level_mix(level).iter().any(|(k, _)| k == kind));
                }
            }
        }
        let ten = kinds_for(5, 10);
        assert_eq!(ten.iter().filter(|k| **k == AttackKind::WhileToFor).count(), 3);
        assert_eq!(ten.iter().filter(|k| **k == AttackKind::WhileToDowhile).count(), 2);
        let one = kinds_for(3, 1);
        assert_eq!(one, [AttackKind::RelocateDeclInBlock]);
    }

    #[test]
    fn the_committed_seeds_all_load_and_replay() {
        let seeds = load_seeds(&seeds_dir()).expect("seed programs parse");
        assert!(seeds.len() >= 10, "{} seeds", seeds.len());
        for seed in &seeds {
            evaluate(&seed.unit.ast, &seed.input)
                .unwrap_or_else(|e| panic!("{} faults: {e}", seed.name));
        }
        let pairs = load_pairs(&seeds_dir().join("level6")).expect("pairs parse");
        assert!(pairs.len() >= 3, "{} pairs", pairs.len());
        for pair in &pairs {
            let want = evaluate(&pair.a.ast, &pair.input)
                .unwrap_or_else(|e| panic!("{}.a faults: {e}", pair.name));
            let got = evaluate(&pair.b.ast, &pair.input)
                .unwrap_or_else(|e| panic!("{}.b faults: {e}", pair.name));
            assert_eq!(want, got, "{} traces diverge", pair.name);
        }
    }

    #[test]
    fn generation_fills_every_level_and_reruns_byte_identical() {
        let out_a = tempfile::tempdir().expect("tempdir");
        let out_b = tempfile::tempdir().expect("tempdir");
        let config = |out: &Path| CorpusConfig {
            seeds: seeds_dir(),
            out: out.to_path_buf(),
            per_level: 2,
            seed: 9,
        };
        let manifest = generate_corpus(&config(out_a.path())).expect("generation succeeds");
        assert_eq!(manifest.total_cases, 12);
        assert_eq!(manifest.levels.len(), 6);
        for lv in &manifest.levels {
            assert_eq!(lv.cases.len(), 2, "level {}", lv.level);
            for case in &lv.cases {
                let dir = out_a.path().join(format!("level-{}", lv.level)).join(&case.case_id);
                for name in ["original.mj", "plagiarized.mj", "input.txt", "attacks.json"] {
                    assert!(dir.join(name).is_file(), "{} missing {name}", case.case_id);
                }
            }
        }
        generate_corpus(&config(out_b.path())).expect("second run succeeds");
        assert_eq!(dump_tree(out_a.path()), dump_tree(out_b.path()));
    }

    fn dump_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
        let mut files = Vec::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(dir) = stack.pop() {
            for entry in fs::read_dir(&dir).expect("readable") {
                let path = entry.expect("entry").path();
                if path.is_dir() {
                    stack.push(path);
                } else {
                    let rel = path.strip_prefix(root).expect("under root");
                    files.push((
                        rel.display().to_string(),
                        fs::read(&path).expect("readable file"),
                    ));
                }
            }
        }
        files.sort();
        files
    }
}
