//! Shared fixture builders for the integration suites.
//!
//! Three dataset families are modeled, mirroring the published statistics
//! they reproduce: a drone navigation set (5 structures / 12 APs / 343
//! formulas / 6,185 commands, infix targets), an indoor-robot cleanup set
//! (4 structures / 6 APs / 39 formulas / 3,382 commands, prefix targets),
//! and a pick-and-place set (1 structure / 5 APs / 5 formulas, prefix
//! targets). Full-size sets are generated on demand into a scratch
//! directory; the small fixtures shipped under `fixtures/` come from the
//! same builders.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nl2ltl::backtranslate::{AnnotationTemplate, LtlStructure, Skeleton};
use nl2ltl::canonical::Lexicon;
use nl2ltl::ltl::{ApSet, AtomicProp, Formula, Notation};
use nl2ltl::synthesis::{FallbackParaphraser, ParaphraseService};

pub struct FixtureSpec {
    pub name: &'static str,
    pub aps: ApSet,
    pub lexicon: Lexicon,
    pub structures: Vec<LtlStructure>,
    pub templates: Vec<AnnotationTemplate>,
    /// Dataset formulas in dataset order.
    pub formulas: Vec<Formula>,
    /// (text, target) golden records.
    pub records: Vec<(String, String)>,
    pub notation: Notation,
    pub declared: DeclaredStats,
}

#[derive(Clone, Copy)]
pub struct DeclaredStats {
    pub n_structures: usize,
    pub n_formulas: usize,
    pub n_aps: usize,
    pub n_commands: usize,
}

fn apset(pairs: &[(&str, &str)]) -> ApSet {
    ApSet::new(pairs.iter().map(|(n, d)| AtomicProp::new(*n, *d)).collect()).unwrap()
}

fn structure(id: &str, skeleton: &str, distinct: bool) -> LtlStructure {
    LtlStructure::new(id, Skeleton::parse(skeleton).unwrap(), distinct).unwrap()
}

fn template(id: &str, sentence: &str) -> AnnotationTemplate {
    AnnotationTemplate {
        structure_id: id.into(),
        sentence: sentence.into(),
    }
}

fn lexicon_for(aps: &ApSet, templates: &[AnnotationTemplate]) -> Lexicon {
    let mut lex = Lexicon::from_apset(aps);
    lex.structure_templates = templates
        .iter()
        .map(|t| (t.structure_id.clone(), t.sentence.clone()))
        .collect();
    lex
}

/// Deterministic golden command texts for one formula: cycle the surface
/// patterns, then rotate through offline-paraphrase variants of each
/// pattern for later rounds. Duplicates are possible and fine; golden data
/// has them too.
fn golden_texts(patterns: &[String], n: usize, seed: u64) -> Vec<String> {
    let paraphraser = FallbackParaphraser::new(seed);
    let pools: Vec<Vec<String>> = patterns
        .iter()
        .map(|p| {
            let mut pool = vec![p.clone()];
            pool.extend(paraphraser.paraphrase(p, 64).unwrap().into_iter().take(12));
            pool
        })
        .collect();
    // three quarters of the commands phrase the canonical pattern family,
    // the rest cycle through the harder alternatives
    let mut main_used = 0usize;
    let mut hard_used = 0usize;
    (0..n)
        .map(|i| {
            if patterns.len() == 1 || i % 4 < 3 {
                let pool = &pools[0];
                let text = pool[main_used % pool.len()].clone();
                main_used += 1;
                text
            } else {
                let k = 1 + hard_used % (patterns.len() - 1);
                let pool = &pools[k];
                let text = pool[(hard_used / (patterns.len() - 1)) % pool.len()].clone();
                hard_used += 1;
                text
            }
        })
        .collect()
}

/// Spread `total` commands over `n_formulas`: every formula gets the base
/// share, the first `total % n_formulas` of them one extra.
fn command_counts(total: usize, n_formulas: usize) -> Vec<usize> {
    let base = total / n_formulas;
    let extra = total % n_formulas;
    (0..n_formulas)
        .map(|i| base + usize::from(i < extra))
        .collect()
}

// ── cleanup ────────────────────────────────────────────────────────────

pub fn cleanup_spec(total_commands: usize, per_formula_cap: Option<usize>) -> FixtureSpec {
    let aps = apset(&[
        ("R", "go to the red room"),
        ("B", "go to the blue room"),
        ("Y", "go to the yellow room"),
        ("W", "go to the green room"),
        ("X", "go to the blue room with chair"),
        ("Z", "go to the red room with chair"),
    ]);
    let structures = vec![
        structure("visit", "F H1", false),
        structure("visit_seq", "F & H1 F H2", true),
        structure("avoid", "G ! H1", false),
        structure("avoid_until", "U ! H1 H2", true),
    ];
    let templates = vec![
        template("visit", "{1}"),
        template("visit_seq", "{1} and then {2}"),
        template("avoid", "never {1}"),
        template("avoid_until", "do not {1} until you {2}"),
    ];
    let lexicon = lexicon_for(&aps, &templates);

    // The observed formula set: every single visit, every ordered visit
    // pair, two avoidance formulas, and one avoid-until. 6 + 30 + 2 + 1.
    let names = ["B", "R", "W", "X", "Y", "Z"];
    let mut formulas: Vec<Formula> = Vec::new();
    for a in names {
        formulas.push(Formula::finally(Formula::atom(a)));
    }
    for a in names {
        for b in names {
            if a != b {
                formulas.push(Formula::finally(Formula::and(
                    Formula::atom(a),
                    Formula::finally(Formula::atom(b)),
                )));
            }
        }
    }
    formulas.push(Formula::globally(Formula::not(Formula::atom("R"))));
    formulas.push(Formula::globally(Formula::not(Formula::atom("Y"))));
    formulas.push(Formula::until(
        Formula::not(Formula::atom("R")),
        Formula::atom("B"),
    ));
    assert_eq!(formulas.len(), 39);

    let phrase = |name: &str| lexicon.ap_phrases.get(name).unwrap().clone();
    let patterns_for = |f: &Formula| -> Vec<String> {
        match f {
            Formula::Finally(inner) => match inner.as_ref() {
                Formula::Atom(a) => {
                    let p = phrase(a);
                    vec![
                        p.clone(),
                        format!("please {p}"),
                        format!("{p} now"),
                        format!("can you {p}"),
                        format!("robot , {p}"),
                    ]
                }
                Formula::And(l, r) => {
                    let (Formula::Atom(a), Formula::Finally(fr)) = (l.as_ref(), r.as_ref()) else {
                        unreachable!()
                    };
                    let Formula::Atom(b) = fr.as_ref() else {
                        unreachable!()
                    };
                    let (a, b) = (phrase(a), phrase(b));
                    vec![
                        format!("{a} and then {b}"),
                        format!("{a} then {b}"),
                        format!("first {a} and after that {b}"),
                        format!("{b} , but {a} first"),
                        format!("please {a} before you {b}"),
                    ]
                }
                _ => unreachable!(),
            },
            Formula::Globally(inner) => {
                let Formula::Not(n) = inner.as_ref() else {
                    unreachable!()
                };
                let Formula::Atom(a) = n.as_ref() else {
                    unreachable!()
                };
                let p = phrase(a);
                vec![
                    format!("never {p}"),
                    format!("do not ever {p}"),
                    format!("at no time should you {p}"),
                    format!("make sure you never {p}"),
                ]
            }
            Formula::Until(l, r) => {
                let (Formula::Not(n), Formula::Atom(b)) = (l.as_ref(), r.as_ref()) else {
                    unreachable!()
                };
                let Formula::Atom(a) = n.as_ref() else {
                    unreachable!()
                };
                let (a, b) = (phrase(a), phrase(b));
                vec![
                    format!("do not {a} until you {b}"),
                    format!("hold off , do not {a} until you {b}"),
                    format!("{b} first and do not {a} before that"),
                ]
            }
            _ => unreachable!(),
        }
    };

    let counts = command_counts(total_commands, formulas.len());
    let mut records = Vec::new();
    for (idx, f) in formulas.iter().enumerate() {
        let n = per_formula_cap.map_or(counts[idx], |cap| cap.min(counts[idx]));
        let patterns = patterns_for(f);
        for text in golden_texts(&patterns, n, 0xC1EA + idx as u64) {
            records.push((text, f.print(Notation::Prefix)));
        }
    }

    let declared = DeclaredStats {
        n_structures: 4,
        n_formulas: 39,
        n_aps: 6,
        n_commands: records.len(),
    };
    FixtureSpec {
        name: "cleanup",
        aps,
        lexicon,
        structures,
        templates,
        formulas,
        records,
        notation: Notation::Prefix,
        declared,
    }
}

/// Cleanup at its published size: 3,382 commands over the 39 formulas.
pub fn cleanup_full() -> FixtureSpec {
    let spec = cleanup_spec(3382, None);
    assert_eq!(spec.records.len(), 3382);
    spec
}

/// A small shipped variant: three commands per formula.
pub fn cleanup_mini() -> FixtureSpec {
    let mut spec = cleanup_spec(39 * 3, None);
    spec.name = "cleanup_mini";
    spec
}

// ── drone ──────────────────────────────────────────────────────────────

fn drone_aps() -> ApSet {
    apset(&[
        ("blue_room", "the blue room"),
        ("red_room", "the red room"),
        ("yellow_room", "the yellow room"),
        ("green_room", "the green room"),
        ("purple_room", "the purple room"),
        ("orange_room", "the orange room"),
        ("first_floor", "the first floor"),
        ("second_floor", "the second floor"),
        ("landmark_1", "landmark 1"),
        ("landmark_2", "landmark 2"),
        ("charging_station", "the charging station"),
        ("corridor", "the corridor"),
    ])
}

fn drone_structures() -> (Vec<LtlStructure>, Vec<AnnotationTemplate>) {
    let structures = vec![
        structure("visit", "F H1", false),
        structure("visit_seq", "F & H1 F H2", true),
        structure("visit_seq3", "F & H1 F & H2 F H3", true),
        structure("avoid", "G ! H1", false),
        structure("visit_avoid", "& F H1 G ! H2", true),
    ];
    let templates = vec![
        template("visit", "go to {1}"),
        template("visit_seq", "go to {1} and then go to {2}"),
        template("visit_seq3", "go to {1} then {2} and finally {3}"),
        template("avoid", "always avoid {1}"),
        template("visit_avoid", "go to {1} while avoiding {2}"),
    ];
    (structures, templates)
}

fn drone_formulas(aps: &ApSet) -> Vec<Formula> {
    let names = aps.sorted_names();
    let mut formulas = Vec::new();
    for a in &names {
        formulas.push(Formula::finally(Formula::atom(a.clone())));
    }
    for a in &names {
        for b in &names {
            if a != b {
                formulas.push(Formula::finally(Formula::and(
                    Formula::atom(a.clone()),
                    Formula::finally(Formula::atom(b.clone())),
                )));
            }
        }
    }
    // first 55 three-visit sequences in lexicographic assignment order
    let mut three = Vec::new();
    'outer: for a in &names {
        for b in &names {
            for c in &names {
                if a != b && a != c && b != c {
                    three.push(Formula::finally(Formula::and(
                        Formula::atom(a.clone()),
                        Formula::finally(Formula::and(
                            Formula::atom(b.clone()),
                            Formula::finally(Formula::atom(c.clone())),
                        )),
                    )));
                    if three.len() == 55 {
                        break 'outer;
                    }
                }
            }
        }
    }
    formulas.extend(three);
    for a in &names {
        formulas.push(Formula::globally(Formula::not(Formula::atom(a.clone()))));
    }
    for a in &names {
        for b in &names {
            if a != b {
                formulas.push(Formula::and(
                    Formula::finally(Formula::atom(a.clone())),
                    Formula::globally(Formula::not(Formula::atom(b.clone()))),
                ));
            }
        }
    }
    assert_eq!(formulas.len(), 12 + 132 + 55 + 12 + 132);
    formulas
}

fn drone_patterns(f: &Formula, lexicon: &Lexicon) -> Vec<String> {
    let phrase = |name: &str| lexicon.ap_phrases.get(name).unwrap().clone();
    match f {
        Formula::Finally(inner) => match inner.as_ref() {
            Formula::Atom(a) => {
                let p = phrase(a);
                vec![
                    format!("go to {p}"),
                    format!("fly to {p}"),
                    format!("head over to {p}"),
                    format!("navigate to {p}"),
                ]
            }
            Formula::And(l, r) => {
                let Formula::Atom(a) = l.as_ref() else {
                    unreachable!()
                };
                match r.as_ref() {
                    Formula::Finally(inner2) => match inner2.as_ref() {
                        Formula::Atom(b) => {
                            let (a, b) = (phrase(a), phrase(b));
                            vec![
                                format!("go to {a} and then go to {b}"),
                                format!("head to {b} , but make sure to go through {a} first ."),
                                format!("first visit {a} then proceed to {b}"),
                                format!("fly to {a} before going to {b}"),
                            ]
                        }
                        Formula::And(m, rr) => {
                            let Formula::Atom(b) = m.as_ref() else {
                                unreachable!()
                            };
                            let Formula::Finally(fc) = rr.as_ref() else {
                                unreachable!()
                            };
                            let Formula::Atom(c) = fc.as_ref() else {
                                unreachable!()
                            };
                            let (a, b, c) = (phrase(a), phrase(b), phrase(c));
                            vec![
                                format!("go to {a} then {b} and finally {c}"),
                                format!("visit {a} and {b} and end up at {c}"),
                                format!("stop by {a} and {b} on your way to {c}"),
                                format!("fly to {a} first , then {b} , and land at {c}"),
                            ]
                        }
                        _ => unreachable!(),
                    },
                    _ => unreachable!(),
                }
            }
            _ => unreachable!(),
        },
        Formula::Globally(inner) => {
            let Formula::Not(n) = inner.as_ref() else {
                unreachable!()
            };
            let Formula::Atom(a) = n.as_ref() else {
                unreachable!()
            };
            let p = phrase(a);
            vec![
                format!("always avoid {p}"),
                format!("stay away from {p} at all times"),
                format!("never enter {p}"),
                format!("keep clear of {p}"),
            ]
        }
        Formula::And(l, r) => {
            let Formula::Finally(fa) = l.as_ref() else {
                unreachable!()
            };
            let Formula::Atom(a) = fa.as_ref() else {
                unreachable!()
            };
            let Formula::Globally(g) = r.as_ref() else {
                unreachable!()
            };
            let Formula::Not(n) = g.as_ref() else {
                unreachable!()
            };
            let Formula::Atom(b) = n.as_ref() else {
                unreachable!()
            };
            let (a, b) = (phrase(a), phrase(b));
            vec![
                format!("go to {a} while avoiding {b}"),
                format!("reach {a} but stay out of {b}"),
                format!("go to {a} without entering {b}"),
                format!("make your way to {a} and keep away from {b}"),
            ]
        }
        _ => unreachable!(),
    }
}

pub fn drone_spec(total_commands: usize, subset: Option<usize>) -> FixtureSpec {
    let aps = drone_aps();
    let (structures, templates) = drone_structures();
    let lexicon = lexicon_for(&aps, &templates);
    let mut formulas = drone_formulas(&aps);
    if let Some(limit) = subset {
        // mini subset: singles, the six-main-room pairs, and avoids
        let names = aps.sorted_names();
        let rooms: Vec<&String> = names.iter().filter(|n| n.ends_with("_room")).collect();
        let mut keep: Vec<Formula> = Vec::new();
        for a in &names {
            keep.push(Formula::finally(Formula::atom(a.clone())));
        }
        for a in &rooms {
            for b in &rooms {
                if a != b {
                    keep.push(Formula::finally(Formula::and(
                        Formula::atom((*a).clone()),
                        Formula::finally(Formula::atom((*b).clone())),
                    )));
                }
            }
        }
        for a in &rooms {
            keep.push(Formula::globally(Formula::not(Formula::atom((*a).clone()))));
        }
        keep.truncate(limit);
        formulas = keep;
    }

    let counts = command_counts(total_commands, formulas.len());
    let mut records = Vec::new();
    for (idx, f) in formulas.iter().enumerate() {
        let patterns = drone_patterns(f, &lexicon);
        for text in golden_texts(&patterns, counts[idx], 0xD0 + idx as u64) {
            records.push((text, f.print(Notation::Infix)));
        }
    }
    let declared = DeclaredStats {
        n_structures: if subset.is_some() { 3 } else { 5 },
        n_formulas: formulas.len(),
        n_aps: 12,
        n_commands: records.len(),
    };
    FixtureSpec {
        name: if subset.is_some() {
            "drone_mini"
        } else {
            "drone"
        },
        aps,
        lexicon,
        structures,
        templates,
        formulas,
        records,
        notation: Notation::Infix,
        declared,
    }
}

/// The drone set at its published size: 343 formulas, 6,185 commands.
pub fn drone_full() -> FixtureSpec {
    let spec = drone_spec(6185, None);
    assert_eq!(spec.formulas.len(), 343);
    assert_eq!(spec.records.len(), 6185);
    spec
}

/// Shipped mini variant: 48 formulas, 4 commands each.
pub fn drone_mini() -> FixtureSpec {
    drone_spec(48 * 4, Some(48))
}

// ── pick-and-place ─────────────────────────────────────────────────────

pub fn pick_spec() -> FixtureSpec {
    let aps = apset(&[
        ("S", "scan"),
        ("C", "any non green cubes"),
        ("D", "any non red cubes"),
        ("E", "any non blue cubes"),
        ("K", "any non yellow cubes"),
    ]);
    // One seed sentence per formula: the skeletons are fully concrete
    // (zero holes), so the annotation count is exactly five.
    let entries = [
        (
            "pick_green",
            "G & U S ! C F C",
            "scan the table and move any non green cubes to the basket",
        ),
        (
            "pick_red",
            "G & U S ! D F D",
            "scan the table and move any non red cubes to the basket",
        ),
        (
            "pick_blue",
            "G & U S ! E F E",
            "scan the table and move any non blue cubes to the basket",
        ),
        (
            "pick_yellow",
            "G & U S ! K F K",
            "scan the table and move any non yellow cubes to the basket",
        ),
        (
            "pick_sweep",
            "G & U D ! K F K",
            "keep moving any non red cubes until no non yellow cubes are left and move any non yellow cubes to the basket",
        ),
    ];
    let structures: Vec<LtlStructure> = entries
        .iter()
        .map(|(id, s, _)| structure(id, s, false))
        .collect();
    let templates: Vec<AnnotationTemplate> =
        entries.iter().map(|(id, _, t)| template(id, t)).collect();
    let lexicon = lexicon_for(&aps, &templates);
    let formulas: Vec<Formula> = structures
        .iter()
        .map(|s| s.instantiate(&BTreeMap::new()).unwrap())
        .collect();

    let color = |tag: &str| match tag {
        "C" => "green",
        "D" => "red",
        "E" => "blue",
        "K" => "yellow",
        _ => unreachable!(),
    };
    let mut records = Vec::new();
    for (f, (id, _, seed_sentence)) in formulas.iter().zip(&entries) {
        let patterns: Vec<String> = if *id == "pick_sweep" {
            vec![
                (*seed_sentence).to_string(),
                "shift the non red cubes until the non yellow ones are gone and put any non yellow cubes in the basket".to_string(),
                "clear non red cubes away , then collect every non yellow cube into the basket".to_string(),
                "move non red cubes aside until no non yellow cubes remain , placing non yellow cubes in the basket".to_string(),
            ]
        } else {
            let c = color(f.atoms().iter().find(|a| **a != "S").unwrap());
            vec![
                format!("scan the empty area of the table and pick up any non {c} objects moving them to the basket"),
                format!("scan the table and move any non {c} cubes to the basket"),
                format!("sweep the table and carry all non {c} blocks to the basket"),
                format!("survey the table surface and drop every non {c} cube into the basket"),
            ]
        };
        for text in golden_texts(&patterns, 8, 0x91C4) {
            records.push((text, f.print(Notation::Prefix)));
        }
    }

    let declared = DeclaredStats {
        n_structures: 1,
        n_formulas: 5,
        n_aps: 5,
        n_commands: records.len(),
    };
    FixtureSpec {
        name: "pick",
        aps,
        lexicon,
        structures,
        templates,
        formulas,
        records,
        notation: Notation::Prefix,
        declared,
    }
}

// ── serialization ──────────────────────────────────────────────────────

/// Write a fixture to disk: manifest, AP set, lexicon, structures, data.
/// Returns the manifest path.
pub fn write_fixture(spec: &FixtureSpec, dir: &Path) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    spec.aps.save(dir.join("aps.jsonl")).unwrap();
    spec.lexicon.save(dir.join("lexicon.json")).unwrap();
    nl2ltl::backtranslate::save_structures(
        dir.join("structures.jsonl"),
        &spec.structures,
        &spec.templates,
    )
    .unwrap();

    let mut data = String::new();
    for (text, target) in &spec.records {
        data.push_str(&serde_json::json!({ "utterance": text, "ltl": target }).to_string());
        data.push('\n');
    }
    std::fs::write(dir.join("data.jsonl"), data).unwrap();

    let manifest = serde_json::json!({
        "name": spec.name,
        "stats": {
            "n_structures": spec.declared.n_structures,
            "n_formulas": spec.declared.n_formulas,
            "n_aps": spec.declared.n_aps,
            "n_commands": spec.declared.n_commands,
        },
        "adapter": {
            "format": "jsonl",
            "text_field": "utterance",
            "target_field": "ltl",
            "notation": match spec.notation {
                Notation::Prefix => "prefix",
                Notation::Infix => "infix",
            },
        },
        "data": "data.jsonl",
        "apset": "aps.jsonl",
    });
    let path = dir.join("manifest.json");
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&manifest).unwrap() + "\n",
    )
    .unwrap();
    path
}

/// Repo-root `fixtures/` directory.
pub fn shipped_fixtures_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .canonicalize()
        .expect("fixtures directory exists")
}
