//! `nl2ltl` — the operator surface of the translation pipeline.
//!
//! Subcommands mirror the pipeline stages: `parse`, `canonicalize`,
//! `backtranslate`, `synth`, `train`, `translate`, `check`, and `eval`.
//! Every run prints its resolved configuration to stderr; stdout carries
//! only the result. Errors print one diagnostic line and exit nonzero.

use std::collections::BTreeSet;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use nl2ltl::backtranslate::{back_translate_rule, back_translate_template, load_structures};
use nl2ltl::canonical::{from_canonical, to_canonical, CanonicalForm, Lexicon};
use nl2ltl::decoder::{
    build_trie, constrained_decode, train_lexical, unconstrained_decode, LexicalConfig,
    LexicalModel, RemoteScorer, Scorer,
};
use nl2ltl::eval::{golden_corpus, ingest, run_eval, EvalConfig, Scenario, ScorerKind};
use nl2ltl::ltl::{
    evaluate_trace, parse_infix, parse_prefix, parse_steps, ApSet, AtomicProp, Formula, Notation,
    Trace, RESERVED_TOKENS,
};
use nl2ltl::synthesis::{
    build_corpus, enumerate_formulas, BuildOptions, Corpus, FallbackParaphraser,
    HttpParaphraseService, ParaphraseService, TargetRepr,
};

#[derive(Parser)]
#[command(
    name = "nl2ltl",
    version,
    about = "Natural language → LTL translation pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReprArg {
    RawPrefix,
    RawInfix,
    Canonical,
}

impl From<ReprArg> for TargetRepr {
    fn from(value: ReprArg) -> Self {
        match value {
            ReprArg::RawPrefix => TargetRepr::RawPrefix,
            ReprArg::RawInfix => TargetRepr::RawInfix,
            ReprArg::Canonical => TargetRepr::Canonical,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    /// Deterministic offline paraphraser.
    Fallback,
    /// Text-completion endpoint from NL2LTL_PARAPHRASE_* variables.
    Service,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScorerArg {
    Lexical,
    Oracle,
    Remote,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScenarioArg {
    GoldenCv,
    LowResource,
}

/// One formula in exactly one notation.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct FormulaInput {
    /// Formula in Polish prefix notation, e.g. "F & R F X".
    #[arg(long)]
    prefix: Option<String>,
    /// Formula in parenthesized infix notation, e.g. "F ( R & F ( X ) )".
    #[arg(long)]
    infix: Option<String>,
}

/// One formula in at most one notation.
#[derive(Args)]
#[group(required = false, multiple = false)]
struct OptionalFormulaInput {
    /// Formula in Polish prefix notation, e.g. "F & R F X".
    #[arg(long)]
    prefix: Option<String>,
    /// Formula in parenthesized infix notation, e.g. "F ( R & F ( X ) )".
    #[arg(long)]
    infix: Option<String>,
}

impl OptionalFormulaInput {
    fn get(&self) -> Option<FormulaInput> {
        if self.prefix.is_some() || self.infix.is_some() {
            Some(FormulaInput {
                prefix: self.prefix.clone(),
                infix: self.infix.clone(),
            })
        } else {
            None
        }
    }
}

impl FormulaInput {
    fn parse(&self, aps: &ApSet) -> Result<(Formula, Notation)> {
        if let Some(text) = &self.prefix {
            Ok((parse_prefix(text, aps)?, Notation::Prefix))
        } else {
            let text = self.infix.as_ref().expect("clap group guarantees one");
            Ok((parse_infix(text, aps)?, Notation::Infix))
        }
    }

    fn raw_text(&self) -> &str {
        self.prefix
            .as_deref()
            .or(self.infix.as_deref())
            .expect("clap group guarantees one")
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse a formula and echo it in the other notation.
    Parse {
        #[command(flatten)]
        formula: FormulaInput,
        /// AP set file; without it, identifiers are accepted as APs.
        #[arg(long)]
        apset: Option<PathBuf>,
    },
    /// Render a formula in canonical form, or parse a canonical form back.
    Canonicalize {
        #[command(flatten)]
        formula: OptionalFormulaInput,
        /// Canonical form to parse back into a formula (echoed as infix).
        #[arg(long, conflicts_with_all = ["prefix", "infix"])]
        canonical: Option<String>,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        apset: Option<PathBuf>,
    },
    /// Back-translate a formula into structured English.
    Backtranslate {
        #[command(flatten)]
        formula: FormulaInput,
        #[arg(long)]
        lexicon: PathBuf,
        /// Structures/templates file; enables the template path.
        #[arg(long)]
        structures: Option<PathBuf>,
        #[arg(long)]
        apset: Option<PathBuf>,
    },
    /// Build a synthetic corpus: enumerate, back-translate, paraphrase.
    Synth {
        #[arg(long)]
        apset: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        structures: PathBuf,
        /// Take the formula set from this dataset instead of enumerating.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        n_paraphrases: usize,
        #[arg(long, value_enum, default_value_t = BackendArg::Fallback)]
        backend: BackendArg,
        #[arg(long, value_enum, default_value_t = ReprArg::RawPrefix)]
        repr: ReprArg,
        #[arg(long, default_value_t = 4)]
        max_in_flight: usize,
    },
    /// Train the lexical scorer on a corpus or on golden dataset examples.
    Train {
        #[arg(long, conflicts_with = "dataset", required_unless_present = "dataset")]
        corpus: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Needed to interpret corpus targets; defaults to the dataset's
        /// AP descriptions.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// AP set for corpus targets (defaults to the dataset's).
        #[arg(long)]
        apset: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ReprArg::RawPrefix)]
        repr: ReprArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
    },
    /// Translate a natural-language command into a formula string.
    Translate {
        #[arg(long)]
        input: String,
        #[arg(long)]
        model: PathBuf,
        /// Dataset whose formula set defines the valid outputs.
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ReprArg::RawPrefix)]
        repr: ReprArg,
        #[arg(long, default_value_t = 1)]
        beam: usize,
        #[arg(long)]
        no_constrained_decoding: bool,
        #[arg(long, default_value_t = 64)]
        max_len: usize,
        #[arg(long, value_enum, default_value_t = ScorerArg::Lexical)]
        scorer: ScorerArg,
    },
    /// Check a formula against a finite trace.
    Check {
        /// Formula in prefix notation (use --infix-formula for infix).
        #[arg(long)]
        formula: String,
        #[arg(long)]
        infix_formula: bool,
        /// Whitespace-separated steps, e.g. "{} {B} {A,B}".
        #[arg(long)]
        trace: String,
        #[arg(long)]
        apset: Option<PathBuf>,
    },
    /// Run the evaluation protocol and print the report.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        /// JSON file with a full evaluation config; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum)]
        scenario: Option<ScenarioArg>,
        #[arg(long, value_enum)]
        repr: Option<ReprArg>,
        #[arg(long)]
        k_folds: Option<usize>,
        #[arg(long)]
        beam: Option<usize>,
        #[arg(long)]
        n_paraphrases: Option<usize>,
        /// Ablation: decode over the open vocabulary.
        #[arg(long)]
        no_constrained_decoding: bool,
        /// Ablation: train on unparaphrased seed sentences only.
        #[arg(long, conflicts_with = "n_paraphrases")]
        no_augmentation: bool,
        #[arg(long, value_enum)]
        scorer: Option<ScorerArg>,
        #[arg(long, value_enum, default_value_t = BackendArg::Fallback)]
        backend: BackendArg,
        /// Structures/templates for low-resource synthesis.
        #[arg(long)]
        structures: Option<PathBuf>,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Write the machine-readable report here.
        #[arg(long)]
        report_out: Option<PathBuf>,
    },
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn resolved(parts: &[(&str, String)]) {
    let line = parts
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ");
    eprintln!("# resolved: {line}");
}

/// An AP set accepting every non-reserved identifier in the given texts.
fn permissive_apset(texts: &[&str]) -> Result<ApSet> {
    let mut names = BTreeSet::new();
    for text in texts {
        for token in text.split_whitespace() {
            if !RESERVED_TOKENS.contains(&token) && !token.starts_with('{') {
                names.insert(token.to_string());
            }
        }
    }
    Ok(ApSet::new(
        names
            .into_iter()
            .map(|n| AtomicProp::new(n.clone(), n))
            .collect(),
    )?)
}

fn load_apset_or_permissive(apset: &Option<PathBuf>, texts: &[&str]) -> Result<ApSet> {
    match apset {
        Some(path) => Ok(ApSet::load(path).with_context(|| format!("loading {}", path.display()))?),
        None => permissive_apset(texts),
    }
}

fn apset_from_lexicon(lex: &Lexicon) -> Result<ApSet> {
    Ok(ApSet::new(
        lex.ap_phrases
            .iter()
            .map(|(name, phrase)| AtomicProp::new(name.clone(), phrase.clone()))
            .collect(),
    )?)
}

fn paraphrase_backend(backend: BackendArg, seed: u64) -> Result<Box<dyn ParaphraseService>> {
    Ok(match backend {
        BackendArg::Fallback => Box::new(FallbackParaphraser::new(seed)),
        BackendArg::Service => Box::new(HttpParaphraseService::from_env()?),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Parse { formula, apset } => {
            let aps = load_apset_or_permissive(&apset, &[formula.raw_text()])?;
            let (parsed, notation) = formula.parse(&aps)?;
            let other = match notation {
                Notation::Prefix => Notation::Infix,
                Notation::Infix => Notation::Prefix,
            };
            resolved(&[
                ("subcommand", "parse".into()),
                ("apset", describe(&apset)),
                ("emit", format!("{other:?}").to_lowercase()),
            ]);
            println!("{}", parsed.print(other));
        }
        Command::Canonicalize {
            formula,
            canonical,
            lexicon,
            apset,
        } => {
            let lex = Lexicon::load(&lexicon)?;
            resolved(&[
                ("subcommand", "canonicalize".into()),
                ("lexicon", lexicon.display().to_string()),
            ]);
            match (formula.get(), canonical) {
                (Some(formula), None) => {
                    let aps = match &apset {
                        Some(path) => ApSet::load(path)?,
                        None => apset_from_lexicon(&lex)?,
                    };
                    let (parsed, _) = formula.parse(&aps)?;
                    println!("{}", to_canonical(&parsed, &lex)?);
                }
                (None, Some(text)) => {
                    let parsed = from_canonical(&CanonicalForm::new(text), &lex)?;
                    println!("{}", parsed.print(Notation::Infix));
                }
                _ => bail!("provide either a formula (--prefix/--infix) or --canonical"),
            }
        }
        Command::Backtranslate {
            formula,
            lexicon,
            structures,
            apset,
        } => {
            let lex = Lexicon::load(&lexicon)?;
            let aps = match &apset {
                Some(path) => ApSet::load(path)?,
                None => apset_from_lexicon(&lex)?,
            };
            let (parsed, _) = formula.parse(&aps)?;
            resolved(&[
                ("subcommand", "backtranslate".into()),
                (
                    "mode",
                    if structures.is_some() {
                        "template".into()
                    } else {
                        "rule".into()
                    },
                ),
            ]);
            let sentence = match &structures {
                Some(path) => {
                    let (structures, templates) = load_structures(path)?;
                    back_translate_template(&parsed, &structures, &templates, &lex)?
                }
                None => back_translate_rule(&parsed, &lex)?,
            };
            println!("{sentence}");
        }
        Command::Synth {
            apset,
            lexicon,
            structures,
            dataset,
            out,
            seed,
            n_paraphrases,
            backend,
            repr,
            max_in_flight,
        } => {
            let aps = ApSet::load(&apset)?;
            let lex = Lexicon::load(&lexicon)?;
            let (structure_list, templates) = load_structures(&structures)?;
            let formulas = match &dataset {
                Some(path) => ingest(path)?.formulas(),
                None => enumerate_formulas(&structure_list, &aps)?,
            };
            let svc = paraphrase_backend(backend, seed)?;
            let options = BuildOptions {
                repr: repr.into(),
                n_paraphrases,
                max_in_flight,
            };
            resolved(&[
                ("subcommand", "synth".into()),
                ("formulas", formulas.len().to_string()),
                ("n_paraphrases", n_paraphrases.to_string()),
                ("backend", svc.fingerprint()),
                ("repr", TargetRepr::from(repr).as_str().into()),
                ("seed", seed.to_string()),
                ("out", out.display().to_string()),
            ]);
            let build = build_corpus(
                &formulas,
                &structure_list,
                &templates,
                &aps,
                &lex,
                svc.as_ref(),
                &options,
            )?;
            for failure in &build.failures {
                eprintln!(
                    "warning: paraphrase failed for {}; kept the seed example ({})",
                    failure.source_id, failure.error
                );
            }
            build.corpus.save(&out)?;
            println!("wrote {} examples to {}", build.corpus.len(), out.display());
        }
        Command::Train {
            corpus,
            dataset,
            lexicon,
            apset,
            repr,
            out,
            alpha,
        } => {
            let repr: TargetRepr = repr.into();
            let (training, source) =
                load_training_corpus(&corpus, &dataset, &lexicon, &apset, repr)?;
            let config = LexicalConfig {
                alpha,
                ..Default::default()
            };
            resolved(&[
                ("subcommand", "train".into()),
                ("source", source),
                ("examples", training.len().to_string()),
                ("repr", repr.as_str().into()),
                ("alpha", alpha.to_string()),
                ("out", out.display().to_string()),
            ]);
            let model = train_lexical(&training, &config)?;
            model.save(&out)?;
            println!(
                "trained on {} examples -> {}",
                training.len(),
                out.display()
            );
        }
        Command::Translate {
            input,
            model,
            dataset,
            lexicon,
            repr,
            beam,
            no_constrained_decoding,
            max_len,
            scorer,
        } => {
            let repr: TargetRepr = repr.into();
            let data = ingest(&dataset)?;
            let lex = match &lexicon {
                Some(path) => Lexicon::load(path)?,
                None => Lexicon::from_apset(&data.aps),
            };
            let valid = data.valid_outputs(repr, &lex)?;
            let trie = build_trie(&valid)?;
            let lexical = LexicalModel::load(&model)?;
            let remote;
            let scorer_ref: &dyn Scorer = match scorer {
                ScorerArg::Lexical => &lexical,
                ScorerArg::Remote => {
                    remote = RemoteScorer::from_env()
                        .ok_or_else(|| anyhow!("NL2LTL_SCORER_URL is not set"))?;
                    &remote
                }
                ScorerArg::Oracle => bail!("the oracle scorer is only meaningful inside eval"),
            };
            resolved(&[
                ("subcommand", "translate".into()),
                ("dataset", data.name.clone()),
                ("repr", repr.as_str().into()),
                ("constrained", (!no_constrained_decoding).to_string()),
                ("beam", beam.to_string()),
            ]);
            let output = if no_constrained_decoding {
                unconstrained_decode(&input, scorer_ref, lexical.output_vocabulary(), max_len)
            } else {
                constrained_decode(&input, scorer_ref, &trie, beam)
            };
            println!("{output}");
        }
        Command::Check {
            formula,
            infix_formula,
            trace,
            apset,
        } => {
            let aps = load_apset_or_permissive(&apset, &[formula.as_str()])?;
            let parsed = if infix_formula {
                parse_infix(&formula, &aps)?
            } else {
                parse_prefix(&formula, &aps)?
            };
            let steps = parse_steps(&trace)?;
            let mut universe = aps.name_set();
            for step in &steps {
                universe.extend(step.iter().cloned());
            }
            let trace = Trace::with_universe(steps, universe)?;
            resolved(&[
                ("subcommand", "check".into()),
                ("formula", parsed.print(Notation::Prefix)),
                ("steps", trace.len().to_string()),
            ]);
            let sat = evaluate_trace(&parsed, &trace)?;
            println!("{}", if sat { "SAT" } else { "UNSAT" });
        }
        Command::Eval {
            dataset,
            config,
            seed,
            scenario,
            repr,
            k_folds,
            beam,
            n_paraphrases,
            no_constrained_decoding,
            no_augmentation,
            scorer,
            backend,
            structures,
            lexicon,
            report_out,
        } => {
            let data = ingest(&dataset)?;
            let mut eval_config: EvalConfig = match &config {
                Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)
                    .with_context(|| format!("parsing {}", path.display()))?,
                None => EvalConfig::default(),
            };
            // flag > config file > default
            eval_config.seed = seed;
            if let Some(s) = scenario {
                eval_config.scenario = match s {
                    ScenarioArg::GoldenCv => Scenario::GoldenCv,
                    ScenarioArg::LowResource => Scenario::LowResource,
                };
            }
            if let Some(r) = repr {
                eval_config.repr = r.into();
            }
            if let Some(k) = k_folds {
                eval_config.k_folds = k;
            }
            if let Some(b) = beam {
                eval_config.beam = b;
            }
            if let Some(n) = n_paraphrases {
                eval_config.n_paraphrases = n;
            }
            if no_augmentation {
                eval_config.n_paraphrases = 0;
            }
            if no_constrained_decoding {
                eval_config.constrained = false;
            }
            if let Some(s) = scorer {
                eval_config.scorer = match s {
                    ScorerArg::Lexical => ScorerKind::Lexical,
                    ScorerArg::Oracle => ScorerKind::Oracle,
                    ScorerArg::Remote => ScorerKind::Remote,
                };
            }

            let lex = match &lexicon {
                Some(path) => Lexicon::load(path)?,
                None => Lexicon::from_apset(&data.aps),
            };
            let (structure_list, templates) = match &structures {
                Some(path) => load_structures(path)?,
                None => (Vec::new(), Vec::new()),
            };
            let svc = paraphrase_backend(backend, eval_config.seed)?;
            resolved(&[
                ("subcommand", "eval".into()),
                ("dataset", data.name.clone()),
                ("scenario", format!("{:?}", eval_config.scenario)),
                ("repr", eval_config.repr.as_str().into()),
                ("constrained", eval_config.constrained.to_string()),
                ("n_paraphrases", eval_config.n_paraphrases.to_string()),
                ("k_folds", eval_config.k_folds.to_string()),
                ("seed", eval_config.seed.to_string()),
                ("beam", eval_config.beam.to_string()),
                ("scorer", format!("{:?}", eval_config.scorer)),
                ("backend", svc.fingerprint()),
            ]);
            let report = run_eval(
                &data,
                &structure_list,
                &templates,
                &lex,
                svc.as_ref(),
                &eval_config,
            )?;
            print!("{}", report.render_table());
            if let Some(path) = &report_out {
                report.save(path)?;
                eprintln!("# report written to {}", path.display());
            }
        }
    }
    Ok(())
}

fn describe(path: &Option<PathBuf>) -> String {
    path.as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| "-".into())
}

fn load_training_corpus(
    corpus: &Option<PathBuf>,
    dataset: &Option<PathBuf>,
    lexicon: &Option<PathBuf>,
    apset: &Option<PathBuf>,
    repr: TargetRepr,
) -> Result<(Corpus, String)> {
    match (corpus, dataset) {
        (Some(path), _) => {
            let lex = match lexicon {
                Some(p) => Lexicon::load(p)?,
                None => match apset {
                    Some(p) => Lexicon::from_apset(&ApSet::load(p)?),
                    None => bail!("--corpus needs --lexicon or --apset to interpret targets"),
                },
            };
            let aps = match apset {
                Some(p) => ApSet::load(p)?,
                None => apset_from_lexicon(&lex)?,
            };
            Ok((Corpus::load(path, &aps, &lex)?, path.display().to_string()))
        }
        (None, Some(path)) => {
            let data = ingest(path)?;
            let lex = match lexicon {
                Some(p) => Lexicon::load(p)?,
                None => Lexicon::from_apset(&data.aps),
            };
            Ok((golden_corpus(&data, repr, &lex)?, data.name))
        }
        (None, None) => bail!("provide --corpus or --dataset"),
    }
}
