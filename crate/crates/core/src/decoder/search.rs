//! Greedy and beam decoding, with and without the output-set constraint.

use super::scorer::{Candidate, Scorer};
use super::trie::OutputTrie;

/// Decode the input into a member of the trie's accepted set.
///
/// With `beam == 1` this is the greedy path through the trie: at each node
/// the scorer ranks the trie-legal continuations (plus stop, when the node
/// is terminal); ties break toward termination, then by ascending token
/// order. Wider beams additionally run a standard beam search and return the
/// best-scoring finished hypothesis — the greedy trajectory is always kept
/// in the pool, so widening the beam never returns a lower-scoring sequence.
///
/// The returned string is always in the accepted set: only trie edges are
/// ever followed, and every trie path ends at a terminal.
pub fn constrained_decode(
    input: &str,
    scorer: &dyn Scorer,
    trie: &OutputTrie,
    beam: usize,
) -> String {
    let input_tokens: Vec<&str> = input.split_whitespace().collect();
    let (greedy_tokens, greedy_score) = greedy_path(&input_tokens, scorer, trie);
    if beam <= 1 {
        return greedy_tokens.join(" ");
    }
    let mut best_tokens = greedy_tokens;
    let mut best_score = greedy_score;
    if let Some((tokens, score)) = beam_path(&input_tokens, scorer, trie, beam) {
        if score > best_score || (score == best_score && tokens < best_tokens) {
            best_tokens = tokens;
            best_score = score;
        }
    }
    let _ = best_score;
    best_tokens.join(" ")
}

/// The candidate list for a trie node: stop first (when terminal), then
/// children in ascending token order. Scanning for a strictly greater score
/// therefore implements the tie-break "termination, then lexicographic".
fn node_candidates<'t>(trie: &'t OutputTrie, node: usize) -> Vec<Candidate<'t>> {
    let mut out = Vec::new();
    if trie.is_terminal(node) {
        out.push(Candidate::Stop);
    }
    out.extend(trie.children(node).map(|(t, _)| Candidate::Token(t)));
    out
}

fn sanitize(score: f64) -> f64 {
    if score.is_nan() {
        f64::NEG_INFINITY
    } else {
        score
    }
}

fn greedy_path(
    input_tokens: &[&str],
    scorer: &dyn Scorer,
    trie: &OutputTrie,
) -> (Vec<String>, f64) {
    let mut node = OutputTrie::ROOT;
    let mut tokens: Vec<String> = Vec::new();
    let mut total = 0.0;
    loop {
        let candidates = node_candidates(trie, node);
        debug_assert!(!candidates.is_empty(), "trie nodes always continue or stop");
        let prefix: Vec<&str> = tokens.iter().map(String::as_str).collect();
        let scores = scorer.score_next(input_tokens, &prefix, &candidates);
        let mut best = 0;
        for i in 1..candidates.len() {
            if sanitize(scores[i]) > sanitize(scores[best]) {
                best = i;
            }
        }
        total += sanitize(scores[best]);
        match candidates[best] {
            Candidate::Stop => return (tokens, total),
            Candidate::Token(t) => {
                node = trie.child(node, t).expect("candidate came from this node");
                tokens.push(t.to_string());
            }
        }
    }
}

struct Hypothesis {
    node: usize,
    tokens: Vec<String>,
    score: f64,
}

fn beam_path(
    input_tokens: &[&str],
    scorer: &dyn Scorer,
    trie: &OutputTrie,
    beam: usize,
) -> Option<(Vec<String>, f64)> {
    let mut frontier = vec![Hypothesis {
        node: OutputTrie::ROOT,
        tokens: Vec::new(),
        score: 0.0,
    }];
    let mut finished: Option<(Vec<String>, f64)> = None;
    // Every expansion either stops or descends one trie edge, so the loop
    // runs at most max_depth + 1 rounds.
    while !frontier.is_empty() {
        let mut next: Vec<Hypothesis> = Vec::new();
        for hyp in &frontier {
            let candidates = node_candidates(trie, hyp.node);
            let prefix: Vec<&str> = hyp.tokens.iter().map(String::as_str).collect();
            let scores = scorer.score_next(input_tokens, &prefix, &candidates);
            for (candidate, raw) in candidates.iter().zip(scores) {
                let score = hyp.score + sanitize(raw);
                match candidate {
                    Candidate::Stop => {
                        let better = match &finished {
                            Some((tokens, best)) => {
                                score > *best || (score == *best && hyp.tokens < *tokens)
                            }
                            None => true,
                        };
                        if better {
                            finished = Some((hyp.tokens.clone(), score));
                        }
                    }
                    Candidate::Token(t) => {
                        let node = trie.child(hyp.node, t).expect("candidate from node");
                        let mut tokens = hyp.tokens.clone();
                        tokens.push(t.to_string());
                        next.push(Hypothesis {
                            node,
                            tokens,
                            score,
                        });
                    }
                }
            }
        }
        next.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.tokens.cmp(&b.tokens))
        });
        next.truncate(beam);
        frontier = next;
    }
    finished
}

/// Greedy decode over the open vocabulary with an end token. The output is
/// not checked against anything and may be malformed — this is the
/// no-constrained-decoding ablation.
pub fn unconstrained_decode(
    input: &str,
    scorer: &dyn Scorer,
    vocab: &[String],
    max_len: usize,
) -> String {
    let input_tokens: Vec<&str> = input.split_whitespace().collect();
    let mut sorted: Vec<&str> = vocab.iter().map(String::as_str).collect();
    sorted.sort_unstable();
    sorted.dedup();
    let mut candidates: Vec<Candidate<'_>> = Vec::with_capacity(sorted.len() + 1);
    candidates.push(Candidate::Stop);
    candidates.extend(sorted.iter().map(|t| Candidate::Token(t)));

    let mut tokens: Vec<String> = Vec::new();
    while tokens.len() < max_len {
        let prefix: Vec<&str> = tokens.iter().map(String::as_str).collect();
        let scores = scorer.score_next(&input_tokens, &prefix, &candidates);
        let mut best = 0;
        for i in 1..candidates.len() {
            if sanitize(scores[i]) > sanitize(scores[best]) {
                best = i;
            }
        }
        match candidates[best] {
            Candidate::Stop => break,
            Candidate::Token(t) => tokens.push(t.to_string()),
        }
    }
    tokens.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::scorer::{OracleScorer, UniformScorer};
    use crate::decoder::trie::build_trie;
    use crate::util::fnv1a;

    /// Deterministic pseudo-random scorer driven by a seed; finite scores.
    struct NoiseScorer {
        seed: u64,
    }

    impl Scorer for NoiseScorer {
        fn score_next(
            &self,
            _: &[&str],
            prefix: &[&str],
            candidates: &[Candidate<'_>],
        ) -> Vec<f64> {
            candidates
                .iter()
                .map(|c| {
                    let key = format!("{}|{}|{}", self.seed, prefix.join(" "), c.as_str());
                    (fnv1a(key.as_bytes()) % 1000) as f64 / 100.0 - 5.0
                })
                .collect()
        }
    }

    /// Prefers tokens that are not even in the trie's alphabet; the
    /// membership guarantee must hold regardless.
    struct OutOfSetScorer;

    impl Scorer for OutOfSetScorer {
        fn score_next(&self, _: &[&str], _: &[&str], candidates: &[Candidate<'_>]) -> Vec<f64> {
            candidates
                .iter()
                .map(|c| match c {
                    Candidate::Token(t) if *t == "zzz_not_in_set" => 100.0,
                    Candidate::Stop => -50.0,
                    _ => -10.0,
                })
                .collect()
        }
    }

    fn small_set() -> Vec<String> {
        ["F B", "F R", "F ( B & R )", "G ! B", "B U R"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    #[test]
    fn uniform_scorer_output_is_in_set() {
        let set = small_set();
        let trie = build_trie(&set).unwrap();
        let out = constrained_decode("anything", &UniformScorer, &trie, 1);
        assert!(trie.accepts(&out), "{out}");
    }

    #[test]
    fn oracle_scorer_recovers_every_target() {
        let set = small_set();
        let trie = build_trie(&set).unwrap();
        for target in &set {
            let oracle = OracleScorer::for_target(target);
            for beam in [1, 3] {
                assert_eq!(constrained_decode("x", &oracle, &trie, beam), *target);
            }
        }
    }

    #[test]
    fn adversarial_scorer_stays_in_set() {
        let set = small_set();
        let trie = build_trie(&set).unwrap();
        for beam in [1, 2, 4] {
            let out = constrained_decode("x", &OutOfSetScorer, &trie, beam);
            assert!(trie.accepts(&out), "beam {beam}: `{out}`");
        }
    }

    #[test]
    fn noise_scorers_stay_in_set() {
        let set = small_set();
        let trie = build_trie(&set).unwrap();
        for seed in 0..200 {
            let out = constrained_decode("input words", &NoiseScorer { seed }, &trie, 1);
            assert!(trie.accepts(&out), "seed {seed}: `{out}`");
        }
    }

    /// Replay a decode's step scores along the trie to get the sequence score.
    fn replay_score(tokens: &[&str], scorer: &dyn Scorer, trie: &OutputTrie) -> f64 {
        let mut node = OutputTrie::ROOT;
        let mut total = 0.0;
        let mut prefix: Vec<&str> = Vec::new();
        for &t in tokens.iter().chain(std::iter::once(&"")) {
            let candidates = node_candidates(trie, node);
            let scores = scorer.score_next(&[], &prefix, &candidates);
            let want = if t.is_empty() {
                Candidate::Stop
            } else {
                Candidate::Token(t)
            };
            let idx = candidates
                .iter()
                .position(|c| *c == want)
                .expect("legal step");
            total += scores[idx];
            if t.is_empty() {
                break;
            }
            node = trie.child(node, t).unwrap();
            prefix.push(t);
        }
        total
    }

    #[test]
    fn beam_score_dominates_greedy_score() {
        let set = small_set();
        let trie = build_trie(&set).unwrap();
        for seed in 0..100 {
            let scorer = NoiseScorer { seed };
            let greedy = constrained_decode("", &scorer, &trie, 1);
            let wide = constrained_decode("", &scorer, &trie, 4);
            let g_tokens: Vec<&str> = greedy.split_whitespace().collect();
            let w_tokens: Vec<&str> = wide.split_whitespace().collect();
            let g = replay_score(&g_tokens, &scorer, &trie);
            let w = replay_score(&w_tokens, &scorer, &trie);
            assert!(w >= g, "seed {seed}: beam {w} < greedy {g}");
        }
    }

    #[test]
    fn unconstrained_oracle_matches_constrained() {
        let set = small_set();
        let trie = build_trie(&set).unwrap();
        let vocab: Vec<String> = ["F", "B", "R", "G", "!", "&", "(", ")", "U"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for target in &set {
            let oracle = OracleScorer::for_target(target);
            let unconstrained = unconstrained_decode("x", &oracle, &vocab, 32);
            let constrained = constrained_decode("x", &oracle, &trie, 1);
            assert_eq!(unconstrained, constrained);
            assert_eq!(unconstrained, *target);
        }
    }

    #[test]
    fn unconstrained_can_go_malformed() {
        struct MalformedScorer;
        impl Scorer for MalformedScorer {
            fn score_next(
                &self,
                _: &[&str],
                prefix: &[&str],
                candidates: &[Candidate<'_>],
            ) -> Vec<f64> {
                // strongly prefer an endless run of "("
                candidates
                    .iter()
                    .map(|c| match c {
                        Candidate::Token(t) if *t == "(" && prefix.len() < 3 => 10.0,
                        Candidate::Stop => 1.0,
                        _ => -10.0,
                    })
                    .collect()
            }
        }
        let vocab: Vec<String> = ["F", "B", "("].iter().map(|s| s.to_string()).collect();
        let out = unconstrained_decode("x", &MalformedScorer, &vocab, 8);
        assert_eq!(out, "( ( (");
        let trie = build_trie(&small_set()).unwrap();
        assert!(!trie.accepts(&out));
    }

    #[test]
    fn unconstrained_respects_max_len() {
        struct NeverStop;
        impl Scorer for NeverStop {
            fn score_next(&self, _: &[&str], _: &[&str], cs: &[Candidate<'_>]) -> Vec<f64> {
                cs.iter()
                    .map(|c| {
                        if matches!(c, Candidate::Stop) {
                            -100.0
                        } else {
                            1.0
                        }
                    })
                    .collect()
            }
        }
        let vocab: Vec<String> = vec!["A".into()];
        let out = unconstrained_decode("x", &NeverStop, &vocab, 5);
        assert_eq!(out.split_whitespace().count(), 5);
    }

    #[test]
    fn nan_scores_do_not_escape_the_set() {
        struct NanScorer;
        impl Scorer for NanScorer {
            fn score_next(&self, _: &[&str], _: &[&str], cs: &[Candidate<'_>]) -> Vec<f64> {
                vec![f64::NAN; cs.len()]
            }
        }
        let trie = build_trie(&small_set()).unwrap();
        let out = constrained_decode("x", &NanScorer, &trie, 2);
        assert!(trie.accepts(&out), "{out}");
    }
}
