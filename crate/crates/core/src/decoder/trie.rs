//! Token trie over the valid output set.

use std::collections::BTreeMap;

use super::DecoderError;

#[derive(Debug, Clone, Default)]
struct Node {
    children: BTreeMap<String, usize>,
    terminal: bool,
}

/// A rooted trie whose root-to-terminal paths spell exactly the valid
/// output strings it was built from (whitespace-tokenized).
#[derive(Debug, Clone)]
pub struct OutputTrie {
    nodes: Vec<Node>,
}

/// Build a trie accepting exactly `valid_outputs`.
pub fn build_trie<S: AsRef<str>>(valid_outputs: &[S]) -> Result<OutputTrie, DecoderError> {
    if valid_outputs.is_empty() {
        return Err(DecoderError::EmptyOutputSet);
    }
    let mut trie = OutputTrie {
        nodes: vec![Node::default()],
    };
    for (index, output) in valid_outputs.iter().enumerate() {
        let tokens: Vec<&str> = output.as_ref().split_whitespace().collect();
        if tokens.is_empty() {
            return Err(DecoderError::BlankOutput { index });
        }
        trie.insert(&tokens);
    }
    Ok(trie)
}

impl OutputTrie {
    pub const ROOT: usize = 0;

    fn insert(&mut self, tokens: &[&str]) {
        let mut node = Self::ROOT;
        for &token in tokens {
            node = match self.nodes[node].children.get(token) {
                Some(&next) => next,
                None => {
                    let next = self.nodes.len();
                    self.nodes.push(Node::default());
                    self.nodes[node].children.insert(token.to_string(), next);
                    next
                }
            };
        }
        self.nodes[node].terminal = true;
    }

    /// Children of `node` in ascending token order.
    pub fn children(&self, node: usize) -> impl Iterator<Item = (&str, usize)> {
        self.nodes[node]
            .children
            .iter()
            .map(|(t, &n)| (t.as_str(), n))
    }

    pub fn child(&self, node: usize, token: &str) -> Option<usize> {
        self.nodes[node].children.get(token).copied()
    }

    pub fn is_terminal(&self, node: usize) -> bool {
        self.nodes[node].terminal
    }

    pub fn has_children(&self, node: usize) -> bool {
        !self.nodes[node].children.is_empty()
    }

    /// Membership oracle: does the trie accept this token sequence?
    pub fn accepts(&self, text: &str) -> bool {
        let mut node = Self::ROOT;
        let mut any = false;
        for token in text.split_whitespace() {
            any = true;
            match self.child(node, token) {
                Some(next) => node = next,
                None => return false,
            }
        }
        any && self.is_terminal(node)
    }

    /// Size of the accepted language (number of terminal nodes).
    pub fn accepted_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.terminal).count()
    }

    /// Every accepted string, in trie (token-lexicographic) order.
    pub fn enumerate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut path: Vec<&str> = Vec::new();
        self.walk(Self::ROOT, &mut path, &mut out);
        out
    }

    fn walk<'a>(&'a self, node: usize, path: &mut Vec<&'a str>, out: &mut Vec<String>) {
        if self.is_terminal(node) {
            out.push(path.join(" "));
        }
        for (token, next) in self.children(node) {
            path.push(token);
            self.walk(next, path, out);
            path.pop();
        }
    }

    /// Length in tokens of the longest accepted string.
    pub fn max_depth(&self) -> usize {
        fn depth(trie: &OutputTrie, node: usize) -> usize {
            trie.children(node)
                .map(|(_, next)| 1 + depth(trie, next))
                .max()
                .unwrap_or(0)
        }
        depth(self, Self::ROOT)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_string_trie() {
        let trie = build_trie(&["F B"]).unwrap();
        assert!(trie.accepts("F B"));
        assert!(!trie.accepts("F"));
        assert!(!trie.accepts("F B B"));
        assert!(!trie.accepts(""));
        assert_eq!(trie.accepted_count(), 1);
    }

    #[test]
    fn shared_prefix_splits_into_two_children() {
        let trie = build_trie(&["F B", "F R"]).unwrap();
        let f_node = trie.child(OutputTrie::ROOT, "F").unwrap();
        let children: Vec<&str> = trie.children(f_node).map(|(t, _)| t).collect();
        assert_eq!(children, vec!["B", "R"]);
        assert_eq!(trie.accepted_count(), 2);
    }

    #[test]
    fn accepts_exactly_the_input_set() {
        let inputs = ["F B", "F R", "F ( B & R )", "G ! B", "B"];
        let trie = build_trie(&inputs).unwrap();
        for s in &inputs {
            assert!(trie.accepts(s), "{s}");
        }
        for s in ["F", "F (", "R", "F ( B & R", "G !", "F B R"] {
            assert!(!trie.accepts(s), "{s}");
        }
        let mut enumerated = trie.enumerate();
        let mut expected: Vec<String> = inputs.iter().map(|s| s.to_string()).collect();
        enumerated.sort();
        expected.sort();
        assert_eq!(enumerated, expected);
    }

    #[test]
    fn duplicate_inserts_do_not_inflate_the_language() {
        let trie = build_trie(&["F B", "F B"]).unwrap();
        assert_eq!(trie.accepted_count(), 1);
    }

    #[test]
    fn empty_set_and_blank_strings_are_rejected() {
        assert!(matches!(
            build_trie::<&str>(&[]),
            Err(DecoderError::EmptyOutputSet)
        ));
        assert!(matches!(
            build_trie(&["F B", "   "]),
            Err(DecoderError::BlankOutput { index: 1 })
        ));
    }

    #[test]
    fn max_depth_is_longest_path() {
        let trie = build_trie(&["F B", "F ( B & R )"]).unwrap();
        assert_eq!(trie.max_depth(), 6);
    }
}
