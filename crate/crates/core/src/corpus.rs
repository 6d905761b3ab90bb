//! Small grammars used by the tests, the acceptance suite and the CLI
//! examples.

use crate::error::Result;
use crate::grammar::{parse_grammar, WeightedGrammar};

pub const ANBN: &str = include_str!("../grammars/anbn.bnf");
pub const DYCK: &str = include_str!("../grammars/dyck.bnf");
pub const ARITH: &str = include_str!("../grammars/arith.bnf");

/// `(name, source)` for every corpus grammar.
pub const ALL: [(&str, &str); 3] = [("anbn", ANBN), ("dyck", DYCK), ("arith", ARITH)];

pub fn anbn() -> WeightedGrammar {
    parse_grammar(ANBN).expect("corpus grammar parses")
}

pub fn dyck() -> WeightedGrammar {
    parse_grammar(DYCK).expect("corpus grammar parses")
}

pub fn arith() -> WeightedGrammar {
    parse_grammar(ARITH).expect("corpus grammar parses")
}

pub fn load(name: &str) -> Option<Result<WeightedGrammar>> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, src)| parse_grammar(src))
}

/// Every string over `alphabet` of length at most `max_len`, shortest first.
pub fn all_strings(alphabet: &[char], max_len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut layer = vec![String::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|p| alphabet.iter().map(move |&c| format!("{p}{c}")))
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}
