pub mod corpus;
pub mod covering;
pub mod ec_cyk;
pub mod error;
pub mod grammar;
pub mod oracle;
pub mod retrieval;
pub mod semiring;
pub mod valiant;

pub use covering::{build_covering, CoveringGrammar};
pub use ec_cyk::{cyk_distance, distance_from_chart, ec_parse, PairSetChart};
pub use error::{Error, Result};
pub use grammar::{parse_grammar, Production, Symbol, WeightedGrammar};
pub use semiring::{Cost, Multiplier, PairSet, PairSetMatrix, Strategy, TropicalMatrix, INF};
pub use valiant::{approx_distance, bounded_distance, init_matrix, iterative_closure, valiant_closure, Distance};
pub use retrieval::{correct, extract_correction, parse_tree, Correction, Edit, EditScript, ParseNode};
pub use oracle::{brute_force_distance, levenshtein, LanguageOracle, OracleResult};
