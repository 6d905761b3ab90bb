use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use led_core::covering::CoveringGrammar;
use led_core::ec_cyk::{distance_from_chart, ec_parse, PairSetChart};
use led_core::oracle::brute_force_distance;
use led_core::retrieval::{correct, Edit};
use led_core::semiring::{Multiplier, Strategy};
use led_core::valiant::{approx_from, bounded_distance_with, init_matrix, valiant_closure_with, Distance};
use led_core::{build_covering, parse_grammar, Error, WeightedGrammar};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Language edit distance to a context-free grammar.
#[derive(Parser, Debug)]
#[command(name = "led", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the edit distance from the input to the grammar's language.
    Distance {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = Algo::Cyk)]
        algo: Algo,
        /// Report the distance only if it is at most M, else ">M".
        #[arg(long, value_name = "M", conflicts_with = "approx")]
        max_distance: Option<u32>,
        /// Report the distance if it is at most M, else the input length.
        #[arg(long, value_name = "M")]
        approx: Option<u32>,
        /// Worker threads for tropical products.
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Print a nearest word of the language and the edits that reach it.
    Correct {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        json: bool,
    },
    /// Dump the filled chart as JSON.
    Chart {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = Algo::Cyk)]
        algo: Algo,
    },
    /// Write the covering grammar as JSON.
    Compile {
        #[arg(short, long, value_name = "FILE")]
        grammar: PathBuf,
        /// Output file; standard output if omitted.
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Brute-force distance and nearest words, by enumerating the language.
    Oracle {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Time the distance computation on random inputs; CSV on stdout.
    Bench {
        #[arg(short, long, value_name = "FILE")]
        grammar: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "cyk")]
        algo: Vec<Algo>,
        /// Input lengths.
        #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(short, long, value_name = "FILE")]
    grammar: PathBuf,
    #[arg(short, long, value_name = "STRING", required_unless_present = "input_file", conflicts_with = "input_file")]
    input: Option<String>,
    /// Read the input from a file; trailing newlines are stripped.
    #[arg(long, value_name = "FILE")]
    input_file: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Algo {
    Cyk,
    Valiant,
    ValiantTropical,
}

impl Algo {
    fn name(self) -> &'static str {
        match self {
            Algo::Cyk => "cyk",
            Algo::Valiant => "valiant",
            Algo::ValiantTropical => "valiant-tropical",
        }
    }

    fn strategy(self) -> Strategy {
        match self {
            Algo::ValiantTropical => Strategy::Tropical,
            _ => Strategy::Direct,
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure { code: 1, message: message.into() }
    }

    fn grammar(message: impl Into<String>) -> Failure {
        Failure { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::UnknownTerminal(_) => Failure::usage(e.to_string()),
            _ => Failure::grammar(e.to_string()),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn read_file(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::grammar(format!("{}: {e}", path.display())))
}

fn load_grammar(path: &Path) -> Outcome<WeightedGrammar> {
    parse_grammar(&read_file(path)?).map_err(|e| Failure::grammar(format!("{}: {e}", path.display())))
}

fn load(run: &RunArgs) -> Outcome<(WeightedGrammar, CoveringGrammar, Vec<char>)> {
    let g = load_grammar(&run.grammar)?;
    let cg = build_covering(&g).map_err(|e| Failure::grammar(format!("{}: {e}", run.grammar.display())))?;
    let input = match (&run.input, &run.input_file) {
        (Some(s), _) => s.clone(),
        (None, Some(p)) => read_file(p)?.trim_end_matches(['\n', '\r']).to_string(),
        (None, None) => return Err(Failure::usage("no input given")),
    };
    let input: Vec<char> = input.chars().collect();
    cg.check_input(&input)?;
    Ok((g, cg, input))
}

fn distance(cg: &CoveringGrammar, input: &[char], algo: Algo, cap: Option<u32>, threads: usize) -> Outcome<Distance> {
    match algo {
        Algo::Cyk => {
            let d = distance_from_chart(&ec_parse(cg, input)?, cg)?;
            Ok(match cap {
                Some(m) if d > m => Distance::Exceeds(m),
                _ => Distance::Exact(d),
            })
        }
        _ => {
            let mut mul = Multiplier::new(cg, algo.strategy()).with_cap(cap).with_threads(threads);
            Ok(bounded_distance_with(&mut mul, input)?)
        }
    }
}

fn edit_text(e: &Edit) -> String {
    match e {
        Edit::Insert { pos, ch } => format!("insert {pos} {ch:?}"),
        Edit::Delete { pos } => format!("delete {pos}"),
        Edit::Substitute { pos, ch } => format!("substitute {pos} {ch:?}"),
    }
}

fn json<T: serde::Serialize>(v: &T) -> Outcome<String> {
    serde_json::to_string_pretty(v).map_err(|e| Failure::grammar(e.to_string()))
}

fn run(cli: Cli) -> Outcome<String> {
    let mut out = String::new();
    match cli.command {
        Command::Distance { run, algo, max_distance, approx, threads } => {
            let (_, cg, input) = load(&run)?;
            let d = distance(&cg, &input, algo, max_distance.or(approx), threads)?;
            match approx {
                Some(_) => writeln!(out, "{}", approx_from(d, &input)?).unwrap(),
                None => writeln!(out, "{d}").unwrap(),
            }
        }
        Command::Correct { run, json: as_json } => {
            let (_, cg, input) = load(&run)?;
            let c = correct(&cg, &input)?;
            if as_json {
                writeln!(out, "{}", json(&c)?).unwrap();
            } else {
                let edits: Vec<String> = c.edits.edits().iter().map(edit_text).collect();
                writeln!(out, "distance: {}", c.distance).unwrap();
                writeln!(out, "corrected: {}", c.corrected).unwrap();
                writeln!(out, "edits: {}", if edits.is_empty() { "none".to_string() } else { edits.join(", ") }).unwrap();
            }
        }
        Command::Chart { run, algo } => {
            let (_, cg, input) = load(&run)?;
            let chart = match algo {
                Algo::Cyk => ec_parse(&cg, &input)?,
                _ => {
                    let a = init_matrix(&cg, &input)?;
                    let closed = valiant_closure_with(&a, &mut Multiplier::new(&cg, algo.strategy()))?;
                    PairSetChart::from_matrix(&closed.aplus, &input)?
                }
            };
            writeln!(out, "{}", json(&chart.to_document(&cg))?).unwrap();
        }
        Command::Compile { grammar, output } => {
            let g = load_grammar(&grammar)?;
            let cg = build_covering(&g).map_err(|e| Failure::grammar(format!("{}: {e}", grammar.display())))?;
            let doc = json(&cg.to_document())?;
            match output {
                Some(path) => fs::write(&path, doc + "\n")
                    .map_err(|e| Failure::grammar(format!("{}: {e}", path.display())))?,
                None => writeln!(out, "{doc}").unwrap(),
            }
        }
        Command::Oracle { run } => {
            let (g, cg, input) = load(&run)?;
            let s: String = input.iter().collect();
            let radius = input.len().max(cg.base().shortest_word_length()?);
            let r = brute_force_distance(&g, &s, radius)?;
            writeln!(out, "distance: {}", r.distance).unwrap();
            for w in &r.witnesses {
                writeln!(out, "witness: {w}").unwrap();
            }
        }
        Command::Bench { grammar, algo, n, threads } => {
            let g = load_grammar(&grammar)?;
            let cg = build_covering(&g).map_err(|e| Failure::grammar(format!("{}: {e}", grammar.display())))?;
            let seed = match std::env::var("LED_SEED") {
                Ok(s) => s.parse().map_err(|_| Failure::usage(format!("LED_SEED must be an integer, got {s:?}")))?,
                Err(_) => 0,
            };
            let mut rng = StdRng::seed_from_u64(seed);
            writeln!(out, "algo,n,distance,min_plus_ops,wall_ms").unwrap();
            for &len in &n {
                let input: Vec<char> = (0..len).map(|_| cg.terminals()[rng.gen_range(0..cg.terminals().len())]).collect();
                for &a in &algo {
                    let (d, ops, ms) = bench_one(&cg, &input, a, threads)?;
                    writeln!(out, "{},{len},{d},{ops},{ms:.3}", a.name()).unwrap();
                }
            }
        }
    }
    Ok(out)
}

/// Distance, operation count and wall time in milliseconds. The count is
/// combination attempts for CYK, cell products for the direct closure and
/// scalar min-plus steps for the tropical closure.
fn bench_one(cg: &CoveringGrammar, input: &[char], algo: Algo, threads: usize) -> Outcome<(u32, u64, f64)> {
    let start = Instant::now();
    let (d, ops) = match algo {
        Algo::Cyk => {
            let chart = ec_parse(cg, input)?;
            (distance_from_chart(&chart, cg)?, chart.combination_attempts)
        }
        _ => {
            let a = init_matrix(cg, input)?;
            let mut mul = Multiplier::new(cg, algo.strategy()).with_threads(threads);
            let r = valiant_closure_with(&a, &mut mul)?;
            let d = match r.distance {
                Some(Distance::Exact(d)) => d,
                _ => cg.mnullcount(cg.start_id()).ok_or(Error::Unreachable)?,
            };
            let ops = if algo == Algo::ValiantTropical { r.stats.min_plus_ops } else { r.stats.direct_cell_products };
            (d, ops)
        }
    };
    Ok((d, ops, start.elapsed().as_secs_f64() * 1000.0))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("led: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
