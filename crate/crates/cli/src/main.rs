//! Command line surface for the plomega library: element
//! construction, exact algebra, invariant computation, certification,
//! and the consolidated verification suite. Exit code 0 means success
//! or pass, 1 means a sound mathematical refusal, 2 means malformed
//! input.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use plomega::{
    check_omega, classify_subgroup, classify_thompson, commutator_lower_certificate, degree,
    gamma_canonical, gimel, make_tau, make_translation, make_zeta, normal_form, orbit_partition,
    run_lemma_suite, theta, transporter, ulam_lower_certificate, weak_generators_delta, xi,
    Dyadic, Factor, FactorTag, Factorization, MathError, PLMap1P, ParseError,
};

#[derive(Parser)]
#[command(
    name = "plomega",
    about = "Exact arithmetic for level-n piecewise-linear circle homeomorphism groups",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Construct a named element and print it
    Make {
        #[command(subcommand)]
        what: MakeCmd,
    },
    /// Compose two or more elements left to right
    Compose {
        /// Input elements: file paths or inline plmap1p literals
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Invert an element
    Invert {
        #[arg(long = "in")]
        input: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate an element at a dyadic point
    Eval {
        #[arg(long = "in")]
        input: String,
        /// Dyadic point, e.g. "3/2^8" or "-5"
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// Check level-n membership and print the per-segment certificate
    CheckOmega {
        #[arg(long)]
        n: u32,
        #[arg(long = "in")]
        input: String,
    },
    /// The orbit invariant of a dyadic point mod 2^n - 1
    Theta {
        #[arg(long)]
        n: u32,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
    /// The orbit cocycle vector of an integer-fixing element
    Xi {
        #[arg(long)]
        n: u32,
        #[arg(long = "in")]
        input: String,
    },
    /// The circle-level cocycle vector of a certified element
    Gimel {
        #[arg(long)]
        n: u32,
        #[arg(long = "in")]
        input: String,
    },
    /// The doubling-orbit partition of residues mod 2^n - 1
    Partition {
        #[arg(long)]
        n: u32,
    },
    /// Subgroup membership flags for an element
    Classify {
        #[arg(long)]
        n: u32,
        #[arg(long = "in")]
        input: String,
    },
    /// An element carrying a matched tuple of points to another
    Transporter {
        #[arg(long)]
        n: u32,
        /// Comma-separated increasing dyadic points in (0, 1)
        #[arg(long)]
        xs: String,
        /// Comma-separated targets, residue-matched slot by slot
        #[arg(long)]
        ys: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The integer-crossing degree of an element on an interval
    Degree {
        #[arg(long)]
        n: u32,
        #[arg(long = "in")]
        input: String,
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
    },
    /// Factor an element into a bounded conjugated product and write
    /// the witnessed manifest
    NormalForm {
        #[arg(long)]
        n: u32,
        #[arg(long = "in")]
        input: String,
        /// Directory receiving manifest.txt and the factor files
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Build and verify the weak generating family at level n
    WeakGenerators {
        #[arg(long)]
        n: u32,
    },
    /// Lower bound on conjugate-factor counts for an element
    CertifyUlam {
        #[arg(long)]
        n: u32,
        #[arg(long = "in")]
        input: String,
    },
    /// Lower bound on commutator-factor counts for an element
    CertifyCommutator {
        #[arg(long)]
        n: u32,
        #[arg(long = "in")]
        input: String,
    },
    /// Run the seeded verification suite, or re-check a manifest
    Verify(VerifyArgs),
}

#[derive(Subcommand)]
enum MakeCmd {
    /// The special element carrying 0 into (0, 1)
    Tau {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The k-th basic bump, 1 <= k <= 2^n - 2
    Zeta {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The translation x -> x + c
    Translation {
        #[arg(long, allow_hyphen_values = true)]
        c: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct VerifyArgs {
    /// Re-verify a normal-form manifest written by `normal-form`
    #[arg(long, conflicts_with_all = ["n", "seed", "iters"])]
    manifest: Option<PathBuf>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    iters: u64,
}

/// Malformed-input failures (exit 2), as opposed to mathematical
/// refusals (exit 1).
enum InputError {
    Parse(ParseError),
    Io(String),
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputError::Parse(e) => write!(f, "{}", e),
            InputError::Io(m) => write!(f, "{}", m),
        }
    }
}

enum CliError {
    Math(MathError),
    Input(InputError),
    /// A check that prints its own evidence failed; exit 1 silently.
    Failed,
}

impl From<MathError> for CliError {
    fn from(e: MathError) -> Self {
        CliError::Math(e)
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Input(InputError::Parse(e))
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(InputError::Io(format!("{}: {}", path.display(), e)))
}

/// Loads an element from a file path or an inline plmap1p literal.
fn load_map(source: &str) -> Result<PLMap1P, CliError> {
    let text = if source.trim_start().starts_with("plmap1p") {
        source.to_string()
    } else {
        let path = Path::new(source);
        fs::read_to_string(path).map_err(|e| io_err(path, e))?
    };
    Ok(text.parse::<PLMap1P>()?)
}

fn parse_dyadic(s: &str) -> Result<Dyadic, CliError> {
    Ok(s.trim().parse::<Dyadic>()?)
}

fn parse_dyadic_list(s: &str) -> Result<Vec<Dyadic>, CliError> {
    s.split(',').map(parse_dyadic).collect()
}

/// Prints an element to stdout or writes it to the given path.
fn emit(f: &PLMap1P, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        None => {
            print!("{}", f);
            Ok(())
        }
        Some(path) => fs::write(path, f.to_string()).map_err(|e| io_err(path, e)),
    }
}

fn tag_name(tag: FactorTag) -> &'static str {
    match tag {
        FactorTag::Head => "head",
        FactorTag::ConjugatedFprime => "conjugated-fprime",
        FactorTag::TranslationPower => "translation-power",
    }
}

fn tag_from_name(name: &str, line: usize) -> Result<FactorTag, CliError> {
    match name {
        "head" => Ok(FactorTag::Head),
        "conjugated-fprime" => Ok(FactorTag::ConjugatedFprime),
        "translation-power" => Ok(FactorTag::TranslationPower),
        other => Err(CliError::Input(InputError::Io(format!(
            "manifest line {}: unknown factor tag {:?}",
            line, other
        )))),
    }
}

fn write_normal_form(n: u32, g: &PLMap1P, dir: &Path) -> Result<(), CliError> {
    let fz = normal_form(g, n)?;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let write_map = |name: &str, m: &PLMap1P| -> Result<(), CliError> {
        let path = dir.join(name);
        fs::write(&path, m.to_string()).map_err(|e| io_err(&path, e))
    };
    write_map("target.plmap", fz.target())?;
    let mut manifest = format!(
        "normal-form v1 n={} factors={}\ntarget target.plmap\n",
        n,
        fz.factors().len()
    );
    for (i, fac) in fz.factors().iter().enumerate() {
        let fname = format!("factor_{:02}.plmap", i);
        write_map(&fname, &fac.element)?;
        match &fac.witness {
            None => manifest.push_str(&format!("factor {} {}\n", tag_name(fac.tag), fname)),
            Some((w, p)) => {
                let wname = format!("witness_{:02}_w.plmap", i);
                let pname = format!("witness_{:02}_p.plmap", i);
                write_map(&wname, w)?;
                write_map(&pname, p)?;
                manifest.push_str(&format!(
                    "factor {} {} witness {} {}\n",
                    tag_name(fac.tag),
                    fname,
                    wname,
                    pname
                ));
            }
        }
    }
    let mpath = dir.join("manifest.txt");
    fs::write(&mpath, manifest).map_err(|e| io_err(&mpath, e))?;
    println!(
        "wrote {} factors to {}",
        fz.factors().len(),
        dir.display()
    );
    Ok(())
}

fn verify_manifest(path: &Path) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines().enumerate();
    let bad = |line: usize, msg: &str| {
        CliError::Input(InputError::Io(format!(
            "manifest line {}: {}",
            line + 1,
            msg
        )))
    };
    let (i, header) = lines.next().ok_or_else(|| bad(0, "empty manifest"))?;
    let rest = header
        .strip_prefix("normal-form v1 n=")
        .ok_or_else(|| bad(i, "bad header"))?;
    let n: u32 = rest
        .split_whitespace()
        .next()
        .and_then(|w| w.parse().ok())
        .ok_or_else(|| bad(i, "bad level in header"))?;
    let load = |name: &str| load_map(&dir.join(name).display().to_string());
    let mut target = None;
    let mut factors = Vec::new();
    for (i, line) in lines {
        let mut words = line.split_whitespace();
        match words.next() {
            None => continue,
            Some("target") => {
                let name = words.next().ok_or_else(|| bad(i, "missing target file"))?;
                target = Some(load(name)?);
            }
            Some("factor") => {
                let tag = tag_from_name(
                    words.next().ok_or_else(|| bad(i, "missing factor tag"))?,
                    i + 1,
                )?;
                let element = load(words.next().ok_or_else(|| bad(i, "missing factor file"))?)?;
                let witness = match words.next() {
                    None => None,
                    Some("witness") => {
                        let w = load(words.next().ok_or_else(|| bad(i, "missing witness"))?)?;
                        let p = load(words.next().ok_or_else(|| bad(i, "missing witness"))?)?;
                        Some((w, p))
                    }
                    Some(other) => return Err(bad(i, &format!("unexpected word {:?}", other))),
                };
                factors.push(Factor {
                    element,
                    tag,
                    witness,
                });
            }
            Some(other) => return Err(bad(i, &format!("unexpected record {:?}", other))),
        }
    }
    let target = target.ok_or_else(|| bad(0, "manifest has no target record"))?;
    let count = factors.len();
    Factorization::new(target, factors).verify(n)?;
    println!("manifest verifies: {} factors reproduce the target at n={}", count, n);
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Make { what } => match what {
            MakeCmd::Tau { n, out } => emit(&make_tau(n), out.as_ref()),
            MakeCmd::Zeta { n, k, out } => emit(&make_zeta(n, k)?, out.as_ref()),
            MakeCmd::Translation { c, out } => {
                emit(&make_translation(parse_dyadic(&c)?), out.as_ref())
            }
        },
        Cmd::Compose { inputs, out } => {
            let mut f = PLMap1P::identity();
            for source in &inputs {
                f = f.compose(&load_map(source)?);
            }
            emit(&f, out.as_ref())
        }
        Cmd::Invert { input, out } => emit(&load_map(&input)?.invert(), out.as_ref()),
        Cmd::Eval { input, x } => {
            let f = load_map(&input)?;
            println!("{}", f.evaluate(&parse_dyadic(&x)?));
            Ok(())
        }
        Cmd::CheckOmega { n, input } => {
            let f = load_map(&input)?;
            let cert = check_omega(&f, n);
            print!("{}", cert);
            if cert.pass() {
                println!("member of the level-{} group", n);
                Ok(())
            } else {
                println!("NOT a member of the level-{} group", n);
                Err(CliError::Failed)
            }
        }
        Cmd::Theta { n, x } => {
            println!("{}", theta(&parse_dyadic(&x)?, n));
            Ok(())
        }
        Cmd::Xi { n, input } => {
            println!("{}", xi(&load_map(&input)?, n)?);
            Ok(())
        }
        Cmd::Gimel { n, input } => {
            println!("{}", gimel(&gamma_canonical(&load_map(&input)?, n)?));
            Ok(())
        }
        Cmd::Partition { n } => {
            let p = orbit_partition(n);
            for class in p.classes() {
                let words: Vec<String> = class.iter().map(|i| i.to_string()).collect();
                println!("class: {}", words.join(" "));
            }
            println!("eta = {}", p.eta());
            Ok(())
        }
        Cmd::Classify { n, input } => {
            let f = load_map(&input)?;
            let t = classify_thompson(&f, n);
            println!(
                "in_F={} in_Fc={} in_Fprime={}",
                t.in_f, t.in_fc, t.in_fprime
            );
            if t.in_fc {
                let s = classify_subgroup(&f, n)?;
                println!("in_Theta={} in_Delta={}", s.in_theta, s.in_delta);
            }
            Ok(())
        }
        Cmd::Transporter { n, xs, ys, out } => {
            let xs = parse_dyadic_list(&xs)?;
            let ys = parse_dyadic_list(&ys)?;
            emit(&transporter(n, &xs, &ys)?, out.as_ref())
        }
        Cmd::Degree { n, input, a, b } => {
            let g = gamma_canonical(&load_map(&input)?, n)?;
            println!(
                "{}",
                degree(&g, &parse_dyadic(&a)?, &parse_dyadic(&b)?, n)?
            );
            Ok(())
        }
        Cmd::NormalForm { n, input, out_dir } => {
            write_normal_form(n, &load_map(&input)?, &out_dir)
        }
        Cmd::WeakGenerators { n } => {
            let (_, report) = weak_generators_delta(n)?;
            println!("commutator_xi_identity={}", report.commutator_xi_identity);
            println!("commutators_in_kernel={}", report.commutators_in_kernel);
            println!("conjugates_in_fprime={}", report.conjugates_in_fprime);
            println!("lattice_matches_kernel={}", report.lattice_matches_kernel);
            for d in &report.details {
                println!("detail: {}", d);
            }
            if report.pass() {
                Ok(())
            } else {
                Err(CliError::Failed)
            }
        }
        Cmd::CertifyUlam { n, input } => {
            print!("{}", ulam_lower_certificate(&load_map(&input)?, n)?);
            Ok(())
        }
        Cmd::CertifyCommutator { n, input } => {
            print!("{}", commutator_lower_certificate(&load_map(&input)?, n)?);
            Ok(())
        }
        Cmd::Verify(args) => {
            if let Some(path) = &args.manifest {
                return verify_manifest(path);
            }
            let n = args.n.ok_or_else(|| {
                CliError::Input(InputError::Io(
                    "verify needs --n (suite mode) or --manifest".into(),
                ))
            })?;
            let report = run_lemma_suite(n, args.seed, args.iters);
            print!("{}", report);
            if report.pass() {
                Ok(())
            } else {
                Err(CliError::Failed)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failed) => ExitCode::from(1),
        Err(CliError::Math(e)) => {
            eprintln!("refused: {}", e);
            ExitCode::from(1)
        }
        Err(CliError::Input(e)) => {
            eprintln!("error: {}", e);
            ExitCode::from(2)
        }
    }
}
