//! `ilw-lax`: compute, verify and render the Lax description of the ILW hierarchy.

mod cache;
mod random;

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ilw_core::diffpoly::MuDiffPoly;
use ilw_core::dispersionless::{solve_symbol, SymbolSeries};
use ilw_core::hierarchy::{
    ilw_hamiltonian, lax_flow, lax_flow_via_commutator, lax_hamiltonian, pd_polynomial, run_checks,
    standard_checks, verify, Check, HierarchyError,
};
use ilw_core::report::SCHEMA;
use ilw_core::scalars::{format_rational, ScalarError};
use ilw_core::{build_lax, DiffPoly, HierarchyConfig, LaxData, LocalFunctional, ShiftOperator, VerificationReport};
use num_traits::One;
use serde::Serialize;

use cache::Cache;

#[derive(Parser)]
#[command(name = "ilw-lax", version, about = "Lax description of the intermediate long wave hierarchy")]
struct Cli {
    #[command(flatten)]
    opts: Options,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Options {
    /// ε truncation order
    #[arg(long = "K", global = true, default_value_t = 6)]
    k: u32,
    /// Λ-depth: coefficients a_0 … a_N
    #[arg(long = "N", global = true, default_value_t = 5)]
    n: u32,
    /// Highest flow index
    #[arg(long = "dMax", global = true, default_value_t = 3)]
    d_max: u32,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, global = true, value_enum, default_value_t = Gauge::Tau)]
    gauge: Gauge,
    #[arg(long = "cache-dir", global = true, env = "ILW_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    /// Neither read nor write the cache
    #[arg(long = "no-cache", global = true)]
    no_cache: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Gauge {
    Tau,
    Mu,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Side {
    Lax,
    Ilw,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FlowMethod {
    Residue,
    Commutator,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Object {
    CalL,
    L,
    Log,
}

#[derive(Subcommand)]
enum Command {
    /// Compute an object of the hierarchy
    #[command(subcommand)]
    Compute(ComputeCmd),
    /// Run a check, the full suite (`all`) or randomized identities (`random`)
    Verify(VerifyArgs),
    /// Convert or re-render an object
    #[command(subcommand)]
    Render(RenderCmd),
    /// Manage the on-disk cache of Lax data
    #[command(subcommand)]
    Cache(CacheCmd),
}

#[derive(Subcommand)]
enum ComputeCmd {
    /// Coefficients a_n of L
    Lax,
    /// log L
    Log,
    /// res L^m
    Residue {
        #[arg(long)]
        m: u32,
    },
    /// Hamiltonian h_d of either family
    Hamiltonian {
        #[arg(long, value_enum, default_value_t = Side::Lax)]
        side: Side,
        #[arg(long)]
        d: u32,
    },
    /// The flow ∂u/∂T_d
    Flow {
        #[arg(long)]
        d: u32,
        #[arg(long, value_enum, default_value_t = FlowMethod::Residue)]
        method: FlowMethod,
    },
    /// Coefficients of P_d
    Pd {
        #[arg(long)]
        d: u32,
    },
    /// Symbol of L at ε = 0
    Symbol {
        /// Number of coefficients c_1 … c_depth; defaults to N
        #[arg(long)]
        depth: Option<usize>,
    },
}

#[derive(Args)]
struct VerifyArgs {
    /// `all`, `random`, or a check id such as `flow-commutativity`
    check: String,
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    d1: Option<u32>,
    #[arg(long)]
    d2: Option<u32>,
    #[arg(long)]
    m: Option<u32>,
    /// Seed for `random`
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Instances for `random`
    #[arg(long, default_value_t = 100)]
    count: u32,
}

#[derive(Subcommand)]
enum RenderCmd {
    /// DiffPoly or functional JSON on stdin, re-rendered in the chosen gauge
    Gauge,
    /// Symbol of an operator: ShiftOperator JSON on stdin, or --object
    Symbol {
        #[arg(long, value_enum)]
        object: Option<Object>,
    },
    /// Hamiltonian density in the chosen gauge
    Hamiltonian {
        #[arg(long, value_enum, default_value_t = Side::Ilw)]
        side: Side,
        #[arg(long)]
        d: u32,
    },
}

#[derive(Subcommand)]
enum CacheCmd {
    /// Entries with their validity
    List,
    /// Remove every entry
    Purge,
    /// Build for K, N and store
    Store,
    /// The cache directory
    Path,
}

enum CliError {
    Usage(String),
    Construction(String),
    Conversion(String),
    Verification,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Verification => 1,
            CliError::Usage(_) => 2,
            CliError::Construction(_) => 3,
            CliError::Conversion(_) => 4,
        }
    }
}

impl From<HierarchyError> for CliError {
    fn from(e: HierarchyError) -> Self {
        use ilw_core::shiftops::OpError;
        match e {
            HierarchyError::InvalidConfig(_)
            | HierarchyError::DepthInsufficient { .. }
            | HierarchyError::Op(OpError::DepthInsufficient { .. }) => CliError::Usage(e.to_string()),
            HierarchyError::Scalar(ScalarError::NotRealEven(_)) => CliError::Conversion(e.to_string()),
            _ => CliError::Construction(e.to_string()),
        }
    }
}

impl From<ScalarError> for CliError {
    fn from(e: ScalarError) -> Self {
        match e {
            ScalarError::NotRealEven(_) => CliError::Conversion(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Adds the schema field in front of a serialized body.
#[derive(Serialize)]
struct Doc<'a, T: Serialize> {
    schema: &'static str,
    #[serde(flatten)]
    body: &'a T,
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("serializable")
}

fn doc<T: Serialize>(body: &T) -> String {
    json(&Doc { schema: SCHEMA, body })
}

fn config(opts: &Options) -> CliResult<HierarchyConfig> {
    HierarchyConfig::new(opts.k, opts.n, opts.d_max).map_err(CliError::from)
}

fn cache(opts: &Options) -> CliResult<Cache> {
    Cache::locate(opts.cache_dir.clone())
        .ok_or_else(|| CliError::Usage("no cache directory; pass --cache-dir or set ILW_CACHE_DIR".into()))
}

/// Loads from the cache when a trusted entry exists, otherwise builds and stores.
fn obtain_lax(opts: &Options) -> CliResult<LaxData> {
    let config = config(opts)?;
    let store = if opts.no_cache { None } else { Cache::locate(opts.cache_dir.clone()) };
    if let Some(c) = &store {
        match c.load(config) {
            Ok(Some(lax)) => return Ok(lax),
            Ok(None) => {}
            Err(e) => eprintln!("warning: ignoring cache entry {e}"),
        }
    }
    let lax = build_lax(config)?;
    if let Some(c) = &store {
        if let Err(e) = c.store(&lax) {
            eprintln!("warning: could not write cache: {e}");
        }
    }
    Ok(lax)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(m) | CliError::Construction(m) | CliError::Conversion(m) => {
                    eprintln!("error: {m}")
                }
                CliError::Verification => {}
            }
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let opts = cli.opts;
    match cli.command {
        Command::Compute(c) => compute(&opts, c),
        Command::Verify(v) => verify_cmd(&opts, v),
        Command::Render(r) => render(&opts, r),
        Command::Cache(c) => cache_cmd(&opts, c),
    }
}

#[derive(Serialize)]
struct ResidueDoc<'a> {
    m: u32,
    residue: &'a DiffPoly,
}

#[derive(Serialize)]
struct FlowDoc<'a> {
    d: u32,
    flow: &'a DiffPoly,
}

#[derive(Serialize)]
struct LogDoc<'a> {
    f: &'a [DiffPoly],
    operator: &'a ShiftOperator,
}

#[derive(Serialize)]
#[serde(untagged)]
enum Density {
    Tau(DiffPoly),
    Mu(MuDiffPoly),
}

#[derive(Serialize)]
struct HamiltonianDoc {
    side: &'static str,
    d: u32,
    gauge: &'static str,
    density: Density,
}

#[derive(Serialize)]
struct SymbolDoc<'a> {
    symbol: &'a str,
}

fn compute(opts: &Options, cmd: ComputeCmd) -> CliResult<()> {
    let text = opts.format == Format::Text;
    match cmd {
        ComputeCmd::Pd { d } => {
            if d == 0 {
                return Err(CliError::Usage("P_d is defined for d >= 1".into()));
            }
            let p = pd_polynomial(d);
            if text {
                let terms: Vec<String> = (1..=d)
                    .rev()
                    .map(|j| {
                        let t = match d - j {
                            0 => String::new(),
                            1 => "*t".to_string(),
                            e => format!("*t^{e}"),
                        };
                        let y = if j == 1 { "y".to_string() } else { format!("y^{j}") };
                        let c = p.coeff(j);
                        if c.is_one() && t.is_empty() {
                            y
                        } else {
                            format!("({}){t}*{y}", format_rational(c))
                        }
                    })
                    .collect();
                println!("P_{d}(y) = {}", terms.join(" + "));
            } else {
                println!("{}", doc(&p));
            }
            return Ok(());
        }
        ComputeCmd::Symbol { depth } => {
            let depth = depth.unwrap_or(opts.n as usize).max(1);
            let s = solve_symbol(depth).map_err(|e| CliError::Construction(e.to_string()))?;
            print_symbol_series(opts, &s);
            return Ok(());
        }
        _ => {}
    }
    let lax = obtain_lax(opts)?;
    match cmd {
        ComputeCmd::Lax => {
            if text {
                for (n, a) in lax.a().iter().enumerate() {
                    println!("a_{n} = {a}");
                }
                println!("L = {}", lax.l());
            } else {
                println!("{}", json(&lax));
            }
        }
        ComputeCmd::Log => {
            if text {
                for (n, f) in lax.f_coeffs().iter().enumerate() {
                    println!("f_{} = {f}", n + 1);
                }
                println!("log L = {}", lax.log_l());
            } else {
                println!("{}", doc(&LogDoc { f: lax.f_coeffs(), operator: lax.log_l() }));
            }
        }
        ComputeCmd::Residue { m } => {
            let r = lax.residue(m)?;
            if text {
                println!("{r}");
            } else {
                println!("{}", doc(&ResidueDoc { m, residue: &r }));
            }
        }
        ComputeCmd::Hamiltonian { side, d } => print_hamiltonian(opts, &lax, side, d)?,
        ComputeCmd::Flow { d, method } => {
            within_d_max(opts, d)?;
            let q = match method {
                FlowMethod::Residue => lax_flow(&lax, d)?,
                FlowMethod::Commutator => lax_flow_via_commutator(&lax, d)?,
            };
            if text {
                println!("{q}");
            } else {
                println!("{}", doc(&FlowDoc { d, flow: &q }));
            }
        }
        ComputeCmd::Pd { .. } | ComputeCmd::Symbol { .. } => unreachable!(),
    }
    Ok(())
}

fn within_d_max(opts: &Options, d: u32) -> CliResult<()> {
    if d > opts.d_max {
        return Err(CliError::Usage(format!("index {d} exceeds dMax = {}", opts.d_max)));
    }
    Ok(())
}

fn print_symbol_series(opts: &Options, s: &SymbolSeries) {
    match opts.format {
        Format::Text => println!("{s}"),
        Format::Json => println!("{}", doc(s)),
    }
}

fn hamiltonian(lax: &LaxData, side: Side, d: u32) -> CliResult<LocalFunctional> {
    Ok(match side {
        Side::Lax => lax_hamiltonian(lax, d)?,
        Side::Ilw => ilw_hamiltonian(lax, d)?,
    })
}

fn print_hamiltonian(opts: &Options, lax: &LaxData, side: Side, d: u32) -> CliResult<()> {
    within_d_max(opts, d)?;
    let h = hamiltonian(lax, side, d)?;
    let density = h
        .real_even_density()
        .ok_or_else(|| CliError::Conversion(format!("h_{d} is not real and even in ε")))?;
    let density = match opts.gauge {
        Gauge::Tau => Density::Tau(density),
        Gauge::Mu => Density::Mu(density.to_mu_form()?),
    };
    match opts.format {
        Format::Text => match &density {
            Density::Tau(p) => println!("{p}"),
            Density::Mu(p) => println!("{p}"),
        },
        Format::Json => {
            let side = match side {
                Side::Lax => "lax",
                Side::Ilw => "ilw",
            };
            let gauge = match opts.gauge {
                Gauge::Tau => "tau",
                Gauge::Mu => "mu",
            };
            println!("{}", doc(&HamiltonianDoc { side, d, gauge, density }));
        }
    }
    Ok(())
}

fn check_params(v: &VerifyArgs) -> CliResult<Vec<u32>> {
    Ok(match (v.d1, v.d2, v.m, v.d) {
        (Some(a), Some(b), None, None) => vec![a, b],
        (None, None, Some(m), None) => vec![m],
        (None, None, None, Some(d)) => vec![d],
        (None, None, None, None) => vec![],
        _ => return Err(CliError::Usage("pass either --d, --m, or both --d1 and --d2".into())),
    })
}

fn emit_reports(opts: &Options, reports: &[VerificationReport], single: bool) {
    match opts.format {
        Format::Text => {
            for r in reports {
                println!("{}", r.summary());
            }
            if !single {
                let passed = reports.iter().filter(|r| r.pass).count();
                println!("{passed}/{} checks passed", reports.len());
            }
        }
        Format::Json if single => println!("{}", json(&reports[0])),
        Format::Json => println!("{}", json(&reports)),
    }
}

fn verify_cmd(opts: &Options, v: VerifyArgs) -> CliResult<()> {
    let reports = match v.check.as_str() {
        "random" => {
            config(opts)?;
            vec![random::random_identities(v.seed, v.count, opts.k)]
        }
        "all" => {
            check_params(&v)?
                .is_empty()
                .then_some(())
                .ok_or_else(|| CliError::Usage("`verify all` takes no parameters".into()))?;
            let lax = obtain_lax(opts)?;
            run_checks(&lax, &standard_checks(&lax))?
        }
        id => {
            let check = Check::from_id(id, &check_params(&v)?).map_err(CliError::Usage)?;
            config(opts)?;
            let lax = obtain_lax(opts)?;
            vec![verify(&lax, check)?]
        }
    };
    emit_reports(opts, &reports, v.check != "all");
    if reports.iter().all(|r| r.pass) {
        Ok(())
    } else {
        Err(CliError::Verification)
    }
}

fn read_stdin() -> CliResult<serde_json::Value> {
    let mut s = String::new();
    std::io::stdin().read_to_string(&mut s).map_err(|e| CliError::Usage(format!("reading stdin: {e}")))?;
    serde_json::from_str(&s).map_err(|e| CliError::Usage(format!("stdin is not JSON: {e}")))
}

fn parse_value<T: serde::de::DeserializeOwned>(v: serde_json::Value, what: &str) -> CliResult<T> {
    serde_json::from_value(v).map_err(|e| CliError::Usage(format!("stdin is not a {what}: {e}")))
}

fn render(opts: &Options, cmd: RenderCmd) -> CliResult<()> {
    match cmd {
        RenderCmd::Gauge => {
            let value = read_stdin()?;
            // a functional may be reduced to a real, ε-even density first
            let poly = if let Some(density) = value.get("density").filter(|_| value.get("terms").is_none()) {
                let f = LocalFunctional::new(parse_value::<DiffPoly>(density.clone(), "functional")?);
                f.real_even_density()
                    .ok_or_else(|| CliError::Conversion("functional is not real and even in ε".into()))?
            } else {
                parse_value::<DiffPoly>(value, "DiffPoly")?
            };
            match (opts.gauge, opts.format) {
                (Gauge::Tau, Format::Text) => println!("{poly}"),
                (Gauge::Tau, Format::Json) => println!("{}", doc(&poly)),
                (Gauge::Mu, Format::Text) => println!("{}", poly.to_mu_form()?),
                (Gauge::Mu, Format::Json) => println!("{}", doc(&poly.to_mu_form()?)),
            }
        }
        RenderCmd::Symbol { object } => {
            let op = match object {
                None => parse_value::<ShiftOperator>(read_stdin()?, "ShiftOperator")?,
                Some(o) => {
                    let lax = obtain_lax(opts)?;
                    match o {
                        Object::CalL => lax.cal_l().clone(),
                        Object::L => lax.l().clone(),
                        Object::Log => lax.log_l().clone(),
                    }
                }
            };
            let symbol = op.symbol_string();
            match opts.format {
                Format::Text => println!("{symbol}"),
                Format::Json => println!("{}", doc(&SymbolDoc { symbol: &symbol })),
            }
        }
        RenderCmd::Hamiltonian { side, d } => {
            let lax = obtain_lax(opts)?;
            print_hamiltonian(opts, &lax, side, d)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct PathDoc<'a> {
    path: &'a std::path::Path,
}

#[derive(Serialize)]
struct EntriesDoc<'a> {
    dir: &'a std::path::Path,
    entries: &'a [cache::Entry],
}

#[derive(Serialize)]
struct PurgeDoc {
    removed: usize,
}

fn cache_cmd(opts: &Options, cmd: CacheCmd) -> CliResult<()> {
    let c = cache(opts)?;
    let text = opts.format == Format::Text;
    match cmd {
        CacheCmd::Path => {
            if text {
                println!("{}", c.dir().display());
            } else {
                println!("{}", doc(&PathDoc { path: c.dir() }));
            }
        }
        CacheCmd::List => {
            let entries = c.list().map_err(CliError::Usage)?;
            if text {
                for e in &entries {
                    match &e.error {
                        None => println!("{}  valid", e.file),
                        Some(err) => println!("{}  corrupt: {err}", e.file),
                    }
                }
            } else {
                println!("{}", doc(&EntriesDoc { dir: c.dir(), entries: &entries }));
            }
        }
        CacheCmd::Purge => {
            let removed = c.purge().map_err(CliError::Usage)?;
            if text {
                println!("removed {removed} entries");
            } else {
                println!("{}", doc(&PurgeDoc { removed }));
            }
        }
        CacheCmd::Store => {
            let lax = build_lax(config(opts)?)?;
            let path = c.store(&lax).map_err(CliError::Usage)?;
            if text {
                println!("{}", path.display());
            } else {
                println!("{}", doc(&PathDoc { path: &path }));
            }
        }
    }
    Ok(())
}
