//! Batch front end. Every command reads JSON documents, writes one JSON
//! document tagged `"format": "gwp/1"`, and maps kernel errors to exit codes:
//! 2 for unreadable or malformed input, 3 for failed preconditions, 4 for
//! insufficient precision.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::bps::{self, BpsTable, CurveClass};
use crate::cohring::GradedRing;
use crate::corr::{self, ChernParams, CorrMatrix, DescendentMonomial};
use crate::error::{Error, ParseError};
use crate::glue::{self, DegenerationStep, PipelineSpec, SplittingRule, TheoryTable, UnknownSpec};
use crate::ratfun::{self, RationalFunction, Reconstruction};
use crate::series::{self, HalfSeries, Var};

pub const FORMAT: &str = "gwp/1";
pub const MAX_ORDER_ENV: &str = "GWP_MAX_ORDER";

#[derive(Parser, Debug)]
#[command(name = "gwp", version, about = "Exact series kernel for GW/pairs computations")]
pub struct Cli {
    /// Worker threads for per-class parallel work.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Write the result document here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum RuleArg {
    Additive,
    Matching,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// BPS table to free energies, as u-series or rational functions in q.
    BpsForward {
        #[arg(long = "in")]
        input: PathBuf,
        /// Classes such as `1,0`; defaults to every nonzero class in the box.
        #[arg(long = "class")]
        classes: Vec<String>,
        #[arg(long, default_value_t = 10)]
        order: i64,
        /// Emit closed forms in q instead of u-series.
        #[arg(long)]
        q: bool,
    },
    /// Free energies to BPS counts.
    BpsInvert {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        max_genus: Option<u32>,
    },
    /// Integrality and genus-vanishing report for a BPS table.
    BpsReport {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Substitutes `-q = e^{iu}` into a series or rational function.
    ToU {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        order: i64,
    },
    /// Rational reconstruction of a Laurent series in q.
    Ratrec {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        num_deg: Option<usize>,
        #[arg(long)]
        den_deg: Option<usize>,
    },
    /// Checks invariance under `q -> 1/q`.
    Symcheck {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Expands a descendent monomial through the correspondence matrix.
    Overline {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Glues two relative tables along their shared divisor.
    Glue {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long, value_enum, default_value = "additive")]
        rule: RuleArg,
        /// JSON splitting rule; overrides `--rule`.
        #[arg(long)]
        rule_file: Option<PathBuf>,
        #[arg(long = "class")]
        classes: Vec<String>,
    },
    /// Solves a gluing for one unknown factor and reports the residual.
    Invert {
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        known: PathBuf,
        /// JSON unknown-table spec: position, slots, classes, order.
        #[arg(long)]
        unknown: PathBuf,
        #[arg(long, value_enum, default_value = "additive")]
        rule: RuleArg,
        #[arg(long)]
        rule_file: Option<PathBuf>,
    },
    /// Runs a glue/invert DAG over a directory of leaf tables.
    Pipeline {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        leaves: PathBuf,
        /// Only emit these outputs; defaults to all node outputs.
        #[arg(long = "target")]
        targets: Vec<String>,
    },
    /// Checks the GW/pairs correspondence for one pair of series.
    Predicate {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::BpsForward { .. } => "bps-forward",
            Command::BpsInvert { .. } => "bps-invert",
            Command::BpsReport { .. } => "bps-report",
            Command::ToU { .. } => "to-u",
            Command::Ratrec { .. } => "ratrec",
            Command::Symcheck { .. } => "symcheck",
            Command::Overline { .. } => "overline",
            Command::Glue { .. } => "glue",
            Command::Invert { .. } => "invert",
            Command::Pipeline { .. } => "pipeline",
            Command::Predicate { .. } => "predicate",
        }
    }
}

/// Failure of a command: a kernel error or unreadable input.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Kernel(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Kernel(e)
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Kernel(Error::Parse(_)) => 2,
            Failure::Kernel(Error::InsufficientPrecision { .. }) => 4,
            Failure::Kernel(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Input(_) => "input",
            Failure::Kernel(e) => e.kind(),
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Input(m) => m.clone(),
            Failure::Kernel(e) => e.to_string(),
        }
    }
}

type CmdResult<T> = std::result::Result<T, Failure>;

fn read_value(path: &Path) -> CmdResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let mut v: Value =
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    if let Some(obj) = v.as_object_mut() {
        if let Some(f) = obj.remove("format") {
            if f != FORMAT {
                return Err(Failure::Input(format!("{}: unsupported format {f}", path.display())));
            }
        }
    }
    Ok(v)
}

fn from_value<T: DeserializeOwned>(v: Value, what: &str) -> CmdResult<T> {
    serde_json::from_value(v).map_err(|e| Failure::Input(format!("{what}: {e}")))
}

fn read_doc<T: DeserializeOwned>(path: &Path) -> CmdResult<T> {
    from_value(read_value(path)?, &path.display().to_string())
}

fn parse_class(src: &str) -> CmdResult<CurveClass> {
    src.split(',')
        .map(|c| c.trim().parse::<i64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(CurveClass::new)
        .map_err(|_| Failure::Kernel(ParseError::new(format!("bad class {src:?}")).into()))
}

fn class_key(beta: &CurveClass) -> String {
    beta.coords().iter().map(i64::to_string).collect::<Vec<_>>().join(",")
}

/// Value of `GWP_MAX_ORDER`, if set.
pub fn max_order() -> CmdResult<Option<i64>> {
    match std::env::var(MAX_ORDER_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Input(format!("{MAX_ORDER_ENV}={v:?} is not an integer"))),
        Err(_) => Ok(None),
    }
}

fn check_order(order: i64) -> CmdResult<i64> {
    match max_order()? {
        Some(cap) if order > cap => Err(Failure::Kernel(Error::invalid(format!(
            "requested order {order} exceeds {MAX_ORDER_ENV}={cap}"
        )))),
        _ => Ok(order),
    }
}

fn to_json<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("kernel types serialize")
}

fn rule_from(rule: RuleArg, file: Option<&Path>) -> CmdResult<SplittingRule> {
    match file {
        Some(p) => read_doc(p),
        None => Ok(match rule {
            RuleArg::Additive => SplittingRule::Additive,
            RuleArg::Matching => SplittingRule::Matching,
        }),
    }
}

#[derive(Deserialize)]
struct SeriesOrRatfun {
    #[serde(default)]
    series: Option<HalfSeries>,
    #[serde(default)]
    ratfun: Option<RationalFunction>,
}

#[derive(Deserialize)]
struct FreeEnergyDoc {
    series: BTreeMap<String, HalfSeries>,
    #[serde(default)]
    max_genus: Option<u32>,
}

#[derive(Deserialize)]
struct ChernDoc {
    #[serde(default)]
    c1: Option<String>,
    #[serde(default)]
    c2: Option<String>,
    #[serde(default)]
    c3: Option<String>,
}

#[derive(Deserialize)]
struct OverlineDoc {
    ring: GradedRing,
    monomial: String,
    #[serde(default)]
    chern: Option<ChernDoc>,
    #[serde(default)]
    k: Option<CorrMatrix>,
    /// Use the stationary test fixture complete through this size.
    #[serde(default)]
    stationary: Option<u32>,
}

#[derive(Deserialize)]
struct PredicateDoc {
    zp: RationalFunction,
    zgw: HalfSeries,
    d_beta: i64,
    /// `l(mu) - |mu|`; zero for absolute invariants.
    #[serde(default)]
    l_minus_abs: i64,
    order: i64,
}

fn load_leaves(dir: &Path) -> CmdResult<BTreeMap<String, TheoryTable>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut out = BTreeMap::new();
    for p in paths {
        let mut v = read_value(&p)?;
        // either {"name", "table"} or a bare table named by the file stem
        let (name, table) = match v.as_object_mut().and_then(|o| Some((o.remove("name")?, o.remove("table")?))) {
            Some((Value::String(n), t)) => (n, t),
            Some(_) => return Err(Failure::Input(format!("{}: leaf name must be a string", p.display()))),
            None => (p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(), v),
        };
        let table: TheoryTable = from_value(table, &p.display().to_string())?;
        if out.insert(name.clone(), table).is_some() {
            return Err(Failure::Input(format!("leaf {name} supplied twice")));
        }
    }
    Ok(out)
}

fn execute(cmd: &Command) -> CmdResult<Map<String, Value>> {
    let mut out = Map::new();
    match cmd {
        Command::BpsForward { input, classes, order, q } => {
            let table: BpsTable = read_doc(input)?;
            let classes: Vec<CurveClass> = if classes.is_empty() {
                table.class_box.classes().into_iter().filter(|c| !c.is_zero()).collect()
            } else {
                classes.iter().map(|c| parse_class(c)).collect::<CmdResult<_>>()?
            };
            let mut results = Vec::new();
            if *q {
                for beta in &classes {
                    let r = bps::gv_forward_q(&table, beta)?;
                    results.push(json!({"class": beta, "q": r, "display": r.to_string()}));
                }
            } else {
                let order = check_order(*order)?;
                for (beta, f) in bps::gv_forward_all(&table, &classes, order)? {
                    results.push(json!({"class": beta, "u": f}));
                }
            }
            out.insert("results".into(), Value::Array(results));
        }
        Command::BpsInvert { input, max_genus } => {
            let doc: FreeEnergyDoc = read_doc(input)?;
            let mut f = BTreeMap::new();
            for (k, s) in doc.series {
                f.insert(parse_class(&k)?, s);
            }
            let genus = max_genus.or(doc.max_genus).ok_or_else(|| {
                Failure::Kernel(Error::invalid("max_genus must be given in the document or with --max-genus"))
            })?;
            let ray: Vec<CurveClass> = f.keys().cloned().collect();
            let table = bps::gv_invert(&f, &ray, genus)?;
            out.insert("bps".into(), to_json(&table));
        }
        Command::BpsReport { input } => {
            let table: BpsTable = read_doc(input)?;
            out.insert("report".into(), to_json(&bps::integrality_report(&table)));
        }
        Command::ToU { input, order } => {
            let order = check_order(*order)?;
            let doc: SeriesOrRatfun = read_doc(input)?;
            let u = match (doc.series, doc.ratfun) {
                (Some(s), None) => series::to_u(&s, order)?,
                (None, Some(r)) => series::ratfun_to_u(&r, order)?,
                _ => return Err(Failure::Input("expected exactly one of \"series\" or \"ratfun\"".into())),
            };
            out.insert("u".into(), to_json(&u));
        }
        Command::Ratrec { input, num_deg, den_deg } => {
            let doc: SeriesOrRatfun = read_doc(input)?;
            let s = doc.series.ok_or_else(|| Failure::Input("expected \"series\"".into()))?;
            let s = if s.var() == Var::S { s.s_to_q()? } else { s };
            let (rec, bounds) = match (num_deg, den_deg) {
                (Some(a), Some(b)) => (ratfun::reconstruct(&s, *a, *b)?, (*a, *b)),
                (None, None) => ratfun::reconstruct_auto(&s)?,
                _ => return Err(Failure::Input("give both --num-deg and --den-deg, or neither".into())),
            };
            out.insert("bounds".into(), json!([bounds.0, bounds.1]));
            match rec {
                Reconstruction::Found(r) => {
                    out.insert("found".into(), Value::Bool(true));
                    out.insert("display".into(), Value::String(r.to_string()));
                    out.insert("ratfun".into(), to_json(&r));
                }
                Reconstruction::NoSolution => {
                    out.insert("found".into(), Value::Bool(false));
                }
            }
        }
        Command::Symcheck { input } => {
            let doc: SeriesOrRatfun = read_doc(input)?;
            let r = match (doc.series, doc.ratfun) {
                (None, Some(r)) => r,
                (Some(s), None) => {
                    let s = if s.var() == Var::S { s.s_to_q()? } else { s };
                    match ratfun::reconstruct_auto(&s)?.0 {
                        Reconstruction::Found(r) => r,
                        Reconstruction::NoSolution => {
                            return Err(Failure::Kernel(Error::Inconsistent(
                                "series is not the expansion of a rational function within its precision".into(),
                            )))
                        }
                    }
                }
                _ => return Err(Failure::Input("expected exactly one of \"series\" or \"ratfun\"".into())),
            };
            if r.var() != Var::Q {
                return Err(Failure::Kernel(Error::VariableMismatch { expected: "q".into(), found: r.var().to_string() }));
            }
            out.insert("symmetric".into(), Value::Bool(ratfun::check_q_symmetry(&r)));
            out.insert("display".into(), Value::String(r.to_string()));
        }
        Command::Overline { input } => {
            let doc: OverlineDoc = read_doc(input)?;
            let ring = &doc.ring;
            let m = DescendentMonomial::parse(&doc.monomial, ring)?;
            let elem = |s: &Option<String>| match s {
                Some(s) => ring.parse_element(s),
                None => Ok(ring.zero_element()),
            };
            let chern = match &doc.chern {
                Some(c) => ChernParams::new(elem(&c.c1)?, elem(&c.c2)?, elem(&c.c3)?, ring)?,
                None => ChernParams::zero(ring),
            };
            let k = match (doc.k, doc.stationary) {
                (Some(k), None) => k,
                (None, Some(n)) => CorrMatrix::stationary(n),
                _ => return Err(Failure::Input("expected exactly one of \"k\" or \"stationary\"".into())),
            };
            let terms: Vec<Value> = corr::overline(&m, &k, &chern, ring)?
                .into_iter()
                .map(|(mono, s)| json!({"monomial": mono.format(ring), "series": s}))
                .collect();
            out.insert("terms".into(), Value::Array(terms));
        }
        Command::Glue { left, right, rule, rule_file, classes } => {
            let l: TheoryTable = read_doc(left)?;
            let r: TheoryTable = read_doc(right)?;
            let rule = rule_from(*rule, rule_file.as_deref())?;
            let classes: Vec<CurveClass> = classes.iter().map(|c| parse_class(c)).collect::<CmdResult<_>>()?;
            let step = DegenerationStep::new(l, r, rule)?;
            let table = glue::glue_table(&step, (!classes.is_empty()).then_some(classes.as_slice()))?;
            if table.slots().is_empty() {
                let absolute: BTreeMap<String, &HalfSeries> =
                    table.entries().map(|(b, _, s)| (class_key(b), s)).collect();
                out.insert("absolute".into(), to_json(&absolute));
            }
            out.insert("table".into(), to_json(&table));
        }
        Command::Invert { target, known, unknown, rule, rule_file } => {
            let t: TheoryTable = read_doc(target)?;
            let k: TheoryTable = read_doc(known)?;
            let mut spec: UnknownSpec = read_doc(unknown)?;
            spec.order = match (spec.order, max_order()?) {
                (Some(o), _) => Some(check_order(o)?),
                (None, cap) => cap,
            };
            let rule = rule_from(*rule, rule_file.as_deref())?;
            let outcome = glue::invert_step(&t, &k, &spec, &rule)?;
            out.insert("residual_zero".into(), Value::Bool(outcome.residual.is_zero()));
            out.insert("residual".into(), to_json(&outcome.residual));
            out.insert("table".into(), to_json(&outcome.table));
        }
        Command::Pipeline { spec, leaves, targets } => {
            let spec: PipelineSpec = read_doc(spec)?;
            let leaves = load_leaves(leaves)?;
            let res = glue::reduction_pipeline(&spec, &leaves)?;
            for t in targets {
                if !res.tables.contains_key(t) {
                    return Err(Failure::Kernel(Error::MissingData(format!("pipeline output {t}"))));
                }
            }
            let keep = |name: &String| targets.is_empty() || targets.contains(name);
            let tables: Map<String, Value> =
                res.tables.iter().filter(|(n, _)| keep(n)).map(|(n, t)| (n.clone(), to_json(t))).collect();
            out.insert("order".into(), to_json(&res.order));
            out.insert("tables".into(), Value::Object(tables));
            out.insert("residuals".into(), to_json(&res.residuals));
        }
        Command::Predicate { input } => {
            let doc: PredicateDoc = read_doc(input)?;
            let order = check_order(doc.order)?;
            let holds = corr::correspondence_predicate(&doc.zp, &doc.zgw, doc.d_beta, doc.l_minus_abs, order)?;
            out.insert("holds".into(), Value::Bool(holds));
        }
    }
    Ok(out)
}

fn document(command: &str, body: Map<String, Value>) -> Value {
    let mut doc = body;
    doc.insert("format".into(), Value::String(FORMAT.into()));
    doc.insert("command".into(), Value::String(command.into()));
    Value::Object(doc)
}

fn error_document(command: &str, f: &Failure) -> Value {
    let mut body = Map::new();
    body.insert("error".into(), json!({"kind": f.kind(), "message": f.message()}));
    document(command, body)
}

/// Runs a parsed invocation, writing the document to `--out` or `stdout`.
/// Returns the process exit code.
pub fn run_cli(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let name = cli.command.name();
    let result = match cli.jobs {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(|| execute(&cli.command)),
            Err(e) => Err(Failure::Input(format!("cannot start {n} workers: {e}"))),
        },
        None => execute(&cli.command),
    };
    let (doc, code) = match &result {
        Ok(body) => (document(name, body.clone()), 0),
        Err(f) => {
            let _ = writeln!(stderr, "gwp {name}: {}", f.message());
            (error_document(name, f), f.exit_code())
        }
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("json values serialize");
    text.push('\n');
    match &cli.out {
        Some(path) => {
            if let Err(e) = fs::write(path, &text) {
                let _ = writeln!(stderr, "gwp {name}: {}: {e}", path.display());
                return 2;
            }
        }
        None => {
            let _ = stdout.write_all(text.as_bytes());
        }
    }
    code
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run_cli(&cli, stdout, stderr),
        Err(e) => {
            let _ = write!(stderr, "{e}");
            e.exit_code()
        }
    }
}

/// Entry point of the `gwp` binary.
pub fn main() -> i32 {
    run(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr())
}
