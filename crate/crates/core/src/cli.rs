//! The `iwasawa` command line: `order`, `fit`, `arith`, `selfcheck`.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::arith::{ArithError, PlaceSet, PlaceSpec, Referent, ReferentTable, TowerInput};
use crate::chars::{enumerate_irreducibles, AbelianGroup, CharacterTable, MirrorContext, VirtualCharacter};
use crate::fit::{fit_sequence, FitError};
use crate::iwasawa::{DistinguishedPoly, IwasawaError, LambdaAlgebra, LambdaElement};
use crate::modules::{
    elementary_to_presentation, quotient_order_nk, quotient_order_with_y, ElementaryModuleSpec, ModuleError,
    PresentedModule,
};
use crate::padic::{CoefElement, CoefRing, PadicError, PrecisionContext};
use crate::selfcheck::{run_selfcheck, SelfcheckOptions, Status};

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_MALFORMED: i32 = 2;
pub const EXIT_CAP: i32 = 3;
pub const EXIT_UNSTABLE: i32 = 4;
pub const EXIT_NO_LEOPOLDT: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "iwasawa", version, about = "Iwasawa parameters from quotient orders and character data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Orders |X/∇_{n,k}X| for n = 0..n_max of every component of a module file.
    Order(OrderArgs),
    /// Fit (ρ, μ, λ, ν) to order sequences, an `order` report, or a module file.
    Fit(FitArgs),
    /// ρ, μ, λ of a tower from place data and referents, with the duality checks.
    Arith(ArithArgs),
    /// Run the built-in oracle suites.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct OrderArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub n_max: u32,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Highest level computed when the input is a module file.
    #[arg(long, default_value_t = 6)]
    pub n_max: u32,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    #[arg(long)]
    pub window: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ArithArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub assume_leopoldt: bool,
    #[arg(long)]
    pub assume_iwasawa_mu_zero: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SelfcheckArgs {
    /// Replace the SNF pivot rule by a broken one; the consistency suite must then fail.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Settings of one run, independent of how they were parsed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub input: Option<PathBuf>,
    pub n_max: u32,
    pub k: u32,
    pub window: Option<usize>,
    pub assume_leopoldt: bool,
    pub assume_iwasawa_mu_zero: bool,
    pub inject_fault: bool,
    pub output: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Order,
    Fit,
    Arith,
    Selfcheck,
}

impl RunConfig {
    pub fn new(command: CommandKind, input: Option<PathBuf>) -> Self {
        Self {
            command,
            input,
            n_max: if command == CommandKind::Fit { 6 } else { 4 },
            k: 1,
            window: None,
            assume_leopoldt: false,
            assume_iwasawa_mu_zero: false,
            inject_fault: false,
            output: None,
            format: if command == CommandKind::Selfcheck { Format::Table } else { Format::Json },
        }
    }
}

impl From<Cli> for RunConfig {
    fn from(cli: Cli) -> Self {
        let with_out = |mut c: RunConfig, out: OutputArgs| {
            c.output = out.output;
            if let Some(f) = out.format {
                c.format = f;
            }
            c
        };
        match cli.command {
            Command::Order(a) => {
                let mut c = RunConfig::new(CommandKind::Order, Some(a.input));
                c.n_max = a.n_max;
                c.k = a.k;
                with_out(c, a.out)
            }
            Command::Fit(a) => {
                let mut c = RunConfig::new(CommandKind::Fit, Some(a.input));
                c.n_max = a.n_max;
                c.k = a.k;
                c.window = a.window;
                with_out(c, a.out)
            }
            Command::Arith(a) => {
                let mut c = RunConfig::new(CommandKind::Arith, Some(a.input));
                c.assume_leopoldt = a.assume_leopoldt;
                c.assume_iwasawa_mu_zero = a.assume_iwasawa_mu_zero;
                with_out(c, a.out)
            }
            Command::Selfcheck(a) => {
                let mut c = RunConfig::new(CommandKind::Selfcheck, None);
                c.inject_fault = a.inject_fault;
                with_out(c, a.out)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn malformed(message: impl Into<String>) -> Self {
        Self { code: EXIT_MALFORMED, message: message.into() }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

/// A finished report. `exit_code` is nonzero only for a failed self-check.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub json: Value,
    pub exit_code: i32,
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("serializable");
                s.push('\n');
                s
            }
            Format::Table => render_table(&self.json),
        }
    }
}

/// Parses arguments, runs, writes output; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_MALFORMED } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let config = RunConfig::from(cli);
    match execute(&config) {
        Ok(report) => {
            let text = report.render(config.format);
            let written = match &config.output {
                Some(path) => std::fs::write(path, &text).map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            match written {
                Ok(()) => report.exit_code,
                Err(msg) => {
                    eprintln!("error: {msg}");
                    EXIT_MALFORMED
                }
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn execute(config: &RunConfig) -> Result<Report, CliError> {
    match config.command {
        CommandKind::Selfcheck => Ok(cmd_selfcheck(config)),
        kind => {
            let path = config.input.as_ref().ok_or_else(|| CliError::malformed("--input is required"))?;
            let bytes =
                std::fs::read(path).map_err(|e| CliError::malformed(format!("cannot read {}: {e}", path.display())))?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            match kind {
                CommandKind::Order => cmd_order(config, &bytes),
                CommandKind::Fit => cmd_fit(config, &bytes),
                CommandKind::Arith => cmd_arith(config, &bytes, &base),
                CommandKind::Selfcheck => unreachable!(),
            }
        }
    }
}

fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn parse<T: for<'de> Deserialize<'de>>(bytes: &[u8], what: &str) -> Result<T, CliError> {
    serde_json::from_slice(bytes).map_err(|e| CliError::malformed(format!("malformed {what}: {e}")))
}

// ---------------------------------------------------------------- module files

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum CoefJson {
    Int(i64),
    Poly(Vec<i64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentJson {
    phi_label: String,
    #[serde(default)]
    coef_poly: Option<Vec<i64>>,
    #[serde(default)]
    rho: usize,
    #[serde(default)]
    f_list: Vec<Vec<CoefJson>>,
    #[serde(default)]
    m_list: Vec<u32>,
    #[serde(default)]
    extra_relations: Vec<Vec<Vec<CoefJson>>>,
    #[serde(default)]
    y_generators: Option<Vec<Vec<Vec<CoefJson>>>>,
    #[serde(default)]
    y_level: Option<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModuleFile {
    ell: u64,
    components: Vec<ComponentJson>,
}

struct Component {
    label: String,
    deg_phi: usize,
    module: PresentedModule,
    y: Option<(Vec<Vec<LambdaElement>>, u32)>,
}

fn cap_or_malformed(field: String) -> impl Fn(IwasawaError) -> CliError {
    move |e| match e {
        IwasawaError::DegreeCapExceeded { .. } => CliError { code: EXIT_CAP, message: format!("{field}: {e}") },
        other => CliError::malformed(format!("{field}: {other}")),
    }
}

fn module_error(field: &str, e: ModuleError) -> CliError {
    match e {
        ModuleError::Iwasawa(inner) => cap_or_malformed(field.to_string())(inner),
        ModuleError::EntryDegree { .. } => CliError { code: EXIT_CAP, message: format!("{field}: {e}") },
        other => CliError::malformed(format!("{field}: {other}")),
    }
}

fn lambda_from_json(ring: &Arc<CoefRing>, coeffs: &[CoefJson]) -> LambdaElement {
    let cs: Vec<CoefElement> = coeffs
        .iter()
        .map(|c| match c {
            CoefJson::Int(v) => ring.from_int(*v),
            CoefJson::Poly(v) => ring.element(v),
        })
        .collect();
    LambdaElement::new(ring, cs)
}

fn row_from_json(
    ring: &Arc<CoefRing>,
    row: &[Vec<CoefJson>],
    width: usize,
    field: &str,
) -> Result<Vec<LambdaElement>, CliError> {
    if row.len() != width {
        return Err(CliError::malformed(format!("{field}: expected {width} entries, found {}", row.len())));
    }
    Ok(row.iter().map(|e| lambda_from_json(ring, e)).collect())
}

fn load_modules(bytes: &[u8], n_max: u32, k: u32) -> Result<(u64, Vec<Component>), CliError> {
    let file: ModuleFile = parse(bytes, "module file")?;
    if k == 0 {
        return Err(CliError::malformed("--k must be at least 1"));
    }
    let precision = n_max + k;
    let ctx = PrecisionContext::new(file.ell, precision).map_err(|e| match e {
        PadicError::NotPrime(_) => CliError::malformed(format!("ell: {e}")),
        other => CliError::malformed(format!("ell/precision: {other}")),
    })?;
    let mut labels = BTreeSet::new();
    let mut out = Vec::new();
    for (ci, c) in file.components.iter().enumerate() {
        let at = |f: &str| format!("components[{ci}].{f}");
        if !labels.insert(c.phi_label.clone()) {
            return Err(CliError::malformed(format!("{}: duplicate label {:?}", at("phi_label"), c.phi_label)));
        }
        let ring = match &c.coef_poly {
            None => CoefRing::base(ctx),
            Some(h) => CoefRing::new(ctx, h).map_err(|e| CliError::malformed(format!("{}: {e}", at("coef_poly"))))?,
        };
        let algebra = LambdaAlgebra::for_levels(Arc::clone(&ring), n_max);
        let mut f_list = Vec::new();
        for (j, f) in c.f_list.iter().enumerate() {
            let field = at(&format!("f_list[{j}]"));
            let poly = lambda_from_json(&ring, f);
            if let Some(d) = poly.degree() {
                if d > algebra.degree_cap() {
                    return Err(CliError {
                        code: EXIT_CAP,
                        message: format!("{field}: degree {d} exceeds the cap {}", algebra.degree_cap()),
                    });
                }
            }
            f_list.push(DistinguishedPoly::new(poly).map_err(cap_or_malformed(field))?);
        }
        let spec = ElementaryModuleSpec::new(algebra.clone(), c.rho, f_list, c.m_list.clone())
            .map_err(|e| module_error(&at("f_list/m_list"), e))?;
        let mut module = elementary_to_presentation(&spec);
        let width = module.generators();
        for (r, row) in c.extra_relations.iter().enumerate() {
            let field = at(&format!("extra_relations[{r}]"));
            let row = row_from_json(&ring, row, width, &field)?;
            module.add_relation(row).map_err(|e| module_error(&field, e))?;
        }
        let y = match &c.y_generators {
            None => {
                if c.y_level.is_some() {
                    return Err(CliError::malformed(format!("{}: given without y_generators", at("y_level"))));
                }
                None
            }
            Some(gens) => {
                if k != 1 {
                    return Err(CliError::malformed(format!("{}: only supported with --k 1", at("y_generators"))));
                }
                let rows = gens
                    .iter()
                    .enumerate()
                    .map(|(g, row)| row_from_json(&ring, row, width, &at(&format!("y_generators[{g}]"))))
                    .collect::<Result<Vec<_>, _>>()?;
                Some((rows, c.y_level.unwrap_or(0)))
            }
        };
        out.push(Component { label: c.phi_label.clone(), deg_phi: ring.degree(), module, y });
    }
    Ok((file.ell, out))
}

struct Level {
    n: u32,
    x: u64,
    divisors: Vec<u32>,
    precision: u32,
}

fn component_levels(c: &Component, n_max: u32, k: u32) -> Result<Vec<Level>, CliError> {
    let mut out = Vec::new();
    let start = c.y.as_ref().map_or(0, |y| y.1);
    for n in start..=n_max {
        let rep = match &c.y {
            None => quotient_order_nk(&c.module, n, k),
            Some((gens, m)) => quotient_order_with_y(&c.module, gens, *m, n),
        }
        .map_err(|e| module_error(&format!("component {:?}, n = {n}", c.label), e))?;
        out.push(Level { n, x: rep.order_exponent, divisors: rep.elementary_divisor_valuations, precision: rep.precision_used });
    }
    Ok(out)
}

fn order_json(config: &RunConfig, bytes: &[u8]) -> Result<Value, CliError> {
    let (ell, comps) = load_modules(bytes, config.n_max, config.k)?;
    let mut components = Vec::new();
    for c in &comps {
        let levels: Vec<Value> = component_levels(c, config.n_max, config.k)?
            .into_iter()
            .map(|l| json!({"n": l.n, "x": l.x, "elementary_divisors": l.divisors, "precision": l.precision}))
            .collect();
        let mut entry = json!({
            "phi_label": c.label,
            "deg_phi": c.deg_phi,
            "generators": c.module.generators(),
            "relations": c.module.relations().len(),
            "levels": levels,
        });
        if let Some((gens, m)) = &c.y {
            entry["y_generators"] = json!(gens.len());
            entry["y_level"] = json!(m);
        }
        components.push(entry);
    }
    Ok(json!({
        "schema": "iwasawa-params/order/v1",
        "input_digest": digest(bytes),
        "ell": ell,
        "n_max": config.n_max,
        "k": config.k,
        "components": components,
    }))
}

pub fn cmd_order(config: &RunConfig, bytes: &[u8]) -> Result<Report, CliError> {
    Ok(Report { json: order_json(config, bytes)?, exit_code: 0 })
}

// ---------------------------------------------------------------- fit

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SequenceFile {
    ell: u64,
    #[serde(default)]
    window: Option<usize>,
    #[serde(default)]
    sequences: Option<BTreeMap<String, Vec<(u32, i64)>>>,
    #[serde(default)]
    points: Option<Vec<(u32, i64)>>,
}

fn sequences_from_order(report: &Value) -> Result<(u64, BTreeMap<String, Vec<(u32, i64)>>), CliError> {
    let bad = |f: &str| CliError::malformed(format!("order report: missing or malformed {f}"));
    let ell = report["ell"].as_u64().ok_or_else(|| bad("ell"))?;
    let mut seqs = BTreeMap::new();
    for c in report["components"].as_array().ok_or_else(|| bad("components"))? {
        let label = c["phi_label"].as_str().ok_or_else(|| bad("phi_label"))?.to_string();
        let pts = c["levels"]
            .as_array()
            .ok_or_else(|| bad("levels"))?
            .iter()
            .map(|l| Some((l["n"].as_u64()? as u32, l["x"].as_i64()?)))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| bad("levels[].n/x"))?;
        seqs.insert(label, pts);
    }
    Ok((ell, seqs))
}

fn fit_error(label: &str, e: FitError) -> CliError {
    let code = match e {
        FitError::Unstable { .. } => EXIT_UNSTABLE,
        _ => EXIT_MALFORMED,
    };
    CliError { code, message: format!("component {label:?}: {e}") }
}

pub fn cmd_fit(config: &RunConfig, bytes: &[u8]) -> Result<Report, CliError> {
    let value: Value = parse(bytes, "fit input")?;
    let is_order_report = value["schema"].as_str().is_some_and(|s| s.starts_with("iwasawa-params/order/"));
    let is_sequence = value.get("sequences").is_some() || value.get("points").is_some();
    let (ell, seqs, file_window, source) = if is_order_report {
        let (ell, s) = sequences_from_order(&value)?;
        (ell, s, None, "order report")
    } else if is_sequence {
        let f: SequenceFile = parse(bytes, "sequence file")?;
        let mut s = f.sequences.unwrap_or_default();
        if let Some(p) = f.points {
            s.insert("x".into(), p);
        }
        (f.ell, s, f.window, "sequences")
    } else {
        let order = order_json(config, bytes)?;
        let (ell, s) = sequences_from_order(&order)?;
        (ell, s, None, "module file")
    };
    let window = config.window.or(file_window).unwrap_or(3);
    let mut components = Map::new();
    for (label, pts) in &seqs {
        let f = fit_sequence(ell, pts, window).map_err(|e| fit_error(label, e))?;
        components.insert(
            label.clone(),
            json!({"rho": f.rho, "mu": f.mu, "lambda": f.lambda, "nu": f.nu, "stable_from": f.stable_from}),
        );
    }
    let json = json!({
        "schema": "iwasawa-params/fit/v1",
        "input_digest": digest(bytes),
        "source": source,
        "ell": ell,
        "window": window,
        "k": config.k,
        "components": components,
    });
    Ok(Report { json, exit_code: 0 })
}

// ---------------------------------------------------------------- arith

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CharTableJson {
    cyclic_orders: Vec<u64>,
    ell: u64,
    tau: Vec<u64>,
    omega: Vec<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Inline<T> {
    Path(String),
    Value(T),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Membership {
    One(String),
    Many(Vec<String>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlaceJson {
    id: String,
    #[serde(default)]
    subgroup_generators: Vec<Vec<u64>>,
    wild: bool,
    #[serde(default)]
    local_degree: Option<u64>,
    #[serde(default = "one")]
    multiplicity: u64,
    #[serde(default)]
    membership: Option<Membership>,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferentJson {
    #[serde(default)]
    mu: BTreeMap<String, i64>,
    #[serde(default)]
    lambda_plus: BTreeMap<String, i64>,
    #[serde(default)]
    lambda_minus: Option<BTreeMap<String, i64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct TowerJson {
    char_table: Inline<CharTableJson>,
    #[serde(rename = "F_degree")]
    f_degree: u64,
    places: Vec<PlaceJson>,
    #[serde(default)]
    referents: Option<Inline<BTreeMap<String, ReferentJson>>>,
}

fn resolve<T: for<'de> Deserialize<'de>>(item: Inline<T>, base: &Path, what: &str) -> Result<T, CliError> {
    match item {
        Inline::Value(v) => Ok(v),
        Inline::Path(p) => {
            let path = base.join(p);
            let bytes = std::fs::read(&path)
                .map_err(|e| CliError::malformed(format!("{what}: cannot read {}: {e}", path.display())))?;
            parse(&bytes, what)
        }
    }
}

fn arith_error(e: ArithError) -> CliError {
    match e {
        ArithError::LeopoldtNotAssumed => CliError { code: EXIT_NO_LEOPOLDT, message: e.to_string() },
        other => CliError::malformed(other.to_string()),
    }
}

/// Loaded tower file: input, referents, and whether referents were defaulted.
pub struct LoadedTower {
    pub input: TowerInput,
    pub referents: ReferentTable,
    pub referents_given: bool,
}

pub fn load_tower(bytes: &[u8], base: &Path) -> Result<LoadedTower, CliError> {
    let file: TowerJson = parse(bytes, "tower file")?;
    let ct: CharTableJson = resolve(file.char_table, base, "char_table")?;
    let group = AbelianGroup::new(&ct.cyclic_orders).map_err(|e| CliError::malformed(format!("char_table: {e}")))?;
    let table = Arc::new(
        enumerate_irreducibles(&group, ct.ell).map_err(|e| CliError::malformed(format!("char_table: {e}")))?,
    );
    let ctx = MirrorContext::new(&table, &ct.tau, &ct.omega)
        .map_err(|e| CliError::malformed(format!("char_table.tau/omega: {e}")))?;
    let mut places = Vec::new();
    let mut s = PlaceSet::new();
    let mut t = PlaceSet::new();
    for (i, p) in file.places.into_iter().enumerate() {
        let tags = match p.membership {
            None => vec![],
            Some(Membership::One(x)) => vec![x],
            Some(Membership::Many(xs)) => xs,
        };
        for tag in &tags {
            match tag.as_str() {
                "S" => {
                    s.insert(p.id.clone());
                }
                "T" => {
                    t.insert(p.id.clone());
                }
                "none" => {}
                other => {
                    return Err(CliError::malformed(format!("places[{i}].membership: unknown value {other:?}")));
                }
            }
        }
        places.push(PlaceSpec {
            id: p.id,
            subgroup: p.subgroup_generators,
            wild: p.wild,
            local_degree: p.local_degree,
            multiplicity: p.multiplicity,
        });
    }
    let input = TowerInput::new(table, ctx, file.f_degree, places, s, t).map_err(arith_error)?;
    let (referents, given) = match file.referents {
        None => (ReferentTable::zeros(&input), false),
        Some(r) => {
            let raw: BTreeMap<String, ReferentJson> = resolve(r, base, "referents")?;
            let tbl = input.table();
            let mut refs = ReferentTable::new();
            for (key, r) in raw {
                let subset: PlaceSet = key.split(',').map(str::trim).filter(|x| !x.is_empty()).map(String::from).collect();
                let field = |f: &str| format!("referents[{key:?}].{f}");
                let conv = |m: &BTreeMap<String, i64>, f: &str| {
                    tbl.from_map(m).map_err(|e| CliError::malformed(format!("{}: {e}", field(f))))
                };
                let referent = Referent {
                    mu: conv(&r.mu, "mu")?,
                    lambda_plus: conv(&r.lambda_plus, "lambda_plus")?,
                    lambda_minus: r.lambda_minus.as_ref().map(|m| conv(m, "lambda_minus")).transpose()?,
                };
                refs.insert(&input, subset, referent)
                    .map_err(|e| CliError::malformed(format!("{}: {e}", field(""))))?;
            }
            (refs, true)
        }
    };
    Ok(LoadedTower { input, referents, referents_given: given })
}

fn charmap(table: &CharacterTable, chi: &VirtualCharacter) -> Value {
    json!(table.to_map(chi))
}

fn set_json(s: &PlaceSet) -> Value {
    json!(s.iter().collect::<Vec<_>>())
}

pub fn cmd_arith(config: &RunConfig, bytes: &[u8], base: &Path) -> Result<Report, CliError> {
    let loaded = load_tower(bytes, base)?;
    let x = &loaded.input;
    let refs = &loaded.referents;
    let tbl = x.table();
    let result = x.compute(refs, config.assume_leopoldt).map_err(arith_error)?;
    let mut notes = result.notes.clone();
    if !loaded.referents_given {
        notes.push("no referents given: every referent character taken as 0".into());
    }

    let mirror = match x.check_mirror_identities(refs, config.assume_leopoldt) {
        Ok(r) => {
            let id = |c: &crate::arith::IdentityCheck| {
                json!({"holds": c.holds, "lhs": charmap(tbl, &c.lhs), "rhs": charmap(tbl, &c.rhs)})
            };
            json!({"rho_doubled": id(&r.rho_doubled), "mu": id(&r.mu), "lambda": id(&r.lambda)})
        }
        Err(ArithError::PreconditionSUnionT) => json!({"skipped": "S ∪ T does not contain every wild place"}),
        Err(e) => return Err(arith_error(e)),
    };
    let duality: Vec<Value> = x
        .check_lambda_duality(refs)
        .map_err(arith_error)?
        .iter()
        .map(|d| {
            json!({
                "subset": set_json(&d.subset),
                "complement": set_json(&d.complement),
                "holds": d.holds,
                "expected_lambda_minus": charmap(tbl, &d.expected),
                "actual_lambda_minus": charmap(tbl, &d.actual),
                "reconstructed": d.reconstructed,
            })
        })
        .collect();
    let bound = match x.check_mu_bound(refs) {
        Ok(b) => json!({
            "holds": b.holds,
            "lhs": charmap(tbl, &b.lhs),
            "rhs": charmap(tbl, &b.rhs),
            "first_violation": b.first_violation,
            "reading": b.reading,
        }),
        Err(ArithError::MissingReferent(m)) => json!({"skipped": format!("missing referent {{{}}}", m.join(","))}),
        Err(e) => return Err(arith_error(e)),
    };
    let mut checks = json!({"mirror": mirror, "lambda_duality": duality, "mu_bound": bound});
    if config.assume_iwasawa_mu_zero {
        checks["mu_vanishes"] = json!({"holds": result.mu.is_zero(), "assumption": "iwasawa mu = 0"});
    }
    let json = json!({
        "schema": "iwasawa-params/arith/v1",
        "input_digest": digest(bytes),
        "ell": tbl.ell(),
        "irreducibles": tbl.irreducibles().iter().map(|p| json!({"label": p.name(), "degree": p.degree()})).collect::<Vec<_>>(),
        "S": set_json(x.s()),
        "T": set_json(x.t()),
        "L": set_json(&x.wild()),
        "rho": charmap(tbl, &result.rho),
        "mu": charmap(tbl, &result.mu),
        "lambda": charmap(tbl, &result.lambda),
        "lambda_without_special": charmap(tbl, &result.lambda_base),
        "special_case": result.special_case,
        "assumptions": {"leopoldt": config.assume_leopoldt, "iwasawa_mu_zero": config.assume_iwasawa_mu_zero},
        "notes": notes,
        "checks": checks,
    });
    Ok(Report { json, exit_code: 0 })
}

// ---------------------------------------------------------------- selfcheck

pub fn cmd_selfcheck(config: &RunConfig) -> Report {
    let suites = run_selfcheck(&SelfcheckOptions { inject_snf_fault: config.inject_fault });
    let failed = suites.iter().any(|s| s.status == Status::Fail);
    let json = json!({
        "schema": "iwasawa-params/selfcheck/v1",
        "suites": suites.iter().map(|s| json!({"name": s.name, "status": s.status.as_str(), "detail": s.detail})).collect::<Vec<_>>(),
        "verdict": if failed { "fail" } else { "pass" },
    });
    Report { json, exit_code: if failed { EXIT_FAILURE } else { 0 } }
}

// ---------------------------------------------------------------- tables

fn format_charmap(v: &Value) -> String {
    let Some(m) = v.as_object() else { return v.to_string() };
    if m.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (name, c) in m {
        let c = c.as_i64().unwrap_or(0);
        let mag = c.unsigned_abs();
        let term = if mag == 1 { name.clone() } else { format!("{mag}{name}") };
        if out.is_empty() {
            out = if c < 0 { format!("-{term}") } else { term };
        } else {
            out.push_str(if c < 0 { " - " } else { " + " });
            out.push_str(&term);
        }
    }
    out
}

fn render_table(v: &Value) -> String {
    let schema = v["schema"].as_str().unwrap_or("");
    let mut out = String::new();
    if schema.starts_with("iwasawa-params/order/") {
        out.push_str(&format!("ell = {}, k = {}\n", v["ell"], v["k"]));
        out.push_str(&format!("{:<16} {:>4} {:>12}  elementary divisors\n", "component", "n", "x_n"));
        for c in v["components"].as_array().into_iter().flatten() {
            for l in c["levels"].as_array().into_iter().flatten() {
                let mut runs: Vec<(String, usize)> = Vec::new();
                for d in l["elementary_divisors"].as_array().into_iter().flatten() {
                    match runs.last_mut() {
                        Some((last, count)) if *last == d.to_string() => *count += 1,
                        _ => runs.push((d.to_string(), 1)),
                    }
                }
                let divs: Vec<String> =
                    runs.iter().map(|(d, c)| if *c == 1 { d.clone() } else { format!("{d}x{c}") }).collect();
                out.push_str(&format!(
                    "{:<16} {:>4} {:>12}  [{}]\n",
                    c["phi_label"].as_str().unwrap_or(""),
                    l["n"].to_string(),
                    l["x"].to_string(),
                    divs.join(", ")
                ));
            }
        }
    } else if schema.starts_with("iwasawa-params/fit/") {
        out.push_str(&format!("ell = {}, window = {}\n", v["ell"], v["window"]));
        out.push_str(&format!(
            "{:<16} {:>6} {:>6} {:>6} {:>8} {:>12}\n",
            "component", "rho", "mu", "lambda", "nu", "stable_from"
        ));
        for (label, f) in v["components"].as_object().into_iter().flatten() {
            out.push_str(&format!(
                "{:<16} {:>6} {:>6} {:>6} {:>8} {:>12}\n",
                label,
                f["rho"].to_string(),
                f["mu"].to_string(),
                f["lambda"].to_string(),
                f["nu"].to_string(),
                f["stable_from"].to_string()
            ));
        }
    } else if schema.starts_with("iwasawa-params/arith/") {
        out.push_str(&format!("ell = {}, S = {}, T = {}, L = {}\n", v["ell"], v["S"], v["T"], v["L"]));
        for key in ["rho", "mu", "lambda", "lambda_without_special"] {
            out.push_str(&format!("{key:<24} {}\n", format_charmap(&v[key])));
        }
        out.push_str(&format!("{:<24} {}\n", "special_case", v["special_case"]));
        let checks = &v["checks"];
        match checks["mirror"].get("skipped") {
            Some(reason) => out.push_str(&format!("{:<24} skipped: {}\n", "mirror", reason.as_str().unwrap_or(""))),
            None => {
                for key in ["rho_doubled", "mu", "lambda"] {
                    let c = &checks["mirror"][key];
                    out.push_str(&format!(
                        "{:<24} {}  ({} vs {})\n",
                        format!("mirror.{key}"),
                        if c["holds"].as_bool() == Some(true) { "holds" } else { "FAILS" },
                        format_charmap(&c["lhs"]),
                        format_charmap(&c["rhs"])
                    ));
                }
            }
        }
        for d in checks["lambda_duality"].as_array().into_iter().flatten() {
            out.push_str(&format!(
                "{:<24} {}\n",
                format!("lambda_duality {}", d["subset"]),
                if d["holds"].as_bool() == Some(true) { "holds" } else { "FAILS" }
            ));
        }
        let b = &checks["mu_bound"];
        let status = match b.get("skipped") {
            Some(r) => format!("skipped: {}", r.as_str().unwrap_or("")),
            None if b["holds"].as_bool() == Some(true) => "holds".into(),
            None => format!("FAILS at {}", b["first_violation"]),
        };
        out.push_str(&format!("{:<24} {}\n", "mu_bound", status));
        if let Some(m) = checks.get("mu_vanishes") {
            out.push_str(&format!("{:<24} {}\n", "mu_vanishes", m["holds"]));
        }
        for n in v["notes"].as_array().into_iter().flatten() {
            out.push_str(&format!("note: {}\n", n.as_str().unwrap_or("")));
        }
    } else if schema.starts_with("iwasawa-params/selfcheck/") {
        for s in v["suites"].as_array().into_iter().flatten() {
            out.push_str(&format!(
                "{:<8} {:<28} {}\n",
                s["status"].as_str().unwrap_or("").to_uppercase(),
                s["name"].as_str().unwrap_or(""),
                s["detail"].as_str().unwrap_or("")
            ));
        }
        out.push_str(&format!("verdict: {}\n", v["verdict"].as_str().unwrap_or("")));
    } else {
        out.push_str(&serde_json::to_string_pretty(v).unwrap_or_default());
        out.push('\n');
    }
    out
}
