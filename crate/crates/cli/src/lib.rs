//! Command-line front end: algebra specs in, moments, cumulants, densities and
//! verification reports out.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use freefock::cumulants::{Cached, CumulantTable, Family, Handle, MomentFunctional};
use freefock::fockspace::{FockModel, VacuumMoments, Variant};
use freefock::spectral::{
    free_binomial_measure, gamma_boolean, gamma_free_product, locate_atoms, psi_measure, ricard_measures,
    stieltjes_invert, Atom, CauchyTransform, SpectralMeasure, DEFAULT_EPS_SCHEDULE,
};
use freefock::states::{BaseMoments, TwoState, TwoStateMoments};
use freefock::verify::{criterion_verdicts, run_suite, CheckReport, Suite};
use freefock::{load_spec, parse_spec, Letter, NCPoly, StateOracle, Word, C64};
use serde_json::{json, Value};

/// Largest number of tuples a single table may hold.
pub const MAX_ROWS: usize = 200_000;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] freefock::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0} verification check(s) failed")]
    VerifyFailed(usize),
}

impl CliError {
    /// Process exit status: 2 for malformed input, 3 for size caps, 4 for numerical
    /// failures, 5 for failed verification.
    pub fn exit_code(&self) -> i32 {
        use freefock::Error as E;
        match self {
            CliError::Core(E::Size { .. } | E::Truncation { .. }) => 3,
            CliError::Core(E::Numeric(_) | E::Degenerate(_) | E::IncompleteTable(_)) => 4,
            CliError::Core(_) | CliError::Io { .. } => 2,
            CliError::VerifyFailed(_) => 5,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "freefock", version, about = "Two-state Fock-space moments, cumulants and spectra")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Joint moments of centered generators under Φ_t or Ψ_t.
    Moments(MomentArgs),
    /// Free, Boolean or conditionally free cumulant tables.
    Cumulants(CumulantArgs),
    /// Sampled density and atoms of a closed-form law.
    Density(DensityArgs),
    /// Atom weights of the free and Boolean product formulas.
    Gammas(GammaArgs),
    /// Run the named cross-validation checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Phi,
    Psi,
    Ricard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Noncrossing-partition sums.
    Partitions,
    /// Vacuum moments of truncated Fock-space matrices.
    Fock,
}

#[derive(Debug, Args)]
pub struct AlgebraArgs {
    /// Algebra spec: a JSON file path, or inline JSON starting with `{`.
    #[arg(long)]
    pub spec: String,
    /// Words to evaluate, e.g. "p p"; default is every word up to --max-order.
    #[arg(long = "word")]
    pub words: Vec<String>,
    #[arg(long, default_value_t = 4)]
    pub max_order: usize,
    #[arg(long, value_enum, default_value_t = Method::Partitions)]
    pub method: Method,
}

#[derive(Debug, Args)]
pub struct MomentArgs {
    #[command(flatten)]
    pub algebra: AlgebraArgs,
    #[arg(long)]
    pub t: f64,
    #[arg(long, value_enum, default_value_t = VariantArg::Phi)]
    pub variant: VariantArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Free,
    Boolean,
    Cfree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StateArg {
    Base,
    Phi,
    Psi,
}

#[derive(Debug, Args)]
pub struct CumulantArgs {
    #[command(flatten)]
    pub algebra: AlgebraArgs,
    #[arg(long, value_enum, default_value_t = FamilyArg::Free)]
    pub family: FamilyArg,
    /// Functional whose cumulants are taken; `cfree` always uses the pair (Φ_t, Ψ_t).
    #[arg(long, value_enum, default_value_t = StateArg::Base)]
    pub state: StateArg,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Law {
    /// Distribution of X(p°) under Φ_t.
    FreeBinomial,
    /// Distribution of Y(p°) under Ψ_t.
    Psi,
    /// Vacuum law of the Ricard field.
    Ricard1,
    /// Second-state law of the Ricard field.
    Ricard2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DensityMethod {
    Closed,
    Inverted,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long, value_enum, default_value_t = Law::FreeBinomial)]
    pub law: Law,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = DensityMethod::Closed)]
    pub method: DensityMethod,
    /// Atom/support sidecar; defaults to the output path with a `.json` extension.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Product {
    Free,
    Boolean,
}

#[derive(Debug, Args)]
pub struct GammaArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub alphas: Vec<f64>,
    #[arg(long)]
    pub t: f64,
    #[arg(long, value_enum, default_value_t = Product::Free)]
    pub product: Product,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value = "all")]
    pub suite: String,
    /// Include wall-clock seconds per check (breaks byte-identical reruns).
    #[arg(long)]
    pub timings: bool,
}

/// Formats a number with 12 significant digits, dropping trailing zeros.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        trim_zeros(&fixed)
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn round12(x: f64) -> Value {
    let r: f64 = sig12(x).parse().unwrap_or(x);
    serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
}

fn read_oracle(spec: &str) -> CliResult<StateOracle> {
    Ok(if spec.trim_start().starts_with('{') {
        parse_spec(spec, "inline")?
    } else {
        load_spec(Path::new(spec))?
    })
}

fn generator_letters(o: &StateOracle) -> Vec<String> {
    o.generators().iter().map(|g| Letter::in_component(g.id.clone(), &g.component).to_string()).collect()
}

// Distinct letters of the requested words as centered elements, and each word as handles.
struct Workload {
    labels: Vec<String>,
    elements: Vec<NCPoly>,
    tuples: Vec<Vec<Handle>>,
}

fn workload(o: &StateOracle, a: &AlgebraArgs) -> CliResult<Workload> {
    let mut labels: Vec<String> = Vec::new();
    let mut tuples = Vec::new();
    if a.words.is_empty() {
        // Scalar generators center to zero and only add zero rows.
        for l in generator_letters(o) {
            let c = o.center(&NCPoly::word(Word::parse(&l)?))?;
            let vanishes = match o.as_matrix() {
                Some(m) => m.poly_matrix(&c)?.norm() <= freefock::algebra::EXACT_TOL,
                None => c.is_zero(),
            };
            if !vanishes {
                labels.push(l);
            }
        }
        let k = labels.len();
        let mut total = 0usize;
        for n in 1..=a.max_order {
            total = total.saturating_add(k.saturating_pow(n as u32));
        }
        if total > MAX_ROWS {
            return Err(freefock::Error::Size { what: "number of words", got: total, limit: MAX_ROWS }.into());
        }
        let mut layer: Vec<Vec<Handle>> = vec![Vec::new()];
        for _ in 0..a.max_order {
            layer = layer
                .iter()
                .flat_map(|w| (0..k).map(move |i| [w.as_slice(), &[Handle(i)]].concat()))
                .collect();
            tuples.extend(layer.iter().cloned());
        }
    } else {
        for w in &a.words {
            let word = Word::parse(w)?;
            let mut t = Vec::new();
            for l in &word.0 {
                let name = l.to_string();
                let i = labels.iter().position(|x| *x == name).unwrap_or_else(|| {
                    labels.push(name);
                    labels.len() - 1
                });
                t.push(Handle(i));
            }
            tuples.push(t);
        }
    }
    let elements = labels
        .iter()
        .map(|l| o.center(&NCPoly::word(Word::parse(l)?)))
        .collect::<freefock::Result<Vec<_>>>()?;
    Ok(Workload { labels, elements, tuples })
}

fn variant(v: VariantArg) -> Variant {
    match v {
        VariantArg::Phi => Variant::Phi,
        VariantArg::Psi => Variant::Psi,
        VariantArg::Ricard => Variant::Ricard,
    }
}

fn fock_functional(o: &StateOracle, v: Variant, t: f64, w: &Workload) -> CliResult<VacuumMoments> {
    let longest = w.tuples.iter().map(Vec::len).max().unwrap_or(0);
    let levels = longest.div_ceil(2).max(1);
    let model = FockModel::build(o, v, t, levels)?;
    Ok(VacuumMoments::new(model, &w.elements)?)
}

fn two_state_functional<'a>(
    o: &'a StateOracle,
    v: VariantArg,
    t: f64,
    method: Method,
    w: &Workload,
) -> CliResult<Box<dyn MomentFunctional + 'a>> {
    match (method, v) {
        (Method::Fock, _) => Ok(Box::new(Cached::new(fock_functional(o, variant(v), t, w)?))),
        (Method::Partitions, VariantArg::Phi) => {
            Ok(Box::new(Cached::new(TwoStateMoments::new(o, &w.elements, t, TwoState::Phi)?)))
        }
        (Method::Partitions, VariantArg::Psi) => {
            Ok(Box::new(Cached::new(TwoStateMoments::new(o, &w.elements, t, TwoState::Psi)?)))
        }
        (Method::Partitions, VariantArg::Ricard) => Err(freefock::Error::Argument(
            "the ricard variant is only available with --method fock".into(),
        )
        .into()),
    }
}

fn tuple_label(w: &Workload, t: &[Handle]) -> String {
    t.iter().map(|h| w.labels[h.0].as_str()).collect::<Vec<_>>().join(" ")
}

fn complex_rows(w: &Workload, rows: &[(Vec<Handle>, C64)], key: &str, format: Format) -> String {
    match format {
        Format::Csv => {
            let mut s = format!("{key},re,im\n");
            for (t, v) in rows {
                s.push_str(&format!("{},{},{}\n", tuple_label(w, t), sig12(v.re), sig12(v.im)));
            }
            s
        }
        Format::Json => {
            let items: Vec<Value> = rows
                .iter()
                .map(|(t, v)| json!({ key: tuple_label(w, t), "re": round12(v.re), "im": round12(v.im) }))
                .collect();
            serde_json::to_string_pretty(&items).expect("serializable") + "\n"
        }
    }
}

fn moments(a: &MomentArgs, format: Format) -> CliResult<String> {
    let o = read_oracle(&a.algebra.spec)?;
    let w = workload(&o, &a.algebra)?;
    let m = two_state_functional(&o, a.variant, a.t, a.algebra.method, &w)?;
    let rows = w
        .tuples
        .iter()
        .map(|t| Ok((t.clone(), m.moment(t)?)))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(complex_rows(&w, &rows, "word", format))
}

fn cumulants(a: &CumulantArgs, format: Format) -> CliResult<String> {
    let o = read_oracle(&a.algebra.spec)?;
    let w = workload(&o, &a.algebra)?;
    let table = match a.family {
        FamilyArg::Cfree => {
            let phi = two_state_functional(&o, VariantArg::Phi, a.t, a.algebra.method, &w)?;
            let psi = two_state_functional(&o, VariantArg::Psi, a.t, a.algebra.method, &w)?;
            CumulantTable::compute_cfree(&*phi, &*psi, &w.tuples)?
        }
        FamilyArg::Free | FamilyArg::Boolean => {
            let family = if a.family == FamilyArg::Free { Family::Free } else { Family::Boolean };
            let m: Box<dyn MomentFunctional> = match a.state {
                StateArg::Base => Box::new(Cached::new(BaseMoments::new(&o, &w.elements)?)),
                StateArg::Phi => two_state_functional(&o, VariantArg::Phi, a.t, a.algebra.method, &w)?,
                StateArg::Psi => two_state_functional(&o, VariantArg::Psi, a.t, a.algebra.method, &w)?,
            };
            CumulantTable::compute(family, &*m, &w.tuples)?
        }
    };
    let rows = w
        .tuples
        .iter()
        .map(|t| Ok((t.clone(), table.get(t)?)))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(complex_rows(&w, &rows, "tuple", format))
}

fn law(a: &DensityArgs) -> CliResult<(SpectralMeasure, CauchyTransform)> {
    Ok(match a.law {
        Law::FreeBinomial => (free_binomial_measure(a.alpha, a.t)?, CauchyTransform::free_binomial(a.alpha, a.t)?),
        Law::Psi => (psi_measure(a.alpha, a.t)?, CauchyTransform::psi(a.alpha, a.t)?),
        Law::Ricard1 => {
            let m = ricard_measures(a.theta)?.0;
            let g = CauchyTransform::of_measure(&m);
            (m, g)
        }
        Law::Ricard2 => (ricard_measures(a.theta)?.1, CauchyTransform::semicircle(a.theta)?),
    })
}

fn atoms_json(atoms: &[Atom]) -> Value {
    Value::Array(atoms.iter().map(|a| json!({ "x": round12(a.x), "mass": round12(a.mass) })).collect())
}

fn density(a: &DensityArgs, format: Format, output: Option<&Path>) -> CliResult<String> {
    if a.points < 2 {
        return Err(freefock::Error::Argument("--points must be at least 2".into()).into());
    }
    let (m, g) = law(a)?;
    let (lo, hi) = m.support().unwrap_or((0.0, 0.0));
    let grid: Vec<f64> = (0..a.points).map(|i| lo + (hi - lo) * i as f64 / (a.points - 1) as f64).collect();
    let (samples, atoms) = match a.method {
        DensityMethod::Closed => (grid.iter().map(|&x| (x, m.density(x))).collect::<Vec<_>>(), m.atoms.clone()),
        DensityMethod::Inverted => {
            let inv = stieltjes_invert(&g, &grid, &DEFAULT_EPS_SCHEDULE)?;
            let span = m.atoms.iter().map(|x| x.x).fold((lo, hi), |(l, h), x| (l.min(x), h.max(x)));
            let atoms = locate_atoms(&g, span.0 - 0.5, span.1 + 0.5)?;
            (inv.samples.iter().map(|s| (s.x, s.density)).collect(), atoms)
        }
    };
    let params: BTreeMap<&str, Value> = m.params.iter().map(|(k, v)| (k.as_str(), round12(*v))).collect();
    let sidecar = json!({
        "atoms": atoms_json(&atoms),
        "support": [round12(lo), round12(hi)],
        "params": params,
    });
    let sidecar_path = a.sidecar.clone().or_else(|| output.map(|p| p.with_extension("json")));
    let body = match format {
        Format::Csv => {
            let mut s = String::from("x,density\n");
            for (x, d) in &samples {
                s.push_str(&format!("{},{}\n", sig12(*x), sig12(*d)));
            }
            s
        }
        Format::Json => {
            let mut all = sidecar.clone();
            all["samples"] = Value::Array(
                samples.iter().map(|(x, d)| json!({ "x": round12(*x), "density": round12(*d) })).collect(),
            );
            serde_json::to_string_pretty(&all).expect("serializable") + "\n"
        }
    };
    if let Some(p) = sidecar_path {
        if Some(p.as_path()) != output {
            write_file(&p, &(serde_json::to_string_pretty(&sidecar).expect("serializable") + "\n"))?;
        }
    }
    Ok(body)
}

fn gammas(a: &GammaArgs, format: Format) -> CliResult<String> {
    let values: Vec<(&str, f64)> = match a.product {
        Product::Free => {
            let (g1, g2) = gamma_free_product(&a.alphas, a.t)?;
            vec![("gamma1", g1), ("gamma2", g2)]
        }
        Product::Boolean => vec![("gamma", gamma_boolean(&a.alphas, a.t)?)],
    };
    Ok(match format {
        Format::Csv => {
            let mut s = String::from("name,value\n");
            for (k, v) in &values {
                s.push_str(&format!("{k},{}\n", sig12(*v)));
            }
            s
        }
        Format::Json => {
            let obj: BTreeMap<&str, Value> = values.iter().map(|(k, v)| (*k, round12(*v))).collect();
            serde_json::to_string_pretty(&obj).expect("serializable") + "\n"
        }
    })
}

fn report_line(r: &CheckReport, timings: bool) -> String {
    let tag = r.criterion.map_or("-".to_string(), |c| c.to_string());
    let mut s = format!(
        "{} {tag} {} max_error={} tol={} {}",
        if r.passed { "PASS" } else { "FAIL" },
        r.name,
        sig12(r.max_error),
        sig12(r.tolerance),
        r.detail
    );
    if timings {
        s.push_str(&format!(" seconds={}", sig12(r.seconds)));
    }
    s
}

fn verify(a: &VerifyArgs, format: Format) -> CliResult<(String, usize)> {
    let suite: Suite = a.suite.parse()?;
    let reports = run_suite(suite);
    let failed = reports.iter().filter(|r| !r.passed).count();
    let body = match format {
        Format::Csv => {
            let mut s = String::new();
            for r in &reports {
                s.push_str(&report_line(r, a.timings));
                s.push('\n');
            }
            for (c, passed, names) in criterion_verdicts(&reports) {
                s.push_str(&format!(
                    "criterion {c}: {} ({})\n",
                    if passed { "PASS" } else { "FAIL" },
                    names.join(", ")
                ));
            }
            s
        }
        Format::Json => {
            let items: Vec<Value> = reports
                .iter()
                .map(|r| {
                    let mut v = json!({
                        "name": r.name,
                        "criterion": r.criterion,
                        "passed": r.passed,
                        "max_error": round12(r.max_error),
                        "tolerance": round12(r.tolerance),
                        "detail": r.detail,
                    });
                    if a.timings {
                        v["seconds"] = round12(r.seconds);
                    }
                    v
                })
                .collect();
            serde_json::to_string_pretty(&items).expect("serializable") + "\n"
        }
    };
    Ok((body, failed))
}

fn write_file(path: &Path, body: &str) -> CliResult<()> {
    fs::write(path, body).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

/// Runs one command; the main output goes to `--output` or to `out`.
pub fn run(config: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let output = config.output.as_deref();
    let mut failed = 0;
    let body = match &config.command {
        Command::Moments(a) => moments(a, config.format)?,
        Command::Cumulants(a) => cumulants(a, config.format)?,
        Command::Density(a) => density(a, config.format, output)?,
        Command::Gammas(a) => gammas(a, config.format)?,
        Command::Verify(a) => {
            let (body, n) = verify(a, config.format)?;
            failed = n;
            body
        }
    };
    match output {
        Some(p) => write_file(p, &body)?,
        None => out
            .write_all(body.as_bytes())
            .map_err(|source| CliError::Io { path: "stdout".into(), source })?,
    }
    if failed > 0 {
        return Err(CliError::VerifyFailed(failed));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(0.21), "0.21");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(-2.0 / 3.0 * 1e-7), "-6.66666666667e-8");
        assert_eq!(sig12(123456789012345.0), "1.23456789012e14");
        assert_eq!(sig12(-0.0), "0");
        assert_eq!(sig12(42.0), "42");
    }

    #[test]
    fn exit_codes() {
        use freefock::Error as E;
        let code = |e: E| CliError::Core(e).exit_code();
        assert_eq!(code(E::Parse { path: "x".into(), message: "y".into() }), 2);
        assert_eq!(code(E::Size { what: "n", got: 15, limit: 14 }), 3);
        assert_eq!(code(E::Numeric("z".into())), 4);
        assert_eq!(CliError::VerifyFailed(1).exit_code(), 5);
    }
}
