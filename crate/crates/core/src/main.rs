use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use hjf::characters::{build_g, extensions_of, g_characters, unit_group_capped, DirichletCharacter};
use hjf::cyclotomic::{parse_rational, CyclotomicNumber};
use hjf::elliptic::{
    b_op, coprime_sieve, descend_sequence, eisenstein, eliminate_component, eta_quotient, hecke_t,
    lower_bound_constant, nonvanish_count, parse_eta_spec, predicted_moment_ratio, second_moment,
    squarefree_select, u_op, Constraints, LocalEigen, QExpansion,
};
use hjf::io::{qexp_meta, qexp_to_csv, read_qexp, write_qexp};
use hjf::jacobi::{
    apply_U_rho, apply_V_l, apply_u_rho, ez_map, is_spez, psi_combination, random_admissible,
    theta_components, twisted_ez_map, w_mu, JacobiCoefficientSystem,
};
use hjf::lattice::{fj_extract, sniff_table_field, CoefficientTable};
use hjf::pipeline::{
    report_to_string, run_reduction_pipeline, Backend, IndexPolicy, PipelineConfig, ReportFormat,
};
use hjf::ring::{
    chi_d, exponential_sum, factor_element, moebius, residues_mod, split_rational_prime, QuadField,
    RingElement,
};

#[derive(Parser)]
#[command(name = "hjf", version, about = "Hermitian Jacobi form toolkit")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(clap::Args, Clone, Copy)]
struct Common {
    /// Validate inputs and stop.
    #[arg(long)]
    dry_run: bool,
}

#[derive(clap::Args)]
struct IndexFilter {
    /// n = a mod q, written q:a.
    #[arg(long)]
    progression: Option<String>,
    /// Keep n coprime to M.
    #[arg(long)]
    coprime: Option<u64>,
    #[arg(long)]
    squarefree: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum OpKind {
    #[value(name = "U")]
    BigU,
    #[value(name = "u")]
    SmallU,
    #[value(name = "V")]
    V,
    #[value(name = "W")]
    W,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Verb {
    /// Norm of a ring element a+b*w@D.
    Norm {
        elem: String,
        #[command(flatten)]
        common: Common,
    },
    /// Canonical residues modulo an element.
    Residues {
        modulus: String,
        #[command(flatten)]
        common: Common,
    },
    /// Splitting of a rational prime.
    Split {
        #[arg(long, allow_hyphen_values = true)]
        field: i64,
        #[arg(long)]
        p: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Moebius function and factorization.
    Moebius {
        elem: String,
        #[command(flatten)]
        common: Common,
    },
    /// Kronecker character chi_D(n).
    Chi {
        #[arg(long, allow_hyphen_values = true)]
        field: i64,
        #[arg(long, allow_hyphen_values = true)]
        n: i64,
        #[command(flatten)]
        common: Common,
    },
    /// Exponential sum over residues.
    Expsum {
        #[arg(long)]
        x: String,
        #[arg(long)]
        s: String,
        #[command(flatten)]
        common: Common,
    },
    /// Index-m Fourier-Jacobi slice of a coefficient table.
    FjExtract {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        index: u64,
        #[arg(long)]
        weight: i64,
        #[arg(long, allow_hyphen_values = true)]
        field: Option<i64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Theta components of a system.
    Theta {
        #[arg(long)]
        system: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Untwisted Eichler-Zagier image.
    Ez {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Twisted image for character eta and extension ext.
    EzTwist {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        eta: usize,
        #[arg(long)]
        ext: usize,
        #[arg(long, default_value_t = 200)]
        group_cap: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Index operators U_rho, u_rho, V_l and W_mu.
    Op {
        kind: OpKind,
        #[arg(long, allow_hyphen_values = true)]
        param: String,
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Whether a system is special.
    SpezCheck {
        #[arg(long)]
        system: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Psi combination at a prime element.
    Psi {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        pi: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Seeded random admissible system.
    RandomSystem {
        #[arg(long, allow_hyphen_values = true)]
        field: i64,
        #[arg(long)]
        weight: i64,
        #[arg(long)]
        index: u64,
        #[arg(long, default_value_t = 60)]
        disc_bound: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Eta quotient from a spec like 1^-4,2^10,4^-4.
    Eta {
        #[arg(long, allow_hyphen_values = true)]
        spec: String,
        #[arg(long)]
        precision: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Level-one Eisenstein series.
    Eisenstein {
        #[arg(long)]
        weight: i64,
        #[arg(long)]
        precision: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Hecke operator T_n.
    Hecke {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Coprime sieve by M, or the square-free part.
    Sieve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        modulus: Option<u64>,
        #[arg(long)]
        squarefree: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Normalized second moments on a grid.
    Moments {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',')]
        grid: Vec<u64>,
        #[arg(long, default_value_t = 1)]
        dilation: u64,
        #[command(flatten)]
        filter: IndexFilter,
        #[command(flatten)]
        common: Common,
    },
    /// Predicted moment ratio from local eigenvalues p:lambda_p[:lambda_p2].
    PredictRatio {
        #[arg(long)]
        weight: i64,
        #[arg(long)]
        level: u64,
        #[arg(long)]
        character: Option<String>,
        #[arg(long)]
        r: u64,
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
        eigen: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Count of nonzero coefficients up to X.
    CountNonvanishing {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        x: usize,
        #[command(flatten)]
        filter: IndexFilter,
        #[command(flatten)]
        common: Common,
    },
    /// Prime-by-prime descent.
    Descend {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',')]
        primes: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// T_p f - b f.
    Eliminate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        p: u64,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Dilate f(tau) to f(d tau).
    Dilate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        d: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// U_n on coefficients.
    Uop {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Full reduction pipeline on a coefficient table.
    Pipeline {
        #[arg(long, allow_hyphen_values = true)]
        field: i64,
        #[arg(long)]
        weight: i64,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "smallest-determinant")]
        policy: PolicyArg,
        #[arg(long, default_value_t = 200)]
        search_bound: u64,
        #[arg(long, default_value_t = 200)]
        group_cap: u64,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "exact")]
        backend: BackendArg,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[command(flatten)]
        common: Common,
    },
    /// Positivity check for the sieve lower-bound constant.
    LowerBound {
        #[arg(long, default_value_t = 1)]
        level: u64,
        #[arg(long, default_value_t = 87)]
        cutoff: u64,
        #[arg(long, default_value_t = 1_000_000)]
        truncation: u64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    SmallestDeterminant,
    SmallestIndex,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Exact,
    FloatReport,
}

enum Fail {
    Input(String),
    NotFound(String),
}

type Res = Result<(), Fail>;

fn bad(e: impl ToString) -> Fail {
    Fail::Input(e.to_string())
}

fn elem(s: &str) -> Result<RingElement, Fail> {
    s.parse::<RingElement>().map_err(|e| bad(format!("{s}: {e}")))
}

fn field(d: i64) -> Result<QuadField, Fail> {
    QuadField::new(d).map_err(bad)
}

fn load_system(p: &Path) -> Result<JacobiCoefficientSystem, Fail> {
    let text = std::fs::read_to_string(p).map_err(|e| bad(format!("{}: {e}", p.display())))?;
    JacobiCoefficientSystem::from_json(&text).map_err(bad)
}

fn load_qexp(p: &Path) -> Result<QExpansion, Fail> {
    read_qexp(p).map_err(bad)
}

fn emit_system(sys: &JacobiCoefficientSystem, out: &Option<PathBuf>) -> Res {
    let text = sys.to_json();
    match out {
        Some(p) => std::fs::write(p, text + "\n").map_err(bad),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn emit_qexp(f: &QExpansion, out: &Option<PathBuf>) -> Res {
    match out {
        Some(p) => write_qexp(f, p).map_err(bad),
        None => {
            eprintln!("{}", serde_json::to_string(&qexp_meta(f)).expect("meta serializes"));
            print!("{}", qexp_to_csv(f));
            Ok(())
        }
    }
}

fn print_json(v: serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(&v).expect("json"));
}

fn dry(common: Common, what: &str) -> bool {
    if common.dry_run {
        println!("ok: {what}");
    }
    common.dry_run
}

fn constraints(f: &IndexFilter) -> Result<Constraints, Fail> {
    let progression = match &f.progression {
        None => None,
        Some(s) => {
            let (q, a) = s.split_once(':').ok_or_else(|| bad(format!("progression {s}: expected q:a")))?;
            let q: u64 = q.trim().parse().map_err(bad)?;
            let a: u64 = a.trim().parse().map_err(bad)?;
            if q == 0 {
                return Err(bad("progression modulus must be positive"));
            }
            Some((q, a))
        }
    };
    if f.coprime == Some(0) {
        return Err(bad("coprime modulus must be positive"));
    }
    Ok(Constraints {
        progression,
        coprime_to: f.coprime,
        squarefree: f.squarefree,
    })
}

fn cyc(s: &str) -> Result<CyclotomicNumber, Fail> {
    s.parse::<CyclotomicNumber>().map_err(|e| bad(format!("{s}: {e}")))
}

fn table_for(path: &Path, field_arg: Option<i64>, weight: i64) -> Result<CoefficientTable, Fail> {
    let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    let sniffed = sniff_table_field(&text).map_err(bad)?;
    let f = match (field_arg, sniffed) {
        (Some(d), Some(s)) if s.disc() != d => {
            return Err(bad(format!("table is over D={} but --field is {d}", s.disc())))
        }
        (Some(d), _) => field(d)?,
        (None, Some(s)) => s,
        (None, None) => return Err(bad("empty table needs --field")),
    };
    CoefficientTable::from_jsonl(&text, f, weight).map_err(bad)
}

fn run(verb: Verb) -> Res {
    match verb {
        Verb::Norm { elem: e, common } => {
            let x = elem(&e)?;
            if dry(common, "element parses") {
                return Ok(());
            }
            println!("{}", x.norm());
        }
        Verb::Residues { modulus, common } => {
            let rho = elem(&modulus)?;
            if rho.is_zero() {
                return Err(bad("modulus must be nonzero"));
            }
            if dry(common, "modulus parses") {
                return Ok(());
            }
            for r in residues_mod(rho).map_err(bad)? {
                println!("{r}");
            }
        }
        Verb::Split { field: d, p, common } => {
            let f = field(d)?;
            if dry(common, "field and prime parse") {
                return Ok(());
            }
            let s = split_rational_prime(p, f).map_err(bad)?;
            print_json(json!({
                "p": p,
                "kind": s.kind,
                "pi": s.pi.map(|x| x.to_string()),
            }));
        }
        Verb::Moebius { elem: e, common } => {
            let x = elem(&e)?;
            if x.is_zero() {
                return Err(bad("zero has no factorization"));
            }
            if dry(common, "element parses") {
                return Ok(());
            }
            let fac: Vec<_> = factor_element(x)
                .map_err(bad)?
                .iter()
                .map(|pf| json!({"prime": pf.prime.to_string(), "p": pf.p, "exponent": pf.exponent}))
                .collect();
            print_json(json!({"mu": moebius(x).map_err(bad)?, "factors": fac}));
        }
        Verb::Chi { field: d, n, common } => {
            let f = field(d)?;
            if dry(common, "field parses") {
                return Ok(());
            }
            println!("{}", chi_d(n, f));
        }
        Verb::Expsum { x, s, common } => {
            let (x, s) = (elem(&x)?, elem(&s)?);
            if x.field() != s.field() {
                return Err(bad("x and s lie in different fields"));
            }
            if dry(common, "elements parse") {
                return Ok(());
            }
            println!("{}", exponential_sum(x, s).map_err(bad)?);
        }
        Verb::FjExtract { table, index, weight, field: d, out, common } => {
            let t = table_for(&table, d, weight)?;
            if index == 0 {
                return Err(bad("index must be positive"));
            }
            if dry(common, "table parses") {
                return Ok(());
            }
            let sys = fj_extract(&t, index).map_err(bad)?;
            emit_system(&sys, &out)?;
        }
        Verb::Theta { system, common } => {
            let sys = load_system(&system)?;
            if dry(common, "system parses") {
                return Ok(());
            }
            let comps: Vec<_> = theta_components(&sys)
                .iter()
                .map(|c| {
                    let series: BTreeMap<String, String> =
                        c.series.iter().map(|(d, v)| (d.to_string(), v.to_string())).collect();
                    json!({"s": c.s.to_string(), "series": series})
                })
                .collect();
            print_json(json!(comps));
        }
        Verb::Ez { system, out, common } => {
            let sys = load_system(&system)?;
            if dry(common, "system parses") {
                return Ok(());
            }
            emit_qexp(&ez_map(&sys), &out)?;
        }
        Verb::EzTwist { system, eta, ext, group_cap, out, common } => {
            let sys = load_system(&system)?;
            let grp = unit_group_capped(sys.field(), sys.index(), group_cap).map_err(bad)?;
            let g = build_g(&grp);
            let etas = g_characters(&g, sys.weight());
            let e = etas
                .get(eta)
                .ok_or_else(|| bad(format!("eta {eta} out of range: {} characters", etas.len())))?;
            let exts = extensions_of(e);
            let x = exts
                .get(ext)
                .ok_or_else(|| bad(format!("ext {ext} out of range: {} extensions", exts.len())))?;
            if dry(common, "system and character indices are valid") {
                return Ok(());
            }
            emit_qexp(&twisted_ez_map(&sys, x).map_err(bad)?, &out)?;
        }
        Verb::Op { kind, param, system, out, common } => {
            let sys = load_system(&system)?;
            let with_field = |s: &str| -> Result<RingElement, Fail> {
                if s.contains('@') {
                    elem(s)
                } else {
                    let a: i64 = s.parse().map_err(|_| bad(format!("bad parameter {s}")))?;
                    Ok(sys.field().int(a))
                }
            };
            enum P {
                Elem(RingElement),
                Int(u64),
            }
            let p = match kind {
                OpKind::V => P::Int(param.parse().map_err(|_| bad(format!("bad parameter {param}")))?),
                _ => P::Elem(with_field(&param)?),
            };
            if dry(common, "system and parameter parse") {
                return Ok(());
            }
            let r = match (kind, p) {
                (OpKind::BigU, P::Elem(x)) => apply_U_rho(&sys, x),
                (OpKind::SmallU, P::Elem(x)) => apply_u_rho(&sys, x),
                (OpKind::W, P::Elem(x)) => w_mu(&sys, x),
                (OpKind::V, P::Int(l)) => apply_V_l(&sys, l),
                _ => unreachable!("parameter kind follows the operator"),
            };
            emit_system(&r.map_err(bad)?, &out)?;
        }
        Verb::SpezCheck { system, common } => {
            let sys = load_system(&system)?;
            if dry(common, "system parses") {
                return Ok(());
            }
            println!("{}", is_spez(&sys));
        }
        Verb::Psi { system, pi, out, common } => {
            let sys = load_system(&system)?;
            let pi = elem(&pi)?;
            if dry(common, "system and prime parse") {
                return Ok(());
            }
            emit_system(&psi_combination(&sys, pi).map_err(bad)?, &out)?;
        }
        Verb::RandomSystem { field: d, weight, index, disc_bound, seed, out, common } => {
            let f = field(d)?;
            if index == 0 || disc_bound == 0 {
                return Err(bad("index and discriminant bound must be positive"));
            }
            if dry(common, "parameters are valid") {
                return Ok(());
            }
            emit_system(&random_admissible(f, weight, index, disc_bound, seed).map_err(bad)?, &out)?;
        }
        Verb::Eta { spec, precision, out, common } => {
            let s = parse_eta_spec(&spec).map_err(bad)?;
            // weight, level, character and shift checks all run at precision 0
            eta_quotient(&s, 0).map_err(bad)?;
            if dry(common, "spec is valid") {
                return Ok(());
            }
            emit_qexp(&eta_quotient(&s, precision).map_err(bad)?, &out)?;
        }
        Verb::Eisenstein { weight, precision, out, common } => {
            if weight < 4 || weight % 2 != 0 {
                return Err(bad("weight must be even and at least 4"));
            }
            if dry(common, "weight is valid") {
                return Ok(());
            }
            emit_qexp(&eisenstein(weight, precision).map_err(bad)?, &out)?;
        }
        Verb::Hecke { input, n, out, common } => {
            let f = load_qexp(&input)?;
            if n == 0 {
                return Err(bad("n must be positive"));
            }
            if dry(common, "input parses") {
                return Ok(());
            }
            emit_qexp(&hecke_t(&f, n).map_err(bad)?, &out)?;
        }
        Verb::Sieve { input, modulus, squarefree, out, common } => {
            let f = load_qexp(&input)?;
            if modulus.is_none() && !squarefree {
                return Err(bad("give --modulus or --squarefree"));
            }
            if dry(common, "input parses") {
                return Ok(());
            }
            let mut g = match modulus {
                Some(m) => coprime_sieve(&f, m).map_err(bad)?,
                None => f,
            };
            if squarefree {
                g = squarefree_select(&g);
            }
            emit_qexp(&g, &out)?;
        }
        Verb::Moments { input, grid, dilation, filter, common } => {
            let f = load_qexp(&input)?;
            let c = constraints(&filter)?;
            if grid.is_empty() || grid.contains(&0) {
                return Err(bad("grid must be nonempty and positive"));
            }
            if dry(common, "input and grid parse") {
                return Ok(());
            }
            let r = second_moment(&f, &grid, &c, dilation).map_err(bad)?;
            print_json(serde_json::to_value(&r).expect("report serializes"));
        }
        Verb::PredictRatio { weight, level, character, r, eigen, common } => {
            let chi = match character {
                Some(id) => DirichletCharacter::from_id(&id).map_err(bad)?,
                None => DirichletCharacter::principal(level),
            };
            let mut map = BTreeMap::new();
            for item in &eigen {
                let parts: Vec<&str> = item.split(':').collect();
                if parts.len() < 2 || parts.len() > 3 {
                    return Err(bad(format!("eigen entry {item}: expected p:lambda[:lambda2]")));
                }
                let p: u64 = parts[0].parse().map_err(|_| bad(format!("bad prime in {item}")))?;
                let q = |s: &str| parse_rational(s).ok_or_else(|| bad(format!("bad rational {s}")));
                let lambda_p = q(parts[1])?;
                let lambda_p2 = parts.get(2).map(|s| q(s)).transpose()?;
                map.insert(p, LocalEigen { lambda_p, lambda_p2 });
            }
            if dry(common, "eigenvalues parse") {
                return Ok(());
            }
            let pr = predicted_moment_ratio(weight, level, &chi, &map, r).map_err(bad)?;
            print_json(json!({
                "r": pr.r,
                "ratio": pr.ratio.to_string(),
                "ratio_f64": pr.ratio_f64(),
                "factors": pr.factors.iter().map(|(p, e, v)| json!([p, e, v.to_string()])).collect::<Vec<_>>(),
                "bound": pr.bound,
                "within_bound": pr.within_bound,
            }));
        }
        Verb::CountNonvanishing { input, x, filter, common } => {
            let f = load_qexp(&input)?;
            let c = constraints(&filter)?;
            f.require_precision(x).map_err(bad)?;
            if dry(common, "input parses") {
                return Ok(());
            }
            println!("{}", nonvanish_count(&f, x, &c).map_err(bad)?);
        }
        Verb::Descend { input, primes, out, common } => {
            let f = load_qexp(&input)?;
            if dry(common, "input parses") {
                return Ok(());
            }
            let steps = descend_sequence(&f, &primes).map_err(bad)?;
            let rows: Vec<_> = steps
                .iter()
                .map(|s| {
                    json!({
                        "prime": s.prime,
                        "branch": s.branch,
                        "level": s.form.level(),
                        "character": s.form.character().id(),
                        "first_squarefree_n": s.form.first_squarefree_nonzero(),
                    })
                })
                .collect();
            print_json(json!(rows));
            if out.is_some() {
                emit_qexp(&steps.last().expect("start step").form, &out)?;
            }
        }
        Verb::Eliminate { input, p, b, out, common } => {
            let f = load_qexp(&input)?;
            let b = cyc(&b)?;
            if dry(common, "input parses") {
                return Ok(());
            }
            let e = eliminate_component(&f, p, &b).map_err(bad)?;
            emit_qexp(&e.form, &out)?;
        }
        Verb::Dilate { input, d, out, common } => {
            let f = load_qexp(&input)?;
            if dry(common, "input parses") {
                return Ok(());
            }
            emit_qexp(&b_op(&f, d).map_err(bad)?, &out)?;
        }
        Verb::Uop { input, n, out, common } => {
            let f = load_qexp(&input)?;
            if dry(common, "input parses") {
                return Ok(());
            }
            emit_qexp(&u_op(&f, n).map_err(bad)?, &out)?;
        }
        Verb::Pipeline {
            field: d,
            weight,
            input,
            policy,
            search_bound,
            group_cap,
            out_dir,
            backend,
            format,
            common,
        } => {
            let mut cfg = PipelineConfig::new(d, weight, input);
            cfg.policy = match policy {
                PolicyArg::SmallestDeterminant => IndexPolicy::SmallestDeterminant,
                PolicyArg::SmallestIndex => IndexPolicy::SmallestIndex,
            };
            cfg.search_bound = search_bound;
            cfg.group_cap = group_cap;
            cfg.output_dir = out_dir;
            cfg.backend = match backend {
                BackendArg::Exact => Backend::Exact,
                BackendArg::FloatReport => Backend::FloatReport,
            };
            cfg.validate().map_err(bad)?;
            if dry(common, "config is valid") {
                return Ok(());
            }
            let report = run_reduction_pipeline(&cfg).map_err(bad)?;
            let fmt = match format {
                Format::Json => ReportFormat::Json,
                Format::Csv => ReportFormat::Csv,
            };
            print!("{}", report_to_string(&report, fmt));
            if report.not_found() {
                let msg = report
                    .search
                    .as_ref()
                    .and_then(|s| s.message.clone())
                    .unwrap_or_else(|| "no prime representation found".into());
                return Err(Fail::NotFound(msg));
            }
        }
        Verb::LowerBound { level, cutoff, truncation, common } => {
            if level == 0 || cutoff < 2 || truncation < cutoff {
                return Err(bad("need level >= 1, cutoff >= 2 and truncation >= cutoff"));
            }
            if dry(common, "parameters are valid") {
                return Ok(());
            }
            let r = lower_bound_constant(level, cutoff, truncation);
            print_json(serde_json::to_value(&r).expect("report serializes"));
        }
    }
    Ok(())
}

fn configure_threads() -> Result<(), Fail> {
    let Ok(v) = std::env::var("HJF_NUM_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| bad(format!("HJF_NUM_THREADS={v} is not a count")))?;
    if n == 0 {
        return Err(bad("HJF_NUM_THREADS must be positive"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(bad)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|_| run(cli.verb)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Fail::NotFound(m)) => {
            eprintln!("not found: {m}");
            ExitCode::from(3)
        }
    }
}
