use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use duval::blowup::{resolve_a, resolve_d, Family, ResolutionAtlas};
use duval::fourier::{CoeffSeries, Group, InvariantFn};
use duval::io::{resolve_out, to_json_string, write_json, write_text, OUT_DIR_ENV, SCHEMA_VERSION};
use duval::lift::{
    build_h, convergence, make_phi, smoothness_probe, ConvergenceOptions, ConvergenceReport,
    LiftedSeries, ProbeOptions, SmoothnessReport,
};
use duval::verify::run_suite;
use duval::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "duval", version, about = "Blow-ups, Poisson brackets and Fourier lifts for real A and D surface singularities")]
struct Cli {
    /// Seed for every random sample.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for relative output paths.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Resolve A_{2k} or D_{2k+1} and write the chart atlas.
    Resolve {
        #[arg(long, value_parser = parse_family)]
        family: Family,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value = "atlas.json")]
        out: PathBuf,
    },
    /// Fourier coefficients of an invariant function on a grid of q.
    Fourier(FourierArgs),
    /// Build the lifted series on an atlas and check its convergence.
    Lift(LiftArgs),
    /// Evaluate the lifted series at a point of the singular surface.
    Eval(EvalArgs),
    /// Run an acceptance suite and write its artifacts.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

#[derive(Args, Debug)]
struct FourierArgs {
    #[arg(long)]
    group: Group,
    /// File holding the expression.
    #[arg(long)]
    expr: PathBuf,
    /// Highest frequency; defaults to the top mode of an exact expression.
    #[arg(long)]
    nmax: Option<usize>,
    #[arg(long, default_value = "coeffs.csv")]
    out: PathBuf,
    /// Also write the coefficients as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    q_min: f64,
    #[arg(long, default_value_t = 2.0)]
    q_max: f64,
    #[arg(long, default_value_t = 20)]
    q_points: usize,
}

#[derive(Args, Debug)]
#[command(args_conflicts_with_subcommands = true, subcommand_negates_reqs = true)]
struct LiftArgs {
    #[command(subcommand)]
    cmd: Option<LiftCmd>,
    #[command(flatten)]
    series: SeriesArgs,
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
    /// Convergence table; defaults to the report path with a `.csv` extension.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Truncation orders to compare; defaults to N/8, N/4, N/2, N.
    #[arg(long, value_delimiter = ',')]
    ns: Vec<usize>,
    #[arg(long, default_value_t = 40)]
    samples: usize,
    /// Width of the excluded band around the exceptional divisor.
    #[arg(long, default_value_t = 0.05)]
    band: f64,
    /// Also run the smoothness probe up to this derivative order.
    #[arg(long)]
    probe: Option<u32>,
}

#[derive(Subcommand, Debug)]
enum LiftCmd {
    /// Evaluate the lifted series at a point of one chart.
    Eval {
        #[command(flatten)]
        series: SeriesArgs,
        #[arg(long)]
        chart: String,
        /// Chart coordinates `x,y,z`.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        point: [f64; 3],
    },
}

#[derive(Args, Debug)]
struct SeriesArgs {
    #[arg(long)]
    atlas: Option<PathBuf>,
    #[arg(long)]
    expr: Option<PathBuf>,
    #[arg(long = "N")]
    n: Option<usize>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    series: SeriesArgs,
    /// Point `x,y,z` on the singular surface.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    at: [f64; 3],
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse::<Family>().map_err(|e| e.to_string())
}

fn parse_point(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected 3 coordinates, got {}", v.len()))
}

fn read_expr(path: &Path, group: Group) -> duval::Result<InvariantFn> {
    let src = std::fs::read_to_string(path)?;
    InvariantFn::from_text(src.trim_end(), group)
}

fn group_of(atlas: &ResolutionAtlas) -> Group {
    match atlas.family {
        Family::A => Group::G,
        Family::D => Group::GPrime,
    }
}

fn required<T: Clone>(v: &Option<T>, flag: &str) -> duval::Result<T> {
    v.clone().ok_or_else(|| Error::Usage(format!("missing {flag}")))
}

impl SeriesArgs {
    fn build(&self) -> duval::Result<LiftedSeries> {
        let atlas = ResolutionAtlas::from_json(&std::fs::read_to_string(required(&self.atlas, "--atlas")?)?)?;
        let group = group_of(&atlas);
        let f = read_expr(&required(&self.expr, "--expr")?, group)?;
        let m = make_phi(group, atlas.k)?;
        build_h(&atlas, &m, &f, required(&self.n, "--N")?)
    }
}

struct Ctx {
    seed: u64,
    out_dir: Option<PathBuf>,
}

impl Ctx {
    fn path(&self, p: &Path) -> PathBuf {
        resolve_out(self.out_dir.as_deref(), p)
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

fn resolve(ctx: &Ctx, family: Family, k: u32, out: &Path) -> duval::Result<()> {
    let atlas = match family {
        Family::A => resolve_a(k)?,
        Family::D => resolve_d(k)?,
    };
    let path = ctx.path(out);
    write_text(&path, &atlas.to_json()?)?;
    println!(
        "{}_{}: {} blow-ups, {} leaves -> {}",
        family,
        atlas_index(family, k),
        atlas.blowup_count(),
        atlas.leaves.len(),
        path.display()
    );
    Ok(())
}

fn atlas_index(family: Family, k: u32) -> u32 {
    match family {
        Family::A => 2 * k,
        Family::D => 2 * k + 1,
    }
}

fn fourier(ctx: &Ctx, a: &FourierArgs) -> duval::Result<()> {
    let f = read_expr(&a.expr, a.group)?;
    let n_max = match (a.nmax, f.exact()) {
        (Some(n), _) => n,
        (None, Some(t)) => t.terms().map(|(k, _)| k.n as usize).max().unwrap_or(0),
        (None, None) => return Err(Error::Usage("--nmax is required for expressions without an exact form".into())),
    };
    if a.q_points < 1 || !(a.q_min > 0.0 && a.q_max >= a.q_min) {
        return Err(Error::Usage("need 0 < q-min <= q-max and at least one q point".into()));
    }
    let grid = if a.q_points == 1 {
        vec![a.q_min]
    } else {
        CoeffSeries::linspace(a.q_min, a.q_max, a.q_points)
    };
    let series = CoeffSeries::compute(&f, n_max, &grid, 0)?;
    let path = ctx.path(&a.out);
    write_text(&path, &series.to_csv()?)?;
    if let Some(j) = &a.json {
        write_text(&ctx.path(j), &series.to_json()?)?;
    }
    println!("{}: n <= {n_max} on {} q values -> {}", f.label(), grid.len(), path.display());
    Ok(())
}

#[derive(Serialize)]
struct LeafEntry {
    id: String,
    lifts: Vec<(String, String)>,
    exact_lifts: Vec<(String, String)>,
}

#[derive(Serialize)]
struct LiftReport {
    schema_version: u32,
    family: String,
    k: u32,
    group: Group,
    function: String,
    n: usize,
    seed: u64,
    leaves: Vec<LeafEntry>,
    convergence: ConvergenceReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    probe: Option<SmoothnessReport>,
}

fn default_ns(n: usize) -> Vec<usize> {
    let mut ns: Vec<usize> = [n / 8, n / 4, n / 2, n].into_iter().filter(|m| *m >= 1).collect();
    ns.dedup();
    ns
}

fn lift(ctx: &Ctx, a: &LiftArgs) -> duval::Result<()> {
    let ls = a.series.build()?;
    let ns = if a.ns.is_empty() { default_ns(ls.n_max) } else { a.ns.clone() };
    if ns.iter().any(|n| *n == 0 || *n > ls.n_max) {
        return Err(Error::Usage(format!("--ns entries must lie in 1..={}", ls.n_max)));
    }
    let opts = ConvergenceOptions {
        ns,
        samples_per_leaf: a.samples,
        band: a.band,
        ..ConvergenceOptions::default()
    };
    let mut rng = ctx.rng();
    let conv = convergence(&ls, &opts, &mut rng)?;
    let probe = match a.probe {
        Some(d) => Some(smoothness_probe(&ls, d, &ProbeOptions::default(), &mut rng)?),
        None => None,
    };
    let leaves = ls
        .leaves
        .iter()
        .map(|l| LeafEntry {
            id: l.id.clone(),
            lifts: {
                let mut v: Vec<(String, String)> = Vec::new();
                for (n, f) in &l.lifts {
                    if !v.iter().any(|(m, _)| m == n) {
                        v.push((n.clone(), f.value().to_string()));
                    }
                }
                v
            },
            exact_lifts: l.exact_lifts.clone(),
        })
        .collect();
    let out = ctx.path(&a.out);
    let csv = ctx.path(&a.csv.clone().unwrap_or_else(|| a.out.with_extension("csv")));
    write_text(&csv, &conv.to_csv()?)?;
    let passed = conv.passed && probe.as_ref().map_or(true, |p| p.passed);
    let report = LiftReport {
        schema_version: SCHEMA_VERSION,
        family: ls.atlas.family.to_string(),
        k: ls.atlas.k,
        group: ls.map.group,
        function: ls.f.label().to_string(),
        n: ls.n_max,
        seed: ctx.seed,
        leaves,
        convergence: conv,
        probe,
    };
    write_json(&out, &report)?;
    for row in &report.convergence.rows {
        println!("N = {:>3}  sup error {:.3e}  bound {:.3e}", row.n, row.sup_error, row.bound);
    }
    println!("{} -> {}, {}", if passed { "passed" } else { "FAILED" }, out.display(), csv.display());
    if passed {
        Ok(())
    } else {
        Err(Error::Structural("convergence check failed; see the report".into()))
    }
}

fn emit(v: serde_json::Value) -> duval::Result<()> {
    print!("{}", to_json_string(&v)?);
    Ok(())
}

fn lift_eval(series: &SeriesArgs, chart: &str, pt: &[f64; 3]) -> duval::Result<()> {
    let ls = series.build()?;
    let leaf = ls.leaf(chart)?;
    let z = ls.z_value(leaf, pt);
    let residual = ls.atlas.chart(chart)?.strict().eval_f64(pt);
    let h = ls.eval(chart, pt, ls.n_max)?;
    let reference = ls.reference(chart, pt)?;
    emit(
        json!({
            "schema_version": SCHEMA_VERSION,
            "chart": chart,
            "point": pt,
            "strict_transform_residual": residual,
            "Z": z,
            "N": ls.n_max,
            "H": h,
            "reference": reference,
        }),
    )
}

fn eval(a: &EvalArgs) -> duval::Result<()> {
    let ls = a.series.build()?;
    let residual = ls.atlas.root().strict().eval_f64(&a.at);
    if residual.abs() > 1e-9 {
        return Err(Error::Domain(format!("point is off the surface (residual {residual:e})")));
    }
    let mut charts = Vec::new();
    for id in &ls.atlas.leaves {
        if let Some(p) = ls.atlas.from_ambient(id, &a.at)? {
            if ls.atlas.in_domain(id, &p, 0.0)? {
                charts.push(json!({ "chart": id, "point": p, "H": ls.eval(id, &p, ls.n_max)? }));
            }
        }
    }
    if charts.is_empty() {
        return Err(Error::Domain("no chart covers this point; it lies on the exceptional locus".into()));
    }
    let reference = ls.map.preimage(&a.at).map(|(p, q)| ls.f.eval(p, q));
    emit(
        json!({
            "schema_version": SCHEMA_VERSION,
            "at": a.at,
            "N": ls.n_max,
            "charts": charts,
            "reference": reference,
        }),
    )
}

fn verify(ctx: &Ctx, suite: &str) -> duval::Result<bool> {
    let run = run_suite(suite, ctx.seed)?;
    let dir = duval::io::out_dir(ctx.out_dir.as_deref());
    run.write_to(&dir)?;
    for c in &run.criteria {
        println!("{} criterion {:>2}: {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.name);
    }
    println!("artifacts in {}", dir.display());
    Ok(run.passed())
}

fn error_kind(e: &Error) -> (&'static str, u8) {
    match e {
        Error::Usage(_) => ("usage", 2),
        Error::Syntax { .. } => ("syntax", 2),
        Error::Domain(_) => ("domain", 3),
        Error::Structural(_) => ("structural", 4),
        Error::Quadrature { .. } => ("quadrature", 5),
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => ("io", 1),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let ctx = Ctx {
        seed: cli.seed,
        out_dir: cli.out_dir.clone(),
    };
    let result = match &cli.cmd {
        Cmd::Resolve { family, k, out } => resolve(&ctx, *family, *k, out).map(|_| true),
        Cmd::Fourier(a) => fourier(&ctx, a).map(|_| true),
        Cmd::Lift(a) => match &a.cmd {
            Some(LiftCmd::Eval { series, chart, point }) => lift_eval(series, chart, point).map(|_| true),
            None => lift(&ctx, a).map(|_| true),
        },
        Cmd::Eval(a) => eval(a).map(|_| true),
        Cmd::Verify { suite } => verify(&ctx, suite),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            let (kind, code) = error_kind(&e);
            let mut body = json!({ "schema_version": SCHEMA_VERSION, "error": { "kind": kind, "message": e.to_string() } });
            if let Error::Syntax { line, column, .. } = &e {
                body["error"]["line"] = json!(line);
                body["error"]["column"] = json!(column);
            }
            eprint!("{}", to_json_string(&body).unwrap_or_else(|_| format!("{e}\n")));
            ExitCode::from(code)
        }
    }
}
