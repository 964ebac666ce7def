//! Acceptance suites.
//!
//! Each suite checks one property of the toolkit end to end and returns a
//! [`CriterionReport`] plus the artifacts it produced. Artifacts contain no
//! timings, so two runs with the same seed are byte-identical.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::blowup::{resolve_a, resolve_d, singular_in_domain, ResolutionAtlas};
use crate::error::{usage, Result};
use crate::fourier::{coeff, decay_check, parseval, CoeffSeries, Group, InvariantFn};
use crate::io::{to_json_string, SCHEMA_VERSION};
use crate::lift::{
    build_h, check_poisson_morphism, convergence, lift_to_chart, make_phi, pullback_identities,
    recursion_identities, xy_recursion, ConvergenceOptions, LeafLift, Match,
};
use crate::poisson::{casimir_check, jacobi_check, pichereau_from, XYZ};
use crate::poly::{rat, Poly, RatFn};

/// Suite names accepted by [`run_suite`], in criterion order.
pub const SUITES: [&str; 10] = [
    "jacobi",
    "a-chain",
    "d-chain",
    "generators",
    "recursion",
    "lift",
    "fourier",
    "reconstruction-a",
    "reconstruction-gprime",
    "determinism",
];

/// Flat test family for the `A_4` reconstruction.
pub const FAMILY_A: [&str; 4] = [
    "flat(cos(theta))",
    "flat(exp(cos(theta)))",
    "flat(1/(2 - cos(theta)))",
    "q^2",
];

/// Flat test family for the `D_5⁺` reconstruction.
pub const FAMILY_GPRIME: [&str; 4] = [
    "flat(exp(cos(theta)))",
    "flat(1/(2 - cos(theta)))",
    "flat(q*sin(theta))",
    "q^2",
];

/// Truncation orders of the reconstruction suites.
pub const RECONSTRUCTION_NS: [usize; 4] = [5, 10, 20, 40];

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub details: Value,
}

/// Outcome of [`run_suite`]: one report per criterion and the artifacts
/// keyed by file name.
#[derive(Clone, Debug)]
pub struct SuiteRun {
    pub suite: String,
    pub seed: u64,
    pub criteria: Vec<CriterionReport>,
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct Summary<'a> {
    schema_version: u32,
    suite: &'a str,
    seed: u64,
    passed: bool,
    criteria: &'a [CriterionReport],
}

impl SuiteRun {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn summary_json(&self) -> Result<String> {
        to_json_string(&Summary {
            schema_version: SCHEMA_VERSION,
            suite: &self.suite,
            seed: self.seed,
            passed: self.passed(),
            criteria: &self.criteria,
        })
    }

    /// Writes every artifact and `verify_<suite>.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, body) in &self.artifacts {
            std::fs::write(dir.join(name), body)?;
        }
        std::fs::write(dir.join(format!("verify_{}.json", self.suite)), self.summary_json()?)?;
        Ok(())
    }
}

fn poly(s: &str) -> Poly {
    Poly::parse(s, &XYZ).expect("valid polynomial literal")
}

fn report(id: u32, name: &str, passed: bool, details: Value) -> CriterionReport {
    CriterionReport {
        id,
        name: name.to_string(),
        passed,
        details,
    }
}

fn pichereau() -> Result<CriterionReport> {
    let mut rows = Vec::new();
    let mut ok = true;
    let a = (2..=4).map(|k| format!("x^2 + y^2 - z^{}", 2 * k));
    let d = (2..=3).map(|k| format!("z*x^2 + y^2 - z^{}", 2 * k + 1));
    for f in a.chain(d) {
        let s = pichereau_from(&poly(&f))?;
        let j = jacobi_check(&s);
        let c = casimir_check(&s);
        ok &= j.is_zero && c.is_zero;
        rows.push(json!({
            "surface": f,
            "bracket": [s.b_xy.to_string(), s.b_yz.to_string(), s.b_zx.to_string()],
            "jacobi": j,
            "casimir": c,
        }));
    }
    Ok(report(1, "Jacobi and Casimir residuals vanish", ok, json!({ "surfaces": rows })))
}

fn a_chain() -> Result<CriterionReport> {
    let mut ok = true;
    let mut rows = Vec::new();
    for k in 2..=4u32 {
        let atlas = resolve_a(k)?;
        let chain = atlas.z_chain();
        let mut steps = Vec::new();
        for (j, c) in chain.iter().enumerate() {
            let e = 2 * (k as i64 - j as i64);
            let expected = if e == 0 {
                Poly::zero(&XYZ)
            } else {
                poly(&format!("{}*z^{}", -e, e - 1))
            };
            let good = c.surface.b_xy == expected;
            ok &= good;
            steps.push(json!({
                "chart": c.id,
                "blowups": j,
                "strict_transform": c.strict().to_string(),
                "bracket_xy": c.surface.b_xy.to_string(),
                "expected": expected.to_string(),
                "matches": good,
            }));
        }
        let last = chain.last().expect("non-empty chain");
        let final_ok = chain.len() == k as usize + 1 && *last.strict() == poly("x^2 + y^2 - 1");
        ok &= final_ok;
        rows.push(json!({
            "k": k,
            "blowups": atlas.blowup_count(),
            "chain": steps,
            "final_chart": last.id,
            "final_strict_transform": last.strict().to_string(),
            "final_matches": final_ok,
        }));
    }
    Ok(report(2, "A-chain bracket law", ok, json!({ "atlases": rows })))
}

fn d_chain() -> Result<CriterionReport> {
    let atlas = resolve_d(2)?;
    let last = atlas.z_chain().last().expect("non-empty chain").id.clone();
    let chart = atlas.chart(&last)?;
    let strict_ok = *chart.strict() == poly("z*x^2 + y^2 - z");
    let sing = singular_in_domain(&atlas, &last)?;
    let sing_s: Vec<String> = sing.iter().map(|p| format!("({}, {}, {})", p[0], p[1], p[2])).collect();
    let mut want = vec!["(-1, 0, 0)".to_string(), "(1, 0, 0)".to_string()];
    let mut got = sing_s.clone();
    got.sort();
    want.sort();
    let sing_ok = got == want;
    let expected = [poly("x^2 - 1"), poly("2*x*z"), poly("2*y")];
    let actual = [&chart.surface.b_xy, &chart.surface.b_yz, &chart.surface.b_zx];
    let bracket_ok = actual.iter().zip(&expected).all(|(a, b)| *a == b);
    let mut leaves = Vec::new();
    let mut smooth_ok = true;
    for id in &atlas.leaves {
        let pts = singular_in_domain(&atlas, id)?;
        smooth_ok &= pts.is_empty();
        leaves.push(json!({
            "chart": id,
            "strict_transform": atlas.chart(id)?.strict().to_string(),
            "singular_points": pts.len(),
        }));
    }
    let ok = strict_ok && sing_ok && bracket_ok && smooth_ok;
    Ok(report(
        3,
        "D-chain structure",
        ok,
        json!({
            "blowups": atlas.blowup_count(),
            "chart": last,
            "strict_transform": chart.strict().to_string(),
            "singular_points": sing_s,
            "bracket": actual.map(|p| p.to_string()),
            "expected_bracket": expected.map(|p| p.to_string()),
            "leaves": leaves,
            "checks": {
                "strict_transform": strict_ok,
                "singular_set": sing_ok,
                "bracket": bracket_ok,
                "leaves_smooth": smooth_ok,
            },
        }),
    ))
}

fn generators() -> Result<CriterionReport> {
    let cases = [
        (Group::GPrime, rat(1, 2), Match::Exact),
        (Group::G, rat(1, 1), Match::Exact),
        (Group::G, rat(1, 2), Match::Proportional { factor: "1/2".into() }),
    ];
    let mut ok = true;
    let mut rows = Vec::new();
    for (g, scale, want) in cases {
        let m = make_phi(g, 2)?;
        let r = check_poisson_morphism(&m, Some(scale));
        let good = r.brackets.iter().all(|b| b.outcome == want) && r.overall == want;
        ok &= good;
        rows.push(json!({ "report": r, "expected": want, "matches": good }));
    }
    Ok(report(4, "Generator brackets", ok, json!({ "cases": rows })))
}

fn recursion() -> Result<CriterionReport> {
    let mut ok = true;
    let mut rows = Vec::new();
    for k in 2..=3u32 {
        let atlas = resolve_a(k)?;
        let m = make_phi(Group::G, k)?;
        let ids = recursion_identities(&atlas, &m, 10)?;
        let rel = ids.iter().all(|r| r.relation && r.lifted);
        let pull = pullback_identities(&m, &xy_recursion(&m, 10)?)?;
        let pull_ok = pull.iter().all(|b| *b);
        ok &= rel && pull_ok && ids.len() == 10 * atlas.leaves.len();
        rows.push(json!({
            "k": k,
            "leaves": atlas.leaves,
            "checked": ids.len(),
            "relation_holds": rel,
            "failures": ids.iter().filter(|r| !(r.relation && r.lifted)).collect::<Vec<_>>(),
            "pullback": pull,
        }));
    }
    Ok(report(5, "Recursion identities", ok, json!({ "atlases": rows })))
}

fn kind(l: &LeafLift) -> &'static str {
    match l {
        LeafLift::Polynomial { .. } => "polynomial",
        LeafLift::Smooth { .. } => "smooth",
        LeafLift::NotLiftable { .. } => "not_liftable",
    }
}

fn lift_rows(atlas: &ResolutionAtlas, f: &RatFn) -> Result<(Vec<Value>, Vec<(String, LeafLift)>)> {
    let mut rows = Vec::new();
    let mut lifts = Vec::new();
    for id in &atlas.leaves {
        let l = lift_to_chart(atlas, id, f)?;
        let mut row = json!({ "leaf": id, "kind": kind(&l), "value": l.value().to_string() });
        if let LeafLift::NotLiftable { reason, .. } = &l {
            row["reason"] = json!(reason);
        }
        rows.push(row);
        lifts.push((id.clone(), l));
    }
    Ok((rows, lifts))
}

fn lift() -> Result<CriterionReport> {
    let mut ok = true;
    let mut rows = Vec::new();
    for k in 2..=4u32 {
        let atlas = resolve_a(k)?;
        let last = atlas.z_chain().last().expect("non-empty chain").id.clone();
        let zk = poly(&format!("z^{k}"));
        let mut funcs = Vec::new();
        for (name, num) in [("x", "x"), ("y", "y")] {
            let f = RatFn::new(poly(num), zk.clone())?;
            let (r, lifts) = lift_rows(&atlas, &f)?;
            let all_poly = lifts.iter().all(|(_, l)| l.is_polynomial());
            let final_ok = lifts
                .iter()
                .any(|(id, l)| *id == last && *l == LeafLift::Polynomial { value: poly(num) });
            ok &= all_poly && final_ok;
            funcs.push(json!({
                "function": format!("{name}/z^{k}"),
                "polynomial_on_every_leaf": all_poly,
                "final_leaf_is_coordinate": final_ok,
                "leaves": r,
            }));
        }
        let over = RatFn::new(poly("x"), poly(&format!("z^{}", k + 1)))?;
        let l = lift_to_chart(&atlas, &last, &over)?;
        let rejected = !l.is_liftable();
        ok &= rejected;
        rows.push(json!({
            "k": k,
            "final_leaf": last,
            "functions": funcs,
            "over_division": { "function": format!("x/z^{}", k + 1), "kind": kind(&l), "rejected": rejected },
        }));
    }
    Ok(report(6, "Polynomial lifts of x/z^k, y/z^k", ok, json!({ "atlases": rows })))
}

fn fourier(artifacts: &mut BTreeMap<String, String>) -> Result<CriterionReport> {
    let f = InvariantFn::from_text("flat(cos(theta))", Group::G)?;
    let qs: Vec<f64> = (1..=10).map(|i| 0.2 * i as f64).collect();
    let mut alpha_err: f64 = 0.0;
    let mut parseval_err: f64 = 0.0;
    let mut rows = Vec::new();
    for &q in &qs {
        let (a1, _) = coeff(&f, 1, q)?;
        let err = (a1 - (-1.0 / (q * q)).exp()).abs();
        let p = parseval(&f, 20, q)?;
        alpha_err = alpha_err.max(err);
        parseval_err = parseval_err.max(p.relative_error);
        rows.push(json!({ "q": q, "alpha_1": a1, "error": err, "parseval_relative_error": p.relative_error }));
    }
    let decay = [decay_check(&f, 2, 0, 2.0, 20)?, decay_check(&f, 2, 1, 2.0, 20)?];
    let decay_ok = decay.iter().all(|d| d.passed && d.ratio <= 1.0);
    let ok = alpha_err <= 1e-9 && parseval_err <= 1e-6 && decay_ok;
    let series = CoeffSeries::compute(&f, 5, &qs, 0)?;
    artifacts.insert("fourier_flat_cos.csv".into(), series.to_csv()?);
    Ok(report(
        7,
        "Fourier engine",
        ok,
        json!({
            "function": f.label(),
            "samples": rows,
            "alpha_1_max_error": alpha_err,
            "alpha_1_tolerance": 1e-9,
            "parseval_max_relative_error": parseval_err,
            "parseval_tolerance": 1e-6,
            "decay": decay,
        }),
    ))
}

fn reconstruction(
    id: u32,
    group: Group,
    family: &[&str],
    seed: u64,
    artifacts: &mut BTreeMap<String, String>,
) -> Result<CriterionReport> {
    let (atlas, tag) = match group {
        Group::G => (resolve_a(2)?, "a"),
        Group::GPrime => (resolve_d(2)?, "gprime"),
    };
    let m = make_phi(group, 2)?;
    let opts = ConvergenceOptions {
        ns: RECONSTRUCTION_NS.to_vec(),
        ..ConvergenceOptions::default()
    };
    let mut ok = true;
    let mut rows = Vec::new();
    for (i, expr) in family.iter().enumerate() {
        let f = InvariantFn::from_text(expr, group)?;
        let ls = build_h(&atlas, &m, &f, *RECONSTRUCTION_NS.iter().max().expect("non-empty"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let r = convergence(&ls, &opts, &mut rng)?;
        ok &= r.passed;
        artifacts.insert(format!("reconstruction_{tag}_{i}.csv"), r.to_csv()?);
        artifacts.insert(format!("reconstruction_{tag}_{i}.json"), to_json_string(&r)?);
        rows.push(json!({
            "function": expr,
            "passed": r.passed,
            "samples": r.samples,
            "rows": r.rows,
            "bound_monotone": r.bound_monotone,
            "overlap_pairs": r.overlap_pairs,
            "overlap_max": r.overlap_max,
        }));
    }
    let name = match group {
        Group::G => "Reconstruction on the A_4 atlas",
        Group::GPrime => "Reconstruction on the D_5+ atlas",
    };
    Ok(report(id, name, ok, json!({ "family": atlas.family.to_string(), "k": 2, "functions": rows })))
}

fn criteria(ids: &[u32], seed: u64, artifacts: &mut BTreeMap<String, String>) -> Result<Vec<CriterionReport>> {
    let mut out = Vec::new();
    for &id in ids {
        let r = match id {
            1 => pichereau()?,
            2 => a_chain()?,
            3 => d_chain()?,
            4 => generators()?,
            5 => recursion()?,
            6 => lift()?,
            7 => fourier(artifacts)?,
            8 => reconstruction(8, Group::G, &FAMILY_A, seed, artifacts)?,
            9 => reconstruction(9, Group::GPrime, &FAMILY_GPRIME, seed, artifacts)?,
            _ => unreachable!("criterion ids are 1..=9"),
        };
        artifacts.insert(format!("criterion_{id:02}.json"), to_json_string(&r)?);
        out.push(r);
    }
    Ok(out)
}

/// Compares two artifact sets byte for byte.
pub fn determinism_report(a: &BTreeMap<String, String>, b: &BTreeMap<String, String>) -> CriterionReport {
    let differing: Vec<&String> = a
        .keys()
        .chain(b.keys())
        .filter(|k| a.get(*k) != b.get(*k))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    report(
        10,
        "Determinism",
        differing.is_empty() && !a.is_empty(),
        json!({ "artifacts": a.len(), "differing": differing }),
    )
}

/// Runs a named suite. `all` covers criteria 1 to 9; `determinism` runs
/// `all` twice and compares the artifacts.
pub fn run_suite(name: &str, seed: u64) -> Result<SuiteRun> {
    let mut artifacts = BTreeMap::new();
    let criteria = match name {
        "all" => criteria(&[1, 2, 3, 4, 5, 6, 7, 8, 9], seed, &mut artifacts)?,
        "determinism" => {
            let a = run_suite("all", seed)?;
            let b = run_suite("all", seed)?;
            vec![determinism_report(&a.artifacts, &b.artifacts)]
        }
        _ => match SUITES.iter().position(|s| *s == name) {
            Some(i) => criteria(&[i as u32 + 1], seed, &mut artifacts)?,
            None => {
                return usage(format!("unknown suite `{name}`; expected one of {}, all", SUITES.join(", ")));
            }
        },
    };
    Ok(SuiteRun {
        suite: name.to_string(),
        seed,
        criteria,
        artifacts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite() {
        assert!(matches!(run_suite("nope", 1), Err(crate::Error::Usage(_))));
    }

    #[test]
    fn exact_suites_pass() {
        for s in ["jacobi", "generators"] {
            let r = run_suite(s, 0).unwrap();
            assert!(r.passed(), "{s}: {:?}", r.criteria);
            assert_eq!(r.artifacts.len(), 1);
        }
    }

    #[test]
    fn determinism_detects_changes() {
        let mut a = BTreeMap::new();
        a.insert("x.json".to_string(), "1".to_string());
        assert!(determinism_report(&a, &a.clone()).passed);
        let mut b = a.clone();
        b.insert("x.json".to_string(), "2".to_string());
        assert!(!determinism_report(&a, &b).passed);
    }
}
