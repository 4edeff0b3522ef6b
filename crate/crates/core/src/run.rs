//! Subcommands shared by the binary, the examples and the acceptance run.
//! Each writes its CSV/JSON artifacts into an output directory and returns
//! a record whose checks decide the exit status.

use std::collections::BTreeSet;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::axioms::check_axioms;
use crate::config::{RunConfig, System};
use crate::cover::{cell_mates, fitted_eta, level_stats, log_count_slope, test_points};
use crate::error::{Error, Result};
use crate::fredholm::{IsometryFamily, Pair, TParams};
use crate::groupoid::{build_window, linked_pairs, Bisection, Link, ValueFn, WindowGenerators};
use crate::markov::CoveredSystem;
use crate::points::random_point;
use crate::pou::{empirical_lipschitz, PartitionOfUnity};
use crate::sample::AperiodicSample;
use crate::verify::{self, fmt_g, VerificationRecord};

/// Dispatches a generic call over the concrete backends.
macro_rules! with_system {
    ($sys:expr, $s:ident => $body:expr) => {
        match $sys {
            System::Sft($s) => $body,
            System::Torus($s) => $body,
        }
    };
}

/// Exit status of a run.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Io(_) => 2,
        // A model that cannot be built is a config problem.
        Error::Reducible
        | Error::InvalidMatrix(_)
        | Error::NotHyperbolic(_)
        | Error::InvalidOrbit(_)
        | Error::OrbitsIntersect
        | Error::DeltaTooLarge { .. } => 2,
        Error::CellExhausted(_) => 3,
        Error::NonConvergence { .. } => 4,
        _ => 5,
    }
}

/// Exit status when every error-free check ran but some failed.
pub const EXIT_FAILED_CHECKS: i32 = 1;

/// Relative slack for sampled distances against exact diameters.
const DIAM_SLACK: f64 = 1e-12;

/// Relative slack for float margins against exact Lebesgue bounds; the
/// margins go through up to `n` chart maps.
const LEB_SLACK: f64 = 1e-9;

/// Names accepted by `verify`.
pub const SUITES: &[&str] =
    &["axioms", "isometry", "quasi-invariance", "groupoid-lemmas", "rank-decay", "block-orthogonality", "convergence"];

/// Writes a record's artifacts and passes it through.
fn emit(rec: VerificationRecord, out: &Path) -> Result<VerificationRecord> {
    verify::write_record(&rec, out)?;
    Ok(rec)
}

fn write_json(out: &Path, name: &str, v: &serde_json::Value) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    std::fs::write(out.join(name), text + "\n")?;
    Ok(())
}

/// Model constants.
pub fn describe(sys: &System, out: &Path) -> Result<serde_json::Value> {
    let v = with_system!(sys, s => describe_generic(s, sys.kind()));
    write_json(out, "describe.json", &v)?;
    Ok(v)
}

fn describe_generic<S: CoveredSystem>(sys: &S, kind: &str) -> serde_json::Value {
    let c = sys.constants();
    json!({
        "backend": kind,
        "lambda": c.lambda,
        "eps_x": c.eps_x,
        "eps_x_prime": c.eps_x_prime,
        "entropy": c.entropy,
        "alphabet": sys.coding().alphabet(),
        "level1_count": sys.coding().count(1).to_string(),
        "theta": sys.level_diam(1),
    })
}

/// Per-level cover statistics for levels `0..=depth`.
pub fn covers<S: CoveredSystem>(sys: &S, depth: u32, cfg: &RunConfig, out: &Path) -> Result<VerificationRecord> {
    let c = sys.constants();
    let pts = test_points(sys, cfg.caps.test_points, cfg.seed);
    let stats: Vec<_> = (0..=depth).map(|n| level_stats(sys, n, &pts)).collect();
    let mut csv = String::from("n,count,diam,leb_lower_bound,multiplicity,diam_bound,leb_sampled,multiplicity_bound,log_count\n");
    for s in &stats {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            s.level,
            s.count,
            fmt_g(s.diam),
            fmt_g(s.leb_bound),
            s.multiplicity,
            fmt_g(s.diam_bound),
            fmt_g(s.leb_sampled),
            fmt_g(s.multiplicity_bound),
            fmt_g(s.log_count)
        ));
    }
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("covers.csv"), csv)?;

    let mut rec = VerificationRecord::new("cover_checks", json!({"depth": depth, "test_points": pts.len()}));
    for s in &stats {
        rec.row("diam", s.level as i64, s.diam, Some(s.diam_bound), true);
        rec.row("multiplicity", s.level as i64, s.multiplicity as f64, Some(s.multiplicity_bound), true);
        rec.row("leb_lower_bound", s.level as i64, s.leb_bound, None, true);
        rec.row("leb_sampled", s.level as i64, s.leb_sampled, None, true);
    }
    let diam_ok = stats.iter().filter(|s| s.level >= 1).all(|s| s.diam_ok);
    rec.check("diameter", diam_ok, "diam(R_n) <= λ^{-n+1} θ for n >= 1".into());
    let mut sampled = 0.0f64;
    let mut sampled_ok = true;
    for s in stats.iter().filter(|s| s.level >= 1) {
        let far = cell_mates(sys, s.level, 200, cfg.seed ^ s.level as u64).iter().map(|(p, q)| sys.dist(p, q)).fold(0.0, f64::max);
        sampled = sampled.max(far / s.diam);
        sampled_ok &= far <= s.diam * (1.0 + DIAM_SLACK);
    }
    rec.fits.insert("max_sampled_diam_ratio".into(), sampled);
    rec.check("diameter_sampled", sampled_ok, format!("common-cell pairs within diam(R_n), max ratio {}", fmt_g(sampled)));
    let mult_ok = stats.iter().all(|s| s.multiplicity as f64 <= s.multiplicity_bound);
    rec.check("multiplicity", mult_ok, "m(R_n) <= (#R_1)²".into());
    let levels: Vec<u32> = (1..=depth).collect();
    if levels.len() >= 2 {
        let slope = log_count_slope(sys, &levels);
        let target = 2.0 * c.entropy;
        rec.fits.insert("log_count_slope".into(), slope);
        rec.fits.insert("two_h".into(), target);
        rec.check(
            "log_count_slope",
            (slope - target).abs() <= 0.15 * target,
            format!("slope {} vs 2h = {}", fmt_g(slope), fmt_g(target)),
        );
    }
    let eta = fitted_eta(&stats, c.lambda);
    let eta_bound = stats.iter().filter(|s| s.level >= 1).map(|s| s.leb_bound * c.lambda.powi(s.level as i32 - 1)).fold(f64::INFINITY, f64::min);
    rec.fits.insert("eta_sampled".into(), eta);
    rec.fits.insert("eta".into(), eta_bound);
    let leb_ok = stats.iter().all(|s| s.leb_sampled >= s.leb_bound * (1.0 - LEB_SLACK));
    rec.check("lebesgue", eta_bound > 0.0 && leb_ok, format!("leb λ^(n-1) >= η = {} at every level", fmt_g(eta_bound)));
    emit(rec, out)
}

/// `Σ F = 1` and the Lipschitz bound for levels `1..=max_level`.
pub fn pou<S: CoveredSystem>(sys: &S, max_level: u32, cfg: &RunConfig, out: &Path) -> Result<VerificationRecord> {
    let mut rec = VerificationRecord::new("pou_checks", json!({"max_level": max_level, "points": cfg.caps.test_points}));
    let mut csv = String::from("n,analytic_lipschitz,empirical_lipschitz,empirical_holder,max_sum_error,pairs\n");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut sum_ok, mut lip_ok) = (true, true);
    for n in 1..=max_level {
        let p = PartitionOfUnity::new(sys, n);
        let pts: Vec<S::Point> = (0..cfg.caps.test_points).map(|_| random_point(sys, &mut rng, n as usize + 3)).collect();
        let err = pts.iter().map(|x| (p.weights(x).iter().map(|w| w.1).sum::<f64>() - 1.0).abs()).fold(0.0, f64::max);
        let pairs = cell_mates(sys, n, cfg.caps.test_points, cfg.seed + n as u64);
        let lip = empirical_lipschitz(&p, &pairs);
        let bound = p.lipschitz_bound();
        sum_ok &= err <= 1e-12;
        lip_ok &= lip.lipschitz <= bound;
        rec.row("sum_error", n as i64, err, Some(0.0), true);
        rec.row("lipschitz", n as i64, lip.lipschitz, Some(bound), true);
        csv.push_str(&format!("{},{},{},{},{},{}\n", n, fmt_g(bound), fmt_g(lip.lipschitz), fmt_g(lip.holder), fmt_g(err), lip.pairs));
    }
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("pou.csv"), csv)?;
    rec.check("sum_to_one", sum_ok, "|Σ_k F_k(x) - 1| <= 1e-12".into());
    rec.check("lipschitz", lip_ok, "empirical ratio <= (2(#R_1)² + 1)/Leb".into());
    emit(rec, out)
}

/// Builds, fills and certifies the sample up to `max_level`, then rebuilds
/// it and compares.
pub fn sample<S: CoveredSystem>(sys: &S, max_level: u32, cfg: &RunConfig, out: &Path) -> Result<VerificationRecord> {
    let build = || -> Result<AperiodicSample<S>> {
        let s = AperiodicSample::build(sys, cfg.caps.eager_level.min(max_level), cfg.caps.homoclinic)?;
        s.fill_to(sys, max_level)?;
        Ok(s)
    };
    let first = build()?;
    let cert = first.certify(sys);
    let json_first = first.to_json();
    let second = build()?;
    let same = json_first == second.to_json();
    write_json(out, "sample.json", &json_first)?;
    let mut rec = VerificationRecord::new("sample_checks", json!({"max_level": max_level, "eager_level": cfg.caps.eager_level, "cap": cfg.caps.homoclinic}));
    rec.row("points", max_level as i64, cert.points as f64, None, true);
    rec.check("injective", cert.injective, format!("{} points", cert.points));
    rec.check("orbit_disjoint", cert.orbit_disjoint, "distinct orbit normal forms".into());
    rec.check("in_cells", cert.in_cells, "each point lies in its cell".into());
    rec.check("aperiodic", cert.aperiodic, "each point is homoclinic and not periodic".into());
    rec.check("deterministic", same, "rebuild gives the identical sample".into());
    emit(rec, out)
}

/// A sample with the configured eager levels.
pub fn build_sample<S: CoveredSystem>(sys: &S, cfg: &RunConfig) -> Result<AperiodicSample<S>> {
    AperiodicSample::build(sys, cfg.caps.eager_level, cfg.caps.homoclinic)
}

/// `ι*_{n,0} ι_{n,0} = I` for `n <= 6` on a window of about `caps.window`
/// points, `ι*_{m,s} ι_{n,r} = 0` for admissible `(m,s) ≠ (n,r)` with
/// `n, m <= 5` on its first `ortho_points` points, and `p_{m,s} p_{n,r} = 0`,
/// `p² = p` on pair vectors from the first `proj_points` points.
pub fn isometry<S: CoveredSystem>(
    fam: &IsometryFamily<'_, S>,
    cfg: &RunConfig,
    ortho_points: usize,
    proj_points: usize,
    out: &Path,
) -> Result<VerificationRecord> {
    let sys = fam.sys();
    let seed = crate::fredholm::seed_points(sys, cfg.caps.homoclinic, cfg.caps.window / 8);
    let gens = WindowGenerators { phi_depth: 3, sample: Some((fam.sample(), vec![1, 2, 3])), bisections: Vec::new(), rounds: 5 };
    let window = build_window(sys, &seed, &gens, cfg.caps.window)?;
    let mut rec = VerificationRecord::new(
        "isometry",
        json!({"window": window.len(), "ortho_points": ortho_points, "proj_points": proj_points}),
    );
    let mut worst = 0.0f64;
    for n in 0..=6u32 {
        let mut dev = 0.0f64;
        for y in window.points() {
            let mut g = fam.iota_adjoint_apply(n, 0, &fam.iota_column(n, 0, y)?)?;
            *g.entry(y.clone()).or_insert(0.0) -= 1.0;
            dev = dev.max(g.values().fold(0.0, |m, v| m.max(v.abs())));
        }
        worst = worst.max(dev);
        rec.row("isometry_defect", n as i64, dev, Some(0.0), true);
    }
    rec.check_exact("isometry", worst <= 1e-12, true, format!("max |ι*ι - I| = {} over {} points", fmt_g(worst), window.len()));

    // The diagonal ι_{0,0} is not in the family: it meets ι_{n,0} at sample points.
    let idx: Vec<(u32, i64)> = (1..=5u32).flat_map(|n| (-(n as i64 - 1)..=n as i64 - 1).map(move |r| (n, r))).collect();
    let mut nonzero = 0usize;
    let mut checked = 0usize;
    for y in window.points().iter().take(ortho_points) {
        for &(n, r) in &idx {
            let col = fam.iota_column(n, r, y)?;
            for &(m, s) in &idx {
                if (m, s) == (n, r) {
                    continue;
                }
                checked += 1;
                if !fam.iota_adjoint_apply(m, s, &col)?.values().all(|v| *v == 0.0) {
                    nonzero += 1;
                }
            }
        }
    }
    rec.row("orthogonality_violations", 5, nonzero as f64, Some(0.0), true);
    rec.check_exact("orthogonality", nonzero == 0, true, format!("{checked} mismatched column products, {nonzero} nonzero"));

    let mut pairs: BTreeSet<Pair<S::Point>> = BTreeSet::new();
    for y in window.points().iter().take(proj_points) {
        for &(n, r) in &idx {
            pairs.extend(fam.iota_column(n, r, y)?.into_keys());
        }
    }
    let (mut cross, mut idem) = (0.0f64, 0.0f64);
    for pair in &pairs {
        for &(n, r) in &idx {
            let pc = fam.projection_column(n, r, pair)?;
            let mut pp = crate::linalg::Vector::new();
            for (q, v) in &pc {
                crate::linalg::axpy(&mut pp, *v, &fam.projection_column(n, r, q)?);
            }
            crate::linalg::axpy(&mut pp, -1.0, &pc);
            idem = idem.max(pp.values().fold(0.0, |m, v| m.max(v.abs())));
            for &(m, s) in &idx {
                if (m, s) == (n, r) {
                    continue;
                }
                let back = fam.iota_adjoint_apply(m, s, &pc)?;
                cross = back.values().fold(cross, |c, v| c.max(v.abs()));
            }
        }
    }
    rec.row("projection_cross", 5, cross, Some(0.0), true);
    rec.row("projection_idempotent", 5, idem, Some(0.0), true);
    rec.check_exact("projection_cross", cross == 0.0, true, format!("max |p_(m,s) p_(n,r)| = {} on {} pairs", fmt_g(cross), pairs.len()));
    rec.check_exact("projection_idempotent", idem <= 1e-12, true, format!("max |p² - p| = {}", fmt_g(idem)));
    emit(rec, out)
}

/// Bisection pairs for the `T_n` suites.
pub fn t_pair<S: CoveredSystem>(sys: &S, cfg: &RunConfig) -> Result<(Bisection<S::Point>, Bisection<S::Point>)> {
    let t = &cfg.suites.t_blocks;
    let bump = ValueFn::Bump { height: 1.0 };
    let mut pairs = linked_pairs(sys, t.pair + 1, Link::StableFirst, t.partner, t.search, bump.clone(), bump)?;
    Ok(pairs.swap_remove(t.pair))
}

fn t_params(cfg: &RunConfig) -> TParams {
    let t = &cfg.suites.t_blocks;
    TParams { i: t.i, k: t.k, l: t.l, n: 0 }
}

/// Runs one suite by name.
pub fn verify_suite<S: CoveredSystem>(
    sys: &S,
    sample: &AperiodicSample<S>,
    name: &str,
    cfg: &RunConfig,
    out: &Path,
) -> Result<VerificationRecord> {
    let fam = IsometryFamily::new(sys, sample);
    let t = &cfg.suites.t_blocks;
    let all: Vec<i64> = (t.n_min..=t.n_max).collect();
    let pos: Vec<i64> = (t.n_min_positive.max(t.n_min)..=t.n_max).collect();
    match name {
        "axioms" => {
            let rep = check_axioms(sys, cfg.caps.test_points, cfg.seed);
            let mut rec = VerificationRecord::new("axioms", json!({"configurations": rep.configurations}));
            for (label, tally) in
                [("b1", &rep.b1), ("b2", &rep.b2), ("b3", &rep.b3), ("b4", &rep.b4), ("c1", &rep.c1), ("c2", &rep.c2), ("lipschitz", &rep.lipschitz), ("local", &rep.local)]
            {
                rec.row(&format!("{label}_checked"), 0, tally.checked as f64, None, true);
                rec.row(&format!("{label}_violations"), 0, tally.violations as f64, Some(0.0), true);
            }
            rec.check("no_violations", rep.violations() == 0, format!("{} violations", rep.violations()));
            rec.check("coverage", rep.min_checked() * 10 >= rep.configurations * 8, format!("fewest checks per identity: {}", rep.min_checked()));
            emit(rec, out)
        }
        "isometry" => isometry(&fam, cfg, usize::MAX, 200, out),
        "quasi-invariance" => {
            let q = &cfg.suites.quasi_invariance;
            let points = crate::fredholm::seed_points(sys, 3, q.points);
            emit(verify::suite_quasi_invariance(&fam, &points, q.n_max, &q.j, q.gram_max)?, out)
        }
        "groupoid-lemmas" => {
            let g = &cfg.suites.groupoid_lemmas;
            let bump = ValueFn::Bump { height: 1.0 };
            let pairs = linked_pairs(sys, g.pairs, Link::UnstableFirst, g.partner, g.search, bump.clone(), bump)?;
            emit(verify::suite_groupoid_lemmas(sys, &pairs, g.n_max)?, out)
        }
        "rank-decay" => {
            let (a, b) = t_pair(sys, cfg)?;
            emit(verify::suite_rank_decay(&fam, &a, &b, t_params(cfg), &all, t.n0_max)?, out)
        }
        "block-orthogonality" => {
            let (a, b) = t_pair(sys, cfg)?;
            emit(verify::suite_block_orthogonality(&fam, &a, &b, t_params(cfg), &pos)?, out)
        }
        "convergence" => {
            let (a, b) = t_pair(sys, cfg)?;
            emit(verify::suite_convergence(&fam, &a, &b, t_params(cfg), &pos, t.blocks)?, out)
        }
        other => Err(Error::InvalidArgument(format!("unknown suite {other:?}; expected one of {SUITES:?} or all"))),
    }
}

/// A subcommand with its arguments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Describe,
    Covers { depth: u32 },
    Pou { level: u32 },
    Sample { max_level: u32 },
    /// A suite name from [`SUITES`] or `all`.
    Verify { suite: String },
}

/// Runs a command; `Ok(true)` iff every check passed.
pub fn execute(cmd: &Command, cfg: &RunConfig) -> Result<bool> {
    let sys = System::build(cfg)?;
    let out = cfg.out_dir.as_path();
    match cmd {
        Command::Describe => {
            let v = describe(&sys, out)?;
            println!("{}", serde_json::to_string_pretty(&v).unwrap_or_default());
            Ok(true)
        }
        Command::Covers { depth } => report(with_system!(&sys, s => covers(s, *depth, cfg, out))?),
        Command::Pou { level } => report(with_system!(&sys, s => pou(s, *level, cfg, out))?),
        Command::Sample { max_level } => report(with_system!(&sys, s => sample(s, *max_level, cfg, out))?),
        Command::Verify { suite } => with_system!(&sys, s => {
            let smp = build_sample(s, cfg)?;
            let names: Vec<&str> = if suite == "all" { SUITES.to_vec() } else { vec![suite.as_str()] };
            let mut ok = true;
            for name in names {
                ok &= report(verify_suite(s, &smp, name, cfg, out)?)?;
            }
            Ok(ok)
        }),
    }
}

/// One line per check on stdout.
fn report(rec: VerificationRecord) -> Result<bool> {
    for c in &rec.checks {
        println!("{} {} {}: {}", if c.pass { "PASS" } else { "FAIL" }, rec.suite, c.name, c.detail);
    }
    Ok(rec.pass())
}
