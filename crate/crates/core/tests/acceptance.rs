//! End-to-end acceptance checks. Runs as a plain binary so that every
//! criterion prints one PASS/FAIL line; exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use suborbit::cli::config::{Pipeline, RunConfig};
use suborbit::cli::execute;
use suborbit::construct::{
    build_phi, evaluate_suborbit, evaluate_suborbit_naive, finite_inputs, localized_family,
    localized_rule, recheck, verify_bounds, verify_eps_close, ErrorReport, OrbitRepresentation,
};
use suborbit::decomposition::{check_closeness, frame_bounds_p2, perturbed_bounds, AtomicSystem};
use suborbit::function_space::{
    fit_tail_certificate, gabor_half_system, run_function_pipeline, CertifiedFunction, FunctionRun,
    GridFunction, GridGenerator, ModerateWeight,
};
use suborbit::schedule::{
    build_schedule, minimality_gaps, replay, EpsSchedule, EpsVariant, FiniteRule, InnerSumStart,
    PowerSchedule, ScheduleRule,
};
use suborbit::shifts::{sample_priesz_bounds, shift_norms, ShiftOperators};
use suborbit::spaces::{norm, BasisMode, SeqVector, WeightSequence, WeightedLpSpace};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn within(elapsed: Duration, limit: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit, || {
        format!("runtime {:.3}s exceeds {limit}s", elapsed.as_secs_f64())
    })
}

/// Weighted l^1 norm with `w_k = 2^k`, written out directly.
fn l1_pow2(x: &[f64]) -> f64 {
    x.iter()
        .enumerate()
        .map(|(i, c)| c.abs() * 2f64.powi(i as i32 + 1))
        .sum()
}

fn c1_shift_norms() -> Outcome {
    let t = Instant::now();
    let space = ok(WeightedLpSpace::new(
        1.0,
        WeightSequence::Geometric { ratio: 2.0 },
        BasisMode::Canonical,
    ))?;
    let (l, r) = ok(shift_norms(&space))?;
    ensure(l == 0.5 && r == 2.0, || {
        format!("(||L||, ||R||) = ({l}, {r})")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut sup_l, mut sup_r) = (0.0f64, 0.0f64);
    for _ in 0..2000 {
        let dim = rng.gen_range(1..=50);
        let density = rng.gen_range(0.05..1.0);
        let x: Vec<f64> = (0..dim)
            .map(|_| {
                if rng.gen_bool(density) {
                    rng.gen_range(-1.0..1.0)
                } else {
                    0.0
                }
            })
            .collect();
        let nx = l1_pow2(&x);
        if nx == 0.0 {
            continue;
        }
        let lx: Vec<f64> = x[1..].to_vec();
        let rx: Vec<f64> = std::iter::once(0.0).chain(x.iter().copied()).collect();
        let (ratio_l, ratio_r) = (l1_pow2(&lx) / nx, l1_pow2(&rx) / nx);

        let v = ok(SeqVector::from_pairs(
            x.iter().enumerate().map(|(i, &c)| (i + 1, c)),
        ))?;
        let lib_l = ok(norm(&space, &v.shifted_left(1)))? / ok(norm(&space, &v))?;
        let lib_r = ok(norm(&space, &v.shifted_right(1)))? / ok(norm(&space, &v))?;
        ensure(
            (lib_l - ratio_l).abs() <= 1e-12 && (lib_r - ratio_r).abs() <= 1e-12,
            || "library shifts disagree with the direct computation".into(),
        )?;
        sup_l = sup_l.max(ratio_l);
        sup_r = sup_r.max(ratio_r);
    }
    let tol = 1e-12;
    ensure(sup_l <= l * (1.0 + tol) && sup_r <= r * (1.0 + tol), || {
        format!("sampled sup ({sup_l}, {sup_r}) exceeds the formula")
    })?;
    ensure(l - sup_l <= 1e-3 && r - sup_r <= 1e-3, || {
        format!("sampled sup ({sup_l}, {sup_r}) not within 1e-3")
    })?;
    within(t.elapsed(), 1.0)?;
    Ok(format!(
        "formula (0.5, 2), sampled ({sup_l:.6}, {sup_r:.6})"
    ))
}

fn c2_scaled_basis() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let p = rng.gen_range(1.0..6.0);
        let weights = match i % 3 {
            0 => WeightSequence::Geometric {
                ratio: rng.gen_range(0.2..5.0),
            },
            1 => WeightSequence::Power {
                exponent: rng.gen_range(-3.0..6.0),
            },
            _ => WeightSequence::Table {
                prefix: (0..10).map(|_| rng.gen_range(0.01..100.0)).collect(),
                tail: rng.gen_range(0.5..2.0),
            },
        };
        let space = ok(WeightedLpSpace::new(p, weights.clone(), BasisMode::Scaled))?;
        let s = ok(sample_priesz_bounds(&space, 200, 50, &mut rng))?;
        let dev = (s.a_upper - 1.0).abs().max((s.b_lower - 1.0).abs());
        ensure(dev <= 1e-12, || {
            format!(
                "p = {p}, {weights:?}: ratios ({}, {})",
                s.a_upper, s.b_lower
            )
        })?;
        worst = worst.max(dev);
    }
    Ok(format!("max |ratio - 1| = {worst:.2e}"))
}

struct SequenceRun {
    rule: FiniteRule,
    orbit: OrbitRepresentation,
    report: ErrorReport,
    eps: EpsSchedule,
}

fn canonical_run(
    space: WeightedLpSpace,
    lambda: f64,
    k: usize,
    eps: EpsSchedule,
) -> Result<SequenceRun, String> {
    let ops = ok(ShiftOperators::new(space, lambda))?;
    let family: Vec<SeqVector> = (1..=k).map(|j| SeqVector::unit(j).unwrap()).collect();
    let (supports, norms) = ok(finite_inputs(&ops, &family))?;
    let rule = ok(FiniteRule::new(supports, norms, ops.norm_s(), eps.clone()))?;
    let schedule = ok(build_schedule(&rule))?;
    let orbit = ok(build_phi(&ops, &schedule, &family, k))?;
    let report = ok(verify_bounds(&orbit, &eps, 1))?;
    Ok(SequenceRun {
        rule,
        orbit,
        report,
        eps,
    })
}

fn criterion3_run() -> Result<SequenceRun, String> {
    canonical_run(
        ok(WeightedLpSpace::lp(2.0))?,
        4.0,
        12,
        ok(EpsSchedule::plain(1.0))?,
    )
}

fn c3_canonical() -> Outcome {
    let t = Instant::now();
    let run = criterion3_run()?;
    let alphas = run.orbit.schedule.alphas();
    let expected: Vec<u64> = (1..=12).map(|k| k * (k + 1) / 2).collect();
    ensure(alphas == expected, || format!("alpha = {alphas:?}"))?;
    for r in &run.report.rows {
        let bound = 0.5f64.powi(r.k as i32);
        ensure(r.actual_error <= bound && r.allowance == 0.0, || {
            format!("k = {}: error {} vs 2^-k = {bound}", r.k, r.actual_error)
        })?;
    }
    within(t.elapsed(), 1.0)?;
    Ok(format!(
        "alpha = k(k+1)/2, max error/bound = {:.3e}",
        run.report.max_ratio
    ))
}

fn c4_closeness() -> Outcome {
    let run = criterion3_run()?;
    let mut parts = Vec::new();
    for p in [1.0, 2.0, 3.0] {
        let direct: f64 = run.report.errors().iter().map(|e| e.powf(p)).sum();
        let rhs = 1.0 / (2f64.powf(p) - 1.0);
        ensure(direct <= rhs * (1.0 + 1e-12), || {
            format!("p = {p}: {direct} > {rhs}")
        })?;
        let c = ok(verify_eps_close(&run.report, &run.eps, p))?;
        ensure(c.pass, || {
            format!("p = {p}: with certified tail {} > {}", c.lhs, c.rhs)
        })?;
        parts.push(format!("p={p}: {direct:.3e} <= {rhs:.3e}"));
    }

    let w = WeightSequence::Geometric { ratio: 2.0 };
    let space = ok(WeightedLpSpace::new(2.0, w.clone(), BasisMode::Canonical))?;
    let eps = ok(EpsSchedule::new(
        EpsVariant::Weighted {
            p: 2.0,
            weights: w.clone(),
        },
        1.0,
    ))?;
    ensure(eps.m == 1.0, || format!("M = {}", eps.m))?;
    let run = canonical_run(space, 4.0, 12, eps)?;
    let direct: f64 = run
        .report
        .rows
        .iter()
        .map(|r| r.actual_error.powi(2) * w.weight(r.k))
        .sum();
    ensure(direct <= 1.0 + 1e-12, || {
        format!("weighted sum {direct} > 1")
    })?;
    let c = ok(verify_eps_close(&run.report, &run.eps, 2.0))?;
    ensure(c.pass, || {
        format!("weighted, with certified tail: {} > {}", c.lhs, c.rhs)
    })?;
    parts.push(format!("weighted: {direct:.3e} <= 1"));
    Ok(parts.join(", "))
}

fn localized_fixture() -> Result<
    (
        suborbit::schedule::LocalizedRule,
        PowerSchedule,
        ErrorReport,
    ),
    String,
> {
    let ops = ok(ShiftOperators::new(
        ok(WeightedLpSpace::lp(2.0))?,
        std::f64::consts::E,
    ))?;
    let family = ok(localized_family(8, 1.0, 2.0, 1e-16))?;
    let eps = ok(EpsSchedule::plain(1.0))?;
    let rule = ok(localized_rule(
        &ops,
        &family,
        1.0,
        2.0,
        &eps,
        InnerSumStart::default(),
    ))?;
    let schedule = ok(build_schedule(&rule))?;
    let orbit = ok(build_phi(&ops, &schedule, &family, 8))?;
    let report = ok(verify_bounds(&orbit, &eps, 1))?;
    Ok((rule, schedule, report))
}

fn c5_localized() -> Outcome {
    let t = Instant::now();
    let (rule, schedule, report) = localized_fixture()?;
    ok(recheck(&rule, &schedule))?;
    for r in &report.rows {
        ensure(r.allowance == 0.0 && r.actual_error <= r.bound, || {
            format!("k = {}: error {} > {}", r.k, r.actual_error, r.bound)
        })?;
    }
    within(t.elapsed(), 5.0)?;
    Ok(format!(
        "alpha = {:?}, max error/bound = {:.3e}",
        schedule.alphas(),
        report.max_ratio
    ))
}

fn gabor_fixture() -> Result<(FunctionRun, f64), String> {
    let g = ok(GridFunction::generate(
        &GridGenerator::Exponential {
            amplitude: 1.0,
            rate: 1.0,
        },
        64,
        40.0,
        1.0,
        ModerateWeight::Constant,
    ))?;
    let fit = ok(fit_tail_certificate(&g, 0.0))?;
    let family: Vec<CertifiedFunction> = ok(gabor_half_system(&g, &fit, 1.0, 1.0, 2, 1))?
        .into_iter()
        .take(10)
        .map(|m| m.member)
        .collect();
    ensure(family.len() == 10, || "fewer than 10 members".into())?;
    let run = ok(run_function_pipeline(
        &family,
        1.5,
        None,
        &ok(EpsSchedule::plain(1.0))?,
        0,
    ))?;
    Ok((run, fit.mu))
}

fn c6_gabor() -> Outcome {
    let t = Instant::now();
    let (run, mu) = gabor_fixture()?;
    let e = std::f64::consts::E;
    ensure((mu - e).abs() <= 0.02 * e, || format!("fitted mu = {mu}"))?;
    let mut worst_quad = 0.0f64;
    for r in &run.report.rows {
        let quad = r.quadrature.unwrap_or(f64::INFINITY);
        ensure(
            r.pass && r.actual_error <= r.bound + r.allowance + quad,
            || {
                format!(
                    "k = {}: error {} > {} + {quad}",
                    r.k, r.actual_error, r.bound
                )
            },
        )?;
        ensure(quad <= 1e-2 * r.bound, || {
            format!("k = {}: quadrature {quad} > 1e-2 * {}", r.k, r.bound)
        })?;
        worst_quad = worst_quad.max(quad / r.bound);
    }
    within(t.elapsed(), 30.0)?;
    Ok(format!(
        "mu = {mu:.5}, max quadrature/bound = {worst_quad:.2e}"
    ))
}

fn c7_stable_vs_naive() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = [1.0, 2.0, 3.0][rng.gen_range(0..3)];
        let ops = ok(ShiftOperators::new(ok(WeightedLpSpace::lp(p))?, 2.0))?;
        let k_max = rng.gen_range(1..=5);
        let family: Vec<SeqVector> = (0..k_max)
            .map(|_| {
                let len = rng.gen_range(1..=8);
                SeqVector::from_pairs((1..=len).map(|j| (j, rng.gen_range(-1.0..1.0))))
            })
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let (supports, norms) = ok(finite_inputs(&ops, &family))?;
        let eps = ok(EpsSchedule::plain(rng.gen_range(0.1..2.0)))?;
        let rule = ok(FiniteRule::new(supports, norms, ops.norm_s(), eps))?;
        let schedule = ok(build_schedule(&rule))?;
        let n = rng.gen_range(1..=k_max);
        let orbit = ok(build_phi(&ops, &schedule, &family, n))?;
        for k in 1..=k_max {
            let stable = ok(evaluate_suborbit(&orbit, k))?;
            let naive = ok(evaluate_suborbit_naive(&orbit, k))?;
            let diff = ok(norm(&ops.space, &ok(stable.sub(&naive))?))?;
            let scale = ok(norm(&ops.space, &naive))?.max(f64::MIN_POSITIVE);
            let rel = diff / scale;
            ensure(rel <= 1e-10, || {
                format!(
                    "relative difference {rel} at k = {k}, alpha = {:?}",
                    schedule.alphas()
                )
            })?;
            worst = worst.max(rel);
        }
    }
    Ok(format!("max relative difference {worst:.2e}"))
}

fn decomposition_fixture() -> Result<(SequenceRun, Vec<SeqVector>), String> {
    let run = canonical_run(
        ok(WeightedLpSpace::lp(2.0))?,
        4.0,
        20,
        ok(EpsSchedule::plain(0.5))?,
    )?;
    let vectors = (1..=20)
        .map(|k| evaluate_suborbit(&run.orbit, k))
        .collect::<Result<Vec<_>, _>>();
    Ok((run, ok(vectors)?))
}

fn c8_envelope() -> Outcome {
    let t = Instant::now();
    let (run, vectors) = decomposition_fixture()?;
    ensure(
        ok(check_closeness(&run.report.errors(), 2.0, 0.5, 1.0))?,
        || "closeness fails".into(),
    )?;
    let (a, b) = ok(perturbed_bounds(1.0, 1.0, 0.5))?;
    ensure(a == 2.0 / 3.0 && b == 2.0, || {
        format!("envelope ({a}, {b})")
    })?;
    let fb = ok(frame_bounds_p2(&ok(AtomicSystem::new(
        20, &vectors, 2.0, 1.0, 1.0,
    ))?))?;
    ensure(a <= fb.a && fb.b <= b, || {
        format!("measured ({}, {}) outside [{a}, {b}]", fb.a, fb.b)
    })?;
    ensure(fb.complete && fb.rank == 20, || {
        format!("rank {} of 20", fb.rank)
    })?;
    within(t.elapsed(), 1.0)?;
    Ok(format!(
        "envelope (2/3, 2), measured ({:.12}, {:.12}), rank 20",
        fb.a, fb.b
    ))
}

/// Decrements each alpha(k) in turn and replays the rule.
fn probe(name: &str, rule: &dyn ScheduleRule, schedule: &PowerSchedule) -> Result<(), String> {
    let alphas: Vec<i64> = schedule.alphas().iter().map(|&a| a as i64).collect();
    ensure(ok(replay(rule, &alphas))?.is_empty(), || {
        format!("{name}: schedule does not replay")
    })?;
    for k in 0..alphas.len() {
        let mut lowered = alphas.clone();
        lowered[k] -= 1;
        ensure(!ok(replay(rule, &lowered))?.is_empty(), || {
            format!("{name}: alpha({}) - 1 violates nothing", k + 1)
        })?;
    }
    let gaps = ok(minimality_gaps(rule, schedule))?;
    ensure(gaps.is_empty(), || {
        format!("{name}: minimality gaps at {gaps:?}")
    })
}

fn c9_minimality() -> Outcome {
    let mut probed = 0;
    let run = criterion3_run()?;
    probe("canonical", &run.rule, &run.orbit.schedule)?;
    let w = WeightSequence::Geometric { ratio: 2.0 };
    let run = canonical_run(
        ok(WeightedLpSpace::new(2.0, w.clone(), BasisMode::Canonical))?,
        4.0,
        12,
        ok(EpsSchedule::new(
            EpsVariant::Weighted { p: 2.0, weights: w },
            1.0,
        ))?,
    )?;
    probe("weighted", &run.rule, &run.orbit.schedule)?;
    let (rule, schedule, _) = localized_fixture()?;
    probe("localized", &rule, &schedule)?;
    let (run, _) = gabor_fixture()?;
    probe("gabor", &run.rule, &run.schedule)?;
    let (run, _) = decomposition_fixture()?;
    probe("decomposition", &run.rule, &run.orbit.schedule)?;
    probed += 5;

    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for (file, pipeline) in [
        ("finite.toml", Pipeline::Finite),
        ("localized.toml", Pipeline::Localized),
        ("function.toml", Pipeline::Function),
        ("gabor.toml", Pipeline::Gabor),
        ("decomposition.toml", Pipeline::Decomposition),
    ] {
        let cfg = ok(RunConfig::load(&configs.join(file)))?;
        let out = ok(execute(&cfg, pipeline, None, 1))?;
        let gaps = out
            .summary
            .iter()
            .find(|(k, _)| k == "schedule_minimality_gaps")
            .map(|(_, v)| v.clone());
        ensure(gaps.as_deref() == Some("0"), || {
            format!("{file}: minimality gaps {gaps:?}")
        })?;
        ensure(out.pass, || format!("{file}: run does not pass"))?;
        probed += 1;
    }
    Ok(format!("{probed} fixture schedules, no gaps"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("shift norms for w = 2^k, p = 1", c1_shift_norms),
        ("scaled basis Riesz ratios", c2_scaled_basis),
        ("canonical l^2 end to end", c3_canonical),
        ("aggregate eps-closeness", c4_closeness),
        ("localized family end to end", c5_localized),
        ("half Gabor system", c6_gabor),
        ("stable vs naive evaluation", c7_stable_vs_naive),
        ("perturbed decomposition envelope", c8_envelope),
        ("schedule minimality", c9_minimality),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {}: PASS  {name} ({secs:.3}s) {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({secs:.3}s) {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
