//! Command-line pipelines: config in, CSV reports and a summary out.

pub mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use config::{FamilyConfig, FunctionConfig, MemberSpec};
pub use config::{Pipeline, RunConfig};

use crate::construct::{
    build_phi, evaluate_suborbit, finite_inputs, fmt_f64, localized_family, localized_rule,
    recheck, riesz_upper_bound, verify_bounds, verify_eps_close, ErrorReport, OrbitRepresentation,
};
use crate::decomposition::{check_closeness, frame_bounds_p2, perturbed_bounds, AtomicSystem};
use crate::error::{Error, Result};
use crate::function_space::{
    fit_tail_certificate, gabor_half_system, run_function_pipeline, CertifiedFunction,
    DecayCertificate, GridFunction,
};
use crate::schedule::{build_schedule, minimality_gaps, FiniteRule, PowerSchedule, ScheduleRule};
use crate::shifts::{sample_priesz_bounds, ShiftOperators};
use crate::spaces::SeqVector;

#[derive(Debug, Clone, Parser)]
#[command(
    name = "suborbit",
    version,
    about = "Approximate suborbit representations with certified error reports"
)]
pub struct Args {
    /// Which construction to run.
    #[arg(value_enum)]
    pub pipeline: Pipeline,
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (default: config `output`, else the current directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for per-k verification; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Truncation index N of the generating vector.
    #[arg(long)]
    pub trunc: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub pass: bool,
    pub schedule: PowerSchedule,
    pub report: ErrorReport,
    /// Ordered `key = value` lines of the summary.
    pub summary: Vec<(String, String)>,
}

impl RunOutcome {
    pub fn summary_text(&self) -> String {
        self.summary
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

/// Seed from `SUBORBIT_SEED`, 0 when unset.
pub fn env_seed() -> Result<u64> {
    match std::env::var("SUBORBIT_SEED") {
        Ok(s) => s.trim().parse().map_err(|_| {
            Error::Config(format!(
                "SUBORBIT_SEED must be an unsigned integer, got {s:?}"
            ))
        }),
        Err(_) => Ok(0),
    }
}

pub fn build_family(cfg: &RunConfig) -> Result<Vec<SeqVector>> {
    let k = cfg.k;
    match &cfg.family {
        FamilyConfig::Canonical => (1..=k).map(SeqVector::unit).collect(),
        FamilyConfig::Localized {
            amplitude,
            rate,
            cutoff,
        } => localized_family(k, *amplitude, *rate, *cutoff),
        FamilyConfig::Random {
            max_support,
            density,
            seed,
        } => {
            if *max_support == 0 || !(*density > 0.0 && *density <= 1.0) {
                return Err(Error::Config(
                    "random family needs max_support >= 1 and density in (0, 1]".into(),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(match seed {
                Some(s) => *s,
                None => env_seed()?,
            });
            (0..k)
                .map(|_| {
                    let mut pairs = Vec::new();
                    for j in 1..=*max_support {
                        if rng.gen_bool(*density) {
                            pairs.push((j, rng.gen_range(-1.0..1.0)));
                        }
                    }
                    if pairs.is_empty() {
                        pairs.push((rng.gen_range(1..=*max_support), 1.0));
                    }
                    SeqVector::from_pairs(pairs)
                })
                .collect()
        }
        FamilyConfig::File { path } => read_family_csv(path, k),
        FamilyConfig::Explicit { vectors } => {
            if vectors.len() < k {
                return Err(Error::Config(format!(
                    "k = {k} but only {} explicit vectors",
                    vectors.len()
                )));
            }
            vectors[..k]
                .iter()
                .map(|v| SeqVector::from_pairs(v.iter().copied()))
                .collect()
        }
    }
}

/// Rows `k,j,value`; members without rows are zero.
fn read_family_csv(path: &Path, k: usize) -> Result<Vec<SeqVector>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut pairs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
    for rec in rdr.deserialize::<(usize, usize, f64)>() {
        let (m, j, c) = rec.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if m == 0 {
            return Err(Error::Config(format!(
                "{}: member indices start at 1",
                path.display()
            )));
        }
        if m <= k {
            pairs[m - 1].push((j, c));
        }
    }
    pairs.into_iter().map(SeqVector::from_pairs).collect()
}

fn shift_ops(cfg: &RunConfig) -> Result<ShiftOperators> {
    let space = cfg.space.build()?;
    match cfg.lambda {
        Some(l) => ShiftOperators::new(space, l),
        None => ShiftOperators::with_default_lambda(space),
    }
}

struct Summary(Vec<(String, String)>);

impl Summary {
    fn put(&mut self, k: &str, v: impl ToString) {
        self.0.push((k.to_string(), v.to_string()));
    }

    fn num(&mut self, k: &str, v: f64) {
        self.put(k, fmt_f64(v));
    }
}

fn schedule_checks(
    rule: &dyn ScheduleRule,
    schedule: &PowerSchedule,
    s: &mut Summary,
) -> Result<()> {
    recheck(rule, schedule)?;
    s.put("schedule_replay", "ok");
    s.put(
        "schedule_minimality_gaps",
        minimality_gaps(rule, schedule)?.len(),
    );
    Ok(())
}

fn riesz_diagnostics(cfg: &RunConfig, ops: &ShiftOperators, s: &mut Summary) -> Result<()> {
    if cfg.diagnostics.riesz_trials == 0 {
        return Ok(());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(env_seed()?);
    let r = sample_priesz_bounds(
        &ops.space,
        cfg.diagnostics.riesz_trials,
        cfg.diagnostics.riesz_max_dim,
        &mut rng,
    )?;
    s.num("riesz_sampled_a_upper", r.a_upper);
    s.num("riesz_sampled_b_lower", r.b_lower);
    Ok(())
}

fn sequence_run(
    cfg: &RunConfig,
    pipeline: Pipeline,
    n: usize,
    jobs: usize,
    s: &mut Summary,
) -> Result<(PowerSchedule, OrbitRepresentation, ErrorReport)> {
    let ops = shift_ops(cfg)?;
    let eps = cfg.eps.build(&cfg.space)?;
    let family = build_family(cfg)?;
    s.num("lambda", ops.lambda);
    s.num("norm_l", ops.norm_l);
    s.num("norm_r", ops.norm_r);
    s.num("norm_s", ops.norm_s());
    s.num("eps_m", eps.m);
    let schedule = match pipeline {
        Pipeline::Localized => {
            let FamilyConfig::Localized {
                amplitude, rate, ..
            } = cfg.family
            else {
                unreachable!("validated");
            };
            let rule = localized_rule(
                &ops,
                &family,
                amplitude,
                rate,
                &eps,
                cfg.localized.inner_sum,
            )?;
            s.num("riesz_upper_bound", rule.b_upper);
            let schedule = build_schedule(&rule)?;
            schedule_checks(&rule, &schedule, s)?;
            schedule
        }
        _ => {
            let (sup, norms) = finite_inputs(&ops, &family)?;
            let rule = FiniteRule::new(sup, norms, ops.norm_s(), eps.clone())?;
            let schedule = build_schedule(&rule)?;
            schedule_checks(&rule, &schedule, s)?;
            schedule
        }
    };
    riesz_diagnostics(cfg, &ops, s)?;
    let orbit = build_phi(&ops, &schedule, &family, n)?;
    s.num("truncation_tail_bound", orbit.truncation_tail_bound);
    let report = verify_bounds(&orbit, &eps, jobs)?;
    let c = verify_eps_close(&report, &eps, ops.space.p)?;
    s.num("eps_close_lhs", c.lhs);
    s.num("eps_close_rhs", c.rhs);
    s.put("eps_close", c.pass);
    Ok((schedule, orbit, report))
}

fn grid_members(f: &FunctionConfig) -> Result<Vec<GridFunction>> {
    f.members
        .iter()
        .map(|m| {
            let g = match m {
                MemberSpec::Generator(gen) => {
                    GridFunction::generate(gen, f.q, f.length, f.p, f.weight)?
                }
                MemberSpec::File { file } => {
                    let rdr = File::open(file)
                        .map_err(|e| Error::Config(format!("{}: {e}", file.display())))?;
                    GridFunction::from_csv(rdr, f.p, f.weight)?
                }
            };
            if g.q() != f.q {
                return Err(Error::GridMismatch(format!(
                    "member uses q = {}, config says {}",
                    g.q(),
                    f.q
                )));
            }
            Ok(g)
        })
        .collect()
}

fn function_run(
    cfg: &RunConfig,
    pipeline: Pipeline,
    jobs: usize,
    s: &mut Summary,
) -> Result<(PowerSchedule, ErrorReport)> {
    let f = cfg.function.as_ref().expect("validated");
    let eps = cfg.eps.build(&cfg.space)?;
    let grids = grid_members(f)?;
    let family: Vec<CertifiedFunction> = match pipeline {
        Pipeline::Gabor => {
            let gab = cfg.gabor.as_ref().expect("validated");
            let g = &grids[0];
            let fit = fit_tail_certificate(g, f.d0)?;
            s.num("window_c", fit.c);
            s.num("window_mu", fit.mu);
            s.put("window_zero_tail", fit.zero_tail);
            let per_column = 2 * gab.m_max + 1;
            let n_max = gab
                .n_max
                .unwrap_or((cfg.k as u64).div_ceil(per_column).saturating_sub(1));
            let sys = gabor_half_system(g, &fit, gab.a, gab.b, gab.m_max, n_max)?;
            if sys.len() < cfg.k {
                return Err(Error::Config(format!(
                    "k = {} but the Gabor grid has {} members",
                    cfg.k,
                    sys.len()
                )));
            }
            sys.into_iter().take(cfg.k).map(|m| m.member).collect()
        }
        _ => grids
            .into_iter()
            .take(cfg.k)
            .map(|g| {
                let fit = fit_tail_certificate(&g, f.d0)?;
                let cert = DecayCertificate {
                    c: fit.c,
                    a_k: f.d0.ceil() as u64,
                    mu: fit.mu,
                };
                Ok(CertifiedFunction { f: g, cert })
            })
            .collect::<Result<_>>()?,
    };
    let lambda = cfg.lambda.unwrap_or(1.5 * f.weight.norm_t1_bound(f.p));
    let run = run_function_pipeline(&family, lambda, f.mu, &eps, jobs)?;
    schedule_checks(&run.rule, &run.schedule, s)?;
    s.num("lambda", run.lambda);
    s.num("mu", run.mu);
    s.num("norm_s", run.norm_s);
    s.num("norm_tminus1", run.norm_tminus1);
    s.num("eps_m", eps.m);
    s.num("working_length", run.working_length);
    let c = verify_eps_close(&run.report, &eps, f.p)?;
    s.num("eps_close_lhs", c.lhs);
    s.num("eps_close_rhs", c.rhs);
    s.put("eps_close", c.pass);
    Ok((run.schedule, run.report))
}

/// Runs a pipeline without touching the file system for output.
pub fn execute(
    cfg: &RunConfig,
    pipeline: Pipeline,
    trunc: Option<usize>,
    jobs: usize,
) -> Result<RunOutcome> {
    cfg.validate(pipeline)?;
    let n = trunc.or(cfg.trunc).unwrap_or(cfg.k);
    if n > cfg.k {
        return Err(Error::Config(format!("trunc = {n} exceeds k = {}", cfg.k)));
    }
    let mut s = Summary(Vec::new());
    s.put("pipeline", pipeline.name());
    s.put("k", cfg.k);
    s.num("epsilon", cfg.eps.epsilon);
    let (schedule, report, extra_pass) = match pipeline {
        Pipeline::Finite | Pipeline::Localized => {
            s.put("trunc", n);
            let (schedule, _, report) = sequence_run(cfg, pipeline, n, jobs, &mut s)?;
            (schedule, report, true)
        }
        Pipeline::Function | Pipeline::Gabor => {
            if n != cfg.k {
                return Err(Error::Config(
                    "grid pipelines always use every member (trunc = k)".into(),
                ));
            }
            let (schedule, report) = function_run(cfg, pipeline, jobs, &mut s)?;
            (schedule, report, true)
        }
        Pipeline::Decomposition => {
            let d = cfg.decomposition.as_ref().expect("validated");
            let (a_new, b_new) = perturbed_bounds(d.a, d.b, d.epsilon)?;
            s.put("trunc", n);
            let (schedule, orbit, report) = sequence_run(cfg, Pipeline::Finite, n, jobs, &mut s)?;
            let p = orbit.ops.space.p;
            let close = check_closeness(&report.errors(), p, d.epsilon, d.b)?;
            s.num("perturbed_a", a_new);
            s.num("perturbed_b", b_new);
            s.put("closeness", close);
            let mut ok = close;
            if p == 2.0 {
                let dim = d.dimension.unwrap_or(cfg.k);
                let vectors = (1..=cfg.k)
                    .map(|k| evaluate_suborbit(&orbit, k))
                    .collect::<Result<Vec<_>>>()?;
                let fb = frame_bounds_p2(&AtomicSystem::new(dim, &vectors, p, d.a, d.b)?)?;
                let inside = a_new <= fb.a && fb.b <= b_new;
                s.num("measured_a", fb.a);
                s.num("measured_b", fb.b);
                s.put("rank", fb.rank);
                s.put("complete", fb.complete);
                s.put("inside_envelope", inside);
                ok = ok && inside && fb.complete;
            } else {
                s.num("riesz_upper_bound", riesz_upper_bound(&orbit.ops)?);
                s.put("frame_bounds", "skipped (p != 2)");
            }
            (schedule, report, ok)
        }
    };
    let pass = report.all_pass() && extra_pass;
    s.num("max_ratio", report.max_ratio);
    s.put("all_pass", pass);
    Ok(RunOutcome {
        pass,
        schedule,
        report,
        summary: s.0,
    })
}

pub fn write_schedule_csv<W: Write>(schedule: &PowerSchedule, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = crate::construct::csv_err;
    w.write_record(["k", "alpha_k", "binding"]).map_err(err)?;
    for (i, step) in schedule.steps.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            step.alpha.to_string(),
            step.binding.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

/// Loads the config, runs, and writes `schedule.csv`, `report.csv` and
/// `summary.txt`.
pub fn run(args: &Args) -> Result<RunOutcome> {
    let cfg = RunConfig::load(&args.config)?;
    let outcome = execute(&cfg, args.pipeline, args.trunc, args.jobs)?;
    let dir = args
        .out
        .clone()
        .or(cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    write_schedule_csv(
        &outcome.schedule,
        BufWriter::new(File::create(dir.join("schedule.csv"))?),
    )?;
    outcome
        .report
        .write_csv(BufWriter::new(File::create(dir.join("report.csv"))?))?;
    std::fs::write(dir.join("summary.txt"), outcome.summary_text())?;
    Ok(outcome)
}

/// 0 when every check passes, 1 when a bound fails, 2 on invalid input.
pub fn exit_code(result: &Result<RunOutcome>) -> i32 {
    match result {
        Ok(o) if o.pass => 0,
        Ok(_) => 1,
        Err(_) => 2,
    }
}

pub fn main_entry() -> i32 {
    let args = Args::parse();
    let result = run(&args);
    match &result {
        Ok(o) => print!("{}", o.summary_text()),
        Err(e) => eprintln!("suborbit: {e}"),
    }
    exit_code(&result)
}
