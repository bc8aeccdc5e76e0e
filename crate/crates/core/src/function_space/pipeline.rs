use super::gabor::CertifiedFunction;
use super::grid::GridFunction;
use crate::construct::{par_map, ErrorReport, ErrorRow};
use crate::error::{Error, Result};
use crate::scale::Scaled;
use crate::schedule::{build_schedule, EpsSchedule, FunctionRule, PowerSchedule};

#[derive(Debug, Clone)]
pub struct FunctionRun {
    /// The rule the schedule was built from, kept for re-verification.
    pub rule: FunctionRule,
    pub schedule: PowerSchedule,
    pub report: ErrorReport,
    pub lambda: f64,
    pub mu: f64,
    pub norm_s: f64,
    pub norm_tminus1: f64,
    /// Length of the grid the suborbit was evaluated on.
    pub working_length: f64,
}

/// `T^{alpha(k)} phi` on the grid, `phi = sum_j S^{alpha(j)} f_j`.
fn image(family: &[GridFunction], alphas: &[u64], lambda: f64, k: usize) -> Result<GridFunction> {
    let first = &family[0];
    let mut acc = GridFunction::zeros(first.q(), first.length(), first.p, first.weight)?;
    let alpha_k = alphas[k - 1] as i64;
    for (f, &alpha_j) in family.iter().zip(alphas) {
        let delta = alpha_k - alpha_j as i64;
        acc.add_scaled(&Scaled::new(lambda, delta, f.translate(-delta)))?;
    }
    Ok(acc)
}

/// Power schedule and per-k error report for a certified half-line family.
/// `mu` defaults to the smallest certificate rate. The grid is extended so
/// that no translate leaves it; any mass that still does is reported as
/// allowance. The quadrature column is the Richardson estimate from the
/// grid with twice the step.
pub fn run_function_pipeline(
    family: &[CertifiedFunction],
    lambda: f64,
    mu: Option<f64>,
    eps: &EpsSchedule,
    jobs: usize,
) -> Result<FunctionRun> {
    let first = &family
        .first()
        .ok_or_else(|| Error::InvalidInput("empty function family".into()))?
        .f;
    for (i, m) in family.iter().enumerate() {
        if !m.f.same_grid(first) {
            return Err(Error::GridMismatch(format!(
                "member {} uses a different grid, exponent or weight",
                i + 1
            )));
        }
        if !m.cert.holds(&m.f) {
            return Err(Error::Precondition(format!(
                "decay certificate of member {} fails on its grid",
                i + 1
            )));
        }
    }
    if first.q() % 2 != 0 {
        return Err(Error::GridMismatch(format!(
            "the quadrature estimate needs an even q, got {}",
            first.q()
        )));
    }
    let p = first.p;
    let norm_t1 = first.weight.norm_t1_bound(p);
    if !(lambda > norm_t1 && lambda.is_finite()) {
        return Err(Error::LambdaTooSmall {
            lambda,
            norm_r: norm_t1,
        });
    }
    let norm_s = norm_t1 / lambda;
    let norm_tminus1 = first.weight.norm_tminus1_bound(p);
    let cert_mu = family
        .iter()
        .map(|m| m.cert.mu)
        .fold(f64::INFINITY, f64::min);
    let mu = match mu {
        None => cert_mu,
        Some(mu) if mu <= cert_mu => mu,
        Some(mu) => {
            return Err(Error::Precondition(format!(
                "mu = {mu} exceeds the certified decay rate {cert_mu}"
            )))
        }
    };

    let norms: Vec<f64> = family.iter().map(|m| m.f.lp_norm()).collect();
    let rule = FunctionRule::new(
        norms,
        norm_s,
        lambda,
        norm_tminus1,
        mu,
        family.iter().map(|m| m.cert.a_k).collect(),
        family.iter().map(|m| m.cert.c).collect(),
        eps.clone(),
    )?;
    let schedule = build_schedule(&rule)?;
    let alphas = schedule.alphas();

    let longest = family.iter().map(|m| m.f.length()).fold(0.0, f64::max);
    let working_length = longest.ceil() + *alphas.last().unwrap_or(&0) as f64;
    let padded = family
        .iter()
        .map(|m| m.f.padded(working_length))
        .collect::<Result<Vec<_>>>()?;

    let rows = par_map(padded.len(), jobs, |i| {
        let k = i + 1;
        let e = padded[i].sub(&image(&padded, &alphas, lambda, k)?)?;
        let actual = e.lp_norm();
        let quad = (actual - e.coarsen()?.lp_norm()).abs() / 3.0;
        Ok(ErrorRow::new(
            k,
            alphas[i],
            actual,
            eps.tail(k),
            e.lost_mass,
            Some(quad),
        ))
    })?;
    Ok(FunctionRun {
        rule,
        schedule,
        report: ErrorReport::from_rows(rows),
        lambda,
        mu,
        norm_s,
        norm_tminus1,
        working_length,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::certificate::{fit_tail_certificate, DecayCertificate};
    use crate::function_space::gabor::gabor_half_system;
    use crate::function_space::grid::GridGenerator;
    use crate::function_space::weight::ModerateWeight;

    fn expo(q: usize, length: f64) -> GridFunction {
        GridFunction::generate(
            &GridGenerator::Exponential {
                amplitude: 1.0,
                rate: 1.0,
            },
            q,
            length,
            1.0,
            ModerateWeight::Constant,
        )
        .unwrap()
    }

    #[test]
    fn single_function_is_exact() {
        let g = expo(16, 20.0);
        let fit = fit_tail_certificate(&g, 0.0).unwrap();
        let m = CertifiedFunction {
            f: g,
            cert: DecayCertificate {
                c: fit.c,
                a_k: 0,
                mu: fit.mu,
            },
        };
        let run =
            run_function_pipeline(&[m], 1.5, None, &EpsSchedule::plain(1.0).unwrap(), 1).unwrap();
        assert_eq!(run.schedule.alphas(), vec![0]);
        assert_eq!(run.report.rows[0].actual_error, 0.0);
        assert!(run.report.all_pass());
    }

    fn gabor_run(eps: f64, k: usize) -> FunctionRun {
        let g = expo(16, 20.0);
        let fit = fit_tail_certificate(&g, 0.0).unwrap();
        let fam: Vec<CertifiedFunction> = gabor_half_system(&g, &fit, 1.0, 1.0, 1, 3)
            .unwrap()
            .into_iter()
            .take(k)
            .map(|m| m.member)
            .collect();
        run_function_pipeline(&fam, 1.5, None, &EpsSchedule::plain(eps).unwrap(), 2).unwrap()
    }

    #[test]
    fn small_gabor_family_passes() {
        let run = gabor_run(1.0, 5);
        assert!(run.report.all_pass(), "{:?}", run.report);
        assert!(run.report.rows.iter().all(|r| r.allowance == 0.0));
    }

    #[test]
    fn tighter_eps_never_lowers_powers() {
        let loose = gabor_run(1.0, 5).schedule.alphas();
        let tight = gabor_run(0.1, 5).schedule.alphas();
        for (a, b) in loose.iter().zip(&tight) {
            assert!(b >= a, "{loose:?} vs {tight:?}");
        }
    }

    #[test]
    fn growth_condition_checked() {
        let g = expo(16, 20.0);
        let fit = fit_tail_certificate(&g, 0.0).unwrap();
        let m = CertifiedFunction {
            f: g,
            cert: DecayCertificate {
                c: fit.c,
                a_k: 0,
                mu: fit.mu,
            },
        };
        let r = run_function_pipeline(
            &[m.clone(), m],
            3.0,
            None,
            &EpsSchedule::plain(1.0).unwrap(),
            1,
        );
        assert!(matches!(r, Err(Error::GrowthCondition { .. })));
    }
}
