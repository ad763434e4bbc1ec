//! One function per subcommand. Each fills a [`Report`]; the caller
//! writes it and maps the outcome to an exit code.

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use hartman_core::conjugacy::{
    a_priori_sup, check_holder_conditions, conjugacy_budget, conjugacy_residual, empirical_holder,
    empirical_holder_bound, max_alpha, pairing_budget, pairing_residual, select_alpha_eps, solve_v_with,
    solve_w_with, ConjugacyProblem, HolderCertificate, SolveOptions, Strategy,
};
use hartman_core::linspace::{adapted_renorm, falsify_power_certificate, power_certificate};
use hartman_core::localize::{build_local, CutoffProfile};
use hartman_core::maps::falsify_certificate;
use hartman_core::paramdep::{check_inverse_dependence, default_cloud, sweep_sigma, sweep_tau, SweepReport};
use hartman_core::{sampling, NormSpec, Vector};

use crate::config::{ConfigError, RunConfig};
use crate::report::{Report, ResidualRow};

/// Relative slack on sampled norm comparisons.
const NORM_SLACK: f64 = 1e-9;

pub fn check(cfg: &RunConfig, seed: u64, rep: &mut Report) -> Result<()> {
    let sys = cfg.system().context("checking hyperbolicity")?;
    let c = sys.constants();
    rep.info("field", sys.field().to_string());
    rep.bound("a1", c.a1);
    rep.bound("a2inv", c.a2inv);
    rep.bound("a_norm", c.a_norm);
    rep.bound("a_inv_norm", c.a_inv_norm);
    rep.check("hyperbolic", c.a1 < 1.0 && c.a2inv < 1.0);
    for (label, g) in [("g", cfg.g()?), ("h", cfg.h()?)] {
        if g.is_identically_zero() {
            continue;
        }
        let pairs = sampling::pair_cloud(sys.field(), sys.dim(), cfg.holder.pairs, seed);
        let f = falsify_certificate(&g, sys.norm_spec(), &pairs)?;
        rep.bound(&format!("{label}_sup"), g.sup());
        rep.bound(&format!("{label}_lip"), g.lip());
        rep.empirical(&format!("{label}_sup"), f.max_sup);
        rep.empirical(&format!("{label}_lip_ratio"), f.max_lip_ratio);
        rep.check(&format!("{label}_certificate_not_refuted"), !f.refutes(g.cert(), NORM_SLACK));
    }
    Ok(())
}

pub fn renorm(cfg: &RunConfig, seed: u64, rep: &mut Report) -> Result<()> {
    let a = cfg.matrix()?;
    let field = a.field();
    let theta = cfg.renorm.theta.ok_or_else(|| ConfigError("renorm.theta is required".into()))?;
    let c = match cfg.renorm.c {
        Some(c) => c,
        None => power_certificate(&a, &NormSpec::CoordMax, theta, cfg.renorm.kmax)?,
    };
    let norm = adapted_renorm(&a, NormSpec::CoordMax, theta, c)?;
    let NormSpec::Renorm(r) = &norm else { unreachable!() };
    rep.info("n", r.n as i64);
    rep.bound("c", c);
    rep.bound("sigma", r.sigma());
    rep.bound("contraction", r.contraction_bound());
    if let Ok(inv) = r.inverse_bound() {
        rep.bound("inverse", inv);
    }
    let mut rng = sampling::rng(seed);
    let worst_power = falsify_power_certificate(&a, &NormSpec::CoordMax, theta, c, cfg.renorm.kmax.min(50), 1000, &mut rng)?;
    rep.empirical("power_certificate_ratio", worst_power);
    rep.check("power_certificate_not_refuted", worst_power <= 1.0 + NORM_SLACK);

    let bound = r.contraction_bound();
    let xs: Vec<Vector> = (0..cfg.renorm.samples).map(|_| sampling::random_vector(field, a.cols(), 1.0, &mut rng)).collect();
    let ratios: Vec<(f64, f64)> = xs
        .par_iter()
        .map(|x| {
            let nx = norm.norm(x)?;
            let q = if nx == 0.0 { 0.0 } else { norm.norm(&a.mul_vec(x))? / nx };
            Ok((nx, q))
        })
        .collect::<hartman_core::Result<_>>()?;
    let worst = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    for (i, (nx, q)) in ratios.iter().enumerate().take(cfg.solve.points) {
        rep.row(ResidualRow { point_index: i, radius: *nx, residual: *q, bound });
    }
    rep.empirical("operator_norm", worst);
    rep.check("operator_norm_within_bound", worst <= bound + NORM_SLACK);
    rep.check("contraction", bound < 1.0);
    if field.is_ultrametric() {
        let pairs = sampling::pair_cloud(field, a.cols(), cfg.renorm.pairs, seed ^ 0x5eed);
        let violations = pairs
            .par_iter()
            .map(|(x, y)| {
                let lhs = norm.norm(&(x + y))?;
                Ok(usize::from(lhs > norm.norm(x)?.max(norm.norm(y)?) * (1.0 + 1e-12)))
            })
            .collect::<hartman_core::Result<Vec<_>>>()?
            .into_iter()
            .sum::<usize>();
        rep.empirical("ultrametric_violations", violations as f64);
        rep.check("ultrametric", violations == 0);
    }
    Ok(())
}

fn options(cfg: &RunConfig) -> Result<SolveOptions> {
    let strategy = match cfg.solve.strategy.as_str() {
        "orbit" => Strategy::Orbit,
        "word_tree" => Strategy::WordTree { cap: cfg.solve.depth_cap },
        other => bail!(ConfigError(format!("solve.strategy must be `orbit` or `word_tree`, got `{other}`"))),
    };
    Ok(SolveOptions { strategy, ..Default::default() })
}

fn problem(cfg: &RunConfig) -> Result<ConjugacyProblem> {
    let sys = cfg.system().context("building the linear system")?;
    Ok(ConjugacyProblem::new(sys, cfg.g()?, cfg.h()?).context("setting up the conjugacy problem")?)
}

pub fn solve(cfg: &RunConfig, seed: u64, rep: &mut Report) -> Result<()> {
    let p = problem(cfg)?;
    let field = p.field();
    let dim = p.sys().dim();
    let opts = options(cfg)?;
    let target = cfg.solve.target_trunc;
    let v = solve_v_with(&p, target, opts.clone()).context("solving for v")?;
    let w = solve_w_with(&p, target, opts).context("solving for w")?;
    rep.info("g", p.g().name().to_string());
    rep.info("h", p.h().name().to_string());
    rep.info("depth", v.depth() as i64);
    rep.bound("lambda", p.lambda());
    rep.bound("truncation_v", v.truncation());
    rep.bound("truncation_w", w.truncation());
    rep.bound("a_priori_sup_v", a_priori_sup(&p));
    rep.bound("a_priori_sup_w", w.a_priori_sup());

    let points = sampling::mixed_cloud(field, dim, cfg.solve.points, seed);
    let sys = p.sys();
    let rows = points
        .par_iter()
        .map(|x| {
            let vx = v.evaluate(x)?;
            let wx = w.evaluate(x)?;
            Ok((
                sys.norm(x)?,
                sys.norm(&vx)?,
                sys.norm(&wx)?,
                conjugacy_residual(&v, x)?,
                conjugacy_budget(&v, x)?,
                conjugacy_residual(&w, x)?,
                conjugacy_budget(&w, x)?,
            ))
        })
        .collect::<hartman_core::Result<Vec<_>>>()?;
    let max = |f: fn(&(f64, f64, f64, f64, f64, f64, f64)) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let v_sup = max(|r| r.1);
    let w_sup = max(|r| r.2);
    rep.empirical("v_sup", v_sup);
    rep.empirical("w_sup", w_sup);
    rep.check("v_sup_within_a_priori", v_sup <= a_priori_sup(&p) + v.truncation() + NORM_SLACK);
    rep.check("w_sup_within_a_priori", w_sup <= w.a_priori_sup() + w.truncation() + NORM_SLACK);
    rep.empirical("v_residual_max", max(|r| r.3));
    rep.empirical("w_residual_max", max(|r| r.5));
    rep.check("v_residual", rows.iter().all(|r| r.3 <= r.4));
    rep.check("w_residual", rows.iter().all(|r| r.5 <= r.6));
    for (i, r) in rows.iter().enumerate() {
        rep.row(ResidualRow { point_index: i, radius: r.0, residual: r.3, bound: r.4 });
    }

    match select_alpha_eps(&p) {
        Ok(cert) => {
            let pr = points
                .par_iter()
                .map(|x| Ok((pairing_residual(&v, &w, x)?, pairing_budget(&v, &w, &cert, x)?)))
                .collect::<hartman_core::Result<Vec<_>>>()?;
            rep.empirical("pairing_residual_max", pr.iter().map(|r| r.0).fold(0.0, f64::max));
            rep.check("pairing", pr.iter().all(|(r, b)| r <= b));
        }
        Err(e) => rep.info("pairing_skipped", format!("no Hölder certificate: {e}")),
    }
    Ok(())
}

pub fn holder(cfg: &RunConfig, seed: u64, rep: &mut Report) -> Result<()> {
    let p = problem(cfg)?;
    let alpha_max = max_alpha(&p).context("locating the Hölder exponent range")?;
    let cert = match (cfg.holder.alpha, cfg.holder.eps) {
        (Some(alpha), Some(eps)) => HolderCertificate { alpha, eps, alpha_max, delta_gh_s: f64::NAN, delta_gh_u: f64::NAN },
        (None, None) => select_alpha_eps(&p)?,
        _ => bail!(ConfigError("give both holder.alpha and holder.eps or neither".into())),
    };
    rep.bound("alpha_max", alpha_max);
    rep.bound("alpha", cert.alpha);
    rep.bound("eps", cert.eps);
    let hr = check_holder_conditions(&p, &cert);
    rep.bound("lhs_s_gh", hr.lhs_s[0]);
    rep.bound("lhs_s_hg", hr.lhs_s[1]);
    rep.bound("lhs_u_gh", hr.lhs_u[0]);
    rep.bound("lhs_u_hg", hr.lhs_u[1]);
    rep.check("alpha_below_max", cert.alpha <= alpha_max);
    rep.check("conditions", hr.pass);

    let v = solve_v_with(&p, cfg.solve.target_trunc, options(cfg)?)?.with_cert(cert);
    let min_sep = cfg.holder.min_sep;
    let pairs = sampling::pair_cloud(p.field(), p.sys().dim(), cfg.holder.pairs, seed);
    let bound = empirical_holder_bound(&v, &cert, min_sep);
    let per_pair = pairs
        .par_iter()
        .map(|pair| {
            let d = p.sys().norm(&(&pair.0 - &pair.1))?;
            Ok((d, empirical_holder(&v, cert.alpha, std::slice::from_ref(pair), min_sep)?))
        })
        .collect::<hartman_core::Result<Vec<_>>>()?;
    let worst = per_pair.iter().map(|r| r.1).fold(0.0, f64::max);
    for (i, (d, q)) in per_pair.iter().enumerate().filter(|(_, r)| r.0 >= min_sep).take(cfg.solve.points) {
        rep.row(ResidualRow { point_index: i, radius: *d, residual: *q, bound });
    }
    rep.bound("empirical_holder_bound", bound);
    rep.empirical("holder_quotient_max", worst);
    rep.check("empirical_holder", worst <= bound);
    Ok(())
}

pub fn linearize(cfg: &RunConfig, seed: u64, rep: &mut Report) -> Result<()> {
    let sys = cfg.system().context("building the linear system")?;
    let r = cfg.remainder()?;
    let (alpha, eps) = match (cfg.holder.alpha, cfg.holder.eps) {
        (Some(a), Some(e)) => (a, e),
        _ => bail!(ConfigError("linearize needs holder.alpha and holder.eps".into())),
    };
    let field = sys.field();
    let loc = build_local(sys.clone(), &r, alpha, eps, CutoffProfile::for_field(field), cfg.solve.target_trunc)
        .context("building the local linearization")?;
    rep.info("remainder", r.name().to_string());
    rep.bound("delta", loc.delta);
    rep.bound("s", loc.s);
    rep.bound("u", loc.u);
    rep.bound("w_radius", loc.w_rad);
    rep.bound("cutoff_sup", loc.g.sup());
    rep.bound("cutoff_lip", loc.g.lip());
    rep.bound("truncation", loc.sol_v.truncation());
    rep.check("holder_conditions", loc.holder.pass);

    let zero = Vector::zeros(field, sys.dim());
    rep.check("fixes_origin", loc.h(&zero)?.is_zero());

    let n = linearize_points(cfg);
    let mut points: Vec<Vector> = sampling::ball_cloud(field, sys.dim(), loc.u, n * 4, seed)
        .into_iter()
        .filter(|y| sys.norm(&sys.apply(y)).is_ok_and(|a| a < loc.u))
        .collect();
    points.truncate(n);
    rep.info("local_points", points.len() as i64);
    let rows = points
        .par_iter()
        .map(|y| Ok((sys.norm(y)?, loc.local_residual(y)?, loc.local_budget(y)?)))
        .collect::<hartman_core::Result<Vec<_>>>()?;
    rep.empirical("local_residual_max", rows.iter().map(|r| r.1).fold(0.0, f64::max));
    rep.check("local_conjugacy", !rows.is_empty() && rows.iter().all(|r| r.1 <= r.2));
    for (i, r) in rows.iter().enumerate() {
        rep.row(ResidualRow { point_index: i, radius: r.0, residual: r.1, bound: r.2 });
    }

    // H(U) inside O (the ball where the cutoff agrees with R), W inside H(U)
    let t = loc.sol_v.truncation().max(loc.sol_w.truncation());
    let slack = t + hartman_core::conjugacy::arithmetic_slack(field, loc.s);
    let u_pts = sampling::ball_cloud(field, sys.dim(), loc.u, n, seed ^ 1);
    let h_out = u_pts.par_iter().map(|y| sys.norm(&loc.h(y)?)).collect::<hartman_core::Result<Vec<_>>>()?;
    let h_out_max = h_out.iter().copied().fold(0.0, f64::max);
    rep.empirical("h_of_u_max_norm", h_out_max);
    rep.check("h_of_u_inside_o", h_out.iter().all(|&a| a < loc.s + slack));
    let w_pts = sampling::ball_cloud(field, sys.dim(), loc.w_rad, n, seed ^ 2);
    let back = w_pts.par_iter().map(|z| sys.norm(&loc.h_inv(z)?)).collect::<hartman_core::Result<Vec<_>>>()?;
    rep.empirical("h_inv_of_w_max_norm", back.iter().copied().fold(0.0, f64::max));
    rep.check("w_inside_h_of_u", back.iter().all(|&a| a < loc.u + slack));
    Ok(())
}

fn linearize_points(cfg: &RunConfig) -> usize {
    cfg.linearize.as_ref().map_or(1000, |l| l.points)
}

pub fn sweep(cfg: &RunConfig, seed: u64, rep: &mut Report) -> Result<()> {
    let sw = cfg.sweep.as_ref().ok_or_else(|| ConfigError("sweep needs a [sweep] table".into()))?;
    if sw.params.len() < 2 {
        bail!(ConfigError("sweep.params needs at least two values".into()));
    }
    let sys = cfg.system().context("building the linear system")?;
    let family = cfg.family()?;
    let members = sw.params.iter().map(|&t| family.member(t)).collect::<hartman_core::Result<Vec<_>>>()?;
    let points = default_cloud(sys.field(), sys.dim(), sw.points, seed);
    let ball = members.iter().map(|g| g.sup().max(g.lip())).fold(0.0, f64::max);
    let delta = sw.delta.unwrap_or(ball);
    rep.info("family", family.name.clone());
    rep.bound("delta", delta);
    let report: SweepReport = match sw.kind.as_str() {
        "sigma" => sweep_sigma(sys.clone(), &family, &sw.params, &points, delta, cfg.solve.target_trunc)?,
        "tau" => {
            let cert = match (cfg.holder.alpha, cfg.holder.eps) {
                (Some(alpha), Some(eps)) => {
                    HolderCertificate { alpha, eps, alpha_max: f64::NAN, delta_gh_s: f64::NAN, delta_gh_u: f64::NAN }
                }
                _ => {
                    let widest = members.iter().max_by(|a, b| a.sup().max(a.lip()).total_cmp(&b.sup().max(b.lip()))).unwrap();
                    select_alpha_eps(&ConjugacyProblem::linearization(sys.clone(), widest.clone())?)?
                }
            };
            rep.bound("alpha", cert.alpha);
            rep.bound("eps", cert.eps);
            rep.check(
                "delta_admissible",
                hartman_core::conjugacy::delta_admissible(&sys.constants(), cert.alpha, cert.eps, delta),
            );
            sweep_tau(sys.clone(), &family, &cert, &sw.params, &points, delta, cfg.solve.target_trunc)?
        }
        "inverse" => {
            let lam = sw.lambda.unwrap_or_else(|| members.iter().map(|g| g.lip()).fold(0.0, f64::max) * sys.constants().a_inv_norm);
            rep.bound("lambda", lam);
            check_inverse_dependence(&sys, &family, &sw.params, &points, lam)?
        }
        other => bail!(ConfigError(format!("sweep.kind must be sigma, tau or inverse, got `{other}`"))),
    };
    rep.info("cloud", report.cloud.clone());
    rep.bound("theoretical_constant", report.theoretical_constant);
    rep.bound("slack", report.slack);
    rep.bound("exponent", report.exponent);
    rep.empirical("empirical_constant", report.empirical_constant);
    rep.empirical("auxiliary_violations", report.auxiliary_violations as f64);
    rep.check(&format!("{}_sweep", sw.kind), report.pass());
    let k = report.theoretical_constant + report.slack;
    for (i, (pd, sd)) in report.pairs.iter().enumerate() {
        rep.row(ResidualRow { point_index: i, radius: *pd, residual: *sd, bound: k * pd.powf(report.exponent) });
    }
    Ok(())
}
