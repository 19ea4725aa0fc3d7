use anyhow::{bail, Context, Result};
use gauss_extremes::asymptotics::{
    classic_nonstationary, locally_stationary_trend, nonstationary_trend, ruin_asymptotic,
    ruin_exact, ApproxResult, Branch, Cached, Chain, ClosedForm, ConstantSource, ConstantsProvider,
    MonteCarlo, RegimeParams, StationaryPeak,
};
use gauss_extremes::exceedance::{
    asymptotic_validation, mc_sup_prob, mc_sup_prob_nested, refine_extrapolate,
    ruin_time_change_trend, ValidationOptions, ValidationReport,
};
use gauss_extremes::passage::{
    bridge_passage_cdf, cond_passage_cdf_locstat, mc_conditional_passage, ruin_passage_cdf,
    PassageScaling,
};
use gauss_extremes::pickands::{
    pickands_estimate, pickands_limit, piterbarg_estimate, piterbarg_limit, Estimator,
    GridRefinement, LimitOptions, PiterbargSpec,
};
use gauss_extremes::special::normal_cdf;
use gauss_extremes::{
    drifted_sup, sample_paths, CorrelationModel, Grid, McBudget, PeakPosition, TrendFunction,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::params::*;

/// What a command produced: the JSON result, optional CSV rows and whether
/// a validation verdict failed.
pub struct Outcome {
    pub result: Value,
    pub rows: Option<Vec<Row>>,
    pub passed: bool,
}

impl Outcome {
    fn ok(result: Value) -> Self {
        Self {
            result,
            rows: None,
            passed: true,
        }
    }
}

/// One line of the CSV table.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Row {
    pub u: f64,
    pub p_mc: Option<f64>,
    pub p_mc_stderr: Option<f64>,
    pub p_exact: Option<f64>,
    pub p_asymptotic: Option<f64>,
    pub ratio_mc_asym: Option<f64>,
    pub ratio_exact_asym: Option<f64>,
    pub n: Option<u64>,
    pub grid_step: Option<f64>,
    pub seed: Option<u64>,
}

pub const CSV_HEADER: &str =
    "u,p_mc,p_mc_stderr,p_exact,p_asymptotic,ratio_mc_asym,ratio_exact_asym,n,grid_step,seed";

impl Row {
    pub fn csv(&self) -> String {
        fn cell<T: ToString>(v: Option<T>) -> String {
            v.map_or_else(String::new, |x| x.to_string())
        }
        [
            self.u.to_string(),
            cell(self.p_mc),
            cell(self.p_mc_stderr),
            cell(self.p_exact),
            cell(self.p_asymptotic),
            cell(self.ratio_mc_asym),
            cell(self.ratio_exact_asym),
            cell(self.n),
            cell(self.grid_step),
            cell(self.seed),
        ]
        .join(",")
    }
}

fn model(name: &str, alpha: f64, a: f64, delta: f64, sigma: f64) -> Result<CorrelationModel> {
    Ok(match name {
        "fbm" => CorrelationModel::fbm(alpha)?,
        "stationary" => CorrelationModel::stationary_power(alpha, a)?,
        "bridge" => CorrelationModel::BrownianBridge,
        "ruin" => CorrelationModel::risk_time_change(delta, sigma)?,
        other => bail!("unknown model `{other}` (fbm, stationary, bridge, ruin)"),
    })
}

fn trend(p: &ConstantParams) -> Result<TrendFunction> {
    let f = match p.trend.as_str() {
        "zero" => TrendFunction::Zero,
        "linear" => TrendFunction::Linear { c: p.c },
        "power" => TrendFunction::Power {
            c: p.c,
            gamma: p.gamma,
        },
        "abs-power" => TrendFunction::AbsPowerTwoSided {
            c: p.c,
            gamma: p.gamma,
        },
        "ruin" => TrendFunction::ruin_h(p.c, p.delta, p.sigma)?,
        other => bail!("unknown trend `{other}` (zero, linear, power, abs-power, ruin)"),
    };
    f.validate()?;
    Ok(f)
}

pub fn position(s: &str) -> Result<PeakPosition> {
    let near = |d: &str| -> Result<f64> {
        d.parse()
            .with_context(|| format!("bad distance in position `{s}`"))
    };
    let p = match s.split_once(':') {
        None => match s {
            "interior" => PeakPosition::Interior,
            "left" => PeakPosition::LeftBoundary,
            "right" => PeakPosition::RightBoundary,
            _ => bail!("unknown position `{s}`"),
        },
        Some(("near-left", d)) => PeakPosition::NearLeft(near(d)?),
        Some(("near-right", d)) => PeakPosition::NearRight(near(d)?),
        Some(_) => bail!("unknown position `{s}`"),
    };
    p.validate()?;
    Ok(p)
}

fn estimator(s: &str) -> Result<Estimator> {
    Ok(match s {
        "direct" => Estimator::Direct,
        "shift-averaged" => Estimator::ShiftAveraged,
        other => bail!("unknown estimator `{other}` (direct, shift-averaged)"),
    })
}

fn refinement(stride: usize) -> Option<GridRefinement> {
    (stride > 1).then_some(GridRefinement {
        coarse_stride: stride,
    })
}

fn provider(
    kind: &str,
    mc_n: u64,
    seed: u64,
    grid_step: f64,
    schedule: &[f64],
    tol: f64,
) -> Result<Box<dyn ConstantsProvider>> {
    let mc = || {
        Cached::new(MonteCarlo {
            grid_step,
            budget: McBudget::new(mc_n, seed),
            limit: LimitOptions {
                schedule: schedule.to_vec(),
                tol,
                refine: refinement(2),
            },
        })
    };
    Ok(match kind {
        "closed-form" => Box::new(ClosedForm),
        "monte-carlo" => Box::new(mc()),
        "auto" => Box::new(Chain(vec![Box::new(ClosedForm), Box::new(mc())])),
        other => bail!("unknown constants source `{other}` (closed-form, monte-carlo, auto)"),
    })
}

pub fn simulate(p: &SimulateParams) -> Result<Outcome> {
    let m = model(&p.model, p.alpha, p.a, p.delta, p.sigma)?;
    let grid = Grid::uniform(p.start, p.end, p.intervals)?;
    let drift: Vec<f64> = grid.points().iter().map(|t| p.drift * t).collect();
    let batch = sample_paths(&m, &grid, p.paths, p.seed)?;
    let sups = drifted_sup(&batch, &drift)?;
    let paths: Vec<&[f64]> = batch.rows().collect();
    let mut result = json!({
        "grid": grid.points(),
        "paths": paths,
        "drifted_sup": sups,
    });
    if let Some(u) = p.u {
        result["exceedance"] =
            serde_json::to_value(mc_sup_prob(&m, &drift, u, &grid, p.n, p.seed)?)?;
    }
    Ok(Outcome::ok(result))
}

pub fn constant(p: &ConstantParams) -> Result<Outcome> {
    let budget = McBudget::new(p.n, p.seed).with_estimator(estimator(&p.estimator)?);
    let estimate = match (p.kind.as_str(), p.end) {
        ("pickands", Some(t)) => pickands_estimate(p.alpha, t, p.grid_step, budget)?,
        ("pickands", None) => pickands_limit(
            p.alpha,
            p.grid_step,
            budget,
            &p.schedule,
            refinement(p.refine_stride),
        )?,
        ("piterbarg", Some(end)) => piterbarg_estimate(
            &PiterbargSpec {
                alpha: p.alpha,
                a: p.a,
                trend: trend(p)?,
                start: p.start,
                end,
                grid_step: p.grid_step,
            },
            budget,
        )?,
        ("piterbarg", None) => {
            let start = if p.two_sided {
                f64::NEG_INFINITY
            } else {
                p.start
            };
            let options = LimitOptions {
                schedule: p.schedule.clone(),
                tol: p.tol,
                refine: refinement(p.refine_stride),
            };
            piterbarg_limit(
                p.alpha,
                p.a,
                &trend(p)?,
                start,
                p.grid_step,
                budget,
                &options,
            )?
        }
        (other, _) => bail!("unknown constant kind `{other}` (pickands, piterbarg)"),
    };
    Ok(Outcome::ok(serde_json::to_value(estimate)?))
}

pub fn approx(case: &str, p: &ApproxParams) -> Result<Outcome> {
    let provider = provider(
        &p.constants,
        p.mc_n,
        p.seed,
        p.grid_step,
        &p.schedule,
        p.tol,
    )?;
    let provider = provider.as_ref();
    let pos = position(&p.position)?;
    let regime = || {
        RegimeParams::new(p.alpha, p.a, p.beta, p.b, p.u)
            .at(pos)
            .with_sigma(p.sigma)
    };
    let r: ApproxResult = match case {
        "classic" => classic_nonstationary(&regime(), provider)?,
        "locstat" => {
            let peak = StationaryPeak {
                a: p.a,
                c: p.c,
                gamma: p.gamma,
                position: pos,
            };
            locally_stationary_trend(p.u, p.alpha, peak, p.g_m, provider)?
        }
        "nonstat" => nonstationary_trend(
            &regime().with_trend(p.c, p.gamma).with_peak_value(p.g_m),
            provider,
        )?,
        "ruin" => {
            let r = ruin_asymptotic(p.u, p.c, p.delta, p.sigma, provider)?;
            let exact = ruin_exact(p.u, p.c, p.delta, p.sigma)?;
            let mut v = serde_json::to_value(&r)?;
            v["exact"] = json!(exact);
            v["ratio_exact_asym"] = json!(exact / r.value);
            return Ok(Outcome::ok(v));
        }
        other => bail!("unknown case `{other}` (classic, locstat, nonstat, ruin)"),
    };
    Ok(Outcome::ok(serde_json::to_value(r)?))
}

fn ruin_grid(first: f64, ratio: f64, max_step: f64) -> Result<Grid> {
    Ok(Grid::geometric(first, ratio, max_step, 1.0)?)
}

pub fn ruin(p: &RuinParams) -> Result<Outcome> {
    let provider = provider(
        &p.constants,
        p.mc_n,
        p.seed,
        p.grid_step,
        &p.schedule,
        p.tol,
    )?;
    let mut rows = Vec::new();
    let mut detail = Vec::new();
    let mc_setup = if p.n > 0 {
        let grid = ruin_grid(p.first_step, p.ratio, p.max_step)?;
        let trend = ruin_time_change_trend(p.c, p.delta, &grid)?;
        Some((
            grid,
            trend,
            CorrelationModel::risk_time_change(p.delta, p.sigma)?,
        ))
    } else {
        None
    };
    for &u in &p.u {
        let asym = ruin_asymptotic(u, p.c, p.delta, p.sigma, provider.as_ref())?;
        let exact = ruin_exact(u, p.c, p.delta, p.sigma)?;
        let mut row = Row {
            u,
            p_exact: Some(exact),
            p_asymptotic: Some(asym.value),
            ratio_exact_asym: Some(exact / asym.value),
            ..Row::default()
        };
        if let Some((grid, trend, m)) = &mc_setup {
            let e = mc_sup_prob(m, trend, u, grid, p.n, p.seed)?;
            row.p_mc = Some(e.p_hat);
            row.p_mc_stderr = Some(e.stderr);
            row.ratio_mc_asym = Some(e.p_hat / asym.value);
            row.n = Some(e.n);
            row.grid_step = Some(e.grid_step);
            row.seed = Some(e.seed);
        }
        detail.push(json!({ "u": u, "asymptotic": asym, "exact": exact }));
        rows.push(row);
    }
    Ok(Outcome {
        result: json!({ "rows": rows, "detail": detail }),
        rows: Some(rows),
        passed: true,
    })
}

pub fn passage_time(case: &str, p: &PassageParams) -> Result<Outcome> {
    let result = match case {
        "bridge" => {
            let grid = Grid::uniform(0.0, 1.0, p.grid)?;
            let trend: Vec<f64> = grid.points().iter().map(|t| -p.c * t).collect();
            let scaling = PassageScaling::bridge(p.u, p.c);
            let cdf = mc_conditional_passage(
                &CorrelationModel::BrownianBridge,
                &trend,
                p.u,
                &grid,
                p.n,
                p.seed,
                scaling,
            )?;
            let exact = |x: f64| bridge_passage_cdf(scaling.t_ref + x / scaling.scale, p.u, p.c);
            let limit = |x: f64| normal_cdf(4.0 * x);
            let points: Vec<Value> =
                p.x.iter()
                    .map(|&x| {
                        let e = cdf.at(x);
                        json!({
                            "x": x,
                            "empirical": e.p,
                            "lower": e.lower,
                            "upper": e.upper,
                            "exact": exact(x),
                            "limit": limit(x),
                        })
                    })
                    .collect();
            json!({
                "events": cdf.events,
                "n": cdf.n,
                "grid_step": cdf.grid_step,
                "seed": cdf.seed,
                "scaling": cdf.scaling,
                "points": points,
                "sup_distance_limit": cdf.sup_distance(&p.x, limit),
                "sup_distance_exact": cdf.sup_distance(&p.x, exact),
            })
        }
        "locstat" => {
            let pos = position(&p.position)?;
            let points = p
                .x
                .iter()
                .map(|&x| {
                    let v =
                        cond_passage_cdf_locstat(x, p.alpha, p.gamma, p.a, p.c, pos, &ClosedForm)?;
                    Ok(json!({ "x": x, "cdf": v }))
                })
                .collect::<Result<Vec<_>>>()?;
            json!({ "points": points })
        }
        "ruin" => {
            let points =
                p.x.iter()
                    .map(|&x| {
                        let v = ruin_passage_cdf(x, p.c, p.delta, p.sigma, &ClosedForm)?;
                        Ok(json!({ "x": x, "cdf": v }))
                    })
                    .collect::<Result<Vec<_>>>()?;
            json!({ "points": points })
        }
        other => bail!("unknown case `{other}` (bridge, locstat, ruin)"),
    };
    Ok(Outcome::ok(result))
}

fn report_rows(report: &ValidationReport) -> Vec<Row> {
    report
        .rows
        .iter()
        .map(|r| Row {
            u: r.u,
            p_mc: Some(r.mc.p_hat),
            p_mc_stderr: Some(r.mc.stderr),
            p_exact: r.p_exact,
            p_asymptotic: Some(r.p_asymptotic),
            ratio_mc_asym: Some(r.ratio),
            ratio_exact_asym: r.ratio_exact,
            n: Some(r.mc.n),
            grid_step: Some(r.mc.grid_step),
            seed: Some(r.mc.seed),
        })
        .collect()
}

pub fn validate(case: &str, p: &ValidateParams) -> Result<Outcome> {
    let options = ValidationOptions {
        tolerance: p.tolerance,
        z: p.z,
    };
    let (report, extra) = match case {
        "bridge" => {
            let grid = Grid::uniform(0.0, 1.0, p.grid)?;
            let trend: Vec<f64> = grid.points().iter().map(|t| -p.c * t).collect();
            let c = p.c;
            let theorem = match p.formula.as_str() {
                "stated" => false,
                "theorem" => true,
                other => bail!("unknown formula `{other}` (stated, theorem)"),
            };
            let asymptotic = |u: f64| {
                if theorem {
                    let t_u = u / (c + 2.0 * u);
                    let regime = RegimeParams::new(1.0, 2.0, 2.0, 1.0, u)
                        .with_sigma(0.5)
                        .with_moving_peak(-c * t_u, (t_u * (1.0 - t_u)).sqrt());
                    return nonstationary_trend(&regime, &ClosedForm);
                }
                let log_value = -2.0 * (u * u + c * u);
                Ok(ApproxResult {
                    value: log_value.exp(),
                    log_value,
                    branch: Branch::Below,
                    constant: 1.0,
                    constant_source: ConstantSource::ClosedForm,
                    exponent: 0.0,
                    tail_argument: 2.0 * (u * u + c * u).sqrt(),
                })
            };
            let refined = std::cell::RefCell::new(Vec::new());
            let mc = |u: f64| {
                let levels = mc_sup_prob_nested(
                    &CorrelationModel::BrownianBridge,
                    &trend,
                    u,
                    &grid,
                    p.levels,
                    p.n,
                    p.seed,
                )?;
                let r = if levels.len() >= 3 {
                    refine_extrapolate(&levels)?
                } else {
                    return Ok(*levels.last().unwrap());
                };
                refined
                    .borrow_mut()
                    .push(json!({ "u": u, "levels": levels, "refined": r }));
                Ok(r.estimate)
            };
            let exact = |u: f64| Ok((-2.0 * (u * u + c * u)).exp());
            let report = asymptotic_validation(&p.u, asymptotic, mc, Some(&exact), options)?;
            (report, json!({ "bias_correction": refined.into_inner() }))
        }
        "ruin" => {
            let grid = ruin_grid(p.first_step, p.ratio, p.max_step)?;
            let trend = ruin_time_change_trend(p.c, p.delta, &grid)?;
            let m = CorrelationModel::risk_time_change(p.delta, p.sigma)?;
            let asymptotic = |u: f64| ruin_asymptotic(u, p.c, p.delta, p.sigma, &ClosedForm);
            let mc = |u: f64| mc_sup_prob(&m, &trend, u, &grid, p.n, p.seed);
            let exact = |u: f64| ruin_exact(u, p.c, p.delta, p.sigma);
            let report = asymptotic_validation(&p.u, asymptotic, mc, Some(&exact), options)?;
            (report, json!({ "grid_points": grid.len() }))
        }
        other => bail!("unknown case `{other}` (bridge, ruin)"),
    };
    let rows = report_rows(&report);
    Ok(Outcome {
        result: json!({ "report": report, "details": extra }),
        rows: Some(rows),
        passed: report.passed,
    })
}
