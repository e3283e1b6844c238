use std::time::Instant;

use cwwr::eos::{isotherm as isotherm_curve, pressure_two_component, solve_two_component_with};
use cwwr::finite_volume::{
    convergence_sequence, f_v_value, laplace_integral, log_xi_two_component, one_component_identity, u_v_moments,
    FiniteVolumeSpec,
};
use cwwr::phase::{critical_mu, order_parameter as ybar_of, stationary_points, Tolerances};
use cwwr::specialfn::u_value;
use cwwr::{PhasePoint, RegionLabel};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::{emit, json as to_json, linspace, num, Csv, RunManifest};
use crate::svg;
use crate::{
    ClassifyArgs, ClassifyFormat, Failure, IsothermArgs, OracleCheckArgs, OrderParameterArgs, PhaseDiagramArgs,
    ReportFormat, Suite, TableFormat,
};

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn finite(name: &str, x: f64) -> Result<(), Failure> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("--{name} must be finite")))
    }
}

fn range(name: &str, lo: f64, hi: f64) -> Result<(), Failure> {
    finite(&format!("{name}-min"), lo)?;
    finite(&format!("{name}-max"), hi)?;
    if lo < hi {
        Ok(())
    } else {
        Err(usage(format!("--{name}-min must be below --{name}-max")))
    }
}

fn tolerances(tol: f64) -> Result<Tolerances, Failure> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(usage("--tol must be a non-negative number"));
    }
    Ok(Tolerances { eq: tol, crit: tol })
}

#[derive(Serialize)]
struct PhaseReport {
    y_star: f64,
    e_value: f64,
    rho0: f64,
    rho1: f64,
    /// Intensities of the two Poisson point processes describing the phase.
    poisson_intensities: [f64; 2],
}

#[derive(Serialize)]
struct ClassifyReport {
    manifest: RunManifest,
    point: PhasePoint,
    region: RegionLabel,
    root_count: Option<usize>,
    order_parameter: f64,
    near_tie: bool,
    phases: Vec<PhaseReport>,
    pressure: f64,
}

pub fn classify(args: &ClassifyArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let tol = tolerances(args.tol)?;
    let point = PhasePoint::new(args.a, args.mu0, args.mu1)?;
    let state = solve_two_component_with(&point, &tol)?;
    let root_count = if point.a > 0.0 {
        Some(stationary_points(&point)?.len())
    } else {
        None
    };
    let phases: Vec<PhaseReport> = state
        .solution
        .maximizers
        .iter()
        .zip(&state.phases)
        .map(|(m, d)| PhaseReport {
            y_star: m.y,
            e_value: m.e_value,
            rho0: d.rho0,
            rho1: d.rho1,
            poisson_intensities: [d.rho0, d.rho1],
        })
        .collect();
    let manifest = RunManifest::new(
        "classify",
        json!({"a": args.a, "mu0": args.mu0, "mu1": args.mu1}),
        json!({"eq": tol.eq, "crit": tol.crit}),
    );
    let body = match args.format {
        ClassifyFormat::Json => to_json(&ClassifyReport {
            manifest: manifest.clone(),
            point,
            region: state.solution.region,
            root_count,
            order_parameter: state.solution.order_parameter,
            near_tie: state.solution.near_tie,
            phases,
            pressure: state.pressure,
        })?,
        ClassifyFormat::Text => {
            let mut s = format!(
                "a = {}, mu0 = {}, mu1 = {}\nregion: {}\n",
                num(point.a),
                num(point.mu0),
                num(point.mu1),
                state.solution.region.as_str()
            );
            if let Some(n) = root_count {
                s += &format!("stationary points: {n}\n");
            }
            if state.solution.region == RegionLabel::Coexistence {
                s += &format!("ybar: {}\n", num(state.solution.order_parameter));
            }
            if state.solution.near_tie {
                s += "warning: two off-axis maxima agree within the tie tolerance\n";
            }
            for (i, ph) in phases.iter().enumerate() {
                s += &format!(
                    "phase {}: y_star = {}, rho0 = {}, rho1 = {}, Poisson intensities (z0, z1) = ({}, {})\n",
                    i + 1,
                    num(ph.y_star),
                    num(ph.rho0),
                    num(ph.rho1),
                    num(ph.poisson_intensities[0]),
                    num(ph.poisson_intensities[1])
                );
            }
            s += &format!("p: {}\n", num(state.pressure));
            s
        }
    };
    emit(args.out.as_deref(), &body, manifest, started)
}

#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    pub mu0: f64,
    pub mu1: f64,
    pub region: RegionLabel,
    pub root_count: usize,
    /// Largest global maximizer; in the coexistence region this is the
    /// species-0-rich phase `+ybar`.
    pub y_star: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub p: f64,
}

fn scan_cell(a: f64, mu0: f64, mu1: f64, tol: &Tolerances) -> cwwr::Result<Cell> {
    let point = PhasePoint::new(a, mu0, mu1)?;
    let state = solve_two_component_with(&point, tol)?;
    let k = state.phases.len() - 1;
    Ok(Cell {
        mu0,
        mu1,
        region: state.solution.region,
        root_count: stationary_points(&point)?.len(),
        y_star: state.solution.maximizers[k].y,
        rho0: state.phases[k].rho0,
        rho1: state.phases[k].rho1,
        p: state.pressure,
    })
}

#[derive(Serialize)]
struct PhaseDiagramReport<'a> {
    manifest: RunManifest,
    a: f64,
    critical_mu: f64,
    mu0: &'a [f64],
    mu1: &'a [f64],
    rows: &'a [Cell],
}

pub fn phase_diagram(args: &PhaseDiagramArgs) -> Result<(), Failure> {
    let started = Instant::now();
    if !(args.a.is_finite() && args.a > 0.0) {
        return Err(usage("--a must be positive for a phase-diagram scan"));
    }
    range("mu0", args.mu0_min, args.mu0_max)?;
    range("mu1", args.mu1_min, args.mu1_max)?;
    if args.mu0_steps < 2 || args.mu1_steps < 2 {
        return Err(usage("step counts must be at least 2"));
    }
    let tol = tolerances(args.tol)?;
    let g0 = linspace(args.mu0_min, args.mu0_max, args.mu0_steps);
    let g1 = linspace(args.mu1_min, args.mu1_max, args.mu1_steps);
    // Rows (fixed mu1) run in parallel; collect keeps index order.
    let rows: Vec<Vec<Cell>> = g1
        .par_iter()
        .map(|&mu1| g0.iter().map(|&mu0| scan_cell(args.a, mu0, mu1, &tol)).collect())
        .collect::<cwwr::Result<_>>()?;
    let cells: Vec<Cell> = rows.into_iter().flatten().collect();
    let manifest = RunManifest::new(
        "phase-diagram",
        json!({
            "a": args.a,
            "mu0_min": args.mu0_min, "mu0_max": args.mu0_max, "mu0_steps": args.mu0_steps,
            "mu1_min": args.mu1_min, "mu1_max": args.mu1_max, "mu1_steps": args.mu1_steps,
        }),
        json!({"eq": tol.eq, "crit": tol.crit}),
    );
    let body = match args.format {
        TableFormat::Csv => {
            let mut csv = Csv::new(&["mu0", "mu1", "region", "root_count", "y_star", "rho0", "rho1", "p"]);
            for c in &cells {
                csv.row(&[
                    num(c.mu0),
                    num(c.mu1),
                    c.region.as_str().to_string(),
                    c.root_count.to_string(),
                    num(c.y_star),
                    num(c.rho0),
                    num(c.rho1),
                    num(c.p),
                ]);
            }
            csv.finish()
        }
        TableFormat::Json => to_json(&PhaseDiagramReport {
            manifest: manifest.clone(),
            a: args.a,
            critical_mu: critical_mu(args.a),
            mu0: &g0,
            mu1: &g1,
            rows: &cells,
        })?,
        TableFormat::Svg => svg::phase_diagram(args.a, &g0, &g1, &cells, &to_json(&manifest)?)?,
    };
    emit(args.out.as_deref(), &body, manifest, started)
}

pub fn isotherm(args: &IsothermArgs) -> Result<(), Failure> {
    let started = Instant::now();
    range("rho", args.rho_min, args.rho_max)?;
    if args.rho_min <= 0.0 {
        return Err(usage("--rho-min must be positive"));
    }
    if args.points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    let grid = linspace(args.rho_min, args.rho_max, args.points);
    let curve = isotherm_curve(args.a, args.theta, &grid)?;
    let manifest = RunManifest::new(
        "isotherm",
        json!({"a": args.a, "theta": args.theta, "rho_min": args.rho_min, "rho_max": args.rho_max, "points": args.points}),
        json!({}),
    );
    let body = match args.format {
        TableFormat::Csv => {
            let mut csv = Csv::new(&["rho", "p_hat", "branch"]);
            for s in &curve.samples {
                csv.row(&[num(s.rho), num(s.p_hat), s.branch.as_str().to_string()]);
            }
            csv.finish()
        }
        TableFormat::Json => to_json(&json!({"manifest": manifest, "curve": curve}))?,
        TableFormat::Svg => svg::isotherm(&curve, &to_json(&manifest)?)?,
    };
    emit(args.out.as_deref(), &body, manifest, started)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OrderRow {
    pub mu: f64,
    pub ybar: f64,
    pub z_plus: f64,
    pub z_minus: f64,
    pub delta_rho: f64,
}

pub fn order_parameter(args: &OrderParameterArgs) -> Result<(), Failure> {
    let started = Instant::now();
    if !(args.a.is_finite() && args.a > 0.0) {
        return Err(usage("--a must be positive"));
    }
    range("mu", args.mu_min, args.mu_max)?;
    if args.points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    let rows: Vec<OrderRow> = linspace(args.mu_min, args.mu_max, args.points)
        .into_iter()
        .map(|mu| {
            let ybar = ybar_of(args.a, mu)?;
            let z_plus = u_value(args.a, mu + ybar)?;
            let z_minus = u_value(args.a, mu - ybar)?;
            Ok(OrderRow {
                mu,
                ybar,
                z_plus,
                z_minus,
                delta_rho: z_plus - z_minus,
            })
        })
        .collect::<cwwr::Result<_>>()?;
    let manifest = RunManifest::new(
        "order-parameter",
        json!({"a": args.a, "mu_min": args.mu_min, "mu_max": args.mu_max, "points": args.points}),
        json!({}),
    );
    let body = match args.format {
        TableFormat::Csv => {
            let mut csv = Csv::new(&["mu", "ybar", "z_plus", "z_minus", "delta_rho"]);
            for r in &rows {
                csv.row(&[num(r.mu), num(r.ybar), num(r.z_plus), num(r.z_minus), num(r.delta_rho)]);
            }
            csv.finish()
        }
        TableFormat::Json => to_json(&json!({
            "manifest": manifest,
            "a": args.a,
            "critical_mu": critical_mu(args.a),
            "rows": rows,
        }))?,
        TableFormat::Svg => svg::order_parameter(args.a, &rows, &to_json(&manifest)?)?,
    };
    emit(args.out.as_deref(), &body, manifest, started)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub params: Value,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: String, params: Value, residual: f64, tolerance: f64) -> Self {
        Check {
            name,
            params,
            residual,
            tolerance,
            pass: residual.is_finite() && residual <= tolerance,
        }
    }
}

#[derive(Serialize)]
struct Report<'a> {
    suite: &'static str,
    checks: &'a [Check],
    manifest: RunManifest,
}

const IDENTITY_4A_SETS: [(f64, f64, f64); 3] = [(1.0, 1.0, 0.0), (0.5, 3.0, 1.0), (2.0, 0.5, -1.0)];
const IDENTITY_20_SETS: [(f64, f64); 3] = [(0.0, 0.0), (1.0, -1.0), (1.5, 1.5)];
const MOMENT_POINTS: [f64; 3] = [-2.0, 0.0, 2.0];
const FD_STEP: f64 = 1e-4;

fn suite_defaults(suite: Suite) -> (&'static str, Vec<f64>, f64) {
    match suite {
        Suite::Identity4a => ("identity-4a", vec![2.0, 10.0, 50.0], 1e-12),
        Suite::Identity20 => ("identity-20", vec![50.0], 1e-8),
        Suite::Convergence => ("convergence", vec![25.0, 50.0, 100.0, 200.0], 0.02),
        Suite::Moments => ("moments", vec![50.0, 100.0], 1e-6),
    }
}

fn identity_4a(volumes: &[f64], tol: f64) -> cwwr::Result<Vec<Check>> {
    let jobs: Vec<(f64, (f64, f64, f64))> = volumes
        .iter()
        .flat_map(|&v| IDENTITY_4A_SETS.iter().map(move |&s| (v, s)))
        .collect();
    jobs.par_iter()
        .map(|&(v, (a, theta, mu))| {
            let r = one_component_identity(&FiniteVolumeSpec::new(v)?, a, theta, mu)?;
            Ok(Check::at_most(
                format!("one-component identity V={v} a={a} theta={theta} mu={mu}"),
                json!({"V": v, "a": a, "theta": theta, "mu": mu}),
                r.residual.abs(),
                tol,
            ))
        })
        .collect()
}

fn identity_20(volumes: &[f64], tol: f64) -> cwwr::Result<Vec<Check>> {
    let jobs: Vec<(f64, (f64, f64))> = volumes
        .iter()
        .flat_map(|&v| IDENTITY_20_SETS.iter().map(move |&s| (v, s)))
        .collect();
    jobs.par_iter()
        .map(|&(v, (mu0, mu1))| {
            let spec = FiniteVolumeSpec::new(v)?;
            let q = laplace_integral(&spec, 1.0, mu0, mu1)?;
            let d = log_xi_two_component(&spec, 1.0, mu0, mu1)?;
            Ok(Check::at_most(
                format!("gaussian transform V={v} a=1 mu0={mu0} mu1={mu1}"),
                json!({"V": v, "a": 1.0, "mu0": mu0, "mu1": mu1}),
                (q - d).abs(),
                tol,
            ))
        })
        .collect()
}

fn convergence(volumes: &[f64], tol: f64) -> cwwr::Result<Vec<Check>> {
    let limit = pressure_two_component(&PhasePoint::new(1.0, 0.0, 0.0)?)?;
    let seq = volumes
        .par_iter()
        .map(|&v| Ok(convergence_sequence(1.0, 0.0, 0.0, &[v], limit)?[0]))
        .collect::<cwwr::Result<Vec<_>>>()?;
    let mut checks: Vec<Check> = seq
        .windows(2)
        .map(|w| Check {
            name: format!("error decreases V={} -> V={}", w[0].volume, w[1].volume),
            params: json!({"V": w[1].volume, "previous_V": w[0].volume, "a": 1.0, "mu0": 0.0, "mu1": 0.0}),
            residual: w[1].error,
            tolerance: w[0].error,
            pass: w[1].error < w[0].error,
        })
        .collect();
    if let Some(last) = seq.last() {
        checks.push(Check::at_most(
            format!("error bound V={}", last.volume),
            json!({"V": last.volume, "a": 1.0, "mu0": 0.0, "mu1": 0.0, "p": limit}),
            last.error,
            tol,
        ));
    }
    Ok(checks)
}

fn moments(volumes: &[f64], tol: Option<f64>) -> cwwr::Result<Vec<Check>> {
    let jobs: Vec<(f64, f64)> = volumes
        .iter()
        .flat_map(|&v| MOMENT_POINTS.iter().map(move |&x| (v, x)))
        .collect();
    let per_job = jobs
        .par_iter()
        .map(|&(v, x)| {
            let spec = FiniteVolumeSpec::new(v)?;
            let h = FD_STEP;
            let m = u_v_moments(&spec, 1.0, x)?;
            let (lo, hi) = (u_v_moments(&spec, 1.0, x - h)?, u_v_moments(&spec, 1.0, x + h)?);
            let fd_u = (f_v_value(&spec, 1.0, x + h)? - f_v_value(&spec, 1.0, x - h)?) / (2.0 * h);
            let params = json!({"V": v, "a": 1.0, "x": x, "h": h});
            Ok(vec![
                Check::at_most(format!("u_V V={v} x={x}"), params.clone(), (m.u - fd_u).abs(), tol.unwrap_or(1e-6)),
                Check::at_most(
                    format!("u_V' V={v} x={x}"),
                    params.clone(),
                    (m.du - (hi.u - lo.u) / (2.0 * h)).abs(),
                    tol.unwrap_or(1e-6),
                ),
                Check::at_most(
                    format!("u_V'' V={v} x={x}"),
                    params,
                    (m.d2u - (hi.du - lo.du) / (2.0 * h)).abs(),
                    tol.unwrap_or(1e-5),
                ),
            ])
        })
        .collect::<cwwr::Result<Vec<_>>>()?;
    Ok(per_job.into_iter().flatten().collect())
}

pub fn oracle_check(args: &OracleCheckArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let (name, default_volumes, default_tol) = suite_defaults(args.suite);
    let volumes = if args.volumes.is_empty() {
        default_volumes
    } else {
        args.volumes.clone()
    };
    if let Some(t) = args.tol {
        if !(t.is_finite() && t >= 0.0) {
            return Err(usage("--tol must be a non-negative number"));
        }
    }
    let tol = args.tol.unwrap_or(default_tol);
    let checks = match args.suite {
        Suite::Identity4a => identity_4a(&volumes, tol),
        Suite::Identity20 => identity_20(&volumes, tol),
        Suite::Convergence => convergence(&volumes, tol),
        Suite::Moments => moments(&volumes, args.tol),
    }?;
    let tolerances = match args.suite {
        Suite::Moments if args.tol.is_none() => json!({"u": 1e-6, "du": 1e-6, "d2u": 1e-5}),
        _ => json!({"residual": tol}),
    };
    let manifest = RunManifest::new("oracle-check", json!({"suite": name, "volumes": volumes}), tolerances);
    let body = match args.format {
        ReportFormat::Json => to_json(&Report {
            suite: name,
            checks: &checks,
            manifest: manifest.clone(),
        })?,
        ReportFormat::Text => checks
            .iter()
            .map(|c| {
                format!(
                    "{} {}: residual {} (tolerance {})\n",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    num(c.residual),
                    num(c.tolerance)
                )
            })
            .collect(),
    };
    emit(args.out.as_deref(), &body, manifest, started)?;
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        Err(Failure::ChecksFailed(failed))
    } else {
        Ok(())
    }
}
