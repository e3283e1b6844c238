//! Equations of state.
//!
//! Two-component system: at a global maximizer `y*` of the landscape the
//! densities are `rho0 = u(a, mu0 + y*)`, `rho1 = u(a, mu1 - y*)` and the
//! pressure is `p = a rho0 rho1 + rho0 + rho1`. The densities are also the
//! intensities of the Poisson state describing the phase.
//!
//! One-component system: summing out the second species maps it onto the
//! two-component system at `(a, mu, ln theta)` with `p_hat = p - theta` and
//! `rho = rho0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::phase::{self, classify, classify_with, PhasePoint, PhaseSolution, RegionLabel, Tolerances};
use crate::specialfn::u_value;

/// Densities of the two species in one phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityPair {
    pub rho0: f64,
    pub rho1: f64,
}

impl DensityPair {
    /// Residuals of `rho0 = exp(mu0 - a rho1)` and `rho1 = exp(mu1 - a rho0)`.
    pub fn self_consistency_residual(&self, point: &PhasePoint) -> (f64, f64) {
        (
            self.rho0 - (point.mu0 - point.a * self.rho1).exp(),
            self.rho1 - (point.mu1 - point.a * self.rho0).exp(),
        )
    }

    /// `1 - a^2 rho0 rho1`; positive at a strict local maximum of `E`.
    pub fn stability(&self, a: f64) -> f64 {
        1.0 - a * a * self.rho0 * self.rho1
    }

    pub fn pressure(&self, a: f64) -> f64 {
        a * self.rho0 * self.rho1 + self.rho0 + self.rho1
    }
}

/// A solved two-component state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoComponentState {
    pub solution: PhaseSolution,
    /// One entry per global maximizer, in the same order.
    pub phases: Vec<DensityPair>,
    /// Reported once; equal in all coexisting phases.
    pub pressure: f64,
}

fn pairs_for(solution: &PhaseSolution) -> Result<Vec<DensityPair>> {
    let p = &solution.point;
    if p.a == 0.0 {
        return Ok(vec![DensityPair {
            rho0: p.mu0.exp(),
            rho1: p.mu1.exp(),
        }]);
    }
    solution
        .maximizers
        .iter()
        .map(|m| {
            let pair = DensityPair {
                rho0: u_value(p.a, p.mu0 + m.y)?,
                rho1: u_value(p.a, p.mu1 - m.y)?,
            };
            Ok(polish(p, pair))
        })
        .collect()
}

fn log_residual(p: &PhasePoint, d: &DensityPair) -> (f64, f64) {
    (
        d.rho0.ln() - p.mu0 + p.a * d.rho1,
        d.rho1.ln() - p.mu1 + p.a * d.rho0,
    )
}

/// Newton refinement in `(ln rho0, ln rho1)`.
///
/// The root in `y` carries an absolute error that becomes a relative error
/// in an exponentially small minority density; the log system does not.
fn polish(p: &PhasePoint, mut d: DensityPair) -> DensityPair {
    let norm = |r: (f64, f64)| r.0.abs().max(r.1.abs());
    let mut r = log_residual(p, &d);
    for _ in 0..3 {
        let det = 1.0 - p.a * p.a * d.rho0 * d.rho1;
        if det < 1e-8 || norm(r) == 0.0 {
            break;
        }
        let (w0, w1) = (p.a * d.rho0, p.a * d.rho1);
        let s0 = (r.0 - w1 * r.1) / det;
        let s1 = (r.1 - w0 * r.0) / det;
        let next = DensityPair {
            rho0: d.rho0 * (-s0).exp(),
            rho1: d.rho1 * (-s1).exp(),
        };
        let rn = log_residual(p, &next);
        if !(norm(rn) < norm(r)) {
            break;
        }
        d = next;
        r = rn;
    }
    d
}

pub fn solve_two_component(point: &PhasePoint) -> Result<TwoComponentState> {
    solve_two_component_with(point, &Tolerances::default())
}

/// [`solve_two_component`] with explicit membership tolerances for `C` and `M`.
pub fn solve_two_component_with(point: &PhasePoint, tol: &Tolerances) -> Result<TwoComponentState> {
    let solution = classify_with(point, tol)?;
    let phases = pairs_for(&solution)?;
    let pressure = phases[0].pressure(point.a);
    Ok(TwoComponentState {
        solution,
        phases,
        pressure,
    })
}

/// Densities at every global maximizer.
///
/// In the coexistence region the two pairs are `(z-, z+)` and `(z+, z-)`
/// with `z+/- = u(a, mu +/- ybar)`.
pub fn densities(point: &PhasePoint) -> Result<Vec<DensityPair>> {
    Ok(solve_two_component(point)?.phases)
}

/// `p = a rho0 rho1 + rho0 + rho1`.
pub fn pressure_two_component(point: &PhasePoint) -> Result<f64> {
    Ok(solve_two_component(point)?.pressure)
}

/// Pressure as the maximal value of the landscape `E`.
///
/// Independent of [`pressure_two_component`]; the two routes agree
/// because `E(y*) = a rho0 rho1 + rho0 + rho1` at any stationary point.
pub fn pressure_from_landscape(point: &PhasePoint) -> Result<f64> {
    let s = classify(point)?;
    Ok(s.maximizers
        .iter()
        .map(|m| m.e_value)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// One-component state at `(a, theta, mu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneComponentState {
    pub a: f64,
    pub theta: f64,
    pub mu: f64,
    /// Density; at the transition `mu = ln theta` the low-density limit.
    pub rho: f64,
    pub p_hat: f64,
    /// One-sided limits `(z-, z+)` of the density at the transition.
    pub jump: Option<(f64, f64)>,
    /// `p_hat` from the closed form minus `p - theta`.
    pub closed_form_residual: f64,
}

/// `p_hat(rho) = a theta rho e^{-a rho} + rho - theta (1 - e^{-a rho})`.
pub fn one_component_pressure_of_density(a: f64, theta: f64, rho: f64) -> f64 {
    let decay = (-a * rho).exp();
    // theta (1 - e^{-a rho}) via expm1 for small a rho
    a * theta * rho * decay + rho + theta * (-a * rho).exp_m1()
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::domain(format!("theta must be positive, got {theta}")));
    }
    Ok(())
}

pub fn pressure_one_component(a: f64, theta: f64, mu: f64) -> Result<OneComponentState> {
    check_theta(theta)?;
    let point = PhasePoint::new(a, mu, theta.ln())?;
    let state = solve_two_component(&point)?;
    let p_hat = state.pressure - theta;

    let (rho, jump) = if state.solution.region == RegionLabel::Coexistence {
        let lows = state.phases.iter().map(|d| d.rho0).fold(f64::INFINITY, f64::min);
        let highs = state.phases.iter().map(|d| d.rho0).fold(0.0, f64::max);
        (lows, Some((lows, highs)))
    } else {
        (state.phases[0].rho0, None)
    };
    let closed = one_component_pressure_of_density(a, theta, rho);
    Ok(OneComponentState {
        a,
        theta,
        mu,
        rho,
        p_hat,
        jump,
        closed_form_residual: closed - p_hat,
    })
}

/// True when the one-component isotherm at `theta` has a plateau.
pub fn has_transition(a: f64, theta: f64) -> bool {
    a > 0.0 && theta > std::f64::consts::E / a
}

/// Density jump `ybar(a, ln theta) / a` of the one-component system.
pub fn density_jump(a: f64, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    if !has_transition(a, theta) {
        return Err(Error::domain(format!(
            "no phase transition at theta = {theta} (needs theta > e/a with a = {a})"
        )));
    }
    Ok(phase::order_parameter(a, theta.ln())? / a)
}

/// The flat part of a one-component isotherm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Plateau {
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub p_star: f64,
}

/// Plateau endpoints `z+/- = u(a, ln theta +/- ybar)` and pressure
/// `p* = a z+ z- + z+ + z- - theta`, or `None` when `theta <= e/a`.
pub fn plateau(a: f64, theta: f64) -> Result<Option<Plateau>> {
    check_theta(theta)?;
    if !has_transition(a, theta) {
        return Ok(None);
    }
    let mu = theta.ln();
    let ybar = phase::order_parameter(a, mu)?;
    let z_minus = u_value(a, mu - ybar)?;
    let z_plus = u_value(a, mu + ybar)?;
    Ok(Some(Plateau {
        rho_minus: z_minus,
        rho_plus: z_plus,
        p_star: a * z_plus * z_minus + z_plus + z_minus - theta,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Low,
    Plateau,
    High,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Low => "low",
            Branch::Plateau => "plateau",
            Branch::High => "high",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsothermSample {
    pub rho: f64,
    pub p_hat: f64,
    pub branch: Branch,
}

/// `p_hat` against `rho` at fixed `(a, theta)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsothermCurve {
    pub a: f64,
    pub theta: f64,
    pub samples: Vec<IsothermSample>,
    pub plateau: Option<Plateau>,
}

/// Assembles the isotherm on `rho_grid`.
///
/// Each plateau endpoint is inserted twice, once on each side of the branch
/// change, so continuity at the joints can be read off the samples.
pub fn isotherm(a: f64, theta: f64, rho_grid: &[f64]) -> Result<IsothermCurve> {
    check_theta(theta)?;
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::domain(format!("coupling must be nonnegative, got a = {a}")));
    }
    if rho_grid.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::domain("isotherm densities must be positive and finite"));
    }
    if rho_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("isotherm density grid must be sorted ascending"));
    }

    let plateau = plateau(a, theta)?;
    let eos = |rho: f64| one_component_pressure_of_density(a, theta, rho);
    let mut samples = Vec::with_capacity(rho_grid.len() + 4);

    match plateau {
        None => samples.extend(rho_grid.iter().map(|&rho| IsothermSample {
            rho,
            p_hat: eos(rho),
            branch: Branch::Low,
        })),
        Some(pl) => {
            let sample = |rho, p_hat, branch| IsothermSample { rho, p_hat, branch };
            let mut below = rho_grid.iter().copied().filter(|&r| r < pl.rho_minus).peekable();
            samples.extend(below.by_ref().map(|r| sample(r, eos(r), Branch::Low)));
            samples.push(sample(pl.rho_minus, eos(pl.rho_minus), Branch::Low));
            samples.push(sample(pl.rho_minus, pl.p_star, Branch::Plateau));
            samples.extend(
                rho_grid
                    .iter()
                    .copied()
                    .filter(|&r| r > pl.rho_minus && r < pl.rho_plus)
                    .map(|r| sample(r, pl.p_star, Branch::Plateau)),
            );
            samples.push(sample(pl.rho_plus, pl.p_star, Branch::Plateau));
            samples.push(sample(pl.rho_plus, eos(pl.rho_plus), Branch::High));
            samples.extend(
                rho_grid
                    .iter()
                    .copied()
                    .filter(|&r| r > pl.rho_plus)
                    .map(|r| sample(r, eos(r), Branch::High)),
            );
        }
    }

    Ok(IsothermCurve {
        a,
        theta,
        samples,
        plateau,
    })
}

/// A rescaled phase point with the factors densities and pressure pick up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rescaled {
    pub point: PhasePoint,
    pub density_factor: f64,
    pub pressure_factor: f64,
}

/// Change of length scale `V -> alpha V`: `a -> alpha a`,
/// `mu_i -> mu_i - ln alpha`, densities and pressure `-> x / alpha`.
pub fn rescale(point: &PhasePoint, alpha: f64) -> Result<Rescaled> {
    point.validate()?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::domain(format!("scale factor must be positive, got {alpha}")));
    }
    let shift = alpha.ln();
    Ok(Rescaled {
        point: PhasePoint {
            a: alpha * point.a,
            mu0: point.mu0 - shift,
            mu1: point.mu1 - shift,
        },
        density_factor: 1.0 / alpha,
        pressure_factor: 1.0 / alpha,
    })
}

/// Diagnostics for the strong-repulsion limit at `mu0 > mu1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundStateDrift {
    pub a: f64,
    pub mu0: f64,
    pub mu1: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub difference: f64,
    /// `e^{mu0} - e^{mu1}`, the free-gas value of `rho0 - rho1`.
    pub free_difference: f64,
    /// `rho0 exp(-(mu0 - mu1) - a (e^{mu0} - e^{mu1}))`, an upper bound on `rho1`.
    pub rho1_bound: f64,
}

impl GroundStateDrift {
    /// Both inequalities, up to a relative rounding slack `rtol`.
    pub fn bounds_hold(&self, rtol: f64) -> bool {
        let slack = |x: f64| rtol * x.abs().max(f64::MIN_POSITIVE);
        self.difference >= self.free_difference - slack(self.free_difference)
            && self.rho1 <= self.rho1_bound + slack(self.rho1_bound)
    }
}

pub fn ground_state_drift(a: f64, mu0: f64, mu1: f64) -> Result<GroundStateDrift> {
    if !(mu0 > mu1) {
        return Err(Error::domain(format!("ground-state drift needs mu0 > mu1, got {mu0} <= {mu1}")));
    }
    if !(a > 0.0) {
        return Err(Error::domain(format!("ground-state drift needs a > 0, got {a}")));
    }
    let point = PhasePoint::new(a, mu0, mu1)?;
    let pair = densities(&point)?
        .into_iter()
        .max_by(|x, y| (x.rho0 - x.rho1).total_cmp(&(y.rho0 - y.rho1)))
        .expect("at least one phase");
    let free_difference = mu0.exp() - mu1.exp();
    Ok(GroundStateDrift {
        a,
        mu0,
        mu1,
        rho0: pair.rho0,
        rho1: pair.rho1,
        difference: pair.rho0 - pair.rho1,
        free_difference,
        rho1_bound: pair.rho0 * (-(mu0 - mu1) - a * free_difference).exp(),
    })
}

/// Poisson mass `(zV)^n / n! e^{-zV}` of finding `n` particles in volume `V`.
pub fn poisson_event_probability(z: f64, volume: f64, n: u64) -> Result<f64> {
    Ok(poisson_log_probability(z, volume, n)?.exp())
}

pub fn poisson_log_probability(z: f64, volume: f64, n: u64) -> Result<f64> {
    if !(z > 0.0) || !(volume > 0.0) || !z.is_finite() || !volume.is_finite() {
        return Err(Error::domain(format!("need z > 0 and V > 0, got z = {z}, V = {volume}")));
    }
    let mean = z * volume;
    let n_ln = if n == 0 { 0.0 } else { n as f64 * mean.ln() };
    Ok(n_ln - mean - statrs::function::factorial::ln_factorial(n))
}

/// Two independent Poisson species: the product of the marginals.
pub fn poisson_pair_probability(z0: f64, z1: f64, volume: f64, n0: u64, n1: u64) -> Result<f64> {
    Ok((poisson_log_probability(z0, volume, n0)? + poisson_log_probability(z1, volume, n1)?).exp())
}
