//! Landscape, stationary points and phase classification.
//!
//! For `a > 0` the thermodynamics at `(a, mu0, mu1)` is governed by
//!
//! ```text
//! E(y) = f(a, mu0 + y) + f(a, mu1 - y) - y^2 / (2a)
//! ```
//!
//! whose global maxima select the phases. Stationary points solve
//! `h(y) = a u(a, mu0 + y) - a u(a, mu1 - y) - y = 0`.
//!
//! Writing `w0 = a u(a, mu0 + y)` and `w1 = a u(a, mu1 - y)`, one finds
//! `h'(y) = 0` exactly when `w0 w1 = 1`, and `ln(w0 w1) + w0 + w1 = 2 xi`
//! with `xi = (mu0 + mu1)/2 + ln a` along the whole curve. Hence `h` is
//! strictly decreasing for `xi <= 1`, while for `xi > 1` it has exactly two
//! extrema at `w0 = xi -/+ sqrt(xi^2 - 1)`. This splits the real line into
//! at most three monotone pieces with one root each at most, so the
//! enumeration below is exhaustive without any sampling.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::roots::solve_bracketed;
use crate::specialfn::{self, f_value, u_value};

/// Default tolerance on `|mu0 - mu1|` for membership of the symmetric axis.
pub const EPS_EQ: f64 = 1e-12;
/// Default tolerance on the distance to the critical potential `1 - ln a`.
pub const EPS_CRIT: f64 = 1e-12;
/// Stationary points closer than this are merged into one degenerate point.
pub const MERGE_DISTANCE: f64 = 1e-6;
/// Relative tolerance under which two maxima of `E` count as equal.
pub const TIE_TOLERANCE: f64 = 1e-10;

/// A point `(a, mu0, mu1)` of the phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint {
    pub a: f64,
    pub mu0: f64,
    pub mu1: f64,
}

impl PhasePoint {
    pub fn new(a: f64, mu0: f64, mu1: f64) -> Result<Self> {
        let p = PhasePoint { a, mu0, mu1 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.mu0.is_finite() && self.mu1.is_finite()) {
            return Err(Error::domain(format!("non-finite phase point {self:?}")));
        }
        if self.a < 0.0 {
            return Err(Error::domain(format!("coupling must be nonnegative, got a = {}", self.a)));
        }
        Ok(())
    }

    /// The point with the two species exchanged.
    pub fn swapped(&self) -> Self {
        PhasePoint {
            a: self.a,
            mu0: self.mu1,
            mu1: self.mu0,
        }
    }

    /// Reduced mean potential `xi = (mu0 + mu1)/2 + ln a`.
    pub fn xi(&self) -> f64 {
        0.5 * (self.mu0 + self.mu1) + self.a.ln()
    }

    /// Reduced asymmetry `eta = (mu1 - mu0)/2`.
    pub fn eta(&self) -> f64 {
        0.5 * (self.mu1 - self.mu0)
    }
}

/// Which of the three parts of the phase space a point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RegionLabel {
    /// Unique global maximum of `E`; one phase.
    SinglePhase,
    /// The critical line `mu0 = mu1 = 1 - ln a`.
    Critical,
    /// Two symmetric global maxima `+/- ybar`; two coexisting phases.
    Coexistence,
}

impl RegionLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegionLabel::SinglePhase => "SinglePhase",
            RegionLabel::Critical => "Critical",
            RegionLabel::Coexistence => "Coexistence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StationaryKind {
    LocalMax,
    LocalMin,
    /// A double (or triple) root of the stationarity equation.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryPoint {
    pub y: f64,
    pub kind: StationaryKind,
    pub e_value: f64,
}

/// Result of [`classify`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSolution {
    pub point: PhasePoint,
    pub region: RegionLabel,
    /// Global maximizers of `E`, ascending in `y`.
    pub maximizers: Vec<StationaryPoint>,
    /// `ybar(a, mu)` in the coexistence region, zero elsewhere.
    pub order_parameter: f64,
    /// Set when two maxima off the symmetric axis agree within
    /// [`TIE_TOLERANCE`]; both are then reported.
    pub near_tie: bool,
}

/// Membership tolerances for the measure-zero sets `C` and `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub eq: f64,
    pub crit: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eq: EPS_EQ,
            crit: EPS_CRIT,
        }
    }
}

fn require_coupling(point: &PhasePoint) -> Result<()> {
    point.validate()?;
    if point.a == 0.0 {
        return Err(Error::domain("the landscape E(y) is undefined at a = 0"));
    }
    Ok(())
}

/// `E(y) = f(a, mu0 + y) + f(a, mu1 - y) - y^2 / (2a)`.
pub fn landscape_e(point: &PhasePoint, y: f64) -> Result<f64> {
    require_coupling(point)?;
    let a = point.a;
    Ok(f_value(a, point.mu0 + y)? + f_value(a, point.mu1 - y)? - y * y / (2.0 * a))
}

/// `E'(y) = u(a, mu0 + y) - u(a, mu1 - y) - y / a`.
pub fn landscape_dy(point: &PhasePoint, y: f64) -> Result<f64> {
    require_coupling(point)?;
    Ok(stationarity(point, y)?.0 / point.a)
}

/// `E''(y)`.
pub fn landscape_dyy(point: &PhasePoint, y: f64) -> Result<f64> {
    require_coupling(point)?;
    Ok(stationarity(point, y)?.1 / point.a)
}

/// `h(y)` and `h'(y)`.
fn stationarity(point: &PhasePoint, y: f64) -> Result<(f64, f64)> {
    let a = point.a;
    let w0 = a * u_value(a, point.mu0 + y)?;
    let w1 = a * u_value(a, point.mu1 - y)?;
    Ok((w0 - w1 - y, w0 / (1.0 + w0) + w1 / (1.0 + w1) - 1.0))
}

/// Residual `y - a u(a, mu0 + y) + a u(a, mu1 - y)` of the stationarity
/// equation.
pub fn stationarity_residual(point: &PhasePoint, y: f64) -> Result<f64> {
    require_coupling(point)?;
    Ok(-stationarity(point, y)?.0)
}

/// The location `y` where `a u(a, mu0 + y) = w`.
fn y_at_w0(point: &PhasePoint, w: f64) -> f64 {
    w.ln() + w - point.a.ln() - point.mu0
}

/// Every real solution of the stationarity equation, ascending in `y`.
pub fn stationary_points(point: &PhasePoint) -> Result<Vec<StationaryPoint>> {
    require_coupling(point)?;
    let a = point.a;

    // All roots satisfy -a e^{mu1} < y < a e^{mu0}.
    let mut left = -a * point.mu1.exp() - 1.0;
    let mut right = a * point.mu0.exp() + 1.0;
    if !left.is_finite() || !right.is_finite() {
        return Err(Error::domain(format!("chemical potentials too large: {point:?}")));
    }

    let h = |y: f64| stationarity(point, y).unwrap_or((f64::NAN, f64::NAN));

    // Extrema of h, if any: local min at `lo`, local max at `hi`.
    let xi = point.xi();
    let extrema = if xi > 1.0 {
        let w_plus = xi + (xi * xi - 1.0).sqrt();
        let w_minus = 1.0 / w_plus;
        let lo = y_at_w0(point, w_minus);
        let hi = y_at_w0(point, w_plus);
        left = left.min(lo - 1.0);
        right = right.max(hi + 1.0);
        Some((lo, hi))
    } else {
        None
    };

    let ftol = 1e-15 * (1.0 + left.abs().max(right.abs()));
    let solve = |lo: f64, hi: f64| -> Result<f64> {
        solve_bracketed("stationary point", h, lo, hi, None, ftol, 300)
    };

    let mut roots: Vec<(f64, StationaryKind)> = Vec::with_capacity(3);
    match extrema {
        None => roots.push((solve(left, right)?, StationaryKind::LocalMax)),
        Some((y_lo, y_hi)) => {
            let h_lo = h(y_lo).0;
            let h_hi = h(y_hi).0;
            if h_lo.is_nan() || h_hi.is_nan() {
                return Err(Error::Convergence {
                    what: "stationary point",
                    iterations: 0,
                    residual: f64::NAN,
                });
            }
            let tol_lo = ftol.max(4.0 * f64::EPSILON * (1.0 + y_lo.abs()));
            let tol_hi = ftol.max(4.0 * f64::EPSILON * (1.0 + y_hi.abs()));
            let lo_double = h_lo.abs() <= tol_lo;
            let hi_double = h_hi.abs() <= tol_hi;

            // Decreasing on (-inf, y_lo]: root iff h(y_lo) < 0.
            if lo_double {
                roots.push((y_lo, StationaryKind::Degenerate));
            } else if h_lo < 0.0 {
                roots.push((solve(left, y_lo)?, StationaryKind::LocalMax));
            }
            // Increasing on [y_lo, y_hi].
            if !lo_double && !hi_double && h_lo < 0.0 && h_hi > 0.0 {
                roots.push((solve(y_lo, y_hi)?, StationaryKind::LocalMin));
            }
            // Decreasing on [y_hi, inf).
            if hi_double {
                roots.push((y_hi, StationaryKind::Degenerate));
            } else if h_hi > 0.0 {
                roots.push((solve(y_hi, right)?, StationaryKind::LocalMax));
            }
        }
    }

    // Roots closer than the merge distance cannot be told apart.
    let mut merged: Vec<(f64, StationaryKind)> = Vec::with_capacity(roots.len());
    for (y, kind) in roots {
        match merged.last_mut() {
            Some(last) if (y - last.0).abs() < MERGE_DISTANCE => {
                last.0 = 0.5 * (last.0 + y);
                last.1 = StationaryKind::Degenerate;
            }
            _ => merged.push((y, kind)),
        }
    }
    // Three roots merged pairwise: the middle survivor may still be close.
    if merged.len() == 2 && (merged[1].0 - merged[0].0).abs() < MERGE_DISTANCE {
        let y = 0.5 * (merged[0].0 + merged[1].0);
        merged = vec![(y, StationaryKind::Degenerate)];
    }

    merged
        .into_iter()
        .map(|(y, kind)| {
            Ok(StationaryPoint {
                y,
                kind,
                e_value: landscape_e(point, y)?,
            })
        })
        .collect()
}

/// Order parameter `ybar(a, mu)`: zero for `mu <= 1 - ln a`, otherwise the
/// unique root of `psi(y) = mu - (1 - ln a)`.
pub fn order_parameter(a: f64, mu: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() || !mu.is_finite() {
        return Err(Error::domain(format!("order parameter needs a > 0, got a = {a}, mu = {mu}")));
    }
    let delta = mu - critical_mu(a);
    if delta <= 0.0 {
        return Ok(0.0);
    }
    specialfn::psi_inverse(delta)
}

/// Critical chemical potential `1 - ln a`.
pub fn critical_mu(a: f64) -> f64 {
    1.0 - a.ln()
}

/// Classifies a point with the default membership tolerances.
pub fn classify(point: &PhasePoint) -> Result<PhaseSolution> {
    classify_with(point, &Tolerances::default())
}

pub fn classify_with(point: &PhasePoint, tol: &Tolerances) -> Result<PhaseSolution> {
    point.validate()?;
    let a = point.a;
    if a == 0.0 {
        // Free gas: y* = 0 and max E degenerates to p = e^{mu0} + e^{mu1}.
        return Ok(PhaseSolution {
            point: *point,
            region: RegionLabel::SinglePhase,
            maximizers: vec![StationaryPoint {
                y: 0.0,
                kind: StationaryKind::LocalMax,
                e_value: point.mu0.exp() + point.mu1.exp(),
            }],
            order_parameter: 0.0,
            near_tie: false,
        });
    }

    let on_axis = (point.mu0 - point.mu1).abs() <= tol.eq;
    let mu = 0.5 * (point.mu0 + point.mu1);
    let mu_c = critical_mu(a);
    let region = if on_axis && (mu - mu_c).abs() <= tol.crit {
        RegionLabel::Critical
    } else if on_axis && mu > mu_c + tol.crit {
        RegionLabel::Coexistence
    } else {
        RegionLabel::SinglePhase
    };

    let stationary = stationary_points(point)?;
    let mut near_tie = false;

    let (maximizers, order_parameter) = match region {
        RegionLabel::Coexistence => {
            let ybar = order_parameter(a, mu)?;
            let maxima: Vec<StationaryPoint> = stationary
                .iter()
                .copied()
                .filter(|s| s.kind == StationaryKind::LocalMax)
                .collect();
            let maxima = if maxima.len() == 2 {
                maxima
            } else {
                // Too close to C to resolve the three roots; use the
                // symmetric pair from psi instead.
                [-ybar, ybar]
                    .iter()
                    .map(|&y| {
                        Ok(StationaryPoint {
                            y,
                            kind: StationaryKind::LocalMax,
                            e_value: landscape_e(point, y)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            };
            (maxima, ybar)
        }
        RegionLabel::Critical => {
            let mut best = global_maxima(&stationary)[0];
            best.kind = StationaryKind::Degenerate;
            (vec![best], 0.0)
        }
        RegionLabel::SinglePhase => {
            let best = global_maxima(&stationary);
            near_tie = best.len() > 1;
            (best, 0.0)
        }
    };

    Ok(PhaseSolution {
        point: *point,
        region,
        maximizers,
        order_parameter,
        near_tie,
    })
}

/// Stationary points whose `E` is within the tie tolerance of the largest.
fn global_maxima(stationary: &[StationaryPoint]) -> Vec<StationaryPoint> {
    let top = stationary
        .iter()
        .map(|s| s.e_value)
        .fold(f64::NEG_INFINITY, f64::max);
    let tie = TIE_TOLERANCE * top.abs().max(1.0);
    stationary
        .iter()
        .copied()
        .filter(|s| top - s.e_value <= tie)
        .collect()
}

/// Upper branch of the spinodal, `eta = sqrt(xi^2 - 1) + ln(xi - sqrt(xi^2 - 1))`.
///
/// Inside `|eta| < spinodal_eta(xi)` the stationarity equation has three
/// solutions, outside it has one; the lower branch is `-spinodal_eta(xi)`.
pub fn spinodal_eta(xi: f64) -> Result<f64> {
    if !(xi >= 1.0) || !xi.is_finite() {
        return Err(Error::domain(format!("no spinodal for xi = {xi} < 1")));
    }
    let r = (xi * xi - 1.0).sqrt();
    // ln(xi - r) = -ln(xi + r), free of cancellation.
    Ok(r - (xi + r).ln())
}

/// Signed distance `spinodal_eta(xi) - |eta|`: positive inside the
/// three-solution area, `None` when `xi < 1`.
pub fn spinodal_margin(point: &PhasePoint) -> Option<f64> {
    let xi = point.xi();
    spinodal_eta(xi).ok().map(|s| s - point.eta().abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    const OMEGA: f64 = 0.567_143_290_409_783_8;

    fn pt(a: f64, mu0: f64, mu1: f64) -> PhasePoint {
        PhasePoint::new(a, mu0, mu1).unwrap()
    }

    /// Independent root count: dense sign-change scan of h.
    fn scan_roots(p: &PhasePoint, n: usize) -> usize {
        let lo = -p.a * p.mu1.exp() - 1.0;
        let hi = p.a * p.mu0.exp() + 1.0;
        let mut count = 0;
        let mut prev = stationarity(p, lo).unwrap().0 > 0.0;
        for i in 1..=n {
            let y = lo + (hi - lo) * i as f64 / n as f64;
            let cur = stationarity(p, y).unwrap().0;
            if cur != 0.0 && (cur > 0.0) != prev {
                count += 1;
                prev = cur > 0.0;
            }
        }
        count
    }

    #[test]
    fn landscape_anchor() {
        let p = pt(1.0, 0.0, 0.0);
        let e = landscape_e(&p, 0.0).unwrap();
        let f = 0.5 * OMEGA * OMEGA + OMEGA;
        assert!((e - 2.0 * f).abs() < 1e-14);
        assert!((e - 1.455_938_092_676_404_2).abs() < 1e-14);
        assert!(landscape_e(&pt(0.0, 0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn landscape_symmetries() {
        let p = pt(1.3, 0.7, 0.7);
        for &y in &[0.1, 1.0, 3.7] {
            let d = landscape_e(&p, y).unwrap() - landscape_e(&p, -y).unwrap();
            assert!(d.abs() < 1e-13);
        }
        let p = pt(1.0, 1.0, 0.0);
        for &y in &[-2.0, 0.3, 1.5] {
            let d = landscape_e(&p, y).unwrap() - landscape_e(&p.swapped(), -y).unwrap();
            assert!(d.abs() < 1e-13);
        }
    }

    #[test]
    fn single_root_below_critical() {
        let s = stationary_points(&pt(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].y, 0.0);
        assert_eq!(s[0].kind, StationaryKind::LocalMax);
    }

    #[test]
    fn three_roots_in_coexistence() {
        let p = pt(1.0, 2.0, 2.0);
        let s = stationary_points(&p).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(scan_roots(&p, 20000), 3);
        assert!(s[1].y.abs() < 1e-12);
        assert_eq!(s[1].kind, StationaryKind::LocalMin);
        assert!((s[0].y + s[2].y).abs() < 1e-10);
        assert!(s[2].y > 0.0);
        assert!((s[2].y - order_parameter(1.0, 2.0).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn one_root_far_off_axis() {
        let p = pt(1.0, 5.0, -5.0);
        let s = stationary_points(&p).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(scan_roots(&p, 20000), 1);
        assert!(s[0].y > 0.0);
    }

    #[test]
    fn roots_solve_the_equation() {
        for &(a, m0, m1) in &[(1.0, 2.0, 2.0), (0.3, 4.0, 3.5), (2.0, 0.1, -0.4), (100.0, 1.0, 0.0)] {
            let p = pt(a, m0, m1);
            for s in stationary_points(&p).unwrap() {
                assert!(stationarity_residual(&p, s.y).unwrap().abs() <= 1e-10);
                let e2 = landscape_dyy(&p, s.y).unwrap();
                match s.kind {
                    StationaryKind::LocalMax => assert!(e2 <= 1e-12),
                    StationaryKind::LocalMin => assert!(e2 >= -1e-12),
                    StationaryKind::Degenerate => {}
                }
            }
        }
    }

    #[test]
    fn classify_anchors() {
        let c = classify(&pt(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(c.region, RegionLabel::Critical);
        assert_eq!(c.maximizers.len(), 1);
        assert_eq!(c.order_parameter, 0.0);

        let m = classify(&pt(1.0, 2.0, 2.0)).unwrap();
        assert_eq!(m.region, RegionLabel::Coexistence);
        assert_eq!(m.maximizers.len(), 2);
        assert!(m.order_parameter > 0.0);
        assert!((m.maximizers[0].e_value - m.maximizers[1].e_value).abs() <= 1e-10);

        let r = classify(&pt(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(r.region, RegionLabel::SinglePhase);
        assert_eq!(r.maximizers.len(), 1);
        assert_eq!(r.maximizers[0].y, 0.0);

        let free = classify(&pt(0.0, 0.0, 0.0)).unwrap();
        assert_eq!(free.region, RegionLabel::SinglePhase);
        assert_eq!(free.maximizers[0].y, 0.0);
    }

    #[test]
    fn off_axis_points_pick_the_heavier_species() {
        let s = classify(&pt(1.0, 2.1, 2.0)).unwrap();
        assert_eq!(s.region, RegionLabel::SinglePhase);
        assert_eq!(s.maximizers.len(), 1);
        assert!(s.maximizers[0].y > 0.0);
        assert!(!s.near_tie);
    }

    #[test]
    fn tolerance_gate_is_configurable() {
        let p = pt(1.0, 2.0, 2.0 + 1e-6);
        assert_eq!(classify(&p).unwrap().region, RegionLabel::SinglePhase);
        let loose = Tolerances { eq: 1e-5, crit: 1e-12 };
        assert_eq!(classify_with(&p, &loose).unwrap().region, RegionLabel::Coexistence);
    }

    #[test]
    fn order_parameter_anchors() {
        assert_eq!(order_parameter(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(order_parameter(1.0, 0.2).unwrap(), 0.0);
        let delta = 2.4e-3;
        let y = order_parameter(1.0, 1.0 + delta).unwrap();
        let r = y / (24.0 * delta).sqrt();
        assert!((0.95..=1.05).contains(&r));
        // Root of psi(y) = 1 from a 40-digit reference solve.
        let y = order_parameter(1.0, 2.0).unwrap();
        assert!((y - 7.349_473_057_081_898).abs() < 1e-12);
        assert!(order_parameter(0.0, 1.0).is_err());
    }

    #[test]
    fn order_parameter_bisection_oracle() {
        fn psi(y: f64) -> f64 {
            y + y / (y.exp() - 1.0) - 1.0 + (y / (y.exp() - 1.0)).ln()
        }
        let (mut lo, mut hi) = (1e-6, 50.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if psi(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let y = order_parameter(1.0, 2.0).unwrap();
        assert!((y - 0.5 * (lo + hi)).abs() < 1e-12);
    }

    #[test]
    fn spinodal_values() {
        assert_eq!(spinodal_eta(1.0).unwrap(), 0.0);
        let eta = spinodal_eta(2.0).unwrap();
        let direct = 3f64.sqrt() + (2.0 - 3f64.sqrt()).ln();
        assert!((eta - direct).abs() < 1e-14);
        assert!((eta - 0.415_092_910_644_060_6).abs() < 1e-14);
        assert!(spinodal_eta(0.99).is_err());
        // Large xi stays accurate where the naive form cancels.
        let xi = 1e8;
        assert!((spinodal_eta(xi).unwrap() - (xi - (2.0 * xi).ln())).abs() < 1e-6);
    }

    #[test]
    fn spinodal_separates_root_counts() {
        // a = 1, xi = 2: mu0 + mu1 = 4, eta = (mu1 - mu0)/2.
        let eta_s = spinodal_eta(2.0).unwrap();
        for (eta, expected) in [(eta_s - 1e-3, 3), (eta_s + 1e-3, 1), (-(eta_s - 1e-3), 3), (-(eta_s + 1e-3), 1)] {
            let p = pt(1.0, 2.0 - eta, 2.0 + eta);
            assert_eq!(stationary_points(&p).unwrap().len(), expected, "eta={eta}");
            assert_eq!(scan_roots(&p, 200000), expected, "scan eta={eta}");
        }
    }

    #[test]
    fn double_root_on_spinodal() {
        let eta = spinodal_eta(2.0).unwrap();
        let p = pt(1.0, 2.0 - eta, 2.0 + eta);
        let s = stationary_points(&p).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.iter().any(|s| s.kind == StationaryKind::Degenerate));
    }
}
