//! Exact finite-volume partition sums.
//!
//! In a vessel of volume `V` the particle positions integrate out, so the
//! grand canonical partition function is a double series over occupation
//! numbers:
//!
//! ```text
//! Xi_V(a, mu0, mu1) = sum_{n0, n1} V^{n0+n1} / (n0! n1!) exp(mu0 n0 + mu1 n1 - a n0 n1 / V)
//! ```
//!
//! Everything here is evaluated by direct summation in the log domain and
//! serves as ground truth for the thermodynamic-limit formulas. Truncation is
//! adaptive: the bound grows until a rigorous geometric estimate of the
//! discarded tail falls below `tail_tol` relative to the sum.

mod quadrature;

use serde::Serialize;
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::specialfn::u_value;

use quadrature::adaptive_simpson_panels;

/// Summation controls for the finite-volume oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiniteVolumeSpec {
    pub volume: f64,
    /// Starting truncation bound; derived from the parameters when `None`.
    pub n_max: Option<usize>,
    /// Relative bound on the discarded tail.
    pub tail_tol: f64,
    /// Truncation bounds beyond this are refused.
    pub hard_limit: usize,
}

impl FiniteVolumeSpec {
    pub const DEFAULT_TAIL_TOL: f64 = 1e-16;
    pub const DEFAULT_HARD_LIMIT: usize = 200_000;

    pub fn new(volume: f64) -> Result<Self> {
        if !(volume > 0.0) || !volume.is_finite() {
            return Err(Error::domain(format!("volume must be positive, got {volume}")));
        }
        Ok(FiniteVolumeSpec {
            volume,
            n_max: None,
            tail_tol: Self::DEFAULT_TAIL_TOL,
            hard_limit: Self::DEFAULT_HARD_LIMIT,
        })
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = Some(n_max.max(1));
        self
    }

    pub fn with_tail_tol(mut self, tail_tol: f64) -> Self {
        self.tail_tol = tail_tol;
        self
    }

    pub fn with_hard_limit(mut self, hard_limit: usize) -> Self {
        self.hard_limit = hard_limit;
        self
    }

    /// `ceil(V (m + 10 sqrt(m / V)) + 50)` for a Poisson-like mean density `m`.
    fn initial_bound(&self, mean_density: f64) -> usize {
        let v = self.volume;
        let guess = (v * (mean_density + 10.0 * (mean_density / v).sqrt()) + 50.0).ceil();
        let guess = if guess.is_finite() { guess as usize } else { usize::MAX };
        self.n_max.unwrap_or(guess)
    }

    fn grow(&self, n: usize) -> Result<usize> {
        let next = n + n.div_ceil(2);
        if next > self.hard_limit {
            return Err(Error::Truncation {
                needed: next,
                limit: self.hard_limit,
            });
        }
        Ok(next)
    }

    fn check_start(&self, n: usize) -> Result<usize> {
        if n > self.hard_limit {
            return Err(Error::Truncation {
                needed: n,
                limit: self.hard_limit,
            });
        }
        Ok(n)
    }
}

fn check_params(a: f64, mus: &[f64]) -> Result<()> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::domain(format!("coupling must be nonnegative, got a = {a}")));
    }
    if mus.iter().any(|m| !m.is_finite()) {
        return Err(Error::domain("chemical potentials must be finite"));
    }
    Ok(())
}

/// `ln n!` for `n = 0..=n_max`.
fn ln_factorials(n_max: usize) -> Vec<f64> {
    (0..=n_max as u64).map(ln_factorial).collect()
}

/// Streaming log-sum-exp with a running maximum.
#[derive(Debug, Clone, Copy)]
struct LogSum {
    max: f64,
    scaled: f64,
}

impl LogSum {
    fn new() -> Self {
        LogSum {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    fn add(&mut self, x: f64) {
        if x <= self.max {
            self.scaled += (x - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    fn value(&self) -> f64 {
        self.max + self.scaled.ln()
    }
}

/// `ln(r / (1 - r))` for a ratio bound `ln r < 0`, else `+inf`.
fn ln_geometric_tail(ln_r: f64) -> f64 {
    if ln_r < 0.0 {
        ln_r - (-ln_r.exp()).ln_1p()
    } else {
        f64::INFINITY
    }
}

/// A single series `sum_n exp(log_term(n))` truncated adaptively.
///
/// `ln_ratio(n)` must bound `ln(t_{n+1} / t_n)` from above for every index
/// at or beyond `n` (a nonincreasing bound).
struct Series {
    log_terms: Vec<f64>,
    log_sum: f64,
}

fn sum_series<T, R>(spec: &FiniteVolumeSpec, start: usize, log_term: T, ln_ratio: R) -> Result<Series>
where
    T: Fn(usize, f64) -> f64,
    R: Fn(usize) -> f64,
{
    let mut n_max = spec.check_start(start)?;
    let mut acc = LogSum::new();
    let mut log_terms = Vec::with_capacity(n_max + 1);
    loop {
        let from = log_terms.len();
        let lnf = (from..=n_max).map(|n| ln_factorial(n as u64));
        for (n, ln_fact) in (from..=n_max).zip(lnf) {
            let t = log_term(n, ln_fact);
            acc.add(t);
            log_terms.push(t);
        }
        let log_sum = acc.value();
        let tail = log_terms[n_max] + ln_geometric_tail(ln_ratio(n_max));
        if tail - log_sum <= spec.tail_tol.ln() {
            return Ok(Series { log_terms, log_sum });
        }
        n_max = spec.grow(n_max)?;
    }
}

fn f_v_series(spec: &FiniteVolumeSpec, a: f64, x: f64) -> Result<Series> {
    check_params(a, &[x])?;
    let v = spec.volume;
    let ln_v = v.ln();
    let start = spec.initial_bound(u_value(a, x)?);
    sum_series(
        spec,
        start,
        |n, ln_fact| {
            let n = n as f64;
            n * (ln_v + x) - ln_fact - a * n * n / (2.0 * v)
        },
        |n| ln_v + x - a * (2.0 * n as f64 + 1.0) / (2.0 * v) - (n as f64 + 1.0).ln(),
    )
}

/// Finite-volume free energy:
/// `f_V(a, x) = (1/V) ln sum_n V^n / n! exp(x n - a n^2 / (2V))`.
pub fn f_v_value(spec: &FiniteVolumeSpec, a: f64, x: f64) -> Result<f64> {
    Ok(f_v_series(spec, a, x)?.log_sum / spec.volume)
}

/// `u_V`, `u_V'` and `u_V''`: first moment, variance and third central
/// moment of the occupation number, each divided by `V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub u: f64,
    pub du: f64,
    pub d2u: f64,
}

pub fn u_v_moments(spec: &FiniteVolumeSpec, a: f64, x: f64) -> Result<Moments> {
    let s = f_v_series(spec, a, x)?;
    let weights: Vec<f64> = s.log_terms.iter().map(|t| (t - s.log_sum).exp()).collect();
    let mean: f64 = weights.iter().enumerate().map(|(n, w)| n as f64 * w).sum();
    let (m2, m3) = weights.iter().enumerate().fold((0.0, 0.0), |(m2, m3), (n, w)| {
        let d = n as f64 - mean;
        (m2 + w * d * d, m3 + w * d * d * d)
    });
    let v = spec.volume;
    Ok(Moments {
        u: mean / v,
        du: m2 / v,
        d2u: m3 / v,
    })
}

/// Log-weights of the double series on `[0, n_max]^2` plus the truncation
/// bound that passed the tail test.
struct DoubleSeries {
    n_max: usize,
    log_xi: f64,
    /// Row-major `(n0, n1)` log-weights; only kept when requested.
    log_terms: Option<Vec<f64>>,
}

fn double_series(spec: &FiniteVolumeSpec, a: f64, mu0: f64, mu1: f64, keep: bool) -> Result<DoubleSeries> {
    check_params(a, &[mu0, mu1])?;
    let v = spec.volume;
    let ln_v = v.ln();
    let c0 = mu0 + ln_v;
    let c1 = mu1 + ln_v;
    let coupling = a / v;
    let mut n_max = spec.check_start(spec.initial_bound(mu0.max(mu1).exp()))?;

    loop {
        let lnf = ln_factorials(n_max);
        let mut total = LogSum::new();
        let mut boundary = f64::NEG_INFINITY;
        let mut store = if keep { Vec::with_capacity((n_max + 1) * (n_max + 1)) } else { Vec::new() };
        let mut row = vec![0.0; n_max + 1];
        for n0 in 0..=n_max {
            let base = n0 as f64 * c0 - lnf[n0];
            let slope = c1 - coupling * n0 as f64;
            let mut row_max = f64::NEG_INFINITY;
            for (n1, t) in row.iter_mut().enumerate() {
                *t = base + n1 as f64 * slope - lnf[n1];
                row_max = row_max.max(*t);
            }
            let row_sum: f64 = row.iter().map(|t| (t - row_max).exp()).sum();
            total.add(row_max + row_sum.ln());
            boundary = boundary.max(row[n_max]);
            if n0 == n_max {
                boundary = boundary.max(row_max);
            }
            if keep {
                store.extend_from_slice(&row);
            }
        }
        let log_xi = total.value();

        // Beyond the bound, consecutive ratios are at most V e^{mu_i} / (n + 1).
        let ln_r0 = c0 - (n_max as f64 + 1.0).ln();
        let ln_r1 = c1 - (n_max as f64 + 1.0).ln();
        let ln_r = ln_r0.max(ln_r1);
        let tail = (n_max as f64 + 1.0).ln() + boundary + (2f64).ln() + ln_geometric_tail(ln_r)
            - (-ln_r.exp()).ln_1p();
        if ln_r < 0.0 && tail - log_xi <= spec.tail_tol.ln() {
            return Ok(DoubleSeries {
                n_max,
                log_xi,
                log_terms: keep.then_some(store),
            });
        }
        n_max = spec.grow(n_max)?;
    }
}

/// `(1/V) ln Xi_V(a, mu0, mu1)` by exact double summation.
pub fn log_xi_two_component(spec: &FiniteVolumeSpec, a: f64, mu0: f64, mu1: f64) -> Result<f64> {
    Ok(double_series(spec, a, mu0, mu1, false)?.log_xi / spec.volume)
}

/// `(1/V) ln Xi_V` through the Gaussian transform
///
/// ```text
/// Xi_V = sqrt(V / (2 pi a)) * integral exp(V E_V(y)) dy,
/// E_V(y) = f_V(a, mu0 + y) + f_V(a, mu1 - y) - y^2 / (2a),
/// ```
///
/// an exact identity at every `V`. The integral runs over the window where
/// `V (max E_V - E_V(y)) <= 60`.
pub fn laplace_integral(spec: &FiniteVolumeSpec, a: f64, mu0: f64, mu1: f64) -> Result<f64> {
    check_params(a, &[mu0, mu1])?;
    if a == 0.0 {
        return Err(Error::domain("the Gaussian transform needs a > 0"));
    }
    let v = spec.volume;
    let e_v = |y: f64| -> Result<f64> {
        Ok(f_v_value(spec, a, mu0 + y)? + f_v_value(spec, a, mu1 - y)? - y * y / (2.0 * a))
    };

    const WINDOW: f64 = 60.0;
    const GRID: usize = 800;
    let mut lo = -a * mu1.exp() - 2.0;
    let mut hi = a * mu0.exp() + 2.0;

    let (knots, e_ref) = loop {
        let step = (hi - lo) / GRID as f64;
        let ys: Vec<f64> = (0..=GRID).map(|i| lo + step * i as f64).collect();
        let es = ys.iter().map(|&y| e_v(y)).collect::<Result<Vec<_>>>()?;
        let e_max = es.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let inside: Vec<usize> = (0..=GRID).filter(|&i| v * (e_max - es[i]) <= WINDOW).collect();
        let first = inside[0];
        let last = inside[inside.len() - 1];
        if first == 0 || last == GRID {
            let width = hi - lo;
            if first == 0 {
                lo -= width;
            }
            if last == GRID {
                hi += width;
            }
            if !(hi - lo).is_finite() || hi - lo > 1e6 {
                return Err(Error::Quadrature("integration window does not close".into()));
            }
            continue;
        }
        break (ys[first - 1..=last + 1].to_vec(), e_max);
    };

    let mut integrand = |y: f64| -> Result<f64> { Ok((v * (e_v(y)? - e_ref)).exp()) };
    let integral = adaptive_simpson_panels(&mut integrand, &knots, 1e-10)?;
    if !(integral > 0.0) {
        return Err(Error::Quadrature(format!("nonpositive integral {integral}")));
    }
    let log_xi = 0.5 * (v / (2.0 * std::f64::consts::PI * a)).ln() + v * e_ref + integral.ln();
    Ok(log_xi / v)
}

/// Both sides of `Xi_hat_V(a, mu, theta) = exp(-V theta) Xi_V(a, mu, ln theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResidual {
    /// `ln Xi_hat_V` from the one-component single series.
    pub one_component: f64,
    /// `-V theta + ln Xi_V` from the two-component double series.
    pub two_component: f64,
    pub residual: f64,
}

/// Compares the one-component series, with energy
/// `V theta (1 - e^{-a n / V})`, against the two-component double series.
pub fn one_component_identity(spec: &FiniteVolumeSpec, a: f64, theta: f64, mu: f64) -> Result<IdentityResidual> {
    check_params(a, &[mu])?;
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::domain(format!("theta must be positive, got {theta}")));
    }
    let v = spec.volume;
    let ln_v = v.ln();
    let single = sum_series(
        spec,
        spec.initial_bound(mu.exp()),
        |n, ln_fact| {
            let n = n as f64;
            n * (mu + ln_v) - ln_fact + v * theta * (-a * n / v).exp_m1()
        },
        |n| mu + ln_v - (n as f64 + 1.0).ln(),
    )?;
    let double = double_series(spec, a, mu, theta.ln(), false)?;
    let two_component = -v * theta + double.log_xi;
    Ok(IdentityResidual {
        one_component: single.log_sum,
        two_component,
        residual: single.log_sum - two_component,
    })
}

/// Normalized occupation-number distribution of the two-component system.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyDistribution {
    n_max: usize,
    /// Row-major log-weights over `(n0, n1)`, unnormalized.
    log_weights: Vec<f64>,
    /// `ln Xi_V`.
    pub log_norm: f64,
}

impl OccupancyDistribution {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn log_probability(&self, n0: usize, n1: usize) -> f64 {
        if n0 > self.n_max || n1 > self.n_max {
            return f64::NEG_INFINITY;
        }
        self.log_weights[n0 * (self.n_max + 1) + n1] - self.log_norm
    }

    pub fn probability(&self, n0: usize, n1: usize) -> f64 {
        self.log_probability(n0, n1).exp()
    }

    pub fn total_probability(&self) -> f64 {
        self.log_weights.iter().map(|w| (w - self.log_norm).exp()).sum()
    }

    /// Marginal distribution of `n0` (`species = 0`) or `n1`.
    pub fn marginal(&self, species: usize) -> Vec<f64> {
        let side = self.n_max + 1;
        let mut acc = vec![LogSum::new(); side];
        for n0 in 0..side {
            for n1 in 0..side {
                let idx = if species == 0 { n0 } else { n1 };
                acc[idx].add(self.log_weights[n0 * side + n1]);
            }
        }
        acc.iter().map(|s| (s.value() - self.log_norm).exp()).collect()
    }

    /// Log-marginal of `m = n0 - n1`, indexed by `m + n_max`.
    pub fn log_difference_marginal(&self) -> Vec<f64> {
        let side = self.n_max + 1;
        let mut acc = vec![LogSum::new(); 2 * side - 1];
        for n0 in 0..side {
            for n1 in 0..side {
                acc[n0 + self.n_max - n1].add(self.log_weights[n0 * side + n1]);
            }
        }
        acc.iter().map(|s| s.value() - self.log_norm).collect()
    }

    /// `(m, P(n0 - n1 = m))` for `m = -n_max..=n_max`.
    pub fn difference_marginal(&self) -> Vec<(i64, f64)> {
        let offset = self.n_max as i64;
        self.log_difference_marginal()
            .into_iter()
            .enumerate()
            .map(|(i, lp)| (i as i64 - offset, lp.exp()))
            .collect()
    }

    /// Locations `m` of strict local maxima of the `n0 - n1` marginal after a
    /// centered moving average of `width` points (`width = 1`: none).
    pub fn difference_modes(&self, width: usize) -> Vec<i64> {
        let logs = self.log_difference_marginal();
        let series = if width <= 1 {
            logs
        } else {
            let probs: Vec<f64> = logs.iter().map(|l| l.exp()).collect();
            let half = width / 2;
            (0..probs.len())
                .map(|i| {
                    let lo = i.saturating_sub(half);
                    let hi = (i + width - half).min(probs.len());
                    (probs[lo..hi].iter().sum::<f64>() / (hi - lo) as f64).ln()
                })
                .collect()
        };
        let offset = self.n_max as i64;
        (1..series.len() - 1)
            .filter(|&i| series[i] > series[i - 1] && series[i] > series[i + 1])
            .map(|i| i as i64 - offset)
            .collect()
    }

    pub fn mode_count(&self, width: usize) -> usize {
        self.difference_modes(width).len()
    }
}

pub fn occupancy_distribution(spec: &FiniteVolumeSpec, a: f64, mu0: f64, mu1: f64) -> Result<OccupancyDistribution> {
    let d = double_series(spec, a, mu0, mu1, true)?;
    Ok(OccupancyDistribution {
        n_max: d.n_max,
        log_weights: d.log_terms.expect("weights kept"),
        log_norm: d.log_xi,
    })
}

/// `|(1/V) ln Xi_V - p|` for each volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub volume: f64,
    pub log_xi: f64,
    pub error: f64,
}

pub fn convergence_sequence(a: f64, mu0: f64, mu1: f64, volumes: &[f64], limit: f64) -> Result<Vec<ConvergencePoint>> {
    volumes
        .iter()
        .map(|&v| {
            let log_xi = log_xi_two_component(&FiniteVolumeSpec::new(v)?, a, mu0, mu1)?;
            Ok(ConvergencePoint {
                volume: v,
                log_xi,
                error: (log_xi - limit).abs(),
            })
        })
        .collect()
}

/// `max |u_V''(a, x)|` over `xs`, the witness for a volume-uniform bound on
/// the third derivative of `f_V`.
pub fn max_third_derivative(spec: &FiniteVolumeSpec, a: f64, xs: &[f64]) -> Result<f64> {
    xs.iter()
        .map(|&x| Ok(u_v_moments(spec, a, x)?.d2u.abs()))
        .try_fold(0.0, |m: f64, v: Result<f64>| Ok(m.max(v?)))
}
