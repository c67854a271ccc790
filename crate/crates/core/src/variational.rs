//! Birkhoff `(p, q)`-periodic minimal configurations of the twist map.
//!
//! A configuration is stored as a rigid rotation plus small deviations,
//! `x_i = phase + i p / q + u_i` with `u_{i+q} = u_i`. The integer rotation
//! part is reduced exactly, so chord lengths at scale `1/q` keep full
//! relative precision instead of suffering from cancellation between lifted
//! coordinates of size `q`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::cyclic_ldl_solve;
use crate::number_theory::{circle_norm, ConstantTypeIrrational, KappaMachinery};
use crate::twist_map::{frac, TwistMap};

/// Residual a solve must reach to be accepted.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Two points closer than this (mod 1) make the configuration degenerate.
pub const DEGENERACY_FLOOR: f64 = 1e-13;
/// Number of initial phases scanned per solve.
pub const PHASES: usize = 8;

const TARGET_RESIDUAL: f64 = 1e-18;
const MAX_ITERATIONS: usize = 500;
const STALL_LIMIT: usize = 6;
const MU_MIN: f64 = 1e-12;
const MU_MAX: f64 = 1e4;
const ARMIJO: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    /// Initial phase of the retained solve.
    pub x0: f64,
    pub iterations: usize,
    pub phases_converged: usize,
    /// Reduced action of every phase that converged, in scan order.
    pub phase_actions: Vec<Option<f64>>,
}

/// A `(p, q)`-periodic stationary configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    p: u64,
    q: u64,
    phase: f64,
    u: Vec<f64>,
    residual: f64,
    reduced_action: f64,
    stats: SolverStats,
    map: TwistMap,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Phase bookkeeping shared by the solver and configuration accessors.
struct Layout {
    /// `frac(q_n phase + (q_n i p mod q) / q)` for each base index.
    base_phase: Vec<f64>,
    qn: f64,
}

impl Layout {
    fn new(map: &TwistMap, p: u64, q: u64, phase: f64) -> Self {
        let qn = map.qn();
        let base_phase = (0..q)
            .map(|i| {
                let m = (i as u128 * p as u128) % q as u128;
                let k = (qn as u128 * m) % q as u128;
                frac(qn as f64 * phase + k as f64 / q as f64)
            })
            .collect();
        Self { base_phase, qn: qn as f64 }
    }

    #[inline]
    fn force_phase(&self, i: usize, u: f64) -> f64 {
        frac(self.base_phase[i] + self.qn * u)
    }
}

struct Eval {
    grad: Vec<f64>,
    residual: f64,
    action: f64,
    action_scale: f64,
}

fn evaluate(map: &TwistMap, layout: &Layout, u: &[f64]) -> Eval {
    let n = u.len();
    let kc = map.action_coeff();
    let pot = map.potential();
    let mut grad = vec![0.0; n];
    let mut residual: f64 = 0.0;
    let mut action = 0.0;
    let mut scale = 0.0;
    for i in 0..n {
        let prev = u[(i + n - 1) % n];
        let next = u[(i + 1) % n];
        let ph = layout.force_phase(i, u[i]);
        let g = (u[i] - prev) + (u[i] - next) + map.kick_at_phase(ph);
        grad[i] = g;
        residual = residual.max(g.abs());
        let du = next - u[i];
        let v = kc * pot.value(ph);
        action += 0.5 * du * du + v;
        scale += 0.5 * du * du + v.abs();
    }
    Eval { grad, residual, action, action_scale: scale }
}

struct Solve {
    u: Vec<f64>,
    residual: f64,
    action: f64,
    iterations: usize,
}

fn newton(map: &TwistMap, layout: &Layout, n: usize) -> Solve {
    let mut u = vec![0.0; n];
    let mut ev = evaluate(map, layout, &u);
    let cap = 0.1 / layout.qn;
    let mut stall = 0;
    let mut iterations = 0;
    let b = vec![-1.0; n.saturating_sub(1)];

    while iterations < MAX_ITERATIONS && ev.residual > TARGET_RESIDUAL && stall < STALL_LIMIT {
        iterations += 1;
        let curv: Vec<f64> = (0..n).map(|i| 2.0 + map.curvature_at_phase(layout.force_phase(i, u[i]))).collect();
        let rhs: Vec<f64> = ev.grad.iter().map(|g| -g).collect();
        let wtol = 1e-14 * ev.action_scale + f64::MIN_POSITIVE;

        let mut mu = MU_MIN;
        let mut accepted = None;
        while mu <= MU_MAX && accepted.is_none() {
            let shifted: Vec<f64> = curv.iter().map(|a| a + mu).collect();
            if let Some(mut delta) = cyclic_ldl_solve(&shifted, &b, -1.0, &rhs) {
                let size = delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
                if size > cap {
                    let s = cap / size;
                    delta.iter_mut().for_each(|d| *d *= s);
                }
                let slope: f64 = ev.grad.iter().zip(&delta).map(|(g, d)| g * d).sum();
                let mut t = 1.0;
                for _ in 0..30 {
                    let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + t * d).collect();
                    let te = evaluate(map, layout, &trial);
                    let armijo = te.action <= ev.action + ARMIJO * t * slope;
                    let calmer = te.residual < ev.residual && te.action <= ev.action + wtol;
                    if armijo || calmer {
                        accepted = Some((trial, te));
                        break;
                    }
                    t *= 0.5;
                }
            }
            mu *= 10.0;
        }

        match accepted {
            Some((trial, te)) => {
                debug_assert!(te.action <= ev.action + wtol, "action increased during solve");
                // progress is either a real action decrease or a halved residual
                let progress = te.action < ev.action - wtol || te.residual <= 0.5 * ev.residual;
                if progress {
                    stall = 0;
                } else {
                    stall += 1;
                }
                u = trial;
                ev = te;
            }
            None => break,
        }
    }
    Solve { u, residual: ev.residual, action: ev.action, iterations }
}

/// Minimises the periodic action over `(p, q)` configurations, scanning
/// [`PHASES`] seeded initial phases and keeping the least action.
pub fn birkhoff_minimize(map: &TwistMap, p: u64, q: u64, seed: u64) -> Result<Configuration> {
    if !(p > 0 && p < q) {
        return Err(Error::InvalidInput(format!("need 0 < p < q, got ({p}, {q})")));
    }
    if gcd(p, q) != 1 {
        return Err(Error::InvalidInput(format!("({p}, {q}) not coprime")));
    }
    if q > 1 << 26 {
        return Err(Error::InvalidInput(format!("q = {q} exceeds the solver budget")));
    }
    let n = q as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Layout, Solve)> = None;
    let mut best_failed: Option<Solve> = None;
    let mut phase_actions = Vec::with_capacity(PHASES);
    for k in 0..PHASES {
        let jitter: f64 = rng.gen();
        let x0 = (k as f64 + jitter) / (PHASES as f64 * q as f64);
        let layout = Layout::new(map, p, q, x0);
        let s = newton(map, &layout, n);
        if s.residual <= RESIDUAL_TOL {
            phase_actions.push(Some(s.action));
            // strict improvement keeps the earliest (smallest x0) on ties
            let tol = 1e-14 * s.action.abs();
            if best.as_ref().is_none_or(|(_, _, b)| s.action < b.action - tol) {
                best = Some((x0, layout, s));
            }
        } else {
            phase_actions.push(None);
            if best_failed.as_ref().is_none_or(|b| s.residual < b.residual) {
                best_failed = Some(s);
            }
        }
    }
    let Some((x0, _, s)) = best else {
        let f = best_failed.unwrap();
        return Err(Error::Convergence { best_residual: f.residual, iterations: f.iterations });
    };
    let config = Configuration {
        p,
        q,
        phase: x0,
        u: s.u,
        residual: s.residual,
        reduced_action: s.action,
        stats: SolverStats {
            x0,
            iterations: s.iterations,
            phases_converged: phase_actions.iter().filter(|a| a.is_some()).count(),
            phase_actions,
        },
        map: map.clone(),
    };
    config.validate()?;
    Ok(config)
}

/// Smallest window index satisfying the feasibility rules for `kappa_max`,
/// the largest probed kappa: `q_M >= margin q_{N-(kappa_max)}` and the
/// scale cutoff `||q_{n_kappa_max} alpha|| >= 8 / q_M`.
pub fn required_window(alpha: &ConstantTypeIrrational, kappa_max: i64, margin: f64) -> Result<usize> {
    let km = KappaMachinery::new(alpha);
    let w = km.windows(kappa_max)?;
    let q_bar = alpha.q(w.n_bar)? as f64;
    let smallest = alpha.qalpha_norm(w.n_kappa)?;
    (0..alpha.depth())
        .find(|&m| {
            let qm = alpha.denominators()[m] as f64;
            qm >= margin * q_bar && smallest >= 8.0 / qm
        })
        .ok_or(Error::InsufficientDepth {
            what: format!("window for kappa {kappa_max}"),
            required: alpha.depth() + 1,
            depth: alpha.depth(),
        })
}

/// Solves the `(p_M, q_M)` window, checking it resolves kappa up to `kappa_max`.
pub fn minimal_window(
    map: &TwistMap,
    m: usize,
    kappa_max: Option<i64>,
    margin: f64,
    seed: u64,
) -> Result<Configuration> {
    let alpha = map.alpha();
    if m >= alpha.depth() {
        return Err(Error::OutOfRange { index: m, depth: alpha.depth() });
    }
    if let Some(k) = kappa_max {
        let need = required_window(alpha, k, margin)?;
        if m < need {
            return Err(Error::Infeasible(format!("kappa up to {k} requires window index M >= {need}, got M = {m}")));
        }
    }
    birkhoff_minimize(map, alpha.p(m)?, alpha.q(m)?, seed)
}

/// Sampled graph of the candidate invariant circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSample {
    /// `(x mod 1, y)` sorted by the first coordinate.
    pub points: Vec<(f64, f64)>,
    pub holder: HolderDiagnostic,
}

/// Second differences of `y` along the graph at dyadic strides and the
/// log-log slope against stride; a diagnostic only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderDiagnostic {
    pub strides: Vec<usize>,
    pub second_differences: Vec<f64>,
    pub exponent: Option<f64>,
}

impl Configuration {
    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn deviations(&self) -> &[f64] {
        &self.u
    }

    pub fn map(&self) -> &TwistMap {
        &self.map
    }

    pub fn stats(&self) -> &SolverStats {
        &self.stats
    }

    /// Max stationarity defect recorded by the solver.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Periodic action `sum_{s<q} G_n(x_s, x_{s+1})`.
    pub fn action(&self) -> f64 {
        0.5 * (self.p as f64).powi(2) / self.q as f64 + self.reduced_action
    }

    /// Action with the constant rigid-rotation term removed.
    pub fn reduced_action(&self) -> f64 {
        self.reduced_action
    }

    #[inline]
    fn base(&self, i: i64) -> usize {
        i.rem_euclid(self.q as i64) as usize
    }

    /// `(floor(d p / q), d p mod q)`.
    #[inline]
    fn rotation_split(&self, d: i64) -> (i64, u64) {
        let dp = d as i128 * self.p as i128;
        let q = self.q as i128;
        (dp.div_euclid(q) as i64, dp.rem_euclid(q) as u64)
    }

    /// Deviation `u_i` from the rigid rotation.
    pub fn u(&self, i: i64) -> f64 {
        self.u[self.base(i)]
    }

    /// Lifted position `x_i`, with `x_{i+q} = x_i + p`.
    pub fn x(&self, i: i64) -> f64 {
        let (k, m) = self.rotation_split(i);
        k as f64 + (m as f64 / self.q as f64 + self.phase + self.u(i))
    }

    pub fn x_mod1(&self, i: i64) -> f64 {
        let (_, m) = self.rotation_split(i);
        frac(m as f64 / self.q as f64 + self.phase + self.u(i))
    }

    /// `y_i - p/q = u_{i+1} - u_i`.
    pub fn dy(&self, i: i64) -> f64 {
        self.u(i + 1) - self.u(i)
    }

    /// `y_i = x_{i+1} - x_i`.
    pub fn y(&self, i: i64) -> f64 {
        self.p as f64 / self.q as f64 + self.dy(i)
    }

    /// `theta = x_j - x_i` split as an integer plus a remainder near `[0, 1)`.
    pub fn theta_parts(&self, i: i64, j: i64) -> (i64, f64) {
        let (k, m) = self.rotation_split(j - i);
        (k, m as f64 / self.q as f64 + (self.u(j) - self.u(i)))
    }

    /// Lifted `theta = x_j - x_i`.
    pub fn theta(&self, i: i64, j: i64) -> f64 {
        let (k, f) = self.theta_parts(i, j);
        k as f64 + f
    }

    /// `||x_j - x_i||`.
    pub fn big_theta(&self, i: i64, j: i64) -> f64 {
        circle_norm(self.theta_parts(i, j).1)
    }

    /// `frac(x_j - x_i)` in `[0, 1)`.
    pub fn offset(&self, i: i64, j: i64) -> f64 {
        frac(self.theta_parts(i, j).1)
    }

    /// `x_j - x_i` reduced to `(-1/2, 1/2]`.
    pub fn theta_centered(&self, i: i64, j: i64) -> f64 {
        let f = self.theta_parts(i, j).1;
        let c = f - f.round();
        if c <= -0.5 {
            c + 1.0
        } else {
            c
        }
    }

    /// `r = y_j - y_i`.
    pub fn r(&self, i: i64, j: i64) -> f64 {
        self.dy(j) - self.dy(i)
    }

    /// `|d| |alpha - p/q|`, the drift between rotation by `p/q` and by alpha.
    pub fn rational_gap(&self, d: i64) -> f64 {
        let alpha = self.map.alpha().value();
        (d as f64).abs() * (alpha - self.p as f64 / self.q as f64).abs()
    }

    fn layout(&self) -> Layout {
        Layout::new(&self.map, self.p, self.q, self.phase)
    }

    /// Independent re-evaluation of the discrete Euler-Lagrange defect from
    /// lifted coordinates and the closed-form partials.
    pub fn el_residual(&self) -> f64 {
        let m = &self.map;
        (0..self.q as i64)
            .map(|i| {
                let (a, b, c) = (self.x(i - 1), self.x(i), self.x(i + 1));
                (m.d1_action(b, c) + m.d2_action(a, b)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Gradient of the periodic action in deviation form.
    pub fn gradient(&self) -> Vec<f64> {
        evaluate(&self.map, &self.layout(), &self.u).grad
    }

    /// Gaps between circularly consecutive points, in rotation order.
    pub fn rotation_gaps(&self) -> Vec<f64> {
        let q = self.q as usize;
        let mut order = vec![0usize; q];
        for i in 0..q {
            let m = (i as u128 * self.p as u128 % self.q as u128) as usize;
            order[m] = i;
        }
        let step = 1.0 / self.q as f64;
        (0..q).map(|k| step + self.u[order[(k + 1) % q]] - self.u[order[k]]).collect()
    }

    /// Birkhoff ordering: the lifted points are ordered exactly as the
    /// rotation by `p/q` orders them.
    pub fn ordering_check(&self) -> bool {
        self.rotation_gaps().iter().all(|&g| g > 0.0)
    }

    fn validate(&self) -> Result<()> {
        let gaps = self.rotation_gaps();
        let (k, min) =
            gaps.iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (k, &g)| if g.abs() < acc.1.abs() { (k, g) } else { acc });
        if min.abs() < DEGENERACY_FLOOR {
            return Err(Error::Degenerate(format!(
                "points {k} and {} in rotation order are {min:e} apart",
                (k + 1) % gaps.len()
            )));
        }
        if let Some(k) = gaps.iter().position(|&g| g <= 0.0) {
            return Err(Error::Ordering(format!("rotation-order gap {k} is {:e}", gaps[k])));
        }
        Ok(())
    }

    /// `(x mod 1, y)` sorted by position, with a Holder diagnostic.
    pub fn graph_extract(&self) -> Result<GraphSample> {
        let q = self.q as i64;
        let mut points: Vec<(f64, f64)> = (0..q).map(|i| (self.x_mod1(i), self.y(i))).collect();
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = points.windows(2).find(|w| w[1].0 <= w[0].0) {
            return Err(Error::Degenerate(format!("duplicate graph abscissa {}", w[0].0)));
        }
        let holder = holder_diagnostic(&points.iter().map(|p| p.1).collect::<Vec<_>>());
        Ok(GraphSample { points, holder })
    }
}

fn holder_diagnostic(y: &[f64]) -> HolderDiagnostic {
    let n = y.len();
    let mut strides = Vec::new();
    let mut values = Vec::new();
    let mut h = 1;
    while n >= 8 && h <= n / 8 {
        let d = (0..n).map(|k| (y[(k + h) % n] - 2.0 * y[k] + y[(k + n - h) % n]).abs()).fold(0.0, f64::max);
        strides.push(h);
        values.push(d);
        h *= 2;
    }
    let pts: Vec<(f64, f64)> =
        strides.iter().zip(&values).filter(|(_, &v)| v > 0.0).map(|(&h, &v)| ((h as f64).ln(), v.ln())).collect();
    let exponent = (pts.len() >= 2).then(|| {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    HolderDiagnostic { strides, second_differences: values, exponent }
}
