//! The generating family `G_n(x, x') = (x - x')^2 / 2 + q_n^-(4+eps) V(q_n x')`
//! and the exact area-preserving twist map it induces.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::number_theory::ConstantTypeIrrational;

const TAU: f64 = 2.0 * PI;

/// Fractional part in `[0, 1)`.
#[inline]
pub(crate) fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    // x slightly below an integer can round up to exactly 1.0
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// A period-1 cosine polynomial `V(x) = sum_k c_k cos(2 pi k x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    modes: Vec<(u32, f64)>,
}

impl Potential {
    pub fn new(modes: Vec<(u32, f64)>) -> Result<Self> {
        if modes.iter().any(|&(k, c)| k == 0 || !c.is_finite()) {
            return Err(Error::InvalidInput("potential modes need k >= 1 and finite coefficients".into()));
        }
        Ok(Self { modes })
    }

    /// `(2 pi)^-2 cos(2 pi x)`, so that `max |V'| = 1 / (2 pi)` and `V'' = -cos`.
    pub fn standard() -> Self {
        Self { modes: vec![(1, 1.0 / (TAU * TAU))] }
    }

    pub fn zero() -> Self {
        Self { modes: Vec::new() }
    }

    pub fn modes(&self) -> &[(u32, f64)] {
        &self.modes
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { modes: self.modes.iter().map(|&(k, c)| (k, c * factor)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.modes.iter().all(|&(_, c)| c == 0.0)
    }

    /// `j`-th derivative at `x`, `0 <= j <= 4`.
    pub fn derivative(&self, j: u32, x: f64) -> f64 {
        self.modes
            .iter()
            .map(|&(k, c)| {
                let w = TAU * k as f64;
                let (s, co) = (w * x).sin_cos();
                let trig = match j % 4 {
                    0 => co,
                    1 => -s,
                    2 => -co,
                    _ => s,
                };
                c * w.powi(j as i32) * trig
            })
            .sum()
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(0, x)
    }

    pub fn d1(&self, x: f64) -> f64 {
        self.derivative(1, x)
    }

    pub fn d2(&self, x: f64) -> f64 {
        self.derivative(2, x)
    }

    pub fn d3(&self, x: f64) -> f64 {
        self.derivative(3, x)
    }

    pub fn d4(&self, x: f64) -> f64 {
        self.derivative(4, x)
    }

    /// `sum 2 pi k |c_k|`, an upper bound on `max |V'|` (exact for one mode).
    pub fn derivative_bound(&self) -> f64 {
        self.modes.iter().map(|&(k, c)| TAU * k as f64 * c.abs()).sum()
    }

    /// Upper bound on the `C^{4+eps}` norm: sup norms of `V..V''''` plus the
    /// eps-Holder seminorm of `V''''`, using `|cos a - cos b| <= 2^(1-eps) |a-b|^eps`.
    pub fn c4_eps_norm_bound(&self, eps: f64) -> f64 {
        self.modes
            .iter()
            .map(|&(k, c)| {
                let w = TAU * k as f64;
                let sup: f64 = (0..=4).map(|j| w.powi(j)).sum();
                c.abs() * (sup + w.powi(4) * 2f64.powf(1.0 - eps) * w.powf(eps))
            })
            .sum()
    }
}

/// The map `x' = x + y`, `y' = y + q_n^-(3+eps) V'(q_n x')`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistMap {
    alpha: ConstantTypeIrrational,
    level: usize,
    eps: f64,
    potential: Potential,
    qn: u64,
    coeff: f64,
    action_coeff: f64,
}

/// Maximum deviations found by a sampled self-check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapCheck {
    pub samples: usize,
    pub det_deviation: f64,
    pub y_deviation: f64,
    pub yp_deviation: f64,
    pub inverse_deviation: f64,
}

impl MapCheck {
    /// Largest deviation of the generating-function identities.
    pub fn generating_deviation(&self) -> f64 {
        self.y_deviation.max(self.yp_deviation)
    }
}

impl TwistMap {
    pub fn new(alpha: ConstantTypeIrrational, level: usize, eps: f64, potential: Potential) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidInput(format!("eps {eps} outside (0, 1)")));
        }
        let qn = alpha.q(level)?;
        let qf = qn as f64;
        Ok(Self { alpha, level, eps, potential, qn, coeff: qf.powf(-(3.0 + eps)), action_coeff: qf.powf(-(4.0 + eps)) })
    }

    pub fn alpha(&self) -> &ConstantTypeIrrational {
        &self.alpha
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn qn(&self) -> u64 {
        self.qn
    }

    /// `q_n^-(3+eps)`.
    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    /// `q_n^-(4+eps)`.
    pub fn action_coeff(&self) -> f64 {
        self.action_coeff
    }

    /// Largest possible one-step change of `y`: `coeff * max |V'|`.
    pub fn max_kick(&self) -> f64 {
        self.coeff * self.potential.derivative_bound()
    }

    /// `q_n x mod 1`, reduced before multiplying to keep lifted inputs accurate.
    #[inline]
    pub fn phase(&self, x: f64) -> f64 {
        frac(self.qn as f64 * frac(x))
    }

    /// `coeff * V'(q_n x)`, the momentum kick at position `x`.
    #[inline]
    pub fn kick(&self, x: f64) -> f64 {
        self.kick_at_phase(self.phase(x))
    }

    #[inline]
    pub fn kick_at_phase(&self, phase: f64) -> f64 {
        self.coeff * self.potential.d1(phase)
    }

    /// `d/dx [coeff V'(q_n x)] = coeff q_n V''(q_n x)` at a reduced phase.
    #[inline]
    pub fn curvature_at_phase(&self, phase: f64) -> f64 {
        self.coeff * self.qn as f64 * self.potential.d2(phase)
    }

    pub fn action(&self, x: f64, xp: f64) -> f64 {
        let d = x - xp;
        0.5 * d * d + self.action_coeff * self.potential.value(self.phase(xp))
    }

    /// `d/dx G_n(x, x')`.
    pub fn d1_action(&self, x: f64, xp: f64) -> f64 {
        x - xp
    }

    /// `d/dx' G_n(x, x')`.
    pub fn d2_action(&self, x: f64, xp: f64) -> f64 {
        xp - x + self.kick(xp)
    }

    pub fn step(&self, x: f64, y: f64) -> (f64, f64) {
        let xp = x + y;
        (xp, y + self.kick(xp))
    }

    pub fn inverse_step(&self, xp: f64, yp: f64) -> (f64, f64) {
        let y = yp - self.kick(xp);
        (xp - y, y)
    }

    /// `[[dx'/dx, dx'/dy], [dy'/dx, dy'/dy]]`.
    pub fn jacobian(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        let a = self.curvature_at_phase(self.phase(x + y));
        [[1.0, 1.0], [a, 1.0 + a]]
    }

    /// Sampled determinant, generating-function and inverse round-trip checks.
    pub fn self_check(&self, samples: usize, seed: u64) -> MapCheck {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out =
            MapCheck { samples, det_deviation: 0.0, y_deviation: 0.0, yp_deviation: 0.0, inverse_deviation: 0.0 };
        for _ in 0..samples {
            let x: f64 = rng.gen::<f64>();
            let y: f64 = rng.gen_range(-1.0..1.0);
            let j = self.jacobian(x, y);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            out.det_deviation = out.det_deviation.max((det - 1.0).abs());
            let (xp, yp) = self.step(x, y);
            out.y_deviation = out.y_deviation.max((y + self.d1_action(x, xp)).abs());
            out.yp_deviation = out.yp_deviation.max((yp - self.d2_action(x, xp)).abs());
            let (bx, by) = self.inverse_step(xp, yp);
            out.inverse_deviation = out.inverse_deviation.max((bx - x).abs().max((by - y).abs()));
        }
        out
    }

    /// Max deviation of `y = -d1 G(x, x')` and `y' = d2 G(x, x')` over random points.
    pub fn generating_consistency(&self, samples: usize, seed: u64) -> Result<f64> {
        if samples == 0 {
            return Err(Error::InvalidInput("samples must be >= 1".into()));
        }
        Ok(self.self_check(samples, seed).generating_deviation())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn golden_map(level: usize, potential: Potential) -> TwistMap {
        TwistMap::new(ConstantTypeIrrational::golden(24).unwrap(), level, 0.5, potential).unwrap()
    }

    fn cos_map() -> TwistMap {
        // q_4 = 5 for the golden mean
        golden_map(4, Potential::new(vec![(1, 1.0)]).unwrap())
    }

    #[test]
    fn action_examples() {
        let free = golden_map(10, Potential::zero());
        assert!((free.action(0.2, 0.7) - 0.125).abs() < 1e-16);
        let m = cos_map();
        let expected = 0.005 - 5f64.powf(-4.5);
        assert!((m.action(0.0, 0.1) - expected).abs() < 1e-15);
    }

    #[test]
    fn step_examples() {
        let free = golden_map(10, Potential::zero());
        assert_eq!(free.step(0.3, 0.05), (0.35, 0.05));
        assert_eq!(free.inverse_step(0.35, 0.05), (0.3, 0.05));
        let m = cos_map();
        let (xp, yp) = m.step(0.0, 0.05);
        assert_eq!(xp, 0.05);
        // V'(u) = -2 pi sin(2 pi u) at u = 0.25
        assert!((yp - (0.05 - TAU * 5f64.powf(-3.5))).abs() < 1e-15);
        assert_eq!(free.jacobian(0.1, 0.2), [[1.0, 1.0], [0.0, 1.0]]);
    }

    #[test]
    fn jacobian_matches_finite_difference() {
        let m = golden_map(10, Potential::standard().scaled(1e4));
        let (x, y) = (0.3141, 0.0271);
        let h = 1e-6;
        let j = m.jacobian(x, y);
        let fd = (m.step(x + h, y).1 - m.step(x - h, y).1) / (2.0 * h);
        assert!((j[1][0] - fd).abs() < 1e-6 * j[1][0].abs().max(1e-3));
        assert_eq!(j[0][1], 1.0);
    }

    #[test]
    fn self_checks_at_scale() {
        let m = golden_map(10, Potential::standard());
        let c = m.self_check(100_000, 7);
        assert!(c.det_deviation < 1e-12);
        assert!(c.generating_deviation() < 1e-10);
        assert!(c.inverse_deviation < 1e-12);
        let free = golden_map(10, Potential::zero());
        // only the rounding of x + y remains
        assert!(free.generating_consistency(1000, 1).unwrap() <= f64::EPSILON);
        assert!(free.generating_consistency(0, 1).is_err());
    }

    #[test]
    fn potential_derivatives_against_finite_differences() {
        let v = Potential::new(vec![(1, 0.3), (3, -0.05)]).unwrap();
        let h = 1e-5;
        for &x in &[0.0, 0.11, 0.37, 0.8] {
            for j in 0..4 {
                let fd = (v.derivative(j, x + h) - v.derivative(j, x - h)) / (2.0 * h);
                let exact = v.derivative(j + 1, x);
                assert!((fd - exact).abs() < 1e-6 * (1.0 + exact.abs()), "j={j} x={x}");
            }
        }
        let s = Potential::standard();
        assert!((s.derivative_bound() - 1.0 / TAU).abs() < 1e-16);
        assert!((s.d2(0.2) + (TAU * 0.2).cos()).abs() < 1e-15);
        assert!(s.c4_eps_norm_bound(0.5).is_finite());
    }

    #[test]
    fn rejects_bad_parameters() {
        let a = ConstantTypeIrrational::golden(10).unwrap();
        assert!(TwistMap::new(a.clone(), 4, 1.0, Potential::zero()).is_err());
        assert!(TwistMap::new(a.clone(), 11, 0.5, Potential::zero()).is_err());
        assert!(Potential::new(vec![(0, 1.0)]).is_err());
    }

    proptest! {
        #[test]
        fn translation_invariance(x in -50.0f64..50.0, xp in -50.0f64..50.0, y in -1.0f64..1.0) {
            let m = golden_map(10, Potential::standard());
            prop_assert!((m.action(x + 1.0, xp + 1.0) - m.action(x, xp)).abs() < 1e-9);
            let (a, b) = m.step(x, y);
            let (c, d) = m.step(x + 1.0, y);
            prop_assert!((c - a - 1.0).abs() < 1e-12);
            prop_assert!((d - b).abs() < 1e-15);
        }

        #[test]
        fn kick_bound(x in -10.0f64..10.0, y in -1.0f64..1.0) {
            let m = golden_map(10, Potential::standard());
            let (_, yp) = m.step(x, y);
            prop_assert!((yp - y).abs() <= m.max_kick() * (1.0 + 1e-12));
        }

        #[test]
        fn round_trip(x in -10.0f64..10.0, y in -1.0f64..1.0) {
            let m = golden_map(6, Potential::standard().scaled(100.0));
            let (xp, yp) = m.step(x, y);
            let (bx, by) = m.inverse_step(xp, yp);
            prop_assert!((bx - x).abs() < 1e-12 && (by - y).abs() < 1e-12);
        }
    }
}
