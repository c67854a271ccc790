//! Continued-fraction arithmetic for constant-type irrationals and the dyadic
//! kappa indexing built on top of the convergent denominators.
//!
//! The irrational is described by a block of partial quotients repeated
//! forever, `alpha = [0; a_1, a_2, ...]`. Only `depth` convergents are exposed;
//! arithmetic on `alpha` itself goes through a much deeper reference convergent
//! `P/Q` held in exact 128-bit integers, so `|d * alpha - p|` is evaluated as an
//! exact integer residue divided by `Q` and only rounded to `f64` at the end.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reference denominators stay below this so that `|d| * P` fits in `u128`.
const REF_Q_LIMIT: u128 = 1 << 88;
/// Largest step `|d|` accepted by the exact norm evaluation.
pub const MAX_STEP: u64 = 1 << 39;
/// Stored convergent denominators must stay below this.
const STORED_Q_LIMIT: u64 = 1 << 38;

/// Flat metric on the circle: distance from `x` to the nearest integer.
pub fn circle_norm(x: f64) -> f64 {
    let f = x - x.floor();
    f.min(1.0 - f)
}

/// A bounded-type irrational in (0, 1) together with its convergents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantTypeIrrational {
    period: Vec<u64>,
    /// a_0 = 0 followed by a_1..a_D.
    quotients: Vec<u64>,
    p: Vec<u64>,
    q: Vec<u64>,
    bound: u64,
    ref_p: u128,
    ref_q: u128,
}

impl ConstantTypeIrrational {
    /// Builds `[0; a_1, a_2, ...]` where the supplied quotients repeat with
    /// period `quotients.len()`, storing convergents `0..=depth`.
    pub fn from_partial_quotients(quotients: &[u64], depth: usize) -> Result<Self> {
        if quotients.is_empty() {
            return Err(Error::InvalidInput("empty partial-quotient list".into()));
        }
        if quotients.contains(&0) {
            return Err(Error::InvalidInput("partial quotients must be positive".into()));
        }
        if depth < 4 {
            return Err(Error::InvalidInput(format!("depth {depth} < 4")));
        }
        let period = quotients.to_vec();
        let bound = *period.iter().max().unwrap();
        let a_at = |i: usize| period[(i - 1) % period.len()];

        let mut a = vec![0u64];
        let mut p = vec![0u64];
        let mut q = vec![1u64];
        // (p_{-1}, q_{-1}) = (1, 0)
        let (mut pm, mut qm) = (1u64, 0u64);
        for i in 1..=depth {
            let ai = a_at(i);
            let (pi, qi) = (
                ai.checked_mul(p[i - 1]).and_then(|v| v.checked_add(pm)),
                ai.checked_mul(q[i - 1]).and_then(|v| v.checked_add(qm)),
            );
            let (pi, qi) = match (pi, qi) {
                (Some(pi), Some(qi)) if qi < STORED_Q_LIMIT => (pi, qi),
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "depth {depth} exceeds the precision budget (q_{i} >= 2^38)"
                    )))
                }
            };
            pm = p[i - 1];
            qm = q[i - 1];
            a.push(ai);
            p.push(pi);
            q.push(qi);
        }

        // Deep reference convergent for extended-precision arithmetic.
        let (mut rp, mut rq) = (p[depth] as u128, q[depth] as u128);
        let (mut rpm, mut rqm) = (p[depth - 1] as u128, q[depth - 1] as u128);
        let mut i = depth + 1;
        loop {
            let ai = a_at(i) as u128;
            let nq = ai * rq + rqm;
            if nq >= REF_Q_LIMIT {
                break;
            }
            let np = ai * rp + rpm;
            rpm = rp;
            rqm = rq;
            rp = np;
            rq = nq;
            i += 1;
        }

        Ok(Self { period, quotients: a, p, q, bound, ref_p: rp, ref_q: rq })
    }

    /// All-ones expansion, `alpha = (sqrt 5 - 1) / 2`.
    pub fn golden(depth: usize) -> Result<Self> {
        Self::from_partial_quotients(&[1], depth)
    }

    /// All-twos expansion, `alpha = sqrt 2 - 1`.
    pub fn silver(depth: usize) -> Result<Self> {
        Self::from_partial_quotients(&[2], depth)
    }

    pub fn preset(name: &str, depth: usize) -> Result<Self> {
        match name {
            "golden" => Self::golden(depth),
            "silver" => Self::silver(depth),
            other => Err(Error::InvalidInput(format!("unknown alpha preset `{other}`"))),
        }
    }

    pub fn period(&self) -> &[u64] {
        &self.period
    }

    pub fn depth(&self) -> usize {
        self.q.len() - 1
    }

    /// `A_alpha`, the largest partial quotient.
    pub fn bound(&self) -> u64 {
        self.bound
    }

    /// Partial quotient `a_i` for `1 <= i <= depth` (`a_0 = 0`).
    pub fn a(&self, i: usize) -> Result<u64> {
        self.quotients.get(i).copied().ok_or(Error::OutOfRange { index: i, depth: self.depth() })
    }

    pub fn p(&self, i: usize) -> Result<u64> {
        self.p.get(i).copied().ok_or(Error::OutOfRange { index: i, depth: self.depth() })
    }

    pub fn q(&self, i: usize) -> Result<u64> {
        self.q.get(i).copied().ok_or(Error::OutOfRange { index: i, depth: self.depth() })
    }

    pub fn denominators(&self) -> &[u64] {
        &self.q
    }

    pub fn numerators(&self) -> &[u64] {
        &self.p
    }

    pub fn value(&self) -> f64 {
        self.ref_p as f64 / self.ref_q as f64
    }

    /// Decimal expansion of alpha with `digits` digits after the point.
    pub fn value_decimal(&self, digits: usize) -> String {
        let mut s = String::from("0.");
        let mut rem = self.ref_p;
        for _ in 0..digits {
            rem *= 10;
            s.push(char::from(b'0' + (rem / self.ref_q) as u8));
            rem %= self.ref_q;
        }
        s
    }

    /// Exact residue `r` with `frac(d * alpha) = r / Q`, together with `Q`.
    pub fn frac_mul_exact(&self, d: i64) -> (u128, u128) {
        let m = d.unsigned_abs();
        assert!(m < MAX_STEP, "step {d} exceeds exact-arithmetic range");
        let r = (m as u128 * self.ref_p) % self.ref_q;
        let r = if d < 0 && r != 0 { self.ref_q - r } else { r };
        (r, self.ref_q)
    }

    /// `frac(d * alpha)` in `[0, 1)`.
    pub fn frac_mul(&self, d: i64) -> f64 {
        let (r, q) = self.frac_mul_exact(d);
        r as f64 / q as f64
    }

    /// `||d * alpha||`, exact residue then a single rounding.
    pub fn norm_mul(&self, d: i64) -> f64 {
        let (r, q) = self.frac_mul_exact(d);
        r.min(q - r) as f64 / q as f64
    }

    /// `||q_n alpha||`; equal to `|q_n alpha - p_n|` for `n >= 1`.
    pub fn qalpha_norm(&self, n: usize) -> Result<f64> {
        if n >= self.depth() {
            return Err(Error::OutOfRange { index: n, depth: self.depth() });
        }
        Ok(self.norm_mul(self.q[n] as i64))
    }

    /// Strict Dirichlet bracket `1/((a_{n+1}+2) q_n) < |q_n alpha - p_n| < 1/(a_{n+1} q_n)`,
    /// decided in exact integer arithmetic.
    pub fn dirichlet_holds(&self, n: usize) -> Result<bool> {
        if n >= self.depth() {
            return Err(Error::OutOfRange { index: n, depth: self.depth() });
        }
        // |q_n alpha - p_n| as an exact residue over Q; both products < 2^127.
        let big_q = self.ref_q;
        let lhs = self.q[n] as u128 * self.ref_p;
        let rhs = self.p[n] as u128 * big_q;
        let num = lhs.abs_diff(rhs);
        let a = self.quotients[n + 1] as u128;
        let qn = self.q[n] as u128;
        let lower = num > big_q / ((a + 2) * qn);
        let upper = num <= (big_q - 1) / (a * qn);
        Ok(lower && upper)
    }

    /// Checks the stored-range invariants: recurrence, doubling, Dirichlet bracket.
    pub fn verify_invariants(&self) -> Result<()> {
        let d = self.depth();
        for i in 1..d {
            if self.q[i + 1] != self.quotients[i + 1] * self.q[i] + self.q[i - 1] {
                return Err(Error::InvalidInput(format!("recurrence fails at {i}")));
            }
        }
        for n in 0..=d {
            if n + 2 <= d && self.q[n + 2] < 2 * self.q[n] {
                return Err(Error::InvalidInput(format!("q_{{n+2}} >= 2 q_n fails at {n}")));
            }
            // Doubling every two steps from q_0 = 1 gives q_n >= sqrt2^(n-1).
            if n >= 1 && (self.q[n] as u128).pow(2) < 1u128 << (n - 1) {
                return Err(Error::InvalidInput(format!("q_n >= sqrt2^(n-1) fails at {n}")));
            }
        }
        for n in 0..d {
            if !self.dirichlet_holds(n)? {
                return Err(Error::InvalidInput(format!("Dirichlet bracket fails at {n}")));
            }
        }
        Ok(())
    }

    /// `kappa_0 = [log2 a_{n0+1} + log2 q_{n0}]`.
    pub fn kappa_of_n(&self, n0: usize) -> Result<i64> {
        if n0 + 1 >= self.depth() {
            return Err(Error::OutOfRange { index: n0, depth: self.depth() });
        }
        Ok(floor_log2(self.quotients[n0 + 1] as u128 * self.q[n0] as u128))
    }

    /// Evaluates the implication `q_M <= q_m^(1+delta)  =>  M <= m + [m/2]`.
    pub fn check_arithmetic_growth(&self, m: usize, big_m: usize, delta: f64) -> Result<bool> {
        let limit = std::f64::consts::LN_2 / (5.0 * (1.0 + self.bound as f64).ln());
        if !(delta > 0.0 && delta < limit) {
            return Err(Error::InvalidInput(format!("delta {delta} outside (0, {limit})")));
        }
        if m < 20 || big_m < m {
            return Err(Error::InvalidInput(format!("need M >= m >= 20, got m={m}, M={big_m}")));
        }
        if big_m > self.depth() {
            return Err(Error::OutOfRange { index: big_m, depth: self.depth() });
        }
        let qm = self.q[m] as f64;
        let q_big = self.q[big_m] as f64;
        let premise = q_big.ln() <= (1.0 + delta) * qm.ln();
        Ok(!premise || big_m <= m + m / 2)
    }
}

fn floor_log2(v: u128) -> i64 {
    debug_assert!(v > 0);
    127 - v.leading_zeros() as i64
}

/// Indices `n_kappa`, `N~ = n_kappa - 1` and `N- = n_kappa + 2 gamma_0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KappaWindows {
    pub kappa: i64,
    pub kappa_check: i64,
    pub n_kappa: usize,
    pub n_tilde: usize,
    pub n_bar: usize,
}

/// The dyadic indexing machinery: `varphi`, its floor, the image set `S`,
/// the substitute inverse `psi` and `gamma_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaMachinery {
    varphi: Vec<f64>,
    phi: Vec<i64>,
    image: BTreeSet<i64>,
    gamma0: usize,
    depth: usize,
}

impl KappaMachinery {
    pub fn new(alpha: &ConstantTypeIrrational) -> Self {
        let depth = alpha.depth();
        // varphi(m) needs a_{m+1}, so m runs over 0..depth.
        let mut varphi = Vec::with_capacity(depth);
        let mut phi = Vec::with_capacity(depth);
        for m in 0..depth {
            let a = alpha.quotients[m + 1];
            let q = alpha.q[m];
            varphi.push((a as f64).log2() + (q as f64).log2());
            phi.push(floor_log2(a as u128 * q as u128));
        }
        let image = phi.iter().copied().collect();
        let gamma0 = floor_log2(2 * (alpha.bound as u128 + 2)) as usize + 1;
        Self { varphi, phi, image, gamma0, depth }
    }

    pub fn gamma0(&self) -> usize {
        self.gamma0
    }

    pub fn varphi(&self, m: usize) -> Result<f64> {
        self.varphi.get(m).copied().ok_or(Error::OutOfRange { index: m, depth: self.depth })
    }

    pub fn phi(&self, m: usize) -> Result<i64> {
        self.phi.get(m).copied().ok_or(Error::OutOfRange { index: m, depth: self.depth })
    }

    pub fn image(&self) -> &BTreeSet<i64> {
        &self.image
    }

    pub fn contains(&self, kappa: i64) -> bool {
        self.image.contains(&kappa)
    }

    /// `kappa` itself when in `S`, otherwise the largest element of `S` below
    /// it, looked up at most two steps down.
    pub fn kappa_check(&self, kappa: i64) -> Result<i64> {
        let min = *self.image.iter().next().unwrap();
        let max = *self.image.iter().next_back().unwrap();
        if kappa < min {
            return Err(Error::Kappa { kappa, reason: format!("below min(S) = {min}") });
        }
        if kappa > max {
            return Err(Error::InsufficientDepth {
                what: format!("kappa {kappa}"),
                required: self.depth + 3,
                depth: self.depth,
            });
        }
        (0..=2)
            .map(|k| kappa - k)
            .find(|c| self.image.contains(c))
            .ok_or_else(|| Error::Kappa { kappa, reason: "no element of S within two steps below".into() })
    }

    /// `psi(kappa) = min { m : phi(m) = kappa_check }`.
    pub fn psi(&self, kappa: i64) -> Result<usize> {
        let kc = self.kappa_check(kappa)?;
        Ok(self.phi.iter().position(|&v| v == kc).unwrap())
    }

    pub fn windows(&self, kappa: i64) -> Result<KappaWindows> {
        let kc = self.kappa_check(kappa)?;
        let n_kappa = self.psi(kappa)?;
        if n_kappa == 0 {
            return Err(Error::Kappa { kappa, reason: "n_kappa = 0 leaves N~ undefined".into() });
        }
        let n_bar = n_kappa + 2 * self.gamma0;
        if n_bar >= self.depth {
            return Err(Error::InsufficientDepth {
                what: format!("N-({kappa}) = {n_bar}"),
                required: n_bar,
                depth: self.depth,
            });
        }
        Ok(KappaWindows { kappa, kappa_check: kc, n_kappa, n_tilde: n_kappa - 1, n_bar })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const GOLDEN_30: &str = "0.618033988749894848204586834365";
    const SILVER_30: &str = "0.414213562373095048801688724209";

    fn golden() -> ConstantTypeIrrational {
        ConstantTypeIrrational::golden(24).unwrap()
    }

    #[test]
    fn golden_convergents() {
        let a = ConstantTypeIrrational::golden(10).unwrap();
        assert_eq!(a.denominators(), &[1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89]);
        assert!((a.value() - 0.6180339887).abs() < 1e-10);
        assert_eq!(a.bound(), 1);
    }

    #[test]
    fn silver_convergents() {
        let a = ConstantTypeIrrational::silver(5).unwrap();
        assert_eq!(a.denominators(), &[1, 2, 5, 12, 29, 70]);
        assert!((a.value() - (2f64.sqrt() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ConstantTypeIrrational::from_partial_quotients(&[1], 1).is_err());
        assert!(ConstantTypeIrrational::from_partial_quotients(&[], 10).is_err());
        assert!(ConstantTypeIrrational::from_partial_quotients(&[1, 0], 10).is_err());
        assert!(ConstantTypeIrrational::golden(200).is_err());
    }

    #[test]
    fn thirty_digits() {
        assert_eq!(golden().value_decimal(30), GOLDEN_30);
        assert_eq!(ConstantTypeIrrational::silver(10).unwrap().value_decimal(30), SILVER_30);
    }

    #[test]
    fn circle_norm_examples() {
        assert_eq!(circle_norm(0.75), 0.25);
        assert_eq!(circle_norm(3.0), 0.0);
        assert!((circle_norm(5.0 * 0.6180339887) - 0.0901699435).abs() < 1e-9);
        assert!((circle_norm(-0.2) - 0.2).abs() < 1e-15);
    }

    // Oracle: for the golden mean ||F_{k} alpha|| = alpha^k and q_n = F_{n+1};
    // for sqrt2 - 1, ||q_n alpha|| = (sqrt2 - 1)^(n+1).
    #[test]
    fn qalpha_norm_against_power_oracle() {
        let g = golden();
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        assert!((g.qalpha_norm(0).unwrap() - phi * phi).abs() < 1e-15);
        for n in 1..g.depth() {
            let oracle = phi.powi(n as i32 + 1);
            let got = g.qalpha_norm(n).unwrap();
            assert!((got - oracle).abs() <= 1e-13 * oracle, "n={n}");
        }
        assert!((g.qalpha_norm(4).unwrap() - 0.0901699).abs() < 1e-7);
        assert!((g.qalpha_norm(6).unwrap() - 0.0344419).abs() < 1e-7);
        assert!((g.qalpha_norm(10).unwrap() - 0.0050249).abs() < 1e-7);

        let s = ConstantTypeIrrational::silver(12).unwrap();
        let sv = 2f64.sqrt() - 1.0;
        for n in 1..s.depth() {
            let oracle = sv.powi(n as i32 + 1);
            assert!((s.qalpha_norm(n).unwrap() - oracle).abs() <= 1e-13 * oracle);
        }
        assert!((s.qalpha_norm(1).unwrap() - 0.1715729).abs() < 1e-7);
        assert!(g.qalpha_norm(24).is_err());
    }

    #[test]
    fn stored_invariants_hold() {
        golden().verify_invariants().unwrap();
        ConstantTypeIrrational::silver(20).unwrap().verify_invariants().unwrap();
        ConstantTypeIrrational::from_partial_quotients(&[1, 3, 2], 22).unwrap().verify_invariants().unwrap();
    }

    #[test]
    fn kappa_of_n_examples() {
        let g = golden();
        assert_eq!(g.kappa_of_n(10).unwrap(), 6);
        assert_eq!(g.kappa_of_n(2).unwrap(), 1);
        let nrm = g.qalpha_norm(10).unwrap();
        assert!(nrm >= 2f64.powi(-10) && nrm <= 2f64.powi(-6));
        let s = ConstantTypeIrrational::silver(10).unwrap();
        assert_eq!(s.kappa_of_n(2).unwrap(), 3);
        assert!(g.kappa_of_n(23).is_err());
    }

    #[test]
    fn gamma0_and_windows() {
        let g = golden();
        let km = KappaMachinery::new(&g);
        assert_eq!(km.gamma0(), 3);
        let w = km.windows(6).unwrap();
        assert_eq!((w.n_kappa, w.n_tilde, w.n_bar), (10, 9, 16));
        let w = km.windows(10).unwrap();
        assert_eq!((w.n_kappa, w.n_tilde, w.n_bar), (16, 15, 22));
        assert_eq!(KappaMachinery::new(&ConstantTypeIrrational::silver(10).unwrap()).gamma0(), 4);
        // psi on S is the least preimage
        for m in 0..g.depth() {
            let k = km.phi(m).unwrap();
            let n = km.psi(k).unwrap();
            assert_eq!(km.phi(n).unwrap(), k);
            assert!(n <= m);
        }
        assert!(km.windows(-1).is_err());
        assert!(matches!(km.windows(12), Err(Error::InsufficientDepth { .. })));
    }

    #[test]
    fn varphi_increments_and_phi_growth() {
        for alpha in [
            golden(),
            ConstantTypeIrrational::silver(20).unwrap(),
            ConstantTypeIrrational::from_partial_quotients(&[3, 1, 2], 20).unwrap(),
        ] {
            let km = KappaMachinery::new(&alpha);
            let cap = (alpha.bound() as f64).log2() + 1.0;
            // q_1 = a_1 q_0 makes the first increment only non-negative.
            let first = km.varphi(1).unwrap() - km.varphi(0).unwrap();
            assert!(first >= 0.0);
            for m in 1..alpha.depth() - 1 {
                let inc = km.varphi(m + 1).unwrap() - km.varphi(m).unwrap();
                assert!(inc > 0.0 && inc <= cap + 1e-12, "m={m} inc={inc}");
            }
            for m in 0..alpha.depth() - 3 {
                assert!(km.phi(m + 3).unwrap() > km.phi(m).unwrap());
            }
            // kappa-hat bracket and psi monotone
            let lo = *km.image().iter().next().unwrap();
            let hi = *km.image().iter().next_back().unwrap();
            let mut last = 0;
            for k in lo..=hi {
                let kc = km.kappa_check(k).unwrap();
                assert!(kc <= k && kc >= k - 2);
                let n = km.psi(k).unwrap();
                assert!(n >= last);
                last = n;
            }
        }
    }

    #[test]
    fn qn_norm_in_dyadic_band_of_kappa_check() {
        let g = golden();
        let km = KappaMachinery::new(&g);
        for k in 1..=15 {
            let w = km.windows(k).unwrap_or_else(|_| KappaWindows {
                kappa: k,
                kappa_check: km.kappa_check(k).unwrap(),
                n_kappa: km.psi(k).unwrap(),
                n_tilde: 0,
                n_bar: 0,
            });
            let nrm = g.qalpha_norm(w.n_kappa).unwrap();
            let kc = w.kappa_check;
            assert!(kc >= k - 2);
            assert!(nrm >= 2f64.powi(-(kc as i32) - 4) && nrm <= 2f64.powi(-(kc as i32)));
        }
    }

    #[test]
    fn arithmetic_growth() {
        let g = ConstantTypeIrrational::golden(40).unwrap();
        let delta = 0.1;
        assert!(g.check_arithmetic_growth(20, 30, delta).unwrap());
        assert!(g.check_arithmetic_growth(20, 20, delta).unwrap());
        for m in 20..=26 {
            for big_m in m..=40 {
                assert!(g.check_arithmetic_growth(m, big_m, delta).unwrap());
            }
        }
        assert!(g.check_arithmetic_growth(20, 30, 0.5).is_err());
        assert!(g.check_arithmetic_growth(10, 30, delta).is_err());
    }

    proptest! {
        #[test]
        fn circle_norm_shift_and_reflection(x in -1e3f64..1e3, k in -1000i32..1000) {
            let a = circle_norm(x);
            prop_assert!((0.0..=0.5).contains(&a));
            prop_assert!((circle_norm(x + k as f64) - a).abs() < 1e-9);
            prop_assert!((circle_norm(-x) - a).abs() < 1e-9);
        }

        #[test]
        fn norm_mul_matches_f64_route(d in -100_000i64..100_000) {
            let g = ConstantTypeIrrational::golden(24).unwrap();
            let direct = circle_norm(d as f64 * ((5f64.sqrt() - 1.0) / 2.0));
            prop_assert!((g.norm_mul(d) - direct).abs() < 1e-10);
            prop_assert_eq!(g.norm_mul(d), g.norm_mul(-d));
        }
    }
}
