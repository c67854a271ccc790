//! Chords between orbit points, their Type-I/II classification, pairs and
//! quadruples, and seeded enumeration of each family.
//!
//! A chord `v = (x_i, x_j)` is identified with the index pair `(i, j)` on a
//! minimizing configuration. Its arithmetic length `lambda = ||(j - i) alpha||`
//! uses the irrational, while the geometric length `Theta` comes from the
//! computed orbit. Steps are always oriented so that `frac((j - i) alpha)` lies
//! in `(0, 1/2)`, which makes `theta` of every iterate positive.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::number_theory::{ConstantTypeIrrational, KappaMachinery, KappaWindows};
use crate::variational::{Configuration, DEGENERACY_FLOOR};
use crate::{Error, Result};

/// Chords shorter than `SCALE_CUTOFF / q_M` are not resolved by the window.
pub const SCALE_CUTOFF: f64 = 8.0;
/// Default share of pairs whose two chords use different steps.
pub const MIXED_FRACTION: f64 = 0.25;

/// Admissible index range `[-2 q_M, 3 q_M)` for chord endpoints and iterates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexWindow {
    pub q_m: i64,
    pub lo: i64,
    pub hi: i64,
}

impl IndexWindow {
    pub fn new(q_m: u64) -> Self {
        let q = q_m as i64;
        Self { q_m: q, lo: -2 * q, hi: 3 * q }
    }

    #[inline]
    pub fn contains(&self, i: i64) -> bool {
        self.lo <= i && i < self.hi
    }

    /// Both endpoints of `(i + k, j + k)` stay inside.
    #[inline]
    pub fn contains_shift(&self, i: i64, j: i64, k: i64) -> bool {
        self.contains(i + k) && self.contains(j + k)
    }

    fn check(&self, i: i64) -> Result<()> {
        if self.contains(i) {
            Ok(())
        } else {
            Err(Error::Window { index: i, lo: self.lo, hi: self.hi })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chord {
    pub i: i64,
    pub j: i64,
    pub lambda: f64,
    /// Lifted `x_j - x_i`.
    pub theta: f64,
    /// `x_j - x_i` reduced to `(-1/2, 1/2]`.
    pub theta_hat: f64,
    pub big_theta: f64,
    /// `y_j - y_i`.
    pub r: f64,
    /// `r / theta_hat`.
    pub s: f64,
}

impl Chord {
    pub fn step(&self) -> i64 {
        self.j - self.i
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChordPair {
    pub kappa: i64,
    pub r: usize,
    pub v1: Chord,
    pub v2: Chord,
    /// `(||(i2 - i1) alpha|| + ||(j2 - j1) alpha||) / 2`.
    pub lambda: f64,
    /// `Theta(v1, v2) = ||x_{i2} - x_{i1}||`.
    pub big_theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChordQuadruple {
    pub s: usize,
    pub p12: ChordPair,
    pub p34: ChordPair,
    /// Mean of `lambda(v1, v3)` and `lambda(v2, v4)`.
    pub lambda: f64,
    pub big_theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rejection {
    Degenerate,
    Ordering,
    IndexBand,
    LambdaBand,
    /// The extra `2/q_r < lambda < 1/q_t` filter on pairs.
    BoundFilter,
    Window,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Membership<T> {
    Member(T),
    NotMember(Rejection),
}

impl<T> Membership<T> {
    pub fn member(self) -> Option<T> {
        match self {
            Membership::Member(t) => Some(t),
            Membership::NotMember(_) => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionCounts {
    pub degenerate: usize,
    pub ordering: usize,
    pub index_band: usize,
    pub lambda_band: usize,
    pub bound_filter: usize,
    pub window: usize,
}

impl RejectionCounts {
    fn add(&mut self, r: Rejection) {
        match r {
            Rejection::Degenerate => self.degenerate += 1,
            Rejection::Ordering => self.ordering += 1,
            Rejection::IndexBand => self.index_band += 1,
            Rejection::LambdaBand => self.lambda_band += 1,
            Rejection::BoundFilter => self.bound_filter += 1,
            Rejection::Window => self.window += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.degenerate + self.ordering + self.index_band + self.lambda_band + self.bound_filter + self.window
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairFamily {
    pub kappa: i64,
    pub r: usize,
    pub pairs: Vec<ChordPair>,
    pub rejected: RejectionCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadrupleFamily {
    pub kappa: i64,
    pub r: usize,
    pub s: usize,
    pub quadruples: Vec<ChordQuadruple>,
    pub rejected: RejectionCounts,
}

/// Outcome of the three-chord comparison behind the Type-I to Type-II reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NestedComparison {
    /// `lambda/Theta` of the shorter nested canonical chord, times `C`.
    pub upper: f64,
    /// `lambda/Theta` of the chord itself.
    pub ratio: f64,
    /// `lambda/Theta` of the longer nesting canonical chord, divided by `C`.
    pub lower: f64,
    pub constant: f64,
}

impl NestedComparison {
    pub fn holds(&self) -> bool {
        self.lower <= self.ratio && self.ratio <= self.upper
    }
}

/// `lambda` in the dyadic band `[2^{-kappa-4}, 2^{-kappa}]`.
pub fn in_type1_band(lambda: f64, kappa: i64) -> bool {
    let lo = (-(kappa as f64) - 4.0).exp2();
    let hi = (-(kappa as f64)).exp2();
    lo <= lambda && lambda <= hi
}

/// Van der Corput radical inverse in base 2.
fn van_der_corput(mut k: u64) -> f64 {
    let mut v = 0.0;
    let mut w = 0.5;
    while k > 0 {
        if k & 1 == 1 {
            v += w;
        }
        k >>= 1;
        w *= 0.5;
    }
    v
}

type PairKey = (i64, i64, i64, i64);

fn family_rng(seed: u64, tag: u64, a: i64, b: i64, c: i64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&tag.to_le_bytes());
    key[16..24].copy_from_slice(&(a as u64 ^ ((b as u64) << 32)).to_le_bytes());
    key[24..].copy_from_slice(&(c as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Chord machinery over one minimizing configuration.
pub struct ChordSpace<'a> {
    config: &'a Configuration,
    alpha: &'a ConstantTypeIrrational,
    km: KappaMachinery,
    window: IndexWindow,
    a_bound: f64,
}

impl<'a> ChordSpace<'a> {
    pub fn new(config: &'a Configuration) -> Self {
        let alpha = config.map().alpha();
        Self {
            config,
            alpha,
            km: KappaMachinery::new(alpha),
            window: IndexWindow::new(config.q()),
            a_bound: alpha.bound() as f64,
        }
    }

    pub fn config(&self) -> &Configuration {
        self.config
    }

    pub fn alpha(&self) -> &ConstantTypeIrrational {
        self.alpha
    }

    pub fn machinery(&self) -> &KappaMachinery {
        &self.km
    }

    pub fn window(&self) -> IndexWindow {
        self.window
    }

    /// Shortest `lambda` the window resolves.
    pub fn scale_cutoff(&self) -> f64 {
        SCALE_CUTOFF / self.window.q_m as f64
    }

    /// `(A + 1)^6`.
    fn index_factor(&self) -> f64 {
        (self.a_bound + 1.0).powi(6)
    }

    fn qnorm(&self, n: usize) -> Result<f64> {
        self.alpha.qalpha_norm(n)
    }

    fn qf(&self, n: usize) -> Result<f64> {
        Ok(self.alpha.q(n)? as f64)
    }

    pub fn windows(&self, kappa: i64) -> Result<KappaWindows> {
        self.km.windows(kappa)
    }

    /// Signed step with the orientation `frac(d alpha) < 1/2`.
    pub fn orient(&self, d: i64) -> i64 {
        if self.alpha.frac_mul(d) < 0.5 {
            d
        } else {
            -d
        }
    }

    pub fn make_chord(&self, i: i64, j: i64) -> Result<Chord> {
        self.window.check(i)?;
        self.window.check(j)?;
        let c = self.config;
        let big_theta = c.big_theta(i, j);
        if big_theta < DEGENERACY_FLOOR {
            return Err(Error::Degenerate(format!("chord ({i}, {j}) has Theta {big_theta:e}")));
        }
        let theta_hat = c.theta_centered(i, j);
        let r = c.r(i, j);
        Ok(Chord {
            i,
            j,
            lambda: self.alpha.norm_mul(j - i),
            theta: c.theta(i, j),
            theta_hat,
            big_theta,
            r,
            s: r / theta_hat,
        })
    }

    /// `F^k v`, an index shift along the orbit.
    pub fn iterate_chord(&self, v: &Chord, k: i64) -> Result<Chord> {
        self.make_chord(v.i + k, v.j + k)
    }

    /// `Theta(F^k v)` without building the chord; `None` outside the window.
    #[inline]
    pub fn big_theta_at(&self, i: i64, j: i64, k: i64) -> Option<f64> {
        if self.window.contains_shift(i, j, k) {
            Some(self.config.big_theta(i + k, j + k))
        } else {
            None
        }
    }

    pub fn is_type1(&self, v: &Chord, kappa: i64) -> bool {
        in_type1_band(v.lambda, kappa)
    }

    /// Type-II membership. A member with `lambda` outside `(2/q_N-, 2/q_N~)`
    /// contradicts the band arithmetic and is reported as an invariant error.
    pub fn is_type2(&self, v: &Chord, kappa: i64) -> Result<bool> {
        let w = self.windows(kappa)?;
        let member = self.type2_band(v.step(), v.lambda, &w)?;
        if member {
            let lo = 2.0 / self.qf(w.n_bar)?;
            let hi = 2.0 / self.qf(w.n_tilde)?;
            if !(lo < v.lambda && v.lambda < hi) {
                return Err(Error::Invariant(format!(
                    "Type-II chord with lambda {} outside ({lo}, {hi}) at kappa {kappa}",
                    v.lambda
                )));
            }
        }
        Ok(member)
    }

    fn type2_band(&self, d: i64, lambda: f64, w: &KappaWindows) -> Result<bool> {
        let qn = self.qf(w.n_kappa)?;
        let f = self.index_factor();
        let ad = d.unsigned_abs() as f64;
        let base = self.qnorm(w.n_kappa)?;
        Ok(in_type1_band(lambda, w.kappa) && qn / f <= ad && ad <= f * qn && base <= lambda && lambda <= 16.0 * base)
    }

    /// Oriented Type-I steps with `|d| <= q_M / 2` resolved by the window.
    pub fn type1_steps(&self, kappa: i64) -> Vec<i64> {
        let cut = self.scale_cutoff();
        (1..=self.window.q_m / 2)
            .filter(|&d| {
                let l = self.alpha.norm_mul(d);
                l >= cut && in_type1_band(l, kappa)
            })
            .map(|d| self.orient(d))
            .collect()
    }

    /// Oriented Type-II steps, the canonical `q_{n_kappa}` first.
    pub fn type2_steps(&self, kappa: i64) -> Result<Vec<i64>> {
        let w = self.windows(kappa)?;
        let qn = self.alpha.q(w.n_kappa)? as i64;
        if 2 * qn > self.window.q_m {
            return Err(Error::Infeasible(format!("canonical step {qn} exceeds half the window {}", self.window.q_m)));
        }
        let f = self.index_factor();
        let lo = ((qn as f64 / f).ceil() as i64).max(1);
        let hi = ((f * qn as f64).floor() as i64).min(self.window.q_m / 2);
        let cut = self.scale_cutoff();
        let mut steps = vec![self.orient(qn)];
        for d in lo..=hi {
            if d == qn {
                continue;
            }
            let l = self.alpha.norm_mul(d);
            if l >= cut && self.type2_band(d, l, &w)? {
                steps.push(self.orient(d));
            }
        }
        Ok(steps)
    }

    /// Oriented pair shifts `e` with `|e|` in the index band around `q_t` and
    /// `||e alpha||` in `[||q_t alpha||, 16 ||q_t alpha||]` below `1/q_t`.
    pub fn shift_steps(&self, t: usize) -> Result<Vec<i64>> {
        let qt = self.qf(t)?;
        let f = self.index_factor();
        let base = self.qnorm(t)?;
        let lo = ((qt / f).ceil() as i64).max(1);
        let hi = ((f * qt).floor() as i64).min(self.window.q_m / 2);
        let mut out = Vec::new();
        for e in lo..=hi {
            let l = self.alpha.norm_mul(e);
            if base <= l && l <= 16.0 * base && l < 1.0 / qt {
                out.push(self.orient(e));
            }
        }
        Ok(out)
    }

    fn sample_chords(
        &self,
        steps: &[i64],
        budget: usize,
        seed: u64,
        tag: u64,
        kappa: i64,
        canonical_share: bool,
    ) -> Vec<Chord> {
        let mut rng = family_rng(seed, tag, kappa, 0, 0);
        let offset: f64 = rng.gen();
        let qm = self.window.q_m;
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(budget);
        let mut k = 0u64;
        while out.len() < budget && k < 4 * budget as u64 + 16 {
            let u = (offset + van_der_corput(k + 1)).fract();
            let i = ((u * qm as f64) as i64).min(qm - 1);
            let pick = rng.gen_range(0..steps.len());
            let d = if canonical_share && k.is_multiple_of(2) { steps[0] } else { steps[pick] };
            k += 1;
            if !seen.insert((i, d)) {
                continue;
            }
            if let Ok(v) = self.make_chord(i, i + d) {
                out.push(v);
            }
        }
        out.sort_by_key(|v| (v.step(), v.i));
        out
    }

    /// Seeded sample of Type-II chords with bases in `[0, q_M)`. Every other
    /// draw uses the canonical step. Samples for a budget are a subset of the
    /// samples for any larger budget.
    pub fn enumerate_type2(&self, kappa: i64, budget: usize, seed: u64) -> Result<Vec<Chord>> {
        let steps = self.type2_steps(kappa)?;
        let out = self.sample_chords(&steps, budget, seed, 2, kappa, true);
        for v in &out {
            self.is_type2(v, kappa)?;
        }
        if out.is_empty() {
            return Err(Error::EmptyFamily(format!("Type-II chords at kappa {kappa}")));
        }
        Ok(out)
    }

    /// Seeded sample of window-resolvable Type-I chords.
    pub fn enumerate_type1(&self, kappa: i64, budget: usize, seed: u64) -> Result<Vec<Chord>> {
        let steps = self.type1_steps(kappa);
        if steps.is_empty() {
            return Err(Error::EmptyFamily(format!("no Type-I steps at kappa {kappa}")));
        }
        let out = self.sample_chords(&steps, budget, seed, 1, kappa, false);
        if out.is_empty() {
            return Err(Error::EmptyFamily(format!("Type-I chords at kappa {kappa}")));
        }
        Ok(out)
    }

    /// Checks `(v1, v2)` against the `(kappa, r)` pair conditions.
    pub fn make_pair(&self, v1: &Chord, v2: &Chord, kappa: i64, r: usize) -> Result<Membership<ChordPair>> {
        let w = self.windows(kappa)?;
        let g2 = 2 * self.km.gamma0();
        if r < g2 {
            return Err(Error::InvalidInput(format!("pair index r = {r} below 2 gamma_0 = {g2}")));
        }
        let t = r - g2;
        let qt = self.qf(t)?;
        let qr = self.qf(r)?;
        if !(self.type2_band(v1.step(), v1.lambda, &w)? && self.type2_band(v2.step(), v2.lambda, &w)?) {
            return Ok(Membership::NotMember(Rejection::LambdaBand));
        }
        let e = v2.i - v1.i;
        let f = self.index_factor();
        let ae = e.unsigned_abs() as f64;
        if !(qt / f <= ae && ae <= f * qt) {
            return Ok(Membership::NotMember(Rejection::IndexBand));
        }
        let lambda = 0.5 * (self.alpha.norm_mul(e) + self.alpha.norm_mul(v2.j - v1.j));
        let base = self.qnorm(t)?;
        if !(base <= lambda && lambda <= 16.0 * base) {
            return Ok(Membership::NotMember(Rejection::LambdaBand));
        }
        if !(2.0 / qr < lambda && lambda < 1.0 / qt) {
            return Ok(Membership::NotMember(Rejection::BoundFilter));
        }
        // endpoints in the order x_{i1} < x_{j1} <= x_{i2} < x_{j2} within half a turn
        let c = self.config;
        let o = |k: i64| c.offset(v1.i, k);
        let (oj1, oi2, oj2) = (o(v1.j), o(v2.i), o(v2.j));
        if !(0.0 < oj1 && oj1 <= oi2 && oi2 < oj2 && oj2 <= 0.5) {
            return Ok(Membership::NotMember(Rejection::Ordering));
        }
        let big_theta = c.big_theta(v1.i, v2.i);
        if big_theta < DEGENERACY_FLOOR {
            return Ok(Membership::NotMember(Rejection::Degenerate));
        }
        Ok(Membership::Member(ChordPair { kappa, r, v1: *v1, v2: *v2, lambda, big_theta }))
    }

    /// Checks two `(kappa, r)` pairs against the `(kappa, r, s)` quadruple conditions.
    pub fn make_quadruple(&self, p12: &ChordPair, p34: &ChordPair, s: usize) -> Result<Membership<ChordQuadruple>> {
        if p12.kappa != p34.kappa || p12.r != p34.r {
            return Err(Error::InvalidInput("pairs from different (kappa, r) families".into()));
        }
        let r = p12.r;
        let g2 = 2 * self.km.gamma0();
        if s > r || s < g2 {
            return Err(Error::InvalidInput(format!("quadruple index s = {s} outside [{g2}, {r}]")));
        }
        let u = s - g2;
        let qu = self.qf(u)?;
        let f = self.index_factor();
        let (v1, v2, v3, v4) = (&p12.v1, &p12.v2, &p34.v1, &p34.v2);
        let e = v3.i - v1.i;
        let ae = e.unsigned_abs() as f64;
        if !(qu / f <= ae && ae <= f * qu) {
            return Ok(Membership::NotMember(Rejection::IndexBand));
        }
        let a = &self.alpha;
        let l13 = 0.5 * (a.norm_mul(v3.i - v1.i) + a.norm_mul(v3.j - v1.j));
        let l24 = 0.5 * (a.norm_mul(v4.i - v2.i) + a.norm_mul(v4.j - v2.j));
        let lambda = 0.5 * (l13 + l24);
        let base = self.qnorm(u)?;
        if !(base <= lambda && lambda < 16.0 * base) {
            return Ok(Membership::NotMember(Rejection::LambdaBand));
        }
        let c = self.config;
        let o = |k: i64| c.offset(v1.i, k);
        let chain = [o(v1.j), o(v2.i), o(v2.j), o(v3.i), o(v3.j), o(v4.i), o(v4.j)];
        let ordered = 0.0 < chain[0]
            && chain[0] <= chain[1]
            && chain[1] < chain[2]
            && chain[2] <= chain[3]
            && chain[3] < chain[4]
            && chain[4] <= chain[5]
            && chain[5] < chain[6]
            && chain[6] <= 0.5;
        if !ordered {
            return Ok(Membership::NotMember(Rejection::Ordering));
        }
        // all offsets share the lift anchored at x_{i1}
        let theta = (chain[6] + chain[5] + chain[4] + chain[3] - chain[2] - chain[1] - chain[0]) / 4.0;
        let big_theta = crate::number_theory::circle_norm(theta);
        if big_theta < DEGENERACY_FLOOR {
            return Ok(Membership::NotMember(Rejection::Degenerate));
        }
        Ok(Membership::Member(ChordQuadruple { s, p12: *p12, p34: *p34, lambda, big_theta }))
    }

    /// Draws one candidate pair from a fixed pattern of random numbers, so
    /// the `k`-th draw does not depend on the budget.
    #[allow(clippy::too_many_arguments)]
    fn draw_pair(
        &self,
        rng: &mut ChaCha8Rng,
        offset: f64,
        k: u64,
        steps: &[i64],
        shifts: &[i64],
        mixed: f64,
        kappa: i64,
        r: usize,
    ) -> Result<(PairKey, std::result::Result<ChordPair, Rejection>)> {
        let qm = self.window.q_m;
        let u = (offset + van_der_corput(k + 1)).fract();
        let i1 = ((u * qm as f64) as i64).min(qm - 1);
        let pick1 = rng.gen_range(0..steps.len());
        let e = shifts[rng.gen_range(0..shifts.len())];
        let mix = rng.gen::<f64>() < mixed;
        let pick2 = rng.gen_range(0..steps.len());
        let d1 = if k.is_multiple_of(2) { steps[0] } else { steps[pick1] };
        let d2 = if mix { steps[pick2] } else { d1 };
        let key = (i1, d1, e, d2);
        let i2 = i1 + e;
        let chords = self.make_chord(i1, i1 + d1).and_then(|v1| Ok((v1, self.make_chord(i2, i2 + d2)?)));
        let (v1, v2) = match chords {
            Ok(vs) => vs,
            Err(Error::Window { .. }) => return Ok((key, Err(Rejection::Window))),
            Err(Error::Degenerate(_)) => return Ok((key, Err(Rejection::Degenerate))),
            Err(e) => return Err(e),
        };
        Ok(match self.make_pair(&v1, &v2, kappa, r)? {
            Membership::Member(p) => (key, Ok(p)),
            Membership::NotMember(why) => (key, Err(why)),
        })
    }

    fn pair_ingredients(&self, kappa: i64, r: usize) -> Result<(Vec<i64>, Vec<i64>)> {
        let g2 = 2 * self.km.gamma0();
        if r < g2 {
            return Err(Error::InvalidInput(format!("pair index r = {r} below 2 gamma_0 = {g2}")));
        }
        let shifts = self.shift_steps(r - g2)?;
        if shifts.is_empty() {
            return Err(Error::EmptyFamily(format!("no admissible shifts at r = {r}")));
        }
        Ok((self.type2_steps(kappa)?, shifts))
    }

    /// Seeded `(kappa, r)` pairs. `v1` is a Type-II draw (canonical step on
    /// every other draw), `v2` shifts its base by an admissible `e`, and a
    /// `mixed` share of pairs also changes the step.
    pub fn enumerate_pairs(&self, kappa: i64, r: usize, budget: usize, seed: u64, mixed: f64) -> Result<PairFamily> {
        let (steps, shifts) = self.pair_ingredients(kappa, r)?;
        let mut rng = family_rng(seed, 3, kappa, r as i64, 0);
        let offset: f64 = rng.gen();
        let mut rejected = RejectionCounts::default();
        let mut pairs = Vec::with_capacity(budget);
        let mut seen = HashSet::new();
        let mut k = 0;
        while pairs.len() < budget && k < 16 * budget as u64 + 16 {
            let (key, drawn) = self.draw_pair(&mut rng, offset, k, &steps, &shifts, mixed, kappa, r)?;
            k += 1;
            if !seen.insert(key) {
                continue;
            }
            match drawn {
                Ok(p) => pairs.push(p),
                Err(why) => rejected.add(why),
            }
        }
        if pairs.is_empty() {
            return Err(Error::EmptyFamily(format!("pairs at kappa {kappa}, r = {r}")));
        }
        Ok(PairFamily { kappa, r, pairs, rejected })
    }

    /// Seeded nested `(kappa, r, s)` quadruples: `(v3, v4)` is a drawn pair
    /// `(v1, v2)` with both bases shifted by one admissible `f`.
    #[allow(clippy::too_many_arguments)]
    pub fn enumerate_quadruples(
        &self,
        kappa: i64,
        r: usize,
        s: usize,
        budget: usize,
        seed: u64,
        mixed: f64,
    ) -> Result<QuadrupleFamily> {
        let g2 = 2 * self.km.gamma0();
        if s < g2 || s > r {
            return Err(Error::InvalidInput(format!("quadruple index s = {s} outside [{g2}, {r}]")));
        }
        let (steps, shifts) = self.pair_ingredients(kappa, r)?;
        let outer = self.shift_steps(s - g2)?;
        if outer.is_empty() {
            return Err(Error::EmptyFamily(format!("no admissible shifts at s = {s}")));
        }
        let mut rng = family_rng(seed, 4, kappa, r as i64, s as i64);
        let offset: f64 = rng.gen();
        let mut rejected = RejectionCounts::default();
        let mut quads = Vec::with_capacity(budget);
        let mut seen = HashSet::new();
        let mut k = 0;
        while quads.len() < budget && k < 16 * budget as u64 + 16 {
            let (key, drawn) = self.draw_pair(&mut rng, offset, k, &steps, &shifts, mixed, kappa, r)?;
            let f = outer[rng.gen_range(0..outer.len())];
            k += 1;
            if !seen.insert((key, f)) {
                continue;
            }
            let p12 = match drawn {
                Ok(p) => p,
                Err(why) => {
                    rejected.add(why);
                    continue;
                }
            };
            let shifted = |v: &Chord| self.make_chord(v.i + f, v.j + f);
            let p34 = match shifted(&p12.v1).and_then(|v3| Ok((v3, shifted(&p12.v2)?))) {
                Ok((v3, v4)) => self.make_pair(&v3, &v4, kappa, r)?,
                Err(Error::Window { .. }) => Membership::NotMember(Rejection::Window),
                Err(Error::Degenerate(_)) => Membership::NotMember(Rejection::Degenerate),
                Err(e) => return Err(e),
            };
            let p34 = match p34 {
                Membership::Member(p) => p,
                Membership::NotMember(why) => {
                    rejected.add(why);
                    continue;
                }
            };
            match self.make_quadruple(&p12, &p34, s)? {
                Membership::Member(q) => quads.push(q),
                Membership::NotMember(why) => rejected.add(why),
            }
        }
        if quads.is_empty() {
            return Err(Error::EmptyFamily(format!("quadruples at kappa {kappa}, r = {r}, s = {s}")));
        }
        Ok(QuadrupleFamily { kappa, r, s, quadruples: quads, rejected })
    }

    fn canonical(&self, n: usize) -> bool {
        self.km.phi(n).ok().and_then(|k| self.km.psi(k).ok()) == Some(n)
    }

    /// Compares `lambda/Theta` of a Type-I chord with the canonical chords
    /// from the same base nested inside and around it, using the constant
    /// `C = 16 (A + 1)^8`. The nearest canonical indices on each side stand in
    /// for the fixed offsets of the worst-case argument. Returns `None` when
    /// no canonical chord on one side fits the window.
    pub fn nested_comparison(&self, v: &Chord) -> Result<Option<NestedComparison>> {
        let constant = 16.0 * (self.a_bound + 1.0).powi(8);
        let lim = self.window.q_m / 2;
        let depth = self.alpha.depth();
        let mut inner = None;
        let mut outer = None;
        for n in 0..depth.saturating_sub(1) {
            if !self.canonical(n) {
                continue;
            }
            let qn = self.alpha.q(n)? as i64;
            if qn > lim {
                break;
            }
            let l = self.qnorm(n)?;
            if l < v.lambda && inner.is_none() {
                inner = Some(qn);
            }
            if l > v.lambda {
                outer = Some(qn);
            }
        }
        let (Some(qi), Some(qo)) = (inner, outer) else {
            return Ok(None);
        };
        let ratio_of = |d: i64| -> Result<f64> {
            let c = self.make_chord(v.i, v.i + self.orient(d))?;
            Ok(c.lambda / c.big_theta)
        };
        Ok(Some(NestedComparison {
            upper: constant * ratio_of(qi)?,
            ratio: v.lambda / v.big_theta,
            lower: ratio_of(qo)? / constant,
            constant,
        }))
    }
}
