//! The distortion hierarchy, difference quotients and sup statistics over
//! seeded chord families, tabulated per `kappa`.
//!
//! Every sup is a sample maximum: a lower bound of the true sup, recorded
//! with its seed and sample count.

pub mod criteria;
pub mod pointwise;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chords::{Chord, ChordSpace, RejectionCounts, MIXED_FRACTION};
use crate::number_theory::KappaWindows;
use crate::variational::Configuration;
use crate::{Error, Result};

pub use criteria::{evaluate_conditions, seed_consensus, ConditionCheck, CriterionReport, SeedConsensus, Verdict};
use pointwise::*;

/// Rows with a larger share of dropped iterates are unreliable.
pub const DROP_LIMIT: f64 = 0.1;
/// Random `(j, k)` identity probes per sampled chord.
const IDENTITY_PROBES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budgets {
    pub chords: usize,
    pub pairs: usize,
    pub quadruples: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Self { chords: 256, pairs: 128, quadruples: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionParams {
    pub budgets: Budgets,
    pub seed: u64,
    pub mixed_fraction: f64,
}

impl Default for DistortionParams {
    fn default() -> Self {
        Self { budgets: Budgets::default(), seed: 0, mixed_fraction: MIXED_FRACTION }
    }
}

/// Requested and dropped iterates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropCounter {
    pub requested: u64,
    pub dropped: u64,
}

impl DropCounter {
    pub fn fraction(&self) -> f64 {
        if self.requested == 0 {
            0.0
        } else {
            self.dropped as f64 / self.requested as f64
        }
    }
}

/// Largest defects of the exact identities on sampled data.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityDefects {
    pub cocycle: f64,
    pub antisymmetry: f64,
    pub rearranged_k2: f64,
    pub e1_vs_grad1: f64,
    pub probes: usize,
    pub e1_pairs: usize,
}

impl IdentityDefects {
    pub fn max(&self) -> f64 {
        self.cocycle.max(self.antisymmetry).max(self.rearranged_k2).max(self.e1_vs_grad1)
    }
}

/// Mean of `Theta` over `q_N` iterates against `lambda`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AveragingSummary {
    pub n: usize,
    pub bound: f64,
    pub checked: usize,
    pub skipped: usize,
    pub max_gap: f64,
    pub violations: usize,
}

/// One-step ratios `Theta(F v)/Theta(v)` along every sampled trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneStepSummary {
    pub checked: u64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub violations: u64,
}

impl Default for OneStepSummary {
    fn default() -> Self {
        Self { checked: 0, min_ratio: 1.0, max_ratio: 1.0, violations: 0 }
    }
}

/// `K0_N(kappa) <= 2 K~1_N(kappa, N)` at one `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenjoyCheck {
    pub n: usize,
    pub k0: f64,
    pub k1_tilde: f64,
    pub holds: bool,
}

/// `Lambda_II <= e^C max(1 + 1/(q_N- lambda_min), 1/(1 - 1/(q_N- lambda_min)))`
/// with `C = K~0_{N-}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichCheck {
    pub c: f64,
    pub lambda_min: f64,
    pub bound: f64,
    pub lambda_ii: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NestedSummary {
    pub checked: usize,
    pub skipped: usize,
    pub violations: usize,
    /// Largest `ratio/upper` or `lower/ratio`; at most 1 when all hold.
    pub worst: f64,
}

/// Sups over the `(kappa, r)` pair family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCell {
    pub r: usize,
    pub samples: usize,
    pub rejected: RejectionCounts,
    /// `K~1_r(kappa, r)`: `|K1(j|.)|` over `|j| <= q_r`.
    pub k1_tilde: f64,
    /// `grad1(kappa, r)`.
    pub grad1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexedValue {
    pub index: usize,
    pub value: f64,
}

/// All sup statistics for one `kappa`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaRow {
    pub kappa: i64,
    pub windows: KappaWindows,
    pub type1_samples: usize,
    pub type2_samples: usize,
    pub lambda_i: f64,
    pub lambda_ii: f64,
    /// `K~0_{N-(kappa)}(kappa)`.
    pub k0_tilde: f64,
    /// `K0_N(kappa)` for `N` in `[2 gamma_0, n_kappa]`.
    pub k0_by_n: Vec<IndexedValue>,
    /// `K~0_N(kappa)` on the same `N`.
    pub k0_tilde_by_n: Vec<IndexedValue>,
    pub pair_cells: Vec<PairCell>,
    /// `grad1(kappa, N~)`.
    pub grad1: f64,
    /// `grad2(kappa, N~, N~)`.
    pub grad2: f64,
    pub quadruple_samples: usize,
    pub quadruple_rejected: RejectionCounts,
    /// `kappa1(r; N~, kappa)` for `r` in `[0, N~]`.
    pub kappa1: Vec<IndexedValue>,
    /// Least-squares slope of `ln kappa1` against `r`.
    pub kappa1_slope: Option<f64>,
    /// `sup |G(v2) - G(v1)|` over the `(kappa, N~)` pairs.
    pub g_modulus: f64,
    /// Largest `|K2(v1..v4)| / (|grad2| + Theta(v1..v4))`.
    pub k2_ratio: f64,
    pub averaging: AveragingSummary,
    pub one_step: OneStepSummary,
    pub denjoy: Vec<DenjoyCheck>,
    pub sandwich: SandwichCheck,
    pub nested: NestedSummary,
    pub identities: IdentityDefects,
    /// Largest `|d| |alpha - p/q| / lambda` over the Type-I and Type-II
    /// samples and the pair chords behind `g_modulus`.
    pub rational_gap: f64,
    pub drops: DropCounter,
}

impl KappaRow {
    pub fn reliable(&self) -> bool {
        self.drops.fraction() <= DROP_LIMIT
    }

    pub fn pair_cell(&self, r: usize) -> Option<&PairCell> {
        self.pair_cells.iter().find(|c| c.r == r)
    }
}

/// A `kappa` that could not be tabulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hole {
    pub kappa: i64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionTable {
    pub params: DistortionParams,
    pub eps: f64,
    pub a_alpha: u64,
    pub gamma0: usize,
    pub q_m: u64,
    /// `q_0, q_1, ...` of the rotation number.
    pub denominators: Vec<u64>,
    pub kappa_range: (i64, i64),
    pub rows: Vec<KappaRow>,
    pub holes: Vec<Hole>,
    /// `(kappa, r)` cells where `grad1(kappa, r) > grad1(kappa + 1, r)`; a diagnostic.
    pub grad1_monotonicity_breaks: Vec<(i64, usize)>,
}

impl DistortionTable {
    pub fn row(&self, kappa: i64) -> Option<&KappaRow> {
        self.rows.iter().find(|r| r.kappa == kappa)
    }

    /// Running max of `Lambda_I` over increasing `kappa`.
    pub fn lambda_i_envelope(&self) -> Vec<(i64, f64)> {
        let mut m = 1.0f64;
        self.rows
            .iter()
            .map(|r| {
                m = m.max(r.lambda_i);
                (r.kappa, m)
            })
            .collect()
    }
}

pub(crate) fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `Theta(F^j v)` for `j` in `[-span, span]`; `None` marks dropped iterates.
fn trajectory(cs: &ChordSpace, v: &Chord, span: i64, drops: &mut DropCounter) -> Vec<Option<f64>> {
    let out: Vec<Option<f64>> = (-span..=span).map(|j| cs.big_theta_at(v.i, v.j, j)).collect();
    drops.requested += out.len() as u64;
    drops.dropped += out.iter().filter(|t| t.is_none()).count() as u64;
    out
}

struct ChordStats {
    lambda_ii: f64,
    lambda_min: f64,
    k0_tilde: f64,
    k0_by_n: Vec<f64>,
    k0_tilde_by_n: Vec<f64>,
    averaging: AveragingSummary,
    one_step: OneStepSummary,
    cocycle: f64,
    antisymmetry: f64,
    probes: usize,
    rational_gap: f64,
    drops: DropCounter,
}

fn chord_stats(cs: &ChordSpace, w: &KappaWindows, chords: &[Chord], ns: &[usize], seed: u64) -> Result<ChordStats> {
    let alpha = cs.alpha();
    let q_bar = alpha.q(w.n_bar)? as i64;
    let q_ns: Vec<i64> = ns.iter().map(|&n| alpha.q(n).map(|q| q as i64)).collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (w.kappa as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut st = ChordStats {
        lambda_ii: 1.0,
        lambda_min: f64::INFINITY,
        k0_tilde: 0.0,
        k0_by_n: vec![0.0; ns.len()],
        k0_tilde_by_n: vec![0.0; ns.len()],
        averaging: AveragingSummary { n: w.n_bar, bound: 1.0 / q_bar as f64, ..Default::default() },
        one_step: OneStepSummary::default(),
        cocycle: 0.0,
        antisymmetry: 0.0,
        probes: 0,
        rational_gap: 0.0,
        drops: DropCounter::default(),
    };
    for v in chords {
        st.lambda_ii = st.lambda_ii.max(lambda_ratio(v));
        st.lambda_min = st.lambda_min.min(v.lambda);
        st.rational_gap = st.rational_gap.max(cs.config().rational_gap(v.step()) / v.lambda);
        let traj = trajectory(cs, v, q_bar, &mut st.drops);
        let at = |j: i64| traj[(j + q_bar) as usize];
        let k0_at = |j: i64| at(j).map(|t| (t / v.big_theta).ln());

        for j in -q_bar..=q_bar {
            if let Some(k) = k0_at(j) {
                let a = k.abs();
                st.k0_tilde = st.k0_tilde.max(a);
                for (slot, &qn) in q_ns.iter().enumerate() {
                    if j.abs() <= qn {
                        st.k0_tilde_by_n[slot] = st.k0_tilde_by_n[slot].max(a);
                    }
                }
            }
            // one-step ratio; the centred theta keeps all three smallness conditions true
            if let (Some(a), Some(b)) = (at(j), (j < q_bar).then(|| at(j + 1)).flatten()) {
                let ratio = b / a;
                let os = &mut st.one_step;
                os.checked += 1;
                os.min_ratio = os.min_ratio.min(ratio);
                os.max_ratio = os.max_ratio.max(ratio);
                if !(1.0 / 3.0..=3.0).contains(&ratio) {
                    os.violations += 1;
                }
            }
        }
        for (slot, &qn) in q_ns.iter().enumerate() {
            if let Some(k) = k0_at(qn) {
                st.k0_by_n[slot] = st.k0_by_n[slot].max(k.abs());
            }
        }

        if v.lambda >= 2.0 / q_bar as f64 {
            let vals: Option<Vec<f64>> = (0..q_bar).map(at).collect();
            match vals {
                Some(vals) => {
                    let gap = (vals.iter().sum::<f64>() / q_bar as f64 - v.lambda).abs();
                    let avg = &mut st.averaging;
                    avg.checked += 1;
                    avg.max_gap = avg.max_gap.max(gap);
                    if gap > avg.bound {
                        avg.violations += 1;
                    }
                }
                None => st.averaging.skipped += 1,
            }
        } else {
            st.averaging.skipped += 1;
        }

        // identities, each side evaluated through a freshly built chord
        for _ in 0..IDENTITY_PROBES {
            let j = rng.gen_range(-q_bar / 2..=q_bar / 2);
            let k = rng.gen_range(-q_bar / 2..=q_bar / 2);
            if let (Some(lhs), Some(kj), Ok(fj)) = (k0_at(j + k), k0_at(j), cs.iterate_chord(v, j)) {
                if let Some(kk) = k0(cs, &fj, k) {
                    st.cocycle = st.cocycle.max((lhs - (kk + kj)).abs());
                }
            }
            if let (Some(lhs), Ok(back)) = (k0_at(-j), cs.iterate_chord(v, -j)) {
                if let Some(fwd) = k0(cs, &back, j) {
                    st.antisymmetry = st.antisymmetry.max((lhs + fwd).abs());
                }
            }
            st.probes += 1;
        }
    }
    Ok(st)
}

/// Computes every statistic for one `kappa` on a solved configuration.
pub fn compute_row(cs: &ChordSpace, kappa: i64, params: &DistortionParams) -> Result<KappaRow> {
    let w = cs.windows(kappa)?;
    let km = cs.machinery();
    let alpha = cs.alpha();
    let g2 = 2 * km.gamma0();
    let b = params.budgets;
    let seed = params.seed;

    let type2 = cs.enumerate_type2(kappa, b.chords, seed)?;
    let type1 = cs.enumerate_type1(kappa, b.chords, seed)?;
    let ns: Vec<usize> = (g2..=w.n_kappa).collect();
    let st = chord_stats(cs, &w, &type2, &ns, seed)?;
    let mut drops = st.drops;

    let lambda_i = type1.iter().chain(&type2).map(lambda_ratio).fold(1.0, f64::max);

    let mut nested = NestedSummary::default();
    for v in &type1 {
        match cs.nested_comparison(v)? {
            Some(c) => {
                nested.checked += 1;
                nested.worst = nested.worst.max(c.ratio / c.upper).max(c.lower / c.ratio);
                if !c.holds() {
                    nested.violations += 1;
                }
            }
            None => nested.skipped += 1,
        }
    }

    let mut identities =
        IdentityDefects { cocycle: st.cocycle, antisymmetry: st.antisymmetry, probes: st.probes, ..Default::default() };

    let mut pair_cells = Vec::new();
    let mut denjoy = Vec::new();
    let mut kappa1 = Vec::new();
    let mut g_modulus = 0.0f64;
    let gap_of = |v: &Chord| cs.config().rational_gap(v.step()) / v.lambda;
    let mut rational_gap = type1.iter().map(gap_of).fold(st.rational_gap, f64::max);
    for (slot, &r) in ns.iter().enumerate() {
        let fam = cs.enumerate_pairs(kappa, r, b.pairs, seed, params.mixed_fraction)?;
        let q_r = alpha.q(r)? as i64;
        let mut k1_tilde = 0.0f64;
        let mut g1 = 0.0f64;
        for p in &fam.pairs {
            for j in -q_r..=q_r {
                drops.requested += 1;
                match k1(cs, p, j) {
                    Some(x) => k1_tilde = k1_tilde.max(x.abs()),
                    None => drops.dropped += 1,
                }
            }
            let gr = grad1(p);
            g1 = g1.max(gr.abs());
            if let Some(e) = e1(cs, p, 1) {
                identities.e1_vs_grad1 = identities.e1_vs_grad1.max((e - gr).abs());
                identities.e1_pairs += 1;
            }
        }
        denjoy.push(DenjoyCheck { n: r, k0: st.k0_by_n[slot], k1_tilde, holds: st.k0_by_n[slot] <= 2.0 * k1_tilde });
        if r == w.n_tilde {
            for p in &fam.pairs {
                g_modulus = g_modulus.max((g(&p.v2) - g(&p.v1)).abs());
                rational_gap = rational_gap.max(gap_of(&p.v1)).max(gap_of(&p.v2));
            }
            for rr in 0..=w.n_tilde {
                let q = alpha.q(rr)? as i64;
                let mut sup = 0.0f64;
                for p in &fam.pairs {
                    drops.requested += 1;
                    match kappa1_ratio(cs, p, q) {
                        Some(x) => sup = sup.max(x),
                        None => drops.dropped += 1,
                    }
                }
                kappa1.push(IndexedValue { index: rr, value: sup });
            }
        }
        pair_cells.push(PairCell { r, samples: fam.pairs.len(), rejected: fam.rejected, k1_tilde, grad1: g1 });
    }
    // pair cells above N~ serve the Denjoy check only
    let grad1_tilde = pair_cells.iter().find(|c| c.r == w.n_tilde).map_or(0.0, |c| c.grad1);
    let kappa1_points: Vec<(f64, f64)> =
        kappa1.iter().filter(|p| p.value > 0.0).map(|p| (p.index as f64, p.value.ln())).collect();

    let quads = cs.enumerate_quadruples(kappa, w.n_tilde, w.n_tilde, b.quadruples, seed, params.mixed_fraction)?;
    let q_tilde = alpha.q(w.n_tilde)? as i64;
    let mut grad2_sup = 0.0f64;
    let mut k2_ratio = 0.0f64;
    for q in &quads.quadruples {
        let g2v = grad2(q);
        grad2_sup = grad2_sup.max(g2v.abs());
        if let Some(k) = k2(cs, q, 1) {
            k2_ratio = k2_ratio.max(k.abs() / (g2v.abs() + q.big_theta));
        }
        for j in [-q_tilde, -1, 1, q_tilde / 2, q_tilde] {
            if let (Some(a), Some(b)) = (k2(cs, q, j), k2_scaled(cs, q, j)) {
                let d = (q.p34.big_theta * a - b).abs();
                identities.rearranged_k2 = identities.rearranged_k2.max(d);
                identities.probes += 1;
            }
        }
    }

    let q_bar = alpha.q(w.n_bar)? as f64;
    let x = 1.0 / (q_bar * st.lambda_min);
    let sandwich_bound = st.k0_tilde.exp() * (1.0 + x).max(1.0 / (1.0 - x));
    let sandwich = SandwichCheck {
        c: st.k0_tilde,
        lambda_min: st.lambda_min,
        bound: sandwich_bound,
        lambda_ii: st.lambda_ii,
        holds: st.lambda_ii <= sandwich_bound,
    };

    Ok(KappaRow {
        kappa,
        windows: w,
        type1_samples: type1.len(),
        type2_samples: type2.len(),
        lambda_i,
        lambda_ii: st.lambda_ii,
        k0_tilde: st.k0_tilde,
        k0_by_n: ns.iter().zip(&st.k0_by_n).map(|(&n, &v)| IndexedValue { index: n, value: v }).collect(),
        k0_tilde_by_n: ns.iter().zip(&st.k0_tilde_by_n).map(|(&n, &v)| IndexedValue { index: n, value: v }).collect(),
        pair_cells,
        grad1: grad1_tilde,
        grad2: grad2_sup,
        quadruple_samples: quads.quadruples.len(),
        quadruple_rejected: quads.rejected,
        kappa1,
        kappa1_slope: slope(&kappa1_points),
        g_modulus,
        k2_ratio,
        averaging: st.averaging,
        one_step: st.one_step,
        denjoy,
        sandwich,
        nested,
        identities,
        rational_gap,
        drops,
    })
}

/// Tabulates `kappa_lo..=kappa_hi` in parallel, one task per `kappa`. Rows
/// that fail become holes; a degenerate configuration aborts the table.
pub fn compute_table(
    config: &Configuration,
    kappa_lo: i64,
    kappa_hi: i64,
    params: &DistortionParams,
) -> Result<DistortionTable> {
    if kappa_hi < kappa_lo {
        return Err(Error::InvalidInput(format!("empty kappa range [{kappa_lo}, {kappa_hi}]")));
    }
    let cs = ChordSpace::new(config);
    let results: Vec<(i64, Result<KappaRow>)> =
        (kappa_lo..=kappa_hi).into_par_iter().map(|k| (k, compute_row(&cs, k, params))).collect();
    let mut rows = Vec::new();
    let mut holes = Vec::new();
    for (kappa, r) in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e @ (Error::Degenerate(_) | Error::Invariant(_))) => return Err(e),
            Err(e) => holes.push(Hole { kappa, reason: e.to_string() }),
        }
    }
    let mut breaks = Vec::new();
    for pair in rows.windows(2) {
        if pair[1].kappa != pair[0].kappa + 1 {
            continue;
        }
        for c in &pair[0].pair_cells {
            if let Some(next) = pair[1].pair_cell(c.r) {
                if c.grad1 > next.grad1 {
                    breaks.push((pair[0].kappa, c.r));
                }
            }
        }
    }
    let alpha = config.map().alpha();
    Ok(DistortionTable {
        params: *params,
        eps: config.map().eps(),
        a_alpha: alpha.bound(),
        gamma0: cs.machinery().gamma0(),
        q_m: config.q(),
        denominators: alpha.denominators().to_vec(),
        kappa_range: (kappa_lo, kappa_hi),
        rows,
        holes,
        grad1_monotonicity_breaks: breaks,
    })
}
