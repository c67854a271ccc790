//! Verdicts for the boundedness criteria and the conditions `R`, `S`, `T`.
//!
//! Constants left implicit by the theory are fitted as the largest observed
//! ratio over the probed range. A bounded verdict then needs every row of
//! that range to sit below the fitted constant, with no extrapolation, and a
//! stable constant across seeds (see [`seed_consensus`]).

use serde::{Deserialize, Serialize};

use super::{DistortionTable, Hole, KappaRow};

/// Fitted constants must agree within this factor across seeds.
pub const SEED_BAND: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    BoundedWithMargin,
    Inconclusive,
    Violated,
}

impl Verdict {
    /// The worse of two verdicts.
    pub fn and(self, other: Verdict) -> Verdict {
        self.max(other)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub verdict: Verdict,
    pub value: f64,
    pub threshold: f64,
    pub reason: Option<String>,
}

impl ConditionCheck {
    fn compare(value: f64, threshold: f64, reliable: bool) -> Self {
        let (verdict, reason) = if !value.is_finite() {
            (Verdict::Violated, Some("non-finite value".to_string()))
        } else if value > threshold * (1.0 + 1e-12) {
            (Verdict::Violated, Some(format!("{value:e} exceeds {threshold:e}")))
        } else if !reliable {
            (Verdict::Inconclusive, Some("more than 10% of iterates dropped".to_string()))
        } else {
            (Verdict::BoundedWithMargin, None)
        };
        Self { verdict, value, threshold, reason }
    }

    fn forced(verdict: Verdict, reason: &str) -> Self {
        // the values are meaningless here; zeros keep the record serializable
        Self { verdict, value: 0.0, threshold: 0.0, reason: Some(reason.to_string()) }
    }
}

/// Condition verdicts at one `kappa`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaConditions {
    pub kappa: i64,
    /// `grad1(kappa, N~) <= eps / (960 A)`.
    pub r_literal: ConditionCheck,
    /// `grad2(kappa, N~, N~) <= C0 q_{N~}^{-eps/3}`.
    pub r_second: ConditionCheck,
    /// `max_r K~1_r(kappa, r) q_r^{eps/3} <= C1`.
    pub s: ConditionCheck,
    /// `Lambda_II(kappa) <= C2`.
    pub t: ConditionCheck,
}

impl KappaConditions {
    pub fn r(&self) -> Verdict {
        self.r_literal.verdict.and(self.r_second.verdict)
    }
}

/// Thresholds embedded so a report is auditable on its own.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub eps: f64,
    pub a_alpha: u64,
    /// `eps / (960 A)`.
    pub r_literal: f64,
    pub drop_limit: f64,
    pub seed_band: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FittedConstants {
    /// `grad2 q_{N~}^{eps/3}` at the smallest probed `kappa`.
    pub c0: f64,
    /// `max_kappa grad2 q_{N~}^{eps/3}`.
    pub c0_envelope: f64,
    pub c1: f64,
    pub c2: f64,
    /// `max_kappa |G(v2) - G(v1)| q_{N~}^{eps/3}`.
    pub c4: f64,
    /// `max_kappa Lambda_I`.
    pub lambda_i: f64,
    /// `max_kappa K~0_{N-}`.
    pub k0_tilde: f64,
    /// Comparison constant of `|K2|` against `|grad2| + Theta`.
    pub k2: f64,
}

impl FittedConstants {
    fn named(&self) -> [(&'static str, f64); 8] {
        [
            ("c0", self.c0),
            ("c0_envelope", self.c0_envelope),
            ("c1", self.c1),
            ("c2", self.c2),
            ("c4", self.c4),
            ("lambda_i", self.lambda_i),
            ("k0_tilde", self.k0_tilde),
            ("k2", self.k2),
        ]
    }
}

/// Trend diagnostics; reported, never asserted here.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Trends {
    /// Slope of `ln g_modulus` against `ln q_{N~}`.
    pub g_modulus_slope: Option<f64>,
    /// Mean over `kappa` of the slope of `ln kappa1` against `r`.
    pub kappa1_slope: Option<f64>,
    /// The envelope slope `(eps/2) ln(9/10)` for comparison.
    pub kappa1_reference_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub seed: u64,
    pub kappa_range: (i64, i64),
    pub thresholds: Thresholds,
    pub fitted: FittedConstants,
    pub per_kappa: Vec<KappaConditions>,
    /// `Lambda_I` envelope bounded.
    pub criterion1: ConditionCheck,
    /// `Lambda_II` envelope bounded.
    pub criterion2: ConditionCheck,
    /// `K~0_{N-}` envelope bounded.
    pub criterion3: ConditionCheck,
    /// `kappa` where `R` holds but `S` or `T` does not.
    pub implication_breaks: Vec<i64>,
    pub holes: Vec<Hole>,
    pub trends: Trends,
    pub overall: Verdict,
}

impl CriterionReport {
    pub fn condition(&self, kappa: i64) -> Option<&KappaConditions> {
        self.per_kappa.iter().find(|c| c.kappa == kappa)
    }

    /// Report for a run whose minimizer collapsed: every ratio `lambda/Theta`
    /// is unbounded, so every condition is violated.
    pub fn degenerate(seed: u64, kappa_range: (i64, i64), eps: f64, a_alpha: u64, reason: &str) -> Self {
        let why = format!("degenerate minimizer, lambda/Theta unbounded: {reason}");
        let v = || ConditionCheck::forced(Verdict::Violated, &why);
        Self {
            seed,
            kappa_range,
            thresholds: thresholds(eps, a_alpha),
            fitted: FittedConstants::default(),
            per_kappa: (kappa_range.0..=kappa_range.1)
                .map(|kappa| KappaConditions { kappa, r_literal: v(), r_second: v(), s: v(), t: v() })
                .collect(),
            criterion1: v(),
            criterion2: v(),
            criterion3: v(),
            implication_breaks: Vec::new(),
            holes: Vec::new(),
            trends: Trends::default(),
            overall: Verdict::Violated,
        }
    }
}

fn thresholds(eps: f64, a_alpha: u64) -> Thresholds {
    Thresholds {
        eps,
        a_alpha,
        r_literal: eps / (960.0 * a_alpha as f64),
        drop_limit: super::DROP_LIMIT,
        seed_band: SEED_BAND,
    }
}

fn slope(points: &[(f64, f64)]) -> Option<f64> {
    super::slope(points)
}

fn max_of(rows: &[KappaRow], f: impl Fn(&KappaRow) -> f64) -> f64 {
    rows.iter().map(f).fold(0.0, f64::max)
}

/// Evaluates one seed's table.
pub fn evaluate_conditions(table: &DistortionTable) -> CriterionReport {
    let th = thresholds(table.eps, table.a_alpha);
    let decay = table.eps / 3.0;
    let rows = &table.rows;
    let q = |n: usize| table.denominators[n] as f64;

    let second = |r: &KappaRow| r.grad2 * q(r.windows.n_tilde).powf(decay);
    let s_ratio = |r: &KappaRow| {
        r.pair_cells
            .iter()
            .filter(|c| c.r <= r.windows.n_tilde)
            .map(|c| c.k1_tilde * q(c.r).powf(decay))
            .fold(0.0, f64::max)
    };
    let fitted = FittedConstants {
        c0: rows.first().map_or(0.0, second),
        c0_envelope: max_of(rows, second),
        c1: max_of(rows, s_ratio),
        c2: max_of(rows, |r| r.lambda_ii),
        c4: max_of(rows, |r| r.g_modulus * q(r.windows.n_tilde).powf(decay)),
        lambda_i: max_of(rows, |r| r.lambda_i),
        k0_tilde: max_of(rows, |r| r.k0_tilde),
        k2: max_of(rows, |r| r.k2_ratio),
    };

    let per_kappa: Vec<KappaConditions> = rows
        .iter()
        .map(|r| {
            let ok = r.reliable();
            let qn = q(r.windows.n_tilde);
            KappaConditions {
                kappa: r.kappa,
                r_literal: ConditionCheck::compare(r.grad1, th.r_literal, ok),
                r_second: ConditionCheck::compare(r.grad2, fitted.c0 * qn.powf(-decay), ok),
                s: ConditionCheck::compare(s_ratio(r), fitted.c1, ok),
                t: ConditionCheck::compare(r.lambda_ii, fitted.c2, ok),
            }
        })
        .collect();

    let all_ok = rows.iter().all(KappaRow::reliable) && table.holes.is_empty();
    let envelope = |value: f64| {
        let mut c = ConditionCheck::compare(value, value, all_ok);
        if c.verdict == Verdict::Inconclusive && !table.holes.is_empty() {
            c.reason = Some("kappa range has holes".into());
        }
        c
    };
    let criterion1 = envelope(fitted.lambda_i);
    let criterion2 = envelope(fitted.c2);
    let criterion3 = envelope(fitted.k0_tilde);

    let implication_breaks = per_kappa
        .iter()
        .filter(|c| {
            c.r() == Verdict::BoundedWithMargin
                && (c.s.verdict != Verdict::BoundedWithMargin || c.t.verdict != Verdict::BoundedWithMargin)
        })
        .map(|c| c.kappa)
        .collect();

    let g_points: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.g_modulus > 0.0).map(|r| (q(r.windows.n_tilde).ln(), r.g_modulus.ln())).collect();
    let k1_slopes: Vec<f64> = rows.iter().filter_map(|r| r.kappa1_slope).collect();
    let trends = Trends {
        g_modulus_slope: slope(&g_points),
        kappa1_slope: (!k1_slopes.is_empty()).then(|| k1_slopes.iter().sum::<f64>() / k1_slopes.len() as f64),
        kappa1_reference_slope: 0.5 * table.eps * (0.9f64).ln(),
    };

    let mut overall = criterion1.verdict.and(criterion2.verdict).and(criterion3.verdict);
    for c in &per_kappa {
        overall = overall.and(c.r()).and(c.s.verdict).and(c.t.verdict);
    }
    if !table.holes.is_empty() {
        overall = overall.and(Verdict::Inconclusive);
    }

    CriterionReport {
        seed: table.params.seed,
        kappa_range: table.kappa_range,
        thresholds: th,
        fitted,
        per_kappa,
        criterion1,
        criterion2,
        criterion3,
        implication_breaks,
        holes: table.holes.clone(),
        trends,
        overall,
    }
}

/// Spread of one fitted constant across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub stable: bool,
}

impl Band {
    fn new(name: &str, values: &[f64]) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(0.0, f64::max);
        // all-zero constants (the unperturbed map) are trivially stable
        let stable = max.is_finite() && (max == 0.0 || (min > 0.0 && max / min <= SEED_BAND));
        Self { name: name.to_string(), min, max, stable }
    }

    pub fn ratio(&self) -> f64 {
        if self.max == 0.0 {
            1.0
        } else {
            self.max / self.min
        }
    }
}

/// Cross-seed view: verdicts are downgraded to inconclusive when the
/// constant they rest on is unstable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedConsensus {
    pub seeds: Vec<u64>,
    pub bands: Vec<Band>,
    pub criterion1: Verdict,
    pub criterion2: Verdict,
    pub criterion3: Verdict,
    pub r: Vec<(i64, Verdict)>,
    pub s: Vec<(i64, Verdict)>,
    pub t: Vec<(i64, Verdict)>,
    pub overall: Verdict,
}

impl SeedConsensus {
    pub fn band(&self, name: &str) -> Option<&Band> {
        self.bands.iter().find(|b| b.name == name)
    }
}

pub fn seed_consensus(reports: &[CriterionReport]) -> SeedConsensus {
    let names = FittedConstants::default().named().map(|(n, _)| n);
    let bands: Vec<Band> = names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let vals: Vec<f64> = reports.iter().map(|r| r.fitted.named()[k].1).collect();
            Band::new(name, &vals)
        })
        .collect();
    let stable = |name: &str| bands.iter().find(|b| b.name == name).is_some_and(|b| b.stable);
    let gate = |v: Verdict, name: &str| {
        if v == Verdict::BoundedWithMargin && !stable(name) {
            Verdict::Inconclusive
        } else {
            v
        }
    };
    let worst =
        |f: &dyn Fn(&CriterionReport) -> Verdict| reports.iter().map(f).fold(Verdict::BoundedWithMargin, Verdict::and);
    let per = |f: &dyn Fn(&KappaConditions) -> Verdict, name: &str| -> Vec<(i64, Verdict)> {
        let Some(first) = reports.first() else { return Vec::new() };
        first
            .per_kappa
            .iter()
            .map(|c| {
                let v = reports
                    .iter()
                    .filter_map(|r| r.condition(c.kappa))
                    .map(f)
                    .fold(Verdict::BoundedWithMargin, Verdict::and);
                (c.kappa, gate(v, name))
            })
            .collect()
    };
    let criterion1 = gate(worst(&|r| r.criterion1.verdict), "lambda_i");
    let criterion2 = gate(worst(&|r| r.criterion2.verdict), "c2");
    let criterion3 = gate(worst(&|r| r.criterion3.verdict), "k0_tilde");
    let r = per(&|c| c.r(), "c0_envelope");
    let s = per(&|c| c.s.verdict, "c1");
    let t = per(&|c| c.t.verdict, "c2");
    let mut overall = criterion1.and(criterion2).and(criterion3);
    for (_, v) in r.iter().chain(&s).chain(&t) {
        overall = overall.and(*v);
    }
    if reports.is_empty() {
        overall = Verdict::Inconclusive;
    }
    SeedConsensus {
        seeds: reports.iter().map(|r| r.seed).collect(),
        bands,
        criterion1,
        criterion2,
        criterion3,
        r,
        s,
        t,
        overall,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_order() {
        assert_eq!(Verdict::BoundedWithMargin.and(Verdict::Inconclusive), Verdict::Inconclusive);
        assert_eq!(Verdict::Violated.and(Verdict::Inconclusive), Verdict::Violated);
    }

    #[test]
    fn compare_rules() {
        assert_eq!(ConditionCheck::compare(1.0, 2.0, true).verdict, Verdict::BoundedWithMargin);
        assert_eq!(ConditionCheck::compare(1.0, 2.0, false).verdict, Verdict::Inconclusive);
        assert_eq!(ConditionCheck::compare(3.0, 2.0, false).verdict, Verdict::Violated);
        assert_eq!(ConditionCheck::compare(f64::INFINITY, 2.0, true).verdict, Verdict::Violated);
    }

    #[test]
    fn degenerate_report_violates_everything() {
        let r = CriterionReport::degenerate(1, (6, 10), 0.5, 1, "collapsed");
        assert_eq!(r.overall, Verdict::Violated);
        assert_eq!(r.per_kappa.len(), 5);
        assert!(r.per_kappa.iter().all(|c| c.r() == Verdict::Violated));
        assert!((r.thresholds.r_literal - 0.5 / 960.0).abs() < 1e-18);
        let back: CriterionReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn bands() {
        assert!(Band::new("x", &[1.0, 1.9]).stable);
        assert!(!Band::new("x", &[1.0, 2.1]).stable);
        assert!(Band::new("x", &[0.0, 0.0]).stable);
        assert!(!Band::new("x", &[0.0, 1.0]).stable);
    }
}
