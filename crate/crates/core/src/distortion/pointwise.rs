//! Pointwise distortion quantities on single chords, pairs and quadruples.
//!
//! Every function returns `None` when an iterate leaves the index window.

use crate::chords::{Chord, ChordPair, ChordQuadruple, ChordSpace};

/// `K0(j|v) = ln Theta(F^j v) / Theta(v)`.
pub fn k0(cs: &ChordSpace, v: &Chord, j: i64) -> Option<f64> {
    let t = cs.big_theta_at(v.i, v.j, j)?;
    Some((t / v.big_theta).ln())
}

/// `K1(j|v1, v2) = K0(j|v2) - K0(j|v1)`.
pub fn k1(cs: &ChordSpace, p: &ChordPair, j: i64) -> Option<f64> {
    Some(k0(cs, &p.v2, j)? - k0(cs, &p.v1, j)?)
}

/// The pair-level `K0(v1, v2) = K1(1|v1, v2)`, kept apart from the single-chord `K0`.
pub fn k0_pair(cs: &ChordSpace, p: &ChordPair) -> Option<f64> {
    k1(cs, p, 1)
}

/// `K2(j|v1..v4) = K1(j|v3, v4)/Theta(v3, v4) - K1(j|v1, v2)/Theta(v1, v2)`.
pub fn k2(cs: &ChordSpace, q: &ChordQuadruple, j: i64) -> Option<f64> {
    Some(k1(cs, &q.p34, j)? / q.p34.big_theta - k1(cs, &q.p12, j)? / q.p12.big_theta)
}

/// `Theta(v3, v4) K2(j|.)` through the rearranged form
/// `K1(j|v3, v4) - (Theta(v3, v4)/Theta(v1, v2)) K1(j|v1, v2)`.
pub fn k2_scaled(cs: &ChordSpace, q: &ChordQuadruple, j: i64) -> Option<f64> {
    let ratio = q.p34.big_theta / q.p12.big_theta;
    Some(k1(cs, &q.p34, j)? - ratio * k1(cs, &q.p12, j)?)
}

/// `grad1(v1, v2) = (s(v2) - s(v1)) / Theta(v1, v2)`.
pub fn grad1(p: &ChordPair) -> f64 {
    (p.v2.s - p.v1.s) / p.big_theta
}

/// `grad2 = grad1(v3, v4) - grad1(v1, v2)`.
pub fn grad2(q: &ChordQuadruple) -> f64 {
    grad1(&q.p34) - grad1(&q.p12)
}

/// `E1(j|v1, v2)`: the difference of the one-chord expansion ratios over `Theta(v1, v2)`.
pub fn e1(cs: &ChordSpace, p: &ChordPair, j: i64) -> Option<f64> {
    let r2 = cs.big_theta_at(p.v2.i, p.v2.j, j)? / p.v2.big_theta;
    let r1 = cs.big_theta_at(p.v1.i, p.v1.j, j)? / p.v1.big_theta;
    Some((r2 - r1) / p.big_theta)
}

/// `G(v) = Theta(v) / lambda(v)`.
pub fn g(v: &Chord) -> f64 {
    v.big_theta / v.lambda
}

/// `max(lambda/Theta, Theta/lambda)`.
pub fn lambda_ratio(v: &Chord) -> f64 {
    let r = v.lambda / v.big_theta;
    r.max(1.0 / r)
}

/// `|K1(q_r|v1, v2)| / sum_{i < q_r} Theta(F^i(v1, v2))`.
pub fn kappa1_ratio(cs: &ChordSpace, p: &ChordPair, q_r: i64) -> Option<f64> {
    let num = k1(cs, p, q_r)?.abs();
    let mut den = 0.0;
    for i in 0..q_r {
        den += cs.big_theta_at(p.v1.i, p.v2.i, i)?;
    }
    Some(num / den)
}

/// `|mean_{0 <= j < q_N} Theta(F^j v) - lambda(v)|`, or `None` below `2/q_N`
/// or outside the window.
pub fn averaging_gap(cs: &ChordSpace, v: &Chord, q_n: i64) -> Option<f64> {
    if v.lambda < 2.0 / q_n as f64 {
        return None;
    }
    let mut sum = 0.0;
    for j in 0..q_n {
        sum += cs.big_theta_at(v.i, v.j, j)?;
    }
    Some((sum / q_n as f64 - v.lambda).abs())
}
