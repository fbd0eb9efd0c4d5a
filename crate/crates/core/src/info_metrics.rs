//! Exact distances between finite discrete distributions.
//!
//! Every quantity is in nats. Divergences that are infinite because of a
//! support mismatch are returned as `f64::INFINITY`, detected explicitly from
//! the supports rather than produced by overflow.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric::{log_sum_exp, log_sum_exp_iter};

const SUM_TOL: f64 = 1e-12;
/// Bracket width at which the Chernoff search stops.
pub const CHERNOFF_T_TOL: f64 = 1e-10;

/// A probability vector over a finite alphabet of at least two symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::domain(format!(
                "alphabet size must be at least 2, got {}",
                probs.len()
            )));
        }
        if let Some(bad) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::domain(format!("invalid probability {bad}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::domain(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { probs })
    }

    /// Rescales nonnegative weights to sum to one.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::domain("weights must have a positive finite sum"));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    /// `(1 - p, p)`: symbol 1 has probability `p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("bernoulli parameter {p} outside [0,1]")));
        }
        Self::new(vec![1.0 - p, p])
    }

    pub fn uniform(size: usize) -> Result<Self> {
        Self::new(vec![1.0 / size as f64; size])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn has_full_support(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }
}

/// Maximizer and value of the Chernoff curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChernoffResult {
    #[serde(serialize_with = "extended_real")]
    pub value: f64,
    pub t_star: f64,
}

/// Every distance of the family for one pair, with the blend weight used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DistancePanel {
    #[serde(serialize_with = "extended_real")]
    pub kl_qp: f64,
    #[serde(serialize_with = "extended_real")]
    pub kl_pq: f64,
    #[serde(serialize_with = "extended_real")]
    pub jeffreys: f64,
    #[serde(serialize_with = "extended_real")]
    pub bhattacharyya: f64,
    pub chernoff: ChernoffResult,
    #[serde(serialize_with = "extended_real")]
    pub resistor: f64,
    #[serde(serialize_with = "extended_real")]
    pub chernoff_approx: f64,
    pub alpha: f64,
}

/// JSON has no infinity; write it as the string `"inf"`.
pub fn extended_real<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() && *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

fn check_dims(a: &DiscreteDistribution, b: &DiscreteDistribution) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::dim(format!("alphabet sizes differ: {} vs {}", a.len(), b.len())));
    }
    Ok(())
}

/// `D(q‖p) = Σ q log(q/p)`.
pub fn kl(q: &DiscreteDistribution, p: &DiscreteDistribution) -> Result<f64> {
    check_dims(q, p)?;
    let mut total = 0.0;
    for (&qi, &pi) in q.probs.iter().zip(&p.probs) {
        if qi == 0.0 {
            continue;
        }
        if pi == 0.0 {
            return Ok(f64::INFINITY);
        }
        total += qi * (qi.ln() - pi.ln());
    }
    Ok(total.max(0.0))
}

pub fn jeffreys(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    Ok(kl(p, q)? + kl(q, p)?)
}

/// `(1-t) log q + t log p` with `0 · log 0 = 0`.
#[inline]
fn tilted_log_term(qi: f64, pi: f64, t: f64) -> f64 {
    let a = if t == 1.0 { 0.0 } else { (1.0 - t) * qi.ln() };
    let b = if t == 0.0 { 0.0 } else { t * pi.ln() };
    a + b
}

/// `log Σ q^(1-t) p^t`, with `0^0 = 1` at the endpoints.
pub fn log_z(p: &DiscreteDistribution, q: &DiscreteDistribution, t: f64) -> Result<f64> {
    check_dims(p, q)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("t = {t} outside [0,1]")));
    }
    // With 0^0 = 1 the endpoints are the total masses of q and p.
    if t == 0.0 || t == 1.0 {
        let d = if t == 0.0 { q } else { p };
        return Ok(d.probs.iter().sum::<f64>().ln());
    }
    Ok(log_sum_exp_iter(
        q.probs
            .iter()
            .zip(&p.probs)
            .map(|(&qi, &pi)| tilted_log_term(qi, pi, t)),
    ))
}

pub fn bhattacharyya(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    let lz = log_z(p, q, 0.5)?;
    Ok(if lz == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        (-lz).max(0.0)
    })
}

/// Chernoff information `max_t −log Σ q^(1-t) p^t`.
///
/// The objective is restricted to the common support, which is the
/// continuous extension of the interior of the curve to `[0,1]`; it is
/// concave, so the endpoint slopes decide whether the peak is on the
/// boundary; otherwise the slope's single root is bracketed by bisection,
/// which resolves `t*` to [`CHERNOFF_T_TOL`] even where the curve is flat.
pub fn chernoff(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<ChernoffResult> {
    check_dims(p, q)?;
    let common: Vec<(f64, f64)> = q
        .probs
        .iter()
        .zip(&p.probs)
        .filter(|(&qi, &pi)| qi > 0.0 && pi > 0.0)
        .map(|(&qi, &pi)| (qi.ln(), pi.ln()))
        .collect();
    if common.is_empty() {
        return Ok(ChernoffResult {
            value: f64::INFINITY,
            t_star: 0.5,
        });
    }
    let curve = |t: f64| -> f64 { -log_sum_exp_iter(common.iter().map(|&(lq, lp)| (1.0 - t) * lq + t * lp)) };
    // d/dt of the curve is −E_{π_t}[log p/q] with π_t the tilted distribution.
    let slope = |t: f64| -> f64 {
        let logs: Vec<f64> = common.iter().map(|&(lq, lp)| (1.0 - t) * lq + t * lp).collect();
        let lse = log_sum_exp(&logs);
        -logs
            .iter()
            .zip(&common)
            .map(|(l, &(lq, lp))| (l - lse).exp() * (lp - lq))
            .sum::<f64>()
    };
    let t_star = if slope(0.0) <= 0.0 {
        0.0
    } else if slope(1.0) >= 0.0 {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > CHERNOFF_T_TOL {
            let mid = 0.5 * (lo + hi);
            if slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    Ok(ChernoffResult {
        value: curve(t_star).max(0.0),
        t_star,
    })
}

fn resistor_from_kls(d_qp: f64, d_pq: f64) -> f64 {
    match (d_qp.is_infinite(), d_pq.is_infinite()) {
        (true, true) => f64::INFINITY,
        (true, false) => d_pq,
        (false, true) => d_qp,
        (false, false) => {
            let s = d_qp + d_pq;
            if s == 0.0 {
                0.0
            } else {
                d_qp * d_pq / s
            }
        }
    }
}

/// Resistor-average distance `D(q‖p) D(p‖q) / (D(q‖p) + D(p‖q))`.
pub fn resistor(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    Ok(resistor_from_kls(kl(q, p)?, kl(p, q)?))
}

pub fn chernoff_approx(p: &DiscreteDistribution, q: &DiscreteDistribution, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let b = bhattacharyya(p, q)?;
    let r = resistor(p, q)?;
    Ok(blend(alpha, b, r))
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::domain(format!("alpha = {alpha} outside [0,1]")));
    }
    Ok(())
}

// Avoids 0 · inf = NaN at the alpha endpoints.
fn blend(alpha: f64, b: f64, r: f64) -> f64 {
    let lhs = if alpha == 0.0 { 0.0 } else { alpha * b };
    let rhs = if alpha == 1.0 { 0.0 } else { (1.0 - alpha) * r };
    lhs + rhs
}

/// Joint distribution of independent draws, indexed `i * p2.len() + j`.
pub fn product(p1: &DiscreteDistribution, p2: &DiscreteDistribution) -> DiscreteDistribution {
    let mut probs = Vec::with_capacity(p1.len() * p2.len());
    for &a in &p1.probs {
        for &b in &p2.probs {
            probs.push(a * b);
        }
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 0.0 {
        for v in &mut probs {
            *v /= total;
        }
    }
    DiscreteDistribution { probs }
}

/// `(t, −log Z(t))` on an even grid over `[0,1]`.
pub fn curve_table(p: &DiscreteDistribution, q: &DiscreteDistribution, num_points: usize) -> Result<Vec<(f64, f64)>> {
    check_dims(p, q)?;
    if num_points < 2 {
        return Err(Error::domain("curve needs at least 2 points"));
    }
    let last = (num_points - 1) as f64;
    (0..num_points)
        .map(|i| {
            let t = i as f64 / last;
            let v = -log_z(p, q, t)?;
            Ok((t, v + 0.0))
        })
        .collect()
}

pub fn panel(p: &DiscreteDistribution, q: &DiscreteDistribution, alpha: f64) -> Result<DistancePanel> {
    check_alpha(alpha)?;
    let kl_qp = kl(q, p)?;
    let kl_pq = kl(p, q)?;
    let bhattacharyya = bhattacharyya(p, q)?;
    let resistor = resistor_from_kls(kl_qp, kl_pq);
    Ok(DistancePanel {
        kl_qp,
        kl_pq,
        jeffreys: kl_qp + kl_pq,
        bhattacharyya,
        chernoff: chernoff(p, q)?,
        resistor,
        chernoff_approx: blend(alpha, bhattacharyya, resistor),
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(v: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(v.to_vec()).unwrap()
    }

    // Values below were computed at 30 significant digits by direct summation.
    const KL_HALF_QUARTER: f64 = 0.143841036225890463719609502997;
    const KL_QUARTER_HALF: f64 = 0.130812035941136959129201806234;
    const B_HALF_QUARTER: f64 = 0.0346682320975369551047089478042;
    const R_HALF_QUARTER: f64 = 0.0685087505198147815946033662632;

    fn half() -> DiscreteDistribution {
        d(&[0.5, 0.5])
    }
    fn quarter() -> DiscreteDistribution {
        d(&[0.25, 0.75])
    }

    /// Dense-grid Chernoff oracle.
    fn chernoff_grid(p: &DiscreteDistribution, q: &DiscreteDistribution, n: usize) -> f64 {
        (0..=n)
            .map(|i| {
                let t = i as f64 / n as f64;
                let z: f64 = p
                    .probs()
                    .iter()
                    .zip(q.probs())
                    .filter(|(a, b)| **a > 0.0 && **b > 0.0)
                    .map(|(a, b)| b.powf(1.0 - t) * a.powf(t))
                    .sum();
                -z.ln()
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn distribution_invariants() {
        assert!(DiscreteDistribution::new(vec![1.0]).is_err());
        assert!(DiscreteDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(DiscreteDistribution::new(vec![-0.1, 1.1]).is_err());
        assert!(DiscreteDistribution::new(vec![f64::NAN, 1.0]).is_err());
        assert_eq!(DiscreteDistribution::bernoulli(0.3).unwrap().probs(), &[0.7, 0.3]);
    }

    #[test]
    fn kl_examples() {
        let u = DiscreteDistribution::uniform(4).unwrap();
        assert_eq!(kl(&u, &u).unwrap(), 0.0);
        assert_eq!(kl(&half(), &d(&[1.0, 0.0])).unwrap(), f64::INFINITY);
        assert!((kl(&half(), &quarter()).unwrap() - KL_HALF_QUARTER).abs() < 1e-12);
        assert!((kl(&half(), &quarter()).unwrap() - 0.1438).abs() < 1e-4);
        // 0 log(0/p) = 0
        assert!(kl(&d(&[1.0, 0.0]), &half()).unwrap().is_finite());
        assert!(matches!(
            kl(&half(), &DiscreteDistribution::uniform(3).unwrap()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn jeffreys_examples() {
        assert_eq!(jeffreys(&half(), &half()).unwrap(), 0.0);
        assert_eq!(jeffreys(&d(&[1.0, 0.0]), &d(&[0.0, 1.0])).unwrap(), f64::INFINITY);
        let j = jeffreys(&half(), &quarter()).unwrap();
        assert!((j - (KL_HALF_QUARTER + KL_QUARTER_HALF)).abs() < 1e-12);
    }

    #[test]
    fn log_z_examples() {
        assert!(log_z(&half(), &quarter(), 0.0).unwrap().abs() < 1e-15);
        assert!(log_z(&half(), &quarter(), 1.0).unwrap().abs() < 1e-15);
        assert!(log_z(&quarter(), &quarter(), 0.37).unwrap().abs() < 1e-15);
        let v = log_z(&half(), &quarter(), 0.5).unwrap();
        assert!((v + B_HALF_QUARTER).abs() < 1e-12);
        assert!((v.exp() - 0.96593).abs() < 1e-5);
        assert!(matches!(log_z(&half(), &quarter(), 1.5), Err(Error::Domain(_))));
        assert!(matches!(log_z(&half(), &quarter(), -0.1), Err(Error::Domain(_))));
        // zero-probability endpoints follow 0^0 = 1
        assert_eq!(log_z(&d(&[1.0, 0.0]), &half(), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn bhattacharyya_examples() {
        assert_eq!(bhattacharyya(&half(), &half()).unwrap(), 0.0);
        assert_eq!(bhattacharyya(&d(&[1.0, 0.0]), &d(&[0.0, 1.0])).unwrap(), f64::INFINITY);
        assert!((bhattacharyya(&half(), &quarter()).unwrap() - B_HALF_QUARTER).abs() < 1e-6);
    }

    #[test]
    fn chernoff_examples() {
        let c = chernoff(&quarter(), &quarter()).unwrap();
        assert_eq!(c.value, 0.0);
        for a in [0.1, 0.3, 0.45] {
            let p = d(&[a, 1.0 - a]);
            let q = d(&[1.0 - a, a]);
            let c = chernoff(&p, &q).unwrap();
            assert!((c.t_star - 0.5).abs() < 1e-9);
            assert!((c.value - bhattacharyya(&p, &q).unwrap()).abs() < 1e-12);
        }
        let c = chernoff(&half(), &quarter()).unwrap();
        let oracle = chernoff_grid(&half(), &quarter(), 100_000);
        assert!((c.value - oracle).abs() < 1e-8, "{} vs {}", c.value, oracle);
        assert!((c.value - 0.034_688_185_230_861_67).abs() < 1e-8);
        let swapped = chernoff(&quarter(), &half()).unwrap();
        assert!((swapped.value - c.value).abs() < 1e-12);
        assert!((swapped.t_star + c.t_star - 1.0).abs() < 1e-8);
    }

    #[test]
    fn chernoff_partial_support() {
        let p = d(&[0.5, 0.5, 0.0]);
        let q = d(&[0.2, 0.3, 0.5]);
        let c = chernoff(&p, &q).unwrap();
        assert!((c.value - chernoff_grid(&p, &q, 100_000)).abs() < 1e-8);
        assert!(c.value >= bhattacharyya(&p, &q).unwrap() - 1e-12);
        let disjoint = chernoff(&d(&[1.0, 0.0]), &d(&[0.0, 1.0])).unwrap();
        assert_eq!(disjoint.value, f64::INFINITY);
    }

    #[test]
    fn resistor_examples() {
        assert_eq!(resistor(&half(), &half()).unwrap(), 0.0);
        // symmetric pair: both KLs equal
        let p = d(&[0.2, 0.8]);
        let q = d(&[0.8, 0.2]);
        let k = kl(&p, &q).unwrap();
        assert!((resistor(&p, &q).unwrap() - k / 2.0).abs() < 1e-12);
        let r = resistor(&half(), &quarter()).unwrap();
        assert!((r - R_HALF_QUARTER).abs() < 1e-12);
        // one infinite KL: finite one survives
        let p = d(&[0.5, 0.5]);
        let q = d(&[1.0, 0.0]);
        assert!((resistor(&p, &q).unwrap() - kl(&q, &p).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn chernoff_approx_examples() {
        let (p, q) = (half(), quarter());
        assert_eq!(chernoff_approx(&p, &q, 1.0).unwrap(), bhattacharyya(&p, &q).unwrap());
        assert_eq!(chernoff_approx(&p, &q, 0.0).unwrap(), resistor(&p, &q).unwrap());
        let v = chernoff_approx(&p, &q, 0.2).unwrap();
        assert!((v - 0.061_740_646_835_359_22).abs() < 1e-12);
        assert!(matches!(chernoff_approx(&p, &q, 1.2), Err(Error::Domain(_))));
    }

    #[test]
    fn product_examples() {
        let u2 = DiscreteDistribution::uniform(2).unwrap();
        assert_eq!(
            product(&u2, &u2).probs(),
            DiscreteDistribution::uniform(4).unwrap().probs()
        );
        let p = d(&[0.3, 0.7]);
        let pm = d(&[0.0, 1.0, 0.0]);
        assert_eq!(product(&p, &pm).probs(), &[0.0, 0.3, 0.0, 0.0, 0.7, 0.0]);
        let pr = product(&p, &d(&[0.6, 0.4]));
        for (a, b) in pr.probs().iter().zip([0.18, 0.12, 0.42, 0.28]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn curve_examples() {
        let c = curve_table(&quarter(), &quarter(), 11).unwrap();
        assert!(c.iter().all(|&(_, v)| v.abs() < 1e-12));
        let c = curve_table(&half(), &quarter(), 1001).unwrap();
        assert!(c[0].0 == 0.0 && c[0].1.abs() < 1e-15);
        assert!(c[1000].1.abs() < 1e-15 && c[1000].0 == 1.0);
        let peak = c.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
        let ch = chernoff(&half(), &quarter()).unwrap().value;
        assert!(peak <= ch + 1e-15 && ch - peak < 1e-6);
        assert!(curve_table(&half(), &quarter(), 1).is_err());
    }

    #[test]
    fn kl_is_asymmetric() {
        let p = d(&[0.9, 0.1]);
        let q = d(&[0.5, 0.5]);
        assert!((kl(&p, &q).unwrap() - kl(&q, &p).unwrap()).abs() > 1e-3);
    }

    #[test]
    fn panel_serializes_infinity() {
        let pnl = panel(&d(&[1.0, 0.0]), &d(&[0.0, 1.0]), 0.2).unwrap();
        let js = serde_json::to_string(&pnl).unwrap();
        assert!(js.contains("\"kl_qp\":\"inf\""));
    }

    fn dist_strategy(n: usize) -> impl Strategy<Value = DiscreteDistribution> {
        prop::collection::vec(0.01f64..1.0, n).prop_map(|w| DiscreteDistribution::from_weights(&w).unwrap())
    }

    fn pair_strategy() -> impl Strategy<Value = (DiscreteDistribution, DiscreteDistribution)> {
        (2usize..7).prop_flat_map(|n| (dist_strategy(n), dist_strategy(n)))
    }

    proptest! {
        #[test]
        fn ordering_chain((p, q) in pair_strategy()) {
            let pn = panel(&p, &q, 0.2).unwrap();
            let slack = 1e-9;
            prop_assert!(pn.bhattacharyya >= -slack);
            prop_assert!(pn.bhattacharyya <= pn.chernoff.value + slack);
            prop_assert!(pn.chernoff.value <= pn.resistor + slack);
            prop_assert!(pn.resistor <= pn.kl_qp.min(pn.kl_pq) + slack);
            prop_assert!((pn.jeffreys - (pn.kl_qp + pn.kl_pq)).abs() <= 1e-12);
        }

        #[test]
        fn symmetric_measures((p, q) in pair_strategy()) {
            let a = panel(&p, &q, 0.2).unwrap();
            let b = panel(&q, &p, 0.2).unwrap();
            prop_assert!((a.bhattacharyya - b.bhattacharyya).abs() < 1e-12);
            prop_assert!((a.resistor - b.resistor).abs() < 1e-12);
            prop_assert!((a.jeffreys - b.jeffreys).abs() < 1e-12);
            prop_assert!((a.chernoff.value - b.chernoff.value).abs() < 1e-10);
            prop_assert!((a.chernoff.t_star + b.chernoff.t_star - 1.0).abs() < 1e-6);
        }

        #[test]
        fn log_z_convex((p, q) in pair_strategy(), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            let mid = log_z(&p, &q, 0.5 * (lo + hi)).unwrap();
            let avg = 0.5 * (log_z(&p, &q, lo).unwrap() + log_z(&p, &q, hi).unwrap());
            prop_assert!(mid <= avg + 1e-12);
        }

        #[test]
        fn self_distance_zero(p in (2usize..7).prop_flat_map(dist_strategy)) {
            let pn = panel(&p, &p, 0.2).unwrap();
            prop_assert!(pn.kl_qp.abs() < 1e-12 && pn.kl_pq.abs() < 1e-12);
            prop_assert!(pn.bhattacharyya.abs() < 1e-12);
            prop_assert!(pn.chernoff.value.abs() < 1e-12);
            prop_assert!(pn.resistor.abs() < 1e-12);
        }

        #[test]
        fn additive_measures((p1, q1) in pair_strategy(), (p2, q2) in pair_strategy()) {
            let pp = product(&p1, &p2);
            let qq = product(&q1, &q2);
            let sum = |f: fn(&DiscreteDistribution, &DiscreteDistribution) -> Result<f64>| {
                f(&p1, &q1).unwrap() + f(&p2, &q2).unwrap()
            };
            prop_assert!((kl(&pp, &qq).unwrap() - sum(kl)).abs() < 1e-9);
            prop_assert!((bhattacharyya(&pp, &qq).unwrap() - sum(bhattacharyya)).abs() < 1e-9);
            prop_assert!((jeffreys(&pp, &qq).unwrap() - sum(jeffreys)).abs() < 1e-9);
            // Chernoff is only subadditive.
            let c = chernoff(&pp, &qq).unwrap().value;
            let cs = chernoff(&p1, &q1).unwrap().value + chernoff(&p2, &q2).unwrap().value;
            prop_assert!(c <= cs + 1e-9);
        }
    }
}
