//! Importance-sampled bounds and losses as functions of the log weights.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::info_metrics::check_alpha;
use crate::numeric::{log_sum_exp, softmax};

use super::particles::ParticleBatch;

pub const DEFAULT_ALPHA: f64 = 0.2;

/// Training objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Objective {
    Elbo,
    Tempered(f64),
    Bhattacharyya,
    Resistor,
    ChernoffApprox(f64),
}

impl Objective {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Objective::Tempered(t) if !(t > 0.0 && t <= 1.0) => {
                Err(Error::domain(format!("tempering t = {t} outside (0,1]")))
            }
            Objective::ChernoffApprox(a) => check_alpha(a),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Elbo => write!(f, "elbo"),
            Objective::Tempered(t) => write!(f, "tempered:{t}"),
            Objective::Bhattacharyya => write!(f, "bhattacharyya"),
            Objective::Resistor => write!(f, "resistor"),
            Objective::ChernoffApprox(a) => write!(f, "chernoff-approx:{a}"),
        }
    }
}

impl FromStr for Objective {
    type Err = Error;

    /// Accepts `elbo`, `bhattacharyya`, `resistor`, `tempered:<t>`,
    /// `chernoff-approx` (α = 0.2) and `chernoff-approx:<α>`.
    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let num = |a: &str| {
            a.trim()
                .parse::<f64>()
                .map_err(|_| Error::domain(format!("bad objective parameter `{a}`")))
        };
        let obj = match (head.trim(), arg) {
            ("elbo", None) => Objective::Elbo,
            ("bhattacharyya", None) => Objective::Bhattacharyya,
            ("resistor", None) => Objective::Resistor,
            ("tempered", Some(a)) => Objective::Tempered(num(a)?),
            ("chernoff-approx", None) => Objective::ChernoffApprox(DEFAULT_ALPHA),
            ("chernoff-approx", Some(a)) => Objective::ChernoffApprox(num(a)?),
            _ => return Err(Error::domain(format!("unknown objective `{s}`"))),
        };
        obj.validate()?;
        Ok(obj)
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::domain(format!("t = {t} outside (0,1]")));
    }
    Ok(())
}

/// `(1/t) · [logsumexp(t · log w) − log K]`.
pub fn tempered_bound(log_w: &[f64], t: f64) -> Result<f64> {
    check_t(t)?;
    let k = log_w.len() as f64;
    let scaled: Vec<f64> = log_w.iter().map(|&v| t * v).collect();
    Ok((log_sum_exp(&scaled) - k.ln()) / t)
}

pub fn elbo(log_w: &[f64]) -> f64 {
    log_w.iter().sum::<f64>() / log_w.len() as f64
}

/// `(d_qp, d_pq)`: the KLs between the uniform distribution over particles
/// and the self-normalized weights, which estimate `KL(q(h|x)‖p(h|x))`
/// and `KL(p(h|x)‖q(h|x))`. Both are nonnegative for every batch.
pub fn conditional_kl_estimates(log_w: &[f64]) -> (f64, f64) {
    let k = log_w.len() as f64;
    let log_mean = log_sum_exp(log_w) - k.ln();
    let d_qp = log_mean - elbo(log_w);
    let wn = softmax(log_w);
    let snis: f64 = wn.iter().zip(log_w).map(|(w, lw)| w * lw).sum();
    let d_pq = snis - log_mean;
    (d_qp.max(0.0), d_pq.max(0.0))
}

fn resistor_value(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s == 0.0 {
        0.0
    } else {
        a * b / s
    }
}

pub fn resistor_loss(log_w: &[f64]) -> f64 {
    let (a, b) = conditional_kl_estimates(log_w);
    resistor_value(a, b)
}

/// `B̂ = −½ · tempered_bound(½)`.
pub fn bhattacharyya_loss(log_w: &[f64]) -> f64 {
    -0.5 * tempered_bound(log_w, 0.5).expect("t = 1/2 is valid")
}

pub fn chernoff_approx_loss(log_w: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(alpha * bhattacharyya_loss(log_w) + (1.0 - alpha) * resistor_loss(log_w))
}

/// `(Σw)² / Σw²`.
pub fn ess(log_w: &[f64]) -> f64 {
    let wn = softmax(log_w);
    let s2: f64 = wn.iter().map(|w| w * w).sum();
    (1.0 / s2).clamp(1.0, log_w.len() as f64)
}

/// The value minimized during training.
pub fn loss(objective: Objective, log_w: &[f64]) -> Result<f64> {
    objective.validate()?;
    Ok(match objective {
        Objective::Elbo => -elbo(log_w),
        Objective::Tempered(t) => -tempered_bound(log_w, t)?,
        Objective::Bhattacharyya => bhattacharyya_loss(log_w),
        Objective::Resistor => resistor_loss(log_w),
        Objective::ChernoffApprox(a) => chernoff_approx_loss(log_w, a)?,
    })
}

/// `∂R̂/∂log w_k`, with particles held fixed.
pub fn resistor_grad(log_w: &[f64]) -> Vec<f64> {
    let k = log_w.len() as f64;
    let (a, b) = conditional_kl_estimates(log_w);
    let s = a + b;
    if s == 0.0 {
        return vec![0.0; log_w.len()];
    }
    let (da, db) = (b * b / (s * s), a * a / (s * s));
    let wn = softmax(log_w);
    let snis: f64 = wn.iter().zip(log_w).map(|(w, lw)| w * lw).sum();
    wn.iter()
        .zip(log_w)
        .map(|(&w, &lw)| da * (w - 1.0 / k) + db * w * (lw - snis))
        .collect()
}

/// Per-particle gradient coefficients of one objective.
///
/// The loss gradient is `Σ_k p[k] ∂log p(x,h^k) + Σ_k q[k] ∂log q(h^k|x)`
/// with particles held fixed. `p` is the exact derivative of [`loss`] with
/// respect to `log w`. For the recognition side, bound terms use the
/// reweighted wake update (maximize `Σ ω_k log q(h^k|x)`) instead of their
/// literal derivative, while Resistor terms use the literal chain rule.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficients {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Fixed per-particle weights of the wake part of `q`.
    pub q_wake: Vec<f64>,
    /// Weight on the Resistor term (its `q` part is `−resistor_weight · ∂R̂/∂log w`).
    pub resistor_weight: f64,
}

pub fn coefficients(objective: Objective, log_w: &[f64]) -> Result<Coefficients> {
    objective.validate()?;
    let k = log_w.len();
    let tempered = |t: f64, scale: f64| -> Vec<f64> {
        let scaled: Vec<f64> = log_w.iter().map(|&v| t * v).collect();
        softmax(&scaled).into_iter().map(|w| -scale * w).collect()
    };
    let (p_bound, q_wake, rw) = match objective {
        Objective::Elbo => (vec![-1.0 / k as f64; k], tempered(1.0, 1.0), 0.0),
        Objective::Tempered(t) => (tempered(t, 1.0), tempered(t, 1.0), 0.0),
        Objective::Bhattacharyya => (tempered(0.5, 0.5), tempered(0.5, 0.5), 0.0),
        Objective::Resistor => (vec![0.0; k], vec![0.0; k], 1.0),
        Objective::ChernoffApprox(a) => (tempered(0.5, 0.5 * a), tempered(0.5, 0.5 * a), 1.0 - a),
    };
    let rg = if rw > 0.0 { resistor_grad(log_w) } else { vec![0.0; k] };
    let p = p_bound.iter().zip(&rg).map(|(b, g)| b + rw * g).collect();
    let q = q_wake.iter().zip(&rg).map(|(b, g)| b - rw * g).collect();
    Ok(Coefficients {
        p,
        q,
        q_wake,
        resistor_weight: rw,
    })
}

/// Recognition-side surrogate whose gradient (particles and wake weights
/// fixed at `reference_log_w`) equals the `q` coefficients above:
/// `Σ_k q_wake[k] · log q(h^k|x) + resistor_weight · R̂(log w)`.
pub fn recognition_surrogate(
    objective: Objective,
    log_w: &[f64],
    log_q: &[f64],
    reference_log_w: &[f64],
) -> Result<f64> {
    let c = coefficients(objective, reference_log_w)?;
    let wake: f64 = c.q_wake.iter().zip(log_q).map(|(a, b)| a * b).sum();
    let res = if c.resistor_weight > 0.0 {
        c.resistor_weight * resistor_loss(log_w)
    } else {
        0.0
    };
    Ok(wake + res)
}

impl ParticleBatch {
    pub fn tempered_bound(&self, t: f64) -> Result<f64> {
        tempered_bound(self.log_weights(), t)
    }

    pub fn elbo(&self) -> f64 {
        elbo(self.log_weights())
    }

    pub fn conditional_kl_estimates(&self) -> (f64, f64) {
        conditional_kl_estimates(self.log_weights())
    }

    pub fn resistor_loss(&self) -> f64 {
        resistor_loss(self.log_weights())
    }

    pub fn chernoff_approx_loss(&self, alpha: f64) -> Result<f64> {
        chernoff_approx_loss(self.log_weights(), alpha)
    }

    pub fn ess(&self) -> f64 {
        ess(self.log_weights())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_round_trip() {
        for s in [
            "elbo",
            "bhattacharyya",
            "resistor",
            "tempered:0.3",
            "chernoff-approx:0.2",
        ] {
            let o: Objective = s.parse().unwrap();
            assert_eq!(o.to_string(), s);
        }
        assert_eq!(
            "chernoff-approx".parse::<Objective>().unwrap(),
            Objective::ChernoffApprox(0.2)
        );
        assert!("tempered:0".parse::<Objective>().is_err());
        assert!("tempered:1.5".parse::<Objective>().is_err());
        assert!("chernoff-approx:2".parse::<Objective>().is_err());
        assert!("kl".parse::<Objective>().is_err());
    }

    #[test]
    fn single_particle_collapse() {
        let lw = [-3.7];
        for t in [0.1, 0.5, 1.0] {
            assert!((tempered_bound(&lw, t).unwrap() + 3.7).abs() < 1e-14);
        }
        assert_eq!(elbo(&lw), -3.7);
        assert_eq!(conditional_kl_estimates(&lw), (0.0, 0.0));
        assert_eq!(ess(&lw), 1.0);
    }

    #[test]
    fn t_one_is_log_mean_weight() {
        let lw = [-1.0, -2.0, -0.5, -4.0];
        let mean: f64 = lw.iter().map(|v: &f64| v.exp()).sum::<f64>() / 4.0;
        assert!((tempered_bound(&lw, 1.0).unwrap() - mean.ln()).abs() < 1e-14);
        assert!(tempered_bound(&lw, 0.0).is_err());
        assert!(tempered_bound(&lw, 1.1).is_err());
    }

    #[test]
    fn equal_weights() {
        let lw = [-2.5; 6];
        assert!((elbo(&lw) + 2.5).abs() < 1e-15);
        assert!((tempered_bound(&lw, 0.5).unwrap() + 2.5).abs() < 1e-14);
        let (a, b) = conditional_kl_estimates(&lw);
        assert!(a < 1e-14 && b < 1e-14);
        assert_eq!(resistor_loss(&lw), 0.0);
        assert!((ess(&lw) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn chernoff_approx_endpoints() {
        let lw = [-1.0, -3.0, -2.0];
        assert!((chernoff_approx_loss(&lw, 1.0).unwrap() - bhattacharyya_loss(&lw)).abs() < 1e-15);
        assert!((chernoff_approx_loss(&lw, 0.0).unwrap() - resistor_loss(&lw)).abs() < 1e-15);
        assert!(chernoff_approx_loss(&lw, -0.1).is_err());
    }

    fn fd_check(f: impl Fn(&[f64]) -> f64, grad: &[f64], lw: &[f64]) {
        let h = 1e-6;
        for k in 0..lw.len() {
            let mut a = lw.to_vec();
            let mut b = lw.to_vec();
            a[k] += h;
            b[k] -= h;
            let fd = (f(&a) - f(&b)) / (2.0 * h);
            assert!((fd - grad[k]).abs() < 1e-7, "k={k}: fd {fd} vs {}", grad[k]);
        }
    }

    #[test]
    fn p_coefficients_are_loss_derivatives() {
        let lw = [-1.0, -3.0, -2.2, -0.4, -5.0];
        for obj in [
            Objective::Elbo,
            Objective::Tempered(0.3),
            Objective::Bhattacharyya,
            Objective::Resistor,
            Objective::ChernoffApprox(0.2),
        ] {
            let c = coefficients(obj, &lw).unwrap();
            fd_check(|v| loss(obj, v).unwrap(), &c.p, &lw);
        }
    }

    proptest! {
        #[test]
        fn kl_estimates_nonnegative(lw in prop::collection::vec(-50.0f64..5.0, 1..40)) {
            let (a, b) = conditional_kl_estimates(&lw);
            prop_assert!(a >= 0.0 && b >= 0.0);
            let e = ess(&lw);
            prop_assert!(e >= 1.0 && e <= lw.len() as f64);
        }

        #[test]
        fn tempered_monotone_in_t(lw in prop::collection::vec(-20.0f64..2.0, 1..30)) {
            let mut prev = elbo(&lw);
            for i in 1..=20 {
                let v = tempered_bound(&lw, i as f64 / 20.0).unwrap();
                prop_assert!(v >= prev - 1e-9);
                prev = v;
            }
        }
    }
}
