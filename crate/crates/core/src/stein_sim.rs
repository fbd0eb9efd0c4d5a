//! Exact error probabilities for i.i.d. binary hypothesis tests.
//!
//! Samples of size `n` are grouped into type classes (empirical histograms);
//! a likelihood-ratio test is constant on each class, so every error
//! probability is a finite log-sum-exp over `C(n+m-1, m-1)` classes.
//! Decision rule throughout: choose H1 iff `log P1(x) - log P0(x) > threshold`.
//! `P_F = P0(choose H1)`, `P_M = P1(choose H0)`.

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::info_metrics::{self, DiscreteDistribution};
use crate::numeric::log_sum_exp;

/// Default cap on the number of type classes a single call may enumerate.
pub const DEFAULT_TYPE_CAP: f64 = 2e7;

#[derive(Clone, Debug)]
pub struct HypothesisPair {
    pub p0: DiscreteDistribution,
    pub p1: DiscreteDistribution,
}

impl HypothesisPair {
    pub fn new(p0: DiscreteDistribution, p1: DiscreteDistribution) -> Result<Self> {
        if p0.len() != p1.len() {
            return Err(Error::dim(format!(
                "hypotheses over different alphabets ({} vs {})",
                p0.len(),
                p1.len()
            )));
        }
        Ok(Self { p0, p1 })
    }

    pub fn alphabet_size(&self) -> usize {
        self.p0.len()
    }

    fn require_full_support(&self) -> Result<()> {
        if self.p0.has_full_support() && self.p1.has_full_support() {
            Ok(())
        } else {
            Err(Error::domain(
                "exponent runs need full-support hypotheses (exponents would be infinite)",
            ))
        }
    }
}

/// One type class: log-probabilities under both hypotheses and its log-likelihood ratio.
#[derive(Clone, Copy, Debug)]
struct TypeClass {
    log_p0: f64,
    log_p1: f64,
    llr: f64,
}

fn log_type_count(n: usize, m: usize) -> f64 {
    ln_gamma((n + m) as f64) - ln_gamma((n + 1) as f64) - ln_gamma(m as f64)
}

fn for_each_composition(n: usize, m: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(counts: &mut Vec<usize>, pos: usize, left: usize, f: &mut impl FnMut(&[usize])) {
        if pos + 1 == counts.len() {
            counts[pos] = left;
            f(counts);
            return;
        }
        for c in 0..=left {
            counts[pos] = c;
            rec(counts, pos + 1, left - c, f);
        }
    }
    let mut counts = vec![0; m];
    rec(&mut counts, 0, n, f);
}

fn type_classes(pair: &HypothesisPair, n: usize, cap: f64) -> Result<Vec<TypeClass>> {
    if n == 0 {
        return Err(Error::domain("sample size must be positive"));
    }
    let m = pair.alphabet_size();
    let count = log_type_count(n, m).exp();
    if count > cap {
        return Err(Error::Resource(format!(
            "{count:.3e} type classes for n={n}, m={m} exceeds cap {cap:.3e}"
        )));
    }
    let ln0: Vec<f64> = pair.p0.probs().iter().map(|p| p.ln()).collect();
    let ln1: Vec<f64> = pair.p1.probs().iter().map(|p| p.ln()).collect();
    let log_nfact = ln_gamma((n + 1) as f64);
    let mut out = Vec::with_capacity(count.round() as usize);
    for_each_composition(n, m, &mut |counts| {
        let mut coef = log_nfact;
        let (mut lp0, mut lp1) = (0.0, 0.0);
        for (i, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            coef -= ln_gamma((c + 1) as f64);
            lp0 += c as f64 * ln0[i];
            lp1 += c as f64 * ln1[i];
        }
        if lp0 == f64::NEG_INFINITY && lp1 == f64::NEG_INFINITY {
            return;
        }
        out.push(TypeClass {
            log_p0: coef + lp0,
            log_p1: coef + lp1,
            llr: lp1 - lp0,
        });
    });
    Ok(out)
}

/// `(log P_F, log P_M)` of the threshold test at sample size `n`.
pub fn exact_error_probs(pair: &HypothesisPair, n: usize, threshold: f64) -> Result<(f64, f64)> {
    let classes = type_classes(pair, n, DEFAULT_TYPE_CAP)?;
    Ok(error_probs_from_classes(&classes, threshold))
}

fn error_probs_from_classes(classes: &[TypeClass], threshold: f64) -> (f64, f64) {
    let mut false_alarm = Vec::new();
    let mut miss = Vec::new();
    for c in classes {
        if c.llr > threshold {
            false_alarm.push(c.log_p0);
        } else {
            miss.push(c.log_p1);
        }
    }
    (log_sum_exp(&false_alarm).min(0.0), log_sum_exp(&miss).min(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NeymanPearsonResult {
    pub log_pf: f64,
    pub log_pm: f64,
    /// `−log P_F / n`.
    pub exponent: f64,
}

/// Outcome of a constrained search; `Unachievable` is a result, not an error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NeymanPearsonOutcome {
    Achieved(NeymanPearsonResult),
    Unachievable { min_log_pm: f64 },
}

impl NeymanPearsonOutcome {
    pub fn achieved(self) -> Option<NeymanPearsonResult> {
        match self {
            NeymanPearsonOutcome::Achieved(r) => Some(r),
            NeymanPearsonOutcome::Unachievable { .. } => None,
        }
    }
}

/// Smallest `P_F` among deterministic threshold tests with `P_M ≤ beta`.
pub fn neyman_pearson_exponent(pair: &HypothesisPair, n: usize, beta: f64) -> Result<NeymanPearsonOutcome> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::domain(format!("beta = {beta} outside (0,1)")));
    }
    pair.require_full_support()?;
    let mut classes = type_classes(pair, n, DEFAULT_TYPE_CAP)?;
    classes.sort_by(|a, b| a.llr.total_cmp(&b.llr));

    // Merge classes whose ratios agree up to rounding: a deterministic test
    // cannot separate them.
    let mut groups: Vec<(f64, f64, f64)> = Vec::new();
    for c in &classes {
        match groups.last_mut() {
            Some(g) if (c.llr - g.0).abs() <= 1e-9 * (1.0 + g.0.abs()) => {
                g.1 = log_add(g.1, c.log_p0);
                g.2 = log_add(g.2, c.log_p1);
            }
            _ => groups.push((c.llr, c.log_p0, c.log_p1)),
        }
    }

    // Threshold just below group g: groups g.. go to H1.
    // log P_M = log Σ_{j<g} P1_j, log P_F = log Σ_{j≥g} P0_j.
    let k = groups.len();
    let mut suffix_p0 = vec![f64::NEG_INFINITY; k + 1];
    for g in (0..k).rev() {
        suffix_p0[g] = log_add(suffix_p0[g + 1], groups[g].1);
    }
    let log_beta = beta.ln();
    let mut prefix_p1 = f64::NEG_INFINITY;
    let mut best: Option<(f64, f64)> = None;
    for g in 0..=k {
        if prefix_p1 > log_beta {
            break;
        }
        best = Some((suffix_p0[g].min(0.0), prefix_p1.min(0.0)));
        if g < k {
            prefix_p1 = log_add(prefix_p1, groups[g].2);
        }
    }
    Ok(match best {
        Some((log_pf, log_pm)) => NeymanPearsonOutcome::Achieved(NeymanPearsonResult {
            log_pf,
            log_pm,
            exponent: -log_pf / n as f64,
        }),
        None => NeymanPearsonOutcome::Unachievable { min_log_pm: 0.0 },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BayesResult {
    pub log_pf: f64,
    pub log_pm: f64,
    pub log_pe: f64,
    /// `−log P_e / n`.
    pub exponent: f64,
}

/// Minimum-error test for prior `P(H0) = prior`.
pub fn bayes_error_exponent(pair: &HypothesisPair, n: usize, prior: f64) -> Result<BayesResult> {
    if !(prior > 0.0 && prior < 1.0) {
        return Err(Error::domain(format!("prior = {prior} outside (0,1)")));
    }
    pair.require_full_support()?;
    let classes = type_classes(pair, n, DEFAULT_TYPE_CAP)?;
    let threshold = (prior / (1.0 - prior)).ln();
    let (log_pf, log_pm) = error_probs_from_classes(&classes, threshold);
    let log_pe = log_add(prior.ln() + log_pf, (1.0 - prior).ln() + log_pm).min(0.0);
    Ok(BayesResult {
        log_pf,
        log_pm,
        log_pe,
        exponent: -log_pe / n as f64,
    })
}

fn log_add(a: f64, b: f64) -> f64 {
    log_sum_exp(&[a, b])
}

/// One `n` of an exponent sweep. `log_pf`/`log_pm` come from the
/// Neyman–Pearson test; `log_pe` from the Bayes test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentRow {
    pub n: usize,
    pub log_pf: f64,
    pub log_pm: f64,
    pub log_pe: f64,
    pub exp_pf: f64,
    pub exp_pe: f64,
    pub bayes: BayesResult,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentReport {
    pub rows: Vec<ExponentRow>,
    /// `D(p1‖p0)`: the false-alarm exponent when misses are held at `beta`.
    pub target_kl: f64,
    /// `D(p0‖p1)`, the other orientation, reported for reference.
    pub target_kl_reverse: f64,
    pub target_chernoff: f64,
    pub target_bhattacharyya: f64,
    pub beta: f64,
    pub prior: f64,
}

impl ExponentReport {
    pub const CSV_HEADER: &'static str =
        "n,log_pf,log_pm,log_pe,exp_pf,exp_pe,target_kl,target_chernoff,target_bhattacharyya";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.n,
                r.log_pf,
                r.log_pm,
                r.log_pe,
                r.exp_pf,
                r.exp_pe,
                self.target_kl,
                self.target_chernoff,
                self.target_bhattacharyya
            ));
        }
        s
    }
}

/// Runs both tests over `n_grid` (rows evaluated in parallel, sorted by `n`).
pub fn exponent_report(pair: &HypothesisPair, n_grid: &[usize], beta: f64, prior: f64) -> Result<ExponentReport> {
    pair.require_full_support()?;
    let mut rows = n_grid
        .par_iter()
        .map(|&n| -> Result<ExponentRow> {
            let np = neyman_pearson_exponent(pair, n, beta)?
                .achieved()
                .ok_or_else(|| Error::domain(format!("beta = {beta} unachievable at n = {n}")))?;
            let bayes = bayes_error_exponent(pair, n, prior)?;
            Ok(ExponentRow {
                n,
                log_pf: np.log_pf,
                log_pm: np.log_pm,
                log_pe: bayes.log_pe,
                exp_pf: np.exponent,
                exp_pe: bayes.exponent,
                bayes,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| r.n);
    Ok(ExponentReport {
        rows,
        target_kl: info_metrics::kl(&pair.p1, &pair.p0)?,
        target_kl_reverse: info_metrics::kl(&pair.p0, &pair.p1)?,
        target_chernoff: info_metrics::chernoff(&pair.p0, &pair.p1)?.value,
        target_bhattacharyya: info_metrics::bhattacharyya(&pair.p0, &pair.p1)?,
        beta,
        prior,
    })
}

/// Polynomial type-counting slack `m · log(n+1) / n`.
pub fn type_slack(m: usize, n: usize) -> f64 {
    m as f64 * ((n + 1) as f64).ln() / n as f64
}
