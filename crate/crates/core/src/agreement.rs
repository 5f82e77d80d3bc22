//! Rank agreement between scores of paired model populations: does the
//! ordering measured at small scale survive at large scale?

use alloc::string::String;
use alloc::vec::Vec;

use crate::{correlation, Error};

/// Scores for the same labeled groups at two scales. Construction enforces
/// equal lengths (>= 2) and unique labels.
#[derive(Debug, Clone)]
pub struct PairedScores {
    labels: Vec<String>,
    small: Vec<f64>,
    large: Vec<f64>,
}

impl PairedScores {
    pub fn new(labels: Vec<String>, small: Vec<f64>, large: Vec<f64>) -> Result<Self, Error> {
        if labels.len() != small.len() {
            return Err(Error::LengthMismatch { left: labels.len(), right: small.len() });
        }
        if small.len() != large.len() {
            return Err(Error::LengthMismatch { left: small.len(), right: large.len() });
        }
        if labels.len() < 2 {
            return Err(Error::TooFewValues { needed: 2, got: labels.len() });
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        Ok(PairedScores { labels, small, large })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn small(&self) -> &[f64] {
        &self.small
    }

    pub fn large(&self) -> &[f64] {
        &self.large
    }
}

/// What to do with pairs tied on either side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TiePolicy {
    /// Refuse to produce a number.
    Error,
    /// Count each tied pair as half concordant.
    #[default]
    HalfCredit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    pub concordant: u64,
    pub discordant: u64,
    /// Pairs tied on the small side, the large side, or both.
    pub tied: u64,
}

impl PairCounts {
    pub fn total(&self) -> u64 {
        self.concordant + self.discordant + self.tied
    }
}

pub fn count_pairs(scores: &PairedScores) -> PairCounts {
    let small = scores.small();
    let large = scores.large();
    let mut counts = PairCounts { concordant: 0, discordant: 0, tied: 0 };
    for i in 0..small.len() {
        for j in i + 1..small.len() {
            let ds = small[i] - small[j];
            let dl = large[i] - large[j];
            if ds == 0.0 || dl == 0.0 {
                counts.tied += 1;
            } else if (ds > 0.0) == (dl > 0.0) {
                counts.concordant += 1;
            } else {
                counts.discordant += 1;
            }
        }
    }
    counts
}

fn tau_from_counts(counts: PairCounts) -> f64 {
    (counts.concordant as f64 - counts.discordant as f64) / counts.total() as f64
}

/// Fraction of model pairs whose score difference has the same sign at both
/// scales. Evaluated as (tau + 1) / 2 from the integer pair counts, so the
/// identity with `kendall_tau` is bit-exact on tie-free input; under
/// `HalfCredit` each tied pair contributes 0.5, which is the same formula
/// with ties counting zero into tau.
pub fn decision_accuracy(scores: &PairedScores, ties: TiePolicy) -> Result<f64, Error> {
    let counts = count_pairs(scores);
    if counts.tied > 0 && ties == TiePolicy::Error {
        return Err(Error::TiesPresent { count: counts.tied });
    }
    Ok((tau_from_counts(counts) + 1.0) / 2.0)
}

/// (concordant - discordant) / total pairs. Errors when any pair is tied;
/// use `agreement_report` for the tie-tolerant variant.
pub fn kendall_tau(scores: &PairedScores) -> Result<f64, Error> {
    let counts = count_pairs(scores);
    if counts.tied > 0 {
        return Err(Error::TiesPresent { count: counts.tied });
    }
    Ok(tau_from_counts(counts))
}

/// Pearson correlation of average ranks. Tie-free input reduces exactly to
/// 1 - 6*sum(d^2) / (n(n^2-1)); a side whose ranks have zero variance
/// (all values equal) returns 0.0.
pub fn spearman_rho(scores: &PairedScores) -> Result<f64, Error> {
    let rs = average_ranks(scores.small());
    let rl = average_ranks(scores.large());
    match correlation::pearson_r_unchecked(&rs, &rl) {
        Some(r) => Ok(r),
        None => Ok(0.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport {
    pub decision_accuracy: f64,
    /// Ties count zero into the numerator here, unlike `kendall_tau` which
    /// refuses tied input outright.
    pub kendall_tau: f64,
    pub spearman_rho: f64,
    pub n_pairs: u64,
    pub tie_count: u64,
}

pub fn agreement_report(scores: &PairedScores, ties: TiePolicy) -> Result<AgreementReport, Error> {
    let counts = count_pairs(scores);
    if counts.tied > 0 && ties == TiePolicy::Error {
        return Err(Error::TiesPresent { count: counts.tied });
    }
    let tau = tau_from_counts(counts);
    Ok(AgreementReport {
        decision_accuracy: (tau + 1.0) / 2.0,
        kendall_tau: tau,
        spearman_rho: spearman_rho(scores)?,
        n_pairs: counts.total(),
        tie_count: counts.tied,
    })
}

/// 1-based ranks; runs of equal values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) share rank mean((i+1)..=(j+1)).
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn pairs(small: &[f64], large: &[f64]) -> PairedScores {
        let labels = (0..small.len()).map(|i| i.to_string()).collect();
        PairedScores::new(labels, small.to_vec(), large.to_vec()).unwrap()
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(matches!(
            PairedScores::new(alloc::vec!["a".into()], alloc::vec![1.0], alloc::vec![1.0]),
            Err(Error::TooFewValues { .. })
        ));
        assert!(matches!(
            PairedScores::new(
                alloc::vec!["a".into(), "b".into()],
                alloc::vec![1.0],
                alloc::vec![1.0, 2.0]
            ),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            PairedScores::new(
                alloc::vec!["a".into(), "a".into()],
                alloc::vec![1.0, 2.0],
                alloc::vec![1.0, 2.0]
            ),
            Err(Error::DuplicateLabel(_))
        ));
    }

    #[test]
    fn one_swapped_pair_of_three() {
        let p = pairs(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]);
        let da = decision_accuracy(&p, TiePolicy::Error).unwrap();
        assert!((da - 2.0 / 3.0).abs() < 1e-15);
        let tau = kendall_tau(&p).unwrap();
        assert!((tau - 1.0 / 3.0).abs() < 1e-15);
        let rho = spearman_rho(&p).unwrap();
        assert!((rho - 0.5).abs() < 1e-12);
    }

    #[test]
    fn identical_order_scores_one() {
        let p = pairs(&[0.1, 0.4, 0.2, 0.9], &[1.0, 4.0, 2.0, 9.0]);
        assert_eq!(decision_accuracy(&p, TiePolicy::Error).unwrap(), 1.0);
        assert_eq!(kendall_tau(&p).unwrap(), 1.0);
        assert!((spearman_rho(&p).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reversed_order_scores_zero() {
        let p = pairs(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]);
        assert_eq!(decision_accuracy(&p, TiePolicy::Error).unwrap(), 0.0);
        assert_eq!(kendall_tau(&p).unwrap(), -1.0);
        assert!((spearman_rho(&p).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn tie_policy_controls_tied_pairs() {
        let p = pairs(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0]);
        assert_eq!(
            decision_accuracy(&p, TiePolicy::Error),
            Err(Error::TiesPresent { count: 1 })
        );
        assert_eq!(kendall_tau(&p), Err(Error::TiesPresent { count: 1 }));
        // 2 concordant + half credit for 1 tie out of 3 pairs.
        let da = decision_accuracy(&p, TiePolicy::HalfCredit).unwrap();
        assert!((da - 2.5 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn report_is_consistent() {
        let p = pairs(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0]);
        let rep = agreement_report(&p, TiePolicy::Error).unwrap();
        assert_eq!(rep.n_pairs, 6);
        assert_eq!(rep.tie_count, 0);
        assert_eq!(rep.decision_accuracy, (rep.kendall_tau + 1.0) / 2.0);
        // 4 of 6 pairs concordant.
        assert!((rep.decision_accuracy - 4.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn spearman_handles_ties_and_constants() {
        // Average ranks on the tied side: [1.5, 1.5, 3].
        let p = pairs(&[5.0, 5.0, 7.0], &[1.0, 2.0, 3.0]);
        let rho = spearman_rho(&p).unwrap();
        assert!(rho > 0.8 && rho < 0.9, "rho {rho}");
        let constant = pairs(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]);
        assert_eq!(spearman_rho(&constant).unwrap(), 0.0);
    }

    #[test]
    fn spearman_matches_closed_form_without_ties() {
        let p = pairs(&[0.3, 0.9, 0.1, 0.5, 0.7], &[2.0, 1.0, 5.0, 9.0, 4.0]);
        let rho = spearman_rho(&p).unwrap();
        let rs = average_ranks(p.small());
        let rl = average_ranks(p.large());
        let n = rs.len() as f64;
        let d2: f64 = rs.iter().zip(&rl).map(|(a, b)| (a - b) * (a - b)).sum();
        let closed = 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
        assert!((rho - closed).abs() < 1e-12);
    }

    #[test]
    fn n_two_is_plus_or_minus_one() {
        let up = pairs(&[1.0, 2.0], &[5.0, 9.0]);
        assert!((spearman_rho(&up).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(decision_accuracy(&up, TiePolicy::Error).unwrap(), 1.0);
        let down = pairs(&[1.0, 2.0], &[9.0, 5.0]);
        assert!((spearman_rho(&down).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(decision_accuracy(&down, TiePolicy::Error).unwrap(), 0.0);
    }

    #[test]
    fn average_ranks_on_runs() {
        let r = average_ranks(&[3.0, 1.0, 3.0, 2.0]);
        assert_eq!(r, [3.5, 1.0, 3.5, 2.0]);
    }
}
