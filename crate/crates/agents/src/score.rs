use crate::error::AgentError;
use crate::reply::AgentReply;

/// Log-probability gap assumed when only one of yes/no appears among the
/// alternatives: 4.6 ≈ ln(100), i.e. odds of about 100:1.
pub const DEFAULT_ONE_SIDED_DELTA: f64 = 4.6;

/// A verifier presence probability, flagged when it had to be derived from a
/// one-sided reply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YesNoScore {
    pub probability: f64,
    pub degraded: bool,
}

/// Two-way softmax, exactly antisymmetric: softmax2(a, b) + softmax2(b, a)
/// always sums to 1.0 in floating point.
fn softmax2(x: f64, y: f64) -> f64 {
    if x == y {
        0.5
    } else if x < y {
        1.0 / (1.0 + (y - x).exp())
    } else {
        1.0 - softmax2(y, x)
    }
}

fn best_matching(reply: &AgentReply, word: &str) -> Option<f64> {
    reply
        .first_token_alternatives
        .iter()
        .filter(|alt| alt.token.trim().eq_ignore_ascii_case(word))
        .map(|alt| alt.logprob)
        .max_by(f64::total_cmp)
}

/// Converts first-token alternatives into a yes-probability.
///
/// Matching is on the trimmed, case-folded token surface. When only one of
/// the two answers is present, the missing one is assumed `delta` below it
/// and the result is flagged as degraded.
pub fn score_yes_no(reply: &AgentReply) -> Result<YesNoScore, AgentError> {
    score_yes_no_with(reply, DEFAULT_ONE_SIDED_DELTA)
}

pub fn score_yes_no_with(reply: &AgentReply, delta: f64) -> Result<YesNoScore, AgentError> {
    let yes = best_matching(reply, "yes");
    let no = best_matching(reply, "no");
    match (yes, no) {
        (Some(y), Some(n)) => Ok(YesNoScore {
            probability: softmax2(y, n),
            degraded: false,
        }),
        (Some(y), None) => Ok(YesNoScore {
            probability: softmax2(y, y - delta),
            degraded: true,
        }),
        (None, Some(n)) => Ok(YesNoScore {
            probability: softmax2(n - delta, n),
            degraded: true,
        }),
        (None, None) => Err(AgentError::VerifierUnusable),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reply(alts: Vec<(&str, f64)>) -> AgentReply {
        AgentReply::with_alternatives("Yes", alts)
    }

    #[test]
    fn equal_logprobs_give_half() {
        let r = reply(vec![("Yes", -0.1), ("No", -0.1)]);
        assert_eq!(score_yes_no(&r).unwrap().probability, 0.5);
    }

    #[test]
    fn two_vs_zero_matches_the_softmax() {
        let r = reply(vec![("Yes", 2.0), ("No", 0.0)]);
        let expected = (2.0_f64).exp() / ((2.0_f64).exp() + 1.0);
        let got = score_yes_no(&r).unwrap();
        assert!((got.probability - expected).abs() < 1e-12);
        assert!((got.probability - 0.8808).abs() < 1e-4);
        assert!(!got.degraded);
    }

    #[test]
    fn surface_matching_trims_and_folds_case() {
        let r = reply(vec![(" Yes", -0.2), ("NO", -1.5), ("maybe", -3.0)]);
        let score = score_yes_no(&r).unwrap();
        assert!(score.probability > 0.5);
        assert!(!score.degraded);
    }

    #[test]
    fn best_scoring_duplicate_wins() {
        let r = reply(vec![("Yes", -4.0), ("yes", -0.5), ("No", -1.0)]);
        let score = score_yes_no(&r).unwrap();
        assert_eq!(score.probability, softmax2(-0.5, -1.0));
    }

    #[test]
    fn one_sided_reply_is_degraded() {
        let r = reply(vec![("Yes", -0.05), ("the", -4.0)]);
        let score = score_yes_no(&r).unwrap();
        assert!(score.degraded);
        // missing "no" assumed delta below: p = 1 - 1/(1 + e^delta) ≈ 0.99
        let expected = 1.0 - 1.0 / (1.0 + DEFAULT_ONE_SIDED_DELTA.exp());
        assert_eq!(score.probability, expected);

        let r = reply(vec![("No", -0.05)]);
        let score = score_yes_no(&r).unwrap();
        assert!(score.degraded);
        assert!(score.probability < 0.02);
    }

    #[test]
    fn punctuation_only_alternatives_are_unusable() {
        let r = reply(vec![(".", -0.1), (",", -0.5)]);
        assert_eq!(score_yes_no(&r), Err(AgentError::VerifierUnusable));
    }

    #[test]
    fn swapped_scores_sum_to_exactly_one() {
        let pairs = [
            (0.0, 0.0),
            (2.0, 0.0),
            (-0.1, -7.3),
            (123.456, -90.0),
            (-1e9, 0.0),
            (1e-12, 0.0),
            (0.3333333333333333, 0.6666666666666666),
        ];
        for (a, b) in pairs {
            let forward = score_yes_no(&reply(vec![("Yes", a), ("No", b)])).unwrap();
            let swapped = score_yes_no(&reply(vec![("Yes", b), ("No", a)])).unwrap();
            assert_eq!(forward.probability + swapped.probability, 1.0, "a={a} b={b}");
        }
    }
}
