//! Gold answers, the exact-answer reward, and the recovery expert.

use super::generate::number_tokens;
use super::spec::*;
use crate::policy::vocab::{TokenId, EOS, RESET};

/// Gold derivation (without EOS) and final answer for a prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub kind: TaskKind,
    pub derivation: Vec<TokenId>,
    pub answer: Vec<TokenId>,
}

fn is_letter(t: TokenId) -> bool {
    (LETTER0..LETTER0 + LETTERS).contains(&t)
}

fn is_digit(t: TokenId) -> bool {
    (DIGIT0..DIGIT0 + 10).contains(&t)
}

/// Parses a prompt and computes its gold completion. `None` for prompts that
/// are not in any task's format.
pub fn solve(prompt: &[TokenId]) -> Option<Solution> {
    let (&tag, body) = prompt.split_first()?;
    let kind = TaskKind::from_tag(tag)?;
    match kind {
        TaskKind::ChainArith => {
            let (&last, ops) = body.split_last()?;
            if last != EQUALS || ops.len() < 3 || ops.len() % 2 == 0 {
                return None;
            }
            let mut operands = Vec::new();
            for (i, &t) in ops.iter().enumerate() {
                if i % 2 == 0 {
                    if !is_digit(t) {
                        return None;
                    }
                    operands.push(t - DIGIT0);
                } else if t != PLUS {
                    return None;
                }
            }
            let mut derivation = Vec::new();
            let mut running = operands[0];
            for &d in &operands[1..] {
                derivation.extend(number_tokens(running));
                derivation.push(PLUS);
                derivation.extend(number_tokens(d));
                derivation.push(EQUALS);
                running += d;
                derivation.extend(number_tokens(running));
                derivation.push(STEP_END);
            }
            let answer = number_tokens(running);
            derivation.push(MARKER);
            derivation.extend(&answer);
            Some(Solution {
                kind,
                derivation,
                answer,
            })
        }
        TaskKind::Copy | TaskKind::Reverse | TaskKind::Count => {
            let (&last, letters) = body.split_last()?;
            if last != ARROW || letters.is_empty() || !letters.iter().all(|&t| is_letter(t)) {
                return None;
            }
            let answer = match kind {
                TaskKind::Copy => letters.to_vec(),
                TaskKind::Reverse => letters.iter().rev().copied().collect(),
                _ => number_tokens(letters.len()),
            };
            Some(Solution {
                kind,
                derivation: answer.clone(),
                answer,
            })
        }
    }
}

/// The part of a completion the verifier reads: everything before the first
/// EOS, and after the last RESET within that.
pub fn effective_completion(completion: &[TokenId]) -> &[TokenId] {
    let end = completion.iter().position(|&t| t == EOS).unwrap_or(completion.len());
    let body = &completion[..end];
    match body.iter().rposition(|&t| t == RESET) {
        Some(r) => &body[r + 1..],
        None => body,
    }
}

/// Exact-answer reward in {0, 1}. Total: malformed prompts or completions
/// score 0.
pub fn verify_answer(prompt: &[TokenId], completion: &[TokenId]) -> f64 {
    let Some(sol) = solve(prompt) else {
        return 0.0;
    };
    let body = effective_completion(completion);
    let ok = match sol.kind {
        TaskKind::ChainArith => match body.iter().rposition(|&t| t == MARKER) {
            Some(m) => body[m + 1..] == sol.answer[..],
            None => false,
        },
        _ => body == &sol.answer[..],
    };
    if ok {
        1.0
    } else {
        0.0
    }
}

/// Recovery oracle. From a prefix that is still on the gold derivation it
/// returns the gold remainder; from anywhere else it returns RESET followed
/// by the whole gold derivation. Always EOS-terminated. Only the prefix after
/// its last RESET is considered.
pub fn expert_continuation(prompt: &[TokenId], prefix: &[TokenId]) -> Vec<TokenId> {
    let Some(sol) = solve(prompt) else {
        return vec![EOS];
    };
    let mut gold = sol.derivation;
    gold.push(EOS);
    let effective = match prefix.iter().rposition(|&t| t == RESET) {
        Some(r) => &prefix[r + 1..],
        None => prefix,
    };
    if effective.len() < gold.len() && gold.starts_with(effective) {
        gold[effective.len()..].to_vec()
    } else {
        let mut out = Vec::with_capacity(gold.len() + 1);
        out.push(RESET);
        out.extend(gold);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn enc(s: &str) -> Vec<TokenId> {
        vocab().encode(s).unwrap()
    }

    #[test]
    fn chain_arith_gold() {
        let sol = solve(&enc("A3+5+2=")).unwrap();
        assert_eq!(vocab().decode(&sol.derivation), "3+5=8;8+2=10;#10");
        assert_eq!(sol.answer, enc("10"));
    }

    #[test]
    fn malformed_prompts_score_zero() {
        assert_eq!(verify_answer(&enc("A3+="), &enc("#3")), 0.0);
        assert_eq!(verify_answer(&enc("Cab"), &enc("ab")), 0.0);
        assert_eq!(verify_answer(&[], &enc("ab")), 0.0);
        assert_eq!(verify_answer(&[PLUS, 7], &[]), 0.0);
    }

    #[test]
    fn count_answer_is_length() {
        assert_eq!(verify_answer(&enc("Nabcab→"), &enc("5<eos>")), 1.0);
        assert_eq!(verify_answer(&enc("Nabcab→"), &enc("4<eos>")), 0.0);
    }

    #[test]
    fn reset_discards_earlier_text() {
        assert_eq!(verify_answer(&enc("Rabc→"), &enc("ab<reset>cba<eos>")), 1.0);
        assert_eq!(verify_answer(&enc("Rabc→"), &enc("cba<reset>k")), 0.0);
    }

    #[test]
    fn text_after_eos_is_ignored() {
        assert_eq!(verify_answer(&enc("Cabc→"), &enc("abc<eos>kkk")), 1.0);
    }
}
