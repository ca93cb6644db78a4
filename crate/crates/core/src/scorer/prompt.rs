use super::ScoreError;

/// Formats the yes/no entailment question put to the backend model.
///
/// The template is applied verbatim: the hypothesis is wrapped in single
/// quotes with no escaping.
pub fn build_prompt(premise: &str, hypothesis: &str) -> Result<String, ScoreError> {
    if premise.is_empty() {
        return Err(ScoreError::EmptyInput("premise"));
    }
    if hypothesis.is_empty() {
        return Err(ScoreError::EmptyInput("hypothesis"));
    }
    Ok(format!(
        "{premise} Question: does this imply '{hypothesis}'? Yes or no?"
    ))
}

/// Probability of "Yes" from the softmax over the ("Yes", "No") logit pair.
///
/// Evaluated as `1 / (1 + exp(-(yes - no)))` on the side of the logistic
/// that cannot overflow.
pub fn entail_prob(logit_yes: f64, logit_no: f64) -> Result<f64, ScoreError> {
    if !logit_yes.is_finite() || !logit_no.is_finite() {
        return Err(ScoreError::NonFinite { logit_yes, logit_no });
    }
    let d = logit_yes - logit_no;
    if !d.is_finite() {
        // Both finite but the difference overflowed.
        return Ok(if d > 0.0 { 1.0 } else { 0.0 });
    }
    Ok(if d >= 0.0 {
        1.0 / (1.0 + (-d).exp())
    } else {
        let e = d.exp();
        e / (1.0 + e)
    })
}
