//! Assurance cases derived from a risk model: for every situation and every
//! goal put at risk there, the goal claim is argued from the acceptability of
//! each negative event that threatens it.

use serde::{Deserialize, Serialize};

use super::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceStatus {
    Pending,
    Supported,
    Refuted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub id: String,
    pub text: String,
    /// Event the claim is about, for sub-claims.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub event: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub children: Vec<Claim>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceSlot {
    pub claim: String,
    pub event: String,
    pub status: EvidenceStatus,
    /// Campaign whose archive supports or refutes the claim.
    pub campaign: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssuranceCase {
    pub id: String,
    pub goal: String,
    pub situation: String,
    pub strategy: String,
    pub top_claim: Claim,
    pub evidence: Vec<EvidenceSlot>,
}

impl AssuranceCase {
    pub fn sub_claims(&self) -> &[Claim] {
        &self.top_claim.children
    }
}

/// One case per (situation, goal) pair where some event exposed by the
/// situation is negative and impacts the goal with a minus sign.
pub fn derive_assurance_cases(model: &RiskModel) -> Vec<AssuranceCase> {
    let mut cases = Vec::new();
    for sit in &model.situations {
        let threats: Vec<&Event> = sit
            .exposes
            .iter()
            .filter_map(|e| model.event(e))
            .filter(|e| e.polarity == Polarity::Negative)
            .collect();
        for goal in &model.goals {
            let against: Vec<&Event> = threats
                .iter()
                .copied()
                .filter(|e| {
                    e.impacts
                        .iter()
                        .any(|i| i.goal == goal.name && i.sign == Sign::Minus)
                })
                .collect();
            if against.is_empty() {
                continue;
            }
            let id = format!("{}/{}", sit.name, goal.name);
            let children: Vec<Claim> = against
                .iter()
                .enumerate()
                .map(|(k, e)| Claim {
                    id: format!("{id}/C{}", k + 1),
                    text: format!(
                        "risk of event {} is acceptable in situation {}",
                        e.name, sit.name
                    ),
                    event: Some(e.name.clone()),
                    children: Vec::new(),
                })
                .collect();
            let evidence = children
                .iter()
                .map(|c| EvidenceSlot {
                    claim: c.id.clone(),
                    event: c.event.clone().unwrap_or_default(),
                    status: EvidenceStatus::Pending,
                    campaign: None,
                })
                .collect();
            cases.push(AssuranceCase {
                id: id.clone(),
                goal: goal.name.clone(),
                situation: sit.name.clone(),
                strategy: format!(
                    "argue over each negative event exposed by {} that impacts {}, \
                     using closed-loop simulation campaigns over its domain features",
                    sit.name, goal.name
                ),
                top_claim: Claim {
                    id: format!("{id}/G"),
                    text: format!("goal {} holds in situation {}", goal.name, sit.name),
                    event: None,
                    children,
                },
                evidence,
            });
        }
    }
    cases
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_model_has_one_case_with_two_sub_claims() {
        let cases = derive_assurance_cases(&RiskModel::default_model());
        assert_eq!(cases.len(), 1);
        let c = &cases[0];
        assert_eq!(c.sub_claims().len(), 2);
        assert!(c.top_claim.text.contains("holds in situation"));
        assert!(c
            .evidence
            .iter()
            .all(|e| e.status == EvidenceStatus::Pending && e.campaign.is_none()));
    }

    #[test]
    fn positive_only_model_has_no_cases() {
        let m = parse_risk_model(
            r#"
            actor a
            goal g owner a "g"
            feature f continuous [0, 1] m binds belt.speed
            event good positive when min_distance > 0.1 impacts +g
            situation s "s" scenario "x" exposes good features f
            "#,
        )
        .unwrap();
        assert!(derive_assurance_cases(&m).is_empty());
    }

    #[test]
    fn one_case_per_situation_goal_pair() {
        let m = parse_risk_model(
            r#"
            actor a
            goal g owner a "g"
            feature f continuous [0, 1] m binds belt.speed
            event bad negative when min_margin < 0 impacts -g
            situation s1 "one" scenario "x" exposes bad features f
            situation s2 "two" scenario "x" exposes bad features f
            "#,
        )
        .unwrap();
        let cases = derive_assurance_cases(&m);
        assert_eq!(cases.len(), 2);
        assert_eq!(cases, derive_assurance_cases(&m));
    }

    #[test]
    fn json_shape() {
        let cases = derive_assurance_cases(&RiskModel::default_model());
        let v = serde_json::to_value(&cases).unwrap();
        let claim = &v[0]["top_claim"];
        assert_eq!(claim["children"].as_array().unwrap().len(), 2);
        assert_eq!(v[0]["evidence"][0]["status"], "pending");
    }
}
