use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{make_feature_space, run_search, Archive, FalsifyError, SearchConfig};
use crate::risk_model::RiskModel;
use crate::sim::{
    bind_assignment, evaluate_events, simulate_metrics, EventOutcome, FeatureAssignment, Scenario,
    Verdict,
};
use crate::Real;

/// A search for violations of one event within one situation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub situation: String,
    pub event: String,
    pub search: SearchConfig,
    /// Simulator seeds; with more than one, robustness is averaged over them.
    pub seeds: Vec<u64>,
}

pub type CampaignArchive = Archive<Verdict>;

/// Bind `assignment` into `scenario`, simulate once per seed and judge the
/// situation's events. With several seeds each event's robustness is the
/// mean over seeds and an event triggers when that mean is negative.
pub fn evaluate_assignment(
    model: &RiskModel,
    situation: &str,
    scenario: &Scenario,
    assignment: &FeatureAssignment,
    seeds: &[u64],
) -> Result<Verdict, FalsifyError> {
    if seeds.is_empty() {
        return Err(FalsifyError::NoSeeds);
    }
    let bound = bind_assignment(scenario, model, assignment)?;
    bound.validate()?;
    if let [seed] = seeds {
        return Ok(evaluate_events(&simulate_metrics(&bound, *seed), model, situation)?);
    }
    let mut sums: BTreeMap<String, Real> = BTreeMap::new();
    for &seed in seeds {
        let v = evaluate_events(&simulate_metrics(&bound, seed), model, situation)?;
        for (name, o) in v.per_event {
            *sums.entry(name).or_default() += o.robustness;
        }
    }
    let per_event = sums
        .into_iter()
        .map(|(name, s)| {
            let r = s / seeds.len() as Real;
            (
                name,
                EventOutcome {
                    triggered: r < 0.0,
                    robustness: r,
                },
            )
        })
        .collect();
    Ok(Verdict::from_outcomes(model, per_event)?)
}

/// Search the situation's feature space for assignments violating the
/// campaign's event.
pub fn run_campaign(
    model: &RiskModel,
    scenario: &Scenario,
    campaign: &Campaign,
) -> Result<CampaignArchive, FalsifyError> {
    let space = make_feature_space(model, &campaign.situation)?;
    let sit = model
        .situation(&campaign.situation)
        .ok_or_else(|| FalsifyError::UnknownSituation(campaign.situation.clone()))?;
    if model.event(&campaign.event).is_none() {
        return Err(FalsifyError::UnknownEvent(campaign.event.clone()));
    }
    if !sit.exposes.contains(&campaign.event) {
        return Err(FalsifyError::NotExposed {
            event: campaign.event.clone(),
            situation: campaign.situation.clone(),
        });
    }
    campaign.search.validate()?;
    if campaign.seeds.is_empty() {
        return Err(FalsifyError::NoSeeds);
    }
    scenario.validate()?;
    run_search(&space, &campaign.search, |a| {
        let v = evaluate_assignment(model, &campaign.situation, scenario, a, &campaign.seeds)?;
        let r = v.per_event[&campaign.event].robustness;
        Ok((r, v))
    })
}
