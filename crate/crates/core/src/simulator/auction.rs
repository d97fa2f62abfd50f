//! Replay of a logged session through a ranking + generalized second price auction.
//!
//! The causal graph per session:
//! 1. score every candidate as `bid^w_b * quality^w_q` (`w_b = a[0]`, `w_q = a[1]`),
//! 2. rank by score descending, ties to the lower candidate index,
//! 3. show the top `ceil(L)` ads, `L = 1 + 4 * sigmoid(a[2])` (or 3 when `m < 3`),
//! 4. price each shown ad at `bid_next * score_next / score_self`, capped at its own bid,
//!    where "next" is the runner-up in the full ranking; no runner-up means reserve 0,
//! 5. click probabilities from the response model with positional decay.

use serde::{Deserialize, Serialize};

use crate::domain::{KpiVector, Session, Setting};
use crate::error::{Error, Result};

use super::Simulator;

/// Fixed parametric click model: `sigmoid(w . [base_logit, quality, position]) * decay^position`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserResponseModel {
    pub click_weights: [f64; 3],
    pub position_decay: f64,
}

impl Default for UserResponseModel {
    fn default() -> Self {
        Self {
            click_weights: [1.0, 2.0, -0.25],
            position_decay: 0.8,
        }
    }
}

impl UserResponseModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.position_decay > 0.0 && self.position_decay <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "position_decay {} outside (0, 1]",
                self.position_decay
            )));
        }
        if self.click_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("click_weights".into()));
        }
        Ok(())
    }

    pub fn click_prob(&self, base_logit: f64, quality: f64, position: usize) -> f64 {
        let [w0, w1, w2] = self.click_weights;
        let logit = w0 * base_logit + w1 * quality + w2 * position as f64;
        sigmoid(logit) * self.position_decay.powi(position as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShownAd {
    pub candidate: usize,
    pub price_charged: f64,
    pub click_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualSession {
    pub session_id: u64,
    pub shown_ads: Vec<ShownAd>,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Number of ad slots for a setting.
pub fn ad_load(setting: &[f64]) -> f64 {
    match setting.get(2) {
        Some(&x) => 1.0 + 4.0 * sigmoid(x),
        None => 3.0,
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuctionSimulator {
    #[serde(default)]
    pub model: UserResponseModel,
}

impl AuctionSimulator {
    pub fn new(model: UserResponseModel) -> Result<Self> {
        model.validate()?;
        Ok(Self { model })
    }

    pub fn replay(&self, session: &Session, setting: &Setting) -> Result<CounterfactualSession> {
        let a = setting.values();
        if a.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: 0,
            });
        }
        let w_b = a[0];
        let w_q = a.get(1).copied().unwrap_or(1.0);

        let scores: Vec<f64> = session
            .candidates
            .iter()
            .map(|c| c.bid.powf(w_b) * c.quality.powf(w_q))
            .collect();
        if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::NonFinite(format!(
                "ranking score {s} in session {}",
                session.session_id
            )));
        }

        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));

        let n_show = (ad_load(a).ceil() as usize).min(order.len());
        let shown_ads = order[..n_show]
            .iter()
            .enumerate()
            .map(|(pos, &idx)| {
                let ad = &session.candidates[idx];
                let price_charged = match order.get(pos + 1) {
                    Some(&next) if scores[idx] > 0.0 => {
                        let runner = &session.candidates[next];
                        (runner.bid * (scores[next] / scores[idx])).min(ad.bid)
                    }
                    _ => 0.0,
                };
                ShownAd {
                    candidate: idx,
                    price_charged,
                    click_prob: self.model.click_prob(ad.base_click_logit, ad.quality, pos),
                }
            })
            .collect();

        Ok(CounterfactualSession {
            session_id: session.session_id,
            shown_ads,
        })
    }
}

/// KPIs of one replayed session; pay-per-click revenue.
pub fn session_kpis(cf: &CounterfactualSession) -> KpiVector {
    let iy = 1000.0 * cf.shown_ads.len() as f64;
    let clicks = 1000.0 * cf.shown_ads.iter().map(|a| a.click_prob).sum::<f64>();
    let revenue = 1000.0
        * cf.shown_ads
            .iter()
            .map(|a| a.price_charged * a.click_prob)
            .sum::<f64>();
    let rpm = if iy == 0.0 {
        0.0
    } else {
        1000.0 * revenue / iy
    };
    KpiVector {
        rpm,
        clicks,
        iy,
        revenue,
        n_sessions: 1,
    }
}

impl Simulator for AuctionSimulator {
    fn session_kpis(&self, session: &Session, setting: &Setting) -> Result<KpiVector> {
        Ok(session_kpis(&self.replay(session, setting)?))
    }
}
