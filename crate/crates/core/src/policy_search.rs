//! Per-iteration choice among acquisition functions by rolling each one out
//! from its own maximizer.

use serde::{Deserialize, Serialize};

use crate::acquisition::{acq_argmax, AcquisitionKind, Incumbent};
use crate::error::{Error, Result};
use crate::gp::GpPosterior;
use crate::rollout::{rollout_acquisition, RolloutConfig, RolloutEstimate};
use crate::vr::ZMatrix;

/// Local-ascent restarts used for every closed-form acquisition maximization.
pub const ARGMAX_RESTARTS: usize = 5;

/// Ordered candidate set; the order breaks ties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySet {
    pub members: Vec<AcquisitionKind>,
}

impl PolicySet {
    pub fn new(members: Vec<AcquisitionKind>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::invalid("policy set must not be empty"));
        }
        for m in &members {
            m.validate()?;
        }
        Ok(PolicySet { members })
    }

    /// EI, KG and UCB with kappa in {0, 1, 2, 4, 8}.
    pub fn standard(dim: usize) -> Self {
        let mut members = vec![AcquisitionKind::Ei, AcquisitionKind::kg_default(dim)];
        members.extend([0.0, 1.0, 2.0, 4.0, 8.0].map(AcquisitionKind::Ucb));
        PolicySet { members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyChoice {
    pub chosen_index: usize,
    pub chosen: AcquisitionKind,
    pub x_next: Vec<f64>,
    /// Rollout score per member; `None` if the member's maximization failed.
    pub scores: Vec<Option<RolloutEstimate>>,
    pub argmaxes: Vec<Option<Vec<f64>>>,
}

impl PolicyChoice {
    pub fn excluded(&self) -> impl Iterator<Item = usize> + '_ {
        self.scores.iter().enumerate().filter(|(_, s)| s.is_none()).map(|(i, _)| i)
    }
}

/// Scores every member by the rollout of itself from its own maximizer, all on
/// the same variates, and picks the highest mean.
///
/// `argmax_seed` seeds the members' maximizations, so a singleton `{EI}` set at
/// horizon one proposes exactly the point plain EI would.
pub fn select_policy(
    post: &GpPosterior,
    set: &PolicySet,
    cfg: &RolloutConfig,
    zmat: &ZMatrix,
    argmax_seed: u64,
) -> Result<PolicyChoice> {
    if set.is_empty() {
        return Err(Error::invalid("policy set must not be empty"));
    }
    let inc = Incumbent::of(post);
    let mut scores = Vec::with_capacity(set.len());
    let mut argmaxes = Vec::with_capacity(set.len());
    let mut best: Option<(usize, f64)> = None;
    for (i, member) in set.members.iter().enumerate() {
        let x = match acq_argmax(member, post, inc, &cfg.bounds, ARGMAX_RESTARTS, argmax_seed) {
            Ok(r) => r.x_best,
            Err(Error::NumericalFailure(_) | Error::InvalidFunction(_)) => {
                scores.push(None);
                argmaxes.push(None);
                continue;
            }
            Err(e) => return Err(e),
        };
        let member_cfg = RolloutConfig {
            base_policy: *member,
            ..cfg.clone()
        };
        let est = rollout_acquisition(post, &x, &member_cfg, zmat)?;
        if best.is_none_or(|(_, m)| est.mean > m) {
            best = Some((i, est.mean));
        }
        scores.push(Some(est));
        argmaxes.push(Some(x));
    }
    let (chosen_index, _) =
        best.ok_or_else(|| Error::numerical("every policy failed to produce a maximizer"))?;
    Ok(PolicyChoice {
        chosen_index,
        chosen: set.members[chosen_index],
        x_next: argmaxes[chosen_index].clone().expect("chosen member has a maximizer"),
        scores,
        argmaxes,
    })
}

/// Fraction of replications choosing each member at each iteration, smoothed
/// by a centered box filter of width `window` (truncated at the ends).
///
/// `choices[r][t]` is the member index chosen by replication `r` at iteration
/// `t`. Rows of the result sum to one.
pub fn usage_histogram(choices: &[Vec<usize>], members: usize, window: usize) -> Result<Vec<Vec<f64>>> {
    if choices.is_empty() || members == 0 {
        return Err(Error::invalid("usage histogram needs choices and members"));
    }
    let iters = choices.iter().map(Vec::len).max().unwrap_or(0);
    let mut raw = vec![vec![0.0; members]; iters];
    for run in choices {
        for (t, &c) in run.iter().enumerate() {
            if c >= members {
                return Err(Error::invalid(format!("choice {c} out of range")));
            }
            raw[t][c] += 1.0;
        }
    }
    for row in &mut raw {
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= total);
    }
    let window = window.max(1);
    let (left, right) = ((window - 1) / 2, window / 2);
    Ok((0..iters)
        .map(|t| {
            let lo = t.saturating_sub(left);
            let hi = (t + right).min(iters - 1);
            let width = (hi - lo + 1) as f64;
            (0..members)
                .map(|m| raw[lo..=hi].iter().map(|r| r[m]).sum::<f64>() / width)
                .collect()
        })
        .collect())
}
