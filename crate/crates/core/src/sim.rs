//! Monte-Carlo simulation of single agents and of whole information flows.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::histogram::Histogram;
use crate::model::ModelParams;
use crate::par::{self, Execution};
use crate::rng::{stream_rng, BIRTH_STREAM};

pub const DEFAULT_MAX_AGENTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    /// 1-based step index within the agent's life.
    pub t: u32,
    pub delta: i64,
    pub energy_after: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub initial_energy: u64,
    pub steps: Vec<Step>,
    pub absorbed: bool,
}

impl Trajectory {
    /// Energies rebuilt from the initial energy and the recorded deltas.
    pub fn replay_energies(&self) -> Vec<i64> {
        self.steps
            .iter()
            .scan(self.initial_energy as i64, |e, s| {
                *e += s.delta;
                Some(*e)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AgentOutcome {
    pub likes: u32,
    pub dislikes: u32,
    pub reposts: u32,
    pub references: u32,
    pub lifetime: u32,
    pub final_energy: u64,
}

impl AgentOutcome {
    /// Still alive when the horizon ran out.
    pub fn censored(&self) -> bool {
        self.final_energy > 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Likes,
    Reposts,
    Lifetime,
}

impl Metric {
    pub fn of(self, outcome: &AgentOutcome) -> u64 {
        match self {
            Metric::Likes => outcome.likes as u64,
            Metric::Reposts => outcome.reposts as u64,
            Metric::Lifetime => outcome.lifetime as u64,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Likes => "likes",
            Metric::Reposts => "reposts",
            Metric::Lifetime => "lifetime",
        })
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "likes" => Ok(Metric::Likes),
            "reposts" => Ok(Metric::Reposts),
            "lifetime" => Ok(Metric::Lifetime),
            other => Err(format!(
                "unknown metric `{other}` (expected likes, reposts or lifetime)"
            )),
        }
    }
}

/// What happened in one step.
#[derive(Debug, Clone, Copy)]
struct StepEvents {
    delta: i64,
    like: bool,
    dislike: bool,
    repost: bool,
    reference: bool,
}

fn draw_step(params: &ModelParams, energy: u64, rng: &mut ChaCha8Rng) -> StepEvents {
    let r = params.reaction_probs(energy);
    if params.extended_reactions {
        let like = rng.gen::<f64>() < r.like;
        let dislike = rng.gen::<f64>() < r.dislike;
        let repost = rng.gen::<f64>() < r.repost;
        let reference = rng.gen::<f64>() < r.reference;
        let delta = like as i64 - dislike as i64 + 2 * repost as i64 + reference as i64 - 1;
        return StepEvents {
            delta,
            like,
            dislike,
            repost,
            reference,
        };
    }

    // inverse CDF over the four-outcome law, ordered 2, 1, 0, -1
    let u: f64 = rng.gen();
    let p2 = r.like * r.repost;
    let p1 = (1.0 - r.like) * r.repost;
    let p0 = r.like * (1.0 - r.repost);
    let delta = if u < p2 {
        2
    } else if u < p2 + p1 {
        1
    } else if u < p2 + p1 + p0 {
        0
    } else {
        -1
    };
    StepEvents {
        delta,
        like: delta == 0 || delta == 2,
        dislike: false,
        repost: delta >= 1,
        reference: false,
    }
}

/// Runs one life of at most `max_steps` steps. Repost step indices (1-based)
/// are pushed to `reposts_at` when given.
fn run_life(
    params: &ModelParams,
    rng: &mut ChaCha8Rng,
    max_steps: u32,
    mut trajectory: Option<&mut Vec<Step>>,
    mut reposts_at: Option<&mut Vec<u32>>,
) -> AgentOutcome {
    let mut out = AgentOutcome::default();
    let mut energy = params.e0;
    for t in 1..=max_steps {
        let ev = draw_step(params, energy, rng);
        // the extended kernel can overshoot below zero; energy stops at 0
        let delta = ev.delta.max(-(energy as i64));
        energy = (energy as i64 + delta) as u64;
        out.likes += ev.like as u32;
        out.dislikes += ev.dislike as u32;
        out.reposts += ev.repost as u32;
        out.references += ev.reference as u32;
        out.lifetime = t;
        if let Some(steps) = trajectory.as_deref_mut() {
            steps.push(Step {
                t,
                delta,
                energy_after: energy,
            });
        }
        if ev.repost {
            if let Some(r) = reposts_at.as_deref_mut() {
                r.push(t);
            }
        }
        if energy == 0 {
            break;
        }
    }
    out.final_energy = energy;
    out
}

/// One agent on stream `index` of `seed`, recording the full trajectory.
pub fn simulate_agent_stream(params: &ModelParams, seed: u64, index: u64) -> (Trajectory, AgentOutcome) {
    let mut rng = stream_rng(seed, index);
    let mut steps = Vec::with_capacity(params.t_max as usize);
    let outcome = run_life(params, &mut rng, params.t_max, Some(&mut steps), None);
    let trajectory = Trajectory {
        initial_energy: params.e0,
        absorbed: outcome.final_energy == 0,
        steps,
    };
    (trajectory, outcome)
}

pub fn simulate_agent(params: &ModelParams, seed: u64) -> (Trajectory, AgentOutcome) {
    simulate_agent_stream(params, seed, 0)
}

/// `n` independent agents; agent `i` uses stream `i` of `seed`, so the
/// output matches `simulate_agent_stream(params, seed, i)` for every `i`.
pub fn simulate_ensemble(params: &ModelParams, n: usize, seed: u64, exec: Execution) -> Vec<AgentOutcome> {
    par::map_indices(exec, n, |i| {
        let mut rng = stream_rng(seed, i as u64);
        run_life(params, &mut rng, params.t_max, None, None)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Birth {
    pub agent_id: usize,
    pub step: u32,
    /// `None` for the initial agent and spontaneous births.
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    pub outcomes: Vec<AgentOutcome>,
    pub births: Vec<Birth>,
    /// Set when agent creation stopped at `max_agents`.
    pub truncated: bool,
}

impl FlowResult {
    pub fn total_agents(&self) -> usize {
        self.outcomes.len()
    }

    pub fn spontaneous_births(&self) -> usize {
        self.births
            .iter()
            .filter(|b| b.parent.is_none())
            .count()
            .saturating_sub(1)
    }
}

/// Simulates an information flow over global steps `0..=horizon`.
///
/// One agent exists at step 0. At each later step a spontaneous agent
/// appears with probability `p_s`, and every repost at step `s` spawns a
/// copy with energy `E0` born at `s + 1`. An agent born at step `b` reacts
/// on steps `b + 1 ..= min(b + T_max, horizon)`. Agent ids follow birth
/// order (spontaneous first, then copies by parent id).
pub fn simulate_flow(
    params: &ModelParams,
    horizon: u32,
    seed: u64,
    max_agents: usize,
    exec: Execution,
) -> Result<FlowResult, SimError> {
    params.validate()?;
    if max_agents == 0 {
        return Err(SimError::ZeroAgentCap);
    }
    if horizon == 0 {
        return Err(SimError::ZeroHorizon);
    }

    let mut birth_rng = stream_rng(seed, BIRTH_STREAM);
    let mut pending: Vec<Vec<usize>> = vec![Vec::new(); horizon as usize + 1];
    let mut outcomes = Vec::new();
    let mut births = Vec::new();
    let mut truncated = false;

    for step in 0..=horizon {
        let mut parents: Vec<Option<usize>> = Vec::new();
        // the seed message at step 0, then spontaneous births
        if step == 0 || birth_rng.gen::<f64>() < params.p_s {
            parents.push(None);
        }
        parents.extend(std::mem::take(&mut pending[step as usize]).into_iter().map(Some));

        let room = max_agents - outcomes.len();
        if parents.len() > room {
            parents.truncate(room);
            truncated = true;
        }
        if parents.is_empty() {
            continue;
        }

        let first_id = outcomes.len();
        let max_steps = params.t_max.min(horizon - step);
        let lives = par::map_indices(exec, parents.len(), |k| {
            let id = first_id + k;
            let mut rng = stream_rng(seed, id as u64);
            let mut reposts = Vec::new();
            let outcome = run_life(params, &mut rng, max_steps, None, Some(&mut reposts));
            (outcome, reposts)
        });

        for (k, (outcome, reposts)) in lives.into_iter().enumerate() {
            let id = first_id + k;
            births.push(Birth {
                agent_id: id,
                step,
                parent: parents[k],
            });
            outcomes.push(outcome);
            for t in reposts {
                let born = step + t + 1;
                if born <= horizon {
                    pending[born as usize].push(id);
                }
            }
        }
    }

    Ok(FlowResult {
        outcomes,
        births,
        truncated,
    })
}

pub fn collect_histogram(outcomes: &[AgentOutcome], metric: Metric) -> Result<Histogram, SimError> {
    if outcomes.is_empty() {
        return Err(SimError::EmptyOutcomes);
    }
    Ok(Histogram::from_counts(outcomes.iter().map(|o| metric.of(o))))
}

/// Outcome table. `births` may be empty (independent replicates), in which
/// case every agent is parentless and born at step 0.
pub fn outcomes_csv(outcomes: &[AgentOutcome], births: &[Birth]) -> String {
    let mut out = String::from(
        "agent_id,parent_id,birth_step,likes,dislikes,reposts,references,lifetime,final_energy,censored\n",
    );
    for (id, o) in outcomes.iter().enumerate() {
        let (parent, step) = match births.get(id) {
            Some(b) => (b.parent.map(|p| p.to_string()).unwrap_or_default(), b.step),
            None => (String::new(), 0),
        };
        let _ = writeln!(
            out,
            "{id},{parent},{step},{},{},{},{},{},{},{}",
            o.likes,
            o.dislikes,
            o.reposts,
            o.references,
            o.lifetime,
            o.final_energy,
            o.censored()
        );
    }
    out
}
