//! Model parameters, energy-dependent reaction probabilities and the
//! step law of the energy random walk.
//!
//! An agent is a message with integer energy `E`. While `E > 0`, each time
//! step draws a like and a repost independently with probabilities
//! `p_l0 * phi(E)` and `p_r0 * phi(E)`; the net energy change is
//! `like + 2 * repost - 1`, so the increment is supported on `{2, 1, 0, -1}`.
//! Energy 0 is absorbing.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Monotone nondecreasing map from energy to `[0, 1]` that scales the base
/// reaction probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ResponseCurve {
    /// `E / (E + c)`
    Saturating { c: f64 },
    /// `min(1, E / c)`
    LinearCapped { c: f64 },
    /// `a` for every energy.
    Constant { a: f64 },
}

impl ResponseCurve {
    pub fn saturating(c: f64) -> Result<Self, ModelError> {
        check_positive("phi.c", c)?;
        Ok(Self::Saturating { c })
    }

    pub fn linear_capped(c: f64) -> Result<Self, ModelError> {
        check_positive("phi.c", c)?;
        Ok(Self::LinearCapped { c })
    }

    pub fn constant(a: f64) -> Result<Self, ModelError> {
        check_probability("phi.a", a)?;
        Ok(Self::Constant { a })
    }

    /// Re-checks the variant constants; useful for curves built through
    /// struct literals or deserialization.
    pub fn validate(&self) -> Result<(), ModelError> {
        match *self {
            Self::Saturating { c } | Self::LinearCapped { c } => check_positive("phi.c", c),
            Self::Constant { a } => check_probability("phi.a", a),
        }
    }

    #[inline]
    pub fn eval(&self, energy: u64) -> f64 {
        let e = energy as f64;
        match *self {
            Self::Saturating { c } => e / (e + c),
            Self::LinearCapped { c } => (e / c).min(1.0),
            Self::Constant { a } => a,
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            Self::Saturating { .. } => "saturating",
            Self::LinearCapped { .. } => "linear_capped",
            Self::Constant { .. } => "constant",
        }
    }
}

fn check_positive(key: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            key,
            reason: format!("must be a finite number > 0, got {value}"),
        })
    }
}

fn check_probability(key: &'static str, value: f64) -> Result<(), ModelError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            key,
            reason: format!("must lie in [0, 1], got {value}"),
        })
    }
}

/// Scalar parameters of the stochastic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub p_l0: f64,
    pub p_d0: f64,
    pub p_r0: f64,
    pub p_s: f64,
    pub e0: u64,
    pub t_max: u32,
    pub phi: ResponseCurve,
    /// Opt-in kernel with independent like, dislike, repost and reference
    /// events on top of the per-step decay.
    pub extended_reactions: bool,
    /// Base reference probability for the extended kernel. `None` falls back
    /// to `p_l0`.
    pub p_ref0: Option<f64>,
}

impl ModelParams {
    /// Default-kernel parameters with `p_d0 = p_s = 0`.
    pub fn new(p_l0: f64, p_r0: f64, e0: u64, t_max: u32, phi: ResponseCurve) -> Result<Self, ModelError> {
        let params = Self {
            p_l0,
            p_d0: 0.0,
            p_r0,
            p_s: 0.0,
            e0,
            t_max,
            phi,
            extended_reactions: false,
            p_ref0: None,
        };
        params.validate()?;
        Ok(params)
    }

    /// The documented reference configuration: `E0 = 3`, `T_max = 20`,
    /// `p_l0 = 0.3`, `p_r0 = 0.2`, `phi = 1`.
    pub fn reference() -> Self {
        Self::new(0.3, 0.2, 3, 20, ResponseCurve::Constant { a: 1.0 }).expect("reference config is valid")
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        check_probability("p_l0", self.p_l0)?;
        check_probability("p_d0", self.p_d0)?;
        check_probability("p_r0", self.p_r0)?;
        check_probability("p_s", self.p_s)?;
        if let Some(p) = self.p_ref0 {
            check_probability("p_ref0", p)?;
        }
        if self.e0 < 1 {
            return Err(ModelError::InvalidParameter {
                key: "E0",
                reason: "must be >= 1".into(),
            });
        }
        if self.t_max < 1 {
            return Err(ModelError::InvalidParameter {
                key: "T_max",
                reason: "must be >= 1".into(),
            });
        }
        self.phi.validate()
    }

    pub fn p_ref0(&self) -> f64 {
        self.p_ref0.unwrap_or(self.p_l0)
    }

    pub fn reaction_probs(&self, energy: u64) -> ReactionProbs {
        let phi = self.phi.eval(energy);
        ReactionProbs {
            like: self.p_l0 * phi,
            dislike: self.p_d0 * phi,
            repost: self.p_r0 * phi,
            reference: self.p_ref0() * phi,
        }
    }

    /// Law of the energy increment at `energy`. Energy 0 is absorbing and
    /// has no step law.
    pub fn step_distribution(&self, energy: u64) -> Result<StepDistribution, ModelError> {
        if energy == 0 {
            return Err(ModelError::AbsorbingState);
        }
        let r = self.reaction_probs(energy);
        if !self.extended_reactions {
            let (l, p) = (r.like, r.repost);
            return Ok(StepDistribution {
                outcomes: vec![
                    (2, l * p),
                    (1, (1.0 - l) * p),
                    (0, l * (1.0 - p)),
                    (-1, (1.0 - l) * (1.0 - p)),
                ],
            });
        }

        // like +1, dislike -1, repost +2, reference +1, decay -1
        let events = [(1, r.like), (-1, r.dislike), (2, r.repost), (1, r.reference)];
        let mut mass = [0.0f64; 6]; // deltas -2..=3
        for mask in 0u8..16 {
            let mut delta = -1i64;
            let mut prob = 1.0;
            for (bit, &(d, p)) in events.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    delta += d;
                    prob *= p;
                } else {
                    prob *= 1.0 - p;
                }
            }
            mass[(delta + 2) as usize] += prob;
        }
        Ok(StepDistribution {
            outcomes: (0..6).rev().map(|i| (i as i64 - 2, mass[i])).collect(),
        })
    }

    pub fn kernel(&self) -> TransitionKernel<'_> {
        TransitionKernel { params: self }
    }

    /// `p_ij` of the energy chain.
    pub fn transition_prob(&self, i: u64, j: u64) -> f64 {
        self.kernel().prob(i, j)
    }
}

/// Per-step reaction probabilities at a given energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReactionProbs {
    pub like: f64,
    pub dislike: f64,
    pub repost: f64,
    pub reference: f64,
}

/// Conditional law of the energy increment given the current energy.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution {
    outcomes: Vec<(i64, f64)>,
}

impl StepDistribution {
    /// `(delta, probability)` pairs ordered by decreasing delta.
    pub fn outcomes(&self) -> &[(i64, f64)] {
        &self.outcomes
    }

    pub fn prob(&self, delta: i64) -> f64 {
        self.outcomes.iter().find(|(d, _)| *d == delta).map_or(0.0, |(_, p)| *p)
    }

    pub fn total(&self) -> f64 {
        self.outcomes.iter().map(|(_, p)| p).sum()
    }

    pub fn mean(&self) -> f64 {
        self.outcomes.iter().map(|&(d, p)| d as f64 * p).sum()
    }

    /// Inverse-CDF draw for `u` in `[0, 1)`.
    pub fn sample(&self, u: f64) -> i64 {
        let mut acc = 0.0;
        for &(d, p) in &self.outcomes {
            acc += p;
            if u < acc {
                return d;
            }
        }
        // rounding left a sliver above the accumulated total
        self.outcomes
            .iter()
            .rev()
            .find(|(_, p)| *p > 0.0)
            .map_or(-1, |(d, _)| *d)
    }
}

/// Functional view of the transition matrix over states `{0, 1, 2, ...}`.
#[derive(Debug, Clone, Copy)]
pub struct TransitionKernel<'a> {
    params: &'a ModelParams,
}

impl TransitionKernel<'_> {
    pub fn prob(&self, i: u64, j: u64) -> f64 {
        if i == 0 {
            return if j == 0 { 1.0 } else { 0.0 };
        }
        let delta = j as i128 - i as i128;
        if !(-2..=3).contains(&delta) {
            return 0.0;
        }
        let Ok(dist) = self.params.step_distribution(i) else {
            return 0.0;
        };
        if j == 0 {
            // a drop past zero lands in the absorbing state
            return dist
                .outcomes()
                .iter()
                .filter(|(d, _)| *d as i128 <= -(i as i128))
                .map(|(_, p)| p)
                .sum();
        }
        dist.prob(delta as i64)
    }
}
