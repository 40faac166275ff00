//! Exact like-count and lifetime distributions of a single agent.
//!
//! The like count is the number of steps with increment 0 or 2 before the
//! agent is absorbed at energy 0 or the horizon `T_max` runs out. Two
//! independent routes compute it: a dynamic program over `(energy, likes)`
//! and an exhaustive walk over every increment sequence.

use std::fmt::Write as _;

use crate::error::ExactError;
use crate::model::ModelParams;

/// Largest horizon the enumeration route accepts.
pub const ENUMERATION_LIMIT: u32 = 14;

/// `probs[n]` is the probability of exactly `n` likes, `n = 0..=T_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct LikeCountPmf {
    pub probs: Vec<f64>,
    pub e0: u64,
    pub t_max: u32,
}

impl LikeCountPmf {
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn cdf(&self) -> Vec<f64> {
        self.probs
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect()
    }

    pub fn max_abs_diff(&self, other: &LikeCountPmf) -> f64 {
        let n = self.probs.len().max(other.probs.len());
        (0..n)
            .map(|i| {
                let a = self.probs.get(i).copied().unwrap_or(0.0);
                let b = other.probs.get(i).copied().unwrap_or(0.0);
                (a - b).abs()
            })
            .fold(0.0, f64::max)
    }

    /// CSV with columns `n,probability`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,probability\n");
        for (n, p) in self.probs.iter().enumerate() {
            let _ = writeln!(out, "{n},{p}");
        }
        out
    }
}

/// First-passage law: `absorbed_at[t - 1]` is the probability of hitting
/// energy 0 exactly at step `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LifetimePmf {
    pub absorbed_at: Vec<f64>,
    pub survival: f64,
}

impl LifetimePmf {
    /// CSV with columns `t,probability`; the last row, `survived`, is the
    /// mass still alive after `T_max`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,probability\n");
        for (i, p) in self.absorbed_at.iter().enumerate() {
            let _ = writeln!(out, "{},{p}", i + 1);
        }
        let _ = writeln!(out, "survived,{}", self.survival);
        out
    }
}

/// Step probabilities `(P2, P1, P0, P-1)` at `energy > 0`.
fn step_probs(params: &ModelParams, energy: u64) -> [f64; 4] {
    let r = params.reaction_probs(energy);
    let (l, p) = (r.like, r.repost);
    [l * p, (1.0 - l) * p, l * (1.0 - p), (1.0 - l) * (1.0 - p)]
}

fn check_default_kernel(params: &ModelParams) -> Result<(), ExactError> {
    params.validate()?;
    if params.extended_reactions {
        return Err(ExactError::ExtendedKernel);
    }
    Ok(())
}

/// Like-count pmf by dynamic programming over `(energy, likes)`.
///
/// From energy `E > 0`, increments 2 and 0 add a like and 1 and -1 do not;
/// energy 0 keeps its mass and accrues nothing further. Reachable energy is
/// at most `E0 + 2 T_max`.
pub fn like_count_pmf_dp(params: &ModelParams) -> Result<LikeCountPmf, ExactError> {
    check_default_kernel(params)?;
    let t_max = params.t_max as usize;
    let e_cap = params.e0 as usize + 2 * t_max;
    let width = t_max + 1;
    let idx = |e: usize, n: usize| e * width + n;

    let probs_at: Vec<[f64; 4]> = (0..=e_cap as u64)
        .map(|e| if e == 0 { [0.0; 4] } else { step_probs(params, e) })
        .collect();

    let mut cur = vec![0.0f64; (e_cap + 1) * width];
    let mut next = cur.clone();
    cur[idx(params.e0 as usize, 0)] = 1.0;
    let mut e_hi = params.e0 as usize;

    for t in 0..t_max {
        next.iter_mut().for_each(|x| *x = 0.0);
        // at most t likes so far
        for n in 0..=t {
            next[idx(0, n)] += cur[idx(0, n)];
        }
        for e in 1..=e_hi {
            let [p2, p1, p0, pm] = probs_at[e];
            for n in 0..=t {
                let m = cur[idx(e, n)];
                if m == 0.0 {
                    continue;
                }
                next[idx(e + 2, n + 1)] += m * p2;
                next[idx(e + 1, n)] += m * p1;
                next[idx(e, n + 1)] += m * p0;
                next[idx(e - 1, n)] += m * pm;
            }
        }
        e_hi = (e_hi + 2).min(e_cap);
        std::mem::swap(&mut cur, &mut next);
    }

    let mut probs = vec![0.0; width];
    for e in 0..=e_cap {
        for (n, p) in probs.iter_mut().enumerate() {
            *p += cur[idx(e, n)];
        }
    }
    Ok(LikeCountPmf {
        probs,
        e0: params.e0,
        t_max: params.t_max,
    })
}

/// Like-count pmf by walking every increment sequence of length at most
/// `T_max`, stopping each path at absorption. Exponential in `T_max`.
pub fn like_count_pmf_enum(params: &ModelParams) -> Result<LikeCountPmf, ExactError> {
    check_default_kernel(params)?;
    if params.t_max > ENUMERATION_LIMIT {
        return Err(ExactError::EnumerationTooLarge {
            t_max: params.t_max,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut probs = vec![0.0; params.t_max as usize + 1];
    walk(params, params.e0, params.t_max, 0, 1.0, &mut probs);
    Ok(LikeCountPmf {
        probs,
        e0: params.e0,
        t_max: params.t_max,
    })
}

fn walk(params: &ModelParams, energy: u64, steps_left: u32, likes: usize, prob: f64, probs: &mut [f64]) {
    if energy == 0 || steps_left == 0 {
        probs[likes] += prob;
        return;
    }
    let [p2, p1, p0, pm] = step_probs(params, energy);
    for (delta, p, like) in [(2i64, p2, 1), (1, p1, 0), (0, p0, 1), (-1, pm, 0)] {
        let e = (energy as i64 + delta) as u64;
        walk(params, e, steps_left - 1, likes + like, prob * p, probs);
    }
}

/// Distribution of the absorption step on the same lattice.
pub fn lifetime_pmf_dp(params: &ModelParams) -> Result<LifetimePmf, ExactError> {
    check_default_kernel(params)?;
    let t_max = params.t_max as usize;
    let e_cap = params.e0 as usize + 2 * t_max;
    let probs_at: Vec<[f64; 4]> = (0..=e_cap as u64)
        .map(|e| if e == 0 { [0.0; 4] } else { step_probs(params, e) })
        .collect();

    let mut cur = vec![0.0f64; e_cap + 1];
    let mut next = cur.clone();
    cur[params.e0 as usize] = 1.0;
    let mut absorbed_at = Vec::with_capacity(t_max);

    for _ in 0..t_max {
        next.iter_mut().for_each(|x| *x = 0.0);
        let mut absorbed = 0.0;
        for e in 1..=e_cap {
            let m = cur[e];
            if m == 0.0 {
                continue;
            }
            let [p2, p1, p0, pm] = probs_at[e];
            next[e + 2] += m * p2;
            next[e + 1] += m * p1;
            next[e] += m * p0;
            if e == 1 {
                absorbed += m * pm;
            } else {
                next[e - 1] += m * pm;
            }
        }
        absorbed_at.push(absorbed);
        std::mem::swap(&mut cur, &mut next);
    }

    Ok(LifetimePmf {
        absorbed_at,
        survival: cur.iter().sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ResponseCurve;
    use approx::assert_abs_diff_eq;

    fn params(p_l0: f64, p_r0: f64, e0: u64, t_max: u32, phi: ResponseCurve) -> ModelParams {
        ModelParams::new(p_l0, p_r0, e0, t_max, phi).unwrap()
    }

    const ONE: ResponseCurve = ResponseCurve::Constant { a: 1.0 };
    const ZERO: ResponseCurve = ResponseCurve::Constant { a: 0.0 };

    #[test]
    fn single_step_like_probability() {
        for (l, r) in [(0.3, 0.2), (0.7, 0.9), (0.5, 0.0)] {
            let pmf = like_count_pmf_dp(&params(l, r, 1, 1, ONE)).unwrap();
            assert_abs_diff_eq!(pmf.probs[1], l, epsilon = 1e-15);
            assert_abs_diff_eq!(pmf.probs[0], 1.0 - l, epsilon = 1e-15);
        }
    }

    #[test]
    fn no_likes_without_like_rate() {
        let pmf = like_count_pmf_dp(&params(0.0, 0.4, 3, 12, ONE)).unwrap();
        assert_abs_diff_eq!(pmf.probs[0], 1.0, epsilon = 1e-12);
        assert!(pmf.probs[1..].iter().all(|p| *p == 0.0));
    }

    #[test]
    fn hand_enumerated_two_step_case() {
        // from E = 1: -1 absorbs (0.25); +1 then a no-like step (0.25 * 0.5)
        let p = params(0.5, 0.5, 1, 2, ONE);
        let pmf = like_count_pmf_enum(&p).unwrap();
        assert_abs_diff_eq!(pmf.probs[0], 0.375, epsilon = 1e-15);
        assert_abs_diff_eq!(like_count_pmf_dp(&p).unwrap().probs[0], 0.375, epsilon = 1e-15);

        let decay = like_count_pmf_enum(&params(0.5, 0.5, 1, 2, ZERO)).unwrap();
        assert_eq!(decay.probs, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn dp_matches_enumeration_small_case() {
        let p = params(0.3, 0.2, 2, 3, ONE);
        let dp = like_count_pmf_dp(&p).unwrap();
        let en = like_count_pmf_enum(&p).unwrap();
        assert!(dp.max_abs_diff(&en) <= 1e-12);
        assert_abs_diff_eq!(en.total(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn enumeration_guard() {
        let p = params(0.3, 0.2, 2, ENUMERATION_LIMIT + 1, ONE);
        assert!(matches!(
            like_count_pmf_enum(&p),
            Err(ExactError::EnumerationTooLarge { .. })
        ));
        assert!(like_count_pmf_dp(&p).is_ok());
    }

    #[test]
    fn extended_kernel_rejected() {
        let mut p = params(0.3, 0.2, 2, 5, ONE);
        p.extended_reactions = true;
        assert_eq!(like_count_pmf_dp(&p), Err(ExactError::ExtendedKernel));
        assert_eq!(like_count_pmf_enum(&p), Err(ExactError::ExtendedKernel));
        assert_eq!(lifetime_pmf_dp(&p), Err(ExactError::ExtendedKernel));
    }

    #[test]
    fn lifetime_examples() {
        let lt = lifetime_pmf_dp(&params(0.3, 0.2, 3, 10, ZERO)).unwrap();
        assert_eq!(lt.absorbed_at[2], 1.0);
        assert_eq!(lt.absorbed_at.iter().sum::<f64>(), 1.0);
        assert_eq!(lt.survival, 0.0);

        let lt = lifetime_pmf_dp(&params(0.3, 0.2, 1, 10, ONE)).unwrap();
        assert_abs_diff_eq!(lt.absorbed_at[0], 0.56, epsilon = 1e-15);
        let absorbed: f64 = lt.absorbed_at.iter().sum();
        assert_abs_diff_eq!(lt.survival, 1.0 - absorbed, epsilon = 1e-12);
    }

    #[test]
    fn lifetime_short_horizon_survival() {
        // E0 = 3 cannot be absorbed in two steps
        let lt = lifetime_pmf_dp(&params(0.3, 0.2, 3, 2, ONE)).unwrap();
        assert_eq!(lt.absorbed_at, vec![0.0, 0.0]);
        assert_abs_diff_eq!(lt.survival, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn more_likes_with_higher_like_rate() {
        for e0 in 1..=3 {
            for t_max in 1..=8 {
                let lo = like_count_pmf_dp(&params(0.2, 0.3, e0, t_max, ONE)).unwrap().cdf();
                let hi = like_count_pmf_dp(&params(0.6, 0.3, e0, t_max, ONE)).unwrap().cdf();
                assert!(lo.iter().zip(&hi).all(|(a, b)| *b <= *a + 1e-12));
            }
        }
    }

    #[test]
    fn pmf_csv_layout() {
        let pmf = like_count_pmf_dp(&params(0.3, 0.2, 1, 1, ONE)).unwrap();
        assert_eq!(pmf.to_csv(), format!("n,probability\n0,{}\n1,{}\n", 1.0 - 0.3, 0.3));
    }
}
