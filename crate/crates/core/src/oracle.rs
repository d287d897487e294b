//! Exact enumeration over tiny discrete joints.
//!
//! A joint ranges over the treatment `A` (the pre-masking value in the
//! missing-data setting), `C`, `Y`, one extra binary variable `Z` (the
//! missingness indicator or the proxy, depending on [`Extra`]) and at most
//! three words `T_0..T_{V-1}`. Outcome keys pack these as bits:
//! `a | c << 1 | y << 2 | z << 3 | t << 4`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::synthgen::{observation_base, p_outcome, p_treatment, TextCoefficients, P_CONFOUNDER};
use crate::tabular::{EffectEstimate, Estimator};

pub const MAX_WORDS: usize = 3;

/// Conditional table of the extra variable, indexed by the key without the
/// `Z` bit: `a | c << 1 | y << 2 | t << 3`.
#[derive(Debug, Clone, PartialEq)]
pub enum Extra {
    /// No extra variable; `Z` is always 0.
    None,
    /// `p(R_A = 1 | a, c, y, t)`. Missing at random iff it ignores `a`.
    Missingness(Vec<f64>),
    /// `p(A* = 1 | a, c, y, t)`.
    Proxy(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtraKind {
    None,
    Missingness,
    Proxy,
}

/// A factorized distribution `p(C) p(A|C) p(Y|A,C) Π_i p(T_i|A,C,Y) p(Z|A,C,Y,T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSpec {
    /// `p(C = 1)`.
    pub p_c: f64,
    /// `p(A = 1 | C = c)`, indexed by `c`.
    pub p_a: [f64; 2],
    /// `p(Y = 1 | A = a, C = c)`, indexed `[a][c]`.
    pub p_y: [[f64; 2]; 2],
    /// `p(T_i = 1 | a, c, y)` per word, indexed `a | c << 1 | y << 2`.
    pub p_words: Vec<[f64; 8]>,
    pub extra: Extra,
}

fn bern(p: f64, value: bool) -> f64 {
    if value {
        p
    } else {
        1.0 - p
    }
}

fn bit(key: usize, pos: usize) -> bool {
    key >> pos & 1 == 1
}

impl FactorSpec {
    pub fn vocab_size(&self) -> usize {
        self.p_words.len()
    }

    /// The missing-data process over `V ≤ 3` words. `clamp` bounds every
    /// Bernoulli parameter to `[ε, 1 - ε]`; `None` leaves them unclamped.
    pub fn missing_data(coeffs: &TextCoefficients, clamp: Option<f64>) -> Self {
        let cl = |p: f64| clamp.map_or(p, |e| p.clamp(e, 1.0 - e));
        let v = coeffs.vocab_size();
        let p_words = (0..v)
            .map(|i| {
                core::array::from_fn(|k| {
                    let (a, c) = (f64::from(k as u8 & 1), f64::from(k as u8 >> 1 & 1));
                    cl(0.5 + coeffs.u[i] * a + coeffs.v[i] * c)
                })
            })
            .collect();
        let missing = (0..8usize << v)
            .map(|k| {
                let words: f64 = (0..v).filter(|&i| bit(k, 3 + i)).map(|i| coeffs.w[i]).sum();
                cl(observation_base(bit(k, 1), bit(k, 2)) + words)
            })
            .collect();
        FactorSpec {
            p_c: cl(P_CONFOUNDER),
            p_a: [cl(p_treatment(false)), cl(p_treatment(true))],
            p_y: [
                [cl(p_outcome(false, false)), cl(p_outcome(false, true))],
                [cl(p_outcome(true, false)), cl(p_outcome(true, true))],
            ],
            p_words,
            extra: Extra::Missingness(missing),
        }
    }

    /// The measurement-error process over `V ≤ 3` words, without a proxy.
    pub fn measurement_error(coeffs: &TextCoefficients, clamp: Option<f64>) -> Self {
        let cl = |p: f64| clamp.map_or(p, |e| p.clamp(e, 1.0 - e));
        let mut spec = FactorSpec::missing_data(coeffs, clamp);
        spec.p_words = (0..coeffs.vocab_size())
            .map(|i| {
                core::array::from_fn(|k| {
                    let a = f64::from(k as u8 & 1);
                    let c = f64::from(k as u8 >> 1 & 1);
                    let y = f64::from(k as u8 >> 2 & 1);
                    cl(0.5 + coeffs.s[i] * c + coeffs.u[i] * a + coeffs.v[i] * y)
                })
            })
            .collect();
        spec.extra = Extra::None;
        spec
    }

    fn validate(&self) -> Result<()> {
        let v = self.vocab_size();
        if v > MAX_WORDS {
            return Err(Error::InvalidParameter("enumeration supports at most three words"));
        }
        let in_unit = |p: &f64| (0.0..=1.0).contains(p);
        let structured = [self.p_c]
            .iter()
            .chain(&self.p_a)
            .chain(self.p_y.iter().flatten())
            .chain(self.p_words.iter().flatten())
            .all(in_unit);
        if !structured {
            return Err(Error::InvalidParameter("factor parameter outside [0, 1]"));
        }
        match &self.extra {
            Extra::None => Ok(()),
            Extra::Missingness(t) | Extra::Proxy(t) => {
                if t.len() != 8 << v {
                    Err(Error::InvalidParameter("extra table must have 2^(3+V) entries"))
                } else if !t.iter().all(in_unit) {
                    Err(Error::InvalidParameter("factor parameter outside [0, 1]"))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// An exact probability table produced by [`enumerate_joint`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExactJoint {
    vocab_size: usize,
    kind: ExtraKind,
    probs: Vec<f64>,
}

impl ExactJoint {
    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn kind(&self) -> ExtraKind {
        self.kind
    }

    /// Probabilities indexed by outcome key.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn key(a: bool, c: bool, y: bool, z: bool, t: usize) -> usize {
        usize::from(a) | usize::from(c) << 1 | usize::from(y) << 2 | usize::from(z) << 3 | t << 4
    }

    pub fn prob(&self, a: bool, c: bool, y: bool, z: bool, t: usize) -> f64 {
        self.probs[Self::key(a, c, y, z, t)]
    }

    /// `p(A=a, C=c, Y=y)` indexed `[a][c][y]`.
    pub fn treatment_marginal(&self) -> [[[f64; 2]; 2]; 2] {
        let mut m = [[[0.0; 2]; 2]; 2];
        for (k, &p) in self.probs.iter().enumerate() {
            m[k & 1][k >> 1 & 1][k >> 2 & 1] += p;
        }
        m
    }

    /// `p(Z=z, C=c, Y=y)` indexed `[z][c][y]`.
    pub fn extra_marginal(&self) -> [[[f64; 2]; 2]; 2] {
        let mut m = [[[0.0; 2]; 2]; 2];
        for (k, &p) in self.probs.iter().enumerate() {
            m[k >> 3 & 1][k >> 1 & 1][k >> 2 & 1] += p;
        }
        m
    }
}

/// Enumerates every outcome of a factorized distribution.
pub fn enumerate_joint(spec: &FactorSpec) -> Result<ExactJoint> {
    spec.validate()?;
    let v = spec.vocab_size();
    let mut probs = vec![0.0; 16 << v];
    for (key, slot) in probs.iter_mut().enumerate() {
        let (a, c, y, z) = (bit(key, 0), bit(key, 1), bit(key, 2), bit(key, 3));
        let t = key >> 4;
        let mut p = bern(spec.p_c, c)
            * bern(spec.p_a[usize::from(c)], a)
            * bern(spec.p_y[usize::from(a)][usize::from(c)], y);
        let parents = key & 7;
        for (i, word) in spec.p_words.iter().enumerate() {
            p *= bern(word[parents], bit(t, i));
        }
        p *= match &spec.extra {
            Extra::None => bern(0.0, z),
            Extra::Missingness(table) | Extra::Proxy(table) => bern(table[parents | t << 3], z),
        };
        *slot = p;
    }
    let kind = match spec.extra {
        Extra::None => ExtraKind::None,
        Extra::Missingness(_) => ExtraKind::Missingness,
        Extra::Proxy(_) => ExtraKind::Proxy,
    };
    Ok(ExactJoint {
        vocab_size: v,
        kind,
        probs,
    })
}

/// Backdoor functional on exact probabilities `p(a, c, y)`, indexed `[a][c][y]`.
pub fn exact_tau_from_marginal(m: &[[[f64; 2]; 2]; 2]) -> Result<EffectEstimate> {
    let mut means = [0.0; 2];
    for c in 0..2 {
        let p_c: f64 = (0..2).map(|a| m[a][c][0] + m[a][c][1]).sum();
        for (a, mean) in means.iter_mut().enumerate() {
            let p_ac = m[a][c][0] + m[a][c][1];
            if p_ac <= 0.0 {
                return Err(Error::Positivity {
                    treatment: a as u8,
                    confounder: c as u8,
                });
            }
            *mean += m[a][c][1] / p_ac * p_c;
        }
    }
    Ok(EffectEstimate::new(means[1], means[0], Estimator::PluginExact, 0))
}

/// Exact backdoor effect of the (true) treatment in `joint`.
pub fn exact_tau(joint: &ExactJoint) -> Result<EffectEstimate> {
    exact_tau_from_marginal(&joint.treatment_marginal())
}

/// Exact joint of a treatment and a proxy produced by flipping it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlippedJoint {
    /// `p(A* = a*, C = c, Y = y)` indexed `[a*][c][y]`.
    pub q: [[[f64; 2]; 2]; 2],
    /// `p(A* = 0 | A = 1, c, y)` indexed `[c][y]`.
    pub epsilon: [[f64; 2]; 2],
    /// `p(A* = 1 | A = 0, c, y)` indexed `[c][y]`.
    pub delta: [[f64; 2]; 2],
    /// `p(A = 0 | A* = 1, c, y)` indexed `[c][y]`.
    pub posterior_epsilon: [[f64; 2]; 2],
    /// `p(A = 1 | A* = 0, c, y)` indexed `[c][y]`.
    pub posterior_delta: [[f64; 2]; 2],
}

/// Flips `A` into a proxy with `p(A*=1 | A=0) = false_positive` and
/// `p(A*=0 | A=1) = false_negative`, by enumerating `p(a, a*, c, y)`, and
/// reads off the proxy marginal and both kinds of error rate.
pub fn forward_flip(
    p: &[[[f64; 2]; 2]; 2],
    false_positive: f64,
    false_negative: f64,
) -> Result<FlippedJoint> {
    if !(0.0..=1.0).contains(&false_positive) || !(0.0..=1.0).contains(&false_negative) {
        return Err(Error::InvalidParameter("flip rate outside [0, 1]"));
    }
    // joint[a][a*][c][y]
    let mut joint = [[[[0.0; 2]; 2]; 2]; 2];
    for (a, pa) in p.iter().enumerate() {
        let to_one = if a == 1 { 1.0 - false_negative } else { false_positive };
        for c in 0..2 {
            for y in 0..2 {
                joint[a][1][c][y] = pa[c][y] * to_one;
                joint[a][0][c][y] = pa[c][y] * (1.0 - to_one);
            }
        }
    }
    let zero = [[0.0; 2]; 2];
    let mut out = FlippedJoint {
        q: [zero; 2],
        epsilon: zero,
        delta: zero,
        posterior_epsilon: zero,
        posterior_delta: zero,
    };
    for c in 0..2 {
        for y in 0..2 {
            for s in 0..2 {
                out.q[s][c][y] = joint[0][s][c][y] + joint[1][s][c][y];
            }
            let arm = |a: usize| joint[a][0][c][y] + joint[a][1][c][y];
            if out.q[1][c][y] <= 0.0 || out.q[0][c][y] <= 0.0 || arm(0) <= 0.0 || arm(1) <= 0.0 {
                return Err(Error::Unidentified);
            }
            out.epsilon[c][y] = joint[1][0][c][y] / arm(1);
            out.delta[c][y] = joint[0][1][c][y] / arm(0);
            out.posterior_epsilon[c][y] = joint[0][1][c][y] / out.q[1][c][y];
            out.posterior_delta[c][y] = joint[1][0][c][y] / out.q[0][c][y];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin_spec() -> FactorSpec {
        FactorSpec {
            p_c: 0.5,
            p_a: [0.5; 2],
            p_y: [[0.5; 2]; 2],
            p_words: Vec::new(),
            extra: Extra::None,
        }
    }

    #[test]
    fn fair_coins_are_uniform_over_eight_outcomes() {
        let joint = enumerate_joint(&coin_spec()).unwrap();
        let nonzero: Vec<f64> = joint.probs().iter().copied().filter(|&p| p > 0.0).collect();
        assert_eq!(nonzero.len(), 8);
        assert!(nonzero.iter().all(|&p| p == 0.125));
    }

    #[test]
    fn zero_coefficient_process_is_the_product_of_its_factors() {
        let coeffs = TextCoefficients::zeros(2);
        let joint = enumerate_joint(&FactorSpec::missing_data(&coeffs, None)).unwrap();
        for c in [false, true] {
            for a in [false, true] {
                for y in [false, true] {
                    for r in [false, true] {
                        for t in 0..4 {
                            let expected = bern(0.4, c)
                                * bern(p_treatment(c), a)
                                * bern(p_outcome(a, c), y)
                                * 0.25
                                * bern(observation_base(c, y), r);
                            assert_eq!(joint.prob(a, c, y, r, t), expected);
                        }
                    }
                }
            }
        }
        let total: f64 = joint.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn synthetic_process_has_effect_one_tenth() {
        let coeffs = TextCoefficients::zeros(1);
        let joint = enumerate_joint(&FactorSpec::missing_data(&coeffs, None)).unwrap();
        let tau = exact_tau(&joint).unwrap();
        assert!((tau.tau() - 0.1).abs() < 1e-12, "{}", tau.tau());
    }

    #[test]
    fn conditionally_independent_outcome_has_no_effect() {
        let mut spec = coin_spec();
        spec.p_a = [0.2, 0.7];
        spec.p_y = [[0.3, 0.8], [0.3, 0.8]];
        let tau = exact_tau(&enumerate_joint(&spec).unwrap()).unwrap();
        assert!(tau.tau().abs() < 1e-15);
    }

    #[test]
    fn out_of_range_parameters_are_rejected() {
        let mut spec = coin_spec();
        spec.p_c = 1.2;
        assert!(enumerate_joint(&spec).is_err());
        let mut spec = coin_spec();
        spec.p_words = vec![[0.5; 8]; 4];
        assert!(enumerate_joint(&spec).is_err());
        let mut spec = coin_spec();
        spec.extra = Extra::Proxy(vec![0.5; 4]);
        assert!(enumerate_joint(&spec).is_err());
    }

    #[test]
    fn deterministic_treatment_violates_positivity() {
        let mut spec = coin_spec();
        spec.p_a = [0.0, 0.5];
        assert!(matches!(
            exact_tau(&enumerate_joint(&spec).unwrap()),
            Err(Error::Positivity { treatment: 1, confounder: 0 })
        ));
    }

    #[test]
    fn flipping_preserves_mass_and_reports_error_rates() {
        let p = [[[0.1, 0.15], [0.05, 0.2]], [[0.2, 0.1], [0.1, 0.1]]];
        let f = forward_flip(&p, 0.0, 0.0).unwrap();
        assert_eq!(f.q, p);
        assert_eq!(f.epsilon, [[0.0; 2]; 2]);
        let f = forward_flip(&p, 0.1, 0.2).unwrap();
        let total: f64 = f.q.iter().flatten().flatten().sum();
        assert!((total - 1.0).abs() < 1e-12);
        // p(A=0 | A*=1, c=0, y=0) = 0.1*0.1 / (0.1*0.1 + 0.2*0.8)
        assert!((f.posterior_epsilon[0][0] - 0.01 / 0.17).abs() < 1e-15);
        assert!((f.epsilon[1][1] - 0.2).abs() < 1e-15);
        assert!((f.delta[0][1] - 0.1).abs() < 1e-15);
    }
}
