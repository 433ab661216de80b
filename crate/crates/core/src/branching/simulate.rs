use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use super::BranchingProcess;
use crate::error::{Error, Result};
use crate::numerics::to_f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimulationConfig {
    pub trials: u64,
    /// Generations after which a surviving trajectory counts as non-extinct.
    pub generation_cap: u64,
    /// Population size above which a trajectory counts as non-extinct.
    pub population_cap: u64,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            trials: 100_000,
            generation_cap: 2000,
            population_cap: 10_000,
            seed: 0,
        }
    }
}

/// Fraction of trajectories that died out. Censoring only turns extinct
/// trajectories into surviving ones, so the estimate is biased low.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtinctionEstimate {
    pub estimate: f64,
    pub extinct: u64,
    pub trials: u64,
    pub generation_cap: u64,
    pub population_cap: u64,
    pub seed: u64,
    /// `3 sqrt(p(1-p)/trials)`.
    pub half_width: f64,
}

/// Simulates `config.trials` independent trajectories from one individual
/// of type `start`. Trajectory `t` draws from its own ChaCha stream
/// `(seed, t)`, so results do not depend on thread scheduling.
pub fn simulate_extinction(
    g: &BranchingProcess,
    start: usize,
    config: &SimulationConfig,
) -> Result<ExtinctionEstimate> {
    if start >= g.len() {
        return Err(Error::InvalidArgument(format!("type index {start} out of range")));
    }
    if config.trials == 0 || config.generation_cap == 0 {
        return Err(Error::InvalidArgument(
            "trials and generation cap must be positive".into(),
        ));
    }
    let probs: Vec<Vec<f64>> = g
        .rules()
        .iter()
        .map(|rs| rs.iter().map(|r| to_f64(&r.probability)).collect())
        .collect();

    let extinct = (0..config.trials)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(t);
            trajectory(g, &probs, start, config, &mut rng)
        })
        .count() as u64;

    let p = extinct as f64 / config.trials as f64;
    Ok(ExtinctionEstimate {
        estimate: p,
        extinct,
        trials: config.trials,
        generation_cap: config.generation_cap,
        population_cap: config.population_cap,
        seed: config.seed,
        half_width: 3.0 * (p * (1.0 - p) / config.trials as f64).sqrt(),
    })
}

fn trajectory(
    g: &BranchingProcess,
    probs: &[Vec<f64>],
    start: usize,
    config: &SimulationConfig,
    rng: &mut impl Rng,
) -> bool {
    let n = g.len();
    let mut pop = vec![0u64; n];
    pop[start] = 1;
    for _ in 0..config.generation_cap {
        let mut next = vec![0u64; n];
        for (t, &count) in pop.iter().enumerate() {
            if count == 0 {
                continue;
            }
            // multinomial split of `count` individuals over the rules of `t`
            let mut left = count;
            let mut mass = 1.0f64;
            let rules = &g.rules()[t];
            for (r, &p) in rules.iter().zip(&probs[t]) {
                if left == 0 {
                    break;
                }
                let k = if mass <= p || std::ptr::eq(r, rules.last().expect("nonempty")) {
                    left
                } else {
                    Binomial::new(left, (p / mass).clamp(0.0, 1.0))
                        .expect("valid binomial parameters")
                        .sample(rng)
                };
                left -= k;
                mass -= p;
                for &(child, c) in &r.offspring {
                    next[child] = next[child].saturating_add(k.saturating_mul(c));
                }
            }
        }
        let total = next.iter().fold(0u64, |a, &b| a.saturating_add(b));
        if total == 0 {
            return true;
        }
        if total > config.population_cap {
            return false;
        }
        pop = next;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branching::parse_bp;

    #[test]
    fn certain_extinction() {
        let g = parse_bp("S -> 1 {}").unwrap();
        let e = simulate_extinction(
            &g,
            0,
            &SimulationConfig {
                trials: 1000,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(e.extinct, 1000);
        assert_eq!(e.half_width, 0.0);
    }

    #[test]
    fn never_extinct() {
        let g = parse_bp("S -> 1 { S*2 }").unwrap();
        let e = simulate_extinction(
            &g,
            0,
            &SimulationConfig {
                trials: 100,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(e.extinct, 0);
    }

    #[test]
    fn reproducible_and_plausible() {
        let g = parse_bp("S -> 2/3 { S*2 }\nS -> 1/3 {}").unwrap();
        let cfg = SimulationConfig {
            trials: 20_000,
            seed: 7,
            ..Default::default()
        };
        let a = simulate_extinction(&g, 0, &cfg).unwrap();
        let b = simulate_extinction(&g, 0, &cfg).unwrap();
        assert_eq!(a, b);
        assert!((a.estimate - 0.5).abs() <= a.half_width + 1e-3);
    }

    #[test]
    fn rejects_bad_arguments() {
        let g = parse_bp("S -> 1 {}").unwrap();
        assert!(simulate_extinction(&g, 1, &SimulationConfig::default()).is_err());
        let cfg = SimulationConfig {
            trials: 0,
            ..Default::default()
        };
        assert!(simulate_extinction(&g, 0, &cfg).is_err());
    }
}
