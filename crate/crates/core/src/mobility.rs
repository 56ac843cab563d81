//! Agent-based SIS dynamics of mobile UEs.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Window};
use crate::power::GammaFit;

/// Largest random-walk displacement per step, m.
pub const MAX_STEP: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HealthState {
    Susceptible,
    Infected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub position: Point,
    pub state: HealthState,
}

impl Agent {
    pub fn is_infected(&self) -> bool {
        self.state == HealthState::Infected
    }
}

/// Per-agent SINR model: an agent is infected while its SINR is below threshold.
///
/// The serving power is drawn from the gamma fit, the network interference
/// from `background` (zero when empty), and every infected agent within r_I
/// adds C·max(d, 1)^(−α)·Exp(1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrModel {
    pub fit: GammaFit,
    pub p_tx: f64,
    pub sigma2: f64,
    pub threshold: f64,
    pub c: f64,
    pub alpha: f64,
    #[serde(default)]
    pub background: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AbmMode {
    #[default]
    RateDriven,
    SinrDriven(SinrModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbmConfig {
    pub n_agents: usize,
    pub window: Window,
    /// Contact radius, m.
    pub r_i: f64,
    /// Per-contact, per-step infection probability.
    pub beta: f64,
    /// Per-step recovery probability.
    pub mu: f64,
    pub steps: usize,
    /// Initially infected agents.
    pub x0: usize,
    pub runs: usize,
    pub seed: u64,
    #[serde(default)]
    pub mode: AbmMode,
}

pub const MIN_RUNS: usize = 100;

impl AbmConfig {
    /// `n_agents` UEs in a disk sized so that their density is `lambda_u`.
    pub fn from_density(lambda_u: f64, n_agents: usize, r_i: f64, beta: f64, mu: f64) -> Result<Self> {
        if !(lambda_u > 0.0) {
            return Err(Error::parameter("lambda_u", format!("{lambda_u} must be positive")));
        }
        let radius = (n_agents as f64 / (lambda_u * PI)).sqrt();
        Ok(AbmConfig {
            n_agents,
            window: Window::Disk { radius },
            r_i,
            beta,
            mu,
            steps: 200,
            x0: 5,
            runs: MIN_RUNS,
            seed: 1,
            mode: AbmMode::RateDriven,
        })
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("beta", self.beta), ("mu", self.mu)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::parameter(name, format!("probability {p} is outside [0, 1]")));
            }
        }
        if !(self.r_i > 0.0) {
            return Err(Error::parameter("r_i", format!("{} must be positive", self.r_i)));
        }
        if self.x0 > self.n_agents {
            return Err(Error::parameter("x0", format!("{} exceeds the population {}", self.x0, self.n_agents)));
        }
        if self.steps == 0 {
            return Err(Error::parameter("steps", "at least one step is required"));
        }
        if self.runs < MIN_RUNS {
            return Err(Error::parameter("runs", format!("{} is below the ensemble minimum {MIN_RUNS}", self.runs)));
        }
        if let AbmMode::SinrDriven(m) = &self.mode {
            if !(m.fit.shape > 0.0 && m.fit.scale > 0.0 && m.p_tx > 0.0 && m.sigma2 >= 0.0 && m.threshold >= 0.0) {
                return Err(Error::parameter("sinr model", "needs a positive fit and power, nonnegative noise and threshold"));
            }
        }
        self.window.validate()
    }
}

/// One random-walk epoch: uniform heading, uniform distance in [0, 10] m,
/// mirrored back into the window.
pub fn random_walk_step<R: Rng + ?Sized>(position: Point, window: &Window, rng: &mut R) -> Point {
    let heading = TAU * rng.random::<f64>();
    let distance = MAX_STEP * rng.random::<f64>();
    window.reflect(Point::new(position.x + distance * heading.cos(), position.y + distance * heading.sin()))
}

pub fn place_agents<R: Rng + ?Sized>(config: &AbmConfig, rng: &mut R) -> Vec<Agent> {
    (0..config.n_agents)
        .map(|i| Agent {
            position: config.window.sample_uniform(rng),
            state: if i < config.x0 { HealthState::Infected } else { HealthState::Susceptible },
        })
        .collect()
}

fn infected_neighbours(agents: &[Agent], i: usize, r_i: f64) -> impl Iterator<Item = f64> + '_ {
    let me = agents[i].position;
    agents
        .iter()
        .enumerate()
        .filter(move |(j, a)| *j != i && a.is_infected())
        .map(move |(_, a)| a.position.distance(&me))
        .filter(move |&d| d <= r_i)
}

pub fn counts(agents: &[Agent]) -> (usize, usize) {
    let x = agents.iter().filter(|a| a.is_infected()).count();
    (agents.len() - x, x)
}

/// Advances every agent by one epoch and returns the new (S, X).
///
/// Transitions are computed from the current state before any is applied.
/// In rate-driven mode each agent consumes exactly one uniform `u` from
/// `events`: an infected agent recovers iff u < μ, a susceptible one with n
/// infected contacts is infected iff u > (1 − β)ⁿ. While μ + 1 − (1 − β)ⁿ ≤ 1
/// this coupling makes X monotone in β pathwise. Movement draws come only from
/// `movement`, so trajectories do not depend on health states.
pub fn abm_step<M: Rng + ?Sized, E: Rng + ?Sized>(
    agents: &mut [Agent],
    config: &AbmConfig,
    movement: &mut M,
    events: &mut E,
) -> Result<(usize, usize)> {
    let next: Vec<HealthState> = match &config.mode {
        AbmMode::RateDriven => (0..agents.len())
            .map(|i| {
                let u: f64 = events.random();
                let infected = if agents[i].is_infected() {
                    u >= config.mu
                } else {
                    let n = infected_neighbours(agents, i, config.r_i).count() as i32;
                    n > 0 && u > (1.0 - config.beta).powi(n)
                };
                if infected { HealthState::Infected } else { HealthState::Susceptible }
            })
            .collect(),
        AbmMode::SinrDriven(model) => {
            let signal = Gamma::new(model.fit.shape, model.fit.scale)
                .map_err(|e| Error::parameter("sinr model", e.to_string()))?;
            (0..agents.len())
                .map(|i| {
                    let s0 = signal.sample(events);
                    let background = if model.background.is_empty() {
                        0.0
                    } else {
                        model.background[events.random_range(0..model.background.len())]
                    };
                    let near: f64 = infected_neighbours(agents, i, config.r_i)
                        .map(|d| {
                            let fade: f64 = Exp1.sample(events);
                            model.c * d.max(1.0).powf(-model.alpha) * fade
                        })
                        .sum();
                    let sinr = model.p_tx * s0 / (model.p_tx * (background + near) + model.sigma2);
                    if sinr < model.threshold { HealthState::Infected } else { HealthState::Susceptible }
                })
                .collect()
        }
    };
    for (agent, state) in agents.iter_mut().zip(next) {
        agent.state = state;
        agent.position = random_walk_step(agent.position, &config.window, movement);
    }
    Ok(counts(agents))
}

fn run_rngs(seed: u64, run: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut movement = ChaCha8Rng::seed_from_u64(seed);
    movement.set_stream(2 * run);
    let mut events = ChaCha8Rng::seed_from_u64(seed);
    events.set_stream(2 * run + 1);
    (movement, events)
}

/// Infected count after each step of one run, starting with the initial count.
pub fn run_abm_single(config: &AbmConfig, run: u64) -> Result<Vec<usize>> {
    let (mut movement, mut events) = run_rngs(config.seed, run);
    let mut agents = place_agents(config, &mut movement);
    let mut xs = Vec::with_capacity(config.steps + 1);
    xs.push(counts(&agents).1);
    for _ in 0..config.steps {
        xs.push(abm_step(&mut agents, config, &mut movement, &mut events)?.1);
    }
    Ok(xs)
}

/// Ensemble means over `config.runs` independent runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbmSeries {
    pub t: Vec<usize>,
    pub mean_s: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub stderr_x: Vec<f64>,
}

impl AbmSeries {
    pub fn final_x(&self) -> f64 {
        *self.mean_x.last().expect("series has at least the initial point")
    }

    pub fn initial_x(&self) -> f64 {
        self.mean_x[0]
    }
}

pub fn run_abm(config: &AbmConfig) -> Result<AbmSeries> {
    config.validate()?;
    let runs = crate::par_map(config.runs, |run| run_abm_single(config, run as u64));
    let runs: Vec<Vec<usize>> = runs.into_iter().collect::<Result<_>>()?;
    let n = runs.len() as f64;
    let len = config.steps + 1;
    let mut mean_x = vec![0.0; len];
    let mut stderr_x = vec![0.0; len];
    for t in 0..len {
        let m = runs.iter().map(|r| r[t] as f64).sum::<f64>() / n;
        let var = runs.iter().map(|r| (r[t] as f64 - m).powi(2)).sum::<f64>() / (n - 1.0);
        mean_x[t] = m;
        stderr_x[t] = (var / n).sqrt();
    }
    Ok(AbmSeries {
        t: (0..len).collect(),
        mean_s: mean_x.iter().map(|x| config.n_agents as f64 - x).collect(),
        mean_x,
        stderr_x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn base(beta: f64, mu: f64) -> AbmConfig {
        AbmConfig {
            steps: 50,
            ..AbmConfig::from_density(5e-3, 100, 10.0, beta, mu).unwrap()
        }
    }

    #[test]
    fn zero_step_draw_stays_put() {
        struct Zero;
        impl rand::RngCore for Zero {
            fn next_u32(&mut self) -> u32 {
                0
            }
            fn next_u64(&mut self) -> u64 {
                0
            }
            fn fill_bytes(&mut self, dst: &mut [u8]) {
                dst.fill(0);
            }
        }
        let p = Point::new(3.0, -2.0);
        assert_eq!(random_walk_step(p, &Window::default(), &mut Zero), p);
    }

    #[test]
    fn step_length_and_mean_square() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let window = Window::Disk { radius: 1e9 };
        let n = 1_000_000;
        let mut msd = 0.0;
        for _ in 0..n {
            let q = random_walk_step(Point::ORIGIN, &window, &mut rng);
            let d2 = q.x * q.x + q.y * q.y;
            assert!(d2 <= MAX_STEP * MAX_STEP * (1.0 + 1e-12));
            msd += d2;
        }
        msd /= n as f64;
        assert!((msd / (100.0 / 3.0) - 1.0).abs() < 0.01, "{msd}");
    }

    #[test]
    fn no_infected_stays_clean() {
        let config = AbmConfig { x0: 0, ..base(0.5, 0.1) };
        let series = run_abm(&config).unwrap();
        assert!(series.mean_x.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn no_transmission_only_declines() {
        let config = AbmConfig { x0: 30, ..base(0.0, 0.05) };
        for run in 0..10 {
            let xs = run_abm_single(&config, run).unwrap();
            assert!(xs.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn crowded_certain_infection() {
        // every agent inside one contact disk
        let config = AbmConfig {
            window: Window::Disk { radius: 2.0 },
            r_i: 10.0,
            x0: 1,
            ..base(1.0, 0.0)
        };
        let xs = run_abm_single(&config, 0).unwrap();
        assert_eq!(xs[1], config.n_agents);
    }

    #[test]
    fn rejects_small_ensembles() {
        assert!(run_abm(&AbmConfig { runs: 10, ..base(0.1, 0.1) }).is_err());
        assert!(run_abm(&AbmConfig { beta: 1.5, ..base(0.1, 0.1) }).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let config = base(0.05, 0.02);
        assert_eq!(run_abm(&config).unwrap(), run_abm(&config).unwrap());
    }

    #[test]
    fn sinr_driven_mode_runs() {
        let model = SinrModel {
            fit: GammaFit { shape: 6.0, scale: 6e-11 },
            p_tx: 1e-3,
            sigma2: 1e-12,
            threshold: 1e-2,
            c: 6.3326e-5,
            alpha: 3.0,
            background: vec![0.0, 1e-9, 3e-8],
        };
        let config = AbmConfig { mode: AbmMode::SinrDriven(model), ..base(0.0, 0.0) };
        let series = run_abm(&config).unwrap();
        assert!(series.mean_x.iter().zip(&series.mean_s).all(|(x, s)| (x + s - 100.0).abs() < 1e-9));
        assert!(series.final_x() > 0.0 && series.final_x() < 100.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn population_is_conserved(beta in 0.0f64..1.0, mu in 0.0f64..1.0, x0 in 0usize..100, run in 0u64..1000) {
            let config = AbmConfig { x0, ..base(beta, mu) };
            let (mut movement, mut events) = run_rngs(config.seed, run);
            let mut agents = place_agents(&config, &mut movement);
            for _ in 0..20 {
                let (s, x) = abm_step(&mut agents, &config, &mut movement, &mut events).unwrap();
                prop_assert_eq!(s + x, 100);
                prop_assert!(agents.iter().all(|a| config.window.contains(&a.position)));
            }
        }

        #[test]
        fn zero_is_absorbing(beta in 0.0f64..1.0, mu in 0.01f64..1.0, run in 0u64..1000) {
            let config = AbmConfig { x0: 3, ..base(beta, mu) };
            let xs = run_abm_single(&config, run).unwrap();
            if let Some(first) = xs.iter().position(|&x| x == 0) {
                prop_assert!(xs[first..].iter().all(|&x| x == 0));
            }
        }

        #[test]
        fn more_infection_never_lowers_x(
            beta in 0.0f64..0.05,
            bump in 0.0f64..0.05,
            mu in 0.0f64..0.3,
            run in 0u64..1000,
        ) {
            // 100 agents at density 5e-3 keep neighbour counts small enough that μ + p ≤ 1
            let lo = run_abm_single(&base(beta, mu), run).unwrap();
            let hi = run_abm_single(&base(beta + bump, mu), run).unwrap();
            prop_assert!(lo.iter().zip(&hi).all(|(a, b)| a <= b));
        }
    }
}
