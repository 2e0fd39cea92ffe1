//! Population training over terrain libraries.
//!
//! The optimizer is a cross-entropy method over skill vectors: sample
//! candidates around the current mean, score them by goals reached across the
//! library at current ladder levels, refit to the elites. A per-phase step
//! cap keeps growth incremental, which is what makes environment difficulty
//! matter: a course far beyond the cap teaches nothing this phase.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compile::{compile, CompileError, GridConfig};
use crate::curriculum::{level_to_difficulty, CurriculumState, LadderConfig};
use crate::dsl::TerrainProgram;
use crate::sim::{SimConfig, Simulator, SkillVector, BEAM_WORST, SKILL_MAX};
use crate::validate::{auto_fix, FixConfig};

/// Component order used by spread and step-cap arrays:
/// climb, descend, jump, slope, beam.
pub const COMPONENT_NAMES: [&str; 5] = ["climb", "descend", "jump", "slope", "beam"];

const COMPONENT_LO: [f64; 5] = [0.0, 0.0, 0.0, 0.0, SKILL_MAX.beam];
const COMPONENT_HI: [f64; 5] = [
    SKILL_MAX.climb,
    SKILL_MAX.descend,
    SKILL_MAX.jump,
    SKILL_MAX.slope,
    BEAM_WORST,
];

/// A trainable policy: the skill mean plus its search distribution state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillPolicy {
    pub mean: SkillVector,
    /// Per-component sampling standard deviation.
    pub spread: [f64; 5],
    /// Per-component maximum change per training phase.
    pub step_cap: [f64; 5],
}

impl Default for SkillPolicy {
    fn default() -> Self {
        SkillPolicy {
            mean: SkillVector {
                climb: 0.15,
                descend: 0.25,
                jump: 0.10,
                slope: 0.15,
                beam: BEAM_WORST,
            },
            spread: [0.08; 5],
            step_cap: [0.15; 5],
        }
    }
}

/// Cross-entropy training knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CemConfig {
    /// Rollout evaluations allowed per training phase.
    pub budget: usize,
    /// Candidates sampled per generation.
    pub candidates: usize,
    /// Upper bound on generations per phase (the budget may stop earlier).
    pub max_generations: usize,
    /// Fraction of candidates refit as elites.
    pub elite_frac: f64,
    /// Spread floor, keeps the search from collapsing.
    pub min_spread: f64,
}

impl Default for CemConfig {
    fn default() -> Self {
        CemConfig {
            budget: 2000,
            candidates: 32,
            max_generations: 8,
            elite_frac: 0.25,
            min_spread: 0.02,
        }
    }
}

/// Mean episode outcome on one terrain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfTriple {
    pub goals: f64,
    pub steps: f64,
    pub edge_violations: f64,
}

/// Before/after training outcome for one library terrain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerrainTrainRecord {
    pub terrain: String,
    pub before: PerfTriple,
    pub after: PerfTriple,
    pub level_before: u32,
    pub level_after: u32,
}

/// Training statistics for one agent phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    pub per_terrain: Vec<TerrainTrainRecord>,
    pub evaluations_used: usize,
}

/// Mean goals reached over a proxy set, all difficulty levels included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProxyScore(pub f64);

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("training library is empty")]
    EmptyLibrary,
    #[error(transparent)]
    Compile(#[from] CompileError),
}

/// A library terrain compiled (and auto-fixed) at every ladder level.
pub struct TrainingTerrain {
    pub name: String,
    pub doc: String,
    /// Simulators indexed by level - 1.
    pub sims: Vec<Arc<Simulator>>,
}

/// The set of courses one agent trains on.
pub struct TrainingLibrary {
    pub terrains: Vec<TrainingTerrain>,
    pub levels: u32,
}

impl TrainingLibrary {
    pub fn len(&self) -> usize {
        self.terrains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terrains.is_empty()
    }
}

/// Compile a library through the training pipeline (compile then auto-fix)
/// at every ladder level.
pub fn build_training_library(
    programs: &[TerrainProgram],
    grid: &GridConfig,
    fix: &FixConfig,
    sim_cfg: &SimConfig,
    ladder: &LadderConfig,
) -> Result<TrainingLibrary, TrainError> {
    let terrains = programs
        .par_iter()
        .map(|p| -> Result<TrainingTerrain, TrainError> {
            let mut sims = Vec::with_capacity(ladder.levels as usize);
            for level in 1..=ladder.levels {
                let t = compile(p, level_to_difficulty(level), grid)?;
                let (fixed, _) = auto_fix(&t, fix);
                sims.push(Arc::new(Simulator::new(Arc::new(fixed), *sim_cfg)));
            }
            Ok(TrainingTerrain {
                name: p.name.clone(),
                doc: p.doc.clone(),
                sims,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TrainingLibrary {
        terrains,
        levels: ladder.levels,
    })
}

fn clamp_component(i: usize, v: f64, window_center: [f64; 5], cap: [f64; 5]) -> f64 {
    let lo = COMPONENT_LO[i].max(window_center[i] - cap[i]);
    let hi = COMPONENT_HI[i].min(window_center[i] + cap[i]);
    v.clamp(lo, hi)
}

/// Mean episode outcome over every ladder level of one terrain: the
/// level-independent "performance on this terrain" measure reported in
/// training stats and generator feedback.
fn measure_all_levels(terrain: &TrainingTerrain, skills: &SkillVector) -> PerfTriple {
    let mut acc = PerfTriple {
        goals: 0.0,
        steps: 0.0,
        edge_violations: 0.0,
    };
    for sim in &terrain.sims {
        let r = sim.rollout(skills);
        acc.goals += r.goals_reached as f64;
        acc.steps += r.steps as f64;
        acc.edge_violations += r.edge_violations as f64;
    }
    let n = terrain.sims.len() as f64;
    PerfTriple {
        goals: acc.goals / n,
        steps: acc.steps / n,
        edge_violations: acc.edge_violations / n,
    }
}

/// Mean goals for a skill vector over every terrain at its current level.
fn score_at_levels(library: &TrainingLibrary, levels: &[u32], skills: &SkillVector) -> f64 {
    let total: f64 = library
        .terrains
        .iter()
        .zip(levels)
        .map(|(t, &lvl)| t.sims[(lvl - 1) as usize].rollout(skills).goals_reached as f64)
        .sum();
    total / library.len() as f64
}

/// Mean goals over the whole library at all ladder levels.
fn library_score(library: &TrainingLibrary, skills: &SkillVector) -> f64 {
    let total: f64 = library
        .terrains
        .par_iter()
        .map(|t| {
            t.sims
                .iter()
                .map(|sim| sim.rollout(skills).goals_reached as f64)
                .sum::<f64>()
        })
        .sum();
    total / (library.len() as f64 * library.levels as f64)
}

/// One cross-entropy training phase for one agent.
///
/// Ladder states advance from the incumbent mean's rollouts between
/// generations. The returned policy is never worse than the input on its own
/// library (scored over all levels); with no training signal the input comes
/// back unchanged.
pub fn train_agent(
    policy: &SkillPolicy,
    library: &TrainingLibrary,
    ladders: &mut [CurriculumState],
    cem: &CemConfig,
    ladder_cfg: &LadderConfig,
    rng: &mut impl Rng,
) -> Result<(SkillPolicy, TrainStats), TrainError> {
    if library.is_empty() {
        return Err(TrainError::EmptyLibrary);
    }
    assert_eq!(ladders.len(), library.len(), "one ladder state per terrain");
    let j = library.len();
    let k = cem.candidates.max(2);
    let elite_n = ((k as f64 * cem.elite_frac).ceil() as usize).clamp(1, k);

    let phase_start = policy.mean.clamped();
    let mut mean = phase_start.components();
    let mut spread = policy.spread;
    let mut evals = 0usize;

    let levels_now = |l: &[CurriculumState]| -> Vec<u32> { l.iter().map(|s| s.level).collect() };
    let stats_cost = library.levels as usize * j;

    // Snapshot performance before any update: per-terrain means over all
    // ladder levels.
    let level_before: Vec<u32> = levels_now(ladders);
    let before: Vec<PerfTriple> = library
        .terrains
        .par_iter()
        .map(|t| measure_all_levels(t, &phase_start))
        .collect();
    evals += stats_cost;

    let gen_cost = k * j + j;
    let mut generations_run = 0usize;

    while generations_run < cem.max_generations
        && evals + gen_cost + stats_cost <= cem.budget
    {
        // Sample candidates serially (RNG order fixed), score them in
        // parallel (pure rollouts).
        let mut candidates: Vec<SkillVector> = Vec::with_capacity(k);
        for _ in 0..k {
            let mut c = [0.0; 5];
            for i in 0..5 {
                let dist = Normal::new(mean[i], spread[i].max(0.0)).expect("finite parameters");
                c[i] = clamp_component(i, dist.sample(rng), phase_start.components(), policy.step_cap);
            }
            candidates.push(SkillVector::from_components(c));
        }
        let current_levels = levels_now(ladders);
        let scores: Vec<f64> = candidates
            .par_iter()
            .map(|c| score_at_levels(library, &current_levels, c))
            .collect();
        evals += k * j;

        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let elites = &order[..elite_n];

        for i in 0..5 {
            let m: f64 = elites.iter().map(|&e| candidates[e].components()[i]).sum::<f64>()
                / elite_n as f64;
            let var: f64 = elites
                .iter()
                .map(|&e| {
                    let v = candidates[e].components()[i] - m;
                    v * v
                })
                .sum::<f64>()
                / elite_n as f64;
            mean[i] = clamp_component(i, m, phase_start.components(), policy.step_cap);
            spread[i] = var.sqrt().max(cem.min_spread);
        }

        // Ladder updates from the incumbent mean.
        let incumbent = SkillVector::from_components(mean);
        let goals_per_terrain: Vec<f64> = library
            .terrains
            .par_iter()
            .zip(levels_now(ladders))
            .map(|(t, lvl)| t.sims[(lvl - 1) as usize].rollout(&incumbent).goals_reached as f64)
            .collect();
        for (st, goals) in ladders.iter_mut().zip(goals_per_terrain) {
            st.update(goals, ladder_cfg, rng);
        }
        evals += j;
        generations_run += 1;
    }

    // Keep whichever of (entry policy, trained policy) scores better on the
    // library over all levels; ties keep the entry policy. The per-terrain
    // measurements double as the after-training stats.
    let init_score = before.iter().map(|p| p.goals).sum::<f64>() / j as f64;
    let (final_policy, after) = if generations_run > 0 {
        let cem_mean = SkillVector::from_components(mean);
        let cem_triples: Vec<PerfTriple> = library
            .terrains
            .par_iter()
            .map(|t| measure_all_levels(t, &cem_mean))
            .collect();
        evals += stats_cost;
        let cem_score = cem_triples.iter().map(|p| p.goals).sum::<f64>() / j as f64;
        if cem_score > init_score {
            (
                SkillPolicy {
                    mean: cem_mean,
                    spread,
                    step_cap: policy.step_cap,
                },
                cem_triples,
            )
        } else {
            (
                SkillPolicy {
                    mean: phase_start,
                    spread: policy.spread,
                    step_cap: policy.step_cap,
                },
                before.clone(),
            )
        }
    } else {
        (
            SkillPolicy {
                mean: phase_start,
                spread: policy.spread,
                step_cap: policy.step_cap,
            },
            before.clone(),
        )
    };
    let level_after: Vec<u32> = levels_now(ladders);

    debug_assert!(evals <= cem.budget || generations_run == 0);
    let per_terrain = library
        .terrains
        .iter()
        .enumerate()
        .map(|(i, t)| TerrainTrainRecord {
            terrain: t.name.clone(),
            before: before[i],
            after: after[i],
            level_before: level_before[i],
            level_after: level_after[i],
        })
        .collect();

    Ok((
        final_policy,
        TrainStats {
            per_terrain,
            evaluations_used: evals,
        },
    ))
}

/// Evaluate several policies against a proxy set in one pass.
///
/// Terrains compile through the training pipeline, every ladder level
/// included; compilation is parallel per program and nothing is retained.
pub fn evaluate_proxy_batch(
    policies: &[SkillPolicy],
    proxy: &[TerrainProgram],
    grid: &GridConfig,
    fix: &FixConfig,
    sim_cfg: &SimConfig,
    ladder: &LadderConfig,
) -> Result<Vec<ProxyScore>, TrainError> {
    if proxy.is_empty() || policies.is_empty() {
        return Ok(vec![ProxyScore(0.0); policies.len()]);
    }
    let sums: Vec<Vec<f64>> = proxy
        .par_iter()
        .map(|p| -> Result<Vec<f64>, TrainError> {
            let mut per_policy = vec![0.0; policies.len()];
            for level in 1..=ladder.levels {
                let t = compile(p, level_to_difficulty(level), grid)?;
                let (fixed, _) = auto_fix(&t, fix);
                let sim = Simulator::new(Arc::new(fixed), *sim_cfg);
                for (pi, policy) in policies.iter().enumerate() {
                    per_policy[pi] += sim.rollout(&policy.mean).goals_reached as f64;
                }
            }
            Ok(per_policy)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let denom = (proxy.len() * ladder.levels as usize) as f64;
    Ok((0..policies.len())
        .map(|pi| ProxyScore(sums.iter().map(|s| s[pi]).sum::<f64>() / denom))
        .collect())
}

/// Mean goals reached by one policy over the proxy set at all levels.
pub fn evaluate_proxy(
    policy: &SkillPolicy,
    proxy: &[TerrainProgram],
    grid: &GridConfig,
    fix: &FixConfig,
    sim_cfg: &SimConfig,
    ladder: &LadderConfig,
) -> Result<ProxyScore, TrainError> {
    Ok(evaluate_proxy_batch(
        std::slice::from_ref(policy),
        proxy,
        grid,
        fix,
        sim_cfg,
        ladder,
    )?[0])
}

/// Pick a policy index by rank-weighted lottery: policies sort by score
/// descending (ties to the lower index) and rank r wins with probability
/// `weights[r]`.
pub fn soft_select(scores: &[f64], weights: &[f64], rng: &mut impl Rng) -> usize {
    assert!(scores.len() >= 2, "selection needs at least two policies");
    let wsum: f64 = weights.iter().sum();
    assert!(
        (wsum - 1.0).abs() < 1e-9,
        "selection weights must sum to 1, got {wsum}"
    );
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let draw: f64 = rng.gen();
    let mut acc = 0.0;
    for (rank, &idx) in order.iter().enumerate() {
        acc += weights.get(rank).copied().unwrap_or(0.0);
        if draw < acc {
            return idx;
        }
    }
    order[0]
}

/// The default selection weights: best 0.75, runner-up 0.25, rest zero.
pub fn default_selection_weights(n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n.max(2)];
    w[0] = 0.75;
    w[1] = 0.25;
    w
}
