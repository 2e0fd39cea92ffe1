//! Environment generation and the agent-environment co-evolution loop.
//!
//! Every candidate program passes the admission gate (compile, auto-fix,
//! check at all ten difficulties) before it can enter a training library.
//! Invalid candidates are re-sampled up to the attempt limit and finally
//! replaced by a mock-generated fallback, so a flaky remote endpoint can slow
//! a run down but not wedge it.

pub mod mock;
pub mod prompt;
pub mod remote;

use std::collections::HashSet;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::{BenchmarkEvaluator, BenchmarkTable};
use crate::compile::{compile, terrain_stats, CompileError};
use crate::config::{Ablation, GeneratorChoice, RunConfig};
use crate::curriculum::CurriculumState;
use crate::derive_rng;
use crate::dsl::{format_program, parse_program, TerrainProgram};
use crate::store::{make_run_id, RunStore, StoreError};
use crate::train::{
    build_training_library, default_selection_weights, evaluate_proxy_batch, soft_select,
    train_agent, SkillPolicy, TrainError, TrainStats,
};
use crate::validate::{auto_fix, check_program_fixed, default_difficulty_samples};

pub use mock::{mock_generate, mock_mutate, random_program, MockGenerator, MockMode};
pub use prompt::{
    build_prompt, extract_fenced_block, ChatMessage, FeedbackBundle, GeneratorRequest,
    RequestKind, NO_FEEDBACK_INSTRUCTION,
};
pub use remote::{RemoteGenerator, API_KEY_VAR};

/// The built-in in-context example program.
pub const DEFAULT_INCONTEXT: &str = include_str!("../../assets/corpus/incontext_mixed.terrain");

// Seed-derivation purposes.
const TAG_INIT: u64 = 0x11;
const TAG_EVOLVE: u64 = 0x22;
const TAG_PARTITION: u64 = 0x33;
const TAG_SELECT: u64 = 0x44;
const TAG_RESAMPLE: u64 = 0x55;

#[derive(Debug, thiserror::Error)]
pub enum GeneratorError {
    #[error("generator exhausted after {attempts} attempts: {last_error}")]
    Exhausted { attempts: u32, last_error: String },
    #[error("authentication rejected with status {status}")]
    Auth { status: u16 },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    BadResponse(String),
}

/// Raw generator output before admission.
pub struct GeneratorOutput {
    /// DSL source text.
    pub text: String,
    /// Full conversation including the response, for the transcript.
    pub exchange: Vec<ChatMessage>,
    /// Generation attempts the backend spent internally (parse re-prompts).
    pub attempts: u32,
}

/// A pluggable environment generator.
pub trait EnvironmentGenerator: Sync + Send {
    fn label(&self) -> &'static str;
    fn generate(
        &self,
        req: &GeneratorRequest,
        rng: &mut ChaCha8Rng,
    ) -> Result<GeneratorOutput, GeneratorError>;
}

/// Verbatim record of one generation slot, persisted for auditability.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Transcript {
    pub slot: String,
    pub generator: String,
    pub request_kind: String,
    pub messages: Vec<ChatMessage>,
    pub response_text: String,
    /// Total candidate programs drawn for this slot.
    pub attempts: u32,
    pub accepted: bool,
    /// The evolved program echoed its parent unchanged.
    pub unchanged: bool,
    /// The slot fell back to the mock generator.
    pub fallback: bool,
    /// Validity failures encountered along the way.
    pub rejections: Vec<String>,
}

/// Outcome of a batch of generation slots.
pub struct GenerationBatch {
    pub programs: Vec<TerrainProgram>,
    pub transcripts: Vec<Transcript>,
    /// Candidates drawn across all slots.
    pub attempts_total: u32,
    /// Slots filled by an admitted (non-fallback) candidate.
    pub admitted: u32,
}

impl GenerationBatch {
    /// Admitted candidates per attempt; the generator quality metric.
    pub fn pass_rate(&self) -> f64 {
        if self.attempts_total == 0 {
            return 1.0;
        }
        self.admitted as f64 / self.attempts_total as f64
    }
}

enum Fallback<'a> {
    /// Fresh mock sample (initial generation).
    Fresh,
    /// Mock mutation of the parent, then the parent itself.
    Parent(&'a TerrainProgram),
}

/// Run one generation slot to admission.
fn fill_slot(
    gen: &dyn EnvironmentGenerator,
    req: &GeneratorRequest,
    cfg: &RunConfig,
    rng: &mut ChaCha8Rng,
    fallback: Fallback<'_>,
    slot_name: String,
) -> Result<(TerrainProgram, Transcript), GeneratorError> {
    let samples = default_difficulty_samples();
    let mut rejections = Vec::new();
    let mut attempts = 0u32;
    let mut last_exchange = build_prompt(req);
    let mut last_text = String::new();

    for _ in 0..cfg.max_attempts.max(1) {
        let output = match gen.generate(req, rng) {
            Ok(o) => o,
            Err(e @ GeneratorError::Auth { .. }) => return Err(e),
            Err(e @ GeneratorError::Exhausted { .. }) => return Err(e),
            Err(e @ GeneratorError::Transport(_)) => return Err(e),
            Err(GeneratorError::BadResponse(msg)) => {
                attempts += 1;
                rejections.push(format!("bad response: {msg}"));
                continue;
            }
        };
        attempts += output.attempts.max(1);
        last_exchange = output.exchange;
        last_text = output.text.clone();

        let program = match parse_program(&output.text) {
            Ok(p) => p,
            Err(e) => {
                rejections.push(format!("parse: {e}"));
                continue;
            }
        };
        let report = check_program_fixed(&program, &cfg.limits, &cfg.fix, &cfg.grid, &samples);
        if report.passed {
            let unchanged = req
                .parent_program
                .as_deref()
                .map(|parent| {
                    parse_program(parent)
                        .map(|p| format_program(&p) == format_program(&program))
                        .unwrap_or(false)
                })
                .unwrap_or(false);
            let transcript = Transcript {
                slot: slot_name,
                generator: gen.label().to_string(),
                request_kind: kind_name(req.kind).to_string(),
                messages: last_exchange,
                response_text: output.text,
                attempts,
                accepted: true,
                unchanged,
                fallback: false,
                rejections,
            };
            return Ok((program, transcript));
        }
        rejections.push(format!(
            "check failed: {}",
            report
                .violations
                .iter()
                .map(|v| v.message.clone())
                .collect::<Vec<_>>()
                .join("; ")
        ));
    }

    // Validity attempts exhausted: guarantee progress with a mock fallback.
    let program = match fallback {
        Fallback::Fresh => loop {
            let candidate = mock::mock_generate(&cfg.grid, rng);
            if check_program_fixed(&candidate, &cfg.limits, &cfg.fix, &cfg.grid, &samples).passed {
                break candidate;
            }
        },
        Fallback::Parent(parent) => {
            let mut chosen = None;
            for _ in 0..8 {
                let candidate =
                    mock::mock_mutate(parent, req.feedback.as_ref(), req.no_feedback, &cfg.grid, rng);
                if check_program_fixed(&candidate, &cfg.limits, &cfg.fix, &cfg.grid, &samples)
                    .passed
                {
                    chosen = Some(candidate);
                    break;
                }
            }
            // The parent was admitted once, so it stays admissible.
            chosen.unwrap_or_else(|| parent.clone())
        }
    };
    let unchanged = matches!(&fallback, Fallback::Parent(p) if format_program(p) == format_program(&program));
    let transcript = Transcript {
        slot: slot_name,
        generator: format!("{}+mock_fallback", gen.label()),
        request_kind: kind_name(req.kind).to_string(),
        messages: last_exchange,
        response_text: if last_text.is_empty() {
            format_program(&program)
        } else {
            last_text
        },
        attempts,
        accepted: false,
        unchanged,
        fallback: true,
        rejections,
    };
    Ok((program, transcript))
}

fn kind_name(kind: RequestKind) -> &'static str {
    match kind {
        RequestKind::Initial => "initial",
        RequestKind::Evolve => "evolve",
    }
}

/// Run `n` independent slots with at most `cap` in flight. Each slot's
/// randomness derives from its index, so results do not depend on
/// scheduling.
fn run_slots<T: Send, F>(n: usize, cap: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T + Sync,
{
    if n == 0 {
        return Vec::new();
    }
    let results: Vec<Mutex<Option<T>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = cap.clamp(1, n);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                *results[i].lock().unwrap() = Some(f(i));
            });
        }
    });
    results
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("slot completed"))
        .collect()
}

/// Sample `count` admitted programs from the generator.
///
/// `sequential` switches to one-at-a-time generation conditioned on the
/// docstrings of everything generated so far (the diversity mode).
pub fn generate_initial(
    gen: &dyn EnvironmentGenerator,
    incontext: &str,
    count: usize,
    cfg: &RunConfig,
    iteration_tag: u64,
    sequential: bool,
) -> Result<GenerationBatch, GeneratorError> {
    let make_request = |prior_docs: Vec<String>| {
        let mut req = GeneratorRequest::initial(incontext, cfg.temperature, cfg.max_attempts);
        req.prior_docs = prior_docs;
        req
    };

    let outcomes: Vec<Result<(TerrainProgram, Transcript), GeneratorError>> = if sequential {
        let mut docs: Vec<String> = Vec::new();
        let mut out = Vec::with_capacity(count);
        for slot in 0..count {
            let mut rng = derive_rng(cfg.seed, &[TAG_INIT, iteration_tag, slot as u64]);
            let req = make_request(docs.clone());
            let result = fill_slot(
                gen,
                &req,
                cfg,
                &mut rng,
                Fallback::Fresh,
                format!("init_{slot:03}"),
            );
            if let Ok((p, _)) = &result {
                docs.push(p.doc.clone());
            }
            out.push(result);
        }
        out
    } else {
        run_slots(count, cfg.inflight_cap, |slot| {
            let mut rng = derive_rng(cfg.seed, &[TAG_INIT, iteration_tag, slot as u64]);
            let req = make_request(Vec::new());
            fill_slot(
                gen,
                &req,
                cfg,
                &mut rng,
                Fallback::Fresh,
                format!("init_{slot:03}"),
            )
        })
    };

    let mut programs = Vec::with_capacity(count);
    let mut transcripts = Vec::with_capacity(count);
    let mut attempts_total = 0;
    let mut admitted = 0;
    for outcome in outcomes {
        let (p, t) = outcome?;
        attempts_total += t.attempts;
        if t.accepted {
            admitted += 1;
        }
        programs.push(p);
        transcripts.push(t);
    }
    Ok(GenerationBatch {
        programs,
        transcripts,
        attempts_total,
        admitted,
    })
}

/// Evolve one parent program into a validated variation.
pub fn evolve_env(
    gen: &dyn EnvironmentGenerator,
    parent: &TerrainProgram,
    feedback: Option<FeedbackBundle>,
    incontext: &str,
    cfg: &RunConfig,
    rng: &mut ChaCha8Rng,
    slot_name: String,
) -> Result<(TerrainProgram, Transcript), GeneratorError> {
    let no_feedback = matches!(cfg.ablation, Some(Ablation::NoFeedback));
    let req = GeneratorRequest::evolve(
        incontext,
        &format_program(parent),
        feedback,
        no_feedback,
        cfg.temperature,
        cfg.max_attempts,
    );
    fill_slot(gen, &req, cfg, rng, Fallback::Parent(parent), slot_name)
}

/// Randomly split programs into `n` libraries of equal size.
pub fn partition_libraries(
    mut programs: Vec<TerrainProgram>,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<TerrainProgram>> {
    use rand::seq::SliceRandom;
    programs.shuffle(rng);
    let per = programs.len() / n.max(1);
    let mut out = Vec::with_capacity(n);
    for chunk in programs.chunks(per.max(1)).take(n) {
        out.push(chunk.to_vec());
    }
    out
}

/// Before/after goals for one terrain, the learning-progress unit.
#[derive(Debug, Clone)]
pub struct TerrainHistoryEntry {
    pub program: TerrainProgram,
    pub goals_before: f64,
    pub goals_after: f64,
}

/// Draw a library of `j` terrains with probability proportional to learning
/// progress, floored at epsilon. Part of the resampling mechanism that the
/// final method disables.
pub fn resample_by_learning_progress(
    history: &[TerrainHistoryEntry],
    j: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<TerrainProgram> {
    const EPSILON: f64 = 0.01;
    if history.is_empty() {
        return Vec::new();
    }
    let weights: Vec<f64> = history
        .iter()
        .map(|h| (h.goals_after - h.goals_before).max(EPSILON))
        .collect();
    let total: f64 = weights.iter().sum();
    (0..j)
        .map(|_| {
            let mut draw = rng.gen::<f64>() * total;
            for (h, &w) in history.iter().zip(&weights) {
                if draw < w {
                    return h.program.clone();
                }
                draw -= w;
            }
            history[history.len() - 1].program.clone()
        })
        .collect()
}

// --- the outer loop ---------------------------------------------------------

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("in-context example rejected: {0}")]
    Incontext(String),
}

/// One selection draw: which previous policy seeds the next agent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub agent: usize,
    pub source: usize,
    pub rank: usize,
    pub score: f64,
}

/// Per-iteration scalar record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationSummary {
    pub iteration: usize,
    pub benchmark_mean: f64,
    pub proxy_scores: Vec<f64>,
    pub best_agent: usize,
    pub pass_rate: f64,
    pub proxy_size: usize,
}

/// In-memory summary of a finished run; everything is also on disk.
#[derive(Debug)]
pub struct RunArtifacts {
    pub run_id: String,
    pub root: std::path::PathBuf,
    pub iterations: Vec<IterationSummary>,
    pub final_policy: SkillPolicy,
    pub final_benchmark: BenchmarkTable,
}

fn build_generator(cfg: &RunConfig) -> Box<dyn EnvironmentGenerator> {
    let mode = if matches!(cfg.ablation, Some(Ablation::RandomBaseline)) {
        MockMode::Random
    } else {
        MockMode::Standard
    };
    match cfg.generator {
        GeneratorChoice::Mock => Box::new(MockGenerator::new(mode, cfg.grid)),
        GeneratorChoice::Remote => {
            if matches!(cfg.ablation, Some(Ablation::RandomBaseline)) {
                // The random baseline never consults a model.
                Box::new(MockGenerator::new(MockMode::Random, cfg.grid))
            } else {
                Box::new(RemoteGenerator::new(cfg.remote.clone()))
            }
        }
    }
}

fn load_incontext(cfg: &RunConfig) -> Result<String, RunError> {
    let text = match &cfg.incontext_path {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| RunError::Incontext(format!("{}: {e}", path.display())))?,
        None => DEFAULT_INCONTEXT.to_string(),
    };
    let program =
        parse_program(&text).map_err(|e| RunError::Incontext(format!("parse: {e}")))?;
    let report = check_program_fixed(
        &program,
        &cfg.limits,
        &cfg.fix,
        &cfg.grid,
        &default_difficulty_samples(),
    );
    if !report.passed {
        return Err(RunError::Incontext(format!(
            "fails the validity check: {:?}",
            report.violations
        )));
    }
    Ok(text)
}

/// Execute a full co-evolution run, persisting artifacts under
/// `out_parent/<run_id>/`.
pub fn run_coevolution(cfg: &RunConfig, out_parent: &Path) -> Result<RunArtifacts, RunError> {
    let run_id = make_run_id(cfg);
    let store = RunStore::create(out_parent, &run_id)?;
    store.write_config(cfg)?;
    run_coevolution_into(cfg, store, run_id)
}

fn run_coevolution_into(
    cfg: &RunConfig,
    store: RunStore,
    run_id: String,
) -> Result<RunArtifacts, RunError> {
    match cfg.ablation {
        Some(Ablation::InitialOnly)
        | Some(Ablation::DiversityOnly)
        | Some(Ablation::FinalOnly)
        | Some(Ablation::Oracle) => run_fixed_set(cfg, store, run_id),
        _ => run_standard(cfg, store, run_id).map(|(artifacts, _)| artifacts),
    }
}

/// The full loop: generate, train a population, select, evolve.
/// Also returns the final iteration's libraries (the final-envs ablation
/// trains on them).
fn run_standard(
    cfg: &RunConfig,
    store: RunStore,
    run_id: String,
) -> Result<(RunArtifacts, Vec<Vec<TerrainProgram>>), RunError> {
    let generator = build_generator(cfg);
    let incontext = load_incontext(cfg)?;
    let bench = BenchmarkEvaluator::new(&cfg.grid, &cfg.sim)?;
    let n = cfg.agents.max(1);
    let j = cfg.library_size.max(1);

    // Initial libraries.
    let batch = generate_initial(generator.as_ref(), &incontext, n * j, cfg, 0, false)?;
    let mut pass_attempts = batch.attempts_total;
    let mut pass_admitted = batch.admitted;
    for t in &batch.transcripts {
        store.write_transcript(1, &t.slot, t)?;
    }
    let mut partition_rng = derive_rng(cfg.seed, &[TAG_PARTITION]);
    let mut libraries = partition_libraries(batch.programs, n, &mut partition_rng);
    // Evolved terrains inherit their parent's ladder position, so training
    // resumes at the difficulty frontier instead of re-climbing from level 1.
    let mut ladder_starts: Vec<Vec<u32>> = libraries.iter().map(|l| vec![1; l.len()]).collect();

    let mut policies: Vec<SkillPolicy> = vec![cfg.initial_policy.clone(); n];
    let mut proxy: Vec<TerrainProgram> = Vec::new();
    let mut proxy_seen: HashSet<String> = HashSet::new();
    let mut lp_history: Vec<TerrainHistoryEntry> = Vec::new();
    let mut iterations: Vec<IterationSummary> = Vec::new();
    let mut final_best: Option<SkillPolicy> = None;

    for t in 1..=cfg.iterations.max(1) {
        // Θ_proxy grows with every library ever used, deduplicated by text.
        for lib in &libraries {
            for p in lib {
                let text = format_program(p);
                if proxy_seen.insert(text) {
                    proxy.push(p.clone());
                }
            }
        }

        // Train the population in parallel; each agent owns an rng stream
        // seeded by seed XOR agent index.
        let results: Vec<Result<(SkillPolicy, TrainStats, Vec<CurriculumState>), TrainError>> =
            libraries
                .par_iter()
                .enumerate()
                .map(|(i, lib)| {
                    let library =
                        build_training_library(lib, &cfg.grid, &cfg.fix, &cfg.sim, &cfg.ladder)?;
                    let mut ladders: Vec<CurriculumState> = ladder_starts[i]
                        .iter()
                        .map(|&level| CurriculumState {
                            level: level.clamp(1, cfg.ladder.levels),
                            history: Vec::new(),
                        })
                        .collect();
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ i as u64);
                    let (policy, stats) = train_agent(
                        &policies[i],
                        &library,
                        &mut ladders,
                        &cfg.cem,
                        &cfg.ladder,
                        &mut rng,
                    )?;
                    Ok((policy, stats, ladders))
                })
                .collect();

        let mut trained: Vec<SkillPolicy> = Vec::with_capacity(n);
        let mut stats: Vec<TrainStats> = Vec::with_capacity(n);
        let mut ladders: Vec<Vec<CurriculumState>> = Vec::with_capacity(n);
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok((p, s, l)) => {
                    trained.push(p);
                    stats.push(s);
                    ladders.push(l);
                }
                Err(e) => {
                    // Flush what exists and flag the iteration.
                    for (k, lib) in libraries.iter().enumerate().take(i) {
                        store.write_library(t, k, lib)?;
                    }
                    store.mark_incomplete(t)?;
                    return Err(e.into());
                }
            }
        }

        for (i, lib) in libraries.iter().enumerate() {
            store.write_library(t, i, lib)?;
            store.write_train_stats(t, i, &stats[i])?;
            store.write_ladders(t, i, &ladders[i])?;
        }
        for (agent_stats, lib) in stats.iter().zip(&libraries) {
            for (rec, program) in agent_stats.per_terrain.iter().zip(lib) {
                lp_history.push(TerrainHistoryEntry {
                    program: program.clone(),
                    goals_before: rec.before.goals,
                    goals_after: rec.after.goals,
                });
            }
        }

        // Rank everyone on the union of everything.
        let scores = evaluate_proxy_batch(
            &trained, &proxy, &cfg.grid, &cfg.fix, &cfg.sim, &cfg.ladder,
        )?;
        let score_values: Vec<f64> = scores.iter().map(|s| s.0).collect();
        let best = argmax(&score_values);
        store.write_json(&format!("iter_{t}/proxy_scores.json"), &score_values)?;

        let bench_table = bench.evaluate(&trained[best]);
        let summary = IterationSummary {
            iteration: t,
            benchmark_mean: bench_table.mean_goals,
            proxy_scores: score_values.clone(),
            best_agent: best,
            pass_rate: if pass_attempts == 0 {
                1.0
            } else {
                pass_admitted as f64 / pass_attempts as f64
            },
            proxy_size: proxy.len(),
        };
        store.write_json(&format!("iter_{t}/iteration.json"), &summary)?;
        iterations.push(summary);
        pass_attempts = 0;
        pass_admitted = 0;

        if t == cfg.iterations {
            final_best = Some(trained[best].clone());
            // Selection still recorded for completeness of the tree.
            store.write_json(
                &format!("iter_{t}/selection.json"),
                &vec![SelectionRecord {
                    agent: 0,
                    source: best,
                    rank: 0,
                    score: score_values[best],
                }],
            )?;
            break;
        }

        // Soft-select an initialization for each next-iteration agent.
        let weights = default_selection_weights(n);
        let mut rank_of: Vec<usize> = (0..n).collect();
        rank_of.sort_by(|&a, &b| {
            score_values[b]
                .partial_cmp(&score_values[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut selections = Vec::with_capacity(n);
        let mut next_policies = Vec::with_capacity(n);
        for i in 0..n {
            let mut rng = derive_rng(cfg.seed, &[TAG_SELECT, t as u64, i as u64]);
            let source = if n >= 2 {
                soft_select(&score_values, &weights, &mut rng)
            } else {
                0
            };
            let rank = rank_of.iter().position(|&x| x == source).unwrap_or(0);
            selections.push(SelectionRecord {
                agent: i,
                source,
                rank,
                score: score_values[source],
            });
            next_policies.push(trained[source].clone());
        }
        store.write_json(&format!("iter_{t}/selection.json"), &selections)?;

        // Evolve the best policy's library independently for each agent.
        let parents = libraries[best].clone();
        let best_stats = stats[best].clone();
        let best_ladders = ladders[best].clone();
        let library_docs: Vec<String> = parents.iter().map(|p| p.doc.clone()).collect();

        let feedback_for = |jj: usize| -> Result<FeedbackBundle, RunError> {
            let rec = &best_stats.per_terrain[jj];
            let level = best_ladders[jj].level;
            let compiled = compile(
                &parents[jj],
                crate::curriculum::level_to_difficulty(level),
                &cfg.grid,
            )?;
            let (fixed, _) = auto_fix(&compiled, &cfg.fix);
            Ok(FeedbackBundle {
                terrain_stats: terrain_stats(&fixed),
                train_before: rec.before,
                train_after: rec.after,
                library_docs: library_docs.clone(),
            })
        };
        let feedbacks: Vec<FeedbackBundle> = (0..parents.len())
            .map(feedback_for)
            .collect::<Result<_, _>>()?;

        let resample_count = if cfg.resampling_enabled { j / 2 } else { 0 };
        let evolve_count = j - resample_count;

        let slot_results = run_slots(n * evolve_count, cfg.inflight_cap, |slot| {
            let agent = slot / evolve_count;
            let jj = slot % evolve_count;
            let mut rng = derive_rng(
                cfg.seed,
                &[TAG_EVOLVE, t as u64, agent as u64, jj as u64],
            );
            evolve_env(
                generator.as_ref(),
                &parents[jj],
                Some(feedbacks[jj].clone()),
                &incontext,
                cfg,
                &mut rng,
                format!("evolve_t{t}_a{agent}_s{jj:02}"),
            )
        });

        let mut next_libraries: Vec<Vec<TerrainProgram>> = vec![Vec::with_capacity(j); n];
        let mut next_starts: Vec<Vec<u32>> = vec![Vec::with_capacity(j); n];
        for (slot, result) in slot_results.into_iter().enumerate() {
            let agent = slot / evolve_count;
            let jj = slot % evolve_count;
            let (program, transcript) = result?;
            pass_attempts += transcript.attempts;
            if transcript.accepted {
                pass_admitted += 1;
            }
            store.write_transcript(t + 1, &transcript.slot, &transcript)?;
            next_libraries[agent].push(program);
            next_starts[agent].push(best_ladders[jj].level);
        }
        if resample_count > 0 {
            for (i, lib) in next_libraries.iter_mut().enumerate() {
                let mut rng =
                    derive_rng(cfg.seed, &[TAG_RESAMPLE, t as u64, i as u64]);
                let resampled =
                    resample_by_learning_progress(&lp_history, resample_count, &mut rng);
                next_starts[i].extend(std::iter::repeat(1).take(resampled.len()));
                lib.extend(resampled);
            }
        }

        libraries = next_libraries;
        ladder_starts = next_starts;
        policies = next_policies;
        let _ = &policies;
    }

    let final_policy = final_best.expect("at least one iteration runs");
    let final_benchmark = bench.evaluate(&final_policy);
    write_final(&store, &final_policy, &final_benchmark, &iterations)?;

    Ok((
        RunArtifacts {
            run_id,
            root: store.root().to_path_buf(),
            iterations,
            final_policy,
            final_benchmark,
        },
        libraries,
    ))
}

/// Fixed-set modes: one policy, one library, the full phase budget.
fn run_fixed_set(
    cfg: &RunConfig,
    store: RunStore,
    run_id: String,
) -> Result<RunArtifacts, RunError> {
    let generator = build_generator(cfg);
    let incontext = load_incontext(cfg)?;
    let bench = BenchmarkEvaluator::new(&cfg.grid, &cfg.sim)?;
    let n = cfg.agents.max(1);
    let j = cfg.library_size.max(1);

    let programs: Vec<TerrainProgram> = match cfg.ablation {
        Some(Ablation::InitialOnly) => {
            let batch = generate_initial(generator.as_ref(), &incontext, n * j, cfg, 0, false)?;
            for tr in &batch.transcripts {
                store.write_transcript(1, &tr.slot, tr)?;
            }
            batch.programs
        }
        Some(Ablation::DiversityOnly) => {
            let batch = generate_initial(generator.as_ref(), &incontext, n * j, cfg, 0, true)?;
            for tr in &batch.transcripts {
                store.write_transcript(1, &tr.slot, tr)?;
            }
            batch.programs
        }
        Some(Ablation::Oracle) => crate::bench::build_benchmark()
            .families
            .into_iter()
            .map(|f| f.program)
            .collect(),
        Some(Ablation::FinalOnly) => {
            // Bootstrap: a full standard run (same seed, no ablation) supplies
            // the final iteration's libraries.
            let mut boot_cfg = cfg.clone();
            boot_cfg.ablation = None;
            let boot_store = RunStore::create(store.root(), "bootstrap")?;
            boot_store.write_config(&boot_cfg)?;
            let (_, final_libraries) =
                run_standard(&boot_cfg, boot_store, format!("{run_id}-bootstrap"))?;
            final_libraries.into_iter().flatten().collect()
        }
        _ => unreachable!("run_fixed_set only handles fixed-set ablations"),
    };

    let library = build_training_library(&programs, &cfg.grid, &cfg.fix, &cfg.sim, &cfg.ladder)?;
    let mut ladders: Vec<CurriculumState> =
        (0..library.len()).map(|_| CurriculumState::new()).collect();
    let mut policy = cfg.initial_policy.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut iterations = Vec::new();

    // One policy sees the whole fixed set, so the per-phase budget scales
    // with the library: same rollouts per terrain as a standard agent gets.
    let mut cem = cfg.cem;
    cem.budget = cfg
        .cem
        .budget
        .saturating_mul((library.len() / cfg.library_size.max(1)).max(1));

    for t in 1..=cfg.iterations.max(1) {
        let (next, stats) = match train_agent(
            &policy,
            &library,
            &mut ladders,
            &cem,
            &cfg.ladder,
            &mut rng,
        ) {
            Ok(r) => r,
            Err(e) => {
                store.mark_incomplete(t)?;
                return Err(e.into());
            }
        };
        policy = next;
        store.write_library(t, 0, &programs)?;
        store.write_train_stats(t, 0, &stats)?;
        store.write_ladders(t, 0, &ladders)?;

        let score = evaluate_proxy_batch(
            std::slice::from_ref(&policy),
            &programs,
            &cfg.grid,
            &cfg.fix,
            &cfg.sim,
            &cfg.ladder,
        )?[0];
        store.write_json(&format!("iter_{t}/proxy_scores.json"), &vec![score.0])?;
        store.write_json(
            &format!("iter_{t}/selection.json"),
            &vec![SelectionRecord {
                agent: 0,
                source: 0,
                rank: 0,
                score: score.0,
            }],
        )?;

        let bench_table = bench.evaluate(&policy);
        let summary = IterationSummary {
            iteration: t,
            benchmark_mean: bench_table.mean_goals,
            proxy_scores: vec![score.0],
            best_agent: 0,
            pass_rate: 1.0,
            proxy_size: programs.len(),
        };
        store.write_json(&format!("iter_{t}/iteration.json"), &summary)?;
        iterations.push(summary);
    }

    let final_benchmark = bench.evaluate(&policy);
    write_final(&store, &policy, &final_benchmark, &iterations)?;
    Ok(RunArtifacts {
        run_id,
        root: store.root().to_path_buf(),
        iterations,
        final_policy: policy,
        final_benchmark,
    })
}

fn write_final(
    store: &RunStore,
    policy: &SkillPolicy,
    table: &BenchmarkTable,
    iterations: &[IterationSummary],
) -> Result<(), StoreError> {
    store.write_best_policy(policy)?;
    store.write_text("final/benchmark.csv", &table.to_csv())?;
    store.write_json(
        "final/summary.json",
        &serde_json::json!({
            "benchmark": table.summary_json(),
            "iterations": iterations,
        }),
    )?;
    let mut progress = String::from("iteration,benchmark_mean\n");
    for s in iterations {
        progress.push_str(&format!("{},{}\n", s.iteration, s.benchmark_mean));
    }
    store.write_text("final/progress.csv", &progress)?;
    let points: Vec<(f64, f64)> = iterations
        .iter()
        .map(|s| (s.iteration as f64, s.benchmark_mean))
        .collect();
    store.write_text(
        "final/progress.svg",
        &crate::render::line_chart_svg("benchmark mean by iteration", &points, 8.0),
    )?;
    Ok(())
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_initial_batch_is_empty() {
        let cfg = RunConfig::default();
        let gen = MockGenerator::new(MockMode::Standard, cfg.grid);
        let batch = generate_initial(&gen, DEFAULT_INCONTEXT, 0, &cfg, 0, false).unwrap();
        assert!(batch.programs.is_empty());
        assert_eq!(batch.pass_rate(), 1.0);
    }

    #[test]
    fn initial_batch_is_deterministic_and_admitted() {
        let cfg = RunConfig::default();
        let gen = MockGenerator::new(MockMode::Standard, cfg.grid);
        let a = generate_initial(&gen, DEFAULT_INCONTEXT, 12, &cfg, 0, false).unwrap();
        let b = generate_initial(&gen, DEFAULT_INCONTEXT, 12, &cfg, 0, false).unwrap();
        assert_eq!(a.programs, b.programs);
        assert_eq!(a.admitted, 12);
        let samples = default_difficulty_samples();
        for p in &a.programs {
            assert!(
                check_program_fixed(p, &cfg.limits, &cfg.fix, &cfg.grid, &samples).passed
            );
        }
    }

    #[test]
    fn partition_gives_equal_libraries() {
        let cfg = RunConfig::default();
        let gen = MockGenerator::new(MockMode::Standard, cfg.grid);
        let batch = generate_initial(&gen, DEFAULT_INCONTEXT, 20, &cfg, 0, false).unwrap();
        let mut rng = derive_rng(0, &[TAG_PARTITION]);
        let libs = partition_libraries(batch.programs, 4, &mut rng);
        assert_eq!(libs.len(), 4);
        assert!(libs.iter().all(|l| l.len() == 5));
    }

    #[test]
    fn resampling_follows_learning_progress() {
        let p1 = parse_program(
            "terrain \"lp_hi\" { platform { length: 2, height: 0 } goals auto }",
        )
        .unwrap();
        let p2 = parse_program(
            "terrain \"lp_lo\" { platform { length: 3, height: 0 } goals auto }",
        )
        .unwrap();
        let history = vec![
            TerrainHistoryEntry {
                program: p1,
                goals_before: 1.0,
                goals_after: 1.9,
            },
            TerrainHistoryEntry {
                program: p2,
                goals_before: 2.0,
                goals_after: 2.1,
            },
        ];
        let mut rng = derive_rng(3, &[TAG_RESAMPLE]);
        let mut hi = 0;
        let mut lo = 0;
        for _ in 0..10_000 {
            let lib = resample_by_learning_progress(&history, 1, &mut rng);
            match lib[0].name.as_str() {
                "lp_hi" => hi += 1,
                _ => lo += 1,
            }
        }
        let ratio = hi as f64 / lo as f64;
        assert!(
            (ratio - 9.0).abs() < 1.2,
            "expected roughly 9:1 sampling, got {ratio:.2}"
        );
    }

    #[test]
    fn resampling_floors_negative_progress_and_handles_uniform() {
        let mk = |name: &str| {
            parse_program(&format!(
                "terrain \"{name}\" {{ platform {{ length: 2, height: 0 }} goals auto }}"
            ))
            .unwrap()
        };
        let history = vec![
            TerrainHistoryEntry {
                program: mk("neg"),
                goals_before: 5.0,
                goals_after: 2.0,
            },
            TerrainHistoryEntry {
                program: mk("pos"),
                goals_before: 1.0,
                goals_after: 1.0,
            },
        ];
        // Both floor to epsilon: sampling becomes uniform.
        let mut rng = derive_rng(4, &[TAG_RESAMPLE]);
        let mut neg = 0;
        for _ in 0..4_000 {
            if resample_by_learning_progress(&history, 1, &mut rng)[0].name == "neg" {
                neg += 1;
            }
        }
        let frac = neg as f64 / 4_000.0;
        assert!((frac - 0.5).abs() < 0.05, "uniform fallback broken: {frac}");
    }
}
