//! On-disk layout for co-evolution runs.
//!
//! ```text
//! runs/<run_id>/
//!   config.json
//!   iter_<t>/
//!     agent_<i>/{library/*.terrain, train_stats.jsonl, ladder.json}
//!     proxy_scores.json
//!     selection.json
//!     transcripts/*.json
//!     iteration.json
//!   final/{best_policy.json, benchmark.csv, summary.json, progress.csv, progress.svg}
//! ```
//!
//! File contents carry no wall-clock data; two runs with the same seed and
//! config write byte-identical stats, libraries, and benchmark tables. Only
//! the run id embeds a timestamp.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::RunConfig;
use crate::curriculum::CurriculumState;
use crate::dsl::{format_program, TerrainProgram};
use crate::train::{SkillPolicy, TrainStats};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("store io at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("store encode: {0}")]
    Encode(#[from] serde_json::Error),
    #[error("missing artifact: {0}")]
    Missing(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Build a run identifier: seed, wall-clock seconds, config hash.
pub fn make_run_id(cfg: &RunConfig) -> String {
    let ts = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("seed{}-{}-{:08x}", cfg.seed, ts, cfg.content_hash() as u32)
}

/// Handle to one run's directory tree.
#[derive(Debug, Clone)]
pub struct RunStore {
    root: PathBuf,
}

impl RunStore {
    /// Create `<parent>/<run_id>/` and return the handle.
    pub fn create(parent: &Path, run_id: &str) -> Result<RunStore, StoreError> {
        let root = parent.join(run_id);
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        Ok(RunStore { root })
    }

    /// Open an existing run directory.
    pub fn open(root: &Path) -> Result<RunStore, StoreError> {
        if !root.is_dir() {
            return Err(StoreError::Missing(root.display().to_string()));
        }
        Ok(RunStore {
            root: root.to_path_buf(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn iter_dir(&self, t: usize) -> PathBuf {
        self.root.join(format!("iter_{t}"))
    }

    pub fn agent_dir(&self, t: usize, agent: usize) -> PathBuf {
        self.iter_dir(t).join(format!("agent_{agent}"))
    }

    pub fn final_dir(&self) -> PathBuf {
        self.root.join("final")
    }

    fn write_bytes(&self, path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        let mut f = fs::File::create(path).map_err(io_err(path))?;
        f.write_all(bytes).map_err(io_err(path))?;
        Ok(())
    }

    pub fn write_text(&self, relpath: &str, text: &str) -> Result<(), StoreError> {
        self.write_bytes(&self.root.join(relpath), text.as_bytes())
    }

    pub fn write_json<T: Serialize>(&self, relpath: &str, value: &T) -> Result<(), StoreError> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(&self.root.join(relpath), &bytes)
    }

    pub fn read_json<T: DeserializeOwned>(&self, relpath: &str) -> Result<T, StoreError> {
        let path = self.root.join(relpath);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write_config(&self, cfg: &RunConfig) -> Result<(), StoreError> {
        self.write_json("config.json", cfg)
    }

    pub fn load_config(&self) -> Result<RunConfig, StoreError> {
        self.read_json("config.json")
    }

    /// Write an agent's library as numbered `.terrain` files.
    pub fn write_library(
        &self,
        t: usize,
        agent: usize,
        programs: &[TerrainProgram],
    ) -> Result<(), StoreError> {
        for (i, p) in programs.iter().enumerate() {
            let rel = format!("iter_{t}/agent_{agent}/library/{i:02}_{}.terrain", p.name);
            self.write_text(&rel, &format_program(p))?;
        }
        Ok(())
    }

    /// Load an agent's library back, in slot order.
    pub fn load_library(&self, t: usize, agent: usize) -> Result<Vec<TerrainProgram>, StoreError> {
        let dir = self.agent_dir(t, agent).join("library");
        let mut names: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(io_err(&dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().map(|e| e == "terrain").unwrap_or(false))
            .collect();
        names.sort();
        names
            .into_iter()
            .map(|path| {
                let text = fs::read_to_string(&path).map_err(io_err(&path))?;
                crate::dsl::parse_program(&text)
                    .map_err(|e| StoreError::Missing(format!("{}: {e}", path.display())))
            })
            .collect()
    }

    /// One JSON line per library terrain, then a summary line.
    pub fn write_train_stats(
        &self,
        t: usize,
        agent: usize,
        stats: &TrainStats,
    ) -> Result<(), StoreError> {
        let mut out = String::new();
        for rec in &stats.per_terrain {
            out.push_str(&serde_json::to_string(rec)?);
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&serde_json::json!({
            "evaluations_used": stats.evaluations_used
        }))?);
        out.push('\n');
        self.write_text(&format!("iter_{t}/agent_{agent}/train_stats.jsonl"), &out)
    }

    pub fn write_ladders(
        &self,
        t: usize,
        agent: usize,
        ladders: &[CurriculumState],
    ) -> Result<(), StoreError> {
        self.write_json(&format!("iter_{t}/agent_{agent}/ladder.json"), &ladders)
    }

    pub fn write_transcript<T: Serialize>(
        &self,
        t: usize,
        name: &str,
        transcript: &T,
    ) -> Result<(), StoreError> {
        self.write_json(&format!("iter_{t}/transcripts/{name}.json"), transcript)
    }

    /// Flag an iteration whose artifacts are only partially written.
    pub fn mark_incomplete(&self, t: usize) -> Result<(), StoreError> {
        self.write_text(&format!("iter_{t}/INCOMPLETE"), "iteration aborted\n")
    }

    pub fn is_incomplete(&self, t: usize) -> bool {
        self.iter_dir(t).join("INCOMPLETE").exists()
    }

    pub fn write_best_policy(&self, policy: &SkillPolicy) -> Result<(), StoreError> {
        self.write_json("final/best_policy.json", policy)
    }

    pub fn load_best_policy(&self) -> Result<SkillPolicy, StoreError> {
        self.read_json("final/best_policy.json")
    }

    /// Count `iter_<t>` directories present.
    pub fn iteration_count(&self) -> usize {
        (1..)
            .take_while(|t| self.iter_dir(*t).is_dir())
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_program;

    fn store() -> (tempfile::TempDir, RunStore) {
        let dir = tempfile::tempdir().unwrap();
        let store = RunStore::create(dir.path(), "run_test").unwrap();
        (dir, store)
    }

    #[test]
    fn library_round_trips_in_slot_order() {
        let (_dir, store) = store();
        let programs: Vec<_> = ["a", "b", "c"]
            .iter()
            .map(|n| {
                parse_program(&format!(
                    "terrain \"{n}\" {{ platform {{ length: 2, height: 0 }} goals auto }}"
                ))
                .unwrap()
            })
            .collect();
        store.write_library(1, 0, &programs).unwrap();
        let back = store.load_library(1, 0).unwrap();
        assert_eq!(programs, back);
    }

    #[test]
    fn same_named_programs_do_not_collide() {
        let (_dir, store) = store();
        let p = parse_program(
            "terrain \"dup\" { platform { length: 2, height: 0 } goals auto }",
        )
        .unwrap();
        store.write_library(1, 0, &[p.clone(), p.clone()]).unwrap();
        assert_eq!(store.load_library(1, 0).unwrap().len(), 2);
    }

    #[test]
    fn policy_and_config_round_trip() {
        let (_dir, store) = store();
        let cfg = RunConfig::default();
        store.write_config(&cfg).unwrap();
        assert_eq!(store.load_config().unwrap(), cfg);

        let policy = SkillPolicy::default();
        store.write_best_policy(&policy).unwrap();
        assert_eq!(store.load_best_policy().unwrap(), policy);
    }

    #[test]
    fn incomplete_marker_is_detectable() {
        let (_dir, store) = store();
        store.write_text("iter_1/iteration.json", "{}\n").unwrap();
        assert!(!store.is_incomplete(1));
        store.mark_incomplete(1).unwrap();
        assert!(store.is_incomplete(1));
    }

    #[test]
    fn run_id_embeds_seed_and_hash() {
        let cfg = RunConfig::default();
        let id = make_run_id(&cfg);
        assert!(id.starts_with("seed0-"));
        assert_eq!(id.split('-').count(), 3);
    }
}
