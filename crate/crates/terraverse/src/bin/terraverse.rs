//! Thin command-line shell over the terraverse library.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use terraverse::bench::evaluate_benchmark;
use terraverse::compile::{compile, goals_to_csv, to_csv};
use terraverse::config::{Ablation, GeneratorChoice, RunConfig};
use terraverse::dsl::{format_program, parse_program};
use terraverse::generate::{
    generate_initial, run_coevolution, EnvironmentGenerator, GeneratorError, MockGenerator,
    MockMode, RemoteGenerator, RunError, DEFAULT_INCONTEXT,
};
use terraverse::render::{to_ascii, to_pgm_with_goals, to_svg};
use terraverse::store::RunStore;
use terraverse::train::SkillPolicy;
use terraverse::validate::{auto_fix, check_program, default_difficulty_samples, FixLog};

#[derive(Parser)]
#[command(name = "terraverse", version, about = "Terrain-program co-evolution: generate, train, evaluate")]
struct Cli {
    /// Run configuration file (TOML or JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (runs, rendered files, benchmark tables).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Chatty progress on stderr.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a full co-evolution run and print the final benchmark mean.
    Run {
        /// Generator backend: mock or remote.
        #[arg(long)]
        generator: Option<String>,
        /// Ablation: no_feedback, initial_only, final_only, diversity_only,
        /// random_baseline, oracle.
        #[arg(long)]
        ablation: Option<String>,
    },
    /// Render a terrain program as ascii, pgm, svg, or csv.
    Render {
        terrain: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        difficulty: f64,
        #[arg(long, default_value = "ascii")]
        format: String,
    },
    /// Evaluate a stored policy (run directory or policy JSON) on the
    /// benchmark.
    Bench {
        target: PathBuf,
        /// Also emit the per-iteration progress table from a run directory.
        #[arg(long)]
        sweep: bool,
    },
    /// Check a terrain program against the validity rules.
    Check { terrain: PathBuf },
    /// Check and auto-fix; writes the canonical program plus a grid-patch
    /// sidecar.
    Fix { terrain: PathBuf },
    /// One-shot sampling from a generator.
    Generate {
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        generator: Option<String>,
    },
    /// Re-evaluate a stored run's best policy and compare to its recorded
    /// results.
    Replay { run: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err((code, message)) => {
            eprintln!("error: {message}");
            code
        }
    }
}

type CmdResult = Result<ExitCode, (ExitCode, String)>;

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_GENERATOR: u8 = 3;
const EXIT_TRAINING: u8 = 4;

fn fail(code: u8, message: impl Into<String>) -> (ExitCode, String) {
    (ExitCode::from(code), message.into())
}

fn load_config(
    cli_config: &Option<PathBuf>,
    seed: Option<u64>,
) -> Result<RunConfig, (ExitCode, String)> {
    let mut cfg = match cli_config {
        Some(path) => RunConfig::load(path).map_err(|e| fail(EXIT_CONFIG, e.to_string()))?,
        None => {
            let mut cfg = RunConfig::default();
            cfg.apply_env_overrides();
            cfg
        }
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn parse_generator(name: &str) -> Result<GeneratorChoice, (ExitCode, String)> {
    match name {
        "mock" => Ok(GeneratorChoice::Mock),
        "remote" => Ok(GeneratorChoice::Remote),
        other => Err(fail(EXIT_CONFIG, format!("unknown generator `{other}`"))),
    }
}

fn read_terrain(path: &Path) -> Result<terraverse::dsl::TerrainProgram, (ExitCode, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", path.display())))?;
    parse_program(&text).map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", path.display())))
}

fn dispatch(cli: Cli) -> CmdResult {
    match &cli.command {
        Command::Run { generator, ablation } => cmd_run(&cli, generator, ablation),
        Command::Render {
            terrain,
            difficulty,
            format,
        } => cmd_render(&cli, terrain, *difficulty, format),
        Command::Bench { target, sweep } => cmd_bench(&cli, target, *sweep),
        Command::Check { terrain } => cmd_check(&cli, terrain),
        Command::Fix { terrain } => cmd_fix(&cli, terrain),
        Command::Generate { count, generator } => cmd_generate(&cli, *count, generator),
        Command::Replay { run } => cmd_replay(&cli, run),
    }
}

fn cmd_run(cli: &Cli, generator: &Option<String>, ablation: &Option<String>) -> CmdResult {
    let mut cfg = load_config(&cli.config, cli.seed)?;
    if let Some(g) = generator {
        cfg.generator = parse_generator(g)?;
    }
    if let Some(a) = ablation {
        cfg.ablation = Some(
            Ablation::parse(a)
                .ok_or_else(|| fail(EXIT_CONFIG, format!("unknown ablation `{a}`")))?,
        );
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("runs"));
    if cli.verbose {
        eprintln!(
            "run: T={} N={} J={} seed={} generator={:?} ablation={:?}",
            cfg.iterations, cfg.agents, cfg.library_size, cfg.seed, cfg.generator, cfg.ablation
        );
    }
    let artifacts = run_coevolution(&cfg, &out).map_err(map_run_error)?;
    println!(
        "run {} complete: final benchmark mean {:.3}",
        artifacts.run_id, artifacts.final_benchmark.mean_goals
    );
    if cli.verbose {
        for it in &artifacts.iterations {
            eprintln!(
                "  iter {}: benchmark {:.3}, best agent {}, pass rate {:.2}",
                it.iteration, it.benchmark_mean, it.best_agent, it.pass_rate
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn map_run_error(e: RunError) -> (ExitCode, String) {
    match &e {
        RunError::Generator(_) => fail(EXIT_GENERATOR, e.to_string()),
        RunError::Incontext(_) => fail(EXIT_CONFIG, e.to_string()),
        _ => fail(EXIT_TRAINING, e.to_string()),
    }
}

fn cmd_render(cli: &Cli, terrain: &Path, difficulty: f64, format: &str) -> CmdResult {
    let program = read_terrain(terrain)?;
    let cfg = load_config(&cli.config, cli.seed)?;
    let t =
        compile(&program, difficulty, &cfg.grid).map_err(|e| fail(EXIT_CONFIG, e.to_string()))?;
    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let stem = terrain
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "terrain".to_string());
    match format {
        "ascii" => {
            print!("{}", to_ascii(&t));
        }
        "pgm" => {
            let path = out_dir.join(format!("{stem}_d{difficulty:.2}.pgm"));
            write_file(&path, &to_pgm_with_goals(&t))?;
            println!("{}", path.display());
        }
        "svg" => {
            let path = out_dir.join(format!("{stem}_d{difficulty:.2}.svg"));
            write_file(&path, &to_svg(&t, 3.0))?;
            println!("{}", path.display());
        }
        "csv" => {
            let hpath = out_dir.join(format!("{stem}_d{difficulty:.2}.csv"));
            write_file(&hpath, &to_csv(&t))?;
            let gpath = out_dir.join(format!("{stem}_d{difficulty:.2}_goals.csv"));
            write_file(&gpath, &goals_to_csv(&t))?;
            println!("{}", hpath.display());
            println!("{}", gpath.display());
        }
        other => return Err(fail(EXIT_CONFIG, format!("unknown format `{other}`"))),
    }
    Ok(ExitCode::SUCCESS)
}

fn write_file(path: &Path, content: &str) -> Result<(), (ExitCode, String)> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, content)
        .map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", path.display())))
}

fn load_policy(target: &Path) -> Result<SkillPolicy, (ExitCode, String)> {
    if target.is_dir() {
        let store = RunStore::open(target).map_err(|e| fail(EXIT_CONFIG, e.to_string()))?;
        store
            .load_best_policy()
            .map_err(|e| fail(EXIT_CONFIG, e.to_string()))
    } else {
        let text = std::fs::read_to_string(target)
            .map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", target.display())))?;
        serde_json::from_str(&text).map_err(|e| fail(EXIT_CONFIG, e.to_string()))
    }
}

fn cmd_bench(cli: &Cli, target: &Path, sweep: bool) -> CmdResult {
    let cfg = load_config(&cli.config, cli.seed)?;
    let policy = load_policy(target)?;
    let table = evaluate_benchmark(&policy, &cfg.grid, &cfg.sim)
        .map_err(|e| fail(EXIT_TRAINING, e.to_string()))?;
    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    write_file(&out_dir.join("benchmark.csv"), &table.to_csv())?;
    write_file(
        &out_dir.join("benchmark_summary.json"),
        &format!("{:#}\n", table.summary_json()),
    )?;
    println!("benchmark mean: {:.3}", table.mean_goals);

    if sweep {
        if !target.is_dir() {
            return Err(fail(EXIT_CONFIG, "--sweep needs a run directory"));
        }
        let store = RunStore::open(target).map_err(|e| fail(EXIT_CONFIG, e.to_string()))?;
        let mut rows = String::from("iteration,benchmark_mean\n");
        for t in 1..=store.iteration_count() {
            let summary: serde_json::Value = store
                .read_json(&format!("iter_{t}/iteration.json"))
                .map_err(|e| fail(EXIT_CONFIG, e.to_string()))?;
            rows.push_str(&format!(
                "{t},{}\n",
                summary["benchmark_mean"].as_f64().unwrap_or(f64::NAN)
            ));
        }
        write_file(&out_dir.join("progress.csv"), &rows)?;
        println!("{}", out_dir.join("progress.csv").display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(cli: &Cli, terrain: &Path) -> CmdResult {
    let program = read_terrain(terrain)?;
    let cfg = load_config(&cli.config, cli.seed)?;
    let report = check_program(
        &program,
        &cfg.limits,
        &cfg.grid,
        &default_difficulty_samples(),
    );
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    if report.passed {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_CHECK_FAILED))
    }
}

fn cmd_fix(cli: &Cli, terrain: &Path) -> CmdResult {
    let program = read_terrain(terrain)?;
    let cfg = load_config(&cli.config, cli.seed)?;
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| terrain.parent().unwrap_or(Path::new(".")).to_path_buf());
    let stem = terrain
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "terrain".to_string());

    // Fixes act on compiled grids; the program text stays the generator-
    // visible source of truth and per-difficulty fix logs ride alongside as
    // a patch record.
    let mut patches: Vec<serde_json::Value> = Vec::new();
    for &d in &default_difficulty_samples() {
        let log: FixLog = match compile(&program, d, &cfg.grid) {
            Ok(t) => auto_fix(&t, &cfg.fix).1,
            Err(e) => {
                patches.push(serde_json::json!({
                    "difficulty": d,
                    "error": e.to_string(),
                }));
                continue;
            }
        };
        patches.push(serde_json::json!({
            "difficulty": d,
            "fixes": log,
        }));
    }

    let fixed_path = out_dir.join(format!("{stem}.fixed.terrain"));
    write_file(&fixed_path, &format_program(&program))?;
    let patch_path = out_dir.join(format!("{stem}.fixpatch.json"));
    write_file(
        &patch_path,
        &format!(
            "{}\n",
            serde_json::to_string_pretty(&serde_json::json!({ "patches": patches }))
                .expect("patch serializes")
        ),
    )?;
    println!("{}", fixed_path.display());
    println!("{}", patch_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_generate(cli: &Cli, count: usize, generator: &Option<String>) -> CmdResult {
    let mut cfg = load_config(&cli.config, cli.seed)?;
    if let Some(g) = generator {
        cfg.generator = parse_generator(g)?;
    }
    let backend: Box<dyn EnvironmentGenerator> = match cfg.generator {
        GeneratorChoice::Mock => Box::new(MockGenerator::new(MockMode::Standard, cfg.grid)),
        GeneratorChoice::Remote => Box::new(RemoteGenerator::new(cfg.remote.clone())),
    };
    let incontext = match &cfg.incontext_path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", p.display())))?,
        None => DEFAULT_INCONTEXT.to_string(),
    };
    let batch = generate_initial(backend.as_ref(), &incontext, count, &cfg, 0, false)
        .map_err(|e| map_generator_error(&e))?;
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("generated"));
    for (i, p) in batch.programs.iter().enumerate() {
        let path = out_dir.join(format!("{i:02}_{}.terrain", p.name));
        write_file(&path, &format_program(p))?;
        println!("{}", path.display());
    }
    println!("pass rate: {:.2}", batch.pass_rate());
    Ok(ExitCode::SUCCESS)
}

fn map_generator_error(e: &GeneratorError) -> (ExitCode, String) {
    fail(EXIT_GENERATOR, e.to_string())
}

fn cmd_replay(cli: &Cli, run: &Path) -> CmdResult {
    let store = RunStore::open(run).map_err(|e| fail(EXIT_CONFIG, e.to_string()))?;
    let cfg = store
        .load_config()
        .map_err(|e| fail(EXIT_CONFIG, e.to_string()))?;
    let policy = store
        .load_best_policy()
        .map_err(|e| fail(EXIT_CONFIG, e.to_string()))?;
    let table = evaluate_benchmark(&policy, &cfg.grid, &cfg.sim)
        .map_err(|e| fail(EXIT_TRAINING, e.to_string()))?;
    let stored: serde_json::Value = store
        .read_json("final/summary.json")
        .map_err(|e| fail(EXIT_CONFIG, e.to_string()))?;
    let stored_mean = stored["benchmark"]["mean_goals"]
        .as_f64()
        .unwrap_or(f64::NAN);
    println!("stored benchmark mean:     {stored_mean:.3}");
    println!("recomputed benchmark mean: {:.3}", table.mean_goals);
    if cli.verbose {
        for (family, auc) in &table.family_auc {
            eprintln!("  {family}: {auc:.2}");
        }
    }
    Ok(ExitCode::SUCCESS)
}
