//! Terraverse: terrain-program co-evolution at desk scale.
//!
//! A terrain obstacle course is a small program in a declarative DSL. Compiling
//! a program at a difficulty `d` in `[0, 1]` yields a quantized height field
//! plus eight ordered goal waypoints. A skill-parameterized agent traverses
//! compiled courses with a deterministic shortest-path planner, a curriculum
//! ladder moves each course between ten difficulty levels as the agent
//! improves, and an outer loop alternates population training with
//! generator-driven evolution of the course library. Generators are pluggable:
//! a remote chat-completion endpoint or a deterministic mock.
//!
//! ## Examples
//!
//! Each major capability has a runnable example:
//!
//! ```text
//! cargo run --example parse_and_format     # DSL parsing, evaluation, round-trip
//! cargo run --example compile_and_export   # height-field compilation + PGM/CSV export
//! cargo run --example check_and_fix        # validity checks and automatic fixing
//! cargo run --example simulate_rollout     # skill vectors and traversal rollouts
//! cargo run --example curriculum_ladder    # difficulty promotion/demotion dynamics
//! cargo run --example train_cem            # cross-entropy policy training on a library
//! cargo run --example mock_generation      # mock generator: sampling and mutation
//! cargo run --example remote_prompts       # chat-completion prompt construction
//! cargo run --example coevolution_smoke    # tiny end-to-end co-evolution run
//! cargo run --example benchmark_eval       # the 20-obstacle benchmark suite
//! cargo run --example render_terrain       # ASCII / SVG / PGM rendering
//! ```
//!
//! The `terraverse` binary is a thin shell over the same library calls; see
//! `terraverse --help`.

pub mod bench;
pub mod compile;
pub mod config;
pub mod curriculum;
pub mod dsl;
pub mod generate;
pub mod render;
pub mod sim;
pub mod store;
pub mod train;
pub mod validate;

mod rng_util;

pub use rng_util::derive_rng;
