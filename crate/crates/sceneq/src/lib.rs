//! Question synthesis and evaluation over spatio-temporal scene graphs.
//!
//! The crate turns crowd-scene annotations (3D boxes, attributes, point
//! clouds, human-object interaction labels, robot poses) into a graph whose
//! nodes are entities at time slots and whose edges carry spatial relations,
//! then compositionally generates grounded questions over that graph:
//!
//! 1. [`scene`] parses and validates annotation files and segments video
//!    scenes into time slots.
//! 2. [`stgraph`] builds the spatio-temporal graph and evaluates question
//!    programs (chains of select / filter / relate / terminal steps) on it.
//! 3. [`complexity`] scores a program by the entity roles, relation edges and
//!    time slots it touches, and maps the score onto difficulty tiers.
//! 4. [`generator`] enumerates attribute combinations, instantiates them as
//!    satisfiable programs, and renders English questions plus step-by-step
//!    answer workflows from a template grammar.
//! 5. [`eval`] scores predictions (grounding boxes, answers, per-step boxes)
//!    against generated ground truth.
//!
//! Geometry primitives (egocentric direction and distance classification,
//! exact k-NN over point clouds, box IoU) live in [`geometry`]; [`synth`]
//! produces randomized synthetic scenes for benchmarks and tests.
//!
//! ```
//! use sceneq::config::GenConfig;
//! use sceneq::generator::Engine;
//! use sceneq::synth::{self, SynthSpec};
//!
//! let scene = synth::synth_scene(&SynthSpec::default(), 7);
//! let engine = Engine::new(&scene, GenConfig::default()).unwrap();
//! let (questions, report) = engine.generate(42, 5);
//! assert_eq!(questions.len() + report.unsatisfiable as usize, 5);
//! ```

pub mod complexity;
pub mod config;
pub mod eval;
pub mod generator;
pub mod geometry;
pub mod scene;
pub mod stgraph;
pub mod synth;
