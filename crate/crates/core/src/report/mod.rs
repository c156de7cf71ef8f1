//! Problem files, the analysis pipeline and its reports.

mod input;
mod pipeline;
mod render;
mod selftest;

pub use input::{Dims, ProblemFile, ReferencePoint};
pub use pipeline::{analyze, gderiv, input_hash, AnalysisReport, GderivReport, TOOL_VERSION};
pub use render::render_text;
pub use selftest::{selftest, Check, SelftestReport};
