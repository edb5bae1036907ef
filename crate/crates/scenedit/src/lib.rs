//! IO, catalogs, dataset synthesis and the command line on top of
//! [`scenedit_core`].

pub mod adapter;
pub mod catalog;
pub mod cli;
pub mod designer_llm;
pub mod eval;
pub mod pipeline;
pub mod scene_file;
pub mod testdata;
pub mod wav;

pub use scenedit_core as core;
