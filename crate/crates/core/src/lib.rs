//! DNA sequences to Frequency Chaos Game Signals, complex Morlet scalograms,
//! and detection of the ~6.5 bp periodicity band that marks intron-like regions.
//!
//! The pipeline runs in stages. Each stage lives in its own module:
//!
//! * [`sequence_io`] reads FASTA records and 4-column annotation files.
//! * [`chaos_game`] computes chaos game points and order-k frequency matrices (FCGR).
//! * [`fcgs_encoder`] turns a sequence into a 1-D signal using an FCGR matrix.
//! * [`cwt_engine`] runs the complex Morlet continuous wavelet transform.
//! * [`intron_scan`] measures band energy, calls regions and scores them.
//! * [`viz_export`] renders scalograms to PNG and writes the CSV artifacts.
//! * [`pipeline`] and [`synth`] wire the stages together and generate test genomes.
//!
//! Genomic coordinates are 1-based and inclusive everywhere in the public API.

pub mod chaos_game;
pub mod cwt_engine;
pub mod error;
pub mod fcgs_encoder;
pub mod intron_scan;
pub mod pipeline;
pub mod sequence_io;
pub mod synth;
pub mod viz_export;

pub use chaos_game::{cell_index, cgr_map, cgr_step, CgrPoint, CgrTrajectory, FcgrMatrix};
pub use cwt_engine::{cwt, cwt_direct, MorletParams, ScaleGrid, Scalogram};
pub use error::{Error, ErrorFamily, Result};
pub use fcgs_encoder::{encode, word_stream, FcgsSignal};
pub use intron_scan::{
    band_energy, call_regions, evaluate, BandEnergyProfile, RegionCall, Threshold,
};
pub use pipeline::PipelineConfig;
pub use sequence_io::{
    parse_annotations, parse_fasta, subsequence, AnnotationTrack, NucleotideSequence,
};
