//! Speech emotion recognition from MFCC feature windows.
//!
//! The crate covers the whole path from a WAV file to a label:
//!
//! ```text
//! WAV -> AudioClip -> normalize/pad -> MFCC (FFT, mel filterbank, DCT)
//!     -> 13x26 FeatureWindow -> kernel SVM or CNN -> MetricsReport / StreamEvent
//! ```
//!
//! Every numeric kernel (FFT, filterbank, DCT, SVM dual solver, CNN
//! forward/backward, RMSProp) is implemented here and checked against
//! independent reference computations in the tests.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audio;
mod container;
pub mod dataset;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod features;
pub mod nn;
pub mod stream;
pub mod svm;

pub use audio::{decode_wav, encode_wav, read_wav_file, synth_tone, AudioClip};
pub use dataset::{Corpus, EmotionLabel, SampleRecord, Split, SplitAssignment, NUM_CLASSES};
pub use error::{Error, Result};
pub use features::{FeatureExtractor, FeatureWindow, PipelineConfig, N_FRAMES};
pub use eval::{evaluate_model, Classifier, MetricsReport};
pub use nn::{build_paper_cnn, CnnModel};
pub use stream::{LoadedModel, StreamConfig, StreamEngine, StreamEvent};
pub use svm::{KernelKind, KernelSpec, MulticlassStrategy, SvmModel};
