//! Image I/O, run configuration, metrics and the synthetic evaluation harness.

pub mod config;
pub mod eval;
pub mod io;
pub mod metrics;
pub mod synth;

pub use config::{Preset, RunConfig};
pub use eval::{evaluate_split, SynthReport};
pub use io::{
    from_quaternion, read_image, read_layer, to_quaternion, write_layer, write_png, RgbImage,
};
pub use metrics::{metric_qg, metric_qmi, psnr};
pub use synth::{gaussian_blur, synth_split, Split, SynthSet};
