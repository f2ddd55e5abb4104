//! Fixtures shared by the benchmarks.

use texmatch_core::{synth, SynthConfig, TextureTemplate};

/// A latent of 240 points (duals included) and two 600-point references at
/// descriptor length 192: its mate and an unrelated subject.
pub fn latency_fixture() -> (TextureTemplate, TextureTemplate, TextureTemplate) {
    let cfg = SynthConfig { seed: 1, width: 896, height: 864, crop_fraction: 0.2, ..Default::default() };
    let (img, mate) = synth::generate_reference(&cfg, 0).expect("reference");
    let latent = synth::derive_latent(&img, &mate, &cfg, 0).expect("latent").latent;
    let (_, other) = synth::generate_reference(&cfg, 1).expect("reference");
    (latent, mate, other)
}
