//! Texture-template fingerprint matching: ridge flow and ROI estimation,
//! virtual-minutiae templates with patch descriptors, second-order graph
//! matching, gallery search and synthetic planted-truth data.

pub mod descriptor;
pub mod error;
pub mod image;
pub mod matcher;
pub mod ridgeflow;
pub mod search;
pub mod synth;
pub mod template;

pub use error::{Error, FormatError, Result};
pub use image::GrayImage;
pub use matcher::{angle_delta, match_templates, Correspondence, GraphMatchParams, MatchResult, StageTimings};
pub use ridgeflow::{OrientationField, RoiMask};
pub use template::{ExtractionConfig, TemplateKind, TextureTemplate, Variant, VirtualMinutia};
pub use search::{Gallery, SearchParams, SearchResult, TemplateSet};
pub use synth::{PlantedPair, SynthConfig};
