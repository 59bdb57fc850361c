//! Attack suite: distortions, regeneration proxies, and the
//! segmentation-guided background regeneration pipeline.

mod distort;
pub mod external;
mod inpaint;
mod segment;
pub mod semantic;
mod spec;

use std::time::Duration;

pub use distort::{apply_distortion, regen_proxy, rinse};
pub use external::{ExternalBackend, StageRequest, StageResponse, DEFAULT_TIMEOUT, PROTOCOL_VERSION};
pub use inpaint::builtin_inpaint;
pub use segment::{builtin_segment, otsu_threshold, spectral_residual};
pub use semantic::{
    accumulate_masks, semantic_regen, summary_request, AttackResult, BuiltinBackends, StageBackends, StageTiming,
    QUESTIONS, SUMMARY_INSTRUCTION,
};
pub use spec::{
    AttackSpec, Backend, DEFAULT_RINSE_CYCLES, DEFAULT_RINSE_STRENGTH, DEFAULT_TAU, DEFAULT_TAU_MAX,
};

use crate::error::Result;
use crate::image::{BinaryMask, ImageF};
use crate::rng::RngStream;

/// Per-call context for [`run_attack`].
#[derive(Debug, Clone)]
pub struct AttackContext {
    /// Seed for every random draw the attack makes.
    pub seed: u64,
    /// Known captioning answers for the built-in backend.
    pub caption_answers: Option<[String; 3]>,
    pub backend_timeout: Duration,
}

impl AttackContext {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            caption_answers: None,
            backend_timeout: DEFAULT_TIMEOUT,
        }
    }
}

/// Runs any attack. Distortions report an empty preserved mask, except
/// `Identity`, which preserves everything.
pub fn run_attack(img: &ImageF, spec: &AttackSpec, ctx: &AttackContext) -> Result<AttackResult> {
    spec.validate()?;
    let (w, h) = img.dims();
    match spec {
        AttackSpec::SemanticRegen { tau, tau_max, backend } => match backend {
            Backend::BuiltIn => {
                let mut be = BuiltinBackends::new(ctx.seed, ctx.caption_answers.clone());
                semantic_regen(img, &mut be, *tau, *tau_max)
            }
            Backend::External(cmd) => {
                let mut be = ExternalBackend::spawn(cmd, ctx.backend_timeout)?;
                semantic_regen(img, &mut be, *tau, *tau_max)
            }
        },
        _ => {
            let mut rng = RngStream::derived(ctx.seed, "attack/distortion");
            let start = std::time::Instant::now();
            let image = apply_distortion(img, spec, &mut rng)?;
            Ok(AttackResult {
                image,
                preserved_mask: BinaryMask::filled(w, h, matches!(spec, AttackSpec::Identity)),
                prompt_used: String::new(),
                stage_log: vec![StageTiming {
                    stage: spec.name().to_string(),
                    seconds: start.elapsed().as_secs_f64(),
                }],
                fallback_used: false,
            })
        }
    }
}
