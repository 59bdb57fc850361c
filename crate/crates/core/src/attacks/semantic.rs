//! Caption → segment → summarize → inpaint background regeneration.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{composite, BinaryMask, ImageF};
use crate::rng::RngStream;

use super::inpaint::builtin_inpaint;
use super::segment::builtin_segment;

pub const QUESTIONS: [&str; 3] = [
    "What is the prominent object in this image?",
    "What is the background?",
    "What is the artistic direction of the image?",
];

pub const SUMMARY_INSTRUCTION: &str = "Given the following sentences that describe an image, write in one sentence what the background setting is and in what art style.";

/// Coverage of the mask used when segmentation finds nothing.
pub const FALLBACK_COVERAGE: f64 = 0.25;

/// Text handed to the summarize stage: the instruction followed by the
/// background and style answers.
pub fn summary_request(answers: &[String; 3]) -> String {
    format!("{SUMMARY_INSTRUCTION} {} {}", answers[1].trim(), answers[2].trim())
}

/// The four pluggable stages.
pub trait StageBackends {
    fn caption(&mut self, img: &ImageF, questions: &[&str; 3]) -> Result<[String; 3]>;
    fn segment(&mut self, img: &ImageF, phrase: &str) -> Result<Vec<BinaryMask>>;
    fn summarize(&mut self, answers: &[String; 3]) -> Result<String>;
    fn inpaint(&mut self, img: &ImageF, region: &BinaryMask, prompt: &str) -> Result<ImageF>;
}

/// Deterministic in-process stages. Captioning answers come from `answers`
/// when the caller knows the scene (e.g. a scenegen descriptor), otherwise
/// generic placeholders are returned.
#[derive(Debug, Clone)]
pub struct BuiltinBackends {
    pub answers: Option<[String; 3]>,
    rng: RngStream,
}

impl BuiltinBackends {
    pub fn new(seed: u64, answers: Option<[String; 3]>) -> Self {
        Self {
            answers,
            rng: RngStream::derived(seed, "semregen/inpaint"),
        }
    }
}

impl StageBackends for BuiltinBackends {
    fn caption(&mut self, _img: &ImageF, _questions: &[&str; 3]) -> Result<[String; 3]> {
        Ok(self
            .answers
            .clone()
            .unwrap_or_else(|| ["object".into(), "scenery".into(), "unspecified".into()]))
    }

    fn segment(&mut self, img: &ImageF, _phrase: &str) -> Result<Vec<BinaryMask>> {
        builtin_segment(img)
    }

    fn summarize(&mut self, answers: &[String; 3]) -> Result<String> {
        Ok(format!("A {} background in {} style.", answers[1].trim(), answers[2].trim()))
    }

    fn inpaint(&mut self, img: &ImageF, region: &BinaryMask, prompt: &str) -> Result<ImageF> {
        builtin_inpaint(img, region, prompt, &mut self.rng)
    }
}

/// Unions ranked candidates while the coverage stays within `tau`. The first
/// candidate is always taken. Returns the union and whether its coverage
/// exceeds `tau_max` (the caller then swaps inpainting roles).
pub fn accumulate_masks(candidates: &[BinaryMask], tau: f64, tau_max: f64) -> Result<(BinaryMask, bool)> {
    let first = candidates.first().ok_or(Error::EmptyCandidates)?;
    if !(tau > 0.0 && tau < tau_max && tau_max <= 1.0) {
        return Err(Error::invalid("need 0 < tau < tau_max <= 1"));
    }
    let mut union = first.clone();
    for c in &candidates[1..] {
        let next = union.union(c)?;
        if next.coverage() > tau {
            break;
        }
        union = next;
    }
    let fallback = union.coverage() > tau_max;
    Ok((union, fallback))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackResult {
    pub image: ImageF,
    /// Pixels guaranteed to be copied unchanged from the input.
    pub preserved_mask: BinaryMask,
    pub prompt_used: String,
    pub stage_log: Vec<StageTiming>,
    pub fallback_used: bool,
}

fn timed<T>(log: &mut Vec<StageTiming>, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f()?;
    log.push(StageTiming {
        stage: stage.to_string(),
        seconds: start.elapsed().as_secs_f64(),
    });
    Ok(out)
}

pub fn semantic_regen(img: &ImageF, backends: &mut dyn StageBackends, tau: f64, tau_max: f64) -> Result<AttackResult> {
    if !(tau > 0.0 && tau < tau_max && tau_max <= 1.0) {
        return Err(Error::invalid("need 0 < tau < tau_max <= 1"));
    }
    let (w, h) = img.dims();
    let mut log = Vec::new();
    let answers = timed(&mut log, "caption", || backends.caption(img, &QUESTIONS))?;
    let candidates = timed(&mut log, "segment", || backends.segment(img, &answers[0]))?;
    for c in &candidates {
        if c.dims() != (w, h) {
            return Err(Error::DimensionMismatch {
                expected: (w, h),
                actual: c.dims(),
            });
        }
    }
    let candidates: Vec<BinaryMask> = candidates.into_iter().filter(|c| !c.is_empty()).collect();
    let (foreground, fallback_used) = if candidates.is_empty() {
        (BinaryMask::centered_ellipse(w, h, FALLBACK_COVERAGE), false)
    } else {
        accumulate_masks(&candidates, tau, tau_max)?
    };
    let prompt = timed(&mut log, "summarize", || backends.summarize(&answers))?;
    let region = if fallback_used { foreground.clone() } else { foreground.invert() };
    if region.count() == region.bits().len() {
        return Err(Error::FullMask);
    }
    let preserved = region.invert();
    let painted = timed(&mut log, "inpaint", || backends.inpaint(img, &region, &prompt))?;
    if painted.dims() != (w, h) {
        return Err(Error::DimensionMismatch {
            expected: (w, h),
            actual: painted.dims(),
        });
    }
    let image = composite(img, &painted, &preserved)?;
    Ok(AttackResult {
        image,
        preserved_mask: preserved,
        prompt_used: prompt,
        stage_log: log,
        fallback_used,
    })
}
