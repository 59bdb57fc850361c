//! Behaviour of the attack suite on generated scenes.

use wmlab::attacks::{builtin_inpaint, run_attack, AttackContext, AttackSpec};
use wmlab::codecs::{ring_detect, ring_embed, RingKey};
use wmlab::image::luminance;
use wmlab::metrics::mssim;
use wmlab::scenegen::generate_scene;
use wmlab::RngStream;

#[test]
fn inpainting_removes_most_carrier_energy_from_region() {
    for seed in 0..8 {
        let scene = generate_scene(seed, 256).unwrap();
        let key = RingKey::new(seed + 100);
        let marked = ring_embed(&scene.image, &key, seed + 200).unwrap();
        let background = scene.gt_mask.invert();
        let out = builtin_inpaint(&marked, &background, "", &mut RngStream::new(seed)).unwrap();

        let (s, m, o) = (luminance(&scene.image), luminance(&marked), luminance(&out));
        let (mut dot, mut energy) = (0.0, 0.0);
        for (i, &bg) in background.bits().iter().enumerate() {
            if bg {
                let carrier = m.data()[i] - s.data()[i];
                dot += (o.data()[i] - s.data()[i]) * carrier;
                energy += carrier * carrier;
            }
        }
        // Share of the carrier still present along its own direction.
        let retained = (dot / energy).max(0.0).powi(2);
        assert!(retained <= 0.2, "seed {seed}: retained {retained}");
    }
}

#[test]
fn blur_raises_ring_p_value() {
    let blur = AttackSpec::Blur { sigma: 1.0 };
    let (mut before, mut after) = (0.0, 0.0);
    for seed in 0..10 {
        let scene = generate_scene(seed, 256).unwrap();
        let key = RingKey::new(seed);
        let marked = ring_embed(&scene.image, &key, seed ^ 0x5a).unwrap();
        let blurred = run_attack(&marked, &blur, &AttackContext::new(seed)).unwrap().image;
        let (p0, p1) = (ring_detect(&marked, &key).unwrap(), ring_detect(&blurred, &key).unwrap());
        assert!(p1.score >= p0.score, "seed {seed}: {} -> {}", p0.score, p1.score);
        before += p0.p_value;
        after += p1.p_value;
    }
    assert!(after >= before);
}

#[test]
fn zero_strength_attacks_are_identity() {
    let scene = generate_scene(4, 128).unwrap();
    let ctx = AttackContext::new(9);
    for spec in [
        AttackSpec::Identity,
        AttackSpec::Noise { sigma: 0.0 },
        AttackSpec::Resize { factor: 1.0 },
        AttackSpec::RegenProxy { strength: 0.0, steps: 3 },
        AttackSpec::Rinse { cycles: 4, strength: 0.0, steps: 3 },
    ] {
        let res = run_attack(&scene.image, &spec, &ctx).unwrap();
        assert_eq!(res.image, scene.image, "{spec}");
    }
}

#[test]
fn distortions_are_seed_deterministic() {
    let scene = generate_scene(6, 64).unwrap();
    for spec in ["noise:sigma=0.05", "rinse:steps=2", "regen:strength=0.1"] {
        let spec: AttackSpec = spec.parse().unwrap();
        let a = run_attack(&scene.image, &spec, &AttackContext::new(1)).unwrap().image;
        let b = run_attack(&scene.image, &spec, &AttackContext::new(1)).unwrap().image;
        let c = run_attack(&scene.image, &spec, &AttackContext::new(2)).unwrap().image;
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}

#[test]
fn semantic_regen_preserves_its_mask_exactly() {
    for seed in 0..6 {
        let scene = generate_scene(seed, 128).unwrap();
        let res = run_attack(&scene.image, &AttackSpec::semantic_default(), &AttackContext::new(seed)).unwrap();
        assert!(!res.preserved_mask.is_empty());
        for (i, &keep) in res.preserved_mask.bits().iter().enumerate() {
            if keep {
                for c in 0..3 {
                    assert_eq!(res.image.data()[3 * i + c], scene.image.data()[3 * i + c]);
                }
            }
        }
        assert_eq!(mssim(&scene.image, &res.image, &res.preserved_mask).unwrap(), 1.0);
        assert_ne!(res.image, scene.image);
        let stages: Vec<_> = res.stage_log.iter().map(|s| s.stage.as_str()).collect();
        assert_eq!(stages, ["caption", "segment", "summarize", "inpaint"]);
    }
}
