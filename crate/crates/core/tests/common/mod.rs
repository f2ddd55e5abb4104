#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use texmatch_core::template::quantize_angle;
use texmatch_core::{TemplateKind, TextureTemplate, Variant, VirtualMinutia};

pub fn unit_vector(rng: &mut ChaCha8Rng, len: usize) -> Vec<f32> {
    let mut v: Vec<f32> = (0..len).map(|_| StandardNormal.sample(rng)).map(|x: f64| x as f32).collect();
    texmatch_core::descriptor::normalize_row(&mut v);
    v
}

/// Template with integral coordinates and f32-exact angles, i.e. one the file
/// format can hold. Latents get consecutive dual pairs.
pub fn random_template(rng: &mut ChaCha8Rng, kind: TemplateKind, points: usize, descriptor_len: usize) -> TextureTemplate {
    let mut minutiae = Vec::new();
    for g in 0..points as u32 {
        let x = rng.random_range(0..2000u16) as f64;
        let y = rng.random_range(0..2000u16) as f64;
        let theta = quantize_angle(rng.random_range(0.0..TAU));
        minutiae.push(VirtualMinutia { x, y, theta, dual_group: g });
        if kind == TemplateKind::Latent {
            minutiae.push(VirtualMinutia { x, y, theta: quantize_angle(theta + PI), dual_group: g });
        }
    }
    let descriptors = (0..minutiae.len()).flat_map(|_| unit_vector(rng, descriptor_len)).collect();
    let variant = Variant::ALL[rng.random_range(0..4)];
    TextureTemplate { kind, variant, stride: 32, minutiae, descriptors, descriptor_len }
}

/// Reference with random geometry and descriptors, and a latent made of a
/// noisy rigid copy of some of its points. The correct dual of each latent
/// point carries a noisy copy of the reference descriptor.
pub fn random_pair(rng: &mut ChaCha8Rng, n_ref: usize, n_lat: usize, descriptor_len: usize) -> (TextureTemplate, TextureTemplate) {
    let mut reference = TextureTemplate::empty(TemplateKind::Reference, Variant::Raw, 32, descriptor_len);
    for g in 0..n_ref as u32 {
        reference.minutiae.push(VirtualMinutia {
            x: rng.random_range(0.0..400.0),
            y: rng.random_range(0.0..400.0),
            theta: rng.random_range(0.0..TAU),
            dual_group: g,
        });
        reference.descriptors.extend(unit_vector(rng, descriptor_len));
    }
    let mut latent = TextureTemplate::empty(TemplateKind::Latent, Variant::Raw, 32, descriptor_len);
    let phi = rng.random_range(0.0..TAU);
    let (s, c) = phi.sin_cos();
    let mut picked: Vec<usize> = (0..n_ref).collect();
    for i in (1..picked.len()).rev() {
        picked.swap(i, rng.random_range(0..=i));
    }
    for (g, &ri) in picked[..n_lat].iter().enumerate() {
        let m = reference.minutiae[ri];
        let x = c * m.x - s * m.y + 500.0 + rng.random_range(-2.0..2.0);
        let y = s * m.x + c * m.y + 500.0 + rng.random_range(-2.0..2.0);
        let theta = (m.theta + phi + rng.random_range(-0.05..0.05)).rem_euclid(TAU);
        let base = theta.rem_euclid(PI);
        for t in [base, base + PI] {
            latent.minutiae.push(VirtualMinutia { x, y, theta: t, dual_group: g as u32 });
            let correct = texmatch_core::angle_delta(t, theta) < PI / 2.0;
            let d = if correct {
                let mut d: Vec<f32> = reference
                    .descriptor(ri)
                    .iter()
                    .map(|&v| { let e: f64 = StandardNormal.sample(rng); v + 0.03 * e as f32 })
                    .collect::<Vec<f32>>();
                texmatch_core::descriptor::normalize_row(&mut d);
                d
            } else {
                unit_vector(rng, descriptor_len)
            };
            latent.descriptors.extend(d);
        }
    }
    (latent, reference)
}

/// Applies one rotation about the origin plus a translation to every minutia.
pub fn move_rigidly(t: &TextureTemplate, phi: f64, tx: f64, ty: f64) -> TextureTemplate {
    let (s, c) = phi.sin_cos();
    let mut out = t.clone();
    for m in &mut out.minutiae {
        let (x, y) = (m.x, m.y);
        m.x = c * x - s * y + tx;
        m.y = s * x + c * y + ty;
        m.theta = (m.theta + phi).rem_euclid(TAU);
    }
    out
}
