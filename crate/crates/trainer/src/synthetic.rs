//! Synthetic 2AFC tasks labelled by a teacher encoder.

use ndarray::Array1;
use rand::distributions::{Distribution, Uniform};
use rand::Rng;

use crate::model::{Modality, ToyDualEncoder, ToyInput, ToyTriplet};

/// `student` with its image projection shifted by a random matrix whose
/// entries are uniform in `±shift * bound`, `bound` being the largest
/// absolute base weight.
pub fn shifted_teacher(student: &ToyDualEncoder, shift: f64, rng: &mut impl Rng) -> ToyDualEncoder {
    let mut teacher = student.merged().expect("merging own adapters cannot fail");
    let bound = teacher
        .image
        .weight
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        * shift;
    let dist = Uniform::new_inclusive(-bound, bound);
    teacher.image.weight.mapv_inplace(|w| w + dist.sample(rng));
    teacher
}

fn input(modality: Modality, dim: usize, rng: &mut impl Rng) -> ToyInput {
    let dist = Uniform::new_inclusive(-1.0, 1.0);
    ToyInput {
        modality,
        features: Array1::from_shape_fn(dim, |_| dist.sample(rng)),
    }
}

/// `n` triplets with random inputs of the given modalities, labelled by
/// `teacher` and kept only when its two similarities differ by more than
/// `min_gap`.
pub fn teacher_triplets(
    teacher: &ToyDualEncoder,
    reference: Modality,
    candidates: Modality,
    n: usize,
    min_gap: f64,
    rng: &mut impl Rng,
) -> Vec<ToyTriplet> {
    let dim = teacher.dim();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut t = ToyTriplet {
            reference: input(reference, dim, rng),
            cand: [input(candidates, dim, rng), input(candidates, dim, rng)],
            label: 0,
        };
        let (s0, s1) = teacher
            .similarities(&t)
            .expect("teacher accepts its own inputs");
        if (s0 - s1).abs() > min_gap {
            t.label = (s1 > s0) as u8;
            out.push(t);
        }
    }
    out
}
