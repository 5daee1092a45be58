//! A small dual encoder: one linear projection per modality over fixed
//! input features, with optional low-rank adapters.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView1};
use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use unisim_core::similarity::decide_2afc;
use unisim_core::{ContentHash, MediaItem, MediaKind, SimilarityScore, TiePolicy, TripletSample};

use crate::error::TrainError;
use crate::lora::{dropout, merge, LoraAdapter, LoraConfig};
use crate::loss::{hinge_grad, hinge_loss};

pub const IMAGE_MAP: &str = "image.proj";
pub const TEXT_MAP: &str = "text.proj";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Image,
    Text,
}

impl Modality {
    pub fn map_id(self) -> &'static str {
        match self {
            Modality::Image => IMAGE_MAP,
            Modality::Text => TEXT_MAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyInput {
    pub modality: Modality,
    pub features: Array1<f64>,
}

impl ToyInput {
    pub fn image(features: impl Into<Array1<f64>>) -> Self {
        Self {
            modality: Modality::Image,
            features: features.into(),
        }
    }

    pub fn text(features: impl Into<Array1<f64>>) -> Self {
        Self {
            modality: Modality::Text,
            features: features.into(),
        }
    }

    /// Features derived from the item's locator or text, uniform in [-1, 1].
    pub fn featurize(item: &MediaItem, dim: usize) -> Self {
        let hash = ContentHash::of_bytes(item.locator().as_bytes());
        let mut rng = ChaCha8Rng::from_seed(*hash.as_bytes());
        let dist = Uniform::new_inclusive(-1.0, 1.0);
        let features = Array1::from_shape_fn(dim, |_| dist.sample(&mut rng));
        let modality = match item.kind() {
            MediaKind::Image => Modality::Image,
            MediaKind::Text => Modality::Text,
        };
        Self { modality, features }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyTriplet {
    pub reference: ToyInput,
    pub cand: [ToyInput; 2],
    pub label: u8,
}

impl ToyTriplet {
    pub fn from_sample(s: &TripletSample, dim: usize) -> Self {
        Self {
            reference: ToyInput::featurize(&s.reference, dim),
            cand: [
                ToyInput::featurize(&s.cand[0], dim),
                ToyInput::featurize(&s.cand[1], dim),
            ],
            label: s.label,
        }
    }

    fn slots(&self) -> [&ToyInput; 3] {
        [&self.reference, &self.cand[0], &self.cand[1]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    pub weight: Array2<f64>,
    pub adapter: Option<LoraAdapter>,
}

/// Gradients of the summed loss with respect to each adapter's `A` and `B`.
pub type AdapterGrads = BTreeMap<String, (Array2<f64>, Array2<f64>)>;

#[derive(Debug, Clone, PartialEq)]
pub struct ToyDualEncoder {
    pub image: LinearMap,
    pub text: LinearMap,
}

struct Forward {
    dropped: Array1<f64>,
    low: Option<Array1<f64>>,
    embedding: Array1<f64>,
}

/// Cosine without clamping, with its gradients in `u` and `v`.
fn cosine_with_grad(u: &Array1<f64>, v: &Array1<f64>) -> (f64, Array1<f64>, Array1<f64>) {
    let (nu, nv) = (u.dot(u).sqrt(), v.dot(v).sqrt());
    let c = u.dot(v) / (nu * nv);
    let du = v / (nu * nv) - u * (c / (nu * nu));
    let dv = u / (nu * nv) - v * (c / (nv * nv));
    (c, du, dv)
}

fn cosine(u: &Array1<f64>, v: &Array1<f64>) -> f64 {
    u.dot(v) / (u.dot(u).sqrt() * v.dot(v).sqrt())
}

impl ToyDualEncoder {
    /// Square `dim x dim` projections with entries uniform in `±sqrt(3/dim)`.
    pub fn new(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = (3.0 / dim as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound);
        let mut weight = || Array2::from_shape_fn((dim, dim), |_| dist.sample(&mut rng));
        Self {
            image: LinearMap {
                weight: weight(),
                adapter: None,
            },
            text: LinearMap {
                weight: weight(),
                adapter: None,
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.image.weight.nrows()
    }

    pub fn map(&self, id: &str) -> Result<&LinearMap, TrainError> {
        match id {
            IMAGE_MAP => Ok(&self.image),
            TEXT_MAP => Ok(&self.text),
            _ => Err(TrainError::UnknownTarget(id.into())),
        }
    }

    pub fn map_mut(&mut self, id: &str) -> Result<&mut LinearMap, TrainError> {
        match id {
            IMAGE_MAP => Ok(&mut self.image),
            TEXT_MAP => Ok(&mut self.text),
            _ => Err(TrainError::UnknownTarget(id.into())),
        }
    }

    fn map_of(&self, m: Modality) -> &LinearMap {
        match m {
            Modality::Image => &self.image,
            Modality::Text => &self.text,
        }
    }

    /// Attaches fresh adapters to every configured target.
    pub fn attach(
        &mut self,
        cfg: &LoraConfig,
        frozen_text: bool,
        rng: &mut impl Rng,
    ) -> Result<(), TrainError> {
        for target in &cfg.targets {
            if frozen_text && target == TEXT_MAP {
                return Err(TrainError::FrozenTarget(target.clone()));
            }
            let map = self.map_mut(target)?;
            let (d_out, d_in) = map.weight.dim();
            map.adapter = Some(LoraAdapter::new(target.clone(), d_in, d_out, cfg, rng));
        }
        Ok(())
    }

    pub fn adapters(&self) -> impl Iterator<Item = &LoraAdapter> {
        [&self.image, &self.text]
            .into_iter()
            .filter_map(|m| m.adapter.as_ref())
    }

    /// Base weights with adapters folded in, adapters removed.
    pub fn merged(&self) -> Result<Self, TrainError> {
        let fold = |m: &LinearMap| -> Result<LinearMap, TrainError> {
            let weight = match &m.adapter {
                Some(a) => merge(m.weight.view(), a)?,
                None => m.weight.clone(),
            };
            Ok(LinearMap {
                weight,
                adapter: None,
            })
        };
        Ok(Self {
            image: fold(&self.image)?,
            text: fold(&self.text)?,
        })
    }

    fn forward(&self, x: &ToyInput, rng: Option<&mut ChaCha8Rng>) -> Result<Forward, TrainError> {
        let map = self.map_of(x.modality);
        if x.features.len() != map.weight.ncols() {
            return Err(TrainError::shape(
                "input features",
                map.weight.ncols(),
                x.features.len(),
            ));
        }
        let base = map.weight.dot(&x.features);
        let Some(ad) = &map.adapter else {
            return Ok(Forward {
                dropped: x.features.clone(),
                low: None,
                embedding: base,
            });
        };
        let dropped = match rng {
            Some(rng) => dropout(x.features.view(), ad.dropout, rng),
            None => x.features.clone(),
        };
        let low = ad.a.dot(&dropped);
        let embedding = base + ad.b.dot(&low) * ad.scale();
        Ok(Forward {
            dropped,
            low: Some(low),
            embedding,
        })
    }

    pub fn embed(&self, x: &ToyInput) -> Result<Array1<f64>, TrainError> {
        Ok(self.forward(x, None)?.embedding)
    }

    /// `(sim(ref, cand0), sim(ref, cand1))` in eval mode.
    pub fn similarities(&self, t: &ToyTriplet) -> Result<(f64, f64), TrainError> {
        let [r, c0, c1] = t.slots().map(|x| self.embed(x));
        let r = r?;
        Ok((cosine(&r, &c0?), cosine(&r, &c1?)))
    }

    pub fn decide(&self, t: &ToyTriplet) -> Result<usize, TrainError> {
        let (s0, s1) = self.similarities(t)?;
        let (s0, s1) = (SimilarityScore::new(s0)?, SimilarityScore::new(s1)?);
        Ok(decide_2afc(s0, s1, TiePolicy::PreferFirst)?)
    }

    pub fn accuracy(&self, samples: &[ToyTriplet]) -> Result<f64, TrainError> {
        let mut right = 0usize;
        for t in samples {
            right += (self.decide(t)? == t.label as usize) as usize;
        }
        Ok(right as f64 / samples.len().max(1) as f64)
    }

    /// Summed hinge loss over `batch` and its gradients in the adapter
    /// matrices. Dropout is applied when `rng` is given.
    pub fn loss_and_grad(
        &self,
        batch: &[&ToyTriplet],
        margin: f64,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(f64, AdapterGrads), TrainError> {
        let mut grads: AdapterGrads = self
            .adapters()
            .map(|a| {
                (
                    a.target.clone(),
                    (Array2::zeros(a.a.dim()), Array2::zeros(a.b.dim())),
                )
            })
            .collect();
        let mut total = 0.0;
        for t in batch {
            let mut fw = Vec::with_capacity(3);
            for x in t.slots() {
                fw.push(self.forward(x, rng.as_deref_mut())?);
            }
            let (s0, d_r0, d_c0) = cosine_with_grad(&fw[0].embedding, &fw[1].embedding);
            let (s1, d_r1, d_c1) = cosine_with_grad(&fw[0].embedding, &fw[2].embedding);
            total += hinge_loss(s0, s1, t.label, margin);
            let (g0, g1) = hinge_grad(s0, s1, t.label, margin);
            if g0 == 0.0 && g1 == 0.0 {
                continue;
            }
            let upstream = [d_r0 * g0 + d_r1 * g1, d_c0 * g0, d_c1 * g1];
            for ((x, f), g) in t.slots().into_iter().zip(&fw).zip(upstream) {
                let Some(ad) = &self.map_of(x.modality).adapter else {
                    continue;
                };
                let low = f
                    .low
                    .as_ref()
                    .expect("adapted forward keeps its low-rank activation");
                let (ga, gb) = grads
                    .get_mut(&ad.target)
                    .expect("gradient slot per adapter");
                let s = ad.scale();
                let gl = ad.b.t().dot(&g) * s;
                *gb += &outer(g.view(), low.view()).mapv(|v| v * s);
                *ga += &outer(gl.view(), f.dropped.view());
            }
        }
        Ok((total, grads))
    }
}

fn outer(u: ArrayView1<f64>, v: ArrayView1<f64>) -> Array2<f64> {
    Array2::from_shape_fn((u.len(), v.len()), |(i, j)| u[i] * v[j])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triplet(rng: &mut ChaCha8Rng, dim: usize, label: u8) -> ToyTriplet {
        let d = Uniform::new_inclusive(-1.0, 1.0);
        let mut f = || Array1::from_shape_fn(dim, |_| d.sample(rng));
        ToyTriplet {
            reference: ToyInput::text(f()),
            cand: [ToyInput::image(f()), ToyInput::image(f())],
            label,
        }
    }

    #[test]
    fn unadapted_model_has_no_gradients() {
        let m = ToyDualEncoder::new(4, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = triplet(&mut rng, 4, 0);
        let (_, g) = m.loss_and_grad(&[&t], 0.05, None).unwrap();
        assert!(g.is_empty());
    }

    #[test]
    fn text_adapter_needs_unfrozen_text() {
        let mut m = ToyDualEncoder::new(4, 0);
        let cfg = LoraConfig {
            targets: vec![TEXT_MAP.into()],
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            m.attach(&cfg, true, &mut rng),
            Err(TrainError::FrozenTarget(_))
        ));
        m.attach(&cfg, false, &mut rng).unwrap();
        assert!(m.text.adapter.is_some() && m.image.adapter.is_none());
        let bad = LoraConfig {
            targets: vec!["image.qkv".into()],
            ..Default::default()
        };
        assert!(matches!(
            m.attach(&bad, true, &mut rng),
            Err(TrainError::UnknownTarget(_))
        ));
    }

    #[test]
    fn featurizer_is_deterministic_and_typed() {
        let a = ToyInput::featurize(&MediaItem::text("a dog"), 16);
        assert_eq!(a, ToyInput::featurize(&MediaItem::text("a dog"), 16));
        assert_eq!(a.modality, Modality::Text);
        assert_ne!(
            a.features,
            ToyInput::featurize(&MediaItem::text("a cat"), 16).features
        );
        assert!(a.features.iter().all(|v| v.abs() <= 1.0));
    }
}
