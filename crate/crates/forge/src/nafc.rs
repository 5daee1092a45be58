//! N-alternative instances from ranked groups: the top-ranked image against
//! N-1 randomly drawn lower-ranked ones.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use unisim_core::{MediaItem, TaskKind, TripletSample};

use crate::types::RankedGroup;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NafcInstance {
    pub dataset: String,
    #[serde(rename = "ref")]
    pub reference: MediaItem,
    pub alternatives: Vec<MediaItem>,
    pub correct: usize,
}

impl NafcInstance {
    /// The 2-alternative instance as an IT-2AFC triplet.
    pub fn to_triplet(&self) -> Option<TripletSample> {
        let [a, b] = self.alternatives.as_slice() else {
            return None;
        };
        Some(TripletSample::new(
            TaskKind::It2Afc,
            self.dataset.clone(),
            self.reference.clone(),
            [a.clone(), b.clone()],
            self.correct as u8,
        ))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NafcBuild {
    pub instances: Vec<NafcInstance>,
    /// Groups with fewer than N entries or without a unique best entry.
    pub skipped: usize,
}

pub fn build_nafc_instances(
    groups: &[RankedGroup],
    n_alternatives: usize,
    dataset: &str,
    rng: &mut impl Rng,
) -> NafcBuild {
    let mut out = NafcBuild::default();
    for g in groups {
        if n_alternatives < 2 || g.entries.len() < n_alternatives {
            out.skipped += 1;
            continue;
        }
        let best = g.best().expect("non-empty group");
        let top = g.utility(g.entries[best].1);
        let rest: Vec<&MediaItem> = g
            .entries
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != best)
            .map(|(_, (m, _))| m)
            .collect();
        if g.entries
            .iter()
            .enumerate()
            .any(|(i, (_, v))| i != best && g.utility(*v) == top)
        {
            out.skipped += 1;
            continue;
        }
        let mut alternatives: Vec<MediaItem> = rest
            .choose_multiple(rng, n_alternatives - 1)
            .map(|m| (*m).clone())
            .collect();
        let correct = rng.gen_range(0..n_alternatives);
        alternatives.insert(correct, g.entries[best].0.clone());
        out.instances.push(NafcInstance {
            dataset: dataset.to_string(),
            reference: MediaItem::text(g.prompt.clone()),
            alternatives,
            correct,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::RankOrder;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn group(k: usize) -> RankedGroup {
        RankedGroup {
            prompt: format!("p{k}"),
            entries: (1..=9)
                .map(|r| (MediaItem::image(format!("mem://{k}/{r}")), r as f64))
                .collect(),
            ordering: RankOrder::RankAscendingBest,
        }
    }

    #[test]
    fn best_image_is_the_correct_alternative() {
        let groups: Vec<_> = (0..50).map(group).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [2, 4, 8, 9] {
            let b = build_nafc_instances(&groups, n, "hpdv2", &mut rng);
            assert_eq!((b.instances.len(), b.skipped), (50, 0));
            for (k, inst) in b.instances.iter().enumerate() {
                assert_eq!(inst.alternatives.len(), n);
                assert_eq!(
                    inst.alternatives[inst.correct].locator(),
                    format!("mem://{k}/1")
                );
                let mut uniq = inst.alternatives.clone();
                uniq.sort_by(|a, b| a.locator().cmp(b.locator()));
                uniq.dedup();
                assert_eq!(uniq.len(), n);
            }
        }
        let too_many = build_nafc_instances(&groups, 10, "hpdv2", &mut rng);
        assert_eq!((too_many.instances.len(), too_many.skipped), (0, 50));
    }

    #[test]
    fn two_alternatives_convert_to_triplets() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = build_nafc_instances(&[group(0)], 2, "hpdv2", &mut rng);
        let t = b.instances[0].to_triplet().unwrap();
        assert_eq!(t.preferred().unwrap().locator(), "mem://0/1");
    }
}
