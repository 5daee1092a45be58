use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use unisim_core::MediaItem;

use crate::error::ForgeError;

/// How the numbers in a [`RankedGroup`] compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankOrder {
    /// Rank 1 is best.
    RankAscendingBest,
    ScoreHigherBetter,
}

/// Images generated for (or judged against) one prompt, with a rank or score each.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedGroup {
    pub prompt: String,
    pub entries: Vec<(MediaItem, f64)>,
    pub ordering: RankOrder,
}

impl RankedGroup {
    /// Utility where larger is always better.
    pub fn utility(&self, value: f64) -> f64 {
        match self.ordering {
            RankOrder::RankAscendingBest => -value,
            RankOrder::ScoreHigherBetter => value,
        }
    }

    /// Index of the best entry; the first one wins among equals.
    pub fn best(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, (_, v)) in self.entries.iter().enumerate() {
            if best.is_none_or(|b| self.utility(*v) > self.utility(self.entries[b].1)) {
                best = Some(i);
            }
        }
        best
    }

    pub fn worst(&self) -> Option<usize> {
        let mut worst: Option<usize> = None;
        for (i, (_, v)) in self.entries.iter().enumerate() {
            if worst.is_none_or(|w| self.utility(*v) < self.utility(self.entries[w].1)) {
                worst = Some(i);
            }
        }
        worst
    }
}

/// One pristine image and its corrupted versions by severity level.
#[derive(Debug, Clone, PartialEq)]
pub struct SeverityLadder {
    pub reference: MediaItem,
    pub rungs: BTreeMap<u32, MediaItem>,
}

/// Macro-class name to the source class ids it merges.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MacroClassMap(pub BTreeMap<String, BTreeSet<String>>);

impl MacroClassMap {
    pub const IMAGENET_NAMES: [&'static str; 6] = [
        "aquatic animals",
        "terrestrial animals",
        "clothes",
        "transportations",
        "places",
        "musical instruments",
    ];

    pub fn check_disjoint(&self) -> Result<(), ForgeError> {
        let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
        for (name, classes) in &self.0 {
            for c in classes {
                if let Some(prev) = owner.insert(c, name) {
                    return Err(ForgeError::OverlappingClasses(
                        prev.into(),
                        name.clone(),
                        c.clone(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn macro_of(&self, class: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(_, classes)| classes.contains(class))
            .map(|(name, _)| name.as_str())
    }
}
