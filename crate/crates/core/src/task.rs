use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PerceptualAttribute {
    Brightness,
    Colorfulness,
    Contrast,
    Sharpness,
}

impl PerceptualAttribute {
    pub const ALL: [PerceptualAttribute; 4] = [
        PerceptualAttribute::Brightness,
        PerceptualAttribute::Colorfulness,
        PerceptualAttribute::Contrast,
        PerceptualAttribute::Sharpness,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PerceptualAttribute::Brightness => "brightness",
            PerceptualAttribute::Colorfulness => "colorfulness",
            PerceptualAttribute::Contrast => "contrast",
            PerceptualAttribute::Sharpness => "sharpness",
        }
    }

    /// Adjective used in instructions ("which image is more ...?").
    pub fn adjective(&self) -> &'static str {
        match self {
            PerceptualAttribute::Brightness => "bright",
            PerceptualAttribute::Colorfulness => "colorful",
            PerceptualAttribute::Contrast => "contrasted",
            PerceptualAttribute::Sharpness => "sharp",
        }
    }
}

impl FromStr for PerceptualAttribute {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PerceptualAttribute::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| CoreError::UnknownTask(format!("paa:{s}")))
    }
}

/// Task identity of a sample. The PAA task carries the attribute it judges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaskKind {
    Img2Afc,
    It2Afc,
    Text2Afc,
    Iqa,
    Paa(PerceptualAttribute),
    Ooo,
    Retrieval,
}

/// [`TaskKind`] with the PAA attribute erased; the unit of per-task averaging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskFamily {
    Img2Afc,
    It2Afc,
    Text2Afc,
    Iqa,
    Paa,
    Ooo,
    Retrieval,
}

impl TaskFamily {
    pub const ALL: [TaskFamily; 7] = [
        TaskFamily::Img2Afc,
        TaskFamily::It2Afc,
        TaskFamily::Text2Afc,
        TaskFamily::Iqa,
        TaskFamily::Paa,
        TaskFamily::Ooo,
        TaskFamily::Retrieval,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TaskFamily::Img2Afc => "img2afc",
            TaskFamily::It2Afc => "it2afc",
            TaskFamily::Text2Afc => "text2afc",
            TaskFamily::Iqa => "iqa",
            TaskFamily::Paa => "paa",
            TaskFamily::Ooo => "ooo",
            TaskFamily::Retrieval => "retrieval",
        }
    }

    /// The four 2AFC tasks used for training; the rest are held out.
    pub fn is_core(&self) -> bool {
        matches!(
            self,
            TaskFamily::Img2Afc | TaskFamily::It2Afc | TaskFamily::Text2Afc | TaskFamily::Iqa
        )
    }
}

impl fmt::Display for TaskFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskFamily {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskFamily::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| CoreError::UnknownTask(s.to_string()))
    }
}

impl TaskKind {
    pub fn family(&self) -> TaskFamily {
        match self {
            TaskKind::Img2Afc => TaskFamily::Img2Afc,
            TaskKind::It2Afc => TaskFamily::It2Afc,
            TaskKind::Text2Afc => TaskFamily::Text2Afc,
            TaskKind::Iqa => TaskFamily::Iqa,
            TaskKind::Paa(_) => TaskFamily::Paa,
            TaskKind::Ooo => TaskFamily::Ooo,
            TaskKind::Retrieval => TaskFamily::Retrieval,
        }
    }

    pub fn is_core(&self) -> bool {
        self.family().is_core()
    }

    pub fn attribute(&self) -> Option<PerceptualAttribute> {
        match self {
            TaskKind::Paa(a) => Some(*a),
            _ => None,
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskKind::Paa(attr) => write!(f, "paa:{}", attr.as_str()),
            other => f.write_str(other.family().as_str()),
        }
    }
}

impl FromStr for TaskKind {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(attr) = s.strip_prefix("paa:") {
            return Ok(TaskKind::Paa(attr.parse()?));
        }
        Ok(match s.parse::<TaskFamily>()? {
            TaskFamily::Img2Afc => TaskKind::Img2Afc,
            TaskFamily::It2Afc => TaskKind::It2Afc,
            TaskFamily::Text2Afc => TaskKind::Text2Afc,
            TaskFamily::Iqa => TaskKind::Iqa,
            TaskFamily::Ooo => TaskKind::Ooo,
            TaskFamily::Retrieval => TaskKind::Retrieval,
            TaskFamily::Paa => {
                return Err(CoreError::UnknownTask(format!("{s} (missing attribute)")))
            }
        })
    }
}

impl Serialize for TaskKind {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TaskKind {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
