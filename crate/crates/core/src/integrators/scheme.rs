use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeId {
    #[serde(rename = "EM")]
    Em,
    #[serde(rename = "BBK")]
    Bbk,
    #[serde(rename = "SPV")]
    Spv,
    #[serde(rename = "SVV")]
    Svv,
    #[serde(rename = "BAOAB")]
    Baoab,
    #[serde(rename = "OBABO")]
    Obabo,
    #[serde(rename = "rOABAO")]
    Roabao,
    #[serde(rename = "SES")]
    Ses,
    #[serde(rename = "OD-EM")]
    OdEm,
    #[serde(rename = "OD-LM")]
    OdLm,
}

impl SchemeId {
    pub const KINETIC: [SchemeId; 8] = [
        SchemeId::Em,
        SchemeId::Bbk,
        SchemeId::Spv,
        SchemeId::Svv,
        SchemeId::Baoab,
        SchemeId::Obabo,
        SchemeId::Roabao,
        SchemeId::Ses,
    ];

    pub const OVERDAMPED: [SchemeId; 2] = [SchemeId::OdEm, SchemeId::OdLm];

    pub fn tag(self) -> &'static str {
        match self {
            SchemeId::Em => "EM",
            SchemeId::Bbk => "BBK",
            SchemeId::Spv => "SPV",
            SchemeId::Svv => "SVV",
            SchemeId::Baoab => "BAOAB",
            SchemeId::Obabo => "OBABO",
            SchemeId::Roabao => "rOABAO",
            SchemeId::Ses => "SES",
            SchemeId::OdEm => "OD-EM",
            SchemeId::OdLm => "OD-LM",
        }
    }

    pub fn is_kinetic(self) -> bool {
        !matches!(self, SchemeId::OdEm | SchemeId::OdLm)
    }

    /// The closing force of a step is reused as the opening force of the next.
    pub fn reuses_gradient(self) -> bool {
        matches!(
            self,
            SchemeId::Baoab | SchemeId::Obabo | SchemeId::Bbk | SchemeId::Svv
        )
    }

    /// Has a consistent overdamped limit as `γ → ∞`.
    pub fn is_glc(self) -> bool {
        matches!(self, SchemeId::Baoab | SchemeId::Obabo | SchemeId::Roabao)
    }

    /// Fresh standard-normal vectors of length `n` drawn per step in steady
    /// state (SES draws one vector of length `2n`; BBK carries one over).
    pub fn gaussians_per_step(self) -> usize {
        match self {
            SchemeId::Obabo | SchemeId::Svv | SchemeId::Roabao => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '-' | '_'))
            .collect::<String>()
            .to_ascii_lowercase();
        let id = match key.as_str() {
            "em" => SchemeId::Em,
            "bbk" => SchemeId::Bbk,
            "spv" => SchemeId::Spv,
            "svv" => SchemeId::Svv,
            "baoab" => SchemeId::Baoab,
            "obabo" => SchemeId::Obabo,
            "roabao" => SchemeId::Roabao,
            "ses" | "eb" => SchemeId::Ses,
            "odem" => SchemeId::OdEm,
            "odlm" => SchemeId::OdLm,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown scheme '{s}'; valid tags: EM, BBK, SPV, SVV, BAOAB, OBABO, rOABAO, SES, OD-EM, OD-LM"
                )))
            }
        };
        Ok(id)
    }
}
