use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A user's disposition toward a data-access request.
///
/// The declaration order (Allow, Deny, Ask) is the fixed class order used for
/// probability vectors, confusion matrices and argmax tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PrivacyChoice {
    Allow,
    Deny,
    Ask,
}

pub const NUM_CLASSES: usize = 3;

impl PrivacyChoice {
    pub const ALL: [PrivacyChoice; NUM_CLASSES] =
        [PrivacyChoice::Allow, PrivacyChoice::Deny, PrivacyChoice::Ask];

    /// Numeric code: Allow = 1, Deny = 0, Ask = -1.
    pub fn code(self) -> i8 {
        match self {
            PrivacyChoice::Allow => 1,
            PrivacyChoice::Deny => 0,
            PrivacyChoice::Ask => -1,
        }
    }

    pub fn from_code(code: i64) -> Result<Self> {
        match code {
            1 => Ok(PrivacyChoice::Allow),
            0 => Ok(PrivacyChoice::Deny),
            -1 => Ok(PrivacyChoice::Ask),
            other => Err(Error::UnknownCode(other)),
        }
    }

    /// Position in the fixed class order.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn token(self) -> &'static str {
        match self {
            PrivacyChoice::Allow => "Allow",
            PrivacyChoice::Deny => "Deny",
            PrivacyChoice::Ask => "Ask",
        }
    }

    /// Exact, case-sensitive token match.
    pub fn parse_strict(token: &str) -> Result<Self> {
        match token {
            "Allow" => Ok(PrivacyChoice::Allow),
            "Deny" => Ok(PrivacyChoice::Deny),
            "Ask" => Ok(PrivacyChoice::Ask),
            other => Err(Error::UnknownChoice(other.to_string())),
        }
    }

    /// Trim, title-case, then match strictly.
    pub fn parse_canonical(token: &str) -> Result<Self> {
        Self::parse_strict(&canonicalize(token)).map_err(|_| Error::UnknownChoice(token.to_string()))
    }
}

/// Token to code, applying the canonicalization rule.
pub fn encode_choice(token: &str) -> Result<i8> {
    PrivacyChoice::parse_canonical(token).map(PrivacyChoice::code)
}

pub fn decode_choice(code: i64) -> Result<&'static str> {
    PrivacyChoice::from_code(code).map(PrivacyChoice::token)
}

fn canonicalize(token: &str) -> String {
    let trimmed = token.trim();
    let mut chars = trimmed.chars();
    match chars.next() {
        Some(first) => first
            .to_uppercase()
            .chain(chars.flat_map(char::to_lowercase))
            .collect(),
        None => String::new(),
    }
}

impl fmt::Display for PrivacyChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for PrivacyChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_canonical(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes() {
        assert_eq!(encode_choice("Allow").unwrap(), 1);
        assert_eq!(encode_choice("Deny").unwrap(), 0);
        assert_eq!(encode_choice("Ask").unwrap(), -1);
    }

    #[test]
    fn bijection() {
        for c in PrivacyChoice::ALL {
            assert_eq!(PrivacyChoice::from_code(c.code().into()).unwrap(), c);
            assert_eq!(PrivacyChoice::parse_strict(c.token()).unwrap(), c);
            assert_eq!(decode_choice(encode_choice(c.token()).unwrap().into()).unwrap(), c.token());
        }
        assert!(matches!(PrivacyChoice::from_code(2), Err(Error::UnknownCode(2))));
    }

    #[test]
    fn canonicalization() {
        assert!(matches!(
            PrivacyChoice::parse_strict("allow "),
            Err(Error::UnknownChoice(_))
        ));
        assert_eq!(encode_choice("allow ").unwrap(), 1);
        assert_eq!(encode_choice("  DENY").unwrap(), 0);
        assert!(matches!(encode_choice("maybe"), Err(Error::UnknownChoice(_))));
        assert!(matches!(encode_choice(""), Err(Error::UnknownChoice(_))));
    }
}
