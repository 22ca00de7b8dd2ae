use std::fmt;

use serde::{Deserialize, Serialize};

pub const MSAT_PER_SAT: u64 = 1_000;
pub const MSAT_PER_BTC: u64 = 100_000_000 * MSAT_PER_SAT;

/// Formats a millisatoshi amount as a BTC decimal with full msat precision.
///
/// Integer-only so the output never depends on float formatting.
pub fn format_btc(msat: u64) -> String {
    format!("{}.{:011}", msat / MSAT_PER_BTC, msat % MSAT_PER_BTC)
}

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }

            pub fn as_bytes(&self) -> &[u8] {
                self.0.as_bytes()
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({:?})", stringify!($name), self.0)
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }
    };
}

string_id!(
    /// Network participant identifier.
    NodeId
);
string_id!(
    /// Channel identifier, unique within a world.
    ChannelId
);
string_id!(
    /// Symbolic asset / chain identifier such as `BTC` or `SEC`.
    AssetId
);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn btc_formatting_is_exact() {
        assert_eq!(format_btc(0), "0.00000000000");
        assert_eq!(format_btc(1), "0.00000000001");
        assert_eq!(format_btc(61_851 * MSAT_PER_BTC / 100), "618.51000000000");
        assert_eq!(format_btc(20 * MSAT_PER_BTC), "20.00000000000");
    }
}
