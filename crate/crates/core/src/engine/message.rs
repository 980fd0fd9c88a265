use crate::crypto::{Ciphertext, PublicKey};
use crate::simnet::{Payload, PayloadKind};

/// Bytes used to encode an agent index on the wire.
pub const INDEX_BYTES: usize = 4;

/// Protocol messages exchanged between agents. Neither the CPA, its cost
/// nor the bound ever appear in a payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    /// Torch passed forward: start a fresh traversal.
    Cpa,
    /// Torch passed back: try the next value.
    Backtrack,
    /// The sender left the CPA; zero the share held against it.
    ZeroShare(usize),
    NewOptimumFound,
    Complete,
    /// Encrypted indicator vector of the sender's current value.
    ZVector { cts: Vec<Ciphertext>, width: usize },
    /// Blinded, encrypted share of one pairwise cost.
    YValue { ct: Ciphertext, width: usize },
    PubKey(PublicKey),
}

impl Payload for Message {
    fn tag(&self) -> &'static str {
        match self {
            Message::Cpa => "CPA_MSG",
            Message::Backtrack => "BACKTRACK_MSG",
            Message::ZeroShare(_) => "ZERO_SHARE_MSG",
            Message::NewOptimumFound => "NEW_OPTIMUM_FOUND",
            Message::Complete => "COMPLETE",
            Message::ZVector { .. } => "Z_VECTOR",
            Message::YValue { .. } => "Y_VALUE",
            Message::PubKey(_) => "PUBKEY",
        }
    }

    fn kind(&self) -> PayloadKind {
        match self {
            Message::Cpa | Message::Backtrack | Message::NewOptimumFound | Message::Complete => {
                PayloadKind::Command
            }
            Message::ZeroShare(_) => PayloadKind::Index,
            Message::ZVector { .. } | Message::YValue { .. } => PayloadKind::Ciphertext,
            Message::PubKey(_) => PayloadKind::PublicKey,
        }
    }

    fn byte_len(&self) -> usize {
        match self {
            Message::Cpa | Message::Backtrack | Message::NewOptimumFound | Message::Complete => 0,
            Message::ZeroShare(_) => INDEX_BYTES,
            Message::ZVector { cts, width } => cts.len() * width,
            Message::YValue { width, .. } => *width,
            Message::PubKey(pk) => pk.key_bytes(),
        }
    }
}

impl Message {
    /// Wire bytes of the payload (without the tag).
    pub fn payload_bytes(&self) -> Vec<u8> {
        match self {
            Message::Cpa | Message::Backtrack | Message::NewOptimumFound | Message::Complete => Vec::new(),
            Message::ZeroShare(k) => (*k as u32).to_be_bytes().to_vec(),
            Message::ZVector { cts, width } => cts.iter().flat_map(|c| c.to_bytes_padded(*width)).collect(),
            Message::YValue { ct, width } => ct.to_bytes_padded(*width),
            Message::PubKey(pk) => pk.modulus().to_bytes_be(),
        }
    }
}
