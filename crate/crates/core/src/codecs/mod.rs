//! Watermark codecs: embed/detect pairs sharing secret key material.

pub mod carrier;
pub mod dwtdct;
pub mod keyfile;
pub mod latentbit;
pub mod message;
pub mod ncx2;
pub mod ring;
pub mod spread;
pub mod watermark;

pub use dwtdct::{dwtdct_embed, dwtdct_extract, DwtDctKey};
pub use keyfile::KeyFields;
pub use latentbit::{latentbit_embed, latentbit_extract, LatentBitKey};
pub use message::{BitMessage, BitOutcome, DetectionOutcome, PValueOutcome, MESSAGE_BITS};
pub use ncx2::ncx2_cdf;
pub use ring::{carrier_only, ring_detect, ring_embed, RingKey};
pub use spread::{spread_embed, spread_extract, SpreadKey};
pub use watermark::{CodecKind, Watermark};
