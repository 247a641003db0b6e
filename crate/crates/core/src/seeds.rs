//! Deterministic seed derivation.
//!
//! Every random decision in the toolkit flows from one master seed. Distinct
//! purposes and loop indices are mixed in through splitmix64 so that streams
//! are independent and stable regardless of evaluation order.

/// Domain tags for derived streams.
pub mod tag {
    pub const WALK: u64 = 0x77616c6b; // "walk"
    pub const SHUFFLE: u64 = 0x73687566; // "shuf"
    pub const SUBNET: u64 = 0x73756274; // "subt"
    pub const SPLIT: u64 = 0x73706c74; // "splt"
    pub const EMBED: u64 = 0x656d6264; // "embd"
    pub const DETECT: u64 = 0x64657463; // "detc"
}

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Mix a master seed with a sequence of tags/indices into one stream seed.
pub fn derive(master: u64, parts: &[u64]) -> u64 {
    let mut s = splitmix64(master);
    for &p in parts {
        s = splitmix64(s ^ p.wrapping_mul(0x9e3779b97f4a7c15));
    }
    s
}
