//! GGM-tree puncturable PRF over a SHA-256 length-doubling PRG.
//!
//! Inputs are walked bit 0 first; node keys are 32 bytes. The left child of
//! a node with key k is SHA-256(0x00 ‖ k) and the right child SHA-256(0x01 ‖ k).

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bits::Bits;

pub const KEY_BYTES: usize = 32;

pub type NodeKey = [u8; KEY_BYTES];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PprfError {
    #[error("input width {got} does not match key width {want}")]
    WidthMismatch { got: usize, want: usize },
    #[error("evaluation at the punctured point")]
    EvaluationAtPuncturedPoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PprfSeed {
    pub key: NodeKey,
    pub input_width: usize,
}

impl PprfSeed {
    pub fn new(key: NodeKey, input_width: usize) -> Self {
        assert!(input_width >= 1 && input_width <= 32);
        PprfSeed { key, input_width }
    }
}

fn child(key: &NodeKey, right: bool) -> NodeKey {
    let mut h = Sha256::new();
    h.update([right as u8]);
    h.update(key);
    h.finalize().into()
}

/// F(s, x) for an x of the seed's input width.
pub fn eval(seed: &PprfSeed, x: &Bits) -> Result<NodeKey, PprfError> {
    if x.len() != seed.input_width {
        return Err(PprfError::WidthMismatch { got: x.len(), want: seed.input_width });
    }
    let mut node = seed.key;
    for bit in x.iter() {
        node = child(&node, bit);
    }
    Ok(node)
}

/// A key punctured at one point: the removed point plus the key of the
/// sibling node at every level of its path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PuncturedKey {
    point: Bits,
    copath: Vec<NodeKey>,
}

impl PuncturedKey {
    pub fn punctured_point(&self) -> &Bits {
        &self.point
    }
}

pub fn puncture(seed: &PprfSeed, x: &Bits) -> Result<PuncturedKey, PprfError> {
    if x.len() != seed.input_width {
        return Err(PprfError::WidthMismatch { got: x.len(), want: seed.input_width });
    }
    let mut node = seed.key;
    let mut copath = Vec::with_capacity(x.len());
    for bit in x.iter() {
        copath.push(child(&node, !bit));
        node = child(&node, bit);
    }
    Ok(PuncturedKey { point: *x, copath })
}

/// Evaluate a punctured key; defined (and equal to [`eval`]) everywhere
/// except the punctured point.
pub fn punc_eval(key: &PuncturedKey, x: &Bits) -> Result<NodeKey, PprfError> {
    if x.len() != key.point.len() {
        return Err(PprfError::WidthMismatch { got: x.len(), want: key.point.len() });
    }
    let split = match x.iter().zip(key.point.iter()).position(|(a, b)| a != b) {
        Some(t) => t,
        None => return Err(PprfError::EvaluationAtPuncturedPoint),
    };
    let mut node = key.copath[split];
    for i in split + 1..x.len() {
        node = child(&node, x.get(i));
    }
    Ok(node)
}
