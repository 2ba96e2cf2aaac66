//! Contiguous partitions of `{1, ..., n}` and their three equivalent
//! encodings.
//!
//! A segmentation of an ordered sequence can be written as
//!
//! * change point indicators `c = (c_1, ..., c_{n-1})` with `c_t = 1`
//!   meaning time `t + 1` starts a new block,
//! * cluster labels `e = (e_1, ..., e_n)` with `e_1 = 1` and unit steps,
//! * an ordered set of blocks `S_j = {tau_{j-1}+1, ..., tau_j}` given by
//!   right endpoints `tau_1 < ... < tau_k = n`.
//!
//! The encodings are linked by `c_t = e_{t+1} - e_t` and
//! `tau_j = max{t : e_t = j}`; conversions here are lossless. Times and
//! endpoints in this module and in serialized output are 1-based.

use serde::{Deserialize, Serialize};

use crate::error::{CcpError, Result};

/// Largest `n` accepted by [`enumerate_contiguous`]; the space has
/// `2^(n-1)` elements, so enumeration is only meant for oracle use.
pub const ENUMERATION_LIMIT: usize = 20;

/// A block of consecutive times, 1-based and inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }
}

/// Change point indicators `c_1, ..., c_{n-1}` for a series of length `n`.
///
/// `c_t = 1` declares time `t + 1` a change point. Entry `t` (1-based) is
/// stored at slice index `t - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeIndicators {
    c: Vec<u8>,
    n: usize,
}

impl ChangeIndicators {
    pub fn new(c: Vec<u8>, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(CcpError::InvalidInput(format!(
                "series length must be >= 2, got {n}"
            )));
        }
        if c.len() != n - 1 {
            return Err(CcpError::InvalidInput(format!(
                "expected {} change indicators for series length {n}, got {}",
                n - 1,
                c.len()
            )));
        }
        if let Some(bad) = c.iter().find(|&&v| v > 1) {
            return Err(CcpError::InvalidInput(format!(
                "change indicators must be 0 or 1, got {bad}"
            )));
        }
        Ok(Self { c, n })
    }

    /// All-zero indicators: the single-block partition.
    pub fn single_block(n: usize) -> Result<Self> {
        Self::new(vec![0; n.saturating_sub(1)], n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.c
    }

    /// Number of blocks `k = 1 + sum(c)`.
    pub fn num_blocks(&self) -> usize {
        1 + self.c.iter().map(|&v| v as usize).sum::<usize>()
    }

    /// 1-based times `t + 1` at which a change point occurs.
    pub fn change_times(&self) -> Vec<usize> {
        self.c
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 1)
            .map(|(idx, _)| idx + 2)
            .collect()
    }

    /// Cluster labels via `e_1 = 1`, `e_{t+1} = e_t + c_t`.
    pub fn to_labels(&self) -> ClusterLabels {
        let mut e = Vec::with_capacity(self.n);
        let mut cur = 1usize;
        e.push(cur);
        for &ct in &self.c {
            cur += ct as usize;
            e.push(cur);
        }
        ClusterLabels { e }
    }

    pub fn to_blocks(&self) -> BlockSet {
        self.to_labels().to_blocks()
    }
}

/// Cluster labels `e_1, ..., e_n` of a contiguous partition:
/// `e_1 = 1`, consecutive entries differ by 0 or 1, `e_n` equals the
/// number of blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabels {
    e: Vec<usize>,
}

impl ClusterLabels {
    pub fn new(e: Vec<usize>) -> Result<Self> {
        if e.len() < 2 {
            return Err(CcpError::InvalidInput(format!(
                "need at least 2 labels, got {}",
                e.len()
            )));
        }
        if e[0] != 1 {
            return Err(CcpError::InvalidInput(format!(
                "first cluster label must be 1, got {}",
                e[0]
            )));
        }
        for t in 1..e.len() {
            let step = e[t] as i64 - e[t - 1] as i64;
            if step != 0 && step != 1 {
                return Err(CcpError::InvalidInput(format!(
                    "labels must be non-decreasing with unit steps; \
                     positions {t} and {} hold {} and {}",
                    t + 1,
                    e[t - 1],
                    e[t]
                )));
            }
        }
        Ok(Self { e })
    }

    pub fn n(&self) -> usize {
        self.e.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.e
    }

    pub fn num_blocks(&self) -> usize {
        *self.e.last().expect("labels are non-empty")
    }

    /// Inverse of [`ChangeIndicators::to_labels`]: `c_t = e_{t+1} - e_t`.
    pub fn to_indicators(&self) -> ChangeIndicators {
        let c: Vec<u8> = self
            .e
            .windows(2)
            .map(|w| (w[1] - w[0]) as u8)
            .collect();
        ChangeIndicators { c, n: self.e.len() }
    }

    /// Blocks with right endpoints `tau_j = max{t : e_t = j}`.
    pub fn to_blocks(&self) -> BlockSet {
        let k = self.num_blocks();
        let mut tau = Vec::with_capacity(k);
        for t in 1..self.e.len() {
            if self.e[t] != self.e[t - 1] {
                tau.push(t); // 1-based right endpoint of the previous block
            }
        }
        tau.push(self.e.len());
        BlockSet { tau }
    }
}

/// A contiguous partition as ordered blocks, stored through the right
/// endpoints `tau_1 < ... < tau_k = n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSet {
    tau: Vec<usize>,
}

impl BlockSet {
    pub fn new(tau: Vec<usize>) -> Result<Self> {
        if tau.is_empty() {
            return Err(CcpError::InvalidInput("empty endpoint list".into()));
        }
        if tau[0] == 0 || !tau.windows(2).all(|w| w[0] < w[1]) {
            return Err(CcpError::InvalidInput(
                "block endpoints must be strictly increasing and >= 1".into(),
            ));
        }
        Ok(Self { tau })
    }

    pub fn n(&self) -> usize {
        *self.tau.last().expect("endpoints are non-empty")
    }

    pub fn num_blocks(&self) -> usize {
        self.tau.len()
    }

    /// Right endpoints `tau_1, ..., tau_k` (1-based, last equals `n`).
    pub fn endpoints(&self) -> &[usize] {
        &self.tau
    }

    pub fn blocks(&self) -> Vec<Interval> {
        let mut out = Vec::with_capacity(self.tau.len());
        let mut start = 1;
        for &end in &self.tau {
            out.push(Interval { start, end });
            start = end + 1;
        }
        out
    }

    /// 1-based change times `{tau_j + 1 : j < k}`.
    pub fn change_times(&self) -> Vec<usize> {
        self.tau[..self.tau.len() - 1]
            .iter()
            .map(|&t| t + 1)
            .collect()
    }

    pub fn to_labels(&self) -> ClusterLabels {
        let mut e = Vec::with_capacity(self.n());
        for (j, block) in self.blocks().iter().enumerate() {
            e.extend(std::iter::repeat(j + 1).take(block.len()));
        }
        ClusterLabels { e }
    }

    pub fn to_indicators(&self) -> ChangeIndicators {
        self.to_labels().to_indicators()
    }
}

/// Yields every contiguous partition of `{1, ..., n}` exactly once as
/// change indicators, in binary counting order over `(c_1, ..., c_{n-1})`.
///
/// Guarded to `2 <= n <= 20` since the space has `2^(n-1)` elements.
pub fn enumerate_contiguous(n: usize) -> Result<impl Iterator<Item = ChangeIndicators>> {
    if !(2..=ENUMERATION_LIMIT).contains(&n) {
        return Err(CcpError::InvalidInput(format!(
            "enumeration supports 2 <= n <= {ENUMERATION_LIMIT}, got {n}"
        )));
    }
    let bits = n - 1;
    Ok((0u32..(1u32 << bits)).map(move |mask| {
        let c: Vec<u8> = (0..bits).map(|t| ((mask >> t) & 1) as u8).collect();
        ChangeIndicators { c, n }
    }))
}

/// JSON-facing form of a partition: `{"n": .., "c": [..], "tau": [..]}`
/// with 1-based endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionRecord {
    pub n: usize,
    pub c: Vec<u8>,
    pub tau: Vec<usize>,
}

impl From<&ChangeIndicators> for PartitionRecord {
    fn from(c: &ChangeIndicators) -> Self {
        Self {
            n: c.n(),
            c: c.as_slice().to_vec(),
            tau: c.to_blocks().endpoints().to_vec(),
        }
    }
}

impl TryFrom<&PartitionRecord> for ChangeIndicators {
    type Error = CcpError;

    fn try_from(rec: &PartitionRecord) -> Result<Self> {
        let c = ChangeIndicators::new(rec.c.clone(), rec.n)?;
        if c.to_blocks().endpoints() != rec.tau.as_slice() {
            return Err(CcpError::InvalidInput(
                "partition record: tau inconsistent with c".into(),
            ));
        }
        Ok(c)
    }
}
