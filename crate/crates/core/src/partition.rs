use std::fmt;

use crate::error::{Error, Result};
use crate::state::{format_state, parse_state, State, MAX_WIDTH};

/// A set partition of the hypercube `H_n`.
///
/// Block order and member order are whatever the constructor was given;
/// [`Partition::canonical`] sorts members ascending and blocks by their
/// smallest member. Equality compares the underlying set partitions.
#[derive(Debug, Clone)]
pub struct Partition {
    width: usize,
    blocks: Vec<Vec<State>>,
    block_of: Vec<u32>,
}

impl Partition {
    /// Validates disjointness and coverage.
    pub fn from_blocks(width: usize, blocks: Vec<Vec<State>>) -> Result<Self> {
        check_width(width)?;
        let size = 1usize << width;
        let mut block_of = vec![u32::MAX; size];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition(format!("block {b} is empty")));
            }
            for &x in block {
                let slot = block_of.get_mut(x as usize).ok_or_else(|| {
                    Error::InvalidPartition(format!("state {x} outside H_{width}"))
                })?;
                if *slot != u32::MAX {
                    return Err(Error::InvalidPartition(format!(
                        "state {} appears in two blocks",
                        format_state(x, width)
                    )));
                }
                *slot = b as u32;
            }
        }
        if let Some(x) = block_of.iter().position(|&b| b == u32::MAX) {
            return Err(Error::InvalidPartition(format!(
                "state {} is not covered",
                format_state(x as State, width)
            )));
        }
        Ok(Partition {
            width,
            blocks,
            block_of,
        })
    }

    /// Groups states by label. Blocks come out in order of first appearance,
    /// which for state-ordered input is the canonical order.
    pub fn from_labels<L: Eq + std::hash::Hash + Clone>(width: usize, labels: &[L]) -> Result<Self> {
        check_width(width)?;
        if labels.len() != 1usize << width {
            return Err(Error::InvalidPartition(format!(
                "{} labels for {} states",
                labels.len(),
                1usize << width
            )));
        }
        let mut ids = std::collections::HashMap::new();
        let mut blocks: Vec<Vec<State>> = Vec::new();
        let mut block_of = Vec::with_capacity(labels.len());
        for (x, label) in labels.iter().enumerate() {
            let next = blocks.len() as u32;
            let b = *ids.entry(label.clone()).or_insert(next);
            if b == next {
                blocks.push(Vec::new());
            }
            blocks[b as usize].push(x as State);
            block_of.push(b);
        }
        Ok(Partition {
            width,
            blocks,
            block_of,
        })
    }

    pub fn singletons(width: usize) -> Result<Self> {
        let labels: Vec<State> = (0..(1u32 << width)).collect();
        Partition::from_labels(width, &labels)
    }

    pub fn whole(width: usize) -> Result<Self> {
        Partition::from_labels(width, &vec![0u8; 1usize << width])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of states, `2^width`.
    pub fn num_states(&self) -> usize {
        self.block_of.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<State>] {
        &self.blocks
    }

    pub fn block(&self, b: usize) -> &[State] {
        &self.blocks[b]
    }

    pub fn block_of(&self, x: State) -> usize {
        self.block_of[x as usize] as usize
    }

    pub(crate) fn block_index(&self) -> &[u32] {
        &self.block_of
    }

    pub fn canonical(&self) -> Partition {
        let mut blocks = self.blocks.clone();
        for b in blocks.iter_mut() {
            b.sort_unstable();
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        let mut block_of = vec![0u32; self.block_of.len()];
        for (i, b) in blocks.iter().enumerate() {
            for &x in b {
                block_of[x as usize] = i as u32;
            }
        }
        Partition {
            width: self.width,
            blocks,
            block_of,
        }
    }

    /// Block labels renumbered by first appearance in state order; two
    /// partitions are equal iff these agree.
    pub fn normalized_labels(&self) -> Vec<u32> {
        let mut remap = vec![u32::MAX; self.blocks.len()];
        let mut next = 0;
        self.block_of
            .iter()
            .map(|&b| {
                let slot = &mut remap[b as usize];
                if *slot == u32::MAX {
                    *slot = next;
                    next += 1;
                }
                *slot
            })
            .collect()
    }

    /// True iff every block of `self` lies inside a block of `other`.
    pub fn refines(&self, other: &Partition) -> Result<bool> {
        if self.width != other.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                got: other.width,
            });
        }
        Ok(self.blocks.iter().all(|block| {
            let target = other.block_of(block[0]);
            block.iter().all(|&x| other.block_of(x) == target)
        }))
    }

    /// Canonical text: one block per line, states as zero-padded binary.
    pub fn to_text(&self) -> String {
        let canon = self.canonical();
        let mut out = String::new();
        for block in &canon.blocks {
            let line: Vec<String> = block.iter().map(|&x| format_state(x, self.width)).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut width = None;
        let mut blocks = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut block = Vec::new();
            for token in line.split_whitespace() {
                let (x, w) = parse_state(token).map_err(|e| Error::Parse {
                    line: lineno + 1,
                    msg: e.to_string(),
                })?;
                match width {
                    None => width = Some(w),
                    Some(prev) if prev != w => {
                        return Err(Error::Parse {
                            line: lineno + 1,
                            msg: format!("state `{token}` has width {w}, expected {prev}"),
                        })
                    }
                    _ => {}
                }
                block.push(x);
            }
            blocks.push(block);
        }
        let width = width.ok_or_else(|| Error::InvalidPartition("no blocks".into()))?;
        Partition::from_blocks(width, blocks)
    }
}

fn check_width(width: usize) -> Result<()> {
    if width > MAX_WIDTH {
        return Err(Error::InvalidPartition(format!(
            "width {width} exceeds the supported maximum {MAX_WIDTH}"
        )));
    }
    Ok(())
}

impl PartialEq for Partition {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.blocks.len() == other.blocks.len()
            && self.normalized_labels() == other.normalized_labels()
    }
}

impl Eq for Partition {}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
