//! Index map of the DFN state vector.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node counts of the through-cell and radial discretizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeCounts {
    pub nx_neg: usize,
    pub nx_sep: usize,
    pub nx_pos: usize,
    pub nr_neg: usize,
    pub nr_pos: usize,
}

impl NodeCounts {
    pub const fn uniform(nx: usize, nr: usize) -> Self {
        NodeCounts {
            nx_neg: nx,
            nx_sep: nx,
            nx_pos: nx,
            nr_neg: nr,
            nr_pos: nr,
        }
    }

    pub fn nx_total(&self) -> usize {
        self.nx_neg + self.nx_sep + self.nx_pos
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("nx_neg", self.nx_neg),
            ("nx_sep", self.nx_sep),
            ("nx_pos", self.nx_pos),
            ("nr_neg", self.nr_neg),
            ("nr_pos", self.nr_pos),
        ];
        for (name, n) in counts {
            if n < 2 {
                return Err(Error::Config(format!("{name} must be at least 2, got {n}")));
            }
        }
        Ok(())
    }
}

impl Default for NodeCounts {
    fn default() -> Self {
        NodeCounts::uniform(10, 10)
    }
}

/// Field blocks of the state vector, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    SolidConcNeg,
    SolidConcPos,
    ElectrolyteConc,
    SolidPotNeg,
    SolidPotPos,
    ElectrolytePot,
}

impl Block {
    pub const ALL: [Block; 6] = [
        Block::SolidConcNeg,
        Block::SolidConcPos,
        Block::ElectrolyteConc,
        Block::SolidPotNeg,
        Block::SolidPotPos,
        Block::ElectrolytePot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Block::SolidConcNeg => "c_s_neg",
            Block::SolidConcPos => "c_s_pos",
            Block::ElectrolyteConc => "c_e",
            Block::SolidPotNeg => "phi_s_neg",
            Block::SolidPotPos => "phi_s_pos",
            Block::ElectrolytePot => "phi_e",
        }
    }

    pub fn is_differential(self) -> bool {
        matches!(
            self,
            Block::SolidConcNeg | Block::SolidConcPos | Block::ElectrolyteConc
        )
    }
}

/// Contiguous ranges of each field block. Solid concentrations are stored
/// node-major: shell `k` of the particle at electrode node `i` sits at
/// `start + i * nr + k`, shell 0 at the particle center.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateLayout {
    pub counts: NodeCounts,
    ranges: [Range<usize>; 6],
    mask: Vec<bool>,
}

impl StateLayout {
    pub fn new(counts: NodeCounts) -> Result<Self> {
        counts.validate()?;
        let sizes = [
            counts.nx_neg * counts.nr_neg,
            counts.nx_pos * counts.nr_pos,
            counts.nx_total(),
            counts.nx_neg,
            counts.nx_pos,
            counts.nx_total(),
        ];
        let mut start = 0;
        let ranges = sizes.map(|n| {
            let r = start..start + n;
            start += n;
            r
        });
        let mut mask = vec![false; start];
        for (block, range) in Block::ALL.iter().zip(&ranges) {
            if block.is_differential() {
                mask[range.clone()].fill(true);
            }
        }
        Ok(StateLayout {
            counts,
            ranges,
            mask,
        })
    }

    pub fn dim(&self) -> usize {
        self.mask.len()
    }

    pub fn range(&self, block: Block) -> Range<usize> {
        self.ranges[block as usize].clone()
    }

    /// True on differential unknowns (concentrations), false on potentials.
    pub fn differential_mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn block_of(&self, index: usize) -> Option<Block> {
        Block::ALL
            .into_iter()
            .find(|&b| self.ranges[b as usize].contains(&index))
    }

    pub fn solid_conc(&self, negative: bool, node: usize, shell: usize) -> usize {
        if negative {
            self.ranges[0].start + node * self.counts.nr_neg + shell
        } else {
            self.ranges[1].start + node * self.counts.nr_pos + shell
        }
    }

    pub fn electrolyte_conc(&self, node: usize) -> usize {
        self.ranges[2].start + node
    }

    pub fn solid_pot(&self, negative: bool, node: usize) -> usize {
        if negative {
            self.ranges[3].start + node
        } else {
            self.ranges[4].start + node
        }
    }

    pub fn electrolyte_pot(&self, node: usize) -> usize {
        self.ranges[5].start + node
    }

    pub fn check_len(&self, what: &str, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::Contract(format!(
                "{what} has length {len}, layout expects {}",
                self.dim()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ten_per_domain_is_280() {
        let l = StateLayout::new(NodeCounts::uniform(10, 10)).unwrap();
        assert_eq!(l.dim(), 2 * (10 * 10) + 30 + 20 + 30);
    }

    #[test]
    fn rejects_small_counts() {
        let mut c = NodeCounts::uniform(10, 10);
        c.nr_pos = 1;
        assert!(StateLayout::new(c).is_err());
    }

    proptest! {
        #[test]
        fn blocks_tile_the_state(nxn in 2usize..8, nxs in 2usize..8, nxp in 2usize..8,
                                 nrn in 2usize..8, nrp in 2usize..8) {
            let l = StateLayout::new(NodeCounts { nx_neg: nxn, nx_sep: nxs, nx_pos: nxp,
                                                  nr_neg: nrn, nr_pos: nrp }).unwrap();
            let mut next = 0;
            for b in Block::ALL {
                let r = l.range(b);
                prop_assert_eq!(r.start, next);
                next = r.end;
                for i in r {
                    prop_assert_eq!(l.differential_mask()[i], b.is_differential());
                    prop_assert_eq!(l.block_of(i), Some(b));
                }
            }
            prop_assert_eq!(next, l.dim());
            prop_assert_eq!(l.solid_conc(false, nxp - 1, nrp - 1) + 1, l.range(Block::SolidConcPos).end);
        }
    }
}
