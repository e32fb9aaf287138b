//! Block tree with longest-public-chain fork choice.
//!
//! The tree is append-only. Blocks are created either withheld or published;
//! a withheld block may later be published exactly once. The canonical head is
//! the highest published block, with the first-seen tip kept on equal height.
//! At most one tie (two competing published tips at equal height) is tracked
//! at a time; any further equal-height tip is ignored by fork choice.

use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

/// Identifier of a block inside a [`BlockTree`]. Ids are dense and assigned in
/// creation order; [`GENESIS`] is always id 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockId(u32);

impl BlockId {
    pub const fn index(self) -> usize {
        self.0 as usize
    }

    pub const fn from_index(index: u32) -> Self {
        Self(index)
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// The synthetic genesis block. Published, height 0, mined by no pool.
pub const GENESIS: BlockId = BlockId(0);

/// Index of a pool within a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PoolId(pub u16);

impl PoolId {
    pub const fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PoolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pool {}", self.0)
    }
}

const NO_MINER: u16 = u16::MAX;
const NOT_PUBLISHED: u32 = u32::MAX;

/// A single block. Kept small: runs routinely hold a million of these.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    parent: BlockId,
    height: u32,
    miner: u16,
    publish_time: u32,
}

impl Block {
    pub fn parent(&self) -> Option<BlockId> {
        // genesis is its own parent internally
        if self.height == 0 {
            None
        } else {
            Some(self.parent)
        }
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn miner(&self) -> Option<PoolId> {
        (self.miner != NO_MINER).then_some(PoolId(self.miner))
    }

    pub fn is_published(&self) -> bool {
        self.publish_time != NOT_PUBLISHED
    }

    /// Event index at which the block was published, if it was.
    pub fn publish_time(&self) -> Option<u32> {
        self.is_published().then_some(self.publish_time)
    }
}

/// Two published tips at equal height competing for the canonical position.
/// The incumbent was seen first and is the current public head.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tie {
    pub incumbent: BlockId,
    pub challenger: BlockId,
}

impl Tie {
    pub fn contains(&self, id: BlockId) -> bool {
        self.incumbent == id || self.challenger == id
    }
}

/// Fraction of honest power that mines on the challenger tip during a tie.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiePolicy {
    gamma: f64,
}

impl TiePolicy {
    pub fn new(gamma: f64) -> Result<Self, ChainError> {
        if (0.0..=1.0).contains(&gamma) {
            Ok(Self { gamma })
        } else {
            Err(ChainError::InvalidGamma(gamma))
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    #[error("unknown block {0}")]
    UnknownBlock(BlockId),
    #[error("block {0} is already published")]
    AlreadyPublished(BlockId),
    #[error("cannot publish {block}: parent {parent} is not published")]
    UnpublishedParent { block: BlockId, parent: BlockId },
    #[error("no tie is active")]
    NoActiveTie,
    #[error("block {0} is not on either side of the active tie")]
    NotInTie(BlockId),
    #[error("gamma must lie in [0, 1], got {0}")]
    InvalidGamma(f64),
}

/// Summary of the canonical chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainStats {
    /// Published blocks on the canonical chain, genesis excluded.
    pub main_length: u64,
    /// Every block ever created, published or not, genesis excluded.
    pub total_mined: u64,
    /// Canonical-chain block count per pool, indexed by pool id.
    pub per_pool_main: Vec<u64>,
    /// Published blocks that are not on the canonical chain.
    pub orphans: u64,
    pub unpublished: u64,
}

impl ChainStats {
    pub fn progress_rate(&self) -> f64 {
        if self.total_mined == 0 {
            1.0
        } else {
            self.main_length as f64 / self.total_mined as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct BlockTree {
    blocks: Vec<Block>,
    children: Vec<u32>,
    public_head: BlockId,
    tie: Option<Tie>,
    published: u64,
    /// Published blocks on the challenger side of the active tie, above the
    /// fork point. They are not settled as orphans until the tie resolves.
    contested: u64,
    clock: u32,
}

impl Default for BlockTree {
    fn default() -> Self {
        Self::new()
    }
}

impl BlockTree {
    pub fn new() -> Self {
        Self::with_capacity(0)
    }

    pub fn with_capacity(capacity: usize) -> Self {
        let mut blocks = Vec::with_capacity(capacity + 1);
        blocks.push(Block {
            parent: GENESIS,
            height: 0,
            miner: NO_MINER,
            publish_time: 0,
        });
        let mut children = Vec::with_capacity(capacity + 1);
        children.push(0);
        Self {
            blocks,
            children,
            public_head: GENESIS,
            tie: None,
            published: 0,
            contested: 0,
            clock: 0,
        }
    }

    /// Sets the event index stamped on blocks published from now on.
    pub fn set_clock(&mut self, event: u32) {
        self.clock = event;
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.len() == 1
    }

    pub fn block(&self, id: BlockId) -> Result<&Block, ChainError> {
        self.blocks.get(id.index()).ok_or(ChainError::UnknownBlock(id))
    }

    /// Height of a block known to exist. Panics on foreign ids.
    #[inline]
    pub fn height(&self, id: BlockId) -> u32 {
        self.blocks[id.index()].height
    }

    #[inline]
    pub fn parent(&self, id: BlockId) -> Option<BlockId> {
        self.blocks[id.index()].parent()
    }

    #[inline]
    pub fn is_published(&self, id: BlockId) -> bool {
        self.blocks[id.index()].is_published()
    }

    #[inline]
    pub fn miner(&self, id: BlockId) -> Option<PoolId> {
        self.blocks[id.index()].miner()
    }

    pub fn public_head(&self) -> BlockId {
        self.public_head
    }

    pub fn public_height(&self) -> u32 {
        self.height(self.public_head)
    }

    pub fn tie(&self) -> Option<Tie> {
        self.tie
    }

    /// Leaf blocks, i.e. blocks without children, in id order.
    pub fn heads(&self) -> impl Iterator<Item = BlockId> + '_ {
        self.children
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 0)
            .map(|(i, _)| BlockId(i as u32))
    }

    /// Published blocks that are settled off the canonical chain. Blocks of a
    /// still-contested tie are not counted until the tie resolves.
    pub fn settled_orphans(&self) -> u64 {
        self.published - u64::from(self.public_height()) - self.contested
    }

    /// Appends a block on `parent`. A published block goes through fork
    /// choice immediately.
    pub fn extend(
        &mut self,
        parent: BlockId,
        miner: PoolId,
        published: bool,
    ) -> Result<BlockId, ChainError> {
        let parent_block = *self.block(parent)?;
        if published && !parent_block.is_published() {
            return Err(ChainError::UnpublishedParent {
                block: BlockId(self.blocks.len() as u32),
                parent,
            });
        }
        let id = BlockId(self.blocks.len() as u32);
        self.blocks.push(Block {
            parent,
            height: parent_block.height + 1,
            miner: miner.0,
            publish_time: NOT_PUBLISHED,
        });
        self.children.push(0);
        self.children[parent.index()] += 1;
        if published {
            self.publish(id)?;
        }
        Ok(id)
    }

    /// Publishes a withheld block and recomputes the canonical head.
    pub fn publish(&mut self, id: BlockId) -> Result<(), ChainError> {
        let block = *self.block(id)?;
        if block.is_published() {
            return Err(ChainError::AlreadyPublished(id));
        }
        if !self.is_published(block.parent) {
            return Err(ChainError::UnpublishedParent {
                block: id,
                parent: block.parent,
            });
        }
        self.blocks[id.index()].publish_time = self.clock;
        self.published += 1;

        let head_height = self.public_height();
        if block.height > head_height {
            match self.tie {
                Some(tie) if tie.contains(block.parent) => self.resolve_tie(id)?,
                _ => {
                    self.tie = None;
                    self.contested = 0;
                    self.public_head = id;
                }
            }
        } else if block.height == head_height && self.tie.is_none() {
            self.contested = u64::from(block.height - self.height(self.common_ancestor(id, self.public_head)));
            self.tie = Some(Tie {
                incumbent: self.public_head,
                challenger: id,
            });
        }
        Ok(())
    }

    /// Settles the active tie in favour of `winner`, which is one of the tied
    /// tips or a child of one. The losing tip's branch becomes orphaned.
    pub fn resolve_tie(&mut self, winner: BlockId) -> Result<(), ChainError> {
        let tie = self.tie.ok_or(ChainError::NoActiveTie)?;
        let block = *self.block(winner)?;
        let side = if tie.contains(winner) {
            winner
        } else if block.height() > 0 && tie.contains(block.parent) {
            block.parent
        } else {
            return Err(ChainError::NotInTie(winner));
        };
        self.public_head = if side != winner && block.is_published() {
            winner
        } else {
            side
        };
        self.tie = None;
        self.contested = 0;
        Ok(())
    }

    /// Deepest block that is an ancestor of (or equal to) both `a` and `b`.
    pub fn common_ancestor(&self, mut a: BlockId, mut b: BlockId) -> BlockId {
        while self.height(a) > self.height(b) {
            a = self.blocks[a.index()].parent;
        }
        while self.height(b) > self.height(a) {
            b = self.blocks[b.index()].parent;
        }
        while a != b {
            a = self.blocks[a.index()].parent;
            b = self.blocks[b.index()].parent;
        }
        a
    }

    /// True if `ancestor` lies on the path from `id` back to genesis.
    pub fn is_ancestor(&self, ancestor: BlockId, mut id: BlockId) -> bool {
        let target = self.height(ancestor);
        while self.height(id) > target {
            id = self.blocks[id.index()].parent;
        }
        id == ancestor
    }

    /// Walks the canonical chain from the public head back to genesis,
    /// excluding genesis.
    pub fn canonical_chain(&self) -> impl Iterator<Item = BlockId> + '_ {
        let mut cursor = Some(self.public_head);
        core::iter::from_fn(move || {
            let id = cursor?;
            if id == GENESIS {
                cursor = None;
                return None;
            }
            cursor = self.parent(id);
            Some(id)
        })
    }

    pub fn chain_stats(&self, pools: usize) -> ChainStats {
        let mut per_pool_main = alloc::vec![0u64; pools];
        let mut main_length = 0u64;
        for id in self.canonical_chain() {
            main_length += 1;
            if let Some(miner) = self.miner(id) {
                if let Some(slot) = per_pool_main.get_mut(miner.index()) {
                    *slot += 1;
                }
            }
        }
        let total_mined = (self.blocks.len() - 1) as u64;
        ChainStats {
            main_length,
            total_mined,
            per_pool_main,
            orphans: self.published - main_length,
            unpublished: total_mined - self.published,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HONEST: PoolId = PoolId(0);
    const DEVIANT: PoolId = PoolId(1);

    #[test]
    fn single_block_becomes_head() {
        let mut tree = BlockTree::new();
        let b = tree.extend(GENESIS, HONEST, true).unwrap();
        assert_eq!(tree.height(b), 1);
        assert_eq!(tree.public_head(), b);
        assert_eq!(tree.heads().collect::<Vec<_>>(), [b]);
    }

    #[test]
    fn symmetric_fork_records_tie() {
        let mut tree = BlockTree::new();
        let a = tree.extend(GENESIS, HONEST, true).unwrap();
        let b = tree.extend(GENESIS, DEVIANT, true).unwrap();
        assert_eq!(
            tree.tie(),
            Some(Tie {
                incumbent: a,
                challenger: b
            })
        );
        assert_eq!(tree.public_head(), a);
        assert_eq!(tree.settled_orphans(), 0);
    }

    #[test]
    fn unknown_parent_is_structural_error() {
        let mut tree = BlockTree::new();
        assert_eq!(
            tree.extend(BlockId(999), HONEST, true),
            Err(ChainError::UnknownBlock(BlockId(999)))
        );
    }

    #[test]
    fn tie_resolves_towards_extended_side() {
        for winner_side in 0..2 {
            let mut tree = BlockTree::new();
            let a = tree.extend(GENESIS, HONEST, true).unwrap();
            let b = tree.extend(GENESIS, DEVIANT, true).unwrap();
            let side = [a, b][winner_side];
            let c = tree.extend(side, HONEST, true).unwrap();
            assert_eq!(tree.tie(), None);
            assert_eq!(tree.public_head(), c);
            assert!(tree.is_ancestor(side, tree.public_head()));
            let stats = tree.chain_stats(2);
            assert_eq!(stats.orphans, 1);
            assert_eq!(stats.main_length, 2);
            assert_eq!(tree.settled_orphans(), 1);
        }
    }

    #[test]
    fn explicit_resolution() {
        let mut tree = BlockTree::new();
        let a = tree.extend(GENESIS, HONEST, true).unwrap();
        let b = tree.extend(GENESIS, DEVIANT, true).unwrap();
        tree.resolve_tie(b).unwrap();
        assert_eq!(tree.public_head(), b);
        assert_eq!(tree.tie(), None);
        assert!(!tree.canonical_chain().any(|id| id == a));
        assert_eq!(tree.resolve_tie(a), Err(ChainError::NoActiveTie));
    }

    #[test]
    fn resolve_rejects_unrelated_block() {
        let mut tree = BlockTree::new();
        let a = tree.extend(GENESIS, HONEST, true).unwrap();
        let _b = tree.extend(GENESIS, DEVIANT, true).unwrap();
        let a2 = tree.extend(a, HONEST, false).unwrap();
        let a3 = tree.extend(a2, HONEST, false).unwrap();
        assert_eq!(tree.resolve_tie(a3), Err(ChainError::NotInTie(a3)));
        // an unpublished child picks its side without becoming head
        tree.resolve_tie(a2).unwrap();
        assert_eq!(tree.public_head(), a);
    }

    #[test]
    fn linear_honest_chain_stats() {
        let mut tree = BlockTree::new();
        let mut tip = GENESIS;
        for _ in 0..10 {
            tip = tree.extend(tip, HONEST, true).unwrap();
        }
        let stats = tree.chain_stats(1);
        assert_eq!(stats.main_length, 10);
        assert_eq!(stats.orphans, 0);
        assert_eq!(stats.total_mined, 10);
        assert_eq!(stats.progress_rate(), 1.0);
    }

    #[test]
    fn one_block_fork_in_ten_events() {
        let mut tree = BlockTree::new();
        let mut tip = GENESIS;
        for _ in 0..4 {
            tip = tree.extend(tip, HONEST, true).unwrap();
        }
        let _rival = tree.extend(tree.parent(tip).unwrap(), DEVIANT, true).unwrap();
        for _ in 0..5 {
            tip = tree.extend(tip, HONEST, true).unwrap();
        }
        let stats = tree.chain_stats(2);
        assert_eq!(stats.total_mined, 10);
        assert_eq!(stats.main_length, 9);
        assert_eq!(stats.orphans, 1);
        assert_eq!(stats.per_pool_main, [9, 0]);
    }

    #[test]
    fn withheld_blocks_publish_once_in_order() {
        let mut tree = BlockTree::new();
        let w1 = tree.extend(GENESIS, DEVIANT, false).unwrap();
        let w2 = tree.extend(w1, DEVIANT, false).unwrap();
        assert_eq!(
            tree.publish(w2),
            Err(ChainError::UnpublishedParent {
                block: w2,
                parent: w1
            })
        );
        assert_eq!(
            tree.extend(w1, HONEST, true),
            Err(ChainError::UnpublishedParent {
                block: BlockId(3),
                parent: w1
            })
        );
        tree.set_clock(7);
        tree.publish(w1).unwrap();
        tree.publish(w2).unwrap();
        assert_eq!(tree.publish(w1), Err(ChainError::AlreadyPublished(w1)));
        assert_eq!(tree.public_head(), w2);
        assert_eq!(tree.block(w2).unwrap().publish_time(), Some(7));
    }

    #[test]
    fn longer_reveal_reorgs_and_orphans() {
        let mut tree = BlockTree::new();
        let h1 = tree.extend(GENESIS, HONEST, true).unwrap();
        let _h2 = tree.extend(h1, HONEST, true).unwrap();
        let mut private = GENESIS;
        let mut withheld = Vec::new();
        for _ in 0..3 {
            private = tree.extend(private, DEVIANT, false).unwrap();
            withheld.push(private);
        }
        for id in withheld {
            tree.publish(id).unwrap();
        }
        let stats = tree.chain_stats(2);
        assert_eq!(tree.public_head(), private);
        assert_eq!(stats.main_length, 3);
        assert_eq!(stats.orphans, 2);
        assert_eq!(stats.per_pool_main, [0, 3]);
    }

    #[test]
    fn third_equal_tip_is_ignored() {
        let mut tree = BlockTree::new();
        let a = tree.extend(GENESIS, HONEST, true).unwrap();
        let b = tree.extend(GENESIS, DEVIANT, true).unwrap();
        let _c = tree.extend(GENESIS, PoolId(2), true).unwrap();
        assert_eq!(
            tree.tie(),
            Some(Tie {
                incumbent: a,
                challenger: b
            })
        );
        assert_eq!(tree.chain_stats(3).orphans, 2);
    }

    #[test]
    fn gamma_bounds() {
        assert!(TiePolicy::new(0.0).is_ok());
        assert!(TiePolicy::new(1.0).is_ok());
        assert!(TiePolicy::new(1.5).is_err());
        assert!(TiePolicy::new(-0.1).is_err());
    }
}
