//! Incremental FP-tree over the double-item request history, frequent-pair
//! queries at minimum support gamma, and a naive counting oracle.
//!
//! Transactions always have exactly two items, inserted in a fixed global
//! order (ascending item id), so insertion never restructures the tree and
//! runs in time proportional to the root's child count at worst.

use crate::model::ItemId;
use std::collections::HashMap;

const ROOT: usize = 0;

#[derive(Debug, Clone)]
struct Node {
    item: ItemId,
    count: u64,
    parent: usize,
    children: Vec<usize>,
    /// Next node carrying the same item (the header-table node-link chain).
    sibling: Option<usize>,
}

#[derive(Debug, Clone, Default)]
struct HeaderEntry {
    first_node: Option<usize>,
    total_count: u64,
}

/// Prefix tree over pair transactions with per-item node links.
#[derive(Debug, Clone)]
pub struct FpTree {
    nodes: Vec<Node>,
    header: HashMap<ItemId, HeaderEntry>,
    txn_count: u64,
    /// Bumped on every insert; lets callers cache mining results.
    generation: u64,
}

impl Default for FpTree {
    fn default() -> Self {
        Self::new()
    }
}

impl FpTree {
    pub fn new() -> Self {
        Self {
            nodes: vec![Node {
                item: usize::MAX,
                count: 0,
                parent: ROOT,
                children: Vec::new(),
                sibling: None,
            }],
            header: HashMap::new(),
            txn_count: 0,
            generation: 0,
        }
    }

    pub fn txn_count(&self) -> u64 {
        self.txn_count
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Node count including the root.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Inserts one pair transaction; items are pathed in ascending order.
    pub fn insert_transaction(&mut self, a: ItemId, b: ItemId) {
        assert_ne!(a, b, "transaction items must be distinct");
        let (first, second) = if a < b { (a, b) } else { (b, a) };
        let n1 = self.child_or_insert(ROOT, first);
        let _n2 = self.child_or_insert(n1, second);
        self.txn_count += 1;
        self.generation += 1;
    }

    fn child_or_insert(&mut self, parent: usize, item: ItemId) -> usize {
        if let Some(&c) = self.nodes[parent]
            .children
            .iter()
            .find(|&&c| self.nodes[c].item == item)
        {
            self.nodes[c].count += 1;
            self.header.get_mut(&item).expect("linked").total_count += 1;
            return c;
        }
        let id = self.nodes.len();
        let entry = self.header.entry(item).or_default();
        self.nodes.push(Node {
            item,
            count: 1,
            parent,
            children: Vec::new(),
            sibling: entry.first_node,
        });
        entry.first_node = Some(id);
        entry.total_count += 1;
        self.nodes[parent].children.push(id);
        id
    }

    /// Occurrence count of the unordered pair `{a, b}`.
    pub fn pair_count(&self, a: ItemId, b: ItemId) -> u64 {
        let (first, second) = if a < b { (a, b) } else { (b, a) };
        // Every transaction path is first->second, so the pair count is the
        // total count of `second` nodes whose parent carries `first`.
        let mut total = 0;
        let mut cursor = self.header.get(&second).and_then(|e| e.first_node);
        while let Some(id) = cursor {
            let node = &self.nodes[id];
            if self.nodes[node.parent].item == first {
                total += node.count;
            }
            cursor = node.sibling;
        }
        total
    }

    /// All pairs with support `pair_count / txn_count >= gamma`.
    pub fn mine_frequent_pairs(&self, gamma: f64) -> FrequentSet {
        let mut pairs = Vec::new();
        if self.txn_count > 0 {
            let threshold = gamma * self.txn_count as f64;
            for &first_child in &self.nodes[ROOT].children {
                let first = self.nodes[first_child].item;
                for &second_child in &self.nodes[first_child].children {
                    let second = self.nodes[second_child].item;
                    if self.pair_count(first, second) as f64 >= threshold {
                        pairs.push((first, second));
                    }
                }
            }
        }
        FrequentSet::from_pairs(pairs, self.txn_count)
    }

    #[cfg(test)]
    fn check_consistency(&self) {
        // per-item node-link chain sums to the header total
        for (&item, entry) in &self.header {
            let mut sum = 0;
            let mut cursor = entry.first_node;
            while let Some(id) = cursor {
                assert_eq!(self.nodes[id].item, item);
                sum += self.nodes[id].count;
                cursor = self.nodes[id].sibling;
            }
            assert_eq!(sum, entry.total_count);
        }
        // txn_count equals the sum over depth-1 children
        let depth1: u64 = self.nodes[ROOT]
            .children
            .iter()
            .map(|&c| self.nodes[c].count)
            .sum();
        assert_eq!(depth1, self.txn_count);
        // paths follow the global ascending order
        for &c in &self.nodes[ROOT].children {
            for &g in &self.nodes[c].children {
                assert!(self.nodes[c].item < self.nodes[g].item);
            }
        }
    }
}

/// The mined frequent pairs plus the history size they were mined from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequentSet {
    pairs: Vec<(ItemId, ItemId)>,
    basis_txn_count: u64,
}

impl FrequentSet {
    pub fn empty() -> Self {
        Self {
            pairs: Vec::new(),
            basis_txn_count: 0,
        }
    }

    fn from_pairs(mut pairs: Vec<(ItemId, ItemId)>, basis_txn_count: u64) -> Self {
        pairs.sort_unstable();
        pairs.dedup();
        Self {
            pairs,
            basis_txn_count,
        }
    }

    pub fn is_frequent(&self, a: ItemId, b: ItemId) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.pairs.binary_search(&key).is_ok()
    }

    pub fn pairs(&self) -> &[(ItemId, ItemId)] {
        &self.pairs
    }

    pub fn basis_txn_count(&self) -> u64 {
        self.basis_txn_count
    }
}

/// Brute-force counting oracle; must agree with `FpTree::mine_frequent_pairs`
/// on every history.
pub fn naive_frequent_pairs(history: &[(ItemId, ItemId)], gamma: f64) -> FrequentSet {
    if history.is_empty() {
        return FrequentSet::empty();
    }
    let mut counts: HashMap<(ItemId, ItemId), u64> = HashMap::new();
    for &(a, b) in history {
        let key = if a < b { (a, b) } else { (b, a) };
        *counts.entry(key).or_insert(0) += 1;
    }
    let n = history.len() as u64;
    let threshold = gamma * n as f64;
    let pairs = counts
        .into_iter()
        .filter(|&(_, c)| c as f64 >= threshold)
        .map(|(p, _)| p)
        .collect();
    FrequentSet::from_pairs(pairs, n)
}
