//! The ImageNet-1K class hierarchy shipped with the crate.
//!
//! Edges are WordNet 3.0 noun hypernym links (one parent per synset)
//! restricted to the ancestors of the 1000 classes; the class map lists the
//! synsets in the standard class-index order. Regenerate with
//! `scripts/build_imagenet_hierarchy.py`.

use causex_core::taxonomy::TaxonomyTree;

pub const EDGES: &str = include_str!("../data/imagenet/imagenet1k_is_a.txt");
pub const CLASS_MAP: &str = include_str!("../data/imagenet/imagenet1k_class_map.txt");

pub fn taxonomy() -> causex_core::Result<TaxonomyTree> {
    TaxonomyTree::parse(EDGES, CLASS_MAP)
}
