#![allow(dead_code)]

use std::sync::Arc;

use cocite_core::corpus::{CatalogBuilder, RawReference};
use cocite_core::{Background, Corpus, Publication};

/// Reference `r{i}` has year `1990 + years[i]` and journal `journals[i]`.
#[derive(Debug, Clone)]
pub struct Layout {
    pub years: Vec<u8>,
    pub journals: Vec<u8>,
    /// Publications as lists of reference indices.
    pub pubs: Vec<Vec<usize>>,
}

pub fn journal_name(j: u8) -> String {
    format!("J{j:02}")
}

pub fn build(layout: &Layout, rename: impl Fn(&str) -> String) -> Corpus {
    let mut b = CatalogBuilder::new();
    for (i, (&y, &j)) in layout.years.iter().zip(&layout.journals).enumerate() {
        let journal = rename(&journal_name(j));
        b.add_reference(RawReference {
            ref_id: format!("r{i}"),
            year: 1990 + y as i32,
            journal_id: journal.clone(),
            subject: journal,
        });
    }
    let cat = Arc::new(b.build().unwrap());
    let publications = layout
        .pubs
        .iter()
        .enumerate()
        .map(|(i, refs)| Publication {
            pub_id: format!("p{i:03}"),
            year: 2000,
            journal_id: "X".into(),
            refs: refs.iter().map(|r| cat.ref_index(&format!("r{r}")).unwrap()).collect(),
            citations_8yr: (i * 7 % 13) as u64,
        })
        .collect();
    Corpus::new(2000, Background::Local, cat, publications).unwrap()
}

pub fn corpus(layout: &Layout) -> Corpus {
    build(layout, str::to_owned)
}

pub mod strategy {
    use super::Layout;
    use proptest::prelude::*;
    use proptest::sample::subsequence;

    /// Small corpora: up to `max_refs` references over a few years and
    /// journals, publications citing 2..=8 distinct references.
    pub fn layout(max_refs: usize, max_pubs: usize) -> impl Strategy<Value = Layout> {
        (4..=max_refs)
            .prop_flat_map(move |n| {
                (
                    proptest::collection::vec(0u8..4, n),
                    proptest::collection::vec(0u8..5, n),
                    proptest::collection::vec(
                        subsequence((0..n).collect::<Vec<_>>(), 2..=n.min(8)).prop_shuffle(),
                        1..=max_pubs,
                    ),
                )
            })
            .prop_map(|(years, journals, pubs)| Layout { years, journals, pubs })
    }
}
