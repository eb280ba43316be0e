use std::collections::HashMap;

use thiserror::Error;

use crate::model::{DocId, PinEntry};

pub const BOD: &str = "[BOD]";
pub const EOD: &str = "[EOD]";
pub const BOP: &str = "[BOP]";
pub const EOP: &str = "[EOP]";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AssembleError {
    #[error("no pages to assemble")]
    Empty,
    #[error("entries belong to different documents ({0} and {1})")]
    MixedDocId(DocId, DocId),
    #[error("doc {doc_id} has page_id {page_id} more than once")]
    DuplicatePage { doc_id: DocId, page_id: i64 },
    #[error("doc {0} has several entries but one has a null page_id")]
    NullPageInMultipage(DocId),
}

/// Wrap the pages of one document in document and page boundary tokens,
/// ordered by `page_id`.
pub fn assemble_document_sequence(entries: &[PinEntry]) -> Result<String, AssembleError> {
    let first = entries.first().ok_or(AssembleError::Empty)?;
    let doc = &first.meta.doc_id;
    if let Some(other) = entries.iter().find(|e| &e.meta.doc_id != doc) {
        return Err(AssembleError::MixedDocId(doc.clone(), other.meta.doc_id.clone()));
    }
    let mut pages: Vec<(i64, &str)> = Vec::with_capacity(entries.len());
    for e in entries {
        match e.meta.page_id {
            Some(p) => pages.push((p, &e.md)),
            None if entries.len() == 1 => pages.push((0, &e.md)),
            None => return Err(AssembleError::NullPageInMultipage(doc.clone())),
        }
    }
    pages.sort_by_key(|&(p, _)| p);
    if let Some(w) = pages.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(AssembleError::DuplicatePage { doc_id: doc.clone(), page_id: w[0].0 });
    }
    let body: usize = pages.iter().map(|(_, md)| md.len() + BOP.len() + EOP.len()).sum();
    let mut out = String::with_capacity(body + BOD.len() + EOD.len());
    out.push_str(BOD);
    for (_, md) in pages {
        out.push_str(BOP);
        out.push_str(md);
        out.push_str(EOP);
    }
    out.push_str(EOD);
    Ok(out)
}

/// Group entries by `doc_id`, keeping documents in order of first appearance.
pub fn group_documents<I: IntoIterator<Item = PinEntry>>(entries: I) -> Vec<Vec<PinEntry>> {
    let mut index: HashMap<DocId, usize> = HashMap::new();
    let mut groups: Vec<Vec<PinEntry>> = Vec::new();
    for e in entries {
        let slot = *index.entry(e.meta.doc_id.clone()).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[slot].push(e);
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::fig5_entry;
    use proptest::prelude::*;

    fn page(doc: i64, page_id: Option<i64>, md: &str) -> PinEntry {
        let mut e = fig5_entry();
        e.meta.doc_id = DocId::Int(doc);
        e.meta.page_id = page_id;
        e.md = md.to_owned();
        e
    }

    #[test]
    fn two_pages() {
        let out = assemble_document_sequence(&[page(1, Some(1), "B"), page(1, Some(0), "A")]).unwrap();
        assert_eq!(out, "[BOD][BOP]A[EOP][BOP]B[EOP][EOD]");
    }

    #[test]
    fn single_null_page() {
        assert_eq!(
            assemble_document_sequence(&[page(1, None, "md")]).unwrap(),
            "[BOD][BOP]md[EOP][EOD]"
        );
    }

    #[test]
    fn errors() {
        assert_eq!(assemble_document_sequence(&[]), Err(AssembleError::Empty));
        assert_eq!(
            assemble_document_sequence(&[page(1, Some(0), "a"), page(2, Some(1), "b")]),
            Err(AssembleError::MixedDocId(DocId::Int(1), DocId::Int(2)))
        );
        assert_eq!(
            assemble_document_sequence(&[page(1, Some(3), "a"), page(1, Some(3), "b")]),
            Err(AssembleError::DuplicatePage { doc_id: DocId::Int(1), page_id: 3 })
        );
        assert_eq!(
            assemble_document_sequence(&[page(1, None, "a"), page(1, Some(1), "b")]),
            Err(AssembleError::NullPageInMultipage(DocId::Int(1)))
        );
    }

    #[test]
    fn grouping_keeps_first_appearance_order() {
        let groups = group_documents([page(2, Some(0), "a"), page(1, Some(0), "b"), page(2, Some(1), "c")]);
        let shape: Vec<Vec<&str>> = groups.iter().map(|g| g.iter().map(|e| e.md.as_str()).collect()).collect();
        assert_eq!(shape, vec![vec!["a", "c"], vec!["b"]]);
    }

    proptest! {
        #[test]
        fn token_counts(mds in prop::collection::vec("[a-z ]{0,10}", 1..20)) {
            let pages: Vec<PinEntry> =
                mds.iter().enumerate().map(|(i, md)| page(5, Some(i as i64 * 2), md)).collect();
            let out = assemble_document_sequence(&pages).unwrap();
            prop_assert_eq!(out.matches(BOD).count(), 1);
            prop_assert_eq!(out.matches(EOD).count(), 1);
            prop_assert_eq!(out.matches(BOP).count(), pages.len());
            prop_assert_eq!(out.matches(EOP).count(), pages.len());
        }
    }
}
