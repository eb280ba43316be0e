use super::{compute_signals, QualitySignals, Tokenizer};
use crate::model::PinEntry;

/// Lazily keeps entries whose signals satisfy a predicate.
///
/// Entries without stored signals are scored with the tokenizer when one is
/// given (and the computed signals are attached); otherwise they are skipped
/// and counted in [`SignalFilter::skipped`].
pub struct SignalFilter<'t, I, P> {
    inner: I,
    predicate: P,
    tokenizer: Option<&'t dyn Tokenizer>,
    skipped: usize,
}

impl<I, P> SignalFilter<'_, I, P> {
    pub fn skipped(&self) -> usize {
        self.skipped
    }
}

pub fn signal_filter<'t, I, P>(
    entries: I,
    predicate: P,
    tokenizer: Option<&'t dyn Tokenizer>,
) -> SignalFilter<'t, I::IntoIter, P>
where
    I: IntoIterator<Item = PinEntry>,
    P: FnMut(&QualitySignals) -> bool,
{
    SignalFilter {
        inner: entries.into_iter(),
        predicate,
        tokenizer,
        skipped: 0,
    }
}

impl<I, P> Iterator for SignalFilter<'_, I, P>
where
    I: Iterator<Item = PinEntry>,
    P: FnMut(&QualitySignals) -> bool,
{
    type Item = PinEntry;

    fn next(&mut self) -> Option<PinEntry> {
        loop {
            let mut entry = self.inner.next()?;
            if entry.quality_signals.is_none() {
                match self.tokenizer {
                    Some(tok) => entry.quality_signals = Some(compute_signals(&entry, tok)),
                    None => {
                        self.skipped += 1;
                        log::warn!("entry {} has no quality signals; skipped", entry.id);
                        continue;
                    }
                }
            }
            let keep = entry.quality_signals.as_ref().is_some_and(&mut self.predicate);
            if keep {
                return Some(entry);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::WhitespaceTokenizer;
    use crate::test_support::fig5_entry;

    /// Entries with bodies of `k` image/text pairs: interleaving count 2k - 1.
    fn fixture() -> Vec<PinEntry> {
        (1..=5)
            .map(|k| {
                let mut e = fig5_entry();
                e.id = k;
                e.md = (0..k).map(|i| format!("<img src='x{i}.png'>\n\ntext {i}")).collect::<Vec<_>>().join("\n\n");
                e.quality_signals = Some(compute_signals(&e, &WhitespaceTokenizer));
                e
            })
            .collect()
    }

    #[test]
    fn predicate_selects_expected_subset() {
        let ids: Vec<u64> = signal_filter(fixture(), |s| s.image_text_interleaving_count >= 4, None)
            .map(|e| e.id)
            .collect();
        // counts are 1, 3, 5, 7, 9
        assert_eq!(ids, vec![3, 4, 5]);
    }

    #[test]
    fn constant_predicates() {
        assert_eq!(signal_filter(fixture(), |_| true, None).collect::<Vec<_>>(), fixture());
        assert_eq!(signal_filter(fixture(), |_| false, None).count(), 0);
    }

    #[test]
    fn missing_signals_skip_or_compute() {
        let mut entries = fixture();
        entries[0].quality_signals = None;
        entries[3].quality_signals = None;
        let mut f = signal_filter(entries.clone(), |_| true, None);
        assert_eq!(f.by_ref().count(), 3);
        assert_eq!(f.skipped(), 2);

        let tok = WhitespaceTokenizer;
        let out: Vec<_> = signal_filter(entries, |_| true, Some(&tok)).collect();
        assert_eq!(out, fixture());
    }
}
