mod common;

use std::io::{BufReader, Cursor};

use pin_forge::io::{
    assemble_document_sequence, group_documents, load_manifest, partition_dataset, read_entries, read_partitioned,
    write_entries, DecodeErrorKind, PartitionOptions, BOD, BOP, EOD, EOP,
};
use pin_forge::model::{DocId, OiSource, OverallImage};
use pin_forge::PinEntry;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

/// Entries that exercise every optional shape of the schema.
fn varied(n: u64, seed: u64) -> Vec<PinEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|id| {
            let mut e = common::random_entry(&mut rng, id);
            if rng.gen_bool(0.3) {
                e.quality_signals = None;
            }
            if rng.gen_bool(0.5) {
                e.meta.doc_id = DocId::Str(format!("doc-{}", rng.gen_range(0..1000)));
            }
            if rng.gen_bool(0.4) {
                e.meta.page_id = Some(rng.gen_range(0..50));
            }
            match rng.gen_range(0..3) {
                0 => e.overall_image = OverallImage::default(),
                1 => {
                    e.meta.oi_exist = true;
                    e.meta.oi_source = OiSource::Ori;
                    e.overall_image = OverallImage::single(format!("overall_image/{id}.png"));
                }
                _ => {
                    e.meta.oi_exist = true;
                    e.overall_image = OverallImage::list(vec![format!("overall_image/{id}-0.png"), format!("overall_image/{id}-1.png")]);
                }
            }
            if rng.gen_bool(0.5) {
                let meta = json!({ "document_url": format!("https://example.com/{id}"), "nested": { "k": [1, 2.5, null, "\u{1F600}"] } });
                e.meta.ori_meta = Some(pin_forge::model::RawJson::from_value(&meta));
            }
            e
        })
        .collect()
}

#[test]
fn thousand_entries_round_trip() {
    let entries = varied(1000, 3);
    let mut buf = Vec::new();
    assert_eq!(write_entries(&entries, &mut buf).unwrap(), 1000);
    let back: Vec<PinEntry> = read_entries(Cursor::new(&buf)).map(Result::unwrap).collect();
    assert_eq!(back, entries);
    let mut again = Vec::new();
    write_entries(&back, &mut again).unwrap();
    assert_eq!(again, buf);
}

#[test]
fn corrupted_lines_are_reported_and_skipped() {
    let entries = varied(10_000, 5);
    let mut lines: Vec<String> = entries.iter().map(PinEntry::to_json).collect();
    let bad = [17usize, 5_000, 9_999];
    lines[bad[0] - 1].truncate(40);
    lines[bad[1] - 1] = lines[bad[1] - 1].replacen("\"id\":", "\"id\":\"x\",\"_\":", 1);
    lines[bad[2] - 1] = "{not json".to_owned();
    let text = lines.join("\n") + "\n";

    let mut ok = Vec::new();
    let mut errors = Vec::new();
    for item in read_entries(BufReader::new(text.as_bytes())) {
        match item {
            Ok(e) => ok.push(e),
            Err(e) => {
                assert!(matches!(e.kind, DecodeErrorKind::Json(_)));
                errors.push(e.line);
            }
        }
    }
    assert_eq!(errors, bad);
    assert_eq!(ok.len(), 9_997);
    let want: Vec<&PinEntry> =
        entries.iter().enumerate().filter(|(i, _)| !bad.contains(&(i + 1))).map(|(_, e)| e).collect();
    assert!(ok.iter().eq(want));
}

#[test]
fn partition_concatenation_equals_input() {
    let dir = tempfile::tempdir().unwrap();
    let entries = varied(1003, 9);
    let manifest = partition_dataset(entries.clone(), 64, dir.path(), &PartitionOptions::default()).unwrap();
    assert_eq!(manifest.parts.len(), 16);
    assert_eq!(manifest.total_entries, 1003);
    assert!(manifest.parts[..15].iter().all(|p| p.entry_count == 64 && p.complete));
    assert_eq!(manifest.parts[15].entry_count, 1003 - 15 * 64);
    assert_eq!(load_manifest(dir.path()).unwrap(), manifest);
    let back: Vec<PinEntry> = read_partitioned(dir.path()).unwrap().map(Result::unwrap).collect();
    assert_eq!(back, entries);
}

#[test]
fn shuffled_pages_assemble_in_page_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pages: Vec<PinEntry> = (0..7)
        .map(|p| common::entry_with(100 + p, 42, Some(p as i64), format!("page {p} body"), vec![]))
        .collect();
    let mut shuffled = pages.clone();
    shuffled.shuffle(&mut rng);
    let mut want = String::from(BOD);
    for p in &pages {
        want.push_str(BOP);
        want.push_str(&p.md);
        want.push_str(EOP);
    }
    want.push_str(EOD);
    assert_eq!(assemble_document_sequence(&shuffled).unwrap(), want);

    let mut other = common::entry_with(200, 7, None, "single".into(), vec![]);
    other.id = 200;
    let mut mixed = shuffled.clone();
    mixed.insert(3, other);
    let groups = group_documents(mixed);
    assert_eq!(groups.len(), 2);
    assert_eq!(groups[0].len(), 7);
    assert_eq!(assemble_document_sequence(&groups[1]).unwrap(), format!("{BOD}{BOP}single{EOP}{EOD}"));
}
