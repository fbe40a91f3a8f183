//! Parse an mbox archive, number the messages, drop empty or non-English
//! bodies and draw a seeded sample from the busiest months.
//!
//! ```text
//! cargo run --example ingest_archive -- [ARCHIVE.mbox] [YEAR]
//! ```

use std::path::PathBuf;

use phishbook::corpus::{
    assign_ids, month_counts, parse_mailbox, preprocess, sample_by_frequency, to_record, ArchiveFormat, SamplingPlan,
    StopwordDetector,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/five.mbox"));
    let year: u16 = args.next().map(|y| y.parse()).transpose()?.unwrap_or(2018);

    let bytes = std::fs::read(&path)?;
    let parsed = parse_mailbox(&bytes, ArchiveFormat::Mbox, &path.display().to_string())?;
    println!("{} messages, {} skipped as unparseable", parsed.emails.len(), parsed.skipped.len());

    let ids = assign_ids(year, parsed.emails.len());
    let records = parsed.emails.iter().zip(ids).map(|(raw, id)| to_record(raw, id)).collect::<Result<Vec<_>, _>>()?;
    for r in &records {
        println!("  {}  {:<28} {}", r.id, r.sender_domain, r.subject);
    }

    let detector = StopwordDetector::default();
    let pre = preprocess(records, Some(&detector));
    println!("kept {}, dropped {}", pre.kept.len(), pre.dropped.len());
    println!("per month: {:?}", month_counts(&pre.kept, year.into()));

    let plan = SamplingPlan { year: year.into(), window_months: 1, sample_size: 3, seed: 7 };
    let sample = sample_by_frequency(&pre.kept, &plan)?;
    println!("window {:?} holds {} emails; sampled:", sample.window, sample.window_count);
    for r in &sample.sampled {
        println!("  {} {}", r.id, r.subject);
    }
    for w in &sample.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
