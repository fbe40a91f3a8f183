//! Code a small archive and group it into campaigns, with exact matching
//! and with a Levenshtein budget on topic and specific action.
//!
//! ```text
//! cargo run --example campaign_clusters -- [ARCHIVE.mbox]
//! ```

use std::path::PathBuf;

use phishbook::autocoder::{code_email, Lexicons, Recipient};
use phishbook::campaigns::{campaign_report, cluster_multilayer, CorpusIndex, Matcher, DEFAULT_LEVENSHTEIN_THRESHOLD};
use phishbook::codebook::CodebookSchema;
use phishbook::corpus::{assign_ids, parse_mailbox, to_record, ArchiveFormat};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/five.mbox"));
    let parsed = parse_mailbox(&std::fs::read(&path)?, ArchiveFormat::Mbox, &path.display().to_string())?;
    let ids = assign_ids(2018, parsed.emails.len());
    let records = parsed.emails.iter().zip(ids).map(|(raw, id)| to_record(raw, id)).collect::<Result<Vec<_>, _>>()?;

    let lex = Lexicons::embedded();
    let schema = CodebookSchema::default();
    let recipient = Recipient::default();
    let coded: Vec<_> = records.iter().map(|r| code_email(r, &lex, &schema, &recipient)).collect();

    let index = CorpusIndex::new(&records, &coded);
    for matcher in [Matcher::Exact, Matcher::Levenshtein { threshold: DEFAULT_LEVENSHTEIN_THRESHOLD }] {
        let clustering = cluster_multilayer(&coded, matcher);
        let report = campaign_report(&clustering, &index, 1, true)?;
        println!("{}", report.to_table());
    }
    Ok(())
}
