//! Suggest codes for one email, then score the autocoder against the
//! hand-labelled fixture set.
//!
//! ```text
//! cargo run --example autocode_email -- [MESSAGE.eml]
//! ```

use std::path::{Path, PathBuf};

use phishbook::autocoder::{code_email, evaluate, Lexicons, Recipient};
use phishbook::codebook::{read_coded_csv, CodebookSchema};
use phishbook::corpus::{assign_ids, parse_mailbox, to_record, ArchiveFormat, EmailId, Origin, RawEmail};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| fixtures.join("wetransfer.eml"));

    let lex = Lexicons::embedded();
    let schema = CodebookSchema::default();
    let recipient = Recipient { name: "Jose".into(), address: "jose@monkey.org".into() };

    let raw =
        RawEmail { source: std::fs::read(&path)?, origin: Origin { archive: path.display().to_string(), index: 0 } };
    let record = to_record(&raw, EmailId::new(2017, 1, 3))?;
    let coded = code_email(&record, &lex, &schema, &recipient);
    println!("{}", serde_json::to_string_pretty(&coded)?);

    let parsed = parse_mailbox(&std::fs::read(fixtures.join("labeled.mbox"))?, ArchiveFormat::Mbox, "labeled.mbox")?;
    let ids = assign_ids(2019, parsed.emails.len());
    let mut predicted = Vec::new();
    for (raw, id) in parsed.emails.iter().zip(ids) {
        predicted.push(code_email(&to_record(raw, id)?, &lex, &schema, &recipient));
    }
    let labels = read_coded_csv(std::fs::File::open(fixtures.join("labeled_codes.csv"))?)?;
    println!("\nAgainst {} hand-coded emails:\n{}", labels.len(), evaluate(&predicted, &labels).to_table());
    Ok(())
}
