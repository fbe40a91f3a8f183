//! Recipient-facing advice for a lookalike bank email: verdict, what the
//! email wants, domain inconsistencies and what to do instead.
//!
//! ```text
//! cargo run --example tailored_guidance -- [--html]
//! ```

use phishbook::autocoder::{code_email, Lexicons, Recipient};
use phishbook::codebook::CodebookSchema;
use phishbook::corpus::{extract_urls, EmailId, EmailRecord};
use phishbook::guidance::{generate_guidance, Templates};

fn main() {
    let mut record = EmailRecord::blank(EmailId::new(2018, 5, 3));
    record.sender_display = "USAA".into();
    record.sender_address = "alerts@ubagroup.com".into();
    record.sender_domain = "ubagroup.com".into();
    record.subject = "Your USAA account has been suspended".into();
    record.body_text = "Dear Member,\n\nWe detected unusual activity and your USAA account has been suspended.\n\
                        You must verify your identity within 24 hours or your account will be closed.\n\
                        Click here to verify: http://usaa-secure.ubagroup.com/verify\n"
        .into();
    record.urls = extract_urls(None, &record.body_text);

    let lex = Lexicons::embedded();
    let coded = code_email(&record, &lex, &CodebookSchema::default(), &Recipient::default());
    let guidance = generate_guidance(&coded, &record, &lex, &Templates::embedded());

    if std::env::args().any(|a| a == "--html") {
        println!("{}", guidance.render_html());
    } else {
        println!("{}", guidance.render_text());
    }
}
