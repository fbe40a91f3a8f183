//! Cohen's kappa and Krippendorff's alpha, first on a five-item toy pair,
//! then per code for two coders over the labelled fixtures.
//!
//! ```text
//! cargo run --example inter_rater_agreement -- [CODER_A.csv CODER_B.csv]
//! ```

use std::path::Path;

use phishbook::agreement::{agreement_report, cohen_kappa, disagreements, krippendorff_alpha, AnnotationSet};
use phishbook::codebook::{read_coded_file, Code};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = ["A", "A", "B", "B", "A"];
    let b = ["A", "B", "B", "B", "A"];
    let k = cohen_kappa(&a, &b)?;
    let al = krippendorff_alpha(&a, &b)?;
    println!("toy pair: kappa {:.4} (p_o {:.2}, p_e {:.2}), alpha {:.4}", k.kappa, k.p_o, k.p_e, al.alpha);

    let args: Vec<String> = std::env::args().skip(1).collect();
    let (coder_a, coder_b) = match args.as_slice() {
        [x, y] => (read_coded_file(Path::new(x))?, read_coded_file(Path::new(y))?),
        _ => {
            let labels =
                read_coded_file(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/labeled_codes.csv"))?;
            // a second coder who reads every fifth email as urgent
            let mut other = labels.clone();
            for c in other.iter_mut().step_by(5) {
                c.urgency = "urgent".into();
            }
            (labels, other)
        }
    };
    let (sa, sb) = (AnnotationSet::from_coded("coder_a", &coder_a), AnnotationSet::from_coded("coder_b", &coder_b));
    let report = agreement_report(&sa, &sb, &Code::RELIABILITY)?;
    println!("\n{}", report.to_table());
    for d in disagreements(&sa, &sb, &Code::RELIABILITY).iter().take(5) {
        println!("{}", serde_json::to_string(d)?);
    }
    Ok(())
}
