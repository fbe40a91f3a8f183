//! Chance-corrected agreement between coders: Cohen's kappa and nominal
//! Krippendorff's alpha, per code and averaged.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::codebook::{Code, CodedEmail};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum AgreementError {
    #[error("label sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no pairable items")]
    Empty,
    #[error("coders {0:?} and {1:?} share no coded emails for {2}")]
    EmptyIntersection(String, String, String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kappa {
    pub kappa: f64,
    pub p_o: f64,
    pub p_e: f64,
    /// Both coders used one and the same label throughout; kappa is set to 1.
    pub degenerate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alpha {
    pub alpha: f64,
    pub d_o: f64,
    pub d_e: f64,
    /// Every value identical, so expected disagreement is zero; alpha is set to 1.
    pub degenerate: bool,
}

fn counts<L: Ord>(xs: &[L]) -> BTreeMap<&L, usize> {
    let mut m = BTreeMap::new();
    for x in xs {
        *m.entry(x).or_insert(0) += 1;
    }
    m
}

/// Cohen's kappa for two coders over the same items.
pub fn cohen_kappa<L: Ord>(a: &[L], b: &[L]) -> Result<Kappa, AgreementError> {
    if a.len() != b.len() {
        return Err(AgreementError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(AgreementError::Empty);
    }
    let n = a.len();
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count();
    let (ca, cb) = (counts(a), counts(b));
    let chance: usize = ca.iter().map(|(label, na)| na * cb.get(label).copied().unwrap_or(0)).sum();

    let nf = n as f64;
    let p_o = agree as f64 / nf;
    if chance == n * n {
        return Ok(Kappa { kappa: 1.0, p_o, p_e: 1.0, degenerate: true });
    }
    let p_e = chance as f64 / (nf * nf);
    Ok(Kappa { kappa: (p_o - p_e) / (1.0 - p_e), p_o, p_e, degenerate: false })
}

/// Nominal alpha for two coders over the same items.
pub fn krippendorff_alpha<L: Ord + Clone>(a: &[L], b: &[L]) -> Result<Alpha, AgreementError> {
    if a.len() != b.len() {
        return Err(AgreementError::LengthMismatch(a.len(), b.len()));
    }
    let units: Vec<Vec<L>> = a.iter().zip(b).map(|(x, y)| vec![x.clone(), y.clone()]).collect();
    krippendorff_alpha_units(&units)
}

/// Nominal alpha in coincidence-matrix form. Each unit holds the values the
/// coders assigned to one item; units with fewer than two values are not
/// pairable and are skipped, so any number of coders works.
pub fn krippendorff_alpha_units<L: Ord + Clone>(units: &[Vec<L>]) -> Result<Alpha, AgreementError> {
    let mut coincidence: BTreeMap<(L, L), f64> = BTreeMap::new();
    let mut n = 0usize;
    for unit in units.iter().filter(|u| u.len() >= 2) {
        let weight = 1.0 / (unit.len() - 1) as f64;
        n += unit.len();
        for (i, x) in unit.iter().enumerate() {
            for (j, y) in unit.iter().enumerate() {
                if i != j {
                    *coincidence.entry((x.clone(), y.clone())).or_insert(0.0) += weight;
                }
            }
        }
    }
    if n == 0 {
        return Err(AgreementError::Empty);
    }

    let mut marginals: BTreeMap<&L, f64> = BTreeMap::new();
    for ((c, _), o) in &coincidence {
        *marginals.entry(c).or_insert(0.0) += o;
    }
    if marginals.len() < 2 {
        return Ok(Alpha { alpha: 1.0, d_o: 0.0, d_e: 0.0, degenerate: true });
    }

    let nf = n as f64;
    // fold from +0.0; an empty f64 sum is -0.0
    let observed = coincidence.iter().filter(|((c, k), _)| c != k).fold(0.0, |acc, (_, o)| acc + o);
    let total_sq: f64 = marginals.values().sum::<f64>().powi(2);
    let same_sq: f64 = marginals.values().map(|m| m * m).sum();
    let d_o = observed / nf;
    let d_e = (total_sq - same_sq) / (nf * (nf - 1.0));
    Ok(Alpha { alpha: 1.0 - d_o / d_e, d_o, d_e, degenerate: false })
}

/// One coder's labels: code -> email id -> canonical label.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub coder_id: String,
    pub labels: BTreeMap<Code, BTreeMap<String, String>>,
}

impl AnnotationSet {
    pub fn from_coded(coder_id: impl Into<String>, coded: &[CodedEmail]) -> Self {
        let mut labels: BTreeMap<Code, BTreeMap<String, String>> = BTreeMap::new();
        for c in coded {
            for code in Code::ALL {
                labels.entry(code).or_default().insert(c.email_id.clone(), code.canonical_value(c));
            }
        }
        AnnotationSet { coder_id: coder_id.into(), labels }
    }

    /// Set a single label, replacing any earlier one for the same cell.
    pub fn set(&mut self, code: Code, email_id: impl Into<String>, value: impl Into<String>) {
        self.labels.entry(code).or_default().insert(email_id.into(), value.into());
    }

    pub fn email_ids(&self) -> BTreeSet<&str> {
        self.labels.values().flat_map(|m| m.keys().map(String::as_str)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeAgreement {
    pub kappa: f64,
    pub alpha: f64,
    pub p_o: f64,
    pub p_e: f64,
    pub d_o: f64,
    pub d_e: f64,
    pub n_items: usize,
    /// Items labelled by only one of the two coders.
    pub n_excluded: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub coder_a: String,
    pub coder_b: String,
    pub per_code: BTreeMap<Code, CodeAgreement>,
    pub overall_kappa: f64,
    pub overall_alpha: f64,
}

fn paired<'a>(
    a: &'a AnnotationSet,
    b: &'a AnnotationSet,
    code: Code,
) -> (Vec<(&'a str, &'a String, &'a String)>, usize) {
    let (Some(la), Some(lb)) = (a.labels.get(&code), b.labels.get(&code)) else {
        let only = |s: &AnnotationSet| s.labels.get(&code).map_or(0, BTreeMap::len);
        return (Vec::new(), only(a) + only(b));
    };
    let pairs: Vec<_> = la.iter().filter_map(|(id, va)| lb.get(id).map(|vb| (id.as_str(), va, vb))).collect();
    let excluded = la.len() + lb.len() - 2 * pairs.len();
    (pairs, excluded)
}

/// Per-code kappa and alpha over the emails both coders labelled.
pub fn agreement_report(
    a: &AnnotationSet,
    b: &AnnotationSet,
    codes: &[Code],
) -> Result<AgreementReport, AgreementError> {
    let mut per_code = BTreeMap::new();
    for &code in codes {
        let (pairs, n_excluded) = paired(a, b, code);
        if pairs.is_empty() {
            return Err(AgreementError::EmptyIntersection(a.coder_id.clone(), b.coder_id.clone(), code.to_string()));
        }
        let xs: Vec<&String> = pairs.iter().map(|p| p.1).collect();
        let ys: Vec<&String> = pairs.iter().map(|p| p.2).collect();
        let k = cohen_kappa(&xs, &ys)?;
        let al = krippendorff_alpha(&xs, &ys)?;
        per_code.insert(
            code,
            CodeAgreement {
                kappa: k.kappa,
                alpha: al.alpha,
                p_o: k.p_o,
                p_e: k.p_e,
                d_o: al.d_o,
                d_e: al.d_e,
                n_items: pairs.len(),
                n_excluded,
                degenerate: k.degenerate || al.degenerate,
            },
        );
    }
    if per_code.is_empty() {
        return Err(AgreementError::Empty);
    }
    let m = per_code.len() as f64;
    let overall_kappa = per_code.values().map(|c| c.kappa).sum::<f64>() / m;
    let overall_alpha = per_code.values().map(|c| c.alpha).sum::<f64>() / m;
    Ok(AgreementReport {
        coder_a: a.coder_id.clone(),
        coder_b: b.coder_id.clone(),
        per_code,
        overall_kappa,
        overall_alpha,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disagreement {
    pub email_id: String,
    pub code: Code,
    pub a: String,
    pub b: String,
}

/// Cells where two coders labelled the same email differently.
pub fn disagreements(a: &AnnotationSet, b: &AnnotationSet, codes: &[Code]) -> Vec<Disagreement> {
    let mut out = Vec::new();
    for &code in codes {
        let (pairs, _) = paired(a, b, code);
        out.extend(pairs.into_iter().filter(|(_, x, y)| x != y).map(|(id, x, y)| Disagreement {
            email_id: id.to_string(),
            code,
            a: x.clone(),
            b: y.clone(),
        }));
    }
    out.sort_by(|x, y| (&x.email_id, x.code).cmp(&(&y.email_id, y.code)));
    out
}

impl AgreementReport {
    /// Aligned text table: one row per code, then the overall means.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<24} {:>8} {:>8} {:>6}", "High-Level Code", "C. Kappa", "K. Alpha", "N");
        for (code, row) in &self.per_code {
            let _ = writeln!(s, "{:<24} {:>8.2} {:>8.2} {:>6}", code.title(), row.kappa, row.alpha, row.n_items);
        }
        let _ = writeln!(s, "{:<24} {:>8.2} {:>8.2}", "Overall", self.overall_kappa, self.overall_alpha);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const A: [&str; 5] = ["A", "A", "B", "B", "A"];
    const B: [&str; 5] = ["A", "B", "B", "B", "A"];

    #[test]
    fn perfect_agreement_has_positive_zero_disagreement() {
        let al = krippendorff_alpha(&A, &A).unwrap();
        assert!(al.d_o == 0.0 && al.d_o.is_sign_positive());
    }

    #[test]
    fn five_item_fixture() {
        let k = cohen_kappa(&A, &B).unwrap();
        assert!((k.p_o - 0.8).abs() < 1e-12);
        assert!((k.p_e - 0.48).abs() < 1e-12);
        assert!((k.kappa - 0.6154).abs() < 1e-4);
        let a = krippendorff_alpha(&A, &B).unwrap();
        assert!((a.d_o - 0.2).abs() < 1e-12);
        assert!((a.d_e - 50.0 / 90.0).abs() < 1e-12);
        assert!((a.alpha - 0.64).abs() < 1e-12);
    }

    #[test]
    fn perfect_agreement() {
        let xs = ["x", "y", "x", "z"];
        assert_eq!(cohen_kappa(&xs, &xs).unwrap().kappa, 1.0);
        assert_eq!(krippendorff_alpha(&xs, &xs).unwrap().alpha, 1.0);
    }

    #[test]
    fn constant_none_is_degenerate_one() {
        let xs = ["none"; 6];
        let k = cohen_kappa(&xs, &xs).unwrap();
        assert!(k.degenerate);
        assert_eq!(k.kappa, 1.0);
        let a = krippendorff_alpha(&xs, &xs).unwrap();
        assert!(a.degenerate);
        assert_eq!(a.alpha, 1.0);
    }

    #[test]
    fn errors() {
        assert_eq!(cohen_kappa(&["a"], &["a", "b"]).unwrap_err(), AgreementError::LengthMismatch(1, 2));
        assert_eq!(cohen_kappa::<&str>(&[], &[]).unwrap_err(), AgreementError::Empty);
        assert_eq!(krippendorff_alpha::<&str>(&[], &[]).unwrap_err(), AgreementError::Empty);
    }

    #[test]
    fn three_coder_units() {
        // all three coders agree on every unit
        let units = vec![vec!["a", "a", "a"], vec!["b", "b", "b"], vec!["a", "a"]];
        assert_eq!(krippendorff_alpha_units(&units).unwrap().alpha, 1.0);
        // a single value has no partner and is ignored
        let units = vec![vec!["a", "a"], vec!["b", "b"], vec!["c"]];
        assert_eq!(krippendorff_alpha_units(&units).unwrap().alpha, 1.0);
    }

    fn coded(id: &str, threat: &str) -> CodedEmail {
        let mut c = CodedEmail::empty(id);
        c.threat = threat.into();
        c
    }

    #[test]
    fn report_one_disagreement_in_fifty() {
        let a: Vec<_> =
            (0..50).map(|i| coded(&format!("2021_{i:03}"), if i % 2 == 0 { "threat" } else { "none" })).collect();
        let mut b = a.clone();
        b[7].threat = "threat".into();
        let report = agreement_report(
            &AnnotationSet::from_coded("a", &a),
            &AnnotationSet::from_coded("b", &b),
            &Code::RELIABILITY,
        )
        .unwrap();
        assert!((report.per_code[&Code::Threat].p_o - 0.98).abs() < 1e-12);
        for (code, row) in &report.per_code {
            if *code != Code::Threat {
                assert_eq!(row.p_o, 1.0);
                assert_eq!(row.kappa, 1.0);
            }
        }
        let d = disagreements(&AnnotationSet::from_coded("a", &a), &AnnotationSet::from_coded("b", &b), &Code::ALL);
        assert_eq!(
            d,
            vec![Disagreement {
                email_id: "2021_007".into(),
                code: Code::Threat,
                a: "none".into(),
                b: "threat".into()
            }]
        );
    }

    #[test]
    fn report_uses_intersection_only() {
        let a = vec![coded("1", "threat"), coded("2", "none"), coded("3", "none")];
        let b = vec![coded("2", "none"), coded("3", "threat"), coded("4", "none")];
        let r =
            agreement_report(&AnnotationSet::from_coded("a", &a), &AnnotationSet::from_coded("b", &b), &[Code::Threat])
                .unwrap();
        assert_eq!(r.per_code[&Code::Threat].n_items, 2);
        assert_eq!(r.per_code[&Code::Threat].n_excluded, 2);
    }

    #[test]
    fn empty_intersection_is_error() {
        let a = AnnotationSet::from_coded("a", &[coded("1", "none")]);
        let b = AnnotationSet::from_coded("b", &[coded("2", "none")]);
        assert!(matches!(agreement_report(&a, &b, &Code::RELIABILITY), Err(AgreementError::EmptyIntersection(..))));
    }

    #[test]
    fn table_layout() {
        let a = AnnotationSet::from_coded("a", &[coded("1", "none"), coded("2", "threat")]);
        let table = agreement_report(&a, &a, &Code::RELIABILITY).unwrap().to_table();
        assert!(table.starts_with("High-Level Code"));
        assert!(table.contains("Threatening Language         1.00     1.00      2"));
        assert!(table.trim_end().ends_with("Overall                      1.00     1.00"));
    }

    fn labels() -> impl Strategy<Value = (Vec<u8>, Vec<u8>)> {
        (1usize..40).prop_flat_map(|n| (proptest::collection::vec(0u8..4, n), proptest::collection::vec(0u8..4, n)))
    }

    proptest! {
        #[test]
        fn symmetric_bounded_and_rename_invariant((a, b) in labels(), shift in 1u8..200) {
            let k = cohen_kappa(&a, &b).unwrap();
            let kr = cohen_kappa(&b, &a).unwrap();
            let al = krippendorff_alpha(&a, &b).unwrap();
            let alr = krippendorff_alpha(&b, &a).unwrap();
            prop_assert!((k.kappa - kr.kappa).abs() < 1e-12);
            prop_assert!((al.alpha - alr.alpha).abs() < 1e-12);
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&k.kappa));
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&al.alpha));
            // bijective relabel that also scrambles the sort order
            let rename = |x: &u8| (x.wrapping_mul(7).wrapping_add(shift)) % 251;
            let a2: Vec<u8> = a.iter().map(rename).collect();
            let b2: Vec<u8> = b.iter().map(rename).collect();
            prop_assert!((cohen_kappa(&a2, &b2).unwrap().kappa - k.kappa).abs() < 1e-12);
            prop_assert!((krippendorff_alpha(&a2, &b2).unwrap().alpha - al.alpha).abs() < 1e-12);
        }
    }
}
