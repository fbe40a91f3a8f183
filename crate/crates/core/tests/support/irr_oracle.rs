//! Brute-force reference for chance-corrected agreement between two coders.
//!
//! Everything here works by enumerating pairs of individual judgements. It does
//! not build contingency tables or coincidence matrices, so it stays independent
//! of the production code it checks.

#![allow(dead_code)]

/// (kappa, observed, expected)
pub fn kappa_by_pairs(a: &[&str], b: &[&str]) -> (f64, f64, f64) {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let p_o = agree / n;
    // chance agreement: pick one judgement of coder a and one of coder b independently
    let mut hits = 0usize;
    for x in a {
        for y in b {
            if x == y {
                hits += 1;
            }
        }
    }
    let p_e = hits as f64 / (n * n);
    ((p_o - p_e) / (1.0 - p_e), p_o, p_e)
}

/// (alpha, observed disagreement, expected disagreement)
pub fn alpha_by_pairs(a: &[&str], b: &[&str]) -> (f64, f64, f64) {
    assert_eq!(a.len(), b.len());
    let pooled: Vec<&str> = a.iter().chain(b.iter()).copied().collect();
    let n = pooled.len();
    // every unit holds exactly two values, so each within-unit ordered pair has weight 1/(2-1)
    let mut within = 0usize;
    for (x, y) in a.iter().zip(b) {
        if x != y {
            within += 2;
        }
    }
    let d_o = within as f64 / n as f64;
    let mut across = 0usize;
    for i in 0..n {
        for j in 0..n {
            if i != j && pooled[i] != pooled[j] {
                across += 1;
            }
        }
    }
    let d_e = across as f64 / (n * (n - 1)) as f64;
    (1.0 - d_o / d_e, d_o, d_e)
}
