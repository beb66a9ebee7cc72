//! Brute-force n-gram oracle for BLEU-4 and ROUGE-2.
//!
//! Works on pre-split token lists and counts by linear scans over plain
//! vectors, sharing no code with the library's metric implementation.

fn ngrams(tokens: &[&str], n: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    if tokens.len() < n {
        return out;
    }
    for i in 0..=tokens.len() - n {
        out.push(tokens[i..i + n].iter().map(|t| t.to_string()).collect());
    }
    out
}

fn count(haystack: &[Vec<String>], needle: &[String]) -> usize {
    haystack.iter().filter(|g| g.as_slice() == needle).count()
}

/// Clipped matches: every distinct hypothesis n-gram contributes
/// min(count in hypothesis, count in reference).
pub fn clipped_matches(hyp: &[&str], reference: &[&str], n: usize) -> (usize, usize) {
    let h = ngrams(hyp, n);
    let r = ngrams(reference, n);
    let mut distinct: Vec<Vec<String>> = Vec::new();
    for g in &h {
        if !distinct.contains(g) {
            distinct.push(g.clone());
        }
    }
    let matched = distinct.iter().map(|g| count(&h, g).min(count(&r, g))).sum();
    (matched, h.len())
}

pub fn bleu4(pairs: &[(Vec<&str>, Vec<&str>)]) -> f64 {
    let mut matched = [0usize; 4];
    let mut total = [0usize; 4];
    let mut c = 0usize;
    let mut r = 0usize;
    for (h, rf) in pairs {
        c += h.len();
        r += rf.len();
        for n in 1..=4 {
            let (m, t) = clipped_matches(h, rf, n);
            matched[n - 1] += m;
            total[n - 1] += t;
        }
    }
    if matched.iter().sum::<usize>() == 0 || total.contains(&0) {
        return 0.0;
    }
    let mut zero_orders = 0;
    let mut log_sum = 0.0;
    for n in 0..4 {
        let p = if matched[n] == 0 {
            zero_orders += 1;
            1.0 / (2f64.powi(zero_orders) * total[n] as f64)
        } else {
            matched[n] as f64 / total[n] as f64
        };
        log_sum += (100.0 * p).ln();
    }
    let bp = if c < r { (1.0 - r as f64 / c as f64).exp() } else { 1.0 };
    bp * (log_sum / 4.0).exp()
}

pub fn rouge2_pair(h: &[&str], r: &[&str]) -> f64 {
    if h.len() < 2 || r.len() < 2 {
        return 0.0;
    }
    let (m, hb) = clipped_matches(h, r, 2);
    if m == 0 {
        return 0.0;
    }
    let p = m as f64 / hb as f64;
    let rc = m as f64 / (r.len() - 1) as f64;
    2.0 * p * rc / (p + rc)
}

pub fn rouge2(pairs: &[(Vec<&str>, Vec<&str>)]) -> f64 {
    pairs.iter().map(|(h, r)| rouge2_pair(h, r)).sum::<f64>() / pairs.len() as f64
}
