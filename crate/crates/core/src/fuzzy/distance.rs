/// Levenshtein distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_chars(&a, &b)
}

/// Two-row dynamic program: `D(i, j) = max(i, j)` when either prefix is
/// empty, otherwise the minimum of deletion, insertion and substitution.
pub fn levenshtein_chars(a: &[char], b: &[char]) -> usize {
    // Iterate over the longer string so the row is the shorter one.
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return long.len();
    }
    let mut row: Vec<usize> = (0..=short.len()).collect();
    for (i, &lc) in long.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &sc) in short.iter().enumerate() {
            let substitution = diag + usize::from(lc != sc);
            diag = row[j + 1];
            row[j + 1] = substitution.min(diag + 1).min(row[j] + 1);
        }
    }
    row[short.len()]
}

/// Edit distance divided by the longer length; 0 when both are empty.
pub fn normalized_levenshtein(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 0.0;
    }
    levenshtein_chars(&a, &b) as f64 / longest as f64
}
