//! Matrix classification (Laplacian / SDDM / general SDD / neither) and the
//! reductions that turn SDD problems into Laplacian ones: the one-row SDDM
//! extension, the doubled system for matrices with positive off-diagonals,
//! and the sign-flip shortcut when the doubled system decouples.

use crate::sparse::SparseSym;
use crate::{Error, Result};

/// Default per-row relative tolerance for row-sum and dominance tests;
/// discretization matrices carry rounding in assembled row sums.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    /// Zero row sums, nonpositive off-diagonals.
    Laplacian,
    /// SDD, positive definite, nonpositive off-diagonals.
    Sddm,
    /// SDD with at least one positive off-diagonal.
    SddMixed,
    /// Not diagonally dominant (or SDD but singular, hence unusable here).
    NotSdd,
}

impl MatrixKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MatrixKind::Laplacian => "laplacian",
            MatrixKind::Sddm => "sddm",
            MatrixKind::SddMixed => "sdd-mixed",
            MatrixKind::NotSdd => "not-sdd",
        }
    }
}

/// Row-dominance scenario for SDD matrices: every row exactly balanced (S1)
/// or strict dominance somewhere (S2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    ExactlyDominant,
    StrictlySomewhere,
    NotApplicable,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::ExactlyDominant => "s1",
            Scenario::StrictlySomewhere => "s2",
            Scenario::NotApplicable => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixClass {
    pub kind: MatrixKind,
    pub irreducible: bool,
    pub scenario: Scenario,
}

struct RowStats {
    /// a_ii - sum |a_ij|, j != i
    margin: Vec<f64>,
    /// sum_j |a_ij|
    abs_sum: Vec<f64>,
    /// sum_j a_ij in stored order
    row_sum: Vec<f64>,
    has_positive_off: bool,
}

fn row_stats(a: &SparseSym) -> RowStats {
    let n = a.n();
    let mut margin = vec![0.0; n];
    let mut abs_sum = vec![0.0; n];
    let mut row_sum = vec![0.0; n];
    let mut has_positive_off = false;
    for j in 0..n {
        let mut diag = 0.0;
        let mut off = 0.0;
        let mut sum = 0.0;
        for (i, v) in a.col(j) {
            // column j of a symmetric matrix is row j
            sum += v;
            if i == j {
                diag = v;
            } else {
                off += v.abs();
                if v > 0.0 {
                    has_positive_off = true;
                }
            }
        }
        margin[j] = diag - off;
        abs_sum[j] = diag.abs() + off;
        row_sum[j] = sum;
    }
    RowStats { margin, abs_sum, row_sum, has_positive_off }
}

/// Classify a symmetric matrix. Row tests use `tol * sum_j |a_ij|` per row;
/// irreducibility is connectivity of the off-diagonal pattern.
pub fn classify(a: &SparseSym, tol: f64) -> MatrixClass {
    let n = a.n();
    let st = row_stats(a);
    let (ncomp, labels) = a.connected_components();
    let irreducible = ncomp <= 1;

    let sdd = (0..n).all(|i| st.margin[i] >= -tol * st.abs_sum[i]);
    if !sdd {
        return MatrixClass { kind: MatrixKind::NotSdd, irreducible, scenario: Scenario::NotApplicable };
    }

    let exactly_dominant = (0..n).all(|i| st.margin[i].abs() <= tol * st.abs_sum[i]);
    let scenario = if exactly_dominant { Scenario::ExactlyDominant } else { Scenario::StrictlySomewhere };

    if st.has_positive_off {
        return MatrixClass { kind: MatrixKind::SddMixed, irreducible, scenario };
    }

    // Nonpositive off-diagonals: zero row sums make it a Laplacian, otherwise
    // it is SDDM iff it is positive definite, i.e. every connected component
    // contains a strictly dominant row.
    let zero_rows = (0..n).all(|i| st.row_sum[i].abs() <= tol * st.abs_sum[i]);
    if zero_rows {
        return MatrixClass { kind: MatrixKind::Laplacian, irreducible, scenario: Scenario::ExactlyDominant };
    }

    let mut strict = vec![false; ncomp];
    for i in 0..n {
        if st.margin[i] > tol * st.abs_sum[i] {
            strict[labels[i]] = true;
        }
    }
    if strict.iter().all(|&s| s) {
        MatrixClass { kind: MatrixKind::Sddm, irreducible, scenario: Scenario::StrictlySomewhere }
    } else {
        // SDD but singular (some component is a Laplacian block): not usable.
        MatrixClass { kind: MatrixKind::NotSdd, irreducible, scenario }
    }
}

/// Sign-partition of a symmetric matrix: diagonal part, negative off-diagonal
/// part and positive off-diagonal part; their entrywise sum is the input.
#[derive(Debug, Clone)]
pub struct SplitParts {
    pub diag: SparseSym,
    pub negative: SparseSym,
    pub positive: SparseSym,
}

pub fn split_parts(a: &SparseSym) -> SplitParts {
    let n = a.n();
    let mut d = Vec::new();
    let mut neg = Vec::new();
    let mut pos = Vec::new();
    for (i, j, v) in a.entries() {
        if i == j {
            d.push((i, j, v));
        } else if v < 0.0 {
            neg.push((i, j, v));
        } else {
            pos.push((i, j, v));
        }
    }
    SplitParts {
        diag: SparseSym::from_entries(n, d),
        negative: SparseSym::from_entries(n, neg),
        positive: SparseSym::from_entries(n, pos),
    }
}

/// Extend an SDDM matrix to the (n+1) x (n+1) Laplacian
/// [[A, -A1], [-1ᵀA, 1ᵀA1]]. Border entries for rows balanced within the
/// classification tolerance are dropped: assembled matrices carry rounding in
/// their row sums, and a -1e-16 row sum would otherwise plant a positive
/// off-diagonal in the extension. Strictly dominant rows keep the exact
/// negated stored-order row sum, so their extended rows sum to exactly zero.
pub fn extend_sddm(a: &SparseSym) -> Result<SparseSym> {
    let class = classify(a, DEFAULT_CLASSIFY_TOL);
    if class.kind != MatrixKind::Sddm {
        return Err(Error::WrongClass { expected: "SDDM", got: class.kind.as_str().into() });
    }
    let n = a.n();
    let row_sums = a.row_sums();
    let mut row_abs = vec![0.0; n];
    for (j, abs) in row_abs.iter_mut().enumerate() {
        *abs = a.col(j).map(|(_, v)| v.abs()).sum();
    }
    let mut entries: Vec<(usize, usize, f64)> = a.entries().collect();
    let mut corner = 0.0;
    for (i, &rs) in row_sums.iter().enumerate() {
        if rs <= DEFAULT_CLASSIFY_TOL * row_abs[i] {
            continue;
        }
        corner += rs;
        entries.push((i, n, -rs));
        entries.push((n, i, -rs));
    }
    if corner != 0.0 {
        entries.push((n, n, corner));
    }
    Ok(SparseSym::from_entries(n + 1, entries))
}

/// Double an SDD matrix with positive off-diagonals into the 2n x 2n
/// [[Ad+An, -Ap], [-Ap, Ad+An]], which has only nonpositive off-diagonals.
pub fn double_sdd(a: &SparseSym) -> Result<SparseSym> {
    let class = classify(a, DEFAULT_CLASSIFY_TOL);
    if class.kind != MatrixKind::SddMixed {
        return Err(Error::WrongClass { expected: "SDD with positive off-diagonals", got: class.kind.as_str().into() });
    }
    let n = a.n();
    let mut entries = Vec::with_capacity(2 * a.nnz());
    for (i, j, v) in a.entries() {
        if i == j {
            entries.push((i, i, v));
            entries.push((i + n, i + n, v));
        } else if v < 0.0 {
            entries.push((i, j, v));
            entries.push((i + n, j + n, v));
        } else {
            entries.push((i, j + n, -v));
            entries.push((j + n, i, -v));
        }
    }
    Ok(SparseSym::from_entries(2 * n, entries))
}

/// Outcome of the sign-flip shortcut.
#[derive(Debug, Clone)]
pub enum SignFlip {
    /// The doubled graph splits in two: `matrix` is D A D with D = +/-1
    /// diagonal, -1 exactly on `flipped`; flip those entries of b and x too.
    Reduced { matrix: SparseSym, flipped: Vec<usize> },
    /// The doubled graph stays connected (an odd-signed cycle exists).
    NotReducible,
}

/// Check whether the doubled system of an SDD-mixed matrix decouples into two
/// components, and if so return the sign-flipped matrix. Walks the original
/// graph assigning a parity per vertex (positive edges flip parity); a parity
/// conflict means the doubled graph is connected.
pub fn sign_flip_reduction(a: &SparseSym) -> Result<SignFlip> {
    let class = classify(a, DEFAULT_CLASSIFY_TOL);
    if class.kind != MatrixKind::SddMixed {
        return Err(Error::WrongClass { expected: "SDD with positive off-diagonals", got: class.kind.as_str().into() });
    }
    let n = a.n();
    let mut parity: Vec<Option<bool>> = vec![None; n];
    let mut doubled_components = 0usize;
    let mut stack = Vec::new();
    for start in 0..n {
        if parity[start].is_some() {
            continue;
        }
        parity[start] = Some(false);
        stack.push(start);
        let mut balanced = true;
        while let Some(u) = stack.pop() {
            let pu = parity[u].unwrap();
            for (v, w) in a.col(u) {
                if v == u {
                    continue;
                }
                let expected = pu ^ (w > 0.0);
                match parity[v] {
                    None => {
                        parity[v] = Some(expected);
                        stack.push(v);
                    }
                    Some(pv) if pv != expected => balanced = false,
                    _ => {}
                }
            }
        }
        doubled_components += if balanced { 2 } else { 1 };
    }

    if doubled_components != 2 {
        return Ok(SignFlip::NotReducible);
    }

    let flipped: Vec<usize> = (0..n).filter(|&i| parity[i] == Some(true)).collect();
    let entries = a
        .entries()
        .map(|(i, j, v)| {
            let flip = parity[i] != parity[j];
            (i, j, if flip { -v } else { v })
        })
        .collect();
    Ok(SignFlip::Reduced { matrix: SparseSym::from_entries(n, entries), flipped })
}

/// Raise every diagonal below its absolute off-diagonal row sum up to that
/// sum, making the matrix SDD ("black-box" handling of almost-SDD inputs).
pub fn compensate(a: &SparseSym) -> SparseSym {
    let n = a.n();
    let mut off_abs = vec![0.0; n];
    let mut diag = vec![0.0; n];
    for (i, j, v) in a.entries() {
        if i == j {
            diag[j] = v;
        } else {
            off_abs[j] += v.abs();
        }
    }
    let mut entries: Vec<(usize, usize, f64)> = a.entries().filter(|&(i, j, _)| i != j).collect();
    for i in 0..n {
        let d = if diag[i] < off_abs[i] { off_abs[i] } else { diag[i] };
        if d != 0.0 {
            entries.push((i, i, d));
        }
    }
    SparseSym::from_entries(n, entries)
}

/// Drop positive off-diagonal entries that are small relative to the largest
/// off-diagonal magnitude of either incident row.
pub fn drop_positive(a: &SparseSym, rel: f64) -> SparseSym {
    let n = a.n();
    let mut row_max = vec![0.0_f64; n];
    for (i, j, v) in a.entries() {
        if i != j {
            row_max[j] = row_max[j].max(v.abs());
        }
    }
    let entries = a
        .entries()
        .filter(|&(i, j, v)| !(i != j && v > 0.0 && v <= rel * row_max[i].max(row_max[j])))
        .collect();
    SparseSym::from_entries(n, entries)
}
