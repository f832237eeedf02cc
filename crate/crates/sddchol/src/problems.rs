//! Deterministic test-problem generators: the 7-point constant-coefficient
//! Poisson matrix on an n^3 grid with Dirichlet boundaries, and its
//! high-contrast variable-coefficient variant built from a smoothed,
//! quantized random field.
//!
//! Stencils are unscaled (no 1/h^2 factor): a positive constant scaling
//! changes neither the matrix class nor PCG iteration counts when the
//! preconditioner is built from the same matrix.

use crate::sampling::RngStream;
use crate::sparse::SparseSym;

/// Parameters for the variable-coefficient generator: `n` points per
/// dimension (an n^3 grid), contrast ratio `contrast` >= 1, and the field
/// seed. The smoothing width is fixed at 4 grid spacings.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub n: usize,
    pub contrast: f64,
    pub seed: u64,
}

impl GridSpec {
    pub fn new(n: usize, contrast: f64, seed: u64) -> Self {
        assert!(n >= 1, "grid must have at least one point per dimension");
        assert!(contrast >= 1.0, "contrast must be >= 1");
        Self { n, contrast, seed }
    }
}

/// How a face coefficient is derived from the two adjacent cell coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceAverage {
    Arithmetic,
    Harmonic,
}

#[inline]
fn idx(n: usize, x: usize, y: usize, z: usize) -> usize {
    x + n * (y + n * z)
}

/// Standard 7-point finite-difference Poisson matrix on an n^3 grid with
/// Dirichlet boundaries: diagonal 6, -1 between grid neighbors. SDDM (rows
/// next to the boundary are strictly dominant).
pub fn poisson7(n: usize) -> SparseSym {
    assert!(n >= 1);
    let total = n * n * n;
    let mut entries = Vec::with_capacity(7 * total);
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let p = idx(n, x, y, z);
                entries.push((p, p, 6.0));
                if x + 1 < n {
                    let q = idx(n, x + 1, y, z);
                    entries.push((p, q, -1.0));
                    entries.push((q, p, -1.0));
                }
                if y + 1 < n {
                    let q = idx(n, x, y + 1, z);
                    entries.push((p, q, -1.0));
                    entries.push((q, p, -1.0));
                }
                if z + 1 < n {
                    let q = idx(n, x, y, z + 1);
                    entries.push((p, q, -1.0));
                    entries.push((q, p, -1.0));
                }
            }
        }
    }
    SparseSym::from_entries(total, entries)
}

const BLUR_SIGMA: f64 = 4.0; // grid spacings
const BLUR_RADIUS: usize = 12; // 3 sigma

/// Smoothed, quantized random coefficient per grid cell: seeded uniforms,
/// median threshold, separable Gaussian blur of sigma = 4h truncated at
/// 3 sigma (renormalized at edges), then quantized to contrast^(+/-1/2).
pub fn contrast_field(spec: &GridSpec) -> Vec<f64> {
    let n = spec.n;
    let total = n * n * n;
    let mut rng = RngStream::new(spec.seed);
    let mut field: Vec<f64> = (0..total).map(|_| rng.uniform()).collect();

    let mut sorted = field.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    let median = if total % 2 == 1 {
        sorted[total / 2]
    } else {
        0.5 * (sorted[total / 2 - 1] + sorted[total / 2])
    };

    let kernel: Vec<f64> = (0..=BLUR_RADIUS)
        .map(|d| (-((d * d) as f64) / (2.0 * BLUR_SIGMA * BLUR_SIGMA)).exp())
        .collect();

    // Separable 1-D convolutions along x, y, z with renormalized edges.
    let strides = [1usize, n, n * n];
    let mut scratch = vec![0.0; total];
    for &stride in &strides {
        for base in 0..total {
            // coordinate of `base` along this axis
            let coord = (base / stride) % n;
            let mut acc = 0.0;
            let mut wsum = 0.0;
            let lo = coord.saturating_sub(BLUR_RADIUS);
            let hi = (coord + BLUR_RADIUS).min(n - 1);
            for c in lo..=hi {
                let w = kernel[c.abs_diff(coord)];
                let pos = (base as isize + (c as isize - coord as isize) * stride as isize) as usize;
                acc += w * field[pos];
                wsum += w;
            }
            scratch[base] = acc / wsum;
        }
        std::mem::swap(&mut field, &mut scratch);
    }

    let lo = spec.contrast.powf(-0.5);
    let hi = spec.contrast.powf(0.5);
    field.iter().map(|&v| if v <= median { lo } else { hi }).collect()
}

/// 7-point stencil with per-face coefficients from `contrast_field` using
/// arithmetic face averaging; boundary faces use the cell's own coefficient.
/// Equals `poisson7(n)` exactly when contrast = 1.
pub fn poisson_var(spec: &GridSpec) -> SparseSym {
    poisson_var_with(spec, FaceAverage::Arithmetic)
}

pub fn poisson_var_with(spec: &GridSpec, avg: FaceAverage) -> SparseSym {
    let n = spec.n;
    let total = n * n * n;
    let field = contrast_field(spec);
    let face = |a: f64, b: f64| match avg {
        FaceAverage::Arithmetic => 0.5 * (a + b),
        FaceAverage::Harmonic => 2.0 * a * b / (a + b),
    };

    let mut diag = vec![0.0; total];
    let mut entries = Vec::with_capacity(7 * total);
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let p = idx(n, x, y, z);
                let ap = field[p];
                let neighbors = [
                    (x + 1 < n).then(|| idx(n, x + 1, y, z)),
                    (y + 1 < n).then(|| idx(n, x, y + 1, z)),
                    (z + 1 < n).then(|| idx(n, x, y, z + 1)),
                ];
                for q in neighbors.into_iter().flatten() {
                    let w = face(ap, field[q]);
                    entries.push((p, q, -w));
                    entries.push((q, p, -w));
                    diag[p] += w;
                    diag[q] += w;
                }
                // Dirichlet boundary faces contribute the cell coefficient.
                let boundary_faces = [x == 0, x + 1 == n, y == 0, y + 1 == n, z == 0, z + 1 == n]
                    .iter()
                    .filter(|&&b| b)
                    .count();
                diag[p] += boundary_faces as f64 * ap;
            }
        }
    }
    for (p, d) in diag.into_iter().enumerate() {
        entries.push((p, p, d));
    }
    SparseSym::from_entries(total, entries)
}
