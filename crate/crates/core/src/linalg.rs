//! Dense complex linear algebra for non-Hermitian Hamiltonians: eigendecomposition
//! with defectiveness detection, the biorthogonal metric, spectral evolution and a
//! Padé matrix exponential used as an oracle and as the propagator for defective
//! spectra.

use std::cmp::Ordering;

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use ndarray_linalg::{Eig, Inverse};
use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexMatrix = Array2<c64>;
pub type StateVector = Array1<c64>;

const I: c64 = c64::new(0.0, 1.0);

/// Thresholds that decide when a computed eigenbasis is trusted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenTolerances {
    /// `κ₁(P)` above which the spectrum is flagged defective.
    pub condition_limit: f64,
    /// `‖HP − PΛ‖_F/‖H‖_F` above which the spectrum is flagged defective.
    pub residual_limit: f64,
    /// Relative gap under which eigenvalues are treated as one degenerate cluster.
    pub degeneracy: f64,
}

impl Default for EigenTolerances {
    fn default() -> Self {
        Self {
            condition_limit: 1e10,
            residual_limit: 1e-8,
            degeneracy: 1e-10,
        }
    }
}

/// Eigenvalues (ascending real part, then imaginary part) with unit-norm right
/// eigenvectors as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Array1<c64>,
    pub vectors: ComplexMatrix,
    pub inverse: Option<ComplexMatrix>,
    pub defective: bool,
    /// 1-norm condition number of `vectors`.
    pub condition: f64,
    pub residual: f64,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_imag(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn eigenvector(&self, k: usize) -> ArrayView1<'_, c64> {
        self.vectors.column(k)
    }

    /// `P⁻¹`, or a [`Error::Defective`] when the eigenbasis is not trusted.
    pub fn inverse(&self) -> Result<&ComplexMatrix> {
        match (&self.inverse, self.defective) {
            (Some(inv), false) => Ok(inv),
            _ => Err(Error::Defective {
                condition: self.condition,
                residual: self.residual,
            }),
        }
    }
}

/// Hermitian positive-definite metric `Θ` with `H†Θ = ΘH`.
#[derive(Clone, Debug)]
pub struct Metric(ComplexMatrix);

impl Metric {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

pub fn conj_transpose(m: &ComplexMatrix) -> ComplexMatrix {
    m.t().mapv(|z| z.conj())
}

pub fn frobenius(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn norm_one(m: &ComplexMatrix) -> f64 {
    m.axis_iter(Axis(1))
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn vector_norm(v: &ArrayView1<'_, c64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `u†v`.
pub fn dot_conj(u: &ArrayView1<'_, c64>, v: &ArrayView1<'_, c64>) -> c64 {
    u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum()
}

fn check_square(m: &ComplexMatrix) -> Result<usize> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.ncols(),
        });
    }
    Ok(n)
}

pub fn eig_complex(m: &ComplexMatrix) -> Result<Spectrum> {
    eig_complex_with(m, &EigenTolerances::default())
}

/// Full non-Hermitian eigendecomposition.
///
/// Vectors inside a cluster of (numerically) degenerate eigenvalues are
/// orthonormalised, which fixes the otherwise arbitrary basis of each eigenspace
/// and makes the metric `(P⁻¹)†P⁻¹` independent of the solver's choice. For a
/// Hermitian input this yields a unitary `P`.
pub fn eig_complex_with(m: &ComplexMatrix, tol: &EigenTolerances) -> Result<Spectrum> {
    let n = check_square(m)?;
    if n == 0 {
        return Err(Error::param("matrix", "empty matrix"));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::param("matrix", "non-finite entries"));
    }
    let (values, vectors) = m
        .eig()
        .map_err(|e| Error::NonConvergence(format!("zgeev on {n}x{n}: {e}")))?;

    let scale = norm_one(m).max(f64::MIN_POSITIVE);
    let order = spectral_order(&values, tol.degeneracy * scale.max(1.0));
    let eigenvalues: Array1<c64> = order.iter().map(|&k| values[k]).collect();
    let mut p = Array2::<c64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        let col = vectors.column(src);
        let norm = vector_norm(&col);
        p.column_mut(dst).assign(&col.mapv(|z| z / norm));
    }

    let clusters = degenerate_clusters(&eigenvalues, tol.degeneracy * scale.max(1.0));
    for range in clusters {
        orthonormalize_cluster(m, &eigenvalues, &mut p, range, tol.residual_limit * scale.max(1.0));
    }

    let h_norm = frobenius(m);
    let lambda_p = &p * &eigenvalues.view().insert_axis(Axis(0));
    let residual = frobenius(&(m.dot(&p) - lambda_p)) / if h_norm > 0.0 { h_norm } else { 1.0 };

    let inverse = p
        .inv()
        .ok()
        .filter(|inv| inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
    let condition = match &inverse {
        Some(inv) => norm_one(&p) * norm_one(inv),
        None => f64::INFINITY,
    };
    let defective = inverse.is_none() || condition > tol.condition_limit || residual > tol.residual_limit;
    Ok(Spectrum {
        eigenvalues,
        vectors: p,
        inverse,
        defective,
        condition,
        residual,
    })
}

/// Ascending real part; runs of real parts closer than `tie` are ordered by imaginary part.
fn spectral_order(values: &Array1<c64>, tie: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .re
            .partial_cmp(&values[b].re)
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]].re - values[order[end - 1]].re <= tie {
            end += 1;
        }
        order[start..end].sort_by(|&a, &b| {
            values[a]
                .im
                .partial_cmp(&values[b].im)
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        start = end;
    }
    order
}

fn degenerate_clusters(values: &Array1<c64>, gap: f64) -> Vec<std::ops::Range<usize>> {
    let mut clusters = Vec::new();
    let mut start = 0;
    for k in 1..=values.len() {
        if k == values.len() || (values[k] - values[k - 1]).norm() > gap {
            if k - start > 1 {
                clusters.push(start..k);
            }
            start = k;
        }
    }
    clusters
}

/// Replaces the cluster's columns by an orthonormal basis of their span when the
/// span is numerically full rank and still an invariant subspace.
fn orthonormalize_cluster(
    h: &ComplexMatrix,
    values: &Array1<c64>,
    p: &mut ComplexMatrix,
    range: std::ops::Range<usize>,
    residual_limit: f64,
) {
    let block = p.slice(s![.., range.clone()]).to_owned();
    let mut q = block.clone();
    let k = q.ncols();
    for j in 0..k {
        // Two passes of modified Gram-Schmidt.
        for _ in 0..2 {
            for i in 0..j {
                let qi = q.column(i).to_owned();
                let proj = dot_conj(&qi.view(), &q.column(j));
                let mut qj = q.column_mut(j);
                qj.zip_mut_with(&qi, |a, b| *a -= proj * b);
            }
        }
        let norm = vector_norm(&q.column(j));
        if norm < 1e-6 {
            return;
        }
        q.column_mut(j).mapv_inplace(|z| z / norm);
    }
    let mean = values.slice(s![range.clone()]).sum() / k as f64;
    let res = frobenius(&(h.dot(&q) - q.mapv(|z| z * mean)));
    if res <= residual_limit {
        p.slice_mut(s![.., range]).assign(&q);
    }
}

/// `Θ = (P⁻¹)†P⁻¹`, symmetrised.
pub fn biortho_metric(spec: &Spectrum) -> Result<Metric> {
    let inv = spec.inverse()?;
    let theta = conj_transpose(inv).dot(inv);
    let sym = (&theta + &conj_transpose(&theta)).mapv(|z| z * 0.5);
    Ok(Metric(sym))
}

/// `u†Θv`.
pub fn metric_inner(theta: &Metric, u: &StateVector, v: &StateVector) -> Result<c64> {
    let n = theta.dim();
    for len in [u.len(), v.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: len,
            });
        }
    }
    Ok(dot_conj(&u.view(), &theta.0.dot(v).view()))
}

/// `P·diag(e^{−iλt})·P⁻¹·ψ₀`, unnormalised.
pub fn evolve(spec: &Spectrum, psi0: &StateVector, t: f64) -> Result<StateVector> {
    let inv = spec.inverse()?;
    if psi0.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: psi0.len(),
        });
    }
    if t == 0.0 {
        return Ok(psi0.clone());
    }
    let mut coeffs = inv.dot(psi0);
    coeffs
        .iter_mut()
        .zip(spec.eigenvalues.iter())
        .for_each(|(c, lambda)| *c *= (-I * lambda * t).exp());
    Ok(spec.vectors.dot(&coeffs))
}

// Padé degrees and the 1-norm bounds below which each reaches unit roundoff.
const PADE_THETA: [(usize, f64); 5] = [
    (3, 1.495585217958292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
    (13, 5.371920351148152e0),
];

fn pade_coefficients(m: usize) -> &'static [f64] {
    match m {
        3 => &[120.0, 60.0, 12.0, 1.0],
        5 => &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0],
        7 => &[17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0],
        9 => &[
            17643225600.0,
            8821612800.0,
            2075673600.0,
            302702400.0,
            30270240.0,
            2162160.0,
            110880.0,
            3960.0,
            90.0,
            1.0,
        ],
        _ => &[
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ],
    }
}

/// `exp(−iMt)` by scaling and squaring with a diagonal Padé approximant.
/// Valid for defective `M`.
pub fn matexp_reference(m: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let n = check_square(m)?;
    let a = m.mapv(|z| -I * z * t);
    let norm = norm_one(&a);
    if !norm.is_finite() || norm > 1e300 {
        return Err(Error::Overflow { norm });
    }
    let eye = Array2::<c64>::eye(n);
    if norm == 0.0 {
        return Ok(eye);
    }

    let (degree, squarings) = match PADE_THETA.iter().find(|(_, theta)| norm <= *theta) {
        Some(&(m, _)) => (m, 0),
        None => {
            let theta13 = PADE_THETA[4].1;
            (13, (norm / theta13).log2().ceil().max(0.0) as i32)
        }
    };
    let a = if squarings > 0 {
        a.mapv(|z| z / 2f64.powi(squarings))
    } else {
        a
    };
    let b = pade_coefficients(degree);
    let a2 = a.dot(&a);
    let (u, v) = if degree < 13 {
        let mut odd = eye.mapv(|z| z * b[1]);
        let mut even = eye.mapv(|z| z * b[0]);
        let mut power = eye.clone();
        for k in 1..=degree / 2 {
            power = power.dot(&a2);
            odd.scaled_add(c64::new(b[2 * k + 1], 0.0), &power);
            even.scaled_add(c64::new(b[2 * k], 0.0), &power);
        }
        (a.dot(&odd), even)
    } else {
        let a4 = a2.dot(&a2);
        let a6 = a4.dot(&a2);
        let comb = |x: &[f64]| -> ComplexMatrix {
            // x[0]·A6 + x[1]·A4 + x[2]·A2 (+ x[3]·I)
            let mut out = a6.mapv(|z| z * x[0]);
            out.scaled_add(c64::new(x[1], 0.0), &a4);
            out.scaled_add(c64::new(x[2], 0.0), &a2);
            if let Some(&c) = x.get(3) {
                out.scaled_add(c64::new(c, 0.0), &eye);
            }
            out
        };
        let u_inner = a6.dot(&comb(&[b[13], b[11], b[9]])) + comb(&[b[7], b[5], b[3], b[1]]);
        let v = a6.dot(&comb(&[b[12], b[10], b[8]])) + comb(&[b[6], b[4], b[2], b[0]]);
        (a.dot(&u_inner), v)
    };
    let denom = (&v - &u).inv()?;
    let mut r = denom.dot(&(&v + &u));
    for _ in 0..squarings {
        r = r.dot(&r);
    }
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Overflow { norm });
    }
    Ok(r)
}
