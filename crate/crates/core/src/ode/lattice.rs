use nalgebra::{DMatrix, DVector};

use super::SolutionL;
use crate::error::{EcsError, Result};
use crate::polynomial::{isolate_roots, GlzPolynomial, IntMatrix};
use crate::report::{Check, Report};
use crate::spectral::{multipliers, DiagonalCurve};

pub const MAX_CONDITION: f64 = 1e12;

/// A `T`-invariant lattice in 𝓛. Row `i` of `S` is `(1, λᵢ, …, λᵢ^{m−1})`,
/// a left eigenvector of the companion matrix, so `diag(λ) S = S C` and the
/// columns of `S` span a lattice on which `T` acts by `C`.
#[derive(Debug, Clone)]
pub struct LatticeBasis {
    s: DMatrix<f64>,
    s_inv: DMatrix<f64>,
    companion: IntMatrix,
    polynomial: GlzPolynomial,
    multipliers: Vec<f64>,
    condition: f64,
    t_error: f64,
}

fn condition_number(s: &DMatrix<f64>) -> f64 {
    let sv = s.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

pub fn lattice_for(b: &DiagonalCurve, p: &GlzPolynomial) -> Result<LatticeBasis> {
    lattice_from_multipliers(&multipliers(b), p)
}

/// Same as [`lattice_for`], from channel multipliers directly.
pub fn lattice_from_multipliers(lambda: &[f64], p: &GlzPolynomial) -> Result<LatticeBasis> {
    let m = p.degree();
    if lambda.len() != m {
        return Err(EcsError::Consistency(format!(
            "{} multipliers for a degree {m} polynomial",
            lambda.len()
        )));
    }
    let roots = isolate_roots(p)?.spectrum;
    let mut sorted = lambda.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mismatch = sorted
        .iter()
        .zip(roots.values())
        .fold(0.0f64, |acc, (x, r)| acc.max((x - r).abs()));
    if mismatch > 1e-8 {
        return Err(EcsError::Consistency(format!(
            "multipliers differ from the roots of {p} by {mismatch:e}"
        )));
    }
    let s = DMatrix::from_fn(m, m, |i, j| lambda[i].powi(j as i32));
    let condition = condition_number(&s);
    if !(condition < MAX_CONDITION) {
        return Err(EcsError::Conditioning { condition });
    }
    let s_inv = s
        .clone()
        .try_inverse()
        .ok_or(EcsError::Conditioning { condition })?;
    let companion = IntMatrix::companion(p);
    let t_lattice = &s_inv * DMatrix::from_diagonal(&DVector::from_column_slice(lambda)) * &s;
    let t_error = (&t_lattice - companion.to_f64()).amax();
    if t_error > 1e-7 {
        return Err(EcsError::Consistency(format!(
            "T in lattice coordinates is {t_error:e} away from the companion matrix"
        )));
    }
    Ok(LatticeBasis {
        s,
        s_inv,
        companion,
        polynomial: p.clone(),
        multipliers: lambda.to_vec(),
        condition,
        t_error,
    })
}

impl LatticeBasis {
    pub fn dim(&self) -> usize {
        self.multipliers.len()
    }

    pub fn change_of_basis(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn companion(&self) -> &IntMatrix {
        &self.companion
    }

    pub fn polynomial(&self) -> &GlzPolynomial {
        &self.polynomial
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// `max |S⁻¹ diag(λ) S − C|`.
    pub fn t_matrix_error(&self) -> f64 {
        self.t_error
    }

    /// `T` in lattice coordinates, in floating point.
    pub fn t_matrix(&self) -> DMatrix<f64> {
        &self.s_inv * DMatrix::from_diagonal(&DVector::from_column_slice(&self.multipliers)) * &self.s
    }

    /// Generators of the lattice as elements of 𝓛.
    pub fn generators(&self) -> Vec<SolutionL> {
        (0..self.dim())
            .map(|j| SolutionL {
                pos: self.s.column(j).iter().copied().collect(),
            })
            .collect()
    }

    /// Channel coordinates `S z` of the lattice vector `z`.
    pub fn channel_coords(&self, z: &[i64]) -> Vec<f64> {
        let zf = DVector::from_iterator(z.len(), z.iter().map(|&x| x as f64));
        (&self.s * zf).iter().copied().collect()
    }

    pub fn element(&self, z: &[i64]) -> SolutionL {
        SolutionL {
            pos: self.channel_coords(z),
        }
    }

    /// Real lattice coordinates `S⁻¹ y`.
    pub fn lattice_coords(&self, y: &[f64]) -> Vec<f64> {
        (&self.s_inv * DVector::from_column_slice(y)).iter().copied().collect()
    }

    /// Coefficients of `det(T|𝓛 − x) = Π(λᵢ − x)`, constant-first.
    pub fn char_poly_from_multipliers(&self) -> Vec<f64> {
        let mut c = vec![1.0];
        for &l in &self.multipliers {
            let mut next = vec![0.0; c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k] += l * ck;
                next[k + 1] -= ck;
            }
            c = next;
        }
        c
    }

    /// `max |coefficient − P coefficient|`.
    pub fn char_poly_error(&self) -> f64 {
        self.char_poly_from_multipliers()
            .iter()
            .zip(self.polynomial.coefficients())
            .fold(0.0, |m, (x, &c)| m.max((x - c as f64).abs()))
    }
}

/// `‖Tᵏ − Id‖∞ > 1/2` in lattice coordinates for `1 ≤ |k| ≤ kmax`.
pub fn check_t_nontrivial(lattice: &LatticeBasis, kmax: u32) -> Report {
    check_matrix_nontrivial(lattice.companion(), Some(lattice.multipliers()), kmax)
}

pub fn check_matrix_nontrivial(t: &IntMatrix, eigen: Option<&[f64]>, kmax: u32) -> Report {
    let mut report = Report::new();
    let inverse = t.unimodular_inverse();
    if inverse.is_none() {
        report.note("matrix is not unimodular; negative powers skipped");
    }
    let mut worst = f64::INFINITY;
    for k in 1..=kmax {
        for (sign, base) in [(1i64, Some(t)), (-1, inverse.as_ref())] {
            let Some(base) = base else { continue };
            // On overflow the entries exceed i64, so the power is not the identity.
            let distance = base
                .checked_pow(k)
                .map_or(f64::MAX, |pw| pw.distance_from_identity() as f64);
            worst = worst.min(distance);
            report.push(Check::above(format!("|T^{} - Id|", sign * k as i64), distance, 0.5));
        }
    }
    if let Some(ev) = eigen {
        // λᵏ = 1 would need |λ| = 1; positive spectra away from 1 exclude it.
        let gap = ev.iter().fold(f64::INFINITY, |m, l| m.min((l.ln()).abs()));
        report.push(Check::above("min |log lambda| (no root of unity)", gap, 0.0));
    }
    report.note(format!("smallest distance from identity {worst}"));
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::{cubic_family, quadratic_family};

    #[test]
    fn golden_quadratic_lattice() {
        let p = quadratic_family(-3).unwrap();
        let s5 = 5f64.sqrt();
        let lambda = [(3.0 - s5) / 2.0, (3.0 + s5) / 2.0];
        let c: Vec<f64> = lambda.iter().map(|l: &f64| -l.ln()).collect();
        let b = DiagonalCurve::constant(1.0, &c, 64).unwrap();
        let lat = lattice_for(&b, &p).unwrap();
        let t = lat.t_matrix();
        let expected = [[0.0, -1.0], [1.0, 3.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((t[(i, j)] - expected[i][j]).abs() < 1e-10);
            }
        }
        assert!(check_t_nontrivial(&lat, 10).passed());
    }

    #[test]
    fn eigen_coordinates_are_diagonal() {
        let lambda = [0.5, 2.0, 3.0];
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&lambda));
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(id.clone().try_inverse().unwrap() * &d * id, d);
    }

    #[test]
    fn cubic_lattice_recovers_companion() {
        let p = cubic_family(5, 6).unwrap();
        let roots = isolate_roots(&p).unwrap().spectrum;
        let lat = lattice_from_multipliers(roots.values(), &p).unwrap();
        assert!(lat.t_matrix_error() < 1e-8);
        assert!(lat.char_poly_error() < 1e-7);
        let y = lat.channel_coords(&[2, -1, 3]);
        let z = lat.lattice_coords(&y);
        for (a, b) in z.iter().zip([2.0, -1.0, 3.0]) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn mismatched_multipliers_rejected() {
        let p = cubic_family(5, 6).unwrap();
        assert!(matches!(
            lattice_from_multipliers(&[0.2, 1.5, 3.2], &p),
            Err(EcsError::Consistency(_))
        ));
    }

    #[test]
    fn identity_fails_nontriviality() {
        let r = check_matrix_nontrivial(&IntMatrix::identity(3), None, 5);
        assert!(!r.passed());
    }
}
