//! Compact matrix Lie groups SU(n), SO(n), Sp(n), their algebras, and the
//! normalized Cartan-Killing pairing.
//!
//! Everything is stored as a dense complex matrix. SO(n) lives inside the
//! complex matrices with (numerically) real entries, and Sp(n) is the
//! 2n×2n complex embedding of quaternionic matrices via ℍ ≅ ℂ ⊕ jℂ, so a
//! single matrix type covers all three families. The reduced trace of the
//! quaternionic family is the ordinary complex trace of the embedding.
//!
//! The normalized Cartan-Killing form is the basic inner product divided
//! by 4π; a coroot of a long root has basic length squared 2. Per family
//! this gives a scalar multiple of the (real part of the) trace form.

use crate::error::CoreError;
use crate::Result;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

/// Classical compact family tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Su,
    So,
    Sp,
}

/// A compact matrix group, its defining representation size, and the
/// coefficient of the trace form giving the normalized Cartan-Killing
/// pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub family: Family,
    pub n: usize,
}

impl GroupSpec {
    pub fn new(family: Family, n: usize) -> Result<Self> {
        let ok = match family {
            Family::Su => n >= 2,
            // so(4) is not simple and so(2) is abelian; the normalization
            // table only covers n = 3 and n >= 5.
            Family::So => n == 3 || n >= 5,
            Family::Sp => n >= 1,
        };
        if !ok {
            return Err(CoreError::invalid(format!(
                "unsupported group {:?}({n})",
                family
            )));
        }
        Ok(GroupSpec { family, n })
    }

    pub fn su(n: usize) -> Self {
        GroupSpec::new(Family::Su, n).unwrap()
    }

    pub fn so(n: usize) -> Self {
        GroupSpec::new(Family::So, n).unwrap()
    }

    pub fn sp(n: usize) -> Self {
        GroupSpec::new(Family::Sp, n).unwrap()
    }

    /// Size of the defining complex matrix representation.
    pub fn matrix_dim(&self) -> usize {
        match self.family {
            Family::Su | Family::So => self.n,
            Family::Sp => 2 * self.n,
        }
    }

    /// Scalar c with ⟨X,Y⟩ = c·Re tr(XY) (reduced trace for Sp via the
    /// complex embedding).
    pub fn killing_coefficient(&self) -> f64 {
        match self.family {
            Family::Su => -1.0 / (4.0 * PI),
            Family::So => {
                if self.n == 3 {
                    -1.0 / (16.0 * PI)
                } else {
                    -1.0 / (8.0 * PI)
                }
            }
            Family::Sp => -1.0 / (4.0 * PI),
        }
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.family {
            Family::Su => "su",
            Family::So => "so",
            Family::Sp => "sp",
        };
        write!(f, "{}({})", tag, self.n)
    }
}

/// Element of the Lie algebra 𝔤 in the defining representation.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    pub mat: DMatrix<Complex64>,
}

/// Element of the group G in the defining representation.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    pub mat: DMatrix<Complex64>,
}

impl AlgebraElement {
    pub fn zero(spec: &GroupSpec) -> Self {
        let d = spec.matrix_dim();
        AlgebraElement {
            mat: DMatrix::zeros(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn scale(&self, s: f64) -> Self {
        AlgebraElement {
            mat: &self.mat * Complex64::new(s, 0.0),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        AlgebraElement {
            mat: &self.mat + &other.mat,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        AlgebraElement {
            mat: &self.mat - &other.mat,
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn norm(&self) -> f64 {
        self.mat.norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl GroupElement {
    pub fn identity(spec: &GroupSpec) -> Self {
        let d = spec.matrix_dim();
        GroupElement {
            mat: DMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Inverse. Group elements stay unitary (to ~1e-12) in all three
    /// families' embeddings, so the conjugate transpose is used.
    pub fn inverse(&self) -> Self {
        GroupElement {
            mat: self.mat.adjoint(),
        }
    }

    pub fn multiply(&self, other: &Self) -> Self {
        GroupElement {
            mat: &self.mat * &other.mat,
        }
    }
}

/// ⟨X,Y⟩ = c·Re tr(XY) with the family coefficient c. Symmetric and
/// Ad-invariant.
pub fn killing_form(x: &AlgebraElement, y: &AlgebraElement, spec: &GroupSpec) -> Result<f64> {
    let d = spec.matrix_dim();
    if x.dim() != d || y.dim() != d {
        return Err(CoreError::dims(format!(
            "killing form on {} needs {d}x{d} matrices, got {} and {}",
            spec,
            x.dim(),
            y.dim()
        )));
    }
    let mut tr = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            tr += x.mat[(i, j)] * y.mat[(j, i)];
        }
    }
    Ok(spec.killing_coefficient() * tr.re)
}

/// \[X,Y\] = XY − YX.
pub fn bracket(x: &AlgebraElement, y: &AlgebraElement) -> AlgebraElement {
    assert_eq!(x.dim(), y.dim(), "bracket dimension mismatch");
    AlgebraElement {
        mat: &x.mat * &y.mat - &y.mat * &x.mat,
    }
}

/// Ad_g X = g X g⁻¹.
pub fn ad_action(g: &GroupElement, x: &AlgebraElement) -> AlgebraElement {
    assert_eq!(g.dim(), x.dim(), "Ad dimension mismatch");
    AlgebraElement {
        mat: &g.mat * &x.mat * g.mat.adjoint(),
    }
}

/// Matrix exponential by scaling-and-squaring with a Taylor kernel,
/// followed by re-projection onto the group.
pub fn exp(x: &AlgebraElement, spec: &GroupSpec) -> GroupElement {
    let m = exp_matrix(&x.mat);
    project_group_matrix(m, spec)
}

/// Raw matrix exponential (no group projection).
pub fn exp_matrix(x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let d = x.nrows();
    let norm = x.norm();
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let y = x * Complex64::new(1.0 / f64::powi(2.0, squarings as i32), 0.0);
    let mut term = DMatrix::<Complex64>::identity(d, d);
    let mut sum = DMatrix::<Complex64>::identity(d, d);
    for k in 1..=30 {
        term = &term * &y * Complex64::new(1.0 / k as f64, 0.0);
        sum += &term;
        if term.norm() < 1e-20 * sum.norm() {
            break;
        }
    }
    let mut result = sum;
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Left Maurer-Cartan form: the tangent g·X in left representation is
/// already the coefficient X.
pub fn maurer_cartan_left(_point: &GroupElement, v: &AlgebraElement) -> AlgebraElement {
    v.clone()
}

/// Right Maurer-Cartan form on the tangent g·X: Ad_g X.
pub fn maurer_cartan_right(point: &GroupElement, v: &AlgebraElement) -> AlgebraElement {
    ad_action(point, v)
}

fn quaternionic_j(d: usize) -> DMatrix<Complex64> {
    // d = 2n; J = [[0, -I],[I, 0]].
    let n = d / 2;
    let mut j = DMatrix::<Complex64>::zeros(d, d);
    for i in 0..n {
        j[(i, n + i)] = Complex64::new(-1.0, 0.0);
        j[(n + i, i)] = Complex64::new(1.0, 0.0);
    }
    j
}

/// τ(M) = J conj(M) J⁻¹ (= −J conj(M) J). Quaternionic matrices are the
/// fixed points of τ.
fn quaternionic_structure(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let d = m.nrows();
    let j = quaternionic_j(d);
    let conj = m.map(|z| z.conj());
    -(&j * conj * &j)
}

/// Orthogonal projection of an arbitrary matrix onto the Lie algebra of
/// the family.
pub fn project_algebra(m: &DMatrix<Complex64>, spec: &GroupSpec) -> AlgebraElement {
    let d = spec.matrix_dim();
    assert_eq!(m.nrows(), d, "algebra projection dimension mismatch");
    let out = match spec.family {
        Family::Su => {
            let mut a = (m - m.adjoint()) * Complex64::new(0.5, 0.0);
            let tr = a.diagonal().sum() / Complex64::new(d as f64, 0.0);
            for i in 0..d {
                a[(i, i)] -= tr;
            }
            a
        }
        Family::So => {
            let re = m.map(|z| Complex64::new(z.re, 0.0));
            (&re - re.transpose()) * Complex64::new(0.5, 0.0)
        }
        Family::Sp => {
            let a = (m - m.adjoint()) * Complex64::new(0.5, 0.0);
            (&a + quaternionic_structure(&a)) * Complex64::new(0.5, 0.0)
        }
    };
    AlgebraElement { mat: out }
}

/// Distance from the family's algebra (max-abs of the projection defect).
pub fn algebra_defect(x: &AlgebraElement, spec: &GroupSpec) -> f64 {
    let p = project_algebra(&x.mat, spec);
    (&x.mat - &p.mat).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Polar re-projection onto the group: Newton iteration for the unitary
/// factor, then family-specific cleanup (real part for SO, quaternionic
/// symmetrization for Sp, determinant phase for SU/SO).
pub fn project_group_matrix(m: DMatrix<Complex64>, spec: &GroupSpec) -> GroupElement {
    let d = spec.matrix_dim();
    assert_eq!(m.nrows(), d, "group projection dimension mismatch");
    let mut y = match spec.family {
        Family::So => m.map(|z| Complex64::new(z.re, 0.0)),
        Family::Sp => (&m + quaternionic_structure(&m)) * Complex64::new(0.5, 0.0),
        Family::Su => m,
    };
    for _ in 0..25 {
        let defect = (y.adjoint() * &y - DMatrix::<Complex64>::identity(d, d)).norm();
        if defect < 1e-14 {
            break;
        }
        let inv_h = y
            .adjoint()
            .try_inverse()
            .expect("polar projection of a singular matrix");
        y = (&y + inv_h) * Complex64::new(0.5, 0.0);
    }
    match spec.family {
        Family::Su | Family::So => {
            let det = y.determinant();
            let phase = det.arg();
            if phase.abs() > 1e-15 {
                let fix = Complex64::from_polar(1.0, -phase / d as f64);
                y *= fix;
            }
            if spec.family == Family::So {
                y = y.map(|z| Complex64::new(z.re, 0.0));
            }
        }
        Family::Sp => {}
    }
    GroupElement { mat: y }
}

/// Distance from the family's group constraints.
pub fn group_defect(g: &GroupElement, spec: &GroupSpec) -> f64 {
    let d = spec.matrix_dim();
    let unit = (g.mat.adjoint() * &g.mat - DMatrix::<Complex64>::identity(d, d)).norm();
    let extra = match spec.family {
        Family::Su => (g.mat.determinant() - Complex64::new(1.0, 0.0)).norm(),
        Family::So => {
            let imag = g.mat.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            let det = (g.mat.determinant() - Complex64::new(1.0, 0.0)).norm();
            imag.max(det)
        }
        Family::Sp => (&g.mat - quaternionic_structure(&g.mat)).norm(),
    };
    unit.max(extra)
}

/// Gaussian random algebra element (entrywise normal, then projected).
pub fn random_algebra<R: Rng>(spec: &GroupSpec, scale: f64, rng: &mut R) -> AlgebraElement {
    let d = spec.matrix_dim();
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            m[(i, j)] = Complex64::new(re, im);
        }
    }
    project_algebra(&m, spec).scale(scale)
}

/// Random group element exp of a random algebra element.
pub fn random_group<R: Rng>(spec: &GroupSpec, scale: f64, rng: &mut R) -> GroupElement {
    let x = random_algebra(spec, scale, rng);
    exp(&x, spec)
}

/// The su(2) basis σ̂_i = −(i/2)σ_i with \[σ̂₁,σ̂₂\] = σ̂₃ (cyclic).
pub fn su2_basis() -> [AlgebraElement; 3] {
    let z = Complex64::new(0.0, 0.0);
    let mh = Complex64::new(0.0, -0.5);
    let h = Complex64::new(0.5, 0.0);
    let s1 = DMatrix::from_row_slice(2, 2, &[z, mh, mh, z]);
    let s2 = DMatrix::from_row_slice(2, 2, &[z, -h, h, z]);
    let s3 = DMatrix::from_row_slice(2, 2, &[mh, z, z, -mh]);
    [
        AlgebraElement { mat: s1 },
        AlgebraElement { mat: s2 },
        AlgebraElement { mat: s3 },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag_i() -> AlgebraElement {
        let mut m = DMatrix::<Complex64>::zeros(2, 2);
        m[(0, 0)] = Complex64::new(0.0, 1.0);
        m[(1, 1)] = Complex64::new(0.0, -1.0);
        AlgebraElement { mat: m }
    }

    #[test]
    fn killing_su2_coroot_normalization() {
        let spec = GroupSpec::su(2);
        let x = diag_i();
        let v = killing_form(&x, &x, &spec).unwrap();
        // −tr(X²)/4π = 2/4π = 1/2π
        assert_abs_diff_eq!(v, 1.0 / (2.0 * PI), epsilon = 1e-14);
        // basic inner product: 4π⟨X,X⟩ = 2
        assert_abs_diff_eq!(4.0 * PI * v, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn killing_zero_argument() {
        let spec = GroupSpec::su(3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_algebra(&spec, 1.0, &mut rng);
        let z = AlgebraElement::zero(&spec);
        assert_eq!(killing_form(&x, &z, &spec).unwrap(), 0.0);
    }

    #[test]
    fn killing_dimension_mismatch() {
        let spec = GroupSpec::su(3);
        let x = diag_i();
        assert!(killing_form(&x, &x, &spec).is_err());
    }

    #[test]
    fn killing_coefficients_table() {
        assert_abs_diff_eq!(GroupSpec::su(2).killing_coefficient(), -1.0 / (4.0 * PI));
        assert_abs_diff_eq!(GroupSpec::so(3).killing_coefficient(), -1.0 / (16.0 * PI));
        assert_abs_diff_eq!(GroupSpec::so(5).killing_coefficient(), -1.0 / (8.0 * PI));
        assert_abs_diff_eq!(GroupSpec::sp(1).killing_coefficient(), -1.0 / (4.0 * PI));
        assert!(GroupSpec::new(Family::So, 4).is_err());
    }

    #[test]
    fn bracket_antisymmetry_and_jacobi() {
        for spec in [GroupSpec::su(2), GroupSpec::su(3), GroupSpec::so(5), GroupSpec::sp(1)] {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            for _ in 0..8 {
                let x = random_algebra(&spec, 1.0, &mut rng);
                let y = random_algebra(&spec, 1.0, &mut rng);
                let z = random_algebra(&spec, 1.0, &mut rng);
                assert!(bracket(&x, &x).max_abs() <= 1e-12);
                let jac = bracket(&bracket(&x, &y), &z)
                    .add(&bracket(&bracket(&y, &z), &x))
                    .add(&bracket(&bracket(&z, &x), &y));
                assert!(jac.max_abs() <= 1e-12 * (1.0 + x.norm() * y.norm() * z.norm()));
            }
        }
    }

    #[test]
    fn ad_invariance_of_killing() {
        for spec in [GroupSpec::su(2), GroupSpec::su(3), GroupSpec::so(3), GroupSpec::so(5), GroupSpec::sp(1)] {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for _ in 0..6 {
                let x = random_algebra(&spec, 1.0, &mut rng);
                let y = random_algebra(&spec, 1.0, &mut rng);
                let z = random_algebra(&spec, 1.0, &mut rng);
                let g = random_group(&spec, 0.7, &mut rng);
                // infinitesimal invariance
                let lhs = killing_form(&bracket(&x, &y), &z, &spec).unwrap()
                    + killing_form(&y, &bracket(&x, &z), &spec).unwrap();
                assert!(lhs.abs() <= 1e-12 * (1.0 + x.norm() * y.norm() * z.norm()));
                // group invariance
                let a = killing_form(&ad_action(&g, &x), &ad_action(&g, &y), &spec).unwrap();
                let b = killing_form(&x, &y, &spec).unwrap();
                assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn exp_inverse_identity() {
        for spec in [GroupSpec::su(2), GroupSpec::su(3), GroupSpec::so(5), GroupSpec::sp(2)] {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..6 {
                let x = random_algebra(&spec, 1.0, &mut rng);
                let g = exp(&x, &spec);
                let h = exp(&x.neg(), &spec);
                let prod = g.multiply(&h);
                let d = spec.matrix_dim();
                let err = (&prod.mat - DMatrix::<Complex64>::identity(d, d)).norm();
                assert!(err <= 1e-10, "exp(X)exp(-X) != I for {spec}: {err}");
                assert!(group_defect(&g, &spec) <= 1e-10);
            }
        }
    }

    #[test]
    fn exp_su2_half_period() {
        let spec = GroupSpec::su(2);
        let x = diag_i().scale(PI);
        let g = exp(&x, &spec);
        let minus_i = -DMatrix::<Complex64>::identity(2, 2);
        assert!((g.mat - minus_i).norm() <= 1e-12);
    }

    #[test]
    fn algebra_projection_idempotent_and_valid() {
        for spec in [GroupSpec::su(3), GroupSpec::so(5), GroupSpec::sp(2)] {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let x = random_algebra(&spec, 1.0, &mut rng);
            assert!(algebra_defect(&x, &spec) <= 1e-12);
        }
    }

    #[test]
    fn maurer_cartan_forms() {
        let spec = GroupSpec::su(2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = random_algebra(&spec, 1.0, &mut rng);
        let g = random_group(&spec, 1.0, &mut rng);
        assert_eq!(maurer_cartan_left(&g, &x), x);
        let e = GroupElement::identity(&spec);
        assert!((maurer_cartan_right(&e, &x).mat - &x.mat).norm() <= 1e-14);
        // Θ̂ on g·X is the direct conjugation gXg⁻¹.
        let half_turn = exp(&diag_i().scale(PI / 2.0), &spec);
        let off = AlgebraElement {
            mat: DMatrix::from_row_slice(
                2,
                2,
                &[
                    Complex64::new(0.0, 0.0),
                    Complex64::new(1.0, 0.0),
                    Complex64::new(-1.0, 0.0),
                    Complex64::new(0.0, 0.0),
                ],
            ),
        };
        let got = maurer_cartan_right(&half_turn, &off);
        let want = &half_turn.mat * &off.mat * half_turn.mat.adjoint();
        assert!((got.mat - want).norm() <= 1e-12);
    }

    #[test]
    fn sp_family_embedding_is_quaternionic() {
        let spec = GroupSpec::sp(2);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x = random_algebra(&spec, 1.0, &mut rng);
        // fixed by the quaternionic structure map and anti-Hermitian
        assert!((&x.mat - quaternionic_structure(&x.mat)).norm() <= 1e-12);
        assert!((&x.mat + x.mat.adjoint()).norm() <= 1e-12);
        // trace vanishes automatically
        assert!(x.mat.diagonal().sum().norm() <= 1e-12);
        let g = exp(&x, &spec);
        assert!(group_defect(&g, &spec) <= 1e-10);
    }
}
