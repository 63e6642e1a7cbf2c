//! Discretized based path group PG and loop group ΩG.
//!
//! Paths and loops are sampled on the uniform grid θ_k = 2πk/N. A sampled
//! path stores, alongside its group samples, the Higgs field φ = p⁻¹∂p on
//! the same grid. For a freshly constructed path φ is computed with the
//! 4th-order finite-difference stencils below; the group operations
//! (multiply, inverse, adjoint action) propagate φ by the exact chain
//! rule identities
//!
//!   φ_{pq} = φ_q + Ad_{q⁻¹} φ_p,      φ_{p⁻¹} = −φ̂_p,
//!   φ_{qγq⁻¹} = Ad_q (Ad_{γ⁻¹} φ_q + φ_γ − φ_q),
//!
//! instead of re-differencing the composite sample grid. Composite points
//! therefore satisfy the cocycle identities of the Higgs field exactly
//! (to round-off), which is what the pointwise cancellation arguments of
//! the loop-group identities need; the finite-difference and chain-rule
//! routes agree to the stencil order, which is tested separately.
//!
//! Tangents are always left-representation coefficient grids: the tangent
//! at p is θ ↦ p(θ)·X(θ), and only X is stored.

use crate::error::CoreError;
use crate::lie::{
    ad_action, bracket, exp_matrix, project_algebra, project_group_matrix, random_algebra,
    AlgebraElement, GroupElement, GroupSpec,
};
use crate::Result;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;
use std::sync::Arc;

/// Uniform grid θ_k = 2πk/N, k = 0..N, with N even and at least 16.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    n: usize,
}

impl GridSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n < 16 || !n.is_multiple_of(2) {
            return Err(CoreError::invalid(format!(
                "grid size must be even and >= 16, got {n}"
            )));
        }
        Ok(GridSpec { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_samples(&self) -> usize {
        self.n + 1
    }

    pub fn step(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|k| self.node(k)).collect()
    }
}

/// Whether a grid quantity is treated as periodic (loop) or based (path).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Path,
    Loop,
}

// 4th-order stencils. Central interior everywhere; one-sided closures of
// the same order at k in {0, 1, N-1, N} for the path kind.
const C_INTERIOR: [(isize, f64); 4] = [(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)];
const C_LEFT0: [(isize, f64); 5] = [(0, -25.0), (1, 48.0), (2, -36.0), (3, 16.0), (4, -3.0)];
const C_LEFT1: [(isize, f64); 5] = [(-1, -3.0), (0, -10.0), (1, 18.0), (2, -6.0), (3, 1.0)];

fn stencil_at(k: usize, n: usize, kind: GridKind) -> Vec<(usize, f64)> {
    let pick = |offsets: &[(isize, f64)], base: isize, mirror: bool| -> Vec<(usize, f64)> {
        offsets
            .iter()
            .map(|&(off, c)| {
                let (off, c) = if mirror { (-off, -c) } else { (off, c) };
                (((base + off).rem_euclid(n as isize + 1)) as usize, c / 12.0)
            })
            .collect()
    };
    match kind {
        GridKind::Loop => {
            // periodic on the N independent samples 0..N-1
            C_INTERIOR
                .iter()
                .map(|&(off, c)| {
                    let idx = (k as isize + off).rem_euclid(n as isize) as usize;
                    (idx, c / 12.0)
                })
                .collect()
        }
        GridKind::Path => {
            if k == 0 {
                pick(&C_LEFT0, 0, false)
            } else if k == 1 {
                pick(&C_LEFT1, 1, false)
            } else if k == n - 1 {
                pick(&C_LEFT1, (n - 1) as isize, true)
            } else if k == n {
                pick(&C_LEFT0, n as isize, true)
            } else {
                C_INTERIOR
                    .iter()
                    .map(|&(off, c)| (((k as isize) + off) as usize, c / 12.0))
                    .collect()
            }
        }
    }
}

/// 4th-order θ-derivative of a grid of matrices.
pub fn derivative_matrices(
    values: &[DMatrix<Complex64>],
    h: f64,
    kind: GridKind,
) -> Result<Vec<DMatrix<Complex64>>> {
    let n = values.len() - 1;
    if n < 8 {
        return Err(CoreError::GridTooCoarse { needed: 8, got: n });
    }
    let dim = values[0].nrows();
    let mut out: Vec<DMatrix<Complex64>> = Vec::with_capacity(values.len());
    for k in 0..=n {
        if kind == GridKind::Loop && k == n {
            out.push(out[0].clone());
            continue;
        }
        let mut acc = DMatrix::<Complex64>::zeros(dim, values[0].ncols());
        for (idx, c) in stencil_at(k, n, kind) {
            acc += &values[idx] * Complex64::new(c / h, 0.0);
        }
        out.push(acc);
    }
    Ok(out)
}

/// 4th-order θ-derivative of scalar samples.
pub fn derivative_scalars(values: &[f64], h: f64, kind: GridKind) -> Result<Vec<f64>> {
    let n = values.len() - 1;
    if n < 8 {
        return Err(CoreError::GridTooCoarse { needed: 8, got: n });
    }
    let mut out = Vec::with_capacity(values.len());
    for k in 0..=n {
        if kind == GridKind::Loop && k == n {
            out.push(out[0]);
            continue;
        }
        let mut acc = 0.0;
        for (idx, c) in stencil_at(k, n, kind) {
            acc += values[idx] * c / h;
        }
        out.push(acc);
    }
    Ok(out)
}

/// θ-derivative of an algebra-valued grid (tangent coefficients).
pub fn theta_derivative(
    values: &[AlgebraElement],
    grid: &GridSpec,
    kind: GridKind,
) -> Result<Vec<AlgebraElement>> {
    if values.len() != grid.num_samples() {
        return Err(CoreError::dims(format!(
            "grid expects {} samples, got {}",
            grid.num_samples(),
            values.len()
        )));
    }
    let mats: Vec<_> = values.iter().map(|a| a.mat.clone()).collect();
    let d = derivative_matrices(&mats, grid.step(), kind)?;
    Ok(d.into_iter().map(|mat| AlgebraElement { mat }).collect())
}

/// Integral over [0, 2π] of grid samples.
///
/// Loop kind: periodic trapezoid (spectrally accurate on smooth periodic
/// integrands). Path kind: composite trapezoid with the Euler-Maclaurin
/// h²/12 boundary correction, the boundary slopes estimated by the
/// one-sided 4th-order stencils; the composite rule is then O(h⁴) on
/// smooth non-periodic integrands.
pub fn quadrature(values: &[f64], kind: GridKind) -> f64 {
    let n = values.len() - 1;
    let h = 2.0 * PI / n as f64;
    let mut trap = 0.5 * (values[0] + values[n]);
    for v in &values[1..n] {
        trap += v;
    }
    trap *= h;
    match kind {
        GridKind::Loop => trap,
        GridKind::Path => {
            let d0: f64 = C_LEFT0.iter().map(|&(off, c)| values[off as usize] * c / 12.0).sum();
            let dn: f64 = C_LEFT0
                .iter()
                .map(|&(off, c)| values[n - off as usize] * (-c) / 12.0)
                .sum();
            trap - h * (dn - d0) / 12.0
        }
    }
}

fn validate_samples(
    spec: &GroupSpec,
    grid: &GridSpec,
    samples: &[GroupElement],
    closed: bool,
) -> Result<()> {
    if samples.len() != grid.num_samples() {
        return Err(CoreError::dims(format!(
            "expected {} samples, got {}",
            grid.num_samples(),
            samples.len()
        )));
    }
    let d = spec.matrix_dim();
    let id = DMatrix::<Complex64>::identity(d, d);
    if (&samples[0].mat - &id).norm() > 1e-9 {
        return Err(CoreError::invalid("path must start at the identity"));
    }
    if closed && (&samples[grid.n()].mat - &id).norm() > 1e-9 {
        return Err(CoreError::invalid("loop must end at the identity"));
    }
    for (k, s) in samples.iter().enumerate() {
        if s.dim() != d {
            return Err(CoreError::dims(format!("sample {k} has wrong dimension")));
        }
    }
    Ok(())
}

fn higgs_from_samples(
    spec: &GroupSpec,
    grid: &GridSpec,
    samples: &[GroupElement],
    kind: GridKind,
) -> Result<Vec<AlgebraElement>> {
    let mats: Vec<_> = samples.iter().map(|g| g.mat.clone()).collect();
    let d = derivative_matrices(&mats, grid.step(), kind)?;
    Ok(samples
        .iter()
        .zip(d)
        .map(|(p, dp)| project_algebra(&(p.mat.adjoint() * dp), spec))
        .collect())
}

/// A based path \[0,2π\] → G with p(0) = 1, sampled on the grid, carrying
/// its Higgs field φ = p⁻¹∂p.
#[derive(Debug, Clone)]
pub struct SampledPath {
    pub spec: GroupSpec,
    pub grid: GridSpec,
    samples: Vec<GroupElement>,
    phi: Vec<AlgebraElement>,
}

/// A based loop: additionally p(2π) = 1, treated as periodic.
#[derive(Debug, Clone)]
pub struct SampledLoop {
    inner: SampledPath,
}

impl SampledPath {
    /// Build from raw samples; φ comes from the path stencils.
    pub fn from_samples(
        spec: GroupSpec,
        grid: GridSpec,
        samples: Vec<GroupElement>,
    ) -> Result<Self> {
        validate_samples(&spec, &grid, &samples, false)?;
        let phi = higgs_from_samples(&spec, &grid, &samples, GridKind::Path)?;
        Ok(SampledPath {
            spec,
            grid,
            samples,
            phi,
        })
    }

    /// Path θ ↦ exp(v(θ)) from an algebra-valued closure with v(0) = 0.
    pub fn from_exponential(
        spec: GroupSpec,
        grid: GridSpec,
        v: impl Fn(f64) -> AlgebraElement,
    ) -> Result<Self> {
        let samples: Vec<GroupElement> = grid
            .nodes()
            .iter()
            .map(|&t| project_group_matrix(exp_matrix(&v(t).mat), &spec))
            .collect();
        Self::from_samples(spec, grid, samples)
    }

    /// The pointwise exponential path exp(s·X(θ)) of a tangent grid.
    pub fn exponential_of(
        spec: &GroupSpec,
        grid: &GridSpec,
        coeffs: &[AlgebraElement],
        s: f64,
    ) -> Result<Self> {
        let samples: Vec<GroupElement> = coeffs
            .iter()
            .map(|x| GroupElement {
                mat: exp_matrix(&(&x.mat * Complex64::new(s, 0.0))),
            })
            .collect();
        Self::from_samples(*spec, *grid, samples)
    }

    pub(crate) fn from_parts(
        spec: GroupSpec,
        grid: GridSpec,
        samples: Vec<GroupElement>,
        phi: Vec<AlgebraElement>,
    ) -> Self {
        SampledPath {
            spec,
            grid,
            samples,
            phi,
        }
    }

    pub fn constant_identity(spec: GroupSpec, grid: GridSpec) -> Self {
        let id = GroupElement::identity(&spec);
        let z = AlgebraElement::zero(&spec);
        SampledPath {
            spec,
            grid,
            samples: vec![id; grid.num_samples()],
            phi: vec![z; grid.num_samples()],
        }
    }

    pub fn sample(&self, k: usize) -> &GroupElement {
        &self.samples[k]
    }

    pub fn samples(&self) -> &[GroupElement] {
        &self.samples
    }

    pub fn endpoint(&self) -> &GroupElement {
        &self.samples[self.grid.n()]
    }

    /// The Higgs field φ = p⁻¹∂p.
    pub fn higgs(&self) -> &[AlgebraElement] {
        &self.phi
    }

    /// φ̂ = Ad_p φ = (∂p)p⁻¹.
    pub fn higgs_hat(&self) -> Vec<AlgebraElement> {
        self.samples
            .iter()
            .zip(&self.phi)
            .map(|(p, f)| ad_action(p, f))
            .collect()
    }

    /// Pointwise product; φ_{pq} = φ_q + Ad_{q⁻¹}φ_p.
    pub fn multiply(&self, other: &SampledPath) -> Result<SampledPath> {
        self.compatible(other)?;
        let samples: Vec<GroupElement> = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(p, q)| p.multiply(q))
            .collect();
        let phi = other
            .phi
            .iter()
            .zip(&other.samples)
            .zip(&self.phi)
            .map(|((fq, q), fp)| fq.add(&ad_action(&q.inverse(), fp)))
            .collect();
        Ok(SampledPath::from_parts(self.spec, self.grid, samples, phi))
    }

    /// Pointwise inverse; φ_{p⁻¹} = −φ̂_p.
    pub fn inverse(&self) -> SampledPath {
        let samples: Vec<GroupElement> = self.samples.iter().map(|p| p.inverse()).collect();
        let phi = self
            .samples
            .iter()
            .zip(&self.phi)
            .map(|(p, f)| ad_action(p, f).neg())
            .collect();
        SampledPath::from_parts(self.spec, self.grid, samples, phi)
    }

    /// Move the path along a tangent: p ↦ p·exp(sX) pointwise.
    pub fn translate(&self, tangent: &PathTangent, s: f64) -> Result<SampledPath> {
        let e = SampledPath::exponential_of(&self.spec, &self.grid, &tangent.coeffs, s)?;
        self.multiply(&e)
    }

    pub fn compatible(&self, other: &SampledPath) -> Result<()> {
        if self.spec != other.spec || self.grid != other.grid {
            return Err(CoreError::invalid("path grids or groups do not match"));
        }
        Ok(())
    }
}

impl SampledLoop {
    pub fn from_samples(
        spec: GroupSpec,
        grid: GridSpec,
        samples: Vec<GroupElement>,
    ) -> Result<Self> {
        validate_samples(&spec, &grid, &samples, true)?;
        let phi = higgs_from_samples(&spec, &grid, &samples, GridKind::Loop)?;
        Ok(SampledLoop {
            inner: SampledPath::from_parts(spec, grid, samples, phi),
        })
    }

    pub fn from_exponential(
        spec: GroupSpec,
        grid: GridSpec,
        v: impl Fn(f64) -> AlgebraElement,
    ) -> Result<Self> {
        let samples: Vec<GroupElement> = grid
            .nodes()
            .iter()
            .map(|&t| project_group_matrix(exp_matrix(&v(t).mat), &spec))
            .collect();
        Self::from_samples(spec, grid, samples)
    }

    pub fn constant_identity(spec: GroupSpec, grid: GridSpec) -> Self {
        SampledLoop {
            inner: SampledPath::constant_identity(spec, grid),
        }
    }

    pub(crate) fn from_path_unchecked(path: SampledPath) -> Self {
        SampledLoop { inner: path }
    }

    pub fn as_path(&self) -> &SampledPath {
        &self.inner
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.inner.spec
    }

    pub fn grid(&self) -> &GridSpec {
        &self.inner.grid
    }

    pub fn sample(&self, k: usize) -> &GroupElement {
        self.inner.sample(k)
    }

    pub fn higgs(&self) -> &[AlgebraElement] {
        self.inner.higgs()
    }

    pub fn higgs_hat(&self) -> Vec<AlgebraElement> {
        self.inner.higgs_hat()
    }

    pub fn multiply(&self, other: &SampledLoop) -> Result<SampledLoop> {
        Ok(SampledLoop {
            inner: self.inner.multiply(&other.inner)?,
        })
    }

    pub fn inverse(&self) -> SampledLoop {
        SampledLoop {
            inner: self.inner.inverse(),
        }
    }

    pub fn translate(&self, tangent: &PathTangent, s: f64) -> Result<SampledLoop> {
        Ok(SampledLoop {
            inner: self.inner.translate(tangent, s)?,
        })
    }
}

/// Multiply a based path by a loop (the PG-level product p·γ).
pub fn path_times_loop(p: &SampledPath, gamma: &SampledLoop) -> Result<SampledPath> {
    p.multiply(gamma.as_path())
}

/// Adjoint action of PG on ΩG: (qγq⁻¹)(θ) = q(θ)γ(θ)q(θ)⁻¹, with
/// φ propagated by Ad_q(Ad_{γ⁻¹}φ_q + φ_γ − φ_q).
pub fn loop_adjoint_action(q: &SampledPath, gamma: &SampledLoop) -> Result<SampledLoop> {
    q.compatible(gamma.as_path())?;
    let samples: Vec<GroupElement> = q
        .samples()
        .iter()
        .zip(gamma.as_path().samples())
        .map(|(qk, gk)| {
            let qi = qk.inverse();
            qk.multiply(gk).multiply(&qi)
        })
        .collect();
    let phi = q
        .samples()
        .iter()
        .zip(q.higgs())
        .zip(gamma.as_path().samples().iter().zip(gamma.higgs()))
        .map(|((qk, fq), (gk, fg))| {
            let inner = ad_action(&gk.inverse(), fq).add(fg).sub(fq);
            ad_action(qk, &inner)
        })
        .collect();
    Ok(SampledLoop::from_path_unchecked(SampledPath::from_parts(
        *q.spec(),
        *q.grid(),
        samples,
        phi,
    )))
}

impl SampledPath {
    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
}

/// Semidirect-product multiplication on PG ⋉ ΩG:
/// (p,γ)·(q,η) = (pq, Ad_{q⁻¹}(γ)·η).
pub fn semidirect_multiply(
    p: &SampledPath,
    gamma: &SampledLoop,
    q: &SampledPath,
    eta: &SampledLoop,
) -> Result<(SampledPath, SampledLoop)> {
    let pq = p.multiply(q)?;
    let conj = loop_adjoint_action(&q.inverse(), gamma)?;
    let second = conj.multiply(eta)?;
    Ok((pq, second))
}

/// Tangent coefficient grid in the left representation.
#[derive(Debug, Clone)]
pub struct PathTangent {
    pub coeffs: Vec<AlgebraElement>,
}

impl PathTangent {
    pub fn zero(spec: &GroupSpec, grid: &GridSpec) -> Self {
        PathTangent {
            coeffs: vec![AlgebraElement::zero(spec); grid.num_samples()],
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scale(&self, s: f64) -> Self {
        PathTangent {
            coeffs: self.coeffs.iter().map(|a| a.scale(s)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        PathTangent {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|a| a.max_abs()).fold(0.0, f64::max)
    }

    /// Pointwise bracket of two tangent grids.
    pub fn pointwise_bracket(&self, other: &Self) -> Self {
        PathTangent {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| bracket(a, b))
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Random smooth data
// ---------------------------------------------------------------------------

/// Coefficients for a smooth algebra-valued function of θ built from the
/// base-point-respecting modes sin(mθ) and 1−cos(mθ), plus an optional
/// linear term c·θ/2π·E₀ (paths only, so the endpoint moves).
struct TrigSeries {
    modes: Vec<(usize, f64, f64, AlgebraElement)>, // (m, a_sin, b_cos, direction)
    linear: Option<(f64, AlgebraElement)>,
}

impl TrigSeries {
    fn eval(&self, theta: f64, spec: &GroupSpec) -> AlgebraElement {
        let mut acc = AlgebraElement::zero(spec);
        for (m, a, b, e) in &self.modes {
            let s = a * (*m as f64 * theta).sin() + b * (1.0 - (*m as f64 * theta).cos());
            acc = acc.add(&e.scale(s));
        }
        if let Some((c, e)) = &self.linear {
            acc = acc.add(&e.scale(c * theta / (2.0 * PI)));
        }
        acc
    }
}

fn random_series<R: Rng>(
    spec: &GroupSpec,
    max_mode: usize,
    amplitude: f64,
    with_linear: bool,
    rng: &mut R,
) -> TrigSeries {
    let modes = (1..=max_mode)
        .map(|m| {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            let scale = amplitude / (m * m) as f64;
            (m, a * scale, b * scale, random_algebra(spec, 1.0, rng))
        })
        .collect();
    let linear = if with_linear {
        let c: f64 = rng.sample(StandardNormal);
        Some((c * amplitude, random_algebra(spec, 1.0, rng)))
    } else {
        None
    };
    TrigSeries { modes, linear }
}

/// Default mode cutoff for random data; kept moderate so 4th-order
/// stencil errors stay well inside the finite-difference tolerances.
pub const DEFAULT_MAX_MODE: usize = 2;
/// Default amplitude for random data.
pub const DEFAULT_AMPLITUDE: f64 = 0.4;

/// Random smooth based path p(θ) = exp(v(θ)) with a generically moving
/// endpoint.
pub fn random_path<R: Rng>(spec: &GroupSpec, grid: &GridSpec, rng: &mut R) -> SampledPath {
    let series = random_series(spec, DEFAULT_MAX_MODE, DEFAULT_AMPLITUDE, true, rng);
    SampledPath::from_exponential(*spec, *grid, |t| series.eval(t, spec)).unwrap()
}

/// Random smooth loop (v(0) = v(2π) = 0 automatically).
pub fn random_loop<R: Rng>(spec: &GroupSpec, grid: &GridSpec, rng: &mut R) -> SampledLoop {
    let series = random_series(spec, DEFAULT_MAX_MODE, DEFAULT_AMPLITUDE, false, rng);
    SampledLoop::from_exponential(*spec, *grid, |t| series.eval(t, spec)).unwrap()
}

/// Random path tangent: X(0) = 0, endpoint value generically nonzero.
pub fn random_path_tangent<R: Rng>(
    spec: &GroupSpec,
    grid: &GridSpec,
    rng: &mut R,
) -> PathTangent {
    let series = random_series(spec, DEFAULT_MAX_MODE, DEFAULT_AMPLITUDE, true, rng);
    PathTangent {
        coeffs: grid.nodes().iter().map(|&t| series.eval(t, spec)).collect(),
    }
}

/// Random loop tangent: X(0) = X(2π) = 0.
pub fn random_loop_tangent<R: Rng>(
    spec: &GroupSpec,
    grid: &GridSpec,
    rng: &mut R,
) -> PathTangent {
    let series = random_series(spec, DEFAULT_MAX_MODE, DEFAULT_AMPLITUDE, false, rng);
    PathTangent {
        coeffs: grid.nodes().iter().map(|&t| series.eval(t, spec)).collect(),
    }
}

// ---------------------------------------------------------------------------
// Families of loops (the discretized PΩG)
// ---------------------------------------------------------------------------

type LoopGenerator = Arc<dyn Fn(f64) -> SampledLoop + Send + Sync>;

#[derive(Clone)]
enum FamilyStorage {
    Eager(Arc<Vec<SampledLoop>>),
    /// generator-backed; node slices materialize on first access
    Lazy {
        generator: LoopGenerator,
        cells: Arc<Vec<std::sync::OnceLock<SampledLoop>>>,
    },
}

/// A based path of loops f: \[0,2π\] → ΩG with f(0) the constant identity
/// loop: a (N_t+1)×(N_θ+1) grid of group elements, each t-slice a loop.
///
/// Random instances carry a generator closure so the family can be
/// evaluated at off-grid t (needed when differentiating in the fiber
/// direction); their node slices are materialized lazily, so translating
/// a generator-backed family costs O(1). Grid-only construction is
/// supported too.
#[derive(Clone)]
pub struct LoopFamily {
    pub spec: GroupSpec,
    pub grid_t: GridSpec,
    pub grid_theta: GridSpec,
    storage: FamilyStorage,
}

impl LoopFamily {
    fn check_base_slice(&self) -> Result<()> {
        let d = self.spec.matrix_dim();
        let id = DMatrix::<Complex64>::identity(d, d);
        let base = self.slice(0);
        for k in 0..self.grid_theta.num_samples() {
            if (&base.sample(k).mat - &id).norm() > 1e-9 {
                return Err(CoreError::invalid(
                    "base slice of a loop family must be the constant identity loop",
                ));
            }
        }
        Ok(())
    }

    pub fn from_slices(
        spec: GroupSpec,
        grid_t: GridSpec,
        grid_theta: GridSpec,
        slices: Vec<SampledLoop>,
    ) -> Result<Self> {
        if slices.len() != grid_t.num_samples() {
            return Err(CoreError::dims(format!(
                "expected {} t-slices, got {}",
                grid_t.num_samples(),
                slices.len()
            )));
        }
        let fam = LoopFamily {
            spec,
            grid_t,
            grid_theta,
            storage: FamilyStorage::Eager(Arc::new(slices)),
        };
        fam.check_base_slice()?;
        Ok(fam)
    }

    pub fn from_generator(
        spec: GroupSpec,
        grid_t: GridSpec,
        grid_theta: GridSpec,
        generator: impl Fn(f64) -> SampledLoop + Send + Sync + 'static,
    ) -> Result<Self> {
        let cells = Arc::new(
            (0..grid_t.num_samples())
                .map(|_| std::sync::OnceLock::new())
                .collect::<Vec<_>>(),
        );
        let fam = LoopFamily {
            spec,
            grid_t,
            grid_theta,
            storage: FamilyStorage::Lazy {
                generator: Arc::new(generator),
                cells,
            },
        };
        fam.check_base_slice()?;
        Ok(fam)
    }

    pub fn slice(&self, k: usize) -> &SampledLoop {
        match &self.storage {
            FamilyStorage::Eager(v) => &v[k],
            FamilyStorage::Lazy { generator, cells } => {
                cells[k].get_or_init(|| generator(self.grid_t.node(k)))
            }
        }
    }

    pub fn has_generator(&self) -> bool {
        matches!(self.storage, FamilyStorage::Lazy { .. })
    }

    /// Evaluate the family at arbitrary t (generator-backed), or at a
    /// grid node.
    pub fn loop_at(&self, t: f64) -> Result<SampledLoop> {
        let ht = self.grid_t.step();
        let k = (t / ht).round();
        let on_node = (t - k * ht).abs() <= 1e-9 * (1.0 + t.abs())
            && (0.0..=(self.grid_t.n() as f64)).contains(&k);
        if on_node {
            return Ok(self.slice(k as usize).clone());
        }
        match &self.storage {
            FamilyStorage::Lazy { generator, .. } => Ok(generator(t)),
            FamilyStorage::Eager(_) => Err(CoreError::invalid(
                "off-grid t on a grid-backed loop family",
            )),
        }
    }

    /// Left log-derivative (f⁻¹∂_t f)(t_k) at one node, by the 4th-order
    /// path stencil in t.
    pub fn t_log_derivative_node(&self, k: usize) -> Result<Vec<AlgebraElement>> {
        let nt = self.grid_t.n();
        let ht = self.grid_t.step();
        let ntheta = self.grid_theta.num_samples();
        let stencil = stencil_at(k, nt, GridKind::Path);
        let here = self.slice(k).clone();
        let support: Vec<(SampledLoop, f64)> = stencil
            .iter()
            .map(|&(idx, c)| (self.slice(idx).clone(), c))
            .collect();
        let mut row = Vec::with_capacity(ntheta);
        for j in 0..ntheta {
            let mut acc =
                DMatrix::<Complex64>::zeros(self.spec.matrix_dim(), self.spec.matrix_dim());
            for (s, c) in &support {
                acc += &s.sample(j).mat * Complex64::new(c / ht, 0.0);
            }
            let w = here.sample(j).mat.adjoint() * acc;
            row.push(project_algebra(&w, &self.spec));
        }
        Ok(row)
    }

    /// Left log-derivative in t at all grid nodes.
    pub fn t_log_derivative(&self) -> Result<Vec<Vec<AlgebraElement>>> {
        (0..=self.grid_t.n())
            .map(|k| self.t_log_derivative_node(k))
            .collect()
    }

    /// (f⁻¹∂_t f)(t) at arbitrary t via the generator, by central
    /// differences of the smooth closure.
    pub fn t_log_derivative_at(&self, t: f64, h: f64) -> Result<Vec<AlgebraElement>> {
        let plus = self.loop_at(t + h)?;
        let minus = self.loop_at(t - h)?;
        let here = self.loop_at(t)?;
        Ok((0..self.grid_theta.num_samples())
            .map(|j| {
                let diff = (&plus.sample(j).mat - &minus.sample(j).mat)
                    * Complex64::new(1.0 / (2.0 * h), 0.0);
                project_algebra(&(here.sample(j).mat.adjoint() * diff), &self.spec)
            })
            .collect())
    }

    /// Move the family along a family tangent: f ↦ f·exp(sW).
    pub fn translate(&self, tangent: &FamilyTangent, s: f64) -> Result<LoopFamily> {
        match (&self.storage, &tangent.generator) {
            (FamilyStorage::Lazy { generator, .. }, Some(wgen)) => {
                let g = generator.clone();
                let w = wgen.clone();
                LoopFamily::from_generator(self.spec, self.grid_t, self.grid_theta, move |t| {
                    g(t).translate(&w(t), s).expect("family translate")
                })
            }
            _ => {
                let slices: Vec<SampledLoop> = (0..self.grid_t.num_samples())
                    .map(|k| {
                        let w = tangent.slice(self.grid_t.node(k));
                        self.slice(k).translate(&w, s)
                    })
                    .collect::<Result<_>>()?;
                Self::from_slices(self.spec, self.grid_t, self.grid_theta, slices)
            }
        }
    }
}

type TangentGenerator = Arc<dyn Fn(f64) -> PathTangent + Send + Sync>;

/// Tangent to a loop family: W(t, θ) with W(0,·) = 0 and each t-slice a
/// loop tangent.
#[derive(Clone)]
pub struct FamilyTangent {
    pub grid_t: GridSpec,
    slices: Vec<PathTangent>,
    generator: Option<TangentGenerator>,
}

impl FamilyTangent {
    pub fn from_generator(
        grid_t: GridSpec,
        generator: impl Fn(f64) -> PathTangent + Send + Sync + 'static,
    ) -> Self {
        let slices = grid_t.nodes().iter().map(|&t| generator(t)).collect();
        FamilyTangent {
            grid_t,
            slices,
            generator: Some(Arc::new(generator)),
        }
    }

    pub fn zero(spec: &GroupSpec, grid_t: &GridSpec, grid_theta: &GridSpec) -> Self {
        let z = PathTangent::zero(spec, grid_theta);
        FamilyTangent {
            grid_t: *grid_t,
            slices: vec![z.clone(); grid_t.num_samples()],
            generator: {
                let z = z.clone();
                Some(Arc::new(move |_| z.clone()))
            },
        }
    }

    /// Slice at arbitrary t (generator-backed) or the nearest node.
    pub fn slice(&self, t: f64) -> PathTangent {
        if let Some(g) = &self.generator {
            return g(t);
        }
        let k = (t / self.grid_t.step()).round() as usize;
        self.slices[k.min(self.slices.len() - 1)].clone()
    }

    pub fn slice_at_node(&self, k: usize) -> &PathTangent {
        &self.slices[k]
    }

    pub fn scale(&self, s: f64) -> Self {
        let slices = self.slices.iter().map(|w| w.scale(s)).collect();
        let generator = self.generator.as_ref().map(|g| {
            let g = g.clone();
            let f: TangentGenerator = Arc::new(move |t| g(t).scale(s));
            f
        });
        FamilyTangent {
            grid_t: self.grid_t,
            slices,
            generator,
        }
    }

    pub fn pointwise_bracket(&self, other: &Self) -> Self {
        let slices = self
            .slices
            .iter()
            .zip(&other.slices)
            .map(|(a, b)| a.pointwise_bracket(b))
            .collect();
        let generator = match (&self.generator, &other.generator) {
            (Some(a), Some(b)) => {
                let a = a.clone();
                let b = b.clone();
                let f: TangentGenerator = Arc::new(move |t| a(t).pointwise_bracket(&b(t)));
                Some(f)
            }
            _ => None,
        };
        FamilyTangent {
            grid_t: self.grid_t,
            slices,
            generator,
        }
    }
}

/// Random smooth loop family f(t,θ) = exp(w(t,θ)) with w(0,·) = 0 and
/// loop boundary behavior in θ.
pub fn random_loop_family<R: Rng>(
    spec: &GroupSpec,
    grid_t: &GridSpec,
    grid_theta: &GridSpec,
    rng: &mut R,
) -> LoopFamily {
    let terms = random_family_terms(spec, rng);
    let spec_c = *spec;
    let grid_theta_c = *grid_theta;
    LoopFamily::from_generator(*spec, *grid_t, *grid_theta, move |t| {
        SampledLoop::from_exponential(spec_c, grid_theta_c, |theta| {
            eval_family_terms(&terms, t, theta, &spec_c)
        })
        .expect("family slice")
    })
    .expect("random loop family")
}

/// Random smooth family tangent (same mode structure as the points).
pub fn random_family_tangent<R: Rng>(
    spec: &GroupSpec,
    grid_t: &GridSpec,
    grid_theta: &GridSpec,
    rng: &mut R,
) -> FamilyTangent {
    let terms = random_family_terms(spec, rng);
    let spec_c = *spec;
    let grid_theta_c = *grid_theta;
    FamilyTangent::from_generator(*grid_t, move |t| PathTangent {
        coeffs: grid_theta_c
            .nodes()
            .iter()
            .map(|&theta| eval_family_terms(&terms, t, theta, &spec_c))
            .collect(),
    })
}

type FamilyTerm = (usize, usize, f64, bool, bool, AlgebraElement);

fn random_family_terms<R: Rng>(spec: &GroupSpec, rng: &mut R) -> Vec<FamilyTerm> {
    let mut terms = Vec::new();
    for l in 1..=2usize {
        for m in 1..=2usize {
            let amp: f64 = rng.sample(StandardNormal);
            let sin_t = rng.gen_bool(0.5);
            let sin_th = rng.gen_bool(0.5);
            terms.push((
                l,
                m,
                0.35 * amp / ((l * m) as f64),
                sin_t,
                sin_th,
                random_algebra(spec, 1.0, rng),
            ));
        }
    }
    terms
}

fn eval_family_terms(
    terms: &[FamilyTerm],
    t: f64,
    theta: f64,
    spec: &GroupSpec,
) -> AlgebraElement {
    let mut acc = AlgebraElement::zero(spec);
    for (l, m, amp, sin_t, sin_th, e) in terms {
        let ft = if *sin_t {
            (*l as f64 * t).sin()
        } else {
            1.0 - (*l as f64 * t).cos()
        };
        let fth = if *sin_th {
            (*m as f64 * theta).sin()
        } else {
            1.0 - (*m as f64 * theta).cos()
        };
        acc = acc.add(&e.scale(amp * ft * fth));
    }
    acc
}

// ---------------------------------------------------------------------------
// Tangent maps of the registered point maps
// ---------------------------------------------------------------------------

/// Tangent of mult at (p,q): (X,Y) ↦ Ad_{q⁻¹}X + Y.
pub fn push_mult(q: &SampledPath, x: &PathTangent, y: &PathTangent) -> PathTangent {
    PathTangent {
        coeffs: q
            .samples()
            .iter()
            .zip(x.coeffs.iter().zip(&y.coeffs))
            .map(|(qk, (xk, yk))| ad_action(&qk.inverse(), xk).add(yk))
            .collect(),
    }
}

/// Tangent of inverse at p: X ↦ −Ad_p X.
pub fn push_inverse(p: &SampledPath, x: &PathTangent) -> PathTangent {
    PathTangent {
        coeffs: p
            .samples()
            .iter()
            .zip(&x.coeffs)
            .map(|(pk, xk)| ad_action(pk, xk).neg())
            .collect(),
    }
}

/// Tangent of the adjoint action (q,γ) ↦ qγq⁻¹:
/// (X,W) ↦ Ad_q(Ad_{γ⁻¹}X − X + W).
pub fn push_adjoint(
    q: &SampledPath,
    gamma: &SampledLoop,
    x: &PathTangent,
    w: &PathTangent,
) -> PathTangent {
    PathTangent {
        coeffs: q
            .samples()
            .iter()
            .zip(gamma.as_path().samples())
            .zip(x.coeffs.iter().zip(&w.coeffs))
            .map(|((qk, gk), (xk, wk))| {
                let inner = ad_action(&gk.inverse(), xk).sub(xk).add(wk);
                ad_action(qk, &inner)
            })
            .collect(),
    }
}

/// Tangent of evaluation at 2π: X ↦ X(2π).
pub fn push_ev(x: &PathTangent) -> AlgebraElement {
    x.coeffs.last().expect("empty tangent").clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{killing_form, GroupSpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn su2() -> GroupSpec {
        GroupSpec::su(2)
    }

    fn basis_e() -> AlgebraElement {
        crate::lie::su2_basis()[0].clone()
    }

    #[test]
    fn derivative_of_constant_grid_is_zero() {
        let grid = GridSpec::new(32).unwrap();
        let vals = vec![basis_e(); grid.num_samples()];
        for kind in [GridKind::Path, GridKind::Loop] {
            let d = theta_derivative(&vals, &grid, kind).unwrap();
            assert!(d.iter().all(|a| a.max_abs() <= 1e-13));
        }
    }

    #[test]
    fn derivative_matches_analytic_sine() {
        let _spec = su2();
        let grid = GridSpec::new(128).unwrap();
        let e = basis_e();
        let vals: Vec<AlgebraElement> =
            grid.nodes().iter().map(|&t| e.scale(t.sin())).collect();
        for kind in [GridKind::Path, GridKind::Loop] {
            let d = theta_derivative(&vals, &grid, kind).unwrap();
            let err = grid
                .nodes()
                .iter()
                .zip(&d)
                .map(|(&t, got)| got.sub(&e.scale(t.cos())).max_abs())
                .fold(0.0, f64::max);
            assert!(err <= 1e-6, "derivative error {err} for {kind:?}");
        }
    }

    #[test]
    fn derivative_richardson_order() {
        let e = basis_e();
        let err_at = |n: usize| {
            let grid = GridSpec::new(n).unwrap();
            let vals: Vec<AlgebraElement> = grid
                .nodes()
                .iter()
                .map(|&t| e.scale((4.0 * t).sin()))
                .collect();
            let d = theta_derivative(&vals, &grid, GridKind::Loop).unwrap();
            grid.nodes()
                .iter()
                .zip(&d)
                .map(|(&t, got)| got.sub(&e.scale(4.0 * (4.0 * t).cos())).max_abs())
                .fold(0.0, f64::max)
        };
        let order = (err_at(64) / err_at(128)).log2();
        assert!(order >= 3.8, "observed order {order}");
    }

    #[test]
    fn derivative_grid_too_coarse() {
        let vals = vec![DMatrix::<Complex64>::identity(2, 2); 5];
        assert!(matches!(
            derivative_matrices(&vals, 0.1, GridKind::Path),
            Err(CoreError::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn higgs_of_identity_and_one_parameter_path() {
        let spec = su2();
        let grid = GridSpec::new(128).unwrap();
        let idp = SampledPath::constant_identity(spec, grid);
        assert!(idp.higgs().iter().all(|a| a.max_abs() <= 1e-13));

        let x = basis_e().scale(0.3);
        let p = SampledPath::from_exponential(spec, grid, |t| x.scale(t)).unwrap();
        let err = p
            .higgs()
            .iter()
            .map(|f| f.sub(&x).max_abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-6, "one-parameter subgroup Higgs error {err}");
    }

    #[test]
    fn higgs_hat_is_ad_of_higgs() {
        let spec = su2();
        let grid = GridSpec::new(32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let gamma = random_loop(&spec, &grid, &mut rng);
        let hats = gamma.higgs_hat();
        for (k, hat) in hats.iter().enumerate() {
            let want = ad_action(gamma.sample(k), &gamma.higgs()[k]);
            assert!(hat.sub(&want).max_abs() <= 1e-12);
        }
    }

    #[test]
    fn product_inverse_and_adjoint_identities() {
        let spec = su2();
        let grid = GridSpec::new(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = random_path(&spec, &grid, &mut rng);
        let gamma = random_loop(&spec, &grid, &mut rng);

        let prod = p.multiply(&p.inverse()).unwrap();
        for k in 0..=grid.n() {
            let d = spec.matrix_dim();
            let err = (&prod.sample(k).mat - DMatrix::<Complex64>::identity(d, d)).norm();
            assert!(err <= 1e-12);
            assert!(prod.higgs()[k].max_abs() <= 1e-12);
        }

        let idp = SampledPath::constant_identity(spec, grid);
        let adj = loop_adjoint_action(&idp, &gamma).unwrap();
        for k in 0..=grid.n() {
            assert!((&adj.sample(k).mat - &gamma.sample(k).mat).norm() <= 1e-12);
            assert!(adj.higgs()[k].sub(&gamma.higgs()[k]).max_abs() <= 1e-12);
        }
    }

    #[test]
    fn higgs_product_cocycle_exact() {
        let spec = su2();
        let grid = GridSpec::new(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = random_path(&spec, &grid, &mut rng);
        let q = random_path(&spec, &grid, &mut rng);
        let pq = p.multiply(&q).unwrap();
        for k in 0..=grid.n() {
            let want = q.higgs()[k].add(&ad_action(&q.sample(k).inverse(), &p.higgs()[k]));
            assert!(pq.higgs()[k].sub(&want).max_abs() <= 1e-10);
        }
    }

    #[test]
    fn propagated_higgs_matches_fresh_stencil_to_fd_order() {
        // chain-rule jets vs re-differencing the product grid: agreement
        // at the stencil order, not to round-off.
        let spec = su2();
        let mut errs = Vec::new();
        for n in [64usize, 128] {
            let grid = GridSpec::new(n).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(8);
            let p = random_path(&spec, &grid, &mut rng);
            let q = random_path(&spec, &grid, &mut rng);
            let pq = p.multiply(&q).unwrap();
            let fresh =
                SampledPath::from_samples(spec, grid, pq.samples().to_vec()).unwrap();
            let err = pq
                .higgs()
                .iter()
                .zip(fresh.higgs())
                .map(|(a, b)| a.sub(b).max_abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[1] <= 5e-5, "stencil agreement too loose: {:?}", errs);
        let order = (errs[0] / errs[1]).log2();
        assert!(order >= 3.5, "stencil/chain-rule order {order}");
    }

    #[test]
    fn semidirect_mult_matches_primitive_composition() {
        let spec = su2();
        let grid = GridSpec::new(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let p = random_path(&spec, &grid, &mut rng);
        let q = random_path(&spec, &grid, &mut rng);
        let gamma = random_loop(&spec, &grid, &mut rng);
        let eta = random_loop(&spec, &grid, &mut rng);
        let (first, second) = semidirect_multiply(&p, &gamma, &q, &eta).unwrap();
        // by-hand composition
        let want_first = p.multiply(&q).unwrap();
        let want_second = loop_adjoint_action(&q.inverse(), &gamma)
            .unwrap()
            .multiply(&eta)
            .unwrap();
        for k in 0..=grid.n() {
            assert!((&first.sample(k).mat - &want_first.sample(k).mat).norm() <= 1e-12);
            assert!((&second.sample(k).mat - &want_second.sample(k).mat).norm() <= 1e-12);
        }
    }

    #[test]
    fn pushforward_analytic_vs_finite_difference() {
        let spec = su2();
        let grid = GridSpec::new(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = random_path(&spec, &grid, &mut rng);
        let x = random_path_tangent(&spec, &grid, &mut rng);
        let h = 1e-4;

        // inverse: -Ad_p X vs finite difference of the inverse map
        let analytic = push_inverse(&p, &x);
        let plus = p.translate(&x, h).unwrap().inverse();
        let minus = p.translate(&x, -h).unwrap().inverse();
        let base = p.inverse();
        for k in 0..=grid.n() {
            let diff = (&plus.sample(k).mat - &minus.sample(k).mat)
                * Complex64::new(1.0 / (2.0 * h), 0.0);
            let fd = project_algebra(&(base.sample(k).mat.adjoint() * diff), &spec);
            assert!(
                fd.sub(&analytic.coeffs[k]).max_abs() <= 1e-6,
                "inverse pushforward FD mismatch at node {k}"
            );
        }
    }

    #[test]
    fn mult_pushforward_at_identity_second_factor() {
        let spec = su2();
        let grid = GridSpec::new(32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let x = random_path_tangent(&spec, &grid, &mut rng);
        let idp = SampledPath::constant_identity(spec, grid);
        let y = PathTangent::zero(&spec, &grid);
        let out = push_mult(&idp, &x, &y);
        for k in 0..=grid.n() {
            assert!(out.coeffs[k].sub(&x.coeffs[k]).max_abs() <= 1e-13);
        }
    }

    #[test]
    fn quadrature_examples() {
        let grid = GridSpec::new(64).unwrap();
        let ones = vec![1.0; grid.num_samples()];
        assert_abs_diff_eq!(quadrature(&ones, GridKind::Loop), 2.0 * PI, epsilon = 1e-12);

        let sin2: Vec<f64> = grid.nodes().iter().map(|t| t.sin().powi(2)).collect();
        assert_abs_diff_eq!(quadrature(&sin2, GridKind::Loop), PI, epsilon = 1e-10);

        let grid = GridSpec::new(128).unwrap();
        let lin: Vec<f64> = grid.nodes().to_vec();
        assert_abs_diff_eq!(
            quadrature(&lin, GridKind::Path),
            2.0 * PI * PI,
            epsilon = 1e-3
        );
    }

    #[test]
    fn path_quadrature_is_fourth_order() {
        let f = |t: f64| (1.3 * t).sin() + 0.2 * t * t;
        let exact = (1.0 - (1.3 * 2.0 * PI).cos()) / 1.3 + 0.2 * (2.0 * PI).powi(3) / 3.0;
        let err_at = |n: usize| {
            let grid = GridSpec::new(n).unwrap();
            let vals: Vec<f64> = grid.nodes().iter().map(|&t| f(t)).collect();
            (quadrature(&vals, GridKind::Path) - exact).abs()
        };
        let order = (err_at(64) / err_at(128)).log2();
        assert!(order >= 3.7, "path quadrature order {order}");
    }

    #[test]
    fn loop_quadrature_superalgebraic_order() {
        // analytic periodic integrand with slow Fourier decay
        let a = 1.02;
        let exact = 2.0 * PI / (a * a - 1.0f64).sqrt();
        let err_at = |n: usize| {
            let grid = GridSpec::new(n).unwrap();
            let vals: Vec<f64> = grid.nodes().iter().map(|&t| 1.0 / (a - t.cos())).collect();
            (quadrature(&vals, GridKind::Loop) - exact).abs()
        };
        let order = (err_at(64) / err_at(128)).log2();
        assert!(order > 4.0, "loop quadrature order {order}");
    }

    #[test]
    fn directional_derivative_of_higgs_hat() {
        // derivative of φ̂ along γ·exp(sX) equals Ad_γ ∂X (the identity
        // behind the basic gerbe curving computation)
        let spec = su2();
        let grid = GridSpec::new(256).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let gamma = random_loop(&spec, &grid, &mut rng);
        let x = random_loop_tangent(&spec, &grid, &mut rng);
        let h = 1e-5;
        let plus = gamma.translate(&x, h).unwrap().higgs_hat();
        let minus = gamma.translate(&x, -h).unwrap().higgs_hat();
        let dx = theta_derivative(&x.coeffs, &grid, GridKind::Loop).unwrap();
        let mut max_rel: f64 = 0.0;
        for k in 0..=grid.n() {
            let fd = plus[k].sub(&minus[k]).scale(1.0 / (2.0 * h));
            let want = ad_action(gamma.sample(k), &dx[k]);
            let scale = want.max_abs().max(1.0);
            max_rel = max_rel.max(fd.sub(&want).max_abs() / scale);
        }
        assert!(max_rel <= 1e-5, "dφ̂ identity rel err {max_rel}");
    }

    #[test]
    fn right_mc_theta_derivative_identity() {
        // ∂Θ̂ = Ad_γ ∂Θ − [Θ̂, φ̂] on loop tangents
        let spec = su2();
        let grid = GridSpec::new(256).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let gamma = random_loop(&spec, &grid, &mut rng);
        let x = random_loop_tangent(&spec, &grid, &mut rng);
        let hat: Vec<AlgebraElement> = gamma
            .as_path()
            .samples()
            .iter()
            .zip(&x.coeffs)
            .map(|(g, xk)| ad_action(g, xk))
            .collect();
        let d_hat = theta_derivative(&hat, &grid, GridKind::Loop).unwrap();
        let dx = theta_derivative(&x.coeffs, &grid, GridKind::Loop).unwrap();
        let phi_hat = gamma.higgs_hat();
        let mut max_rel: f64 = 0.0;
        for k in 0..=grid.n() {
            let want = ad_action(gamma.sample(k), &dx[k]).sub(&bracket(&hat[k], &phi_hat[k]));
            let scale = want.max_abs().max(1.0);
            max_rel = max_rel.max(d_hat[k].sub(&want).max_abs() / scale);
        }
        assert!(max_rel <= 1e-5, "∂Θ̂ identity rel err {max_rel}");
    }

    #[test]
    fn loop_family_construction_and_t_derivative() {
        let spec = su2();
        let gt = GridSpec::new(64).unwrap();
        let gth = GridSpec::new(32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let fam = random_loop_family(&spec, &gt, &gth, &mut rng);
        // base slice is the constant identity loop
        for j in 0..gth.num_samples() {
            let d = spec.matrix_dim();
            assert!(
                (&fam.slice(0).sample(j).mat - DMatrix::<Complex64>::identity(d, d)).norm()
                    <= 1e-12
            );
        }
        // grid t-derivative (4th-order stencil) vs closure t-derivative:
        // agreement at the stencil error level
        let grid_route = fam.t_log_derivative().unwrap();
        let k = 10;
        let closure_route = fam.t_log_derivative_at(gt.node(k), 1e-5).unwrap();
        for j in 0..gth.num_samples() {
            let err = grid_route[k][j].sub(&closure_route[j]).max_abs();
            assert!(err <= 5e-5, "t-derivative mismatch {err}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn higgs_cocycle_random_seeds(seed in 0u64..1000) {
            let spec = su2();
            let grid = GridSpec::new(32).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_path(&spec, &grid, &mut rng);
            let q = random_path(&spec, &grid, &mut rng);
            let pq = p.multiply(&q).unwrap();
            for k in 0..=grid.n() {
                let want = q.higgs()[k].add(&ad_action(&q.sample(k).inverse(), &p.higgs()[k]));
                prop_assert!(pq.higgs()[k].sub(&want).max_abs() <= 1e-10);
            }
        }

        #[test]
        fn loop_quadrature_of_harmonics_vanishes(m in 1usize..6) {
            // ∫ sin(mθ) over the periodic grid is zero to round-off
            let grid = GridSpec::new(64).unwrap();
            let vals: Vec<f64> = grid.nodes().iter().map(|&t| (m as f64 * t).sin()).collect();
            prop_assert!(quadrature(&vals, GridKind::Loop).abs() <= 1e-12);
        }
    }

    #[test]
    fn killing_pairing_available_on_grids() {
        // smoke: pair tangent grids against Higgs fields
        let spec = su2();
        let grid = GridSpec::new(32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let gamma = random_loop(&spec, &grid, &mut rng);
        let x = random_loop_tangent(&spec, &grid, &mut rng);
        let vals: Vec<f64> = x
            .coeffs
            .iter()
            .zip(gamma.higgs_hat())
            .map(|(a, b)| killing_form(a, &b, &spec).unwrap())
            .collect();
        let _ = quadrature(&vals, GridKind::Path);
    }
}
