//! Differential-form machinery on products of group, path/loop-space and
//! flat chart factors.
//!
//! A `Space` is an ordered list of factors; a `Point` and a `Tangent` are
//! matching tuples. Forms are `FormEvaluator`s: a degree, a value kind
//! (scalar or algebra-valued) and a closure from a point and k tangents
//! to a value. Maps between spaces are `SmoothMap`s with a point action
//! and a pushforward, either analytic or by central finite differences of
//! the point action along the canonical curve s ↦ point·exp(sX).
//!
//! The exterior derivative follows the Kobayashi-Nomizu normalization
//!
//!   df(X₀..X_k) = 1/(k+1) [ Σ_i (−1)^i D_{X_i} f(..X̂_i..)
//!                          + Σ_{i<j} (−1)^{i+j} f(\[X_i,X_j\], .., X̂_i, .., X̂_j, ..) ]
//!
//! with arguments extended left-invariantly on group-like factors (the
//! bracket is the pointwise coefficient bracket) and by constant
//! coefficients on chart factors (zero bracket). Wedge products of the
//! named forms are evaluated with the matching Alt normalization
//! (α∧β)(X₁..X_{p+q}) = 1/(p+q)!·Σ_σ sgn(σ)·α(..)β(..).
//!
//! Fiber integration over a trailing \[0,2π\] chart factor contracts the
//! distinguished fiber tangent in the first slot and carries a factor
//! equal to the integrand degree; that normalization is what makes the
//! fiberwise Stokes identity d∫ξ + ∫dξ = ξ|_{2π} − ξ|_0 hold verbatim
//! under the evaluation convention above.

use crate::error::CoreError;
use crate::lie::{bracket, AlgebraElement, GroupElement, GroupSpec};
use crate::pathspace::{
    quadrature, FamilyTangent, GridKind, GridSpec, LoopFamily, PathTangent, SampledLoop,
    SampledPath,
};
use crate::Result;
use nalgebra::DVector;
use std::collections::HashMap;
use std::sync::Arc;

/// One factor of a product space.
#[derive(Debug, Clone, PartialEq)]
pub enum SpaceFactor {
    /// Flat chart ℝ^m (also used for the \[0,2π\] fiber with m = 1).
    Chart(usize),
    /// The group G.
    Group(GroupSpec),
    /// Based path space PG on a θ-grid.
    Path(GroupSpec, GridSpec),
    /// Based loop space ΩG on a θ-grid.
    Loop(GroupSpec, GridSpec),
    /// Based families of loops PΩG on a (t, θ)-grid.
    Family(GroupSpec, GridSpec, GridSpec),
}

/// A product space.
#[derive(Debug, Clone, PartialEq)]
pub struct Space {
    pub factors: Vec<SpaceFactor>,
}

impl Space {
    pub fn new(factors: Vec<SpaceFactor>) -> Self {
        Space { factors }
    }

    pub fn group(spec: GroupSpec) -> Self {
        Space::new(vec![SpaceFactor::Group(spec)])
    }

    pub fn group_power(spec: GroupSpec, k: usize) -> Self {
        Space::new(vec![SpaceFactor::Group(spec); k])
    }

    pub fn loop_space(spec: GroupSpec, grid: GridSpec) -> Self {
        Space::new(vec![SpaceFactor::Loop(spec, grid)])
    }

    pub fn loop_power(spec: GroupSpec, grid: GridSpec, k: usize) -> Self {
        Space::new(vec![SpaceFactor::Loop(spec, grid); k])
    }

    pub fn path_space(spec: GroupSpec, grid: GridSpec) -> Self {
        Space::new(vec![SpaceFactor::Path(spec, grid)])
    }

    pub fn path_power(spec: GroupSpec, grid: GridSpec, k: usize) -> Self {
        Space::new(vec![SpaceFactor::Path(spec, grid); k])
    }

    /// PG × ΩG.
    pub fn path_loop(spec: GroupSpec, grid: GridSpec) -> Self {
        Space::new(vec![
            SpaceFactor::Path(spec, grid),
            SpaceFactor::Loop(spec, grid),
        ])
    }

    /// (PG ⋉ ΩG)².
    pub fn semidirect_squared(spec: GroupSpec, grid: GridSpec) -> Self {
        Space::new(vec![
            SpaceFactor::Path(spec, grid),
            SpaceFactor::Loop(spec, grid),
            SpaceFactor::Path(spec, grid),
            SpaceFactor::Loop(spec, grid),
        ])
    }

    pub fn chart(m: usize) -> Self {
        Space::new(vec![SpaceFactor::Chart(m)])
    }

    /// Q = chart × G.
    pub fn q(m: usize, spec: GroupSpec) -> Self {
        Space::new(vec![SpaceFactor::Chart(m), SpaceFactor::Group(spec)])
    }

    /// Q × G^k.
    pub fn q_group_power(m: usize, spec: GroupSpec, k: usize) -> Self {
        let mut f = vec![SpaceFactor::Chart(m), SpaceFactor::Group(spec)];
        f.extend(vec![SpaceFactor::Group(spec); k]);
        Space::new(f)
    }

    /// Q × PG^k.
    pub fn q_path_power(m: usize, spec: GroupSpec, grid: GridSpec, k: usize) -> Self {
        let mut f = vec![SpaceFactor::Chart(m), SpaceFactor::Group(spec)];
        f.extend(vec![SpaceFactor::Path(spec, grid); k]);
        Space::new(f)
    }

    /// PG × PΩG (the family base of the fiber-integration checks).
    pub fn path_family(spec: GroupSpec, grid_t: GridSpec, grid_theta: GridSpec) -> Self {
        Space::new(vec![
            SpaceFactor::Path(spec, grid_theta),
            SpaceFactor::Family(spec, grid_t, grid_theta),
        ])
    }

    /// Append a trailing \[0,2π\] fiber factor.
    pub fn with_fiber(&self) -> Self {
        let mut f = self.factors.clone();
        f.push(SpaceFactor::Chart(1));
        Space::new(f)
    }

    pub fn arity(&self) -> usize {
        self.factors.len()
    }
}

/// One component of a point.
#[derive(Debug, Clone)]
pub enum PointComponent {
    Chart(DVector<f64>),
    Group(GroupElement),
    Path(SampledPath),
    Loop(SampledLoop),
    Family(LoopFamily),
}

impl std::fmt::Debug for LoopFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LoopFamily")
            .field("spec", &self.spec)
            .field("grid_t", &self.grid_t)
            .field("grid_theta", &self.grid_theta)
            .finish()
    }
}

impl std::fmt::Debug for FamilyTangent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FamilyTangent")
            .field("grid_t", &self.grid_t)
            .finish()
    }
}

/// A point of a product space.
#[derive(Debug, Clone)]
pub struct Point {
    pub components: Vec<PointComponent>,
}

/// One component of a tangent vector (left representation on group-like
/// factors).
#[derive(Debug, Clone)]
pub enum TangentComponent {
    Chart(DVector<f64>),
    Group(AlgebraElement),
    Path(PathTangent),
    Loop(PathTangent),
    Family(FamilyTangent),
}

/// A tangent vector of a product space.
#[derive(Debug, Clone)]
pub struct Tangent {
    pub components: Vec<TangentComponent>,
}

impl Point {
    pub fn new(components: Vec<PointComponent>) -> Self {
        Point { components }
    }

    pub fn chart(&self, i: usize) -> Result<&DVector<f64>> {
        match &self.components[i] {
            PointComponent::Chart(v) => Ok(v),
            other => Err(CoreError::space(format!(
                "component {i} is {other:?}, expected chart"
            ))),
        }
    }

    pub fn group(&self, i: usize) -> Result<&GroupElement> {
        match &self.components[i] {
            PointComponent::Group(g) => Ok(g),
            other => Err(CoreError::space(format!(
                "component {i} is {other:?}, expected group"
            ))),
        }
    }

    pub fn path(&self, i: usize) -> Result<&SampledPath> {
        match &self.components[i] {
            PointComponent::Path(p) => Ok(p),
            other => Err(CoreError::space(format!(
                "component {i} is {other:?}, expected path"
            ))),
        }
    }

    pub fn loop_(&self, i: usize) -> Result<&SampledLoop> {
        match &self.components[i] {
            PointComponent::Loop(l) => Ok(l),
            other => Err(CoreError::space(format!(
                "component {i} is {other:?}, expected loop"
            ))),
        }
    }

    pub fn family(&self, i: usize) -> Result<&LoopFamily> {
        match &self.components[i] {
            PointComponent::Family(f) => Ok(f),
            other => Err(CoreError::space(format!(
                "component {i} is {other:?}, expected loop family"
            ))),
        }
    }

    pub fn matches(&self, space: &Space) -> bool {
        self.components.len() == space.factors.len()
            && self
                .components
                .iter()
                .zip(&space.factors)
                .all(|(c, f)| match (c, f) {
                    (PointComponent::Chart(v), SpaceFactor::Chart(m)) => v.len() == *m,
                    (PointComponent::Group(_), SpaceFactor::Group(_)) => true,
                    (PointComponent::Path(_), SpaceFactor::Path(_, _)) => true,
                    (PointComponent::Loop(_), SpaceFactor::Loop(_, _)) => true,
                    (PointComponent::Family(_), SpaceFactor::Family(_, _, _)) => true,
                    _ => false,
                })
    }
}

impl Tangent {
    pub fn new(components: Vec<TangentComponent>) -> Self {
        Tangent { components }
    }

    /// The zero tangent matching a space.
    pub fn zero(space: &Space) -> Self {
        let components = space
            .factors
            .iter()
            .map(|f| match f {
                SpaceFactor::Chart(m) => TangentComponent::Chart(DVector::zeros(*m)),
                SpaceFactor::Group(spec) => TangentComponent::Group(AlgebraElement::zero(spec)),
                SpaceFactor::Path(spec, grid) => {
                    TangentComponent::Path(PathTangent::zero(spec, grid))
                }
                SpaceFactor::Loop(spec, grid) => {
                    TangentComponent::Loop(PathTangent::zero(spec, grid))
                }
                SpaceFactor::Family(spec, gt, gth) => {
                    TangentComponent::Family(FamilyTangent::zero(spec, gt, gth))
                }
            })
            .collect();
        Tangent { components }
    }

    pub fn chart(&self, i: usize) -> Result<&DVector<f64>> {
        match &self.components[i] {
            TangentComponent::Chart(v) => Ok(v),
            other => Err(CoreError::space(format!(
                "tangent component {i} is {other:?}, expected chart"
            ))),
        }
    }

    pub fn group(&self, i: usize) -> Result<&AlgebraElement> {
        match &self.components[i] {
            TangentComponent::Group(x) => Ok(x),
            other => Err(CoreError::space(format!(
                "tangent component {i} is {other:?}, expected group"
            ))),
        }
    }

    pub fn grid(&self, i: usize) -> Result<&PathTangent> {
        match &self.components[i] {
            TangentComponent::Path(x) | TangentComponent::Loop(x) => Ok(x),
            other => Err(CoreError::space(format!(
                "tangent component {i} is {other:?}, expected path/loop grid"
            ))),
        }
    }

    pub fn family(&self, i: usize) -> Result<&FamilyTangent> {
        match &self.components[i] {
            TangentComponent::Family(x) => Ok(x),
            other => Err(CoreError::space(format!(
                "tangent component {i} is {other:?}, expected family"
            ))),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Tangent {
            components: self
                .components
                .iter()
                .map(|c| match c {
                    TangentComponent::Chart(v) => TangentComponent::Chart(v * s),
                    TangentComponent::Group(x) => TangentComponent::Group(x.scale(s)),
                    TangentComponent::Path(x) => TangentComponent::Path(x.scale(s)),
                    TangentComponent::Loop(x) => TangentComponent::Loop(x.scale(s)),
                    TangentComponent::Family(x) => TangentComponent::Family(x.scale(s)),
                })
                .collect(),
        }
    }

    /// Componentwise bracket of the left-invariant extensions: pointwise
    /// bracket on group-like factors, zero on chart factors.
    pub fn invariant_bracket(&self, other: &Self) -> Self {
        Tangent {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| match (a, b) {
                    (TangentComponent::Chart(v), TangentComponent::Chart(_)) => {
                        TangentComponent::Chart(DVector::zeros(v.len()))
                    }
                    (TangentComponent::Group(x), TangentComponent::Group(y)) => {
                        TangentComponent::Group(bracket(x, y))
                    }
                    (TangentComponent::Path(x), TangentComponent::Path(y)) => {
                        TangentComponent::Path(x.pointwise_bracket(y))
                    }
                    (TangentComponent::Loop(x), TangentComponent::Loop(y)) => {
                        TangentComponent::Loop(x.pointwise_bracket(y))
                    }
                    (TangentComponent::Family(x), TangentComponent::Family(y)) => {
                        TangentComponent::Family(x.pointwise_bracket(y))
                    }
                    _ => panic!("bracket of mismatched tangent components"),
                })
                .collect(),
        }
    }
}

/// Move a point along a tangent: g·exp(sX) on group-like factors,
/// x + s·v on chart factors.
pub fn move_point(point: &Point, tangent: &Tangent, s: f64) -> Result<Point> {
    let components = point
        .components
        .iter()
        .zip(&tangent.components)
        .map(|(p, v)| -> Result<PointComponent> {
            Ok(match (p, v) {
                (PointComponent::Chart(x), TangentComponent::Chart(dv)) => {
                    PointComponent::Chart(x + dv * s)
                }
                (PointComponent::Group(g), TangentComponent::Group(x)) => {
                    let e = crate::lie::exp_matrix(&(&x.mat * num_complex::Complex64::new(s, 0.0)));
                    PointComponent::Group(GroupElement { mat: &g.mat * e })
                }
                (PointComponent::Path(p), TangentComponent::Path(x)) => {
                    PointComponent::Path(p.translate(x, s)?)
                }
                (PointComponent::Loop(l), TangentComponent::Loop(x)) => {
                    PointComponent::Loop(l.translate(x, s)?)
                }
                (PointComponent::Family(f), TangentComponent::Family(w)) => {
                    PointComponent::Family(f.translate(w, s)?)
                }
                _ => {
                    return Err(CoreError::space(
                        "point/tangent component mismatch in move_point",
                    ))
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Point::new(components))
}

/// Value of a form: scalar or Lie-algebra valued.
#[derive(Debug, Clone)]
pub enum Value {
    Scalar(f64),
    Algebra(AlgebraElement),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Scalar,
    AlgebraValued,
}

impl Value {
    pub fn scalar(&self) -> Result<f64> {
        match self {
            Value::Scalar(v) => Ok(*v),
            Value::Algebra(_) => Err(CoreError::invalid("expected scalar value")),
        }
    }

    pub fn algebra(&self) -> Result<&AlgebraElement> {
        match self {
            Value::Algebra(a) => Ok(a),
            Value::Scalar(_) => Err(CoreError::invalid("expected algebra value")),
        }
    }

    pub fn add(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Scalar(a), Value::Scalar(b)) => Value::Scalar(a + b),
            (Value::Algebra(a), Value::Algebra(b)) => Value::Algebra(a.add(b)),
            _ => panic!("adding mismatched form values"),
        }
    }

    pub fn sub(&self, other: &Value) -> Value {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Value {
        match self {
            Value::Scalar(a) => Value::Scalar(a * s),
            Value::Algebra(a) => Value::Algebra(a.scale(s)),
        }
    }

    pub fn zero_like(kind: ValueKind, spec: &GroupSpec) -> Value {
        match kind {
            ValueKind::Scalar => Value::Scalar(0.0),
            ValueKind::AlgebraValued => Value::Algebra(AlgebraElement::zero(spec)),
        }
    }

    pub fn magnitude(&self) -> f64 {
        match self {
            Value::Scalar(a) => a.abs(),
            Value::Algebra(a) => a.max_abs(),
        }
    }
}

type EvalFn = Arc<dyn Fn(&Point, &[Tangent]) -> Result<Value> + Send + Sync>;

/// A differential form (or, degree 0, a function) as an evaluator.
#[derive(Clone)]
pub struct FormEvaluator {
    pub space: Space,
    pub degree: usize,
    pub value_kind: ValueKind,
    eval: EvalFn,
}

impl FormEvaluator {
    pub fn new(
        space: Space,
        degree: usize,
        value_kind: ValueKind,
        eval: impl Fn(&Point, &[Tangent]) -> Result<Value> + Send + Sync + 'static,
    ) -> Self {
        FormEvaluator {
            space,
            degree,
            value_kind,
            eval: Arc::new(eval),
        }
    }

    pub fn eval(&self, point: &Point, tangents: &[Tangent]) -> Result<Value> {
        if tangents.len() != self.degree {
            return Err(CoreError::invalid(format!(
                "form of degree {} called with {} tangents",
                self.degree,
                tangents.len()
            )));
        }
        if !point.matches(&self.space) {
            return Err(CoreError::space(
                "point does not match the form's space",
            ));
        }
        (self.eval)(point, tangents)
    }

    /// Evaluate expecting a scalar.
    pub fn eval_scalar(&self, point: &Point, tangents: &[Tangent]) -> Result<f64> {
        self.eval(point, tangents)?.scalar()
    }
}

type ApplyFn = Arc<dyn Fn(&Point) -> Result<Point> + Send + Sync>;
type PushFn = Arc<dyn Fn(&Point, &Tangent) -> Result<Tangent> + Send + Sync>;

/// A smooth map between spaces with point action and pushforward.
#[derive(Clone)]
pub struct SmoothMap {
    pub name: String,
    pub domain: Space,
    pub codomain: Space,
    apply: ApplyFn,
    push: Option<PushFn>,
    /// step for the finite-difference pushforward fallback
    pub fd_step: f64,
}

impl SmoothMap {
    pub fn new(
        name: impl Into<String>,
        domain: Space,
        codomain: Space,
        apply: impl Fn(&Point) -> Result<Point> + Send + Sync + 'static,
    ) -> Self {
        SmoothMap {
            name: name.into(),
            domain,
            codomain,
            apply: Arc::new(apply),
            push: None,
            fd_step: 1e-5,
        }
    }

    pub fn with_pushforward(
        mut self,
        push: impl Fn(&Point, &Tangent) -> Result<Tangent> + Send + Sync + 'static,
    ) -> Self {
        self.push = Some(Arc::new(push));
        self
    }

    pub fn identity(space: Space) -> Self {
        SmoothMap {
            name: "identity".into(),
            domain: space.clone(),
            codomain: space,
            apply: Arc::new(|p: &Point| Ok(p.clone())),
            push: Some(Arc::new(|_: &Point, v: &Tangent| Ok(v.clone()))),
            fd_step: 1e-5,
        }
    }

    pub fn apply(&self, point: &Point) -> Result<Point> {
        (self.apply)(point)
    }

    /// Pushforward: analytic if registered, else finite differences.
    pub fn pushforward(&self, point: &Point, tangent: &Tangent) -> Result<Tangent> {
        match &self.push {
            Some(p) => p(point, tangent),
            None => self.pushforward_fd(point, tangent, self.fd_step),
        }
    }

    /// Finite-difference pushforward along s ↦ point·exp(s·tangent).
    pub fn pushforward_fd(&self, point: &Point, tangent: &Tangent, h: f64) -> Result<Tangent> {
        let base = self.apply(point)?;
        let plus = self.apply(&move_point(point, tangent, h)?)?;
        let minus = self.apply(&move_point(point, tangent, -h)?)?;
        let components = base
            .components
            .iter()
            .zip(plus.components.iter().zip(&minus.components))
            .map(|(b, (p, m))| -> Result<TangentComponent> {
                Ok(match (b, p, m) {
                    (
                        PointComponent::Chart(xb),
                        PointComponent::Chart(xp),
                        PointComponent::Chart(xm),
                    ) => {
                        let _ = xb;
                        TangentComponent::Chart((xp - xm) / (2.0 * h))
                    }
                    (
                        PointComponent::Group(gb),
                        PointComponent::Group(gp),
                        PointComponent::Group(gm),
                    ) => {
                        let diff = (&gp.mat - &gm.mat) * num_complex::Complex64::new(1.0 / (2.0 * h), 0.0);
                        // left-rep coefficient; project with a generic
                        // anti-Hermitian cleanup via the stored spec
                        let raw = gb.mat.adjoint() * diff;
                        TangentComponent::Group(AlgebraElement { mat: raw })
                    }
                    (
                        PointComponent::Path(pb),
                        PointComponent::Path(pp),
                        PointComponent::Path(pm),
                    ) => {
                        let coeffs = (0..pb.grid().num_samples())
                            .map(|k| {
                                let diff = (&pp.sample(k).mat - &pm.sample(k).mat)
                                    * num_complex::Complex64::new(1.0 / (2.0 * h), 0.0);
                                crate::lie::project_algebra(
                                    &(pb.sample(k).mat.adjoint() * diff),
                                    pb.spec(),
                                )
                            })
                            .collect();
                        TangentComponent::Path(PathTangent { coeffs })
                    }
                    (
                        PointComponent::Loop(lb),
                        PointComponent::Loop(lp),
                        PointComponent::Loop(lm),
                    ) => {
                        let pb = lb.as_path();
                        let coeffs = (0..pb.grid().num_samples())
                            .map(|k| {
                                let diff = (&lp.sample(k).mat - &lm.sample(k).mat)
                                    * num_complex::Complex64::new(1.0 / (2.0 * h), 0.0);
                                crate::lie::project_algebra(
                                    &(pb.sample(k).mat.adjoint() * diff),
                                    pb.spec(),
                                )
                            })
                            .collect();
                        TangentComponent::Loop(PathTangent { coeffs })
                    }
                    _ => {
                        return Err(CoreError::invalid(
                            "finite-difference pushforward unsupported for this factor",
                        ))
                    }
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Tangent::new(components))
    }

    /// Composition other ∘ self (apply self first).
    pub fn then(&self, other: &SmoothMap) -> Result<SmoothMap> {
        if self.codomain != other.domain {
            return Err(CoreError::space(format!(
                "cannot compose {} (codomain) with {} (domain)",
                self.name, other.name
            )));
        }
        let f = self.clone();
        let g = other.clone();
        let f2 = self.clone();
        let g2 = other.clone();
        Ok(SmoothMap {
            name: format!("{} ∘ {}", other.name, self.name),
            domain: self.domain.clone(),
            codomain: other.codomain.clone(),
            apply: Arc::new(move |p| g.apply(&f.apply(p)?)),
            push: Some(Arc::new(move |p, v| {
                let mid = f2.apply(p)?;
                let pushed = f2.pushforward(p, v)?;
                g2.pushforward(&mid, &pushed)
            })),
            fd_step: self.fd_step,
        })
    }
}

/// Pullback (map*f)(p; v₁..v_k) = f(map(p); push v₁, .., push v_k).
pub fn pullback(f: &FormEvaluator, map: &SmoothMap) -> Result<FormEvaluator> {
    if map.codomain != f.space {
        return Err(CoreError::space(format!(
            "pullback along {}: codomain does not match form space",
            map.name
        )));
    }
    let inner = f.clone();
    let map = map.clone();
    Ok(FormEvaluator::new(
        map.domain.clone(),
        f.degree,
        f.value_kind,
        move |p, vs| {
            let image = map.apply(p)?;
            let pushed: Vec<Tangent> = vs
                .iter()
                .map(|v| map.pushforward(p, v))
                .collect::<Result<_>>()?;
            inner.eval(&image, &pushed)
        },
    ))
}

/// An ordered family of face maps d_0..d_n sharing domain and codomain.
#[derive(Clone)]
pub struct FaceLevel {
    pub name: String,
    pub maps: Vec<SmoothMap>,
    pub direction: Direction,
}

impl FaceLevel {
    pub fn new(name: impl Into<String>, maps: Vec<SmoothMap>) -> Result<Self> {
        if maps.is_empty() {
            return Err(CoreError::invalid("face level needs at least one map"));
        }
        let dom = maps[0].domain.clone();
        let cod = maps[0].codomain.clone();
        for m in &maps {
            if m.domain != dom || m.codomain != cod {
                return Err(CoreError::space(format!(
                    "face maps of level {:?} disagree on spaces",
                    m.name
                )));
            }
        }
        Ok(FaceLevel {
            name: name.into(),
            maps,
            direction: Direction::Horizontal,
        })
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn domain(&self) -> &Space {
        &self.maps[0].domain
    }

    pub fn codomain(&self) -> &Space {
        &self.maps[0].codomain
    }
}

/// Horizontal or vertical direction of a bisimplicial level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Horizontal,
    Vertical,
}

/// Named collection of face levels for a (bi)simplicial arrangement.
#[derive(Clone, Default)]
pub struct FaceMapTable {
    levels: HashMap<String, FaceLevel>,
}

impl FaceMapTable {
    pub fn new() -> Self {
        FaceMapTable {
            levels: HashMap::new(),
        }
    }

    pub fn insert(&mut self, level: FaceLevel) {
        self.levels.insert(level.name.clone(), level);
    }

    pub fn level(&self, name: &str) -> Result<&FaceLevel> {
        self.levels
            .get(name)
            .ok_or_else(|| CoreError::invalid(format!("no face level named {name}")))
    }

    pub fn names(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.levels.keys().map(|s| s.as_str()).collect();
        v.sort();
        v
    }
}

/// Simplicial coboundary δf = Σ_i (−1)^i d_i^* f.
pub fn coboundary(f: &FormEvaluator, faces: &FaceLevel) -> Result<FormEvaluator> {
    if faces.codomain() != &f.space {
        return Err(CoreError::space(format!(
            "coboundary: face level {} does not land in the form's space",
            faces.name
        )));
    }
    let pulled: Vec<FormEvaluator> = faces
        .maps
        .iter()
        .map(|m| pullback(f, m))
        .collect::<Result<_>>()?;
    let kind = f.value_kind;
    Ok(FormEvaluator::new(
        faces.domain().clone(),
        f.degree,
        kind,
        move |p, vs| {
            let mut acc: Option<Value> = None;
            for (i, g) in pulled.iter().enumerate() {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                let v = g.eval(p, vs)?.scale(sign);
                acc = Some(match acc {
                    None => v,
                    Some(a) => a.add(&v),
                });
            }
            Ok(acc.expect("face level is nonempty"))
        },
    ))
}

/// Numerical exterior derivative in the Kobayashi-Nomizu normalization.
///
/// Directional derivatives are central differences with step h along
/// point·exp(sX); the bracket terms use the pointwise coefficient bracket
/// of the left-invariant extensions.
pub fn exterior_derivative(f: &FormEvaluator, h: f64) -> Result<FormEvaluator> {
    if f.degree > 3 {
        return Err(CoreError::UnsupportedDegree {
            operation: "exterior_derivative",
            degree: f.degree,
        });
    }
    let inner = f.clone();
    let k = f.degree;
    let kind = f.value_kind;
    Ok(FormEvaluator::new(
        f.space.clone(),
        k + 1,
        kind,
        move |p, vs| {
            let mut acc: Option<Value> = None;
            let add = |v: Value, acc: &mut Option<Value>| {
                *acc = Some(match acc.take() {
                    None => v,
                    Some(a) => a.add(&v),
                });
            };
            // Σ_i (−1)^i D_{v_i} f(.. v̂_i ..)
            for i in 0..=k {
                let rest: Vec<Tangent> = vs
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, v)| v.clone())
                    .collect();
                let plus = inner.eval(&move_point(p, &vs[i], h)?, &rest)?;
                let minus = inner.eval(&move_point(p, &vs[i], -h)?, &rest)?;
                let d = plus.sub(&minus).scale(1.0 / (2.0 * h));
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                add(d.scale(sign), &mut acc);
            }
            // Σ_{i<j} (−1)^{i+j} f([v_i,v_j], .., v̂_i, .., v̂_j, ..)
            for i in 0..=k {
                for j in (i + 1)..=k {
                    let br = vs[i].invariant_bracket(&vs[j]);
                    let mut args = vec![br];
                    for (l, v) in vs.iter().enumerate() {
                        if l != i && l != j {
                            args.push(v.clone());
                        }
                    }
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    let v = inner.eval(p, &args)?.scale(sign);
                    add(v, &mut acc);
                }
            }
            Ok(acc.expect("k+1 >= 1 terms").scale(1.0 / (k + 1) as f64))
        },
    ))
}

/// Fiber integration over a trailing \[0,2π\] chart factor.
///
/// (∫f)_x(X₁..X_{k−1}) = k · ∫₀^{2π} f_{(x,t)}((0,T_t),(X₁,0),..) dt with
/// the contraction in the first slot; the degree factor k pairs the
/// first-slot definition with the ½-evaluation convention so that the
/// separable case ∫ dt∧π*a = 2π·a and the fiberwise Stokes identity hold.
pub fn fiber_integrate(f: &FormEvaluator, t_grid: &GridSpec) -> Result<FormEvaluator> {
    if f.degree == 0 {
        return Err(CoreError::UnsupportedDegree {
            operation: "fiber_integrate",
            degree: 0,
        });
    }
    match f.space.factors.last() {
        Some(SpaceFactor::Chart(1)) => {}
        _ => {
            return Err(CoreError::space(
                "fiber integration needs a trailing 1-dimensional chart factor",
            ))
        }
    }
    let base = Space::new(f.space.factors[..f.space.arity() - 1].to_vec());
    let inner = f.clone();
    let t_grid = *t_grid;
    let k = f.degree;
    let kind = f.value_kind;
    Ok(FormEvaluator::new(
        base.clone(),
        k - 1,
        kind,
        move |p, vs| {
            let mut fiber_t = Tangent::zero(&inner.space);
            let last = fiber_t.components.len() - 1;
            fiber_t.components[last] = TangentComponent::Chart(DVector::from_element(1, 1.0));
            // lift the base tangents with zero fiber component
            let lifted: Vec<Tangent> = vs
                .iter()
                .map(|v| {
                    let mut c = v.components.clone();
                    c.push(TangentComponent::Chart(DVector::zeros(1)));
                    Tangent::new(c)
                })
                .collect();
            let mut samples = Vec::with_capacity(t_grid.num_samples());
            for node in t_grid.nodes() {
                let mut comps = p.components.clone();
                comps.push(PointComponent::Chart(DVector::from_element(1, node)));
                let tp = Point::new(comps);
                let mut args = Vec::with_capacity(k);
                args.push(fiber_t.clone());
                args.extend(lifted.iter().cloned());
                samples.push(inner.eval(&tp, &args)?.scalar()?);
            }
            Ok(Value::Scalar(
                k as f64 * quadrature(&samples, GridKind::Path),
            ))
        },
    ))
}

/// One output component of a simplicial face map, in terms of the input
/// components.
#[derive(Debug, Clone, Copy)]
pub enum FaceSlot {
    /// Pass input component i through.
    Keep(usize),
    /// path_i · loop_j (the PG-level product).
    MulPathLoop(usize, usize),
    /// loop_i · loop_j.
    MulLoopLoop(usize, usize),
    /// path_i · path_j.
    MulPathPath(usize, usize),
    /// group_i · group_j.
    MulGroupGroup(usize, usize),
    /// group_i · (path_j evaluated at 2π): the action along ev_{2π}.
    ActEndpoint(usize, usize),
    /// Ad_{path_i⁻¹}(loop_j) = p⁻¹ γ p.
    InvAdConj(usize, usize),
    /// path_i ↦ path_i⁻¹.
    InvPath(usize),
    /// path_i evaluated at 2π (a group component).
    EvEndpoint(usize),
}

/// Build a face map from slots. The pushforward is assembled from the
/// analytic tangent maps of the slot operations, so composites of these
/// faces have exact (non-finite-difference) pushforwards.
pub fn simplicial_face(
    name: impl Into<String>,
    domain: &Space,
    slots: Vec<FaceSlot>,
) -> Result<SmoothMap> {
    let out_factors: Vec<SpaceFactor> = slots
        .iter()
        .map(|s| -> Result<SpaceFactor> {
            Ok(match *s {
                FaceSlot::Keep(i) => domain.factors[i].clone(),
                FaceSlot::MulPathLoop(i, _) | FaceSlot::MulPathPath(i, _) => {
                    domain.factors[i].clone()
                }
                FaceSlot::MulLoopLoop(i, _) | FaceSlot::InvAdConj(_, i) => {
                    domain.factors[i].clone()
                }
                FaceSlot::MulGroupGroup(i, _) | FaceSlot::ActEndpoint(i, _) => {
                    domain.factors[i].clone()
                }
                FaceSlot::InvPath(i) => domain.factors[i].clone(),
                FaceSlot::EvEndpoint(i) => match &domain.factors[i] {
                    SpaceFactor::Path(spec, _) => SpaceFactor::Group(*spec),
                    other => {
                        return Err(CoreError::space(format!(
                            "EvEndpoint expects a path factor, found {other:?}"
                        )))
                    }
                },
            })
        })
        .collect::<Result<_>>()?;
    let codomain = Space::new(out_factors);
    let slots_apply = slots.clone();
    let slots_push = slots;
    let apply = move |p: &Point| -> Result<Point> {
        let comps = slots_apply
            .iter()
            .map(|s| -> Result<PointComponent> {
                Ok(match *s {
                    FaceSlot::Keep(i) => p.components[i].clone(),
                    FaceSlot::MulPathLoop(i, j) => PointComponent::Path(
                        crate::pathspace::path_times_loop(p.path(i)?, p.loop_(j)?)?,
                    ),
                    FaceSlot::MulLoopLoop(i, j) => {
                        PointComponent::Loop(p.loop_(i)?.multiply(p.loop_(j)?)?)
                    }
                    FaceSlot::MulPathPath(i, j) => {
                        PointComponent::Path(p.path(i)?.multiply(p.path(j)?)?)
                    }
                    FaceSlot::MulGroupGroup(i, j) => {
                        PointComponent::Group(p.group(i)?.multiply(p.group(j)?))
                    }
                    FaceSlot::ActEndpoint(i, j) => {
                        PointComponent::Group(p.group(i)?.multiply(p.path(j)?.endpoint()))
                    }
                    FaceSlot::InvAdConj(i, j) => PointComponent::Loop(
                        crate::pathspace::loop_adjoint_action(&p.path(i)?.inverse(), p.loop_(j)?)?,
                    ),
                    FaceSlot::InvPath(i) => PointComponent::Path(p.path(i)?.inverse()),
                    FaceSlot::EvEndpoint(i) => {
                        PointComponent::Group(p.path(i)?.endpoint().clone())
                    }
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Point::new(comps))
    };
    let push = move |p: &Point, v: &Tangent| -> Result<Tangent> {
        let comps = slots_push
            .iter()
            .map(|s| -> Result<TangentComponent> {
                Ok(match *s {
                    FaceSlot::Keep(i) => v.components[i].clone(),
                    FaceSlot::MulPathLoop(i, j) => TangentComponent::Path(
                        crate::pathspace::push_mult(
                            p.loop_(j)?.as_path(),
                            v.grid(i)?,
                            v.grid(j)?,
                        ),
                    ),
                    FaceSlot::MulLoopLoop(i, j) => TangentComponent::Loop(
                        crate::pathspace::push_mult(
                            p.loop_(j)?.as_path(),
                            v.grid(i)?,
                            v.grid(j)?,
                        ),
                    ),
                    FaceSlot::MulPathPath(i, j) => TangentComponent::Path(
                        crate::pathspace::push_mult(p.path(j)?, v.grid(i)?, v.grid(j)?),
                    ),
                    FaceSlot::MulGroupGroup(i, j) => {
                        let h = p.group(j)?;
                        let pushed = crate::lie::ad_action(&h.inverse(), v.group(i)?)
                            .add(v.group(j)?);
                        TangentComponent::Group(pushed)
                    }
                    FaceSlot::ActEndpoint(i, j) => {
                        let end = p.path(j)?.endpoint();
                        let x_end = v.grid(j)?.coeffs.last().unwrap();
                        let pushed =
                            crate::lie::ad_action(&end.inverse(), v.group(i)?).add(x_end);
                        TangentComponent::Group(pushed)
                    }
                    FaceSlot::InvAdConj(i, j) => {
                        // tangent of (q, γ) ↦ q⁻¹γq on (Y, W):
                        //   −Ad_{q⁻¹}(Ad_{γ⁻¹}(Ad_q Y)) + Ad_{q⁻¹}W + Y
                        let q = p.path(i)?;
                        let gamma = p.loop_(j)?;
                        let y = v.grid(i)?;
                        let w = v.grid(j)?;
                        let coeffs = (0..q.grid().num_samples())
                            .map(|k| {
                                let qk = q.sample(k);
                                let gk = gamma.sample(k);
                                let qi = qk.inverse();
                                let t1 = crate::lie::ad_action(
                                    &qi,
                                    &crate::lie::ad_action(
                                        &gk.inverse(),
                                        &crate::lie::ad_action(qk, &y.coeffs[k]),
                                    ),
                                )
                                .neg();
                                let t2 = crate::lie::ad_action(&qi, &w.coeffs[k]);
                                t1.add(&t2).add(&y.coeffs[k])
                            })
                            .collect();
                        TangentComponent::Loop(PathTangent { coeffs })
                    }
                    FaceSlot::InvPath(i) => TangentComponent::Path(
                        crate::pathspace::push_inverse(p.path(i)?, v.grid(i)?),
                    ),
                    FaceSlot::EvEndpoint(i) => TangentComponent::Group(
                        v.grid(i)?.coeffs.last().unwrap().clone(),
                    ),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Tangent::new(comps))
    };
    Ok(SmoothMap::new(name, domain.clone(), codomain, apply).with_pushforward(push))
}

/// Registry of named maps (for pushforward-by-name and the face tables).
#[derive(Clone, Default)]
pub struct MapRegistry {
    maps: HashMap<String, SmoothMap>,
}

impl MapRegistry {
    pub fn new() -> Self {
        MapRegistry {
            maps: HashMap::new(),
        }
    }

    pub fn insert(&mut self, map: SmoothMap) {
        self.maps.insert(map.name.clone(), map);
    }

    pub fn get(&self, name: &str) -> Result<&SmoothMap> {
        self.maps
            .get(name)
            .ok_or_else(|| CoreError::UnknownMap(name.into()))
    }

    /// Pushforward of tangents through a registered map.
    pub fn pushforward(
        &self,
        name: &str,
        point: &Point,
        tangents: &[Tangent],
    ) -> Result<Vec<Tangent>> {
        let map = self.get(name)?;
        tangents.iter().map(|v| map.pushforward(point, v)).collect()
    }

    pub fn names(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.maps.keys().map(|s| s.as_str()).collect();
        v.sort();
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{killing_form, random_algebra, su2_basis, GroupSpec};
    use crate::pathspace::{random_path, random_path_tangent};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn su2() -> GroupSpec {
        GroupSpec::su(2)
    }

    /// Θ as an algebra-valued 1-form on G.
    fn theta(spec: GroupSpec) -> FormEvaluator {
        FormEvaluator::new(
            Space::group(spec),
            1,
            ValueKind::AlgebraValued,
            move |_p, vs| Ok(Value::Algebra(vs[0].group(0)?.clone())),
        )
    }

    #[test]
    fn pullback_along_identity_and_degree_zero() {
        let spec = su2();
        let f = theta(spec);
        let id = SmoothMap::identity(Space::group(spec));
        let pf = pullback(&f, &id).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = crate::lie::random_group(&spec, 1.0, &mut rng);
        let x = random_algebra(&spec, 1.0, &mut rng);
        let p = Point::new(vec![PointComponent::Group(g)]);
        let v = Tangent::new(vec![TangentComponent::Group(x.clone())]);
        let a = f.eval(&p, std::slice::from_ref(&v)).unwrap();
        let b = pf.eval(&p, &[v]).unwrap();
        assert!(a.algebra().unwrap().sub(b.algebra().unwrap()).max_abs() <= 1e-14);

        // degree-0 pullback is composition with the map
        let c = FormEvaluator::new(Space::group(spec), 0, ValueKind::Scalar, |p, _| {
            Ok(Value::Scalar(p.group(0).unwrap().mat[(0, 0)].re))
        });
        let pc = pullback(&c, &id).unwrap();
        assert_eq!(
            c.eval(&p, &[]).unwrap().scalar().unwrap(),
            pc.eval(&p, &[]).unwrap().scalar().unwrap()
        );
    }

    #[test]
    fn ev_pullback_of_quadratic_matches_endpoint() {
        // ⟨Θ,Θ⟩-type quadratic evaluator on G pulled back along ev_{2π}
        // agrees with direct endpoint evaluation on PG.
        let spec = su2();
        let grid = GridSpec::new(32).unwrap();
        let quad = FormEvaluator::new(Space::group(spec), 1, ValueKind::Scalar, move |_p, vs| {
            let x = vs[0].group(0)?;
            Ok(Value::Scalar(killing_form(x, x, &spec)?))
        });
        let ev = SmoothMap::new(
            "ev2pi",
            Space::path_space(spec, grid),
            Space::group(spec),
            |p| {
                Ok(Point::new(vec![PointComponent::Group(
                    p.path(0)?.endpoint().clone(),
                )]))
            },
        )
        .with_pushforward(|_p, v| {
            Ok(Tangent::new(vec![TangentComponent::Group(
                v.grid(0)?.coeffs.last().unwrap().clone(),
            )]))
        });
        let pulled = pullback(&quad, &ev).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let path = random_path(&spec, &grid, &mut rng);
        let x = random_path_tangent(&spec, &grid, &mut rng);
        let want = killing_form(x.coeffs.last().unwrap(), x.coeffs.last().unwrap(), &spec).unwrap();
        let p = Point::new(vec![PointComponent::Path(path)]);
        let v = Tangent::new(vec![TangentComponent::Path(x)]);
        let got = pulled.eval(&p, &[v]).unwrap().scalar().unwrap();
        assert!((got - want).abs() <= 1e-12);
    }

    #[test]
    fn maurer_cartan_structure_equation() {
        // dΘ + ½[Θ,Θ] = 0 under the ½-evaluation convention
        let spec = su2();
        let f = theta(spec);
        let df = exterior_derivative(&f, 1e-4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..6 {
            let g = crate::lie::random_group(&spec, 1.0, &mut rng);
            let x = random_algebra(&spec, 1.0, &mut rng);
            let y = random_algebra(&spec, 1.0, &mut rng);
            let p = Point::new(vec![PointComponent::Group(g)]);
            let vx = Tangent::new(vec![TangentComponent::Group(x.clone())]);
            let vy = Tangent::new(vec![TangentComponent::Group(y.clone())]);
            let d = df.eval(&p, &[vx, vy]).unwrap();
            let half_bracket = crate::lie::bracket(&x, &y).scale(0.5);
            let resid = d.algebra().unwrap().add(&half_bracket);
            let scale = half_bracket.max_abs().max(1.0);
            assert!(resid.max_abs() / scale <= 1e-6, "MC residual {}", resid.max_abs());
        }
    }

    #[test]
    fn exterior_derivative_of_constant_is_zero() {
        let spec = su2();
        let c = FormEvaluator::new(Space::group(spec), 0, ValueKind::Scalar, |_, _| {
            Ok(Value::Scalar(2.5))
        });
        let dc = exterior_derivative(&c, 1e-4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = crate::lie::random_group(&spec, 1.0, &mut rng);
        let x = random_algebra(&spec, 1.0, &mut rng);
        let p = Point::new(vec![PointComponent::Group(g)]);
        let v = Tangent::new(vec![TangentComponent::Group(x)]);
        assert!(dc.eval(&p, &[v]).unwrap().scalar().unwrap().abs() <= 1e-12);
    }

    #[test]
    fn circulation_oracle_for_exterior_derivative() {
        // independent check of the 2-form normalization: the circulation
        // of a 1-form around the small square spanned by two tangents is
        // 2·df(X,Y)·δ² + O(δ³) under the ½ convention.
        let spec = su2();
        // a 1-form with nontrivial base dependence: f(g; gX) = ⟨A(g), X⟩
        // where A(g) = Ad_{g⁻¹} C
        let c0 = su2_basis()[2].clone();
        let cc = c0.clone();
        let f = FormEvaluator::new(
            Space::group(spec),
            1,
            ValueKind::Scalar,
            move |p, vs| {
                let g = p.group(0)?;
                let a = crate::lie::ad_action(&g.inverse(), &cc);
                killing_form(&a, vs[0].group(0)?, &spec).map(Value::Scalar)
            },
        );
        let df = exterior_derivative(&f, 1e-5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = crate::lie::random_group(&spec, 0.8, &mut rng);
        let x = random_algebra(&spec, 1.0, &mut rng);
        let y = random_algebra(&spec, 1.0, &mut rng);
        let p = Point::new(vec![PointComponent::Group(g.clone())]);
        let vx = Tangent::new(vec![TangentComponent::Group(x.clone())]);
        let vy = Tangent::new(vec![TangentComponent::Group(y.clone())]);
        let d_val = df.eval(&p, &[vx.clone(), vy.clone()]).unwrap().scalar().unwrap();

        // Circulation of f around the boundary of the parametrized square
        // (s,t) ↦ g·e^{sX}e^{tY}, s,t ∈ [0,δ]. The top edge carries the
        // transported coefficient Ad_{e^{-δY}} X so the square closes;
        // Stokes gives ∮f = 2·df(X,Y)·δ² + O(δ³) under the ½ convention.
        let delta = 0.02;
        let steps = 400;
        let ds = delta / steps as f64;
        let eval_at = |pt: &Point, t: &Tangent| {
            f.eval(pt, std::slice::from_ref(t)).unwrap().scalar().unwrap()
        };
        let point_at = |s: f64, t: f64| -> Point {
            let moved = move_point(&p, &vx, s).unwrap();
            move_point(&moved, &vy, t).unwrap()
        };
        let e_y = crate::lie::exp_matrix(
            &(&y.mat * num_complex::Complex64::new(-delta, 0.0)),
        );
        let x_top = AlgebraElement {
            mat: &e_y * &x.mat * e_y.adjoint(),
        };
        let v_top = Tangent::new(vec![TangentComponent::Group(x_top)]);
        let mut circ = 0.0;
        for i in 0..steps {
            let s_mid = (i as f64 + 0.5) * ds;
            // bottom (t = 0) along X, forward
            circ += eval_at(&point_at(s_mid, 0.0), &vx) * ds;
            // top (t = δ) along the transported X, backward
            circ -= eval_at(&point_at(s_mid, delta), &v_top) * ds;
            // right (s = δ) along Y, forward
            circ += eval_at(&point_at(delta, s_mid), &vy) * ds;
            // left (s = 0) along Y, backward
            circ -= eval_at(&point_at(0.0, s_mid), &vy) * ds;
        }

        let want = 2.0 * d_val * delta * delta;
        assert!(
            (circ - want).abs() <= 2e-2 * want.abs().max(1e-6) + 1e-7,
            "circulation {circ} vs 2·df·δ² {want}"
        );
    }

    #[test]
    fn fiber_integration_separable_example() {
        // ∫ over the fiber of dt ∧ π*a = 2π·a for a 1-form a on G
        let spec = su2();
        let c0 = su2_basis()[0].clone();
        let cc = c0.clone();
        let space = Space::group(spec).with_fiber();
        // (dt∧π*a)(U,V) = ½( dt(U)·a(V) − dt(V)·a(U) )
        let two_form = FormEvaluator::new(space, 2, ValueKind::Scalar, move |_p, vs| {
            let du = vs[0].chart(1)?[0];
            let dv = vs[1].chart(1)?[0];
            let au = killing_form(&cc, vs[0].group(0)?, &spec)?;
            let av = killing_form(&cc, vs[1].group(0)?, &spec)?;
            Ok(Value::Scalar(0.5 * (du * av - dv * au)))
        });
        let t_grid = GridSpec::new(64).unwrap();
        let integrated = fiber_integrate(&two_form, &t_grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = crate::lie::random_group(&spec, 1.0, &mut rng);
        let x = random_algebra(&spec, 1.0, &mut rng);
        let p = Point::new(vec![PointComponent::Group(g)]);
        let v = Tangent::new(vec![TangentComponent::Group(x.clone())]);
        let got = integrated.eval(&p, &[v]).unwrap().scalar().unwrap();
        let want = 2.0 * PI * killing_form(&c0, &x, &spec).unwrap();
        assert!((got - want).abs() <= 1e-10, "got {got}, want {want}");
    }

    #[test]
    fn fiber_integration_zero_on_fiber_tangent() {
        let spec = su2();
        let space = Space::group(spec).with_fiber();
        // a 1-form with no dt component
        let one_form = FormEvaluator::new(space, 1, ValueKind::Scalar, move |_p, vs| {
            let c = su2_basis()[1].clone();
            killing_form(&c, vs[0].group(0)?, &spec).map(Value::Scalar)
        });
        let t_grid = GridSpec::new(32).unwrap();
        let integrated = fiber_integrate(&one_form, &t_grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = crate::lie::random_group(&spec, 1.0, &mut rng);
        let p = Point::new(vec![PointComponent::Group(g)]);
        let got = integrated.eval(&p, &[]).unwrap().scalar().unwrap();
        assert_eq!(got, 0.0);
    }

    #[test]
    fn fiber_integration_rejects_functions() {
        let spec = su2();
        let space = Space::group(spec).with_fiber();
        let f = FormEvaluator::new(space, 0, ValueKind::Scalar, |_, _| Ok(Value::Scalar(1.0)));
        let t_grid = GridSpec::new(32).unwrap();
        assert!(matches!(
            fiber_integrate(&f, &t_grid),
            Err(CoreError::UnsupportedDegree { .. })
        ));
    }

    #[test]
    fn unknown_map_lookup_fails() {
        let reg = MapRegistry::new();
        assert!(matches!(reg.get("nope"), Err(CoreError::UnknownMap(_))));
    }

    #[test]
    fn unsupported_degree_rejected() {
        let spec = su2();
        let f = FormEvaluator::new(Space::group(spec), 4, ValueKind::Scalar, |_, _| {
            Ok(Value::Scalar(0.0))
        });
        assert!(matches!(
            exterior_derivative(&f, 1e-4),
            Err(CoreError::UnsupportedDegree { .. })
        ));
    }
}
