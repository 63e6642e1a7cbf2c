//! The rigid Chern-Simons 2-gerbe data over a trivialized principal
//! bundle Q = chart × G.
//!
//! The base connection is a 𝔤-valued 1-form a on the chart with
//! trigonometric coefficient functions (so its exterior derivative is
//! closed-form). On Q the principal connection, its curvature and the
//! Chern-Simons 3-form are
//!
//!   A_{(x,g)}(v, gX)   = Ad_{g⁻¹} a_x(v) + X
//!   F                  = da + ½\[a,a\]            (chart 2-form)
//!   F_A((v,gX),(w,gY)) = Ad_{g⁻¹} F_x(v,w)
//!   −CS(A)             = −⟨A, F_A⟩ + (1/6)⟨A,\[A,A\]⟩
//!
//! together with the 2-gerbe curving β_A = pr₂*B − π*⟨pr₁*A, pr₂*Θ̂⟩ on
//! Q×PG, the trivialization 1-form α = 2∫⟨Θ_p, φ̂_q⟩ on Q×PG², and the
//! 4-curvature −⟨F∧F⟩ on the chart. All wedge evaluations use the ½
//! (Alt) normalization.

use crate::catalog::b_form;
use crate::error::CoreError;
use crate::forms::{
    simplicial_face, FaceLevel, FaceMapTable, FaceSlot, FormEvaluator, Point, PointComponent,
    Space, SpaceFactor, Tangent, TangentComponent, Value, ValueKind,
};
use crate::lie::{
    ad_action, bracket, killing_form, random_algebra, AlgebraElement, Family, GroupSpec,
};
use crate::pathspace::{quadrature, GridKind, GridSpec};
use crate::Result;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// One trigonometric term of the chart 1-form: into component `dir`,
/// the function Π_l trig(freq_l · x_l + phase_l) times a fixed algebra
/// coefficient.
#[derive(Debug, Clone)]
pub struct ChartTerm {
    pub dir: usize,
    pub freqs: Vec<i32>,
    pub phases: Vec<f64>,
    pub coeff: AlgebraElement,
}

impl ChartTerm {
    fn profile(&self, x: &DVector<f64>) -> f64 {
        self.freqs
            .iter()
            .zip(&self.phases)
            .zip(x.iter())
            .map(|((&k, &ph), &xi)| (k as f64 * xi + ph).cos())
            .product()
    }

    /// ∂/∂x_l of the profile.
    fn profile_partial(&self, x: &DVector<f64>, l: usize) -> f64 {
        let mut acc = 1.0;
        for (idx, ((&k, &ph), &xi)) in self
            .freqs
            .iter()
            .zip(&self.phases)
            .zip(x.iter())
            .enumerate()
        {
            let arg = k as f64 * xi + ph;
            if idx == l {
                acc *= -(k as f64) * arg.sin();
            } else {
                acc *= arg.cos();
            }
        }
        acc
    }
}

/// A 𝔤-valued 1-form on the chart with closed-form partial derivatives.
#[derive(Debug, Clone)]
pub struct ChartOneForm {
    pub spec: GroupSpec,
    pub dim: usize,
    pub terms: Vec<ChartTerm>,
}

impl ChartOneForm {
    pub fn zero(spec: GroupSpec, dim: usize) -> Self {
        ChartOneForm {
            spec,
            dim,
            terms: Vec::new(),
        }
    }

    /// a_x(v) = Σ_i v_i a_i(x).
    pub fn eval(&self, x: &DVector<f64>, v: &DVector<f64>) -> AlgebraElement {
        let mut acc = AlgebraElement::zero(&self.spec);
        for t in &self.terms {
            acc = acc.add(&t.coeff.scale(v[t.dir] * t.profile(x)));
        }
        acc
    }

    /// Directional derivative ∂_w [x ↦ a_x(v)] (closed form).
    pub fn directional(&self, x: &DVector<f64>, w: &DVector<f64>, v: &DVector<f64>) -> AlgebraElement {
        let mut acc = AlgebraElement::zero(&self.spec);
        for t in &self.terms {
            let mut d = 0.0;
            for l in 0..self.dim {
                d += w[l] * t.profile_partial(x, l);
            }
            acc = acc.add(&t.coeff.scale(v[t.dir] * d));
        }
        acc
    }

    /// Curvature F = da + ½\[a,a\] in the ½ convention:
    /// F_x(v,w) = ½(∂_v a(w) − ∂_w a(v)) + ½[a(v), a(w)].
    pub fn curvature(&self, x: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> AlgebraElement {
        let d = self
            .directional(x, v, w)
            .sub(&self.directional(x, w, v))
            .scale(0.5);
        let br = bracket(&self.eval(x, v), &self.eval(x, w)).scale(0.5);
        d.add(&br)
    }
}

/// The trivialized-bundle model: chart dimension, group, base connection
/// data and the seed it was drawn from.
#[derive(Debug, Clone)]
pub struct BundleModel {
    pub spec: GroupSpec,
    pub dim: usize,
    pub connection: ChartOneForm,
    pub seed: u64,
}

impl BundleModel {
    /// Random trigonometric connection data.
    pub fn random(spec: GroupSpec, dim: usize, seed: u64) -> Result<Self> {
        if !(2..=4).contains(&dim) {
            return Err(CoreError::invalid(format!(
                "chart dimension must be 2..=4, got {dim}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms = Vec::new();
        for dir in 0..dim {
            for _ in 0..2 {
                let freqs: Vec<i32> = (0..dim).map(|_| rng.gen_range(0..=2)).collect();
                let phases: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..(2.0 * PI))).collect();
                let amp: f64 = rng.sample(StandardNormal);
                terms.push(ChartTerm {
                    dir,
                    freqs,
                    phases,
                    coeff: random_algebra(&spec, 0.35 * amp.abs().max(0.2), &mut rng),
                });
            }
        }
        Ok(BundleModel {
            spec,
            dim,
            connection: ChartOneForm { spec, dim, terms },
            seed,
        })
    }

    /// The flat bundle a ≡ 0.
    pub fn flat(spec: GroupSpec, dim: usize) -> Result<Self> {
        if !(2..=4).contains(&dim) {
            return Err(CoreError::invalid(format!(
                "chart dimension must be 2..=4, got {dim}"
            )));
        }
        Ok(BundleModel {
            spec,
            dim,
            connection: ChartOneForm::zero(spec, dim),
            seed: 0,
        })
    }

    pub fn q_space(&self) -> Space {
        Space::q(self.dim, self.spec)
    }
}

// ---------------------------------------------------------------------------
// JSON description
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TermDescription {
    dir: usize,
    freqs: Vec<i32>,
    phases: Vec<f64>,
    coeff_re: Vec<f64>,
    coeff_im: Vec<f64>,
}

/// Serializable description of a bundle model (family, rank, chart
/// dimension, coefficient table, seed).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleDescription {
    pub family: String,
    pub n: usize,
    pub dim: usize,
    pub seed: u64,
    terms: Vec<TermDescription>,
}

impl BundleModel {
    pub fn describe(&self) -> BundleDescription {
        let family = match self.spec.family {
            Family::Su => "su",
            Family::So => "so",
            Family::Sp => "sp",
        };
        let terms = self
            .connection
            .terms
            .iter()
            .map(|t| TermDescription {
                dir: t.dir,
                freqs: t.freqs.clone(),
                phases: t.phases.clone(),
                coeff_re: t.coeff.mat.iter().map(|z| z.re).collect(),
                coeff_im: t.coeff.mat.iter().map(|z| z.im).collect(),
            })
            .collect();
        BundleDescription {
            family: family.into(),
            n: self.spec.n,
            dim: self.dim,
            seed: self.seed,
            terms,
        }
    }

    pub fn from_description(desc: &BundleDescription) -> Result<Self> {
        let family = match desc.family.as_str() {
            "su" => Family::Su,
            "so" => Family::So,
            "sp" => Family::Sp,
            other => return Err(CoreError::invalid(format!("unknown family {other}"))),
        };
        let spec = GroupSpec::new(family, desc.n)?;
        let d = spec.matrix_dim();
        let terms = desc
            .terms
            .iter()
            .map(|t| -> Result<ChartTerm> {
                if t.coeff_re.len() != d * d || t.coeff_im.len() != d * d {
                    return Err(CoreError::dims("coefficient table size mismatch"));
                }
                // nalgebra iterates column-major; rebuild in that order
                let data: Vec<Complex64> = t
                    .coeff_re
                    .iter()
                    .zip(&t.coeff_im)
                    .map(|(&re, &im)| Complex64::new(re, im))
                    .collect();
                Ok(ChartTerm {
                    dir: t.dir,
                    freqs: t.freqs.clone(),
                    phases: t.phases.clone(),
                    coeff: AlgebraElement {
                        mat: DMatrix::from_column_slice(d, d, &data),
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BundleModel {
            spec,
            dim: desc.dim,
            connection: ChartOneForm {
                spec,
                dim: desc.dim,
                terms,
            },
            seed: desc.seed,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.describe()).expect("bundle description serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let desc: BundleDescription = serde_json::from_value(v.clone())
            .map_err(|e| CoreError::invalid(format!("bundle description: {e}")))?;
        Self::from_description(&desc)
    }
}

// ---------------------------------------------------------------------------
// The connection and curvature on Q
// ---------------------------------------------------------------------------

fn a_of(bundle: &BundleModel, p: &Point, v: &Tangent) -> Result<AlgebraElement> {
    let x = p.chart(0)?;
    let g = p.group(1)?;
    let w = v.chart(0)?;
    let z = v.group(1)?;
    Ok(ad_action(&g.inverse(), &bundle.connection.eval(x, w)).add(z))
}

fn f_of(bundle: &BundleModel, p: &Point, v1: &Tangent, v2: &Tangent) -> Result<AlgebraElement> {
    let x = p.chart(0)?;
    let g = p.group(1)?;
    let f = bundle.connection.curvature(x, v1.chart(0)?, v2.chart(0)?);
    Ok(ad_action(&g.inverse(), &f))
}

/// The principal connection A as an algebra-valued 1-form on Q.
pub fn connection_form(bundle: &BundleModel) -> FormEvaluator {
    let b = bundle.clone();
    FormEvaluator::new(
        bundle.q_space(),
        1,
        ValueKind::AlgebraValued,
        move |p, vs| Ok(Value::Algebra(a_of(&b, p, &vs[0])?)),
    )
}

/// The curvature F_A as an algebra-valued 2-form on Q (vanishes on
/// vertical tangents).
pub fn curvature_form(bundle: &BundleModel) -> FormEvaluator {
    let b = bundle.clone();
    FormEvaluator::new(
        bundle.q_space(),
        2,
        ValueKind::AlgebraValued,
        move |p, vs| Ok(Value::Algebra(f_of(&b, p, &vs[0], &vs[1])?)),
    )
}

/// The chart curvature F as an algebra-valued 2-form on the chart alone.
pub fn curvature_chart_form(bundle: &BundleModel) -> FormEvaluator {
    let b = bundle.clone();
    FormEvaluator::new(
        Space::chart(bundle.dim),
        2,
        ValueKind::AlgebraValued,
        move |p, vs| {
            Ok(Value::Algebra(b.connection.curvature(
                p.chart(0)?,
                vs[0].chart(0)?,
                vs[1].chart(0)?,
            )))
        },
    )
}

/// −CS(A) = −⟨A, F_A⟩ + (1/6)⟨A,\[A,A\]⟩, a 3-form on Q.
pub fn cs_form(bundle: &BundleModel) -> FormEvaluator {
    let b = bundle.clone();
    let spec = bundle.spec;
    FormEvaluator::new(bundle.q_space(), 3, ValueKind::Scalar, move |p, vs| {
        let a: Vec<AlgebraElement> = vs
            .iter()
            .map(|v| a_of(&b, p, v))
            .collect::<Result<_>>()?;
        // ⟨A∧F⟩ in the ½ convention: (1/3)[⟨A₁,F₂₃⟩ − ⟨A₂,F₁₃⟩ + ⟨A₃,F₁₂⟩]
        let f23 = f_of(&b, p, &vs[1], &vs[2])?;
        let f13 = f_of(&b, p, &vs[0], &vs[2])?;
        let f12 = f_of(&b, p, &vs[0], &vs[1])?;
        let af = (killing_form(&a[0], &f23, &spec)? - killing_form(&a[1], &f13, &spec)?
            + killing_form(&a[2], &f12, &spec)?)
            / 3.0;
        let aaa = killing_form(&bracket(&a[0], &a[1]), &a[2], &spec)? / 6.0;
        Ok(Value::Scalar(-af + aaa))
    })
}

/// The 2-form ⟨pr₁*A, pr₂*Θ̂⟩ on Q×G.
pub fn a_theta_pairing_form(bundle: &BundleModel) -> FormEvaluator {
    let b = bundle.clone();
    let spec = bundle.spec;
    let space = Space::q_group_power(bundle.dim, bundle.spec, 1);
    FormEvaluator::new(space, 2, ValueKind::Scalar, move |p, vs| {
        let h = p.group(2)?;
        let q_point = Point::new(vec![p.components[0].clone(), p.components[1].clone()]);
        let part = |i: usize, j: usize| -> Result<f64> {
            let q_tan = Tangent::new(vec![
                vs[i].components[0].clone(),
                vs[i].components[1].clone(),
            ]);
            let a = a_of(&b, &q_point, &q_tan)?;
            let theta_hat = ad_action(h, vs[j].group(2)?);
            killing_form(&a, &theta_hat, &spec)
        };
        Ok(Value::Scalar(0.5 * (part(0, 1)? - part(1, 0)?)))
    })
}

/// β_A = pr₂*B − π*⟨pr₁*A, pr₂*Θ̂⟩, the 2-gerbe curving on Q×PG.
pub fn beta_a_form(bundle: &BundleModel, grid: GridSpec) -> FormEvaluator {
    let b = bundle.clone();
    let spec = bundle.spec;
    let curving = b_form(spec, grid);
    let space = Space::q_path_power(bundle.dim, spec, grid, 1);
    FormEvaluator::new(space, 2, ValueKind::Scalar, move |p, vs| {
        let path = p.path(2)?;
        // B on the PG components
        let bp = Point::new(vec![PointComponent::Path(path.clone())]);
        let bt: Vec<Tangent> = vs
            .iter()
            .map(|v| Ok(Tangent::new(vec![TangentComponent::Path(v.grid(2)?.clone())])))
            .collect::<Result<_>>()?;
        let b_val = curving.eval(&bp, &bt)?.scalar()?;
        // the A-pairing pulled back through id×ev
        let end = path.endpoint();
        let q_point = Point::new(vec![p.components[0].clone(), p.components[1].clone()]);
        let part = |i: usize, j: usize| -> Result<f64> {
            let q_tan = Tangent::new(vec![
                vs[i].components[0].clone(),
                vs[i].components[1].clone(),
            ]);
            let a = a_of(&b, &q_point, &q_tan)?;
            let xj_end = vs[j].grid(2)?.coeffs.last().unwrap();
            let theta_hat = ad_action(end, xj_end);
            killing_form(&a, &theta_hat, &spec)
        };
        let pairing = 0.5 * (part(0, 1)? - part(1, 0)?);
        Ok(Value::Scalar(b_val - pairing))
    })
}

/// α on Q×PG²: 2∫⟨Θ_p-slot, φ̂_q⟩ dθ, independent of the Q coordinate.
pub fn alpha_form(dim: usize, spec: GroupSpec, grid: GridSpec) -> FormEvaluator {
    let space = Space::q_path_power(dim, spec, grid, 2);
    FormEvaluator::new(space, 1, ValueKind::Scalar, move |p, vs| {
        let q = p.path(3)?;
        let x = vs[0].grid(2)?;
        let hats = q.higgs_hat();
        let vals: Vec<f64> = x
            .coeffs
            .iter()
            .zip(&hats)
            .map(|(a, b)| killing_form(a, b, &spec))
            .collect::<Result<_>>()?;
        Ok(Value::Scalar(2.0 * quadrature(&vals, GridKind::Path)))
    })
}

/// The 4-curvature −⟨F∧F⟩ on the chart:
/// −(1/3)[⟨F₁₂,F₃₄⟩ − ⟨F₁₃,F₂₄⟩ + ⟨F₁₄,F₂₃⟩].
pub fn four_curvature_form(bundle: &BundleModel) -> FormEvaluator {
    let b = bundle.clone();
    let spec = bundle.spec;
    FormEvaluator::new(Space::chart(bundle.dim), 4, ValueKind::Scalar, move |p, vs| {
        let x = p.chart(0)?;
        let f = |i: usize, j: usize| -> AlgebraElement {
            b.connection
                .curvature(x, vs[i].chart(0).unwrap(), vs[j].chart(0).unwrap())
        };
        let v = killing_form(&f(0, 1), &f(2, 3), &spec)?
            - killing_form(&f(0, 2), &f(1, 3), &spec)?
            + killing_form(&f(0, 3), &f(1, 2), &spec)?;
        Ok(Value::Scalar(-v / 3.0))
    })
}

/// The trace-route normalization: tr(F²)/(16π²) as a chart 4-form, the
/// first fractional Pontryagin representative for the orthogonal family.
pub fn pontryagin_half_form(bundle: &BundleModel) -> FormEvaluator {
    let b = bundle.clone();
    FormEvaluator::new(Space::chart(bundle.dim), 4, ValueKind::Scalar, move |p, vs| {
        let x = p.chart(0)?;
        let f = |i: usize, j: usize| -> AlgebraElement {
            b.connection
                .curvature(x, vs[i].chart(0).unwrap(), vs[j].chart(0).unwrap())
        };
        let tr = |a: &AlgebraElement, c: &AlgebraElement| -> f64 {
            (&a.mat * &c.mat).trace().re
        };
        let v = tr(&f(0, 1), &f(2, 3)) - tr(&f(0, 2), &f(1, 3)) + tr(&f(0, 3), &f(1, 2));
        Ok(Value::Scalar(v / 3.0 / (16.0 * PI * PI)))
    })
}

/// pr₂*B on Q×PG (the 2-gerbe curving without its connection term).
pub fn b_form_pullback_helper(bundle: &BundleModel, grid: GridSpec) -> Result<FormEvaluator> {
    let space = Space::q_path_power(bundle.dim, bundle.spec, grid, 1);
    let pr = crate::forms::simplicial_face("pr_pg", &space, vec![FaceSlot::Keep(2)])?;
    crate::forms::pullback(&b_form(bundle.spec, grid), &pr)
}

/// Horizontal lift of a chart tangent at (x, g): (v, −Ad_{g⁻¹} a_x(v)).
pub fn horizontal_lift(bundle: &BundleModel, p: &Point, v: &DVector<f64>) -> Result<Tangent> {
    let x = p.chart(0)?;
    let g = p.group(1)?;
    let lifted = ad_action(&g.inverse(), &bundle.connection.eval(x, v)).neg();
    Ok(Tangent::new(vec![
        TangentComponent::Chart(v.clone()),
        TangentComponent::Group(lifted),
    ]))
}

// ---------------------------------------------------------------------------
// The face maps of the 2-gerbe diagram
// ---------------------------------------------------------------------------

/// Face levels of the bisimplicial arrangement over Q:
///
///   horizontal  `h_q_pg_k`:  Q×PG^k  → Q×PG^{k−1}   (k = 1,2,3)
///   horizontal  `h_q_g_k`:   Q×G^k   → Q×G^{k−1}    (k = 1,2)
///   vertical    `v_q_pg_k`:  Q×PG×ΩG^k → Q×PG×ΩG^{k−1} (k = 1,2)
///   vertical    `v_q_pg2`:   Q×(PG⋉ΩG)² → Q×PG²
///   horizontal  `h_q_sd_1`:  Q×(PG⋉ΩG)² → Q×(PG⋉ΩG)
///   horizontal  `h_q_sd2_1`: Q×(PG⋉ΩG²)² → Q×(PG⋉ΩG²)  (the starred level)
pub fn fig2_face_table(dim: usize, spec: GroupSpec, grid: GridSpec) -> Result<FaceMapTable> {
    let mut table = FaceMapTable::new();
    let c = SpaceFactor::Chart(dim);
    let g = SpaceFactor::Group(spec);
    let pp = SpaceFactor::Path(spec, grid);
    let ll = SpaceFactor::Loop(spec, grid);

    // Q×PG^k horizontal levels
    for k in 1..=3usize {
        let mut factors = vec![c.clone(), g.clone()];
        factors.extend(vec![pp.clone(); k]);
        let domain = Space::new(factors);
        let mut maps = Vec::new();
        for i in 0..=k {
            let mut slots = vec![FaceSlot::Keep(0)];
            if i == 0 {
                slots.push(FaceSlot::ActEndpoint(1, 2));
                for j in 3..(2 + k) {
                    slots.push(FaceSlot::Keep(j));
                }
            } else {
                slots.push(FaceSlot::Keep(1));
                let mut paths: Vec<FaceSlot> = (0..k).map(|j| FaceSlot::Keep(2 + j)).collect();
                if i < k {
                    paths[i - 1] = FaceSlot::MulPathPath(2 + i - 1, 2 + i);
                    paths.remove(i);
                } else {
                    paths.pop();
                }
                slots.extend(paths);
            }
            maps.push(simplicial_face(
                format!("h_q_pg_{k}_d{i}"),
                &domain,
                slots,
            )?);
        }
        table.insert(FaceLevel::new(format!("h_q_pg_{k}"), maps)?);
    }

    // Q×G^k horizontal levels
    for k in 1..=2usize {
        let mut factors = vec![c.clone(), g.clone()];
        factors.extend(vec![g.clone(); k]);
        let domain = Space::new(factors);
        let mut maps = Vec::new();
        for i in 0..=k {
            let mut slots = vec![FaceSlot::Keep(0)];
            if i == 0 {
                slots.push(FaceSlot::MulGroupGroup(1, 2));
                for j in 3..(2 + k) {
                    slots.push(FaceSlot::Keep(j));
                }
            } else {
                slots.push(FaceSlot::Keep(1));
                let mut groups: Vec<FaceSlot> = (0..k).map(|j| FaceSlot::Keep(2 + j)).collect();
                if i < k {
                    groups[i - 1] = FaceSlot::MulGroupGroup(2 + i - 1, 2 + i);
                    groups.remove(i);
                } else {
                    groups.pop();
                }
                slots.extend(groups);
            }
            maps.push(simplicial_face(format!("h_q_g_{k}_d{i}"), &domain, slots)?);
        }
        table.insert(FaceLevel::new(format!("h_q_g_{k}"), maps)?);
    }

    // vertical levels over Q×PG
    for k in 1..=2usize {
        let mut factors = vec![c.clone(), g.clone(), pp.clone()];
        factors.extend(vec![ll.clone(); k]);
        let domain = Space::new(factors);
        let mut maps = Vec::new();
        for i in 0..=k {
            let mut slots = vec![FaceSlot::Keep(0), FaceSlot::Keep(1)];
            if i == 0 {
                slots.push(FaceSlot::MulPathLoop(2, 3));
                for j in 4..(3 + k) {
                    slots.push(FaceSlot::Keep(j));
                }
            } else {
                slots.push(FaceSlot::Keep(2));
                let mut loops: Vec<FaceSlot> = (0..k).map(|j| FaceSlot::Keep(3 + j)).collect();
                if i < k {
                    loops[i - 1] = FaceSlot::MulLoopLoop(3 + i - 1, 3 + i);
                    loops.remove(i);
                } else {
                    loops.pop();
                }
                slots.extend(loops);
            }
            maps.push(simplicial_face(format!("v_q_pg_{k}_d{i}"), &domain, slots)?);
        }
        table.insert(
            FaceLevel::new(format!("v_q_pg_{k}"), maps)?
                .with_direction(crate::forms::Direction::Vertical),
        );
    }

    // vertical faces of the level-2 horizontal space
    {
        let domain = Space::new(vec![
            c.clone(),
            g.clone(),
            pp.clone(),
            ll.clone(),
            pp.clone(),
            ll.clone(),
        ]);
        let d0 = simplicial_face(
            "v_q_pg2_d0",
            &domain,
            vec![
                FaceSlot::Keep(0),
                FaceSlot::Keep(1),
                FaceSlot::MulPathLoop(2, 3),
                FaceSlot::MulPathLoop(4, 5),
            ],
        )?;
        let d1 = simplicial_face(
            "v_q_pg2_d1",
            &domain,
            vec![
                FaceSlot::Keep(0),
                FaceSlot::Keep(1),
                FaceSlot::Keep(2),
                FaceSlot::Keep(4),
            ],
        )?;
        table.insert(
            FaceLevel::new("v_q_pg2", vec![d0, d1])?
                .with_direction(crate::forms::Direction::Vertical),
        );
    }

    // horizontal faces at the semidirect level: Q×(PG⋉ΩG)² → Q×(PG⋉ΩG)
    {
        let domain = Space::new(vec![
            c.clone(),
            g.clone(),
            pp.clone(),
            ll.clone(),
            pp.clone(),
            ll.clone(),
        ]);
        let act = simplicial_face(
            "h_q_sd_1_d0",
            &domain,
            vec![
                FaceSlot::Keep(0),
                FaceSlot::ActEndpoint(1, 2),
                FaceSlot::Keep(4),
                FaceSlot::Keep(5),
            ],
        )?;
        // mult of the semidirect product, staged so the pushforward is
        // assembled from the primitive tangent maps
        let stage1 = simplicial_face(
            "h_q_sd_1_d1_s1",
            &domain,
            vec![
                FaceSlot::Keep(0),
                FaceSlot::Keep(1),
                FaceSlot::MulPathPath(2, 4),
                FaceSlot::InvAdConj(4, 3),
                FaceSlot::Keep(5),
            ],
        )?;
        let stage2 = simplicial_face(
            "h_q_sd_1_d1_s2",
            &stage1.codomain,
            vec![
                FaceSlot::Keep(0),
                FaceSlot::Keep(1),
                FaceSlot::Keep(2),
                FaceSlot::MulLoopLoop(3, 4),
            ],
        )?;
        let mut mult = stage1.then(&stage2)?;
        mult.name = "h_q_sd_1_d1".into();
        let pr = simplicial_face(
            "h_q_sd_1_d2",
            &domain,
            vec![
                FaceSlot::Keep(0),
                FaceSlot::Keep(1),
                FaceSlot::Keep(2),
                FaceSlot::Keep(3),
            ],
        )?;
        table.insert(FaceLevel::new("h_q_sd_1", vec![act, mult, pr])?);
    }

    // the starred level: Q×(PG⋉ΩG²)² → Q×(PG⋉ΩG²)
    {
        let domain = Space::new(vec![
            c.clone(),
            g.clone(),
            pp.clone(),
            ll.clone(),
            ll.clone(),
            pp.clone(),
            ll.clone(),
            ll.clone(),
        ]);
        let act = simplicial_face(
            "h_q_sd2_1_d0",
            &domain,
            vec![
                FaceSlot::Keep(0),
                FaceSlot::ActEndpoint(1, 2),
                FaceSlot::Keep(5),
                FaceSlot::Keep(6),
                FaceSlot::Keep(7),
            ],
        )?;
        // d₁(p₁,γ₁,η₁; p₂,γ₂,η₂) =
        //   (p₁p₂, Ad_{p₂⁻¹}(γ₁)γ₂, γ₂⁻¹ Ad_{p₂⁻¹}(η₁) γ₂ η₂), staged:
        let stage1 = simplicial_face(
            "h_q_sd2_1_d1_s1",
            &domain,
            vec![
                FaceSlot::Keep(0),
                FaceSlot::Keep(1),
                FaceSlot::MulPathPath(2, 5), // p₁p₂
                FaceSlot::InvAdConj(5, 3),   // Ad_{p₂⁻¹}γ₁
                FaceSlot::Keep(6),           // γ₂
                FaceSlot::MulPathLoop(5, 6), // p₂γ₂
                FaceSlot::Keep(4),           // η₁
                FaceSlot::Keep(7),           // η₂
            ],
        )?;
        let stage2 = simplicial_face(
            "h_q_sd2_1_d1_s2",
            &stage1.codomain,
            vec![
                FaceSlot::Keep(0),
                FaceSlot::Keep(1),
                FaceSlot::Keep(2),
                FaceSlot::MulLoopLoop(3, 4), // Ad_{p₂⁻¹}(γ₁)γ₂
                FaceSlot::InvAdConj(5, 6),   // Ad_{(p₂γ₂)⁻¹}η₁ = γ₂⁻¹Ad_{p₂⁻¹}(η₁)γ₂
                FaceSlot::Keep(7),
            ],
        )?;
        let stage3 = simplicial_face(
            "h_q_sd2_1_d1_s3",
            &stage2.codomain,
            vec![
                FaceSlot::Keep(0),
                FaceSlot::Keep(1),
                FaceSlot::Keep(2),
                FaceSlot::Keep(3),
                FaceSlot::MulLoopLoop(4, 5),
            ],
        )?;
        let mut starred = stage1.then(&stage2)?.then(&stage3)?;
        starred.name = "h_q_sd2_1_d1".into();
        let pr = simplicial_face(
            "h_q_sd2_1_d2",
            &domain,
            vec![
                FaceSlot::Keep(0),
                FaceSlot::Keep(1),
                FaceSlot::Keep(2),
                FaceSlot::Keep(3),
                FaceSlot::Keep(4),
            ],
        )?;
        table.insert(FaceLevel::new("h_q_sd2_1", vec![act, starred, pr])?);
    }

    Ok(table)
}

/// Registry of the named point maps: mult, inverse, the adjoint action,
/// ev_{2π}, and every face map of the 2-gerbe diagram. Pushforwards
/// through a registered name use the analytic tangent maps; the
/// finite-difference route is available on every map for cross-checking.
pub fn standard_registry(
    dim: usize,
    spec: GroupSpec,
    grid: GridSpec,
) -> Result<crate::forms::MapRegistry> {
    use crate::forms::simplicial_face;
    let mut reg = crate::forms::MapRegistry::new();
    let pg2 = Space::path_power(spec, grid, 2);
    let pg = Space::path_space(spec, grid);
    let pg_og = Space::path_loop(spec, grid);

    let mut mult = simplicial_face("mult", &pg2, vec![FaceSlot::MulPathPath(0, 1)])?;
    mult.name = "mult".into();
    reg.insert(mult);
    let mut inverse = simplicial_face("inverse", &pg, vec![FaceSlot::InvPath(0)])?;
    inverse.name = "inverse".into();
    reg.insert(inverse);
    // adjoint action (p, γ) ↦ pγp⁻¹
    let s1 = simplicial_face("adjoint_s1", &pg_og, vec![FaceSlot::InvPath(0), FaceSlot::Keep(1)])?;
    let s2 = simplicial_face("adjoint_s2", &s1.codomain, vec![FaceSlot::InvAdConj(0, 1)])?;
    let mut adjoint = s1.then(&s2)?;
    adjoint.name = "adjoint".into();
    reg.insert(adjoint);
    let mut ev = simplicial_face("ev2pi", &pg, vec![FaceSlot::EvEndpoint(0)])?;
    ev.name = "ev2pi".into();
    reg.insert(ev);
    reg.insert(crate::forms::SmoothMap::identity(pg));

    let table = fig2_face_table(dim, spec, grid)?;
    for level in table.names() {
        for map in &table.level(level)?.maps {
            reg.insert(map.clone());
        }
    }
    Ok(reg)
}

// ---------------------------------------------------------------------------
// Random data on Q
// ---------------------------------------------------------------------------

pub fn random_chart_vector<R: Rng>(dim: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

/// Random point of Q = chart×G.
pub fn random_q_point<R: Rng>(bundle: &BundleModel, rng: &mut R) -> Point {
    Point::new(vec![
        PointComponent::Chart(random_chart_vector(bundle.dim, rng)),
        PointComponent::Group(crate::lie::random_group(&bundle.spec, 0.7, rng)),
    ])
}

/// Random tangent of Q.
pub fn random_q_tangent<R: Rng>(bundle: &BundleModel, rng: &mut R) -> Tangent {
    Tangent::new(vec![
        TangentComponent::Chart(random_chart_vector(bundle.dim, rng)),
        TangentComponent::Group(random_algebra(&bundle.spec, 1.0, rng)),
    ])
}
