//! Check suites shared by the command-line front end, the C ABI and the acceptance tests.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraTag, AlgebraValue as V, MulTable};
use crate::fields::{
    bianchi_residual, gauge_transform, geometry_at, structural_residual, structure_point, AnalyticField, ConnectionField,
    LoopField, PointGeometry, TorusDomain,
};
use crate::loops::{identity_suite, LoopContext};
use crate::numerics::{DiffConfig, Matrix, Rational, Scalar};
use crate::phi::{fit_k, hat_norm_sum, phi_bracket_ratio, PhiMap};
use crate::pseudoauto::{adq_pair, companions_of, PGroup};
use crate::report::{Check, Report};
use crate::sampling::Sampler;
use crate::tangent::{akivis_residual, akivis_residual_fd, bracket_closed, bracket_fd, killing_form, malcev_residual_with, tensor_associator};
use crate::variational::{cs_functional, cs_s_variation, dirichlet_check, energy_flow, FlowConfig, FlowState, FunctionalReport, SVariation};
use crate::{Error, Result};

/// Scalar mode for the algebraic suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            _ => Err(Error::Config(format!("unknown mode '{s}' (expected exact or float)"))),
        }
    }
}

/// Settings for `verify`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifySettings {
    pub tag: AlgebraTag,
    pub mode: Mode,
    pub seed: u64,
    /// Samples per loop identity.
    pub samples: usize,
    /// Samples for the tangent-algebra identities, which are costlier.
    pub tangent_samples: usize,
    /// Unit base points for the `φ_s` constants.
    pub phi_points: usize,
    /// Gauss points per axis for the field identities on `T³`.
    pub field_points: usize,
    /// Swap one product in the multiplication table.
    pub corrupt_table: bool,
    pub fields: bool,
}

impl VerifySettings {
    pub fn new(tag: AlgebraTag, mode: Mode, seed: u64) -> Self {
        VerifySettings {
            tag,
            mode,
            seed,
            samples: 1000,
            tangent_samples: 20,
            phi_points: 50,
            field_points: 5,
            corrupt_table: false,
            fields: true,
        }
    }
}

/// Expected constants `(λ, dim ker φ_s, dim 𝔩)` per algebra.
pub fn expected_phi(tag: AlgebraTag) -> (f64, usize, usize) {
    match tag {
        AlgebraTag::O => (3.0 / 8.0, 14, 7),
        AlgebraTag::H => (1.0, 10, 3),
        AlgebraTag::C => (2.0, 3, 1),
        AlgebraTag::R => (0.0, 0, 0),
    }
}

/// `K(e_i,e_j) = -κ δ_ij` at `s = 1`; the scale `κ` per algebra.
pub fn expected_killing_scale(tag: AlgebraTag) -> f64 {
    match tag {
        AlgebraTag::O => 24.0,
        AlgebraTag::H => 8.0,
        AlgebraTag::C | AlgebraTag::R => 0.0,
    }
}

fn context(tag: AlgebraTag, corrupt: bool) -> LoopContext {
    if corrupt {
        LoopContext::with_table(tag, MulTable::standard(tag).corrupted(3 % tag.dim(), 5 % tag.dim()))
    } else {
        LoopContext::new(tag)
    }
}

struct Samples<S> {
    triples: Vec<[V<S>; 3]>,
    ims: Vec<[V<S>; 3]>,
    units: Vec<V<S>>,
}

fn exact_samples(tag: AlgebraTag, set: &VerifySettings) -> Samples<Rational> {
    let mut smp = Sampler::new(set.seed);
    let triples = (0..set.samples).map(|_| [smp.rational_value(tag), smp.rational_value(tag), smp.rational_value(tag)]).collect();
    let ims = (0..set.tangent_samples).map(|_| [smp.rational_im(tag), smp.rational_im(tag), smp.rational_im(tag)]).collect();
    let units = (0..set.tangent_samples).map(|_| smp.rational_unit(tag)).collect();
    Samples { triples, ims, units }
}

fn float_samples(tag: AlgebraTag, set: &VerifySettings) -> Samples<f64> {
    let mut smp = Sampler::new(set.seed);
    let triples = (0..set.samples).map(|_| [smp.unit(tag), smp.unit(tag), smp.unit(tag)]).collect();
    let ims = (0..set.tangent_samples).map(|_| [smp.float_im(tag, 1.0), smp.float_im(tag, 1.0), smp.float_im(tag, 1.0)]).collect();
    let units = (0..set.tangent_samples).map(|_| smp.unit(tag)).collect();
    Samples { triples, ims, units }
}

fn tol<S: Scalar>(t: f64) -> f64 {
    if S::EXACT {
        0.0
    } else {
        t
    }
}

/// Loop axioms, nucleus, Moufang companions, Akivis, Malcev, Killing form and associator checks.
fn algebraic<S: Scalar>(ctx: &LoopContext, sm: &Samples<S>) -> Result<Report> {
    let tag = ctx.tag;
    let mut r = identity_suite(ctx, &sm.triples)?;
    r.suite = format!("verify-{tag}");

    let nuc = ctx.nucleus_basis();
    let real_axis = nuc.len() == 1 && nuc[0].im().is_zero();
    let want = match tag {
        AlgebraTag::O => 1,
        AlgebraTag::H => 4,
        AlgebraTag::C => 2,
        AlgebraTag::R => 1,
    };
    r.push(Check::flag("right-nucleus-dimension", "NR-UO", 1, nuc.len() == want && (tag != AlgebraTag::O || real_axis)));
    r.value("right-nucleus-dimension", nuc.len() as f64);

    let pairs: Vec<(V<S>, V<S>)> = sm.triples.iter().map(|t| (t[0].clone(), t[1].clone())).collect();
    let mut worst = 0.0f64;
    for t in &sm.triples {
        let c = ctx.adq_companion_check(&t[2], &pairs[..pairs.len().min(4)])?;
        worst = worst.max(c.max_residual);
    }
    r.push(Check::new("adq-companion-q3", "Moufang-Adq", sm.triples.len(), worst, tol::<S>(1e-12)));

    let one = V::<S>::one(tag);
    let mut ak = 0.0f64;
    let mut mal = 0.0f64;
    let mut assoc = 0.0f64;
    let psi = &crate::algebra::build_tensors_from(tag, &ctx.table).psi;
    for ([x, y, z], s) in sm.ims.iter().zip(&sm.units) {
        ak = ak.max(akivis_residual(ctx, &one, x, y, z)?).max(akivis_residual(ctx, s, x, y, z)?);
        mal = mal.max(malcev_residual_with(psi, x, y, z));
        assoc = assoc.max(tensor_associator(tag, psi, x, y, z).max_abs());
    }
    r.push(Check::new("akivis", "Akivis", sm.ims.len(), ak, tol::<S>(1e-12)));
    r.push(Check::new("malcev", "Malcev", sm.ims.len(), mal, tol::<S>(1e-12)));
    if tag != AlgebraTag::O {
        // associative instances: the tangent associator vanishes identically
        r.push(Check::new("associator-vanishes", "assoc-zero", sm.ims.len(), assoc, tol::<S>(1e-12)));
    }
    r.value("associator-max", assoc);

    let k = killing_form(ctx, &one)?;
    let n = tag.im_dim();
    let kappa = expected_killing_scale(tag);
    let dev = k.sub(&Matrix::identity(n).scale(&S::from_f64(-kappa))).max_abs();
    r.push(Check::new("killing-form-scalar", "Killing", n * n, dev, tol::<S>(1e-12)));
    if kappa > 0.0 {
        let neg = (0..n).all(|i| k[(i, i)].to_f64() < 0.0) && dev <= tol::<S>(1e-12);
        r.push(Check::flag("killing-negative-definite", "Killing-neg", n, neg));
    }
    r.value("killing-scale", -k[(0, 0)].to_f64());
    Ok(r)
}

/// `k`, `λ`, `dim ker φ_s` and the `φ`-bracket ratio.
fn phi_constants(ctx: &LoopContext, set: &VerifySettings) -> Result<Report> {
    let tag = ctx.tag;
    let mut r = Report::new("phi");
    let (lam_want, ker_want, _) = expected_phi(tag);
    if tag == AlgebraTag::O {
        let (k, res) = fit_k()?;
        r.push(Check::new("phi-k", "Eq-phik", 1, (k + 0.25).abs().max(res), 1e-12));
        r.value("k", k);
    }
    let mut smp = Sampler::new(set.seed ^ 0x9e37_79b9);
    let mut lam_err = 0.0f64;
    let mut ker_ok = true;
    let mut ratio_err = 0.0f64;
    let mut hat_err = 0.0f64;
    let basis: Vec<(V<f64>, V<f64>)> = (1..tag.dim())
        .flat_map(|i| (1..tag.dim()).map(move |j| (V::basis(tag, i), V::basis(tag, j))))
        .collect();
    let want_ratio = if tag == AlgebraTag::O { 3.0 * (-0.25f64).powi(3) } else { f64::NAN };
    match set.mode {
        Mode::Exact => {
            let want = Rational::from_f64(lam_want);
            for _ in 0..set.phi_points.min(8) {
                let s = smp.rational_unit(tag);
                let phi: PhiMap<Rational> = PhiMap::new(ctx, &s)?;
                let l = phi.lambda()?;
                lam_err = lam_err.max((l - want.clone()).to_f64().abs());
                ker_ok &= phi.kernel().len() == ker_want;
            }
        }
        Mode::Float => {
            for _ in 0..set.phi_points {
                let s: V<f64> = smp.unit(tag);
                let phi = PhiMap::new(ctx, &s)?;
                lam_err = lam_err.max((phi.lambda()? - lam_want).abs());
                ker_ok &= phi.kernel().len() == ker_want;
            }
        }
    }
    for _ in 0..set.phi_points.min(10) {
        let s: V<f64> = smp.unit(tag);
        let phi = PhiMap::new(ctx, &s)?;
        hat_err = hat_err.max((hat_norm_sum(&phi) - lam_want * tag.im_dim() as f64).abs());
        if tag == AlgebraTag::O {
            let (c, res) = phi_bracket_ratio(ctx, &phi, &basis)?;
            ratio_err = ratio_err.max((c - want_ratio).abs()).max(res);
        }
    }
    let lt = if set.mode == Mode::Exact { 0.0 } else { 1e-10 };
    r.push(Check::new("phi-lambda", "Eq-lambda", set.phi_points, lam_err, lt));
    r.push(Check::flag("phi-kernel-dimension", "Eq-hs", set.phi_points, ker_ok));
    r.push(Check::new("phi-hat-norm", "Eq-omegahat-norm", set.phi_points.min(10), hat_err, 1e-10));
    if tag == AlgebraTag::O {
        r.push(Check::new("phi-bracket-ratio", "Eq-phibracket", basis.len(), ratio_err, 1e-10));
    }
    r.value("lambda", lam_want);
    Ok(r)
}

/// FD bracket and Akivis residual in floating point.
fn fd_checks(ctx: &LoopContext, set: &VerifySettings) -> Result<Report> {
    let tag = ctx.tag;
    let mut smp = Sampler::new(set.seed.wrapping_add(17));
    let mut r = Report::new("finite-difference");
    let mut err = 0.0f64;
    let mut order = f64::INFINITY;
    for _ in 0..4 {
        let s: V<f64> = smp.unit(tag);
        let x = smp.float_im(tag, 1.0);
        let y = smp.float_im(tag, 1.0);
        let est = bracket_fd(ctx, &s, &x, &y, &DiffConfig::default())?;
        let closed = bracket_closed(ctx, &s, &x, &y)?;
        err = err.max((V::new(tag, est.value.clone()) - closed).max_abs());
        order = order.min(est.order);
    }
    r.push(Check::new("bracket-fd", "Eq-brack2deriv", 4, err, 1e-6));
    if tag != AlgebraTag::C {
        // abelian: the bracket vanishes and there is no error to take an order of
        r.push(Check::flag("bracket-fd-order", "Eq-brack2deriv", 4, order >= 1.9));
        r.value("bracket-fd-order", order);
    }
    let s: V<f64> = smp.unit(tag);
    let (x, y, z) = (smp.float_im(tag, 1.0), smp.float_im(tag, 1.0), smp.float_im(tag, 1.0));
    r.push(Check::new("akivis-fd", "Akivis", 1, akivis_residual_fd(ctx, &s, &x, &y, &z)?, 1e-5));
    Ok(r)
}

/// Seeded fields on `T³` for the field identities.
pub fn seeded_fields(tag: AlgebraTag, dim: usize, seed: u64) -> Result<(LoopField, ConnectionField)> {
    let mut smp = Sampler::new(seed);
    let s = LoopField::random(tag, dim, 0.5, &mut smp);
    let a = ConnectionField::random(PGroup::for_tag(tag)?, dim, 0.3, &mut smp);
    Ok((s, a))
}

/// `n^dim` points of the uniform grid offset by half a cell.
pub fn sample_points(dim: usize, n: usize) -> Vec<Vec<f64>> {
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let total = n.pow(dim as u32);
    (0..total)
        .map(|mut k| {
            (0..dim)
                .map(|_| {
                    let i = k % n;
                    k /= n;
                    (i as f64 + 0.5) * h
                })
                .collect()
        })
        .collect()
}

/// `max |F̂ - dT|` over points; the structure equation reduces to this for the abelian case.
pub fn abelian_anchor_residual(ctx: &LoopContext, s: &LoopField, a: &ConnectionField, points: &[Vec<f64>]) -> Result<f64> {
    crate::fields::max_over(points, |x| {
        let g = geometry_at(ctx, s, a, x)?;
        let mut worst = 0.0f64;
        for i in 0..g.dim {
            for j in (i + 1)..g.dim {
                worst = worst.max((g.fhat_value(i, j) - dt(&g, i, j)).max_abs());
            }
        }
        Ok(worst)
    })
}

fn dt(g: &PointGeometry, i: usize, j: usize) -> V<f64> {
    g.t[j].map(|t| t.g[i]) - g.t[i].map(|t| t.g[j])
}

/// Structure equation, Bianchi identity and gauge equivariance on seeded `T³` fields.
pub fn field_suite(tag: AlgebraTag, seed: u64, per_axis: usize) -> Result<Report> {
    let ctx = LoopContext::new(tag);
    let (s, a) = seeded_fields(tag, 3, seed)?;
    let pts = sample_points(3, per_axis);
    let mut r = Report::new("fields");
    let structure_tol = if tag == AlgebraTag::C { 1e-12 } else { 1e-8 };
    r.extend(structural_residual(&ctx, &s, &a, &pts, structure_tol)?);
    r.push(bianchi_residual(&ctx, &s, &a, &pts, structure_tol)?);
    if tag == AlgebraTag::C {
        r.push(Check::new("abelian-anchor", "Eq-exCx4", pts.len(), abelian_anchor_residual(&ctx, &s, &a, &pts)?, 1e-12));
    }
    let mut smp = Sampler::new(seed.wrapping_add(1));
    let u = AnalyticField::random(3, a.group.algebra().dim(), 1, 0.3, &mut smp);
    // gauge checks are costlier; a subset of the points suffices
    let gpts: Vec<Vec<f64>> = pts.iter().step_by(5).cloned().collect();
    r.extend(gauge_transform(&ctx, &s, &a, &u, &gpts, 1e-7)?);
    Ok(r)
}

/// Full `verify` run.
pub fn verify(set: &VerifySettings) -> Result<Report> {
    let tag = set.tag;
    if tag == AlgebraTag::R {
        return Err(Error::Config("verify supports C, H and O".into()));
    }
    let ctx = context(tag, set.corrupt_table);
    let mut r = match set.mode {
        Mode::Exact => algebraic(&ctx, &exact_samples(tag, set))?,
        Mode::Float => algebraic(&ctx, &float_samples(tag, set))?,
    };
    if set.corrupt_table {
        // everything downstream assumes a composition algebra
        r.suite.push_str("-corrupted");
        return Ok(r);
    }
    r.extend(phi_constants(&ctx, set)?);
    r.extend(fd_checks(&ctx, set)?);
    if set.fields {
        r.extend(field_suite(tag, set.seed, set.field_points)?);
    }
    Ok(r)
}

/// Replaces every non-zero tolerance and recomputes the verdicts.
pub fn override_tolerance(r: &mut Report, tol: f64) {
    for c in r.checks.iter_mut() {
        if c.tol > 0.0 {
            c.tol = tol;
            c.passed = c.max_residual.is_finite() && c.max_residual <= tol;
        }
    }
}

/// One row of the torsion dump.
#[derive(Clone, Debug, PartialEq)]
pub struct TorsionRow {
    pub x: Vec<f64>,
    /// `T_i`, imaginary coordinates.
    pub t: Vec<Vec<f64>>,
    /// `F̂_ij` for `i < j`, imaginary coordinates.
    pub fhat: Vec<Vec<f64>>,
    /// `(dT)_ij` for `i < j`.
    pub dt: Vec<Vec<f64>>,
    pub residual: f64,
}

/// `T`, `F̂`, `dT` and the structure residual at every point.
pub fn torsion_dump(ctx: &LoopContext, s: &LoopField, a: &ConnectionField, points: &[Vec<f64>]) -> Result<Vec<TorsionRow>> {
    let alg = a.group.algebra();
    points
        .par_iter()
        .map(|x| {
            let g = geometry_at(ctx, s, a, x)?;
            let pairs: Vec<(usize, usize)> = (0..g.dim).flat_map(|i| ((i + 1)..g.dim).map(move |j| (i, j))).collect();
            Ok(TorsionRow {
                x: x.clone(),
                t: (0..g.dim).map(|i| g.t_value(i).im_coords()).collect(),
                fhat: pairs.iter().map(|&(i, j)| g.fhat_value(i, j).im_coords()).collect(),
                dt: pairs.iter().map(|&(i, j)| dt(&g, i, j).im_coords()).collect(),
                residual: structure_point(ctx, alg, &g)?,
            })
        })
        .collect()
}

/// CSV with header; floats in shortest round-trip form.
pub fn torsion_csv(tag: AlgebraTag, rows: &[TorsionRow]) -> String {
    let mut out = String::new();
    let Some(first) = rows.first() else { return out };
    let dim = first.x.len();
    let m = tag.im_dim();
    let mut head: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    for i in 0..dim {
        head.extend((0..m).map(|a| format!("T{i}_{a}")));
    }
    let pairs: Vec<(usize, usize)> = (0..dim).flat_map(|i| ((i + 1)..dim).map(move |j| (i, j))).collect();
    for (i, j) in &pairs {
        head.extend((0..m).map(|a| format!("Fhat{i}{j}_{a}")));
    }
    for (i, j) in &pairs {
        head.extend((0..m).map(|a| format!("dT{i}{j}_{a}")));
    }
    head.push("residual".into());
    out.push_str(&head.join(","));
    out.push('\n');
    for r in rows {
        let mut cells: Vec<String> = r.x.iter().map(|v| v.to_string()).collect();
        for v in r.t.iter().chain(&r.fhat).chain(&r.dt) {
            cells.extend(v.iter().map(|c| c.to_string()));
        }
        cells.push(r.residual.to_string());
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Result of an energy flow run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub algebra: AlgebraTag,
    pub grid: usize,
    pub iterations: usize,
    pub converged: bool,
    pub line_search_failed: bool,
    pub monotone: bool,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub final_div_max: f64,
    pub max_norm_drift: f64,
    pub lambda: f64,
    pub hat_norm_residual: f64,
    pub dirichlet_gap_residual: f64,
    pub checks: Report,
}

/// Runs the energy flow and gathers the report and per-iteration history.
pub fn flow_run(ctx: &LoopContext, state: FlowState, cfg: &FlowConfig) -> Result<(FlowReport, FlowState)> {
    let grid = state.domain.n;
    let out = energy_flow(ctx, state, cfg)?;
    let h = &out.history;
    let monotone = h.windows(2).all(|w| w[1].energy <= w[0].energy);
    let d = dirichlet_check(ctx, &out)?;
    let last = h.last().ok_or_else(|| Error::Consistency("empty flow history".into()))?;
    let mut checks = Report::new("flow");
    checks.push(Check::new("divergence-free-torsion", "Eq-Efunc", out.iterations, last.div_max, cfg.tol));
    checks.push(Check::flag("energy-monotone", "Eq-Efunc", h.len(), monotone));
    checks.push(Check::new("omega-hat-norm", "Eq-omegahat-norm", out.s.len(), d.pointwise_residual, 1e-10));
    checks.push(Check::new("dirichlet-gap", "Eq-Dirichlet", 1, d.relative_residual, 1e-8));
    let rep = FlowReport {
        algebra: out.tag,
        grid,
        iterations: out.iterations,
        converged: out.converged,
        line_search_failed: out.line_search_failed,
        monotone,
        initial_energy: h[0].energy,
        final_energy: last.energy,
        final_div_max: last.div_max,
        max_norm_drift: out.max_drift,
        lambda: d.lambda,
        hat_norm_residual: d.pointwise_residual,
        dirichlet_gap_residual: d.relative_residual,
        checks,
    };
    Ok((rep, out))
}

/// Per-iteration CSV: iteration, energy, `‖(d^H)^*T‖_∞`, step.
pub fn flow_csv(state: &FlowState) -> String {
    let mut out = String::from("iteration,energy,div_max,step\n");
    for r in &state.history {
        out.push_str(&format!("{},{},{},{}\n", r.iteration, r.energy, r.div_max, r.step));
    }
    out
}

/// Chern–Simons report together with the s-variation comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsReport {
    pub algebra: AlgebraTag,
    pub grid: usize,
    pub functional: FunctionalReport,
    pub s_variation: SVariation,
}

/// Band-limited seeded fields for the Chern–Simons checks; the grid must resolve their products.
pub fn cs_fields(tag: AlgebraTag, seed: u64) -> Result<(LoopField, ConnectionField, AnalyticField, AnalyticField, AnalyticField)> {
    let group = PGroup::for_tag(tag)?;
    let mut smp = Sampler::new(seed);
    let m = tag.im_dim();
    let s = LoopField::new(tag, AnalyticField::random(3, m, 1, 0.2, &mut smp), smp.unit(tag))?;
    let a = ConnectionField::new(group, AnalyticField::random(3, 3 * group.algebra().dim(), 1, 0.3, &mut smp))?;
    let xi = AnalyticField::random(3, 3 * m, 1, 0.3, &mut smp);
    let u = AnalyticField::random(3, group.algebra().dim(), 1, 0.3, &mut smp);
    let eta = AnalyticField::random(3, m, 1, 0.3, &mut smp);
    Ok((s, a, xi, u, eta))
}

pub fn cs_run(tag: AlgebraTag, seed: u64, grid: usize) -> Result<CsReport> {
    let ctx = LoopContext::new(tag);
    let (s, a, xi, u, eta) = cs_fields(tag, seed)?;
    let functional = cs_functional(&ctx, &s, &a, &xi, &u, grid, &crate::fields::gauss_points(3, 2))?;
    let s_variation = cs_s_variation(&ctx, &s, &a, &eta, grid)?;
    Ok(CsReport { algebra: tag, grid, functional, s_variation })
}

/// Which map `companions` solves for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompanionMap {
    Identity,
    /// `Ad_q` for a seeded `q`.
    Adq,
    /// A seeded element of the pseudoautomorphism group.
    Group,
}

impl CompanionMap {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(CompanionMap::Identity),
            "adq" => Ok(CompanionMap::Adq),
            "group" => Ok(CompanionMap::Group),
            _ => Err(Error::Config(format!("unknown map '{s}' (expected identity, adq or group)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompanionReport {
    pub algebra: AlgebraTag,
    pub map: CompanionMap,
    pub mode: Mode,
    /// Row-major matrix of the map on the algebra.
    pub alpha: Vec<Vec<String>>,
    pub companion_dimension: usize,
    pub basis: Vec<Vec<String>>,
    /// Expected companion for `Ad_q`, `q³`.
    pub expected: Option<Vec<String>>,
    pub expected_in_span: Option<bool>,
    /// For the identity map the companions are the right nucleus.
    pub nucleus: Option<String>,
}

fn render<S: Scalar + std::fmt::Display>(v: &[S]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn in_span<S: Scalar>(basis: &[V<S>], v: &V<S>) -> bool {
    let mut cols: Vec<Vec<S>> = basis.iter().map(|b| b.coords.clone()).collect();
    let r0 = Matrix::from_columns(&cols).rank(1e-10);
    cols.push(v.coords.clone());
    Matrix::from_columns(&cols).rank(1e-10) == r0
}

fn companions_generic<S: Scalar + std::fmt::Display>(
    ctx: &LoopContext,
    map: CompanionMap,
    mode: Mode,
    alpha: Matrix<S>,
    expected: Option<V<S>>,
) -> CompanionReport {
    let tag = ctx.tag;
    let basis = companions_of(ctx, &alpha);
    let nucleus = (map == CompanionMap::Identity).then(|| match basis.len() {
        1 => format!("N^R(U{tag}) = {{±1}} ≅ Z₂ (companions of the identity span the real axis)"),
        d if d == tag.dim() => format!("N^R(U{tag}) = U{tag} (associative; every element is a companion of the identity)"),
        d => format!("right nucleus direction space of dimension {d}"),
    });
    CompanionReport {
        algebra: tag,
        map,
        mode,
        alpha: (0..alpha.rows()).map(|i| render(&(0..alpha.cols()).map(|j| alpha[(i, j)].clone()).collect::<Vec<_>>())).collect(),
        companion_dimension: basis.len(),
        expected_in_span: expected.as_ref().map(|e| in_span(&basis, e)),
        expected: expected.map(|e| render(&e.coords)),
        basis: basis.iter().map(|b| render(&b.coords)).collect(),
        nucleus,
    }
}

pub fn companions_run(tag: AlgebraTag, map: CompanionMap, mode: Mode, seed: u64) -> Result<CompanionReport> {
    let ctx = LoopContext::new(tag);
    let mut smp = Sampler::new(seed);
    let n = tag.dim();
    match (mode, map) {
        (Mode::Exact, CompanionMap::Identity) => Ok(companions_generic(&ctx, map, mode, Matrix::<Rational>::identity(n), None)),
        (Mode::Float, CompanionMap::Identity) => Ok(companions_generic(&ctx, map, mode, Matrix::<f64>::identity(n), None)),
        (Mode::Exact, CompanionMap::Adq) => {
            let p = adq_pair(&ctx, &smp.rational_unit(tag))?;
            Ok(companions_generic(&ctx, map, mode, p.alpha, Some(p.companion)))
        }
        (Mode::Float, CompanionMap::Adq) => {
            let p = adq_pair(&ctx, &smp.unit::<f64>(tag))?;
            Ok(companions_generic(&ctx, map, mode, p.alpha, Some(p.companion)))
        }
        (Mode::Exact, CompanionMap::Group) => Err(Error::Config("map = group needs float mode (the exponential is not rational)".into())),
        (Mode::Float, CompanionMap::Group) => {
            let group = PGroup::for_tag(tag)?;
            let h = group.algebra().exp(&smp.coords(group.algebra().dim(), 0.5))?;
            let p = h.pair();
            Ok(companions_generic(&ctx, map, mode, p.alpha, Some(p.companion)))
        }
    }
}

/// Flow start from the seeded quaternion-style random fields on `T^dim`.
pub fn flow_state(tag: AlgebraTag, dim: usize, grid: usize, seed: u64, constant: bool) -> Result<(LoopContext, FlowState)> {
    if grid < 3 || dim == 0 {
        return Err(Error::Config(format!("flow needs dim >= 1 and grid >= 3, got dim {dim}, grid {grid}")));
    }
    let ctx = LoopContext::new(tag);
    let group = PGroup::for_tag(tag)?;
    let (s, a) = if constant {
        (LoopField::constant(tag, dim, V::one(tag)), ConnectionField::zero(group, dim))
    } else {
        seeded_fields(tag, dim, seed)?
    };
    let st = FlowState::new(&ctx, &s, &a, grid)?;
    Ok((ctx, st))
}

/// Domain used by `torsion`: `n^dim` offset grid points.
pub fn torsion_points(dim: usize, n: usize) -> Result<Vec<Vec<f64>>> {
    TorusDomain::new(dim, n)?;
    Ok(sample_points(dim, n))
}
