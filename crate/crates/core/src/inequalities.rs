//! Quotient evaluators for the trace, weighted Sobolev, HLS and fractional
//! Sobolev inequalities, the extremal families, and a fixed test corpus.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::affine::{
    affine_energy, analytic_stack, dt_norm, gradient_l2_norm, nonpoisson_stack, poisson_stack_split, sphere_rule,
    stack_l2_norm, GradientStack, SphereRule,
};
use crate::constants::{frac_sobolev_constant, hls_constant, kappa, sharp_haddad_constant, theorem1_d, Params};
use crate::error::{Error, Result};
use crate::extension::{nonpoisson_norm, radial_transform, RadialProfile, RadialQuad, ZeroPolicy};
use crate::oracle::{double_integral, hls_energy, HlsOracle};
use crate::real::{c, Real};
use crate::sampling::{make_grid, make_tgrid, sample, Field, Grading, Grid, Side, TGrid};
use crate::quadrature::{gauss_jacobi, gauss_legendre};
use crate::special::{bessel_j0, gamma};
use crate::spectral::{duality_pairing, sobolev_norm_report};

/// Amplitude, scale, center and linear map of an extremal family member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtremalParams<T> {
    pub c: T,
    pub gamma: T,
    pub x0: [T; 3],
    pub b: [[T; 3]; 3],
}

impl<T: Real> ExtremalParams<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        ExtremalParams { c: o, gamma: o, x0: [z; 3], b: [[o, z, z], [z, o, z], [z, z, o]] }
    }

    pub fn det(&self, d: usize) -> T {
        let b = &self.b;
        match d {
            1 => b[0][0],
            2 => b[0][0] * b[1][1] - b[0][1] * b[1][0],
            _ => {
                b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
                    + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0])
            }
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let det = self.det(d);
        if det == T::zero() || !det.is_finite() {
            return Err(Error::Parameter("singular map B".into()));
        }
        if !(self.gamma > T::zero()) || !self.c.is_finite() || self.c == T::zero() {
            return Err(Error::Parameter(format!("need gamma > 0 and c != 0, got ({}, {})", self.gamma, self.c)));
        }
        Ok(())
    }

    /// y = B(x − x₀).
    fn apply(&self, x: &[T], d: usize) -> [T; 3] {
        let mut y = [T::zero(); 3];
        for (i, yi) in y.iter_mut().enumerate().take(d) {
            *yi = (0..d).map(|j| self.b[i][j] * (x[j] - self.x0[j])).sum();
        }
        y
    }

    /// Bᵀv.
    fn apply_t(&self, v: &[T; 3], d: usize) -> [T; 3] {
        let mut y = [T::zero(); 3];
        for (j, yj) in y.iter_mut().enumerate().take(d) {
            *yj = (0..d).map(|i| self.b[i][j] * v[i]).sum();
        }
        y
    }
}

/// Grid, t-grid and sphere-rule sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resolution {
    pub grid: usize,
    pub extent: f64,
    pub tnodes: usize,
    pub t_max: f64,
    pub sphere_nodes: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution { grid: 128, extent: 16.0, tnodes: 64, t_max: 32.0, sphere_nodes: 512 }
    }
}

impl Resolution {
    pub fn make_grid<T: Real>(&self, d: usize) -> Result<Grid<T>> {
        make_grid(d, c(self.extent), self.grid)
    }

    pub fn make_tgrid<T: Real>(&self, a: T) -> Result<TGrid<T>> {
        make_tgrid(a, c(self.t_max), self.tnodes, Grading::Geometric)
    }

    /// Circle rule with `sphere_nodes` points (d = 2), Gauss × trapezoid (d = 3).
    pub fn sphere_rule<T: Real>(&self, d: usize) -> Result<SphereRule<T>> {
        match d {
            3 => sphere_rule(3, (self.sphere_nodes as f64).sqrt().ceil() as usize / 2 + 1),
            _ => sphere_rule(d, self.sphere_nodes),
        }
    }

    /// Every size halved, for a posteriori error estimates.
    pub fn coarsened(&self) -> Self {
        Resolution { grid: self.grid / 2, tnodes: self.tnodes / 2, ..*self }
    }
}

/// Second evaluation path attached to a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheck<T> {
    pub label: String,
    pub value: T,
    pub against: T,
    pub rel_error: T,
}

impl<T: Real> CrossCheck<T> {
    pub fn new(label: &str, value: T, against: T) -> Self {
        CrossCheck { label: label.into(), value, against, rel_error: ((value - against) / against).abs() }
    }
}

/// One quotient against its reference constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotientReport<T> {
    pub check: String,
    pub numerator: T,
    pub energy_factor: T,
    pub dt_factor: T,
    pub quotient: T,
    pub reference: T,
    /// reference − quotient.
    pub margin: T,
    /// Relative error budget: truncation plus any discretization estimate.
    pub tail_budget: T,
    pub cross_checks: Vec<CrossCheck<T>>,
    pub resolution: Option<Resolution>,
    pub low_confidence: bool,
    pub notes: Vec<String>,
}

impl<T: Real> QuotientReport<T> {
    fn new(check: &str, numerator: T, energy_factor: T, dt_factor: T, reference: T) -> Self {
        let quotient = numerator / (energy_factor * dt_factor);
        QuotientReport {
            check: check.into(),
            numerator,
            energy_factor,
            dt_factor,
            quotient,
            reference,
            margin: reference - quotient,
            tail_budget: T::zero(),
            cross_checks: Vec::new(),
            resolution: None,
            low_confidence: false,
            notes: Vec::new(),
        }
    }

    pub fn ratio(&self) -> T {
        self.quotient / self.reference
    }

    /// Adds |q − q_coarse|/reference to the budget.
    pub fn add_refinement_budget(&mut self, coarse: &QuotientReport<T>) {
        self.tail_budget = self.tail_budget + ((self.quotient - coarse.quotient) / self.reference).abs();
        self.notes.push(format!("coarse-grid quotient {}", coarse.quotient));
    }

    /// `check,quotient,reference,margin,tail_budget`
    pub fn csv_row(&self) -> String {
        format!("{},{:e},{:e},{:e},{:e}", self.check, self.quotient, self.reference, self.margin, self.tail_budget)
    }
}

pub const CSV_HEADER: &str = "check,quotient,reference,margin,tail_budget";

/// Exponents of the affine-energy and ∂_t factors: (n−1)/(n+a) and (1+a)/(n+a).
fn factor_exponents<T: Real>(prm: &Params<T>) -> (T, T) {
    let n = T::from_usize_(prm.n);
    let den = n + prm.a;
    ((n - T::one()) / den, (T::one() + prm.a) / den)
}

/// Relative share of ‖F‖²_{L²(σ)} in the outer 10% frame of the box and on the last t-node.
pub fn truncation_budget<T: Real>(g: &GradientStack<T>) -> T {
    let grid = g.grid();
    let tg = g.tgrid();
    let edge = grid.half_extent * c(0.9);
    let mut total = T::zero();
    let mut frame = T::zero();
    for (k, s) in g.field.slices.iter().enumerate() {
        for (i, v) in s.values.iter().enumerate() {
            let w = tg.weights[k] * v.norm_sqr();
            total = total + w;
            let x = grid.point(i);
            if (0..grid.d).any(|a| x[a].abs() >= edge) {
                frame = frame + w;
            }
        }
    }
    let last = tg.len() - 1;
    let last_share: T = g.field.slices[last].values.iter().map(|v| v.norm_sqr()).sum::<T>() * tg.weights[last];
    if total == T::zero() {
        return T::zero();
    }
    let model = g.exterior.as_ref().map_or(T::zero(), |e| e.model_error);
    (frame + last_share) / total + model
}

// ---------------------------------------------------------------------------
// Weighted Sobolev (Haddad) family

/// f(t, x) = c(1 + (γt)^s + |B(x − x₀)|^s)^e with value, ∂_t and ∇_x.
pub fn power_family<T: Real>(
    d: usize,
    ep: &ExtremalParams<T>,
    s: T,
    e: T,
) -> Result<impl Fn(T, &[T]) -> (T, T, [T; 3])> {
    ep.validate(d)?;
    if !(s > T::one()) {
        return Err(Error::Parameter(format!("power family needs s > 1, got {s}")));
    }
    let ep = *ep;
    Ok(move |t: T, x: &[T]| {
        let y = ep.apply(x, d);
        let r2: T = y.iter().map(|v| *v * *v).sum();
        let r = r2.sqrt();
        let gt = ep.gamma * t;
        let base = T::one() + gt.powf(s) + r.powf(s);
        let v = ep.c * base.powf(e);
        let common = ep.c * e * s * base.powf(e - T::one());
        let ft = if t > T::zero() { common * ep.gamma * gt.powf(s - T::one()) } else { T::zero() };
        let mut grad = [T::zero(); 3];
        if r > T::zero() {
            let scale = common * r.powf(s - c(2.0));
            let bt = ep.apply_t(&y, d);
            for a in 0..d {
                grad[a] = scale * bt[a];
            }
        }
        (v, ft, grad)
    })
}

/// The equality family c(1 + |γt|^{p′} + |B(x − x₀)|^{p′})^q.
pub fn haddad_extremal<T: Real>(prm: &Params<T>, ep: &ExtremalParams<T>) -> Result<impl Fn(T, &[T]) -> (T, T, [T; 3])> {
    if !(prm.p > T::one()) {
        return Err(Error::Parameter("only the p > 1 branch is implemented".into()));
    }
    power_family(prm.d, ep, prm.p_prime, prm.q)
}

/// Samples a power-family member on the resolution's grid.
pub fn power_family_stack<T: Real>(
    prm: &Params<T>,
    ep: &ExtremalParams<T>,
    s: T,
    e: T,
    res: &Resolution,
) -> Result<GradientStack<T>> {
    let f = power_family(prm.d, ep, s, e)?;
    analytic_stack(f, &res.make_grid(prm.d)?, &res.make_tgrid(prm.a)?)
}

/// ‖F‖_{L²(σ)} / (𝓔_p(F,σ)^{(n−1)/(n+a)} ‖∂_t F‖_{L^p(σ)}^{(1+a)/(n+a)}) against J(n,p,a).
pub fn haddad_quotient<T: Real>(g: &GradientStack<T>, prm: &Params<T>, rule: &SphereRule<T>) -> Result<QuotientReport<T>> {
    let (ee, de) = factor_exponents(prm);
    let num = stack_l2_norm(g)?;
    let energy = affine_energy(g, prm.p, rule)?;
    let dt = dt_norm(g, prm.p)?;
    let mut rep = QuotientReport::new(
        "haddad",
        num,
        energy.powf(ee),
        dt.powf(de),
        sharp_haddad_constant(prm.n, prm.p, prm.a)?,
    );
    rep.tail_budget = truncation_budget(g);
    Ok(rep)
}

/// Haddad quotient of an extremal member at `res`, with the half-resolution
/// difference added to the budget.
pub fn haddad_extremal_check<T: Real>(prm: &Params<T>, ep: &ExtremalParams<T>, res: &Resolution) -> Result<QuotientReport<T>> {
    let rule = res.sphere_rule(prm.d)?;
    let fine = haddad_quotient(&power_family_stack(prm, ep, prm.p_prime, prm.q, res)?, prm, &rule)?;
    let coarse = haddad_quotient(&power_family_stack(prm, ep, prm.p_prime, prm.q, &res.coarsened())?, prm, &rule)?;
    let mut rep = fine;
    rep.check = "haddad-extremal".into();
    rep.add_refinement_budget(&coarse);
    rep.resolution = Some(*res);
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Trace quotients

/// ‖g‖_{Ḣ^{−α}} / (𝓔_p(Pg)^{(n−1)/(n−1+2α)} ‖∂_t Pg‖^{2α/(n−1+2α)}) against D(n,p,α).
///
/// Cross-checks the numerator against (2^{a+1}/Γ(a+1))^{1/2}‖Pg‖_{L²(σ)}.
pub fn trace_quotient_poisson<T: Real>(g: &Field<T>, prm: &Params<T>, res: &Resolution) -> Result<QuotientReport<T>> {
    if g.grid.d != prm.d {
        return Err(Error::Usage(format!("field dimension {} but n − 1 = {}", g.grid.d, prm.d)));
    }
    let tg = res.make_tgrid(prm.a)?;
    let stack = poisson_stack_split(g, &tg, prm.p)?;
    let rule = res.sphere_rule(prm.d)?;
    let num = sobolev_norm_report(g, -prm.alpha)?;
    let (ee, de) = factor_exponents(prm);
    let energy = affine_energy(&stack, prm.p, &rule)?;
    let dt = dt_norm(&stack, prm.p)?;
    let mut rep = QuotientReport::new("poisson", num.value, energy.powf(ee), dt.powf(de), theorem1_d(prm.n, prm.alpha)?);
    let a1 = prm.a + T::one();
    let identity = (c::<T>(2.0).powf(a1) / gamma(a1)?).sqrt() * stack_l2_norm(&stack)?;
    rep.cross_checks.push(CrossCheck::new("norm-identity", identity, num.value));
    let bias = if num.value > T::zero() { num.bias_bound / (num.value * num.value) } else { T::zero() };
    rep.tail_budget = truncation_budget(&stack) + bias;
    rep.resolution = Some(*res);
    Ok(rep)
}

/// |‖h|‖ / (𝓔_p(Qh)^{(n−1)/(n−1+2α)} ‖∂_t Qh‖^{2α/(n−1+2α)}) against J(n,p,2α−1).
///
/// Cross-checks |‖h|‖ against ‖Qh‖_{L²(σ)} computed from the slices.
pub fn trace_quotient_nonpoisson<T: Real>(
    h: &Field<T>,
    prm: &Params<T>,
    base: &RadialProfile<T>,
    res: &Resolution,
    policy: ZeroPolicy,
) -> Result<QuotientReport<T>> {
    let tg = res.make_tgrid(prm.a)?;
    let norm = nonpoisson_norm(h, base, prm, &tg, policy)?;
    let stack = nonpoisson_stack(h, base, prm, &tg, policy)?;
    let rule = res.sphere_rule(prm.d)?;
    let (ee, de) = factor_exponents(prm);
    let energy = affine_energy(&stack, prm.p, &rule)?;
    let dt = dt_norm(&stack, prm.p)?;
    let mut rep = QuotientReport::new(
        "nonpoisson",
        norm.value,
        energy.powf(ee),
        dt.powf(de),
        sharp_haddad_constant(prm.n, prm.p, prm.a)?,
    );
    rep.cross_checks.push(CrossCheck::new("nonpoisson-identity", stack_l2_norm(&stack)?, norm.value));
    rep.tail_budget = truncation_budget(&stack) + norm.excluded_mass.sqrt() + norm.alias_budget;
    if norm.alias_budget > c(0.01) {
        rep.low_confidence = true;
        rep.notes.push(format!(
            "spectrum not resolved at this grid: aliasing budget {:e}; refine the spacing",
            norm.alias_budget
        ));
    }
    if norm.excluded_modes > 0 {
        rep.notes.push(format!(
            "{} modes dropped by the zero policy, {:e} of the spectral mass",
            norm.excluded_modes, norm.excluded_mass
        ));
    }
    rep.notes.push(format!("max W(rho)/W(0) = {:e}", norm.max_weight_ratio));
    rep.resolution = Some(*res);
    Ok(rep)
}

/// h_⋆(x) = (1 + |x|^{p′})^q sampled on `grid`.
pub fn h_star<T: Real>(prm: &Params<T>, grid: &Grid<T>) -> Result<Field<T>> {
    let (pp, q, d) = (prm.p_prime, prm.q, prm.d);
    sample(
        move |x: &[T]| {
            let r: T = x[..d].iter().map(|v| *v * *v).sum::<T>().sqrt();
            (T::one() + r.powf(pp)).powf(q)
        },
        grid,
    )
}

// ---------------------------------------------------------------------------
// HLS and fractional Sobolev

/// c(γ² + |B(x − x₀)|²)^{−(d+2α)/2}; the HLS extremal when B = I.
pub fn hls_bubble<T: Real>(ep: &ExtremalParams<T>, d: usize, alpha: T) -> impl Fn(&[T]) -> T {
    let ep = *ep;
    let e = -(T::from_usize_(d) + c::<T>(2.0) * alpha) * c(0.5);
    move |x: &[T]| {
        let y = ep.apply(x, d);
        let r2: T = y.iter().map(|v| *v * *v).sum();
        ep.c * (ep.gamma * ep.gamma + r2).powf(e)
    }
}

/// |∬ f f |x−y|^{2α−d}| / ‖f‖²_{L^{2d/(d+2α)}} by the direct-space oracle,
/// with the oracle box centered at `center`.
pub fn hls_quotient_of<F>(f: F, center: &[f64], d: usize, alpha: f64, oracle: HlsOracle) -> Result<QuotientReport<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let h = hls_energy(f, center, d, alpha, oracle)?;
    let r = 2.0 * d as f64 / (d as f64 + 2.0 * alpha);
    let lr = h.lr_integral.powf(2.0 / r);
    let mut rep = QuotientReport::new("hls", h.pairing.abs(), lr, 1.0, hls_constant(d, alpha)?);
    // Remaining quadrature error scales like the square of the oracle step.
    let step = 2.0 * oracle.extent / oracle.n as f64;
    rep.tail_budget = 0.02 * step * step;
    rep.notes.push(format!("exterior share of the pairing {:e}", h.exterior_share));
    Ok(rep)
}

/// HLS quotient of c(γ² + |B(x − x₀)|²)^{−(d+2α)/2}.
pub fn hls_pairing_check(fp: &ExtremalParams<f64>, d: usize, alpha: f64, oracle: HlsOracle) -> Result<QuotientReport<f64>> {
    fp.validate(d)?;
    if !(alpha > 0.0 && 2.0 * alpha < d as f64) {
        return Err(Error::Parameter(format!("need 0 < alpha < d/2, got {alpha}")));
    }
    let f = hls_bubble(fp, d, alpha);
    let mut rep = hls_quotient_of(f, &fp.x0[..d], d, alpha, oracle)?;
    rep.check = "hls-extremal".into();
    Ok(rep)
}

/// Smooth cutoff: 1 on [0, 1/2], 0 on [1, ∞).
pub fn cutoff(s: f64) -> f64 {
    if s <= 0.5 {
        return 1.0;
    }
    if s >= 1.0 {
        return 0.0;
    }
    let u = 2.0 * (s - 0.5);
    let a = (-1.0 / u).exp();
    let b = (-1.0 / (1.0 - u)).exp();
    b / (a + b)
}

/// ‖f‖²_{L^{2d/(d−2α)}} / ‖f‖²_{Ḣ^α} for a sampled compactly supported f.
pub fn frac_sobolev_quotient_of<T: Real>(f: &Field<T>, alpha: T) -> Result<QuotientReport<T>> {
    let d = f.grid.d;
    let dd = T::from_usize_(d);
    let r = c::<T>(2.0) * dd / (dd - c::<T>(2.0) * alpha);
    let lr = f.lp_norm(r);
    let h = sobolev_norm_report(f, alpha)?;
    let mut rep = QuotientReport::new("fracsob", lr * lr, h.value * h.value, T::one(), frac_sobolev_constant(d, alpha)?);
    rep.tail_budget = h.bias_bound / (h.value * h.value);
    Ok(rep)
}

/// Fractional Sobolev quotient of c(γ² + |x − x₀|²)^{(2α−d)/2} cut off smoothly at
/// radius r, extrapolated to r → ∞.
///
/// A cutoff member is a legitimate test function, so its quotient is below the
/// constant. With s = d − 2α the deficit expands in r^{−s}, r^{−2s} and r^{−d};
/// a least-squares fit over five radii up to 0.9R (R the grid half-width) gives
/// the reported quotient. The spread to the fit without the last term is the
/// tail budget, and above 5% the report is marked low-confidence. The raw 0.9R
/// value stays in the cross-checks.
pub fn frac_sobolev_check(fp: &ExtremalParams<f64>, d: usize, alpha: f64, res: &Resolution) -> Result<QuotientReport<f64>> {
    fp.validate(d)?;
    if !(alpha > 0.0 && alpha < 1.0 && 2.0 * alpha < d as f64) {
        return Err(Error::Parameter(format!("need 0 < alpha < min(1, d/2), got {alpha}")));
    }
    let grid = res.make_grid::<f64>(d)?;
    let e = (2.0 * alpha - d as f64) * 0.5;
    let eval = |rc: f64| -> Result<QuotientReport<f64>> {
        let ep = *fp;
        let f = sample(
            move |x: &[f64]| {
                let r2: f64 = x[..d].iter().map(|v| v * v).sum();
                let y = ep.apply(&x.iter().zip(&ep.x0).map(|(a, b)| a + b).collect::<Vec<_>>(), d);
                let q2: f64 = y.iter().map(|v| v * v).sum();
                ep.c * (ep.gamma * ep.gamma + q2).powf(e) * cutoff(r2.sqrt() / rc)
            },
            &grid,
        )?;
        frac_sobolev_quotient_of(&f, alpha)
    };
    let rc = 0.9 * res.extent;
    let radii: Vec<f64> = [1.0, 0.85, 0.7, 0.6, 0.5].iter().map(|k| k * rc).collect();
    let reps = radii.iter().map(|&r| eval(r)).collect::<Result<Vec<_>>>()?;
    let q: Vec<f64> = reps.iter().map(|r| r.quotient).collect();
    let s = d as f64 - 2.0 * alpha;
    let mut exps = vec![s, 2.0 * s, d as f64];
    exps.sort_by(f64::total_cmp);
    exps.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let full = extrapolate(&radii, &q, &exps);
    let reduced = extrapolate(&radii, &q, &exps[..exps.len() - 1]);
    let mut rep = reps[0].clone();
    let raw = rep.quotient;
    rep.check = "fracsob-extremal".into();
    rep.quotient = full;
    rep.margin = rep.reference - full;
    rep.tail_budget += ((full - reduced) / rep.reference).abs();
    rep.low_confidence = rep.tail_budget > 0.05;
    rep.cross_checks.push(CrossCheck::new("cutoff-raw", raw, rep.reference));
    rep.cross_checks.push(CrossCheck::new("reduced-extrapolation", reduced, rep.reference));
    rep.notes.push(format!("cutoff quotients {q:?} at radii {radii:?}, exponents {exps:?}"));
    rep.resolution = Some(*res);
    Ok(rep)
}

/// Fractional Sobolev quotient of the radial member c(γ² + r²)^{(2α−d)/2}
/// without truncation, by one-dimensional quadrature.
///
/// The L^{2d/(d−2α)} norm is a trapezoid sum in log r. For f̂ at γρ < 1 the
/// power tail c r^{−s}, s = d − 2α, is split off: its transform is the Riesz
/// kernel c π^{s−d/2} Γ((d−s)/2)/Γ(s/2) ρ^{s−d}, and the remainder decays like
/// r^{−s−2}. Above that f̂ is transformed directly. ‖f‖²_{Ḣ^α} is then a
/// trapezoid sum in log ρ with the leading ρ^{s−1} behaviour integrated exactly
/// below the first node. The budget is the change when the step is doubled,
/// the radial cutoffs halved and the near-origin split moved.
pub fn frac_sobolev_radial(c0: f64, gamma_: f64, d: usize, alpha: f64) -> Result<QuotientReport<f64>> {
    if !(alpha > 0.0 && alpha < 1.0 && 2.0 * alpha < d as f64) || !(1..=3).contains(&d) {
        return Err(Error::Parameter(format!("need d in 1..=3 and 0 < alpha < min(1, d/2), got d = {d}, alpha = {alpha}")));
    }
    if !(gamma_ > 0.0) || c0 == 0.0 || !c0.is_finite() {
        return Err(Error::Parameter(format!("need gamma > 0 and c != 0, got ({gamma_}, {c0})")));
    }
    let dd = d as f64;
    let s = dd - 2.0 * alpha;
    let area = 2.0 * std::f64::consts::PI.powf(0.5 * dd) / gamma(0.5 * dd)?;
    let riesz = c0 * std::f64::consts::PI.powf(s - 0.5 * dd) * gamma(0.5 * (dd - s))? / gamma(0.5 * s)?;
    let g2 = gamma_ * gamma_;
    let h = move |r: f64| -> (f64, f64) {
        let b = (g2 + r * r).powf(-0.5 * s);
        (c0 * b, -c0 * s * r * b / (g2 + r * r))
    };
    // c[(γ² + r²)^{−s/2} − r^{−s}] = c r^{−s} expm1(−(s/2) ln(1 + γ²/r²)).
    let residual = move |r: f64| -> (f64, f64) {
        let g = g2 / (r * r);
        let e = (-0.5 * s * g.ln_1p()).exp_m1();
        let rs = r.powf(-s);
        (c0 * rs * e, c0 * (-s * rs / r * e + rs * (1.0 + e) * s * g2 / (r * r * r * (1.0 + g))))
    };
    let two_pi = 2.0 * std::f64::consts::PI;
    // Near the origin the residual carries −c r^{−s}. Within r0 that piece of
    // the integrand is r^{d−1−s} times a smooth factor and goes to Gauss–Jacobi.
    // r0 stays of order one: the far part is then smooth on the 1/4-wide panels
    // of the radial transform.
    let near = move |rho: f64, r0: f64, nodes: usize| -> f64 {
        let (jx, jw) = gauss_jacobi::<f64>(nodes, 0.0, dd - 1.0 - s);
        let (lx, lw) = gauss_legendre::<f64>(nodes);
        let cc = two_pi * rho;
        // Radial kernel of the d-dimensional transform divided by r^{d−1}.
        let kern = |r: f64| match d {
            1 => 2.0 * (cc * r).cos(),
            2 => two_pi * bessel_j0(cc * r),
            _ => {
                let z = cc * r;
                4.0 * std::f64::consts::PI * if z.abs() < 1e-8 { 1.0 } else { z.sin() / z }
            }
        };
        let half = 0.5 * r0;
        let sing = jx.iter().zip(&jw).map(|(x, w)| w * cutoff(0.5 * (1.0 + x)) * kern(half * (1.0 + x))).sum::<f64>();
        let smooth = lx
            .iter()
            .zip(&lw)
            .map(|(x, w)| {
                let r = half * (1.0 + x);
                w * h(r).0 * cutoff(r / r0) * kern(r) * r.powi(d as i32 - 1)
            })
            .sum::<f64>();
        smooth * half - c0 * sing * half.powf(dd - s)
    };
    let fhat = |rho: f64, rq: RadialQuad<f64>, r0: f64, nodes: usize| -> Result<f64> {
        if gamma_ * rho >= 1.0 {
            return radial_transform(d, h, rho, rq);
        }
        let far = move |r: f64| -> (f64, f64) {
            let (v, dv) = residual(r);
            let w = 1.0 - cutoff(r / r0);
            (v * w, dv * w)
        };
        Ok(radial_transform(d, far, rho, rq)? + near(rho, r0, nodes) + riesz * rho.powf(s - dd))
    };
    let r_exp = 2.0 * dd / s;
    let lr = |step: f64| -> f64 {
        let (lo, hi) = ((1e-9 * gamma_).ln(), (1e9 * gamma_).ln());
        let m = ((hi - lo) / step).ceil() as usize;
        let du = (hi - lo) / m as f64;
        (0..=m)
            .map(|k| {
                let r = (lo + du * k as f64).exp();
                let w = if k == 0 || k == m { 0.5 } else { 1.0 };
                w * h(r).0.abs().powf(r_exp) * area * r.powf(dd)
            })
            .sum::<f64>()
            * du
    };
    let seminorm = |step: f64, rq: RadialQuad<f64>, r0: f64, nodes: usize| -> Result<f64> {
        let rho_lo = 1e-6 / gamma_;
        let (lo, hi) = (rho_lo.ln(), (8.0 / gamma_).ln());
        let m = ((hi - lo) / step).ceil() as usize;
        let dv = (hi - lo) / m as f64;
        let mut sum = 0.0;
        for k in 0..=m {
            let rho = (lo + dv * k as f64).exp();
            let w = if k == 0 || k == m { 0.5 } else { 1.0 };
            let f = fhat(rho, rq, r0, nodes)?;
            sum += w * (two_pi * rho).powf(2.0 * alpha) * f * f * area * rho.powf(dd);
        }
        // Below ρ_lo, f̂ ≈ riesz·ρ^{s−d} and the integrand is ∝ ρ^{s−1}.
        let head = two_pi.powf(2.0 * alpha) * riesz * riesz * area * rho_lo.powf(s) / s;
        Ok(sum * dv + head)
    };
    let rq = RadialQuad::default();
    let rq2 = RadialQuad { r_near: 2.0 * rq.r_near, r_far: 2.0 * rq.r_far };
    let (l_fine, l_coarse) = (lr(0.01), lr(0.02));
    let (h_fine, h_coarse) = (seminorm(0.05, rq2, 2.0, 48)?, seminorm(0.1, rq, 1.0, 32)?);
    let lnorm2 = l_fine.powf(2.0 / r_exp);
    let mut rep = QuotientReport::new("fracsob-radial", lnorm2, h_fine, 1.0, frac_sobolev_constant(d, alpha)?);
    let coarse = l_coarse.powf(2.0 / r_exp) / h_coarse;
    rep.tail_budget = ((rep.quotient - coarse) / rep.reference).abs();
    rep.cross_checks.push(CrossCheck::new("coarse-steps", coarse, rep.quotient));
    rep.notes.push(format!("|f|^r integral {l_fine}, squared seminorm {h_fine}"));
    Ok(rep)
}

/// Least-squares value at r = ∞ of q(r) = q∞ + Σ_k A_k r^{−s_k}.
fn extrapolate(r: &[f64], q: &[f64], s: &[f64]) -> f64 {
    let m = s.len() + 1;
    let basis = |ri: f64| -> Vec<f64> { std::iter::once(1.0).chain(s.iter().map(|&e| ri.powf(-e))).collect() };
    // Normal equations, augmented with the right-hand side.
    let mut a = vec![vec![0.0; m + 1]; m];
    for (&ri, &qi) in r.iter().zip(q) {
        let b = basis(ri);
        for i in 0..m {
            for j in 0..m {
                a[i][j] += b[i] * b[j];
            }
            a[i][m] += b[i] * qi;
        }
    }
    for col in 0..m {
        let piv = (col..m).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap_or(col);
        a.swap(col, piv);
        for row in 0..m {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..=m {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    a[0][m] / a[0][0]
}

/// ∫(2π|ξ|)^{−2α}|f̂|² / ‖f‖²_{L^{2d/(d+2α)}} against 𝖡Γ(2(1−α))2^{2α−1}.
///
/// The numerator is cross-checked against the direct double integral divided by
/// κ(2α) when the grid is small enough for the oracle, else against the
/// spectral pairing.
pub fn dual_sobolev_check(f: &Field<f64>, alpha: f64) -> Result<QuotientReport<f64>> {
    let d = f.grid.d;
    let num = sobolev_norm_report(f, -alpha)?;
    let r = 2.0 * d as f64 / (d as f64 + 2.0 * alpha);
    let lr = f.lp_norm(r);
    let mut rep = QuotientReport::new("dual-sobolev", num.value * num.value, lr * lr, 1.0, frac_sobolev_constant(d, alpha)?);
    rep.tail_budget = num.bias_bound / (num.value * num.value);
    if f.values.len() <= 4096 {
        rep.cross_checks.push(CrossCheck::new(
            "double-integral",
            double_integral(f, f, alpha)?.re / kappa(d, alpha)?,
            rep.numerator,
        ));
    }
    rep.cross_checks.push(CrossCheck::new("duality-pairing", duality_pairing(f, f, alpha)?.re, rep.numerator));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Energy comparisons

/// 𝓔_2(F) against ‖∇_x F‖_{L²(σ)}.
pub fn energy_vs_gradient<T: Real>(g: &GradientStack<T>, rule: &SphereRule<T>) -> Result<(T, T)> {
    Ok((affine_energy(g, c(2.0), rule)?, gradient_l2_norm(g)?))
}

/// The chain 2𝓔_2‖∂_t F‖ ≤ 2‖∇_x F‖‖∂_t F‖ ≤ ‖∇_x F‖² + ‖∂_t F‖², all with σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyChain<T> {
    pub affine: T,
    pub split: T,
    pub full: T,
}

pub fn energy_chain<T: Real>(g: &GradientStack<T>, rule: &SphereRule<T>) -> Result<EnergyChain<T>> {
    let two = c::<T>(2.0);
    let (e2, gx) = energy_vs_gradient(g, rule)?;
    let dt = dt_norm(g, two)?;
    Ok(EnergyChain { affine: two * e2 * dt, split: two * gx * dt, full: gx * gx + dt * dt })
}

// ---------------------------------------------------------------------------
// Corpus

/// Boundary fields spanning radial/non-radial and fast/slow decay.
pub fn corpus(grid: &Grid<f64>, alpha: f64, seed: u64) -> Result<Vec<(String, Field<f64>)>> {
    let d = grid.d;
    let pi = std::f64::consts::PI;
    let mut out = Vec::new();
    for &(name, s1, s2, shear) in &[
        ("gaussian", 1.0, 1.0, 0.0),
        ("gaussian-aniso", 1.0, 0.25, 0.0),
        ("gaussian-sheared", 0.5, 2.0, 0.7),
    ] {
        out.push((
            name.to_string(),
            sample(
                move |x: &[f64]| {
                    let u = x[0] + shear * x.get(1).copied().unwrap_or(0.0);
                    let rest: f64 = x[1..d].iter().map(|v| v * v).sum();
                    (-pi * (s1 * u * u + s2 * rest)).exp()
                },
                grid,
            )?,
        ));
    }
    let bubble = hls_bubble(&ExtremalParams::identity(), d, alpha);
    out.push(("bubble".into(), sample(bubble, grid)?));
    let bump = move |x: &[f64]| {
        let r2: f64 = x[..d].iter().map(|v| v * v).sum();
        (1.0 + x[0] - 0.5 * r2) * cutoff(r2.sqrt() / 4.0)
    };
    out.push(("bump".into(), sample(bump, grid)?));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<([f64; 3], f64, f64)> = (0..12)
        .map(|_| {
            let mut k = [0.0; 3];
            for v in k.iter_mut().take(d) {
                *v = rng.gen_range(-0.6..0.6);
            }
            (k, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * pi))
        })
        .collect();
    out.push((
        "band-limited".into(),
        sample(
            move |x: &[f64]| {
                let r2: f64 = x[..d].iter().map(|v| v * v).sum();
                let s: f64 = modes
                    .iter()
                    .map(|(k, a, ph)| a * (2.0 * pi * (0..d).map(|i| k[i] * x[i]).sum::<f64>() + ph).cos())
                    .sum();
                (1.0 + s) * (-pi * r2 / 9.0).exp()
            },
            grid,
        )?,
    ));
    Ok(out)
}

/// Samples a complex field from real and imaginary closures (convenience for tests).
pub fn complex_field<F, G>(re: F, im: G, grid: &Grid<f64>) -> Result<Field<f64>>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    let vals = (0..grid.len())
        .map(|i| {
            let x = grid.point(i);
            Complex::new(re(&x[..grid.d]), im(&x[..grid.d]))
        })
        .collect();
    Field::new(*grid, vals, Side::Physical)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::derive_params;

    #[test]
    fn extremal_value_at_origin() {
        let prm = derive_params::<f64>(3, 0.5).unwrap();
        let f = haddad_extremal(&prm, &ExtremalParams::identity()).unwrap();
        assert_eq!(f(0.0, &[0.0, 0.0]).0, 1.0);
        let (v, _, _) = f(0.3, &[0.2, -0.4]);
        let want = (1.0 + 0.3f64.powf(6.0) + (0.2f64 * 0.2 + 0.16).powf(3.0)).powf(-1.5);
        assert!((v - want).abs() < 1e-15);
    }

    #[test]
    fn extremal_decay_exponent() {
        let prm = derive_params::<f64>(3, 0.5).unwrap();
        let f = haddad_extremal(&prm, &ExtremalParams::identity()).unwrap();
        let (a, b) = (f(0.0, &[100.0, 0.0]).0, f(0.0, &[200.0, 0.0]).0);
        let slope = (b / a).ln() / 2f64.ln();
        assert!((slope - prm.p_prime * prm.q).abs() < 1e-9, "{slope}");
    }

    #[test]
    fn extremal_derivatives_match_differences() {
        let prm = derive_params::<f64>(3, 0.75).unwrap();
        let mut ep = ExtremalParams::identity();
        ep.b = [[1.2, 0.3, 0.0], [-0.1, 0.9, 0.0], [0.0, 0.0, 1.0]];
        ep.x0 = [0.2, -0.1, 0.0];
        ep.gamma = 1.3;
        let f = haddad_extremal(&prm, &ep).unwrap();
        let h = 1e-5;
        for &(t, x0, x1) in &[(0.4, 0.3, 0.5), (1.1, -0.7, 0.2), (0.2, 1.5, -1.0)] {
            let (_, ft, g) = f(t, &[x0, x1]);
            let dt = (f(t + h, &[x0, x1]).0 - f(t - h, &[x0, x1]).0) / (2.0 * h);
            let dx = (f(t, &[x0 + h, x1]).0 - f(t, &[x0 - h, x1]).0) / (2.0 * h);
            let dy = (f(t, &[x0, x1 + h]).0 - f(t, &[x0, x1 - h]).0) / (2.0 * h);
            assert!((ft - dt).abs() < 1e-6 && (g[0] - dx).abs() < 1e-6 && (g[1] - dy).abs() < 1e-6);
        }
        ep.b = [[1.0, 2.0, 0.0], [0.5, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(haddad_extremal(&prm, &ep).is_err());
    }

    #[test]
    fn csv_row_layout() {
        let rep = QuotientReport::new("x", 2.0, 1.0, 1.0, 4.0);
        assert_eq!(rep.csv_row(), "x,2e0,4e0,2e0,0e0");
        assert_eq!(CSV_HEADER.split(',').count(), 5);
    }

    #[test]
    fn cutoff_is_smooth_step() {
        assert_eq!(cutoff(0.2), 1.0);
        assert_eq!(cutoff(1.2), 0.0);
        assert!((cutoff(0.75) - 0.5).abs() < 1e-15);
    }
}
