//! Directional derivatives, sphere rules, the weighted affine energy and
//! weighted half-space norms.
//!
//! All grid norms are sums Σ_k w_k Σ_x |·|^p Δx^d with the t-grid weights
//! carrying σ = t^a. Poisson stacks built with [`poisson_stack_split`] add an
//! analytic far-field contribution from outside the sampled box.

use num_complex::Complex;
use serde::Serialize;

use crate::constants::{affine_normalizer, sphere_area};
use crate::error::{Error, Result};
use crate::extension::{
    check_dims, multiplier_slices, nonpoisson_modes, poisson_multiplier, poisson_parts, RadialProfile, Want,
    ZeroPolicy,
};
use crate::constants::Params;
use crate::quadrature::{gauss_jacobi, gauss_legendre};
use crate::real::{c, Real};
use crate::sampling::{Field, Grid, HalfSpaceField, Side, TGrid};
use crate::special::gamma;
use crate::spectral::{dft, idft};

// ---------------------------------------------------------------------------
// Sphere rules

/// Quadrature on S^{d−1} ⊂ ℝ^d.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereRule<T> {
    pub d: usize,
    pub directions: Vec<[T; 3]>,
    pub weights: Vec<T>,
    /// Equispaced circle rule (enables the binned energy path).
    pub circle: bool,
}

/// d = 1: the two points ±1. d = 2: `m`-point trapezoid on the circle.
/// d = 3: Gauss–Legendre in cos θ with `m` nodes times a 2m-point trapezoid in φ.
pub fn sphere_rule<T: Real>(d: usize, m: usize) -> Result<SphereRule<T>> {
    let (o, z) = (T::one(), T::zero());
    match d {
        1 => Ok(SphereRule { d, directions: vec![[o, z, z], [-o, z, z]], weights: vec![o, o], circle: false }),
        2 => {
            if m < 4 || !m.is_multiple_of(2) {
                return Err(Error::Parameter(format!("circle rule needs an even node count >= 4, got {m}")));
            }
            let h = c::<T>(2.0) * T::PI() / T::from_usize_(m);
            let directions = (0..m)
                .map(|j| {
                    let th = h * T::from_usize_(j);
                    [th.cos(), th.sin(), z]
                })
                .collect();
            Ok(SphereRule { d, directions, weights: vec![h; m], circle: true })
        }
        3 => {
            if m < 2 {
                return Err(Error::Parameter(format!("sphere rule needs m >= 2, got {m}")));
            }
            let (x, w) = gauss_legendre::<T>(m);
            let naz = 2 * m;
            let h = c::<T>(2.0) * T::PI() / T::from_usize_(naz);
            let mut directions = Vec::with_capacity(m * naz);
            let mut weights = Vec::with_capacity(m * naz);
            for (ct, wt) in x.iter().zip(&w) {
                let st = (T::one() - *ct * *ct).sqrt();
                for j in 0..naz {
                    let ph = h * T::from_usize_(j);
                    directions.push([st * ph.cos(), st * ph.sin(), *ct]);
                    weights.push(*wt * h);
                }
            }
            Ok(SphereRule { d, directions, weights, circle: false })
        }
        _ => Err(Error::Parameter(format!("no sphere rule for d = {d}"))),
    }
}

// ---------------------------------------------------------------------------
// Gradient stacks

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Provenance {
    Spectral,
    Analytic,
    /// Spectral in x, finite differences across t-nodes; for validation.
    FiniteDifference,
}

/// Far-field contributions from outside the sampled box (or above T_max).
#[derive(Debug, Clone, PartialEq)]
pub struct Exterior<T> {
    /// Exponent of `grad_p` and `dt_p`.
    pub p: T,
    /// Directions from the far-field center.
    pub directions: Vec<[T; 3]>,
    /// ∫∫|∂_r F|^p σ over the exterior part of each direction's cone.
    pub grad_p: Vec<T>,
    pub grad_2: Vec<T>,
    pub dt_p: T,
    pub dt_2: T,
    pub l2_sq: T,
    /// Rough relative size of the neglected quadrupole and periodization terms.
    pub model_error: T,
}

/// A half-space field with its spatial gradient and time derivative on every t-node.
#[derive(Debug, Clone)]
pub struct GradientStack<T> {
    pub field: HalfSpaceField<T>,
    /// grad[k][axis]
    pub grad: Vec<Vec<Field<T>>>,
    pub dt: Vec<Field<T>>,
    pub provenance: Provenance,
    pub exterior: Option<Exterior<T>>,
}

impl<T: Real> GradientStack<T> {
    pub fn grid(&self) -> Grid<T> {
        self.field.grid()
    }

    pub fn tgrid(&self) -> &TGrid<T> {
        &self.field.tgrid
    }

    /// Multiplies every component by s (the exterior scales by |s|^p and |s|²).
    pub fn scaled(&self, s: T) -> Self {
        let sc = |v: &Vec<Field<T>>| v.iter().map(|f| f.scaled(s)).collect::<Vec<_>>();
        GradientStack {
            field: self.field.scaled(s),
            grad: self.grad.iter().map(sc).collect(),
            dt: sc(&self.dt),
            provenance: self.provenance,
            exterior: self.exterior.as_ref().map(|e| {
                let sp = s.abs().powf(e.p);
                let s2 = s * s;
                Exterior {
                    p: e.p,
                    directions: e.directions.clone(),
                    grad_p: e.grad_p.iter().map(|v| *v * sp).collect(),
                    grad_2: e.grad_2.iter().map(|v| *v * s2).collect(),
                    dt_p: e.dt_p * sp,
                    dt_2: e.dt_2 * s2,
                    l2_sq: e.l2_sq * s2,
                    model_error: e.model_error,
                }
            }),
        }
    }
}

fn set_to_stack<T: Real>(
    tgrid: &TGrid<T>,
    set: crate::extension::SliceSet<T>,
    provenance: Provenance,
) -> Result<GradientStack<T>> {
    Ok(GradientStack {
        field: HalfSpaceField::new(tgrid.clone(), set.value)?,
        grad: set.grad,
        dt: set.dt,
        provenance,
        exterior: None,
    })
}

fn poisson_mult<T: Real>(grid: &Grid<T>) -> impl Fn(T, usize) -> (T, T) {
    let rho: Vec<T> = (0..grid.len()).map(|i| grid.freq_norm(i)).collect();
    let two_pi = c::<T>(2.0) * T::PI();
    move |t, i| {
        let m = poisson_multiplier(t, rho[i]);
        (m, -two_pi * rho[i] * m)
    }
}

const ALL: Want = Want { value: true, dt: true, grad: true };

/// Torus Poisson extension with closed-form multiplier derivatives.
pub fn poisson_stack<T: Real>(g: &Field<T>, tgrid: &TGrid<T>) -> Result<GradientStack<T>> {
    let spec = dft(g)?;
    let set = multiplier_slices(&spec, tgrid, poisson_mult(&spec.grid), ALL)?;
    set_to_stack(tgrid, set, Provenance::Spectral)
}

/// Poisson extension into the whole half-space.
///
/// g is split as g₀ + m·φ(· − x̄) with m the mass, x̄ the centroid and φ a
/// short combination of Poisson kernels. The zero-mass remainder is extended
/// on the torus and the carrier in closed form; outside the box and above T_max the field is modeled by m·P_t(x − x̄).
pub fn poisson_stack_split<T: Real>(g: &Field<T>, tgrid: &TGrid<T>, p: T) -> Result<GradientStack<T>> {
    let grid = g.grid;
    if !(2..=3).contains(&grid.d) {
        return Err(Error::Parameter(format!("far-field model needs d = 2 or 3, got {}", grid.d)));
    }
    if g.side != Side::Physical {
        return Err(Error::Usage("expected a physical-side field".into()));
    }
    let n = grid.d + 1;
    let cell = grid.cell_volume();
    let mass: Complex<T> = g.values.iter().fold(Complex::new(T::zero(), T::zero()), |a, v| a + v) * cell;
    let abs_total: T = g.values.iter().map(|v| v.norm()).sum::<T>() * cell;
    if mass.norm() <= c::<T>(1e-12) * abs_total {
        return poisson_stack(g, tgrid);
    }
    let mut center = [T::zero(); 3];
    for (axis, ce) in center.iter_mut().enumerate().take(grid.d) {
        let mut s = Complex::new(T::zero(), T::zero());
        for (i, v) in g.values.iter().enumerate() {
            s = s + v * grid.point(i)[axis];
        }
        *ce = (mass.conj() * s * cell).re / mass.norm_sqr();
    }
    // Second moment about the centroid, projected on the mass phase.
    let mut s2 = Complex::new(T::zero(), T::zero());
    let mut spread = T::zero();
    for (i, v) in g.values.iter().enumerate() {
        let x = grid.point(i);
        let r2: T = (0..grid.d).map(|a| (x[a] - center[a]).powi(2)).sum();
        s2 = s2 + v * r2;
        spread = spread + r2 * v.norm();
    }
    let m2 = (mass.conj() * s2 * cell).re / mass.norm_sqr();
    let spread = spread * cell / abs_total;
    let dd = T::from_usize_(grid.d);
    let t0 = (m2.abs() / dd).sqrt().max(c::<T>(2.0) * grid.dx).min(grid.half_extent * c(0.125));
    // Carrier Σ c_j P_{j t₀}: unit mass, zero first t-moment and second moment m2,
    // so it matches the extension of g up to the traceless quadrupole.
    let mu = -m2 / (dd * t0 * t0);
    let two = c::<T>(2.0);
    let carrier = [(t0, (mu + c(6.0)) / two), (t0 * two, -mu - c(3.0)), (t0 * c(3.0), (mu + two) / two)];

    let mut spec = dft(g)?;
    let two_pi = c::<T>(2.0) * T::PI();
    for (i, v) in spec.values.iter_mut().enumerate() {
        let xi = grid.freq_point(i);
        let phase: T = (0..grid.d).map(|a| xi[a] * center[a]).sum();
        let rho = grid.freq_norm(i);
        let amp: T = carrier.iter().map(|&(tj, cj)| cj * poisson_multiplier(tj, rho)).sum();
        *v = *v - mass * Complex::from_polar(amp, -two_pi * phase);
    }
    let mut set = multiplier_slices(&spec, tgrid, poisson_mult(&grid), ALL)?;
    for (k, &t) in tgrid.nodes.iter().enumerate() {
        for i in 0..grid.len() {
            let x = grid.point(i);
            let mut y = [T::zero(); 3];
            for a in 0..grid.d {
                y[a] = x[a] - center[a];
            }
            let r = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
            let (mut pv, mut pt, mut pr) = (T::zero(), T::zero(), T::zero());
            for &(tj, cj) in &carrier {
                let (v, vt, vr) = poisson_parts(t + tj, r, n);
                pv = pv + cj * v;
                pt = pt + cj * vt;
                pr = pr + cj * vr;
            }
            set.value[k].values[i] = set.value[k].values[i] + mass * pv;
            set.dt[k].values[i] = set.dt[k].values[i] + mass * pt;
            if r > T::zero() {
                for a in 0..grid.d {
                    set.grad[k][a].values[i] = set.grad[k][a].values[i] + mass * (pr * y[a] / r);
                }
            }
        }
    }
    // The carrier phase leaves imaginary residue on the unpaired Nyquist lines.
    if g.values.iter().all(|v| v.im == T::zero()) {
        let zero = T::zero();
        for k in 0..tgrid.len() {
            for f in std::iter::once(&mut set.value[k]).chain(std::iter::once(&mut set.dt[k])).chain(set.grad[k].iter_mut()) {
                f.values.iter_mut().for_each(|v| v.im = zero);
            }
        }
    }
    let mut stack = set_to_stack(tgrid, set, Provenance::Spectral)?;
    let lo = -grid.half_extent - grid.dx * c(0.5);
    let hi = grid.half_extent - grid.dx * c(0.5);
    stack.exterior = Some(monopole_exterior(mass.norm(), &center, grid.d, lo, hi, tgrid, p, spread)?);
    Ok(stack)
}

/// Non-Poisson extension with closed-form multiplier derivatives.
pub fn nonpoisson_stack<T: Real>(
    h: &Field<T>,
    base: &RadialProfile<T>,
    prm: &Params<T>,
    tgrid: &TGrid<T>,
    policy: ZeroPolicy,
) -> Result<GradientStack<T>> {
    check_dims(h, prm)?;
    let spec = dft(h)?;
    let mult = nonpoisson_modes(&spec, base, prm, policy);
    let set = multiplier_slices(&spec, tgrid, mult, ALL)?;
    set_to_stack(tgrid, set, Provenance::Spectral)
}

/// Samples a closed-form family: f(t, x) returns (F, ∂_t F, ∇_x F).
pub fn analytic_stack<T: Real, F>(f: F, grid: &Grid<T>, tgrid: &TGrid<T>) -> Result<GradientStack<T>>
where
    F: Fn(T, &[T]) -> (T, T, [T; 3]),
{
    let zero = Complex::new(T::zero(), T::zero());
    let mut value = Vec::with_capacity(tgrid.len());
    let mut dt = Vec::with_capacity(tgrid.len());
    let mut grad = Vec::with_capacity(tgrid.len());
    for &t in &tgrid.nodes {
        let mut v = vec![zero; grid.len()];
        let mut vt = vec![zero; grid.len()];
        let mut vg = vec![vec![zero; grid.len()]; grid.d];
        for i in 0..grid.len() {
            let x = grid.point(i);
            let (f0, ft, fx) = f(t, &x[..grid.d]);
            let finite = f0.is_finite() && ft.is_finite() && fx[..grid.d].iter().all(|v| v.is_finite());
            if !finite {
                let mut node: Vec<f64> = vec![t.as_f64()];
                node.extend(x[..grid.d].iter().map(|v| v.as_f64()));
                return Err(Error::Evaluation { node, msg: "non-finite value or derivative".into() });
            }
            v[i] = Complex::new(f0, T::zero());
            vt[i] = Complex::new(ft, T::zero());
            for a in 0..grid.d {
                vg[a][i] = Complex::new(fx[a], T::zero());
            }
        }
        value.push(Field::new(*grid, v, Side::Physical)?);
        dt.push(Field::new(*grid, vt, Side::Physical)?);
        grad.push(vg.into_iter().map(|g| Field::new(*grid, g, Side::Physical)).collect::<Result<Vec<_>>>()?);
    }
    Ok(GradientStack {
        field: HalfSpaceField::new(tgrid.clone(), value)?,
        grad,
        dt,
        provenance: Provenance::Analytic,
        exterior: None,
    })
}

/// Spectral x-gradients of given slices; ∂_t by three-point differences across t-nodes.
pub fn gradient_stack<T: Real>(f: &HalfSpaceField<T>) -> Result<GradientStack<T>> {
    let grid = f.grid();
    let two_pi = c::<T>(2.0) * T::PI();
    let mut grad = Vec::with_capacity(f.slices.len());
    for s in &f.slices {
        let spec = dft(s)?;
        let mut g = Vec::with_capacity(grid.d);
        for axis in 0..grid.d {
            let mut sp = spec.clone();
            for (i, v) in sp.values.iter_mut().enumerate() {
                *v = if grid.multi_index(i)[axis] == grid.n / 2 {
                    Complex::new(T::zero(), T::zero())
                } else {
                    *v * Complex::new(T::zero(), two_pi * grid.freq_point(i)[axis])
                };
            }
            g.push(idft(&sp)?);
        }
        grad.push(g);
    }
    let t = &f.tgrid.nodes;
    let k = t.len();
    if k < 3 {
        return Err(Error::Parameter("finite differences need at least 3 t-nodes".into()));
    }
    let mut dt = Vec::with_capacity(k);
    for j in 0..k {
        // Three-point Lagrange derivative on the nearest stencil.
        let (a, b, cc) = if j == 0 { (0, 1, 2) } else if j == k - 1 { (k - 3, k - 2, k - 1) } else { (j - 1, j, j + 1) };
        let (ta, tb, tc, x) = (t[a], t[b], t[cc], t[j]);
        let la = ((x - tb) + (x - tc)) / ((ta - tb) * (ta - tc));
        let lb = ((x - ta) + (x - tc)) / ((tb - ta) * (tb - tc));
        let lc = ((x - ta) + (x - tb)) / ((tc - ta) * (tc - tb));
        let vals = (0..grid.len())
            .map(|i| f.slices[a].values[i] * la + f.slices[b].values[i] * lb + f.slices[cc].values[i] * lc)
            .collect();
        dt.push(Field::new(grid, vals, Side::Physical)?);
    }
    Ok(GradientStack { field: f.clone(), grad, dt, provenance: Provenance::FiniteDifference, exterior: None })
}

// ---------------------------------------------------------------------------
// Monopole far field

/// Gauss–Jacobi rule on [−1, 1] for integrands carrying (1+x)^{e_lo}(1−x)^{e_hi}.
struct EndRule<T> {
    x: Vec<T>,
    w: Vec<T>,
    e_lo: T,
    e_hi: T,
}

impl<T: Real> EndRule<T> {
    fn new(n: usize, e_lo: T, e_hi: T) -> Self {
        let (x, w) = gauss_jacobi(n, e_hi, e_lo);
        EndRule { x, w, e_lo, e_hi }
    }

    /// ∫_lo^hi f(u) du where f already contains the endpoint powers.
    fn integrate<F: Fn(T) -> T>(&self, lo: T, hi: T, f: F) -> T {
        let h = (hi - lo) * c(0.5);
        let mut s = T::zero();
        for (x, w) in self.x.iter().zip(&self.w) {
            let u = lo + h * (*x + T::one());
            let om = (T::one() + *x).powf(self.e_lo) * (T::one() - *x).powf(self.e_hi);
            s = s + *w * f(u) / om;
        }
        s * h
    }
}

/// The three far-field integrands |P|², |∂_t P|^e, |∂_r P|^e at (t, r).
#[derive(Clone, Copy)]
enum Part {
    Value,
    Dt,
    Dr,
}

fn part_value<T: Real>(part: Part, e: T, t: T, r: T, n: usize) -> T {
    let (v, vt, vr) = poisson_parts(t, r, n);
    match part {
        Part::Value => v * v,
        Part::Dt => vt.abs().powf(e),
        Part::Dr => vr.abs().powf(e),
    }
}

/// Decay rate γ with integrand ~ r^{−γ} and the kink location r_k/t of ∂_t P.
fn part_decay<T: Real>(part: Part, e: T, n: usize) -> T {
    let nn = T::from_usize_(n);
    match part {
        Part::Value => c::<T>(2.0) * nn,
        Part::Dt => nn * e,
        Part::Dr => (nn + T::one()) * e,
    }
}

struct RadialTail<T> {
    n: usize,
    d: usize,
    part: Part,
    e: T,
    zero_end: EndRule<T>,
    zero_kink: EndRule<T>,
    kink_plain: EndRule<T>,
}

impl<T: Real> RadialTail<T> {
    fn new(part: Part, e: T, n: usize, d: usize) -> Self {
        let beta = part_decay(part, e, n) - T::from_usize_(d) - T::one();
        let kink = if matches!(part, Part::Dt) { e } else { T::zero() };
        RadialTail {
            n,
            d,
            part,
            e,
            zero_end: EndRule::new(24, beta, T::zero()),
            zero_kink: EndRule::new(24, beta, kink),
            kink_plain: EndRule::new(24, kink, T::zero()),
        }
    }

    /// ∫_ρ^∞ f(t, r) r^{d−1} dr via r = ρ/u.
    fn eval(&self, t: T, rho: T) -> T {
        let dm1 = (self.d - 1) as i32;
        let g = |u: T| {
            if u <= T::zero() {
                return T::zero();
            }
            let r = rho / u;
            part_value(self.part, self.e, t, r, self.n) * r.powi(dm1) * rho / (u * u)
        };
        let rk = t * T::from_usize_(self.n - 1).sqrt();
        if matches!(self.part, Part::Dt) && rk > rho {
            let uk = rho / rk;
            self.zero_kink.integrate(T::zero(), uk, g) + self.kink_plain.integrate(uk, T::one(), g)
        } else {
            self.zero_end.integrate(T::zero(), T::one(), g)
        }
    }
}

/// ∫_T^∞ t^a ∫_0^∞ f(t, r) r^{d−1} dr dt per unit solid angle, by self-similarity.
fn above_tmax<T: Real>(part: Part, e: T, n: usize, d: usize, a: T, t_max: T) -> Result<T> {
    let nn = T::from_usize_(n);
    let dd = T::from_usize_(d);
    let kappa = match part {
        Part::Value => c::<T>(2.0) * nn - c(2.0),
        _ => nn * e,
    };
    let expo = a + dd - kappa + T::one();
    if !(expo < T::zero()) {
        return Err(Error::Resolution(format!("far-field integral above T_max diverges (exponent {expo})")));
    }
    // C_f = ∫_0^∞ f(1, u) u^{d−1} du = ∫_0^1 + ∫_1^∞.
    let tail = RadialTail::new(part, e, n, d);
    let near_e = match part {
        Part::Dr => e + dd - T::one(),
        _ => dd - T::one(),
    };
    let near = EndRule::new(24, near_e, T::zero());
    let dm1 = (d - 1) as i32;
    let inner = near.integrate(T::zero(), T::one(), |u| part_value(part, e, T::one(), u, n) * u.powi(dm1));
    let cf = inner + tail.eval(T::one(), T::one());
    Ok(cf * t_max.powf(expo) / -expo)
}

fn chebyshev_nodes<T: Real>(lo: T, hi: T, m: usize) -> Vec<T> {
    (0..m)
        .map(|j| {
            let th = T::PI() * (T::from_usize_(j) + c(0.5)) / T::from_usize_(m);
            (lo + hi) * c(0.5) + (hi - lo) * c(0.5) * th.cos()
        })
        .collect()
}

fn barycentric<T: Real>(nodes: &[T], values: &[T], x: T) -> T {
    let m = nodes.len();
    let mut num = T::zero();
    let mut den = T::zero();
    for j in 0..m {
        let dx = x - nodes[j];
        if dx == T::zero() {
            return values[j];
        }
        let th = T::PI() * (T::from_usize_(j) + c(0.5)) / T::from_usize_(m);
        let w = if j % 2 == 0 { th.sin() } else { -th.sin() };
        num = num + w / dx * values[j];
        den = den + w / dx;
    }
    num / den
}

/// Distance from `center` to the boundary of [lo, hi]^d along `dir`.
fn box_exit<T: Real>(center: &[T; 3], dir: &[T; 3], d: usize, lo: T, hi: T) -> T {
    let mut best = T::infinity();
    for a in 0..d {
        if dir[a] > T::zero() {
            best = best.min((hi - center[a]) / dir[a]);
        } else if dir[a] < T::zero() {
            best = best.min((lo - center[a]) / dir[a]);
        }
    }
    best
}

#[allow(clippy::too_many_arguments)]
fn monopole_exterior<T: Real>(
    mass: T,
    center: &[T; 3],
    d: usize,
    lo: T,
    hi: T,
    tgrid: &TGrid<T>,
    p: T,
    m2: T,
) -> Result<Exterior<T>> {
    let n = d + 1;
    if (0..d).any(|a| !(center[a] > lo && center[a] < hi)) {
        return Err(Error::Parameter("far-field center lies outside the box".into()));
    }
    let rule = if d == 2 { sphere_rule::<T>(2, 4096)? } else { sphere_rule::<T>(3, 32)? };
    let exits: Vec<T> = rule.directions.iter().map(|w| box_exit(center, w, d, lo, hi)).collect();
    let rmin = exits.iter().fold(T::infinity(), |a, &b| a.min(b));
    let rmax = exits.iter().fold(T::zero(), |a, &b| a.max(b));
    let nodes = chebyshev_nodes(rmin, rmax, 40);
    let two = c::<T>(2.0);
    let parts: [(Part, T); 5] = [(Part::Value, two), (Part::Dt, p), (Part::Dt, two), (Part::Dr, p), (Part::Dr, two)];
    let area = sphere_area::<T>(d)?;
    let mut per_dir: Vec<Vec<T>> = Vec::with_capacity(parts.len());
    for &(part, e) in &parts {
        let tail = RadialTail::new(part, e, n, d);
        let table: Vec<T> = nodes
            .iter()
            .map(|&rho| tgrid.nodes.iter().zip(&tgrid.weights).map(|(&t, &w)| w * tail.eval(t, rho)).sum())
            .collect();
        let above = above_tmax(part, e, n, d, tgrid.a, tgrid.t_max)?;
        let scale = match (part, e == two) {
            (Part::Value, _) | (_, true) => mass * mass,
            _ => mass.powf(p),
        };
        per_dir.push(
            exits
                .iter()
                .zip(&rule.weights)
                .map(|(&rho, &w)| scale * w * (barycentric(&nodes, &table, rho) + above))
                .collect(),
        );
    }
    let total = |v: &Vec<T>| v.iter().copied().sum::<T>();
    let l2_sq = total(&per_dir[0]);
    // Quadrupole share of the far field relative to the monopole at the box edge,
    // plus the periodized remainder of the torus part.
    let l2_above = mass * mass * area * above_tmax(Part::Value, two, n, d, tgrid.a, tgrid.t_max)?;
    let model_error = (l2_sq - l2_above).max(T::zero()) / l2_sq.max(T::min_positive_value()) * m2 / (rmin * rmin)
        + m2.sqrt() / (c::<T>(2.0) * (hi - lo)).powi(d as i32);
    Ok(Exterior {
        p,
        directions: rule.directions.clone(),
        l2_sq,
        dt_p: total(&per_dir[1]),
        dt_2: total(&per_dir[2]),
        grad_p: per_dir[3].clone(),
        grad_2: per_dir[4].clone(),
        model_error,
    })
}

// ---------------------------------------------------------------------------
// Norms and energies

fn slice_weights<T: Real>(g: &GradientStack<T>) -> Vec<T> {
    let cell = g.grid().cell_volume();
    g.tgrid().weights.iter().map(|w| *w * cell).collect()
}

fn exterior_grad<T: Real>(g: &GradientStack<T>, p: T) -> Result<Option<&[T]>> {
    match &g.exterior {
        None => Ok(None),
        Some(e) if p == e.p => Ok(Some(&e.grad_p)),
        Some(e) if p == c(2.0) => Ok(Some(&e.grad_2)),
        Some(e) => Err(Error::Usage(format!("far field built for p = {}, asked for {p}", e.p))),
    }
}

/// ‖⟨∇_x F, ξ⟩‖_{L^p(σ)}; zero for a vanishing field.
pub fn directional_norm<T: Real>(g: &GradientStack<T>, xi: &[T], p: T) -> Result<T> {
    let d = g.grid().d;
    if xi.len() != d {
        return Err(Error::Usage(format!("direction has {} components, field dimension {d}", xi.len())));
    }
    let len: T = xi.iter().map(|v| *v * *v).sum::<T>().sqrt();
    if (len - T::one()).abs() > c(1e-10) {
        return Err(Error::Usage(format!("direction must be a unit vector, |xi| = {len}")));
    }
    let w = slice_weights(g);
    let mut s = T::zero();
    for (k, grads) in g.grad.iter().enumerate() {
        let mut part = T::zero();
        for i in 0..grads[0].values.len() {
            let mut v = Complex::new(T::zero(), T::zero());
            for a in 0..d {
                v = v + grads[a].values[i] * xi[a];
            }
            part = part + v.norm().powf(p);
        }
        s = s + w[k] * part;
    }
    if let (Some(ext), Some(e)) = (exterior_grad(g, p)?, g.exterior.as_ref()) {
        for (wv, dir) in ext.iter().zip(&e.directions) {
            let dot: T = (0..d).map(|a| dir[a] * xi[a]).sum();
            s = s + *wv * dot.abs().powf(p);
        }
    }
    Ok(s.powf(p.recip()))
}

/// Bins per direction in the binned circle path.
const BIN_REFINE: usize = 16;

/// Directional norms for every node of `rule`.
///
/// For an equispaced circle rule and real gradients, the integrand
/// |∇F|^p |cos(φ − θ)|^p is accumulated once into angle bins over [0, π) by
/// linear deposit and then correlated with the kernel for every θ.
pub fn directional_norms<T: Real>(g: &GradientStack<T>, rule: &SphereRule<T>, p: T) -> Result<Vec<T>> {
    let d = g.grid().d;
    if rule.d != d {
        return Err(Error::Usage(format!("sphere rule for d = {}, field dimension {d}", rule.d)));
    }
    let real = g.grad.iter().flatten().all(|f| {
        let scale = f.values.iter().fold(T::zero(), |a, v| a.max(v.re.abs()));
        f.values.iter().all(|v| v.im.abs() <= c::<T>(1e-9) * scale)
    });
    if !(d == 2 && rule.circle && real) {
        return rule.directions.iter().map(|xi| directional_norm(g, &xi[..d], p)).collect();
    }
    let m = rule.directions.len();
    let bins = m / 2 * BIN_REFINE;
    let dphi = T::PI() / T::from_usize_(bins);
    let mut acc = vec![T::zero(); bins];
    let bf = T::from_usize_(bins);
    let deposit = |acc: &mut [T], phi: T, amount: T| {
        let mut f = phi / dphi;
        f = f - (f / bf).floor() * bf;
        let b0 = f.floor();
        let frac = f - b0;
        let i0 = b0.to_usize().unwrap_or(0) % bins;
        acc[i0] = acc[i0] + amount * (T::one() - frac);
        acc[(i0 + 1) % bins] = acc[(i0 + 1) % bins] + amount * frac;
    };
    let w = slice_weights(g);
    let half = p * c(0.5);
    for (k, grads) in g.grad.iter().enumerate() {
        for (gx, gy) in grads[0].values.iter().zip(&grads[1].values) {
            let m2 = gx.re * gx.re + gy.re * gy.re;
            if m2 == T::zero() {
                continue;
            }
            deposit(&mut acc, gy.re.atan2(gx.re), w[k] * m2.powf(half));
        }
    }
    if let (Some(ext), Some(e)) = (exterior_grad(g, p)?, g.exterior.as_ref()) {
        for (wv, dir) in ext.iter().zip(&e.directions) {
            deposit(&mut acc, dir[1].atan2(dir[0]), *wv);
        }
    }
    let kernel: Vec<T> = (0..bins).map(|j| (dphi * T::from_usize_(j)).cos().abs().powf(p)).collect();
    let mut half_norms = Vec::with_capacity(m / 2);
    for mm in 0..m / 2 {
        let shift = mm * BIN_REFINE;
        let mut s = T::zero();
        for (b, a) in acc.iter().enumerate() {
            s = s + *a * kernel[(b + bins - shift) % bins];
        }
        half_norms.push(s.max(T::zero()).powf(p.recip()));
    }
    Ok((0..m).map(|j| half_norms[j % (m / 2)]).collect())
}

/// Directional norms and the resulting energy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport<T> {
    pub energy: T,
    pub min_directional: T,
    pub max_directional: T,
}

/// 𝓔_p(F, σ) = c_{d,p}(Σ_m w_m ‖∇_{ξ_m}F‖^{−d})^{−1/d}.
pub fn affine_energy<T: Real>(g: &GradientStack<T>, p: T, rule: &SphereRule<T>) -> Result<T> {
    Ok(affine_energy_report(g, p, rule)?.energy)
}

pub fn affine_energy_report<T: Real>(g: &GradientStack<T>, p: T, rule: &SphereRule<T>) -> Result<EnergyReport<T>> {
    let norms = directional_norms(g, rule, p)?;
    energy_from_norms(&norms, rule, p)
}

fn energy_from_norms<T: Real>(norms: &[T], rule: &SphereRule<T>, p: T) -> Result<EnergyReport<T>> {
    let d = rule.d;
    let dd = T::from_usize_(d);
    let mut s = T::zero();
    let (mut lo, mut hi) = (T::infinity(), T::zero());
    for (j, (&nv, &w)) in norms.iter().zip(&rule.weights).enumerate() {
        if !(nv > T::zero()) || !nv.is_finite() {
            return Err(Error::Degenerate(format!(
                "directional norm {nv} along {:?}",
                rule.directions[j][..d].iter().map(|v| v.as_f64()).collect::<Vec<_>>()
            )));
        }
        s = s + w * nv.powf(-dd);
        lo = lo.min(nv);
        hi = hi.max(nv);
    }
    Ok(EnergyReport {
        energy: affine_normalizer(d, p)? * s.powf(-dd.recip()),
        min_directional: lo,
        max_directional: hi,
    })
}

/// ‖∂_t F‖_{L^p(σ)}.
pub fn dt_norm<T: Real>(g: &GradientStack<T>, p: T) -> Result<T> {
    let w = slice_weights(g);
    let mut s = T::zero();
    for (k, f) in g.dt.iter().enumerate() {
        s = s + w[k] * f.values.iter().map(|v| v.norm().powf(p)).sum::<T>();
    }
    if let Some(e) = &g.exterior {
        s = s + if p == e.p {
            e.dt_p
        } else if p == c(2.0) {
            e.dt_2
        } else {
            return Err(Error::Usage(format!("far field built for p = {}, asked for {p}", e.p)));
        };
    }
    Ok(s.powf(p.recip()))
}

/// (Σ_k w_k Σ_x |F|^r Δx^d)^{1/r} over the sampled box.
pub fn weighted_lp_norm<T: Real>(f: &HalfSpaceField<T>, r: T) -> Result<T> {
    if !(r >= T::one()) {
        return Err(Error::Parameter(format!("need r >= 1, got {r}")));
    }
    let cell = f.grid().cell_volume();
    let mut s = T::zero();
    for (w, sl) in f.tgrid.weights.iter().zip(&f.slices) {
        s = s + *w * cell * sl.values.iter().map(|v| v.norm().powf(r)).sum::<T>();
    }
    Ok(s.powf(r.recip()))
}

/// ‖F‖_{L²(σ)} including the far field when present.
pub fn stack_l2_norm<T: Real>(g: &GradientStack<T>) -> Result<T> {
    let box_part = weighted_lp_norm(&g.field, c(2.0))?;
    let ext = g.exterior.as_ref().map_or(T::zero(), |e| e.l2_sq);
    Ok((box_part * box_part + ext).sqrt())
}

/// ‖∇_x F‖_{L²(σ)} including the far field when present.
pub fn gradient_l2_norm<T: Real>(g: &GradientStack<T>) -> Result<T> {
    let w = slice_weights(g);
    let mut s = T::zero();
    for (k, grads) in g.grad.iter().enumerate() {
        for f in grads {
            s = s + w[k] * f.values.iter().map(|v| v.norm_sqr()).sum::<T>();
        }
    }
    if let Some(e) = &g.exterior {
        s = s + e.grad_2.iter().copied().sum::<T>();
    }
    Ok(s.sqrt())
}

/// Both sides of ∫|∇F|² ≥ 2(∫|∂_t F|²)^{1/2}(∫|∇_x F|²)^{1/2}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmgmSplit<T> {
    pub lhs: T,
    pub rhs: T,
    /// Exponent e of the weight t^e used here.
    pub weight_exponent: T,
}

/// AM-GM split with weight t^{1−2α}, grid part only.
pub fn amgm_split_check<T: Real>(g: &GradientStack<T>, alpha: T) -> Result<AmgmSplit<T>> {
    let e = T::one() - c::<T>(2.0) * alpha;
    let tg = g.tgrid();
    let cell = g.grid().cell_volume();
    let (mut st, mut sx) = (T::zero(), T::zero());
    for (k, (&t, &w)) in tg.nodes.iter().zip(&tg.weights).enumerate() {
        let ww = w * cell * if e == tg.a { T::one() } else { t.powf(e - tg.a) };
        st = st + ww * g.dt[k].values.iter().map(|v| v.norm_sqr()).sum::<T>();
        for f in &g.grad[k] {
            sx = sx + ww * f.values.iter().map(|v| v.norm_sqr()).sum::<T>();
        }
    }
    Ok(AmgmSplit { lhs: st + sx, rhs: c::<T>(2.0) * (st * sx).sqrt(), weight_exponent: e })
}

// ---------------------------------------------------------------------------
// Resampling-free energies of radial families

/// Energies of x ↦ F(t, B(x − x₀)) for radial F.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialEnergies<T> {
    pub energy: T,
    pub dt_norm: T,
    pub l2_norm: T,
    /// ‖∂_ξ F‖ for a single direction of the untransformed profile.
    pub radial_directional: T,
}

fn det<T: Real>(b: &[[T; 3]; 3], d: usize) -> T {
    match d {
        1 => b[0][0],
        2 => b[0][0] * b[1][1] - b[0][1] * b[1][0],
        _ => {
            b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
                + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0])
        }
    }
}

/// Integrates in (log t, log r) with the trapezoid rule, which converges
/// geometrically for profiles analytic in a strip around the real axis.
/// `profile(t, r)` returns (F, ∂_t F, ∂_r F).
pub fn radial_family_energies<T: Real, F>(
    profile: F,
    d: usize,
    p: T,
    a: T,
    b: &[[T; 3]; 3],
    rule: &SphereRule<T>,
) -> Result<RadialEnergies<T>>
where
    F: Fn(T, T) -> (T, T, T),
{
    let dt_b = det(b, d);
    if dt_b == T::zero() || !dt_b.is_finite() {
        return Err(Error::Parameter("singular map".into()));
    }
    let h = c::<T>(1.0 / 16.0);
    let lim = 40usize * 16;
    let dd = T::from_usize_(d);
    let (mut ir, mut it, mut i2) = (T::zero(), T::zero(), T::zero());
    for jt in 0..=2 * lim {
        let v = h * (T::from_usize_(jt) - T::from_usize_(lim));
        let t = v.exp();
        let wt = t.powf(a + T::one());
        let (mut sr, mut st, mut s2) = (T::zero(), T::zero(), T::zero());
        for jr in 0..=2 * lim {
            let s = h * (T::from_usize_(jr) - T::from_usize_(lim));
            let r = s.exp();
            let wr = r.powf(dd);
            let (f, ft, fr) = profile(t, r);
            sr = sr + wr * fr.abs().powf(p);
            st = st + wr * ft.abs().powf(p);
            s2 = s2 + wr * f * f;
        }
        ir = ir + wt * sr;
        it = it + wt * st;
        i2 = i2 + wt * s2;
    }
    let hh = h * h;
    let (ir, it, i2) = (ir * hh, it * hh, i2 * hh);
    let area = sphere_area::<T>(d)?;
    let half = c::<T>(0.5);
    // ∫_{S^{d−1}} |ω₁|^p dω
    let ap = c::<T>(2.0) * T::PI().powf((dd - T::one()) * half) * gamma((p + T::one()) * half)?
        / gamma((dd + p) * half)?;
    let ne = (ap * ir).powf(p.recip());
    let jac = dt_b.abs();
    let norms: Vec<T> = rule
        .directions
        .iter()
        .map(|xi| {
            let mut bx = [T::zero(); 3];
            for (i, row) in b.iter().enumerate().take(d) {
                bx[i] = (0..d).map(|j| row[j] * xi[j]).sum();
            }
            let len = (bx[0] * bx[0] + bx[1] * bx[1] + bx[2] * bx[2]).sqrt();
            len * jac.powf(-p.recip()) * ne
        })
        .collect();
    let energy = energy_from_norms(&norms, rule, p)?.energy;
    Ok(RadialEnergies {
        energy,
        dt_norm: jac.powf(-p.recip()) * (area * it).powf(p.recip()),
        l2_norm: jac.powf(-half) * (area * i2).sqrt(),
        radial_directional: ne,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{make_grid, make_tgrid, sample_complex, Grading};

    #[test]
    fn circle_rule_properties() {
        let r = sphere_rule::<f64>(2, 512).unwrap();
        let total: f64 = r.weights.iter().sum();
        assert!((total - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        for dir in &r.directions {
            assert!(((dir[0] * dir[0] + dir[1] * dir[1]).sqrt() - 1.0).abs() < 1e-14);
        }
        for k in 1..512 {
            let s: f64 = r.directions.iter().zip(&r.weights).map(|(d, w)| w * (k as f64 * d[1].atan2(d[0])).cos()).sum();
            assert!(s.abs() < 1e-10, "k = {k}: {s}");
        }
        assert!(sphere_rule::<f64>(2, 7).is_err());
    }

    #[test]
    fn sphere_rule_three_dimensions() {
        let r = sphere_rule::<f64>(3, 12).unwrap();
        let total: f64 = r.weights.iter().sum();
        assert!((total - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        // ∫ z² dω = 4π/3
        let z2: f64 = r.directions.iter().zip(&r.weights).map(|(d, w)| w * d[2] * d[2]).sum();
        assert!((z2 - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_mode_dt_matches_closed_form() {
        let grid = make_grid(2, 4.0f64, 32).unwrap();
        let k = 0.25;
        let g = sample_complex(|x| Complex::new(0.0, 2.0 * std::f64::consts::PI * k * x[0]).exp(), &grid).unwrap();
        let tg = make_tgrid(0.0, 32.0, 64, Grading::Geometric).unwrap();
        let st = poisson_stack(&g, &tg).unwrap();
        for (s, d) in st.field.slices.iter().zip(&st.dt) {
            for (a, b) in s.values.iter().zip(&d.values) {
                assert!((b + a * (2.0 * std::f64::consts::PI * k)).norm() < 1e-12);
            }
        }
        // ∫₀^∞ e^{−2πp t k} t^a dt = Γ(a+1)/(2πpk)^{a+1}, times the box area.
        let p = 1.2;
        let got = dt_norm(&st, p).unwrap().powf(p);
        let want = 64.0 * (2.0 * std::f64::consts::PI * k).powf(p) / (2.0 * std::f64::consts::PI * p * k);
        assert!(((got - want) / want).abs() < 1e-6, "{got} vs {want}");
    }

    #[test]
    fn constant_field_has_zero_gradient() {
        let grid = make_grid(2, 4.0f64, 16).unwrap();
        let tg = make_tgrid(0.0, 4.0, 16, Grading::Geometric).unwrap();
        let st = analytic_stack(|_, _| (3.0, 0.0, [0.0; 3]), &grid, &tg).unwrap();
        assert_eq!(directional_norm(&st, &[1.0, 0.0], 1.5).unwrap(), 0.0);
        assert_eq!(dt_norm(&st, 1.5).unwrap(), 0.0);
        let rule = sphere_rule(2, 16).unwrap();
        assert!(matches!(affine_energy(&st, 1.5, &rule), Err(Error::Degenerate(_))));
    }

    #[test]
    fn end_rule_handles_endpoint_powers() {
        let r = EndRule::<f64>::new(12, 0.6, 1.2);
        // ∫_0^2 u^{0.6}(2−u)^{1.2} du = 2^{2.8} B(1.6, 2.2)
        let got = r.integrate(0.0, 2.0, |u| u.powf(0.6) * (2.0 - u).powf(1.2));
        let b = gamma(1.6f64).unwrap() * gamma(2.2).unwrap() / gamma(3.8).unwrap();
        assert!((got - 2f64.powf(2.8) * b).abs() < 1e-13);
    }

    #[test]
    fn radial_tail_matches_closed_form() {
        // ∫_ρ^∞ P_t(r)² r dr = c²t²(t²+ρ²)^{−2}/4 for n = 3.
        let tail = RadialTail::<f64>::new(Part::Value, 2.0, 3, 2);
        let c2 = 1.0 / (4.0 * std::f64::consts::PI * std::f64::consts::PI);
        for &(t, rho) in &[(0.1, 16.0), (5.0, 16.0), (40.0, 16.5)] {
            let want = c2 * t * t / (t * t + rho * rho).powi(2) / 4.0;
            let got = tail.eval(t, rho);
            assert!(((got - want) / want).abs() < 1e-12, "({t}, {rho}): {got} vs {want}");
        }
    }
}
