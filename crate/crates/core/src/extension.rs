//! Half-space extensions of boundary data.
//!
//! The Poisson extension multiplies the spectrum by e^{−2πt|ξ|}. The
//! non-Poisson extension divides the transform of (1 + t^{p′} + |x|^{p′})^q by
//! that of (1 + |x|^{p′})^q. Since
//! (1 + t^{p′} + r^{p′})^q = (1 + t^{p′})^q (1 + (r/λ_t)^{p′})^q with
//! λ_t = (1 + t^{p′})^{1/p′}, both transforms come from one tabulated radial
//! profile Ĥ₀.

use std::io::{BufRead, Write};

use num_complex::Complex;
use serde::Serialize;

use crate::constants::Params;
use crate::error::{domain, Error, Result};
use crate::quadrature::gauss_legendre;
use crate::real::{c, Real};
use crate::sampling::{Field, HalfSpaceField, Side, TGrid};
use crate::special::{bessel_j0, bessel_j1, gamma};
use crate::spectral::{dft, idft};

/// P_t(x) = π^{−n/2}Γ(n/2) t (t² + |x|²)^{−n/2} for x ∈ ℝ^{n−1}.
pub fn poisson_kernel<T: Real>(t: T, x: &[T], n: usize) -> Result<T> {
    if !(t > T::zero()) {
        return Err(domain("poisson_kernel", format!("t must be positive, got {t}")));
    }
    let r2: T = x.iter().map(|&v| v * v).sum();
    Ok(poisson_parts(t, r2.sqrt(), n).0)
}

/// (P, ∂_t P, ∂_r P) of the Poisson kernel at height t and radius r.
pub(crate) fn poisson_parts<T: Real>(t: T, r: T, n: usize) -> (T, T, T) {
    let nn = T::from_usize_(n);
    let half_n = nn * c(0.5);
    let cn = gamma_half::<T>(n) / T::PI().powf(half_n);
    let s2 = t * t + r * r;
    let base = s2.powf(-half_n - T::one());
    let p = cn * t * s2 * base;
    let pt = cn * (r * r - (nn - T::one()) * t * t) * base;
    let pr = -cn * nn * t * r * base;
    (p, pt, pr)
}

fn gamma_half<T: Real>(n: usize) -> T {
    gamma(T::from_usize_(n) * c(0.5)).expect("positive argument")
}

/// P̂_t(ρ) = e^{−2πtρ}.
pub fn poisson_multiplier<T: Real>(t: T, rho: T) -> T {
    (-c::<T>(2.0) * T::PI() * t * rho).exp()
}

/// ∫₀^∞ e^{−4πρt} t^a dt = Γ(a+1)/(4πρ)^{a+1}.
pub fn poisson_time_weight<T: Real>(rho: T, a: T) -> Result<T> {
    if !(rho > T::zero()) {
        return Err(domain("poisson_time_weight", format!("diverges at rho = {rho}")));
    }
    if !(a >= T::zero()) {
        return Err(domain("poisson_time_weight", format!("need a >= 0, got {a}")));
    }
    Ok(gamma(a + T::one())? / (c::<T>(4.0) * T::PI() * rho).powf(a + T::one()))
}

/// Slice k is the torus extension idft(e^{−2πt_k|ξ|} ĝ).
pub fn poisson_extend<T: Real>(g: &Field<T>, tgrid: &TGrid<T>) -> Result<HalfSpaceField<T>> {
    let spec = dft(g)?;
    let grid = spec.grid;
    let rho: Vec<T> = (0..grid.len()).map(|i| grid.freq_norm(i)).collect();
    let mut slices = Vec::with_capacity(tgrid.len());
    for &t in &tgrid.nodes {
        let mut s = spec.clone();
        for (v, &r) in s.values.iter_mut().zip(&rho) {
            *v = *v * poisson_multiplier(t, r);
        }
        slices.push(idft(&s)?);
    }
    HalfSpaceField::new(tgrid.clone(), slices)
}

// ---------------------------------------------------------------------------
// Radial Fourier transform

/// Cutoffs for [`radial_transform`].
#[derive(Debug, Clone, Copy)]
pub struct RadialQuad<T> {
    /// Upper limit of direct quadrature at high frequency; an integration-by-parts tail follows.
    pub r_near: T,
    /// Upper limit at low frequency, where the tail is negligible.
    pub r_far: T,
}

impl<T: Real> Default for RadialQuad<T> {
    fn default() -> Self {
        RadialQuad { r_near: c(30.0), r_far: c(300.0) }
    }
}

/// f̂(ρ) for a radial f(x) = h(|x|) in ℝ^d, d ∈ {1, 2, 3}.
///
/// `h` returns (h(r), h′(r)); the derivative only feeds the asymptotic tail.
pub fn radial_transform<T: Real, H>(d: usize, h: H, rho: T, rq: RadialQuad<T>) -> Result<T>
where
    H: Fn(T) -> (T, T),
{
    if !(1..=3).contains(&d) {
        return Err(domain("radial_transform", format!("dimension {d} not supported")));
    }
    if !(rho >= T::zero()) {
        return Err(domain("radial_transform", format!("negative frequency {rho}")));
    }
    let two_pi = c::<T>(2.0) * T::PI();
    let cc = two_pi * rho;
    let far = cc * rq.r_near < c(20.0);
    let r_end = if far { rq.r_far } else { rq.r_near };
    let width = if rho > T::zero() { (c::<T>(0.25) / rho).min(c(0.25)) } else { c(0.25) };
    let panels = (r_end / width).ceil().to_usize().unwrap_or(1).max(1);
    let h_w = r_end / T::from_usize_(panels);
    let (gx, gw) = gauss_legendre::<T>(8);
    let kernel = |r: T| -> T {
        match d {
            1 => c::<T>(2.0) * (cc * r).cos(),
            2 => two_pi * r * bessel_j0(cc * r),
            _ => {
                if rho == T::zero() {
                    c::<T>(4.0) * T::PI() * r * r
                } else {
                    c::<T>(2.0) / rho * r * (cc * r).sin()
                }
            }
        }
    };
    // Kahan-compensated panel sum; the high-frequency values are tiny differences.
    let mut sum = T::zero();
    let mut comp = T::zero();
    for k in 0..panels {
        let lo = h_w * T::from_usize_(k);
        let mut part = T::zero();
        for (x, w) in gx.iter().zip(&gw) {
            let r = lo + h_w * c::<T>(0.5) * (*x + T::one());
            part = part + *w * h(r).0 * kernel(r);
        }
        let y = part * h_w * c::<T>(0.5) - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    let (hr, dhr) = h(r_end);
    let rr = r_end;
    let tail = if rho == T::zero() || cc * rr < T::one() {
        // Power-law tail with the local log-slope of h.
        let beta = rr * dhr / hr;
        let dd = T::from_usize_(d);
        if !(beta + dd < T::zero()) || !hr.is_finite() || hr == T::zero() {
            T::zero()
        } else {
            let area = match d {
                1 => c(2.0),
                2 => two_pi,
                _ => c::<T>(4.0) * T::PI(),
            };
            -area * hr * rr.powi(d as i32) / (beta + dd)
        }
    } else {
        match d {
            1 => {
                let (g, dg) = (c::<T>(2.0) * hr, c::<T>(2.0) * dhr);
                -g * (cc * rr).sin() / cc - dg * (cc * rr).cos() / (cc * cc)
            }
            2 => {
                two_pi * (-hr * rr * bessel_j1(cc * rr) / cc - dhr * rr * bessel_j0(cc * rr) / (cc * cc))
            }
            _ => {
                let (g, dg) = (hr * rr, dhr * rr + hr);
                c::<T>(2.0) / rho * (g * (cc * rr).cos() / cc - dg * (cc * rr).sin() / (cc * cc))
            }
        }
    };
    Ok(sum + tail)
}

// ---------------------------------------------------------------------------
// Tabulated radial profile

/// Reproducibility header of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileHeader {
    pub n: usize,
    pub alpha: f64,
    pub p_prime: f64,
    pub q: f64,
    /// Floor relative to the zero-frequency value.
    pub floor: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    /// Zero-frequency value (the mass).
    pub mass: f64,
}

/// Samples of a radial transform, interpolated by a natural cubic spline in log ρ.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile<T> {
    pub header: ProfileHeader,
    pub d: usize,
    pub rho: Vec<T>,
    pub values: Vec<T>,
    u: Vec<T>,
    m2: Vec<T>,
}

impl<T: Real> RadialProfile<T> {
    pub fn from_samples(header: ProfileHeader, d: usize, rho: Vec<T>, values: Vec<T>) -> Result<Self> {
        if rho.len() < 4 || rho.len() != values.len() {
            return Err(Error::Parameter("profile needs at least 4 matching samples".into()));
        }
        if rho[0] <= T::zero() || rho.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parameter("profile abscissae must be positive and increasing".into()));
        }
        let u: Vec<T> = rho.iter().map(|r| r.ln()).collect();
        let m2 = natural_spline(&u, &values);
        Ok(RadialProfile { header, d, rho, values, u, m2 })
    }

    pub fn mass(&self) -> T {
        c(self.header.mass)
    }

    pub fn rho_min(&self) -> T {
        self.rho[0]
    }

    pub fn rho_max(&self) -> T {
        *self.rho.last().unwrap()
    }

    /// Absolute floor below which values count as zero.
    pub fn floor_abs(&self) -> T {
        c::<T>(self.header.floor) * self.mass().abs()
    }

    /// Value at ρ; ρ = 0 returns the mass, anything outside [ρ_min, ρ_max] is a range error.
    pub fn eval(&self, rho: T) -> Result<T> {
        Ok(self.eval_with_slope(rho)?.0)
    }

    /// Value and dĤ/dρ.
    pub fn eval_with_slope(&self, rho: T) -> Result<(T, T)> {
        if rho == T::zero() {
            return Ok((self.mass(), T::zero()));
        }
        if !(rho >= self.rho_min()) || !(rho <= self.rho_max()) {
            return Err(Error::Range(format!(
                "rho = {rho} outside tabulated [{}, {}]",
                self.rho_min(),
                self.rho_max()
            )));
        }
        let u = rho.ln();
        let i = match self.u.binary_search_by(|v| v.partial_cmp(&u).unwrap()) {
            Ok(i) => i.min(self.u.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.u.len() - 2),
        };
        let h = self.u[i + 1] - self.u[i];
        let a = (self.u[i + 1] - u) / h;
        let b = T::one() - a;
        let six = c::<T>(6.0);
        let (y0, y1, m0, m1) = (self.values[i], self.values[i + 1], self.m2[i], self.m2[i + 1]);
        let v = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / six;
        let du = (y1 - y0) / h - (c::<T>(3.0) * a * a - T::one()) * h * m0 / six
            + (c::<T>(3.0) * b * b - T::one()) * h * m1 / six;
        Ok((v, du / rho))
    }

    /// Value beyond the table treated as zero; used inside extensions where the
    /// profile has decayed below resolution (reported via [`RadialProfile::tail_bound`]).
    pub(crate) fn eval_or_zero(&self, rho: T) -> (T, T) {
        if rho > self.rho_max() {
            (T::zero(), T::zero())
        } else if rho > T::zero() && rho < self.rho_min() {
            (self.values[0], T::zero())
        } else {
            self.eval_with_slope(rho).unwrap_or((T::zero(), T::zero()))
        }
    }

    /// Largest |value| over the last tenth of the table, relative to the mass.
    pub fn tail_bound(&self) -> T {
        let n = self.values.len();
        let m = self.values[n - n / 10..].iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
        m / self.mass().abs()
    }

    /// First tabulated ρ where |value| drops below the floor or the sign flips.
    pub fn first_zero(&self) -> Option<T> {
        let floor = self.floor_abs();
        let m = self.mass();
        for (i, (&r, &v)) in self.rho.iter().zip(&self.values).enumerate() {
            if v.abs() < floor {
                return Some(r);
            }
            if v * m < T::zero() {
                // Linear estimate of the crossing.
                let j = i.saturating_sub(1);
                let (r0, v0) = (self.rho[j], self.values[j]);
                return Some(if v0 == v { r } else { r0 + (r - r0) * v0 / (v0 - v) });
            }
        }
        None
    }

    /// CSV with a `# key=value,...` header line followed by `rho,value` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let h = &self.header;
        let io = |e: std::io::Error| Error::Io(e.to_string());
        writeln!(
            out,
            "# n={},alpha={:e},p_prime={:e},q={:e},floor={:e},range=[{:e};{:e}],mass={:e},d={}",
            h.n, h.alpha, h.p_prime, h.q, h.floor, h.rho_min, h.rho_max, h.mass, self.d
        )
        .map_err(io)?;
        writeln!(out, "rho,value").map_err(io)?;
        for (r, v) in self.rho.iter().zip(&self.values) {
            writeln!(out, "{:e},{:e}", r.as_f64(), v.as_f64()).map_err(io)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let bad = |m: &str| Error::Io(format!("profile csv: {m}"));
        let head = lines.next().ok_or_else(|| bad("empty input"))?.map_err(|e| Error::Io(e.to_string()))?;
        let head = head.strip_prefix("# ").ok_or_else(|| bad("missing header line"))?;
        let mut header = ProfileHeader {
            n: 0,
            alpha: 0.0,
            p_prime: 0.0,
            q: 0.0,
            floor: 0.0,
            rho_min: 0.0,
            rho_max: 0.0,
            mass: 0.0,
        };
        let mut d = 0usize;
        for kv in head.split(',') {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad("malformed header entry"))?;
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number in header"));
            match k {
                "n" => header.n = v.parse().map_err(|_| bad("bad n"))?,
                "d" => d = v.parse().map_err(|_| bad("bad d"))?,
                "alpha" => header.alpha = num(v)?,
                "p_prime" => header.p_prime = num(v)?,
                "q" => header.q = num(v)?,
                "floor" => header.floor = num(v)?,
                "mass" => header.mass = num(v)?,
                "range" => {
                    let inner = v.trim_start_matches('[').trim_end_matches(']');
                    let (a, b) = inner.split_once(';').ok_or_else(|| bad("bad range"))?;
                    header.rho_min = num(a)?;
                    header.rho_max = num(b)?;
                }
                _ => return Err(bad("unknown header key")),
            }
        }
        let cols = lines.next().ok_or_else(|| bad("missing column line"))?.map_err(|e| Error::Io(e.to_string()))?;
        if cols.trim() != "rho,value" {
            return Err(bad("expected columns rho,value"));
        }
        let (mut rho, mut values) = (Vec::new(), Vec::new());
        for line in lines {
            let line = line.map_err(|e| Error::Io(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let (a, b) = line.split_once(',').ok_or_else(|| bad("bad row"))?;
            rho.push(c::<T>(a.trim().parse::<f64>().map_err(|_| bad("bad rho"))?));
            values.push(c::<T>(b.trim().parse::<f64>().map_err(|_| bad("bad value"))?));
        }
        RadialProfile::from_samples(header, d, rho, values)
    }
}

fn natural_spline<T: Real>(x: &[T], y: &[T]) -> Vec<T> {
    let n = x.len();
    let mut m = vec![T::zero(); n];
    let mut cp = vec![T::zero(); n];
    let two = c::<T>(2.0);
    let six = c::<T>(6.0);
    // Thomas algorithm on the interior second derivatives.
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        let rhs = six * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
        let diag = two * (h0 + h1) - h0 * cp[i - 1];
        cp[i] = h1 / diag;
        m[i] = (rhs - h0 * m[i - 1]) / diag;
    }
    for i in (1..n - 1).rev() {
        m[i] = m[i] - cp[i] * m[i + 1];
    }
    m
}

/// Resolution controls for [`base_profile`].
#[derive(Debug, Clone, Copy)]
pub struct ProfileOptions<T> {
    pub rho_min: T,
    /// Log spacing below ρ = 1.
    pub du: T,
    /// Linear spacing above ρ = 1.
    pub drho: T,
    pub rho_max: T,
    pub floor: T,
    pub quad: RadialQuad<T>,
}

impl<T: Real> Default for ProfileOptions<T> {
    fn default() -> Self {
        ProfileOptions {
            rho_min: c(1e-4),
            du: c(0.01),
            drho: c(0.01),
            rho_max: c(24.0),
            floor: c(1e-10),
            quad: RadialQuad::default(),
        }
    }
}

/// h_⋆(r) = (1 + r^{p′})^q with its derivative, at height t: (1 + t^{p′} + r^{p′})^q.
pub fn extremal_radial<T: Real>(prm: &Params<T>, t: T) -> impl Fn(T) -> (T, T) {
    let (pp, q) = (prm.p_prime, prm.q);
    let base = T::one() + if t > T::zero() { t.powf(pp) } else { T::zero() };
    move |r: T| {
        if r == T::zero() {
            return (base.powf(q), T::zero());
        }
        let rp = r.powf(pp);
        let s = base + rp;
        let v = s.powf(q);
        (v, q * pp * rp / r * v / s)
    }
}

/// Tabulates Ĥ₀, the transform of (1 + |x|^{p′})^q in ℝ^{n−1}.
pub fn base_profile<T: Real>(prm: &Params<T>, opts: &ProfileOptions<T>) -> Result<RadialProfile<T>> {
    let dd = T::from_usize_(prm.d);
    if !(prm.p_prime * -prm.q > dd) {
        return Err(domain(
            "base_profile",
            format!("decay p'|q| = {} does not exceed d = {}", prm.p_prime * -prm.q, prm.d),
        ));
    }
    if !(opts.rho_min > T::zero()) || !(opts.rho_max > T::one()) || !(opts.du > T::zero()) || !(opts.drho > T::zero()) {
        return Err(Error::Parameter("invalid profile resolution".into()));
    }
    let h = extremal_radial(prm, T::zero());
    let mut rho = vec![opts.rho_min];
    let mut k = 1usize;
    loop {
        let r = opts.rho_min * (opts.du * T::from_usize_(k)).exp();
        if r >= T::one() {
            break;
        }
        rho.push(r);
        k += 1;
    }
    let mut r = T::one();
    let mut k = 0usize;
    while r <= opts.rho_max * (T::one() + c(1e-12)) {
        rho.push(r);
        k += 1;
        r = T::one() + opts.drho * T::from_usize_(k);
    }
    let mass = radial_transform(prm.d, &h, T::zero(), opts.quad)?;
    let mut values = Vec::with_capacity(rho.len());
    for &r in &rho {
        values.push(radial_transform(prm.d, &h, r, opts.quad)?);
    }
    let header = ProfileHeader {
        n: prm.n,
        alpha: prm.alpha.as_f64(),
        p_prime: prm.p_prime.as_f64(),
        q: prm.q.as_f64(),
        floor: opts.floor.as_f64(),
        rho_min: rho[0].as_f64(),
        rho_max: rho.last().unwrap().as_f64(),
        mass: mass.as_f64(),
    };
    RadialProfile::from_samples(header, prm.d, rho, values)
}

// ---------------------------------------------------------------------------
// Non-Poisson multiplier

/// e = q + d/p′, the exponent of (1 + t^{p′}) in the scaling reduction.
fn scaling_exponent<T: Real>(prm: &Params<T>) -> T {
    prm.q + T::from_usize_(prm.d) / prm.p_prime
}

/// λ_t = (1 + t^{p′})^{1/p′}.
fn lambda<T: Real>(prm: &Params<T>, t: T) -> T {
    (T::one() + t.powf(prm.p_prime)).powf(prm.p_prime.recip())
}

/// Q̂_t(ρ) through the scaling reduction.
pub fn q_multiplier<T: Real>(t: T, rho: T, base: &RadialProfile<T>, prm: &Params<T>) -> Result<T> {
    if !(t >= T::zero()) {
        return Err(domain("q_multiplier", format!("t must be nonnegative, got {t}")));
    }
    let s = T::one() + t.powf(prm.p_prime);
    if rho == T::zero() {
        return Ok(s.powf(scaling_exponent(prm)));
    }
    let den = base.eval(rho)?;
    if den.abs() < base.floor_abs() {
        return Err(Error::Conditioning { rho: rho.as_f64() });
    }
    if t == T::zero() {
        return Ok(T::one());
    }
    let num = base.eval(lambda(prm, t) * rho)?;
    Ok(s.powf(scaling_exponent(prm)) * num / den)
}

/// Q̂_t(ρ) as a ratio of two independent radial quadratures, no tabulation.
pub fn q_multiplier_direct<T: Real>(t: T, rho: T, prm: &Params<T>, rq: RadialQuad<T>) -> Result<T> {
    let num = radial_transform(prm.d, extremal_radial(prm, t), rho, rq)?;
    let den = radial_transform(prm.d, extremal_radial(prm, T::zero()), rho, rq)?;
    Ok(num / den)
}

/// Which spectral modes the non-Poisson machinery keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ZeroPolicy {
    /// Drop individual modes where |Ĥ₀| is below the floor.
    Pointwise,
    /// Keep only modes below the first zero of Ĥ₀.
    BelowFirstZero,
}

/// Mode selection and multiplier evaluation shared by the norm and the extension.
pub(crate) struct QEvaluator<'a, T: Real> {
    base: &'a RadialProfile<T>,
    prm: Params<T>,
    policy: ZeroPolicy,
    first_zero: Option<T>,
}

impl<'a, T: Real> QEvaluator<'a, T> {
    pub(crate) fn new(base: &'a RadialProfile<T>, prm: &Params<T>, policy: ZeroPolicy) -> Self {
        QEvaluator { base, prm: *prm, policy, first_zero: base.first_zero() }
    }

    /// Ĥ₀(ρ) if the mode is kept.
    pub(crate) fn keep(&self, rho: T) -> Option<T> {
        if rho == T::zero() {
            return Some(self.base.mass());
        }
        if rho > self.base.rho_max() {
            return None;
        }
        if self.policy == ZeroPolicy::BelowFirstZero {
            if let Some(z) = self.first_zero {
                if rho >= z {
                    return None;
                }
            }
        }
        let v = self.base.eval_or_zero(rho).0;
        if v.abs() < self.base.floor_abs() {
            None
        } else {
            Some(v)
        }
    }

    /// (Q̂_t(ρ), ∂_t Q̂_t(ρ)) given the kept denominator.
    pub(crate) fn value_and_dt(&self, t: T, rho: T, den: T) -> (T, T) {
        let prm = &self.prm;
        let pp = prm.p_prime;
        let e = scaling_exponent(prm);
        let tp = if t > T::zero() { t.powf(pp) } else { T::zero() };
        let s = T::one() + tp;
        let ds = if t > T::zero() { pp * tp / t } else { T::zero() };
        if rho == T::zero() {
            let v = s.powf(e);
            return (v, e * ds * v / s);
        }
        let lam = s.powf(pp.recip());
        let dlam = lam / (pp * s) * ds;
        let (num, dnum) = self.base.eval_or_zero(lam * rho);
        let se = s.powf(e);
        let v = se * num / den;
        let dv = (e * ds / s * se * num + se * dnum * rho * dlam) / den;
        (v, dv)
    }
}

/// Ĥ₀(ρ) for the weight integrals, which treat the numerator beyond the table as zero.
fn weight_denominator<T: Real>(qe: &QEvaluator<'_, T>, rho: T) -> Result<T> {
    qe.keep(rho).ok_or(Error::Conditioning { rho: rho.as_f64() })
}

/// W(ρ) = ∫ |Q̂_t(ρ)|² t^a dt on the given t-grid.
pub fn q_weight_profile<T: Real>(rho: T, base: &RadialProfile<T>, prm: &Params<T>, tgrid: &TGrid<T>) -> Result<T> {
    let qe = QEvaluator::new(base, prm, ZeroPolicy::Pointwise);
    let den = weight_denominator(&qe, rho)?;
    let q2 = |t: T| {
        let q = qe.value_and_dt(t, rho, den).0;
        q * q
    };
    let w = tgrid.integrate(q2);
    check_decay(tgrid, w, |t| Ok(q2(t)))?;
    Ok(w)
}

/// The same weight through the substitution t = s/ρ:
/// ρ^{−2α}∫|s^α Q̂_{s/ρ}(ρ)|² ds/s, with `sgrid` a quadrature in s for weight s^a.
pub fn q_weight_profile_s<T: Real>(rho: T, base: &RadialProfile<T>, prm: &Params<T>, sgrid: &TGrid<T>) -> Result<T> {
    if !(rho > T::zero()) {
        return Err(domain("q_weight_profile_s", "needs rho > 0"));
    }
    let qe = QEvaluator::new(base, prm, ZeroPolicy::Pointwise);
    let den = weight_denominator(&qe, rho)?;
    let w = sgrid.integrate(|s| {
        let q = qe.value_and_dt(s / rho, rho, den).0;
        q * q
    });
    Ok(w * rho.powf(-(prm.a + T::one())))
}

fn check_decay<T: Real, F: Fn(T) -> Result<T>>(tgrid: &TGrid<T>, total: T, f: F) -> Result<()> {
    let t = tgrid.t_max;
    let tail = f(t)? * t.powf(tgrid.a + T::one());
    if tail > c::<T>(1e-6) * total {
        return Err(Error::Resolution(format!(
            "t-integrand has not decayed at T_max = {t}: tail estimate {tail:e} vs total {total:e}"
        )));
    }
    Ok(())
}

/// Poisson analogue of [`q_weight_profile`]: ∫ e^{−4πρt} t^a dt on the grid.
pub fn poisson_weight_profile<T: Real>(rho: T, tgrid: &TGrid<T>) -> T {
    tgrid.integrate(|t| {
        let m = poisson_multiplier(t, rho);
        m * m
    })
}

/// Result of [`nonpoisson_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonPoissonNorm<T> {
    pub value: T,
    /// Share of Σ|ĥ|² on modes dropped by the zero policy.
    pub excluded_mass: T,
    pub excluded_modes: usize,
    /// Largest W(ρ)/W(0) over kept modes, a measure of denominator conditioning.
    pub max_weight_ratio: T,
    pub first_zero: Option<T>,
    /// Relative error bound if every kept mode carried an aliasing error the
    /// size of the largest amplitude on the outermost frequency shell.
    pub alias_budget: T,
}

/// (Σ_ξ |ĥ(ξ)|² W(|ξ|) Δξ^d)^{1/2}, the zero mode included since W(0) is finite.
pub fn nonpoisson_norm<T: Real>(
    h: &Field<T>,
    base: &RadialProfile<T>,
    prm: &Params<T>,
    tgrid: &TGrid<T>,
    policy: ZeroPolicy,
) -> Result<NonPoissonNorm<T>> {
    check_dims(h, prm)?;
    let spec = dft(h)?;
    let grid = spec.grid;
    let qe = QEvaluator::new(base, prm, policy);
    let w0: T = tgrid.integrate(|t| {
        let v = qe.value_and_dt(t, T::zero(), base.mass()).0;
        v * v
    });
    let mut sum = T::zero();
    let mut total = T::zero();
    let mut dropped = T::zero();
    let mut excluded = 0usize;
    let mut worst = T::zero();
    let mut wsum = T::zero();
    let mut edge = T::zero();
    // Modes sharing |ξ| share W; cache by squared integer radius.
    let mut cache: std::collections::HashMap<usize, Option<T>> = std::collections::HashMap::new();
    for (i, v) in spec.values.iter().enumerate() {
        let a2 = v.norm_sqr();
        total = total + a2;
        if grid.on_nyquist_shell(i) {
            edge = edge.max(a2);
        }
        let key = grid.freq_index_norm2(i);
        let w = *cache.entry(key).or_insert_with(|| {
            let rho = grid.freq_norm(i);
            qe.keep(rho).map(|den| {
                tgrid.integrate(|t| {
                    let q = qe.value_and_dt(t, rho, den).0;
                    q * q
                })
            })
        });
        match w {
            Some(w) => {
                sum = sum + a2 * w;
                wsum = wsum + w;
                worst = worst.max(w / w0);
            }
            None => {
                dropped = dropped + a2;
                excluded += 1;
            }
        }
    }
    let cell = grid.freq_cell_volume();
    let value = (sum * cell).sqrt();
    Ok(NonPoissonNorm {
        value,
        alias_budget: if value > T::zero() { (edge * wsum * cell).sqrt() / value } else { T::zero() },
        excluded_mass: if total > T::zero() { dropped / total } else { T::zero() },
        excluded_modes: excluded,
        max_weight_ratio: worst,
        first_zero: qe.first_zero,
    })
}

pub(crate) fn check_dims<T: Real>(h: &Field<T>, prm: &Params<T>) -> Result<()> {
    if h.grid.d != prm.d {
        return Err(Error::Usage(format!("field dimension {} but n − 1 = {}", h.grid.d, prm.d)));
    }
    if h.side != Side::Physical {
        return Err(Error::Usage("expected a physical-side field".into()));
    }
    Ok(())
}

/// Slices idft(Q̂_{t_k} ĥ) with modes selected by `policy`.
pub fn nonpoisson_extend<T: Real>(
    h: &Field<T>,
    base: &RadialProfile<T>,
    prm: &Params<T>,
    tgrid: &TGrid<T>,
    policy: ZeroPolicy,
) -> Result<HalfSpaceField<T>> {
    check_dims(h, prm)?;
    let spec = dft(h)?;
    let mult = nonpoisson_modes(&spec, base, prm, policy);
    let set = multiplier_slices(&spec, tgrid, mult, Want { value: true, dt: false, grad: false })?;
    HalfSpaceField::new(tgrid.clone(), set.value)
}

/// Per-mode (Q̂_t, ∂_t Q̂_t) with excluded modes mapped to zero.
pub(crate) fn nonpoisson_modes<'a, T: Real>(
    spec: &Field<T>,
    base: &'a RadialProfile<T>,
    prm: &Params<T>,
    policy: ZeroPolicy,
) -> impl Fn(T, usize) -> (T, T) + 'a {
    let grid = spec.grid;
    let qe = QEvaluator::new(base, prm, policy);
    let dens: Vec<Option<(T, T)>> = (0..grid.len())
        .map(|i| {
            let rho = grid.freq_norm(i);
            qe.keep(rho).map(|d| (rho, d))
        })
        .collect();
    move |t, i| match dens[i] {
        Some((rho, den)) => qe.value_and_dt(t, rho, den),
        None => (T::zero(), T::zero()),
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Want {
    pub value: bool,
    pub dt: bool,
    pub grad: bool,
}

/// Physical-side slices of a t-dependent multiplier applied to a spectrum.
pub(crate) struct SliceSet<T> {
    pub value: Vec<Field<T>>,
    pub dt: Vec<Field<T>>,
    /// grad[k][axis]
    pub grad: Vec<Vec<Field<T>>>,
}

/// Applies m(t_k, mode) (and its t-derivative) to `spec` for every t-node.
pub(crate) fn multiplier_slices<T: Real, M>(spec: &Field<T>, tgrid: &TGrid<T>, mult: M, want: Want) -> Result<SliceSet<T>>
where
    M: Fn(T, usize) -> (T, T),
{
    let grid = spec.grid;
    let two_pi = c::<T>(2.0) * T::PI();
    let freqs: Vec<[T; 3]> = (0..grid.len()).map(|i| grid.freq_point(i)).collect();
    let mut set = SliceSet { value: Vec::new(), dt: Vec::new(), grad: Vec::new() };
    let mut m = vec![T::zero(); grid.len()];
    let mut dm = vec![T::zero(); grid.len()];
    for &t in &tgrid.nodes {
        for i in 0..grid.len() {
            let (a, b) = mult(t, i);
            m[i] = a;
            dm[i] = b;
        }
        let scaled = |f: &dyn Fn(usize) -> Complex<T>| -> Result<Field<T>> {
            let mut s = spec.clone();
            for (i, v) in s.values.iter_mut().enumerate() {
                *v = f(i);
            }
            idft(&s)
        };
        if want.value {
            set.value.push(scaled(&|i| spec.values[i] * m[i])?);
        }
        if want.dt {
            set.dt.push(scaled(&|i| spec.values[i] * dm[i])?);
        }
        if want.grad {
            let mut g = Vec::with_capacity(grid.d);
            for axis in 0..grid.d {
                // The Nyquist line has no odd partner; its derivative is dropped.
                g.push(scaled(&|i| {
                    if grid.multi_index(i)[axis] == grid.n / 2 {
                        Complex::new(T::zero(), T::zero())
                    } else {
                        spec.values[i] * Complex::new(T::zero(), two_pi * freqs[i][axis] * m[i])
                    }
                })?);
            }
            set.grad.push(g);
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::derive_params;
    use crate::sampling::{make_grid, make_tgrid, sample, Grading};

    #[test]
    fn poisson_kernel_examples() {
        let v: f64 = poisson_kernel(1.0, &[0.0, 0.0], 3).unwrap();
        assert!((v - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert!(poisson_kernel(0.0f64, &[1.0, 0.0], 3).is_err());
        for &(t, x, y) in &[(0.3, 0.5, -1.0), (2.0, 3.0, 0.25), (0.05, 0.01, 0.02)] {
            let a: f64 = poisson_kernel(t, &[x, y], 3).unwrap();
            let b = t.powi(-2) * poisson_kernel(1.0, &[x / t, y / t], 3).unwrap();
            assert!(((a - b) / a).abs() < 1e-12);
        }
    }

    #[test]
    fn poisson_parts_match_differences() {
        let (t, r, h) = (0.7f64, 1.3, 1e-5);
        let (_, pt, pr) = poisson_parts(t, r, 3);
        let dt = (poisson_parts(t + h, r, 3).0 - poisson_parts(t - h, r, 3).0) / (2.0 * h);
        let dr = (poisson_parts(t, r + h, 3).0 - poisson_parts(t, r - h, 3).0) / (2.0 * h);
        assert!((pt - dt).abs() < 1e-9 && (pr - dr).abs() < 1e-9);
    }

    #[test]
    fn time_weight_examples() {
        let pi = std::f64::consts::PI;
        assert!((poisson_time_weight(1.0, 0.0).unwrap() - 1.0 / (4.0 * pi)).abs() < 1e-15);
        let want = gamma(1.5f64).unwrap() / (4.0 * pi).powf(1.5);
        assert!((poisson_time_weight(1.0, 0.5).unwrap() - want).abs() < 1e-15);
        assert!(poisson_time_weight(0.0f64, 0.0).is_err());
        for &a in &[0.0, 0.5] {
            let tg = make_tgrid(a, 32.0f64, 64, Grading::Geometric).unwrap();
            for &rho in &[0.5, 1.0, 2.0] {
                let got = poisson_weight_profile(rho, &tg);
                let want = poisson_time_weight(rho, a).unwrap();
                assert!(((got - want) / want).abs() < 1e-6, "a = {a}, rho = {rho}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn poisson_extend_single_mode() {
        let grid = make_grid(2, 4.0f64, 32).unwrap();
        let k = 3.0 / 8.0;
        let g = crate::sampling::sample_complex(
            |x| Complex::new(0.0, 2.0 * std::f64::consts::PI * k * x[0]).exp(),
            &grid,
        )
        .unwrap();
        let tg = make_tgrid(0.0, 4.0, 16, Grading::Geometric).unwrap();
        let ext = poisson_extend(&g, &tg).unwrap();
        let mut prev = f64::INFINITY;
        for (s, &t) in ext.slices.iter().zip(&tg.nodes) {
            let m = poisson_multiplier(t, k);
            for (a, b) in s.values.iter().zip(&g.values) {
                assert!((a - b * m).norm() < 1e-12);
            }
            let l2 = s.l2_norm();
            assert!(l2 < prev);
            prev = l2;
        }
    }

    #[test]
    fn radial_transform_of_gaussian() {
        // e^{−π r²} is its own transform in every dimension.
        let h = |r: f64| {
            let v = (-std::f64::consts::PI * r * r).exp();
            (v, -2.0 * std::f64::consts::PI * r * v)
        };
        for d in 1..=3 {
            for &rho in &[0.0, 0.3, 1.1, 2.5] {
                let got = radial_transform(d, h, rho, RadialQuad::default()).unwrap();
                let want = (-std::f64::consts::PI * rho * rho).exp();
                assert!((got - want).abs() < 1e-13, "d = {d}, rho = {rho}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn radial_transform_power_tail() {
        // (1 + r²)^{−5/2} in ℝ² has transform (2π/3)(1 + 2πρ)e^{−2πρ}. The two-term
        // tail leaves h″R/c³ ~ 1e−10 for this slow r^{−5} decay.
        let h = |r: f64| {
            let s = 1.0 + r * r;
            (s.powf(-2.5), -5.0 * r * s.powf(-3.5))
        };
        let tau = 2.0 * std::f64::consts::PI;
        for &rho in &[0.0, 0.05, 0.5, 1.5, 4.0] {
            let got = radial_transform(2, h, rho, RadialQuad::default()).unwrap();
            let want = tau / 3.0 * (1.0 + tau * rho) * (-tau * rho).exp();
            assert!((got - want).abs() < 1e-9, "rho = {rho}: {got} vs {want}");
        }
    }

    #[test]
    fn spline_reproduces_smooth_function() {
        let rho: Vec<f64> = (0..200).map(|k| 1e-3 * (1.05f64).powi(k)).collect();
        let f = |r: f64| (-r).exp();
        let values: Vec<f64> = rho.iter().map(|&r| f(r)).collect();
        let header = ProfileHeader {
            n: 3,
            alpha: 0.5,
            p_prime: 6.0,
            q: -1.5,
            floor: 1e-10,
            rho_min: rho[0],
            rho_max: *rho.last().unwrap(),
            mass: 1.0,
        };
        let p = RadialProfile::from_samples(header, 2, rho, values).unwrap();
        for &r in &[0.002, 0.1, 1.0, 3.3] {
            let (v, s) = p.eval_with_slope(r).unwrap();
            assert!((v - f(r)).abs() < 1e-6, "value at {r}");
            assert!((s + f(r)).abs() < 1e-3, "slope at {r}");
        }
        assert!(matches!(p.eval(1e-4), Err(Error::Range(_))));
        assert!(matches!(p.eval(1e4), Err(Error::Range(_))));
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let back = RadialProfile::<f64>::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back.values, p.values);
        assert_eq!(back.header, p.header);
    }

    #[test]
    fn base_profile_rejects_slow_decay() {
        let mut prm = derive_params::<f64>(3, 0.5).unwrap();
        prm.q = -0.2;
        assert!(base_profile(&prm, &ProfileOptions::default()).is_err());
    }

    #[test]
    fn nonpoisson_checks_dimension() {
        let prm = derive_params::<f64>(3, 0.5).unwrap();
        let grid = make_grid(1, 4.0, 16).unwrap();
        let h = sample(|x: &[f64]| (-x[0] * x[0]).exp(), &grid).unwrap();
        let rho: Vec<f64> = (1..10).map(|k| k as f64).collect();
        let header = ProfileHeader {
            n: 3,
            alpha: 0.5,
            p_prime: 6.0,
            q: -1.5,
            floor: 1e-10,
            rho_min: 1.0,
            rho_max: 9.0,
            mass: 1.0,
        };
        let base = RadialProfile::from_samples(header, 2, rho.clone(), rho).unwrap();
        let tg = make_tgrid(0.0, 4.0, 16, Grading::Geometric).unwrap();
        assert!(matches!(
            nonpoisson_norm(&h, &base, &prm, &tg, ZeroPolicy::Pointwise),
            Err(Error::Usage(_))
        ));
    }
}
