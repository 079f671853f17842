//! Closed-form constants of the trace inequalities and their cross-identities.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::real::{c, Real};
use crate::special::gamma;

/// The parameter bundle (n, α) and its derived exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Params<T> {
    /// Half-space dimension.
    pub n: usize,
    pub alpha: T,
    pub p: T,
    pub p_prime: T,
    /// Extremal exponent (1 + p − n − 2α)/p, negative.
    pub q: T,
    /// Weight exponent a = 2α − 1 of σ(t, x) = t^a.
    pub a: T,
    /// Boundary dimension n − 1.
    pub d: usize,
}

impl<T: Real> Params<T> {
    /// σ(t) = t^a.
    pub fn weight(&self, t: T) -> T {
        if self.a == T::zero() {
            T::one()
        } else {
            t.powf(self.a)
        }
    }

    /// Exponent (n−1)/(n−1+2α) on the affine energy in the trace quotients.
    pub fn energy_exponent(&self) -> T {
        let d = T::from_usize_(self.d);
        d / (d + c::<T>(2.0) * self.alpha)
    }

    /// Exponent 2α/(n−1+2α) on the time-derivative norm.
    pub fn dt_exponent(&self) -> T {
        T::one() - self.energy_exponent()
    }

    /// Power-law decay rate p′q of the extremal profile.
    pub fn decay_exponent(&self) -> T {
        self.p_prime * self.q
    }
}

pub fn derive_params<T: Real>(n: usize, alpha: T) -> Result<Params<T>> {
    if n < 3 {
        return Err(Error::Parameter(format!("n must be at least 3, got {n}")));
    }
    if !(alpha >= c(0.5)) {
        return Err(Error::Parameter(format!("alpha must be >= 1/2, got {alpha}")));
    }
    if !(alpha < T::one()) {
        return Err(Error::Parameter(format!("alpha must be < 1, got {alpha}")));
    }
    let nn = T::from_usize_(n);
    let two = c::<T>(2.0);
    let p = two * (nn - T::one() + two * alpha) / (nn + T::one() + two * alpha);
    let p_prime = p / (p - T::one());
    let q = (T::one() + p - nn - two * alpha) / p;
    Ok(Params { n, alpha, p, p_prime, q, a: two * alpha - T::one(), d: n - 1 })
}

/// Volume of the unit ball in dimension s (real s allowed).
pub fn omega<T: Real>(s: T) -> Result<T> {
    if !(s >= T::zero()) {
        return Err(domain("omega", format!("dimension must be nonnegative, got {s}")));
    }
    Ok(T::PI().powf(s * c(0.5)) / gamma((s + c(2.0)) * c(0.5))?)
}

/// Surface measure of the unit sphere S^{d−1} ⊂ ℝ^d.
pub fn sphere_area<T: Real>(d: usize) -> Result<T> {
    let dd = T::from_usize_(d);
    Ok(dd * omega(dd)?)
}

/// Sharp constant A(n) of the classical trace inequality.
pub fn escobar_constant<T: Real>(n: usize) -> Result<T> {
    if n < 3 {
        return Err(domain("escobar_constant", format!("n must be at least 3, got {n}")));
    }
    let nn = T::from_usize_(n);
    let base = gamma(nn)? / ((nn - T::one()) * gamma((nn - T::one()) * c(0.5))?);
    Ok(base.powf((nn - T::one()).recip()) / (T::PI().sqrt() * (nn - c(2.0))))
}

/// Sharp constant B(n, α) of the fractional trace inequality.
pub fn xiao_constant<T: Real>(n: usize, alpha: T) -> Result<T> {
    let nn = T::from_usize_(n);
    if n < 2 || !(alpha > T::zero()) || !(alpha < T::one()) || !(alpha < nn * c(0.5)) {
        return Err(domain("xiao_constant", format!("need n >= 2, 0 < alpha < min(1, n/2); got ({n}, {alpha})")));
    }
    let two = c::<T>(2.0);
    let half_n = nn * c(0.5);
    let lead = two.powf(T::one() - c::<T>(4.0) * alpha) / (T::PI().powf(alpha) * gamma(two * (T::one() - alpha))?);
    let ratio = gamma(half_n - alpha)? / gamma(half_n + alpha)?;
    let tail = (gamma(nn)? / gamma(half_n)?).powf(two * alpha / nn);
    Ok(lead * ratio * tail)
}

/// κ(2α) = π^{d/2} 2^{2α} Γ(α)/Γ(d/2 − α), normalizing the Riesz potential in ℝ^d.
pub fn kappa<T: Real>(d: usize, alpha: T) -> Result<T> {
    let half_d = T::from_usize_(d) * c(0.5);
    if d < 1 || !(alpha > T::zero()) || !(alpha < half_d) {
        return Err(domain("kappa", format!("need 0 < alpha < d/2; got (d = {d}, alpha = {alpha})")));
    }
    Ok(T::PI().powf(half_d) * c::<T>(2.0).powf(c::<T>(2.0) * alpha) * gamma(alpha)? / gamma(half_d - alpha)?)
}

/// c_{n,p} normalizing the L^p affine energy in ℝ^n.
pub fn affine_normalizer<T: Real>(n: usize, p: T) -> Result<T> {
    if n < 1 || !(p >= T::one()) {
        return Err(domain("affine_normalizer", format!("need n >= 1, p >= 1; got ({n}, {p})")));
    }
    let nn = T::from_usize_(n);
    let nw = nn * omega(nn)?;
    let inner = nw * omega(p - T::one())? / (c::<T>(2.0) * omega(nn + p - c(2.0))?);
    Ok(nw.powf(nn.recip()) * inner.powf(p.recip()))
}

/// The two factors printed for the weighted Sobolev constant and their product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HaddadFactors<T> {
    pub l: T,
    pub m: T,
    /// The product L·M.
    pub j: T,
}

fn check_haddad_range<T: Real>(op: &'static str, n: usize, p: T, a: T) -> Result<()> {
    let nn = T::from_usize_(n);
    if !(a >= T::zero()) || !(p > T::one()) || !(p < nn + a) {
        return Err(domain(op, format!("need a >= 0 and 1 < p < n + a; got (n = {n}, p = {p}, a = {a})")));
    }
    Ok(())
}

/// Printed factors L(n,p,a), M(n,p,a) and their product.
///
/// These are the literal formulas; they do not reproduce the quotient of the
/// extremal family (see [`sharp_haddad_constant`]).
pub fn haddad_constants<T: Real>(n: usize, p: T, a: T) -> Result<HaddadFactors<T>> {
    check_haddad_range("haddad_constants", n, p, a)?;
    let nn = T::from_usize_(n);
    let one = T::one();
    let two = c::<T>(2.0);
    let pi = T::PI();
    let pp = p / (p - one);
    let na = nn + a;

    let l_first = ((p - one).powf(p - one) / (na * (nn - p + a).powf(p - one))).powf(p.recip());
    let l_num = two * pi.powf((a + two - nn) * c(0.5)) * gamma(na)? * gamma((na + two) * c(0.5))?;
    let l_den = gamma(na * (p - one) / p + one)? * gamma(na / p)? * gamma((one + a) * c(0.5))?;
    let l = l_first * (l_num / l_den).powf(na.recip());

    let m = pp.powf(-pp.recip())
        * pi.powf((one - nn) / (two * na))
        * (one + a).powf(-(one + a) / (p * na))
        * (nn - one).powf((one - nn) / (p * na))
        * (na / p).powf(p.recip())
        * (pp * gamma((nn + one) * c(0.5))? * gamma((na + pp) / pp)?
            / (gamma((one + a) / pp)? * gamma((nn - one + pp) / pp)?))
        .powf(na.recip());

    Ok(HaddadFactors { l, m, j: l * m })
}

/// Which exponent is used at the −1/(·) position of the assembled closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExponentVariant {
    /// −1/p′, as in the derivation of the assembled constant.
    PPrime,
    /// −1/q, as printed in the statement of the Poisson trace theorem.
    Q,
}

/// The printed single closed form for J(n, p, 2α−1), with p from [`derive_params`].
pub fn assembled_j<T: Real>(n: usize, alpha: T, variant: ExponentVariant) -> Result<T> {
    let prm = derive_params::<T>(n, alpha)?;
    let nn = T::from_usize_(n);
    let one = T::one();
    let two = c::<T>(2.0);
    let (p, pp) = (prm.p, prm.p_prime);
    let m = nn + two * alpha - one;
    let expo = match variant {
        ExponentVariant::PPrime => -pp.recip(),
        ExponentVariant::Q => -prm.q.recip(),
    };
    let inner = pp * gamma((nn + one) * c(0.5))? * gamma(m)?
        / (gamma(two * alpha / pp)? * gamma((nn - one + pp) / pp)? * gamma(m / pp)?);
    Ok(T::PI().powf(-(nn - one) / (two * m))
        * (two * alpha).powf(-two * alpha / (p * m))
        * (nn - one).powf(-(nn - one) / (p * m))
        * ((m - p) / (p - one)).powf(expo)
        * inner.powf(m.recip()))
}

/// The quotient attained by the extremal (1 + t^{p′} + |x|^{p′})^q, in closed form.
///
/// Every factor of the quotient is a Dirichlet-type integral
/// ∫∫ t^{α_t} r^{α_x + d − 1} (1 + t^s + r^s)^β = Γ(A)Γ(B)Γ(−β−A−B)/(s²Γ(−β)).
pub fn sharp_haddad_constant<T: Real>(n: usize, p: T, a: T) -> Result<T> {
    check_haddad_range("sharp_haddad_constant", n, p, a)?;
    let nn = T::from_usize_(n);
    let d = n - 1;
    let dd = T::from_usize_(d);
    let one = T::one();
    let half = c::<T>(0.5);
    let s = p / (p - one);
    let q = (p - nn - a) / p;
    let pi = T::PI();
    let area = sphere_area::<T>(d)?;
    // ∫_{S^{d−1}} |ω₁|^p dω
    let area_p = c::<T>(2.0) * pi.powf((dd - one) * half) * gamma((p + one) * half)? / gamma((dd + p) * half)?;
    let dirichlet = |at: T, ax: T, beta: T, ang: T| -> Result<T> {
        let big_a = (at + one) / s;
        let big_b = (ax + dd) / s;
        Ok(ang / (s * s) * gamma(big_a)? * gamma(big_b)? * gamma(-beta - big_a - big_b)? / gamma(-beta)?)
    };
    let qs = (q * s).abs().powf(p);
    let num = dirichlet(a, T::zero(), c::<T>(2.0) * q, area)?.sqrt();
    let gt = (qs * dirichlet(a + (s - one) * p, T::zero(), (q - one) * p, area)?).powf(p.recip());
    let gx = (qs * dirichlet(a, (s - one) * p, (q - one) * p, area_p)?).powf(p.recip());
    let energy = affine_normalizer::<T>(d, p)? * area.powf(-dd.recip()) * gx;
    let na = nn + a;
    Ok(num / (energy.powf(dd / na) * gt.powf((one + a) / na)))
}

/// (2^{2α}/Γ(2α))^{1/2}, the ratio D/J.
pub fn d_over_j<T: Real>(alpha: T) -> Result<T> {
    let two = c::<T>(2.0);
    Ok((two.powf(two * alpha) / gamma(two * alpha)?).sqrt())
}

/// D(n, p, α) = (2^{2α}/Γ(2α))^{1/2}·J with J the sharp weighted constant.
pub fn theorem1_d<T: Real>(n: usize, alpha: T) -> Result<T> {
    let prm = derive_params::<T>(n, alpha)?;
    Ok(d_over_j(alpha)? * sharp_haddad_constant(n, prm.p, prm.a)?)
}

/// HLS sharp constant in ℝ^d for the kernel |x − y|^{−(d−2α)}.
pub fn hls_constant<T: Real>(d: usize, alpha: T) -> Result<T> {
    let half_d = T::from_usize_(d) * c(0.5);
    if d < 1 || !(alpha > T::zero()) || !(alpha < half_d) {
        return Err(domain("hls_constant", format!("need 0 < alpha < d/2; got (d = {d}, alpha = {alpha})")));
    }
    let dd = T::from_usize_(d);
    let pi = T::PI();
    Ok(pi.powf(half_d - alpha) * gamma(alpha)? / gamma(half_d + alpha)?
        * (gamma(half_d)? / gamma(dd)?).powf(-c::<T>(2.0) * alpha / dd))
}

/// Sharp constant B(d,α)Γ(2(1−α))2^{2α−1} of the fractional Sobolev inequality in ℝ^d.
pub fn frac_sobolev_constant<T: Real>(d: usize, alpha: T) -> Result<T> {
    let two = c::<T>(2.0);
    Ok(xiao_constant(d, alpha)? * gamma(two * (T::one() - alpha))? * two.powf(two * alpha - T::one()))
}

/// Every constant attached to an admissible (n, α).
#[derive(Debug, Clone, Serialize)]
pub struct ConstantTable {
    pub n: usize,
    pub alpha: f64,
    pub p: f64,
    pub p_prime: f64,
    pub q: f64,
    pub a: f64,
    /// A(n).
    pub escobar: f64,
    /// B(n − 1, α), the boundary-dimension fractional trace constant.
    pub xiao: f64,
    /// κ(2α) in the boundary dimension.
    pub kappa: f64,
    /// c_{n−1,p}.
    pub cnp: f64,
    pub l_printed: f64,
    pub m_printed: f64,
    /// L·M from the printed factors.
    pub lm_printed: f64,
    pub j_assembled_pprime: f64,
    pub j_assembled_q: f64,
    /// Operative J: the quotient attained by the extremal family.
    pub j: f64,
    /// D = (2^{2α}/Γ(2α))^{1/2}·J.
    pub d: f64,
    /// (2^{2α}/Γ(2α))^{1/2}·L·M with the printed factors.
    pub d_printed: f64,
    #[serde(rename = "D_over_J")]
    pub d_over_j: f64,
    pub d_sharp_ref: f64,
    pub hls: f64,
    pub frac_sob: f64,
}

pub fn constant_table(n: usize, alpha: f64) -> Result<ConstantTable> {
    let prm = derive_params::<f64>(n, alpha)?;
    let d = prm.d;
    let factors = haddad_constants(n, prm.p, prm.a)?;
    let j = sharp_haddad_constant(n, prm.p, prm.a)?;
    let ratio = d_over_j(alpha)?;
    Ok(ConstantTable {
        n,
        alpha,
        p: prm.p,
        p_prime: prm.p_prime,
        q: prm.q,
        a: prm.a,
        escobar: escobar_constant(n)?,
        xiao: xiao_constant(d, alpha)?,
        kappa: kappa(d, alpha)?,
        cnp: affine_normalizer(d, prm.p)?,
        l_printed: factors.l,
        m_printed: factors.m,
        lm_printed: factors.j,
        j_assembled_pprime: assembled_j(n, alpha, ExponentVariant::PPrime)?,
        j_assembled_q: assembled_j(n, alpha, ExponentVariant::Q)?,
        j,
        d: ratio * j,
        d_printed: ratio * factors.j,
        d_over_j: ratio,
        d_sharp_ref: j,
        hls: hls_constant(d, alpha)?,
        frac_sob: frac_sobolev_constant(d, alpha)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        ((a - b) / b).abs() < tol
    }

    #[test]
    fn params_examples() {
        let p = derive_params::<f64>(3, 0.5).unwrap();
        assert!(close(p.p, 1.2, 1e-15) && close(p.p_prime, 6.0, 1e-14) && close(p.q, -1.5, 1e-14));
        assert_eq!(p.a, 0.0);
        let p = derive_params::<f64>(4, 0.5).unwrap();
        assert!(close(p.p, 4.0 / 3.0, 1e-15) && close(p.p_prime, 4.0, 1e-14) && close(p.q, -2.0, 1e-14));
        assert!(matches!(derive_params::<f64>(3, 0.25), Err(Error::Parameter(_))));
        assert!(matches!(derive_params::<f64>(2, 0.5), Err(Error::Parameter(_))));
        assert!(matches!(derive_params::<f64>(3, 1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn omega_examples() {
        assert!(close(omega(2.0).unwrap(), std::f64::consts::PI, 1e-14));
        assert!(close(omega(1.0).unwrap(), 2.0, 1e-14));
        assert!(close(omega(0.0).unwrap(), 1.0, 1e-14));
        assert!(omega(-1.0f64).is_err());
    }

    #[test]
    fn named_constants_against_reference() {
        let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
        assert!(close(escobar_constant(3).unwrap(), inv_sqrt_pi, 1e-14));
        assert!(close(escobar_constant(4).unwrap(), 0.370_018_484_153_678_1, 1e-13));
        assert!(close(escobar_constant(5).unwrap(), 0.294_334_805_816_187_67, 1e-13));
        assert!(escobar_constant::<f64>(2).is_err());
        assert!(close(xiao_constant(2, 0.5).unwrap(), inv_sqrt_pi, 1e-14));
        assert!(close(xiao_constant(3, 0.5).unwrap(), 0.370_018_484_153_678_1, 1e-13));
        assert!(close(xiao_constant(2, 0.75).unwrap(), 0.235_797_221_859_858_8, 1e-13));
        assert!(xiao_constant(2, 1.0f64).is_err());
        assert!(close(kappa(2, 0.5).unwrap(), 2.0 * std::f64::consts::PI, 1e-14));
        assert!(close(kappa(3, 0.5).unwrap(), 19.739_208_802_178_717, 1e-13));
        assert!(kappa(1, 0.5f64).is_err());
        assert!(close(affine_normalizer(2, 2.0).unwrap(), 3.544_907_701_811_032, 1e-14));
        assert!(close(affine_normalizer(2, 1.2).unwrap(), 3.832_982_478_934_816_6, 1e-13));
        assert!(close(affine_normalizer(1, 1.0).unwrap(), 2.0, 1e-14));
        assert!(close(hls_constant(2, 0.5).unwrap(), 3.544_907_701_811_032, 1e-14));
        assert!(close(hls_constant(3, 0.5).unwrap(), 7.303_872_119_375_109, 1e-13));
    }

    #[test]
    fn printed_factors_against_reference() {
        let f = haddad_constants(3, 1.2, 0.0).unwrap();
        assert!(close(f.l, 0.313_194_116_819_158_5, 1e-13));
        assert!(close(f.m, 0.756_365_250_051_894_8, 1e-13));
        assert_eq!(f.j, f.l * f.m);
        let prm = derive_params::<f64>(3, 0.75).unwrap();
        let f = haddad_constants(3, prm.p, prm.a).unwrap();
        assert!(close(f.l, 0.364_626_580_787_145_06, 1e-13));
        assert!(close(f.m, 0.859_060_893_018_794_3, 1e-13));
        assert!(haddad_constants(3, 4.0, 0.0f64).is_err());
    }

    #[test]
    fn assembled_form_disagrees_with_printed_product() {
        // The two printed expressions for J are different numbers.
        let lm = haddad_constants(3, 1.2, 0.0).unwrap().j;
        let asm = assembled_j(3, 0.5, ExponentVariant::PPrime).unwrap();
        assert!(close(asm, 0.357_056_045_030_938_2, 1e-13));
        assert!(close(assembled_j(3, 0.5, ExponentVariant::Q).unwrap(), 2.228_119_509_575_240_2, 1e-13));
        assert!((asm / lm - 1.0).abs() > 0.4);
    }

    #[test]
    fn sharp_constant_against_reference() {
        let cases = [
            (3, 0.5, 0.392_991_028_156_733_9),
            (3, 0.75, 0.433_792_866_042_393_6),
            (4, 0.5, 0.308_630_202_064_297_86),
            (3, 0.6, 0.414_916_702_093_030_5),
            (5, 0.9, 0.306_634_152_146_707_34),
        ];
        for (n, alpha, want) in cases {
            let prm = derive_params::<f64>(n, alpha).unwrap();
            let got = sharp_haddad_constant(n, prm.p, prm.a).unwrap();
            assert!(close(got, want, 1e-12), "({n}, {alpha}): {got} vs {want}");
        }
    }

    #[test]
    fn theorem1_ratio() {
        let j = sharp_haddad_constant(3, 1.2, 0.0).unwrap();
        assert!(close(theorem1_d(3, 0.5).unwrap() / j, 2f64.sqrt(), 1e-14));
        let prm = derive_params::<f64>(3, 0.75).unwrap();
        let j = sharp_haddad_constant(3, prm.p, prm.a).unwrap();
        let want = (2f64.powf(1.5) / gamma(1.5).unwrap()).sqrt();
        assert!(close(theorem1_d(3, 0.75).unwrap() / j, want, 1e-14));
        assert!(close(want, 1.786_487_683_476_004_7, 1e-13));
    }

    #[test]
    fn hls_duality_identity_sweep() {
        for d in [2usize, 3] {
            for alpha in [0.5, 0.6, 0.75, 0.9] {
                let lhs = hls_constant(d, alpha).unwrap() / kappa(d, alpha).unwrap();
                let rhs = frac_sobolev_constant(d, alpha).unwrap();
                assert!(close(lhs, rhs, 1e-12), "d = {d}, alpha = {alpha}");
            }
        }
    }

    #[test]
    fn table_is_positive() {
        let t = constant_table(3, 0.5).unwrap();
        for v in [t.escobar, t.xiao, t.kappa, t.cnp, t.l_printed, t.m_printed, t.j, t.d, t.hls, t.frac_sob] {
            assert!(v > 0.0 && v.is_finite());
        }
        assert!(close(t.d_over_j, 2f64.sqrt(), 1e-15));
    }
}
