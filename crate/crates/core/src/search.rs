//! Derivative-free maximization of trace quotients over family parameters.
//!
//! Every family is parameterized through an affine map
//! B = e^ℓ · diag(e^λ, e^{−λ}) · R(θ) acting on the first two coordinates, so the
//! scale and SL directions the quotients are invariant under stay explicit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::affine::poisson_stack_split;
use crate::constants::{sharp_haddad_constant, theorem1_d, Params};
use crate::error::{Error, Result};
use crate::extension::{base_profile, ProfileOptions, RadialProfile, ZeroPolicy};
use crate::inequalities::{
    haddad_quotient, hls_bubble, power_family_stack, trace_quotient_nonpoisson, trace_quotient_poisson, ExtremalParams,
    QuotientReport, Resolution,
};
use crate::sampling::{sample, Field, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuotientKind {
    Poisson,
    Nonpoisson,
    Haddad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Gaussian,
    Bubble,
    HaddadExtremal,
    BandLimitedSeeded,
}

impl QuotientKind {
    pub const ALL: [QuotientKind; 3] = [QuotientKind::Poisson, QuotientKind::Nonpoisson, QuotientKind::Haddad];

    pub fn name(self) -> &'static str {
        match self {
            QuotientKind::Poisson => "poisson",
            QuotientKind::Nonpoisson => "nonpoisson",
            QuotientKind::Haddad => "haddad",
        }
    }

    /// Sharp constant the quotient is bounded by.
    pub fn reference(self, prm: &Params<f64>) -> Result<f64> {
        match self {
            QuotientKind::Poisson => theorem1_d(prm.n, prm.alpha),
            _ => sharp_haddad_constant(prm.n, prm.p, prm.a),
        }
    }
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 4] =
        [FamilyKind::Gaussian, FamilyKind::Bubble, FamilyKind::HaddadExtremal, FamilyKind::BandLimitedSeeded];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Gaussian => "gaussian",
            FamilyKind::Bubble => "bubble",
            FamilyKind::HaddadExtremal => "haddad-extremal",
            FamilyKind::BandLimitedSeeded => "band-limited-seeded",
        }
    }

    /// Number of free parameters.
    pub fn dim(self) -> usize {
        match self {
            FamilyKind::Gaussian | FamilyKind::Bubble => 3,
            FamilyKind::HaddadExtremal => 5,
            FamilyKind::BandLimitedSeeded => BAND_MODES,
        }
    }

    /// Box the search is projected onto.
    pub fn bounds(self) -> Vec<(f64, f64)> {
        let affine = vec![(-1.0, 1.0), (-1.0, 1.0), (-PI, PI)];
        match self {
            FamilyKind::Gaussian | FamilyKind::Bubble => affine,
            FamilyKind::HaddadExtremal => {
                let mut b = affine;
                b.extend([(2.0, 10.0), (-3.0, -0.75)]);
                b
            }
            FamilyKind::BandLimitedSeeded => vec![(-0.9, 0.9); BAND_MODES],
        }
    }

    /// Start point: a non-degenerate member away from the known optimum, except
    /// that the non-Poisson kind starts the power family at h_⋆ itself.
    pub fn default_init(self, kind: QuotientKind, prm: &Params<f64>) -> Vec<f64> {
        match self {
            FamilyKind::Gaussian | FamilyKind::Bubble => vec![0.0, 0.3, 0.2],
            FamilyKind::HaddadExtremal if kind == QuotientKind::Nonpoisson => vec![0.0, 0.0, 0.0, prm.p_prime, prm.q],
            FamilyKind::HaddadExtremal => vec![0.0, 0.2, 0.1, 0.85 * prm.p_prime, 1.1 * prm.q],
            FamilyKind::BandLimitedSeeded => (0..BAND_MODES).map(|k| if k % 2 == 0 { 0.3 } else { -0.2 }).collect(),
        }
    }
}

impl fmt::Display for QuotientKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QuotientKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        QuotientKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown quotient kind '{s}' (poisson, nonpoisson, haddad)")))
    }
}

impl FromStr for FamilyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FamilyKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            Error::Usage(format!("unknown family '{s}' (gaussian, bubble, haddad-extremal, band-limited-seeded)"))
        })
    }
}

const BAND_MODES: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchSpec {
    pub quotient_kind: QuotientKind,
    pub family_kind: FamilyKind,
    pub init: Vec<f64>,
    /// Total evaluations over all restarts.
    pub budget: usize,
    /// Simplex size below which a restart stops.
    pub tolerance: f64,
    pub seed: u64,
    pub restarts: usize,
    /// Resolution the search evaluates at.
    pub resolution: Resolution,
    /// Resolution the winner is re-evaluated at.
    pub refine: Resolution,
}

impl SearchSpec {
    /// Defaults for a kind/family pair: tolerance 1e−3, a resolution suited to
    /// the kind, and up to 5 restarts while each keeps 4(dim + 1) evaluations.
    pub fn new(quotient_kind: QuotientKind, family_kind: FamilyKind, prm: &Params<f64>, budget: usize, seed: u64) -> Self {
        let (resolution, refine) = default_resolutions(quotient_kind, family_kind);
        SearchSpec {
            quotient_kind,
            family_kind,
            init: family_kind.default_init(quotient_kind, prm),
            budget,
            tolerance: 1e-3,
            seed,
            restarts: (budget / (4 * (family_kind.dim() + 1))).clamp(1, 5),
            resolution,
            refine,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget < 50 {
            return Err(Error::Parameter(format!("search budget must be at least 50, got {}", self.budget)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Parameter(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.restarts == 0 {
            return Err(Error::Parameter("need at least one restart".into()));
        }
        if self.init.len() != self.family_kind.dim() {
            return Err(Error::Parameter(format!(
                "family {} takes {} parameters, got {}",
                self.family_kind,
                self.family_kind.dim(),
                self.init.len()
            )));
        }
        if self.init.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("non-finite initial parameter".into()));
        }
        Ok(())
    }
}

/// Poisson searches run at 64² and refine at 128²; the power-family boundary
/// slice needs 256² before its spectrum is resolved for the non-Poisson kernel.
pub fn default_resolutions(kind: QuotientKind, family: FamilyKind) -> (Resolution, Resolution) {
    let fine = Resolution::default();
    match (kind, family) {
        (QuotientKind::Poisson, _) => (Resolution { grid: 64, tnodes: 32, sphere_nodes: 256, ..fine }, fine),
        (QuotientKind::Nonpoisson, FamilyKind::HaddadExtremal) => {
            let r = nonpoisson_extremal_resolution(&fine);
            (r, r)
        }
        _ => (fine, fine),
    }
}

/// `res` with the spacing halved. At the default that is Δx = 1/8, where the
/// sampled h_⋆ spectrum is resolved out to Nyquist.
pub fn nonpoisson_extremal_resolution(res: &Resolution) -> Resolution {
    Resolution { grid: 2 * res.grid, ..*res }
}

/// One objective evaluation in a search log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub index: usize,
    pub restart: usize,
    pub params: Vec<f64>,
    /// None when the evaluation failed or was flagged low-confidence.
    pub quotient: Option<f64>,
    pub best_so_far: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub quotient_kind: QuotientKind,
    pub family_kind: FamilyKind,
    pub best_params: Vec<f64>,
    /// Best quotient seen at the search resolution.
    pub best_quotient: f64,
    pub reference: f64,
    /// Winner re-evaluated at the refinement resolution, with the difference
    /// to the half resolution in its budget.
    pub refined: QuotientReport<f64>,
    pub failures: usize,
    pub trace: Vec<Evaluation>,
}

impl SearchResult {
    /// reference − refined quotient.
    pub fn margin(&self) -> f64 {
        self.refined.margin
    }
}

/// Evaluates family members for one quotient kind.
pub struct Objective<'a> {
    prm: &'a Params<f64>,
    kind: QuotientKind,
    family: FamilyKind,
    seed: u64,
    base: Option<RadialProfile<f64>>,
}

impl<'a> Objective<'a> {
    pub fn new(prm: &'a Params<f64>, kind: QuotientKind, family: FamilyKind, seed: u64) -> Result<Self> {
        if prm.d < 2 {
            return Err(Error::Parameter("family search needs n ≥ 3".into()));
        }
        let base = match kind {
            QuotientKind::Nonpoisson => Some(base_profile(prm, &ProfileOptions::default())?),
            _ => None,
        };
        Ok(Objective { prm, kind, family, seed, base })
    }

    pub fn evaluate(&self, x: &[f64], res: &Resolution) -> Result<QuotientReport<f64>> {
        let prm = self.prm;
        let grid = res.make_grid::<f64>(prm.d)?;
        let ep = affine_params(x, prm.d);
        match (self.kind, self.family) {
            (QuotientKind::Haddad, FamilyKind::HaddadExtremal) => {
                let stack = power_family_stack(prm, &ep, x[3], x[4], res)?;
                let mut rep = haddad_quotient(&stack, prm, &res.sphere_rule(prm.d)?)?;
                rep.resolution = Some(*res);
                Ok(rep)
            }
            (QuotientKind::Haddad, _) => {
                let g = self.boundary(x, &grid)?;
                let stack = poisson_stack_split(&g, &res.make_tgrid(prm.a)?, prm.p)?;
                let mut rep = haddad_quotient(&stack, prm, &res.sphere_rule(prm.d)?)?;
                rep.resolution = Some(*res);
                Ok(rep)
            }
            (QuotientKind::Poisson, _) => trace_quotient_poisson(&self.boundary(x, &grid)?, prm, res),
            (QuotientKind::Nonpoisson, _) => {
                let base = self.base.as_ref().expect("profile built for the non-Poisson kind");
                trace_quotient_nonpoisson(&self.boundary(x, &grid)?, prm, base, res, ZeroPolicy::Pointwise)
            }
        }
    }

    /// Boundary datum of the family member.
    pub fn boundary(&self, x: &[f64], grid: &Grid<f64>) -> Result<Field<f64>> {
        let d = self.prm.d;
        let ep = affine_params(x, d);
        let radius2 = move |y: &[f64]| -> f64 {
            let z = apply(&ep, y, d);
            z.iter().map(|v| v * v).sum()
        };
        match self.family {
            FamilyKind::Gaussian => sample(move |y: &[f64]| (-PI * radius2(y)).exp(), grid),
            FamilyKind::Bubble => sample(hls_bubble(&ep, d, self.prm.alpha), grid),
            FamilyKind::HaddadExtremal => {
                let (s, e) = (x[3], x[4]);
                sample(move |y: &[f64]| (1.0 + radius2(y).sqrt().powf(s)).powf(e), grid)
            }
            FamilyKind::BandLimitedSeeded => {
                let modes = band_modes(self.seed, d);
                let amps = x.to_vec();
                sample(
                    move |y: &[f64]| {
                        let r2: f64 = y[..d].iter().map(|v| v * v).sum();
                        let s: f64 = modes
                            .iter()
                            .zip(&amps)
                            .map(|((k, ph), a)| a * (2.0 * PI * (0..d).map(|i| k[i] * y[i]).sum::<f64>() + ph).cos())
                            .sum();
                        (1.0 + s) * (-PI * r2 / 9.0).exp()
                    },
                    grid,
                )
            }
        }
    }
}

/// B = e^ℓ · diag(e^λ, e^{−λ}) · R(θ) from the leading parameters (identity for
/// the band-limited family).
fn affine_params(x: &[f64], d: usize) -> ExtremalParams<f64> {
    let mut ep = ExtremalParams::identity();
    if x.len() < 3 || d < 2 {
        return ep;
    }
    let (l, lam, th) = (x[0], x[1], x[2]);
    let s = l.exp();
    let (a, b) = (s * lam.exp(), s * (-lam).exp());
    let (co, si) = (th.cos(), th.sin());
    ep.b[0][0] = a * co;
    ep.b[0][1] = -a * si;
    ep.b[1][0] = b * si;
    ep.b[1][1] = b * co;
    if d == 3 {
        ep.b[2][2] = s;
    }
    ep
}

fn apply(ep: &ExtremalParams<f64>, x: &[f64], d: usize) -> [f64; 3] {
    let mut y = [0.0; 3];
    for (i, yi) in y.iter_mut().enumerate().take(d) {
        *yi = (0..d).map(|j| ep.b[i][j] * (x[j] - ep.x0[j])).sum();
    }
    y
}

fn band_modes(seed: u64, d: usize) -> Vec<([f64; 3], f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..BAND_MODES)
        .map(|_| {
            let mut k = [0.0; 3];
            for v in k.iter_mut().take(d) {
                *v = rng.gen_range(-0.6..0.6);
            }
            (k, rng.gen_range(0.0..2.0 * PI))
        })
        .collect()
}

/// Maximizes the spec's quotient over its family and re-evaluates the winner.
pub fn optimize_quotient(spec: &SearchSpec, prm: &Params<f64>) -> Result<SearchResult> {
    spec.validate()?;
    let obj = Objective::new(prm, spec.quotient_kind, spec.family_kind, spec.seed)?;
    let reference = spec.quotient_kind.reference(prm)?;
    let res = spec.resolution;
    let bounds = spec.family_kind.bounds();
    let mut last_err = None;
    let run = maximize(
        |x| match obj.evaluate(x, &res) {
            Ok(r) if !r.low_confidence && r.quotient.is_finite() => Some(r.quotient),
            Ok(_) => None,
            Err(e) => {
                last_err = Some(e);
                None
            }
        },
        &spec.init,
        &bounds,
        spec.budget,
        spec.restarts,
        spec.tolerance,
        spec.seed,
    );
    let Some((best_params, best_quotient)) = run.best else {
        let why = last_err.map(|e| e.to_string()).unwrap_or_else(|| "every report was low-confidence".into());
        return Err(Error::Search(format!("all {} evaluations degenerate; last: {why}", run.trace.len())));
    };
    let mut refined = obj.evaluate(&best_params, &spec.refine)?;
    let coarse = obj.evaluate(&best_params, &spec.refine.coarsened())?;
    if coarse.low_confidence {
        refined.notes.push("half-resolution report is low-confidence; no refinement budget added".into());
    } else {
        refined.add_refinement_budget(&coarse);
    }
    refined.check = format!("search-{}-{}", spec.quotient_kind, spec.family_kind);
    Ok(SearchResult {
        quotient_kind: spec.quotient_kind,
        family_kind: spec.family_kind,
        best_params,
        best_quotient,
        reference,
        refined,
        failures: run.failures,
        trace: run.trace,
    })
}

/// Outcome of [`maximize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Maximization {
    pub best: Option<(Vec<f64>, f64)>,
    pub failures: usize,
    pub trace: Vec<Evaluation>,
}

/// Nelder–Mead maximization inside a box. The budget is shared evenly between
/// restarts; the first starts at `init`, the others at seeded jitters of it.
/// `f` returns None for a failed evaluation, ranked below every value.
pub fn maximize<F>(
    mut f: F,
    init: &[f64],
    bounds: &[(f64, f64)],
    budget: usize,
    restarts: usize,
    tolerance: f64,
    seed: u64,
) -> Maximization
where
    F: FnMut(&[f64]) -> Option<f64>,
{
    let dim = init.len();
    let mut out = Maximization { best: None, failures: 0, trace: Vec::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per = (budget / restarts.max(1)).max(dim + 2);
    for restart in 0..restarts.max(1) {
        let start: Vec<f64> = if restart == 0 {
            project(init, bounds)
        } else {
            let x: Vec<f64> = init
                .iter()
                .zip(bounds)
                .map(|(&v, &(lo, hi))| v + 0.15 * (hi - lo) * rng.gen_range(-1.0..1.0))
                .collect();
            project(&x, bounds)
        };
        let mut eval = |x: &[f64], out: &mut Maximization| -> f64 {
            let v = f(x);
            if v.is_none() {
                out.failures += 1;
            }
            if let Some(q) = v {
                if out.best.as_ref().is_none_or(|(_, b)| q > *b) {
                    out.best = Some((x.to_vec(), q));
                }
            }
            let best_so_far = out.best.as_ref().map_or(f64::NEG_INFINITY, |(_, b)| *b);
            out.trace.push(Evaluation { index: out.trace.len(), restart, params: x.to_vec(), quotient: v, best_so_far });
            v.unwrap_or(f64::NEG_INFINITY)
        };
        let mut used = 0usize;
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
        for k in 0..=dim {
            let mut x = start.clone();
            if k > 0 {
                let (lo, hi) = bounds[k - 1];
                let step = 0.1 * (hi - lo);
                x[k - 1] = if x[k - 1] + step <= hi { x[k - 1] + step } else { x[k - 1] - step };
            }
            let v = eval(&x, &mut out);
            used += 1;
            simplex.push((x, v));
        }
        while used < per {
            order(&mut simplex);
            if size(&simplex) < tolerance {
                break;
            }
            let worst = simplex[dim].clone();
            let centroid: Vec<f64> =
                (0..dim).map(|i| simplex[..dim].iter().map(|(x, _)| x[i]).sum::<f64>() / dim as f64).collect();
            let along = |t: f64| -> Vec<f64> {
                let x: Vec<f64> = centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect();
                project(&x, bounds)
            };
            let xr = along(1.0);
            let vr = eval(&xr, &mut out);
            used += 1;
            if vr > simplex[0].1 && used < per {
                let xe = along(2.0);
                let ve = eval(&xe, &mut out);
                used += 1;
                simplex[dim] = if ve > vr { (xe, ve) } else { (xr, vr) };
            } else if vr > simplex[dim - 1].1 {
                simplex[dim] = (xr, vr);
            } else if used < per {
                let t = if vr > worst.1 { 0.5 } else { -0.5 };
                let xc = along(t);
                let vc = eval(&xc, &mut out);
                used += 1;
                if vc > worst.1.max(vr) {
                    simplex[dim] = (xc, vc);
                } else {
                    let best = simplex[0].0.clone();
                    for vertex in simplex.iter_mut().skip(1) {
                        if used >= per {
                            break;
                        }
                        let x: Vec<f64> = best.iter().zip(&vertex.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
                        let v = eval(&x, &mut out);
                        used += 1;
                        *vertex = (x, v);
                    }
                }
            }
        }
    }
    out
}

fn project(x: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    x.iter().zip(bounds).map(|(&v, &(lo, hi))| v.clamp(lo, hi)).collect()
}

/// Best first; equal values ordered lexicographically by parameters.
fn order(simplex: &mut [(Vec<f64>, f64)]) {
    simplex.sort_by(|a, b| {
        b.1.total_cmp(&a.1).then_with(|| {
            a.0.iter().zip(&b.0).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        })
    });
}

fn size(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let best = &simplex[0].0;
    simplex[1..]
        .iter()
        .map(|(x, _)| x.iter().zip(best).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Best quotient per kind against its reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharpnessEntry {
    pub quotient_kind: QuotientKind,
    pub family_kind: FamilyKind,
    pub best_quotient: f64,
    pub reference: f64,
    pub ratio: f64,
    pub tail_budget: f64,
    /// Quotient above reference · (1 + tail_budget).
    pub alarm: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SharpnessReport {
    pub entries: Vec<SharpnessEntry>,
    pub alarms: Vec<String>,
}

/// Keeps the best refined quotient per kind and flags any that exceeds its
/// reference beyond the reported error budget.
pub fn sharpness_report(results: &[SearchResult]) -> SharpnessReport {
    let mut report = SharpnessReport::default();
    for kind in QuotientKind::ALL {
        let best = results
            .iter()
            .filter(|r| r.quotient_kind == kind)
            .max_by(|a, b| a.refined.quotient.total_cmp(&b.refined.quotient).then(b.family_kind.cmp(&a.family_kind)));
        let Some(r) = best else { continue };
        let q = r.refined.quotient;
        let budget = r.refined.tail_budget;
        let alarm = q > r.reference * (1.0 + budget);
        if alarm {
            report.alarms.push(format!(
                "{kind} over {}: quotient {q} exceeds {} beyond budget {budget:e}",
                r.family_kind, r.reference
            ));
        }
        report.entries.push(SharpnessEntry {
            quotient_kind: kind,
            family_kind: r.family_kind,
            best_quotient: q,
            reference: r.reference,
            ratio: q / r.reference,
            tail_budget: budget,
            alarm,
        });
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximizes_a_concave_quadratic() {
        let f = |x: &[f64]| Some(1.0 - (x[0] - 0.3).powi(2) - 2.0 * (x[1] + 0.2).powi(2));
        let m = maximize(f, &[0.0, 0.0], &[(-1.0, 1.0), (-1.0, 1.0)], 200, 2, 1e-6, 3);
        let (x, v) = m.best.unwrap();
        assert!((x[0] - 0.3).abs() < 1e-3 && (x[1] + 0.2).abs() < 1e-3, "{x:?}");
        assert!((v - 1.0).abs() < 1e-6);
        assert!(m.trace.len() <= 200);
    }

    #[test]
    fn best_so_far_is_monotone_and_failures_counted() {
        let f = |x: &[f64]| if x[0] > 0.5 { None } else { Some(-(x[0] - 0.4).abs()) };
        let m = maximize(f, &[0.0], &[(-1.0, 1.0)], 60, 3, 1e-9, 11);
        assert!(m.failures > 0);
        let mut last = f64::NEG_INFINITY;
        for e in &m.trace {
            assert!(e.best_so_far >= last);
            last = e.best_so_far;
        }
    }

    #[test]
    fn stays_in_bounds() {
        let m = maximize(|x: &[f64]| Some(x[0] + x[1]), &[0.0, 0.0], &[(-1.0, 0.5), (-1.0, 0.25)], 80, 1, 1e-9, 0);
        for e in &m.trace {
            assert!(e.params[0] <= 0.5 && e.params[1] <= 0.25);
        }
        let (x, _) = m.best.unwrap();
        assert!((x[0] - 0.5).abs() < 1e-6 && (x[1] - 0.25).abs() < 1e-6);
    }

    #[test]
    fn parses_kinds() {
        assert_eq!("nonpoisson".parse::<QuotientKind>().unwrap(), QuotientKind::Nonpoisson);
        assert_eq!("band-limited-seeded".parse::<FamilyKind>().unwrap(), FamilyKind::BandLimitedSeeded);
        assert!("nope".parse::<FamilyKind>().is_err());
    }

    #[test]
    fn empty_sharpness_report() {
        let r = sharpness_report(&[]);
        assert!(r.entries.is_empty() && r.alarms.is_empty());
    }

    #[test]
    fn affine_map_has_expected_determinant() {
        let ep = affine_params(&[0.4, 0.7, 1.1], 2);
        assert!((ep.det(2) - (0.8f64).exp()).abs() < 1e-12);
    }
}
