//! Uniform boundary grids, weighted half-line quadrature and sampled fields.

use std::io::Write;

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_jacobi, gauss_legendre};
use crate::real::{c, Real};

/// Uniform grid on the box [−R, R)^d with N points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid<T> {
    pub d: usize,
    pub half_extent: T,
    pub n: usize,
    pub dx: T,
}

pub fn make_grid<T: Real>(d: usize, half_extent: T, n: usize) -> Result<Grid<T>> {
    if !(1..=3).contains(&d) {
        return Err(Error::Parameter(format!("grid dimension must be 1, 2 or 3, got {d}")));
    }
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::Parameter(format!("points per axis must be a power of two >= 8, got {n}")));
    }
    if !(half_extent > T::zero()) || !half_extent.is_finite() {
        return Err(Error::Parameter(format!("half extent must be positive, got {half_extent}")));
    }
    Ok(Grid { d, half_extent, n, dx: c::<T>(2.0) * half_extent / T::from_usize_(n) })
}

impl<T: Real> Grid<T> {
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Frequency spacing 1/(2R).
    pub fn dxi(&self) -> T {
        (c::<T>(2.0) * self.half_extent).recip()
    }

    pub fn cell_volume(&self) -> T {
        self.dx.powi(self.d as i32)
    }

    pub fn freq_cell_volume(&self) -> T {
        self.dxi().powi(self.d as i32)
    }

    /// Physical coordinate of axis index j.
    #[inline]
    pub fn coord(&self, j: usize) -> T {
        -self.half_extent + T::from_usize_(j) * self.dx
    }

    /// Signed integer frequency of axis index k in FFT order.
    #[inline]
    pub fn signed_index(&self, k: usize) -> isize {
        if k < self.n / 2 {
            k as isize
        } else {
            k as isize - self.n as isize
        }
    }

    #[inline]
    pub fn freq(&self, k: usize) -> T {
        let s = self.signed_index(k);
        let v = T::from_usize_(s.unsigned_abs()) * self.dxi();
        if s < 0 {
            -v
        } else {
            v
        }
    }

    #[inline]
    pub fn multi_index(&self, i: usize) -> [usize; 3] {
        let n = self.n;
        match self.d {
            1 => [i, 0, 0],
            2 => [i / n, i % n, 0],
            _ => [i / (n * n), (i / n) % n, i % n],
        }
    }

    /// Physical point of flat index i (unused trailing components are zero).
    #[inline]
    pub fn point(&self, i: usize) -> [T; 3] {
        let m = self.multi_index(i);
        let mut x = [T::zero(); 3];
        for (a, xa) in x.iter_mut().enumerate().take(self.d) {
            *xa = self.coord(m[a]);
        }
        x
    }

    #[inline]
    pub fn freq_point(&self, i: usize) -> [T; 3] {
        let m = self.multi_index(i);
        let mut x = [T::zero(); 3];
        for (a, xa) in x.iter_mut().enumerate().take(self.d) {
            *xa = self.freq(m[a]);
        }
        x
    }

    #[inline]
    pub fn freq_norm(&self, i: usize) -> T {
        let x = self.freq_point(i);
        (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
    }

    /// Squared integer frequency |k|² of flat index i.
    #[inline]
    pub fn freq_index_norm2(&self, i: usize) -> usize {
        let m = self.multi_index(i);
        (0..self.d)
            .map(|a| {
                let s = self.signed_index(m[a]);
                (s * s) as usize
            })
            .sum()
    }

    /// True if some axis of flat index i sits within one mode of Nyquist.
    pub fn on_nyquist_shell(&self, i: usize) -> bool {
        let m = self.multi_index(i);
        let edge = (self.n / 2) as i64 - 1;
        (0..self.d).any(|a| (self.signed_index(m[a]) as i64).abs() >= edge)
    }

    pub fn same_as(&self, other: &Grid<T>) -> bool {
        self.d == other.d && self.n == other.n && self.half_extent == other.half_extent
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Physical,
    Frequency,
}

/// Complex samples on a grid, physical or frequency side.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    pub grid: Grid<T>,
    pub values: Vec<Complex<T>>,
    pub side: Side,
}

impl<T: Real> Field<T> {
    pub fn new(grid: Grid<T>, values: Vec<Complex<T>>, side: Side) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Usage(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        Ok(Field { grid, values, side })
    }

    pub fn zeros(grid: Grid<T>, side: Side) -> Self {
        Field { grid, values: vec![Complex::new(T::zero(), T::zero()); grid.len()], side }
    }

    /// Measure of one cell on this side (Δx^d or Δξ^d).
    pub fn cell(&self) -> T {
        match self.side {
            Side::Physical => self.grid.cell_volume(),
            Side::Frequency => self.grid.freq_cell_volume(),
        }
    }

    pub fn l2_norm(&self) -> T {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<T>() * self.cell()).sqrt()
    }

    pub fn lp_norm(&self, r: T) -> T {
        (self.values.iter().map(|v| v.norm().powf(r)).sum::<T>() * self.cell()).powf(r.recip())
    }

    pub fn scaled(&self, s: T) -> Self {
        Field { grid: self.grid, values: self.values.iter().map(|v| v * s).collect(), side: self.side }
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().map(|v| v.norm()).fold(T::zero(), T::max)
    }

    /// Writes `x1,...,xd,re,im` rows (coordinates are frequencies on the frequency side).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Io(e.to_string());
        let header: Vec<String> = (1..=self.grid.d).map(|a| format!("x{a}")).collect();
        writeln!(out, "{},re,im", header.join(",")).map_err(io)?;
        for (i, v) in self.values.iter().enumerate() {
            let x = match self.side {
                Side::Physical => self.grid.point(i),
                Side::Frequency => self.grid.freq_point(i),
            };
            let coords: Vec<String> = x[..self.grid.d].iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{},{:e},{:e}", coords.join(","), v.re, v.im).map_err(io)?;
        }
        Ok(())
    }
}

/// Samples a real boundary function.
pub fn sample<T: Real, F>(f: F, grid: &Grid<T>) -> Result<Field<T>>
where
    F: Fn(&[T]) -> T,
{
    sample_complex(|x| Complex::new(f(x), T::zero()), grid)
}

pub fn sample_complex<T: Real, F>(f: F, grid: &Grid<T>) -> Result<Field<T>>
where
    F: Fn(&[T]) -> Complex<T>,
{
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let x = grid.point(i);
        let v = f(&x[..grid.d]);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Evaluation {
                node: x[..grid.d].iter().map(|v| v.as_f64()).collect(),
                msg: "non-finite sample".into(),
            });
        }
        values.push(v);
    }
    Ok(Field { grid: *grid, values, side: Side::Physical })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Grading {
    /// Panels [T r^{k+1}, T r^k] with r = 1/2 and a weighted innermost panel.
    Geometric,
    /// Uniform panels with a weighted first panel.
    GaussComposite,
}

/// Quadrature for ∫₀^{T_max} φ(t) t^a dt.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TGrid<T> {
    pub a: T,
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
    pub t_max: T,
    pub grading: Grading,
}

const PANEL_ORDER: usize = 8;
const MAX_GEOMETRIC_PANELS: usize = 8;

pub fn make_tgrid<T: Real>(a: T, t_max: T, k: usize, grading: Grading) -> Result<TGrid<T>> {
    if !(a >= T::zero()) || !a.is_finite() {
        return Err(Error::Parameter(format!("weight exponent must be >= 0, got {a}")));
    }
    if !(t_max > T::zero()) || !t_max.is_finite() {
        return Err(Error::Parameter(format!("T_max must be positive, got {t_max}")));
    }
    if k < 8 {
        return Err(Error::Parameter(format!("need at least 8 t-nodes, got {k}")));
    }
    let panels = match grading {
        Grading::Geometric => (k / PANEL_ORDER).clamp(1, MAX_GEOMETRIC_PANELS),
        Grading::GaussComposite => k / PANEL_ORDER,
    };
    let base = k / panels;
    let extra = k - base * panels;
    // Panel edges, innermost first.
    let mut edges = Vec::with_capacity(panels + 1);
    edges.push(T::zero());
    match grading {
        Grading::Geometric => {
            for j in (0..panels).rev() {
                edges.push(t_max * c::<T>(0.5).powi(j as i32));
            }
        }
        Grading::GaussComposite => {
            for j in 1..=panels {
                edges.push(t_max * T::from_usize_(j) / T::from_usize_(panels));
            }
        }
    }
    let mut nodes = Vec::with_capacity(k);
    let mut weights = Vec::with_capacity(k);
    let half = c::<T>(0.5);
    for p in 0..panels {
        let (lo, hi) = (edges[p], edges[p + 1]);
        let h = hi - lo;
        if p == 0 {
            let m = base + extra;
            let (x, w) = gauss_jacobi(m, T::zero(), a);
            let scale = (h * half).powf(a + T::one());
            for (xi, wi) in x.into_iter().zip(w) {
                nodes.push(h * half * (xi + T::one()));
                weights.push(wi * scale);
            }
        } else {
            let (x, w) = gauss_legendre::<T>(base);
            for (xi, wi) in x.into_iter().zip(w) {
                let t = lo + h * half * (xi + T::one());
                nodes.push(t);
                weights.push(wi * h * half * if a == T::zero() { T::one() } else { t.powf(a) });
            }
        }
    }
    Ok(TGrid { a, nodes, weights, t_max, grading })
}

impl<T: Real> TGrid<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(T) -> T>(&self, f: F) -> T {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }
}

/// A stack of boundary fields, one per t-node.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpaceField<T> {
    pub tgrid: TGrid<T>,
    pub slices: Vec<Field<T>>,
}

impl<T: Real> HalfSpaceField<T> {
    pub fn new(tgrid: TGrid<T>, slices: Vec<Field<T>>) -> Result<Self> {
        if slices.len() != tgrid.len() {
            return Err(Error::Usage(format!("{} slices for {} t-nodes", slices.len(), tgrid.len())));
        }
        if let Some(first) = slices.first() {
            if slices.iter().any(|s| !s.grid.same_as(&first.grid)) {
                return Err(Error::Usage("slices live on different grids".into()));
            }
        }
        Ok(HalfSpaceField { tgrid, slices })
    }

    pub fn grid(&self) -> Grid<T> {
        self.slices[0].grid
    }

    pub fn scaled(&self, s: T) -> Self {
        HalfSpaceField { tgrid: self.tgrid.clone(), slices: self.slices.iter().map(|f| f.scaled(s)).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_examples() {
        let g = make_grid(2, 16.0, 128).unwrap();
        assert_eq!(g.dx, 0.25);
        assert!(make_grid(2, 16.0f64, 7).is_err());
        assert!(make_grid(2, 0.0f64, 64).is_err());
        assert!(make_grid(4, 1.0f64, 64).is_err());
        let g = make_grid(1, 8.0, 64).unwrap();
        assert_eq!(g.dxi(), 1.0 / 16.0);
        assert_eq!(g.coord(0), -8.0);
        assert_eq!(g.freq(63), -1.0 / 16.0);
    }

    #[test]
    fn tgrid_examples() {
        let tg = make_tgrid(0.0f64, 10.0, 64, Grading::Geometric).unwrap();
        assert!((tg.integrate(|_| 1.0) - 10.0).abs() < 1e-8);
        let want = (1.0 - (-40.0 * std::f64::consts::PI).exp()) / (4.0 * std::f64::consts::PI);
        assert!((tg.integrate(|t| (-4.0 * std::f64::consts::PI * t).exp()) - want).abs() < 1e-6);
        let tg = make_tgrid(0.5f64, 1.0, 32, Grading::GaussComposite).unwrap();
        assert!((tg.integrate(|_| 1.0) - 2.0 / 3.0).abs() < 1e-8);
        assert!(make_tgrid(0.0, 1.0f64, 4, Grading::Geometric).is_err());
    }

    #[test]
    fn tgrid_structure() {
        for grading in [Grading::Geometric, Grading::GaussComposite] {
            for k in [8, 20, 64, 128] {
                let tg = make_tgrid(0.5, 32.0, k, grading).unwrap();
                assert_eq!(tg.len(), k);
                assert!(tg.weights.iter().all(|&w| w > 0.0));
                assert!(tg.nodes.windows(2).all(|w| w[0] < w[1]));
                assert!(tg.nodes.iter().all(|&t| t > 0.0 && t <= 32.0));
                let want = 32f64.powf(1.5) / 1.5;
                assert!((tg.integrate(|_| 1.0) / want - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn sample_reports_nonfinite_node() {
        let g = make_grid(1, 1.0, 8).unwrap();
        match sample(|x: &[f64]| 1.0 / x[0], &g) {
            Err(Error::Evaluation { node, .. }) => assert_eq!(node, vec![0.0]),
            other => panic!("expected evaluation error, got {other:?}"),
        }
    }

    #[test]
    fn gaussian_samples_even() {
        let g = make_grid(2, 16.0, 128).unwrap();
        let f = sample(|x: &[f64]| (-(x[0] * x[0] + x[1] * x[1])).exp(), &g).unwrap();
        // x_j and x_{N−j} are mirror images for j ≥ 1.
        for i in 1..128 {
            for j in 1..128 {
                let a = f.values[i * 128 + j].re;
                let b = f.values[(128 - i) * 128 + (128 - j)].re;
                assert_eq!(a, b);
            }
        }
    }
}
