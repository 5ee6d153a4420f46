//! Periodic grids, discrete inner products and the Fourier pseudo-spectral
//! Laplacian.
//!
//! State layout contract used across the crate: a state with `m` components
//! on a grid with `n` nodes is a flat `Vec<f64>` of length `m * n`, component
//! after component. Inside a component, 2D data is row-major with the x index
//! varying slowest, i.e. node `(ix, iy)` lives at `ix * ny + iy`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// One periodic direction of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub h: f64,
    wavenumbers: Vec<f64>,
}

impl Axis {
    fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "node count must be even and at least 4, got {n}"
            )));
        }
        if !(a.is_finite() && b.is_finite()) || b <= a {
            return Err(Error::InvalidDomain(format!(
                "need finite bounds with b > a, got [{a}, {b}]"
            )));
        }
        let len = b - a;
        let wavenumbers = (0..n)
            .map(|j| {
                let mu = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                2.0 * PI * mu / len
            })
            .collect();
        Ok(Axis {
            a,
            b,
            n,
            h: len / n as f64,
            wavenumbers,
        })
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    /// Node `x_j = a + j h`, `j = 0..n` (the right endpoint is identified with `a`).
    pub fn node(&self, j: usize) -> f64 {
        self.a + j as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Wavenumbers in FFT order: `2π μ_j / (b − a)` with `μ_j = j` up to
    /// `n/2` and `j − n` above.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }
}

/// Uniform periodic mesh in one or two dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
}

/// Builds a grid from per-dimension bounds `(a, b)` and node counts.
pub fn make_grid(bounds: &[(f64, f64)], counts: &[usize]) -> Result<Grid> {
    Grid::new(bounds, counts)
}

impl Grid {
    pub fn new(bounds: &[(f64, f64)], counts: &[usize]) -> Result<Self> {
        if bounds.len() != counts.len() {
            return Err(Error::InvalidGrid(format!(
                "{} bounds given for {} node counts",
                bounds.len(),
                counts.len()
            )));
        }
        if !(1..=2).contains(&bounds.len()) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {}",
                bounds.len()
            )));
        }
        let axes = bounds
            .iter()
            .zip(counts)
            .map(|(&(a, b), &n)| Axis::new(a, b, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Grid { axes })
    }

    pub fn line(a: f64, b: f64, n: usize) -> Result<Self> {
        Grid::new(&[(a, b)], &[n])
    }

    pub fn rectangle(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        Grid::new(&[x, y], &[nx, ny])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, d: usize) -> &Axis {
        &self.axes[d]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|ax| ax.n).collect()
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|ax| ax.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight of one node: `h` in 1D, `h_x h_y` in 2D.
    pub fn cell_measure(&self) -> f64 {
        self.axes.iter().map(|ax| ax.h).product()
    }

    /// `|Ω|`, the length or area of the periodic domain.
    pub fn domain_measure(&self) -> f64 {
        self.axes.iter().map(Axis::length).product()
    }

    /// Physical coordinates of the node with flat index `j`.
    pub fn coords(&self, j: usize) -> [f64; 2] {
        match self.axes.as_slice() {
            [x] => [x.node(j), 0.0],
            [x, y] => [x.node(j / y.n), y.node(j % y.n)],
            _ => unreachable!("grid dimension is validated at construction"),
        }
    }

    /// `|k|²` for the mode with flat FFT index `j`.
    pub fn wavenumber_sq(&self, j: usize) -> f64 {
        match self.axes.as_slice() {
            [x] => x.wavenumbers[j].powi(2),
            [x, y] => x.wavenumbers[j / y.n].powi(2) + y.wavenumbers[j % y.n].powi(2),
            _ => unreachable!("grid dimension is validated at construction"),
        }
    }

    /// Samples `f(x, y)` at every node (`y = 0` in 1D).
    pub fn sample<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len())
            .map(|j| {
                let [x, y] = self.coords(j);
                f(x, y)
            })
            .collect()
    }

    /// `⟨u, v⟩_h` on raw node values.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        weighted_dot(self.cell_measure(), u, v)
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }
}

/// `weight * Σ u_j v_j`.
pub fn weighted_dot(weight: f64, u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    weight * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
}

/// Real samples on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::IncompatibleFields(format!(
                "{} values for a grid with {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::IncompatibleFields(format!(
                "non-finite value at node {j}"
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: Arc<Grid>, f: F) -> Result<Self> {
        let values = grid.sample(f);
        Field::new(grid, values)
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Field {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    fn check_same_grid(&self, other: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::IncompatibleFields(
                "fields live on different grids".into(),
            ))
        }
    }
}

/// `⟨U, V⟩_h = h Σ U_j V_j` (product of spacings in 2D).
pub fn inner_h(u: &Field, v: &Field) -> Result<f64> {
    u.check_same_grid(v)?;
    Ok(u.grid.inner(&u.values, &v.values))
}

pub fn norm_h(u: &Field) -> f64 {
    u.grid.norm(&u.values)
}

/// Spectral Laplacian of a field. Builds FFT plans on every call; hot loops
/// should hold a [`Laplacian`] instead.
pub fn laplacian(u: &Field) -> Field {
    let lap = Laplacian::new(&u.grid);
    let mut out = vec![0.0; u.values.len()];
    lap.apply(&u.values, &mut out);
    Field {
        grid: Arc::clone(&u.grid),
        values: out,
    }
}

/// Discrete Fourier transform over the whole grid, in place, unnormalized in
/// both directions (so `inverse(forward(x)) = N x`).
pub trait Transform: Send + Sync {
    fn forward(&self, data: &mut [Complex64]);
    fn inverse(&self, data: &mut [Complex64]);
}

/// [`Transform`] backed by `rustfft`, separable over the grid axes.
pub struct FftTransform {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl FftTransform {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let shape = grid.shape();
        let forward = shape.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        FftTransform {
            shape,
            forward,
            inverse,
        }
    }

    fn run(&self, plans: &[Arc<dyn Fft<f64>>], data: &mut [Complex64]) {
        match self.shape.as_slice() {
            [_] => plans[0].process(data),
            &[nx, ny] => {
                // rows are contiguous; columns go through a transpose
                plans[1].process(data);
                let mut t = transpose(data, nx, ny);
                plans[0].process(&mut t);
                let back = transpose(&t, ny, nx);
                data.copy_from_slice(&back);
            }
            _ => unreachable!("grid dimension is validated at construction"),
        }
    }
}

fn transpose(data: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}

impl Transform for FftTransform {
    fn forward(&self, data: &mut [Complex64]) {
        self.run(&self.forward, data);
    }

    fn inverse(&self, data: &mut [Complex64]) {
        self.run(&self.inverse, data);
    }
}

impl fmt::Debug for FftTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FftTransform")
            .field("shape", &self.shape)
            .finish()
    }
}

/// Fourier pseudo-spectral Laplacian `Δ_h` on a periodic grid.
///
/// Applied as forward DFT, multiplication of mode `j` by `−|k_j|²`, inverse
/// DFT. The multiplier is real and even in `k`, so `Δ_h` maps real data to
/// real data and is self-adjoint and negative semidefinite under `⟨·,·⟩_h`.
pub struct Laplacian {
    grid: Grid,
    // −|k|² / N_total, normalization folded in
    symbol: Vec<f64>,
    transform: Box<dyn Transform>,
}

impl Laplacian {
    pub fn new(grid: &Grid) -> Self {
        Self::with_transform(grid, Box::new(FftTransform::new(grid)))
    }

    pub fn with_transform(grid: &Grid, transform: Box<dyn Transform>) -> Self {
        let total = grid.len() as f64;
        let symbol = (0..grid.len())
            .map(|j| -grid.wavenumber_sq(j) / total)
            .collect();
        Laplacian {
            grid: grid.clone(),
            symbol,
            transform,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `out = Δ_h u`.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let mut buf: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.apply_complex(&mut buf);
        for (o, z) in out.iter_mut().zip(&buf) {
            *o = z.re;
        }
    }

    /// Applies `Δ_h` to two real fields with one complex transform, using
    /// `Δ_h(a + i b) = Δ_h a + i Δ_h b`.
    pub fn apply_pair(&self, a: &[f64], b: &[f64], out_a: &mut [f64], out_b: &mut [f64]) {
        let mut buf: Vec<Complex64> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| Complex64::new(x, y))
            .collect();
        self.apply_complex(&mut buf);
        for ((oa, ob), z) in out_a.iter_mut().zip(out_b.iter_mut()).zip(&buf) {
            *oa = z.re;
            *ob = z.im;
        }
    }

    /// In-place Laplacian of complex nodal data.
    pub fn apply_complex(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.symbol.len(), "field length does not match grid");
        self.transform.forward(buf);
        for (z, s) in buf.iter_mut().zip(&self.symbol) {
            *z *= *s;
        }
        self.transform.inverse(buf);
    }

    /// `⟨u, −Δ_h u⟩_h`, evaluated in Fourier space (Parseval).
    pub fn dirichlet_form(&self, u: &[f64]) -> f64 {
        let mut buf: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.transform.forward(&mut buf);
        let sum: f64 = buf
            .iter()
            .zip(&self.symbol)
            .map(|(z, s)| -s * z.norm_sqr())
            .sum();
        // the 1/N of Parseval is already in the symbol
        self.grid.cell_measure() * sum
    }
}

impl fmt::Debug for Laplacian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Laplacian").field("grid", &self.grid).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn grid_on_zero_two_pi() {
        let g = make_grid(&[(0.0, 2.0 * PI)], &[4]).unwrap();
        assert!((g.axis(0).h - PI / 2.0).abs() < 1e-15);
        let nodes = g.axis(0).nodes();
        let expect = [0.0, PI / 2.0, PI, 1.5 * PI];
        for (a, b) in nodes.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(g.axis(0).wavenumbers(), &[0.0, 1.0, 2.0, -1.0]);
    }

    #[test]
    fn grid_soliton_spacing() {
        let g = make_grid(&[(-40.0, 40.0)], &[800]).unwrap();
        assert!((g.axis(0).h - 0.1).abs() < 1e-15);
    }

    #[test]
    fn grid_2d_plane_wave() {
        let g = make_grid(&[(0.0, 2.0 * PI), (0.0, 2.0 * PI)], &[16, 16]).unwrap();
        assert_eq!(g.len(), 256);
        assert!((g.axis(0).h - PI / 8.0).abs() < 1e-15);
        assert!((g.axis(1).h - PI / 8.0).abs() < 1e-15);
        assert!((g.cell_measure() - (PI / 8.0).powi(2)).abs() < 1e-15);
        assert_eq!(g.coords(17), [PI / 8.0, PI / 8.0]);
    }

    #[test]
    fn grid_errors() {
        assert!(matches!(Grid::line(0.0, 1.0, 7), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid::line(0.0, 1.0, 2), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid::line(0.0, 1.0, 0), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid::line(1.0, 1.0, 8), Err(Error::InvalidDomain(_))));
        assert!(matches!(Grid::line(2.0, 1.0, 8), Err(Error::InvalidDomain(_))));
        assert!(Grid::new(&[(0.0, 1.0); 3], &[4; 3]).is_err());
    }

    #[test]
    fn inner_products() {
        let g = Arc::new(Grid::line(0.0, 1.0, 10).unwrap());
        let ones = Field::new(g.clone(), vec![1.0; 10]).unwrap();
        assert!((inner_h(&ones, &ones).unwrap() - 1.0).abs() < 1e-15);
        let zero = Field::zeros(g.clone());
        assert_eq!(inner_h(&zero, &ones).unwrap(), 0.0);

        let g8 = Arc::new(Grid::line(-1.0, 3.0, 8).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_vec(&mut rng, 8);
        let v = random_vec(&mut rng, 8);
        let mut direct = 0.0;
        for j in 0..8 {
            direct += u[j] * v[j];
        }
        direct *= 0.5;
        let fu = Field::new(g8.clone(), u).unwrap();
        let fv = Field::new(g8, v).unwrap();
        assert!((inner_h(&fu, &fv).unwrap() - direct).abs() < 1e-15);
        assert!(matches!(
            inner_h(&fu, &ones),
            Err(Error::IncompatibleFields(_))
        ));
    }

    #[test]
    fn field_rejects_bad_values() {
        let g = Arc::new(Grid::line(0.0, 1.0, 4).unwrap());
        assert!(Field::new(g.clone(), vec![0.0; 5]).is_err());
        assert!(Field::new(g, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn laplacian_of_constant_and_sine() {
        let g = Arc::new(Grid::line(0.0, 2.0 * PI, 16).unwrap());
        let c = Field::new(g.clone(), vec![3.5; 16]).unwrap();
        assert!(laplacian(&c).values().iter().all(|v| v.abs() < 1e-13));
        let s = Field::from_fn(g, |x, _| x.sin()).unwrap();
        let ls = laplacian(&s);
        for (a, b) in ls.values().iter().zip(s.values()) {
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_pair_matches_separate_calls() {
        let g = Grid::rectangle((0.0, 3.0), (-1.0, 1.0), 8, 6).unwrap();
        let lap = Laplacian::new(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_vec(&mut rng, g.len());
        let b = random_vec(&mut rng, g.len());
        let (mut la, mut lb) = (vec![0.0; g.len()], vec![0.0; g.len()]);
        lap.apply(&a, &mut la);
        lap.apply(&b, &mut lb);
        let (mut pa, mut pb) = (vec![0.0; g.len()], vec![0.0; g.len()]);
        lap.apply_pair(&a, &b, &mut pa, &mut pb);
        for j in 0..g.len() {
            assert!((la[j] - pa[j]).abs() < 1e-12);
            assert!((lb[j] - pb[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_form_matches_inner_product() {
        let g = Grid::rectangle((0.0, 2.0), (0.0, 5.0), 10, 12).unwrap();
        let lap = Laplacian::new(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_vec(&mut rng, g.len());
        let mut lu = vec![0.0; g.len()];
        lap.apply(&u, &mut lu);
        let direct = -g.inner(&u, &lu);
        assert!((lap.dirichlet_form(&u) - direct).abs() < 1e-12 * direct.abs().max(1.0));
    }
}
