//! Periodic rectangular charts and the field data that lives on them.
//!
//! A chart of complex dimension `d` is discretized as the flat torus
//! `[0, L)^{2d}` with `N` samples per axis, so spectral differentiation is
//! exact for band-limited data. Grid data is stored flat in C order: axis 1
//! is the slowest index, axis `2d` the fastest.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChartError {
    #[error("complex dimension must be at least 1")]
    ZeroDimension,
    #[error("samples per axis must be a power of two >= 4, got {0}")]
    BadSampleCount(usize),
    #[error("period must be positive and finite, got {0}")]
    BadPeriod(f64),
    #[error("axis {axis} out of range 1..={dims}")]
    AxisOutOfRange { axis: usize, dims: usize },
    #[error("complex axis {axis} out of range 1..={d}")]
    ComplexAxisOutOfRange { axis: usize, d: usize },
    #[error("field length {got} does not match chart size {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),
    #[error("operands live on different charts")]
    ChartMismatch,
    #[error("tensor has {got} components, rank ({contra},{cov}) on D={dims} needs {want}")]
    ComponentCount {
        got: usize,
        want: usize,
        contra: usize,
        cov: usize,
        dims: usize,
    },
}

/// Uniform periodic grid over `[0, L)^{2d}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridChart {
    d: usize,
    n: usize,
    l: f64,
}

impl GridChart {
    pub fn new(d: usize, n: usize, l: f64) -> Result<Self, ChartError> {
        if d == 0 {
            return Err(ChartError::ZeroDimension);
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(ChartError::BadSampleCount(n));
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(ChartError::BadPeriod(l));
        }
        Ok(Self { d, n, l })
    }

    /// Complex dimension d.
    pub fn complex_dim(&self) -> usize {
        self.d
    }

    /// Real dimension D = 2d.
    pub fn dims(&self) -> usize {
        2 * self.d
    }

    /// Samples per axis.
    pub fn samples(&self) -> usize {
        self.n
    }

    /// Period per axis.
    pub fn period(&self) -> f64 {
        self.l
    }

    /// Grid spacing L / N.
    pub fn spacing(&self) -> f64 {
        self.l / self.n as f64
    }

    /// Total number of grid points N^D.
    pub fn point_count(&self) -> usize {
        self.n.pow(self.dims() as u32)
    }

    /// Flat index of a multi-index (axis 1 slowest).
    pub fn flat_index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.dims());
        let mut idx = 0;
        for &m in multi {
            debug_assert!(m < self.n);
            idx = idx * self.n + m;
        }
        idx
    }

    /// Multi-index of a flat index, written into `out`.
    pub fn multi_index(&self, flat: usize, out: &mut [usize]) {
        debug_assert_eq!(out.len(), self.dims());
        let mut rest = flat;
        for slot in out.iter_mut().rev() {
            *slot = rest % self.n;
            rest /= self.n;
        }
    }

    /// Coordinate of grid node `j` along one axis.
    pub fn node(&self, j: usize) -> f64 {
        self.l * j as f64 / self.n as f64
    }

    /// Coordinates of a flat index, written into `out`.
    pub fn point(&self, flat: usize, out: &mut [f64]) {
        let mut rest = flat;
        for slot in out.iter_mut().rev() {
            *slot = self.node(rest % self.n);
            rest /= self.n;
        }
    }

    /// Signed integer wavenumber of DFT bin `j`, with the Nyquist bin mapped
    /// to zero so that odd-order derivatives of real fields stay real.
    pub fn wave_int(&self, j: usize) -> i64 {
        debug_assert!(j < self.n);
        if j <= self.n / 2 {
            if j == self.n / 2 {
                0
            } else {
                j as i64
            }
        } else {
            j as i64 - self.n as i64
        }
    }

    /// Physical wavenumber 2 pi k / L of DFT bin `j` (Nyquist zeroed).
    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.wave_int(j) as f64 / self.l
    }

    pub fn check_axis(&self, axis: usize) -> Result<(), ChartError> {
        if axis == 0 || axis > self.dims() {
            Err(ChartError::AxisOutOfRange {
                axis,
                dims: self.dims(),
            })
        } else {
            Ok(())
        }
    }

    pub fn check_complex_axis(&self, axis: usize) -> Result<(), ChartError> {
        if axis == 0 || axis > self.d {
            Err(ChartError::ComplexAxisOutOfRange { axis, d: self.d })
        } else {
            Ok(())
        }
    }

    pub fn check_same(&self, other: &GridChart) -> Result<(), ChartError> {
        if self == other {
            Ok(())
        } else {
            Err(ChartError::ChartMismatch)
        }
    }
}

/// A complex scalar field sampled on a chart.
#[derive(Debug, Clone)]
pub struct ScalarField {
    chart: GridChart,
    values: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(chart: GridChart) -> Self {
        Self {
            chart,
            values: vec![Complex64::new(0.0, 0.0); chart.point_count()],
        }
    }

    pub fn from_values(chart: GridChart, values: Vec<Complex64>) -> Result<Self, ChartError> {
        if values.len() != chart.point_count() {
            return Err(ChartError::LengthMismatch {
                got: values.len(),
                want: chart.point_count(),
            });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(ChartError::NonFinite(bad));
        }
        Ok(Self { chart, values })
    }

    /// Sample a function of the grid point coordinates.
    pub fn from_fn(chart: GridChart, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let mut x = vec![0.0; chart.dims()];
        let values = (0..chart.point_count())
            .map(|flat| {
                chart.point(flat, &mut x);
                f(&x)
            })
            .collect();
        Self { chart, values }
    }

    pub fn from_real(chart: GridChart, values: &[f64]) -> Result<Self, ChartError> {
        Self::from_values(chart, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn chart(&self) -> &GridChart {
        &self.chart
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64 + Sync) -> Self {
        Self {
            chart: self.chart,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(
        &self,
        other: &ScalarField,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self, ChartError> {
        self.chart.check_same(&other.chart)?;
        Ok(Self {
            chart: self.chart,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self, ChartError> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self, ChartError> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| c * v)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn mean(&self) -> Complex64 {
        // Pairwise summation keeps the result independent of chunking.
        pairwise_sum(&self.values) / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.norm()))
    }

    pub fn norm_l2(&self) -> f64 {
        let total = pairwise_sum_real(&self.values.iter().map(|v| v.norm_sqr()).collect::<Vec<_>>());
        (total / self.values.len() as f64).sqrt()
    }

    /// Real parts, for building real tensor components from complex ops.
    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn im(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.im).collect()
    }
}

fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

fn pairwise_sum_real(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum_real(a) + pairwise_sum_real(b)
        }
    }
}

/// A real tensor field of rank (contra, cov) on a chart.
///
/// Components are indexed by one 0-based grid axis index per slot, stored
/// row-major over the slots. For a (1,1) structure tensor the component
/// `[m][n]` is the value table `I_M{}^N` with `M = m+1` the lower (first)
/// index, matching the contraction `D_M = d_M - i I_M{}^N d_N`.
#[derive(Debug, Clone)]
pub struct TensorField {
    chart: GridChart,
    contra: usize,
    cov: usize,
    comps: Vec<Vec<f64>>,
}

impl TensorField {
    pub fn zeros(chart: GridChart, contra: usize, cov: usize) -> Self {
        let count = chart.dims().pow((contra + cov) as u32);
        Self {
            chart,
            contra,
            cov,
            comps: vec![vec![0.0; chart.point_count()]; count],
        }
    }

    pub fn from_components(
        chart: GridChart,
        contra: usize,
        cov: usize,
        comps: Vec<Vec<f64>>,
    ) -> Result<Self, ChartError> {
        let want = chart.dims().pow((contra + cov) as u32);
        if comps.len() != want {
            return Err(ChartError::ComponentCount {
                got: comps.len(),
                want,
                contra,
                cov,
                dims: chart.dims(),
            });
        }
        for comp in &comps {
            if comp.len() != chart.point_count() {
                return Err(ChartError::LengthMismatch {
                    got: comp.len(),
                    want: chart.point_count(),
                });
            }
            if let Some(bad) = comp.iter().position(|v| !v.is_finite()) {
                return Err(ChartError::NonFinite(bad));
            }
        }
        Ok(Self {
            chart,
            contra,
            cov,
            comps,
        })
    }

    /// Constant rank-2 tensor from a D x D value table (row = first slot).
    pub fn constant_rank2(
        chart: GridChart,
        contra: usize,
        cov: usize,
        table: &nalgebra::DMatrix<f64>,
    ) -> Self {
        let dims = chart.dims();
        assert_eq!(contra + cov, 2);
        assert_eq!(table.nrows(), dims);
        let comps = (0..dims * dims)
            .map(|c| vec![table[(c / dims, c % dims)]; chart.point_count()])
            .collect();
        Self {
            chart,
            contra,
            cov,
            comps,
        }
    }

    pub fn chart(&self) -> &GridChart {
        &self.chart
    }

    pub fn rank(&self) -> (usize, usize) {
        (self.contra, self.cov)
    }

    pub fn slots(&self) -> usize {
        self.contra + self.cov
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn components_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.comps
    }

    fn comp_index(&self, slots: &[usize]) -> usize {
        debug_assert_eq!(slots.len(), self.slots());
        let dims = self.chart.dims();
        let mut idx = 0;
        for &s in slots {
            debug_assert!(s < dims);
            idx = idx * dims + s;
        }
        idx
    }

    /// Component array for 0-based slot indices.
    pub fn comp(&self, slots: &[usize]) -> &[f64] {
        &self.comps[self.comp_index(slots)]
    }

    pub fn comp_mut(&mut self, slots: &[usize]) -> &mut [f64] {
        let idx = self.comp_index(slots);
        &mut self.comps[idx]
    }

    /// Value table at one grid point as a matrix (rank-2 tensors).
    pub fn matrix_at(&self, flat: usize) -> nalgebra::DMatrix<f64> {
        assert_eq!(self.slots(), 2);
        let dims = self.chart.dims();
        nalgebra::DMatrix::from_fn(dims, dims, |r, c| self.comps[r * dims + c][flat])
    }

    pub fn set_matrix_at(&mut self, flat: usize, m: &nalgebra::DMatrix<f64>) {
        assert_eq!(self.slots(), 2);
        let dims = self.chart.dims();
        for r in 0..dims {
            for c in 0..dims {
                self.comps[r * dims + c][flat] = m[(r, c)];
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn add(&self, other: &TensorField) -> Result<Self, ChartError> {
        self.chart.check_same(&other.chart)?;
        assert_eq!(self.rank(), other.rank());
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(Self {
            chart: self.chart,
            contra: self.contra,
            cov: self.cov,
            comps,
        })
    }

    pub fn sub(&self, other: &TensorField) -> Result<Self, ChartError> {
        self.chart.check_same(&other.chart)?;
        assert_eq!(self.rank(), other.rank());
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        Ok(Self {
            chart: self.chart,
            contra: self.contra,
            cov: self.cov,
            comps,
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            chart: self.chart,
            contra: self.contra,
            cov: self.cov,
            comps: self
                .comps
                .iter()
                .map(|comp| comp.iter().map(|v| c * v).collect())
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_grid_basic() {
        let c = GridChart::new(1, 8, std::f64::consts::TAU).unwrap();
        assert_eq!(c.dims(), 2);
        assert_eq!(c.point_count(), 64);
        let c = GridChart::new(2, 16, std::f64::consts::TAU).unwrap();
        assert_eq!(c.point_count(), 16usize.pow(4));
    }

    #[test]
    fn make_grid_rejects_bad_inputs() {
        assert!(matches!(
            GridChart::new(1, 7, 1.0),
            Err(ChartError::BadSampleCount(7))
        ));
        assert!(matches!(
            GridChart::new(0, 8, 1.0),
            Err(ChartError::ZeroDimension)
        ));
        assert!(matches!(
            GridChart::new(1, 2, 1.0),
            Err(ChartError::BadSampleCount(2))
        ));
        assert!(matches!(
            GridChart::new(1, 8, 0.0),
            Err(ChartError::BadPeriod(_))
        ));
    }

    #[test]
    fn flat_and_multi_index_roundtrip() {
        let c = GridChart::new(2, 4, 1.0).unwrap();
        let mut multi = vec![0; 4];
        for flat in [0, 1, 17, 255] {
            c.multi_index(flat, &mut multi);
            assert_eq!(c.flat_index(&multi), flat);
        }
    }

    #[test]
    fn wavenumbers_follow_fft_layout() {
        let c = GridChart::new(1, 8, std::f64::consts::TAU).unwrap();
        let ks: Vec<i64> = (0..8).map(|j| c.wave_int(j)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, 0, -3, -2, -1]);
    }

    #[test]
    fn field_rejects_non_finite() {
        let c = GridChart::new(1, 4, 1.0).unwrap();
        let mut vals = vec![Complex64::new(0.0, 0.0); c.point_count()];
        vals[3] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(
            ScalarField::from_values(c, vals),
            Err(ChartError::NonFinite(3))
        ));
    }
}
