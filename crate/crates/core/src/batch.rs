use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Row-major stack of complex vectors, one row per transmitter.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C<T>>,
}

impl<T: Real> Batch<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Batch { rows, cols, data: vec![C::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(rows * cols, data.len()));
        }
        Ok(Batch { rows, cols, data })
    }

    pub fn row(&self, r: usize) -> &[C<T>] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [C<T>] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn norm_sqr(&self) -> T {
        crate::scalar::norm_sqr(&self.data)
    }

    pub fn inner(&self, other: &Self) -> C<T> {
        crate::scalar::inner(&self.data, &other.data)
    }

    pub fn scale(&mut self, s: C<T>) {
        self.data.iter_mut().for_each(|z| *z *= s);
    }

    /// `self += a·other`
    pub fn axpy(&mut self, a: C<T>, other: &Self) {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data.iter_mut().zip(&other.data).for_each(|(x, y)| *x += a * y);
    }

    /// Pointwise product of every row with `diag`.
    pub fn mul_rows(&self, diag: &[C<T>]) -> Self {
        debug_assert_eq!(diag.len(), self.cols);
        let mut out = self.clone();
        for row in out.data.chunks_mut(self.cols) {
            row.iter_mut().zip(diag).for_each(|(x, d)| *x *= d);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().zip(&other.data).for_each(|(x, y)| *x -= y);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().zip(&other.data).for_each(|(x, y)| *x += y);
        out
    }

    pub fn conj(&self) -> Self {
        Batch { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub(crate) fn check_shape(&self, rows: usize, cols: usize) -> Result<()> {
        if self.cols != cols {
            return Err(Error::dims(cols, self.cols));
        }
        if self.rows != rows {
            return Err(Error::dims(rows, self.rows));
        }
        Ok(())
    }
}
