use crate::error::{param_err, KdeError, Result};

/// Fixed-dimension points stored row-major in one buffer.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize) -> Self {
        Self { dim, coords: Vec::new() }
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return param_err("dimension must be positive");
        }
        if coords.len() % dim != 0 {
            return param_err(format!(
                "{} coordinates do not split into rows of {dim}",
                coords.len()
            ));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return param_err("coordinates must be finite");
        }
        Ok(Self { dim, coords })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return param_err("cannot infer dimension from an empty row list");
        };
        let dim = first.as_ref().len();
        let mut set = Self::new(dim);
        for row in rows {
            set.push(row.as_ref())?;
        }
        if dim == 0 {
            return param_err("dimension must be positive");
        }
        Ok(set)
    }

    pub fn push(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(KdeError::Dimension { expected: self.dim, got: row.len() });
        }
        if row.iter().any(|c| !c.is_finite()) {
            return param_err("coordinates must be finite");
        }
        self.coords.extend_from_slice(row);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.coords.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn set(&mut self, i: usize, row: &[f64]) {
        self.coords[i * self.dim..(i + 1) * self.dim].copy_from_slice(row);
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim.max(1))
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }
}
