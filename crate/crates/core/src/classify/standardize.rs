use crate::error::{Error, Result};
use crate::featurex::Rows;

/// Standard deviations below this are replaced by it, so constant features
/// transform to zero instead of dividing by zero.
pub const STD_FLOOR: f64 = 1e-12;

/// Per-feature z-score using training statistics (population variance).
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub(crate) means: Vec<f64>,
    pub(crate) stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: Rows<'_>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::DegenerateInput("cannot standardize zero rows".into()));
        }
        let n = x.len() as f64;
        let dim = x.dim();
        let mut means = vec![0f64; dim];
        for row in x.iter() {
            for (m, &v) in means.iter_mut().zip(row) {
                *m += f64::from(v);
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = vec![0f64; dim];
        for row in x.iter() {
            for ((s, &v), m) in vars.iter_mut().zip(row).zip(&means) {
                let d = f64::from(v) - m;
                *s += d * d;
            }
        }
        let stds = vars.into_iter().map(|s| (s / n).sqrt().max(STD_FLOOR)).collect();
        Ok(Self { means, stds })
    }

    pub(crate) fn from_parts(means: Vec<f64>, stds: Vec<f64>) -> Result<Self> {
        if means.len() != stds.len() || stds.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Format("invalid standardizer statistics".into()));
        }
        Ok(Self { means, stds })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    pub fn apply_row(&self, row: &[f32], out: &mut [f64]) {
        for (((o, &v), m), s) in out.iter_mut().zip(row).zip(&self.means).zip(&self.stds) {
            *o = (f64::from(v) - m) / s;
        }
    }

    /// Transformed copy of `q`, row-major.
    pub fn apply(&self, q: Rows<'_>) -> Result<Vec<f64>> {
        q.expect_dim(self.dim())?;
        let mut out = vec![0f64; q.len() * q.dim()];
        for (row, dst) in q.iter().zip(out.chunks_exact_mut(q.dim().max(1))) {
            self.apply_row(row, dst);
        }
        Ok(out)
    }

    pub(crate) fn apply_f32(&self, q: Rows<'_>) -> Result<Vec<f32>> {
        Ok(self.apply(q)?.into_iter().map(|v| v as f32).collect())
    }
}
