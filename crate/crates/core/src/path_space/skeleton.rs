use super::grid::Grid;
use super::norm::tuple_norm;
use super::pw::PwPath;
use crate::error::{config, Result};

/// Jump times `0 = s_1 < ... < s_i` and the first `i - 1` jump sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSkeleton {
    dim: usize,
    times: Vec<f64>,
    jumps: Vec<f64>,
}

impl StepSkeleton {
    /// `jumps` holds `times.len() - 1` points of `R^dim`, row-major.
    pub fn new(dim: usize, times: Vec<f64>, jumps: Vec<f64>, grid: &Grid) -> Result<Self> {
        if times.is_empty() || times[0] != 0.0 {
            return config("the first jump time must be 0");
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return config("jump times must be strictly increasing");
        }
        if jumps.len() != (times.len() - 1) * dim {
            return config("need one jump size per jump time except the last");
        }
        let mut snapped = Vec::with_capacity(times.len());
        for &t in &times {
            let k = grid.snap(t).map_err(|e| crate::Error::Configuration(e.to_string()))?;
            snapped.push(grid.time(k));
        }
        Ok(Self { dim, times: snapped, jumps })
    }

    /// Skeleton with a single node at time 0 and no prior jumps.
    pub fn origin(dim: usize) -> Self {
        Self { dim, times: vec![0.0], jumps: Vec::new() }
    }

    /// Skeleton on arbitrary times, used by the partition scheme.
    pub(crate) fn from_times(dim: usize, times: Vec<f64>, jumps: Vec<f64>) -> Self {
        debug_assert_eq!(jumps.len(), (times.len() - 1) * dim);
        Self { dim, times, jumps }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of jump times `i`.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    /// Last jump time `s_i`.
    pub fn last_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Tail value `x_1 + ... + x_{i-1} + x`.
    pub fn tail(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        for j in self.jumps.chunks(self.dim) {
            for (o, v) in out.iter_mut().zip(j) {
                *o += v;
            }
        }
        out
    }

    /// `|(x_1, ..., x_{i-1}, x)|_p`.
    pub fn tuple_norm(&self, x: &[f64], p: f64) -> Result<f64> {
        let mut all = self.jumps.clone();
        all.extend_from_slice(x);
        tuple_norm(&all, self.dim, p)
    }

    /// Skeleton extended by one more jump `x` at time `s`.
    pub fn push(&self, s: f64, x: &[f64]) -> Self {
        let mut times = self.times.clone();
        times.push(s);
        let mut jumps = self.jumps.clone();
        jumps.extend_from_slice(x);
        Self { dim: self.dim, times, jumps }
    }
}

/// The càdlàg step path with jump `x_j` at `s_j` and last jump `x` at `s_i`.
pub fn step_path(skel: &StepSkeleton, x: &[f64]) -> PwPath {
    let d = skel.dim;
    assert_eq!(x.len(), d);
    let mut values = Vec::with_capacity(skel.times.len() * d);
    let mut acc = vec![0.0; d];
    for (j, _) in skel.times.iter().enumerate() {
        let jump = if j + 1 < skel.times.len() { &skel.jumps[j * d..(j + 1) * d] } else { x };
        for (a, v) in acc.iter_mut().zip(jump) {
            *a += v;
        }
        values.extend_from_slice(&acc);
    }
    PwPath::step(d, skel.times.clone(), values)
}
