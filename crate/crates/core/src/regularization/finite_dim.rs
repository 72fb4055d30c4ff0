use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::search::{regularize, Direction, RegParams, RegularizationResult, SearchConfig};
use crate::error::{domain, Result};
use crate::functional::SharedFunctional;
use crate::path_space::{step_path, StepSkeleton};

const KEY_SCALE: f64 = 1e12;

type Key = (i64, Vec<i64>);

/// `(s, x) ↦ u^n(s, η^λ(x))` on `[s_i, T] × R^d`, memoised.
pub struct FiniteDim {
    u: SharedFunctional,
    n: f64,
    skeleton: StepSkeleton,
    direction: Direction,
    cfg: SearchConfig,
    params: RegParams,
    cache: Mutex<HashMap<Key, Arc<RegularizationResult>>>,
}

impl FiniteDim {
    pub fn new(
        u: SharedFunctional,
        n: f64,
        skeleton: StepSkeleton,
        direction: Direction,
        cfg: SearchConfig,
        params: RegParams,
    ) -> Self {
        Self { u, n, skeleton, direction, cfg, params, cache: Mutex::new(HashMap::new()) }
    }

    pub fn skeleton(&self) -> &StepSkeleton {
        &self.skeleton
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn params(&self) -> RegParams {
        self.params
    }

    pub fn functional(&self) -> &SharedFunctional {
        &self.u
    }

    fn key(s: f64, x: &[f64]) -> Key {
        ((s * KEY_SCALE).round() as i64, x.iter().map(|v| (v * KEY_SCALE).round() as i64).collect())
    }

    /// Full search result at `(s, x)`.
    pub fn eval_full(&self, s: f64, x: &[f64]) -> Result<Arc<RegularizationResult>> {
        let si = self.skeleton.last_time();
        if s < si - 1e-12 {
            return domain(format!("time {s} precedes the last jump time {si}"));
        }
        if x.len() != self.skeleton.dim() {
            return domain("point has the wrong dimension");
        }
        let key = Self::key(s, x);
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let eta = step_path(&self.skeleton, x);
        let r = Arc::new(regularize(self.u.as_ref(), self.n, s.max(si), &eta, self.direction, &self.cfg, self.params)?);
        // insert-if-absent keeps the first stored result
        Ok(self.cache.lock().unwrap().entry(key).or_insert(r).clone())
    }

    pub fn eval(&self, s: f64, x: &[f64]) -> Result<f64> {
        Ok(self.eval_full(s, x)?.value)
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().unwrap().len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::catalog;
    use crate::path_space::Grid;

    fn fd(name: &str, skel: StepSkeleton) -> FiniteDim {
        FiniteDim::new(
            catalog(name, 1.0, 1).unwrap(),
            10.0,
            skel,
            Direction::Sub,
            SearchConfig::default(),
            RegParams::new(3.0, 1.0),
        )
    }

    #[test]
    fn constant_stays_constant() {
        let f = fd("constant", StepSkeleton::origin(1));
        for (s, x) in [(0.2, 0.0), (0.7, -1.5), (1.0, 3.0)] {
            assert!((f.eval(s, &[x]).unwrap() - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn time_functional_on_flat_path() {
        let f = fd("time", StepSkeleton::origin(1));
        for x in [-1.0, 0.0, 2.5] {
            assert!((f.eval(0.5, &[x]).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_consistency() {
        let g = Grid::new(1.0, 64).unwrap();
        let s1 = StepSkeleton::new(1, vec![0.0, 0.25], vec![0.3], &g).unwrap();
        let s2 = s1.push(0.5, &[-0.2]);
        let a = fd("soft-integral", s1);
        let b = fd("soft-integral", s2);
        let va = a.eval(0.5, &[-0.2]).unwrap();
        let vb = b.eval(0.5, &[0.0]).unwrap();
        assert!((va - vb).abs() < 1e-9, "{va} vs {vb}");
    }

    #[test]
    fn rejects_early_time_and_caches() {
        let g = Grid::new(1.0, 64).unwrap();
        let f = fd("time", StepSkeleton::new(1, vec![0.0, 0.5], vec![0.1], &g).unwrap());
        assert!(f.eval(0.25, &[0.0]).is_err());
        f.eval(0.75, &[0.0]).unwrap();
        f.eval(0.75, &[0.0]).unwrap();
        assert_eq!(f.cache_len(), 1);
    }
}
