//! Kernel parameter selection by k-fold cross-validation on log-spaced grids.
//!
//! A fold only decides the sampling set: the interpolant is fitted on every
//! node outside the fold and its error is measured on the whole graph.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gpr::{check_node_set, fit_coefficients};
use crate::kernel::{GbfKernel, KernelFamily};
use crate::spectral::Spectrum;

/// `count` values log-spaced between `lo` and `hi` (same sign, non-zero),
/// endpoints exact.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidParameter("grid needs at least one point".into()));
    }
    if lo == 0.0 || hi == 0.0 || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "grid endpoints must be finite and non-zero: [{lo}, {hi}]"
        )));
    }
    if lo.signum() != hi.signum() {
        return Err(Error::InvalidParameter(format!(
            "grid endpoints differ in sign: [{lo}, {hi}]"
        )));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let sign = lo.signum();
    let (a, b) = (lo.abs().log10(), hi.abs().log10());
    let last = count - 1;
    Ok((0..count)
        .map(|i| match i {
            0 => lo,
            i if i == last => hi,
            i => sign * 10f64.powf(a + (b - a) * i as f64 / last as f64),
        })
        .collect())
}

/// `lo:hi:count` as written on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        log_grid(self.lo, self.hi, self.count)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}:{:e}:{}", self.lo, self.hi, self.count)
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let fail = |msg: &str| Error::GridSpec {
            spec: spec.to_string(),
            msg: msg.to_string(),
        };
        let parts: Vec<&str> = spec.split(':').collect();
        let [lo, hi, count] = parts.as_slice() else {
            return Err(fail("expected lo:hi:count"));
        };
        let lo: f64 = lo.trim().parse().map_err(|_| fail("lo is not a number"))?;
        let hi: f64 = hi.trim().parse().map_err(|_| fail("hi is not a number"))?;
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| fail("count is not a positive integer"))?;
        let grid = GridSpec { lo, hi, count };
        grid.values().map_err(|e| fail(&e.to_string()))?;
        Ok(grid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CvMetric {
    #[default]
    Mae,
    Rmse,
}

impl FromStr for CvMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mae" => Ok(CvMetric::Mae),
            "rmse" => Ok(CvMetric::Rmse),
            other => Err(Error::InvalidParameter(format!("unknown CV metric {other:?}"))),
        }
    }
}

impl fmt::Display for CvMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CvMetric::Mae => "mae",
            CvMetric::Rmse => "rmse",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvSpec {
    pub folds: usize,
    pub seed: u64,
    /// Signal to reconstruct; `None` is the constant one.
    pub target: Option<Vec<f64>>,
    pub metric: CvMetric,
    /// Diagonal regularization added to every fit (0 = exact interpolation).
    pub jitter: f64,
}

impl CvSpec {
    pub fn new(folds: usize, seed: u64) -> Self {
        CvSpec {
            folds,
            seed,
            target: None,
            metric: CvMetric::Mae,
            jitter: 0.0,
        }
    }
}

/// Shuffles `0..n` with ChaCha8(`seed`) and deals the nodes round-robin into
/// `folds` folds; each fold is returned sorted.
pub fn fold_partition(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 folds, got {folds}")));
    }
    if folds > n {
        return Err(Error::InvalidParameter(format!("{folds} folds for {n} nodes")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = vec![Vec::with_capacity(n / folds + 1); folds];
    for (i, v) in order.into_iter().enumerate() {
        out[i % folds].push(v);
    }
    out.iter_mut().for_each(|f| f.sort_unstable());
    Ok(out)
}

fn fold_error(k: &DMatrix<f64>, target: &DVector<f64>, fold: &[usize], spec: &CvSpec) -> f64 {
    let n = target.len();
    let mut held = vec![false; n];
    fold.iter().for_each(|&v| held[v] = true);
    let train: Vec<usize> = (0..n).filter(|&v| !held[v]).collect();
    let k_tt = k.select_rows(&train).select_columns(&train);
    let y = DVector::from_iterator(train.len(), train.iter().map(|&v| target[v]));
    let Ok(c) = fit_coefficients(&k_tt, &y, spec.jitter) else {
        return f64::INFINITY;
    };
    let pred = k.select_columns(&train) * c;
    let diff = pred - target;
    let err = match spec.metric {
        CvMetric::Mae => diff.iter().map(|d| d.abs()).sum::<f64>() / n as f64,
        CvMetric::Rmse => (diff.norm_squared() / n as f64).sqrt(),
    };
    if err.is_finite() {
        err
    } else {
        f64::INFINITY
    }
}

fn fold_errors(s: &Spectrum, family: &KernelFamily, spec: &CvSpec, folds: &[Vec<usize>]) -> Vec<f64> {
    let n = s.len();
    let kernel = match GbfKernel::new(family.clone(), s) {
        Ok(k) if k.is_positive_definite() => k,
        _ => return vec![f64::INFINITY; folds.len()],
    };
    let k = kernel.full_matrix(s).expect("kernel built on this spectrum");
    let target = match &spec.target {
        Some(t) => DVector::from_column_slice(t),
        None => DVector::from_element(n, 1.0),
    };
    folds.iter().map(|f| fold_error(&k, &target, f, spec)).collect()
}

fn check_target(s: &Spectrum, spec: &CvSpec) -> Result<()> {
    match &spec.target {
        Some(t) if t.len() != s.len() => Err(Error::Dimension {
            expected: s.len(),
            got: t.len(),
        }),
        _ => Ok(()),
    }
}

/// Mean over folds of the whole-graph reconstruction error; `+inf` when the
/// kernel cannot be built, is indefinite, or a fit fails. Folds come from
/// [`fold_partition`] with `spec.folds` and `spec.seed`.
pub fn cv_error(s: &Spectrum, family: &KernelFamily, spec: &CvSpec) -> Result<f64> {
    let folds = fold_partition(s.len(), spec.folds, spec.seed)?;
    cv_error_on_folds(s, family, spec, &folds)
}

/// [`cv_error`] with caller-supplied, pairwise disjoint folds.
pub fn cv_error_on_folds(s: &Spectrum, family: &KernelFamily, spec: &CvSpec, folds: &[Vec<usize>]) -> Result<f64> {
    check_target(s, spec)?;
    if folds.is_empty() || folds.iter().any(Vec::is_empty) {
        return Err(Error::InvalidParameter("folds must be non-empty".into()));
    }
    let all: Vec<usize> = folds.iter().flatten().copied().collect();
    check_node_set(&all, s.len())?;
    let errs = fold_errors(s, family, spec, folds);
    Ok(errs.iter().sum::<f64>() / errs.len() as f64)
}

/// Parameter grid for one kernel family.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelGrid {
    Diffusion {
        t: Vec<f64>,
    },
    /// Iterated with `eps` outer and `s` inner.
    Spline {
        eps: Vec<f64>,
        s: Vec<f64>,
    },
}

impl KernelGrid {
    pub fn points(&self) -> Vec<KernelFamily> {
        match self {
            KernelGrid::Diffusion { t } => t.iter().map(|&t| KernelFamily::Diffusion { t }).collect(),
            KernelGrid::Spline { eps, s } => eps
                .iter()
                .flat_map(|&e| s.iter().map(move |&s| KernelFamily::VariationalSpline { eps: e, s }))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub family: KernelFamily,
    pub score: f64,
    pub fold_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub best: KernelFamily,
    pub best_score: f64,
    /// One entry per grid point, in grid iteration order.
    pub table: Vec<GridPoint>,
}

/// Scores every grid point; the first point with the minimal score wins.
pub fn grid_search(s: &Spectrum, grid: &KernelGrid, spec: &CvSpec) -> Result<CvResult> {
    check_target(s, spec)?;
    let folds = fold_partition(s.len(), spec.folds, spec.seed)?;
    let table: Vec<GridPoint> = grid
        .points()
        .into_par_iter()
        .map(|family| {
            let fold_errors = fold_errors(s, &family, spec, &folds);
            let score = fold_errors.iter().sum::<f64>() / fold_errors.len() as f64;
            GridPoint {
                family,
                score,
                fold_errors,
            }
        })
        .collect();
    let mut best: Option<&GridPoint> = None;
    for point in &table {
        if point.score.is_finite() && best.is_none_or(|b| point.score < b.score) {
            best = Some(point);
        }
    }
    let best = best.ok_or(Error::AllGridPointsInvalid)?;
    Ok(CvResult {
        best: best.family.clone(),
        best_score: best.score,
        table,
    })
}
