//! P-greedy node selection.
//!
//! Each step picks the node with the largest current posterior variance and
//! updates all variances through the Newton basis:
//!
//! ```text
//! N_k(v)  = (K(v, w_k) - sum_{j<k} N_j(v) N_j(w_k)) / sqrt(P^2(w_k))
//! P^2(v) <- P^2(v) - N_k(v)^2
//! ```
//!
//! so a step costs one kernel column plus `O(n k)`. The interpolant of the
//! constant-one signal is carried along in the same basis to track the
//! residual used for early termination.
//!
//! The recursion runs in double-double arithmetic. In plain `f64` the
//! subtraction leaves an absolute error of about `eps * K(v, v)` in `P^2`,
//! which turns into an error of `sqrt(eps) * P_max` in the power itself once
//! the variance at a node drops to round-off level.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::gpr::check_node_set;
use crate::kernel::GbfKernel;
use crate::spectral::Spectrum;

pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Values within this relative distance of the maximum count as tied.
pub const TIE_RTOL: f64 = 1e-10;

const PARALLEL_MIN_NODES: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct SelectorConfig {
    pub budget: usize,
    pub initial: Vec<usize>,
    pub tolerance: f64,
}

impl SelectorConfig {
    pub fn new(budget: usize) -> Self {
        SelectorConfig {
            budget,
            initial: Vec::new(),
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub node: usize,
    /// `max_v P(v)` after the step.
    pub max_power: f64,
    pub max_residual: f64,
    pub mean_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Budget,
    PowerTolerance,
    ResidualTolerance,
    /// The best remaining pivot is at round-off level.
    NumericalExhaustion,
}

/// Index of the largest value among `candidates`, smallest index on ties.
pub fn argmax_with_ties(values: &[f64], candidates: impl Iterator<Item = usize>) -> Option<usize> {
    let candidates: Vec<usize> = candidates.collect();
    let max = candidates.iter().map(|&v| values[v]).fold(f64::NEG_INFINITY, f64::max);
    if candidates.is_empty() {
        return None;
    }
    let threshold = max - TIE_RTOL * max.abs();
    candidates.into_iter().filter(|&v| values[v] >= threshold).min()
}

#[derive(Debug, Clone)]
pub struct SelectionState {
    chosen: Vec<usize>,
    is_chosen: Vec<bool>,
    newton: Vec<DVector<f64>>,
    newton_ext: Vec<Vec<TwoFloat>>,
    p2: DVector<f64>,
    p2_ext: Vec<TwoFloat>,
    residual: DVector<f64>,
    history: Vec<StepRecord>,
    pivot_guard: f64,
    stop: Option<StopReason>,
}

impl SelectionState {
    /// Empty sampling set: `P^2(v) = K(v, v)`, residual = constant one.
    pub fn new(s: &Spectrum, k: &GbfKernel) -> Result<Self> {
        k.require_positive_definite()?;
        if !s.is_empty() {
            k.check(s, 0)?;
        }
        let n = s.len();
        let p2_ext: Vec<TwoFloat> = (0..n).map(|v| k.entry_extended(s, v, v)).collect();
        let p2 = DVector::from_iterator(n, p2_ext.iter().map(TwoFloat::hi));
        let max_initial = p2.max();
        Ok(SelectionState {
            chosen: Vec::new(),
            is_chosen: vec![false; n],
            newton: Vec::new(),
            newton_ext: Vec::new(),
            p2,
            p2_ext,
            residual: DVector::from_element(n, 1.0),
            history: Vec::new(),
            pivot_guard: 10.0 * f64::EPSILON * max_initial,
            stop: None,
        })
    }

    pub fn chosen(&self) -> &[usize] {
        &self.chosen
    }

    /// Squared power function values for the current set.
    pub fn p2(&self) -> &DVector<f64> {
        &self.p2
    }

    pub fn power(&self) -> DVector<f64> {
        self.p2.map(f64::sqrt)
    }

    pub fn residual(&self) -> &DVector<f64> {
        &self.residual
    }

    /// Newton basis columns `N_1, ..., N_k`, each evaluated at every node.
    pub fn newton_columns(&self) -> &[DVector<f64>] {
        &self.newton
    }

    pub fn history(&self) -> &[StepRecord] {
        &self.history
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        self.stop
    }

    pub fn max_power(&self) -> f64 {
        self.p2.max().sqrt()
    }

    pub fn mean_power(&self) -> f64 {
        self.p2.iter().map(|x| x.sqrt()).sum::<f64>() / self.p2.len() as f64
    }

    pub fn max_residual(&self) -> f64 {
        self.residual.amax()
    }

    /// Adds `w_new` to the sampling set and updates variances and residual.
    pub fn power_update_step(&mut self, s: &Spectrum, k: &GbfKernel, w_new: usize) -> Result<()> {
        let n = self.p2.len();
        if w_new >= n {
            return Err(Error::InvalidNode { node: w_new, n });
        }
        if self.is_chosen[w_new] {
            return Err(Error::AlreadySelected(w_new));
        }
        let pivot = self.p2_ext[w_new];
        if !(pivot.hi() > self.pivot_guard) {
            return Err(Error::ZeroPivot {
                node: w_new,
                value: pivot.hi(),
            });
        }
        k.check(s, w_new)?;
        let scale = pivot.sqrt();
        let at_pivot: Vec<TwoFloat> = self.newton_ext.iter().map(|col| col[w_new]).collect();
        let newton = &self.newton_ext;
        let entry = |v: usize| -> TwoFloat {
            let mut acc = k.entry_extended(s, v, w_new);
            for (col, &b) in newton.iter().zip(&at_pivot) {
                acc -= col[v] * b;
            }
            acc / scale
        };
        let col: Vec<TwoFloat> = if n >= PARALLEL_MIN_NODES {
            (0..n).into_par_iter().map(entry).collect()
        } else {
            (0..n).map(entry).collect()
        };

        let beta = self.residual[w_new] / col[w_new].hi();
        for (v, &c) in col.iter().enumerate() {
            let updated = self.p2_ext[v] - c * c;
            self.p2_ext[v] = if updated.hi() > 0.0 {
                updated
            } else {
                TwoFloat::from(0.0)
            };
            self.p2[v] = self.p2_ext[v].hi();
            self.residual[v] -= beta * c.hi();
        }
        self.p2[w_new] = 0.0;
        self.p2_ext[w_new] = TwoFloat::from(0.0);
        self.residual[w_new] = 0.0;
        self.is_chosen[w_new] = true;
        self.chosen.push(w_new);
        self.newton
            .push(DVector::from_iterator(n, col.iter().map(TwoFloat::hi)));
        self.newton_ext.push(col);
        self.history.push(StepRecord {
            node: w_new,
            max_power: self.max_power(),
            max_residual: self.max_residual(),
            mean_residual: self.residual.iter().map(|r| r.abs()).sum::<f64>() / n as f64,
        });
        Ok(())
    }

    /// Next P-greedy pick among unselected nodes.
    pub fn next_candidate(&self) -> Option<usize> {
        let values = self.p2.as_slice();
        argmax_with_ties(values, (0..values.len()).filter(|&v| !self.is_chosen[v]))
    }
}

/// Runs P-greedy until the budget is spent or a tolerance is met.
///
/// `cfg.initial` is absorbed first (recorded in the history like any other
/// step); the budget counts only the nodes added after it.
pub fn select_nodes(s: &Spectrum, k: &GbfKernel, cfg: &SelectorConfig) -> Result<SelectionState> {
    let n = s.len();
    if cfg.budget == 0 || cfg.budget + cfg.initial.len() > n {
        return Err(Error::Budget {
            requested: cfg.budget + cfg.initial.len(),
            available: n,
        });
    }
    if !(cfg.tolerance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {}",
            cfg.tolerance
        )));
    }
    check_node_set(&cfg.initial, n)?;
    let mut state = SelectionState::new(s, k)?;
    for &w in &cfg.initial {
        state.power_update_step(s, k, w)?;
    }
    let mut added = 0;
    state.stop = Some(loop {
        if added == cfg.budget {
            break StopReason::Budget;
        }
        if state.p2.max() < cfg.tolerance {
            break StopReason::PowerTolerance;
        }
        if state.max_residual() < cfg.tolerance {
            break StopReason::ResidualTolerance;
        }
        let Some(next) = state.next_candidate() else {
            break StopReason::NumericalExhaustion;
        };
        if state.p2[next] <= state.pivot_guard {
            break StopReason::NumericalExhaustion;
        }
        state.power_update_step(s, k, next)?;
        added += 1;
    });
    Ok(state)
}

/// Power-function summary after each prefix of a fixed node sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrefixPower {
    pub max_std: f64,
    pub mean_std: f64,
}

/// Max and mean posterior standard deviation for every prefix of `nodes`.
///
/// Nodes whose variance is already at round-off level leave the power
/// function unchanged and are skipped in the update.
pub fn prefix_power_curve(s: &Spectrum, k: &GbfKernel, nodes: &[usize]) -> Result<Vec<PrefixPower>> {
    check_node_set(nodes, s.len())?;
    let mut state = SelectionState::new(s, k)?;
    let mut out = Vec::with_capacity(nodes.len());
    for &w in nodes {
        match state.power_update_step(s, k, w) {
            Ok(()) | Err(Error::ZeroPivot { .. }) => {}
            Err(e) => return Err(e),
        }
        out.push(PrefixPower {
            max_std: state.max_power(),
            mean_std: state.mean_power(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpr::power_direct_all;
    use crate::graph::{Graph, LaplacianKind};
    use crate::kernel::KernelFamily;
    use crate::spectral::laplacian_spectrum;

    fn spectrum(n: usize, edges: &[(usize, usize)]) -> Spectrum {
        let g = Graph::new(n, edges.iter().map(|&(u, v)| (u, v, 1.0))).unwrap();
        laplacian_spectrum(&g, LaplacianKind::Standard).unwrap()
    }

    #[test]
    fn two_node_diffusion() {
        let s = spectrum(2, &[(0, 1)]);
        let k = GbfKernel::new(KernelFamily::Diffusion { t: 1.0 }, &s).unwrap();
        let state = select_nodes(&s, &k, &SelectorConfig::new(2)).unwrap();
        assert_eq!(state.chosen(), &[0, 1]);
        assert!(state.p2().max() <= 1e-9);
        assert_eq!(state.stop_reason(), Some(StopReason::Budget));
    }

    #[test]
    fn single_step_matches_schur_value() {
        let s = spectrum(2, &[(0, 1)]);
        let k = GbfKernel::new(KernelFamily::Diffusion { t: 1.0 }, &s).unwrap();
        let mut state = SelectionState::new(&s, &k).unwrap();
        state.power_update_step(&s, &k, 0).unwrap();
        // (K11 - K12^2 / K11) with K11 = (1 + e^-2) / 2, K12 = (1 - e^-2) / 2
        assert!((state.p2()[1] - 0.238405844).abs() < 1e-8);
        assert_eq!(state.p2()[0], 0.0);
        // base case of the recursion
        let k00 = k.entry(&s, 0, 0);
        let n1 = &state.newton_columns()[0];
        assert!((n1[1] - k.entry(&s, 1, 0) / k00.sqrt()).abs() < 1e-15);
        assert!(matches!(
            state.power_update_step(&s, &k, 0),
            Err(Error::AlreadySelected(0))
        ));
    }

    #[test]
    fn path_spline_prefers_end_node() {
        let s = spectrum(3, &[(0, 1), (1, 2)]);
        let k = GbfKernel::new(KernelFamily::VariationalSpline { eps: 1.0, s: 1.0 }, &s).unwrap();
        let diag = k.diagonal(&s).unwrap();
        assert!((diag[0] - 0.625).abs() < 1e-12 && (diag[1] - 0.5).abs() < 1e-12);
        let state = select_nodes(&s, &k, &SelectorConfig::new(1)).unwrap();
        assert_eq!(state.chosen(), &[0]);
    }

    #[test]
    fn full_budget_interpolates() {
        let s = spectrum(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)]);
        let k = GbfKernel::new(KernelFamily::VariationalSpline { eps: 0.5, s: 2.0 }, &s).unwrap();
        let cfg = SelectorConfig::new(5);
        let state = select_nodes(&s, &k, &cfg).unwrap();
        assert!(state.p2().iter().all(|&x| x <= cfg.tolerance));
        let mut sorted = state.chosen().to_vec();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), state.chosen().len());
    }

    #[test]
    fn initial_set_is_absorbed() {
        let s = spectrum(4, &[(0, 1), (1, 2), (2, 3)]);
        let k = GbfKernel::new(KernelFamily::Diffusion { t: 0.5 }, &s).unwrap();
        let cfg = SelectorConfig {
            budget: 1,
            initial: vec![2],
            tolerance: DEFAULT_TOLERANCE,
        };
        let state = select_nodes(&s, &k, &cfg).unwrap();
        assert_eq!(state.chosen()[0], 2);
        assert_eq!(state.chosen().len(), 2);
        let direct = power_direct_all(&s, &k, state.chosen(), 0.0).unwrap();
        assert!((state.power() - direct).amax() < 1e-10);
    }

    #[test]
    fn rejects_bad_configs() {
        let s = spectrum(2, &[(0, 1)]);
        let k = GbfKernel::new(KernelFamily::Diffusion { t: 1.0 }, &s).unwrap();
        assert!(matches!(
            select_nodes(&s, &k, &SelectorConfig::new(3)),
            Err(Error::Budget { .. })
        ));
        assert!(matches!(
            select_nodes(&s, &k, &SelectorConfig::new(0)),
            Err(Error::Budget { .. })
        ));
        let bad = GbfKernel::new(
            KernelFamily::CustomSpectral {
                coeffs: vec![1.0, -1.0],
            },
            &s,
        )
        .unwrap();
        assert!(matches!(
            select_nodes(&s, &bad, &SelectorConfig::new(1)),
            Err(Error::IndefiniteKernel(_))
        ));
    }

    #[test]
    fn ties_go_to_smallest_id() {
        assert_eq!(argmax_with_ties(&[1.0, 3.0, 3.0 * (1.0 - 1e-13), 2.0], 0..4), Some(1));
        assert_eq!(argmax_with_ties(&[3.0, 1.0, 3.0], 1..3), Some(2));
        assert_eq!(argmax_with_ties(&[1.0], std::iter::empty()), None);
    }

    #[test]
    fn prefix_curve_skips_degenerate_nodes() {
        let s = spectrum(3, &[(0, 1), (1, 2)]);
        let k = GbfKernel::new(KernelFamily::Diffusion { t: 0.3 }, &s).unwrap();
        let curve = prefix_power_curve(&s, &k, &[1, 0, 2]).unwrap();
        assert_eq!(curve.len(), 3);
        assert!(curve[2].max_std <= 1e-7);
        assert!(curve.windows(2).all(|w| w[1].max_std <= w[0].max_std + 1e-12));
    }
}
