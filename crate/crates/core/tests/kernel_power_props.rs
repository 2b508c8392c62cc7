mod common;

use gbfim::gpr::{power_direct_all, GprModel};
use gbfim::graph::{Graph, LaplacianKind};
use gbfim::kernel::{GbfKernel, KernelFamily};
use gbfim::pgreedy::{select_nodes, SelectionState, SelectorConfig};
use gbfim::spectral::{laplacian_spectrum, Spectrum};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use common::*;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 40,
        ..ProptestConfig::default()
    }
}

struct Case {
    graph: Graph,
    spectrum: Spectrum,
    kernel: GbfKernel,
}

fn case(seed: u64, n: usize, family: KernelFamily, kind: LaplacianKind) -> Case {
    let graph = random_connected(&mut rng(seed), n, n, (0.2, 3.0));
    let spectrum = laplacian_spectrum(&graph, kind).unwrap();
    let kernel = GbfKernel::new(family, &spectrum).unwrap();
    Case {
        graph,
        spectrum,
        kernel,
    }
}

fn spline() -> impl Strategy<Value = KernelFamily> {
    (0.1f64..2.0, -2.0f64..-0.2).prop_map(|(eps, s)| KernelFamily::VariationalSpline { eps, s })
}

fn any_family() -> impl Strategy<Value = KernelFamily> {
    prop_oneof![
        spline(),
        (-3.0f64..3.0).prop_map(|t| KernelFamily::Diffusion { t }),
        (0.1f64..2.0, 0.2f64..2.0).prop_map(|(eps, s)| KernelFamily::VariationalSpline { eps, s }),
    ]
}

fn laplacian_kind() -> impl Strategy<Value = LaplacianKind> {
    prop_oneof![Just(LaplacianKind::Standard), Just(LaplacianKind::Normalized)]
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn kernel_matrix_matches_mercer_sum(seed in any::<u64>(), n in 2usize..30, family in any_family(), kind in laplacian_kind()) {
        let c = case(seed, n, family, kind);
        let u = c.spectrum.eigenvectors();
        let lambda = c.spectrum.eigenvalues();
        let fhat = c.kernel.coefficients();
        let oracle = u * DMatrix::from_diagonal(fhat) * u.transpose();
        let k = c.kernel.full_matrix(&c.spectrum).unwrap();
        let scale = oracle.amax().max(1.0);
        prop_assert!((&k - &oracle).amax() <= 1e-9 * scale);
        prop_assert!((&k - k.transpose()).amax() <= 1e-12 * scale);
        prop_assert_eq!(fhat.len(), lambda.len());
        if c.kernel.is_positive_definite() {
            let min = k.clone().symmetric_eigenvalues().min();
            prop_assert!(min > -1e-9 * k.norm());
        }
    }

    #[test]
    fn diffusion_kernel_is_matrix_exponential(seed in any::<u64>(), n in 2usize..20, t in -1.5f64..1.5) {
        let c = case(seed, n, KernelFamily::Diffusion { t }, LaplacianKind::Standard);
        let oracle = expm(&(dense_laplacian(&c.graph) * -t));
        let k = c.kernel.full_matrix(&c.spectrum).unwrap();
        prop_assert!((&k - &oracle).amax() <= 1e-9 * oracle.amax().max(1.0));
    }

    #[test]
    fn reproducing_property(seed in any::<u64>(), n in 2usize..25, family in spline()) {
        let c = case(seed, n, family, LaplacianKind::Standard);
        let mut r = rng(seed ^ 0x55);
        let x = DVector::from_fn(n, |_, _| r.gen_range(-2.0..2.0));
        for v in 0..n {
            let kv = c.kernel.column(&c.spectrum, v).unwrap();
            let inner = c.kernel.rkhs_inner(&c.spectrum, &x, &kv).unwrap();
            prop_assert!((inner - x[v]).abs() <= 1e-8 * x.amax().max(1.0));
        }
        prop_assert!(c.kernel.rkhs_norm(&c.spectrum, &x).unwrap() > 0.0);
    }

    #[test]
    fn power_bounded_and_monotone(seed in any::<u64>(), n in 3usize..25, family in any_family(), m in 1usize..6) {
        let c = case(seed, n, family, LaplacianKind::Standard);
        prop_assume!(c.kernel.is_positive_definite());
        let diag = c.kernel.diagonal(&c.spectrum).unwrap();
        let pmax = diag.max().sqrt();
        let mut nodes: Vec<usize> = (0..n).collect();
        nodes.shuffle(&mut rng(seed ^ 0xAA));
        let m = m.min(n - 1);
        let before = power_direct_all(&c.spectrum, &c.kernel, &nodes[..m], 0.0).unwrap();
        let after = power_direct_all(&c.spectrum, &c.kernel, &nodes[..=m], 0.0).unwrap();
        for v in 0..n {
            prop_assert!(before[v] >= 0.0 && before[v] <= pmax * (1.0 + 1e-12));
            prop_assert!(after[v] <= before[v] + 1e-9 * pmax);
        }
        for &w in &nodes[..=m] {
            prop_assert_eq!(after[w], 0.0);
        }
    }

    #[test]
    fn noise_never_lowers_the_power(seed in any::<u64>(), n in 3usize..20, family in spline(), sigma2 in 1e-3f64..1.0) {
        let c = case(seed, n, family, LaplacianKind::Standard);
        let w: Vec<usize> = (0..n).step_by(2).collect();
        let exact = power_direct_all(&c.spectrum, &c.kernel, &w, 0.0).unwrap();
        let noisy = power_direct_all(&c.spectrum, &c.kernel, &w, sigma2).unwrap();
        let oracle = direct_variance(&c.kernel.full_matrix(&c.spectrum).unwrap(), &w);
        for v in 0..n {
            prop_assert!(noisy[v] + 1e-12 >= exact[v]);
            prop_assert!((exact[v] * exact[v] - oracle[v]).abs() <= 1e-8 * exact.amax().powi(2).max(1e-300) + 1e-12);
        }
    }

    #[test]
    fn interpolant_reproduces_samples(seed in any::<u64>(), n in 3usize..25, family in spline(), m in 1usize..6) {
        let c = case(seed, n, family, LaplacianKind::Standard);
        let mut r = rng(seed ^ 0x33);
        let mut nodes: Vec<usize> = (0..n).collect();
        nodes.shuffle(&mut r);
        let w = &nodes[..m.min(n)];
        let y = DVector::from_fn(w.len(), |_, _| r.gen_range(-5.0..5.0));
        let model = GprModel::fit(&c.spectrum, &c.kernel, w, &y, 0.0).unwrap();
        let all = model.predict_all();
        for (i, &v) in w.iter().enumerate() {
            prop_assert!((model.predict(v).unwrap() - y[i]).abs() <= 1e-6 * 5.0);
            prop_assert!((all[v] - y[i]).abs() <= 1e-6 * 5.0);
        }
    }

    #[test]
    fn greedy_picks_direct_maximizer(seed in any::<u64>(), n in 3usize..25, family in spline(), kind in laplacian_kind()) {
        let c = case(seed, n, family, kind);
        let budget = n.min(6);
        let state = select_nodes(&c.spectrum, &c.kernel, &SelectorConfig::new(budget)).unwrap();
        let k = c.kernel.full_matrix(&c.spectrum).unwrap();
        let pmax2 = k.diagonal().max();
        for i in 0..state.chosen().len() {
            let var = direct_variance(&k, &state.chosen()[..i]);
            let best = argmax_smallest_id(var.as_slice(), &state.chosen()[..i], 0.0);
            let picked = state.chosen()[i];
            prop_assert!(var[picked] >= var[best] - 1e-8 * pmax2);
        }
    }

    #[test]
    fn selection_is_deterministic_and_residual_matches_fit(seed in any::<u64>(), n in 3usize..25, family in spline()) {
        let c = case(seed, n, family, LaplacianKind::Standard);
        let cfg = SelectorConfig::new(n.min(5));
        let a = select_nodes(&c.spectrum, &c.kernel, &cfg).unwrap();
        let b = select_nodes(&c.spectrum, &c.kernel, &cfg).unwrap();
        prop_assert_eq!(a.chosen(), b.chosen());
        prop_assert_eq!(a.p2(), b.p2());
        prop_assert_eq!(a.residual(), b.residual());
        let ones = DVector::from_element(a.chosen().len(), 1.0);
        let model = GprModel::fit(&c.spectrum, &c.kernel, a.chosen(), &ones, 0.0).unwrap();
        let expected = DVector::from_element(n, 1.0) - model.predict_all();
        prop_assert!((a.residual() - expected).amax() <= 1e-6);
    }

    #[test]
    fn incremental_power_matches_direct(seed in any::<u64>(), n in 3usize..30, family in any_family()) {
        let c = case(seed, n, family, LaplacianKind::Standard);
        prop_assume!(c.kernel.is_positive_definite());
        let mut state = SelectionState::new(&c.spectrum, &c.kernel).unwrap();
        let pmax = state.max_power();
        for _ in 0..n.min(8) {
            let Some(w) = state.next_candidate() else { break };
            if state.power_update_step(&c.spectrum, &c.kernel, w).is_err() {
                break;
            }
            let direct = power_direct_all(&c.spectrum, &c.kernel, state.chosen(), 0.0).unwrap();
            prop_assert!((state.power() - direct).amax() <= 1e-8 * pmax);
        }
    }
}
