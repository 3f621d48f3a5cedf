use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::sample::subsequence;
use qwalk::canon::{canonical_key, canonical_key_ordered};
use qwalk::coin::{dft, grover, interp_grover, CoinPolicy};
use qwalk::ctqw::{evolve_ct, PositionState, Spectrum};
use qwalk::decoherence::{decohere_step_with, DensityMatrix, NoiseBasis, ProjectorSet};
use qwalk::dtqw::{build_shift, haar_states, ArcSpace, StepOperator, WalkState};
use qwalk::graph::{join, Graph};
use qwalk::linalg::{max_abs_diff, unitarity_error, CMatrix, CVector, C64};

/// Graph on `n` vertices from a bit per vertex pair, with optional loops.
fn graph_strategy(max_n: usize, loops: bool) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(move |n| {
        let pairs = n * (n - 1) / 2;
        (Just(n), proptest::collection::vec(any::<bool>(), pairs), proptest::collection::vec(any::<bool>(), n))
            .prop_map(move |(n, bits, loop_bits)| {
                let mut a = DMatrix::zeros(n, n);
                let mut k = 0;
                for i in 0..n {
                    for j in i + 1..n {
                        if bits[k] {
                            a[(i, j)] = 1.0;
                            a[(j, i)] = 1.0;
                        }
                        k += 1;
                    }
                    if loops && loop_bits[i] {
                        a[(i, i)] = 1.0;
                    }
                }
                Graph::from_adjacency(a).unwrap()
            })
    })
}

/// Graph whose every vertex has at least one port.
fn walkable(max_n: usize) -> impl Strategy<Value = Graph> {
    graph_strategy(max_n, true).prop_filter("isolated vertex", |g| (0..g.n()).all(|v| g.degree(v) > 0))
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

fn state(dim: usize, seed: u64) -> CVector {
    haar_states(dim, 1, seed).unwrap().pop().unwrap()
}

fn random_density(dim: usize, seed: u64) -> DensityMatrix {
    let states = haar_states(dim, 3, seed).unwrap();
    let weights = [0.5, 0.3, 0.2];
    let mut rho = CMatrix::zeros(dim, dim);
    for (w, psi) in weights.iter().zip(&states) {
        rho += psi * psi.adjoint() * C64::new(*w, 0.0);
    }
    DensityMatrix::new(rho).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn join_degree_formula(g in graph_strategy(6, false), h in graph_strategy(6, false)) {
        let j = join(&g, &h).unwrap();
        prop_assert_eq!(j.n(), g.n() + h.n());
        for v in 0..g.n() {
            prop_assert_eq!(j.degree(v), g.degree(v) + h.n());
        }
        for v in 0..h.n() {
            prop_assert_eq!(j.degree(g.n() + v), h.degree(v) + g.n());
        }
    }

    #[test]
    fn canonical_key_ignores_labels((g, perm) in graph_strategy(8, true).prop_flat_map(|g| {
        let n = g.n();
        (Just(g), permutation(n))
    })) {
        let h = g.permuted(&perm).unwrap();
        prop_assert_eq!(canonical_key(&g).unwrap(), canonical_key(&h).unwrap());
        if g.n() >= 2 {
            // Marks follow their vertices.
            let marks = [0, g.n() - 1];
            let moved = [perm[0], perm[g.n() - 1]];
            prop_assert_eq!(
                canonical_key_ordered(&g, &marks).unwrap(),
                canonical_key_ordered(&h, &moved).unwrap()
            );
        }
    }

    #[test]
    fn walk_operators_are_unitary(g in walkable(7), policy in prop_oneof![Just(CoinPolicy::O1), Just(CoinPolicy::O2), Just(CoinPolicy::O3)]) {
        let op = StepOperator::new(&g, &policy).unwrap();
        prop_assert!(unitarity_error(&op.dense()) < 1e-12);
        prop_assert!(unitarity_error(&op.coin().to_dense()) < 1e-12);
    }

    #[test]
    fn flip_flop_shift_is_an_involution(g in walkable(8)) {
        let s = build_shift(&g);
        let id = CMatrix::identity(s.nrows(), s.ncols());
        prop_assert_eq!(max_abs_diff(&(&s * &s), &id), 0.0);
        let space = ArcSpace::new(&g);
        let ff = space.flip_flop();
        for (a, &b) in ff.iter().enumerate() {
            prop_assert_eq!(ff[b], a);
        }
    }

    #[test]
    fn norm_is_conserved(g in walkable(7), seed in any::<u64>(), steps in 1usize..60) {
        let op = StepOperator::new(&g, &CoinPolicy::O2).unwrap();
        let mut amps = state(op.dim(), seed);
        for _ in 0..steps {
            amps = op.apply(&amps);
        }
        prop_assert!((WalkState::new(amps).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stepping_matches_matrix_power(g in walkable(6), seed in any::<u64>(), steps in 0u32..20) {
        let op = StepOperator::new(&g, &CoinPolicy::O1).unwrap();
        let psi = state(op.dim(), seed);
        let mut amps = psi.clone();
        for _ in 0..steps {
            amps = op.apply(&amps);
        }
        let direct = op.dense().pow(steps) * psi;
        prop_assert!((amps - direct).camax() < 1e-12);
    }

    #[test]
    fn vertex_probabilities_sum_to_one(g in walkable(7), seed in any::<u64>()) {
        let space = ArcSpace::new(&g);
        let s = WalkState::new(state(space.len(), seed));
        let total: f64 = (0..g.n()).map(|v| s.vertex_probability(&space, v)).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_steps_keep_density_matrices_physical(
        g in walkable(5),
        seed in any::<u64>(),
        p in 0.0f64..=1.0,
        basis in prop_oneof![Just(NoiseBasis::Coin), Just(NoiseBasis::Position), Just(NoiseBasis::Both)],
    ) {
        let op = StepOperator::new(&g, &CoinPolicy::O2).unwrap();
        let u = op.dense();
        let projectors = ProjectorSet::for_arcs(op.space(), basis);
        let mut rho = random_density(op.dim(), seed);
        for _ in 0..5 {
            rho = decohere_step_with(&rho, &u, &projectors, p).unwrap();
            prop_assert!((rho.trace() - 1.0).abs() < 1e-12);
            prop_assert!(rho.hermiticity_error() < 1e-12);
            prop_assert!(rho.min_eigenvalue() > -1e-10);
        }
    }

    #[test]
    fn noisy_step_is_linear(g in walkable(5), seed in any::<u64>(), p in 0.0f64..=1.0, w in 0.0f64..=1.0) {
        let op = StepOperator::new(&g, &CoinPolicy::O3).unwrap();
        let u = op.dense();
        let projectors = ProjectorSet::for_arcs(op.space(), NoiseBasis::Coin);
        let a = random_density(op.dim(), seed);
        let b = random_density(op.dim(), seed.wrapping_add(1));
        let mixed = DensityMatrix::new(a.rho.scale(w) + b.rho.scale(1.0 - w)).unwrap();
        let lhs = decohere_step_with(&mixed, &u, &projectors, p).unwrap().rho;
        let rhs = decohere_step_with(&a, &u, &projectors, p).unwrap().rho.scale(w)
            + decohere_step_with(&b, &u, &projectors, p).unwrap().rho.scale(1.0 - w);
        prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn coherences_between_groups_decay_geometrically(g in walkable(5), seed in any::<u64>(), p in 0.01f64..0.99, k in 1i32..6) {
        let space = ArcSpace::new(&g);
        let projectors = ProjectorSet::for_arcs(&space, NoiseBasis::Position);
        let id = CMatrix::identity(space.len(), space.len());
        let rho0 = random_density(space.len(), seed);
        let mut rho = rho0.clone();
        for _ in 0..k {
            rho = decohere_step_with(&rho, &id, &projectors, p).unwrap();
        }
        let vertex = |a: usize| space.arcs()[a].0;
        let factor = (1.0 - p).powi(k);
        for i in 0..space.len() {
            for j in 0..space.len() {
                let want = if vertex(i) == vertex(j) { rho0.rho[(i, j)] } else { rho0.rho[(i, j)] * factor };
                prop_assert!((rho.rho[(i, j)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn continuous_evolution_composes(g in graph_strategy(7, false), t1 in 0.0f64..5.0, t2 in 0.0f64..5.0, v in 0usize..7) {
        let v = v % g.n();
        let start = PositionState::basis(g.n(), v).unwrap();
        let spectrum = Spectrum::of(&g).unwrap();
        prop_assert!(spectrum.reconstruction_error(&g) < 1e-10);
        let once = evolve_ct(&g, &start, t1 + t2).unwrap();
        let twice = evolve_ct(&g, &evolve_ct(&g, &start, t1).unwrap(), t2).unwrap();
        prop_assert!((&once.amplitudes - &twice.amplitudes).camax() < 1e-10);
        prop_assert!((once.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interpolating_coins_are_unitary(d in 3usize..10, t_frac in 0.0f64..1.0, coupling in 0.0f64..=1.0) {
        let t = 1 + ((d / 2 - 1) as f64 * t_frac) as usize;
        prop_assume!(2 * t <= d);
        let u = interp_grover(d, t, coupling).unwrap();
        prop_assert!(unitarity_error(&u) < 1e-12);
        prop_assert!(u.iter().all(|z| z.im == 0.0));
        prop_assert!(max_abs_diff(&u, &u.transpose()) == 0.0);
    }

    #[test]
    fn coin_sub_selection_keeps_unitarity(ports in subsequence((0..8).collect::<Vec<usize>>(), 1..=8)) {
        prop_assert!(unitarity_error(&grover(ports.len()).unwrap()) < 1e-12);
        prop_assert!(unitarity_error(&dft(ports.len()).unwrap()) < 1e-12);
    }
}

#[test]
fn grover_is_an_involution() {
    for d in 1..=16 {
        let g = grover(d).unwrap();
        assert!(max_abs_diff(&(&g * &g), &CMatrix::identity(d, d)) < 1e-12, "d = {d}");
    }
}

#[test]
fn dft_has_order_four() {
    for d in 1..=16 {
        let f = dft(d).unwrap();
        let f2 = &f * &f;
        assert!(max_abs_diff(&(&f2 * &f2), &CMatrix::identity(d, d)) < 1e-10, "d = {d}");
    }
}

#[test]
fn haar_component_weight_averages_one_third() {
    for seed in 0..5 {
        let states = haar_states(3, 20_000, seed).unwrap();
        assert!(states.iter().all(|s| (s.norm() - 1.0).abs() < 1e-12));
        let mean = states.iter().map(|s| s[0].norm_sqr()).sum::<f64>() / states.len() as f64;
        assert!((mean - 1.0 / 3.0).abs() < 0.01, "seed {seed}: {mean}");
    }
}

#[test]
fn haar_states_depend_only_on_seed() {
    assert_eq!(haar_states(4, 10, 7).unwrap(), haar_states(4, 10, 7).unwrap());
    assert_ne!(haar_states(4, 10, 7).unwrap(), haar_states(4, 10, 8).unwrap());
}
