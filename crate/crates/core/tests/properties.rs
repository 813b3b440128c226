use harmonium::analysis::{
    fit_leading_exponent, isotropic_plane_three_fermions, one_dim_three_fermions, series_eval, sweep, GridAxis, Pipeline,
    Spacing, SweepGrid,
};
use harmonium::gpc::{
    builtin_catalog, d_hf, d_min, d_min_euclidean, evaluate_constraints, random_state_nons_seeded, SigmaFace,
};
use harmonium::hermite::hermite_functions;
use harmonium::kernel::{bosonic_kernel, fermionic_kernel, kernel_coefficients, OneBodyKernel};
use harmonium::model::{
    box_energy, degenerate_configurations, delta_from_kappa, derive_couplings, ground_configuration, ground_state,
    kappa_from_delta, Configuration, CouplingParams, QuantumNumbers, SystemSpec,
};
use harmonium::spectral::{
    full_axis_matrix, natural_occupations, natural_occupations_for, spectrum_at_basis, truncate_spectrum, HermiteBasisSpec,
    SolverOptions, TruncationTarget,
};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

fn trap(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1.0f64..3.0, dim)
}

fn all_boxes(dim: usize, max: u32) -> Vec<QuantumNumbers> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|v: Vec<u32>| {
                (0..=max).map(move |m| {
                    let mut w = v.clone();
                    w.push(m);
                    w
                })
            })
            .collect();
    }
    out.into_iter().map(QuantumNumbers).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn no_single_swap_lowers_the_energy(n in 1usize..7, dim in 1usize..3, seed_omega in trap(2), kappa in -0.1f64..5.0) {
        let omega = seed_omega[..dim].to_vec();
        let spec = SystemSpec::from_kappa(n, omega, kappa).unwrap();
        let c = derive_couplings(&spec).unwrap();
        let config = ground_configuration(&spec).unwrap();
        let e = |q: &QuantumNumbers| box_energy(q, &c, None, 0.0);
        let occupied = &config.up;
        let max = occupied.iter().flat_map(|q| q.0.iter().copied()).max().unwrap_or(0) + 2;
        let worst_in = occupied.iter().map(e).fold(f64::NEG_INFINITY, f64::max);
        for q in all_boxes(dim, max).iter().filter(|q| !occupied.contains(q)) {
            prop_assert!(e(q) >= worst_in * (1.0 - 1e-12));
        }
    }

    #[test]
    fn degenerate_members_share_the_energy(n in 2usize..8, dim in 1usize..4) {
        let spec = SystemSpec::from_kappa(n, vec![1.0; dim], 0.7).unwrap();
        let c = derive_couplings(&spec).unwrap();
        let set = degenerate_configurations(&spec, 50).unwrap();
        let e0 = set[0].energy(&c, 0.0);
        for cfg in &set {
            prop_assert!((cfg.energy(&c, 0.0) - e0).abs() <= 1e-12 * e0.abs());
            prop_assert_eq!(cfg.degeneracy, set[0].degeneracy);
        }
    }

    #[test]
    fn effective_dimension_shrinks_with_detuning(n in 2usize..7, kappa in 0.0f64..3.0, chi in 1.0f64..6.0, extra in 0.0f64..20.0) {
        let eff = |x: f64| {
            let cfg = ground_configuration(&SystemSpec::from_kappa(n, vec![1.0, x, x], kappa).unwrap()).unwrap();
            let dim = cfg.effective_dimension();
            let max_axis = cfg.up.iter().filter_map(|q| q.0.iter().rposition(|&m| m > 0)).max().map_or(0, |i| i + 1);
            assert_eq!(dim, max_axis);
            dim
        };
        prop_assert!(eff(chi + extra) <= eff(chi));
    }

    #[test]
    fn coupling_round_trip(n in 1usize..9, kappa in -0.9f64..50.0, chi in 0.5f64..5.0) {
        let spec = SystemSpec::from_kappa(n, vec![1.0, chi], kappa).unwrap();
        let c = derive_couplings(&spec).unwrap();
        for a in &c.axes {
            let back = kappa_from_delta(a.delta);
            prop_assert!((back - a.kappa).abs() <= 1e-14 * a.kappa.abs().max(1e-300) + 1e-16);
        }
        prop_assert!((c.axes[0].kappa - kappa).abs() <= 1e-14 * kappa.abs().max(1.0));
        prop_assert!((kappa_from_delta(delta_from_kappa(kappa)) - kappa).abs() <= 1e-14 * kappa.abs().max(1.0));
    }

    #[test]
    fn kernel_symmetry_and_reflection(kappa in -0.6f64..6.0, chi in 1.0f64..3.0,
                                      x in prop::array::uniform2(-2.5f64..2.5), xp in prop::array::uniform2(-2.5f64..2.5)) {
        let gs = ground_state(&SystemSpec::from_kappa(3, vec![1.0, chi], kappa).unwrap()).unwrap();
        let k = fermionic_kernel(&gs).unwrap();
        let scale = k.value(&[0.0, 0.0], &[0.0, 0.0]).abs();
        let v = k.value(&x, &xp);
        prop_assert!((v - k.value(&xp, &x)).abs() < 1e-12 * scale);
        for g in 0..2 {
            let (mut y, mut yp) = (x, xp);
            y[g] = -y[g];
            yp[g] = -yp[g];
            prop_assert!((v - k.value(&y, &yp)).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn quasi_one_dim_kernel_factorizes(delta in 0.02f64..0.4, chi in 3.0f64..8.0,
                                       x in prop::array::uniform2(-2.0f64..2.0), xp in prop::array::uniform2(-2.0f64..2.0)) {
        let spec = SystemSpec::from_delta(3, vec![1.0, chi], delta).unwrap();
        let gs = ground_state(&spec).unwrap();
        prop_assume!(gs.configuration.effective_dimension() == 1);
        let full = fermionic_kernel(&gs).unwrap();
        let axis = |g: usize| CouplingParams { n_particles: 3, mass: 1.0, axes: vec![gs.couplings.axes[g].clone()] };
        let line = OneBodyKernel {
            coefficients: kernel_coefficients(&axis(0)).unwrap(),
            spin: None,
            orbitals: (0..3).map(|m| QuantumNumbers(vec![m])).collect(),
        };
        let boson = bosonic_kernel(&axis(1)).unwrap();
        let a = full.value(&x, &xp) / full.trace();
        let b = line.value(&x[..1], &xp[..1]) / line.trace() * boson.value(&x[1..], &xp[1..]) / boson.trace();
        let scale = full.value(&[0.0, 0.0], &[0.0, 0.0]) / full.trace();
        prop_assert!((a - b).abs() < 1e-10 * scale, "{} vs {}", a, b);
    }

    #[test]
    fn free_limit_is_the_slater_projector(n in 1usize..5, x in -2.0f64..2.0, xp in -2.0f64..2.0) {
        let gs = ground_state(&SystemSpec::from_kappa(n, vec![1.0], 1e-9).unwrap()).unwrap();
        let k = fermionic_kernel(&gs).unwrap();
        let rho = n as f64 * k.value(&[x], &[xp]) / k.trace();
        let (hx, hxp) = (hermite_functions(n, x), hermite_functions(n, xp));
        let projector: f64 = (0..n).map(|m| hx[m] * hxp[m]).sum();
        prop_assert!((rho - projector).abs() < 1e-7);
    }

    #[test]
    fn series_double_entry(delta in 0.0f64..0.3) {
        let d = delta;
        let line = [
            1.0 - (40.0 / 729.0 * d.powi(6) - 1390.0 / 59049.0 * d.powi(8)),
            1.0 - (2.0 / 9.0 * d.powi(4) - 232.0 / 729.0 * d.powi(6) + 3926.0 / 10935.0 * d.powi(8)),
            1.0 - (2.0 / 9.0 * d.powi(4) - 64.0 / 243.0 * d.powi(6) + 81902.0 / 295245.0 * d.powi(8)),
            2.0 / 9.0 * d.powi(4) - 64.0 / 243.0 * d.powi(6) + 73802.0 / 295245.0 * d.powi(8),
            2.0 / 9.0 * d.powi(4) - 232.0 / 729.0 * d.powi(6) + 3976.0 / 10935.0 * d.powi(8),
            40.0 / 729.0 * d.powi(6) - 2200.0 / 59049.0 * d.powi(8),
            80.0 / 2187.0 * d.powi(8),
        ];
        let plane = [
            1.0 - 32.0 / 81.0 * d.powi(4) + 224.0 / 729.0 * d.powi(6),
            1.0 - 4.0 / 9.0 * d * d + 4.0 / 27.0 * d.powi(4) - 152.0 / 3645.0 * d.powi(6),
            1.0 - 4.0 / 9.0 * d * d + 4.0 / 27.0 * d.powi(4) - 152.0 / 3645.0 * d.powi(6),
            4.0 / 9.0 * d * d - 8.0 / 27.0 * d.powi(4) + 16.0 / 135.0 * d.powi(6),
            4.0 / 9.0 * d * d - 8.0 / 27.0 * d.powi(4) + 16.0 / 135.0 * d.powi(6),
            4.0 / 27.0 * d.powi(4) - 88.0 / 729.0 * d.powi(6),
            4.0 / 27.0 * d.powi(4) - 88.0 / 729.0 * d.powi(6),
            4.0 / 27.0 * d.powi(4) - 40.0 / 243.0 * d.powi(6),
            4.0 / 27.0 * d.powi(4) - 40.0 / 243.0 * d.powi(6),
            8.0 / 81.0 * d.powi(4) - 16.0 / 243.0 * d.powi(6),
        ];
        for (a, b) in series_eval(&one_dim_three_fermions(), d).iter().zip(line) {
            prop_assert!((a - b).abs() < 1e-15);
        }
        for (a, b) in series_eval(&isotropic_plane_three_fermions(), d).iter().zip(plane) {
            prop_assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn exponent_fit_recovers_leading_power(k in prop::sample::select(vec![2i32, 4, 6, 8]), c in 0.1f64..10.0, ratio in -5.0f64..5.0) {
        let samples: Vec<(f64, f64)> = (0..12)
            .map(|i| 0.005 * (0.2f64 / 0.005).powf(i as f64 / 11.0))
            .map(|x| (x, c * x.powi(k) + ratio * c * x.powi(k + 2)))
            .collect();
        let f = fit_leading_exponent(&samples).unwrap();
        prop_assert!((f.exponent - k as f64).abs() < 0.1, "{} vs {}", f.exponent, k);
    }
}

fn setting() -> impl Strategy<Value = (usize, usize)> {
    prop::sample::select(vec![(2, 5), (2, 8), (3, 6), (3, 7), (3, 10), (4, 7), (4, 8)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn constraints_are_affine((n, d) in setting(), s1 in 0u64..1000, s2 in 0u64..1000, t in 0.0f64..1.0) {
        let c = builtin_catalog(n, d).unwrap();
        let (a, b) = (random_state_nons_seeded(n, d, s1), random_state_nons_seeded(n, d, s2));
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        let (da, db, dm) = (
            evaluate_constraints(&a, &c).unwrap(),
            evaluate_constraints(&b, &c).unwrap(),
            evaluate_constraints(&mix, &c).unwrap(),
        );
        for j in 0..c.len() {
            prop_assert!((dm[j] - (t * da[j] + (1.0 - t) * db[j])).abs() < 1e-14);
        }
    }

    #[test]
    fn hartree_fock_face_distance_is_d_hf((n, d) in setting(), seed in 0u64..1000) {
        let l = random_state_nons_seeded(n, d, seed);
        let face = SigmaFace { ones: n, zeros: d - n, pinning_constraints: vec![], admissible: true };
        let trace_form: f64 = l[n..].iter().sum();
        prop_assert!((face.distance(&l) - d_hf(&l, n) - trace_form).abs() < 1e-12);
        prop_assert!((d_hf(&l, n) - trace_form).abs() < 1e-12);
    }

    #[test]
    fn euclidean_variant_is_consistent((n, d) in setting(), seed in 0u64..1000) {
        let c = builtin_catalog(n, d).unwrap();
        let l = random_state_nons_seeded(n, d, seed);
        let (raw, j) = d_min(&l, &c).unwrap();
        let (eu, _) = d_min_euclidean(&l, &c).unwrap();
        prop_assert!(eu <= raw / c.constraints[j].norm2() + 1e-15);
        let min_norm = c.constraints.iter().map(|k| k.norm2()).fold(f64::INFINITY, f64::min);
        prop_assert!(eu * min_norm <= raw.max(0.0) + 1e-12 || raw < 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn trace_and_range(n in 1usize..5, dim in 1usize..3, kappa in 0.0f64..10.0) {
        let gs = ground_state(&SystemSpec::from_kappa(n, vec![1.0; dim], kappa).unwrap()).unwrap();
        let s = natural_occupations(&gs, &SolverOptions::default()).unwrap();
        let total: f64 = s.values.iter().sum();
        prop_assert!((total - n as f64).abs() < 1e-10, "trace {}", total);
        prop_assert!(s.values.iter().all(|&v| (-1e-10..=1.0 + 1e-10).contains(&v)));
    }

    #[test]
    fn basis_scale_does_not_matter(delta in 0.05f64..0.5) {
        let config = Configuration::one_dim_filled(3);
        let c = CouplingParams::from_deltas(3, &[1.0], &[delta]).unwrap();
        let base = SolverOptions::default().with_tolerance(1e-12);
        let wide = SolverOptions { scale_factor: 1.25, ..base.clone() };
        let a = natural_occupations_for(&config, &c, &base).unwrap();
        let b = natural_occupations_for(&config, &c, &wide).unwrap();
        for i in 0..20 {
            prop_assert!((a.values[i] - b.values[i]).abs() < 1e-9);
        }
    }
}

#[test]
fn blocks_reproduce_the_unblocked_matrix() {
    let gs = ground_state(&SystemSpec::from_kappa(2, vec![1.0], 1.3).unwrap()).unwrap();
    let k = fermionic_kernel(&gs).unwrap();
    let coeff = &k.coefficients[0];
    let (size, scale) = (30, 1.0 / (2.0 * coeff.a).sqrt());
    let mut m = DMatrix::zeros(size, size);
    for mu in 0..2 {
        m += full_axis_matrix(coeff, mu, size, scale);
    }
    m *= 2.0 / k.trace();
    let mut full: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().cloned().collect();
    full.sort_by(|a, b| b.total_cmp(a));
    let basis = HermiteBasisSpec { sizes: vec![size], scales: vec![scale] };
    let blocked = spectrum_at_basis(&[k], &basis, &SolverOptions::default()).unwrap();
    for (a, b) in full.iter().zip(&blocked.values) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn truncation_settings_nest() {
    let gs = ground_state(&SystemSpec::from_delta(3, vec![1.0], 0.2).unwrap()).unwrap();
    let s = natural_occupations(&gs, &SolverOptions::default()).unwrap();
    let cut = |d| truncate_spectrum(&s, TruncationTarget::Setting { n_active: 3, d_active: d }).unwrap();
    let (nine, ten) = (cut(9), cut(10));
    assert_eq!(&ten.values[..9], &nine.values[..]);
    assert!((nine.error - ten.error - ten.values[9]).abs() < 1e-16);
}

#[test]
fn sweeps_are_deterministic() {
    let grid = SweepGrid {
        n_particles: 3,
        dimension: 2,
        kappa: GridAxis { lo: 0.1, hi: 1.0, points: 3, spacing: Spacing::Log },
        chi: GridAxis { lo: 1.5, hi: 4.0, points: 2, spacing: Spacing::Linear },
        field: None,
    };
    let pipeline = Pipeline::new(builtin_catalog(3, 6).unwrap(), SolverOptions::default()).unwrap();
    let a = sweep(&grid, &pipeline).unwrap();
    let b = sweep(&grid, &pipeline).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
}
