use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use lod_nls::coefficient::CoefficientField;
use lod_nls::conservation::{discrete_energy, telescoping_residual, EnergyConvention};
use lod_nls::experiments::configure_example;
use lod_nls::lod::{build_lod_basis, BilinearFormSpec, Layers, Shift};
use lod_nls::mesh::{build_structured_mesh, refine};
use lod_nls::time::{
    read_snapshots, run, steps_for, DiscreteSpace, Nonlinearity, RunOptions, SnapshotWriter, SolverOptions, Stepper,
};

fn lod_space(id: u32, n: usize, factor: usize) -> DiscreteSpace {
    let p = configure_example(id).unwrap();
    let form = BilinearFormSpec::new(p.b, p.v, Shift::Auto);
    let refmap = refine(&build_structured_mesh(n).unwrap(), factor).unwrap();
    let basis = build_lod_basis(&refmap, &form, Layers::Saturated).unwrap();
    let assembled = form.assemble(refmap.fine()).unwrap();
    DiscreteSpace::lod(basis, refmap.fine().clone(), assembled).unwrap()
}

fn fine_space(b: CoefficientField, v: CoefficientField, n: usize) -> DiscreteSpace {
    let mesh = build_structured_mesh(n).unwrap();
    let assembled = BilinearFormSpec::new(b, v, Shift::Auto).assemble(&mesh).unwrap();
    DiscreteSpace::fine_fem(mesh, assembled).unwrap()
}

fn random_state(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<Complex64> {
    let mut u = || ((rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * scale;
    (0..n).map(|_| Complex64::new(u(), u())).collect()
}

fn max_gap(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

const TIGHT: SolverOptions = SolverOptions {
    tol: 1e-14,
    max_iters: 200,
};

#[test]
fn stepping_backwards_recovers_the_previous_level() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let nl = Nonlinearity::cubic();
    for space in [lod_space(2, 4, 4), lod_space(3, 2, 8)] {
        let tau = 0.02;
        let fwd = Stepper::new(&space, nl, tau, TIGHT).unwrap();
        let bwd = Stepper::new(&space, nl, -tau, TIGHT).unwrap();
        for _ in 0..3 {
            let u_prev = random_state(&mut rng, space.dim(), 0.4);
            let u_curr: Vec<Complex64> = u_prev.iter().map(|z| z * Complex64::new(0.9, 0.2)).collect();
            let (u_next, _) = fwd.step(&u_prev, &u_curr, 1).unwrap();
            let (back, _) = bwd.step(&u_next, &u_curr, 1).unwrap();
            let scale = u_prev.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(max_gap(&back, &u_prev) < 1e-10 * scale.max(1.0));
        }
    }
}

#[test]
fn telescoping_balance_holds_each_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let nl = Nonlinearity::cubic();
    let space = lod_space(1, 4, 4);
    let tau = 0.05;
    let stepper = Stepper::new(&space, nl, tau, TIGHT).unwrap();
    let mut u_prev = random_state(&mut rng, space.dim(), 0.5);
    let mut u_curr: Vec<Complex64> = u_prev.iter().map(|z| z * 0.95).collect();
    let e0 = discrete_energy(0, &u_prev, &u_prev, &u_curr, &space, &nl, tau, EnergyConvention::Telescoping)
        .unwrap()
        .energy;
    for n in 1..20 {
        let (next, _) = stepper.step(&u_prev, &u_curr, n).unwrap();
        let r = telescoping_residual(&u_prev, &u_curr, &next, &space, &nl, tau).unwrap();
        assert!(r.abs() < 1e-9 * e0.abs().max(1.0), "step {n}: {r:e}");
        u_prev = std::mem::replace(&mut u_curr, next);
    }
}

#[test]
fn linear_scheme_follows_the_scalar_recurrence_on_eigenvectors() {
    let b = CoefficientField::constant("b", 1.0);
    let v = CoefficientField::constant("V", 2.0);
    let space = fine_space(b, v, 8);
    let n = space.dim();
    let unit = |i: usize| {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[i] = Complex64::new(1.0, 0.0);
        e
    };
    let m = DMatrix::from_fn(n, n, |i, j| space.apply_mass(&unit(j)).unwrap()[i].re);
    let k = DMatrix::from_fn(n, n, |i, j| space.apply_operator(&unit(j)).unwrap()[i].re);
    let l = m.clone().cholesky().unwrap().l();
    let l_inv = l.clone().try_inverse().unwrap();
    let eig = nalgebra::SymmetricEigen::new(&l_inv * &k * l_inv.transpose());
    let tau = 0.1;
    let stepper = Stepper::new(&space, Nonlinearity::linear(), tau, TIGHT).unwrap();
    for idx in [0, n / 2, n - 1] {
        let lambda = eig.eigenvalues[idx];
        let x = l_inv.transpose() * eig.eigenvectors.column(idx);
        let (z0, z1) = (Complex64::new(1.0, 0.0), Complex64::new(0.8, -0.3));
        let u_prev: Vec<Complex64> = x.iter().map(|&c| z0 * c).collect();
        let u_curr: Vec<Complex64> = x.iter().map(|&c| z1 * c).collect();
        let (next, stats) = stepper.step(&u_prev, &u_curr, 1).unwrap();
        let i = Complex64::new(0.0, 1.0);
        let t2 = 1.0 / (tau * tau);
        let z2 = (z1 * 2.0 * t2 - z0 * (t2 - i / (2.0 * tau) + lambda / 2.0)) / (t2 + i / (2.0 * tau) + lambda / 2.0);
        let want: Vec<Complex64> = x.iter().map(|&c| z2 * c).collect();
        assert!(max_gap(&next, &want) < 1e-10, "eigenvalue {lambda}");
        assert!(stats.iterations <= 2);
    }
}

#[test]
fn runs_conserve_energy_with_strong_nonlinearity() {
    let mut p = configure_example(3).unwrap();
    p.final_time = 0.5;
    let space = lod_space(3, 4, 4);
    let opts = RunOptions {
        tau: 0.05,
        final_time: p.final_time,
        solver: TIGHT,
        energy: Some(EnergyConvention::Telescoping),
    };
    let summary = run(&p, &space, &opts, &mut []).unwrap();
    let e0 = summary.energy[0].energy;
    assert_eq!(summary.energy.len(), 10);
    for r in &summary.energy {
        assert!(((r.energy - e0) / e0).abs() < 1e-10);
    }
}

#[test]
fn time_step_must_divide_the_horizon() {
    assert_eq!(steps_for(1.0, 1e-3).unwrap(), 1000);
    assert_eq!(steps_for(1.0, 1.0 / 256.0).unwrap(), 256);
    assert!(steps_for(1.0, 0.3).is_err());
    let space = lod_space(1, 2, 2);
    assert!(Stepper::new(&space, Nonlinearity::cubic(), 0.0, TIGHT).is_err());
}

#[test]
fn snapshots_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = configure_example(1).unwrap();
    p.final_time = 0.2;
    let space = lod_space(1, 2, 4);
    let mut writer = SnapshotWriter::new(dir.path(), 5, 0.01).unwrap();
    let opts = RunOptions {
        tau: 0.01,
        final_time: p.final_time,
        solver: SolverOptions::default(),
        energy: None,
    };
    let summary = run(&p, &space, &opts, &mut [&mut writer]).unwrap();
    let manifest = writer.finish().unwrap();
    assert_eq!(manifest.steps, vec![0, 5, 10, 15, 20]);
    let records = read_snapshots(dir.path().join(SnapshotWriter::DATA_FILE)).unwrap();
    assert_eq!(records.len(), 5);
    let last = space.to_fine(&summary.state.u_curr).unwrap();
    assert_eq!(records[4].2, last);
    assert_eq!(records[4].0, 20);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reversibility_on_random_fine_states(seed in 0u64..1000, amp in 0.05f64..0.6, tau in 0.005f64..0.1) {
        let space = fine_space(CoefficientField::constant("b", 1.0), CoefficientField::smooth("V", |x, y| x - y), 5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u_prev = random_state(&mut rng, space.dim(), amp);
        let u_curr = random_state(&mut rng, space.dim(), amp);
        let nl = Nonlinearity::cubic();
        let (next, _) = Stepper::new(&space, nl, tau, TIGHT).unwrap().step(&u_prev, &u_curr, 1).unwrap();
        let (back, _) = Stepper::new(&space, nl, -tau, TIGHT).unwrap().step(&next, &u_curr, 1).unwrap();
        prop_assert!(max_gap(&back, &u_prev) < 1e-10);
    }
}
