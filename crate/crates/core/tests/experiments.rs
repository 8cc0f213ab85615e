use num_complex::Complex64;

use lod_nls::experiments::{
    configure_example, configure_example_with, convergence_study, reference_solution, with_threads, ExampleOptions,
    ExperimentConfig, LayerSpec, SpaceChoice,
};
use lod_nls::fem::{norm, NormKind};
use lod_nls::lod::Layers;
use lod_nls::mesh::build_structured_mesh;
use lod_nls::time::SolverOptions;

fn final_l2_error(fine: usize, tau: f64, t_end: f64) -> f64 {
    let mut p = configure_example(1).unwrap();
    p.final_time = t_end;
    let traj = reference_solution(&p, fine, tau, SolverOptions::default(), 10).unwrap();
    let mesh = build_structured_mesh(fine).unwrap();
    let exact = p.exact.as_ref().unwrap().at(t_end);
    norm(&mesh, traj.last(), NormKind::L2, Some(&exact)).unwrap()
}

#[test]
fn fine_reference_converges_to_the_exact_solution() {
    let t_end = 0.25;
    let e: Vec<f64> = [8, 16, 32].iter().map(|&n| final_l2_error(n, 1.0 / 256.0, t_end)).collect();
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.0..5.5).contains(&ratio), "{e:?}");
    }
}

fn gap(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

#[test]
fn time_discretization_is_second_order() {
    let mut p = configure_example(1).unwrap();
    p.final_time = 0.2;
    let solve = |tau: f64| {
        reference_solution(&p, 8, tau, SolverOptions { tol: 1e-13, max_iters: 200 }, 1)
            .unwrap()
            .last()
            .to_vec()
    };
    let (u1, u2, u3) = (solve(0.01), solve(0.005), solve(0.0025));
    let ratio = gap(&u1, &u2) / gap(&u2, &u3);
    assert!((3.0..5.0).contains(&ratio), "{ratio}");
}

fn small_config(example: u32) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_example(example);
    cfg.problem.final_time = Some(0.2);
    cfg.discretization.coarse = vec![2, 4];
    cfg.discretization.fine = 16;
    cfg.discretization.tau = 0.05;
    cfg.discretization.layers = vec![LayerSpec::Given(Layers::Fixed(1)), LayerSpec::Auto];
    cfg.output.use_cache = false;
    cfg
}

fn csv_without_runtime(cfg: &ExperimentConfig, threads: usize) -> String {
    let report = with_threads(Some(threads), || convergence_study(cfg)).unwrap().unwrap();
    report
        .to_csv_string()
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0)
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    for id in [1, 3] {
        let cfg = small_config(id);
        let one = csv_without_runtime(&cfg, 1);
        assert_eq!(one, csv_without_runtime(&cfg, 2));
        assert!(one.lines().skip(1).all(|l| l.contains(",ok")));
    }
}

#[test]
fn lod_beats_coarse_fem_on_a_rough_potential() {
    let mut cfg = small_config(3);
    cfg.discretization.tau = 0.01;
    cfg.discretization.layers = vec![LayerSpec::Given(Layers::Saturated)];
    cfg.discretization.coarse = vec![4];
    let lod = convergence_study(&cfg).unwrap();
    cfg.discretization.space = SpaceChoice::CoarseFem;
    let fem = convergence_study(&cfg).unwrap();
    let l2 = |r: &lod_nls::experiments::ConvergenceReport| r.rows[0].errors.unwrap().l2;
    assert!(l2(&lod) < 0.1 * l2(&fem), "{} vs {}", l2(&lod), l2(&fem));
}

#[test]
fn random_potential_is_reproducible_from_its_seed() {
    let opts = |seed| ExampleOptions {
        seed,
        ..Default::default()
    };
    let a = configure_example_with(5, &opts(3)).unwrap();
    let b = configure_example_with(5, &opts(3)).unwrap();
    let c = configure_example_with(5, &opts(4)).unwrap();
    let pts: Vec<(f64, f64)> = (0..400).map(|k| ((k % 20) as f64 / 20.0 + 0.01, (k / 20) as f64 / 20.0 + 0.01)).collect();
    assert!(pts.iter().all(|&(x, y)| a.v.eval(x, y) == b.v.eval(x, y)));
    assert!(pts.iter().any(|&(x, y)| a.v.eval(x, y) != c.v.eval(x, y)));
    for &(x, y) in &pts {
        let v = a.v.eval(x, y);
        assert!(v == 0.05 || v == 20.0);
    }
}
