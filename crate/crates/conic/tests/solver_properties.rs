use nalgebra::{dvector, DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rsisac_conic::instances::{interior_point, random_instance};
use rsisac_conic::{kkt_residuals, solve, solve_with, Cone, ConeProgram, ConeSolution, SolveStatus, SolverSettings};

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[test]
fn analytic_instances_reach_known_optimum() {
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let sol = solve(&inst.program).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        assert_eq!(sol.status, SolveStatus::Optimal, "seed {seed}");
        assert!(
            rel_err(sol.objective, inst.optimum) <= 1e-7,
            "seed {seed}: {} vs {}",
            sol.objective,
            inst.optimum
        );
        let kkt = kkt_residuals(&inst.program, &sol);
        assert!(kkt.max() <= 1e-8, "seed {seed}: {kkt:?}");
    }
}

#[test]
fn text_dump_solves_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let inst = random_instance(&mut rng);
    let back = ConeProgram::from_text(&inst.program.to_text()).unwrap();
    let a = solve(&inst.program).unwrap();
    let b = solve(&back).unwrap();
    assert!((a.objective - b.objective).abs() < 1e-12);
}

#[test]
fn trace_minimization_matches_positive_part() {
    // A = diag(3, -1): minimize tr(X) over X >= A, X >= 0 gives 3.
    let sol = solve(&trace_program()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.objective + 3.0).abs() < 1e-7);
}

fn trace_program() -> ConeProgram {
    let mut prog = ConeProgram::new(dvector![-1.0, 0.0, -1.0]);
    let g = -DMatrix::identity(3, 3);
    prog.push_cone(Cone::Psd(2), &g, &dvector![-3.0, 0.0, 1.0]);
    prog.push_cone(Cone::Psd(2), &g, &DVector::zeros(3));
    prog
}

#[test]
fn analytic_trace_optimum_certifies() {
    // X* = diag(3, 0); multipliers diag(1, 0) on X >= A and diag(0, 1) on X >= 0.
    let x = dvector![3.0, 0.0, 0.0];
    let sol = ConeSolution {
        status: SolveStatus::Optimal,
        x: x.clone(),
        y: DVector::zeros(0),
        z: dvector![1.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        s: dvector![0.0, 0.0, 1.0, 3.0, 0.0, 0.0],
        objective: -3.0,
        primal_residual: 0.0,
        dual_residual: 0.0,
        gap: 0.0,
        iterations: 0,
    };
    let kkt = kkt_residuals(&trace_program(), &sol);
    assert!(kkt.gap <= 1e-8 && kkt.primal <= 1e-12 && kkt.dual <= 1e-12, "{kkt:?}");
}

#[test]
fn residuals_grow_with_perturbation() {
    let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(21));
    let sol = solve(&inst.program).unwrap();
    let n = sol.x.len();
    let dir = DVector::from_fn(n, |i, _| if i % 2 == 0 { 1.0 } else { -0.5 });
    let at = |eps: f64| {
        let mut p = sol.clone();
        p.x += &dir * eps;
        kkt_residuals(&inst.program, &p).primal
    };
    let base = kkt_residuals(&inst.program, &sol).primal;
    let (r3, r4, r5) = (at(1e-3), at(1e-4), at(1e-5));
    assert!(base < r5 && r5 < r4 && r4 < r3);
    // Linear in the perturbation once it dominates the solver's own residual.
    assert!((r3 / r4 - 10.0).abs() < 0.5, "{r3} {r4}");
    assert!((r4 / r5 - 10.0).abs() < 1.0, "{r4} {r5}");
}

#[test]
fn infeasible_lmi_is_certified() {
    // [[t, 1], [1, -1]] can never be PSD.
    let mut prog = ConeProgram::new(dvector![-1.0]);
    let g = DMatrix::from_column_slice(3, 1, &[-1.0, 0.0, 0.0]);
    prog.push_cone(Cone::Psd(2), &g, &dvector![0.0, std::f64::consts::SQRT_2, -1.0]);
    assert_eq!(solve(&prog).unwrap().status, SolveStatus::Infeasible);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn scaling_data_keeps_primal_point(seed in 0u64..10_000, a in 0.05f64..20.0, b in 0.05f64..20.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let settings = SolverSettings { feasibility_tol: 1e-10, gap_tol: 1e-10, ..Default::default() };
        let base = solve_with(&inst.program, &settings).unwrap();
        let mut scaled = inst.program.clone();
        scaled.objective *= a;
        scaled.cone_matrix *= b;
        scaled.cone_rhs *= b;
        let sol = solve_with(&scaled, &settings).unwrap();
        prop_assert_eq!(sol.status, SolveStatus::Optimal);
        // The box and ball parts can have ties when a cost is ~0, so compare
        // the objective and the PSD block, whose optimum is unique.
        prop_assert!(rel_err(sol.objective / a, base.objective) <= 1e-6);
        let Cone::Psd(side) = inst.program.cones[0] else { unreachable!() };
        let nx = side * (side + 1) / 2;
        for i in 0..nx {
            prop_assert!((sol.x[i] - base.x[i]).abs() <= 1e-6 * (1.0 + base.x[i].abs()));
        }
    }

    #[test]
    fn feasible_warm_start_is_never_worse(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng);
        let cold = solve(&inst.program).unwrap();
        let mut warm_prog = inst.program.clone();
        warm_prog.warm_start = Some(interior_point(&inst));
        let warm = solve(&warm_prog).unwrap();
        prop_assert_eq!(warm.status, SolveStatus::Optimal);
        prop_assert!(warm.objective >= cold.objective - 1e-8 * (1.0 + cold.objective.abs()));
    }
}
