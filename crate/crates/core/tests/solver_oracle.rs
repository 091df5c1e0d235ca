use deltanabla::oracle::{fd_gradient, kkt_check, verify_worked_example, FD_STEP};
use deltanabla::sample::random_problem;
use deltanabla::solver::{closed_form_example, discrete_gradient, find_abnormal, solve_normal};
use deltanabla::{IsoperimetricProblem, SolveOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn discrete_gradient_matches_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let p = random_problem(&mut rng);
        let interior: Vec<f64> = (0..p.interior_len())
            .map(|_| rng.gen_range(-1.5..1.5))
            .collect();
        let y = p.embed(&interior).unwrap();
        for f in [&p.objective, &p.constraint] {
            let fast = discrete_gradient(f, &y).unwrap();
            let slow = fd_gradient(|y| Ok(f.eval_functional(y)?.product), &y, FD_STEP).unwrap();
            let scale = fast.iter().fold(1.0_f64, |m, g| m.max(g.abs()));
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-6 * scale, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn converged_random_solves_pass_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut converged = 0;
    for _ in 0..30 {
        let p = random_problem(&mut rng);
        let r = solve_normal(&p, &SolveOptions::default()).unwrap();
        if !r.converged {
            continue;
        }
        converged += 1;
        let kkt = kkt_check(&p, &r.y, r.lambda).unwrap();
        assert!(kkt.residual_inf_norm <= 1e-5, "{kkt:?}");
        assert!(kkt.feasibility_gap <= 1e-8);
        if kkt.grad_constraint.iter().any(|g| g.abs() > 1e-6) {
            assert!((kkt.lambda_fit - r.lambda).abs() <= 1e-5 * (1.0 + r.lambda.abs()));
        }
        assert!(r.el1_defect <= 1e-8 && r.el2_defect <= 1e-8);
    }
    assert!(converged >= 25, "only {converged} of 30 converged");
}

#[test]
fn worked_example_family() {
    for m in 2..=12 {
        let r = verify_worked_example(m).unwrap();
        assert!(r.pass, "M={m}: {:?}", r.failures);
        let p = IsoperimetricProblem::worked_example(m).unwrap();
        let s = solve_normal(&p, &SolveOptions::default()).unwrap();
        assert!(s.converged);
        let (y, _) = closed_form_example(m).unwrap();
        for (a, b) in s.y.values().iter().zip(y.values()) {
            assert!((a - b).abs() <= 1e-8);
        }
        assert!(find_abnormal(&p, &SolveOptions::default())
            .unwrap()
            .is_empty());
    }
}

#[test]
fn same_seed_same_iterates() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = random_problem(&mut rng);
    let opts = SolveOptions {
        seed: 42,
        multistart: 6,
        ..SolveOptions::default()
    };
    let a = solve_normal(&p, &opts).unwrap();
    let b = solve_normal(&p, &opts).unwrap();
    for (x, y) in a.starts.iter().zip(&b.starts) {
        let bits = |h: &[f64]| h.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&x.history), bits(&y.history));
    }
    assert_eq!(
        a.y.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        b.y.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
}
