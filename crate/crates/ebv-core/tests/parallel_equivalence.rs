//! Parallel executor properties: bitwise agreement with the sequential
//! path, exact work conservation, counter balance, and the zero-skip
//! advantage on sparse inputs.

mod common;

use ebv_core::{
    backward_substitute, effective_workers, factorize_par, factorize_seq, forward_substitute,
    generate, plan_stats, solve_par, DenseMatrix, EbvPlan, ExecConfig, GeneratedMatrix,
    MatrixKind, PivotPolicy, Vector,
};

fn dominant(n: usize, seed: u64) -> DenseMatrix {
    generate(n, MatrixKind::Dense, 1.0, seed)
        .unwrap()
        .into_dense()
}

#[test]
fn parallel_results_are_bitwise_sequential() {
    for &n in &[2usize, 3, 4, 5, 8, 16, 33] {
        for seed in [7u64, 8, 9] {
            let a = dominant(n, seed);
            let policy = PivotPolicy::default_for(&a);
            let f_seq = factorize_seq(&a, &policy).unwrap();
            let b = a.mul_vec(&Vector::ones(n)).unwrap();
            let y = forward_substitute(&f_seq, &b).unwrap();
            let x_seq = backward_substitute(&f_seq, &y).unwrap();
            for requested in [1usize, 2, 3, 4, 8] {
                let workers = effective_workers(n, requested);
                let plan = EbvPlan::build(n, workers).unwrap();
                let cfg = ExecConfig::new(workers, policy);
                let (f_par, _) = factorize_par(&a, &plan, &cfg).unwrap();
                assert_eq!(
                    f_par.packed(),
                    f_seq.packed(),
                    "factorize n={n} seed={seed} workers={workers}"
                );
                let (x_par, _) = solve_par(&f_par, &b, &plan, &cfg).unwrap();
                assert_eq!(
                    x_par.values(),
                    x_seq.values(),
                    "solve n={n} seed={seed} workers={workers}"
                );
            }
        }
    }
}

#[test]
fn work_totals_are_exact_for_any_worker_count() {
    for &n in &[2usize, 7, 24, 64] {
        let a = dominant(n, 21);
        let policy = PivotPolicy::default_for(&a);
        let factor_madds: u64 = (1..n as u64).map(|r| (n as u64 - r).pow(2)).sum();
        let solve_pass_madds = (n * (n - 1) / 2) as u64;
        for workers in [1usize, 2, 3, 5, 8] {
            let workers = effective_workers(n, workers);
            let plan = EbvPlan::build(n, workers).unwrap();
            let cfg = ExecConfig::new(workers, policy);
            let (f, counters) = factorize_par(&a, &plan, &cfg).unwrap();
            assert_eq!(counters.total_madds(), factor_madds, "n={n}");
            assert_eq!(counters.barriers(), 2 * (n as u64 - 1));

            let b = a.mul_vec(&Vector::ones(n)).unwrap();
            let (_, counters) = solve_par(&f, &b, &plan, &cfg).unwrap();
            assert_eq!(counters.total_madds(), 2 * solve_pass_madds, "n={n}");
            assert_eq!(counters.total_divs(), n as u64);
        }
    }
}

#[test]
fn solve_counters_mirror_owned_lengths() {
    let n = 33;
    let a = dominant(n, 3);
    let policy = PivotPolicy::default_for(&a);
    let f = factorize_seq(&a, &policy).unwrap();
    let b = a.mul_vec(&Vector::ones(n)).unwrap();
    for workers in 1..=8usize {
        let plan = EbvPlan::build(n, workers).unwrap();
        let stats = plan_stats(&plan);
        let cfg = ExecConfig::new(workers, policy);
        let (_, counters) = solve_par(&f, &b, &plan, &cfg).unwrap();
        let owned: Vec<u64> = stats.per_worker_length().iter().map(|&l| l as u64).collect();
        assert_eq!(counters.madds(), owned.as_slice(), "workers={workers}");
        let max = counters.madds().iter().max().unwrap();
        let min = counters.madds().iter().min().unwrap();
        assert!(max - min <= n as u64, "workers={workers}");
    }
}

#[test]
fn zero_skip_reduces_first_step_work_on_sparse_input() {
    let n = 64;
    let sparse = match generate(n, MatrixKind::Sparse, 0.1, 17).unwrap() {
        GeneratedMatrix::Sparse(m) => m,
        _ => unreachable!(),
    };
    let a = sparse.to_dense();
    let policy = PivotPolicy::default_for(&a);
    let workers = 2;
    let plan = EbvPlan::build(n, workers).unwrap();
    let cfg = ExecConfig::new(workers, policy).with_zero_skip(true);

    // skipped updates are exact zeros, so the factors still match the
    // sequential path bitwise
    let (f, counters) = factorize_par(&a, &plan, &cfg).unwrap();
    assert_eq!(
        f.packed(),
        factorize_seq(&a, &policy).unwrap().packed(),
        "zero_skip changed the result"
    );

    // isolate the first step: factorizing the Schur complement accounts for
    // every step after it, and the complement is built here independently
    let mut schur = Vec::with_capacity((n - 1) * (n - 1));
    for i in 1..n {
        let l = a.get(i, 0) / a.get(0, 0);
        for j in 1..n {
            schur.push(a.get(i, j) - l * a.get(0, j));
        }
    }
    let schur = DenseMatrix::new(n - 1, schur).unwrap();
    let plan_s = EbvPlan::build(n - 1, workers).unwrap();
    let cfg_s = ExecConfig::new(workers, PivotPolicy::default_for(&schur)).with_zero_skip(true);
    let (_, counters_s) = factorize_par(&schur, &plan_s, &cfg_s).unwrap();

    let first_step = counters.total_madds() - counters_s.total_madds();
    let dense_count = ((n - 1) * (n - 1)) as u64;
    assert!(
        first_step < dense_count,
        "first step did {first_step} madds, dense bound {dense_count}"
    );
    // every nonzero sub-diagonal entry of column 0 contributes a full row
    let updated_rows = (1..n).filter(|&i| a.get(i, 0) != 0.0).count() as u64;
    assert_eq!(first_step, updated_rows * (n as u64 - 1));
}

#[test]
fn zero_skip_total_is_below_dense_total() {
    let n = 96;
    let sparse = generate(n, MatrixKind::Sparse, 0.1, 23).unwrap().into_dense();
    let dense = dominant(n, 23);
    let workers = 2;
    let plan = EbvPlan::build(n, workers).unwrap();

    let cfg = ExecConfig::new(workers, PivotPolicy::default_for(&sparse)).with_zero_skip(true);
    let (_, sparse_counters) = factorize_par(&sparse, &plan, &cfg).unwrap();

    let cfg = ExecConfig::new(workers, PivotPolicy::default_for(&dense)).with_zero_skip(true);
    let (_, dense_counters) = factorize_par(&dense, &plan, &cfg).unwrap();

    assert!(sparse_counters.total_madds() < dense_counters.total_madds());
    let closed_form: u64 = (1..n as u64).map(|r| (n as u64 - r).pow(2)).sum();
    assert_eq!(dense_counters.total_madds(), closed_form);
}
