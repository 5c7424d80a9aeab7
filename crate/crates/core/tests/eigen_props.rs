use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use spectral_subgraph::generators::{sample_er, RmatModel, RMAT_DEFAULT_BASE};
use spectral_subgraph::graph::Graph;
use spectral_subgraph::lanczos::LanczosOptions;
use spectral_subgraph::linalg::DenseSymmetric;
use spectral_subgraph::residuals::{
    exact_operator, modularity_operator, read_eigs_binary, rmat_expected_factors, spectral_norm,
    top_eigenpairs, write_eigs_binary, LowRankFactors,
};
use spectral_subgraph::RngSeed;

fn descending_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let e = SymmetricEigen::new(m);
    let mut idx: Vec<usize> = (0..e.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(e.eigenvectors.nrows(), idx.len(), |r, c| {
        e.eigenvectors[(r, idx[c])]
    });
    (vals, vecs)
}

fn graph_strategy() -> impl Strategy<Value = Graph> {
    (12usize..64, 0.05f64..0.4, any::<u64>()).prop_map(|(n, p, seed)| {
        let mut g = sample_er(n, p, RngSeed::new(seed, 0)).unwrap();
        if g.m() == 0 {
            g = Graph::from_edges(n, [(0, 1)]).unwrap();
        }
        g
    })
}

#[test]
fn k3_matvec_example() {
    let g = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
    let op = modularity_operator(&g).unwrap();
    let y = op.matvec(&[1.0, -1.0, 0.0]);
    for (a, b) in y.iter().zip([-1.0, 1.0, 0.0]) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn closed_form_spectra() {
    let k4 = Graph::from_edges(4, (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j)))).unwrap();
    let op = exact_operator(&k4, LowRankFactors::zero(4)).unwrap();
    let e = top_eigenpairs(&op, 1, &LanczosOptions::default()).unwrap();
    assert!((e.values[0] - 3.0).abs() < 1e-10);

    for leaves in [3usize, 8, 30] {
        let star = Graph::from_edges(leaves + 1, (1..=leaves).map(|j| (0, j))).unwrap();
        let op = exact_operator(&star, LowRankFactors::zero(leaves + 1)).unwrap();
        let e = top_eigenpairs(&op, 1, &LanczosOptions::default()).unwrap();
        assert!((e.values[0] - (leaves as f64).sqrt()).abs() < 1e-10);
    }
}

#[test]
fn single_edge_modularity_spectrum() {
    // B = [[1,1],[1,1]]·(−1/2) + [[0,1],[1,0]] = [[−1/2, 1/2], [1/2, −1/2]].
    let g = Graph::from_edges(2, [(0, 1)]).unwrap();
    let b = modularity_operator(&g).unwrap().to_dense();
    let (vals, vecs) = descending_eigen(b);
    assert!(vals[0].abs() < 1e-15);
    assert!((vals[1] + 1.0).abs() < 1e-15);
    assert!((vecs[(0, 0)] - vecs[(1, 0)]).abs() < 1e-12);
}

#[test]
fn er_exact_operator_on_empty_graph() {
    let p = 0.1;
    let op = exact_operator(&Graph::empty(5), LowRankFactors::erdos_renyi(5, p)).unwrap();
    let x = [1.0, 2.0, -0.5, 0.0, 3.0];
    let s: f64 = x.iter().sum();
    for y in op.matvec(&x) {
        assert!((y + p * s).abs() < 1e-14);
    }
}

#[test]
fn rmat_factor_mass_and_monotonicity() {
    let model = RmatModel::new(RMAT_DEFAULT_BASE, 6, 12).unwrap();
    let n = model.n();
    let p = DMatrix::from_fn(n, n, |i, j| model.undirected_probability(i, j));
    let total = p.norm_squared();
    let mut prev = f64::INFINITY;
    for r in [1, 2, 4, 8, 16, 32, 64] {
        let f = rmat_expected_factors(&model, r).unwrap();
        let err = (&p - f.to_dense()).norm_squared();
        assert!(err <= prev + 1e-9);
        prev = err;
        if r == 32 {
            assert!(
                1.0 - err / total >= 0.99,
                "rank 32 captures {}",
                1.0 - err / total
            );
        }
    }
    assert!(prev / total < 1e-20);
}

fn skewness(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

#[test]
fn er_eigenvector_components_are_symmetric() {
    let mut pooled = Vec::new();
    let mut per_vector = Vec::new();
    for s in 0..50 {
        let g = sample_er(1024, 0.012, RngSeed::new(11, s)).unwrap();
        let e = top_eigenpairs(&modularity_operator(&g).unwrap(), 2, &LanczosOptions::default()).unwrap();
        for v in &e.vectors {
            // Orient by a fixed coordinate, which says nothing about the shape.
            let sign = if v[0] < 0.0 { -1.0 } else { 1.0 };
            pooled.extend(v.iter().map(|x| sign * x));
            per_vector.push(skewness(v).abs());
        }
    }
    let skew = skewness(&pooled);
    assert!(skew.abs() < 0.2, "pooled skewness {skew}");
    let mean_abs = per_vector.iter().sum::<f64>() / per_vector.len() as f64;
    eprintln!("mean |skewness| per eigenvector {mean_abs}");
}
proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn all_ones_in_null_space(g in graph_strategy()) {
        let op = modularity_operator(&g).unwrap();
        let y = op.matvec(&vec![1.0; g.n()]);
        let k: f64 = g.degrees().as_f64().iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(y.iter().map(|x| x * x).sum::<f64>().sqrt() <= 1e-9 * k);
    }

    #[test]
    fn operator_is_symmetric(g in graph_strategy()) {
        let b = modularity_operator(&g).unwrap().to_dense();
        prop_assert!((&b - b.transpose()).amax() < 1e-14);
    }

    #[test]
    fn lanczos_matches_dense(g in graph_strategy(), m in 1usize..6, seed in any::<u64>()) {
        let op = modularity_operator(&g).unwrap();
        let opts = LanczosOptions::default().with_seed(seed);
        let e = top_eigenpairs(&op, m, &opts).unwrap();
        let (vals, vecs) = descending_eigen(op.to_dense());
        for i in 0..m {
            prop_assert!((e.values[i] - vals[i]).abs() <= 1e-8 * vals[i].abs().max(1.0));
            let u = &e.vectors[i];
            prop_assert!((u.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
            let bu = op.matvec(u);
            let r: f64 = bu.iter().zip(u).map(|(a, b)| (a - e.values[i] * b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(r <= e.tol * e.values[i].abs().max(1.0));
            for j in 0..i {
                let d: f64 = u.iter().zip(&e.vectors[j]).map(|(a, b)| a * b).sum();
                prop_assert!(d.abs() < 1e-8);
            }
            // Subspace angle, only where the eigenvalue is well separated.
            let gap = (0..vals.len())
                .filter(|&j| j != i)
                .map(|j| (vals[j] - vals[i]).abs())
                .fold(f64::INFINITY, f64::min);
            if gap > 1e-2 {
                let c: f64 = u.iter().enumerate().map(|(r, x)| x * vecs[(r, i)]).sum();
                prop_assert!(1.0 - c.abs() < 1e-6, "eigenvector {} cosine {}", i, c);
            }
        }
    }

    #[test]
    fn spectral_norm_matches_dense(g in graph_strategy()) {
        let op = modularity_operator(&g).unwrap();
        let (vals, _) = descending_eigen(op.to_dense());
        let dense = vals[0].abs().max(vals[vals.len() - 1].abs());
        let s = spectral_norm(&op, &LanczosOptions::default()).unwrap();
        prop_assert!((s - dense).abs() <= 1e-8 * dense.max(1.0));
    }

    #[test]
    fn dense_operator_wrapper_agrees(g in graph_strategy()) {
        let b = modularity_operator(&g).unwrap().to_dense();
        let s = spectral_norm(&DenseSymmetric(&b), &LanczosOptions::default()).unwrap();
        prop_assert!((s - b.symmetric_eigenvalues().amax()).abs() < 1e-8 * s.max(1.0));
    }

    #[test]
    fn binary_dump_round_trips(g in graph_strategy()) {
        let op = modularity_operator(&g).unwrap();
        let e = top_eigenpairs(&op, 2, &LanczosOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_eigs_binary(&e, &mut buf).unwrap();
        let (vals, vecs) = read_eigs_binary(&buf).unwrap();
        prop_assert_eq!(vals, e.values);
        prop_assert_eq!(vecs, e.vectors);
    }
}
