mod common;

use std::collections::BTreeSet;

use common::*;
use stocknet::network::{hop_distance, neighborhood};
use stocknet::transfer::{fit_forecaster, Forecaster};
use stocknet::{connected_components, correlation_matrix, degree_and_clustering, maximal_cliques, pearson};

fn dense(v: &[f64]) -> Vec<Option<f64>> {
    v.iter().copied().map(Some).collect()
}

#[test]
fn frozen_pearson_value() {
    // mpmath at 40 digits: 0.71818484645960799...
    let p = pearson(&dense(&[1.0, 2.0, 3.0, 4.0]), &dense(&[2.0, 4.0, 5.0, 4.0]), 2).unwrap();
    assert!((p.rho.unwrap() - 0.718_184_846_459_607_9).abs() < 1e-12);
    let (oracle, n) = eq1_oracle(&dense(&[1.0, 2.0, 3.0, 4.0]), &dense(&[2.0, 4.0, 5.0, 4.0]), 2);
    assert_eq!(n, 4);
    assert!((oracle.unwrap() - 0.718_184_846_459_607_9).abs() < 1e-15);
}

#[test]
fn double_double_is_more_precise_than_f64() {
    let third = Dd::new(1.0).div(Dd::new(3.0));
    let back = third.mul(Dd::new(3.0)).sub(Dd::new(1.0));
    assert!(back.to_f64().abs() < 1e-30);
    let r = Dd::new(2.0).sqrt();
    assert!(r.mul(r).sub(Dd::new(2.0)).to_f64().abs() < 1e-30);
}

#[test]
fn matrix_kernel_matches_eq1_oracle() {
    for seed in 0..300u64 {
        let mut rng = seeded(seed);
        let panel = random_gapped_panel(&mut rng, 6, 50);
        let min_overlap = (seed % 7) as usize;
        let m = correlation_matrix(&panel, min_overlap).unwrap();
        for i in 0..m.len() {
            for j in 0..m.len() {
                if i == j {
                    continue;
                }
                let (expect, n) = eq1_oracle(panel.column(i), panel.column(j), min_overlap);
                assert_eq!(m.overlap(i, j), n, "seed {seed} ({i},{j})");
                match (m.rho(i, j), expect) {
                    (None, None) => {}
                    (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-10, "seed {seed} ({i},{j}): {a} vs {b}"),
                    other => panic!("seed {seed} ({i},{j}): {other:?}"),
                }
            }
        }
    }
}

#[test]
fn components_match_transitive_closure() {
    for seed in 0..200u64 {
        let mut rng = seeded(seed);
        let n = 2 + (seed as usize % 11);
        let g = random_graph(&mut rng, n, [0.1, 0.2, 0.35][seed as usize % 3]);
        let got: BTreeSet<BTreeSet<String>> = connected_components(&g)
            .into_iter()
            .map(|c| c.into_iter().collect())
            .collect();
        assert_eq!(got, closure_components(&g), "seed {seed}");
    }
}

#[test]
fn cliques_match_subset_enumeration() {
    for seed in 0..120u64 {
        let mut rng = seeded(1000 + seed);
        let n = 3 + (seed as usize % 13);
        let g = random_graph(&mut rng, n, 0.4);
        for min_size in [3, 4] {
            let got: BTreeSet<Vec<String>> = maximal_cliques(&g, min_size, 1_000_000)
                .unwrap()
                .into_iter()
                .map(|mut c| {
                    c.sort();
                    c
                })
                .collect();
            assert_eq!(got, enumerated_cliques(&g, min_size), "seed {seed} min {min_size}");
        }
    }
}

#[test]
fn triangles_and_clustering_match_enumeration() {
    for seed in 0..150u64 {
        let mut rng = seeded(2000 + seed);
        let n = 3 + (seed as usize % 18);
        let g = random_graph(&mut rng, n, 0.3);
        let s = degree_and_clustering(&g);
        let t = cubic_triangles(&g);
        assert_eq!(s.triangles, t, "seed {seed}");
        let triples: u64 = (0..g.node_count()).map(|v| (g.degree(v) * g.degree(v).saturating_sub(1) / 2) as u64).sum();
        assert_eq!(s.connected_triples, triples);
        let expect = if triples == 0 { 0.0 } else { 3.0 * t as f64 / triples as f64 };
        assert!((s.clustering_coefficient - expect).abs() < 1e-15);
    }
}

#[test]
fn neighborhood_matches_bfs() {
    for seed in 0..100u64 {
        let mut rng = seeded(3000 + seed);
        let g = random_graph(&mut rng, 12, 0.2);
        if g.is_empty() {
            continue;
        }
        let start = g.nodes()[seed as usize % g.node_count()].clone();
        for radius in 0..4 {
            let sub = neighborhood(&g, &start, radius).unwrap();
            let (nodes, edges) = bfs_ball(&g, &start, radius);
            let got_nodes: BTreeSet<String> = sub.nodes().iter().cloned().collect();
            let got_edges: BTreeSet<(String, String)> =
                sub.edge_triples().into_iter().map(|(a, b, _)| (a.to_owned(), b.to_owned())).collect();
            assert_eq!(got_nodes, nodes, "seed {seed} r {radius}");
            assert_eq!(got_edges, edges, "seed {seed} r {radius}");
            for v in &nodes {
                assert!(hop_distance(&g, &start, v).unwrap() <= radius);
            }
        }
    }
}

/// Normal equations solved by Gaussian elimination in double-double.
fn ar_oracle(train: &[f64], window: usize) -> Vec<f64> {
    let n = Dd::new(train.len() as f64);
    let mut s = Dd::ZERO;
    for &v in train {
        s = s.add(Dd::new(v));
    }
    let mean = s.div(n);
    let mut ss = Dd::ZERO;
    for &v in train {
        let d = Dd::new(v).sub(mean);
        ss = ss.add(d.mul(d));
    }
    let sd = ss.div(n).sqrt();
    let z: Vec<Dd> = train.iter().map(|&v| Dd::new(v).sub(mean).div(sd)).collect();
    let p = window + 1;
    let mut a = vec![vec![Dd::ZERO; p + 1]; p];
    for t in window..z.len() {
        let row: Vec<Dd> = std::iter::once(Dd::new(1.0)).chain((1..=window).map(|k| z[t - k])).collect();
        for i in 0..p {
            for j in 0..p {
                a[i][j] = a[i][j].add(row[i].mul(row[j]));
            }
            a[i][p] = a[i][p].add(row[i].mul(z[t]));
        }
    }
    for c in 0..p {
        let piv = (c..p).max_by(|&x, &y| a[x][c].hi.abs().total_cmp(&a[y][c].hi.abs())).unwrap();
        a.swap(c, piv);
        for r in c + 1..p {
            let f = a[r][c].div(a[c][c]);
            for k in c..=p {
                a[r][k] = a[r][k].sub(f.mul(a[c][k]));
            }
        }
    }
    let mut x = vec![Dd::ZERO; p];
    for i in (0..p).rev() {
        let mut acc = a[i][p];
        for k in i + 1..p {
            acc = acc.sub(a[i][k].mul(x[k]));
        }
        x[i] = acc.div(a[i][i]);
    }
    x.into_iter().map(Dd::to_f64).collect()
}

#[test]
fn ar_fit_matches_extended_precision_normal_equations() {
    for seed in 0..40u64 {
        let mut rng = seeded(4000 + seed);
        let len = 60 + (seed as usize * 7) % 200;
        let mut series = Vec::with_capacity(len);
        let (mut y1, mut y2) = (0.0, 0.0);
        for _ in 0..len {
            let y = 0.5 * y1 - 0.3 * y2 + uniform(&mut rng, -1.0, 1.0);
            series.push(0.01 * y + 0.002);
            y2 = y1;
            y1 = y;
        }
        for window in [1, 2, 5] {
            let model = fit_forecaster("X", &series, window).unwrap();
            let expect = ar_oracle(&series, window);
            for (a, b) in model.coefficients().iter().zip(&expect) {
                assert!((a - b).abs() < 1e-9, "seed {seed} w {window}: {a} vs {b}");
            }
            assert_eq!(model.window(), window);
        }
    }
}

#[test]
fn ar2_recovers_known_coefficients() {
    let mut rng = seeded(77);
    let mut series = vec![0.0, 0.0];
    for _ in 0..20_000 {
        let t = series.len();
        series.push(0.5 * series[t - 1] - 0.3 * series[t - 2] + uniform(&mut rng, -1.0, 1.0));
    }
    let model = fit_forecaster("X", &series, 2).unwrap();
    let lags = model.lag_coefficients();
    assert!((lags[0] - 0.5).abs() < 0.03, "{lags:?}");
    assert!((lags[1] + 0.3).abs() < 0.03, "{lags:?}");
}
