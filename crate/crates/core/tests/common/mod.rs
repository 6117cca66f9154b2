//! Brute-force reference implementations used as test oracles.
#![allow(dead_code)]

use metric_nearness::ProblemInstance;

/// 0-based slot of the 1-based pair `(i, j)`, `i < j`, column by column.
pub fn slot(i: usize, j: usize) -> usize {
    (j - 1) * (j - 2) / 2 + i - 1
}

/// One dense triangle row: `y_long - y_a - y_b <= b`.
#[derive(Debug, Clone)]
pub struct DenseRow {
    pub coef: Vec<f64>,
    pub b: f64,
}

/// All `3 * C(n,3)` rows in lexicographic triple order, variants (ij, ik, jk).
pub fn dense_rows(inst: &ProblemInstance) -> Vec<DenseRow> {
    let n = inst.n();
    let m = n * (n - 1) / 2;
    let x = inst.dissim_dense();
    let mut rows = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n {
            for k in j + 1..=n {
                let (ij, ik, jk) = (slot(i, j), slot(i, k), slot(j, k));
                for (long, a, b) in [(ij, ik, jk), (ik, ij, jk), (jk, ij, ik)] {
                    let mut coef = vec![0.0; m];
                    coef[long] = 1.0;
                    coef[a] = -1.0;
                    coef[b] = -1.0;
                    rows.push(DenseRow { coef, b: x[a] + x[b] - x[long] });
                }
            }
        }
    }
    rows
}

pub fn dense_apply(rows: &[DenseRow], y: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| r.coef.iter().zip(y).map(|(a, b)| a * b).sum()).collect()
}

pub fn dense_apply_t(rows: &[DenseRow], u: &[f64], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m];
    for (r, ui) in rows.iter().zip(u) {
        for (o, a) in out.iter_mut().zip(&r.coef) {
            *o += a * ui;
        }
    }
    out
}

/// Projection onto the unit simplex by enumerating supports and keeping the
/// closest feasible candidate.
pub fn brute_simplex(v: &[f64]) -> Vec<f64> {
    let d = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << d) {
        let idx: Vec<usize> = (0..d).filter(|i| mask >> i & 1 == 1).collect();
        let theta = (idx.iter().map(|&i| v[i]).sum::<f64>() - 1.0) / idx.len() as f64;
        let mut x = vec![0.0; d];
        let mut ok = true;
        for &i in &idx {
            x[i] = v[i] - theta;
            if x[i] < 0.0 {
                ok = false;
            }
        }
        if !ok {
            continue;
        }
        let dist: f64 = x.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().map_or(true, |b| dist < b.0) {
            best = Some((dist, x));
        }
    }
    best.unwrap().1
}

/// Projection onto the unit l1 ball: `v` itself if inside, else the closest
/// of the sign-consistent support candidates on the sphere.
pub fn brute_l1_ball(v: &[f64]) -> Vec<f64> {
    if v.iter().map(|x| x.abs()).sum::<f64>() <= 1.0 {
        return v.to_vec();
    }
    let d = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << d) {
        let idx: Vec<usize> = (0..d).filter(|i| mask >> i & 1 == 1).collect();
        let theta = (idx.iter().map(|&i| v[i].abs()).sum::<f64>() - 1.0) / idx.len() as f64;
        let mut x = vec![0.0; d];
        let mut ok = theta >= 0.0;
        for &i in &idx {
            let mag = v[i].abs() - theta;
            if mag < 0.0 {
                ok = false;
            }
            x[i] = v[i].signum() * mag;
        }
        if !ok {
            continue;
        }
        let dist: f64 = x.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().map_or(true, |b| dist < b.0) {
            best = Some((dist, x));
        }
    }
    best.unwrap().1
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `max_r (A_r y - b_r)` by looping over every triple.
pub fn brute_max_violation(inst: &ProblemInstance, y: &[f64]) -> f64 {
    let n = inst.n();
    let x = inst.dissim_dense();
    let mut worst = f64::NEG_INFINITY;
    for i in 1..=n {
        for j in i + 1..=n {
            for k in j + 1..=n {
                let (ij, ik, jk) = (slot(i, j), slot(i, k), slot(j, k));
                // (X~ + y) must satisfy every triangle inequality
                let m = |s: usize| x[s] + y[s];
                worst = worst.max(m(ij) - m(ik) - m(jk));
                worst = worst.max(m(ik) - m(ij) - m(jk));
                worst = worst.max(m(jk) - m(ij) - m(ik));
            }
        }
    }
    worst
}

/// Dissimilarities drawn from `[1, 2)`: every triangle inequality holds.
pub fn band_metric(n: usize, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n * (n - 1) / 2).map(|_| rng.random_range(1.0..2.0)).collect()
}

/// Shortest-path metric of a random weighted complete graph (Floyd-Warshall).
pub fn shortest_path_metric(n: usize, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let w: f64 = rng.random_range(0.0..3.0);
            d[i][j] = w;
            d[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    let mut x = vec![0.0; n * (n - 1) / 2];
    for j in 2..=n {
        for i in 1..j {
            x[slot(i, j)] = d[i - 1][j - 1];
        }
    }
    x
}
