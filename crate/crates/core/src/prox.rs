//! Proximal maps of `h* = delta_{R+}` and `q* = delta_{C2}` (the dual-norm
//! unit ball), their generalized Jacobians, and the Moreau companions used in
//! the stopping tests.
//!
//! | norm `q` | dual ball `C2`  | projection                 |
//! |----------|-----------------|----------------------------|
//! | l1       | linf ball       | componentwise clip         |
//! | l2       | l2 ball         | radial scaling             |
//! | linf     | l1 ball         | sign * simplex(abs)        |
//!
//! At kinks the Jacobian element that zeroes the ambiguous direction is used.

use crate::types::Norm;

/// Symmetric operator `x -> d .* x - alpha * g <g, x>`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagLowRankJacobian {
    pub diag: Vec<f64>,
    /// `(g, alpha)`.
    pub lowrank: Option<(Vec<f64>, f64)>,
}

impl DiagLowRankJacobian {
    pub fn identity(m: usize) -> Self {
        DiagLowRankJacobian { diag: vec![1.0; m], lowrank: None }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for ((o, d), xi) in out.iter_mut().zip(&self.diag).zip(x) {
            *o = d * xi;
        }
        if let Some((g, alpha)) = &self.lowrank {
            let s = alpha * dot(g, x);
            for (o, gi) in out.iter_mut().zip(g) {
                *o -= s * gi;
            }
        }
    }

    pub fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply(x, &mut out);
        out
    }

    /// Diagonal entry `i` of the full operator.
    pub fn diag_entry(&self, i: usize) -> f64 {
        match &self.lowrank {
            Some((g, alpha)) => self.diag[i] - alpha * g[i] * g[i],
            None => self.diag[i],
        }
    }

    /// Dense matrix, row-major; for tests and small direct solves.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let m = self.dim();
        (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let mut v = if i == j { self.diag[i] } else { 0.0 };
                        if let Some((g, alpha)) = &self.lowrank {
                            v -= alpha * g[i] * g[j];
                        }
                        v
                    })
                    .collect()
            })
            .collect()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Projection onto the nonnegative orthant.
pub fn prox_hstar(w: &[f64]) -> Vec<f64> {
    w.iter().map(|&x| x.max(0.0)).collect()
}

/// Jacobian of [`prox_hstar`]: `1` where `w > 0`, else `0`.
pub fn jac_hstar(w: &[f64]) -> DiagLowRankJacobian {
    DiagLowRankJacobian { diag: w.iter().map(|&x| if x > 0.0 { 1.0 } else { 0.0 }).collect(), lowrank: None }
}

/// Euclidean projection onto the probability simplex `{z >= 0, sum z = 1}`.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let theta = simplex_threshold(v);
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

fn simplex_threshold(v: &[f64]) -> f64 {
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &x) in sorted.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    theta
}

fn project_l1_ball(v: &[f64]) -> Vec<f64> {
    if v.iter().map(|x| x.abs()).sum::<f64>() <= 1.0 {
        return v.to_vec();
    }
    let abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let theta = simplex_threshold(&abs);
    v.iter().map(|&x| x.signum() * (x.abs() - theta).max(0.0)).collect()
}

/// Projection onto the unit ball of the dual norm of `norm`.
pub fn prox_qstar(v: &[f64], norm: Norm) -> Vec<f64> {
    match norm {
        Norm::L1 => v.iter().map(|&x| x.clamp(-1.0, 1.0)).collect(),
        Norm::L2 => {
            let r = norm2(v);
            if r <= 1.0 {
                v.to_vec()
            } else {
                v.iter().map(|&x| x / r).collect()
            }
        }
        Norm::Linf => project_l1_ball(v),
    }
}

/// A generalized Jacobian element of [`prox_qstar`] at `v`.
pub fn jac_qstar(v: &[f64], norm: Norm) -> DiagLowRankJacobian {
    match norm {
        Norm::L1 => DiagLowRankJacobian {
            diag: v.iter().map(|&x| if x.abs() < 1.0 { 1.0 } else { 0.0 }).collect(),
            lowrank: None,
        },
        Norm::L2 => {
            let r = norm2(v);
            if r <= 1.0 {
                DiagLowRankJacobian::identity(v.len())
            } else {
                DiagLowRankJacobian { diag: vec![1.0 / r; v.len()], lowrank: Some((v.to_vec(), 1.0 / (r * r * r))) }
            }
        }
        Norm::Linf => {
            if v.iter().map(|x| x.abs()).sum::<f64>() <= 1.0 {
                return DiagLowRankJacobian::identity(v.len());
            }
            let proj = project_l1_ball(v);
            let s: Vec<f64> = proj.iter().map(|&z| if z != 0.0 { 1.0 } else { 0.0 }).collect();
            let support: f64 = s.iter().sum();
            let g = v.iter().zip(&s).map(|(x, si)| x.signum() * si).collect();
            DiagLowRankJacobian { diag: s, lowrank: Some((g, 1.0 / support)) }
        }
    }
}

/// `Prox_{q/sigma}(x) = x - Pi_{C2}(sigma x) / sigma`.
pub fn prox_q(x: &[f64], norm: Norm, sigma: f64) -> Vec<f64> {
    let scaled: Vec<f64> = x.iter().map(|xi| sigma * xi).collect();
    if dual_norm(&scaled, norm) <= 1.0 {
        return vec![0.0; x.len()];
    }
    let p = prox_qstar(&scaled, norm);
    x.iter().zip(&p).map(|(xi, pi)| xi - pi / sigma).collect()
}

/// `q(x) = |x|_p`.
pub fn q_value(x: &[f64], norm: Norm) -> f64 {
    match norm {
        Norm::L1 => x.iter().map(|v| v.abs()).sum(),
        Norm::L2 => norm2(x),
        Norm::Linf => x.iter().fold(0.0, |m, v| m.max(v.abs())),
    }
}

/// Dual norm of `v`.
pub fn dual_norm(v: &[f64], norm: Norm) -> f64 {
    match norm {
        Norm::L1 => q_value(v, Norm::Linf),
        Norm::L2 => norm2(v),
        Norm::Linf => q_value(v, Norm::L1),
    }
}

/// `max(0, |v|_dual - 1)`: how far `v` lies outside the dual ball.
pub fn qstar_feasibility(v: &[f64], norm: Norm) -> f64 {
    (dual_norm(v, norm) - 1.0).max(0.0)
}
