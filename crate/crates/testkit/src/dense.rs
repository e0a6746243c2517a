//! Dense-matrix reference solvers: explicit circulant operator matrices,
//! normal-equation solves, coordinate-descent LASSO, proximal-gradient
//! supervised coding, and a Newton logistic trainer.

use num_complex::Complex;

pub type C64 = Complex<f64>;

/// Explicit matrix of the operator `y -> sum_k kernel_k (*) y_k` where
/// `(*)` is circular convolution on an `height x width` canvas and `y`
/// stacks `k` canvas-sized maps. Rows index canvas pixels, columns index
/// `(map, pixel)` pairs.
pub fn conv_operator_matrix(height: usize, width: usize, kernels: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = height * width;
    let k = kernels.len();
    let mut a = vec![vec![0.0; k * d]; d];
    for (ki, kernel) in kernels.iter().enumerate() {
        assert_eq!(kernel.len(), d);
        for qr in 0..height {
            for qc in 0..width {
                let row = qr * width + qc;
                for pr in 0..height {
                    for pc in 0..width {
                        let col = ki * d + pr * width + pc;
                        let sr = (qr + height - pr) % height;
                        let sc = (qc + width - pc) % width;
                        a[row][col] = kernel[sr * width + sc];
                    }
                }
            }
        }
    }
    a
}

/// Zeroes the rows of `a` (and entries of `x`) where `mask` is 0,
/// realizing the diagonal gating matrix explicitly.
pub fn apply_mask_rows(a: &mut [Vec<f64>], x: &mut [f64], mask: &[f64]) {
    for (row, &m) in mask.iter().enumerate() {
        if m == 0.0 {
            for v in a[row].iter_mut() {
                *v = 0.0;
            }
            x[row] = 0.0;
        }
    }
}

pub fn mat_vec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(v).map(|(r, x)| r * x).sum()).collect()
}

/// Solves `g y = rhs` by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut g: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Vec<f64> {
    let n = g.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| g[a][col].abs().partial_cmp(&g[b][col].abs()).unwrap())
            .unwrap();
        g.swap(col, pivot);
        rhs.swap(col, pivot);
        let diag = g[col][col];
        assert!(diag.abs() > 1e-14, "singular system");
        for row in col + 1..n {
            let factor = g[row][col] / diag;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                g[row][j] -= factor * g[col][j];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut y = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for j in row + 1..n {
            acc -= g[row][j] * y[j];
        }
        y[row] = acc / g[row][row];
    }
    y
}

/// Exact minimizer of `sum_i ||A_i y - t_i||^2` through the stacked
/// normal equations, solved densely.
pub fn least_squares_stacked(blocks: &[(&[Vec<f64>], &[f64])]) -> Vec<f64> {
    let n = blocks[0].0[0].len();
    let mut gram = vec![vec![0.0; n]; n];
    let mut rhs = vec![0.0; n];
    for (a, t) in blocks {
        assert_eq!(a.len(), t.len());
        for (row, &ti) in a.iter().zip(t.iter()) {
            for i in 0..n {
                let ri = row[i];
                if ri == 0.0 {
                    continue;
                }
                rhs[i] += ri * ti;
                for j in 0..n {
                    gram[i][j] += ri * row[j];
                }
            }
        }
    }
    solve_dense(gram, rhs)
}

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// LASSO objective `0.5 ||x - A z||^2 + beta ||z||_1`.
pub fn lasso_objective(a: &[Vec<f64>], x: &[f64], beta: f64, z: &[f64]) -> f64 {
    let az = mat_vec(a, z);
    let data: f64 = x.iter().zip(az.iter()).map(|(xi, ri)| (xi - ri) * (xi - ri)).sum();
    0.5 * data + beta * z.iter().map(|v| v.abs()).sum::<f64>()
}

/// Cyclic coordinate descent for the LASSO, run until the largest
/// coordinate move falls below `tol` or `max_passes` passes elapse.
pub fn lasso_coordinate_descent(
    a: &[Vec<f64>],
    x: &[f64],
    beta: f64,
    tol: f64,
    max_passes: usize,
) -> Vec<f64> {
    let rows = a.len();
    let n = a[0].len();
    let mut col_sq = vec![0.0; n];
    for row in a {
        for (j, &v) in row.iter().enumerate() {
            col_sq[j] += v * v;
        }
    }
    let mut z = vec![0.0; n];
    let mut residual: Vec<f64> = x.to_vec();
    for _ in 0..max_passes {
        let mut max_move: f64 = 0.0;
        for j in 0..n {
            if col_sq[j] == 0.0 {
                continue;
            }
            let mut dot = 0.0;
            for r in 0..rows {
                dot += a[r][j] * residual[r];
            }
            let rho = dot + col_sq[j] * z[j];
            let new = soft(rho, beta) / col_sq[j];
            let delta = new - z[j];
            if delta != 0.0 {
                for r in 0..rows {
                    residual[r] -= a[r][j] * delta;
                }
                z[j] = new;
                max_move = max_move.max(delta.abs());
            }
        }
        if max_move < tol {
            break;
        }
    }
    z
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// One logistic row: the functional `z -> sum_j row[j] z[j]`, its label,
/// shared bias, applied inside `gamma * softplus(-y (r'z + b))`.
pub struct LogisticTerm {
    pub row: Vec<f64>,
    pub label: f64,
}

/// Supervised coding objective
/// `0.5||x - Az||^2 + beta||z||_1 + gamma sum softplus(-y (r'z + b))`.
pub fn supervised_objective(
    a: &[Vec<f64>],
    x: &[f64],
    beta: f64,
    gamma: f64,
    bias: f64,
    terms: &[LogisticTerm],
    z: &[f64],
) -> f64 {
    let mut obj = lasso_objective(a, x, beta, z);
    for t in terms {
        let score: f64 = t.row.iter().zip(z).map(|(r, v)| r * v).sum();
        obj += gamma * softplus(-t.label * (score + bias));
    }
    obj
}

/// Backtracking proximal-gradient (ISTA) solver for the supervised coding
/// objective. Slow and simple on purpose.
pub fn supervised_ista(
    a: &[Vec<f64>],
    x: &[f64],
    beta: f64,
    gamma: f64,
    bias: f64,
    terms: &[LogisticTerm],
    iters: usize,
) -> Vec<f64> {
    let n = a[0].len();
    let mut z = vec![0.0; n];
    let smooth = |z: &[f64]| -> f64 {
        let az = mat_vec(a, z);
        let mut v: f64 =
            0.5 * x.iter().zip(az.iter()).map(|(xi, ri)| (xi - ri) * (xi - ri)).sum::<f64>();
        for t in terms {
            let score: f64 = t.row.iter().zip(z).map(|(r, w)| r * w).sum();
            v += gamma * softplus(-t.label * (score + bias));
        }
        v
    };
    let grad = |z: &[f64]| -> Vec<f64> {
        let az = mat_vec(a, z);
        let mut g = vec![0.0; n];
        for (row, (&azr, &xr)) in a.iter().zip(az.iter().zip(x.iter())) {
            let r = azr - xr;
            if r == 0.0 {
                continue;
            }
            for (gi, &ai) in g.iter_mut().zip(row.iter()) {
                *gi += ai * r;
            }
        }
        for t in terms {
            let score: f64 = t.row.iter().zip(z).map(|(r, w)| r * w).sum();
            let coeff = -t.label * gamma * sigmoid(-t.label * (score + bias));
            for (gi, &ri) in g.iter_mut().zip(t.row.iter()) {
                *gi += coeff * ri;
            }
        }
        g
    };
    let mut step = 1.0;
    for _ in 0..iters {
        let gz = smooth(&z);
        let g = grad(&z);
        loop {
            let cand: Vec<f64> =
                z.iter().zip(g.iter()).map(|(zi, gi)| soft(zi - step * gi, step * beta)).collect();
            let diff: Vec<f64> = cand.iter().zip(z.iter()).map(|(c, zi)| c - zi).collect();
            let quad: f64 = gz
                + g.iter().zip(diff.iter()).map(|(gi, di)| gi * di).sum::<f64>()
                + diff.iter().map(|d| d * d).sum::<f64>() / (2.0 * step);
            if smooth(&cand) <= quad + 1e-15 {
                z = cand;
                break;
            }
            step *= 0.5;
            assert!(step > 1e-30, "ISTA step collapsed");
        }
        step *= 1.5;
    }
    z
}

/// Full-Newton minimizer of the L2-regularized logistic objective
/// `sum softplus(-y (w'f + b)) + alpha (||w||^2 + b^2)`. Features are
/// sample-major with `k` values per sample.
pub fn newton_logistic(
    features: &[f64],
    k: usize,
    labels: &[f64],
    alpha: f64,
    iters: usize,
) -> Vec<f64> {
    let samples = labels.len();
    assert_eq!(features.len(), samples * k);
    let dim = k + 1;
    let mut theta = vec![0.0; dim];
    for _ in 0..iters {
        let mut grad = vec![0.0; dim];
        let mut hess = vec![vec![0.0; dim]; dim];
        for s in 0..samples {
            let f = &features[s * k..(s + 1) * k];
            let margin: f64 =
                theta[..k].iter().zip(f).map(|(w, z)| w * z).sum::<f64>() + theta[k];
            let y = labels[s];
            let sig = sigmoid(-y * margin);
            let gcoef = -y * sig;
            let hcoef = sig * (1.0 - sig);
            for i in 0..dim {
                let xi = if i < k { f[i] } else { 1.0 };
                grad[i] += gcoef * xi;
                for j in 0..dim {
                    let xj = if j < k { f[j] } else { 1.0 };
                    hess[i][j] += hcoef * xi * xj;
                }
            }
        }
        for i in 0..dim {
            grad[i] += 2.0 * alpha * theta[i];
            hess[i][i] += 2.0 * alpha;
        }
        let gnorm = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        if gnorm < 1e-13 {
            break;
        }
        let delta = solve_dense(hess, grad);
        for (t, d) in theta.iter_mut().zip(delta.iter()) {
            *t -= d;
        }
    }
    theta
}

/// Gauss-Jordan inverse of a complex matrix, row-major.
pub fn complex_inverse(n: usize, a: &[C64]) -> Vec<C64> {
    assert_eq!(a.len(), n * n);
    let mut m: Vec<C64> = a.to_vec();
    let mut inv: Vec<C64> = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        inv[i * n + i] = C64::new(1.0, 0.0);
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r1, &r2| {
                m[r1 * n + col].norm_sqr().partial_cmp(&m[r2 * n + col].norm_sqr()).unwrap()
            })
            .unwrap();
        if pivot != col {
            for j in 0..n {
                m.swap(col * n + j, pivot * n + j);
                inv.swap(col * n + j, pivot * n + j);
            }
        }
        let diag = m[col * n + col];
        assert!(diag.norm_sqr() > 1e-28, "singular complex matrix");
        for j in 0..n {
            m[col * n + j] /= diag;
            inv[col * n + j] /= diag;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = m[row * n + col];
            if factor == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                let mc = m[col * n + j];
                let ic = inv[col * n + j];
                m[row * n + j] -= factor * mc;
                inv[row * n + j] -= factor * ic;
            }
        }
    }
    inv
}

/// Row-major complex matrix product.
pub fn complex_matmul(n: usize, a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for l in 0..n {
            let av = a[i * n + l];
            if av == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += av * b[l * n + j];
            }
        }
    }
    out
}
