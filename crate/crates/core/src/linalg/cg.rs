use super::LinalgError;

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    /// Final true relative residual `|b - A x| / |b|`.
    pub relative_residual: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive
/// definite operator. `x` holds the initial guess and receives the solution.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    diagonal: &[f64],
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<CgOutcome, LinalgError> {
    let n = b.len();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = diagonal
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    // One restart from the true residual guards against drift of the
    // recursively updated residual near machine precision.
    for _ in 0..2 {
        apply(x, &mut ap);
        for i in 0..n {
            r[i] = b[i] - ap[i];
        }
        if norm(&r) <= rel_tol * b_norm {
            break;
        }
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        while iterations < max_iter {
            iterations += 1;
            apply(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if pap <= 0.0 {
                return Err(LinalgError::NotPositiveDefinite {
                    iteration: iterations,
                });
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rn = norm(&r);
            if rn <= rel_tol * b_norm {
                break;
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
    }
    apply(x, &mut ap);
    let true_res = norm(&b.iter().zip(&ap).map(|(a, c)| a - c).collect::<Vec<_>>()) / b_norm;
    // Allow a small factor for the gap between recursive and true residuals.
    if true_res > 10.0 * rel_tol {
        return Err(LinalgError::Stagnation {
            iterations,
            residual: true_res,
        });
    }
    Ok(CgOutcome {
        iterations,
        relative_residual: true_res,
    })
}
