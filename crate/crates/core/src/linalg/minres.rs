//! Unpreconditioned MINRES (Paige & Saunders) for symmetric, possibly
//! indefinite systems, with true-residual verification and restarts.

use super::dense::{axpy, dot, norm2};

#[derive(Clone, Debug)]
pub struct MinresOutcome {
    pub solution: Vec<f64>,
    /// True residual `‖A x − b‖` of `solution`, recomputed from `A`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves `A x = b` until the true residual drops to `target` or `max_iter`
/// operator applications are spent.
///
/// The Lanczos recurrence only tracks an estimate of the residual; whenever
/// the estimate reaches the target the true residual is recomputed and, if it
/// is still too large, MINRES restarts on the residual equation. The returned
/// `solution` is the iterate with the smallest true residual seen.
pub fn minres<A>(apply: A, b: &[f64], target: f64, max_iter: usize) -> MinresOutcome
where
    A: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut rnorm = norm2(&r);
    let mut best = (x.clone(), rnorm);
    let mut used = 0;
    let mut scratch = vec![0.0; n];

    while rnorm > target && used < max_iter {
        // aim a little below the target so the recomputed residual usually passes
        let (dx, its) = minres_cycle(&apply, &r, 0.5 * target, max_iter - used);
        used += its;
        axpy(1.0, &dx, &mut x);
        apply(&x, &mut scratch);
        for i in 0..n {
            r[i] = b[i] - scratch[i];
        }
        let new_norm = norm2(&r);
        if new_norm < best.1 {
            best = (x.clone(), new_norm);
        }
        if its == 0 || !(new_norm < rnorm) {
            // no progress from a fresh Krylov cycle: attainable accuracy reached
            break;
        }
        rnorm = new_norm;
    }

    let (solution, residual) = best;
    MinresOutcome {
        solution,
        residual,
        iterations: used,
        converged: residual <= target,
    }
}

/// One Lanczos/MINRES sweep from a zero initial guess. Returns the update and
/// the number of operator applications.
fn minres_cycle<A>(apply: &A, b: &[f64], tol: f64, max_iter: usize) -> (Vec<f64>, usize)
where
    A: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let beta1 = norm2(b);
    if beta1 == 0.0 || max_iter == 0 {
        return (x, 0);
    }

    let mut r1 = b.to_vec();
    let mut r2 = b.to_vec();
    let mut y = b.to_vec();
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];

    let mut oldb = 0.0;
    let mut beta = beta1;
    let mut dbar = 0.0;
    let mut epsln = 0.0;
    let mut phibar = beta1;
    let mut cs = -1.0;
    let mut sn = 0.0;

    let mut itn = 0;
    while itn < max_iter {
        itn += 1;
        let s = 1.0 / beta;
        for i in 0..n {
            v[i] = s * y[i];
        }
        apply(&v, &mut y);
        if itn >= 2 {
            axpy(-beta / oldb, &r1, &mut y);
        }
        let alfa = dot(&v, &y);
        axpy(-alfa / beta, &r2, &mut y);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        oldb = beta;
        beta = norm2(&r2);

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;

        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let denom = 1.0 / gamma;
        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) * denom;
        }
        axpy(phi, &w, &mut x);

        if phibar <= tol || beta == 0.0 || !phibar.is_finite() {
            break;
        }
    }
    (x, itn)
}
