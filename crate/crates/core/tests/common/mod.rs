//! Helpers shared by the integration test targets.
#![allow(dead_code)]

/// Right-hand side of the kinetics on spatially constant data,
/// `y = (u, v, n)`: `u' = u f(n)`, `τ v' = u − βv`, `n' = −u f(n)`.
pub struct Kinetics {
    pub tau: f64,
    pub beta: f64,
    pub f: fn(f64) -> f64,
}

impl Kinetics {
    fn rhs(&self, y: [f64; 3]) -> [f64; 3] {
        let take = y[0] * (self.f)(y[2]);
        [take, (y[0] - self.beta * y[1]) / self.tau, -take]
    }
}

pub fn monod(n: f64) -> f64 {
    n / (1.0 + n)
}

pub fn hill2(n: f64) -> f64 {
    n * n / (1.0 + n * n)
}

// Dormand–Prince 5(4) tableau; the system is autonomous so the nodes are not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates from `t0` to each of `times` (increasing) with an adaptive
/// embedded pair at a tight tolerance; returns the state at each time.
pub fn ode_oracle(sys: &Kinetics, y0: [f64; 3], t0: f64, times: &[f64]) -> Vec<[f64; 3]> {
    let (rtol, atol) = (1e-13, 1e-15);
    let mut y = y0;
    let mut t = t0;
    let mut h: f64 = 1e-3;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        while t < target {
            let step = h.min(target - t);
            let mut k = [[0.0; 3]; 7];
            for s in 0..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    for i in 0..3 {
                        ys[i] += step * A[s][j] * kj[i];
                    }
                }
                k[s] = sys.rhs(ys);
            }
            let mut y5 = y;
            let mut err: f64 = 0.0;
            for i in 0..3 {
                let (mut d5, mut d4) = (0.0, 0.0);
                for s in 0..7 {
                    d5 += B5[s] * k[s][i];
                    d4 += B4[s] * k[s][i];
                }
                y5[i] += step * d5;
                let sc = atol + rtol * y[i].abs().max(y5[i].abs());
                err = err.max((step * (d5 - d4)).abs() / sc);
            }
            if err <= 1.0 {
                t = if step == target - t { target } else { t + step };
                y = y5;
            }
            h = step * (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
        }
        out.push(y);
    }
    out
}

pub fn sup_dist(values: &[f64], c: f64) -> f64 {
    values.iter().fold(0.0, |m, x| f64::max(m, (x - c).abs()))
}

/// Adaptive Simpson on `[a, b]`, independent of the library quadrature.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (fa, fb, fm) = (f(lo), f(hi), f(0.5 * (lo + hi)));
    let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    sign * rec(f, lo, hi, fa, fm, fb, whole, tol, 50)
}

/// `∫₁ˢ f`, split at powers of two so each Simpson call sees a tame integrand.
pub fn integral_from_one(f: &dyn Fn(f64) -> f64, s: f64) -> f64 {
    let mut knots = vec![1.0];
    let mut x = 1.0;
    if s > 1.0 {
        while x * 2.0 < s {
            x *= 2.0;
            knots.push(x);
        }
    } else {
        while x / 2.0 > s {
            x /= 2.0;
            knots.push(x);
        }
    }
    knots.push(s);
    knots.windows(2).map(|w| simpson(f, w[0], w[1], 1e-14)).sum()
}

/// Straight-loop evaluation of the Lyapunov functional on a 2D grid, with the
/// mean-zero potential from a dense solve:
/// `½‖∇U‖² + ∫[2Γ₁(v) − ⟨u⟩Γ(v) − γ₁(⟨u⟩)v + K* n] + |Ω|(γ₁(⟨u⟩)⟨u⟩ + ⟨u⟩Γ(⟨u⟩) − 2Γ₁(⟨u⟩))`.
pub fn lyapunov_oracle(
    state: &chemosim::solver::State,
    kstar: f64,
    big_gamma: &dyn Fn(f64) -> f64,
    big_gamma1: &dyn Fn(f64) -> f64,
    gamma1: &dyn Fn(f64) -> f64,
) -> f64 {
    use nalgebra::{DMatrix, DVector};
    let grid = state.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    let (hx, hy) = (grid.spacing()[0], grid.spacing()[1]);
    let vol = hx * hy;
    let len = nx * ny;
    let (u, v, n) = (state.u.values(), state.v.values(), state.n.values());
    let u_mean = u.iter().sum::<f64>() / len as f64;

    // -ΔU = u - ⟨u⟩ with zero flux, pinned to mean zero by a rank-one shift.
    let mut a = DMatrix::from_element(len, len, 1.0 / len as f64);
    for j in 0..ny {
        for i in 0..nx {
            let k = i + nx * j;
            let nb = [
                (i > 0, k.wrapping_sub(1), hx),
                (i + 1 < nx, k + 1, hx),
                (j > 0, k.wrapping_sub(nx), hy),
                (j + 1 < ny, k + nx, hy),
            ];
            for (ok, other, h) in nb {
                if ok {
                    a[(k, k)] += 1.0 / (h * h);
                    a[(k, other)] -= 1.0 / (h * h);
                }
            }
        }
    }
    let rhs = DVector::from_iterator(len, u.iter().map(|x| x - u_mean));
    let pot = a.lu().solve(&rhs).unwrap();
    let mut energy = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let k = i + nx * j;
            if i + 1 < nx {
                energy += ((pot[k + 1] - pot[k]) / hx).powi(2);
            }
            if j + 1 < ny {
                energy += ((pot[k + nx] - pot[k]) / hy).powi(2);
            }
        }
    }
    energy *= vol;

    let mut total = 0.5 * energy;
    for k in 0..len {
        total += vol * (2.0 * big_gamma1(v[k]) - u_mean * big_gamma(v[k]) - gamma1(u_mean) * v[k] + kstar * n[k]);
    }
    total + grid.measure() * (gamma1(u_mean) * u_mean + u_mean * big_gamma(u_mean) - 2.0 * big_gamma1(u_mean))
}
