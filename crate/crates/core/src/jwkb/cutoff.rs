//! Smooth plateau cutoff: 1 on `|s| < delta/2`, 0 on `|s| > delta`, built
//! from the `exp(-1/t)` bump so all derivatives vanish at both seams.

/// Value, first and second derivative of the cutoff at `s`.
pub fn cutoff_eval(delta: f64, s: f64) -> (f64, f64, f64) {
    debug_assert!(delta > 0.0);
    let r = s.abs();
    if r <= 0.5 * delta {
        return (1.0, 0.0, 0.0);
    }
    if r >= delta {
        return (0.0, 0.0, 0.0);
    }
    let t = 2.0 - 2.0 * r / delta;
    let (g, dg, ddg) = step(t);
    let dt = -2.0 * s.signum() / delta;
    (g, dg * dt, ddg * dt * dt)
}

/// `q(t) = exp(-1/t)` for `t > 0` with its first two derivatives.
fn bump(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let q = (-1.0 / t).exp();
    let t2 = t * t;
    (q, q / t2, q * (1.0 - 2.0 * t) / (t2 * t2))
}

/// `g(t) = q(t) / (q(t) + q(1 - t))`, rising from 0 at `t = 0` to 1 at `t = 1`.
fn step(t: f64) -> (f64, f64, f64) {
    let (a, da, dda) = bump(t);
    let (b, qb1, qb2) = bump(1.0 - t);
    // d/dt q(1 - t) = -q'(1 - t), d^2/dt^2 q(1 - t) = q''(1 - t)
    let (db, ddb) = (-qb1, qb2);
    let d = a + b;
    let num = da * b - a * db;
    let g = a / d;
    let dg = num / (d * d);
    let ddg = (dda * b - a * ddb) / (d * d) - 2.0 * num * (da + db) / (d * d * d);
    (g, dg, ddg)
}
