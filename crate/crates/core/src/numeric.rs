//! Small numerical kernels shared by the solvers: a classical RK4 step,
//! adaptive Simpson quadrature, bracketed root finding and golden-section
//! minimization.

/// One classical fourth-order Runge-Kutta step for a planar autonomous
/// system. The vector field may fail (e.g. infeasible algebra at a stage).
pub fn rk4_step<F, E>(state: [f64; 2], dt: f64, mut field: F) -> Result<[f64; 2], E>
where
    F: FnMut([f64; 2]) -> Result<[f64; 2], E>,
{
    let add = |x: [f64; 2], k: [f64; 2], h: f64| [x[0] + h * k[0], x[1] + h * k[1]];
    let k1 = field(state)?;
    let k2 = field(add(state, k1, 0.5 * dt))?;
    let k3 = field(add(state, k2, 0.5 * dt))?;
    let k4 = field(add(state, k3, dt))?;
    Ok([
        state[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        state[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ])
}

const SIMPSON_MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`. Fallible integrands abort the whole integral on the first error.
pub fn adaptive_simpson<F, E>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(&mut f, a, b, fa, fm, fb, whole, tol, SIMPSON_MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F, E>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Outcome of [`find_root`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
}

/// Scans `[lo, hi]` in `subdivisions` equal steps for the first sign change
/// of `g`, bisects the bracket down to `bisect_tol`, then polishes with
/// secant steps kept inside the bracket. Points where `g` fails are skipped
/// during the scan. Returns `None` when no sign change exists.
pub fn find_root<G>(mut g: G, lo: f64, hi: f64, subdivisions: usize, residual_tol: f64) -> Option<Root>
where
    G: FnMut(f64) -> Option<f64>,
{
    let n = subdivisions.max(1);
    let h = (hi - lo) / n as f64;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=n {
        let x = lo + h * i as f64;
        let Some(gx) = g(x) else {
            prev = None;
            continue;
        };
        if gx == 0.0 {
            return Some(Root { x, residual: 0.0 });
        }
        if let Some((xp, gp)) = prev {
            if gp.signum() != gx.signum() {
                return refine(&mut g, (xp, gp), (x, gx), residual_tol);
            }
        }
        prev = Some((x, gx));
    }
    None
}

fn refine<G>(g: &mut G, mut a: (f64, f64), mut b: (f64, f64), residual_tol: f64) -> Option<Root>
where
    G: FnMut(f64) -> Option<f64>,
{
    // bisection to a narrow bracket
    for _ in 0..60 {
        if (b.0 - a.0).abs() < 1e-9 {
            break;
        }
        let m = 0.5 * (a.0 + b.0);
        let gm = g(m)?;
        if gm == 0.0 {
            return Some(Root { x: m, residual: 0.0 });
        }
        if gm.signum() == a.1.signum() {
            a = (m, gm);
        } else {
            b = (m, gm);
        }
    }
    // secant polish, falling back to bisection if a step leaves the bracket
    let mut best = if a.1.abs() < b.1.abs() { a } else { b };
    for _ in 0..50 {
        if best.1.abs() < residual_tol {
            break;
        }
        let denom = b.1 - a.1;
        let mut x = if denom != 0.0 {
            b.0 - b.1 * (b.0 - a.0) / denom
        } else {
            0.5 * (a.0 + b.0)
        };
        let (lo, hi) = (a.0.min(b.0), a.0.max(b.0));
        if !(x > lo && x < hi) {
            x = 0.5 * (a.0 + b.0);
        }
        let gx = g(x)?;
        if gx.signum() == a.1.signum() {
            a = (x, gx);
        } else {
            b = (x, gx);
        }
        if gx.abs() < best.1.abs() {
            best = (x, gx);
        }
        if (b.0 - a.0).abs() < f64::EPSILON * 4.0 * best.0.abs().max(1.0) {
            break;
        }
    }
    Some(Root {
        x: best.0,
        residual: best.1,
    })
}

/// Golden-section search for a minimum of a unimodal `f` on `[a, b]`.
/// Returns `(argmin, min)`.
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    #[test]
    fn rk4_exponential_decay() {
        let mut x = [1.0, 0.0];
        for _ in 0..100 {
            x = rk4_step(x, 0.01, |s| Ok::<_, Infallible>([-s[0], 0.0])).unwrap();
        }
        assert!((x[0] - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn simpson_polynomial_and_trig() {
        let v = adaptive_simpson(|x| Ok::<_, Infallible>(x * x * x), 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        let v = adaptive_simpson(|x: f64| Ok::<_, Infallible>(x.sin()), 0.0, std::f64::consts::PI, 1e-10).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
        let v = adaptive_simpson(|x: f64| Ok::<_, Infallible>(x.sin()), 1.0, 1.0, 1e-10).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn simpson_propagates_errors() {
        let r = adaptive_simpson(|x| if x > 0.5 { Err("boom") } else { Ok(x) }, 0.0, 1.0, 1e-8);
        assert_eq!(r, Err("boom"));
    }

    #[test]
    fn root_of_cosine() {
        let r = find_root(|x: f64| Some(x.cos()), 0.0, 3.0, 200, 1e-14).unwrap();
        assert!((r.x - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(find_root(|x: f64| Some(x * x + 1.0), -1.0, 1.0, 200, 1e-12).is_none());
    }

    #[test]
    fn golden_section_parabola() {
        let (x, fx) = golden_section_min(|x| (x - 0.3) * (x - 0.3) + 2.0, -1.0, 1.0, 1e-10);
        // f is flat to rounding within ~1e-8 of the minimum
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 2.0).abs() < 1e-14);
    }
}
