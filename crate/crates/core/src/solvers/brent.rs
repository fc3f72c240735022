//! Brent's bracketing root finder (inverse quadratic interpolation with
//! secant and bisection fallbacks).

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootResult {
    pub root: f64,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Finds a root of `f` in `[a, b]` given `fa = f(a)` and `fb = f(b)` of
/// opposite sign (or one of them zero). Stops once the bracket half-width is
/// below `2·ε·|x| + tol/2`.
pub fn brent_root<F, E>(mut f: F, a: f64, b: f64, fa: f64, fb: f64, tol: f64, max_iter: usize) -> Result<RootResult, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    if fa == 0.0 {
        return Ok(RootResult {
            root: a,
            value: fa,
            evaluations: 0,
            converged: true,
        });
    }
    let mut c = b;
    let mut fc = fb;
    let mut d = b - a;
    let mut e = d;
    let mut evaluations = 0;

    for _ in 0..max_iter {
        if (fb > 0.0 && fc > 0.0) || (fb < 0.0 && fc < 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(RootResult {
                root: b,
                value: fb,
                evaluations,
                converged: true,
            });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b)?;
        evaluations += 1;
    }
    Ok(RootResult {
        root: b,
        value: fb,
        evaluations,
        converged: false,
    })
}
