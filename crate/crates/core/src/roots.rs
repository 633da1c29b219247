//! Bracketed root finding: bisection safeguarding secant steps.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

/// Samples `f` on `steps` equal intervals of `[lo, hi]` and returns every
/// interval across which it changes sign (or hits zero exactly).
pub fn scan_brackets<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    lo: f64,
    hi: f64,
    steps: usize,
) -> Result<(Vec<Bracket>, ScanSummary), E> {
    let mut out = Vec::new();
    let mut summary = ScanSummary {
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
    };
    let h = (hi - lo) / steps as f64;
    let mut x0 = lo;
    let mut f0 = f(x0)?;
    summary.push(f0);
    for i in 1..=steps {
        let x1 = if i == steps { hi } else { lo + h * i as f64 };
        let f1 = f(x1)?;
        summary.push(f1);
        if f0 == 0.0 || (f0.signum() != f1.signum() && f1 != 0.0) || (f1 == 0.0 && i == steps) {
            out.push(Bracket { lo: x0, hi: x1 });
        }
        x0 = x1;
        f0 = f1;
    }
    Ok((out, summary))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSummary {
    pub min: f64,
    pub max: f64,
}

impl ScanSummary {
    fn push(&mut self, v: f64) {
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }
}

/// Refines a sign-change bracket until |f| ≤ `ftol` or the bracket is
/// narrower than `xtol`. Each iteration tries a secant step and falls back to
/// bisection whenever the secant point leaves the bracket or fails to halve it.
pub fn refine<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    bracket: Bracket,
    ftol: f64,
    xtol: f64,
) -> Result<f64, E> {
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    for _ in 0..200 {
        if best.1.abs() <= ftol || (b - a).abs() <= xtol {
            break;
        }
        let width = (b - a).abs();
        let secant = b - fb * (b - a) / (fb - fa);
        let mid = 0.5 * (a + b);
        let x = if secant.is_finite() && secant > a.min(b) && secant < a.max(b) {
            secant
        } else {
            mid
        };
        let fx = f(x)?;
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        // secant stalling on one side: force a bisection
        if (b - a).abs() > 0.5 * width {
            let m = 0.5 * (a + b);
            let fm = f(m)?;
            if fm.abs() < best.1.abs() {
                best = (m, fm);
            }
            if fm == 0.0 {
                return Ok(m);
            }
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
                fb = fm;
            }
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn ok(f: impl Fn(f64) -> f64) -> impl FnMut(f64) -> Result<f64, Infallible> {
        move |x| Ok(f(x))
    }

    #[test]
    fn finds_sqrt_two() {
        let r = refine(ok(|x| x * x - 2.0), Bracket { lo: 0.0, hi: 2.0 }, 1e-15, 0.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn scan_finds_every_sign_change() {
        let (b, s) = scan_brackets(ok(|x: f64| x.sin()), 0.5, 10.0, 1000).unwrap();
        assert_eq!(b.len(), 3);
        assert!(s.min < -0.99 && s.max > 0.99);
        for (br, k) in b.iter().zip(1..) {
            let r = refine(ok(|x: f64| x.sin()), *br, 1e-14, 0.0).unwrap();
            assert!((r - k as f64 * std::f64::consts::PI).abs() < 1e-12);
        }
    }

    #[test]
    fn handles_flat_tails() {
        // secant is poor here; bisection must still converge
        let f = |x: f64| (x - 0.3).powi(3);
        let r = refine(ok(f), Bracket { lo: -5.0, hi: 1.0 }, 1e-30, 1e-13).unwrap();
        assert!((r - 0.3).abs() < 1e-9);
    }
}
