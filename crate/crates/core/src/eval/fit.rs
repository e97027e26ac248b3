use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("x and y lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("non-finite input")]
    NonFinite,
    #[error("degenerate design matrix")]
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitKind {
    /// `y = a x^2 + b x + c`
    Quadratic,
    /// `y = a e^(b x) + c`
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveFit {
    pub kind: FitKind,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Residual sum of squares.
    pub rss: f64,
}

impl CurveFit {
    pub fn eval(&self, x: f64) -> f64 {
        match self.kind {
            FitKind::Quadratic => (self.a * x + self.b) * x + self.c,
            FitKind::Exponential => self.a * (self.b * x).exp() + self.c,
        }
    }

    pub fn coefficients(&self) -> (f64, f64, f64) {
        (self.a, self.b, self.c)
    }
}

fn check(xs: &[f64], ys: &[f64]) -> Result<(), FitError> {
    if xs.len() != ys.len() {
        return Err(FitError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(FitError::TooFewPoints { needed: 3, got: xs.len() });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite);
    }
    let mut distinct = xs.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(FitError::Degenerate);
    }
    Ok(())
}

fn rss(xs: &[f64], ys: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    xs.iter().zip(ys).map(|(&x, &y)| (f(x) - y).powi(2)).sum()
}

/// Least-squares parabola through the points via the normal equations.
pub fn fit_quadratic(xs: &[f64], ys: &[f64]) -> Result<CurveFit, FitError> {
    check(xs, ys)?;
    let mut ata = Matrix3::zeros();
    let mut aty = Vector3::zeros();
    for (&x, &y) in xs.iter().zip(ys) {
        let row = Vector3::new(x * x, x, 1.0);
        ata += row * row.transpose();
        aty += row * y;
    }
    let sol = ata.lu().solve(&aty).ok_or(FitError::Degenerate)?;
    let mut fit = CurveFit {
        kind: FitKind::Quadratic,
        a: sol[0],
        b: sol[1],
        c: sol[2],
        rss: 0.0,
    };
    fit.rss = rss(xs, ys, |x| fit.eval(x));
    Ok(fit)
}

/// Best `(a, c)` for a fixed rate `b`, with its residual.
fn linear_part(xs: &[f64], ys: &[f64], b: f64) -> Option<(f64, f64, f64)> {
    let mut m = Matrix2::zeros();
    let mut r = Vector2::zeros();
    for (&x, &y) in xs.iter().zip(ys) {
        let row = Vector2::new((b * x).exp(), 1.0);
        m += row * row.transpose();
        r += row * y;
    }
    if !m.iter().all(|v| v.is_finite()) || m.determinant().abs() <= 1e-12 * m[(0, 0)] * m[(1, 1)] {
        return None;
    }
    let s = m.lu().solve(&r)?;
    let e = rss(xs, ys, |x| s[0] * (b * x).exp() + s[1]);
    e.is_finite().then_some((s[0], s[1], e))
}

/// Least-squares `y = a e^(b x) + c`: a coarse grid over `b` followed by a
/// golden-section refinement, with `a` and `c` solved linearly for each `b`.
pub fn fit_exponential(xs: &[f64], ys: &[f64]) -> Result<CurveFit, FitError> {
    check(xs, ys)?;
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let limit = 30.0 / (hi - lo);
    let cost = |b: f64| linear_part(xs, ys, b).map_or(f64::INFINITY, |(_, _, e)| e);

    const GRID: usize = 600;
    let step = 2.0 * limit / GRID as f64;
    let grid: Vec<f64> = (0..=GRID).map(|i| -limit + step * i as f64).collect();
    let best = grid
        .iter()
        .map(|&b| (b, cost(b)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("grid is non-empty");
    if !best.1.is_finite() {
        return Err(FitError::Degenerate);
    }

    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (best.0 - step, best.0 + step);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let (mut f1, mut f2) = (cost(x1), cost(x2));
    for _ in 0..200 {
        if (b - a).abs() < 1e-15 * (1.0 + best.0.abs()) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = cost(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = cost(x2);
        }
    }
    let rate = [(best.0, best.1), (x1, f1), (x2, f2)]
        .into_iter()
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .expect("non-empty")
        .0;
    let (ca, cc, e) = linear_part(xs, ys, rate).ok_or(FitError::Degenerate)?;
    Ok(CurveFit {
        kind: FitKind::Exponential,
        a: ca,
        b: rate,
        c: cc,
        rss: e,
    })
}

/// Relative increase of the tracking error under disturbance, in percent.
/// `None` when the undisturbed error is not positive.
pub fn disturbance_sensitivity(ideal: f64, perturbed: f64) -> Option<f64> {
    (ideal > 0.0).then(|| 100.0 * (perturbed - ideal) / ideal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quadratic_recovers_exact_polynomial() {
        let xs = [-2.0, -1.0, 0.0, 0.5, 1.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x * x + 1.0).collect();
        let f = fit_quadratic(&xs, &ys).unwrap();
        assert!((f.a - 2.0).abs() < 1e-9 && f.b.abs() < 1e-9 && (f.c - 1.0).abs() < 1e-9);
    }

    #[test]
    fn three_points_interpolate() {
        let f = fit_quadratic(&[0.1, 0.5, 0.9], &[30.0, 60.0, 45.0]).unwrap();
        assert!(f.rss < 1e-18);
        assert!((f.eval(0.5) - 60.0).abs() < 1e-10);
    }

    #[test]
    fn exponential_on_exact_data() {
        let xs: Vec<f64> = (0..8).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = xs.iter().map(|x: &f64| x.exp()).collect();
        let f = fit_exponential(&xs, &ys).unwrap();
        assert!(f.rss < 1e-6, "{f:?}");
        assert!((f.b - 1.0).abs() < 1e-3);
    }

    #[test]
    fn exponential_decay_with_offset() {
        let xs = [0.1, 0.3, 0.5, 0.7, 0.9];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * (-4.0 * x).exp() + 0.5).collect();
        let f = fit_exponential(&xs, &ys).unwrap();
        assert!(f.rss < 1e-10);
        assert!((f.a - 3.0).abs() < 1e-3 && (f.b + 4.0).abs() < 1e-3 && (f.c - 0.5).abs() < 1e-3);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(fit_quadratic(&[1.0, 2.0], &[1.0, 2.0]), Err(FitError::TooFewPoints { needed: 3, got: 2 }));
        assert_eq!(fit_quadratic(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0]), Err(FitError::Degenerate));
        assert_eq!(fit_exponential(&[1.0, 2.0, 3.0], &[1.0, 2.0]), Err(FitError::LengthMismatch(3, 2)));
        assert_eq!(fit_exponential(&[1.0, f64::NAN, 3.0], &[1.0, 2.0, 3.0]), Err(FitError::NonFinite));
    }

    #[test]
    fn sensitivity_examples() {
        let s = disturbance_sensitivity(0.45, 0.52).unwrap();
        assert!((s - 700.0 / 45.0).abs() < 1e-9);
        assert_eq!(disturbance_sensitivity(1.3, 1.3), Some(0.0));
        assert_eq!(disturbance_sensitivity(0.7, 1.4), Some(100.0));
        assert_eq!(disturbance_sensitivity(0.0, 1.0), None);
    }

    proptest! {
        #[test]
        fn quadratic_fit_never_worse_than_any_parabola(
            ys in prop::collection::vec(-10.0..10.0f64, 5),
            da in -1.0..1.0f64, db in -1.0..1.0f64, dc in -1.0..1.0f64,
        ) {
            let xs = [0.0, 0.25, 0.5, 0.75, 1.0];
            let f = fit_quadratic(&xs, &ys).unwrap();
            let other = rss(&xs, &ys, |x| (f.a + da) * x * x + (f.b + db) * x + f.c + dc);
            prop_assert!(f.rss <= other + 1e-9);
        }
    }
}
