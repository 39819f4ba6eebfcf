//! Derivative-free local searches: Nelder–Mead simplex minimization and
//! golden-section coordinate sweeps.
//!
//! The objectives here are built from sorted moduli and are only piecewise
//! smooth, so callers wrap these in seeded random restarts.

/// Settings for [`nelder_mead`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NelderMeadConfig {
    pub max_iters: usize,
    /// Initial simplex edge length.
    pub step: f64,
    /// Stop once the spread of simplex values falls below this.
    pub f_tol: f64,
    /// ...and the simplex diameter falls below this.
    pub x_tol: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            step: 0.3,
            f_tol: 1e-12,
            x_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Minimizes `f` from `x0` with the standard reflection (1), expansion (2),
/// contraction (1/2) and shrink (1/2) coefficients.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], cfg: &NelderMeadConfig) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], evaluations: &mut usize| {
        *evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if dim == 0 {
        let value = eval(x0, &mut evaluations);
        return Minimum {
            x: Vec::new(),
            value,
            iterations: 0,
            evaluations,
        };
    }

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), eval(x0, &mut evaluations)));
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] += cfg.step;
        let v = eval(&x, &mut evaluations);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    while iterations < cfg.max_iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            })
            .fold(0.0f64, f64::max);
        if (worst - best).abs() <= cfg.f_tol && diameter <= cfg.x_tol {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..dim] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / dim as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let xr = along(-1.0);
        let fr = eval(&xr, &mut evaluations);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evaluations);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[dim].1 {
            let xc = along(-0.5);
            let fc = eval(&xc, &mut evaluations);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = eval(&xc, &mut evaluations);
            (xc, fc)
        };
        if fc < simplex[dim].1.min(fr) {
            simplex[dim] = (xc, fc);
            continue;
        }
        // shrink towards the best vertex
        let x_best = simplex[0].0.clone();
        for (x, v) in simplex.iter_mut().skip(1) {
            for (xi, bi) in x.iter_mut().zip(&x_best) {
                *xi = bi + 0.5 * (*xi - bi);
            }
            *v = eval(x, &mut evaluations);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum {
        x,
        value,
        iterations,
        evaluations,
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximizer of `f` on `[lo, hi]`.
///
/// Returns `(argmax, max)` among all points evaluated, endpoints included,
/// so a non-unimodal `f` still yields the best value seen.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, iters: usize) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let mut best = (lo, f(lo));
    let fh = f(hi);
    if fh > best.1 {
        best = (hi, fh);
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc > best.1 {
            best = (c, fc);
        }
        if fd > best.1 {
            best = (d, fd);
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Coordinate-wise golden-section ascent of a scale-invariant objective.
///
/// Each sweep maximizes over one coordinate at a time on
/// `[−span·‖x‖₂, span·‖x‖₂]`, then rescales `x` to unit length.
pub fn coordinate_ascent<F>(mut f: F, x0: &[f64], sweeps: usize, iters: usize, span: f64) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> f64,
{
    let mut x = x0.to_vec();
    let mut best = f(&x);
    for _ in 0..sweeps {
        for i in 0..x.len() {
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let radius = span * norm.max(f64::MIN_POSITIVE);
            let mut trial = x.clone();
            let (t, v) = golden_section_max(
                |t| {
                    trial[i] = t;
                    f(&trial)
                },
                -radius,
                radius,
                iters,
            );
            if v > best {
                best = v;
                x[i] = t;
            }
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            x.iter_mut().for_each(|v| *v /= norm);
        }
    }
    (x, best)
}
