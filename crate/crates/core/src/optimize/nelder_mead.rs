//! Nelder–Mead simplex search over an unbounded `R^N`.
//!
//! The objective may abort the search with [`Stop`] (used for evaluation
//! budgets); the best vertex seen so far is then discarded by the caller,
//! which tracks its own incumbent.

/// Raised by an objective to end the search early.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stop;

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Stop once every vertex is within this distance of the best (max norm).
    pub x_tolerance: f64,
    /// Stop once the objective spread over the simplex falls below this.
    pub f_tolerance: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            x_tolerance: 1e-10,
            f_tolerance: 1e-15,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadResult<const N: usize> {
    pub x: [f64; N],
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn axpy<const N: usize>(a: &[f64; N], t: f64, b: &[f64; N]) -> [f64; N] {
    // a + t (b - a)
    std::array::from_fn(|k| a[k] + t * (b[k] - a[k]))
}

fn sort_simplex<const N: usize>(pts: &mut [([f64; N], f64)]) {
    pts.sort_by(|a, b| a.1.total_cmp(&b.1));
}

/// Minimizes `f` from `x0` with an axis-aligned initial simplex of size `step`.
pub fn minimize<const N: usize, F>(
    mut f: F,
    x0: [f64; N],
    step: f64,
    opts: NelderMeadOptions,
) -> Result<NelderMeadResult<N>, Stop>
where
    F: FnMut(&[f64; N]) -> Result<f64, Stop>,
{
    let mut simplex: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
    simplex.push((x0, f(&x0)?));
    for k in 0..N {
        let mut x = x0;
        x[k] += step;
        simplex.push((x, f(&x)?));
    }
    sort_simplex(&mut simplex);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        let best = simplex[0];
        let worst = simplex[N];
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(best.0.iter()).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread = if worst.1.is_finite() { worst.1 - best.1 } else { f64::INFINITY };
        if size <= opts.x_tolerance && spread <= opts.f_tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = [0.0; N];
        for (x, _) in &simplex[..N] {
            for k in 0..N {
                centroid[k] += x[k] / N as f64;
            }
        }
        let reflected = axpy(&centroid, -1.0, &worst.0);
        let fr = f(&reflected)?;
        if fr < best.1 {
            let expanded = axpy(&centroid, -2.0, &worst.0);
            let fe = f(&expanded)?;
            simplex[N] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[N - 1].1 {
            simplex[N] = (reflected, fr);
        } else {
            let (contracted, fc) = if fr < worst.1 {
                let c = axpy(&centroid, -0.5, &worst.0);
                let fc = f(&c)?;
                (c, fc.min(f64::INFINITY))
            } else {
                let c = axpy(&centroid, 0.5, &worst.0);
                (c, f(&c)?)
            };
            if fc < worst.1.min(fr) {
                simplex[N] = (contracted, fc);
            } else {
                for v in simplex.iter_mut().skip(1) {
                    let x = axpy(&best.0, 0.5, &v.0);
                    *v = (x, f(&x)?);
                }
            }
        }
        sort_simplex(&mut simplex);
    }
    Ok(NelderMeadResult {
        x: simplex[0].0,
        f: simplex[0].1,
        iterations,
        converged,
    })
}
