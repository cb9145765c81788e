//! Deterministic bracketed 1-D maximisation: coarse grid scan, then golden-section
//! refinement around the best grid point.

/// Result of [`maximize_bracketed`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Argmax {
    /// Maximum strictly inside the bracket.
    Interior { x: f64, value: f64 },
    /// Best grid point sits on the bracket edge; no interior maximum was found.
    Boundary { x: f64, value: f64 },
}

impl Argmax {
    pub fn interior(self) -> Option<(f64, f64)> {
        match self {
            Argmax::Interior { x, value } => Some((x, value)),
            Argmax::Boundary { .. } => None,
        }
    }

    pub fn x(self) -> f64 {
        match self {
            Argmax::Interior { x, .. } | Argmax::Boundary { x, .. } => x,
        }
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Maximise `f` over `(lo, hi]` sampled at `grid` evenly spaced points
/// `lo + i (hi - lo) / grid`, `i = 1..=grid`, then refine with golden-section
/// search on the neighbouring cells until the bracket is narrower than `tol`.
pub fn maximize_bracketed(f: impl Fn(f64) -> f64, lo: f64, hi: f64, grid: usize, tol: f64) -> Argmax {
    assert!(grid >= 3 && hi > lo);
    let step = (hi - lo) / grid as f64;
    let at = |i: usize| lo + step * i as f64;

    let mut best_i = 1;
    let mut best_v = f64::NEG_INFINITY;
    for i in 1..=grid {
        let v = f(at(i));
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    if best_i == 1 || best_i == grid {
        return Argmax::Boundary {
            x: at(best_i),
            value: best_v,
        };
    }

    let (mut a, mut b) = (at(best_i - 1), at(best_i + 1));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc > fd {
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
    let x = 0.5 * (a + b);
    let value = f(x);
    if value >= best_v {
        Argmax::Interior { x, value }
    } else {
        Argmax::Interior {
            x: at(best_i),
            value: best_v,
        }
    }
}
