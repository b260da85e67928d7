//! Real roots of low-degree polynomials.

use crate::scalar::Scalar;

const BISECTION_STEPS: usize = 200;

fn eval<T: Scalar>(c: &[T], t: T) -> T {
    c.iter().fold(T::zero(), |acc, &a| acc * t + a)
}

fn derivative<T: Scalar>(c: &[T]) -> Vec<T> {
    let deg = c.len() - 1;
    c[..deg]
        .iter()
        .enumerate()
        .map(|(i, &a)| a * T::of((deg - i) as f64))
        .collect()
}

fn bisect<T: Scalar>(c: &[T], mut lo: T, mut hi: T) -> T {
    let mut f_lo = eval(c, lo);
    for _ in 0..BISECTION_STEPS {
        let mid = (lo + hi) / T::of(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = eval(c, mid);
        if f_mid == T::zero() {
            return mid;
        }
        if (f_mid > T::zero()) == (f_lo > T::zero()) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / T::of(2.0)
}

/// Real roots of `c[0] tⁿ + … + c[n]`, coefficients from the highest degree
/// down. Roots are isolated between consecutive critical points, which are
/// found recursively from the derivative.
pub fn real_roots<T: Scalar>(c: &[T]) -> Vec<T> {
    let first = c.iter().position(|&a| a != T::zero());
    let Some(first) = first else { return Vec::new() };
    let c = &c[first..];
    match c.len() {
        0 | 1 => return Vec::new(),
        2 => return vec![-c[1] / c[0]],
        _ => {}
    }
    let bound = T::one()
        + c[1..]
            .iter()
            .fold(T::zero(), |m, &a| m.max((a / c[0]).abs()));
    let mut knots = vec![-bound];
    let mut crit = real_roots(&derivative(c));
    crit.retain(|t| t.abs() < bound);
    crit.sort_by(|a, b| a.partial_cmp(b).unwrap());
    knots.extend(crit);
    knots.push(bound);
    let mut roots: Vec<T> = Vec::new();
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (eval(c, a), eval(c, b));
        if fa == T::zero() {
            roots.push(a);
        } else if (fa > T::zero()) != (fb > T::zero()) && fb != T::zero() {
            roots.push(bisect(c, a, b));
        }
    }
    if eval(c, bound) == T::zero() {
        roots.push(bound);
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_known_polynomials() {
        let mut r = real_roots(&[1.0f64, 0.0, -1.0]);
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((r[0] + 1.0).abs() < 1e-12 && (r[1] - 1.0).abs() < 1e-12);
        // (t - 1)(t - 2)(t + 3)(t - 0.5)
        let c = [1.0f64, -0.5, -7.0, 9.5, -3.0];
        let mut r = real_roots(&c);
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect = [-3.0, 0.5, 1.0, 2.0];
        assert_eq!(r.len(), 4);
        for (a, b) in r.iter().zip(expect) {
            assert!((a - b).abs() < 1e-9, "{r:?}");
        }
        assert!(real_roots(&[1.0f64, 0.0, 1.0]).is_empty());
    }
}
