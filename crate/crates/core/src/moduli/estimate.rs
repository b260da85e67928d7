use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RadiusLadder, Settings};
use crate::error::Result;
use crate::metric::Point;
use crate::scalar::{ExtReal, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Finite,
    Divergent,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Rung<T: Scalar> {
    pub radius: T,
    /// Supremum over every sample taken inside this rung's ball, including
    /// the samples of the smaller rungs.
    pub value: ExtReal<T>,
    /// Supremum over this rung's own sample set.
    pub raw: ExtReal<T>,
    pub samples: usize,
    /// Points attaining `raw`, e.g. `[x]` or `[p, x]`.
    pub witness: Vec<Point<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct ModulusEstimate<T: Scalar> {
    pub quantity: String,
    pub rungs: Vec<Rung<T>>,
    pub limiting_value: ExtReal<T>,
    pub verdict: Verdict,
    pub boundary_contaminated: bool,
    /// Expected absolute sampling error of a finite limiting value.
    pub grid_tolerance: ExtReal<T>,
}

impl<T: Scalar> ModulusEstimate<T> {
    pub fn is_finite(&self) -> bool {
        self.verdict == Verdict::Finite
    }

    pub fn values(&self) -> Vec<ExtReal<T>> {
        self.rungs.iter().map(|r| r.value).collect()
    }

    /// `(radius, value)` pairs with the raw per-rung supremum as a third
    /// column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("radius,value,raw\n");
        for r in &self.rungs {
            let _ = writeln!(out, "{},{},{}", r.radius, r.value, r.raw);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimates serialize")
    }
}

/// Best sample of one rung.
#[derive(Clone, Debug)]
pub(crate) struct RungBest<T: Scalar> {
    pub samples: usize,
    pub value: ExtReal<T>,
    pub witness: Vec<Point<T>>,
    pub near_boundary: bool,
}

impl<T: Scalar> RungBest<T> {
    pub fn vacuous() -> Self {
        Self {
            samples: 0,
            value: ExtReal::zero(),
            witness: Vec::new(),
            near_boundary: false,
        }
    }
}

/// Evaluates `f` on every item in parallel and returns the index of the
/// largest key, ties going to the lowest index. `None` results are skipped.
pub(crate) fn par_argmax<I, K, V, F>(items: &[I], f: F) -> (usize, Option<(usize, K, V)>)
where
    I: Sync,
    K: Send + PartialOrd,
    V: Send,
    F: Fn(&I) -> Option<(K, V)> + Sync + Send,
{
    let values: Vec<Option<(K, V)>> = items.par_iter().map(f).collect();
    let mut count = 0;
    let mut best: Option<(usize, K, V)> = None;
    for (i, kv) in values.into_iter().enumerate() {
        let Some((k, v)) = kv else { continue };
        count += 1;
        let better = match &best {
            None => true,
            Some((_, b, _)) => k.partial_cmp(b) == Some(Ordering::Greater),
        };
        if better {
            best = Some((i, k, v));
        }
    }
    (count, best)
}

fn grows<T: Scalar>(a: ExtReal<T>, b: ExtReal<T>, factor: T) -> bool {
    match (a, b) {
        (_, ExtReal::PosInf) => !a.is_pos_inf(),
        (ExtReal::Finite(a), ExtReal::Finite(b)) => b > a * factor && b > T::zero(),
        _ => false,
    }
}

/// Classifies raw per-rung suprema, ordered from the largest radius down.
pub(crate) fn classify<T: Scalar>(raw: &[ExtReal<T>], values: &[ExtReal<T>], s: &Settings<T>) -> (Verdict, ExtReal<T>) {
    let k = raw.len();
    let last = values[k - 1];
    if last.is_pos_inf() {
        return (Verdict::Divergent, ExtReal::PosInf);
    }
    let growth = T::one() + s.tol.conv;
    let growing = k >= 4 && (k - 3..k).all(|i| grows(raw[i - 1], raw[i], growth));
    let capped = k >= 3 && raw[k - 3..].iter().all(|v| !v.at_most(s.tol.cap));
    if growing || capped {
        return (Verdict::Divergent, ExtReal::PosInf);
    }
    if grows(raw[k - 2], raw[k - 1], growth) {
        return (Verdict::Inconclusive, last);
    }
    (Verdict::Finite, last)
}

/// Runs `rung` on every radius of the ladder and assembles the estimate.
pub(crate) fn ladder_estimate<T, F>(
    quantity: &str,
    ladder: &RadiusLadder<T>,
    s: &Settings<T>,
    density: usize,
    rung: F,
) -> Result<ModulusEstimate<T>>
where
    T: Scalar,
    F: Fn(T) -> Result<RungBest<T>>,
{
    ladder.validate()?;
    let radii = ladder.radii();
    let mut bests = Vec::with_capacity(radii.len());
    for &r in &radii {
        bests.push(rung(r)?);
    }
    let raw: Vec<ExtReal<T>> = bests.iter().map(|b| b.value).collect();
    let mut values = raw.clone();
    for i in (0..values.len().saturating_sub(1)).rev() {
        values[i] = values[i].max(values[i + 1]);
    }
    let (verdict, limiting_value) = classify(&raw, &values, s);
    let boundary_contaminated = bests.iter().any(|b| b.near_boundary);
    let rel = T::of(2.0) / T::of((density.max(2) - 1) as f64)
        + s.search.rel_tol * (T::one() + s.search.safety);
    let grid_tolerance = match limiting_value {
        ExtReal::Finite(v) => ExtReal::Finite(v.abs() * rel),
        other => other,
    };
    let rungs = radii
        .into_iter()
        .zip(bests)
        .zip(values)
        .map(|((radius, b), value)| Rung {
            radius,
            value,
            raw: b.value,
            samples: b.samples,
            witness: b.witness,
        })
        .collect();
    Ok(ModulusEstimate {
        quantity: quantity.to_string(),
        rungs,
        limiting_value,
        verdict,
        boundary_contaminated,
        grid_tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(v: &[f64]) -> Vec<ExtReal<f64>> {
        v.iter().map(|&x| ExtReal::Finite(x)).collect()
    }

    fn monotone(raw: &[ExtReal<f64>]) -> Vec<ExtReal<f64>> {
        let mut v = raw.to_vec();
        for i in (0..v.len() - 1).rev() {
            v[i] = v[i].max(v[i + 1]);
        }
        v
    }

    #[test]
    fn verdicts() {
        let s = Settings::default();
        let flat = f(&[1.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(classify(&flat, &monotone(&flat), &s), (Verdict::Finite, ExtReal::Finite(1.0)));
        let shrinking = f(&[0.5, 0.25, 0.125, 0.0625]);
        assert_eq!(classify(&shrinking, &monotone(&shrinking), &s).0, Verdict::Finite);
        let blowup = f(&[1.0, 1.6, 2.5, 4.0, 6.3]);
        assert_eq!(classify(&blowup, &monotone(&blowup), &s).0, Verdict::Divergent);
        let late = f(&[1.0, 1.0, 1.0, 1.0, 2.0]);
        assert_eq!(classify(&late, &monotone(&late), &s).0, Verdict::Inconclusive);
        let mut inf = f(&[1.0, 1.0, 1.0]);
        inf.push(ExtReal::PosInf);
        assert_eq!(classify(&inf, &monotone(&inf), &s), (Verdict::Divergent, ExtReal::PosInf));
        let huge = f(&[2e6, 2e6, 2e6]);
        assert_eq!(classify(&huge, &monotone(&huge), &s).0, Verdict::Divergent);
    }

    #[test]
    fn argmax_ties_go_to_lowest_index() {
        let items = [1.0, 3.0, 2.0, 3.0];
        let (n, best) = par_argmax(&items, |&v| Some((v, ())));
        assert_eq!(n, 4);
        assert_eq!(best, Some((1, 3.0, ())));
        let (n, best) = par_argmax(&items, |_| None::<(f64, ())>);
        assert_eq!((n, best), (0, None));
    }
}
