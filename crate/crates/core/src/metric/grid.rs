//! Deterministic sampling of balls.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::point::{Ball, Coords, Point};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default seed of the scrambled sequence.
pub const DEFAULT_SEED: u64 = 0x5eed_2017;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
#[derive(Default)]
pub enum Scheme {
    #[default]
    UniformLattice,
    ScrambledLowDiscrepancy { seed: u64 },
}


/// Region-free part of a grid: how densely and how to sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    /// Points per axis; `None` picks a default from the dimension.
    pub density: Option<usize>,
    pub scheme: Scheme,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            density: None,
            scheme: Scheme::UniformLattice,
        }
    }
}

impl Resolution {
    pub fn with_density(density: usize) -> Self {
        Self {
            density: Some(density),
            ..Self::default()
        }
    }

    /// Points per axis for a space of dimension `dim`. The defaults are odd
    /// so that the lattice contains the ball centre and the axes through it.
    pub fn density_for(&self, dim: usize) -> usize {
        self.density.unwrap_or(match dim {
            0..=2 => 65,
            3 | 4 => 17,
            _ => 9,
        })
    }

    pub fn over<T: Scalar>(&self, region: Ball<T>) -> GridSpec<T> {
        let density = self.density_for(region.dim());
        GridSpec {
            region,
            density,
            scheme: self.scheme,
        }
    }
}

/// A ball together with the sampling rule used on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct GridSpec<T: Scalar> {
    pub region: Ball<T>,
    pub density: usize,
    pub scheme: Scheme,
}

impl<T: Scalar> GridSpec<T> {
    pub fn new(region: Ball<T>, density: usize, scheme: Scheme) -> Result<Self> {
        if density < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid density must be at least 2, got {density}"
            )));
        }
        Ok(Self {
            region,
            density,
            scheme,
        })
    }

    pub fn lattice(region: Ball<T>, density: usize) -> Result<Self> {
        Self::new(region, density, Scheme::UniformLattice)
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    /// Lattice spacing along one axis.
    pub fn step(&self) -> T {
        T::of(2.0) * self.region.radius / T::of((self.density.max(2) - 1) as f64)
    }

    pub fn points(&self) -> Result<Vec<Point<T>>> {
        Ok(self.sample()?.points)
    }

    /// Samples the region, keeping lattice adjacency when the scheme is a
    /// lattice.
    pub fn sample(&self) -> Result<Sample<T>> {
        if self.density < 2 {
            return Err(Error::InvalidParameter("grid density below 2".into()));
        }
        let sample = match self.scheme {
            Scheme::UniformLattice => self.uniform(),
            Scheme::ScrambledLowDiscrepancy { seed } => self.scrambled(seed),
        };
        if sample.points.is_empty() {
            return Err(Error::EmptyGrid);
        }
        Ok(sample)
    }

    fn uniform(&self) -> Sample<T> {
        let n = self.dim();
        let d = self.density;
        let total = d.pow(n as u32);
        let c = self.region.center.coords();
        let r = self.region.radius;
        let step = self.step();
        let mut slots = vec![None; total];
        let mut points = Vec::new();
        let mut idx = vec![0usize; n];
        for slot in slots.iter_mut() {
            let coords: Coords<T> = (0..n)
                .map(|i| {
                    // The middle index of an odd lattice lands on the centre
                    // exactly.
                    let k = T::of(idx[i] as f64) - T::of((d - 1) as f64) / T::of(2.0);
                    c[i] + k * step
                })
                .collect();
            let p = Point::from_coords(coords);
            if self.region.contains(&p) || r == T::zero() {
                *slot = Some(points.len());
                points.push(p);
            }
            for i in (0..n).rev() {
                idx[i] += 1;
                if idx[i] < d {
                    break;
                }
                idx[i] = 0;
            }
        }
        Sample {
            points,
            layout: Some(Layout { density: d, dim: n, slots }),
        }
    }

    fn scrambled(&self, seed: u64) -> Sample<T> {
        let n = self.dim();
        let total = self.density.pow(n as u32);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let perms: Vec<Vec<Vec<u32>>> = (0..n)
            .map(|dim| {
                let base = PRIMES[dim % PRIMES.len()];
                (0..HALTON_DIGITS)
                    .map(|_| {
                        let mut perm: Vec<u32> = (0..base).collect();
                        perm.shuffle(&mut rng);
                        perm
                    })
                    .collect()
            })
            .collect();
        let c = self.region.center.coords();
        let r = self.region.radius;
        let points = (0..total as u64)
            .filter_map(|i| {
                let coords: Coords<T> = (0..n)
                    .map(|dim| {
                        let u = scrambled_radical_inverse(i + 1, PRIMES[dim % PRIMES.len()], &perms[dim]);
                        c[dim] + r * T::of(2.0 * u - 1.0)
                    })
                    .collect();
                let p = Point::from_coords(coords);
                self.region.contains(&p).then_some(p)
            })
            .collect();
        Sample {
            points,
            layout: None,
        }
    }
}

const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
const HALTON_DIGITS: usize = 24;

fn scrambled_radical_inverse(mut i: u64, base: u32, perms: &[Vec<u32>]) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut acc = 0.0;
    for perm in perms {
        let digit = (i % b) as usize;
        acc += perm[digit] as f64 * scale;
        i /= b;
        scale *= inv;
    }
    acc
}

/// Position of each lattice slot in the filtered point list.
#[derive(Clone, Debug)]
pub struct Layout {
    pub density: usize,
    pub dim: usize,
    slots: Vec<Option<usize>>,
}

impl Layout {
    /// Pairs of point indices adjacent along a lattice axis.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let d = self.density;
        for (s, slot) in self.slots.iter().enumerate() {
            let Some(a) = *slot else { continue };
            let mut stride = 1;
            for _ in 0..self.dim {
                let coord = (s / stride) % d;
                if coord + 1 < d {
                    if let Some(b) = self.slots[s + stride] {
                        out.push((a, b));
                    }
                }
                stride *= d;
            }
        }
        out
    }
}

/// Filtered sample points of a grid.
#[derive(Clone, Debug)]
pub struct Sample<T: Scalar> {
    pub points: Vec<Point<T>>,
    pub layout: Option<Layout>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_disc(density: usize, scheme: Scheme) -> GridSpec<f64> {
        let ball = Ball::new(Point::new(vec![0.0, 0.0]).unwrap(), 1.0).unwrap();
        GridSpec::new(ball, density, scheme).unwrap()
    }

    #[test]
    fn lattice_is_density_pow_n_before_filtering() {
        // A 1-D ball equals its bounding box, so nothing is filtered.
        let ball = Ball::new(Point::scalar(0.0), 2.0).unwrap();
        let g = GridSpec::lattice(ball, 11).unwrap();
        let pts = g.points().unwrap();
        assert_eq!(pts.len(), 11);
        assert_eq!(pts[0].get(0), -2.0);
        assert_eq!(pts[10].get(0), 2.0);
        assert_eq!(pts[5].get(0), 0.0);
    }

    #[test]
    fn odd_lattice_contains_centre_and_axes() {
        let pts = unit_disc(9, Scheme::UniformLattice).points().unwrap();
        assert!(pts.iter().any(|p| p.coords() == [0.0, 0.0]));
        assert!(pts.iter().any(|p| p.coords() == [0.0, 0.75]));
        assert!(pts.iter().all(|p| p.norm() <= 1.0 + 1e-12));
    }

    #[test]
    fn edges_connect_axis_neighbours() {
        let ball = Ball::new(Point::scalar(0.0), 1.0).unwrap();
        let s = GridSpec::lattice(ball, 5).unwrap().sample().unwrap();
        let edges = s.layout.unwrap().edges();
        assert_eq!(edges, vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
    }

    #[test]
    fn scrambled_is_seed_deterministic() {
        let a = unit_disc(8, Scheme::ScrambledLowDiscrepancy { seed: 7 }).points().unwrap();
        let b = unit_disc(8, Scheme::ScrambledLowDiscrepancy { seed: 7 }).points().unwrap();
        let c = unit_disc(8, Scheme::ScrambledLowDiscrepancy { seed: 8 }).points().unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|p| p.norm() <= 1.0 + 1e-12));
    }

    #[test]
    fn rejects_degenerate_density() {
        let ball = Ball::new(Point::scalar(0.0), 1.0).unwrap();
        assert!(GridSpec::lattice(ball, 1).is_err());
    }
}
