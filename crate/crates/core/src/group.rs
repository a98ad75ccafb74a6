//! A minimal group interface and exact convolution of finitely supported
//! measures over it.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::freegroup::FiniteDistribution;

/// Default cap on the number of atoms an exact convolution may hold.
pub const DEFAULT_SUPPORT_BUDGET: usize = 4_000_000;

pub trait Group {
    type Element: Clone + Ord + Hash + Debug + Send + Sync;

    fn identity(&self) -> Self::Element;
    fn mul(&self, a: &Self::Element, b: &Self::Element) -> Self::Element;
    fn inv(&self, a: &Self::Element) -> Self::Element;

    fn conjugate(&self, g: &Self::Element, by: &Self::Element) -> Self::Element {
        // g^by = by^{-1} g by
        self.mul(&self.mul(&self.inv(by), g), by)
    }
}

/// `a * b` as measures: the law of `X Y` with `X ~ a`, `Y ~ b` independent.
pub fn convolve<G: Group>(
    group: &G,
    a: &FiniteDistribution<G::Element>,
    b: &FiniteDistribution<G::Element>,
    budget: usize,
) -> Result<FiniteDistribution<G::Element>> {
    let mut out: BTreeMap<G::Element, f64> = BTreeMap::new();
    for (x, px) in a.iter() {
        for (y, py) in b.iter() {
            *out.entry(group.mul(x, y)).or_insert(0.0) += px * py;
            if out.len() > budget {
                return Err(Error::budget(
                    "support",
                    format!("convolution support exceeds {budget} atoms"),
                ));
            }
        }
    }
    Ok(FiniteDistribution::from_map_unchecked(out))
}

/// Exact laws of `Z_0, ..., Z_t_max` for the walk with i.i.d. increments `step`.
///
/// Returns `t_max + 1` distributions; entry `t` is the `t`-th convolution power.
pub fn convolution_powers<G: Group>(
    group: &G,
    step: &FiniteDistribution<G::Element>,
    t_max: usize,
    budget: usize,
) -> Result<Vec<FiniteDistribution<G::Element>>> {
    let mut out = Vec::with_capacity(t_max + 1);
    out.push(FiniteDistribution::point(group.identity()));
    for t in 1..=t_max {
        let next = convolve(group, &out[t - 1], step, budget).map_err(|e| match e {
            Error::Budget { budget: b, detail } => Error::Budget {
                budget: b,
                detail: format!("{detail} at t = {t}"),
            },
            other => other,
        })?;
        out.push(next);
    }
    Ok(out)
}

pub fn convolution_power<G: Group>(
    group: &G,
    step: &FiniteDistribution<G::Element>,
    t: usize,
    budget: usize,
) -> Result<FiniteDistribution<G::Element>> {
    Ok(convolution_powers(group, step, t, budget)?
        .pop()
        .expect("t + 1 entries"))
}

/// Integer lattice `Z^d` under addition, `d <= 3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lattice {
    pub dim: usize,
}

pub type Point = [i64; 3];

impl Lattice {
    pub fn new(dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Invalid(format!(
                "lattice dimension {dim} not in 1..=3"
            )));
        }
        Ok(Lattice { dim })
    }

    pub fn unit(&self, axis: usize, sign: i64) -> Point {
        let mut p = [0; 3];
        p[axis] = sign;
        p
    }

    /// The `2d` unit steps in the order `+e_0, -e_0, +e_1, ...`.
    pub fn unit_steps(&self) -> Vec<Point> {
        (0..self.dim)
            .flat_map(|i| [self.unit(i, 1), self.unit(i, -1)])
            .collect()
    }
}

#[inline]
pub fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

impl Group for Lattice {
    type Element = Point;

    fn identity(&self) -> Point {
        [0; 3]
    }

    fn mul(&self, a: &Point, b: &Point) -> Point {
        add(a, b)
    }

    fn inv(&self, a: &Point) -> Point {
        [-a[0], -a[1], -a[2]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_walk_second_power() {
        let z = Lattice::new(1).unwrap();
        let step =
            FiniteDistribution::new([([1, 0, 0], 0.5), ([-1, 0, 0], 0.5)].into_iter().collect())
                .unwrap();
        let d2 = convolution_power(&z, &step, 2, 100).unwrap();
        assert_eq!(d2.len(), 3);
        assert_eq!(d2.prob(&[0, 0, 0]), 0.5);
        assert_eq!(d2.prob(&[2, 0, 0]), 0.25);
    }

    #[test]
    fn budget_error_names_budget_and_time() {
        let z = Lattice::new(1).unwrap();
        let step =
            FiniteDistribution::new([([1, 0, 0], 0.5), ([-1, 0, 0], 0.5)].into_iter().collect())
                .unwrap();
        let err = convolution_power(&z, &step, 10, 4).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("support"), "{msg}");
        assert!(msg.contains("t = "), "{msg}");
    }

    #[test]
    fn lattice_dimension_checked() {
        assert!(Lattice::new(0).is_err());
        assert!(Lattice::new(4).is_err());
    }
}
