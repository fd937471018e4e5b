//! Numeric-backed leaves: dense piecewise-polynomial interpolants built from
//! derivative jets at mesh nodes.
//!
//! A leaf stores, for each mesh node `t_i`, the jet `f(t_i), f'(t_i), ...,
//! f^(d)(t_i)`. On each segment the two boundary jets define a two-point
//! Hermite interpolant of degree `2d + 1`, so the piecewise polynomial is
//! `C^d` across nodes and every derivative up to the declared order `d` is
//! available anywhere in the validity interval.

use crate::error::{Error, ErrorCode, Result};
use crate::interval::Interval;
use std::sync::atomic::{AtomicU64, Ordering};

static LEAF_COUNTER: AtomicU64 = AtomicU64::new(0);

fn next_leaf_id(prefix: &str) -> String {
    let n = LEAF_COUNTER.fetch_add(1, Ordering::Relaxed);
    format!("{prefix}#{n}")
}

/// Hermite order per side and per table. Degree stays at most
/// `2 * MAX_SIDE_ORDER + 1 = 15`: higher-degree power-basis conversion is
/// ill-conditioned, and each derivative order gets its own table instead.
const MAX_SIDE_ORDER: usize = 7;

#[derive(Debug)]
struct Segment {
    t_lo: f64,
    h: f64,
    /// `tables[k]` holds power-basis coefficients (in s = (t - t_lo)/h) of a
    /// Hermite interpolant of the k-th derivative itself.
    tables: Vec<Vec<f64>>,
}

impl Segment {
    fn eval(&self, t: f64, k: usize) -> f64 {
        let s = (t - self.t_lo) / self.h;
        let coeffs = &self.tables[k];
        let mut acc = 0.0;
        for j in (0..coeffs.len()).rev() {
            acc = acc * s + coeffs[j];
        }
        acc
    }
}

/// Dense interpolant for a function known only numerically.
#[derive(Debug)]
pub struct NumericLeaf {
    id: String,
    provenance: String,
    interval: Interval,
    deriv_order: usize,
    nodes: Vec<f64>,
    segments: Vec<Segment>,
    tol: f64,
}

impl NumericLeaf {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    /// Declared derivative order `d`.
    pub fn deriv_order(&self) -> usize {
        self.deriv_order
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `k`-th derivative at `t`. Errors outside the validity interval or for
    /// `k` above the declared order.
    pub fn eval(&self, t: f64, k: usize) -> Result<f64> {
        if k > self.deriv_order {
            return Err(Error::new(
                ErrorCode::DerivativeOrderExceeded,
                format!(
                    "leaf '{}' declares derivatives up to {}, requested {}",
                    self.id, self.deriv_order, k
                ),
            ));
        }
        if !self.interval.contains(t) {
            return Err(Error::new(
                ErrorCode::OutOfInterval,
                format!(
                    "t = {t} outside validity interval {} of leaf '{}'",
                    self.interval, self.id
                ),
            ));
        }
        let t = t.clamp(self.interval.lo(), self.interval.hi());
        let idx = match self.nodes.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.segments.len() - 1),
            Err(i) => i.saturating_sub(1).min(self.segments.len() - 1),
        };
        Ok(self.segments[idx].eval(t, k))
    }
}

/// Assembles a leaf from mesh nodes and per-node jets.
pub struct LeafBuilder {
    prefix: String,
    provenance: String,
    deriv_order: usize,
    tol: f64,
}

impl LeafBuilder {
    pub fn new(prefix: &str, provenance: &str, deriv_order: usize, tol: f64) -> Self {
        LeafBuilder {
            prefix: prefix.to_string(),
            provenance: provenance.to_string(),
            deriv_order,
            tol,
        }
    }

    /// `jets[i][k]` is the `k`-th derivative at `nodes[i]`; nodes must be
    /// strictly increasing with at least two entries.
    pub fn build(self, nodes: Vec<f64>, jets: Vec<Vec<f64>>) -> Result<NumericLeaf> {
        if nodes.len() < 2 || nodes.len() != jets.len() {
            return Err(Error::new(
                ErrorCode::Unsupported,
                "leaf construction needs matching node/jet lists with >= 2 nodes",
            ));
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::new(
                ErrorCode::Unsupported,
                "leaf nodes must be strictly increasing",
            ));
        }
        let d = self.deriv_order;
        let jet_len = jets.iter().map(Vec::len).min().unwrap_or(0);
        if jet_len < d + 1 || jets.iter().any(|j| j.len() != jet_len) {
            return Err(Error::new(
                ErrorCode::Unsupported,
                "jets must have a uniform length of at least deriv_order + 1",
            ));
        }
        let interval = Interval::new(nodes[0], *nodes.last().unwrap())?;
        let mut segments = Vec::with_capacity(nodes.len() - 1);
        for i in 0..nodes.len() - 1 {
            let h = nodes[i + 1] - nodes[i];
            // jets stored beyond the declared order keep the interpolation
            // degree high even for the top declared derivatives
            let tables = (0..=d)
                .map(|k| {
                    let side = (jet_len - 1 - k).min(MAX_SIDE_ORDER);
                    hermite_power_coeffs(
                        &jets[i][k..=k + side],
                        &jets[i + 1][k..=k + side],
                        h,
                        side,
                    )
                })
                .collect();
            segments.push(Segment {
                t_lo: nodes[i],
                h,
                tables,
            });
        }
        Ok(NumericLeaf {
            id: next_leaf_id(&self.prefix),
            provenance: self.provenance,
            interval,
            deriv_order: d,
            nodes,
            segments,
            tol: self.tol,
        })
    }
}

/// Two-point Hermite interpolation on s in [0, 1] matching scaled jets
/// `g^(k) = f^(k) h^k` at both ends; returns power-basis coefficients.
fn hermite_power_coeffs(jet_a: &[f64], jet_b: &[f64], h: f64, d: usize) -> Vec<f64> {
    let m = 2 * (d + 1);
    let mut fact = vec![1.0; d + 1];
    for k in 1..=d {
        fact[k] = fact[k - 1] * k as f64;
    }
    let scaled = |jet: &[f64], k: usize| jet[k] * h.powi(k as i32) / fact[k];

    // Newton divided differences over nodes [0 x (d+1), 1 x (d+1)].
    let z: Vec<f64> = (0..m).map(|i| if i <= d { 0.0 } else { 1.0 }).collect();
    let mut table: Vec<Vec<f64>> = vec![vec![0.0; m]; m];
    for i in 0..m {
        table[0][i] = if i <= d {
            scaled(jet_a, 0)
        } else {
            scaled(jet_b, 0)
        };
    }
    for j in 1..m {
        for i in 0..m - j {
            table[j][i] = if z[i + j] == z[i] {
                // repeated node: Taylor coefficient
                if z[i] == 0.0 {
                    scaled(jet_a, j)
                } else {
                    scaled(jet_b, j)
                }
            } else {
                (table[j - 1][i + 1] - table[j - 1][i]) / (z[i + j] - z[i])
            };
        }
    }
    // Newton form -> power basis (nodes are only 0 and 1, so this is stable).
    let mut coeffs = vec![0.0; m];
    for j in (0..m).rev() {
        // coeffs = coeffs * (s - z[j]) + c_j
        let zj = z[j];
        let mut next = vec![0.0; m];
        for (k, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                if k + 1 < m {
                    next[k + 1] += c;
                }
                next[k] -= c * zj;
            }
        }
        next[0] += table[j][0];
        coeffs = next;
    }
    coeffs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sin_leaf(d: usize, n: usize) -> NumericLeaf {
        let nodes: Vec<f64> = (0..=n).map(|i| i as f64 * 3.0 / n as f64).collect();
        let jets: Vec<Vec<f64>> = nodes
            .iter()
            .map(|&t| {
                (0..=d)
                    .map(|k| match k % 4 {
                        0 => t.sin(),
                        1 => t.cos(),
                        2 => -t.sin(),
                        _ => -t.cos(),
                    })
                    .collect()
            })
            .collect();
        LeafBuilder::new("test.sin", "unit test", d, 1e-12)
            .build(nodes, jets)
            .unwrap()
    }

    #[test]
    fn reproduces_sin_and_derivatives() {
        let leaf = sin_leaf(7, 24);
        for i in 0..=60 {
            let t = i as f64 * 0.05;
            assert!((leaf.eval(t, 0).unwrap() - t.sin()).abs() < 1e-12);
            assert!((leaf.eval(t, 1).unwrap() - t.cos()).abs() < 1e-11);
            assert!((leaf.eval(t, 4).unwrap() - t.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn domain_and_order_guards() {
        let leaf = sin_leaf(5, 8);
        assert!(leaf.eval(3.5, 0).is_err());
        assert!(leaf.eval(-0.1, 0).is_err());
        assert!(leaf.eval(1.0, 6).is_err());
        assert!(leaf.eval(1.0, 5).is_ok());
    }

    #[test]
    fn exact_for_polynomial_data() {
        // jets of p(t) = t^3 - 2t; degree 3 <= 2d+1, so interpolation is exact
        let nodes = vec![0.0, 1.0, 2.0];
        let jets: Vec<Vec<f64>> = nodes
            .iter()
            .map(|&t| vec![t * t * t - 2.0 * t, 3.0 * t * t - 2.0, 6.0 * t, 6.0])
            .collect();
        let leaf = LeafBuilder::new("test.poly", "unit test", 3, 1e-14)
            .build(nodes, jets)
            .unwrap();
        for i in 0..=20 {
            let t = i as f64 * 0.1;
            let exact = t * t * t - 2.0 * t;
            assert!((leaf.eval(t, 0).unwrap() - exact).abs() < 1e-13);
            assert!((leaf.eval(t, 2).unwrap() - 6.0 * t).abs() < 1e-12);
        }
    }
}
