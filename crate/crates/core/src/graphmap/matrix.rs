use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{GraphMapRep, Mode};
use crate::error::{Error, Result};
use crate::freegroup::Letter;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixClass {
    Zero,
    Reducible,
    IrreducibleNonPrimitive,
    Primitive,
}

impl MatrixClass {
    pub fn name(self) -> &'static str {
        match self {
            MatrixClass::Zero => "zero",
            MatrixClass::Reducible => "reducible",
            MatrixClass::IrreducibleNonPrimitive => "irreducible_non_primitive",
            MatrixClass::Primitive => "primitive",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    Zero,
    /// Irreducible with `λ = 1` (a permutation matrix).
    Neg,
    /// Irreducible with `λ > 1`.
    Eg,
    Undetermined,
}

/// Perron–Frobenius data with a Collatz–Wielandt enclosure `[lower, upper]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PfData {
    pub lambda: f64,
    pub lower: f64,
    pub upper: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StratumData {
    /// 1-based stratum index.
    pub stratum: usize,
    pub edges: Vec<usize>,
    pub edge_names: Vec<String>,
    pub matrix: Vec<Vec<u64>>,
    pub class: MatrixClass,
    pub growth: Growth,
    pub pf: Option<PfData>,
}

/// Exact top-stratum edge counts of `[φ^p(e)]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccurrenceVector {
    pub edges: Vec<usize>,
    pub counts: Vec<BigUint>,
    pub power: usize,
}

/// Transition matrix of stratum `r` (0-based): entry `(i, j)` counts edge `i`
/// in either orientation in the image of edge `j`.
pub fn transition_matrix(rep: &GraphMapRep, r: usize) -> Result<StratumData> {
    let strata = rep.strata();
    let edges = strata
        .get(r)
        .cloned()
        .ok_or_else(|| Error::InvalidArgument(format!("no stratum {}", r + 1)))?;
    let d = edges.len();
    let mut m = vec![vec![0u64; d]; d];
    for (j, &e) in edges.iter().enumerate() {
        for x in rep.edge_image(e) {
            if let Some(i) = edges.iter().position(|&f| f == x.generator()) {
                m[i][j] += 1;
            }
        }
    }
    let class = classify(&m);
    let (growth, pf) = match class {
        MatrixClass::Zero => (Growth::Zero, None),
        MatrixClass::Reducible => (Growth::Undetermined, None),
        _ => {
            let g = if is_permutation(&m) { Growth::Neg } else { Growth::Eg };
            (g, Some(pf_data(&m, 1e-12)?))
        }
    };
    Ok(StratumData {
        stratum: r + 1,
        edge_names: edges.iter().map(|&e| rep.graph().edge_name(e).to_string()).collect(),
        edges,
        matrix: m,
        class,
        growth,
        pf,
    })
}

pub fn classify(m: &[Vec<u64>]) -> MatrixClass {
    if m.iter().flatten().all(|&x| x == 0) {
        MatrixClass::Zero
    } else if !is_irreducible(m) {
        MatrixClass::Reducible
    } else if is_primitive(m) {
        MatrixClass::Primitive
    } else {
        MatrixClass::IrreducibleNonPrimitive
    }
}

fn is_permutation(m: &[Vec<u64>]) -> bool {
    let d = m.len();
    (0..d).all(|i| m[i].iter().sum::<u64>() == 1 && (0..d).map(|k| m[k][i]).sum::<u64>() == 1)
}

fn reaches_all(m: &[Vec<u64>], transpose: bool) -> bool {
    let d = m.len();
    let mut seen = vec![false; d];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..d {
            let w = if transpose { m[j][i] } else { m[i][j] };
            if w > 0 && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Strong connectivity of the support graph (a non-zero 1×1 matrix counts).
pub fn is_irreducible(m: &[Vec<u64>]) -> bool {
    match m.len() {
        0 => false,
        1 => m[0][0] > 0,
        _ => reaches_all(m, false) && reaches_all(m, true),
    }
}

/// Some power is strictly positive; Wielandt's bound `(d-1)^2 + 1` suffices.
pub fn is_primitive(m: &[Vec<u64>]) -> bool {
    if !is_irreducible(m) {
        return false;
    }
    let d = m.len();
    let b: Vec<Vec<bool>> = m.iter().map(|r| r.iter().map(|&x| x > 0).collect()).collect();
    let mul = |x: &Vec<Vec<bool>>, y: &Vec<Vec<bool>>| -> Vec<Vec<bool>> {
        (0..d).map(|i| (0..d).map(|j| (0..d).any(|k| x[i][k] && y[k][j])).collect()).collect()
    };
    let mut k = (d - 1) * (d - 1) + 1;
    let mut base = b;
    let mut acc: Option<Vec<Vec<bool>>> = None;
    while k > 0 {
        if k & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => mul(&a, &base),
            });
        }
        base = mul(&base, &base);
        k >>= 1;
    }
    acc.unwrap().iter().flatten().all(|&x| x)
}

/// `M^p` over arbitrary precision integers by repeated squaring.
pub fn matrix_power(m: &[Vec<u64>], p: usize) -> Vec<Vec<BigUint>> {
    let d = m.len();
    let big: Vec<Vec<BigUint>> = m.iter().map(|r| r.iter().map(|&x| BigUint::from(x)).collect()).collect();
    let mul = |x: &Vec<Vec<BigUint>>, y: &Vec<Vec<BigUint>>| -> Vec<Vec<BigUint>> {
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| (0..d).fold(BigUint::zero(), |s, k| s + &x[i][k] * &y[k][j]))
                    .collect()
            })
            .collect()
    };
    let mut acc: Vec<Vec<BigUint>> =
        (0..d).map(|i| (0..d).map(|j| BigUint::from((i == j) as u8)).collect()).collect();
    let mut base = big;
    let mut k = p;
    while k > 0 {
        if k & 1 == 1 {
            acc = mul(&acc, &base);
        }
        base = mul(&base, &base);
        k >>= 1;
    }
    acc
}

fn power_vector(m: &[Vec<u64>], tol: f64) -> (Vec<f64>, usize, bool) {
    let d = m.len();
    let mut v = vec![1.0 / d as f64; d];
    let max_iter = 200_000;
    for it in 1..=max_iter {
        // iterate M + I so that periodic irreducible matrices converge too
        let mut w: Vec<f64> = (0..d).map(|i| v[i] + (0..d).map(|j| m[i][j] as f64 * v[j]).sum::<f64>()).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        v = w;
        if it % 8 == 0 {
            let (lo, hi) = cw_bounds_f64(m, &v);
            if hi - lo <= tol / 4.0 {
                return (v, it, true);
            }
        }
    }
    (v, max_iter, false)
}

fn cw_bounds_f64(m: &[Vec<u64>], v: &[f64]) -> (f64, f64) {
    let d = m.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..d {
        let r = (0..d).map(|j| m[i][j] as f64 * v[j]).sum::<f64>() / v[i];
        lo = lo.min(r);
        hi = hi.max(r);
    }
    (lo, hi)
}

/// Exact Collatz–Wielandt bounds for a positive vector.
fn cw_bounds_exact(m: &[Vec<u64>], v: &[f64]) -> Option<(BigRational, BigRational)> {
    let d = m.len();
    let q: Vec<BigRational> = v.iter().map(|&x| BigRational::from_float(x)).collect::<Option<_>>()?;
    let mut lo: Option<BigRational> = None;
    let mut hi: Option<BigRational> = None;
    for i in 0..d {
        if q[i].is_zero() {
            return None;
        }
        let num = (0..d).fold(BigRational::zero(), |s, j| s + BigRational::from_integer(m[i][j].into()) * &q[j]);
        let r = num / &q[i];
        lo = Some(match lo {
            Some(l) if l < r => l,
            _ => r.clone(),
        });
        hi = Some(match hi {
            Some(h) if h > r => h,
            _ => r,
        });
    }
    Some((lo?, hi?))
}

fn transpose(m: &[Vec<u64>]) -> Vec<Vec<u64>> {
    let d = m.len();
    (0..d).map(|i| (0..d).map(|j| m[j][i]).collect()).collect()
}

/// Perron–Frobenius eigenvalue and eigenvectors (normalized to sum 1).
pub fn pf_data(m: &[Vec<u64>], tol: f64) -> Result<PfData> {
    if !is_irreducible(m) {
        return Err(Error::Reducible);
    }
    let (right, it_r, ok_r) = power_vector(m, tol);
    let (left, it_l, ok_l) = power_vector(&transpose(m), tol);
    let (lo, hi) = match cw_bounds_exact(m, &right) {
        Some((l, h)) => (l.to_f64().unwrap_or(f64::NAN), h.to_f64().unwrap_or(f64::NAN)),
        None => cw_bounds_f64(m, &right),
    };
    Ok(PfData {
        lambda: 0.5 * (lo + hi),
        lower: lo,
        upper: hi,
        left,
        right,
        iterations: it_r.max(it_l),
        converged: ok_r && ok_l && hi - lo <= tol,
    })
}

/// Dominant eigenvalue and right eigenvector (sum 1) of a non-negative matrix
/// that need not be irreducible; the eigenvalue must be strictly dominant.
pub fn dominant_eigen(m: &[Vec<u64>], tol: f64) -> (f64, Vec<f64>, bool) {
    let (v, _, _) = power_vector(m, tol);
    let d = m.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..d {
        if v[i] <= 0.0 {
            continue;
        }
        let r = (0..d).map(|j| m[i][j] as f64 * v[j]).sum::<f64>() / v[i];
        lo = lo.min(r);
        hi = hi.max(r);
    }
    (0.5 * (lo + hi), v, hi - lo <= tol.max(1e-9))
}

/// `M_top^p` applied to the unit vector of a top-stratum edge.
pub fn occurrence_vector(rep: &GraphMapRep, edge: usize, p: usize) -> Result<OccurrenceVector> {
    let top = rep.strata().len() - 1;
    let data = transition_matrix(rep, top)?;
    let j = data.edges.iter().position(|&e| e == edge).ok_or_else(|| {
        Error::InvalidArgument(format!("edge `{}` is not in the top stratum", rep.graph().edge_name(edge)))
    })?;
    let mp = matrix_power(&data.matrix, p);
    Ok(OccurrenceVector { counts: mp.iter().map(|row| row[j].clone()).collect(), edges: data.edges, power: p })
}

/// Top-stratum edge counts of an explicit path, in the order of `edges`.
pub fn count_edges(path: &[Letter], edges: &[usize]) -> Vec<BigUint> {
    let mut c = vec![0u64; edges.len()];
    for d in path {
        if let Some(i) = edges.iter().position(|&e| e == d.generator()) {
            c[i] += 1;
        }
    }
    c.into_iter().map(BigUint::from).collect()
}

/// Explicit iteration oracle used by tests and the CLI.
pub fn explicit_counts(rep: &GraphMapRep, edge: usize, p: usize) -> Result<Vec<BigUint>> {
    let top = rep.top_stratum();
    let img = rep.iterate_edge(Letter::new(edge, false), p, Mode::Explicit)?;
    Ok(count_edges(&img, &top))
}
