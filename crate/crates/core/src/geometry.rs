//! Point-hyperplane incidence of P(n, GF(q)) as a circulant bipartite graph.
//!
//! Points are the powers `α^i`, `0 <= i < J`, of a primitive element of
//! GF(q^(n+1)); they represent distinct 1-dimensional subspaces because
//! GF(q)* is generated by `α^J`. Hyperplane 0 is the kernel of the trace
//! to GF(q) and hyperplane `j` is its image under multiplication by `α^j`.

use serde::{Deserialize, Serialize};

use crate::circulant::CirculantBipartiteGraph;
use crate::error::{Error, Result};
use crate::field::{is_prime, FiniteField};
use crate::report::CheckReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PgParams {
    /// Projective dimension.
    pub n: u32,
    pub p: u32,
    /// q = p^s.
    pub s: u32,
}

impl PgParams {
    pub fn new(n: u32, p: u32, s: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("projective dimension {n} must be at least 2")));
        }
        if !is_prime(p as u64) {
            return Err(Error::NotPrime(p as u64));
        }
        if s == 0 {
            return Err(Error::domain("extension exponent s must be at least 1"));
        }
        let params = PgParams { n, p, s };
        let k = s.checked_mul(n + 1).ok_or(Error::Capacity { p, k: u32::MAX })?;
        if (p as u64).checked_pow(k).map_or(true, |o| o > crate::field::MAX_FIELD_ORDER) {
            return Err(Error::Capacity { p, k });
        }
        Ok(params)
    }

    pub fn q(&self) -> u64 {
        (self.p as u64).pow(self.s)
    }

    /// Number of points (and of hyperplanes).
    pub fn order(&self) -> usize {
        point_count(self.n as u64, self.q()) as usize
    }

    /// Points per hyperplane.
    pub fn gamma(&self) -> usize {
        point_count(self.n as u64 - 1, self.q()) as usize
    }

    /// Points shared by two distinct hyperplanes.
    pub fn pair_intersection(&self) -> usize {
        if self.n < 2 {
            0
        } else {
            point_count(self.n as u64 - 2, self.q()) as usize
        }
    }
}

/// (s^(d+1) - 1) / (s - 1): points of a d-dimensional projective space.
pub fn point_count(d: u64, s: u64) -> u64 {
    (0..=d).map(|i| s.pow(i as u32)).sum()
}

/// Number of l-dimensional projective subspaces of P(n, GF(s)).
pub fn phi(n: u32, l: u32, s: u64) -> Result<u64> {
    if l > n {
        return Err(Error::domain(format!("subspace dimension {l} exceeds {n}")));
    }
    if s < 2 || crate::field::prime_power(s).is_none() {
        return Err(Error::domain(format!("{s} is not a prime power")));
    }
    // Gaussian binomial [n+1, l+1]_s
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..=l {
        num *= (s as u128).pow(n + 1 - i) - 1;
        den *= (s as u128).pow(i + 1) - 1;
    }
    u64::try_from(num / den).map_err(|_| Error::domain("count overflows u64"))
}

/// Field GF(q^(n+1)) together with the sorted trace-zero exponent set.
pub fn trace_kernel(params: &PgParams) -> Result<(FiniteField, Vec<usize>)> {
    let field = FiniteField::with_default_modulus(params.p, params.s * (params.n + 1))?;
    let q = params.q() as u32;
    let order = params.order();
    let mut d = Vec::with_capacity(params.gamma());
    for i in 0..order {
        if field.trace_to_subfield(field.alpha_pow(i as u64), q)?.is_zero() {
            d.push(i);
        }
    }
    Ok((field, d))
}

pub fn build_pg_graph(params: &PgParams) -> Result<CirculantBipartiteGraph> {
    let (_, d) = trace_kernel(params)?;
    if d.len() != params.gamma() {
        return Err(Error::Internal(format!(
            "trace kernel has {} points, expected {}",
            d.len(),
            params.gamma()
        )));
    }
    CirculantBipartiteGraph::new(params.order(), &d)
}

/// Structural checks on a point-hyperplane incidence given as per-hyperplane
/// point lists.
pub fn verify_pg_incidence(lists: &[Vec<usize>], params: &PgParams) -> CheckReport {
    let mut r = CheckReport::new("pg-incidence");
    let j = params.order();
    let gamma = params.gamma();
    r.check(lists.len() == j, || format!("{} hyperplanes, expected {j}", lists.len()));
    let mut point_degree = vec![0usize; j];
    let mut sets: Vec<Vec<bool>> = Vec::with_capacity(lists.len());
    for (h, row) in lists.iter().enumerate() {
        let mut set = vec![false; j];
        let mut ok = true;
        for &a in row {
            if a >= j || set[a] {
                ok = false;
                continue;
            }
            set[a] = true;
            point_degree[a] += 1;
        }
        r.check(ok, || format!("hyperplane {h} has repeated or out-of-range points"));
        r.check(row.len() == gamma, || {
            format!("hyperplane {h} has degree {}, expected {gamma}", row.len())
        });
        sets.push(set);
    }
    for (a, &deg) in point_degree.iter().enumerate() {
        r.check(deg == gamma, || format!("point {a} has degree {deg}, expected {gamma}"));
    }
    let lambda = params.pair_intersection();
    for x in 0..sets.len() {
        for y in x + 1..sets.len() {
            let common = (0..j).filter(|&a| sets[x][a] && sets[y][a]).count();
            r.check(common == lambda, || {
                format!("hyperplanes {x} and {y} share {common} points, expected {lambda}")
            });
        }
    }
    if params.n == 2 {
        if let Some(row) = lists.first() {
            r.absorb(perfect_difference_set(row, j));
        }
    }
    r
}

/// Every nonzero residue mod `j` is a difference of exactly one ordered
/// pair of elements of `d`.
pub fn perfect_difference_set(d: &[usize], j: usize) -> CheckReport {
    let mut r = CheckReport::new("perfect-difference-set");
    let mut count = vec![0usize; j];
    for &x in d {
        for &y in d {
            if x != y {
                count[(x + j - y) % j] += 1;
            }
        }
    }
    for (diff, &c) in count.iter().enumerate().skip(1) {
        r.check(c == 1, || format!("difference {diff} occurs {c} times"));
    }
    r
}

/// True if `i -> (u*i + c) mod j` with gcd(u, j) = 1 maps `a` onto `b`.
pub fn affinely_equivalent(a: &[usize], b: &[usize], j: usize) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut target: Vec<usize> = b.to_vec();
    target.sort_unstable();
    (1..j.max(2))
        .filter(|&u| gcd(u, j) == 1)
        .any(|u| {
            (0..j).any(|c| {
                let mut img: Vec<usize> = a.iter().map(|&i| (u * i + c) % j).collect();
                img.sort_unstable();
                img == target
            })
        })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
