//! Type classes of message vectors and their partition into sets of small
//! diameter around the codewords of a minimum-distance-5 code.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, domain, Error, Result};

/// Default cap on the number of type-class members enumerated.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1_000_000;

/// Minimum distance of the partition code.
pub const PARTITION_DMIN: usize = 5;

/// Number of positions where two message vectors differ.
pub fn hamming(a: &[u32], b: &[u32]) -> Result<usize> {
    check_len(a.len(), b.len())?;
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count())
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All vectors in `{0..M}^ell` with exactly `t` nonzero entries, in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeClass {
    pub ell: usize,
    pub m: u32,
    pub t: usize,
    pub members: Vec<Vec<u32>>,
}

impl TypeClass {
    /// `C(ell, t) M^t`.
    pub fn size(ell: usize, m: u32, t: usize) -> f64 {
        binomial(ell, t) * (m as f64).powi(t as i32)
    }

    pub fn enumerate(ell: usize, m: u32, t: usize, budget: u64) -> Result<Self> {
        if t > ell {
            return Err(domain(format!("weight {t} exceeds length {ell}")));
        }
        let needed = Self::size(ell, m, t);
        if needed > budget as f64 {
            return Err(Error::ComplexityBudget { what: "type-class enumeration", needed, budget });
        }
        let mut members = Vec::with_capacity(needed as usize);
        let mut current = vec![0u32; ell];
        fill(&mut current, 0, t, m, &mut members);
        Ok(Self { ell, m, t, members })
    }
}

fn fill(current: &mut [u32], pos: usize, remaining: usize, m: u32, out: &mut Vec<Vec<u32>>) {
    if pos == current.len() {
        if remaining == 0 {
            out.push(current.to_vec());
        }
        return;
    }
    let slots_left = current.len() - pos;
    if remaining < slots_left {
        current[pos] = 0;
        fill(current, pos + 1, remaining, m, out);
    }
    if remaining > 0 {
        for v in 1..=m {
            current[pos] = v;
            fill(current, pos + 1, remaining - 1, m, out);
        }
        current[pos] = 0;
    }
}

/// Greedy code in member order: a member joins when it is at distance at
/// least `dmin` from every codeword chosen so far. Returns member indices.
pub fn greedy_min_dist_code(tc: &TypeClass, dmin: usize) -> Vec<usize> {
    let mut code: Vec<usize> = Vec::new();
    for (i, w) in tc.members.iter().enumerate() {
        let far = code
            .iter()
            .all(|&c| distance(&tc.members[c], w) >= dmin);
        if far {
            code.push(i);
        }
    }
    code
}

fn distance(a: &[u32], b: &[u32]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// One block of the partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartSet {
    pub center: Vec<u32>,
    pub members: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub ell: usize,
    pub m: u32,
    pub t: usize,
    pub sets: Vec<PartSet>,
}

/// Partitions the weight-`t` type class.
///
/// `t = 1` keeps the class whole. Otherwise a greedy distance-5 code is
/// built inside the class; members within distance 2 of a codeword join
/// that (unique) codeword, and the rest join the lowest-index codeword
/// within distance 4.
pub fn build_partition(ell: usize, m: u32, t: usize) -> Result<Partition> {
    build_partition_with_budget(ell, m, t, DEFAULT_ENUMERATION_BUDGET)
}

pub fn build_partition_with_budget(ell: usize, m: u32, t: usize, budget: u64) -> Result<Partition> {
    if ell < 5 {
        return Err(domain(format!("partition needs ell >= 5, got {ell}")));
    }
    if m < 2 {
        return Err(domain(format!("partition needs M >= 2, got {m}")));
    }
    if t == 0 || t > ell {
        return Err(domain(format!("weight must lie in 1..={ell}, got {t}")));
    }
    let tc = TypeClass::enumerate(ell, m, t, budget)?;
    if t == 1 {
        let center = tc.members[0].clone();
        return Ok(Partition { ell, m, t, sets: vec![PartSet { center, members: tc.members }] });
    }
    let code = greedy_min_dist_code(&tc, PARTITION_DMIN);
    let mut sets: Vec<PartSet> = code
        .iter()
        .map(|&c| PartSet { center: tc.members[c].clone(), members: Vec::new() })
        .collect();
    for w in &tc.members {
        let dists: Vec<usize> = sets.iter().map(|s| distance(&s.center, w)).collect();
        let near = dists.iter().position(|&d| d <= 2);
        let target = near.or_else(|| dists.iter().position(|&d| d < PARTITION_DMIN));
        match target {
            Some(j) => sets[j].members.push(w.clone()),
            None => return Err(domain("greedy code is not maximal")),
        }
    }
    Ok(Partition { ell, m, t, sets })
}

/// Size, diameter and radius of one block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetMetrics {
    pub size: usize,
    pub diameter: usize,
    pub radius: usize,
}

/// Outcome of [`verify_partition`]; failures are reported, not raised.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub disjoint: bool,
    pub covers: bool,
    pub min_size: usize,
    pub size_ok: bool,
    pub max_diameter: usize,
    pub diameter_ok: bool,
    pub max_radius: usize,
    pub radius_ok: bool,
    pub min_center_distance: Option<usize>,
    pub centers_ok: bool,
    pub sets: Vec<SetMetrics>,
    pub passed: bool,
}

/// Checks disjoint cover of the type class, `|S| >= ell + 1`, diameter at
/// most 8, radius at most 4, and pairwise center distance at least 5.
pub fn verify_partition(p: &Partition) -> PartitionReport {
    let class = TypeClass::enumerate(p.ell, p.m, p.t, u64::MAX).map(|tc| tc.members).unwrap_or_default();
    let mut seen = std::collections::HashSet::new();
    let mut disjoint = true;
    let mut metrics = Vec::with_capacity(p.sets.len());
    for s in &p.sets {
        for w in &s.members {
            if !seen.insert(w.clone()) {
                disjoint = false;
            }
        }
        let mut diameter = 0;
        for (i, a) in s.members.iter().enumerate() {
            for b in &s.members[i + 1..] {
                diameter = diameter.max(distance_or_max(a, b));
            }
        }
        let radius = s.members.iter().map(|w| distance_or_max(w, &s.center)).max().unwrap_or(0);
        metrics.push(SetMetrics { size: s.members.len(), diameter, radius });
    }
    let covers = seen.len() == class.len() && class.iter().all(|w| seen.contains(w));
    let min_size = metrics.iter().map(|m| m.size).min().unwrap_or(0);
    let max_diameter = metrics.iter().map(|m| m.diameter).max().unwrap_or(0);
    let max_radius = metrics.iter().map(|m| m.radius).max().unwrap_or(0);
    let mut min_center_distance: Option<usize> = None;
    for (i, a) in p.sets.iter().enumerate() {
        for b in &p.sets[i + 1..] {
            let d = distance_or_max(&a.center, &b.center);
            min_center_distance = Some(min_center_distance.map_or(d, |m| m.min(d)));
        }
    }
    let size_ok = !p.sets.is_empty() && min_size > p.ell;
    let diameter_ok = max_diameter <= 8;
    let radius_ok = max_radius <= 4;
    let centers_ok = min_center_distance.is_none_or(|d| d >= PARTITION_DMIN);
    PartitionReport {
        disjoint,
        covers,
        min_size,
        size_ok,
        max_diameter,
        diameter_ok,
        max_radius,
        radius_ok,
        min_center_distance,
        centers_ok,
        sets: metrics,
        passed: disjoint && covers && size_ok && diameter_ok && radius_ok && centers_ok,
    }
}

fn distance_or_max(a: &[u32], b: &[u32]) -> usize {
    hamming(a, b).unwrap_or(usize::MAX)
}

/// Probability of the weight-`t` type class:
/// `(1 - alpha)^(ell - t) (alpha / M)^t |T^t|`.
pub fn typeclass_probability(ell: usize, m: u32, t: usize, alpha: f64) -> Result<f64> {
    if t > ell {
        return Err(domain(format!("weight {t} exceeds length {ell}")));
    }
    if m < 1 {
        return Err(domain("M must be positive"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(domain(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    Ok((1.0 - alpha).powi((ell - t) as i32) * (alpha / m as f64).powi(t as i32) * TypeClass::size(ell, m, t))
}
