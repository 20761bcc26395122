//! Exact enumeration of colored maps glued from labeled stars.
//!
//! A star of type `q = X_{i1} ... X_{ip}` is a vertex with `p` cyclically
//! ordered half-edges colored `i1, ..., ip`, the first one distinguished. A
//! gluing is a color-respecting perfect matching of all half-edges; its genus
//! comes from Euler's formula `V - E + F = 2 - 2g`, counting faces as the
//! cycles of the corner permutation (star rotation composed with the matching
//! involution). `M_g` counts the connected gluings of genus `g`; stars are
//! labeled, so no automorphism quotient is applied.
//!
//! Counts are exact big integers; the brute-force enumeration is feasible up
//! to [`DEFAULT_HALF_EDGE_CAP`] half-edges per system.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::ncpoly::Word;

/// Default feasibility cap on the total number of half-edges.
pub const DEFAULT_HALF_EDGE_CAP: usize = 16;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("star type `{0}` contains starred letters; map counting is defined for plain monomials")]
    StarredWord(Word),
    #[error("system has {half_edges} half-edges, exceeding the feasibility cap {cap}; use the series solver instead")]
    CapExceeded { half_edges: usize, cap: usize },
    #[error("matching is not a color-respecting perfect matching: {0}")]
    BadMatching(String),
}

/// A collection of stars `(q_j, k_j)` with an optional observable star `P`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StarSystem {
    stars: Vec<(Word, usize)>,
    observable: Option<Word>,
}

/// A half-edge, addressed as (expanded star index, position within the star).
pub type HalfEdge = (usize, usize);

/// Result of tracing one gluing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GluingInfo {
    /// Total genus `(2C - V + E - F) / 2` summed over components.
    pub genus: usize,
    pub faces: usize,
    pub edges: usize,
    pub vertices: usize,
    pub connected: bool,
}

/// Tally of one full enumeration pass.
#[derive(Clone, Debug, Default)]
struct Tally {
    /// connected gluings by genus
    connected: BTreeMap<usize, u128>,
    /// all gluings (connected or not) by the Wick weight exponent `F - E - V`
    by_weight: BTreeMap<i64, u128>,
    total: u128,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for (g, c) in other.connected {
            *self.connected.entry(g).or_default() += c;
        }
        for (e, c) in other.by_weight {
            *self.by_weight.entry(e).or_default() += c;
        }
        self.total += other.total;
        self
    }
}

/// Flat half-edge tables for one system.
struct Expanded {
    color: Vec<u8>,
    star_of: Vec<usize>,
    /// sigma: next half-edge counterclockwise around its star
    next: Vec<usize>,
    n_stars: usize,
}

impl StarSystem {
    /// Build a system; duplicate star types are merged by summing
    /// multiplicities. All type words must be unstarred monomials.
    pub fn new(stars: Vec<(Word, usize)>, observable: Option<Word>) -> Result<Self, MapError> {
        let mut merged: Vec<(Word, usize)> = Vec::new();
        for (q, k) in stars {
            if !q.is_unstarred() {
                return Err(MapError::StarredWord(q));
            }
            if k == 0 {
                continue;
            }
            match merged.iter_mut().find(|(w, _)| *w == q) {
                Some((_, mult)) => *mult += k,
                None => merged.push((q, k)),
            }
        }
        if let Some(p) = &observable {
            if !p.is_unstarred() {
                return Err(MapError::StarredWord(p.clone()));
            }
        }
        Ok(StarSystem { stars: merged, observable: observable.filter(|p| !p.is_unit()) })
    }

    pub fn stars(&self) -> &[(Word, usize)] {
        &self.stars
    }

    pub fn observable(&self) -> Option<&Word> {
        self.observable.as_ref()
    }

    /// Total number of half-edges.
    pub fn half_edges(&self) -> usize {
        self.stars.iter().map(|(q, k)| q.degree() * k).sum::<usize>()
            + self.observable.as_ref().map(|p| p.degree()).unwrap_or(0)
    }

    fn expand(&self) -> Expanded {
        let mut color = Vec::new();
        let mut star_of = Vec::new();
        let mut next = Vec::new();
        let mut n_stars = 0;
        let mut push_star = |q: &Word| {
            let base = color.len();
            let d = q.degree();
            for (pos, l) in q.letters().iter().enumerate() {
                color.push(l.index() as u8);
                star_of.push(n_stars);
                next.push(base + (pos + 1) % d);
            }
            n_stars += 1;
        };
        for (q, k) in &self.stars {
            for _ in 0..*k {
                push_star(q);
            }
        }
        if let Some(p) = &self.observable {
            push_star(p);
        }
        Expanded { color, star_of, next, n_stars }
    }

    fn enumerate(&self, cap: usize) -> Result<Tally, MapError> {
        let he = self.half_edges();
        if he > cap {
            return Err(MapError::CapExceeded { half_edges: he, cap });
        }
        let ex = self.expand();
        // odd color class: no perfect matching exists
        let mut class_sizes = BTreeMap::new();
        for c in &ex.color {
            *class_sizes.entry(*c).or_insert(0usize) += 1;
        }
        if class_sizes.values().any(|s| s % 2 == 1) {
            return Ok(Tally::default());
        }
        if he == 0 {
            // the empty gluing: one planar "map" with no stars
            let mut t = Tally::default();
            t.connected.insert(0, 1);
            t.by_weight.insert(0, 1);
            t.total = 1;
            return Ok(t);
        }
        // parallelize over the partner of the first half-edge
        let partners: Vec<usize> =
            (1..he).filter(|h| ex.color[*h] == ex.color[0]).collect();
        let tally = partners
            .into_par_iter()
            .map(|p| {
                let mut matched = vec![usize::MAX; he];
                matched[0] = p;
                matched[p] = 0;
                let mut t = Tally::default();
                recurse(&ex, &mut matched, &mut t);
                t
            })
            .reduce(Tally::default, Tally::merge);
        Ok(tally)
    }

    /// `M_g`: the exact number of connected gluings of genus `g`.
    pub fn count_maps(&self, genus: usize) -> Result<BigUint, MapError> {
        self.count_maps_with_cap(genus, DEFAULT_HALF_EDGE_CAP)
    }

    pub fn count_maps_with_cap(&self, genus: usize, cap: usize) -> Result<BigUint, MapError> {
        Ok(self
            .enumerate(cap)?
            .connected
            .get(&genus)
            .map(|c| BigUint::from(*c))
            .unwrap_or_else(BigUint::zero))
    }

    /// Connected counts for every genus that occurs.
    pub fn counts_by_genus(&self) -> Result<BTreeMap<usize, BigUint>, MapError> {
        self.counts_by_genus_with_cap(DEFAULT_HALF_EDGE_CAP)
    }

    pub fn counts_by_genus_with_cap(
        &self,
        cap: usize,
    ) -> Result<BTreeMap<usize, BigUint>, MapError> {
        Ok(self
            .enumerate(cap)?
            .connected
            .into_iter()
            .map(|(g, c)| (g, BigUint::from(c)))
            .collect())
    }

    /// Total number of color-respecting perfect matchings, connected or not:
    /// the product of `(n_c - 1)!!` over color classes.
    pub fn total_matchings(&self) -> Result<BigUint, MapError> {
        self.total_matchings_with_cap(DEFAULT_HALF_EDGE_CAP)
    }

    pub fn total_matchings_with_cap(&self, cap: usize) -> Result<BigUint, MapError> {
        Ok(BigUint::from(self.enumerate(cap)?.total))
    }

    /// The Wick sum `Σ N^{F - E - V}` over all gluings, connected or not.
    ///
    /// This equals the exact Gaussian moment `E[Π_v (1/N) Tr q_v(H)]` over a
    /// GUE matrix tuple `H` with entry variance `1/N`, and reduces to the
    /// genus expansion `Σ_g M_g N^{-2g}` for single-star systems.
    pub fn gaussian_genus_expansion(&self, n: u64) -> Result<BigRational, MapError> {
        self.gaussian_genus_expansion_with_cap(n, DEFAULT_HALF_EDGE_CAP)
    }

    pub fn gaussian_genus_expansion_with_cap(
        &self,
        n: u64,
        cap: usize,
    ) -> Result<BigRational, MapError> {
        assert!(n >= 1);
        let tally = self.enumerate(cap)?;
        let mut sum = BigRational::zero();
        let nn = BigInt::from(n);
        for (expo, count) in tally.by_weight {
            let w = if expo >= 0 {
                BigRational::from_integer(nn.pow(expo as u32))
            } else {
                BigRational::new(BigInt::one(), nn.pow((-expo) as u32))
            };
            sum += w * BigRational::from_integer(BigInt::from(count));
        }
        Ok(sum)
    }

    /// Trace one explicit gluing, given as a list of half-edge pairs.
    pub fn genus_of(&self, pairs: &[(HalfEdge, HalfEdge)]) -> Result<GluingInfo, MapError> {
        let ex = self.expand();
        let he = ex.color.len();
        // star degree offsets for (star, pos) -> flat id
        let mut offsets = Vec::with_capacity(ex.n_stars);
        let mut off = 0;
        for s in 0..ex.n_stars {
            offsets.push(off);
            off += ex.star_of.iter().filter(|x| **x == s).count();
        }
        let flat = |(s, p): HalfEdge| -> Result<usize, MapError> {
            if s >= ex.n_stars {
                return Err(MapError::BadMatching(format!("star {s} out of range")));
            }
            let deg = ex.star_of.iter().filter(|x| **x == s).count();
            if p >= deg {
                return Err(MapError::BadMatching(format!(
                    "position {p} out of range for star {s} of degree {deg}"
                )));
            }
            Ok(offsets[s] + p)
        };
        let mut matched = vec![usize::MAX; he];
        for (a, b) in pairs {
            let (fa, fb) = (flat(*a)?, flat(*b)?);
            if fa == fb {
                return Err(MapError::BadMatching("half-edge matched to itself".into()));
            }
            if matched[fa] != usize::MAX || matched[fb] != usize::MAX {
                return Err(MapError::BadMatching("half-edge matched twice".into()));
            }
            if ex.color[fa] != ex.color[fb] {
                return Err(MapError::BadMatching(format!(
                    "colors {} and {} differ",
                    ex.color[fa], ex.color[fb]
                )));
            }
            matched[fa] = fb;
            matched[fb] = fa;
        }
        if matched.iter().any(|p| *p == usize::MAX) {
            return Err(MapError::BadMatching("matching is not perfect".into()));
        }
        Ok(trace_gluing(&ex, &matched))
    }
}

fn recurse(ex: &Expanded, matched: &mut [usize], tally: &mut Tally) {
    let Some(h0) = matched.iter().position(|p| *p == usize::MAX) else {
        let info = trace_gluing(ex, matched);
        if info.connected {
            *tally.connected.entry(info.genus).or_default() += 1;
        }
        let expo = info.faces as i64 - info.edges as i64 - info.vertices as i64;
        *tally.by_weight.entry(expo).or_default() += 1;
        tally.total += 1;
        return;
    };
    for h1 in h0 + 1..matched.len() {
        if matched[h1] == usize::MAX && ex.color[h1] == ex.color[h0] {
            matched[h0] = h1;
            matched[h1] = h0;
            recurse(ex, matched, tally);
            matched[h0] = usize::MAX;
            matched[h1] = usize::MAX;
        }
    }
}

fn trace_gluing(ex: &Expanded, matched: &[usize]) -> GluingInfo {
    let he = matched.len();
    let vertices = ex.n_stars;
    let edges = he / 2;
    // faces: cycles of sigma . alpha
    let mut seen = vec![false; he];
    let mut faces = 0;
    for start in 0..he {
        if seen[start] {
            continue;
        }
        faces += 1;
        let mut h = start;
        while !seen[h] {
            seen[h] = true;
            h = ex.next[matched[h]];
        }
    }
    // connectivity of the star-edge incidence graph
    let mut parent: Vec<usize> = (0..vertices).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for h in 0..he {
        let (a, b) = (ex.star_of[h], ex.star_of[matched[h]]);
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let mut roots: Vec<usize> = (0..vertices).map(|v| find(&mut parent, v)).collect();
    roots.sort_unstable();
    roots.dedup();
    let components = roots.len().max(1);
    let chi = vertices as i64 - edges as i64 + faces as i64;
    let genus2 = 2 * components as i64 - chi;
    debug_assert!(genus2 >= 0 && genus2 % 2 == 0, "Euler bookkeeping failure");
    GluingInfo {
        genus: (genus2 / 2) as usize,
        faces,
        edges,
        vertices,
        connected: components == 1,
    }
}
