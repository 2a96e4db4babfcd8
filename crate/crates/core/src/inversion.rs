//! Recovering the submessages from the decoded equations over `F_p`.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use crate::alignment::{canonical_signatures, derive_equation_system, EquationSystem};
use crate::channel::ChannelMatrix;
use crate::diophantine::{ExponentMatrix, DEFAULT_REL_TOL};
use crate::error::{invalid, Error, Result};
use crate::fpcode::PrimeField;

/// The 0/1 map from submessages `(k, i)` to equations `(m, group)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceSystem {
    /// `(receiver, group)` per row.
    pub rows: Vec<(usize, usize)>,
    /// `(transmitter, submessage)` per column.
    pub cols: Vec<(usize, usize)>,
    /// Sorted column indices of the ones in each row.
    pub support: Vec<Vec<usize>>,
}

impl IncidenceSystem {
    pub fn column_sums(&self) -> Vec<usize> {
        let mut sums = vec![0; self.cols.len()];
        for row in &self.support {
            for &c in row {
                sums[c] += 1;
            }
        }
        sums
    }

    /// Dense copy, for inspection and tests.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        self.support
            .iter()
            .map(|row| {
                let mut d = vec![0; self.cols.len()];
                for &c in row {
                    d[c] = 1;
                }
                d
            })
            .collect()
    }
}

pub fn build_incidence(eq: &EquationSystem) -> IncidenceSystem {
    let mut cols = Vec::new();
    let mut offset = Vec::with_capacity(eq.k);
    for (k, sigs) in eq.signatures.iter().enumerate() {
        offset.push(cols.len());
        cols.extend((0..sigs.len()).map(|i| (k, i)));
    }
    let mut rows = Vec::new();
    let mut support = Vec::new();
    for (m, groups) in eq.receivers.iter().enumerate() {
        for (gi, g) in groups.iter().enumerate() {
            rows.push((m, gi));
            let mut s: Vec<usize> = g.contributors.iter().map(|&(k, i)| offset[k] + i).collect();
            s.sort_unstable();
            support.push(s);
        }
    }
    IncidenceSystem { rows, cols, support }
}

/// Flattens per-receiver equation values into incidence row order.
pub fn flatten_equations(eq: &EquationSystem, u: &[Vec<u64>]) -> Result<Vec<u64>> {
    if u.len() != eq.receivers.len() || u.iter().zip(&eq.receivers).any(|(a, b)| a.len() != b.len()) {
        return Err(invalid("equation values do not match the equation system"));
    }
    Ok(u.iter().flatten().copied().collect())
}

fn unflatten(eq: &EquationSystem, w: Vec<u64>) -> Vec<Vec<u64>> {
    let mut it = w.into_iter();
    eq.signatures
        .iter()
        .map(|s| it.by_ref().take(s.len()).collect())
        .collect()
}

struct Elimination {
    rank: usize,
    /// Pivot column → reduced row (containing only that column).
    pivots: Vec<Option<usize>>,
    rows: Vec<BTreeMap<usize, u64>>,
    rhs: Vec<u64>,
}

/// Gauss-Jordan elimination over `F_p` on sparse rows, pivoting on the
/// lightest remaining row.
fn eliminate(support: &[Vec<usize>], ncols: usize, rhs: &[u64], f: &PrimeField) -> Elimination {
    let mut rows: Vec<BTreeMap<usize, u64>> = support
        .iter()
        .map(|s| s.iter().map(|&c| (c, 1u64)).collect())
        .collect();
    let mut rhs: Vec<u64> = rhs.iter().map(|&v| f.reduce(v)).collect();
    let mut col_rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ncols];
    for (r, row) in rows.iter().enumerate() {
        for &c in row.keys() {
            col_rows[c].insert(r);
        }
    }
    let mut done = vec![false; rows.len()];
    let mut pivots = vec![None; ncols];
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
        rows.iter().enumerate().map(|(r, row)| Reverse((row.len(), r))).collect();
    let mut rank = 0;
    while let Some(Reverse((w, r))) = heap.pop() {
        if done[r] || rows[r].len() != w {
            continue;
        }
        if w == 0 {
            done[r] = true;
            continue;
        }
        done[r] = true;
        let (&c, &a) = rows[r].iter().next().expect("nonempty row");
        let inv = f.inv(a).expect("pivot is nonzero");
        for v in rows[r].values_mut() {
            *v = f.mul(*v, inv);
        }
        rhs[r] = f.mul(rhs[r], inv);
        let pivot_row: Vec<(usize, u64)> = rows[r].iter().map(|(&c, &v)| (c, v)).collect();
        let targets: Vec<usize> = col_rows[c].iter().copied().filter(|&t| t != r).collect();
        for t in targets {
            let factor = rows[t][&c];
            for &(pc, pv) in &pivot_row {
                let cur = rows[t].get(&pc).copied().unwrap_or(0);
                let nv = f.sub(cur, f.mul(factor, pv));
                if nv == 0 {
                    rows[t].remove(&pc);
                    col_rows[pc].remove(&t);
                } else {
                    if cur == 0 {
                        col_rows[pc].insert(t);
                    }
                    rows[t].insert(pc, nv);
                }
            }
            rhs[t] = f.sub(rhs[t], f.mul(factor, rhs[r]));
            if !done[t] {
                heap.push(Reverse((rows[t].len(), t)));
            }
        }
        pivots[c] = Some(r);
        rank += 1;
    }
    Elimination {
        rank,
        pivots,
        rows,
        rhs,
    }
}

/// Rank of the incidence matrix over `F_p`.
pub fn incidence_rank(sys: &IncidenceSystem, f: &PrimeField) -> usize {
    eliminate(&sys.support, sys.cols.len(), &vec![0; sys.rows.len()], f).rank
}

/// Solves `incidence · w = u` over `F_p`. Inconsistency is reported before
/// rank deficiency.
pub fn solve_linear(sys: &IncidenceSystem, u: &[u64], f: &PrimeField) -> Result<Vec<u64>> {
    if u.len() != sys.rows.len() {
        return Err(invalid(format!(
            "expected {} equation values, got {}",
            sys.rows.len(),
            u.len()
        )));
    }
    let el = eliminate(&sys.support, sys.cols.len(), u, f);
    if let Some(row) = (0..el.rows.len()).find(|&r| el.rows[r].is_empty() && el.rhs[r] != 0) {
        return Err(Error::Inconsistent { row });
    }
    if el.rank < sys.cols.len() {
        return Err(Error::RankDeficient {
            rank: el.rank,
            columns: sys.cols.len(),
        });
    }
    Ok(el
        .pivots
        .iter()
        .map(|p| el.rhs[p.expect("full rank")])
        .collect())
}

/// Result of [`peel_invert`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeelOutcome {
    /// Recovered submessages per transmitter, in signature order.
    pub w: Vec<Vec<u64>>,
    /// Top-level (degree, receiver, transmitter) steps that resolved something.
    pub rounds: usize,
}

struct Peeler<'a> {
    eq: &'a EquationSystem,
    f: PrimeField,
    l: u32,
    k: usize,
    residual: Vec<Vec<u64>>,
    known: Vec<Vec<Option<u64>>>,
}

#[derive(Clone)]
struct View {
    receivers: Vec<usize>,
    transmitters: Vec<usize>,
    /// Exponent constraints `(m, k, value)` on entries outside the block.
    fixed: Vec<(usize, usize, u32)>,
}

impl Peeler<'_> {
    fn in_view(&self, s: &ExponentMatrix, v: &View) -> bool {
        v.fixed.iter().all(|&(m, k, e)| s.get(m, k) == e)
    }

    fn resolve_via(&mut self, tx: usize, i: usize, m: usize) -> Result<()> {
        let gi = self.eq.position[m][tx][i];
        let group = &self.eq.receivers[m][gi];
        let open: Vec<(usize, usize)> = group
            .contributors
            .iter()
            .copied()
            .filter(|&(k, j)| self.known[k][j].is_none())
            .collect();
        if open != [(tx, i)] {
            return Err(Error::PeelStall {
                remaining: self.unresolved(),
            });
        }
        let value = self.residual[m][gi];
        self.known[tx][i] = Some(value);
        for r in 0..self.k {
            let g = self.eq.position[r][tx][i];
            self.residual[r][g] = self.f.sub(self.residual[r][g], value);
        }
        Ok(())
    }

    fn unresolved(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (k, row) in self.known.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                if v.is_none() {
                    out.push((k, i));
                }
            }
        }
        out
    }

    /// Resolves every unknown of the view; returns the number of top-level
    /// steps that resolved at least one submessage.
    fn solve(&mut self, v: &View) -> Result<usize> {
        let mut rounds = 0;
        let n = self.k;
        for d in (1..=self.l).rev() {
            let top = d - 1;
            let mut productive = vec![false; n * n];
            // Stage 1: s_{m,k} = top at transmitter k is only reachable from k
            // at receiver m, one degree up.
            for &m in &v.receivers {
                for &tx in &v.transmitters {
                    for i in 0..self.eq.signatures[tx].len() {
                        let s = &self.eq.signatures[tx][i];
                        if self.known[tx][i].is_none() && s.get(m, tx) == top && self.in_view(s, v) {
                            self.resolve_via(tx, i, m)?;
                            productive[m * n + tx] = true;
                        }
                    }
                }
            }
            if v.receivers.len() >= 2 {
                // Stage 2: other transmitters' submessages with
                // s_{m̃,k̃} = top, one reduced system per class of row m̃ and
                // column k̃.
                for &mt in &v.receivers {
                    for &kt in &v.transmitters {
                        let child_r: Vec<usize> = v.receivers.iter().copied().filter(|&m| m != mt).collect();
                        let child_t: Vec<usize> = v.transmitters.iter().copied().filter(|&k| k != kt).collect();
                        let mut classes: BTreeSet<Vec<(usize, usize, u32)>> = BTreeSet::new();
                        for &tx in &child_t {
                            for (i, s) in self.eq.signatures[tx].iter().enumerate() {
                                if self.known[tx][i].is_none() && s.get(mt, kt) == top && self.in_view(s, v) {
                                    let mut fixed = v.fixed.clone();
                                    fixed.push((mt, kt, top));
                                    fixed.extend(child_t.iter().map(|&k| (mt, k, s.get(mt, k))));
                                    fixed.extend(child_r.iter().map(|&m| (m, kt, s.get(m, kt))));
                                    classes.insert(fixed);
                                }
                            }
                        }
                        productive[mt * n + kt] |= !classes.is_empty();
                        for fixed in classes {
                            let child = View {
                                receivers: child_r.clone(),
                                transmitters: child_t.clone(),
                                fixed,
                            };
                            self.solve(&child)?;
                        }
                    }
                }
            }
            rounds += productive.iter().filter(|&&b| b).count();
        }
        Ok(rounds)
    }
}

/// Constructive inversion of a canonical `G_L` system: strip the submessages
/// whose exponents are extreme, then reduce by factor classes to a system
/// with one transmitter and receiver fewer, for each degree from `L` down.
pub fn peel_invert(eq: &EquationSystem, u: &[Vec<u64>], f: &PrimeField) -> Result<PeelOutcome> {
    let l = eq
        .canonical_l
        .ok_or_else(|| invalid("peeling needs a canonical signature system"))?;
    flatten_equations(eq, u)?;
    let k = eq.k;
    let mut p = Peeler {
        eq,
        f: *f,
        l: l as u32,
        k,
        residual: u.iter().map(|r| r.iter().map(|&v| f.reduce(v)).collect()).collect(),
        known: eq.signatures.iter().map(|s| vec![None; s.len()]).collect(),
    };
    let top = View {
        receivers: (0..k).collect(),
        transmitters: (0..k).collect(),
        fixed: vec![],
    };
    let rounds = p.solve(&top)?;
    let remaining = p.unresolved();
    if !remaining.is_empty() {
        return Err(Error::PeelStall { remaining });
    }
    Ok(PeelOutcome {
        w: p.known
            .into_iter()
            .map(|r| r.into_iter().map(|v| v.expect("resolved")).collect())
            .collect(),
        rounds,
    })
}

/// Peeling for canonical systems, linear solving otherwise.
pub fn invert(eq: &EquationSystem, u: &[Vec<u64>], f: &PrimeField) -> Result<Vec<Vec<u64>>> {
    if eq.canonical_l.is_some() {
        Ok(peel_invert(eq, u, f)?.w)
    } else {
        let sys = build_incidence(eq);
        let w = solve_linear(&sys, &flatten_equations(eq, u)?, f)?;
        Ok(unflatten(eq, w))
    }
}

/// [`solve_linear`] on an equation system, returning per-transmitter values.
pub fn solve_system(eq: &EquationSystem, u: &[Vec<u64>], f: &PrimeField) -> Result<Vec<Vec<u64>>> {
    let sys = build_incidence(eq);
    let w = solve_linear(&sys, &flatten_equations(eq, u)?, f)?;
    Ok(unflatten(eq, w))
}

/// `u_{m,g} = Σ_k w_{k, g/h_{m,k}} mod p`.
pub fn apply_incidence(eq: &EquationSystem, w: &[Vec<u64>], f: &PrimeField) -> Vec<Vec<u64>> {
    eq.receivers
        .iter()
        .map(|groups| {
            groups
                .iter()
                .map(|g| g.contributors.iter().fold(0, |acc, &(k, i)| f.add(acc, w[k][i])))
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Injectivity {
    pub injective: bool,
    pub rank: usize,
    pub columns: usize,
}

/// Rank over `F_p` of the canonical `G_L` incidence system.
pub fn injectivity_check(h: &ChannelMatrix, l: usize, p: u64) -> Result<Injectivity> {
    let f = PrimeField::new(p)?;
    let sig = canonical_signatures(h, l)?;
    let eq = derive_equation_system(&sig, h, DEFAULT_REL_TOL)?;
    let sys = build_incidence(&eq);
    let rank = incidence_rank(&sys, &f);
    Ok(Injectivity {
        injective: rank == sys.cols.len(),
        rank,
        columns: sys.cols.len(),
    })
}
