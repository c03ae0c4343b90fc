//! Multi-rate loss queue with geometric service over occupancy counts
//! `(n1, n2)`.
//!
//! States are partitioned into levels by `n1`. At most one regular task
//! arrives per slot, so the generator `Q = P − I` is block lower Hessenberg
//! and the stationary vector follows from a backward recursion of rate
//! matrices `R_k` over censored level generators. A dense direct solve of
//! the full chain is kept alongside as an independent check.

use std::fmt;
use std::io::Write;

use faer::linalg::solvers::Solve;
use faer::{Col, Mat};

use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};
use crate::markov::{clean_distribution, SparseChain};
use crate::pool::{PoolModel, PoolState, SolveMethod, SteadyState};
use crate::queue_det::admission_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GeoState {
    pub n1: u32,
    pub n2: u32,
}

impl PoolState for GeoState {
    fn active(&self) -> [u32; 2] {
        [self.n1, self.n2]
    }
}

impl fmt::Display for GeoState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.n1, self.n2)
    }
}

/// `½ (C+1 + (C+1 − N⌊C/N⌋)) (⌊C/N⌋ + 1)`, the size of the occupancy
/// lattice when regular tasks take one unit.
pub fn count_states_geo(capacity: u32, units2: u32) -> u64 {
    let c = u64::from(capacity);
    let n = u64::from(units2);
    let q = c / n;
    (2 * (c + 1) - n * q) * (q + 1) / 2
}

/// `C(n, κ) (1 − μ)^κ μ^(n − κ)`: probability that `κ` of `n` active tasks
/// remain when each completes independently with probability `μ`.
pub fn binomial_departure(n: u32, mu: f64, kappa: u32) -> f64 {
    if kappa > n {
        return 0.0;
    }
    let k = kappa.min(n - kappa);
    let coeff = (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1));
    coeff * (1.0 - mu).powi(kappa as i32) * mu.powi((n - kappa) as i32)
}

/// Level-ordered state space: level `n1`, then `n2` ascending.
#[derive(Debug, Clone)]
pub struct LevelPartition {
    /// `levels[n1]` = feasible `n2` values, ascending.
    pub levels: Vec<Vec<u32>>,
    offsets: Vec<usize>,
}

impl LevelPartition {
    pub fn new(pool: &PoolModel) -> Self {
        let top = pool.capacity / pool.units[0];
        let levels: Vec<Vec<u32>> = (0..=top)
            .map(|n1| {
                let room = pool.capacity - pool.units[0] * n1;
                (0..=room / pool.units[1]).collect()
            })
            .collect();
        let mut offsets = Vec::with_capacity(levels.len() + 1);
        let mut acc = 0;
        for l in &levels {
            offsets.push(acc);
            acc += l.len();
        }
        offsets.push(acc);
        LevelPartition { levels, offsets }
    }

    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level_range(&self, n1: usize) -> std::ops::Range<usize> {
        self.offsets[n1]..self.offsets[n1 + 1]
    }

    pub fn index(&self, s: GeoState) -> Option<usize> {
        let level = self.levels.get(s.n1 as usize)?;
        (s.n2 < level.len() as u32).then(|| self.offsets[s.n1 as usize] + s.n2 as usize)
    }

    pub fn states(&self) -> Vec<GeoState> {
        self.levels
            .iter()
            .enumerate()
            .flat_map(|(n1, l)| l.iter().map(move |&n2| GeoState { n1: n1 as u32, n2 }))
            .collect()
    }

    pub fn write_states<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# index n1 n2")?;
        for (i, s) in self.states().iter().enumerate() {
            writeln!(w, "{i} {} {}", s.n1, s.n2)?;
        }
        Ok(())
    }
}

/// One-slot transition probability between two feasible states.
pub fn transition_prob_geo(from: GeoState, to: GeoState, pool: &PoolModel) -> f64 {
    let mu = pool.completion_prob();
    admission_for(from.active(), pool)
        .iter()
        .map(|&(adm, p)| {
            if p <= 0.0 {
                return 0.0;
            }
            let [a1, a2] = adm.bits().map(u32::from);
            match (to.n1.checked_sub(a1), to.n2.checked_sub(a2)) {
                (Some(k1), Some(k2)) => {
                    p * binomial_departure(from.n1, mu[0], k1) * binomial_departure(from.n2, mu[1], k2)
                }
                _ => 0.0,
            }
        })
        .sum()
}

fn check_pool(pool: &PoolModel) -> Result<()> {
    if pool.capacity == 0 || pool.units.contains(&0) || pool.service_slots.contains(&0) {
        return Err(Error::Domain(format!(
            "capacity, unit demands and service times must be positive: {pool:?}"
        )));
    }
    if pool.arrival.iter().any(|a| !(0.0..=1.0).contains(a))
        || pool.arrival[0] + pool.arrival[1] > 1.0 + 1e-12
    {
        return Err(Error::Domain(format!(
            "arrival probabilities {:?} are not a sub-distribution",
            pool.arrival
        )));
    }
    Ok(())
}

/// Sparse transition matrix in level order.
pub fn build_chain(pool: &PoolModel, part: &LevelPartition) -> SparseChain {
    let mu = pool.completion_prob();
    let mut chain = SparseChain::with_states(part.len());
    for (i, s) in part.states().into_iter().enumerate() {
        let dep1: Vec<f64> = (0..=s.n1).map(|k| binomial_departure(s.n1, mu[0], k)).collect();
        let dep2: Vec<f64> = (0..=s.n2).map(|k| binomial_departure(s.n2, mu[1], k)).collect();
        for (adm, p) in admission_for(s.active(), pool) {
            if p <= 0.0 {
                continue;
            }
            let [a1, a2] = adm.bits().map(u32::from);
            for (k1, &b1) in dep1.iter().enumerate() {
                for (k2, &b2) in dep2.iter().enumerate() {
                    let to = GeoState {
                        n1: k1 as u32 + a1,
                        n2: k2 as u32 + a2,
                    };
                    let j = part.index(to).expect("admission keeps occupancy within capacity");
                    chain.add(i, j, p * b1 * b2);
                }
            }
        }
    }
    chain
}

/// Direct solve of the full balance system with a dense LU.
pub fn solve_direct(pool: &PoolModel) -> Result<SteadyState<GeoState>> {
    check_pool(pool)?;
    let part = LevelPartition::new(pool);
    let chain = build_chain(pool, &part);
    let n = part.len();
    if n == 1 {
        return Ok(SteadyState {
            states: part.states(),
            probs: vec![1.0],
            method: SolveMethod::Trivial,
        });
    }
    // (Pᵀ − I) π = 0 with the first equation replaced by Σπ = 1.
    let mut a = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = -1.0;
    }
    for i in 0..n {
        for &(j, p) in chain.row(i) {
            a[(j, i)] += p;
        }
    }
    for j in 0..n {
        a[(0, j)] = 1.0;
    }
    let mut rhs = Col::<f64>::zeros(n);
    rhs[0] = 1.0;
    let x = a.partial_piv_lu().solve(&rhs);
    let mut probs: Vec<f64> = (0..n).map(|i| x[i]).collect();
    if probs.iter().any(|p| !p.is_finite()) {
        return Err(Error::Numerical(format!(
            "direct solve of the {n}-state occupancy chain produced non-finite values"
        )));
    }
    clean_distribution(&mut probs);
    let residual = chain.residual(&probs);
    if residual > 1e-12 {
        return Err(Error::Numerical(format!(
            "direct solve residual {residual:e} exceeds 1e-12 ({n} states)"
        )));
    }
    Ok(SteadyState {
        states: part.states(),
        probs,
        method: SolveMethod::DenseLu,
    })
}

/// Generator blocks `Q_{j,k}` for every level pair.
pub struct GeneratorBlocks {
    blocks: Vec<Vec<Matrix>>,
}

impl GeneratorBlocks {
    pub fn new(pool: &PoolModel, part: &LevelPartition) -> Self {
        let chain = build_chain(pool, part);
        let l = part.num_levels();
        let mut blocks: Vec<Vec<Matrix>> = (0..l)
            .map(|j| {
                (0..l)
                    .map(|k| Matrix::zeros(part.levels[j].len(), part.levels[k].len()))
                    .collect()
            })
            .collect();
        for j in 0..l {
            for (r, i) in part.level_range(j).enumerate() {
                blocks[j][j][(r, r)] -= 1.0;
                for &(to, p) in chain.row(i) {
                    let k = (0..l).find(|&k| part.level_range(k).contains(&to)).unwrap();
                    let c = to - part.level_range(k).start;
                    blocks[j][k][(r, c)] += p;
                }
            }
        }
        GeneratorBlocks { blocks }
    }

    pub fn get(&self, j: usize, k: usize) -> &Matrix {
        &self.blocks[j][k]
    }

    /// True when every block above the first superdiagonal is zero.
    pub fn is_lower_hessenberg(&self) -> bool {
        let l = self.blocks.len();
        (0..l).all(|j| (j + 2..l).all(|k| self.blocks[j][k].max_abs() == 0.0))
    }
}

/// `X = −B M⁻¹`, computed row by row from `Mᵀ xᵀ = −bᵀ`.
fn right_divide_neg(b: &Matrix, m_lu_t: &Lu) -> Matrix {
    let mut out = Matrix::zeros(b.rows(), b.cols());
    for r in 0..b.rows() {
        let rhs: Vec<f64> = b.row(r).iter().map(|v| -v).collect();
        let x = m_lu_t.solve(&rhs);
        for (c, v) in x.into_iter().enumerate() {
            out[(r, c)] = v;
        }
    }
    out
}

/// Matrix-geometric solution over levels of `n1`.
pub fn solve_matrix_geometric(pool: &PoolModel) -> Result<SteadyState<GeoState>> {
    check_pool(pool)?;
    let part = LevelPartition::new(pool);
    let q = GeneratorBlocks::new(pool, &part);
    let top = part.num_levels() - 1;

    // rates[k] = R_k (level k-1 -> k), k = 1..=top; index 0 unused.
    let mut rates: Vec<Matrix> = vec![Matrix::zeros(0, 0); top + 1];
    // prods[n - (k)] = Π_{m=k}^{n} R_m for the current k, n = k..=top.
    let mut prods: Vec<Matrix> = Vec::new();
    for k in (1..=top).rev() {
        // Censored generator of level k.
        let mut censored = q.get(k, k).clone();
        for (offset, prod) in prods.iter().enumerate() {
            let n = k + 1 + offset;
            censored.add_assign(&prod.matmul(q.get(n, k)));
        }
        let lu = Lu::factor(&censored.transpose()).map_err(|s| {
            Error::Numerical(format!(
                "censored generator at level {k} is singular (pivot {:e} at column {}, scale {:e})",
                s.pivot, s.column, s.scale
            ))
        })?;
        let r_k = right_divide_neg(q.get(k - 1, k), &lu);
        let mut next = Vec::with_capacity(prods.len() + 1);
        next.push(r_k.clone());
        for prod in &prods {
            next.push(r_k.matmul(prod));
        }
        prods = next;
        rates[k] = r_k;
    }

    // Boundary level: S0 [Q00 + Σ Π_{1..n} Q_{n,0}] = 0 with S0 w = 1.
    let mut boundary = q.get(0, 0).clone();
    let size0 = part.levels[0].len();
    let mut weight = vec![1.0; size0];
    for (offset, prod) in prods.iter().enumerate() {
        let n = 1 + offset;
        boundary.add_assign(&prod.matmul(q.get(n, 0)));
        for (w, s) in weight.iter_mut().zip(prod.row_sums()) {
            *w += s;
        }
    }
    for (r, w) in weight.iter().enumerate() {
        boundary[(r, 0)] = *w;
    }
    let mut rhs = vec![0.0; size0];
    rhs[0] = 1.0;
    let lu = Lu::factor(&boundary.transpose()).map_err(|s| {
        Error::Numerical(format!(
            "boundary system at level 0 is singular (pivot {:e} at column {})",
            s.pivot, s.column
        ))
    })?;
    let mut level = lu.solve(&rhs);

    let mut probs = Vec::with_capacity(part.len());
    probs.extend_from_slice(&level);
    for r_k in rates.iter().skip(1) {
        level = r_k.left_mul_vec(&level);
        probs.extend_from_slice(&level);
    }
    if probs.iter().any(|p| !p.is_finite()) {
        return Err(Error::Numerical("matrix-geometric recursion diverged".into()));
    }
    clean_distribution(&mut probs);
    Ok(SteadyState {
        states: part.states(),
        probs,
        method: SolveMethod::MatrixGeometric,
    })
}
