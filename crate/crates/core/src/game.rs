//! The attack × defense matrix game.
//!
//! Payoffs are late fractions: the attacker (rows) maximizes, the defender
//! (columns) minimizes.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;

use crate::attack::{AttackStrategy, Planner};
use crate::defense::{DefenseStrategy, Router};
use crate::graph::RoadNetwork;
use crate::sim::{run_round_with, JobCard, RoundMetrics};
use crate::{Error, Result, Scalar};

/// Default certification tolerance of [`solve_zero_sum`].
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Per-seed payoffs for every (attack, defense) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct PayoffMatrix<T> {
    pub attacks: Vec<String>,
    pub defenses: Vec<String>,
    pub seeds: Vec<u64>,
    /// `samples[i][j][s]` is the payoff of cell `(i, j)` under `seeds[s]`.
    pub samples: Vec<Vec<Vec<T>>>,
}

impl<T: Scalar> PayoffMatrix<T> {
    /// A matrix with one sample per cell and generated labels.
    pub fn from_values(values: &[Vec<T>]) -> Result<Self> {
        let rows = values.len();
        let cols = values.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || values.iter().any(|r| r.len() != cols) {
            return Err(Error::Domain("payoff matrix must be nonempty and rectangular".into()));
        }
        Ok(PayoffMatrix {
            attacks: (0..rows).map(|i| format!("a{i}")).collect(),
            defenses: (0..cols).map(|j| format!("d{j}")).collect(),
            seeds: vec![0],
            samples: values
                .iter()
                .map(|r| r.iter().map(|&v| vec![v]).collect())
                .collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.attacks.len()
    }

    pub fn cols(&self) -> usize {
        self.defenses.len()
    }

    pub fn mean(&self, i: usize, j: usize) -> T {
        let s = &self.samples[i][j];
        s.iter().copied().sum::<T>() / T::lit(s.len() as f64)
    }

    /// Sample standard deviation (`n − 1` denominator); zero for one sample.
    pub fn std_dev(&self, i: usize, j: usize) -> T {
        let s = &self.samples[i][j];
        if s.len() < 2 {
            return T::zero();
        }
        let mu = self.mean(i, j);
        let ss: T = s.iter().map(|&x| (x - mu) * (x - mu)).sum();
        (ss / T::lit((s.len() - 1) as f64)).sqrt()
    }

    /// Cell means.
    pub fn values(&self) -> Vec<Vec<T>> {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.mean(i, j)).collect())
            .collect()
    }
}

/// Round metrics of one cell, one entry per seed.
#[derive(Clone, Debug, PartialEq)]
pub struct CellRounds {
    pub attack: AttackStrategy,
    pub defense: DefenseStrategy,
    pub rounds: Vec<RoundMetrics>,
}

/// Everything a matrix run needs besides the strategy lists.
#[derive(Clone, Copy, Debug)]
pub struct GameSetup<'a> {
    pub net: &'a RoadNetwork,
    pub fleet: &'a [JobCard],
    pub k: usize,
    pub ambush_delay: f64,
    pub seeds: &'a [u64],
}

/// Plays every cell for every seed. Cells run in parallel; results come
/// back in row-major order.
pub fn simulate_cells(
    setup: GameSetup<'_>,
    planner: &Planner<'_>,
    router: &Router<'_>,
    attacks: &[AttackStrategy],
    defenses: &[DefenseStrategy],
) -> Result<Vec<CellRounds>> {
    if attacks.is_empty() || defenses.is_empty() || setup.seeds.is_empty() {
        return Err(Error::Domain("a payoff matrix needs attacks, defenses and seeds".into()));
    }
    let cells: Vec<(AttackStrategy, DefenseStrategy)> = attacks
        .iter()
        .flat_map(|&a| defenses.iter().map(move |&d| (a, d)))
        .collect();
    cells
        .par_iter()
        .map(|&(attack, defense)| {
            let rounds = setup
                .seeds
                .iter()
                .map(|&seed| {
                    let plan = planner.plan(attack, setup.k, seed)?;
                    run_round_with(setup.net, router, setup.fleet, &plan, defense, setup.ambush_delay, seed)
                        .map(|r| r.metrics)
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::Domain(format!("cell ({attack}, {defense}): {e}")))?;
            Ok(CellRounds { attack, defense, rounds })
        })
        .collect()
}

pub fn payoff_from_cells(
    attacks: &[AttackStrategy],
    defenses: &[DefenseStrategy],
    seeds: &[u64],
    cells: &[CellRounds],
) -> PayoffMatrix<f64> {
    let cols = defenses.len();
    PayoffMatrix {
        attacks: attacks.iter().map(|a| a.to_string()).collect(),
        defenses: defenses.iter().map(|d| d.to_string()).collect(),
        seeds: seeds.to_vec(),
        samples: (0..attacks.len())
            .map(|i| {
                (0..cols)
                    .map(|j| cells[i * cols + j].rounds.iter().map(|r| r.late_fraction).collect())
                    .collect()
            })
            .collect(),
    }
}

/// Cell `(i, j)` holds the late fraction of every seed's round.
pub fn build_payoff_matrix(
    setup: GameSetup<'_>,
    attacks: &[AttackStrategy],
    defenses: &[DefenseStrategy],
    analysis_seed: u64,
) -> Result<PayoffMatrix<f64>> {
    let planner = Planner::new(setup.net, analysis_seed, false);
    let router = Router::new(setup.net);
    let cells = simulate_cells(setup, &planner, &router, attacks, defenses)?;
    Ok(payoff_from_cells(attacks, defenses, setup.seeds, &cells))
}

fn check_matrix<T: Scalar>(a: &[Vec<T>]) -> Result<(usize, usize)> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || a.iter().any(|r| r.len() != cols) {
        return Err(Error::Domain("payoff matrix must be nonempty and rectangular".into()));
    }
    if a.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Domain("payoff matrix has non-finite entries".into()));
    }
    Ok((rows, cols))
}

/// Saddle points: cells that are a maximum of their column and a minimum
/// of their row. Ties count.
pub fn find_pure_nash<T: Scalar>(a: &[Vec<T>]) -> Result<Vec<(usize, usize)>> {
    let (rows, cols) = check_matrix(a)?;
    let at_least = |x: T, y: T| x >= y || T::ties(x, y);
    let mut out = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let v = a[i][j];
            let col_max = (0..rows).all(|r| at_least(v, a[r][j]));
            let row_min = (0..cols).all(|c| at_least(a[i][c], v));
            if col_max && row_min {
                out.push((i, j));
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EquilibriumKind {
    Pure,
    Mixed,
}

impl EquilibriumKind {
    pub fn name(self) -> &'static str {
        match self {
            EquilibriumKind::Pure => "pure",
            EquilibriumKind::Mixed => "mixed",
        }
    }
}

/// Strategies `x` (rows) and `y` (columns) with
/// `min_j xᵀA e_j ≥ value − epsilon` and `max_i e_iᵀA y ≤ value + epsilon`.
#[derive(Clone, Debug, PartialEq)]
pub struct Equilibrium<T> {
    pub kind: EquilibriumKind,
    pub attacker: Vec<T>,
    pub defender: Vec<T>,
    pub value: T,
    pub epsilon: T,
}

/// The attacker's guaranteed payoff under `x` and the defender's
/// guaranteed cap under `y`.
pub fn security_levels<T: Scalar>(a: &[Vec<T>], x: &[T], y: &[T]) -> (T, T) {
    let cols = a[0].len();
    let lower = (0..cols)
        .map(|j| a.iter().zip(x).map(|(row, &xi)| xi * row[j]).sum::<T>())
        .fold(T::infinity(), T::min);
    let upper = a
        .iter()
        .map(|row| row.iter().zip(y).map(|(&v, &yj)| v * yj).sum::<T>())
        .fold(T::neg_infinity(), T::max);
    (lower, upper)
}

fn one_hot<T: Scalar>(v: &[T]) -> bool {
    v.iter().filter(|&&p| p != T::zero()).count() == 1
}

/// Solves the zero-sum game by linear programming and certifies the
/// result from the returned strategies.
///
/// The matrix is shifted to be positive; the defender's program
/// `max Σw  s.t.  B w ≤ 1, w ≥ 0` is solved by the simplex method with
/// Bland's rule and the attacker's strategy is read off the dual prices.
/// `value` is the midpoint of the two security levels and `epsilon` half
/// their gap.
pub fn solve_zero_sum<T: Scalar>(a: &[Vec<T>], epsilon: T) -> Result<Equilibrium<T>> {
    let (rows, cols) = check_matrix(a)?;
    if !(epsilon > T::zero()) {
        return Err(Error::Domain("epsilon must be positive".into()));
    }
    let lo = a.iter().flatten().copied().fold(T::infinity(), T::min);
    let shift = T::one() - lo;
    let b: Vec<Vec<T>> = a.iter().map(|r| r.iter().map(|&v| v + shift).collect()).collect();
    let (w, u) = simplex_max_sum(&b)?;
    let normalize = |v: Vec<T>| -> Vec<T> {
        let v: Vec<T> = v.into_iter().map(|p| p.max(T::zero())).collect();
        let s: T = v.iter().copied().sum();
        v.into_iter().map(|p| p / s).collect()
    };
    let y = normalize(w);
    let x = normalize(u);
    debug_assert_eq!((x.len(), y.len()), (rows, cols));
    let (lower, upper) = security_levels(a, &x, &y);
    let two = T::lit(2.0);
    let achieved = ((upper - lower) / two).max(T::zero());
    if achieved > epsilon {
        return Err(Error::Uncertified {
            achieved: achieved.as_f64(),
            requested: epsilon.as_f64(),
        });
    }
    let kind = if one_hot(&x) && one_hot(&y) {
        EquilibriumKind::Pure
    } else {
        EquilibriumKind::Mixed
    };
    Ok(Equilibrium {
        kind,
        attacker: x,
        defender: y,
        value: (upper + lower) / two,
        epsilon: achieved,
    })
}

/// `max Σw  s.t.  B w ≤ 1, w ≥ 0` for a positive matrix `B`. Returns the
/// primal solution and the dual prices of the row constraints.
fn simplex_max_sum<T: Scalar>(b: &[Vec<T>]) -> Result<(Vec<T>, Vec<T>)> {
    let m = b.len();
    let n = b[0].len();
    let width = n + m + 1;
    // rows 0..m are constraints, row m is the objective (negated costs)
    let mut t = vec![vec![T::zero(); width]; m + 1];
    for i in 0..m {
        t[i][..n].copy_from_slice(&b[i]);
        t[i][n + i] = T::one();
        t[i][width - 1] = T::one();
    }
    for j in 0..n {
        t[m][j] = -T::one();
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let tol = T::epsilon() * T::lit(4096.0);
    let max_iter = 50 * (m + n + 1) * (m + n + 1);
    for _ in 0..max_iter {
        // Bland: the lowest-index improving column
        let Some(col) = (0..n + m).find(|&j| t[m][j] < -tol) else {
            let mut w = vec![T::zero(); n];
            for (i, &bv) in basis.iter().enumerate() {
                if bv < n {
                    w[bv] = t[i][width - 1];
                }
            }
            let u = (0..m).map(|i| t[m][n + i]).collect();
            return Ok((w, u));
        };
        // ratio test; ties go to the lowest basic variable index
        let mut pivot: Option<(usize, T)> = None;
        for i in 0..m {
            if t[i][col] > tol {
                let r = t[i][width - 1] / t[i][col];
                let better = match pivot {
                    None => true,
                    Some((p, best)) => r < best || (r == best && basis[i] < basis[p]),
                };
                if better {
                    pivot = Some((i, r));
                }
            }
        }
        let Some((row, _)) = pivot else {
            return Err(Error::Domain("game program is unbounded; the shifted matrix is not positive".into()));
        };
        let p = t[row][col];
        for v in t[row].iter_mut() {
            *v = *v / p;
        }
        let pivot_row = t[row].clone();
        for (i, r) in t.iter_mut().enumerate() {
            if i != row {
                let f = r[col];
                if f != T::zero() {
                    for (x, &pv) in r.iter_mut().zip(&pivot_row) {
                        *x = *x - f * pv;
                    }
                }
            }
        }
        basis[row] = col;
    }
    Err(Error::Convergence {
        what: "simplex",
        residual: f64::NAN,
    })
}

/// Alternating best responses from a starting cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BestResponseCycle {
    /// Distinct consecutive cells visited.
    pub cells: Vec<(usize, usize)>,
    /// Index into `cells` where the repeating part begins.
    pub cycle_start: usize,
}

impl BestResponseCycle {
    pub fn cycle(&self) -> &[(usize, usize)] {
        &self.cells[self.cycle_start..]
    }
}

/// The attacker moves first. A player already playing a best response
/// stays; otherwise it switches to the lowest-index best response. Stops
/// when a (cell, player to move) state repeats.
pub fn best_response_cycle<T: Scalar>(a: &[Vec<T>], start: (usize, usize)) -> Result<BestResponseCycle> {
    let (rows, cols) = check_matrix(a)?;
    if start.0 >= rows || start.1 >= cols {
        return Err(Error::Domain(format!("start cell {start:?} outside a {rows}×{cols} matrix")));
    }
    let better = |x: T, y: T| x > y && !T::ties(x, y);
    let mut cells = vec![start];
    let mut seen: HashMap<((usize, usize), bool), usize> = HashMap::new();
    let (mut r, mut c) = start;
    let mut attacker_turn = true;
    seen.insert(((r, c), attacker_turn), 0);
    loop {
        if attacker_turn {
            let best = (0..rows).fold(r, |b, i| if better(a[i][c], a[b][c]) { i } else { b });
            if best != r {
                r = (0..rows).find(|&i| !better(a[best][c], a[i][c])).expect("best exists");
            }
        } else {
            let best = (0..cols).fold(c, |b, j| if better(a[r][b], a[r][j]) { j } else { b });
            if best != c {
                c = (0..cols).find(|&j| !better(a[r][j], a[r][best])).expect("best exists");
            }
        }
        attacker_turn = !attacker_turn;
        if let Some(&at) = seen.get(&((r, c), attacker_turn)) {
            return Ok(BestResponseCycle { cells, cycle_start: at });
        }
        if cells.last() != Some(&(r, c)) {
            cells.push((r, c));
        }
        seen.insert(((r, c), attacker_turn), cells.len() - 1);
    }
}

pub const MATRIX_HEADER: &str = "attack,defense,payoff_mean,payoff_std,n";

pub fn write_payoff_matrix<T: Scalar>(m: &PayoffMatrix<T>, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{MATRIX_HEADER}")?;
    for (i, a) in m.attacks.iter().enumerate() {
        for (j, d) in m.defenses.iter().enumerate() {
            writeln!(w, "{a},{d},{},{},{}", m.mean(i, j), m.std_dev(i, j), m.samples[i][j].len())?;
        }
    }
    Ok(())
}

/// One block per equilibrium: a `kind,value,epsilon` line, then
/// `role,strategy,probability` lines for strategies with nonzero weight.
pub fn write_equilibria<T: Scalar>(
    m: &PayoffMatrix<T>,
    equilibria: &[Equilibrium<T>],
    mut w: impl Write,
) -> std::io::Result<()> {
    for eq in equilibria {
        writeln!(w, "kind,value,epsilon")?;
        writeln!(w, "{},{},{}", eq.kind.name(), eq.value, eq.epsilon)?;
        writeln!(w, "role,strategy,probability")?;
        for (name, &p) in m.attacks.iter().zip(&eq.attacker) {
            if p != T::zero() {
                writeln!(w, "attacker,{name},{p}")?;
            }
        }
        for (name, &p) in m.defenses.iter().zip(&eq.defender) {
            if p != T::zero() {
                writeln!(w, "defender,{name},{p}")?;
            }
        }
    }
    Ok(())
}

/// A saddle point as a degenerate equilibrium.
pub fn pure_equilibrium<T: Scalar>(a: &[Vec<T>], cell: (usize, usize)) -> Equilibrium<T> {
    let mut x = vec![T::zero(); a.len()];
    let mut y = vec![T::zero(); a[0].len()];
    x[cell.0] = T::one();
    y[cell.1] = T::one();
    let (lower, upper) = security_levels(a, &x, &y);
    let two = T::lit(2.0);
    Equilibrium {
        kind: EquilibriumKind::Pure,
        attacker: x,
        defender: y,
        value: a[cell.0][cell.1],
        epsilon: ((upper - lower) / two).max(T::zero()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const EPS: f64 = 1e-6;

    fn m(rows: &[&[f64]]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| r.to_vec()).collect()
    }

    /// Closed form for a 2×2 game without a saddle point.
    fn two_by_two(a: f64, b: f64, c: f64, d: f64) -> (f64, f64, f64) {
        let den = a + d - b - c;
        ((a * d - b * c) / den, (d - c) / den, (d - b) / den)
    }

    #[test]
    fn matching_pennies() {
        let a = m(&[&[1.0, -1.0], &[-1.0, 1.0]]);
        let eq = solve_zero_sum(&a, EPS).unwrap();
        assert_abs_diff_eq!(eq.value, 0.0, epsilon = EPS);
        for p in eq.attacker.iter().chain(&eq.defender) {
            assert_abs_diff_eq!(*p, 0.5, epsilon = EPS);
        }
        assert_eq!(eq.kind, EquilibriumKind::Mixed);
        assert!(find_pure_nash(&a).unwrap().is_empty());
    }

    #[test]
    fn closed_form_two_by_two() {
        let a = m(&[&[3.0, 1.0], &[0.0, 2.0]]);
        let (v, x0, y0) = two_by_two(3.0, 1.0, 0.0, 2.0);
        assert_eq!((v, x0, y0), (1.5, 0.5, 0.25));
        let eq = solve_zero_sum(&a, EPS).unwrap();
        assert_abs_diff_eq!(eq.value, 1.5, epsilon = EPS);
        assert_abs_diff_eq!(eq.attacker[0], 0.5, epsilon = EPS);
        assert_abs_diff_eq!(eq.attacker[1], 0.5, epsilon = EPS);
        assert_abs_diff_eq!(eq.defender[0], 0.25, epsilon = EPS);
        assert_abs_diff_eq!(eq.defender[1], 0.75, epsilon = EPS);
    }

    #[test]
    fn saddle_agrees_with_pure_search() {
        let a = m(&[&[3.0, 1.0], &[5.0, 2.0]]);
        assert_eq!(find_pure_nash(&a).unwrap(), [(1, 1)]);
        let eq = solve_zero_sum(&a, EPS).unwrap();
        assert_abs_diff_eq!(eq.value, 2.0, epsilon = EPS);
        assert_eq!(eq.kind, EquilibriumKind::Pure);
        assert_abs_diff_eq!(eq.attacker[1], 1.0, epsilon = EPS);
        assert_abs_diff_eq!(eq.defender[1], 1.0, epsilon = EPS);
    }

    #[test]
    fn pure_search_edge_cases() {
        assert!(find_pure_nash(&m(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap().is_empty());
        assert_eq!(find_pure_nash(&m(&[&[0.4]])).unwrap(), [(0, 0)]);
        assert_eq!(find_pure_nash(&m(&[&[1.0, 1.0], &[1.0, 1.0]])).unwrap().len(), 4);
        assert!(find_pure_nash::<f64>(&[]).is_err());
        assert!(find_pure_nash(&m(&[&[1.0, 2.0], &[1.0]])).is_err());
    }

    #[test]
    fn best_response_dynamics() {
        let saddle = m(&[&[3.0, 1.0], &[5.0, 2.0]]);
        for start in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let c = best_response_cycle(&saddle, start).unwrap();
            assert_eq!(c.cycle(), [(1, 1)], "from {start:?}");
        }
        let pennies = m(&[&[1.0, -1.0], &[-1.0, 1.0]]);
        let c = best_response_cycle(&pennies, (0, 0)).unwrap();
        assert_eq!(c.cycle(), [(0, 0), (0, 1), (1, 1), (1, 0)]);
        let one = m(&[&[0.3]]);
        assert_eq!(best_response_cycle(&one, (0, 0)).unwrap().cells, [(0, 0)]);
        assert!(best_response_cycle(&one, (1, 0)).is_err());
    }

    #[test]
    fn rejects_bad_epsilon_and_reports_uncertified() {
        let a = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(solve_zero_sum(&a, 0.0).is_err());
        let a32: Vec<Vec<f32>> = vec![vec![0.1, 0.7, 0.3], vec![0.9, 0.2, 0.4], vec![0.5, 0.6, 0.0]];
        match solve_zero_sum(&a32, 1e-30) {
            Ok(eq) => assert!(eq.epsilon <= 1e-30),
            Err(Error::Uncertified { requested, .. }) => assert_eq!(requested, 1e-30f32 as f64),
            Err(e) => panic!("{e}"),
        }
        let eq = solve_zero_sum(&a32, 1e-4).unwrap();
        assert!((eq.attacker.iter().sum::<f32>() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn payoff_statistics() {
        let mut p = PayoffMatrix::from_values(&[vec![0.5]]).unwrap();
        p.samples[0][0] = vec![0.2, 0.4, 0.6];
        assert_abs_diff_eq!(p.mean(0, 0), 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(p.std_dev(0, 0), 0.2, epsilon = 1e-15);
        let mut buf = Vec::new();
        write_payoff_matrix(&p, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().nth(1).unwrap().split(',').last(), Some("3"));
    }

    fn maximin_minimax(a: &[Vec<f64>]) -> (f64, f64) {
        let maximin = a.iter().map(|r| r.iter().copied().fold(f64::INFINITY, f64::min)).fold(f64::NEG_INFINITY, f64::max);
        let minimax = (0..a[0].len())
            .map(|j| a.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max))
            .fold(f64::INFINITY, f64::min);
        (maximin, minimax)
    }

    fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, cols), rows)
    }

    proptest! {
        #[test]
        fn value_between_pure_bounds(a in matrix(3, 3)) {
            let eq = solve_zero_sum(&a, EPS).unwrap();
            let (lo, hi) = maximin_minimax(&a);
            prop_assert!(eq.value >= lo - EPS && eq.value <= hi + EPS);
        }

        #[test]
        fn epsilon_is_self_certified(a in matrix(4, 5)) {
            let eq = solve_zero_sum(&a, EPS).unwrap();
            let (lower, upper) = security_levels(&a, &eq.attacker, &eq.defender);
            prop_assert!(lower >= eq.value - eq.epsilon - 1e-12);
            prop_assert!(upper <= eq.value + eq.epsilon + 1e-12);
            prop_assert!((((upper - lower) / 2.0).max(0.0) - eq.epsilon).abs() <= 1e-12);
            prop_assert!((eq.attacker.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prop_assert!((eq.defender.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prop_assert!(eq.attacker.iter().chain(&eq.defender).all(|&p| p >= 0.0));
        }

        #[test]
        fn negation_swaps_roles(a in matrix(3, 4)) {
            let eq = solve_zero_sum(&a, EPS).unwrap();
            let neg_t: Vec<Vec<f64>> = (0..4).map(|j| (0..3).map(|i| -a[i][j]).collect()).collect();
            let swapped = solve_zero_sum(&neg_t, EPS).unwrap();
            prop_assert!((swapped.value + eq.value).abs() <= 2.0 * EPS);
        }

        #[test]
        fn saddle_value_matches(a in matrix(3, 3)) {
            let eq = solve_zero_sum(&a, EPS).unwrap();
            for (i, j) in find_pure_nash(&a).unwrap() {
                prop_assert!((eq.value - a[i][j]).abs() <= EPS);
            }
        }

        #[test]
        fn cycles_end_in_saddles_when_fixed(a in matrix(3, 3), r in 0usize..3, c in 0usize..3) {
            let cyc = best_response_cycle(&a, (r, c)).unwrap();
            if cyc.cycle().len() == 1 {
                prop_assert!(find_pure_nash(&a).unwrap().contains(&cyc.cycle()[0]));
            }
        }
    }
}
