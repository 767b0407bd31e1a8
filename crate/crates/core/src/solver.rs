//! Numerical search for solutions of the full constraint system
//! (homomorphism identities for `(A, B)` and `(C, D)` plus the eight duality
//! identities), and a sampler of classical solutions.
//!
//! Unknowns are packed into `8n²` real coordinates: for each of `A, B, C, D`
//! in turn, the row-major entries as `(re, im)` pairs.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coaction::{ConjugatePair, LinearObject};
use crate::derivation::certify_commutativity;
use crate::matrix::{c64, hermitian_eig, ComplexMatrix, ONE, ZERO};

/// Name of the generator and sub-seeding scheme, recorded in every run.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9): seed_from_u64(seed), stream = start_index";

/// Squared-residual floor at which the post-convergence polish stops.
const POLISH_FLOOR: f64 = 1e-28;
const POLISH_MAX_STEPS: usize = 40;
const ARMIJO_C: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub n: usize,
    pub restarts: usize,
    pub max_iters: usize,
    pub residual_tol: f64,
    pub grad_tol: f64,
    pub seed: u64,
    pub step_init: f64,
    /// Below this residual the optimizer switches from gradient descent to
    /// damped Gauss-Newton steps.
    pub gauss_newton_below: f64,
    /// Tolerance for the commutativity certificate of converged outcomes.
    pub commutativity_tol: f64,
}

impl SolverConfig {
    pub fn new(n: usize, restarts: usize, seed: u64) -> Self {
        SolverConfig {
            n,
            restarts,
            max_iters: 2000,
            residual_tol: 1e-10,
            grad_tol: 1e-12,
            seed,
            step_init: 1.0,
            gauss_newton_below: 1e-2,
            commutativity_tol: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: &str| Err(SolverError::InvalidConfig(msg.to_string()));
        if self.n == 0 || self.n > 8 {
            return bad("n must be between 1 and 8");
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        if !(self.residual_tol >= 1e-14 && self.residual_tol.is_finite()) {
            return bad("residual_tol must be finite and at least 1e-14");
        }
        for (name, v) in [
            ("grad_tol", self.grad_tol),
            ("step_init", self.step_init),
            ("commutativity_tol", self.commutativity_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SolverError::InvalidConfig(format!("{name} must be positive and finite")));
            }
        }
        if !(self.gauss_newton_below >= 0.0 && self.gauss_newton_below.is_finite()) {
            return bad("gauss_newton_below must be non-negative and finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    GradientTolerance,
    LineSearchFailed,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOutcome {
    pub start_index: usize,
    pub converged: bool,
    pub stop: StopReason,
    pub residual: f64,
    pub iterations: usize,
    pub pair: ConjugatePair,
    /// Largest residual of the commutativity certificate.
    pub commutativity_residual: f64,
    /// `max(‖A - conj(C)‖_F, ‖B - Dᵗ‖_F)`.
    pub duality_residual: f64,
}

impl SolverOutcome {
    /// Commutativity certificate at `tol`; a NaN residual never passes.
    pub fn commutes(&self, tol: f64) -> bool {
        self.commutativity_residual <= tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub converged: usize,
    pub stalled: usize,
    /// Converged outcomes whose commutativity residual exceeds the tolerance.
    pub commutativity_failures: usize,
    /// Maxima over converged outcomes; `null` when none converged.
    pub max_commutativity_residual: Option<f64>,
    pub max_duality_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverRun {
    pub config: SolverConfig,
    pub rng: String,
    pub outcomes: Vec<SolverOutcome>,
    pub summary: RunSummary,
}

impl SolverRun {
    pub fn converged(&self) -> impl Iterator<Item = &SolverOutcome> {
        self.outcomes.iter().filter(|o| o.converged)
    }

    pub fn counterexamples(&self) -> impl Iterator<Item = &SolverOutcome> {
        let tol = self.config.commutativity_tol;
        self.converged().filter(move |o| !o.commutes(tol))
    }
}

/// The four unknowns of the constraint system.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    pub c: ComplexMatrix,
    pub d: ComplexMatrix,
}

impl Point {
    pub fn new(a: ComplexMatrix, b: ComplexMatrix, c: ComplexMatrix, d: ComplexMatrix) -> Self {
        let n = a.rows();
        for m in [&a, &b, &c, &d] {
            assert_eq!(m.shape(), (n, n), "all four matrices must be n x n");
        }
        Point { a, b, c, d }
    }

    pub fn from_pair(pair: &ConjugatePair) -> Self {
        Point::new(
            pair.object().a().clone(),
            pair.object().b().clone(),
            pair.c().clone(),
            pair.d().clone(),
        )
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    fn to_coords(&self) -> Vec<f64> {
        [&self.a, &self.b, &self.c, &self.d]
            .iter()
            .flat_map(|m| m.data().iter().flat_map(|z| [z.re, z.im]))
            .collect()
    }

    fn from_coords(n: usize, x: &[f64]) -> Self {
        let block = |v: usize| {
            let off = v * 2 * n * n;
            let data = (0..n * n).map(|k| c64(x[off + 2 * k], x[off + 2 * k + 1])).collect();
            ComplexMatrix::from_row_major(n, n, data).expect("finite coordinates")
        };
        Point::new(block(0), block(1), block(2), block(3))
    }

    fn into_pair(self) -> ConjugatePair {
        let obj = LinearObject::new(self.a, self.b).expect("square matrices");
        ConjugatePair::new(obj, self.c, self.d).expect("matching dimensions")
    }
}

// ---------------------------------------------------------------------------
// Constraint table

#[derive(Clone, Copy, PartialEq, Eq)]
enum Var {
    A = 0,
    B = 1,
    C = 2,
    D = 3,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Op {
    Id = 0,
    Adj = 1,
    Tr = 2,
    Conj = 3,
}

/// `op1(X) · op2(Y)`.
#[derive(Clone, Copy)]
struct Term(Var, Op, Var, Op);

struct Constraint {
    terms: &'static [Term],
    minus_identity: bool,
}

macro_rules! constraint {
    ($id:expr; $($x:ident $ox:ident $y:ident $oy:ident),+) => {
        Constraint { terms: &[$(Term(Var::$x, Op::$ox, Var::$y, Op::$oy)),+], minus_identity: $id }
    };
}

const CONSTRAINTS: [Constraint; 20] = [
    // (A, B) homomorphism
    constraint!(true; A Id A Adj, B Id B Adj),
    constraint!(false; A Id B Adj),
    constraint!(false; B Id A Adj),
    constraint!(true; A Adj A Id, B Adj B Id),
    constraint!(false; B Adj A Id),
    constraint!(false; A Adj B Id),
    // (C, D) homomorphism
    constraint!(true; C Id C Adj, D Id D Adj),
    constraint!(false; C Id D Adj),
    constraint!(false; D Id C Adj),
    constraint!(true; C Adj C Id, D Adj D Id),
    constraint!(false; D Adj C Id),
    constraint!(false; C Adj D Id),
    // duality
    constraint!(true; C Id A Tr, D Adj B Tr),
    constraint!(false; D Id A Tr, C Adj B Tr),
    constraint!(true; C Adj A Conj, D Id B Conj),
    constraint!(false; D Adj A Conj, C Id B Conj),
    constraint!(true; A Id C Tr, B Adj D Tr),
    constraint!(false; B Id C Tr, A Adj D Tr),
    constraint!(true; A Adj C Conj, B Id D Conj),
    constraint!(false; B Adj C Conj, A Id D Conj),
];

/// Flat `n x n` complex buffers.
type Buf = Vec<Complex64>;

fn matmul_acc(out: &mut [Complex64], p: &[Complex64], q: &[Complex64], n: usize) {
    for i in 0..n {
        for k in 0..n {
            let pik = p[i * n + k];
            if pik == ZERO {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += pik * q[k * n + j];
            }
        }
    }
}

fn apply_op(m: &[Complex64], op: Op, n: usize) -> Buf {
    match op {
        Op::Id => m.to_vec(),
        Op::Conj => m.iter().map(Complex64::conj).collect(),
        Op::Tr | Op::Adj => {
            let mut out = vec![ZERO; n * n];
            for i in 0..n {
                for j in 0..n {
                    let z = m[j * n + i];
                    out[i * n + j] = if op == Op::Adj { z.conj() } else { z };
                }
            }
            out
        }
    }
}

/// All sixteen `op(X)` buffers of a point.
struct Evaluation {
    n: usize,
    ops: [[Buf; 4]; 4],
    errors: Vec<Buf>,
}

impl Evaluation {
    fn new(n: usize, x: &[f64]) -> Self {
        let vars: [Buf; 4] = std::array::from_fn(|v| {
            let off = v * 2 * n * n;
            (0..n * n).map(|k| c64(x[off + 2 * k], x[off + 2 * k + 1])).collect()
        });
        let ops = std::array::from_fn(|v| {
            [Op::Id, Op::Adj, Op::Tr, Op::Conj].map(|op| apply_op(&vars[v], op, n))
        });
        let mut eval = Evaluation {
            n,
            ops,
            errors: Vec::with_capacity(CONSTRAINTS.len()),
        };
        for con in &CONSTRAINTS {
            let mut e = vec![ZERO; n * n];
            for t in con.terms {
                matmul_acc(&mut e, eval.op(t.0, t.1), eval.op(t.2, t.3), n);
            }
            if con.minus_identity {
                for i in 0..n {
                    e[i * n + i] -= ONE;
                }
            }
            eval.errors.push(e);
        }
        eval
    }

    fn op(&self, v: Var, op: Op) -> &[Complex64] {
        &self.ops[v as usize][op as usize]
    }

    fn value(&self) -> f64 {
        self.errors.iter().flatten().map(Complex64::norm_sqr).sum()
    }

    /// Real gradient `∂f/∂Re + i ∂f/∂Im` of `f = Σ ‖E_k‖²`, one buffer per
    /// unknown. For `dE = L op(dX) R` the contributions are
    /// `2 L* E R*` (identity), `2 R E* L` (adjoint), `2 conj(R E* L)`
    /// (transpose) and `2 Lᵗ conj(E) Rᵗ` (conjugate).
    fn gradient(&self) -> [Buf; 4] {
        let n = self.n;
        let mut grad: [Buf; 4] = std::array::from_fn(|_| vec![ZERO; n * n]);
        for (con, e) in CONSTRAINTS.iter().zip(&self.errors) {
            let e_adj = apply_op(e, Op::Adj, n);
            let e_conj = apply_op(e, Op::Conj, n);
            for t in con.terms {
                let p = self.op(t.0, t.1);
                let q = self.op(t.2, t.3);
                // Left factor: L = I, R = Q.
                let g = &mut grad[t.0 as usize];
                match t.1 {
                    Op::Id => matmul_acc(g, e, self.op(t.2, flip_adj(t.3)), n),
                    Op::Adj => matmul_acc(g, q, &e_adj, n),
                    Op::Tr => matmul_acc_conj(g, q, &e_adj, n),
                    Op::Conj => matmul_acc(g, &e_conj, self.op(t.2, flip_tr(t.3)), n),
                }
                // Right factor: L = P, R = I.
                let g = &mut grad[t.2 as usize];
                match t.3 {
                    Op::Id => matmul_acc(g, self.op(t.0, flip_adj(t.1)), e, n),
                    Op::Adj => matmul_acc(g, &e_adj, p, n),
                    Op::Tr => matmul_acc_conj(g, &e_adj, p, n),
                    Op::Conj => matmul_acc(g, self.op(t.0, flip_tr(t.1)), &e_conj, n),
                }
            }
        }
        for g in &mut grad {
            for z in g.iter_mut() {
                *z *= 2.0;
            }
        }
        grad
    }

    /// Real Jacobian of the stacked `(re, im)` residual vector, column-major
    /// with one column per real coordinate.
    fn jacobian(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        let nn = n * n;
        let mut columns = Vec::with_capacity(8 * nn);
        let mut de = vec![ZERO; nn];
        for v in [Var::A, Var::B, Var::C, Var::D] {
            for idx in 0..nn {
                let (i, j) = (idx / n, idx % n);
                for unit in [ONE, c64(0.0, 1.0)] {
                    let mut col = vec![0.0; 2 * nn * CONSTRAINTS.len()];
                    for (k, con) in CONSTRAINTS.iter().enumerate() {
                        de.fill(ZERO);
                        let mut touched = false;
                        for t in con.terms {
                            if t.0 == v {
                                // op(unit·e_ij) = w e_pq; row p gains w · Q[q, :].
                                let (w, p, q) = unit_op(unit, i, j, t.1);
                                let rhs = self.op(t.2, t.3);
                                for c in 0..n {
                                    de[p * n + c] += w * rhs[q * n + c];
                                }
                                touched = true;
                            }
                            if t.2 == v {
                                // Column q gains w · P[:, p].
                                let (w, p, q) = unit_op(unit, i, j, t.3);
                                let lhs = self.op(t.0, t.1);
                                for r in 0..n {
                                    de[r * n + q] += w * lhs[r * n + p];
                                }
                                touched = true;
                            }
                        }
                        if touched {
                            let off = k * 2 * nn;
                            for (m, z) in de.iter().enumerate() {
                                col[off + 2 * m] = z.re;
                                col[off + 2 * m + 1] = z.im;
                            }
                        }
                    }
                    columns.push(col);
                }
            }
        }
        columns
    }

    fn residual_vector(&self) -> Vec<f64> {
        self.errors.iter().flatten().flat_map(|z| [z.re, z.im]).collect()
    }
}

fn flip_adj(op: Op) -> Op {
    // (op(X))* in terms of X.
    match op {
        Op::Id => Op::Adj,
        Op::Adj => Op::Id,
        Op::Tr => Op::Conj,
        Op::Conj => Op::Tr,
    }
}

fn flip_tr(op: Op) -> Op {
    // (op(X))ᵗ in terms of X.
    match op {
        Op::Id => Op::Tr,
        Op::Tr => Op::Id,
        Op::Adj => Op::Conj,
        Op::Conj => Op::Adj,
    }
}

/// `out += conj(p · q)`.
fn matmul_acc_conj(out: &mut [Complex64], p: &[Complex64], q: &[Complex64], n: usize) {
    let mut tmp = vec![ZERO; n * n];
    matmul_acc(&mut tmp, p, q, n);
    for (o, z) in out.iter_mut().zip(tmp) {
        *o += z.conj();
    }
}

/// `op(unit · e_ij) = w · e_pq`.
fn unit_op(unit: Complex64, i: usize, j: usize, op: Op) -> (Complex64, usize, usize) {
    match op {
        Op::Id => (unit, i, j),
        Op::Adj => (unit.conj(), j, i),
        Op::Tr => (unit, j, i),
        Op::Conj => (unit.conj(), i, j),
    }
}

fn flatten_gradient(grad: &[Buf; 4]) -> Vec<f64> {
    grad.iter().flatten().flat_map(|z| [z.re, z.im]).collect()
}

// ---------------------------------------------------------------------------
// Public objective

/// Sum of squared Frobenius norms of the twenty constraint matrices.
pub fn residual(a: &ComplexMatrix, b: &ComplexMatrix, c: &ComplexMatrix, d: &ComplexMatrix) -> f64 {
    let p = Point::new(a.clone(), b.clone(), c.clone(), d.clone());
    Evaluation::new(p.n(), &p.to_coords()).value()
}

pub fn point_residual(p: &Point) -> f64 {
    Evaluation::new(p.n(), &p.to_coords()).value()
}

/// Analytic gradient of [`residual`], as `∂f/∂Re X + i ∂f/∂Im X` for each
/// of `A, B, C, D`.
pub fn gradient(p: &Point) -> Point {
    let n = p.n();
    let g = Evaluation::new(n, &p.to_coords()).gradient();
    let m = |buf: &Buf| ComplexMatrix::from_row_major(n, n, buf.clone()).expect("finite gradient");
    Point::new(m(&g[0]), m(&g[1]), m(&g[2]), m(&g[3]))
}

/// Compares the analytic gradient with central differences (step `1e-6`)
/// along 32 seeded random unit directions in the real coordinates. Errors
/// are measured relative to `max(1, |analytic|, |numeric|)`, so near a
/// stationary point this is an absolute error.
pub fn gradient_check(point: &Point, seed: u64) -> f64 {
    const STEP: f64 = 1e-6;
    let n = point.n();
    let x = point.to_coords();
    let g = flatten_gradient(&Evaluation::new(n, &x).gradient());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let f = |y: &[f64]| Evaluation::new(n, y).value();
    let mut worst: f64 = 0.0;
    for _ in 0..32 {
        let mut dir: Vec<f64> = (0..x.len()).map(|_| normal.sample(&mut rng)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        dir.iter_mut().for_each(|v| *v /= norm);
        let shifted = |s: f64| -> Vec<f64> { x.iter().zip(&dir).map(|(xi, di)| xi + s * di).collect() };
        let numeric = (f(&shifted(STEP)) - f(&shifted(-STEP))) / (2.0 * STEP);
        let analytic: f64 = g.iter().zip(&dir).map(|(gi, di)| gi * di).sum();
        let err = (analytic - numeric).abs() / 1f64.max(analytic.abs()).max(numeric.abs());
        worst = worst.max(err);
    }
    worst
}

// ---------------------------------------------------------------------------
// Optimizer

/// How restarts are scheduled. Results are identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise runs
    /// sequentially.
    Parallel,
}

pub fn solve(config: &SolverConfig) -> Result<SolverRun, SolverError> {
    solve_with(config, Execution::Parallel)
}

pub fn solve_with(config: &SolverConfig, execution: Execution) -> Result<SolverRun, SolverError> {
    config.validate()?;
    let outcomes = crate::par::map_indices(config.restarts, execution, |k| run_restart(config, k));
    Ok(assemble(config, outcomes))
}

fn assemble(config: &SolverConfig, outcomes: Vec<SolverOutcome>) -> SolverRun {
    let converged: Vec<&SolverOutcome> = outcomes.iter().filter(|o| o.converged).collect();
    let max_of = |f: fn(&SolverOutcome) -> f64| converged.iter().map(|o| f(o)).reduce(f64::max);
    let summary = RunSummary {
        converged: converged.len(),
        stalled: outcomes.len() - converged.len(),
        commutativity_failures: converged
            .iter()
            .filter(|o| !o.commutes(config.commutativity_tol))
            .count(),
        max_commutativity_residual: max_of(|o| o.commutativity_residual),
        max_duality_residual: max_of(|o| o.duality_residual),
    };
    SolverRun {
        config: config.clone(),
        rng: RNG_ALGORITHM.to_string(),
        outcomes,
        summary,
    }
}

/// Per-restart generator: independent stream `start_index` of the seed.
pub fn restart_rng(seed: u64, start_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(start_index as u64);
    rng
}

/// Complex Gaussian start with `E|z|² = 1/n` per entry.
pub fn initial_point(n: usize, seed: u64, start_index: usize) -> Point {
    let mut rng = restart_rng(seed, start_index);
    let normal = Normal::new(0.0, (0.5 / n as f64).sqrt()).expect("positive variance");
    let x: Vec<f64> = (0..8 * n * n).map(|_| normal.sample(&mut rng)).collect();
    Point::from_coords(n, &x)
}

fn run_restart(config: &SolverConfig, start_index: usize) -> SolverOutcome {
    run_from(config, start_index, &initial_point(config.n, config.seed, start_index))
}

/// Runs the optimizer from a given starting point.
///
/// Gradient descent with Armijo backtracking runs while the residual is above
/// `gauss_newton_below`; below it, Levenberg-Marquardt steps take over. After
/// convergence the point is refined further until the residual reaches
/// rounding level, so that certificates on the output are not limited by
/// `residual_tol`.
pub fn run_from(config: &SolverConfig, start_index: usize, start: &Point) -> SolverOutcome {
    let n = start.n();
    let mut x = start.to_coords();
    let mut eval = Evaluation::new(n, &x);
    let mut f = eval.value();
    let mut step = config.step_init;
    let mut damping: Option<f64> = None;
    let mut iterations = 0;

    let stop = loop {
        if f <= config.residual_tol {
            break StopReason::Converged;
        }
        if iterations >= config.max_iters {
            break StopReason::MaxIterations;
        }
        iterations += 1;
        if f <= config.gauss_newton_below {
            match lm_step(n, &x, &eval, f, &mut damping) {
                Some((nx, ne, nf)) => (x, eval, f) = (nx, ne, nf),
                None => break StopReason::LineSearchFailed,
            }
            continue;
        }
        let g = flatten_gradient(&eval.gradient());
        let gn2: f64 = g.iter().map(|v| v * v).sum();
        if gn2.sqrt() <= config.grad_tol {
            break StopReason::GradientTolerance;
        }
        let mut t = step;
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - t * gi).collect();
            let te = Evaluation::new(n, &trial);
            let tf = te.value();
            if tf <= f - ARMIJO_C * t * gn2 {
                break Some((trial, te, tf));
            }
            t *= 0.5;
            if t < 1e-20 {
                break None;
            }
        };
        match accepted {
            Some((nx, ne, nf)) => {
                (x, eval, f) = (nx, ne, nf);
                step = (2.0 * t).min(config.step_init);
            }
            None => break StopReason::LineSearchFailed,
        }
    };

    if stop == StopReason::Converged {
        for _ in 0..POLISH_MAX_STEPS {
            if f <= POLISH_FLOOR {
                break;
            }
            match lm_step(n, &x, &eval, f, &mut damping) {
                Some((nx, ne, nf)) => (x, eval, f) = (nx, ne, nf),
                None => break,
            }
        }
    }

    let point = Point::from_coords(n, &x);
    let duality_residual = point.a.dist(&point.c.conj()).max(point.b.dist(&point.d.transpose()));
    let pair = point.into_pair();
    let commutativity_residual = certify_commutativity(pair.object(), config.commutativity_tol).max_residual();
    SolverOutcome {
        start_index,
        converged: stop == StopReason::Converged,
        stop,
        residual: f,
        iterations,
        pair,
        commutativity_residual,
        duality_residual,
    }
}

/// One accepted Levenberg-Marquardt step, or `None` when no damping level
/// reduces the residual.
fn lm_step(
    n: usize,
    x: &[f64],
    eval: &Evaluation,
    f: f64,
    damping: &mut Option<f64>,
) -> Option<(Vec<f64>, Evaluation, f64)> {
    let jac = eval.jacobian();
    let r = eval.residual_vector();
    let dim = jac.len();
    let support: Vec<Vec<usize>> = jac
        .iter()
        .map(|col| (0..col.len()).filter(|&i| col[i] != 0.0).collect())
        .collect();
    let mut jtj = vec![0.0; dim * dim];
    let mut jtr = vec![0.0; dim];
    for a in 0..dim {
        jtr[a] = support[a].iter().map(|&i| jac[a][i] * r[i]).sum();
        for b in a..dim {
            let s: f64 = support[a].iter().map(|&i| jac[a][i] * jac[b][i]).sum();
            jtj[a * dim + b] = s;
            jtj[b * dim + a] = s;
        }
    }
    let max_diag = (0..dim).map(|k| jtj[k * dim + k]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut mu = damping.unwrap_or(1e-3 * max_diag);
    for _ in 0..60 {
        let mut m = jtj.clone();
        for k in 0..dim {
            m[k * dim + k] += mu;
        }
        if let Some(delta) = cholesky_solve(&mut m, &jtr, dim) {
            let trial: Vec<f64> = x.iter().zip(&delta).map(|(xi, di)| xi - di).collect();
            let te = Evaluation::new(n, &trial);
            let tf = te.value();
            if tf < f {
                *damping = Some((mu / 3.0).max(1e-15 * max_diag));
                return Some((trial, te, tf));
            }
        }
        mu *= 4.0;
        if !mu.is_finite() {
            break;
        }
    }
    *damping = Some(mu);
    None
}

/// Solves `M δ = rhs` for symmetric positive definite `M` (overwritten).
fn cholesky_solve(m: &mut [f64], rhs: &[f64], dim: usize) -> Option<Vec<f64>> {
    for j in 0..dim {
        let mut d = m[j * dim + j];
        for k in 0..j {
            d -= m[j * dim + k] * m[j * dim + k];
        }
        if d.is_nan() || d <= 0.0 {
            return None;
        }
        let d = d.sqrt();
        m[j * dim + j] = d;
        for i in j + 1..dim {
            let mut s = m[i * dim + j];
            for k in 0..j {
                s -= m[i * dim + k] * m[j * dim + k];
            }
            m[i * dim + j] = s / d;
        }
    }
    let mut y = rhs.to_vec();
    for i in 0..dim {
        for k in 0..i {
            y[i] -= m[i * dim + k] * y[k];
        }
        y[i] /= m[i * dim + i];
    }
    for i in (0..dim).rev() {
        for k in i + 1..dim {
            y[i] -= m[k * dim + i] * y[k];
        }
        y[i] /= m[i * dim + i];
    }
    Some(y)
}

// ---------------------------------------------------------------------------
// Classical samples

/// A classical solution together with the data it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalSample {
    pub pair: ConjugatePair,
    /// Unitary whose columns are the joint eigenvectors.
    pub w: ComplexMatrix,
    pub phases: Vec<Complex64>,
    /// `true` where the slot is a rotation.
    pub rotation_slots: Vec<bool>,
}

/// `A = W diag(u_i [i ∈ S]) W*`, `B = W diag(u_i [i ∉ S]) W*`, `C = conj(A)`,
/// `D = Bᵗ`, with seeded `W`, phases `u_i` and subset `S`.
pub fn sample_classical(n: usize, seed: u64) -> ConjugatePair {
    sample_classical_detailed(n, seed).pair
}

pub fn sample_classical_detailed(n: usize, seed: u64) -> ClassicalSample {
    assert!(n >= 1, "n must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let g = ComplexMatrix::from_fn(n, n, |_, _| c64(normal.sample(&mut rng), normal.sample(&mut rng)));
    let h = (&g + &g.adjoint()).scale_real(0.5);
    let w = hermitian_eig(&h).expect("Gaussian Hermitian matrix").vectors;
    let phases: Vec<Complex64> = (0..n)
        .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
        .collect();
    let rotation_slots: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
    let pick = |rot: bool| -> Vec<Complex64> {
        phases
            .iter()
            .zip(&rotation_slots)
            .map(|(&u, &r)| if r == rot { u } else { ZERO })
            .collect()
    };
    let a = &w * ComplexMatrix::from_diag(&pick(true)) * w.adjoint();
    let b = &w * ComplexMatrix::from_diag(&pick(false)) * w.adjoint();
    let (c, d) = (a.conj(), b.transpose());
    let obj = LinearObject::new(a, b).expect("square matrices");
    ClassicalSample {
        pair: ConjugatePair::new(obj, c, d).expect("matching dimensions"),
        w,
        phases,
        rotation_slots,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coaction::{check_conjugate_matrix, check_homomorphism};

    fn scalar(z: Complex64) -> ComplexMatrix {
        ComplexMatrix::scalar(z)
    }

    /// Independent evaluation through the certificate checks.
    fn residual_via_reports(p: &Point) -> f64 {
        let pair = p.clone().into_pair();
        let hom = check_homomorphism(pair.object(), 1.0);
        let conj = check_conjugate_matrix(&pair, 1.0);
        hom.checks.iter().chain(&conj.checks).map(|c| c.residual * c.residual).sum()
    }

    fn random_point(n: usize, seed: u64) -> Point {
        initial_point(n, seed, 0)
    }

    #[test]
    fn residual_examples() {
        let one = scalar(ONE);
        let zero = scalar(ZERO);
        assert_eq!(residual(&one, &zero, &one, &zero), 0.0);
        assert_eq!(residual(&zero, &zero, &zero, &zero), 8.0);
        let l = Complex64::from_polar(1.0, 0.77);
        assert!(residual(&scalar(l), &zero, &scalar(l.conj()), &zero) < 1e-30);
    }

    #[test]
    fn residual_matches_certificate_sum() {
        for n in 1..=3 {
            for seed in 0..5 {
                let p = random_point(n, seed);
                let lhs = point_residual(&p);
                let rhs = residual_via_reports(&p);
                assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0), "n={n}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn gradient_matches_jacobian() {
        for n in 1..=3 {
            let p = random_point(n, 40 + n as u64);
            let eval = Evaluation::new(n, &p.to_coords());
            let g = flatten_gradient(&eval.gradient());
            let r = eval.residual_vector();
            for (k, col) in eval.jacobian().iter().enumerate() {
                let jtr: f64 = col.iter().zip(&r).map(|(j, ri)| j * ri).sum();
                assert!((2.0 * jtr - g[k]).abs() < 1e-10 * g[k].abs().max(1.0));
            }
        }
    }

    #[test]
    fn gradient_check_examples() {
        assert!(gradient_check(&random_point(2, 9), 1) <= 1e-5);
        let sample = Point::from_pair(&sample_classical(3, 2));
        assert!(gradient_check(&sample, 3) <= 1e-8);
        let zero = Point::new(scalar(ZERO), scalar(ZERO), scalar(ZERO), scalar(ZERO));
        let g = gradient(&zero);
        assert!(g.a.is_all_zero() && g.b.is_all_zero() && g.c.is_all_zero() && g.d.is_all_zero());
        assert!(gradient_check(&zero, 0) <= 1e-5);
    }

    #[test]
    fn sample_is_exact_solution() {
        let s = sample_classical_detailed(1, 4);
        let (a, b) = (s.pair.object().a().get(0, 0), s.pair.object().b().get(0, 0));
        if s.rotation_slots[0] {
            assert!((a - s.phases[0]).norm() < 1e-15 && b == ZERO);
        } else {
            assert!((b - s.phases[0]).norm() < 1e-15 && a == ZERO);
        }
        let p = Point::from_pair(&sample_classical(3, 17));
        assert!(point_residual(&p) <= 1e-24);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(2, 1, 0).validate().is_ok());
        let mut c = SolverConfig::new(2, 0, 0);
        assert!(c.validate().is_err());
        c.restarts = 1;
        c.residual_tol = 1e-15;
        assert!(c.validate().is_err());
    }

    #[test]
    fn small_run_converges() {
        let run = solve_with(&SolverConfig::new(1, 8, 3), Execution::Sequential).unwrap();
        assert!(run.summary.converged > 0);
        for o in run.converged() {
            assert!(o.residual <= 1e-10);
            assert!(o.commutativity_residual <= 1e-6);
        }
    }
}
