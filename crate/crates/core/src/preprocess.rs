//! Model simplification: fixed variables, singleton rows, dense-column
//! splitting, dependent rows, equilibration, and collapsing coordinates that
//! the analytic center pins to a bound. Every change is recorded so samples
//! of the simplified model can be lifted back to the original coordinates.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::barrier::{clamp_lower, clamp_upper, BoxBarrier};
use crate::error::{check_len, Error, Result};
use crate::sparse::{dependent_rows, NormalSystem, SparseMatrix};

/// `{x : Ax = b, l <= x <= u}` with density `exp(-alpha^T x)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolytopeModel {
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl PolytopeModel {
    /// Validates dimensions and finiteness and clamps infinite bounds to
    /// `±1e7`. A missing `alpha` means the uniform density.
    pub fn new(
        a: SparseMatrix,
        b: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        alpha: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = a.n_cols();
        check_len(a.n_rows(), b.len())?;
        check_len(n, lower.len())?;
        check_len(n, upper.len())?;
        let alpha = alpha.unwrap_or_else(|| vec![0.0; n]);
        check_len(n, alpha.len())?;
        if a.values().iter().chain(&b).chain(&alpha).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("A, b and alpha must be finite".into()));
        }
        if lower.iter().chain(&upper).any(|v| v.is_nan()) {
            return Err(Error::InvalidInput("bounds must not be NaN".into()));
        }
        let lower: Vec<f64> = lower.into_iter().map(clamp_lower).collect();
        let upper: Vec<f64> = upper.into_iter().map(clamp_upper).collect();
        Ok(Self {
            a,
            b,
            lower,
            upper,
            alpha,
        })
    }

    pub fn n(&self) -> usize {
        self.a.n_cols()
    }

    pub fn m(&self) -> usize {
        self.a.n_rows()
    }

    pub fn nnz(&self) -> usize {
        self.a.nnz()
    }

    /// `n - m`; the dimension of the feasible set when `A` has full row rank
    /// and the box has nonempty interior on `{Ax = b}`.
    pub fn full_dimension(&self) -> usize {
        self.n().saturating_sub(self.m())
    }

    pub fn barrier(&self) -> Result<BoxBarrier> {
        BoxBarrier::new(&self.lower, &self.upper)
    }

    /// Largest violation of either `Ax = b` or the bounds (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> Result<f64> {
        check_len(self.n(), x.len())?;
        let ax = self.a.matvec(x)?;
        let eq = ax
            .iter()
            .zip(&self.b)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        let bounds = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&xi, (&l, &u))| (l - xi).max(xi - u).max(0.0))
            .fold(0.0, f64::max);
        Ok(eq.max(bounds))
    }
}

/// One invertible step of the simplification. `lift` maps the coordinates
/// after the step back to the coordinates before it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TransformStep {
    /// Variables removed at fixed values; `keep` lists the surviving ones.
    FixVariables {
        n_before: usize,
        fixed: Vec<(usize, f64)>,
        keep: Vec<usize>,
    },
    /// Auxiliary copies appended after the original columns; `copies[k]`
    /// is the column the `k`-th auxiliary duplicates.
    SplitColumns { n_before: usize, copies: Vec<usize> },
    /// Equality rows dropped; coordinates are unchanged.
    RemoveRows { m_before: usize, removed: Vec<usize> },
    /// `x_before = diag(col_scale) x_after`; rows of `A` and `b` were
    /// multiplied by `row_scale`.
    Scale {
        row_scale: Vec<f64>,
        col_scale: Vec<f64>,
    },
}

impl TransformStep {
    fn n_after(&self) -> Option<usize> {
        match self {
            Self::FixVariables { keep, .. } => Some(keep.len()),
            Self::SplitColumns { n_before, copies } => Some(n_before + copies.len()),
            Self::Scale { col_scale, .. } => Some(col_scale.len()),
            Self::RemoveRows { .. } => None,
        }
    }

    fn lift(&self, y: Vec<f64>) -> Result<Vec<f64>> {
        if let Some(n) = self.n_after() {
            check_len(n, y.len())?;
        }
        Ok(match self {
            Self::FixVariables {
                n_before,
                fixed,
                keep,
            } => {
                let mut x = vec![0.0; *n_before];
                for (&k, &v) in keep.iter().zip(&y) {
                    x[k] = v;
                }
                for &(j, v) in fixed {
                    x[j] = v;
                }
                x
            }
            Self::SplitColumns { n_before, .. } => y[..*n_before].to_vec(),
            Self::RemoveRows { .. } => y,
            Self::Scale { col_scale, .. } => y.iter().zip(col_scale).map(|(v, d)| v * d).collect(),
        })
    }

    fn collapse(&self, x: Vec<f64>) -> Result<Vec<f64>> {
        Ok(match self {
            Self::FixVariables { n_before, keep, .. } => {
                check_len(*n_before, x.len())?;
                keep.iter().map(|&k| x[k]).collect()
            }
            Self::SplitColumns { n_before, copies } => {
                check_len(*n_before, x.len())?;
                let mut y = x.clone();
                y.extend(copies.iter().map(|&j| x[j]));
                y
            }
            Self::RemoveRows { .. } => x,
            Self::Scale { col_scale, .. } => {
                check_len(col_scale.len(), x.len())?;
                x.iter().zip(col_scale).map(|(v, d)| v / d).collect()
            }
        })
    }
}

/// Ordered list of steps applied by [`simplify`].
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TransformRecord {
    pub original_n: usize,
    pub steps: Vec<TransformStep>,
}

impl TransformRecord {
    pub fn identity(n: usize) -> Self {
        Self {
            original_n: n,
            steps: Vec::new(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.steps.is_empty()
    }

    /// Simplified coordinates to original coordinates.
    pub fn lift(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut x = y.to_vec();
        for step in self.steps.iter().rev() {
            x = step.lift(x)?;
        }
        check_len(self.original_n, x.len())?;
        Ok(x)
    }

    /// Original coordinates to simplified coordinates. Exact inverse of
    /// [`lift`](Self::lift) on points of the original feasible set.
    pub fn collapse(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.original_n, x.len())?;
        let mut y = x.to_vec();
        for step in &self.steps {
            y = step.collapse(y)?;
        }
        Ok(y)
    }
}

/// Lifts every row of `samples` through `record`.
pub fn lift_samples(samples: &[Vec<f64>], record: &TransformRecord) -> Result<Vec<Vec<f64>>> {
    samples.iter().map(|s| record.lift(s)).collect()
}

/// Output of [`simplify`]: the reduced model, the map back, and the analytic
/// center of the reduced model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Simplified {
    pub model: PolytopeModel,
    pub record: TransformRecord,
    pub center: Vec<f64>,
}

/// Coordinates of the analytic center closer than this to a bound are fixed.
pub const TIGHT_TOL: f64 = 1e-8;
/// Relative pivot threshold for dependent-row detection.
pub const DEPENDENT_ROW_TOL: f64 = 1e-10;
/// Projected-gradient tolerance used for the center inside [`simplify`].
pub const CENTER_TOL: f64 = 1e-9;
const MAX_PASSES: usize = 50;

fn consistency_tol(b: &[f64]) -> f64 {
    1e-9 * (1.0 + b.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Runs the simplification loop to a fixed point.
pub fn simplify(model: &PolytopeModel) -> Result<Simplified> {
    let mut model = model.clone();
    let mut record = TransformRecord::identity(model.n());
    for (i, (&l, &u)) in model.lower.iter().zip(&model.upper).enumerate() {
        if l > u {
            return Err(Error::ModelInfeasible(format!(
                "lower bound {l} exceeds upper bound {u} for variable {i}"
            )));
        }
    }

    for _ in 0..MAX_PASSES {
        let mut changed = false;

        // fixed variables and singleton rows, to a local fixed point
        loop {
            let mut fixed: Vec<(usize, f64)> = (0..model.n())
                .filter(|&j| model.lower[j] == model.upper[j])
                .map(|j| (j, model.lower[j]))
                .collect();
            fixed.extend(singleton_fixings(&model, &fixed)?);
            let removed = empty_rows(&model, &fixed)?;
            if fixed.is_empty() && removed.is_empty() {
                break;
            }
            changed = true;
            if !fixed.is_empty() {
                fix_variables(&mut model, &mut record, fixed);
            }
            let removed = empty_rows(&model, &[])?;
            remove_rows(&mut model, &mut record, removed);
        }

        if split_dense_columns(&mut model, &mut record) {
            changed = true;
        }

        let dependent = dependent_rows(&model.a, DEPENDENT_ROW_TOL);
        if !dependent.is_empty() {
            check_consistent(&model, &dependent)?;
            remove_rows(&mut model, &mut record, dependent);
            changed = true;
        }

        let (scaled, step) = rescale(&model);
        if let Some(step) = step {
            model = scaled;
            record.steps.push(step);
        }

        if model.n() == 0 {
            return Ok(Simplified {
                model,
                record,
                center: Vec::new(),
            });
        }

        let run = newton_center(&model, CENTER_TOL, MAX_NEWTON_ITERS)?;
        let tight: Vec<(usize, f64)> = (0..model.n())
            .filter_map(|j| {
                let (l, u, x) = (model.lower[j], model.upper[j], run.x[j]);
                if x - l < TIGHT_TOL {
                    Some((j, l))
                } else if u - x < TIGHT_TOL {
                    Some((j, u))
                } else {
                    None
                }
            })
            .collect();
        if !tight.is_empty() {
            if !run.feasible {
                return Err(infeasible_from(&run));
            }
            fix_variables(&mut model, &mut record, tight);
            continue;
        }
        if !changed {
            if !run.feasible {
                return Err(infeasible_from(&run));
            }
            if !run.converged {
                return Err(Error::NumericalFailure(format!(
                    "analytic center did not converge (projected gradient {:e})",
                    run.projected_gradient
                )));
            }
            return Ok(Simplified {
                model,
                record,
                center: run.x,
            });
        }
    }
    Err(Error::NumericalFailure("simplification did not reach a fixed point".into()))
}

fn infeasible_from(run: &CenterRun) -> Error {
    Error::ModelInfeasible(format!(
        "no point strictly inside the bounds satisfies Ax = b (residual {:e})",
        run.residual
    ))
}

/// Rows with exactly one nonzero pin their variable. Skips variables already
/// in `fixed` and reports each variable once.
fn singleton_fixings(model: &PolytopeModel, fixed: &[(usize, f64)]) -> Result<Vec<(usize, f64)>> {
    let m = model.m();
    let mut count = vec![0usize; m];
    let mut entry = vec![(0usize, 0.0f64); m];
    for j in 0..model.n() {
        let (rows, vals) = model.a.col(j);
        for (&r, &v) in rows.iter().zip(vals) {
            if v != 0.0 {
                count[r] += 1;
                entry[r] = (j, v);
            }
        }
    }
    let mut taken: Vec<bool> = vec![false; model.n()];
    for &(j, _) in fixed {
        taken[j] = true;
    }
    let mut out = Vec::new();
    for r in 0..m {
        if count[r] != 1 {
            continue;
        }
        let (j, a) = entry[r];
        if taken[j] {
            continue;
        }
        let value = model.b[r] / a;
        let slack = 1e-9 * (1.0 + value.abs());
        if value < model.lower[j] - slack || value > model.upper[j] + slack {
            return Err(Error::ModelInfeasible(format!(
                "row {r} forces variable {j} = {value}, outside [{}, {}]",
                model.lower[j], model.upper[j]
            )));
        }
        taken[j] = true;
        out.push((j, value.clamp(model.lower[j], model.upper[j])));
    }
    Ok(out)
}

/// Rows left without nonzeros once `fixed` is substituted. Fails if such a
/// row has a nonzero right-hand side.
fn empty_rows(model: &PolytopeModel, fixed: &[(usize, f64)]) -> Result<Vec<usize>> {
    let mut is_fixed = vec![false; model.n()];
    for &(j, _) in fixed {
        is_fixed[j] = true;
    }
    let mut live = vec![false; model.m()];
    let mut rhs = model.b.clone();
    for j in 0..model.n() {
        let (rows, vals) = model.a.col(j);
        for (&r, &v) in rows.iter().zip(vals) {
            if v == 0.0 {
                continue;
            }
            if is_fixed[j] {
                let value = fixed.iter().find(|f| f.0 == j).map(|f| f.1).unwrap_or(0.0);
                rhs[r] -= v * value;
            } else {
                live[r] = true;
            }
        }
    }
    let tol = consistency_tol(&model.b);
    let mut out = Vec::new();
    for r in 0..model.m() {
        if !live[r] {
            if rhs[r].abs() > tol {
                return Err(Error::ModelInfeasible(format!(
                    "row {r} reduces to 0 = {}",
                    rhs[r]
                )));
            }
            out.push(r);
        }
    }
    Ok(out)
}

fn fix_variables(model: &mut PolytopeModel, record: &mut TransformRecord, mut fixed: Vec<(usize, f64)>) {
    fixed.sort_by_key(|f| f.0);
    fixed.dedup_by_key(|f| f.0);
    let n = model.n();
    let mut is_fixed = vec![false; n];
    for &(j, v) in &fixed {
        is_fixed[j] = true;
        let (rows, vals) = model.a.col(j);
        for (&r, &a) in rows.iter().zip(vals) {
            model.b[r] -= a * v;
        }
    }
    let keep: Vec<usize> = (0..n).filter(|&j| !is_fixed[j]).collect();
    model.a = model.a.select_columns(&keep);
    model.lower = keep.iter().map(|&j| model.lower[j]).collect();
    model.upper = keep.iter().map(|&j| model.upper[j]).collect();
    model.alpha = keep.iter().map(|&j| model.alpha[j]).collect();
    record.steps.push(TransformStep::FixVariables {
        n_before: n,
        fixed,
        keep,
    });
}

fn remove_rows(model: &mut PolytopeModel, record: &mut TransformRecord, removed: Vec<usize>) {
    if removed.is_empty() {
        return;
    }
    let m = model.m();
    let mut drop = vec![false; m];
    for &r in &removed {
        drop[r] = true;
    }
    let keep: Vec<usize> = (0..m).filter(|&r| !drop[r]).collect();
    model.a = model.a.select_rows(&keep);
    model.b = keep.iter().map(|&r| model.b[r]).collect();
    record.steps.push(TransformStep::RemoveRows {
        m_before: m,
        removed,
    });
}

/// Checks that dropping `dependent` leaves `Ax = b` unchanged: the minimum
/// norm solution of the kept rows must satisfy the dropped ones.
fn check_consistent(model: &PolytopeModel, dependent: &[usize]) -> Result<()> {
    let m = model.m();
    let mut drop = vec![false; m];
    for &r in dependent {
        drop[r] = true;
    }
    let keep: Vec<usize> = (0..m).filter(|&r| !drop[r]).collect();
    let a_keep = model.a.select_rows(&keep);
    let b_keep: Vec<f64> = keep.iter().map(|&r| model.b[r]).collect();
    let system = NormalSystem::new(&a_keep);
    let factor = system.factor(&vec![1.0; model.n()])?;
    let y = factor.solve(&b_keep)?;
    let x0 = a_keep.matvec_transpose(&y)?;
    let ax = model.a.matvec(&x0)?;
    let tol = consistency_tol(&model.b);
    for &r in dependent {
        if (ax[r] - model.b[r]).abs() > tol {
            return Err(Error::ModelInfeasible(format!(
                "row {r} is a combination of other rows with an inconsistent right-hand side"
            )));
        }
    }
    Ok(())
}

/// Splits columns with more than `max(30, m/10)` nonzeros into a chain of
/// copies linked by `x_prev - x_copy = 0`.
fn split_dense_columns(model: &mut PolytopeModel, record: &mut TransformRecord) -> bool {
    let (n, m) = (model.n(), model.m());
    let threshold = (m / 10).max(30);
    let chunk = threshold - 2;
    let mut triplets = Vec::with_capacity(model.nnz());
    let mut copies = Vec::new();
    let mut next_row = m;
    for j in 0..n {
        let (rows, vals) = model.a.col(j);
        let entries: Vec<(usize, f64)> = rows
            .iter()
            .zip(vals)
            .filter(|(_, &v)| v != 0.0)
            .map(|(&r, &v)| (r, v))
            .collect();
        if entries.len() <= threshold {
            triplets.extend(entries.iter().map(|&(r, v)| (r, j, v)));
            continue;
        }
        let mut pieces = entries.chunks(chunk);
        let first = pieces.next().unwrap_or(&[]);
        triplets.extend(first.iter().map(|&(r, v)| (r, j, v)));
        let mut prev = j;
        for piece in pieces {
            let col = n + copies.len();
            copies.push(j);
            triplets.extend(piece.iter().map(|&(r, v)| (r, col, v)));
            triplets.push((next_row, prev, 1.0));
            triplets.push((next_row, col, -1.0));
            next_row += 1;
            prev = col;
        }
    }
    if copies.is_empty() {
        return false;
    }
    let n_new = n + copies.len();
    model.a = SparseMatrix::from_triplets(next_row, n_new, &triplets).expect("indices in range");
    model.b.resize(next_row, 0.0);
    for &j in &copies {
        model.lower.push(model.lower[j]);
        model.upper.push(model.upper[j]);
        model.alpha.push(0.0);
    }
    record.steps.push(TransformStep::SplitColumns { n_before: n, copies });
    true
}

fn in_range(v: f64) -> bool {
    (1.0 / 16.0..=16.0).contains(&v)
}

fn pow2_near(v: f64) -> f64 {
    libm::exp2(libm::round(libm::log2(v)))
}

fn row_col_max(a: &SparseMatrix) -> (Vec<f64>, Vec<f64>) {
    let mut row_max = vec![0.0f64; a.n_rows()];
    let mut col_max = vec![0.0f64; a.n_cols()];
    for j in 0..a.n_cols() {
        let (rows, vals) = a.col(j);
        for (&r, &v) in rows.iter().zip(vals) {
            row_max[r] = row_max[r].max(v.abs());
            col_max[j] = col_max[j].max(v.abs());
        }
    }
    (row_max, col_max)
}

/// Power-of-two row/column equilibration until the largest entry of every
/// nonzero row and column lies in `[1/16, 16]`. Returns `None` for the step
/// when the model is already in range. Powers of two keep lifting exact.
pub fn rescale(model: &PolytopeModel) -> (PolytopeModel, Option<TransformStep>) {
    let (m, n) = (model.m(), model.n());
    let ok = |a: &SparseMatrix| {
        let (r, c) = row_col_max(a);
        r.iter().chain(&c).all(|&v| v == 0.0 || in_range(v))
    };
    if ok(&model.a) {
        return (model.clone(), None);
    }
    let mut row_scale = vec![1.0; m];
    let mut col_scale = vec![1.0; n];
    let mut a = model.a.clone();
    for _ in 0..64 {
        let (rmax, cmax) = row_col_max(&a);
        let dr: Vec<f64> = rmax
            .iter()
            .map(|&v| if v > 0.0 { pow2_near(1.0 / libm::sqrt(v)) } else { 1.0 })
            .collect();
        let dc: Vec<f64> = cmax
            .iter()
            .map(|&v| if v > 0.0 { pow2_near(1.0 / libm::sqrt(v)) } else { 1.0 })
            .collect();
        a = a.scale(&dr, &dc);
        for (s, d) in row_scale.iter_mut().zip(&dr) {
            *s *= d;
        }
        for (s, d) in col_scale.iter_mut().zip(&dc) {
            *s *= d;
        }
        if ok(&a) {
            break;
        }
    }
    let scaled = PolytopeModel {
        a,
        b: model.b.iter().zip(&row_scale).map(|(b, r)| b * r).collect(),
        lower: model
            .lower
            .iter()
            .zip(&col_scale)
            .map(|(l, d)| clamp_lower(l / d))
            .collect(),
        upper: model
            .upper
            .iter()
            .zip(&col_scale)
            .map(|(u, d)| clamp_upper(u / d))
            .collect(),
        alpha: model.alpha.iter().zip(&col_scale).map(|(a, d)| a * d).collect(),
    };
    (scaled, Some(TransformStep::Scale { row_scale, col_scale }))
}

const MAX_NEWTON_ITERS: usize = 200;

#[derive(Debug, Clone)]
struct CenterRun {
    x: Vec<f64>,
    residual: f64,
    projected_gradient: f64,
    feasible: bool,
    converged: bool,
}

/// `‖(I - P) g^{-1/2} ∇φ(x)‖`: the barrier gradient's norm on `Null(A)` in
/// the local metric, zero exactly at the analytic center.
pub fn projected_gradient_norm(model: &PolytopeModel, x: &[f64]) -> Result<f64> {
    let barrier = model.barrier()?;
    let grad = barrier.gradient(x)?;
    let g = barrier.hessian_unchecked(x);
    let system = NormalSystem::new(&model.a);
    let factor = system.factor(&g)?;
    let (_, pg) = newton_direction(model, &factor, &g, &grad, &vec![0.0; model.m()]);
    Ok(pg)
}

/// Infeasible-start Newton direction for `min φ` s.t. `Ax = b` given the
/// residual `r = Ax - b`, and the projected gradient norm at `x`.
fn newton_direction(
    model: &PolytopeModel,
    factor: &crate::sparse::CholeskyFactor,
    g: &[f64],
    grad: &[f64],
    r: &[f64],
) -> (Vec<f64>, f64) {
    let n = model.n();
    let m = model.m();
    let ginv_grad: Vec<f64> = grad.iter().zip(g).map(|(d, g)| d / g).collect();
    let mut a_ginv_grad = vec![0.0; m];
    model.a.mul_into(&ginv_grad, &mut a_ginv_grad);
    let mut work = vec![0.0; m];

    // projected gradient: w0 = -(A g^{-1} A^T)^{-1} A g^{-1} ∇φ
    let neg: Vec<f64> = a_ginv_grad.iter().map(|v| -v).collect();
    let mut w0 = vec![0.0; m];
    factor.solve_into(&neg, &mut w0, &mut work);
    let mut at = vec![0.0; n];
    model.a.mul_transpose_into(&w0, &mut at);
    let pg = libm::sqrt(
        grad.iter()
            .zip(&at)
            .zip(g)
            .map(|((d, a), g)| (d + a) * (d + a) / g)
            .sum(),
    );

    let rhs: Vec<f64> = r.iter().zip(&a_ginv_grad).map(|(r, a)| r - a).collect();
    let mut w = vec![0.0; m];
    factor.solve_into(&rhs, &mut w, &mut work);
    model.a.mul_transpose_into(&w, &mut at);
    let d = grad
        .iter()
        .zip(&at)
        .zip(g)
        .map(|((d, a), g)| -(d + a) / g)
        .collect();
    (d, pg)
}

fn newton_center(model: &PolytopeModel, tol: f64, max_iters: usize) -> Result<CenterRun> {
    let barrier = model.barrier()?;
    let system = NormalSystem::new(&model.a);
    let feas_tol = 1e-10 * (1.0 + model.b.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let mut x: Vec<f64> = model
        .lower
        .iter()
        .zip(&model.upper)
        .map(|(l, u)| 0.5 * (l + u))
        .collect();
    let mut run = CenterRun {
        x: x.clone(),
        residual: f64::INFINITY,
        projected_gradient: f64::INFINITY,
        feasible: false,
        converged: false,
    };
    for _ in 0..=max_iters {
        let g = barrier.hessian_unchecked(&x);
        let grad = barrier.gradient(&x)?;
        let mut r = vec![0.0; model.m()];
        model.a.mul_into(&x, &mut r);
        for (ri, bi) in r.iter_mut().zip(&model.b) {
            *ri -= bi;
        }
        let residual = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let factor = match system.factor(&g) {
            Ok(f) => f,
            Err(_) => break,
        };
        let (d, pg) = newton_direction(model, &factor, &g, &grad, &r);
        let feasible = residual <= feas_tol;
        run = CenterRun {
            x: x.clone(),
            residual,
            projected_gradient: pg,
            feasible,
            converged: feasible && pg <= tol,
        };
        if run.converged {
            break;
        }
        let to_boundary = 0.9 * barrier.step_to_boundary(&x, &d);
        let t = if feasible {
            let lambda = libm::sqrt(d.iter().zip(&g).map(|(d, g)| g * d * d).sum());
            (0.5 / lambda).min(1.0).min(to_boundary)
        } else {
            to_boundary.min(1.0)
        };
        if !(t > 0.0) {
            break;
        }
        let next: Vec<f64> = x.iter().zip(&d).map(|(x, d)| x + t * d).collect();
        if !barrier.is_interior(&next) {
            break;
        }
        x = next;
    }
    Ok(run)
}

/// Analytic center of a model with full-row-rank `A`: the minimizer of the
/// box log barrier on `{Ax = b}`, found by damped Newton, with projected
/// gradient norm at most `tol`.
pub fn analytic_center(model: &PolytopeModel, tol: f64) -> Result<Vec<f64>> {
    let run = newton_center(model, tol, MAX_NEWTON_ITERS)?;
    if !run.feasible {
        return Err(infeasible_from(&run));
    }
    if !run.converged {
        return Err(Error::NumericalFailure(format!(
            "analytic center did not converge in {MAX_NEWTON_ITERS} iterations (projected gradient {:e})",
            run.projected_gradient
        )));
    }
    Ok(run.x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytopes::{birkhoff, hypercube, simplex};

    #[test]
    fn hypercube_center_is_origin() {
        let c = analytic_center(&hypercube(5), 1e-10).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn simplex_center_is_uniform() {
        let c = analytic_center(&simplex(6), 1e-10).unwrap();
        for v in c {
            assert!((v - 1.0 / 6.0).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn fixed_variable_substituted() {
        // x0 + x1 + x2 = 4 with x2 fixed at 2
        let a = SparseMatrix::from_triplets(1, 3, &[(0, 0, 1.0), (0, 1, 1.0), (0, 2, 1.0)]).unwrap();
        let model = PolytopeModel::new(a, vec![4.0], vec![0.0, 0.0, 2.0], vec![3.0, 3.0, 2.0], None).unwrap();
        let s = simplify(&model).unwrap();
        assert_eq!(s.model.n(), 2);
        assert_eq!(s.model.b, vec![2.0]);
        let x = s.record.lift(&s.center).unwrap();
        assert_eq!(x[2], 2.0);
        assert!((x[0] - 1.0).abs() < 1e-9 && (x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn duplicated_row_removed() {
        let a = SparseMatrix::from_triplets(
            2,
            3,
            &[(0, 0, 1.0), (0, 1, 1.0), (0, 2, 1.0), (1, 0, 1.0), (1, 1, 1.0), (1, 2, 1.0)],
        )
        .unwrap();
        let model = PolytopeModel::new(a, vec![1.0, 1.0], vec![0.0; 3], vec![1.0; 3], None).unwrap();
        let s = simplify(&model).unwrap();
        assert_eq!(s.model.m(), 1);
        assert_eq!(s.model.n(), 3);
    }

    #[test]
    fn inconsistent_duplicate_is_infeasible() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).unwrap();
        let model = PolytopeModel::new(a, vec![1.0, 1.5], vec![0.0; 2], vec![1.0; 2], None).unwrap();
        assert!(matches!(simplify(&model), Err(Error::ModelInfeasible(_))));
    }

    #[test]
    fn empty_interior_is_infeasible() {
        let a = SparseMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, 1.0)]).unwrap();
        let model = PolytopeModel::new(a, vec![3.0], vec![0.0; 2], vec![1.0; 2], None).unwrap();
        assert!(matches!(simplify(&model), Err(Error::ModelInfeasible(_))));
    }

    #[test]
    fn pinned_coordinates_collapse() {
        // x0 + x1 = 0 with x >= 0 pins both; x2 free in [0, 1]
        let a = SparseMatrix::from_triplets(1, 3, &[(0, 0, 1.0), (0, 1, 1.0)]).unwrap();
        let model = PolytopeModel::new(a, vec![0.0], vec![0.0; 3], vec![1.0; 3], None).unwrap();
        let s = simplify(&model).unwrap();
        assert_eq!(s.model.n(), 1);
        assert_eq!(s.model.m(), 0);
        let x = s.record.lift(&[0.25]).unwrap();
        assert_eq!(x, vec![0.0, 0.0, 0.25]);
    }

    #[test]
    fn birkhoff_one_is_eliminated() {
        let s = simplify(&birkhoff(1)).unwrap();
        assert_eq!(s.model.n(), 0);
        assert_eq!(s.record.lift(&[]).unwrap(), vec![1.0]);
    }

    #[test]
    fn rescale_identity_when_equilibrated() {
        let (_, step) = rescale(&simplex(4));
        assert!(step.is_none());
    }

    #[test]
    fn rescale_is_covariant() {
        let a = SparseMatrix::from_triplets(1, 2, &[(0, 0, 1e6), (0, 1, 3e6)]).unwrap();
        let model = PolytopeModel::new(a, vec![2e6], vec![0.0; 2], vec![1.0; 2], Some(vec![1.5, -2.0])).unwrap();
        let (scaled, step) = rescale(&model);
        let step = step.unwrap();
        let (rmax, cmax) = row_col_max(&scaled.a);
        assert!(rmax.iter().chain(&cmax).all(|&v| in_range(v)));
        let x = vec![0.5, 0.5];
        let y = step.collapse(x.clone()).unwrap();
        let lhs: f64 = scaled.alpha.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = model.alpha.iter().zip(&x).map(|(a, b)| a * b).sum();
        assert_eq!(lhs, rhs);
        assert_eq!(step.lift(y).unwrap(), x);
    }

    #[test]
    fn dense_column_is_split() {
        let m = 40;
        let mut t: Vec<(usize, usize, f64)> = (0..m).map(|i| (i, 0, 1.0)).collect();
        t.extend((0..m).map(|i| (i, i + 1, 1.0)));
        let a = SparseMatrix::from_triplets(m, m + 1, &t).unwrap();
        let model = PolytopeModel::new(a, vec![1.0; m], vec![0.0; m + 1], vec![1.0; m + 1], None).unwrap();
        let mut record = TransformRecord::identity(model.n());
        let mut split = model.clone();
        assert!(split_dense_columns(&mut split, &mut record));
        for j in 0..split.n() {
            assert!(split.a.col(j).0.len() <= 30);
        }
        let x = vec![0.5; m + 1];
        let y = record.collapse(&x).unwrap();
        assert!(split.max_violation(&y).unwrap() < 1e-12);
        assert_eq!(record.lift(&y).unwrap(), x);
    }
}
