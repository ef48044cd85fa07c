//! Infeasible primal-dual path-following method with HKM search directions and
//! Mehrotra predictor-corrector steps.
//!
//! Internally the problem is written as
//! `max cᵀy  s.t.  S_b = C_b − Σ y_i A_{b,i} ⪰ 0,  Q y = g` with `C_b = F0_b`,
//! `A_{b,i} = −F_{b,i}` and `Q` an orthonormal basis of the equality rows, paired with
//! `min Σ⟨C_b, X_b⟩ + gᵀλ  s.t.  Σ_b⟨A_{b,i}, X_b⟩ + (Qᵀλ)_i = c_i,  X_b ⪰ 0`.

use nalgebra::{Cholesky, DVector, Dyn};

use super::{ConicProblem, ConicSolver, IterationRecord, Solution, Status, Tolerances};
use crate::linalg::{gemm, gemm_tn, symmetric_min_eigenvalue, symmetrize, RMat, RVec};

#[derive(Debug, Clone, Default)]
pub struct InteriorPoint {
    pub tolerances: Tolerances,
}

impl InteriorPoint {
    pub fn new(tolerances: Tolerances) -> Self {
        Self { tolerances }
    }
}

impl ConicSolver for InteriorPoint {
    fn name(&self) -> &str {
        "interior-point"
    }

    fn solve(&self, problem: &ConicProblem) -> Solution {
        solve_ipm(problem, &self.tolerances)
    }
}

struct Block {
    size: usize,
    c: RMat,
    /// Active variable indices and their `A` matrices flattened as columns.
    active: Vec<usize>,
    a: Vec<RMat>,
    acols: RMat,
}

impl Block {
    fn from_problem(block: &super::LmiBlock) -> Self {
        let s = block.size();
        let mut active = Vec::new();
        let mut a = Vec::new();
        for (i, f) in block.coefficients().iter().enumerate() {
            if let Some(f) = f {
                if f.iter().any(|&v| v != 0.0) {
                    active.push(i);
                    a.push(-f);
                }
            }
        }
        let mut acols = RMat::zeros(s * s, a.len());
        for (j, m) in a.iter().enumerate() {
            acols.column_mut(j).copy_from_slice(m.as_slice());
        }
        Self {
            size: s,
            c: block.constant().clone(),
            active,
            a,
            acols,
        }
    }

    /// `Σ_i y_i A_i`.
    fn apply(&self, y: &RVec) -> RMat {
        let ya = RVec::from_iterator(self.active.len(), self.active.iter().map(|&i| y[i]));
        let v = &self.acols * ya;
        RMat::from_column_slice(self.size, self.size, v.as_slice())
    }

    /// Adds `⟨A_i, X⟩` into `out[i]`.
    fn adjoint_into(&self, x: &RMat, out: &mut RVec) {
        let xv = DVector::from_column_slice(x.as_slice());
        let v = self.acols.tr_mul(&xv);
        for (j, &i) in self.active.iter().enumerate() {
            out[i] += v[j];
        }
    }
}

struct Equalities {
    q: RMat,
    g: RVec,
    /// Rows of `Q` as combinations of the original rows.
    t: RMat,
}

fn preprocess_equalities(problem: &ConicProblem) -> Result<Equalities, String> {
    let n = problem.num_vars();
    let (rows, rhs) = problem.equalities();
    let p = rows.len();
    let scale = 1.0 + rhs.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    let mut qs: Vec<RVec> = Vec::new();
    let mut gs: Vec<f64> = Vec::new();
    let mut ts: Vec<RVec> = Vec::new();
    for (i, (row, &f)) in rows.iter().zip(rhs).enumerate() {
        let mut r = RVec::from_column_slice(row);
        let norm = r.norm();
        let mut fr = f;
        let mut tr = RVec::zeros(p);
        tr[i] = 1.0;
        for _ in 0..2 {
            for ((q, g), t) in qs.iter().zip(&gs).zip(&ts) {
                let c = q.dot(&r);
                r.axpy(-c, q, 1.0);
                fr -= c * g;
                tr.axpy(-c, t, 1.0);
            }
        }
        let nr = r.norm();
        if nr <= 1e-10 * norm.max(f64::MIN_POSITIVE) || norm == 0.0 {
            if fr.abs() > 1e-9 * scale {
                return Err(format!(
                    "equality row {i} is dependent on earlier rows but inconsistent ({fr:e})"
                ));
            }
            continue;
        }
        qs.push(r / nr);
        gs.push(fr / nr);
        ts.push(tr / nr);
    }
    let m = qs.len();
    let mut q = RMat::zeros(m, n);
    let mut t = RMat::zeros(m, p);
    for j in 0..m {
        q.set_row(j, &qs[j].transpose());
        t.set_row(j, &ts[j].transpose());
    }
    Ok(Equalities {
        q,
        g: RVec::from_vec(gs),
        t,
    })
}

/// Largest `α ≤ cap` with `M + α D ⪰ 0`, given the Cholesky factor of `M`.
fn max_step(chol: &Cholesky<f64, Dyn>, d: &RMat, cap: f64) -> f64 {
    let l = chol.l();
    let w = match l.solve_lower_triangular(d) {
        Some(w) => w,
        None => return 0.0,
    };
    let mut m = match l.solve_lower_triangular(&w.transpose()) {
        Some(m) => m,
        None => return 0.0,
    };
    symmetrize(&mut m);
    let lo = symmetric_min_eigenvalue(&m);
    if lo >= 0.0 {
        cap
    } else {
        cap.min(-1.0 / lo)
    }
}

fn frob(a: &RMat, b: &RMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

struct Direction {
    dy: RVec,
    dlam: RVec,
    dx: Vec<RMat>,
    ds: Vec<RMat>,
}

pub(crate) fn solve_ipm(problem: &ConicProblem, tol: &Tolerances) -> Solution {
    let n = problem.num_vars();
    if let Some(b) = problem
        .blocks()
        .iter()
        .find(|b| b.size() > tol.max_block_size)
    {
        return Solution::failed(
            Status::NumericalFailure,
            n,
            format!("block size {} exceeds cap {}", b.size(), tol.max_block_size),
        );
    }
    let eq = match preprocess_equalities(problem) {
        Ok(eq) => eq,
        Err(msg) => return Solution::failed(Status::Infeasible, n, msg),
    };
    let blocks: Vec<Block> = problem.blocks().iter().map(Block::from_problem).collect();
    let c = RVec::from_column_slice(problem.objective());
    let p = eq.q.nrows();

    let norm_c = c.norm();
    let norm_cmat = blocks
        .iter()
        .map(|b| b.c.norm_squared())
        .sum::<f64>()
        .sqrt();
    let norm_g = eq.g.norm();
    let total_size: usize = blocks.iter().map(|b| b.size).sum();

    let mut xs: Vec<RMat> = Vec::with_capacity(blocks.len());
    let mut ss: Vec<RMat> = Vec::with_capacity(blocks.len());
    for b in &blocks {
        let s = b.size as f64;
        let mut xi: f64 = 10.0_f64.max(s.sqrt());
        let mut eta: f64 = 10.0_f64.max(s.sqrt()).max(b.c.norm());
        for (j, a) in b.a.iter().enumerate() {
            let an = a.norm();
            xi = xi.max(s * (1.0 + c[b.active[j]].abs()) / (1.0 + an));
            eta = eta.max(an);
        }
        xs.push(RMat::identity(b.size, b.size) * xi);
        ss.push(RMat::identity(b.size, b.size) * eta);
    }
    let mut y = RVec::zeros(n);
    let mut lam = RVec::zeros(p);

    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut last_steps = (1.0, 1.0);
    let mut stalls = 0;

    let finish = |status: Status,
                  y: &RVec,
                  lam: &RVec,
                  xs: &[RMat],
                  trace: Vec<IterationRecord>,
                  message: Option<String>| {
        let pobj = c.dot(y);
        let dobj: f64 = blocks
            .iter()
            .zip(xs)
            .map(|(b, x)| frob(&b.c, x))
            .sum::<f64>()
            + eq.g.dot(lam);
        let yorig = eq.t.tr_mul(lam);
        Solution {
            status,
            x: y.iter().copied().collect(),
            objective: pobj,
            dual_objective: dobj,
            z: xs.to_vec(),
            y: yorig.iter().copied().collect(),
            gap: (pobj - dobj).abs(),
            iterations: trace.len(),
            trace,
            message,
        }
    };

    for iter in 0..tol.max_iterations {
        let chol_s: Vec<Cholesky<f64, Dyn>> = match ss
            .iter()
            .map(|s| Cholesky::new(s.clone()))
            .collect::<Option<Vec<_>>>()
        {
            Some(v) => v,
            None => {
                return finish(
                    Status::NumericalFailure,
                    &y,
                    &lam,
                    &xs,
                    trace,
                    Some("slack lost positive definiteness".into()),
                )
            }
        };
        let chol_x: Vec<Cholesky<f64, Dyn>> = match xs
            .iter()
            .map(|x| Cholesky::new(x.clone()))
            .collect::<Option<Vec<_>>>()
        {
            Some(v) => v,
            None => {
                return finish(
                    Status::NumericalFailure,
                    &y,
                    &lam,
                    &xs,
                    trace,
                    Some("dual matrix lost positive definiteness".into()),
                )
            }
        };
        let sinv: Vec<RMat> = chol_s
            .iter()
            .map(|ch| {
                let mut m = ch.inverse();
                symmetrize(&mut m);
                m
            })
            .collect();

        // Residuals.
        let mut ax = RVec::zeros(n);
        for (b, x) in blocks.iter().zip(&xs) {
            b.adjoint_into(x, &mut ax);
        }
        let rp = &c - &ax - eq.q.tr_mul(&lam);
        let rd: Vec<RMat> = blocks
            .iter()
            .zip(&ss)
            .map(|(b, s)| &b.c - b.apply(&y) - s)
            .collect();
        let re = &eq.g - &eq.q * &y;

        let pobj = c.dot(&y);
        let dobj: f64 = blocks
            .iter()
            .zip(&xs)
            .map(|(b, x)| frob(&b.c, x))
            .sum::<f64>()
            + eq.g.dot(&lam);
        let xs_dot: f64 = xs.iter().zip(&ss).map(|(x, s)| frob(x, s)).sum();
        let mu = if total_size > 0 {
            xs_dot / total_size as f64
        } else {
            0.0
        };
        let pinf = rp.norm() / (1.0 + norm_c);
        let rd_norm = rd.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt();
        let dinf = (rd_norm / (1.0 + norm_cmat)).max(re.norm() / (1.0 + norm_g));
        trace.push(IterationRecord {
            iteration: iter,
            primal_objective: pobj,
            dual_objective: dobj,
            primal_infeasibility: dinf,
            dual_infeasibility: pinf,
            mu,
            step_primal: last_steps.1,
            step_dual: last_steps.0,
        });

        let gap = (pobj - dobj).abs();
        if pinf < tol.feasibility
            && dinf < tol.feasibility
            && gap < tol.gap * (1.0 + pobj.abs())
            && xs_dot.abs() < tol.gap * (1.0 + pobj.abs())
        {
            return finish(Status::Optimal, &y, &lam, &xs, trace, None);
        }

        // Ray certificates.
        let xnorm = xs.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt();
        if -dobj > 0.0 && xnorm > 1e6 {
            let ray = (&c - &rp).norm() / -dobj;
            if ray < tol.feasibility {
                return finish(
                    Status::Infeasible,
                    &y,
                    &lam,
                    &xs,
                    trace,
                    Some(format!("dual ray with residual {ray:e}")),
                );
            }
        }
        if pobj > 1e6 * (1.0 + norm_cmat + norm_g) {
            let lhs: f64 = blocks
                .iter()
                .zip(&rd)
                .map(|(b, r)| (&b.c - r).norm_squared())
                .sum::<f64>()
                .sqrt()
                + (&eq.g - &re).norm();
            if lhs / pobj < tol.feasibility {
                return finish(
                    Status::Unbounded,
                    &y,
                    &lam,
                    &xs,
                    trace,
                    Some(format!("primal ray with residual {:e}", lhs / pobj)),
                );
            }
        }

        // Schur complement H_ij = Σ_b Tr(A_i X A_j S⁻¹).
        let mut kkt = RMat::zeros(n + p, n + p);
        for ((b, x), si) in blocks.iter().zip(&xs).zip(&sinv) {
            let na = b.active.len();
            if na == 0 {
                continue;
            }
            let s2 = b.size * b.size;
            let mut gcols = RMat::zeros(s2, na);
            for (j, a) in b.a.iter().enumerate() {
                let g = gemm(&gemm(x, a), si);
                gcols.column_mut(j).copy_from_slice(g.as_slice());
            }
            let h = gemm_tn(&b.acols, &gcols);
            for (jj, &j) in b.active.iter().enumerate() {
                for (ii, &i) in b.active.iter().enumerate() {
                    kkt[(i, j)] += h[(ii, jj)];
                }
            }
        }
        for j in 0..n {
            for i in (j + 1)..n {
                let v = 0.5 * (kkt[(i, j)] + kkt[(j, i)]);
                kkt[(i, j)] = v;
                kkt[(j, i)] = v;
            }
        }
        for r in 0..p {
            for i in 0..n {
                kkt[(n + r, i)] = eq.q[(r, i)];
                kkt[(i, n + r)] = eq.q[(r, i)];
            }
        }
        let lu = kkt.lu();

        let direction = |rc: &[RMat]| -> Option<Direction> {
            let mut rhs = RVec::zeros(n + p);
            let mut adj = RVec::zeros(n);
            for (bi, b) in blocks.iter().enumerate() {
                let mut t = gemm(&gemm(&xs[bi], &rd[bi]), &sinv[bi]);
                symmetrize(&mut t);
                let m = &rc[bi] - t;
                b.adjoint_into(&m, &mut adj);
            }
            for i in 0..n {
                rhs[i] = rp[i] - adj[i];
            }
            for r in 0..p {
                rhs[n + r] = re[r];
            }
            let sol = lu.solve(&rhs)?;
            if sol.iter().any(|v| !v.is_finite()) {
                return None;
            }
            let dy = sol.rows(0, n).into_owned();
            let dlam = sol.rows(n, p).into_owned();
            let mut dx = Vec::with_capacity(blocks.len());
            let mut ds = Vec::with_capacity(blocks.len());
            for (bi, b) in blocks.iter().enumerate() {
                let dsb = &rd[bi] - b.apply(&dy);
                let mut t = gemm(&gemm(&xs[bi], &dsb), &sinv[bi]);
                symmetrize(&mut t);
                let mut dxb = &rc[bi] - t;
                symmetrize(&mut dxb);
                dx.push(dxb);
                ds.push(dsb);
            }
            Some(Direction { dy, dlam, dx, ds })
        };

        let steps = |d: &Direction| -> (f64, f64) {
            let ap = chol_x
                .iter()
                .zip(&d.dx)
                .fold(1.0_f64, |a, (ch, dx)| a.min(max_step(ch, dx, 1.0)));
            let ad = chol_s
                .iter()
                .zip(&d.ds)
                .fold(1.0_f64, |a, (ch, ds)| a.min(max_step(ch, ds, 1.0)));
            (ap, ad)
        };

        // Predictor.
        let rc_aff: Vec<RMat> = xs.iter().map(|x| -x).collect();
        let Some(aff) = direction(&rc_aff) else {
            return finish(
                Status::NumericalFailure,
                &y,
                &lam,
                &xs,
                trace,
                Some("singular Newton system".into()),
            );
        };
        let (ap_aff, ad_aff) = steps(&aff);
        let mu_aff = if total_size > 0 {
            xs.iter()
                .zip(&ss)
                .zip(aff.dx.iter().zip(&aff.ds))
                .map(|((x, s), (dx, ds))| frob(&(x + dx * ap_aff), &(s + ds * ad_aff)))
                .sum::<f64>()
                / total_size as f64
        } else {
            0.0
        };
        let sigma = if mu > 0.0 {
            (mu_aff / mu).max(0.0).powi(3).min(1.0)
        } else {
            0.0
        };

        // Corrector.
        let rc: Vec<RMat> = (0..blocks.len())
            .map(|bi| {
                let mut corr = gemm(&gemm(&aff.dx[bi], &aff.ds[bi]), &sinv[bi]);
                symmetrize(&mut corr);
                &sinv[bi] * (sigma * mu) - &xs[bi] - corr
            })
            .collect();
        let Some(dir) = direction(&rc) else {
            return finish(
                Status::NumericalFailure,
                &y,
                &lam,
                &xs,
                trace,
                Some("singular Newton system".into()),
            );
        };
        let (ap_max, ad_max) = steps(&dir);
        let gamma = 0.9 + 0.09 * ap_aff.min(ad_aff);
        let ap = (gamma * ap_max).min(1.0);
        let ad = (gamma * ad_max).min(1.0);

        for (x, dx) in xs.iter_mut().zip(&dir.dx) {
            *x += dx * ap;
            symmetrize(x);
        }
        lam.axpy(ap, &dir.dlam, 1.0);
        y.axpy(ad, &dir.dy, 1.0);
        for (s, ds) in ss.iter_mut().zip(&dir.ds) {
            *s += ds * ad;
            symmetrize(s);
        }
        last_steps = (ap, ad);
        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                return finish(
                    Status::NumericalFailure,
                    &y,
                    &lam,
                    &xs,
                    trace,
                    Some("step lengths collapsed".into()),
                );
            }
        } else {
            stalls = 0;
        }
    }
    finish(
        Status::NumericalFailure,
        &y,
        &lam,
        &xs,
        trace,
        Some(format!(
            "no convergence in {} iterations",
            tol.max_iterations
        )),
    )
}

#[cfg(test)]
mod tests {
    use super::super::{solve, ConicProblem, LmiBlock, Status, Tolerances};
    use crate::linalg::RMat;

    #[test]
    fn infeasible_problem_is_detected() {
        // x ≥ 1 and −x ≥ 0.
        let mut p = ConicProblem::new(vec![0.0]);
        p.add_block(LmiBlock::scalar(-1.0, &[1.0])).unwrap();
        p.add_block(LmiBlock::scalar(0.0, &[-1.0])).unwrap();
        let sol = solve(&p, &Tolerances::default());
        assert_eq!(sol.status, Status::Infeasible, "{:?}", sol.message);
    }

    #[test]
    fn unbounded_problem_is_detected() {
        let mut p = ConicProblem::new(vec![1.0]);
        p.add_block(LmiBlock::scalar(0.0, &[1.0])).unwrap();
        let sol = solve(&p, &Tolerances::default());
        assert_eq!(sol.status, Status::Unbounded, "{:?}", sol.message);
    }

    #[test]
    fn inconsistent_equalities_are_infeasible() {
        let mut p = ConicProblem::new(vec![1.0, 0.0]);
        p.add_block(LmiBlock::scalar(1.0, &[-1.0, 0.0])).unwrap();
        p.add_equality(vec![1.0, 1.0], 0.0).unwrap();
        p.add_equality(vec![2.0, 2.0], 1.0).unwrap();
        assert_eq!(solve(&p, &Tolerances::default()).status, Status::Infeasible);
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let mut p = ConicProblem::new(vec![1.0, 1.0]);
        let f0 = RMat::identity(2, 2);
        let f1 = RMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let f2 = RMat::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 0.0]);
        p.add_block(LmiBlock::new(f0, vec![Some(f1), Some(f2)]).unwrap())
            .unwrap();
        p.add_equality(vec![1.0, -1.0], 0.0).unwrap();
        p.add_equality(vec![-2.0, 2.0], 0.0).unwrap();
        let sol = solve(&p, &Tolerances::default());
        assert_eq!(sol.status, Status::Optimal, "{:?}", sol.message);
        // x1 = x2 = t with [[1 - t, t], [t, 1]] ⪰ 0: t = (√5 − 1)/2.
        let t = (5f64.sqrt() - 1.0) / 2.0;
        assert!((sol.x[0] - t).abs() < 1e-6);
        assert!((sol.objective - 2.0 * t).abs() < 1e-6);
    }
}
