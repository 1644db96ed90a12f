//! Newton-Raphson AC power flow in polar form, plus branch-flow evaluation.
//!
//! Nodal balance at bus i with Y = G + jB:
//!
//! ```text
//! P_i(V, θ) = V_i Σ_j V_j (G_ij cos θ_ij + B_ij sin θ_ij)
//! Q_i(V, θ) = V_i Σ_j V_j (G_ij sin θ_ij − B_ij cos θ_ij)     θ_ij = θ_i − θ_j
//! ```
//!
//! Unknowns are the angles of all non-slack buses and the magnitudes of pq
//! buses. Each iteration rebuilds the full Jacobian and solves
//! `J·dx = [ΔP; ΔQ]` by dense LU; the start is flat (V = 1 for pq, v_set
//! elsewhere, θ = 0).

use super::case::{BusKind, PowerCase};
use super::ybus::AdmittanceMatrix;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Convergence threshold on the largest absolute power mismatch, p.u.
    pub tol: f64,
    /// Maximum Newton iterations.
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 50,
        }
    }
}

/// Per-branch complex power entering at each end, p.u.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchFlow {
    pub p_from: f64,
    pub q_from: f64,
    pub p_to: f64,
    pub q_to: f64,
}

/// Converged operating point.
#[derive(Debug, Clone)]
pub struct PfSolution {
    /// Voltage magnitudes, p.u., by bus index.
    pub v: Vec<f64>,
    /// Voltage angles, radians; slack pinned to 0.
    pub phi: Vec<f64>,
    /// Net active injections P_i(V, θ), p.u.
    pub p_inj: Vec<f64>,
    /// Net reactive injections Q_i(V, θ), p.u.
    pub q_inj: Vec<f64>,
    pub flows: Vec<BranchFlow>,
    pub iterations: usize,
    pub max_mismatch: f64,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("power flow did not converge after {iterations} iterations (max mismatch {mismatch:.3e} p.u.)")]
    NotConverged {
        iterations: usize,
        mismatch: f64,
        /// State at the last iterate, for diagnosis.
        last: Box<PfSolution>,
    },
    #[error("singular Jacobian at iteration {iteration} (isolated bus or degenerate case)")]
    SingularJacobian { iteration: usize },
    #[error("non-finite state at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("state length {got} does not match bus count {expected}")]
    LengthMismatch { got: usize, expected: usize },
}

/// Evaluates the nodal balance P_i(V, θ), Q_i(V, θ) at every bus.
pub fn bus_injections(ybus: &AdmittanceMatrix, v: &[f64], phi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = ybus.n();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for i in 0..n {
        let row = ybus.row(i);
        let (mut pi, mut qi) = (0.0, 0.0);
        for (j, y) in row.iter().enumerate() {
            let th = phi[i] - phi[j];
            let (sin, cos) = th.sin_cos();
            pi += v[j] * (y.re * cos + y.im * sin);
            qi += v[j] * (y.re * sin - y.im * cos);
        }
        p[i] = v[i] * pi;
        q[i] = v[i] * qi;
    }
    (p, q)
}

/// Scheduled net injections from loads and dispatched generation, p.u.
fn scheduled_injections(case: &PowerCase) -> (Vec<f64>, Vec<f64>) {
    let n = case.n_bus();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for bus in &case.buses {
        p[bus.id] -= bus.p_load;
        q[bus.id] -= bus.q_load;
    }
    for g in &case.gens {
        p[g.bus] += g.p_gen;
        q[g.bus] += g.q_gen;
    }
    (p, q)
}

/// Solves the power flow from a flat start.
pub fn solve_nr(
    case: &PowerCase,
    ybus: &AdmittanceMatrix,
    opts: &SolveOptions,
) -> Result<PfSolution, SolveError> {
    let n = case.n_bus();
    let mut v = vec![1.0; n];
    let mut phi = vec![0.0; n];
    for bus in &case.buses {
        if let Some(vs) = bus.v_set {
            if bus.kind != BusKind::Pq {
                v[bus.id] = vs;
            }
        }
    }

    // Unknown ordering: angles of non-slack buses, then magnitudes of pq buses.
    let ang_vars: Vec<usize> = case
        .buses
        .iter()
        .filter(|b| b.kind != BusKind::Slack)
        .map(|b| b.id)
        .collect();
    let mag_vars: Vec<usize> = case
        .buses
        .iter()
        .filter(|b| b.kind == BusKind::Pq)
        .map(|b| b.id)
        .collect();
    let (na, nm) = (ang_vars.len(), mag_vars.len());
    let dim = na + nm;

    let (p_sched, q_sched) = scheduled_injections(case);

    let mismatch_of = |p_calc: &[f64], q_calc: &[f64]| -> DVector<f64> {
        let mut f = DVector::zeros(dim);
        for (k, &i) in ang_vars.iter().enumerate() {
            f[k] = p_sched[i] - p_calc[i];
        }
        for (k, &i) in mag_vars.iter().enumerate() {
            f[na + k] = q_sched[i] - q_calc[i];
        }
        f
    };

    let mut iterations = 0;
    loop {
        let (p_calc, q_calc) = bus_injections(ybus, &v, &phi);
        let f = mismatch_of(&p_calc, &q_calc);
        let max_mismatch = f.amax();
        if !max_mismatch.is_finite() {
            return Err(SolveError::NonFinite {
                iteration: iterations,
            });
        }
        if max_mismatch <= opts.tol || dim == 0 {
            let flows = branch_flows(&v, &phi, case)?;
            return Ok(PfSolution {
                v,
                phi,
                p_inj: p_calc,
                q_inj: q_calc,
                flows,
                iterations,
                max_mismatch,
            });
        }
        if iterations >= opts.max_iter {
            let flows = branch_flows(&v, &phi, case)?;
            return Err(SolveError::NotConverged {
                iterations,
                mismatch: max_mismatch,
                last: Box::new(PfSolution {
                    v,
                    phi,
                    p_inj: p_calc,
                    q_inj: q_calc,
                    flows,
                    iterations,
                    max_mismatch,
                }),
            });
        }

        let jac = jacobian(ybus, &v, &phi, &p_calc, &q_calc, &ang_vars, &mag_vars);
        let dx = jac
            .lu()
            .solve(&f)
            .ok_or(SolveError::SingularJacobian {
                iteration: iterations + 1,
            })?;
        for (k, &i) in ang_vars.iter().enumerate() {
            phi[i] += dx[k];
        }
        for (k, &i) in mag_vars.iter().enumerate() {
            v[i] += dx[na + k];
        }
        iterations += 1;
    }
}

/// Full polar-form Jacobian d[P;Q]/d[θ;V] restricted to the unknowns.
fn jacobian(
    ybus: &AdmittanceMatrix,
    v: &[f64],
    phi: &[f64],
    p_calc: &[f64],
    q_calc: &[f64],
    ang_vars: &[usize],
    mag_vars: &[usize],
) -> DMatrix<f64> {
    let na = ang_vars.len();
    let nm = mag_vars.len();
    let mut jac = DMatrix::zeros(na + nm, na + nm);

    let dp_dth = |i: usize, j: usize| -> f64 {
        if i == j {
            -q_calc[i] - ybus.b(i, i) * v[i] * v[i]
        } else {
            let th = phi[i] - phi[j];
            v[i] * v[j] * (ybus.g(i, j) * th.sin() - ybus.b(i, j) * th.cos())
        }
    };
    let dp_dv = |i: usize, j: usize| -> f64 {
        if i == j {
            p_calc[i] / v[i] + ybus.g(i, i) * v[i]
        } else {
            let th = phi[i] - phi[j];
            v[i] * (ybus.g(i, j) * th.cos() + ybus.b(i, j) * th.sin())
        }
    };
    let dq_dth = |i: usize, j: usize| -> f64 {
        if i == j {
            p_calc[i] - ybus.g(i, i) * v[i] * v[i]
        } else {
            let th = phi[i] - phi[j];
            -v[i] * v[j] * (ybus.g(i, j) * th.cos() + ybus.b(i, j) * th.sin())
        }
    };
    let dq_dv = |i: usize, j: usize| -> f64 {
        if i == j {
            q_calc[i] / v[i] - ybus.b(i, i) * v[i]
        } else {
            let th = phi[i] - phi[j];
            v[i] * (ybus.g(i, j) * th.sin() - ybus.b(i, j) * th.cos())
        }
    };

    for (r, &i) in ang_vars.iter().enumerate() {
        for (c, &j) in ang_vars.iter().enumerate() {
            jac[(r, c)] = dp_dth(i, j);
        }
        for (c, &j) in mag_vars.iter().enumerate() {
            jac[(r, na + c)] = dp_dv(i, j);
        }
    }
    for (r, &i) in mag_vars.iter().enumerate() {
        for (c, &j) in ang_vars.iter().enumerate() {
            jac[(na + r, c)] = dq_dth(i, j);
        }
        for (c, &j) in mag_vars.iter().enumerate() {
            jac[(na + r, na + c)] = dq_dv(i, j);
        }
    }
    jac
}

/// Branch admittance terms entering the flow equations.
///
/// With `ys = 1/(r + jx)`, `sh = j b_c/2`, and tap `t` on the from side:
/// `a = (ys + sh)/t²` (from-side self term), `b = ys/t` (transfer term),
/// `c = ys + sh` (to-side self term).
struct BranchAdmittance {
    a: Complex64,
    b: Complex64,
    c: Complex64,
}

fn branch_admittance(r: f64, x: f64, b_charge: f64, tap: f64) -> BranchAdmittance {
    let ys = Complex64::new(1.0, 0.0) / Complex64::new(r, x);
    let sh = Complex64::new(0.0, b_charge / 2.0);
    BranchAdmittance {
        a: (ys + sh) / (tap * tap),
        b: ys / tap,
        c: ys + sh,
    }
}

/// Per-branch flows from a voltage state.
///
/// From-side power is `S_f = V_f·conj(a·V_f − b·V_t)`, which for tap = 1
/// expands to the textbook form
/// `P_f = V_f²g − V_f V_t (g cos φ + b sin φ)`,
/// `Q_f = −V_f²(b + b_c/2) − V_f V_t (g sin φ − b cos φ)` with φ = θ_f − θ_t.
pub fn branch_flows(v: &[f64], phi: &[f64], case: &PowerCase) -> Result<Vec<BranchFlow>, SolveError> {
    let n = case.n_bus();
    if v.len() != n || phi.len() != n {
        return Err(SolveError::LengthMismatch {
            got: v.len().min(phi.len()),
            expected: n,
        });
    }
    Ok(case
        .branches
        .iter()
        .map(|br| {
            let BranchAdmittance { a, b, c } = branch_admittance(br.r, br.x, br.b_charge, br.tap);
            let (vf, vt) = (v[br.from], v[br.to]);
            let ph = phi[br.from] - phi[br.to];
            let (sin, cos) = ph.sin_cos();
            BranchFlow {
                p_from: a.re * vf * vf - vf * vt * (b.re * cos + b.im * sin),
                q_from: -a.im * vf * vf - vf * vt * (b.re * sin - b.im * cos),
                p_to: c.re * vt * vt - vt * vf * (b.re * cos - b.im * sin),
                q_to: -c.im * vt * vt + vt * vf * (b.re * sin + b.im * cos),
            }
        })
        .collect())
}

/// Partial derivatives of one branch's from-side flow with respect to the
/// endpoint state. `d*_dphi` is taken with respect to φ = θ_from − θ_to.
#[derive(Debug, Clone, Copy)]
pub struct FlowSensitivity {
    pub dp_dvf: f64,
    pub dp_dvt: f64,
    pub dp_dphi: f64,
    pub dq_dvf: f64,
    pub dq_dvt: f64,
    pub dq_dphi: f64,
}

/// Analytic from-side flow sensitivities for every branch.
pub fn branch_flow_sensitivities(v: &[f64], phi: &[f64], case: &PowerCase) -> Vec<FlowSensitivity> {
    case.branches
        .iter()
        .map(|br| {
            let BranchAdmittance { a, b, .. } = branch_admittance(br.r, br.x, br.b_charge, br.tap);
            let (vf, vt) = (v[br.from], v[br.to]);
            let ph = phi[br.from] - phi[br.to];
            let (sin, cos) = ph.sin_cos();
            let t_p = b.re * cos + b.im * sin; // transfer term in P_f
            let t_q = b.re * sin - b.im * cos; // transfer term in Q_f
            FlowSensitivity {
                dp_dvf: 2.0 * a.re * vf - vt * t_p,
                dp_dvt: -vf * t_p,
                dp_dphi: vf * vt * t_q,
                dq_dvf: -2.0 * a.im * vf - vt * t_q,
                dq_dvt: -vf * t_q,
                dq_dphi: -vf * vt * t_p,
            }
        })
        .collect()
}
