//! Collision histories: graphs of particle creations, backward
//! trajectory systems and the oscillatory phase bookkeeping.
//!
//! A history of order n describes a tagged particle that acquires n
//! companions at decreasing times t > t_1 > ... > t_n > 0. Collision j
//! creates particle j+1 from an ancestor ell_j <= j. Three trajectory
//! systems share this skeleton:
//!
//! * the classical system, where collision j applies an elastic kick
//!   along a direction omega_j when sigma_j = +1 and nothing when
//!   sigma_j = -1, and the newborn starts at the ancestor's position;
//! * the finite-eps system, where collision j applies two half-kicks
//!   with momenta h_j = -k_j + eps xi_j (at t_j) and k_j (at the
//!   intermediate time tau_j = t_j - eps s_j), and the newborn position
//!   x_{j+1} is a free variable;
//! * the eps -> 0 pointwise limit of the finite-eps system, where both
//!   half-kicks merge into (sigma'_j - sigma_j) k_j / 2 at t_j.
//!
//! All velocities are piecewise constant in the backward time s; at a
//! kick time the velocity takes the value of the interval above it.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vec::Vect;

#[derive(Debug, Error)]
pub enum HistoryError {
    #[error("invalid creation label at position {pos}: {label} not in 1..={max}")]
    BadLabel { pos: usize, label: usize, max: usize },
    #[error("collision times must satisfy t > t_1 > ... > t_n > 0, got {0:?}")]
    BadTimes(Vec<f64>),
    #[error("length mismatch: {what} has {got} entries, expected {want}")]
    BadLength {
        what: &'static str,
        got: usize,
        want: usize,
    },
    #[error("intermediate time offset s_{j} = {s} outside (0, {max})")]
    BadOffset { j: usize, s: f64, max: f64 },
}

/// Creation labels of a collision history: entry j (1-based) is the
/// ancestor `ell_j` of the particle created at collision j, with
/// `1 <= ell_j <= j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Graph {
    labels: Vec<usize>,
}

impl Graph {
    pub fn new(labels: Vec<usize>) -> Result<Self, HistoryError> {
        for (i, &l) in labels.iter().enumerate() {
            if l < 1 || l > i + 1 {
                return Err(HistoryError::BadLabel {
                    pos: i + 1,
                    label: l,
                    max: i + 1,
                });
            }
        }
        Ok(Graph { labels })
    }

    /// Number of collisions n.
    pub fn order(&self) -> usize {
        self.labels.len()
    }

    /// Ancestor of collision `j` (1-based).
    pub fn label(&self, j: usize) -> usize {
        self.labels[j - 1]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// All n! histories of order n, in lexicographic label order.
    pub fn enumerate(n: usize) -> Vec<Graph> {
        let mut out = vec![Graph { labels: vec![] }];
        for j in 1..=n {
            let mut next = Vec::with_capacity(out.len() * j);
            for g in &out {
                for l in 1..=j {
                    let mut labels = g.labels.clone();
                    labels.push(l);
                    next.push(Graph { labels });
                }
            }
            out = next;
        }
        out
    }

    /// The n x n interaction matrix `A_{r,s} = -delta_{r,s} +
    /// delta_{ell_r, s+1}` (row-major). It is triangular with -1 on the
    /// diagonal, so |det A| = 1.
    pub fn interaction_matrix(&self) -> Vec<f64> {
        let n = self.order();
        let mut a = vec![0.0; n * n];
        for r in 1..=n {
            a[(r - 1) * n + (r - 1)] -= 1.0;
            let l = self.label(r);
            if l >= 2 {
                a[(r - 1) * n + (l - 2)] += 1.0;
            }
        }
        a
    }

    /// `A^T z` for a vector of one block per collision:
    /// `(A^T z)_s = -z_s + sum_{r : ell_r = s+1} z_r`.
    pub fn apply_a_transpose(&self, z: &[Vect]) -> Vec<Vect> {
        let n = self.order();
        assert_eq!(z.len(), n);
        let mut out: Vec<Vect> = z.iter().map(|v| -*v).collect();
        for r in 1..=n {
            let l = self.label(r);
            if l >= 2 {
                out[l - 2] += z[r - 1];
            }
        }
        out
    }
}

impl TryFrom<Vec<usize>> for Graph {
    type Error = HistoryError;
    fn try_from(v: Vec<usize>) -> Result<Self, Self::Error> {
        Graph::new(v)
    }
}

impl From<Graph> for Vec<usize> {
    fn from(g: Graph) -> Vec<usize> {
        g.labels
    }
}

fn check_times(t: f64, times: &[f64]) -> Result<(), HistoryError> {
    let ok = t > 0.0
        && times.iter().all(|x| x.is_finite())
        && times.first().map_or(true, |&t1| t1 < t)
        && times.last().map_or(true, |&tn| tn > 0.0)
        && times.windows(2).all(|w| w[0] > w[1]);
    if ok {
        Ok(())
    } else {
        Err(HistoryError::BadTimes(times.to_vec()))
    }
}

fn check_len(what: &'static str, got: usize, want: usize) -> Result<(), HistoryError> {
    if got == want {
        Ok(())
    } else {
        Err(HistoryError::BadLength { what, got, want })
    }
}

/// A classical collision history: graph, ordered times, gain/loss signs
/// and scattering directions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassicalHistory {
    pub graph: Graph,
    /// Final (observation) time t.
    pub t: f64,
    /// Collision times t_1 > ... > t_n in (0, t).
    pub times: Vec<f64>,
    /// sigma_j = +1 (gain, elastic kick) or -1 (loss, free crossing).
    pub sigmas: Vec<i8>,
    /// Unit scattering directions omega_j.
    pub omegas: Vec<Vect>,
}

impl ClassicalHistory {
    pub fn validate(&self) -> Result<(), HistoryError> {
        let n = self.graph.order();
        check_times(self.t, &self.times)?;
        check_len("times", self.times.len(), n)?;
        check_len("sigmas", self.sigmas.len(), n)?;
        check_len("omegas", self.omegas.len(), n)
    }
}

/// A finite-eps collision history: the oscillatory analogue of
/// `ClassicalHistory`, carrying two signs, momenta `k_j`, rescaled
/// conjugate momenta `xi_j` (so that `h_j = -k_j + eps xi_j`) and
/// rescaled intermediate offsets `s_j` with `tau_j = t_j - eps s_j`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpsHistory {
    pub graph: Graph,
    pub eps: f64,
    pub t: f64,
    pub times: Vec<f64>,
    /// Offsets s_j, constrained so tau_j stays in (t_{j+1}, t_j).
    pub s_times: Vec<f64>,
    pub sigmas: Vec<i8>,
    pub sigmas_prime: Vec<i8>,
    pub ks: Vec<Vect>,
    pub xis: Vec<Vect>,
}

impl EpsHistory {
    pub fn validate(&self) -> Result<(), HistoryError> {
        let n = self.graph.order();
        check_times(self.t, &self.times)?;
        check_len("times", self.times.len(), n)?;
        check_len("s_times", self.s_times.len(), n)?;
        check_len("sigmas", self.sigmas.len(), n)?;
        check_len("sigmas_prime", self.sigmas_prime.len(), n)?;
        check_len("ks", self.ks.len(), n)?;
        check_len("xis", self.xis.len(), n)?;
        if self.eps > 0.0 {
            for j in 1..=n {
                let max = self.s_range(j);
                let s = self.s_times[j - 1];
                if !(s > 0.0 && s < max) {
                    return Err(HistoryError::BadOffset { j, s, max });
                }
            }
        }
        Ok(())
    }

    /// Upper end of the admissible range for s_j: `(t_j - t_{j+1})/eps`
    /// with `t_{n+1} = 0`.
    pub fn s_range(&self, j: usize) -> f64 {
        let below = if j == self.graph.order() {
            0.0
        } else {
            self.times[j]
        };
        (self.times[j - 1] - below) / self.eps
    }

    /// Momentum `h_j = -k_j + eps xi_j` of the first half-kick.
    pub fn h(&self, j: usize) -> Vect {
        -self.ks[j - 1] + self.xis[j - 1] * self.eps
    }

    /// Intermediate kick time `tau_j = t_j - eps s_j`.
    pub fn tau(&self, j: usize) -> f64 {
        self.times[j - 1] - self.eps * self.s_times[j - 1]
    }
}

/// A backward trajectory: piecewise-constant velocity below a birth
/// time. `vels[i]` holds on `[kick_times[i], kick_times[i-1])` (birth
/// time capping the first interval); at a kick time the velocity is the
/// value from above, so kicks act strictly below their time stamp.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub birth_time: f64,
    pub birth_pos: Vect,
    pub kick_times: Vec<f64>,
    pub vels: Vec<Vect>,
}

impl Trajectory {
    pub fn new(birth_time: f64, birth_pos: Vect, birth_vel: Vect) -> Self {
        Trajectory {
            birth_time,
            birth_pos,
            kick_times: vec![],
            vels: vec![birth_vel],
        }
    }

    /// Registers a velocity jump `dv` effective for s < `time`. Kicks
    /// must be added in decreasing time order, never above the birth.
    pub fn add_kick(&mut self, time: f64, dv: Vect) {
        assert!(time <= self.birth_time);
        if let Some(&last) = self.kick_times.last() {
            assert!(time < last);
        }
        let cur = *self.vels.last().unwrap();
        self.kick_times.push(time);
        self.vels.push(cur + dv);
    }

    /// Velocity at backward time `s` (value from above at kick times).
    pub fn velocity(&self, s: f64) -> Vect {
        let i = self.kick_times.iter().take_while(|&&kt| kt > s).count();
        self.vels[i]
    }

    /// Position `y(s) = birth_pos - \int_s^{birth} u`, for s <= birth.
    pub fn position(&self, s: f64) -> Vect {
        let mut pos = self.birth_pos;
        let mut hi = self.birth_time;
        let mut i = 0;
        while i < self.kick_times.len() && self.kick_times[i] > s {
            pos -= self.vels[i] * (hi - self.kick_times[i]);
            hi = self.kick_times[i];
            i += 1;
        }
        pos - self.vels[i] * (hi - s)
    }
}

/// The classical backward flow. Particle 1 starts at `(x1, v1)` at time
/// t; collision j creates particle j+1 at the ancestor's position with
/// injected velocity `inject_v[j-1]`, and when sigma_j = +1 transfers
/// `(omega_j . w_j) omega_j` between the pair, with `w_j` the relative
/// velocity just before the collision. Returns one trajectory per
/// particle plus the pre-collision relative velocities `w_j`.
pub fn classical_trajectories(
    h: &ClassicalHistory,
    x1: Vect,
    v1: Vect,
    inject_v: &[Vect],
) -> (Vec<Trajectory>, Vec<Vect>) {
    let n = h.graph.order();
    assert_eq!(inject_v.len(), n);
    let mut trajs = vec![Trajectory::new(h.t, x1, v1)];
    let mut ws = Vec::with_capacity(n);
    for j in 1..=n {
        let tj = h.times[j - 1];
        let a = h.graph.label(j) - 1;
        let v_new = inject_v[j - 1];
        let w = trajs[a].velocity(tj) - v_new;
        ws.push(w);
        let kick = h.omegas[j - 1] * ((1 + h.sigmas[j - 1]) as f64 / 2.0 * h.omegas[j - 1].dot(&w));
        let birth_pos = trajs[a].position(tj);
        trajs[a].add_kick(tj, -kick);
        let mut newborn = Trajectory::new(tj, birth_pos, v_new);
        newborn.add_kick(tj, kick);
        trajs.push(newborn);
    }
    (trajs, ws)
}

/// The finite-eps backward flow. Particle j+1 is created at the free
/// position `inject_x[j-1]` with velocity `inject_v[j-1]`; the pair
/// (ell_j, j+1) exchanges the half-kick `sigma_j h_j / 2` below t_j and
/// `sigma'_j k_j / 2` below tau_j = t_j - eps s_j.
pub fn eps_trajectories(
    h: &EpsHistory,
    x1: Vect,
    v1: Vect,
    inject_x: &[Vect],
    inject_v: &[Vect],
) -> Vec<Trajectory> {
    let n = h.graph.order();
    assert_eq!(inject_x.len(), n);
    assert_eq!(inject_v.len(), n);
    let mut trajs = vec![Trajectory::new(h.t, x1, v1)];
    for j in 1..=n {
        let tj = h.times[j - 1];
        let a = h.graph.label(j) - 1;
        let half_h = h.h(j) * (h.sigmas[j - 1] as f64 / 2.0);
        let half_k = h.ks[j - 1] * (h.sigmas_prime[j - 1] as f64 / 2.0);
        trajs.push(Trajectory::new(tj, inject_x[j - 1], inject_v[j - 1]));
        trajs[a].add_kick(tj, -half_h);
        trajs[j].add_kick(tj, half_h);
        let tau = h.tau(j);
        trajs[a].add_kick(tau, -half_k);
        trajs[j].add_kick(tau, half_k);
    }
    trajs
}

/// The eps -> 0 pointwise limit of `eps_trajectories`: both half-kicks
/// merge at t_j into `(sigma'_j - sigma_j) k_j / 2`. Positions stay
/// free, as in the finite-eps system.
pub fn bar_trajectories(
    h: &EpsHistory,
    x1: Vect,
    v1: Vect,
    inject_x: &[Vect],
    inject_v: &[Vect],
) -> Vec<Trajectory> {
    let n = h.graph.order();
    assert_eq!(inject_x.len(), n);
    assert_eq!(inject_v.len(), n);
    let mut trajs = vec![Trajectory::new(h.t, x1, v1)];
    for j in 1..=n {
        let tj = h.times[j - 1];
        let a = h.graph.label(j) - 1;
        let dv = h.ks[j - 1] * ((h.sigmas_prime[j - 1] - h.sigmas[j - 1]) as f64 / 2.0);
        trajs.push(Trajectory::new(tj, inject_x[j - 1], inject_v[j - 1]));
        trajs[a].add_kick(tj, -dv);
        trajs[j].add_kick(tj, dv);
    }
    trajs
}

/// The phase of a finite-eps history and its split into a bounded part
/// and the linear forms that are integrated out exactly.
#[derive(Clone, Debug)]
pub struct PhaseParts {
    /// Residual of `y_{ell_j}(t_j) - y_{j+1}(t_j)` after removing the
    /// endpoint free-flight `y_{ell_j} - y_{j+1} + (u_{ell_j} -
    /// u_{j+1}) t_j`.
    pub gamma1: Vec<Vect>,
    /// Residual of the increment across `[tau_j, t_j]` after removing
    /// `eps s_j (u_{ell_j} - u_{j+1})`.
    pub gamma2: Vec<Vect>,
    /// `Gamma = sum_j (gamma1_j . xi_j - gamma2_j . k_j / eps)`.
    pub gamma: f64,
    /// `Gamma` plus the root-particle terms `xi_j.(y_1 + t_j u_1) -
    /// s_j k_j.u_1` over collisions with ell_j = 1.
    pub gamma_tilde: f64,
    /// Endpoint state of the root particle, `(y_1(0), u_1(0))`.
    pub root_endpoint: (Vect, Vect),
}

/// Total oscillatory phase of a history, evaluated directly on the
/// trajectories: `sum_j [ xi_j . D_j(t_j) - (k_j/eps)(D_j(t_j) -
/// D_j(tau_j)) ]` with `D_j(s) = y_{ell_j}(s) - y_{j+1}(s)`.
pub fn direct_phase(h: &EpsHistory, trajs: &[Trajectory]) -> f64 {
    let n = h.graph.order();
    let mut phi = 0.0;
    for j in 1..=n {
        let a = h.graph.label(j) - 1;
        let tj = h.times[j - 1];
        let tau = h.tau(j);
        let d_tj = trajs[a].position(tj) - trajs[j].position(tj);
        let d_tau = trajs[a].position(tau) - trajs[j].position(tau);
        phi += h.xis[j - 1].dot(&d_tj) - h.ks[j - 1].dot(&(d_tj - d_tau)) / h.eps;
    }
    phi
}

/// Splits the phase of `trajs` (built by `eps_trajectories`) into the
/// gamma residuals and the assembled `Gamma`, `Gamma~`. The residuals
/// depend only on the history, not on the injected states.
pub fn phase_decomposition(h: &EpsHistory, trajs: &[Trajectory]) -> PhaseParts {
    let n = h.graph.order();
    let mut gamma1 = Vec::with_capacity(n);
    let mut gamma2 = Vec::with_capacity(n);
    let mut gamma = 0.0;
    for j in 1..=n {
        let a = h.graph.label(j) - 1;
        let tj = h.times[j - 1];
        let tau = h.tau(j);
        let d_tj = trajs[a].position(tj) - trajs[j].position(tj);
        let d_tau = trajs[a].position(tau) - trajs[j].position(tau);
        let end_pos = trajs[a].position(0.0) - trajs[j].position(0.0);
        let end_vel = trajs[a].velocity(0.0) - trajs[j].velocity(0.0);
        let g1 = d_tj - end_pos - end_vel * tj;
        let g2 = (d_tj - d_tau) - end_vel * (h.eps * h.s_times[j - 1]);
        gamma += g1.dot(&h.xis[j - 1]) - g2.dot(&h.ks[j - 1]) / h.eps;
        gamma1.push(g1);
        gamma2.push(g2);
    }
    let y1 = trajs[0].position(0.0);
    let u1 = trajs[0].velocity(0.0);
    let mut tilde = gamma;
    for j in 1..=n {
        if h.graph.label(j) == 1 {
            tilde += h.xis[j - 1].dot(&(y1 + u1 * h.times[j - 1]))
                - h.s_times[j - 1] * h.ks[j - 1].dot(&u1);
        }
    }
    PhaseParts {
        gamma1,
        gamma2,
        gamma,
        gamma_tilde: tilde,
        root_endpoint: (y1, u1),
    }
}

/// Draws a valid classical history of order n over a fixed graph.
pub fn random_classical(
    graph: &Graph,
    t: f64,
    dim: usize,
    rng: &mut impl Rng,
) -> ClassicalHistory {
    let n = graph.order();
    ClassicalHistory {
        graph: graph.clone(),
        t,
        times: crate::mc::sample_time_simplex(t, n, rng),
        sigmas: (0..n).map(|_| if rng.gen() { 1 } else { -1 }).collect(),
        omegas: (0..n).map(|_| crate::mc::sample_unit_sphere(dim, rng)).collect(),
    }
}

/// Draws a valid finite-eps history of order n over a fixed graph, with
/// Gaussian momenta and uniformly placed intermediate times.
pub fn random_eps(graph: &Graph, t: f64, eps: f64, dim: usize, rng: &mut impl Rng) -> EpsHistory {
    let n = graph.order();
    let times = crate::mc::sample_time_simplex(t, n, rng);
    let mut h = EpsHistory {
        graph: graph.clone(),
        eps,
        t,
        times,
        s_times: vec![0.0; n],
        sigmas: (0..n).map(|_| if rng.gen() { 1 } else { -1 }).collect(),
        sigmas_prime: (0..n).map(|_| if rng.gen() { 1 } else { -1 }).collect(),
        ks: (0..n).map(|_| crate::mc::sample_gauss_vec(dim, 1.0, rng)).collect(),
        xis: (0..n).map(|_| crate::mc::sample_gauss_vec(dim, 1.0, rng)).collect(),
    };
    for j in 1..=n {
        h.s_times[j - 1] = h.s_range(j) * (0.5 * rng.gen::<f64>() + 0.25);
    }
    h
}
