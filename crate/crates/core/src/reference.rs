//! Independent reference integrator on unit quaternions.
//!
//! Shares no code with [`crate::so3`], [`crate::controllers`] or
//! [`crate::dynamics`]: the state is a unit quaternion integrated with plain
//! RK4 in R⁴ (renormalized each step), and every control law is re-derived in
//! quaternion form. Run at a very small step it serves as the oracle that the
//! matrix-based simulator is checked against.
//!
//! Only static setpoints at the identity are supported, which is all the
//! attitude scenarios need.

use crate::controllers::ControllerKind;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quat {
    pub w: f64,
    pub v: [f64; 3],
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn scale(s: f64, a: &[f64; 3]) -> [f64; 3] {
    [s * a[0], s * a[1], s * a[2]]
}

impl Quat {
    pub const IDENTITY: Quat = Quat {
        w: 1.0,
        v: [0.0; 3],
    };

    /// Rotation by `angle` about `axis` (normalized here).
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Quat {
        let n = norm(&axis);
        let (s, c) = (0.5 * angle).sin_cos();
        Quat {
            w: c,
            v: scale(s / n, &axis),
        }
    }

    pub fn mul(&self, o: &Quat) -> Quat {
        let c = cross(&self.v, &o.v);
        Quat {
            w: self.w * o.w - dot(&self.v, &o.v),
            v: [
                self.w * o.v[0] + o.w * self.v[0] + c[0],
                self.w * o.v[1] + o.w * self.v[1] + c[1],
                self.w * o.v[2] + o.w * self.v[2] + c[2],
            ],
        }
    }

    pub fn conj(&self) -> Quat {
        Quat {
            w: self.w,
            v: scale(-1.0, &self.v),
        }
    }

    fn normalized(&self) -> Quat {
        let n = (self.w * self.w + dot(&self.v, &self.v)).sqrt();
        Quat {
            w: self.w / n,
            v: scale(1.0 / n, &self.v),
        }
    }

    /// Representative with non-negative scalar part.
    fn canonical(&self) -> Quat {
        if self.w < 0.0 {
            Quat {
                w: -self.w,
                v: scale(-1.0, &self.v),
            }
        } else {
            *self
        }
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        2.0 * norm(&self.v).atan2(self.w.abs())
    }

    /// `ρ·n` for a quaternion with `w ≥ 0`.
    fn rotation_vector(&self) -> [f64; 3] {
        let s = norm(&self.v);
        if s < 1e-12 {
            return scale(2.0 / self.w, &self.v);
        }
        scale(2.0 * s.atan2(self.w) / s, &self.v)
    }

    /// Tilt angle: angle between the body `e3` axis and the reference `e3`.
    pub fn tilt_angle(&self) -> f64 {
        let (_, tilt) = self.canonical().split_yaw_tilt();
        tilt.angle()
    }

    // q = q_yaw ⊗ q_tilt with q_yaw about e3 and q_tilt about an axis ⊥ e3.
    fn split_yaw_tilt(&self) -> (Quat, Quat) {
        let (w, [x, y, z]) = (self.w, self.v);
        let n = (w * w + z * z).sqrt();
        let yaw = Quat {
            w: w / n,
            v: [0.0, 0.0, z / n],
        };
        let tilt = Quat {
            w: n,
            v: [(w * x + z * y) / n, (w * y - z * x) / n, 0.0],
        };
        (yaw, tilt)
    }
}

/// Plain-number gains so the oracle does not depend on the crate's types.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceGains {
    pub k_omega: [f64; 3],
    pub k_r: f64,
    pub k_y: f64,
}

impl Default for ReferenceGains {
    fn default() -> Self {
        let s = std::f64::consts::SQRT_2;
        Self {
            k_omega: [2.0 * s, 2.0 * s, s],
            k_r: 4.0,
            k_y: 1.0,
        }
    }
}

/// Commanded acceleration for the error quaternion `q` (setpoint identity).
pub fn reference_command(
    kind: ControllerKind,
    q: &Quat,
    omega: &[f64; 3],
    g: &ReferenceGains,
) -> [f64; 3] {
    let q = q.canonical();
    let kr_diag = [g.k_r, g.k_r, g.k_y];
    let feedback: [f64; 3] = match kind {
        // sin ρ · n = 2·cos(ρ/2)·sin(ρ/2)·n
        ControllerKind::SkewSymmetric => {
            let s = scale(2.0 * q.w, &q.v);
            [kr_diag[0] * s[0], kr_diag[1] * s[1], kr_diag[2] * s[2]]
        }
        ControllerKind::RotationVector => {
            let r = q.rotation_vector();
            [kr_diag[0] * r[0], kr_diag[1] * r[1], kr_diag[2] * r[2]]
        }
        ControllerKind::QuaternionTiltPriority => {
            let (yaw, tilt) = q.split_yaw_tilt();
            let a = scale(2.0 * g.k_r, &tilt.v);
            let b = scale(2.0 * g.k_y, &yaw.v);
            [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
        }
        ControllerKind::ProportionalTiltPriority => {
            let (_, tilt) = q.split_yaw_tilt();
            let total = q.rotation_vector();
            let red = tilt.rotation_vector();
            let a = scale(g.k_y, &total);
            let b = scale(g.k_r - g.k_y, &red);
            [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
        }
    };
    [
        -g.k_omega[0] * omega[0] - feedback[0],
        -g.k_omega[1] * omega[1] - feedback[1],
        -g.k_omega[2] * omega[2] - feedback[2],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceState {
    pub q: Quat,
    pub omega: [f64; 3],
}

fn derivative(
    kind: ControllerKind,
    g: &ReferenceGains,
    q: &Quat,
    omega: &[f64; 3],
) -> (Quat, [f64; 3]) {
    let qdot = q.mul(&Quat {
        w: 0.0,
        v: scale(0.5, omega),
    });
    (qdot, reference_command(kind, q, omega, g))
}

fn axpy_q(q: &Quat, h: f64, d: &Quat) -> Quat {
    Quat {
        w: q.w + h * d.w,
        v: [q.v[0] + h * d.v[0], q.v[1] + h * d.v[1], q.v[2] + h * d.v[2]],
    }
}

fn axpy(a: &[f64; 3], h: f64, d: &[f64; 3]) -> [f64; 3] {
    [a[0] + h * d[0], a[1] + h * d[1], a[2] + h * d[2]]
}

/// One classical RK4 step on `(q, ω)` in R⁴ × R³, then renormalization.
pub fn reference_step(
    s: &ReferenceState,
    kind: ControllerKind,
    g: &ReferenceGains,
    dt: f64,
) -> ReferenceState {
    let (q1, w1) = derivative(kind, g, &s.q, &s.omega);
    let (q2, w2) = derivative(
        kind,
        g,
        &axpy_q(&s.q, 0.5 * dt, &q1),
        &axpy(&s.omega, 0.5 * dt, &w1),
    );
    let (q3, w3) = derivative(
        kind,
        g,
        &axpy_q(&s.q, 0.5 * dt, &q2),
        &axpy(&s.omega, 0.5 * dt, &w2),
    );
    let (q4, w4) = derivative(kind, g, &axpy_q(&s.q, dt, &q3), &axpy(&s.omega, dt, &w3));
    let q = Quat {
        w: s.q.w + dt / 6.0 * (q1.w + 2.0 * q2.w + 2.0 * q3.w + q4.w),
        v: [0, 1, 2].map(|i| s.q.v[i] + dt / 6.0 * (q1.v[i] + 2.0 * q2.v[i] + 2.0 * q3.v[i] + q4.v[i])),
    };
    let omega =
        [0, 1, 2].map(|i| s.omega[i] + dt / 6.0 * (w1[i] + 2.0 * w2[i] + 2.0 * w3[i] + w4[i]));
    ReferenceState {
        q: q.normalized(),
        omega,
    }
}

/// A sample of the reference trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSample {
    pub t: f64,
    pub rho_e: f64,
    pub rho_r: f64,
    pub state: ReferenceState,
}

/// Integrates from `initial` for `steps` steps of `dt`, sampling every
/// `sample_every` steps (the initial state is always sampled).
pub fn reference_run(
    initial: ReferenceState,
    kind: ControllerKind,
    g: &ReferenceGains,
    dt: f64,
    steps: usize,
    sample_every: usize,
) -> Vec<ReferenceSample> {
    let sample_every = sample_every.max(1);
    let mut out = Vec::with_capacity(steps / sample_every + 2);
    let mut s = initial;
    let sample = |t: f64, s: &ReferenceState| ReferenceSample {
        t,
        rho_e: s.q.angle(),
        rho_r: s.q.tilt_angle(),
        state: *s,
    };
    out.push(sample(0.0, &s));
    for k in 1..=steps {
        s = reference_step(&s, kind, g, dt);
        if k % sample_every == 0 {
            out.push(sample(k as f64 * dt, &s));
        }
    }
    out
}
