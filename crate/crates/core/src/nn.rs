//! Online neural gain adapter: a small multilayer perceptron maps the recent
//! tracking history to PID gains and is trained while the loop runs.
//!
//! The network has four inputs (e, e_prev, e_prev2, u_prev), one sigmoid
//! hidden layer and three ReLU outputs scaled to gain ranges, so emitted
//! gains are never negative. The true plant Jacobian dy/du is unavailable
//! online and is replaced by the sign of the last observed input/output
//! movement, which preserves the descent direction of the squared error.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::SimError;
use crate::pid::{pid_step, Gains, PidState};
use crate::sim::SpeedController;

/// Network inputs: e, e_prev, e_prev2, u_prev.
pub const N_INPUTS: usize = 4;
/// Network outputs: one per gain.
pub const N_OUTPUTS: usize = 3;
/// Fraction of each gain range the freshly initialized network emits.
const INITIAL_OUTPUT_LEVEL: f64 = 0.2;

/// Adapter settings.
#[derive(Debug, Clone, PartialEq)]
pub struct NnConfig {
    pub n_hidden: usize,
    pub learning_rate: f64,
    /// Output scaling: emitted gains are the ReLU outputs times these ranges.
    pub gain_scale: [f64; N_OUTPUTS],
    /// Input scaling applied before the first layer.
    pub input_scale: [f64; N_INPUTS],
    pub init_seed: u64,
    /// Half-width of the uniform weight initialization.
    pub init_range: f64,
}

impl Default for NnConfig {
    fn default() -> Self {
        NnConfig {
            n_hidden: 4,
            learning_rate: 0.01,
            gain_scale: [1000.0, 10.0, 200.0],
            input_scale: [0.1, 0.1, 0.1, 1.0],
            init_seed: 0,
            init_range: 0.5,
        }
    }
}

impl NnConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_hidden == 0 {
            return Err(SimError::InvalidParam {
                name: "n_hidden",
                value: 0.0,
            });
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(SimError::InvalidParam {
                name: "learning_rate",
                value: self.learning_rate,
            });
        }
        if !(self.init_range >= 0.0 && self.init_range.is_finite()) {
            return Err(SimError::InvalidParam {
                name: "init_range",
                value: self.init_range,
            });
        }
        for (name, values) in [
            ("gain_scale", &self.gain_scale[..]),
            ("input_scale", &self.input_scale[..]),
        ] {
            for &v in values {
                if !v.is_finite() {
                    return Err(SimError::InvalidParam { name, value: v });
                }
            }
        }
        Ok(())
    }
}

/// Dense weights of the two layers, row-major with the bias row last:
/// `input` is (N_INPUTS + 1) x n_hidden, `output` is (n_hidden + 1) x
/// N_OUTPUTS.
#[derive(Debug, Clone, PartialEq)]
pub struct NnWeights {
    pub n_hidden: usize,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
}

impl NnWeights {
    /// All-zero network of the given width. Emits zero gains.
    pub fn zeroed(n_hidden: usize) -> NnWeights {
        NnWeights {
            n_hidden,
            input: vec![0.0; (N_INPUTS + 1) * n_hidden],
            output: vec![0.0; (n_hidden + 1) * N_OUTPUTS],
        }
    }
}

/// Logistic activation of the hidden layer.
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Activations recorded by `forward` and consumed by `backward`. Replaying a
/// cache on a network of a different width is rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    /// Scaled inputs with the bias slot appended.
    pub x: [f64; N_INPUTS + 1],
    /// Hidden pre-activations.
    pub s: Vec<f64>,
    /// Hidden activations (without the bias slot).
    pub h: Vec<f64>,
    /// Output pre-activations.
    pub z: [f64; N_OUTPUTS],
    /// ReLU outputs in [0, inf).
    pub o: [f64; N_OUTPUTS],
}

/// Forward pass over already-scaled inputs.
pub fn forward(w: &NnWeights, x: [f64; N_INPUTS]) -> ForwardCache {
    let nh = w.n_hidden;
    let x5 = [x[0], x[1], x[2], x[3], 1.0];
    let mut s = vec![0.0; nh];
    let mut h = vec![0.0; nh];
    for j in 0..nh {
        let mut acc = 0.0;
        for (i, &xi) in x5.iter().enumerate() {
            acc += w.input[i * nh + j] * xi;
        }
        s[j] = acc;
        h[j] = sigmoid(acc);
    }
    let mut z = [0.0; N_OUTPUTS];
    let mut o = [0.0; N_OUTPUTS];
    for l in 0..N_OUTPUTS {
        let mut acc = w.output[nh * N_OUTPUTS + l]; // bias row
        for (j, &hj) in h.iter().enumerate() {
            acc += w.output[j * N_OUTPUTS + l] * hj;
        }
        z[l] = acc;
        o[l] = acc.max(0.0);
    }
    ForwardCache { x: x5, s, h, z, o }
}

/// Seeded uniform initialization in [-init_range, init_range], after which
/// the output bias row is shifted so the network emits
/// `INITIAL_OUTPUT_LEVEL` of each gain range at zero input.
pub fn init_weights(cfg: &NnConfig) -> NnWeights {
    let nh = cfg.n_hidden;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.init_seed);
    let r = cfg.init_range;
    let mut w = NnWeights::zeroed(nh);
    for v in w.input.iter_mut() {
        *v = rng.gen_range(-r..=r);
    }
    for v in w.output.iter_mut() {
        *v = rng.gen_range(-r..=r);
    }
    // Center the outputs at a moderate gain level for a neutral start.
    let at_zero = forward(&w, [0.0; N_INPUTS]);
    for l in 0..N_OUTPUTS {
        let without_bias = at_zero.z[l] - w.output[nh * N_OUTPUTS + l];
        w.output[nh * N_OUTPUTS + l] = INITIAL_OUTPUT_LEVEL - without_bias;
    }
    w
}

/// Sign of the last observed movement of plant output against control,
/// standing in for the unknown plant Jacobian. A zero product counts as
/// positive so adaptation never stalls at startup.
pub fn sign_term(y: f64, y_prev: f64, u: f64, u_prev: f64) -> f64 {
    if (y - y_prev) * (u - u_prev) < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Partial derivatives of the (percent-scale) control increment with respect
/// to kp, ki and kd for the current error history.
pub fn control_partials(e: f64, e_prev: f64, e_prev2: f64, ts: f64) -> [f64; N_OUTPUTS] {
    [
        e - e_prev,
        ts / 2.0 * (e + e_prev),
        (e - 2.0 * e_prev + e_prev2) / ts,
    ]
}

/// One gradient-descent update of both layers for squared tracking error.
///
/// `partials` must be the control sensitivities to the network outputs,
/// i.e. `control_partials(..) * gain_scale` componentwise. The chain uses
/// d(error)/d(output) = -1, the sign surrogate for the plant Jacobian and the
/// ReLU mask of the cached pre-activations (subgradient 0 at exactly 0), so
/// a positive error with a positive sign raises the gains. Zero error leaves
/// the weights untouched.
pub fn backward(
    w: &NnWeights,
    cache: &ForwardCache,
    e: f64,
    partials: [f64; N_OUTPUTS],
    sign: f64,
    learning_rate: f64,
) -> Result<NnWeights, SimError> {
    let nh = w.n_hidden;
    if cache.h.len() != nh || cache.s.len() != nh {
        return Err(SimError::ShapeMismatch {
            expected: (nh, N_OUTPUTS),
            got: (cache.h.len(), N_OUTPUTS),
        });
    }
    let mut next = w.clone();
    // dE/dZ_l, with E = e^2 / 2 and de/dy = -1.
    let mut delta_z = [0.0; N_OUTPUTS];
    for l in 0..N_OUTPUTS {
        let mask = if cache.z[l] > 0.0 { 1.0 } else { 0.0 };
        delta_z[l] = -e * sign * partials[l] * mask;
    }
    for l in 0..N_OUTPUTS {
        for (j, &hj) in cache.h.iter().enumerate() {
            next.output[j * N_OUTPUTS + l] -= learning_rate * delta_z[l] * hj;
        }
        next.output[nh * N_OUTPUTS + l] -= learning_rate * delta_z[l];
    }
    for j in 0..nh {
        let mut dh = 0.0;
        for l in 0..N_OUTPUTS {
            dh += delta_z[l] * w.output[j * N_OUTPUTS + l];
        }
        let ds = dh * cache.h[j] * (1.0 - cache.h[j]);
        for (i, &xi) in cache.x.iter().enumerate() {
            next.input[i * nh + j] -= learning_rate * ds * xi;
        }
    }
    Ok(next)
}

/// Loop history carried by the adaptive controller between samples.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NnLoopState {
    pub pid: PidState,
    pub e_prev: f64,
    pub e_prev2: f64,
    pub y_prev: f64,
    pub u_prev: f64,
}

/// One sample of the adaptive loop: infer gains, run the PID, then train the
/// network on the fresh error. Returns the control, the gains used, the
/// updated weights and the shifted history.
pub fn nn_pid_step(
    cfg: &NnConfig,
    w: &NnWeights,
    state: &NnLoopState,
    v_ref: f64,
    y: f64,
    ts: f64,
) -> Result<(f64, Gains, NnWeights, NnLoopState), SimError> {
    let e = v_ref - y;
    let x = [
        cfg.input_scale[0] * e,
        cfg.input_scale[1] * state.e_prev,
        cfg.input_scale[2] * state.e_prev2,
        cfg.input_scale[3] * state.u_prev,
    ];
    let cache = forward(w, x);
    let gains = Gains {
        kp: cfg.gain_scale[0] * cache.o[0],
        ki: cfg.gain_scale[1] * cache.o[1],
        kd: cfg.gain_scale[2] * cache.o[2],
    };
    let (u, pid_next) = pid_step(&state.pid, gains, e, ts);
    let sign = sign_term(y, state.y_prev, u, state.u_prev);
    let base = control_partials(e, state.e_prev, state.e_prev2, ts);
    let partials = [
        base[0] * cfg.gain_scale[0],
        base[1] * cfg.gain_scale[1],
        base[2] * cfg.gain_scale[2],
    ];
    let w_next = backward(w, &cache, e, partials, sign, cfg.learning_rate)?;
    let state_next = NnLoopState {
        pid: pid_next,
        e_prev: e,
        e_prev2: state.e_prev,
        y_prev: y,
        u_prev: u,
    };
    Ok((u, gains, w_next, state_next))
}

/// Adaptive PID speed controller for the closed-loop runner. Records the
/// Jacobian sign used at each step for tracing.
#[derive(Debug, Clone)]
pub struct NnPid {
    pub cfg: NnConfig,
    pub weights: NnWeights,
    state: NnLoopState,
    pub signs: Vec<f64>,
}

impl NnPid {
    /// Controller with freshly initialized weights from the config seed.
    pub fn new(cfg: NnConfig) -> Result<NnPid, SimError> {
        cfg.validate()?;
        let weights = init_weights(&cfg);
        Ok(NnPid {
            cfg,
            weights,
            state: NnLoopState::default(),
            signs: Vec::new(),
        })
    }

    /// Controller with caller-provided weights (e.g. to freeze adaptation by
    /// setting the learning rate to zero).
    pub fn with_weights(cfg: NnConfig, weights: NnWeights) -> Result<NnPid, SimError> {
        cfg.validate()?;
        Ok(NnPid {
            cfg,
            weights,
            state: NnLoopState::default(),
            signs: Vec::new(),
        })
    }
}

impl SpeedController for NnPid {
    fn step(
        &mut self,
        v_ref: f64,
        v: f64,
        _theta_rad: f64,
        _wind_ms: f64,
        ts: f64,
    ) -> Result<(f64, Gains), SimError> {
        let (u, gains, w_next, state_next) =
            nn_pid_step(&self.cfg, &self.weights, &self.state, v_ref, v, ts)?;
        self.signs
            .push(sign_term(v, self.state.y_prev, u, self.state.u_prev));
        self.weights = w_next;
        self.state = state_next;
        Ok((u, gains))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sigmoid_reference_point() {
        assert_relative_eq!(sigmoid(2.0), 0.8807970779778823, epsilon = 1e-15);
        assert_eq!(sigmoid(0.0), 0.5);
    }

    #[test]
    fn sign_term_follows_product_sign() {
        assert_eq!(sign_term(5.0, 4.9, 0.5, 0.4), 1.0);
        assert_eq!(sign_term(5.0, 5.1, 0.5, 0.4), -1.0);
        assert_eq!(sign_term(5.0, 5.0, 0.5, 0.4), 1.0, "zero product is positive");
    }

    #[test]
    fn control_partials_example() {
        let p = control_partials(1.0, 0.0, 0.0, 0.01);
        assert_relative_eq!(p[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(p[1], 0.005, epsilon = 1e-15);
        assert_relative_eq!(p[2], 100.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_weights_emit_zero_gains_and_hold_control() {
        let cfg = NnConfig::default();
        let w = NnWeights::zeroed(cfg.n_hidden);
        let state = NnLoopState {
            u_prev: 0.3,
            pid: crate::pid::PidState {
                e_prev: 0.0,
                e_prev2: 0.0,
                u_prev: 0.3,
            },
            ..Default::default()
        };
        let (u, gains, _, _) = nn_pid_step(&cfg, &w, &state, 7.0, 2.0, 0.01).unwrap();
        assert_eq!(gains, Gains::ZERO);
        assert_eq!(u, 0.3);
    }

    #[test]
    fn relu_outputs_keep_gains_non_negative() {
        let cfg = NnConfig::default();
        let mut w = init_weights(&cfg);
        // Force strongly negative output pre-activations.
        for v in w.output.iter_mut() {
            *v = -1.0;
        }
        let cache = forward(&w, [0.5, -0.2, 0.1, 0.3]);
        for o in cache.o {
            assert!(o >= 0.0);
        }
    }

    #[test]
    fn init_emits_a_fifth_of_each_gain_range_at_zero_input() {
        let cfg = NnConfig::default();
        let w = init_weights(&cfg);
        let cache = forward(&w, [0.0; N_INPUTS]);
        for l in 0..N_OUTPUTS {
            assert_relative_eq!(cache.o[l], 0.2, epsilon = 1e-12);
        }
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let cfg = NnConfig::default();
        assert_eq!(init_weights(&cfg), init_weights(&cfg));
        let other = NnConfig {
            init_seed: 1,
            ..cfg
        };
        assert_ne!(init_weights(&other), init_weights(&cfg));
    }

    #[test]
    fn zero_error_is_a_fixed_point_of_training() {
        let cfg = NnConfig::default();
        let w = init_weights(&cfg);
        let state = NnLoopState::default();
        let (_, _, w_next, _) = nn_pid_step(&cfg, &w, &state, 0.0, 0.0, 0.01).unwrap();
        assert_eq!(w_next, w);
    }

    #[test]
    fn positive_error_with_positive_sign_raises_gains() {
        let cfg = NnConfig::default();
        let w = init_weights(&cfg);
        let mut state = NnLoopState::default();
        let mut gains_first = Gains::ZERO;
        let mut gains_last = Gains::ZERO;
        let mut weights = w;
        // Constant positive error with rising y ensures a positive sign term.
        for k in 0..20 {
            let y = 0.001 * k as f64;
            let (_, g, w2, s2) = nn_pid_step(&cfg, &weights, &state, y + 5.0, y, 0.01).unwrap();
            if k == 0 {
                gains_first = g;
            }
            gains_last = g;
            weights = w2;
            state = s2;
        }
        assert!(
            gains_last.kp > gains_first.kp,
            "kp should grow: {} -> {}",
            gains_first.kp,
            gains_last.kp
        );
    }

    #[test]
    fn backward_rejects_stale_cache() {
        let w = NnWeights::zeroed(4);
        let cache = forward(&NnWeights::zeroed(6), [0.0; N_INPUTS]);
        assert!(matches!(
            backward(&w, &cache, 1.0, [1.0, 1.0, 1.0], 1.0, 0.01),
            Err(SimError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn weights_stay_finite_through_a_long_loop() {
        let cfg = NnConfig::default();
        let mut w = init_weights(&cfg);
        let mut state = NnLoopState::default();
        for k in 0..5000 {
            let y = 10.0 * ((k as f64) * 0.013).sin();
            let (_, _, w2, s2) = nn_pid_step(&cfg, &w, &state, 5.0, y, 0.01).unwrap();
            w = w2;
            state = s2;
        }
        assert!(w.input.iter().chain(w.output.iter()).all(|v| v.is_finite()));
    }
}
