use crate::network::wrap_angle;

/// Integrated closed-loop state: absolute unit angles and filtered powers.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub time: f64,
    /// Wrapped to `(−π, π]`.
    pub delta: Vec<f64>,
    pub p_f: Vec<f64>,
    pub q_f: Vec<f64>,
}

impl SimState {
    pub fn zero(n: usize) -> Self {
        Self {
            time: 0.0,
            delta: vec![0.0; n],
            p_f: vec![0.0; n],
            q_f: vec![0.0; n],
        }
    }

    pub fn units(&self) -> usize {
        self.delta.len()
    }

    /// Angles relative to unit 1, wrapped.
    pub fn relative_angles(&self) -> Vec<f64> {
        let reference = self.delta.first().copied().unwrap_or(0.0);
        self.delta.iter().map(|d| wrap_angle(d - reference)).collect()
    }

    pub(crate) fn wrap(&mut self) {
        for d in &mut self.delta {
            *d = wrap_angle(*d);
        }
    }

    /// `self + scale·rate`, angles left unwrapped.
    pub(crate) fn advanced(&self, rate: &StateRate, scale: f64) -> Self {
        let add = |x: &[f64], dx: &[f64]| x.iter().zip(dx).map(|(a, b)| a + scale * b).collect();
        Self {
            time: self.time,
            delta: add(&self.delta, &rate.d_delta),
            p_f: add(&self.p_f, &rate.d_p_f),
            q_f: add(&self.q_f, &rate.d_q_f),
        }
    }
}

/// Time derivative of a [`SimState`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateRate {
    pub d_delta: Vec<f64>,
    pub d_p_f: Vec<f64>,
    pub d_q_f: Vec<f64>,
}

impl StateRate {
    /// RK4 combination `(k1 + 2k2 + 2k3 + k4)/6`.
    pub(crate) fn rk4(k: [&StateRate; 4]) -> Self {
        let mix = |f: fn(&StateRate) -> &Vec<f64>| -> Vec<f64> {
            (0..f(k[0]).len())
                .map(|i| (f(k[0])[i] + 2.0 * f(k[1])[i] + 2.0 * f(k[2])[i] + f(k[3])[i]) / 6.0)
                .collect()
        };
        Self {
            d_delta: mix(|r| &r.d_delta),
            d_p_f: mix(|r| &r.d_p_f),
            d_q_f: mix(|r| &r.d_q_f),
        }
    }
}
