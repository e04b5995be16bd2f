//! Linear-loss simulation of the observed data of a 4-intensity SNS run.
//!
//! No sampling is performed: every "observed" count is the model expectation, and
//! the fluctuation analysis downstream treats it as a realised value.
//!
//! Click model. Alice and Bob's pulses arrive at Charlie's 50:50 beamsplitter with
//! intensities `x = μ_A η` and `y = μ_B η`, `η = η_d 10^{-α L / 20}` per arm. With phase
//! difference `θ` the two detectors click with probability
//! `d_± = 1 - (1 - p_d) exp(-(x + y)/2 ∓ √(xy) cos θ)`, and a window is heralded when
//! exactly one of them clicks. Phase-randomised sources are averaged over `θ`.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tail_bounds::FailureProb;

/// Tolerance on the ratio constraint between decoy and signal intensities.
pub const SECURITY_CONSTRAINT_TOL: f64 = 1e-9;

/// Quadrature intervals used for phase averages.
pub const QUADRATURE_POINTS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceParams {
    /// Dark count probability per detector and window.
    pub dark_count: f64,
    /// Misalignment error probability.
    pub misalignment: f64,
    pub detector_efficiency: f64,
    /// Error-correction inefficiency `f`.
    pub ec_inefficiency: f64,
    /// Fiber loss in dB/km.
    pub fiber_loss_db_km: f64,
    /// Failure probability of each statistical-fluctuation estimate.
    pub xi_c: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        DeviceParams {
            dark_count: 1e-8,
            misalignment: 0.03,
            detector_efficiency: 0.30,
            ec_inefficiency: 1.1,
            fiber_loss_db_km: 0.2,
            xi_c: 1e-20,
        }
    }
}

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dark_count", self.dark_count),
            ("misalignment", self.misalignment),
            ("detector_efficiency", self.detector_efficiency),
            ("xi_c", self.xi_c),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "{name} = {v} outside [0, 1]"
                )));
            }
        }
        if !(self.ec_inefficiency >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "ec_inefficiency = {} must be at least 1",
                self.ec_inefficiency
            )));
        }
        if !(self.fiber_loss_db_km > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "fiber_loss_db_km = {} must be positive",
                self.fiber_loss_db_km
            )));
        }
        Ok(())
    }

    /// Transmittance of one arm (half the distance) including detector efficiency.
    pub fn arm_transmittance(&self, distance_km: f64) -> f64 {
        self.detector_efficiency * 10f64.powf(-self.fiber_loss_db_km * distance_km / 20.0)
    }
}

/// Intensities and probabilities of one party.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideParams {
    pub mu1: f64,
    pub mu2: f64,
    pub mu_z: f64,
    /// Probability of sending in a signal window.
    pub send_prob: f64,
    pub p1: f64,
    pub p2: f64,
}

impl SideParams {
    pub fn p0(&self) -> f64 {
        1.0 - self.p1 - self.p2
    }

    /// Probability of each decoy intensity `o, x, y`.
    pub fn decoy_probs(&self) -> [f64; 3] {
        [self.p0(), self.p1, self.p2]
    }

    pub fn decoy_intensities(&self) -> [f64; 3] {
        [0.0, self.mu1, self.mu2]
    }

    fn validate(&self, side: &str) -> Result<()> {
        for (name, v) in [
            ("send_prob", self.send_prob),
            ("p1", self.p1),
            ("p2", self.p2),
            ("p0", self.p0()),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "{side}.{name} = {v} outside [0, 1]"
                )));
            }
        }
        if !(self.mu1 > 0.0 && self.mu2 > self.mu1 && self.mu_z > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{side}: intensities must satisfy 0 < mu1 < mu2 and mu_z > 0, got {} {} {}",
                self.mu1, self.mu2, self.mu_z
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Total number of pulse pairs `N_tol`.
    pub total_pulses: f64,
    pub distance_km: f64,
    /// Probability that a party chooses a signal window.
    pub p_z: f64,
    pub alice: SideParams,
    pub bob: SideParams,
    /// Phase-slice parameter of X windows.
    pub lambda: f64,
}

/// The free parameters of a symmetric run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceParams {
    pub mu1: f64,
    pub mu2: f64,
    pub mu_z: f64,
    pub p_z: f64,
    pub send_prob: f64,
    pub p1: f64,
    pub p2: f64,
    pub lambda: f64,
}

impl Default for SourceParams {
    fn default() -> Self {
        SourceParams {
            mu1: 0.1,
            mu2: 0.38,
            mu_z: 0.4,
            p_z: 0.75,
            send_prob: 0.25,
            p1: 0.3,
            p2: 0.2,
            lambda: 0.02,
        }
    }
}

impl ProtocolParams {
    pub fn symmetric(total_pulses: f64, distance_km: f64, s: &SourceParams) -> Self {
        let side = SideParams {
            mu1: s.mu1,
            mu2: s.mu2,
            mu_z: s.mu_z,
            send_prob: s.send_prob,
            p1: s.p1,
            p2: s.p2,
        };
        ProtocolParams {
            total_pulses,
            distance_km,
            p_z: s.p_z,
            alice: side,
            bob: side,
            lambda: s.lambda,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.alice == self.bob
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_pulses > 0.0) {
            return Err(Error::InvalidArgument(
                "total_pulses must be positive".into(),
            ));
        }
        if !(self.distance_km >= 0.0) {
            return Err(Error::InvalidArgument(
                "distance must be non-negative".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.p_z) {
            return Err(Error::InvalidArgument(format!(
                "p_z = {} outside [0, 1]",
                self.p_z
            )));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda = {} outside (0, 1]",
                self.lambda
            )));
        }
        self.alice.validate("alice")?;
        self.bob.validate("bob")
    }
}

/// Residual `|lhs/rhs - 1|` of the decoy/signal intensity ratio constraint
/// `μ_a1/μ_b1 = ε_a(1-ε_b)μ_az e^{-μ_az} / (ε_b(1-ε_a)μ_bz e^{-μ_bz})`.
pub fn security_constraint_residual(p: &ProtocolParams) -> f64 {
    let (a, b) = (&p.alice, &p.bob);
    if a.mu1 == b.mu1 && a.send_prob == b.send_prob && a.mu_z == b.mu_z {
        return 0.0;
    }
    let lhs = a.mu1 / b.mu1;
    let rhs = a.send_prob * (1.0 - b.send_prob) * a.mu_z * (-a.mu_z).exp()
        / (b.send_prob * (1.0 - a.send_prob) * b.mu_z * (-b.mu_z).exp());
    (lhs / rhs - 1.0).abs()
}

/// Pulses sent and windows heralded for one source pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceCount {
    pub sent: f64,
    pub heralded: f64,
}

impl SourceCount {
    pub fn rate(&self) -> f64 {
        if self.sent > 0.0 {
            self.heralded / self.sent
        } else {
            0.0
        }
    }
}

/// Decoy intensity index: vacuum `o`, weak `x`, strong `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Intensity {
    O,
    X,
    Y,
}

impl Intensity {
    pub const ALL: [Intensity; 3] = [Intensity::O, Intensity::X, Intensity::Y];

    fn idx(self) -> usize {
        self as usize
    }

    fn symbol(self) -> char {
        match self {
            Intensity::O => 'o',
            Intensity::X => 'x',
            Intensity::Y => 'y',
        }
    }
}

/// Survived bits and their bit-flip rate for one class of pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ParityClass {
    pub survived: f64,
    pub error_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedStats {
    /// `decoy[κ][ζ]` for Alice's intensity `κ` and Bob's `ζ`.
    pub decoy: [[SourceCount; 3]; 3],
    /// Pulse pairs in X windows (`N_X`).
    pub x_sent: f64,
    /// Error events in X windows (`m_X`).
    pub x_errors: f64,
    /// Z-window pulse pairs.
    pub z_sent: f64,
    /// Effective Z-window bits `n_t`.
    pub n_t: f64,
    /// Bob's bits with value 0 and 1.
    pub n0: f64,
    pub n1: f64,
    /// Z-basis bit-flip rate `E_Z`.
    pub e_z: f64,
    /// Standard TWCC survivors: one 0 and one 1, two 0s, two 1s.
    pub parity_classes: [ParityClass; 3],
    /// Survivors of odd-parity error rejection (`n_ot`, `E_OZ`).
    pub oper: ParityClass,
    /// Model expectation of untagged bits 0 and 1 (not available to the estimator in
    /// a real run; kept for validation).
    pub true_untagged: [f64; 2],
}

impl ObservedStats {
    pub fn source(&self, alice: Intensity, bob: Intensity) -> SourceCount {
        self.decoy[alice.idx()][bob.idx()]
    }

    pub fn counting_rate(&self, alice: Intensity, bob: Intensity) -> f64 {
        self.source(alice, bob).rate()
    }

    /// `T_X = m_X / N_X`.
    pub fn t_x(&self) -> f64 {
        if self.x_sent > 0.0 {
            self.x_errors / self.x_sent
        } else {
            0.0
        }
    }

    pub fn is_empty(&self) -> bool {
        self.decoy.iter().flatten().all(|s| s.sent == 0.0) && self.x_sent == 0.0
    }

    /// The same statistics restricted to a random fraction of the Z-window bits.
    pub fn scaled_z(&self, fraction: f64) -> ObservedStats {
        let mut s = self.clone();
        s.n_t *= fraction;
        s.n0 *= fraction;
        s.n1 *= fraction;
        for c in s.parity_classes.iter_mut() {
            c.survived *= fraction;
        }
        s.oper.survived *= fraction;
        s.true_untagged = [s.true_untagged[0] * fraction, s.true_untagged[1] * fraction];
        s
    }
}

/// Average of `f` over `[a, b]`: trapezoid for a full period, Simpson otherwise.
fn average(f: impl Fn(f64) -> f64, a: f64, b: f64, periodic: bool) -> f64 {
    let n = QUADRATURE_POINTS;
    let h = (b - a) / n as f64;
    let sum: f64 = if periodic {
        (0..n).map(|i| f(a + i as f64 * h)).sum::<f64>() * h
    } else {
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    };
    sum / (b - a)
}

struct Clicks {
    dark: f64,
}

impl Clicks {
    /// `(P[only the constructive port clicks], P[only the destructive port clicks])`.
    fn single_clicks(&self, x: f64, y: f64, cos_theta: f64) -> (f64, f64) {
        let cross = (x * y).sqrt() * cos_theta;
        let no_plus = (1.0 - self.dark) * (-(x + y) / 2.0 - cross).exp();
        let no_minus = (1.0 - self.dark) * (-(x + y) / 2.0 + cross).exp();
        ((1.0 - no_plus) * no_minus, (1.0 - no_minus) * no_plus)
    }

    fn heralded(&self, x: f64, y: f64, cos_theta: f64) -> f64 {
        let (p, m) = self.single_clicks(x, y, cos_theta);
        p + m
    }

    /// Heralding probability averaged over a uniformly random phase difference.
    fn heralded_randomised(&self, x: f64, y: f64) -> f64 {
        if x == 0.0 || y == 0.0 {
            return self.heralded(x, y, 0.0);
        }
        // Even and 2π-periodic in θ: average over [0, π].
        average(|t| self.heralded(x, y, t.cos()), 0.0, PI, true)
    }
}

/// Expected observed data of the run described by `device` and `protocol`.
pub fn simulate_observed(
    device: &DeviceParams,
    protocol: &ProtocolParams,
) -> Result<ObservedStats> {
    device.validate()?;
    protocol.validate()?;
    let residual = security_constraint_residual(protocol);
    if residual > SECURITY_CONSTRAINT_TOL {
        return Err(Error::SecurityConstraint { residual });
    }
    let eta = device.arm_transmittance(protocol.distance_km);
    let clicks = Clicks {
        dark: device.dark_count,
    };
    let (a, b) = (&protocol.alice, &protocol.bob);
    let n = protocol.total_pulses;
    let both_decoy = n * (1.0 - protocol.p_z) * (1.0 - protocol.p_z);

    let mut decoy = [[SourceCount::default(); 3]; 3];
    for ka in Intensity::ALL {
        for kb in Intensity::ALL {
            let sent = both_decoy * a.decoy_probs()[ka.idx()] * b.decoy_probs()[kb.idx()];
            let x = a.decoy_intensities()[ka.idx()] * eta;
            let y = b.decoy_intensities()[kb.idx()] * eta;
            decoy[ka.idx()][kb.idx()] = SourceCount {
                sent,
                heralded: sent * clicks.heralded_randomised(x, y),
            };
        }
    }

    // X windows: both weak decoys with 1 - |cos Δ| <= λ.
    let half_width = (1.0 - protocol.lambda).acos();
    let slice_fraction = 2.0 * half_width / PI;
    let xx_sent = decoy[1][1].sent;
    let x_sent = xx_sent * slice_fraction;
    let (x1, y1) = (a.mu1 * eta, b.mu1 * eta);
    let e_d = device.misalignment;
    // By symmetry the slice around π mirrors the one around 0.
    let error = |t: f64| {
        let (constructive, destructive) = clicks.single_clicks(x1, y1, t.cos());
        (1.0 - e_d) * destructive + e_d * constructive
    };
    let x_errors = x_sent * average(error, 0.0, half_width, false);

    // Z windows. Alice's bit is 1 when she sends, Bob's bit is 0 when he sends.
    let z_sent = n * protocol.p_z * protocol.p_z;
    let (ea, eb) = (a.send_prob, b.send_prob);
    let s_alice_only = clicks.heralded(a.mu_z * eta, 0.0, 0.0);
    let s_bob_only = clicks.heralded(0.0, b.mu_z * eta, 0.0);
    let s_both = clicks.heralded_randomised(a.mu_z * eta, b.mu_z * eta);
    let s_none = clicks.heralded(0.0, 0.0, 0.0);
    let q_a = ea * (1.0 - eb) * s_alice_only; // A=1, B=1
    let q_b = ea * eb * s_both; // A=1, B=0: error
    let q_c = (1.0 - ea) * eb * s_bob_only; // A=0, B=0
    let q_d = (1.0 - ea) * (1.0 - eb) * s_none; // A=0, B=1: error
    let q_sum = q_a + q_b + q_c + q_d;
    let n_t = z_sent * q_sum;
    let (fa, fb, fc, fd) = if q_sum > 0.0 {
        (q_a / q_sum, q_b / q_sum, q_c / q_sum, q_d / q_sum)
    } else {
        (0.0, 0.0, 0.0, 0.0)
    };
    let class = |good: f64, bad: f64, pairs: f64| ParityClass {
        survived: pairs * (good + bad),
        error_rate: if good + bad > 0.0 {
            bad / (good + bad)
        } else {
            0.0
        },
    };
    let pairs = n_t / 2.0;
    let mixed = class(2.0 * fa * fc, 2.0 * fb * fd, pairs);
    let zeros = class(fc * fc, fd * fd, pairs);
    let ones = class(fa * fa, fb * fb, pairs);

    // Single-photon yield with the other side vacuum.
    let s1 = |eta: f64| eta * (1.0 - device.dark_count) + (1.0 - eta) * s_none;
    let true_n10 = z_sent * ea * (1.0 - eb) * a.mu_z * (-a.mu_z).exp() * s1(eta);
    let true_n01 = z_sent * eb * (1.0 - ea) * b.mu_z * (-b.mu_z).exp() * s1(eta);

    Ok(ObservedStats {
        decoy,
        x_sent,
        x_errors,
        z_sent,
        n_t,
        n0: z_sent * (q_b + q_c),
        n1: z_sent * (q_a + q_d),
        e_z: if q_sum > 0.0 {
            (q_b + q_d) / q_sum
        } else {
            0.0
        },
        parity_classes: [mixed, zeros, ones],
        oper: mixed,
        true_untagged: [true_n01, true_n10],
    })
}

/// An observed quantity that the decoy analysis converts to a bound on its expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quantity {
    Counting(Intensity, Intensity),
    XError,
}

impl std::fmt::Display for Quantity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Quantity::Counting(a, b) => write!(f, "S_{}{}", a.symbol(), b.symbol()),
            Quantity::XError => f.write_str("T_X"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Lower,
    Upper,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::Lower => "lower",
            Direction::Upper => "upper",
        })
    }
}

/// The observed-to-expected conversions the decoy analysis is allowed to make.
///
/// Each planned `(quantity, direction)` may be taken exactly once; every take is one
/// Chernoff application and therefore one ledger entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversionPlan {
    pub xi: FailureProb,
    pending: BTreeSet<(Quantity, Direction)>,
    done: BTreeSet<(Quantity, Direction)>,
}

impl ConversionPlan {
    pub fn pending(&self) -> impl Iterator<Item = &(Quantity, Direction)> {
        self.pending.iter()
    }

    pub fn len(&self) -> usize {
        self.pending.len() + self.done.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Mark `(q, dir)` as converted.
    pub fn take(&mut self, q: Quantity, dir: Direction) -> Result<()> {
        if self.done.contains(&(q, dir)) {
            return Err(Error::DoubleConversion {
                quantity: q.to_string(),
                direction: dir.to_string(),
            });
        }
        if !self.pending.remove(&(q, dir)) {
            return Err(Error::UnplannedConversion(format!("{q} ({dir})")));
        }
        self.done.insert((q, dir));
        Ok(())
    }
}

/// Tag the statistics with the conversions the decoy estimator needs: lower bounds for
/// positively weighted counting rates, upper bounds for negatively weighted ones.
pub fn expected_to_observed_ledger(
    stats: ObservedStats,
    xi: FailureProb,
) -> (ObservedStats, ConversionPlan) {
    use Direction::*;
    use Intensity::*;
    let wanted = [
        (Quantity::Counting(O, X), Lower),
        (Quantity::Counting(O, Y), Upper),
        (Quantity::Counting(O, O), Upper),
        (Quantity::Counting(X, O), Lower),
        (Quantity::Counting(Y, O), Upper),
        (Quantity::Counting(O, O), Lower),
        (Quantity::XError, Upper),
    ];
    let pending = wanted
        .into_iter()
        .filter(|(q, _)| match q {
            Quantity::Counting(a, b) => stats.source(*a, *b).sent > 0.0,
            Quantity::XError => stats.x_sent > 0.0,
        })
        .collect();
    (
        stats,
        ConversionPlan {
            xi,
            pending,
            done: BTreeSet::new(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn protocol(distance: f64) -> ProtocolParams {
        ProtocolParams::symmetric(1e12, distance, &SourceParams::default())
    }

    #[test]
    fn vacuum_rates() {
        let mut dev = DeviceParams::default();
        let s = simulate_observed(&dev, &protocol(0.0)).unwrap();
        let soo = s.counting_rate(Intensity::O, Intensity::O);
        assert!((soo / (2e-8 * (1.0 - 1e-8)) - 1.0).abs() < 1e-6);
        dev.dark_count = 0.0;
        let s = simulate_observed(&dev, &protocol(0.0)).unwrap();
        assert_eq!(s.counting_rate(Intensity::O, Intensity::O), 0.0);
    }

    #[test]
    fn symmetric_rates_match() {
        let s = simulate_observed(&DeviceParams::default(), &protocol(200.0)).unwrap();
        let (ox, xo) = (
            s.counting_rate(Intensity::O, Intensity::X),
            s.counting_rate(Intensity::X, Intensity::O),
        );
        assert!((ox / xo - 1.0).abs() < 1e-12);
        let (oy, yo) = (
            s.counting_rate(Intensity::O, Intensity::Y),
            s.counting_rate(Intensity::Y, Intensity::O),
        );
        assert!((oy / yo - 1.0).abs() < 1e-12);
        assert!((s.n0 + s.n1 - s.n_t).abs() < 1e-6 * s.n_t);
    }

    #[test]
    fn rates_fall_with_distance() {
        let dev = DeviceParams::default();
        let mut prev: Option<ObservedStats> = None;
        for d in (0..=500).step_by(50) {
            let s = simulate_observed(&dev, &protocol(d as f64)).unwrap();
            if let Some(p) = prev {
                assert!(s.n_t < p.n_t);
                assert!(
                    s.counting_rate(Intensity::X, Intensity::X)
                        < p.counting_rate(Intensity::X, Intensity::X)
                );
                assert!(s.x_errors < p.x_errors);
            }
            prev = Some(s);
        }
    }

    #[test]
    fn x_error_rate_grows_with_misalignment() {
        let mut dev = DeviceParams::default();
        let mut last = 0.0;
        for e in [0.0, 0.01, 0.03, 0.1] {
            dev.misalignment = e;
            let t = simulate_observed(&dev, &protocol(100.0)).unwrap().t_x();
            assert!(t > last);
            last = t;
        }
    }

    #[test]
    fn quadrature_is_converged() {
        let dev = DeviceParams::default();
        let p = protocol(150.0);
        let eta = dev.arm_transmittance(150.0);
        let c = Clicks {
            dark: dev.dark_count,
        };
        let x = 0.4 * eta;
        let coarse = c.heralded_randomised(x, x);
        // Reference by a much finer trapezoid sum.
        let m = 1 << 16;
        let fine = (0..m)
            .map(|i| c.heralded(x, x, (PI * i as f64 / m as f64).cos()))
            .sum::<f64>()
            / m as f64;
        assert!((coarse / fine - 1.0).abs() < 1e-10);
        let s = simulate_observed(&dev, &p).unwrap();
        let half = (1.0 - p.lambda).acos();
        let err = |t: f64| {
            let (con, des) = c.single_clicks(0.1 * eta, 0.1 * eta, t.cos());
            (1.0 - dev.misalignment) * des + dev.misalignment * con
        };
        let fine = (0..m)
            .map(|i| err(half * (i as f64 + 0.5) / m as f64))
            .sum::<f64>()
            / m as f64;
        assert!((s.t_x() / fine - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constraint_residual() {
        let mut p = protocol(100.0);
        assert_eq!(security_constraint_residual(&p), 0.0);
        p.alice.mu1 *= 1.01;
        assert!(security_constraint_residual(&p) > SECURITY_CONSTRAINT_TOL);
        assert!(matches!(
            simulate_observed(&DeviceParams::default(), &p),
            Err(Error::SecurityConstraint { .. })
        ));
        // Solve the ratio for Bob's weak intensity with asymmetric send probabilities.
        let mut q = protocol(100.0);
        q.bob.send_prob = 0.2;
        let (a, b) = (q.alice, q.bob);
        q.bob.mu1 = a.mu1 * b.send_prob * (1.0 - a.send_prob) * b.mu_z * (-b.mu_z).exp()
            / (a.send_prob * (1.0 - b.send_prob) * a.mu_z * (-a.mu_z).exp());
        assert!(security_constraint_residual(&q) <= SECURITY_CONSTRAINT_TOL);
    }

    #[test]
    fn conversion_plan_rejects_repeats() {
        let s = simulate_observed(&DeviceParams::default(), &protocol(100.0)).unwrap();
        let (_, mut plan) = expected_to_observed_ledger(s, FailureProb::new(1e-10).unwrap());
        assert_eq!(plan.len(), 7);
        let q = Quantity::Counting(Intensity::O, Intensity::X);
        plan.take(q, Direction::Lower).unwrap();
        assert!(matches!(
            plan.take(q, Direction::Lower),
            Err(Error::DoubleConversion { .. })
        ));
        assert!(matches!(
            plan.take(q, Direction::Upper),
            Err(Error::UnplannedConversion(_))
        ));
    }

    #[test]
    fn empty_stats_give_empty_plan() {
        let s = simulate_observed(&DeviceParams::default(), &protocol(100.0)).unwrap();
        let mut empty = s.clone();
        empty.decoy = [[SourceCount::default(); 3]; 3];
        empty.x_sent = 0.0;
        assert!(empty.is_empty());
        let (_, plan) = expected_to_observed_ledger(empty, FailureProb::new(0.1).unwrap());
        assert!(plan.is_empty());
    }
}
