//! Riemann data on a 3-rarefaction curve, the self-similar fan and its smooth
//! Burgers approximation.
//!
//! Along a 3-rarefaction of the monatomic gas (`R = 2/3`, `e = θ`) the
//! invariants are `R1 = u₁ − sqrt(10θ)` and the entropy `S`, and the
//! characteristic speed is `λ₃ = u₁ + sqrt(10θ)/3`. Given `w = λ₃` the state is
//! recovered in closed form:
//!
//! ```text
//! θ = (9/160)(w − R1)²,   u₁ = (3w + R1)/4,   ρ = exp{(3/2)(ln(2πRθ) + 1 − S)}
//! ```

use crate::error::{Error, Result};
use crate::num::{gas_constant, loglog_slope, Real};
use crate::velocity::MacroState;

/// Planar Euler state `(ρ, u₁, θ)` with `u₂ = u₃ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerState<T: Real> {
    pub rho: T,
    pub u1: T,
    pub theta: T,
}

impl<T: Real> EulerState<T> {
    pub fn new(rho: T, u1: T, theta: T) -> Result<Self> {
        let s = Self { rho, u1, theta };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > T::zero()) || !self.rho.is_finite() {
            return Err(Error::domain(format!("density must be positive, got {}", self.rho)));
        }
        if !(self.theta > T::zero()) || !self.theta.is_finite() {
            return Err(Error::domain(format!("temperature must be positive, got {}", self.theta)));
        }
        if !self.u1.is_finite() {
            return Err(Error::domain("velocity is not finite"));
        }
        Ok(())
    }

    /// `p = Rρθ`.
    pub fn pressure(&self) -> T {
        gas_constant::<T>() * self.rho * self.theta
    }

    /// `S = −(2/3) ln ρ + ln(2πRθ) + 1`.
    pub fn entropy(&self) -> T {
        -T::lit(2.0) / T::lit(3.0) * self.rho.ln()
            + (T::lit(2.0) * T::PI() * gas_constant::<T>() * self.theta).ln()
            + T::one()
    }

    pub fn to_macro(&self) -> MacroState<T> {
        MacroState {
            rho: self.rho,
            u: [self.u1, T::zero(), T::zero()],
            theta: self.theta,
        }
    }

    pub fn from_macro(m: &MacroState<T>) -> Self {
        Self {
            rho: m.rho,
            u1: m.u[0],
            theta: m.theta,
        }
    }
}

/// `λ₃ = u₁ + sqrt(p_ρ(ρ, S)) = u₁ + sqrt(10θ)/3`.
pub fn lambda3<T: Real>(state: &EulerState<T>) -> Result<T> {
    state.validate()?;
    Ok(state.u1 + (T::lit(10.0) * state.theta).sqrt() / T::lit(3.0))
}

/// The two 3-Riemann invariants `(u₁ − sqrt(10θ), S)`.
pub fn riemann_invariants_3<T: Real>(state: &EulerState<T>) -> Result<(T, T)> {
    state.validate()?;
    Ok((state.u1 - (T::lit(10.0) * state.theta).sqrt(), state.entropy()))
}

/// State on the 3-rarefaction curve with invariants `(r1, s)` and speed `λ₃ = w`.
pub fn state_on_curve<T: Real>(r1: T, s: T, w: T) -> Result<EulerState<T>> {
    if !(w > r1) {
        return Err(Error::domain(format!("λ₃ = {w} does not exceed the invariant R1 = {r1}")));
    }
    let theta = T::lit(9.0) / T::lit(160.0) * (w - r1).powi(2);
    let u1 = (T::lit(3.0) * w + r1) / T::lit(4.0);
    let rho = (T::lit(1.5) * ((T::lit(2.0) * T::PI() * gas_constant::<T>() * theta).ln() + T::one() - s)).exp();
    EulerState::new(rho, u1, theta)
}

/// Far-field states of a planar Riemann problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndStates<T: Real> {
    pub minus: EulerState<T>,
    pub plus: EulerState<T>,
}

impl<T: Real> EndStates<T> {
    pub fn new(minus: EulerState<T>, plus: EulerState<T>) -> Result<Self> {
        minus.validate()?;
        plus.validate()?;
        Ok(Self { minus, plus })
    }

    /// Identical end states: no wave.
    pub fn constant(state: EulerState<T>) -> Result<Self> {
        Self::new(state, state)
    }

    /// Right state on the 3-rarefaction curve through `minus` with speed `w_plus`.
    pub fn build_3_rarefaction(minus: EulerState<T>, w_plus: T) -> Result<Self> {
        let (r1, s) = riemann_invariants_3(&minus)?;
        let w_minus = lambda3(&minus)?;
        if !(w_plus > w_minus) {
            return Err(Error::config(format!(
                "λ₃ must increase across a rarefaction ({w_minus} → {w_plus})"
            )));
        }
        let plus = state_on_curve(r1, s, w_plus)?;
        Self::new(minus, plus)
    }

    /// Right state on the 3-rarefaction curve at Euclidean jump `|(Δρ, Δu₁, Δθ)| = delta`.
    pub fn with_strength(minus: EulerState<T>, delta: T) -> Result<Self> {
        if delta == T::zero() {
            return Self::constant(minus);
        }
        if !(delta > T::zero()) {
            return Err(Error::config(format!("wave strength must be nonnegative, got {delta}")));
        }
        let w_minus = lambda3(&minus)?;
        let jump = |w: f64| -> Result<f64> { Ok(Self::build_3_rarefaction(minus, T::lit(w))?.strength().as_f64()) };
        let target = delta.as_f64();
        let (mut lo, mut hi) = (w_minus.as_f64(), w_minus.as_f64() + target.max(1e-3));
        while jump(hi)? < target {
            hi = lo + 2.0 * (hi - lo);
            if hi - lo > 1e6 {
                return Err(Error::RootFind(format!("no rarefaction with strength {target}")));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if jump(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * hi.abs().max(1.0) {
                break;
            }
        }
        Self::build_3_rarefaction(minus, T::lit(0.5 * (lo + hi)))
    }

    /// `|(ρ₊−ρ₋, u₊−u₋, θ₊−θ₋)|`.
    pub fn strength(&self) -> T {
        let d = [
            self.plus.rho - self.minus.rho,
            self.plus.u1 - self.minus.u1,
            self.plus.theta - self.minus.theta,
        ];
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    pub fn w_minus(&self) -> Result<T> {
        lambda3(&self.minus)
    }

    pub fn w_plus(&self) -> Result<T> {
        lambda3(&self.plus)
    }

    pub fn is_constant(&self) -> bool {
        self.minus == self.plus
    }

    /// `λ₃(−) < λ₃(+)` and the invariants agree within `tol`.
    pub fn check_rarefaction(&self, tol: f64) -> Result<()> {
        let (wm, wp) = (self.w_minus()?, self.w_plus()?);
        if !(wm < wp) {
            return Err(Error::config(format!(
                "λ₃(−) = {wm} ≥ λ₃(+) = {wp}: shock and contact branches are not supported"
            )));
        }
        let (r1m, sm) = riemann_invariants_3(&self.minus)?;
        let (r1p, sp) = riemann_invariants_3(&self.plus)?;
        let dr = (r1m - r1p).abs().as_f64();
        let ds = (sm - sp).abs().as_f64();
        if dr > tol || ds > tol {
            return Err(Error::config(format!(
                "end states are not on one 3-rarefaction curve (ΔR1 = {dr:e}, ΔS = {ds:e})"
            )));
        }
        Ok(())
    }
}

/// Self-similar Burgers fan `w^r(x₁/t)`.
pub fn exact_burgers_w<T: Real>(w_minus: T, w_plus: T, t: T, x1: T) -> Result<T> {
    if !(w_minus < w_plus) {
        return Err(Error::config(format!(
            "w₋ = {w_minus} ≥ w₊ = {w_plus}: only expansive data are supported"
        )));
    }
    if !(t > T::zero()) {
        return Err(Error::domain(format!("the fan needs t > 0, got {t}")));
    }
    Ok(fan(w_minus, w_plus, x1 / t))
}

fn fan<T: Real>(wm: T, wp: T, xi: T) -> T {
    xi.max(wm).min(wp)
}

/// `w̄₀(x₁) = (w₊+w₋)/2 + (w₊−w₋)/2 · (2/π) arctan x₁`.
pub fn smoothed_w0<T: Real>(w_minus: T, w_plus: T, x1: T) -> Result<T> {
    Ok(SmoothedBurgers::new(w_minus, w_plus)?.w0(x1))
}

/// Smooth Burgers solution `w̄(t, x₁) = w̄₀(x₀)` with `x₁ = x₀ + w̄₀(x₀) t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothedBurgers<T: Real> {
    w_minus: T,
    w_plus: T,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl<T: Real> SmoothedBurgers<T> {
    /// `k₀` in `w̄₀`.
    pub fn k0() -> T {
        T::lit(2.0) / T::PI()
    }

    pub fn new(w_minus: T, w_plus: T) -> Result<Self> {
        if !(w_minus < w_plus) {
            return Err(Error::config(format!(
                "w₋ = {w_minus} ≥ w₊ = {w_plus}: only expansive data are supported"
            )));
        }
        Ok(Self::new_unchecked(w_minus, w_plus))
    }

    /// Admits `w₋ = w₊` (a constant solution).
    pub fn new_unchecked(w_minus: T, w_plus: T) -> Self {
        Self {
            w_minus,
            w_plus,
            tolerance: 1e-12,
            max_iterations: 200,
        }
    }

    pub fn w_minus(&self) -> T {
        self.w_minus
    }

    pub fn w_plus(&self) -> T {
        self.w_plus
    }

    fn half_jump(&self) -> T {
        (self.w_plus - self.w_minus) / T::lit(2.0)
    }

    pub fn w0(&self, x: T) -> T {
        (self.w_plus + self.w_minus) / T::lit(2.0) + self.half_jump() * Self::k0() * x.atan()
    }

    pub fn w0_x(&self, x: T) -> T {
        self.half_jump() * Self::k0() / (T::one() + x * x)
    }

    pub fn w0_xx(&self, x: T) -> T {
        let d = T::one() + x * x;
        -T::lit(2.0) * self.half_jump() * Self::k0() * x / (d * d)
    }

    /// Foot `x₀` of the characteristic through `(t, x₁)`.
    pub fn foot(&self, t: T, x1: T) -> Result<T> {
        if !(t >= T::zero()) {
            return Err(Error::domain(format!("time must be nonnegative, got {t}")));
        }
        if t == T::zero() {
            return Ok(x1);
        }
        let g = |x0: T| x0 + self.w0(x0) * t - x1;
        let (mut lo, mut hi) = (x1 - self.w_plus * t, x1 - self.w_minus * t);
        let tol = T::lit(self.tolerance).max(T::epsilon() * T::lit(8.0) * (x1.abs() + T::one()));
        if hi - lo <= tol {
            return Ok(T::lit(0.5) * (lo + hi));
        }
        let mut x = T::lit(0.5) * (lo + hi);
        let mut last_step = hi - lo;
        for _ in 0..self.max_iterations {
            let gx = g(x);
            if gx == T::zero() {
                return Ok(x);
            }
            if gx > T::zero() {
                hi = x;
            } else {
                lo = x;
            }
            let newton = x - gx / (T::one() + self.w0_x(x) * t);
            // Newton only while it stays inside the bracket and at least halves the step
            let next = if newton > lo && newton < hi && (newton - x).abs() <= T::lit(0.5) * last_step {
                newton
            } else {
                T::lit(0.5) * (lo + hi)
            };
            last_step = (next - x).abs();
            if (next - x).abs() <= tol || hi - lo <= tol {
                return Ok(next);
            }
            x = next;
        }
        Err(Error::RootFind(format!(
            "characteristic foot at (t = {t}, x₁ = {x1}) not found; bracket [{lo}, {hi}]"
        )))
    }

    pub fn w(&self, t: T, x1: T) -> Result<T> {
        Ok(self.w0(self.foot(t, x1)?))
    }

    /// `∂ₓw̄ = w̄₀′(x₀) / (1 + w̄₀′(x₀) t)`.
    pub fn w_x(&self, t: T, x1: T) -> Result<T> {
        let x0 = self.foot(t, x1)?;
        let d = self.w0_x(x0);
        Ok(d / (T::one() + d * t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveKind {
    /// `w^r(x₁/t)`.
    ExactSelfSimilar,
    /// `w̄(t+1, x₁)`.
    Smoothed,
}

/// 3-rarefaction profile `(t, x₁) ↦ (ρ, u₁, θ)` with constant invariants.
#[derive(Debug, Clone, Copy)]
pub struct WaveProfile<T: Real> {
    kind: WaveKind,
    ends: EndStates<T>,
    burgers: SmoothedBurgers<T>,
    r1: T,
    s: T,
}

impl<T: Real> WaveProfile<T> {
    /// Checks that the end states lie on one 3-rarefaction curve; equal end
    /// states give the constant profile.
    pub fn new(kind: WaveKind, ends: EndStates<T>) -> Result<Self> {
        let (r1, s) = riemann_invariants_3(&ends.plus)?;
        let (wm, wp) = (ends.w_minus()?, ends.w_plus()?);
        if !ends.is_constant() {
            ends.check_rarefaction(1e-8)?;
        }
        Ok(Self {
            kind,
            ends,
            burgers: SmoothedBurgers::new_unchecked(wm, wp),
            r1,
            s,
        })
    }

    pub fn smoothed(ends: EndStates<T>) -> Result<Self> {
        Self::new(WaveKind::Smoothed, ends)
    }

    pub fn exact(ends: EndStates<T>) -> Result<Self> {
        Self::new(WaveKind::ExactSelfSimilar, ends)
    }

    pub fn kind(&self) -> WaveKind {
        self.kind
    }

    pub fn ends(&self) -> &EndStates<T> {
        &self.ends
    }

    pub fn burgers(&self) -> &SmoothedBurgers<T> {
        &self.burgers
    }

    /// The common invariants `(R1, S)`.
    pub fn invariants(&self) -> (T, T) {
        (self.r1, self.s)
    }

    /// `λ₃` of the profile at `(t, x₁)`.
    pub fn w(&self, t: T, x1: T) -> Result<T> {
        let (wm, wp) = (self.burgers.w_minus, self.burgers.w_plus);
        if wm == wp {
            return Ok(wm);
        }
        match self.kind {
            WaveKind::Smoothed => self.burgers.w(t + T::one(), x1),
            WaveKind::ExactSelfSimilar => exact_burgers_w(wm, wp, t, x1),
        }
    }

    pub fn state_from_w(&self, w: T) -> Result<EulerState<T>> {
        if self.ends.is_constant() {
            return Ok(self.ends.minus);
        }
        state_on_curve(self.r1, self.s, w)
    }

    pub fn evaluate(&self, t: T, x1: T) -> Result<EulerState<T>> {
        self.state_from_w(self.w(t, x1)?)
    }

    /// `∂_{x₁}(ρ, u₁, θ)` of the profile at `(t, x₁)`.
    pub fn gradient(&self, t: T, x1: T) -> Result<[T; 3]> {
        let (wm, wp) = (self.burgers.w_minus, self.burgers.w_plus);
        if self.ends.is_constant() || wm == wp {
            return Ok([T::zero(); 3]);
        }
        let wx = match self.kind {
            WaveKind::Smoothed => self.burgers.w_x(t + T::one(), x1)?,
            WaveKind::ExactSelfSimilar => {
                if t > T::zero() && x1 > wm * t && x1 < wp * t {
                    T::one() / t
                } else {
                    T::zero()
                }
            }
        };
        let (d, _) = self.curve_derivatives(self.w(t, x1)?)?;
        Ok(d.map(|x| x * wx))
    }

    /// Ideal rarefaction `(ρ^r, u^r, θ^r)(x₁/(1+t))` used as the asymptotic target.
    pub fn fan_state(&self, t: T, x1: T) -> Result<EulerState<T>> {
        let (wm, wp) = (self.burgers.w_minus, self.burgers.w_plus);
        self.state_from_w(fan(wm, wp, x1 / (T::one() + t)))
    }

    /// `d(ρ, u₁, θ)/dw` and `d²(ρ, u₁, θ)/dw²` along the curve.
    fn curve_derivatives(&self, w: T) -> Result<([T; 3], [T; 3])> {
        if self.ends.is_constant() {
            return Ok(([T::zero(); 3], [T::zero(); 3]));
        }
        let st = state_on_curve(self.r1, self.s, w)?;
        let th = st.theta;
        let dth = T::lit(9.0) / T::lit(80.0) * (w - self.r1);
        let ddth = T::lit(9.0) / T::lit(80.0);
        let du = T::lit(0.75);
        let drho = T::lit(1.5) * st.rho * dth / th;
        let ddrho = T::lit(1.5) * (drho * dth / th + st.rho * ddth / th - st.rho * dth * dth / (th * th));
        Ok(([drho, du, dth], [ddrho, T::zero(), ddth]))
    }
}

/// Closed-form smooth approximate rarefaction at `(t, x₁)`.
pub fn approx_rarefaction<T: Real>(t: T, x1: T, ends: &EndStates<T>) -> Result<EulerState<T>> {
    WaveProfile::smoothed(*ends)?.evaluate(t, x1)
}

/// Maximum and root-mean-square of the residual of each balance law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualNorms<T: Real> {
    /// Mass, `x₁`-momentum, transverse momentum, internal energy.
    pub max: [T; 4],
    pub rms: [T; 4],
}

impl<T: Real> ResidualNorms<T> {
    pub fn overall_max(&self) -> T {
        self.max.iter().fold(T::zero(), |a, b| a.max(*b))
    }
}

fn conserved<T: Real>(s: &EulerState<T>) -> [T; 4] {
    [s.rho, s.rho * s.u1, T::zero(), s.rho * s.theta]
}

fn flux<T: Real>(s: &EulerState<T>) -> [T; 4] {
    [
        s.rho * s.u1,
        s.rho * s.u1 * s.u1 + s.pressure(),
        T::zero(),
        s.rho * s.u1 * s.theta,
    ]
}

/// Centered-difference residuals of the planar Euler system
///
/// ```text
/// ρ_t + (ρu₁)_x = 0,  (ρu₁)_t + (ρu₁² + p)_x = 0,
/// (ρu_i)_t + (ρu₁u_i)_x = 0,  (ρθ)_t + (ρu₁θ)_x + p u₁_x = 0
/// ```
///
/// at every point of `ts × xs` with step `h` in both directions.
pub fn euler_residual<T: Real>(profile: &WaveProfile<T>, ts: &[T], xs: &[T], h: T) -> Result<ResidualNorms<T>> {
    let two_h = T::lit(2.0) * h;
    let mut max = [T::zero(); 4];
    let mut sq = [T::zero(); 4];
    for &t in ts {
        for &x in xs {
            let c = profile.evaluate(t, x)?;
            let (tp, tm) = (profile.evaluate(t + h, x)?, profile.evaluate(t - h, x)?);
            let (xp, xm) = (profile.evaluate(t, x + h)?, profile.evaluate(t, x - h)?);
            let (up, um) = (conserved(&tp), conserved(&tm));
            let (fp, fm) = (flux(&xp), flux(&xm));
            for k in 0..4 {
                let mut r = (up[k] - um[k]) / two_h + (fp[k] - fm[k]) / two_h;
                if k == 3 {
                    r = r + c.pressure() * (xp.u1 - xm.u1) / two_h;
                }
                max[k] = max[k].max(r.abs());
                sq[k] = sq[k] + r * r;
            }
        }
    }
    let n = T::from_usize_lossy((ts.len() * xs.len()).max(1));
    Ok(ResidualNorms {
        max,
        rms: sq.map(|s| (s / n).sqrt()),
    })
}

/// Maximum and root-mean-square of the centered residual of `w_t + w w_x`.
pub fn burgers_residual<T: Real>(burgers: &SmoothedBurgers<T>, ts: &[T], xs: &[T], h: T) -> Result<(T, T)> {
    let two_h = T::lit(2.0) * h;
    let mut max = T::zero();
    let mut sq = T::zero();
    for &t in ts {
        for &x in xs {
            let wt = (burgers.w(t + h, x)? - burgers.w(t - h, x)?) / two_h;
            let wx = (burgers.w(t, x + h)? - burgers.w(t, x - h)?) / two_h;
            let r = wt + burgers.w(t, x)? * wx;
            max = max.max(r.abs());
            sq = sq + r * r;
        }
    }
    let n = T::from_usize_lossy((ts.len() * xs.len()).max(1));
    Ok((max, (sq / n).sqrt()))
}

/// Norms of one time sample in a decay report. Infinite `q` stands for `L^∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRow {
    pub t: f64,
    pub q: f64,
    pub derivative: f64,
    pub second_derivative: f64,
    /// Distance to the fan `x₁/(1+t)`; infinite for `q ≤ 1` since the arctan
    /// tails are not integrable.
    pub distance: f64,
}

/// Least-squares log-log slopes against `1+t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecaySlopes {
    pub q: f64,
    pub derivative: f64,
    pub second_derivative: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    pub slopes: Vec<DecaySlopes>,
}

impl DecayReport {
    pub fn slopes_for(&self, q: f64) -> Option<&DecaySlopes> {
        self.slopes.iter().find(|s| s.q == q)
    }

    pub fn rows_for(&self, q: f64) -> impl Iterator<Item = &DecayRow> {
        self.rows.iter().filter(move |r| r.q == q)
    }
}

/// Nodes of the `x₀ = tan s` parametrization used by the decay quadrature.
const DECAY_NODES: usize = 40_000;

/// Decay of the Burgers wave `w̄(t)` itself: `‖∂ₓw̄‖`, `‖∂ₓ²w̄‖` and
/// `‖w̄(t) − w^r(·/(1+t))‖` in `L^q`.
pub fn burgers_decay_report<T: Real>(burgers: &SmoothedBurgers<T>, times: &[f64], qs: &[f64]) -> Result<DecayReport> {
    let b = SmoothedBurgers::<f64>::new(burgers.w_minus.as_f64(), burgers.w_plus.as_f64())?;
    decay_common(&b, times, qs, 0.0, |w, wx, wxx| Ok((wx.abs(), wxx.abs(), w)), |w, fan| Ok((w - fan).abs()))
}

/// Decay of `∂ₓ(ρ̄, ū₁, θ̄)(t)` (Euclidean norm of the vector) for the smoothed
/// profile, together with second derivatives and the distance to the ideal
/// rarefaction, all against `1+t`.
pub fn decay_report<T: Real>(profile: &WaveProfile<T>, times: &[f64], qs: &[f64]) -> Result<DecayReport> {
    if profile.kind != WaveKind::Smoothed {
        return Err(Error::config("decay report needs the smoothed profile"));
    }
    if profile.ends.is_constant() {
        return Err(Error::config("decay report needs distinct end states"));
    }
    let b = SmoothedBurgers::<f64>::new(profile.burgers.w_minus.as_f64(), profile.burgers.w_plus.as_f64())?;
    let p = WaveProfile::<f64> {
        kind: WaveKind::Smoothed,
        ends: EndStates {
            minus: EulerState::new(profile.ends.minus.rho.as_f64(), profile.ends.minus.u1.as_f64(), profile.ends.minus.theta.as_f64())?,
            plus: EulerState::new(profile.ends.plus.rho.as_f64(), profile.ends.plus.u1.as_f64(), profile.ends.plus.theta.as_f64())?,
        },
        burgers: b,
        r1: profile.r1.as_f64(),
        s: profile.s.as_f64(),
    };
    let norm3 = |v: [f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let pointwise = |w: f64, wx: f64, wxx: f64| -> Result<(f64, f64, f64)> {
        let (d1, d2) = p.curve_derivatives(w)?;
        let first = norm3(d1.map(|d| d * wx));
        let second = norm3(std::array::from_fn(|k| d2[k] * wx * wx + d1[k] * wxx));
        Ok((first, second, w))
    };
    let distance = |w: f64, fan: f64| -> Result<f64> {
        let a = p.state_from_w(w)?;
        let b = p.state_from_w(fan)?;
        Ok(norm3([a.rho - b.rho, a.u1 - b.u1, a.theta - b.theta]))
    };
    // profile at time t uses w̄(t+1)
    decay_common(&b, times, qs, 1.0, pointwise, move |w, fan| distance(w, fan))
}

fn decay_common(
    b: &SmoothedBurgers<f64>,
    times: &[f64],
    qs: &[f64],
    shift: f64,
    pointwise: impl Fn(f64, f64, f64) -> Result<(f64, f64, f64)>,
    distance: impl Fn(f64, f64) -> Result<f64>,
) -> Result<DecayReport> {
    if times.len() < 4 {
        return Err(Error::config(format!("decay report needs at least 4 times, got {}", times.len())));
    }
    if times.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::domain("decay times must be nonnegative"));
    }
    if qs.iter().any(|q| !(*q >= 1.0)) {
        return Err(Error::domain("exponents q must satisfy q ≥ 1"));
    }
    let (wm, wp) = (b.w_minus, b.w_plus);
    let ds = std::f64::consts::PI / DECAY_NODES as f64;
    let mut rows = Vec::new();
    for &t in times {
        let tau = t + shift;
        let mut acc = vec![[0.0f64; 3]; qs.len()];
        for i in 0..DECAY_NODES {
            let s = -std::f64::consts::FRAC_PI_2 + (i as f64 + 0.5) * ds;
            let x0 = s.tan();
            let d0 = b.w0_x(x0);
            let jac = 1.0 + d0 * tau;
            let w = b.w0(x0);
            let wx = d0 / jac;
            let wxx = b.w0_xx(x0) / jac.powi(3);
            let x1 = x0 + w * tau;
            let (first, second, w_val) = pointwise(w, wx, wxx)?;
            let dist = distance(w_val, fan(wm, wp, x1 / (1.0 + t)))?;
            // dx₁ = jac · (1 + x₀²) ds
            let measure = jac * (1.0 + x0 * x0) * ds;
            for (k, &q) in qs.iter().enumerate() {
                let vals = [first, second, dist];
                for m in 0..3 {
                    if q.is_infinite() {
                        acc[k][m] = acc[k][m].max(vals[m]);
                    } else {
                        acc[k][m] += vals[m].powf(q) * measure;
                    }
                }
            }
        }
        for (k, &q) in qs.iter().enumerate() {
            let norm = |m: usize| if q.is_infinite() { acc[k][m] } else { acc[k][m].powf(1.0 / q) };
            rows.push(DecayRow {
                t,
                q,
                derivative: norm(0),
                second_derivative: norm(1),
                distance: if q > 1.0 { norm(2) } else { f64::INFINITY },
            });
        }
    }
    let slopes = qs
        .iter()
        .map(|&q| {
            let sel: Vec<&DecayRow> = rows.iter().filter(|r| r.q == q).collect();
            let xs: Vec<f64> = sel.iter().map(|r| 1.0 + r.t).collect();
            let fit = |f: &dyn Fn(&DecayRow) -> f64| {
                let ys: Vec<f64> = sel.iter().map(|r| f(r)).collect();
                if ys.iter().all(|y| y.is_finite()) {
                    loglog_slope(&xs, &ys)
                } else {
                    f64::NAN
                }
            };
            DecaySlopes {
                q,
                derivative: fit(&|r| r.derivative),
                second_derivative: fit(&|r| r.second_derivative),
                distance: fit(&|r| r.distance),
            }
        })
        .collect();
    Ok(DecayReport { rows, slopes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        (1..n).fold(f(a) + f(b), |s, i| s + f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }) * h / 3.0
    }

    /// `p(ρ, S) = kρ^{5/3}e^S` written through `θ(ρ, S)` from the entropy formula.
    fn pressure_at_fixed_entropy(rho: f64, s: f64) -> f64 {
        let r = 2.0 / 3.0;
        let theta = ((s - 1.0 + 2.0 / 3.0 * rho.ln()).exp()) / (2.0 * std::f64::consts::PI * r);
        r * rho * theta
    }

    fn sound_speed_oracle(st: &EulerState<f64>) -> f64 {
        let s = st.entropy();
        let h = 1e-5 * st.rho;
        let dp = (pressure_at_fixed_entropy(st.rho + h, s) - pressure_at_fixed_entropy(st.rho - h, s)) / (2.0 * h);
        dp.sqrt()
    }

    #[test]
    fn lambda3_matches_numeric_sound_speed() {
        for (rho, u1) in [(1.0, 0.0), (2.0, 0.0), (1.0, 1.0)] {
            let st = EulerState::new(rho, u1, 1.5).unwrap();
            let got = lambda3(&st).unwrap();
            assert!((got - (u1 + sound_speed_oracle(&st))).abs() < 1e-9);
            assert!((got - (u1 + 15f64.sqrt() / 3.0)).abs() < 1e-15);
        }
        let bad = EulerState {
            rho: 1.0,
            u1: 0.0,
            theta: -1.0,
        };
        assert!(matches!(lambda3(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn riemann_invariants_match_quadrature() {
        let st = EulerState::new(1.0, 0.0, 1.5).unwrap();
        let s = st.entropy();
        // ∫₀^ρ sqrt(p_z(z,S))/z dz, substituting z = y³ to remove the endpoint singularity
        let c = |z: f64| {
            let h = 1e-6 * z;
            ((pressure_at_fixed_entropy(z + h, s) - pressure_at_fixed_entropy(z - h, s)) / (2.0 * h)).sqrt() / z
        };
        let integral = simpson(|y| 3.0 * y * y * c(y * y * y), 1e-8, st.rho.cbrt(), 2000);
        let (r1, r2) = riemann_invariants_3(&st).unwrap();
        assert!((r1 - (st.u1 - integral)).abs() < 1e-6, "{r1} vs {}", -integral);
        assert!((r1 + 15f64.sqrt()).abs() < 1e-12);
        assert!((r2 - ((2.0 * std::f64::consts::PI).ln() + 1.0)).abs() < 1e-12);
        let shifted = EulerState::new(1.0, 1.0, 1.5).unwrap();
        let (r1s, r2s) = riemann_invariants_3(&shifted).unwrap();
        assert!((r1s - (1.0 - 15f64.sqrt())).abs() < 1e-12);
        assert_eq!(r2s, r2);
    }

    #[test]
    fn rarefaction_curve_shares_invariants() {
        let minus = EulerState::<f64>::new(1.0, 0.0, 1.5).unwrap();
        let ends = EndStates::build_3_rarefaction(minus, lambda3(&minus).unwrap() + 0.3).unwrap();
        let a = riemann_invariants_3(&ends.minus).unwrap();
        let b = riemann_invariants_3(&ends.plus).unwrap();
        assert!((a.0 - b.0).abs() < 1e-10 && (a.1 - b.1).abs() < 1e-10);
        assert!(ends.check_rarefaction(1e-8).is_ok());
        // a 3-rarefaction expands: everything increases to the right
        assert!(ends.plus.rho > minus.rho && ends.plus.u1 > minus.u1 && ends.plus.theta > minus.theta);
        let sized = EndStates::with_strength(minus, 0.2).unwrap();
        assert!((sized.strength() - 0.2).abs() < 1e-12);
        let reversed = EndStates::new(ends.plus, ends.minus).unwrap();
        assert!(matches!(reversed.check_rarefaction(1e-8), Err(Error::Config(_))));
        let off = EndStates::new(minus, EulerState::new(1.3, 0.5, 1.5).unwrap()).unwrap();
        assert!(matches!(WaveProfile::smoothed(off), Err(Error::Config(_))));
    }

    #[test]
    fn burgers_fan_branches() {
        assert_eq!(exact_burgers_w(0.0, 1.0, 2.0, 1.0).unwrap(), 0.5);
        assert_eq!(exact_burgers_w(0.0, 1.0, 1.0, -5.0).unwrap(), 0.0);
        assert_eq!(exact_burgers_w(0.0, 1.0, 1.0, 9.0).unwrap(), 1.0);
        assert!(matches!(exact_burgers_w(1.0, 1.0, 1.0, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn smoothed_initial_data() {
        assert!((smoothed_w0(0.2f64, 1.0, 0.0).unwrap() - 0.6).abs() < 1e-15);
        let far = smoothed_w0(0.0f64, 1.0, 1e12).unwrap();
        assert!((far - 1.0).abs() < 1e-11);
        let oracle = 0.5 + 0.5 * SmoothedBurgers::<f64>::k0() * simpson(|y| 1.0 / (1.0 + y * y), 0.0, 1.0, 200);
        assert!((smoothed_w0(0.0f64, 1.0, 1.0).unwrap() - 0.75).abs() < 1e-15);
        assert!((oracle - 0.75).abs() < 1e-12);
        // k₀ ∫₀^∞ (1+y²)⁻¹ dy = 1 via y = tan s
        let total = SmoothedBurgers::<f64>::k0() * simpson(|_| 1.0, 0.0, std::f64::consts::FRAC_PI_2, 4);
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn smoothed_solution_follows_characteristics() {
        let b = SmoothedBurgers::<f64>::new(0.5, 1.5).unwrap();
        assert_eq!(b.w(0.0, 0.7).unwrap(), b.w0(0.7));
        assert!((b.w(3.0, b.w0(0.0) * 3.0).unwrap() - 1.0).abs() < 1e-12);
        for &(t, x) in &[(0.5, -3.0), (10.0, 4.0), (1000.0, 800.0), (1e5, -1e4)] {
            let x0 = b.foot(t, x).unwrap();
            assert!((x0 + b.w0(x0) * t - x).abs() < 1e-9 * (1.0 + x.abs()));
            let w = b.w(t, x).unwrap();
            assert!(w > 0.5 && w < 1.5);
            assert!(b.w_x(t, x).unwrap() > 0.0);
            let h = 1e-4 * (1.0 + t).sqrt();
            let fd = (b.w(t, x + h).unwrap() - b.w(t, x - h).unwrap()) / (2.0 * h);
            assert!((fd - b.w_x(t, x).unwrap()).abs() < 1e-6 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn burgers_residual_is_second_order() {
        let b = SmoothedBurgers::<f64>::new(0.0, 1.0).unwrap();
        let ts: Vec<f64> = (0..10).map(|i| 0.5 + 0.25 * i as f64).collect();
        let xs: Vec<f64> = (0..20).map(|i| -3.0 + 0.3 * i as f64).collect();
        let (r1, _) = burgers_residual(&b, &ts, &xs, 0.02).unwrap();
        let (r2, _) = burgers_residual(&b, &ts, &xs, 0.01).unwrap();
        let ratio = r1 / r2;
        assert!(ratio > 3.2 && ratio < 4.8, "{ratio}");
    }

    /// Solves the defining relations by Newton on `(ρ, u₁, θ)` instead of the closed form.
    fn rootfind_state(r1: f64, s: f64, w: f64, guess: EulerState<f64>) -> EulerState<f64> {
        let mut x = [guess.rho, guess.u1, guess.theta];
        let res = |x: [f64; 3]| -> [f64; 3] {
            let st = EulerState {
                rho: x[0],
                u1: x[1],
                theta: x[2],
            };
            [
                st.u1 + (10.0 * st.theta).sqrt() / 3.0 - w,
                st.u1 - (10.0 * st.theta).sqrt() - r1,
                st.entropy() - s,
            ]
        };
        for _ in 0..50 {
            let f = res(x);
            let mut jac = [[0.0; 3]; 3];
            for c in 0..3 {
                let mut xp = x;
                let h = 1e-7 * x[c].abs().max(1.0);
                xp[c] += h;
                let fp = res(xp);
                for r in 0..3 {
                    jac[r][c] = (fp[r] - f[r]) / h;
                }
            }
            // Cramer's rule
            let det = |m: [[f64; 3]; 3]| {
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            };
            let d = det(jac);
            let mut step = [0.0; 3];
            for c in 0..3 {
                let mut m = jac;
                for r in 0..3 {
                    m[r][c] = -f[r];
                }
                step[c] = det(m) / d;
            }
            for c in 0..3 {
                x[c] += step[c];
            }
        }
        EulerState {
            rho: x[0],
            u1: x[1],
            theta: x[2],
        }
    }

    #[test]
    fn closed_form_inversion_matches_root_finding() {
        let minus = EulerState::new(1.0, 0.0, 1.5).unwrap();
        let ends = EndStates::with_strength(minus, 0.2).unwrap();
        let profile = WaveProfile::smoothed(ends).unwrap();
        let (r1, s) = profile.invariants();
        for &(t, x) in &[(0.0, -2.0), (1.0, 0.5), (20.0, 30.0), (200.0, 250.0)] {
            let st = approx_rarefaction(t, x, &ends).unwrap();
            let oracle = rootfind_state(r1, s, profile.w(t, x).unwrap(), minus);
            assert!((st.rho - oracle.rho).abs() < 1e-9);
            assert!((st.u1 - oracle.u1).abs() < 1e-9);
            assert!((st.theta - oracle.theta).abs() < 1e-9);
            let (a, b) = riemann_invariants_3(&st).unwrap();
            assert!((a - r1).abs() < 1e-10 && (b - s).abs() < 1e-10);
            let w = profile.burgers().w(t + 1.0, x).unwrap();
            assert!((lambda3(&st).unwrap() - w).abs() < 1e-10);
        }
        let far_left = approx_rarefaction(10.0, -1e12, &ends).unwrap();
        let far_right = approx_rarefaction(10.0, 1e12, &ends).unwrap();
        assert!((far_left.rho - ends.minus.rho).abs() < 1e-8 && (far_left.theta - ends.minus.theta).abs() < 1e-8);
        assert!((far_right.rho - ends.plus.rho).abs() < 1e-8 && (far_right.u1 - ends.plus.u1).abs() < 1e-8);
    }

    #[test]
    fn euler_residual_converges_at_second_order() {
        let minus = EulerState::new(1.0, 0.0, 1.5).unwrap();
        let ends = EndStates::with_strength(minus, 0.5).unwrap();
        let profile = WaveProfile::smoothed(ends).unwrap();
        let ts: Vec<f64> = (0..6).map(|i| 0.5 + i as f64).collect();
        let xs: Vec<f64> = (0..16).map(|i| -4.0 + 0.6 * i as f64).collect();
        let a = euler_residual(&profile, &ts, &xs, 0.02).unwrap();
        let b = euler_residual(&profile, &ts, &xs, 0.01).unwrap();
        let ratio = a.overall_max() / b.overall_max();
        assert!(ratio > 3.2 && ratio < 4.8, "{ratio}");
        assert_eq!(a.max[2], 0.0);

        let flat = WaveProfile::smoothed(EndStates::constant(minus).unwrap()).unwrap();
        assert_eq!(euler_residual(&flat, &ts, &xs, 0.01).unwrap().overall_max(), 0.0);

        // inside the fan, away from its edges
        let exact = WaveProfile::exact(ends).unwrap();
        let (wm, wp) = (ends.w_minus().unwrap(), ends.w_plus().unwrap());
        let ts = [2.0, 3.0, 4.0];
        let xs: Vec<f64> = ts.iter().map(|t| t * (0.5 * (wm + wp))).collect();
        let a = euler_residual(&exact, &ts, &xs, 0.02).unwrap().overall_max();
        let b = euler_residual(&exact, &ts, &xs, 0.01).unwrap().overall_max();
        assert!(a / b > 3.2 && a / b < 4.8 || b < 1e-12, "{a} {b}");
    }

    #[test]
    fn profile_is_monotone_with_ordered_speed() {
        let ends = EndStates::with_strength(EulerState::new(1.0, 0.0, 1.5).unwrap(), 0.2).unwrap();
        let profile = WaveProfile::smoothed(ends).unwrap();
        let (wm, wp) = (ends.w_minus().unwrap(), ends.w_plus().unwrap());
        for &t in &[0.0, 1.0, 50.0] {
            let mut prev = f64::NEG_INFINITY;
            for i in 0..200 {
                let x = -100.0 + i as f64;
                let w = profile.w(t, x).unwrap();
                assert!(w > wm && w < wp);
                assert!(w > prev);
                prev = w;
                assert_eq!(profile.evaluate(t, x).unwrap().to_macro().u[1], 0.0);
            }
        }
    }

    #[test]
    fn decay_slopes_follow_the_power_laws() {
        let b = SmoothedBurgers::<f64>::new(0.0, 1.0).unwrap();
        let times = [10.0, 30.0, 100.0, 300.0, 1000.0];
        let rep = burgers_decay_report(&b, &times, &[1.0, 2.0, f64::INFINITY]).unwrap();
        let s2 = rep.slopes_for(2.0).unwrap();
        let sinf = rep.slopes_for(f64::INFINITY).unwrap();
        assert!((s2.derivative + 0.5).abs() < 0.1, "{}", s2.derivative);
        assert!((sinf.derivative + 1.0).abs() < 0.1, "{}", sinf.derivative);
        assert!((sinf.distance + 0.5).abs() < 0.1, "{}", sinf.distance);
        // ∫ ∂ₓw̄ dx = w₊ − w₋ exactly
        for r in rep.rows_for(1.0) {
            assert!((r.derivative - 1.0).abs() < 1e-6, "{}", r.derivative);
        }
        // the characteristic parametrization agrees with differentiating the root-found solution
        let t = 30.0;
        let peak = b.w_x(t, b.w0(0.0) * t).unwrap();
        let row = rep.rows.iter().find(|r| r.t == t && r.q.is_infinite()).unwrap();
        assert!((row.derivative - peak).abs() < 1e-6 * peak);
        assert!(burgers_decay_report(&b, &times[..3], &[2.0]).is_err());
    }

    #[test]
    fn profile_decay_report_has_the_same_rates() {
        let ends = EndStates::with_strength(EulerState::new(1.0, 0.0, 1.5).unwrap(), 0.2).unwrap();
        let profile = WaveProfile::smoothed(ends).unwrap();
        // a weak wave enters the asymptotic regime once (w₊ − w₋) t ≫ 1
        let times = [1e3, 3e3, 1e4, 3e4, 1e5];
        let rep = decay_report(&profile, &times, &[2.0, f64::INFINITY]).unwrap();
        assert!((rep.slopes_for(2.0).unwrap().derivative + 0.5).abs() < 0.1);
        assert!((rep.slopes_for(f64::INFINITY).unwrap().derivative + 1.0).abs() < 0.1);
        assert!(rep.slopes_for(f64::INFINITY).unwrap().second_derivative < -0.9);
    }
}
