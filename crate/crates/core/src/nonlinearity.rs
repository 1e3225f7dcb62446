//! The nonlinearity `f` of `(f(u))_tt`, its first three derivatives, sampled
//! checks of the blow-up hypotheses and the tail integral `∫_a^∞ dξ / f(ξ)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate_adaptive;

type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

/// User-supplied nonlinearity with explicit derivatives.
pub struct CustomFunctions {
    pub name: String,
    pub f: Box<ScalarFn>,
    pub d1: Box<ScalarFn>,
    pub d2: Box<ScalarFn>,
    pub d3: Box<ScalarFn>,
}

#[derive(Clone)]
enum Kind {
    Zero,
    Quadratic(f64),
    Exponential(f64),
    Custom(Arc<CustomFunctions>),
}

/// A `C³` function with `f(0) = 0`.
#[derive(Clone)]
pub struct Nonlinearity {
    kind: Kind,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Nonlinearity({})", self.describe())
    }
}

/// Serializable selector for the shipped nonlinearities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum NonlinearitySpec {
    Zero,
    /// `f(ξ) = k ξ²`
    Quadratic {
        k: f64,
    },
    /// `f(ξ) = k (e^ξ - 1 - ξ)`
    Exponential {
        k: f64,
    },
}

impl NonlinearitySpec {
    pub fn build(&self) -> Result<Nonlinearity> {
        match *self {
            NonlinearitySpec::Zero => Ok(Nonlinearity::zero()),
            NonlinearitySpec::Quadratic { k } => Nonlinearity::quadratic(k),
            NonlinearitySpec::Exponential { k } => Nonlinearity::exponential(k),
        }
    }
}

/// Relative tolerance of the finite-difference derivative check.
pub const DERIVATIVE_CHECK_TOL: f64 = 1e-6;

impl Nonlinearity {
    pub fn zero() -> Self {
        Nonlinearity { kind: Kind::Zero }
    }

    pub fn quadratic(k: f64) -> Result<Self> {
        check_coupling(k)?;
        Ok(Nonlinearity { kind: Kind::Quadratic(k) })
    }

    pub fn exponential(k: f64) -> Result<Self> {
        check_coupling(k)?;
        Ok(Nonlinearity { kind: Kind::Exponential(k) })
    }

    /// Builds a custom nonlinearity after checking `f(0) = 0` and that the
    /// supplied derivatives agree with central differences of `f`.
    pub fn custom(functions: CustomFunctions) -> Result<Self> {
        let nl = Nonlinearity { kind: Kind::Custom(Arc::new(functions)) };
        let f0 = nl.value(0.0);
        if f0.abs() > 1e-14 {
            return Err(Error::InvalidArgument(format!("custom nonlinearity has f(0) = {f0}")));
        }
        nl.check_derivatives(100, -10.0, 10.0)?;
        Ok(nl)
    }

    pub fn spec(&self) -> Option<NonlinearitySpec> {
        match self.kind {
            Kind::Zero => Some(NonlinearitySpec::Zero),
            Kind::Quadratic(k) => Some(NonlinearitySpec::Quadratic { k }),
            Kind::Exponential(k) => Some(NonlinearitySpec::Exponential { k }),
            Kind::Custom(_) => None,
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            Kind::Zero => "zero".into(),
            Kind::Quadratic(k) => format!("quadratic(k={k})"),
            Kind::Exponential(k) => format!("exponential(k={k})"),
            Kind::Custom(c) => format!("custom({})", c.name),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, Kind::Zero)
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self.kind, Kind::Quadratic(_))
    }

    /// Coupling `k` of a quadratic nonlinearity.
    pub fn quadratic_coupling(&self) -> Option<f64> {
        match self.kind {
            Kind::Quadratic(k) => Some(k),
            _ => None,
        }
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::Quadratic(k) => k * x * x,
            Kind::Exponential(k) => k * (x.exp_m1() - x),
            Kind::Custom(c) => (c.f)(x),
        }
    }

    #[inline]
    pub fn d1(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::Quadratic(k) => 2.0 * k * x,
            Kind::Exponential(k) => k * x.exp_m1(),
            Kind::Custom(c) => (c.d1)(x),
        }
    }

    #[inline]
    pub fn d2(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::Quadratic(k) => 2.0 * k,
            Kind::Exponential(k) => k * x.exp(),
            Kind::Custom(c) => (c.d2)(x),
        }
    }

    #[inline]
    pub fn d3(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Zero | Kind::Quadratic(_) => 0.0,
            Kind::Exponential(k) => k * x.exp(),
            Kind::Custom(c) => (c.d3)(x),
        }
    }

    /// `f^{(order)}(ξ)` for `order ∈ {0, 1, 2, 3}`.
    pub fn eval(&self, order: u8, xi: f64) -> Result<f64> {
        if !xi.is_finite() {
            return Err(Error::NonFinite(format!("nonlinearity argument {xi}")));
        }
        match order {
            0 => Ok(self.value(xi)),
            1 => Ok(self.d1(xi)),
            2 => Ok(self.d2(xi)),
            3 => Ok(self.d3(xi)),
            _ => Err(Error::InvalidArgument(format!("derivative order {order} exceeds 3"))),
        }
    }

    /// Compares each supplied derivative with a central difference of the
    /// next-lower one at `samples` evenly spaced points of `[lo, hi]`.
    pub fn check_derivatives(&self, samples: usize, lo: f64, hi: f64) -> Result<()> {
        type Pair<'a> = (&'a dyn Fn(f64) -> f64, &'a dyn Fn(f64) -> f64, &'a str);
        let orders: [Pair; 3] = [
            (&|x| self.value(x), &|x| self.d1(x), "f'"),
            (&|x| self.d1(x), &|x| self.d2(x), "f''"),
            (&|x| self.d2(x), &|x| self.d3(x), "f'''"),
        ];
        for s in 0..samples {
            let x = lo + (hi - lo) * (s as f64 + 0.5) / samples as f64;
            let h = 1e-5 * x.abs().max(1.0);
            for (lower, deriv, name) in orders.iter() {
                let fd = (lower(x + h) - lower(x - h)) / (2.0 * h);
                let d = deriv(x);
                if !(fd - d).abs().le(&(DERIVATIVE_CHECK_TOL * (1.0 + d.abs()))) {
                    return Err(Error::InvalidArgument(format!(
                        "{name} inconsistent with finite differences at {x}: {d} vs {fd}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `sup |f'| + |f''| + |f'''|` over `[-c, c]`.
    ///
    /// Closed form for the shipped nonlinearities; custom ones are sampled
    /// at `10⁵` points and inflated by 5%.
    pub fn derivative_sup(&self, c: f64) -> f64 {
        let c = c.abs();
        match &self.kind {
            Kind::Zero => 0.0,
            Kind::Quadratic(k) => 2.0 * k * c + 2.0 * k,
            Kind::Exponential(k) => {
                let at = |x: f64| k * x.exp_m1().abs() + 2.0 * k * x.exp();
                at(c).max(at(-c))
            }
            Kind::Custom(_) => {
                let n = 100_000;
                let sup = (0..=n)
                    .map(|i| -c + 2.0 * c * i as f64 / n as f64)
                    .map(|x| self.d1(x).abs() + self.d2(x).abs() + self.d3(x).abs())
                    .fold(0.0f64, f64::max);
                1.05 * sup
            }
        }
    }

    /// `∫_a^∞ dξ / f(ξ)`; closed form `1/(k a)` for quadratic `f`.
    pub fn tail_integral(&self, a: f64) -> Result<f64> {
        match self.kind {
            Kind::Quadratic(k) if a > 0.0 && a.is_finite() => Ok(1.0 / (k * a)),
            _ => self.tail_integral_numeric(a),
        }
    }

    /// Tail integral by adaptive quadrature regardless of the kind.
    ///
    /// Substitutes `ξ = a/s` and sums dyadic pieces `s ∈ [2^{-j-1}, 2^{-j}]`;
    /// the partial sums must become Cauchy within the piece budget.
    pub fn tail_integral_numeric(&self, a: f64) -> Result<f64> {
        self.tail_integral_with_tol(a, 1e-12)
    }

    fn tail_integral_with_tol(&self, a: f64, abs_tol: f64) -> Result<f64> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidArgument(format!("tail integral needs a > 0, got {a}")));
        }
        if self.is_zero() {
            return Err(Error::Divergent("1/f is undefined for f = 0".into()));
        }
        const MAX_PIECES: usize = 200;
        let integrand = |s: f64| {
            if s <= 0.0 {
                return 0.0;
            }
            let xi = a / s;
            let fx = self.value(xi);
            if fx.is_infinite() {
                0.0
            } else {
                a / (s * s * fx)
            }
        };
        let mut total = 0.0;
        let mut hi = 1.0f64;
        for _ in 0..MAX_PIECES {
            let lo = 0.5 * hi;
            // f must stay positive along the tail.
            for s in [lo, 0.5 * (lo + hi), hi] {
                let fx = self.value(a / s);
                if !(fx > 0.0) {
                    return Err(Error::Divergent(format!("f({}) = {fx} is not positive on the tail", a / s)));
                }
            }
            let piece = integrate_adaptive(integrand, lo, hi, abs_tol * 1e-2, 1e-13)?;
            total += piece;
            if piece.abs() <= abs_tol * 1e-3 {
                return Ok(total);
            }
            hi = lo;
        }
        Err(Error::Divergent(format!(
            "tail integral from {a} not Cauchy after {MAX_PIECES} dyadic pieces (partial sum {total})"
        )))
    }

    /// Sampled checks of convexity, superlinear growth and tail integrability.
    pub fn check_hypotheses(&self, xi0: f64, sample_budget: usize) -> Result<BlowUpHypotheses> {
        if !(xi0 > 0.0 && xi0.is_finite()) {
            return Err(Error::InvalidArgument(format!("xi0 must be positive, got {xi0}")));
        }
        let budget = sample_budget.max(4);
        let mut failures = Vec::new();

        // Convexity on ±ξ for log-spaced ξ ∈ [1e-6, 1e6], plus ξ = 0.
        let mut convex = true;
        let mut points = vec![0.0];
        for i in 0..budget {
            let e = -6.0 + 12.0 * i as f64 / (budget - 1) as f64;
            let x = 10f64.powf(e);
            points.push(x);
            points.push(-x);
        }
        for &x in &points {
            let d2 = self.d2(x);
            if d2.is_nan() || d2 < 0.0 {
                convex = false;
                failures.push(HypothesisFailure { hypothesis: "convexity".into(), sample: x });
                break;
            }
        }

        // f(ξ)/ξ strictly increasing on log-spaced ξ ∈ [ξ0, 1e6 ξ0] and
        // growing by at least a factor 10 (or overflowing).
        let mut superlinear = true;
        let mut prev = f64::NEG_INFINITY;
        let mut first = None;
        let mut last = 0.0;
        for i in 0..budget {
            let x = xi0 * 10f64.powf(6.0 * i as f64 / (budget - 1) as f64);
            let r = self.value(x) / x;
            if r.is_nan() || !(r > prev) {
                if r.is_infinite() && prev.is_infinite() {
                    continue;
                }
                superlinear = false;
                failures.push(HypothesisFailure { hypothesis: "superlinear_growth".into(), sample: x });
                break;
            }
            if first.is_none() {
                first = Some(r);
            }
            prev = r;
            last = r;
        }
        if superlinear {
            let r0 = first.unwrap_or(0.0);
            if !(last.is_infinite() || (r0 > 0.0 && last >= 10.0 * r0)) {
                superlinear = false;
                failures.push(HypothesisFailure { hypothesis: "superlinear_growth".into(), sample: xi0 * 1e6 });
            }
        }

        let integrable_tail = match self.tail_integral_with_tol(xi0, 1e-10) {
            Ok(v) => v.is_finite() && v > 0.0,
            Err(_) => false,
        };
        if !integrable_tail {
            failures.push(HypothesisFailure { hypothesis: "integrable_tail".into(), sample: xi0 });
        }
        Ok(BlowUpHypotheses { convex, superlinear, integrable_tail, xi0, sample_budget: budget, failures })
    }
}

fn check_coupling(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("coupling k must be positive, got {k}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisFailure {
    pub hypothesis: String,
    pub sample: f64,
}

/// Outcome of the sampled checks; a flag is set only if every sample passed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowUpHypotheses {
    /// `f'' ≥ 0`
    pub convex: bool,
    /// `f(ξ)/ξ → ∞`
    pub superlinear: bool,
    /// `∫_{ξ0}^∞ dξ/f < ∞`
    pub integrable_tail: bool,
    pub xi0: f64,
    pub sample_budget: usize,
    pub failures: Vec<HypothesisFailure>,
}

impl BlowUpHypotheses {
    pub fn all(&self) -> bool {
        self.convex && self.superlinear && self.integrable_tail
    }

    /// The first failed hypothesis as an error.
    pub fn require_all(&self) -> Result<()> {
        match self.failures.first() {
            None if self.all() => Ok(()),
            Some(fl) => Err(Error::Hypothesis { hypothesis: fl.hypothesis.clone(), sample: fl.sample }),
            None => Err(Error::Hypothesis { hypothesis: "unknown".into(), sample: self.xi0 }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic() -> Nonlinearity {
        Nonlinearity::custom(CustomFunctions {
            name: "cubic".into(),
            f: Box::new(|x| x * x * x),
            d1: Box::new(|x| 3.0 * x * x),
            d2: Box::new(|x| 6.0 * x),
            d3: Box::new(|_| 6.0),
        })
        .unwrap()
    }

    #[test]
    fn evaluates_shipped_examples() {
        let q1 = Nonlinearity::quadratic(1.0).unwrap();
        assert_eq!(q1.eval(0, 3.0).unwrap(), 9.0);
        let q2 = Nonlinearity::quadratic(2.0).unwrap();
        assert_eq!(q2.eval(2, -7.5).unwrap(), 4.0);
        let e = Nonlinearity::exponential(1.0).unwrap();
        assert_eq!(e.eval(1, 0.0).unwrap(), 0.0);
        assert_eq!(e.eval(0, 0.0).unwrap(), 0.0);
        assert!(e.eval(4, 1.0).is_err());
        assert!(e.eval(0, f64::NAN).is_err());
        assert!(Nonlinearity::quadratic(0.0).is_err());
    }

    #[test]
    fn shipped_derivatives_match_finite_differences() {
        for nl in [Nonlinearity::zero(), Nonlinearity::quadratic(1.5).unwrap(), Nonlinearity::exponential(0.7).unwrap()]
        {
            nl.check_derivatives(100, -10.0, 10.0).unwrap();
        }
    }

    #[test]
    fn custom_rejects_inconsistent_or_offset() {
        let bad = Nonlinearity::custom(CustomFunctions {
            name: "wrong".into(),
            f: Box::new(|x| x * x),
            d1: Box::new(|x| 3.0 * x),
            d2: Box::new(|_| 2.0),
            d3: Box::new(|_| 0.0),
        });
        assert!(bad.is_err());
        let offset = Nonlinearity::custom(CustomFunctions {
            name: "offset".into(),
            f: Box::new(|x| x * x + 1.0),
            d1: Box::new(|x| 2.0 * x),
            d2: Box::new(|_| 2.0),
            d3: Box::new(|_| 0.0),
        });
        assert!(offset.is_err());
    }

    #[test]
    fn hypotheses() {
        let q = Nonlinearity::quadratic(1.0).unwrap();
        let h = q.check_hypotheses(1.0, 200).unwrap();
        assert!(h.all(), "{h:?}");
        let e = Nonlinearity::exponential(1.0).unwrap().check_hypotheses(1.0, 200).unwrap();
        assert!(e.all(), "{e:?}");
        let z = Nonlinearity::zero().check_hypotheses(1.0, 200).unwrap();
        assert!(!z.integrable_tail);
        assert!(!z.superlinear);
        let c = cubic().check_hypotheses(1.0, 200).unwrap();
        assert!(!c.convex);
        assert_eq!(c.failures[0].hypothesis, "convexity");
        assert!(c.failures[0].sample < 0.0);
        assert!(c.require_all().is_err());
    }

    #[test]
    fn linear_is_convex_but_not_superlinear() {
        let lin = Nonlinearity::custom(CustomFunctions {
            name: "linear".into(),
            f: Box::new(|x| x),
            d1: Box::new(|_| 1.0),
            d2: Box::new(|_| 0.0),
            d3: Box::new(|_| 0.0),
        })
        .unwrap();
        let h = lin.check_hypotheses(1.0, 100).unwrap();
        assert!(h.convex);
        assert!(!h.superlinear);
        assert!(!h.integrable_tail);
        assert!(matches!(lin.tail_integral(1.0), Err(Error::Divergent(_))));
    }

    #[test]
    fn quadratic_tail_closed_form_and_quadrature() {
        let q1 = Nonlinearity::quadratic(1.0).unwrap();
        assert_eq!(q1.tail_integral(2.0).unwrap(), 0.5);
        let q4 = Nonlinearity::quadratic(4.0).unwrap();
        assert_eq!(q4.tail_integral(1.0).unwrap(), 0.25);
        for (k, a) in [(1.0, 2.0), (4.0, 1.0), (0.3, 7.0)] {
            let q = Nonlinearity::quadratic(k).unwrap();
            let num = q.tail_integral_numeric(a).unwrap();
            assert!((num - 1.0 / (k * a)).abs() < 1e-10);
        }
    }

    #[test]
    fn derivative_sup_closed_forms() {
        let q = Nonlinearity::quadratic(3.0).unwrap();
        assert_eq!(q.derivative_sup(2.0), 2.0 * 3.0 * 2.0 + 6.0);
        assert_eq!(Nonlinearity::zero().derivative_sup(5.0), 0.0);
        let e = Nonlinearity::exponential(1.0).unwrap();
        let c = 1.3;
        assert!((e.derivative_sup(c) - (3.0 * c.exp() - 1.0)).abs() < 1e-12);
        let cu = cubic();
        // 3c² + 6c + 6 at c = 2, inflated.
        assert!((cu.derivative_sup(2.0) - 1.05 * 30.0).abs() < 1e-6);
    }
}
