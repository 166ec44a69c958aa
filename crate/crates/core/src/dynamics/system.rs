use std::fmt;

use crate::dynamics::denjoy::{DenjoyModel, DEFAULT_TRUNCATION};
use crate::dynamics::space::{wrap, Metric, Space};
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum Family<T> {
    /// `x ↦ 1 − |2x − 1|` on `[0,1]`.
    Tent,
    /// `x ↦ 2x mod 1` on the circle.
    Doubling,
    /// `x ↦ r·x·(1 − x)` on `[0,1]`, `r ∈ (0,4]`.
    Logistic {
        r: T,
    },
    /// `x ↦ x + alpha mod 1`.
    Rotation {
        alpha: T,
    },
    Denjoy(DenjoyModel<T>),
    /// `x ↦ x − (contraction/2π)·sin(2π(x − sink))`: an attracting fixed point at
    /// `sink`, a repelling one at `source = sink + 1/2`, every other orbit tends to
    /// the sink.
    NorthSouth {
        sink: T,
        source: T,
        contraction: T,
    },
    Identity,
    /// Continuous interval map interpolating `(x_i, y_i)`, `x_0 = 0`, `x_last = 1`.
    PiecewiseLinear {
        breakpoints: Vec<(T, T)>,
    },
}

/// A map `f: X → X` together with its phase space. The metric is the one of the space.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec<T> {
    family: Family<T>,
    space: Space,
}

impl<T: Scalar> SystemSpec<T> {
    pub fn new(family: Family<T>, space: Space) -> Result<Self> {
        match (&family, space) {
            (
                Family::Tent | Family::Logistic { .. } | Family::PiecewiseLinear { .. },
                Space::Circle,
            ) => {
                return Err(invalid(format!(
                    "{} is an interval map",
                    family_name(&family)
                )))
            }
            (
                Family::Rotation { .. }
                | Family::Denjoy(_)
                | Family::NorthSouth { .. }
                | Family::Doubling,
                Space::Interval,
            ) => return Err(invalid(format!("{} is a circle map", family_name(&family)))),
            _ => {}
        }
        match &family {
            Family::Logistic { r } => {
                if !(*r > T::zero() && *r <= T::lit(4.0)) {
                    return Err(invalid(format!("logistic r must lie in (0,4], got {r}")));
                }
            }
            Family::Rotation { alpha } => {
                if !alpha.is_finite() {
                    return Err(invalid("rotation alpha must be finite"));
                }
            }
            Family::NorthSouth {
                sink,
                source,
                contraction,
            } => {
                if !(*contraction > T::zero() && *contraction < T::one()) {
                    return Err(invalid(format!(
                        "north-south contraction must lie in (0,1), got {contraction}"
                    )));
                }
                space.check(*sink)?;
                space.check(*source)?;
                let expected = wrap(*sink + T::lit(0.5));
                if Metric::CircleArc.distance(expected, *source) > T::epsilon() * T::lit(4.0) {
                    return Err(invalid("north-south source must be antipodal to the sink"));
                }
            }
            Family::PiecewiseLinear { breakpoints } => validate_breakpoints(breakpoints)?,
            _ => {}
        }
        Ok(Self { family, space })
    }

    pub fn tent() -> Self {
        Self {
            family: Family::Tent,
            space: Space::Interval,
        }
    }

    pub fn doubling() -> Self {
        Self {
            family: Family::Doubling,
            space: Space::Circle,
        }
    }

    pub fn logistic(r: T) -> Result<Self> {
        Self::new(Family::Logistic { r }, Space::Interval)
    }

    pub fn rotation(alpha: T) -> Result<Self> {
        Self::new(Family::Rotation { alpha }, Space::Circle)
    }

    /// Rotation by the golden mean `(√5 − 1)/2`.
    pub fn golden_rotation() -> Self {
        Self {
            family: Family::Rotation {
                alpha: golden_mean(),
            },
            space: Space::Circle,
        }
    }

    pub fn denjoy(model: DenjoyModel<T>) -> Self {
        Self {
            family: Family::Denjoy(model),
            space: Space::Circle,
        }
    }

    pub fn north_south(sink: T, contraction: T) -> Result<Self> {
        let sink = wrap(sink);
        Self::new(
            Family::NorthSouth {
                sink,
                source: wrap(sink + T::lit(0.5)),
                contraction,
            },
            Space::Circle,
        )
    }

    pub fn identity(space: Space) -> Self {
        Self {
            family: Family::Identity,
            space,
        }
    }

    pub fn piecewise_linear(breakpoints: Vec<(T, T)>) -> Result<Self> {
        Self::new(Family::PiecewiseLinear { breakpoints }, Space::Interval)
    }

    pub fn family(&self) -> &Family<T> {
        &self.family
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn metric(&self) -> Metric {
        self.space.metric()
    }

    pub fn name(&self) -> &'static str {
        family_name(&self.family)
    }

    pub fn denjoy_model(&self) -> Option<&DenjoyModel<T>> {
        match &self.family {
            Family::Denjoy(m) => Some(m),
            _ => None,
        }
    }

    /// Whether the map is a homeomorphism of its space (images of arcs are arcs
    /// bounded by the endpoint images).
    pub fn is_homeomorphism(&self) -> bool {
        matches!(
            self.family,
            Family::Rotation { .. }
                | Family::Denjoy(_)
                | Family::NorthSouth { .. }
                | Family::Identity
        )
    }

    #[inline]
    pub fn distance(&self, x: T, y: T) -> T {
        self.space.metric().distance(x, y)
    }

    /// `f(x)` with domain checking.
    pub fn evaluate(&self, x: T) -> Result<T> {
        self.space.check(x)?;
        Ok(self.step(x))
    }

    /// `f(x)` for a point already known to lie in the space.
    #[inline]
    pub fn step(&self, x: T) -> T {
        let y = match &self.family {
            // Evaluated as (2/π)·asin|sin(πx)|, which equals 1 − |2x − 1| on [0,1].
            // The direct formula is exact in binary floating point and therefore
            // drives every orbit onto the fixed point 0 within ~55 steps; this form
            // rounds like a generic map and keeps long orbits meaningful.
            Family::Tent => (T::PI() * x).sin().abs().asin() / T::FRAC_PI_2(),
            Family::Doubling => {
                let y = x + x;
                if y >= T::one() {
                    y - T::one()
                } else {
                    y
                }
            }
            Family::Logistic { r } => *r * x * (T::one() - x),
            Family::Rotation { alpha } => x + *alpha,
            Family::Denjoy(m) => m.evaluate(x),
            Family::NorthSouth {
                sink, contraction, ..
            } => {
                let two_pi = T::lit(2.0) * T::PI();
                x - *contraction / two_pi * (two_pi * (x - *sink)).sin()
            }
            Family::Identity => x,
            Family::PiecewiseLinear { breakpoints } => interpolate(breakpoints, x),
        };
        self.space.canonicalize(y)
    }

    /// Points where an interval map can change monotonicity, in increasing order.
    pub fn turning_points(&self) -> Vec<T> {
        match &self.family {
            Family::Tent | Family::Logistic { .. } => vec![T::lit(0.5)],
            Family::PiecewiseLinear { breakpoints } => breakpoints
                .iter()
                .skip(1)
                .take(breakpoints.len().saturating_sub(2))
                .map(|b| b.0)
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Signed displacement of the canonical lift, for circle homeomorphisms.
    pub fn lift_displacement(&self, x: T) -> Result<T> {
        if self.space != Space::Circle || !self.is_homeomorphism() {
            return Err(invalid(format!(
                "{} on the {} is not a circle homeomorphism",
                self.name(),
                self.space.name()
            )));
        }
        Ok(match &self.family {
            Family::Rotation { alpha } => wrap(*alpha),
            Family::Denjoy(m) => m.lift_displacement(x),
            Family::NorthSouth {
                sink, contraction, ..
            } => {
                let two_pi = T::lit(2.0) * T::PI();
                -(*contraction / two_pi * (two_pi * (x - *sink)).sin())
            }
            _ => T::zero(),
        })
    }

    /// Parses the flat key-value form, e.g.
    /// `family=denjoy alpha=0.6180339887498949 lambda=0.5 total_gap=0.5 K=40`.
    /// A bare family name (`tent`) is accepted for the first token.
    pub fn parse(text: &str) -> Result<Self> {
        let mut family = None;
        let mut keys: Vec<(String, String)> = Vec::new();
        for (i, token) in text.split_whitespace().enumerate() {
            match token.split_once('=') {
                Some(("family", v)) => family = Some(v.to_string()),
                Some((k, v)) => {
                    if keys.iter().any(|(seen, _)| seen == k) {
                        return Err(Error::Parse(format!("duplicate system key `{k}`")));
                    }
                    keys.push((k.to_string(), v.to_string()))
                }
                None if i == 0 => family = Some(token.to_string()),
                None => return Err(Error::Parse(format!("expected key=value, got `{token}`"))),
            }
        }
        let family = family.ok_or_else(|| Error::Parse("system spec needs `family=`".into()))?;
        let mut take = |key: &str| -> Option<String> {
            keys.iter()
                .position(|(k, _)| k == key)
                .map(|i| keys.remove(i).1)
        };
        let num = |key: &str, v: Option<String>, default: f64| -> Result<T> {
            match v {
                None => Ok(T::lit(default)),
                Some(s) => T::parse(&s)
                    .ok_or_else(|| Error::Parse(format!("`{key}` is not a number: `{s}`"))),
            }
        };
        let spec = match family.as_str() {
            "tent" => Self::tent(),
            "doubling" => Self::doubling(),
            "logistic" => Self::logistic(num("r", take("r"), 4.0)?)?,
            "rotation" => {
                let alpha = match take("alpha") {
                    None => golden_mean(),
                    some => num("alpha", some, 0.0)?,
                };
                Self::rotation(alpha)?
            }
            "denjoy" => {
                let alpha = match take("alpha") {
                    None => golden_mean(),
                    some => num("alpha", some, 0.0)?,
                };
                let lambda = num("lambda", take("lambda"), 0.5)?;
                let total_gap = num("total_gap", take("total_gap"), 0.5)?;
                let k = match take("K") {
                    None => DEFAULT_TRUNCATION,
                    Some(s) => s
                        .parse::<usize>()
                        .map_err(|_| Error::Parse(format!("`K` is not a count: `{s}`")))?,
                };
                Self::denjoy(DenjoyModel::new(alpha, lambda, total_gap, k)?)
            }
            "north-south" => {
                let sink = num("sink", take("sink"), 0.0)?;
                let contraction = num("contraction", take("contraction"), 0.5)?;
                let spec = Self::north_south(sink, contraction)?;
                if let Some(s) = take("source") {
                    let source = num("source", Some(s), 0.0)?;
                    Self::new(
                        Family::NorthSouth {
                            sink: wrap(sink),
                            source,
                            contraction,
                        },
                        Space::Circle,
                    )?;
                }
                spec
            }
            "identity" => {
                let space = match take("space").as_deref() {
                    None | Some("interval") => Space::Interval,
                    Some("circle") => Space::Circle,
                    Some(other) => return Err(Error::Parse(format!("unknown space `{other}`"))),
                };
                Self::identity(space)
            }
            "piecewise-linear" => {
                let raw = take("breakpoints")
                    .ok_or_else(|| Error::Parse("piecewise-linear needs `breakpoints=`".into()))?;
                let mut bps = Vec::new();
                for pair in raw.split(',') {
                    let (x, y) = pair
                        .split_once(':')
                        .ok_or_else(|| Error::Parse(format!("breakpoint `{pair}` is not x:y")))?;
                    let x = T::parse(x)
                        .ok_or_else(|| Error::Parse(format!("bad breakpoint `{pair}`")))?;
                    let y = T::parse(y)
                        .ok_or_else(|| Error::Parse(format!("bad breakpoint `{pair}`")))?;
                    bps.push((x, y));
                }
                Self::piecewise_linear(bps)?
            }
            other => return Err(Error::Parse(format!("unknown family `{other}`"))),
        };
        if let Some((k, _)) = keys.first() {
            return Err(Error::Parse(format!(
                "key `{k}` does not apply to family `{family}`"
            )));
        }
        Ok(spec)
    }
}

impl<T: Scalar> fmt::Display for SystemSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "family={}", self.name())?;
        match &self.family {
            Family::Logistic { r } => write!(f, " r={r}"),
            Family::Rotation { alpha } => write!(f, " alpha={alpha}"),
            Family::Denjoy(m) => write!(
                f,
                " alpha={} lambda={} total_gap={} K={}",
                m.alpha(),
                m.lambda(),
                m.total_gap(),
                m.truncation()
            ),
            Family::NorthSouth {
                sink,
                source,
                contraction,
            } => {
                write!(f, " sink={sink} source={source} contraction={contraction}")
            }
            Family::Identity => write!(f, " space={}", self.space.name()),
            Family::PiecewiseLinear { breakpoints } => {
                write!(f, " breakpoints=")?;
                for (i, (x, y)) in breakpoints.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}:{y}")?;
                }
                Ok(())
            }
            Family::Tent | Family::Doubling => Ok(()),
        }
    }
}

pub fn golden_mean<T: Scalar>() -> T {
    (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0)
}

fn family_name<T>(family: &Family<T>) -> &'static str {
    match family {
        Family::Tent => "tent",
        Family::Doubling => "doubling",
        Family::Logistic { .. } => "logistic",
        Family::Rotation { .. } => "rotation",
        Family::Denjoy(_) => "denjoy",
        Family::NorthSouth { .. } => "north-south",
        Family::Identity => "identity",
        Family::PiecewiseLinear { .. } => "piecewise-linear",
    }
}

fn validate_breakpoints<T: Scalar>(bps: &[(T, T)]) -> Result<()> {
    if bps.len() < 2 {
        return Err(invalid("piecewise-linear needs at least two breakpoints"));
    }
    if bps[0].0 != T::zero() || bps[bps.len() - 1].0 != T::one() {
        return Err(invalid(
            "piecewise-linear breakpoints must start at x=0 and end at x=1",
        ));
    }
    if bps.windows(2).any(|w| !(w[0].0 < w[1].0)) {
        return Err(invalid(
            "piecewise-linear breakpoints must be strictly increasing in x",
        ));
    }
    if bps.iter().any(|&(_, y)| !(y >= T::zero() && y <= T::one())) {
        return Err(invalid("piecewise-linear values must lie in [0,1]"));
    }
    Ok(())
}

fn interpolate<T: Scalar>(bps: &[(T, T)], x: T) -> T {
    let j = bps.partition_point(|b| b.0 <= x).clamp(1, bps.len() - 1);
    let (x0, y0) = bps[j - 1];
    let (x1, y1) = bps[j];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_examples() {
        assert_eq!(SystemSpec::<f64>::tent().evaluate(0.5).unwrap(), 1.0);
        let r0 = SystemSpec::rotation(0.0).unwrap();
        assert_eq!(r0.evaluate(0.3f64).unwrap(), 0.3);
        assert!((SystemSpec::<f64>::doubling().evaluate(0.3).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn tent_matches_direct_formula() {
        let tent = SystemSpec::<f64>::tent();
        for i in 0..=10_000 {
            let x = i as f64 / 10_000.0;
            let direct = 1.0 - (2.0 * x - 1.0).abs();
            let err = (tent.step(x) - direct).abs();
            // the asin branch loses half the digits only right at the peak
            let tol = if (x - 0.5).abs() < 1e-3 { 1e-8 } else { 1e-13 };
            assert!(err < tol, "x={x} err={err}");
        }
    }

    #[test]
    fn tent_orbits_do_not_collapse() {
        let tent = SystemSpec::<f64>::tent();
        let mut x = 0.123_456_789f64;
        let mut zeros = 0;
        for _ in 0..10_000 {
            x = tent.step(x);
            if x == 0.0 {
                zeros += 1;
            }
        }
        assert_eq!(zeros, 0);
    }

    #[test]
    fn domain_violation_rejected() {
        let tent = SystemSpec::<f64>::tent();
        assert!(matches!(tent.evaluate(1.5), Err(Error::Domain { .. })));
        let rot = SystemSpec::<f64>::golden_rotation();
        assert!(rot.evaluate(1.0).is_err());
    }

    #[test]
    fn circle_outputs_half_open() {
        let rot = SystemSpec::rotation(0.75f64).unwrap();
        for i in 0..1000 {
            let y = rot.step(i as f64 / 1000.0);
            assert!((0.0..1.0).contains(&y));
        }
    }

    #[test]
    fn family_space_pairing() {
        assert!(SystemSpec::new(Family::<f64>::Tent, Space::Circle).is_err());
        assert!(SystemSpec::new(Family::Rotation { alpha: 0.1f64 }, Space::Interval).is_err());
        assert!(SystemSpec::logistic(4.5f64).is_err());
        assert!(SystemSpec::logistic(0.0f64).is_err());
        assert!(SystemSpec::north_south(0.0f64, 1.0).is_err());
        assert!(SystemSpec::<f64>::new(
            Family::NorthSouth {
                sink: 0.0,
                source: 0.3,
                contraction: 0.5
            },
            Space::Circle
        )
        .is_err());
    }

    #[test]
    fn north_south_fixed_points() {
        let ns = SystemSpec::north_south(0.0f64, 0.5).unwrap();
        assert_eq!(ns.step(0.0), 0.0);
        assert_eq!(ns.step(0.5), 0.5);
    }

    #[test]
    fn piecewise_linear_tent_shape() {
        let pl = SystemSpec::piecewise_linear(vec![(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)]).unwrap();
        assert!((pl.step(0.25f64) - 0.5).abs() < 1e-15);
        assert!((pl.step(0.75f64) - 0.5).abs() < 1e-15);
        assert_eq!(pl.turning_points(), vec![0.5]);
        assert!(SystemSpec::piecewise_linear(vec![(0.0, 0.0), (0.5, 1.2), (1.0, 0.0)]).is_err());
    }

    #[test]
    fn parse_display_round_trip() {
        let texts = [
            "family=tent",
            "family=doubling",
            "family=logistic r=3.9",
            "family=rotation alpha=0.6180339887498949",
            "family=denjoy alpha=0.6180339887498949 lambda=0.5 total_gap=0.5 K=40",
            "family=north-south sink=0 source=0.5 contraction=0.5",
            "family=identity space=circle",
            "family=piecewise-linear breakpoints=0:0,0.5:1,1:0",
        ];
        for t in texts {
            let s = SystemSpec::<f64>::parse(t).unwrap();
            assert_eq!(s.to_string(), t);
        }
        assert_eq!(
            SystemSpec::<f64>::parse("tent").unwrap(),
            SystemSpec::tent()
        );
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(SystemSpec::<f64>::parse("").is_err());
        assert!(SystemSpec::<f64>::parse("family=cat").is_err());
        assert!(SystemSpec::<f64>::parse("family=tent r=2").is_err());
        assert!(SystemSpec::<f64>::parse("family=rotation alpha=abc").is_err());
        assert!(SystemSpec::<f64>::parse("family=logistic r=3 r=4").is_err());
    }

    #[test]
    fn alpha_keeps_full_precision() {
        let a = golden_mean::<f64>();
        let s = SystemSpec::rotation(a).unwrap();
        let back = SystemSpec::<f64>::parse(&s.to_string()).unwrap();
        match back.family() {
            Family::Rotation { alpha } => assert_eq!(alpha.to_bits(), a.to_bits()),
            _ => unreachable!(),
        }
    }
}
