//! Closed set of spatial building blocks and their text grammar.
//!
//! A spatial function is `scale * f_1(args) * f_2(args) * ...` where each
//! `f_i` is one of the builtins below (`x1`, `x2` are the coordinates):
//!
//! | builtin          | value                              |
//! |------------------|------------------------------------|
//! | `const()`        | 1                                  |
//! | `const(c)`       | c                                  |
//! | `sin(axis, k)`   | sin(k·π·x_axis), axis ∈ {1, 2}      |
//! | `cos(axis, k)`   | cos(k·π·x_axis), axis ∈ {1, 2}      |
//! | `expsq()`        | exp(x1² + x2²)                      |
//! | `gauss(cx, cy, w)` | exp(-((x1-cx)² + (x2-cy)²) / w²)  |

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mesh::Point;

#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    Const(f64),
    Sin { axis: usize, k: f64 },
    Cos { axis: usize, k: f64 },
    ExpSq,
    Gauss { center: Point, width: f64 },
}

impl Builtin {
    pub fn eval(&self, x: Point) -> f64 {
        match *self {
            Builtin::Const(c) => c,
            Builtin::Sin { axis, k } => (k * PI * x[axis - 1]).sin(),
            Builtin::Cos { axis, k } => (k * PI * x[axis - 1]).cos(),
            Builtin::ExpSq => (x[0] * x[0] + x[1] * x[1]).exp(),
            Builtin::Gauss { center, width } => {
                let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
                (-(dx * dx + dy * dy) / (width * width)).exp()
            }
        }
    }

    fn parse(name: &str, args: &[f64]) -> Result<Builtin> {
        let arity = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!(
                    "{name}() takes {n} argument(s), got {}",
                    args.len()
                )))
            }
        };
        let axis = |a: f64| -> Result<usize> {
            if a == 1.0 || a == 2.0 {
                Ok(a as usize)
            } else {
                Err(Error::InvalidArgument(format!("{name}(): axis must be 1 or 2, got {a}")))
            }
        };
        match name {
            "const" => match args {
                [] => Ok(Builtin::Const(1.0)),
                [c] => Ok(Builtin::Const(*c)),
                _ => Err(Error::InvalidArgument("const() takes 0 or 1 arguments".into())),
            },
            "sin" => {
                arity(2)?;
                Ok(Builtin::Sin { axis: axis(args[0])?, k: args[1] })
            }
            "cos" => {
                arity(2)?;
                Ok(Builtin::Cos { axis: axis(args[0])?, k: args[1] })
            }
            "expsq" => {
                arity(0)?;
                Ok(Builtin::ExpSq)
            }
            "gauss" => {
                arity(3)?;
                if !(args[2] > 0.0) {
                    return Err(Error::InvalidArgument("gauss(): width must be positive".into()));
                }
                Ok(Builtin::Gauss {
                    center: [args[0], args[1]],
                    width: args[2],
                })
            }
            other => Err(Error::InvalidArgument(format!("unknown builtin '{other}'"))),
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Builtin::Const(c) => write!(f, "const({c:?})"),
            Builtin::Sin { axis, k } => write!(f, "sin({axis}, {k:?})"),
            Builtin::Cos { axis, k } => write!(f, "cos({axis}, {k:?})"),
            Builtin::ExpSq => write!(f, "expsq()"),
            Builtin::Gauss { center, width } => {
                write!(f, "gauss({:?}, {:?}, {width:?})", center[0], center[1])
            }
        }
    }
}

/// `scale * Π factors`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialFn {
    pub scale: f64,
    pub factors: Vec<Builtin>,
}

impl SpatialFn {
    pub fn constant(c: f64) -> Self {
        Self {
            scale: c,
            factors: Vec::new(),
        }
    }

    pub fn new(scale: f64, factors: Vec<Builtin>) -> Self {
        Self { scale, factors }
    }

    #[inline]
    pub fn eval(&self, x: Point) -> f64 {
        self.factors.iter().fold(self.scale, |acc, b| acc * b.eval(x))
    }

    pub fn is_constant(&self) -> bool {
        self.factors.iter().all(|b| matches!(b, Builtin::Const(_)))
    }
}

impl fmt::Display for SpatialFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.scale)?;
        for b in &self.factors {
            write!(f, " * {b}")?;
        }
        Ok(())
    }
}

impl FromStr for SpatialFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<SpatialFn> {
        let mut scale = 1.0;
        let mut factors = Vec::new();
        for raw in split_top_level(s)? {
            let token = raw.trim();
            if token.is_empty() {
                return Err(Error::InvalidArgument(format!("empty factor in '{s}'")));
            }
            if let Some(open) = token.find('(') {
                let name = token[..open].trim();
                let inner = token[open + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| Error::InvalidArgument(format!("missing ')' in '{token}'")))?;
                let args = inner
                    .split(',')
                    .map(str::trim)
                    .filter(|a| !a.is_empty())
                    .map(|a| {
                        a.parse::<f64>()
                            .map_err(|_| Error::InvalidArgument(format!("bad number '{a}' in '{token}'")))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                factors.push(Builtin::parse(name, &args)?);
            } else {
                let v: f64 = token
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad factor '{token}'")))?;
                scale *= v;
            }
        }
        Ok(SpatialFn { scale, factors })
    }
}

fn split_top_level(s: &str) -> Result<Vec<&str>> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(Error::InvalidArgument(format!("unbalanced ')' in '{s}'")));
                }
            }
            '*' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(Error::InvalidArgument(format!("unbalanced '(' in '{s}'")));
    }
    parts.push(&s[start..]);
    Ok(parts)
}
