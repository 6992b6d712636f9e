//! Edge transfer functions.
//!
//! A function id stored in a [`CoeffTensor`](super::CoeffTensor) is an index
//! into the ordered list of its dataset's function set. Index 0 is always the
//! identity, so linear edges look the same in every set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest magnitude fed to the reciprocal.
pub const RECIPROCAL_GUARD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeFn {
    Identity,
    Exp,
    Square,
    Sigmoid,
    Sin,
    Cos,
    Relu,
    LogSigmoid,
    Reciprocal,
    Abs,
    Clamp,
}

impl EdgeFn {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            EdgeFn::Identity => x,
            EdgeFn::Exp => x.exp(),
            EdgeFn::Square => x * x,
            EdgeFn::Sigmoid => sigmoid(x),
            EdgeFn::Sin => x.sin(),
            EdgeFn::Cos => x.cos(),
            EdgeFn::Relu => x.max(0.0),
            EdgeFn::LogSigmoid => log_sigmoid(x),
            EdgeFn::Reciprocal => {
                let sign = if x < 0.0 { -1.0 } else { 1.0 };
                sign / x.abs().max(RECIPROCAL_GUARD)
            }
            EdgeFn::Abs => x.abs(),
            EdgeFn::Clamp => x.clamp(-0.5, 0.5),
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_sigmoid(x: f64) -> f64 {
    // log σ(x) = -softplus(-x)
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FunctionSetId {
    L,
    NL1,
    NL2,
}

const SET_L: [EdgeFn; 1] = [EdgeFn::Identity];
const SET_NL1: [EdgeFn; 3] = [EdgeFn::Identity, EdgeFn::Exp, EdgeFn::Square];
const SET_NL2: [EdgeFn; 11] = [
    EdgeFn::Identity,
    EdgeFn::Exp,
    EdgeFn::Square,
    EdgeFn::Sigmoid,
    EdgeFn::Sin,
    EdgeFn::Cos,
    EdgeFn::Relu,
    EdgeFn::LogSigmoid,
    EdgeFn::Reciprocal,
    EdgeFn::Abs,
    EdgeFn::Clamp,
];

impl FunctionSetId {
    /// The ordered function list. Stable across versions: ids index into it.
    pub fn functions(self) -> &'static [EdgeFn] {
        match self {
            FunctionSetId::L => &SET_L,
            FunctionSetId::NL1 => &SET_NL1,
            FunctionSetId::NL2 => &SET_NL2,
        }
    }

    pub fn is_linear(self) -> bool {
        self == FunctionSetId::L
    }

    pub fn get(self, id: u8) -> Result<EdgeFn> {
        self.functions()
            .get(id as usize)
            .copied()
            .ok_or_else(|| Error::data(format!("function id {id} out of range for {self:?}")))
    }
}

impl std::str::FromStr for FunctionSetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "L" => Ok(FunctionSetId::L),
            "NL1" => Ok(FunctionSetId::NL1),
            "NL2" => Ok(FunctionSetId::NL2),
            other => Err(Error::config(format!("unknown function set '{other}'"))),
        }
    }
}

/// Looks up a function set by name.
pub fn function_set(name: &str) -> Result<&'static [EdgeFn]> {
    Ok(name.parse::<FunctionSetId>()?.functions())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_contents() {
        assert_eq!(function_set("L").unwrap(), &[EdgeFn::Identity]);
        assert_eq!(
            function_set("nl1").unwrap(),
            &[EdgeFn::Identity, EdgeFn::Exp, EdgeFn::Square]
        );
        assert_eq!(function_set("NL2").unwrap().len(), 11);
        assert!(function_set("NL3").is_err());
        for set in [FunctionSetId::L, FunctionSetId::NL1, FunctionSetId::NL2] {
            assert_eq!(set.functions()[0], EdgeFn::Identity);
        }
    }

    #[test]
    fn spot_values() {
        assert_eq!(EdgeFn::Sigmoid.apply(0.0), 0.5);
        assert_eq!(EdgeFn::Clamp.apply(0.7), 0.5);
        assert_eq!(EdgeFn::Clamp.apply(-3.0), -0.5);
        assert_eq!(EdgeFn::Clamp.apply(0.2), 0.2);
        assert_eq!(EdgeFn::Square.apply(-3.0), 9.0);
        assert_eq!(EdgeFn::Relu.apply(-1.0), 0.0);
        assert_eq!(EdgeFn::Abs.apply(-2.5), 2.5);
        assert!((EdgeFn::LogSigmoid.apply(0.0) - 0.5f64.ln()).abs() < 1e-15);
        assert!((EdgeFn::LogSigmoid.apply(-800.0) + 800.0).abs() < 1e-9);
        assert!(EdgeFn::LogSigmoid.apply(800.0).abs() < 1e-12);
    }

    #[test]
    fn reciprocal_guard() {
        assert_eq!(EdgeFn::Reciprocal.apply(2.0), 0.5);
        assert_eq!(EdgeFn::Reciprocal.apply(-4.0), -0.25);
        assert_eq!(EdgeFn::Reciprocal.apply(1e-9), 1000.0);
        assert_eq!(EdgeFn::Reciprocal.apply(-1e-9), -1000.0);
        assert_eq!(EdgeFn::Reciprocal.apply(0.0), 1000.0);
    }

    #[test]
    fn invalid_id() {
        assert!(FunctionSetId::NL1.get(3).is_err());
        assert_eq!(FunctionSetId::NL1.get(2).unwrap(), EdgeFn::Square);
    }
}
