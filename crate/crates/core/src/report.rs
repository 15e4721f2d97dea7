//! Serialization shared by the command-line tool: JSON with sorted keys and
//! 12 significant digits, and CSV profile tables.

use serde::Serialize;
use serde_json::Value;

use crate::boundary::{
    f_of_n, slippage_til12_with_cap, til13_fault_line_with_cap, til13_fluctuation,
    til2_fault_line_with_cap, til2_identity_check,
};
use crate::error::{Error, Result};

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `x` rounded to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().unwrap_or(0.0));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with keys in sorted order and floats at 12 digits.
pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let value = serde_json::to_value(v).map_err(|e| Error::Internal(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&round_value(value)).map_err(|e| Error::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// A float for CSV output; integral values print without a fraction.
pub fn fmt_csv(x: f64) -> String {
    let r = round_sig(x);
    if r == r.trunc() && r.abs() < 1e15 {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundarySystem {
    Til12,
    Til2,
    Til13,
}

impl std::str::FromStr for BoundarySystem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "til12" => Ok(BoundarySystem::Til12),
            "til2" => Ok(BoundarySystem::Til2),
            "til13" => Ok(BoundarySystem::Til13),
            _ => Err(Error::Argument(format!("unknown system {s:?}; use til12, til2 or til13"))),
        }
    }
}

/// `None` when the computation would exceed the letter cap.
fn within_cap<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Resource { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn field<T>(v: &Option<T>, f: impl Fn(&T) -> String) -> String {
    v.as_ref().map_or_else(String::new, f)
}

/// One row per `n = 1..=max_n`. Fault-line columns are left empty once the
/// word exceeds `cap` letters.
pub fn boundary_csv(system: BoundarySystem, max_n: u32, cap: u128) -> Result<String> {
    let mut out = String::new();
    match system {
        BoundarySystem::Til12 => {
            out.push_str("n,f,g_at_q,distinct_offsets\n");
            for n in 1..=max_n {
                let f = f_of_n(n)?;
                let p = within_cap(slippage_til12_with_cap(n, cap))?;
                let g = field(&p, |p| p.g_at_q.to_string());
                let o = field(&p, |p| p.distinct_offsets.len().to_string());
                out.push_str(&format!("{n},{f},{g},{o}\n"));
            }
        }
        BoundarySystem::Til2 => {
            out.push_str("n,max_abs_f,distinct_offsets,identity_exact\n");
            for n in 1..=max_n {
                let fl = within_cap(til2_fault_line_with_cap(n, cap))?;
                let m = field(&fl, |f| f.max_abs_imbalance.to_string());
                let o = field(&fl, |f| f.offsets.len().to_string());
                let id = if n <= 40 { til2_identity_check(n)?.to_string() } else { String::new() };
                out.push_str(&format!("{n},{m},{o},{id}\n"));
            }
        }
        BoundarySystem::Til13 => {
            out.push_str("n,fluctuation,distinct_offsets\n");
            for n in 1..=max_n {
                let d = if n <= 40 { til13_fluctuation(n)?.to_string() } else { String::new() };
                let fl = within_cap(til13_fault_line_with_cap(n, cap))?;
                let o = field(&fl, |f| f.offsets.len().to_string());
                out.push_str(&format!("{n},{d},{o}\n"));
            }
        }
    }
    Ok(out)
}
