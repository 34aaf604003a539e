//! Export of the composed model in the PRISM input language.
//!
//! One module per input neuron draws that neuron's value on a shared
//! `select` step; the `tpu_fa` module then copies the selection into a
//! reference and a faulty activation register bank and runs `L` rounds
//! of `sa`/`afq` before settling in `no_error` or `error`. Layer outputs
//! are formulas; the faulty bank adds the fault effect to one column as a
//! guarded (`?:`) expression.

#[cfg(test)]
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_traits::Zero;

use super::compose::{compose_model, EXPLICIT_STATE_LIMIT};
use super::input::InputDistribution;
use crate::error::{Error, Result};
use crate::faultmodel::{FaultDescriptor, FaultSite};
use crate::fixedpoint::{QuantizationStrategy, StuckValue};
use crate::network::{NetworkConfig, WeightMatrix};

/// The only query written to the property file.
pub const ERROR_PROPERTY: &str = "P=? [ F \"error\" ]";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportedModel {
    pub model: String,
    pub property: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Int(i64),
    Var(String),
    Add(Vec<Expr>),
    Mul(Box<Expr>, i64),
    Mod(Box<Expr>, i64),
    /// `floor(e / d)`
    Div(Box<Expr>, i64),
    Min(Box<Expr>, i64),
    /// `e >= k ? a : b`
    IfGe(Box<Expr>, i64, Box<Expr>, Box<Expr>),
    /// `e = k ? a : b`
    IfEq(Box<Expr>, i64, Box<Expr>, Box<Expr>),
}

impl Expr {
    fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    fn render(&self) -> String {
        match self {
            Expr::Int(v) if *v < 0 => format!("({v})"),
            Expr::Int(v) => v.to_string(),
            Expr::Var(name) => name.clone(),
            Expr::Add(terms) => {
                let parts: Vec<String> = terms.iter().map(Expr::render).collect();
                format!("({})", parts.join(" + "))
            }
            Expr::Mul(e, k) => format!("{} * {}", Expr::Int(*k).render(), e.render()),
            Expr::Mod(e, m) => format!("mod({}, {m})", e.render()),
            Expr::Div(e, d) => format!("floor({} / {d})", e.render()),
            Expr::Min(e, k) => format!("min({}, {k})", e.render()),
            Expr::IfGe(e, k, a, b) => format!("({} >= {k} ? {} : {})", e.render(), a.render(), b.render()),
            Expr::IfEq(e, k, a, b) => format!("({} = {k} ? {} : {})", e.render(), a.render(), b.render()),
        }
    }

    #[cfg(test)]
    fn eval(&self, env: &HashMap<String, i64>) -> i64 {
        match self {
            Expr::Int(v) => *v,
            Expr::Var(name) => env[name],
            Expr::Add(terms) => terms.iter().map(|t| t.eval(env)).sum(),
            Expr::Mul(e, k) => e.eval(env) * k,
            Expr::Mod(e, m) => e.eval(env).rem_euclid(*m),
            Expr::Div(e, d) => e.eval(env).div_euclid(*d),
            Expr::Min(e, k) => e.eval(env).min(*k),
            Expr::IfGe(e, k, a, b) => {
                if e.eval(env) >= *k {
                    a.eval(env)
                } else {
                    b.eval(env)
                }
            }
            Expr::IfEq(e, k, a, b) => {
                if e.eval(env) == *k {
                    a.eval(env)
                } else {
                    b.eval(env)
                }
            }
        }
    }
}

/// Named formulas in dependency order.
struct Formulas(Vec<(String, Expr)>);

impl Formulas {
    #[cfg(test)]
    fn eval(&self, env: &mut HashMap<String, i64>) {
        for (name, e) in &self.0 {
            let v = e.eval(env);
            env.insert(name.clone(), v);
        }
    }
}

fn product(var: &str, weight: u32, cfg: &NetworkConfig) -> Expr {
    Expr::Mod(Box::new(Expr::Mul(Box::new(Expr::var(var)), weight as i64)), 1i64 << cfg.widths.multiplier)
}

/// Wrapping partial sum of column `m` over the first `upto` inputs.
fn partial_sum(prefix: &str, w: &WeightMatrix, m: usize, upto: usize, cfg: &NetworkConfig) -> Expr {
    let acc = 1i64 << cfg.widths.accumulator;
    (0..upto).fold(Expr::Int(0), |sum, a| {
        let p = product(&format!("{prefix}{}", a + 1), w.get(a, m), cfg);
        match sum {
            Expr::Int(0) => Expr::Mod(Box::new(p), acc),
            s => Expr::Mod(Box::new(Expr::Add(vec![s, p])), acc),
        }
    })
}

fn activation(y: Expr, cfg: &NetworkConfig) -> Expr {
    let act = cfg.widths.activation;
    let acc = cfg.widths.accumulator;
    let levels = 1i64 << act;
    let q = match cfg.quantization {
        QuantizationStrategy::KeepHigh if acc > act => Expr::Mod(Box::new(Expr::Div(Box::new(y.clone()), 1i64 << (acc - act))), levels),
        QuantizationStrategy::KeepHigh | QuantizationStrategy::KeepLow => Expr::Mod(Box::new(y.clone()), levels),
        QuantizationStrategy::Saturate => Expr::Min(Box::new(y.clone()), levels - 1),
    };
    if cfg.signed {
        Expr::IfGe(Box::new(y), 1i64 << (acc - 1), Box::new(Expr::Int(0)), Box::new(q))
    } else {
        q
    }
}

/// Bit `bit` of `operand` as an expression.
fn bit_of(operand: Expr, bit: u8) -> Expr {
    Expr::Mod(Box::new(Expr::Div(Box::new(operand), 1i64 << bit)), 2)
}

/// Fault effect on the faulty column and the magnitude of its most
/// negative value.
fn effect(w: &WeightMatrix, f: &FaultDescriptor, cfg: &NetworkConfig) -> (Expr, i64) {
    let geo = f.geometry(cfg);
    let sm = 1i64 << f.stuck.bit;
    let c = f.col - 1;
    let n = geo.neurons as i64;
    let r_inv = geo.r_inv as i64;
    let masked_bit = match f.stuck.stuck {
        StuckValue::One => 1,
        StuckValue::Zero => 0,
    };
    match f.site {
        FaultSite::WeightRegister => {
            if !geo.in_effective_area() || f.stuck.is_masked(w.get(geo.input_index(), c)) {
                return (Expr::Int(0), 0);
            }
            let x = Expr::var(format!("xf{}", geo.input_index() + 1));
            let max_x = (1i64 << cfg.widths.activation) - 1;
            match f.stuck.stuck {
                StuckValue::One => (Expr::Mul(Box::new(x), sm), 0),
                StuckValue::Zero => (Expr::Mul(Box::new(x), -sm), sm * max_x),
            }
        }
        FaultSite::Accumulator | FaultSite::Multiplier => {
            if !geo.in_effective_area() {
                let e = if f.stuck.stuck == StuckValue::One && geo.in_upper_area() {
                    (2 * n - r_inv + 1) * sm
                } else {
                    0
                };
                return (Expr::Int(e), 0);
            }
            let a = geo.input_index();
            let operand = if f.site == FaultSite::Accumulator {
                partial_sum("xf", w, c, a + 1, cfg)
            } else {
                product(&format!("xf{}", a + 1), w.get(a, c), cfg)
            };
            let (masked, unmasked) = match f.stuck.stuck {
                StuckValue::One => ((2 * n - r_inv) * sm, (2 * n - r_inv + 1) * sm),
                StuckValue::Zero => (0, -sm),
            };
            let e = Expr::IfEq(
                Box::new(bit_of(operand, f.stuck.bit)),
                masked_bit,
                Box::new(Expr::Int(masked)),
                Box::new(Expr::Int(unmasked)),
            );
            (e, -unmasked.min(0))
        }
    }
}

/// `yr*`/`ar*` (reference) and `yf*`/`af*` (faulty) layer formulas over
/// the registers `xr*` and `xf*`.
fn layer_formulas(w: &WeightMatrix, fault: Option<&FaultDescriptor>, cfg: &NetworkConfig) -> Formulas {
    let n = cfg.neurons;
    let acc = 1i64 << cfg.widths.accumulator;
    let mut out = Vec::new();
    for m in 0..n {
        out.push((format!("yr{}", m + 1), partial_sum("xr", w, m, n, cfg)));
    }
    let faulty_col = fault.map(|f| f.col - 1).filter(|&c| c < n);
    for m in 0..n {
        let raw = partial_sum("xf", w, m, n, cfg);
        let y = match (faulty_col, fault) {
            (Some(c), Some(f)) if c == m => match effect(w, f, cfg) {
                (Expr::Int(0), _) => raw,
                (e, most_negative) => {
                    let offset = (most_negative + acc - 1) / acc * acc;
                    let mut terms = vec![raw, e];
                    if offset != 0 {
                        terms.push(Expr::Int(offset));
                    }
                    Expr::Mod(Box::new(Expr::Add(terms)), acc)
                }
            },
            _ => raw,
        };
        out.push((format!("yf{}", m + 1), y));
    }
    for (bank, y) in [("ar", "yr"), ("af", "yf")] {
        for m in 1..=n {
            out.push((format!("{bank}{m}"), activation(Expr::var(format!("{y}{m}")), cfg)));
        }
    }
    Formulas(out)
}

fn check_guard(cfg: &NetworkConfig, w: &WeightMatrix, fault: Option<&FaultDescriptor>, dist: &InputDistribution) -> Result<()> {
    let stats = compose_model(cfg, w, fault, dist)?.statistics();
    if stats.states > EXPLICIT_STATE_LIMIT {
        return Err(Error::Guard {
            what: "model export",
            required: stats.states,
            limit: EXPLICIT_STATE_LIMIT,
        });
    }
    Ok(())
}

/// Model and property text for a configuration.
pub fn export_model(cfg: &NetworkConfig, w: &WeightMatrix, fault: Option<&FaultDescriptor>, dist: &InputDistribution) -> Result<ExportedModel> {
    check_guard(cfg, w, fault, dist)?;
    let n = cfg.neurons;
    let top = (1u64 << cfg.widths.activation) - 1;
    let layers = cfg.layers;
    let mut s = String::new();

    writeln!(s, "// TPU fault automaton").unwrap();
    writeln!(
        s,
        "// neurons={n} layers={layers} widths={}/{}/{}/{} quantization={} signed={}",
        cfg.widths.weight, cfg.widths.activation, cfg.widths.multiplier, cfg.widths.accumulator, cfg.quantization, cfg.signed
    )
    .unwrap();
    match fault {
        Some(f) => writeln!(s, "// fault: {f}").unwrap(),
        None => writeln!(s, "// fault: none").unwrap(),
    }
    writeln!(s, "// weights: {}", w.row_major().iter().map(u32::to_string).collect::<Vec<_>>().join(" ")).unwrap();
    writeln!(s, "\ndtmc\n").unwrap();

    for i in 1..=n {
        writeln!(s, "module is{i}").unwrap();
        writeln!(s, "  sel{i} : bool init false;").unwrap();
        writeln!(s, "  x{i} : [0..{top}] init 0;").unwrap();
        let branches: Vec<String> = dist
            .neuron(i - 1)
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(z, p)| format!("{p} : (sel{i}'=true) & (x{i}'={z})"))
            .collect();
        writeln!(s, "  [select] !sel{i} -> {};", branches.join(" + ")).unwrap();
        writeln!(s, "endmodule\n").unwrap();
    }

    for (name, e) in &layer_formulas(w, fault, cfg).0 {
        writeln!(s, "formula {name} = {};", e.render()).unwrap();
    }
    let all_selected: Vec<String> = (1..=n).map(|i| format!("sel{i}")).collect();
    let equal: Vec<String> = (1..=n).map(|i| format!("xr{i}=xf{i}")).collect();
    writeln!(s, "formula selected = {};", all_selected.join(" & ")).unwrap();
    writeln!(s, "formula agree = {};\n", equal.join(" & ")).unwrap();

    let copy = |bank: &str, src: &str| -> String {
        (1..=n).map(|i| format!("({bank}{i}'={src}{i})")).collect::<Vec<_>>().join(" & ")
    };
    writeln!(s, "module tpu_fa").unwrap();
    writeln!(s, "  fa : [0..4] init 0;").unwrap();
    writeln!(s, "  l : [0..{layers}] init 0;").unwrap();
    for i in 1..=n {
        writeln!(s, "  xr{i} : [0..{top}] init 0;").unwrap();
        writeln!(s, "  xf{i} : [0..{top}] init 0;").unwrap();
    }
    writeln!(s, "  [init] fa=0 & selected -> (fa'=1) & {} & {};", copy("xr", "x"), copy("xf", "x")).unwrap();
    writeln!(s, "  [sa] fa=1 & l<{layers} -> (fa'=2);").unwrap();
    writeln!(s, "  [afq] fa=2 -> (fa'=1) & (l'=l+1) & {} & {};", copy("xr", "ar"), copy("xf", "af")).unwrap();
    writeln!(s, "  [no_error] fa=1 & l={layers} & agree -> (fa'=3);").unwrap();
    writeln!(s, "  [error] fa=1 & l={layers} & !agree -> (fa'=4);").unwrap();
    writeln!(s, "  [] fa>=3 -> true;").unwrap();
    writeln!(s, "endmodule\n").unwrap();
    writeln!(s, "label \"end\" = fa>=3;").unwrap();
    writeln!(s, "label \"error\" = fa=4;").unwrap();

    Ok(ExportedModel {
        model: s,
        property: format!("{ERROR_PROPERTY}\n"),
    })
}

/// Writes `<stem>.pm` and `<stem>.pctl` into `dir`.
pub fn write_model(model: &ExportedModel, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let pm = dir.join(format!("{stem}.pm"));
    let pctl = dir.join(format!("{stem}.pctl"));
    std::fs::write(&pm, &model.model).map_err(|e| Error::io(&pm, e))?;
    std::fs::write(&pctl, &model.property).map_err(|e| Error::io(&pctl, e))?;
    Ok((pm, pctl))
}
