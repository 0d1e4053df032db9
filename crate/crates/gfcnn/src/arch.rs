//! Compact architecture strings.
//!
//! A network is written as dash-separated layer terms, e.g.
//! `GL[10,15]-GL[10,15]` or `GC[5,32]-FC[100]`:
//!
//! * `GL[T,B]` — graph filter layer with node-varying taps of order `T`
//!   shared across `B` node groups,
//! * `GC[T,F]` — bank of node-invariant order-`T` filters producing `F`
//!   output features,
//! * `FC[k]` — fully connected layer of width `k`.
//!
//! Every listed layer is a hidden layer with a ReLU; the model builder
//! appends the linear readout. Parsing rejects both syntax errors and
//! compositions no model could realize (a graph filter after a dense layer,
//! or node-varying taps on a multi-feature signal), reporting the character
//! position of the offending term.

use crate::error::{Error, Result};
use crate::model::{LayerKind, LayerSpec};

fn arch_error(position: usize, message: impl Into<String>) -> Error {
    Error::Arch {
        position,
        message: message.into(),
    }
}

/// Parse one positive integer argument.
fn parse_arg(term_pos: usize, term: &str, name: &str, value: &str) -> Result<usize> {
    let v: usize = value.parse().map_err(|_| {
        arch_error(
            term_pos,
            format!("{term}: {name} must be a positive integer, got {value:?}"),
        )
    })?;
    if v == 0 {
        return Err(arch_error(term_pos, format!("{term}: {name} must be >= 1")));
    }
    Ok(v)
}

/// Parse an architecture string into hidden-layer specs.
///
/// Errors carry the 1-based character position of the term at fault.
pub fn parse_architecture(s: &str) -> Result<Vec<LayerSpec>> {
    if s.trim().is_empty() {
        return Err(arch_error(1, "empty architecture"));
    }
    let mut specs = Vec::new();
    // Composition state: signals start graph-shaped with one feature.
    let mut graph_shaped = true;
    let mut features = 1usize;
    let mut shared_groups: Option<usize> = None;
    let mut pos = 1; // 1-based character offset of the current term
    for term in s.split('-') {
        let term_pos = pos;
        pos += term.chars().count() + 1;
        let inner = term
            .strip_suffix(']')
            .ok_or_else(|| arch_error(term_pos, format!("{term:?}: expected `name[args]`")))?;
        let (name, args) = inner
            .split_once('[')
            .ok_or_else(|| arch_error(term_pos, format!("{term:?}: expected `name[args]`")))?;
        let args: Vec<&str> = args.split(',').collect();
        let kind = match (name, args.as_slice()) {
            ("GL", [order, groups]) => {
                let order = parse_arg(term_pos, term, "filter order", order)?;
                let groups = parse_arg(term_pos, term, "group count", groups)?;
                if !graph_shaped {
                    return Err(arch_error(
                        term_pos,
                        format!("{term}: graph filter cannot follow a fully connected layer"),
                    ));
                }
                if features != 1 {
                    return Err(arch_error(
                        term_pos,
                        format!(
                            "{term}: node-varying taps need a single-feature signal, \
                             previous layer produces {features} features"
                        ),
                    ));
                }
                if let Some(b) = shared_groups {
                    if b != groups {
                        return Err(arch_error(
                            term_pos,
                            format!(
                                "{term}: group count {groups} conflicts with {b} declared earlier"
                            ),
                        ));
                    }
                }
                shared_groups = Some(groups);
                LayerKind::HybridGf {
                    order,
                    num_groups: groups,
                }
            }
            ("GC", [order, feats]) => {
                let order = parse_arg(term_pos, term, "filter order", order)?;
                let feats = parse_arg(term_pos, term, "feature count", feats)?;
                if !graph_shaped {
                    return Err(arch_error(
                        term_pos,
                        format!("{term}: graph filter cannot follow a fully connected layer"),
                    ));
                }
                features = feats;
                LayerKind::GfBank {
                    order,
                    features_out: feats,
                }
            }
            ("FC", [width]) => {
                let width = parse_arg(term_pos, term, "width", width)?;
                graph_shaped = false;
                LayerKind::FullyConnected { width }
            }
            ("GL" | "GC", _) => {
                return Err(arch_error(
                    term_pos,
                    format!("{term}: {name} takes exactly two arguments"),
                ));
            }
            ("FC", _) => {
                return Err(arch_error(
                    term_pos,
                    format!("{term}: FC takes exactly one argument"),
                ));
            }
            _ => {
                return Err(arch_error(
                    term_pos,
                    format!("{term:?}: unknown layer name {name:?}; expected GL, GC, or FC"),
                ));
            }
        };
        specs.push(LayerSpec::relu(kind));
    }
    Ok(specs)
}

/// Render layer specs back into the string grammar.
pub fn format_architecture(specs: &[LayerSpec]) -> String {
    specs
        .iter()
        .map(|spec| match spec.kind {
            LayerKind::HybridGf { order, num_groups } => format!("GL[{order},{num_groups}]"),
            LayerKind::GfBank {
                order,
                features_out,
            } => format!("GC[{order},{features_out}]"),
            LayerKind::FullyConnected { width } => format!("FC[{width}]"),
        })
        .collect::<Vec<_>>()
        .join("-")
}
